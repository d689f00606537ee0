use kfm::experiments::bounds::{check_bounds, continuity_residual, continuity_threshold, draw_from_path};
use kfm::rng::rng_from_seed;
use kfm::{Dataset, EmpiricalField, KdeModel, KernelSpec, PathSchedule};
use rand::Rng;

fn field(n: usize, d: usize, sigma: f64, seed: u64) -> EmpiricalField {
    let mut rng = rng_from_seed(seed);
    let data: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    EmpiricalField::new(Dataset::new(data).unwrap(), PathSchedule::linear(sigma).unwrap(), KernelSpec::gaussian(d).unwrap())
        .unwrap()
}

#[test]
fn continuity_equation_holds_in_one_and_two_dimensions() {
    for d in [1, 2] {
        let f = field(20, d, 0.1, d as u64);
        let mut rng = rng_from_seed(10 + d as u64);
        for _ in 0..300 {
            let t = rng.gen_range(0.05..=0.95);
            let x = draw_from_path(&f, t, &mut rng);
            let (res, p) = continuity_residual(&f, t, &x, 1e-4).unwrap();
            let tol = continuity_threshold(p, f.field_bounds(2.0, t).unwrap().lip_bound);
            assert!(res.abs() <= tol, "d={d} t={t} x={x:?}: {res} > {tol}");
        }
    }
}

#[test]
fn continuity_fails_for_a_wrong_field() {
    // Sanity check of the residual itself: doubling the velocity breaks the equation.
    let f = field(5, 1, 0.2, 3);
    let (t, x, h) = (0.5, [0.1], 1e-4);
    let p = |tt: f64, xx: f64| f.density(tt, &[xx]).unwrap();
    let flux = |xx: f64| 2.0 * p(t, xx) * f.velocity(t, &[xx]).unwrap()[0];
    let wrong = (p(t + h, x[0]) - p(t - h, x[0])) / (2.0 * h) + (flux(x[0] + h) - flux(x[0] - h)) / (2.0 * h);
    let (right, _) = continuity_residual(&f, t, &x, h).unwrap();
    assert!(wrong.abs() > 1e3 * right.abs().max(1e-9));
}

#[test]
fn sup_and_lipschitz_bounds_hold() {
    for d in [1, 2, 3] {
        for sigma in [0.05, 0.1, 0.5, 1.0] {
            let f = field(30, d, sigma, 100 + d as u64);
            let s = check_bounds(&f, 2.0, 1000, 1e-3, 7).unwrap();
            assert_eq!(s.sup_violations, 0, "d={d} sigma={sigma}");
            assert_eq!(s.lip_violations, 0, "d={d} sigma={sigma}");
            if sigma == 1.0 {
                assert!(s.max_lip_observed <= 1.0 + 2.0 * d as f64);
            }
        }
    }
}

#[test]
fn terminal_density_is_the_kde() {
    let f = field(25, 2, 0.15, 9);
    let kde = KdeModel::new(f.data().clone(), 0.15, *f.kernel()).unwrap();
    let mut rng = rng_from_seed(4);
    for _ in 0..100 {
        let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let (a, b) = (f.density(1.0, &x).unwrap(), kde.density(&x).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn kde_sample_mean_converges_to_mixture_mean() {
    let f = field(10, 2, 0.3, 12);
    let kde = KdeModel::new(f.data().clone(), 0.3, *f.kernel()).unwrap();
    let count = 50_000;
    let draws = kde.sample(count, 5).unwrap();
    let target = f.data().mean();
    for k in 0..2 {
        let vals: Vec<f64> = draws.iter().map(|p| p[k]).collect();
        let m = vals.iter().sum::<f64>() / count as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt();
        assert!((m - target[k]).abs() <= 5.0 * sd / (count as f64).sqrt());
    }
}
