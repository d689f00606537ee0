//! Exact and approximate transport distances, total variation and slope fits.

use kfm::metrics::{slope_fit, tv_1d, w1_1d, w1_assignment, w1_sliced, Density1D};

pub fn run_example() -> kfm::Result<()> {
    println!("1D sorted coupling: {}", w1_1d(&[0.0, 1.0, 3.0], &[0.5, 1.5, 2.0])?);

    let a = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
    let b = vec![vec![1.0, 1.0], vec![0.1, 0.0], vec![0.0, 0.9]];
    let exact = w1_assignment(&a, &b)?;
    println!("assignment W1 {:.4} with plan {:?}", exact.cost, exact.plan);
    println!("sliced W1 (diagnostic) {:.4}", w1_sliced(&a, &b, 200, 1)?);

    let gauss = |mu: f64| move |x: f64| (-(x - mu).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let p = Density1D::tabulate(gauss(0.0), -10.0, 13.0, 20_001)?;
    let q = Density1D::tabulate(gauss(3.0), -10.0, 13.0, 20_001)?;
    println!("TV(N(0,1), N(3,1)) = {:.6}", tv_1d(&p, &q)?);

    let xs: Vec<f64> = [128.0f64, 256.0, 512.0, 1024.0].iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 0.5 * x).collect();
    println!("slope {:.3}", slope_fit(&xs, &ys)?.slope);
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
