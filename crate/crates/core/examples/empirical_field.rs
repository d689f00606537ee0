//! The closed-form marginal field of a small dataset, its bounds, and a
//! finite-difference check that it transports its own density.

use kfm::experiments::bounds::{continuity_residual, continuity_threshold};
use kfm::{Dataset, EmpiricalField, KernelSpec, PathSchedule};

pub fn run_example() -> kfm::Result<()> {
    let data = Dataset::new(vec![vec![-0.5, 0.2], vec![0.4, -0.6], vec![0.8, 0.9]])?;
    let field = EmpiricalField::new(data, PathSchedule::linear(0.1)?, KernelSpec::gaussian(2)?)?;
    let x = [0.1, 0.0];
    for t in [0.25, 0.5, 0.75] {
        let v = field.velocity(t, &x)?;
        let b = field.field_bounds(2.0, t)?;
        let (res, p) = continuity_residual(&field, t, &x, 1e-4)?;
        println!(
            "t={t}: p={p:.4e} v=({:+.3}, {:+.3}) |v|<= {:.2} Lip<= {:.1} residual={res:.2e} (tol {:.1e})",
            v[0],
            v[1],
            b.sup_bound,
            b.lip_bound,
            continuity_threshold(p, b.lip_bound)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
