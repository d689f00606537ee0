//! A single conditional path: the kernel at t = 0 slides and shrinks onto
//! a σ_min-wide bump around the anchor at t = 1.

use kfm::{ConditionalPath, KernelSpec, PathSchedule};

pub fn run_example() -> kfm::Result<()> {
    let path = ConditionalPath::new(PathSchedule::linear(0.1)?, KernelSpec::gaussian(1)?, vec![1.0])?;
    for t in [0.0, 0.5, 1.0] {
        let x = path.flow(t, &[0.3])?;
        println!(
            "t={t:.1}  psi_t(0.3)={:+.4}  v_t={:+.4}  p_t(1.0)={:.4}",
            x[0],
            path.velocity(t, &x)?[0],
            path.density(t, &[1.0])?
        );
    }
    // The power schedule keeps the same endpoints but bends the width curve.
    let bent = ConditionalPath::new(PathSchedule::power(0.1, 2.0)?, KernelSpec::gaussian(1)?, vec![1.0])?;
    println!("power schedule at t=0.5: psi(0.3)={:+.4}", bent.flow(0.5, &[0.3])?[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
