use kfm::{bandwidth_rule, Dataset, KdeModel, KernelSpec};

pub fn run_example() -> kfm::Result<()> {
    for n in [256, 4096] {
        println!(
            "n={n}: d=2 bandwidth {:.4}, d'=1 bandwidth {:.4}, with log correction {:.4}",
            bandwidth_rule(n, 1.0, 2, false)?,
            bandwidth_rule(n, 1.0, 1, false)?,
            bandwidth_rule(n, 1.0, 2, true)?
        );
    }
    let data = Dataset::new(vec![vec![0.0], vec![1.0]])?;
    let kde = KdeModel::new(data, 0.25, KernelSpec::gaussian(1)?)?;
    let draws = kde.sample(10_000, 9)?;
    let mean = draws.iter().map(|p| p[0]).sum::<f64>() / draws.len() as f64;
    println!("density at 0.5: {:.4}, sample mean {mean:.4}", kde.density(&[0.5])?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
