//! Conditional flow matching with a small SeLU network on the sine curve,
//! then sampling through the learned field and a checkpoint round trip.

use kfm::experiments::manifold_run::generate;
use kfm::manifold::SamplingMode;
use kfm::mlp::{checkpoint, train_cfm, windowed_medians};
use kfm::{Dataset, KernelSpec, NetConfig, OdeConfig, PathSchedule, SineChart, TrainConfig};

pub fn run_example() -> kfm::Result<()> {
    let chart = SineChart::new(0.25)?;
    let data = Dataset::new(chart.sample(64, 1, SamplingMode::ArcUniform)?)?;
    let train = TrainConfig { steps: 600, seed: 7, checkpoints: vec![300], ..TrainConfig::default() };
    let outcome = train_cfm(&data, &PathSchedule::linear(0.1)?, &KernelSpec::gaussian(2)?, &NetConfig::uniform(16, 2), &train)?;
    let medians = windowed_medians(&outcome.loss_trace, 2);
    println!("loss window medians: {medians:.3?}");

    let samples = generate(&outcome.net, 128, 3, &OdeConfig::default())?;
    println!("mean distance to curve: {:.3}", chart.mean_distance(&samples)?);

    let path = std::env::temp_dir().join(format!("kfm_example_{}.json", std::process::id()));
    checkpoint::save(&outcome.net, &path)?;
    let back = checkpoint::load(&path)?;
    std::fs::remove_file(&path)?;
    assert_eq!(back, outcome.net);
    println!("checkpoint round trip ok ({} parameters)", back.num_params());
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
