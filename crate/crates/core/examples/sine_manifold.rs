use kfm::experiments::manifold_run::kde_on_curve;
use kfm::manifold::SamplingMode;
use kfm::SineChart;

pub fn run_example() -> kfm::Result<()> {
    let chart = SineChart::new(0.25)?;
    println!("length {:.4}, estimated reach {:.4}", chart.total_length(), chart.reach());

    let p = chart.project(&[0.0, 2.0]);
    println!("projection of (0, 2): param {:.6}, dist {:.6}, in tube {}", p.param, p.dist, p.in_tube);

    let truth = chart.sample(512, 1, SamplingMode::ArcUniform)?;
    for sigma in [0.5, 0.1, 0.01] {
        let kde = kde_on_curve(&chart, 200, sigma, 512, 2)?;
        let w = chart.arc_w1(&kde, &truth)?;
        println!(
            "sigma={sigma}: mean distance {:.4}, largest gap {:.4}, arc W1 {:.4} ({} outside tube)",
            chart.mean_distance(&kde)?,
            chart.largest_gap(&kde, false)?,
            w.w1,
            w.out_of_tube_a
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
