// Monte Carlo integration: averaging the reference posteriors that land in
// each bin recovers the optimal degraded-observation posterior.

use rolemodel::chain::ChainModel;
use rolemodel::train::{empirical_ed, BinSpec, PostTable, TrainingSample};
use rolemodel::CounterRng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = CounterRng::new(3);
    let model = ChainModel::random(&mut rng, 3, 5, 4)?;
    let (_, _, nz) = model.dims();

    let mut samples = Vec::new();
    for _ in 0..50_000 {
        let x = model.px().sample(&mut rng);
        let y = model.channel1()[x].sample(&mut rng);
        let z = model.channel2()[y].sample(&mut rng);
        samples.push(TrainingSample::new(model.posterior_xy(y)?, z));
    }
    let mut table = PostTable::new(3, BinSpec::Identity { num_bins: nz });
    table.ingest_all(&samples)?;
    let q = table.finalize();

    for (z, qz) in q.iter().enumerate() {
        let exact = model.posterior_xz(z)?;
        println!("z={z}: learned {:?}, exact TV distance {:.4}", qz.probs(), qz.total_variation(&exact));
    }
    println!(
        "expected divergence {:.5} bits, floor {:.5}, sample average {:.5}",
        model.expected_divergence(&q)?,
        model.divergence_floor(),
        empirical_ed(&samples, &q)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("posterior table");
}
