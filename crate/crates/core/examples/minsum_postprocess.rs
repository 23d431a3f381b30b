// Post-processing the min-sum check-node output: learn one posterior per
// quantized min-sum bin from tanh-rule posteriors and compare on new data.

use rolemodel::minsum::{evaluate_table, simulate_batch, train_table, SurrogateChain, ZQuantizer};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sigmas = [0.8, 1.0, 1.2];
    let quantizer = ZQuantizer::default();
    let train = simulate_batch(&sigmas, 50_000, 1, &quantizer)?;
    let table = train_table(&train, &quantizer, &sigmas)?.finalize();
    let report = evaluate_table(&table, &simulate_batch(&sigmas, 50_000, 2, &quantizer)?)?;
    println!(
        "AWGN, held out: table ED {:.5} bits (min-sum {:.5}); soft MI {:.4} (min-sum {:.4})",
        report.empirical_ed, report.baseline_ed, report.soft_mi, report.baseline_soft_mi
    );

    // On the 8-level surrogate the optimum is known exactly.
    let chain = SurrogateChain::new(&[1.0; 3], quantizer)?;
    let batch = chain.simulate(100_000, 3);
    let mut t = rolemodel::train::PostTable::new(2, quantizer.bin_spec(&[1.0; 3]));
    t.ingest_all(batch.iter().map(|s| &s.sample))?;
    println!(
        "surrogate: trained ED {:.6}, enumerated floor {:.6}",
        chain.model.expected_divergence(&t.finalize())?,
        chain.model.divergence_floor()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("min-sum post-processing");
}
