// Fit the per-row weights of the corrected SUDOKU constraint node against
// the exact permanent node, then score them on a held-out batch.

use rolemodel::sudoku::alpha::{DEFAULT_BUDGET, DEFAULT_SNR_MIX};
use rolemodel::sudoku::{fit_alpha, harvest_batch, FrozenBatch};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 9;
    let train = FrozenBatch::new(&harvest_batch(n, &DEFAULT_SNR_MIX, 100, 1)?)?;
    let held_out = FrozenBatch::new(&harvest_batch(n, &DEFAULT_SNR_MIX, 100, 2)?)?;

    println!("constant alpha sweep (training batch):");
    for a in [0.0, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9, 1.0] {
        println!("  alpha={a:<8} ED={:.5} bits", train.objective(&vec![a; n]));
    }

    let fit = fit_alpha(&train, DEFAULT_BUDGET);
    println!("trained alphas: {:?}", fit.corrector().alphas);
    println!(
        "training ED {:.5} (alpha=0.5: {:.5}, alpha=1: {:.5})",
        fit.objective(),
        fit.baseline_half,
        fit.baseline_one
    );
    println!(
        "held-out ED {:.5} (alpha=0.5: {:.5})",
        held_out.objective(&fit.corrector().alphas),
        held_out.objective(&vec![0.5; n])
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("alpha training");
}
