// EXIT curves of the exact and head/tail constraint nodes, printed as CSV.
// `EXIT_N` (4 or 9) and `EXIT_TRIALS` override the defaults.

use rolemodel::sudoku::{exit_curve, ConstraintNode, ExitConfig, ExitNode};

fn env_or(name: &str, default: usize) -> usize {
    std::env::var(name).ok().and_then(|s| s.parse().ok()).unwrap_or(default)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = env_or("EXIT_N", 4);
    let config = ExitConfig { n, trials: env_or("EXIT_TRIALS", 50), seed: 42 };
    let cap = (n as f64).log2();
    let grid: Vec<f64> = (0..=8).map(|k| k as f64 * cap / 8.0).collect();
    let exact = exit_curve(&ExitNode::Constraint(ConstraintNode::Exact), &grid, config)?;
    let approx = exit_curve(&ExitNode::Constraint(ConstraintNode::Approx), &grid, config)?;
    println!("ia_bits,exact_ie,approx_ie,stderr");
    for (e, a) in exact.iter().zip(&approx) {
        println!("{:.3},{:.4},{:.4},{:.4}", e.ia_target, e.ie, a.ie, e.stderr.max(a.stderr));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("exit chart");
}
