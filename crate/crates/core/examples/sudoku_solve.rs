// Soft SUDOKU by belief propagation with the exact and the head/tail
// constraint nodes.

use rolemodel::sudoku::{solve, BpConfig, ChannelModel, ConstraintNode};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = BpConfig::default();
    for snr_db in [2.0, 4.0, 6.0] {
        let channel = ChannelModel::from_snr_db(snr_db)?;
        for node in [ConstraintNode::Exact, ConstraintNode::Approx] {
            let (mut solved, mut errors) = (0, 0.0);
            let runs = 4;
            for seed in 0..runs {
                let (_, r) = solve(9, channel, &node, config, seed)?;
                solved += r.solved as usize;
                errors += r.symbol_error_rate();
            }
            println!(
                "{snr_db:>4} dB {:<6}: solved {solved}/{runs}, mean symbol error rate {:.3}",
                node.name(),
                errors / runs as f64
            );
        }
    }
    let (puzzle, r) = solve(4, ChannelModel::from_snr_db(3.0)?, &ConstraintNode::Exact, config, 0)?;
    println!("4x4 grid {puzzle}: solved={} after {} iterations", r.solved, r.iterations);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sudoku");
}
