// Exact permanent kernels and the head/tail split used by the approximate
// SUDOKU constraint node.

use rolemodel::permanent::{
    approx_permanent_minor, head_tail_split, permanent_bruteforce, permanent_ryser,
    permanent_uniform_rows, SquareMatrix,
};
use rolemodel::CounterRng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ones = SquareMatrix::filled(8, 1.0);
    println!("perm(all-ones 8x8) = {}", permanent_ryser(&ones)?);

    let mut rng = CounterRng::new(5);
    let m = SquareMatrix::new(6, (0..36).map(|_| rng.uniform()).collect())?;
    println!("6x6: brute force {:.10}, Ryser {:.10}", permanent_bruteforce(&m)?, permanent_ryser(&m)?);
    println!("uniform rows (0.5, 0.25, 1): {}", permanent_uniform_rows(&[0.5, 0.25, 1.0]));

    let rows: Vec<Vec<f64>> = (0..9).map(|_| rng.flat_dirichlet(9)).collect();
    let msg = SquareMatrix::from_rows(&rows)?;
    let split = head_tail_split(&msg, 3)?;
    let exact = permanent_ryser(&msg.minor(0, 0))?;
    println!(
        "9x9 message matrix, minor (0,0): exact {exact:.3e}, head {:.3e}, tail {:.3e}, head+tail {:.3e}",
        split.head_minor(0, 0),
        split.tail_minor(0),
        2.0 * approx_permanent_minor(&split, 0, 0, 0.5)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("permanents");
}
