// The expected-divergence decomposition on random chains, and the same
// identity on a joint that is not a Markov chain.

use rolemodel::chain::{random_table, ChainModel, GeneralJoint};
use rolemodel::CounterRng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let root = CounterRng::new(7);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let mut rng = root.split(k);
        let model = ChainModel::random(&mut rng, 3, 4, 3)?;
        let q = random_table(&mut rng, 3, 3);
        worst = worst.max(model.decomposition_residual(&q)?.abs());
        if k == 0 {
            println!(
                "ED(P_X|Y || Q) = {:.6} = H(X|Z) - H(X|Y) + ED(P_X|Z || Q) = {:.6} + {:.6}",
                model.expected_divergence(&q)?,
                model.divergence_floor(),
                model.excess_divergence(&q)?
            );
        }
    }
    println!("max residual over 50 chains: {worst:.2e}");

    let mut rng = root.split(1000);
    let joint = GeneralJoint::random(&mut rng, 2, 3, 2)?;
    let q = random_table(&mut rng, 2, 2);
    println!(
        "non-Markov joint: left side {:.6}, ED(P_X|Y || Q) {:.6}, identity residual {:.2e}",
        joint.nonmarkov_lhs(&q)?,
        joint.expected_divergence_xy(&q)?,
        joint.nonmarkov_identity_residual(&q)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("theorem check");
}
