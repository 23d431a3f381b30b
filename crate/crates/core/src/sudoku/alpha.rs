//! Training the per-row weights of the corrected constraint node against
//! the exact node.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bp::{bp_solve_with, BpConfig};
use super::node::{constraint_exact, ApproxParts, ConstraintNode, MessageMatrix};
use super::{ChannelModel, Puzzle};
use crate::error::{Error, Result};
use crate::prob::{divergence, Distribution, DEFAULT_FLOOR};
use crate::rng::CounterRng;
use crate::train::{train_parametric, ParametricCorrector, ParametricFit};

pub const ALPHA_FORMAT_VERSION: u32 = 1;
/// BP iterations whose constraint inputs are harvested.
pub const HARVEST_ITERATIONS: usize = 5;
const PER_RUN: usize = 16;
pub const DEFAULT_SNR_MIX: [f64; 4] = [0.0, 2.0, 4.0, 6.0];
pub const DEFAULT_BUDGET: usize = 5000;

/// On-disk form of a trained corrector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTable {
    pub version: u32,
    pub n: usize,
    pub alphas: Vec<f64>,
}

impl AlphaTable {
    pub fn new(n: usize, corrector: &ParametricCorrector) -> Self {
        Self {
            version: ALPHA_FORMAT_VERSION,
            n,
            alphas: corrector.alphas.clone(),
        }
    }

    pub fn corrector(&self) -> ParametricCorrector {
        ParametricCorrector {
            alphas: self.alphas.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if t.version != ALPHA_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported alpha table version {}", t.version)));
        }
        if t.alphas.len() != t.n {
            return Err(Error::DimensionMismatch(t.alphas.len(), t.n));
        }
        if let Some(a) = t.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("alpha {a} outside [0, 1]")));
        }
        Ok(t)
    }
}

/// Constraint-node inputs seen by live BP runs (approximate node, iterations
/// `1..=HARVEST_ITERATIONS`), cycling through `snr_mix`.
pub fn harvest_batch(n: usize, snr_mix: &[f64], batch: usize, seed: u64) -> Result<Vec<MessageMatrix>> {
    if batch == 0 || snr_mix.is_empty() {
        return Err(Error::Empty);
    }
    let root = CounterRng::new(seed);
    let config = BpConfig {
        max_iters: HARVEST_ITERATIONS,
        ..BpConfig::default()
    };
    let mut out = Vec::with_capacity(batch);
    let max_runs = 100 * batch.div_ceil(PER_RUN) + 100;
    for run in 0..max_runs {
        if out.len() >= batch {
            break;
        }
        let rng = root.split(run as u64);
        let channel = ChannelModel::from_snr_db(snr_mix[run % snr_mix.len()])?;
        let puzzle = Puzzle::random(n, &mut rng.split(0))?;
        let obs = channel.observe_puzzle(&puzzle, &mut rng.split(1));
        let mut seen = Vec::new();
        bp_solve_with(&puzzle, &obs, &ConstraintNode::Approx, config, |_, _, m| {
            seen.push(m.clone())
        });
        rng.split(2).shuffle(&mut seen);
        out.extend(seen.into_iter().take(PER_RUN.min(batch - out.len())));
    }
    if out.len() < batch {
        return Err(Error::InvalidParameter(format!(
            "harvested only {} of {batch} matrices (BP converged before iterating)",
            out.len()
        )));
    }
    Ok(out)
}

/// A fixed set of matrices with their exact outputs and head/tail minors
/// precomputed, so the training objective costs no permanents.
#[derive(Debug, Clone)]
pub struct FrozenBatch {
    n: usize,
    items: Vec<(Vec<Distribution>, ApproxParts)>,
    /// Matrices dropped because the exact node had a zero row.
    pub skipped: usize,
}

impl FrozenBatch {
    pub fn new(matrices: &[MessageMatrix]) -> Result<Self> {
        let n = matrices.first().ok_or(Error::Empty)?.dim();
        let items: Vec<_> = matrices
            .par_iter()
            .filter_map(|m| {
                let exact = constraint_exact(m).ok()?;
                Some((exact.into_rows(), ApproxParts::new(m)))
            })
            .collect();
        if items.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self {
            n,
            skipped: matrices.len() - items.len(),
            items,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Mean per-row divergence (bits) from the exact node to the corrected
    /// node, whose rows are floored at [`DEFAULT_FLOOR`].
    pub fn objective(&self, alphas: &[f64]) -> f64 {
        let mut total = 0.0;
        for (exact, parts) in &self.items {
            for (i, p) in exact.iter().enumerate() {
                let q = Distribution::from_weights(parts.row_weights(i, alphas[i]))
                    .unwrap_or_else(|_| Distribution::uniform(self.n))
                    .floored(DEFAULT_FLOOR);
                total += divergence(p, &q).expect("floored rows are positive");
            }
        }
        total / (self.items.len() * self.n) as f64
    }
}

#[derive(Debug, Clone)]
pub struct AlphaFit {
    pub fit: ParametricFit,
    pub baseline_half: f64,
    pub baseline_one: f64,
    pub batch_size: usize,
}

impl AlphaFit {
    pub fn corrector(&self) -> &ParametricCorrector {
        &self.fit.corrector
    }

    pub fn objective(&self) -> f64 {
        self.fit.objective
    }
}

/// Fit the corrected node on `batch`. The search starts from the better of
/// the two fixed baselines so the result never loses to either.
pub fn fit_alpha(batch: &FrozenBatch, budget: usize) -> AlphaFit {
    let n = batch.dim();
    let half = ParametricCorrector::constant(n, 0.5);
    let one = ParametricCorrector::constant(n, 1.0);
    let baseline_half = batch.objective(&half.alphas);
    let baseline_one = batch.objective(&one.alphas);
    let start = if baseline_one < baseline_half { one } else { half };
    let fit = train_parametric(|a| batch.objective(a), start, budget);
    AlphaFit {
        fit,
        baseline_half,
        baseline_one,
        batch_size: batch.len(),
    }
}

/// Harvest a batch at `snr_mix` and fit the `n` per-row weights.
pub fn train_alpha(n: usize, snr_mix: &[f64], batch: usize, seed: u64) -> Result<AlphaFit> {
    let matrices = harvest_batch(n, snr_mix, batch, seed)?;
    Ok(fit_alpha(&FrozenBatch::new(&matrices)?, DEFAULT_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let t = AlphaTable::new(4, &ParametricCorrector { alphas: vec![0.1, 0.2, 0.3, 0.4] });
        let back = AlphaTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(AlphaTable::from_json(r#"{"version":1,"n":4,"alphas":[0.5]}"#).is_err());
        assert!(AlphaTable::from_json(r#"{"version":2,"n":1,"alphas":[0.5]}"#).is_err());
        assert!(AlphaTable::from_json(r#"{"version":1,"n":1,"alphas":[1.5]}"#).is_err());
    }

    #[test]
    fn harvest_is_deterministic() {
        let a = harvest_batch(4, &[-4.0, 0.0], 40, 3).unwrap();
        let b = harvest_batch(4, &[-4.0, 0.0], 40, 3).unwrap();
        assert_eq!(a.len(), 40);
        assert_eq!(a, b);
    }

    #[test]
    fn trained_beats_baselines() {
        for n in [4, 9] {
            let fit = train_alpha(n, &DEFAULT_SNR_MIX, 64, 8).unwrap();
            assert!(fit.objective() <= fit.baseline_half);
            assert!(fit.objective() <= fit.baseline_one);
            assert!(fit.corrector().alphas.iter().all(|a| (0.0..=1.0).contains(a)));
        }
    }

    #[test]
    fn uniform_batch_is_flat() {
        let batch = FrozenBatch::new(&vec![MessageMatrix::uniform(9); 5]).unwrap();
        let fit = fit_alpha(&batch, DEFAULT_BUDGET);
        assert!(fit.fit.flat);
        assert!(fit.objective().abs() < 1e-12);
        assert!(fit.corrector().alphas.iter().all(|a| (a - 0.5).abs() < 1e-3));
    }
}
