//! EXIT curves of SUDOKU node operations.
//!
//! A-priori messages come from the orthogonal AWGN channel with `sigma`
//! chosen by bisection so that their soft MI hits the target. Constraint
//! curves do not depend on a channel SNR; variable-node curves do, since the
//! channel posterior enters every extrinsic message.

use rayon::prelude::*;
use serde::Serialize;

use super::node::{ConstraintNode, MessageMatrix};
use super::ChannelModel;
use crate::error::{Error, Result};
use crate::prob::{soft_mi_raw, Distribution, DEFAULT_FLOOR};
use crate::rng::CounterRng;

pub const MI_TOLERANCE: f64 = 0.005;
const CALIBRATION_DRAWS: usize = 4000;
const LOG_SIGMA_RANGE: (f64, f64) = (-7.0, 7.0);

#[derive(Debug, Clone, PartialEq)]
pub enum ExitNode {
    Constraint(ConstraintNode),
    /// Degree-3 variable node observed through a channel at this SNR.
    Variable { snr_db: f64 },
}

impl ExitNode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constraint(c) => c.name(),
            Self::Variable { .. } => "variable",
        }
    }

    pub fn snr_db(&self) -> Option<f64> {
        match self {
            Self::Variable { snr_db } => Some(*snr_db),
            Self::Constraint(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitPoint {
    pub ia_target: f64,
    /// Mean soft MI of the a-priori messages actually drawn.
    pub ia_measured: f64,
    pub ie: f64,
    pub stderr: f64,
    pub sigma: f64,
}

/// Soft MI of channel posteriors at `sigma` over a fixed calibration set.
fn calibration_mi(n: usize, sigma: f64, rng: &CounterRng) -> f64 {
    let ch = ChannelModel { sigma };
    let samples: Vec<(usize, Distribution)> = (0..CALIBRATION_DRAWS)
        .map(|k| {
            let mut r = rng.split(k as u64);
            let s = r.below(n);
            (s, ch.observe(s, n, &mut r).floored(DEFAULT_FLOOR))
        })
        .collect();
    soft_mi_raw(samples.iter().map(|(s, d)| (*s, d))).expect("non-empty calibration set")
}

/// Channel noise whose posteriors carry `target` bits of soft MI.
pub fn sigma_for_mi(n: usize, target: f64, seed: u64) -> Result<f64> {
    let rng = CounterRng::new(seed);
    let (mut lo, mut hi) = LOG_SIGMA_RANGE;
    let mi = |ls: f64| calibration_mi(n, ls.exp(), &rng);
    let (mut best, mut best_gap) = (lo, f64::INFINITY);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let v = mi(mid);
        if (v - target).abs() < best_gap {
            best_gap = (v - target).abs();
            best = mid;
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for end in [LOG_SIGMA_RANGE.0, LOG_SIGMA_RANGE.1] {
        let v = mi(end);
        if (v - target).abs() < best_gap {
            best_gap = (v - target).abs();
            best = end;
        }
    }
    if best_gap > MI_TOLERANCE {
        return Err(Error::BisectionFailure {
            target,
            reached: mi(best),
        });
    }
    Ok(best.exp())
}

/// One trial: truth is a random permutation of the symbols, every
/// a-priori message comes from the channel at `sigma`.
fn trial(node: &ExitNode, n: usize, sigma: f64, mut rng: CounterRng) -> (f64, f64) {
    let ch = ChannelModel { sigma };
    let mut truth: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut truth);
    let apriori: Vec<Distribution> = truth.iter().map(|&s| ch.observe(s, n, &mut rng)).collect();
    let floor = |d: &Distribution| d.floored(DEFAULT_FLOOR);
    let ia = soft_mi_raw(truth.iter().copied().zip(apriori.iter().map(floor).collect::<Vec<_>>().iter()))
        .expect("non-empty");
    let (labels, outgoing): (Vec<usize>, Vec<Distribution>) = match node {
        ExitNode::Constraint(c) => {
            let m = MessageMatrix::new(apriori).expect("n rows of n symbols");
            (truth, c.apply(&m).messages.into_rows())
        }
        ExitNode::Variable { snr_db } => {
            // Single variable with symbol truth[0]: channel observation
            // times two a-priori messages.
            let chan = ChannelModel::from_snr_db(*snr_db).expect("finite snr");
            let s = truth[0];
            let obs = chan.observe(s, n, &mut rng);
            let a = ch.observe(s, n, &mut rng);
            let w = (0..n).map(|j| obs.get(j) * a.get(j) * apriori[0].get(j)).collect();
            let out = Distribution::from_weights(w).unwrap_or_else(|_| Distribution::uniform(n));
            (vec![s], vec![out])
        }
    };
    let floored: Vec<Distribution> = outgoing.iter().map(floor).collect();
    let ie = soft_mi_raw(labels.into_iter().zip(floored.iter())).expect("non-empty");
    (ia, ie)
}

/// Extrinsic MI at each a-priori MI target. Trial `k` of grid point `g`
/// uses the same random stream for every node, so curves are paired.
pub fn exit_curve(node: &ExitNode, ia_grid: &[f64], config: ExitConfig) -> Result<Vec<ExitPoint>> {
    if ia_grid.is_empty() || config.trials == 0 {
        return Err(Error::Empty);
    }
    let cap = (config.n as f64).log2();
    let root = CounterRng::new(config.seed);
    ia_grid
        .iter()
        .enumerate()
        .map(|(g, &target)| {
            let sigma = sigma_for_mi(config.n, target, config.seed ^ 0x5eed)?;
            let point = root.split(g as u64);
            let results: Vec<(f64, f64)> = (0..config.trials)
                .into_par_iter()
                .map(|k| trial(node, config.n, sigma, point.split(k as u64)))
                .collect();
            let t = results.len() as f64;
            let ia = results.iter().map(|r| r.0).sum::<f64>() / t;
            let mean = results.iter().map(|r| r.1).sum::<f64>() / t;
            let var = if results.len() > 1 {
                results.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            Ok(ExitPoint {
                ia_target: target,
                ia_measured: ia,
                ie: mean.clamp(0.0, cap),
                stderr: (var / t).sqrt(),
                sigma,
            })
        })
        .collect()
}
