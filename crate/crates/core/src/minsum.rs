//! Binary check-node testbed.
//!
//! The reference output is the tanh rule
//! `L = 2 atanh(prod_i tanh(L_i / 2))`; the estimator in training only sees the
//! min-sum statistic `(min_i |L_i|, prod_i sign L_i)`. Simulated BPSK/AWGN
//! batches feed [`crate::train::PostTable`] to learn the post-processing
//! lookup table.

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::chain::ChainModel;
use crate::error::{Error, Result};
use crate::prob::{divergence, llr_to_dist, soft_mi, Distribution, Llr, DEFAULT_FLOOR};
use crate::rng::CounterRng;
use crate::train::{BinSpec, PostTable, TrainingSample};

pub const DEFAULT_DEGREE: usize = 3;
pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_MAX_MAGNITUDE: f64 = 25.0;

/// Incoming LLRs at one check node together with the noise levels that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckNodeInput {
    pub llrs: Vec<Llr>,
    pub sigmas: Vec<f64>,
}

/// Exact pairwise check-node combination in the log domain:
/// `a [+] b = sign(a) sign(b) min(|a|,|b|) + ln(1+e^-|a+b|) - ln(1+e^-|a-b|)`.
pub fn boxplus(a: Llr, b: Llr) -> Llr {
    let (x, y) = (a.0, b.0);
    match (x.is_infinite(), y.is_infinite()) {
        (true, true) => Llr(if (x > 0.0) == (y > 0.0) { f64::INFINITY } else { f64::NEG_INFINITY }),
        (true, false) => Llr(if x > 0.0 { y } else { -y }),
        (false, true) => Llr(if y > 0.0 { x } else { -x }),
        (false, false) => {
            let s = if (x < 0.0) != (y < 0.0) { -1.0 } else { 1.0 };
            let m = x.abs().min(y.abs());
            Llr(s * m + (-(x + y).abs()).exp().ln_1p() - (-(x - y).abs()).exp().ln_1p())
        }
    }
}

/// Role-model combination of all incoming LLRs.
pub fn tanh_rule(llrs: &[Llr]) -> Llr {
    let mut it = llrs.iter().copied();
    let first = it.next().unwrap_or(Llr::PLUS_INF);
    it.fold(first, boxplus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSumStatistic {
    pub magnitude: f64,
    pub sign: i8,
}

impl MinSumStatistic {
    /// The statistic read as if it were the exact output LLR.
    pub fn as_llr(self) -> Llr {
        Llr(self.sign as f64 * self.magnitude)
    }
}

pub fn min_sum(llrs: &[Llr]) -> MinSumStatistic {
    let magnitude = llrs.iter().map(|l| l.magnitude()).fold(f64::INFINITY, f64::min);
    let sign = llrs.iter().map(|l| l.sign()).product();
    MinSumStatistic { magnitude, sign }
}

/// Uniform magnitude bins, one bank per sign branch. Bin index is
/// `branch * num_bins + magnitude_bin` with branch 0 for `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZQuantizer {
    pub num_bins: usize,
    pub max_magnitude: f64,
}

impl Default for ZQuantizer {
    fn default() -> Self {
        Self {
            num_bins: DEFAULT_BINS,
            max_magnitude: DEFAULT_MAX_MAGNITUDE,
        }
    }
}

impl ZQuantizer {
    pub fn new(num_bins: usize, max_magnitude: f64) -> Result<Self> {
        if num_bins == 0 || max_magnitude.is_nan() || max_magnitude <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quantizer needs bins > 0 and max > 0, got {num_bins}, {max_magnitude}"
            )));
        }
        Ok(Self {
            num_bins,
            max_magnitude,
        })
    }

    pub fn total_bins(&self) -> usize {
        2 * self.num_bins
    }

    fn width(&self) -> f64 {
        self.max_magnitude / self.num_bins as f64
    }

    pub fn bin(&self, z: MinSumStatistic) -> usize {
        let m = (z.magnitude / self.width()).floor();
        let m = if m.is_finite() && m >= 0.0 {
            (m as usize).min(self.num_bins - 1)
        } else {
            self.num_bins - 1
        };
        let branch = if z.sign < 0 { 1 } else { 0 };
        branch * self.num_bins + m
    }

    /// `(sign, lower magnitude, upper magnitude)` covered by a bin; the top
    /// bin is open above.
    pub fn bin_range(&self, bin: usize) -> (i8, f64, f64) {
        let sign = if bin >= self.num_bins { -1 } else { 1 };
        let m = bin % self.num_bins;
        let lo = m as f64 * self.width();
        let hi = if m + 1 == self.num_bins {
            f64::INFINITY
        } else {
            (m + 1) as f64 * self.width()
        };
        (sign, lo, hi)
    }

    pub fn bin_spec(&self, sigmas: &[f64]) -> BinSpec {
        BinSpec::MinSum {
            num_bins: self.num_bins,
            max_magnitude: self.max_magnitude,
            degree: sigmas.len(),
            sigmas: sigmas.to_vec(),
        }
    }

    pub fn from_bin_spec(spec: &BinSpec) -> Result<(Self, Vec<f64>)> {
        match spec {
            BinSpec::MinSum {
                num_bins,
                max_magnitude,
                sigmas,
                ..
            } => Ok((Self::new(*num_bins, *max_magnitude)?, sigmas.clone())),
            other => Err(Error::Parse(format!("not a min-sum table: {other:?}"))),
        }
    }
}

/// One simulated check-node use.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSumSample {
    pub truth: usize,
    pub sample: TrainingSample,
    pub statistic: MinSumStatistic,
}

fn check_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.len() < 2 {
        return Err(Error::InvalidParameter("check node needs at least 2 inputs".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !s.is_finite() || **s <= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}")));
    }
    Ok(())
}

/// Draw one check-node input: an independent uniform bit per branch sent as
/// BPSK (`0 -> +1`) over AWGN, channel LLR `2y / sigma^2`. The returned truth
/// is the parity of the branch bits, the bit the check node estimates.
pub fn draw_input(sigmas: &[f64], rng: &mut CounterRng) -> (usize, CheckNodeInput) {
    let mut parity = 0;
    let llrs = sigmas
        .iter()
        .map(|&sig| {
            let bit = rng.below(2);
            parity ^= bit;
            let s = if bit == 0 { 1.0 } else { -1.0 };
            let y = s + sig * rng.normal();
            Llr(2.0 * y / (sig * sig))
        })
        .collect();
    (
        parity,
        CheckNodeInput {
            llrs,
            sigmas: sigmas.to_vec(),
        },
    )
}

/// `n` independent trials; trial `k` draws from stream `k` of `seed`, so the
/// batch is identical however it is parallelized.
pub fn simulate_batch(
    sigmas: &[f64],
    n: usize,
    seed: u64,
    quantizer: &ZQuantizer,
) -> Result<Vec<MinSumSample>> {
    check_sigmas(sigmas)?;
    if n == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    let root = CounterRng::new(seed);
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = root.split(k);
            let (truth, input) = draw_input(sigmas, &mut rng);
            let statistic = min_sum(&input.llrs);
            let posterior = llr_to_dist(tanh_rule(&input.llrs));
            MinSumSample {
                truth,
                sample: TrainingSample {
                    posterior,
                    bin: quantizer.bin(statistic),
                    k: Some(k),
                },
                statistic,
            }
        })
        .collect())
}

pub fn train_table(batch: &[MinSumSample], quantizer: &ZQuantizer, sigmas: &[f64]) -> Result<PostTable> {
    let mut table = PostTable::new(2, quantizer.bin_spec(sigmas));
    table.ingest_all(batch.iter().map(|s| &s.sample))?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinSumReport {
    pub samples: usize,
    /// Empirical divergence of the trained table from the tanh rule, bits.
    pub empirical_ed: f64,
    pub empirical_ed_stderr: f64,
    pub soft_mi: f64,
    /// Same quantities for the raw min-sum LLR taken at face value.
    pub baseline_ed: f64,
    pub baseline_soft_mi: f64,
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Compare a finalized table and the naive min-sum output against the tanh
/// rule on `batch`. Table and baseline outputs are floored at
/// [`DEFAULT_FLOOR`] before taking logs.
pub fn evaluate_table(table: &[Distribution], batch: &[MinSumSample]) -> Result<MinSumReport> {
    if batch.is_empty() {
        return Err(Error::Empty);
    }
    let floored: Vec<Distribution> = table.iter().map(|d| d.floored(DEFAULT_FLOOR)).collect();
    let mut ed = Vec::with_capacity(batch.len());
    let mut base_ed = Vec::with_capacity(batch.len());
    let mut base_out = Vec::with_capacity(batch.len());
    for s in batch {
        let q = floored.get(s.sample.bin).ok_or(Error::BinOutOfRange {
            bin: s.sample.bin,
            bins: floored.len(),
        })?;
        ed.push(divergence(&s.sample.posterior, q)?);
        let naive = llr_to_dist(s.statistic.as_llr()).floored(DEFAULT_FLOOR);
        base_ed.push(divergence(&s.sample.posterior, &naive)?);
        base_out.push(naive);
    }
    let (empirical_ed, empirical_ed_stderr) = mean_and_stderr(&ed);
    let mi = soft_mi(batch.iter().map(|s| (s.truth, &floored[s.sample.bin])))?;
    let base_mi = soft_mi(batch.iter().zip(&base_out).map(|(s, d)| (s.truth, d)))?;
    Ok(MinSumReport {
        samples: batch.len(),
        empirical_ed,
        empirical_ed_stderr,
        soft_mi: mi,
        baseline_ed: mean_and_stderr(&base_ed).0,
        baseline_soft_mi: base_mi,
    })
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Channel-output thresholds (in received-amplitude units) of the 8-level
/// per-branch quantizer used by [`SurrogateChain`].
pub const SURROGATE_THRESHOLDS: [f64; 7] = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];

/// Finite surrogate of the check-node scenario that the chain oracle can
/// enumerate: `X` is the parity of independent branch bits, each branch output
/// is quantized to 8 levels, `Y` is the tuple of levels and `Z` is the
/// quantized min-sum statistic of the level LLRs.
#[derive(Debug, Clone)]
pub struct SurrogateChain {
    pub model: ChainModel,
    pub sigmas: Vec<f64>,
    pub quantizer: ZQuantizer,
    /// `level_probs[i][x][l] = P(level l on branch i | X = x)`.
    level_probs: Vec<[Distribution; 2]>,
    /// `level_llrs[i][l] = ln(P(l|0) / P(l|1))`.
    level_llrs: Vec<Vec<Llr>>,
}

impl SurrogateChain {
    pub fn levels() -> usize {
        SURROGATE_THRESHOLDS.len() + 1
    }

    pub fn new(sigmas: &[f64], quantizer: ZQuantizer) -> Result<Self> {
        check_sigmas(sigmas)?;
        let levels = Self::levels();
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend_from_slice(&SURROGATE_THRESHOLDS);
        edges.push(f64::INFINITY);

        let mut level_probs = Vec::new();
        let mut level_llrs = Vec::new();
        for &sig in sigmas {
            let row = |mean: f64| -> Result<Distribution> {
                let w = (0..levels)
                    .map(|l| std_normal_cdf((edges[l + 1] - mean) / sig) - std_normal_cdf((edges[l] - mean) / sig))
                    .map(|p| p.max(0.0))
                    .collect();
                Distribution::from_weights(w)
            };
            let p0 = row(1.0)?;
            let p1 = row(-1.0)?;
            let llrs: Vec<Llr> = (0..levels)
                .map(|l| match (p0.get(l) > 0.0, p1.get(l) > 0.0) {
                    (true, true) => Llr(p0.get(l).ln() - p1.get(l).ln()),
                    (true, false) => Llr::PLUS_INF,
                    (false, true) => Llr::MINUS_INF,
                    (false, false) => Llr(0.0),
                })
                .collect();
            level_probs.push([p0, p1]);
            level_llrs.push(llrs);
        }

        let d = sigmas.len();
        let ny = levels.pow(d as u32);
        // P(y | parity x) = sum over bit patterns with that parity
        let mut w = [vec![0.0; ny], vec![0.0; ny]];
        for bits in 0..(1usize << d) {
            let parity = (bits.count_ones() & 1) as usize;
            for (y, slot) in w[parity].iter_mut().enumerate() {
                *slot += Self::decode(y, d)
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| level_probs[i][(bits >> i) & 1].get(l))
                    .product::<f64>();
            }
        }
        let [w0, w1] = w;
        let ch1 = vec![Distribution::from_weights(w0)?, Distribution::from_weights(w1)?];
        let ch2 = (0..ny)
            .map(|y| {
                let llrs: Vec<Llr> = Self::decode(y, d)
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| level_llrs[i][l])
                    .collect();
                Distribution::one_hot(quantizer.total_bins(), quantizer.bin(min_sum(&llrs)))
            })
            .collect();
        let model = ChainModel::new(Distribution::uniform(2), ch1, ch2)?;
        Ok(Self {
            model,
            sigmas: sigmas.to_vec(),
            quantizer,
            level_probs,
            level_llrs,
        })
    }

    fn decode(mut y: usize, d: usize) -> Vec<usize> {
        let levels = Self::levels();
        let mut out = vec![0; d];
        for slot in out.iter_mut() {
            *slot = y % levels;
            y /= levels;
        }
        out
    }

    /// LLRs seen at the check node for observation tuple `y`.
    pub fn llrs_of(&self, y: usize) -> Vec<Llr> {
        Self::decode(y, self.sigmas.len())
            .iter()
            .enumerate()
            .map(|(i, &l)| self.level_llrs[i][l])
            .collect()
    }

    /// Simulate `n` uses through the quantized channel; posteriors come from
    /// the tanh rule on the level LLRs.
    pub fn simulate(&self, n: usize, seed: u64) -> Vec<MinSumSample> {
        let root = CounterRng::new(seed);
        (0..n as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = root.split(k);
                let mut truth = 0;
                let llrs: Vec<Llr> = self
                    .level_probs
                    .iter()
                    .zip(&self.level_llrs)
                    .map(|(p, l)| {
                        let bit = rng.below(2);
                        truth ^= bit;
                        l[p[bit].sample(&mut rng)]
                    })
                    .collect();
                let statistic = min_sum(&llrs);
                MinSumSample {
                    truth,
                    sample: TrainingSample {
                        posterior: llr_to_dist(tanh_rule(&llrs)),
                        bin: self.quantizer.bin(statistic),
                        k: Some(k),
                    },
                    statistic,
                }
            })
            .collect()
    }
}
