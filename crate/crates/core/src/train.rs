//! Estimator training by imitation of a reference ("role model") estimator.
//!
//! Non-parametric case: minimizing the time-averaged divergence
//! `(1/N) sum_k D(P_{X|Y_k} || Q_{X|Z_k})` separates per bin `z`, and the
//! Lagrange conditions give `Q(x|z) = (1/|{k: z_k = z}|) sum_{k: z_k = z} P(x|y_k)`.
//! [`PostTable`] accumulates exactly those sums.
//!
//! Parametric case: the table is replaced by a few correction weights and the
//! same empirical divergence is minimized numerically, see [`train_parametric`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::CondTable;
use crate::error::{Error, Result};
use crate::prob::{divergence, Distribution};

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// One `(P_{X|Y_k = y_k}, z_k)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub posterior: Distribution,
    pub bin: usize,
    pub k: Option<u64>,
}

impl TrainingSample {
    pub fn new(posterior: Distribution, bin: usize) -> Self {
        Self {
            posterior,
            bin,
            k: None,
        }
    }
}

/// How degraded observations were mapped to bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinSpec {
    /// `z` is already a symbol index.
    Identity { num_bins: usize },
    /// Min-sum statistic, uniform magnitude bins times two sign branches.
    MinSum {
        num_bins: usize,
        max_magnitude: f64,
        degree: usize,
        sigmas: Vec<f64>,
    },
}

impl BinSpec {
    pub fn total_bins(&self) -> usize {
        match self {
            BinSpec::Identity { num_bins } => *num_bins,
            BinSpec::MinSum { num_bins, .. } => 2 * num_bins,
        }
    }
}

/// What an unobserved bin reports after finalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Uniform,
    /// Average posterior over all ingested samples.
    EmpiricalPrior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAccumulator {
    pub sum: Vec<f64>,
    pub count: u64,
}

/// Mergeable per-bin sums of role-model posteriors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTable {
    pub version: u32,
    pub q: usize,
    pub bin_spec: BinSpec,
    pub fallback: Fallback,
    pub bins: Vec<BinAccumulator>,
}

impl PostTable {
    pub fn new(q: usize, bin_spec: BinSpec) -> Self {
        let bins = (0..bin_spec.total_bins())
            .map(|_| BinAccumulator {
                sum: vec![0.0; q],
                count: 0,
            })
            .collect();
        Self {
            version: TABLE_FORMAT_VERSION,
            q,
            bin_spec,
            fallback: Fallback::Uniform,
            bins,
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn total_count(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn ingest(&mut self, sample: &TrainingSample) -> Result<()> {
        let bins = self.bins.len();
        let acc = self.bins.get_mut(sample.bin).ok_or(Error::BinOutOfRange {
            bin: sample.bin,
            bins,
        })?;
        if sample.posterior.alphabet_size() != self.q {
            return Err(Error::DimensionMismatch(
                sample.posterior.alphabet_size(),
                self.q,
            ));
        }
        for (s, &p) in acc.sum.iter_mut().zip(sample.posterior.probs()) {
            *s += p;
        }
        acc.count += 1;
        Ok(())
    }

    pub fn ingest_all<'a, I>(&mut self, samples: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a TrainingSample>,
    {
        samples.into_iter().try_for_each(|s| self.ingest(s))
    }

    /// Add another accumulator's sums and counts into this one.
    pub fn merge(&mut self, other: &PostTable) -> Result<()> {
        if other.q != self.q || other.bins.len() != self.bins.len() {
            return Err(Error::DimensionMismatch(other.bins.len(), self.bins.len()));
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            for (s, t) in a.sum.iter_mut().zip(&b.sum) {
                *s += t;
            }
            a.count += b.count;
        }
        Ok(())
    }

    fn fallback_distribution(&self) -> Distribution {
        match self.fallback {
            Fallback::Uniform => Distribution::uniform(self.q),
            Fallback::EmpiricalPrior => {
                let mut total = vec![0.0; self.q];
                for b in &self.bins {
                    for (t, s) in total.iter_mut().zip(&b.sum) {
                        *t += s;
                    }
                }
                Distribution::from_weights(total).unwrap_or_else(|_| Distribution::uniform(self.q))
            }
        }
    }

    /// Per-bin average of the ingested posteriors; empty bins get the fallback.
    pub fn finalize(&self) -> CondTable {
        let fallback = self.fallback_distribution();
        self.bins
            .iter()
            .map(|b| {
                if b.count == 0 {
                    fallback.clone()
                } else {
                    let n = b.count as f64;
                    Distribution::from_weights(b.sum.iter().map(|s| s / n).collect())
                        .unwrap_or_else(|_| fallback.clone())
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: PostTable = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if t.version != TABLE_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported table version {}", t.version)));
        }
        if t.bins.len() != t.bin_spec.total_bins() || t.bins.iter().any(|b| b.sum.len() != t.q) {
            return Err(Error::Parse("table shape does not match bin_spec".into()));
        }
        Ok(t)
    }

    /// `bin_index,count,p_0,...,p_{q-1}` rows of the finalized table.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.q).map(|x| format!("p_{x}")).collect();
        writeln!(w, "bin_index,count,{}", header.join(","))?;
        for (i, (d, b)) in self.finalize().iter().zip(&self.bins).enumerate() {
            let row: Vec<String> = d.probs().iter().map(|p| format!("{p:.12e}")).collect();
            writeln!(w, "{i},{},{}", b.count, row.join(","))?;
        }
        Ok(())
    }
}

/// `(1/N) sum_k D(P_k || Q(.|z_k))` in bits.
pub fn empirical_ed(samples: &[TrainingSample], q: &[Distribution]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut acc = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let qz = q.get(s.bin).ok_or(Error::BinOutOfRange {
            bin: s.bin,
            bins: q.len(),
        })?;
        acc += divergence(&s.posterior, qz).map_err(|e| match e {
            Error::AbsoluteContinuityViolation { index, .. } => {
                Error::SampleAbsoluteContinuity { sample: k, index }
            }
            other => other,
        })?;
    }
    Ok(acc / samples.len() as f64)
}

/// Weights in `[0, 1]`, one per slot; slot meaning belongs to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricCorrector {
    pub alphas: Vec<f64>,
}

impl ParametricCorrector {
    pub fn constant(slots: usize, alpha: f64) -> Self {
        Self {
            alphas: vec![alpha.clamp(0.0, 1.0); slots],
        }
    }

    pub fn slots(&self) -> usize {
        self.alphas.len()
    }

    pub fn alpha(&self, slot: usize) -> f64 {
        self.alphas[slot]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFit {
    pub corrector: ParametricCorrector,
    pub objective: f64,
    pub evaluations: usize,
    pub cycles: usize,
    /// The evaluation budget ran out before the improvement criterion was met.
    pub budget_exhausted: bool,
    /// Objective never moved by more than 1e-12 anywhere it was probed.
    pub flat: bool,
}

/// Tolerance on the bracket width of each golden-section line search.
pub const LINE_TOLERANCE: f64 = 1e-4;
/// A full cycle must improve the objective by at least this much to continue.
pub const CYCLE_IMPROVEMENT: f64 = 1e-6;

struct Tracker<'a, F> {
    objective: &'a mut F,
    budget: usize,
    evaluations: usize,
    best: f64,
    best_alpha: Vec<f64>,
    lowest: f64,
    highest: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<'_, F> {
    fn eval(&mut self, alpha: &[f64]) -> Option<f64> {
        if self.evaluations >= self.budget {
            return None;
        }
        self.evaluations += 1;
        let v = (self.objective)(alpha);
        self.lowest = self.lowest.min(v);
        self.highest = self.highest.max(v);
        if v < self.best {
            self.best = v;
            self.best_alpha.copy_from_slice(alpha);
        }
        Some(v)
    }
}

/// Minimize `objective` over `[0, 1]^slots` by cyclic coordinate descent.
///
/// Each coordinate is line-searched by golden section on `[0, 1]` (endpoints
/// included) down to [`LINE_TOLERANCE`]; cycles repeat until one improves by
/// less than [`CYCLE_IMPROVEMENT`] or `budget` evaluations are spent. The
/// returned point is the best one evaluated anywhere on the search trace.
pub fn train_parametric<F>(
    mut objective: F,
    start: ParametricCorrector,
    budget: usize,
) -> ParametricFit
where
    F: FnMut(&[f64]) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let slots = start.slots();
    let mut alpha: Vec<f64> = start.alphas.iter().map(|a| a.clamp(0.0, 1.0)).collect();
    let mut t = Tracker {
        objective: &mut objective,
        budget,
        evaluations: 0,
        best: f64::INFINITY,
        best_alpha: alpha.clone(),
        lowest: f64::INFINITY,
        highest: f64::NEG_INFINITY,
    };

    let start_alpha = alpha.clone();
    let mut start_value = None;
    let mut cycles = 0;
    let mut exhausted = false;
    'outer: {
        let Some(mut current) = t.eval(&alpha) else {
            exhausted = true;
            break 'outer;
        };
        start_value = Some(current);
        loop {
            cycles += 1;
            let cycle_start = current;
            for i in 0..slots {
                let mut probe = alpha.clone();
                let mut at = |x: f64, t: &mut Tracker<'_, F>| {
                    probe[i] = x;
                    t.eval(&probe)
                };
                let (mut a, mut b) = (0.0, 1.0);
                let mut best_x = alpha[i];
                let mut best_v = current;
                for x in [0.0, 1.0] {
                    let Some(v) = at(x, &mut t) else {
                        exhausted = true;
                        break 'outer;
                    };
                    if v < best_v {
                        best_x = x;
                        best_v = v;
                    }
                }
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                let (Some(mut fc), Some(mut fd)) = (at(c, &mut t), at(d, &mut t)) else {
                    exhausted = true;
                    break 'outer;
                };
                while b - a > LINE_TOLERANCE {
                    if fc < fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - INV_PHI * (b - a);
                        let Some(v) = at(c, &mut t) else {
                            exhausted = true;
                            break 'outer;
                        };
                        fc = v;
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + INV_PHI * (b - a);
                        let Some(v) = at(d, &mut t) else {
                            exhausted = true;
                            break 'outer;
                        };
                        fd = v;
                    }
                    for (x, v) in [(c, fc), (d, fd)] {
                        if v < best_v {
                            best_x = x;
                            best_v = v;
                        }
                    }
                }
                if best_v < current {
                    alpha[i] = best_x;
                    current = best_v;
                }
            }
            if cycle_start - current < CYCLE_IMPROVEMENT {
                break;
            }
        }
    }

    // A flat objective carries no signal: report the starting point rather
    // than whichever probe won by rounding noise.
    let flat = t.highest - t.lowest <= 1e-12;
    let (alphas, value) = match (flat, start_value) {
        (true, Some(v)) => (start_alpha, v),
        _ => (t.best_alpha.clone(), t.best),
    };
    ParametricFit {
        corrector: ParametricCorrector { alphas },
        objective: value,
        evaluations: t.evaluations,
        cycles,
        budget_exhausted: exhausted,
        flat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainModel;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn identity_table(q: usize, bins: usize) -> PostTable {
        PostTable::new(q, BinSpec::Identity { num_bins: bins })
    }

    #[test]
    fn two_samples_average() {
        let mut t = identity_table(2, 1);
        t.ingest(&TrainingSample::new(d(&[0.9, 0.1]), 0)).unwrap();
        t.ingest(&TrainingSample::new(d(&[0.5, 0.5]), 0)).unwrap();
        let q = t.finalize();
        assert!((q[0].get(0) - 0.7).abs() < 1e-15 && (q[0].get(1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_sample_and_identical_samples() {
        let p = d(&[0.2, 0.3, 0.5]);
        let mut t = identity_table(3, 2);
        t.ingest(&TrainingSample::new(p.clone(), 1)).unwrap();
        assert_eq!(t.finalize()[1], p);
        for _ in 0..5 {
            t.ingest(&TrainingSample::new(p.clone(), 1)).unwrap();
        }
        assert!(t.finalize()[1].total_variation(&p) < 1e-15);
    }

    #[test]
    fn empty_bins_fall_back() {
        let t = identity_table(4, 3);
        assert!(t.finalize().iter().all(|d| *d == Distribution::uniform(4)));

        let mut t = identity_table(2, 2).with_fallback(Fallback::EmpiricalPrior);
        t.ingest(&TrainingSample::new(d(&[0.8, 0.2]), 0)).unwrap();
        assert!(t.finalize()[1].total_variation(&d(&[0.8, 0.2])) < 1e-15);
    }

    #[test]
    fn bin_out_of_range() {
        let mut t = identity_table(2, 2);
        assert_eq!(
            t.ingest(&TrainingSample::new(d(&[0.5, 0.5]), 2)),
            Err(Error::BinOutOfRange { bin: 2, bins: 2 })
        );
    }

    #[test]
    fn empirical_ed_identities() {
        let p = d(&[0.6, 0.4]);
        let s = vec![TrainingSample::new(p.clone(), 0)];
        assert_eq!(empirical_ed(&s, &[p]).unwrap(), 0.0);

        let mut rng = CounterRng::new(9);
        let samples: Vec<TrainingSample> = (0..50)
            .map(|_| TrainingSample::new(Distribution::from_weights(rng.flat_dirichlet(3)).unwrap(), rng.below(2)))
            .collect();
        let u = vec![Distribution::uniform(3); 2];
        let expected = samples
            .iter()
            .map(|s| 3f64.log2() - crate::prob::entropy(&s.posterior))
            .sum::<f64>()
            / 50.0;
        assert!((empirical_ed(&samples, &u).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn converges_to_chain_posterior() {
        let mut rng = CounterRng::new(314);
        let m = ChainModel::random(&mut rng, 3, 4, 3).unwrap();
        let posts: Vec<Distribution> = (0..4).map(|y| m.posterior_xy(y).unwrap()).collect();
        let mut t = identity_table(3, 3);
        for _ in 0..10_000 {
            let x = m.px().sample(&mut rng);
            let y = m.channel1()[x].sample(&mut rng);
            let z = m.channel2()[y].sample(&mut rng);
            t.ingest(&TrainingSample::new(posts[y].clone(), z)).unwrap();
        }
        for (z, q) in t.finalize().iter().enumerate() {
            assert!(q.total_variation(&m.posterior_xz(z).unwrap()) < 0.02);
        }
    }

    #[test]
    fn json_round_trip_and_csv() {
        let mut t = identity_table(2, 3);
        t.ingest(&TrainingSample::new(d(&[0.9, 0.1]), 2)).unwrap();
        let back = PostTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        let s = String::from_utf8(csv).unwrap();
        assert!(s.starts_with("bin_index,count,p_0,p_1\n"));
        assert_eq!(s.lines().count(), 4);
        let bad = t.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(PostTable::from_json(&bad).is_err());
    }

    #[test]
    fn quadratic_minimum() {
        let fit = train_parametric(|a| (a[0] - 0.3).powi(2), ParametricCorrector::constant(1, 0.5), 10_000);
        assert!((fit.corrector.alphas[0] - 0.3).abs() < 1e-3);
        assert!(!fit.budget_exhausted);
    }

    #[test]
    fn separable_two_slots() {
        let fit = train_parametric(
            |a| (a[0] - 0.8).powi(2) + 2.0 * (a[1] - 0.15).powi(2),
            ParametricCorrector::constant(2, 0.5),
            10_000,
        );
        assert!((fit.corrector.alphas[0] - 0.8).abs() < 1e-3);
        assert!((fit.corrector.alphas[1] - 0.15).abs() < 1e-3);
    }

    #[test]
    fn boundary_minimum_and_flat_objective() {
        let fit = train_parametric(|a| -a[0], ParametricCorrector::constant(1, 0.5), 10_000);
        assert_eq!(fit.corrector.alphas[0], 1.0);
        let flat = train_parametric(|_| 2.5, ParametricCorrector::constant(3, 0.5), 10_000);
        assert!(flat.flat);
        assert_eq!(flat.corrector.alphas, vec![0.5; 3]);
    }

    #[test]
    fn budget_exhaustion_returns_best_so_far() {
        let fit = train_parametric(|a| (a[0] - 0.3).powi(2), ParametricCorrector::constant(1, 0.5), 5);
        assert!(fit.budget_exhausted);
        assert_eq!(fit.evaluations, 5);
        assert!(fit.objective <= 0.04);
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(
            raw in prop::collection::vec((prop::collection::vec(0.01f64..1.0, 3), 0usize..4), 1..60),
            split in 0usize..60
        ) {
            let samples: Vec<TrainingSample> = raw
                .into_iter()
                .map(|(w, b)| TrainingSample::new(Distribution::from_weights(w).unwrap(), b))
                .collect();
            let cut = split.min(samples.len());
            let mut whole = identity_table(3, 4);
            whole.ingest_all(&samples).unwrap();
            let mut left = identity_table(3, 4);
            let mut right = identity_table(3, 4);
            left.ingest_all(&samples[..cut]).unwrap();
            right.ingest_all(&samples[cut..]).unwrap();
            left.merge(&right).unwrap();
            for (a, b) in whole.bins.iter().zip(&left.bins) {
                prop_assert_eq!(a.count, b.count);
                for (x, y) in a.sum.iter().zip(&b.sum) {
                    prop_assert!((x - y).abs() <= 1e-15 * a.count.max(1) as f64);
                }
            }
            prop_assert_eq!(whole.total_count(), samples.len() as u64);
        }

        #[test]
        fn averaging_beats_any_alternative(
            raw in prop::collection::vec((prop::collection::vec(0.01f64..1.0, 3), 0usize..3), 1..40),
            probe in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 3)
        ) {
            let samples: Vec<TrainingSample> = raw
                .into_iter()
                .map(|(w, b)| TrainingSample::new(Distribution::from_weights(w).unwrap(), b))
                .collect();
            let mut t = identity_table(3, 3);
            t.ingest_all(&samples).unwrap();
            let best = empirical_ed(&samples, &t.finalize()).unwrap();
            let alt: Vec<Distribution> = probe.into_iter().map(|w| Distribution::from_weights(w).unwrap()).collect();
            prop_assert!(best <= empirical_ed(&samples, &alt).unwrap() + 1e-12);
        }

        #[test]
        fn parametric_stays_in_unit_box(c0 in -2.0f64..3.0, c1 in -2.0f64..3.0) {
            let fit = train_parametric(
                |a| (a[0] - c0).powi(2) + (a[1] - c1).abs(),
                ParametricCorrector::constant(2, 0.5),
                2_000,
            );
            prop_assert!(fit.corrector.alphas.iter().all(|a| (0.0..=1.0).contains(a)));
        }
    }
}
