//! Finite-alphabet probability primitives.
//!
//! All information quantities are in bits. LLRs are natural-log and positive
//! values favour symbol 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Default floor applied to empirical distributions before taking logs.
pub const DEFAULT_FLOOR: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability mass function over `0..q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

fn check_entries(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    for (i, &p) in v.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} = {p}")));
        }
    }
    Ok(v.iter().sum())
}

impl Distribution {
    /// Wrap a vector that already sums to one (within 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let s = check_entries(&probs)?;
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sum = {s}")));
        }
        Ok(Self { probs })
    }

    /// Normalize non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let s = check_entries(&weights)?;
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::InvalidDistribution(format!("weights sum to {s}")));
        }
        let mut d = Self { probs: weights };
        d.normalize();
        Ok(d)
    }

    pub fn uniform(q: usize) -> Self {
        assert!(q > 0, "empty alphabet");
        Self {
            probs: vec![1.0 / q as f64; q],
        }
    }

    pub fn one_hot(q: usize, at: usize) -> Self {
        assert!(at < q, "one_hot index {at} outside alphabet {q}");
        let mut probs = vec![0.0; q];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn normalize(&mut self) {
        let s: f64 = self.probs.iter().sum();
        if s > 0.0 && s != 1.0 {
            self.probs.iter_mut().for_each(|p| *p /= s);
        }
    }

    /// Raise every entry to at least `eps` and renormalize.
    pub fn floored(&self, eps: f64) -> Self {
        let mut d = Self {
            probs: self.probs.iter().map(|&p| p.max(eps)).collect(),
        };
        d.normalize();
        d
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Inverse-CDF draw of one symbol.
    pub fn sample(&self, rng: &mut CounterRng) -> usize {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap above the last partial sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

fn same_alphabet(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch(
            p.alphabet_size(),
            q.alphabet_size(),
        ));
    }
    Ok(())
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
pub fn divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_alphabet(p, q)?;
    let mut acc = 0.0;
    for (i, (&a, &b)) in p.probs.iter().zip(&q.probs).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::AbsoluteContinuityViolation { index: i, p_val: a });
        }
        acc += a * (a / b).log2();
    }
    // rounding can leave a tiny negative on p == q
    Ok(acc.max(0.0))
}

/// Shannon entropy in bits, `0 log 0 = 0`.
pub fn entropy(p: &Distribution) -> f64 {
    -p.probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Cross entropy `-sum p log2 q` in bits.
pub fn cross_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_alphabet(p, q)?;
    let mut acc = 0.0;
    for (i, (&a, &b)) in p.probs.iter().zip(&q.probs).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::AbsoluteContinuityViolation { index: i, p_val: a });
        }
        acc -= a * b.log2();
    }
    Ok(acc)
}

/// Binary log-likelihood ratio `ln(p0 / p1)`; infinities are valid sentinels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Llr(pub f64);

impl Llr {
    pub const PLUS_INF: Llr = Llr(f64::INFINITY);
    pub const MINUS_INF: Llr = Llr(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn magnitude(self) -> f64 {
        self.0.abs()
    }

    /// `+1` for non-negative values, `-1` otherwise.
    pub fn sign(self) -> i8 {
        if self.0.is_sign_negative() && self.0 != 0.0 {
            -1
        } else {
            1
        }
    }
}

pub fn llr_to_dist(l: Llr) -> Distribution {
    let v = l.0;
    if v == f64::INFINITY {
        return Distribution::one_hot(2, 0);
    }
    if v == f64::NEG_INFINITY {
        return Distribution::one_hot(2, 1);
    }
    // compute the smaller mass directly so it keeps full relative precision
    let small = 1.0 / (1.0 + v.abs().exp());
    let big = 1.0 / (1.0 + (-v.abs()).exp());
    let probs = if v >= 0.0 {
        vec![big, small]
    } else {
        vec![small, big]
    };
    Distribution { probs }
}

pub fn dist_to_llr(p: &Distribution) -> Result<Llr> {
    if p.alphabet_size() != 2 {
        return Err(Error::DimensionMismatch(p.alphabet_size(), 2));
    }
    let (p0, p1) = (p.probs[0], p.probs[1]);
    Ok(match (p0 == 0.0, p1 == 0.0) {
        (false, true) => Llr::PLUS_INF,
        (true, false) => Llr::MINUS_INF,
        (true, true) => {
            return Err(Error::InvalidDistribution("all-zero binary distribution".into()))
        }
        (false, false) => Llr(p0.ln() - p1.ln()),
    })
}

/// Average `log2 q - (-log2 m_k(x_k))` without the clamp at zero; useful for
/// per-trial statistics that are averaged afterwards.
pub fn soft_mi_raw<'a, I>(samples: I) -> Result<f64>
where
    I: IntoIterator<Item = (usize, &'a Distribution)>,
{
    let mut q = None;
    let mut n = 0usize;
    let mut acc = 0.0;
    for (k, (x, m)) in samples.into_iter().enumerate() {
        let qs = *q.get_or_insert(m.alphabet_size());
        if m.alphabet_size() != qs {
            return Err(Error::DimensionMismatch(qs, m.alphabet_size()));
        }
        let mass = m.get(x);
        if mass <= 0.0 {
            return Err(Error::ZeroMassAtTruth { index: k });
        }
        acc -= mass.log2();
        n += 1;
    }
    let q = q.ok_or(Error::Empty)?;
    Ok((q as f64).log2() - acc / n as f64)
}

/// Cross-entropy estimate of `I(X; message)` in bits, clamped below at zero.
pub fn soft_mi<'a, I>(samples: I) -> Result<f64>
where
    I: IntoIterator<Item = (usize, &'a Distribution)>,
{
    soft_mi_raw(samples).map(|v| v.max(0.0))
}
