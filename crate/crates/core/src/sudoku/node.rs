//! Constraint-node message updates.
//!
//! Outgoing message `m'[i][j]` is proportional to the permanent of the
//! incoming matrix with row `i` and column `j` removed: the total weight of
//! all assignments of the other cells that leave symbol `j` for cell `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permanent::{head_tail_split, permanent_ryser, SquareMatrix, DEFAULT_HEAD};
use crate::prob::Distribution;
use crate::train::ParametricCorrector;

/// Incoming (or outgoing) messages of one constraint, row `i` belonging to
/// the constraint's `i`-th cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageMatrix {
    rows: Vec<Distribution>,
}

impl MessageMatrix {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if let Some(r) = rows.iter().find(|r| r.alphabet_size() != n) {
            return Err(Error::DimensionMismatch(r.alphabet_size(), n));
        }
        Ok(Self { rows })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            rows: vec![Distribution::uniform(n); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Distribution {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }

    pub fn into_rows(self) -> Vec<Distribution> {
        self.rows
    }

    pub fn to_square(&self) -> SquareMatrix {
        let n = self.dim();
        let data = self.rows.iter().flat_map(|r| r.probs().iter().copied()).collect();
        SquareMatrix::new(n, data).expect("rows are n long")
    }

    /// Apply the same symbol relabelling to every row: output column
    /// `perm[j]` takes input column `j`.
    pub fn permute_symbols(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![0.0; n];
                for (j, &p) in r.probs().iter().enumerate() {
                    v[perm[j]] = p;
                }
                Distribution::new(v).expect("permutation keeps mass")
            })
            .collect();
        Self { rows }
    }
}

/// Result of a node update that tolerates degenerate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeOutput {
    pub messages: MessageMatrix,
    /// Rows whose weights summed to zero and were replaced by uniform.
    pub degenerate_rows: usize,
}

fn normalize_rows(weights: Vec<Vec<f64>>) -> (Vec<Option<Distribution>>, usize) {
    let mut bad = 0;
    let rows = weights
        .into_iter()
        .map(|w| {
            let d = Distribution::from_weights(w).ok();
            bad += d.is_none() as usize;
            d
        })
        .collect();
    (rows, bad)
}

fn strict(rows: Vec<Option<Distribution>>) -> Result<MessageMatrix> {
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or(Error::DegenerateRow(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MessageMatrix { rows })
}

fn lenient(rows: Vec<Option<Distribution>>, bad: usize) -> NodeOutput {
    let n = rows.len();
    let rows = rows
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Distribution::uniform(n)))
        .collect();
    NodeOutput {
        messages: MessageMatrix { rows },
        degenerate_rows: bad,
    }
}

/// Unnormalized exact weights `perm(M_\ij)`.
pub fn exact_weights(m: &MessageMatrix) -> Vec<Vec<f64>> {
    let sq = m.to_square();
    let n = m.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if n == 1 {
                        1.0
                    } else {
                        permanent_ryser(&sq.minor(i, j)).expect("minor within kernel cap")
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact update: every outgoing row is the normalized row of minor permanents.
pub fn constraint_exact(m: &MessageMatrix) -> Result<MessageMatrix> {
    let (rows, _) = normalize_rows(exact_weights(m));
    strict(rows)
}

/// Head and tail minor permanents of one matrix, enough to evaluate the
/// corrected node for any `alpha` without recomputing permanents.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxParts {
    /// `perm(H_\ij)`.
    pub head: Vec<Vec<f64>>,
    /// `perm(T_\ij)`, independent of `j`.
    pub tail: Vec<f64>,
}

impl ApproxParts {
    pub fn new(m: &MessageMatrix) -> Self {
        let n = m.dim();
        let h = DEFAULT_HEAD.min(n.saturating_sub(1));
        let split = head_tail_split(&m.to_square(), h).expect("head smaller than n");
        Self {
            head: (0..n)
                .map(|i| (0..n).map(|j| split.head_minor(i, j)).collect())
                .collect(),
            tail: (0..n).map(|i| split.tail_minor(i)).collect(),
        }
    }

    pub fn row_weights(&self, i: usize, alpha: f64) -> Vec<f64> {
        self.head[i]
            .iter()
            .map(|&h| alpha * h + (1.0 - alpha) * self.tail[i])
            .collect()
    }

    fn weights(&self, alphas: &[f64]) -> Vec<Vec<f64>> {
        (0..self.tail.len()).map(|i| self.row_weights(i, alphas[i])).collect()
    }
}

/// Head/tail approximation with per-row weights `alphas` (length `n`).
/// Zero rows fall back to uniform and are counted.
pub fn constraint_approx(m: &MessageMatrix, alphas: &[f64]) -> Result<NodeOutput> {
    if alphas.len() != m.dim() {
        return Err(Error::DimensionMismatch(alphas.len(), m.dim()));
    }
    let (rows, bad) = normalize_rows(ApproxParts::new(m).weights(alphas));
    Ok(lenient(rows, bad))
}

/// The three interchangeable constraint-node implementations.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintNode {
    Exact,
    /// Unweighted head plus tail, i.e. every `alpha = 0.5`.
    Approx,
    Corrected(ParametricCorrector),
}

impl ConstraintNode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Approx => "approx",
            Self::Corrected(_) => "corrected",
        }
    }

    /// Update used inside BP: degenerate rows of any variant become uniform.
    pub fn apply(&self, m: &MessageMatrix) -> NodeOutput {
        let n = m.dim();
        match self {
            Self::Exact => {
                let (rows, bad) = normalize_rows(exact_weights(m));
                lenient(rows, bad)
            }
            Self::Approx => constraint_approx(m, &vec![0.5; n]).expect("length matches"),
            Self::Corrected(c) => {
                let alphas: Vec<f64> = (0..n).map(|i| c.alpha(i % c.slots())).collect();
                constraint_approx(m, &alphas).expect("length matches")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_matrix(n: usize, rng: &mut CounterRng) -> MessageMatrix {
        MessageMatrix::new(
            (0..n)
                .map(|_| Distribution::new(rng.flat_dirichlet(n)).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..n {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Marginalize the product of row messages over all permutations.
    fn exhaustive(m: &MessageMatrix) -> Vec<Vec<f64>> {
        let n = m.dim();
        let mut acc = vec![vec![0.0; n]; n];
        for p in permutations(n) {
            for i in 0..n {
                let w: f64 = (0..n).filter(|&r| r != i).map(|r| m.get(r, p[r])).product();
                acc[i][p[i]] += w;
            }
        }
        acc.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    }

    #[test]
    fn exact_matches_permutation_enumeration() {
        assert_eq!(permutations(4).len(), 24);
        let mut rng = CounterRng::new(10);
        for _ in 0..100 {
            let m = random_matrix(4, &mut rng);
            let out = constraint_exact(&m).unwrap();
            for (row, want) in out.rows().iter().zip(exhaustive(&m)) {
                for (a, b) in row.probs().iter().zip(want) {
                    assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn exact_uniform_and_forced() {
        let out = constraint_exact(&MessageMatrix::uniform(4)).unwrap();
        assert!(out.rows().iter().all(|r| r.total_variation(&Distribution::uniform(4)) < 1e-15));

        let perm = [2, 0, 3, 1];
        let m = MessageMatrix::new(perm.iter().map(|&s| Distribution::one_hot(4, s)).collect()).unwrap();
        let out = constraint_exact(&m).unwrap();
        for (i, &s) in perm.iter().enumerate() {
            assert_eq!(out.row(i), &Distribution::one_hot(4, s));
        }
    }

    #[test]
    fn exact_degenerate_row() {
        // Rows 1..3 all insist on symbol 0: nothing is consistent.
        let mut rows = vec![Distribution::uniform(4)];
        rows.extend((0..3).map(|_| Distribution::one_hot(4, 0)));
        let m = MessageMatrix::new(rows).unwrap();
        assert!(matches!(constraint_exact(&m), Err(Error::DegenerateRow(_))));
        let out = ConstraintNode::Exact.apply(&m);
        assert_eq!(out.degenerate_rows, 4);
    }

    #[test]
    fn exact_is_symbol_equivariant() {
        let mut rng = CounterRng::new(11);
        for n in [4, 9] {
            let m = random_matrix(n, &mut rng);
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let lhs = constraint_exact(&m.permute_symbols(&perm)).unwrap();
            let rhs = constraint_exact(&m).unwrap().permute_symbols(&perm);
            for (a, b) in lhs.rows().iter().zip(rhs.rows()) {
                assert!(a.total_variation(b) < 1e-12);
            }
        }
    }

    #[test]
    fn approx_uniform_input_and_zero_alpha() {
        let out = constraint_approx(&MessageMatrix::uniform(9), &[0.5; 9]).unwrap();
        assert_eq!(out.degenerate_rows, 0);
        assert!(out.messages.rows().iter().all(|r| r.total_variation(&Distribution::uniform(9)) < 1e-12));

        let mut rng = CounterRng::new(12);
        let m = random_matrix(9, &mut rng);
        let out = constraint_approx(&m, &[0.0; 9]).unwrap();
        assert!(out.messages.rows().iter().all(|r| r.total_variation(&Distribution::uniform(9)) < 1e-12));
        assert!(constraint_approx(&m, &[0.5; 4]).is_err());
    }

    #[test]
    fn approx_differs_from_exact() {
        let mut rng = CounterRng::new(13);
        let mut total = 0.0;
        for _ in 0..10 {
            let m = random_matrix(9, &mut rng);
            let exact = constraint_exact(&m).unwrap();
            let approx = ConstraintNode::Approx.apply(&m).messages;
            for (p, q) in exact.rows().iter().zip(approx.rows()) {
                let s = q.probs().iter().sum::<f64>();
                assert!((s - 1.0).abs() <= 1e-12);
                total += crate::prob::divergence(p, q).unwrap();
            }
        }
        assert!(total > 1e-3, "mean ED {}", total / 90.0);
    }

    #[test]
    fn approx_is_continuous_in_alpha() {
        let mut rng = CounterRng::new(14);
        let m = random_matrix(9, &mut rng);
        let exact = constraint_exact(&m).unwrap();
        let ed = |alphas: &[f64]| -> f64 {
            let out = constraint_approx(&m, alphas).unwrap().messages;
            exact
                .rows()
                .iter()
                .zip(out.rows())
                .map(|(p, q)| crate::prob::divergence(p, &q.floored(1e-12)).unwrap())
                .sum::<f64>()
        };
        for _ in 0..20 {
            let a: Vec<f64> = (0..9).map(|_| rng.uniform() * 0.999).collect();
            for i in 0..9 {
                let mut b = a.clone();
                b[i] += 1e-6;
                assert!((ed(&b) - ed(&a)).abs() <= 1e-3);
            }
        }
    }
}
