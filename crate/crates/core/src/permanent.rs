//! Matrix permanents.
//!
//! Dense kernels (permutation sum, Ryser with Gray-code updates), structured
//! kernels for the two halves of a head/tail split, and the split itself.
//! Minors are addressed by `(skip_row, skip_col)` instead of being copied.

use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX: usize = 10;
pub const RYSER_MAX: usize = 16;
pub const DEFAULT_HEAD: usize = 3;

/// Dense row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(data.len(), n * n));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite matrix entry {v}")));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(r.len(), n));
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn filled(n: usize, v: f64) -> Self {
        Self {
            n,
            data: vec![v; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Copy with row `i` and column `j` removed.
    pub fn minor(&self, i: usize, j: usize) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for r in (0..n).filter(|&r| r != i) {
            for c in (0..n).filter(|&c| c != j) {
                data.push(self.get(r, c));
            }
        }
        Self { n: n - 1, data }
    }
}

/// Sum over all permutations of `prod_i m[i][pi(i)]`.
pub fn permanent_bruteforce(m: &SquareMatrix) -> Result<f64> {
    let n = m.dim();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::DimensionTooLarge { n, max: BRUTE_FORCE_MAX });
    }
    fn walk(m: &SquareMatrix, row: usize, used: u32, prod: f64) -> f64 {
        if row == m.dim() {
            return prod;
        }
        (0..m.dim())
            .filter(|&c| used & (1 << c) == 0)
            .map(|c| walk(m, row + 1, used | (1 << c), prod * m.get(row, c)))
            .sum()
    }
    Ok(walk(m, 0, 0, 1.0))
}

/// Ryser's inclusion-exclusion formula,
/// `perm(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij`,
/// visiting column subsets in Gray-code order so each step updates the row
/// sums by one column. `O(2^n n)`.
pub fn permanent_ryser(m: &SquareMatrix) -> Result<f64> {
    let n = m.dim();
    if n > RYSER_MAX {
        return Err(Error::DimensionTooLarge { n, max: RYSER_MAX });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0; n];
    let mut in_set = vec![false; n];
    let mut total = 0.0;
    let mut size = 0usize;
    for k in 1u32..(1u32 << n) {
        let col = k.trailing_zeros() as usize;
        let add = !in_set[col];
        in_set[col] = add;
        if add {
            size += 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += m.get(i, col);
            }
        } else {
            size -= 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= m.get(i, col);
            }
        }
        let prod: f64 = row_sums.iter().product();
        if size % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    Ok(if n % 2 == 1 { -total } else { total })
}

/// Permanent of a matrix whose row `i` is the constant `t[i]`: `n! prod t_i`.
pub fn permanent_uniform_rows(tail: &[f64]) -> f64 {
    let n = tail.len();
    factorial(n) * tail.iter().product::<f64>()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Rows stored as `(column, value)` lists of their non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::DimensionMismatch(rows.len(), n));
        }
        if n > 64 {
            return Err(Error::DimensionTooLarge { n, max: 64 });
        }
        for r in &rows {
            if let Some(&(c, _)) = r.iter().find(|(c, _)| *c >= n) {
                return Err(Error::DimensionMismatch(c, n));
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Ok(Self { n, rows })
    }

    pub fn from_dense(m: &SquareMatrix) -> Self {
        let n = m.dim();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let v = m.get(i, j);
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> SquareMatrix {
        let mut m = SquareMatrix::filled(self.n, 0.0);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m.set(i, j, v);
            }
        }
        m
    }
}

fn sparse_expand(rows: &[Vec<(usize, f64)>], row: usize, skip_row: usize, used: u64) -> f64 {
    if row == rows.len() {
        return 1.0;
    }
    if row == skip_row {
        return sparse_expand(rows, row + 1, skip_row, used);
    }
    let mut acc = 0.0;
    for &(c, v) in &rows[row] {
        if used & (1 << c) == 0 {
            let rest = sparse_expand(rows, row + 1, skip_row, used | (1 << c));
            acc += v * rest;
        }
    }
    acc
}

/// Row-by-row Laplace expansion over non-zero entries with used-column
/// masking; branches die as soon as a row has no free non-zero column.
pub fn permanent_sparse(m: &SparseRows) -> f64 {
    sparse_expand(&m.rows, 0, usize::MAX, 0)
}

/// `perm` of `m` with row `i` and column `j` removed.
pub fn permanent_sparse_minor(m: &SparseRows, i: usize, j: usize) -> f64 {
    sparse_expand(&m.rows, 0, i, 1 << j)
}

/// `M' = H + T`: sparse head `H` plus a per-row constant tail `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadTailSplit {
    pub head: SparseRows,
    pub tail: Vec<f64>,
    /// Row sums of the matrix that was split.
    pub row_sums: Vec<f64>,
    pub head_size: usize,
}

impl HeadTailSplit {
    pub fn dim(&self) -> usize {
        self.tail.len()
    }

    /// `M'` as a dense matrix.
    pub fn reconstruct(&self) -> SquareMatrix {
        let n = self.dim();
        let mut m = self.head.to_dense();
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, m.get(i, j) + self.tail[i]);
            }
        }
        m
    }

    /// `perm(T)` with row `i` and any one column removed; the remaining rows
    /// are still constant so the column does not matter.
    pub fn tail_minor(&self, i: usize) -> f64 {
        let n = self.dim();
        let prod: f64 = self
            .tail
            .iter()
            .enumerate()
            .filter(|&(r, _)| r != i)
            .map(|(_, t)| t)
            .product();
        factorial(n - 1) * prod
    }

    pub fn head_minor(&self, i: usize, j: usize) -> f64 {
        permanent_sparse_minor(&self.head, i, j)
    }
}

/// Keep the `h` largest entries of each row (ties: lower column first), spread
/// the rest uniformly as `t_i = (sum of the other n-h entries) / (n-h)`, and
/// store `kept - t_i` (clamped at 0) as the head.
pub fn head_tail_split(m: &SquareMatrix, h: usize) -> Result<HeadTailSplit> {
    let n = m.dim();
    if h >= n {
        return Err(Error::InvalidParameter(format!(
            "head size {h} must be smaller than dimension {n}"
        )));
    }
    if n > 64 {
        return Err(Error::DimensionTooLarge { n, max: 64 });
    }
    let mut head_rows = Vec::with_capacity(n);
    let mut tail = Vec::with_capacity(n);
    let mut row_sums = Vec::with_capacity(n);
    for i in 0..n {
        let row = m.row(i);
        if let Some(v) = row.iter().find(|v| **v < 0.0) {
            return Err(Error::InvalidParameter(format!("negative message entry {v}")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        let rest: f64 = order[h..].iter().map(|&c| row[c]).sum();
        let t = rest / (n - h) as f64;
        let mut kept: Vec<(usize, f64)> = order[..h]
            .iter()
            .map(|&c| (c, (row[c] - t).max(0.0)))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        kept.sort_by_key(|&(c, _)| c);
        head_rows.push(kept);
        tail.push(t);
        row_sums.push(row.iter().sum());
    }
    Ok(HeadTailSplit {
        head: SparseRows { n, rows: head_rows },
        tail,
        row_sums,
        head_size: h,
    })
}

/// `alpha perm(H minor) + (1 - alpha) perm(T minor)`.
pub fn approx_permanent_minor(split: &HeadTailSplit, i: usize, j: usize, alpha: f64) -> f64 {
    let mut v = 0.0;
    if alpha != 0.0 {
        v += alpha * split.head_minor(i, j);
    }
    if alpha != 1.0 {
        v += (1.0 - alpha) * split.tail_minor(i);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn random_matrix(rng: &mut CounterRng, n: usize) -> SquareMatrix {
        SquareMatrix::new(n, (0..n * n).map(|_| rng.uniform()).collect()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(permanent_bruteforce(&SquareMatrix::identity(5)).unwrap(), 1.0);
        assert_eq!(permanent_bruteforce(&SquareMatrix::filled(3, 1.0)).unwrap(), 6.0);
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(permanent_bruteforce(&m).unwrap(), 10.0);
        assert!(matches!(
            permanent_bruteforce(&SquareMatrix::identity(11)),
            Err(Error::DimensionTooLarge { n: 11, .. })
        ));
    }

    #[test]
    fn ryser_examples() {
        assert_eq!(permanent_ryser(&SquareMatrix::identity(8)).unwrap(), 1.0);
        assert_eq!(permanent_ryser(&SquareMatrix::filled(8, 1.0)).unwrap(), 40320.0);
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(permanent_ryser(&m).unwrap(), 10.0);
        assert_eq!(permanent_ryser(&SquareMatrix::filled(0, 0.0)).unwrap(), 1.0);
        assert!(permanent_ryser(&SquareMatrix::identity(17)).is_err());
    }

    #[test]
    fn ryser_matches_brute_force_6x6() {
        let mut rng = CounterRng::new(6);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 6);
            assert!(rel(permanent_ryser(&m).unwrap(), permanent_bruteforce(&m).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn uniform_rows_examples() {
        assert_eq!(permanent_uniform_rows(&[1.0; 4]), 24.0);
        assert_eq!(permanent_uniform_rows(&[0.3, 0.0, 2.0]), 0.0);
        let mut rng = CounterRng::new(7);
        for _ in 0..20 {
            let t: Vec<f64> = (0..7).map(|_| rng.uniform()).collect();
            let dense = SquareMatrix::new(7, t.iter().flat_map(|&v| vec![v; 7]).collect()).unwrap();
            assert!(rel(permanent_uniform_rows(&t), permanent_ryser(&dense).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn sparse_examples() {
        let p = SparseRows::new(3, vec![vec![(2, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        assert_eq!(permanent_sparse(&p), 1.0);
        let z = SparseRows::new(3, vec![vec![(2, 1.0)], vec![], vec![(1, 1.0), (0, 0.5)]]).unwrap();
        assert_eq!(permanent_sparse(&z), 0.0);
        let mut rng = CounterRng::new(8);
        for trial in 0..100 {
            // every row carries the entry of one random permutation so the
            // permanent is structurally non-zero; odd trials drop that
            let mut sigma: Vec<usize> = (0..8).collect();
            rng.shuffle(&mut sigma);
            let rows = (0..8)
                .map(|i| {
                    let mut cols: Vec<usize> = (0..8).filter(|&c| c != sigma[i]).collect();
                    rng.shuffle(&mut cols);
                    if trial % 2 == 0 {
                        cols[0] = sigma[i];
                    }
                    cols[..3].iter().map(|&c| (c, rng.uniform())).collect()
                })
                .collect();
            let s = SparseRows::new(8, rows).unwrap();
            let dense = permanent_ryser(&s.to_dense()).unwrap();
            let sparse = permanent_sparse(&s);
            if trial % 2 == 0 {
                assert!(rel(sparse, dense) < 1e-10, "{sparse} vs {dense}");
            } else {
                assert!((sparse - dense).abs() < 1e-12, "{sparse} vs {dense}");
            }
            let (i, j) = (rng.below(8), rng.below(8));
            let minor = permanent_ryser(&s.to_dense().minor(i, j)).unwrap();
            assert!((permanent_sparse_minor(&s, i, j) - minor).abs() <= 1e-12 + 1e-10 * minor.abs());
        }
    }

    #[test]
    fn split_worked_row_example() {
        let t = 0.35 / 6.0;
        let row = vec![0.3, 0.2, 0.15, 0.05, 0.06, 0.07, 0.04, 0.08, 0.05];
        let mut rows = vec![row];
        rows.extend((1..9).map(|_| vec![1.0 / 9.0; 9]));
        let s = head_tail_split(&SquareMatrix::from_rows(&rows).unwrap(), 3).unwrap();
        assert!((s.tail[0] - t).abs() < 1e-15);
        let h = s.head.row(0);
        assert_eq!(h.len(), 3);
        assert_eq!((h[0].0, h[1].0, h[2].0), (0, 1, 2));
        assert!((h[0].1 - (0.3 - t)).abs() < 1e-15);
        assert!((h[1].1 - (0.2 - t)).abs() < 1e-15);
        assert!((h[2].1 - (0.15 - t)).abs() < 1e-15);
        // uniform rows: head clamps to nothing, tail is 1/n
        for i in 1..9 {
            assert!(s.head.row(i).is_empty());
            assert!((s.tail[i] - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn split_ties_prefer_lower_columns() {
        let m = SquareMatrix::from_rows(&[
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.1, 0.3, 0.3, 0.3],
            vec![0.4, 0.2, 0.2, 0.2],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        let s = head_tail_split(&m, 2).unwrap();
        let cols: Vec<usize> = s.head.row(1).iter().map(|&(c, _)| c).collect();
        assert_eq!(cols, vec![1, 2]);
        assert!(head_tail_split(&m, 4).is_err());
    }

    #[test]
    fn split_reconstruction_preserves_row_sums() {
        let mut rng = CounterRng::new(9);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..9).map(|_| rng.flat_dirichlet(9)).collect();
            let m = SquareMatrix::from_rows(&rows).unwrap();
            let s = head_tail_split(&m, 3).unwrap();
            let r = s.reconstruct();
            assert!(s.head.max_row_nnz() <= 3);
            for i in 0..9 {
                let sum: f64 = r.row(i).iter().sum();
                assert!((sum - s.row_sums[i]).abs() < 1e-12);
                assert!(r.row(i).iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn approx_minor_weights() {
        let mut rng = CounterRng::new(10);
        let rows: Vec<Vec<f64>> = (0..9).map(|_| rng.flat_dirichlet(9)).collect();
        let s = head_tail_split(&SquareMatrix::from_rows(&rows).unwrap(), 3).unwrap();
        let (i, j) = (2, 5);
        let h = permanent_ryser(&s.head.to_dense().minor(i, j)).unwrap();
        let tail_dense = SquareMatrix::new(9, s.tail.iter().flat_map(|&v| vec![v; 9]).collect()).unwrap();
        let t = permanent_ryser(&tail_dense.minor(i, j)).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 + 1e-10 * b.abs();
        assert!(close(approx_permanent_minor(&s, i, j, 1.0), h));
        assert!(close(approx_permanent_minor(&s, i, j, 0.0), t));
        assert!(close(approx_permanent_minor(&s, i, j, 0.5), 0.5 * h + 0.5 * t));
    }

    // Characterization, not a bound: perm(H) + perm(T) is a poor stand-in for
    // perm(H + T) on random message matrices.
    #[test]
    fn sum_of_permanents_is_far_from_permanent_of_sum() {
        let mut rng = CounterRng::new(11);
        let mut rel = Vec::new();
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..9).map(|_| rng.flat_dirichlet(9)).collect();
            let s = head_tail_split(&SquareMatrix::from_rows(&rows).unwrap(), 3).unwrap();
            let full = s.reconstruct();
            for _ in 0..5 {
                let (i, j) = (rng.below(9), rng.below(9));
                let exact = permanent_ryser(&full.minor(i, j)).unwrap();
                rel.push((s.head_minor(i, j) + s.tail_minor(i) - exact).abs() / exact);
            }
        }
        rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(rel[rel.len() / 2] > 0.1, "median relative error {}", rel[rel.len() / 2]);
    }

    proptest! {
        #[test]
        fn invariant_under_row_and_column_permutation(
            n in 2usize..7, seed in any::<u64>()
        ) {
            let mut rng = CounterRng::new(seed);
            let m = random_matrix(&mut rng, n);
            let mut rp: Vec<usize> = (0..n).collect();
            let mut cp: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut rp);
            rng.shuffle(&mut cp);
            let rows_perm = SquareMatrix::new(n, rp.iter().flat_map(|&r| m.row(r).to_vec()).collect()).unwrap();
            let cols_perm = SquareMatrix::new(n, (0..n).flat_map(|r| cp.iter().map(|&c| m.get(r, c)).collect::<Vec<_>>()).collect()).unwrap();
            let base = permanent_ryser(&m).unwrap();
            prop_assert!(rel(permanent_ryser(&rows_perm).unwrap(), base) < 1e-10);
            prop_assert!(rel(permanent_ryser(&cols_perm).unwrap(), base) < 1e-10);
        }

        #[test]
        fn multilinear_in_rows(n in 1usize..7, seed in any::<u64>(), c in 0.1f64..5.0) {
            let mut rng = CounterRng::new(seed);
            let m = random_matrix(&mut rng, n);
            let i = rng.below(n);
            let mut scaled = m.clone();
            for j in 0..n {
                scaled.set(i, j, c * m.get(i, j));
            }
            let base = permanent_ryser(&m).unwrap();
            prop_assert!((permanent_ryser(&scaled).unwrap() - c * base).abs() <= 1e-12 * (c * base).abs().max(1.0));
        }
    }
}
