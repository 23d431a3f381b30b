//! Soft-SUDOKU solving by belief propagation.
//!
//! Every cell is observed through a noisy channel that yields a posterior over
//! the `n` symbols. Each of the `3n` all-different constraints (rows, columns,
//! boxes) is a factor node whose exact message update is a matrix permanent;
//! cheaper approximations live in [`node`]. Symbols are 0-based internally
//! and 1-based in text form.

pub mod alpha;
pub mod bp;
pub mod exit;
pub mod node;

use std::fmt;

use crate::error::{Error, Result};
use crate::prob::Distribution;
use crate::rng::CounterRng;

pub use alpha::{fit_alpha, harvest_batch, train_alpha, AlphaFit, AlphaTable, FrozenBatch};
pub use bp::{bp_solve, solve, BpConfig, BpResult};
pub use exit::{exit_curve, ExitConfig, ExitNode, ExitPoint};
pub use node::{constraint_approx, constraint_exact, ConstraintNode, MessageMatrix, NodeOutput};

/// A complete grid plus an optional mask of given cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Puzzle {
    n: usize,
    box_dim: usize,
    solution: Vec<u8>,
    givens: Option<Vec<bool>>,
}

fn box_dim_for(n: usize) -> Result<usize> {
    match n {
        4 => Ok(2),
        9 => Ok(3),
        _ => Err(Error::InvalidParameter(format!("unsupported grid side {n} (use 4 or 9)"))),
    }
}

impl Puzzle {
    pub fn new(n: usize, solution: Vec<u8>) -> Result<Self> {
        let box_dim = box_dim_for(n)?;
        if solution.len() != n * n {
            return Err(Error::DimensionMismatch(solution.len(), n * n));
        }
        let p = Self {
            n,
            box_dim,
            solution,
            givens: None,
        };
        if !p.graph().is_valid_grid(&p.solution) {
            return Err(Error::InvalidParameter("solution violates a constraint".into()));
        }
        Ok(p)
    }

    /// Shuffled valid grid: the canonical pattern under random symbol, row,
    /// band, column and stack permutations.
    pub fn random(n: usize, rng: &mut CounterRng) -> Result<Self> {
        let b = box_dim_for(n)?;
        let mut symbols: Vec<u8> = (0..n as u8).collect();
        rng.shuffle(&mut symbols);
        let shuffled_lines = |rng: &mut CounterRng| -> Vec<usize> {
            let mut bands: Vec<usize> = (0..b).collect();
            rng.shuffle(&mut bands);
            let mut out = Vec::with_capacity(n);
            for band in bands {
                let mut inner: Vec<usize> = (0..b).collect();
                rng.shuffle(&mut inner);
                out.extend(inner.into_iter().map(|r| band * b + r));
            }
            out
        };
        let rows = shuffled_lines(rng);
        let cols = shuffled_lines(rng);
        let pattern = |r: usize, c: usize| (b * (r % b) + r / b + c) % n;
        let solution = (0..n * n)
            .map(|k| symbols[pattern(rows[k / n], cols[k % n])])
            .collect();
        Self::new(n, solution)
    }

    /// `n^2` characters row-major, symbols `1..=n`, `0` or `.` for unknown
    /// cells. Unknown cells make this a classic puzzle: the stored solution is
    /// completed by backtracking.
    pub fn parse(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let n = match chars.len() {
            16 => 4,
            81 => 9,
            l => return Err(Error::Parse(format!("expected 16 or 81 cells, got {l}"))),
        };
        let mut grid = Vec::with_capacity(n * n);
        for c in chars {
            let v = match c {
                '0' | '.' => 0,
                d => d
                    .to_digit(10)
                    .filter(|&v| v >= 1 && v as usize <= n)
                    .ok_or_else(|| Error::Parse(format!("bad cell character {d:?}")))? as u8,
            };
            grid.push(v);
        }
        let givens: Vec<bool> = grid.iter().map(|&v| v != 0).collect();
        let box_dim = box_dim_for(n)?;
        let mut work: Vec<Option<u8>> = grid.iter().map(|&v| (v != 0).then(|| v - 1)).collect();
        let probe = Self {
            n,
            box_dim,
            solution: vec![0; n * n],
            givens: None,
        };
        let graph = probe.graph();
        if !complete(&graph, &mut work, n) {
            return Err(Error::Parse("grid has no valid completion".into()));
        }
        let solution: Vec<u8> = work.into_iter().map(|v| v.unwrap()).collect();
        let mut p = Self::new(n, solution)?;
        if givens.iter().any(|g| !g) {
            p.givens = Some(givens);
        }
        Ok(p)
    }

    pub fn with_givens(mut self, givens: Vec<bool>) -> Result<Self> {
        if givens.len() != self.n * self.n {
            return Err(Error::DimensionMismatch(givens.len(), self.n * self.n));
        }
        self.givens = Some(givens);
        Ok(self)
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn box_dim(&self) -> usize {
        self.box_dim
    }

    pub fn solution(&self) -> &[u8] {
        &self.solution
    }

    pub fn givens(&self) -> Option<&[bool]> {
        self.givens.as_deref()
    }

    pub fn graph(&self) -> FactorGraph {
        FactorGraph::new(self.n, self.box_dim)
    }
}

impl fmt::Display for Puzzle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &s) in self.solution.iter().enumerate() {
            let given = self.givens.as_ref().is_none_or(|g| g[k]);
            write!(f, "{}", if given { s + 1 } else { 0 })?;
        }
        Ok(())
    }
}

fn complete(graph: &FactorGraph, work: &mut [Option<u8>], n: usize) -> bool {
    let Some(cell) = work.iter().position(Option::is_none) else {
        return true;
    };
    for s in 0..n as u8 {
        let clash = graph.cell_constraints[cell]
            .iter()
            .any(|&(c, _)| graph.constraints[c].iter().any(|&v| work[v] == Some(s)));
        if !clash {
            work[cell] = Some(s);
            if complete(graph, work, n) {
                return true;
            }
        }
    }
    work[cell] = None;
    false
}

/// Bipartite graph of `n^2` cells and `3n` constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    pub n: usize,
    /// Cells of each constraint in slot order: rows, then columns, then boxes.
    pub constraints: Vec<Vec<usize>>,
    /// For each cell, its three `(constraint, slot)` memberships.
    pub cell_constraints: Vec<[(usize, usize); 3]>,
}

impl FactorGraph {
    pub fn new(n: usize, box_dim: usize) -> Self {
        let mut constraints: Vec<Vec<usize>> = Vec::with_capacity(3 * n);
        for r in 0..n {
            constraints.push((0..n).map(|c| r * n + c).collect());
        }
        for c in 0..n {
            constraints.push((0..n).map(|r| r * n + c).collect());
        }
        for b in 0..n {
            let (br, bc) = ((b / box_dim) * box_dim, (b % box_dim) * box_dim);
            constraints.push(
                (0..n)
                    .map(|k| (br + k / box_dim) * n + bc + k % box_dim)
                    .collect(),
            );
        }
        let mut cell_constraints = vec![[(0, 0); 3]; n * n];
        let mut filled = vec![0usize; n * n];
        for (ci, cells) in constraints.iter().enumerate() {
            for (slot, &v) in cells.iter().enumerate() {
                cell_constraints[v][filled[v]] = (ci, slot);
                filled[v] += 1;
            }
        }
        Self {
            n,
            constraints,
            cell_constraints,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    /// Every constraint holds each symbol exactly once.
    pub fn is_valid_grid(&self, grid: &[u8]) -> bool {
        self.constraints.iter().all(|cells| {
            let mut seen = vec![false; self.n];
            cells.iter().all(|&v| {
                let s = grid[v] as usize;
                s < self.n && !std::mem::replace(&mut seen[s], true)
            })
        })
    }
}

/// `n`-ary orthogonal signalling over AWGN: `y = e_s + sigma w`, posterior
/// `softmax(y / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub sigma: f64,
}

impl ChannelModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    /// `sigma = 10^(-snr_db / 20)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(-snr_db / 20.0))
    }

    pub fn snr_db(&self) -> f64 {
        -20.0 * self.sigma.log10()
    }

    pub fn observe(&self, symbol: usize, q: usize, rng: &mut CounterRng) -> Distribution {
        let s2 = self.sigma * self.sigma;
        let logits: Vec<f64> = (0..q)
            .map(|j| {
                let y = if j == symbol { 1.0 } else { 0.0 } + self.sigma * rng.normal();
                y / s2
            })
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Distribution::from_weights(logits.iter().map(|l| (l - m).exp()).collect())
            .expect("softmax has a unit entry")
    }

    /// Cell posteriors for a puzzle. Classic puzzles (with givens) use the
    /// erasure channel: givens one-hot, the rest uniform.
    pub fn observe_puzzle(&self, puzzle: &Puzzle, rng: &mut CounterRng) -> Vec<Distribution> {
        let n = puzzle.side();
        match puzzle.givens() {
            Some(g) => puzzle
                .solution()
                .iter()
                .zip(g)
                .map(|(&s, &given)| {
                    if given {
                        Distribution::one_hot(n, s as usize)
                    } else {
                        Distribution::uniform(n)
                    }
                })
                .collect(),
            None => puzzle
                .solution()
                .iter()
                .map(|&s| self.observe(s as usize, n, rng))
                .collect(),
        }
    }
}
