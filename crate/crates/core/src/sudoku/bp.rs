//! Flooding sum-product over the SUDOKU factor graph.

use rayon::prelude::*;

use super::node::{ConstraintNode, MessageMatrix};
use super::{ChannelModel, Puzzle};
use crate::prob::Distribution;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub max_iters: usize,
    /// Weight on the freshly computed constraint message; 1 disables damping.
    pub damping: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            damping: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpResult {
    pub marginals: Vec<Distribution>,
    pub decisions: Vec<u8>,
    pub iterations: usize,
    pub solved: bool,
    pub symbol_errors: usize,
    /// Constraint or variable messages that collapsed to zero and were reset.
    pub degenerate_messages: usize,
}

impl BpResult {
    pub fn symbol_error_rate(&self) -> f64 {
        self.symbol_errors as f64 / self.decisions.len() as f64
    }
}

fn product(parts: &[&Distribution]) -> Option<Distribution> {
    let n = parts[0].alphabet_size();
    let w = (0..n).map(|j| parts.iter().map(|d| d.get(j)).product()).collect();
    Distribution::from_weights(w).ok()
}

/// Run BP from per-cell channel posteriors. `observe` sees every
/// constraint's input matrix with the (1-based) iteration number.
pub fn bp_solve_with<F>(
    puzzle: &Puzzle,
    channel_posteriors: &[Distribution],
    node: &ConstraintNode,
    config: BpConfig,
    mut observe: F,
) -> BpResult
where
    F: FnMut(usize, usize, &MessageMatrix),
{
    let graph = puzzle.graph();
    let n = graph.n;
    let cells = graph.num_cells();
    let uniform = Distribution::uniform(n);
    // c2v[cell][k]: message from the k-th constraint of `cell`.
    let mut c2v = vec![[uniform.clone(), uniform.clone(), uniform.clone()]; cells];
    let mut degenerate = 0;
    let mut iterations = 0;
    let mut marginals = channel_posteriors.to_vec();
    let mut decisions: Vec<u8> = marginals.iter().map(|m| m.argmax() as u8).collect();
    let mut solved = graph.is_valid_grid(&decisions);

    while !solved && iterations < config.max_iters {
        iterations += 1;
        let mut v2c = Vec::with_capacity(cells);
        for v in 0..cells {
            let msgs: [Distribution; 3] = std::array::from_fn(|k| {
                let others: Vec<&Distribution> = std::iter::once(&channel_posteriors[v])
                    .chain((0..3).filter(|&o| o != k).map(|o| &c2v[v][o]))
                    .collect();
                product(&others).unwrap_or_else(|| {
                    degenerate += 1;
                    uniform.clone()
                })
            });
            v2c.push(msgs);
        }
        let slot_of = |v: usize, c: usize| {
            graph.cell_constraints[v]
                .iter()
                .position(|&(cc, _)| cc == c)
                .expect("cell belongs to constraint")
        };
        let inputs: Vec<MessageMatrix> = graph
            .constraints
            .iter()
            .enumerate()
            .map(|(c, members)| {
                MessageMatrix::new(members.iter().map(|&v| v2c[v][slot_of(v, c)].clone()).collect())
                    .expect("square by construction")
            })
            .collect();
        for (c, m) in inputs.iter().enumerate() {
            observe(iterations, c, m);
        }
        let outputs: Vec<_> = inputs.par_iter().map(|m| node.apply(m)).collect();
        for (c, out) in outputs.into_iter().enumerate() {
            degenerate += out.degenerate_rows;
            for (slot, msg) in out.messages.into_rows().into_iter().enumerate() {
                let v = graph.constraints[c][slot];
                let k = slot_of(v, c);
                let w = config.damping;
                c2v[v][k] = if w >= 1.0 {
                    msg
                } else {
                    let mixed = msg
                        .probs()
                        .iter()
                        .zip(c2v[v][k].probs())
                        .map(|(a, b)| w * a + (1.0 - w) * b)
                        .collect();
                    Distribution::from_weights(mixed).expect("convex mix of distributions")
                };
            }
        }
        marginals = (0..cells)
            .map(|v| {
                let parts = [&channel_posteriors[v], &c2v[v][0], &c2v[v][1], &c2v[v][2]];
                product(&parts).unwrap_or_else(|| {
                    degenerate += 1;
                    channel_posteriors[v].clone()
                })
            })
            .collect();
        decisions = marginals.iter().map(|m| m.argmax() as u8).collect();
        solved = graph.is_valid_grid(&decisions);
    }

    let symbol_errors = decisions
        .iter()
        .zip(puzzle.solution())
        .filter(|(a, b)| a != b)
        .count();
    BpResult {
        marginals,
        decisions,
        iterations,
        solved,
        symbol_errors,
        degenerate_messages: degenerate,
    }
}

pub fn bp_solve(
    puzzle: &Puzzle,
    channel_posteriors: &[Distribution],
    node: &ConstraintNode,
    config: BpConfig,
) -> BpResult {
    bp_solve_with(puzzle, channel_posteriors, node, config, |_, _, _| {})
}

/// Draw a random grid and its channel observations from `seed`, then solve.
pub fn solve(
    n: usize,
    channel: ChannelModel,
    node: &ConstraintNode,
    config: BpConfig,
    seed: u64,
) -> crate::Result<(Puzzle, BpResult)> {
    let root = CounterRng::new(seed);
    let puzzle = Puzzle::random(n, &mut root.split(0))?;
    let obs = channel.observe_puzzle(&puzzle, &mut root.split(1));
    let result = bp_solve(&puzzle, &obs, node, config);
    Ok((puzzle, result))
}
