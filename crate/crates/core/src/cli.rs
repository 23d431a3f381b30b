//! The `rolemodel` command line.
//!
//! Machine-readable output (CSV or JSON) goes to `--out`, or to stdout when
//! no path is given; human summaries go to stdout unless `--quiet`. Exit
//! status is 0 on success, 1 for invalid input, 2 for numerical failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::chain::{random_table, ChainModel};
use crate::error::Error;
use crate::minsum::{evaluate_table, simulate_batch, train_table, ZQuantizer};
use crate::permanent::{
    permanent_bruteforce, permanent_ryser, permanent_sparse, permanent_uniform_rows, SparseRows,
    SquareMatrix, BRUTE_FORCE_MAX,
};
use crate::rng::CounterRng;
use crate::sudoku::alpha::{DEFAULT_BUDGET, DEFAULT_SNR_MIX};
use crate::sudoku::{
    bp_solve, exit_curve, fit_alpha, harvest_batch, AlphaTable, BpConfig, ChannelModel,
    ConstraintNode, ExitConfig, ExitNode, FrozenBatch, Puzzle,
};
use crate::train::PostTable;

#[derive(Debug, Parser)]
#[command(name = "rolemodel", version, about = "Role-model estimator training and testbeds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Destination of the machine-readable output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress the human summary.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the expected-divergence decomposition on random Markov chains.
    VerifyTheorem {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        max_alphabet: usize,
    },
    /// Train a min-sum post-processing table against the tanh rule.
    TrainMinsum {
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Per-branch noise levels; a single value is repeated.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 64)]
        bins: usize,
    },
    /// Evaluate a trained min-sum table on fresh samples.
    EvalMinsum {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Time the permanent kernels; kernel values go to --out.
    Bench {
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Solve one random soft SUDOKU.
    Solve {
        #[arg(long, default_value_t = 9)]
        size: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long, default_value = "exact")]
        node: String,
        #[arg(long)]
        alpha_table: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long, default_value_t = 0.9)]
        damping: f64,
        /// Grid text (`0` for unknown cells); random when absent.
        #[arg(long)]
        puzzle: Option<String>,
    },
    /// EXIT curves: CSV `node,snr_db,ia_bits,ie_bits,stderr`.
    ExitChart {
        /// Comma list of exact, approx, corrected, variable.
        #[arg(long, value_delimiter = ',', default_value = "exact,approx")]
        node: Vec<String>,
        /// Channel SNRs for variable-node curves.
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        snr_list: Vec<f64>,
        /// `start:stop:step` in bits.
        #[arg(long, default_value = "0:3.17:0.25")]
        mi_grid: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 9)]
        size: usize,
        #[arg(long)]
        alpha_table: Option<PathBuf>,
    },
    /// Fit the corrected constraint node's per-row weights.
    TrainSudokuAlpha {
        #[arg(long, default_value_t = 200)]
        batch: usize,
        #[arg(long, default_value_t = 9)]
        size: usize,
        /// SNR mix of the BP runs that supply training matrices.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::DimensionMismatch(..)
            | Error::Empty
            | Error::AlphabetTooLarge(_)
            | Error::DimensionTooLarge { .. }
            | Error::BinOutOfRange { .. } => Self::Validation(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

struct Ctx<'a> {
    global: &'a Global,
    summary: String,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        self.summary.push_str(line.as_ref());
        self.summary.push('\n');
    }

    fn csv_footer(&self) -> String {
        format!("# rolemodel {} seed={}\n", env!("CARGO_PKG_VERSION"), self.global.seed)
    }

    fn emit(&self, body: &str) -> CliResult<()> {
        match &self.global.out {
            Some(path) => std::fs::write(path, body)?,
            None => print!("{body}"),
        }
        Ok(())
    }
}

/// `a:b:step` inclusive of `b` up to rounding.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| invalid(format!("bad --mi-grid {s:?}: {e}")))?;
    let [a, b, step] = parts[..] else {
        return Err(invalid(format!("--mi-grid wants start:stop:step, got {s:?}")));
    };
    if step.is_nan() || step <= 0.0 || b < a {
        return Err(invalid(format!("--mi-grid {s:?} is empty")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| a + k as f64 * step).collect())
}

fn load_alpha(path: &Option<PathBuf>, n: usize) -> CliResult<ConstraintNode> {
    let path = path
        .as_ref()
        .ok_or_else(|| invalid("--node corrected needs --alpha-table"))?;
    let t = AlphaTable::from_json(&std::fs::read_to_string(path)?)?;
    if t.n != n {
        return Err(invalid(format!("alpha table is for n={}, grid has n={n}", t.n)));
    }
    Ok(ConstraintNode::Corrected(t.corrector()))
}

fn constraint_node(name: &str, alpha: &Option<PathBuf>, n: usize) -> CliResult<ConstraintNode> {
    match name {
        "exact" => Ok(ConstraintNode::Exact),
        "approx" => Ok(ConstraintNode::Approx),
        "corrected" => load_alpha(alpha, n),
        other => Err(invalid(format!("unknown node {other:?}"))),
    }
}

fn verify_theorem(ctx: &mut Ctx, trials: usize, max_alphabet: usize) -> CliResult<()> {
    if trials == 0 || max_alphabet < 2 {
        return Err(invalid("need --trials >= 1 and --max-alphabet >= 2"));
    }
    let root = CounterRng::new(ctx.global.seed);
    let mut csv = String::from("trial,nx,ny,nz,residual\n");
    let mut worst = 0.0f64;
    for k in 0..trials {
        let mut rng = root.split(k as u64);
        let mut dim = || 2 + rng.below(max_alphabet - 1);
        let (nx, ny, nz) = (dim(), dim(), dim());
        let model = ChainModel::random(&mut rng, nx, ny, nz)?;
        let q = random_table(&mut rng, nx, nz);
        let r = model.decomposition_residual(&q)?;
        worst = worst.max(r.abs());
        writeln!(csv, "{k},{nx},{ny},{nz},{r:.6e}").unwrap();
    }
    csv.push_str(&ctx.csv_footer());
    ctx.emit(&csv)?;
    let pass = worst <= 1e-10;
    ctx.say(format!(
        "{} max residual {worst:.3e} over {trials} chains",
        if pass { "PASS" } else { "FAIL" }
    ));
    if pass {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("residual {worst:.3e} exceeds 1e-10")))
    }
}

fn train_minsum(ctx: &mut Ctx, degree: usize, sigmas: Vec<f64>, samples: usize, bins: usize) -> CliResult<()> {
    let sigmas = match sigmas.len() {
        1 => vec![sigmas[0]; degree],
        l if l == degree => sigmas,
        l => return Err(invalid(format!("{l} sigmas for degree {degree}"))),
    };
    let quantizer = ZQuantizer::new(bins, crate::minsum::DEFAULT_MAX_MAGNITUDE)?;
    let batch = simulate_batch(&sigmas, samples, ctx.global.seed, &quantizer)?;
    let table = train_table(&batch, &quantizer, &sigmas)?;
    let report = evaluate_table(&table.finalize(), &batch)?;
    let mut json = table.to_json()?;
    json.push('\n');
    ctx.emit(&json)?;
    ctx.say(format!(
        "trained {} bins on {samples} samples: in-sample ED {:.5} bits (min-sum {:.5}), soft MI {:.4}",
        table.num_bins(),
        report.empirical_ed,
        report.baseline_ed,
        report.soft_mi
    ));
    Ok(())
}

fn eval_minsum(ctx: &mut Ctx, table: &PathBuf, samples: usize) -> CliResult<()> {
    let table = PostTable::from_json(&std::fs::read_to_string(table)?)?;
    let (quantizer, sigmas) = ZQuantizer::from_bin_spec(&table.bin_spec)?;
    let batch = simulate_batch(&sigmas, samples, ctx.global.seed, &quantizer)?;
    let finalized = table.finalize();
    let report = evaluate_table(&finalized, &batch)?;
    let mut csv = String::from("bin,count,q0,q1\n");
    for (i, (d, b)) in finalized.iter().zip(&table.bins).enumerate() {
        writeln!(csv, "{i},{},{:.12e},{:.12e}", b.count, d.get(0), d.get(1)).unwrap();
    }
    csv.push_str(&ctx.csv_footer());
    ctx.emit(&csv)?;
    ctx.say(format!(
        "samples={} ed={:.6} stderr={:.6} soft_mi={:.6} minsum_ed={:.6} minsum_soft_mi={:.6}",
        report.samples,
        report.empirical_ed,
        report.empirical_ed_stderr,
        report.soft_mi,
        report.baseline_ed,
        report.baseline_soft_mi
    ));
    Ok(())
}

fn bench(ctx: &mut Ctx, max_n: usize, reps: usize) -> CliResult<()> {
    if !(2..=crate::permanent::RYSER_MAX).contains(&max_n) || reps == 0 {
        return Err(invalid("need 2 <= --max-n <= 16 and --reps >= 1"));
    }
    let root = CounterRng::new(ctx.global.seed);
    let mut csv = String::from("kernel,n,value\n");
    for n in 2..=max_n {
        let mut rng = root.split(n as u64);
        let dense = SquareMatrix::new(n, (0..n * n).map(|_| rng.uniform()).collect())?;
        let tail: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let sparse = SparseRows::new(
            n,
            (0..n)
                .map(|i| {
                    let mut cols: Vec<usize> = (0..n).collect();
                    rng.shuffle(&mut cols);
                    cols.truncate(3.min(n));
                    cols.sort_unstable();
                    cols.into_iter().map(|c| (c, rng.uniform() + (i == c) as u8 as f64)).collect()
                })
                .collect(),
        )?;
        let mut row = |name: &str, f: &dyn Fn() -> crate::Result<f64>| -> CliResult<()> {
            let start = Instant::now();
            let mut v = 0.0;
            for _ in 0..reps {
                v = f()?;
            }
            let micros = start.elapsed().as_secs_f64() * 1e6 / reps as f64;
            writeln!(csv, "{name},{n},{v:.12e}").unwrap();
            ctx.say(format!("{name:<12} n={n:<2} {micros:>12.2} us"));
            Ok(())
        };
        if n <= BRUTE_FORCE_MAX {
            row("bruteforce", &|| permanent_bruteforce(&dense))?;
        }
        row("ryser", &|| permanent_ryser(&dense))?;
        row("sparse", &|| Ok(permanent_sparse(&sparse)))?;
        row("uniform_rows", &|| Ok(permanent_uniform_rows(&tail)))?;
    }
    csv.push_str(&ctx.csv_footer());
    ctx.emit(&csv)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve_cmd(
    ctx: &mut Ctx,
    size: usize,
    snr_db: f64,
    node: &str,
    alpha_table: &Option<PathBuf>,
    iters: usize,
    damping: f64,
    puzzle: &Option<String>,
) -> CliResult<()> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(invalid("--damping must lie in (0, 1]"));
    }
    let root = CounterRng::new(ctx.global.seed);
    let puzzle = match puzzle {
        Some(text) => Puzzle::parse(text)?,
        None => Puzzle::random(size, &mut root.split(0))?,
    };
    let node = constraint_node(node, alpha_table, puzzle.side())?;
    let channel = ChannelModel::from_snr_db(snr_db)?;
    let obs = channel.observe_puzzle(&puzzle, &mut root.split(1));
    let config = BpConfig { max_iters: iters, damping };
    let r = bp_solve(&puzzle, &obs, &node, config);
    let mut csv = String::from("cell,truth,decision,confidence\n");
    for (k, (m, (&d, &t))) in r.marginals.iter().zip(r.decisions.iter().zip(puzzle.solution())).enumerate() {
        writeln!(csv, "{k},{},{},{:.12e}", t + 1, d + 1, m.max_prob()).unwrap();
    }
    csv.push_str(&ctx.csv_footer());
    if ctx.global.out.is_some() {
        ctx.emit(&csv)?;
    }
    ctx.say(format!(
        "solved={} iterations={} symbol_error_rate={:.6}",
        r.solved,
        r.iterations,
        r.symbol_error_rate()
    ));
    if r.degenerate_messages > 0 {
        ctx.say(format!("degenerate messages reset: {}", r.degenerate_messages));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn exit_chart(
    ctx: &mut Ctx,
    nodes: &[String],
    snr_list: &[f64],
    mi_grid: &str,
    trials: usize,
    size: usize,
    alpha_table: &Option<PathBuf>,
) -> CliResult<()> {
    let grid = parse_grid(mi_grid)?;
    if trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    let mut variants = Vec::new();
    for name in nodes {
        if name == "variable" {
            if snr_list.is_empty() {
                return Err(invalid("variable curves need --snr-list"));
            }
            variants.extend(snr_list.iter().map(|&snr_db| ExitNode::Variable { snr_db }));
        } else {
            variants.push(ExitNode::Constraint(constraint_node(name, alpha_table, size)?));
        }
    }
    let config = ExitConfig { n: size, trials, seed: ctx.global.seed };
    let mut csv = String::from("node,snr_db,ia_bits,ie_bits,stderr\n");
    for v in &variants {
        let snr = v.snr_db().map(|s| format!("{s}")).unwrap_or_default();
        for p in exit_curve(v, &grid, config)? {
            writeln!(csv, "{},{snr},{:.6},{:.6},{:.6}", v.name(), p.ia_target, p.ie, p.stderr).unwrap();
        }
        ctx.say(format!("{} {snr}: {} points", v.name(), grid.len()));
    }
    csv.push_str(&ctx.csv_footer());
    ctx.emit(&csv)
}

fn train_sudoku_alpha(ctx: &mut Ctx, batch: usize, size: usize, snr: &Option<Vec<f64>>, budget: usize) -> CliResult<()> {
    if batch == 0 {
        return Err(invalid("--batch must be at least 1"));
    }
    let mix = snr.clone().unwrap_or_else(|| DEFAULT_SNR_MIX.to_vec());
    let matrices = harvest_batch(size, &mix, batch, ctx.global.seed)?;
    let frozen = FrozenBatch::new(&matrices)?;
    let fit = fit_alpha(&frozen, budget);
    let mut json = AlphaTable::new(size, fit.corrector()).to_json()?;
    json.push('\n');
    ctx.emit(&json)?;
    ctx.say(format!(
        "objective {:.6} bits (alpha=0.5: {:.6}, alpha=1: {:.6}) on {} matrices, {} evaluations{}{}",
        fit.objective(),
        fit.baseline_half,
        fit.baseline_one,
        fit.batch_size,
        fit.fit.evaluations,
        if fit.fit.flat { ", flat objective" } else { "" },
        if fit.fit.budget_exhausted { ", budget exhausted" } else { "" },
    ));
    Ok(())
}

pub fn dispatch(cli: &Cli) -> CliResult<String> {
    let mut ctx = Ctx {
        global: &cli.global,
        summary: String::new(),
    };
    match &cli.command {
        Command::VerifyTheorem { trials, max_alphabet } => verify_theorem(&mut ctx, *trials, *max_alphabet),
        Command::TrainMinsum { degree, sigmas, samples, bins } => {
            train_minsum(&mut ctx, *degree, sigmas.clone(), *samples, *bins)
        }
        Command::EvalMinsum { table, samples } => eval_minsum(&mut ctx, table, *samples),
        Command::Bench { max_n, reps } => bench(&mut ctx, *max_n, *reps),
        Command::Solve { size, snr_db, node, alpha_table, iters, damping, puzzle } => {
            solve_cmd(&mut ctx, *size, *snr_db, node, alpha_table, *iters, *damping, puzzle)
        }
        Command::ExitChart { node, snr_list, mi_grid, trials, size, alpha_table } => {
            exit_chart(&mut ctx, node, snr_list, mi_grid, *trials, *size, alpha_table)
        }
        Command::TrainSudokuAlpha { batch, size, snr_list, budget } => {
            train_sudoku_alpha(&mut ctx, *batch, *size, snr_list, *budget)
        }
    }
    .map(|_| ctx.summary)
}

/// Parse `std::env::args`, run, and return the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return 1;
        }
    }
    match dispatch(&cli) {
        Ok(summary) => {
            if !cli.global.quiet {
                print!("{summary}");
            }
            0
        }
        Err(e) => {
            let (CliError::Validation(msg) | CliError::Numerical(msg)) = &e;
            eprintln!("error: {msg}");
            e.exit_code()
        }
    }
}
