//! The `mconc` command line.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure,
//! 3 I/O or parse error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use markov_concentration::bounds::{self, BoundId, BoundQuery, LhsMethod, SharpnessFamily};
use markov_concentration::chain::{Observable, StationaryChain};
use markov_concentration::chain_file::ChainSpec;
use markov_concentration::exact::{exact_distribution, exact_raw_moments, Budget};
use markov_concentration::montecarlo::{empirical_moment_lp, empirical_tail_lp, McConfig};
use markov_concentration::proof_lab::{cases::generate_cases, verify_lemma, LemmaId};
use markov_concentration::spectral::{e_pi, interpolated_gap_bound, lp_norm_bracket, lp_norm_upper};
use markov_concentration::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod report;

pub use report::{emit_report, Cell, Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Library(Error),
    Usage(String),
    Io(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(Error::ChainFile(_)) | CliError::Io(_) => EXIT_IO,
            CliError::Library(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Verification(_) => EXIT_VERIFICATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Usage(s) | CliError::Io(s) | CliError::Verification(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mconc", version, about = "Concentration of additive functionals of finite stationary Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Report path (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, default_value = "csv", global = true)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Cap on multiply-adds in exact recursions.
    #[arg(long, default_value_t = Budget::default().max_ops)]
    pub max_ops: f64,
    /// Cap on enumerated trajectories.
    #[arg(long, default_value_t = Budget::default().max_paths)]
    pub max_paths: f64,
    /// Cap on distribution-table cells.
    #[arg(long, default_value_t = Budget::default().max_cells)]
    pub max_cells: f64,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget { max_ops: self.max_ops, max_paths: self.max_paths, max_cells: self.max_cells }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Required with `--method mc`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for simulation (0: all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

impl MethodArgs {
    fn mc(&self) -> CliResult<McConfig> {
        Ok(McConfig::new(self.trials, require_seed(self.seed, "Monte Carlo")?).with_workers(self.workers))
    }

    fn lhs(&self) -> CliResult<LhsMethod> {
        Ok(match self.method {
            Method::Exact => LhsMethod::Exact,
            Method::Mc => LhsMethod::MonteCarlo(self.mc()?),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print N, pi, lambda_pi and reversibility; optionally bracket ||A - E_pi||_{L_p}.
    Analyze {
        /// Chain spec file (alternative to --chain).
        path: Option<PathBuf>,
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        /// Seeds the randomized lower bound for p outside {1, 2, inf}.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// E|S_n/n - mu|^q, or raw moments E[S_n^k] for k <= m.
    Moments {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: Output,
    },
    /// P[|S_n/n - mu| >= a].
    Tail {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a bound; with --chain, compare it against the left side.
    Bound {
        #[arg(long)]
        kind: BoundId,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: Option<f64>,
        /// Tail threshold in units of ||f||_q.
        #[arg(long)]
        a: Option<f64>,
        /// Spectral parameter when no chain is given.
        #[arg(long)]
        lambda: Option<f64>,
        /// Norm of f when no chain is given.
        #[arg(long)]
        norm: Option<f64>,
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Moment-bound constant.
        #[arg(long = "C", default_value_t = 1.0)]
        big_c: f64,
        /// Tail-rate constant.
        #[arg(long = "c", default_value_t = 1.0)]
        small_c: f64,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Check a lemma on seeded instances; exits 2 if any check fails.
    Verify {
        /// increasing, alternate, splitting, finb, product_bound, or all.
        #[arg(long)]
        lemma: String,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Largest m for product_bound.
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Exact left side over the C = 1 kernel on the two-state families.
    Sharpness {
        /// theorem or subtwo.
        #[arg(long, default_value = "theorem")]
        family: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Walk lengths; default: the smallest admissible n times 1, 4 and 16.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo moment and/or tail estimates.
    Simulate {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        /// Coordinate norm for vector observables.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("{what} is randomized and needs an explicit --seed")))
}

fn load_chain(path: &Path) -> CliResult<(StationaryChain, Option<Observable>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ChainSpec::parse(&text)?.build()?)
}

fn load_with_f(path: &Path) -> CliResult<(StationaryChain, Observable)> {
    match load_chain(path)? {
        (chain, Some(f)) => Ok((chain, f)),
        (_, None) => Err(CliError::Usage(format!("{}: chain spec has no observable \"f\"", path.display()))),
    }
}

fn write(table: &Table, output: &Output) -> CliResult<()> {
    emit_report(table, output.format, output.out.as_deref()).map_err(|e| CliError::Io(e.to_string()))
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|&x| report::format_float(x)).collect::<Vec<_>>().join(";")
}

fn analyze(path: &Path, p: Option<f64>, seed: Option<u64>, output: &Output) -> CliResult<()> {
    let (chain, _) = load_chain(path)?;
    let mut header = vec!["n_states", "pi", "lambda", "reversible"];
    let mut row: Vec<Cell> = vec![chain.n_states().into(), joined(chain.pi().as_slice()).into(), chain.lambda().into(), chain.reversible().into()];
    if let Some(p) = p {
        let m = chain.matrix() - e_pi(chain.pi());
        let (lower, upper) = match seed {
            Some(seed) => {
                let b = lp_norm_bracket(&m, chain.pi(), p, 1, seed)?;
                (Cell::from(b.lower), b.upper)
            }
            None => (Cell::Empty, lp_norm_upper(&m, chain.pi(), p)?),
        };
        header.extend(["p", "norm_lower", "norm_upper", "interpolated_gap_bound"]);
        row.extend([p.into(), lower, upper.into(), interpolated_gap_bound(chain.lambda().min(1.0), p)?.into()]);
    }
    let mut table = Table::new(&header);
    table.push(row);
    write(&table, output)
}

fn moments(path: &Path, n: usize, q: Option<f64>, m: Option<usize>, method: &MethodArgs, budget: &Budget, output: &Output) -> CliResult<()> {
    let (chain, f) = load_with_f(path)?;
    let mut table = Table::new(&["statistic", "n", "order", "method", "value", "stderr", "trials", "seed"]);
    if let Some(k_max) = m {
        if method.method == Method::Mc {
            return Err(CliError::Usage("raw moments (--m) are exact only".into()));
        }
        let moments = exact_raw_moments(&chain, &f, n, k_max, budget)?;
        for (k, value) in moments.raw.iter().enumerate() {
            table.push(vec!["raw_moment".into(), n.into(), (k as f64).into(), "exact".into(), (*value).into(), Cell::Empty, Cell::Empty, Cell::Empty]);
        }
    }
    if let Some(q) = q {
        let row = match method.method {
            Method::Exact => {
                if !f.is_scalar() {
                    return Err(CliError::Usage("exact central moments need a scalar observable; use --method mc".into()));
                }
                let v = bounds::exact_scalar_moment(&chain, &f, n, q, budget)?;
                vec!["central_abs_moment".into(), n.into(), q.into(), "exact".into(), v.into(), Cell::Empty, Cell::Empty, Cell::Empty]
            }
            Method::Mc => {
                let cfg = method.mc()?;
                let est = empirical_moment_lp(&chain, &f, n, q, 2.0, &cfg)?;
                vec!["central_abs_moment".into(), n.into(), q.into(), "mc".into(), est.value.into(), est.stderr.into(), est.trials.into(), est.seed.into()]
            }
        };
        table.push(row);
    }
    if table.rows.is_empty() {
        return Err(CliError::Usage("moments needs --q or --m".into()));
    }
    write(&table, output)
}

fn tail(path: &Path, n: usize, a: f64, method: &MethodArgs, budget: &Budget, output: &Output) -> CliResult<()> {
    let (chain, f) = load_with_f(path)?;
    let mut table = Table::new(&["n", "a", "method", "prob", "stderr", "trials", "seed"]);
    let row = match method.method {
        Method::Exact => {
            let mean = f.mean(chain.pi())?[0];
            let prob = exact_distribution(&chain, &f, n, budget)?.tail(n, mean, a);
            vec![n.into(), a.into(), "exact".into(), prob.into(), Cell::Empty, Cell::Empty, Cell::Empty]
        }
        Method::Mc => {
            let est = empirical_tail_lp(&chain, &f, n, a, 2.0, &method.mc()?)?;
            vec![n.into(), a.into(), "mc".into(), est.value.into(), est.stderr.into(), est.trials.into(), est.seed.into()]
        }
    };
    table.push(row);
    write(&table, output)
}

const BOUND_HEADER: [&str; 12] = ["bound_id", "q", "p", "n", "lambda", "a", "C", "rhs", "lhs", "lhs_method", "ratio", "valid"];

fn bound_row(r: &bounds::BoundReport) -> Vec<Cell> {
    vec![
        r.bound.name().into(),
        r.q.into(),
        r.p.into(),
        r.n.into(),
        r.lambda.into(),
        r.a.into(),
        r.constant.into(),
        r.rhs.into(),
        r.lhs.into(),
        r.lhs_method.map(|m| m.name()).into(),
        r.ratio.into(),
        r.valid.into(),
    ]
}

#[allow(clippy::too_many_arguments)]
fn bound(
    kind: BoundId,
    q: f64,
    n: usize,
    p: Option<f64>,
    a: Option<f64>,
    lambda: Option<f64>,
    norm: Option<f64>,
    chain: Option<&Path>,
    big_c: f64,
    small_c: f64,
    method: &MethodArgs,
    budget: &Budget,
    output: &Output,
) -> CliResult<()> {
    let constant = if kind == BoundId::Tail { small_c } else { big_c };
    let query = BoundQuery { bound: kind, n, q, p, a, constant };
    let report = match chain {
        Some(path) => {
            if lambda.is_some() || norm.is_some() {
                return Err(CliError::Usage("--lambda and --norm are taken from the chain when --chain is given".into()));
            }
            let (chain, f) = load_with_f(path)?;
            bounds::compare(&query, &chain, &f, method.lhs()?, budget)?
        }
        None => {
            let lambda = lambda.ok_or_else(|| CliError::Usage("bound needs --lambda or --chain".into()))?;
            bounds::evaluate(&query, lambda, norm.unwrap_or(1.0))?
        }
    };
    let mut table = Table::new(&BOUND_HEADER);
    table.push(bound_row(&report));
    write(&table, output)
}

fn verify(lemma: &str, cases: usize, seed: Option<u64>, m: Option<usize>, budget: &Budget, output: &Output) -> CliResult<()> {
    let ids: Vec<LemmaId> = if lemma == "all" { LemmaId::ALL.to_vec() } else { vec![lemma.parse()?] };
    let mut table = Table::new(&["lemma", "instance", "lhs", "rhs", "ratio", "pass", "conservative", "informational"]);
    let mut failures = 0usize;
    for id in ids {
        let randomized = matches!(id, LemmaId::Increasing | LemmaId::Alternate | LemmaId::Splitting);
        let mut rng = ChaCha8Rng::seed_from_u64(if randomized { require_seed(seed, "verify")? } else { 0 });
        let mut instances = generate_cases(id, cases, &mut rng)?;
        if let Some(m_max) = m {
            instances.retain(|c| !matches!(c, markov_concentration::proof_lab::LemmaCase::ProductBound { m } if *m > m_max));
        }
        for case in &instances {
            let r = verify_lemma(case, budget)?;
            failures += usize::from(r.failed());
            table.push(vec![
                r.lemma.name().into(),
                r.instance.clone().into(),
                r.lhs.into(),
                r.rhs.into(),
                r.ratio.into(),
                r.pass.into(),
                r.conservative.into(),
                r.informational.into(),
            ]);
        }
    }
    write(&table, output)?;
    if failures > 0 {
        return Err(CliError::Verification(format!("{failures} lemma check(s) failed")));
    }
    Ok(())
}

fn sharpness(family: &str, lambdas: &[f64], qs: &[f64], ns: &[usize], eps: Option<f64>, budget: &Budget, output: &Output) -> CliResult<()> {
    let fam: SharpnessFamily = family.parse()?;
    if lambdas.is_empty() || qs.is_empty() {
        return Err(CliError::Usage("sharpness needs --lambda and --q".into()));
    }
    let mut table = Table::new(&["family", "lambda", "q", "n", "eps", "ratio"]);
    for &lambda in lambdas {
        for &q in qs {
            let lengths = if ns.is_empty() {
                let least = match fam {
                    SharpnessFamily::Theorem => q / (1.0 - lambda),
                    SharpnessFamily::Subtwo => 1.0 / (1.0 - lambda),
                };
                let base = bounds::tolerant_ceil(least).max(1);
                vec![base, 4 * base, 16 * base]
            } else {
                ns.to_vec()
            };
            for n in lengths {
                let r = bounds::sharpness_ratio(fam, lambda, q, n, eps, budget)?;
                let e = eps.unwrap_or(0.5);
                table.push(vec![family.into(), lambda.into(), q.into(), n.into(), e.into(), r.into()]);
            }
        }
    }
    write(&table, output)
}

#[allow(clippy::too_many_arguments)]
fn simulate(path: &Path, n: usize, q: Option<f64>, a: Option<f64>, p: f64, trials: usize, seed: Option<u64>, workers: usize, output: &Output) -> CliResult<()> {
    let (chain, f) = load_with_f(path)?;
    let cfg = McConfig::new(trials, require_seed(seed, "simulate")?).with_workers(workers);
    let mut table = Table::new(&["statistic", "n", "param", "value", "stderr", "trials", "seed"]);
    if let Some(q) = q {
        let est = empirical_moment_lp(&chain, &f, n, q, p, &cfg)?;
        table.push(vec!["moment".into(), n.into(), q.into(), est.value.into(), est.stderr.into(), est.trials.into(), est.seed.into()]);
    }
    if let Some(a) = a {
        let est = empirical_tail_lp(&chain, &f, n, a, p, &cfg)?;
        table.push(vec!["tail".into(), n.into(), a.into(), est.value.into(), est.stderr.into(), est.trials.into(), est.seed.into()]);
    }
    if table.rows.is_empty() {
        return Err(CliError::Usage("simulate needs --q or --a".into()));
    }
    write(&table, output)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze { path, chain, p, seed, output } => {
            let path = match (path, chain) {
                (Some(p), None) | (None, Some(p)) => p,
                _ => return Err(CliError::Usage("analyze needs exactly one chain spec".into())),
            };
            analyze(&path, p, seed, &output)
        }
        Command::Moments { chain, n, q, m, method, budget, output } => moments(&chain, n, q, m, &method, &budget.budget(), &output),
        Command::Tail { chain, n, a, method, budget, output } => tail(&chain, n, a, &method, &budget.budget(), &output),
        Command::Bound { kind, q, n, p, a, lambda, norm, chain, big_c, small_c, method, budget, output } => {
            bound(kind, q, n, p, a, lambda, norm, chain.as_deref(), big_c, small_c, &method, &budget.budget(), &output)
        }
        Command::Verify { lemma, cases, seed, m, budget, output } => verify(&lemma, cases, seed, m, &budget.budget(), &output),
        Command::Sharpness { family, lambda, q, n, eps, budget, output } => sharpness(&family, &lambda, &q, &n, eps, &budget.budget(), &output),
        Command::Simulate { chain, n, q, a, p, trials, seed, workers, output } => simulate(&chain, n, q, a, p, trials, seed, workers, &output),
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
