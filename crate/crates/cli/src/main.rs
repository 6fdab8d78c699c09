use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use boolmin::bench::{
    aggregate, format_stats_table, read_records, run_plan, time_distribution, write_stats_csv, BenchAlgo,
    BenchPlan, GroupKey,
};
use boolmin::cnf::{parse_dimacs, parse_qdimacs};
use boolmin::enumeration::{FormulaSpace, Sampler};
use boolmin::error::{BenchError, FormulaError, MinimizeError, QbfError, SolverError};
use boolmin::{minimize, Algorithm, Connective, Formula, MinimizeConfig, QbfBackend, QbfMode, QbfResult, RunStatus, SatBackend, SatResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "boolmin", version, about = "Minimise propositional formulae")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimise one formula.
    Minimize(MinimizeArgs),
    /// Sample random formulae uniformly by size.
    Generate(GenerateArgs),
    /// Run the benchmark protocol and write a CSV of records.
    Bench(BenchArgs),
    /// Aggregate a benchmark CSV.
    Stats(StatsArgs),
    /// DIMACS solver front end (exit 10/20, `v` lines).
    #[command(hide = true)]
    SatSolve { file: PathBuf },
    /// QDIMACS solver front end (exit 10/20, `V` lines for the outer block).
    #[command(hide = true)]
    QbfSolve {
        file: PathBuf,
        #[arg(long)]
        no_model: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Brute,
    Sat,
    Qbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Exact,
}

#[derive(Args)]
struct OutputSpaceArgs {
    /// Disallow the constant `false` in outputs.
    #[arg(long)]
    no_false_leaf: bool,
    /// Binary connectives allowed in outputs.
    #[arg(long, value_delimiter = ',', default_value = "and,or,implies")]
    output_connectives: Vec<Connective>,
    /// `internal` or `external:PATH`; defaults to $BOOLMIN_SAT_SOLVER if set.
    #[arg(long)]
    sat_solver: Option<String>,
    /// `internal` or `external:PATH`; defaults to $BOOLMIN_QBF_SOLVER if set.
    #[arg(long)]
    qbf_solver: Option<String>,
}

#[derive(Args)]
struct MinimizeArgs {
    /// Formula text; alternatively use --file.
    formula: Option<String>,
    #[arg(long, conflicts_with = "formula")]
    file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "qbf")]
    algo: AlgoArg,
    #[arg(long, value_enum, default_value = "fast")]
    mode: ModeArg,
    /// Seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Seed for the internal SAT solver's randomised decisions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    space: OutputSpaceArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Defaults to round(sqrt(size)).
    #[arg(long)]
    vars: Option<usize>,
    #[arg(long)]
    no_not: bool,
    #[arg(long, value_delimiter = ',', default_value = "and,or")]
    connectives: Vec<Connective>,
}

#[derive(Args)]
struct BenchArgs {
    /// `A..B` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "1..20")]
    sizes: String,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "brute,sat,qbf-fast")]
    algos: Vec<BenchAlgo>,
    /// Seconds per run.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long)]
    jobs: Option<usize>,
    /// Fixed variable count instead of round(sqrt(size)).
    #[arg(long)]
    vars: Option<usize>,
    #[command(flatten)]
    space: OutputSpaceArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Stats,
    Times,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Table,
}

#[derive(Args)]
struct StatsArgs {
    file: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "size,algo")]
    group_by: Vec<GroupKey>,
    #[arg(long, value_enum, default_value = "stats")]
    emit: EmitArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<FormulaError> for Failure {
    fn from(e: FormulaError) -> Self {
        let code = match e {
            FormulaError::Parse { .. } | FormulaError::UnknownConnective(_) => EXIT_PARSE,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<MinimizeError> for Failure {
    fn from(e: MinimizeError) -> Self {
        if let MinimizeError::Formula(f) = e {
            return f.into();
        }
        let code = match &e {
            MinimizeError::Space(_) | MinimizeError::Config(_) => EXIT_USAGE,
            MinimizeError::Qbf(QbfError::ExpansionCap { .. }) => EXIT_USAGE,
            MinimizeError::Solver(SolverError::Timeout { .. })
            | MinimizeError::Qbf(QbfError::Solver(SolverError::Timeout { .. })) => EXIT_TIMEOUT,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Minimize(m) => m.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn parse_backend(flag: Option<&str>, env: &str) -> Result<Option<PathBuf>, Failure> {
    let value = match flag {
        Some(v) => v.to_string(),
        None => match std::env::var(env) {
            Ok(path) if !path.is_empty() => return Ok(Some(PathBuf::from(path))),
            _ => return Ok(None),
        },
    };
    if value == "internal" {
        return Ok(None);
    }
    match value.strip_prefix("external:") {
        Some(path) if !path.is_empty() => Ok(Some(PathBuf::from(path))),
        _ => Err(Failure::usage(format!(
            "solver must be `internal` or `external:PATH`, got `{value}`"
        ))),
    }
}

fn parse_timeout(seconds: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(seconds).map_err(|_| Failure::usage(format!("invalid timeout `{seconds}`")))
}

impl OutputSpaceArgs {
    fn config(&self) -> Result<MinimizeConfig, Failure> {
        let mut cfg = MinimizeConfig {
            output_conns: self.output_connectives.clone(),
            allow_false_leaf: !self.no_false_leaf,
            ..MinimizeConfig::default()
        };
        if let Some(path) = parse_backend(self.sat_solver.as_deref(), "BOOLMIN_SAT_SOLVER")? {
            cfg.sat_backend = SatBackend::External(path);
        }
        if let Some(path) = parse_backend(self.qbf_solver.as_deref(), "BOOLMIN_QBF_SOLVER")? {
            cfg.qbf_backend = QbfBackend::External(path);
        }
        Ok(cfg)
    }
}

fn cmd_minimize(args: MinimizeArgs) -> Result<(), Failure> {
    let text = match (&args.formula, &args.file) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        _ => return Err(Failure::usage("give a formula or --file")),
    };
    let formula: Formula = text.trim().parse()?;
    let mut cfg = args.space.config()?;
    cfg.timeout = args.timeout.map(parse_timeout).transpose()?;
    cfg.solver.seed = args.seed;
    cfg.qbf_mode = match args.mode {
        ModeArg::Fast => QbfMode::Fast,
        ModeArg::Exact => QbfMode::Exact,
    };
    let (algorithm, name) = match args.algo {
        AlgoArg::Brute => (Algorithm::BruteForce, "brute"),
        AlgoArg::Sat => (Algorithm::Sat, "sat"),
        AlgoArg::Qbf => match args.mode {
            ModeArg::Fast => (Algorithm::Qbf, "qbf-fast"),
            ModeArg::Exact => (Algorithm::Qbf, "qbf-exact"),
        },
    };
    let result = minimize(&formula, algorithm, &cfg)?;
    if result.status == RunStatus::Timeout {
        return Err(Failure {
            code: EXIT_TIMEOUT,
            message: format!("timeout after {:.3}s", result.elapsed.as_secs_f64()),
        });
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{}", result.output)?;
    writeln!(out, "size: {}", result.output_size)?;
    writeln!(out, "input_size: {}", formula.size())?;
    writeln!(out, "algo: {name}")?;
    writeln!(out, "seed: {}", args.seed)?;
    writeln!(out, "candidates_tested: {}", result.candidates_tested)?;
    writeln!(out, "solver_calls: {}", result.solver_calls)?;
    writeln!(out, "time_ms: {:.3}", result.elapsed.as_secs_f64() * 1e3)?;
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let vars = args.vars.unwrap_or_else(|| boolmin::bench::variable_count(args.size));
    let space = FormulaSpace::new(boolmin::bench::variable_names(vars), &args.connectives)
        .with_not(!args.no_not)
        .with_false(false);
    let sampler = Sampler::new(space, args.size).map_err(|e| Failure::usage(e.to_string()))?;
    eprintln!(
        "# seed={} size={} vars={} count={} support={}",
        args.seed,
        args.size,
        vars,
        args.count,
        sampler.support()
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = BufWriter::new(io::stdout().lock());
    for _ in 0..args.count {
        writeln!(out, "{}", sampler.sample(&mut rng))?;
    }
    out.flush()?;
    Ok(())
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::usage(format!("invalid --sizes `{text}`"));
    let sizes: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let plan = BenchPlan {
        sizes: parse_sizes(&args.sizes)?,
        count: args.count,
        seed: args.seed,
        algos: args.algos.clone(),
        timeout: Some(parse_timeout(args.timeout)?),
        vars: args.vars,
        minimize: args.space.config()?,
        ..BenchPlan::default()
    };
    if plan.algos.is_empty() {
        return Err(Failure::usage("--algos is empty"));
    }
    let jobs = match args.jobs {
        Some(0) => return Err(Failure::usage("--jobs must be positive")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    eprintln!(
        "# seed={} sizes={} count={} algos={} timeout={}s jobs={jobs}",
        plan.seed,
        args.sizes,
        plan.count,
        plan.algos.iter().map(|a| a.name()).collect::<Vec<_>>().join(","),
        args.timeout,
    );
    let summary = match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            run_plan(&plan, BufWriter::new(file), jobs)?
        }
        None => run_plan(&plan, io::stdout().lock(), jobs)?,
    };
    eprintln!("# records={} timeouts={}", summary.records, summary.timeouts);
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), Failure> {
    let file = File::open(&args.file).map_err(|e| Failure::usage(format!("{}: {e}", args.file.display())))?;
    let records = read_records(io::BufReader::new(file))?;
    let mut out = io::stdout().lock();
    match args.emit {
        EmitArg::Stats => {
            let rows = aggregate(&records, &args.group_by);
            match args.format {
                FormatArg::Csv => write_stats_csv(&mut out, &rows)?,
                FormatArg::Table => out.write_all(format_stats_table(&rows).as_bytes())?,
            }
        }
        EmitArg::Times => {
            let mut keys: Vec<(usize, BenchAlgo)> = records.iter().map(|r| (r.size, r.algo)).collect();
            keys.sort();
            keys.dedup();
            let sep = match args.format {
                FormatArg::Csv => ",",
                FormatArg::Table => "\t",
            };
            writeln!(out, "size{sep}algo{sep}rank{sep}time_ms")?;
            for (size, algo) in keys {
                for (rank, t) in time_distribution(&records, size, algo).iter().enumerate() {
                    writeln!(out, "{size}{sep}{algo}{sep}{}{sep}{t}", rank + 1)?;
                }
            }
        }
    }
    Ok(())
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_sat_solve(file: PathBuf) -> Result<u8, Failure> {
    let cnf = parse_dimacs(&read_input(&file)?).map_err(|e| Failure::usage(e.to_string()))?;
    let result = boolmin::sat::solve(&cnf, None).map_err(MinimizeError::from)?;
    let mut out = io::stdout().lock();
    match result {
        SatResult::Unsat => {
            writeln!(out, "s UNSATISFIABLE")?;
            Ok(20)
        }
        SatResult::Sat(model) => {
            writeln!(out, "s SATISFIABLE")?;
            let lits: Vec<String> = (1..=cnf.num_vars)
                .map(|v| if model.value(v) { v.to_string() } else { format!("-{v}") })
                .collect();
            writeln!(out, "v {} 0", lits.join(" "))?;
            Ok(10)
        }
    }
}

fn cmd_qbf_solve(file: PathBuf, no_model: bool) -> Result<u8, Failure> {
    let q = parse_qdimacs(&read_input(&file)?).map_err(|e| Failure::usage(e.to_string()))?;
    let result = boolmin::qbf::solve_expansion(&q, None).map_err(MinimizeError::from)?;
    let mut out = io::stdout().lock();
    match result {
        QbfResult::False => {
            writeln!(out, "s cnf 0")?;
            Ok(20)
        }
        QbfResult::True(model) => {
            writeln!(out, "s cnf 1")?;
            if !no_model {
                for (v, value) in model {
                    writeln!(out, "V {}{v} 0", if value { "" } else { "-" })?;
                }
            }
            Ok(10)
        }
        QbfResult::TrueWithoutModel => {
            writeln!(out, "s cnf 1")?;
            Ok(10)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Minimize(a) => cmd_minimize(a).map(|()| 0),
        Command::Generate(a) => cmd_generate(a).map(|()| 0),
        Command::Bench(a) => cmd_bench(a).map(|()| 0),
        Command::Stats(a) => cmd_stats(a).map(|()| 0),
        Command::SatSolve { file } => cmd_sat_solve(file),
        Command::QbfSolve { file, no_model } => cmd_qbf_solve(file, no_model),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
