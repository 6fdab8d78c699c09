//! Benchmark harness: random instances, timed minimisation runs, CSV
//! records and aggregate statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::enumeration::{FormulaSpace, Sampler};
use crate::error::BenchError;
use crate::formula::{equivalent_tt, Connective, Formula};
use crate::minimize::{minimize, Algorithm, MinimizeConfig, QbfMode, RunStatus};

pub const CSV_HEADER: [&str; 11] = [
    "seed",
    "size",
    "instance",
    "algo",
    "status",
    "time_ms",
    "input_formula",
    "output_formula",
    "output_size",
    "solver_calls",
    "candidates_tested",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchAlgo {
    Brute,
    Sat,
    QbfFast,
    QbfExact,
}

impl BenchAlgo {
    pub const ALL: [BenchAlgo; 4] = [BenchAlgo::Brute, BenchAlgo::Sat, BenchAlgo::QbfFast, BenchAlgo::QbfExact];

    pub fn name(self) -> &'static str {
        match self {
            BenchAlgo::Brute => "brute",
            BenchAlgo::Sat => "sat",
            BenchAlgo::QbfFast => "qbf-fast",
            BenchAlgo::QbfExact => "qbf-exact",
        }
    }

    fn configure(self, base: &MinimizeConfig) -> (Algorithm, MinimizeConfig) {
        let mut cfg = base.clone();
        let algo = match self {
            BenchAlgo::Brute => Algorithm::BruteForce,
            BenchAlgo::Sat => Algorithm::Sat,
            BenchAlgo::QbfFast => {
                cfg.qbf_mode = QbfMode::Fast;
                Algorithm::Qbf
            }
            BenchAlgo::QbfExact => {
                cfg.qbf_mode = QbfMode::Exact;
                Algorithm::Qbf
            }
        };
        (algo, cfg)
    }
}

impl fmt::Display for BenchAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchAlgo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" | "bruteforce" => Ok(BenchAlgo::Brute),
            "sat" => Ok(BenchAlgo::Sat),
            "qbf-fast" | "qbf" => Ok(BenchAlgo::QbfFast),
            "qbf-exact" => Ok(BenchAlgo::QbfExact),
            _ => Err(format!("unknown algorithm `{s}` (expected brute, sat, qbf-fast or qbf-exact)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub algos: Vec<BenchAlgo>,
    pub timeout: Option<Duration>,
    /// Fixed variable count; `None` uses [`variable_count`].
    pub vars: Option<usize>,
    pub input_conns: Vec<Connective>,
    pub input_not: bool,
    /// Output space and backends; its timeout is replaced by `timeout`.
    pub minimize: MinimizeConfig,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            sizes: (1..=20).collect(),
            count: 100,
            seed: 42,
            algos: vec![BenchAlgo::Brute, BenchAlgo::Sat, BenchAlgo::QbfFast],
            timeout: Some(Duration::from_secs(60)),
            vars: None,
            input_conns: vec![Connective::And, Connective::Or],
            input_not: true,
            minimize: MinimizeConfig::default(),
        }
    }
}

/// `round(√size)`, at least 1.
pub fn variable_count(size: usize) -> usize {
    ((size as f64).sqrt().round() as usize).max(1)
}

pub fn variable_names(n: usize) -> Vec<Arc<str>> {
    const NAMES: [&str; 5] = ["p", "q", "r", "s", "t"];
    (0..n)
        .map(|i| match NAMES.get(i) {
            Some(name) => Arc::from(*name),
            None => Arc::from(format!("x{i}")),
        })
        .collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one instance; independent of the other sizes in the plan.
pub fn instance_seed(seed: u64, size: usize, index: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ size as u64) ^ index as u64)
}

impl BenchPlan {
    pub fn input_space(&self, size: usize) -> FormulaSpace {
        let n = self.vars.unwrap_or_else(|| variable_count(size));
        FormulaSpace::new(variable_names(n), &self.input_conns)
            .with_not(self.input_not)
            .with_false(false)
    }

    pub fn instance(&self, size: usize, index: usize) -> Result<Formula, BenchError> {
        let sampler = Sampler::new(self.input_space(size), size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(self.seed, size, index));
        Ok(sampler.sample(&mut rng))
    }

    /// Every instance of the plan in record order.
    pub fn instances(&self) -> Result<Vec<(usize, usize, Formula)>, BenchError> {
        let mut out = Vec::with_capacity(self.sizes.len() * self.count);
        for &size in &self.sizes {
            let sampler = Sampler::new(self.input_space(size), size)?;
            for index in 0..self.count {
                let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(self.seed, size, index));
                out.push((size, index, sampler.sample(&mut rng)));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub seed: u64,
    pub size: usize,
    pub instance: usize,
    pub algo: BenchAlgo,
    pub status: RunStatus,
    pub time_ms: f64,
    pub input_formula: String,
    /// Empty on timeout.
    pub output_formula: String,
    pub output_size: Option<usize>,
    pub solver_calls: u64,
    pub candidates_tested: u64,
}

fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Ok => "ok",
        RunStatus::Timeout => "timeout",
    }
}

impl BenchRecord {
    fn fields(&self) -> [String; 11] {
        [
            self.seed.to_string(),
            self.size.to_string(),
            self.instance.to_string(),
            self.algo.to_string(),
            status_name(self.status).to_string(),
            format!("{:.3}", self.time_ms),
            self.input_formula.clone(),
            self.output_formula.clone(),
            self.output_size.map(|s| s.to_string()).unwrap_or_default(),
            self.solver_calls.to_string(),
            self.candidates_tested.to_string(),
        ]
    }

    fn from_fields(row: &csv::StringRecord, line: u64) -> Result<Self, BenchError> {
        let bad = |what: &str| BenchError::Malformed(format!("line {line}: bad {what}"));
        if row.len() != CSV_HEADER.len() {
            return Err(BenchError::Malformed(format!(
                "line {line}: expected {} fields, found {}",
                CSV_HEADER.len(),
                row.len()
            )));
        }
        let num = |i: usize| row[i].parse::<u64>().map_err(|_| bad(CSV_HEADER[i]));
        let status = match &row[4] {
            "ok" => RunStatus::Ok,
            "timeout" => RunStatus::Timeout,
            _ => return Err(bad("status")),
        };
        let output_size = match &row[8] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("output_size"))?),
        };
        if (status == RunStatus::Ok) != output_size.is_some() {
            return Err(bad("output_size for status"));
        }
        Ok(BenchRecord {
            seed: num(0)?,
            size: num(1)? as usize,
            instance: num(2)? as usize,
            algo: row[3].parse().map_err(|_| bad("algo"))?,
            status,
            time_ms: row[5].parse().map_err(|_| bad("time_ms"))?,
            input_formula: row[6].to_string(),
            output_formula: row[7].to_string(),
            output_size,
            solver_calls: num(9)?,
            candidates_tested: num(10)?,
        })
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

/// Minimises one formula with one algorithm and builds its record.
pub fn run_instance(
    plan: &BenchPlan,
    size: usize,
    index: usize,
    input: &Formula,
    algo: BenchAlgo,
) -> Result<BenchRecord, BenchError> {
    let mut base = plan.minimize.clone();
    base.timeout = plan.timeout;
    let (algorithm, cfg) = algo.configure(&base);
    let result = minimize(input, algorithm, &cfg)?;
    let ok = result.status == RunStatus::Ok;
    if ok && result.output_size > input.size() {
        return Err(BenchError::Record {
            size,
            instance: index,
            algo: algo.to_string(),
            message: format!("output `{}` is larger than the input", result.output),
        });
    }
    Ok(BenchRecord {
        seed: plan.seed,
        size,
        instance: index,
        algo,
        status: result.status,
        time_ms: (result.elapsed.as_secs_f64() * 1e6).round() / 1e3,
        input_formula: input.to_string(),
        output_formula: if ok { result.output.to_string() } else { String::new() },
        output_size: ok.then_some(result.output_size),
        solver_calls: result.solver_calls,
        candidates_tested: result.candidates_tested,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BenchSummary {
    pub records: usize,
    pub timeouts: usize,
}

/// Runs every (instance, algorithm) pair of the plan on `jobs` worker
/// threads and returns the records sorted by (size, instance, algorithm).
pub fn collect_plan(plan: &BenchPlan, jobs: usize) -> Result<Vec<BenchRecord>, BenchError> {
    let instances = plan.instances()?;
    let work = || {
        instances
            .par_iter()
            .flat_map_iter(|(size, index, input)| {
                plan.algos
                    .iter()
                    .map(move |&algo| run_instance(plan, *size, *index, input, algo))
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let mut records = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work)?,
        Err(_) => work()?,
    };
    records.sort_by_key(|r| (r.size, r.instance, r.algo));
    Ok(records)
}

pub fn run_plan<W: Write>(plan: &BenchPlan, sink: W, jobs: usize) -> Result<BenchSummary, BenchError> {
    let records = collect_plan(plan, jobs)?;
    write_records(sink, &records)?;
    Ok(BenchSummary {
        records: records.len(),
        timeouts: records.iter().filter(|r| !r.is_ok()).count(),
    })
}

pub fn write_records<W: Write>(sink: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(source: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = csv::Reader::from_reader(source);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Malformed(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        out.push(BenchRecord::from_fields(&row?, i as u64 + 2)?);
    }
    Ok(out)
}

/// Re-parses every ok record and checks it against its input by truth
/// table. Returns the offending records.
pub fn recheck(records: &[BenchRecord]) -> Vec<&BenchRecord> {
    records
        .iter()
        .filter(|r| r.is_ok())
        .filter(|r| {
            let good = (|| {
                let input: Formula = r.input_formula.parse().ok()?;
                let output: Formula = r.output_formula.parse().ok()?;
                let eq = equivalent_tt(&input, &output).ok()?;
                Some(eq && output.size() <= input.size() && Some(output.size()) == r.output_size)
            })();
            good != Some(true)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Size,
    Algo,
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "size" => Ok(GroupKey::Size),
            "algo" | "algorithm" => Ok(GroupKey::Algo),
            _ => Err(format!("unknown group key `{s}` (expected size or algo)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupStats {
    pub size: Option<usize>,
    pub algo: Option<BenchAlgo>,
    pub n: usize,
    pub n_timeout: usize,
    /// `None` when every run timed out.
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub mean_output_size: Option<f64>,
    pub output_size_histogram: BTreeMap<usize, usize>,
}

impl GroupStats {
    /// Timeouts count towards `n` and `n_timeout` only.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a BenchRecord>) -> Self {
        let mut n = 0;
        let mut times = Vec::new();
        let mut hist = BTreeMap::new();
        for r in records {
            n += 1;
            if let (RunStatus::Ok, Some(s)) = (r.status, r.output_size) {
                times.push(r.time_ms);
                *hist.entry(s).or_insert(0) += 1;
            }
        }
        let n_ok = times.len();
        times.sort_by(f64::total_cmp);
        let mean = |sum: f64| (n_ok > 0).then(|| sum / n_ok as f64);
        GroupStats {
            size: None,
            algo: None,
            n,
            n_timeout: n - n_ok,
            mean_ms: mean(times.iter().sum()),
            median_ms: (n_ok > 0).then(|| times[(n_ok - 1) / 2]),
            mean_output_size: mean(hist.iter().map(|(s, c)| (s * c) as f64).sum()),
            output_size_histogram: hist,
        }
    }

    pub fn n_ok(&self) -> usize {
        self.n - self.n_timeout
    }
}

/// One row per distinct key combination, in key order.
pub fn aggregate(records: &[BenchRecord], group_by: &[GroupKey]) -> Vec<GroupStats> {
    let by_size = group_by.contains(&GroupKey::Size);
    let by_algo = group_by.contains(&GroupKey::Algo);
    let mut groups: BTreeMap<(Option<usize>, Option<BenchAlgo>), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        let key = (by_size.then_some(r.size), by_algo.then_some(r.algo));
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((size, algo), rs)| GroupStats {
            size,
            algo,
            ..GroupStats::from_records(rs)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeEntry {
    Timeout,
    Ms(f64),
}

impl fmt::Display for TimeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeEntry::Timeout => f.write_str("timeout"),
            TimeEntry::Ms(ms) => write!(f, "{ms:.3}"),
        }
    }
}

/// Per-instance times, slowest first; timeouts lead.
pub fn time_distribution(records: &[BenchRecord], size: usize, algo: BenchAlgo) -> Vec<TimeEntry> {
    let selected = records.iter().filter(|r| r.size == size && r.algo == algo);
    let mut timeouts = Vec::new();
    let mut times = Vec::new();
    for r in selected {
        match r.status {
            RunStatus::Timeout => timeouts.push(TimeEntry::Timeout),
            RunStatus::Ok => times.push(r.time_ms),
        }
    }
    times.sort_by(|a, b| b.total_cmp(a));
    timeouts.extend(times.into_iter().map(TimeEntry::Ms));
    timeouts
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn fmt_hist(h: &BTreeMap<usize, usize>) -> String {
    h.iter().map(|(s, c)| format!("{s}:{c}")).collect::<Vec<_>>().join(";")
}

const STATS_HEADER: [&str; 9] = [
    "size",
    "algo",
    "n",
    "n_ok",
    "n_timeout",
    "mean_ms",
    "median_ms",
    "mean_output_size",
    "output_size_histogram",
];

fn stats_fields(row: &GroupStats) -> [String; 9] {
    [
        row.size.map(|s| s.to_string()).unwrap_or_else(|| "*".into()),
        row.algo.map(|a| a.to_string()).unwrap_or_else(|| "*".into()),
        row.n.to_string(),
        row.n_ok().to_string(),
        row.n_timeout.to_string(),
        fmt_opt(row.mean_ms),
        fmt_opt(row.median_ms),
        fmt_opt(row.mean_output_size),
        fmt_hist(&row.output_size_histogram),
    ]
}

pub fn write_stats_csv<W: Write>(sink: W, rows: &[GroupStats]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(STATS_HEADER)?;
    for row in rows {
        w.write_record(stats_fields(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Space-aligned rendering of the same columns.
pub fn format_stats_table(rows: &[GroupStats]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(stats_fields).collect();
    let mut widths = STATS_HEADER.map(str::len);
    for r in &body {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&STATS_HEADER.map(String::from));
    for r in &body {
        line(r);
    }
    out
}
