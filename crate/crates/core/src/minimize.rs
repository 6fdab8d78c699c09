//! Size minimisation of formulae.
//!
//! * [`minimize_bruteforce`] enumerates candidates by increasing size and
//!   compares truth tables.
//! * [`minimize_sat`] walks the same candidate stream but decides each
//!   equivalence with a SAT call on two Tseitin encodings.
//! * [`minimize_qbf`] replaces the candidate stream by a *scheme*: a
//!   complete binary template whose selector variables choose the symbol at
//!   every position. "Some instantiation of the scheme is equivalent to φ"
//!   is an `∃ selectors ∀ vars(φ) ∃ values` QBF; its outer model decodes to
//!   the formula.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cnf::{at_most_k, exactly_one, push_equiv, push_gate, tseitin_into, Clause, Cnf, Lit, VarAllocator, VarMap};
use crate::enumeration::{Enumerator, FormulaSpace};
use crate::error::{MinimizeError, QbfError, SolverError};
use crate::formula::{equivalent_tt, Connective, Formula};
use crate::qbf::{self, OuterModel, QbfInstance, QbfResult, EXPANSION_CAP};
use crate::sat::{self, SatResult, Solver, SolverConfig};

/// Scheme nodes times universal copies allowed when picking a default depth
/// cap for exact mode.
const DEFAULT_EXPANSION_BUDGET: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    BruteForce,
    Sat,
    Qbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QbfMode {
    /// Smallest scheme depth first, then tighten the size at that depth.
    Fast,
    /// Increasing size bound; globally size-minimal.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatBackend {
    Internal,
    External(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QbfBackend {
    Internal,
    External(PathBuf),
}

#[derive(Clone, Debug)]
pub struct MinimizeConfig {
    pub output_conns: Vec<Connective>,
    pub allow_not: bool,
    pub allow_false_leaf: bool,
    pub qbf_mode: QbfMode,
    pub sat_backend: SatBackend,
    pub qbf_backend: QbfBackend,
    /// Wall-clock budget for one minimisation call.
    pub timeout: Option<Duration>,
    pub solver: SolverConfig,
    pub expansion_cap: usize,
    /// Deepest scheme exact mode will build; `None` derives it from the
    /// expansion budget.
    pub delta_cap: Option<usize>,
    pub scheme: SchemeOptions,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            output_conns: Connective::ALL.to_vec(),
            allow_not: true,
            allow_false_leaf: true,
            qbf_mode: QbfMode::Exact,
            sat_backend: SatBackend::Internal,
            qbf_backend: QbfBackend::Internal,
            timeout: None,
            solver: SolverConfig::default(),
            expansion_cap: EXPANSION_CAP,
            delta_cap: None,
            scheme: SchemeOptions::default(),
        }
    }
}

impl MinimizeConfig {
    fn validate(&self) -> Result<(), MinimizeError> {
        if self.output_conns.is_empty() && !self.allow_not {
            return Err(MinimizeError::Config(
                "output space needs at least one connective or negation".into(),
            ));
        }
        Ok(())
    }

    fn space(&self, vars: Vec<Arc<str>>) -> FormulaSpace {
        FormulaSpace::new(vars, &self.output_conns)
            .with_not(self.allow_not)
            .with_false(self.allow_false_leaf)
    }
}

/// Encoding switches that exist for diagnostics; the defaults are the sound
/// configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeOptions {
    /// Unit clause `¬x_dummy` at the root. Without it an all-dummy scheme
    /// leaves the root value unconstrained.
    pub forbid_root_dummy: bool,
    /// `x_¬ → ¬x_¬` on the left child. Never excludes a minimal formula.
    pub forbid_double_negation: bool,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            forbid_root_dummy: true,
            forbid_double_negation: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Timeout,
}

#[derive(Clone, Debug)]
pub struct MinimizationResult {
    /// On timeout this is the best formula known so far.
    pub output: Formula,
    pub output_size: usize,
    pub candidates_tested: u64,
    pub solver_calls: u64,
    pub elapsed: Duration,
    pub status: RunStatus,
}

struct Run<'a> {
    input: &'a Formula,
    started: Instant,
    deadline: Option<Instant>,
    candidates: u64,
    solver_calls: u64,
}

impl<'a> Run<'a> {
    fn new(input: &'a Formula, cfg: &MinimizeConfig) -> Self {
        let started = Instant::now();
        Run {
            input,
            started,
            deadline: cfg.timeout.map(|t| started + t),
            candidates: 0,
            solver_calls: 0,
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }

    fn finish(self, output: Formula, status: RunStatus) -> Result<MinimizationResult, MinimizeError> {
        if status == RunStatus::Ok {
            if !equivalent_tt(self.input, &output)? {
                return Err(MinimizeError::Unsound {
                    output: output.to_string(),
                });
            }
            debug_assert!(output.size() <= self.input.size());
        }
        Ok(MinimizationResult {
            output_size: output.size(),
            output,
            candidates_tested: self.candidates,
            solver_calls: self.solver_calls,
            elapsed: self.started.elapsed(),
            status,
        })
    }

    fn timeout(self) -> Result<MinimizationResult, MinimizeError> {
        let input = self.input.clone();
        self.finish(input, RunStatus::Timeout)
    }
}

pub fn minimize(formula: &Formula, algorithm: Algorithm, cfg: &MinimizeConfig) -> Result<MinimizationResult, MinimizeError> {
    match algorithm {
        Algorithm::BruteForce => minimize_bruteforce(formula, cfg),
        Algorithm::Sat => minimize_sat(formula, cfg),
        Algorithm::Qbf => minimize_qbf(formula, cfg),
    }
}

/// Shared candidate loop of the brute-force and SAT algorithms: the first
/// candidate in enumeration order accepted by `equivalent` wins.
fn search_candidates<F>(formula: &Formula, cfg: &MinimizeConfig, mut equivalent: F) -> Result<MinimizationResult, MinimizeError>
where
    F: FnMut(&Formula, &mut Run<'_>) -> Result<Option<bool>, MinimizeError>,
{
    cfg.validate()?;
    let mut run = Run::new(formula, cfg);
    let vars: Vec<Arc<str>> = formula.vars().into_iter().collect();
    let space = cfg.space(vars);
    if space.num_leaves() == 0 {
        return run.finish(formula.clone(), RunStatus::Ok);
    }
    let size = formula.size();
    let enumerator = Enumerator::new(space, size);
    for n in 1..=size {
        for candidate in enumerator.iter(n) {
            run.candidates += 1;
            if run.candidates.is_multiple_of(512) && run.expired() {
                return run.timeout();
            }
            match equivalent(&candidate, &mut run)? {
                Some(true) => return run.finish(candidate, RunStatus::Ok),
                Some(false) => {}
                None => return run.timeout(),
            }
        }
    }
    run.finish(formula.clone(), RunStatus::Ok)
}

pub fn minimize_bruteforce(formula: &Formula, cfg: &MinimizeConfig) -> Result<MinimizationResult, MinimizeError> {
    let vars: Vec<Arc<str>> = formula.vars().into_iter().collect();
    let target = formula.truth_table(&vars)?;
    search_candidates(formula, cfg, |candidate, _| Ok(Some(candidate.truth_table(&vars)? == target)))
}

/// `tseitin(φ, x₁) ∪ tseitin(ψ, x₂) ∪ {x₁ ∨ x₂, ¬x₁ ∨ ¬x₂}`, built
/// incrementally so the encoding of `φ` is shared across candidates.
pub struct EquivalenceEncoder {
    vars: VarMap,
    alloc: VarAllocator,
    out: Lit,
    base: Vec<Clause>,
}

impl EquivalenceEncoder {
    pub fn new(formula: &Formula) -> Self {
        let mut alloc = VarAllocator::new();
        let vars: VarMap = formula
            .vars()
            .into_iter()
            .map(|v| {
                let lit = alloc.fresh_named(v.to_string());
                (v, lit)
            })
            .collect();
        let out = alloc.fresh();
        let mut base = Vec::new();
        tseitin_into(formula, out, &vars, &mut alloc, &mut base);
        EquivalenceEncoder { vars, alloc, out, base }
    }

    /// Clauses satisfiable iff `candidate` differs from the formula on some
    /// assignment. The candidate's variables must occur in the formula.
    pub fn difference(&self, candidate: &Formula) -> (u32, Vec<Clause>) {
        let mut alloc = self.alloc.clone();
        let x2 = alloc.fresh();
        let mut extra = Vec::new();
        tseitin_into(candidate, x2, &self.vars, &mut alloc, &mut extra);
        extra.push(vec![self.out, x2]);
        extra.push(vec![-self.out, -x2]);
        (alloc.num_vars(), extra)
    }

    pub fn base(&self) -> &[Clause] {
        &self.base
    }

    pub fn difference_cnf(&self, candidate: &Formula) -> Cnf {
        let (num_vars, extra) = self.difference(candidate);
        let mut cnf = Cnf::new(num_vars);
        cnf.clauses.extend(self.base.iter().cloned());
        cnf.clauses.extend(extra);
        cnf
    }
}

pub fn minimize_sat(formula: &Formula, cfg: &MinimizeConfig) -> Result<MinimizationResult, MinimizeError> {
    let encoder = EquivalenceEncoder::new(formula);
    search_candidates(formula, cfg, |candidate, run| {
        run.solver_calls += 1;
        let verdict = match &cfg.sat_backend {
            SatBackend::Internal => {
                let (num_vars, extra) = encoder.difference(candidate);
                Solver::from_clause_sets(num_vars, &[encoder.base(), &extra], cfg.solver.clone()).solve(run.deadline)
            }
            SatBackend::External(path) => sat::solve_external(&encoder.difference_cnf(candidate), path, run.remaining()),
        };
        match verdict {
            Ok(SatResult::Unsat) => Ok(Some(true)),
            Ok(SatResult::Sat(_)) => Ok(Some(false)),
            Err(SolverError::Timeout { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    })
}

// ---------------------------------------------------------------------------
// Scheme encoding
// ---------------------------------------------------------------------------

/// One position of the scheme. Children of node `i` are `2i + 1` (left) and
/// `2i + 2` (right).
#[derive(Clone, Debug)]
pub struct SchemeNode {
    /// Value of the subformula at this position (inner existential).
    pub value: Lit,
    pub sel_false: Option<Lit>,
    pub sel_dummy: Lit,
    pub sel_vars: Vec<(Arc<str>, Lit)>,
    pub sel_not: Option<Lit>,
    pub sel_conns: Vec<(Connective, Lit)>,
}

impl SchemeNode {
    pub fn selectors(&self) -> Vec<Lit> {
        let mut out = Vec::with_capacity(3 + self.sel_vars.len() + self.sel_conns.len());
        out.extend(self.sel_false);
        out.push(self.sel_dummy);
        out.extend(self.sel_not);
        out.extend(self.sel_vars.iter().map(|(_, l)| *l));
        out.extend(self.sel_conns.iter().map(|(_, l)| *l));
        out
    }

    pub fn is_leaf(&self) -> bool {
        self.sel_not.is_none() && self.sel_conns.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Scheme {
    pub depth: usize,
    pub nodes: Vec<SchemeNode>,
}

impl Scheme {
    pub fn root(&self) -> &SchemeNode {
        &self.nodes[0]
    }

    pub fn selector_vars(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .flat_map(|n| n.selectors())
            .map(|l| l.var())
            .collect()
    }

    pub fn value_vars(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.value.var()).collect()
    }

    pub fn dummy_selectors(&self) -> Vec<Lit> {
        self.nodes.iter().map(|n| n.sel_dummy).collect()
    }
}

/// Parameters of the candidate space a scheme ranges over.
#[derive(Clone, Debug)]
pub struct SchemeSpace<'a> {
    pub conns: &'a [Connective],
    pub allow_not: bool,
    pub allow_false: bool,
    pub options: &'a SchemeOptions,
}

impl<'a> SchemeSpace<'a> {
    pub fn from_config(cfg: &'a MinimizeConfig) -> Self {
        SchemeSpace {
            conns: &cfg.output_conns,
            allow_not: cfg.allow_not,
            allow_false: cfg.allow_false_leaf,
            options: &cfg.scheme,
        }
    }
}

/// Builds the complete depth-`depth` scheme over `universals` and its
/// constraint clauses. Selectors and values are drawn from `alloc`.
pub fn build_scheme(
    depth: usize,
    universals: &[(Arc<str>, Lit)],
    space: &SchemeSpace<'_>,
    alloc: &mut VarAllocator,
) -> (Scheme, Vec<Clause>) {
    let n_nodes = (1usize << (depth + 1)) - 1;
    let first_leaf = (1usize << depth) - 1;
    let nodes: Vec<SchemeNode> = (0..n_nodes)
        .map(|i| {
            let inner = i < first_leaf;
            SchemeNode {
                value: alloc.fresh(),
                sel_false: space.allow_false.then(|| alloc.fresh()),
                sel_dummy: alloc.fresh(),
                sel_vars: universals.iter().map(|(name, _)| (name.clone(), alloc.fresh())).collect(),
                sel_not: (inner && space.allow_not).then(|| alloc.fresh()),
                sel_conns: if inner {
                    space.conns.iter().map(|&c| (c, alloc.fresh())).collect()
                } else {
                    Vec::new()
                },
            }
        })
        .collect();

    let mut clauses = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let z = node.value;
        if let Some(x) = node.sel_false {
            clauses.push(vec![-x, -z]);
        }
        for ((_, x), (_, y)) in node.sel_vars.iter().zip(universals) {
            push_equiv(&mut clauses, Some(*x), z, *y);
        }
        clauses.extend(exactly_one(&node.selectors()).expect("every node has a dummy selector"));
        if i >= first_leaf {
            continue;
        }
        let (left, right) = (&nodes[2 * i + 1], &nodes[2 * i + 2]);
        if let Some(x) = node.sel_not {
            push_equiv(&mut clauses, Some(x), z, -left.value);
            clauses.push(vec![-x, right.sel_dummy]);
            clauses.push(vec![-x, -left.sel_dummy]);
            if space.options.forbid_double_negation {
                if let Some(child_not) = left.sel_not {
                    clauses.push(vec![-x, -child_not]);
                }
            }
        }
        for &(c, x) in &node.sel_conns {
            push_gate(&mut clauses, Some(x), z, c, left.value, right.value);
            clauses.push(vec![-x, -left.sel_dummy]);
            clauses.push(vec![-x, -right.sel_dummy]);
        }
        let terminal = node
            .sel_vars
            .iter()
            .map(|(_, l)| *l)
            .chain(node.sel_false)
            .chain([node.sel_dummy]);
        for x in terminal {
            clauses.push(vec![-x, left.sel_dummy]);
            clauses.push(vec![-x, right.sel_dummy]);
        }
    }
    if space.options.forbid_root_dummy {
        clauses.push(vec![-nodes[0].sel_dummy]);
    }
    (Scheme { depth, nodes }, clauses)
}

/// Reads the formula selected by an outer model, starting at the root.
pub fn decode_scheme(scheme: &Scheme, model: &OuterModel) -> Result<Formula, MinimizeError> {
    fn node(scheme: &Scheme, model: &OuterModel, i: usize) -> Result<Formula, MinimizeError> {
        let n = &scheme.nodes[i];
        let on = |l: Lit| model.get(&l.var()).copied().unwrap_or(false) == l.is_positive();
        let selected = n.selectors().into_iter().filter(|&l| on(l)).count();
        if selected != 1 || on(n.sel_dummy) {
            return Err(MinimizeError::Decode { node: i, selected });
        }
        if n.sel_false.is_some_and(on) {
            return Ok(Formula::False);
        }
        if let Some((name, _)) = n.sel_vars.iter().find(|(_, l)| on(*l)) {
            return Ok(Formula::Var(name.clone()));
        }
        if n.sel_not.is_some_and(on) {
            return Ok(Formula::not(node(scheme, model, 2 * i + 1)?));
        }
        let (c, _) = n
            .sel_conns
            .iter()
            .find(|(_, l)| on(*l))
            .expect("exactly one selector is set");
        Ok(Formula::bin(*c, node(scheme, model, 2 * i + 1)?, node(scheme, model, 2 * i + 2)?))
    }
    node(scheme, model, 0)
}

/// The QBF asking whether some scheme instantiation of depth `depth` (and at
/// most `size_bound` non-dummy nodes) is equivalent to `formula`.
#[derive(Clone, Debug)]
pub struct SchemeQuery {
    pub instance: QbfInstance,
    pub scheme: Scheme,
}

pub fn encode_scheme_query(
    formula: &Formula,
    depth: usize,
    size_bound: Option<usize>,
    space: &SchemeSpace<'_>,
) -> SchemeQuery {
    let mut alloc = VarAllocator::new();
    let universals: Vec<(Arc<str>, Lit)> = formula
        .vars()
        .into_iter()
        .map(|v| {
            let lit = alloc.fresh_named(v.to_string());
            (v, lit)
        })
        .collect();
    let (scheme, mut clauses) = build_scheme(depth, &universals, space, &mut alloc);
    let mut outer = scheme.selector_vars();
    let mut inner = scheme.value_vars();

    let tseitin_start = alloc.num_vars();
    let z1 = alloc.fresh();
    let vars: VarMap = universals.iter().cloned().collect();
    tseitin_into(formula, z1, &vars, &mut alloc, &mut clauses);
    inner.extend(tseitin_start + 1..=alloc.num_vars());
    push_equiv(&mut clauses, None, z1, scheme.root().value);

    if let Some(bound) = size_bound {
        // The counter registers depend on selectors only, so they can sit in
        // the outer block without losing decodability.
        let counter_start = alloc.num_vars();
        let live: Vec<Lit> = scheme.dummy_selectors().into_iter().map(|d| -d).collect();
        clauses.extend(at_most_k(&live, bound, &mut alloc));
        outer.extend(counter_start + 1..=alloc.num_vars());
    }

    let mut matrix = Cnf::new(alloc.num_vars());
    matrix.clauses = clauses;
    let univ = universals.iter().map(|(_, l)| l.var()).collect();
    let instance = QbfInstance::new(outer, univ, inner, matrix).expect("scheme blocks partition the matrix variables");
    SchemeQuery { instance, scheme }
}

/// `Some(ψ)` with a decoded witness if an equivalent formula fits the
/// scheme, `None` otherwise. Timeouts surface as solver errors.
pub fn equivalent_qbf(
    formula: &Formula,
    depth: usize,
    size_bound: Option<usize>,
    cfg: &MinimizeConfig,
) -> Result<Option<Formula>, MinimizeError> {
    let deadline = cfg.timeout.map(|t| Instant::now() + t);
    equivalent_qbf_until(formula, depth, size_bound, cfg, deadline)
}

fn equivalent_qbf_until(
    formula: &Formula,
    depth: usize,
    size_bound: Option<usize>,
    cfg: &MinimizeConfig,
    deadline: Option<Instant>,
) -> Result<Option<Formula>, MinimizeError> {
    let query = encode_scheme_query(formula, depth, size_bound, &SchemeSpace::from_config(cfg));
    let result = match &cfg.qbf_backend {
        QbfBackend::Internal => qbf::solve_expansion_until(&query.instance, deadline, cfg.expansion_cap)?,
        QbfBackend::External(path) => {
            let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
            qbf::solve_external(&query.instance, path, remaining)?
        }
    };
    match result {
        QbfResult::False => Ok(None),
        QbfResult::TrueWithoutModel => Err(MinimizeError::MissingModel),
        QbfResult::True(model) => decode_scheme(&query.scheme, &model).map(Some),
    }
}

/// Deepest position a size-`k` formula without double negation can reach:
/// the largest `d` with `d + 1 + ⌊d/2⌋ ≤ k` (each binary node on the
/// deepest path carries a sibling of size ≥ 1). Minimal formulae never
/// contain `!!`, so exact mode loses nothing by capping here.
pub fn depth_bound_for_size(k: usize, allow_not: bool) -> usize {
    if k == 0 {
        return 0;
    }
    if !allow_not {
        return (k - 1) / 2;
    }
    let fits = |d: usize| d + 1 + d / 2 <= k;
    (0..k).take_while(|&d| fits(d)).last().unwrap_or(0)
}

fn default_delta_cap(universals: usize) -> usize {
    let copies = 1u64 << universals.min(40);
    let mut d = 0;
    while ((1u64 << (d + 2)) - 1).saturating_mul(copies) <= DEFAULT_EXPANSION_BUDGET {
        d += 1;
    }
    d
}

pub fn minimize_qbf(formula: &Formula, cfg: &MinimizeConfig) -> Result<MinimizationResult, MinimizeError> {
    cfg.validate()?;
    let universals = formula.vars().len();
    if cfg.qbf_backend == QbfBackend::Internal && universals > cfg.expansion_cap {
        return Err(QbfError::ExpansionCap {
            universals,
            cap: cfg.expansion_cap,
        }
        .into());
    }
    let mut run = Run::new(formula, cfg);
    if universals == 0 && !cfg.allow_false_leaf {
        return run.finish(formula.clone(), RunStatus::Ok);
    }

    macro_rules! query {
        ($depth:expr, $bound:expr) => {{
            run.candidates += 1;
            run.solver_calls += 1;
            match equivalent_qbf_until(formula, $depth, $bound, cfg, run.deadline) {
                Err(MinimizeError::Qbf(QbfError::Solver(SolverError::Timeout { .. })))
                | Err(MinimizeError::Solver(SolverError::Timeout { .. })) => return run.timeout(),
                other => other?,
            }
        }};
    }

    let size = formula.size();
    match cfg.qbf_mode {
        QbfMode::Fast => {
            let mut found = None;
            for depth in 0..=formula.depth() {
                if let Some(f) = query!(depth, None) {
                    found = Some((depth, f));
                    break;
                }
            }
            let Some((depth, mut best)) = found else {
                return run.finish(formula.clone(), RunStatus::Ok);
            };
            while best.size() > 1 {
                match query!(depth, Some(best.size() - 1)) {
                    Some(smaller) => {
                        debug_assert!(smaller.size() < best.size());
                        best = smaller;
                    }
                    None => break,
                }
            }
            // Depth-minimal does not imply size-minimal; never grow the input.
            if best.size() > size {
                best = formula.clone();
            }
            run.finish(best, RunStatus::Ok)
        }
        QbfMode::Exact => {
            let cap = cfg.delta_cap.unwrap_or_else(|| default_delta_cap(universals));
            for k in 1..size {
                let depth = depth_bound_for_size(k, cfg.allow_not).min(cap);
                if let Some(f) = query!(depth, Some(k)) {
                    return run.finish(f, RunStatus::Ok);
                }
            }
            run.finish(formula.clone(), RunStatus::Ok)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn cfg() -> MinimizeConfig {
        MinimizeConfig::default()
    }

    #[test]
    fn bruteforce_examples() {
        let r = minimize_bruteforce(&p("p & p"), &cfg()).unwrap();
        assert_eq!(r.output, p("p"));
        assert_eq!(r.output_size, 1);
        assert_eq!(r.status, RunStatus::Ok);

        let r = minimize_bruteforce(&p("p | !p"), &cfg()).unwrap();
        assert_eq!(r.output, p("!false"));

        let r = minimize_bruteforce(&p("p & q | p & r"), &cfg()).unwrap();
        assert_eq!(r.output_size, 5);
        assert!(equivalent_tt(&r.output, &p("p & (q | r)")).unwrap());
    }

    #[test]
    fn sat_examples() {
        assert_eq!(minimize_sat(&p("p & !p"), &cfg()).unwrap().output, Formula::False);
        let r = minimize_sat(&p("p -> q"), &cfg()).unwrap();
        assert_eq!(r.output_size, 3);
        assert_eq!(r.output, minimize_bruteforce(&p("p -> q"), &cfg()).unwrap().output);
        assert!(r.solver_calls > 0);
    }

    #[test]
    fn without_false_leaf_tautology_needs_three_symbols() {
        let c = MinimizeConfig {
            allow_false_leaf: false,
            ..cfg()
        };
        let r = minimize_bruteforce(&p("p | !p"), &c).unwrap();
        assert_eq!(r.output_size, 3);
        assert_eq!(r.output, p("p -> p"));
    }

    #[test]
    fn formula_outside_output_space_is_returned_unchanged() {
        let c = MinimizeConfig {
            output_conns: vec![Connective::And],
            allow_not: false,
            ..cfg()
        };
        let f = p("p | q");
        for algo in [Algorithm::BruteForce, Algorithm::Sat, Algorithm::Qbf] {
            let r = minimize(&f, algo, &c).unwrap();
            assert_eq!(r.output, f, "{algo:?}");
        }
    }

    #[test]
    fn scheme_selector_counts() {
        let mut alloc = VarAllocator::new();
        let univ: Vec<(Arc<str>, Lit)> = ["p", "q"].iter().map(|n| (Arc::from(*n), alloc.fresh())).collect();
        let c = cfg();
        let (s, _) = build_scheme(0, &univ, &SchemeSpace::from_config(&c), &mut alloc);
        assert_eq!(s.nodes.len(), 1);
        assert_eq!(s.root().selectors().len(), 4);

        let (s, _) = build_scheme(1, &univ, &SchemeSpace::from_config(&c), &mut alloc);
        assert_eq!(s.nodes.len(), 3);
        assert_eq!(s.root().selectors().len(), 8);
        assert!(s.nodes[1].is_leaf() && s.nodes[2].is_leaf());
    }

    #[test]
    fn scheme_clause_growth_is_linear_in_nodes() {
        let c = cfg();
        let mut per_node = Vec::new();
        for depth in 2..7 {
            let mut alloc = VarAllocator::new();
            let univ: Vec<(Arc<str>, Lit)> = ["p", "q"].iter().map(|n| (Arc::from(*n), alloc.fresh())).collect();
            let (s, clauses) = build_scheme(depth, &univ, &SchemeSpace::from_config(&c), &mut alloc);
            per_node.push(clauses.len() as f64 / s.nodes.len() as f64);
        }
        let (lo, hi) = per_node.iter().fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.5, "{per_node:?}");
    }

    #[test]
    fn decode_examples() {
        let mut alloc = VarAllocator::new();
        let univ: Vec<(Arc<str>, Lit)> = ["p", "q"].iter().map(|n| (Arc::from(*n), alloc.fresh())).collect();
        let c = cfg();
        let (s, _) = build_scheme(1, &univ, &SchemeSpace::from_config(&c), &mut alloc);
        let set = |lits: &[Lit]| -> OuterModel {
            let mut m: OuterModel = s.selector_vars().into_iter().map(|v| (v, false)).collect();
            for l in lits {
                m.insert(l.var(), true);
            }
            m
        };
        let (root, l, r) = (&s.nodes[0], &s.nodes[1], &s.nodes[2]);
        assert_eq!(decode_scheme(&s, &set(&[root.sel_vars[0].1])).unwrap(), p("p"));
        let and = root.sel_conns.iter().find(|(c, _)| *c == Connective::And).unwrap().1;
        assert_eq!(
            decode_scheme(&s, &set(&[and, l.sel_vars[0].1, r.sel_vars[1].1])).unwrap(),
            p("p & q")
        );
        assert_eq!(
            decode_scheme(&s, &set(&[root.sel_not.unwrap(), l.sel_false.unwrap(), r.sel_dummy])).unwrap(),
            p("!false")
        );
        assert!(matches!(decode_scheme(&s, &set(&[])), Err(MinimizeError::Decode { node: 0, selected: 0 })));
        assert!(matches!(
            decode_scheme(&s, &set(&[root.sel_vars[0].1, root.sel_vars[1].1])),
            Err(MinimizeError::Decode { node: 0, selected: 2 })
        ));
        assert!(matches!(decode_scheme(&s, &set(&[root.sel_dummy])), Err(MinimizeError::Decode { .. })));
    }

    #[test]
    fn equivalent_qbf_examples() {
        let c = cfg();
        assert_eq!(equivalent_qbf(&p("p"), 0, None, &c).unwrap(), Some(p("p")));
        assert_eq!(equivalent_qbf(&p("p & !p"), 0, None, &c).unwrap(), Some(Formula::False));
        assert_eq!(equivalent_qbf(&p("(p | q) & !(p & q)"), 1, None, &c).unwrap(), None);
        assert!(equivalent_qbf(&p("(p | q) & !(p & q)"), 3, None, &c).unwrap().is_some());
    }

    #[test]
    fn qbf_modes() {
        let fast = MinimizeConfig {
            qbf_mode: QbfMode::Fast,
            ..cfg()
        };
        assert_eq!(minimize_qbf(&p("p & p"), &fast).unwrap().output, p("p"));
        let r = minimize_qbf(&p("p & q | p & r"), &cfg()).unwrap();
        assert_eq!(r.output_size, 5);
        let r = minimize_qbf(&p("!!!!false"), &cfg()).unwrap();
        assert_eq!(r.output, Formula::False);
    }

    #[test]
    fn depth_bounds() {
        let got: Vec<usize> = (1..=11).map(|k| depth_bound_for_size(k, true)).collect();
        assert_eq!(got, [0, 1, 1, 2, 3, 3, 4, 5, 5, 6, 7]);
        assert_eq!(depth_bound_for_size(7, false), 3);
        assert_eq!(default_delta_cap(3), 12);
        assert_eq!(default_delta_cap(4), 11);
    }

    #[test]
    fn timeout_is_reported() {
        let c = MinimizeConfig {
            timeout: Some(Duration::ZERO),
            ..cfg()
        };
        let f = p("(p & q | !r) & (q -> !p | r) & !(p & r) | q & !p & r");
        for algo in [Algorithm::BruteForce, Algorithm::Sat, Algorithm::Qbf] {
            let r = minimize(&f, algo, &c).unwrap();
            assert_eq!(r.status, RunStatus::Timeout, "{algo:?}");
        }
    }
}
