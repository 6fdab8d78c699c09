//! Three-block `∃x ∀y ∃z. matrix` instances, decided by universal expansion
//! or by an external QDIMACS solver.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::cnf::{write_qdimacs, Clause, Cnf, Lit};
use crate::error::{QbfError, SolverError};
use crate::process;
use crate::sat::{self, SatResult};

/// Largest universal block the expansion engine accepts.
pub const EXPANSION_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QbfInstance {
    outer: Vec<u32>,
    universals: Vec<u32>,
    inner: Vec<u32>,
    matrix: Cnf,
}

impl QbfInstance {
    /// Checks that the blocks are disjoint and cover every matrix variable.
    pub fn new(outer: Vec<u32>, universals: Vec<u32>, inner: Vec<u32>, matrix: Cnf) -> Result<Self, QbfError> {
        let mut seen = HashSet::new();
        for &v in outer.iter().chain(&universals).chain(&inner) {
            if v == 0 || v > matrix.num_vars {
                return Err(QbfError::Invalid(format!("quantified variable {v} out of range")));
            }
            if !seen.insert(v) {
                return Err(QbfError::Invalid(format!("variable {v} is quantified twice")));
            }
        }
        for clause in &matrix.clauses {
            for l in clause {
                if !seen.contains(&l.var()) {
                    return Err(QbfError::Invalid(format!("matrix variable {} is not quantified", l.var())));
                }
            }
        }
        Ok(QbfInstance {
            outer,
            universals,
            inner,
            matrix,
        })
    }

    pub fn outer(&self) -> &[u32] {
        &self.outer
    }

    pub fn universals(&self) -> &[u32] {
        &self.universals
    }

    pub fn inner(&self) -> &[u32] {
        &self.inner
    }

    pub fn matrix(&self) -> &Cnf {
        &self.matrix
    }

    fn roles(&self) -> Vec<Role> {
        let mut roles = vec![Role::Unused; self.matrix.num_vars as usize + 1];
        for (i, &v) in self.outer.iter().enumerate() {
            roles[v as usize] = Role::Outer(i as u32);
        }
        for (i, &v) in self.universals.iter().enumerate() {
            roles[v as usize] = Role::Universal(i as u32);
        }
        for (i, &v) in self.inner.iter().enumerate() {
            roles[v as usize] = Role::Inner(i as u32);
        }
        roles
    }
}

/// Values for the outermost existential block.
pub type OuterModel = BTreeMap<u32, bool>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QbfResult {
    True(OuterModel),
    /// True, but the backend did not report the outer assignment.
    TrueWithoutModel,
    False,
}

impl QbfResult {
    pub fn is_true(&self) -> bool {
        !matches!(self, QbfResult::False)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Unused,
    Outer(u32),
    Universal(u32),
    Inner(u32),
}

fn check_cap(universals: usize, cap: usize) -> Result<(), QbfError> {
    if universals > cap {
        Err(QbfError::ExpansionCap { universals, cap })
    } else {
        Ok(())
    }
}

pub fn solve_expansion(q: &QbfInstance, budget: Option<Duration>) -> Result<QbfResult, QbfError> {
    solve_expansion_until(q, budget.map(|b| Instant::now() + b), EXPANSION_CAP)
}

/// Expands all `2^|∀|` universal assignments into one SAT instance sharing
/// the outer variables, with a fresh copy of the inner block per assignment.
pub fn solve_expansion_until(q: &QbfInstance, deadline: Option<Instant>, cap: usize) -> Result<QbfResult, QbfError> {
    check_cap(q.universals.len(), cap)?;
    let roles = q.roles();
    let n_outer = q.outer.len() as u32;
    let n_inner = q.inner.len() as u32;
    let copies = 1u64 << q.universals.len();

    // Outer variable i maps to i + 1; copy t of inner variable j maps to
    // n_outer + t * n_inner + j + 1.
    let mut cnf = Cnf::new(n_outer + (copies as u32) * n_inner);
    let mut per_copy: Vec<&Clause> = Vec::new();
    for clause in &q.matrix.clauses {
        let outer_only = clause.iter().all(|l| matches!(roles[l.var() as usize], Role::Outer(_)));
        if outer_only {
            cnf.clauses.push(
                clause
                    .iter()
                    .map(|l| match roles[l.var() as usize] {
                        Role::Outer(i) => Lit::new(i + 1, l.is_positive()),
                        _ => unreachable!(),
                    })
                    .collect(),
            );
        } else {
            per_copy.push(clause);
        }
    }
    for tau in 0..copies {
        let base = n_outer + tau as u32 * n_inner;
        'clauses: for clause in &per_copy {
            let mut out = Vec::with_capacity(clause.len());
            for &l in clause.iter() {
                match roles[l.var() as usize] {
                    Role::Universal(k) => {
                        let value = (tau >> k) & 1 == 1;
                        if value == l.is_positive() {
                            continue 'clauses;
                        }
                    }
                    Role::Outer(i) => out.push(Lit::new(i + 1, l.is_positive())),
                    Role::Inner(j) => out.push(Lit::new(base + j + 1, l.is_positive())),
                    Role::Unused => unreachable!("validated at construction"),
                }
            }
            if out.is_empty() {
                return Ok(QbfResult::False);
            }
            cnf.clauses.push(out);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(SolverError::Timeout {
                elapsed: Duration::ZERO,
            }
            .into());
        }
    }
    match sat::solve_until(&cnf, deadline)? {
        SatResult::Unsat => Ok(QbfResult::False),
        SatResult::Sat(model) => Ok(QbfResult::True(
            q.outer
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, model.value(i as u32 + 1)))
                .collect(),
        )),
    }
}

/// True iff under `outer_model` every universal assignment leaves a
/// satisfiable inner problem. Missing outer values read as false.
pub fn verify_outer_model(q: &QbfInstance, outer_model: &OuterModel) -> Result<bool, QbfError> {
    check_cap(q.universals.len(), EXPANSION_CAP)?;
    let roles = q.roles();
    for tau in 0..1u64 << q.universals.len() {
        let mut cnf = Cnf::new(q.inner.len() as u32);
        let mut falsified = false;
        'clauses: for clause in &q.matrix.clauses {
            let mut out = Vec::with_capacity(clause.len());
            for &l in clause {
                let fixed = match roles[l.var() as usize] {
                    Role::Universal(k) => Some((tau >> k) & 1 == 1),
                    Role::Outer(_) => Some(outer_model.get(&l.var()).copied().unwrap_or(false)),
                    Role::Inner(j) => {
                        out.push(Lit::new(j + 1, l.is_positive()));
                        None
                    }
                    Role::Unused => unreachable!("validated at construction"),
                };
                if fixed == Some(l.is_positive()) {
                    continue 'clauses;
                }
            }
            if out.is_empty() {
                falsified = true;
                break;
            }
            cnf.clauses.push(out);
        }
        if falsified || !sat::solve(&cnf, None)?.is_sat() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs an external QDIMACS solver: `argv = [path, file]`, exit 10 true,
/// 20 false. Outer values are read from `V` lines when present.
pub fn solve_external(q: &QbfInstance, solver: &Path, budget: Option<Duration>) -> Result<QbfResult, QbfError> {
    let run = process::run_solver(solver, &write_qdimacs(q), ".qdimacs", budget)?;
    match run.exit_code {
        Some(10) => {
            let values = parse_v_lines(&run.stdout, q.matrix.num_vars)?;
            if values.is_empty() {
                return Ok(QbfResult::TrueWithoutModel);
            }
            let model = q
                .outer
                .iter()
                .map(|&v| (v, values.get(&v).copied().unwrap_or(false)))
                .collect();
            Ok(QbfResult::True(model))
        }
        Some(20) => Ok(QbfResult::False),
        other => Err(SolverError::Protocol(other).into()),
    }
}

fn parse_v_lines(stdout: &str, num_vars: u32) -> Result<BTreeMap<u32, bool>, SolverError> {
    let mut values = BTreeMap::new();
    for line in stdout.lines() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("V") {
            continue;
        }
        let mut terminated = false;
        for tok in parts {
            let value: i64 = tok
                .parse()
                .map_err(|_| SolverError::Output(format!("bad literal `{tok}` in V line")))?;
            if value == 0 {
                terminated = true;
                break;
            }
            if value.unsigned_abs() > u64::from(num_vars) {
                return Err(SolverError::Output(format!("V literal {value} out of range")));
            }
            values.insert(value.unsigned_abs() as u32, value > 0);
        }
        if !terminated {
            return Err(SolverError::Output("V line is not terminated by 0".into()));
        }
    }
    Ok(values)
}
