//! Satisfiability checking: an embedded CDCL solver and an adapter for
//! external DIMACS solvers.
//!
//! The embedded engine uses two watched literals with blockers, first-UIP
//! learning with local clause minimisation, VSIDS ordering with phase
//! saving, and Luby restarts. Learnt clauses are only reduced once more than
//! [`SolverConfig::first_reduce`] of them exist.

use std::path::Path;
use std::time::{Duration, Instant};

use crate::cnf::{write_dimacs, Clause, Cnf, Lit, Model};
use crate::error::SolverError;
use crate::process;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Seeds the random decision stream; only consulted when
    /// `random_decision_freq > 0`.
    pub seed: u64,
    pub random_decision_freq: f64,
    /// Conflicts per Luby unit.
    pub restart_unit: u64,
    pub first_reduce: usize,
    pub var_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            random_decision_freq: 0.0,
            restart_unit: 100,
            first_reduce: 10_000,
            var_decay: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnt: u64,
}

pub fn solve(cnf: &Cnf, budget: Option<Duration>) -> Result<SatResult, SolverError> {
    solve_until(cnf, budget.map(|b| Instant::now() + b))
}

pub fn solve_until(cnf: &Cnf, deadline: Option<Instant>) -> Result<SatResult, SolverError> {
    Solver::new(cnf, SolverConfig::default()).solve(deadline)
}

const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[inline]
fn code(l: Lit) -> u32 {
    ((l.var() - 1) << 1) | u32::from(!l.is_positive())
}

#[cfg(test)]
fn decode(c: u32) -> Lit {
    Lit::new((c >> 1) + 1, c & 1 == 0)
}

#[derive(Clone, Copy, Debug)]
struct Watch {
    cref: u32,
    blocker: u32,
}

#[derive(Clone, Debug)]
struct ClauseHeader {
    start: u32,
    len: u32,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f32,
}

/// Max-heap of variables keyed by activity.
#[derive(Clone, Debug, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn with_vars(n: usize) -> Self {
        VarHeap {
            heap: (0..n as u32).collect(),
            pos: (0..n as i32).collect(),
        }
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] >= 0
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            let cv = self.heap[child];
            if act[cv as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = cv;
            self.pos[cv as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = i as i32;
        self.up(i, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("heap is non-empty");
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }
}

/// Luby sequence value at `i` (0-based): 1 1 2 1 1 2 4 ...
fn luby(mut i: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1u64 << seq
}

pub struct Solver<'a> {
    original: Vec<&'a [Clause]>,
    config: SolverConfig,
    num_vars: usize,
    arena: Vec<u32>,
    clauses: Vec<ClauseHeader>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    clause_inc: f32,
    heap: VarHeap,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    root_conflict: bool,
    max_learnts: usize,
    rng_state: u64,
    stats: SolverStats,
}

impl<'a> Solver<'a> {
    pub fn new(cnf: &'a Cnf, config: SolverConfig) -> Self {
        Self::from_clause_sets(cnf.num_vars, &[&cnf.clauses], config)
    }

    /// Solver over the union of several clause lists, none of which may
    /// mention a variable above `num_vars`.
    pub fn from_clause_sets(num_vars: u32, sets: &[&'a [Clause]], config: SolverConfig) -> Self {
        let n = num_vars as usize;
        let mut s = Solver {
            original: sets.to_vec(),
            max_learnts: config.first_reduce,
            rng_state: config.seed ^ 0x9E37_79B9_7F4A_7C15,
            config,
            num_vars: n,
            arena: Vec::new(),
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            polarity: vec![false; n],
            activity: vec![0.0; n],
            var_inc: 1.0,
            clause_inc: 1.0,
            heap: VarHeap::with_vars(n),
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; n],
            root_conflict: false,
            stats: SolverStats::default(),
        };
        let mut buf: Vec<u32> = Vec::new();
        for clause in sets.iter().flat_map(|set| set.iter()) {
            if s.root_conflict {
                break;
            }
            buf.clear();
            buf.extend(clause.iter().map(|&l| code(l)));
            buf.sort_unstable();
            buf.dedup();
            if buf.windows(2).any(|w| w[0] ^ 1 == w[1]) {
                continue;
            }
            // Drop literals already false at the root; skip satisfied clauses.
            if buf.iter().any(|&l| s.value(l) == 1) {
                continue;
            }
            buf.retain(|&l| s.value(l) == UNDEF);
            match buf.len() {
                0 => s.root_conflict = true,
                1 => s.enqueue(buf[0], NO_REASON),
                _ => {
                    s.attach(&buf, false, 0);
                }
            }
        }
        s
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    #[inline]
    fn value(&self, lit: u32) -> u8 {
        let a = self.assigns[(lit >> 1) as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (lit & 1) as u8
        }
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    #[inline]
    fn enqueue(&mut self, lit: u32, reason: u32) {
        let v = (lit >> 1) as usize;
        self.assigns[v] = ((lit & 1) ^ 1) as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(lit);
    }

    fn attach(&mut self, lits: &[u32], learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.clauses.push(ClauseHeader {
            start: self.arena.len() as u32,
            len: lits.len() as u32,
            learnt,
            deleted: false,
            lbd,
            activity: 0.0,
        });
        self.arena.extend_from_slice(lits);
        self.watches[lits[0] as usize].push(Watch {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1] as usize].push(Watch {
            cref,
            blocker: lits[0],
        });
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let h = &self.clauses[w.cref as usize];
                let start = h.start as usize;
                let len = h.len as usize;
                let lits = &mut self.arena[start..start + len];
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let first_val = {
                    let a = self.assigns[(first >> 1) as usize];
                    if a == UNDEF {
                        UNDEF
                    } else {
                        a ^ (first & 1) as u8
                    }
                };
                if first != w.blocker && first_val == 1 {
                    ws[j] = Watch {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..len {
                    let l = lits[k];
                    let a = self.assigns[(l >> 1) as usize];
                    if a == UNDEF || a ^ (l & 1) as u8 == 1 {
                        lits.swap(1, k);
                        self.watches[l as usize].push(Watch {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if first_val == 0 {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let h = &mut self.clauses[cref as usize];
        if !h.learnt {
            return;
        }
        h.activity += self.clause_inc;
        if h.activity > 1e20 {
            for &c in &self.learnts {
                self.clauses[c as usize].activity *= 1e-20;
            }
            self.clause_inc *= 1e-20;
        }
    }

    /// First-UIP learning. Returns the learnt clause (asserting literal
    /// first, highest remaining level second) and its backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<u32>, u32) {
        let mut learnt: Vec<u32> = vec![0];
        let mut path = 0usize;
        let mut p: Option<u32> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            self.bump_clause(confl);
            let h = &self.clauses[confl as usize];
            let (start, len) = (h.start as usize, h.len as usize);
            let skip = usize::from(p.is_some());
            for k in skip..len {
                let q = self.arena[start + k];
                let v = (q >> 1) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[(self.trail[index] >> 1) as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = (lit >> 1) as usize;
            confl = self.reason[v];
            self.seen[v] = false;
            p = Some(lit);
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.expect("conflict analysis visits at least one literal") ^ 1;

        // Drop literals implied by other literals of the clause.
        let to_clear: Vec<u32> = learnt[1..].to_vec();
        let mut keep = 1;
        for i in 1..learnt.len() {
            let q = learnt[i];
            let r = self.reason[(q >> 1) as usize];
            let redundant = r != NO_REASON && {
                let h = &self.clauses[r as usize];
                let (start, len) = (h.start as usize, h.len as usize);
                (1..len).all(|k| {
                    let v = (self.arena[start + k] >> 1) as usize;
                    self.seen[v] || self.level[v] == 0
                })
            };
            if !redundant {
                learnt[keep] = q;
                keep += 1;
            }
        }
        learnt.truncate(keep);
        for q in to_clear {
            self.seen[(q >> 1) as usize] = false;
        }

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[(learnt[i] >> 1) as usize] > self.level[(learnt[best] >> 1) as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            bt = self.level[(learnt[1] >> 1) as usize];
        }
        (learnt, bt)
    }

    fn lbd(&self, lits: &[u32]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|&l| self.level[(l >> 1) as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let lit = self.trail[i];
            let v = (lit >> 1) as usize;
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = lit & 1 == 0;
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn next_random(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.rng_state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.rng_state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn pick_branch(&mut self) -> Option<u32> {
        if self.config.random_decision_freq > 0.0 && !self.heap.heap.is_empty() {
            let r = (self.next_random() >> 11) as f64 / (1u64 << 53) as f64;
            if r < self.config.random_decision_freq {
                let idx = (self.next_random() % self.heap.heap.len() as u64) as usize;
                let v = self.heap.heap[idx];
                if self.assigns[v as usize] == UNDEF {
                    return Some((v << 1) | u32::from(!self.polarity[v as usize]));
                }
            }
        }
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some((v << 1) | u32::from(!self.polarity[v as usize]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let h = &self.clauses[cref as usize];
        let first = self.arena[h.start as usize];
        let v = (first >> 1) as usize;
        self.reason[v] == cref && self.value(first) == 1
    }

    /// Deletes about half of the learnt clauses, then compacts the arena.
    fn reduce_db(&mut self) {
        let mut order = self.learnts.clone();
        order.sort_by(|&a, &b| {
            let (ha, hb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            hb.lbd
                .cmp(&ha.lbd)
                .then(ha.activity.partial_cmp(&hb.activity).unwrap_or(std::cmp::Ordering::Equal))
        });
        let target = order.len() / 2;
        let mut removed = 0;
        for &c in &order {
            if removed >= target {
                break;
            }
            if self.clauses[c as usize].lbd > 2 && !self.locked(c) {
                self.clauses[c as usize].deleted = true;
                removed += 1;
            }
        }

        let mut remap = vec![NO_REASON; self.clauses.len()];
        let mut arena = Vec::with_capacity(self.arena.len());
        let mut headers = Vec::with_capacity(self.clauses.len());
        for (old, h) in self.clauses.iter().enumerate() {
            if h.deleted {
                continue;
            }
            remap[old] = headers.len() as u32;
            let start = arena.len() as u32;
            arena.extend_from_slice(&self.arena[h.start as usize..(h.start + h.len) as usize]);
            headers.push(ClauseHeader { start, ..h.clone() });
        }
        for r in &mut self.reason {
            if *r != NO_REASON {
                *r = remap[*r as usize];
            }
        }
        self.learnts = self
            .learnts
            .iter()
            .map(|&c| remap[c as usize])
            .filter(|&c| c != NO_REASON)
            .collect();
        self.arena = arena;
        self.clauses = headers;
        for w in &mut self.watches {
            w.clear();
        }
        for (cref, h) in self.clauses.iter().enumerate() {
            let a = self.arena[h.start as usize];
            let b = self.arena[h.start as usize + 1];
            self.watches[a as usize].push(Watch {
                cref: cref as u32,
                blocker: b,
            });
            self.watches[b as usize].push(Watch {
                cref: cref as u32,
                blocker: a,
            });
        }
    }

    pub fn solve(&mut self, deadline: Option<Instant>) -> Result<SatResult, SolverError> {
        let started = Instant::now();
        if self.root_conflict || self.propagate().is_some() {
            return Ok(SatResult::Unsat);
        }
        let mut restart_index = 0u64;
        let mut restart_budget = luby(0) * self.config.restart_unit;
        let mut conflicts_since_restart = 0u64;
        let mut ticks = 0u32;
        loop {
            ticks += 1;
            if ticks & 0xFF == 0 {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Err(SolverError::Timeout {
                            elapsed: started.elapsed(),
                        });
                    }
                }
            }
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    return Ok(SatResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let lbd = self.lbd(&learnt);
                    let cref = self.attach(&learnt, true, lbd);
                    self.learnts.push(cref);
                    self.stats.learnt += 1;
                    self.bump_clause(cref);
                    self.enqueue(learnt[0], cref);
                }
                self.var_inc /= self.config.var_decay;
                self.clause_inc /= 0.999;
                if conflicts_since_restart >= restart_budget {
                    self.stats.restarts += 1;
                    restart_index += 1;
                    restart_budget = luby(restart_index) * self.config.restart_unit;
                    conflicts_since_restart = 0;
                    self.cancel_until(0);
                }
                if self.learnts.len() > self.max_learnts {
                    self.reduce_db();
                    self.max_learnts += self.max_learnts / 10;
                }
            } else {
                match self.pick_branch() {
                    None => return self.model(),
                    Some(lit) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(lit, NO_REASON);
                    }
                }
            }
        }
    }

    fn model(&self) -> Result<SatResult, SolverError> {
        let mut model = Model::new(self.num_vars as u32);
        for v in 0..self.num_vars {
            model.set(v as u32 + 1, self.assigns[v] == 1);
        }
        let mut offset = 0;
        for set in &self.original {
            if let Some(i) = set.iter().position(|c| !model.satisfies(c)) {
                return Err(SolverError::ModelRejected { clause: offset + i });
            }
            offset += set.len();
        }
        Ok(SatResult::Sat(model))
    }
}

/// Runs an external DIMACS solver: `argv = [path, file]`, exit status 10
/// means satisfiable (model on `v` lines), 20 unsatisfiable.
pub fn solve_external(cnf: &Cnf, solver: &Path, budget: Option<Duration>) -> Result<SatResult, SolverError> {
    let run = process::run_solver(solver, &write_dimacs(cnf), ".cnf", budget)?;
    match run.exit_code {
        Some(10) => {
            let model = parse_model_lines(&run.stdout, cnf.num_vars)?;
            if let Some(clause) = cnf.first_violated(&model) {
                return Err(SolverError::ModelRejected { clause });
            }
            Ok(SatResult::Sat(model))
        }
        Some(20) => Ok(SatResult::Unsat),
        other => Err(SolverError::Protocol(other)),
    }
}

/// Parses competition-style `v` lines. The model must end with a `0`
/// terminator; unmentioned variables default to false.
pub fn parse_model_lines(stdout: &str, num_vars: u32) -> Result<Model, SolverError> {
    let mut model = Model::new(num_vars);
    let mut saw_line = false;
    let mut terminated = false;
    for line in stdout.lines() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("v") {
            continue;
        }
        saw_line = true;
        for tok in parts {
            if terminated {
                return Err(SolverError::Output("literals after the 0 terminator".into()));
            }
            let value: i64 = tok
                .parse()
                .map_err(|_| SolverError::Output(format!("bad literal `{tok}` in model")))?;
            if value == 0 {
                terminated = true;
                continue;
            }
            if value.unsigned_abs() > u64::from(num_vars) {
                return Err(SolverError::Output(format!("model literal {value} out of range")));
            }
            model.set(value.unsigned_abs() as u32, value > 0);
        }
    }
    if !saw_line {
        return Err(SolverError::Output("satisfiable verdict without a model".into()));
    }
    if !terminated {
        return Err(SolverError::Output("model is not terminated by 0 (truncated output?)".into()));
    }
    Ok(model)
}
