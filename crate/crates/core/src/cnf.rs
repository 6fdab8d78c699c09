//! Clause sets, the Tseitin transformation, cardinality encodings and the
//! DIMACS / QDIMACS text formats.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::ops::Neg;
use std::sync::Arc;

use crate::error::DimacsError;
use crate::formula::{Connective, Formula};
use crate::qbf::QbfInstance;

/// A DIMACS literal: the variable index carries the magnitude, the sign the
/// polarity. Zero is never a literal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        assert!(var >= 1 && var <= i32::MAX as u32, "variable index out of range");
        let v = var as i32;
        Lit(if positive { v } else { -v })
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, true)
    }

    pub fn from_dimacs(value: i32) -> Option<Lit> {
        (value != 0 && value != i32::MIN).then_some(Lit(value))
    }

    #[inline]
    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    #[inline]
    pub fn to_dimacs(self) -> i32 {
        self.0
    }
}

impl Neg for Lit {
    type Output = Lit;

    #[inline]
    fn neg(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Clause = Vec<Lit>;

/// A total assignment over variables `1..=num_vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn new(num_vars: u32) -> Self {
        Model {
            values: vec![false; num_vars as usize + 1],
        }
    }

    pub fn from_values(values: impl IntoIterator<Item = bool>) -> Self {
        let mut v = vec![false];
        v.extend(values);
        Model { values: v }
    }

    pub fn num_vars(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.values[var as usize] = value;
    }

    /// Unknown variables read as false.
    pub fn value(&self, var: u32) -> bool {
        self.values.get(var as usize).copied().unwrap_or(false)
    }

    pub fn lit(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit(l))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn add_clause(&mut self, clause: impl IntoIterator<Item = Lit>) {
        let clause: Clause = clause.into_iter().collect();
        for l in &clause {
            self.num_vars = self.num_vars.max(l.var());
        }
        self.clauses.push(clause);
    }

    pub fn extend(&mut self, clauses: impl IntoIterator<Item = Clause>) {
        for c in clauses {
            self.add_clause(c);
        }
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Index of the first clause the model falsifies.
    pub fn first_violated(&self, model: &Model) -> Option<usize> {
        self.clauses.iter().position(|c| !model.satisfies(c))
    }
}

/// Hands out fresh variable indices; indices are never reused.
#[derive(Clone, Debug)]
pub struct VarAllocator {
    next: u32,
    names: BTreeMap<u32, String>,
}

impl Default for VarAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl VarAllocator {
    pub fn new() -> Self {
        VarAllocator {
            next: 1,
            names: BTreeMap::new(),
        }
    }

    /// An allocator whose first fresh index is `used + 1`.
    pub fn after(used: u32) -> Self {
        VarAllocator {
            next: used + 1,
            names: BTreeMap::new(),
        }
    }

    pub fn fresh(&mut self) -> Lit {
        let v = self.next;
        self.next += 1;
        Lit::pos(v)
    }

    pub fn fresh_named(&mut self, name: impl Into<String>) -> Lit {
        let l = self.fresh();
        self.names.insert(l.var(), name.into());
        l
    }

    /// Number of indices handed out so far.
    pub fn num_vars(&self) -> u32 {
        self.next - 1
    }

    pub fn name(&self, var: u32) -> Option<&str> {
        self.names.get(&var).map(String::as_str)
    }
}

/// Formula variables mapped to their CNF literals.
pub type VarMap = HashMap<Arc<str>, Lit>;

/// Clauses for `out ↔ φ`. Variable leaves reuse their mapped literal,
/// negations fold into literal polarity, and every binary subformula gets
/// one fresh variable with a full biconditional definition.
pub fn tseitin(formula: &Formula, out: Lit, vars: &VarMap, alloc: &mut VarAllocator) -> Cnf {
    let mut clauses = Vec::new();
    tseitin_into(formula, out, vars, alloc, &mut clauses);
    let mut cnf = Cnf::new(alloc.num_vars());
    cnf.extend(clauses);
    cnf
}

pub fn tseitin_into(
    formula: &Formula,
    out: Lit,
    vars: &VarMap,
    alloc: &mut VarAllocator,
    sink: &mut Vec<Clause>,
) {
    match formula {
        Formula::Var(_) | Formula::Not(_) => {
            let l = define(formula, vars, alloc, sink);
            push_equiv(sink, None, out, l);
        }
        Formula::False => sink.push(vec![-out]),
        Formula::Bin(c, l, r) => {
            let a = define(l, vars, alloc, sink);
            let b = define(r, vars, alloc, sink);
            push_gate(sink, None, out, *c, a, b);
        }
    }
}

fn define(formula: &Formula, vars: &VarMap, alloc: &mut VarAllocator, sink: &mut Vec<Clause>) -> Lit {
    match formula {
        Formula::Var(v) => *vars
            .get(v)
            .unwrap_or_else(|| panic!("variable `{v}` has no CNF index")),
        Formula::Not(c) => -define(c, vars, alloc, sink),
        Formula::False | Formula::Bin(..) => {
            let y = alloc.fresh();
            tseitin_into(formula, y, vars, alloc, sink);
            y
        }
    }
}

fn guarded(guard: Option<Lit>, lits: &[Lit]) -> Clause {
    let mut c = Vec::with_capacity(lits.len() + 1);
    if let Some(g) = guard {
        c.push(-g);
    }
    c.extend_from_slice(lits);
    c
}

/// `guard → (z ↔ a)`, or the plain biconditional without a guard.
pub fn push_equiv(sink: &mut Vec<Clause>, guard: Option<Lit>, z: Lit, a: Lit) {
    sink.push(guarded(guard, &[-z, a]));
    sink.push(guarded(guard, &[z, -a]));
}

/// `guard → (z ↔ a c b)`.
pub fn push_gate(sink: &mut Vec<Clause>, guard: Option<Lit>, z: Lit, conn: Connective, a: Lit, b: Lit) {
    match conn {
        Connective::And => {
            sink.push(guarded(guard, &[-z, a]));
            sink.push(guarded(guard, &[-z, b]));
            sink.push(guarded(guard, &[z, -a, -b]));
        }
        Connective::Or => {
            sink.push(guarded(guard, &[-z, a, b]));
            sink.push(guarded(guard, &[z, -a]));
            sink.push(guarded(guard, &[z, -b]));
        }
        Connective::Implies => {
            sink.push(guarded(guard, &[-z, -a, b]));
            sink.push(guarded(guard, &[z, a]));
            sink.push(guarded(guard, &[z, -b]));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("exactly-one constraint over an empty literal list")]
pub struct EmptyConstraint;

/// Pairwise encoding: one at-least-one clause plus `k(k-1)/2` binary
/// exclusions.
pub fn exactly_one(lits: &[Lit]) -> Result<Vec<Clause>, EmptyConstraint> {
    if lits.is_empty() {
        return Err(EmptyConstraint);
    }
    let mut out = Vec::with_capacity(1 + lits.len() * (lits.len() - 1) / 2);
    out.push(lits.to_vec());
    for (i, &a) in lits.iter().enumerate() {
        for &b in &lits[i + 1..] {
            out.push(vec![-a, -b]);
        }
    }
    Ok(out)
}

/// Sequential-counter encoding of "at most `k` of `lits` are true".
/// Register `s[i][j]` means at least `j + 1` of the first `i + 1` literals
/// are true.
pub fn at_most_k(lits: &[Lit], k: usize, alloc: &mut VarAllocator) -> Vec<Clause> {
    let n = lits.len();
    if k >= n {
        return Vec::new();
    }
    if k == 0 {
        return lits.iter().map(|&l| vec![-l]).collect();
    }
    let regs: Vec<Vec<Lit>> = (0..n - 1)
        .map(|_| (0..k).map(|_| alloc.fresh()).collect())
        .collect();
    let mut out = Vec::new();
    out.push(vec![-lits[0], regs[0][0]]);
    for r in &regs[0][1..] {
        out.push(vec![-*r]);
    }
    for i in 1..n - 1 {
        let x = lits[i];
        out.push(vec![-x, regs[i][0]]);
        out.push(vec![-regs[i - 1][0], regs[i][0]]);
        for j in 1..k {
            out.push(vec![-x, -regs[i - 1][j - 1], regs[i][j]]);
            out.push(vec![-regs[i - 1][j], regs[i][j]]);
        }
        out.push(vec![-x, -regs[i - 1][k - 1]]);
    }
    out.push(vec![-lits[n - 1], -regs[n - 2][k - 1]]);
    out
}

fn write_clauses(out: &mut String, clauses: &[Clause]) {
    for c in clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
}

pub fn write_dimacs(cnf: &Cnf) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len());
    write_clauses(&mut out, &cnf.clauses);
    out
}

/// Quantifier lines for the non-empty blocks, merged when an empty
/// universal block would leave two existential blocks adjacent.
pub fn write_qdimacs(q: &QbfInstance) -> String {
    let matrix = q.matrix();
    let mut out = format!("p cnf {} {}\n", matrix.num_vars, matrix.clauses.len());
    let mut blocks: Vec<(char, Vec<u32>)> = Vec::new();
    for (quant, vars) in [('e', q.outer()), ('a', q.universals()), ('e', q.inner())] {
        if vars.is_empty() {
            continue;
        }
        match blocks.last_mut() {
            Some((last, acc)) if *last == quant => acc.extend_from_slice(vars),
            _ => blocks.push((quant, vars.to_vec())),
        }
    }
    for (quant, vars) in blocks {
        out.push(quant);
        for v in vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    write_clauses(&mut out, &matrix.clauses);
    out
}

pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut cnf = Cnf::default();
    let mut current: Clause = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(malformed(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(malformed(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let vars = parts[2]
                .parse::<u32>()
                .map_err(|_| malformed(line_no, "bad variable count"))?;
            let clauses = parts[3]
                .parse::<usize>()
                .map_err(|_| malformed(line_no, "bad clause count"))?;
            cnf.num_vars = vars;
            header = Some((vars, clauses));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(malformed(line_no, "clause before header"));
        };
        for tok in line.split_whitespace() {
            let value: i64 = tok
                .parse()
                .map_err(|_| malformed(line_no, &format!("bad literal `{tok}`")))?;
            if value == 0 {
                cnf.clauses.push(std::mem::take(&mut current));
                continue;
            }
            if value.unsigned_abs() > u64::from(num_vars) {
                return Err(DimacsError::LiteralOutOfRange {
                    line: line_no,
                    literal: value,
                    num_vars,
                });
            }
            current.push(Lit(value as i32));
        }
    }
    let Some((_, expected)) = header else {
        return Err(malformed(last_line.max(1), "missing header"));
    };
    if !current.is_empty() {
        return Err(malformed(last_line, "last clause is not terminated by 0"));
    }
    if cnf.clauses.len() != expected {
        return Err(malformed(
            last_line.max(1),
            &format!("header declares {expected} clauses, found {}", cnf.clauses.len()),
        ));
    }
    Ok(cnf)
}

/// Reads a QDIMACS instance whose prefix fits `∃∀∃`. Free variables join
/// the outer block.
pub fn parse_qdimacs(text: &str) -> Result<QbfInstance, DimacsError> {
    let mut blocks: Vec<(char, Vec<u32>, usize)> = Vec::new();
    let mut matrix_text = String::with_capacity(text.len());
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let quant = match line.chars().next() {
            Some(q @ ('e' | 'a')) if line[1..].starts_with(char::is_whitespace) || line.len() == 1 => q,
            _ => {
                matrix_text.push_str(raw);
                matrix_text.push('\n');
                continue;
            }
        };
        matrix_text.push('\n');
        let mut vars = Vec::new();
        let mut terminated = false;
        for tok in line[1..].split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| malformed(idx + 1, &format!("bad variable `{tok}`")))?;
            if terminated {
                return Err(malformed(idx + 1, "tokens after terminating 0"));
            }
            if v == 0 {
                terminated = true;
            } else {
                vars.push(v);
            }
        }
        if !terminated {
            return Err(malformed(idx + 1, "quantifier line is not terminated by 0"));
        }
        match blocks.last_mut() {
            Some((last, acc, _)) if *last == quant => acc.extend(vars),
            _ => blocks.push((quant, vars, idx + 1)),
        }
    }
    let matrix = parse_dimacs(&matrix_text)?;
    let mut slots: [Vec<u32>; 3] = Default::default();
    let mut pos = 0;
    for (quant, vars, line) in blocks {
        pos = match (pos, quant) {
            (0, 'e') => 0,
            (0 | 1, 'a') => 1,
            (1, 'e') => 2,
            _ => return Err(malformed(line, "prefix is not of the form e a e")),
        };
        for &v in &vars {
            if v > matrix.num_vars {
                return Err(DimacsError::LiteralOutOfRange {
                    line,
                    literal: i64::from(v),
                    num_vars: matrix.num_vars,
                });
            }
        }
        slots[pos].extend(vars);
    }
    let [mut outer, universals, inner] = slots;
    let mut bound = vec![false; matrix.num_vars as usize + 1];
    for &v in outer.iter().chain(&universals).chain(&inner) {
        bound[v as usize] = true;
    }
    let mut free: Vec<u32> = matrix
        .clauses
        .iter()
        .flatten()
        .map(|l| l.var())
        .filter(|&v| !bound[v as usize])
        .collect();
    free.sort_unstable();
    free.dedup();
    free.extend(outer);
    outer = free;
    QbfInstance::new(outer, universals, inner, matrix).map_err(|e| malformed(1, &e.to_string()))
}

fn malformed(line: usize, message: &str) -> DimacsError {
    DimacsError::Malformed {
        line,
        message: message.to_string(),
    }
}
