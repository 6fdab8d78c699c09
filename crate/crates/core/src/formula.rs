//! Propositional formulae: syntax trees, parsing, printing and truth tables.
//!
//! Text grammar, loosest binding first:
//!
//! ```text
//! formula := impl
//! impl    := or ("->" impl)?          right associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | atom
//! atom    := IDENT | "false" | "(" formula ")"
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::FormulaError;

/// Largest variable count for which truth tables are materialised.
pub const TRUTH_TABLE_VAR_CAP: usize = 24;

/// Binary connectives. Negation is a separate node kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Connective {
    And,
    Or,
    Implies,
}

impl Connective {
    pub const ALL: [Connective; 3] = [Connective::And, Connective::Or, Connective::Implies];

    #[inline]
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Connective::And => a && b,
            Connective::Or => a || b,
            Connective::Implies => !a || b,
        }
    }

    #[inline]
    fn apply_word(self, a: u64, b: u64) -> u64 {
        match self {
            Connective::And => a & b,
            Connective::Or => a | b,
            Connective::Implies => !a | b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Connective::And => "&",
            Connective::Or => "|",
            Connective::Implies => "->",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Connective::And => "and",
            Connective::Or => "or",
            Connective::Implies => "implies",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Connective::Implies => 1,
            Connective::Or => 2,
            Connective::And => 3,
        }
    }
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Connective {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "and" | "&" => Ok(Connective::And),
            "or" | "|" => Ok(Connective::Or),
            "implies" | "imp" | "->" => Ok(Connective::Implies),
            other => Err(FormulaError::UnknownConnective(other.to_string())),
        }
    }
}

/// An immutable propositional formula. Subtrees are reference counted, so
/// cloning is cheap and values can be shared across threads.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Var(Arc<str>),
    False,
    Not(Arc<Formula>),
    Bin(Connective, Arc<Formula>, Arc<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<Arc<str>>) -> Formula {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Formula {
        Formula::Not(Arc::new(child))
    }

    pub fn bin(conn: Connective, left: Formula, right: Formula) -> Formula {
        Formula::Bin(conn, Arc::new(left), Arc::new(right))
    }

    pub fn and(left: Formula, right: Formula) -> Formula {
        Formula::bin(Connective::And, left, right)
    }

    pub fn or(left: Formula, right: Formula) -> Formula {
        Formula::bin(Connective::Or, left, right)
    }

    pub fn implies(left: Formula, right: Formula) -> Formula {
        Formula::bin(Connective::Implies, left, right)
    }

    /// Number of symbols; parentheses are not counted.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::False => 1,
            Formula::Not(c) => 1 + c.size(),
            Formula::Bin(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::False => 0,
            Formula::Not(c) => 1 + c.depth(),
            Formula::Bin(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Distinct variable names, in lexicographic order.
    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Var(v) => {
                if !out.contains(v) {
                    out.insert(v.clone());
                }
            }
            Formula::False => {}
            Formula::Not(c) => c.collect_vars(out),
            Formula::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Binary connectives occurring anywhere in the formula.
    pub fn connectives(&self) -> BTreeSet<Connective> {
        fn go(f: &Formula, out: &mut BTreeSet<Connective>) {
            match f {
                Formula::Var(_) | Formula::False => {}
                Formula::Not(c) => go(c, out),
                Formula::Bin(c, l, r) => {
                    out.insert(*c);
                    go(l, out);
                    go(r, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn evaluate(&self, assignment: &Assignment) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::Var(v) => assignment
                .get(v)
                .ok_or_else(|| FormulaError::UnboundVariable(v.to_string()))?,
            Formula::False => false,
            Formula::Not(c) => !c.evaluate(assignment)?,
            Formula::Bin(conn, l, r) => conn.apply(l.evaluate(assignment)?, r.evaluate(assignment)?),
        })
    }

    /// Truth table over `vars`, which must contain every variable of the
    /// formula. Assignment index `i` binds `vars[0]` to the most significant
    /// bit of `i`.
    pub fn truth_table(&self, vars: &[Arc<str>]) -> Result<TruthTable, FormulaError> {
        if vars.len() > TRUTH_TABLE_VAR_CAP {
            return Err(FormulaError::VariableCap {
                vars: vars.len(),
                cap: TRUTH_TABLE_VAR_CAP,
            });
        }
        let n = vars.len();
        let n_bits = 1usize << n;
        let n_words = n_bits.div_ceil(64);
        let mut words = Vec::with_capacity(n_words);
        for w in 0..n_words {
            words.push(self.eval_word(vars, w)?);
        }
        if n_bits < 64 {
            words[0] &= (1u64 << n_bits) - 1;
        }
        Ok(TruthTable {
            vars: vars.to_vec(),
            words,
        })
    }

    fn eval_word(&self, vars: &[Arc<str>], word: usize) -> Result<u64, FormulaError> {
        Ok(match self {
            Formula::Var(v) => {
                let k = vars
                    .iter()
                    .position(|x| Arc::ptr_eq(x, v) || **x == **v)
                    .ok_or_else(|| FormulaError::UnboundVariable(v.to_string()))?;
                var_word(vars.len() - 1 - k, word)
            }
            Formula::False => 0,
            Formula::Not(c) => !c.eval_word(vars, word)?,
            Formula::Bin(conn, l, r) => {
                conn.apply_word(l.eval_word(vars, word)?, r.eval_word(vars, word)?)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Bin(c, _, _) => c.precedence(),
            _ => 4,
        }
    }

    fn write_prec(&self, out: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let parens = self.precedence() < min_prec;
        if parens {
            out.write_str("(")?;
        }
        match self {
            Formula::Var(v) => out.write_str(v)?,
            Formula::False => out.write_str("false")?,
            Formula::Not(c) => {
                out.write_str("!")?;
                c.write_prec(out, 4)?;
            }
            Formula::Bin(conn, l, r) => {
                let p = conn.precedence();
                // & and | associate to the left, -> to the right.
                let (lp, rp) = match conn {
                    Connective::Implies => (p + 1, p),
                    _ => (p, p + 1),
                };
                l.write_prec(out, lp)?;
                write!(out, " {} ", conn.symbol())?;
                r.write_prec(out, rp)?;
            }
        }
        if parens {
            out.write_str(")")?;
        }
        Ok(())
    }
}

/// Bit pattern of the variable bound to assignment bit `bit` across the 64
/// assignments of word `word`.
#[inline]
fn var_word(bit: usize, word: usize) -> u64 {
    const PATTERNS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if bit < 6 {
        PATTERNS[bit]
    } else if (word >> (bit - 6)) & 1 == 1 {
        u64::MAX
    } else {
        0
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Formula({self})")
    }
}

impl FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Truth tables agree on the union of both variable sets.
pub fn equivalent_tt(a: &Formula, b: &Formula) -> Result<bool, FormulaError> {
    let mut vars = a.vars();
    vars.extend(b.vars());
    let vars: Vec<_> = vars.into_iter().collect();
    Ok(a.truth_table(&vars)? == b.truth_table(&vars)?)
}

/// A total map from variable names to truth values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: HashMap<Arc<str>, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: impl Into<Arc<str>>, value: bool) {
        self.values.insert(var.into(), value);
    }

    pub fn with(mut self, var: impl Into<Arc<str>>, value: bool) -> Self {
        self.set(var, value);
        self
    }

    pub fn get(&self, var: &str) -> Option<bool> {
        self.values.get(var).copied()
    }

    /// The assignment with truth-table index `index` over `vars`.
    pub fn from_index(vars: &[Arc<str>], index: usize) -> Self {
        let n = vars.len();
        let values = vars
            .iter()
            .enumerate()
            .map(|(k, v)| (v.clone(), (index >> (n - 1 - k)) & 1 == 1))
            .collect();
        Assignment { values }
    }
}

/// Value of a formula under every assignment of an ordered variable list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    vars: Vec<Arc<str>>,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn vars(&self) -> &[Arc<str>] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        1 << self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bit(&self, index: usize) -> bool {
        assert!(index < self.len(), "assignment index out of range");
        (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    False,
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::False => "`false`".into(),
            Token::Not => "`!`".into(),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Implies => "`->`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

/// Tokens paired with their 1-based column.
fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => out.push((Token::Not, column)),
            '&' => out.push((Token::And, column)),
            '|' => out.push((Token::Or, column)),
            '(' => out.push((Token::LParen, column)),
            ')' => out.push((Token::RParen, column)),
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Token::Implies, column));
                i += 2;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = if word == "false" {
                    Token::False
                } else {
                    Token::Ident(word)
                };
                out.push((tok, column));
                continue;
            }
            other => {
                return Err(FormulaError::Parse {
                    column,
                    message: format!("unknown token `{other}`"),
                })
            }
        }
        i += 1;
    }
    out.push((Token::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    names: HashMap<String, Arc<str>>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn column(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].0.clone();
        if tok != Token::End {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &str) -> FormulaError {
        FormulaError::Parse {
            column: self.column(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let left = self.disjunction()?;
        if *self.peek() == Token::Implies {
            self.bump();
            let right = self.implication()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Token::Or {
            self.bump();
            let rhs = self.conjunction()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        while *self.peek() == Token::And {
            self.bump();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if *self.peek() == Token::Not {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().clone() {
            Token::Ident(name) => {
                self.bump();
                let name = self
                    .names
                    .entry(name.clone())
                    .or_insert_with(|| Arc::from(name.as_str()))
                    .clone();
                Ok(Formula::Var(name))
            }
            Token::False => {
                self.bump();
                Ok(Formula::False)
            }
            Token::LParen => {
                self.bump();
                let inner = self.implication()?;
                if *self.peek() != Token::RParen {
                    return Err(self.error("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error("a formula")),
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        names: HashMap::new(),
    };
    let formula = parser.implication()?;
    if *parser.peek() != Token::End {
        return Err(parser.error("an operator or end of input"));
    }
    Ok(formula)
}
