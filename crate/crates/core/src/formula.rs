//! Syntax of the logic: moduli, connectives, signatures, terms, formulas,
//! the s-expression reader and printer, and modulus inference.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::coquantale::CoQuantale;
use crate::lattice::Elem;

pub const MAX_VARS: usize = 64;
pub const RESERVED: [&str; 5] = ["d", "conn", "val", "sup", "inf"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` is not an element of the co-quantale")]
    UnknownElement(String),
    #[error("modulus of `{symbol}` is violated at ε={eps}: {witness}")]
    ModulusViolated {
        symbol: String,
        eps: String,
        witness: String,
    },
    #[error("bad modulus: {0}")]
    BadModulus(String),
    #[error("symbol `{0}` is declared twice")]
    DuplicateSymbol(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("`{0}` is not a valid symbol name")]
    BadName(String),
    #[error("arity of `{0}` must be at least 1")]
    ZeroArity(String),
    #[error("co-quantale `{0}` is not a value co-quantale")]
    NotValue(String),
}

/// A table `ε ↦ δ` on the positives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Modulus {
    /// Indexed by element; `None` off the positives.
    map: Vec<Option<Elem>>,
}

impl Modulus {
    pub fn from_fn(v: &CoQuantale, f: impl Fn(Elem) -> Elem) -> Self {
        Modulus {
            map: v.elements().map(|e| v.is_positive(e).then(|| f(e))).collect(),
        }
    }

    pub fn identity(v: &CoQuantale) -> Self {
        Self::from_fn(v, |e| e)
    }

    pub fn constant(v: &CoQuantale, delta: Elem) -> Self {
        Self::from_fn(v, |_| delta)
    }

    /// `ε ↦` a maximal `δ` with `δ + δ ≺ ε`.
    pub fn halver(v: &CoQuantale) -> Self {
        Self::from_fn(v, |e| v.epsilon_halver(e).expect("value co-quantales have halvers"))
    }

    /// Explicit `(ε, δ)` pairs; every positive `ε` must be listed once and
    /// every `δ` must be positive.
    pub fn from_pairs(v: &CoQuantale, pairs: &[(Elem, Elem)]) -> Result<Self, FormulaError> {
        let mut map = vec![None; v.len()];
        for &(e, d) in pairs {
            if !v.is_positive(e) {
                return Err(FormulaError::BadModulus(format!("`{}` is not positive", v.elem_name(e))));
            }
            if !v.is_positive(d) {
                return Err(FormulaError::BadModulus(format!("`{}` is not positive", v.elem_name(d))));
            }
            if map[e].replace(d).is_some() {
                return Err(FormulaError::BadModulus(format!("ε={} listed twice", v.elem_name(e))));
            }
        }
        if let Some(e) = v.positives().into_iter().find(|&e| map[e].is_none()) {
            return Err(FormulaError::BadModulus(format!("no δ for ε={}", v.elem_name(e))));
        }
        Ok(Modulus { map })
    }

    pub fn at(&self, eps: Elem) -> Elem {
        self.map[eps].expect("moduli are only applied to positives")
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        self.map.iter().enumerate().filter_map(|(e, d)| d.map(|d| (e, d)))
    }

    /// `ε ↦ inner(self(ε))`: `self` belongs to the outer map.
    pub fn then(&self, inner: &Modulus) -> Modulus {
        Modulus {
            map: self.map.iter().map(|d| d.map(|d| inner.at(d))).collect(),
        }
    }

    pub fn meet(&self, other: &Modulus, v: &CoQuantale) -> Modulus {
        Modulus {
            map: self
                .map
                .iter()
                .zip(&other.map)
                .map(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => Some(v.meet(*a, *b)),
                    _ => None,
                })
                .collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pairs().all(|(e, d)| e == d)
    }

    /// Given `worst[δ₀]`, the join of every output distance observed at
    /// input distance `δ₀`, returns the first `(δ₀, ε)` with `δ₀ ≤ Δ(ε)` but
    /// `worst[δ₀] ≰ ε`.
    pub fn first_violation(&self, v: &CoQuantale, worst: &[Elem]) -> Option<(Elem, Elem)> {
        for (eps, delta) in self.pairs() {
            for d0 in v.elements() {
                if v.leq(d0, delta) && !v.leq(worst[d0], eps) {
                    return Some((d0, eps));
                }
            }
        }
        None
    }

    pub fn render(&self, v: &CoQuantale) -> String {
        if self.is_identity() {
            return "id".to_string();
        }
        let parts: Vec<String> = self
            .pairs()
            .map(|(e, d)| format!("{} {}", v.elem_name(e), v.elem_name(d)))
            .collect();
        parts.join(" ")
    }
}

/// Index of the tuple `args` in a row-major table over `base^len`.
pub fn tuple_index(args: &[usize], base: usize) -> usize {
    args.iter().fold(0, |acc, &a| acc * base + a)
}

/// All tuples over `base^len` in row-major order.
pub fn tuples(base: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let count = base.checked_pow(len as u32).expect("tuple count overflows");
    (0..count).map(move |mut i| {
        let mut t = vec![0; len];
        for slot in t.iter_mut().rev() {
            *slot = i % base;
            i /= base;
        }
        t
    })
}

/// A map `V^n → V` with a verified modulus (symmetric distance on both
/// sides, join over coordinates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connective {
    pub name: String,
    pub arity: usize,
    table: Vec<Elem>,
    pub modulus: Modulus,
}

impl Connective {
    pub fn register(
        v: &CoQuantale,
        name: impl Into<String>,
        arity: usize,
        table: Vec<Elem>,
        modulus: Modulus,
    ) -> Result<Self, FormulaError> {
        let name = name.into();
        if arity == 0 {
            return Err(FormulaError::ZeroArity(name));
        }
        let n = v.len();
        if table.len() != n.pow(arity as u32) || table.iter().any(|&e| e >= n) {
            return Err(FormulaError::BadModulus(format!("table of `{name}` has the wrong shape")));
        }
        let dist = |a: &[Elem], b: &[Elem]| {
            a.iter()
                .zip(b)
                .fold(v.zero(), |acc, (&x, &y)| v.join(acc, v.dsym(x, y)))
        };
        let all: Vec<Vec<Elem>> = tuples(n, arity).collect();
        let mut worst = vec![v.zero(); n];
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let d0 = dist(a, b);
                worst[d0] = v.join(worst[d0], v.dsym(table[i], table[j]));
            }
        }
        if let Some((d0, eps)) = modulus.first_violation(v, &worst) {
            let names = |t: &[Elem]| t.iter().map(|&e| v.elem_name(e)).collect::<Vec<_>>().join(",");
            let (i, j) = (0..all.len())
                .flat_map(|i| (0..all.len()).map(move |j| (i, j)))
                .find(|&(i, j)| dist(&all[i], &all[j]) == d0 && !v.leq(v.dsym(table[i], table[j]), eps))
                .expect("violation has a witness pair");
            return Err(FormulaError::ModulusViolated {
                symbol: name,
                eps: v.elem_name(eps).to_string(),
                witness: format!("({}) vs ({})", names(&all[i]), names(&all[j])),
            });
        }
        Ok(Connective {
            name,
            arity,
            table,
            modulus,
        })
    }

    pub fn apply(&self, args: &[Elem], base: usize) -> Elem {
        self.table[tuple_index(args, base)]
    }

    pub fn unary(&self, a: Elem) -> Elem {
        self.table[a]
    }

    pub fn binary(&self, a: Elem, b: Elem, base: usize) -> Elem {
        self.table[a * base + b]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
    pub modulus: Modulus,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub predicates: Vec<Symbol>,
    pub functions: Vec<Symbol>,
    pub constants: Vec<String>,
}

fn check_name(name: &str) -> Result<(), FormulaError> {
    if RESERVED.contains(&name) {
        return Err(FormulaError::Reserved(name.to_string()));
    }
    let bad = name.is_empty()
        || name.chars().any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '#')
        || parse_var(name).is_some();
    if bad {
        return Err(FormulaError::BadName(name.to_string()));
    }
    Ok(())
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    fn taken(&self, name: &str) -> bool {
        self.predicates.iter().any(|s| s.name == name)
            || self.functions.iter().any(|s| s.name == name)
            || self.constants.iter().any(|c| c == name)
    }

    fn admit(&self, name: &str) -> Result<(), FormulaError> {
        check_name(name)?;
        if self.taken(name) {
            return Err(FormulaError::DuplicateSymbol(name.to_string()));
        }
        Ok(())
    }

    pub fn add_predicate(&mut self, name: &str, arity: usize, modulus: Modulus) -> Result<usize, FormulaError> {
        self.admit(name)?;
        if arity == 0 {
            return Err(FormulaError::ZeroArity(name.to_string()));
        }
        self.predicates.push(Symbol {
            name: name.to_string(),
            arity,
            modulus,
        });
        Ok(self.predicates.len() - 1)
    }

    pub fn add_function(&mut self, name: &str, arity: usize, modulus: Modulus) -> Result<usize, FormulaError> {
        self.admit(name)?;
        if arity == 0 {
            return Err(FormulaError::ZeroArity(name.to_string()));
        }
        self.functions.push(Symbol {
            name: name.to_string(),
            arity,
            modulus,
        });
        Ok(self.functions.len() - 1)
    }

    pub fn add_constant(&mut self, name: &str) -> Result<usize, FormulaError> {
        self.admit(name)?;
        self.constants.push(name.to_string());
        Ok(self.constants.len() - 1)
    }

    pub fn predicate(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|s| s.name == name)
    }

    pub fn function(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|s| s.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }
}

/// A signature over a value co-quantale plus its connective kit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    v: Arc<CoQuantale>,
    pub sig: Signature,
    connectives: Vec<Connective>,
    halver: Modulus,
}

impl Language {
    /// Registers the default kit: `vee`, `wedge`, `plus`, `sub`, `id`, and
    /// `monus:<b>` for every dualizer `b`. Kit members whose modulus fails
    /// on this carrier are left out.
    pub fn new(v: Arc<CoQuantale>, sig: Signature) -> Result<Self, FormulaError> {
        if !v.is_value() {
            return Err(FormulaError::NotValue(v.name().to_string()));
        }
        let n = v.len();
        let binary = |f: &dyn Fn(Elem, Elem) -> Elem| -> Vec<Elem> {
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| f(a, b)).collect()
        };
        let id = Modulus::identity(&v);
        let half = Modulus::halver(&v);
        let mut candidates = vec![
            ("vee".to_string(), 2, binary(&|a, b| v.join(a, b)), id.clone()),
            ("wedge".to_string(), 2, binary(&|a, b| v.meet(a, b)), id.clone()),
            ("plus".to_string(), 2, binary(&|a, b| v.add(a, b)), half.clone()),
            ("sub".to_string(), 2, binary(&|a, b| v.trunc_sub(a, b)), half.clone()),
            ("id".to_string(), 1, (0..n).collect(), id.clone()),
        ];
        for &b in v.dualizing_elements() {
            let table = (0..n).map(|a| v.trunc_sub(b, a)).collect();
            candidates.push((format!("monus:{}", v.elem_name(b)), 1, table, id.clone()));
        }
        let mut lang = Language {
            v,
            sig,
            connectives: Vec::new(),
            halver: half,
        };
        for (name, arity, table, modulus) in candidates {
            if let Ok(c) = Connective::register(&lang.v, name, arity, table, modulus) {
                lang.connectives.push(c);
            }
        }
        Ok(lang)
    }

    /// Adds a user connective after verifying its modulus.
    pub fn register(&mut self, name: &str, arity: usize, table: Vec<Elem>, modulus: Modulus) -> Result<usize, FormulaError> {
        check_name(name)?;
        if self.connective(name).is_some() {
            return Err(FormulaError::DuplicateSymbol(name.to_string()));
        }
        let c = Connective::register(&self.v, name, arity, table, modulus)?;
        self.connectives.push(c);
        Ok(self.connectives.len() - 1)
    }

    pub fn v(&self) -> &CoQuantale {
        &self.v
    }

    pub fn v_arc(&self) -> &Arc<CoQuantale> {
        &self.v
    }

    pub fn halver(&self) -> &Modulus {
        &self.halver
    }

    pub fn connectives(&self) -> &[Connective] {
        &self.connectives
    }

    pub fn connective(&self, name: &str) -> Option<usize> {
        self.connectives.iter().position(|c| c.name == name)
    }

    pub fn conn(&self, i: usize) -> &Connective {
        &self.connectives[i]
    }

    /// Indices of the `monus:<b>` connectives.
    pub fn dualizer_connectives(&self) -> Vec<usize> {
        (0..self.connectives.len())
            .filter(|&i| self.connectives[i].name.starts_with("monus:"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    Const(usize),
    App(usize, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Dist(Term, Term),
    Pred(usize, Vec<Term>),
    Conn(usize, Vec<Formula>),
    Val(Elem),
    Sup(usize, Box<Formula>),
    Inf(usize, Box<Formula>),
}

impl Term {
    pub fn vars(&self) -> u64 {
        match self {
            Term::Var(i) => 1 << i,
            Term::Const(_) => 0,
            Term::App(_, ts) => ts.iter().fold(0, |acc, t| acc | t.vars()),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.vars() == 0
    }

    pub fn modulus(&self, lang: &Language) -> Modulus {
        let v = lang.v();
        match self {
            Term::Var(_) => Modulus::identity(v),
            Term::Const(_) => Modulus::constant(v, v.top()),
            Term::App(f, ts) => args_modulus(&lang.sig.functions[*f].modulus, ts, lang),
        }
    }
}

fn args_modulus(outer: &Modulus, ts: &[Term], lang: &Language) -> Modulus {
    let v = lang.v();
    let mut acc = Modulus::constant(v, v.top());
    for t in ts {
        acc = acc.meet(&outer.then(&t.modulus(lang)), v);
    }
    acc
}

impl Formula {
    /// Free variables as a bitmask.
    pub fn free_vars(&self) -> u64 {
        match self {
            Formula::Dist(a, b) => a.vars() | b.vars(),
            Formula::Pred(_, ts) => ts.iter().fold(0, |acc, t| acc | t.vars()),
            Formula::Conn(_, fs) => fs.iter().fold(0, |acc, f| acc | f.free_vars()),
            Formula::Val(_) => 0,
            Formula::Sup(x, body) | Formula::Inf(x, body) => body.free_vars() & !(1 << x),
        }
    }

    /// Every variable occurring anywhere, bound or free.
    pub fn all_vars(&self) -> u64 {
        match self {
            Formula::Dist(a, b) => a.vars() | b.vars(),
            Formula::Pred(_, ts) => ts.iter().fold(0, |acc, t| acc | t.vars()),
            Formula::Conn(_, fs) => fs.iter().fold(0, |acc, f| acc | f.all_vars()),
            Formula::Val(_) => 0,
            Formula::Sup(x, body) | Formula::Inf(x, body) => body.all_vars() | 1 << x,
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars() == 0
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Dist(..) | Formula::Pred(..) | Formula::Val(_) => true,
            Formula::Conn(_, fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Sup(..) | Formula::Inf(..) => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Dist(..) | Formula::Pred(..) | Formula::Val(_) => 0,
            Formula::Conn(_, fs) => 1 + fs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Sup(_, b) | Formula::Inf(_, b) => 1 + b.depth(),
        }
    }

    /// One past the largest variable index used, i.e. the assignment window
    /// needed to evaluate the formula.
    pub fn window(&self) -> usize {
        (64 - self.all_vars().leading_zeros()) as usize
    }

    /// A modulus valid for this formula in every structure for `lang`:
    /// atoms compose their symbol's modulus with the term moduli, `d` uses
    /// the halver, connectives compose, quantifiers pass through.
    pub fn infer_modulus(&self, lang: &Language) -> Modulus {
        let v = lang.v();
        match self {
            Formula::Dist(a, b) => {
                let half = lang.halver();
                half.then(&a.modulus(lang)).meet(&half.then(&b.modulus(lang)), v)
            }
            Formula::Pred(p, ts) => args_modulus(&lang.sig.predicates[*p].modulus, ts, lang),
            Formula::Conn(c, fs) => {
                let outer = &lang.conn(*c).modulus;
                fs.iter().fold(Modulus::constant(v, v.top()), |acc, f| {
                    acc.meet(&outer.then(&f.infer_modulus(lang)), v)
                })
            }
            Formula::Val(_) => Modulus::constant(v, v.top()),
            Formula::Sup(_, body) | Formula::Inf(_, body) => body.infer_modulus(lang),
        }
    }
}

pub fn var_name(i: usize) -> String {
    format!("x{i}")
}

fn parse_var(tok: &str) -> Option<usize> {
    let digits = tok.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub fn print_term(t: &Term, lang: &Language) -> String {
    match t {
        Term::Var(i) => var_name(*i),
        Term::Const(c) => lang.sig.constants[*c].clone(),
        Term::App(f, ts) => {
            let mut s = format!("({}", lang.sig.functions[*f].name);
            for t in ts {
                s.push(' ');
                s.push_str(&print_term(t, lang));
            }
            s.push(')');
            s
        }
    }
}

pub fn print_formula(f: &Formula, lang: &Language) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, lang);
    out
}

fn write_formula(out: &mut String, f: &Formula, lang: &Language) {
    match f {
        Formula::Dist(a, b) => {
            let _ = write!(out, "(d {} {})", print_term(a, lang), print_term(b, lang));
        }
        Formula::Pred(p, ts) => {
            out.push('(');
            out.push_str(&lang.sig.predicates[*p].name);
            for t in ts {
                out.push(' ');
                out.push_str(&print_term(t, lang));
            }
            out.push(')');
        }
        Formula::Conn(c, fs) => {
            let _ = write!(out, "(conn {}", lang.conn(*c).name);
            for g in fs {
                out.push(' ');
                write_formula(out, g, lang);
            }
            out.push(')');
        }
        Formula::Val(e) => {
            let _ = write!(out, "(val {})", lang.v().elem_name(*e));
        }
        Formula::Sup(x, body) | Formula::Inf(x, body) => {
            let q = if matches!(f, Formula::Sup(..)) { "sup" } else { "inf" };
            let _ = write!(out, "({q} {} ", var_name(*x));
            write_formula(out, body, lang);
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

struct Reader<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    lang: &'a Language,
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '(' => {
                toks.push((i, Tok::Open));
                chars.next();
            }
            ')' => {
                toks.push((i, Tok::Close));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut atom = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                toks.push((i, Tok::Atom(atom)));
            }
        }
    }
    toks
}

impl<'a> Reader<'a> {
    fn new(text: &str, lang: &'a Language) -> Self {
        Reader {
            toks: tokenize(text),
            at: 0,
            end: text.len(),
            lang,
        }
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn expect_open(&mut self) -> Result<(), FormulaError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.at += 1;
                Ok(())
            }
            _ => self.err("expected `(`"),
        }
    }

    fn expect_close(&mut self) -> Result<(), FormulaError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.at += 1;
                Ok(())
            }
            Some(_) => self.err("expected `)`"),
            None => self.err("unexpected end of input"),
        }
    }

    fn atom(&mut self, what: &str) -> Result<String, FormulaError> {
        match self.peek() {
            Some(Tok::Atom(_)) => match self.next() {
                Some(Tok::Atom(a)) => Ok(a),
                _ => unreachable!(),
            },
            Some(_) => self.err(format!("expected {what}")),
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn var(&mut self) -> Result<usize, FormulaError> {
        let a = self.atom("a variable")?;
        match parse_var(&a) {
            Some(i) if i < MAX_VARS => Ok(i),
            Some(_) => {
                self.at -= 1;
                self.err(format!("variable index of `{a}` exceeds {}", MAX_VARS - 1))
            }
            None => {
                self.at -= 1;
                self.err(format!("`{a}` is not a variable"))
            }
        }
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        match self.peek() {
            Some(Tok::Atom(_)) => {
                let a = self.atom("a term")?;
                if let Some(i) = parse_var(&a) {
                    if i >= MAX_VARS {
                        self.at -= 1;
                        return self.err(format!("variable index of `{a}` exceeds {}", MAX_VARS - 1));
                    }
                    return Ok(Term::Var(i));
                }
                self.lang
                    .sig
                    .constant(&a)
                    .map(Term::Const)
                    .ok_or(FormulaError::UnknownSymbol(a))
            }
            Some(Tok::Open) => {
                self.at += 1;
                let name = self.atom("a function symbol")?;
                let f = self.lang.sig.function(&name).ok_or_else(|| FormulaError::UnknownSymbol(name.clone()))?;
                let args = self.terms()?;
                self.expect_close()?;
                let expected = self.lang.sig.functions[f].arity;
                if args.len() != expected {
                    return Err(FormulaError::ArityMismatch {
                        symbol: name,
                        expected,
                        got: args.len(),
                    });
                }
                Ok(Term::App(f, args))
            }
            Some(Tok::Close) => self.err("expected a term"),
            None => self.err("expected a term, found end of input"),
        }
    }

    fn terms(&mut self) -> Result<Vec<Term>, FormulaError> {
        let mut ts = Vec::new();
        while !matches!(self.peek(), Some(Tok::Close) | None) {
            ts.push(self.term()?);
        }
        Ok(ts)
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        self.expect_open()?;
        let head = self.atom("a formula head")?;
        let f = match head.as_str() {
            "d" => {
                let a = self.term()?;
                let b = self.term()?;
                Formula::Dist(a, b)
            }
            "val" => {
                let e = self.atom("an element")?;
                let v = self.lang.v();
                Formula::Val(v.index_of(&e).ok_or(FormulaError::UnknownElement(e))?)
            }
            "sup" | "inf" => {
                let x = self.var()?;
                let body = Box::new(self.formula()?);
                if head == "sup" {
                    Formula::Sup(x, body)
                } else {
                    Formula::Inf(x, body)
                }
            }
            "conn" => {
                let name = self.atom("a connective name")?;
                let c = self.lang.connective(&name).ok_or_else(|| FormulaError::UnknownSymbol(name.clone()))?;
                let mut args = Vec::new();
                while matches!(self.peek(), Some(Tok::Open)) {
                    args.push(self.formula()?);
                }
                let expected = self.lang.conn(c).arity;
                if args.len() != expected {
                    self.expect_close()?;
                    return Err(FormulaError::ArityMismatch {
                        symbol: name,
                        expected,
                        got: args.len(),
                    });
                }
                Formula::Conn(c, args)
            }
            name => {
                let p = self.lang.sig.predicate(name).ok_or_else(|| FormulaError::UnknownSymbol(name.to_string()))?;
                let args = self.terms()?;
                let expected = self.lang.sig.predicates[p].arity;
                if args.len() != expected {
                    return Err(FormulaError::ArityMismatch {
                        symbol: name.to_string(),
                        expected,
                        got: args.len(),
                    });
                }
                Formula::Pred(p, args)
            }
        };
        self.expect_close()?;
        Ok(f)
    }

    fn finish(&self) -> Result<(), FormulaError> {
        if self.at < self.toks.len() {
            return self.err("trailing input");
        }
        Ok(())
    }
}

pub fn parse_formula(text: &str, lang: &Language) -> Result<Formula, FormulaError> {
    let mut r = Reader::new(text, lang);
    let f = r.formula()?;
    r.finish()?;
    Ok(f)
}

pub fn parse_term(text: &str, lang: &Language) -> Result<Term, FormulaError> {
    let mut r = Reader::new(text, lang);
    let t = r.term()?;
    r.finish()?;
    Ok(t)
}

/// Parses `id` or a flat list `ε δ ε δ ...` of element names.
pub fn parse_modulus(words: &[&str], v: &CoQuantale) -> Result<Modulus, FormulaError> {
    if words == ["id"] {
        return Ok(Modulus::identity(v));
    }
    if !words.len().is_multiple_of(2) {
        return Err(FormulaError::BadModulus("expected `id` or pairs `ε δ`".into()));
    }
    let elem = |w: &str| v.index_of(w).ok_or_else(|| FormulaError::UnknownElement(w.to_string()));
    let pairs = words
        .chunks(2)
        .map(|p| Ok((elem(p[0])?, elem(p[1])?)))
        .collect::<Result<Vec<_>, FormulaError>>()?;
    Modulus::from_pairs(v, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::builtin;

    fn lang(spec: &str) -> Language {
        let v = Arc::new(builtin(spec).unwrap());
        let mut sig = Signature::new();
        let id = Modulus::identity(&v);
        sig.add_predicate("P", 1, id.clone()).unwrap();
        sig.add_predicate("R", 2, id.clone()).unwrap();
        sig.add_function("f", 1, id).unwrap();
        sig.add_constant("c").unwrap();
        Language::new(v, sig).unwrap()
    }

    #[test]
    fn parses_examples() {
        let l = lang("chain:4");
        assert_eq!(
            parse_formula("(inf x0 (d x0 c))", &l).unwrap(),
            Formula::Inf(0, Box::new(Formula::Dist(Term::Var(0), Term::Const(0))))
        );
        let vee = l.connective("vee").unwrap();
        assert_eq!(
            parse_formula("(conn vee (P x0) (val 1))", &l).unwrap(),
            Formula::Conn(vee, vec![Formula::Pred(0, vec![Term::Var(0)]), Formula::Val(1)])
        );
        assert_eq!(
            parse_formula("(P x0 x1)", &l).unwrap_err(),
            FormulaError::ArityMismatch {
                symbol: "P".into(),
                expected: 1,
                got: 2
            }
        );
        assert_eq!(parse_term("(f (f x3))", &l).unwrap().vars(), 1 << 3);
    }

    #[test]
    fn parse_errors_are_positioned() {
        let l = lang("bool2");
        assert!(matches!(parse_formula("(P x0", &l), Err(FormulaError::Syntax { pos: 5, .. })));
        assert!(matches!(parse_formula("(P x0) x1", &l), Err(FormulaError::Syntax { pos: 7, .. })));
        assert_eq!(parse_formula("(Q x0)", &l).unwrap_err(), FormulaError::UnknownSymbol("Q".into()));
        assert_eq!(parse_formula("(val 7)", &l).unwrap_err(), FormulaError::UnknownElement("7".into()));
        assert!(matches!(parse_formula("(sup c (P x0))", &l), Err(FormulaError::Syntax { .. })));
    }

    #[test]
    fn round_trip_printing() {
        let l = lang("chain:4");
        for text in [
            "(inf x0 (d x0 c))",
            "(conn vee (P x0) (val 1))",
            "(sup x1 (conn monus:4 (R (f x0) x1)))",
            "(conn plus (d (f c) x2) (inf x3 (P x3)))",
        ] {
            let f = parse_formula(text, &l).unwrap();
            assert_eq!(print_formula(&f, &l), text);
            assert_eq!(parse_formula(&print_formula(&f, &l), &l).unwrap(), f);
        }
    }

    #[test]
    fn free_variables() {
        let l = lang("bool2");
        let f = parse_formula("(conn vee (sup x1 (R x0 x1)) (P x1))", &l).unwrap();
        assert_eq!(f.free_vars(), 0b11);
        assert_eq!(f.window(), 2);
        let s = parse_formula("(inf x0 (sup x1 (R x0 x1)))", &l).unwrap();
        assert!(s.is_sentence());
        assert!(!s.is_quantifier_free());
    }

    #[test]
    fn names_are_checked() {
        let v = builtin("bool2").unwrap();
        let mut sig = Signature::new();
        assert_eq!(sig.add_constant("sup").unwrap_err(), FormulaError::Reserved("sup".into()));
        assert_eq!(sig.add_constant("x3").unwrap_err(), FormulaError::BadName("x3".into()));
        sig.add_constant("a").unwrap();
        assert_eq!(
            sig.add_predicate("a", 1, Modulus::identity(&v)).unwrap_err(),
            FormulaError::DuplicateSymbol("a".into())
        );
    }

    #[test]
    fn kit_contents() {
        let l = lang("chain:4");
        let names: Vec<&str> = l.connectives().iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"monus:4"));
        for c in ["vee", "wedge", "plus", "sub", "id"] {
            assert!(names.contains(&c), "{c} missing from {names:?}");
        }
    }

    #[test]
    fn connective_registration() {
        let v = builtin("chain:3").unwrap();
        let n = v.len();
        // constant maps admit any modulus
        let c = Connective::register(&v, "k", 1, vec![2; n], Modulus::constant(&v, 0));
        assert!(c.is_ok());
        // doubling needs a smaller δ than ε
        let dbl: Vec<Elem> = (0..n).map(|a| v.add(a, a)).collect();
        let err = Connective::register(&v, "dbl", 1, dbl.clone(), Modulus::identity(&v)).unwrap_err();
        assert!(matches!(err, FormulaError::ModulusViolated { .. }));
        assert!(Connective::register(&v, "dbl", 1, dbl, Modulus::halver(&v)).is_ok());
    }

    #[test]
    fn dualizer_map_has_identity_modulus() {
        for spec in ["bool2", "chain:5", "lukasiewicz:4"] {
            let v = builtin(spec).unwrap();
            for &b in v.dualizing_elements() {
                let table = v.elements().map(|a| v.trunc_sub(b, a)).collect();
                assert!(Connective::register(&v, "m", 1, table, Modulus::identity(&v)).is_ok());
            }
        }
    }

    #[test]
    fn modulus_inference_examples() {
        let v = Arc::new(builtin("chain:4").unwrap());
        let mut sig = Signature::new();
        let dp = Modulus::from_fn(&v, |e| e.saturating_sub(1));
        sig.add_predicate("P", 1, dp.clone()).unwrap();
        sig.add_predicate("R", 2, dp.clone()).unwrap();
        let l = Language::new(v, sig).unwrap();
        assert_eq!(parse_formula("(P x0)", &l).unwrap().infer_modulus(&l), dp);
        assert_eq!(parse_formula("(sup x1 (R x0 x1))", &l).unwrap().infer_modulus(&l), dp);
        assert_eq!(parse_formula("(conn monus:4 (P x0))", &l).unwrap().infer_modulus(&l), dp);
    }

    #[test]
    fn modulus_text() {
        let v = builtin("chain:2").unwrap();
        assert!(parse_modulus(&["id"], &v).unwrap().is_identity());
        let m = parse_modulus(&["0", "0", "1", "0", "2", "1"], &v).unwrap();
        assert_eq!(m.at(2), 1);
        assert_eq!(m.render(&v), "0 0 1 0 2 1");
        assert!(parse_modulus(&["0", "0"], &v).is_err());
    }
}
