//! L-structures, evaluation, satisfaction, logical distance and
//! substructures.

use std::sync::Arc;

use thiserror::Error;

use crate::coquantale::CoQuantale;
use crate::formula::{print_formula, tuple_index, tuples, Formula, FormulaError, Language, Modulus, Term};
use crate::lattice::Elem;
use crate::space::{ContinuitySpace, SpaceError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("no interpretation for `{0}`")]
    MissingInterpretation(String),
    #[error("interpretation of `{symbol}` has the wrong shape")]
    Shape { symbol: String },
    #[error("modulus of `{symbol}` is violated at ε={eps}: {witness}")]
    ModulusViolated {
        symbol: String,
        eps: String,
        witness: String,
    },
    #[error("structure and language use different co-quantales")]
    DifferentCarrier,
    #[error("variable x{0} is unbound")]
    UnboundVariable(usize),
    #[error("expected a tuple of length {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("formulas have different free variables")]
    FreeVariableMismatch,
    #[error("structures have different languages")]
    SignatureMismatch,
    #[error("not a substructure: {0}")]
    NotSubstructure(String),
    #[error("co-quantale `{0}` has no dualizing element")]
    NotCoGirard(String),
    #[error("condition `{0}` is not a sentence")]
    NotASentence(String),
    #[error("{0} tuples exceed the evaluation limit")]
    TooLarge(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Largest table materialised by the table evaluator.
pub const MAX_TABLE: usize = 1 << 22;

/// A continuity space with interpretations for every symbol of a language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LStructure {
    name: String,
    lang: Arc<Language>,
    space: ContinuitySpace,
    preds: Vec<Vec<Elem>>,
    funs: Vec<Vec<usize>>,
    consts: Vec<usize>,
}

/// Join over coordinates of `d(a_i, b_i)`.
fn tuple_dist(space: &ContinuitySpace, a: &[usize], b: &[usize]) -> Elem {
    let v = space.v();
    a.iter().zip(b).fold(v.zero(), |acc, (&x, &y)| v.join(acc, space.d(x, y)))
}

/// Checks `d_M(ā,b̄) ≤ Δ(ε) ⇒ out(ā,b̄) ≤ ε` for every pair of tuples.
fn check_modulus(
    space: &ContinuitySpace,
    symbol: &str,
    arity: usize,
    modulus: &Modulus,
    out: impl Fn(usize, usize) -> Elem,
) -> Result<(), SemanticsError> {
    let v = space.v();
    let all: Vec<Vec<usize>> = tuples(space.len(), arity).collect();
    let mut worst = vec![v.zero(); v.len()];
    for i in 0..all.len() {
        for j in 0..all.len() {
            let d0 = tuple_dist(space, &all[i], &all[j]);
            worst[d0] = v.join(worst[d0], out(i, j));
        }
    }
    let Some((d0, eps)) = modulus.first_violation(v, &worst) else {
        return Ok(());
    };
    let names = |t: &[usize]| t.iter().map(|&p| space.point_name(p)).collect::<Vec<_>>().join(",");
    let (i, j) = (0..all.len())
        .flat_map(|i| (0..all.len()).map(move |j| (i, j)))
        .find(|&(i, j)| tuple_dist(space, &all[i], &all[j]) == d0 && !v.leq(out(i, j), eps))
        .expect("violation has a witness pair");
    Err(SemanticsError::ModulusViolated {
        symbol: symbol.to_string(),
        eps: v.elem_name(eps).to_string(),
        witness: format!("({}) vs ({})", names(&all[i]), names(&all[j])),
    })
}

impl LStructure {
    /// Validates shapes and every declared modulus. Predicate outputs are
    /// measured with `d^s_V`, function outputs with `d_M`, inputs with the
    /// join of coordinate distances.
    pub fn new(
        name: impl Into<String>,
        lang: Arc<Language>,
        space: ContinuitySpace,
        preds: Vec<Vec<Elem>>,
        funs: Vec<Vec<usize>>,
        consts: Vec<usize>,
    ) -> Result<Self, SemanticsError> {
        if lang.v() != space.v() {
            return Err(SemanticsError::DifferentCarrier);
        }
        let sig = &lang.sig;
        let n = space.len();
        let v = space.v();
        let shape = |s: &str| SemanticsError::Shape { symbol: s.to_string() };
        if let Some(p) = sig.predicates.get(preds.len()) {
            return Err(SemanticsError::MissingInterpretation(p.name.clone()));
        }
        if let Some(f) = sig.functions.get(funs.len()) {
            return Err(SemanticsError::MissingInterpretation(f.name.clone()));
        }
        if let Some(c) = sig.constants.get(consts.len()) {
            return Err(SemanticsError::MissingInterpretation(c.clone()));
        }
        if preds.len() > sig.predicates.len() || funs.len() > sig.functions.len() || consts.len() > sig.constants.len() {
            return Err(shape("extra interpretations"));
        }
        for (sym, table) in sig.predicates.iter().zip(&preds) {
            let size = n.checked_pow(sym.arity as u32).filter(|&s| s <= MAX_TABLE);
            if size != Some(table.len()) || table.iter().any(|&e| e >= v.len()) {
                return Err(shape(&sym.name));
            }
        }
        for (sym, table) in sig.functions.iter().zip(&funs) {
            let size = n.checked_pow(sym.arity as u32).filter(|&s| s <= MAX_TABLE);
            if size != Some(table.len()) || table.iter().any(|&p| p >= n) {
                return Err(shape(&sym.name));
            }
        }
        if let Some(i) = consts.iter().position(|&p| p >= n) {
            return Err(shape(&sig.constants[i]));
        }
        for (sym, table) in sig.predicates.iter().zip(&preds) {
            check_modulus(&space, &sym.name, sym.arity, &sym.modulus, |i, j| v.dsym(table[i], table[j]))?;
        }
        for (sym, table) in sig.functions.iter().zip(&funs) {
            check_modulus(&space, &sym.name, sym.arity, &sym.modulus, |i, j| space.d(table[i], table[j]))?;
        }
        Ok(LStructure {
            name: name.into(),
            lang,
            space,
            preds,
            funs,
            consts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lang(&self) -> &Arc<Language> {
        &self.lang
    }

    pub fn space(&self) -> &ContinuitySpace {
        &self.space
    }

    pub fn v(&self) -> &CoQuantale {
        self.space.v()
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn pred_table(&self, p: usize) -> &[Elem] {
        &self.preds[p]
    }

    pub fn fun_table(&self, f: usize) -> &[usize] {
        &self.funs[f]
    }

    pub fn const_point(&self, c: usize) -> usize {
        self.consts[c]
    }

    pub fn pred(&self, p: usize, args: &[usize]) -> Elem {
        self.preds[p][tuple_index(args, self.len())]
    }

    pub fn fun(&self, f: usize, args: &[usize]) -> usize {
        self.funs[f][tuple_index(args, self.len())]
    }

    pub fn eval_term(&self, t: &Term, sigma: &[usize]) -> Result<usize, SemanticsError> {
        match t {
            Term::Var(i) => sigma.get(*i).copied().ok_or(SemanticsError::UnboundVariable(*i)),
            Term::Const(c) => Ok(self.consts[*c]),
            Term::App(f, ts) => {
                let args = ts
                    .iter()
                    .map(|t| self.eval_term(t, sigma))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.fun(*f, &args))
            }
        }
    }

    fn check_assignment(&self, sigma: &[usize]) -> Result<(), SemanticsError> {
        if let Some(&p) = sigma.iter().find(|&&p| p >= self.len()) {
            return Err(SemanticsError::Space(SpaceError::UnknownPoint(format!("#{p}"))));
        }
        Ok(())
    }

    /// Structural evaluation under `σ`, where `σ[i]` is the point for `x_i`.
    pub fn eval_formula(&self, phi: &Formula, sigma: &[usize]) -> Result<Elem, SemanticsError> {
        self.check_assignment(sigma)?;
        let mut env: Vec<Option<usize>> = sigma.iter().copied().map(Some).collect();
        env.resize(env.len().max(phi.window()), None);
        self.eval_in(phi, &mut env)
    }

    fn term_in(&self, t: &Term, env: &[Option<usize>]) -> Result<usize, SemanticsError> {
        match t {
            Term::Var(i) => env[*i].ok_or(SemanticsError::UnboundVariable(*i)),
            Term::Const(c) => Ok(self.consts[*c]),
            Term::App(f, ts) => {
                let args = ts.iter().map(|t| self.term_in(t, env)).collect::<Result<Vec<_>, _>>()?;
                Ok(self.fun(*f, &args))
            }
        }
    }

    fn eval_in(&self, phi: &Formula, env: &mut Vec<Option<usize>>) -> Result<Elem, SemanticsError> {
        let v = self.v();
        match phi {
            Formula::Dist(a, b) => Ok(self.space.d(self.term_in(a, env)?, self.term_in(b, env)?)),
            Formula::Pred(p, ts) => {
                let args = ts.iter().map(|t| self.term_in(t, env)).collect::<Result<Vec<_>, _>>()?;
                Ok(self.pred(*p, &args))
            }
            Formula::Conn(c, fs) => {
                let args = fs.iter().map(|f| self.eval_in(f, env)).collect::<Result<Vec<_>, _>>()?;
                Ok(self.lang.conn(*c).apply(&args, v.len()))
            }
            Formula::Val(e) => Ok(*e),
            Formula::Sup(x, body) | Formula::Inf(x, body) => {
                let sup = matches!(phi, Formula::Sup(..));
                let saved = env[*x];
                let mut acc = if sup { v.zero() } else { v.top() };
                for a in 0..self.len() {
                    env[*x] = Some(a);
                    let val = self.eval_in(body, env);
                    let val = match val {
                        Ok(val) => val,
                        Err(e) => {
                            env[*x] = saved;
                            return Err(e);
                        }
                    };
                    acc = if sup { v.join(acc, val) } else { v.meet(acc, val) };
                }
                env[*x] = saved;
                Ok(acc)
            }
        }
    }

    /// Values of `φ` at every tuple of `M^k`, row-major with `x0` most
    /// significant. `k` must cover every variable of `φ`.
    pub fn formula_table(&self, phi: &Formula, k: usize) -> Result<Vec<Elem>, SemanticsError> {
        if phi.window() > k {
            return Err(SemanticsError::UnboundVariable(phi.window() - 1));
        }
        let size = self
            .len()
            .checked_pow(k as u32)
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| SemanticsError::TooLarge(format!("{}^{k}", self.len())))?;
        Ok(self.table_in(phi, k, size))
    }

    fn table_in(&self, phi: &Formula, k: usize, size: usize) -> Vec<Elem> {
        let n = self.len();
        let v = self.v();
        match phi {
            Formula::Dist(..) | Formula::Pred(..) => {
                let mut env = vec![None; k];
                tuples(n, k)
                    .map(|t| {
                        for (slot, p) in env.iter_mut().zip(&t) {
                            *slot = Some(*p);
                        }
                        self.eval_in(phi, &mut env).expect("atoms are closed under the window")
                    })
                    .collect()
            }
            Formula::Conn(c, fs) => {
                let conn = self.lang.conn(*c);
                let children: Vec<Vec<Elem>> = fs.iter().map(|f| self.table_in(f, k, size)).collect();
                let mut args = vec![0; fs.len()];
                (0..size)
                    .map(|i| {
                        for (a, ch) in args.iter_mut().zip(&children) {
                            *a = ch[i];
                        }
                        conn.apply(&args, v.len())
                    })
                    .collect()
            }
            Formula::Val(e) => vec![*e; size],
            Formula::Sup(x, body) | Formula::Inf(x, body) => {
                let inner = self.table_in(body, k, size);
                quantify(v, &inner, n, k, *x, matches!(phi, Formula::Sup(..)))
            }
        }
    }

    pub fn satisfies(&self, condition: &Formula, tuple: &[usize]) -> Result<bool, SemanticsError> {
        let expected = (64 - condition.free_vars().leading_zeros()) as usize;
        if tuple.len() != expected {
            return Err(SemanticsError::ArityMismatch {
                expected,
                got: tuple.len(),
            });
        }
        Ok(self.eval_formula(condition, tuple)? == self.v().zero())
    }

    /// First condition of `t` not satisfied, if any.
    pub fn first_unsatisfied<'t>(&self, t: &'t Theory) -> Option<&'t Condition> {
        t.conditions
            .iter()
            .find(|c| self.eval_formula(&c.formula, &[]).map_or(true, |e| e != self.v().zero()))
    }

    pub fn models(&self, t: &Theory) -> bool {
        self.first_unsatisfied(t).is_none()
    }

    /// `⋁ d^s_V(φ₁(ā), φ₂(ā))` over all tuples of `M`.
    pub fn logical_distance(&self, a: &Formula, b: &Formula) -> Result<Elem, SemanticsError> {
        if a.free_vars() != b.free_vars() {
            return Err(SemanticsError::FreeVariableMismatch);
        }
        let k = a.window().max(b.window());
        let ta = self.formula_table(a, k)?;
        let tb = self.formula_table(b, k)?;
        let v = self.v();
        Ok(ta.iter().zip(&tb).fold(v.zero(), |acc, (&x, &y)| v.join(acc, v.dsym(x, y))))
    }

    /// Index in `sup` of every point of `self`, matching by name, provided
    /// `self` is a substructure of `sup`.
    pub fn embedding_into(&self, sup: &LStructure) -> Result<Vec<usize>, SemanticsError> {
        if self.lang != sup.lang {
            return Err(SemanticsError::SignatureMismatch);
        }
        let not = |msg: String| Err(SemanticsError::NotSubstructure(msg));
        let mut emb = Vec::with_capacity(self.len());
        for p in self.space.points() {
            match sup.space.index_of(p) {
                Some(q) => emb.push(q),
                None => return not(format!("point {p} is missing from {}", sup.name)),
            }
        }
        let name = |p: usize| self.space.point_name(p);
        for x in 0..self.len() {
            for y in 0..self.len() {
                if self.space.d(x, y) != sup.space.d(emb[x], emb[y]) {
                    return not(format!("d({},{}) differs", name(x), name(y)));
                }
            }
        }
        let n = self.len();
        let sig = &self.lang.sig;
        for (p, sym) in sig.predicates.iter().enumerate() {
            for t in tuples(n, sym.arity) {
                let image: Vec<usize> = t.iter().map(|&x| emb[x]).collect();
                if self.pred(p, &t) != sup.pred(p, &image) {
                    let args: Vec<&str> = t.iter().map(|&x| name(x)).collect();
                    return not(format!("{}({}) differs", sym.name, args.join(",")));
                }
            }
        }
        for (f, sym) in sig.functions.iter().enumerate() {
            for t in tuples(n, sym.arity) {
                let image: Vec<usize> = t.iter().map(|&x| emb[x]).collect();
                let out = sup.fun(f, &image);
                if emb[self.fun(f, &t)] != out {
                    let args: Vec<&str> = t.iter().map(|&x| name(x)).collect();
                    let msg = match emb.iter().position(|&q| q == out) {
                        None => format!("{}({}) = {} leaves the carrier", sym.name, args.join(","), sup.space.point_name(out)),
                        Some(_) => format!("{}({}) differs", sym.name, args.join(",")),
                    };
                    return not(msg);
                }
            }
        }
        for (c, cname) in sig.constants.iter().enumerate() {
            if emb[self.consts[c]] != sup.consts[c] {
                return not(format!("constant {cname} differs"));
            }
        }
        Ok(emb)
    }

    pub fn is_substructure(&self, sup: &LStructure) -> Result<bool, SemanticsError> {
        match self.embedding_into(sup) {
            Ok(_) => Ok(true),
            Err(SemanticsError::NotSubstructure(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// The induced substructure on `points` (indices, kept in the given
    /// order); fails when `points` is not closed under functions and
    /// constants.
    pub fn restrict(&self, name: impl Into<String>, points: &[usize]) -> Result<LStructure, SemanticsError> {
        let n = self.len();
        let mut pos = vec![None; n];
        for (i, &p) in points.iter().enumerate() {
            pos[p] = Some(i);
        }
        let m = points.len();
        let names = points.iter().map(|&p| self.space.point_name(p).to_string()).collect();
        let dist = points
            .iter()
            .map(|&x| points.iter().map(|&y| self.space.d(x, y)).collect())
            .collect();
        let space = ContinuitySpace::new(self.space.v_arc().clone(), names, dist)?;
        let sig = &self.lang.sig;
        let preds = sig
            .predicates
            .iter()
            .enumerate()
            .map(|(p, sym)| {
                tuples(m, sym.arity)
                    .map(|t| self.pred(p, &t.iter().map(|&i| points[i]).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        let mut funs = Vec::new();
        for (f, sym) in sig.functions.iter().enumerate() {
            let mut table = Vec::new();
            for t in tuples(m, sym.arity) {
                let out = self.fun(f, &t.iter().map(|&i| points[i]).collect::<Vec<_>>());
                match pos[out] {
                    Some(i) => table.push(i),
                    None => {
                        return Err(SemanticsError::NotSubstructure(format!(
                            "{} leaves the subset at {}",
                            sym.name,
                            self.space.point_name(out)
                        )))
                    }
                }
            }
            funs.push(table);
        }
        let consts = self
            .consts
            .iter()
            .zip(&sig.constants)
            .map(|(&p, c)| pos[p].ok_or_else(|| SemanticsError::NotSubstructure(format!("constant {c} is outside the subset"))))
            .collect::<Result<Vec<_>, _>>()?;
        LStructure::new(name, self.lang.clone(), space, preds, funs, consts)
    }

    pub fn describe(&self, phi: &Formula) -> String {
        print_formula(phi, &self.lang)
    }
}

/// Joins (or meets) a table over `M^k` along coordinate `x`; the result is
/// constant in that coordinate.
pub fn quantify(v: &CoQuantale, table: &[Elem], n: usize, k: usize, x: usize, sup: bool) -> Vec<Elem> {
    let stride = n.pow((k - 1 - x) as u32);
    let block = stride * n;
    let mut out = vec![0; table.len()];
    for start in (0..table.len()).step_by(block) {
        for off in 0..stride {
            let base = start + off;
            let mut acc = if sup { v.zero() } else { v.top() };
            for c in 0..n {
                let e = table[base + c * stride];
                acc = if sup { v.join(acc, e) } else { v.meet(acc, e) };
            }
            for c in 0..n {
                out[base + c * stride] = acc;
            }
        }
    }
    out
}

/// A formal statement `φ = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub name: String,
    pub formula: Formula,
}

/// A finite set of closed conditions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Theory {
    pub conditions: Vec<Condition>,
}

impl Theory {
    pub fn new(conditions: Vec<Condition>) -> Result<Self, SemanticsError> {
        if let Some(c) = conditions.iter().find(|c| !c.formula.is_sentence()) {
            return Err(SemanticsError::NotASentence(c.name.clone()));
        }
        Ok(Theory { conditions })
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// The sub-theory picked out by a bitmask over conditions.
    pub fn subset(&self, mask: u64) -> Theory {
        Theory {
            conditions: self
                .conditions
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| c.clone())
                .collect(),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::builtins::builtin;
    use crate::formula::{parse_formula, Signature};

    pub(crate) fn lang_p_c(spec: &str) -> Arc<Language> {
        let v = Arc::new(builtin(spec).unwrap());
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::identity(&v)).unwrap();
        sig.add_constant("c").unwrap();
        Arc::new(Language::new(v, sig).unwrap())
    }

    fn chain_space(lang: &Arc<Language>, dist: Vec<Vec<Elem>>) -> ContinuitySpace {
        let names = (0..dist.len()).map(|i| format!("p{i}")).collect();
        ContinuitySpace::new(lang.v_arc().clone(), names, dist).unwrap()
    }

    fn sample(lang: &Arc<Language>) -> LStructure {
        // p0 --1--> p1, p1 --2--> p0 over chain:3
        let space = chain_space(lang, vec![vec![0, 1], vec![2, 0]]);
        LStructure::new("M", lang.clone(), space, vec![vec![1, 2]], vec![], vec![0]).unwrap()
    }

    #[test]
    fn empty_signature_is_valid() {
        let v = Arc::new(builtin("chain:2").unwrap());
        let lang = Arc::new(Language::new(v.clone(), Signature::new()).unwrap());
        let space = ContinuitySpace::new(v, vec!["a".into()], vec![vec![0]]).unwrap();
        assert!(LStructure::new("E", lang, space, vec![], vec![], vec![]).is_ok());
    }

    #[test]
    fn constant_predicates_accept_any_modulus() {
        let v = Arc::new(builtin("chain:3").unwrap());
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::constant(&v, v.top())).unwrap();
        let lang = Arc::new(Language::new(v.clone(), sig).unwrap());
        let space = chain_space(&lang, vec![vec![0, 3], vec![3, 0]]);
        assert!(LStructure::new("K", lang, space, vec![vec![2, 2]], vec![], vec![]).is_ok());
    }

    #[test]
    fn jumps_violate_the_modulus() {
        let lang = lang_p_c("chain:3");
        let space = chain_space(&lang, vec![vec![0, 1], vec![1, 0]]);
        let err = LStructure::new("J", lang.clone(), space, vec![vec![0, 3]], vec![], vec![0]).unwrap_err();
        assert_eq!(
            err,
            SemanticsError::ModulusViolated {
                symbol: "P".into(),
                eps: "1".into(),
                witness: "(p0) vs (p1)".into()
            }
        );
        let space = chain_space(&lang, vec![vec![0]]);
        assert_eq!(
            LStructure::new("J", lang, space, vec![], vec![], vec![0]).unwrap_err(),
            SemanticsError::MissingInterpretation("P".into())
        );
    }

    #[test]
    fn evaluation_examples() {
        let lang = lang_p_c("chain:3");
        let m = sample(&lang);
        let f = |s: &str| parse_formula(s, &lang).unwrap();
        assert_eq!(m.eval_formula(&f("(inf x0 (d x0 c))"), &[]).unwrap(), 0);
        assert_eq!(m.eval_formula(&f("(sup x0 (val 2))"), &[]).unwrap(), 2);
        assert_eq!(m.eval_formula(&f("(sup x0 (d c x0))"), &[]).unwrap(), 1);
        assert_eq!(m.eval_formula(&f("(P x1)"), &[0, 1]).unwrap(), 2);
        assert_eq!(m.eval_formula(&f("(P x1)"), &[0]).unwrap_err(), SemanticsError::UnboundVariable(1));
        assert_eq!(m.eval_formula(&f("(conn monus:3 (P c))"), &[]).unwrap(), 2);
    }

    #[test]
    fn table_matches_pointwise() {
        let lang = lang_p_c("chain:3");
        let m = sample(&lang);
        for s in [
            "(conn vee (P x0) (d x1 x0))",
            "(sup x1 (conn wedge (P x1) (d x0 x1)))",
            "(inf x0 (sup x1 (d x1 x0)))",
        ] {
            let phi = parse_formula(s, &lang).unwrap();
            let table = m.formula_table(&phi, 2).unwrap();
            for (i, t) in tuples(2, 2).enumerate() {
                assert_eq!(table[i], m.eval_formula(&phi, &t).unwrap(), "{s} at {t:?}");
            }
        }
    }

    #[test]
    fn satisfaction_and_theories() {
        let lang = lang_p_c("chain:3");
        let m = sample(&lang);
        let f = |s: &str| parse_formula(s, &lang).unwrap();
        assert!(m.satisfies(&f("(d c c)"), &[]).unwrap());
        assert!(!m.satisfies(&f("(P c)"), &[]).unwrap());
        assert_eq!(
            m.satisfies(&f("(d x0 c)"), &[]).unwrap_err(),
            SemanticsError::ArityMismatch { expected: 1, got: 0 }
        );
        let cond = |n: &str, s: &str| Condition {
            name: n.into(),
            formula: f(s),
        };
        let t = Theory::new(vec![cond("E1", "(d c c)"), cond("E2", "(inf x0 (d x0 c))")]).unwrap();
        assert!(m.models(&t));
        let t2 = Theory::new(vec![cond("E1", "(d c c)"), cond("E3", "(P c)")]).unwrap();
        assert_eq!(m.first_unsatisfied(&t2).unwrap().name, "E3");
        assert!(Theory::new(vec![cond("open", "(P x0)")]).is_err());
    }

    #[test]
    fn logical_distance_examples() {
        let lang = lang_p_c("chain:3");
        let m = sample(&lang);
        let f = |s: &str| parse_formula(s, &lang).unwrap();
        assert_eq!(m.logical_distance(&f("(P x0)"), &f("(P x0)")).unwrap(), 0);
        for e in 0..=3 {
            let d = m.logical_distance(&f("(val 0)"), &f(&format!("(val {e})"))).unwrap();
            assert_eq!(d, e);
        }
        // double dualization is the identity on co-Girard carriers
        let phi = f("(P x0)");
        let psi = f("(conn monus:3 (conn monus:3 (P x0)))");
        assert_eq!(m.logical_distance(&phi, &psi).unwrap(), 0);
        assert_eq!(
            m.logical_distance(&phi, &f("(P c)")).unwrap_err(),
            SemanticsError::FreeVariableMismatch
        );
    }

    #[test]
    fn substructures() {
        let v = Arc::new(builtin("chain:3").unwrap());
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::identity(&v)).unwrap();
        sig.add_function("f", 1, Modulus::constant(&v, 0)).unwrap();
        let lang = Arc::new(Language::new(v, sig).unwrap());
        let space = chain_space(&lang, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        // f sends everything to p2, constant so any modulus holds
        let n = LStructure::new("N", lang.clone(), space, vec![vec![0, 1, 1]], vec![vec![2, 2, 2]], vec![]).unwrap();
        assert!(n.is_substructure(&n).unwrap());
        let sub = n.restrict("S", &[1, 2]).unwrap();
        assert!(sub.is_substructure(&n).unwrap());
        assert!(matches!(n.restrict("S", &[0, 1]), Err(SemanticsError::NotSubstructure(_))));
        // same points, one altered distance
        let space = chain_space(&lang, vec![vec![0, 1, 1], vec![1, 0, 2], vec![1, 1, 0]]);
        let altered = LStructure::new("A", lang.clone(), space, vec![vec![0, 1, 1]], vec![vec![2, 2, 2]], vec![]).unwrap();
        let err = altered.embedding_into(&n).unwrap_err();
        assert_eq!(err, SemanticsError::NotSubstructure("d(p1,p2) differs".into()));
        // a two-point structure whose function misses p2 in N
        let space = chain_space(&lang, vec![vec![0, 1], vec![1, 0]]);
        let small = LStructure::new("T", lang, space, vec![vec![0, 1]], vec![vec![1, 1]], vec![]).unwrap();
        let err = small.embedding_into(&n).unwrap_err();
        assert!(matches!(err, SemanticsError::NotSubstructure(ref w) if w.contains("leaves the carrier")), "{err}");
    }

    #[test]
    fn quantify_along_each_coordinate() {
        let v = builtin("chain:9").unwrap();
        // table over 3^2 with value 3*x0 + x1
        let t: Vec<Elem> = (0..9).collect();
        assert_eq!(quantify(&v, &t, 3, 2, 0, true), vec![6, 7, 8, 6, 7, 8, 6, 7, 8]);
        assert_eq!(quantify(&v, &t, 3, 2, 1, false), vec![0, 0, 0, 3, 3, 3, 6, 6, 6]);
    }
}
