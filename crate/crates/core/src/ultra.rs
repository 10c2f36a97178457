//! Principal ultrafilters on finite index sets, D-ultralimits, D-products
//! and ultraproducts, the Łoś check and the compactness construction.

use std::ops::ControlFlow;
use std::sync::Arc;

use thiserror::Error;

use crate::coquantale::CoQuantale;
use crate::enumerate::{FormulaPool, Node};
use crate::formula::{print_formula, tuple_index, tuples, Formula};
use crate::lattice::Elem;
use crate::report::{scan, Report};
use crate::semantics::{LStructure, SemanticsError, Theory};
use crate::space::{ContinuitySpace, SpaceError};

/// Cap on the number of tuples in a D-product.
pub const MAX_TUPLES: usize = 4096;
pub const MAX_INDEX: usize = 16;
pub const MAX_THEORY: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UltraError {
    #[error("index set of size {0} is empty or beyond {MAX_INDEX}")]
    BadIndexSet(usize),
    #[error("generator {generator} is outside an index set of size {size}")]
    BadGenerator { generator: usize, size: usize },
    #[error("expected {expected} factors, got {got}")]
    FactorCount { expected: usize, got: usize },
    #[error("(V, d^s) is not T0 for `{0}`, so limits need not be unique")]
    NotT0(String),
    #[error("no D-limit for ({0})")]
    NoLimit(String),
    #[error("{count} tuples exceed the limit of {MAX_TUPLES}")]
    SizeLimit { count: String },
    #[error("factor `{0}` has a non-symmetric distance")]
    NotSymmetricFactors(String),
    #[error("`{0}` is not co-divisible")]
    NotCoDivisible(String),
    #[error("factors have different languages or co-quantales")]
    SignatureMismatch,
    #[error("no candidate satisfies {0}")]
    NotFinitelySatisfiable(String),
    #[error("theory has {0} conditions, beyond the limit of {MAX_THEORY}")]
    TheoryTooLarge(usize),
    #[error("the product does not model the theory: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// `D = {A ⊆ I : j0 ∈ A}`; index sets are bitmasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrincipalUltrafilter {
    index_count: usize,
    generator: usize,
}

impl PrincipalUltrafilter {
    pub fn new(index_count: usize, generator: usize) -> Result<Self, UltraError> {
        if index_count == 0 || index_count > MAX_INDEX {
            return Err(UltraError::BadIndexSet(index_count));
        }
        if generator >= index_count {
            return Err(UltraError::BadGenerator {
                generator,
                size: index_count,
            });
        }
        Ok(PrincipalUltrafilter {
            index_count,
            generator,
        })
    }

    /// Every principal ultrafilter on `n` indices.
    pub fn all(n: usize) -> Result<Vec<Self>, UltraError> {
        (0..n).map(|j| Self::new(n, j)).collect()
    }

    pub fn index_count(&self) -> usize {
        self.index_count
    }

    pub fn generator(&self) -> usize {
        self.generator
    }

    pub fn contains(&self, set: u64) -> bool {
        set >> self.generator & 1 == 1
    }

    fn full(&self) -> u64 {
        (1u64 << self.index_count) - 1
    }

    /// Properness, upward closure, intersections and the ultra property,
    /// checked over all subsets of `I`.
    pub fn check_axioms(&self) -> Option<String> {
        let full = self.full();
        if self.contains(0) {
            return Some("contains the empty set".into());
        }
        for a in 0..=full {
            if !self.contains(a) && !self.contains(full & !a) {
                return Some(format!("neither {a:b} nor its complement"));
            }
            for b in 0..=full {
                if self.contains(a) && a & b == a && !self.contains(b) {
                    return Some(format!("{a:b} in D but superset {b:b} is not"));
                }
                if self.contains(a) && self.contains(b) && !self.contains(a & b) {
                    return Some(format!("{a:b} and {b:b} in D but not their meet"));
                }
            }
        }
        None
    }
}

fn seq_names(v: &CoQuantale, seq: &[Elem]) -> String {
    seq.iter().map(|&e| v.elem_name(e)).collect::<Vec<_>>().join(",")
}

/// The unique `a` with `{j : d^s_V(a, a_j) ≤ ε} ∈ D` for every `ε ∈ V⁺`,
/// found by scanning all candidates.
pub fn d_ultralimit(v: &CoQuantale, seq: &[Elem], d: &PrincipalUltrafilter) -> Result<Elem, UltraError> {
    if !v.symmetric_is_t0() {
        return Err(UltraError::NotT0(v.name().to_string()));
    }
    limit_scan(v, &v.positives(), seq, d)
}

fn limit_scan(v: &CoQuantale, positives: &[Elem], seq: &[Elem], d: &PrincipalUltrafilter) -> Result<Elem, UltraError> {
    if seq.len() != d.index_count() {
        return Err(UltraError::FactorCount {
            expected: d.index_count(),
            got: seq.len(),
        });
    }
    let mut found = None;
    for a in v.elements() {
        let is_limit = positives.iter().all(|&eps| {
            let large = seq
                .iter()
                .enumerate()
                .filter(|(_, &x)| v.leq(v.dsym(a, x), eps))
                .fold(0u64, |acc, (j, _)| acc | 1 << j);
            d.contains(large)
        });
        if is_limit {
            if found.is_some() {
                return Err(UltraError::NotT0(v.name().to_string()));
            }
            found = Some(a);
        }
    }
    found.ok_or_else(|| UltraError::NoLimit(seq_names(v, seq)))
}

/// `lim_{i,D}` for every sequence in `V^I`, precomputed by the scan.
#[derive(Debug, Clone)]
pub struct LimitTable {
    base: usize,
    table: Vec<Elem>,
}

impl LimitTable {
    pub const MAX_ENTRIES: usize = 1 << 20;

    pub fn new(v: &CoQuantale, d: &PrincipalUltrafilter) -> Result<Self, UltraError> {
        if !v.symmetric_is_t0() {
            return Err(UltraError::NotT0(v.name().to_string()));
        }
        let base = v.len();
        let n = d.index_count();
        base.checked_pow(n as u32)
            .filter(|&s| s <= Self::MAX_ENTRIES)
            .ok_or_else(|| UltraError::SizeLimit {
                count: format!("{base}^{n} limit entries"),
            })?;
        let pos = v.positives();
        let table = tuples(base, n)
            .map(|seq| limit_scan(v, &pos, &seq, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LimitTable { base, table })
    }

    pub fn get(&self, seq: &[Elem]) -> Elem {
        self.table[tuple_index(seq, self.base)]
    }
}

/// Tuples of factor points, first factor most significant.
fn product_tuples(sizes: &[usize]) -> Result<Vec<Vec<usize>>, UltraError> {
    let count = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&c| c <= MAX_TUPLES)
        .ok_or_else(|| UltraError::SizeLimit {
            count: sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x"),
        })?;
    let mut out = Vec::with_capacity(count);
    let mut cur = vec![0; sizes.len()];
    for _ in 0..count {
        out.push(cur.clone());
        for i in (0..sizes.len()).rev() {
            cur[i] += 1;
            if cur[i] < sizes[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    Ok(out)
}

fn tuple_name(spaces: &[&ContinuitySpace], t: &[usize]) -> String {
    let parts: Vec<&str> = spaces.iter().zip(t).map(|(s, &p)| s.point_name(p)).collect();
    format!("<{}>", parts.join(","))
}

/// The product of the factor spaces with `d_D(x, y) = lim_{i,D} d_i(x_i, y_i)`.
#[derive(Debug, Clone)]
pub struct DProductSpace {
    pub space: ContinuitySpace,
    pub tuples: Vec<Vec<usize>>,
    pub filter: PrincipalUltrafilter,
}

pub fn d_product_space(spaces: &[&ContinuitySpace], d: &PrincipalUltrafilter) -> Result<DProductSpace, UltraError> {
    if spaces.len() != d.index_count() {
        return Err(UltraError::FactorCount {
            expected: d.index_count(),
            got: spaces.len(),
        });
    }
    let v = spaces[0].v_arc().clone();
    if spaces.iter().any(|s| s.v() != &*v) {
        return Err(UltraError::SignatureMismatch);
    }
    let limits = LimitTable::new(&v, d)?;
    let sizes: Vec<usize> = spaces.iter().map(|s| s.len()).collect();
    let tuples = product_tuples(&sizes)?;
    let names = tuples.iter().map(|t| tuple_name(spaces, t)).collect();
    let mut seq = vec![0; spaces.len()];
    let dist = tuples
        .iter()
        .map(|x| {
            tuples
                .iter()
                .map(|y| {
                    for (i, s) in spaces.iter().enumerate() {
                        seq[i] = s.d(x[i], y[i]);
                    }
                    limits.get(&seq)
                })
                .collect()
        })
        .collect();
    let space = ContinuitySpace::new(v, names, dist)?;
    Ok(DProductSpace {
        space,
        tuples,
        filter: *d,
    })
}

/// The D-ultraproduct: the D-product modulo `lim d = 0`, with the
/// canonical map `θ` from tuples to classes.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub product: DProductSpace,
    pub space: ContinuitySpace,
    /// Class of each product point.
    pub theta: Vec<usize>,
    /// Checks of the equivalence and of well-definedness.
    pub report: Report,
}

pub fn quotient_ultraproduct(spaces: &[&ContinuitySpace], d: &PrincipalUltrafilter) -> Result<Quotient, UltraError> {
    if let Some((i, _)) = spaces.iter().enumerate().find(|(_, s)| !s.is_symmetric()) {
        return Err(UltraError::NotSymmetricFactors(format!("factor {i}")));
    }
    let product = d_product_space(spaces, d)?;
    let p = &product.space;
    let n = p.len();
    let v = p.v();
    let z = v.zero();
    let sim = |x: usize, y: usize| p.d(x, y) == z;
    let mut report = Report::new("ultraproduct quotient");
    let (c, w) = scan(0..n, |x| (!sim(x, x)).then(|| p.point_name(x).to_string()));
    report.check("∼ reflexive", c, w);
    let pairs = || (0..n).flat_map(move |x| (0..n).map(move |y| (x, y)));
    let (c, w) = scan(pairs(), |(x, y)| {
        (sim(x, y) && !sim(y, x)).then(|| format!("{} {}", p.point_name(x), p.point_name(y)))
    });
    report.check("∼ symmetric", c, w);
    let (c, w) = scan(pairs().flat_map(|(x, y)| (0..n).map(move |z| (x, y, z))), |(x, y, z)| {
        (sim(x, y) && sim(y, z) && !sim(x, z)).then(|| format!("{} {} {}", p.point_name(x), p.point_name(y), p.point_name(z)))
    });
    report.check("∼ transitive", c, w);

    let mut theta = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if theta[x] == usize::MAX {
            let class = reps.len();
            for (y, t) in theta.iter_mut().enumerate().skip(x) {
                if *t == usize::MAX && sim(x, y) && sim(y, x) {
                    *t = class;
                }
            }
            reps.push(x);
        }
    }
    let (c, w) = scan(pairs().flat_map(|(a, b)| (0..n).map(move |c| (a, b, c))), |(a, b, c)| {
        // swapping the representative of either argument keeps the distance
        let bad = (theta[a] == theta[b] && (p.d(a, c) != p.d(b, c) || p.d(c, a) != p.d(c, b)))
            .then(|| format!("{} ~ {} against {}", p.point_name(a), p.point_name(b), p.point_name(c)));
        bad
    });
    report.check("class distance well defined", c, w);
    let names = reps.iter().map(|&r| format!("[{}]", p.point_name(r))).collect();
    let dist = reps
        .iter()
        .map(|&a| reps.iter().map(|&b| p.d(a, b)).collect())
        .collect();
    let space = ContinuitySpace::new(p.v_arc().clone(), names, dist)?;
    report.fact("tuples", n);
    report.fact("classes", reps.len());
    Ok(Quotient {
        product,
        space,
        theta,
        report,
    })
}

/// The D-ultrapower of `(V, d^s_V)` with the diagonal `T` and the limit map
/// `T′`, checked to be mutually inverse distance-preserving bijections.
#[derive(Debug, Clone)]
pub struct Ultrapower {
    pub quotient: Quotient,
    pub t: Vec<usize>,
    pub t_prime: Vec<Elem>,
    pub report: Report,
}

pub fn ultrapower_v(v: &Arc<CoQuantale>, d: &PrincipalUltrafilter) -> Result<Ultrapower, UltraError> {
    let vs = ContinuitySpace::value_space(v.clone());
    let factors: Vec<&ContinuitySpace> = vec![&vs; d.index_count()];
    let quotient = quotient_ultraproduct(&factors, d)?;
    let tuples = &quotient.product.tuples;
    let limits = LimitTable::new(v, d)?;
    let classes = quotient.space.len();
    let index_of = |t: &[usize]| tuples.iter().position(|u| u == t).expect("every tuple is a product point");
    let t: Vec<usize> = v.elements().map(|a| quotient.theta[index_of(&vec![a; d.index_count()])]).collect();
    // T′ on a class, read off every representative
    let mut t_prime = vec![usize::MAX; classes];
    let mut rep_ok = None;
    for (x, tup) in tuples.iter().enumerate() {
        let lim = limits.get(tup);
        let c = quotient.theta[x];
        if t_prime[c] == usize::MAX {
            t_prime[c] = lim;
        } else if t_prime[c] != lim && rep_ok.is_none() {
            rep_ok = Some(format!("class {} has limits {} and {}", c, v.elem_name(t_prime[c]), v.elem_name(lim)));
        }
    }
    let mut report = quotient.report.clone();
    report.title = format!("ultrapower of {} over {} indices at {}", v.name(), d.index_count(), d.generator());
    report.check("T′ well defined on classes", tuples.len() as u64, rep_ok);
    let mut hit = vec![false; classes];
    for &c in &t {
        hit[c] = true;
    }
    let injective = {
        let mut seen = t.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == t.len()
    };
    report.check(
        "T injective",
        v.len() as u64,
        (!injective).then(|| "two elements share a class".to_string()),
    );
    let (c, w) = scan(0..classes, |c| (!hit[c]).then(|| quotient.space.point_name(c).to_string()));
    report.check("T surjective", c, w);
    let (c, w) = scan(v.elements(), |a| (t_prime[t[a]] != a).then(|| v.elem_name(a).to_string()));
    report.check("T′∘T = id", c, w);
    let (c, w) = scan(0..classes, |c| (t[t_prime[c]] != c).then(|| quotient.space.point_name(c).to_string()));
    report.check("T∘T′ = id", c, w);
    let (c, w) = scan(v.elements().flat_map(|a| v.elements().map(move |b| (a, b))), |(a, b)| {
        (quotient.space.d(t[a], t[b]) != v.dsym(a, b)).then(|| format!("{} {}", v.elem_name(a), v.elem_name(b)))
    });
    report.check("T preserves distance", c, w);
    Ok(Ultrapower {
        quotient,
        t,
        t_prime,
        report,
    })
}

/// The D-product of structures: predicates are D-limits of the factor
/// values, functions act componentwise, constants are constant tuples.
#[derive(Debug, Clone)]
pub struct DProduct {
    pub structure: LStructure,
    pub factors: Vec<LStructure>,
    pub tuples: Vec<Vec<usize>>,
    pub filter: PrincipalUltrafilter,
    limits: LimitTable,
}

pub fn d_product_structure(factors: &[&LStructure], d: &PrincipalUltrafilter) -> Result<DProduct, UltraError> {
    let first = factors.first().ok_or(UltraError::FactorCount {
        expected: d.index_count(),
        got: 0,
    })?;
    if factors.iter().any(|f| f.lang() != first.lang()) {
        return Err(UltraError::SignatureMismatch);
    }
    let v = first.v();
    if !v.is_co_divisible() {
        return Err(UltraError::NotCoDivisible(v.name().to_string()));
    }
    let spaces: Vec<&ContinuitySpace> = factors.iter().map(|f| f.space()).collect();
    let prod = d_product_space(&spaces, d)?;
    let limits = LimitTable::new(v, d)?;
    let sizes: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    let n = prod.tuples.len();
    let point_of = |t: &[usize]| t.iter().zip(&sizes).fold(0, |acc, (&x, &s)| acc * s + x);
    let sig = &first.lang().sig;
    let mut seq = vec![0; factors.len()];
    let mut preds = Vec::new();
    for (p, sym) in sig.predicates.iter().enumerate() {
        let mut table = Vec::new();
        for args in tuples(n, sym.arity) {
            for (i, f) in factors.iter().enumerate() {
                let proj: Vec<usize> = args.iter().map(|&a| prod.tuples[a][i]).collect();
                seq[i] = f.pred(p, &proj);
            }
            table.push(limits.get(&seq));
        }
        preds.push(table);
    }
    let mut funs = Vec::new();
    for (fi, sym) in sig.functions.iter().enumerate() {
        let mut table = Vec::new();
        for args in tuples(n, sym.arity) {
            let image: Vec<usize> = factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.fun(fi, &args.iter().map(|&a| prod.tuples[a][i]).collect::<Vec<_>>()))
                .collect();
            table.push(point_of(&image));
        }
        funs.push(table);
    }
    let consts = (0..sig.constants.len())
        .map(|c| point_of(&factors.iter().map(|f| f.const_point(c)).collect::<Vec<_>>()))
        .collect();
    let names: Vec<&str> = factors.iter().map(|f| f.name()).collect();
    let name = format!("{}^D{}", names.join("*"), d.generator());
    let structure = LStructure::new(name, first.lang().clone(), prod.space, preds, funs, consts)?;
    Ok(DProduct {
        structure,
        factors: factors.iter().map(|f| (*f).clone()).collect(),
        tuples: prod.tuples,
        filter: *d,
        limits,
    })
}

impl DProduct {
    /// For each factor, the index in `M_i^k` of the projection of each
    /// tuple of the product's `k`-th power.
    fn projections(&self, k: usize) -> Vec<Vec<usize>> {
        let n = self.tuples.len();
        (0..self.factors.len())
            .map(|i| {
                let m = self.factors[i].len();
                tuples(n, k)
                    .map(|t| t.iter().fold(0, |acc, &p| acc * m + self.tuples[p][i]))
                    .collect()
            })
            .collect()
    }

    pub fn limit(&self, seq: &[Elem]) -> Elem {
        self.limits.get(seq)
    }
}

/// `⋀_k ⋁_l (a_l ∸ a_k)` and `⋀_k ⋁_l (a_k ∸ a_l)`.
pub fn family_conditions(v: &CoQuantale, family: &[Elem]) -> (Elem, Elem) {
    let side = |f: &dyn Fn(Elem, Elem) -> Elem| {
        family.iter().fold(v.top(), |acc, &ak| {
            let j = family.iter().fold(v.zero(), |j, &al| v.join(j, f(al, ak)));
            v.meet(acc, j)
        })
    };
    (side(&|al, ak| v.trunc_sub(al, ak)), side(&|al, ak| v.trunc_sub(ak, al)))
}

/// Outcome of the hypothesis scan for one structure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hypothesis {
    pub families: u64,
    pub first_failure: Option<String>,
}

impl Hypothesis {
    pub fn holds(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn hypothesis_on_table(
    m: &LStructure,
    table: &[Elem],
    k: usize,
    x: usize,
    label: &dyn Fn() -> String,
    out: &mut Hypothesis,
) {
    let n = m.len();
    let v = m.v();
    let stride = n.pow((k - 1 - x) as u32);
    let mut family = vec![0; n];
    for start in (0..table.len()).step_by(stride * n) {
        for off in 0..stride {
            for (c, slot) in family.iter_mut().enumerate() {
                *slot = table[start + off + c * stride];
            }
            out.families += 1;
            let (sup_side, inf_side) = family_conditions(v, &family);
            if out.first_failure.is_none() && (sup_side != v.zero() || inf_side != v.zero()) {
                out.first_failure = Some(format!("{} in {} over x{x}", label(), m.name()));
            }
        }
    }
}

/// For `φ = sup/inf x body`, checks that every value family of the body
/// along `x` has both discrete-Cauchy conditions vanishing.
pub fn los_hypothesis_check(m: &LStructure, phi: &Formula) -> Result<Hypothesis, UltraError> {
    let (x, body) = match phi {
        Formula::Sup(x, b) | Formula::Inf(x, b) => (*x, b.as_ref()),
        _ => return Ok(Hypothesis::default()),
    };
    let k = phi.window();
    let table = m.formula_table(body, k)?;
    let mut out = Hypothesis::default();
    hypothesis_on_table(m, &table, k, x, &|| m.describe(phi), &mut out);
    Ok(out)
}

/// Both sides of the Łoś equality for one formula on every tuple.
pub fn los_check(dp: &DProduct, phi: &Formula) -> Result<Report, UltraError> {
    let k = phi.window();
    let lang = dp.structure.lang();
    let mut report = Report::new(format!("łoś {}", dp.structure.name()));
    report.fact("formula", print_formula(phi, lang));
    let quantified: Vec<&Formula> = quantified_subformulas(phi);
    if !quantified.is_empty() {
        let mut hyp = Hypothesis::default();
        for f in &dp.factors {
            for q in &quantified {
                let h = los_hypothesis_check(f, q)?;
                hyp.families += h.families;
                if hyp.first_failure.is_none() {
                    hyp.first_failure = h.first_failure;
                }
            }
        }
        report.fact("hypothesis", if hyp.holds() { "holds" } else { "fails" });
        report.check("discrete Cauchy hypothesis on factors", hyp.families, hyp.first_failure);
    }
    let left = dp.structure.formula_table(phi, k)?;
    let rights = dp
        .factors
        .iter()
        .map(|f| f.formula_table(phi, k))
        .collect::<Result<Vec<_>, _>>()?;
    let proj = dp.projections(k);
    let v = dp.structure.v();
    let mut seq = vec![0; dp.factors.len()];
    let (count, witness) = scan(0..left.len(), |t| {
        for (i, r) in rights.iter().enumerate() {
            seq[i] = r[proj[i][t]];
        }
        let lim = dp.limit(&seq);
        (lim != left[t]).then(|| {
            format!(
                "tuple #{t}: product {} vs limit {}",
                v.elem_name(left[t]),
                v.elem_name(lim)
            )
        })
    });
    report.check("φ^{M_D} = lim φ^{M_i}", count, witness);
    Ok(report)
}

fn quantified_subformulas(phi: &Formula) -> Vec<&Formula> {
    let mut out = Vec::new();
    fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::Conn(_, fs) => fs.iter().for_each(|g| walk(g, out)),
            Formula::Sup(_, b) | Formula::Inf(_, b) => {
                out.push(f);
                walk(b, out);
            }
            _ => {}
        }
    }
    walk(phi, &mut out);
    out
}

/// The Łoś equality for every pool formula of depth `≤ depth`, with the
/// hypothesis recorded for every quantifier body on every factor.
pub fn los_check_pool(dp: &DProduct, pool: &FormulaPool, depth: usize) -> Result<Report, UltraError> {
    let k = pool.window();
    let v = dp.structure.v();
    let mut report = Report::new(format!("łoś {}", dp.structure.name()));
    report.fact("depth", format!("{depth} (verdict holds up to this depth only)"));
    report.fact("formulas", pool.count_upto(depth));

    // quantified formulas of depth ≤ depth have bodies of depth < depth
    let mut hyp = Hypothesis::default();
    if depth > 0 {
        let lang = dp.structure.lang().clone();
        for f in &dp.factors {
            // (body, var) pairs under some quantifier
            let mut bound = vec![0u64; pool.count_upto(depth - 1)];
            for node in &pool.nodes()[..pool.count_upto(depth)] {
                if let Node::Quant { var, body, .. } = *node {
                    bound[body] |= 1 << var;
                }
            }
            pool.visit(&[f], depth - 1, |i, tabs| {
                for x in (0..k).filter(|x| bound[i] >> x & 1 == 1) {
                    let label = || print_formula(&pool.formulas()[i], &lang);
                    hypothesis_on_table(f, tabs[0], k, x, &label, &mut hyp);
                }
                ControlFlow::Continue(())
            })?;
        }
        report.fact("hypothesis", if hyp.holds() { "holds" } else { "fails" });
        report.check("discrete Cauchy hypothesis on factors", hyp.families, hyp.first_failure);
    }

    let proj = dp.projections(k);
    let mut structures: Vec<&LStructure> = vec![&dp.structure];
    structures.extend(dp.factors.iter());
    let mut seq = vec![0; dp.factors.len()];
    let mut instances = 0u64;
    let mut witness = None;
    let lang = dp.structure.lang();
    pool.visit(&structures, depth, |i, tabs| {
        let left = tabs[0];
        for t in 0..left.len() {
            for (f, s) in seq.iter_mut().enumerate() {
                *s = tabs[f + 1][proj[f][t]];
            }
            instances += 1;
            let lim = dp.limit(&seq);
            if lim != left[t] {
                witness = Some(format!(
                    "{} at tuple #{t}: product {} vs limit {}",
                    print_formula(&pool.formulas()[i], lang),
                    v.elem_name(left[t]),
                    v.elem_name(lim)
                ));
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    report.check(format!("łoś equality up to depth {depth}"), instances, witness);
    Ok(report)
}

/// Checks the D-limit bounds, the strong bound (when co-divisible), and
/// the two quantifier inequalities over every sequence of length
/// `1..=max_index`, every principal `D`, every `b`, and every family on
/// carriers of size `1..=max_carrier`.
pub fn check_limit_laws(v: &CoQuantale, max_index: usize, max_carrier: usize) -> Result<Report, UltraError> {
    let mut report = Report::new(format!("D-limit laws on {}", v.name()));
    let base = v.len();
    let z = v.zero();
    let mut lower = (0u64, None);
    let mut upper = (0u64, None);
    let mut strong = (0u64, None);
    let mut q_inf = (0u64, None);
    let mut q_sup = (0u64, None);
    let codiv = v.is_co_divisible();
    let record = |slot: &mut (u64, Option<String>), bad: Option<String>| {
        slot.0 += 1;
        if slot.1.is_none() {
            slot.1 = bad;
        }
    };
    for n in 1..=max_index {
        for d in PrincipalUltrafilter::all(n)? {
            let limits = LimitTable::new(v, &d)?;
            let full = (1u64 << n) - 1;
            for seq in tuples(base, n) {
                let lim = limits.get(&seq);
                let show = || format!("({}) D{} lim {}", seq_names(v, &seq), d.generator(), v.elem_name(lim));
                for b in v.elements() {
                    let below = (0..=full).any(|a| d.contains(a) && (0..n).filter(|j| a >> j & 1 == 1).all(|j| v.leq(b, seq[j])));
                    record(&mut lower, (below && !v.leq(b, lim)).then(|| format!("{} b {}", show(), v.elem_name(b))));
                    let above = (0..=full).any(|a| d.contains(a) && (0..n).filter(|j| a >> j & 1 == 1).all(|j| v.leq(seq[j], b)));
                    record(&mut upper, (above && !v.leq(lim, b)).then(|| format!("{} b {}", show(), v.elem_name(b))));
                    if codiv && v.leq(lim, b) && v.co_well_below(z, v.trunc_sub(b, lim)) {
                        let set = (0..n).filter(|&j| v.leq(seq[j], b)).fold(0u64, |acc, j| acc | 1 << j);
                        record(&mut strong, (!d.contains(set)).then(|| format!("{} b {}", show(), v.elem_name(b))));
                    }
                }
            }
            for s in 1..=max_carrier {
                // a family (F_i)_{i∈I} is a table over I × S
                let cells = n * s;
                let count = base
                    .checked_pow(cells as u32)
                    .filter(|&c| c <= 1 << 24)
                    .ok_or_else(|| UltraError::SizeLimit {
                        count: format!("{base}^{cells} families"),
                    })?;
                let mut f = vec![0; cells];
                let mut col = vec![0; n];
                for mut code in 0..count {
                    for cell in f.iter_mut() {
                        *cell = code % base;
                        code /= base;
                    }
                    let lim_at = |x: usize, col: &mut Vec<Elem>| {
                        for i in 0..n {
                            col[i] = f[i * s + x];
                        }
                        limits.get(col)
                    };
                    let mut inf_of_lims = v.top();
                    let mut sup_of_lims = z;
                    for x in 0..s {
                        let l = lim_at(x, &mut col);
                        inf_of_lims = v.meet(inf_of_lims, l);
                        sup_of_lims = v.join(sup_of_lims, l);
                    }
                    for i in 0..n {
                        let row = &f[i * s..(i + 1) * s];
                        col[i] = row.iter().fold(v.top(), |a, &e| v.meet(a, e));
                    }
                    let lim_of_infs = limits.get(&col);
                    for i in 0..n {
                        let row = &f[i * s..(i + 1) * s];
                        col[i] = row.iter().fold(z, |a, &e| v.join(a, e));
                    }
                    let lim_of_sups = limits.get(&col);
                    let show = || format!("family {} D{}", seq_names(v, &f), d.generator());
                    record(&mut q_inf, (!v.leq(lim_of_infs, inf_of_lims)).then(show));
                    record(&mut q_sup, (!v.leq(sup_of_lims, lim_of_sups)).then(show));
                }
            }
        }
    }
    report.fact("co-divisible", codiv);
    report.check("b ≤ a_j on a D-set implies b ≤ lim", lower.0, lower.1);
    report.check("b ≥ a_j on a D-set implies b ≥ lim", upper.0, upper.1);
    if codiv {
        report.check("lim ≤ b and 0 ≺ b∸lim imply {i : a_i ≤ b} ∈ D", strong.0, strong.1);
    }
    report.check("⋀_x lim F_i(x) ≥ lim ⋀_x F_i(x)", q_inf.0, q_inf.1);
    report.check("⋁_x lim F_i(x) ≤ lim ⋁_x F_i(x)", q_sup.0, q_sup.1);
    Ok(report)
}

/// Outcome of the compactness construction.
#[derive(Debug, Clone)]
pub struct Compactness {
    /// Sub-theories as bitmasks over the conditions, in index order.
    pub index: Vec<u64>,
    /// Candidate chosen for each sub-theory.
    pub chosen: Vec<usize>,
    pub product: DProduct,
    pub report: Report,
}

/// Indexes every sub-theory, picks a candidate model for each, takes the
/// ultrafilter generated at the whole theory and verifies that the
/// resulting D-product models the theory.
pub fn compactness_build(theory: &Theory, candidates: &[&LStructure]) -> Result<Compactness, UltraError> {
    let t = theory.len();
    if t > MAX_THEORY {
        return Err(UltraError::TheoryTooLarge(t));
    }
    if candidates.is_empty() {
        return Err(UltraError::NotFinitelySatisfiable("the empty theory (no candidates)".into()));
    }
    let index: Vec<u64> = (0..1u64 << t).collect();
    let mut chosen = Vec::with_capacity(index.len());
    for &lambda in &index {
        let sub = theory.subset(lambda);
        match candidates.iter().position(|m| m.models(&sub)) {
            Some(c) => chosen.push(c),
            None => {
                let names: Vec<&str> = sub.conditions.iter().map(|c| c.name.as_str()).collect();
                return Err(UltraError::NotFinitelySatisfiable(format!("{{{}}}", names.join(", "))));
            }
        }
    }
    // S(E) = {λ : E ∈ λ}; the family has the finite intersection property
    // and meets exactly in λ = T
    let s_sets: Vec<u64> = (0..t)
        .map(|e| index.iter().enumerate().filter(|(_, &l)| l >> e & 1 == 1).fold(0u64, |acc, (i, _)| acc | 1 << i))
        .collect();
    let all_lambdas = if index.len() == 64 { u64::MAX } else { (1u64 << index.len()) - 1 };
    let meet = s_sets.iter().fold(all_lambdas, |acc, s| acc & s);
    let generator = meet.trailing_zeros() as usize;
    let mut report = Report::new("compactness");
    report.fact("conditions", t);
    report.fact("index size", index.len());
    report.fact("generator", format!("λ = {:b}", index[generator]));
    report.check(
        "S(E) family meets in the whole theory",
        s_sets.len() as u64,
        (meet != 1 << (index.len() - 1)).then(|| format!("meet {meet:b}")),
    );
    let d = PrincipalUltrafilter::new(index.len(), generator)?;
    let factors: Vec<&LStructure> = chosen.iter().map(|&c| candidates[c]).collect();
    let product = d_product_structure(&factors, &d)?;
    if let Some(c) = product.structure.first_unsatisfied(theory) {
        return Err(UltraError::VerificationFailed(c.name.clone()));
    }
    report.check("product models the theory", t as u64, None);
    Ok(Compactness {
        index,
        chosen,
        product,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::builtin;
    use crate::formula::{parse_formula, Language, Modulus, Signature};
    use crate::semantics::Condition;

    fn chain(n: usize) -> Arc<CoQuantale> {
        Arc::new(builtin(&format!("chain:{n}")).unwrap())
    }

    fn space(v: &Arc<CoQuantale>, dist: Vec<Vec<Elem>>) -> ContinuitySpace {
        let names = (0..dist.len()).map(|i| format!("p{i}")).collect();
        ContinuitySpace::new(v.clone(), names, dist).unwrap()
    }

    #[test]
    fn principal_ultrafilters_are_ultrafilters() {
        for n in 1..=5 {
            for d in PrincipalUltrafilter::all(n).unwrap() {
                assert_eq!(d.check_axioms(), None);
            }
        }
        assert!(PrincipalUltrafilter::new(2, 2).is_err());
        assert!(PrincipalUltrafilter::new(0, 0).is_err());
    }

    #[test]
    fn limits_by_scan_match_the_generator() {
        let v = chain(4);
        for n in 1..=3 {
            for d in PrincipalUltrafilter::all(n).unwrap() {
                for seq in tuples(v.len(), n) {
                    assert_eq!(d_ultralimit(&v, &seq, &d).unwrap(), seq[d.generator()]);
                }
            }
        }
        let d = PrincipalUltrafilter::new(3, 1).unwrap();
        assert_eq!(d_ultralimit(&v, &[2, 2, 2], &d).unwrap(), 2);
        // constant distances have themselves as limit
        for a in v.elements() {
            for b in v.elements() {
                let dist = v.dsym(a, b);
                assert_eq!(d_ultralimit(&v, &[dist; 3], &d).unwrap(), dist);
            }
        }
    }

    #[test]
    fn limits_on_free_locales_use_t0() {
        let v = builtin("freelocale:2").unwrap();
        assert!(v.symmetric_is_t0());
        for n in 1..=2 {
            for d in PrincipalUltrafilter::all(n).unwrap() {
                for seq in tuples(v.len(), n) {
                    assert_eq!(d_ultralimit(&v, &seq, &d).unwrap(), seq[d.generator()]);
                }
            }
        }
    }

    #[test]
    fn product_spaces() {
        let v = chain(3);
        let one = space(&v, vec![vec![0]]);
        let d = PrincipalUltrafilter::new(2, 0).unwrap();
        let p = d_product_space(&[&one, &one], &d).unwrap();
        assert_eq!(p.space.len(), 1);
        assert_eq!(p.space.d(0, 0), 0);
        let a = space(&v, vec![vec![0, 1], vec![3, 0]]);
        let b = space(&v, vec![vec![0, 2, 2], vec![0, 0, 1], vec![3, 3, 0]]);
        for d in PrincipalUltrafilter::all(2).unwrap() {
            let p = d_product_space(&[&a, &b], &d).unwrap();
            assert_eq!(p.space.len(), 6);
            assert_eq!(p.space.point_name(1), "<p0,p1>");
            for x in 0..6 {
                for y in 0..6 {
                    let j = d.generator();
                    let f = [&a, &b][j];
                    assert_eq!(p.space.d(x, y), f.d(p.tuples[x][j], p.tuples[y][j]));
                }
            }
        }
        assert!(!a.is_symmetric());
    }

    #[test]
    fn quotients() {
        let v = chain(3);
        let a = space(&v, vec![vec![0, 2], vec![2, 0]]);
        let b = space(&v, vec![vec![0, 1, 3], vec![1, 0, 3], vec![3, 3, 0]]);
        for d in PrincipalUltrafilter::all(2).unwrap() {
            let q = quotient_ultraproduct(&[&a, &b], &d).unwrap();
            assert!(q.report.passed(), "{}", q.report.to_text());
            let j = d.generator();
            for x in 0..q.product.tuples.len() {
                for y in 0..q.product.tuples.len() {
                    let same = q.product.tuples[x][j] == q.product.tuples[y][j];
                    assert_eq!(q.theta[x] == q.theta[y], same);
                }
            }
        }
        // a pseudo-metric merges points at distance 0
        let c = space(&v, vec![vec![0, 0], vec![0, 0]]);
        let d = PrincipalUltrafilter::new(1, 0).unwrap();
        let q = quotient_ultraproduct(&[&c], &d).unwrap();
        assert_eq!(q.space.len(), 1);
        let asym = space(&v, vec![vec![0, 1], vec![2, 0]]);
        assert!(matches!(
            quotient_ultraproduct(&[&asym], &d),
            Err(UltraError::NotSymmetricFactors(_))
        ));
    }

    #[test]
    fn ultrapowers_of_v() {
        for spec in ["bool2", "chain:4", "lukasiewicz:4"] {
            let v = Arc::new(builtin(spec).unwrap());
            for n in 1..=3 {
                for d in PrincipalUltrafilter::all(n).unwrap() {
                    let u = ultrapower_v(&v, &d).unwrap();
                    assert!(u.report.passed(), "{}", u.report.to_text());
                }
            }
        }
    }

    #[test]
    fn family_conditions_on_chains() {
        let v = chain(4);
        assert_eq!(family_conditions(&v, &[2, 2, 2]), (0, 0));
        assert_eq!(family_conditions(&v, &[0, 3]).0, 0);
        for k in 1..=3 {
            for fam in tuples(v.len(), k) {
                assert_eq!(family_conditions(&v, &fam), (0, 0), "{fam:?}");
            }
        }
    }

    fn lang(v: &Arc<CoQuantale>) -> Arc<Language> {
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::identity(v)).unwrap();
        sig.add_constant("c").unwrap();
        Arc::new(Language::new(v.clone(), sig).unwrap())
    }

    #[test]
    fn product_structures_and_los() {
        let v = chain(4);
        let l = lang(&v);
        let m1 = LStructure::new("A", l.clone(), space(&v, vec![vec![0, 2], vec![2, 0]]), vec![vec![0, 2]], vec![], vec![1]).unwrap();
        let m2 = LStructure::new(
            "B",
            l.clone(),
            space(&v, vec![vec![0, 1, 4], vec![1, 0, 4], vec![4, 4, 0]]),
            vec![vec![1, 2, 4]],
            vec![],
            vec![0],
        )
        .unwrap();
        for d in PrincipalUltrafilter::all(2).unwrap() {
            let dp = d_product_structure(&[&m1, &m2], &d).unwrap();
            let j = d.generator();
            for (x, t) in dp.tuples.iter().enumerate() {
                let f = [&m1, &m2][j];
                assert_eq!(dp.structure.pred(0, &[x]), f.pred(0, &[t[j]]));
            }
            for s in ["(P x0)", "(sup x1 (conn wedge (P x1) (d x0 x1)))", "(inf x0 (d x0 c))", "(d x0 x1)"] {
                let phi = parse_formula(s, &l).unwrap();
                let r = los_check(&dp, &phi).unwrap();
                assert!(r.passed(), "{}", r.to_text());
            }
        }
        // an ultrapower agrees with its factor on diagonal tuples
        let d = PrincipalUltrafilter::new(3, 2).unwrap();
        let up = d_product_structure(&[&m2, &m2, &m2], &d).unwrap();
        for x in 0..m2.len() {
            let diag = up.tuples.iter().position(|t| t.iter().all(|&p| p == x)).unwrap();
            assert_eq!(up.structure.pred(0, &[diag]), m2.pred(0, &[x]));
        }
    }

    #[test]
    fn compactness_examples() {
        let v = chain(4);
        let l = lang(&v);
        let f = |s: &str| parse_formula(s, &l).unwrap();
        let mk = |name: &str, p: Vec<Elem>| {
            let dist = vec![vec![0, 4], vec![4, 0]];
            LStructure::new(name, l.clone(), space(&v, dist), vec![p], vec![], vec![0]).unwrap()
        };
        let a = mk("A", vec![0, 4]);
        let b = mk("B", vec![4, 0]);
        let c = mk("C", vec![0, 0]);
        let e1 = Condition {
            name: "E1".into(),
            formula: f("(P c)"),
        };
        let e2 = Condition {
            name: "E2".into(),
            formula: f("(sup x0 (P x0))"),
        };
        let single = Theory::new(vec![e1.clone()]).unwrap();
        let out = compactness_build(&single, &[&a]).unwrap();
        assert!(out.product.structure.models(&single));
        let both = Theory::new(vec![e1, e2]).unwrap();
        let out = compactness_build(&both, &[&a, &b, &c]).unwrap();
        assert_eq!(out.chosen, vec![0, 0, 2, 2]);
        assert!(out.report.passed());
        assert!(matches!(compactness_build(&both, &[&a, &b]), Err(UltraError::NotFinitelySatisfiable(_))));
    }

    #[test]
    fn limit_laws_hold_on_small_chains() {
        let v = chain(2);
        let r = check_limit_laws(&v, 2, 2).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }
}
