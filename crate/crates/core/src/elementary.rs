//! Elementarity and the Tarski-Vaught condition, up to a formula depth.

use std::ops::ControlFlow;

use crate::enumerate::{enumerate_formulas, FormulaPool};
use crate::formula::{print_formula, tuples, var_name};
use crate::report::Report;
use crate::semantics::{LStructure, SemanticsError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Position in the pool.
    pub index: usize,
    pub formula: String,
    /// For Tarski-Vaught, the variable whose infimum disagrees.
    pub var: Option<usize>,
    /// Point names for `x0, x1, ...`; the quantified slot is `_`.
    pub tuple: Vec<String>,
    /// Value in the substructure (or the infimum over it).
    pub sub_value: String,
    /// Value in the superstructure (or the infimum over it).
    pub sup_value: String,
}

impl Witness {
    pub fn describe(&self) -> String {
        let assign: Vec<String> = self
            .tuple
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}={p}", var_name(i)))
            .collect();
        let var = self.var.map(|x| format!(" inf over {}", var_name(x))).unwrap_or_default();
        format!(
            "{}{var} at [{}]: sub {} vs sup {}",
            self.formula,
            assign.join(" "),
            self.sub_value,
            self.sup_value
        )
    }
}

/// Outcome of a depth-bounded check. Verdicts only speak about formulas up
/// to `depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: &'static str,
    pub depth: usize,
    pub formulas: usize,
    pub instances: u64,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }

    pub fn to_report(&self, sub: &str, sup: &str) -> Report {
        let mut r = Report::new(format!("{} {sub} in {sup}", self.kind));
        r.fact("depth", format!("{} (verdict holds up to this depth only)", self.depth));
        r.fact("formulas", self.formulas);
        r.check(
            format!("{} up to depth {}", self.kind, self.depth),
            self.instances,
            self.witness.as_ref().map(Witness::describe),
        );
        r
    }
}

/// Index in `N^k` of the image of each tuple of `M^k`.
fn tuple_map(emb: &[usize], m: usize, n: usize, k: usize) -> Vec<usize> {
    tuples(m, k)
        .map(|t| t.iter().fold(0, |acc, &x| acc * n + emb[x]))
        .collect()
}

fn names(s: &LStructure, t: &[usize]) -> Vec<String> {
    t.iter().map(|&p| s.space().point_name(p).to_string()).collect()
}

/// `φ^M(ā) = φ^N(ā)` for every pool formula of depth `≤ depth` and every
/// tuple from `M`.
pub fn elementary_with(m: &LStructure, n: &LStructure, pool: &FormulaPool, depth: usize) -> Result<Verdict, SemanticsError> {
    let emb = m.embedding_into(n)?;
    let k = pool.window();
    let map = tuple_map(&emb, m.len(), n.len(), k);
    let m_tuples: Vec<Vec<usize>> = tuples(m.len(), k).collect();
    let mut witness = None;
    let mut instances = 0u64;
    let v = m.v();
    pool.visit(&[m, n], depth, |i, tabs| {
        for (t, &nt) in map.iter().enumerate() {
            instances += 1;
            if tabs[0][t] != tabs[1][nt] {
                witness = Some(Witness {
                    index: i,
                    formula: print_formula(&pool.formulas()[i], m.lang()),
                    var: None,
                    tuple: names(m, &m_tuples[t]),
                    sub_value: v.elem_name(tabs[0][t]).to_string(),
                    sup_value: v.elem_name(tabs[1][nt]).to_string(),
                });
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(Verdict {
        kind: "elementarity",
        depth,
        formulas: pool.count_upto(depth),
        instances,
        witness,
    })
}

/// `⋀{φ^N(c, ā) : c ∈ M} = ⋀{φ^N(c, ā) : c ∈ N}` for every pool formula of
/// depth `≤ depth`, every variable of the window as the bound slot, and
/// every tuple `ā` from `M` on the other slots.
pub fn tarski_vaught_with(m: &LStructure, n: &LStructure, pool: &FormulaPool, depth: usize) -> Result<Verdict, SemanticsError> {
    let v = m.v();
    if !v.is_co_girard() {
        return Err(SemanticsError::NotCoGirard(v.name().to_string()));
    }
    let emb = m.embedding_into(n)?;
    let k = pool.window();
    let (ms, ns) = (m.len(), n.len());
    let map = tuple_map(&emb, ms, ns, k);
    let m_tuples: Vec<Vec<usize>> = tuples(ms, k).collect();
    let mut witness = None;
    let mut instances = 0u64;
    pool.visit(&[n], depth, |i, tabs| {
        let tab = tabs[0];
        for x in 0..k {
            let n_stride = ns.pow((k - 1 - x) as u32);
            for (t, tuple) in m_tuples.iter().enumerate() {
                if tuple[x] != 0 {
                    continue;
                }
                instances += 1;
                let base = map[t] - emb[0] * n_stride;
                let over_m = emb.iter().fold(v.top(), |acc, &c| v.meet(acc, tab[base + c * n_stride]));
                let over_n = (0..ns).fold(v.top(), |acc, c| v.meet(acc, tab[base + c * n_stride]));
                if over_m != over_n {
                    let mut shown = names(m, tuple);
                    shown[x] = "_".to_string();
                    witness = Some(Witness {
                        index: i,
                        formula: print_formula(&pool.formulas()[i], m.lang()),
                        var: Some(x),
                        tuple: shown,
                        sub_value: v.elem_name(over_m).to_string(),
                        sup_value: v.elem_name(over_n).to_string(),
                    });
                    return ControlFlow::Break(());
                }
            }
        }
        ControlFlow::Continue(())
    })?;
    Ok(Verdict {
        kind: "tarski-vaught",
        depth,
        formulas: pool.count_upto(depth),
        instances,
        witness,
    })
}

pub fn elementary_upto(m: &LStructure, n: &LStructure, depth: usize, max_free_vars: usize) -> Result<Verdict, SemanticsError> {
    let pool = enumerate_formulas(m.lang(), depth, max_free_vars)?;
    elementary_with(m, n, &pool, depth)
}

pub fn tarski_vaught_upto(m: &LStructure, n: &LStructure, depth: usize, max_free_vars: usize) -> Result<Verdict, SemanticsError> {
    let pool = enumerate_formulas(m.lang(), depth, max_free_vars)?;
    tarski_vaught_with(m, n, &pool, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::builtin;
    use crate::formula::{parse_formula, Formula, Language, Modulus, Signature};
    use crate::lattice::Elem;
    use crate::space::ContinuitySpace;
    use std::sync::Arc;

    fn lang(spec: &str) -> Arc<Language> {
        let v = Arc::new(builtin(spec).unwrap());
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::identity(&v)).unwrap();
        Arc::new(Language::new(v, sig).unwrap())
    }

    fn structure(l: &Arc<Language>, dist: Vec<Vec<Elem>>, p: Vec<Elem>) -> LStructure {
        let names = (0..dist.len()).map(|i| format!("p{i}")).collect();
        let space = ContinuitySpace::new(l.v_arc().clone(), names, dist).unwrap();
        LStructure::new("N", l.clone(), space, vec![p], vec![], vec![]).unwrap()
    }

    #[test]
    fn identical_structures_pass() {
        let l = lang("chain:3");
        let n = structure(&l, vec![vec![0, 2], vec![1, 0]], vec![0, 1]);
        for depth in 0..=2 {
            assert!(elementary_upto(&n, &n, depth, 2).unwrap().passed());
            assert!(tarski_vaught_upto(&n, &n, depth, 2).unwrap().passed());
        }
    }

    #[test]
    fn lower_infimum_outside_is_caught() {
        let l = lang("chain:3");
        // p1 has P = 0, p0 has P = 3 and is far from p1
        let n = structure(&l, vec![vec![0, 3], vec![3, 0]], vec![3, 0]);
        let m = n.restrict("M", &[0]).unwrap();
        let tv = tarski_vaught_upto(&m, &n, 0, 1).unwrap();
        let w = tv.witness.clone().expect("inf of P drops in N");
        assert_eq!(w.formula, "(P x0)");
        assert_eq!((w.sub_value.as_str(), w.sup_value.as_str()), ("3", "0"));
        let el = elementary_upto(&m, &n, 1, 1).unwrap();
        let phi = parse_formula(&w.formula, &l).unwrap();
        let inf = Formula::Inf(0, Box::new(phi));
        let ew = el.witness.expect("elementarity fails too");
        assert_eq!(ew.formula, print_formula(&inf, &l));
    }

    #[test]
    fn requires_a_dualizer_and_a_substructure() {
        let v = Arc::new(builtin("freelocale:2").unwrap());
        assert!(!v.is_co_girard());
        let mut sig = Signature::new();
        sig.add_predicate("P", 1, Modulus::identity(&v)).unwrap();
        let l = Arc::new(Language::new(v.clone(), sig).unwrap());
        let space = ContinuitySpace::new(v.clone(), vec!["a".into()], vec![vec![v.zero()]]).unwrap();
        let m = LStructure::new("M", l, space, vec![vec![v.zero()]], vec![], vec![]).unwrap();
        assert!(matches!(tarski_vaught_upto(&m, &m, 0, 1), Err(SemanticsError::NotCoGirard(_))));
    }

    #[test]
    fn non_substructures_are_rejected() {
        let l = lang("chain:3");
        let n = structure(&l, vec![vec![0, 3], vec![3, 0]], vec![3, 0]);
        let other = structure(&l, vec![vec![0, 1], vec![1, 0]], vec![3, 2]);
        assert!(matches!(elementary_upto(&other, &n, 0, 1), Err(SemanticsError::NotSubstructure(_))));
    }
}
