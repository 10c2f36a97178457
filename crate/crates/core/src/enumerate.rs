//! Depth-bounded formula enumeration and shared bottom-up evaluation.

use std::ops::ControlFlow;

use crate::formula::{Formula, Language, Term};
use crate::lattice::Elem;
use crate::semantics::{quantify, LStructure, SemanticsError, MAX_TABLE};

/// Upper bound on the number of formulas a pool may hold.
pub const MAX_POOL: usize = 2_000_000;
pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Atom,
    Unary { conn: usize, arg: usize },
    Binary { conn: usize, left: usize, right: usize },
    Quant { sup: bool, var: usize, body: usize },
}

/// Every formula of depth at most `depth` over the variables
/// `x0..x(window-1)`, built from atoms with `vee`, `wedge`, the dualizer
/// maps and both quantifiers. Formulas are ordered by depth, so the ones of
/// depth `≤ d` form a prefix.
#[derive(Debug, Clone)]
pub struct FormulaPool {
    window: usize,
    formulas: Vec<Formula>,
    nodes: Vec<Node>,
    layer_ends: Vec<usize>,
}

fn base_terms(lang: &Language, window: usize) -> Vec<Term> {
    let mut terms: Vec<Term> = (0..window).map(Term::Var).collect();
    terms.extend((0..lang.sig.constants.len()).map(Term::Const));
    let simple = terms.clone();
    for (f, sym) in lang.sig.functions.iter().enumerate() {
        for args in crate::formula::tuples(simple.len(), sym.arity) {
            terms.push(Term::App(f, args.into_iter().map(|i| simple[i].clone()).collect()));
        }
    }
    terms
}

fn atoms(lang: &Language, window: usize) -> Vec<Formula> {
    let terms = base_terms(lang, window);
    let mut out = Vec::new();
    for (p, sym) in lang.sig.predicates.iter().enumerate() {
        for args in crate::formula::tuples(terms.len(), sym.arity) {
            out.push(Formula::Pred(p, args.into_iter().map(|i| terms[i].clone()).collect()));
        }
    }
    for a in &terms {
        for b in &terms {
            out.push(Formula::Dist(a.clone(), b.clone()));
        }
    }
    out
}

/// Number of formulas the next layer would add.
fn layer_size(prev_total: usize, prev_layer: usize, unary: usize, binary: usize, quants: usize) -> Option<usize> {
    let older = prev_total - prev_layer;
    let pairs = prev_layer
        .checked_mul(prev_layer.saturating_sub(1))?
        .checked_div(2)?
        .checked_add(prev_layer.checked_mul(older)?)?;
    prev_layer
        .checked_mul(unary + quants)?
        .checked_add(pairs.checked_mul(binary)?)
}

pub fn enumerate_formulas(lang: &Language, depth: usize, max_free_vars: usize) -> Result<FormulaPool, SemanticsError> {
    if depth > MAX_DEPTH {
        return Err(SemanticsError::TooLarge(format!("depth {depth} (limit {MAX_DEPTH})")));
    }
    let window = max_free_vars;
    let binary: Vec<usize> = ["vee", "wedge"].iter().filter_map(|c| lang.connective(c)).collect();
    let unary = lang.dualizer_connectives();
    let quants = 2 * window;

    let mut formulas = atoms(lang, window);
    let mut nodes = vec![Node::Atom; formulas.len()];
    let mut layer_ends = vec![formulas.len()];
    for _ in 0..depth {
        let total = formulas.len();
        let start = if layer_ends.len() > 1 { layer_ends[layer_ends.len() - 2] } else { 0 };
        let prev = total - start;
        let grow = layer_size(total, prev, unary.len(), binary.len(), quants)
            .filter(|&g| total + g <= MAX_POOL)
            .ok_or_else(|| SemanticsError::TooLarge(format!("formula pool beyond {MAX_POOL}")))?;
        formulas.reserve(grow);
        for i in start..total {
            for &c in &unary {
                formulas.push(Formula::Conn(c, vec![formulas[i].clone()]));
                nodes.push(Node::Unary { conn: c, arg: i });
            }
        }
        for i in start..total {
            for var in 0..window {
                for sup in [true, false] {
                    let body = Box::new(formulas[i].clone());
                    formulas.push(if sup { Formula::Sup(var, body) } else { Formula::Inf(var, body) });
                    nodes.push(Node::Quant { sup, var, body: i });
                }
            }
        }
        for j in start..total {
            for i in 0..j {
                for &c in &binary {
                    formulas.push(Formula::Conn(c, vec![formulas[i].clone(), formulas[j].clone()]));
                    nodes.push(Node::Binary { conn: c, left: i, right: j });
                }
            }
        }
        layer_ends.push(formulas.len());
    }
    Ok(FormulaPool {
        window,
        formulas,
        nodes,
        layer_ends,
    })
}

impl FormulaPool {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn depth(&self) -> usize {
        self.layer_ends.len() - 1
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of formulas of depth at most `d`.
    pub fn count_upto(&self, d: usize) -> usize {
        self.layer_ends[d.min(self.depth())]
    }

    /// Evaluates every formula of depth `≤ depth` in each structure over the
    /// whole window, children first, and hands the tables to `visit` in pool
    /// order. Only tables that can still be children are kept.
    pub fn visit<F>(&self, structures: &[&LStructure], depth: usize, mut visit: F) -> Result<(), SemanticsError>
    where
        F: FnMut(usize, &[&[Elem]]) -> ControlFlow<()>,
    {
        let depth = depth.min(self.depth());
        let count = self.layer_ends[depth];
        let keep = if depth == 0 { 0 } else { self.layer_ends[depth - 1] };
        let k = self.window;
        let mut sizes = Vec::with_capacity(structures.len());
        for s in structures {
            let size = s
                .len()
                .checked_pow(k as u32)
                .filter(|&z| z <= MAX_TABLE)
                .ok_or_else(|| SemanticsError::TooLarge(format!("{}^{k}", s.len())))?;
            sizes.push(size);
        }
        let mut stored: Vec<Vec<Vec<Elem>>> = vec![Vec::with_capacity(keep); structures.len()];
        let mut current: Vec<Vec<Elem>> = vec![Vec::new(); structures.len()];
        for i in 0..count {
            for (si, s) in structures.iter().enumerate() {
                let v = s.v();
                let base = v.len();
                let table = match self.nodes[i] {
                    Node::Atom => s.formula_table(&self.formulas[i], k)?,
                    Node::Unary { conn, arg } => {
                        let c = s.lang().conn(conn);
                        stored[si][arg].iter().map(|&a| c.unary(a)).collect()
                    }
                    Node::Binary { conn, left, right } => {
                        let c = s.lang().conn(conn);
                        stored[si][left]
                            .iter()
                            .zip(&stored[si][right])
                            .map(|(&a, &b)| c.binary(a, b, base))
                            .collect()
                    }
                    Node::Quant { sup, var, body } => quantify(v, &stored[si][body], s.len(), k, var, sup),
                };
                debug_assert_eq!(table.len(), sizes[si]);
                current[si] = table;
            }
            let refs: Vec<&[Elem]> = current.iter().map(|t| t.as_slice()).collect();
            if visit(i, &refs).is_break() {
                return Ok(());
            }
            if i < keep {
                for (si, t) in current.iter_mut().enumerate() {
                    stored[si].push(std::mem::take(t));
                }
            }
        }
        Ok(())
    }
}
