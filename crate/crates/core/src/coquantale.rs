//! Value co-quantales: a finite lattice with a commutative monoid `+` whose
//! identity is the bottom and which distributes over meets.

use std::fmt;

use thiserror::Error;

use crate::lattice::{Elem, FiniteLattice};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoQuantaleError {
    #[error("addition table is not {n}x{n}")]
    Shape { n: usize },
    #[error("addition is not commutative: {a} + {b} differs from {b} + {a}")]
    NotCommutative { a: String, b: String },
    #[error("addition is not associative at ({a}, {b}, {c})")]
    NotAssociative { a: String, b: String, c: String },
    #[error("bottom is not the identity: {a} + 0 differs from {a}")]
    BadIdentity { a: String },
    #[error("addition does not distribute over meets: {a} + ({b} ∧ {c})")]
    NotMeetDistributive { a: String, b: String, c: String },
    #[error("addition does not distribute over the empty meet: {a} + 1 is not 1")]
    TopNotAbsorbing { a: String },
    #[error("`{0}` is not a positive element")]
    NotPositive(String),
    #[error("no witness found for `{0}`; the carrier violates the value co-quantale axioms")]
    NoWitness(String),
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("builtin `{0}` exceeds the size limit")]
    SizeLimit(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoQuantale {
    name: String,
    lattice: FiniteLattice,
    add: Vec<Elem>,
    tsub: Vec<Elem>,
    dsym: Vec<Elem>,
    value: bool,
    co_divisible: bool,
    dualizers: Vec<Elem>,
    safa: bool,
}

impl CoQuantale {
    /// Checks every co-quantale axiom exhaustively and fills the derived tables.
    pub fn new(name: impl Into<String>, lattice: FiniteLattice, add: Vec<Vec<Elem>>) -> Result<Self, CoQuantaleError> {
        let n = lattice.len();
        if add.len() != n || add.iter().any(|row| row.len() != n || row.iter().any(|&e| e >= n)) {
            return Err(CoQuantaleError::Shape { n });
        }
        let add: Vec<Elem> = add.into_iter().flatten().collect();
        let sum = |a: Elem, b: Elem| add[a * n + b];
        let nm = |e: Elem| lattice.name(e).to_string();

        for a in 0..n {
            for b in 0..n {
                if sum(a, b) != sum(b, a) {
                    return Err(CoQuantaleError::NotCommutative { a: nm(a), b: nm(b) });
                }
            }
        }
        for a in 0..n {
            if sum(a, lattice.bottom()) != a {
                return Err(CoQuantaleError::BadIdentity { a: nm(a) });
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if sum(sum(a, b), c) != sum(a, sum(b, c)) {
                        return Err(CoQuantaleError::NotAssociative {
                            a: nm(a),
                            b: nm(b),
                            c: nm(c),
                        });
                    }
                }
            }
        }
        for a in 0..n {
            if sum(a, lattice.top()) != lattice.top() {
                return Err(CoQuantaleError::TopNotAbsorbing { a: nm(a) });
            }
            for b in 0..n {
                for c in b..n {
                    if sum(a, lattice.meet(b, c)) != lattice.meet(sum(a, b), sum(a, c)) {
                        return Err(CoQuantaleError::NotMeetDistributive {
                            a: nm(a),
                            b: nm(b),
                            c: nm(c),
                        });
                    }
                }
            }
        }

        let mut tsub = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                tsub[a * n + b] = lattice.subset_meet((0..n).filter(|&r| lattice.leq(a, sum(r, b))));
            }
        }
        let mut dsym = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                dsym[a * n + b] = lattice.join(tsub[a * n + b], tsub[b * n + a]);
            }
        }

        let mut v = CoQuantale {
            name: name.into(),
            value: lattice.is_value_lattice(),
            lattice,
            add,
            tsub,
            dsym,
            co_divisible: false,
            dualizers: Vec::new(),
            safa: false,
        };
        v.co_divisible = v.compute_co_divisible();
        v.dualizers = v.compute_dualizers();
        v.safa = v.lattice.co_well_below(v.zero(), v.zero());
        Ok(v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice(&self) -> &FiniteLattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        self.lattice.elements()
    }

    pub fn elem_name(&self, e: Elem) -> &str {
        self.lattice.name(e)
    }

    pub fn index_of(&self, name: &str) -> Option<Elem> {
        self.lattice.index_of(name)
    }

    /// Monoid identity, which is the lattice bottom.
    pub fn zero(&self) -> Elem {
        self.lattice.bottom()
    }

    pub fn top(&self) -> Elem {
        self.lattice.top()
    }

    #[inline]
    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.lattice.leq(a, b)
    }

    #[inline]
    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        self.lattice.meet(a, b)
    }

    #[inline]
    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        self.lattice.join(a, b)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a * self.len() + b]
    }

    /// `a ∸ b = ⋀{r : r + b ≥ a}`.
    #[inline]
    pub fn trunc_sub(&self, a: Elem, b: Elem) -> Elem {
        self.tsub[a * self.len() + b]
    }

    /// Symmetric value distance `(a ∸ b) ∨ (b ∸ a)`.
    #[inline]
    pub fn dsym(&self, a: Elem, b: Elem) -> Elem {
        self.dsym[a * self.len() + b]
    }

    /// `n·a`, with `0·a = 0`.
    pub fn multiple(&self, a: Elem, n: usize) -> Elem {
        (0..n).fold(self.zero(), |acc, _| self.add(acc, a))
    }

    #[inline]
    pub fn co_well_below(&self, x: Elem, y: Elem) -> bool {
        self.lattice.co_well_below(x, y)
    }

    pub fn is_positive(&self, e: Elem) -> bool {
        self.lattice.is_positive(e)
    }

    pub fn positives(&self) -> Vec<Elem> {
        self.lattice.positives()
    }

    pub fn is_value(&self) -> bool {
        self.value
    }

    pub fn is_co_divisible(&self) -> bool {
        self.co_divisible
    }

    pub fn dualizing_elements(&self) -> &[Elem] {
        &self.dualizers
    }

    pub fn is_co_girard(&self) -> bool {
        !self.dualizers.is_empty()
    }

    /// SAFA on a finite carrier: a decreasing positive sequence with meet `0`
    /// is eventually constant at `0`, so it exists iff `0 ≺ 0`. The witness is
    /// the constant sequence at `0`.
    pub fn has_safa(&self) -> Option<Elem> {
        self.safa.then_some(self.zero())
    }

    /// `(V, d^s)` is T0. Always true for a partial order, but computed.
    pub fn symmetric_is_t0(&self) -> bool {
        self.elements().all(|a| {
            self.elements()
                .all(|b| a == b || self.dsym(a, b) != self.zero())
        })
    }

    fn compute_co_divisible(&self) -> bool {
        self.elements().all(|a| {
            self.elements()
                .filter(|&b| self.leq(a, b))
                .all(|b| self.add(a, self.trunc_sub(b, a)) == b)
        })
    }

    fn compute_dualizers(&self) -> Vec<Elem> {
        self.elements()
            .filter(|&d| {
                self.elements()
                    .all(|a| self.trunc_sub(d, self.trunc_sub(d, a)) == a)
            })
            .collect()
    }

    /// A maximal positive `δ` with `δ + δ ≺ ε`, lowest index among maximal
    /// candidates.
    pub fn epsilon_halver(&self, eps: Elem) -> Result<Elem, CoQuantaleError> {
        self.epsilon_n_divider(eps, 2)
    }

    /// A maximal positive `θ` with `n·θ ≺ ε`, lowest index among maximal
    /// candidates.
    pub fn epsilon_n_divider(&self, eps: Elem, n: usize) -> Result<Elem, CoQuantaleError> {
        assert!(n >= 1, "divider needs a positive multiple");
        if !self.is_positive(eps) {
            return Err(CoQuantaleError::NotPositive(self.elem_name(eps).to_string()));
        }
        let candidates: Vec<Elem> = self
            .positives()
            .into_iter()
            .filter(|&t| self.co_well_below(self.multiple(t, n), eps))
            .collect();
        self.lattice
            .maximal_in(&candidates)
            .first()
            .copied()
            .ok_or_else(|| CoQuantaleError::NoWitness(self.elem_name(eps).to_string()))
    }

    /// The addition table as rows, for serialisation.
    pub fn add_rows(&self) -> Vec<Vec<Elem>> {
        self.add.chunks(self.len()).map(|r| r.to_vec()).collect()
    }
}

impl fmt::Display for CoQuantale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} elements)", self.name, self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::builtin;

    fn three_chain() -> FiniteLattice {
        FiniteLattice::from_fn(vec!["0".into(), "m".into(), "1".into()], |a, b| a <= b).unwrap()
    }

    #[test]
    fn bool2_is_value_coquantale() {
        let v = builtin("bool2").unwrap();
        assert!(v.is_value());
        assert_eq!(v.dualizing_elements(), &[v.top()]);
        assert!(v.is_co_girard());
        assert_eq!(v.has_safa(), Some(v.zero()));
    }

    #[test]
    fn broken_addition_is_rejected_with_witness() {
        // max, except m + m = 0
        let add = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 2]];
        let err = CoQuantale::new("bad", three_chain(), add).unwrap_err();
        assert!(
            matches!(
                err,
                CoQuantaleError::NotMeetDistributive { .. }
                    | CoQuantaleError::BadIdentity { .. }
                    | CoQuantaleError::NotAssociative { .. }
            ),
            "{err}"
        );
    }

    #[test]
    fn commutativity_and_identity_witnesses() {
        let add = vec![vec![0, 1, 2], vec![2, 2, 2], vec![2, 2, 2]];
        assert_eq!(
            CoQuantale::new("c", three_chain(), add).unwrap_err(),
            CoQuantaleError::NotCommutative { a: "0".into(), b: "m".into() }
        );
        let add = vec![vec![1, 1, 2], vec![1, 2, 2], vec![2, 2, 2]];
        assert_eq!(
            CoQuantale::new("c", three_chain(), add).unwrap_err(),
            CoQuantaleError::BadIdentity { a: "0".into() }
        );
    }

    #[test]
    fn trunc_sub_basics() {
        let v = builtin("chain:4").unwrap();
        for a in v.elements() {
            assert_eq!(v.trunc_sub(a, v.zero()), a);
            for b in v.elements() {
                assert_eq!(v.trunc_sub(a, b) == v.zero(), v.leq(a, b));
                // adjunction
                for c in v.elements() {
                    assert_eq!(v.leq(v.trunc_sub(a, b), c), v.leq(a, v.add(b, c)));
                }
            }
        }
        // brute force minimum over r with min(4, r + 1) >= 3
        let expected = (0..=4).find(|r| (r + 1).min(4) >= 3).unwrap();
        assert_eq!(v.trunc_sub(3, 1), expected);
        assert_eq!(expected, 2);
    }

    #[test]
    fn dsym_to_zero_is_identity() {
        for name in ["bool2", "chain:5", "lukasiewicz:4", "freelocale:2"] {
            let v = builtin(name).unwrap();
            for a in v.elements() {
                assert_eq!(v.dsym(a, v.zero()), a);
                assert_eq!(v.dsym(v.zero(), a), a);
            }
        }
    }

    #[test]
    fn chain_flags() {
        for n in 1..=8 {
            let v = builtin(&format!("chain:{n}")).unwrap();
            assert!(v.is_co_divisible());
            assert!(v.dualizing_elements().contains(&v.top()));
            assert!(v.has_safa().is_some());
        }
    }

    #[test]
    fn one_element_coquantale_dualizes_trivially() {
        let v = builtin("chain:0").unwrap();
        assert_eq!(v.dualizing_elements(), &[0]);
    }

    #[test]
    fn halver_examples() {
        let b = builtin("bool2").unwrap();
        assert_eq!(b.epsilon_halver(1), Ok(0));
        assert_eq!(b.epsilon_halver(0), Ok(0));
        let c = builtin("chain:8").unwrap();
        // exhaustive: largest δ with min(8, 2δ) ≺ 5
        let oracle = (0..=8usize).filter(|d| (2 * d).min(8) <= 5).max().unwrap();
        assert_eq!(c.epsilon_halver(5), Ok(oracle));
        assert_eq!(oracle, 2);
        assert_eq!(c.epsilon_n_divider(7, 3), Ok(2));
    }

    #[test]
    fn halver_rejects_non_positive() {
        let v = builtin("freelocale:1").unwrap();
        let non_pos: Vec<_> = v.elements().filter(|&e| !v.is_positive(e)).collect();
        for e in non_pos {
            assert!(matches!(v.epsilon_halver(e), Err(CoQuantaleError::NotPositive(_))));
        }
    }

    #[test]
    fn diamond_with_join_co_divisibility() {
        let l = FiniteLattice::from_generators(
            vec!["0".into(), "a".into(), "b".into(), "1".into()],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let add = (0..4).map(|a| (0..4).map(|b| l.join(a, b)).collect()).collect();
        let v = CoQuantale::new("diamond", l, add).unwrap();
        // definition: a ≤ b implies b = a + c for some c
        let oracle = v.elements().all(|a| {
            v.elements()
                .filter(|&b| v.leq(a, b))
                .all(|b| v.elements().any(|c| v.join(a, c) == b))
        });
        assert_eq!(v.is_co_divisible(), oracle);
        // the two atoms meet to 0, so 0 ≺ 0 fails
        assert_eq!(v.has_safa(), None);
        assert!(!v.is_value());
    }
}
