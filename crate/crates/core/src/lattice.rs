//! Finite complete lattices with cached meet, join and co-well-below tables.
//!
//! Elements are opaque indices `0..n`; user-facing names live in a parallel
//! list. Every table is filled once at validation and the value is immutable
//! afterwards.

use thiserror::Error;

/// An element of a finite carrier, by index.
pub type Elem = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("a lattice needs at least one element")]
    Empty,
    #[error("order table is not {n}x{n}")]
    Shape { n: usize },
    #[error("duplicate element name `{0}`")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("not a partial order: {0}")]
    NotAPartialOrder(OrderViolation),
    #[error("not a lattice: `{x}` and `{y}` have no {missing}")]
    NotALattice {
        x: String,
        y: String,
        missing: &'static str,
    },
    #[error("no global bottom or top element")]
    NoBoundedness,
}

/// Witness for a failed partial-order axiom.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderViolation {
    #[error("`{0}` <= `{0}` does not hold")]
    Reflexivity(String),
    #[error("`{0}` <= `{1}` and `{1}` <= `{0}` but they differ")]
    Antisymmetry(String, String),
    #[error("`{0}` <= `{1}` <= `{2}` but not `{0}` <= `{2}`")]
    Transitivity(String, String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteLattice {
    names: Vec<String>,
    leq: Vec<bool>,
    meet: Vec<Elem>,
    join: Vec<Elem>,
    cwb: Vec<bool>,
    bottom: Elem,
    top: Elem,
}

impl FiniteLattice {
    /// Validates an order table and derives every cached table.
    pub fn new(names: Vec<String>, order: &[Vec<bool>]) -> Result<Self, LatticeError> {
        let n = names.len();
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        if order.len() != n || order.iter().any(|row| row.len() != n) {
            return Err(LatticeError::Shape { n });
        }
        check_unique(&names)?;
        let leq: Vec<bool> = order.iter().flatten().copied().collect();
        Self::from_flat(names, leq)
    }

    /// Builds a lattice from generating pairs `a <= b`; the reflexive-transitive
    /// closure is applied before validation.
    pub fn from_generators(names: Vec<String>, pairs: &[(Elem, Elem)]) -> Result<Self, LatticeError> {
        let n = names.len();
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        check_unique(&names)?;
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(LatticeError::Shape { n });
            }
            leq[a * n + b] = true;
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        Self::from_flat(names, leq)
    }

    /// Builds a lattice whose order is given by a predicate on indices.
    pub fn from_fn(names: Vec<String>, leq: impl Fn(Elem, Elem) -> bool) -> Result<Self, LatticeError> {
        let n = names.len();
        if n == 0 {
            return Err(LatticeError::Empty);
        }
        check_unique(&names)?;
        let table = (0..n * n).map(|k| leq(k / n, k % n)).collect();
        Self::from_flat(names, table)
    }

    /// The chain `0 < 1 < ... < n` with elements named by their rank.
    pub fn chain(n: usize) -> Self {
        let names = (0..=n).map(|i| i.to_string()).collect();
        Self::from_fn(names, |a, b| a <= b).expect("chains are lattices")
    }

    fn from_flat(names: Vec<String>, leq: Vec<bool>) -> Result<Self, LatticeError> {
        let n = names.len();
        let at = |a: Elem, b: Elem| leq[a * n + b];

        if let Some(x) = (0..n).find(|&x| !at(x, x)) {
            return Err(LatticeError::NotAPartialOrder(OrderViolation::Reflexivity(
                names[x].clone(),
            )));
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && at(x, y) && at(y, x) {
                    return Err(LatticeError::NotAPartialOrder(OrderViolation::Antisymmetry(
                        names[x].clone(),
                        names[y].clone(),
                    )));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if !at(x, y) {
                    continue;
                }
                for z in 0..n {
                    if at(y, z) && !at(x, z) {
                        return Err(LatticeError::NotAPartialOrder(OrderViolation::Transitivity(
                            names[x].clone(),
                            names[y].clone(),
                            names[z].clone(),
                        )));
                    }
                }
            }
        }

        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for x in 0..n {
            for y in x..n {
                let glb = greatest(n, |z| at(z, x) && at(z, y), &at).ok_or_else(|| {
                    LatticeError::NotALattice {
                        x: names[x].clone(),
                        y: names[y].clone(),
                        missing: "meet",
                    }
                })?;
                let lub = least(n, |z| at(x, z) && at(y, z), &at).ok_or_else(|| {
                    LatticeError::NotALattice {
                        x: names[x].clone(),
                        y: names[y].clone(),
                        missing: "join",
                    }
                })?;
                meet[x * n + y] = glb;
                meet[y * n + x] = glb;
                join[x * n + y] = lub;
                join[y * n + x] = lub;
            }
        }

        let bottom = (0..n).find(|&b| (0..n).all(|e| at(b, e)));
        let top = (0..n).find(|&t| (0..n).all(|e| at(e, t)));
        let (Some(bottom), Some(top)) = (bottom, top) else {
            return Err(LatticeError::NoBoundedness);
        };

        let mut lattice = FiniteLattice {
            names,
            leq,
            meet,
            join,
            cwb: Vec::new(),
            bottom,
            top,
        };
        lattice.cwb = lattice.compute_cwb();
        Ok(lattice)
    }

    // x ≺ y  iff  ⋀{a : a ≰ y} ≰ x
    fn compute_cwb(&self) -> Vec<bool> {
        let n = self.len();
        let mut cwb = vec![false; n * n];
        for y in 0..n {
            let m = self.subset_meet((0..n).filter(|&a| !self.leq(a, y)));
            for x in 0..n {
                cwb[x * n + y] = !self.leq(m, x);
            }
        }
        cwb
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e]
    }

    pub fn index_of(&self, name: &str) -> Option<Elem> {
        self.names.iter().position(|n| n == name)
    }

    /// Bottom, written `0`.
    pub fn bottom(&self) -> Elem {
        self.bottom
    }

    /// Top, written `1`.
    pub fn top(&self) -> Elem {
        self.top
    }

    #[inline]
    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.leq[a * self.len() + b]
    }

    #[inline]
    pub fn lt(&self, a: Elem, b: Elem) -> bool {
        a != b && self.leq(a, b)
    }

    #[inline]
    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        self.meet[a * self.len() + b]
    }

    #[inline]
    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        self.join[a * self.len() + b]
    }

    /// Greatest lower bound of a set; the empty meet is `top`.
    pub fn subset_meet<I: IntoIterator<Item = Elem>>(&self, set: I) -> Elem {
        set.into_iter().fold(self.top, |acc, e| self.meet(acc, e))
    }

    /// Least upper bound of a set; the empty join is `bottom`.
    pub fn subset_join<I: IntoIterator<Item = Elem>>(&self, set: I) -> Elem {
        set.into_iter().fold(self.bottom, |acc, e| self.join(acc, e))
    }

    /// `x ≺ y`: every subset whose meet lies below `x` has a member below `y`.
    #[inline]
    pub fn co_well_below(&self, x: Elem, y: Elem) -> bool {
        self.cwb[x * self.len() + y]
    }

    /// `a = ⋀{b : a ≺ b}` for every `a`.
    pub fn is_completely_distributive(&self) -> bool {
        self.elements().all(|a| {
            let approx = self.subset_meet(self.elements().filter(|&b| self.co_well_below(a, b)));
            approx == a
        })
    }

    /// `{ε : 0 ≺ ε}`, in index order.
    pub fn positives(&self) -> Vec<Elem> {
        self.elements()
            .filter(|&e| self.co_well_below(self.bottom, e))
            .collect()
    }

    pub fn is_positive(&self, e: Elem) -> bool {
        self.co_well_below(self.bottom, e)
    }

    pub fn is_value_lattice(&self) -> bool {
        if !self.is_completely_distributive() || !self.co_well_below(self.bottom, self.top) {
            return false;
        }
        let pos = self.positives();
        pos.iter()
            .all(|&a| pos.iter().all(|&b| self.is_positive(self.meet(a, b))))
    }

    pub fn is_chain(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.leq(a, b) || self.leq(b, a)))
    }

    /// The maximal elements of `set` under the lattice order, in index order.
    pub fn maximal_in(&self, set: &[Elem]) -> Vec<Elem> {
        set.iter()
            .copied()
            .filter(|&a| !set.iter().any(|&b| self.lt(a, b)))
            .collect()
    }
}

fn check_unique(names: &[String]) -> Result<(), LatticeError> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(LatticeError::DuplicateElement(a.clone()));
        }
    }
    Ok(())
}

fn greatest(n: usize, member: impl Fn(Elem) -> bool, leq: &impl Fn(Elem, Elem) -> bool) -> Option<Elem> {
    let set: Vec<Elem> = (0..n).filter(|&z| member(z)).collect();
    set.iter().copied().find(|&g| set.iter().all(|&z| leq(z, g)))
}

fn least(n: usize, member: impl Fn(Elem) -> bool, leq: &impl Fn(Elem, Elem) -> bool) -> Option<Elem> {
    let set: Vec<Elem> = (0..n).filter(|&z| member(z)).collect();
    set.iter().copied().find(|&l| set.iter().all(|&z| leq(l, z)))
}
