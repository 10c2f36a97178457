//! Finite continuity spaces, their induced topologies, and the topology and
//! preorder dictionaries.

use std::sync::Arc;

use thiserror::Error;

use crate::builtins;
use crate::coquantale::CoQuantale;
use crate::lattice::Elem;
use crate::report::{scan, Report};

/// A set of points as a bitmask over point indices.
pub type PointSet = u64;

/// Points in a space; set-valued operations need at most `MAX_SET_POINTS`.
pub const MAX_POINTS: usize = 4096;
pub const MAX_SET_POINTS: usize = 64;
pub const MAX_TOPOLOGY_POINTS: usize = 16;
pub const MAX_THEOREM_POINTS: usize = 8;
pub const MAX_FLAGG_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("a space needs at least one point")]
    Empty,
    #[error("distance table is not {n}x{n}")]
    Shape { n: usize },
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("distance value out of range at ({0}, {1})")]
    BadValue(String, String),
    #[error("reflexivity fails: d({0},{0}) is not 0")]
    Reflexivity(String),
    #[error("transitivity fails: d({x},{y}) is not below d({x},{z}) + d({z},{y})")]
    Transitivity { x: String, y: String, z: String },
    #[error("`{0}` is not a positive element")]
    NotPositive(String),
    #[error("{what} exceeds the limit of {limit} points")]
    SizeLimit { what: &'static str, limit: usize },
    #[error("spaces are over different co-quantales")]
    DifferentCarriers,
    #[error("relation is not a preorder: {0}")]
    NotAPreorder(String),
    #[error("not a topology: {0}")]
    NotATopology(String),
}

/// Members of a point set, in index order.
pub fn members(set: PointSet) -> impl Iterator<Item = usize> {
    (0..MAX_SET_POINTS).filter(move |i| set >> i & 1 == 1)
}

fn full_set(n: usize) -> PointSet {
    assert!(n <= MAX_SET_POINTS, "point sets hold at most {MAX_SET_POINTS} points");
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn set_name(names: &[String], set: PointSet) -> String {
    let inner: Vec<&str> = members(set).map(|i| names[i].as_str()).collect();
    format!("{{{}}}", inner.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    points: Vec<String>,
    opens: Vec<PointSet>,
}

impl Topology {
    /// Validates an explicit family of opens.
    pub fn new(points: Vec<String>, opens: impl IntoIterator<Item = PointSet>) -> Result<Self, SpaceError> {
        let n = points.len();
        if n > MAX_SET_POINTS {
            return Err(SpaceError::SizeLimit {
                what: "topology",
                limit: MAX_SET_POINTS,
            });
        }
        let full = full_set(n);
        let mut opens: Vec<PointSet> = opens.into_iter().collect();
        opens.sort_unstable();
        opens.dedup();
        if let Some(&u) = opens.iter().find(|&&u| u & !full != 0) {
            return Err(SpaceError::NotATopology(format!("open set {u:#b} has unknown points")));
        }
        if opens.binary_search(&0).is_err() {
            return Err(SpaceError::NotATopology("missing the empty set".into()));
        }
        if opens.binary_search(&full).is_err() {
            return Err(SpaceError::NotATopology("missing the whole space".into()));
        }
        for &u in &opens {
            for &w in &opens {
                for (op, s) in [("intersection", u & w), ("union", u | w)] {
                    if opens.binary_search(&s).is_err() {
                        return Err(SpaceError::NotATopology(format!(
                            "{op} of {} and {} is not open",
                            set_name(&points, u),
                            set_name(&points, w)
                        )));
                    }
                }
            }
        }
        Ok(Topology { points, opens })
    }

    /// Every topology on `n` unnamed points (named `p0`, `p1`, ...).
    pub fn all_on(n: usize) -> Vec<Topology> {
        assert!(n <= 4, "enumeration is only tractable for tiny carriers");
        let points: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let full = full_set(n);
        let inner: Vec<PointSet> = (1..full).collect();
        (0u64..1 << inner.len())
            .filter_map(|mask| {
                let opens = members(mask).map(|i| inner[i]).chain([0, full]);
                Topology::new(points.clone(), opens).ok()
            })
            .collect()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn opens(&self) -> &[PointSet] {
        &self.opens
    }

    pub fn full(&self) -> PointSet {
        full_set(self.len())
    }

    pub fn is_open(&self, set: PointSet) -> bool {
        self.opens.binary_search(&set).is_ok()
    }

    pub fn is_closed(&self, set: PointSet) -> bool {
        self.is_open(self.full() & !set)
    }

    /// Largest open subset.
    pub fn interior(&self, set: PointSet) -> PointSet {
        self.opens
            .iter()
            .filter(|&&u| u & !set == 0)
            .fold(0, |acc, &u| acc | u)
    }

    /// Smallest closed superset.
    pub fn closure(&self, set: PointSet) -> PointSet {
        self.full() & !self.interior(self.full() & !set)
    }

    /// Smallest open set containing `x`.
    pub fn minimal_neighborhood(&self, x: usize) -> PointSet {
        self.opens
            .iter()
            .filter(|&&u| u >> x & 1 == 1)
            .fold(self.full(), |acc, &u| acc & u)
    }

    pub fn set_name(&self, set: PointSet) -> String {
        set_name(&self.points, set)
    }
}

/// A finite set with a `V`-valued distance satisfying reflexivity and the
/// triangle law. Symmetry is not required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuitySpace {
    v: Arc<CoQuantale>,
    points: Vec<String>,
    dist: Vec<Elem>,
}

impl ContinuitySpace {
    pub fn new(v: Arc<CoQuantale>, points: Vec<String>, dist: Vec<Vec<Elem>>) -> Result<Self, SpaceError> {
        let n = points.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if n > MAX_POINTS {
            return Err(SpaceError::SizeLimit {
                what: "space",
                limit: MAX_POINTS,
            });
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(SpaceError::DuplicatePoint(p.clone()));
            }
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(SpaceError::Shape { n });
        }
        for (x, row) in dist.iter().enumerate() {
            if let Some(y) = row.iter().position(|&e| e >= v.len()) {
                return Err(SpaceError::BadValue(points[x].clone(), points[y].clone()));
            }
        }
        let space = ContinuitySpace {
            v,
            points,
            dist: dist.into_iter().flatten().collect(),
        };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        let n = self.len();
        let nm = |i: usize| self.points[i].clone();
        for x in 0..n {
            if self.d(x, x) != self.v.zero() {
                return Err(SpaceError::Reflexivity(nm(x)));
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if !self.v.leq(self.d(x, y), self.v.add(self.d(x, z), self.d(z, y))) {
                        return Err(SpaceError::Transitivity {
                            x: nm(x),
                            y: nm(y),
                            z: nm(z),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The largest continuity distance below `dist`: the diagonal is forced
    /// to 0 and paths are shortened with `⋀` and `+`.
    pub fn path_closure(v: Arc<CoQuantale>, points: Vec<String>, mut dist: Vec<Vec<Elem>>) -> Result<Self, SpaceError> {
        let n = points.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(SpaceError::Shape { n });
        }
        for (x, row) in dist.iter_mut().enumerate() {
            row[x] = v.zero();
        }
        for z in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let via = v.add(dist[x][z], dist[z][y]);
                    dist[x][y] = v.meet(dist[x][y], via);
                }
            }
        }
        ContinuitySpace::new(v, points, dist)
    }

    /// `(V, d^s_V)`, points named after the elements.
    pub fn value_space(v: Arc<CoQuantale>) -> Self {
        let names = v.elements().map(|e| v.elem_name(e).to_string()).collect();
        let dist = v
            .elements()
            .map(|a| v.elements().map(|b| v.dsym(a, b)).collect())
            .collect();
        ContinuitySpace::new(v, names, dist).expect("the symmetric value distance is a continuity distance")
    }

    /// The binary relation `d(x,y) = 0` as a two-valued space.
    pub fn from_preorder(points: Vec<String>, rel: &[Vec<bool>]) -> Result<Self, SpaceError> {
        let n = points.len();
        if rel.len() != n || rel.iter().any(|r| r.len() != n) {
            return Err(SpaceError::Shape { n });
        }
        for x in 0..n {
            if !rel[x][x] {
                return Err(SpaceError::NotAPreorder(format!("({0},{0}) missing", points[x])));
            }
            for y in 0..n {
                for z in 0..n {
                    if rel[x][y] && rel[y][z] && !rel[x][z] {
                        return Err(SpaceError::NotAPreorder(format!(
                            "({},{}) and ({},{}) but not ({},{})",
                            points[x], points[y], points[y], points[z], points[x], points[z]
                        )));
                    }
                }
            }
        }
        let v = Arc::new(builtins::bool2());
        let (zero, top) = (v.zero(), v.top());
        let dist = rel
            .iter()
            .map(|r| r.iter().map(|&b| if b { zero } else { top }).collect())
            .collect();
        ContinuitySpace::new(v, points, dist)
    }

    /// The relation `{(x,y) : d(x,y) = 0}`.
    pub fn to_preorder(&self) -> Vec<Vec<bool>> {
        (0..self.len())
            .map(|x| (0..self.len()).map(|y| self.d(x, y) == self.v.zero()).collect())
            .collect()
    }

    pub fn v(&self) -> &CoQuantale {
        &self.v
    }

    pub fn v_arc(&self) -> &Arc<CoQuantale> {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_name(&self, x: usize) -> &str {
        &self.points[x]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn full(&self) -> PointSet {
        full_set(self.len())
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> Elem {
        self.dist[x * self.len() + y]
    }

    pub fn dist_rows(&self) -> Vec<Vec<Elem>> {
        self.dist.chunks(self.len()).map(|r| r.to_vec()).collect()
    }

    pub fn set_name(&self, set: PointSet) -> String {
        set_name(&self.points, set)
    }

    fn derived(&self, f: impl Fn(usize, usize) -> Elem) -> Self {
        let n = self.len();
        let dist = (0..n).map(|x| (0..n).map(|y| f(x, y)).collect()).collect();
        ContinuitySpace::new(self.v.clone(), self.points.clone(), dist).expect("derived distances stay valid")
    }

    /// `d⋆(x,y) = d(y,x)`.
    pub fn dual(&self) -> Self {
        self.derived(|x, y| self.d(y, x))
    }

    /// `d^s = d ∨ d⋆`.
    pub fn symmetric(&self) -> Self {
        self.derived(|x, y| self.v.join(self.d(x, y), self.d(y, x)))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|x| (0..self.len()).all(|y| self.d(x, y) == self.d(y, x)))
    }

    /// Pairs `(x,y)` with the componentwise join of distances.
    pub fn product(&self, other: &ContinuitySpace) -> Result<Self, SpaceError> {
        if self.v != other.v {
            return Err(SpaceError::DifferentCarriers);
        }
        let (n, m) = (self.len(), other.len());
        if n * m > MAX_POINTS {
            return Err(SpaceError::SizeLimit {
                what: "product space",
                limit: MAX_POINTS,
            });
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..m).map(move |y| (x, y))).collect();
        let names = pairs
            .iter()
            .map(|&(x, y)| format!("({},{})", self.points[x], other.points[y]))
            .collect();
        let dist = pairs
            .iter()
            .map(|&(x1, y1)| {
                pairs
                    .iter()
                    .map(|&(x2, y2)| self.v.join(self.d(x1, x2), other.d(y1, y2)))
                    .collect()
            })
            .collect();
        ContinuitySpace::new(self.v.clone(), names, dist)
    }

    /// `B_ε(x) = {y : d(x,y) ≺ ε}`.
    pub fn disc(&self, x: usize, eps: Elem) -> Result<PointSet, SpaceError> {
        if !self.v.is_positive(eps) {
            return Err(SpaceError::NotPositive(self.v.elem_name(eps).to_string()));
        }
        Ok(self.points_where(|y| self.v.co_well_below(self.d(x, y), eps)))
    }

    /// `C_ε(x) = {y : d(x,y) ≤ ε}`.
    pub fn closed_disc(&self, x: usize, eps: Elem) -> PointSet {
        self.points_where(|y| self.v.leq(self.d(x, y), eps))
    }

    fn points_where(&self, pred: impl Fn(usize) -> bool) -> PointSet {
        assert!(self.len() <= MAX_SET_POINTS, "point sets hold at most {MAX_SET_POINTS} points");
        (0..self.len()).filter(|&y| pred(y)).fold(0, |acc, y| acc | 1 << y)
    }

    /// All `U` such that every `x ∈ U` has some disc inside `U`.
    pub fn induced_topology(&self) -> Result<Topology, SpaceError> {
        let n = self.len();
        if n > MAX_TOPOLOGY_POINTS {
            return Err(SpaceError::SizeLimit {
                what: "induced topology",
                limit: MAX_TOPOLOGY_POINTS,
            });
        }
        let pos = self.v.positives();
        let discs: Vec<Vec<PointSet>> = (0..n)
            .map(|x| {
                let mut ds: Vec<PointSet> = pos.iter().map(|&e| self.disc(x, e).expect("positive")).collect();
                ds.sort_unstable();
                ds.dedup();
                ds
            })
            .collect();
        let opens = (0..=self.full()).filter(|&u| members(u).all(|x| discs[x].iter().any(|&b| b & !u == 0)));
        Topology::new(self.points.clone(), opens)
    }

    /// `d(x,A) = ⋀{d(x,a) : a ∈ A}`; the empty set is at distance top.
    pub fn dist_to_set(&self, x: usize, set: PointSet) -> Elem {
        self.v.lattice().subset_meet(members(set).map(|a| self.d(x, a)))
    }

    /// `{y : d(y,A) = 0}`.
    pub fn closure(&self, set: PointSet) -> PointSet {
        self.points_where(|y| self.dist_to_set(y, set) == self.v.zero())
    }

    /// `⋁{d(a,b) : a,b ∈ A}`.
    pub fn diameter(&self, set: PointSet) -> Elem {
        self.v
            .lattice()
            .subset_join(members(set).flat_map(|a| members(set).map(move |b| self.d(a, b))))
    }

    pub fn is_t0(&self) -> bool {
        let z = self.v.zero();
        (0..self.len()).all(|x| (0..self.len()).all(|y| x == y || self.d(x, y) != z || self.d(y, x) != z))
    }

    /// Every topology on a finite carrier is compact, so this is `is_t0`.
    pub fn is_v_domain(&self) -> bool {
        self.is_t0()
    }

    /// Instantiates the closed-set characterisation, closedness of dual
    /// closed discs, the closed-disc neighbourhood base, the decomposition
    /// of the symmetric topology, and both separation properties.
    pub fn check_topology_theorems(&self) -> Result<Report, SpaceError> {
        let n = self.len();
        if n > MAX_THEOREM_POINTS {
            return Err(SpaceError::SizeLimit {
                what: "topology theorem check",
                limit: MAX_THEOREM_POINTS,
            });
        }
        let v = &self.v;
        let tau = self.induced_topology()?;
        let dual = self.dual();
        let tau_star = dual.induced_topology()?;
        let tau_sym = self.symmetric().induced_topology()?;
        let pos = v.positives();
        let full = self.full();
        let sets = || 0..=full;
        let points_eps = || (0..n).flat_map(|x| pos.iter().map(move |&e| (x, e)));
        let en = |e: Elem| v.elem_name(e).to_string();

        let mut r = Report::new("topology theorems");
        r.fact("points", n);
        r.fact("opens", tau.opens().len());
        r.fact("0 is positive", v.is_positive(v.zero()));
        r.fact("T0", self.is_t0());
        r.fact("V-domain", format!("{} (finite, so compact; equals T0)", self.is_v_domain()));

        let (k, w) = scan(points_eps(), |(x, e)| {
            let b = self.disc(x, e).expect("positive");
            (!tau.is_open(b)).then(|| format!("B_{}({})", en(e), self.points[x]))
        });
        r.check("discs are open", k, w);

        let (k, w) = scan(sets(), |a| {
            let closed = tau.is_closed(a);
            let by_distance = (0..n).all(|x| self.dist_to_set(x, a) != v.zero() || a >> x & 1 == 1);
            (closed != by_distance).then(|| format!("A={}", self.set_name(a)))
        });
        r.check("closed iff d(x,A)=0 implies x in A", k, w);

        let (k, w) = scan(sets(), |a| {
            (self.closure(a) != tau.closure(a)).then(|| format!("A={}", self.set_name(a)))
        });
        r.check("closure is {y : d(y,A)=0}", k, w);

        let (k, w) = scan(points_eps(), |(x, e)| {
            let c = dual.closed_disc(x, e);
            (!tau.is_closed(c)).then(|| format!("C*_{}({})", en(e), self.points[x]))
        });
        r.check("dual closed discs are closed", k, w);

        let (k, w) = scan(0..n, |x| {
            for &e in &pos {
                let c = self.closed_disc(x, e);
                if tau.interior(c) >> x & 1 == 0 {
                    return Some(format!("C_{}({}) is not a neighbourhood", en(e), self.points[x]));
                }
            }
            tau.opens()
                .iter()
                .filter(|&&u| u >> x & 1 == 1)
                .find(|&&u| !pos.iter().any(|&e| self.closed_disc(x, e) & !u == 0))
                .map(|&u| format!("no closed disc at {} inside {}", self.points[x], self.set_name(u)))
        });
        r.check("closed discs form a neighbourhood base", k, w);

        let mut meets: Vec<PointSet> = tau
            .opens()
            .iter()
            .flat_map(|&u| tau_star.opens().iter().map(move |&w| u & w))
            .collect();
        meets.sort_unstable();
        meets.dedup();
        let (k, w) = scan(meets.iter(), |&u| {
            (!tau_sym.is_open(u)).then(|| format!("{} is an intersection but not symmetric-open", self.set_name(u)))
        });
        r.check("intersections V∩W are symmetric-open", k, w);
        let (k, w) = scan(tau_sym.opens().iter(), |&u| {
            let union = meets.iter().filter(|&&m| m & !u == 0).fold(0, |acc, &m| acc | m);
            (union != u).then(|| format!("{} is no union of intersections", self.set_name(u)))
        });
        r.check("symmetric opens are unions of intersections", k, w);
        // the single-intersection form is not a theorem; record where it fails
        let single = tau_sym.opens().iter().find(|u| meets.binary_search(u).is_err());
        r.fact(
            "every symmetric open is one intersection",
            match single {
                None => "yes".to_string(),
                Some(&u) => format!("no ({} needs a union)", self.set_name(u)),
            },
        );

        let (k, w) = scan((0..n).flat_map(|x| (0..n).map(move |y| (x, y))), |(x, y)| {
            if tau.closure(1 << y) >> x & 1 == 1 {
                return None;
            }
            let separated = tau.opens().iter().filter(|&&u| u >> x & 1 == 1).any(|&u| {
                tau_star
                    .opens()
                    .iter()
                    .any(|&w| w >> y & 1 == 1 && u & w == 0)
            });
            (!separated).then(|| format!("x={} y={}", self.points[x], self.points[y]))
        });
        r.check("pseudo-Hausdorff", k, w);

        let star_closed: Vec<PointSet> = sets().filter(|&c| tau_star.is_closed(c)).collect();
        let (k, w) = scan(
            tau.opens()
                .iter()
                .flat_map(|&a| members(a).map(move |x| (a, x))),
            |(a, x)| {
                let ok = tau.opens().iter().filter(|&&u| u >> x & 1 == 1).any(|&u| {
                    star_closed
                        .iter()
                        .any(|&c| u & !c == 0 && c & !a == 0)
                });
                (!ok).then(|| format!("x={} A={}", self.points[x], self.set_name(a)))
            },
        );
        r.check("regularity", k, w);

        let (k, w) = scan(sets().flat_map(|a| sets().map(move |b| (a, b))), |(a, b)| {
            let ca = self.closure(a);
            let bad = a & !ca != 0 || self.closure(ca) != ca || self.closure(a | b) != ca | self.closure(b);
            bad.then(|| format!("A={} B={}", self.set_name(a), self.set_name(b)))
        });
        r.check("closure is a Kuratowski closure", k, w);
        Ok(r)
    }
}

/// A topology turned into a space over a free locale, together with the
/// base opens that name the free generators (`a`, `b`, ... in order).
#[derive(Debug, Clone)]
pub struct FlaggSpace {
    pub space: ContinuitySpace,
    pub base: Vec<PointSet>,
}

/// `d(a,b)` is the family of sets `A` of base opens such that every `U ∈ A`
/// containing `a` also contains `b`. The base is the minimal neighbourhoods
/// of the points, which generate the topology.
pub fn space_from_topology(tau: &Topology) -> Result<FlaggSpace, SpaceError> {
    let n = tau.len();
    if n > MAX_FLAGG_POINTS {
        return Err(SpaceError::SizeLimit {
            what: "space from topology",
            limit: MAX_FLAGG_POINTS,
        });
    }
    let mut base: Vec<PointSet> = Vec::new();
    for x in 0..n {
        let u = tau.minimal_neighborhood(x);
        if !base.contains(&u) {
            base.push(u);
        }
    }
    let k = base.len();
    let v = Arc::new(builtins::free_locale(k));
    let subsets = 1usize << k;
    let dist = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    // bit i of `keep`: the i-th base open respects a ⇒ b
                    let keep = (0..k)
                        .filter(|&i| base[i] >> a & 1 == 0 || base[i] >> b & 1 == 1)
                        .fold(0usize, |acc, i| acc | 1 << i);
                    let family = (0..subsets as u64)
                        .filter(|&s| s as usize & !keep == 0)
                        .fold(0u64, |acc, s| acc | 1 << s);
                    v.index_of(&builtins::family_name(family, subsets))
                        .expect("principal down-sets are free-locale elements")
                })
                .collect()
        })
        .collect();
    let space = ContinuitySpace::new(v, tau.points().to_vec(), dist)?;
    Ok(FlaggSpace { space, base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{bool2, builtin, chain};

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    /// p, q with d(p,q)=0 and d(q,p)=1 over bool2.
    fn sierpinski() -> ContinuitySpace {
        ContinuitySpace::new(Arc::new(bool2()), names(&["p", "q"]), vec![vec![0, 0], vec![1, 0]]).unwrap()
    }

    #[test]
    fn validation_examples() {
        let v = Arc::new(bool2());
        assert!(ContinuitySpace::new(v.clone(), names(&["p"]), vec![vec![0]]).is_ok());
        let err = ContinuitySpace::new(
            v.clone(),
            names(&["p", "q", "r"]),
            vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]],
        )
        .unwrap_err();
        assert_eq!(
            err,
            SpaceError::Transitivity {
                x: "p".into(),
                y: "q".into(),
                z: "r".into()
            }
        );
        assert_eq!(
            ContinuitySpace::new(v, names(&["p"]), vec![vec![1]]).unwrap_err(),
            SpaceError::Reflexivity("p".into())
        );
    }

    #[test]
    fn constructions() {
        let s = sierpinski();
        assert_eq!(s.dual().d(0, 1), s.d(1, 0));
        assert_eq!(s.symmetric().symmetric(), s.symmetric());
        let one = ContinuitySpace::new(s.v_arc().clone(), names(&["x"]), vec![vec![0]]).unwrap();
        let p = one.product(&one).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.d(0, 0), 0);
        assert_eq!(s.product(&s).unwrap().len(), 4);
    }

    #[test]
    fn discs_and_closures() {
        let s = sierpinski();
        assert_eq!(s.disc(1, 0).unwrap(), 0b10);
        assert_eq!(s.closed_disc(0, 1), 0b11);
        assert_eq!(s.closure(0b10), 0b11);
        assert_eq!(s.closure(0), 0);
        assert_eq!(s.dist_to_set(0, 0), s.v().top());
        assert!(s.is_t0());
        let diamond = crate::lattice::FiniteLattice::from_generators(
            names(&["0", "a", "b", "1"]),
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let add = (0..4).map(|a| (0..4).map(|b| diamond.join(a, b)).collect()).collect();
        let v = Arc::new(CoQuantale::new("diamond", diamond, add).unwrap());
        let one = ContinuitySpace::new(v, names(&["x"]), vec![vec![0]]).unwrap();
        assert_eq!(one.disc(0, 0), Err(SpaceError::NotPositive("0".into())));
    }

    #[test]
    fn induced_topologies() {
        let s = sierpinski();
        assert_eq!(s.induced_topology().unwrap().opens(), &[0, 0b10, 0b11]);
        let v = Arc::new(bool2());
        let zero = ContinuitySpace::new(v.clone(), names(&["a", "b"]), vec![vec![0; 2]; 2]).unwrap();
        assert_eq!(zero.induced_topology().unwrap().opens(), &[0, 0b11]);
        assert!(!zero.is_t0());
        let disc = ContinuitySpace::new(v, names(&["a", "b"]), vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(disc.induced_topology().unwrap().opens().len(), 4);
    }

    #[test]
    fn diameter_is_monotone() {
        let s = ContinuitySpace::value_space(Arc::new(builtin("chain:3").unwrap()));
        assert_eq!(s.diameter(0), s.v().zero());
        for a in 0..=s.full() {
            for b in 0..=s.full() {
                if a & !b == 0 {
                    assert!(s.v().leq(s.diameter(a), s.diameter(b)));
                }
            }
        }
    }

    #[test]
    fn theorems_hold_on_small_spaces() {
        let r = sierpinski().check_topology_theorems().unwrap();
        assert!(r.passed(), "{}", r.to_text());
        let one = ContinuitySpace::new(Arc::new(bool2()), names(&["x"]), vec![vec![0]]).unwrap();
        assert!(one.check_topology_theorems().unwrap().passed());
        let v = ContinuitySpace::value_space(Arc::new(builtin("lukasiewicz:3").unwrap()));
        assert!(v.check_topology_theorems().unwrap().passed());
    }

    #[test]
    fn topology_counts() {
        // labelled topologies on 0, 1, 2, 3 points
        let counts: Vec<usize> = (0..=3).map(|n| Topology::all_on(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 29]);
    }

    #[test]
    fn flagg_round_trip() {
        for n in 1..=3 {
            for tau in Topology::all_on(n) {
                let f = space_from_topology(&tau).unwrap();
                assert_eq!(f.space.induced_topology().unwrap(), tau);
            }
        }
    }

    #[test]
    fn flagg_indiscrete_has_bottom_distances() {
        let tau = Topology::new(names(&["a", "b"]), [0, 0b11]).unwrap();
        let f = space_from_topology(&tau).unwrap();
        let v = f.space.v();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(f.space.d(x, y), v.zero());
            }
        }
    }

    #[test]
    fn preorder_round_trip() {
        let rel = vec![
            vec![true, true, true],
            vec![false, true, true],
            vec![false, false, true],
        ];
        let s = ContinuitySpace::from_preorder(names(&["a", "b", "c"]), &rel).unwrap();
        assert_eq!(s.to_preorder(), rel);
        let bad = vec![vec![true, true, false], vec![false, true, true], vec![false, false, true]];
        assert!(matches!(
            ContinuitySpace::from_preorder(names(&["a", "b", "c"]), &bad),
            Err(SpaceError::NotAPreorder(_))
        ));
    }

    #[test]
    fn path_closure_repairs_the_triangle() {
        let v = Arc::new(chain(3));
        let s = ContinuitySpace::path_closure(
            v,
            names(&["a", "b", "c"]),
            vec![vec![2, 1, 3], vec![3, 0, 1], vec![3, 3, 0]],
        )
        .unwrap();
        assert_eq!(s.d(0, 0), 0);
        assert_eq!(s.d(0, 2), 2);
    }

    #[test]
    fn symmetric_opens_can_need_unions() {
        // {p1,p3} is symmetric-open, but every open and every dual open
        // holding both points also holds p0
        let v = Arc::new(bool2());
        let dist = vec![vec![0, 1, 1, 0], vec![0, 0, 1, 0], vec![1, 1, 0, 1], vec![1, 1, 1, 0]];
        let s = ContinuitySpace::new(v, names(&["p0", "p1", "p2", "p3"]), dist).unwrap();
        let r = s.check_topology_theorems().unwrap();
        assert!(r.passed(), "{}", r.to_text());
        let single = r.facts.iter().find(|(k, _)| k == "every symmetric open is one intersection").unwrap();
        assert_eq!(single.1, "no ({p1,p3} needs a union)");
    }
}
