//! Exhaustive (or seeded-sampled) checks of the residuation and value laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coquantale::CoQuantale;
use crate::lattice::{Elem, FiniteLattice};
use crate::report::{scan, Report};

/// How families of elements are drawn for the subset laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    /// Carriers up to this size are scanned over every subset.
    pub exhaustive_limit: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            exhaustive_limit: 6,
            samples: 200,
            seed: 0,
        }
    }
}

impl Sampling {
    pub fn with_seed(seed: u64) -> Self {
        Sampling {
            seed,
            ..Default::default()
        }
    }

    pub fn exhaustive() -> Self {
        Sampling {
            exhaustive_limit: 24,
            ..Default::default()
        }
    }
}

/// The subsets a family law is checked on, and a description for the report.
pub fn subsets(n: usize, sampling: Sampling) -> (Vec<Vec<Elem>>, String) {
    if n <= sampling.exhaustive_limit {
        let all = (0u64..1 << n).map(|m| members(m, n)).collect();
        (all, format!("exhaustive ({} subsets)", 1u64 << n))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        let picks = (0..sampling.samples)
            .map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect())
            .collect();
        (picks, format!("sampled ({} subsets, seed {})", sampling.samples, sampling.seed))
    }
}

fn members(mask: u64, n: usize) -> Vec<Elem> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn set_name(v: &CoQuantale, set: &[Elem]) -> String {
    let names: Vec<&str> = set.iter().map(|&e| v.elem_name(e)).collect();
    format!("{{{}}}", names.join(","))
}

fn pairs(n: usize) -> impl Iterator<Item = (Elem, Elem)> {
    (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)))
}

fn triples(n: usize) -> impl Iterator<Item = (Elem, Elem, Elem)> {
    (0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c))))
}

/// The adjunction laws (1)-(6), the two family laws for `∸`, and the
/// monotonicity/interchange lemma.
pub fn check_residuation_laws(v: &CoQuantale, sampling: Sampling) -> Report {
    let n = v.len();
    let nm = |e: Elem| v.elem_name(e);
    let sub = |a, b| v.trunc_sub(a, b);
    let mut r = Report::new(format!("residuation laws of {}", v.name()));

    let (k, w) = scan(triples(n), |(a, b, c)| {
        (v.leq(sub(a, b), c) != v.leq(a, v.add(b, c)))
            .then(|| format!("a={} b={} c={}", nm(a), nm(b), nm(c)))
    });
    r.check("adjunction a∸b≤c iff a≤b+c", k, w);

    let (k, w) = scan(pairs(n), |(a, b)| {
        (!v.leq(a, v.add(sub(a, b), b))).then(|| format!("a={} b={}", nm(a), nm(b)))
    });
    r.check("a≤(a∸b)+b", k, w);

    let (k, w) = scan(pairs(n), |(a, b)| {
        (!v.leq(sub(v.add(a, b), b), a)).then(|| format!("a={} b={}", nm(a), nm(b)))
    });
    r.check("(a+b)∸b≤a", k, w);

    let (k, w) = scan(pairs(n), |(a, b)| {
        ((sub(a, b) == v.zero()) != v.leq(a, b)).then(|| format!("a={} b={}", nm(a), nm(b)))
    });
    r.check("a∸b=0 iff a≤b", k, w);

    let (k, w) = scan(triples(n), |(a, b, c)| {
        let x = sub(a, v.add(b, c));
        (x != sub(sub(a, b), c) || x != sub(sub(a, c), b))
            .then(|| format!("a={} b={} c={}", nm(a), nm(b), nm(c)))
    });
    r.check("a∸(b+c)=(a∸b)∸c=(a∸c)∸b", k, w);

    let (k, w) = scan(triples(n), |(a, b, c)| {
        (!v.leq(sub(a, c), v.add(sub(a, b), sub(b, c))))
            .then(|| format!("a={} b={} c={}", nm(a), nm(b), nm(c)))
    });
    r.check("a∸c≤(a∸b)+(b∸c)", k, w);

    let (k, w) = scan(triples(n), |(a, b, c)| {
        (v.leq(a, b) && !(v.leq(sub(c, b), sub(c, a)) && v.leq(sub(a, c), sub(b, c))))
            .then(|| format!("a={} b={} c={}", nm(a), nm(b), nm(c)))
    });
    r.check("monotonicity-interchange", k, w);

    let (family, how) = subsets(n, sampling);
    r.fact("family sampling", &how);
    let l = v.lattice();
    let (k, w) = scan(family.iter().flat_map(|s| (0..n).map(move |a| (s, a))), |(s, a)| {
        let lhs = sub(l.subset_join(s.iter().copied()), a);
        let rhs = l.subset_join(s.iter().map(|&b| sub(b, a)));
        (lhs != rhs).then(|| format!("B={} a={}", set_name(v, s), nm(a)))
    });
    r.check("(⋁B)∸a=⋁(b∸a)", k, w);

    let (k, w) = scan(family.iter().flat_map(|s| (0..n).map(move |a| (s, a))), |(s, a)| {
        let lhs = sub(a, l.subset_meet(s.iter().copied()));
        let rhs = l.subset_join(s.iter().map(|&b| sub(a, b)));
        (lhs != rhs).then(|| format!("B={} a={}", set_name(v, s), nm(a)))
    });
    r.check("a∸⋀B=⋁(a∸b)", k, w);

    let (k, w) = scan(family.iter().flat_map(|s| (0..n).map(move |a| (s, a))), |(s, a)| {
        let lhs = v.add(a, l.subset_meet(s.iter().copied()));
        let rhs = l.subset_meet(s.iter().map(|&b| v.add(a, b)));
        (lhs != rhs).then(|| format!("B={} a={}", set_name(v, s), nm(a)))
    });
    r.check("a+⋀B=⋀(a+b)", k, w);
    r
}

/// Laws that hold in value co-quantales: halving, n-division, descent with
/// addition, monotonicity of `+`, interpolation, and the dualizer isometry.
pub fn check_value_laws(v: &CoQuantale, max_divisor: usize) -> Report {
    let n = v.len();
    let nm = |e: Elem| v.elem_name(e);
    let pos = v.positives();
    let mut r = Report::new(format!("value laws of {}", v.name()));
    r.fact("value co-quantale", v.is_value());
    r.fact("positives", set_name(v, &pos));
    r.fact("0 is positive", v.is_positive(v.zero()));

    let (k, w) = scan(pos.iter().copied(), |e| match v.epsilon_halver(e) {
        Ok(d) if v.is_positive(d) && v.co_well_below(v.add(d, d), e) => None,
        Ok(d) => Some(format!("ε={} returned δ={}", nm(e), nm(d))),
        Err(err) => Some(err.to_string()),
    });
    r.check("halver exists", k, w);

    let (k, w) = scan(
        (1..=max_divisor).flat_map(|m| pos.iter().map(move |&e| (m, e))),
        |(m, e)| match v.epsilon_n_divider(e, m) {
            Ok(t) if v.is_positive(t) && v.co_well_below(v.multiple(t, m), e) => None,
            Ok(t) => Some(format!("n={m} ε={} returned θ={}", nm(e), nm(t))),
            Err(err) => Some(format!("n={m}: {err}")),
        },
    );
    r.check(format!("n-divider exists (n≤{max_divisor})"), k, w);

    let l = v.lattice();
    let (k, w) = scan(0..n, |p| {
        (l.subset_meet(pos.iter().map(|&e| v.add(p, e))) != p).then(|| format!("p={}", nm(p)))
    });
    r.check("p=⋀(p+ε)", k, w);

    let (k, w) = scan(triples(n), |(a, b, c)| {
        (v.add(a, v.top()) != v.top() || (v.leq(a, b) && !v.leq(v.add(c, a), v.add(c, b))))
            .then(|| format!("a={} b={} c={}", nm(a), nm(b), nm(c)))
    });
    r.check("monotone addition", k, w);

    let (k, w) = scan(pairs(n), |(q, p)| {
        if !v.co_well_below(q, p) {
            return None;
        }
        let found = pos.iter().any(|&e| {
            (0..n).any(|x| v.co_well_below(q, x) && v.co_well_below(v.add(x, e), p))
        });
        (!found).then(|| format!("q={} p={}", nm(q), nm(p)))
    });
    r.check("interpolation", k, w);

    let (k, w) = scan(
        v.dualizing_elements()
            .iter()
            .flat_map(|&b| pairs(n).map(move |(x, y)| (b, x, y))),
        |(b, x, y)| {
            (v.dsym(x, y) != v.dsym(v.trunc_sub(b, x), v.trunc_sub(b, y)))
                .then(|| format!("b={} x={} y={}", nm(b), nm(x), nm(y)))
        },
    );
    r.check("dualizer isometry", k, w);

    let (k, w) = scan(0..n, |a| (v.dsym(a, v.zero()) != a).then(|| format!("a={}", nm(a))));
    r.check("d(a,0)=a", k, w);
    r
}

/// Lattice-level lemmas: the basic `≺` properties, continuity of `≺` in
/// meets, and density when the lattice is completely distributive.
pub fn check_lattice_laws(l: &FiniteLattice, sampling: Sampling) -> Report {
    let n = l.len();
    let nm = |e: Elem| l.name(e);
    let cwb = |a, b| l.co_well_below(a, b);
    let mut r = Report::new("lattice laws");
    let (k, w) = scan(triples(n), |(x, y, z)| {
        let bad = (cwb(y, x) && !l.leq(y, x))
            || (l.leq(z, y) && cwb(y, x) && !cwb(z, x))
            || (cwb(y, x) && l.leq(x, z) && !cwb(y, z));
        bad.then(|| format!("x={} y={} z={}", nm(x), nm(y), nm(z)))
    });
    r.check("basic ≺ properties", k, w);

    let (family, how) = subsets(n, sampling);
    r.fact("family sampling", how);
    let (k, w) = scan(family.iter().flat_map(|s| (0..n).map(move |x| (s, x))), |(s, x)| {
        let lhs = cwb(l.subset_meet(s.iter().copied()), x);
        let rhs = s.iter().any(|&a| cwb(a, x));
        (lhs != rhs).then(|| {
            let names: Vec<&str> = s.iter().map(|&e| nm(e)).collect();
            format!("A={{{}}} x={}", names.join(","), nm(x))
        })
    });
    r.check("⋀A≺x iff some a≺x", k, w);

    if l.is_completely_distributive() {
        let (k, w) = scan(pairs(n), |(x, y)| {
            (cwb(x, y) && !(0..n).any(|z| cwb(x, z) && cwb(z, y)))
                .then(|| format!("x={} y={}", nm(x), nm(y)))
        });
        r.check("density", k, w);
    }
    r
}
