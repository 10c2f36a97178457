//! Built-in co-quantales: `bool2`, `chain:n`, `lukasiewicz:n`, `freelocale:k`.

use crate::coquantale::{CoQuantale, CoQuantaleError};
use crate::lattice::FiniteLattice;

pub const MAX_CHAIN: usize = 64;
pub const MAX_FREELOCALE: usize = 3;

/// Parses a builtin spec and constructs the (validated) co-quantale.
pub fn builtin(spec: &str) -> Result<CoQuantale, CoQuantaleError> {
    let unknown = || CoQuantaleError::UnknownBuiltin(spec.to_string());
    let too_big = || CoQuantaleError::SizeLimit(spec.to_string());
    if spec == "bool2" {
        return Ok(bool2());
    }
    let (kind, arg) = spec.split_once(':').ok_or_else(unknown)?;
    let n: usize = arg.parse().map_err(|_| unknown())?;
    match kind {
        "chain" if n <= MAX_CHAIN => Ok(chain(n)),
        "lukasiewicz" if n <= MAX_CHAIN => Ok(lukasiewicz(n)),
        "freelocale" if n <= MAX_FREELOCALE => Ok(free_locale(n)),
        "chain" | "lukasiewicz" | "freelocale" => Err(too_big()),
        _ => Err(unknown()),
    }
}

/// `({0,1}, ≤, ∨)`.
pub fn bool2() -> CoQuantale {
    let l = FiniteLattice::chain(1);
    let add = (0..2).map(|a| (0..2).map(|b| a.max(b)).collect()).collect();
    CoQuantale::new("bool2", l, add).expect("bool2 is a co-quantale")
}

/// Integers `0..=n` with truncated addition `min(n, a + b)`.
pub fn chain(n: usize) -> CoQuantale {
    let l = FiniteLattice::chain(n);
    let add = (0..=n)
        .map(|a| (0..=n).map(|b| (a + b).min(n)).collect())
        .collect();
    CoQuantale::new(format!("chain:{n}"), l, add).expect("truncated chains are co-quantales")
}

/// Levels `0..=n` standing for `k/n` in the reversed order, so level `n` is
/// the lattice bottom; `j + k = max(0, j + k - n)`.
///
/// Index `i` holds level `n - i`, which keeps the bottom at index 0.
pub fn lukasiewicz(n: usize) -> CoQuantale {
    let level = |i: usize| n - i;
    let index = |lv: usize| n - lv;
    let names = (0..=n).map(|i| level(i).to_string()).collect();
    let l = FiniteLattice::from_fn(names, |a, b| a <= b).expect("reversed chain");
    let add = (0..=n)
        .map(|a| {
            (0..=n)
                .map(|b| index((level(a) + level(b)).saturating_sub(n)))
                .collect()
        })
        .collect();
    CoQuantale::new(format!("lukasiewicz:{n}"), l, add).expect("Łukasiewicz chains are co-quantales")
}

/// Down-closed families of subsets of a `k`-element set, ordered by `⊇`,
/// with `+ := ∩`. Subsets are bitmasks over the letters `a, b, c`.
pub fn free_locale(k: usize) -> CoQuantale {
    let subsets = 1usize << k;
    let families: Vec<u64> = (0u64..1 << subsets)
        .filter(|&fam| is_down_closed(fam, subsets))
        .collect();
    let names = families.iter().map(|&f| family_name(f, subsets)).collect();
    let l = FiniteLattice::from_fn(names, |a, b| families[a] & families[b] == families[b])
        .expect("down-sets under reverse inclusion form a lattice");
    let idx = |fam: u64| families.iter().position(|&f| f == fam).expect("closed under ∩");
    let add = families
        .iter()
        .map(|&p| families.iter().map(|&q| idx(p & q)).collect())
        .collect();
    CoQuantale::new(format!("freelocale:{k}"), l, add).expect("free locales are co-quantales")
}

/// True when every subset of a member (bit `s` of `fam`) is again a member.
pub(crate) fn is_down_closed(fam: u64, subsets: usize) -> bool {
    (0..subsets).filter(|s| fam >> s & 1 == 1).all(|s| {
        (0..subsets)
            .filter(|t| t & s == *t)
            .all(|t| fam >> t & 1 == 1)
    })
}

/// Writes a family by its maximal members, e.g. `{ab,c}`; `0` is the empty
/// subset and `{}` the empty family.
pub(crate) fn family_name(fam: u64, subsets: usize) -> String {
    let members: Vec<usize> = (0..subsets).filter(|s| fam >> s & 1 == 1).collect();
    let maximal: Vec<String> = members
        .iter()
        .filter(|&&s| !members.iter().any(|&t| t != s && t & s == s))
        .map(|&s| subset_name(s))
        .collect();
    format!("{{{}}}", maximal.join(","))
}

pub(crate) fn subset_name(mask: usize) -> String {
    if mask == 0 {
        return "0".to_string();
    }
    (0..26)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (b'a' + i as u8) as char)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(builtin("chain:3").unwrap().len(), 4);
        assert_eq!(builtin("lukasiewicz:1").unwrap().len(), 2);
        assert!(matches!(builtin("chain:65"), Err(CoQuantaleError::SizeLimit(_))));
        assert!(matches!(builtin("freelocale:4"), Err(CoQuantaleError::SizeLimit(_))));
        assert!(matches!(builtin("reals"), Err(CoQuantaleError::UnknownBuiltin(_))));
        assert!(matches!(builtin("chain:x"), Err(CoQuantaleError::UnknownBuiltin(_))));
    }

    #[test]
    fn lukasiewicz_identity_is_top_level() {
        let v = builtin("lukasiewicz:1").unwrap();
        assert_eq!(v.elem_name(v.zero()), "1");
        assert_eq!(v.elem_name(v.top()), "0");
        let v = lukasiewicz(4);
        let lv = |name: &str| v.index_of(name).unwrap();
        // 0.75 ⊕ 0.5 = 0.25
        assert_eq!(v.add(lv("3"), lv("2")), lv("1"));
    }

    #[test]
    fn free_locale_sizes() {
        // enumeration of down-closed families of P(R)
        let count = |k: usize| {
            let subsets = 1usize << k;
            (0u64..1 << subsets)
                .filter(|&fam| {
                    (0..subsets).all(|s| {
                        fam >> s & 1 == 0 || (0..subsets).all(|t| t & s != t || fam >> t & 1 == 1)
                    })
                })
                .count()
        };
        assert_eq!(count(2), 6);
        assert_eq!(free_locale(1).len(), count(1));
        assert_eq!(free_locale(2).len(), 6);
        assert_eq!(free_locale(3).len(), count(3));
    }

    #[test]
    fn free_locale_bottom_is_full_family() {
        let v = free_locale(2);
        assert_eq!(v.elem_name(v.zero()), "{ab}");
        assert_eq!(v.elem_name(v.top()), "{}");
        assert!(v.is_value());
    }

    #[test]
    fn every_builtin_validates() {
        let mut specs = vec!["bool2".to_string()];
        for n in 0..=8 {
            specs.push(format!("chain:{n}"));
            specs.push(format!("lukasiewicz:{n}"));
        }
        for k in 0..=3 {
            specs.push(format!("freelocale:{k}"));
        }
        for s in specs {
            builtin(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        }
    }
}
