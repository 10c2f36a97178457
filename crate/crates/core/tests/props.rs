use std::sync::Arc;

use cql::builtins::builtin;
use cql::formula::{parse_formula, print_formula, Formula, Language, Modulus, Signature, Term};
use cql::semantics::LStructure;
use cql::space::ContinuitySpace;
use cql::text::{write_structure, Workspace};
use proptest::prelude::*;

const VARS: usize = 3;

fn language() -> Arc<Language> {
    let v = Arc::new(builtin("chain:3").unwrap());
    let mut sig = Signature::new();
    sig.add_predicate("P", 1, Modulus::identity(&v)).unwrap();
    sig.add_predicate("R", 2, Modulus::constant(&v, 0)).unwrap();
    sig.add_function("f", 1, Modulus::constant(&v, 0)).unwrap();
    sig.add_constant("c").unwrap();
    Arc::new(Language::new(v, sig).unwrap())
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(0..VARS).prop_map(Term::Var), Just(Term::Const(0))];
    leaf.prop_recursive(2, 4, 1, |inner| inner.prop_map(|t| Term::App(0, vec![t])))
}

fn formula(lang: Arc<Language>) -> impl Strategy<Value = Formula> {
    let atoms = prop_oneof![
        (term(), term()).prop_map(|(a, b)| Formula::Dist(a, b)),
        term().prop_map(|t| Formula::Pred(0, vec![t])),
        (term(), term()).prop_map(|(a, b)| Formula::Pred(1, vec![a, b])),
        (0..lang.v().len()).prop_map(Formula::Val),
    ];
    let conns: Vec<(usize, usize)> = lang.connectives().iter().map(|c| c.arity).enumerate().collect();
    atoms.prop_recursive(3, 16, 2, move |inner| {
        let conns = conns.clone();
        prop_oneof![
            (0..VARS, inner.clone()).prop_map(|(x, f)| Formula::Sup(x, Box::new(f))),
            (0..VARS, inner.clone()).prop_map(|(x, f)| Formula::Inf(x, Box::new(f))),
            (proptest::sample::select(conns), proptest::collection::vec(inner, 2)).prop_map(|((i, ar), mut args)| {
                args.truncate(ar);
                Formula::Conn(i, args)
            }),
        ]
    })
}

/// A structure whose `P` is the distance from a fixed anchor, so the
/// identity modulus always holds; the rest is random.
fn structure(lang: Arc<Language>) -> impl Strategy<Value = Option<LStructure>> {
    (1usize..=3)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0usize..4, n * n),
                0..n,
                proptest::collection::vec(0usize..4, n * n),
                proptest::collection::vec(0..n, n),
                0..n,
            )
        })
        .prop_map(move |(n, raw, anchor, r, f, c)| {
            let v = lang.v_arc().clone();
            let dist = raw.chunks(n).map(|row| row.to_vec()).collect();
            let points = (0..n).map(|i| format!("p{i}")).collect();
            let space = ContinuitySpace::path_closure(v, points, dist).ok()?;
            let p = (0..n).map(|x| space.d(anchor, x)).collect();
            LStructure::new("M", lang.clone(), space, vec![p, r], vec![f], vec![c]).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn printing_round_trips(f in formula(language())) {
        let lang = language();
        let text = print_formula(&f, &lang);
        prop_assert_eq!(parse_formula(&text, &lang).unwrap(), f);
    }

    #[test]
    fn inferred_modulus_is_sound(m in structure(language()), f in formula(language())) {
        let Some(m) = m else { return Ok(()) };
        let lang = language();
        let v = lang.v();
        let delta = f.infer_modulus(&lang);
        let free = f.free_vars();
        let n = m.len();
        let sigmas: Vec<Vec<usize>> = cql::formula::tuples(n, VARS).collect();
        let vals: Vec<_> = sigmas.iter().map(|s| m.eval_formula(&f, s).unwrap()).collect();
        for (i, s) in sigmas.iter().enumerate() {
            for (j, t) in sigmas.iter().enumerate() {
                let input = (0..VARS)
                    .filter(|x| free >> x & 1 == 1)
                    .fold(v.zero(), |acc, x| {
                        let ds = v.join(m.space().d(s[x], t[x]), m.space().d(t[x], s[x]));
                        v.join(acc, ds)
                    });
                for eps in v.elements() {
                    if v.leq(input, delta.at(eps)) {
                        prop_assert!(
                            v.leq(v.dsym(vals[i], vals[j]), eps),
                            "{} at {:?} vs {:?}, eps {}", print_formula(&f, &lang), s, t, eps
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn structure_text_round_trips(m in structure(language())) {
        let Some(m) = m else { return Ok(()) };
        let text = write_structure(&m);
        let mut ws = Workspace::new();
        ws.load_str(&text).unwrap();
        let back = ws.structure("M").unwrap();
        prop_assert_eq!(back.space().dist_rows(), m.space().dist_rows());
        for p in 0..2 {
            prop_assert_eq!(back.pred_table(p), m.pred_table(p));
        }
        prop_assert_eq!(back.fun_table(0), m.fun_table(0));
        prop_assert_eq!(back.const_point(0), m.const_point(0));
        prop_assert_eq!(write_structure(back), text);
    }
}

