use std::collections::BTreeMap;

use proptest::prelude::*;
use stonean_core::bits::{self, Bits};
use stonean_core::bvm::{BVModel, TarskiModel};
use stonean_core::logic::{parse, Formula, Signature, Term};
use stonean_core::sheaf::{
    check_sheaf, ext_regular, is_stonean_sheaf, is_topological_sheaf, Base, Coverage, Presheaf,
};
use stonean_core::topo::FinTop;

fn sig() -> Signature {
    Signature::new()
        .with_relation("R", 1)
        .with_relation("Q", 2)
        .with_constant("c")
        .with_constant("d")
}

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var),
        prop::sample::select(vec!["c", "d"]).prop_map(Term::constant),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        term().prop_map(|t| Formula::rel("R", vec![t])),
        (term(), term()).prop_map(|(a, b)| Formula::rel("Q", vec![a, b])),
        (term(), term()).prop_map(|(a, b)| Formula::eq(a, b)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let var = prop::sample::select(vec!["x", "y", "z"]);
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (var.clone(), inner.clone()).prop_map(|(v, a)| Formula::exists(v, a)),
            (var, inner).prop_map(|(v, a)| Formula::forall(v, a)),
        ]
    })
}

/// A model over `k` atoms and `n` elements read off a stream of numbers:
/// each atom gets a Tarski structure and a class for each element.
fn model_from(k: usize, n: usize, r: &[u32]) -> BVModel {
    let mut it = r.iter().copied().cycle();
    let mut next = |m: usize| it.next().unwrap() as usize % m;
    let algebra = stonean_core::balg::BoolAlg::numbered(k).unwrap();
    let mut stalks = Vec::new();
    let mut classes = Vec::new();
    for _ in 0..k {
        let s = 1 + next(n);
        let mut rels = BTreeMap::new();
        rels.insert("R".to_string(), (1, (0..s).map(|_| next(2) == 1).collect()));
        rels.insert(
            "Q".to_string(),
            (2, (0..s * s).map(|_| next(2) == 1).collect()),
        );
        let mut consts = BTreeMap::new();
        consts.insert("c".to_string(), next(s));
        consts.insert("d".to_string(), next(s));
        stalks.push(
            TarskiModel::new((0..s).map(|i| format!("e{i}")).collect(), rels, consts).unwrap(),
        );
        classes.push((0..n).map(|_| next(s)).collect::<Vec<_>>());
    }
    // Constants land on an element whose classes match the stalk constants;
    // add such elements when missing.
    let mut domain: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
    let mut constants = BTreeMap::new();
    for c in ["c", "d"] {
        let want: Vec<usize> = stalks.iter().map(|s| s.constants()[c]).collect();
        let found = (0..domain.len()).find(|&i| (0..k).all(|a| classes[a][i] == want[a]));
        let i = found.unwrap_or_else(|| {
            domain.push(format!("d{}", domain.len()));
            for a in 0..k {
                classes[a].push(want[a]);
            }
            domain.len() - 1
        });
        constants.insert(c.to_string(), i);
    }
    BVModel::from_stalks(algebra, domain, &classes, &stalks, constants).unwrap()
}

fn model() -> impl Strategy<Value = BVModel> {
    (
        1usize..=3,
        1usize..=4,
        prop::collection::vec(any::<u32>(), 64),
    )
        .prop_map(|(k, n, r)| model_from(k, n, &r))
}

fn close(f: &Formula) -> Formula {
    f.free_vars()
        .iter()
        .rev()
        .fold(f.clone(), |acc, v| Formula::exists(v.as_str(), acc))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_then_parse_is_identity(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse(&text, &sig()).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn substitution_law(m in model(), f in formula(), pick in any::<usize>()) {
        let s = pick % m.len();
        let sub = f.substitute("x", &Term::element(m.id(s)));
        let rest: Vec<String> = sub.free_vars();
        let mut asg: Vec<(&str, usize)> = rest.iter().map(|v| (v.as_str(), 0)).collect();
        let lhs = m.eval_with(&sub, &asg).unwrap();
        if f.free_vars().iter().any(|v| v == "x") {
            asg.push(("x", s));
        }
        let rhs = m.eval_with(&f, &asg).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn los_at_every_ultrafilter(m in model(), f in formula()) {
        let g = close(&f);
        let v = m.eval(&g).unwrap();
        for u in m.algebra().ultrafilters() {
            let q = m.tarski_quotient(&u).unwrap();
            prop_assert_eq!(q.model.satisfies(&g).unwrap(), u.contains(v));
        }
    }

    #[test]
    fn random_models_are_valid(m in model()) {
        prop_assert!(m.validate().is_valid());
    }

    #[test]
    fn validities_evaluate_to_top(m in model()) {
        for src in VALIDITIES {
            let f = parse(src, &sig()).unwrap();
            prop_assert_eq!(m.eval(&f).unwrap(), m.algebra().top(), "{}", src);
        }
    }
}

const VALIDITIES: [&str; 10] = [
    "A x. x = x",
    "A x. A y. (x = y -> y = x)",
    "A x. A y. A z. ((x = y & y = z) -> x = z)",
    "A x. (R(x) | ~R(x))",
    "A x. A y. ((x = y & R(x)) -> R(y))",
    "(E x. R(x) | A x. ~R(x))",
    "(A x. R(x) -> E x. R(x))",
    "A x. E y. x = y",
    "(~E x. R(x) -> A x. ~R(x))",
    "A x. A y. (Q(x, y) -> E z. Q(x, z))",
];

/// Presheaf of restrictions of generators `(W, g, tag)`: over `U ⊆ W` the
/// section `g↾U`, keeping the tag only over `W` itself.
fn generated_presheaf(x: &FinTop, gens: &[(usize, u32, bool)]) -> Presheaf {
    let base = Base::opens(x).unwrap();
    let sets = base.sets().to_vec();
    let mut secs: Vec<Vec<(Vec<usize>, bool)>> = vec![Vec::new(); sets.len()];
    let gens: Vec<(Bits, Vec<usize>, bool)> = gens
        .iter()
        .map(|&(w, code, tag)| {
            let w = sets[w % sets.len()];
            let vals = bits::ones(w)
                .enumerate()
                .map(|(i, _)| (code >> i & 1) as usize)
                .collect();
            (w, vals, tag)
        })
        .collect();
    let restrict_fn = |w: Bits, vals: &[usize], u: Bits| -> Vec<usize> {
        bits::ones(w)
            .zip(vals)
            .filter(|(p, _)| bits::has(u, *p))
            .map(|(_, &v)| v)
            .collect()
    };
    for (l, &u) in sets.iter().enumerate() {
        for (w, vals, tag) in &gens {
            if bits::subset(u, *w) {
                let s = (restrict_fn(*w, vals, u), *tag && u == *w);
                if !secs[l].contains(&s) {
                    secs[l].push(s);
                }
            }
        }
    }
    let names = secs
        .iter()
        .map(|ss| {
            ss.iter()
                .map(|(v, t)| {
                    let mut s: String = v.iter().map(|d| d.to_string()).collect();
                    if *t {
                        s.push('\'');
                    }
                    s
                })
                .collect()
        })
        .collect();
    let mut restrict = BTreeMap::new();
    for lo in 0..sets.len() {
        for hi in 0..sets.len() {
            if !base.leq(lo, hi) {
                continue;
            }
            let map = secs[hi]
                .iter()
                .map(|(v, _)| {
                    let r = restrict_fn(sets[hi], v, sets[lo]);
                    let tagged = false;
                    secs[lo]
                        .iter()
                        .position(|(w, t)| *w == r && (*t == tagged || lo == hi))
                        .unwrap()
                })
                .collect();
            restrict.insert((lo, hi), map);
        }
    }
    for (q, ss) in secs.iter().enumerate() {
        restrict.insert((q, q), (0..ss.len()).collect());
    }
    Presheaf::new(base, names, restrict).unwrap()
}

fn presheaf() -> impl Strategy<Value = Presheaf> {
    let spaces: Vec<FinTop> = (1..=3).flat_map(|n| FinTop::all(n).unwrap()).collect();
    (
        prop::sample::select(spaces),
        prop::collection::vec(
            (any::<usize>(), any::<u32>(), prop::bool::weighted(0.2)),
            1..5,
        ),
    )
        .prop_map(|(x, gens)| generated_presheaf(&x, &gens))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stonean_sheaves_are_topological(f in presheaf()) {
        if is_stonean_sheaf(&f) {
            prop_assert!(is_topological_sheaf(&f));
        }
    }

    #[test]
    fn sheafification_is_stonean(f in presheaf()) {
        let sh = stonean_core::sheaf::sheafify(&f).unwrap();
        prop_assert!(is_stonean_sheaf(&sh.sheaf));
        stonean_core::sheaf::validate_morphism(&f, &sh.sheaf, &sh.unit).unwrap();
    }

    #[test]
    fn stonean_implies_regular_part_is_a_sheaf(f in presheaf()) {
        let part = regular_part(&f);
        if is_stonean_sheaf(&f) {
            prop_assert!(check_sheaf(&part, Coverage::Sup).is_sheaf());
        }
    }

    #[test]
    fn extension_from_regular_opens_is_stonean_iff_sheaf(f in presheaf()) {
        let x = f.base().space().unwrap().clone();
        prop_assume!(regular_opens_form_a_base(&x));
        let e = ext_regular(&f).unwrap();
        prop_assert_eq!(is_stonean_sheaf(&e), check_sheaf(&regular_part(&e), Coverage::Sup).is_sheaf());
    }
}

fn regular_opens_form_a_base(x: &FinTop) -> bool {
    x.nonempty_opens().iter().all(|&u| {
        x.regular_opens()
            .iter()
            .filter(|&&r| r != 0 && bits::subset(r, u))
            .fold(0, |a, &r| a | r)
            == u
    })
}

fn regular_part(f: &Presheaf) -> Presheaf {
    let x = f.base().space().unwrap();
    let levels: Vec<usize> = (0..f.base().len())
        .filter(|&l| x.is_regular_open(f.base().sets()[l]))
        .collect();
    f.restrict_to(&levels).unwrap()
}

/// A presheaf with two sections over the non-regular open `{1,2}` that
/// agree on its cover `{{1},{2}}`: its regular part is a sheaf, yet it
/// is not stonean.
#[test]
fn regular_part_does_not_see_non_regular_opens() {
    let x = FinTop::new(["0", "1", "2"], [0b000, 0b010, 0b100, 0b110, 0b111]).unwrap();
    assert!(regular_opens_form_a_base(&x));
    let f = generated_presheaf(&x, &[(2, 0b01, true), (3, 0b010, false)]);
    assert_eq!(f.sections(2).len(), 2);
    assert!(check_sheaf(&regular_part(&f), Coverage::Sup).is_sheaf());
    assert!(!is_stonean_sheaf(&f));
}
