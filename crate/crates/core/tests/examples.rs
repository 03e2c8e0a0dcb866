use std::collections::BTreeMap;

use stonean_core::balg::{BAHom, BoolAlg};
use stonean_core::bits;
use stonean_core::bridge::{adjunction_witness, l_functor, lr_isomorphic, mixify, r_functor};
use stonean_core::bvm::{check_morphism, ModelBuilder, TarskiModel};
use stonean_core::sheaf::{
    find_isomorphism, is_stonean_sheaf, lambda0, lambda1, push_forward, sheafify,
    validate_morphism, Base, EtaleSpace, Germ, Presheaf, PresheafMorphism,
};
use stonean_core::topo::FinTop;
use stonean_core::Error;

/// All functions `U → {0, .., values-1}` over each open `U`.
fn functions(x: &FinTop, values: usize) -> Presheaf {
    let base = Base::opens(x).unwrap();
    let funcs: Vec<Vec<Vec<usize>>> = base
        .sets()
        .iter()
        .map(|&u| stonean_core::logic::tuples(values, bits::count(u) as usize))
        .collect();
    let names = funcs
        .iter()
        .map(|fs| {
            fs.iter()
                .map(|f| f.iter().map(|v| v.to_string()).collect())
                .collect()
        })
        .collect();
    let mut r = BTreeMap::new();
    for lo in 0..base.len() {
        for hi in 0..base.len() {
            if !base.leq(lo, hi) {
                continue;
            }
            let (sl, sh) = (base.sets()[lo], base.sets()[hi]);
            let keep: Vec<usize> = bits::ones(sh)
                .enumerate()
                .filter(|&(_, p)| bits::has(sl, p))
                .map(|(i, _)| i)
                .collect();
            let map = funcs[hi]
                .iter()
                .map(|f| {
                    let g: Vec<usize> = keep.iter().map(|&i| f[i]).collect();
                    funcs[lo].iter().position(|h| *h == g).unwrap()
                })
                .collect();
            r.insert((lo, hi), map);
        }
    }
    Presheaf::new(base, names, r).unwrap()
}

fn sierpinski_presheaf() -> Presheaf {
    let x = FinTop::new(["0", "1"], [0b00, 0b10, 0b11]).unwrap();
    let base = Base::opens(&x).unwrap();
    let mut r = BTreeMap::new();
    r.insert((0, 1), vec![0]);
    Presheaf::new(
        base,
        vec![vec!["t".into(), "u".into()], vec!["s".into()]],
        r,
    )
    .unwrap()
}

#[test]
fn lambda1_matches_lambda0_on_a_discrete_base() {
    let x = FinTop::discrete(["a", "b", "c"]).unwrap();
    let f = functions(&x, 2);
    let e0 = lambda0(&f).unwrap();
    let e1 = lambda1(&f).unwrap().etale;
    assert_eq!(e0.len(), e1.len());
    for p in 0..x.len() {
        assert_eq!(bits::count(e0.stalk(p)), bits::count(e1.stalk(p)));
    }
    let key = |e: &EtaleSpace, g: usize| {
        let Germ {
            point,
            level,
            section,
            ..
        } = &e.germs()[g];
        (
            *point,
            f.base().sets()[*level],
            f.res(f.base().level_of_set(1 << point).unwrap(), *level, *section),
        )
    };
    let mut k0: Vec<_> = (0..e0.len()).map(|g| key(&e0, g)).collect();
    let mut k1: Vec<_> = (0..e1.len()).map(|g| key(&e1, g)).collect();
    k0.iter_mut().chain(k1.iter_mut()).for_each(|k| k.1 = 0);
    k0.sort();
    k1.sort();
    assert_eq!(k0, k1);
}

#[test]
fn lambda1_is_hausdorff_and_zero_dimensional() {
    for f in [
        sierpinski_presheaf(),
        functions(&FinTop::discrete(["a", "b"]).unwrap(), 2),
    ] {
        let e = lambda1(&f).unwrap().etale;
        assert!(e.is_hausdorff());
        assert!(e.basic_opens_clopen());
        assert!(e.stalks_discrete_and_closed());
        assert!(e.is_local_homeomorphism());
        assert!(e.proj_is_continuous());
    }
}

#[test]
fn sierpinski_lambda1_identifies_s_and_t() {
    let l1 = lambda1(&sierpinski_presheaf()).unwrap();
    let e = &l1.etale;
    assert_eq!(e.len(), 2);
    // s over the whole space and t over {1} share a germ.
    assert_eq!(l1.germ_of[&(0, 1, 0)], l1.germ_of[&(0, 0, 0)]);
    assert_ne!(l1.germ_of[&(0, 0, 1)], l1.germ_of[&(0, 0, 0)]);
}

#[test]
fn gamma1_is_the_product_of_stalks() {
    let x = FinTop::discrete(["a", "b"]).unwrap();
    let e = lambda0(&functions(&x, 2)).unwrap();
    assert_eq!(e.gamma1_sections(0b11).unwrap().len(), 4);
    assert!(e
        .gamma1_sections(0b11)
        .unwrap()
        .iter()
        .all(|s| s.iter().all(Option::is_some)));
    let g = e.gamma1().unwrap();
    assert!(is_stonean_sheaf(&g));
    assert!(is_stonean_sheaf(
        &e.gamma_half()
            .unwrap()
            .with_base(Base::opens(&x).unwrap())
            .unwrap()
    ));

    let one = lambda0(&functions(&x, 1)).unwrap();
    assert_eq!(one.gamma1_sections(0b11).unwrap().len(), 1);
}

#[test]
fn gamma1_rejects_a_bundle_with_a_missing_stalk() {
    let x = FinTop::discrete(["a", "b"]).unwrap();
    let germ = Germ {
        point: 0,
        level: 0,
        section: 0,
        label: "g".into(),
    };
    let e = EtaleSpace::new(x, vec![germ], vec![0b1]).unwrap();
    assert!(matches!(
        e.gamma1(),
        Err(Error::NotExtremallyDisconnected(_))
    ));
}

#[test]
fn sheafify_is_idempotent() {
    for f in [
        sierpinski_presheaf(),
        functions(&FinTop::new(["0", "1"], [0, 0b10, 0b11]).unwrap(), 2),
    ] {
        let once = sheafify(&f).unwrap();
        let twice = sheafify(&once.sheaf).unwrap();
        let ident: Vec<usize> = (0..once.sheaf.base().len()).collect();
        assert!(find_isomorphism(&once.sheaf, &twice.sheaf, &ident).is_some());
    }
}

#[test]
fn sheafify_of_a_stonean_sheaf_is_itself() {
    let x = FinTop::discrete(["a", "b"]).unwrap();
    let f = functions(&x, 3);
    assert!(is_stonean_sheaf(&f));
    let sh = sheafify(&f).unwrap();
    let ident: Vec<usize> = (0..f.base().len()).collect();
    assert!(find_isomorphism(&f, &sh.sheaf, &ident).is_some());
}

#[test]
fn push_forward_along_the_unique_hom_is_constant() {
    let pt = FinTop::discrete(["p"]).unwrap();
    let f0 = Presheaf::new(
        Base::opens(&pt).unwrap(),
        vec![vec!["s".into()]],
        BTreeMap::new(),
    )
    .unwrap();
    let x1 = FinTop::discrete(["a", "b"]).unwrap();
    let homs = BAHom::all(&pt.ro_algebra().algebra, &x1.ro_algebra().algebra);
    assert_eq!(homs.len(), 1);
    let lifted = push_forward(&homs[0], &f0, &x1).unwrap();
    assert_eq!(lifted.base().len(), 3);
    assert!(lifted
        .all_sections()
        .iter()
        .all(|s| s == &["s".to_string()]));
}

#[test]
fn naturality_failure_names_the_square() {
    let x = FinTop::discrete(["a", "b"]).unwrap();
    let f = functions(&x, 2);
    let ident = PresheafMorphism {
        hom: BAHom::identity(&x.ro_algebra().algebra),
        components: (0..f.base().len())
            .map(|q| (0..f.sections(q).len()).collect())
            .collect(),
    };
    validate_morphism(&f, &f, &ident).unwrap();
    let mut bad = ident.clone();
    let a = f.base().level_of_set(0b01).unwrap();
    bad.components[a] = vec![1, 0];
    match validate_morphism(&f, &f, &bad) {
        Err(Error::Naturality { lower, upper }) => {
            assert_eq!(lower, "{a}");
            assert_eq!(upper, "{a,b}");
        }
        other => panic!("expected a naturality failure, got {other:?}"),
    }
}

#[test]
fn l_stalks_are_tarski_quotients() {
    let b = BoolAlg::numbered(3).unwrap();
    let m = ModelBuilder::new(b.clone(), ["u", "v", "w"])
        .eq("u", "v", b.elem(0b011).unwrap())
        .unwrap()
        .eq("v", "w", b.elem(0b100).unwrap())
        .unwrap()
        .build()
        .unwrap();
    let lm = l_functor(&m).unwrap();
    for (a, g) in b.ultrafilters().iter().enumerate() {
        let q = m.tarski_quotient(g).unwrap();
        let level = lm.presheaf.base().level_of_set(1 << a).unwrap();
        assert_eq!(lm.presheaf.sections(level), q.model.domain());
    }
}

#[test]
fn r_of_a_single_level_presheaf() {
    let b2 = BoolAlg::numbered(1).unwrap();
    let f = Presheaf::new(
        Base::algebra(&b2).unwrap(),
        vec![vec!["f".into(), "g".into()]],
        BTreeMap::new(),
    )
    .unwrap();
    let m = r_functor(&f, None).unwrap();
    assert_eq!(m.len(), 2);
    assert!(m.eq_value(0, 1).is_zero());
    let single = Presheaf::new(
        Base::algebra(&b2).unwrap(),
        vec![vec!["f".into()]],
        BTreeMap::new(),
    )
    .unwrap();
    let m1 = r_functor(&single, None).unwrap();
    assert_eq!(m1.len(), 1);
    assert_eq!(m1.eq_value(0, 0), m1.algebra().top());
}

#[test]
fn extensional_models_round_trip() {
    let b = BoolAlg::numbered(2).unwrap();
    let m = ModelBuilder::new(b.clone(), ["σ", "τ", "π"])
        .eq("σ", "τ", b.elem(0b01).unwrap())
        .unwrap()
        .rel("R", &["σ"], b.elem(0b11).unwrap())
        .unwrap()
        .rel("R", &["τ"], b.elem(0b01).unwrap())
        .unwrap()
        .build()
        .unwrap();
    assert!(m.is_extensional());
    let lm = l_functor(&m).unwrap();
    let w = adjunction_witness(&m, &lm.presheaf).unwrap();
    assert!(w.triangles_hold());
    assert!(w.unit_report.is_isomorphism && w.unit_bijective);
    assert!(lr_isomorphic(&lm.presheaf).unwrap());
}

#[test]
fn mixify_over_b2_is_the_quotient_by_the_top() {
    let b = BoolAlg::numbered(1).unwrap();
    let m = ModelBuilder::new(b.clone(), ["x", "y"])
        .eq("x", "y", b.top())
        .unwrap()
        .build()
        .unwrap();
    let mx = mixify(&m).unwrap();
    assert_eq!(mx.model.len(), 1);
    assert!(
        check_morphism(&m, &mx.model, &mx.embedding)
            .unwrap()
            .is_morphism
    );
}

#[test]
fn mixify_keeps_constants_and_relations() {
    let mut rels = BTreeMap::new();
    rels.insert("R".to_string(), (1, vec![true, false]));
    let mut consts = BTreeMap::new();
    consts.insert("c".to_string(), 1);
    let t = TarskiModel::new(vec!["p".into(), "q".into()], rels, consts).unwrap();
    let m = stonean_core::bvm::product_model(&[t.clone(), t]).unwrap();
    let mx = mixify(&m).unwrap();
    assert_eq!(mx.model.len(), 4);
    let c = mx.model.constants()["c"];
    // Each part names the least product element in the stalk class of c.
    assert_eq!(mx.model.id(c), "s_q_p_p_q");
    let rep = check_morphism(&m, &mx.model, &mx.embedding).unwrap();
    assert!(rep.is_isomorphism, "{rep}");
}
