//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p stonean --test acceptance`; pass `-- --seed N`
//! to resample the random models and presheaves.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use stonean::sample::{generated_presheaf, Sampler, DEFAULT_SEED, VALIDITIES};
use stonean::workspace::Workspace;
use stonean_core::balg::{BAHom, BoolAlg, Elem};
use stonean_core::bits::{self, Bits};
use stonean_core::bridge::{
    adjunction_witness, fullness_via_sections, l_functor, lr_isomorphic, mixify, mixing_iff_sheaf,
    r_functor, stalk_product_oracle,
};
use stonean_core::bvm::BVModel;
use stonean_core::logic::{parse, Formula, Term};
use stonean_core::sheaf::{
    check_universal_property, find_isomorphism, is_separated, is_stonean_sheaf, sheafify, Presheaf,
};
use stonean_core::topo::{ContMap, FinPoset, FinTop};

const MODELS: usize = 200;
const PRESHEAVES: usize = 50;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took < l);
        let passed = o.passed && in_time;
        if !passed {
            self.failures += 1;
        }
        let budget = limit
            .map(|l| format!(" / {}s", l.as_secs()))
            .unwrap_or_default();
        let late = if in_time { "" } else { " (over time)" };
        println!(
            "{} {n:>2} {name} [{:.2}s{budget}]{late}: {}",
            if passed { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

// Independent set-level oracles.

fn interior(x: &FinTop, a: Bits) -> Bits {
    x.opens()
        .iter()
        .filter(|&&u| bits::subset(u, a))
        .fold(0, |acc, &u| acc | u)
}

fn closure(x: &FinTop, a: Bits) -> Bits {
    x.full() & !interior(x, x.full() & !a)
}

fn reg(x: &FinTop, a: Bits) -> Bits {
    interior(x, closure(x, a))
}

/// `x ∈ Reg(A)` iff some open neighbourhood of `x` has every nonempty
/// open subset meeting `A`.
fn reg_pointwise(x: &FinTop, a: Bits) -> Bits {
    (0..x.len())
        .filter(|&p| {
            x.opens().iter().any(|&u| {
                bits::has(u, p)
                    && x.opens()
                        .iter()
                        .all(|&v| v == 0 || !bits::subset(v, u) || v & a != 0)
            })
        })
        .fold(0, |acc, p| acc | bits::bit(p))
}

fn stone_duality() -> Outcome {
    let mut tables = 0;
    for n in 1..=4 {
        let b = BoolAlg::numbered(n).unwrap();
        let st = b.stone_space();
        if b.ultrafilters().len() != n {
            return outcome(
                false,
                format!(
                    "B with {n} atoms has {} ultrafilters",
                    b.ultrafilters().len()
                ),
            );
        }
        let clop: Vec<Bits> = (0..=st.space.full())
            .filter(|&s| st.space.is_clopen(s))
            .collect();
        let mut image: Vec<Bits> = b.elements().map(|e| st.clopen(e)).collect();
        image.sort_unstable();
        image.dedup();
        if image != clop {
            return outcome(
                false,
                format!("N is not a bijection onto the clopens for {n} atoms"),
            );
        }
        for x in b.elements() {
            if st.clopen(b.complement(x)) != st.space.full() & !st.clopen(x) {
                return outcome(false, format!("complement of {}", b.show(x)));
            }
            for y in b.elements() {
                tables += 1;
                if st.clopen(b.meet(x, y)) != st.clopen(x) & st.clopen(y)
                    || st.clopen(b.join(x, y)) != st.clopen(x) | st.clopen(y)
                    || b.leq(x, y) != bits::subset(st.clopen(x), st.clopen(y))
                {
                    return outcome(false, format!("{} and {}", b.show(x), b.show(y)));
                }
            }
        }
    }
    outcome(true, format!("4 algebras, {tables} pairs checked"))
}

fn regularization(seed: u64) -> Outcome {
    let mut spaces: Vec<FinTop> = (1..=3).flat_map(|n| FinTop::all(n).unwrap()).collect();
    let small = spaces.len();
    let mut s = Sampler::new(seed);
    let four = FinTop::all(4).unwrap();
    for _ in 0..60 {
        spaces.push(four[s.rng().gen_range(0..four.len())].clone());
    }
    for x in &spaces {
        let full = x.full();
        for a in 0..=full {
            let r = x.regularize(a);
            if r != reg(x, a) || r != reg_pointwise(x, a) || x.regularize(r) != r {
                return outcome(false, format!("Reg of {} in {:?}", x.show(a), x.opens()));
            }
            if x.is_open(a) && !bits::subset(a, r) {
                return outcome(false, format!("not inflationary at {}", x.show(a)));
            }
            for c in bits::submasks(full) {
                if bits::subset(a, c) && !bits::subset(r, x.regularize(c)) {
                    return outcome(
                        false,
                        format!("not monotone at {} ⊆ {}", x.show(a), x.show(c)),
                    );
                }
            }
        }
    }
    outcome(
        true,
        format!("{small} spaces on ≤ 3 points, 60 sampled on 4 points"),
    )
}

fn open_maps() -> Outcome {
    let spaces: Vec<FinTop> = (1..=3).flat_map(|n| FinTop::all(n).unwrap()).collect();
    let (mut open, mut counter) = (0, None);
    for s in &spaces {
        for t in &spaces {
            for f in ContMap::all(s, t) {
                let is_open = s.opens().iter().all(|&u| t.is_open(f.image(u)));
                let fails = t
                    .opens()
                    .iter()
                    .copied()
                    .find(|&u| reg(s, f.preimage(u)) != f.preimage(reg(t, u)));
                if is_open {
                    open += 1;
                    if let Some(u) = fails {
                        return outcome(
                            false,
                            format!("open map {:?} fails at {}", f.map(), t.show(u)),
                        );
                    }
                } else if counter.is_none() {
                    counter = fails.map(|u| (f.map().to_vec(), t.show(u)));
                }
            }
        }
    }
    match counter {
        Some((map, u)) => outcome(
            true,
            format!("{open} open maps; non-open {map:?} fails at {u}"),
        ),
        None => outcome(false, "no non-open counterexample found"),
    }
}

fn completions() -> Outcome {
    let mut count = 0;
    for n in 1..=4 {
        for p in FinPoset::all(n).unwrap() {
            count += 1;
            let c = p.boolean_completion();
            let x = p.down_topology();
            let e: Vec<Bits> = (0..n).map(|i| reg(&x, p.down(i))).collect();
            if (0..n).any(|i| c.ro.set_of(c.embedding[i]) != e[i]) {
                return outcome(false, format!("embedding differs on {p:?}"));
            }
            let ro: Vec<Bits> = x
                .opens()
                .iter()
                .copied()
                .filter(|&u| reg(&x, u) == u)
                .collect();
            for i in 0..n {
                for j in 0..n {
                    if p.leq(i, j) && !bits::subset(e[i], e[j]) {
                        return outcome(false, format!("order fails on {p:?}"));
                    }
                    let compatible = (0..n).any(|k| p.leq(k, i) && p.leq(k, j));
                    if !compatible && e[i] & e[j] != 0 {
                        return outcome(false, format!("incompatibility fails on {p:?}"));
                    }
                }
            }
            let dense = ro
                .iter()
                .all(|&u| u == 0 || e.iter().any(|&ei| ei != 0 && bits::subset(ei, u)));
            if !dense {
                return outcome(false, format!("range not dense in {p:?}"));
            }
            if !c.check().holds() {
                return outcome(false, format!("completion check fails on {p:?}"));
            }
            if let Err(m) = c.ro.check_laws() {
                return outcome(false, format!("{p:?}: {m}"));
            }
        }
    }
    outcome(true, format!("{count} posets"))
}

fn adjoint_pairs() -> Outcome {
    let mut homs = 0;
    for m in 1..=3 {
        for n in 1..=3 {
            let (s, t) = (BoolAlg::numbered(m).unwrap(), BoolAlg::numbered(n).unwrap());
            for h in BAHom::all(&s, &t) {
                homs += 1;
                for c in t.elements() {
                    let galois =
                        |x: Elem| s.elements().all(|b| s.leq(x, b) == t.leq(c, h.apply(b)));
                    let solutions: Vec<_> = s.elements().filter(|&x| galois(x)).collect();
                    if solutions.len() != 1 || solutions[0] != h.left_adjoint(c) {
                        return outcome(
                            false,
                            format!("left adjoint at {} for {:?}", t.show(c), h.atom_map()),
                        );
                    }
                }
                let dual: Vec<usize> = (0..n)
                    .map(|a| h.dual(&t.ultrafilter(a).unwrap()).unwrap().atom().unwrap())
                    .collect();
                let k = BAHom::new(s.clone(), t.clone(), dual).unwrap();
                if s.elements().any(|b| k.apply(b) != h.apply(b)) {
                    return outcome(false, format!("round trip fails for {:?}", h.atom_map()));
                }
            }
        }
    }
    outcome(true, format!("{homs} homomorphisms"))
}

fn assignments(m: &BVModel, vars: &[String]) -> Vec<Vec<usize>> {
    stonean_core::logic::tuples(m.len(), vars.len())
}

fn semantics(models: &[BVModel], seed: u64) -> Outcome {
    let sig = Sampler::signature();
    let validities: Vec<Formula> = VALIDITIES.iter().map(|v| parse(v, &sig).unwrap()).collect();
    let mut s = Sampler::new(seed ^ 0x5b57);
    let mut checks = 0;
    for (k, m) in models.iter().enumerate() {
        if !m.validate().is_valid() {
            return outcome(false, format!("model {k} violates an axiom"));
        }
        for v in &validities {
            if m.eval(v).unwrap() != m.algebra().top() {
                return outcome(false, format!("model {k}: {v} is not 1"));
            }
        }
        for _ in 0..10 {
            let f = s.formula(3);
            let fv = f.free_vars();
            let rest: Vec<String> = fv.iter().filter(|v| *v != "x").cloned().collect();
            for sigma in 0..m.len() {
                let sub = f.substitute("x", &Term::element(m.id(sigma)));
                for asg in assignments(m, &rest) {
                    let mut env: Vec<(&str, usize)> = rest
                        .iter()
                        .map(String::as_str)
                        .zip(asg.iter().copied())
                        .collect();
                    let lhs = m.eval_with(&sub, &env).unwrap();
                    env.push(("x", sigma));
                    let rhs = m.eval_with(&f, &env).unwrap();
                    checks += 1;
                    if lhs != rhs {
                        return outcome(false, format!("model {k}: substitution fails for {f}"));
                    }
                }
            }
        }
    }
    outcome(
        true,
        format!("{} models, {checks} substitution instances", models.len()),
    )
}

fn los_fullness(models: &[BVModel], depth: usize) -> Outcome {
    let mut instances = 0;
    for (k, m) in models.iter().enumerate() {
        let r = m.is_full(depth).unwrap();
        instances += r.instances;
        if !r.procedures_agree() || !r.is_full() {
            return outcome(
                false,
                format!(
                    "model {k}: procedures agree {}, full {}",
                    r.procedures_agree(),
                    r.is_full()
                ),
            );
        }
    }
    outcome(
        true,
        format!("{} models, {instances} existential instances", models.len()),
    )
}

fn mixing_separation(models: &[BVModel]) -> Outcome {
    let mnm = Workspace::builtin().model("MNM").unwrap();
    let fail = mnm.has_mixing(None).unwrap().failure;
    let witness: Option<Vec<Bits>> = fail.map(|f| f.antichain.iter().map(|e| e.bits()).collect());
    if witness.as_deref() != Some(&[0b01, 0b10][..]) {
        return outcome(false, format!("MNM witness {witness:?}"));
    }
    if !mixify(&mnm)
        .unwrap()
        .model
        .has_mixing(None)
        .unwrap()
        .holds()
    {
        return outcome(false, "mixify(MNM) fails mixing");
    }
    let mut mixing = 0;
    for (k, m) in models.iter().enumerate() {
        if m.has_mixing(None).unwrap().holds() {
            mixing += 1;
            if !m.is_full(2).unwrap().is_full() {
                return outcome(false, format!("model {k} mixes but is not full"));
            }
        }
    }
    outcome(
        true,
        format!("MNM fails at {{a1,a2}}; {mixing} mixing models all full"),
    )
}

fn mixing_iff(models: &[BVModel]) -> Outcome {
    let mut mixing = 0;
    for (k, m) in models.iter().enumerate() {
        let r = mixing_iff_sheaf(m, None).unwrap();
        mixing += usize::from(r.mixing);
        if !r.agree() {
            return outcome(
                false,
                format!(
                    "model {k}: mixing {}, sheaf {}, sections {}",
                    r.mixing, r.sheaf, r.sections_induced
                ),
            );
        }
    }
    outcome(true, format!("{} models, {mixing} mixing", models.len()))
}

fn separated_presheaves(seed: u64) -> Vec<Presheaf> {
    let mut s = Sampler::new(seed ^ 0xad1);
    let mut out = Vec::new();
    while out.len() < PRESHEAVES {
        let f = s.algebra_presheaf(3, 0.2);
        let top = f.base().top().unwrap();
        if !f.sections(top).is_empty() && is_separated(&f) {
            out.push(f);
        }
    }
    out
}

fn adjunction(models: &[BVModel], presheaves: &[Presheaf]) -> Outcome {
    let (mut extensional, mut surjective) = (0, 0);
    for (k, m) in models.iter().enumerate() {
        let lm = l_functor(m).unwrap();
        let w = adjunction_witness(m, &lm.presheaf).unwrap();
        if !w.triangles_hold() {
            return outcome(false, format!("model {k}: triangles fail"));
        }
        if m.is_extensional() {
            extensional += 1;
            if !(w.unit_report.is_isomorphism && w.unit_bijective) {
                return outcome(false, format!("model {k}: R(L(M)) is not isomorphic to M"));
            }
        }
    }
    for (k, f) in presheaves.iter().enumerate() {
        let rf = r_functor(f, None).unwrap();
        let w = adjunction_witness(&rf, f).unwrap();
        if !w.triangles_hold() {
            return outcome(false, format!("presheaf {k}: triangles fail"));
        }
        if f.is_level_surjective() {
            surjective += 1;
            if !lr_isomorphic(f).unwrap() {
                return outcome(
                    false,
                    format!("presheaf {k}: L(R(F)) is not isomorphic to F"),
                );
            }
        }
    }
    outcome(
        true,
        format!(
            "{} models ({extensional} extensional), {} presheaves ({surjective} level-surjective)",
            models.len(),
            presheaves.len()
        ),
    )
}

fn small_sections(f: &Presheaf) -> bool {
    f.all_sections()
        .iter()
        .all(|s| !s.is_empty() && s.len() <= 3)
}

fn sheafification(models: &[BVModel], seed: u64) -> Outcome {
    let mut s = Sampler::new(seed ^ 0x5eaf);
    for k in 0..PRESHEAVES {
        let f = s.presheaf(3);
        let once = sheafify(&f).unwrap();
        if !is_stonean_sheaf(&once.sheaf) {
            return outcome(
                false,
                format!("presheaf {k}: sheafification is not stonean"),
            );
        }
        let twice = sheafify(&once.sheaf).unwrap();
        let ident: Vec<usize> = (0..once.sheaf.base().len()).collect();
        if find_isomorphism(&once.sheaf, &twice.sheaf, &ident).is_none() {
            return outcome(
                false,
                format!("presheaf {k}: sheafification is not idempotent"),
            );
        }
    }
    for (k, m) in models.iter().enumerate() {
        let mx = mixify(m).unwrap();
        if !stalk_product_oracle(m, &mx).unwrap() {
            return outcome(
                false,
                format!("model {k}: mixify differs from the stalk product"),
            );
        }
    }
    // Universal property on bases of at most two atoms.
    let (mut instances, mut morphisms) = (0, 0);
    let mut tries = 0;
    while instances < 30 && tries < 10_000 {
        tries += 1;
        let x = if s.rng().gen_bool(0.5) {
            FinTop::discrete(["p"]).unwrap()
        } else {
            FinTop::discrete(["p", "q"]).unwrap()
        };
        let y = if s.rng().gen_bool(0.5) {
            FinTop::discrete(["u"]).unwrap()
        } else {
            FinTop::discrete(["u", "v"]).unwrap()
        };
        let f = s.presheaf_on(&x, 3, 0.3);
        let target = sheafify(&s.presheaf_on(&y, 3, 0.0)).unwrap().sheaf;
        if !small_sections(&f) || !small_sections(&target) {
            continue;
        }
        let r = check_universal_property(&f, &target).unwrap();
        instances += 1;
        morphisms += r.morphisms;
        if !r.holds() {
            return outcome(false, format!("factorizations {:?}", r.factorizations));
        }
    }
    if instances < 30 {
        return outcome(false, "too few universal-property instances");
    }
    let fs = Workspace::builtin().presheaf("FS").unwrap();
    let point = FinTop::discrete(["z"]).unwrap();
    let two = generated_presheaf(&point, &[(1, vec![0], false), (1, vec![1], false)]);
    let note = match check_universal_property(&fs, &two) {
        Ok(r) => format!(
            "; info: on the Sierpiński space {} morphisms factor {:?} times",
            r.morphisms, r.factorizations
        ),
        Err(e) => format!("; info: Sierpiński check errs: {e}"),
    };
    outcome(
        true,
        format!("{PRESHEAVES} presheaves, {} mixifications, {instances} instances with {morphisms} morphisms{note}", models.len()),
    )
}

fn fullness_sections(models: &[BVModel], depth: usize) -> Outcome {
    let mut mixing = 0;
    for (k, m) in models.iter().enumerate() {
        let r = fullness_via_sections(m, depth, None).unwrap();
        mixing += usize::from(r.mixing);
        if let Some((phi, c)) = r.disagreement.as_ref().or(r.failure.as_ref()) {
            return outcome(false, format!("model {k}: {phi} gives {c:?}"));
        }
    }
    outcome(
        true,
        format!("{} models, clause 5 on {mixing}", models.len()),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let seed = args
        .iter()
        .position(|a| a == "--seed")
        .and_then(|i| args.get(i + 1))
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    println!("acceptance suite, seed {seed}");
    let mut sampler = Sampler::new(seed);
    let models: Vec<BVModel> = (0..MODELS).map(|_| sampler.model()).collect();
    let presheaves = separated_presheaves(seed);

    let mut suite = Suite { failures: 0 };
    suite.run(1, "Stone duality", secs(5), stone_duality);
    suite.run(2, "regularization", secs(30), || regularization(seed));
    suite.run(3, "open-map identity", secs(60), open_maps);
    suite.run(4, "boolean completion", secs(60), completions);
    suite.run(5, "adjoint pairs", secs(60), adjoint_pairs);
    suite.run(6, "semantics", secs(120), || semantics(&models, seed));
    suite.run(7, "Łoś and fullness", secs(300), || {
        los_fullness(&models, 2)
    });
    suite.run(8, "mixing separation", None, || mixing_separation(&models));
    suite.run(9, "mixing iff sheaf", None, || mixing_iff(&models));
    suite.run(10, "adjunction", secs(300), || {
        adjunction(&models, &presheaves)
    });
    suite.run(11, "sheafification", secs(300), || {
        sheafification(&models, seed)
    });
    suite.run(12, "fullness via sections", secs(300), || {
        fullness_sections(&models, 2)
    });
    if suite.failures == 0 {
        println!("all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria fail", suite.failures);
        ExitCode::FAILURE
    }
}
