//! Seeded random instances.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stonean_core::balg::BoolAlg;
use stonean_core::bits::{self, Bits};
use stonean_core::bvm::{BVModel, TarskiModel};
use stonean_core::logic::{Formula, Signature, Term};
use stonean_core::sheaf::{Base, Presheaf};
use stonean_core::topo::FinTop;

pub const DEFAULT_SEED: u64 = 0x5eed_0001;

/// Closed formulas over [`Sampler::signature`] that hold in every model.
pub const VALIDITIES: [&str; 10] = [
    "A x. x = x",
    "A x. A y. (x = y -> y = x)",
    "A x. A y. A z. ((x = y & y = z) -> x = z)",
    "A x. (R(x) | ~R(x))",
    "A x. A y. ((x = y & R(x)) -> R(y))",
    "(E x. R(x) | A x. ~R(x))",
    "(A x. R(x) -> E x. R(x))",
    "A x. E y. x = y",
    "(R(c) -> E x. R(x))",
    "A x. A y. (Q(x, y) -> E z. Q(x, z))",
];

const VARS: [&str; 3] = ["x", "y", "z"];

pub struct Sampler {
    rng: ChaCha8Rng,
    spaces: Vec<Vec<FinTop>>,
}

/// Limits for [`Sampler::model_with`].
#[derive(Clone, Copy, Debug)]
pub struct ModelShape {
    pub max_atoms: usize,
    pub max_domain: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_atoms: 3,
            max_domain: 4,
        }
    }
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spaces: Vec::new(),
        }
    }

    /// `R/1`, `Q/2` and the constant `c`.
    pub fn signature() -> Signature {
        Signature::new()
            .with_relation("R", 1)
            .with_relation("Q", 2)
            .with_constant("c")
    }

    pub fn model(&mut self) -> BVModel {
        self.model_with(ModelShape::default())
    }

    /// A model read off random Tarski structures at the atoms: each
    /// element picks a class in every stalk, and each stalk is cut down
    /// to the classes in use.
    pub fn model_with(&mut self, shape: ModelShape) -> BVModel {
        let k = self.rng.gen_range(1..=shape.max_atoms);
        let n = self.rng.gen_range(1..=shape.max_domain);
        let algebra = BoolAlg::numbered(k).expect("small algebra");
        let mut classes = Vec::with_capacity(k);
        let mut stalks = Vec::with_capacity(k);
        let c = self.rng.gen_range(0..n);
        for _ in 0..k {
            let raw: Vec<usize> = (0..n).map(|_| self.rng.gen_range(0..n)).collect();
            let mut seen: Vec<usize> = Vec::new();
            let cls: Vec<usize> = raw
                .iter()
                .map(|r| match seen.iter().position(|s| s == r) {
                    Some(i) => i,
                    None => {
                        seen.push(*r);
                        seen.len() - 1
                    }
                })
                .collect();
            let s = seen.len();
            let mut rels = BTreeMap::new();
            rels.insert(
                "R".to_string(),
                (1, (0..s).map(|_| self.rng.gen_bool(0.5)).collect()),
            );
            rels.insert(
                "Q".to_string(),
                (2, (0..s * s).map(|_| self.rng.gen_bool(0.5)).collect()),
            );
            let mut consts = BTreeMap::new();
            consts.insert("c".to_string(), cls[c]);
            let domain = (0..s).map(|i| format!("e{i}")).collect();
            stalks.push(TarskiModel::new(domain, rels, consts).expect("stalk shape"));
            classes.push(cls);
        }
        let domain = (0..n).map(|i| format!("d{i}")).collect();
        let mut constants = BTreeMap::new();
        constants.insert("c".to_string(), c);
        BVModel::from_stalks(algebra, domain, &classes, &stalks, constants)
            .expect("valid by construction")
    }

    fn term(&mut self) -> Term {
        if self.rng.gen_bool(0.2) {
            Term::constant("c")
        } else {
            Term::var(VARS.choose(&mut self.rng).expect("nonempty"))
        }
    }

    /// A formula over [`Sampler::signature`] with at most `depth` nested
    /// connectives and quantifiers.
    pub fn formula(&mut self, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..3) {
                0 => Formula::rel("R", vec![self.term()]),
                1 => Formula::rel("Q", vec![self.term(), self.term()]),
                _ => Formula::eq(self.term(), self.term()),
            };
        }
        let v = *VARS.choose(&mut self.rng).expect("nonempty");
        match self.rng.gen_range(0..6) {
            0 => Formula::not(self.formula(depth - 1)),
            1 => Formula::and(self.formula(depth - 1), self.formula(depth - 1)),
            2 => Formula::or(self.formula(depth - 1), self.formula(depth - 1)),
            3 => Formula::implies(self.formula(depth - 1), self.formula(depth - 1)),
            4 => Formula::exists(v, self.formula(depth - 1)),
            _ => Formula::forall(v, self.formula(depth - 1)),
        }
    }

    /// A topology on between one and `max_points` points, uniformly among
    /// the topologies of the chosen size.
    pub fn space(&mut self, max_points: usize) -> FinTop {
        let n = self.rng.gen_range(1..=max_points);
        while self.spaces.len() < n {
            let m = self.spaces.len() + 1;
            self.spaces.push(FinTop::all(m).expect("small spaces"));
        }
        self.spaces[n - 1]
            .choose(&mut self.rng)
            .expect("nonempty")
            .clone()
    }

    /// A presheaf on `O(X)⁺` spanned by random generators: a generator is
    /// a 0/1 function on an open `W`, and the sections over `U` are the
    /// restrictions of the generators defined on some `W ⊇ U`. Half of
    /// the generators live on the whole space. A tagged generator keeps a
    /// separate copy over `W` itself, which breaks separation whenever
    /// the plain copy is also present.
    pub fn presheaf_on(&mut self, x: &FinTop, max_generators: usize, tag_rate: f64) -> Presheaf {
        let opens = x.nonempty_opens().to_vec();
        let count = self.rng.gen_range(1..=max_generators);
        let gens: Vec<(Bits, Vec<u8>, bool)> = (0..count)
            .map(|_| {
                let w = if self.rng.gen_bool(0.5) {
                    x.full()
                } else {
                    *opens.choose(&mut self.rng).expect("nonempty")
                };
                let vals = bits::ones(w).map(|_| self.rng.gen_range(0..2)).collect();
                (w, vals, self.rng.gen_bool(tag_rate))
            })
            .collect();
        generated_presheaf(x, &gens)
    }

    pub fn presheaf(&mut self, max_points: usize) -> Presheaf {
        let x = self.space(max_points);
        self.presheaf_on(&x, 4, 0.2)
    }

    /// A presheaf on `B⁺` for `B` with between one and `max_atoms` atoms.
    pub fn algebra_presheaf(&mut self, max_atoms: usize, tag_rate: f64) -> Presheaf {
        let k = self.rng.gen_range(1..=max_atoms);
        let b = BoolAlg::numbered(k).expect("small algebra");
        let x = b.stone_space().space;
        self.presheaf_on(&x, 4, tag_rate)
            .on_algebra(&b)
            .expect("levels line up")
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// The presheaf spanned by generators `(W, values on W, tag)`. Section
/// names list the values in point order, with `'` marking tagged copies.
pub fn generated_presheaf(x: &FinTop, gens: &[(Bits, Vec<u8>, bool)]) -> Presheaf {
    let base = Base::opens(x).expect("nonempty space");
    let sets = base.sets().to_vec();
    let restrict = |w: Bits, vals: &[u8], u: Bits| -> Vec<u8> {
        bits::ones(w)
            .zip(vals)
            .filter(|(p, _)| bits::has(u, *p))
            .map(|(_, &v)| v)
            .collect()
    };
    let mut secs: Vec<Vec<(Vec<u8>, bool)>> = vec![Vec::new(); sets.len()];
    for (l, &u) in sets.iter().enumerate() {
        for (w, vals, tag) in gens {
            if bits::subset(u, *w) {
                let s = (restrict(*w, vals, u), *tag && u == *w);
                if !secs[l].contains(&s) {
                    secs[l].push(s);
                }
            }
        }
    }
    let mut maps = BTreeMap::new();
    for lo in 0..sets.len() {
        for hi in 0..sets.len() {
            if lo == hi || !base.leq(lo, hi) {
                continue;
            }
            let map = secs[hi]
                .iter()
                .map(|(v, _)| {
                    let r = restrict(sets[hi], v, sets[lo]);
                    secs[lo]
                        .iter()
                        .position(|(w, t)| *w == r && !t)
                        .expect("untagged restriction present")
                })
                .collect();
            maps.insert((lo, hi), map);
        }
    }
    let names = secs
        .iter()
        .map(|ss| {
            ss.iter()
                .map(|(v, t)| {
                    let mut s: String = v.iter().map(|d| char::from(b'0' + d)).collect();
                    if *t {
                        s.push('\'');
                    }
                    s
                })
                .collect()
        })
        .collect();
    Presheaf::from_partial(base, names, maps).expect("restrictions compose")
}

#[cfg(test)]
mod tests {
    use super::*;
    use stonean_core::logic::parse;

    #[test]
    fn seeds_are_reproducible() {
        let (mut a, mut b) = (Sampler::new(7), Sampler::new(7));
        for _ in 0..20 {
            assert_eq!(a.model(), b.model());
            assert_eq!(a.formula(3), b.formula(3));
            assert_eq!(a.presheaf(3), b.presheaf(3));
        }
    }

    #[test]
    fn models_stay_within_bounds() {
        let mut s = Sampler::new(DEFAULT_SEED);
        for _ in 0..100 {
            let m = s.model();
            assert!(m.algebra().len() <= 3 && m.len() <= 4);
            assert!(m.validate().is_valid());
        }
    }

    #[test]
    fn formulas_respect_depth() {
        let mut s = Sampler::new(3);
        for _ in 0..200 {
            assert!(s.formula(3).depth() <= 3);
        }
    }

    #[test]
    fn validities_parse() {
        for v in VALIDITIES {
            let f = parse(v, &Sampler::signature()).unwrap();
            assert!(f.is_closed(), "{v}");
        }
    }

    #[test]
    fn untagged_presheaves_are_separated() {
        let mut s = Sampler::new(11);
        for _ in 0..50 {
            let x = s.space(3);
            let f = s.presheaf_on(&x, 4, 0.0);
            assert!(stonean_core::sheaf::is_separated(&f));
        }
    }
}
