//! Presheaves on finite bases, sheaf conditions, étalé spaces and
//! sheafification through the regular open algebra.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::balg::{BAHom, BoolAlg, StoneSpace};
use crate::bits::{self, Bits};
use crate::topo::{show_set, FinPoset, FinTop, SetAlgebra};
use crate::{Error, Result};

/// Upper bound on enumerated section candidates or morphisms.
pub const SEARCH_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseKind {
    /// An abstract poset.
    Poset,
    /// `O(X)⁺`, the nonempty open sets of a space.
    Opens(FinTop),
    /// `B⁺`, the nonzero elements of an algebra.
    Algebra(BoolAlg),
}

/// The index poset of a presheaf. For `O(X)⁺` and `B⁺` the levels are
/// the nonempty sets in increasing bit order, so `O(St(B))⁺` and `B⁺`
/// line up level by level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Base {
    poset: FinPoset,
    kind: BaseKind,
    sets: Vec<Bits>,
}

fn set_poset(labels: Vec<String>, sets: &[Bits]) -> Result<FinPoset> {
    if sets.len() > bits::CAPACITY {
        return Err(Error::TooLarge(format!(
            "a base with {} levels exceeds the limit of {}",
            sets.len(),
            bits::CAPACITY
        )));
    }
    let pairs = (0..sets.len()).flat_map(|i| {
        (0..sets.len())
            .filter(move |&j| i != j && bits::subset(sets[i], sets[j]))
            .map(move |j| (i, j))
    });
    FinPoset::new(labels, pairs)
}

impl Base {
    pub fn poset(p: FinPoset) -> Self {
        Base {
            poset: p,
            kind: BaseKind::Poset,
            sets: Vec::new(),
        }
    }

    /// `O(X)⁺`.
    pub fn opens(x: &FinTop) -> Result<Self> {
        let sets = x.nonempty_opens().to_vec();
        let labels = sets.iter().map(|&s| x.show(s)).collect();
        Ok(Base {
            poset: set_poset(labels, &sets)?,
            kind: BaseKind::Opens(x.clone()),
            sets,
        })
    }

    /// `B⁺`.
    pub fn algebra(b: &BoolAlg) -> Result<Self> {
        if b.len() > 6 {
            return Err(Error::TooLarge("B⁺ as a base needs at most 6 atoms".into()));
        }
        let sets: Vec<Bits> = (1..=b.top_bits()).collect();
        let labels = sets.iter().map(|&s| show_set(b.labels(), s)).collect();
        Ok(Base {
            poset: set_poset(labels, &sets)?,
            kind: BaseKind::Algebra(b.clone()),
            sets,
        })
    }

    pub fn order(&self) -> &FinPoset {
        &self.poset
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.poset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        self.poset.label(i)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.poset.leq(a, b)
    }

    /// The set of a level, for `O(X)⁺` and `B⁺` bases.
    pub fn set(&self, i: usize) -> Option<Bits> {
        self.sets.get(i).copied()
    }

    pub fn sets(&self) -> &[Bits] {
        &self.sets
    }

    pub fn level_of_set(&self, s: Bits) -> Option<usize> {
        self.sets.binary_search(&s).ok()
    }

    pub fn space(&self) -> Option<&FinTop> {
        match &self.kind {
            BaseKind::Opens(x) => Some(x),
            _ => None,
        }
    }

    pub fn algebra_ref(&self) -> Option<&BoolAlg> {
        match &self.kind {
            BaseKind::Algebra(b) => Some(b),
            _ => None,
        }
    }

    /// The greatest level, if any.
    pub fn top(&self) -> Option<usize> {
        let all = bits::full(self.len());
        (0..self.len()).find(|&i| self.poset.down(i) == all)
    }

    /// Levels ordered so that every level comes after all levels below it.
    pub fn bottom_up(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| bits::count(self.poset.down(i)));
        order
    }

    fn sub(&self, levels: &[usize]) -> Result<Base> {
        let labels: Vec<String> = levels.iter().map(|&i| self.label(i).to_string()).collect();
        let pairs = (0..levels.len()).flat_map(|a| {
            (0..levels.len())
                .filter(move |&b| a != b && self.leq(levels[a], levels[b]))
                .map(move |b| (a, b))
        });
        let sets = if self.sets.is_empty() {
            Vec::new()
        } else {
            levels.iter().map(|&i| self.sets[i]).collect()
        };
        Ok(Base {
            poset: FinPoset::new(labels, pairs)?,
            kind: BaseKind::Poset,
            sets,
        })
    }
}

/// A presheaf of finite sets: named sections per level and a restriction
/// map for every pair `lower ≤ upper`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presheaf {
    base: Base,
    sections: Vec<Vec<String>>,
    restrict: BTreeMap<(usize, usize), Vec<usize>>,
}

impl Presheaf {
    /// Requires a map for every strict pair `lower < upper`; identities are
    /// added. Checks functoriality on every chain.
    pub fn new(
        base: Base,
        sections: Vec<Vec<String>>,
        mut restrict: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self> {
        let n = base.len();
        if sections.len() != n {
            return Err(Error::InvalidPresheaf(format!(
                "{} section sets for {n} levels",
                sections.len()
            )));
        }
        for (q, names) in sections.iter().enumerate() {
            let mut sorted: Vec<&String> = names.iter().collect();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPresheaf(format!(
                    "duplicate section name at level {}",
                    base.label(q)
                )));
            }
        }
        for (&(lo, hi), map) in &restrict {
            if lo >= n || hi >= n || !base.leq(lo, hi) {
                return Err(Error::InvalidPresheaf(format!(
                    "restriction given for levels {lo} and {hi}, which are not related"
                )));
            }
            if map.len() != sections[hi].len() || map.iter().any(|&f| f >= sections[lo].len()) {
                return Err(Error::InvalidPresheaf(format!(
                    "restriction {} <= {} is not a map F({}) -> F({})",
                    base.label(lo),
                    base.label(hi),
                    base.label(hi),
                    base.label(lo)
                )));
            }
        }
        for (q, secs) in sections.iter().enumerate() {
            let id: Vec<usize> = (0..secs.len()).collect();
            match restrict.get(&(q, q)) {
                Some(m) if *m != id => {
                    return Err(Error::InvalidPresheaf(format!(
                        "restriction at {} is not the identity",
                        base.label(q)
                    )))
                }
                _ => {
                    restrict.insert((q, q), id);
                }
            }
        }
        for lo in 0..n {
            for hi in 0..n {
                if base.leq(lo, hi) && !restrict.contains_key(&(lo, hi)) {
                    return Err(Error::InvalidPresheaf(format!(
                        "missing restriction {} <= {}",
                        base.label(lo),
                        base.label(hi)
                    )));
                }
            }
        }
        let f = Presheaf {
            base,
            sections,
            restrict,
        };
        for a in 0..n {
            for b in 0..n {
                if !f.base.leq(a, b) {
                    continue;
                }
                for c in 0..n {
                    if !f.base.leq(b, c) {
                        continue;
                    }
                    for s in 0..f.sections[c].len() {
                        if f.res(a, b, f.res(b, c, s)) != f.res(a, c, s) {
                            return Err(Error::InvalidPresheaf(format!(
                                "composition fails on {} <= {} <= {}",
                                f.base.label(a),
                                f.base.label(b),
                                f.base.label(c)
                            )));
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    /// Like [`Presheaf::new`], filling missing restrictions by composing
    /// given ones.
    pub fn from_partial(
        base: Base,
        sections: Vec<Vec<String>>,
        mut restrict: BTreeMap<(usize, usize), Vec<usize>>,
    ) -> Result<Self> {
        let n = base.len();
        for (q, secs) in sections.iter().enumerate().take(n) {
            restrict
                .entry((q, q))
                .or_insert_with(|| (0..secs.len()).collect());
        }
        loop {
            let mut added = false;
            for a in 0..n {
                for c in 0..n {
                    if a == c || !base.leq(a, c) || restrict.contains_key(&(a, c)) {
                        continue;
                    }
                    let via = (0..n).find(|&b| {
                        b != a
                            && b != c
                            && restrict.contains_key(&(a, b))
                            && restrict.contains_key(&(b, c))
                    });
                    if let Some(b) = via {
                        let (ab, bc) = (&restrict[&(a, b)], &restrict[&(b, c)]);
                        let comp: Option<Vec<usize>> =
                            bc.iter().map(|&s| ab.get(s).copied()).collect();
                        let comp = comp.ok_or_else(|| {
                            Error::InvalidPresheaf("restriction maps out of range".into())
                        })?;
                        restrict.insert((a, c), comp);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        Self::new(base, sections, restrict)
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn sections(&self, q: usize) -> &[String] {
        &self.sections[q]
    }

    pub fn all_sections(&self) -> &[Vec<String>] {
        &self.sections
    }

    pub fn section_index(&self, q: usize, name: &str) -> Option<usize> {
        self.sections[q].iter().position(|s| s == name)
    }

    /// `F(lower ≤ upper)(s)`.
    pub fn res(&self, lower: usize, upper: usize, s: usize) -> usize {
        self.restrict[&(lower, upper)][s]
    }

    pub fn restriction(&self, lower: usize, upper: usize) -> Option<&[usize]> {
        self.restrict.get(&(lower, upper)).map(Vec::as_slice)
    }

    pub fn restrictions(&self) -> &BTreeMap<(usize, usize), Vec<usize>> {
        &self.restrict
    }

    /// The same presheaf over a base of identical shape.
    pub fn with_base(&self, base: Base) -> Result<Presheaf> {
        if base.poset.len() != self.base.len()
            || (0..base.len()).any(|i| base.poset.down(i) != self.base.poset.down(i))
        {
            return Err(Error::InvalidPresheaf("bases differ in shape".into()));
        }
        Ok(Presheaf {
            base,
            sections: self.sections.clone(),
            restrict: self.restrict.clone(),
        })
    }

    /// A presheaf on `B⁺` seen on `O(St(B))⁺`.
    pub fn on_stone_space(&self) -> Result<Presheaf> {
        match &self.base.kind {
            BaseKind::Algebra(b) => self.with_base(Base::opens(&b.stone_space().space)?),
            BaseKind::Opens(_) => Ok(self.clone()),
            BaseKind::Poset => Err(Error::InvalidPresheaf(
                "an abstract poset has no Stone space".into(),
            )),
        }
    }

    /// A presheaf on `O(Y)⁺`, `Y` discrete with one point per atom of `b`,
    /// seen on `B⁺`.
    pub fn on_algebra(&self, b: &BoolAlg) -> Result<Presheaf> {
        match &self.base.kind {
            BaseKind::Opens(y) if y.is_discrete() && y.len() == b.len() => {
                self.with_base(Base::algebra(b)?)
            }
            BaseKind::Algebra(c) if c == b => Ok(self.clone()),
            _ => Err(Error::InvalidPresheaf(
                "base is not a discrete space matching the algebra".into(),
            )),
        }
    }

    /// The restriction to the given levels, over an abstract sub-poset.
    pub fn restrict_to(&self, levels: &[usize]) -> Result<Presheaf> {
        let base = self.base.sub(levels)?;
        let sections = levels.iter().map(|&q| self.sections[q].clone()).collect();
        let mut restrict = BTreeMap::new();
        for (a, &qa) in levels.iter().enumerate() {
            for (b, &qb) in levels.iter().enumerate() {
                if self.base.leq(qa, qb) {
                    restrict.insert((a, b), self.restrict[&(qa, qb)].clone());
                }
            }
        }
        Presheaf::new(base, sections, restrict)
    }

    /// The same presheaf with new section names.
    pub fn renamed(&self, sections: Vec<Vec<String>>) -> Result<Presheaf> {
        if sections.len() != self.sections.len()
            || sections
                .iter()
                .zip(&self.sections)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::InvalidPresheaf("renaming changes the shape".into()));
        }
        Presheaf::new(self.base.clone(), sections, self.restrict.clone())
    }

    /// Every section at a level is a restriction of a top section.
    pub fn is_level_surjective(&self) -> bool {
        let Some(top) = self.base.top() else {
            return false;
        };
        (0..self.base.len()).all(|q| {
            let mut hit = vec![false; self.sections[q].len()];
            for s in 0..self.sections[top].len() {
                hit[self.res(q, top, s)] = true;
            }
            hit.into_iter().all(|h| h)
        })
    }
}

/// Which families count as coverings of a level `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Families predense below `p`: the stonean sheaf condition.
    Dense,
    /// Families whose least upper bound is `p`: the ordinary sheaf
    /// condition.
    Sup,
}

/// A compatible family over a covering antichain, with its collations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyWitness {
    pub level: usize,
    pub cover: Vec<usize>,
    pub family: Vec<usize>,
    pub collations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SheafReport {
    pub coverage: Coverage,
    pub covers: usize,
    pub families: usize,
    pub non_unique: Option<FamilyWitness>,
    pub missing: Option<FamilyWitness>,
}

impl SheafReport {
    pub fn is_separated(&self) -> bool {
        self.non_unique.is_none()
    }

    pub fn is_sheaf(&self) -> bool {
        self.non_unique.is_none() && self.missing.is_none()
    }
}

fn antichains_below(p: &FinPoset, pool: Bits, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if !cur.is_empty() {
        out.push(cur.clone());
    }
    let start = cur.last().map_or(0, |&l| l + 1);
    for i in bits::ones(pool).filter(|&i| i >= start) {
        if cur.iter().all(|&j| !p.leq(i, j) && !p.leq(j, i)) {
            cur.push(i);
            antichains_below(p, pool, cur, out);
            cur.pop();
        }
    }
}

fn covers(p: &FinPoset, level: usize, chain: &[usize], cov: Coverage) -> bool {
    match cov {
        Coverage::Sup => {
            let s = chain.iter().fold(0, |acc, &i| acc | bits::bit(i));
            p.lub(s) == Some(level)
        }
        Coverage::Dense => {
            bits::ones(p.down(level)).all(|q| chain.iter().any(|&a| p.compatible(a, q)))
        }
    }
}

/// Covering antichains of `level`. Families over arbitrary coverings are
/// determined by their maximal members, so antichains suffice.
pub fn covering_antichains(p: &FinPoset, level: usize, cov: Coverage) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    antichains_below(p, p.down(level), &mut Vec::new(), &mut all);
    all.retain(|c| covers(p, level, c, cov));
    all
}

/// Checks uniqueness and existence of collations for every compatible
/// family on every covering antichain.
pub fn check_sheaf(f: &Presheaf, cov: Coverage) -> SheafReport {
    let p = &f.base.poset;
    let mut report = SheafReport {
        coverage: cov,
        covers: 0,
        families: 0,
        non_unique: None,
        missing: None,
    };
    for level in 0..p.len() {
        for chain in covering_antichains(p, level, cov) {
            report.covers += 1;
            let k = chain.len();
            if chain.iter().any(|&a| f.sections[a].is_empty()) {
                continue;
            }
            let mut fam = vec![0usize; k];
            loop {
                let compatible = (0..k).all(|i| {
                    (i + 1..k).all(|j| {
                        let (a, b) = (chain[i], chain[j]);
                        bits::ones(p.down(a) & p.down(b))
                            .all(|r| f.res(r, a, fam[i]) == f.res(r, b, fam[j]))
                    })
                });
                if compatible {
                    report.families += 1;
                    let collations: Vec<usize> = (0..f.sections[level].len())
                        .filter(|&s| (0..k).all(|i| f.res(chain[i], level, s) == fam[i]))
                        .collect();
                    let w = || FamilyWitness {
                        level,
                        cover: chain.clone(),
                        family: fam.clone(),
                        collations: collations.clone(),
                    };
                    if collations.len() > 1 && report.non_unique.is_none() {
                        report.non_unique = Some(w());
                    }
                    if collations.is_empty() && report.missing.is_none() {
                        report.missing = Some(w());
                    }
                }
                let mut done = true;
                for i in (0..k).rev() {
                    fam[i] += 1;
                    if fam[i] < f.sections[chain[i]].len() {
                        done = false;
                        break;
                    }
                    fam[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }
    report
}

pub fn is_stonean_sheaf(f: &Presheaf) -> bool {
    check_sheaf(f, Coverage::Dense).is_sheaf()
}

pub fn is_topological_sheaf(f: &Presheaf) -> bool {
    check_sheaf(f, Coverage::Sup).is_sheaf()
}

pub fn is_separated(f: &Presheaf) -> bool {
    check_sheaf(f, Coverage::Sup).is_separated()
}

/// A germ: the class of a section at a base point, remembered through a
/// representative section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Germ {
    pub point: usize,
    pub level: usize,
    pub section: usize,
    pub label: String,
}

/// A finite étalé space over a finite base. The total space carries the
/// topology generated by the basic opens; in a finite space that is
/// recorded by each germ's smallest open neighbourhood.
#[derive(Clone, Debug)]
pub struct EtaleSpace {
    base: FinTop,
    germs: Vec<Germ>,
    basic: Vec<Bits>,
    nbhd: Vec<Bits>,
}

impl EtaleSpace {
    pub fn new(base: FinTop, germs: Vec<Germ>, basic: Vec<Bits>) -> Result<Self> {
        if germs.len() > bits::CAPACITY {
            return Err(Error::TooLarge(format!(
                "{} germs exceeds the limit of {}",
                germs.len(),
                bits::CAPACITY
            )));
        }
        if germs.iter().any(|g| g.point >= base.len()) {
            return Err(Error::InvalidPresheaf("germ over a missing point".into()));
        }
        let all = bits::full(germs.len());
        let nbhd = (0..germs.len())
            .map(|g| {
                basic
                    .iter()
                    .filter(|&&b| bits::has(b, g))
                    .fold(all, |acc, &b| acc & b)
            })
            .collect();
        Ok(EtaleSpace {
            base,
            germs,
            basic,
            nbhd,
        })
    }

    pub fn base(&self) -> &FinTop {
        &self.base
    }

    pub fn germs(&self) -> &[Germ] {
        &self.germs
    }

    pub fn basic_opens(&self) -> &[Bits] {
        &self.basic
    }

    pub fn len(&self) -> usize {
        self.germs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.germs.is_empty()
    }

    pub fn proj(&self, g: usize) -> usize {
        self.germs[g].point
    }

    pub fn stalk(&self, x: usize) -> Bits {
        (0..self.len())
            .filter(|&g| self.germs[g].point == x)
            .fold(0, |acc, g| acc | bits::bit(g))
    }

    /// The projection of a set of germs.
    pub fn image_of(&self, s: Bits) -> Bits {
        bits::ones(s).fold(0, |acc, g| acc | bits::bit(self.proj(g)))
    }

    pub fn image(&self) -> Bits {
        self.image_of(bits::full(self.len()))
    }

    pub fn preimage(&self, u: Bits) -> Bits {
        (0..self.len())
            .filter(|&g| bits::has(u, self.proj(g)))
            .fold(0, |acc, g| acc | bits::bit(g))
    }

    /// The smallest open set containing germ `g`.
    pub fn nbhd(&self, g: usize) -> Bits {
        self.nbhd[g]
    }

    pub fn is_open(&self, s: Bits) -> bool {
        bits::ones(s).all(|g| bits::subset(self.nbhd[g], s))
    }

    pub fn is_closed(&self, s: Bits) -> bool {
        self.is_open(bits::full(self.len()) & !s)
    }

    pub fn proj_is_continuous(&self) -> bool {
        self.base
            .opens()
            .iter()
            .all(|&u| self.is_open(self.preimage(u)))
    }

    /// Every basic open maps homeomorphically onto an open set.
    pub fn is_local_homeomorphism(&self) -> bool {
        self.basic.iter().all(|&v| {
            let img = self.image_of(v);
            let injective = bits::count(img) == bits::count(v);
            injective
                && self.base.is_open(img)
                && bits::ones(v).all(|g| {
                    bits::ones(v).all(|h| {
                        bits::has(self.nbhd[h], g)
                            == bits::has(self.base.min_nbhd(self.proj(h)), self.proj(g))
                    })
                })
        })
    }

    pub fn is_hausdorff(&self) -> bool {
        (0..self.len()).all(|g| (0..self.len()).all(|h| g == h || self.nbhd[g] & self.nbhd[h] == 0))
    }

    pub fn stalks_discrete_and_closed(&self) -> bool {
        (0..self.base.len()).all(|x| {
            let s = self.stalk(x);
            self.is_closed(s) && bits::ones(s).all(|g| self.nbhd[g] & s == bits::bit(g))
        })
    }

    pub fn basic_opens_clopen(&self) -> bool {
        self.basic.iter().all(|&b| self.is_closed(b))
    }

    /// Why this is not an extremally disconnected bundle, if it is not: the
    /// base must be compact Hausdorff and extremally disconnected, and the
    /// projection must have open dense image.
    pub fn ed_obstruction(&self) -> Option<String> {
        if !self.base.is_hausdorff() {
            return Some("base is not Hausdorff".into());
        }
        if !self.base.is_extremally_disconnected() {
            return Some("base is not extremally disconnected".into());
        }
        let img = self.image();
        if !self.base.is_open(img) || !self.base.is_dense(img) {
            return Some(format!(
                "projection image {} is not open and dense",
                self.base.show(img)
            ));
        }
        None
    }

    fn point_list(&self, u: Bits) -> Result<Vec<usize>> {
        self.base.check_subset(u)?;
        if u == 0 {
            return Err(Error::InvalidTopology("sections over the empty set".into()));
        }
        if !self.base.is_open(u) {
            return Err(Error::InvalidTopology(format!(
                "{} is not open",
                self.base.show(u)
            )));
        }
        Ok(bits::ones(u).collect())
    }

    /// `Γ⁰(U)`: continuous sections of the projection over a nonempty open
    /// `U`, one germ per point of `U` in point order.
    pub fn sections(&self, u: Bits) -> Result<Vec<Vec<usize>>> {
        let pts = self.point_list(u)?;
        let choices: Vec<Vec<Option<usize>>> = pts
            .iter()
            .map(|&x| bits::ones(self.stalk(x)).map(Some).collect())
            .collect();
        let mut out = Vec::new();
        for_each_choice(&choices, &mut |s| {
            if self.continuous_on(&pts, s) {
                out.push(s.iter().map(|g| g.expect("no missing values")).collect());
            }
        })?;
        Ok(out)
    }

    /// Continuity of a partial section into `E ∪ {∞}`, where the opens
    /// through `∞` are `{∞}` together with complements of closed sets.
    fn continuous_on(&self, pts: &[usize], s: &[Option<usize>]) -> bool {
        let pre = |pred: &dyn Fn(Option<usize>) -> bool| {
            pts.iter()
                .zip(s)
                .filter(|(_, g)| pred(**g))
                .fold(0, |acc, (&x, _)| acc | bits::bit(x))
        };
        let germs_ok = (0..self.len()).all(|g| {
            let n = self.nbhd[g];
            self.base
                .is_open(pre(&|v| v.is_some_and(|h| bits::has(n, h))))
        });
        let infinity_ok = self.base.is_open(pre(&|v| v.is_none()));
        let cofinite_ok = (0..self.len()).all(|g| {
            let open_complement = bits::full(self.len()) & !self.closure(bits::bit(g));
            self.base.is_open(pre(&|v| match v {
                None => true,
                Some(h) => bits::has(open_complement, h),
            }))
        });
        germs_ok && infinity_ok && cofinite_ok
    }

    fn closure(&self, s: Bits) -> Bits {
        (0..self.len())
            .filter(|&g| self.nbhd[g] & s != 0)
            .fold(0, |acc, g| acc | bits::bit(g))
    }

    /// `Γ¹(U)`: sections into `E ∪ {∞}`, finite on an open dense subset of
    /// `U` where they are continuous sections. `None` stands for `∞`.
    pub fn gamma1_sections(&self, u: Bits) -> Result<Vec<Vec<Option<usize>>>> {
        if let Some(why) = self.ed_obstruction() {
            return Err(Error::NotExtremallyDisconnected(why));
        }
        self.gamma1_unchecked(u)
    }

    fn gamma1_unchecked(&self, u: Bits) -> Result<Vec<Vec<Option<usize>>>> {
        let pts = self.point_list(u)?;
        let choices: Vec<Vec<Option<usize>>> = pts
            .iter()
            .map(|&x| {
                let mut c: Vec<Option<usize>> = bits::ones(self.stalk(x)).map(Some).collect();
                c.push(None);
                c
            })
            .collect();
        let mut out = Vec::new();
        for_each_choice(&choices, &mut |s| {
            let finite = pts
                .iter()
                .zip(s)
                .filter(|(_, g)| g.is_some())
                .fold(0, |acc, (&x, _)| acc | bits::bit(x));
            if self.base.is_dense_in(self.base.interior(finite), u) && self.continuous_on(&pts, s) {
                out.push(s.to_vec());
            }
        })?;
        Ok(out)
    }

    fn section_name(&self, s: &[Option<usize>]) -> String {
        let parts: Vec<&str> = s
            .iter()
            .map(|g| g.map_or("∞", |g| self.germs[g].label.as_str()))
            .collect();
        format!("({})", parts.join(","))
    }

    /// `Γ¹` as a presheaf on `O(base)⁺`.
    pub fn gamma1(&self) -> Result<Presheaf> {
        if let Some(why) = self.ed_obstruction() {
            return Err(Error::NotExtremallyDisconnected(why));
        }
        self.gamma1_presheaf()
    }

    /// `Γ¹` without the bundle check. On a discrete base with empty stalks
    /// it is the product of the stalks.
    pub fn gamma1_presheaf(&self) -> Result<Presheaf> {
        let base = Base::opens(&self.base)?;
        let per_level: Vec<Vec<Vec<Option<usize>>>> = base
            .sets()
            .iter()
            .map(|&u| self.gamma1_unchecked(u))
            .collect::<Result<_>>()?;
        let mut restrict = BTreeMap::new();
        for lo in 0..base.len() {
            for hi in 0..base.len() {
                if !base.leq(lo, hi) {
                    continue;
                }
                let (ul, uh) = (base.sets()[lo], base.sets()[hi]);
                let keep: Vec<usize> = bits::ones(uh)
                    .enumerate()
                    .filter(|&(_, x)| bits::has(ul, x))
                    .map(|(i, _)| i)
                    .collect();
                let map = per_level[hi]
                    .iter()
                    .map(|s| {
                        let r: Vec<Option<usize>> = keep.iter().map(|&i| s[i]).collect();
                        per_level[lo].iter().position(|t| *t == r).ok_or_else(|| {
                            Error::InvalidPresheaf(
                                "restriction of a section is not a section".into(),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                restrict.insert((lo, hi), map);
            }
        }
        let names = per_level
            .iter()
            .map(|ss| ss.iter().map(|s| self.section_name(s)).collect())
            .collect();
        Presheaf::new(base, names, restrict)
    }

    /// `Γ^{1/2}`: `Γ¹` restricted to the regular open levels.
    pub fn gamma_half(&self) -> Result<Presheaf> {
        let g = self.gamma1()?;
        let levels: Vec<usize> = (0..g.base.len())
            .filter(|&i| self.base.is_regular_open(g.base.sets()[i]))
            .collect();
        g.restrict_to(&levels)
    }
}

fn for_each_choice<T: Copy>(choices: &[Vec<T>], f: &mut dyn FnMut(&[T])) -> Result<()> {
    let mut total: usize = 1;
    for c in choices {
        if c.is_empty() {
            return Ok(());
        }
        total = total
            .checked_mul(c.len())
            .filter(|&t| t <= SEARCH_LIMIT)
            .ok_or_else(|| Error::TooLarge("too many candidate sections".into()))?;
    }
    let mut idx = vec![0usize; choices.len()];
    let mut cur: Vec<T> = choices.iter().map(|c| c[0]).collect();
    loop {
        f(&cur);
        let mut done = true;
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                cur[k] = choices[k][idx[k]];
                done = false;
                break;
            }
            idx[k] = 0;
            cur[k] = choices[k][0];
        }
        if done {
            return Ok(());
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn require_space(f: &Presheaf) -> Result<&FinTop> {
    f.base.space().ok_or_else(|| {
        Error::InvalidPresheaf("expected a presheaf on the open sets of a space".into())
    })
}

fn germ_labels(f: &Presheaf, point_label: &str, reps: &[(usize, usize)]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &(lvl, s) in reps {
        let mut l = format!("{}@{point_label}", f.sections[lvl][s]);
        if out.contains(&l) {
            l = format!("{}|{}@{point_label}", f.sections[lvl][s], f.base.label(lvl));
        }
        let mut k = 1;
        while out.contains(&l) {
            l = format!("{}@{point_label}#{k}", f.sections[lvl][s]);
            k += 1;
        }
        out.push(l);
    }
    out
}

/// `Λ⁰(F)`: germs at points, with basic opens `ḟ[U]`.
pub fn lambda0(f: &Presheaf) -> Result<EtaleSpace> {
    let x = require_space(f)?;
    let base = &f.base;
    let mut germs = Vec::new();
    let mut germ_of: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for p in 0..x.len() {
        let cands: Vec<(usize, usize)> = (0..base.len())
            .filter(|&l| bits::has(base.sets[l], p))
            .flat_map(|l| (0..f.sections[l].len()).map(move |s| (l, s)))
            .collect();
        let mut uf = UnionFind::new(cands.len());
        for i in 0..cands.len() {
            for j in i + 1..cands.len() {
                let ((lf, sf), (lg, sg)) = (cands[i], cands[j]);
                let meet = base.sets[lf] & base.sets[lg];
                let agree = (0..base.len()).any(|w| {
                    bits::has(base.sets[w], p)
                        && bits::subset(base.sets[w], meet)
                        && f.res(w, lf, sf) == f.res(w, lg, sg)
                });
                if agree {
                    uf.union(i, j);
                }
            }
        }
        let mut reps = Vec::new();
        let mut rep_germ = BTreeMap::new();
        for i in 0..cands.len() {
            let r = uf.find(i);
            let next = germs.len() + reps.len();
            rep_germ.entry(r).or_insert_with(|| {
                reps.push(cands[r]);
                next
            });
            germ_of.insert((p, cands[i].0, cands[i].1), rep_germ[&r]);
        }
        for (&(level, section), label) in reps.iter().zip(germ_labels(f, x.label(p), &reps)) {
            germs.push(Germ {
                point: p,
                level,
                section,
                label,
            });
        }
    }
    let mut basic = Vec::new();
    for l in 0..base.len() {
        for s in 0..f.sections[l].len() {
            let set =
                bits::ones(base.sets[l]).fold(0, |acc, p| acc | bits::bit(germ_of[&(p, l, s)]));
            basic.push(set);
        }
    }
    EtaleSpace::new(x.clone(), germs, basic)
}

/// `Λ¹(F)` over `St(RO(X))` together with the algebra it was built from.
#[derive(Clone, Debug)]
pub struct Lambda1 {
    pub etale: EtaleSpace,
    pub ro: SetAlgebra,
    pub stone: StoneSpace,
    /// Whether the germ relation was already transitive before closing it.
    pub transitive: bool,
    /// `(atom, level, section)` to germ index, for every candidate.
    pub germ_of: BTreeMap<(usize, usize, usize), usize>,
}

/// `Λ¹(F)`: at the ultrafilter of each atom `a` of `RO(X)`, sections over
/// opens `U` with `a ≤ Reg U`, identified when they agree on a family
/// dense below some such `U`.
pub fn lambda1(f: &Presheaf) -> Result<Lambda1> {
    let x = require_space(f)?;
    let base = &f.base;
    let ro = x.ro_algebra();
    let stone = ro.algebra.stone_space();
    let regs: Vec<Bits> = base.sets.iter().map(|&u| x.regularize(u)).collect();
    let mut germs = Vec::new();
    let mut transitive = true;
    let mut germ_of: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (a, &atom) in ro.atoms().iter().enumerate() {
        let cands: Vec<(usize, usize)> = (0..base.len())
            .filter(|&l| bits::subset(atom, regs[l]))
            .flat_map(|l| (0..f.sections[l].len()).map(move |s| (l, s)))
            .collect();
        let n = cands.len();
        let mut rel = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                let ((lf, sf), (lg, sg)) = (cands[i], cands[j]);
                let meet = base.sets[lf] & base.sets[lg];
                let agree: Vec<usize> = (0..base.len())
                    .filter(|&v| {
                        bits::subset(base.sets[v], meet) && f.res(v, lf, sf) == f.res(v, lg, sg)
                    })
                    .collect();
                rel[i * n + j] = (0..base.len()).any(|u| {
                    bits::subset(atom, regs[u])
                        && bits::subset(base.sets[u], meet)
                        && (0..base.len())
                            .filter(|&q| bits::subset(base.sets[q], base.sets[u]))
                            .all(|q| agree.iter().any(|&v| base.sets[v] & base.sets[q] != 0))
                });
            }
        }
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in 0..n {
                if rel[i * n + j] {
                    uf.union(i, j);
                }
                for k in 0..n {
                    if rel[i * n + j] && rel[j * n + k] && !rel[i * n + k] {
                        transitive = false;
                    }
                }
            }
        }
        let mut reps = Vec::new();
        let mut rep_germ = BTreeMap::new();
        for i in 0..n {
            let r = uf.find(i);
            let next = germs.len() + reps.len();
            rep_germ.entry(r).or_insert_with(|| {
                reps.push(cands[r]);
                next
            });
            germ_of.insert((a, cands[i].0, cands[i].1), rep_germ[&r]);
        }
        for (&(level, section), label) in
            reps.iter().zip(germ_labels(f, ro.algebra.label(a), &reps))
        {
            germs.push(Germ {
                point: a,
                level,
                section,
                label,
            });
        }
    }
    let mut basic = Vec::new();
    for l in 0..base.len() {
        for s in 0..f.sections[l].len() {
            for q in ro.algebra.nonzero_elements() {
                if !bits::subset(ro.set_of(q), regs[l]) {
                    continue;
                }
                let set = ro
                    .algebra
                    .atoms_below(q)
                    .fold(0, |acc, a| acc | bits::bit(germ_of[&(a, l, s)]));
                basic.push(set);
            }
        }
    }
    basic.sort_unstable();
    basic.dedup();
    let etale = EtaleSpace::new(stone.space.clone(), germs, basic)?;
    Ok(Lambda1 {
        etale,
        ro,
        stone,
        transitive,
        germ_of,
    })
}

/// `(i, Θ)`: a complete homomorphism `i: RO(X₀) → RO(X₁)` and a natural
/// map `Θ: i_*(F₀) → F₁`, one component per level of `O(X₁)⁺`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresheafMorphism {
    pub hom: BAHom,
    pub components: Vec<Vec<usize>>,
}

/// `i_*(F₀)` on `O(X₁)⁺`: `U ↦ F₀(π_i(Reg U))`.
pub fn push_forward(hom: &BAHom, f0: &Presheaf, x1: &FinTop) -> Result<Presheaf> {
    let x0 = require_space(f0)?;
    let (ro0, ro1) = (x0.ro_algebra(), x1.ro_algebra());
    if *hom.source() != ro0.algebra || *hom.target() != ro1.algebra {
        return Err(Error::InvalidMorphism(
            "homomorphism does not run between the regular open algebras".into(),
        ));
    }
    let base1 = Base::opens(x1)?;
    let target_level = |u: Bits| -> Result<usize> {
        let r = ro1.elem_of(x1.regularize(u))?;
        let v = ro0.set_of(hom.left_adjoint(r));
        f0.base
            .level_of_set(v)
            .ok_or_else(|| Error::InvalidMorphism("adjoint image is not a level".into()))
    };
    let lv: Vec<usize> = base1
        .sets()
        .iter()
        .map(|&u| target_level(u))
        .collect::<Result<_>>()?;
    let sections = lv.iter().map(|&l| f0.sections[l].clone()).collect();
    let mut restrict = BTreeMap::new();
    for a in 0..base1.len() {
        for b in 0..base1.len() {
            if base1.leq(a, b) {
                restrict.insert((a, b), f0.restrict[&(lv[a], lv[b])].clone());
            }
        }
    }
    Presheaf::new(base1, sections, restrict)
}

/// `ext(F↾RO(X))`: `U ↦ F(Reg U)`, restrictions by composition.
pub fn ext_regular(f: &Presheaf) -> Result<Presheaf> {
    let x = require_space(f)?;
    let ro = x.ro_algebra();
    push_forward(&BAHom::identity(&ro.algebra), f, x)
}

/// Checks the shape and naturality of a morphism `F₀ → F₁`.
pub fn validate_morphism(f0: &Presheaf, f1: &Presheaf, m: &PresheafMorphism) -> Result<()> {
    let x1 = require_space(f1)?;
    let lifted = push_forward(&m.hom, f0, x1)?;
    let b = &f1.base;
    if m.components.len() != b.len() {
        return Err(Error::InvalidMorphism(
            "one component per level is needed".into(),
        ));
    }
    for q in 0..b.len() {
        let c = &m.components[q];
        if c.len() != lifted.sections[q].len() || c.iter().any(|&t| t >= f1.sections[q].len()) {
            return Err(Error::InvalidMorphism(format!(
                "component at {} has the wrong shape",
                b.label(q)
            )));
        }
    }
    for lo in 0..b.len() {
        for hi in 0..b.len() {
            if !b.leq(lo, hi) {
                continue;
            }
            for s in 0..lifted.sections[hi].len() {
                if m.components[lo][lifted.res(lo, hi, s)] != f1.res(lo, hi, m.components[hi][s]) {
                    return Err(Error::Naturality {
                        lower: b.label(lo).to_string(),
                        upper: b.label(hi).to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// `(j, Ψ) ∘ (i, Θ) = (j ∘ i, Ψ ∘ j_*Θ)`.
pub fn compose(
    first: &PresheafMorphism,
    second: &PresheafMorphism,
    f1: &Presheaf,
    f2: &Presheaf,
) -> Result<PresheafMorphism> {
    let (x1, x2) = (require_space(f1)?, require_space(f2)?);
    let (ro1, ro2) = (x1.ro_algebra(), x2.ro_algebra());
    let hom = first.hom.then(&second.hom)?;
    let mut components = Vec::with_capacity(f2.base.len());
    for (w, &set) in f2.base.sets().iter().enumerate() {
        let r = ro2.elem_of(x2.regularize(set))?;
        let v = ro1.set_of(second.hom.left_adjoint(r));
        let lv = f1
            .base
            .level_of_set(v)
            .ok_or_else(|| Error::InvalidMorphism("adjoint image is not a level".into()))?;
        components.push(
            first.components[lv]
                .iter()
                .map(|&s| second.components[w][s])
                .collect(),
        );
    }
    Ok(PresheafMorphism { hom, components })
}

/// Every morphism `F₀ → F₁`.
pub fn enumerate_morphisms(f0: &Presheaf, f1: &Presheaf) -> Result<Vec<PresheafMorphism>> {
    let (x0, x1) = (require_space(f0)?, require_space(f1)?);
    let (ro0, ro1) = (x0.ro_algebra(), x1.ro_algebra());
    let mut out = Vec::new();
    for hom in BAHom::all(&ro0.algebra, &ro1.algebra) {
        let lifted = push_forward(&hom, f0, x1)?;
        let order: Vec<usize> = f1.base.bottom_up().into_iter().rev().collect();
        let mut comps: Vec<Option<Vec<usize>>> = vec![None; f1.base.len()];
        natural_maps(&lifted, f1, &order, 0, &mut comps, &mut |c| {
            out.push(PresheafMorphism {
                hom: hom.clone(),
                components: c.iter().map(|x| x.clone().expect("assigned")).collect(),
            });
        })?;
        if out.len() > SEARCH_LIMIT {
            return Err(Error::TooLarge("too many morphisms".into()));
        }
    }
    Ok(out)
}

/// A component under construction.
type Partial = Option<Vec<usize>>;

fn natural_maps(
    src: &Presheaf,
    dst: &Presheaf,
    order: &[usize],
    k: usize,
    comps: &mut [Partial],
    emit: &mut dyn FnMut(&[Partial]),
) -> Result<()> {
    if k == order.len() {
        emit(comps);
        return Ok(());
    }
    let q = order[k];
    let (m, n) = (src.sections[q].len(), dst.sections[q].len());
    let choices: Vec<Vec<usize>> = (0..m).map(|_| (0..n).collect()).collect();
    let mut candidates = Vec::new();
    if m == 0 {
        candidates.push(Vec::new());
    } else {
        for_each_choice(&choices, &mut |c| candidates.push(c.to_vec()))?;
    }
    let b = &src.base;
    for cand in candidates {
        let ok = order[..k].iter().all(|&r| {
            let other = comps[r].as_ref().expect("assigned");
            let (lo, hi, clo, chi) = if b.leq(q, r) {
                (q, r, &cand, other)
            } else if b.leq(r, q) {
                (r, q, other, &cand)
            } else {
                return true;
            };
            (0..src.sections[hi].len()).all(|s| clo[src.res(lo, hi, s)] == dst.res(lo, hi, chi[s]))
        });
        if ok {
            comps[q] = Some(cand);
            natural_maps(src, dst, order, k + 1, comps, emit)?;
            comps[q] = None;
        }
    }
    Ok(())
}

/// `Γ¹Λ¹(F)` with the unit `η: F → Γ¹Λ¹(F)`.
#[derive(Clone, Debug)]
pub struct Sheafification {
    pub sheaf: Presheaf,
    pub lambda1: Lambda1,
    pub unit: PresheafMorphism,
}

/// Sheafifies a presheaf on `O(X)⁺` over `St(RO(X))`.
pub fn sheafify(f: &Presheaf) -> Result<Sheafification> {
    let l1 = lambda1(f)?;
    let sheaf = l1.etale.gamma1_presheaf()?;
    let st = &l1.stone.space;
    let ro_st = st.ro_algebra();
    let hom = BAHom::new(
        l1.ro.algebra.clone(),
        ro_st.algebra.clone(),
        (0..l1.ro.algebra.len()).collect(),
    )?;
    let lifted = push_forward(&hom, f, st)?;
    let mut components = Vec::with_capacity(sheaf.base.len());
    for (w, &set) in sheaf.base.sets().iter().enumerate() {
        let v = l1.ro.set_of(l1.ro.algebra.elem(set)?);
        let level = f
            .base
            .level_of_set(v)
            .ok_or_else(|| Error::InvalidPresheaf("regular open is not a level".into()))?;
        let comp = (0..f.sections[level].len())
            .map(|s| {
                let tuple: Vec<Option<usize>> = bits::ones(set)
                    .map(|a| l1.germ_of.get(&(a, level, s)).copied())
                    .collect();
                let name = l1.etale.section_name(&tuple);
                sheaf.section_index(w, &name).ok_or_else(|| {
                    Error::InvalidPresheaf("unit lands outside the sheafification".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        components.push(comp);
    }
    debug_assert_eq!(lifted.sections.len(), components.len());
    Ok(Sheafification {
        sheaf,
        lambda1: l1,
        unit: PresheafMorphism { hom, components },
    })
}

#[derive(Clone, Debug)]
pub struct UniversalReport {
    pub morphisms: usize,
    pub factorizations: Vec<usize>,
}

impl UniversalReport {
    /// Every morphism into the target factors uniquely through the unit.
    pub fn holds(&self) -> bool {
        self.factorizations.iter().all(|&c| c == 1)
    }
}

/// For every morphism `Θ: F → S`, counts the morphisms
/// `Ψ: Γ¹Λ¹F → S` with `Ψ ∘ η = Θ`.
pub fn check_universal_property(f: &Presheaf, s: &Presheaf) -> Result<UniversalReport> {
    let xs = require_space(s)?;
    if !xs.is_discrete() {
        return Err(Error::InvalidPresheaf(
            "the target must live on a discrete space".into(),
        ));
    }
    if !is_stonean_sheaf(s) {
        return Err(Error::InvalidPresheaf(
            "the target is not a stonean sheaf".into(),
        ));
    }
    let sh = sheafify(f)?;
    let thetas = enumerate_morphisms(f, s)?;
    let psis = enumerate_morphisms(&sh.sheaf, s)?;
    let composites: Vec<PresheafMorphism> = psis
        .iter()
        .map(|p| compose(&sh.unit, p, &sh.sheaf, s))
        .collect::<Result<_>>()?;
    let factorizations = thetas
        .iter()
        .map(|t| composites.iter().filter(|c| *c == t).count())
        .collect();
    Ok(UniversalReport {
        morphisms: thetas.len(),
        factorizations,
    })
}

/// Level-wise bijections `F(q) → G(level_map[q])` commuting with all
/// restrictions, if any exist. `level_map` must be an order isomorphism.
pub fn find_isomorphism(
    f: &Presheaf,
    g: &Presheaf,
    level_map: &[usize],
) -> Option<Vec<Vec<usize>>> {
    let n = f.base.len();
    if level_map.len() != n || g.base.len() != n {
        return None;
    }
    for a in 0..n {
        for b in 0..n {
            if f.base.leq(a, b) != g.base.leq(level_map[a], level_map[b]) {
                return None;
            }
        }
        if f.sections[a].len() != g.sections[level_map[a]].len() {
            return None;
        }
    }
    let order = f.base.bottom_up();
    let mut maps: Vec<Option<Vec<usize>>> = vec![None; n];
    if iso_search(f, g, level_map, &order, 0, &mut maps) {
        Some(maps.into_iter().map(|m| m.expect("assigned")).collect())
    } else {
        None
    }
}

fn iso_search(
    f: &Presheaf,
    g: &Presheaf,
    lm: &[usize],
    order: &[usize],
    k: usize,
    maps: &mut Vec<Option<Vec<usize>>>,
) -> bool {
    if k == order.len() {
        return true;
    }
    let q = order[k];
    let m = f.sections[q].len();
    let cands: Vec<Vec<usize>> = (0..m)
        .map(|s| {
            (0..m)
                .filter(|&t| {
                    order[..k].iter().all(|&r| {
                        let mr = maps[r].as_ref().expect("assigned");
                        if f.base.leq(r, q) {
                            mr[f.res(r, q, s)] == g.res(lm[r], lm[q], t)
                        } else {
                            true
                        }
                    })
                })
                .collect()
        })
        .collect();
    let mut cur = vec![usize::MAX; m];
    let mut used = vec![false; m];
    fn assign(
        s: usize,
        cands: &[Vec<usize>],
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        rest: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if s == cands.len() {
            return rest(cur);
        }
        for &t in &cands[s] {
            if !used[t] {
                used[t] = true;
                cur[s] = t;
                if assign(s + 1, cands, cur, used, rest) {
                    return true;
                }
                used[t] = false;
            }
        }
        false
    }
    assign(0, &cands, &mut cur, &mut used, &mut |c| {
        maps[q] = Some(c.to_vec());
        if iso_search(f, g, lm, order, k + 1, maps) {
            return true;
        }
        maps[q] = None;
        false
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn sierpinski() -> FinTop {
        FinTop::new(["0", "1"], [0b00, 0b10, 0b11]).unwrap()
    }

    /// `F(S) = {s}`, `F({1}) = {t, u}`, `s ↦ t`.
    pub fn sierpinski_presheaf() -> Presheaf {
        let base = Base::opens(&sierpinski()).unwrap();
        let one = base.level_of_set(0b10).unwrap();
        let all = base.level_of_set(0b11).unwrap();
        let mut sections = vec![Vec::new(); 2];
        sections[one] = vec!["t".to_string(), "u".to_string()];
        sections[all] = vec!["s".to_string()];
        let mut r = BTreeMap::new();
        r.insert((one, all), vec![0]);
        Presheaf::new(base, sections, r).unwrap()
    }

    /// Sections over `U` are all functions `U → values`.
    pub fn functions(x: &FinTop, values: usize) -> Presheaf {
        let base = Base::opens(x).unwrap();
        let mut sections = Vec::new();
        let mut funcs = Vec::new();
        for &u in base.sets() {
            let pts: Vec<usize> = bits::ones(u).collect();
            let fs = crate::logic::tuples(values, pts.len());
            sections.push(
                fs.iter()
                    .map(|f| {
                        let p: Vec<String> = f.iter().map(|v| v.to_string()).collect();
                        p.join("")
                    })
                    .collect(),
            );
            funcs.push((pts, fs));
        }
        let mut r = BTreeMap::new();
        for lo in 0..base.len() {
            for hi in 0..base.len() {
                if !base.leq(lo, hi) {
                    continue;
                }
                let (pl, fl) = &funcs[lo];
                let (ph, fh) = &funcs[hi];
                let map = fh
                    .iter()
                    .map(|f| {
                        let g: Vec<usize> = pl
                            .iter()
                            .map(|p| f[ph.iter().position(|q| q == p).unwrap()])
                            .collect();
                        fl.iter().position(|h| *h == g).unwrap()
                    })
                    .collect();
                r.insert((lo, hi), map);
            }
        }
        Presheaf::new(base, sections, r).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn functoriality_is_enforced() {
        let base = Base::opens(&sierpinski()).unwrap();
        let mut r = BTreeMap::new();
        r.insert((0, 1), vec![5]);
        let bad = Presheaf::new(base.clone(), vec![vec!["t".into()], vec!["s".into()]], r);
        assert!(matches!(bad, Err(Error::InvalidPresheaf(_))));
        let missing = Presheaf::new(
            base,
            vec![vec!["t".into()], vec!["s".into()]],
            BTreeMap::new(),
        );
        assert!(missing.is_err());
    }

    #[test]
    fn sierpinski_presheaf_is_separated_not_stonean() {
        let f = sierpinski_presheaf();
        let dense = check_sheaf(&f, Coverage::Dense);
        assert!(dense.is_separated());
        let w = dense.missing.expect("family without collation");
        assert_eq!(f.base().label(w.level), "{0,1}");
        assert!(!is_stonean_sheaf(&f));
        assert!(is_topological_sheaf(&f));
    }

    #[test]
    fn sierpinski_lambda1_has_two_germs() {
        let l1 = lambda1(&sierpinski_presheaf()).unwrap();
        assert_eq!(l1.etale.base().len(), 1);
        assert_eq!(l1.etale.len(), 2);
        assert!(l1.transitive);
        let sh = sheafify(&sierpinski_presheaf()).unwrap();
        assert_eq!(sh.sheaf.sections(0).len(), 2);
        validate_morphism(&sierpinski_presheaf(), &sh.sheaf, &sh.unit).unwrap();
    }

    #[test]
    fn function_presheaves_are_stonean_on_discrete_spaces() {
        let x = FinTop::discrete(["a", "b"]).unwrap();
        let f = functions(&x, 2);
        assert!(is_stonean_sheaf(&f));
        let e = lambda0(&f).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.is_local_homeomorphism());
        assert!(e.proj_is_continuous());
        assert!(e.is_hausdorff());
        assert_eq!(e.sections(0b11).unwrap().len(), 4);
        assert!(e.sections(0).is_err());
    }

    #[test]
    fn sheafify_of_a_sheaf_on_a_discrete_space_is_isomorphic() {
        let x = FinTop::discrete(["a", "b"]).unwrap();
        let f = functions(&x, 2);
        let sh = sheafify(&f).unwrap();
        let lm: Vec<usize> = (0..f.base().len()).collect();
        assert!(find_isomorphism(&f, &sh.sheaf, &lm).is_some());
    }

    #[test]
    fn gamma1_rejects_a_non_hausdorff_base() {
        let f = functions(&sierpinski(), 2);
        let e = lambda0(&f).unwrap();
        assert!(matches!(
            e.gamma1(),
            Err(Error::NotExtremallyDisconnected(_))
        ));
    }

    fn pair_presheaf() -> Presheaf {
        let x = FinTop::discrete(["a", "b"]).unwrap();
        let base = Base::opens(&x).unwrap();
        let (a, b, ab) = (
            base.level_of_set(0b01).unwrap(),
            base.level_of_set(0b10).unwrap(),
            base.level_of_set(0b11).unwrap(),
        );
        let mut sections = vec![Vec::new(); 3];
        sections[a] = vec!["p".to_string(), "q".to_string()];
        sections[b] = vec!["r".to_string()];
        sections[ab] = vec!["s".to_string()];
        let mut r = BTreeMap::new();
        r.insert((a, ab), vec![0]);
        r.insert((b, ab), vec![0]);
        Presheaf::new(base, sections, r).unwrap()
    }

    #[test]
    fn sheafify_fills_in_missing_collations() {
        let f = pair_presheaf();
        assert!(!is_stonean_sheaf(&f));
        let sh = sheafify(&f).unwrap();
        assert!(is_stonean_sheaf(&sh.sheaf));
        let top = sh.sheaf.base().top().unwrap();
        assert_eq!(sh.sheaf.sections(top).len(), 2);
    }

    #[test]
    fn universal_property_on_a_discrete_space() {
        let f = pair_presheaf();
        let target = functions(&FinTop::discrete(["z"]).unwrap(), 2);
        let r = check_universal_property(&f, &target).unwrap();
        assert!(r.morphisms > 0);
        assert!(r.holds());
    }

    #[test]
    fn universal_property_fails_when_opens_are_not_regular() {
        let target = functions(&FinTop::discrete(["z"]).unwrap(), 2);
        let r = check_universal_property(&sierpinski_presheaf(), &target).unwrap();
        assert_eq!(r.morphisms, 2);
        assert_eq!(r.factorizations, vec![2, 2]);
        assert!(!r.holds());
    }

    #[test]
    fn sierpinski_lambda0() {
        let e = lambda0(&sierpinski_presheaf()).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(bits::count(e.stalk(1)), 2);
        assert!(e.proj_is_continuous());
        assert!(e.is_local_homeomorphism());
        assert!(!e.is_hausdorff());
    }

    #[test]
    fn morphisms_compose_naturally() {
        let f = pair_presheaf();
        let sh = sheafify(&f).unwrap();
        let target = functions(&FinTop::discrete(["z"]).unwrap(), 2);
        for psi in enumerate_morphisms(&sh.sheaf, &target).unwrap() {
            validate_morphism(&sh.sheaf, &target, &psi).unwrap();
            let c = compose(&sh.unit, &psi, &sh.sheaf, &target).unwrap();
            validate_morphism(&f, &target, &c).unwrap();
        }
    }
}
