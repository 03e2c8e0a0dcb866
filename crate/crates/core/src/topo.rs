//! Finite topological spaces, regular open algebras, finite posets and
//! their boolean completions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::balg::{BAHom, BoolAlg, Elem};
use crate::bits::{self, Bits};
use crate::{Error, Result};

fn check_labels(what: &str, labels: &[String]) -> Result<(), String> {
    if labels.is_empty() {
        return Err(format!("a {what} needs at least one point"));
    }
    if labels.len() > bits::CAPACITY {
        return Err(format!(
            "{} points exceeds the limit of {}",
            labels.len(),
            bits::CAPACITY
        ));
    }
    let mut seen = BTreeSet::new();
    for l in labels {
        if l.is_empty() {
            return Err("empty point label".into());
        }
        if !seen.insert(l.as_str()) {
            return Err(format!("duplicate point `{l}`"));
        }
    }
    Ok(())
}

/// Curly-brace set notation over the given labels.
pub fn show_set(labels: &[String], s: Bits) -> String {
    let parts: Vec<&str> = bits::ones(s).map(|i| labels[i].as_str()).collect();
    format!("{{{}}}", parts.join(","))
}

/// A topology on at most 64 labelled points, stored as its sorted list of
/// open sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinTop {
    points: Vec<String>,
    opens: Vec<Bits>,
}

impl FinTop {
    /// Validates that `opens` contains `∅` and the whole space and is
    /// closed under unions and intersections.
    pub fn new<S: Into<String>>(
        points: impl IntoIterator<Item = S>,
        opens: impl IntoIterator<Item = Bits>,
    ) -> Result<Self> {
        let points: Vec<String> = points.into_iter().map(Into::into).collect();
        check_labels("space", &points).map_err(Error::InvalidTopology)?;
        let all = bits::full(points.len());
        let mut set = BTreeSet::new();
        for o in opens {
            if !bits::subset(o, all) {
                return Err(Error::NotASubset(o));
            }
            set.insert(o);
        }
        let show = |s| show_set(&points, s);
        if !set.contains(&0) {
            return Err(Error::InvalidTopology("the empty set is not open".into()));
        }
        if !set.contains(&all) {
            return Err(Error::InvalidTopology("the whole space is not open".into()));
        }
        for &u in &set {
            for &v in &set {
                if !set.contains(&(u | v)) {
                    return Err(Error::InvalidTopology(format!(
                        "union of {} and {} is not open",
                        show(u),
                        show(v)
                    )));
                }
                if !set.contains(&(u & v)) {
                    return Err(Error::InvalidTopology(format!(
                        "intersection of {} and {} is not open",
                        show(u),
                        show(v)
                    )));
                }
            }
        }
        Ok(FinTop {
            points,
            opens: set.into_iter().collect(),
        })
    }

    /// The topology generated by a subbasis.
    pub fn generated<S: Into<String>>(
        points: impl IntoIterator<Item = S>,
        subbasis: impl IntoIterator<Item = Bits>,
    ) -> Result<Self> {
        let points: Vec<String> = points.into_iter().map(Into::into).collect();
        check_labels("space", &points).map_err(Error::InvalidTopology)?;
        let all = bits::full(points.len());
        let mut set: BTreeSet<Bits> = [0, all].into_iter().collect();
        for s in subbasis {
            if !bits::subset(s, all) {
                return Err(Error::NotASubset(s));
            }
            set.insert(s);
        }
        loop {
            let cur: Vec<Bits> = set.iter().copied().collect();
            let before = set.len();
            for &u in &cur {
                for &v in &cur {
                    set.insert(u | v);
                    set.insert(u & v);
                }
            }
            if set.len() == before {
                break;
            }
        }
        Ok(FinTop {
            points,
            opens: set.into_iter().collect(),
        })
    }

    pub fn discrete<S: Into<String>>(points: impl IntoIterator<Item = S>) -> Result<Self> {
        let points: Vec<String> = points.into_iter().map(Into::into).collect();
        let n = points.len();
        Self::generated(points, (0..n.min(bits::CAPACITY)).map(bits::bit))
    }

    pub fn indiscrete<S: Into<String>>(points: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::generated(points, core::iter::empty())
    }

    /// Every topology on the points `0, ..., n-1`, for `1 ≤ n ≤ 4`.
    pub fn all(n: usize) -> Result<Vec<FinTop>> {
        if n == 0 || n > 4 {
            return Err(Error::TooLarge(format!(
                "enumerating all topologies supports 1 to 4 points, not {n}"
            )));
        }
        let all = bits::full(n);
        let middle: Vec<Bits> = (1..all).collect();
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut out = Vec::new();
        for fam in 0u64..(1u64 << middle.len()) {
            let mut opens: Vec<Bits> = bits::ones(fam).map(|i| middle[i]).collect();
            opens.push(0);
            opens.push(all);
            let closed = opens.iter().all(|&u| {
                opens
                    .iter()
                    .all(|&v| opens.contains(&(u | v)) && opens.contains(&(u & v)))
            });
            if closed {
                opens.sort_unstable();
                out.push(FinTop {
                    points: labels.clone(),
                    opens,
                });
            }
        }
        Ok(out)
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

    pub fn label(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn point_index(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn set_from_labels<I, S>(&self, labels: I) -> Result<Bits>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut s = 0;
        for l in labels {
            let l = l.as_ref();
            let i = self
                .point_index(l)
                .ok_or_else(|| Error::InvalidTopology(format!("unknown point `{l}`")))?;
            s |= bits::bit(i);
        }
        Ok(s)
    }

    pub fn show(&self, s: Bits) -> String {
        show_set(&self.points, s)
    }

    /// Open sets in increasing bit order.
    pub fn opens(&self) -> &[Bits] {
        &self.opens
    }

    /// Nonempty open sets in increasing bit order.
    pub fn nonempty_opens(&self) -> &[Bits] {
        &self.opens[1..]
    }

    pub fn full(&self) -> Bits {
        bits::full(self.len())
    }

    pub fn check_subset(&self, s: Bits) -> Result<()> {
        if bits::subset(s, self.full()) {
            Ok(())
        } else {
            Err(Error::NotASubset(s))
        }
    }

    pub fn is_open(&self, s: Bits) -> bool {
        self.opens.binary_search(&s).is_ok()
    }

    pub fn is_closed(&self, s: Bits) -> bool {
        self.is_open(self.full() & !s)
    }

    pub fn is_clopen(&self, s: Bits) -> bool {
        self.is_open(s) && self.is_closed(s)
    }

    pub fn interior(&self, s: Bits) -> Bits {
        self.opens
            .iter()
            .filter(|&&o| bits::subset(o, s))
            .fold(0, |acc, &o| acc | o)
    }

    pub fn closure(&self, s: Bits) -> Bits {
        self.full() & !self.interior(self.full() & !s)
    }

    /// `Reg A = Int(Cl A)`.
    pub fn regularize(&self, s: Bits) -> Bits {
        self.interior(self.closure(s))
    }

    /// `Reg A` via its pointwise description: the points with an open
    /// neighbourhood `U` in which `A ∩ U` is dense.
    pub fn regularize_pointwise(&self, s: Bits) -> Bits {
        (0..self.len())
            .filter(|&x| {
                self.opens
                    .iter()
                    .any(|&u| bits::has(u, x) && self.is_dense_in(s & u, u))
            })
            .fold(0, |acc, x| acc | bits::bit(x))
    }

    pub fn is_regular_open(&self, s: Bits) -> bool {
        self.is_open(s) && self.regularize(s) == s
    }

    pub fn regular_opens(&self) -> Vec<Bits> {
        self.opens
            .iter()
            .copied()
            .filter(|&u| self.regularize(u) == u)
            .collect()
    }

    pub fn clopens(&self) -> Vec<Bits> {
        self.opens
            .iter()
            .copied()
            .filter(|&u| self.is_closed(u))
            .collect()
    }

    /// Closures of open sets are open, equivalently every regular open set
    /// is clopen.
    pub fn is_extremally_disconnected(&self) -> bool {
        self.opens.iter().all(|&u| self.is_open(self.closure(u)))
    }

    /// The smallest open set containing `x`.
    pub fn min_nbhd(&self, x: usize) -> Bits {
        self.opens
            .iter()
            .filter(|&&u| bits::has(u, x))
            .fold(self.full(), |acc, &u| acc & u)
    }

    pub fn is_discrete(&self) -> bool {
        (0..self.len()).all(|x| self.min_nbhd(x) == bits::bit(x))
    }

    pub fn is_hausdorff(&self) -> bool {
        (0..self.len()).all(|x| {
            (0..self.len()).filter(|&y| y != x).all(|y| {
                self.opens.iter().any(|&u| {
                    bits::has(u, x) && self.opens.iter().any(|&v| bits::has(v, y) && u & v == 0)
                })
            })
        })
    }

    /// `a` is dense in `u` (as a subspace): every nonempty open subset of
    /// `u` meets `a`.
    pub fn is_dense_in(&self, a: Bits, u: Bits) -> bool {
        self.opens
            .iter()
            .all(|&v| v == 0 || !bits::subset(v, u) || v & a != 0)
    }

    pub fn is_dense(&self, a: Bits) -> bool {
        self.closure(a) == self.full()
    }

    pub fn is_nowhere_dense(&self, a: Bits) -> bool {
        self.interior(self.closure(a)) == 0
    }

    /// The subspace on `s`, with the indices of its points in `self`.
    pub fn subspace(&self, s: Bits) -> Result<(FinTop, Vec<usize>)> {
        self.check_subset(s)?;
        let idx: Vec<usize> = bits::ones(s).collect();
        let squash = |u: Bits| {
            idx.iter()
                .enumerate()
                .filter(|&(_, &p)| bits::has(u, p))
                .fold(0, |acc, (j, _)| acc | bits::bit(j))
        };
        let opens: Vec<Bits> = self.opens.iter().map(|&u| squash(u & s)).collect();
        let t = FinTop::new(idx.iter().map(|&i| self.points[i].clone()), opens)?;
        Ok((t, idx))
    }

    /// `RO(X)` as a boolean algebra whose atoms are the minimal nonempty
    /// regular open sets.
    pub fn ro_algebra(&self) -> SetAlgebra {
        SetAlgebra::build(self, self.regular_opens(), true)
    }

    /// `CLOP(X)`, atoms the minimal nonempty clopen sets.
    pub fn clop_algebra(&self) -> SetAlgebra {
        SetAlgebra::build(self, self.clopens(), false)
    }
}

/// A boolean algebra realised as a family of subsets of a space: either
/// `RO(X)` with regularized joins, or `CLOP(X)` with plain unions.
#[derive(Clone, Debug)]
pub struct SetAlgebra {
    pub algebra: BoolAlg,
    atoms: Vec<Bits>,
    regular: bool,
    space: FinTop,
}

impl SetAlgebra {
    fn build(space: &FinTop, members: Vec<Bits>, regular: bool) -> Self {
        let atoms: Vec<Bits> = members
            .iter()
            .copied()
            .filter(|&u| {
                u != 0
                    && !members
                        .iter()
                        .any(|&v| v != 0 && v != u && bits::subset(v, u))
            })
            .collect();
        let labels = atoms.iter().map(|&a| {
            if bits::count(a) == 1 {
                space.points[a.trailing_zeros() as usize].clone()
            } else {
                space.show(a)
            }
        });
        let algebra = BoolAlg::new(labels).expect("atoms are distinct nonempty sets");
        SetAlgebra {
            algebra,
            atoms,
            regular,
            space: space.clone(),
        }
    }

    pub fn space(&self) -> &FinTop {
        &self.space
    }

    pub fn atoms(&self) -> &[Bits] {
        &self.atoms
    }

    pub fn is_regular_open_algebra(&self) -> bool {
        self.regular
    }

    /// The subset of the space representing `e`.
    pub fn set_of(&self, e: Elem) -> Bits {
        let u = self
            .algebra
            .atoms_below(e)
            .fold(0, |acc, i| acc | self.atoms[i]);
        if self.regular {
            self.space.regularize(u)
        } else {
            u
        }
    }

    /// The element whose set is `s`; fails unless `s` is a member.
    pub fn elem_of(&self, s: Bits) -> Result<Elem> {
        let b = self
            .atoms
            .iter()
            .enumerate()
            .filter(|&(_, &a)| bits::subset(a, s))
            .fold(0, |acc, (i, _)| acc | bits::bit(i));
        let e = self.algebra.elem(b)?;
        if self.set_of(e) != s {
            let kind = if self.regular {
                "regular open"
            } else {
                "clopen"
            };
            return Err(Error::InvalidElement(format!(
                "{} is not {kind}",
                self.space.show(s)
            )));
        }
        Ok(e)
    }

    /// All members as sets, in element order.
    pub fn members(&self) -> Vec<Bits> {
        self.algebra.elements().map(|e| self.set_of(e)).collect()
    }

    /// Checks that the algebra operations agree with the set-theoretic
    /// ones: joins are regularized unions (of every subfamily, for up to 16
    /// members), meets are intersections and complements are exteriors.
    pub fn check_laws(&self) -> core::result::Result<(), String> {
        let sp = &self.space;
        let expected = if self.regular {
            sp.regular_opens()
        } else {
            sp.clopens()
        };
        let mut got = self.members();
        got.sort_unstable();
        if got != expected {
            return Err("members are not exactly the expected sets".into());
        }
        let els: Vec<Elem> = self.algebra.elements().collect();
        let fix = |s: Bits| if self.regular { sp.regularize(s) } else { s };
        for &a in &els {
            let ua = self.set_of(a);
            if self.elem_of(ua).map(|e| e != a).unwrap_or(true) {
                return Err(format!("{} does not round-trip", sp.show(ua)));
            }
            let exterior = sp.full() & !sp.closure(ua);
            if self.set_of(self.algebra.complement(a)) != exterior {
                return Err(format!("complement of {} is not its exterior", sp.show(ua)));
            }
            for &b in &els {
                let ub = self.set_of(b);
                if self.set_of(self.algebra.join(a, b)) != fix(ua | ub) {
                    return Err(format!(
                        "join of {} and {} is wrong",
                        sp.show(ua),
                        sp.show(ub)
                    ));
                }
                if self.set_of(self.algebra.meet(a, b)) != ua & ub {
                    return Err(format!(
                        "meet of {} and {} is wrong",
                        sp.show(ua),
                        sp.show(ub)
                    ));
                }
            }
        }
        if els.len() <= 16 {
            for fam in 0u64..(1u64 << els.len()) {
                let chosen = bits::ones(fam).map(|i| els[i]);
                let j = self.set_of(self.algebra.join_all(chosen));
                let u = bits::ones(fam).fold(0, |acc, i| acc | self.set_of(els[i]));
                if j != fix(u) {
                    return Err(format!("join of family {fam:#x} is wrong"));
                }
            }
        }
        Ok(())
    }
}

/// A finite partial order on at most 64 labelled elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinPoset {
    elements: Vec<String>,
    /// `down[i]` is the set of `j` with `j ≤ i`.
    down: Vec<Bits>,
}

impl FinPoset {
    /// Builds the reflexive transitive closure of `pairs` (`(a, b)` meaning
    /// `a ≤ b`) and rejects it if antisymmetry fails.
    pub fn new<S: Into<String>>(
        elements: impl IntoIterator<Item = S>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        check_labels("poset", &elements).map_err(Error::InvalidPoset)?;
        let n = elements.len();
        let mut down: Vec<Bits> = (0..n).map(bits::bit).collect();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidPoset(format!(
                    "pair ({a}, {b}) refers to a missing element"
                )));
            }
            down[b] |= bits::bit(a);
        }
        loop {
            let mut changed = false;
            for i in 0..n {
                let mut d = down[i];
                for j in bits::ones(down[i]) {
                    d |= down[j];
                }
                if d != down[i] {
                    down[i] = d;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..n {
            for j in bits::ones(down[i]) {
                if j != i && bits::has(down[j], i) {
                    return Err(Error::InvalidPoset(format!(
                        "antisymmetry fails: {} and {} are below each other",
                        elements[i], elements[j]
                    )));
                }
            }
        }
        Ok(FinPoset { elements, down })
    }

    pub fn from_labels<S: Into<String>>(
        elements: impl IntoIterator<Item = S>,
        pairs: &[(&str, &str)],
    ) -> Result<Self> {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        let find = |l: &str| {
            elements
                .iter()
                .position(|e| e == l)
                .ok_or_else(|| Error::InvalidPoset(format!("unknown element `{l}`")))
        };
        let mut idx = Vec::new();
        for (a, b) in pairs {
            idx.push((find(a)?, find(b)?));
        }
        Self::new(elements, idx)
    }

    /// Every partial order on the elements `0, ..., n-1`, for `1 ≤ n ≤ 4`.
    pub fn all(n: usize) -> Result<Vec<FinPoset>> {
        if n == 0 || n > 4 {
            return Err(Error::TooLarge(format!(
                "enumerating all posets supports 1 to 4 elements, not {n}"
            )));
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut out = Vec::new();
        for rel in 0u64..(1u64 << pairs.len()) {
            let chosen: Vec<(usize, usize)> = bits::ones(rel).map(|i| pairs[i]).collect();
            let transitive = chosen.iter().all(|&(a, b)| {
                chosen
                    .iter()
                    .filter(|&&(c, _)| c == b)
                    .all(|&(_, d)| d == a || chosen.contains(&(a, d)))
            });
            let antisymmetric = chosen.iter().all(|&(a, b)| !chosen.contains(&(b, a)));
            if transitive && antisymmetric {
                out.push(FinPoset::new(labels.clone(), chosen)?);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn label(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == label)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        bits::has(self.down[b], a)
    }

    /// `↓i`.
    pub fn down(&self, i: usize) -> Bits {
        self.down[i]
    }

    /// `↑i`.
    pub fn up(&self, i: usize) -> Bits {
        (0..self.len())
            .filter(|&j| self.leq(i, j))
            .fold(0, |acc, j| acc | bits::bit(j))
    }

    /// `a` and `b` have a common lower bound.
    pub fn compatible(&self, a: usize, b: usize) -> bool {
        self.down[a] & self.down[b] != 0
    }

    pub fn is_downset(&self, s: Bits) -> bool {
        bits::ones(s).all(|i| bits::subset(self.down[i], s))
    }

    /// The least upper bound of `s`, if there is one.
    pub fn lub(&self, s: Bits) -> Option<usize> {
        let ub = bits::ones(s).fold(bits::full(self.len()), |acc, i| acc & self.up(i));
        bits::ones(ub).find(|&u| bits::subset(ub, self.up(u)))
    }

    pub fn maximal(&self, s: Bits) -> Bits {
        bits::ones(s)
            .filter(|&i| bits::ones(s).all(|j| j == i || !self.leq(i, j)))
            .fold(0, |acc, i| acc | bits::bit(i))
    }

    pub fn is_antichain(&self, s: Bits) -> bool {
        bits::ones(s).all(|i| bits::ones(s).all(|j| j == i || !self.leq(i, j)))
    }

    /// The Alexandrov topology whose opens are the down-sets.
    pub fn down_topology(&self) -> FinTop {
        let mut set: BTreeSet<Bits> = [0].into_iter().collect();
        loop {
            let cur: Vec<Bits> = set.iter().copied().collect();
            let before = set.len();
            for &s in &cur {
                for &d in &self.down {
                    set.insert(s | d);
                }
            }
            if set.len() == before {
                break;
            }
        }
        FinTop {
            points: self.elements.clone(),
            opens: set.into_iter().collect(),
        }
    }

    /// `e(p) = Reg(↓p)` into `RO(P)` with the down-set topology.
    pub fn boolean_completion(&self) -> Completion {
        let space = self.down_topology();
        let ro = space.ro_algebra();
        let embedding = (0..self.len())
            .map(|p| {
                ro.elem_of(space.regularize(self.down[p]))
                    .expect("regularizations are regular open")
            })
            .collect();
        Completion {
            poset: self.clone(),
            space,
            ro,
            embedding,
        }
    }
}

/// The boolean completion of a poset with its embedding.
#[derive(Clone, Debug)]
pub struct Completion {
    pub poset: FinPoset,
    pub space: FinTop,
    pub ro: SetAlgebra,
    pub embedding: Vec<Elem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionReport {
    pub order_preserving: bool,
    pub incompatibility_preserving: bool,
    pub dense: bool,
}

impl CompletionReport {
    pub fn holds(&self) -> bool {
        self.order_preserving && self.incompatibility_preserving && self.dense
    }
}

impl Completion {
    pub fn check(&self) -> CompletionReport {
        let (p, b, e) = (&self.poset, &self.ro.algebra, &self.embedding);
        let n = p.len();
        let pairs = || (0..n).flat_map(|x| (0..n).map(move |y| (x, y)));
        let order_preserving = pairs().all(|(x, y)| !p.leq(x, y) || b.leq(e[x], e[y]));
        let incompatibility_preserving =
            pairs().all(|(x, y)| p.compatible(x, y) || b.meet(e[x], e[y]).is_zero());
        let dense = b
            .nonzero_elements()
            .all(|u| e.iter().any(|&ex| !ex.is_zero() && b.leq(ex, u)));
        CompletionReport {
            order_preserving,
            incompatibility_preserving,
            dense,
        }
    }
}

/// A continuous map between finite spaces.
#[derive(Clone, Debug)]
pub struct ContMap {
    source: FinTop,
    target: FinTop,
    map: Vec<usize>,
}

/// `k_f: RO(Y) → RO(X)`, `U ↦ f⁻¹[U]`, for an open continuous `f: X → Y`.
#[derive(Clone, Debug)]
pub struct InducedRoHom {
    /// `RO(Y)`.
    pub domain: SetAlgebra,
    /// `RO(X)`.
    pub codomain: SetAlgebra,
    pub hom: BAHom,
}

impl ContMap {
    pub fn new(source: FinTop, target: FinTop, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.len() || map.iter().any(|&y| y >= target.len()) {
            return Err(Error::InvalidTopology(
                "map does not send source points to target points".into(),
            ));
        }
        let f = ContMap {
            source,
            target,
            map,
        };
        for &u in f.target.opens() {
            if !f.source.is_open(f.preimage(u)) {
                return Err(Error::NotContinuous(f.target.show(u)));
            }
        }
        Ok(f)
    }

    /// Every continuous map `source → target`.
    pub fn all(source: &FinTop, target: &FinTop) -> Vec<ContMap> {
        let (m, n) = (source.len(), target.len());
        let mut out = Vec::new();
        let mut map = alloc::vec![0usize; m];
        loop {
            if let Ok(f) = ContMap::new(source.clone(), target.clone(), map.clone()) {
                out.push(f);
            }
            let mut k = 0;
            loop {
                if k == m {
                    return out;
                }
                map[k] += 1;
                if map[k] < n {
                    break;
                }
                map[k] = 0;
                k += 1;
            }
        }
    }

    pub fn source(&self) -> &FinTop {
        &self.source
    }

    pub fn target(&self) -> &FinTop {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, s: Bits) -> Bits {
        bits::ones(s).fold(0, |acc, x| acc | bits::bit(self.map[x]))
    }

    pub fn preimage(&self, s: Bits) -> Bits {
        (0..self.source.len())
            .filter(|&x| bits::has(s, self.map[x]))
            .fold(0, |acc, x| acc | bits::bit(x))
    }

    /// The first open set whose image is not open.
    pub fn non_open_witness(&self) -> Option<Bits> {
        self.source
            .opens()
            .iter()
            .copied()
            .find(|&u| !self.target.is_open(self.image(u)))
    }

    pub fn is_open_map(&self) -> bool {
        self.non_open_witness().is_none()
    }

    /// Open sets `U` of the target with `Reg f⁻¹[U] ≠ f⁻¹[Reg U]`.
    pub fn regularization_failures(&self) -> Vec<Bits> {
        self.target
            .opens()
            .iter()
            .copied()
            .filter(|&u| {
                self.source.regularize(self.preimage(u)) != self.preimage(self.target.regularize(u))
            })
            .collect()
    }

    /// `k_f`. Fails with [`Error::NotOpen`] unless `f` is an open map.
    pub fn induced_ro_hom(&self) -> Result<InducedRoHom> {
        if let Some(u) = self.non_open_witness() {
            return Err(Error::NotOpen(self.source.show(u)));
        }
        let domain = self.target.ro_algebra();
        let codomain = self.source.ro_algebra();
        for &u in &domain.members() {
            codomain.elem_of(self.preimage(u))?;
        }
        let hom = BAHom::from_fn(domain.algebra.clone(), codomain.algebra.clone(), |e| {
            codomain
                .elem_of(self.preimage(domain.set_of(e)))
                .expect("preimages of regular opens were checked")
        })?;
        Ok(InducedRoHom {
            domain,
            codomain,
            hom,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sierpinski() -> FinTop {
        FinTop::new(["0", "1"], [0b00, 0b10, 0b11]).unwrap()
    }

    fn pv() -> FinPoset {
        FinPoset::from_labels(["p", "q", "r"], &[("q", "p"), ("r", "p")]).unwrap()
    }

    #[test]
    fn rejects_non_topologies() {
        assert!(FinTop::new(Vec::<String>::new(), [0]).is_err());
        assert!(FinTop::new(["a", "b"], [0b11]).is_err());
        assert!(FinTop::new(["a", "b"], [0]).is_err());
        assert!(matches!(
            FinTop::new(["a", "b"], [0, 0b100, 0b11]),
            Err(Error::NotASubset(0b100))
        ));
        assert!(FinTop::new(["a", "b", "c"], [0, 0b001, 0b010, 0b111]).is_err());
        assert!(FinTop::new(["a", "a"], [0, 0b11]).is_err());
    }

    #[test]
    fn sierpinski_regularization() {
        let s = sierpinski();
        assert_eq!(s.regularize(0b10), 0b11);
        assert_eq!(s.regular_opens(), [0, 0b11]);
        assert_eq!(s.clopens(), [0, 0b11]);
        assert!(s.is_extremally_disconnected());
        assert_eq!(s.ro_algebra().algebra.len(), 1);
    }

    #[test]
    fn counts_of_all_topologies() {
        let counts: Vec<usize> = (1..=4).map(|n| FinTop::all(n).unwrap().len()).collect();
        assert_eq!(counts, [1, 4, 29, 355]);
    }

    #[test]
    fn counts_of_all_posets() {
        let counts: Vec<usize> = (1..=4).map(|n| FinPoset::all(n).unwrap().len()).collect();
        assert_eq!(counts, [1, 3, 19, 219]);
    }

    #[test]
    fn three_point_space_with_small_ro() {
        let x = FinTop::generated(["0", "1", "2"], [0b001, 0b010]).unwrap();
        assert_eq!(x.regular_opens(), [0, 0b001, 0b010, 0b111]);
        assert_eq!(x.clopens(), [0, 0b111]);
        assert!(!x.is_extremally_disconnected());
        x.ro_algebra().check_laws().unwrap();
    }

    #[test]
    fn pv_completion() {
        let p = pv();
        let t = p.down_topology();
        assert_eq!(t.opens(), [0, 0b010, 0b100, 0b110, 0b111]);
        let c = p.boolean_completion();
        assert_eq!(c.ro.atoms(), [0b010, 0b100]);
        assert_eq!(c.embedding[0], c.ro.algebra.top());
        assert!(c.check().holds());
    }

    #[test]
    fn completion_of_a_boolean_algebra_minus_zero() {
        let b = FinPoset::from_labels(
            ["a", "b", "c", "ab", "ac", "bc", "abc"],
            &[
                ("a", "ab"),
                ("b", "ab"),
                ("a", "ac"),
                ("c", "ac"),
                ("b", "bc"),
                ("c", "bc"),
                ("ab", "abc"),
                ("ac", "abc"),
                ("bc", "abc"),
            ],
        )
        .unwrap();
        let c = b.boolean_completion();
        assert_eq!(c.ro.algebra.len(), 3);
        let imgs: BTreeSet<Bits> = c.embedding.iter().map(|e| e.bits()).collect();
        assert_eq!(imgs.len(), 7);
        assert!(c.check().holds());
    }

    #[test]
    fn poset_rejects_cycles() {
        assert!(FinPoset::from_labels(["a", "b"], &[("a", "b"), ("b", "a")]).is_err());
        let p = FinPoset::from_labels(["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert!(p.leq(0, 2));
        assert_eq!(p.lub(0b011), Some(1));
    }

    #[test]
    fn non_open_map_is_rejected_with_witness() {
        let one = FinTop::discrete(["x"]).unwrap();
        let f = ContMap::new(one, sierpinski(), alloc::vec![0]).unwrap();
        assert!(!f.is_open_map());
        assert!(matches!(f.induced_ro_hom(), Err(Error::NotOpen(_))));
        assert_eq!(f.regularization_failures(), [0b10]);
    }

    #[test]
    fn discontinuous_map_is_rejected() {
        let s = sierpinski();
        let r = ContMap::new(s.clone(), s, alloc::vec![1, 0]);
        assert!(matches!(r, Err(Error::NotContinuous(_))));
    }

    #[test]
    fn subspace_relabels() {
        let s = sierpinski();
        let (t, idx) = s.subspace(0b10).unwrap();
        assert_eq!(idx, [1]);
        assert_eq!(t.points(), ["1"]);
    }
}
