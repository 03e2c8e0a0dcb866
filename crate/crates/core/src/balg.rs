//! Finite boolean algebras as powersets of labelled atoms.
//!
//! In a finite algebra every filter is principal and every ultrafilter is
//! generated by an atom, so the Stone space is the discrete space on the
//! atoms and `N_b` is just the set of atoms below `b`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;
use core::hash::{Hash, Hasher};

use crate::bits::{self, Bits};
use crate::topo::FinTop;
use crate::{Error, Result};

/// Fingerprint of an algebra's atom labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgId(u64);

fn fingerprint(labels: &[String]) -> AlgId {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for l in labels {
        for b in l.bytes().chain(core::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    AlgId(h)
}

/// The powerset algebra on a finite set of labelled atoms.
#[derive(Clone, Debug)]
pub struct BoolAlg {
    id: AlgId,
    labels: Vec<String>,
}

impl PartialEq for BoolAlg {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.labels == other.labels
    }
}

impl Eq for BoolAlg {}

/// An element of a [`BoolAlg`]. Remembers which algebra it came from.
///
/// Comparing elements of different algebras with `==` panics; use
/// [`Elem::try_eq`] to get an error instead.
#[derive(Clone, Copy, Debug)]
pub struct Elem {
    alg: AlgId,
    bits: Bits,
}

impl Elem {
    pub fn bits(self) -> Bits {
        self.bits
    }

    pub fn algebra_id(self) -> AlgId {
        self.alg
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn try_eq(self, other: Elem) -> Result<bool> {
        if self.alg != other.alg {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self.bits == other.bits)
    }
}

impl PartialEq for Elem {
    fn eq(&self, other: &Self) -> bool {
        assert!(
            self.alg == other.alg,
            "compared elements of different boolean algebras"
        );
        self.bits == other.bits
    }
}

impl Eq for Elem {}

impl Hash for Elem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.alg.hash(state);
        self.bits.hash(state);
    }
}

impl BoolAlg {
    /// Powerset algebra on the given atoms. Labels must be distinct and
    /// non-empty, and there must be between 1 and 64 of them.
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = atoms.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidAlgebra("no atoms".into()));
        }
        if labels.len() > bits::CAPACITY {
            return Err(Error::InvalidAlgebra(format!(
                "{} atoms exceeds the limit of {}",
                labels.len(),
                bits::CAPACITY
            )));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if l.is_empty() {
                return Err(Error::InvalidAlgebra("empty atom label".into()));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidAlgebra(format!("duplicate atom `{l}`")));
            }
        }
        let alg = BoolAlg {
            id: fingerprint(&labels),
            labels,
        };
        if alg.len() <= 3 {
            alg.check_axioms().map_err(Error::InvalidAlgebra)?;
        }
        Ok(alg)
    }

    /// Atoms named `a1, ..., an`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("a{i}")))
    }

    pub fn id(&self) -> AlgId {
        self.id
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of elements, `2^len`, when it fits.
    pub fn size(&self) -> Option<u64> {
        1u64.checked_shl(self.len() as u32)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, atom: usize) -> &str {
        &self.labels[atom]
    }

    pub fn atom_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn mk(&self, bits: Bits) -> Elem {
        Elem { alg: self.id, bits }
    }

    fn own(&self, e: Elem) -> Bits {
        assert!(
            e.alg == self.id,
            "element does not belong to this boolean algebra"
        );
        e.bits
    }

    pub fn owns(&self, e: Elem) -> bool {
        e.alg == self.id && bits::subset(e.bits, self.top_bits())
    }

    pub fn top_bits(&self) -> Bits {
        bits::full(self.len())
    }

    pub fn top(&self) -> Elem {
        self.mk(self.top_bits())
    }

    pub fn bottom(&self) -> Elem {
        self.mk(0)
    }

    pub fn atom(&self, i: usize) -> Result<Elem> {
        if i >= self.len() {
            return Err(Error::InvalidElement(format!("no atom with index {i}")));
        }
        Ok(self.mk(bits::bit(i)))
    }

    /// The element whose atoms are the set bits of `b`.
    pub fn elem(&self, b: Bits) -> Result<Elem> {
        if !bits::subset(b, self.top_bits()) {
            return Err(Error::InvalidElement(format!(
                "bitset {b:#x} mentions atoms outside an algebra with {} atoms",
                self.len()
            )));
        }
        Ok(self.mk(b))
    }

    pub fn elem_from_labels<I, S>(&self, labels: I) -> Result<Elem>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut b = 0;
        for l in labels {
            let l = l.as_ref();
            let i = self
                .atom_index(l)
                .ok_or_else(|| Error::InvalidElement(format!("unknown atom `{l}`")))?;
            b |= bits::bit(i);
        }
        Ok(self.mk(b))
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        self.mk(self.own(a) & self.own(b))
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        self.mk(self.own(a) | self.own(b))
    }

    pub fn complement(&self, a: Elem) -> Elem {
        self.mk(!self.own(a) & self.top_bits())
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        bits::subset(self.own(a), self.own(b))
    }

    pub fn is_atom(&self, a: Elem) -> bool {
        bits::count(self.own(a)) == 1
    }

    pub fn join_all<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        self.mk(it.into_iter().fold(0, |acc, e| acc | self.own(e)))
    }

    pub fn meet_all<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        self.mk(it
            .into_iter()
            .fold(self.top_bits(), |acc, e| acc & self.own(e)))
    }

    /// Indices of the atoms below `a`.
    pub fn atoms_below(&self, a: Elem) -> bits::Ones {
        bits::ones(self.own(a))
    }

    /// All elements in increasing bit order. Only sensible for small algebras.
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        bits::submasks(self.top_bits()).map(|b| self.mk(b))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Elem> + '_ {
        self.elements().skip(1)
    }

    /// `0`, or the join of the atom labels such as `a1∨a3`.
    pub fn show(&self, a: Elem) -> String {
        let b = self.own(a);
        if b == 0 {
            return "0".to_string();
        }
        let parts: Vec<&str> = bits::ones(b).map(|i| self.label(i)).collect();
        parts.join("∨")
    }

    /// Atom labels of `a` in atom order.
    pub fn atom_labels(&self, a: Elem) -> Vec<&str> {
        bits::ones(self.own(a)).map(|i| self.label(i)).collect()
    }

    /// Exhaustive check of the boolean algebra laws. Cubic in the number
    /// of elements.
    pub fn check_axioms(&self) -> core::result::Result<(), String> {
        if self.len() > 6 {
            return Err("exhaustive axiom check limited to 6 atoms".into());
        }
        let els: Vec<Elem> = self.elements().collect();
        let (zero, one) = (self.bottom(), self.top());
        for &a in &els {
            let na = self.complement(a);
            if self.join(a, na) != one || self.meet(a, na) != zero {
                return Err(format!("complement law fails at {}", self.show(a)));
            }
            if self.join(a, zero) != a || self.meet(a, one) != a {
                return Err(format!("bounds fail at {}", self.show(a)));
            }
            for &b in &els {
                if self.join(a, b) != self.join(b, a) || self.meet(a, b) != self.meet(b, a) {
                    return Err("commutativity fails".into());
                }
                if self.join(a, self.meet(a, b)) != a || self.meet(a, self.join(a, b)) != a {
                    return Err("absorption fails".into());
                }
                if self.leq(a, b) != (self.meet(a, b) == a) {
                    return Err("order disagrees with meet".into());
                }
                for &c in &els {
                    if self.meet(a, self.join(b, c)) != self.join(self.meet(a, b), self.meet(a, c))
                    {
                        return Err("distributivity fails".into());
                    }
                    if self.join(a, self.join(b, c)) != self.join(self.join(a, b), c) {
                        return Err("associativity fails".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// The principal filter `↑g`. `g` must be nonzero.
    pub fn filter(&self, generator: Elem) -> Result<Filter> {
        if !self.owns(generator) {
            return Err(Error::AlgebraMismatch);
        }
        if generator.is_zero() {
            return Err(Error::InvalidFilter(
                "the filter generated by 0 is improper".into(),
            ));
        }
        Ok(Filter { generator })
    }

    pub fn ultrafilter(&self, atom: usize) -> Result<Filter> {
        self.filter(self.atom(atom)?)
    }

    /// All ultrafilters, in atom order.
    pub fn ultrafilters(&self) -> Vec<Filter> {
        (0..self.len())
            .map(|i| Filter {
                generator: self.mk(bits::bit(i)),
            })
            .collect()
    }

    /// `B/F`: the powerset of the atoms below the generator of `F`.
    pub fn quotient(&self, f: &Filter) -> Result<Quotient> {
        let g = f.generator;
        if !self.owns(g) {
            return Err(Error::AlgebraMismatch);
        }
        let kept: Vec<usize> = bits::ones(g.bits).collect();
        let algebra = BoolAlg::new(kept.iter().map(|&i| self.labels[i].clone()))?;
        let proj = BAHom::new(self.clone(), algebra.clone(), kept)?;
        Ok(Quotient {
            algebra,
            proj,
            filter: *f,
        })
    }

    /// The Stone space: ultrafilters with the topology generated by the
    /// sets `N_b`. Discrete, with points labelled by atom labels.
    pub fn stone_space(&self) -> StoneSpace {
        let space = FinTop::discrete(self.labels.clone())
            .expect("a boolean algebra has between 1 and 64 atoms");
        StoneSpace {
            algebra: self.clone(),
            space,
        }
    }
}

impl fmt::Display for BoolAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{{{}}}", self.labels.join(","))
    }
}

/// A filter of a finite algebra, stored by its generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Filter {
    generator: Elem,
}

impl Filter {
    pub fn generator(&self) -> Elem {
        self.generator
    }

    pub fn contains(&self, b: Elem) -> bool {
        assert!(
            b.alg == self.generator.alg,
            "element does not belong to the filter's algebra"
        );
        bits::subset(self.generator.bits, b.bits)
    }

    pub fn is_ultrafilter(&self) -> bool {
        bits::count(self.generator.bits) == 1
    }

    /// Index of the generating atom, for ultrafilters.
    pub fn atom(&self) -> Option<usize> {
        self.is_ultrafilter()
            .then(|| self.generator.bits.trailing_zeros() as usize)
    }
}

/// `B/F` together with the projection `b ↦ [b]_F`.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub algebra: BoolAlg,
    /// The projection as a homomorphism `B → B/F`.
    pub proj: BAHom,
    pub filter: Filter,
}

impl Quotient {
    pub fn project(&self, b: Elem) -> Elem {
        self.proj.apply(b)
    }
}

/// A homomorphism `i: B → C` of finite algebras, stored dually as a map
/// from the atoms of `C` to the atoms of `B`.
///
/// `i(b)` is the set of atoms `c` of `C` with `atom_map[c] ≤ b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BAHom {
    source: BoolAlg,
    target: BoolAlg,
    atom_map: Vec<usize>,
}

impl BAHom {
    pub fn new(source: BoolAlg, target: BoolAlg, atom_map: Vec<usize>) -> Result<Self> {
        if atom_map.len() != target.len() {
            return Err(Error::InvalidHom(format!(
                "atom map has {} entries but the target has {} atoms",
                atom_map.len(),
                target.len()
            )));
        }
        if let Some(&bad) = atom_map.iter().find(|&&a| a >= source.len()) {
            return Err(Error::InvalidHom(format!(
                "atom map sends a target atom to index {bad}, outside the source"
            )));
        }
        Ok(BAHom {
            source,
            target,
            atom_map,
        })
    }

    pub fn identity(b: &BoolAlg) -> Self {
        BAHom {
            source: b.clone(),
            target: b.clone(),
            atom_map: (0..b.len()).collect(),
        }
    }

    /// Recover a homomorphism from its action on elements. Fails unless `f`
    /// really is a unital boolean homomorphism.
    pub fn from_fn(source: BoolAlg, target: BoolAlg, f: impl Fn(Elem) -> Elem) -> Result<Self> {
        if source.len() > 16 {
            return Err(Error::TooLarge(
                "recovering a homomorphism needs at most 16 source atoms".into(),
            ));
        }
        let mut atom_map = vec![usize::MAX; target.len()];
        for a in 0..source.len() {
            let img = f(source.mk(bits::bit(a)));
            if !target.owns(img) {
                return Err(Error::AlgebraMismatch);
            }
            for c in bits::ones(img.bits) {
                if atom_map[c] != usize::MAX {
                    return Err(Error::InvalidHom(format!(
                        "images of atoms {} and {} overlap",
                        source.label(atom_map[c]),
                        source.label(a)
                    )));
                }
                atom_map[c] = a;
            }
        }
        if let Some(c) = atom_map.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidHom(format!(
                "target atom {} lies under the image of no source atom",
                target.label(c)
            )));
        }
        let h = BAHom::new(source, target, atom_map)?;
        for b in h.source.elements() {
            let fb = f(b);
            if !h.target.owns(fb) || fb.bits != h.apply(b).bits {
                return Err(Error::InvalidHom(format!(
                    "map is not a homomorphism at {}",
                    h.source.show(b)
                )));
            }
        }
        Ok(h)
    }

    /// Every homomorphism `source → target`.
    pub fn all(source: &BoolAlg, target: &BoolAlg) -> Vec<BAHom> {
        let (m, n) = (source.len(), target.len());
        let mut out = Vec::new();
        let mut map = vec![0usize; n];
        loop {
            out.push(BAHom {
                source: source.clone(),
                target: target.clone(),
                atom_map: map.clone(),
            });
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                map[k] += 1;
                if map[k] < m {
                    break;
                }
                map[k] = 0;
                k += 1;
            }
        }
    }

    pub fn source(&self) -> &BoolAlg {
        &self.source
    }

    pub fn target(&self) -> &BoolAlg {
        &self.target
    }

    /// The dual map on ultrafilters, `atoms(target) → atoms(source)`.
    pub fn atom_map(&self) -> &[usize] {
        &self.atom_map
    }

    pub fn apply(&self, b: Elem) -> Elem {
        let b = self.source.own(b);
        let out = self
            .atom_map
            .iter()
            .enumerate()
            .filter(|&(_, &a)| bits::has(b, a))
            .fold(0, |acc, (c, _)| acc | bits::bit(c));
        self.target.mk(out)
    }

    pub fn try_apply(&self, b: Elem) -> Result<Elem> {
        if !self.source.owns(b) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self.apply(b))
    }

    /// The left adjoint `π(c) = ⋀{b : i(b) ≥ c}`, the image of the atoms
    /// of `c` under the atom map.
    pub fn left_adjoint(&self, c: Elem) -> Elem {
        let c = self.target.own(c);
        let out = bits::ones(c).fold(0, |acc, t| acc | bits::bit(self.atom_map[t]));
        self.source.mk(out)
    }

    /// `π*(G) = i⁻¹[G]`, computed as the filter generated by `π(g)`.
    pub fn dual(&self, g: &Filter) -> Result<Filter> {
        if !self.target.owns(g.generator) {
            return Err(Error::AlgebraMismatch);
        }
        self.source.filter(self.left_adjoint(g.generator))
    }

    /// `then ∘ self`.
    pub fn then(&self, then: &BAHom) -> Result<BAHom> {
        if then.source != self.target {
            return Err(Error::InvalidHom(
                "composition of homomorphisms with mismatched algebras".into(),
            ));
        }
        let atom_map = then.atom_map.iter().map(|&b| self.atom_map[b]).collect();
        BAHom::new(self.source.clone(), then.target.clone(), atom_map)
    }

    pub fn is_injective(&self) -> bool {
        let hit = self.atom_map.iter().fold(0, |acc, &a| acc | bits::bit(a));
        hit == self.source.top_bits()
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.atom_map.iter().all(|a| seen.insert(*a))
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    pub fn inverse(&self) -> Result<BAHom> {
        if !self.is_isomorphism() {
            return Err(Error::InvalidHom("not an isomorphism".into()));
        }
        let mut inv = vec![0; self.source.len()];
        for (c, &a) in self.atom_map.iter().enumerate() {
            inv[a] = c;
        }
        BAHom::new(self.target.clone(), self.source.clone(), inv)
    }
}

/// `St(B)` with the clopen map `b ↦ N_b`.
#[derive(Clone, Debug)]
pub struct StoneSpace {
    pub algebra: BoolAlg,
    pub space: FinTop,
}

impl StoneSpace {
    /// `N_b`, the ultrafilters containing `b`, as a set of points.
    pub fn clopen(&self, b: Elem) -> Bits {
        self.algebra.own(b)
    }

    pub fn ultrafilter_at(&self, point: usize) -> Result<Filter> {
        self.algebra.ultrafilter(point)
    }

    /// The inverse of `N`: the element whose clopen is `set`.
    pub fn element_of_clopen(&self, set: Bits) -> Result<Elem> {
        if !self.space.is_open(set) || !self.space.is_closed(set) {
            return Err(Error::InvalidElement(format!("{set:#x} is not clopen")));
        }
        self.algebra.elem(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: usize) -> BoolAlg {
        BoolAlg::numbered(n).unwrap()
    }

    #[test]
    fn construction_rejects_bad_atom_sets() {
        assert!(BoolAlg::new(Vec::<String>::new()).is_err());
        assert!(BoolAlg::new(["a", "a"]).is_err());
        assert!(BoolAlg::new([""]).is_err());
        let many: Vec<String> = (0..65).map(|i| format!("x{i}")).collect();
        assert!(matches!(BoolAlg::new(many), Err(Error::InvalidAlgebra(_))));
        let ok: Vec<String> = (0..64).map(|i| format!("x{i}")).collect();
        assert_eq!(BoolAlg::new(ok).unwrap().top().bits(), !0);
    }

    #[test]
    fn axioms_hold_up_to_four_atoms() {
        for n in 1..=4 {
            b(n).check_axioms().unwrap();
        }
    }

    #[test]
    fn cross_algebra_comparison_is_an_error() {
        let (x, y) = (b(2), b(3));
        assert_eq!(x.top().try_eq(y.bottom()), Err(Error::AlgebraMismatch));
        let r = std::panic::catch_unwind(|| x.top() == y.top());
        assert!(r.is_err());
    }

    #[test]
    fn b4_ultrafilters_and_stone_space() {
        let b4 = b(2);
        let us = b4.ultrafilters();
        assert_eq!(us.len(), 2);
        assert_eq!(us[0].generator(), b4.atom(0).unwrap());
        let st = b4.stone_space();
        assert_eq!(st.space.opens().len(), 4);
        assert!(st.space.is_discrete());
    }

    #[test]
    fn quotient_of_b8_by_two_atoms() {
        let b8 = b(3);
        let g = b8.elem_from_labels(["a1", "a2"]).unwrap();
        let q = b8.quotient(&b8.filter(g).unwrap()).unwrap();
        assert_eq!(q.algebra.labels(), ["a1", "a2"]);
        let a3 = b8.atom(2).unwrap();
        assert!(q.project(a3).is_zero());
        let a1a3 = b8.elem_from_labels(["a1", "a3"]).unwrap();
        assert_eq!(q.algebra.show(q.project(a1a3)), "a1");
    }

    #[test]
    fn left_adjoint_of_b4_into_b8() {
        let (b4, b8) = (b(2), b(3));
        let i = BAHom::new(b4.clone(), b8.clone(), vec![0, 0, 1]).unwrap();
        let a1a2 = b8.elem_from_labels(["a1", "a2"]).unwrap();
        assert_eq!(i.left_adjoint(a1a2), b4.atom(0).unwrap());
        assert_eq!(i.left_adjoint(b8.atom(2).unwrap()), b4.atom(1).unwrap());
        let g = b8.ultrafilter(1).unwrap();
        assert_eq!(i.dual(&g).unwrap(), b4.ultrafilter(0).unwrap());
    }

    #[test]
    fn unique_hom_out_of_b2() {
        let (b2, b4) = (b(1), b(2));
        let homs = BAHom::all(&b2, &b4);
        assert_eq!(homs.len(), 1);
        assert_eq!(homs[0].left_adjoint(b4.atom(0).unwrap()), b2.top());
    }

    #[test]
    fn from_fn_rejects_non_homomorphisms() {
        let b4 = b(2);
        let bad = BAHom::from_fn(b4.clone(), b4.clone(), |_| b4.top());
        assert!(bad.is_err());
        let id = BAHom::from_fn(b4.clone(), b4.clone(), |x| x).unwrap();
        assert_eq!(id, BAHom::identity(&b4));
    }

    #[test]
    fn composition_and_inverse() {
        let b8 = b(3);
        let p = BAHom::new(b8.clone(), b8.clone(), vec![2, 0, 1]).unwrap();
        let inv = p.inverse().unwrap();
        assert_eq!(p.then(&inv).unwrap(), BAHom::identity(&b8));
        for x in b8.elements() {
            assert_eq!(inv.apply(p.apply(x)), x);
        }
    }

    #[test]
    fn show_formats_joins() {
        let b8 = b(3);
        assert_eq!(b8.show(b8.bottom()), "0");
        assert_eq!(b8.show(b8.top()), "a1∨a2∨a3");
    }
}
