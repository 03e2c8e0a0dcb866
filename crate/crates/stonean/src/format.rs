//! JSON file formats.
//!
//! Elements of an algebra are sorted arrays of atom labels. Tuples of
//! domain elements are written as one string with `,` between the ids, so
//! element ids may not contain commas. A level of a presheaf over opens or
//! algebra elements may be written as its label (`{a,b}`) or as the bare
//! list `a,b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stonean_core::balg::{BAHom, BoolAlg, Elem};
use stonean_core::bits::{self, Bits};
use stonean_core::bvm::{BVModel, ModelBuilder};
use stonean_core::logic;
use stonean_core::sheaf::{Base, BaseKind, Presheaf};
use stonean_core::topo::{FinPoset, FinTop};

use crate::error::{Context, InputError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub atoms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyJson {
    pub points: Vec<String>,
    pub opens: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetJson {
    pub elements: Vec<String>,
    pub leq: Vec<(String, String)>,
}

/// A named reference or an inline value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref<T> {
    Name(String),
    Inline(T),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub algebra: Ref<AlgebraJson>,
    pub domain: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub eq: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseJson {
    Name(String),
    Topology(TopologyJson),
    Poset(PosetJson),
    Algebra(AlgebraJson),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresheafJson {
    pub base: BaseJson,
    pub sections: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub restrictions: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomJson {
    pub source: Ref<AlgebraJson>,
    pub target: Ref<AlgebraJson>,
    pub atom_map: BTreeMap<String, String>,
}

/// A file holding several named objects. Models and presheaves may refer
/// to the other entries, and to the built-in fixtures, by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceJson {
    #[serde(default)]
    pub algebras: BTreeMap<String, AlgebraJson>,
    #[serde(default)]
    pub topologies: BTreeMap<String, TopologyJson>,
    #[serde(default)]
    pub posets: BTreeMap<String, PosetJson>,
    #[serde(default)]
    pub homs: BTreeMap<String, HomJson>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelJson>,
    #[serde(default)]
    pub presheaves: BTreeMap<String, PresheafJson>,
}

/// One JSON document, told apart by its keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Algebra(AlgebraJson),
    Topology(TopologyJson),
    Poset(PosetJson),
    Hom(HomJson),
    Model(ModelJson),
    Presheaf(PresheafJson),
    Workspace(WorkspaceJson),
}

impl Document {
    pub fn parse(src: &str, origin: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(src).map_err(|e| InputError::json(origin, &e))?;
        let obj = value
            .as_object()
            .ok_or_else(|| InputError::schema(origin, "expected a JSON object"))?;
        let has = |k: &str| obj.contains_key(k);
        let conv = |e: serde_json::Error| InputError::schema(origin, e.to_string());
        let doc = if [
            "algebras",
            "topologies",
            "posets",
            "homs",
            "models",
            "presheaves",
        ]
        .iter()
        .any(|k| has(k))
        {
            Document::Workspace(serde_json::from_value(value).map_err(conv)?)
        } else if has("domain") {
            Document::Model(serde_json::from_value(value).map_err(conv)?)
        } else if has("sections") {
            Document::Presheaf(serde_json::from_value(value).map_err(conv)?)
        } else if has("atom_map") {
            Document::Hom(serde_json::from_value(value).map_err(conv)?)
        } else if has("atoms") {
            Document::Algebra(serde_json::from_value(value).map_err(conv)?)
        } else if has("points") {
            Document::Topology(serde_json::from_value(value).map_err(conv)?)
        } else if has("elements") {
            Document::Poset(serde_json::from_value(value).map_err(conv)?)
        } else {
            return Err(InputError::schema(
                origin,
                "cannot tell what this document describes",
            ));
        };
        Ok(doc)
    }
}

/// Resolves names used inside documents.
pub trait Resolver {
    fn algebra(&self, name: &str) -> Result<BoolAlg>;
    fn base(&self, name: &str) -> Result<Base>;
}

pub fn algebra_from_json(a: &AlgebraJson, origin: &str) -> Result<BoolAlg> {
    BoolAlg::new(a.atoms.iter().cloned()).context(|| origin.to_string())
}

pub fn algebra_to_json(b: &BoolAlg) -> AlgebraJson {
    AlgebraJson {
        atoms: b.labels().to_vec(),
    }
}

pub fn elem_from_json(b: &BoolAlg, labels: &[String], origin: &str) -> Result<Elem> {
    b.elem_from_labels(labels.iter().map(String::as_str))
        .context(|| origin.to_string())
}

pub fn elem_to_json(b: &BoolAlg, e: Elem) -> Vec<String> {
    b.atom_labels(e).into_iter().map(String::from).collect()
}

/// An element written on the command line: `0`, `1`, or atom labels
/// joined by `,` or `∨`.
pub fn elem_from_text(b: &BoolAlg, text: &str) -> Result<Elem> {
    match text.trim() {
        "0" if b.atom_index("0").is_none() => return Ok(b.bottom()),
        "1" if b.atom_index("1").is_none() => return Ok(b.top()),
        _ => {}
    }
    let labels: Vec<&str> = text
        .split([',', '∨'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    b.elem_from_labels(labels)
        .context(|| format!("element `{text}`"))
}

fn resolve_algebra(r: &Ref<AlgebraJson>, res: &dyn Resolver, origin: &str) -> Result<BoolAlg> {
    match r {
        Ref::Name(n) => res.algebra(n),
        Ref::Inline(a) => algebra_from_json(a, origin),
    }
}

fn label_set(points: &[String], labels: &[String], origin: &str) -> Result<Bits> {
    labels.iter().try_fold(0, |acc, l| {
        let i = points
            .iter()
            .position(|p| p == l)
            .ok_or_else(|| InputError::schema(origin, format!("unknown point `{l}`")))?;
        Ok(acc | bits::bit(i))
    })
}

fn set_labels(points: &[String], s: Bits) -> Vec<String> {
    bits::ones(s).map(|i| points[i].clone()).collect()
}

pub fn topology_from_json(t: &TopologyJson, origin: &str) -> Result<FinTop> {
    let opens = t
        .opens
        .iter()
        .map(|o| label_set(&t.points, o, origin))
        .collect::<Result<Vec<_>>>()?;
    FinTop::new(t.points.iter().cloned(), opens).context(|| origin.to_string())
}

pub fn topology_to_json(x: &FinTop) -> TopologyJson {
    TopologyJson {
        points: x.points().to_vec(),
        opens: x
            .opens()
            .iter()
            .map(|&o| set_labels(x.points(), o))
            .collect(),
    }
}

pub fn poset_from_json(p: &PosetJson, origin: &str) -> Result<FinPoset> {
    let pairs: Vec<(&str, &str)> = p
        .leq
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    FinPoset::from_labels(p.elements.iter().cloned(), &pairs).context(|| origin.to_string())
}

/// Only the covering pairs, which generate the order.
pub fn poset_to_json(p: &FinPoset) -> PosetJson {
    let n = p.len();
    let mut leq = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let covers = a != b
                && p.leq(a, b)
                && !(0..n).any(|c| c != a && c != b && p.leq(a, c) && p.leq(c, b));
            if covers {
                leq.push((p.label(a).to_string(), p.label(b).to_string()));
            }
        }
    }
    PosetJson {
        elements: p.elements().to_vec(),
        leq,
    }
}

pub fn hom_from_json(h: &HomJson, res: &dyn Resolver, origin: &str) -> Result<BAHom> {
    let source = resolve_algebra(&h.source, res, origin)?;
    let target = resolve_algebra(&h.target, res, origin)?;
    let mut map = Vec::with_capacity(target.len());
    for c in target.labels() {
        let b = h
            .atom_map
            .get(c)
            .ok_or_else(|| InputError::schema(origin, format!("atom `{c}` is not mapped")))?;
        let i = source
            .atom_index(b)
            .ok_or_else(|| InputError::schema(origin, format!("unknown source atom `{b}`")))?;
        map.push(i);
    }
    if h.atom_map.len() != target.len() {
        return Err(InputError::schema(
            origin,
            "atom_map names unknown target atoms",
        ));
    }
    BAHom::new(source, target, map).context(|| origin.to_string())
}

pub fn hom_to_json(h: &BAHom) -> HomJson {
    HomJson {
        source: Ref::Inline(algebra_to_json(h.source())),
        target: Ref::Inline(algebra_to_json(h.target())),
        atom_map: h
            .atom_map()
            .iter()
            .enumerate()
            .map(|(c, &b)| {
                (
                    h.target().label(c).to_string(),
                    h.source().label(b).to_string(),
                )
            })
            .collect(),
    }
}

fn split_tuple(key: &str) -> Vec<&str> {
    key.split(',').map(str::trim).collect()
}

/// Loads a model without checking the axioms, so that `validate` can
/// report violations. Missing equalities default to `1` on the diagonal
/// and to the mirrored entry elsewhere; missing relation entries are `0`.
pub fn model_from_json(m: &ModelJson, res: &dyn Resolver, origin: &str) -> Result<BVModel> {
    let b = resolve_algebra(&m.algebra, res, origin)?;
    let mut builder = ModelBuilder::new(b.clone(), m.domain.iter().cloned());
    for (key, v) in &m.eq {
        let pair = split_tuple(key);
        if pair.len() != 2 {
            return Err(InputError::schema(
                origin,
                format!("eq key `{key}` is not a pair"),
            ));
        }
        let e = elem_from_json(&b, v, origin)?;
        builder = builder
            .eq(pair[0], pair[1], e)
            .context(|| format!("{origin}: eq `{key}`"))?;
    }
    for (name, entries) in &m.relations {
        if entries.is_empty() {
            return Err(InputError::schema(
                origin,
                format!("relation `{name}` has no entries, so its arity is unknown"),
            ));
        }
        for (key, v) in entries {
            let args = split_tuple(key);
            let e = elem_from_json(&b, v, origin)?;
            builder = builder
                .rel(name, &args, e)
                .context(|| format!("{origin}: {name}({key})"))?;
        }
    }
    for (c, id) in &m.constants {
        builder = builder
            .constant(c, id)
            .context(|| format!("{origin}: constant `{c}`"))?;
    }
    builder.build_unchecked().context(|| origin.to_string())
}

/// Writes every equality with `σ` before `τ` in domain order and every
/// relation entry, zeros included, so arities survive.
pub fn model_to_json(m: &BVModel) -> ModelJson {
    let b = m.algebra();
    let n = m.len();
    let mut eq = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let v = m.eq_value(i, j);
            let default = if i == j { b.top() } else { b.bottom() };
            if v != default || m.eq_value(j, i) != v {
                eq.insert(format!("{},{}", m.id(i), m.id(j)), elem_to_json(b, v));
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            if m.eq_value(i, j) != m.eq_value(j, i) {
                eq.insert(
                    format!("{},{}", m.id(i), m.id(j)),
                    elem_to_json(b, m.eq_value(i, j)),
                );
            }
        }
    }
    let mut relations = BTreeMap::new();
    for (name, arity) in m.relations() {
        let mut entries = BTreeMap::new();
        for t in logic::tuples(n, arity) {
            let v = m.rel_value(name, &t).expect("tuple in range");
            let key: Vec<&str> = t.iter().map(|&i| m.id(i)).collect();
            entries.insert(key.join(","), elem_to_json(b, v));
        }
        relations.insert(name.to_string(), entries);
    }
    ModelJson {
        algebra: Ref::Inline(algebra_to_json(b)),
        domain: m.domain().to_vec(),
        eq,
        relations,
        constants: m
            .constants()
            .iter()
            .map(|(c, &i)| (c.clone(), m.id(i).to_string()))
            .collect(),
    }
}

fn base_from_json(b: &BaseJson, res: &dyn Resolver, origin: &str) -> Result<Base> {
    match b {
        BaseJson::Name(n) => res.base(n),
        BaseJson::Topology(t) => {
            Base::opens(&topology_from_json(t, origin)?).context(|| origin.to_string())
        }
        BaseJson::Poset(p) => Ok(Base::poset(poset_from_json(p, origin)?)),
        BaseJson::Algebra(a) => {
            Base::algebra(&algebra_from_json(a, origin)?).context(|| origin.to_string())
        }
    }
}

pub fn base_to_json(base: &Base) -> BaseJson {
    match base.kind() {
        BaseKind::Opens(x) => BaseJson::Topology(topology_to_json(x)),
        BaseKind::Algebra(b) => BaseJson::Algebra(algebra_to_json(b)),
        BaseKind::Poset => BaseJson::Poset(poset_to_json(base.order())),
    }
}

/// The level named by `key`: its label, or for set levels the list of
/// its points or atoms.
pub fn level_of(base: &Base, key: &str) -> Option<usize> {
    let key = key.trim();
    if let Some(i) = (0..base.len()).find(|&i| base.label(i) == key) {
        return Some(i);
    }
    let labels: &[String] = match base.kind() {
        BaseKind::Opens(x) => x.points(),
        BaseKind::Algebra(b) => b.labels(),
        BaseKind::Poset => return None,
    };
    let inner = key.trim_start_matches('{').trim_end_matches('}');
    let mut set = 0;
    for part in inner
        .split([',', '∨'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        set |= bits::bit(labels.iter().position(|l| l == part)?);
    }
    base.level_of_set(set)
}

pub fn presheaf_from_json(p: &PresheafJson, res: &dyn Resolver, origin: &str) -> Result<Presheaf> {
    let base = base_from_json(&p.base, res, origin)?;
    let level = |key: &str| {
        level_of(&base, key).ok_or_else(|| {
            InputError::schema(origin, format!("`{key}` is not a level of the base"))
        })
    };
    let mut sections = vec![Vec::new(); base.len()];
    for (key, secs) in &p.sections {
        sections[level(key)?] = secs.clone();
    }
    let mut restrict = BTreeMap::new();
    for (key, map) in &p.restrictions {
        let (lo, hi) = key.split_once("<=").ok_or_else(|| {
            InputError::schema(origin, format!("restriction key `{key}` lacks `<=`"))
        })?;
        let (lo, hi) = (level(lo)?, level(hi)?);
        if !base.leq(lo, hi) {
            return Err(InputError::schema(
                origin,
                format!("`{key}` is not an inclusion of levels"),
            ));
        }
        let mut table = Vec::with_capacity(sections[hi].len());
        for s in &sections[hi] {
            let target = map.get(s).ok_or_else(|| {
                InputError::schema(
                    origin,
                    format!("restriction `{key}` does not map section `{s}`"),
                )
            })?;
            let i = sections[lo]
                .iter()
                .position(|t| t == target)
                .ok_or_else(|| {
                    InputError::schema(
                        origin,
                        format!("restriction `{key}` maps to unknown section `{target}`"),
                    )
                })?;
            table.push(i);
        }
        if let Some(extra) = map.keys().find(|k| !sections[hi].contains(k)) {
            return Err(InputError::schema(
                origin,
                format!("restriction `{key}` maps unknown section `{extra}`"),
            ));
        }
        restrict.insert((lo, hi), table);
    }
    Presheaf::from_partial(base, sections, restrict).context(|| origin.to_string())
}

/// Writes every section and every restriction between distinct levels.
pub fn presheaf_to_json(f: &Presheaf) -> PresheafJson {
    let base = f.base();
    let mut sections = BTreeMap::new();
    for q in 0..base.len() {
        sections.insert(base.label(q).to_string(), f.sections(q).to_vec());
    }
    let mut restrictions = BTreeMap::new();
    for (&(lo, hi), map) in f.restrictions() {
        if lo == hi {
            continue;
        }
        let entries = map
            .iter()
            .enumerate()
            .map(|(s, &t)| (f.sections(hi)[s].clone(), f.sections(lo)[t].clone()))
            .collect();
        restrictions.insert(format!("{}<={}", base.label(lo), base.label(hi)), entries);
    }
    PresheafJson {
        base: base_to_json(base),
        sections,
        restrictions,
    }
}
