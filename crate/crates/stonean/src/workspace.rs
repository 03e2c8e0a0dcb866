//! Named registry of algebras, spaces, posets, homomorphisms, models and
//! presheaves.

use std::collections::BTreeMap;
use std::path::Path;

use stonean_core::balg::{BAHom, BoolAlg};
use stonean_core::bvm::BVModel;
use stonean_core::sheaf::{Base, Presheaf};
use stonean_core::topo::{FinPoset, FinTop};

use crate::error::{Context, InputError, Result};
use crate::format::{self, Document, Resolver, WorkspaceJson};

const BUILTIN: &str = include_str!("../fixtures/builtin.json");

#[derive(Clone, Debug)]
pub enum Entry {
    Algebra(BoolAlg),
    Topology(FinTop),
    Poset(FinPoset),
    Hom(BAHom),
    Model(BVModel),
    Presheaf(Presheaf),
}

impl Entry {
    pub fn kind(&self) -> &'static str {
        match self {
            Entry::Algebra(_) => "an algebra",
            Entry::Topology(_) => "a topology",
            Entry::Poset(_) => "a poset",
            Entry::Hom(_) => "a homomorphism",
            Entry::Model(_) => "a model",
            Entry::Presheaf(_) => "a presheaf",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Workspace {
    entries: BTreeMap<String, Entry>,
}

impl Workspace {
    /// The built-in fixtures: `B2`, `B4`, `B8`, the Sierpiński space `S`,
    /// the discrete space `D2`, the poset `PV`, the inclusion `B2_B4`, the
    /// models `MNM` and `M_R`, and the presheaf `FS` on `S`.
    pub fn builtin() -> Self {
        let mut ws = Workspace::default();
        ws.load_str(BUILTIN, "builtin")
            .expect("built-in fixtures load");
        ws
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn insert(&mut self, name: &str, entry: Entry, origin: &str) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(InputError::schema(
                origin,
                format!("name `{name}` is already taken"),
            ));
        }
        self.entries.insert(name.to_string(), entry);
        Ok(())
    }

    /// Adds every entry of a workspace document. Within the document,
    /// algebras, topologies and posets are loaded first so that the rest
    /// may refer to them.
    pub fn load_str(&mut self, src: &str, origin: &str) -> Result<()> {
        match Document::parse(src, origin)? {
            Document::Workspace(w) => self.load_workspace(&w, origin),
            _ => Err(InputError::schema(origin, "expected a workspace document")),
        }
    }

    pub fn load_workspace(&mut self, w: &WorkspaceJson, origin: &str) -> Result<()> {
        let at = |name: &str| format!("{origin}: {name}");
        for (name, a) in &w.algebras {
            let e = Entry::Algebra(format::algebra_from_json(a, &at(name))?);
            self.insert(name, e, origin)?;
        }
        for (name, t) in &w.topologies {
            let e = Entry::Topology(format::topology_from_json(t, &at(name))?);
            self.insert(name, e, origin)?;
        }
        for (name, p) in &w.posets {
            let e = Entry::Poset(format::poset_from_json(p, &at(name))?);
            self.insert(name, e, origin)?;
        }
        for (name, h) in &w.homs {
            let e = Entry::Hom(format::hom_from_json(h, self, &at(name))?);
            self.insert(name, e, origin)?;
        }
        for (name, m) in &w.models {
            let e = Entry::Model(format::model_from_json(m, self, &at(name))?);
            self.insert(name, e, origin)?;
        }
        for (name, p) in &w.presheaves {
            let e = Entry::Presheaf(format::presheaf_from_json(p, self, &at(name))?);
            self.insert(name, e, origin)?;
        }
        Ok(())
    }

    /// Looks up `arg` as a registered name, a file (`path.json`), or an
    /// entry of a workspace file (`path.json#name`).
    pub fn resolve(&self, arg: &str) -> Result<Entry> {
        if let Some(e) = self.entries.get(arg) {
            return Ok(e.clone());
        }
        let (path, name) = match arg.rsplit_once('#') {
            Some((p, n)) => (p, Some(n)),
            None => (arg, None),
        };
        let p = Path::new(path);
        if !p.exists() {
            return Err(InputError::UnknownName(arg.to_string()));
        }
        let src = std::fs::read_to_string(p).map_err(|source| InputError::Io {
            path: p.to_path_buf(),
            source,
        })?;
        let origin = path.to_string();
        let doc = Document::parse(&src, &origin)?;
        let entry = match (doc, name) {
            (Document::Workspace(w), Some(n)) => {
                let mut ws = self.clone();
                ws.load_workspace(&w, &origin)?;
                return ws
                    .entries
                    .remove(n)
                    .ok_or_else(|| InputError::UnknownName(arg.to_string()));
            }
            (Document::Workspace(_), None) => {
                return Err(InputError::schema(
                    &origin,
                    "a workspace file needs `#name` to pick an entry",
                ))
            }
            (_, Some(_)) => {
                return Err(InputError::schema(
                    &origin,
                    "`#name` needs a workspace file",
                ))
            }
            (Document::Algebra(a), None) => Entry::Algebra(format::algebra_from_json(&a, &origin)?),
            (Document::Topology(t), None) => {
                Entry::Topology(format::topology_from_json(&t, &origin)?)
            }
            (Document::Poset(p), None) => Entry::Poset(format::poset_from_json(&p, &origin)?),
            (Document::Hom(h), None) => Entry::Hom(format::hom_from_json(&h, self, &origin)?),
            (Document::Model(m), None) => Entry::Model(format::model_from_json(&m, self, &origin)?),
            (Document::Presheaf(f), None) => {
                Entry::Presheaf(format::presheaf_from_json(&f, self, &origin)?)
            }
        };
        Ok(entry)
    }

    /// A model that satisfies the equality and congruence axioms.
    pub fn model(&self, arg: &str) -> Result<BVModel> {
        let m = self.model_unchecked(arg)?;
        if let Some(v) = m.validate().violations.first() {
            return Err(InputError::schema(
                arg,
                format!("not a boolean-valued model: {}", m.describe_violation(v)),
            ));
        }
        Ok(m)
    }

    pub fn model_unchecked(&self, arg: &str) -> Result<BVModel> {
        match self.resolve(arg)? {
            Entry::Model(m) => Ok(m),
            other => Err(wrong(arg, "a model", &other)),
        }
    }

    pub fn presheaf(&self, arg: &str) -> Result<Presheaf> {
        match self.resolve(arg)? {
            Entry::Presheaf(f) => Ok(f),
            other => Err(wrong(arg, "a presheaf", &other)),
        }
    }
}

fn wrong(name: &str, expected: &'static str, found: &Entry) -> InputError {
    InputError::WrongKind {
        name: name.to_string(),
        expected,
        found: found.kind(),
    }
}

impl Resolver for Workspace {
    fn algebra(&self, name: &str) -> Result<BoolAlg> {
        match self.entries.get(name) {
            Some(Entry::Algebra(b)) => Ok(b.clone()),
            Some(other) => Err(wrong(name, "an algebra", other)),
            None => Err(InputError::UnknownName(name.to_string())),
        }
    }

    fn base(&self, name: &str) -> Result<Base> {
        match self.entries.get(name) {
            Some(Entry::Topology(x)) => Base::opens(x).context(|| name.to_string()),
            Some(Entry::Poset(p)) => Ok(Base::poset(p.clone())),
            Some(Entry::Algebra(b)) => Base::algebra(b).context(|| name.to_string()),
            Some(other) => Err(wrong(name, "a topology, poset or algebra", other)),
            None => Err(InputError::UnknownName(name.to_string())),
        }
    }
}
