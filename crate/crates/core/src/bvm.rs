//! Boolean-valued models over finite algebras.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::balg::{BAHom, BoolAlg, Elem, Filter, Quotient};
use crate::bits::{self, Bits};
use crate::logic::{self, Formula, Signature, Term, ELEMENT_PREFIX};
use crate::{Error, Result};

/// Largest domain a product or table is allowed to reach.
pub const MAX_DOMAIN: usize = 4096;

/// A relation table, row-major over `domain^arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table<T> {
    pub arity: usize,
    pub values: Vec<T>,
}

impl<T: Copy> Table<T> {
    fn get(&self, n: usize, args: &[usize]) -> T {
        let i = args.iter().fold(0, |acc, &a| acc * n + a);
        self.values[i]
    }
}

fn table_len(n: usize, arity: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..arity {
        len = len
            .checked_mul(n)
            .filter(|&l| l <= 1 << 24)
            .ok_or_else(|| Error::TooLarge("relation table too large".into()))?;
    }
    Ok(len)
}

fn check_ids(ids: &[String]) -> Result<BTreeMap<String, usize>> {
    if ids.is_empty() {
        return Err(Error::InvalidModel("empty domain".into()));
    }
    let mut index = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::InvalidModel("empty element id".into()));
        }
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::InvalidModel(format!("duplicate element `{id}`")));
        }
    }
    Ok(index)
}

fn check_constants(constants: &BTreeMap<String, usize>, n: usize) -> Result<()> {
    for (c, &v) in constants {
        if c.starts_with(ELEMENT_PREFIX) {
            return Err(Error::InvalidModel(format!(
                "constant `{c}` clashes with the element constant prefix"
            )));
        }
        if v >= n {
            return Err(Error::InvalidModel(format!(
                "constant `{c}` points outside the domain"
            )));
        }
    }
    Ok(())
}

/// An environment mapping variable names to domain indices, innermost last.
type Env<'a> = Vec<(&'a str, usize)>;

fn lookup(env: &Env<'_>, v: &str) -> Option<usize> {
    env.iter().rev().find(|(n, _)| *n == v).map(|&(_, i)| i)
}

fn resolve(
    t: &Term,
    env: &Env<'_>,
    constants: &BTreeMap<String, usize>,
    index: &BTreeMap<String, usize>,
) -> Result<usize> {
    match t {
        Term::Var(v) => lookup(env, v).ok_or_else(|| Error::FreeVariable(v.clone())),
        Term::Const(c) => constants
            .get(c)
            .or_else(|| c.strip_prefix(ELEMENT_PREFIX).and_then(|id| index.get(id)))
            .copied()
            .ok_or_else(|| Error::UnknownConstant(c.clone())),
    }
}

/// Relation name to arity and values, as accepted by [`BVModel::new`].
pub type RelationValues = BTreeMap<String, (usize, Vec<Elem>)>;

/// A boolean-valued model: `⟦σ = τ⟧` and `⟦R(σ̄)⟧` take values in a
/// finite algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BVModel {
    algebra: BoolAlg,
    domain: Vec<String>,
    index: BTreeMap<String, usize>,
    eq: Vec<Bits>,
    relations: BTreeMap<String, Table<Bits>>,
    constants: BTreeMap<String, usize>,
}

/// Incremental construction of a [`BVModel`]. Missing equalities default
/// to `1` on the diagonal and to the mirrored entry otherwise; missing
/// relation entries default to `0`.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    algebra: BoolAlg,
    domain: Vec<String>,
    eq: BTreeMap<(usize, usize), Elem>,
    relations: BTreeMap<String, (usize, BTreeMap<Vec<usize>, Elem>)>,
    constants: BTreeMap<String, usize>,
}

impl ModelBuilder {
    pub fn new<S: Into<String>>(algebra: BoolAlg, domain: impl IntoIterator<Item = S>) -> Self {
        ModelBuilder {
            algebra,
            domain: domain.into_iter().map(Into::into).collect(),
            eq: BTreeMap::new(),
            relations: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    fn idx(&self, id: &str) -> Result<usize> {
        self.domain
            .iter()
            .position(|d| d == id)
            .ok_or_else(|| Error::InvalidModel(format!("unknown element `{id}`")))
    }

    pub fn eq(mut self, a: &str, b: &str, value: Elem) -> Result<Self> {
        let k = (self.idx(a)?, self.idx(b)?);
        self.eq.insert(k, value);
        Ok(self)
    }

    pub fn relation(mut self, name: &str, arity: usize) -> Self {
        self.relations
            .entry(name.to_string())
            .or_insert((arity, BTreeMap::new()));
        self
    }

    pub fn rel(mut self, name: &str, args: &[&str], value: Elem) -> Result<Self> {
        let args: Vec<usize> = args.iter().map(|a| self.idx(a)).collect::<Result<_>>()?;
        let entry = self
            .relations
            .entry(name.to_string())
            .or_insert((args.len(), BTreeMap::new()));
        if entry.0 != args.len() {
            return Err(Error::InvalidModel(format!(
                "relation `{name}` used with arities {} and {}",
                entry.0,
                args.len()
            )));
        }
        entry.1.insert(args, value);
        Ok(self)
    }

    pub fn constant(mut self, name: &str, id: &str) -> Result<Self> {
        let i = self.idx(id)?;
        self.constants.insert(name.to_string(), i);
        Ok(self)
    }

    fn tables(&self) -> Result<(Vec<Elem>, RelationValues)> {
        let n = self.domain.len();
        let b = &self.algebra;
        let mut eq = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = match (self.eq.get(&(i, j)), self.eq.get(&(j, i))) {
                    (Some(&v), _) => v,
                    (None, Some(&v)) => v,
                    (None, None) if i == j => b.top(),
                    (None, None) => b.bottom(),
                };
                eq.push(v);
            }
        }
        let mut rels = BTreeMap::new();
        for (name, (arity, entries)) in &self.relations {
            let mut vals = vec![b.bottom(); table_len(n, *arity)?];
            for (args, &v) in entries {
                let k = args.iter().fold(0, |acc, &a| acc * n + a);
                vals[k] = v;
            }
            rels.insert(name.clone(), (*arity, vals));
        }
        Ok((eq, rels))
    }

    /// Builds and validates.
    pub fn build(self) -> Result<BVModel> {
        let (eq, rels) = self.tables()?;
        BVModel::new(self.algebra, self.domain, eq, rels, self.constants)
    }

    /// Builds without checking the equality and congruence axioms.
    pub fn build_unchecked(self) -> Result<BVModel> {
        let (eq, rels) = self.tables()?;
        BVModel::new_unchecked(self.algebra, self.domain, eq, rels, self.constants)
    }
}

/// A failed axiom, with the elements that witness it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Reflexivity(usize),
    Symmetry(usize, usize),
    Transitivity(usize, usize, usize),
    /// `⟦R(from)⟧ ∧ ⟦from = to⟧ ≰ ⟦R(to)⟧`; the tuples differ in one place.
    Congruence {
        relation: String,
        from: Vec<usize>,
        to: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub extensional: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl BVModel {
    /// Checks shapes and then the equality and congruence axioms. The
    /// error names the first violation.
    pub fn new(
        algebra: BoolAlg,
        domain: Vec<String>,
        eq: Vec<Elem>,
        relations: BTreeMap<String, (usize, Vec<Elem>)>,
        constants: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let m = Self::new_unchecked(algebra, domain, eq, relations, constants)?;
        let report = m.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidModel(m.describe_violation(v)));
        }
        Ok(m)
    }

    /// Checks shapes only.
    pub fn new_unchecked(
        algebra: BoolAlg,
        domain: Vec<String>,
        eq: Vec<Elem>,
        relations: BTreeMap<String, (usize, Vec<Elem>)>,
        constants: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let index = check_ids(&domain)?;
        let n = domain.len();
        if eq.len() != n * n {
            return Err(Error::InvalidModel(format!(
                "equality table has {} entries, expected {}",
                eq.len(),
                n * n
            )));
        }
        let own = |e: &Elem| {
            if algebra.owns(*e) {
                Ok(e.bits())
            } else {
                Err(Error::AlgebraMismatch)
            }
        };
        let eq = eq.iter().map(own).collect::<Result<Vec<_>>>()?;
        let mut rels = BTreeMap::new();
        for (name, (arity, vals)) in relations {
            if name.is_empty() {
                return Err(Error::InvalidModel("empty relation name".into()));
            }
            if vals.len() != table_len(n, arity)? {
                return Err(Error::InvalidModel(format!(
                    "relation `{name}` has {} entries, expected {n}^{arity}",
                    vals.len()
                )));
            }
            let values = vals.iter().map(own).collect::<Result<Vec<_>>>()?;
            rels.insert(name, Table { arity, values });
        }
        check_constants(&constants, n)?;
        Ok(BVModel {
            algebra,
            domain,
            index,
            eq,
            relations: rels,
            constants,
        })
    }

    /// Builds the model whose ultrafilter quotients are the given Tarski
    /// structures: `class_of[a][σ]` is the element of `stalks[a]`
    /// representing `σ` at atom `a`.
    pub fn from_stalks(
        algebra: BoolAlg,
        domain: Vec<String>,
        class_of: &[Vec<usize>],
        stalks: &[TarskiModel],
        constants: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let k = algebra.len();
        let n = domain.len();
        if class_of.len() != k || stalks.len() != k {
            return Err(Error::InvalidModel(
                "need one stalk structure per atom".into(),
            ));
        }
        for a in 0..k {
            if class_of[a].len() != n || class_of[a].iter().any(|&c| c >= stalks[a].len()) {
                return Err(Error::InvalidModel(format!(
                    "class assignment at atom {} is malformed",
                    algebra.label(a)
                )));
            }
        }
        let sig = stalks[0].signature();
        if stalks
            .iter()
            .any(|s| s.signature().relations != sig.relations)
        {
            return Err(Error::SignatureMismatch(
                "stalk structures disagree on relations".into(),
            ));
        }
        let mut eq = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let b = (0..k)
                    .filter(|&a| class_of[a][i] == class_of[a][j])
                    .fold(0, |acc, a| acc | bits::bit(a));
                eq.push(algebra.elem(b)?);
            }
        }
        let mut rels = BTreeMap::new();
        for (name, &arity) in &sig.relations {
            let mut vals = Vec::new();
            for t in logic::tuples(n, arity) {
                let b = (0..k)
                    .filter(|&a| {
                        let args: Vec<usize> = t.iter().map(|&s| class_of[a][s]).collect();
                        stalks[a].holds(name, &args)
                    })
                    .fold(0, |acc, a| acc | bits::bit(a));
                vals.push(algebra.elem(b)?);
            }
            rels.insert(name.clone(), (arity, vals));
        }
        BVModel::new(algebra, domain, eq, rels, constants)
    }

    pub fn algebra(&self) -> &BoolAlg {
        &self.algebra
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn id(&self, i: usize) -> &str {
        &self.domain[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, t)| (n.as_str(), t.arity))
    }

    pub fn signature(&self) -> Signature {
        Signature {
            relations: self
                .relations
                .iter()
                .map(|(n, t)| (n.clone(), t.arity))
                .collect(),
            constants: self.constants.keys().cloned().collect(),
        }
    }

    fn mk(&self, b: Bits) -> Elem {
        self.algebra
            .elem(b)
            .expect("model values lie in the algebra")
    }

    fn eq_bits(&self, i: usize, j: usize) -> Bits {
        self.eq[i * self.len() + j]
    }

    /// `⟦σ_i = σ_j⟧`.
    pub fn eq_value(&self, i: usize, j: usize) -> Elem {
        self.mk(self.eq_bits(i, j))
    }

    /// `⟦R(args)⟧`.
    pub fn rel_value(&self, name: &str, args: &[usize]) -> Result<Elem> {
        let t = self
            .relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        if t.arity != args.len() || args.iter().any(|&a| a >= self.len()) {
            return Err(Error::SignatureMismatch(format!(
                "`{name}` applied to {} arguments",
                args.len()
            )));
        }
        Ok(self.mk(t.get(self.len(), args)))
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.len();
        let top = self.algebra.top_bits();
        let mut violations = Vec::new();
        for i in 0..n {
            if self.eq_bits(i, i) != top {
                violations.push(Violation::Reflexivity(i));
            }
            for j in 0..n {
                if self.eq_bits(i, j) != self.eq_bits(j, i) && i < j {
                    violations.push(Violation::Symmetry(i, j));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = self.eq_bits(i, j) & self.eq_bits(j, k);
                    if !bits::subset(lhs, self.eq_bits(i, k)) {
                        violations.push(Violation::Transitivity(i, j, k));
                    }
                }
            }
        }
        for (name, t) in &self.relations {
            for (row, from) in logic::tuples(n, t.arity).into_iter().enumerate() {
                for pos in 0..t.arity {
                    for other in 0..n {
                        let mut to = from.clone();
                        to[pos] = other;
                        let lhs = t.values[row] & self.eq_bits(from[pos], other);
                        if !bits::subset(lhs, t.get(n, &to)) {
                            violations.push(Violation::Congruence {
                                relation: name.clone(),
                                from: from.clone(),
                                to,
                            });
                        }
                    }
                }
            }
        }
        let extensional = (0..n).all(|i| (0..n).all(|j| i == j || self.eq_bits(i, j) != top));
        ValidationReport {
            violations,
            extensional,
        }
    }

    pub fn describe_violation(&self, v: &Violation) -> String {
        let d = |i: &usize| self.domain[*i].as_str();
        match v {
            Violation::Reflexivity(i) => format!("reflexivity fails at {}", d(i)),
            Violation::Symmetry(i, j) => format!("symmetry fails at ({}, {})", d(i), d(j)),
            Violation::Transitivity(i, j, k) => {
                format!("transitivity fails on ({}, {}, {})", d(i), d(j), d(k))
            }
            Violation::Congruence { relation, from, to } => {
                let f: Vec<&str> = from.iter().map(d).collect();
                let t: Vec<&str> = to.iter().map(d).collect();
                format!(
                    "congruence fails for {relation}: ({}) to ({})",
                    f.join(", "),
                    t.join(", ")
                )
            }
        }
    }

    pub fn is_extensional(&self) -> bool {
        self.validate().extensional
    }

    /// `⟦φ⟧` for a closed formula.
    pub fn eval(&self, f: &Formula) -> Result<Elem> {
        self.eval_with(f, &[])
    }

    /// `⟦φ⟧` with free variables bound by `assignment`.
    pub fn eval_with(&self, f: &Formula, assignment: &[(&str, usize)]) -> Result<Elem> {
        if let Some(&(_, i)) = assignment.iter().find(|&&(_, i)| i >= self.len()) {
            return Err(Error::InvalidModel(format!("no element with index {i}")));
        }
        let mut env: Env<'_> = assignment.to_vec();
        if let Some(v) = f
            .free_vars()
            .into_iter()
            .find(|v| lookup(&env, v).is_none())
        {
            return Err(Error::FreeVariable(v));
        }
        Ok(self.mk(self.ev(f, &mut env)?))
    }

    fn ev<'a>(&self, f: &'a Formula, env: &mut Env<'a>) -> Result<Bits> {
        let top = self.algebra.top_bits();
        let term = |t: &Term, env: &Env<'_>| resolve(t, env, &self.constants, &self.index);
        Ok(match f {
            Formula::Rel(r, ts) => {
                let tbl = self
                    .relations
                    .get(r)
                    .ok_or_else(|| Error::UnknownRelation(r.clone()))?;
                if tbl.arity != ts.len() {
                    return Err(Error::SignatureMismatch(format!(
                        "`{r}` has arity {} but is applied to {} terms",
                        tbl.arity,
                        ts.len()
                    )));
                }
                let args = ts
                    .iter()
                    .map(|t| term(t, env))
                    .collect::<Result<Vec<_>>>()?;
                tbl.get(self.len(), &args)
            }
            Formula::Eq(a, b) => self.eq_bits(term(a, env)?, term(b, env)?),
            Formula::Not(a) => !self.ev(a, env)? & top,
            Formula::And(a, b) => self.ev(a, env)? & self.ev(b, env)?,
            Formula::Or(a, b) => self.ev(a, env)? | self.ev(b, env)?,
            Formula::Implies(a, b) => (!self.ev(a, env)? & top) | self.ev(b, env)?,
            Formula::Exists(v, a) | Formula::Forall(v, a) => {
                let exists = matches!(f, Formula::Exists(..));
                let mut acc = if exists { 0 } else { top };
                for i in 0..self.len() {
                    env.push((v.as_str(), i));
                    let r = self.ev(a, env);
                    env.pop();
                    acc = if exists { acc | r? } else { acc & r? };
                }
                acc
            }
        })
    }

    /// Class of each element in `M/F`: the least element `τ` with
    /// `⟦σ = τ⟧ ∈ F`.
    pub fn classes_mod(&self, g: Bits) -> Vec<usize> {
        (0..self.len())
            .map(|i| {
                (0..self.len())
                    .find(|&j| bits::subset(g, self.eq_bits(i, j)))
                    .expect("reflexivity")
            })
            .collect()
    }

    /// `M/F` over `B/F`. Representatives are least elements of classes.
    pub fn quotient_model(&self, f: &Filter) -> Result<QuotientModel> {
        if !self.algebra.owns(f.generator()) {
            return Err(Error::AlgebraMismatch);
        }
        let quotient = self.algebra.quotient(f)?;
        let rep = self.classes_mod(f.generator().bits());
        let mut reps: Vec<usize> = rep.clone();
        reps.sort_unstable();
        reps.dedup();
        let class_of: Vec<usize> = rep
            .iter()
            .map(|r| reps.binary_search(r).expect("rep is listed"))
            .collect();
        let p = |b: Bits| quotient.project(self.mk(b));
        let m = reps.len();
        let mut eq = Vec::with_capacity(m * m);
        for &i in &reps {
            for &j in &reps {
                eq.push(p(self.eq_bits(i, j)));
            }
        }
        let mut rels = BTreeMap::new();
        for (name, t) in &self.relations {
            let vals = logic::tuples(m, t.arity)
                .into_iter()
                .map(|args| {
                    let orig: Vec<usize> = args.iter().map(|&a| reps[a]).collect();
                    p(t.get(self.len(), &orig))
                })
                .collect();
            rels.insert(name.clone(), (t.arity, vals));
        }
        let constants = self
            .constants
            .iter()
            .map(|(c, &v)| (c.clone(), class_of[v]))
            .collect();
        let model = BVModel::new_unchecked(
            quotient.algebra.clone(),
            reps.iter().map(|&r| self.domain[r].clone()).collect(),
            eq,
            rels,
            constants,
        )?;
        Ok(QuotientModel {
            model,
            quotient,
            class_of,
        })
    }

    /// The two-valued quotient `M/G` for an ultrafilter `G`.
    pub fn tarski_quotient(&self, g: &Filter) -> Result<TarskiQuotient> {
        let atom = g
            .atom()
            .ok_or_else(|| Error::InvalidFilter("not an ultrafilter".into()))?;
        if !self.algebra.owns(g.generator()) {
            return Err(Error::AlgebraMismatch);
        }
        let rep = self.classes_mod(g.generator().bits());
        let mut reps = rep.clone();
        reps.sort_unstable();
        reps.dedup();
        let class_of: Vec<usize> = rep
            .iter()
            .map(|r| reps.binary_search(r).expect("rep is listed"))
            .collect();
        let m = reps.len();
        let mut rels = BTreeMap::new();
        for (name, t) in &self.relations {
            let vals = logic::tuples(m, t.arity)
                .into_iter()
                .map(|args| {
                    let orig: Vec<usize> = args.iter().map(|&a| reps[a]).collect();
                    bits::has(t.get(self.len(), &orig), atom)
                })
                .collect();
            rels.insert(name.clone(), (t.arity, vals));
        }
        let constants = self
            .constants
            .iter()
            .map(|(c, &v)| (c.clone(), class_of[v]))
            .collect();
        let model = TarskiModel::new(
            reps.iter().map(|&r| self.domain[r].clone()).collect(),
            rels,
            constants,
        )?;
        Ok(TarskiQuotient { model, class_of })
    }

    /// Fullness at the given depth, decided twice: by the Łoś test at every
    /// ultrafilter and by finding a minimal witness cover for every
    /// existential instance.
    pub fn is_full(&self, depth: usize) -> Result<FullnessReport> {
        let formulas = logic::enumerate(&self.signature(), depth);
        let quotients = self
            .algebra
            .ultrafilters()
            .iter()
            .map(|g| self.tarski_quotient(g))
            .collect::<Result<Vec<_>>>()?;
        let mut report = FullnessReport {
            depth,
            formulas: Vec::new(),
            instances: 0,
            los_failure: None,
            covers: Vec::new(),
            cover_failure: None,
        };
        for (fi, f) in formulas.iter().enumerate() {
            let fv = f.free_vars();
            for params in logic::tuples(self.len(), fv.len()) {
                report.instances += 1;
                let asg: Vec<(&str, usize)> = fv
                    .iter()
                    .map(String::as_str)
                    .zip(params.iter().copied())
                    .collect();
                let value = self.eval_with(f, &asg)?;
                if report.los_failure.is_none() {
                    for (a, q) in quotients.iter().enumerate() {
                        let qasg: Vec<(&str, usize)> =
                            asg.iter().map(|&(v, i)| (v, q.class_of[i])).collect();
                        let tarski = q.model.satisfies_with(f, &qasg)?;
                        if tarski != bits::has(value.bits(), a) {
                            report.los_failure = Some(LosFailure {
                                formula: fi,
                                assignment: params.clone(),
                                ultrafilter: a,
                                value,
                                tarski,
                            });
                            break;
                        }
                    }
                }
                if let Formula::Exists(x, body) = f {
                    match self.minimal_cover(x, body, &asg, value)? {
                        Some(witnesses) => report.covers.push(WitnessCover {
                            formula: fi,
                            assignment: params.clone(),
                            witnesses,
                            value,
                        }),
                        None => {
                            if report.cover_failure.is_none() {
                                report.cover_failure = Some(WitnessCover {
                                    formula: fi,
                                    assignment: params.clone(),
                                    witnesses: Vec::new(),
                                    value,
                                });
                            }
                        }
                    }
                }
            }
        }
        report.formulas = formulas;
        Ok(report)
    }

    /// Smallest set of witnesses `τ` whose values `⟦ψ(τ)⟧` join to `target`.
    pub fn minimal_cover(
        &self,
        x: &str,
        body: &Formula,
        assignment: &[(&str, usize)],
        target: Elem,
    ) -> Result<Option<Vec<usize>>> {
        let mut vals = Vec::with_capacity(self.len());
        for t in 0..self.len() {
            let mut asg = assignment.to_vec();
            asg.push((x, t));
            vals.push(self.eval_with(body, &asg)?.bits());
        }
        let goal = target.bits();
        if goal == 0 {
            return Ok(Some(Vec::new()));
        }
        let useful: Vec<usize> = (0..self.len()).filter(|&t| vals[t] != 0).collect();
        for k in 1..=useful.len().min(bits::count(goal)) {
            let mut pick: Vec<usize> = (0..k).collect();
            loop {
                let j = pick.iter().fold(0, |acc, &p| acc | vals[useful[p]]);
                if j == goal {
                    return Ok(Some(pick.iter().map(|&p| useful[p]).collect()));
                }
                let mut i = k;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if pick[i] < useful.len() - k + i {
                        pick[i] += 1;
                        for l in i + 1..k {
                            pick[l] = pick[l - 1] + 1;
                        }
                        i = usize::MAX;
                        break;
                    }
                }
                if i != usize::MAX {
                    break;
                }
            }
        }
        Ok(None)
    }

    /// The mixing property over antichains of at most `max` elements,
    /// smallest antichains first. Assignments range over class
    /// representatives.
    pub fn has_mixing(&self, max: Option<usize>) -> Result<MixingReport> {
        if self.algebra.len() > 10 {
            return Err(Error::TooLarge(
                "antichain enumeration limited to 10 atoms".into(),
            ));
        }
        let mut chains = Vec::new();
        antichains(
            self.algebra.top_bits(),
            0,
            &mut Vec::new(),
            &mut chains,
            max,
        );
        chains.sort_by_key(Vec::len);
        let mut checked = 0;
        for chain in &chains {
            let reps: Vec<Vec<usize>> = chain
                .iter()
                .map(|&a| {
                    let mut r = self.classes_mod(a);
                    r.sort_unstable();
                    r.dedup();
                    r
                })
                .collect();
            let mut pick = vec![0usize; chain.len()];
            loop {
                checked += 1;
                let asg: Vec<usize> = pick.iter().zip(&reps).map(|(&p, r)| r[p]).collect();
                let mixed = (0..self.len()).any(|t| {
                    chain
                        .iter()
                        .zip(&asg)
                        .all(|(&a, &s)| bits::subset(a, self.eq_bits(t, s)))
                });
                if !mixed {
                    return Ok(MixingReport {
                        checked,
                        failure: Some(MixingFailure {
                            antichain: chain.iter().map(|&a| self.mk(a)).collect(),
                            assignment: asg,
                        }),
                    });
                }
                let mut done = true;
                for k in (0..pick.len()).rev() {
                    pick[k] += 1;
                    if pick[k] < reps[k].len() {
                        done = false;
                        break;
                    }
                    pick[k] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Ok(MixingReport {
            checked,
            failure: None,
        })
    }
}

/// Appends every antichain of pairwise disjoint nonzero elements whose
/// members come after `min` in bit order.
fn antichains(
    free: Bits,
    min: Bits,
    cur: &mut Vec<Bits>,
    out: &mut Vec<Vec<Bits>>,
    max: Option<usize>,
) {
    if !cur.is_empty() {
        out.push(cur.clone());
    }
    if max.is_some_and(|m| cur.len() >= m) {
        return;
    }
    for s in bits::submasks(free) {
        if s <= min {
            continue;
        }
        cur.push(s);
        antichains(free & !s, s, cur, out, max);
        cur.pop();
    }
}

#[derive(Clone, Debug)]
pub struct QuotientModel {
    pub model: BVModel,
    pub quotient: Quotient,
    pub class_of: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TarskiQuotient {
    pub model: TarskiModel,
    pub class_of: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LosFailure {
    pub formula: usize,
    pub assignment: Vec<usize>,
    pub ultrafilter: usize,
    pub value: Elem,
    pub tarski: bool,
}

#[derive(Clone, Debug)]
pub struct WitnessCover {
    pub formula: usize,
    pub assignment: Vec<usize>,
    pub witnesses: Vec<usize>,
    pub value: Elem,
}

#[derive(Clone, Debug)]
pub struct FullnessReport {
    pub depth: usize,
    pub formulas: Vec<Formula>,
    pub instances: usize,
    pub los_failure: Option<LosFailure>,
    pub covers: Vec<WitnessCover>,
    pub cover_failure: Option<WitnessCover>,
}

impl FullnessReport {
    pub fn los_holds(&self) -> bool {
        self.los_failure.is_none()
    }

    pub fn covers_hold(&self) -> bool {
        self.cover_failure.is_none()
    }

    pub fn is_full(&self) -> bool {
        self.los_holds() && self.covers_hold()
    }

    pub fn procedures_agree(&self) -> bool {
        self.los_holds() == self.covers_hold()
    }

    /// The formula of a cover or failure with its parameters substituted.
    pub fn instance(&self, model: &BVModel, formula: usize, assignment: &[usize]) -> Formula {
        let f = &self.formulas[formula];
        f.free_vars()
            .iter()
            .zip(assignment)
            .fold(f.clone(), |acc, (v, &i)| {
                acc.substitute(v, &Term::element(model.id(i)))
            })
    }
}

#[derive(Clone, Debug)]
pub struct MixingFailure {
    pub antichain: Vec<Elem>,
    pub assignment: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MixingReport {
    pub checked: usize,
    pub failure: Option<MixingFailure>,
}

impl MixingReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

/// An ordinary two-valued structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TarskiModel {
    domain: Vec<String>,
    index: BTreeMap<String, usize>,
    relations: BTreeMap<String, Table<bool>>,
    constants: BTreeMap<String, usize>,
}

impl TarskiModel {
    pub fn new(
        domain: Vec<String>,
        relations: BTreeMap<String, (usize, Vec<bool>)>,
        constants: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let index = check_ids(&domain)?;
        let n = domain.len();
        let mut rels = BTreeMap::new();
        for (name, (arity, values)) in relations {
            if values.len() != table_len(n, arity)? {
                return Err(Error::InvalidModel(format!(
                    "relation `{name}` has {} entries, expected {n}^{arity}",
                    values.len()
                )));
            }
            rels.insert(name, Table { arity, values });
        }
        check_constants(&constants, n)?;
        Ok(TarskiModel {
            domain,
            index,
            relations: rels,
            constants,
        })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn signature(&self) -> Signature {
        Signature {
            relations: self
                .relations
                .iter()
                .map(|(n, t)| (n.clone(), t.arity))
                .collect(),
            constants: self.constants.keys().cloned().collect(),
        }
    }

    /// Whether `R(args)` holds. Unknown relations and bad tuples are false.
    pub fn holds(&self, name: &str, args: &[usize]) -> bool {
        self.relations
            .get(name)
            .filter(|t| t.arity == args.len() && args.iter().all(|&a| a < self.len()))
            .is_some_and(|t| t.get(self.len(), args))
    }

    pub fn satisfies(&self, f: &Formula) -> Result<bool> {
        self.satisfies_with(f, &[])
    }

    pub fn satisfies_with(&self, f: &Formula, assignment: &[(&str, usize)]) -> Result<bool> {
        let mut env: Env<'_> = assignment.to_vec();
        self.sat(f, &mut env)
    }

    fn sat<'a>(&self, f: &'a Formula, env: &mut Env<'a>) -> Result<bool> {
        let term = |t: &Term, env: &Env<'_>| resolve(t, env, &self.constants, &self.index);
        Ok(match f {
            Formula::Rel(r, ts) => {
                let tbl = self
                    .relations
                    .get(r)
                    .ok_or_else(|| Error::UnknownRelation(r.clone()))?;
                if tbl.arity != ts.len() {
                    return Err(Error::SignatureMismatch(format!(
                        "`{r}` has arity {}",
                        tbl.arity
                    )));
                }
                let args = ts
                    .iter()
                    .map(|t| term(t, env))
                    .collect::<Result<Vec<_>>>()?;
                tbl.get(self.len(), &args)
            }
            Formula::Eq(a, b) => term(a, env)? == term(b, env)?,
            Formula::Not(a) => !self.sat(a, env)?,
            Formula::And(a, b) => self.sat(a, env)? && self.sat(b, env)?,
            Formula::Or(a, b) => self.sat(a, env)? || self.sat(b, env)?,
            Formula::Implies(a, b) => !self.sat(a, env)? || self.sat(b, env)?,
            Formula::Exists(v, a) => {
                for i in 0..self.len() {
                    env.push((v.as_str(), i));
                    let r = self.sat(a, env);
                    env.pop();
                    if r? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Forall(v, a) => {
                for i in 0..self.len() {
                    env.push((v.as_str(), i));
                    let r = self.sat(a, env);
                    env.pop();
                    if !r? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    /// A bijection onto `other` preserving relations and constants.
    pub fn isomorphism_to(&self, other: &TarskiModel) -> Option<Vec<usize>> {
        if self.len() != other.len() || self.signature() != other.signature() {
            return None;
        }
        let n = self.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn go(
            a: &TarskiModel,
            b: &TarskiModel,
            k: usize,
            map: &mut Vec<usize>,
            used: &mut Vec<bool>,
        ) -> bool {
            let n = a.len();
            if k == n {
                return a.constants.iter().all(|(c, &v)| b.constants[c] == map[v])
                    && a.relations.iter().all(|(name, t)| {
                        logic::tuples(n, t.arity).iter().all(|args| {
                            let img: Vec<usize> = args.iter().map(|&i| map[i]).collect();
                            t.get(n, args) == b.holds(name, &img)
                        })
                    });
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    map[k] = j;
                    if go(a, b, k + 1, map, used) {
                        return true;
                    }
                    used[j] = false;
                }
            }
            false
        }
        go(self, other, 0, &mut map, &mut used).then_some(map)
    }
}

/// `∏ N_i` as a `P(I)`-valued model on the choice functions. Atoms are
/// named `i0, i1, ...`.
pub fn product_model(factors: &[TarskiModel]) -> Result<BVModel> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidModel("empty product".into()))?;
    let sig = first.signature();
    if let Some(bad) = factors.iter().position(|f| f.signature() != sig) {
        return Err(Error::SignatureMismatch(format!(
            "factor {bad} has a different signature"
        )));
    }
    let mut size: usize = 1;
    for f in factors {
        size = size
            .checked_mul(f.len())
            .filter(|&s| s <= MAX_DOMAIN)
            .ok_or_else(|| Error::TooLarge("product domain too large".into()))?;
    }
    let algebra = BoolAlg::new((0..factors.len()).map(|i| format!("i{i}")))?;
    let mut choices: Vec<Vec<usize>> = vec![Vec::new()];
    for f in factors {
        choices = choices
            .into_iter()
            .flat_map(|c| {
                (0..f.len()).map(move |j| {
                    let mut c = c.clone();
                    c.push(j);
                    c
                })
            })
            .collect();
    }
    let mut ids: Vec<String> = choices
        .iter()
        .map(|c| {
            let parts: Vec<&str> = c
                .iter()
                .zip(factors)
                .map(|(&j, f)| f.domain[j].as_str())
                .collect();
            parts.join("_")
        })
        .collect();
    if check_ids(&ids).is_err() {
        ids = (0..choices.len()).map(|i| format!("p{i}")).collect();
    }
    let classes: Vec<Vec<usize>> = (0..factors.len())
        .map(|i| choices.iter().map(|c| c[i]).collect())
        .collect();
    let constants = sig
        .constants
        .iter()
        .map(|c| {
            let pick: Vec<usize> = factors.iter().map(|f| f.constants[c]).collect();
            (
                c.clone(),
                choices.iter().position(|x| *x == pick).expect("in product"),
            )
        })
        .collect();
    BVModel::from_stalks(algebra, ids, &classes, factors, constants)
}

/// `∏ N_i / G` for an ultrafilter `G` of `P(I)`.
pub fn ultraproduct(factors: &[TarskiModel], g: &Filter) -> Result<TarskiQuotient> {
    product_model(factors)?.tarski_quotient(g)
}

/// `(Φ, i)`: a map on domains together with a homomorphism of the value
/// algebras.
#[derive(Clone, Debug)]
pub struct BVMorphism {
    pub hom: BAHom,
    pub map: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct MorphismReport {
    pub is_morphism: bool,
    pub is_embedding: bool,
    pub is_isomorphism: bool,
    pub violations: Vec<String>,
}

impl fmt::Display for MorphismReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "morphism: {}, embedding: {}, isomorphism: {}",
            self.is_morphism, self.is_embedding, self.is_isomorphism
        )
    }
}

fn check_shape(source: &BVModel, target: &BVModel, m: &BVMorphism) -> Result<()> {
    if *m.hom.source() != source.algebra || *m.hom.target() != target.algebra {
        return Err(Error::InvalidMorphism(
            "homomorphism does not connect the models' algebras".into(),
        ));
    }
    if m.map.len() != source.len() || m.map.iter().any(|&j| j >= target.len()) {
        return Err(Error::InvalidMorphism(
            "element map does not send the source domain into the target".into(),
        ));
    }
    if source.signature() != target.signature() {
        return Err(Error::SignatureMismatch(
            "models differ in signature".into(),
        ));
    }
    Ok(())
}

/// Checks `i(⟦R(σ̄)⟧) ≤ ⟦R(Φσ̄)⟧` (morphism), with equality and `i`
/// injective (embedding), and additionally `i` bijective and `Φ` onto up
/// to `⟦=⟧ = 1` (isomorphism).
pub fn check_morphism(
    source: &BVModel,
    target: &BVModel,
    m: &BVMorphism,
) -> Result<MorphismReport> {
    check_shape(source, target, m)?;
    let (n, phi) = (source.len(), &m.map);
    let tb = &target.algebra;
    let mut weak = true;
    let mut exact = true;
    let mut violations = Vec::new();
    let mut compare = |what: String, src: Elem, tgt: Elem| {
        let img = m.hom.apply(src);
        if !tb.leq(img, tgt) {
            weak = false;
            violations.push(format!(
                "{what}: i({}) = {} is not below {}",
                source.algebra.show(src),
                tb.show(img),
                tb.show(tgt)
            ));
        }
        if img != tgt {
            exact = false;
        }
    };
    for i in 0..n {
        for j in 0..n {
            compare(
                format!("{} = {}", source.id(i), source.id(j)),
                source.eq_value(i, j),
                target.eq_value(phi[i], phi[j]),
            );
        }
    }
    for (name, arity) in source.relations() {
        for args in logic::tuples(n, arity) {
            let img: Vec<usize> = args.iter().map(|&a| phi[a]).collect();
            let ids: Vec<&str> = args.iter().map(|&a| source.id(a)).collect();
            compare(
                format!("{name}({})", ids.join(", ")),
                source.rel_value(name, &args)?,
                target.rel_value(name, &img)?,
            );
        }
    }
    for (c, &v) in &source.constants {
        let w = target.constants[c];
        if target.eq_value(phi[v], w) != tb.top() {
            weak = false;
            exact = false;
            violations.push(format!("constant {c} is not preserved"));
        }
    }
    let is_embedding = weak && exact && m.hom.is_injective();
    let onto = (0..target.len()).all(|t| phi.iter().any(|&s| target.eq_value(s, t) == tb.top()));
    Ok(MorphismReport {
        is_morphism: weak,
        is_embedding,
        is_isomorphism: is_embedding && m.hom.is_surjective() && onto,
        violations,
    })
}

#[derive(Clone, Debug)]
pub struct ElementaryReport {
    pub checked: usize,
    pub failure: Option<(Formula, Vec<usize>)>,
}

impl ElementaryReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

/// `i(⟦φ(ā)⟧) = ⟦φ(Φā)⟧` for the enumerated formulas of the given depth.
pub fn is_elementary(
    source: &BVModel,
    target: &BVModel,
    m: &BVMorphism,
    depth: usize,
) -> Result<ElementaryReport> {
    check_shape(source, target, m)?;
    let mut checked = 0;
    for f in logic::enumerate(&source.signature(), depth) {
        let fv = f.free_vars();
        for params in logic::tuples(source.len(), fv.len()) {
            checked += 1;
            let a: Vec<(&str, usize)> = fv
                .iter()
                .map(String::as_str)
                .zip(params.iter().copied())
                .collect();
            let b: Vec<(&str, usize)> = a.iter().map(|&(v, i)| (v, m.map[i])).collect();
            let lhs = m.hom.apply(source.eval_with(&f, &a)?);
            if lhs != target.eval_with(&f, &b)? {
                return Ok(ElementaryReport {
                    checked,
                    failure: Some((f, params)),
                });
            }
        }
    }
    Ok(ElementaryReport {
        checked,
        failure: None,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn b4() -> BoolAlg {
        BoolAlg::numbered(2).unwrap()
    }

    /// Two elements over `B4` that are nowhere equal.
    pub fn mnm() -> BVModel {
        let b = b4();
        ModelBuilder::new(b.clone(), ["σ", "τ"])
            .eq("σ", "τ", b.bottom())
            .unwrap()
            .build()
            .unwrap()
    }

    /// `MNM` with `⟦R(σ)⟧ = a1` and `⟦R(τ)⟧ = a2`.
    pub fn m_r() -> BVModel {
        let b = b4();
        ModelBuilder::new(b.clone(), ["σ", "τ"])
            .eq("σ", "τ", b.bottom())
            .unwrap()
            .rel("R", &["σ"], b.atom(0).unwrap())
            .unwrap()
            .rel("R", &["τ"], b.atom(1).unwrap())
            .unwrap()
            .build()
            .unwrap()
    }
}
