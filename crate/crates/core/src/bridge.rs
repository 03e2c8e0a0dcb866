//! The functors between boolean-valued models and separated presheaves on
//! `B⁺`, their adjunction, mixing as a sheaf condition, mixification and
//! fullness read off from sections.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::balg::{BAHom, BoolAlg, Elem};
use crate::bits::{self, Bits};
use crate::bvm::{check_morphism, is_elementary, BVModel, BVMorphism, MorphismReport, TarskiModel};
use crate::logic::{self, Formula};
use crate::sheaf::{
    check_sheaf, find_isomorphism, lambda0, lambda1, validate_morphism, Base, BaseKind, Coverage,
    EtaleSpace, Germ, Presheaf, PresheafMorphism,
};
use crate::{Error, Result};

/// Relational structure carried alongside a presheaf of sets: a Tarski
/// structure per atom and, per atom, the element of that structure each
/// section over the atom stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelStructure {
    pub stalks: Vec<TarskiModel>,
    pub class_of: Vec<Vec<usize>>,
}

/// `L(M)` with the structure `R` needs to rebuild relations.
#[derive(Clone, Debug)]
pub struct LPresheaf {
    pub presheaf: Presheaf,
    pub structure: ModelStructure,
}

fn atom_level(base: &Base, a: usize) -> Result<usize> {
    base.level_of_set(bits::bit(a))
        .ok_or_else(|| Error::InvalidPresheaf("base has no level for an atom".into()))
}

fn top_level(base: &Base) -> Result<usize> {
    base.top()
        .ok_or_else(|| Error::InvalidPresheaf("base has no greatest level".into()))
}

/// Sorted least representatives of the classes of `M` modulo `F_b`.
fn reps(m: &BVModel, b: Bits) -> (Vec<usize>, Vec<usize>) {
    let rep = m.classes_mod(b);
    let mut r = rep.clone();
    r.sort_unstable();
    r.dedup();
    (rep, r)
}

/// `L(M)`: `b ↦ M/F_b` on `B⁺`, sections named by least representatives.
pub fn l_functor(m: &BVModel) -> Result<LPresheaf> {
    let b = m.algebra();
    let base = Base::algebra(b)?;
    let levels: Vec<(Vec<usize>, Vec<usize>)> = base.sets().iter().map(|&s| reps(m, s)).collect();
    let sections = levels
        .iter()
        .map(|(_, r)| r.iter().map(|&i| m.id(i).to_string()).collect())
        .collect();
    let mut restrict = BTreeMap::new();
    for lo in 0..base.len() {
        for hi in 0..base.len() {
            if !base.leq(lo, hi) {
                continue;
            }
            let (rep_lo, r_lo) = &levels[lo];
            let map = levels[hi]
                .1
                .iter()
                .map(|&t| r_lo.binary_search(&rep_lo[t]).expect("representative"))
                .collect();
            restrict.insert((lo, hi), map);
        }
    }
    let presheaf = Presheaf::new(base, sections, restrict)?;
    let stalks = b
        .ultrafilters()
        .iter()
        .map(|g| Ok(m.tarski_quotient(g)?.model))
        .collect::<Result<Vec<_>>>()?;
    let class_of = stalks.iter().map(|s| (0..s.len()).collect()).collect();
    Ok(LPresheaf {
        presheaf,
        structure: ModelStructure { stalks, class_of },
    })
}

/// `R(F)` over `RO(St(B))`: the global sections with
/// `⟦f = g⟧ = ⋁{b : f↾b = g↾b}`. Relations and constants come from the
/// structure when one is given.
pub fn r_functor(f: &Presheaf, structure: Option<&ModelStructure>) -> Result<BVModel> {
    let b = match f.base().kind() {
        BaseKind::Algebra(b) => b,
        _ => {
            return Err(Error::InvalidPresheaf(
                "expected a presheaf on the nonzero elements of an algebra".into(),
            ))
        }
    };
    let report = check_sheaf(f, Coverage::Sup);
    if let Some(w) = report.non_unique {
        let names: Vec<&str> = w
            .collations
            .iter()
            .map(|&s| f.sections(w.level)[s].as_str())
            .collect();
        return Err(Error::NotSeparated(format!(
            "sections {} over {} agree on a covering",
            names.join(", "),
            f.base().label(w.level)
        )));
    }
    let base = f.base();
    let top = top_level(base)?;
    let ro = b.stone_space().space.ro_algebra();
    let alg = ro.algebra.clone();
    let n = f.sections(top).len();
    let mut eq = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let agree = (0..base.len())
                .filter(|&l| f.res(l, top, i) == f.res(l, top, j))
                .fold(0, |acc, l| acc | base.sets()[l]);
            eq.push(ro.elem_of(agree)?);
        }
    }
    let mut rels = BTreeMap::new();
    let mut constants = BTreeMap::new();
    if let Some(st) = structure {
        if st.stalks.len() != b.len() || st.class_of.len() != b.len() {
            return Err(Error::InvalidPresheaf(
                "one stalk structure per atom is needed".into(),
            ));
        }
        let mut class_at = Vec::with_capacity(b.len());
        for a in 0..b.len() {
            let al = atom_level(base, a)?;
            if st.class_of[a].len() != f.sections(al).len()
                || st.class_of[a].iter().any(|&c| c >= st.stalks[a].len())
            {
                return Err(Error::InvalidPresheaf(format!(
                    "stalk structure at {} does not match the sections",
                    b.label(a)
                )));
            }
            class_at.push(
                (0..n)
                    .map(|s| st.class_of[a][f.res(al, top, s)])
                    .collect::<Vec<_>>(),
            );
        }
        let sig = st.stalks[0].signature();
        for (name, &arity) in &sig.relations {
            let mut vals = Vec::new();
            for t in logic::tuples(n, arity) {
                let hit = (0..b.len())
                    .filter(|&a| {
                        let args: Vec<usize> = t.iter().map(|&s| class_at[a][s]).collect();
                        st.stalks[a].holds(name, &args)
                    })
                    .fold(0, |acc, a| acc | bits::bit(a));
                vals.push(ro.elem_of(hit)?);
            }
            rels.insert(name.clone(), (arity, vals));
        }
        for c in &sig.constants {
            let s = (0..n)
                .find(|&s| (0..b.len()).all(|a| class_at[a][s] == st.stalks[a].constants()[c]))
                .ok_or_else(|| {
                    Error::InvalidModel(format!("constant {c} has no global section"))
                })?;
            constants.insert(c.clone(), s);
        }
    }
    BVModel::new(alg, f.sections(top).to_vec(), eq, rels, constants)
}

/// `L(Φ, i)`: at `b`, `[τ]_{π_i b} ↦ [Φτ]_b`. Both presheaves are seen on
/// their Stone spaces.
pub fn l_on_morphism(
    source: &BVModel,
    target: &BVModel,
    m: &BVMorphism,
    l_source: &Presheaf,
    l_target: &Presheaf,
) -> Result<PresheafMorphism> {
    let sb = l_source.base();
    let tb = l_target.base();
    let mut components = Vec::with_capacity(tb.len());
    for &set in tb.sets() {
        let lower = m.hom.left_adjoint(target.algebra().elem(set)?).bits();
        let sl = sb
            .level_of_set(lower)
            .ok_or_else(|| Error::InvalidMorphism("adjoint image is zero".into()))?;
        let tl = tb.level_of_set(set).expect("own level");
        let classes = target.classes_mod(set);
        let comp = l_source
            .sections(sl)
            .iter()
            .map(|name| {
                let r = source.index_of(name).expect("sections name elements");
                let img = target.id(classes[m.map[r]]);
                l_target
                    .section_index(tl, img)
                    .ok_or_else(|| Error::InvalidMorphism(format!("no class named {img}")))
            })
            .collect::<Result<Vec<_>>>()?;
        components.push(comp);
    }
    Ok(PresheafMorphism {
        hom: m.hom.clone(),
        components,
    })
}

/// `η_M: M → R(L(M))`, `τ ↦ [τ]_{F_1}`.
pub fn unit(m: &BVModel, rl: &BVModel) -> Result<BVMorphism> {
    let classes = m.classes_mod(m.algebra().top_bits());
    let map = classes
        .iter()
        .map(|&r| {
            rl.index_of(m.id(r))
                .ok_or_else(|| Error::InvalidMorphism(format!("{} has no image", m.id(r))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BVMorphism {
        hom: BAHom::new(
            m.algebra().clone(),
            rl.algebra().clone(),
            (0..m.algebra().len()).collect(),
        )?,
        map,
    })
}

/// `ε_F: L(R(F)) → F`, `[f]_b ↦ f↾b`.
pub fn counit(f: &Presheaf, lr: &Presheaf) -> Result<PresheafMorphism> {
    let base = f.base();
    let top = top_level(base)?;
    let alg = match base.kind() {
        BaseKind::Algebra(b) => b.clone(),
        _ => return Err(Error::InvalidPresheaf("expected a presheaf on B⁺".into())),
    };
    let mut components = Vec::with_capacity(base.len());
    for q in 0..base.len() {
        let comp = lr
            .sections(q)
            .iter()
            .map(|name| {
                let s = f.section_index(top, name).ok_or_else(|| {
                    Error::InvalidMorphism(format!("{name} is not a global section"))
                })?;
                Ok(f.res(q, top, s))
            })
            .collect::<Result<Vec<_>>>()?;
        components.push(comp);
    }
    Ok(PresheafMorphism {
        hom: BAHom::identity(&alg),
        components,
    })
}

/// Instance data for the adjunction between `L` and `R`.
#[derive(Clone, Debug)]
pub struct AdjunctionWitness {
    pub unit: BVMorphism,
    pub unit_report: MorphismReport,
    /// `η_M` is a bijection onto `R(L(M))`.
    pub unit_bijective: bool,
    pub counit: PresheafMorphism,
    pub counit_natural: bool,
    /// Every component of `ε_F` is a bijection.
    pub counit_bijective: bool,
    /// `Rε ∘ ηR = id`.
    pub triangle_r: bool,
    /// `εL ∘ Lη = id`.
    pub triangle_l: bool,
}

impl AdjunctionWitness {
    pub fn triangles_hold(&self) -> bool {
        self.triangle_r && self.triangle_l
    }
}

fn is_bijection(map: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    map.len() == n
        && map
            .iter()
            .all(|&i| i < n && !core::mem::replace(&mut seen[i], true))
}

/// Builds `η_M` and `ε_F` and checks both triangle identities.
pub fn adjunction_witness(m: &BVModel, f: &Presheaf) -> Result<AdjunctionWitness> {
    // Unit side, at M.
    let lm = l_functor(m)?;
    let rlm = r_functor(&lm.presheaf, Some(&lm.structure))?;
    let eta = unit(m, &rlm)?;
    let unit_report = check_morphism(m, &rlm, &eta)?;
    let unit_bijective = is_bijection(&eta.map, rlm.len());

    // Counit side, at F.
    let rf = r_functor(f, None)?;
    let lrf = l_functor(&rf)?.presheaf;
    let eps = counit(f, &lrf)?;
    let (lrf_st, f_st) = (lrf.on_stone_space()?, f.on_stone_space()?);
    let counit_natural = validate_morphism(&lrf_st, &f_st, &eps).is_ok();
    let counit_bijective =
        (0..f.base().len()).all(|q| is_bijection(&eps.components[q], f.sections(q).len()));

    // Rε ∘ η_{R(F)} = id on R(F).
    let rlrf = r_functor(&lrf, None)?;
    let eta_rf = unit(&rf, &rlrf)?;
    let top = top_level(f.base())?;
    let triangle_r = eta_rf.hom.then(&eps.hom)?.atom_map()
        == BAHom::identity(rf.algebra()).atom_map()
        && (0..rf.len()).all(|x| {
            lrf.section_index(top, rlrf.id(eta_rf.map[x]))
                .is_some_and(|s| eps.components[top][s] == x)
        });

    // ε_{L(M)} ∘ L(η_M) = id on L(M).
    let l_rlm = l_functor(&rlm)?.presheaf;
    let l_eta = l_on_morphism(m, &rlm, &eta, &lm.presheaf, &l_rlm)?;
    let eps_lm = counit(&lm.presheaf, &l_rlm)?;
    let triangle_l = validate_morphism(
        &lm.presheaf.on_stone_space()?,
        &l_rlm.on_stone_space()?,
        &l_eta,
    )
    .is_ok()
        && (0..lm.presheaf.base().len()).all(|q| {
            (0..lm.presheaf.sections(q).len())
                .all(|s| eps_lm.components[q][l_eta.components[q][s]] == s)
        });

    Ok(AdjunctionWitness {
        unit: eta,
        unit_report,
        unit_bijective,
        counit: eps,
        counit_natural,
        counit_bijective,
        triangle_r,
        triangle_l,
    })
}

/// `L(R(F)) ≅ F`, decided by isomorphism search.
pub fn lr_isomorphic(f: &Presheaf) -> Result<bool> {
    let lrf = l_functor(&r_functor(f, None)?)?.presheaf;
    let ident: Vec<usize> = (0..f.base().len()).collect();
    Ok(find_isomorphism(&lrf, f, &ident).is_some())
}

/// Three independent readings of the mixing property.
#[derive(Clone, Debug)]
pub struct MixingIffSheaf {
    pub mixing: bool,
    pub mixing_witness: Option<crate::bvm::MixingFailure>,
    /// `L(M)` is a sheaf for sup coverings on `B⁺`.
    pub sheaf: bool,
    /// Every global section of the étalé space of `L(M)` is induced by an
    /// element.
    pub sections_induced: bool,
    /// A global section no element induces, as germ labels per atom.
    pub stray_section: Option<Vec<String>>,
}

impl MixingIffSheaf {
    pub fn agree(&self) -> bool {
        self.mixing == self.sheaf && self.sheaf == self.sections_induced
    }
}

/// The étalé space of `L(M)` over `St(B)` and the germ each element
/// induces at each atom.
fn etale_of_model(m: &BVModel, lm: &LPresheaf) -> Result<(EtaleSpace, Vec<Vec<usize>>)> {
    let f = lm.presheaf.on_stone_space()?;
    let e = lambda0(&f)?;
    let base = f.base();
    let top = top_level(base)?;
    let top_classes = m.classes_mod(m.algebra().top_bits());
    let mut induced = Vec::with_capacity(m.len());
    for &rep in &top_classes {
        let s_top = lm
            .presheaf
            .section_index(top, m.id(rep))
            .expect("class is a section");
        let mut row = Vec::with_capacity(m.algebra().len());
        for a in 0..m.algebra().len() {
            let al = atom_level(base, a)?;
            let s = f.res(al, top, s_top);
            let g = e
                .germs()
                .iter()
                .position(|g| g.point == a && g.level == al && g.section == s)
                .ok_or_else(|| Error::InvalidPresheaf("missing germ".into()))?;
            row.push(g);
        }
        induced.push(row);
    }
    Ok((e, induced))
}

/// `has_mixing(M)`, the sheaf condition on `L(M)`, and induced global
/// sections, computed separately.
pub fn mixing_iff_sheaf(m: &BVModel, max_antichain: Option<usize>) -> Result<MixingIffSheaf> {
    let mix = m.has_mixing(max_antichain)?;
    let lm = l_functor(m)?;
    let sheaf = check_sheaf(&lm.presheaf, Coverage::Sup).is_sheaf();
    let (e, induced) = etale_of_model(m, &lm)?;
    let all = bits::full(e.base().len());
    let stray = e
        .sections(all)?
        .into_iter()
        .find(|s| !induced.iter().any(|row| row == s))
        .map(|s| s.iter().map(|&g| e.germs()[g].label.clone()).collect());
    Ok(MixingIffSheaf {
        mixing: mix.holds(),
        mixing_witness: mix.failure,
        sheaf,
        sections_induced: stray.is_none(),
        stray_section: stray,
    })
}

#[derive(Clone, Debug)]
pub struct Mixification {
    pub model: BVModel,
    /// `Φ_M` paired with `b ↦ N_b`.
    pub embedding: BVMorphism,
    /// `Γ¹Λ¹L(M)` on `B⁺`.
    pub sheaf: Presheaf,
    pub structure: ModelStructure,
}

/// `R ∘ Γ¹ ∘ Λ¹ ∘ L`. Global sections are named `s_` followed by the
/// representatives they pick at each atom.
pub fn mixify(m: &BVModel) -> Result<Mixification> {
    let b = m.algebra();
    let lm = l_functor(m)?;
    let f = lm.presheaf.on_stone_space()?;
    let l1 = lambda1(&f)?;
    let e = &l1.etale;
    let g = e.gamma1()?;
    let gb = g.base();
    let mut names = Vec::with_capacity(gb.len());
    let mut tuples = Vec::with_capacity(gb.len());
    for &set in gb.sets() {
        let secs = e.gamma1_sections(set)?;
        names.push(
            secs.iter()
                .map(|s| {
                    let parts: Vec<&str> = s
                        .iter()
                        .map(|g| {
                            let Germ { level, section, .. } = &e.germs()[g.expect("total")];
                            f.sections(*level)[*section].as_str()
                        })
                        .collect();
                    format!("s_{}", parts.join("_"))
                })
                .collect(),
        );
        tuples.push(secs);
    }
    let algebra = l1.ro.algebra.clone();
    let sheaf = g.renamed(names)?.on_algebra(&algebra)?;
    let class_of = (0..algebra.len())
        .map(|a| {
            let al = atom_level(gb, a)?;
            tuples[al]
                .iter()
                .map(|s| {
                    let germ = &e.germs()[s[0].expect("total")];
                    let fl = atom_level(f.base(), a)?;
                    Ok(f.res(fl, germ.level, germ.section))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let structure = ModelStructure {
        stalks: lm.structure.stalks.clone(),
        class_of,
    };
    let model = r_functor(&sheaf, Some(&structure))?;
    let top = top_level(sheaf.base())?;
    let flt = top_level(f.base())?;
    let top_classes = m.classes_mod(b.top_bits());
    let map = (0..m.len())
        .map(|t| {
            let s = lm
                .presheaf
                .section_index(flt, m.id(top_classes[t]))
                .expect("class is a section");
            let want: Vec<usize> = (0..b.len())
                .map(|a| f.res(atom_level(f.base(), a).expect("atom"), flt, s))
                .collect();
            (0..model.len())
                .find(|&x| {
                    (0..b.len()).all(|a| {
                        let al = atom_level(sheaf.base(), a).expect("atom");
                        structure.class_of[a][sheaf.res(al, top, x)] == want[a]
                    })
                })
                .ok_or_else(|| Error::InvalidModel("element induces no global section".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let embedding = BVMorphism {
        hom: BAHom::new(b.clone(), algebra.clone(), (0..b.len()).collect())?,
        map,
    };
    Ok(Mixification {
        model,
        embedding,
        sheaf,
        structure,
    })
}

/// Checks on a mixification.
#[derive(Clone, Debug)]
pub struct MixifyReport {
    pub mixing: bool,
    pub embedding: MorphismReport,
    pub elementary: crate::bvm::ElementaryReport,
    /// The domain matches the product of the Tarski quotients, with
    /// equality the join of the atoms where components agree.
    pub product_oracle: bool,
}

impl MixifyReport {
    pub fn holds(&self) -> bool {
        self.mixing && self.embedding.is_embedding && self.elementary.holds() && self.product_oracle
    }
}

pub fn check_mixify(
    m: &BVModel,
    mx: &Mixification,
    depth: usize,
    max_antichain: Option<usize>,
) -> Result<MixifyReport> {
    let mixing = mx.model.has_mixing(max_antichain)?.holds();
    let embedding = check_morphism(m, &mx.model, &mx.embedding)?;
    let elementary = is_elementary(m, &mx.model, &mx.embedding, depth)?;
    Ok(MixifyReport {
        mixing,
        embedding,
        elementary,
        product_oracle: stalk_product_oracle(m, mx)?,
    })
}

/// Compares a mixification against `∏_G M/G` computed from the Tarski
/// quotients alone. The component of a mixed element at an atom is the
/// class of any original element whose image it equals there.
pub fn stalk_product_oracle(m: &BVModel, mx: &Mixification) -> Result<bool> {
    let b = m.algebra();
    let mixed = &mx.model;
    let quotients = b
        .ultrafilters()
        .iter()
        .map(|g| m.tarski_quotient(g))
        .collect::<Result<Vec<_>>>()?;
    let size: usize = quotients.iter().map(|q| q.model.len()).product();
    if mixed.len() != size {
        return Ok(false);
    }
    let mut comps: Vec<Vec<usize>> = Vec::with_capacity(size);
    for x in 0..mixed.len() {
        let mut row = Vec::with_capacity(b.len());
        for (a, q) in quotients.iter().enumerate() {
            let hit =
                (0..m.len()).find(|&t| bits::has(mixed.eq_value(x, mx.embedding.map[t]).bits(), a));
            match hit {
                Some(t) => row.push(q.class_of[t]),
                None => return Ok(false),
            }
        }
        comps.push(row);
    }
    let mut sorted = comps.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != size {
        return Ok(false);
    }
    for x in 0..mixed.len() {
        for y in 0..mixed.len() {
            let agree = (0..b.len())
                .filter(|&a| comps[x][a] == comps[y][a])
                .fold(0, |acc, a| acc | bits::bit(a));
            if mixed.eq_value(x, y).bits() != agree {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The bundle `E^φ_M` of tuples of classes at the ultrafilters where
/// `φ` holds of them.
#[derive(Clone, Debug)]
pub struct PhiBundle {
    pub formula: Formula,
    pub vars: Vec<String>,
    /// `⟦∃x̄ φ⟧`.
    pub b_phi: Elem,
    /// `⋃{N_c : 0 < c ≤ ⟦φ(σ̄)⟧}` as a set of atoms.
    pub a_phi: Bits,
    /// `N_{b_φ}` as a set of atoms.
    pub n_b_phi: Bits,
    /// Over the subspace `N_{b_φ}`; `None` when `b_φ = 0`.
    pub space: Option<EtaleSpace>,
    /// Atom of `B` for each base point of `space`.
    pub points: Vec<usize>,
    pub global_sections: Vec<Vec<usize>>,
    /// Tuples `σ̄` with `⟦φ(σ̄)⟧ ≥ b_φ`.
    pub product_sections: Vec<Vec<usize>>,
}

impl PhiBundle {
    /// `A_φ = N_{b_φ}`.
    pub fn saturated(&self) -> bool {
        self.a_phi == self.n_b_phi
    }

    /// `A_φ` is closed in `St(B)`.
    pub fn a_phi_closed(&self, b: &BoolAlg) -> bool {
        b.stone_space().space.is_closed(self.a_phi)
    }

    pub fn has_global_section(&self) -> bool {
        self.space.is_none() || !self.global_sections.is_empty()
    }
}

pub fn phi_bundle(m: &BVModel, phi: &Formula) -> Result<PhiBundle> {
    let vars = phi.free_vars();
    if vars.is_empty() {
        return Err(Error::InvalidModel(
            "the formula needs a free variable".into(),
        ));
    }
    let b = m.algebra();
    let quotients = b
        .ultrafilters()
        .iter()
        .map(|g| m.tarski_quotient(g))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    for t in logic::tuples(m.len(), vars.len()) {
        let asg: Vec<(&str, usize)> = vars
            .iter()
            .map(String::as_str)
            .zip(t.iter().copied())
            .collect();
        values.push((t.clone(), m.eval_with(phi, &asg)?.bits()));
    }
    let closed = vars
        .iter()
        .rev()
        .fold(phi.clone(), |acc, v| Formula::exists(v.as_str(), acc));
    let b_phi = m.eval(&closed)?;
    let a_phi = values.iter().fold(0, |acc, (_, v)| acc | v);
    let n_b_phi = b_phi.bits();
    let product_sections: Vec<Vec<usize>> = values
        .iter()
        .filter(|(_, v)| bits::subset(n_b_phi, *v))
        .map(|(t, _)| t.clone())
        .collect();
    if n_b_phi == 0 {
        return Ok(PhiBundle {
            formula: phi.clone(),
            vars,
            b_phi,
            a_phi,
            n_b_phi,
            space: None,
            points: Vec::new(),
            global_sections: Vec::new(),
            product_sections,
        });
    }
    let stone = b.stone_space();
    let (sub, points) = stone.space.subspace(n_b_phi)?;
    let pos = |a: usize| {
        points
            .iter()
            .position(|&p| p == a)
            .expect("atom in subspace")
    };
    let mut germs: Vec<Germ> = Vec::new();
    let mut key_of: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    for (t, v) in &values {
        for a in bits::ones(*v) {
            let key: Vec<usize> = t.iter().map(|&s| quotients[a].class_of[s]).collect();
            if let Entry::Vacant(slot) = key_of.entry((a, key.clone())) {
                let ids: Vec<&str> = key
                    .iter()
                    .map(|&c| quotients[a].model.domain()[c].as_str())
                    .collect();
                slot.insert(germs.len());
                germs.push(Germ {
                    point: pos(a),
                    level: 0,
                    section: 0,
                    label: format!("⟨{}⟩@{}", ids.join(","), b.label(a)),
                });
            }
        }
    }
    if germs.len() > bits::CAPACITY {
        return Err(Error::TooLarge("the bundle has too many points".into()));
    }
    let mut basic = Vec::new();
    for (t, v) in &values {
        for c in bits::submasks(*v).filter(|&c| c != 0) {
            let set = bits::ones(c).fold(0, |acc, a| {
                let key: Vec<usize> = t.iter().map(|&s| quotients[a].class_of[s]).collect();
                acc | bits::bit(key_of[&(a, key)])
            });
            basic.push(set);
        }
    }
    basic.sort_unstable();
    basic.dedup();
    let space = EtaleSpace::new(sub, germs, basic)?;
    let global_sections = space.sections(bits::full(points.len()))?;
    Ok(PhiBundle {
        formula: phi.clone(),
        vars,
        b_phi,
        a_phi,
        n_b_phi,
        space: Some(space),
        points,
        global_sections,
        product_sections,
    })
}

/// The clauses of the fullness characterization for one formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullnessClauses {
    /// Łoś holds for `∃x̄ φ` at every ultrafilter.
    pub los: bool,
    /// `A_φ = N_{b_φ}`.
    pub saturated: bool,
    /// `A_φ` is closed.
    pub closed: bool,
    /// `E^φ_M` has a global section.
    pub global_section: bool,
    /// A section of product form exists, when checked.
    pub product_section: Option<bool>,
}

impl FullnessClauses {
    pub fn agree(&self) -> bool {
        let c = [self.los, self.saturated, self.closed, self.global_section];
        c.iter().all(|&x| x == c[0]) && self.product_section.is_none_or(|p| p == c[0])
    }

    pub fn all_true(&self) -> bool {
        self.los
            && self.saturated
            && self.closed
            && self.global_section
            && self.product_section != Some(false)
    }
}

#[derive(Clone, Debug)]
pub struct FullnessViaSections {
    pub depth: usize,
    pub formulas: usize,
    pub mixing: bool,
    pub disagreement: Option<(Formula, FullnessClauses)>,
    pub failure: Option<(Formula, FullnessClauses)>,
}

impl FullnessViaSections {
    pub fn holds(&self) -> bool {
        self.disagreement.is_none() && self.failure.is_none()
    }
}

/// The bundle `E^φ_M` and its clauses. The product clause is evaluated
/// only when `mixing` is set.
pub fn fullness_clauses(
    m: &BVModel,
    phi: &Formula,
    mixing: bool,
) -> Result<(PhiBundle, FullnessClauses)> {
    let b = m.algebra();
    let pb = phi_bundle(m, phi)?;
    let closed = pb
        .vars
        .iter()
        .rev()
        .fold(phi.clone(), |acc, v| Formula::exists(v.as_str(), acc));
    let mut los = true;
    for (a, g) in b.ultrafilters().iter().enumerate() {
        let q = m.tarski_quotient(g)?;
        los &= q.model.satisfies(&closed)? == bits::has(pb.b_phi.bits(), a);
    }
    let clauses = FullnessClauses {
        los,
        saturated: pb.saturated(),
        closed: pb.a_phi_closed(b),
        global_section: pb.has_global_section(),
        product_section: mixing.then_some(!pb.product_sections.is_empty() || pb.n_b_phi == 0),
    };
    Ok((pb, clauses))
}

/// Evaluates every clause for every enumerated formula with a free
/// variable. The product clause is added when `M` mixes over antichains
/// up to `max_antichain`.
pub fn fullness_via_sections(
    m: &BVModel,
    depth: usize,
    max_antichain: Option<usize>,
) -> Result<FullnessViaSections> {
    let mixing = m.has_mixing(max_antichain)?.holds();
    let mut out = FullnessViaSections {
        depth,
        formulas: 0,
        mixing,
        disagreement: None,
        failure: None,
    };
    for phi in logic::enumerate(&m.signature(), depth) {
        if phi.free_vars().is_empty() {
            continue;
        }
        out.formulas += 1;
        let (_, clauses) = fullness_clauses(m, &phi, mixing)?;
        if !clauses.agree() && out.disagreement.is_none() {
            out.disagreement = Some((phi.clone(), clauses.clone()));
        }
        if !clauses.all_true() && out.failure.is_none() {
            out.failure = Some((phi, clauses));
        }
    }
    Ok(out)
}
