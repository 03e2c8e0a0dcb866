//! The `stonean` command line.

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use stonean_core::balg::{BAHom, BoolAlg, Elem};
use stonean_core::bits;
use stonean_core::bridge::{
    adjunction_witness, check_mixify, fullness_clauses, l_functor, lr_isomorphic, mixify,
    mixing_iff_sheaf, stalk_product_oracle,
};
use stonean_core::bvm::{BVModel, FullnessReport};
use stonean_core::logic::{parse, Formula};
use stonean_core::sheaf::{
    check_sheaf, find_isomorphism, is_stonean_sheaf, sheafify, validate_morphism, Coverage,
    FamilyWitness, Presheaf,
};
use stonean_core::topo::{FinPoset, FinTop};

use crate::error::{Context, InputError, Result};
use crate::format;
use crate::report::Report;
use crate::sample::{Sampler, DEFAULT_SEED, VALIDITIES};
use crate::workspace::{Entry, Workspace};

#[derive(Debug, Parser)]
#[command(
    name = "stonean",
    version,
    about = "Boolean-valued models and stonean sheaves at finite scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Formula depth for fullness and elementarity checks.
    #[arg(long, global = true, default_value_t = 2)]
    pub depth: usize,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Largest antichain considered by the mixing search.
    #[arg(long, global = true)]
    pub max_antichain: Option<usize>,
}

/// Objects are built-in names (`MNM`, `M_R`, `B4`, `S`, `PV`, `FS`, ...),
/// JSON files, or `file.json#name` for an entry of a workspace file.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the equality and congruence axioms.
    Validate { model: String },
    /// Boolean value of a closed formula.
    Eval { model: String, formula: String },
    /// Quotient by the filter generated by an element (`a1`, `a1,a2`, `1`).
    Quotient { model: String, filter: String },
    /// Search for an antichain with choices that have no mixture.
    CheckMixing { model: String },
    /// Compare the Łoś test with witness covers on enumerated formulas.
    CheckFull { model: String },
    /// Sheafify a presheaf through its bundle of germs.
    Sheafify { presheaf: String },
    /// Build the mixification and check its defining properties.
    Mixify { model: String },
    /// Duality checks for an algebra, topology, poset or homomorphism.
    DualityCheck { object: String },
    /// Unit, counit and triangle identities of the model-presheaf adjunction.
    AdjunctionCheck { model: String },
    /// The bundle of witnesses of a formula and the fullness clauses.
    PhiBundle { model: String, formula: String },
    /// Fixture examples and a seeded batch of random models.
    Selftest {
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// List the built-in names.
    List,
}

/// Runs a parsed command line against a workspace.
pub fn run(cli: &Cli, ws: &Workspace) -> Result<Report> {
    match &cli.command {
        Command::Validate { model } => validate(ws, model),
        Command::Eval { model, formula } => eval(ws, model, formula),
        Command::Quotient { model, filter } => quotient(ws, model, filter),
        Command::CheckMixing { model } => check_mixing(ws, model, cli.max_antichain),
        Command::CheckFull { model } => check_full(ws, model, cli.depth),
        Command::Sheafify { presheaf } => sheafify_cmd(ws, presheaf),
        Command::Mixify { model } => mixify_cmd(ws, model, cli.depth, cli.max_antichain),
        Command::DualityCheck { object } => duality_check(ws, object),
        Command::AdjunctionCheck { model } => adjunction_check(ws, model, cli.max_antichain),
        Command::PhiBundle { model, formula } => {
            phi_bundle_cmd(ws, model, formula, cli.max_antichain)
        }
        Command::Selftest { count } => selftest(ws, cli.seed, *count, cli.depth),
        Command::List => Ok(list(ws)),
    }
}

/// Parses arguments, runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let ws = Workspace::builtin();
    match run(&cli, &ws) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn show_value(b: &BoolAlg, e: Elem) -> String {
    if e == b.top() {
        format!("{} = 1", b.show(e))
    } else {
        b.show(e)
    }
}

fn elem_json(b: &BoolAlg, e: Elem) -> Value {
    json!(format::elem_to_json(b, e))
}

fn show_antichain(b: &BoolAlg, a: &[Elem]) -> String {
    let parts: Vec<String> = a.iter().map(|&e| b.show(e)).collect();
    format!("{{{}}}", parts.join(","))
}

fn parse_formula(m: &BVModel, src: &str) -> Result<Formula> {
    parse(src, &m.signature()).map_err(|e| InputError::grammar(src, &e))
}

fn validate(ws: &Workspace, arg: &str) -> Result<Report> {
    let m = ws.model_unchecked(arg)?;
    let v = m.validate();
    let mut r = Report::new("validate", arg);
    r.line(format!(
        "{} elements over an algebra with {} atoms",
        m.len(),
        m.algebra().len()
    ));
    let described: Vec<String> = v
        .violations
        .iter()
        .map(|x| m.describe_violation(x))
        .collect();
    for (name, prefix) in [
        ("reflexivity", "reflexivity"),
        ("symmetry", "symmetry"),
        ("transitivity", "transitivity"),
        ("congruence", "congruence"),
    ] {
        let first = described.iter().find(|d| d.starts_with(prefix));
        match first {
            Some(d) => r.check_with(name, false, d.clone(), Some(json!(d))),
            None => r.check(name, true, ""),
        };
    }
    r.line(format!("extensional: {}", v.extensional));
    r.data = json!({ "violations": described, "extensional": v.extensional });
    Ok(r)
}

fn eval(ws: &Workspace, arg: &str, src: &str) -> Result<Report> {
    let m = ws.model(arg)?;
    let f = parse_formula(&m, src)?;
    let v = m.eval(&f).context(|| format!("evaluating `{src}`"))?;
    let b = m.algebra();
    let mut r = Report::new("eval", arg);
    r.line(show_value(b, v));
    r.data = json!({ "formula": f.to_string(), "value": elem_json(b, v), "top": v == b.top() });
    Ok(r)
}

fn quotient(ws: &Workspace, arg: &str, filter: &str) -> Result<Report> {
    let m = ws.model(arg)?;
    let b = m.algebra();
    let g = format::elem_from_text(b, filter)?;
    let f = b
        .filter(g)
        .context(|| format!("filter generated by `{filter}`"))?;
    let qm = m.quotient_model(&f).context(|| "quotient".to_string())?;
    let mut r = Report::new("quotient", arg);
    r.line(format!(
        "filter generated by {}{}",
        b.show(g),
        if f.is_ultrafilter() {
            " (an ultrafilter)"
        } else {
            ""
        }
    ));
    r.line(format!(
        "quotient algebra atoms: {}",
        qm.quotient.algebra.labels().join(", ")
    ));
    let classes: Vec<(String, String)> = (0..m.len())
        .map(|i| (m.id(i).to_string(), qm.model.id(qm.class_of[i]).to_string()))
        .collect();
    for (id, rep) in &classes {
        r.line(format!("  {id} ↦ [{rep}]"));
    }
    let qb = qm.model.algebra();
    for i in 0..qm.model.len() {
        for j in i + 1..qm.model.len() {
            r.line(format!(
                "  ⟦{} = {}⟧ = {}",
                qm.model.id(i),
                qm.model.id(j),
                qb.show(qm.model.eq_value(i, j))
            ));
        }
    }
    let valid = qm.model.validate();
    r.check(
        "quotient is a boolean-valued model",
        valid.is_valid(),
        valid
            .violations
            .first()
            .map(|v| qm.model.describe_violation(v))
            .unwrap_or_default(),
    );
    if let Some(a) = f.atom() {
        let t = m
            .tarski_quotient(&f)
            .context(|| "Tarski quotient".to_string())?;
        let mut los = true;
        for (name, arity) in m.relations() {
            for tup in stonean_core::logic::tuples(m.len(), arity) {
                let v = m.rel_value(name, &tup).context(|| name.to_string())?;
                let cls: Vec<usize> = tup.iter().map(|&i| t.class_of[i]).collect();
                los &= t.model.holds(name, &cls) == bits::has(v.bits(), a);
            }
        }
        r.check(
            "atomic facts of the two-valued quotient match the values",
            los,
            "",
        );
    }
    r.data = json!({
        "filter": elem_json(b, g),
        "ultrafilter": f.is_ultrafilter(),
        "classes": classes.into_iter().collect::<std::collections::BTreeMap<_, _>>(),
        "model": format::model_to_json(&qm.model),
    });
    Ok(r)
}

fn check_mixing(ws: &Workspace, arg: &str, max: Option<usize>) -> Result<Report> {
    let m = ws.model(arg)?;
    let b = m.algebra();
    let rep = m.has_mixing(max).context(|| "mixing search".to_string())?;
    let mut r = Report::new("check-mixing", arg);
    r.line(format!("{} antichain assignments examined", rep.checked));
    match &rep.failure {
        None => {
            r.check("mixing", true, "");
        }
        Some(fail) => {
            let choices: Vec<String> = fail
                .antichain
                .iter()
                .zip(&fail.assignment)
                .map(|(&e, &i)| format!("{} ↦ {}", b.show(e), m.id(i)))
                .collect();
            let witness = json!({
                "antichain": fail.antichain.iter().map(|&e| elem_json(b, e)).collect::<Vec<_>>(),
                "choices": fail.assignment.iter().map(|&i| m.id(i)).collect::<Vec<_>>(),
            });
            r.check_with(
                "mixing",
                false,
                format!(
                    "antichain {} with choices {} has no mixture",
                    show_antichain(b, &fail.antichain),
                    choices.join(", ")
                ),
                Some(witness),
            );
        }
    }
    r.data = json!({ "checked": rep.checked, "max_antichain": max });
    Ok(r)
}

fn los_witness(m: &BVModel, rep: &FullnessReport) -> Option<(String, Value)> {
    let f = rep.los_failure.as_ref()?;
    let b = m.algebra();
    let inst = rep.instance(m, f.formula, &f.assignment);
    let u = b.label(f.ultrafilter);
    let text = format!(
        "{inst} has value {} but the quotient at {u} says {}",
        b.show(f.value),
        f.tarski
    );
    let w = json!({ "formula": inst.to_string(), "ultrafilter": u, "value": elem_json(b, f.value), "quotient": f.tarski });
    Some((text, w))
}

fn check_full(ws: &Workspace, arg: &str, depth: usize) -> Result<Report> {
    let m = ws.model(arg)?;
    let b = m.algebra();
    let rep = m.is_full(depth).context(|| "fullness".to_string())?;
    let mut r = Report::new("check-full", arg);
    r.line(format!(
        "{} formulas to depth {depth}, {} existential instances",
        rep.formulas.len(),
        rep.instances
    ));
    match los_witness(&m, &rep) {
        None => r.check("Łoś at every ultrafilter", true, ""),
        Some((t, w)) => r.check_with("Łoś at every ultrafilter", false, t, Some(w)),
    };
    match &rep.cover_failure {
        None => r.check("finite witness covers", true, ""),
        Some(c) => {
            let inst = rep.instance(&m, c.formula, &c.assignment);
            let ws: Vec<&str> = c.witnesses.iter().map(|&i| m.id(i)).collect();
            r.check_with(
                "finite witness covers",
                false,
                format!(
                    "witnesses {{{}}} of {inst} reach only part of {}",
                    ws.join(","),
                    b.show(c.value)
                ),
                Some(json!({ "formula": inst.to_string(), "witnesses": ws, "value": elem_json(b, c.value) })),
            )
        }
    };
    r.check("procedures agree", rep.procedures_agree(), "");
    r.data = json!({ "depth": depth, "formulas": rep.formulas.len(), "instances": rep.instances });
    Ok(r)
}

fn family_json(f: &Presheaf, w: &FamilyWitness) -> (String, Value) {
    let base = f.base();
    let cover: Vec<&str> = w.cover.iter().map(|&l| base.label(l)).collect();
    let family: Vec<String> = w
        .cover
        .iter()
        .zip(&w.family)
        .map(|(&l, &s)| format!("{}@{}", f.sections(l)[s], base.label(l)))
        .collect();
    let coll: Vec<&str> = w
        .collations
        .iter()
        .map(|&s| f.sections(w.level)[s].as_str())
        .collect();
    let text = format!(
        "over {} with cover {{{}}}, family [{}] has {} collations [{}]",
        base.label(w.level),
        cover.join(", "),
        family.join(", "),
        coll.len(),
        coll.join(", ")
    );
    let v = json!({ "level": base.label(w.level), "cover": cover, "family": family, "collations": coll });
    (text, v)
}

fn sheafify_cmd(ws: &Workspace, arg: &str) -> Result<Report> {
    let f = ws.presheaf(arg)?;
    let mut r = Report::new("sheafify", arg);
    let before = check_sheaf(&f, Coverage::Dense);
    let input = match (&before.non_unique, &before.missing) {
        (None, None) => {
            r.line("input is already a stonean sheaf");
            Value::Null
        }
        (Some(w), _) | (None, Some(w)) => {
            let (t, v) = family_json(&f, w);
            r.line(format!("input is not a stonean sheaf: {t}"));
            v
        }
    };
    let sh = sheafify(&f).context(|| "sheafification".to_string())?;
    let g = &sh.sheaf;
    let base = g.base();
    for q in 0..base.len() {
        r.line(format!("  {}: {}", base.label(q), g.sections(q).join(" ")));
    }
    let after = check_sheaf(g, Coverage::Dense);
    match (&after.non_unique, &after.missing) {
        (None, None) => r.check("result is a stonean sheaf", true, ""),
        (Some(w), _) | (None, Some(w)) => {
            let (t, v) = family_json(g, w);
            r.check_with("result is a stonean sheaf", false, t, Some(v))
        }
    };
    match validate_morphism(&f, g, &sh.unit) {
        Ok(()) => r.check("unit is natural", true, ""),
        Err(e) => r.check("unit is natural", false, e.to_string()),
    };
    let again = sheafify(g).context(|| "second sheafification".to_string())?;
    let ident: Vec<usize> = (0..base.len()).collect();
    let idem = again.sheaf.base().len() == base.len()
        && find_isomorphism(g, &again.sheaf, &ident).is_some();
    r.check("sheafifying again gives an isomorphic sheaf", idem, "");
    let unit: Vec<Value> = sh
        .unit
        .components
        .iter()
        .enumerate()
        .map(|(q, c)| {
            json!({
                "level": base.label(q),
                "map": c.iter().enumerate().map(|(s, &t)| (s.to_string(), g.sections(q).get(t).cloned())).collect::<std::collections::BTreeMap<_, _>>(),
            })
        })
        .collect();
    r.data = json!({
        "input_witness": input,
        "sheaf": format::presheaf_to_json(g),
        "unit": unit,
    });
    Ok(r)
}

fn mixify_cmd(ws: &Workspace, arg: &str, depth: usize, max: Option<usize>) -> Result<Report> {
    let m = ws.model(arg)?;
    let mx = mixify(&m).context(|| "mixification".to_string())?;
    let rep = check_mixify(&m, &mx, depth, max).context(|| "mixification checks".to_string())?;
    let mut r = Report::new("mixify", arg);
    r.line(format!(
        "{} elements: {}",
        mx.model.len(),
        mx.model.domain().join(" ")
    ));
    for i in 0..m.len() {
        r.line(format!(
            "  {} ↦ {}",
            m.id(i),
            mx.model.id(mx.embedding.map[i])
        ));
    }
    r.check("mixification has the mixing property", rep.mixing, "");
    r.check_with(
        "embedding",
        rep.embedding.is_embedding,
        rep.embedding
            .violations
            .first()
            .cloned()
            .unwrap_or_default(),
        None,
    );
    match &rep.elementary.failure {
        None => r.check(
            "elementary",
            true,
            format!(
                "{} formula instances to depth {depth}",
                rep.elementary.checked
            ),
        ),
        Some((f, args)) => {
            let ids: Vec<&str> = args.iter().map(|&i| m.id(i)).collect();
            r.check_with(
                "elementary",
                false,
                format!("{f} at ({}) changes value", ids.join(", ")),
                Some(json!({ "formula": f.to_string(), "arguments": ids })),
            )
        }
    };
    r.check(
        "domain matches the product of the two-valued quotients",
        rep.product_oracle,
        "",
    );
    r.data = json!({
        "model": format::model_to_json(&mx.model),
        "embedding": (0..m.len()).map(|i| (m.id(i).to_string(), mx.model.id(mx.embedding.map[i]).to_string())).collect::<std::collections::BTreeMap<_, _>>(),
    });
    Ok(r)
}

fn duality_algebra(r: &mut Report, b: &BoolAlg) -> Result<()> {
    let n = b.len();
    if n > 6 {
        return Err(InputError::Core {
            context: "duality check".into(),
            source: stonean_core::Error::TooLarge("at most 6 atoms".into()),
        });
    }
    let ufs = b.ultrafilters();
    r.check(
        "ultrafilters correspond to atoms",
        ufs.len() == n && ufs.iter().enumerate().all(|(i, g)| g.atom() == Some(i)),
        format!("{} ultrafilters", ufs.len()),
    );
    let st = b.stone_space();
    let clop = st.space.clop_algebra();
    r.check(
        "clopens of the Stone space",
        clop.members().len() == 1usize << n,
        format!("{} clopens", clop.members().len()),
    );
    let mut table = None;
    'outer: for x in b.elements() {
        if st.clopen(b.complement(x)) != st.space.full() & !st.clopen(x) {
            table = Some(format!("complement of {}", b.show(x)));
            break;
        }
        for y in b.elements() {
            let meet = st.clopen(b.meet(x, y)) == st.clopen(x) & st.clopen(y);
            let join = st.clopen(b.join(x, y)) == st.clopen(x) | st.clopen(y);
            if !meet || !join {
                table = Some(format!("{} and {}", b.show(x), b.show(y)));
                break 'outer;
            }
        }
    }
    r.check(
        "b ↦ N_b preserves the operations",
        table.is_none(),
        table.unwrap_or_default(),
    );
    let back = st.space.ro_algebra().algebra;
    r.check("algebra of the Stone space is the original", back == *b, "");
    Ok(())
}

fn duality_topology(r: &mut Report, x: &FinTop) -> Result<()> {
    if x.len() > 10 {
        return Err(InputError::Core {
            context: "duality check".into(),
            source: stonean_core::Error::TooLarge("at most 10 points".into()),
        });
    }
    let ro = x.ro_algebra();
    let shown: Vec<String> = ro.members().iter().map(|&s| x.show(s)).collect();
    r.line(format!("regular opens: {}", shown.join(" ")));
    r.line(format!(
        "extremally disconnected: {}",
        x.is_extremally_disconnected()
    ));
    let laws = ro.check_laws();
    r.check(
        "regular opens form a boolean algebra",
        laws.is_ok(),
        laws.err().unwrap_or_default(),
    );
    let full = x.full();
    let mut bad = None;
    for a in 0..=full {
        let reg = x.regularize(a);
        let ok = x.regularize(reg) == reg
            && x.regularize_pointwise(a) == reg
            && x.interior(x.closure(a)) == reg
            && (!x.is_open(a) || bits::subset(a, reg));
        if !ok {
            bad = Some(x.show(a));
            break;
        }
        for c in bits::submasks(full) {
            if bits::subset(a, c) && !bits::subset(reg, x.regularize(c)) {
                bad = Some(format!("{} ⊆ {}", x.show(a), x.show(c)));
                break;
            }
        }
        if bad.is_some() {
            break;
        }
    }
    r.check(
        "Reg is monotone, idempotent, inflationary on opens and pointwise",
        bad.is_none(),
        bad.unwrap_or_default(),
    );
    let st = ro.algebra.stone_space();
    r.check(
        "Stone space of RO(X) has one point per atom",
        st.space.len() == ro.atoms().len() && st.space.is_discrete(),
        format!("{} atoms", ro.atoms().len()),
    );
    duality_algebra(r, &ro.algebra)
}

fn duality_poset(r: &mut Report, p: &FinPoset) -> Result<()> {
    let c = p.boolean_completion();
    let rep = c.check();
    let atoms: Vec<String> = c.ro.atoms().iter().map(|&s| c.space.show(s)).collect();
    r.line(format!("atoms of the completion: {}", atoms.join(" ")));
    r.check("order preserving", rep.order_preserving, "");
    r.check(
        "incompatibility preserving",
        rep.incompatibility_preserving,
        "",
    );
    r.check("dense range", rep.dense, "");
    let laws = c.ro.check_laws();
    r.check(
        "completion satisfies the algebra laws",
        laws.is_ok(),
        laws.err().unwrap_or_default(),
    );
    Ok(())
}

fn duality_hom(r: &mut Report, h: &BAHom) {
    let (s, t) = (h.source(), h.target());
    let mut galois = None;
    for c in t.elements() {
        for b in s.elements() {
            if s.leq(h.left_adjoint(c), b) != t.leq(c, h.apply(b)) {
                galois = Some(format!("π({}) against {}", t.show(c), s.show(b)));
            }
        }
    }
    r.check(
        "left adjoint satisfies the Galois condition",
        galois.is_none(),
        galois.unwrap_or_default(),
    );
    let mut dual_ok = true;
    for b in s.elements() {
        let via = (0..t.len())
            .filter(|&a| {
                t.ultrafilter(a)
                    .and_then(|g| h.dual(&g))
                    .is_ok_and(|g| g.contains(b))
            })
            .fold(0, |acc, a| acc | bits::bit(a));
        dual_ok &= via == h.apply(b).bits();
    }
    r.check("homomorphism is recovered from its dual map", dual_ok, "");
}

fn duality_check(ws: &Workspace, arg: &str) -> Result<Report> {
    let mut r = Report::new("duality-check", arg);
    match ws.resolve(arg)? {
        Entry::Algebra(b) => duality_algebra(&mut r, &b)?,
        Entry::Topology(x) => duality_topology(&mut r, &x)?,
        Entry::Poset(p) => duality_poset(&mut r, &p)?,
        Entry::Hom(h) => duality_hom(&mut r, &h),
        other => {
            return Err(InputError::WrongKind {
                name: arg.to_string(),
                expected: "an algebra, topology, poset or homomorphism",
                found: other.kind(),
            })
        }
    }
    Ok(r)
}

fn adjunction_check(ws: &Workspace, arg: &str, max: Option<usize>) -> Result<Report> {
    let m = ws.model(arg)?;
    let lm = l_functor(&m).context(|| "L(M)".to_string())?;
    let f = &lm.presheaf;
    let w = adjunction_witness(&m, f).context(|| "adjunction".to_string())?;
    let mut r = Report::new("adjunction-check", arg);
    let tops: usize = f.base().top().map_or(0, |t| f.sections(t).len());
    r.line(format!(
        "L(M) has {tops} global sections over {} levels",
        f.base().len()
    ));
    r.check(
        "unit is a morphism",
        w.unit_report.is_morphism,
        w.unit_report
            .violations
            .first()
            .cloned()
            .unwrap_or_default(),
    );
    if m.is_extensional() {
        r.check(
            "unit is an isomorphism for an extensional model",
            w.unit_report.is_isomorphism && w.unit_bijective,
            "",
        );
    } else {
        r.line("model is not extensional; the unit need not be injective");
    }
    r.check("counit is natural", w.counit_natural, "");
    r.check("triangle identity at R", w.triangle_r, "");
    r.check("triangle identity at L", w.triangle_l, "");
    if f.is_level_surjective() {
        let iso = lr_isomorphic(f).context(|| "L(R(F))".to_string())?;
        r.check("L(R(F)) ≅ F for F = L(M)", iso, "");
    }
    let mix = mixing_iff_sheaf(&m, max).context(|| "mixing against sheaf".to_string())?;
    r.line(format!(
        "mixing: {}, L(M) a sheaf: {}, every global family induced: {}",
        mix.mixing, mix.sheaf, mix.sections_induced
    ));
    r.check_with(
        "mixing ⇔ L(M) is a sheaf ⇔ global sections are induced",
        mix.agree(),
        "",
        mix.stray_section
            .as_ref()
            .map(|s| json!({ "stray_section": s })),
    );
    r.data = json!({
        "extensional": m.is_extensional(),
        "mixing": mix.mixing,
        "sheaf": mix.sheaf,
        "sections_induced": mix.sections_induced,
        "presheaf": format::presheaf_to_json(f),
    });
    Ok(r)
}

fn phi_bundle_cmd(ws: &Workspace, arg: &str, src: &str, max: Option<usize>) -> Result<Report> {
    let m = ws.model(arg)?;
    let phi = parse_formula(&m, src)?;
    let b = m.algebra();
    let mixing = m
        .has_mixing(max)
        .context(|| "mixing search".to_string())?
        .holds();
    let (pb, cl) = fullness_clauses(&m, &phi, mixing).context(|| "φ-bundle".to_string())?;
    let mut r = Report::new("phi-bundle", arg);
    let atoms = |s: u64| b.show(b.elem(s).expect("atoms of the algebra"));
    r.line(format!("free variables: {}", pb.vars.join(" ")));
    r.line(format!("b_φ = {}", show_value(b, pb.b_phi)));
    r.line(format!("A_φ = {}", atoms(pb.a_phi)));
    let mut germs = Vec::new();
    let mut sections = Vec::new();
    if let Some(e) = &pb.space {
        germs = e.germs().iter().map(|g| g.label.clone()).collect();
        r.line(format!("germs: {}", germs.join(" ")));
        for s in &pb.global_sections {
            let labels: Vec<&str> = s.iter().map(|&g| e.germs()[g].label.as_str()).collect();
            r.line(format!("global section: {}", labels.join(" ")));
            sections.push(labels.join(" "));
        }
    }
    r.line(format!(
        "Łoś {}, saturated {}, closed {}, global section {}{}",
        cl.los,
        cl.saturated,
        cl.closed,
        cl.global_section,
        cl.product_section
            .map(|p| format!(", product section {p}"))
            .unwrap_or_default()
    ));
    r.check("fullness clauses agree", cl.agree(), "");
    r.data = json!({
        "formula": phi.to_string(),
        "vars": pb.vars,
        "b_phi": elem_json(b, pb.b_phi),
        "a_phi": atoms(pb.a_phi),
        "germs": germs,
        "global_sections": sections,
        "clauses": {
            "los": cl.los,
            "saturated": cl.saturated,
            "closed": cl.closed,
            "global_section": cl.global_section,
            "product_section": cl.product_section,
        },
    });
    Ok(r)
}

fn selftest(ws: &Workspace, seed: u64, count: usize, depth: usize) -> Result<Report> {
    let mut r = Report::new("selftest", &format!("seed {seed}"));
    let mnm = ws.model("MNM")?;
    let fail = mnm.has_mixing(None).context(|| "MNM".to_string())?.failure;
    let witnessed = fail
        .is_some_and(|f| f.antichain.iter().map(|e| e.bits()).collect::<Vec<_>>() == [0b01, 0b10]);
    r.check("MNM fails mixing at {a1,a2}", witnessed, "");
    let m_r = ws.model("M_R")?;
    let e = m_r
        .eval(&parse_formula(&m_r, "E x. R(x)")?)
        .context(|| "M_R".to_string())?;
    r.check("⟦E x. R(x)⟧ = a1∨a2 in M_R", e == m_r.algebra().top(), "");
    let mx = mixify(&mnm).context(|| "mixify(MNM)".to_string())?;
    let mixes = mx
        .model
        .has_mixing(None)
        .context(|| "mixify(MNM)".to_string())?
        .holds();
    let oracle = stalk_product_oracle(&mnm, &mx).context(|| "mixify(MNM)".to_string())?;
    r.check(
        "mixify(MNM) mixes and matches the stalk product",
        mixes && oracle,
        "",
    );
    let fs = ws.presheaf("FS")?;
    let sh = sheafify(&fs).context(|| "FS".to_string())?;
    r.check(
        "FS is not a stonean sheaf, its sheafification is",
        !is_stonean_sheaf(&fs) && is_stonean_sheaf(&sh.sheaf),
        "",
    );
    let mut s = Sampler::new(seed);
    let validities: Vec<Formula> = VALIDITIES
        .iter()
        .map(|v| parse(v, &Sampler::signature()).map_err(|e| InputError::grammar(v, &e)))
        .collect::<Result<_>>()?;
    let (mut valid, mut tops, mut full, mut agree) = (true, true, true, true);
    for _ in 0..count {
        let m = s.model();
        valid &= m.validate().is_valid();
        for v in &validities {
            tops &= m.eval(v).context(|| v.to_string())? == m.algebra().top();
        }
        let fr = m.is_full(depth).context(|| "fullness".to_string())?;
        full &= fr.is_full() && fr.procedures_agree();
        agree &= mixing_iff_sheaf(&m, None)
            .context(|| "mixing".to_string())?
            .agree();
    }
    r.check(&format!("{count} random models are valid"), valid, "");
    r.check("validities evaluate to 1", tops, "");
    r.check(
        &format!("random models are full to depth {depth}"),
        full,
        "",
    );
    r.check("mixing ⇔ sheaf on random models", agree, "");
    Ok(r)
}

fn list(ws: &Workspace) -> Report {
    let mut r = Report::new("list", "builtin");
    let mut names = Vec::new();
    for n in ws.names() {
        let kind = ws.get(n).map(Entry::kind).unwrap_or_default();
        r.line(format!("{n}: {kind}"));
        names.push(json!({ "name": n, "kind": kind }));
    }
    r.data = Value::Array(names);
    r
}
