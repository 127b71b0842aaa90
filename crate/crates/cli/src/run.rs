//! Command execution and report assembly.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use starrep_core::kazhdan::{
    fix_distance, invariant_projection, kazhdan_constant, sort_point, theorem42_forward, CoverFamily,
};
use starrep_core::linalg::{c, random_ball_vector, random_gaussian_vector, random_unit_vector};
use starrep_core::representation::nondegenerate_projection;
use starrep_core::structure::{audit_axioms, reconstruct};
use starrep_core::ultraproduct::{
    classification_corpus, classify_vector, search_q36, Flag, RepSequence, Schedule, SequenceRule, VectorSequence,
};
use starrep_core::{AlgebraElement, Error, UnitaryRep};

use crate::config::{element_by_name, load, CommandSpec, ConfigError, Overrides, ResolvedCommand, Session};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENT: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NonConvergent,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    pub messages: Vec<String>,
    /// The command with every default filled in.
    pub settings: CommandSpec,
    pub result: Value,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub tolerance: f64,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    pub commands: Vec<CommandReport>,
    /// File name to CSV contents.
    #[serde(skip)]
    pub files: BTreeMap<String, String>,
}

impl Report {
    pub fn config_error(err: &ConfigError) -> Self {
        Report {
            seed: 0,
            tolerance: 0.0,
            exit_code: EXIT_CONFIG,
            error: Some(err.to_string()),
            artifacts: Vec::new(),
            commands: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Result of one command before status assignment.
#[derive(Default)]
struct Outcome {
    result: Value,
    failures: Vec<String>,
    notes: Vec<String>,
    csv: Option<String>,
}

enum Failure {
    NonConvergent(String),
    Error(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergent(_) => Failure::NonConvergent(e.to_string()),
            other => Failure::Error(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Error(e.to_string())
    }
}

fn csv_table<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<String, Failure> {
    let err = |e: csv::Error| Failure::Error(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Error(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Error(e.to_string()))
}

/// Runs every command of a resolved session.
pub fn run_session(s: &Session) -> Report {
    let mut report = Report {
        seed: s.seed,
        tolerance: s.tolerance,
        exit_code: EXIT_PASS,
        error: None,
        artifacts: Vec::new(),
        commands: Vec::new(),
        files: BTreeMap::new(),
    };
    for name in &s.exports {
        let file = format!("element-{name}.csv");
        match s.elements[name].to_csv() {
            Ok(body) => {
                report.files.insert(file.clone(), body);
                report.artifacts.push(file);
            }
            Err(e) => {
                report.error = Some(format!("element `{name}`: {e}"));
                report.exit_code = EXIT_ASSERTION;
            }
        }
    }
    for cmd in &s.commands {
        let (status, messages, result, csv) = match execute(s, cmd) {
            Ok(o) => {
                let status = if o.failures.is_empty() { Status::Pass } else { Status::Fail };
                let mut msgs = o.failures;
                msgs.extend(o.notes);
                (status, msgs, o.result, o.csv)
            }
            Err(Failure::NonConvergent(m)) => (Status::NonConvergent, vec![m], Value::Null, None),
            Err(Failure::Error(m)) => (Status::Error, vec![m], Value::Null, None),
        };
        let mut artifacts = Vec::new();
        if let Some(body) = csv {
            let file = format!("{}.csv", cmd.name);
            report.files.insert(file.clone(), body);
            artifacts.push(file);
        }
        report.commands.push(CommandReport {
            name: cmd.name.clone(),
            kind: cmd.spec.kind().to_string(),
            status,
            messages,
            settings: cmd.spec.clone(),
            result,
            artifacts,
        });
    }
    let worst = report.commands.iter().map(|c| c.status).fold(
        if report.exit_code == EXIT_PASS { EXIT_PASS } else { EXIT_ASSERTION },
        |acc, st| match st {
            Status::NonConvergent => EXIT_NONCONVERGENT,
            Status::Fail | Status::Error if acc != EXIT_NONCONVERGENT => EXIT_ASSERTION,
            _ => acc,
        },
    );
    report.exit_code = worst;
    report
}

/// Loads, runs and writes a session; returns the exit code.
pub fn run_path(config: &Path, overrides: Overrides, out: &Path) -> (Report, i32) {
    let report = match load(config, overrides) {
        Ok(session) => run_session(&session),
        Err(e) => Report::config_error(&e),
    };
    let code = report.exit_code;
    if let Err(e) = report.write(out) {
        eprintln!("starrep: cannot write to {}: {e}", out.display());
        return (report, code.max(EXIT_ASSERTION));
    }
    (report, code)
}

fn execute(s: &Session, cmd: &ResolvedCommand) -> Result<Outcome, Failure> {
    match &cmd.spec {
        CommandSpec::Audit { structure, budget, max_residual, expect_violation, .. } => {
            let m = s.structure(structure)?;
            let r = audit_axioms(m, budget)?;
            let mut o = Outcome::default();
            if let Some(t) = max_residual {
                for (ax, res) in &r.axioms {
                    if res.residual > *t {
                        o.failures.push(format!("{ax} residual {:.3e} exceeds {t:.1e}", res.residual));
                    }
                }
            }
            if let Some(v) = expect_violation {
                if r.max_residual() < *v {
                    o.failures.push(format!("largest residual {:.3e} is below the expected {v}", r.max_residual()));
                }
            }
            o.csv = Some(csv_table(&["axiom", "residual"], r.axioms.iter().map(|(a, x)| (a, x.residual)))?);
            o.result = json!({ "max_residual": r.max_residual(), "axioms": r });
            Ok(o)
        }
        CommandSpec::Reconstruct { structure, tolerance, .. } => {
            let m = s.structure(structure)?;
            let tol = tolerance.unwrap_or(s.tolerance);
            let sample: Vec<AlgebraElement> = m.base().iter().map(|&b| m.sorts()[b].element.clone()).collect();
            let nd = nondegenerate_projection(m.rep(), &sample, tol)?;
            let mut o = Outcome::default();
            match reconstruct(m, tol) {
                Ok(r) => {
                    if r.dim != nd.rank {
                        o.failures.push(format!("dim F = {} but the non-degenerate part has dimension {}", r.dim, nd.rank));
                    }
                    o.csv = Some(csv_table(
                        &["sort", "residual"],
                        r.sigma.keys().map(|a| {
                            let i = m.index(a).expect("sort of the structure");
                            let res = (&r.intertwiner * &r.sigma[a] - &m.sorts()[i].pi * &r.intertwiner).norm();
                            (a.clone(), res)
                        }),
                    )?);
                    o.result = json!({
                        "dim": r.dim,
                        "nondegenerate_dim": nd.rank,
                        "ambient_dim": m.ambient_dim(),
                        "residual": r.residual,
                        "inner_product_error": r.inner_product_error,
                    });
                }
                Err(Error::ReconstructionMismatch(msg)) => o.failures.push(msg),
                Err(e) => return Err(e.into()),
            }
            Ok(o)
        }
        CommandSpec::Kazhdan { rep, q, options, fix_trials, phi, expect_kappa, tolerance, .. } => {
            let rep = s.rep(rep)?;
            let tol = tolerance.unwrap_or(s.tolerance);
            let labels = q.clone().unwrap_or_default();
            let qs = labels.iter().map(|l| element_by_name(&s.group, l)).collect::<Result<Vec<_>, _>>()?;
            let mut o = Outcome::default();
            let k = match kazhdan_constant(rep, &qs, options) {
                Ok(k) => Some(k),
                Err(Error::Undefined) => {
                    o.notes.push("every vector is invariant; κ is undefined".into());
                    None
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(k) = &k {
                if !k.sandwich_holds(1e-9) {
                    o.failures.push(format!("κ = {} lies outside [{}, {}]", k.kappa, k.lower, k.upper));
                }
            }
            match (expect_kappa, &k) {
                (Some(want), Some(k)) if (k.kappa - want).abs() > tol => {
                    o.failures.push(format!("κ = {} differs from the expected {want}", k.kappa))
                }
                (Some(_), None) => o.failures.push("expected a Kazhdan constant".into()),
                _ => {}
            }
            let phi_el = match phi {
                Some(p) => s.element(p)?.clone(),
                None => AlgebraElement::uniform(&s.group),
            };
            let kappa = k.as_ref().map(|k| k.kappa).filter(|&v| v > 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            let mut rows = Vec::with_capacity(*fix_trials);
            let (mut violations, mut worst_membership) = (0usize, 0.0f64);
            for _ in 0..*fix_trials {
                let zeta = random_ball_vector(rep.dim(), &mut rng);
                let xi = sort_point(rep, &phi_el, &zeta)?;
                let fd = fix_distance(rep, &phi_el, &xi, &qs, kappa)?;
                if fd.bound_violated(1e-10) {
                    violations += 1;
                }
                worst_membership = worst_membership.max(fd.membership_residual);
                rows.push((fd.delta_q, fd.distance));
            }
            if violations > 0 {
                o.failures.push(format!("{violations} fix-distance bound violations"));
            }
            if *fix_trials > 0 && worst_membership > 1e-10 {
                o.failures.push(format!("Pξ lies {worst_membership:.3e} from S_φ"));
            }
            if *fix_trials > 0 {
                o.csv = Some(csv_table(&["delta_q", "fix_distance"], rows)?);
            }
            o.result = json!({
                "kazhdan": k,
                "fix_trials": fix_trials,
                "fix_violations": violations,
                "max_membership_residual": worst_membership,
            });
            Ok(o)
        }
        CommandSpec::Classify { corpus: true, corpus_seed, tolerance, expect, .. } => {
            let tol = tolerance.unwrap_or(1e-3);
            let entries = classification_corpus(corpus_seed.unwrap_or(s.seed))?;
            let mut o = Outcome::default();
            let mut rows = Vec::new();
            let mut out = Vec::new();
            let (mut disagreements, mut chain) = (0usize, 0usize);
            for e in &entries {
                let r = classify_vector(&e.sequence, tol)?;
                let f = r.flags();
                if f[0] != f[1] || f[1] != f[2] {
                    disagreements += 1;
                    o.failures.push(format!("{}: flags disagree {:?}", e.name, f));
                }
                if r.equicontinuous == Flag::Holds && r.continuous != Flag::Holds || r.chain_violations > 0 {
                    chain += 1;
                }
                for (k, m) in r.levels.iter().enumerate() {
                    rows.push((
                        e.name.clone(),
                        *m,
                        r.continuity_curve[k],
                        r.equicontinuity_curve[k],
                        r.nondegeneracy_curve[k],
                    ));
                }
                out.push(json!({ "name": e.name, "family": e.family, "flags": f, "chain_violations": r.chain_violations }));
            }
            if chain > 0 {
                o.failures.push(format!("{chain} sequences violate the flag chain"));
            }
            if expect.is_some() {
                o.notes.push("`expect` is ignored for the corpus".into());
            }
            o.csv = Some(csv_table(&["sequence", "level", "continuous", "equicontinuous", "nondegenerate"], rows)?);
            o.result = json!({ "entries": out, "disagreements": disagreements, "chain_violations": chain });
            Ok(o)
        }
        CommandSpec::Classify { frequency, rep, phi, schedule, seed, tolerance, expect, .. } => {
            let tol = tolerance.unwrap_or(1e-3);
            let schedule = Schedule(schedule.clone().unwrap_or_else(|| (1..=8).collect()));
            let rule = match (frequency, rep) {
                (Some(f), _) => SequenceRule::Character(f.clone()),
                (None, Some(r)) => SequenceRule::Constant(s.rep(r)?.clone()),
                (None, None) => return Err(Failure::Error("no sequence source".into())),
            };
            let rs = RepSequence::new(&s.group, schedule, rule)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(s.seed));
            let d = rs.dim();
            let zeta = random_unit_vector(d, &mut rng);
            let n = rs.schedule().len();
            let seq = match phi {
                Some(p) => VectorSequence::from_operator(rs, s.element(p)?, vec![zeta; n])?,
                None => VectorSequence::new(rs, vec![zeta; n])?,
            };
            let r = classify_vector(&seq, tol)?;
            let mut o = Outcome::default();
            if let Some(want) = expect {
                if want.as_slice() != r.flags() {
                    o.failures.push(format!("flags {:?}, expected {:?}", r.flags(), want));
                }
            }
            o.csv = Some(r.curves_csv()?);
            o.result = serde_json::to_value(&r).map_err(|e| Failure::Error(e.to_string()))?;
            Ok(o)
        }
        CommandSpec::Cover { phi, k, top, rep, trials, max_m, seed, .. } => {
            let phi = s.element(phi)?;
            let ks = k.clone().unwrap_or_default().iter().map(|l| element_by_name(&s.group, l)).collect::<Result<Vec<_>, _>>()?;
            let family = CoverFamily::build(phi, &ks, top.unwrap_or_else(|| CoverFamily::default_level(phi)))?;
            let g = &s.group;
            let mut o = Outcome::default();
            let mut bad = 0usize;
            for level in &family.levels {
                for kk in &ks {
                    let ok = level.factorizations.iter().any(|f| {
                        f.k == *kk
                            && level.cover.contains(&f.g)
                            && level.contains(f.h)
                            && g.mul(f.g, f.h).map(|x| x == *kk).unwrap_or(false)
                    });
                    if !ok {
                        bad += 1;
                    }
                }
            }
            if bad > 0 {
                o.failures.push(format!("{bad} elements of K lack a valid factorization"));
            }
            let mut forward = Value::Null;
            if *trials > 0 {
                let rep = s.rep(rep.as_deref().unwrap_or_default())?;
                let f = forward_trials(rep, &family, *trials, *max_m, seed.unwrap_or(s.seed))?;
                if f.violations > 0 {
                    o.failures.push(format!("{} forward-estimate violations", f.violations));
                }
                forward = serde_json::to_value(&f).map_err(|e| Failure::Error(e.to_string()))?;
            }
            o.csv = Some(csv_table(
                &["level", "neighborhood", "cover"],
                family.levels.iter().map(|l| (l.m, l.neighborhood.len(), l.cover.len())),
            )?);
            let levels: Vec<Value> = family
                .levels
                .iter()
                .map(|l| {
                    json!({
                        "m": l.m,
                        "neighborhood_size": l.neighborhood.len(),
                        "cover": l.cover.iter().map(|&x| g.label(x)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            o.result = json!({ "levels": levels, "invalid_factorizations": bad, "forward": forward });
            Ok(o)
        }
        CommandSpec::Eval { budget, at_most, at_least, .. } => {
            let (_, compiled) = cmd.sentence.as_ref().ok_or_else(|| Failure::Error("sentence was not compiled".into()))?;
            let v = compiled.evaluate(budget);
            let mut o = Outcome::default();
            if let Some(hi) = at_most {
                if v.value > *hi {
                    o.failures.push(format!("value {} exceeds {hi}", v.value));
                }
            }
            if let Some(lo) = at_least {
                if v.value < *lo {
                    o.failures.push(format!("value {} is below {lo}", v.value));
                }
            }
            let rows = v.witnesses.iter().flat_map(|w| {
                w.point.iter().enumerate().map(move |(i, p)| (w.var.clone(), w.sort.clone(), i, p[0], p[1]))
            });
            o.csv = Some(csv_table(&["var", "sort", "component", "re", "im"], rows)?);
            o.result = serde_json::to_value(&v).map_err(|e| Failure::Error(e.to_string()))?;
            Ok(o)
        }
        CommandSpec::SearchQ36 { trials, seed, tolerance, .. } => {
            let found = search_q36(&s.group, *trials, seed.unwrap_or(s.seed), tolerance.unwrap_or(1e-3))?;
            let mut o = Outcome::default();
            o.notes.push(format!("{} candidates; finite-resolution evidence certifies nothing", found.len()));
            o.csv = Some(csv_table(
                &["trial", "frequencies"],
                found.iter().map(|q| (q.trial, q.frequencies.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";"))),
            )?);
            o.result = json!({ "trials": trials, "candidates": found });
            Ok(o)
        }
    }
}

/// Tallies of forward-estimate checks on random near-invariant vectors.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ForwardTally {
    pub trials: usize,
    pub applicable: usize,
    pub not_applicable: usize,
    pub violations: usize,
    pub min_slack: Option<f64>,
}

/// Checks the forward estimate on `ξ = π(φ)(Pz + t·w)` with `t` log-uniform
/// in `[1e-9, 1]`, cycling `m` through `0..=max_m`.
pub fn forward_trials(rep: &UnitaryRep, family: &CoverFamily, trials: usize, max_m: u32, seed: u64) -> Result<ForwardTally, Error> {
    let p = invariant_projection(rep);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = ForwardTally { trials, ..Default::default() };
    for t in 0..trials {
        let m = (t as u32) % (max_m + 1);
        let scale = 10f64.powf(rng.random_range(-9.0..0.0));
        let base = &p * random_unit_vector(rep.dim(), &mut rng) * c(rng.random_range(0.0..1.0), 0.0);
        let zeta = base + random_gaussian_vector(rep.dim(), &mut rng) * c(scale, 0.0);
        let xi = sort_point(rep, &family.phi, &zeta)?;
        match theorem42_forward(rep, family, &xi, m) {
            Ok(f) => {
                tally.applicable += 1;
                if !f.holds {
                    tally.violations += 1;
                }
                tally.min_slack = Some(tally.min_slack.map_or(f.slack, |s: f64| s.min(f.slack)));
            }
            Err(Error::NotApplicable(_)) => tally.not_applicable += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(tally)
}
