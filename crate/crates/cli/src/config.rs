//! Session configuration: a TOML file declaring a group, algebra elements,
//! representations, structures and a list of commands.
//!
//! Every name is resolved, every sentence parsed and sort-checked, and every
//! omitted setting filled in before anything is computed. The filled-in
//! command settings are echoed into the report.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use starrep_core::kazhdan::{CoverFamily, KazhdanOptions};
use starrep_core::linalg::{c, random_unitary};
use starrep_core::optimize::AscentOptions;
use starrep_core::structure::AuditBudget;
use starrep_core::ultraproduct::{Flag, FrequencyRule};
use starrep_core::{AlgebraElement, CMatrix, Element, Group, MetricStructure, UnitaryRep};
use thiserror::Error;

use crate::dsl::{parse_checked, Compiled, DslError, Expr};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("{0}")]
    Resolve(String),
    #[error("command `{command}`: {source}")]
    Sentence { command: String, source: DslError },
    #[error("{context}: {source}")]
    Core { context: String, source: starrep_core::Error },
}

fn core(context: impl Into<String>) -> impl FnOnce(starrep_core::Error) -> ConfigError {
    let context = context.into();
    move |source| ConfigError::Core { context, source }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub group: GroupSpec,
    #[serde(default)]
    pub elements: Vec<ElementSpec>,
    #[serde(default)]
    pub reps: Vec<RepSpec>,
    #[serde(default)]
    pub structures: Vec<StructureSpec>,
    #[serde(default)]
    pub commands: Vec<CommandSpec>,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic { n: usize },
    Symmetric3,
    Dihedral { n: usize },
    Circle { n: usize },
    Integers { window: i64 },
    Table { table: Vec<Vec<usize>> },
}

/// An element of `M(G)`: a sum of the given parts, times `scale`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    /// Unit atom at a labelled element.
    pub dirac: Option<String>,
    /// Weighted atoms `[label, re, im]`.
    pub atoms: Option<Vec<(String, f64, f64)>>,
    /// Density values `[re, im]` in element order.
    pub density: Option<Vec<[f64; 2]>>,
    /// The normalized Haar density.
    #[serde(default)]
    pub uniform: bool,
    /// Normalized indicator of a set of labels.
    pub indicator: Option<Vec<String>>,
    /// Normalized `((1 + cos(θ − center))/2)^power` on the circle.
    pub bump: Option<BumpSpec>,
    pub scale: Option<f64>,
    /// Write the density as `element-<name>.csv`.
    #[serde(default)]
    pub export: bool,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    #[serde(default)]
    pub center: f64,
    #[serde(default = "default_power")]
    pub power: i32,
}

fn default_power() -> i32 {
    2
}

#[derive(Clone, Debug, Deserialize)]
pub struct RepSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: RepKind,
    #[serde(default)]
    pub padding: usize,
    /// Conjugate by a random unitary drawn from this seed.
    pub conjugate_seed: Option<u64>,
    pub corrupt: Option<CorruptSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RepKind {
    Regular,
    Trivial {
        #[serde(default = "one")]
        dim: usize,
    },
    Character { k: i64 },
    Sign,
    Permutation,
    Standard,
    /// Direct sum of previously declared reps.
    Sum { of: Vec<String> },
    /// One matrix per element, each a list of rows of `[re, im]` entries.
    Explicit { matrices: Vec<Vec<Vec<[f64; 2]>>> },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptSpec {
    pub element: String,
    pub eps: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub name: String,
    pub rep: String,
    pub generators: Vec<String>,
    #[serde(default)]
    pub inflate: Vec<InflateSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflateSpec {
    pub sort: String,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandSpec {
    /// Residuals of the twelve axioms.
    Audit {
        name: Option<String>,
        structure: String,
        #[serde(default)]
        budget: AuditBudget,
        /// Every residual must be at most this (default: the session tolerance).
        max_residual: Option<f64>,
        /// Instead assert that some residual reaches this value.
        expect_violation: Option<f64>,
    },
    Reconstruct {
        name: Option<String>,
        structure: String,
        tolerance: Option<f64>,
    },
    Kazhdan {
        name: Option<String>,
        rep: String,
        /// Labels of `Q` (default: the group's generators).
        q: Option<Vec<String>>,
        #[serde(default)]
        options: KazhdanOptions,
        /// Random vectors of `S_φ` checked against the fix-distance bound.
        #[serde(default)]
        fix_trials: usize,
        /// Probability density for the trials (default: uniform).
        phi: Option<String>,
        expect_kappa: Option<f64>,
        tolerance: Option<f64>,
    },
    Classify {
        name: Option<String>,
        /// Classify the built-in twenty-sequence corpus.
        #[serde(default)]
        corpus: bool,
        corpus_seed: Option<u64>,
        /// Character sequence `χ_{k(i)}`.
        frequency: Option<FrequencyRule>,
        /// Constant sequence of a declared rep.
        rep: Option<String>,
        /// Vectors `π_i(φ)ζ_i` instead of unit vectors.
        phi: Option<String>,
        schedule: Option<Vec<usize>>,
        seed: Option<u64>,
        tolerance: Option<f64>,
        /// Expected `[continuous, equicontinuous, nondegenerate]` flags.
        expect: Option<Vec<Flag>>,
    },
    Cover {
        name: Option<String>,
        phi: String,
        /// Labels of `K` (default: every element).
        k: Option<Vec<String>>,
        /// Highest cover level (default: `min(M_res, 20)`).
        top: Option<u32>,
        /// Rep for forward-estimate trials.
        rep: Option<String>,
        #[serde(default)]
        trials: usize,
        #[serde(default = "default_max_m")]
        max_m: u32,
        seed: Option<u64>,
    },
    Eval {
        name: Option<String>,
        structure: String,
        sentence: String,
        #[serde(default)]
        budget: AscentOptions,
        at_most: Option<f64>,
        at_least: Option<f64>,
    },
    SearchQ36 {
        name: Option<String>,
        #[serde(default = "default_q36_trials")]
        trials: usize,
        seed: Option<u64>,
        tolerance: Option<f64>,
    },
}

fn default_max_m() -> u32 {
    6
}

fn default_q36_trials() -> usize {
    32
}

impl CommandSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CommandSpec::Audit { .. } => "audit",
            CommandSpec::Reconstruct { .. } => "reconstruct",
            CommandSpec::Kazhdan { .. } => "kazhdan",
            CommandSpec::Classify { .. } => "classify",
            CommandSpec::Cover { .. } => "cover",
            CommandSpec::Eval { .. } => "eval",
            CommandSpec::SearchQ36 { .. } => "search-q36",
        }
    }

    fn name_mut(&mut self) -> &mut Option<String> {
        match self {
            CommandSpec::Audit { name, .. }
            | CommandSpec::Reconstruct { name, .. }
            | CommandSpec::Kazhdan { name, .. }
            | CommandSpec::Classify { name, .. }
            | CommandSpec::Cover { name, .. }
            | CommandSpec::Eval { name, .. }
            | CommandSpec::SearchQ36 { name, .. } => name,
        }
    }
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

/// A command with every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedCommand {
    pub name: String,
    pub spec: CommandSpec,
    pub sentence: Option<(Expr, Compiled)>,
}

#[derive(Debug)]
pub struct Session {
    pub seed: u64,
    pub tolerance: f64,
    pub group: Arc<Group>,
    pub elements: BTreeMap<String, AlgebraElement>,
    pub exports: Vec<String>,
    pub reps: BTreeMap<String, UnitaryRep>,
    pub structures: BTreeMap<String, MetricStructure>,
    pub commands: Vec<ResolvedCommand>,
}

impl Session {
    pub fn element(&self, name: &str) -> Result<&AlgebraElement, ConfigError> {
        self.elements.get(name).ok_or_else(|| ConfigError::Resolve(format!("unknown element `{name}`")))
    }

    pub fn rep(&self, name: &str) -> Result<&UnitaryRep, ConfigError> {
        self.reps.get(name).ok_or_else(|| ConfigError::Resolve(format!("unknown rep `{name}`")))
    }

    pub fn structure(&self, name: &str) -> Result<&MetricStructure, ConfigError> {
        self.structures.get(name).ok_or_else(|| ConfigError::Resolve(format!("unknown structure `{name}`")))
    }
}

pub fn parse_config(text: &str) -> Result<SessionConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn load(path: &Path, overrides: Overrides) -> Result<Session, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
    resolve(parse_config(&text)?, overrides)
}

/// Looks up an element by label, falling back to its index.
pub fn element_by_name(g: &Group, label: &str) -> Result<Element, ConfigError> {
    if let Some(e) = g.element_by_label(label) {
        return Ok(e);
    }
    label
        .trim()
        .trim_start_matches('#')
        .parse::<usize>()
        .ok()
        .and_then(|i| g.element(i).ok())
        .ok_or_else(|| ConfigError::Resolve(format!("no group element labelled `{label}`")))
}

fn build_group(spec: &GroupSpec) -> Result<Arc<Group>, ConfigError> {
    let g = match spec {
        GroupSpec::Cyclic { n } => Group::cyclic(*n),
        GroupSpec::Symmetric3 => Ok(Group::symmetric3()),
        GroupSpec::Dihedral { n } => Group::dihedral(*n),
        GroupSpec::Circle { n } => Group::circle(*n),
        GroupSpec::Integers { window } => Group::integers(*window),
        GroupSpec::Table { table } => Group::from_table(table.clone()),
    };
    g.map_err(core("group"))
}

fn build_element(g: &Arc<Group>, spec: &ElementSpec) -> Result<AlgebraElement, ConfigError> {
    let ctx = || format!("element `{}`", spec.name);
    let mut parts = Vec::new();
    if let Some(l) = &spec.dirac {
        parts.push(AlgebraElement::dirac(g, element_by_name(g, l)?));
    }
    if let Some(atoms) = &spec.atoms {
        let mut a = AlgebraElement::zero(g);
        for (l, re, im) in atoms {
            a.add_atom(element_by_name(g, l)?, c(*re, *im));
        }
        parts.push(a);
    }
    if let Some(d) = &spec.density {
        parts.push(AlgebraElement::from_density(g, d.iter().map(|p| c(p[0], p[1])).collect()).map_err(core(ctx()))?);
    }
    if spec.uniform {
        parts.push(AlgebraElement::uniform(g));
    }
    if let Some(set) = &spec.indicator {
        let els = set.iter().map(|l| element_by_name(g, l)).collect::<Result<Vec<_>, _>>()?;
        parts.push(AlgebraElement::normalized_indicator(g, &els));
    }
    if let Some(b) = spec.bump {
        if g.is_discrete() {
            return Err(ConfigError::Resolve(format!("{}: bumps need a circle group", ctx())));
        }
        let raw = AlgebraElement::from_density_fn(g, |x| c(((1.0 + (g.angle(x) - b.center).cos()) / 2.0).powi(b.power), 0.0));
        let mass = raw.norm1();
        parts.push(raw.scale(c(1.0 / mass, 0.0)));
    }
    let mut it = parts.into_iter();
    let first = it.next().ok_or_else(|| ConfigError::Resolve(format!("{} has no parts", ctx())))?;
    let mut sum = it.try_fold(first, |acc, p| acc.add(&p)).map_err(core(ctx()))?;
    if let Some(s) = spec.scale {
        sum = sum.scale(c(s, 0.0));
    }
    Ok(sum)
}

fn build_rep(g: &Arc<Group>, spec: &RepSpec, known: &BTreeMap<String, UnitaryRep>) -> Result<UnitaryRep, ConfigError> {
    let ctx = format!("rep `{}`", spec.name);
    let mut rep = match &spec.kind {
        RepKind::Regular => UnitaryRep::regular(g),
        RepKind::Trivial { dim } => Ok(UnitaryRep::trivial(g, *dim)),
        RepKind::Character { k } => UnitaryRep::character(g, *k),
        RepKind::Sign => UnitaryRep::sign(g),
        RepKind::Permutation => UnitaryRep::permutation(g),
        RepKind::Standard => UnitaryRep::standard(g),
        RepKind::Sum { of } => {
            let mut parts = of.iter().map(|n| {
                known.get(n).ok_or_else(|| ConfigError::Resolve(format!("{ctx}: unknown rep `{n}`")))
            });
            let first = parts.next().ok_or_else(|| ConfigError::Resolve(format!("{ctx}: empty sum")))??.clone();
            let mut acc = first;
            for p in parts {
                acc = acc.direct_sum(p?).map_err(core(ctx.clone()))?;
            }
            Ok(acc)
        }
        RepKind::Explicit { matrices } => {
            let mats = matrices
                .iter()
                .map(|rows| {
                    let d = rows.len();
                    if rows.iter().any(|r| r.len() != d) {
                        return Err(ConfigError::Resolve(format!("{ctx}: matrices must be square")));
                    }
                    Ok(CMatrix::from_fn(d, d, |i, j| c(rows[i][j][0], rows[i][j][1])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            UnitaryRep::explicit(g, mats)
        }
    }
    .map_err(core(ctx.clone()))?;
    if let Some(s) = spec.conjugate_seed {
        let w = random_unitary(rep.dim(), &mut ChaCha8Rng::seed_from_u64(s));
        rep = rep.conjugate(&w).map_err(core(ctx.clone()))?;
    }
    if let Some(cs) = &spec.corrupt {
        rep = rep.corrupted(element_by_name(g, &cs.element)?, cs.eps).map_err(core(ctx.clone()))?;
    }
    Ok(rep.padded(spec.padding))
}

fn valid_name(n: &str) -> bool {
    !n.is_empty() && n.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_')
}

fn unique<'a>(what: &str, names: impl Iterator<Item = &'a str>) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(ConfigError::Resolve(format!("duplicate {what} name `{n}`")));
        }
    }
    Ok(())
}

pub fn resolve(cfg: SessionConfig, overrides: Overrides) -> Result<Session, ConfigError> {
    let seed = overrides.seed.unwrap_or(cfg.seed);
    let tolerance = overrides.tolerance.unwrap_or(cfg.tolerance);
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(ConfigError::Resolve(format!("tolerance must be positive, got {tolerance}")));
    }
    let group = build_group(&cfg.group)?;
    unique("element", cfg.elements.iter().map(|e| e.name.as_str()))?;
    unique("rep", cfg.reps.iter().map(|e| e.name.as_str()))?;
    unique("structure", cfg.structures.iter().map(|e| e.name.as_str()))?;

    let mut elements = BTreeMap::new();
    let mut exports = Vec::new();
    for e in &cfg.elements {
        if !valid_name(&e.name) {
            return Err(ConfigError::Resolve(format!("element name `{}` must be alphanumeric", e.name)));
        }
        elements.insert(e.name.clone(), build_element(&group, e)?);
        if e.export {
            exports.push(e.name.clone());
        }
    }
    let mut reps = BTreeMap::new();
    for r in &cfg.reps {
        let rep = build_rep(&group, r, &reps)?;
        reps.insert(r.name.clone(), rep);
    }
    let mut structures = BTreeMap::new();
    for s in &cfg.structures {
        let rep = reps.get(&s.rep).ok_or_else(|| ConfigError::Resolve(format!("structure `{}`: unknown rep `{}`", s.name, s.rep)))?;
        let gens = s
            .generators
            .iter()
            .map(|n| {
                elements
                    .get(n)
                    .map(|a: &AlgebraElement| (n.clone(), a.clone()))
                    .ok_or_else(|| ConfigError::Resolve(format!("structure `{}`: unknown element `{n}`", s.name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut m = MetricStructure::build(rep, &gens).map_err(core(format!("structure `{}`", s.name)))?;
        for inf in &s.inflate {
            m.inflate_sort(&inf.sort, inf.factor).map_err(core(format!("structure `{}`", s.name)))?;
        }
        structures.insert(s.name.clone(), m);
    }

    let mut session = Session { seed, tolerance, group, elements, exports, reps, structures, commands: Vec::new() };
    let mut names = BTreeSet::new();
    for (i, spec) in cfg.commands.into_iter().enumerate() {
        let cmd = resolve_command(&session, i, spec)?;
        if !names.insert(cmd.name.clone()) {
            return Err(ConfigError::Resolve(format!("duplicate command name `{}`", cmd.name)));
        }
        session.commands.push(cmd);
    }
    Ok(session)
}

fn resolve_command(s: &Session, index: usize, mut spec: CommandSpec) -> Result<ResolvedCommand, ConfigError> {
    let kind = spec.kind();
    let name = spec.name_mut().get_or_insert_with(|| format!("{:02}-{kind}", index + 1)).clone();
    if !valid_name(&name) {
        return Err(ConfigError::Resolve(format!("command name `{name}` must be alphanumeric")));
    }
    let ctx = |msg: String| ConfigError::Resolve(format!("command `{name}`: {msg}"));
    let command_seed = s.seed.wrapping_add(index as u64);
    let mut sentence = None;
    match &mut spec {
        CommandSpec::Audit { structure, budget, max_residual, expect_violation, .. } => {
            s.structure(structure).map_err(|e| ctx(e.to_string()))?;
            if expect_violation.is_none() {
                max_residual.get_or_insert(s.tolerance);
            }
            if budget.tuple_len > 3 {
                return Err(ctx("tuple_len is at most 3".into()));
            }
        }
        CommandSpec::Reconstruct { structure, tolerance, .. } => {
            s.structure(structure).map_err(|e| ctx(e.to_string()))?;
            tolerance.get_or_insert(s.tolerance);
        }
        CommandSpec::Kazhdan { rep, q, phi, tolerance, .. } => {
            s.rep(rep).map_err(|e| ctx(e.to_string()))?;
            let labels = q.get_or_insert_with(|| s.group.generators().into_iter().map(|g| s.group.label(g)).collect());
            if labels.is_empty() {
                return Err(ctx("Q is empty".into()));
            }
            for l in labels.iter() {
                element_by_name(&s.group, l).map_err(|e| ctx(e.to_string()))?;
            }
            if let Some(p) = phi {
                s.element(p).map_err(|e| ctx(e.to_string()))?;
            }
            tolerance.get_or_insert(s.tolerance);
        }
        CommandSpec::Classify { corpus, corpus_seed, frequency, rep, phi, schedule, seed, tolerance, expect, .. } => {
            let sources = [*corpus, frequency.is_some(), rep.is_some()].iter().filter(|&&b| b).count();
            if sources != 1 {
                return Err(ctx("give exactly one of `corpus`, `frequency`, `rep`".into()));
            }
            if *corpus {
                corpus_seed.get_or_insert(s.seed);
            } else {
                if let Some(r) = rep {
                    s.rep(r).map_err(|e| ctx(e.to_string()))?;
                }
                if let Some(p) = phi {
                    s.element(p).map_err(|e| ctx(e.to_string()))?;
                }
                let sch = schedule.get_or_insert_with(|| (1..=8).collect());
                if sch.len() < 4 || sch.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ctx("schedule needs at least four increasing indices".into()));
                }
                seed.get_or_insert(command_seed);
            }
            if let Some(e) = expect {
                if e.len() != 3 {
                    return Err(ctx("expect lists three flags".into()));
                }
            }
            tolerance.get_or_insert(1e-3);
        }
        CommandSpec::Cover { phi, k, top, rep, trials, seed, .. } => {
            let p = s.element(phi).map_err(|e| ctx(e.to_string()))?;
            let labels = k.get_or_insert_with(|| s.group.elements().map(|g| s.group.label(g)).collect());
            for l in labels.iter() {
                element_by_name(&s.group, l).map_err(|e| ctx(e.to_string()))?;
            }
            let t = top.get_or_insert(CoverFamily::default_level(p));
            if *t > s.group.resolution_limit() {
                return Err(ctx(format!("level {t} exceeds the resolution limit {}", s.group.resolution_limit())));
            }
            if *trials > 0 {
                let r = rep.as_ref().ok_or_else(|| ctx("forward trials need a `rep`".into()))?;
                s.rep(r).map_err(|e| ctx(e.to_string()))?;
            }
            seed.get_or_insert(command_seed);
        }
        CommandSpec::Eval { structure, sentence: text, .. } => {
            let m = s.structure(structure).map_err(|e| ctx(e.to_string()))?;
            sentence = Some(parse_checked(text, m).map_err(|source| ConfigError::Sentence { command: name.clone(), source })?);
        }
        CommandSpec::SearchQ36 { seed, tolerance, .. } => {
            seed.get_or_insert(command_seed);
            tolerance.get_or_insert(1e-3);
        }
    }
    Ok(ResolvedCommand { name, spec, sentence })
}

#[cfg(test)]
mod tests {
    use super::*;

    const S3: &str = r#"
        seed = 5
        [group]
        kind = "symmetric3"

        [[elements]]
        name = "t"
        dirac = "(1 2)"

        [[elements]]
        name = "phi"
        density = [[0.1, 0.0], [0.2, 0.0], [0.1, 0.1], [0.3, 0.0], [0.2, 0.0], [0.1, 0.0]]

        [[reps]]
        name = "reg"
        kind = "regular"

        [[structures]]
        name = "M"
        rep = "reg"
        generators = ["t", "phi"]

        [[commands]]
        kind = "eval"
        structure = "M"
        sentence = "sup x:S[phi] . nrm(x)"
    "#;

    #[test]
    fn resolves_and_fills_defaults() {
        let s = resolve(parse_config(S3).unwrap(), Overrides::default()).unwrap();
        assert_eq!(s.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(s.commands[0].name, "01-eval");
        assert!(s.commands[0].sentence.is_some());
        let echoed = serde_json::to_value(&s.commands[0].spec).unwrap();
        assert_eq!(echoed["kind"], "eval");
        assert_eq!(echoed["budget"]["starts"], 32);
    }

    #[test]
    fn unknown_rep_is_a_resolution_error() {
        let text = S3.replace("rep = \"reg\"", "rep = \"nope\"");
        let err = resolve(parse_config(&text).unwrap(), Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Resolve(ref m) if m.contains("nope")), "{err}");
    }

    #[test]
    fn bad_sentences_fail_at_resolution() {
        let text = S3.replace("nrm(x)\"", "ip(x)\"");
        let err = resolve(parse_config(&text).unwrap(), Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Sentence { .. }), "{err}");
    }

    #[test]
    fn command_kinds_round_trip() {
        let text = r#"
            [group]
            kind = "cyclic"
            n = 4
            [[commands]]
            kind = "search-q36"
        "#;
        let s = resolve(parse_config(text).unwrap(), Overrides { seed: Some(9), tolerance: Some(1e-6) }).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.commands[0].spec.kind(), "search-q36");
        assert!(parse_config("[group]\nkind = \"cyclic\"\nn = 3\nbogus = 1\n").is_err());
    }
}
