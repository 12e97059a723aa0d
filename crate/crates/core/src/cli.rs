//! Command-line front end.
//!
//! Exit codes: 0 success or Confirmed, 1 Refuted, 2 configuration error,
//! 3 Inconclusive or budget exhausted.

use crate::adversary::{AdversaryError, Budgets, CoolsepSession, GsmonSession, SdSession, TotalPsdSession, WitnessReport};
use crate::canonical::{builtin_for, relations_map, BuiltinError, Thm3Class, BUILTINS};
use crate::coding::Nat;
use crate::criteria::{check_bc, check_ex, check_mon, check_smon, verdict_json, CheckOptions, Criterion, CriterionVerdict};
use crate::hypospace::{HypothesisSpace, Index, LanguageDescriptor, Predicate};
use crate::learnkit::{run, wrap_as_psd, LearnerKind, LearningSequence, SharedLearner, TableLearner};
use crate::textkit::{SequencePrefix, Text};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const CONFIG_FILE: &str = "limitlab.cfg";
pub const CONFIG_ENV: &str = "LIMITLAB_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "limitlab", version, about = "Learners, criteria checkers and adversaries for learning in the limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a learner on a text and write its trace.
    Learn(RunArgs),
    /// Check a criterion on a trace or on a learner/text pair.
    Check {
        #[arg(long)]
        criterion: String,
        /// Previously written trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Refute on witnesses that only hold at the enumeration budget.
        #[arg(long)]
        allow_budget_witness: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a diagonalization adversary against a learner.
    Adversary {
        which: Which,
        /// Accept the psd-wrapped form of a set-driven learner.
        #[arg(long)]
        wrap: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Dump the relation map, or relate two criteria.
    Relations { sub: Option<String>, sup: Option<String> },
    /// Enumerate a language.
    Enum {
        language: String,
        #[arg(long)]
        budget: Option<Nat>,
    },
    /// List the built-in learners.
    Learners,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Coolsep,
    Gsmon,
    Totalpsd,
    Sd,
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub enum_budget: Option<Nat>,
    #[arg(long)]
    pub search_bound: Option<Nat>,
    /// Mind-change goal of the gsmon, totalpsd and sd adversaries.
    #[arg(long = "goal")]
    pub mind_change_goal: Option<usize>,
    /// Error goal of the coolsep adversary.
    #[arg(long)]
    pub error_goal: Option<usize>,
    /// Built-in name or `@table-file`.
    #[arg(long)]
    pub learner: Option<String>,
    /// `canonical:L5`, `canonical:2N`, `canonical:N`, `canonical:{1,2}` or a literal like `0,2,#`.
    #[arg(long)]
    pub text: Option<String>,
    /// `L5`, `2N`, `N` or `{1,2}`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub enum_budget: Nat,
    pub search_bound: Nat,
    pub mind_change_goal: usize,
    pub error_goal: usize,
    pub learner: Option<String>,
    pub text: Option<String>,
    pub target: Option<String>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = Budgets::default();
        RunConfig {
            horizon: b.horizon,
            enum_budget: b.enum_budget,
            search_bound: b.search_bound,
            mind_change_goal: b.goal,
            error_goal: b.goal,
            learner: None,
            text: None,
            target: None,
            output: None,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return fail(format!("config line {}: expected key = value", no + 1));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn config_path() -> PathBuf {
    std::env::var_os(CONFIG_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(CONFIG_FILE))
}

fn load_config_file() -> Result<BTreeMap<String, String>> {
    let path = config_path();
    match std::fs::read_to_string(&path) {
        Ok(text) => parse_config(&text),
        Err(_) if std::env::var_os(CONFIG_ENV).is_none() => Ok(BTreeMap::new()),
        Err(e) => fail(format!("cannot read {}: {e}", path.display())),
    }
}

impl RunConfig {
    /// Flags over file values over defaults.
    pub fn resolve(flags: &RunArgs, file: &BTreeMap<String, String>) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        for (k, v) in file {
            let num = || v.parse::<u64>().map_err(|_| ConfigError(format!("config key {k}: {v:?} is not a number")));
            match k.as_str() {
                "horizon" => c.horizon = num()? as usize,
                "enum_budget" => c.enum_budget = num()?,
                "search_bound" => c.search_bound = num()?,
                "mind_change_goal" => c.mind_change_goal = num()? as usize,
                "error_goal" => c.error_goal = num()? as usize,
                "learner" => c.learner = Some(v.clone()),
                "text" => c.text = Some(v.clone()),
                "target" => c.target = Some(v.clone()),
                "output" => c.output = Some(PathBuf::from(v)),
                _ => return fail(format!("unknown config key {k:?}")),
            }
        }
        if let Some(x) = flags.horizon {
            c.horizon = x;
        }
        if let Some(x) = flags.enum_budget {
            c.enum_budget = x;
        }
        if let Some(x) = flags.search_bound {
            c.search_bound = x;
        }
        if let Some(x) = flags.mind_change_goal {
            c.mind_change_goal = x;
        }
        if let Some(x) = flags.error_goal {
            c.error_goal = x;
        }
        c.learner = flags.learner.clone().or(c.learner);
        c.text = flags.text.clone().or(c.text);
        c.target = flags.target.clone().or(c.target);
        c.output = flags.out.clone().or(c.output);
        Ok(c)
    }

    fn check_options(&self) -> CheckOptions {
        CheckOptions { budget: self.enum_budget, bound: self.search_bound, ..CheckOptions::default() }
    }

    fn budgets(&self, goal: usize) -> Budgets {
        Budgets { horizon: self.horizon, enum_budget: self.enum_budget, search_bound: self.search_bound, goal }
    }
}

fn parse_set(s: &str) -> Result<BTreeSet<Nat>> {
    let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(|| ConfigError(format!("bad set {s:?}")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Nat>().map_err(|_| ConfigError(format!("bad element {t:?}"))))
        .collect()
}

/// `L<odd m>`, `2N`, `N`, `{…}`.
pub fn parse_language(spec: &str, space: &HypothesisSpace) -> Result<Index> {
    let spec = spec.trim();
    match spec {
        "2N" | "2ℕ" => return Ok(space.evens()),
        "N" | "ℕ" => return Ok(space.naturals()),
        _ => {}
    }
    if let Some(m) = spec.strip_prefix('L') {
        let m: Nat = m.parse().map_err(|_| ConfigError(format!("bad language {spec:?}")))?;
        if m.is_multiple_of(2) {
            return fail(format!("L_m needs odd m, got {m}"));
        }
        return Ok(Thm3Class::new(space).p(m, space));
    }
    if spec.starts_with('{') {
        return Ok(space.ind(&parse_set(spec)?));
    }
    fail(format!("unknown language {spec:?}"))
}

pub fn parse_text(spec: &str, space: &HypothesisSpace) -> Result<Text> {
    match spec.strip_prefix("canonical:") {
        Some(lang) => Ok(Text::canonical(parse_language(lang, space)?)),
        None => {
            let prefix: SequencePrefix = spec.parse().map_err(|e| ConfigError(format!("bad text {spec:?}: {e:?}")))?;
            Ok(Text::finite_with_content(prefix, space))
        }
    }
}

/// Built-in name or `@file`; `wanted` restricts the kind.
pub fn parse_learner(spec: &str, wanted: Option<LearnerKind>, wrap: bool) -> Result<SharedLearner> {
    if let Some(path) = spec.strip_prefix('@') {
        let h = TableLearner::load(Path::new(path))?.into_shared();
        return match wanted {
            None => Ok(h),
            Some(k) if h.kind() == k => Ok(h),
            Some(LearnerKind::PartiallySetDriven) if wrap && h.kind() == LearnerKind::SetDriven => Ok(wrap_as_psd(h)),
            Some(k) => fail(format!("table learner is {}, needed {k}", h.kind())),
        };
    }
    let h = match wanted {
        Some(k) => builtin_for(spec, k, wrap),
        None => crate::canonical::builtin(spec),
    };
    h.map_err(|e: BuiltinError| ConfigError(e.to_string()))
}

/// Space-independent form of a language descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PortableLanguage {
    Finite { elements: BTreeSet<Nat> },
    Decidable { predicate: Predicate },
    Pad { base: Nat, extras: Vec<Nat> },
    Join { base: Nat, elements: BTreeSet<Nat> },
    Empty,
    Session { describe: String },
}

fn export(space: &HypothesisSpace, code: Nat, out: &mut BTreeMap<Nat, PortableLanguage>) {
    if out.contains_key(&code) {
        return;
    }
    let p = match space.descriptor(Index::from_code(code)) {
        None => PortableLanguage::Empty,
        Some(LanguageDescriptor::Finite(s)) => PortableLanguage::Finite { elements: s },
        Some(LanguageDescriptor::Decidable(p)) => PortableLanguage::Decidable { predicate: p },
        Some(LanguageDescriptor::PadOf(e, extras)) => {
            export(space, e.code(), out);
            PortableLanguage::Pad { base: e.code(), extras }
        }
        Some(LanguageDescriptor::JoinOf(e, s)) => {
            export(space, e.code(), out);
            PortableLanguage::Join { base: e.code(), elements: s }
        }
        Some(LanguageDescriptor::Lazy(l)) => PortableLanguage::Session { describe: l.describe() },
    };
    out.insert(code, p);
}

fn import(
    code: Nat,
    table: &BTreeMap<Nat, PortableLanguage>,
    space: &HypothesisSpace,
    done: &mut BTreeMap<Nat, Index>,
) -> Result<Index> {
    if let Some(&i) = done.get(&code) {
        return Ok(i);
    }
    let i = match table.get(&code) {
        None => return fail(format!("trace has no language for code {code}")),
        Some(PortableLanguage::Join { base, elements }) => {
            let b = import(*base, table, space, done)?;
            space.join(b, elements)
        }
        Some(PortableLanguage::Finite { elements }) => space.ind(elements),
        Some(PortableLanguage::Decidable { predicate }) => space.decidable(predicate.clone()),
        Some(PortableLanguage::Pad { base, extras }) => {
            let b = import(*base, table, space, done)?;
            space.pad(b, extras)
        }
        Some(PortableLanguage::Empty) => space.ind(&BTreeSet::new()),
        Some(PortableLanguage::Session { describe }) => {
            return fail(format!("trace refers to session language {describe}, which cannot be rebuilt"))
        }
    };
    done.insert(code, i);
    Ok(i)
}

/// A learning sequence together with everything needed to re-check it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub learner: String,
    pub kind: String,
    pub text: String,
    pub horizon: usize,
    pub enum_budget: Nat,
    pub prefix: String,
    pub hypotheses: Vec<Option<Nat>>,
    pub content: Option<Nat>,
    pub languages: BTreeMap<Nat, PortableLanguage>,
}

impl Trace {
    pub fn new(h: &SharedLearner, text_spec: &str, text: &Text, seq: &LearningSequence, cfg: &RunConfig, space: &HypothesisSpace) -> Self {
        let hypotheses: Vec<Option<Nat>> = seq.entries.iter().map(|e| e.map(Index::code)).collect();
        let mut languages = BTreeMap::new();
        for code in hypotheses.iter().flatten().chain(text.content.map(Index::code).iter()) {
            export(space, *code, &mut languages);
        }
        Trace {
            learner: h.name().to_string(),
            kind: h.kind().to_string(),
            text: text_spec.to_string(),
            horizon: cfg.horizon,
            enum_budget: cfg.enum_budget,
            prefix: seq.prefix.to_string(),
            hypotheses,
            content: text.content.map(Index::code),
            languages,
        }
    }

    /// Rebuilds the sequence and the declared content in `space`.
    pub fn rebuild(&self, space: &HypothesisSpace) -> Result<(LearningSequence, Option<Index>)> {
        let mut done = BTreeMap::new();
        let prefix: SequencePrefix = self.prefix.parse().map_err(|e| ConfigError(format!("bad trace prefix: {e:?}")))?;
        let entries = self
            .hypotheses
            .iter()
            .map(|h| h.map(|c| import(c, &self.languages, space, &mut done)).transpose())
            .collect::<Result<Vec<_>>>()?;
        let content = self.content.map(|c| import(c, &self.languages, space, &mut done)).transpose()?;
        Ok((LearningSequence::new(prefix, entries), content))
    }
}

fn emit(value: &serde_json::Value, out: Option<&Path>, also_stdout: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n")).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
    }
    if also_stdout || out.is_none() {
        println!("{text}");
    }
    Ok(())
}

fn need<'a>(v: &'a Option<String>, what: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| ConfigError(format!("missing {what}")))
}

fn learn_run(cfg: &RunConfig, space: &HypothesisSpace) -> Result<(Trace, LearningSequence, Text)> {
    let h = parse_learner(need(&cfg.learner, "--learner")?, None, false)?;
    let spec = need(&cfg.text, "--text")?;
    let text = parse_text(spec, space)?;
    let seq = run(h.as_ref(), &text, cfg.horizon, cfg.enum_budget, space);
    Ok((Trace::new(&h, spec, &text, &seq, cfg, space), seq, text))
}

fn cmd_learn(cfg: &RunConfig) -> Result<i32> {
    let space = HypothesisSpace::new();
    let (trace, _, _) = learn_run(cfg, &space)?;
    emit(&serde_json::to_value(&trace)?, cfg.output.as_deref(), false)?;
    Ok(0)
}

fn cmd_check(cfg: &RunConfig, criterion: &str, trace: Option<&Path>, allow_budget_witness: bool) -> Result<i32> {
    let criterion: Criterion = criterion.parse().map_err(|_| ConfigError(format!("unknown criterion {criterion:?}")))?;
    let space = HypothesisSpace::new();
    let (seq, content) = match trace {
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            let t: Trace = serde_json::from_str(&raw)?;
            t.rebuild(&space)?
        }
        None => {
            let (_, seq, text) = learn_run(cfg, &space)?;
            (seq, text.content)
        }
    };
    let target = cfg.target.as_deref().map(|t| parse_language(t, &space)).transpose()?;
    let opts = CheckOptions { allow_budget_witness, ..cfg.check_options() };
    let verdict = match criterion {
        Criterion::Ex => check_ex(&space, &seq, target.ok_or_else(|| ConfigError("ex needs --target".into()))?, opts),
        Criterion::Bc => check_bc(&space, &seq, target.ok_or_else(|| ConfigError("bc needs --target".into()))?, opts),
        Criterion::Mon => {
            let t = target.or(content).ok_or_else(|| ConfigError("mon needs --target".into()))?;
            check_mon(&space, &seq, t, opts)
        }
        Criterion::SMon => check_smon(&space, &seq, opts),
    };
    emit(&verdict_json(criterion, &verdict), cfg.output.as_deref(), true)?;
    Ok(match verdict {
        CriterionVerdict::Confirmed(_) => 0,
        CriterionVerdict::Refuted(_) => 1,
        CriterionVerdict::Inconclusive(_) => 3,
    })
}

/// Runs one adversary and replays its report.
pub fn run_adversary(
    which: Which,
    h: SharedLearner,
    budgets: Budgets,
    space: &HypothesisSpace,
) -> std::result::Result<(WitnessReport, bool), AdversaryError> {
    let goal = budgets.goal;
    Ok(match which {
        Which::Coolsep => {
            let s = CoolsepSession::new(space, h, budgets)?;
            let r = s.diagnose(space, goal);
            let ok = s.verify(space, &r).is_ok();
            (r, ok)
        }
        Which::Gsmon => {
            let s = GsmonSession::new(space, h, budgets)?;
            let r = s.diagnose(space, goal);
            let ok = s.verify(space, &r).is_ok();
            (r, ok)
        }
        Which::Totalpsd => {
            let s = TotalPsdSession::new(space, h, budgets)?;
            let r = s.diagnose(space, goal);
            let ok = s.verify(space, &r).is_ok();
            (r, ok)
        }
        Which::Sd => {
            let s = SdSession::new(space, h, budgets)?;
            let r = s.diagnose(space, goal);
            let ok = s.verify(space, &r).is_ok();
            (r, ok)
        }
    })
}

fn cmd_adversary(cfg: &RunConfig, which: Which, wrap: bool) -> Result<i32> {
    let wanted = match which {
        Which::Sd => LearnerKind::SetDriven,
        _ => LearnerKind::PartiallySetDriven,
    };
    let h = parse_learner(need(&cfg.learner, "--learner")?, Some(wanted), wrap)?;
    let goal = if which == Which::Coolsep { cfg.error_goal } else { cfg.mind_change_goal };
    let space = HypothesisSpace::new();
    let (report, replayed) = run_adversary(which, h, cfg.budgets(goal), &space)?;
    let mut json = report.to_json();
    json["replayed"] = replayed.into();
    emit(&json, cfg.output.as_deref(), true)?;
    Ok(if report.variant.is_definitive() && replayed { 0 } else { 3 })
}

fn cmd_relations(sub: Option<&str>, sup: Option<&str>) -> Result<i32> {
    let map = relations_map();
    let value = match (sub, sup) {
        (None, None) => serde_json::to_value(&map)?,
        (Some(a), Some(b)) => {
            let rel = map.query(a, b)?;
            serde_json::json!({ "sub": a, "sup": b, "relation": rel })
        }
        _ => return fail("relations takes zero or two criteria"),
    };
    emit(&value, None, true)?;
    Ok(0)
}

fn cmd_enum(spec: &str, budget: Option<Nat>, cfg: &RunConfig) -> Result<i32> {
    let space = HypothesisSpace::new();
    let e = parse_language(spec, &space)?;
    let budget = budget.unwrap_or(cfg.enum_budget);
    let elements = space.enumerate(e, budget);
    emit(&serde_json::json!({ "language": spec, "budget": budget, "elements": elements }), None, true)?;
    Ok(0)
}

fn cmd_learners() -> Result<i32> {
    emit(&serde_json::to_value(BUILTINS)?, None, true)?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = load_config_file()?;
    match cli.command {
        Command::Learn(args) => cmd_learn(&RunConfig::resolve(&args, &file)?),
        Command::Check { criterion, trace, allow_budget_witness, run } => {
            cmd_check(&RunConfig::resolve(&run, &file)?, &criterion, trace.as_deref(), allow_budget_witness)
        }
        Command::Adversary { which, wrap, run } => cmd_adversary(&RunConfig::resolve(&run, &file)?, which, wrap),
        Command::Relations { sub, sup } => cmd_relations(sub.as_deref(), sup.as_deref()),
        Command::Enum { language, budget } => cmd_enum(&language, budget, &RunConfig::resolve(&RunArgs::default(), &file)?),
        Command::Learners => cmd_learners(),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(ConfigError(msg)) => {
            eprintln!("limitlab: {msg}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_file_defaults() {
        let file = parse_config("# budgets\nhorizon = 7\nenum_budget=9\n").unwrap();
        let flags = RunArgs { horizon: Some(3), ..RunArgs::default() };
        let c = RunConfig::resolve(&flags, &file).unwrap();
        assert_eq!((c.horizon, c.enum_budget, c.search_bound), (3, 9, 200));
        assert!(RunConfig::resolve(&flags, &parse_config("colour = red").unwrap()).is_err());
        assert!(parse_config("horizon").is_err());
    }

    #[test]
    fn language_specs() {
        let s = HypothesisSpace::new();
        assert_eq!(s.enumerate(parse_language("L5", &s).unwrap(), 10), [0, 2, 4, 5].into());
        assert_eq!(parse_language("2N", &s).unwrap(), s.evens());
        assert_eq!(s.enumerate(parse_language("{3, 1}", &s).unwrap(), 10), [1, 3].into());
        assert!(parse_language("L4", &s).is_err());
        assert!(parse_language("Q", &s).is_err());
    }

    #[test]
    fn trace_round_trip_across_spaces() {
        let s = HypothesisSpace::new();
        let cfg = RunConfig { horizon: 8, learner: Some("thm3".into()), text: Some("canonical:L5".into()), ..RunConfig::default() };
        let (trace, seq, _) = learn_run(&cfg, &s).unwrap();
        let json = serde_json::to_string(&trace).unwrap();
        let back: Trace = serde_json::from_str(&json).unwrap();
        let fresh = HypothesisSpace::new();
        fresh.ind_of([99]);
        let (seq2, content) = back.rebuild(&fresh).unwrap();
        assert_eq!(seq2.prefix, seq.prefix);
        for (a, b) in seq.entries.iter().zip(&seq2.entries) {
            assert_eq!(a.map(|i| s.enumerate(i, 20)), b.map(|i| fresh.enumerate(i, 20)));
        }
        assert_eq!(fresh.enumerate(content.unwrap(), 20), [0, 2, 4, 5].into());
    }
}
