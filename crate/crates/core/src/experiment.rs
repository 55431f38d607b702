//! Config-driven experiment plans and their CSV / JSON outputs.
//!
//! A plan is a JSON document:
//!
//! ```json
//! {
//!   "games": ["IPD", "IVD", "ISH"],
//!   "agents": ["Selfish", "Utilitarian", {"framework": "VirtueMixed", "beta": 0.2}, {"static": "TFT"}],
//!   "pairing": "all_unordered_pairs_with_self",
//!   "iterations": 10000,
//!   "runs": 100,
//!   "base_seed": 42,
//!   "variants": {"long_run": 50000, "beta_sweep": [0.0, 0.5, 1.0],
//!                "schedule_override": {"kind": "Constant", "eps": 0.05}},
//!   "outputs": {"summary_csv": "summary.csv", "steps_csv": {"path": "steps.csv", "thinning": 10},
//!               "json": "bundle.json"}
//! }
//! ```
//!
//! `game` may replace `games` for a single game. `pairing` may instead be an
//! explicit list such as `[["Selfish", "TFT"], [0, 1]]` (agent labels or
//! indices into `agents`). Learner hyper-parameters `alpha`, `gamma`, `xi`,
//! `beta`, `xi_hat` and `schedule` can be set plan-wide at the top level or
//! per agent.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::analytics::{summarize_matchup, MatchupSummary, PairClass};
use crate::episode::{run_matchup_logged, with_workers, AgentSpec, EpisodeResult, LogOptions, PRNG_ID};
use crate::error::{Error, Result};
use crate::game::GameKind;
use crate::moral::{MoralFramework, DEFAULT_BETA, DEFAULT_XI, DEFAULT_XI_HAT};
use crate::qlearn::{ExplorationSchedule, LearnerParams, DEFAULT_ALPHA, DEFAULT_GAMMA};
use crate::strategy::StaticStrategy;

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_STEPS_THINNING: usize = 10;
pub const DEFAULT_SUMMARY_FILE: &str = "summary.csv";
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MORALSIM_OUT_DIR";

pub const SUMMARY_HEADER: &str = "game,agent_m,agent_o,variant,n_runs,pct_cc,pct_cd,pct_dc,pct_dd,\
mean_collective,ci_collective,mean_gini,ci_gini,mean_min,ci_min,mean_rm_extr,ci_rm_extr,\
mean_rm_intr,ci_rm_intr,mean_ro_extr,ci_ro_extr,mean_ro_intr,ci_ro_intr";

pub const STEPS_HEADER: &str = "game,agent_m,agent_o,variant,run,seed,t,state_m,state_o,a_m,a_o,\
r_m_extr,r_o_extr,r_m_intr,r_o_intr,eps_m,eps_o";

pub const BASE_VARIANT: &str = "base";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Every agent against every later agent and itself, in list order.
    AllUnorderedPairsWithSelf,
    /// Index pairs into the agent list.
    Explicit(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Variants {
    pub long_run: Option<usize>,
    pub beta_sweep: Vec<f64>,
    pub schedule_override: Option<ExplorationSchedule<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepsOutput {
    pub path: PathBuf,
    pub thinning: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outputs {
    pub summary_csv: PathBuf,
    pub steps_csv: Option<StepsOutput>,
    pub json: Option<PathBuf>,
}

impl Outputs {
    /// Resolves relative output paths against `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        join(&mut self.summary_csv);
        if let Some(s) = &mut self.steps_csv {
            join(&mut s.path);
        }
        if let Some(j) = &mut self.json {
            join(j);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub games: Vec<GameKind>,
    pub agents: Vec<AgentSpec<f64>>,
    pub pairing: Pairing,
    pub iterations: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    pub variants: Variants,
    pub outputs: Outputs,
}

/// One `(game, pair, variant)` cell of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Matchup {
    pub game: GameKind,
    pub spec_m: AgentSpec<f64>,
    pub spec_o: AgentSpec<f64>,
    pub iterations: usize,
    pub variant: String,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.games.is_empty() {
            return Err(Error::Config("plan lists no games".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("plan lists no agents".into()));
        }
        if self.pairs().is_empty() {
            return Err(Error::Config("plan pairs no agents".into()));
        }
        if self.iterations < 2 {
            return Err(Error::Config(format!("iterations must be at least 2, got {}", self.iterations)));
        }
        if self.n_runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let Pairing::Explicit(pairs) = &self.pairing {
            if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= self.agents.len() || j >= self.agents.len()) {
                return Err(Error::Config(format!("pairing ({i}, {j}) refers past the {} agents", self.agents.len())));
            }
        }
        for a in &self.agents {
            a.validate()?;
        }
        if let Some(t) = self.variants.long_run {
            if t < 2 {
                return Err(Error::Config(format!("long_run must be at least 2 iterations, got {t}")));
            }
        }
        for &b in &self.variants.beta_sweep {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Config(format!("beta_sweep value {b} outside [0,1]")));
            }
        }
        if let Some(s) = &self.variants.schedule_override {
            s.validate()?;
        }
        if let Some(s) = &self.outputs.steps_csv {
            if s.thinning == 0 {
                return Err(Error::Config("steps_csv thinning must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match &self.pairing {
            Pairing::AllUnorderedPairsWithSelf => {
                let n = self.agents.len();
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
            }
            Pairing::Explicit(pairs) => pairs.clone(),
        }
    }

    /// Every matchup the plan runs, in output order: game, then pair, then variant.
    pub fn matchups(&self) -> Vec<Matchup> {
        let mut out = Vec::new();
        for &game in &self.games {
            for (i, j) in self.pairs() {
                let (m, o) = (self.agents[i], self.agents[j]);
                let cell =
                    |spec_m, spec_o, iterations, variant: String| Matchup { game, spec_m, spec_o, iterations, variant };
                out.push(cell(m, o, self.iterations, BASE_VARIANT.to_string()));

                if let Some(t) = self.variants.long_run {
                    out.push(cell(m, o, t, format!("T={t}")));
                }
                let has_mixed = |s: &AgentSpec<f64>| matches!(s.framework(), Some(MoralFramework::VirtueMixed { .. }));
                if has_mixed(&m) || has_mixed(&o) {
                    for &beta in &self.variants.beta_sweep {
                        out.push(cell(with_beta(m, beta), with_beta(o, beta), self.iterations, format!("beta={beta}")));
                    }
                }
                if let Some(schedule) = self.variants.schedule_override {
                    out.push(cell(
                        with_schedule(m, schedule),
                        with_schedule(o, schedule),
                        self.iterations,
                        schedule.label(),
                    ));
                }
            }
        }
        out
    }
}

fn with_beta(spec: AgentSpec<f64>, beta: f64) -> AgentSpec<f64> {
    match spec {
        AgentSpec::Learner(mut p) => {
            if let MoralFramework::VirtueMixed { xi_hat, .. } = p.framework {
                p.framework = MoralFramework::VirtueMixed { beta, xi_hat };
            }
            AgentSpec::Learner(p)
        }
        other => other,
    }
}

fn with_schedule(spec: AgentSpec<f64>, schedule: ExplorationSchedule<f64>) -> AgentSpec<f64> {
    match spec {
        AgentSpec::Learner(p) => AgentSpec::Learner(p.with_schedule(schedule)),
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Config file schema

#[derive(Debug, Default)]
struct LearnerDefaults {
    alpha: Option<f64>,
    gamma: Option<f64>,
    xi: Option<f64>,
    beta: Option<f64>,
    xi_hat: Option<f64>,
    schedule: Option<ExplorationSchedule<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AgentConfig {
    Name(String),
    Static {
        #[serde(rename = "static")]
        strategy: StaticStrategy,
    },
    Learner {
        framework: String,
        #[serde(flatten)]
        overrides: LearnerOverrides,
    },
}

#[derive(Debug, Default, Deserialize)]
struct LearnerOverrides {
    alpha: Option<f64>,
    gamma: Option<f64>,
    xi: Option<f64>,
    beta: Option<f64>,
    xi_hat: Option<f64>,
    schedule: Option<ExplorationSchedule<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AgentRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PairingConfig {
    Mode(String),
    Explicit(Vec<(AgentRef, AgentRef)>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantsConfig {
    long_run: Option<usize>,
    #[serde(default)]
    beta_sweep: Vec<f64>,
    schedule_override: Option<ExplorationSchedule<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StepsConfig {
    Path(PathBuf),
    Full { path: PathBuf, thinning: Option<usize> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsConfig {
    summary_csv: Option<PathBuf>,
    steps_csv: Option<StepsConfig>,
    json: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanConfig {
    game: Option<GameKind>,
    games: Option<Vec<GameKind>>,
    agents: Vec<AgentConfig>,
    pairing: Option<PairingConfig>,
    iterations: Option<usize>,
    runs: Option<usize>,
    base_seed: Option<u64>,
    #[serde(default)]
    variants: VariantsConfig,
    #[serde(default)]
    outputs: OutputsConfig,
    alpha: Option<f64>,
    gamma: Option<f64>,
    xi: Option<f64>,
    beta: Option<f64>,
    xi_hat: Option<f64>,
    schedule: Option<ExplorationSchedule<f64>>,
}

/// Builds a learner from plan-wide defaults and per-agent overrides.
fn learner_spec(name: &str, defaults: &LearnerDefaults, o: &LearnerOverrides) -> Result<AgentSpec<f64>> {
    let pick = |own: Option<f64>, plan: Option<f64>, fallback: f64| own.or(plan).unwrap_or(fallback);
    let xi = pick(o.xi, defaults.xi, DEFAULT_XI);
    let framework = match name {
        "Deontological" => MoralFramework::Deontological { xi },
        "VirtueKindness" => MoralFramework::VirtueKindness { xi },
        "VirtueMixed" => MoralFramework::VirtueMixed {
            beta: pick(o.beta, defaults.beta, DEFAULT_BETA),
            xi_hat: pick(o.xi_hat, defaults.xi_hat, DEFAULT_XI_HAT),
        },
        other => MoralFramework::from_name(other)?,
    };
    let params = LearnerParams {
        alpha: pick(o.alpha, defaults.alpha, DEFAULT_ALPHA),
        gamma: pick(o.gamma, defaults.gamma, DEFAULT_GAMMA),
        schedule: o.schedule.or(defaults.schedule).unwrap_or_default(),
        framework,
    };
    Ok(AgentSpec::Learner(params))
}

impl PlanConfig {
    fn into_plan(self) -> Result<ExperimentPlan> {
        let games = match (self.game, self.games) {
            (Some(_), Some(_)) => return Err(Error::Config("give either `game` or `games`, not both".into())),
            (Some(g), None) => vec![g],
            (None, Some(gs)) => gs,
            (None, None) => return Err(Error::Config("missing field `games`".into())),
        };

        let defaults = LearnerDefaults {
            alpha: self.alpha,
            gamma: self.gamma,
            xi: self.xi,
            beta: self.beta,
            xi_hat: self.xi_hat,
            schedule: self.schedule,
        };
        let none = LearnerOverrides::default();
        let agents = self
            .agents
            .iter()
            .map(|a| match a {
                AgentConfig::Name(name) => match StaticStrategy::from_str(name) {
                    Ok(s) => Ok(AgentSpec::Static(s)),
                    Err(_) => learner_spec(name, &defaults, &none),
                },
                AgentConfig::Static { strategy } => Ok(AgentSpec::Static(*strategy)),
                AgentConfig::Learner { framework, overrides } => learner_spec(framework, &defaults, overrides),
            })
            .collect::<Result<Vec<_>>>()?;

        let resolve = |r: &AgentRef| -> Result<usize> {
            match r {
                AgentRef::Index(i) => Ok(*i),
                AgentRef::Label(label) => {
                    let mut hits = agents.iter().enumerate().filter(|(_, a)| a.label() == *label);
                    match (hits.next(), hits.next()) {
                        (Some((i, _)), None) => Ok(i),
                        (None, _) => Err(Error::Config(format!("pairing refers to unknown agent {label:?}"))),
                        (Some(_), Some(_)) => Err(Error::Config(format!("agent label {label:?} is ambiguous"))),
                    }
                }
            }
        };
        let pairing = match self.pairing {
            None => Pairing::AllUnorderedPairsWithSelf,
            Some(PairingConfig::Mode(m)) if m == "all_unordered_pairs_with_self" => Pairing::AllUnorderedPairsWithSelf,
            Some(PairingConfig::Mode(m)) => {
                return Err(Error::Config(format!(
                    "unknown pairing {m:?}, expected \"all_unordered_pairs_with_self\" or a list of pairs"
                )))
            }
            Some(PairingConfig::Explicit(pairs)) => {
                Pairing::Explicit(pairs.iter().map(|(a, b)| Ok((resolve(a)?, resolve(b)?))).collect::<Result<_>>()?)
            }
        };

        let steps_csv = self.outputs.steps_csv.map(|s| match s {
            StepsConfig::Path(path) => StepsOutput { path, thinning: DEFAULT_STEPS_THINNING },
            StepsConfig::Full { path, thinning } => {
                StepsOutput { path, thinning: thinning.unwrap_or(DEFAULT_STEPS_THINNING) }
            }
        });

        let plan = ExperimentPlan {
            games,
            agents,
            pairing,
            iterations: self.iterations.unwrap_or(DEFAULT_ITERATIONS),
            n_runs: self.runs.unwrap_or(DEFAULT_RUNS),
            base_seed: self.base_seed.unwrap_or(0),
            variants: Variants {
                long_run: self.variants.long_run,
                beta_sweep: self.variants.beta_sweep,
                schedule_override: self.variants.schedule_override,
            },
            outputs: Outputs {
                summary_csv: self.outputs.summary_csv.unwrap_or_else(|| PathBuf::from(DEFAULT_SUMMARY_FILE)),
                steps_csv,
                json: self.outputs.json,
            },
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Parses and validates a plan from JSON text. `origin` names the source in errors.
pub fn parse_plan(text: &str, origin: &Path) -> Result<ExperimentPlan> {
    let config: PlanConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
    config.into_plan()
}

/// Reads a plan file; relative output paths stay relative to the caller's choice of directory.
pub fn load_plan(path: impl AsRef<Path>) -> Result<ExperimentPlan> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_plan(&text, path)
}

/// Parses an agent given on the command line: a framework or static strategy
/// name, optionally followed by parameters, e.g. `VirtueMixed(beta=0.2)`.
pub fn parse_agent(text: &str) -> Result<AgentSpec<f64>> {
    let text = text.trim();
    if let Ok(s) = StaticStrategy::from_str(text) {
        return Ok(AgentSpec::Static(s));
    }
    let (name, args) = match text.split_once('(') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("unbalanced parentheses in agent {text:?}")))?;
            (name.trim(), inner)
        }
        None => (text, ""),
    };
    let mut o = LearnerOverrides::default();
    for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| Error::Config(format!("agent parameter {kv:?} is not key=value")))?;
        let v: f64 =
            v.trim().parse().map_err(|_| Error::Config(format!("agent parameter {k} has non-numeric value {v:?}")))?;
        let slot = match k.trim() {
            "alpha" => &mut o.alpha,
            "gamma" => &mut o.gamma,
            "xi" => &mut o.xi,
            "beta" => &mut o.beta,
            "xi_hat" => &mut o.xi_hat,
            other => return Err(Error::Config(format!("unknown agent parameter {other:?}"))),
        };
        *slot = Some(v);
    }
    let spec = learner_spec(name, &LearnerDefaults::default(), &o)?;
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Execution

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub artifact_version: String,
    pub prng: String,
    pub timestamp: String,
}

impl Provenance {
    pub fn now() -> Self {
        Provenance {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            prng: PRNG_ID.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultBundle {
    pub plan: ExperimentPlan,
    pub summaries: Vec<MatchupSummary>,
    pub provenance: Provenance,
}

/// Executes every matchup of the plan without writing anything.
///
/// `on_matchup` sees each matchup's full results in plan order on the calling
/// thread, before they are dropped.
pub fn execute_plan(
    plan: &ExperimentPlan,
    workers: usize,
    log: LogOptions,
    mut on_matchup: impl FnMut(&Matchup, &[EpisodeResult<f64>]) -> Result<()>,
) -> Result<ResultBundle> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    plan.validate()?;
    let mut summaries = Vec::new();
    for m in plan.matchups() {
        let results = with_workers(workers, || {
            run_matchup_logged(&m.spec_m, &m.spec_o, m.game, m.iterations, plan.n_runs, plan.base_seed, log)
        })??;
        on_matchup(&m, &results)?;
        summaries.push(summarize_matchup(&results)?.with_variant(m.variant.clone()));
    }
    Ok(ResultBundle { plan: plan.clone(), summaries, provenance: Provenance::now() })
}

/// Runs the plan and writes every configured output atomically.
pub fn run_plan(plan: &ExperimentPlan, workers: usize) -> Result<ResultBundle> {
    let mut steps_writer = match &plan.outputs.steps_csv {
        Some(s) => {
            let mut w = AtomicFile::create(&s.path)?;
            writeln!(w.writer(), "{STEPS_HEADER}").map_err(|e| Error::io(&s.path, e))?;
            Some((w, s))
        }
        None => None,
    };
    let log = match &plan.outputs.steps_csv {
        Some(s) => LogOptions::thinned(s.thinning),
        None => LogOptions::tail_only(crate::episode::DEFAULT_TAIL),
    };

    let bundle = execute_plan(plan, workers, log, |m, results| {
        if let Some((w, s)) = &mut steps_writer {
            write_steps(w.writer(), m, results).map_err(|e| Error::io(&s.path, e))?;
        }
        Ok(())
    })?;

    // Stage everything before renaming anything into place.
    let summary = stage(&plan.outputs.summary_csv, &summary_csv_string(&bundle)?)?;
    let json = match &plan.outputs.json {
        Some(path) => Some(stage(path, &bundle_json(&bundle)?)?),
        None => None,
    };
    if let Some((w, _)) = steps_writer {
        w.commit()?;
    }
    summary.commit()?;
    if let Some(j) = json {
        j.commit()?;
    }
    Ok(bundle)
}

struct AtomicFile {
    target: PathBuf,
    temp: BufWriter<NamedTempFile>,
}

impl AtomicFile {
    fn create(target: &Path) -> Result<Self> {
        let dir = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let temp = NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(AtomicFile { target: target.to_path_buf(), temp: BufWriter::new(temp) })
    }

    fn writer(&mut self) -> &mut impl Write {
        &mut self.temp
    }

    fn commit(self) -> Result<()> {
        let target = self.target;
        let temp = self.temp.into_inner().map_err(|e| Error::io(&target, e.into_error()))?;
        temp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        Ok(())
    }
}

fn stage(path: &Path, contents: &str) -> Result<AtomicFile> {
    let mut f = AtomicFile::create(path)?;
    f.writer().write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(f)
}

fn write_steps(w: &mut impl Write, m: &Matchup, results: &[EpisodeResult<f64>]) -> std::io::Result<()> {
    let (am, ao) = (csv_field(&m.spec_m.label()), csv_field(&m.spec_o.label()));
    for (run, r) in results.iter().enumerate() {
        for s in &r.steps {
            writeln!(
                w,
                "{},{am},{ao},{},{run},{},{},\"{}\",\"{}\",{},{},{},{},{},{},{},{}",
                m.game,
                csv_field(&m.variant),
                r.seed,
                s.t,
                s.state_m.key(),
                s.state_o.key(),
                s.a_m,
                s.a_o,
                s.r_m_extr,
                s.r_o_extr,
                sig6(s.r_m_intr),
                sig6(s.r_o_intr),
                sig6(s.eps_m),
                sig6(s.eps_o),
            )?;
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats a real with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn pct1(x: f64) -> String {
    format!("{x:.1}")
}

/// One CSV row's fields, in header order.
fn summary_fields(s: &MatchupSummary) -> Vec<String> {
    let o = &s.outcomes;
    let mut fields = vec![
        s.game.to_string(),
        csv_field(&s.agent_m),
        csv_field(&s.agent_o),
        csv_field(&s.variant),
        s.n_runs.to_string(),
    ];
    fields.extend(PairClass::ALL.iter().map(|&c| pct1(s.pct(c))));
    for e in [o.collective, o.gini, o.min, o.rm_extr, o.rm_intr, o.ro_extr, o.ro_intr] {
        fields.push(sig6(e.mean));
        fields.push(sig6(e.ci95));
    }
    fields
}

pub fn summary_csv_string(bundle: &ResultBundle) -> Result<String> {
    if bundle.summaries.is_empty() {
        return Err(Error::Empty("result bundle"));
    }
    let mut out = String::with_capacity(256 * (bundle.summaries.len() + 1));
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for s in &bundle.summaries {
        let _ = writeln!(out, "{}", summary_fields(s).join(","));
    }
    Ok(out)
}

/// Writes the summary CSV (UTF-8, LF endings) via a temp file and rename.
pub fn emit_summary_csv(bundle: &ResultBundle, path: impl AsRef<Path>) -> Result<()> {
    stage(path.as_ref(), &summary_csv_string(bundle)?)?.commit()
}

#[derive(Serialize)]
struct JsonRow<'a> {
    game: GameKind,
    agent_m: &'a str,
    agent_o: &'a str,
    variant: &'a str,
    n_runs: usize,
    iterations: usize,
    pct_cc: f64,
    pct_cd: f64,
    pct_dc: f64,
    pct_dd: f64,
    #[serde(flatten)]
    outcomes: &'a crate::analytics::Outcomes,
}

#[derive(Serialize)]
struct JsonBundle<'a> {
    provenance: &'a Provenance,
    plan: &'a ExperimentPlan,
    rows: Vec<JsonRow<'a>>,
}

pub fn bundle_json(bundle: &ResultBundle) -> Result<String> {
    let rows = bundle
        .summaries
        .iter()
        .map(|s| JsonRow {
            game: s.game,
            agent_m: &s.agent_m,
            agent_o: &s.agent_o,
            variant: &s.variant,
            n_runs: s.n_runs,
            iterations: s.iterations,
            pct_cc: s.pct(PairClass::CC),
            pct_cd: s.pct(PairClass::CD),
            pct_dc: s.pct(PairClass::DC),
            pct_dd: s.pct(PairClass::DD),
            outcomes: &s.outcomes,
        })
        .collect();
    let doc = JsonBundle { provenance: &bundle.provenance, plan: &bundle.plan, rows };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(format!("cannot serialize bundle: {e}")))
}

pub fn emit_json(bundle: &ResultBundle, path: impl AsRef<Path>) -> Result<()> {
    stage(path.as_ref(), &bundle_json(bundle)?)?.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(text: &str) -> Result<ExperimentPlan> {
        parse_plan(text, Path::new("test.json"))
    }

    #[test]
    fn minimal_plan_gets_defaults() {
        let p = plan(r#"{"game": "IPD", "agents": ["Selfish", "Utilitarian"]}"#).unwrap();
        assert_eq!(p.games, vec![GameKind::PrisonersDilemma]);
        assert_eq!(p.iterations, 10_000);
        assert_eq!(p.n_runs, 100);
        assert_eq!(p.pairing, Pairing::AllUnorderedPairsWithSelf);
        assert_eq!(p.outputs.summary_csv, PathBuf::from("summary.csv"));
        let AgentSpec::Learner(params) = p.agents[1] else { panic!("expected learner") };
        assert_eq!(params, LearnerParams::new(MoralFramework::Utilitarian));
        assert_eq!(params.alpha, 0.01);
        assert_eq!(params.gamma, 0.9);
        assert_eq!(params.schedule, ExplorationSchedule::LinearDecay { start: 1.0, end: 0.0 });
        // Selfish-Selfish, Selfish-Utilitarian, Utilitarian-Utilitarian.
        assert_eq!(p.matchups().len(), 3);
    }

    #[test]
    fn framework_defaults_apply() {
        let p = plan(r#"{"game": "ISH", "agents": ["Deontological", "VirtueMixed", "VirtueKindness"]}"#).unwrap();
        assert_eq!(p.agents[0].framework(), Some(&MoralFramework::Deontological { xi: 5.0 }));
        assert_eq!(p.agents[1].framework(), Some(&MoralFramework::VirtueMixed { beta: 0.5, xi_hat: 1.0 }));
        assert_eq!(p.agents[2].framework(), Some(&MoralFramework::VirtueKindness { xi: 5.0 }));
    }

    #[test]
    fn beta_sweep_adds_six_variants_per_pairing() {
        let p = plan(
            r#"{"game": "IPD", "agents": ["VirtueMixed", "Selfish"], "pairing": [["VirtueMixed", "Selfish"]],
                "variants": {"beta_sweep": [0, 0.2, 0.4, 0.6, 0.8, 1.0]}}"#,
        )
        .unwrap();
        let ms = p.matchups();
        let variants: Vec<_> = ms.iter().filter(|m| m.variant != BASE_VARIANT).collect();
        assert_eq!(variants.len(), 6);
        assert_eq!(variants[1].variant, "beta=0.2");
        assert_eq!(variants[1].spec_m.framework(), Some(&MoralFramework::VirtueMixed { beta: 0.2, xi_hat: 1.0 }));
        assert_eq!(variants[1].spec_o, AgentSpec::learner(MoralFramework::Selfish));
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(matches!(plan(r#"{"game": "IPD", "agents": ["Selfish"], "alpha": -1}"#), Err(Error::Config(_))));
        assert!(plan(r#"{"game": "IPD", "agents": [{"framework": "VirtueMixed", "beta": 1.5}]}"#).is_err());
        assert!(plan(r#"{"game": "IPD", "agents": ["Selfish"], "gamma": 1.0}"#).is_err());
        assert!(plan(r#"{"game": "IPD", "agents": ["Selfish"], "runs": 0}"#).is_err());
        assert!(plan(r#"{"game": "IPD", "agents": ["Selfish"], "variants": {"beta_sweep": [2]}}"#).is_err());
        assert!(plan(r#"{"games": [], "agents": ["Selfish"]}"#).is_err());
        assert!(plan(r#"{"game": "IPD", "agents": ["Selfish", "AD"], "pairing": [[0, 5]]}"#).is_err());
    }

    #[test]
    fn parse_errors_name_the_problem() {
        let err = plan("{\n  \"game\": \"IPD\",\n  \"agentz\": []\n}").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(msg.contains("agentz") && msg.contains("line 3"), "{msg}");

        let err = plan(r#"{"game": "PD", "agents": ["Selfish"]}"#).unwrap_err();
        assert!(err.to_string().contains("PD"), "{err}");
        assert!(plan(r#"{"game": "IPD", "agents": ["Kantian"]}"#).is_err());
    }

    #[test]
    fn explicit_pairings_resolve_labels_and_statics() {
        let p = plan(
            r#"{"games": ["IPD", "ISH"], "agents": ["Selfish", {"static": "TFT"}, "AD"],
                "pairing": [["Selfish", "TFT"], [0, 2]]}"#,
        )
        .unwrap();
        assert_eq!(p.pairs(), vec![(0, 1), (0, 2)]);
        assert_eq!(p.agents[2], AgentSpec::Static(StaticStrategy::AlwaysDefect));
        assert_eq!(p.matchups().len(), 4);
    }

    #[test]
    fn per_agent_and_plan_wide_parameters() {
        let p = plan(
            r#"{"game": "IVD", "agents": ["Selfish", {"framework": "Selfish", "alpha": 0.5}],
                "alpha": 0.1, "schedule": {"kind": "Constant", "eps": 0.05}}"#,
        )
        .unwrap();
        let AgentSpec::Learner(a) = p.agents[0] else { panic!() };
        let AgentSpec::Learner(b) = p.agents[1] else { panic!() };
        assert_eq!(a.alpha, 0.1);
        assert_eq!(b.alpha, 0.5);
        assert_eq!(a.schedule, ExplorationSchedule::Constant { eps: 0.05 });
    }

    #[test]
    fn variants_cover_long_runs_and_schedules() {
        let p = plan(
            r#"{"game": "IPD", "agents": ["VirtueEquality", "Utilitarian"], "pairing": [[0, 1]],
                "variants": {"long_run": 50000, "schedule_override": {"kind": "Constant", "eps": 0.05}}}"#,
        )
        .unwrap();
        let ms = p.matchups();
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[1].iterations, 50_000);
        assert_eq!(ms[1].variant, "T=50000");
        assert_eq!(ms[2].variant, "eps=0.05");
        let AgentSpec::Learner(l) = ms[2].spec_m else { panic!() };
        assert_eq!(l.schedule, ExplorationSchedule::Constant { eps: 0.05 });
    }

    #[test]
    fn agent_parsing() {
        assert_eq!(parse_agent("TFT").unwrap(), AgentSpec::Static(StaticStrategy::TitForTat));
        assert_eq!(parse_agent("Selfish").unwrap(), AgentSpec::learner(MoralFramework::Selfish));
        assert_eq!(
            parse_agent("VirtueMixed(beta=0.2)").unwrap().framework(),
            Some(&MoralFramework::VirtueMixed { beta: 0.2, xi_hat: 1.0 })
        );
        let spec = parse_agent("VirtueMixed(beta=0.2)").unwrap();
        assert_eq!(parse_agent(&spec.label()).unwrap(), spec);
        assert!(parse_agent("VirtueMixed(beta=2)").is_err());
        assert!(parse_agent("VirtueMixed(beta=0.2").is_err());
        assert!(parse_agent("Selfish(temperature=1)").is_err());
        assert!(parse_agent("Nobody").is_err());
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(sig6(60000.0), "60000");
        assert_eq!(sig6(0.4), "0.4");
        assert_eq!(sig6(4.0 / 7.0), "0.571429");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(999999.7), "1e+06");
        assert_eq!(sig6(1234567.0), "1.23457e+06");
        assert_eq!(sig6(0.00001234), "1.234e-05");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn empty_bundle_is_an_error() {
        let p = plan(r#"{"game": "IPD", "agents": ["Selfish"]}"#).unwrap();
        let bundle = ResultBundle { plan: p, summaries: vec![], provenance: Provenance::now() };
        assert!(matches!(summary_csv_string(&bundle), Err(Error::Empty(_))));
    }

    #[test]
    fn single_summary_csv_has_two_lines() {
        let p = plan(r#"{"game": "IPD", "agents": ["Selfish"], "iterations": 200, "runs": 4}"#).unwrap();
        let bundle = execute_plan(&p, 2, LogOptions::tail_only(1), |_, _| Ok(())).unwrap();
        let csv = summary_csv_string(&bundle).unwrap();
        let lines: Vec<_> = csv.split_terminator('\n').collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], SUMMARY_HEADER);
        assert_eq!(lines[1].split(',').count(), SUMMARY_HEADER.split(',').count());
        assert!(lines[1].starts_with("IPD,Selfish,Selfish,base,4,"));
        assert!(!csv.contains('\r'));
    }
}
