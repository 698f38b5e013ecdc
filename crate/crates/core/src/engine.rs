//! Per-agent day simulation and population runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{GenerationParams, Prompt, TemplateSet, TextBackend};
use crate::config::{self, ModePolicy, PlanSource, SimulationConfig};
use crate::error::{BackendError, ConfigError, SpatialError};
use crate::ingest;
use crate::meo::UNMAPPED_MEO;
use crate::planner::{self, plan_durations, Narrative, Repair, ScheduledActivity};
use crate::reflect::{self, apply_decision, should_rethink, Action, DecisionLogEntry};
use crate::rng::RngStream;
use crate::spatial::{
    available_modes, candidate_pois, category_map::HOME, choose_mode, gravity_probabilities, prism_feasible,
    random_mode, sample_destination, ModeSource, Poi, PoiDatabase, Trip,
};
use crate::time::TimeOfDay;
use crate::types::{
    ActivityCategory, ActivityPlan, AgentState, MemoryEvent, MemoryKind, PersonProfile, Place, PlannedActivity,
    Trajectory, TrajectoryRecord, TransportMode, Vocabulary, SLEEP,
};

/// The five configurations compared in the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Full,
    RandomPlan,
    DirectPlan,
    RandomMode,
    NoRethinking,
}

impl Ablation {
    pub const ALL: [Ablation; 5] =
        [Ablation::Full, Ablation::RandomPlan, Ablation::DirectPlan, Ablation::RandomMode, Ablation::NoRethinking];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::RandomPlan => "random-plan",
            Ablation::DirectPlan => "direct-plan",
            Ablation::RandomMode => "random-mode",
            Ablation::NoRethinking => "no-rethinking",
        }
    }

    /// Sets the three switches; everything else is left alone.
    pub fn apply(self, config: &mut SimulationConfig) {
        config.plan_source = match self {
            Ablation::RandomPlan => PlanSource::Random,
            Ablation::DirectPlan => PlanSource::DirectLlm,
            _ => PlanSource::NarrativeParsing,
        };
        config.mode_choice = if self == Ablation::RandomMode { ModePolicy::Random } else { ModePolicy::Llm };
        config.rethinking_enabled = self != Ablation::NoRethinking;
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| format!("unknown ablation {s:?}"))
    }
}

/// Read-only world shared by every agent.
pub struct Environment {
    pub config: SimulationConfig,
    pub db: PoiDatabase,
    pub templates: TemplateSet,
    pub backend: Arc<dyn TextBackend>,
    /// Input file digests, recorded in the manifest.
    pub input_digests: BTreeMap<String, String>,
}

impl Environment {
    pub fn new(
        config: SimulationConfig,
        db: PoiDatabase,
        templates: TemplateSet,
        backend: Arc<dyn TextBackend>,
    ) -> Self {
        Self { config, db, templates, backend, input_digests: BTreeMap::new() }
    }

    /// Loads the POIs, templates and backend named by the config.
    pub fn load(config: SimulationConfig) -> Result<Self, ConfigError> {
        let db = PoiDatabase::load(&config.pois)?;
        let templates = match &config.templates_dir {
            Some(dir) => TemplateSet::with_overrides(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?,
            None => TemplateSet::builtin(),
        };
        let backend = config.backend.build()?;
        let mut digests = BTreeMap::new();
        digests.insert("profiles".to_string(), config::file_digest(&config.profiles)?);
        digests.insert("pois".to_string(), config::file_digest(&config.pois)?);
        if let crate::backend::BackendKind::Mock { script } = &config.backend {
            digests.insert("mock_script".to_string(), config::file_digest(script)?);
        }
        let mut env = Self::new(config, db, templates, backend);
        env.input_digests = digests;
        Ok(env)
    }

    /// Gives occupations missing from the MEO table the middle band.
    pub fn register_occupations(&mut self, profiles: &[PersonProfile]) {
        for p in profiles {
            if !self.config.meo_table.contains(&p.occupation) {
                log::warn!("occupation {:?} has no MEO value; using {UNMAPPED_MEO}", p.occupation.as_str());
                self.config.meo_table.insert(p.occupation.clone(), UNMAPPED_MEO).expect("constant lies in [0, 1]");
            }
        }
    }
}

/// Counts calls per template for one agent.
struct CallCounter<'a> {
    inner: &'a dyn TextBackend,
    counts: Mutex<BTreeMap<String, usize>>,
}

impl TextBackend for CallCounter<'_> {
    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<String, BackendError> {
        *self.counts.lock().expect("counter lock").entry(prompt.template.clone()).or_default() += 1;
        self.inner.complete(prompt, params)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// Something the engine had to work around while executing a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExecutionNote {
    /// No POI could be found; the agent stayed where it was.
    GroundingFailed { node: usize, activity: ActivityCategory, reason: String },
    /// No mode could make the trip in time; the fastest one was used and
    /// the activity started late.
    PrismRepair { node: usize, distance_m: f64, mode: TransportMode },
    /// Travel consumed the whole activity.
    Collapsed { node: usize, activity: ActivityCategory },
    /// The node's time had already passed when it came up.
    Skipped { node: usize, activity: ActivityCategory },
    /// A trip would not finish before midnight; the agent stayed put.
    DayEnd { node: usize },
}

/// How the agent's plan was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub agent_id: String,
    pub day: u32,
    pub source: PlanSource,
    pub plan: ActivityPlan,
    #[serde(default)]
    pub repairs: Vec<Repair>,
    #[serde(default)]
    pub reprompted: bool,
    /// Set when the occupation-default plan replaced a failed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// Everything one agent-day produced.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentRun {
    pub trajectory: Trajectory,
    pub narrative: Option<Narrative>,
    pub plan: PlanRecord,
    pub decisions: Vec<DecisionLogEntry>,
    pub notes: Vec<ExecutionNote>,
    pub calls: BTreeMap<String, usize>,
}

/// Sleep at midnight followed by 3 to 8 uniformly drawn activities at
/// uniformly drawn grid times.
pub fn random_plan(
    rng: &mut RngStream,
    categories: &Vocabulary,
    poi_map: &crate::spatial::ActivityPoiMap,
) -> ActivityPlan {
    let sleep = categories.lookup(SLEEP).cloned().unwrap_or_else(|| ActivityCategory::new(SLEEP));
    let n = rng.int_inclusive(3, 8);
    let mut drawn: Vec<(TimeOfDay, ActivityCategory)> = (0..n)
        .map(|_| {
            let c = categories.get(rng.index(categories.len())).cloned().unwrap_or_else(|| sleep.clone());
            let t = TimeOfDay::from_slot(rng.int_inclusive(1, u32::from(TimeOfDay::LAST_SLOT.slot())) as u8)
                .expect("slot in range");
            (t, c)
        })
        .collect();
    drawn.sort_by_key(|(t, _)| *t);
    let mut activities = vec![PlannedActivity {
        location_category: poi_map.poi_category(&sleep),
        intention: sleep,
        start: TimeOfDay::MIDNIGHT,
        description: String::new(),
    }];
    activities.extend(drawn.into_iter().map(|(start, intention)| PlannedActivity {
        location_category: poi_map.poi_category(&intention),
        intention,
        start,
        description: String::new(),
    }));
    ActivityPlan::new(activities).expect("random plan is well formed")
}

fn obtain_plan(
    profile: &PersonProfile,
    day: u32,
    env: &Environment,
    backend: &dyn TextBackend,
    rng: &mut RngStream,
) -> (Option<Narrative>, PlanRecord) {
    let cfg = &env.config;
    let (vocab, poi_map, params) = (&cfg.categories, &cfg.activity_poi_map, &cfg.generation);
    let mut narrative = None;
    let report = match cfg.plan_source {
        PlanSource::Random => {
            let plan = random_plan(rng, vocab, poi_map);
            return (
                None,
                PlanRecord {
                    agent_id: profile.id.clone(),
                    day,
                    source: cfg.plan_source,
                    plan,
                    repairs: vec![],
                    reprompted: false,
                    fallback: None,
                },
            );
        }
        PlanSource::NarrativeParsing => {
            planner::generate_narrative(profile, &env.templates, backend, params).and_then(|n| {
                let r = planner::parse_plan(&n, vocab, poi_map, &env.templates, backend, params);
                narrative = Some(n);
                r
            })
        }
        PlanSource::DirectLlm => planner::direct_plan(profile, vocab, poi_map, &env.templates, backend, params),
    };
    let fallback = |reason: String| {
        log::warn!("agent {}: {reason}; using the default plan", profile.id);
        PlanRecord {
            agent_id: profile.id.clone(),
            day,
            source: cfg.plan_source,
            plan: planner::fallback_plan(profile, vocab, poi_map),
            repairs: vec![],
            reprompted: false,
            fallback: Some(reason),
        }
    };
    let record = match report {
        Ok(r) => match (r.plan, r.rejected) {
            (Some(plan), None) => PlanRecord {
                agent_id: profile.id.clone(),
                day,
                source: cfg.plan_source,
                plan,
                repairs: r.repairs,
                reprompted: r.reprompted,
                fallback: None,
            },
            (_, reason) => fallback(format!("plan rejected: {}", reason.unwrap_or_default())),
        },
        Err(e) => fallback(format!("planning failed: {e}")),
    };
    (narrative, record)
}

/// Where an activity happens: home and work anchors first, otherwise a
/// gravity draw among POIs reachable before the activity ends.
fn ground<'a>(
    node: &ScheduledActivity,
    now: TimeOfDay,
    here: &Place,
    profile: &PersonProfile,
    env: &'a Environment,
    rng: &mut RngStream,
) -> Result<&'a Poi, SpatialError> {
    let cfg = &env.config;
    let activity = &node.activity;
    let poi_category = if activity.location_category.is_empty() {
        cfg.activity_poi_map.poi_category(&activity.intention)
    } else {
        activity.location_category.clone()
    };
    if activity.intention.as_str() == "work_study" {
        if let Some(work) = &profile.work_poi {
            return env.db.resolve(work);
        }
    }
    if poi_category == HOME {
        return env.db.resolve(&profile.home_poi);
    }
    let candidates = candidate_pois(&env.db, &poi_category, here.point, &cfg.gravity)?;
    let permitted = TransportMode::permitted(profile.owns_car, profile.owns_ebike);
    let reachable: Vec<_> = candidates
        .iter()
        .filter(|c| prism_feasible(here.point, c.poi.location, now, node.end, &cfg.mode_speeds, &permitted))
        .cloned()
        .collect();
    let pool = if reachable.is_empty() { candidates } else { reachable };
    let probs = gravity_probabilities(&pool, &cfg.gravity)?;
    Ok(sample_destination(&probs, &pool, rng))
}

fn memory(state: &mut AgentState, time: TimeOfDay, kind: MemoryKind, summary: String) {
    state.remember(MemoryEvent { time, kind, summary });
}

/// Result of carrying out a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub trajectory: Trajectory,
    pub decisions: Vec<DecisionLogEntry>,
    pub notes: Vec<ExecutionNote>,
}

/// Runs one agent through one day: plan, then rethink, ground and move at
/// every node.
pub fn simulate_agent(profile: &PersonProfile, day: u32, env: &Environment) -> crate::Result<AgentRun> {
    run_agent(profile, day, env, Stage::Full)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Stop once the plan exists.
    PlanOnly,
    Full,
}

fn run_agent(profile: &PersonProfile, day: u32, env: &Environment, stage: Stage) -> crate::Result<AgentRun> {
    let counter = CallCounter { inner: env.backend.as_ref(), counts: Mutex::new(BTreeMap::new()) };
    let mut rng = RngStream::new(env.config.seed, &profile.id, day);
    env.db.resolve(&profile.home_poi)?;
    let (narrative, plan) = obtain_plan(profile, day, env, &counter, &mut rng);
    let exec = match stage {
        Stage::Full => execute_plan(profile, day, &plan.plan, env, &counter, &mut rng)?,
        Stage::PlanOnly => Execution {
            trajectory: Trajectory { agent_id: profile.id.clone(), day, records: vec![] },
            decisions: vec![],
            notes: vec![],
        },
    };
    let calls = counter.counts.into_inner().expect("counter lock");
    Ok(AgentRun { trajectory: exec.trajectory, narrative, plan, decisions: exec.decisions, notes: exec.notes, calls })
}

/// Carries out `plan` from midnight at home.
pub fn execute_plan(
    profile: &PersonProfile,
    day: u32,
    plan: &ActivityPlan,
    env: &Environment,
    backend: &dyn TextBackend,
    rng: &mut RngStream,
) -> crate::Result<Execution> {
    let cfg = &env.config;
    let home = env.db.resolve(&profile.home_poi)?;
    let mut items = plan_durations(plan, TimeOfDay::DAY_END).items;
    let mut state = AgentState::new(profile.home_poi.clone(), cfg.memory_cap);
    let mut place = home.place();
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let mut decisions = Vec::new();
    let mut notes = Vec::new();
    let permitted = TransportMode::permitted(profile.owns_car, profile.owns_ebike);

    let mut i = 0;
    while i < items.len() {
        let now = records.last().map_or(TimeOfDay::MIDNIGHT, |r| r.end);
        state.now = now;
        state.plan_cursor = i;
        if i > 0 && cfg.rethinking_enabled && should_rethink(&profile.occupation, &cfg.meo_table, rng) {
            let d =
                reflect::rethink(&state, &items[i], profile, &cfg.categories, &env.templates, backend, &cfg.generation);
            let kind = if d.failed { MemoryKind::RethoughtFailed } else { MemoryKind::Rethought };
            let summary = match (&d.action, &d.new_activity) {
                (Action::Change, Some(a)) => format!("changed {} to {}", items[i].activity.intention, a),
                _ => format!("kept {}", items[i].activity.intention),
            };
            memory(&mut state, now, kind, summary);
            decisions.push(DecisionLogEntry {
                agent_id: profile.id.clone(),
                day,
                time: now,
                node: i,
                planned: items[i].activity.intention.clone(),
                decision: d.clone(),
            });
            items = apply_decision(&items, i, &d, &cfg.activity_poi_map);
        }
        let node = items[i].clone();
        if now >= node.end {
            notes.push(ExecutionNote::Skipped { node: i, activity: node.activity.intention.clone() });
            i += 1;
            continue;
        }

        let target = if records.is_empty() { Ok(home) } else { ground(&node, now, &place, profile, env, rng) };
        let dest = match target {
            Ok(poi) => poi.place(),
            Err(e) => {
                log::info!("agent {}: node {i} not grounded: {e}", profile.id);
                notes.push(ExecutionNote::GroundingFailed {
                    node: i,
                    activity: node.activity.intention.clone(),
                    reason: e.to_string(),
                });
                place.clone()
            }
        };

        let (mode, arrive) = if dest.poi_id == place.poi_id {
            (None, now)
        } else {
            let poi = env.db.resolve(&dest.poi_id)?;
            let trip = Trip { from: &place, to: poi, depart: now, deadline: node.end };
            let distance = trip.distance_m();
            let chosen = match cfg.mode_choice {
                ModePolicy::Random => random_mode(&available_modes(&trip, profile, &cfg.mode_speeds), rng),
                ModePolicy::Llm => {
                    match choose_mode(
                        &trip,
                        &node.activity.intention,
                        profile,
                        &cfg.mode_speeds,
                        &env.templates,
                        backend,
                        &cfg.generation,
                    ) {
                        Ok(c) => {
                            if c.source == ModeSource::Fallback {
                                log::debug!("agent {}: mode reply unusable ({})", profile.id, c.reasoning);
                            }
                            Some(c.mode)
                        }
                        Err(_) => None,
                    }
                }
            };
            let mode = chosen.unwrap_or_else(|| {
                let m = cfg.mode_speeds.fastest(&permitted).expect("walking is always permitted");
                notes.push(ExecutionNote::PrismRepair { node: i, distance_m: distance, mode: m });
                m
            });
            let slots = cfg.mode_speeds.travel_slots(distance, mode).max(1);
            if u32::from(now.slot()) + slots > u32::from(TimeOfDay::DAY_END.slot()) {
                notes.push(ExecutionNote::DayEnd { node: i });
                break;
            }
            memory(&mut state, now, MemoryKind::Traveled, format!("went to {} by {}", poi.name, mode.display_name()));
            (Some(mode), now.saturating_add(slots))
        };
        if mode.is_some() && arrive >= node.end {
            notes.push(ExecutionNote::Collapsed { node: i, activity: node.activity.intention.clone() });
        }
        let end = node.end.max(arrive);
        records.push(TrajectoryRecord {
            activity: node.activity.clone(),
            place: dest.clone(),
            mode,
            start: now,
            arrive,
            end,
        });
        memory(&mut state, arrive, MemoryKind::Executed, format!("{} at {}", node.activity.intention, dest.poi_id));
        state.current_location = dest.poi_id.clone();
        state.last_activity = Some(node.activity.clone());
        place = dest;
        i += 1;
    }
    if let Some(last) = records.last_mut() {
        last.end = TimeOfDay::DAY_END;
    }
    Ok(Execution { trajectory: Trajectory { agent_id: profile.id.clone(), day, records }, decisions, notes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentFailure {
    pub agent_id: String,
    pub day: u32,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentFallback {
    pub agent_id: String,
    pub day: u32,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: u64,
    pub mean_agent_ms: f64,
}

/// Enough to reproduce a run and check it was reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_digest: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Ablation>,
    pub plan_source: PlanSource,
    pub mode_choice: ModePolicy,
    pub rethinking_enabled: bool,
    pub input_digests: BTreeMap<String, String>,
    pub agents: usize,
    pub days: u32,
    pub trajectories: usize,
    pub failures: Vec<AgentFailure>,
    pub fallbacks: Vec<AgentFallback>,
    pub change_decisions: usize,
    pub backend_calls: BTreeMap<String, usize>,
    pub notes: BTreeMap<String, usize>,
    pub timings: Timings,
    /// SHA-256 of this manifest with timings zeroed and this field empty.
    pub manifest_hash: String,
}

impl RunManifest {
    pub fn compute_hash(&self) -> String {
        let mut m = self.clone();
        m.timings = Timings::default();
        m.manifest_hash.clear();
        config::hex(&Sha256::digest(serde_json::to_vec(&m).expect("manifest serializes")))
    }
}

/// Outputs of a population run, ordered by (agent id, day).
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub trajectories: Vec<Trajectory>,
    pub narratives: Vec<Narrative>,
    pub plans: Vec<PlanRecord>,
    pub decisions: Vec<DecisionLogEntry>,
    pub notes: Vec<(String, u32, ExecutionNote)>,
    pub manifest: RunManifest,
}

fn note_kind(n: &ExecutionNote) -> &'static str {
    match n {
        ExecutionNote::GroundingFailed { .. } => "grounding-failed",
        ExecutionNote::PrismRepair { .. } => "prism-repair",
        ExecutionNote::Collapsed { .. } => "collapsed",
        ExecutionNote::Skipped { .. } => "skipped",
        ExecutionNote::DayEnd { .. } => "day-end",
    }
}

/// Simulates every profile for every configured day in parallel. A failing
/// agent is recorded in the manifest and never stops the run.
pub fn simulate_population(profiles: &[PersonProfile], env: &Environment, ablation: Option<Ablation>) -> RunArtifacts {
    run_population(profiles, env, ablation, Stage::Full)
}

/// Narratives and plans only; no trajectories.
pub fn plan_population(profiles: &[PersonProfile], env: &Environment, ablation: Option<Ablation>) -> RunArtifacts {
    run_population(profiles, env, ablation, Stage::PlanOnly)
}

fn run_population(
    profiles: &[PersonProfile],
    env: &Environment,
    ablation: Option<Ablation>,
    stage: Stage,
) -> RunArtifacts {
    let started = Instant::now();
    let jobs: Vec<(&PersonProfile, u32)> =
        profiles.iter().flat_map(|p| (0..env.config.day_count).map(move |d| (p, d))).collect();
    let mut results: Vec<(String, u32, Result<AgentRun, String>, f64)> = jobs
        .par_iter()
        .map(|(p, day)| {
            let t = Instant::now();
            let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_agent(p, *day, env, stage)))
                .map_err(|panic| {
                    panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into())
                })
                .and_then(|r| r.map_err(|e| e.to_string()));
            (p.id.clone(), *day, r, t.elapsed().as_secs_f64() * 1000.0)
        })
        .collect();
    results.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    let mut out = RunArtifacts {
        trajectories: vec![],
        narratives: vec![],
        plans: vec![],
        decisions: vec![],
        notes: vec![],
        manifest: RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: env.config.digest(),
            seed: env.config.seed,
            ablation,
            plan_source: env.config.plan_source,
            mode_choice: env.config.mode_choice,
            rethinking_enabled: env.config.rethinking_enabled,
            input_digests: env.input_digests.clone(),
            agents: profiles.len(),
            days: env.config.day_count,
            trajectories: 0,
            failures: vec![],
            fallbacks: vec![],
            change_decisions: 0,
            backend_calls: BTreeMap::new(),
            notes: BTreeMap::new(),
            timings: Timings::default(),
            manifest_hash: String::new(),
        },
    };
    let mut agent_ms = 0.0;
    let m = &mut out.manifest;
    for (agent_id, day, r, ms) in results {
        agent_ms += ms;
        let run = match r {
            Ok(run) => run,
            Err(error) => {
                log::error!("agent {agent_id} day {day} failed: {error}");
                m.failures.push(AgentFailure { agent_id, day, error });
                continue;
            }
        };
        if let Some(reason) = &run.plan.fallback {
            m.fallbacks.push(AgentFallback { agent_id: agent_id.clone(), day, reason: reason.clone() });
        }
        m.change_decisions += run.decisions.iter().filter(|d| d.decision.action == Action::Change).count();
        for (t, n) in &run.calls {
            *m.backend_calls.entry(t.clone()).or_default() += n;
        }
        for n in &run.notes {
            *m.notes.entry(note_kind(n).to_string()).or_default() += 1;
        }
        if stage == Stage::Full {
            out.trajectories.push(run.trajectory);
        }
        out.narratives.extend(run.narrative);
        out.plans.push(run.plan);
        out.decisions.extend(run.decisions);
        out.notes.extend(run.notes.into_iter().map(|n| (agent_id.clone(), day, n)));
    }
    m.trajectories = out.trajectories.len();
    let jobs = jobs.len().max(1) as f64;
    m.timings = Timings { total_ms: started.elapsed().as_millis() as u64, mean_agent_ms: agent_ms / jobs };
    m.manifest_hash = m.compute_hash();
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| ConfigError::parse(path, format!("line {}: {e}", i + 1))))
        .collect()
}

#[derive(Serialize)]
struct NoteLine<'a> {
    agent_id: &'a str,
    day: u32,
    #[serde(flatten)]
    note: &'a ExecutionNote,
}

impl RunArtifacts {
    /// Writes trajectories, narratives, plans, decisions, notes and the
    /// manifest into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_jsonl(&dir.join("trajectories.jsonl"), &self.trajectories)?;
        write_jsonl(&dir.join("narratives.jsonl"), &self.narratives)?;
        write_jsonl(&dir.join("plans.jsonl"), &self.plans)?;
        write_jsonl(&dir.join("decisions.jsonl"), &self.decisions)?;
        let notes: Vec<_> = self.notes.iter().map(|(a, d, n)| NoteLine { agent_id: a, day: *d, note: n }).collect();
        write_jsonl(&dir.join("notes.jsonl"), &notes)?;
        let manifest = serde_json::to_string_pretty(&self.manifest).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("manifest.json"), manifest + "\n")
    }
}

/// Loads a trajectory population written by [`RunArtifacts::write`], or a
/// diary file, telling them apart by their fields.
pub fn load_population(
    path: &Path,
    vocab: &Vocabulary,
    db: Option<&PoiDatabase>,
) -> Result<Vec<Trajectory>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
    let first =
        text.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| ConfigError::parse(path, "no trajectories"))?;
    let value: serde_json::Value =
        serde_json::from_str(first).map_err(|e| ConfigError::parse(path, format!("line 1: {e}")))?;
    if value.get("entries").is_some() {
        let (diaries, report) = ingest::ingest_diary_text(&text, vocab, db);
        if !report.rejected.is_empty() {
            log::warn!("{}: {} of {} diaries rejected", path.display(), report.rejected.len(), report.input);
        }
        return Ok(diaries.iter().map(|d| d.to_trajectory()).collect());
    }
    read_jsonl(path)
}
