//! Seeded episodes between two agents and repeated runs of a matchup.
//!
//! Randomness: every run owns a ChaCha8 generator seeded from the run seed.
//! Stream 0 draws the fictitious initial joint action, stream 1 drives
//! player M and stream 2 drives player O, so the two agents never share
//! draws and adding log options never shifts the sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{extrinsic_rewards, Action, GameKind, JointAction, Points};
use crate::moral::{gini_pair, intrinsic_reward, MoralFramework, RewardContext};
use crate::qlearn::{epsilon_at, greedy_policy, Learner, LearnerParams, ObservedState, Policy, QTable, VisitCounts};
use crate::scalar::Scalar;
use crate::strategy::{static_action, StaticStrategy};

/// Name of the generator behind every run, recorded in result provenance.
pub const PRNG_ID: &str = "ChaCha8Rng(rand_chacha 0.3); run seed = splitmix64 mix of (base_seed, run index)";

const INIT_STREAM: u64 = 0;
const M_STREAM: u64 = 1;
const O_STREAM: u64 = 2;

/// Number of final steps always retained in full.
pub const DEFAULT_TAIL: usize = 20;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` within a matchup started from `base_seed`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AgentSpec<F> {
    Learner(LearnerParams<F>),
    Static(StaticStrategy),
}

impl<F: Scalar> AgentSpec<F> {
    pub fn learner(framework: MoralFramework<F>) -> Self {
        AgentSpec::Learner(LearnerParams::new(framework))
    }

    pub fn label(&self) -> String {
        match self {
            AgentSpec::Learner(p) => p.framework.label(),
            AgentSpec::Static(s) => s.code().to_string(),
        }
    }

    pub fn framework(&self) -> Option<&MoralFramework<F>> {
        match self {
            AgentSpec::Learner(p) => Some(&p.framework),
            AgentSpec::Static(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AgentSpec::Learner(p) => p.validate(),
            AgentSpec::Static(_) => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<F> {
    pub t: usize,
    pub state_m: ObservedState,
    pub state_o: ObservedState,
    pub a_m: Action,
    pub a_o: Action,
    pub r_m_extr: Points,
    pub r_o_extr: Points,
    /// Intrinsic rewards; a static agent's equals its extrinsic payoff.
    pub r_m_intr: F,
    pub r_o_intr: F,
    /// Exploration rates in force for each player (zero for static agents).
    pub eps_m: F,
    pub eps_o: F,
}

impl<F> StepRecord<F> {
    pub fn joint(&self) -> JointAction {
        JointAction::new(self.a_m, self.a_o)
    }
}

/// Running totals over a whole episode; social metrics use extrinsic payoffs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cumulative<F> {
    pub collective: F,
    pub gini: F,
    pub min: F,
    pub r_m_extr: F,
    pub r_o_extr: F,
    pub r_m_intr: F,
    pub r_o_intr: F,
}

impl<F: Scalar> Default for Cumulative<F> {
    fn default() -> Self {
        let z = F::zero();
        Cumulative { collective: z, gini: z, min: z, r_m_extr: z, r_o_extr: z, r_m_intr: z, r_o_intr: z }
    }
}

impl<F: Scalar> Cumulative<F> {
    fn add(&mut self, step: &StepRecord<F>) -> Result<()> {
        let rm = F::from_points(step.r_m_extr);
        let ro = F::from_points(step.r_o_extr);
        self.collective = self.collective + rm + ro;
        self.gini = self.gini + gini_pair(rm, ro)?;
        self.min = self.min + rm.min_of(ro);
        self.r_m_extr = self.r_m_extr + rm;
        self.r_o_extr = self.r_o_extr + ro;
        self.r_m_intr = self.r_m_intr + step.r_m_intr;
        self.r_o_intr = self.r_o_intr + step.r_o_intr;
        Ok(())
    }
}

/// Which steps an episode keeps in its log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogOptions {
    /// Keep every `every`-th step (`t % every == 0`); 1 keeps all.
    pub every: usize,
    /// The last `tail` steps are always kept.
    pub tail: usize,
}

impl Default for LogOptions {
    fn default() -> Self {
        LogOptions { every: 1, tail: DEFAULT_TAIL }
    }
}

impl LogOptions {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn thinned(every: usize) -> Self {
        LogOptions { every: every.max(1), tail: DEFAULT_TAIL }
    }

    /// Only the trailing steps.
    pub fn tail_only(tail: usize) -> Self {
        LogOptions { every: usize::MAX, tail }
    }

    fn keeps(&self, t: usize, total: usize) -> bool {
        t.is_multiple_of(self.every) || t + self.tail >= total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult<F> {
    pub game: GameKind,
    pub seed: u64,
    pub iterations: usize,
    pub spec_m: AgentSpec<F>,
    pub spec_o: AgentSpec<F>,
    pub initial_joint: JointAction,
    /// Logged steps in chronological order; complete when `log_every == 1`.
    pub steps: Vec<StepRecord<F>>,
    pub log_every: usize,
    /// Length of the contiguous run of steps that ends at the last iteration.
    pub full_tail: usize,
    pub final_pair: JointAction,
    pub cumulative: Cumulative<F>,
    #[serde(skip)]
    pub final_q_m: Option<QTable<F>>,
    #[serde(skip)]
    pub final_q_o: Option<QTable<F>>,
    #[serde(skip)]
    pub visits_m: Option<VisitCounts>,
    #[serde(skip)]
    pub visits_o: Option<VisitCounts>,
}

impl<F: Scalar> EpisodeResult<F> {
    pub fn is_complete_log(&self) -> bool {
        self.steps.len() == self.iterations
    }

    /// M's greedy policy over the states where it tried both actions.
    pub fn resolved_policy_m(&self) -> Option<Policy> {
        Some(greedy_policy(self.final_q_m.as_ref()?).restricted_to_resolved(self.visits_m.as_ref()?))
    }

    pub fn resolved_policy_o(&self) -> Option<Policy> {
        Some(greedy_policy(self.final_q_o.as_ref()?).restricted_to_resolved(self.visits_o.as_ref()?))
    }

    /// The trailing steps that are logged without gaps.
    pub fn contiguous_tail(&self) -> &[StepRecord<F>] {
        &self.steps[self.steps.len() - self.full_tail..]
    }
}

enum Agent<F> {
    Learner(Learner<F>),
    Static(StaticStrategy),
}

impl<F: Scalar> Agent<F> {
    fn from_spec(spec: &AgentSpec<F>) -> Self {
        match spec {
            AgentSpec::Learner(p) => Agent::Learner(Learner::new(*p)),
            AgentSpec::Static(s) => Agent::Static(*s),
        }
    }

    fn epsilon(&self, t: usize, total: usize) -> Result<F> {
        match self {
            Agent::Learner(l) => epsilon_at(&l.params.schedule, t, total),
            Agent::Static(_) => Ok(F::zero()),
        }
    }

    fn act(&self, state: ObservedState, eps: F, rng: &mut ChaCha8Rng) -> Action {
        match self {
            Agent::Learner(l) => l.act(state, eps, rng),
            Agent::Static(s) => static_action(*s, state.opp_prev, rng),
        }
    }

    fn reward(&self, ctx: &RewardContext) -> Result<F> {
        match self {
            Agent::Learner(l) => intrinsic_reward(&l.params.framework, ctx),
            Agent::Static(_) => Ok(F::from_points(ctx.self_payoff)),
        }
    }

    fn learn(&mut self, s: ObservedState, a: Action, reward: F, s_next: ObservedState) {
        if let Agent::Learner(l) = self {
            l.learn(s, a, reward, s_next);
        }
    }

    fn into_parts(self) -> (Option<QTable<F>>, Option<VisitCounts>) {
        match self {
            Agent::Learner(l) => (Some(l.q), Some(l.visits)),
            Agent::Static(_) => (None, None),
        }
    }
}

/// Runs one episode of `iterations` simultaneous moves with a full step log.
pub fn run_episode<F: Scalar>(
    spec_m: &AgentSpec<F>,
    spec_o: &AgentSpec<F>,
    game: GameKind,
    iterations: usize,
    seed: u64,
) -> Result<EpisodeResult<F>> {
    run_episode_logged(spec_m, spec_o, game, iterations, seed, LogOptions::full())
}

pub fn run_episode_logged<F: Scalar>(
    spec_m: &AgentSpec<F>,
    spec_o: &AgentSpec<F>,
    game: GameKind,
    iterations: usize,
    seed: u64,
    log: LogOptions,
) -> Result<EpisodeResult<F>> {
    simulate(spec_m, spec_o, game, iterations, seed, log, false)
}

fn simulate<F: Scalar>(
    spec_m: &AgentSpec<F>,
    spec_o: &AgentSpec<F>,
    game: GameKind,
    iterations: usize,
    seed: u64,
    log: LogOptions,
    update_o_first: bool,
) -> Result<EpisodeResult<F>> {
    if iterations < 2 {
        return Err(Error::Config(format!("an episode needs at least 2 iterations, got {iterations}")));
    }
    spec_m.validate()?;
    spec_o.validate()?;

    let mut init_rng = stream_rng(seed, INIT_STREAM);
    let mut rng_m = stream_rng(seed, M_STREAM);
    let mut rng_o = stream_rng(seed, O_STREAM);

    let initial_joint = JointAction::ALL[rand::Rng::gen_range(&mut init_rng, 0..4)];
    let mut state_m = ObservedState::for_m(initial_joint);
    let mut state_o = ObservedState::for_o(initial_joint);

    let mut agent_m = Agent::from_spec(spec_m);
    let mut agent_o = Agent::from_spec(spec_o);

    let log = LogOptions { every: log.every.max(1), tail: log.tail.min(iterations) };
    let capacity = if log.every == 1 { iterations } else { iterations / log.every + log.tail + 1 };
    let mut steps = Vec::with_capacity(capacity);
    let mut cumulative = Cumulative::default();
    let mut last = None;

    for t in 0..iterations {
        let eps_m = agent_m.epsilon(t, iterations)?;
        let eps_o = agent_o.epsilon(t, iterations)?;
        let a_m = agent_m.act(state_m, eps_m, &mut rng_m);
        let a_o = agent_o.act(state_o, eps_o, &mut rng_o);
        let joint = JointAction::new(a_m, a_o);
        let (r_m_extr, r_o_extr) = extrinsic_rewards(game, joint);

        let r_m_intr = agent_m.reward(&RewardContext {
            prev_opponent_action: state_m.opp_prev,
            own_action: a_m,
            self_payoff: r_m_extr,
            opponent_payoff: r_o_extr,
        })?;
        let r_o_intr = agent_o.reward(&RewardContext {
            prev_opponent_action: state_o.opp_prev,
            own_action: a_o,
            self_payoff: r_o_extr,
            opponent_payoff: r_m_extr,
        })?;

        let next_m = ObservedState::for_m(joint);
        let next_o = ObservedState::for_o(joint);
        if update_o_first {
            agent_o.learn(state_o, a_o, r_o_intr, next_o);
            agent_m.learn(state_m, a_m, r_m_intr, next_m);
        } else {
            agent_m.learn(state_m, a_m, r_m_intr, next_m);
            agent_o.learn(state_o, a_o, r_o_intr, next_o);
        }

        let record = StepRecord { t, state_m, state_o, a_m, a_o, r_m_extr, r_o_extr, r_m_intr, r_o_intr, eps_m, eps_o };
        cumulative.add(&record)?;
        if log.keeps(t, iterations) {
            steps.push(record);
        }
        last = Some(joint);
        state_m = next_m;
        state_o = next_o;
    }

    let (final_q_m, visits_m) = agent_m.into_parts();
    let (final_q_o, visits_o) = agent_o.into_parts();
    let full_tail = if log.every == 1 { steps.len() } else { log.tail };
    Ok(EpisodeResult {
        game,
        seed,
        iterations,
        spec_m: *spec_m,
        spec_o: *spec_o,
        initial_joint,
        steps,
        log_every: log.every,
        full_tail,
        final_pair: last.expect("at least two iterations"),
        cumulative,
        final_q_m,
        final_q_o,
        visits_m,
        visits_o,
    })
}

/// `n_runs` independent episodes; run `i` uses `derive_seed(base_seed, i)`.
///
/// Runs execute on the current rayon pool and come back in run order.
pub fn run_matchup<F: Scalar>(
    spec_m: &AgentSpec<F>,
    spec_o: &AgentSpec<F>,
    game: GameKind,
    iterations: usize,
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<EpisodeResult<F>>> {
    run_matchup_logged(spec_m, spec_o, game, iterations, n_runs, base_seed, LogOptions::full())
}

pub fn run_matchup_logged<F: Scalar>(
    spec_m: &AgentSpec<F>,
    spec_o: &AgentSpec<F>,
    game: GameKind,
    iterations: usize,
    n_runs: usize,
    base_seed: u64,
    log: LogOptions,
) -> Result<Vec<EpisodeResult<F>>> {
    if n_runs == 0 {
        return Err(Error::Config("a matchup needs at least one run".into()));
    }
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| run_episode_logged(spec_m, spec_o, game, iterations, derive_seed(base_seed, i), log))
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
