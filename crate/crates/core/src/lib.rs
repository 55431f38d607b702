//! Tabular Q-learning agents with intrinsic moral rewards playing iterated
//! two-player social dilemmas.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix the
//! common choices. Simulation and reporting use `f64`.

pub mod analytics;
pub mod episode;
pub mod error;
pub mod experiment;
pub mod game;
pub mod moral;
pub mod qlearn;
pub mod scalar;
pub mod strategy;

pub use analytics::{
    classify_final_pair, collective_return, gini_return, last_k_trace, min_return, oracle_best_response,
    summarize_matchup, Estimate, MatchupSummary, OracleSolution, Outcomes, PairClass, Trace,
};
pub use episode::{
    derive_seed, run_episode, run_episode_logged, run_matchup, run_matchup_logged, with_workers, AgentSpec, Cumulative,
    EpisodeResult, LogOptions, StepRecord,
};
pub use error::{Error, Result};
pub use game::{extrinsic_rewards, payoff_matrix, Action, GameKind, JointAction, PayoffMatrix, Points};
pub use moral::{gini_pair, intrinsic_reward, MoralFramework, RewardContext};
pub use qlearn::{
    epsilon_at, greedy_policy, q_update, select_action, Choice, ExplorationSchedule, Learner, LearnerParams,
    ObservedState, Policy, QTable, VisitCounts,
};
pub use scalar::Scalar;
pub use strategy::{static_action, StaticStrategy};

/// Exact rational scalar for bit-exact reward arithmetic.
pub type Exact = num_rational::Rational64;

pub type QTable64 = QTable<f64>;
pub type QTable32 = QTable<f32>;
pub type QTableExact = QTable<Exact>;

pub type Framework64 = MoralFramework<f64>;
pub type Framework32 = MoralFramework<f32>;
pub type FrameworkExact = MoralFramework<Exact>;

pub type LearnerParams64 = LearnerParams<f64>;
pub type LearnerParams32 = LearnerParams<f32>;
pub type Schedule64 = ExplorationSchedule<f64>;

pub type AgentSpec64 = AgentSpec<f64>;
pub type AgentSpec32 = AgentSpec<f32>;
pub type EpisodeResult64 = EpisodeResult<f64>;
pub type EpisodeResult32 = EpisodeResult<f32>;
pub type StepRecord64 = StepRecord<f64>;
