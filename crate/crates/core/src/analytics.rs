//! Social-outcome metrics, run summaries, traces and a best-response oracle.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeResult, StepRecord};
use crate::error::{Error, Result};
use crate::game::{extrinsic_rewards, Action, GameKind, JointAction};
use crate::moral::{gini_pair, intrinsic_reward, MoralFramework, RewardContext};
use crate::qlearn::{Choice, ObservedState, Policy, QTable};
use crate::scalar::Scalar;
use crate::strategy::StaticStrategy;

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

fn non_empty<F>(steps: &[StepRecord<F>]) -> Result<&[StepRecord<F>]> {
    if steps.is_empty() {
        Err(Error::Empty("step log"))
    } else {
        Ok(steps)
    }
}

/// Sum over steps of both players' extrinsic payoffs.
pub fn collective_return<F: Scalar>(steps: &[StepRecord<F>]) -> Result<F> {
    Ok(non_empty(steps)?.iter().fold(F::zero(), |acc, s| acc + F::from_points(s.r_m_extr + s.r_o_extr)))
}

/// Sum over steps of the two-player Gini equality of the payoffs.
pub fn gini_return<F: Scalar>(steps: &[StepRecord<F>]) -> Result<F> {
    non_empty(steps)?
        .iter()
        .try_fold(F::zero(), |acc, s| Ok(acc + gini_pair(F::from_points(s.r_m_extr), F::from_points(s.r_o_extr))?))
}

/// Sum over steps of the smaller of the two payoffs.
pub fn min_return<F: Scalar>(steps: &[StepRecord<F>]) -> Result<F> {
    Ok(non_empty(steps)?.iter().fold(F::zero(), |acc, s| acc + F::from_points(s.r_m_extr.min(s.r_o_extr))))
}

/// Final joint action class, from player M's side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairClass {
    /// Mutual cooperation.
    CC,
    /// M cooperates and is exploited.
    CD,
    /// M exploits.
    DC,
    /// Mutual defection.
    DD,
}

impl PairClass {
    pub const ALL: [PairClass; 4] = [PairClass::CC, PairClass::CD, PairClass::DC, PairClass::DD];

    pub fn of(joint: JointAction) -> Self {
        match (joint.m, joint.o) {
            (Action::Cooperate, Action::Cooperate) => PairClass::CC,
            (Action::Cooperate, Action::Defect) => PairClass::CD,
            (Action::Defect, Action::Cooperate) => PairClass::DC,
            (Action::Defect, Action::Defect) => PairClass::DD,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn classify_final_pair<F>(result: &EpisodeResult<F>) -> PairClass {
    PairClass::of(result.final_pair)
}

/// Mean with a normal-approximation 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Estimate { mean, ci95: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate { mean, ci95: Z_95 * var.sqrt() / n.sqrt() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcomes {
    pub collective: Estimate,
    pub gini: Estimate,
    pub min: Estimate,
    pub rm_extr: Estimate,
    pub rm_intr: Estimate,
    pub ro_extr: Estimate,
    pub ro_intr: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchupSummary {
    pub game: GameKind,
    pub agent_m: String,
    pub agent_o: String,
    /// Experiment variant this matchup belongs to, such as `beta=0.2`.
    pub variant: String,
    pub iterations: usize,
    pub n_runs: usize,
    /// Final-pair counts indexed by [`PairClass::index`].
    pub counts: [usize; 4],
    pub outcomes: Outcomes,
}

impl MatchupSummary {
    pub fn count(&self, class: PairClass) -> usize {
        self.counts[class.index()]
    }

    pub fn pct(&self, class: PairClass) -> f64 {
        100.0 * self.count(class) as f64 / self.n_runs as f64
    }

    pub fn pct_exact(&self, class: PairClass) -> Rational64 {
        Rational64::new(100 * self.count(class) as i64, self.n_runs as i64)
    }

    pub fn with_variant(mut self, variant: impl Into<String>) -> Self {
        self.variant = variant.into();
        self
    }
}

pub fn summarize_matchup<F: Scalar>(results: &[EpisodeResult<F>]) -> Result<MatchupSummary> {
    let first = results.first().ok_or(Error::Empty("matchup results"))?;
    if let Some(odd) = results.iter().find(|r| {
        r.game != first.game || r.iterations != first.iterations || r.spec_m != first.spec_m || r.spec_o != first.spec_o
    }) {
        return Err(Error::Heterogeneous(format!(
            "run with seed {} ({} {} vs {}) differs from {} {} vs {}",
            odd.seed,
            odd.game,
            odd.spec_m.label(),
            odd.spec_o.label(),
            first.game,
            first.spec_m.label(),
            first.spec_o.label()
        )));
    }

    let mut counts = [0usize; 4];
    for r in results {
        counts[classify_final_pair(r).index()] += 1;
    }
    let estimate = |f: fn(&EpisodeResult<F>) -> F| {
        let xs: Vec<f64> = results.iter().map(|r| f(r).to_real()).collect();
        Estimate::from_samples(&xs)
    };
    let outcomes = Outcomes {
        collective: estimate(|r| r.cumulative.collective),
        gini: estimate(|r| r.cumulative.gini),
        min: estimate(|r| r.cumulative.min),
        rm_extr: estimate(|r| r.cumulative.r_m_extr),
        rm_intr: estimate(|r| r.cumulative.r_m_intr),
        ro_extr: estimate(|r| r.cumulative.r_o_extr),
        ro_intr: estimate(|r| r.cumulative.r_o_intr),
    };

    Ok(MatchupSummary {
        game: first.game,
        agent_m: first.spec_m.label(),
        agent_o: first.spec_o.label(),
        variant: String::new(),
        iterations: first.iterations,
        n_runs: results.len(),
        counts,
        outcomes,
    })
}

/// Final `(state, action)` pairs of each player, oldest first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub m: Vec<(ObservedState, Action)>,
    pub o: Vec<(ObservedState, Action)>,
}

pub fn last_k_trace<F: Scalar>(result: &EpisodeResult<F>, k: usize) -> Result<Trace> {
    let tail = result.contiguous_tail();
    if k > tail.len() {
        return Err(Error::TraceTooLong { k, available: tail.len() });
    }
    let window = &tail[tail.len() - k..];
    Ok(Trace {
        m: window.iter().map(|s| (s.state_m, s.a_m)).collect(),
        o: window.iter().map(|s| (s.state_o, s.a_o)).collect(),
    })
}

/// Sweep tolerance and cap for [`oracle_best_response`].
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const ORACLE_MAX_SWEEPS: usize = 1_000_000;
/// Action values closer than this are reported as a tie.
pub const ORACLE_TIE_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution<F> {
    pub policy: Policy,
    pub values: QTable<F>,
    pub sweeps: usize,
}

/// Optimal policy against a deterministic static opponent by value iteration.
///
/// The opponent's move depends only on the learner's previous action, so
/// the four observed states form a deterministic MDP with the framework's
/// intrinsic reward.
pub fn oracle_best_response<F: Scalar>(
    opponent: StaticStrategy,
    game: GameKind,
    framework: &MoralFramework<F>,
    gamma: F,
) -> Result<OracleSolution<F>> {
    if !opponent.is_deterministic() {
        return Err(Error::NonDeterministicOpponent(opponent.code().to_string()));
    }
    if !(gamma >= F::zero() && gamma < F::one()) {
        return Err(Error::Config(format!("gamma must lie in [0,1), got {gamma:?}")));
    }
    framework.validate()?;

    // (reward, successor) for each state-action pair.
    let mut model = [[(F::zero(), ObservedState::ALL[0]); 2]; 4];
    for s in ObservedState::ALL {
        let opp_action = opponent.respond(s.self_prev).expect("deterministic opponent");
        for a in Action::ALL {
            let (mine, theirs) = extrinsic_rewards(game, JointAction::new(a, opp_action));
            let reward = intrinsic_reward(
                framework,
                &RewardContext {
                    prev_opponent_action: s.opp_prev,
                    own_action: a,
                    self_payoff: mine,
                    opponent_payoff: theirs,
                },
            )?;
            model[s.index()][a.index()] = (reward, ObservedState::new(opp_action, a));
        }
    }

    let tolerance = F::from_real(ORACLE_TOLERANCE);
    let mut values = [F::zero(); 4];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta = F::zero();
        let mut next = values;
        for s in ObservedState::ALL {
            let best = Action::ALL
                .iter()
                .map(|a| {
                    let (r, s2) = model[s.index()][a.index()];
                    r + gamma * values[s2.index()]
                })
                .fold(None, |acc: Option<F>, v| Some(acc.map_or(v, |m| m.max_of(v))))
                .unwrap();
            delta = delta.max_of((best - values[s.index()]).abs());
            next[s.index()] = best;
        }
        values = next;
        if delta < tolerance || sweeps >= ORACLE_MAX_SWEEPS {
            break;
        }
    }

    let mut q = QTable::new();
    for s in ObservedState::ALL {
        for a in Action::ALL {
            let (r, s2) = model[s.index()][a.index()];
            q.set(s, a, r + gamma * values[s2.index()]);
        }
    }
    let tie = F::from_real(ORACLE_TIE_TOLERANCE);
    let policy = Policy::from_fn(|s| {
        let [c, d] = q.row(s);
        if (c - d).abs() <= tie {
            Choice::Tied
        } else if c > d {
            Choice::Only(Action::Cooperate)
        } else {
            Choice::Only(Action::Defect)
        }
    });
    Ok(OracleSolution { policy, values: q, sweeps })
}
