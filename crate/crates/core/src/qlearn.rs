//! Tabular Q-learning over the four "last joint action" states.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, JointAction};
use crate::moral::MoralFramework;
use crate::scalar::Scalar;

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_GAMMA: f64 = 0.90;

/// What an agent sees before acting: the opponent's and its own previous action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObservedState {
    pub opp_prev: Action,
    pub self_prev: Action,
}

impl ObservedState {
    pub const ALL: [ObservedState; 4] = [
        ObservedState::new(Action::Cooperate, Action::Cooperate),
        ObservedState::new(Action::Cooperate, Action::Defect),
        ObservedState::new(Action::Defect, Action::Cooperate),
        ObservedState::new(Action::Defect, Action::Defect),
    ];

    pub const fn new(opp_prev: Action, self_prev: Action) -> Self {
        ObservedState { opp_prev, self_prev }
    }

    /// State of player M after the joint action.
    pub fn for_m(joint: JointAction) -> Self {
        ObservedState::new(joint.o, joint.m)
    }

    /// State of player O after the joint action.
    pub fn for_o(joint: JointAction) -> Self {
        ObservedState::new(joint.m, joint.o)
    }

    /// The same previous joint action seen by the other player.
    pub fn flipped(self) -> Self {
        ObservedState::new(self.self_prev, self.opp_prev)
    }

    pub fn index(self) -> usize {
        self.opp_prev.index() * 2 + self.self_prev.index()
    }

    pub fn key(self) -> String {
        format!("{},{}", self.opp_prev, self.self_prev)
    }
}

impl fmt::Display for ObservedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.opp_prev, self.self_prev)
    }
}

impl FromStr for ObservedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (opp, own) =
            s.split_once(',').ok_or_else(|| Error::Config(format!("state key {s:?} is not \"opp_prev,self_prev\"")))?;
        Ok(ObservedState::new(opp.trim().parse()?, own.trim().parse()?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QTable<F> {
    values: [[F; 2]; 4],
}

impl<F: Scalar> Default for QTable<F> {
    fn default() -> Self {
        QTable { values: [[F::zero(); 2]; 4] }
    }
}

impl<F: Scalar> QTable<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: ObservedState, a: Action) -> F {
        self.values[s.index()][a.index()]
    }

    pub fn set(&mut self, s: ObservedState, a: Action, value: F) {
        self.values[s.index()][a.index()] = value;
    }

    pub fn row(&self, s: ObservedState) -> [F; 2] {
        self.values[s.index()]
    }

    pub fn max_value(&self, s: ObservedState) -> F {
        let [c, d] = self.row(s);
        c.max_of(d)
    }

    pub fn entries(&self) -> impl Iterator<Item = (ObservedState, Action, F)> + '_ {
        ObservedState::ALL.into_iter().flat_map(move |s| Action::ALL.into_iter().map(move |a| (s, a, self.get(s, a))))
    }

    /// Snapshot keyed by `"opp_prev,self_prev"`, values ordered `[C, D]`.
    pub fn to_snapshot(&self) -> BTreeMap<String, [f64; 2]> {
        ObservedState::ALL
            .iter()
            .map(|&s| {
                let [c, d] = self.row(s);
                (s.key(), [c.to_real(), d.to_real()])
            })
            .collect()
    }

    pub fn from_snapshot(snapshot: &BTreeMap<String, [f64; 2]>) -> Result<Self> {
        let mut q = QTable::new();
        for s in ObservedState::ALL {
            let [c, d] =
                snapshot.get(&s.key()).ok_or_else(|| Error::Config(format!("snapshot missing state {}", s.key())))?;
            q.set(s, Action::Cooperate, F::from_real(*c));
            q.set(s, Action::Defect, F::from_real(*d));
        }
        if snapshot.len() != 4 {
            return Err(Error::Config(format!("snapshot has {} states, expected 4", snapshot.len())));
        }
        Ok(q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExplorationSchedule<F> {
    /// Linear interpolation from `start` at the first iteration to `end` at the last.
    LinearDecay {
        start: F,
        end: F,
    },
    Constant {
        eps: F,
    },
}

impl<F: Scalar> Default for ExplorationSchedule<F> {
    fn default() -> Self {
        ExplorationSchedule::LinearDecay { start: F::one(), end: F::zero() }
    }
}

impl<F: Scalar> ExplorationSchedule<F> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: F| v >= F::zero() && v <= F::one();
        let ok = match *self {
            ExplorationSchedule::LinearDecay { start, end } => unit(start) && unit(end),
            ExplorationSchedule::Constant { eps } => unit(eps),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("exploration rates must lie in [0,1]: {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ExplorationSchedule::LinearDecay { start, end } => {
                format!("eps={}->{}", start.to_real(), end.to_real())
            }
            ExplorationSchedule::Constant { eps } => format!("eps={}", eps.to_real()),
        }
    }

    pub fn cast<G: Scalar>(&self) -> ExplorationSchedule<G> {
        let c = |v: F| G::from_real(v.to_real());
        match *self {
            ExplorationSchedule::LinearDecay { start, end } => {
                ExplorationSchedule::LinearDecay { start: c(start), end: c(end) }
            }
            ExplorationSchedule::Constant { eps } => ExplorationSchedule::Constant { eps: c(eps) },
        }
    }
}

/// Exploration rate at iteration `t` of `total`.
pub fn epsilon_at<F: Scalar>(schedule: &ExplorationSchedule<F>, t: usize, total: usize) -> Result<F> {
    if t >= total || total < 2 {
        return Err(Error::IterationOutOfRange { t, total });
    }
    Ok(match *schedule {
        ExplorationSchedule::LinearDecay { start, end } => {
            if t == total - 1 {
                end
            } else {
                let frac = F::from_points(t as i64) / F::from_points(total as i64 - 1);
                start + (end - start) * frac
            }
        }
        ExplorationSchedule::Constant { eps } => eps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams<F> {
    pub alpha: F,
    pub gamma: F,
    pub schedule: ExplorationSchedule<F>,
    pub framework: MoralFramework<F>,
}

impl<F: Scalar> LearnerParams<F> {
    /// Default hyper-parameters (`alpha` = 0.01, `gamma` = 0.9, ε decaying 1 → 0).
    pub fn new(framework: MoralFramework<F>) -> Self {
        LearnerParams {
            alpha: F::from_real(DEFAULT_ALPHA),
            gamma: F::from_real(DEFAULT_GAMMA),
            schedule: ExplorationSchedule::default(),
            framework,
        }
    }

    pub fn with_schedule(mut self, schedule: ExplorationSchedule<F>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > F::zero() && self.alpha <= F::one()) {
            return Err(Error::Config(format!("alpha must lie in (0,1], got {:?}", self.alpha)));
        }
        if !(self.gamma >= F::zero() && self.gamma < F::one()) {
            return Err(Error::Config(format!("gamma must lie in [0,1), got {:?}", self.gamma)));
        }
        self.schedule.validate()?;
        self.framework.validate()
    }

    pub fn cast<G: Scalar>(&self) -> LearnerParams<G> {
        LearnerParams {
            alpha: G::from_real(self.alpha.to_real()),
            gamma: G::from_real(self.gamma.to_real()),
            schedule: self.schedule.cast(),
            framework: self.framework.cast(),
        }
    }
}

/// ε-greedy choice; greedy ties are broken uniformly at random.
pub fn select_action<F: Scalar, R: Rng + ?Sized>(q: &QTable<F>, s: ObservedState, eps: F, rng: &mut R) -> Action {
    let explore = rng.gen::<f64>() < eps.to_real();
    if explore {
        return random_action(rng);
    }
    let [c, d] = q.row(s);
    if c > d {
        Action::Cooperate
    } else if d > c {
        Action::Defect
    } else {
        random_action(rng)
    }
}

pub(crate) fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    if rng.gen::<bool>() {
        Action::Defect
    } else {
        Action::Cooperate
    }
}

/// One temporal-difference step on `q[s][a]`.
pub fn q_update<F: Scalar>(
    q: &mut QTable<F>,
    s: ObservedState,
    a: Action,
    reward: F,
    s_next: ObservedState,
    params: &LearnerParams<F>,
) {
    let current = q.get(s, a);
    let target = reward + params.gamma * q.max_value(s_next);
    q.set(s, a, current + params.alpha * (target - current));
}

/// Per-state greedy choice, with exact ties reported rather than sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    Only(Action),
    Tied,
}

impl Choice {
    pub fn action(self) -> Option<Action> {
        match self {
            Choice::Only(a) => Some(a),
            Choice::Tied => None,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Only(a) => write!(f, "{a}"),
            Choice::Tied => f.write_str("C|D"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    choices: [Choice; 4],
}

impl Policy {
    pub fn from_fn(mut f: impl FnMut(ObservedState) -> Choice) -> Self {
        Policy { choices: ObservedState::ALL.map(&mut f) }
    }

    pub fn get(&self, s: ObservedState) -> Choice {
        self.choices[s.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObservedState, Choice)> + '_ {
        ObservedState::ALL.into_iter().map(move |s| (s, self.get(s)))
    }

    /// True when every non-tied state picks `action`.
    pub fn is_uniformly(&self, action: Action) -> bool {
        self.choices.iter().all(|c| c.action().is_none_or(|a| a == action))
    }

    /// True when the two policies agree on every state where neither is tied.
    pub fn agrees_with(&self, other: &Policy) -> bool {
        self.iter().all(|(s, c)| match (c, other.get(s)) {
            (Choice::Only(a), Choice::Only(b)) => a == b,
            _ => true,
        })
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(s, c)| format!("{s}->{c}")).collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn greedy_policy<F: Scalar>(q: &QTable<F>) -> Policy {
    Policy::from_fn(|s| {
        let [c, d] = q.row(s);
        if c > d {
            Choice::Only(Action::Cooperate)
        } else if d > c {
            Choice::Only(Action::Defect)
        } else {
            Choice::Tied
        }
    })
}

/// How many updates each state-action entry received.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitCounts {
    counts: [[u32; 2]; 4],
}

impl VisitCounts {
    pub fn get(&self, s: ObservedState, a: Action) -> u32 {
        self.counts[s.index()][a.index()]
    }

    pub fn record(&mut self, s: ObservedState, a: Action) {
        self.counts[s.index()][a.index()] += 1;
    }

    /// Both actions have been tried in `s`.
    pub fn resolved(&self, s: ObservedState) -> bool {
        self.counts[s.index()].iter().all(|&n| n > 0)
    }
}

impl Policy {
    /// Marks states where some action was never tried as tied.
    pub fn restricted_to_resolved(&self, visits: &VisitCounts) -> Policy {
        Policy::from_fn(|s| if visits.resolved(s) { self.get(s) } else { Choice::Tied })
    }
}

/// A Q-learning agent: parameters, value table and visit counts.
#[derive(Clone, Debug)]
pub struct Learner<F> {
    pub params: LearnerParams<F>,
    pub q: QTable<F>,
    pub visits: VisitCounts,
}

impl<F: Scalar> Learner<F> {
    pub fn new(params: LearnerParams<F>) -> Self {
        Learner { params, q: QTable::new(), visits: VisitCounts::default() }
    }

    pub fn act<R: Rng + ?Sized>(&self, s: ObservedState, eps: F, rng: &mut R) -> Action {
        select_action(&self.q, s, eps, rng)
    }

    pub fn learn(&mut self, s: ObservedState, a: Action, reward: F, s_next: ObservedState) {
        q_update(&mut self.q, s, a, reward, s_next, &self.params);
        self.visits.record(s, a);
    }

    /// Greedy policy over states where both actions were tried.
    pub fn resolved_policy(&self) -> Policy {
        greedy_policy(&self.q).restricted_to_resolved(&self.visits)
    }
}
