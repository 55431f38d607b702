//! Fixed, non-learning opponents from classic tournaments.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::game::Action;
use crate::qlearn::random_action;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StaticStrategy {
    #[serde(rename = "AC")]
    AlwaysCooperate,
    #[serde(rename = "AD")]
    AlwaysDefect,
    #[serde(rename = "TFT")]
    TitForTat,
    Random,
}

impl StaticStrategy {
    pub const ALL: [StaticStrategy; 4] = [
        StaticStrategy::AlwaysCooperate,
        StaticStrategy::AlwaysDefect,
        StaticStrategy::TitForTat,
        StaticStrategy::Random,
    ];

    pub fn code(self) -> &'static str {
        match self {
            StaticStrategy::AlwaysCooperate => "AC",
            StaticStrategy::AlwaysDefect => "AD",
            StaticStrategy::TitForTat => "TFT",
            StaticStrategy::Random => "Random",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self != StaticStrategy::Random
    }

    /// The action this strategy plays given the opponent's previous move,
    /// when it is deterministic.
    pub fn respond(self, opp_prev: Action) -> Option<Action> {
        match self {
            StaticStrategy::AlwaysCooperate => Some(Action::Cooperate),
            StaticStrategy::AlwaysDefect => Some(Action::Defect),
            StaticStrategy::TitForTat => Some(opp_prev),
            StaticStrategy::Random => None,
        }
    }
}

impl fmt::Display for StaticStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StaticStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        StaticStrategy::ALL
            .into_iter()
            .find(|st| st.code() == s)
            .ok_or_else(|| Error::Config(format!("unknown static strategy {s:?}, expected AC, AD, TFT or Random")))
    }
}

/// `opp_prev` is the opponent's previous action (the fictitious one at t = 0).
pub fn static_action<R: Rng + ?Sized>(strategy: StaticStrategy, opp_prev: Action, rng: &mut R) -> Action {
    match strategy.respond(opp_prev) {
        Some(a) => a,
        None => random_action(rng),
    }
}
