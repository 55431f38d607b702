//! Actions, the three dilemma games and their payoff matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "C")]
    Cooperate,
    #[serde(rename = "D")]
    Defect,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Cooperate, Action::Defect];

    pub fn index(self) -> usize {
        match self {
            Action::Cooperate => 0,
            Action::Defect => 1,
        }
    }

    pub fn from_index(i: usize) -> Action {
        if i == 0 {
            Action::Cooperate
        } else {
            Action::Defect
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Action::Cooperate => "C",
            Action::Defect => "D",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "C" => Ok(Action::Cooperate),
            "D" => Ok(Action::Defect),
            other => Err(Error::Config(format!("unknown action {other:?}, expected C or D"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GameKind {
    /// Iterated Prisoner's Dilemma: defection tempted by greed and fear.
    #[serde(rename = "IPD")]
    PrisonersDilemma,
    /// Iterated Volunteer's Dilemma: greed only.
    #[serde(rename = "IVD")]
    VolunteersDilemma,
    /// Iterated Stag Hunt: fear only.
    #[serde(rename = "ISH")]
    StagHunt,
}

impl GameKind {
    pub const ALL: [GameKind; 3] = [GameKind::PrisonersDilemma, GameKind::VolunteersDilemma, GameKind::StagHunt];

    pub fn code(self) -> &'static str {
        match self {
            GameKind::PrisonersDilemma => "IPD",
            GameKind::VolunteersDilemma => "IVD",
            GameKind::StagHunt => "ISH",
        }
    }

    pub fn payoffs(self) -> PayoffMatrix {
        payoff_matrix(self)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "IPD" => Ok(GameKind::PrisonersDilemma),
            "IVD" => Ok(GameKind::VolunteersDilemma),
            "ISH" => Ok(GameKind::StagHunt),
            other => Err(Error::Config(format!("unknown game {other:?}, expected IPD, IVD or ISH"))),
        }
    }
}

/// Simultaneous actions of the moral player `M` and its opponent `O`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction {
    pub m: Action,
    pub o: Action,
}

impl JointAction {
    pub const ALL: [JointAction; 4] = [
        JointAction::new(Action::Cooperate, Action::Cooperate),
        JointAction::new(Action::Cooperate, Action::Defect),
        JointAction::new(Action::Defect, Action::Cooperate),
        JointAction::new(Action::Defect, Action::Defect),
    ];

    pub const fn new(m: Action, o: Action) -> Self {
        JointAction { m, o }
    }

    /// The same pair seen from the opponent's side.
    pub fn swapped(self) -> Self {
        JointAction { m: self.o, o: self.m }
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.o)
    }
}

/// Integer payoff points.
pub type Points = i64;

/// A symmetric 2×2 bimatrix; `entries[row][col] = (row payoff, column payoff)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PayoffMatrix {
    entries: [[(Points, Points); 2]; 2],
}

impl PayoffMatrix {
    /// Builds a symmetric game from the row player's payoffs.
    pub const fn symmetric(cc: Points, cd: Points, dc: Points, dd: Points) -> Self {
        PayoffMatrix { entries: [[(cc, cc), (cd, dc)], [(dc, cd), (dd, dd)]] }
    }

    pub fn get(&self, row: Action, col: Action) -> (Points, Points) {
        self.entries[row.index()][col.index()]
    }

    /// Payoff to the row player.
    pub fn row_payoff(&self, row: Action, col: Action) -> Points {
        self.get(row, col).0
    }

    pub fn is_symmetric(&self) -> bool {
        JointAction::ALL.iter().all(|j| self.get(j.m, j.o).0 == self.get(j.o, j.m).1)
    }

    pub fn min_entry(&self) -> Points {
        self.entries.iter().flatten().map(|&(a, b)| a.min(b)).min().unwrap_or(0)
    }

    /// Smallest and largest payoff sums over the four outcomes.
    pub fn sum_range(&self) -> (Points, Points) {
        let sums = JointAction::ALL.map(|j| {
            let (a, b) = self.get(j.m, j.o);
            a + b
        });
        (*sums.iter().min().unwrap(), *sums.iter().max().unwrap())
    }
}

const PRISONERS_DILEMMA: PayoffMatrix = PayoffMatrix::symmetric(3, 1, 4, 2);
const VOLUNTEERS_DILEMMA: PayoffMatrix = PayoffMatrix::symmetric(4, 2, 5, 1);
const STAG_HUNT: PayoffMatrix = PayoffMatrix::symmetric(5, 1, 4, 2);

pub fn payoff_matrix(game: GameKind) -> PayoffMatrix {
    match game {
        GameKind::PrisonersDilemma => PRISONERS_DILEMMA,
        GameKind::VolunteersDilemma => VOLUNTEERS_DILEMMA,
        GameKind::StagHunt => STAG_HUNT,
    }
}

/// Extrinsic payoffs `(r_M, r_O)` for a joint action.
pub fn extrinsic_rewards(game: GameKind, joint: JointAction) -> (Points, Points) {
    payoff_matrix(game).get(joint.m, joint.o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Action::{Cooperate as C, Defect as D};

    #[test]
    fn payoff_tables_match_published_values() {
        let ipd = payoff_matrix(GameKind::PrisonersDilemma);
        assert_eq!(ipd.get(C, C), (3, 3));
        assert_eq!(ipd.get(C, D), (1, 4));
        assert_eq!(ipd.get(D, C), (4, 1));
        assert_eq!(ipd.get(D, D), (2, 2));

        let ivd = payoff_matrix(GameKind::VolunteersDilemma);
        assert_eq!(ivd.get(C, C), (4, 4));
        assert_eq!(ivd.get(C, D), (2, 5));
        assert_eq!(ivd.get(D, C), (5, 2));
        assert_eq!(ivd.get(D, D), (1, 1));

        let ish = payoff_matrix(GameKind::StagHunt);
        assert_eq!(ish.get(C, C), (5, 5));
        assert_eq!(ish.get(C, D), (1, 4));
        assert_eq!(ish.get(D, C), (4, 1));
        assert_eq!(ish.get(D, D), (2, 2));
    }

    #[test]
    fn extrinsic_examples() {
        assert_eq!(extrinsic_rewards(GameKind::PrisonersDilemma, JointAction::new(D, C)), (4, 1));
        assert_eq!(extrinsic_rewards(GameKind::VolunteersDilemma, JointAction::new(C, C)), (4, 4));
        assert_eq!(extrinsic_rewards(GameKind::StagHunt, JointAction::new(D, D)), (2, 2));
    }

    #[test]
    fn games_are_symmetric_with_positive_entries() {
        for game in GameKind::ALL {
            let m = payoff_matrix(game);
            assert!(m.is_symmetric());
            assert!(m.min_entry() > 0);
            for j in JointAction::ALL {
                assert_eq!(extrinsic_rewards(game, j).0, extrinsic_rewards(game, j.swapped()).1);
            }
        }
    }

    #[test]
    fn greed_and_fear_orderings() {
        let row = |g: GameKind, a, b| payoff_matrix(g).row_payoff(a, b);
        let greed = |g| row(g, D, C) > row(g, C, C);
        let fear = |g| row(g, D, D) > row(g, C, D);

        assert!(greed(GameKind::PrisonersDilemma) && fear(GameKind::PrisonersDilemma));
        assert!(greed(GameKind::VolunteersDilemma) && !fear(GameKind::VolunteersDilemma));
        assert!(!greed(GameKind::StagHunt) && fear(GameKind::StagHunt));
    }

    #[test]
    fn names_serialize_as_codes() {
        assert_eq!(serde_json::to_string(&GameKind::VolunteersDilemma).unwrap(), "\"IVD\"");
        assert_eq!(serde_json::to_string(&Action::Defect).unwrap(), "\"D\"");
        assert_eq!("ISH".parse::<GameKind>().unwrap(), GameKind::StagHunt);
        assert!("PD".parse::<GameKind>().is_err());
        assert!(Action::Cooperate < Action::Defect);
    }
}
