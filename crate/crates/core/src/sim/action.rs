use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Longitudinal {
    Maintain = 0,
    Accelerate = 1,
    Brake = 2,
    HardBrake = 3,
}

impl Longitudinal {
    pub const ALL: [Longitudinal; 4] = [
        Longitudinal::Maintain,
        Longitudinal::Accelerate,
        Longitudinal::Brake,
        Longitudinal::HardBrake,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lateral {
    Keep = 0,
    ChangeLeft = 1,
    ChangeRight = 2,
}

impl Lateral {
    pub const ALL: [Lateral; 3] = [Lateral::Keep, Lateral::ChangeLeft, Lateral::ChangeRight];
}

/// One of the 12 `longitudinal × lateral` combinations.
///
/// Serialized as its index in `0..12` (`ax * 3 + ay`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub struct DiscreteAction {
    pub ax: Longitudinal,
    pub ay: Lateral,
}

impl DiscreteAction {
    pub const COUNT: usize = 12;

    pub const IDLE: DiscreteAction = DiscreteAction {
        ax: Longitudinal::Maintain,
        ay: Lateral::Keep,
    };

    pub const fn new(ax: Longitudinal, ay: Lateral) -> Self {
        Self { ax, ay }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.ax as usize * 3 + self.ay as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= Self::COUNT {
            return None;
        }
        Some(Self {
            ax: Longitudinal::ALL[i / 3],
            ay: Lateral::ALL[i % 3],
        })
    }

    pub fn all() -> impl Iterator<Item = DiscreteAction> {
        (0..Self::COUNT).map(|i| Self::from_index(i).unwrap())
    }

    pub fn with_ax(self, ax: Longitudinal) -> Self {
        Self { ax, ..self }
    }

    pub fn with_ay(self, ay: Lateral) -> Self {
        Self { ay, ..self }
    }
}

impl From<DiscreteAction> for u8 {
    fn from(a: DiscreteAction) -> u8 {
        a.index() as u8
    }
}

impl TryFrom<u8> for DiscreteAction {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        DiscreteAction::from_index(v as usize).ok_or_else(|| format!("action index {v} out of range 0..12"))
    }
}

impl fmt::Display for DiscreteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}", self.ax, self.ay)
    }
}
