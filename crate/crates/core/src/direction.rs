use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Movement of a series between two consecutive trading days.
///
/// The discriminant doubles as the state index used by every CPT and factor
/// in the crate: `Down = 0`, `Up = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Down = 0,
    Up = 1,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Down, Direction::Up];

    /// Labels a move from `previous` to `current`. Ties are `Up`.
    pub fn between(previous: f64, current: f64) -> Self {
        if current < previous {
            Direction::Down
        } else {
            Direction::Up
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Self {
        match index {
            0 => Direction::Down,
            _ => Direction::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Down => "Down",
            Direction::Up => "Up",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid direction `{0}` (expected Up or Down)")]
pub struct ParseDirectionError(pub String);

impl FromStr for Direction {
    type Err = ParseDirectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "upward" | "u" => Ok(Direction::Up),
            "down" | "downward" | "d" => Ok(Direction::Down),
            _ => Err(ParseDirectionError(s.to_string())),
        }
    }
}
