use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gripper {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Longitudinal {
    Stop,
    Forward,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Angular {
    Straight,
    /// Counter-clockwise.
    Left,
    /// Clockwise.
    Right,
}

/// One of the 18 discrete actions, stored as its index
/// `gripper * 9 + longitudinal * 3 + angular`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Action(u8);

impl Action {
    pub const COUNT: u8 = 18;
    pub const NOOP: Action = Action(0);

    pub fn new(index: u8) -> Result<Self> {
        if index < Self::COUNT {
            Ok(Self(index))
        } else {
            Err(Error::InvalidAction(i64::from(index)))
        }
    }

    pub fn from_parts(g: Gripper, l: Longitudinal, a: Angular) -> Self {
        Self(encode_action(g, l, a))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn parts(self) -> (Gripper, Longitudinal, Angular) {
        let g = if self.0 / 9 == 0 { Gripper::Open } else { Gripper::Closed };
        let l = match (self.0 % 9) / 3 {
            0 => Longitudinal::Stop,
            1 => Longitudinal::Forward,
            _ => Longitudinal::Back,
        };
        let a = match self.0 % 3 {
            0 => Angular::Straight,
            1 => Angular::Left,
            _ => Angular::Right,
        };
        (g, l, a)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..Self::COUNT).map(Action)
    }
}

impl TryFrom<u8> for Action {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Action::new(value)
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.0
    }
}

/// Splits an action index into its gripper, longitudinal and angular parts.
pub fn decode_action(index: i64) -> Result<(Gripper, Longitudinal, Angular)> {
    let idx = u8::try_from(index).map_err(|_| Error::InvalidAction(index))?;
    Ok(Action::new(idx)?.parts())
}

pub fn encode_action(g: Gripper, l: Longitudinal, a: Angular) -> u8 {
    let g = match g {
        Gripper::Open => 0,
        Gripper::Closed => 1,
    };
    let l = match l {
        Longitudinal::Stop => 0,
        Longitudinal::Forward => 1,
        Longitudinal::Back => 2,
    };
    let a = match a {
        Angular::Straight => 0,
        Angular::Left => 1,
        Angular::Right => 2,
    };
    g * 9 + l * 3 + a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode_action(0).unwrap(),
            (Gripper::Open, Longitudinal::Stop, Angular::Straight)
        );
        assert_eq!(
            decode_action(17).unwrap(),
            (Gripper::Closed, Longitudinal::Back, Angular::Right)
        );
        assert_eq!(
            decode_action(12).unwrap(),
            (Gripper::Closed, Longitudinal::Forward, Angular::Straight)
        );
    }

    #[test]
    fn decode_rejects_out_of_range() {
        assert!(matches!(decode_action(18), Err(Error::InvalidAction(18))));
        assert!(matches!(decode_action(-1), Err(Error::InvalidAction(-1))));
        assert!(Action::new(200).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_action(Gripper::Open, Longitudinal::Stop, Angular::Straight), 0);
        assert_eq!(encode_action(Gripper::Closed, Longitudinal::Back, Angular::Right), 17);
    }

    #[test]
    fn bijection() {
        let mut seen = std::collections::HashSet::new();
        for k in 0..18i64 {
            let (g, l, a) = decode_action(k).unwrap();
            assert_eq!(i64::from(encode_action(g, l, a)), k);
            seen.insert((g, l, a));
        }
        assert_eq!(seen.len(), 18);
    }

    #[test]
    fn serde_rejects_bad_index() {
        assert!(serde_json::from_str::<Action>("18").is_err());
        assert_eq!(serde_json::from_str::<Action>("4").unwrap().index(), 4);
    }
}
