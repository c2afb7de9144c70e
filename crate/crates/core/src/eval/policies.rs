use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Policy, PolicyInput};
use crate::error::{Error, Result};
use crate::hash::rng_from;
use crate::sim::{Action, Angular, Gripper, Longitudinal};
use crate::tasks::TaskId;

const RANDOM_TAG: u64 = 0x7261_6E64;

/// Always action 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopPolicy;

pub fn noop_policy() -> NoopPolicy {
    NoopPolicy
}

impl Policy for NoopPolicy {
    fn act(&mut self, _: &PolicyInput<'_>) -> Result<Action> {
        Ok(Action::NOOP)
    }

    fn wants_pixels(&self) -> bool {
        false
    }
}

/// Uniform over the 18 actions, deterministic in its seed.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

pub fn random_policy(seed: u64) -> RandomPolicy {
    RandomPolicy {
        rng: rng_from(&[RANDOM_TAG, seed]),
    }
}

impl RandomPolicy {
    pub fn next_action(&mut self) -> Action {
        Action::new(self.rng.random_range(0..Action::COUNT)).expect("in range")
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &PolicyInput<'_>) -> Result<Action> {
        Ok(self.next_action())
    }

    fn wants_pixels(&self) -> bool {
        false
    }
}

/// Drives the robot to the centre of the goal region on MoveToRegion, then stops.
#[derive(Debug, Clone, Copy)]
pub struct MtrExpert {
    /// Heading error below which the robot stops turning.
    pub aim_tolerance: f64,
    /// Heading error below which the robot drives forward while turning.
    pub drive_cone: f64,
    /// Distance to the centre at which the robot parks.
    pub park_radius: f64,
}

pub fn scripted_mtr_expert() -> MtrExpert {
    MtrExpert {
        aim_tolerance: 0.12,
        drive_cone: 1.1,
        park_radius: 0.06,
    }
}

impl Policy for MtrExpert {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        if input.task != TaskId::MoveToRegion {
            return Err(Error::Policy(format!("the MoveToRegion expert cannot play {}", input.task)));
        }
        let region = input
            .state
            .regions
            .first()
            .ok_or_else(|| Error::Policy("no goal region".into()))?;
        let local = input.state.robot.pose.to_local(region.centre);
        let dist = (local[0] * local[0] + local[1] * local[1]).sqrt();
        if dist <= self.park_radius {
            return Ok(Action::NOOP);
        }
        let bearing = libm::atan2(local[1], local[0]);
        let angular = if bearing > self.aim_tolerance {
            Angular::Left
        } else if bearing < -self.aim_tolerance {
            Angular::Right
        } else {
            Angular::Straight
        };
        let longitudinal = if bearing.abs() < self.drive_cone {
            Longitudinal::Forward
        } else {
            Longitudinal::Stop
        };
        Ok(Action::from_parts(Gripper::Open, longitudinal, angular))
    }

    fn wants_pixels(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_env, rollout};
    use crate::render::ViewKind;
    use crate::tasks::VariantKind;

    #[test]
    fn random_streams_repeat() {
        let mut a = random_policy(5);
        let mut b = random_policy(5);
        let xs: Vec<u8> = (0..200).map(|_| a.next_action().index()).collect();
        let ys: Vec<u8> = (0..200).map(|_| b.next_action().index()).collect();
        assert_eq!(xs, ys);
        assert!((0..18).all(|i| xs.contains(&i)));
    }

    #[test]
    fn expert_solves_demo() {
        let mut env = make_env(TaskId::MoveToRegion, VariantKind::Demo, 0, ViewKind::Egocentric).unwrap();
        let traj = rollout(&mut env, &mut scripted_mtr_expert()).unwrap();
        assert_eq!(traj.score.unwrap().value(), 1.0);
    }

    #[test]
    fn expert_refuses_other_tasks() {
        let mut env = make_env(TaskId::MoveToCorner, VariantKind::Demo, 0, ViewKind::Egocentric).unwrap();
        assert!(matches!(rollout(&mut env, &mut scripted_mtr_expert()), Err(Error::Policy(_))));
    }
}
