//! Deterministic top-down 2D rigid-body simulation.
//!
//! The workspace is the square `[-1, 1]²` with `+y` pointing up. One call to
//! [`step_sim`] advances a [`WorkspaceState`] by one 8 Hz control step using a
//! fixed number of substeps. Transcendental functions come from `libm` so the
//! result does not depend on the platform's math library.

mod action;
pub mod geometry;
mod physics;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use action::{decode_action, encode_action, Action, Angular, Gripper, Longitudinal};
pub use physics::{grasp_capture_check, step_sim};

/// Half-extent of the workspace along each axis.
pub const WORKSPACE_HALF: f64 = 1.0;
/// Radius of the robot body disk.
pub const ROBOT_RADIUS: f64 = 0.18;
/// Radius of the recess between the gripper fingers, measured from the robot centre.
pub const ROBOT_JAW_RADIUS: f64 = 0.12;
/// Circumradius shared by every block shape.
pub const BLOCK_RADIUS: f64 = 0.08;
/// Maximum centroid distance for a block to be captured by the gripper.
pub const CAPTURE_RANGE: f64 = 0.24;
/// Half-width of the gripper capture sector, in radians (40 degrees).
pub const CAPTURE_HALF_ANGLE: f64 = 40.0 * PI / 180.0;
/// Control steps per simulated second.
pub const CONTROL_HZ: f64 = 8.0;
/// Physics substeps per control step.
pub const SUBSTEPS: usize = 10;

/// Wraps an angle into `[-π, π)`. Angles already in range are returned unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * ((theta + PI) / two_pi).floor();
    if t >= PI {
        t -= two_pi;
    }
    if t < -PI {
        t = -PI;
    }
    t
}

/// Position and heading of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Unit vector along the heading.
    pub fn heading(&self) -> [f64; 2] {
        [libm::cos(self.theta), libm::sin(self.theta)]
    }

    /// Maps a point from this pose's local frame into the world frame.
    pub fn to_world(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = (libm::sin(self.theta), libm::cos(self.theta));
        [
            self.x + c * local[0] - s * local[1],
            self.y + s * local[0] + c * local[1],
        ]
    }

    /// Maps a world point into this pose's local frame.
    pub fn to_local(&self, world: [f64; 2]) -> [f64; 2] {
        let (s, c) = (libm::sin(self.theta), libm::cos(self.theta));
        let dx = world[0] - self.x;
        let dy = world[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockShape {
    Square,
    Pentagon,
    Star,
    Circle,
}

impl BlockShape {
    pub const ALL: [BlockShape; 4] = [
        BlockShape::Square,
        BlockShape::Pentagon,
        BlockShape::Star,
        BlockShape::Circle,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityColour {
    Red,
    Green,
    Blue,
    Yellow,
}

impl EntityColour {
    pub const ALL: [EntityColour; 4] = [
        EntityColour::Red,
        EntityColour::Green,
        EntityColour::Blue,
        EntityColour::Yellow,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i)).copied()
    }
}

/// A pushable block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: u32,
    pub shape: BlockShape,
    pub colour: EntityColour,
    pub pose: Pose,
    pub lin_vel: [f64; 2],
    pub ang_vel: f64,
}

impl Block {
    /// A block at rest.
    pub fn new(id: u32, shape: BlockShape, colour: EntityColour, pose: Pose) -> Self {
        Self {
            id,
            shape,
            colour,
            pose,
            lin_vel: [0.0; 2],
            ang_vel: 0.0,
        }
    }
}

/// An immovable axis-aligned goal rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub id: u32,
    pub colour: EntityColour,
    pub centre: [f64; 2],
    pub width: f64,
    pub height: f64,
}

impl GoalRegion {
    /// `(x_min, y_min, x_max, y_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let hw = self.width / 2.0;
        let hh = self.height / 2.0;
        (
            self.centre[0] - hw,
            self.centre[1] - hh,
            self.centre[0] + hw,
            self.centre[1] + hh,
        )
    }

    /// Closed-rectangle containment.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (x0, y0, x1, y1) = self.bounds();
        p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1
    }

    pub fn overlaps(&self, other: &GoalRegion) -> bool {
        let (a0, b0, a1, b1) = self.bounds();
        let (c0, d0, c1, d1) = other.bounds();
        a0 < c1 && c0 < a1 && b0 < d1 && d0 < b1
    }
}

/// A rigid attachment between the gripper and a block.
///
/// `offset` is the block pose expressed in the robot frame at the moment of
/// capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grip {
    pub block_id: u32,
    pub offset: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub pose: Pose,
    pub lin_vel: [f64; 2],
    pub ang_vel: f64,
    pub gripper_closed: bool,
    pub grip: Option<Grip>,
}

impl RobotConfig {
    /// A robot at rest with an open gripper.
    pub fn at(pose: Pose) -> Self {
        Self {
            pose,
            lin_vel: [0.0; 2],
            ang_vel: 0.0,
            gripper_closed: false,
            grip: None,
        }
    }

    pub fn held_block(&self) -> Option<u32> {
        self.grip.map(|g| g.block_id)
    }
}

/// Complete physical state of the workspace at one control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceState {
    pub robot: RobotConfig,
    pub blocks: Vec<Block>,
    pub regions: Vec<GoalRegion>,
    pub t: u32,
}

impl WorkspaceState {
    pub fn block(&self, id: u32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Checks the type-level invariants: distinct ids, containment, grip consistency.
    pub fn validate(&self) -> Result<(), String> {
        let inside = |p: [f64; 2]| p.iter().all(|c| c.abs() <= WORKSPACE_HALF);
        if !inside(self.robot.pose.position()) {
            return Err("robot outside workspace".into());
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !inside(b.pose.position()) {
                return Err(format!("block {} outside workspace", b.id));
            }
            if self.blocks[..i].iter().any(|o| o.id == b.id) {
                return Err(format!("duplicate block id {}", b.id));
            }
        }
        for (i, r) in self.regions.iter().enumerate() {
            let (x0, y0, x1, y1) = r.bounds();
            if r.width <= 0.0 || r.height <= 0.0 {
                return Err(format!("region {} has non-positive size", r.id));
            }
            if x0 < -WORKSPACE_HALF || y0 < -WORKSPACE_HALF || x1 > WORKSPACE_HALF || y1 > WORKSPACE_HALF {
                return Err(format!("region {} extends outside workspace", r.id));
            }
            if self.regions[..i].iter().any(|o| o.id == r.id) {
                return Err(format!("duplicate region id {}", r.id));
            }
        }
        if let Some(id) = self.robot.held_block() {
            if !self.robot.gripper_closed {
                return Err("held block with open gripper".into());
            }
            if self.block(id).is_none() {
                return Err(format!("held block {id} does not exist"));
            }
        }
        Ok(())
    }
}

/// Per-episode multipliers on friction and motor strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsVector {
    pub block_friction: f64,
    pub robot_friction: f64,
    pub motor_rot: f64,
    pub motor_long: f64,
    pub motor_grip: f64,
}

impl DynamicsVector {
    pub const ONES: DynamicsVector = DynamicsVector {
        block_friction: 1.0,
        robot_friction: 1.0,
        motor_rot: 1.0,
        motor_long: 1.0,
        motor_grip: 1.0,
    };

    pub fn to_array(self) -> [f64; 5] {
        [
            self.block_friction,
            self.robot_friction,
            self.motor_rot,
            self.motor_long,
            self.motor_grip,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            block_friction: a[0],
            robot_friction: a[1],
            motor_rot: a[2],
            motor_long: a[3],
            motor_grip: a[4],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v > 0.0)
    }
}

impl Default for DynamicsVector {
    fn default() -> Self {
        Self::ONES
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_keeps_in_range_values() {
        for t in [-PI, -1.0, 0.0, 1.0, PI - 1e-12] {
            assert_eq!(normalize_angle(t), t);
        }
        assert_eq!(normalize_angle(PI), -PI);
        assert!((normalize_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert!((normalize_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn local_world_round_trip() {
        let p = Pose::new(0.3, -0.2, 1.1);
        let w = p.to_world([0.1, 0.05]);
        let l = p.to_local(w);
        assert!((l[0] - 0.1).abs() < 1e-12 && (l[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn region_is_closed_rectangle() {
        let r = GoalRegion {
            id: 0,
            colour: EntityColour::Red,
            centre: [0.0, 0.0],
            width: 0.5,
            height: 0.5,
        };
        assert!(r.contains([0.25, 0.0]));
        assert!(r.contains([0.25, -0.25]));
        assert!(!r.contains([0.2500001, 0.0]));
    }
}
