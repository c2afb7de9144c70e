//! Demonstration layouts, shipped as one TOML file per task.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{check_structure, initial_scores_zero, TaskId};
use crate::error::{Error, Result};
use crate::sim::{Block, BlockShape, EntityColour, GoalRegion, Pose, RobotConfig, WorkspaceState};

/// Version stamp every demo layout file must carry.
pub const LAYOUT_FORMAT_VERSION: u32 = 1;

const SOURCES: [(TaskId, &str, &str); 8] = [
    (TaskId::MoveToCorner, "move_to_corner.toml", include_str!("../../data/demo/move_to_corner.toml")),
    (TaskId::MoveToRegion, "move_to_region.toml", include_str!("../../data/demo/move_to_region.toml")),
    (TaskId::MatchRegions, "match_regions.toml", include_str!("../../data/demo/match_regions.toml")),
    (TaskId::MakeLine, "make_line.toml", include_str!("../../data/demo/make_line.toml")),
    (TaskId::FindDupe, "find_dupe.toml", include_str!("../../data/demo/find_dupe.toml")),
    (TaskId::FixColour, "fix_colour.toml", include_str!("../../data/demo/fix_colour.toml")),
    (TaskId::ClusterColour, "cluster_colour.toml", include_str!("../../data/demo/cluster_colour.toml")),
    (TaskId::ClusterShape, "cluster_shape.toml", include_str!("../../data/demo/cluster_shape.toml")),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoLayout {
    pub format_version: u32,
    pub task: TaskId,
    pub robot: PoseEntry,
    #[serde(default)]
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub regions: Vec<RegionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseEntry {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockEntry {
    pub shape: BlockShape,
    pub colour: EntityColour,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEntry {
    pub colour: EntityColour,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl DemoLayout {
    /// Parses and validates a layout file. `name` is used in error messages.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidLayout {
            name: name.to_string(),
            reason,
        };
        let layout: DemoLayout = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        if layout.format_version != LAYOUT_FORMAT_VERSION {
            return Err(invalid(format!(
                "format_version {} (expected {LAYOUT_FORMAT_VERSION})",
                layout.format_version
            )));
        }
        let state = layout.to_state();
        check_structure(layout.task, &state).map_err(invalid)?;
        if !initial_scores_zero(layout.task, &state) {
            return Err(invalid("a no-op policy would score above zero".into()));
        }
        Ok(layout)
    }

    /// Block and region ids follow file order, starting at zero.
    pub fn to_state(&self) -> WorkspaceState {
        WorkspaceState {
            robot: RobotConfig::at(Pose::new(self.robot.x, self.robot.y, self.robot.theta)),
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| Block::new(i as u32, b.shape, b.colour, Pose::new(b.x, b.y, b.theta)))
                .collect(),
            regions: self
                .regions
                .iter()
                .enumerate()
                .map(|(i, r)| GoalRegion {
                    id: i as u32,
                    colour: r.colour,
                    centre: [r.x, r.y],
                    width: r.width,
                    height: r.height,
                })
                .collect(),
            t: 0,
        }
    }
}

fn all_demo_states() -> &'static [WorkspaceState] {
    static STATES: OnceLock<Vec<WorkspaceState>> = OnceLock::new();
    STATES.get_or_init(|| {
        SOURCES
            .iter()
            .map(|(task, name, text)| {
                let layout = DemoLayout::parse(name, text).unwrap_or_else(|e| panic!("shipped demo layout: {e}"));
                assert_eq!(layout.task, *task, "{name} declares the wrong task");
                layout.to_state()
            })
            .collect()
    })
}

/// The demonstration-variant initial state for a task.
pub fn demo_state(task: TaskId) -> &'static WorkspaceState {
    &all_demo_states()[usize::from(task.index())]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_layouts_parse() {
        for (task, name, text) in SOURCES {
            let layout = DemoLayout::parse(name, text).unwrap();
            assert_eq!(layout.task, task);
        }
    }

    #[test]
    fn rejects_wrong_version() {
        let text = SOURCES[0].2.replace("format_version = 1", "format_version = 2");
        assert!(matches!(DemoLayout::parse("x", &text), Err(Error::InvalidLayout { .. })));
    }

    #[test]
    fn rejects_broken_constraints() {
        // MoveToRegion with its region removed.
        let text = SOURCES[1].2.split("[[regions]]").next().unwrap().to_string();
        assert!(DemoLayout::parse("mtr", &text).is_err());
    }
}
