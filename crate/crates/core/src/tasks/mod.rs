//! Tasks, their demonstration layouts, and the test-variant samplers.

mod constraints;
mod layout;
mod sampler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{DynamicsVector, WorkspaceState};

pub use constraints::{check_structure, initial_scores_zero, non_overlapping};
pub use layout::{demo_state, DemoLayout, LAYOUT_FORMAT_VERSION};
pub use sampler::{sample_dynamics_vector, sample_variant, DYNAMICS_RANGE, JITTER_ANGLE, JITTER_POSITION, MAX_SAMPLING_ATTEMPTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    MoveToCorner,
    MoveToRegion,
    MatchRegions,
    MakeLine,
    FindDupe,
    FixColour,
    ClusterColour,
    ClusterShape,
}

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        TaskId::MoveToCorner,
        TaskId::MoveToRegion,
        TaskId::MatchRegions,
        TaskId::MakeLine,
        TaskId::FindDupe,
        TaskId::FixColour,
        TaskId::ClusterColour,
        TaskId::ClusterShape,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskId::MoveToCorner => "MoveToCorner",
            TaskId::MoveToRegion => "MoveToRegion",
            TaskId::MatchRegions => "MatchRegions",
            TaskId::MakeLine => "MakeLine",
            TaskId::FindDupe => "FindDupe",
            TaskId::FixColour => "FixColour",
            TaskId::ClusterColour => "ClusterColour",
            TaskId::ClusterShape => "ClusterShape",
        }
    }

    /// Two- or three-letter abbreviation (MTC, MTR, ...).
    pub fn code(self) -> &'static str {
        match self {
            TaskId::MoveToCorner => "MTC",
            TaskId::MoveToRegion => "MTR",
            TaskId::MatchRegions => "MR",
            TaskId::MakeLine => "ML",
            TaskId::FindDupe => "FD",
            TaskId::FixColour => "FC",
            TaskId::ClusterColour => "CC",
            TaskId::ClusterShape => "CS",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = Error;

    /// Accepts the full name or the abbreviation, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s) || t.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantKind {
    Demo,
    Jitter,
    Layout,
    Colour,
    Shape,
    CountPlus,
    Dynamics,
    All,
}

impl VariantKind {
    pub const ALL: [VariantKind; 8] = [
        VariantKind::Demo,
        VariantKind::Jitter,
        VariantKind::Layout,
        VariantKind::Colour,
        VariantKind::Shape,
        VariantKind::CountPlus,
        VariantKind::Dynamics,
        VariantKind::All,
    ];

    /// The seven test variants (everything but `Demo`).
    pub const TEST: [VariantKind; 7] = [
        VariantKind::Jitter,
        VariantKind::Layout,
        VariantKind::Colour,
        VariantKind::Shape,
        VariantKind::CountPlus,
        VariantKind::Dynamics,
        VariantKind::All,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Demo => "Demo",
            VariantKind::Jitter => "Jitter",
            VariantKind::Layout => "Layout",
            VariantKind::Colour => "Colour",
            VariantKind::Shape => "Shape",
            VariantKind::CountPlus => "CountPlus",
            VariantKind::Dynamics => "Dynamics",
            VariantKind::All => "All",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariantKind::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant '{s}'")))
    }
}

/// Fixed episode length for a task.
pub fn task_horizon(task: TaskId) -> u32 {
    match task {
        TaskId::MoveToCorner => 80,
        TaskId::MoveToRegion => 40,
        TaskId::MatchRegions => 120,
        TaskId::MakeLine => 180,
        TaskId::FindDupe => 100,
        TaskId::FixColour => 60,
        TaskId::ClusterColour | TaskId::ClusterShape => 320,
    }
}

/// Whether a variant kind is defined for a task.
pub fn variant_applicable(task: TaskId, variant: VariantKind) -> bool {
    !matches!(
        (task, variant),
        (TaskId::MoveToCorner, VariantKind::Layout | VariantKind::CountPlus)
            | (TaskId::MoveToRegion, VariantKind::Shape | VariantKind::CountPlus)
    )
}

/// A fully resolved episode: initial state, hidden dynamics and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub task: TaskId,
    pub variant: VariantKind,
    pub seed: u64,
    pub initial_state: WorkspaceState,
    pub rho: DynamicsVector,
    pub horizon: u32,
}

/// The fixed demonstration episode for a task.
pub fn demo_variant(task: TaskId) -> EpisodeSpec {
    EpisodeSpec {
        task,
        variant: VariantKind::Demo,
        seed: 0,
        initial_state: demo_state(task).clone(),
        rho: DynamicsVector::ONES,
        horizon: task_horizon(task),
    }
}

/// Resolves `(task, variant, seed)` to an episode; `Demo` ignores the seed
/// apart from recording it.
pub fn episode_spec(task: TaskId, variant: VariantKind, seed: u64) -> Result<EpisodeSpec> {
    if variant == VariantKind::Demo {
        let mut spec = demo_variant(task);
        spec.seed = seed;
        Ok(spec)
    } else {
        sample_variant(task, variant, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons() {
        let expected = [80, 40, 120, 180, 100, 60, 320, 320];
        for (t, h) in TaskId::ALL.into_iter().zip(expected) {
            assert_eq!(task_horizon(t), h, "{t}");
        }
    }

    #[test]
    fn applicability_examples() {
        assert!(!variant_applicable(TaskId::MoveToCorner, VariantKind::Layout));
        assert!(!variant_applicable(TaskId::MoveToRegion, VariantKind::Shape));
        assert!(variant_applicable(TaskId::MatchRegions, VariantKind::CountPlus));
        for t in TaskId::ALL {
            assert!(variant_applicable(t, VariantKind::Demo));
        }
    }

    #[test]
    fn parse_names_and_codes() {
        assert_eq!("mtc".parse::<TaskId>().unwrap(), TaskId::MoveToCorner);
        assert_eq!("ClusterShape".parse::<TaskId>().unwrap(), TaskId::ClusterShape);
        assert!("nope".parse::<TaskId>().is_err());
        assert_eq!("countplus".parse::<VariantKind>().unwrap(), VariantKind::CountPlus);
    }

    #[test]
    fn demo_is_constant() {
        for t in TaskId::ALL {
            assert_eq!(demo_variant(t), demo_variant(t));
            assert_eq!(demo_variant(t).rho, DynamicsVector::ONES);
        }
    }

    #[test]
    fn demo_structure_examples() {
        let mtc = demo_variant(TaskId::MoveToCorner).initial_state;
        assert_eq!((mtc.blocks.len(), mtc.regions.len()), (1, 0));
        assert!(mtc.blocks[0].pose.x > 0.0 && mtc.blocks[0].pose.y < 0.0);
        let mtr = demo_variant(TaskId::MoveToRegion).initial_state;
        assert_eq!((mtr.blocks.len(), mtr.regions.len()), (0, 1));
    }
}
