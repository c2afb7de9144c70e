//! Trajectory scoring functions, one per task.
//!
//! Every scorer looks only at the final state of a trajectory, plus the initial
//! state for the tasks whose goal is defined relative to it (FindDupe,
//! FixColour). Block-in-region tests use the block centroid against the closed
//! region rectangle.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Block, BlockShape, EntityColour, GoalRegion, WorkspaceState};
use crate::env::Trajectory;
use crate::tasks::TaskId;

/// Inlier distance from a candidate line.
pub const LINE_INLIER_DIST: f64 = 0.18;
/// Largest gap between consecutive blocks along a line.
pub const LINE_CHAIN_GAP: f64 = 0.42;

/// A score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Score(f64);

impl Score {
    pub const ZERO: Score = Score(0.0);
    pub const ONE: Score = Score(1.0);

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            Score(0.0)
        } else {
            Score(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.0
    }
}

/// Attribute used by the clustering tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterAttribute {
    Colour,
    Shape,
}

impl ClusterAttribute {
    fn key(self, b: &Block) -> u8 {
        match self {
            ClusterAttribute::Colour => b.colour.index(),
            ClusterAttribute::Shape => b.shape.index(),
        }
    }
}

pub fn block_in_region(block: &Block, region: &GoalRegion) -> bool {
    region.contains(block.pose.position())
}

fn single_region(state: &WorkspaceState) -> Result<&GoalRegion> {
    match state.regions.as_slice() {
        [r] => Ok(r),
        rs => Err(Error::MalformedState(format!(
            "expected exactly one goal region, found {}",
            rs.len()
        ))),
    }
}

pub fn score_move_to_corner(final_state: &WorkspaceState) -> Result<Score> {
    let [block] = final_state.blocks.as_slice() else {
        return Err(Error::MalformedState(format!(
            "expected exactly one block, found {}",
            final_state.blocks.len()
        )));
    };
    let dx = block.pose.x + 1.0;
    let dy = block.pose.y - 1.0;
    let d = (dx * dx + dy * dy).sqrt();
    let inner = SQRT_2 / 2.0;
    let value = if d <= inner {
        1.0
    } else if d >= SQRT_2 {
        0.0
    } else {
        (SQRT_2 - d) / inner
    };
    Ok(Score::new(value))
}

pub fn score_move_to_region(final_state: &WorkspaceState) -> Result<Score> {
    let region = single_region(final_state)?;
    let inside = region.contains(final_state.robot.pose.position());
    Ok(if inside { Score::ONE } else { Score::ZERO })
}

pub fn score_match_regions(final_state: &WorkspaceState) -> Result<Score> {
    let region = single_region(final_state)?;
    let mut targets = 0usize;
    let mut targets_in = 0usize;
    let mut distractors_in = 0usize;
    for b in &final_state.blocks {
        let is_target = b.colour == region.colour;
        let inside = block_in_region(b, region);
        if is_target {
            targets += 1;
            targets_in += usize::from(inside);
        } else {
            distractors_in += usize::from(inside);
        }
    }
    if targets == 0 {
        return Err(Error::MalformedState("no blocks match the goal colour".into()));
    }
    let in_region = targets_in + distractors_in;
    let bonus = targets_in as f64 / targets as f64;
    let penalty = if in_region == 0 {
        1.0
    } else {
        1.0 - distractors_in as f64 / in_region as f64
    };
    Ok(Score::new(bonus * penalty))
}

/// Number of blocks in the largest chained line through any pair of blocks.
pub fn largest_line_count(blocks: &[Block]) -> Result<usize> {
    if blocks.is_empty() {
        return Err(Error::MalformedState("no blocks".into()));
    }
    let pts: Vec<[f64; 2]> = blocks.iter().map(|b| b.pose.position()).collect();
    let mut best = 1usize;
    let mut proj = Vec::with_capacity(pts.len());
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let dir = [b[0] - a[0], b[1] - a[1]];
            let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            if len == 0.0 {
                continue;
            }
            let u = [dir[0] / len, dir[1] / len];
            proj.clear();
            for p in &pts {
                let r = [p[0] - a[0], p[1] - a[1]];
                let off = (r[0] * u[1] - r[1] * u[0]).abs();
                if off <= LINE_INLIER_DIST {
                    proj.push(r[0] * u[0] + r[1] * u[1]);
                }
            }
            proj.sort_by(f64::total_cmp);
            let mut run = 1usize;
            for w in proj.windows(2) {
                if w[1] - w[0] <= LINE_CHAIN_GAP {
                    run += 1;
                } else {
                    run = 1;
                }
                best = best.max(run);
            }
        }
    }
    Ok(best)
}

pub fn score_make_line(final_state: &WorkspaceState) -> Result<Score> {
    let n = final_state.blocks.len();
    let m = largest_line_count(&final_state.blocks)?;
    Ok(if m >= n {
        Score::ONE
    } else if m + 1 == n {
        Score::new(0.5)
    } else {
        Score::ZERO
    })
}

/// The unique block inside the single goal region.
fn query_block(state: &WorkspaceState) -> Result<&Block> {
    let region = single_region(state)?;
    let mut inside = state.blocks.iter().filter(|b| block_in_region(b, region));
    match (inside.next(), inside.next()) {
        (Some(q), None) => Ok(q),
        (None, _) => Err(Error::MalformedState("no query block in the goal region".into())),
        _ => Err(Error::MalformedState("more than one block in the goal region initially".into())),
    }
}

pub fn score_find_dupe(initial: &WorkspaceState, final_state: &WorkspaceState) -> Result<Score> {
    let query = query_block(initial)?;
    let (qid, qshape, qcolour) = (query.id, query.shape, query.colour);
    let region = single_region(final_state)?;
    let mut targets = 0usize;
    let mut q_in = false;
    let mut targets_in = 0usize;
    let mut distractors_in = 0usize;
    let mut in_region = 0usize;
    for b in &final_state.blocks {
        let inside = block_in_region(b, region);
        in_region += usize::from(inside);
        if b.id == qid {
            q_in = inside;
        } else if b.shape == qshape && b.colour == qcolour {
            targets += 1;
            targets_in += usize::from(inside);
        } else {
            distractors_in += usize::from(inside);
        }
    }
    if targets == 0 {
        return Err(Error::MalformedState("query block has no duplicate".into()));
    }
    if !q_in || targets_in == 0 {
        return Ok(Score::ZERO);
    }
    Ok(Score::new(1.0 - distractors_in as f64 / in_region as f64))
}

/// Index of the region containing each block (first match), by block id.
fn region_of(state: &WorkspaceState, b: &Block) -> Option<u32> {
    state
        .regions
        .iter()
        .find(|r| block_in_region(b, r))
        .map(|r| r.id)
}

/// Id of the single block whose colour differs from its enclosing region.
pub fn mismatched_block(state: &WorkspaceState) -> Result<u32> {
    let mut found = Vec::new();
    for b in &state.blocks {
        if let Some(r) = state.regions.iter().find(|r| block_in_region(b, r)) {
            if r.colour != b.colour {
                found.push(b.id);
            }
        }
    }
    match found.as_slice() {
        [id] => Ok(*id),
        ids => Err(Error::MalformedState(format!(
            "expected exactly one mismatched block, found {}",
            ids.len()
        ))),
    }
}

pub fn score_fix_colour(initial: &WorkspaceState, final_state: &WorkspaceState) -> Result<Score> {
    let mismatched = mismatched_block(initial)?;
    // region id -> block ids inside it, at start and end
    let occupancy = |s: &WorkspaceState| {
        let mut map: BTreeMap<u32, Vec<u32>> = s.regions.iter().map(|r| (r.id, Vec::new())).collect();
        for b in &s.blocks {
            for r in &s.regions {
                if block_in_region(b, r) {
                    map.entry(r.id).or_default().push(b.id);
                }
            }
        }
        map
    };
    let mismatched_final = final_state
        .block(mismatched)
        .ok_or_else(|| Error::MalformedState("mismatched block vanished".into()))?;
    if region_of(final_state, mismatched_final).is_some() {
        return Ok(Score::ZERO);
    }
    let before = occupancy(initial);
    let after = occupancy(final_state);
    for (region, start) in &before {
        if start.contains(&mismatched) {
            continue;
        }
        if after.get(region) != Some(start) {
            return Ok(Score::ZERO);
        }
    }
    Ok(Score::ONE)
}

/// Per-block correctness under the centroid-distance clustering criterion.
pub fn cluster_correctness(attribute: ClusterAttribute, blocks: &[Block]) -> Vec<bool> {
    let mut sums: BTreeMap<u8, ([f64; 2], usize)> = BTreeMap::new();
    for b in blocks {
        let e = sums.entry(attribute.key(b)).or_insert(([0.0; 2], 0));
        e.0[0] += b.pose.x;
        e.0[1] += b.pose.y;
        e.1 += 1;
    }
    let centroids: Vec<(u8, [f64; 2])> = sums
        .into_iter()
        .map(|(k, (s, n))| (k, [s[0] / n as f64, s[1] / n as f64]))
        .collect();
    let sq = |p: [f64; 2], c: [f64; 2]| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
    blocks
        .iter()
        .map(|b| {
            let key = attribute.key(b);
            let p = b.pose.position();
            let own = centroids.iter().find(|(k, _)| *k == key).map(|(_, c)| sq(p, *c)).unwrap_or(0.0);
            let nearest_other = centroids
                .iter()
                .filter(|(k, _)| *k != key)
                .map(|(_, c)| sq(p, *c))
                .fold(f64::INFINITY, f64::min);
            own < nearest_other / 3.0
        })
        .collect()
}

pub fn score_cluster(attribute: ClusterAttribute, final_state: &WorkspaceState) -> Result<Score> {
    if final_state.blocks.is_empty() {
        return Err(Error::MalformedState("no blocks".into()));
    }
    let correct = cluster_correctness(attribute, &final_state.blocks);
    let f = correct.iter().filter(|c| **c).count() as f64 / correct.len() as f64;
    Ok(if f <= 0.5 {
        Score::ZERO
    } else {
        Score::new((f - 0.5) / 0.5)
    })
}

/// Scores a task from its initial and final states.
pub fn score_states(task: TaskId, initial: &WorkspaceState, final_state: &WorkspaceState) -> Result<Score> {
    match task {
        TaskId::MoveToCorner => score_move_to_corner(final_state),
        TaskId::MoveToRegion => score_move_to_region(final_state),
        TaskId::MatchRegions => score_match_regions(final_state),
        TaskId::MakeLine => score_make_line(final_state),
        TaskId::FindDupe => score_find_dupe(initial, final_state),
        TaskId::FixColour => score_fix_colour(initial, final_state),
        TaskId::ClusterColour => score_cluster(ClusterAttribute::Colour, final_state),
        TaskId::ClusterShape => score_cluster(ClusterAttribute::Shape, final_state),
    }
}

/// Scores a completed trajectory for `task`.
pub fn score_trajectory(task: TaskId, trajectory: &Trajectory) -> Result<Score> {
    let h = trajectory.spec.horizon as usize;
    if trajectory.actions.len() != h || trajectory.states.len() != h + 1 {
        return Err(Error::IncompleteEpisode {
            steps: trajectory.actions.len(),
            horizon: h,
        });
    }
    if trajectory.spec.task != task {
        return Err(Error::MalformedState(format!(
            "trajectory was recorded on {}, not {task}",
            trajectory.spec.task
        )));
    }
    score_states(task, trajectory.initial_state(), trajectory.final_state())
}

/// Set of colours and shapes present among `blocks`.
pub(crate) fn attribute_coverage(blocks: &[Block]) -> (usize, usize) {
    let colours: std::collections::BTreeSet<EntityColour> = blocks.iter().map(|b| b.colour).collect();
    let shapes: std::collections::BTreeSet<BlockShape> = blocks.iter().map(|b| b.shape).collect();
    (colours.len(), shapes.len())
}
