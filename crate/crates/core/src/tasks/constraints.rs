use super::TaskId;
use crate::scoring::{self, attribute_coverage, block_in_region};
use crate::sim::geometry::{self, Collider};
use crate::sim::{WorkspaceState, ROBOT_RADIUS};

/// True when no two collision shapes interpenetrate (robot included).
pub fn non_overlapping(state: &WorkspaceState) -> bool {
    let colliders: Vec<Collider> = state
        .blocks
        .iter()
        .map(|b| Collider::for_block(b.shape, &b.pose))
        .collect();
    let robot = Collider::Circle {
        centre: state.robot.pose.position(),
        radius: ROBOT_RADIUS,
    };
    for (i, a) in colliders.iter().enumerate() {
        if geometry::contact(&robot, a).is_some() {
            return false;
        }
        if colliders[i + 1..].iter().any(|b| geometry::contact(a, b).is_some()) {
            return false;
        }
    }
    true
}

/// A state left untouched for a whole episode must score zero.
pub fn initial_scores_zero(task: TaskId, state: &WorkspaceState) -> bool {
    matches!(scoring::score_states(task, state, state), Ok(s) if s.value() == 0.0)
}

/// Checks the per-task structural constraints on an initial state.
pub fn check_structure(task: TaskId, s: &WorkspaceState) -> Result<(), String> {
    s.validate()?;
    if s.t != 0 {
        return Err("initial state must have t = 0".into());
    }
    if !non_overlapping(s) {
        return Err("entities overlap".into());
    }
    let nb = s.blocks.len();
    let nr = s.regions.len();
    match task {
        TaskId::MoveToCorner => {
            if nb != 1 || nr != 0 {
                return Err(format!("needs 1 block and no regions, has {nb}/{nr}"));
            }
            let p = s.blocks[0].pose;
            if !(p.x > 0.0 && p.y < 0.0) {
                return Err("block must start in the lower-right quadrant".into());
            }
        }
        TaskId::MoveToRegion => {
            if nb != 0 || nr != 1 {
                return Err(format!("needs no blocks and 1 region, has {nb}/{nr}"));
            }
        }
        TaskId::MatchRegions => {
            if nr != 1 {
                return Err(format!("needs exactly one region, has {nr}"));
            }
            if !s.blocks.iter().any(|b| b.colour == s.regions[0].colour) {
                return Err("no block matches the region colour".into());
            }
        }
        TaskId::MakeLine => {
            if nb < 2 || nr != 0 {
                return Err(format!("needs at least 2 blocks and no regions, has {nb}/{nr}"));
            }
        }
        TaskId::FindDupe => {
            if nr != 1 {
                return Err(format!("needs exactly one region, has {nr}"));
            }
            let r = &s.regions[0];
            let inside: Vec<_> = s.blocks.iter().filter(|b| block_in_region(b, r)).collect();
            let [q] = inside.as_slice() else {
                return Err(format!("needs exactly one query block in the region, has {}", inside.len()));
            };
            if !s
                .blocks
                .iter()
                .any(|b| b.id != q.id && b.shape == q.shape && b.colour == q.colour)
            {
                return Err("query block has no duplicate outside the region".into());
            }
        }
        TaskId::FixColour => {
            if nr < 2 || nb != nr {
                return Err(format!("needs one block per region (>= 2), has {nb}/{nr}"));
            }
            for (i, a) in s.regions.iter().enumerate() {
                if s.regions[i + 1..].iter().any(|b| a.overlaps(b)) {
                    return Err("regions overlap".into());
                }
                let n = s.blocks.iter().filter(|b| block_in_region(b, a)).count();
                if n != 1 {
                    return Err(format!("region {} holds {n} blocks", a.id));
                }
            }
            if s.blocks.iter().any(|b| !s.regions.iter().any(|r| block_in_region(b, r))) {
                return Err("a block lies outside every region".into());
            }
            let mismatched = s
                .blocks
                .iter()
                .filter(|b| s.regions.iter().any(|r| block_in_region(b, r) && r.colour != b.colour))
                .count();
            if mismatched != 1 {
                return Err(format!("needs exactly one mismatched block, has {mismatched}"));
            }
        }
        TaskId::ClusterColour | TaskId::ClusterShape => {
            if nr != 0 {
                return Err("cluster tasks have no regions".into());
            }
            let (colours, shapes) = attribute_coverage(&s.blocks);
            if colours < 4 || shapes < 4 {
                return Err("needs at least one block of each colour and each shape".into());
            }
        }
    }
    Ok(())
}
