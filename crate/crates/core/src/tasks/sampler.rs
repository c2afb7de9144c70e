//! Test-variant samplers.
//!
//! Every sampler is a pure function of `(task, variant, seed)`: the seed is
//! mixed with the task and variant indices and fed to a ChaCha8 stream. A
//! candidate state is drawn, then accepted only if it satisfies the task's
//! structural constraints, has no overlapping entities and would score zero
//! under a no-op policy.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    check_structure, demo_state, initial_scores_zero, task_horizon, variant_applicable, EpisodeSpec, TaskId,
    VariantKind,
};
use crate::error::{Error, Result};
use crate::hash::{hash64, rng_from};
use crate::sim::{
    normalize_angle, Block, BlockShape, DynamicsVector, EntityColour, GoalRegion, Pose, WorkspaceState, BLOCK_RADIUS,
    ROBOT_RADIUS, WORKSPACE_HALF,
};

/// Maximum candidate states drawn before giving up.
pub const MAX_SAMPLING_ATTEMPTS: usize = 10_000;
/// Jitter bound on each position coordinate (5% of the 2-unit range).
pub const JITTER_POSITION: f64 = 0.05 * 2.0 * WORKSPACE_HALF;
/// Jitter bound on headings (5% of a full turn).
pub const JITTER_ANGLE: f64 = 0.05 * 2.0 * PI;
/// Range of each dynamics multiplier.
pub const DYNAMICS_RANGE: (f64, f64) = (0.85, 1.15);

const SAMPLE_TAG: u64 = 0x5641_5249_414E_5453; // "VARIANTS"
const DYNAMICS_TAG: u64 = 0x0044_594E_414D_4943; // "DYNAMIC"

const PLACEMENT_TRIES: usize = 100;
const SPAWN_MARGIN: f64 = 0.02;
const REGION_GAP: f64 = 0.04;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

/// Five i.i.d. uniform multipliers on friction and motor strength.
pub fn sample_dynamics_vector(seed: u64) -> DynamicsVector {
    let mut rng = rng_from(&[DYNAMICS_TAG, seed]);
    let (lo, hi) = DYNAMICS_RANGE;
    let mut draw = || uniform(&mut rng, lo, hi);
    DynamicsVector {
        block_friction: draw(),
        robot_friction: draw(),
        motor_rot: draw(),
        motor_long: draw(),
        motor_grip: draw(),
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Recipe {
    jitter: bool,
    layout: bool,
    count: bool,
    colour: bool,
    shape: bool,
    dynamics: bool,
}

impl Recipe {
    fn for_variant(task: TaskId, variant: VariantKind) -> Self {
        let mut r = Recipe::default();
        let kinds: &[VariantKind] = if variant == VariantKind::All {
            &VariantKind::TEST
        } else {
            std::slice::from_ref(&variant)
        };
        for &k in kinds {
            if k == VariantKind::All || !variant_applicable(task, k) {
                continue;
            }
            match k {
                VariantKind::Jitter => r.jitter = true,
                VariantKind::Layout => r.layout = true,
                VariantKind::Colour => r.colour = true,
                VariantKind::Shape => r.shape = true,
                VariantKind::CountPlus => r.count = true,
                VariantKind::Dynamics => r.dynamics = true,
                VariantKind::Demo | VariantKind::All => {}
            }
        }
        // Full re-placement subsumes jitter.
        if r.layout || r.count {
            r.jitter = false;
        }
        r
    }
}

/// Draws an episode from a test variant (or returns the demo episode).
pub fn sample_variant(task: TaskId, variant: VariantKind, seed: u64) -> Result<EpisodeSpec> {
    if !variant_applicable(task, variant) {
        return Err(Error::UnsupportedVariant { task, variant });
    }
    let recipe = Recipe::for_variant(task, variant);
    let key = [u64::from(task.index()), u64::from(variant.index()), seed];
    let rho = if recipe.dynamics {
        sample_dynamics_vector(hash64(&key))
    } else {
        DynamicsVector::ONES
    };
    let demo = demo_state(task);
    let initial_state = if variant == VariantKind::Demo {
        demo.clone()
    } else {
        let mut rng = rng_from(&[SAMPLE_TAG, key[0], key[1], key[2]]);
        draw_state(task, recipe, demo, &mut rng)?
    };
    Ok(EpisodeSpec {
        task,
        variant,
        seed,
        initial_state,
        rho,
        horizon: task_horizon(task),
    })
}

fn draw_state(task: TaskId, recipe: Recipe, demo: &WorkspaceState, rng: &mut ChaCha8Rng) -> Result<WorkspaceState> {
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let mut s = demo.clone();
        if recipe.count {
            repopulate(task, &mut s, rng);
        }
        if recipe.colour {
            for r in &mut s.regions {
                r.colour = pick(rng, &EntityColour::ALL);
            }
            for b in &mut s.blocks {
                b.colour = pick(rng, &EntityColour::ALL);
            }
        }
        if recipe.shape {
            for b in &mut s.blocks {
                b.shape = pick(rng, &BlockShape::ALL);
            }
        }
        if recipe.layout || recipe.count {
            if !place(task, &mut s, rng) {
                continue;
            }
        } else if recipe.jitter {
            jitter(&mut s, rng);
        }
        if check_structure(task, &s).is_ok() && initial_scores_zero(task, &s) {
            return Ok(s);
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLING_ATTEMPTS))
}

/// Block count range used by the CountPlus variant (regions for FixColour).
pub(crate) fn count_range(task: TaskId) -> Option<(usize, usize)> {
    match task {
        TaskId::MatchRegions => Some((3, 8)),
        TaskId::MakeLine | TaskId::FindDupe => Some((4, 8)),
        TaskId::FixColour => Some((3, 5)),
        TaskId::ClusterColour | TaskId::ClusterShape => Some((8, 16)),
        TaskId::MoveToCorner | TaskId::MoveToRegion => None,
    }
}

fn random_block(id: u32, rng: &mut ChaCha8Rng) -> Block {
    let shape = pick(rng, &BlockShape::ALL);
    let colour = pick(rng, &EntityColour::ALL);
    Block::new(id, shape, colour, Pose::new(0.0, 0.0, 0.0))
}

/// Replaces the population with a freshly sized one of random attributes.
/// Positions are assigned later by [`place`].
fn repopulate(task: TaskId, s: &mut WorkspaceState, rng: &mut ChaCha8Rng) {
    let Some((lo, hi)) = count_range(task) else {
        return;
    };
    let n = rng.random_range(lo..=hi);
    if task == TaskId::FixColour {
        let mismatched = rng.random_range(0..n);
        s.regions = (0..n as u32)
            .map(|id| GoalRegion {
                id,
                colour: pick(rng, &EntityColour::ALL),
                centre: [0.0, 0.0],
                width: 0.4,
                height: 0.4,
            })
            .collect();
        s.blocks = (0..n)
            .map(|i| {
                let region_colour = s.regions[i].colour;
                let colour = if i == mismatched {
                    let others: Vec<_> = EntityColour::ALL.into_iter().filter(|c| *c != region_colour).collect();
                    pick(rng, &others)
                } else {
                    region_colour
                };
                let shape = pick(rng, &BlockShape::ALL);
                Block::new(i as u32, shape, colour, Pose::new(0.0, 0.0, 0.0))
            })
            .collect();
    } else {
        s.blocks = (0..n as u32).map(|id| random_block(id, rng)).collect();
    }
}

fn region_dims(task: TaskId, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (lo, hi) = if task == TaskId::FixColour { (0.3, 0.5) } else { (0.3, 0.7) };
    (uniform(rng, lo, hi), uniform(rng, lo, hi))
}

/// Uniform point inside `r`, kept one block radius from its edges.
fn point_in_region(r: &GoalRegion, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let (x0, y0, x1, y1) = r.bounds();
    [
        uniform(rng, x0 + BLOCK_RADIUS, x1 - BLOCK_RADIUS),
        uniform(rng, y0 + BLOCK_RADIUS, y1 - BLOCK_RADIUS),
    ]
}

/// Randomizes every pose, region position and region size. Returns false
/// when some entity could not be placed.
fn place(task: TaskId, s: &mut WorkspaceState, rng: &mut ChaCha8Rng) -> bool {
    let mut regions: Vec<GoalRegion> = Vec::with_capacity(s.regions.len());
    for r in &s.regions {
        let (w, h) = region_dims(task, rng);
        let mut ok = false;
        for _ in 0..PLACEMENT_TRIES {
            let candidate = GoalRegion {
                centre: [
                    uniform(rng, -WORKSPACE_HALF + w / 2.0, WORKSPACE_HALF - w / 2.0),
                    uniform(rng, -WORKSPACE_HALF + h / 2.0, WORKSPACE_HALF - h / 2.0),
                ],
                width: w,
                height: h,
                ..r.clone()
            };
            let padded = GoalRegion {
                width: w + REGION_GAP,
                height: h + REGION_GAP,
                ..candidate.clone()
            };
            if task == TaskId::FixColour && regions.iter().any(|o| padded.overlaps(o)) {
                continue;
            }
            regions.push(candidate);
            ok = true;
            break;
        }
        if !ok {
            return false;
        }
    }
    s.regions = regions;

    let lim = WORKSPACE_HALF - ROBOT_RADIUS;
    let robot = Pose::new(uniform(rng, -lim, lim), uniform(rng, -lim, lim), uniform(rng, -PI, PI));
    s.robot.pose = robot;

    let lim = WORKSPACE_HALF - BLOCK_RADIUS;
    let robot_clear = ROBOT_RADIUS + BLOCK_RADIUS + SPAWN_MARGIN;
    let block_clear = 2.0 * BLOCK_RADIUS + SPAWN_MARGIN;
    let mut placed: Vec<[f64; 2]> = Vec::with_capacity(s.blocks.len());
    for i in 0..s.blocks.len() {
        let home = match task {
            TaskId::FindDupe if i == 0 => s.regions.first(),
            TaskId::FixColour => s.regions.get(i),
            _ => None,
        };
        let must_avoid_regions = matches!(task, TaskId::FindDupe | TaskId::MatchRegions) && home.is_none();
        let mut found = None;
        for _ in 0..PLACEMENT_TRIES {
            let p = match home {
                Some(r) => point_in_region(r, rng),
                None => [uniform(rng, -lim, lim), uniform(rng, -lim, lim)],
            };
            let clear_robot = dist(p, robot.position()) >= robot_clear;
            let clear_blocks = placed.iter().all(|q| dist(p, *q) >= block_clear);
            let clear_regions = !must_avoid_regions || !s.regions.iter().any(|r| r.contains(p));
            if clear_robot && clear_blocks && clear_regions {
                found = Some(p);
                break;
            }
        }
        let Some(p) = found else {
            return false;
        };
        placed.push(p);
        s.blocks[i].pose = Pose::new(p[0], p[1], uniform(rng, -PI, PI));
    }
    true
}

/// `x` displaced by at most `bound`, measured as `|x' - x|` in floating point.
fn jitter_coord(x: f64, bound: f64, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let moved = x + uniform(rng, -bound, bound);
        if (moved - x).abs() <= bound {
            return moved;
        }
    }
}

fn jitter_angle(theta: f64, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let moved = normalize_angle(theta + uniform(rng, -JITTER_ANGLE, JITTER_ANGLE));
        if normalize_angle(moved - theta).abs() <= JITTER_ANGLE {
            return moved;
        }
    }
}

fn jitter_pose(p: &Pose, radius: f64, rng: &mut ChaCha8Rng) -> Pose {
    let lim = WORKSPACE_HALF - radius;
    Pose {
        x: jitter_coord(p.x, JITTER_POSITION, rng).clamp(-lim, lim),
        y: jitter_coord(p.y, JITTER_POSITION, rng).clamp(-lim, lim),
        theta: jitter_angle(p.theta, rng),
    }
}

fn jitter(s: &mut WorkspaceState, rng: &mut ChaCha8Rng) {
    s.robot.pose = jitter_pose(&s.robot.pose, ROBOT_RADIUS, rng);
    for b in &mut s.blocks {
        b.pose = jitter_pose(&b.pose, BLOCK_RADIUS, rng);
    }
    for r in &mut s.regions {
        let lx = WORKSPACE_HALF - r.width / 2.0;
        let ly = WORKSPACE_HALF - r.height / 2.0;
        r.centre = [
            jitter_coord(r.centre[0], JITTER_POSITION, rng).clamp(-lx, lx),
            jitter_coord(r.centre[1], JITTER_POSITION, rng).clamp(-ly, ly),
        ];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inapplicable_variant() {
        assert!(matches!(
            sample_variant(TaskId::MoveToCorner, VariantKind::Layout, 0),
            Err(Error::UnsupportedVariant { .. })
        ));
        assert!(sample_variant(TaskId::MoveToRegion, VariantKind::CountPlus, 3).is_err());
    }

    #[test]
    fn dynamics_only_touches_rho() {
        for seed in 0..20 {
            let spec = sample_variant(TaskId::MoveToRegion, VariantKind::Dynamics, seed).unwrap();
            assert_eq!(&spec.initial_state, demo_state(TaskId::MoveToRegion));
            assert_ne!(spec.rho, DynamicsVector::ONES);
        }
    }

    #[test]
    fn same_arguments_same_spec() {
        for task in TaskId::ALL {
            for v in VariantKind::ALL {
                if variant_applicable(task, v) {
                    let a = sample_variant(task, v, 42).unwrap();
                    let b = sample_variant(task, v, 42).unwrap();
                    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
                }
            }
        }
    }

    #[test]
    fn dynamics_vector_determinism_and_range() {
        assert_eq!(sample_dynamics_vector(9), sample_dynamics_vector(9));
        assert_ne!(sample_dynamics_vector(9), sample_dynamics_vector(10));
        let n = 10_000;
        let mut sums = [0.0; 5];
        for seed in 0..n {
            let v = sample_dynamics_vector(seed).to_array();
            for (s, x) in sums.iter_mut().zip(v) {
                assert!((0.85..=1.15).contains(&x));
                *s += x;
            }
        }
        for s in sums {
            assert!((s / n as f64 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn count_plus_respects_ranges() {
        for task in TaskId::ALL {
            let Some((lo, hi)) = count_range(task) else { continue };
            for seed in 0..30 {
                let s = sample_variant(task, VariantKind::CountPlus, seed).unwrap().initial_state;
                let n = if task == TaskId::FixColour { s.regions.len() } else { s.blocks.len() };
                assert!((lo..=hi).contains(&n), "{task} n={n}");
            }
        }
    }

    #[test]
    fn colour_and_shape_keep_geometry() {
        for task in [TaskId::MatchRegions, TaskId::FindDupe, TaskId::FixColour, TaskId::ClusterColour] {
            let demo = demo_state(task);
            for v in [VariantKind::Colour, VariantKind::Shape] {
                let s = sample_variant(task, v, 5).unwrap().initial_state;
                assert_eq!(s.robot, demo.robot);
                for (a, b) in s.blocks.iter().zip(&demo.blocks) {
                    assert_eq!(a.pose, b.pose);
                }
            }
        }
    }

    #[test]
    fn all_variant_combines_axes() {
        let spec = sample_variant(TaskId::MoveToCorner, VariantKind::All, 1).unwrap();
        assert_ne!(spec.rho, DynamicsVector::ONES);
        assert_eq!(spec.initial_state.blocks.len(), 1);
        let cc = sample_variant(TaskId::ClusterColour, VariantKind::All, 1).unwrap();
        assert!(cc.initial_state.blocks.len() >= 8);
    }
}
