use proptest::prelude::*;

use magbench::augment::{augment_stack, sample_augmentation, AugmentationParams};
use magbench::env::{decode_trajectory, encode_trajectory, replay_trajectory, SaveOptions};
use magbench::eval::{overall_performance, ScoreStats};
use magbench::render::{render_frame, Frame, Observation, ViewKind, FRAME_BYTES};
use magbench::scoring::score_states;
use magbench::sim::{step_sim, Action, Angular, Gripper, Longitudinal, WORKSPACE_HALF};
use magbench::tasks::{episode_spec, variant_applicable, TaskId, VariantKind};
use magbench::wire::keys_to_action;
use magbench::wire::protocol::parse_message;

fn task() -> impl Strategy<Value = TaskId> {
    (0..8u8).prop_map(|i| TaskId::from_index(i).unwrap())
}

fn cell() -> impl Strategy<Value = (TaskId, VariantKind)> {
    (task(), 0..8u8)
        .prop_map(|(t, v)| (t, VariantKind::from_index(v).unwrap()))
        .prop_filter("applicable", |(t, v)| variant_applicable(*t, *v))
}

fn actions(max: usize) -> impl Strategy<Value = Vec<Action>> {
    prop::collection::vec((0..18u8).prop_map(|i| Action::new(i).unwrap()), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn physics_keeps_states_valid((task, variant) in cell(), seed in 0..10_000u64, acts in actions(60)) {
        let spec = episode_spec(task, variant, seed).unwrap();
        let mut s = spec.initial_state.clone();
        for (k, a) in acts.iter().enumerate() {
            let next = step_sim(&s, *a, &spec.rho);
            prop_assert_eq!(next.t, s.t + 1);
            prop_assert!(next.validate().is_ok(), "step {}: {:?}", k, next.validate());
            let p = next.robot.pose;
            prop_assert!(p.x.abs() <= WORKSPACE_HALF && p.y.abs() <= WORKSPACE_HALF);
            prop_assert_eq!(next.blocks.len(), s.blocks.len());
            prop_assert_eq!(&next.regions, &s.regions);
            prop_assert_eq!(&step_sim(&s, *a, &spec.rho), &next);
            s = next;
        }
        let score = score_states(task, &spec.initial_state, &s).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&score));
    }

    #[test]
    fn sampling_is_a_pure_function((task, variant) in cell(), seed in any::<u64>()) {
        let a = episode_spec(task, variant, seed).unwrap();
        prop_assert_eq!(&a, &episode_spec(task, variant, seed).unwrap());
        prop_assert!(a.initial_state.validate().is_ok());
        prop_assert!(a.rho.is_valid());
    }

    #[test]
    fn trajectory_bytes_round_trip(seed in 0..1000u64, elide in any::<bool>()) {
        let task = TaskId::ALL[(seed % 8) as usize];
        let spec = episode_spec(task, VariantKind::Demo, seed).unwrap();
        let acts: Vec<Action> = (0..spec.horizon).map(|i| Action::new(((seed + u64::from(i) * 7) % 18) as u8).unwrap()).collect();
        let traj = replay_trajectory(&spec, &acts).unwrap();
        let bytes = encode_trajectory(&traj, SaveOptions { elide_states: elide }).unwrap();
        let back = decode_trajectory(&bytes).unwrap();
        prop_assert_eq!(&back.actions, &traj.actions);
        prop_assert_eq!(&back.states, &traj.states);
        prop_assert_eq!(back.score, traj.score);
    }

    #[test]
    fn corrupted_trajectories_are_rejected(flip in 0usize..4096, bit in 0u8..8) {
        let spec = episode_spec(TaskId::MoveToRegion, VariantKind::Layout, 3).unwrap();
        let acts: Vec<Action> = (0..spec.horizon).map(|i| Action::new((i % 18) as u8).unwrap()).collect();
        let traj = replay_trajectory(&spec, &acts).unwrap();
        let mut bytes = encode_trajectory(&traj, SaveOptions::default()).unwrap();
        let i = flip % bytes.len();
        bytes[i] ^= 1 << bit;
        prop_assert!(decode_trajectory(&bytes).is_err());
        prop_assert!(decode_trajectory(&bytes[..i]).is_err());
    }

    #[test]
    fn key_precedence(up: bool, down: bool, left: bool, right: bool, space: bool, junk: bool) {
        let mut held = Vec::new();
        for (on, k) in [(up, "Up"), (down, "Down"), (left, "Left"), (right, "Right"), (space, "Space"), (junk, "Tab")] {
            if on {
                held.push(k);
            }
        }
        let (g, l, a) = keys_to_action(&held).parts();
        prop_assert_eq!(g, if space { Gripper::Closed } else { Gripper::Open });
        prop_assert_eq!(l, if up { Longitudinal::Forward } else if down { Longitudinal::Back } else { Longitudinal::Stop });
        prop_assert_eq!(a, if left { Angular::Left } else if right { Angular::Right } else { Angular::Straight });
    }

    #[test]
    fn action_parts_round_trip(i in 0..18u8) {
        let a = Action::new(i).unwrap();
        let (g, l, ang) = a.parts();
        prop_assert_eq!(Action::from_parts(g, l, ang), a);
    }

    #[test]
    fn parser_never_panics(s in ".{0,200}") {
        let _ = parse_message(&s);
    }

    #[test]
    fn overall_is_permutation_invariant(means in prop::collection::vec(0.0..=1.0f64, 1..8), rot in 0usize..8) {
        let cells: Vec<ScoreStats> = means
            .iter()
            .enumerate()
            .map(|(i, m)| ScoreStats::from_runs(TaskId::ALL[i], VariantKind::Demo, "p", vec![*m], 1))
            .collect();
        let mut rotated = cells.clone();
        rotated.rotate_left(rot % cells.len());
        let a = overall_performance(&cells).unwrap();
        let b = overall_performance(&rotated).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!((0.0..=1.0).contains(&a.value));
    }

    #[test]
    fn png_round_trip(seed in any::<u64>()) {
        let data: Vec<u8> = (0..FRAME_BYTES as u64).map(|i| (seed.wrapping_mul(i + 1) >> 13) as u8).collect();
        let f = Frame::from_raw(data).unwrap();
        prop_assert_eq!(Frame::from_png(&f.to_png()).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn augmentation_respects_its_bounds(seed in any::<u64>(), task in task()) {
        let params = AugmentationParams::default();
        let a = sample_augmentation(seed, &params).unwrap();
        prop_assert!(a.dx.abs() <= 4.8 && a.dy.abs() <= 4.8);
        prop_assert!(a.angle_deg.abs() <= 5.0);
        prop_assert!((0.99..=1.01).contains(&a.lum_scale));
        prop_assert!(a.ab_angle.abs() <= 0.15);
        let f = render_frame(&episode_spec(task, VariantKind::Demo, 0).unwrap().initial_state, ViewKind::Allocentric);
        let obs = Observation { frames: std::array::from_fn(|_| f.clone()), view: ViewKind::Allocentric };
        let out = augment_stack(&obs, seed, &params).unwrap();
        prop_assert_eq!(&out, &augment_stack(&obs, seed, &params).unwrap());
        prop_assert_eq!(augment_stack(&obs, seed, &AugmentationParams::identity()).unwrap(), obs);
    }
}
