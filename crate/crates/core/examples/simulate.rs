//! Steps the physics directly: drive forward, turn, then grab the nearest block.

use magbench::sim::{step_sim, Action, Angular, Gripper, Longitudinal};
use magbench::tasks::{demo_variant, TaskId};

fn main() {
    let spec = demo_variant(TaskId::FixColour);
    let mut state = spec.initial_state.clone();
    let plan = [
        (Gripper::Open, Longitudinal::Forward, Angular::Straight, 6),
        (Gripper::Open, Longitudinal::Stop, Angular::Left, 4),
        (Gripper::Closed, Longitudinal::Forward, Angular::Straight, 6),
        (Gripper::Closed, Longitudinal::Back, Angular::Right, 4),
    ];
    for (g, l, a, n) in plan {
        let action = Action::from_parts(g, l, a);
        for _ in 0..n {
            state = step_sim(&state, action, &spec.rho);
        }
        let p = state.robot.pose;
        println!(
            "t={:>2} action={:>2} robot=({:+.3}, {:+.3}, {:+.2} rad) holding={:?}",
            state.t,
            action.index(),
            p.x,
            p.y,
            p.theta,
            state.robot.held_block()
        );
    }
}
