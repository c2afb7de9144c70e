//! Scores hand-edited final states.

use magbench::scoring::{score_make_line, score_move_to_region, score_states};
use magbench::sim::Pose;
use magbench::tasks::{demo_variant, TaskId};

fn main() -> magbench::Result<()> {
    // Move the robot to the goal centre.
    let spec = demo_variant(TaskId::MoveToRegion);
    let mut done = spec.initial_state.clone();
    let c = done.regions[0].centre;
    done.robot.pose = Pose::new(c[0], c[1], 0.0);
    println!("MoveToRegion, robot at goal centre: {:.3}", score_move_to_region(&done)?.value());
    println!("MoveToRegion, untouched demo:       {:.3}", score_move_to_region(&spec.initial_state)?.value());

    // Put every block on one horizontal line.
    let spec = demo_variant(TaskId::MakeLine);
    let mut line = spec.initial_state.clone();
    let n = line.blocks.len() as f64;
    for (i, b) in line.blocks.iter_mut().enumerate() {
        b.pose = Pose::new(-0.6 + 1.2 * i as f64 / (n - 1.0), -0.4, 0.0);
    }
    println!("MakeLine, all blocks in a row:      {:.3}", score_make_line(&line)?.value());

    // Task-dispatching entry point; the initial state matters for FindDupe and FixColour.
    for task in TaskId::ALL {
        let spec = demo_variant(task);
        let s = score_states(task, &spec.initial_state, &spec.initial_state)?;
        println!("{:<14} demo initial state scores {:.3}", task.name(), s.value());
    }
    Ok(())
}
