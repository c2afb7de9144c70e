//! Records a random episode, saves it without states, and reloads it by replay.

use magbench::env::{load_trajectory, make_env, rollout, save_trajectory_with, trajectory_path, SaveOptions};
use magbench::eval::random_policy;
use magbench::render::ViewKind;
use magbench::scoring::score_trajectory;
use magbench::tasks::{TaskId, VariantKind};

fn main() -> magbench::Result<()> {
    let (task, variant, seed) = (TaskId::ClusterColour, VariantKind::All, 11);
    let mut env = make_env(task, variant, seed, ViewKind::Allocentric)?;
    let traj = rollout(&mut env, &mut random_policy(seed))?;

    let root = std::env::temp_dir().join("magbench-record-replay");
    let path = trajectory_path(&root, task, variant, seed);
    std::fs::create_dir_all(path.parent().expect("has parent"))?;
    save_trajectory_with(&traj, &path, SaveOptions { elide_states: true })?;
    let bytes = std::fs::metadata(&path)?.len();

    let loaded = load_trajectory(&path)?;
    assert_eq!(loaded.actions, traj.actions);
    assert_eq!(loaded.states, traj.states, "replay must reproduce every state");
    println!("{} ({bytes} bytes, {} steps)", path.display(), loaded.actions.len());
    println!("recorded score {:.4}", traj.score.map_or(0.0, |s| s.value()));
    println!("rescored       {:.4}", score_trajectory(task, &loaded)?.value());
    Ok(())
}
