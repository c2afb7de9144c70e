//! Lists which variants each task supports and what a sampled episode looks like.

use std::env;

use magbench::tasks::{episode_spec, task_horizon, variant_applicable, TaskId, VariantKind};

fn main() -> magbench::Result<()> {
    let seed: u64 = env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    for task in TaskId::ALL {
        println!("{} ({}), horizon {}", task.name(), task.code(), task_horizon(task));
        for variant in VariantKind::ALL {
            if !variant_applicable(task, variant) {
                println!("  {:<9} n/a", variant.name());
                continue;
            }
            let spec = episode_spec(task, variant, seed)?;
            let s = &spec.initial_state;
            let rho: Vec<String> = spec.rho.to_array().iter().map(|v| format!("{v:.2}")).collect();
            println!(
                "  {:<9} blocks={} regions={} robot=({:+.2}, {:+.2}) rho=[{}]",
                variant.name(),
                s.blocks.len(),
                s.regions.len(),
                s.robot.pose.x,
                s.robot.pose.y,
                rho.join(", ")
            );
        }
    }
    Ok(())
}
