//! Evaluates the reference policies on MoveToRegion and prints a markdown table.

use magbench::eval::{emit_table, evaluate, overall_performance, PolicySpec, TableFormat};
use magbench::render::ViewKind;
use magbench::tasks::{variant_applicable, TaskId, VariantKind};

fn main() -> magbench::Result<()> {
    let task = TaskId::MoveToRegion;
    let seeds = [0, 1, 2];
    let mut stats = Vec::new();
    for policy in [PolicySpec::Noop, PolicySpec::Random { seed: 0 }, PolicySpec::MtrExpert] {
        for variant in VariantKind::ALL.into_iter().filter(|v| variant_applicable(task, *v)) {
            stats.push(evaluate(&policy, task, variant, &seeds, 20, ViewKind::Egocentric)?);
        }
    }
    // One policy per table: overall performance averages cells of a single method.
    for chunk in stats.chunks(stats.len() / 3) {
        print!("{}", emit_table(&overall_performance(chunk)?, TableFormat::Markdown));
        println!();
    }
    Ok(())
}
