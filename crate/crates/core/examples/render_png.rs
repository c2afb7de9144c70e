//! Renders both views of every demo episode to PNG files.
//!
//! Usage: `cargo run --example render_png [OUT_DIR]`

use std::path::PathBuf;

use magbench::render::{render_frame, ViewKind};
use magbench::tasks::{demo_variant, TaskId};

fn main() -> magbench::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("magbench-frames"));
    std::fs::create_dir_all(&out)?;
    for task in TaskId::ALL {
        let state = &demo_variant(task).initial_state;
        for view in [ViewKind::Egocentric, ViewKind::Allocentric] {
            let path = out.join(format!("{}-{}.png", task.code(), view.short_name()));
            std::fs::write(&path, render_frame(state, view).to_png())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
