//! Augments one observation stack and writes before/after PNGs.

use magbench::augment::{augment_stack, sample_augmentation, AugmentationParams};
use magbench::env::make_env;
use magbench::render::ViewKind;
use magbench::sim::Action;
use magbench::tasks::{TaskId, VariantKind};

fn main() -> magbench::Result<()> {
    let mut env = make_env(TaskId::MatchRegions, VariantKind::Demo, 0, ViewKind::Egocentric)?;
    env.reset();
    let mut obs = None;
    for i in [3u8, 3, 4, 3] {
        obs = Some(env.step(Action::new(i)?)?.observation);
    }
    let obs = obs.expect("stepped");

    let params = AugmentationParams::default();
    let seed = 2024;
    let aug = sample_augmentation(seed, &params)?;
    println!(
        "shift ({:+.2}, {:+.2}) px, rotate {:+.2}°, L×{:.4}, ab {:+.3} rad, noise σ {}",
        aug.dx, aug.dy, aug.angle_deg, aug.lum_scale, aug.ab_angle, aug.noise_std
    );
    let out = augment_stack(&obs, seed, &params)?;

    let dir = std::env::temp_dir().join("magbench-augment");
    std::fs::create_dir_all(&dir)?;
    for (i, (a, b)) in obs.frames.iter().zip(&out.frames).enumerate() {
        std::fs::write(dir.join(format!("{i}-orig.png")), a.to_png())?;
        std::fs::write(dir.join(format!("{i}-aug.png")), b.to_png())?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}
