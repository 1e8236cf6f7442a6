//! Generates one scene, applies each degradation preset and writes the
//! results as PFM files.
//!
//! `cargo run --example degrade_scene [out_dir]`

use std::path::PathBuf;

use adaptive_dsr::degradation::{apply_spec, BlurSpec, DegradationSpec};
use adaptive_dsr::scenegen::{generate_scene, SceneSpec};
use adaptive_dsr::storage::{create_dir, write_pfm};
use adaptive_dsr::DepthField;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "degrade_demo".into()),
    );
    create_dir(&out)?;
    let scene = generate_scene(&SceneSpec::default().with_seed(7))?;
    write_pfm(out.join("gt.pfm"), &scene.gt)?;
    // shifted so the guide survives the depth codec, which drops values <= 0
    write_pfm(
        out.join("guide.pfm"),
        &DepthField::from_values(
            128,
            128,
            scene.guide.data().iter().map(|g| g + 1.0).collect(),
        )?,
    )?;

    let presets = [
        ("x4_clean", DegradationSpec::downsample_only(4.0)),
        (
            "x8_noise",
            DegradationSpec {
                noise_sigma: 0.05,
                ..DegradationSpec::downsample_only(8.0)
            },
        ),
        (
            "x8_blur",
            DegradationSpec {
                blur: Some(BlurSpec::default()),
                ..DegradationSpec::downsample_only(8.0)
            },
        ),
        ("x16_heaviest", DegradationSpec::heaviest(7)),
    ];
    for (name, spec) in presets {
        let lr = apply_spec(&scene.gt, &spec)?;
        let path = out.join(format!("{name}.pfm"));
        write_pfm(&path, &lr)?;
        let (lo, hi) = lr
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(*v), b.max(*v))
            });
        println!(
            "{name:<14} {}x{} range [{lo:.2}, {hi:.2}] spec {} -> {}",
            lr.width(),
            lr.height(),
            &spec.digest()[..12],
            path.display()
        );
    }
    Ok(())
}
