//! Runs a canned experiment and prints its checked outcomes.
//!
//! `cargo run --release --example preset -- variants_blobs` (default: saturation).

use lhessian::experiments::{run_preset, Preset, PresetName};

fn main() -> lhessian::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "saturation".into());
    let preset = Preset::new(PresetName::parse(&name)?, None);
    let outdir = std::env::temp_dir().join("lhessian-presets").join(preset.name.name());
    let outcome = run_preset(&preset, &outdir, 2)?;
    print!("{}", outcome.to_text());
    println!("artifacts in {}", outdir.display());
    Ok(())
}
