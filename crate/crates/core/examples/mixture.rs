//! Chains two corruptions and shows that each step is seeded on its own:
//! the same mixture and seed always give the same pixels.
//!
//! cargo run --example mixture

use anyhow::Result;
use capharness::corruptions::{apply_condition, Condition, CorruptionKind, CorruptionSpec, Level, MixtureSpec, Raster};

fn main() -> Result<()> {
    let image = Raster::open(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/images/park.png").as_ref())?;
    let mix = MixtureSpec::new(vec![
        CorruptionSpec::new(CorruptionKind::LowLightGamma, Level::Medium),
        CorruptionSpec::new(CorruptionKind::GaussianNoise, Level::Low).with_param("sigma", 0.05)?,
    ])?;
    let condition = Condition::Mixture(mix);
    println!("condition id: {}", condition.id());

    let a = apply_condition(&condition.reseeded(42), &image)?;
    let b = apply_condition(&condition.reseeded(42), &image)?;
    let c = apply_condition(&condition.reseeded(43), &image)?;
    println!("same seed, same pixels: {}", a == b);
    println!("new seed, same pixels: {}", a == c);

    let mean = |r: &Raster| r.data().iter().map(|&v| v as f64).sum::<f64>() / r.data().len() as f64;
    println!("mean intensity: clean {:.1}, mixed {:.1}", mean(&image), mean(&a));
    Ok(())
}
