//! Applies every corruption at every level to one image and prints the PSNR
//! against the original. Images go to a temp directory.
//!
//! cargo run --example corrupt_image -- [image.png]

use anyhow::Result;
use capharness::corruptions::{apply, CorruptionKind, CorruptionSpec, Level, Raster};

fn psnr(a: &Raster, b: &Raster) -> f64 {
    let mse = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/images/test_scene.png").to_string());
    let image = Raster::open(path.as_ref())?;
    let out = std::env::temp_dir().join("capharness-corrupt-image");
    std::fs::create_dir_all(&out)?;

    println!("{:<24} {:>8} {:>8} {:>8}", "corruption", "low", "medium", "high");
    for kind in CorruptionKind::ALL {
        let mut row = format!("{:<24}", kind.as_str());
        for level in Level::ALL {
            let spec = CorruptionSpec::new(kind, level).with_seed(7);
            let corrupted = apply(&spec, &image)?;
            std::fs::write(out.join(format!("{}_{}.png", kind.as_str(), level.as_str())), corrupted.to_png())?;
            row.push_str(&format!(" {:>8.2}", psnr(&image, &corrupted)));
        }
        println!("{row}");
    }
    println!("images written to {}", out.display());
    Ok(())
}
