//! Seeded image degradations with low/medium/high severity schedules.
//!
//! Every kernel converts the raster to `[0, 1]` floats, works there, and
//! re-quantises with clamping and round-half-away-from-zero. Randomness comes
//! only from [`crate::rng::Rng`] seeded with the spec's `seed`, so equal
//! `(spec, image)` pairs give bit-identical output on any thread.
//!
//! | kind | parameter | low | medium | high |
//! |---|---|---|---|---|
//! | gaussian_noise | sigma | 0.10 | 0.50 | 1.00 |
//! | impulse_noise | amount | 0.02 | 0.08 | 0.20 |
//! | speckle_noise | sigma | 0.10 | 0.25 | 0.50 |
//! | poisson_gaussian_sensor | sigma / photons | 0.05 / 200 | 0.15 / 60 | 0.30 / 15 |
//! | gaussian_blur | sigma (px) | 1 | 3 | 6 |
//! | defocus_blur | radius (px) | 2 | 5 | 9 |
//! | motion_blur | length (px) | 5 | 9 | 15 |
//! | zoom_blur | max_zoom (8 scales) | 1.06 | 1.16 | 1.31 |
//! | snow | density | 0.02 | 0.06 | 0.12 |
//! | jpeg_compression | quality | 60 | 25 | 10 |
//! | pixelate | block (px) | 4 | 8 | 16 |
//! | low_light_gamma | gamma (out = x^(1/gamma)) | 1.5 | 0.8 | 0.3 |
//! | adversarial_patch | area fraction | 0.02 | 0.05 | 0.10 |
//!
//! `motion_blur` draws its angle uniformly in `[0, 180)` degrees from the seed
//! unless an `angle` parameter is given. `jpeg_compression` with quality 0 is a
//! passthrough.

mod effects;
mod filters;
mod noise;
mod raster;
mod spec;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{Manifest, Sample};
use crate::rng::{sample_seed, Rng};
use filters::Plane;

pub use raster::Raster;
pub use spec::{Condition, CorruptionKind, CorruptionSpec, Level, MixtureSpec, ParamDef};

/// Number of zoom scales averaged by `zoom_blur`.
pub const ZOOM_STEPS: usize = 8;

#[derive(Debug, Error)]
pub enum CorruptionError {
    #[error("unsupported corruption kind `{0}`")]
    Unsupported(String),
    #[error("unknown severity level `{0}` (expected low, medium or high)")]
    UnknownLevel(String),
    #[error("{kind} has no parameter `{name}`")]
    UnknownParameter { kind: CorruptionKind, name: String },
    #[error("{kind} is missing required parameter `{name}`")]
    MissingParameter { kind: CorruptionKind, name: &'static str },
    #[error("parameter `{name}` of {kind} = {value} is outside [{min}, {max}]{}", if *integer { " (integer)" } else { "" })]
    InvalidParameter { kind: CorruptionKind, name: &'static str, value: f64, min: f64, max: f64, integer: bool },
    #[error("mixture must contain at least one step")]
    EmptyMixture,
    #[error("mixture step {index}: {source}")]
    MixtureStep {
        index: usize,
        #[source]
        source: Box<CorruptionError>,
    },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] crate::datasets::DatasetError),
}

/// Applies one corruption. The input is left untouched.
pub fn apply(spec: &CorruptionSpec, image: &Raster) -> Result<Raster, CorruptionError> {
    spec.validate()?;
    let (w, h) = (image.width(), image.height());
    let (wu, hu) = (w as usize, h as usize);
    let mut rng = Rng::new(spec.seed);
    let unit = || image.to_unit();
    let plane = match spec.kind {
        CorruptionKind::GaussianNoise => {
            let mut p = unit();
            noise::gaussian(&mut p, spec.get("sigma"), &mut rng);
            p
        }
        CorruptionKind::ImpulseNoise => {
            let mut p = unit();
            noise::impulse(&mut p, spec.get("amount"), &mut rng);
            p
        }
        CorruptionKind::SpeckleNoise => {
            let mut p = unit();
            noise::speckle(&mut p, spec.get("sigma"), &mut rng);
            p
        }
        CorruptionKind::PoissonGaussianSensor => {
            let mut p = unit();
            noise::poisson_gaussian(&mut p, spec.get("sigma"), spec.get("photons"), &mut rng);
            p
        }
        CorruptionKind::GaussianBlur => {
            let p = unit();
            filters::gaussian_blur(&Plane { data: &p, width: wu, height: hu }, spec.get("sigma"))
        }
        CorruptionKind::DefocusBlur => {
            let p = unit();
            let taps = filters::disc_taps(spec.get("radius") as isize);
            filters::convolve_taps(&Plane { data: &p, width: wu, height: hu }, &taps)
        }
        CorruptionKind::MotionBlur => {
            let angle = spec.get_opt("angle").unwrap_or_else(|| rng.uniform() * 180.0);
            let p = unit();
            let taps = filters::motion_taps(spec.get("length") as usize, angle);
            filters::convolve_taps(&Plane { data: &p, width: wu, height: hu }, &taps)
        }
        CorruptionKind::ZoomBlur => {
            let p = unit();
            filters::zoom_blur(&Plane { data: &p, width: wu, height: hu }, spec.get("max_zoom"), ZOOM_STEPS)
        }
        CorruptionKind::Snow => {
            let mut p = unit();
            effects::snow(&mut p, wu, hu, spec.get("density"), &mut rng);
            p
        }
        CorruptionKind::JpegCompression => {
            let quality = spec.get("quality") as u8;
            if quality == 0 {
                return Ok(image.clone());
            }
            return effects::jpeg_round_trip(image, quality);
        }
        CorruptionKind::Pixelate => {
            let mut p = unit();
            effects::pixelate(&mut p, wu, hu, spec.get("block") as usize);
            p
        }
        CorruptionKind::LowLightGamma => {
            let mut p = unit();
            effects::gamma(&mut p, spec.get("gamma"));
            p
        }
        CorruptionKind::AdversarialPatch => {
            let mut p = unit();
            effects::checkerboard_patch(&mut p, wu, hu, spec.get("area"), &mut rng);
            p
        }
    };
    Ok(Raster::from_unit(w, h, &plane))
}

/// Left-to-right fold of [`apply`] over the mixture steps.
pub fn apply_mixture(mix: &MixtureSpec, image: &Raster) -> Result<Raster, CorruptionError> {
    if mix.steps.is_empty() {
        return Err(CorruptionError::EmptyMixture);
    }
    let mut current = image.clone();
    for (index, step) in mix.steps.iter().enumerate() {
        current = apply(step, &current).map_err(|e| CorruptionError::MixtureStep { index, source: Box::new(e) })?;
    }
    Ok(current)
}

pub fn apply_condition(condition: &Condition, image: &Raster) -> Result<Raster, CorruptionError> {
    match condition {
        Condition::Clean => Ok(image.clone()),
        Condition::Single(spec) => apply(spec, image),
        Condition::Mixture(mix) => apply_mixture(mix, image),
    }
}

/// Encoded output of one corrupted sample.
#[derive(Debug, Clone)]
pub struct EncodedImage {
    pub bytes: Vec<u8>,
    pub extension: &'static str,
}

/// Decodes `source`, corrupts it and encodes the result. Single
/// `jpeg_compression` specs are written as JPEG at the spec quality (whose
/// decode equals [`apply`]); everything else is PNG.
pub fn corrupt_image_bytes(condition: &Condition, source: &[u8]) -> Result<EncodedImage, CorruptionError> {
    let image = Raster::decode(source)?;
    if let Condition::Single(spec) = condition {
        if spec.kind == CorruptionKind::JpegCompression {
            spec.validate()?;
            let quality = spec.get("quality") as u8;
            if quality > 0 {
                return Ok(EncodedImage { bytes: effects::encode_jpeg(&image, quality)?, extension: "jpg" });
            }
        }
    }
    let out = apply_condition(condition, &image)?;
    Ok(EncodedImage { bytes: out.to_png(), extension: "png" })
}

/// A sample that could not be processed; the run continues without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CorruptedDataset {
    pub manifest: Manifest,
    pub errors: Vec<SampleFailure>,
}

/// File-system-safe stem for a sample id.
pub fn file_stem_for(sample_id: &str) -> String {
    let safe: String = sample_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if safe == sample_id && !safe.starts_with('.') {
        safe
    } else {
        format!("{safe}-{:08x}", crate::rng::fnv1a64(sample_id.as_bytes()) as u32)
    }
}

/// Writes one corrupted image per sample into `out_dir` plus a
/// `manifest.jsonl` pointing at them. Each sample is seeded with
/// `hash64(run_seed, sample_id, condition_id)`. Undecodable samples are
/// recorded and skipped; output order follows the input manifest.
pub fn corrupt_dataset(
    manifest: &Manifest,
    condition: &Condition,
    run_seed: u64,
    out_dir: &Path,
) -> Result<CorruptedDataset, CorruptionError> {
    condition.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| CorruptionError::Io { path: out_dir.to_path_buf(), source: e })?;
    let condition_id = condition.id();

    let results: Vec<Result<Sample, SampleFailure>> = manifest
        .samples
        .par_iter()
        .map(|sample| {
            let fail = |message: String| SampleFailure { sample_id: sample.sample_id.clone(), message };
            let src = manifest.image_path(sample);
            let bytes = std::fs::read(&src).map_err(|e| fail(format!("{}: {e}", src.display())))?;
            let seeded = condition.reseeded(sample_seed(run_seed, &sample.sample_id, &condition_id));
            let encoded = corrupt_image_bytes(&seeded, &bytes).map_err(|e| fail(e.to_string()))?;
            let file_name = format!("{}.{}", file_stem_for(&sample.sample_id), encoded.extension);
            let dest = out_dir.join(&file_name);
            std::fs::write(&dest, &encoded.bytes).map_err(|e| fail(format!("{}: {e}", dest.display())))?;
            Ok(Sample { image_path: PathBuf::from(file_name), ..sample.clone() })
        })
        .collect();

    let mut samples = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => errors.push(e),
        }
    }

    let mut provenance = manifest.provenance.clone();
    provenance.insert("source_manifest".into(), manifest.name.clone().into());
    provenance.insert("condition_id".into(), condition_id.clone().into());
    provenance.insert("condition".into(), serde_json::to_value(condition).expect("condition serialises to JSON"));
    provenance.insert("run_seed".into(), run_seed.into());
    let out = Manifest {
        name: format!("{}+{}", manifest.name, condition_id),
        samples,
        provenance,
        base_dir: Some(out_dir.to_path_buf()),
    };
    out.save_jsonl(&out_dir.join("manifest.jsonl"))?;
    Ok(CorruptedDataset { manifest: out, errors })
}
