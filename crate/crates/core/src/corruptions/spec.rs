use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorruptionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    GaussianNoise,
    ImpulseNoise,
    SpeckleNoise,
    PoissonGaussianSensor,
    GaussianBlur,
    DefocusBlur,
    MotionBlur,
    ZoomBlur,
    Snow,
    JpegCompression,
    Pixelate,
    LowLightGamma,
    AdversarialPatch,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 13] = [
        Self::GaussianNoise,
        Self::ImpulseNoise,
        Self::SpeckleNoise,
        Self::PoissonGaussianSensor,
        Self::GaussianBlur,
        Self::DefocusBlur,
        Self::MotionBlur,
        Self::ZoomBlur,
        Self::Snow,
        Self::JpegCompression,
        Self::Pixelate,
        Self::LowLightGamma,
        Self::AdversarialPatch,
    ];

    /// The additive/multiplicative noise family used in monotonicity checks.
    pub const NOISE_FAMILY: [CorruptionKind; 4] =
        [Self::GaussianNoise, Self::ImpulseNoise, Self::SpeckleNoise, Self::PoissonGaussianSensor];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GaussianNoise => "gaussian_noise",
            Self::ImpulseNoise => "impulse_noise",
            Self::SpeckleNoise => "speckle_noise",
            Self::PoissonGaussianSensor => "poisson_gaussian_sensor",
            Self::GaussianBlur => "gaussian_blur",
            Self::DefocusBlur => "defocus_blur",
            Self::MotionBlur => "motion_blur",
            Self::ZoomBlur => "zoom_blur",
            Self::Snow => "snow",
            Self::JpegCompression => "jpeg_compression",
            Self::Pixelate => "pixelate",
            Self::LowLightGamma => "low_light_gamma",
            Self::AdversarialPatch => "adversarial_patch",
        }
    }

    /// Human-readable name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::GaussianNoise => "Gaussian Noise",
            Self::ImpulseNoise => "Impulse Noise",
            Self::SpeckleNoise => "Speckle Noise",
            Self::PoissonGaussianSensor => "Sensor Noise",
            Self::GaussianBlur => "Gaussian Blur",
            Self::DefocusBlur => "Defocus Blur",
            Self::MotionBlur => "Motion Blur",
            Self::ZoomBlur => "Zoom Blur",
            Self::Snow => "Snow",
            Self::JpegCompression => "JPEG Compression",
            Self::Pixelate => "Pixelate",
            Self::LowLightGamma => "Low Light",
            Self::AdversarialPatch => "Adversarial",
        }
    }

    pub fn params(self) -> &'static [ParamDef] {
        severity_table(self)
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorruptionKind {
    type Err = CorruptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| CorruptionError::Unsupported(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Medium, Level::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Level::Low => "Low",
            Level::Medium => "Medium",
            Level::High => "High",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = CorruptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| CorruptionError::UnknownLevel(s.to_string()))
    }
}

/// One tunable parameter of a corruption kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDef {
    pub name: &'static str,
    /// Low / medium / high values. `None` for parameters resolved at apply time.
    pub levels: Option<[f64; 3]>,
    pub min: f64,
    pub max: f64,
    pub integer: bool,
}

const fn param(name: &'static str, levels: [f64; 3], min: f64, max: f64) -> ParamDef {
    ParamDef { name, levels: Some(levels), min, max, integer: false }
}

const fn int_param(name: &'static str, levels: [f64; 3], min: f64, max: f64) -> ParamDef {
    ParamDef { name, levels: Some(levels), min, max, integer: true }
}

// Severity schedule. Sigma-like values are on the [0, 1] intensity scale,
// sizes are in pixels.
const GAUSSIAN_NOISE: &[ParamDef] = &[param("sigma", [0.10, 0.50, 1.00], 0.0, 2.0)];
const IMPULSE_NOISE: &[ParamDef] = &[param("amount", [0.02, 0.08, 0.20], 0.0, 1.0)];
const SPECKLE_NOISE: &[ParamDef] = &[param("sigma", [0.10, 0.25, 0.50], 0.0, 2.0)];
const SENSOR_NOISE: &[ParamDef] =
    &[param("sigma", [0.05, 0.15, 0.30], 0.0, 1.0), param("photons", [200.0, 60.0, 15.0], 1.0, 100_000.0)];
const GAUSSIAN_BLUR: &[ParamDef] = &[param("sigma", [1.0, 3.0, 6.0], 0.0, 25.0)];
const DEFOCUS_BLUR: &[ParamDef] = &[int_param("radius", [2.0, 5.0, 9.0], 0.0, 30.0)];
const MOTION_BLUR: &[ParamDef] = &[
    int_param("length", [5.0, 9.0, 15.0], 1.0, 61.0),
    // Degrees; drawn from the seed unless set explicitly.
    ParamDef { name: "angle", levels: None, min: 0.0, max: 360.0, integer: false },
];
const ZOOM_BLUR: &[ParamDef] = &[param("max_zoom", [1.06, 1.16, 1.31], 1.0, 2.0)];
const SNOW: &[ParamDef] = &[param("density", [0.02, 0.06, 0.12], 0.0, 1.0)];
// quality 0 is the passthrough sentinel.
const JPEG: &[ParamDef] = &[int_param("quality", [60.0, 25.0, 10.0], 0.0, 100.0)];
const PIXELATE: &[ParamDef] = &[int_param("block", [4.0, 8.0, 16.0], 1.0, 512.0)];
// Output is x^(1/gamma): gamma < 1 darkens, so "high" is the darkest setting.
const LOW_LIGHT: &[ParamDef] = &[param("gamma", [1.5, 0.8, 0.3], 0.1, 5.0)];
const PATCH: &[ParamDef] = &[param("area", [0.02, 0.05, 0.10], 0.0, 1.0)];

fn severity_table(kind: CorruptionKind) -> &'static [ParamDef] {
    use CorruptionKind::*;
    match kind {
        GaussianNoise => GAUSSIAN_NOISE,
        ImpulseNoise => IMPULSE_NOISE,
        SpeckleNoise => SPECKLE_NOISE,
        PoissonGaussianSensor => SENSOR_NOISE,
        GaussianBlur => GAUSSIAN_BLUR,
        DefocusBlur => DEFOCUS_BLUR,
        MotionBlur => MOTION_BLUR,
        ZoomBlur => ZOOM_BLUR,
        Snow => SNOW,
        JpegCompression => JPEG,
        Pixelate => PIXELATE,
        LowLightGamma => LOW_LIGHT,
        AdversarialPatch => PATCH,
    }
}

/// A named degradation at a severity level with fully resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub level: Level,
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl CorruptionSpec {
    /// Spec with parameters taken from the severity table.
    pub fn new(kind: CorruptionKind, level: Level) -> Self {
        let params =
            kind.params().iter().filter_map(|p| p.levels.map(|v| (p.name.to_string(), v[level.index()]))).collect();
        Self { kind, level, params, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Overrides one parameter; the value must lie in the kind's legal range.
    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self, CorruptionError> {
        let def = self.def(name)?;
        check_range(self.kind, def, value)?;
        self.params.insert(name.to_string(), value);
        Ok(self)
    }

    fn def(&self, name: &str) -> Result<&'static ParamDef, CorruptionError> {
        self.kind
            .params()
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| CorruptionError::UnknownParameter { kind: self.kind, name: name.to_string() })
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        for (name, &value) in &self.params {
            let def = self.def(name)?;
            check_range(self.kind, def, value)?;
        }
        for def in self.kind.params() {
            if def.levels.is_some() && !self.params.contains_key(def.name) {
                return Err(CorruptionError::MissingParameter { kind: self.kind, name: def.name });
            }
        }
        Ok(())
    }

    pub(crate) fn get(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub(crate) fn get_opt(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    /// Condition identifier such as `gaussian_noise/high`; parameters that
    /// differ from the severity table are appended in brackets.
    pub fn id(&self) -> String {
        let defaults = CorruptionSpec::new(self.kind, self.level).params;
        let overrides: Vec<String> =
            self.params.iter().filter(|(k, v)| defaults.get(*k) != Some(v)).map(|(k, v)| format!("{k}={v}")).collect();
        if overrides.is_empty() {
            format!("{}/{}", self.kind, self.level)
        } else {
            format!("{}/{}[{}]", self.kind, self.level, overrides.join(","))
        }
    }
}

fn check_range(kind: CorruptionKind, def: &ParamDef, value: f64) -> Result<(), CorruptionError> {
    let in_range = value.is_finite() && value >= def.min && value <= def.max;
    let integral = !def.integer || value.fract() == 0.0;
    // angle is a half-open range
    let open_ok = def.name != "angle" || value < def.max;
    if in_range && integral && open_ok {
        Ok(())
    } else {
        Err(CorruptionError::InvalidParameter {
            kind,
            name: def.name,
            value,
            min: def.min,
            max: def.max,
            integer: def.integer,
        })
    }
}

/// Ordered composition of corruptions; applied exactly in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub steps: Vec<CorruptionSpec>,
}

impl MixtureSpec {
    pub fn new(steps: Vec<CorruptionSpec>) -> Result<Self, CorruptionError> {
        if steps.is_empty() {
            return Err(CorruptionError::EmptyMixture);
        }
        Ok(Self { steps })
    }

    pub fn id(&self) -> String {
        let parts: Vec<String> = self.steps.iter().map(CorruptionSpec::id).collect();
        format!("mix({})", parts.join("+"))
    }
}

/// An evaluation condition: the clean images, one corruption, or a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clean,
    Single(CorruptionSpec),
    Mixture(MixtureSpec),
}

impl Condition {
    pub fn id(&self) -> String {
        match self {
            Condition::Clean => "clean".to_string(),
            Condition::Single(s) => s.id(),
            Condition::Mixture(m) => m.id(),
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self, Condition::Clean)
    }

    /// Copy of the condition with step seeds derived from `seed`. A single
    /// spec takes `seed` itself; mixture step `i` takes `hash64(seed, i)`.
    pub fn reseeded(&self, seed: u64) -> Condition {
        match self {
            Condition::Clean => Condition::Clean,
            Condition::Single(s) => Condition::Single(s.clone().with_seed(seed)),
            Condition::Mixture(m) => Condition::Mixture(MixtureSpec {
                steps: m
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.clone().with_seed(crate::rng::Hash64::new().u64(seed).u64(i as u64).finish()))
                    .collect(),
            }),
        }
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        match self {
            Condition::Clean => Ok(()),
            Condition::Single(s) => s.validate(),
            Condition::Mixture(m) => {
                if m.steps.is_empty() {
                    return Err(CorruptionError::EmptyMixture);
                }
                m.steps.iter().enumerate().try_for_each(|(index, s)| {
                    s.validate().map_err(|e| CorruptionError::MixtureStep { index, source: Box::new(e) })
                })
            }
        }
    }
}
