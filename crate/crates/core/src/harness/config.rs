use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corruptions::{Condition, CorruptionKind, CorruptionSpec, Level, MixtureSpec};
use crate::datasets::ManifestFormat;
use crate::metrics::CiderVariant;
use crate::providers::{DecodingParams, PromptTier, ProviderSource};
use crate::similarity::{EmbedderChoice, Reduction};

fn default_name() -> String {
    "run".to_string()
}

fn default_threshold() -> f64 {
    0.5
}

fn native() -> ManifestFormat {
    ManifestFormat::NativeJsonl
}

/// A full run description, read from TOML or JSON.
///
/// Relative paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub run_seed: u64,
    /// Not part of the lock file, so runs into different directories match.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub datasets: Vec<DatasetConfig>,
    pub conditions: Vec<ConditionConfig>,
    pub providers: Vec<ProviderConfig>,
    pub tiers: Vec<PromptTier>,
    #[serde(default)]
    pub decoding: DecodingParams,
    #[serde(default)]
    pub embedder: EmbedderChoice,
    #[serde(default)]
    pub similarity_reduction: Reduction,
    #[serde(default)]
    pub cider_variant: CiderVariant,
    /// Cells whose failed-sample fraction exceeds this are reported invalid.
    #[serde(default = "default_threshold")]
    pub failure_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "native")]
    pub format: ManifestFormat,
}

/// `kind = "clean"`, `kind` + `level` (+ `params`), or `mixture = [...]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<Vec<StepConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub kind: CorruptionKind,
    pub level: Level,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub model_id: String,
    /// `file:<path>` or `http:<url>`; `{dataset}` is replaced by the dataset name.
    pub source: String,
}

fn resolve_spec(
    kind: CorruptionKind,
    level: Level,
    params: &BTreeMap<String, f64>,
) -> Result<CorruptionSpec, HarnessError> {
    params
        .iter()
        .try_fold(CorruptionSpec::new(kind, level), |spec, (k, &v)| spec.with_param(k, v).map_err(HarnessError::from))
}

impl ConditionConfig {
    pub fn clean() -> Self {
        Self { kind: Some("clean".into()), ..Default::default() }
    }

    pub fn single(kind: CorruptionKind, level: Level) -> Self {
        Self { kind: Some(kind.as_str().into()), level: Some(level), ..Default::default() }
    }

    pub fn to_condition(&self) -> Result<Condition, HarnessError> {
        let invalid = |m: &str| HarnessError::Config(format!("condition {self:?}: {m}"));
        match (&self.kind, &self.mixture) {
            (Some(_), Some(_)) => Err(invalid("give either `kind` or `mixture`, not both")),
            (None, None) => Err(invalid("missing `kind` or `mixture`")),
            (None, Some(steps)) => {
                if self.level.is_some() || !self.params.is_empty() {
                    return Err(invalid("`level`/`params` belong inside mixture steps"));
                }
                let steps =
                    steps.iter().map(|s| resolve_spec(s.kind, s.level, &s.params)).collect::<Result<Vec<_>, _>>()?;
                Ok(Condition::Mixture(MixtureSpec::new(steps)?))
            }
            (Some(kind), None) if kind == "clean" => {
                if self.level.is_some() || !self.params.is_empty() {
                    return Err(invalid("the clean condition takes no level or params"));
                }
                Ok(Condition::Clean)
            }
            (Some(kind), None) => {
                let kind: CorruptionKind = kind.parse()?;
                let level = self.level.ok_or_else(|| invalid("missing `level`"))?;
                Ok(Condition::Single(resolve_spec(kind, level, &self.params)?))
            }
        }
    }
}

impl ProviderConfig {
    pub fn source_for(&self, dataset: &str) -> Result<ProviderSource, HarnessError> {
        Ok(self.source.replace("{dataset}", dataset).parse()?)
    }
}

impl RunConfig {
    /// Reads a `.toml` or `.json` config.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        };
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Resolved conditions, in config order.
    pub fn resolved_conditions(&self) -> Result<Vec<Condition>, HarnessError> {
        self.conditions.iter().map(ConditionConfig::to_condition).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.datasets.is_empty() || self.conditions.is_empty() || self.providers.is_empty() {
            return bad("datasets, conditions and providers must each list at least one entry".into());
        }
        if self.tiers.is_empty() {
            return bad("tiers must name at least one prompt tier".into());
        }
        let unique = |names: Vec<String>, what: &str| -> Result<(), HarnessError> {
            let mut seen = HashSet::new();
            for n in names {
                if !seen.insert(n.clone()) {
                    return Err(HarnessError::Config(format!("duplicate {what} `{n}`")));
                }
            }
            Ok(())
        };
        unique(self.datasets.iter().map(|d| d.name.clone()).collect(), "dataset")?;
        unique(self.providers.iter().map(|p| p.model_id.clone()).collect(), "model_id")?;
        unique(self.tiers.iter().map(|t| t.to_string()).collect(), "tier")?;
        let conditions = self.resolved_conditions()?;
        for c in &conditions {
            c.validate()?;
        }
        unique(conditions.iter().map(Condition::id).collect(), "condition")?;
        for p in &self.providers {
            for d in &self.datasets {
                p.source_for(&d.name)?;
            }
        }
        self.decoding.validate()?;
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return bad(format!("failure_threshold must lie in [0, 1], got {}", self.failure_threshold));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
run_seed = 7
tiers = ["basic"]

[[datasets]]
name = "tiny"
path = "tiny.jsonl"

[[conditions]]
kind = "clean"

[[conditions]]
kind = "gaussian_noise"
level = "high"
params = { sigma = 0.8 }

[[conditions]]
mixture = [{ kind = "low_light_gamma", level = "high" }, { kind = "gaussian_noise", level = "low" }]

[[providers]]
model_id = "m"
source = "file:caps/{dataset}.jsonl"
"#;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn parses_and_resolves() {
        let c = parse(TOML);
        c.validate().unwrap();
        let ids: Vec<String> = c.resolved_conditions().unwrap().iter().map(Condition::id).collect();
        assert_eq!(ids, ["clean", "gaussian_noise/high[sigma=0.8]", "mix(low_light_gamma/high+gaussian_noise/low)"]);
        assert_eq!(c.providers[0].source_for("tiny").unwrap(), ProviderSource::File("caps/tiny.jsonl".into()));
        assert_eq!(c.failure_threshold, 0.5);
        assert_eq!(c.decoding, DecodingParams::default());
    }

    #[test]
    fn rejects_bad_configs() {
        let out_of_range = TOML.replace("sigma = 0.8", "sigma = 9.0");
        assert!(parse(&out_of_range).validate().is_err());
        let no_tiers = TOML.replace("tiers = [\"basic\"]", "tiers = []");
        assert!(parse(&no_tiers).validate().is_err());
        let dup = format!("{TOML}\n[[conditions]]\nkind = \"clean\"\n");
        assert!(parse(&dup).validate().is_err());
        let unknown = TOML.replace("kind = \"clean\"", "kind = \"fog\"\nlevel = \"low\"");
        assert!(parse(&unknown).validate().is_err());
        assert!(toml::from_str::<RunConfig>(&format!("bogus = 1\n{TOML}")).is_err());
    }

    #[test]
    fn lock_omits_out_dir() {
        let mut c = parse(TOML);
        c.out_dir = Some("/tmp/somewhere".into());
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("somewhere"));
    }
}
