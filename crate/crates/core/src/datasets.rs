//! Image-caption manifests and their on-disk formats.
//!
//! Three input formats are understood:
//!
//! * `native_jsonl`: an optional header line `{"manifest":{"name":..,"provenance":{..}}}`
//!   followed by one sample per line
//!   (`{"sample_id":..,"image_path":..,"references":[..],"domain":..}`).
//!   Saving always writes the header and canonical key order.
//! * `flickr_tsv`: Flickr30k token files, either `image_name|comment_number|comment`
//!   (optionally with that header row) or `image.jpg#N<TAB>comment`.
//! * `nocaps_json`: COCO-style `{"images":[..],"annotations":[..]}` where images
//!   may carry a `domain` tag (`in-domain`, `near-domain`, `out-domain`).
//!
//! Relative image paths are resolved against the manifest file's directory.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::metrics::tokenize;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {locus}: {message}", path.display())]
    Parse { path: PathBuf, locus: String, message: String },
    #[error("duplicate sample_id `{sample_id}` ({locus})")]
    DuplicateSample { sample_id: String, locus: String },
    #[error("sample `{0}` has no reference captions")]
    NoCaptions(String),
    #[error("sample `{sample_id}` has an empty reference caption ({locus})")]
    EmptyCaption { sample_id: String, locus: String },
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("unknown manifest format `{0}` (expected flickr_tsv, nocaps_json or native_jsonl)")]
    UnknownFormat(String),
}

type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    InDomain,
    NearDomain,
    OutOfDomain,
    #[default]
    Unspecified,
}

impl Domain {
    fn from_label(label: &str) -> Option<Domain> {
        match label.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "in-domain" | "in" => Some(Domain::InDomain),
            "near-domain" | "near" => Some(Domain::NearDomain),
            "out-domain" | "out-of-domain" | "out" => Some(Domain::OutOfDomain),
            "" | "unspecified" => Some(Domain::Unspecified),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub image_path: PathBuf,
    pub references: Vec<String>,
    #[serde(default)]
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub name: String,
    pub samples: Vec<Sample>,
    pub provenance: BTreeMap<String, Value>,
    /// Directory relative image paths are resolved against. Not serialised.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestFormat {
    FlickrTsv,
    NocapsJson,
    NativeJsonl,
}

impl ManifestFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ManifestFormat::FlickrTsv => "flickr_tsv",
            ManifestFormat::NocapsJson => "nocaps_json",
            ManifestFormat::NativeJsonl => "native_jsonl",
        }
    }
}

impl fmt::Display for ManifestFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManifestFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flickr_tsv" => Ok(ManifestFormat::FlickrTsv),
            "nocaps_json" => Ok(ManifestFormat::NocapsJson),
            "native_jsonl" => Ok(ManifestFormat::NativeJsonl),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    name: String,
    #[serde(default)]
    provenance: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    manifest: Header,
}

impl Manifest {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        let m = Manifest { name: name.into(), samples, ..Default::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks unique ids and non-empty references.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, s) in self.samples.iter().enumerate() {
            if !seen.insert(s.sample_id.as_str()) {
                return Err(DatasetError::DuplicateSample {
                    sample_id: s.sample_id.clone(),
                    locus: format!("sample {}", i + 1),
                });
            }
            validate_references(s, &format!("sample {}", i + 1))?;
        }
        Ok(())
    }

    pub fn image_path(&self, sample: &Sample) -> PathBuf {
        match &self.base_dir {
            Some(base) if sample.image_path.is_relative() => base.join(&sample.image_path),
            _ => sample.image_path.clone(),
        }
    }

    pub fn get(&self, sample_id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    /// Canonical native JSONL: header line, then one sample per line, LF endings.
    pub fn to_jsonl(&self) -> String {
        let header = HeaderLine { manifest: Header { name: self.name.clone(), provenance: self.provenance.clone() } };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("sample serialises"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })
    }
}

fn validate_references(s: &Sample, locus: &str) -> Result<()> {
    if s.references.is_empty() {
        return Err(DatasetError::NoCaptions(s.sample_id.clone()));
    }
    if s.references.iter().any(|r| r.trim().is_empty()) {
        return Err(DatasetError::EmptyCaption { sample_id: s.sample_id.clone(), locus: locus.to_string() });
    }
    Ok(())
}

/// Loads a manifest in the given format.
pub fn load_manifest(path: &Path, format: ManifestFormat) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    let default_name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut manifest = match format {
        ManifestFormat::NativeJsonl => parse_native(&text, path, default_name)?,
        ManifestFormat::FlickrTsv => parse_flickr(&text, path, default_name)?,
        ManifestFormat::NocapsJson => parse_nocaps(&text, path, default_name)?,
    };
    manifest.base_dir = Some(path.parent().map(Path::to_path_buf).unwrap_or_default());
    Ok(manifest)
}

fn parse_error(path: &Path, locus: impl Into<String>, message: impl fmt::Display) -> DatasetError {
    DatasetError::Parse { path: path.to_path_buf(), locus: locus.into(), message: message.to_string() }
}

fn parse_native(text: &str, path: &Path, default_name: String) -> Result<Manifest> {
    let mut manifest = Manifest { name: default_name, ..Default::default() };
    let mut seen = HashSet::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let locus = format!("line {lineno}");
        let value: Value = serde_json::from_str(line).map_err(|e| parse_error(path, &locus, e))?;
        if first && value.get("manifest").is_some() {
            let h: HeaderLine = serde_json::from_value(value).map_err(|e| parse_error(path, &locus, e))?;
            manifest.name = h.manifest.name;
            manifest.provenance = h.manifest.provenance;
            first = false;
            continue;
        }
        first = false;
        let sample: Sample = serde_json::from_value(value).map_err(|e| parse_error(path, &locus, e))?;
        validate_references(&sample, &locus)?;
        if !seen.insert(sample.sample_id.clone()) {
            return Err(DatasetError::DuplicateSample { sample_id: sample.sample_id, locus });
        }
        manifest.samples.push(sample);
    }
    Ok(manifest)
}

fn parse_flickr(text: &str, path: &Path, default_name: String) -> Result<Manifest> {
    // image name -> (first line, [(comment_number, caption)])
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (usize, Vec<(usize, String)>)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let locus = format!("line {lineno}");
        let (name, number, caption) = split_flickr_line(line).ok_or_else(|| {
            parse_error(path, &locus, "expected `image|comment_number|comment` or `image#N<TAB>comment`")
        })?;
        if name.eq_ignore_ascii_case("image_name") || name.eq_ignore_ascii_case("image") {
            continue;
        }
        let number: usize = number
            .parse()
            .map_err(|_| parse_error(path, &locus, format!("comment number `{number}` is not an integer")))?;
        let sample_id = flickr_sample_id(name);
        if caption.is_empty() {
            return Err(DatasetError::EmptyCaption { sample_id, locus });
        }
        let entry = groups.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            (lineno, Vec::new())
        });
        entry.1.push((number, caption.to_string()));
    }

    let mut samples = Vec::with_capacity(order.len());
    let mut seen = HashSet::new();
    for name in order {
        let (lineno, mut caps) = groups.remove(&name).expect("grouped above");
        caps.sort_by_key(|(n, _)| *n);
        let sample_id = flickr_sample_id(&name);
        if !seen.insert(sample_id.clone()) {
            return Err(DatasetError::DuplicateSample { sample_id, locus: format!("line {lineno}") });
        }
        samples.push(Sample {
            sample_id,
            image_path: PathBuf::from(&name),
            references: caps.into_iter().map(|(_, c)| c).collect(),
            domain: Domain::Unspecified,
        });
    }
    let mut provenance = BTreeMap::new();
    provenance.insert("source_format".into(), Value::from("flickr_tsv"));
    Ok(Manifest { name: default_name, samples, provenance, base_dir: None })
}

fn split_flickr_line(line: &str) -> Option<(&str, &str, &str)> {
    if line.contains('|') {
        let mut parts = line.splitn(3, '|');
        let (a, b, c) = (parts.next()?, parts.next()?, parts.next()?);
        return Some((a.trim(), b.trim(), c.trim()));
    }
    let fields: Vec<&str> = line.split('\t').collect();
    match fields.as_slice() {
        [key, caption] => {
            let (name, number) = key.rsplit_once('#')?;
            Some((name.trim(), number.trim(), caption.trim()))
        }
        [name, number, caption] => Some((name.trim(), number.trim(), caption.trim())),
        _ => None,
    }
}

fn flickr_sample_id(name: &str) -> String {
    Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| name.to_string())
}

#[derive(Deserialize)]
struct CocoFile {
    images: Vec<Value>,
    annotations: Vec<Value>,
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_nocaps(text: &str, path: &Path, default_name: String) -> Result<Manifest> {
    let coco: CocoFile = serde_json::from_str(text)
        .map_err(|e| parse_error(path, format!("line {}, column {}", e.line(), e.column()), e))?;

    let mut samples: Vec<Sample> = Vec::with_capacity(coco.images.len());
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, img) in coco.images.iter().enumerate() {
        let locus = format!("images[{i}]");
        let id = img.get("id").and_then(id_string).ok_or_else(|| parse_error(path, &locus, "missing `id`"))?;
        let file_name = img
            .get("file_name")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_error(path, &locus, "missing `file_name`"))?;
        let domain = match img.get("domain") {
            None | Some(Value::Null) => Domain::Unspecified,
            Some(Value::String(label)) => Domain::from_label(label)
                .ok_or_else(|| parse_error(path, &locus, format!("unknown domain `{label}`")))?,
            Some(other) => return Err(parse_error(path, &locus, format!("domain must be a string, got {other}"))),
        };
        if index.insert(id.clone(), i).is_some() {
            return Err(DatasetError::DuplicateSample { sample_id: id, locus });
        }
        samples.push(Sample { sample_id: id, image_path: PathBuf::from(file_name), references: Vec::new(), domain });
    }
    for (i, ann) in coco.annotations.iter().enumerate() {
        let locus = format!("annotations[{i}]");
        let image_id =
            ann.get("image_id").and_then(id_string).ok_or_else(|| parse_error(path, &locus, "missing `image_id`"))?;
        let caption =
            ann.get("caption").and_then(Value::as_str).ok_or_else(|| parse_error(path, &locus, "missing `caption`"))?;
        let &slot = index
            .get(&image_id)
            .ok_or_else(|| parse_error(path, &locus, format!("image_id `{image_id}` not in images")))?;
        if caption.trim().is_empty() {
            return Err(DatasetError::EmptyCaption { sample_id: image_id, locus });
        }
        samples[slot].references.push(caption.trim().to_string());
    }
    if let Some(s) = samples.iter().find(|s| s.references.is_empty()) {
        return Err(DatasetError::NoCaptions(s.sample_id.clone()));
    }
    let mut provenance = BTreeMap::new();
    provenance.insert("source_format".into(), Value::from("nocaps_json"));
    Ok(Manifest { name: default_name, samples, provenance, base_dir: None })
}

/// Reference caption length distribution in shared-tokenizer tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub name: String,
    pub histogram: BTreeMap<usize, usize>,
    pub references: usize,
    pub mean: f64,
    pub median: f64,
}

pub fn caption_length_stats(manifest: &Manifest) -> Result<LengthStats> {
    let mut lengths: Vec<usize> =
        manifest.samples.iter().flat_map(|s| s.references.iter().map(|r| tokenize(r).len())).collect();
    if lengths.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    lengths.sort_unstable();
    let mut histogram = BTreeMap::new();
    for &l in &lengths {
        *histogram.entry(l).or_insert(0) += 1;
    }
    let n = lengths.len();
    let mean = lengths.iter().sum::<usize>() as f64 / n as f64;
    let median = if n % 2 == 1 { lengths[n / 2] as f64 } else { (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0 };
    Ok(LengthStats { name: manifest.name.clone(), histogram, references: n, mean, median })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn sample(id: &str, refs: &[&str]) -> Sample {
        Sample {
            sample_id: id.into(),
            image_path: format!("{id}.png").into(),
            references: refs.iter().map(|s| s.to_string()).collect(),
            domain: Domain::Unspecified,
        }
    }

    #[test]
    fn native_two_records_in_order() {
        let f = write_temp(
            "{\"sample_id\":\"b\",\"image_path\":\"b.png\",\"references\":[\"x y\"]}\n\
             {\"sample_id\":\"a\",\"image_path\":\"a.png\",\"references\":[\"z\"],\"domain\":\"near_domain\"}\n",
            ".jsonl",
        );
        let m = load_manifest(f.path(), ManifestFormat::NativeJsonl).unwrap();
        assert_eq!(m.samples.len(), 2);
        assert_eq!(m.samples[0].sample_id, "b");
        assert_eq!(m.samples[1].domain, Domain::NearDomain);
        assert_eq!(m.image_path(&m.samples[0]), f.path().parent().unwrap().join("b.png"));
    }

    #[test]
    fn native_round_trip_is_byte_stable() {
        let mut m =
            Manifest::new("demo", vec![sample("1", &["a dog", "ein hund"]), sample("2", &["caf\u{e9}"])]).unwrap();
        m.provenance.insert("split".into(), "test".into());
        let first = m.to_jsonl();
        let f = write_temp(&first, ".jsonl");
        let again = load_manifest(f.path(), ManifestFormat::NativeJsonl).unwrap().to_jsonl();
        assert_eq!(first, again);
        assert!(first.ends_with('\n') && !first.contains('\r'));
    }

    #[test]
    fn native_errors_have_locus() {
        let f = write_temp("{\"sample_id\":\"a\",\"image_path\":\"a\",\"references\":[\"x\"]}\nnot json\n", ".jsonl");
        let err = load_manifest(f.path(), ManifestFormat::NativeJsonl).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let f = write_temp(
            "{\"sample_id\":\"a\",\"image_path\":\"a\",\"references\":[\"x\"]}\n{\"sample_id\":\"a\",\"image_path\":\"b\",\"references\":[\"y\"]}\n",
            ".jsonl",
        );
        assert!(matches!(
            load_manifest(f.path(), ManifestFormat::NativeJsonl),
            Err(DatasetError::DuplicateSample { .. })
        ));

        let f = write_temp("{\"sample_id\":\"lonely\",\"image_path\":\"a\",\"references\":[]}\n", ".jsonl");
        let err = load_manifest(f.path(), ManifestFormat::NativeJsonl).unwrap_err();
        assert!(matches!(&err, DatasetError::NoCaptions(id) if id == "lonely"));
    }

    #[test]
    fn flickr_pipe_format_groups_five_captions() {
        let mut text = String::from("image_name| comment_number| comment\n");
        for n in 0..5 {
            text.push_str(&format!("1000092795.jpg| {n}| caption number {n}\n"));
        }
        text.push_str("10002456.jpg| 0| another image\n");
        let f = write_temp(&text, ".txt");
        let m = load_manifest(f.path(), ManifestFormat::FlickrTsv).unwrap();
        assert_eq!(m.samples.len(), 2);
        assert_eq!(m.samples[0].sample_id, "1000092795");
        assert_eq!(m.samples[0].references.len(), 5);
        assert_eq!(m.samples[0].references[3], "caption number 3");
        assert_eq!(m.samples[0].domain, Domain::Unspecified);
    }

    #[test]
    fn flickr_token_format_sorts_by_comment_number() {
        let f = write_temp("a.jpg#1\tsecond\na.jpg#0\tfirst\n", ".token");
        let m = load_manifest(f.path(), ManifestFormat::FlickrTsv).unwrap();
        assert_eq!(m.samples[0].references, vec!["first", "second"]);
    }

    #[test]
    fn flickr_bad_number_reports_line() {
        let f = write_temp("a.jpg| 0| ok\na.jpg| x| bad\n", ".txt");
        let err = load_manifest(f.path(), ManifestFormat::FlickrTsv).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn nocaps_domains_map() {
        let json = r#"{"images":[
            {"id":0,"file_name":"a.jpg","domain":"in-domain"},
            {"id":1,"file_name":"b.jpg","domain":"near-domain"},
            {"id":2,"file_name":"c.jpg","domain":"out-domain"}],
          "annotations":[
            {"image_id":2,"caption":"a rare bird"},
            {"image_id":0,"caption":"a cat"},
            {"image_id":1,"caption":"a dog"}]}"#;
        let f = write_temp(json, ".json");
        let m = load_manifest(f.path(), ManifestFormat::NocapsJson).unwrap();
        let domains: Vec<Domain> = m.samples.iter().map(|s| s.domain).collect();
        assert_eq!(domains, vec![Domain::InDomain, Domain::NearDomain, Domain::OutOfDomain]);
        assert_eq!(m.samples[2].references, vec!["a rare bird"]);
    }

    #[test]
    fn nocaps_image_without_captions_is_named() {
        let json = r#"{"images":[{"id":"x1","file_name":"a.jpg"}],"annotations":[]}"#;
        let f = write_temp(json, ".json");
        let err = load_manifest(f.path(), ManifestFormat::NocapsJson).unwrap_err();
        assert!(err.to_string().contains("x1"));
    }

    #[test]
    fn nocaps_syntax_error_has_position() {
        let f = write_temp("{\"images\": [\n  {\"id\": 1,,}\n]}", ".json");
        let err = load_manifest(f.path(), ManifestFormat::NocapsJson).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn length_stats_single() {
        let m = Manifest::new("m", vec![sample("1", &["a b c"])]).unwrap();
        let st = caption_length_stats(&m).unwrap();
        assert_eq!(st.histogram, BTreeMap::from([(3, 1)]));
        assert_eq!((st.mean, st.median), (3.0, 3.0));
    }

    #[test]
    fn length_stats_even_count() {
        let m = Manifest::new("m", vec![sample("1", &["a b", "a b c d"])]).unwrap();
        let st = caption_length_stats(&m).unwrap();
        assert_eq!((st.mean, st.median), (3.0, 3.0));
    }

    #[test]
    fn length_stats_empty_manifest_errors() {
        assert!(matches!(caption_length_stats(&Manifest::default()), Err(DatasetError::EmptyManifest)));
    }
}
