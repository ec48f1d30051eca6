use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Grouping, Schema};
use crate::error::{Error, Result};
use crate::eval::SelectionConfig;
use crate::voting::VotingConfig;

pub const DEFAULT_DATA: &str = "data/ReplicatedAcousticFeatures-ParkinsonDatabase.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSettings {
    pub k: usize,
    #[serde(default)]
    pub grouping: Grouping,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum Background {
    /// Every training row.
    Full,
    /// A seeded subset of `size` training rows.
    Sample { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapSettings {
    pub background: Background,
    #[serde(default)]
    pub seed: u64,
}

/// Everything a command needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form notes, e.g. which values are defaults rather than fixed settings.
    #[serde(default)]
    pub annotations: BTreeMap<String, String>,
    pub data: PathBuf,
    #[serde(default)]
    pub schema: Schema,
    pub selection: SelectionConfig,
    pub voting: VotingConfig,
    pub cv: CvSettings,
    pub shap: ShapSettings,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            annotations: BTreeMap::new(),
            data: PathBuf::from(DEFAULT_DATA),
            schema: Schema::default(),
            selection: SelectionConfig::default(),
            voting: VotingConfig::default(),
            cv: CvSettings {
                k: 4,
                grouping: Grouping::BySubject,
                seed: 0,
            },
            shap: ShapSettings {
                background: Background::Full,
                seed: 0,
            },
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cv.k < 2 {
            return Err(Error::InvalidConfig("cv.k must be at least 2".into()));
        }
        if let Background::Sample { size: 0 } = self.shap.background {
            return Err(Error::InvalidConfig("shap background sample must be non-empty".into()));
        }
        crate::eval::PipelineConfig {
            selection: self.selection.clone(),
            voting: self.voting.clone(),
        }
        .validate()
    }

    /// Sets the fold, SHAP and member seeds at once.
    pub fn set_seed(&mut self, seed: u64) {
        self.cv.seed = seed;
        self.shap.seed = seed;
        self.voting = self.voting.clone().with_seed(seed);
    }
}

/// Embedded in every output: what produced it and from which bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub data_sha256: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig, data: &[u8]) -> Self {
        Self {
            tool: format!("pdvoice {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            data_sha256: sha256_hex(data),
            config: config.clone(),
        }
    }

    pub fn csv_comment(&self) -> String {
        format!("# provenance: {}\n", serde_json::to_string(self).expect("provenance serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes `value` as a JSON object with an added `provenance` key.
pub fn json_with_provenance<T: Serialize>(value: &T, prov: &Provenance) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    match v.as_object_mut() {
        Some(map) => {
            map.insert("provenance".into(), serde_json::to_value(prov)?);
        }
        None => {
            v = serde_json::json!({ "provenance": prov, "value": v });
        }
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

/// Inverse of [`json_with_provenance`] for object payloads.
pub fn read_json_artifact<T: DeserializeOwned>(path: &Path) -> Result<(T, Option<Provenance>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut v: serde_json::Value = serde_json::from_str(&text)?;
    let prov = v
        .as_object_mut()
        .and_then(|m| m.remove("provenance"))
        .map(serde_json::from_value)
        .transpose()?;
    Ok((serde_json::from_value(v)?, prov))
}

/// Collects outputs in a hidden directory and moves them into place only on
/// [`Staging::commit`]. Dropping without committing removes everything written.
pub struct Staging {
    out: PathBuf,
    tmp: PathBuf,
    created_out: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path, command: &str) -> Result<Self> {
        let created_out = !out.exists();
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let tmp = out.join(format!(".staging-{command}"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            tmp,
            created_out,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.tmp.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut placed = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let dest = self.out.join(rel);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let src = self.tmp.join(rel);
            fs::rename(&src, &dest).map_err(|e| Error::io(&dest, e))?;
            placed.push(dest);
        }
        self.committed = true;
        fs::remove_dir_all(&self.tmp).map_err(|e| Error::io(&self.tmp, e))?;
        Ok(placed)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        let _ = fs::remove_dir_all(&self.tmp);
        if self.created_out {
            // only succeeds when nothing else was put there
            let _ = fs::remove_dir(&self.out);
        }
    }
}
