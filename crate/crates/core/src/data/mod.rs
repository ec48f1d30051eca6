//! Replicated acoustic-feature dataset: schema, CSV loading and writing,
//! fold assignment and optional standardization.
//!
//! Each subject contributes up to three rows (one per recorded phonation).
//! The label convention is PD = 1, healthy = 0.

mod folds;
mod matrix;
mod scaling;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{assign_folds, FoldAssignment, Grouping};
pub use matrix::Matrix;
pub use scaling::{apply_scaling, fit_scaling, ScalingParams};

/// Acoustic feature names of the replicated-features file, in file order.
pub const ACOUSTIC_FEATURES: [&str; 44] = [
    "Jitter_rel",
    "Jitter_abs",
    "Jitter_RAP",
    "Jitter_PPQ",
    "Shim_loc",
    "Shim_dB",
    "Shim_APQ3",
    "Shim_APQ5",
    "Shi_APQ11",
    "HNR05",
    "HNR15",
    "HNR25",
    "HNR35",
    "HNR38",
    "RPDE",
    "DFA",
    "PPE",
    "GNE",
    "MFCC0",
    "MFCC1",
    "MFCC2",
    "MFCC3",
    "MFCC4",
    "MFCC5",
    "MFCC6",
    "MFCC7",
    "MFCC8",
    "MFCC9",
    "MFCC10",
    "MFCC11",
    "MFCC12",
    "Delta0",
    "Delta1",
    "Delta2",
    "Delta3",
    "Delta4",
    "Delta5",
    "Delta6",
    "Delta7",
    "Delta8",
    "Delta9",
    "Delta10",
    "Delta11",
    "Delta12",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    PitchPerturbation,
    AmplitudePerturbation,
    HarmonicToNoise,
    Mfcc,
    DeltaMfcc,
    Rpde,
    Dfa,
    Ppe,
    Gne,
    Demographic,
}

impl FeatureGroup {
    /// Group of an acoustic feature, inferred from its column name.
    /// Unrecognised names return `None`.
    pub fn from_name(name: &str) -> Option<Self> {
        let group = if name.starts_with("Jitter") {
            Self::PitchPerturbation
        } else if name.starts_with("Shim") || name.starts_with("Shi_") {
            Self::AmplitudePerturbation
        } else if name.starts_with("HNR") {
            Self::HarmonicToNoise
        } else if name.starts_with("MFCC") {
            Self::Mfcc
        } else if name.starts_with("Delta") {
            Self::DeltaMfcc
        } else {
            match name {
                "RPDE" => Self::Rpde,
                "DFA" => Self::Dfa,
                "PPE" => Self::Ppe,
                "GNE" => Self::Gne,
                "Gender" => Self::Demographic,
                _ => return None,
            }
        };
        Some(group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// `None` for columns the schema names but the taxonomy does not know.
    pub group: Option<FeatureGroup>,
    pub column_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub subject_id: String,
    pub replication: u8,
    pub label: u8,
    pub gender: Option<u8>,
    /// Aligned with [`Dataset::specs`]; includes gender when the schema maps it.
    pub features: Vec<f64>,
}

/// Maps header names to column roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub subject: String,
    pub replication: String,
    pub label: String,
    #[serde(default)]
    pub gender: Option<String>,
    pub features: Vec<String>,
    /// Optional raw-label → {0,1} mapping for files that encode the label as text.
    #[serde(default)]
    pub label_map: Option<BTreeMap<String, u8>>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            subject: "ID".into(),
            replication: "Recording".into(),
            label: "Status".into(),
            gender: Some("Gender".into()),
            features: ACOUSTIC_FEATURES.iter().map(|s| s.to_string()).collect(),
            label_map: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    specs: Vec<FeatureSpec>,
    schema: Schema,
}

impl Dataset {
    /// Validates sample/spec alignment and per-subject consistency.
    pub fn new(samples: Vec<Sample>, specs: Vec<FeatureSpec>, schema: Schema) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &specs {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::DuplicateFeature(s.name.clone()));
            }
        }
        let mut per_subject: HashMap<&str, (u8, Option<u8>)> = HashMap::new();
        for (row, s) in samples.iter().enumerate() {
            if s.features.len() != specs.len() {
                return Err(Error::LengthMismatch {
                    left: s.features.len(),
                    right: specs.len(),
                });
            }
            if s.label > 1 {
                return Err(Error::BadLabel {
                    row,
                    value: s.label.to_string(),
                });
            }
            if !(1..=3).contains(&s.replication) {
                return Err(Error::BadReplication {
                    row,
                    value: s.replication.to_string(),
                });
            }
            let entry = per_subject
                .entry(s.subject_id.as_str())
                .or_insert((s.label, s.gender));
            if *entry != (s.label, s.gender) {
                return Err(Error::InconsistentSubject(s.subject_id.clone()));
            }
        }
        Ok(Self {
            samples,
            specs,
            schema,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.specs.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    /// Number of acoustic (non-demographic) feature columns.
    pub fn n_acoustic(&self) -> usize {
        self.specs
            .iter()
            .filter(|s| s.group != Some(FeatureGroup::Demographic))
            .count()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[j]).collect()
    }

    pub fn feature_matrix(&self) -> Matrix {
        let mut values = Vec::with_capacity(self.len() * self.n_features());
        for s in &self.samples {
            values.extend_from_slice(&s.features);
        }
        Matrix::new(self.len(), self.n_features(), values)
    }

    /// Distinct subject ids in order of first appearance.
    pub fn subjects(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.samples
            .iter()
            .filter(|s| seen.insert(s.subject_id.as_str()))
            .map(|s| s.subject_id.as_str())
            .collect()
    }

    /// Rows at `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            samples: rows.iter().map(|&r| self.samples[r].clone()).collect(),
            specs: self.specs.clone(),
            schema: self.schema.clone(),
        }
    }

    /// Restricts feature columns to `indices` (kept in the given order).
    pub fn select_columns(&self, indices: &[usize]) -> Result<Dataset> {
        let n = self.n_features();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: indices.iter().map(|&i| s.features[i]).collect(),
                ..s.clone()
            })
            .collect();
        let specs: Vec<FeatureSpec> = indices.iter().map(|&i| self.specs[i].clone()).collect();
        let mut schema = self.schema.clone();
        let gender_kept = specs
            .iter()
            .any(|s| Some(&s.name) == self.schema.gender.as_ref());
        schema.features = specs
            .iter()
            .filter(|s| Some(&s.name) != self.schema.gender.as_ref())
            .map(|s| s.name.clone())
            .collect();
        if !gender_kept {
            schema.gender = None;
        }
        Ok(Dataset {
            samples,
            specs,
            schema,
        })
    }

    /// Same rows with every feature column replaced through `f(column, value)`.
    pub fn map_features(&self, mut f: impl FnMut(usize, f64) -> f64) -> Dataset {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: s
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| f(j, v))
                    .collect(),
                ..s.clone()
            })
            .collect();
        Dataset {
            samples,
            specs: self.specs.clone(),
            schema: self.schema.clone(),
        }
    }
}

/// Loads a CSV file with a header row.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyFile),
        Err(e) => return Err(e.into()),
    };
    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let subject_col = position(&schema.subject)?;
    let replication_col = position(&schema.replication)?;
    let label_col = position(&schema.label)?;
    let gender_col = schema.gender.as_deref().map(position).transpose()?;

    let mut feature_cols: Vec<(String, usize)> = schema
        .features
        .iter()
        .map(|name| position(name).map(|c| (name.clone(), c)))
        .collect::<Result<_>>()?;
    if let (Some(name), Some(col)) = (&schema.gender, gender_col) {
        feature_cols.push((name.clone(), col));
    }
    feature_cols.sort_by_key(|&(_, c)| c);
    let specs: Vec<FeatureSpec> = feature_cols
        .iter()
        .map(|(name, col)| FeatureSpec {
            name: name.clone(),
            group: if Some(name) == schema.gender.as_ref() {
                Some(FeatureGroup::Demographic)
            } else {
                FeatureGroup::from_name(name).filter(|g| *g != FeatureGroup::Demographic)
            },
            column_index: *col,
        })
        .collect();

    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let number = |col: usize| -> Result<f64> { parse_number(&record[col], row, &headers[col]) };
        let label = parse_label(&record[label_col], row, schema)?;
        let replication = {
            let v = number(replication_col)?;
            if v.fract() != 0.0 || !(1.0..=3.0).contains(&v) {
                return Err(Error::BadReplication {
                    row,
                    value: record[replication_col].to_string(),
                });
            }
            v as u8
        };
        let gender = match gender_col {
            Some(col) => {
                let v = number(col)?;
                if v != 0.0 && v != 1.0 {
                    return Err(Error::BadGender {
                        row,
                        value: record[col].to_string(),
                    });
                }
                Some(v as u8)
            }
            None => None,
        };
        let features = feature_cols
            .iter()
            .map(|&(_, c)| number(c))
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample {
            subject_id: record[subject_col].to_string(),
            replication,
            label,
            gender,
            features,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyFile);
    }
    Dataset::new(samples, specs, schema.clone())
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    // `f64::from_str` accepts scientific notation and rejects comma decimals.
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_label(raw: &str, row: usize, schema: &Schema) -> Result<u8> {
    let bad = || Error::BadLabel {
        row,
        value: raw.to_string(),
    };
    if let Some(map) = &schema.label_map {
        return match map.get(raw) {
            Some(&v) if v <= 1 => Ok(v),
            _ => Err(bad()),
        };
    }
    match raw.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(bad()),
    }
}

/// Canonical CSV writer: subject, replication, label, then feature columns in
/// spec order. `significant_digits = None` writes the shortest representation
/// that parses back to the identical `f64`.
pub fn write_dataset<W: Write>(
    ds: &Dataset,
    writer: W,
    significant_digits: Option<usize>,
) -> Result<()> {
    if let Some(d) = significant_digits {
        if d < 6 {
            return Err(Error::InvalidConfig(format!(
                "at least 6 significant digits required, got {d}"
            )));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let schema = ds.schema();
    let mut header = vec![
        schema.subject.clone(),
        schema.replication.clone(),
        schema.label.clone(),
    ];
    header.extend(ds.specs().iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for s in ds.samples() {
        let mut record = vec![
            s.subject_id.clone(),
            s.replication.to_string(),
            s.label.to_string(),
        ];
        record.extend(
            ds.specs()
                .iter()
                .zip(&s.features)
                .map(|(spec, &v)| match (s.gender, schema.gender.as_ref()) {
                    (Some(g), Some(name)) if *name == spec.name => g.to_string(),
                    _ => format_number(v, significant_digits),
                }),
        );
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_dataset(
    ds: &Dataset,
    path: impl AsRef<Path>,
    significant_digits: Option<usize>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, std::io::BufWriter::new(file), significant_digits)
}

pub(crate) fn format_number(v: f64, significant_digits: Option<usize>) -> String {
    match significant_digits {
        None => format!("{v}"),
        Some(d) => format!("{:.*e}", d.saturating_sub(1), v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = vec!["ID", "Recording", "Status", "Gender"];
        h.extend(ACOUSTIC_FEATURES);
        h.join(",")
    }

    fn row(id: &str, rep: u8, label: &str, value: f64) -> String {
        let mut r = vec![id.to_string(), rep.to_string(), label.to_string(), "0".into()];
        r.extend(std::iter::repeat_n(value.to_string(), 44));
        r.join(",")
    }

    #[test]
    fn default_schema_has_full_taxonomy() {
        let schema = Schema::default();
        let mut counts: HashMap<FeatureGroup, usize> = HashMap::new();
        for name in &schema.features {
            *counts.entry(FeatureGroup::from_name(name).unwrap()).or_default() += 1;
        }
        assert_eq!(counts[&FeatureGroup::PitchPerturbation], 4);
        assert_eq!(counts[&FeatureGroup::AmplitudePerturbation], 5);
        assert_eq!(counts[&FeatureGroup::HarmonicToNoise], 5);
        assert_eq!(counts[&FeatureGroup::Mfcc], 13);
        assert_eq!(counts[&FeatureGroup::DeltaMfcc], 13);
        for g in [
            FeatureGroup::Rpde,
            FeatureGroup::Dfa,
            FeatureGroup::Ppe,
            FeatureGroup::Gne,
        ] {
            assert_eq!(counts[&g], 1);
        }
        assert_eq!(schema.features.len(), 44);
    }

    #[test]
    fn minimal_file_loads() {
        let csv = format!("{}\n{}\n", header(), row("S1", 1, "1", 0.0));
        let ds = read_dataset(csv.as_bytes(), &Schema::default()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.n_features(), 45);
        assert_eq!(ds.n_acoustic(), 44);
        assert_eq!(ds.specs()[0].name, "Gender");
        assert_eq!(ds.specs()[0].group, Some(FeatureGroup::Demographic));
        assert!(ds.samples()[0].features.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn label_two_is_rejected() {
        let csv = format!("{}\n{}\n", header(), row("S1", 1, "2", 0.0));
        let err = read_dataset(csv.as_bytes(), &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::BadLabel { row: 0, .. }), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "ID,Recording,Status\nS1,1,0\n";
        let err = read_dataset(csv.as_bytes(), &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "Gender"), "{err}");
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            read_dataset("".as_bytes(), &Schema::default()),
            Err(Error::EmptyFile)
        ));
        let csv = format!("{}\n", header());
        assert!(matches!(
            read_dataset(csv.as_bytes(), &Schema::default()),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn number_parsing_conventions() {
        let mut csv = format!("{}\n{}\n", header(), row("S1", 1, "0", 1.5e-3));
        let ds = read_dataset(csv.as_bytes(), &Schema::default()).unwrap();
        assert_eq!(ds.samples()[0].features[1], 1.5e-3);

        csv = csv.replacen("0.0015", "\"0,0015\"", 1);
        let err = read_dataset(csv.as_bytes(), &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { .. }), "{err}");
    }

    #[test]
    fn label_map_applies() {
        let csv = format!("{}\n{}\n", header(), row("S1", 1, "PD", 0.0));
        let mut schema = Schema::default();
        schema.label_map = Some([("PD".to_string(), 1u8), ("HC".to_string(), 0)].into());
        let ds = read_dataset(csv.as_bytes(), &schema).unwrap();
        assert_eq!(ds.labels(), vec![1]);
    }

    #[test]
    fn conflicting_subject_labels_rejected() {
        let csv = format!(
            "{}\n{}\n{}\n",
            header(),
            row("S1", 1, "0", 0.0),
            row("S1", 2, "1", 0.0)
        );
        assert!(matches!(
            read_dataset(csv.as_bytes(), &Schema::default()),
            Err(Error::InconsistentSubject(_))
        ));
    }

    #[test]
    fn writer_rejects_low_precision() {
        let ds = synthetic::replicated_voice_like(1);
        assert!(write_dataset(&ds, Vec::new(), Some(5)).is_err());
    }

    #[test]
    fn fixed_precision_round_trip_is_stable() {
        let ds = synthetic::replicated_voice_like(3);
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf, Some(8)).unwrap();
        let once = read_dataset(buf.as_slice(), ds.schema()).unwrap();
        let mut buf2 = Vec::new();
        write_dataset(&once, &mut buf2, Some(8)).unwrap();
        let twice = read_dataset(buf2.as_slice(), ds.schema()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(buf, buf2);
    }
}
