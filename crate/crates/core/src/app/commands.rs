use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{json_with_provenance, read_json_artifact, Background, Provenance, RunConfig, Staging};
use crate::data::{assign_folds, read_dataset, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, predictions_csv, roc_csv, CvReport, MetricsReport, PipelineConfig, MODEL_NAMES};
use crate::select::{apply_mask, correlation_report, CorrelationReport};
use crate::shap::{
    beeswarm_csv, combine_vote_share, explain_member, phi_csv, rank_features, ranking_svg, AttributionResult,
    FeatureRanking, ValueKind,
};
use crate::voting::{train_voting, TieBreak, TrainedEnsemble, VotingModel, MEMBER_NAMES};

/// Largest tolerated `|base + sum(phi) - output|` in anything `explain` writes.
const LOCAL_ACCURACY_TOL: f64 = 1e-9;
const SVG_TOP_K: usize = 20;

/// Published per-model averages in percent: accuracy, precision, sensitivity, specificity, F1.
pub const REFERENCE_TABLE: [(&str, [f64; 5]); 5] = [
    ("XGB", [85.00, 86.09, 83.20, 86.69, 84.61]),
    ("LGBM", [83.33, 83.98, 82.54, 84.52, 83.05]),
    ("GBDT", [82.50, 84.87, 80.30, 85.98, 82.21]),
    ("Bagging", [81.25, 83.95, 76.88, 85.32, 79.99]),
    ("Voting", [85.42, 86.77, 83.20, 87.62, 84.94]),
];

/// Earlier single-model results on the same data, same column order.
const EXTERNAL_BASELINES: [(&str, [f64; 5]); 2] = [
    ("XGBoost (published baseline)", [81.60, 83.50, 80.10, 83.00, 81.00]),
    ("LightGBM (published baseline)", [84.10, 85.30, 83.90, 84.40, 83.90]),
];

fn load_input(cfg: &RunConfig) -> Result<(Dataset, Vec<u8>)> {
    let bytes = fs::read(&cfg.data).map_err(|e| Error::io(&cfg.data, e))?;
    let ds = read_dataset(bytes.as_slice(), &cfg.schema)?;
    Ok((ds, bytes))
}

fn pipeline(cfg: &RunConfig) -> PipelineConfig {
    PipelineConfig {
        selection: cfg.selection.clone(),
        voting: cfg.voting.clone(),
    }
}

fn with_csv_provenance(prov: &Provenance, body: &str) -> String {
    let mut s = prov.csv_comment();
    s.push_str(body);
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_with_provenance(prov: &Provenance, svg: &str) -> Result<String> {
    let meta = format!("<metadata>{}</metadata>\n", xml_escape(&serde_json::to_string(prov)?));
    let cut = svg.find('\n').map_or(svg.len(), |i| i + 1);
    Ok(format!("{}{meta}{}", &svg[..cut], &svg[cut..]))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{:.2}", 100.0 * x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SelectionOutput {
    n_features: usize,
    n_selected: usize,
    selected: Vec<String>,
    report: CorrelationReport,
}

pub(super) fn select(cfg: &RunConfig) -> Result<Vec<String>> {
    let (ds, bytes) = load_input(cfg)?;
    let prov = Provenance::new("select", cfg, &bytes);
    let report = correlation_report(&ds, cfg.selection.threshold, cfg.selection.rule)?;
    let selected: Vec<String> = report
        .entries
        .iter()
        .filter(|e| e.selected)
        .map(|e| e.name.clone())
        .collect();
    let out = SelectionOutput {
        n_features: ds.n_features(),
        n_selected: selected.len(),
        selected,
        report,
    };
    let mut staging = Staging::new(&cfg.output_dir, "select")?;
    staging.write("selection.json", &json_with_provenance(&out, &prov)?)?;
    staging.write("correlations.csv", &with_csv_provenance(&prov, &out.report.to_csv()))?;
    staging.commit()?;
    let mut lines = vec![format!("selected {} of {}", out.n_selected, out.n_features)];
    let top: Vec<&str> = out
        .report
        .ranked()
        .into_iter()
        .take(4)
        .map(|i| out.report.entries[i].name.as_str())
        .collect();
    lines.push(format!("strongest |r|: {}", top.join(", ")));
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMember {
    pub name: String,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
}

/// `model.json`: points at one file per voting member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub members: Vec<ManifestMember>,
    pub weights: Vec<u32>,
    pub tie_break: TieBreak,
    pub feature_names: Vec<String>,
}

fn write_voting(staging: &mut Staging, dir: &Path, model: &VotingModel, names: &[String], prov: &Provenance) -> Result<()> {
    let mut members = Vec::with_capacity(model.members.len());
    for (m, name) in model.members.iter().zip(MEMBER_NAMES) {
        let rel = PathBuf::from("models").join(format!("{}.json", name.to_lowercase()));
        staging.write(dir.join(&rel), &json_with_provenance(m, prov)?)?;
        members.push(ManifestMember {
            name: name.to_string(),
            path: rel,
        });
    }
    let manifest = ModelManifest {
        members,
        weights: model.weights.clone(),
        tie_break: model.tie_break,
        feature_names: names.to_vec(),
    };
    staging.write(dir.join("model.json"), &json_with_provenance(&manifest, prov)?)
}

enum LoadedModel {
    Voting(VotingModel),
    Member(TrainedEnsemble),
}

impl LoadedModel {
    fn feature_names(&self) -> &[String] {
        match self {
            Self::Voting(v) => v.members[0].feature_names(),
            Self::Member(m) => m.feature_names(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            Self::Voting(v) => v.n_features(),
            Self::Member(m) => m.n_features(),
        }
    }
}

fn load_model(path: &Path) -> Result<LoadedModel> {
    if !path.is_file() {
        return Err(Error::MissingPrerequisite(format!(
            "model file {} not found; run `pdvoice train` first or pass --model",
            path.display()
        )));
    }
    let (value, _): (serde_json::Value, _) = read_json_artifact(path)?;
    if value.get("members").is_none() {
        return Ok(LoadedModel::Member(serde_json::from_value(value)?));
    }
    let manifest: ModelManifest = serde_json::from_value(value)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut members = Vec::with_capacity(manifest.members.len());
    for entry in &manifest.members {
        let p = dir.join(&entry.path);
        if !p.is_file() {
            return Err(Error::MissingPrerequisite(format!("member file {} not found", p.display())));
        }
        let (mut m, _): (TrainedEnsemble, _) = read_json_artifact(&p)?;
        if m.feature_names().is_empty() {
            m.set_feature_names(manifest.feature_names.clone());
        }
        if m.feature_names() != manifest.feature_names.as_slice() {
            return Err(Error::SchemaMismatch(format!("member {} disagrees with its manifest", entry.name)));
        }
        members.push(m);
    }
    Ok(LoadedModel::Voting(VotingModel::new(members, manifest.weights, manifest.tie_break)?))
}

pub(super) fn train(cfg: &RunConfig) -> Result<Vec<String>> {
    let (ds, bytes) = load_input(cfg)?;
    let prov = Provenance::new("train", cfg, &bytes);
    let mask = pipeline(cfg).mask(&ds, None)?;
    let reduced = apply_mask(&ds, &mask)?;
    let names = reduced.feature_names();
    let mut model = train_voting(&reduced.feature_matrix(), &reduced.labels(), &cfg.voting)?;
    for m in &mut model.members {
        m.set_feature_names(names.clone());
    }
    let mut staging = Staging::new(&cfg.output_dir, "train")?;
    write_voting(&mut staging, Path::new(""), &model, &names, &prov)?;
    staging.commit()?;
    Ok(vec![format!(
        "trained {} members on {} rows x {} features; manifest {}",
        model.members.len(),
        ds.len(),
        names.len(),
        cfg.output_dir.join("model.json").display()
    )])
}

pub(super) fn cv(cfg: &RunConfig) -> Result<Vec<String>> {
    let (ds, bytes) = load_input(cfg)?;
    let prov = Provenance::new("cv", cfg, &bytes);
    let folds = assign_folds(&ds, cfg.cv.k, cfg.cv.grouping, cfg.cv.seed)?;
    let outcome = cross_validate(&ds, &pipeline(cfg), &folds)?;
    let mut staging = Staging::new(&cfg.output_dir, "cv")?;
    staging.write("cv_report.json", &json_with_provenance(&outcome.report, &prov)?)?;
    staging.write("predictions.csv", &with_csv_provenance(&prov, &predictions_csv(&outcome.predictions)))?;
    staging.write("roc.csv", &with_csv_provenance(&prov, &roc_csv(&outcome.report)))?;
    for fm in &outcome.models {
        let dir = PathBuf::from("folds").join(format!("fold{}", fm.fold));
        write_voting(&mut staging, &dir, &fm.model, &fm.feature_names, &prov)?;
    }
    staging.commit()?;

    let mut lines = Vec::new();
    for m in &outcome.report.models {
        lines.push(format!(
            "{:<8} pooled accuracy {}%  AUC {:.4}",
            m.name,
            pct(m.pooled.accuracy),
            m.roc.auc
        ));
    }
    if let Some(v) = outcome.report.model("Voting") {
        let target = REFERENCE_TABLE[4].1[0];
        let delta = v.pooled.accuracy.map_or_else(
            || "n/a".to_string(),
            |a| format!("{:+.2} pp", 100.0 * a - target),
        );
        lines.push(format!(
            "Voting pooled accuracy {}% vs reference {target:.2}% ({delta}); tied votes: {}",
            pct(v.pooled.accuracy),
            outcome.report.total_ties
        ));
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberShap {
    pub name: String,
    pub local_accuracy_error: f64,
    pub ranking: FeatureRanking,
}

/// Contents of `shap_ranking.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub value_kind: ValueKind,
    pub n_rows: usize,
    pub background_rows: usize,
    pub base_value: f64,
    /// Largest local-accuracy error over every attribution computed.
    pub local_accuracy_error: f64,
    pub ranking: FeatureRanking,
    pub members: Vec<MemberShap>,
    /// Rows where the hard vote was tied; the vote-share surrogate sits at the cut there.
    pub tie_rows: Vec<usize>,
}

fn background_rows(cfg: &RunConfig, x: &Matrix) -> Matrix {
    match cfg.shap.background {
        Background::Sample { size } if size < x.n_rows() => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.shap.seed);
            let mut idx = rand::seq::index::sample(&mut rng, x.n_rows(), size).into_vec();
            idx.sort_unstable();
            x.select_rows(&idx)
        }
        _ => x.clone(),
    }
}

fn check_local_accuracy(label: &str, attr: &AttributionResult) -> Result<f64> {
    let err = attr.local_accuracy_error();
    if err.is_finite() && err <= LOCAL_ACCURACY_TOL {
        Ok(err)
    } else {
        Err(Error::InvariantBreach(format!(
            "{label} attribution misses local accuracy by {err:e}"
        )))
    }
}

pub(super) fn explain(cfg: &RunConfig, model_path: &Path) -> Result<Vec<String>> {
    let model = load_model(model_path)?;
    let (ds, bytes) = load_input(cfg)?;
    let prov = Provenance::new("explain", cfg, &bytes);
    let mask = pipeline(cfg).mask(&ds, None)?;
    let reduced = apply_mask(&ds, &mask)?;
    let names = reduced.feature_names();
    if model.n_features() != names.len() {
        return Err(Error::FeatureCountMismatch {
            expected: model.n_features(),
            got: names.len(),
        });
    }
    if !model.feature_names().is_empty() && model.feature_names() != names.as_slice() {
        let (i, (a, b)) = model
            .feature_names()
            .iter()
            .zip(&names)
            .enumerate()
            .find(|(_, (a, b))| a != b)
            .expect("lists differ");
        return Err(Error::SchemaMismatch(format!(
            "column {i} is `{a}` in the model but `{b}` after selection"
        )));
    }
    let x = reduced.feature_matrix();
    let bg = background_rows(cfg, &x);

    let (attr, members, tie_rows) = match &model {
        LoadedModel::Voting(v) => {
            let per_member = v
                .members
                .iter()
                .map(|m| explain_member(m, &x, &bg, ValueKind::Probability))
                .collect::<Result<Vec<_>>>()?;
            let mut members = Vec::with_capacity(per_member.len());
            for (a, name) in per_member.iter().zip(MEMBER_NAMES) {
                members.push(MemberShap {
                    name: name.to_string(),
                    local_accuracy_error: check_local_accuracy(name, a)?,
                    ranking: rank_features(a, &names)?,
                });
            }
            let combined = combine_vote_share(&per_member, &v.weights)?;
            let ties = v.predict(&x)?.ties;
            let tie_rows = ties.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i).collect();
            (combined, members, tie_rows)
        }
        LoadedModel::Member(m) => (explain_member(m, &x, &bg, ValueKind::Probability)?, Vec::new(), Vec::new()),
    };
    let err = check_local_accuracy("model", &attr)?;
    let ranking = rank_features(&attr, &names)?;
    let summary = ShapSummary {
        value_kind: attr.value_kind,
        n_rows: x.n_rows(),
        background_rows: bg.n_rows(),
        base_value: attr.base_value,
        local_accuracy_error: members.iter().map(|m| m.local_accuracy_error).fold(err, f64::max),
        ranking,
        members,
        tie_rows,
    };

    let mut staging = Staging::new(&cfg.output_dir, "explain")?;
    staging.write("shap_phi.csv", &with_csv_provenance(&prov, &phi_csv(&attr, &names)))?;
    staging.write("shap_beeswarm.csv", &with_csv_provenance(&prov, &beeswarm_csv(&attr, &x, &names)))?;
    staging.write("shap_ranking.json", &json_with_provenance(&summary, &prov)?)?;
    staging.write("shap_ranking.svg", &svg_with_provenance(&prov, &ranking_svg(&summary.ranking, SVG_TOP_K))?)?;
    staging.commit()?;
    Ok(vec![
        format!(
            "explained {} rows x {} features against {} background rows (max local accuracy error {:.1e})",
            summary.n_rows,
            names.len(),
            summary.background_rows,
            summary.local_accuracy_error
        ),
        format!("top features: {}", summary.ranking.top(5).join(", ")),
    ])
}

fn metric_values(m: &MetricsReport) -> [Option<f64>; 5] {
    [m.accuracy, m.precision, m.sensitivity, m.specificity, m.f1]
}

fn render_report(report: &CvReport, shap: Option<&ShapSummary>, prov: &Provenance) -> Result<String> {
    let mut md = String::from("# Cross-validation summary\n\n");
    let sizes: Vec<String> = report.fold_sizes.iter().map(|s| s.to_string()).collect();
    let grouping = serde_json::to_value(report.grouping)?;
    writeln!(
        md,
        "{}-fold CV, grouping `{}`, seed {}, fold sizes {}.",
        report.k,
        grouping.as_str().unwrap_or("?"),
        report.seed,
        sizes.join("/")
    )
    .unwrap();
    let counts: Vec<String> = report.selected_features.iter().map(|f| f.len().to_string()).collect();
    writeln!(md, "Selected features per fold: {}.\n", counts.join("/")).unwrap();

    md.push_str("## Pooled metrics (%)\n\n");
    md.push_str("| Model | Accuracy | Precision | Sensitivity | Specificity | F1 | AUC |\n");
    md.push_str("|---|---|---|---|---|---|---|\n");
    for name in MODEL_NAMES {
        let Some(m) = report.model(name) else { continue };
        write!(md, "| {name} |").unwrap();
        for v in metric_values(&m.pooled) {
            write!(md, " {} |", pct(v)).unwrap();
        }
        writeln!(md, " {:.4} |", m.roc.auc).unwrap();
    }

    md.push_str("\n## Fold-mean metrics vs reference (%)\n\n");
    md.push_str("Each cell: this run / reference (delta in percentage points).\n\n");
    md.push_str("| Model | Accuracy | Precision | Sensitivity | Specificity | F1 |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for (name, reference) in REFERENCE_TABLE {
        let Some(m) = report.model(name) else { continue };
        let mean = &m.fold_mean;
        let ours = [mean.accuracy, mean.precision, mean.sensitivity, mean.specificity, mean.f1];
        write!(md, "| {name} |").unwrap();
        for (v, r) in ours.iter().zip(reference) {
            match v {
                Some(v) => write!(md, " {:.2} / {r:.2} ({:+.2}) |", 100.0 * v, 100.0 * v - r).unwrap(),
                None => write!(md, " n/a / {r:.2} |").unwrap(),
            }
        }
        md.push('\n');
    }

    md.push_str("\n## Voting model vs earlier single-model results (%)\n\n");
    md.push_str("| Classifier | Accuracy | Precision | Sensitivity | Specificity | F1 |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for (name, vals) in EXTERNAL_BASELINES {
        write!(md, "| {name} |").unwrap();
        for v in vals {
            write!(md, " {v:.2} |").unwrap();
        }
        md.push('\n');
    }
    if let Some(v) = report.model("Voting") {
        md.push_str("| Voting (this run, pooled) |");
        for x in metric_values(&v.pooled) {
            write!(md, " {} |", pct(x)).unwrap();
        }
        md.push('\n');
    }

    md.push_str("\n## Per-fold accuracy (%)\n\n| Model |");
    for f in 0..report.k {
        write!(md, " Fold {} |", f + 1).unwrap();
    }
    md.push_str("\n|---|");
    md.push_str(&"---|".repeat(report.k));
    md.push('\n');
    for m in &report.models {
        write!(md, "| {} |", m.name).unwrap();
        for f in &m.folds {
            write!(md, " {} |", pct(f.accuracy)).unwrap();
        }
        md.push('\n');
    }

    let ties: Vec<String> = report.ties_per_fold.iter().map(|t| t.to_string()).collect();
    writeln!(
        md,
        "\n## Tied votes\n\n{} tied rows in total (per fold {}); ties resolve by the configured tie rule.",
        report.total_ties,
        ties.join("/")
    )
    .unwrap();

    if let Some(s) = shap {
        md.push_str("\n## SHAP ranking (mean |phi|, vote share)\n\n| Rank | Feature | Mean abs phi |\n|---|---|---|\n");
        for (i, e) in s.ranking.entries.iter().take(10).enumerate() {
            writeln!(md, "| {} | {} | {:.6} |", i + 1, e.feature, e.mean_abs_phi).unwrap();
        }
    }

    writeln!(md, "\n## Provenance\n\n```json\n{}\n```", serde_json::to_string_pretty(prov)?).unwrap();
    Ok(md)
}

pub(super) fn report(cfg: &RunConfig) -> Result<Vec<String>> {
    let path = cfg.output_dir.join("cv_report.json");
    if !path.is_file() {
        return Err(Error::MissingPrerequisite(format!(
            "{} not found; run `pdvoice cv` first",
            path.display()
        )));
    }
    let (report, source): (CvReport, _) = read_json_artifact(&path)?;
    let Some(source) = source else {
        return Err(Error::MissingPrerequisite(format!("{} carries no provenance", path.display())));
    };
    let shap_path = cfg.output_dir.join("shap_ranking.json");
    let shap = if shap_path.is_file() {
        Some(read_json_artifact::<ShapSummary>(&shap_path)?.0)
    } else {
        None
    };
    let prov = Provenance {
        command: "report".into(),
        ..source
    };
    let md = render_report(&report, shap.as_ref(), &prov)?;
    let mut staging = Staging::new(&cfg.output_dir, "report")?;
    staging.write("report.md", &md)?;
    staging.commit()?;
    Ok(vec![format!("wrote {}", cfg.output_dir.join("report.md").display())])
}
