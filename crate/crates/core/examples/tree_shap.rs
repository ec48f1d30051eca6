//! TreeSHAP on a small boosted model, checked against brute-force
//! enumeration of every coalition.

use pdvoice::boost::{train_xgb, BoostConfig};
use pdvoice::data::synthetic::replicated_voice_like;
use pdvoice::select::{apply_mask, correlation_report, ThresholdRule};
use pdvoice::shap::{exact_shapley, explain_member, rank_features, ValueKind};
use pdvoice::voting::TrainedEnsemble;

fn main() -> pdvoice::Result<()> {
    let ds = replicated_voice_like(2);
    // keep the six strongest features so enumeration stays cheap
    let report = correlation_report(&ds, 0.0, ThresholdRule::Strict)?;
    let mut mask = report.mask();
    mask.indices = report.ranked().into_iter().take(6).collect();
    mask.indices.sort_unstable();
    let reduced = apply_mask(&ds, &mask)?;
    let x = reduced.feature_matrix();
    let y: Vec<f64> = reduced.labels().iter().map(|&l| f64::from(l)).collect();
    let cfg = BoostConfig {
        n_trees: 20,
        learning_rate: 0.3,
        max_depth: 3,
        ..BoostConfig::xgb()
    };
    let booster = train_xgb(&x, &y, &cfg)?;
    let member = TrainedEnsemble::Boosted(booster.clone());
    let background = x.select_rows(&(0..240).step_by(30).collect::<Vec<_>>());
    let rows = x.select_rows(&[0, 100, 200]);

    // in margin space the attribution is the exact Shapley value
    let attr = explain_member(&member, &rows, &background, ValueKind::Margin)?;
    println!("margin base value {:.4}, local accuracy error {:.1e}", attr.base_value, attr.local_accuracy_error());
    let f = |r: &[f64]| booster.margin_row(r);
    for (i, phi) in attr.phi.iter().enumerate() {
        let (exact, _) = exact_shapley(&f, rows.row(i), &background)?;
        let gap = phi.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("row {i}: output {:.4}, max |treeshap - exact| = {gap:.1e}", attr.model_output[i]);
    }
    let names = reduced.feature_names();
    let all = explain_member(&member, &x, &background, ValueKind::Probability)?;
    println!(
        "probability attributions: local accuracy error {:.1e}, ranking {:?}",
        all.local_accuracy_error(),
        rank_features(&all, &names)?.top(6)
    );
    Ok(())
}
