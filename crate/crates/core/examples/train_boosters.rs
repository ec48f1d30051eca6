//! Fits the three boosted families on the synthetic data and prints the
//! training log-loss as trees are added.

use pdvoice::boost::{train_boosted, training_loss, BoostConfig, Family};
use pdvoice::data::synthetic::replicated_voice_like;

fn main() -> pdvoice::Result<()> {
    let ds = replicated_voice_like(3);
    let x = ds.feature_matrix();
    let y: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    for family in [Family::Xgb, Family::Gbdt, Family::Lgbm] {
        let cfg = BoostConfig::for_family(family);
        let model = train_boosted(family, &x, &y, &cfg)?;
        let mut trace = Vec::new();
        for k in [1, 10, 50, model.trees.len()] {
            trace.push(format!("{k}: {:.4}", training_loss(&model.prefix(k), &x, &y)?));
        }
        let labels = model.predict_label(&x)?;
        let acc = labels.iter().zip(ds.labels()).filter(|(a, b)| **a == *b).count() as f64 / ds.len() as f64;
        println!("{:?}: log-loss by trees [{}], training accuracy {:.3}", family, trace.join(", "), acc);
    }
    Ok(())
}
