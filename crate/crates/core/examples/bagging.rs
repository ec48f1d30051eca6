//! Bootstrap-aggregated trees: coverage of one draw, then predictions as
//! the ensemble grows.

use pdvoice::bagging::{bootstrap_sample, train_bagging, BaggingConfig};
use pdvoice::data::synthetic::replicated_voice_like;

fn main() -> pdvoice::Result<()> {
    let ds = replicated_voice_like(11);
    let (x, y) = (ds.feature_matrix(), ds.labels());
    let sample = bootstrap_sample(ds.len(), 1.0, 0);
    let mut distinct = sample.clone();
    distinct.sort_unstable();
    distinct.dedup();
    println!("one bootstrap draw covers {} of {} rows", distinct.len(), ds.len());

    for n in [1, 10, 100] {
        let cfg = BaggingConfig {
            n_estimators: n,
            ..BaggingConfig::default()
        };
        let model = train_bagging(&x, &y, &cfg)?;
        let p = model.predict_proba(&x)?;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        println!("{n:>3} trees: mean P(PD) {mean:.3}, first rows {:.2?}", &p[..4]);
    }
    Ok(())
}
