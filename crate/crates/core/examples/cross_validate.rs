//! Subject-grouped 4-fold evaluation of the full pipeline.

use pdvoice::data::{assign_folds, synthetic::replicated_voice_like, Grouping};
use pdvoice::eval::{cross_validate, PipelineConfig};

fn main() -> pdvoice::Result<()> {
    let ds = replicated_voice_like(7);
    for grouping in [Grouping::BySubject, Grouping::ByRow] {
        let folds = assign_folds(&ds, 4, grouping, 0)?;
        let out = cross_validate(&ds, &PipelineConfig::default(), &folds)?;
        println!("{grouping:?}, fold sizes {:?}", out.report.fold_sizes);
        for m in &out.report.models {
            let acc = m.pooled.accuracy.map_or("n/a".into(), |a| format!("{:.2}%", 100.0 * a));
            println!("  {:<8} pooled accuracy {acc:>7}  AUC {:.4}", m.name, m.roc.auc);
        }
        println!("  tied votes: {}", out.report.total_ties);
    }
    Ok(())
}
