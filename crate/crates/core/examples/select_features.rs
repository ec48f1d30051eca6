//! Correlation screening on a CSV (or the synthetic stand-in when no path is given).
//!
//! cargo run --example select_features -- [data.csv] [threshold]

use pdvoice::data::{load_dataset, synthetic::replicated_voice_like, Schema};
use pdvoice::select::{apply_mask, correlation_report, ThresholdRule};

fn main() -> pdvoice::Result<()> {
    let mut args = std::env::args().skip(1);
    let ds = match args.next() {
        Some(p) => load_dataset(p, &Schema::default())?,
        None => replicated_voice_like(7),
    };
    let threshold = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.47);
    let report = correlation_report(&ds, threshold, ThresholdRule::Strict)?;
    println!("selected {} of {} at |r| > {threshold}", report.selected_count(), ds.n_features());
    for &i in report.ranked().iter().take(10) {
        let e = &report.entries[i];
        println!("  {:<12} r = {:+.4}{}", e.name, e.r, if e.selected { "" } else { "  (dropped)" });
    }
    let reduced = apply_mask(&ds, &report.mask())?;
    println!("reduced dataset: {} rows x {} columns", reduced.len(), reduced.n_features());
    Ok(())
}
