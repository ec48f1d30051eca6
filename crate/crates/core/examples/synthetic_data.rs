//! Writes the seeded synthetic stand-in dataset as CSV.
//!
//! cargo run --example synthetic_data -- out/synthetic.csv [seed]

use pdvoice::data::{save_dataset, synthetic::replicated_voice_like};

fn main() -> pdvoice::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "synthetic.csv".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let ds = replicated_voice_like(seed);
    if let Some(dir) = std::path::Path::new(&path).parent() {
        std::fs::create_dir_all(dir).ok();
    }
    save_dataset(&ds, &path, None)?;
    println!("wrote {} rows x {} features to {path}", ds.len(), ds.n_features());
    Ok(())
}
