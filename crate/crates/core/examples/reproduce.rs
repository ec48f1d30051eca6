//! Runs select, cv, train, explain and report through the command-line
//! entry point, exactly as the binary would.
//!
//! cargo run --release --example reproduce -- [data.csv] [out_dir]
//! Without a data path the synthetic stand-in is written and used.

use pdvoice::data::{save_dataset, synthetic::replicated_voice_like};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = std::path::PathBuf::from(args.get(1).map_or("out", String::as_str));
    let data = match args.first().filter(|s| !s.is_empty()) {
        Some(p) => p.clone(),
        None => {
            std::fs::create_dir_all(&out).expect("create output dir");
            let p = out.join("synthetic.csv");
            save_dataset(&replicated_voice_like(7), &p, None).expect("write synthetic data");
            p.display().to_string()
        }
    };
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reproduction.json");
    for cmd in ["select", "cv", "train", "explain", "report"] {
        println!("== {cmd}");
        let code = pdvoice::app::run([
            "pdvoice",
            cmd,
            "--config",
            config,
            "--data",
            &data,
            "--out",
            out.to_str().expect("utf-8 path"),
        ]);
        if code != 0 {
            std::process::exit(code);
        }
    }
}
