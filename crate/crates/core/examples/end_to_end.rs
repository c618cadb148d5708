//! The full `prep -> tune -> train -> eval` workflow, driven through the CLI
//! entry point.
//!
//!     cargo run --release --example end_to_end -- [out-dir]

use puffin_sentiment::cli::main_with_args;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/end_to_end".into());
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.csv");
    let steps: [&[&str]; 4] = [
        &["prep", "--data", data],
        &["tune", "--pop", "6", "--iters", "5", "--batch-size", "16"],
        &["train", "--epochs", "50", "--batch-size", "16"],
        &["eval"],
    ];
    for step in steps {
        println!("$ puffin-sentiment {} --out {out}", step.join(" "));
        let mut args = vec!["puffin-sentiment"];
        args.extend_from_slice(step);
        args.extend(["--out", &out]);
        let code = main_with_args(args);
        if code != 0 {
            std::process::exit(code);
        }
    }
    println!("artifacts in {out}");
}
