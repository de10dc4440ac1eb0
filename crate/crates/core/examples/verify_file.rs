//! Load a system file and run the whole verification suite.
//!
//!     cargo run --example verify_file -- examples/systems/e1_operators.json

use hscale::format::load_system;
use hscale::verify::{verify, VerifyOptions};

fn main() -> hscale::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/systems/e1_operators.json").into());
    let text = std::fs::read_to_string(&path).expect("readable file");
    let loaded = load_system(&text, None)?;
    println!("{} operators declared", loaded.operators.len());
    let report = verify(&loaded, VerifyOptions { seed: 42, samples: 100 });
    print!("{}", report.render());
    Ok(())
}
