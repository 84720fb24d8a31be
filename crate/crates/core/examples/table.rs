//! Comparison table over repeated seeds.
//!
//! `cargo run --release --example table -- [repeats] [paths]`

use stochad::{run_experiment, ExperimentConfig, TableSetup};

fn main() -> stochad::Result<()> {
    let mut args = std::env::args().skip(1);
    let repeats = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let paths = args.next().and_then(|s| s.parse().ok()).unwrap_or(200_000);

    let setup = TableSetup::new(0.05, 0.5, 2);
    let config = ExperimentConfig::reference(&setup)
        .with_repeats(repeats)
        .with_paths(paths);
    let stats = run_experiment(&config)?;
    print!("{}", stats.text_table());
    println!();
    print!("{}", stats.to_csv_string()?);
    Ok(())
}
