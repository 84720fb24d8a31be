//! Delta of a digital option by every estimator on one shared set of paths.
//!
//! `cargo run --release --example digital_delta -- [paths] [seed]`

use stochad::estimators::estimate_delta_on_paths;
use stochad::model::analytic_digital_value;
use stochad::{BlackScholesParams, DigitalOption, Paths, TableSetup};

fn main() -> stochad::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let params = BlackScholesParams::reference();
    let option = DigitalOption::reference();
    let paths = Paths::simulate(&params, n, seed);
    println!(
        "value {:.6} (analytic)",
        analytic_digital_value(&params, &option)
    );

    for spec in TableSetup::new(0.05, 0.5, 2).estimators() {
        let delta = estimate_delta_on_paths(&spec, &option, &paths)?;
        println!("{:<28} {delta:.6}", spec.label);
    }
    Ok(())
}
