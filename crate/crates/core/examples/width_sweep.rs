//! Bias and spread of each estimator as the window shrinks.

use stochad::experiment::sweep_text_table;
use stochad::{width_sweep, ExperimentConfig, TableSetup};

fn main() -> stochad::Result<()> {
    let setup = TableSetup::new(0.05, 0.5, 2);
    let config = ExperimentConfig::reference(&setup)
        .with_repeats(20)
        .with_paths(100_000);
    let rows = width_sweep(&config, &setup, &[1.0, 0.5, 0.1, 0.05, 0.025])?;
    print!("{}", sweep_text_table(&rows));
    Ok(())
}
