//! Incoming adjoint at an indicator from two sweeps with its local
//! derivative forced to 1 and to 0.

use stochad::estimators::record_digital;
use stochad::{BlackScholesParams, DigitalOption, IndicatorDiffStrategy, Paths, Tape};

fn main() -> stochad::Result<()> {
    let params = BlackScholesParams::reference();
    let option = DigitalOption::reference();
    let paths = Paths::simulate(&params, 10, 3);

    let tape = Tape::new();
    let graph = record_digital(&tape, &paths, &option)?;
    let strategy = IndicatorDiffStrategy::Constant(0.0);
    let jump =
        tape.adjoint_at_indicator_via_two_runs(graph.payoff.id(), graph.indicator.id(), &strategy)?;

    println!("discount factor {:.6}", params.discount());
    println!("jump at trigger {:?}", jump.to_vec(paths.path_count()));
    Ok(())
}
