//! Recording a computation and reading path-wise adjoints from one sweep.

use stochad::{IndicatorDiffStrategy, RandomVariable, Tape};

fn main() -> stochad::Result<()> {
    let tape = Tape::new();
    let a = tape.input(RandomVariable::from(vec![0.5, 1.0, 1.5, 2.0]));
    let b = tape.input(3.0);

    // f = exp(a) * b + a / b
    let f = a.exp()?.mul(&b)?.add(&a.div(&b)?)?;
    // no indicator on this tape, so the strategy is never consulted
    let adjoints = tape.backward(f.id(), &IndicatorDiffStrategy::Constant(0.0))?;

    println!("f           {:?}", f.value().samples().unwrap());
    println!(
        "df/da       {:?}",
        adjoints.adjoint(a.id())?.samples().unwrap()
    );
    println!(
        "df/db       {:?}",
        adjoints.adjoint(b.id())?.samples().unwrap()
    );
    println!("dE(f)/db    {:.6}", adjoints.derivative(b.id())?);
    Ok(())
}
