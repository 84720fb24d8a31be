//! Path-wise arithmetic on random variables with scalar broadcast.

use stochad::RandomVariable;

fn main() -> stochad::Result<()> {
    let x = RandomVariable::from(vec![-1.0, 0.5, 2.0, 3.5]);
    let payoff = x.sub(1.0)?.max(0.0)?.mul(2.0)?;
    println!("payoff      {:?}", payoff.samples().unwrap());
    println!("E(payoff)   {:.6}", payoff.expectation());
    println!("Var(payoff) {:.6}", payoff.variance()?);
    println!("1_(x>0)     {:?}", x.indicator().samples().unwrap());

    // a constant stays a single value until it meets a sampled variable
    let c = RandomVariable::constant(3.0).exp();
    println!("e^3 scalar  {:?}", c.scalar());
    println!("x * e^3     {:?}", x.mul(&c)?.samples().unwrap());
    Ok(())
}
