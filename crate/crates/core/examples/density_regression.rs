//! Density at zero of a standard normal sample from the two regression scatters.

use stochad::model::standard_normals;
use stochad::regression::{empirical_density_samples, fit_density, fit_distribution};

fn main() -> stochad::Result<()> {
    let x = standard_normals(100_000, 7);
    let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    println!("exact            {exact:.6}");
    for half_width in [0.1, 0.25, 0.5] {
        let samples = empirical_density_samples(&x, half_width)?;
        for order in [1, 2, 3] {
            println!(
                "r={half_width:<5} m={order}  density {:.6}  distribution {:.6}",
                fit_density(&samples, order)?,
                fit_distribution(&x, half_width, order)?
            );
        }
    }
    Ok(())
}
