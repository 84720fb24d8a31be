//! Black-Scholes terminal values and digital-option reference quantities.

use rand_mt::Mt;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{ensure_positive, Error, Result};
use crate::random_variable::RandomVariable;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackScholesParams {
    pub spot: f64,
    pub rate: f64,
    pub volatility: f64,
    pub maturity: f64,
}

impl BlackScholesParams {
    pub fn new(spot: f64, rate: f64, volatility: f64, maturity: f64) -> Result<Self> {
        ensure_positive("spot", spot)?;
        ensure_positive("volatility", volatility)?;
        ensure_positive("maturity", maturity)?;
        if !rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rate",
                detail: format!("{rate} is not finite"),
            });
        }
        Ok(Self {
            spot,
            rate,
            volatility,
            maturity,
        })
    }

    /// `S0 = 1`, `r = 5%`, `sigma = 50%`, `T = 1`.
    pub fn reference() -> Self {
        Self {
            spot: 1.0,
            rate: 0.05,
            volatility: 0.5,
            maturity: 1.0,
        }
    }

    pub fn with_spot(&self, spot: f64) -> Self {
        Self { spot, ..*self }
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// `(r - sigma^2/2) T`
    pub fn log_drift(&self) -> f64 {
        (self.rate - 0.5 * self.volatility * self.volatility) * self.maturity
    }

    /// `sigma sqrt(T)`
    pub fn total_vol(&self) -> f64 {
        self.volatility * self.maturity.sqrt()
    }
}

/// Pays `1` at maturity when `S_T > K`; the trigger is `X = S_T - K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitalOption {
    pub strike: f64,
}

impl DigitalOption {
    pub fn new(strike: f64) -> Result<Self> {
        ensure_positive("strike", strike)?;
        Ok(Self { strike })
    }

    /// `K = 1.05`.
    pub fn reference() -> Self {
        Self { strike: 1.05 }
    }
}

/// MT19937 seeded with the reference 32-bit initialisation when the seed
/// fits, otherwise by the two-word key array.
fn mersenne_twister(seed: u64) -> Mt {
    match u32::try_from(seed) {
        Ok(s) => Mt::new(s),
        Err(_) => Mt::new_with_key([seed as u32, (seed >> 32) as u32]),
    }
}

/// Uniform on the open interval (0, 1) with 53 random bits.
fn open_uniform(mt: &mut Mt) -> f64 {
    let a = (mt.next_u32() >> 5) as f64;
    let b = (mt.next_u32() >> 6) as f64;
    (a * 67_108_864.0 + b + 0.5) / 9_007_199_254_740_992.0
}

/// `n` standard normals by inverse-CDF transform of one uniform per path.
pub fn standard_normals(n: usize, seed: u64) -> RandomVariable {
    assert!(n >= 1, "need at least one path");
    let normal = Normal::standard();
    let mut mt = mersenne_twister(seed);
    RandomVariable::from_fn(n, |_| normal.inverse_cdf(open_uniform(&mut mt)))
}

/// Simulated single-step Black-Scholes paths for one seed.
///
/// Only the spot-independent factor `S_T / S0` is stored, so the same paths
/// serve any initial value (common random numbers for bumped valuations).
#[derive(Debug, Clone)]
pub struct Paths {
    pub params: BlackScholesParams,
    pub normals: RandomVariable,
    growth: RandomVariable,
}

impl Paths {
    pub fn simulate(params: &BlackScholesParams, n: usize, seed: u64) -> Self {
        Self::from_normals(params, standard_normals(n, seed))
    }

    pub fn from_normals(params: &BlackScholesParams, normals: RandomVariable) -> Self {
        let drift = params.log_drift();
        let vol = params.total_vol();
        let growth = normals.map(|z| (drift + vol * z).exp());
        Self {
            params: *params,
            normals,
            growth,
        }
    }

    pub fn path_count(&self) -> usize {
        self.normals.len().unwrap_or(1)
    }

    /// `S_T / S0`, which is also `dS_T / dS0`.
    pub fn growth(&self) -> &RandomVariable {
        &self.growth
    }

    /// `S_T` for initial value `spot`.
    pub fn terminal(&self, spot: f64) -> RandomVariable {
        self.growth.map(|g| spot * g)
    }

    /// Records `S_T = S0 * growth` with `spot` as the differentiable input.
    pub fn terminal_on<'t>(&self, spot: &Var<'t>) -> Result<Var<'t>> {
        let tape: &'t Tape = spot.tape();
        spot.mul(&tape.constant(self.growth.clone()))
    }
}

/// Terminal values `S_T` for `n` paths of `seed`.
pub fn generate_terminal(params: &BlackScholesParams, n: usize, seed: u64) -> RandomVariable {
    Paths::simulate(params, n, seed).terminal(params.spot)
}

fn d_minus(params: &BlackScholesParams, strike: f64) -> f64 {
    ((params.spot / strike).ln() + params.log_drift()) / params.total_vol()
}

/// `e^{-rT} Phi(d-)`
pub fn analytic_digital_value(params: &BlackScholesParams, option: &DigitalOption) -> f64 {
    params.discount() * Normal::standard().cdf(d_minus(params, option.strike))
}

/// `e^{-rT} phi(d-) / (S0 sigma sqrt(T))`
pub fn analytic_digital_delta(params: &BlackScholesParams, option: &DigitalOption) -> f64 {
    params.discount() * Normal::standard().pdf(d_minus(params, option.strike))
        / (params.spot * params.total_vol())
}

/// Density of `S_T` at `level`, i.e. of the trigger `S_T - K` at zero when
/// `level = K`.
pub fn terminal_density(params: &BlackScholesParams, level: f64) -> f64 {
    Normal::standard().pdf(d_minus(params, level)) / (level * params.total_vol())
}

/// Likelihood-ratio weight for `d/dS0`:
/// `W = [ln(S_T/S0) - (r - sigma^2/2) T] / (S0 sigma^2 T)`.
pub fn likelihood_ratio_delta_weight(
    params: &BlackScholesParams,
    terminal: &RandomVariable,
) -> Result<RandomVariable> {
    let log_return = terminal.div(params.spot)?.log()?;
    let scale = params.spot * params.volatility * params.volatility * params.maturity;
    let drift = params.log_drift();
    Ok(log_return.map(|l| (l - drift) / scale))
}
