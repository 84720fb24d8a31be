//! Delta estimators for the digital option.
//!
//! Every estimator is a deterministic function of its spec and the simulated
//! [`Paths`] of one seed, so several estimators can share the same paths.

use std::fmt;

use crate::error::{ensure_positive, Error, Result};
use crate::indicator::{IndicatorDiffStrategy, Width};
use crate::model::{
    analytic_digital_delta, likelihood_ratio_delta_weight, BlackScholesParams, DigitalOption, Paths,
};
use crate::tape::{Tape, Var};

/// How the finite-difference bump relates to the width `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftConvention {
    /// `[V(S0 + h/2) - V(S0 - h/2)] / h`
    #[default]
    Half,
    /// `[V(S0 + h) - V(S0 - h)] / (2h)`
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    /// Central difference with common random numbers. A relative `shift` is
    /// resolved against the trigger `S_T - K` at the unbumped spot.
    FiniteDifference {
        shift: Width,
        convention: ShiftConvention,
    },
    /// Adjoint sweep with the indicator replaced by a discretized delta.
    StochAd(IndicatorDiffStrategy),
    /// Adjoint sweep with a regression-based replacement.
    StochAdRegression(IndicatorDiffStrategy),
    LikelihoodRatio,
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub label: String,
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, label: impl Into<String>) -> Self {
        Self {
            kind,
            label: label.into(),
        }
    }

    pub fn finite_difference(shift: Width, convention: ShiftConvention) -> Self {
        Self::new(
            EstimatorKind::FiniteDifference { shift, convention },
            "Finite Difference",
        )
    }

    pub fn stoch_ad(width: Width) -> Self {
        Self::new(
            EstimatorKind::StochAd(IndicatorDiffStrategy::discretized_delta(width)),
            "Stoch. AD",
        )
    }

    pub fn stoch_ad_regression(strategy: IndicatorDiffStrategy) -> Self {
        Self::new(
            EstimatorKind::StochAdRegression(strategy),
            "Stoch. AD with Regression",
        )
    }

    pub fn likelihood_ratio() -> Self {
        Self::new(EstimatorKind::LikelihoodRatio, "Likelihood Ratio")
    }

    pub fn analytic() -> Self {
        Self::new(EstimatorKind::Analytic, "Analytic")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EstimatorKind::FiniteDifference { shift, .. } => {
                ensure_positive("shift", shift.value())
            }
            EstimatorKind::StochAd(s) | EstimatorKind::StochAdRegression(s) => s.validate(),
            EstimatorKind::LikelihoodRatio | EstimatorKind::Analytic => Ok(()),
        }
    }

    pub fn uses_paths(&self) -> bool {
        !matches!(self.kind, EstimatorKind::Analytic)
    }
}

/// Nodes of the recorded digital valuation `e^{-rT} 1_{S_T - K > 0}`.
#[derive(Debug, Clone)]
pub struct DigitalGraph<'t> {
    pub spot: Var<'t>,
    pub terminal: Var<'t>,
    pub trigger: Var<'t>,
    pub indicator: Var<'t>,
    pub payoff: Var<'t>,
}

/// Records the digital valuation on `tape` with the spot as input.
pub fn record_digital<'t>(
    tape: &'t Tape,
    paths: &Paths,
    option: &DigitalOption,
) -> Result<DigitalGraph<'t>> {
    let spot = tape.input(paths.params.spot);
    let terminal = paths.terminal_on(&spot)?;
    let trigger = terminal.sub_scalar(option.strike)?;
    let indicator = trigger.indicator()?;
    let payoff = indicator.mul_scalar(paths.params.discount())?;
    Ok(DigitalGraph {
        spot,
        terminal,
        trigger,
        indicator,
        payoff,
    })
}

/// Monte-Carlo digital value at initial value `spot` on the given paths.
pub fn digital_value(paths: &Paths, option: &DigitalOption, spot: f64) -> f64 {
    let strike = option.strike;
    let hits = paths
        .growth()
        .map(|g| if spot * g - strike > 0.0 { 1.0 } else { 0.0 });
    paths.params.discount() * hits.expectation()
}

/// Delta by adjoint differentiation of the recorded digital valuation.
pub fn stochastic_ad_delta(
    paths: &Paths,
    option: &DigitalOption,
    strategy: &IndicatorDiffStrategy,
) -> Result<f64> {
    let tape = Tape::new();
    let graph = record_digital(&tape, paths, option)?;
    let adjoints = tape.backward(graph.payoff.id(), strategy)?;
    if let Some(&node) = adjoints.empty_windows.first() {
        let w = strategy
            .width()
            .map(|w| w.resolve(graph.trigger.value()))
            .transpose()?
            .unwrap_or(0.0);
        return Err(Error::AtNode {
            node,
            source: Box::new(Error::EmptyWindow {
                half_width: 0.5 * w,
            }),
        });
    }
    adjoints.derivative(graph.spot.id())
}

pub fn finite_difference_delta(
    paths: &Paths,
    option: &DigitalOption,
    shift: Width,
    convention: ShiftConvention,
) -> Result<f64> {
    let spot = paths.params.spot;
    let h = match shift {
        Width::Absolute(h) => h,
        Width::StdDevs(_) => shift.resolve(&paths.terminal(spot).sub(option.strike)?)?,
    };
    ensure_positive("shift", h)?;
    let (up, down, denominator) = match convention {
        ShiftConvention::Half => (spot + 0.5 * h, spot - 0.5 * h, h),
        ShiftConvention::Full => (spot + h, spot - h, 2.0 * h),
    };
    ensure_positive("bumped spot", down)?;
    Ok((digital_value(paths, option, up) - digital_value(paths, option, down)) / denominator)
}

pub fn likelihood_ratio_delta(paths: &Paths, option: &DigitalOption) -> Result<f64> {
    let terminal = paths.terminal(paths.params.spot);
    let weight = likelihood_ratio_delta_weight(&paths.params, &terminal)?;
    let payoff = terminal
        .sub(option.strike)?
        .indicator()
        .mul(paths.params.discount())?;
    Ok(payoff.mul(&weight)?.expectation())
}

/// Evaluates `spec` on already simulated paths.
pub fn estimate_delta_on_paths(
    spec: &EstimatorSpec,
    option: &DigitalOption,
    paths: &Paths,
) -> Result<f64> {
    spec.validate()?;
    match &spec.kind {
        EstimatorKind::FiniteDifference { shift, convention } => {
            finite_difference_delta(paths, option, *shift, *convention)
        }
        EstimatorKind::StochAd(strategy) | EstimatorKind::StochAdRegression(strategy) => {
            stochastic_ad_delta(paths, option, strategy)
        }
        EstimatorKind::LikelihoodRatio => likelihood_ratio_delta(paths, option),
        EstimatorKind::Analytic => Ok(analytic_digital_delta(&paths.params, option)),
    }
}

/// Delta estimate for one seed of `n` paths.
pub fn estimate_delta(
    spec: &EstimatorSpec,
    params: &BlackScholesParams,
    option: &DigitalOption,
    n: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    if !spec.uses_paths() {
        return Ok(analytic_digital_delta(params, option));
    }
    estimate_delta_on_paths(spec, option, &Paths::simulate(params, n, seed))
}
