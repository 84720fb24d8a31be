//! Adjoint algorithmic differentiation of Monte-Carlo expectations whose
//! payoffs contain indicator functions.
//!
//! Values are [`RandomVariable`]s (a constant or one sample per path). A
//! [`Tape`] records operations on them and a backward sweep returns
//! path-wise adjoints. Each indicator `1_{X > 0}` on the tape is
//! differentiated by an [`IndicatorDiffStrategy`]: a discretized delta, a
//! regression-based density estimate, or a conditional-expectation
//! estimate of the incoming adjoint.
//!
//! ```
//! use stochad::{IndicatorDiffStrategy, RandomVariable, Tape, Width};
//!
//! let tape = Tape::new();
//! let x = tape.input(RandomVariable::from(vec![-0.3, -0.01, 0.02, 0.4]));
//! let y = x.indicator().unwrap();
//! let strategy = IndicatorDiffStrategy::discretized_delta(Width::Absolute(0.1));
//! let adjoints = tape.backward(y.id(), &strategy).unwrap();
//! // two of four samples fall inside |x| < 0.05, each weighted by 1/0.1
//! assert_eq!(adjoints.derivative(x.id()).unwrap(), 5.0);
//! ```

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod indicator;
pub mod model;
pub mod random_variable;
pub mod regression;
pub mod tape;

pub use error::{Error, Result};
pub use estimators::{
    estimate_delta, estimate_delta_on_paths, EstimatorKind, EstimatorSpec, ShiftConvention,
};
pub use experiment::{
    run_experiment, run_tables, width_sweep, DensityMethod, ExperimentConfig, ExperimentStats,
    TableSetup, WidthMode,
};
pub use indicator::{DensityEstimate, IndicatorDiffStrategy, Width};
pub use model::{BlackScholesParams, DigitalOption, Paths};
pub use random_variable::RandomVariable;
pub use tape::{AdjointResult, NodeId, OpKind, Tape, Var};
