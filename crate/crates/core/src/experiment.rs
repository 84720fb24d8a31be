//! Repeated seeded experiments and their CSV reports.
//!
//! Each seed is simulated once and every estimator of the experiment runs on
//! those same paths. Seeds fan out over the rayon pool; results are gathered
//! back in seed order before any aggregation, so reports are byte-identical
//! from run to run.

use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;

use crate::error::{ensure_positive, Error, Result};
use crate::estimators::{estimate_delta_on_paths, EstimatorKind, EstimatorSpec, ShiftConvention};
use crate::indicator::{regression_half_width, IndicatorDiffStrategy, Width};
use crate::model::{analytic_digital_delta, BlackScholesParams, DigitalOption, Paths};
use crate::regression::{empirical_density_samples, fit_density_curve};

pub const DEFAULT_PATHS: usize = 200_000;
pub const DEFAULT_REPEATS: usize = 1_000;

/// Unit of the width parameters `w` (for the AD window and the FD shift).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthMode {
    /// `w` in standard deviations of the trigger.
    #[default]
    StdDevs,
    /// `w` in units of the trigger.
    Absolute,
}

impl WidthMode {
    pub fn width(self, w: f64) -> Width {
        match self {
            WidthMode::StdDevs => Width::StdDevs(w),
            WidthMode::Absolute => Width::Absolute(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityMethod {
    Density,
    #[default]
    Distribution,
}

/// Parameters of one comparison table: the four estimators plus the
/// analytic reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSetup {
    pub width: f64,
    pub regression_width: f64,
    pub order: usize,
    pub width_mode: WidthMode,
    pub density: DensityMethod,
    pub shift_convention: ShiftConvention,
}

impl TableSetup {
    pub fn new(width: f64, regression_width: f64, order: usize) -> Self {
        Self {
            width,
            regression_width,
            order,
            width_mode: WidthMode::default(),
            density: DensityMethod::default(),
            shift_convention: ShiftConvention::default(),
        }
    }

    pub fn regression_strategy(&self) -> IndicatorDiffStrategy {
        let width = self.width_mode.width(self.width);
        match self.density {
            DensityMethod::Density => {
                IndicatorDiffStrategy::density_regression(width, self.regression_width, self.order)
            }
            DensityMethod::Distribution => IndicatorDiffStrategy::distribution_regression(
                width,
                self.regression_width,
                self.order,
            ),
        }
    }

    /// Finite difference, stochastic AD, stochastic AD with regression,
    /// likelihood ratio and analytic, in that order.
    pub fn estimators(&self) -> Vec<EstimatorSpec> {
        let width = self.width_mode.width(self.width);
        vec![
            EstimatorSpec::finite_difference(width, self.shift_convention),
            EstimatorSpec::stoch_ad(width),
            EstimatorSpec::stoch_ad_regression(self.regression_strategy()),
            EstimatorSpec::likelihood_ratio(),
            EstimatorSpec::analytic(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: BlackScholesParams,
    pub option: DigitalOption,
    pub paths: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorSpec>,
}

impl ExperimentConfig {
    /// Reference model and option with the estimators of `setup`.
    pub fn reference(setup: &TableSetup) -> Self {
        Self {
            params: BlackScholesParams::reference(),
            option: DigitalOption::reference(),
            paths: DEFAULT_PATHS,
            repeats: DEFAULT_REPEATS,
            base_seed: 0,
            estimators: setup.estimators(),
        }
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_base_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.repeats == 0 {
            return Err(Error::InvalidParameter {
                name: "paths/repeats",
                detail: "need at least one path and one repeat".into(),
            });
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter {
                name: "estimators",
                detail: "no estimator configured".into(),
            });
        }
        self.estimators.iter().try_for_each(EstimatorSpec::validate)
    }

    /// Seed of repeat `k` is `base_seed + k`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64)
            .map(|k| self.base_seed + k)
            .collect()
    }
}

/// `estimates[k][e]` is estimator `e` on seed `k`.
#[derive(Debug, Clone)]
pub struct SeedEstimates {
    pub seeds: Vec<u64>,
    pub estimates: Vec<Vec<Result<f64>>>,
}

/// Evaluates every estimator of `config` on every seed.
pub fn evaluate_seeds(config: &ExperimentConfig) -> Result<SeedEstimates> {
    config.validate()?;
    let seeds = config.seeds();
    let estimates = seeds
        .par_iter()
        .map(|&seed| {
            let paths = Paths::simulate(&config.params, config.paths, seed);
            config
                .estimators
                .iter()
                .map(|spec| estimate_delta_on_paths(spec, &config.option, &paths))
                .collect()
        })
        .collect();
    Ok(SeedEstimates { seeds, estimates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats {
    pub label: String,
    pub mean: f64,
    pub bias: f64,
    pub stddev: f64,
    /// `stddev(finite difference) / stddev(self)`; `None` on the finite
    /// difference row itself or when no finite-difference row exists.
    pub improvement: Option<f64>,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentStats {
    pub analytic: f64,
    pub repeats: usize,
    pub rows: Vec<EstimatorStats>,
    pub warnings: Vec<String>,
}

fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Aggregates estimator columns `columns` of `results` into one table.
pub fn summarize(
    config: &ExperimentConfig,
    results: &SeedEstimates,
    columns: &[usize],
) -> Result<ExperimentStats> {
    let analytic = analytic_digital_delta(&config.params, &config.option);
    let total = results.seeds.len();
    let mut warnings = Vec::new();
    if total == 1 {
        warnings.push("a single repeat: standard deviations reported as 0".to_string());
    }
    let mut rows = Vec::with_capacity(columns.len());
    for &e in columns {
        let spec = &config.estimators[e];
        let mut values = Vec::with_capacity(total);
        let mut failures = 0;
        for (seed, per_seed) in results.seeds.iter().zip(&results.estimates) {
            match &per_seed[e] {
                Ok(v) => values.push(*v),
                Err(err) => {
                    failures += 1;
                    warnings.push(format!("{} seed {seed}: {err}", spec.label));
                }
            }
        }
        if 2 * failures > total {
            return Err(Error::TooManyFailures {
                label: spec.label.clone(),
                failed: failures,
                total,
            });
        }
        let (mean, stddev) = mean_and_stddev(&values);
        rows.push(EstimatorStats {
            label: spec.label.clone(),
            mean,
            bias: mean - analytic,
            stddev,
            improvement: None,
            successes: values.len(),
            failures,
        });
    }
    let reference = columns.iter().position(|&e| {
        matches!(
            config.estimators[e].kind,
            EstimatorKind::FiniteDifference { .. }
        )
    });
    if let Some(fd) = reference {
        let fd_stddev = rows[fd].stddev;
        for (i, row) in rows.iter_mut().enumerate() {
            if i != fd {
                row.improvement = Some(fd_stddev / row.stddev);
            }
        }
    }
    Ok(ExperimentStats {
        analytic,
        repeats: total,
        rows,
        warnings,
    })
}

/// Runs every repeat of `config` and aggregates value, bias, standard
/// deviation and improvement per estimator.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentStats> {
    let results = evaluate_seeds(config)?;
    let columns: Vec<usize> = (0..config.estimators.len()).collect();
    summarize(config, &results, &columns)
}

/// Runs several tables over the same seeds, simulating each seed once.
/// `config.estimators` is ignored.
pub fn run_tables(
    config: &ExperimentConfig,
    setups: &[TableSetup],
) -> Result<Vec<ExperimentStats>> {
    let mut combined = config.clone();
    combined.estimators = setups.iter().flat_map(TableSetup::estimators).collect();
    let results = evaluate_seeds(&combined)?;
    let mut offset = 0;
    setups
        .iter()
        .map(|setup| {
            let count = setup.estimators().len();
            let columns: Vec<usize> = (offset..offset + count).collect();
            offset += count;
            summarize(&combined, &results, &columns)
        })
        .collect()
}

pub(crate) fn fixed(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        let s = format!("{v:.6}");
        if s == "-0.000000" {
            s[1..].to_string()
        } else {
            s
        }
    }
}

impl ExperimentStats {
    pub fn row(&self, label: &str) -> Option<&EstimatorStats> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// CSV with columns `Method,Value,Bias,StdDev,Improve`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["Method", "Value", "Bias", "StdDev", "Improve"])?;
        for row in &self.rows {
            writer.write_record([
                row.label.clone(),
                fixed(row.mean),
                fixed(row.bias),
                fixed(row.stddev),
                row.improvement.map(fixed).unwrap_or_default(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Plain-text rendering for terminals.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>9} {:>9} {:>9} {:>8} {:>6}",
            "Method", "Value", "Bias", "Std.Dev.", "Improve", "Fail"
        );
        for row in &self.rows {
            let improve = match row.improvement {
                Some(v) if v.is_infinite() => "inf".to_string(),
                Some(v) => format!("{v:.2}"),
                None => String::new(),
            };
            let _ = writeln!(
                s,
                "{:<28} {:>9.4} {:>9.4} {:>9.4} {:>8} {:>6}",
                row.label, row.mean, row.bias, row.stddev, improve, row.failures
            );
        }
        s
    }
}

/// One delta per (width, seed, estimator).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub width: f64,
    pub seed: u64,
    pub estimator: String,
    pub delta: Option<f64>,
}

/// Evaluates the estimators of `setup` for every width in `widths` on the
/// seeds of `config`. The regression width of `setup` is kept fixed.
pub fn width_sweep(
    config: &ExperimentConfig,
    setup: &TableSetup,
    widths: &[f64],
) -> Result<Vec<SweepRow>> {
    if widths.is_empty() {
        return Err(Error::InvalidParameter {
            name: "widths",
            detail: "need at least one width".into(),
        });
    }
    for &w in widths {
        ensure_positive("width", w)?;
    }
    let setups: Vec<TableSetup> = widths
        .iter()
        .map(|&w| TableSetup { width: w, ..*setup })
        .collect();
    let mut combined = config.clone();
    combined.estimators = setups.iter().flat_map(TableSetup::estimators).collect();
    let results = evaluate_seeds(&combined)?;
    let per_width = setup.estimators().len();
    let mut rows = Vec::new();
    for (i, &w) in widths.iter().enumerate() {
        for (seed, per_seed) in results.seeds.iter().zip(&results.estimates) {
            let columns = i * per_width..(i + 1) * per_width;
            for (spec, value) in combined.estimators[columns.clone()]
                .iter()
                .zip(&per_seed[columns])
            {
                rows.push(SweepRow {
                    width: w,
                    seed: *seed,
                    estimator: spec.label.clone(),
                    delta: value.as_ref().ok().copied(),
                });
            }
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation per (width, estimator), in input order.
pub fn sweep_text_table(rows: &[SweepRow]) -> String {
    let mut groups: Vec<(f64, &str, Vec<f64>, usize)> = Vec::new();
    for row in rows {
        let i = match groups
            .iter()
            .position(|g| g.0 == row.width && g.1 == row.estimator)
        {
            Some(i) => i,
            None => {
                groups.push((row.width, &row.estimator, Vec::new(), 0));
                groups.len() - 1
            }
        };
        match row.delta {
            Some(d) => groups[i].2.push(d),
            None => groups[i].3 += 1,
        }
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:<28} {:>9} {:>9} {:>6}",
        "width", "Method", "Mean", "Std.Dev.", "Fail"
    );
    for (w, label, values, failed) in &groups {
        let (mean, sd) = if values.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            mean_and_stddev(values)
        };
        let _ = writeln!(s, "{w:>8} {label:<28} {mean:>9.4} {sd:>9.4} {failed:>6}");
    }
    s
}

/// CSV with columns `width,seed,estimator,delta`; failed estimates are blank.
pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["width", "seed", "estimator", "delta"])?;
    for row in rows {
        writer.write_record([
            fixed(row.width),
            row.seed.to_string(),
            row.estimator.clone(),
            row.delta.map(fixed).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Scatter of empirical density samples of the trigger `S_T - K` with the
/// fitted curve and its value at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityDiagnostics {
    /// `(x, d_tilde(x), d_fit(x))`
    pub rows: Vec<(f64, f64, f64)>,
    pub d_star: f64,
    pub half_width: f64,
}

pub fn density_diagnostics(
    params: &BlackScholesParams,
    option: &DigitalOption,
    n: usize,
    seed: u64,
    regression_width: f64,
    order: usize,
) -> Result<DensityDiagnostics> {
    let paths = Paths::simulate(params, n, seed);
    let trigger = paths.terminal(params.spot).sub(option.strike)?;
    let half_width = regression_half_width(&trigger, regression_width)?;
    let samples = empirical_density_samples(&trigger, half_width)?;
    let fit = fit_density_curve(&samples, order)?;
    let rows = samples
        .points
        .iter()
        .map(|&(x, d)| (x, d, fit.eval(x)))
        .collect();
    Ok(DensityDiagnostics {
        rows,
        d_star: fit.coefficients[0],
        half_width,
    })
}

impl DensityDiagnostics {
    /// CSV with columns `x,d_tilde,d_fit,d_star`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["x", "d_tilde", "d_fit", "d_star"])?;
        let d_star = fixed(self.d_star);
        for &(x, d, f) in &self.rows {
            writer.write_record([fixed(x), fixed(d), fixed(f), d_star.clone()])?;
        }
        writer.flush()?;
        Ok(())
    }
}
