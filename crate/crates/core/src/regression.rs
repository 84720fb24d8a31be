//! Localized least-squares estimates of the density of a trigger at zero.
//!
//! Two scatter constructions are supported, both from counting sample paths
//! near the origin:
//!
//! * empirical density `d~(x) = #{j : X_j between 0 and x} / (n |x|)`,
//!   regressed on `{1, x, .., x^(m-1)}`; the intercept estimates `phi_X(0)`;
//! * empirical distribution `D^(x) = sign(x) #{j : X_j between 0 and x} / n`,
//!   regressed on `{x, .., x^m}` without constant (so `D(0) = 0`); the slope
//!   estimates `phi_X(0)`.
//!
//! Counting intervals are closed and a sample counts itself. Paths exactly at
//! zero never enter the scatter but do enter the counts of both sides.
//!
//! The same normal-equation solver backs [`localized_least_squares`], used for
//! conditional expectations `E(Y | X = 0)` on a hard window.

use crate::error::{ensure_positive, Error, Result};
use crate::random_variable::RandomVariable;

/// Relative pivot below which the normal matrix is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Scatter `(x_i, y_i)` of empirical density (or distribution) values on
/// the paths with `0 < |x_i| <= half_width`, kept in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySamples {
    pub points: Vec<(f64, f64)>,
    pub half_width: f64,
}

impl DensitySamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `1_W x^i` for `i = 0..m-1`.
    Density,
    /// `x^i` for `i = 1..=m`, no constant.
    Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionBasis {
    pub order: usize,
    pub half_width: f64,
    pub kind: BasisKind,
}

impl RegressionBasis {
    pub fn new(kind: BasisKind, order: usize, half_width: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter {
                name: "order",
                detail: "basis order must be at least 1".into(),
            });
        }
        ensure_positive("half_width", half_width)?;
        Ok(Self {
            order,
            half_width,
            kind,
        })
    }

    fn first_power(&self) -> i32 {
        match self.kind {
            BasisKind::Density => 0,
            BasisKind::Distribution => 1,
        }
    }
}

/// A fitted polynomial `sum_k c_k x^(p0 + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    pub first_power: i32,
    pub coefficients: Vec<f64>,
}

impl PolynomialFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * x.powi(self.first_power + k as i32))
            .sum()
    }
}

/// Signed closed-interval counts `#{j : X_j in [0, x]}` (resp. `[x, 0]`) for
/// every path with `0 < |x| <= r`, in path order.
fn signed_counts(x: &RandomVariable, half_width: f64) -> Result<Vec<(f64, usize)>> {
    ensure_positive("half_width", half_width)?;
    let values = x.samples().ok_or(Error::InvalidParameter {
        name: "x",
        detail: "density regression needs a path-wise random variable".into(),
    })?;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut zeros = 0usize;
    for &v in values {
        if v == 0.0 {
            zeros += 1;
        } else if v > 0.0 && v <= half_width {
            positive.push(v);
        } else if v < 0.0 && -v <= half_width {
            negative.push(-v);
        }
    }
    positive.sort_by(f64::total_cmp);
    negative.sort_by(f64::total_cmp);

    let upto = |sorted: &[f64], bound: f64| sorted.partition_point(|&s| s <= bound);
    Ok(values
        .iter()
        .filter(|&&v| v != 0.0 && v.abs() <= half_width)
        .map(|&v| {
            let side = if v > 0.0 { &positive } else { &negative };
            (v, zeros + upto(side, v.abs()))
        })
        .collect())
}

/// Empirical density samples `(x_i, d~(x_i))` on `0 < |x_i| <= half_width`.
///
/// On the negative side the count over `[x, 0]` is divided by `|x|`, so the
/// samples are nonnegative on both sides of the origin.
pub fn empirical_density_samples(x: &RandomVariable, half_width: f64) -> Result<DensitySamples> {
    let n = x.len().unwrap_or(1) as f64;
    let points = signed_counts(x, half_width)?
        .into_iter()
        .map(|(v, count)| (v, count as f64 / (n * v.abs())))
        .collect();
    Ok(DensitySamples { points, half_width })
}

/// Empirical distribution samples `(x_i, D^(x_i))` on `0 < |x_i| <= half_width`,
/// negative on the negative side.
pub fn empirical_distribution_samples(
    x: &RandomVariable,
    half_width: f64,
) -> Result<DensitySamples> {
    let n = x.len().unwrap_or(1) as f64;
    let points = signed_counts(x, half_width)?
        .into_iter()
        .map(|(v, count)| (v, v.signum() * count as f64 / n))
        .collect();
    Ok(DensitySamples { points, half_width })
}

/// Least-squares polynomial through the density scatter, basis `{1, .., x^(m-1)}`.
pub fn fit_density_curve(samples: &DensitySamples, order: usize) -> Result<PolynomialFit> {
    let basis = RegressionBasis::new(BasisKind::Density, order, samples.half_width)?;
    fit_scatter(&samples.points, &basis)
}

/// Density estimate `d*(0)`: the intercept of the density regression.
pub fn fit_density(samples: &DensitySamples, order: usize) -> Result<f64> {
    Ok(fit_density_curve(samples, order)?.coefficients[0])
}

/// Least-squares fit of the distribution scatter on `{x, .., x^m}`.
pub fn fit_distribution_curve(samples: &DensitySamples, order: usize) -> Result<PolynomialFit> {
    let basis = RegressionBasis::new(BasisKind::Distribution, order, samples.half_width)?;
    fit_scatter(&samples.points, &basis)
}

/// Density estimate from the linear coefficient of the distribution regression.
pub fn fit_distribution(x: &RandomVariable, half_width: f64, order: usize) -> Result<f64> {
    let samples = empirical_distribution_samples(x, half_width)?;
    Ok(fit_distribution_curve(&samples, order)?.coefficients[0])
}

fn fit_scatter(points: &[(f64, f64)], basis: &RegressionBasis) -> Result<PolynomialFit> {
    if points.len() < basis.order {
        return Err(Error::TooFewSamples {
            needed: basis.order,
            got: points.len(),
        });
    }
    let coefficients = solve_scaled(points.iter().copied(), basis)?;
    Ok(PolynomialFit {
        first_power: basis.first_power(),
        coefficients,
    })
}

/// Least squares of `Y` on the basis restricted to the window `|X| < half_width`.
///
/// Out-of-window paths contribute zero rows, which is the same as dropping
/// them. Returns the coefficients in basis order.
pub fn localized_least_squares(
    y: &RandomVariable,
    x: &RandomVariable,
    basis: &RegressionBasis,
) -> Result<Vec<f64>> {
    let n = match (x.len(), y.len()) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::LengthMismatch {
                op: "localized_least_squares",
                left: a,
                right: b,
            })
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => 1,
    };
    let r = basis.half_width;
    let rows = (0..n)
        .map(|i| (x.get(i), y.get(i)))
        .filter(|(xi, _)| xi.abs() < r);
    let mut any = false;
    let rows = rows.inspect(|_| any = true);
    let result = solve_scaled(rows, basis);
    if !any {
        return Err(Error::EmptyWindow { half_width: r });
    }
    result
}

/// Solves the normal equations after rescaling `x` by the window half-width,
/// then maps the coefficients back to the original scale.
fn solve_scaled(
    rows: impl Iterator<Item = (f64, f64)>,
    basis: &RegressionBasis,
) -> Result<Vec<f64>> {
    let m = basis.order;
    let p0 = basis.first_power();
    let scale = basis.half_width;
    let mut normal = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut phi = vec![0.0; m];
    for (x, y) in rows {
        let u = x / scale;
        let mut p = u.powi(p0);
        for slot in phi.iter_mut() {
            *slot = p;
            p *= u;
        }
        for i in 0..m {
            rhs[i] += phi[i] * y;
            for j in 0..m {
                normal[i * m + j] += phi[i] * phi[j];
            }
        }
    }
    let mut coefficients = solve_normal_equations(normal, rhs)?;
    for (k, c) in coefficients.iter_mut().enumerate() {
        *c /= scale.powi(p0 + k as i32);
    }
    Ok(coefficients)
}

/// Gaussian elimination with partial pivoting on a dense `m x m` system.
pub fn solve_normal_equations(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let m = b.len();
    debug_assert_eq!(a.len(), m * m);
    let norm = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::SingularRegression { pivot: 0.0 });
    }
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap();
        let pivot = a[pivot_row * m + col];
        if pivot.abs() < SINGULAR_PIVOT * norm {
            return Err(Error::SingularRegression {
                pivot: pivot.abs() / norm,
            });
        }
        if pivot_row != col {
            for k in 0..m {
                a.swap(col * m + k, pivot_row * m + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..m {
            let factor = a[row * m + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..m {
                a[row * m + k] -= factor * a[col * m + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row * m + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * m + row];
    }
    Ok(x)
}
