//! Difference quotients of sampled curves and penalized B-spline smoothing.
//!
//! A P-spline fit minimizes `|y - B c|^2 + lambda |D_d c|^2` where `B` is a
//! B-spline basis on equidistant knots and `D_d` takes order-`d` differences
//! of adjacent coefficients. Pointwise standard errors come from the sandwich
//! covariance `sigma^2 A^+ B'B A^+` with `A = B'B + lambda D'D`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// z-quantile of the two-sided 95% band.
pub const Z95: f64 = 1.96;

/// Relative spacing tolerance for "uniform" grids.
const SPACING_TOL: f64 = 1e-9;

/// Paired abscissae (strictly increasing) and responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Curve {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "curve has {} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput("curve needs at least 2 points".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "curve abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("curve contains non-finite values".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Common step of a uniform grid.
    pub fn spacing(&self) -> Result<f64> {
        let h = (self.xs[self.len() - 1] - self.xs[0]) / (self.len() - 1) as f64;
        let uniform = self
            .xs
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= SPACING_TOL * h.abs().max(1.0));
        if uniform {
            Ok(h)
        } else {
            Err(Error::NonUniformGrid)
        }
    }

    pub fn map_ys(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|&y| f(y)).collect(),
        }
    }
}

/// `(f(x_{i+1}) - f(x_i)) / dx`, indexed by the left point.
pub fn first_difference(curve: &Curve) -> Result<Curve> {
    let h = curve.spacing()?;
    Ok(Curve {
        xs: curve.xs[..curve.len() - 1].to_vec(),
        ys: curve.ys.windows(2).map(|w| (w[1] - w[0]) / h).collect(),
    })
}

/// `(f(x_{i+2}) - 2 f(x_{i+1}) + f(x_i)) / dx^2`, indexed by the left point.
pub fn second_difference(curve: &Curve) -> Result<Curve> {
    if curve.len() < 3 {
        return Err(Error::InvalidInput(
            "second difference needs at least 3 points".into(),
        ));
    }
    let h = curve.spacing()?;
    Ok(Curve {
        xs: curve.xs[..curve.len() - 2].to_vec(),
        ys: curve
            .ys
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (h * h))
            .collect(),
    })
}

/// Smoothing parameter: fixed, or chosen by generalized cross-validation
/// over `10^k, k = -6..=6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lambda {
    Fixed(f64),
    Auto,
}

pub fn gcv_lambda_grid() -> Vec<f64> {
    (-6..=6).map(|k| 10f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherParams {
    /// Interior knot count.
    pub knots: usize,
    pub degree: usize,
    pub penalty_order: usize,
    pub lambda: Lambda,
}

impl Default for SmootherParams {
    fn default() -> Self {
        Self {
            knots: 100,
            degree: 3,
            penalty_order: 2,
            lambda: Lambda::Auto,
        }
    }
}

impl SmootherParams {
    pub fn with_knots(mut self, knots: usize) -> Self {
        self.knots = knots;
        self
    }

    pub fn with_lambda(mut self, lambda: Lambda) -> Self {
        self.lambda = lambda;
        self
    }
}

/// B-spline basis on `knots` equidistant interior knots over `[lo, hi]`,
/// with the knot sequence continued at the same spacing past both ends.
#[derive(Debug, Clone, PartialEq)]
struct Basis {
    lo: f64,
    hi: f64,
    knots: usize,
    degree: usize,
    step: f64,
}

impl Basis {
    fn new(lo: f64, hi: f64, knots: usize, degree: usize) -> Self {
        Self {
            lo,
            hi,
            knots,
            degree,
            step: (hi - lo) / (knots + 1) as f64,
        }
    }

    fn size(&self) -> usize {
        self.knots + self.degree + 1
    }

    fn knot(&self, k: isize) -> f64 {
        self.lo + (k - self.degree as isize) as f64 * self.step
    }

    /// Index of the first nonzero function and the `degree + 1` nonzero
    /// values at `x` (Cox-de Boor).
    fn eval(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let interval = (((x - self.lo) / self.step).floor().max(0.0) as usize).min(self.knots);
        let span = (interval + p) as isize;
        let mut values = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        values[0] = 1.0;
        for j in 1..=p {
            left[j] = x - self.knot(span + 1 - j as isize);
            right[j] = self.knot(span + j as isize) - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            values[j] = saved;
        }
        (interval, values)
    }

    fn row(&self, x: f64) -> DVector<f64> {
        let mut row = DVector::zeros(self.size());
        let (first, values) = self.eval(x);
        for (k, v) in values.into_iter().enumerate() {
            row[first + k] = v;
        }
        row
    }

    fn design(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(xs.len(), self.size());
        for (i, &x) in xs.iter().enumerate() {
            let (first, values) = self.eval(x);
            for (k, v) in values.into_iter().enumerate() {
                b[(i, first + k)] = v;
            }
        }
        b
    }
}

/// Order-`d` difference operator, `(size - d) x size`.
fn difference_matrix(size: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(size, size);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, size, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d
}

/// Fitted P-spline with everything needed for pointwise bands.
#[derive(Debug, Clone)]
pub struct SplineFit {
    basis: Basis,
    pub penalty_order: usize,
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    /// Residual variance `RSS / (n - edf)` (zero when the fit is saturated).
    pub sigma2: f64,
    /// Effective degrees of freedom, `trace(hat matrix)`.
    pub edf: f64,
    pub rss: f64,
    pub gcv: f64,
    /// Unscaled covariance `A^+ B'B A^+`.
    unscaled_cov: DMatrix<f64>,
}

impl SplineFit {
    pub fn knots(&self) -> usize {
        self.basis.knots
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn range(&self) -> (f64, f64) {
        (self.basis.lo, self.basis.hi)
    }

    fn check_range(&self, x: f64) -> Result<()> {
        let slack = 1e-9 * (self.basis.hi - self.basis.lo);
        if x < self.basis.lo - slack || x > self.basis.hi + slack || !x.is_finite() {
            return Err(Error::OutOfRange {
                x,
                lo: self.basis.lo,
                hi: self.basis.hi,
            });
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let (first, values) = self.basis.eval(x);
        Ok(values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.coefficients[first + k])
            .sum())
    }

    /// Value and pointwise standard error at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let value = self.value(x)?;
        let b = self.basis.row(x);
        let var = self.sigma2 * (b.transpose() * &self.unscaled_cov * &b)[(0, 0)];
        Ok((value, var.max(0.0).sqrt()))
    }

    /// Values with 95% band `(value, lower, upper)` on `xs`.
    pub fn band(&self, xs: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        xs.iter()
            .map(|&x| {
                let (v, se) = self.eval(x)?;
                Ok((v, v - Z95 * se, v + Z95 * se))
            })
            .collect()
    }

    pub fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.value(x)).collect()
    }

    /// `|D_d c|`.
    pub fn penalty_norm(&self) -> f64 {
        let d = difference_matrix(self.coefficients.len(), self.penalty_order);
        (d * DVector::from_column_slice(&self.coefficients)).norm()
    }
}

pub fn fit_pspline(curve: &Curve, params: &SmootherParams) -> Result<SplineFit> {
    let SmootherParams {
        knots,
        degree,
        penalty_order,
        lambda,
    } = *params;
    if knots < penalty_order + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} interior knots for penalty order {penalty_order}, got {knots}",
            penalty_order + 1
        )));
    }
    if curve.len() <= degree + 1 {
        return Err(Error::InvalidInput(format!(
            "need more than {} points for degree {degree}, got {}",
            degree + 1,
            curve.len()
        )));
    }
    let basis = Basis::new(curve.xs[0], curve.xs[curve.len() - 1], knots, degree);
    let b = basis.design(&curve.xs);
    let d = difference_matrix(basis.size(), penalty_order);
    let y = DVector::from_column_slice(&curve.ys);
    match lambda {
        Lambda::Fixed(l) => {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidInput(format!("lambda must be >= 0, got {l}")));
            }
            fit_fixed(&basis, &b, &d, &y, penalty_order, l)
        }
        Lambda::Auto => {
            let mut best: Option<SplineFit> = None;
            for l in gcv_lambda_grid() {
                let fit = fit_fixed(&basis, &b, &d, &y, penalty_order, l)?;
                if best.as_ref().is_none_or(|b| fit.gcv < b.gcv) {
                    best = Some(fit);
                }
            }
            Ok(best.expect("lambda grid is not empty"))
        }
    }
}

fn fit_fixed(
    basis: &Basis,
    b: &DMatrix<f64>,
    d: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty_order: usize,
    lambda: f64,
) -> Result<SplineFit> {
    let n = b.nrows();
    let size = b.ncols();
    // A = M'M with M = [B; sqrt(lambda) D]; the SVD of M gives a stable A^+
    let mut m = DMatrix::zeros(n + d.nrows(), size);
    m.rows_mut(0, n).copy_from(b);
    m.rows_mut(n, d.nrows()).copy_from(&(d * lambda.sqrt()));
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Singular("SVD did not return V".into()))?;
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::Singular("zero design matrix".into()));
    }
    let cutoff = smax * 1e-10;
    let mut inv_sq = DMatrix::zeros(size, size);
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff {
            inv_sq[(k, k)] = 1.0 / (sv * sv);
        }
    }
    let a_pinv = v_t.transpose() * inv_sq * &v_t;
    let btb = b.transpose() * b;
    let coef = &a_pinv * (b.transpose() * y);
    let fitted = b * &coef;
    let rss = (y - &fitted).norm_squared();
    let edf = (&a_pinv * &btb).trace();
    let dof = n as f64 - edf;
    let sigma2 = if dof > 1e-8 { rss / dof } else { 0.0 };
    let gcv = if dof > 1e-8 {
        n as f64 * rss / (dof * dof)
    } else {
        f64::INFINITY
    };
    let unscaled_cov = &a_pinv * btb * &a_pinv;
    Ok(SplineFit {
        basis: basis.clone(),
        penalty_order,
        lambda,
        coefficients: coef.iter().copied().collect(),
        sigma2,
        edf,
        rss,
        gcv,
        unscaled_cov,
    })
}

/// Leftmost point strictly above its left neighbor and above the first
/// different value to its right (a plateau reports its left end).
pub fn first_local_max_index(values: &[f64]) -> Option<usize> {
    local_max_indices(values).next()
}

/// All interior local maxima under the plateau rule of
/// [`first_local_max_index`].
pub fn local_max_indices(values: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (1..values.len().saturating_sub(1)).filter(move |&i| {
        if !(values[i] > values[i - 1]) {
            return false;
        }
        let mut j = i + 1;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        j < values.len() && values[j] < values[i]
    })
}

/// Smallest grid point at which the spline has an interior local maximum.
pub fn first_local_max(fit: &SplineFit, xs: &[f64]) -> Result<f64> {
    let values = fit.values(xs)?;
    first_local_max_index(&values)
        .map(|i| xs[i])
        .ok_or(Error::NoInteriorMaximum)
}

/// Smallest grid point whose 95% band contains zero.
///
/// When the whole band jumps across zero between two neighboring grid
/// points, the neighbor whose smoothed value is closer to zero counts as
/// the crossing (the left one on ties).
pub fn first_zero_crossing_of_band(fit: &SplineFit, xs: &[f64]) -> Result<f64> {
    let band = fit.band(xs)?;
    for (i, &(v, lo, hi)) in band.iter().enumerate() {
        if lo <= 0.0 && 0.0 <= hi {
            return Ok(xs[i]);
        }
        if let Some(&(next, next_lo, next_hi)) = band.get(i + 1) {
            let jumps = (lo > 0.0 && next_hi < 0.0) || (hi < 0.0 && next_lo > 0.0);
            if jumps {
                return Ok(if v.abs() <= next.abs() { xs[i] } else { xs[i + 1] });
            }
        }
    }
    Err(Error::NoZeroCrossing)
}

/// Writes `s,raw,smoothed,lower95,upper95` for a smoothed curve.
pub fn write_band_csv(path: impl AsRef<Path>, raw: &Curve, fit: &SplineFit) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["s", "raw", "smoothed", "lower95", "upper95"])
        .map_err(csv_err)?;
    for ((x, y), (v, lo, hi)) in raw.xs.iter().zip(&raw.ys).zip(fit.band(&raw.xs)?) {
        w.write_record([x, y, &v, &lo, &hi].map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
