//! Closed-form large-sample theory for AR(p) backsubsampling.
//!
//! For a stationary AR(p) fitted by Yule-Walker on the `k` most recent
//! observations, the h-step mean squared forecast error behaves like
//! `(A + B / k) / h`, where
//!
//! * `A = sum_{j=1..h} sigma_j^2` with `sigma_j^2 = sigma^2 sum_{i<j} a1(i)^2`,
//! * `B = sigma^2 sum_{j=1..h} tr(M_j' Gamma^-1 M_j Gamma)`,
//!
//! `a1` is the impulse response of the AR recursion, `M_j` the Jacobian of
//! the j-step forecast coefficients with respect to `phi`, and `Gamma` the
//! p x p autocovariance matrix. The predictive ratio against the full
//! history of length `n` is then `1 + (n/k - 1) / (1 + n A/B)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ar::{is_stationary, yule_walker_fit};
use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

/// All intermediates of the A/B computation for one `(phi, sigma2, h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub phi: Vec<f64>,
    pub sigma2: f64,
    pub h: usize,
    /// `a1(0..h)`.
    pub a1: Vec<f64>,
    /// `sigma_j^2` for `j = 1..=h`.
    pub sigma_h2: Vec<f64>,
    /// `tr(M_j' Gamma^-1 M_j Gamma)` for `j = 1..=h`.
    pub traces: Vec<f64>,
    /// `A / sigma^2`.
    pub a_numerator: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub ratio: f64,
}

impl AsymptoticReport {
    /// Asymptotic mean squared error per forecast step, `(A + B/k) / h`.
    pub fn amse(&self, k: usize) -> f64 {
        (self.a + self.b / k as f64) / self.h as f64
    }
}

/// Practical irrelevancy tolerance `epsilon_n` and its scaled limit
/// `lambda = n * epsilon_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrelevancySpec {
    pub epsilon_n: f64,
    pub lambda: f64,
}

impl IrrelevancySpec {
    pub fn from_lambda(lambda: f64, n: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) || n == 0 {
            return Err(invalid("lambda must be positive and n at least 1"));
        }
        Ok(Self {
            epsilon_n: lambda / n as f64,
            lambda,
        })
    }

    pub fn from_epsilon(epsilon_n: f64, n: usize) -> Result<Self> {
        Self::from_lambda(epsilon_n * n as f64, n)
    }

    /// The `lambda` whose asymptotic optimum keeps the fraction
    /// `sample_ratio` of the history, given `ratio = A/B`.
    pub fn for_sample_ratio(sample_ratio: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(sample_ratio > 0.0 && sample_ratio < 1.0) {
            return Err(invalid(format!("sample ratio {sample_ratio} outside (0, 1)")));
        }
        if !(ratio > 0.0) {
            return Err(invalid("A/B must be positive"));
        }
        Self::from_lambda((1.0 / sample_ratio - 1.0) / ratio, n)
    }
}

/// Impulse response `a1(0..h)`: `a1(0) = 1`, `a1(j) = sum_i phi_i a1(j-i)`.
pub fn a1_sequence(phi: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let mut a1 = Vec::with_capacity(h);
    a1.push(1.0);
    for j in 1..h {
        let v = phi
            .iter()
            .enumerate()
            .take(j)
            .map(|(i, c)| c * a1[j - 1 - i])
            .sum();
        a1.push(v);
    }
    Ok(a1)
}

/// h-step forecast error variance with known coefficients.
pub fn forecast_variance(phi: &[f64], sigma2: f64, h: usize) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2 must be positive"));
    }
    Ok(sigma2 * a1_sequence(phi, h)?.iter().map(|a| a * a).sum::<f64>())
}

/// Coefficients `a(h)` of the h-step predictor on `(x_n, x_{n-1}, ...,
/// x_{n-p+1})`.
pub fn forecast_coefficients(phi: &[f64], h: usize) -> Vec<f64> {
    let p = phi.len();
    // coeffs[s] = a(s); a(0) is the unit vector picking x_n.
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(h + 1);
    let mut unit = vec![0.0; p];
    if p > 0 {
        unit[0] = 1.0;
    }
    coeffs.push(unit);
    for s in 1..=h {
        let mut next = vec![0.0; p];
        for (lag, c) in phi.iter().enumerate().map(|(i, c)| (i + 1, c)) {
            if lag <= s {
                for (dst, src) in next.iter_mut().zip(&coeffs[s - lag]) {
                    *dst += c * src;
                }
            } else {
                // x_{n+s-lag} is observed: position lag - s in the lag vector.
                next[lag - s] += c;
            }
        }
        coeffs.push(next);
    }
    coeffs.pop().unwrap_or_default()
}

fn companion(phi: &[f64]) -> DMatrix<f64> {
    let p = phi.len();
    let mut f = DMatrix::zeros(p, p);
    for (j, c) in phi.iter().enumerate() {
        f[(0, j)] = *c;
    }
    for i in 1..p {
        f[(i, i - 1)] = 1.0;
    }
    f
}

/// Jacobian `M_h[i][j] = d a_i(h) / d phi_j` (rows index the forecast
/// coefficient, columns the AR coefficient).
///
/// With `a(h)' = e1' F^h` and `dF/dphi_j = e1 e_j'`, the product rule gives
/// `d a(h)' / d phi_j = sum_{m<h} a1(m) e_j' F^(h-1-m)`.
pub fn coefficient_jacobian(phi: &[f64], h: usize) -> Result<DMatrix<f64>> {
    let p = phi.len();
    if p == 0 {
        return Err(invalid("Jacobian needs at least one AR coefficient"));
    }
    let a1 = a1_sequence(phi, h)?;
    let f = companion(phi);
    let mut powers = Vec::with_capacity(h);
    powers.push(DMatrix::<f64>::identity(p, p));
    for s in 1..h {
        let next = &f * &powers[s - 1];
        powers.push(next);
    }
    let mut jac = DMatrix::zeros(p, p);
    for (m, &w) in a1.iter().enumerate() {
        let pw = &powers[h - 1 - m];
        for i in 0..p {
            for j in 0..p {
                jac[(i, j)] += w * pw[(j, i)];
            }
        }
    }
    Ok(jac)
}

/// Theoretical autocovariances `gamma(0..=max_lag)` of a stationary AR(p).
pub fn theoretical_autocovariance(phi: &[f64], sigma2: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !is_stationary(phi) {
        return Err(Error::NonStationary);
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("sigma2 must be positive"));
    }
    let p = phi.len();
    // gamma(k) - sum_i phi_i gamma(|k - i|) = sigma2 [k == 0], k = 0..=p
    let mut sys = DMatrix::<f64>::identity(p + 1, p + 1);
    for k in 0..=p {
        for (i, c) in phi.iter().enumerate().map(|(i, c)| (i + 1, c)) {
            sys[(k, k.abs_diff(i))] -= c;
        }
    }
    let mut rhs = DVector::zeros(p + 1);
    rhs[0] = sigma2;
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("autocovariance system".into()))?;
    let mut gamma: Vec<f64> = sol.iter().copied().collect();
    while gamma.len() <= max_lag {
        let k = gamma.len();
        let v = phi
            .iter()
            .enumerate()
            .map(|(i, c)| c * gamma[k - 1 - i])
            .sum();
        gamma.push(v);
    }
    gamma.truncate(max_lag + 1);
    Ok(gamma)
}

/// `size x size` Toeplitz matrix `[gamma(i - j)]`.
pub fn theoretical_gamma(phi: &[f64], sigma2: f64, size: usize) -> Result<DMatrix<f64>> {
    let gamma = theoretical_autocovariance(phi, sigma2, size.saturating_sub(1))?;
    Ok(DMatrix::from_fn(size, size, |i, j| gamma[i.abs_diff(j)]))
}

/// `tr(M' Gamma^-1 M Gamma)` with `Gamma^-1` applied by Cholesky solve.
fn weighted_trace(jac: &DMatrix<f64>, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, gamma: &DMatrix<f64>) -> f64 {
    let solved = chol.solve(&(jac * gamma));
    (jac.transpose() * solved).trace()
}

/// Assembles A, B and A/B for known coefficients.
pub fn ab_ratio(phi: &[f64], sigma2: f64, h: usize) -> Result<AsymptoticReport> {
    let p = phi.len();
    if p == 0 {
        return Err(invalid("A/B needs an AR order of at least 1"));
    }
    let gamma = theoretical_gamma(phi, sigma2, p)?;
    let chol = gamma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("autocovariance matrix is not positive definite".into()))?;
    let a1 = a1_sequence(phi, h)?;
    let mut sigma_h2 = Vec::with_capacity(h);
    let mut acc = 0.0;
    for a in &a1 {
        acc += a * a;
        sigma_h2.push(sigma2 * acc);
    }
    let traces = (1..=h)
        .map(|j| Ok(weighted_trace(&coefficient_jacobian(phi, j)?, &chol, &gamma)))
        .collect::<Result<Vec<f64>>>()?;
    let a: f64 = sigma_h2.iter().sum();
    let b = sigma2 * traces.iter().sum::<f64>();
    Ok(AsymptoticReport {
        phi: phi.to_vec(),
        sigma2,
        h,
        a1,
        sigma_h2,
        traces,
        a_numerator: a / sigma2,
        a,
        b,
        ratio: a / b,
    })
}

/// Asymptotic predictive ratio `AMSE(k) / AMSE(n)`.
pub fn asymptotic_rp(k: usize, n: usize, report: &AsymptoticReport) -> Result<f64> {
    if k == 0 || k > n {
        return Err(invalid(format!("development size {k} outside 1..={n}")));
    }
    let (k, n) = (k as f64, n as f64);
    Ok(1.0 + (n / k - 1.0) / (1.0 + n * report.ratio))
}

/// Asymptotically optimal development size `ceil(n / (1 + lambda A/B))`,
/// clamped to `1..=n`.
pub fn optimal_k(n: usize, lambda: f64, report: &AsymptoticReport) -> Result<usize> {
    optimal_k_for_ratio(n, lambda, report.ratio)
}

pub fn optimal_k_for_ratio(n: usize, lambda: f64, ratio: f64) -> Result<usize> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let k = (n as f64 / (1.0 + lambda * ratio)).ceil();
    Ok((k as usize).clamp(1, n))
}

/// Plug-in A/B: Yule-Walker coefficients and innovation variance, with
/// `Gamma` implied by the fitted coefficients.
pub fn estimate_ab_ratio(series: &TimeSeries, p: usize, h: usize) -> Result<AsymptoticReport> {
    let model = yule_walker_fit(series, p)?;
    ab_ratio(&model.phi, model.sigma2, h)
}
