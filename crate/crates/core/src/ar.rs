//! AR(p) estimation, forecasting, stationarity and simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{insufficient, invalid, Error, Result};
use crate::series::TimeSeries;

/// Zero-mean AR(p) dynamics around `mean`:
/// `x[t] - mean = sum_i phi[i] (x[t-1-i] - mean) + e[t]`, `Var e = sigma2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub phi: Vec<f64>,
    pub sigma2: f64,
    #[serde(default)]
    pub mean: f64,
}

impl ArModel {
    pub fn new(phi: Vec<f64>, sigma2: f64, mean: f64) -> Result<Self> {
        if phi.iter().any(|v| !v.is_finite()) || !mean.is_finite() {
            return Err(invalid("AR coefficients and mean must be finite"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("innovation variance must be positive, got {sigma2}")));
        }
        Ok(Self { phi, sigma2, mean })
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn is_stationary(&self) -> bool {
        is_stationary(&self.phi)
    }
}

/// Biased sample autocovariances `gamma(0..=max_lag)` around the sample mean.
pub fn sample_autocovariance(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    autocovariance(series.values(), max_lag)
}

pub(crate) fn autocovariance(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag >= n {
        return Err(insufficient(format!(
            "lag {max_lag} needs more than {n} observations"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    Ok((0..=max_lag)
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect())
}

/// Output of the Levinson-Durbin recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct Levinson {
    pub phi: Vec<f64>,
    /// One-step prediction error variance at the final order.
    pub sigma2: f64,
    /// Partial autocorrelations (reflection coefficients), one per order.
    pub reflection: Vec<f64>,
}

/// Solves the order-`p` Toeplitz system `R phi = r` with
/// `R[i][j] = gamma[|i-j|]`, `r[i] = gamma[i+1]` in O(p^2).
pub fn levinson_durbin(gamma: &[f64], p: usize) -> Result<Levinson> {
    if gamma.len() < p + 1 {
        return Err(invalid(format!(
            "order {p} needs {} autocovariances, got {}",
            p + 1,
            gamma.len()
        )));
    }
    let g0 = gamma[0];
    if !(g0 > 0.0) || !g0.is_finite() {
        return Err(Error::Singular(format!(
            "zero-lag autocovariance is {g0} (constant series?)"
        )));
    }
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut reflection = Vec::with_capacity(p);
    let mut err = g0;
    for m in 1..=p {
        let acc: f64 = phi
            .iter()
            .enumerate()
            .map(|(j, a)| a * gamma[m - 1 - j])
            .sum();
        let k = (gamma[m] - acc) / err;
        if !(k.abs() < 1.0) {
            return Err(Error::Singular(format!(
                "reflection coefficient {k} at order {m} is not inside (-1, 1)"
            )));
        }
        let prev = phi.clone();
        for j in 0..m - 1 {
            phi[j] = prev[j] - k * prev[m - 2 - j];
        }
        phi.push(k);
        reflection.push(k);
        err *= 1.0 - k * k;
        if !(err > g0 * 1e-14) {
            return Err(Error::Singular(format!(
                "prediction error variance vanished at order {m}"
            )));
        }
    }
    Ok(Levinson {
        phi,
        sigma2: err,
        reflection,
    })
}

/// Yule-Walker AR(p) fit on the de-meaned series.
pub fn yule_walker_fit(series: &TimeSeries, p: usize) -> Result<ArModel> {
    yule_walker(series.values(), p)
}

pub(crate) fn yule_walker(x: &[f64], p: usize) -> Result<ArModel> {
    if x.len() < p + 1 {
        return Err(insufficient(format!(
            "AR({p}) needs at least {} observations, got {}",
            p + 1,
            x.len()
        )));
    }
    let gamma = autocovariance(x, p)?;
    let lev = levinson_durbin(&gamma, p)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    ArModel::new(lev.phi, lev.sigma2, mean)
}

/// True iff every root of `1 - phi_1 z - ... - phi_p z^p` lies strictly
/// outside the unit circle.
///
/// Uses the step-down (Schur-Cohn) recursion: the polynomial is stable iff
/// every reflection coefficient recovered from `phi` has modulus below one.
pub fn is_stationary(phi: &[f64]) -> bool {
    if phi.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let mut a = phi.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        a = (0..m - 1)
            .map(|j| (a[j] + k * a[m - 2 - j]) / denom)
            .collect();
    }
    true
}

/// Recursive plug-in forecast of the next `h` values after `history`.
///
/// Step `t` uses earlier forecasts for lags below `t` and observed values
/// for the remaining lags, all centred on `model.mean`.
pub fn forecast(model: &ArModel, history: &[f64], h: usize) -> Result<Vec<f64>> {
    let p = model.order();
    if h == 0 {
        return Err(invalid("forecast horizon must be at least 1"));
    }
    if history.len() < p {
        return Err(insufficient(format!(
            "AR({p}) forecast needs {p} past values, got {}",
            history.len()
        )));
    }
    let mut path: Vec<f64> = history[history.len() - p..]
        .iter()
        .map(|v| v - model.mean)
        .collect();
    path.reserve(h);
    for _ in 0..h {
        let len = path.len();
        let next: f64 = model
            .phi
            .iter()
            .enumerate()
            .map(|(i, c)| c * path[len - 1 - i])
            .sum();
        path.push(next);
    }
    Ok(path[p..].iter().map(|v| v + model.mean).collect())
}

/// One step of the two-regime threshold process used for misspecification
/// experiments (threshold -0.2).
pub fn tar1_next(prev: f64, innovation: f64) -> f64 {
    if prev < -0.2 {
        0.14 + 0.10 * prev + innovation
    } else {
        0.80 * prev + innovation
    }
}

/// Data-generating process for [`simulate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Ar(ArModel),
    /// Unit-variance Gaussian innovations.
    Tar1,
}

impl Generator {
    /// Generates one value per innovation (already scaled), continuing from
    /// `initial` (oldest first). Missing initial values are taken as the
    /// process mean.
    pub fn path(&self, initial: &[f64], innovations: &[f64]) -> Vec<f64> {
        match self {
            Generator::Ar(model) => {
                let p = model.order();
                let mut dev: Vec<f64> = vec![0.0; p.saturating_sub(initial.len())];
                dev.extend(
                    initial[initial.len().saturating_sub(p)..]
                        .iter()
                        .map(|v| v - model.mean),
                );
                dev.reserve(innovations.len());
                for e in innovations {
                    let len = dev.len();
                    let next: f64 = model
                        .phi
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c * dev[len - 1 - i])
                        .sum::<f64>()
                        + e;
                    dev.push(next);
                }
                dev[p..].iter().map(|v| v + model.mean).collect()
            }
            Generator::Tar1 => {
                let mut prev = initial.last().copied().unwrap_or(0.0);
                innovations
                    .iter()
                    .map(|&e| {
                        prev = tar1_next(prev, e);
                        prev
                    })
                    .collect()
            }
        }
    }

    fn innovation_sd(&self) -> f64 {
        match self {
            Generator::Ar(m) => m.sigma2.sqrt(),
            Generator::Tar1 => 1.0,
        }
    }
}

pub const DEFAULT_BURN_IN: usize = 500;

/// Simulation request: `n` retained values after `burn_in` discarded ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub generator: Generator,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl SimSpec {
    pub fn new(n: usize, seed: u64, generator: Generator) -> Self {
        Self {
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
            generator,
        }
    }
}

/// Draws a path from `spec.generator` with Gaussian innovations from a
/// ChaCha8 stream seeded by `spec.seed`; bit-reproducible per seed.
pub fn simulate(spec: &SimSpec) -> Result<TimeSeries> {
    TimeSeries::new(simulate_values(spec)?)
}

pub(crate) fn simulate_values(spec: &SimSpec) -> Result<Vec<f64>> {
    if spec.n == 0 {
        return Err(invalid("simulation length must be at least 1"));
    }
    if let Generator::Ar(model) = &spec.generator {
        if !model.is_stationary() {
            return Err(Error::NonStationary);
        }
    }
    let sd = spec.generator.innovation_sd();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.burn_in + spec.n;
    let innovations: Vec<f64> = (0..total)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect();
    let mut path = spec.generator.path(&[], &innovations);
    Ok(path.split_off(spec.burn_in))
}
