//! Penalized AR order selection.
//!
//! The AR(p_max) regression is written as `y = Z phi + e`, where each row of
//! `Z` holds the `p_max` values preceding its response in reverse time
//! order. Coefficients are estimated by adaptive LASSO or adaptive elastic
//! net, solved by cyclic coordinate descent on the Gram matrix, with the
//! penalty level (and mixing) chosen by a leave-future-out sliding window.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ar::{yule_walker, ArModel};
use crate::error::{insufficient, invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::series::TimeSeries;

const MAX_SWEEPS: usize = 10_000;
const TOLERANCE: f64 = 1e-8;
const WEIGHT_FLOOR: f64 = 1e-8;

/// Lagged regression problem built from one development window.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    /// Responses, `k_m = k - p_max` of them.
    pub y: Vec<f64>,
    /// `k_m x p_max` design; row `r`, column `c` is the value `c + 1` steps
    /// before `y[r]`.
    pub z: DMatrix<f64>,
    pub p_max: usize,
    /// Length `k` of the window the problem was built from.
    pub window_len: usize,
}

impl DesignProblem {
    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.z.transpose() * &self.z
    }

    pub fn zty(&self) -> Vec<f64> {
        (self.z.transpose() * DVector::from_column_slice(&self.y))
            .iter()
            .copied()
            .collect()
    }

    /// `||y - Z phi||^2`.
    pub fn rss(&self, phi: &[f64]) -> f64 {
        let fitted = &self.z * DVector::from_column_slice(phi);
        self.y
            .iter()
            .zip(fitted.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Builds the lagged design of order `p_max` from `window` as given (no
/// centring).
pub fn build_design(window: &[f64], p_max: usize) -> Result<DesignProblem> {
    let k = window.len();
    if k <= p_max {
        return Err(insufficient(format!(
            "window of {k} observations cannot support order {p_max}"
        )));
    }
    let rows = k - p_max;
    let y = window[p_max..].to_vec();
    let z = DMatrix::from_fn(rows, p_max, |r, c| window[p_max + r - 1 - c]);
    Ok(DesignProblem {
        y,
        z,
        p_max,
        window_len: k,
    })
}

/// `w_j = |phi_j|^-gamma`, magnitudes floored at `1e-8`.
pub fn adaptive_weights(phi_init: &[f64], gamma: f64) -> Vec<f64> {
    phi_init
        .iter()
        .map(|v| v.abs().max(WEIGHT_FLOOR).powf(-gamma))
        .collect()
}

/// Non-increasing adjustment of initial coefficient magnitudes.
///
/// Starting from the first entry, each anchor is joined by a straight line
/// to the next entry that does not exceed it; entries in between (the
/// violations) are replaced by the interpolated values. Trailing entries
/// with no lower successor take the anchor's value. Already non-increasing
/// input is returned unchanged.
pub fn monotone_adjust(b: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = b.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!(
            "magnitude at position {i} is negative or non-finite"
        )));
    }
    let mut out = b.to_vec();
    let mut anchor = 0;
    while anchor + 1 < b.len() {
        let upper = b[anchor];
        match (anchor + 1..b.len()).find(|&j| b[j] <= upper) {
            Some(next) => {
                let span = (next - anchor) as f64;
                let slope = (b[next] - upper) / span;
                for (step, slot) in out[anchor + 1..next].iter_mut().enumerate() {
                    *slot = upper + slope * (step + 1) as f64;
                }
                anchor = next;
            }
            None => {
                out[anchor + 1..].fill(upper);
                break;
            }
        }
    }
    Ok(out)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Penalized least squares in Gram form:
/// `phi' G phi - 2 c' phi + l2 ||phi||^2 + l1 sum_j w_j |phi_j|`.
struct GramObjective<'a> {
    gram: &'a [f64],
    c: &'a [f64],
    p: usize,
}

impl GramObjective<'_> {
    fn value(&self, phi: &[f64], weights: &[f64], l1: f64, l2: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for i in 0..p {
            let row: f64 = (0..p).map(|j| self.gram[i * p + j] * phi[j]).sum();
            quad += phi[i] * row;
        }
        let lin: f64 = self.c.iter().zip(phi).map(|(a, b)| a * b).sum();
        let l2term: f64 = phi.iter().map(|v| v * v).sum();
        let l1term: f64 = phi.iter().zip(weights).map(|(v, w)| w * v.abs()).sum();
        quad - 2.0 * lin + l2 * l2term + l1 * l1term
    }

    /// One coordinate pass over `coords`; returns the largest change.
    fn sweep(&self, coords: &[usize], weights: &[f64], l1: f64, l2: f64, phi: &mut [f64], g_phi: &mut [f64]) -> f64 {
        let p = self.p;
        let mut max_change = 0.0f64;
        for &j in coords {
            let gjj = self.gram[j * p + j];
            let denom = gjj + l2;
            let old = phi[j];
            let new = if denom > 0.0 {
                let partial = self.c[j] - (g_phi[j] - gjj * old);
                soft_threshold(partial, 0.5 * l1 * weights[j]) / denom
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                phi[j] = new;
                for (i, g) in g_phi.iter_mut().enumerate() {
                    *g += self.gram[i * p + j] * delta;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    /// Cyclic coordinate descent from the current contents of `phi`.
    /// Full passes alternate with passes restricted to the non-zero
    /// coordinates; convergence is only declared after a full pass.
    /// Returns the number of passes.
    fn minimize(&self, weights: &[f64], l1: f64, l2: f64, phi: &mut [f64]) -> Result<usize> {
        let p = self.p;
        let all: Vec<usize> = (0..p).collect();
        let mut g_phi: Vec<f64> = (0..p)
            .map(|i| (0..p).map(|j| self.gram[i * p + j] * phi[j]).sum())
            .collect();
        let mut last = if cfg!(debug_assertions) {
            self.value(phi, weights, l1, l2)
        } else {
            0.0
        };
        let mut check = |phi: &[f64], sweep: usize| {
            if cfg!(debug_assertions) {
                let now = self.value(phi, weights, l1, l2);
                debug_assert!(
                    now <= last + 1e-9 * (last.abs() + 1.0),
                    "objective increased from {last} to {now} in sweep {sweep}"
                );
                last = now;
            }
        };
        let mut sweeps = 0;
        let mut max_change = f64::INFINITY;
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            max_change = self.sweep(&all, weights, l1, l2, phi, &mut g_phi);
            check(phi, sweeps);
            if max_change < TOLERANCE {
                return Ok(sweeps);
            }
            let active: Vec<usize> = all.iter().copied().filter(|&j| phi[j] != 0.0).collect();
            while sweeps < MAX_SWEEPS {
                sweeps += 1;
                max_change = self.sweep(&active, weights, l1, l2, phi, &mut g_phi);
                check(phi, sweeps);
                if max_change < TOLERANCE {
                    break;
                }
            }
        }
        Err(Error::NonConvergence {
            iterations: MAX_SWEEPS,
            max_change,
        })
    }
}

fn check_weights(weights: &[f64], p: usize) -> Result<()> {
    if weights.len() != p {
        return Err(invalid(format!("{} weights for {p} coefficients", weights.len())));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(invalid("adaptive weights must be positive and finite"));
    }
    Ok(())
}

fn gram_parts(problem: &DesignProblem) -> (Vec<f64>, Vec<f64>) {
    let g = problem.gram();
    let p = problem.p_max;
    let flat = (0..p * p).map(|idx| g[(idx / p, idx % p)]).collect();
    (flat, problem.zty())
}

/// Adaptive LASSO: minimizes `||y - Z phi||^2 + lambda sum_j w_j |phi_j|`.
pub fn fit_adaptive_lasso(problem: &DesignProblem, weights: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_weights(weights, problem.p_max)?;
    if !(lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let (gram, c) = gram_parts(problem);
    let obj = GramObjective {
        gram: &gram,
        c: &c,
        p: problem.p_max,
    };
    let mut phi = vec![0.0; problem.p_max];
    obj.minimize(weights, lambda, 0.0, &mut phi)?;
    Ok(phi)
}

/// Adaptive elastic net: minimizes
/// `||y - Z phi||^2 + lambda (1 - alpha)/2 ||phi||^2 + lambda alpha/2 sum_j w_j |phi_j|`
/// and rescales the minimizer by `1 + lambda (1 - alpha) / (2 k)`, `k` the
/// window length.
pub fn fit_adaptive_elastic_net(
    problem: &DesignProblem,
    weights: &[f64],
    lambda: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    check_weights(weights, problem.p_max)?;
    if !(lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let (gram, c) = gram_parts(problem);
    let obj = GramObjective {
        gram: &gram,
        c: &c,
        p: problem.p_max,
    };
    let (l1, l2) = enet_penalties(lambda, alpha);
    let mut phi = vec![0.0; problem.p_max];
    obj.minimize(weights, l1, l2, &mut phi)?;
    let scale = enet_rescale(lambda, alpha, problem.window_len);
    Ok(phi.into_iter().map(|v| v * scale).collect())
}

fn enet_penalties(lambda: f64, alpha: f64) -> (f64, f64) {
    (0.5 * lambda * alpha, 0.5 * lambda * (1.0 - alpha))
}

fn enet_rescale(lambda: f64, alpha: f64, k: usize) -> f64 {
    1.0 + lambda * (1.0 - alpha) / (2.0 * k as f64)
}

/// Smallest penalty at which every coefficient is zero. `alpha = None`
/// selects the LASSO parametrization; elastic net with `alpha = 0` has no
/// finite value and returns infinity.
pub fn lambda_max(problem: &DesignProblem, weights: &[f64], alpha: Option<f64>) -> f64 {
    let c = problem.zty();
    let m = c
        .iter()
        .zip(weights)
        .map(|(c, w)| c.abs() / w)
        .fold(0.0, f64::max);
    match alpha {
        None => 2.0 * m,
        Some(a) if a > 0.0 => 4.0 * m / a,
        Some(_) => f64::INFINITY,
    }
}

/// Least-squares initial estimate from Gram form, or `None` when the
/// system is rank deficient or badly conditioned.
fn ols_from_gram(gram: &[f64], c: &[f64], p: usize) -> Option<Vec<f64>> {
    if p == 0 {
        return Some(Vec::new());
    }
    let g = DMatrix::from_row_slice(p, p, gram);
    let chol = g.cholesky()?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..p).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-10 * max) {
        return None;
    }
    let sol = chol.solve(&DVector::from_column_slice(c));
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
}

/// Initial estimator: OLS when there are more rows than lags and the Gram
/// matrix is well conditioned, otherwise Yule-Walker of order `p_max` on
/// the raw segment.
fn initial_estimate(gram: &[f64], c: &[f64], rows: usize, p: usize, segment: &[f64]) -> Result<Vec<f64>> {
    if rows > p {
        if let Some(phi) = ols_from_gram(gram, c, p) {
            return Ok(phi);
        }
    }
    Ok(yule_walker(segment, p)?.phi)
}

/// Penalized estimator family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Adaptive LASSO, lambda tuned.
    Al,
    /// Adaptive elastic net, alpha fixed at 0.5, lambda tuned.
    Ae,
    /// Adaptive elastic net, lambda and alpha tuned.
    Ate,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "al" => Ok(Method::Al),
            "ae" => Ok(Method::Ae),
            "ate" => Ok(Method::Ate),
            other => Err(invalid(format!("unknown penalized method `{other}`"))),
        }
    }
}

pub const AE_FIXED_ALPHA: f64 = 0.5;

/// Penalty chosen by [`tune_sw`]. For [`Method::Al`] `lambda` is in the
/// LASSO parametrization and `alpha` is reported as 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub method: Method,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub weights: Vec<f64>,
    pub monotone_adjusted: bool,
}

/// Tuning grid. `lambdas = None` uses `points` log-spaced values over
/// `[min_ratio * lambda_max, lambda_max]`, computed per alpha.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambdas: Option<Vec<f64>>,
    pub points: usize,
    pub min_ratio: f64,
    /// Mixing values for [`Method::Ate`]; ignored by the other methods.
    pub alphas: Vec<f64>,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            lambdas: None,
            points: 50,
            min_ratio: 1e-4,
            alphas: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub grid: TuningGrid,
    pub gamma: f64,
    pub monotone_adjusted: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            grid: TuningGrid::default(),
            gamma: 1.0,
            monotone_adjusted: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub penalty: PenaltySpec,
    pub coefficients: Vec<f64>,
    /// Window mean removed before fitting.
    pub mean: f64,
    /// Mean one-step squared error of the selected grid point.
    pub score: f64,
    pub scored_rows: usize,
    /// Residual mean square of the final fit.
    pub residual_variance: f64,
}

impl TuneResult {
    pub fn model(&self) -> Result<ArModel> {
        ArModel::new(
            self.coefficients.clone(),
            self.residual_variance.max(f64::MIN_POSITIVE),
            self.mean,
        )
    }
}

/// Inside tuning, hitting the sweep cap is a stopping rule rather than a
/// failure: the current iterate is kept.
fn capped(outcome: Result<usize>) -> Result<usize> {
    match outcome {
        Err(Error::NonConvergence { iterations, .. }) => Ok(iterations),
        other => other,
    }
}

/// Number of training rows required before the first scored row.
pub fn min_training_rows(p_max: usize) -> usize {
    p_max.max(10)
}

/// Shortest window for which [`tune_sw`] can score at least one row.
pub fn min_window(p_max: usize) -> usize {
    p_max + min_training_rows(p_max) + 1
}

#[derive(Clone, Copy, Debug)]
struct GridPoint {
    lambda: f64,
    /// `None` for the LASSO parametrization.
    alpha: Option<f64>,
}

impl GridPoint {
    fn penalties(&self) -> (f64, f64) {
        match self.alpha {
            None => (self.lambda, 0.0),
            Some(a) => enet_penalties(self.lambda, a),
        }
    }

    fn rescale(&self, k: usize) -> f64 {
        match self.alpha {
            None => 1.0,
            Some(a) => enet_rescale(self.lambda, a, k),
        }
    }
}

fn log_grid(max: f64, points: usize, min_ratio: f64) -> Vec<f64> {
    if points == 1 || !(max > 0.0) {
        return vec![max.max(0.0)];
    }
    let (hi, lo) = (max.ln(), (max * min_ratio).ln());
    (0..points)
        .map(|i| (hi + (lo - hi) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Selects the penalty by leave-future-out scoring over the lagged rows of
/// `window`, then refits on all rows.
///
/// The window is centred by its mean. For each row `i` from
/// [`min_training_rows`] on, every grid point is fitted on rows `0..i`
/// (with adaptive weights from that prefix's initial estimate) and scored by
/// the squared error on row `i`. The grid point with the smallest mean score
/// wins; ties go to the larger lambda, then the smaller alpha.
pub fn tune_sw(window: &TimeSeries, p_max: usize, method: Method, options: &TuneOptions) -> Result<TuneResult> {
    tune_values(window.values(), p_max, method, options)
}

pub(crate) fn tune_values(x: &[f64], p_max: usize, method: Method, options: &TuneOptions) -> Result<TuneResult> {
    if p_max == 0 {
        return Err(invalid("maximum order must be at least 1"));
    }
    let min_train = min_training_rows(p_max);
    if x.len() < min_window(p_max) {
        return Err(insufficient(format!(
            "sliding-window tuning at order {p_max} needs at least {} observations, got {}",
            min_window(p_max),
            x.len()
        )));
    }
    let grid = &options.grid;
    if grid.lambdas.as_ref().is_some_and(|l| l.is_empty()) || (method == Method::Ate && grid.alphas.is_empty()) {
        return Err(invalid("tuning grid is empty"));
    }
    if grid
        .lambdas
        .as_ref()
        .is_some_and(|l| l.iter().any(|v| !(*v >= 0.0) || !v.is_finite()))
    {
        return Err(invalid("lambda grid values must be finite and non-negative"));
    }
    if grid.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(invalid("alpha grid values must lie in [0, 1]"));
    }
    if grid.lambdas.is_none() && (grid.points == 0 || !(grid.min_ratio > 0.0 && grid.min_ratio < 1.0)) {
        return Err(invalid("automatic lambda grid needs points >= 1 and min_ratio in (0, 1)"));
    }

    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let xc: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let problem = build_design(&xc, p_max)?;
    let p = p_max;
    let rows = problem.rows();
    let (full_gram, full_c) = gram_parts(&problem);

    let weights_for = |phi_init: &[f64]| -> Result<Vec<f64>> {
        let mags: Vec<f64> = phi_init.iter().map(|v| v.abs()).collect();
        let mags = if options.monotone_adjusted {
            monotone_adjust(&mags)?
        } else {
            mags
        };
        Ok(adaptive_weights(&mags, options.gamma))
    };

    let full_init = initial_estimate(&full_gram, &full_c, rows, p, &xc)?;
    let full_weights = weights_for(&full_init)?;

    let alphas: Vec<Option<f64>> = match method {
        Method::Al => vec![None],
        Method::Ae => vec![Some(AE_FIXED_ALPHA)],
        Method::Ate => grid.alphas.iter().map(|&a| Some(a)).collect(),
    };
    // Each alpha's lambda path, sorted descending for warm starts.
    let paths: Vec<Vec<GridPoint>> = alphas
        .iter()
        .map(|&alpha| {
            let mut lambdas = match &grid.lambdas {
                Some(l) => l.clone(),
                None => {
                    let top = lambda_max(&problem, &full_weights, alpha);
                    let top = if top.is_finite() { top } else { lambda_max(&problem, &full_weights, None) };
                    log_grid(top, grid.points, grid.min_ratio)
                }
            };
            lambdas.sort_by(|a, b| b.total_cmp(a));
            lambdas.dedup();
            lambdas.into_iter().map(|lambda| GridPoint { lambda, alpha }).collect()
        })
        .collect();

    // Prefix sufficient statistics: entry i covers rows 0..i.
    let mut prefix_gram = Vec::with_capacity(rows - min_train);
    let mut prefix_c = Vec::with_capacity(rows - min_train);
    let mut g = vec![0.0; p * p];
    let mut c = vec![0.0; p];
    for r in 0..rows {
        if r >= min_train {
            prefix_gram.push(g.clone());
            prefix_c.push(c.clone());
        }
        let zr: Vec<f64> = (0..p).map(|j| problem.z[(r, j)]).collect();
        for a in 0..p {
            c[a] += zr[a] * problem.y[r];
            for b in 0..p {
                g[a * p + b] += zr[a] * zr[b];
            }
        }
    }
    let scored = rows - min_train;

    let per_row: Vec<Result<Vec<f64>>> = map_indexed(options.execution, scored, |s| {
        let row = min_train + s;
        let gram = &prefix_gram[s];
        let c = &prefix_c[s];
        let segment = &xc[..row + p];
        let init = initial_estimate(gram, c, row, p, segment)?;
        let weights = weights_for(&init)?;
        let obj = GramObjective { gram, c, p };
        let z_row: Vec<f64> = (0..p).map(|j| problem.z[(row, j)]).collect();
        let y_row = problem.y[row];
        let mut errors = Vec::new();
        for path in &paths {
            let mut phi = vec![0.0; p];
            for point in path {
                let (l1, l2) = point.penalties();
                capped(obj.minimize(&weights, l1, l2, &mut phi))?;
                let scale = point.rescale(row + p);
                let pred: f64 = z_row.iter().zip(&phi).map(|(a, b)| a * b * scale).sum();
                errors.push((y_row - pred) * (y_row - pred));
            }
        }
        Ok(errors)
    });
    let per_row = per_row.into_iter().collect::<Result<Vec<_>>>()?;

    let points: Vec<GridPoint> = paths.iter().flatten().copied().collect();
    let mut totals = vec![0.0; points.len()];
    for errs in &per_row {
        for (t, e) in totals.iter_mut().zip(errs) {
            *t += e;
        }
    }
    let scores: Vec<f64> = totals.iter().map(|t| t / scored as f64).collect();

    let mut best = 0;
    for i in 1..points.len() {
        let (a, b) = (scores[i], scores[best]);
        let tie = (a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE);
        let better = if tie {
            let (pi, pb) = (points[i], points[best]);
            pi.lambda > pb.lambda
                || (pi.lambda == pb.lambda && pi.alpha.unwrap_or(1.0) < pb.alpha.unwrap_or(1.0))
        } else {
            a < b
        };
        if better {
            best = i;
        }
    }
    let chosen = points[best];

    let full_obj = GramObjective {
        gram: &full_gram,
        c: &full_c,
        p,
    };
    let (l1, l2) = chosen.penalties();
    let mut phi = vec![0.0; p];
    capped(full_obj.minimize(&full_weights, l1, l2, &mut phi))?;
    let scale = chosen.rescale(x.len());
    let coefficients: Vec<f64> = phi.iter().map(|v| v * scale).collect();
    let residual_variance = problem.rss(&coefficients) / rows as f64;

    Ok(TuneResult {
        penalty: PenaltySpec {
            method,
            lambda: chosen.lambda,
            alpha: chosen.alpha.unwrap_or(1.0),
            gamma: options.gamma,
            weights: full_weights,
            monotone_adjusted: options.monotone_adjusted,
        },
        coefficients,
        mean,
        score: scores[best],
        scored_rows: scored,
        residual_variance,
    })
}
