//! Dual-efficiency sweeps over the development size `k`.
//!
//! For a history of `n` observations and a horizon `h`, each candidate `k`
//! fits a model on the most recent `k` observations only and scores its
//! `h`-step forecast against the next `h` values. The sample efficiency is
//! `r_s = k / n` and the predictive efficiency `r_p = score(k) / score(n)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ar::{forecast, simulate_values, yule_walker, ArModel, Generator, SimSpec, DEFAULT_BURN_IN};
use crate::error::{insufficient, invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::order_select::{min_window, tune_values, Method, TuneOptions};
use crate::series::{evaluate, Criterion, SplitSpec, TimeSeries};
use crate::stats;

/// How a development window is turned into a forecasting model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitMethod {
    /// Yule-Walker at a fixed, known order.
    YuleWalker { order: usize },
    /// Penalized selection up to `max_order`, tuned by sliding window.
    Penalized {
        method: Method,
        max_order: usize,
        #[serde(default)]
        options: TuneOptions,
    },
}

impl FitMethod {
    /// Smallest development size the method can fit.
    pub fn min_k(&self) -> usize {
        match self {
            FitMethod::YuleWalker { order } => order + 1,
            FitMethod::Penalized { max_order, .. } => min_window(*max_order),
        }
    }

    pub fn fit(&self, window: &[f64]) -> Result<ArModel> {
        match self {
            FitMethod::YuleWalker { order } => yule_walker(window, *order),
            FitMethod::Penalized {
                method,
                max_order,
                options,
            } => tune_values(window, *max_order, *method, options)?.model(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FitMethod::YuleWalker { order } => format!("yw({order})"),
            FitMethod::Penalized { method, max_order, .. } => {
                format!("{}({max_order})", serde_json::to_value(method).unwrap_or_default().as_str().unwrap_or("?"))
            }
        }
    }

    fn with_execution(&self, execution: Execution) -> Self {
        match self {
            FitMethod::Penalized {
                method,
                max_order,
                options,
            } => FitMethod::Penalized {
                method: *method,
                max_order: *max_order,
                options: TuneOptions {
                    execution,
                    ..options.clone()
                },
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub r_s: f64,
    pub score: f64,
    pub r_p: f64,
}

/// A development size whose fit or forecast failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFailure {
    pub k: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    pub n: usize,
    pub h: usize,
    pub criterion: Criterion,
    pub method: FitMethod,
    /// Sorted by `k`; always contains `k = n`.
    pub points: Vec<CurvePoint>,
    pub failures: Vec<CurveFailure>,
}

impl EfficiencyCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "r_s", "score", "r_p"])?;
        for p in &self.points {
            w.write_record([p.k.to_string(), p.r_s.to_string(), p.score.to_string(), p.r_p.to_string()])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<output>".into(),
            source: e,
        })
    }

    pub fn score_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.k == k).map(|p| p.score)
    }
}

/// All integers in `k_min..=n` when `n <= 300`, otherwise 100 evenly spaced
/// values over the same range (both ends included).
pub fn default_k_grid(n: usize, k_min: usize) -> Vec<usize> {
    if k_min > n {
        return Vec::new();
    }
    if n <= 300 {
        return (k_min..=n).collect();
    }
    let span = (n - k_min) as f64;
    let mut grid: Vec<usize> = (0..100)
        .map(|i| k_min + (span * i as f64 / 99.0).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Score of one development size: fit on `x[n-k..n]`, forecast `h` steps,
/// compare with `x[n..n+h]`.
fn score_k(x: &[f64], split: SplitSpec, method: &FitMethod, criterion: Criterion) -> Result<f64> {
    let window = &x[split.development()];
    let model = method.fit(window)?;
    let pred = forecast(&model, window, split.h)?;
    evaluate(&x[split.validation()], &pred, criterion)
}

/// Sweeps `k_grid` (with `n` added if absent) over the first `n + h`
/// values of `series`. Failures at individual `k` are recorded rather than
/// returned; a failure at `k = n` is an error because it is the normalizer.
pub fn efficiency_curve(
    series: &TimeSeries,
    n: usize,
    h: usize,
    k_grid: &[usize],
    method: &FitMethod,
    criterion: Criterion,
    execution: Execution,
) -> Result<EfficiencyCurve> {
    curve_values(series.values(), n, h, k_grid, method, criterion, execution)
}

fn curve_values(
    x: &[f64],
    n: usize,
    h: usize,
    k_grid: &[usize],
    method: &FitMethod,
    criterion: Criterion,
    execution: Execution,
) -> Result<EfficiencyCurve> {
    SplitSpec::new(n, n, h, x.len())?;
    if k_grid.is_empty() {
        return Err(invalid("development-size grid is empty"));
    }
    let k_min = method.min_k();
    if let Some(&bad) = k_grid.iter().find(|&&k| k < k_min || k > n) {
        return Err(invalid(format!(
            "development size {bad} outside {k_min}..={n} for {}",
            method.label()
        )));
    }
    let mut ks = k_grid.to_vec();
    ks.push(n);
    ks.sort_unstable();
    ks.dedup();

    let inner = method.with_execution(Execution::Sequential);
    let scores = map_indexed(execution, ks.len(), |i| {
        score_k(x, SplitSpec::new(n, ks[i], h, x.len())?, &inner, criterion)
    });
    let full = match scores.last() {
        Some(Ok(s)) => *s,
        Some(Err(e)) => {
            return Err(insufficient(format!("fit on the full history failed: {e}")));
        }
        None => unreachable!("grid contains n"),
    };
    if !(full > 0.0) {
        return Err(invalid(format!("full-history score is {full}; r_p is undefined")));
    }

    let mut points = Vec::with_capacity(ks.len());
    let mut failures = Vec::new();
    for (k, s) in ks.into_iter().zip(scores) {
        match s {
            Ok(score) => points.push(CurvePoint {
                k,
                r_s: k as f64 / n as f64,
                score,
                r_p: score / full,
            }),
            Err(e) => failures.push(CurveFailure {
                k,
                message: e.to_string(),
            }),
        }
    }
    Ok(EfficiencyCurve {
        n,
        h,
        criterion,
        method: method.clone(),
        points,
        failures,
    })
}

/// Smallest `k` attaining the minimum score, or `None` for an empty curve.
pub fn select_optimal_k(curve: &EfficiencyCurve) -> Option<usize> {
    let mut best: Option<&CurvePoint> = None;
    for p in &curve.points {
        match best {
            Some(b) if p.score > b.score || (p.score == b.score && p.k >= b.k) => {}
            _ => best = Some(p),
        }
    }
    best.map(|p| p.k)
}

/// How each `(n, h)` cell of a study builds its `k` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KGridRule {
    /// [`default_k_grid`] from the method's minimum.
    Default,
    /// Only `k = n`, i.e. just the baseline score.
    FullOnly,
    Explicit(Vec<usize>),
    /// `round(f * n)` for each fraction, clamped into the valid range.
    Fractions(Vec<f64>),
}

impl KGridRule {
    pub fn grid(&self, n: usize, k_min: usize) -> Vec<usize> {
        match self {
            KGridRule::Default => default_k_grid(n, k_min),
            KGridRule::FullOnly => vec![n],
            KGridRule::Explicit(ks) => ks.clone(),
            KGridRule::Fractions(fs) => {
                let mut ks: Vec<usize> = fs
                    .iter()
                    .map(|f| ((f * n as f64).round() as usize).clamp(k_min.min(n), n))
                    .collect();
                ks.sort_unstable();
                ks.dedup();
                ks
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub generator: Generator,
    pub n_values: Vec<usize>,
    pub h_values: Vec<usize>,
    pub replicates: usize,
    pub k_grid: KGridRule,
    pub method: FitMethod,
    pub criterion: Criterion,
    /// Replicate `r` is simulated with seed `base_seed + r`.
    pub base_seed: u64,
    pub burn_in: usize,
}

impl StudyConfig {
    pub fn new(generator: Generator, n_values: Vec<usize>, h_values: Vec<usize>, replicates: usize, method: FitMethod, base_seed: u64) -> Self {
        Self {
            generator,
            n_values,
            h_values,
            replicates,
            k_grid: KGridRule::Default,
            method,
            criterion: Criterion::Mse,
            base_seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

/// Per-`k` reduction across replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub k: usize,
    pub r_s: f64,
    pub median_r_p: f64,
    pub mean_score: f64,
    /// Monte Carlo standard error of `mean_score`.
    pub se_score: f64,
    /// Replicates contributing to this `k`.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub n: usize,
    pub h: usize,
    pub method: String,
    /// Replicates whose full-history fit failed; excluded everywhere.
    pub failed_replicates: usize,
    /// Mean of `score(n)` across replicates.
    pub mean_score_n: f64,
    pub se_score_n: f64,
    pub median_score_n: f64,
    pub points: Vec<SummaryPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub config: StudyConfig,
    pub cells: Vec<StudyCell>,
}

impl StudySummary {
    /// One row per `(n, h, k)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "h",
            "method",
            "k",
            "r_s",
            "median_r_p",
            "mean_score",
            "se_score",
            "count",
            "mean_score_n",
            "se_score_n",
        ])?;
        for c in &self.cells {
            for p in &c.points {
                w.write_record([
                    c.n.to_string(),
                    c.h.to_string(),
                    c.method.clone(),
                    p.k.to_string(),
                    p.r_s.to_string(),
                    p.median_r_p.to_string(),
                    p.mean_score.to_string(),
                    p.se_score.to_string(),
                    p.count.to_string(),
                    c.mean_score_n.to_string(),
                    c.se_score_n.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Io {
            path: "<output>".into(),
            source: e,
        })
    }

    pub fn cell(&self, n: usize, h: usize) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.n == n && c.h == h)
    }
}

/// Monte Carlo study: for each `(n, h)` and replicate `r`, simulates
/// `n + h` values with seed `base_seed + r` and computes an efficiency
/// curve. Replicates run under `execution`; all reductions are sequential
/// in replicate order, so the summary does not depend on scheduling.
pub fn monte_carlo_study(config: &StudyConfig, execution: Execution) -> Result<StudySummary> {
    if config.replicates == 0 {
        return Err(invalid("replicates must be at least 1"));
    }
    if config.n_values.is_empty() || config.h_values.is_empty() {
        return Err(invalid("study needs at least one n and one h"));
    }
    let k_min = config.method.min_k();
    let inner = config.method.with_execution(Execution::Sequential);
    let mut cells = Vec::new();
    for &n in &config.n_values {
        for &h in &config.h_values {
            let grid = config.k_grid.grid(n, k_min);
            if grid.is_empty() {
                return Err(insufficient(format!("no development size fits between {k_min} and n = {n}")));
            }
            let curves = map_indexed(execution, config.replicates, |r| {
                let spec = SimSpec {
                    n: n + h,
                    seed: config.base_seed.wrapping_add(r as u64),
                    burn_in: config.burn_in,
                    generator: config.generator.clone(),
                };
                let x = simulate_values(&spec)?;
                curve_values(&x, n, h, &grid, &inner, config.criterion, Execution::Sequential)
            });
            cells.push(summarize(n, h, &config.method, curves)?);
        }
    }
    Ok(StudySummary {
        config: config.clone(),
        cells,
    })
}

fn summarize(n: usize, h: usize, method: &FitMethod, curves: Vec<Result<EfficiencyCurve>>) -> Result<StudyCell> {
    let mut failed = 0;
    let mut ok = Vec::new();
    for c in curves {
        match c {
            Ok(c) => ok.push(c),
            // Setup errors are not replicate-specific.
            Err(e @ (Error::InvalidInput(_) | Error::NonStationary)) => return Err(e),
            Err(_) => failed += 1,
        }
    }
    if ok.is_empty() {
        return Err(insufficient(format!("every replicate failed at n = {n}, h = {h}")));
    }
    let full: Vec<f64> = ok.iter().map(|c| c.score_at(n).expect("curve contains n")).collect();
    let mut ks: Vec<usize> = ok.iter().flat_map(|c| c.points.iter().map(|p| p.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    let points = ks
        .into_iter()
        .map(|k| {
            let (scores, ratios): (Vec<f64>, Vec<f64>) = ok
                .iter()
                .filter_map(|c| c.points.iter().find(|p| p.k == k))
                .map(|p| (p.score, p.r_p))
                .unzip();
            SummaryPoint {
                k,
                r_s: k as f64 / n as f64,
                median_r_p: stats::median(&ratios),
                mean_score: stats::mean(&scores),
                se_score: stats::std_error(&scores),
                count: scores.len(),
            }
        })
        .collect();
    Ok(StudyCell {
        n,
        h,
        method: method.label(),
        failed_replicates: failed,
        mean_score_n: stats::mean(&full),
        se_score_n: stats::std_error(&full),
        median_score_n: stats::median(&full),
        points,
    })
}

/// Overlapping-window risk estimate for one window size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRisk {
    pub k: usize,
    pub mean_risk: f64,
    pub placements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FukuchiResult {
    pub h: usize,
    pub k_selected: usize,
    pub risks: Vec<WindowRisk>,
}

/// Overlapping-window subsampling baseline without a reserved validation
/// set: for each window size `k`, every contiguous window of length `k`
/// that leaves `h` values after it is fitted and scored on those `h`
/// values, and the `n - k - h + 1` scores are averaged. Returns the `k`
/// with the smallest mean risk (smallest `k` on ties).
///
/// The last `reserved` values of `series` are held out and never used.
pub fn fukuchi_baseline(
    series: &TimeSeries,
    reserved: usize,
    h: usize,
    k_grid: &[usize],
    method: &FitMethod,
    criterion: Criterion,
    execution: Execution,
) -> Result<FukuchiResult> {
    if reserved >= series.len() {
        return Err(insufficient(format!(
            "reserving {reserved} of {} values leaves no history",
            series.len()
        )));
    }
    let x = &series.values()[..series.len() - reserved];
    let n = x.len();
    if h == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if k_grid.is_empty() {
        return Err(invalid("window-size grid is empty"));
    }
    let k_min = method.min_k();
    if n < h + k_min {
        return Err(insufficient(format!(
            "series of {n} values leaves no window of at least {k_min} before a horizon of {h}"
        )));
    }
    if let Some(&bad) = k_grid.iter().find(|&&k| k < k_min || k + h > n) {
        return Err(invalid(format!("window size {bad} outside {k_min}..={}", n - h)));
    }
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let inner = method.with_execution(Execution::Sequential);
    let risks = map_indexed(execution, ks.len(), |i| {
        let k = ks[i];
        let placements = n - k - h + 1;
        let mut total = 0.0;
        for start in 0..placements {
            let window = &x[start..start + k];
            let model = inner.fit(window)?;
            let pred = forecast(&model, window, h)?;
            total += evaluate(&x[start + k..start + k + h], &pred, criterion)?;
        }
        Ok(WindowRisk {
            k,
            mean_risk: total / placements as f64,
            placements,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut best = &risks[0];
    for r in &risks[1..] {
        if r.mean_risk < best.mean_risk {
            best = r;
        }
    }
    Ok(FukuchiResult {
        h,
        k_selected: best.k,
        risks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::simulate;
    use proptest::prelude::*;

    const PHI5: [f64; 5] = [0.5, -0.4, 0.3, -0.2, 0.1];

    fn ar5() -> Generator {
        Generator::Ar(ArModel::new(PHI5.to_vec(), 1.0, 0.0).unwrap())
    }

    fn yw(order: usize) -> FitMethod {
        FitMethod::YuleWalker { order }
    }

    fn curve_with_scores(scores: &[(usize, f64)]) -> EfficiencyCurve {
        EfficiencyCurve {
            n: 40,
            h: 1,
            criterion: Criterion::Mse,
            method: yw(1),
            points: scores
                .iter()
                .map(|&(k, score)| CurvePoint {
                    k,
                    r_s: k as f64 / 40.0,
                    score,
                    r_p: score,
                })
                .collect(),
            failures: Vec::new(),
        }
    }

    #[test]
    fn grid_rules() {
        assert_eq!(default_k_grid(10, 6), vec![6, 7, 8, 9, 10]);
        assert_eq!(default_k_grid(300, 6).len(), 295);
        let g = default_k_grid(1000, 6);
        assert_eq!(g.len(), 100);
        assert_eq!((g[0], g[99]), (6, 1000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(default_k_grid(5, 6).is_empty());
        assert_eq!(KGridRule::Fractions(vec![0.3, 0.6, 1.0]).grid(1000, 6), vec![300, 600, 1000]);
        assert_eq!(KGridRule::FullOnly.grid(50, 6), vec![50]);
    }

    #[test]
    fn single_point_curve_is_self_normalized() {
        let x = simulate(&SimSpec::new(120, 3, ar5())).unwrap();
        let c = efficiency_curve(&x, 100, 3, &[100], &yw(5), Criterion::Mse, Execution::Sequential).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].r_p, 1.0);
        assert_eq!(c.points[0].r_s, 1.0);
    }

    #[test]
    fn curve_adds_full_history_and_sorts() {
        let x = simulate(&SimSpec::new(80, 4, ar5())).unwrap();
        let c = efficiency_curve(&x, 70, 2, &[40, 10, 25], &yw(5), Criterion::Mae, Execution::Sequential).unwrap();
        let ks: Vec<usize> = c.points.iter().map(|p| p.k).collect();
        assert_eq!(ks, vec![10, 25, 40, 70]);
        assert_eq!(c.points.last().unwrap().r_p, 1.0);
    }

    #[test]
    fn curve_errors() {
        let short = TimeSeries::new(vec![1.0, 2.0, 0.5, 1.5, 0.7]).unwrap();
        let e = efficiency_curve(&short, 100, 1, &[100], &yw(1), Criterion::Mse, Execution::Sequential);
        assert!(matches!(e, Err(Error::InsufficientData(_))));
        let x = simulate(&SimSpec::new(60, 4, ar5())).unwrap();
        assert!(efficiency_curve(&x, 50, 2, &[3], &yw(5), Criterion::Mse, Execution::Sequential).is_err());
        assert!(efficiency_curve(&x, 50, 2, &[51], &yw(5), Criterion::Mse, Execution::Sequential).is_err());
        assert!(efficiency_curve(&x, 50, 2, &[], &yw(5), Criterion::Mse, Execution::Sequential).is_err());
    }

    #[test]
    fn degenerate_points_are_recorded() {
        // Constant prefix: windows inside it have zero variance.
        let mut v = vec![2.0; 30];
        v.extend((0..40).map(|i| (i as f64 * 0.9).sin()));
        let x = TimeSeries::new(v).unwrap();
        let c = efficiency_curve(&x, 68, 2, &[10, 30, 50], &yw(2), Criterion::Mse, Execution::Sequential).unwrap();
        assert!(c.points.iter().any(|p| p.k == 50));
        assert!(c.failures.is_empty() || c.failures.iter().all(|f| f.k < 50));
    }

    #[test]
    fn optimal_k_examples() {
        assert_eq!(select_optimal_k(&curve_with_scores(&[(10, 4.0), (20, 3.0), (30, 2.0)])), Some(30));
        assert_eq!(
            select_optimal_k(&curve_with_scores(&[(10, 5.0), (20, 3.0), (30, 3.0), (40, 4.0)])),
            Some(20)
        );
        assert_eq!(select_optimal_k(&curve_with_scores(&[(10, 1.0), (20, 1.0), (30, 1.0)])), Some(10));
        assert_eq!(select_optimal_k(&curve_with_scores(&[])), None);
    }

    #[test]
    fn study_is_deterministic_and_execution_independent() {
        let mut cfg = StudyConfig::new(ar5(), vec![60], vec![2, 4], 12, yw(5), 99);
        cfg.k_grid = KGridRule::Explicit(vec![20, 40]);
        let a = monte_carlo_study(&cfg, Execution::Sequential).unwrap();
        let b = monte_carlo_study(&cfg, Execution::Parallel).unwrap();
        let c = monte_carlo_study(&cfg, Execution::Sequential).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a, c);
        assert_eq!(a.cells.len(), 2);
        let cell = a.cell(60, 4).unwrap();
        assert_eq!(cell.points.last().unwrap().median_r_p, 1.0);
        assert_eq!(cell.points.last().unwrap().count, 12);
    }

    #[test]
    fn study_replicate_uses_offset_seed() {
        let mut cfg = StudyConfig::new(ar5(), vec![50], vec![3], 3, yw(5), 10);
        cfg.k_grid = KGridRule::FullOnly;
        let s = monte_carlo_study(&cfg, Execution::Sequential).unwrap();
        let direct: Vec<f64> = (0..3)
            .map(|r| {
                let x = simulate(&SimSpec::new(53, 10 + r, ar5())).unwrap();
                let c = efficiency_curve(&x, 50, 3, &[50], &yw(5), Criterion::Mse, Execution::Sequential).unwrap();
                c.points[0].score
            })
            .collect();
        assert_eq!(s.cells[0].mean_score_n, stats::mean(&direct));
    }

    #[test]
    fn study_csv_layout() {
        let mut cfg = StudyConfig::new(ar5(), vec![40], vec![1], 2, yw(2), 0);
        cfg.k_grid = KGridRule::Explicit(vec![20]);
        let s = monte_carlo_study(&cfg, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("n,h,method,k,r_s,median_r_p"));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("40,1,yw(2),20,0.5,"));
    }

    #[test]
    fn noise_curve_is_flat() {
        // With no serial dependence, deeper history only reduces estimation
        // error of a near-zero coefficient.
        let noise = Generator::Ar(ArModel::new(Vec::new(), 1.0, 0.0).unwrap());
        let mut cfg = StudyConfig::new(noise, vec![200], vec![5], 400, yw(1), 1234);
        cfg.k_grid = KGridRule::Fractions(vec![0.25, 0.5, 0.75]);
        let s = monte_carlo_study(&cfg, Execution::Parallel).unwrap();
        for p in &s.cells[0].points {
            assert!((p.median_r_p - 1.0).abs() < 0.1, "k={} median r_p={}", p.k, p.median_r_p);
            assert!((p.mean_score - s.cells[0].mean_score_n).abs() < 4.0 * p.se_score.max(s.cells[0].se_score_n));
        }
    }

    #[test]
    fn fukuchi_single_window_size() {
        let x = simulate(&SimSpec::new(60, 5, ar5())).unwrap();
        let r = fukuchi_baseline(&x, 0, 3, &[30], &yw(5), Criterion::Mse, Execution::Sequential).unwrap();
        assert_eq!(r.k_selected, 30);
        assert_eq!(r.risks[0].placements, 60 - 30 - 3 + 1);
        assert!(fukuchi_baseline(&x, 0, 3, &[58], &yw(5), Criterion::Mse, Execution::Sequential).is_err());
        assert!(fukuchi_baseline(&x, 0, 3, &[], &yw(5), Criterion::Mse, Execution::Sequential).is_err());
    }

    #[test]
    fn fukuchi_risk_matches_direct_average() {
        let x = simulate(&SimSpec::new(30, 6, ar5())).unwrap();
        let r = fukuchi_baseline(&x, 0, 2, &[20, 28], &yw(2), Criterion::Mse, Execution::Parallel).unwrap();
        let v = x.values();
        let direct: f64 = (0..9)
            .map(|s| {
                let w = &v[s..s + 20];
                let m = yule_walker(w, 2).unwrap();
                let f = forecast(&m, w, 2).unwrap();
                evaluate(&v[s + 20..s + 22], &f, Criterion::Mse).unwrap()
            })
            .sum::<f64>()
            / 9.0;
        assert_eq!(r.risks[0].mean_risk, direct);
        assert_eq!(r.risks[1].placements, 1);
        let held = fukuchi_baseline(&x, 5, 2, &[20], &yw(2), Criterion::Mse, Execution::Sequential).unwrap();
        assert_eq!(held.risks[0].placements, 25 - 20 - 2 + 1);
        assert!(fukuchi_baseline(&x, 30, 2, &[20], &yw(2), Criterion::Mse, Execution::Sequential).is_err());
    }

    #[test]
    fn penalized_method_runs_in_curve() {
        let x = simulate(&SimSpec::new(90, 2, Generator::Tar1)).unwrap();
        let m = FitMethod::Penalized {
            method: Method::Al,
            max_order: 4,
            options: TuneOptions::default(),
        };
        assert_eq!(m.min_k(), 15);
        let c = efficiency_curve(&x, 85, 5, &[15, 40], &m, Criterion::Mse, Execution::Parallel).unwrap();
        assert_eq!(c.points.len() + c.failures.len(), 3);
        assert_eq!(m.label(), "al(4)");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn validation_isolation(
            seed in 0u64..1000,
            k in 6usize..60,
            idx in 0usize..80,
            bump in -5.0..5.0f64,
        ) {
            let (n, h) = (60, 4);
            let x = simulate(&SimSpec::new(80, seed, ar5())).unwrap();
            let base = efficiency_curve(&x, n, h, &[k], &yw(5), Criterion::Mse, Execution::Sequential).unwrap();
            let mut v = x.values().to_vec();
            let outside = idx < n - k || idx >= n + h;
            prop_assume!(outside);
            v[idx] += bump;
            let moved = efficiency_curve(&TimeSeries::new(v).unwrap(), n, h, &[k], &yw(5), Criterion::Mse, Execution::Sequential).unwrap();
            prop_assert_eq!(base.score_at(k), moved.score_at(k));
        }

        #[test]
        fn full_history_ratio_is_one(seed in any::<u64>(), n in 20usize..80, h in 1usize..8) {
            let x = simulate(&SimSpec::new(n + h, seed, ar5())).unwrap();
            let c = efficiency_curve(&x, n, h, &[n / 2, n], &yw(3), Criterion::Rmse, Execution::Sequential).unwrap();
            let last = c.points.last().unwrap();
            prop_assert_eq!(last.k, n);
            prop_assert_eq!(last.r_p, 1.0);
        }
    }
}
