//! `paeback` command-line front-end. Each subcommand is a thin adapter over
//! one library operation.
//!
//! Exit status: 0 on success, 1 for data errors, 2 for usage errors.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use serde::Serialize;

use paeback::ar::{forecast, simulate, yule_walker_fit, ArModel, Generator, SimSpec};
use paeback::asymptotics::{ab_ratio, estimate_ab_ratio, optimal_k, AsymptoticReport, IrrelevancySpec};
use paeback::efficiency::{
    default_k_grid, efficiency_curve, fukuchi_baseline, monte_carlo_study, select_optimal_k,
    EfficiencyCurve, FitMethod, KGridRule, StudyConfig,
};
use paeback::order_select::{tune_sw, Method, TuneOptions, TuneResult, TuningGrid};
use paeback::series::{load_csv, log_return, ColumnRef, Criterion, TimeSeries};
use paeback::Execution;

use args::*;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(paeback::Error),
}

impl From<paeback::Error> for CliError {
    fn from(e: paeback::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let command = Cli::command().mut_subcommands(|c| c.args_override_self(true));
    let cli = match command
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return report(CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    let (code, msg) = match e {
        CliError::Usage(m) => (2, m),
        CliError::Data(e) => (1, e.to_string()),
    };
    eprintln!("error: {}", msg.replace('\n', " "));
    ExitCode::from(code)
}

fn run(cli: Cli) -> CliResult<()> {
    let pool = match cli.jobs {
        Some(0) => return usage("--jobs must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let out = Output {
        format: cli.format,
        path: cli.output,
    };
    pool.install(|| dispatch(cli.command, &out))
}

struct Output {
    format: Format,
    path: Option<PathBuf>,
}

impl Output {
    fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// Writes JSON, or calls `csv` with the writer for CSV output.
    fn emit<T: Serialize>(&self, value: &T, csv: impl FnOnce(&mut dyn Write) -> paeback::Result<()>) -> CliResult<()> {
        let mut w = self.writer()?;
        let target = self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, value).map_err(paeback::Error::from)?;
                writeln!(w).map_err(|e| io_error(&target, e))?;
            }
            Format::Csv => csv(&mut w)?,
        }
        w.flush().map_err(|e| io_error(&target, e))?;
        Ok(())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(paeback::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_rows(w: &mut dyn Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> paeback::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(header)?;
    for r in rows {
        c.write_record(r)?;
    }
    c.flush().map_err(|e| paeback::Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

fn dispatch(command: Command, out: &Output) -> CliResult<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Forecast(a) => cmd_forecast(a, out),
        Command::Curve(a) => cmd_curve(a, out),
        Command::Asym(a) => cmd_asym(a, out),
        Command::Tune(a) => cmd_tune(a, out),
        Command::Mc(a) => cmd_mc(a, out),
        Command::Fukuchi(a) => cmd_fukuchi(a, out),
    }
}

fn generator(a: &GeneratorArgs) -> CliResult<Generator> {
    match (&a.ar, a.tar1) {
        (_, true) => Ok(Generator::Tar1),
        (Some(phi), false) => {
            let model = ArModel::new(phi.clone(), a.sigma2, a.mean).or_else(|e| usage(e.to_string()))?;
            if !model.is_stationary() {
                return usage("--ar coefficients are not stationary");
            }
            Ok(Generator::Ar(model))
        }
        (None, false) => usage("choose a generator with --ar <coefficients> or --tar1"),
    }
}

fn load_input(a: &InputArgs) -> CliResult<TimeSeries> {
    let label = a.label_column.as_deref().map(ColumnRef::from);
    let series = load_csv(&a.input, &ColumnRef::from(a.column.as_str()), label.as_ref())?;
    Ok(if a.log_return { log_return(&series)? } else { series })
}

fn criterion(a: &CriterionArg) -> CliResult<Criterion> {
    a.criterion.parse().or_else(|e: paeback::Error| usage(e.to_string()))
}

fn tune_options(t: &TuningArgs) -> CliResult<TuneOptions> {
    if !(t.gamma > 0.0) {
        return usage("--gamma must be positive");
    }
    if t.lambda_points == 0 {
        return usage("--lambda-points must be at least 1");
    }
    if !(t.lambda_min_ratio > 0.0 && t.lambda_min_ratio < 1.0) {
        return usage("--lambda-min-ratio must lie in (0, 1)");
    }
    if let Some(l) = &t.lambdas {
        if l.is_empty() || l.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return usage("--lambdas must be non-negative finite values");
        }
    }
    if let Some(a) = &t.alphas {
        if a.is_empty() || a.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return usage("--alphas must lie in [0, 1]");
        }
    }
    let mut grid = TuningGrid {
        lambdas: t.lambdas.clone(),
        points: t.lambda_points,
        min_ratio: t.lambda_min_ratio,
        ..TuningGrid::default()
    };
    if let Some(a) = &t.alphas {
        grid.alphas = a.clone();
    }
    Ok(TuneOptions {
        grid,
        gamma: t.gamma,
        monotone_adjusted: !t.no_monotone,
        execution: Execution::Parallel,
    })
}

fn penalized(m: MethodArg) -> Option<Method> {
    match m {
        MethodArg::Yw => None,
        MethodArg::Al => Some(Method::Al),
        MethodArg::Ae => Some(Method::Ae),
        MethodArg::Ate => Some(Method::Ate),
    }
}

fn fit_method(a: &MethodArgs) -> CliResult<FitMethod> {
    match penalized(a.method) {
        None => match a.order {
            Some(order) => Ok(FitMethod::YuleWalker { order }),
            None => usage("--order is required with --method yw"),
        },
        Some(method) => {
            if a.max_order == 0 {
                return usage("--max-order must be at least 1");
            }
            Ok(FitMethod::Penalized {
                method,
                max_order: a.max_order,
                options: tune_options(&a.tuning)?,
            })
        }
    }
}

fn require_positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return usage(format!("--{name} must be at least 1"));
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, out: &Output) -> CliResult<()> {
    let gen = generator(&a.generator)?;
    require_positive("n", a.n)?;
    let seed = config::resolve_seed(a.seed.seed.as_deref())?;
    let spec = SimSpec {
        n: a.n,
        seed,
        burn_in: a.generator.burn_in,
        generator: gen,
    };
    let series = simulate(&spec)?;
    out.emit(&series.to_json_points(), |w| series.write_csv(w))
}

#[derive(Serialize)]
struct FitOutput {
    model: ArModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuning: Option<TuneResult>,
}

fn model_rows(m: &ArModel) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = m
        .phi
        .iter()
        .enumerate()
        .map(|(i, v)| vec![format!("phi_{}", i + 1), v.to_string()])
        .collect();
    rows.push(vec!["sigma2".into(), m.sigma2.to_string()]);
    rows.push(vec!["mean".into(), m.mean.to_string()]);
    rows
}

fn fit_series(series: &TimeSeries, method: &FitMethod) -> CliResult<FitOutput> {
    Ok(match method {
        FitMethod::YuleWalker { order } => FitOutput {
            model: yule_walker_fit(series, *order)?,
            tuning: None,
        },
        FitMethod::Penalized {
            method,
            max_order,
            options,
        } => {
            let t = tune_sw(series, *max_order, *method, options)?;
            FitOutput {
                model: t.model()?,
                tuning: Some(t),
            }
        }
    })
}

fn cmd_fit(a: FitArgs, out: &Output) -> CliResult<()> {
    let method = fit_method(&a.method)?;
    let series = load_input(&a.input)?;
    let fit = fit_series(&series, &method)?;
    out.emit(&fit, |w| csv_rows(w, &["name", "value"], model_rows(&fit.model)))
}

#[derive(Serialize)]
struct ForecastOutput {
    h: usize,
    model: ArModel,
    forecast: Vec<f64>,
}

fn read_model(path: &Path) -> CliResult<ArModel> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(paeback::Error::from)?;
    // accept both a bare model and the output of `fit`
    let inner = value.get("model").cloned().unwrap_or(value);
    let m: ArModel = serde_json::from_value(inner).map_err(paeback::Error::from)?;
    Ok(ArModel::new(m.phi, m.sigma2, m.mean)?)
}

fn cmd_forecast(a: ForecastArgs, out: &Output) -> CliResult<()> {
    require_positive("h", a.h)?;
    let method = match (&a.model, &a.phi) {
        (None, None) => Some(fit_method(&a.method)?),
        _ => None,
    };
    let series = load_input(&a.input)?;
    let model = match (&a.model, &a.phi, method) {
        (Some(path), _, _) => read_model(path)?,
        (None, Some(phi), _) => {
            ArModel::new(phi.clone(), 1.0, a.mean.unwrap_or_else(|| series.mean())).or_else(|e| usage(e.to_string()))?
        }
        (None, None, Some(m)) => fit_series(&series, &m)?.model,
        (None, None, None) => unreachable!(),
    };
    let f = forecast(&model, series.values(), a.h)?;
    let rows = f
        .iter()
        .enumerate()
        .map(|(i, v)| vec![(i + 1).to_string(), v.to_string()])
        .collect::<Vec<_>>();
    out.emit(
        &ForecastOutput {
            h: a.h,
            model,
            forecast: f.clone(),
        },
        |w| csv_rows(w, &["step", "forecast"], rows),
    )
}

#[derive(Serialize)]
struct CurveOutput {
    #[serde(flatten)]
    curve: EfficiencyCurve,
    k_opt: Option<usize>,
}

fn cmd_curve(a: CurveArgs, out: &Output) -> CliResult<()> {
    require_positive("n", a.n)?;
    require_positive("h", a.h)?;
    let method = fit_method(&a.method)?;
    let crit = criterion(&a.criterion)?;
    let series = load_input(&a.input)?;
    let grid = match a.k_grid {
        Some(g) => g,
        None => default_k_grid(a.n, method.min_k()),
    };
    if grid.is_empty() {
        return Err(CliError::Data(paeback::Error::InsufficientData(format!(
            "n = {} is below the smallest fittable development size {}",
            a.n,
            method.min_k()
        ))));
    }
    let curve = efficiency_curve(&series, a.n, a.h, &grid, &method, crit, Execution::Parallel)?;
    let k_opt = select_optimal_k(&curve);
    let output = CurveOutput { curve, k_opt };
    out.emit(&output, |w| output.curve.write_csv(w))
}

#[derive(Serialize)]
struct AsymOutput {
    #[serde(flatten)]
    report: AsymptoticReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_opt: Option<usize>,
}

fn cmd_asym(a: AsymArgs, out: &Output) -> CliResult<()> {
    require_positive("h", a.h)?;
    let irrelevancy = match (a.n, a.lambda) {
        (Some(n), Some(l)) => Some(IrrelevancySpec::from_lambda(l, n).or_else(|e| usage(e.to_string()))?),
        _ => None,
    };
    let report = match (&a.phi, &a.input) {
        (Some(phi), _) => {
            if phi.is_empty() {
                return usage("--phi needs at least one coefficient");
            }
            if !(a.sigma2 > 0.0) {
                return usage("--sigma2 must be positive");
            }
            ab_ratio(phi, a.sigma2, a.h)?
        }
        (None, Some(path)) => {
            let Some(order) = a.order else {
                return usage("--order is required with --input");
            };
            let series = load_csv(path, &ColumnRef::from(a.column.as_str()), None)?;
            estimate_ab_ratio(&series, order, a.h)?
        }
        (None, None) => return usage("give --phi or --input"),
    };
    let k_opt = match (a.n, irrelevancy) {
        (Some(n), Some(spec)) => Some(optimal_k(n, spec.lambda, &report)?),
        _ => None,
    };
    let rows: Vec<Vec<String>> = (0..a.h)
        .map(|j| {
            vec![
                (j + 1).to_string(),
                report.a1[j].to_string(),
                report.sigma_h2[j].to_string(),
                report.traces[j].to_string(),
            ]
        })
        .collect();
    let output = AsymOutput {
        report,
        n: a.n,
        lambda: irrelevancy.map(|s| s.lambda),
        epsilon_n: irrelevancy.map(|s| s.epsilon_n),
        k_opt,
    };
    out.emit(&output, |w| csv_rows(w, &["j", "a1", "sigma_j2", "trace"], rows))
}

fn cmd_tune(a: TuneArgs, out: &Output) -> CliResult<()> {
    let method = match a.method {
        PenalizedArg::Al => Method::Al,
        PenalizedArg::Ae => Method::Ae,
        PenalizedArg::Ate => Method::Ate,
    };
    require_positive("max-order", a.max_order)?;
    let options = tune_options(&a.tuning)?;
    let series = load_input(&a.input)?;
    let result = tune_sw(&series, a.max_order, method, &options)?;
    let rows: Vec<Vec<String>> = result
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, v)| vec![(i + 1).to_string(), v.to_string(), result.penalty.weights[i].to_string()])
        .collect();
    out.emit(&result, |w| csv_rows(w, &["lag", "coefficient", "weight"], rows))
}

fn k_grid_rule(spec: &str) -> CliResult<KGridRule> {
    let spec = spec.trim();
    Ok(match spec {
        "default" => KGridRule::Default,
        "full" => KGridRule::FullOnly,
        _ => {
            if let Some(rest) = spec.strip_prefix("f:") {
                let fs = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .or_else(|_| usage(format!("cannot parse fractions in --k-grid `{spec}`")))?;
                if fs.is_empty() || fs.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                    return usage("--k-grid fractions must lie in (0, 1]");
                }
                KGridRule::Fractions(fs)
            } else {
                let ks = spec
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .or_else(|_| usage(format!("--k-grid must be default, full, f:<fractions> or integers, got `{spec}`")))?;
                KGridRule::Explicit(ks)
            }
        }
    })
}

fn cmd_mc(a: McArgs, out: &Output) -> CliResult<()> {
    let gen = generator(&a.generator)?;
    let method = fit_method(&a.method)?;
    let crit = criterion(&a.criterion)?;
    require_positive("replicates", a.replicates)?;
    if a.n.iter().chain(&a.h).any(|&v| v == 0) {
        return usage("--n and --h values must be at least 1");
    }
    let rule = k_grid_rule(&a.k_grid)?;
    let seed = config::resolve_seed(a.seed.seed.as_deref())?;
    let mut cfg = StudyConfig::new(gen, a.n, a.h, a.replicates, method, seed);
    cfg.k_grid = rule;
    cfg.criterion = crit;
    cfg.burn_in = a.generator.burn_in;
    let summary = monte_carlo_study(&cfg, Execution::Parallel)?;
    out.emit(&summary, |w| summary.write_csv(w))
}

fn cmd_fukuchi(a: FukuchiArgs, out: &Output) -> CliResult<()> {
    require_positive("h", a.h)?;
    let method = fit_method(&a.method)?;
    let crit = criterion(&a.criterion)?;
    let series = load_input(&a.input)?;
    let grid = match a.k_grid {
        Some(g) => g,
        None => {
            let avail = series.len().saturating_sub(a.reserved + a.h);
            default_k_grid(avail, method.min_k())
        }
    };
    if grid.is_empty() {
        return Err(CliError::Data(paeback::Error::InsufficientData(
            "series too short for any window before the horizon".into(),
        )));
    }
    let result = fukuchi_baseline(&series, a.reserved, a.h, &grid, &method, crit, Execution::Parallel)?;
    let rows: Vec<Vec<String>> = result
        .risks
        .iter()
        .map(|r| vec![r.k.to_string(), r.mean_risk.to_string(), r.placements.to_string()])
        .collect();
    out.emit(&result, |w| csv_rows(w, &["k", "mean_risk", "placements"], rows))
}
