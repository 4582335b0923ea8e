use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "paeback",
    version,
    about = "Backsubsampling experiments for AR forecasting",
    args_override_self = true
)]
pub struct Cli {
    /// JSON object of flag defaults; explicit flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Worker threads for parallel loops (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an AR(p) or threshold AR(1) path.
    Simulate(SimulateArgs),
    /// Fit an AR model by Yule-Walker or penalized selection.
    Fit(FitArgs),
    /// Forecast h steps ahead from the end of a series.
    Forecast(ForecastArgs),
    /// Dual-efficiency curve over development sizes.
    Curve(CurveArgs),
    /// Asymptotic A/B ratio and optimal development size.
    Asym(AsymArgs),
    /// Sliding-window tuning of a penalized AR fit.
    Tune(TuneArgs),
    /// Monte Carlo study of efficiency curves.
    Mc(McArgs),
    /// Overlapping-window subsampling baseline.
    Fukuchi(FukuchiArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Seed (unsigned integer) or `auto`; falls back to PAEBACK_SEED.
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// AR coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "tar1")]
    pub ar: Option<Vec<f64>>,

    /// Innovation variance of the AR generator.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Process mean of the AR generator.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mean: f64,

    /// Two-regime threshold AR(1) generator.
    #[arg(long)]
    pub tar1: bool,

    /// Discarded warm-up values.
    #[arg(long, default_value_t = paeback::ar::DEFAULT_BURN_IN)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Retained length.
    #[arg(long)]
    pub n: usize,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, short, value_name = "PATH")]
    pub input: PathBuf,

    /// Value column: header name or zero-based index.
    #[arg(long, default_value = "value")]
    pub column: String,

    /// Optional label column.
    #[arg(long)]
    pub label_column: Option<String>,

    /// Convert prices to log returns before use.
    #[arg(long)]
    pub log_return: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Yw,
    Al,
    Ae,
    Ate,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Estimator: Yule-Walker at --order, or a penalized family up to --max-order.
    #[arg(long, value_enum, default_value_t = MethodArg::Yw)]
    pub method: MethodArg,

    /// Yule-Walker order.
    #[arg(long)]
    pub order: Option<usize>,

    /// Largest lag for penalized methods.
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Explicit penalty grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,

    /// Points in the automatic penalty grid.
    #[arg(long, default_value_t = 50)]
    pub lambda_points: usize,

    /// Smallest automatic penalty as a fraction of the largest.
    #[arg(long, default_value_t = 1e-4)]
    pub lambda_min_ratio: f64,

    /// Mixing grid for `ate` (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,

    /// Adaptive weight exponent.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Use raw initial magnitudes instead of the non-increasing adjustment.
    #[arg(long)]
    pub no_monotone: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub method: MethodArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Model JSON (as written by `fit`); otherwise fit with the method flags.
    #[arg(long, value_name = "PATH", conflicts_with = "phi")]
    pub model: Option<PathBuf>,

    /// Known AR coefficients instead of a fitted model.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phi: Option<Vec<f64>>,

    /// Mean used with --phi (default: series mean).
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,

    /// Forecast horizon.
    #[arg(long)]
    pub h: usize,

    #[command(flatten)]
    pub method: MethodArgs,
}

#[derive(Debug, Args)]
pub struct CriterionArg {
    /// Forecast error criterion: mse, mae, mape, rmse, smape.
    #[arg(long, default_value = "mse")]
    pub criterion: String,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// History length; the next h values are the validation set.
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub h: usize,

    /// Development sizes (comma separated); default grid when omitted.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,

    #[command(flatten)]
    pub method: MethodArgs,

    #[command(flatten)]
    pub criterion: CriterionArg,
}

#[derive(Debug, Args)]
pub struct AsymArgs {
    /// Known AR coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "input")]
    pub phi: Option<Vec<f64>>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Estimate the ratio from a series instead (needs --order).
    #[arg(long, short, value_name = "PATH", conflicts_with = "phi")]
    pub input: Option<PathBuf>,

    #[arg(long, default_value = "value")]
    pub column: String,

    #[arg(long)]
    pub order: Option<usize>,

    #[arg(long)]
    pub h: usize,

    /// History length for the optimal development size.
    #[arg(long, requires = "lambda")]
    pub n: Option<usize>,

    /// Scaled irrelevancy tolerance n * epsilon.
    #[arg(long, requires = "n")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Penalized family.
    #[arg(long, value_enum, default_value_t = PenalizedArg::Ate)]
    pub method: PenalizedArg,

    #[arg(long, default_value_t = 10)]
    pub max_order: usize,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PenalizedArg {
    Al,
    Ae,
    Ate,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// History lengths (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    /// Horizons (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub h: Vec<usize>,

    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,

    /// Development sizes: `default`, `full`, a list `k1,k2,..`, or
    /// fractions `f:0.3,0.6`.
    #[arg(long, default_value = "default")]
    pub k_grid: String,

    #[command(flatten)]
    pub method: MethodArgs,

    #[command(flatten)]
    pub criterion: CriterionArg,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct FukuchiArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long)]
    pub h: usize,

    /// Trailing values held out and never used.
    #[arg(long, default_value_t = 0)]
    pub reserved: usize,

    /// Window sizes (comma separated); default grid when omitted.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,

    #[command(flatten)]
    pub method: MethodArgs,

    #[command(flatten)]
    pub criterion: CriterionArg,
}
