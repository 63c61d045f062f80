use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "tmach",
    version,
    about = "Fit and evaluate Tensor Machines and polynomial baselines",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a Tensor Machine and write the model and its fit report.
    Train(TrainArgs),
    /// Write one prediction per test row.
    Predict(EvalArgs),
    /// Print the test metric (relative error or error rate).
    Eval(EvalArgs),
    /// Grid search over lambda and alpha by k-fold cross-validation.
    Cv(CvArgs),
    /// Compare methods against kernel ridge regression.
    Bench(BenchArgs),
    /// Empirical Rademacher complexity estimates of the rank-one class.
    Rademacher(RademacherArgs),
    /// Generate a synthetic Tensor Machine regression task.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Svm,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Reg,
    Cls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Batch,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecayArg {
    Constant,
    InverseSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Homogeneous,
    Stratified,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Svm)]
    pub format: Format,
    /// CSV label column: first, last, -1 or a 0-based index.
    #[arg(
        long = "label-col",
        default_value = "first",
        allow_hyphen_values = true
    )]
    pub label_col: String,
    #[arg(long, value_enum, default_value_t = TaskArg::Reg)]
    pub task: TaskArg,
    /// Use features as given instead of normalizing columns and rows.
    #[arg(long)]
    pub no_preprocess: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Batch)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 1e-5)]
    pub lambda: f64,
    /// Standard deviation of the random initial parameters.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stochastic solver epochs.
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Batch solver iteration cap.
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    /// Mini-batches per epoch (default ⌈√n⌉).
    #[arg(long)]
    pub minibatches: Option<usize>,
    /// Stochastic base step size.
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = DecayArg::Constant)]
    pub decay: DecayArg,
    /// Plain mini-batch gradient steps without per-coordinate scaling.
    #[arg(long)]
    pub no_adaptive: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report CSV (default: `<out>.report.csv`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optional CSV with per-iteration timings.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Key=value settings file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-6, 1e-5, 1e-4, 1e-3])]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.5, 1.0])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Comma-separated subset of tm-batch, tm-stochastic, kk, craftmaps, krr, fm2.
    #[arg(long, value_delimiter = ',', default_value = "krr,tm-batch")]
    pub methods: Vec<String>,
    #[arg(long = "krr-cap", default_value_t = crate::baselines::DEFAULT_KRR_CAP)]
    pub krr_cap: usize,
    /// Ridge parameter for kernel ridge regression and random-feature ridge.
    #[arg(long, default_value_t = 1e-6)]
    pub ridge_lambda: f64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Stratified)]
    pub kk_policy: PolicyArg,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    /// Bound on the doubling sweep of each method's major parameter.
    #[arg(long, default_value_t = 6)]
    pub max_sweeps: usize,
    /// Benchmark on a generated task instead of --data/--test.
    #[arg(long)]
    pub synth: bool,
    #[arg(long, default_value_t = 20)]
    pub synth_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub synth_rank: usize,
    #[arg(long, default_value_t = 5000)]
    pub synth_train: usize,
    #[arg(long, default_value_t = 1000)]
    pub synth_test: usize,
    #[arg(long, default_value_t = 0.0)]
    pub synth_noise: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RademacherArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of Gaussian points when no --data is given.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Factor norm cap B.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Rank of the ground-truth model.
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 5000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.train.svm`, `<out>.test.svm` and
    /// `<out>.truth.tm`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
