use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "qgfisher", version, about = "Information measures, inequalities and variational checks for q-Gaussians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the information measures of a density
    Measures(MeasuresArgs),
    /// Evaluate the Fisher-moment-entropy, moment-entropy, Stam and Cramer-Rao inequalities
    Verify(VerifyArgs),
    /// Tabulate measures and inequality deficits over a parameter grid
    Sweep(SweepArgs),
    /// Draw samples from a q-Gaussian
    Sample(SampleArgs),
    /// Solve the constrained Fisher-information minimization
    Minimize(MinimizeArgs),
}

#[derive(Args, Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ParamArgs {
    /// Dimension
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Moment order alpha (beta is its Hoelder conjugate)
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Entropic index
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q: f64,
    /// Scale parameter of the q-Gaussian
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureMethod {
    Closed,
    Quadrature,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMethod {
    /// closed forms for a q-Gaussian density, quadrature otherwise
    Auto,
    Quadrature,
}

#[derive(Args, Debug, Clone)]
pub struct MeasuresArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = MeasureMethod::Closed)]
    pub method: MeasureMethod,
    /// qgaussian | mixture:w,0,s;... | uniform-ball[:R] | tapered-exp[:rate,R] | profile:<file>
    #[arg(long, default_value = "qgaussian")]
    pub density: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// qgaussian | mixture:w,0,s;... | uniform-ball[:R] | tapered-exp[:rate,R] | profile:<file>
    #[arg(long, default_value = "qgaussian")]
    pub density: String,
    /// Run all four inequalities, skipping those that do not apply to the density
    #[arg(long)]
    pub all: bool,
    /// fisher-moment-entropy | moment-entropy | stam | cramer-rao (repeatable)
    #[arg(long = "ineq")]
    pub ineq: Vec<String>,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eq_tol: f64,
    #[arg(long, value_enum, default_value_t = CheckMethod::Auto)]
    pub method: CheckMethod,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// name=start:stop:step or name=v1,v2,... over n, alpha, q or gamma (repeatable)
    #[arg(long = "grid")]
    pub grid: Vec<String>,
    #[arg(long, value_enum, default_value_t = CheckMethod::Quadrature)]
    pub method: CheckMethod,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eq_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Flat,
    Exponential,
    QgaussianDetuned,
}

#[derive(Args, Debug, Clone)]
pub struct MinimizeArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q: f64,
    /// Prescribed moment m_alpha
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub moment: f64,
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Exponential)]
    pub init: InitArg,
    #[command(flatten)]
    pub output: OutputArgs,
}
