//! Command-line surface. Every subcommand's arguments serialize into the
//! metadata JSON so that `replay` can rerun it exactly.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "metriq", about = "Coherent-state quantization and phase-space path-integral experiments")]
pub struct Cli {
    /// Standard output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Worker threads for the parallel kernels; never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for `<command>.csv`, `<command>.json` and plot files.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Quadrature check of the coherent-state resolution of unity.
    CheckUnity(CheckUnity),
    /// Weyl multiplication law over random label pairs.
    ComposeCheck(ComposeCheck),
    /// Closed-form antinormal quantization against the quadrature oracle.
    QuantizeCompare(QuantizeCompare),
    /// Lowest eigenvalues of a quantized symbol.
    Spectrum(Spectrum),
    /// Fluctuation metric of a fiducial vector, optionally in mapped coordinates.
    Metric(Metric),
    /// Classical trajectory of a symbol.
    Flow(Flow),
    /// Boundary-value classification by shooting.
    BvpDemo(BvpDemo),
    /// Truncated-space propagator between coherent states.
    PropagateExact(PropagateExact),
    /// Monte Carlo estimate of the regularized path integral.
    PropagateMc(PropagateMc),
    /// Monte Carlo estimates across regularization strengths.
    NuSweep(NuSweep),
    /// Same bridges evaluated in original and linearly mapped coordinates.
    TransformCheck(TransformCheck),
    /// Rerun the configuration echoed in a metadata JSON file.
    #[serde(skip)]
    Replay(Replay),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckUnity(_) => "check-unity",
            Command::ComposeCheck(_) => "compose-check",
            Command::QuantizeCompare(_) => "quantize-compare",
            Command::Spectrum(_) => "spectrum",
            Command::Metric(_) => "metric",
            Command::Flow(_) => "flow",
            Command::BvpDemo(_) => "bvp-demo",
            Command::PropagateExact(_) => "propagate-exact",
            Command::PropagateMc(_) => "propagate-mc",
            Command::NuSweep(_) => "nu-sweep",
            Command::TransformCheck(_) => "transform-check",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Space {
    /// Fock-space cutoff.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckUnity {
    #[command(flatten)]
    pub space: Space,
    /// Half-width of the square integration domain.
    #[arg(long, default_value_t = 12.0)]
    pub radius: f64,
    /// Midpoint nodes per axis.
    #[arg(long, default_value_t = 240)]
    pub nodes: usize,
    /// Checked Fock levels (default dim/2).
    #[arg(long)]
    pub levels: Option<usize>,
    /// `vacuum`, `fock:N` or `amps:a0,a1,...` (real amplitudes, normalized).
    #[arg(long, default_value = "vacuum")]
    pub fiducial: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingArg {
    /// `e^{−iqP/ħ} e^{ipQ/ħ}`.
    Ordered,
    /// `e^{i(pQ − qP)/ħ}`.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ComposeCheck {
    #[command(flatten)]
    pub space: Space,
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Labels are drawn uniformly from `[−max, max]²`.
    #[arg(long, default_value_t = 2.0)]
    pub max_label: f64,
    #[arg(long, env = "METRIQ_SEED")]
    pub seed: u64,
    /// Operator ordering of the displacements.
    #[arg(long, value_enum, default_value_t = OrderingArg::Ordered)]
    pub ordering: OrderingArg,
    /// Phase attached to the composite displacement.
    #[arg(long, value_enum, default_value_t = OrderingArg::Symmetric)]
    pub phase: OrderingArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QuantizeCompare {
    #[command(flatten)]
    pub space: Space,
    /// Polynomial symbol, e.g. `0.5*p^2 + 0.5*q^2`.
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    #[arg(long, default_value_t = 14.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 280)]
    pub nodes: usize,
    /// Compared Fock levels (default dim/4).
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Spectrum {
    #[command(flatten)]
    pub space: Space,
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    /// Number of eigenvalues reported.
    #[arg(long, default_value_t = 16)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Metric {
    #[command(flatten)]
    pub space: Space,
    #[arg(long, default_value = "vacuum")]
    pub fiducial: String,
    /// Label `p,q` at which the metric is evaluated.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub at: String,
    /// `identity`, `rotation:θ`, `scaling:λ` or `matrix:a,b,c,d`.
    #[arg(long, default_value = "identity", allow_hyphen_values = true)]
    pub map: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Flow {
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    /// Initial point `p,q`.
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub duration: f64,
    #[arg(long, default_value_t = 1024)]
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BvpDemo {
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: f64,
    #[arg(long = "qT", allow_hyphen_values = true)]
    pub q_t: f64,
    #[arg(long = "T")]
    pub duration: f64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub pmin: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub pmax: f64,
    /// Scanned initial momenta.
    #[arg(long, default_value_t = 2001)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PropagateExact {
    #[command(flatten)]
    pub space: Space,
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Stratonovich,
    Ito,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Mc {
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    #[arg(long = "T")]
    pub duration: f64,
    /// Time steps per bridge.
    #[arg(long, default_value_t = 512)]
    pub steps: usize,
    #[arg(long)]
    pub samples: u64,
    #[arg(long, env = "METRIQ_SEED")]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Stratonovich)]
    pub rule: RuleArg,
    /// Largest admissible νT/(2ħ).
    #[arg(long, default_value_t = metriq::wiener::DEFAULT_GUARD)]
    pub guard: f64,
    /// Run even when the guard trips.
    #[arg(long)]
    pub override_guard: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PropagateMc {
    #[command(flatten)]
    pub mc: Mc,
    #[arg(long)]
    pub nu: f64,
    /// Also compute the truncated-space propagator at this cutoff and
    /// report z-scores against it.
    #[arg(long)]
    pub compare_exact: Option<usize>,
    /// Write bridge 0 to this file in the WMCB binary layout.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NuSweep {
    #[command(flatten)]
    pub mc: Mc,
    /// Comma-separated ν values.
    #[arg(long)]
    pub nus: String,
    /// Reference value: `exact:DIM` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub oracle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TransformCheck {
    #[command(flatten)]
    pub mc: Mc,
    #[arg(long)]
    pub nu: f64,
    /// `identity`, `rotation:θ`, `scaling:λ` or `matrix:a,b,c,d`.
    #[arg(long, allow_hyphen_values = true)]
    pub map: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Replay {
    /// Metadata JSON written by an earlier run.
    pub file: PathBuf,
}
