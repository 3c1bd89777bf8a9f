//! Command options. Each block parses from flags and from a config file
//! with the same defaults, so an echoed config re-runs as-is.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pulseforge::search::Target;
use pulseforge::sim::Basis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qubit,
    Qutrit,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::Qubit => 2,
            ModelKind::Qutrit => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingRule {
    Dantzig,
    Bland,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_beta_min() -> f64 {
    1.0 / 6.0
}
fn default_weight_cap() -> u32 {
    4
}
fn default_node_limit() -> usize {
    1_000_000
}
fn default_spins() -> usize {
    2
}
fn default_tau() -> f64 {
    1.0
}
fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    10_000
}
fn default_cycles() -> usize {
    256
}
fn default_field() -> f64 {
    2.0 * PI
}
fn default_gamma() -> f64 {
    2.0 * PI * 1e-2
}
fn default_fid() -> PathBuf {
    "fid.csv".into()
}
fn default_spec() -> PathBuf {
    "spec.csv".into()
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = Target::DecoupleKeepZeeman)]
    #[serde(default = "keep_zeeman")]
    pub target: Target,
    /// Weight of the nonzero-count term.
    #[arg(long, default_value_t = default_alpha())]
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Minimum Zeeman strength per unit total weight.
    #[arg(long, default_value_t = default_beta_min())]
    #[serde(default = "default_beta_min")]
    pub beta_min: f64,
    #[arg(long, default_value_t = default_weight_cap())]
    #[serde(default = "default_weight_cap")]
    pub weight_cap: u32,
    #[arg(long, default_value_t = default_node_limit())]
    #[serde(default = "default_node_limit")]
    pub node_limit: usize,
    /// Skip the sign-flipped-pair starting point for zero-Zeeman searches.
    #[arg(long)]
    #[serde(default)]
    pub no_paired_start: bool,
    /// Also write the assembled integer program as JSON.
    #[arg(long)]
    #[serde(default)]
    pub dump_problem: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn keep_zeeman() -> Target {
    Target::DecoupleKeepZeeman
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Sequence name or JSON sequence file.
    pub sequence: String,
    #[arg(long, default_value_t = default_spins())]
    #[serde(default = "default_spins")]
    pub spins: usize,
    /// Coupling between every pair of spins.
    #[arg(long, default_value_t = one())]
    #[serde(default = "one")]
    pub coupling: f64,
    /// γB_z of the model.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub field: f64,
    /// Base interval for the first-order term.
    #[arg(long, default_value_t = default_tau())]
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Sequence name, JSON sequence file, or `free` for no pulses.
    #[arg(long)]
    pub sequence: String,
    /// Defaults to `qubit` for d = 2 and `sq` for d = 3.
    #[arg(long)]
    #[serde(default)]
    pub basis: Option<Basis>,
    #[arg(long, default_value_t = default_spins())]
    #[serde(default = "default_spins")]
    pub spins: usize,
    #[arg(long, default_value_t = default_samples())]
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[arg(long, default_value_t = default_cycles())]
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    /// Base interval; defaults to twenty points per engineered fringe.
    #[arg(long)]
    #[serde(default)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// γB_z.
    #[arg(long, default_value_t = default_field())]
    #[serde(default = "default_field")]
    pub field: f64,
    /// Scale Γ of the coupling distribution.
    #[arg(long, default_value_t = default_gamma())]
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Use this coupling for every pair instead of sampling.
    #[arg(long)]
    #[serde(default)]
    pub fixed_coupling: Option<f64>,
    #[arg(long, default_value = "fid.csv")]
    #[serde(default = "default_fid")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// CSV with `time,signal` columns on a uniform grid.
    pub input: PathBuf,
    /// Reference angular frequency ω_0 for the frequency axis.
    #[arg(long, default_value_t = default_field())]
    #[serde(default = "default_field")]
    pub omega0: f64,
    #[arg(long, default_value = "spec.csv")]
    #[serde(default = "default_spec")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequencesCommand {
    /// Built-in sequences with their expected figures of merit.
    List,
    /// Write a built-in sequence as a JSON sequence file.
    Export {
        name: String,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Integer program as JSON (the `--dump-problem` format).
    pub problem: PathBuf,
    #[arg(long, default_value_t = default_node_limit())]
    #[serde(default = "default_node_limit")]
    pub node_limit: usize,
    #[arg(long, value_enum, default_value_t = PricingRule::Dantzig)]
    #[serde(default = "dantzig")]
    pub pricing: PricingRule,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn dantzig() -> PricingRule {
    PricingRule::Dantzig
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverArgs {
    /// Zero-Zeeman sequence name or JSON sequence file.
    pub sequence: String,
    /// Preferred rotation word, e.g. `(V0W2)_1(V4W1)_2(V1W1)_3`.
    #[arg(long)]
    #[serde(default)]
    pub rotation: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Find a pulse sequence with the integer program.
    Search(SearchArgs),
    /// Average-Hamiltonian report for a sequence.
    Verify(VerifyArgs),
    /// Ensemble Ramsey trace as CSV.
    Simulate(SimulateArgs),
    /// Magnitude spectrum of a trace CSV.
    Spectrum(SpectrumArgs),
    /// Built-in sequences.
    #[command(subcommand)]
    Sequences(SequencesCommand),
    /// Pruned Clifford dictionary as JSON.
    Dictionary(DictionaryArgs),
    /// Solve an integer program file.
    Solve(SolveArgs),
    /// Clean-Zeeman recovery from a zero-Zeeman sequence.
    Recover(RecoverArgs),
    /// Run a command described by a TOML or JSON config file.
    #[serde(skip)]
    Run { config: PathBuf },
}

/// A single command plus the global options, as echoed in every JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub threads: Option<usize>,
    pub command: Command,
}
