//! Command-line surface: subcommands, flags, and shared flag groups.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// Exact-arithmetic toolkit for the sum S_M(α) = Σ_{m=1}^{M} 1/‖mα‖, where
/// ‖x‖ is the distance from x to the nearest integer.
///
/// Every numeric result is either exact or a correctly-rounded decimal
/// approximation of an exact rational enclosure; approximate columns are
/// flagged in the output header. Reruns with identical flags are
/// byte-identical. Set MALPHA_THREADS to pin the worker-thread count.
#[derive(Parser)]
#[command(name = "malpha", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Print partial quotients a_k and convergents p_k/q_k as a table.
    Expand(ExpandArgs),
    /// Enclose S_M(α) — or a weighted/powered variant — at one M or over a grid.
    Sum(SumArgs),
    /// Compare S_M against its reference caps M·ln q_k and M·ln q_k + a_{k+1}·M.
    Bounds(BoundsArgs),
    /// Seeded Monte Carlo ensembles and analytic identities.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

/// Exactly one way to choose α.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct AlphaArgs {
    /// Rational α = NUM/DEN, taken mod 1. Finite expansion; sums are
    /// undefined once m·DEN hits an integer.
    #[arg(long, value_name = "NUM/DEN")]
    pub rational: Option<String>,
    /// Quadratic irrational (P + √D)/Q, e.g. 5,-1,2 for the golden ratio
    /// fractional part (√5 − 1)/2.
    #[arg(long, value_name = "D,P,Q")]
    pub surd: Option<String>,
    /// Quotient rule: pow2 | qksquare | expqk,CAP | explicit,a1,a2,...
    #[arg(long, value_name = "RULE")]
    pub rule: Option<String>,
    /// Uniform dyadic sample n/2^BITS from a seeded stream, as SEED,BITS.
    #[arg(long, value_name = "SEED,BITS")]
    pub random: Option<String>,
}

/// Output routing shared by every subcommand.
#[derive(Args)]
pub struct OutArgs {
    /// Output format. Tables default to csv, experiments to json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub alpha: AlphaArgs,
    /// Expansion depth K: rows k = 0..=K. Optional for rational α, whose
    /// finite expansion is then printed in full.
    #[arg(long, value_name = "K")]
    pub depth: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct SumArgs {
    #[command(flatten)]
    pub alpha: AlphaArgs,
    /// Upper limit M. With --grid q, the largest denominator to include.
    #[arg(long = "M", value_name = "M")]
    pub m: Option<u64>,
    /// Comma list of M values, or "q" for every convergent denominator ≤ M.
    #[arg(long, value_name = "LIST|q")]
    pub grid: Option<String>,
    /// Relative width target for each enclosure, as a rational like 1/1048576.
    #[arg(long = "rel-tol", value_name = "TOL")]
    pub rel_tol: Option<String>,
    /// Sum 1/‖mα‖^β instead, for rational β (e.g. 2 or 3/2).
    #[arg(long, value_name = "BETA", conflicts_with_all = ["weighted", "cesaro"])]
    pub beta: Option<String>,
    /// Sum 1/(m·‖mα‖) instead.
    #[arg(long, conflicts_with = "cesaro")]
    pub weighted: bool,
    /// Print the Cesàro means (1/n)·S_n for n = 1..=N instead.
    #[arg(long, value_name = "N")]
    pub cesaro: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub alpha: AlphaArgs,
    /// Upper limit M. With --grid q, the largest denominator to include.
    #[arg(long = "M", value_name = "M")]
    pub m: Option<u64>,
    /// Comma list of M values, or "q" for every convergent denominator ≤ M.
    #[arg(long, value_name = "LIST|q")]
    pub grid: Option<String>,
    /// Relative width target for the S_M enclosures.
    #[arg(long = "rel-tol", value_name = "TOL")]
    pub rel_tol: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Subcommand)]
pub enum ExperimentCmd {
    /// Ensemble of (1/k)·ln q_k over random α; the almost-sure limit is
    /// π²/(12 ln 2) ≈ 1.1866.
    Levy(EnsembleArgs),
    /// Ensemble of (1/k)·Σ_{i≤k} ln a_i over random α; the almost-sure limit
    /// is ln K₀ ≈ 0.9878 (K₀ = Khinchin's constant).
    Birkhoff(EnsembleArgs),
    /// Count quotient exceedances a_k > φ(k) over random α. The fraction of
    /// samples with an exceedance in the window [K/2, K] separates
    /// convergent from divergent Σ 1/φ(k).
    Khinchin(KhinchinArgs),
    /// Running max of R(M) = S_M/(M ln M · φ(ln M)) over an M-grid merged
    /// with every convergent denominator in range.
    Growth(GrowthArgs),
    /// Gauss-measure identity: the summed preimage mass of [a,b] under the
    /// quotient map against μ([a,b]), with the truncation gap.
    Invariance(InvarianceArgs),
    /// Enclose ln K₀ (log of Khinchin's constant) from its series.
    Constant(ConstantArgs),
}

#[derive(Args)]
pub struct EnsembleArgs {
    /// Expansion depth per sample.
    #[arg(long = "K", value_name = "K")]
    pub k: usize,
    /// Ensemble size.
    #[arg(long = "N", value_name = "N")]
    pub n: u64,
    /// Master seed; per-sample seeds derive from it deterministically.
    #[arg(long)]
    pub seed: u64,
    /// Random bits per sampled α (default: sized to the requested depth).
    #[arg(long)]
    pub bits: Option<u32>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct KhinchinArgs {
    /// Threshold family φ: 1 | logk | log2k | k*log2k | k^N[/D] | a rational.
    #[arg(long)]
    pub phi: String,
    #[command(flatten)]
    pub ens: EnsembleArgs,
}

#[derive(Args)]
pub struct GrowthArgs {
    /// Normalizer family φ, applied to ln M: 1 | logk | log2k | ...
    #[arg(long)]
    pub phi: String,
    /// Strictly increasing M values, comma separated; every convergent
    /// denominator ≤ the maximum is merged in automatically.
    #[arg(long, value_name = "LIST")]
    pub grid: String,
    /// Ensemble size.
    #[arg(long = "N", value_name = "N")]
    pub n: u64,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
    /// Random bits per sampled α.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Relative width target for each S_M enclosure.
    #[arg(long = "rel-tol", value_name = "TOL")]
    pub rel_tol: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct InvarianceArgs {
    /// Left endpoint a, a rational in [0, 1].
    #[arg(long)]
    pub a: String,
    /// Right endpoint b, a rational in [a, 1].
    #[arg(long)]
    pub b: String,
    /// Number of preimage branches to sum (one checkpoint row).
    #[arg(long, value_name = "N")]
    pub terms: Option<u64>,
    /// Checkpoint rows: strictly increasing branch counts, comma separated.
    #[arg(long, value_name = "LIST", conflicts_with = "terms")]
    pub checkpoints: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct ConstantArgs {
    /// Series terms; the remainder is enclosed rigorously.
    #[arg(long, value_name = "N")]
    pub terms: u64,
    /// Target precision in bits (8..=192).
    #[arg(long, value_name = "BITS")]
    pub prec: u32,
    #[command(flatten)]
    pub out: OutArgs,
}
