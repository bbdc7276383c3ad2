//! Command-line surface: one subcommand per pipeline stage plus the
//! end-to-end driver, the verifier, and the trace analyzer.

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "hgmatch",
    version,
    about = "Matchings in hypergraphs avoiding prescribed configurations",
    long_about = "Builds block-design and lifted instances, sparsifies away short \
                  configuration cycles, grows an avoiding matching by iterated random \
                  rounds, completes bipartite remainders by local resampling, and \
                  re-checks every artifact with independent verifiers.\n\n\
                  Exit codes: 0 success, 1 verification failure, 2 usage or \
                  configuration error, 3 stage failure.",
    propagate_version = true
)]
pub struct Cli {
    /// Size of the worker thread pool (default: one per core). Results do not
    /// depend on this; randomness is counter-based.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the auxiliary instance over all q-subsets of an n-point set.
    BuildSteiner(BuildArgs),
    /// Build the auxiliary instance over transversal blocks of a q x n grid.
    BuildPartite(BuildArgs),
    /// Lift an edge-colored hypergraph so matchings become rainbow matchings.
    BuildRainbow(RainbowArgs),
    /// Lift a bipartite instance so one matching decodes to m edge-disjoint ones.
    LiftDisjoint(LiftDisjointArgs),
    /// Lift a list-edge-coloring problem to a single bipartite matching problem.
    LiftList(LiftListArgs),
    /// Pad a bipartite instance until every B-side degree is exactly d_b.
    Regularize(RegularizeArgs),
    /// Delete a random edge subset to destroy all short configuration cycles.
    Sparsify(SparsifyArgs),
    /// Grow an avoiding matching by iterated random rounds.
    Nibble(NibbleArgs),
    /// Complete an A-perfect avoiding matching by local resampling.
    Finish(FinishArgs),
    /// Run sparsify, nibble, optional finish, and verification end to end.
    Pipeline(PipelineArgs),
    /// Re-check produced artifacts with independent implementations.
    Verify(VerifyArgs),
    /// Compare a recorded trace against its per-round predictions.
    Diagnose(DiagnoseArgs),
}

/// Shared shape of the two block-design builders.
#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Number of points.
    #[arg(long)]
    pub n: u32,
    /// Block size (2 <= r < q, and q < n for the plain builder).
    #[arg(long)]
    pub q: u32,
    /// Covered subset size.
    #[arg(long)]
    pub r: u32,
    /// Forbid configurations of size up to this bound (>= 2).
    #[arg(long, default_value_t = 4)]
    pub g: u32,
    /// Abort if the configuration search would return more than this many.
    #[arg(long)]
    pub max_configs: Option<u64>,
    /// Abort if the configuration search would take more than this many steps.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Output directory (created if missing).
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RainbowArgs {
    /// Ground hypergraph (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Total edge coloring (JSON: {"colors": [...]}; color count defaults to
    /// one past the largest color).
    #[arg(long)]
    pub coloring: PathBuf,
    /// Optional configuration hypergraph to re-ground on the lift (JSON).
    #[arg(long)]
    pub configs: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LiftDisjointArgs {
    /// Bipartite base hypergraph (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Configurations of the base (JSON: {"configs": [...]}).
    #[arg(long)]
    pub configs: PathBuf,
    /// Number of pairwise edge-disjoint matchings wanted.
    #[arg(long)]
    pub m: u32,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LiftListArgs {
    /// Base hypergraph (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Configurations of the base (JSON: {"configs": [...]}).
    #[arg(long)]
    pub configs: PathBuf,
    /// Per-edge color lists (JSON: {"lists": [[...], ...]}; color count
    /// defaults to one past the largest listed color).
    #[arg(long)]
    pub lists: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RegularizeArgs {
    /// Bipartite hypergraph whose A-side is d_a-regular (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Common A-side degree of the input.
    #[arg(long)]
    pub da: u32,
    /// Target B-side degree (at least the current maximum).
    #[arg(long)]
    pub db: u32,
    /// Abort if the padded graph would exceed this many edges.
    #[arg(long)]
    pub max_edges: Option<u64>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExtentArg {
    /// Delete one member edge per detected configuration.
    Members,
    /// Also delete the edges linking consecutive members of short cycles.
    Links,
}

#[derive(Args, Debug)]
pub struct SparsifyArgs {
    /// Ground hypergraph (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Configurations over the ground edges (JSON: {"configs": [...]}).
    #[arg(long)]
    pub configs: PathBuf,
    /// Degree scale D (default: measured mean degree, floored at 1).
    #[arg(long)]
    pub d: Option<f64>,
    /// Sampling exponent: each edge survives independently with p = D^(beta-1).
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Destroy configuration cycles of length up to this bound.
    #[arg(long, default_value_t = 4)]
    pub g: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// What to delete around each detected cycle.
    #[arg(long, value_enum, default_value_t = ExtentArg::Members)]
    pub extent: ExtentArg,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Maximize global size; any hypergraph.
    Plain,
    /// Target A-perfection on a bipartite instance.
    Bipartite,
}

#[derive(Args, Debug)]
pub struct NibbleArgs {
    /// Ground hypergraph (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Configurations over the ground edges (JSON: {"configs": [...]}).
    #[arg(long)]
    pub configs: PathBuf,
    /// Schedule derivation spec (JSON or TOML). Omitted: parameters are
    /// measured from the instance instead.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Round mode when no schedule file is given.
    #[arg(long, value_enum, default_value_t = ModeArg::Plain)]
    pub mode: ModeArg,
    /// Number of rounds (overrides the schedule file).
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Per-round bite size in (0, 1] (overrides the schedule file).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Weighted-degree bound fed to the equalizing flips (override).
    #[arg(long)]
    pub w0: Option<f64>,
    /// Degree-regularity slack (override).
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Side-A degree scale for bipartite rounds (override).
    #[arg(long)]
    pub da0: Option<f64>,
    /// Clamp derived degree scales below 2 instead of rejecting them.
    #[arg(long, action = ArgAction::Set)]
    pub floor_degree: Option<bool>,
    /// Complete bipartite remainders by local resampling.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub finish: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FinishArgs {
    /// Bipartite hypergraph (JSON); every A-vertex needs an incident edge.
    #[arg(long)]
    pub graph: PathBuf,
    /// Configurations over the ground edges (JSON: {"configs": [...]}).
    #[arg(long)]
    pub configs: PathBuf,
    /// Resampling budget (default: 1000 * (|A| + configurations)).
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Pipeline configuration file (TOML or JSON). Flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance family to build: steiner or partite.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub r: Option<u32>,
    /// Explicit instance instead of a built one: ground hypergraph (JSON).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Explicit instance: configurations (JSON).
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Forbid configurations of size up to this bound.
    #[arg(long)]
    pub g: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sparsification exponent in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Recorded alongside beta for bipartite instances.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Round mode (default: bipartite for partite instances, else plain).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Degree scale override for sparsify and the round parameters.
    #[arg(long)]
    pub d: Option<f64>,
    /// Run the sparsification stage.
    #[arg(long, action = ArgAction::Set)]
    pub sparsify: Option<bool>,
    #[arg(long, value_enum)]
    pub extent: Option<ExtentArg>,
    #[arg(long)]
    pub rounds: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub da0: Option<f64>,
    /// Complete bipartite remainders by local resampling.
    #[arg(long, action = ArgAction::Set)]
    pub finish: Option<bool>,
    /// Re-check all outputs before exiting.
    #[arg(long, action = ArgAction::Set)]
    pub verify: Option<bool>,
    /// Also run the exhaustive configuration scan on built designs.
    #[arg(long, action = ArgAction::Set)]
    pub exhaustive: Option<bool>,
    /// Step budget for the exhaustive scan.
    #[arg(long)]
    pub max_verify_steps: Option<u64>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Steiner,
    Partite,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Design to check (JSON). Runs the packing/shape checks.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Skip the exhaustive configuration scan of the design.
    #[arg(long)]
    pub no_exhaustive: bool,
    /// Step budget for the exhaustive scan.
    #[arg(long, default_value_t = 4_000_000_000)]
    pub max_steps: u64,
    /// Matching check instead: ground hypergraph (JSON).
    #[arg(long, requires_all = ["configs", "matching"])]
    pub graph: Option<PathBuf>,
    /// Matching check: configurations (JSON).
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Matching check: selected edges (JSON: {"edge_ids": [...]}).
    #[arg(long)]
    pub matching: Option<PathBuf>,
    /// Fail the matching check unless every A-vertex is covered.
    #[arg(long)]
    pub require_a_perfect: bool,
    /// Write the full report here as JSON.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Recorded trace: full run (JSON) or per-round records (JSONL).
    #[arg(long)]
    pub trace: PathBuf,
    /// Write the full report here as JSON.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}
