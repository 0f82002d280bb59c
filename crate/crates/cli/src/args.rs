use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use recon_core::synth::CorruptionType;
use recon_core::{Averaging, ExploreMode, Strategy, Weights};

#[derive(Debug, Parser)]
#[command(name = "recon", version, about = "Explore-and-classify refinement of planar building graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus of rectilinear buildings.
    Synth(SynthArgs),
    /// Corrupt the ground truth of every case in a corpus.
    Corrupt(CorruptArgs),
    /// Refine each case's initial graph by search.
    Search(SearchArgs),
    /// Training-time exploration: labeled samples around each initial graph.
    Explore(ExploreArgs),
    /// Classification labels and pixel targets of one graph.
    Label(LabelArgs),
    /// Score breakdown of one graph.
    Score(ScoreArgs),
    /// Corner, edge and region metrics over a corpus.
    Eval(EvalArgs),
    /// Render a graph as SVG.
    Render(RenderArgs),
    /// Re-run a recorded command and compare its outputs.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    /// Ground-truth labels as rewards.
    Oracle,
    /// Pooled confidence rasters `corner.pgm` / `edge.pgm`.
    Confidence,
    /// Pooled score rasters `corner_score.pgm` / `edge_score.pgm`.
    Raster,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Weights (1, 2, 50).
    Default,
    /// Weights (1, 1, 50).
    Nauata,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Beam,
    Smc,
    Greedy,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Beam => Strategy::Beam,
            StrategyArg::Smc => Strategy::Smc,
            StrategyArg::Greedy => Strategy::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Scored,
    Random,
}

impl From<ModeArg> for ExploreMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Scored => ExploreMode::Scored,
            ModeArg::Random => ExploreMode::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Micro,
    Macro,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Micro => Averaging::Micro,
            AveragingArg::Macro => Averaging::Macro,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CorruptionArg {
    DropEdge,
    AddSpuriousEdge,
    AddSpuriousCorner,
}

impl From<CorruptionArg> for CorruptionType {
    fn from(c: CorruptionArg) -> Self {
        match c {
            CorruptionArg::DropEdge => CorruptionType::DropEdge,
            CorruptionArg::AddSpuriousEdge => CorruptionType::AddSpuriousEdge,
            CorruptionArg::AddSpuriousCorner => CorruptionType::AddSpuriousCorner,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct WeightArgs {
    /// Weight preset; individual weights override it.
    #[arg(long, value_enum, default_value = "default")]
    pub profile: Profile,
    /// Junction weight.
    #[arg(long)]
    pub wj: Option<f64>,
    /// Edge weight.
    #[arg(long)]
    pub we: Option<f64>,
    /// Region weight.
    #[arg(long)]
    pub wr: Option<f64>,
}

impl WeightArgs {
    pub fn weights(&self) -> Weights {
        let base = match self.profile {
            Profile::Default => Weights::EDGE_HEAVY,
            Profile::Nauata => Weights::BALANCED,
        };
        Weights {
            junction: self.wj.unwrap_or(base.junction),
            edge: self.we.unwrap_or(base.edge),
            region: self.wr.unwrap_or(base.region),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct CorruptionArgs {
    /// Edits per case.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Allowed corruption types.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CorruptionArg::DropEdge, CorruptionArg::AddSpuriousEdge, CorruptionArg::AddSpuriousCorner])]
    pub types: Vec<CorruptionArg>,
    /// Corner jitter bound in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rectangles per building; cycles through 1..=4 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub rects: Option<u8>,
    #[arg(long, default_value_t = 16)]
    pub grid_step: u32,
    #[arg(long, default_value_t = 16)]
    pub margin: u32,
    #[arg(long, default_value_t = 256)]
    pub width: u32,
    #[arg(long, default_value_t = 256)]
    pub height: u32,
    /// Box blur radius of the confidence rasters.
    #[arg(long, default_value_t = 0)]
    pub blur: u32,
    /// Flip-noise probability of the confidence rasters.
    #[arg(long, default_value_t = 0.0)]
    pub flip: f64,
    #[command(flatten)]
    pub corruption: CorruptionArgs,
}

#[derive(Clone, Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub corruption: CorruptionArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Graph file searched from inside each case.
    #[arg(long, default_value = "initial.json")]
    pub input: String,
    #[arg(long, value_enum, default_value = "beam")]
    pub strategy: StrategyArg,
    /// Beam width or SMC particle count.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub width: u64,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, value_enum, default_value = "oracle")]
    pub scorer: ScorerKind,
    /// Iterations at the start restricted to addition actions.
    #[arg(long, default_value_t = 0)]
    pub addition_only_prefix: usize,
    /// SMC softmax temperature.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Clone, Debug, Args)]
pub struct ExploreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "initial.json")]
    pub input: String,
    #[arg(long, value_enum, default_value = "scored")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "oracle")]
    pub scorer: ScorerKind,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub keep: u64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Clone, Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Case directory holding the scorer inputs (gt.json or rasters).
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    pub scorer: ScorerKind,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    /// Directory of case directories holding predictions.
    #[arg(long)]
    pub pred: PathBuf,
    /// Corpus holding the ground truth.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value = "pred.json")]
    pub pred_name: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "micro")]
    pub averaging: AveragingArg,
    #[arg(long, default_value_t = 7.0)]
    pub corner_tol: f64,
    #[arg(long, default_value_t = 0.7)]
    pub region_iou: f64,
}

#[derive(Clone, Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Color primitives by their labels against this ground truth.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Fresh output directory for the re-run.
    #[arg(long)]
    pub out: PathBuf,
}
