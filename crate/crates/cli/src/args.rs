use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gestigo_core::DatasetId;

#[derive(Debug, Parser)]
#[command(
    name = "gestigo",
    version,
    about = "Skeleton hand-gesture condensation, multi-stream classification and live serving",
    after_help = "Options may also come from a `key = value` file given with --config; \
                  command-line flags win over the file. GESTIGO_THREADS caps the worker pool."
)]
pub struct Cli {
    /// File of `key = value` lines, keys being long flag names.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset tree in the on-disk layout of a real one.
    Synth(SynthArgs),
    /// Condense every gesture of a dataset into one PNG per view.
    Encode(EncodeArgs),
    /// Train a multi-stream model.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the validation split.
    Eval(EvalArgs),
    /// Search for the best ordered triple of views.
    VoSearch(VoSearchArgs),
    /// Serve live classification over WebSocket.
    Serve(ServeArgs),
    /// Stream a recorded gesture to a running server.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// SHREC2017_14G, SHREC2017_28G, DHG1428_14G, DHG1428_28G, LMDHG or FPHA.
    #[arg(long)]
    pub dataset: DatasetId,
    /// Dataset root directory.
    #[arg(long, value_name = "DIR")]
    pub root: PathBuf,
    /// Keep only these 1-based class labels, comma-separated.
    #[arg(long, value_name = "LIST")]
    pub classes: Option<String>,
    /// Seed of the subject split for datasets without an official one.
    #[arg(long, default_value_t = gestigo_core::dataset::DEFAULT_SPLIT_SEED)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long)]
    pub dataset: DatasetId,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// DHG/SHREC only: generate just these 1-based gestures.
    #[arg(long, value_name = "LIST")]
    pub gestures: Option<String>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Views to render: `all` or a comma-separated list.
    #[arg(long, default_value = "all")]
    pub vos: String,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Canvas size in pixels.
    #[arg(long, default_value_t = gestigo_core::condense::DEFAULT_IMAGE_PX)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Stream views in order.
    #[arg(long, default_value = "custom,top-down,front-away")]
    pub vos: String,
    /// Use only the first N views of --vos.
    #[arg(long, value_name = "N")]
    pub streams: Option<usize>,
    /// Epochs per progressive-resizing stage.
    #[arg(long, default_value_t = gestigo_net::train::DEFAULT_EPOCHS_PER_STAGE)]
    pub epochs: usize,
    /// Stage input sizes, comma-separated.
    #[arg(long, default_value = "224,276,328,380")]
    pub stages: String,
    /// Candidate learning rates, compared on the first stage.
    #[arg(long, default_value = "3e-3,1e-3,3e-4")]
    pub lr: String,
    #[arg(long, default_value_t = gestigo_net::train::DEFAULT_BATCH_SIZE)]
    pub batch: usize,
    #[arg(long, default_value_t = gestigo_net::train::DEFAULT_SEED)]
    pub seed: u64,
    /// Training-time augmentation: on or off.
    #[arg(long, default_value = "on")]
    pub augment: String,
    /// Render size before downscaling to the stage size.
    #[arg(long, default_value_t = gestigo_core::condense::DEFAULT_IMAGE_PX)]
    pub master_px: usize,
    #[arg(long, default_value_t = gestigo_net::config::DEFAULT_PSEUDO_PX)]
    pub pseudo_px: usize,
    #[arg(long, default_value = "16,32,64,128")]
    pub encoder_widths: String,
    #[arg(long, default_value = "8,16")]
    pub tuner_widths: String,
    #[arg(long, default_value_t = gestigo_net::config::DEFAULT_HEAD_HIDDEN)]
    pub head_hidden: usize,
    #[arg(long, default_value_t = gestigo_net::config::DEFAULT_TUNER_HIDDEN)]
    pub tuner_hidden: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Read images written by `encode` instead of rendering in memory.
    #[arg(long, value_name = "DIR")]
    pub encoded: Option<PathBuf>,
    /// Output directory for the checkpoint and training report.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Views in order; must match the checkpoint. Defaults to its own.
    #[arg(long)]
    pub vos: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub encoded: Option<PathBuf>,
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// Directory for report.txt and confusion.png.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct VoSearchArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Candidate views: `all` or a list.
    #[arg(long, default_value = "all")]
    pub candidates: String,
    #[arg(long, default_value_t = gestigo_eval::DEFAULT_TOP_K_SINGLES)]
    pub top_k_singles: usize,
    #[arg(long, default_value_t = gestigo_eval::DEFAULT_TOP_K_PAIRS)]
    pub top_k_pairs: usize,
    /// Output directory; an existing search.tsv there is resumed.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Views in order; must match the checkpoint. Defaults to its own.
    #[arg(long)]
    pub vos: Option<String>,
    #[arg(long, default_value = "127.0.0.1:8765", value_name = "ADDR:PORT")]
    pub bind: String,
    #[arg(long, default_value_t = gestigo_service::DEFAULT_MAX_SESSIONS)]
    pub max_sessions: usize,
    /// Frames held per recording.
    #[arg(long, default_value_t = gestigo_service::DEFAULT_BUFFER_FRAMES)]
    pub buffer: usize,
    /// Stop a recording after this many quiet milliseconds; 0 disables.
    #[arg(long, default_value_t = gestigo_service::DEFAULT_IDLE_STOP.as_millis() as u64)]
    pub idle_stop_ms: u64,
    /// Static files for browsers, e.g. the live UI build.
    #[arg(long, value_name = "DIR")]
    pub ui: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReplayArgs {
    /// Server address, `host:port` or a ws:// URL.
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub endpoint: String,
    /// Skeleton text file, one frame per line.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["dataset", "entry"])]
    pub sequence: Option<PathBuf>,
    /// Joint layout of --sequence: dhg22, fpha21, lmdhg46 or mediapipe21.
    #[arg(long, default_value = "mediapipe21")]
    pub schema: String,
    /// --sequence lines start with a frame index.
    #[arg(long)]
    pub leading_index: bool,
    /// Replay a dataset gesture instead: the dataset, its root and the
    /// entry's position in the manifest.
    #[arg(long, requires_all = ["root", "entry"])]
    pub dataset: Option<DatasetId>,
    #[arg(long, value_name = "DIR")]
    pub root: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub entry: Option<usize>,
    #[arg(long, default_value_t = gestigo_service::DEFAULT_REPLAY_FPS)]
    pub fps: f64,
    /// Seconds to wait for the server at each step.
    #[arg(long, default_value_t = gestigo_service::DEFAULT_REPLAY_TIMEOUT.as_secs())]
    pub timeout: u64,
}
