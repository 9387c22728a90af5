use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use walkdir::WalkDir;

use eventclone::clonecli::{
    detect, embed_fragments, evaluate, export_embeddings, load_dataset, parse_grid, score_pairs, sweep, verdicts,
    CloneDataset, CloneError, EvalReport, NegativeSampling, PairMode, Split, DEFAULT_BETA, DEFAULT_FUSION_THETA,
    DEFAULT_THETA,
};
use eventclone::cparse::parse_source;
use eventclone::eventgraph::{graph_from_source, serialize_graph, GraphError};
use eventclone::model::{embed_program, load_checkpoint, ConvSpan, ModelConfig, ModelError, ModelParams};
use eventclone::train::{train, OptimizerKind, TrainConfig, TrainError};

#[derive(Parser)]
#[command(name = "eventclone", version, about = "Semantic code clone detection over event dependency graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the event dependency graph (or the AST) of one C file.
    ParseGraph {
        file: PathBuf,
        #[arg(long)]
        emit_ast: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train a model on the train split of a dataset.
    Train(TrainArgs),
    /// Print the program vector of one C file, one value per line.
    Embed {
        file: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank corpus fragments by similarity to a target fragment.
    Detect {
        target: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
    },
    /// Precision, recall and F1 at one threshold.
    Eval {
        #[command(flatten)]
        data: EvalData,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Evaluate over a θ grid and optionally a β grid.
    Sweep {
        #[command(flatten)]
        data: EvalData,
        #[arg(long, default_value = "0:1:0.05")]
        theta_grid: String,
        #[arg(long)]
        beta_grid: Option<String>,
    },
    /// Write every fragment's program vector to a tab-separated file.
    Export {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    Sgd,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    Unordered,
    OrderedWithSelf,
}

impl From<PairArg> for PairMode {
    fn from(p: PairArg) -> Self {
        match p {
            PairArg::Unordered => PairMode::Unordered,
            PairArg::OrderedWithSelf => PairMode::OrderedWithSelf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpanArg {
    Shared,
    Channels,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct SplitArgs {
    /// Fraction of each problem's fragments used for training.
    #[arg(long, default_value_t = 0.7)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, value_enum, default_value_t = PairArg::Unordered)]
    pair_mode: PairArg,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OptArg::Sgd)]
    optimizer: OptArg,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    negatives_per_anchor: usize,
    /// Loss history file; defaults to `<out>.loss`.
    #[arg(long)]
    loss_history: Option<PathBuf>,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    slices: usize,
    #[arg(long, default_value_t = 128)]
    kernels: usize,
    #[arg(long, default_value_t = 3)]
    kernel_len: usize,
    #[arg(long, default_value_t = 256)]
    pad_len: usize,
    #[arg(long, default_value_t = 512)]
    top_vocab: usize,
    #[arg(long, value_enum, default_value_t = SpanArg::Channels)]
    conv_span: SpanArg,
}

#[derive(Args)]
struct EvalData {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    model2: Option<PathBuf>,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    on: SplitArg,
    /// Sample this many negative pairs instead of using every cross-problem pair.
    #[arg(long)]
    negatives: Option<usize>,
    /// Machine-readable record file, one grid point per line.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn exit_code(e: &CloneError) -> u8 {
    match e {
        CloneError::Config(_) => 1,
        CloneError::DegenerateVector => 3,
        CloneError::Train(TrainError::DegenerateVector | TrainError::NonFiniteLoss { .. }) => 3,
        CloneError::Train(TrainError::Config(_)) => 1,
        CloneError::Model(ModelError::Config(_)) | CloneError::Train(TrainError::Model(ModelError::Config(_))) => 1,
        CloneError::Model(ModelError::Shape(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read_source(path: &Path) -> Result<String, CloneError> {
    let bytes = fs::read(path).map_err(|e| CloneError::Dataset(format!("{}: {e}", path.display())))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CloneError> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(command: Command) -> Result<(), CloneError> {
    match command {
        Command::ParseGraph { file, emit_ast, out } => {
            let src = read_source(&file)?;
            let text = if emit_ast {
                parse_source(&src).map_err(GraphError::from)?.to_sexpr()
            } else {
                serialize_graph(&graph_from_source(&src)?)
            };
            write_output(out.as_deref(), &text)
        }
        Command::Train(args) => run_train(args),
        Command::Embed { file, model, out } => {
            let params = load_checkpoint(&model)?;
            let graph = graph_from_source(&read_source(&file)?)?;
            let v = embed_program(&graph, &params)?;
            let text: String = v.values.iter().map(|x| format!("{x:e}\n")).collect();
            write_output(out.as_deref(), &text)
        }
        Command::Detect { target, corpus, model, theta } => {
            let params = load_checkpoint(&model)?;
            let graph = graph_from_source(&read_source(&target)?)?;
            let v = embed_program(&graph, &params)?;
            let entries = embed_corpus(&corpus, &params)?;
            for (id, s) in detect(&v, &entries, theta)? {
                println!("{s:.6}\t{id}");
            }
            Ok(())
        }
        Command::Eval { data, theta, beta } => {
            let ctx = EvalContext::load(&data)?;
            let fused = ctx.second.is_some();
            let theta = theta.unwrap_or(if fused { DEFAULT_FUSION_THETA } else { DEFAULT_THETA });
            let beta = fused.then(|| beta.unwrap_or(DEFAULT_BETA));
            let mut report = evaluate(&verdicts(&ctx.scored, theta, beta), theta)?;
            report.beta = beta;
            report.second_model = data.model2.as_ref().map(|p| p.display().to_string());
            println!("{report}");
            write_records(data.records.as_deref(), std::slice::from_ref(&report))
        }
        Command::Sweep { data, theta_grid, beta_grid } => {
            let ctx = EvalContext::load(&data)?;
            let thetas = parse_grid(&theta_grid)?;
            let betas = beta_grid.as_deref().map(parse_grid).transpose()?;
            let table = sweep(&ctx.scored, &thetas, betas.as_deref())?;
            println!("theta  beta    TP      FP      FN      TN      precision recall  f1");
            for (i, r) in table.reports.iter().enumerate() {
                let mark = if i == table.best { "  <- best" } else { "" };
                let beta = r.beta.map_or_else(|| "-".to_string(), |b| format!("{b:.3}"));
                println!(
                    "{:<6.3} {beta:<7} {:<7} {:<7} {:<7} {:<7} {:<9.4} {:<7.4} {:.4}{mark}",
                    r.theta, r.true_pos, r.false_pos, r.false_neg, r.true_neg, r.precision, r.recall, r.f1
                );
            }
            write_records(data.records.as_deref(), &table.reports)
        }
        Command::Export { data, model, out } => {
            let params = load_checkpoint(&model)?;
            let ds = load_dataset(&data, 1.0, 0)?;
            let vectors = embed_fragments(&ds, &params)?;
            export_embeddings(&ds, &vectors, std::io::BufWriter::new(fs::File::create(out)?))
        }
    }
}

fn run_train(args: TrainArgs) -> Result<(), CloneError> {
    let model = ModelConfig {
        d: args.dim,
        k: args.slices,
        n_k: args.kernels,
        l_k: args.kernel_len,
        pad_len: args.pad_len,
        top_vocab: args.top_vocab,
        conv_span: match args.conv_span {
            SpanArg::Shared => ConvSpan::Shared,
            SpanArg::Channels => ConvSpan::Channels,
        },
    };
    let cfg = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        optimizer: match args.optimizer {
            OptArg::Sgd => OptimizerKind::Sgd,
            OptArg::Adaptive => OptimizerKind::Adaptive,
        },
        negatives_per_anchor: args.negatives_per_anchor,
        pair_mode: args.split.pair_mode.into(),
        checkpoint: Some(args.out.clone()),
        ..TrainConfig::default()
    };
    let ds = load_dataset(&args.data, args.split.ratio, args.split.split_seed)?;
    report_skipped(&ds);
    let outcome = train(&ds, model, &cfg)?;
    let history = args.loss_history.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".loss");
        PathBuf::from(p)
    });
    let text: String = outcome.losses.iter().enumerate().map(|(e, l)| format!("{} {l:.17e}\n", e + 1)).collect();
    fs::write(&history, text)?;
    if let Some(last) = outcome.losses.last() {
        println!("trained {} epochs, final mean loss {last:.6}", outcome.losses.len());
    }
    Ok(())
}

fn report_skipped(ds: &CloneDataset) {
    if !ds.skipped.is_empty() {
        eprintln!("skipped {} unparseable fragments", ds.skipped.len());
    }
}

fn embed_corpus(root: &Path, params: &ModelParams) -> Result<Vec<(String, eventclone::model::ProgramVector)>, CloneError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CloneError::Dataset(e.to_string()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("c") {
            continue;
        }
        let id = path.strip_prefix(root).unwrap_or(path).display().to_string();
        let vector = graph_from_source(&read_source(path)?)
            .map_err(CloneError::from)
            .and_then(|g| embed_program(&g, params).map_err(CloneError::from));
        match vector {
            Ok(v) => out.push((id, v)),
            Err(e) => log::warn!("{id}: {e}, skipped"),
        }
    }
    Ok(out)
}

struct EvalContext {
    scored: Vec<eventclone::clonecli::ScoredPair>,
    second: Option<ModelParams>,
}

impl EvalContext {
    fn load(args: &EvalData) -> Result<Self, CloneError> {
        let params = load_checkpoint(&args.model)?;
        let second = args.model2.as_deref().map(load_checkpoint).transpose()?;
        let ds = load_dataset(&args.data, args.split.ratio, args.split.split_seed)?;
        report_skipped(&ds);
        let split = match args.on {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        };
        let sampling = match args.negatives {
            Some(count) => NegativeSampling::Sample { count, seed: args.split.split_seed },
            None => NegativeSampling::All,
        };
        let pairs = ds.labelled_pairs(split, args.split.pair_mode.into(), sampling);
        let v1 = embed_fragments(&ds, &params)?;
        let v2 = second.as_ref().map(|p| embed_fragments(&ds, p)).transpose()?;
        let scored = score_pairs(&pairs, &v1, v2.as_deref())?;
        Ok(EvalContext { scored, second })
    }
}

fn write_records(path: Option<&Path>, reports: &[EvalReport]) -> Result<(), CloneError> {
    let Some(path) = path else { return Ok(()) };
    let mut text = String::from("# theta beta TP FP FN TN precision recall f1\n");
    for r in reports {
        text.push_str(&r.record_line());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
