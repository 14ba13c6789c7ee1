//! The `spectral2d` command line.
//!
//! Exit codes: `0` on success, `1` when a verification or lab verdict fails,
//! `2` on usage, input or output errors. Every file is written atomically,
//! and identical flags and inputs produce byte-identical files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use crate::chebyshev::conv2d_cheb;
use crate::data_io::{
    gen_synthetic, load_checkpoint, load_dataset, save_checkpoint, save_dataset, save_metrics, write_atomic,
    Checkpoint, CheckpointMetrics, Dataset, Metrics, SyntheticSpec, TaskKind,
};
use crate::dense::DenseMat;
use crate::error::Error;
use crate::failure_lab::{run_lab, standard_suite, write_lab_outputs, Budget};
use crate::graph::{normalized_laplacian, shifted_laplacian};
use crate::model::{forward, train, ConvKind, Mode, ThetaInit, TrainConfig};
use crate::spectral::EigenBasis;
use crate::verify::{run_checks, Scope};

/// `println!` that ignores a closed stdout, so piping into `head` does not
/// panic.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(name = "spectral2d", version, about = "Spectral 2-D graph convolution toolkit")]
pub struct Cli {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Train ChebNet2D and write a checkpoint and metrics.
    Train(TrainArgs),
    /// Run the built-in property checks.
    Verify(VerifyArgs),
    /// Run the adversarial construction suite.
    Lab(LabArgs),
    /// Write the normalized Laplacian spectrum as CSV.
    Eig(EigArgs),
    /// Apply a checkpoint's spectral filter and write the result as CSV.
    Filter(FilterArgs),
}

/// Where a command reads its graph from: a directory or a generator.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset directory (edges.tsv, features.csv, labels.csv, splits.json).
    #[arg(long, conflicts_with = "gen_kind")]
    pub data: Option<PathBuf>,
    /// Generate a synthetic task instead: separable or cross_channel.
    #[arg(long, value_parser = parse_kind)]
    pub gen_kind: Option<TaskKind>,
    /// Nodes of a generated task.
    #[arg(long, default_value_t = 400)]
    pub nodes: usize,
    /// Classes of a generated task (default 4).
    #[arg(long)]
    pub classes: Option<usize>,
    /// Seed for generation and training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Whether node ids in --data files start at 0 or 1.
    #[arg(long, default_value_t = 0)]
    pub index_base: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    /// Chebyshev degree D.
    #[arg(long, default_value_t = 10)]
    pub degree: usize,
    /// Hidden width H of the perceptron.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Maximum number of epochs.
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 200)]
    pub patience: usize,
    /// two_d, or shared_diagonal for one filter shared by all channels.
    #[arg(long, default_value = "two_d", value_parser = parse_conv)]
    pub conv: ConvKind,
    /// identity or random.
    #[arg(long, default_value = "identity", value_parser = parse_theta_init)]
    pub theta_init: ThetaInit,
    /// Output directory for checkpoint.json and metrics.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// all, spectral, paradigms, chebyshev or model.
    #[arg(default_value = "all", value_parser = parse_scope)]
    pub scope: Scope,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LabArgs {
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Random starts per paradigm and case.
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Adam steps per start.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write each eigenvector after its eigenvalue.
    #[arg(long)]
    pub with_vectors: bool,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> Result<TaskKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_conv(s: &str) -> Result<ConvKind, String> {
    match s {
        "two_d" | "2d" => Ok(ConvKind::TwoD),
        "shared_diagonal" | "shared" => Ok(ConvKind::SharedDiagonal),
        other => Err(format!(
            "unknown convolution '{other}' (expected two_d or shared_diagonal)"
        )),
    }
}

fn parse_theta_init(s: &str) -> Result<ThetaInit, String> {
    match s {
        "identity" => Ok(ThetaInit::Identity),
        "random" => Ok(ThetaInit::Random),
        other => Err(format!("unknown theta init '{other}' (expected identity or random)")),
    }
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs, or an IO error. Exit code 2.
    Usage(Error),
    /// A check or verdict failed. Exit code 1.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) => write!(f, "error: {e}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn resolve_dataset(args: &DataArgs) -> Result<Dataset, Failure> {
    if let Some(dir) = &args.data {
        return Ok(load_dataset(dir, args.index_base)?);
    }
    let Some(kind) = args.gen_kind else {
        return Err(Failure::Usage(Error::InvalidConfig(
            "one of --data or --gen-kind is required".into(),
        )));
    };
    Ok(gen_synthetic(&synthetic_spec(kind, args))?)
}

fn synthetic_spec(kind: TaskKind, args: &DataArgs) -> SyntheticSpec {
    let classes = args.classes.unwrap_or(4);
    match kind {
        TaskKind::Separable => SyntheticSpec::separable(args.nodes, classes, args.seed),
        TaskKind::CrossChannel => SyntheticSpec {
            n_classes: classes,
            ..SyntheticSpec::cross_channel(args.nodes, args.seed)
        },
    }
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

/// Builds the training configuration from flags.
pub fn train_config(args: &TrainArgs) -> TrainConfig {
    TrainConfig {
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        dropout: args.dropout,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.data.seed,
        degree: args.degree,
        hidden: args.hidden,
        conv: args.conv,
        theta_init: args.theta_init,
        ..TrainConfig::default()
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let Some(kind) = args.data.gen_kind else {
        return Err(Failure::Usage(Error::InvalidConfig("gen requires --gen-kind".into())));
    };
    if args.data.data.is_some() {
        return Err(Failure::Usage(Error::InvalidConfig("gen does not read --data".into())));
    }
    let ds = gen_synthetic(&synthetic_spec(kind, &args.data))?;
    for p in save_dataset(&args.out, &ds)? {
        info!("wrote {}", p.display());
    }
    out!(
        "generated {} nodes, {} edges, {} classes into {}",
        ds.graph.n_nodes(),
        ds.graph.n_edges(),
        ds.n_classes,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let ds = resolve_dataset(&args.data)?;
    let config = train_config(args);
    let outcome = train(&config, &ds.graph, &ds.x, &ds.labels, &ds.splits)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let ckpt = Checkpoint::new(
        &outcome.params,
        &config,
        CheckpointMetrics {
            best_epoch: outcome.best_epoch,
            best_valid_acc: outcome.best_valid_acc,
            test_acc: outcome.test_acc,
        },
    );
    save_checkpoint(&args.out.join("checkpoint.json"), &ckpt)?;
    save_metrics(
        &args.out.join("metrics.json"),
        &Metrics::from_outcome(&outcome, &config),
    )?;
    out!(
        "best epoch {} of {}: valid acc {:.4}, test acc {:.4}",
        outcome.best_epoch,
        outcome.history.train_loss.len(),
        outcome.best_valid_acc,
        outcome.test_acc
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let checks = run_checks(args.scope, args.seed)?;
    for c in &checks {
        out!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    out!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} verification checks failed")));
    }
    Ok(())
}

fn cmd_lab(args: &LabArgs) -> Result<(), Failure> {
    let budget = Budget {
        restarts: args.restarts,
        steps: args.steps,
        ..Budget::default()
    };
    let report = run_lab(&standard_suite()?, &budget)?;
    let (json, csv) = write_lab_outputs(&report, &args.out)?;
    for case in &report.cases {
        out!("{:<32} {:?}", case.name, case.verdict);
        for f in &case.failures {
            out!("    {f}");
        }
    }
    info!("wrote {} and {}", json.display(), csv.display());
    if !report.passed() {
        return Err(Failure::Check("some lab cases did not meet their verdicts".into()));
    }
    Ok(())
}

fn fmt_row(out: &mut String, first: usize, values: impl IntoIterator<Item = f64>) {
    let _ = write!(out, "{first}");
    for v in values {
        let _ = write!(out, ",{v:.16e}");
    }
    out.push('\n');
}

fn cmd_eig(args: &EigArgs) -> Result<(), Failure> {
    let ds = resolve_dataset(&args.data)?;
    let basis = EigenBasis::of_graph(&ds.graph)?;
    let n = basis.dim();
    let mut out = String::from("index,lambda");
    if args.with_vectors {
        for i in 0..n {
            let _ = write!(out, ",u{i}");
        }
    }
    out.push('\n');
    for k in 0..n {
        let vector = if args.with_vectors {
            basis.u.column(k)
        } else {
            Vec::new()
        };
        fmt_row(&mut out, k, std::iter::once(basis.lambda[k]).chain(vector));
    }
    ensure_parent(&args.out)?;
    write_atomic(&args.out, out.as_bytes())?;
    out!("wrote {n} eigenvalues to {}", args.out.display());
    Ok(())
}

fn cmd_filter(args: &FilterArgs) -> Result<(), Failure> {
    let ds = resolve_dataset(&args.data)?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let params = ckpt.params()?;
    let lhat = shifted_laplacian(&normalized_laplacian(&ds.graph));
    let channels = params.theta.channels();
    // A coefficient tensor sized to the features filters them directly.
    // Otherwise the features go through the checkpoint's perceptron first,
    // which yields the model's eval-mode logits.
    let z: DenseMat = if channels == ds.x.cols() {
        info!("filtering the {channels} feature channels directly");
        conv2d_cheb(&lhat, &ds.x, &params.theta)?
    } else {
        info!("filtering the perceptron output ({channels} channels)");
        forward(&params, &lhat, &ds.x, Mode::Eval)?
    };
    let mut out = String::from("node");
    for j in 0..z.cols() {
        let _ = write!(out, ",z{j}");
    }
    out.push('\n');
    for i in 0..z.rows() {
        fmt_row(&mut out, i, z.row(i).iter().copied());
    }
    ensure_parent(&args.out)?;
    write_atomic(&args.out, out.as_bytes())?;
    out!(
        "wrote {}x{} filtered signal to {}",
        z.rows(),
        z.cols(),
        args.out.display()
    );
    Ok(())
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Lab(a) => cmd_lab(a),
        Command::Eig(a) => cmd_eig(a),
        Command::Filter(a) => cmd_filter(a),
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    log::set_max_level(match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    });
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
