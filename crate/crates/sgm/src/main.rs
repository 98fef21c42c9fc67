use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;

use sgm::config::{resolve, Config};
use sgm::matrix_csv::{format_f64, load_matrix, save_matrix, write_matrix_to};
use sgm::model_file::{load_model, save_model};
use sgm::{idx, results, rows_to_modality, Error, Result};
use sgm_core::experiment::DEFAULT_WEIGHTS;
use sgm_core::knn::DEFAULT_NEIGHBORS;
use sgm_core::linalg::DEFAULT_RANK_TOL;
use sgm_core::procrustes::DEFAULT_MAX_OUTER_ITERS;
use sgm_core::sgm::train_detailed;
use sgm_core::tiles::tile;
use sgm_core::{ExperimentSpec, Method, PrescribedCovariance, SgmConfig};

/// Star-graph multimodal matching: train, apply and evaluate SGM maps.
#[derive(Parser)]
#[command(name = "sgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train maps from matched CSV data (one sample per row, modality 0 first).
    Train(TrainArgs),
    /// Map CSV samples of one modality into the common domain.
    Apply(ApplyArgs),
    /// Run one transfer-learning experiment on IDX digit images.
    Experiment(ExperimentArgs),
    /// Run experiments over several methods and common dimensions.
    Sweep(SweepArgs),
    /// Print a summary of a model file.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Data CSV per modality; the first is the central modality.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Prescribed k x k covariance CSV per modality (default: identity).
    #[arg(long, num_args = 1..)]
    cov: Vec<PathBuf>,
    /// Read each --cov file as a factor C of the covariance C C^T.
    #[arg(long)]
    cov_factor: bool,
    /// Comma-separated weights of the non-central modalities.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Common-domain dimension.
    #[arg(long)]
    k: Option<usize>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    /// 0 is the central modality.
    #[arg(long)]
    modality: usize,
    /// Input CSV, one sample per row.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// IDX image file (28x28 digits).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Matched points used to train the maps.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_knn_train: Option<usize>,
    #[arg(long)]
    n_knn_test: Option<usize>,
    /// SGM weights of modalities 1 and 2.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Results JSON with a configuration echo.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated methods (default: all six).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// `a..b` (inclusive), a comma list, or a single value.
    #[arg(long, value_parser = parse_k_list)]
    k: Option<KList>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: sgm_core::Error| e.to_string())
}

#[derive(Clone, Debug)]
struct KList(Vec<usize>);

impl std::str::FromStr for KList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
        let ks: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            (a..=b).collect()
        } else {
            s.split(',').map(num).collect::<std::result::Result<_, _>>()?
        };
        if ks.contains(&0) {
            return Err("k must be at least 1".into());
        }
        Ok(KList(ks))
    }
}

fn parse_k_list(s: &str) -> std::result::Result<KList, String> {
    s.parse()
}

fn usage_error(kind: ErrorKind, message: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, message).exit()
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    path.as_deref().map(Config::load).unwrap_or_else(|| Ok(Config::default()))
}

fn list_config<T: std::str::FromStr>(config: &Config, key: &str) -> Result<Option<Vec<T>>>
where
    T::Err: std::fmt::Display,
{
    config
        .raw(key)
        .map(|v| {
            v.split(',')
                .map(|t| t.trim().parse::<T>().map_err(|e| Error::Invalid(format!("config {key}: {e}"))))
                .collect()
        })
        .transpose()
}

fn load_covariance(path: &Path, factor: bool, tol: f64) -> Result<PrescribedCovariance> {
    let m = load_matrix(path)?;
    let cov = if factor {
        PrescribedCovariance::from_factor(&m, tol)
    } else {
        PrescribedCovariance::from_matrix(m, tol)
    };
    cov.map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let m = args.data.len().saturating_sub(1);
    if m == 0 {
        usage_error(ErrorKind::TooFewValues, "train needs at least two --data files");
    }
    let Some(k) = args.k.or(config.get("k")?) else {
        usage_error(ErrorKind::MissingRequiredArgument, "--k is required");
    };
    let weights = match args.weights.or(list_config(&config, "weights")?) {
        Some(w) => w,
        None if m == 1 => vec![1.0],
        None => usage_error(
            ErrorKind::MissingRequiredArgument,
            format!("--weights is required with {} modalities", m + 1),
        ),
    };
    if !args.cov.is_empty() && args.cov.len() != m + 1 {
        usage_error(
            ErrorKind::WrongNumberOfValues,
            format!("{} --cov files for {} modalities", args.cov.len(), m + 1),
        );
    }
    let tol = resolve(args.tol, &config, "tol", DEFAULT_RANK_TOL)?;
    let max_iters = resolve(args.max_iters, &config, "max-iters", DEFAULT_MAX_OUTER_ITERS)?;

    let data = args
        .data
        .iter()
        .map(|p| {
            let m = load_matrix(p)?;
            rows_to_modality(&m).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let covs = if args.cov.is_empty() {
        vec![PrescribedCovariance::identity(k); m + 1]
    } else {
        args.cov
            .iter()
            .map(|p| load_covariance(p, args.cov_factor, tol))
            .collect::<Result<Vec<_>>>()?
    };
    let cfg = SgmConfig { k, weights, rel_tol: tol, max_outer_iters: max_iters };
    let training = train_detailed(&data, &covs, &cfg)?;
    let model = &training.model;
    save_model(&args.out, model)?;

    let r_min: Vec<String> = model.r_min.iter().map(usize::to_string).collect();
    println!("m = {}", model.m());
    println!("k = {}", model.k);
    println!("r_min = {}", r_min.join(","));
    println!("trace_ratio = {}", format_f64(model.trace_ratio));
    println!("refine_iterations = {}", model.refine_iters);
    if !training.refinement.converged {
        eprintln!("warning: refinement stopped at the iteration cap");
    }
    if model.trace_ratio <= 0.0 {
        eprintln!("warning: trace ratio is not positive; the modalities share no matched structure");
    }
    Ok(())
}

fn cmd_apply(args: ApplyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let map = model.maps.get(args.modality).ok_or(sgm_core::Error::ModalityIndex {
        index: args.modality,
        count: model.maps.len(),
    })?;
    let x = load_matrix(&args.data)?;
    if x.cols() != map.input_dim() {
        return Err(Error::Invalid(format!(
            "{}: row 1 has {} values, modality {} expects {}",
            args.data.display(),
            x.cols(),
            args.modality,
            map.input_dim()
        )));
    }
    let y = map.apply_columns(&x.transpose())?.transpose();
    match &args.out {
        Some(p) => save_matrix(p, &y),
        None => write_matrix_to(std::io::stdout().lock(), &y).map_err(|e| Error::io(Path::new("-"), e)),
    }
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let join = |v: Vec<String>| v.join(",");
    println!("m = {}", model.m());
    println!("k = {}", model.k);
    println!("dims = {}", join(model.dims().iter().map(usize::to_string).collect()));
    println!("r_min = {}", join(model.r_min.iter().map(usize::to_string).collect()));
    println!("weights = {}", join(model.weights.iter().map(|&w| format_f64(w)).collect()));
    println!("trace_ratio = {}", format_f64(model.trace_ratio));
    println!("refine_iterations = {}", model.refine_iters);
    Ok(())
}

struct Prepared {
    spec: ExperimentSpec,
    tiles: sgm_core::TiledModalities,
    config: Config,
}

fn prepare(run: &RunArgs, config: Config) -> Result<Prepared> {
    let path = |flag: &Option<PathBuf>, key: &str| -> PathBuf {
        flag.clone()
            .or_else(|| config.raw(key).map(PathBuf::from))
            .unwrap_or_else(|| usage_error(ErrorKind::MissingRequiredArgument, format!("--{key} is required")))
    };
    let (images, labels) = (path(&run.images, "images"), path(&run.labels, "labels"));
    let d = ExperimentSpec::default();
    let weights = run
        .weights
        .clone()
        .or(list_config(&config, "weights")?)
        .unwrap_or_else(|| DEFAULT_WEIGHTS.to_vec());
    let spec = ExperimentSpec {
        n: resolve(run.n, &config, "n", d.n)?,
        n_knn_train: resolve(run.n_knn_train, &config, "n-knn-train", d.n_knn_train)?,
        n_knn_test: resolve(run.n_knn_test, &config, "n-knn-test", d.n_knn_test)?,
        neighbors: resolve(run.neighbors, &config, "neighbors", DEFAULT_NEIGHBORS)?,
        seed: resolve(run.seed, &config, "seed", d.seed)?,
        weights,
        ..d
    };
    let tiles = tile(&idx::load_image_set(&images, &labels)?)?;
    Ok(Prepared { spec, tiles, config })
}

fn emit(run: &RunArgs, res: &[sgm_core::ExperimentResult], echo: serde_json::Value, started: Instant) -> Result<()> {
    print!("{}", results::summary_table(res));
    for r in res {
        if r.trace_ratio.is_some_and(|t| t <= 0.0) {
            eprintln!("warning: {} at k = {} has a non-positive trace ratio", r.method, r.k);
        }
    }
    if let Some(p) = &run.out {
        std::fs::write(p, results::to_csv_string(res)).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &run.json {
        let value = results::to_json(res, echo, started.elapsed().as_secs_f64());
        let text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
        std::fs::write(p, text + "\n").map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn echo(spec: &ExperimentSpec, methods: &[Method], ks: &[usize]) -> serde_json::Value {
    json!({
        "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "k": ks,
        "n": spec.n,
        "n_knn_train": spec.n_knn_train,
        "n_knn_test": spec.n_knn_test,
        "weights": spec.weights,
        "neighbors": spec.neighbors,
        "seed": spec.seed,
    })
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let started = Instant::now();
    let p = prepare(&args.run, load_config(&args.run.config)?)?;
    let method = resolve(args.method, &p.config, "method", Method::Sgm)?;
    let k = resolve(args.k, &p.config, "k", p.spec.k)?;
    let spec = ExperimentSpec { method, k, ..p.spec };
    let res = sgm_core::run_experiment(&spec, &p.tiles)?;
    emit(&args.run, &[res], echo(&spec, &[method], &[k]), started)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let started = Instant::now();
    let p = prepare(&args.run, load_config(&args.run.config)?)?;
    let methods = match args.methods {
        Some(m) => m,
        None => list_config(&p.config, "methods")?.unwrap_or_else(|| Method::ALL.to_vec()),
    };
    let ks = match args.k {
        Some(k) => k.0,
        None => match p.config.raw("k") {
            Some(v) => v.parse::<KList>().map_err(|e| Error::Invalid(format!("config k: {e}")))?.0,
            None => vec![p.spec.k],
        },
    };
    let res = sgm_core::sweep(&p.spec, &ks, &methods, &p.tiles)?;
    emit(&args.run, &res, echo(&p.spec, &methods, &ks), started)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Apply(a) => cmd_apply(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
