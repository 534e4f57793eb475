//! Command-line front end: training, prediction, online updates, the
//! random-subsampling benchmark and cut-off selection.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use fpnn::baselines::{CentroidModel, GaussianPnnModel, KnnModel, ReducedPnnModel};
use fpnn::bench::{run_benchmark, ClassifierKind, CutoffPolicy, ParamGrid, SplitConfig};
use fpnn::density::{fixed_cutoff, select_cutoff};
use fpnn::features::read_feature_rows;
use fpnn::fejer_pnn::{save_model, TrainOptions};
use fpnn::model_file::AnyModel;
use fpnn::pca::{fit_pca, PcaTransform};
use fpnn::{load_dataset, Cutoff, Dataset, Error, FejerPnnModel, NormalizedFeature};

/// Exit status for data, format and I/O failures.
pub const EXIT_DATA: u8 = 1;
/// Exit status for malformed command lines.
pub const EXIT_USAGE: u8 = 2;

const DEFAULT_JMAX: usize = 32;

#[derive(Debug, Parser)]
#[command(name = "fpnn", version, about = "Fejér-kernel probabilistic neural network classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a classifier on a feature CSV and save the model.
    Train(TrainArgs),
    /// Classify every row of a feature CSV with a saved model.
    Predict(PredictArgs),
    /// Add the rows of a feature CSV to a saved Fejér network.
    Update(UpdateArgs),
    /// Run the stratified random-subsampling benchmark.
    Bench(BenchArgs),
    /// Print the cut-off chosen for a feature CSV.
    TuneCutoff(TuneCutoffArgs),
    /// Fit a PCA transform on a feature CSV and save it.
    PcaFit(PcaFitArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Feature CSV: `<label>,<f_1>,...,<f_D>` per line.
    #[arg(long)]
    features: PathBuf,
    /// Use the feature values as given instead of L2-normalizing each row.
    /// Values must then lie in [-1, 1].
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Debug, Clone, Copy)]
enum CutoffArg {
    Fixed,
    Hart,
    Value(Cutoff),
}

impl FromStr for CutoffArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" => Ok(CutoffArg::Fixed),
            "hart" => Ok(CutoffArg::Hart),
            _ => s
                .parse::<usize>()
                .ok()
                .and_then(|j| Cutoff::new(j).ok())
                .map(CutoffArg::Value)
                .ok_or_else(|| format!("expected `fixed`, `hart` or a positive integer, got `{s}`")),
        }
    }
}

impl CutoffArg {
    fn policy(self, jmax: Cutoff) -> CutoffPolicy {
        match self {
            CutoffArg::Fixed => CutoffPolicy::Fixed,
            CutoffArg::Hart => CutoffPolicy::HartMedian { j_max: jmax },
            CutoffArg::Value(j) => CutoffPolicy::Explicit(j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PcaArg {
    None,
    Components(usize),
}

impl FromStr for PcaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(PcaArg::None),
            _ => match s.parse::<usize>() {
                Ok(k) if k > 0 => Ok(PcaArg::Components(k)),
                _ => Err(format!("expected `none` or a positive integer, got `{s}`")),
            },
        }
    }
}

fn parse_kind(s: &str) -> Result<ClassifierKind, String> {
    s.parse::<ClassifierKind>().map_err(|e| e.to_string())
}

fn parse_cutoff(s: &str) -> Result<Cutoff, String> {
    s.parse::<usize>()
        .ok()
        .and_then(|j| Cutoff::new(j).ok())
        .ok_or_else(|| format!("expected a positive integer, got `{s}`"))
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_kind, default_value = "fejer")]
    classifier: ClassifierKind,
    /// Fejér cut-off: `fixed`, `hart` or an explicit positive integer.
    #[arg(long, default_value = "fixed")]
    cutoff: CutoffArg,
    /// Largest cut-off searched by `--cutoff hart`.
    #[arg(long, value_parser = parse_cutoff, default_value_t = Cutoff::new(DEFAULT_JMAX).unwrap())]
    jmax: Cutoff,
    /// Gaussian kernel width for `pnn` and `reduced-pnn`.
    #[arg(long, value_parser = parse_sigma, default_value_t = 0.1)]
    sigma: f64,
    /// Neighbour count for `knn`.
    #[arg(long, value_parser = parse_positive, default_value_t = 1)]
    k: usize,
    /// Centroids per class for `reduced-pnn`.
    #[arg(long, value_parser = parse_positive, default_value_t = 1)]
    centroids: usize,
    /// Number of principal components, or `none`. The transform is saved
    /// next to the model as `<out>.pca`.
    #[arg(long, default_value = "none")]
    pca: PcaArg,
    /// Seed for k-medians initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Store the constant weight as 1/R instead of 1 (Fejér network only).
    #[arg(long)]
    table1_literal: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct UpdateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Add a new class for rows whose label the model does not know.
    #[arg(long)]
    create_classes: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Separate feature CSV used only to choose grid parameters.
    #[arg(long)]
    tuning_features: Option<PathBuf>,
    /// Fraction of each class used for training.
    #[arg(long)]
    ratio: f64,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated classifier names.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind,
          default_value = "fejer,pnn,reduced-pnn,knn,centroid")]
    classifiers: Vec<ClassifierKind>,
    /// Kernel widths to tune over (default: 0.001 and 0.005 to 1.0 in steps of 0.005).
    #[arg(long, value_delimiter = ',', value_parser = parse_sigma)]
    sigma: Option<Vec<f64>>,
    /// Neighbour counts to tune over (default: 1,3,5).
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    k: Option<Vec<usize>>,
    /// Centroid counts to tune over (default: 1,3,5,10).
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    centroids: Option<Vec<usize>>,
    #[arg(long, default_value = "fixed")]
    cutoff: CutoffArg,
    #[arg(long, value_parser = parse_cutoff, default_value_t = Cutoff::new(DEFAULT_JMAX).unwrap())]
    jmax: Cutoff,
    /// PCA transform (from `pca-fit`) applied to both feature files.
    #[arg(long)]
    pca_model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PolicyArg {
    Fixed,
    Hart,
}

#[derive(Debug, Args)]
struct TuneCutoffArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "fixed")]
    policy: PolicyArg,
    #[arg(long, value_parser = parse_cutoff, default_value_t = Cutoff::new(DEFAULT_JMAX).unwrap())]
    jmax: Cutoff,
}

#[derive(Debug, Args)]
struct PcaFitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of principal components to keep.
    #[arg(long, value_parser = parse_positive)]
    components: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> fpnn::Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Update(a) => update(a),
        Command::Bench(a) => bench(a, out),
        Command::TuneCutoff(a) => tune_cutoff(a, out),
        Command::PcaFit(a) => pca_fit(a),
    }
}

/// Location of the PCA transform that belongs to a model file.
pub fn pca_sidecar(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".pca");
    PathBuf::from(s)
}

fn load_pca(path: &Path) -> fpnn::Result<PcaTransform<f64>> {
    PcaTransform::read(BufReader::new(File::open(path)?))
}

fn save_pca(pca: &PcaTransform<f64>, path: &Path) -> fpnn::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    pca.write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn load_sidecar(model: &Path) -> fpnn::Result<Option<PcaTransform<f64>>> {
    let path = pca_sidecar(model);
    if path.exists() {
        load_pca(&path).map(Some)
    } else {
        Ok(None)
    }
}

fn train(a: TrainArgs) -> fpnn::Result<()> {
    let mut ds: Dataset<f64> = load_dataset(&a.input.features, !a.input.no_normalize)?;
    let sidecar = pca_sidecar(&a.out);
    match a.pca {
        PcaArg::Components(k) => {
            let pca = fit_pca(&ds, k)?;
            ds = pca.apply_dataset(&ds)?;
            save_pca(&pca, &sidecar)?;
        }
        PcaArg::None => {
            if sidecar.exists() {
                std::fs::remove_file(&sidecar)?;
            }
        }
    }
    if a.table1_literal && a.classifier != ClassifierKind::Fejer {
        return Err(Error::Parameter("--table1-literal applies to the fejer classifier only".into()));
    }
    let model = match a.classifier {
        ClassifierKind::Fejer => {
            let j = a.cutoff.policy(a.jmax).resolve(&ds)?;
            let opts = TrainOptions { table1_literal: a.table1_literal };
            AnyModel::Fejer(FejerPnnModel::train_with(&ds, j, opts)?)
        }
        ClassifierKind::Pnn => AnyModel::Pnn(GaussianPnnModel::train(&ds, a.sigma)?),
        ClassifierKind::ReducedPnn => AnyModel::ReducedPnn(ReducedPnnModel::train(&ds, a.centroids, a.sigma, a.seed)?),
        ClassifierKind::Knn => AnyModel::Knn(KnnModel::train(&ds, a.k)?),
        ClassifierKind::Centroid => AnyModel::Centroid(CentroidModel::train(&ds)?),
    };
    model.save(&a.out)
}

/// Reads the labeled rows of a feature CSV and maps them into the model's
/// feature space.
fn read_rows(
    input: &InputArgs,
    pca: Option<&PcaTransform<f64>>,
) -> fpnn::Result<Vec<(String, NormalizedFeature<f64>)>> {
    let rows = read_feature_rows::<f64, _>(BufReader::new(File::open(&input.features)?))?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    rows.into_iter()
        .map(|row| {
            let x = row.to_feature(!input.no_normalize).map_err(|e| at_line(row.line, e))?;
            let x = match pca {
                Some(t) => t.apply(&x).map_err(|e| at_line(row.line, e))?,
                None => x,
            };
            Ok((row.label, x))
        })
        .collect()
}

fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, msg: other.to_string() },
    }
}

fn predict(a: PredictArgs) -> fpnn::Result<()> {
    let model = AnyModel::<f64>::load(&a.model)?;
    let pca = load_sidecar(&a.model)?;
    let rows = read_rows(&a.input, pca.as_ref())?;
    let classifier = model.as_classifier();
    let labels = classifier.labels();
    let mut w = BufWriter::new(File::create(&a.out)?);
    for (i, (truth, x)) in rows.iter().enumerate() {
        let p = classifier.predict(x)?;
        writeln!(w, "{i},{truth},{}", labels[p.class])?;
    }
    w.flush()?;
    Ok(())
}

fn update(a: UpdateArgs) -> fpnn::Result<()> {
    let mut model = match AnyModel::<f64>::load(&a.model)? {
        AnyModel::Fejer(m) => m,
        other => {
            return Err(Error::Parameter(format!(
                "update applies to fejer models only, `{}` is a {} model",
                a.model.display(),
                other.kind().name()
            )))
        }
    };
    let pca = load_sidecar(&a.model)?;
    for (label, x) in read_rows(&a.input, pca.as_ref())? {
        model.update(&x, &label, a.create_classes)?;
    }
    save_model(&model, &a.out)?;
    let (src, dst) = (pca_sidecar(&a.model), pca_sidecar(&a.out));
    if src != dst {
        match &pca {
            Some(t) => save_pca(t, &dst)?,
            None if dst.exists() => std::fs::remove_file(&dst)?,
            None => {}
        }
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> fpnn::Result<()> {
    let normalize = !a.input.no_normalize;
    let mut ds: Dataset<f64> = load_dataset(&a.input.features, normalize)?;
    let mut tuning = a.tuning_features.as_ref().map(|p| load_dataset::<f64>(p, normalize)).transpose()?;
    if let Some(path) = &a.pca_model {
        let pca = load_pca(path)?;
        ds = pca.apply_dataset(&ds)?;
        tuning = tuning.map(|t| pca.apply_dataset(&t)).transpose()?;
    }
    let defaults = ParamGrid::default();
    let grid = ParamGrid {
        sigmas: a.sigma.unwrap_or(defaults.sigmas),
        ks: a.k.unwrap_or(defaults.ks),
        centroids: a.centroids.unwrap_or(defaults.centroids),
        cutoff: a.cutoff.policy(a.jmax),
    };
    let cfg = SplitConfig::new(a.ratio, a.splits, a.seed)?;
    let result = run_benchmark(&ds, &cfg, &grid, &a.classifiers, tuning.as_ref())?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    result.write_csv(&mut w)?;
    w.flush()?;
    write!(out, "{}", result.table())?;
    Ok(())
}

fn tune_cutoff(a: TuneCutoffArgs, out: &mut dyn Write) -> fpnn::Result<()> {
    let ds: Dataset<f64> = load_dataset(&a.input.features, !a.input.no_normalize)?;
    let j = match a.policy {
        PolicyArg::Fixed => fixed_cutoff(ds.len(), ds.n_classes()),
        PolicyArg::Hart => select_cutoff(&ds, a.jmax)?.global,
    };
    writeln!(out, "{j}")?;
    Ok(())
}

fn pca_fit(a: PcaFitArgs) -> fpnn::Result<()> {
    let ds: Dataset<f64> = load_dataset(&a.input.features, !a.input.no_normalize)?;
    save_pca(&fit_pca(&ds, a.components)?, &a.out)
}
