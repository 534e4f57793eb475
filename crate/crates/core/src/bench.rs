//! Repeated stratified random-subsampling evaluation.
//!
//! For every split each selected classifier is trained on the training side,
//! run once over the test side as warm-up, then timed per sample while its
//! predictions are scored by mean per-class recall. Hyper-parameter grids are
//! resolved beforehand on a separate tuning dataset with the same protocol.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{mix64, CentroidModel, GaussianPnnModel, KnnModel, ReducedPnnModel};
use crate::classifier::Classifier;
use crate::density::{fixed_cutoff, select_cutoff};
use crate::error::{Error, Result};
use crate::features::{Dataset, NormalizedFeature};
use crate::fejer_pnn::FejerPnnModel;
use crate::kernels::Cutoff;
use crate::scalar::Scalar;

/// Name written to result headers for the split generator.
pub const RNG_NAME: &str = "chacha8-splitmix64";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Fraction of each class used for training.
    pub ratio: f64,
    pub n_splits: usize,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(ratio: f64, n_splits: usize, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Parameter(format!("split ratio must be in (0, 1), got {ratio}")));
        }
        if n_splits == 0 {
            return Err(Error::Parameter("at least one split is required".into()));
        }
        Ok(SplitConfig { ratio, n_splits, seed })
    }

    /// Generator for split `i`; independent of how many splits are run.
    pub fn split_rng(&self, i: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix64(self.seed ^ i as u64))
    }
}

/// Training-set size for a class of `n` instances: `round(n * ratio)` with
/// halves rounded up, clamped to `1..=n-1`.
pub fn train_size(n: usize, ratio: f64) -> usize {
    let t = (n as f64 * ratio + 0.5).floor() as usize;
    t.clamp(1, n.saturating_sub(1).max(1))
}

/// Splits every class independently into training and test parts.
pub fn stratified_split<T: Scalar, R: rand::Rng + ?Sized>(
    ds: &Dataset<T>,
    ratio: f64,
    rng: &mut R,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if let Some(c) = ds.classes().iter().find(|c| c.len() < 2) {
        return Err(Error::ClassTooSmall { label: c.label.label.clone(), count: c.len() });
    }
    let mut train = Vec::with_capacity(ds.n_classes());
    let mut test = Vec::with_capacity(ds.n_classes());
    for class in ds.classes() {
        let n = class.len();
        let mut chosen = vec![false; n];
        for i in sample(rng, n, train_size(n, ratio)) {
            chosen[i] = true;
        }
        let (tr, te): (Vec<_>, Vec<_>) = class.instances.iter().zip(&chosen).partition(|(_, &c)| c);
        train.push(tr.into_iter().map(|(x, _)| x.clone()).collect());
        test.push(te.into_iter().map(|(x, _)| x.clone()).collect());
    }
    Ok((ds.with_instances(train), ds.with_instances(test)))
}

/// Average over classes of the fraction of each class predicted correctly.
pub fn mean_recall(predicted: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch { predicted: predicted.len(), truth: truth.len() });
    }
    let mut total = vec![0usize; n_classes];
    let mut correct = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if t >= n_classes {
            return Err(Error::Parameter(format!("label index {t} >= class count {n_classes}")));
        }
        total[t] += 1;
        correct[t] += (p == t) as usize;
    }
    if let Some(c) = total.iter().position(|&n| n == 0) {
        return Err(Error::MissingClass(c));
    }
    let sum: f64 = correct.iter().zip(&total).map(|(&k, &n)| k as f64 / n as f64).sum();
    Ok(sum / n_classes as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Fejer,
    Pnn,
    ReducedPnn,
    Knn,
    Centroid,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Fejer,
        ClassifierKind::Pnn,
        ClassifierKind::ReducedPnn,
        ClassifierKind::Knn,
        ClassifierKind::Centroid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Fejer => "fejer",
            ClassifierKind::Pnn => "pnn",
            ClassifierKind::ReducedPnn => "reduced-pnn",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Centroid => "centroid",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown classifier `{s}`")))
    }
}

/// How the Fejér network's cut-off is chosen from its training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffPolicy {
    /// `ceil(2 max((R/C)^(1/3), 1))`.
    Fixed,
    /// Median of per-(class, feature) Hart optima searched up to `j_max`.
    HartMedian {
        j_max: Cutoff,
    },
    Explicit(Cutoff),
}

impl CutoffPolicy {
    pub fn resolve<T: Scalar>(&self, ds: &Dataset<T>) -> Result<Cutoff> {
        match *self {
            CutoffPolicy::Fixed => Ok(fixed_cutoff(ds.len(), ds.n_classes())),
            CutoffPolicy::HartMedian { j_max } => Ok(select_cutoff(ds, j_max)?.global),
            CutoffPolicy::Explicit(j) => Ok(j),
        }
    }
}

impl fmt::Display for CutoffPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffPolicy::Fixed => f.write_str("fixed"),
            CutoffPolicy::HartMedian { j_max } => write!(f, "hart(jmax={j_max})"),
            CutoffPolicy::Explicit(j) => write!(f, "{j}"),
        }
    }
}

/// Candidate hyper-parameters per classifier family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub sigmas: Vec<f64>,
    pub ks: Vec<usize>,
    pub centroids: Vec<usize>,
    pub cutoff: CutoffPolicy,
}

impl Default for ParamGrid {
    /// sigma in {0.001, 0.005, 0.010, ..., 1.0}, k in {1, 3, 5},
    /// centroids in {1, 3, 5, 10} and the fixed cut-off rule.
    fn default() -> Self {
        let mut sigmas = vec![0.001];
        sigmas.extend((1..=200).map(|i| i as f64 * 0.005));
        ParamGrid { sigmas, ks: vec![1, 3, 5], centroids: vec![1, 3, 5, 10], cutoff: CutoffPolicy::Fixed }
    }
}

impl ParamGrid {
    /// Grid with a single value per parameter.
    pub fn single(sigma: f64, k: usize, centroids: usize, cutoff: CutoffPolicy) -> Self {
        ParamGrid { sigmas: vec![sigma], ks: vec![k], centroids: vec![centroids], cutoff }
    }

    fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.ks.is_empty() || self.centroids.is_empty() {
            return Err(Error::Parameter("parameter grids must be non-empty".into()));
        }
        Ok(())
    }

    /// Every parameter combination relevant to `kind`, in grid order.
    pub fn candidates(&self, kind: ClassifierKind) -> Vec<Params> {
        let base = Params { sigma: self.sigmas[0], k: self.ks[0], centroids: self.centroids[0], cutoff: self.cutoff };
        match kind {
            ClassifierKind::Fejer | ClassifierKind::Centroid => vec![base],
            ClassifierKind::Pnn => self.sigmas.iter().map(|&sigma| Params { sigma, ..base }).collect(),
            ClassifierKind::Knn => self.ks.iter().map(|&k| Params { k, ..base }).collect(),
            ClassifierKind::ReducedPnn => self
                .centroids
                .iter()
                .flat_map(|&centroids| self.sigmas.iter().map(move |&sigma| Params { sigma, centroids, ..base }))
                .collect(),
        }
    }
}

/// One resolved parameter setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub sigma: f64,
    pub k: usize,
    pub centroids: usize,
    pub cutoff: CutoffPolicy,
}

impl Params {
    pub fn describe(&self, kind: ClassifierKind) -> String {
        match kind {
            ClassifierKind::Fejer => format!("cutoff={}", self.cutoff),
            ClassifierKind::Pnn => format!("sigma={}", self.sigma),
            ClassifierKind::ReducedPnn => format!("sigma={} centroids={}", self.sigma, self.centroids),
            ClassifierKind::Knn => format!("k={}", self.k),
            ClassifierKind::Centroid => String::new(),
        }
    }
}

/// Trains one classifier of `kind` on `train`.
pub fn build_classifier<T: Scalar>(
    kind: ClassifierKind,
    params: &Params,
    train: &Dataset<T>,
    seed: u64,
) -> Result<Box<dyn Classifier<T>>> {
    let sigma = T::from_f64_lossy(params.sigma);
    Ok(match kind {
        ClassifierKind::Fejer => Box::new(FejerPnnModel::train(train, params.cutoff.resolve(train)?)?),
        ClassifierKind::Pnn => Box::new(GaussianPnnModel::train(train, sigma)?),
        ClassifierKind::ReducedPnn => Box::new(ReducedPnnModel::train(train, params.centroids, sigma, seed)?),
        ClassifierKind::Knn => Box::new(KnnModel::train(train, params.k)?),
        ClassifierKind::Centroid => Box::new(CentroidModel::train(train)?),
    })
}

/// Predicts every test instance once and returns `(predicted, truth)`.
fn predict_all<T: Scalar>(model: &dyn Classifier<T>, test: &[(usize, &NormalizedFeature<T>)]) -> Result<Vec<usize>> {
    test.iter().map(|(_, x)| model.predict(x).map(|p| p.class)).collect()
}

/// Mean prediction latency in milliseconds after one untimed warm-up pass,
/// along with the predicted classes of the timed pass.
pub fn timed_predictions<T: Scalar>(
    model: &dyn Classifier<T>,
    test: &[(usize, &NormalizedFeature<T>)],
) -> Result<(Vec<usize>, f64)> {
    predict_all(model, test)?;
    let mut predicted = Vec::with_capacity(test.len());
    let mut elapsed = 0.0f64;
    for (_, x) in test {
        let start = Instant::now();
        let p = model.predict(x);
        elapsed += start.elapsed().as_secs_f64();
        predicted.push(p?.class);
    }
    let ms = if test.is_empty() { 0.0 } else { elapsed * 1e3 / test.len() as f64 };
    Ok((predicted, ms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub classifier: ClassifierKind,
    pub split: usize,
    pub recall: f64,
    pub mean_predict_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean_recall: f64,
    pub std_recall: f64,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// Mean and sample standard deviation (`n - 1`); the deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: SplitConfig,
    /// Classifiers in run order with the parameters used.
    pub classifiers: Vec<(ClassifierKind, Params)>,
    pub records: Vec<SplitRecord>,
}

impl BenchResult {
    pub fn records_for(&self, kind: ClassifierKind) -> impl Iterator<Item = &SplitRecord> {
        self.records.iter().filter(move |r| r.classifier == kind)
    }

    pub fn aggregate(&self, kind: ClassifierKind) -> Option<Aggregate> {
        let recalls: Vec<f64> = self.records_for(kind).map(|r| r.recall).collect();
        if recalls.is_empty() {
            return None;
        }
        let times: Vec<f64> = self.records_for(kind).map(|r| r.mean_predict_ms).collect();
        let (mean_recall, std_recall) = mean_std(&recalls);
        let (mean_ms, std_ms) = mean_std(&times);
        Some(Aggregate { mean_recall, std_recall, mean_ms, std_ms })
    }

    /// Results CSV: a `# seed=..` comment, one `# params` comment per
    /// classifier, per-split rows and one aggregate row per classifier.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={} rng={} ratio={}", self.config.seed, RNG_NAME, self.config.ratio)?;
        for (kind, params) in &self.classifiers {
            let desc = params.describe(*kind);
            if desc.is_empty() {
                writeln!(w, "# params {kind}")?;
            } else {
                writeln!(w, "# params {kind} {desc}")?;
            }
        }
        writeln!(w, "classifier,split,recall,mean_predict_ms")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{:.6}", r.classifier, r.split, r.recall, r.mean_predict_ms)?;
        }
        for (kind, _) in &self.classifiers {
            if let Some(a) = self.aggregate(*kind) {
                writeln!(w, "{kind},AGG,{:.6}±{:.6},{:.6}±{:.6}", a.mean_recall, a.std_recall, a.mean_ms, a.std_ms)?;
            }
        }
        Ok(())
    }

    /// Accuracy and time table, one row per classifier, values as mean ± std.
    pub fn table(&self) -> String {
        let mut out = format!("{:<12} {:>20} {:>22}\n", "classifier", "mean recall, %", "time per sample, ms");
        for (kind, _) in &self.classifiers {
            if let Some(a) = self.aggregate(*kind) {
                let acc = format!("{:.2} ± {:.2}", 100.0 * a.mean_recall, 100.0 * a.std_recall);
                let ms = format!("{:.4} ± {:.4}", a.mean_ms, a.std_ms);
                out.push_str(&format!("{:<12} {:>20} {:>22}\n", kind.name(), acc, ms));
            }
        }
        out
    }
}

/// Mean recall over the splits of `cfg`, without timing.
fn protocol_recall<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &SplitConfig,
    kind: ClassifierKind,
    params: &Params,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..cfg.n_splits {
        let (train, test) = stratified_split(ds, cfg.ratio, &mut cfg.split_rng(i))?;
        let model = build_classifier(kind, params, &train, mix64(cfg.seed ^ i as u64))?;
        let test: Vec<_> = test.iter().collect();
        let truth: Vec<usize> = test.iter().map(|(c, _)| *c).collect();
        total += mean_recall(&predict_all(model.as_ref(), &test)?, &truth, ds.n_classes())?;
    }
    Ok(total / cfg.n_splits as f64)
}

/// Picks the parameters of `kind` for the main runs. Multi-valued grids are
/// resolved on `tuning` only.
pub fn tune<T: Scalar>(
    kind: ClassifierKind,
    grid: &ParamGrid,
    cfg: &SplitConfig,
    tuning: Option<&Dataset<T>>,
) -> Result<Params> {
    grid.validate()?;
    let candidates = grid.candidates(kind);
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let tuning = tuning.ok_or_else(|| Error::MissingTuningSet(kind.name().to_string()))?;
    let mut best: Option<(f64, Params)> = None;
    for p in candidates {
        let r = protocol_recall(tuning, cfg, kind, &p)?;
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, p));
        }
    }
    Ok(best.expect("non-empty candidates").1)
}

pub fn run_benchmark<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &SplitConfig,
    grid: &ParamGrid,
    classifiers: &[ClassifierKind],
    tuning: Option<&Dataset<T>>,
) -> Result<BenchResult> {
    if classifiers.is_empty() {
        return Err(Error::Parameter("no classifiers selected".into()));
    }
    let chosen = classifiers.iter().map(|&k| tune(k, grid, cfg, tuning).map(|p| (k, p))).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(cfg.n_splits * chosen.len());
    for i in 0..cfg.n_splits {
        let (train, test) = stratified_split(ds, cfg.ratio, &mut cfg.split_rng(i))?;
        let test: Vec<_> = test.iter().collect();
        let truth: Vec<usize> = test.iter().map(|(c, _)| *c).collect();
        for (kind, params) in &chosen {
            let model = build_classifier(*kind, params, &train, mix64(cfg.seed ^ i as u64))?;
            let (predicted, ms) = timed_predictions(model.as_ref(), &test)?;
            records.push(SplitRecord {
                classifier: *kind,
                split: i,
                recall: mean_recall(&predicted, &truth, ds.n_classes())?,
                mean_predict_ms: ms,
            });
        }
    }
    Ok(BenchResult { config: *cfg, classifiers: chosen, records })
}
