//! Feature ingestion: L2 normalization, labeled datasets and the feature CSV
//! reader.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

const ZERO_NORM_EPS: f64 = 1e-12;

/// Feature vector whose entries all lie in `[-1, 1]`.
///
/// Produced either by [`l2_normalize`] (unit norm) or by
/// [`NormalizedFeature::from_bounded`] for data that is already scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFeature<T>(Vec<T>);

impl<T: Scalar> NormalizedFeature<T> {
    /// Wraps values that are finite and inside `[-1, 1]` without rescaling.
    pub fn from_bounded(values: Vec<T>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if v.abs() > T::one() {
                return Err(Error::OutOfDomain(v.to_f64_lossy()));
            }
        }
        Ok(NormalizedFeature(values))
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        l2_norm(&self.0)
    }
}

impl<T> AsRef<[T]> for NormalizedFeature<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

pub(crate) fn l2_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn l2_normalize<T: Scalar>(v: &[T]) -> Result<NormalizedFeature<T>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = l2_norm(v);
    if norm < cst(ZERO_NORM_EPS) {
        return Err(Error::ZeroVector(norm.to_f64_lossy()));
    }
    // Rounding can push a dominant coordinate a hair past 1.
    let out = v.iter().map(|&x| (x / norm).max(-T::one()).min(T::one())).collect();
    Ok(NormalizedFeature(out))
}

/// Class label token and its position in the sorted label order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassLabel {
    pub label: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassData<T> {
    pub label: ClassLabel,
    pub instances: Vec<NormalizedFeature<T>>,
}

impl<T> ClassData<T> {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Labeled instances grouped by class, classes sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    classes: Vec<ClassData<T>>,
    dim: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Groups `(label, feature)` pairs by label. Instance order within a class
    /// follows input order.
    pub fn from_labeled<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, NormalizedFeature<T>)>,
    {
        let mut groups: BTreeMap<String, Vec<NormalizedFeature<T>>> = BTreeMap::new();
        let mut dim = None;
        for (label, x) in rows {
            validate_label(&label).map_err(|msg| Error::Parse { line: 0, msg })?;
            match dim {
                None => dim = Some(x.dim()),
                Some(d) if d != x.dim() => return Err(Error::DimensionMismatch { expected: d, got: x.dim() }),
                _ => {}
            }
            groups.entry(label).or_default().push(x);
        }
        let dim = dim.ok_or(Error::EmptyDataset)?;
        if dim == 0 {
            return Err(Error::Dimension("feature dimension must be at least 1".into()));
        }
        let classes = groups
            .into_iter()
            .enumerate()
            .map(|(index, (label, instances))| ClassData { label: ClassLabel { label, index }, instances })
            .collect();
        Ok(Dataset { classes, dim })
    }

    /// Parses a feature CSV stream.
    pub fn from_csv_reader<R: BufRead>(reader: R, normalize: bool) -> Result<Self> {
        let rows = read_feature_rows(reader)?;
        Self::from_rows(rows, normalize)
    }

    pub fn from_rows(rows: Vec<LabeledRow<T>>, normalize: bool) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let x = row.to_feature(normalize).map_err(|e| Error::Parse { line: row.line, msg: e.to_string() })?;
            out.push((row.label, x));
        }
        Self::from_labeled(out)
    }

    pub fn classes(&self) -> &[ClassData<T>] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Total instance count `R`.
    pub fn len(&self) -> usize {
        self.classes.iter().map(ClassData::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(ClassData::len).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.label.clone()).collect()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.label.label.as_str().cmp(label)).ok()
    }

    /// All instances as `(class index, feature)`, class by class.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &NormalizedFeature<T>)> {
        self.classes.iter().flat_map(|c| c.instances.iter().map(move |x| (c.label.index, x)))
    }

    /// Applies `f` to every instance, keeping labels and order.
    pub fn try_map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&NormalizedFeature<T>) -> Result<NormalizedFeature<T>>,
    {
        let mut dim = None;
        let mut classes = Vec::with_capacity(self.classes.len());
        for c in &self.classes {
            let instances = c.instances.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
            if let Some(x) = instances.first() {
                dim = Some(x.dim());
            }
            classes.push(ClassData { label: c.label.clone(), instances });
        }
        Ok(Dataset { classes, dim: dim.unwrap_or(self.dim) })
    }

    /// Builds a dataset that keeps this dataset's label list, including classes
    /// that end up with no instances. Used by the splitter.
    pub(crate) fn with_instances(&self, per_class: Vec<Vec<NormalizedFeature<T>>>) -> Self {
        let classes = self
            .classes
            .iter()
            .zip(per_class)
            .map(|(c, instances)| ClassData { label: c.label.clone(), instances })
            .collect();
        Dataset { classes, dim: self.dim }
    }
}

/// One data line of a feature CSV, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow<T> {
    pub line: usize,
    pub label: String,
    pub values: Vec<T>,
}

impl<T: Scalar> LabeledRow<T> {
    pub fn to_feature(&self, normalize: bool) -> Result<NormalizedFeature<T>> {
        if normalize {
            l2_normalize(&self.values)
        } else {
            NormalizedFeature::from_bounded(self.values.clone())
        }
    }
}

fn validate_label(label: &str) -> Result<(), String> {
    if label.is_empty() {
        return Err("empty label".into());
    }
    if label.contains([',', '\n', '\r']) {
        return Err(format!("label `{label}` contains a comma or line break"));
    }
    Ok(())
}

/// Reads `<label>,<f_1>,...,<f_D>` lines in file order. Lines starting with
/// `#` and blank lines are skipped; `D` is fixed by the first data line.
pub fn read_feature_rows<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<LabeledRow<T>>> {
    let mut rows = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default().trim().to_string();
        validate_label(&label).map_err(|msg| Error::Parse { line: line_no, msg })?;
        let values = fields
            .map(|f| {
                let f = f.trim();
                let v: T =
                    f.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("invalid number `{f}`") })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse { line: line_no, msg: format!("non-finite value `{f}`") })
                }
            })
            .collect::<Result<Vec<T>>>()?;
        if values.is_empty() {
            return Err(Error::Parse { line: line_no, msg: "row has no feature values".into() });
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {d} feature values, found {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(LabeledRow { line: line_no, label, values });
    }
    Ok(rows)
}

/// Loads a feature CSV file into a [`Dataset`].
pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>, normalize: bool) -> Result<Dataset<T>> {
    let file = File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    Dataset::from_csv_reader(BufReader::new(file), normalize)
}
