//! Saving and loading any trained classifier.
//!
//! The Fejér network uses its own `FPNN v1` format. Instance-based baselines
//! share a simple layout:
//!
//! ```text
//! <PNN|RPNN|KNN|CENTROID> v1
//! classes <C> dim <D> [sigma <s>] [k <k>]
//! class <label> count <R_c> rows <n>
//! <n lines of D numbers>
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::baselines::{CentroidModel, GaussianPnnModel, KnnModel, ReducedPnnModel};
use crate::bench::ClassifierKind;
use crate::classifier::{Classifier, Prediction};
use crate::error::{Error, Result};
use crate::features::{Dataset, NormalizedFeature};
use crate::fejer_pnn::{read_model, write_model, FejerPnnModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T> {
    Fejer(FejerPnnModel<T>),
    Pnn(GaussianPnnModel<T>),
    ReducedPnn(ReducedPnnModel<T>),
    Knn(KnnModel<T>),
    Centroid(CentroidModel<T>),
}

impl<T: Scalar> AnyModel<T> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            AnyModel::Fejer(_) => ClassifierKind::Fejer,
            AnyModel::Pnn(_) => ClassifierKind::Pnn,
            AnyModel::ReducedPnn(_) => ClassifierKind::ReducedPnn,
            AnyModel::Knn(_) => ClassifierKind::Knn,
            AnyModel::Centroid(_) => ClassifierKind::Centroid,
        }
    }

    pub fn as_classifier(&self) -> &dyn Classifier<T> {
        match self {
            AnyModel::Fejer(m) => m,
            AnyModel::Pnn(m) => m,
            AnyModel::ReducedPnn(m) => m,
            AnyModel::Knn(m) => m,
            AnyModel::Centroid(m) => m,
        }
    }

    pub fn predict(&self, x: &NormalizedFeature<T>) -> Result<Prediction<T>> {
        self.as_classifier().predict(x)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let labels = self.as_classifier().labels();
        let dim = self.as_classifier().dim();
        let rows_block = |w: &mut W, tag: &str, params: String, classes: Vec<(&str, usize, Vec<&[T]>)>| -> Result<()> {
            writeln!(w, "{tag} v1")?;
            writeln!(w, "classes {} dim {dim}{params}", classes.len())?;
            for (label, count, rows) in classes {
                writeln!(w, "class {label} count {count} rows {}", rows.len())?;
                for r in rows {
                    writeln!(w, "{}", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))?;
                }
            }
            Ok(())
        };
        match self {
            AnyModel::Fejer(m) => write_model(m, w),
            AnyModel::Pnn(m) => {
                let classes = m.export().into_iter().map(|(l, n, p)| (l, n, p.chunks_exact(dim).collect())).collect();
                rows_block(&mut w, "PNN", format!(" sigma {}", m.sigma()), classes)
            }
            AnyModel::ReducedPnn(m) => {
                let classes = m.export().into_iter().map(|(l, n, p)| (l, n, p.chunks_exact(dim).collect())).collect();
                rows_block(&mut w, "RPNN", format!(" sigma {}", m.sigma()), classes)
            }
            AnyModel::Knn(m) => {
                let classes = m.export().into_iter().map(|(l, rows)| (l, rows.len(), rows)).collect();
                rows_block(&mut w, "KNN", format!(" k {}", m.k()), classes)
            }
            AnyModel::Centroid(m) => {
                let classes = labels
                    .iter()
                    .zip(m.class_counts())
                    .zip(m.centroids())
                    .map(|((l, &n), c)| (*l, n, vec![c.as_slice()]))
                    .collect();
                rows_block(&mut w, "CENTROID", String::new(), classes)
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(path.as_ref(), buf).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text =
            fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or_default();
        let (tag, version) =
            header.split_once(' ').ok_or_else(|| Error::Format(format!("not a model file (header `{header}`)")))?;
        if tag == "FPNN" {
            return read_model(text.as_bytes()).map(AnyModel::Fejer);
        }
        if !["PNN", "RPNN", "KNN", "CENTROID"].contains(&tag) {
            return Err(Error::Format(format!("unknown model type `{tag}`")));
        }
        if version != "v1" {
            return Err(Error::Version(version.to_string()));
        }
        let block = RowsBlock::<T>::parse(text)?;
        match tag {
            "PNN" => {
                let ds = block.dataset()?;
                Ok(AnyModel::Pnn(GaussianPnnModel::train(&ds, block.param("sigma")?)?))
            }
            "RPNN" => {
                let sigma = block.param("sigma")?;
                let (labels, counts, rows): (Vec<_>, Vec<_>, Vec<_>) = block.classes.into_iter().fold(
                    (Vec::new(), Vec::new(), Vec::new()),
                    |(mut l, mut c, mut r), (label, count, rows)| {
                        l.push(label);
                        c.push(count);
                        r.push(rows);
                        (l, c, r)
                    },
                );
                Ok(AnyModel::ReducedPnn(ReducedPnnModel::from_centroids(labels, counts, rows, sigma)?))
            }
            "KNN" => {
                let k: T = block.param("k")?;
                let k = k.to_usize().ok_or_else(|| Error::Format("invalid k".into()))?;
                Ok(AnyModel::Knn(KnnModel::train(&block.dataset()?, k)?))
            }
            _ => {
                let mut labels = Vec::new();
                let mut counts = Vec::new();
                let mut cents = Vec::new();
                for (label, count, mut rows) in block.classes {
                    if rows.len() != 1 {
                        return Err(Error::Format("centroid model needs exactly one row per class".into()));
                    }
                    labels.push(label);
                    counts.push(count);
                    cents.push(rows.remove(0));
                }
                Ok(AnyModel::Centroid(CentroidModel::from_centroids(labels, counts, cents)?))
            }
        }
    }
}

struct RowsBlock<T> {
    params: Vec<(String, String)>,
    classes: Vec<(String, usize, Vec<Vec<T>>)>,
}

impl<T: Scalar> RowsBlock<T> {
    fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().skip(1);
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("file truncated before {what}")));
        let shape = next("shape line")?;
        let toks: Vec<&str> = shape.split(' ').collect();
        if !toks.len().is_multiple_of(2) {
            return Err(Error::Format(format!("bad shape line `{shape}`")));
        }
        let params: Vec<(String, String)> = toks.chunks(2).map(|p| (p[0].to_string(), p[1].to_string())).collect();
        let get = |key: &str| -> Result<usize> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .and_then(|(_, v)| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("missing `{key}` in shape line")))
        };
        let (n_classes, dim) = (get("classes")?, get("dim")?);
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let head = next("class header")?;
            let parsed = head.strip_prefix("class ").and_then(|rest| {
                let (rest, rows) = rest.rsplit_once(" rows ")?;
                let (label, count) = rest.rsplit_once(" count ")?;
                Some((label.to_string(), count.parse::<usize>().ok()?, rows.parse::<usize>().ok()?))
            });
            let (label, count, n_rows) = parsed.ok_or_else(|| Error::Format(format!("bad class header `{head}`")))?;
            let rows = (0..n_rows)
                .map(|_| {
                    let line = next("data row")?;
                    let row = line
                        .split(' ')
                        .map(|t| t.parse::<T>().map_err(|_| Error::Format(format!("invalid number `{t}`"))))
                        .collect::<Result<Vec<T>>>()?;
                    if row.len() != dim {
                        return Err(Error::Format(format!("expected {dim} values, found {}", row.len())));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            classes.push((label, count, rows));
        }
        Ok(RowsBlock { params, classes })
    }

    fn param(&self, key: &str) -> Result<T> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("missing `{key}` in shape line")))
    }

    fn dataset(&self) -> Result<Dataset<T>> {
        let mut rows = Vec::new();
        for (label, _, data) in &self.classes {
            for r in data {
                rows.push((
                    label.clone(),
                    NormalizedFeature::from_bounded(r.clone()).map_err(|e| Error::Format(e.to_string()))?,
                ));
            }
        }
        Dataset::from_labeled(rows)
    }
}
