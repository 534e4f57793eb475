//! Line-oriented text format for trained models.
//!
//! ```text
//! FPNN v1
//! classes <C> dim <D> cutoff <J>
//! class <label> count <R_c>
//! W_cos[0] .. W_cos[J] W_sin[1] .. W_sin[J]     (one line per dimension)
//! ```
//!
//! Numbers are written with `Display`, the shortest decimal that parses back
//! to the same value, so a load/save cycle reproduces the file byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ClassWeights, FejerPnnModel};
use crate::error::{Error, Result};
use crate::features::ClassLabel;
use crate::kernels::Cutoff;
use crate::scalar::Scalar;

pub const MODEL_HEADER: &str = "FPNN v1";

pub fn write_model<T: Scalar, W: Write>(m: &FejerPnnModel<T>, mut w: W) -> Result<()> {
    writeln!(w, "{MODEL_HEADER}")?;
    writeln!(w, "classes {} dim {} cutoff {}", m.classes.len(), m.dim, m.cutoff)?;
    let stride = m.stride();
    let mut line = String::new();
    for class in &m.classes {
        writeln!(w, "class {} count {}", class.label.label, class.count)?;
        for block in class.weights.chunks_exact(stride) {
            line.clear();
            for (i, v) in block.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                use std::fmt::Write as _;
                write!(line, "{v}").expect("writing to a String");
            }
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn save_model<T: Scalar>(m: &FejerPnnModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    let mut w = BufWriter::new(file);
    write_model(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<FejerPnnModel<T>> {
    let file = File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_model(BufReader::new(file))
}

fn field<V: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<V> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Format(format!("missing or invalid {what}")))
}

/// Reads one LF-terminated line; a missing terminator means the file was cut.
fn read_line<R: BufRead>(r: &mut R) -> Result<Option<String>> {
    let mut buf = String::new();
    if r.read_line(&mut buf)? == 0 {
        return Ok(None);
    }
    match buf.strip_suffix('\n') {
        Some(line) => Ok(Some(line.to_string())),
        None => Err(Error::Format("file truncated mid-line".into())),
    }
}

pub fn read_model<T: Scalar, R: BufRead>(mut r: R) -> Result<FejerPnnModel<T>> {
    let mut next = |what: &str| -> Result<String> {
        read_line(&mut r)?.ok_or_else(|| Error::Format(format!("file truncated before {what}")))
    };

    let header = next("header")?;
    match header.strip_prefix("FPNN ") {
        Some("v1") => {}
        Some(v) if v.starts_with('v') => return Err(Error::Version(v.to_string())),
        _ => return Err(Error::Format(format!("not a model file (header `{header}`)"))),
    }

    let shape = next("shape line")?;
    let toks: Vec<&str> = shape.split(' ').collect();
    let (n_classes, dim, j): (usize, usize, usize) = match toks.as_slice() {
        ["classes", c, "dim", d, "cutoff", j] => {
            (field(Some(c), "class count")?, field(Some(d), "dimension")?, field(Some(j), "cut-off")?)
        }
        _ => return Err(Error::Format(format!("bad shape line `{shape}`"))),
    };
    let cutoff = Cutoff::new(j).map_err(|e| Error::Format(e.to_string()))?;
    if dim == 0 || n_classes == 0 {
        return Err(Error::Format("model needs at least one class and one dimension".into()));
    }
    let stride = 2 * j + 1;

    let mut classes: Vec<ClassWeights<T>> = Vec::with_capacity(n_classes);
    for index in 0..n_classes {
        let head = next("class header")?;
        let (label, count) = head
            .strip_prefix("class ")
            .and_then(|rest| rest.rsplit_once(" count "))
            .ok_or_else(|| Error::Format(format!("bad class header `{head}`")))?;
        let count: usize = field(Some(count), "instance count")?;
        if label.is_empty() || label.contains(',') {
            return Err(Error::Format(format!("invalid class label `{label}`")));
        }
        if let Some(prev) = classes.last() {
            if prev.label.label.as_str() >= label {
                return Err(Error::Format(format!("class `{label}` out of sorted order")));
            }
        }
        let mut weights = Vec::with_capacity(dim * stride);
        for _ in 0..dim {
            let row = next("weight row")?;
            let before = weights.len();
            for tok in row.split(' ') {
                weights.push(tok.parse::<T>().map_err(|_| Error::Format(format!("invalid weight `{tok}`")))?);
            }
            if weights.len() - before != stride {
                return Err(Error::Format(format!(
                    "expected {stride} weights per row, found {}",
                    weights.len() - before
                )));
            }
        }
        classes.push(ClassWeights { label: ClassLabel { label: label.to_string(), index }, count, weights });
    }
    let mut rest = String::new();
    r.read_to_string(&mut rest)?;
    if !rest.trim().is_empty() {
        return Err(Error::Format("unexpected content after the last class".into()));
    }
    Ok(FejerPnnModel::from_parts(cutoff, dim, classes))
}
