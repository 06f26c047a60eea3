//! LIBSVM text format: `label idx:val idx:val ...`, 1-based ascending indices.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::LossKind;
use crate::sparse::{CsrMatrix, Dataset};

struct RawFile {
    labels: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    max_index: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_lines<R: BufRead>(reader: R) -> Result<RawFile> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut max_index = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "label is not finite"));
        }
        let row = labels.len();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index '{idx}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if idx <= prev {
                return Err(parse_err(
                    lineno,
                    format!("index {idx} not ascending after {prev}"),
                ));
            }
            prev = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value '{val}'")))?;
            if !val.is_finite() {
                return Err(parse_err(
                    lineno,
                    format!("value at index {idx} is not finite"),
                ));
            }
            max_index = max_index.max(idx);
            triplets.push((row, idx - 1, val));
        }
        labels.push(label);
    }
    Ok(RawFile {
        labels,
        triplets,
        max_index,
    })
}

/// Binary labels map to `{0, 1}` (the larger one to 1). With more than two
/// classes, the first half of the sorted classes becomes 1 and the rest 0.
pub fn binarize_labels(labels: &[f64]) -> Vec<f64> {
    let mut classes: Vec<f64> = labels.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    match classes.len() {
        0 => Vec::new(),
        1 => labels.iter().map(|&l| f64::from(l > 0.0)).collect(),
        2 => labels.iter().map(|&l| f64::from(l == classes[1])).collect(),
        c => {
            let first_half = &classes[..c / 2];
            labels
                .iter()
                .map(|l| f64::from(first_half.iter().any(|k| k == l)))
                .collect()
        }
    }
}

pub fn parse_libsvm<R: BufRead>(reader: R, model: LossKind) -> Result<Dataset> {
    let raw = parse_lines(reader)?;
    let n = raw.labels.len();
    if n == 0 {
        return Err(parse_err(0, "no samples"));
    }
    let matrix = CsrMatrix::from_triplets(n, raw.max_index, &raw.triplets)?;
    let y = match model {
        LossKind::SquaredError => raw.labels,
        LossKind::Logistic => binarize_labels(&raw.labels),
    };
    Dataset::new(matrix, y)
}

pub fn load_libsvm(path: impl AsRef<Path>, model: LossKind) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file), model)
}
