//! The libsvm text format: `<label> <index>:<value> ...`, one sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::{Dataset, Label, SparseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept files with more than two distinct label values, mapping
    /// positive labels to `+1` and everything else to `-1`.
    pub binary_mapping: bool,
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), ParseOptions::default())
}

pub fn parse_libsvm<R: BufRead>(reader: R, opts: ParseOptions) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut distinct: Vec<f64> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let raw_label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(lineno, format!("invalid label `{label_tok}`")))?;
        if !distinct.contains(&raw_label) {
            distinct.push(raw_label);
            if distinct.len() > 2 && !opts.binary_mapping {
                return Err(parse_error(
                    lineno,
                    "more than two distinct labels; enable binary mapping to accept".into(),
                ));
            }
        }

        let mut entries = Vec::new();
        let mut prev = 0u32;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| parse_error(lineno, format!("invalid feature index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(lineno, format!("invalid feature value `{val}`")))?;
            if idx == 0 {
                return Err(parse_error(lineno, "feature indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(parse_error(
                    lineno,
                    format!("feature index {idx} does not increase (previous {prev})"),
                ));
            }
            prev = idx;
            entries.push((idx, val));
        }
        let (indices, values) = entries.into_iter().unzip();
        samples.push(SparseVector { indices, values });
        labels.push(Label::from_value(raw_label));
    }

    Dataset::new(samples, labels)
}

/// Loads a libsvm file, decompressing transparently when the name ends in `.gz`.
pub fn load_libsvm(path: impl AsRef<Path>, opts: ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_libsvm(BufReader::new(reader), opts)
}

/// Writes every sample with its ground-truth label. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    for (i, s) in data.samples().iter().enumerate() {
        write!(out, "{}", data.ground_truth(i))?;
        for (idx, v) in s.iter() {
            write!(out, " {idx}:{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}
