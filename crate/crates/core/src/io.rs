//! File formats: chain JSON, edge-list CSV, profiles, brackets, curves, reports.

use crate::bounds::BoundReport;
use crate::exact::DistanceCurve;
use crate::profiles::{ProfileRecord, StepProfile};
use crate::subset::LambdaBracket;
use crate::{Error, MarkovChain, Real, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDocument {
    pub n: usize,
    pub kernel: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<String>>,
}

impl ChainDocument {
    pub fn from_chain<T: Real>(chain: &MarkovChain<T>) -> Self {
        let k = chain.kernel();
        Self {
            n: chain.n(),
            kernel: (0..chain.n())
                .map(|x| (0..chain.n()).map(|y| k[(x, y)].to_f64_lossy()).collect())
                .collect(),
            labels: chain.labels().map(|l| l.to_vec()),
        }
    }

    pub fn to_chain<T: Real>(&self) -> Result<MarkovChain<T>> {
        if self.kernel.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.kernel.len(),
            });
        }
        if let Some(bad) = self.kernel.iter().find(|r| r.len() != self.n) {
            return Err(Error::NotSquare {
                rows: self.n,
                cols: bad.len(),
            });
        }
        let k = DMatrix::from_fn(self.n, self.n, |x, y| T::lit(self.kernel[x][y]));
        let chain = MarkovChain::new(k)?;
        match &self.labels {
            Some(l) => chain.with_labels(l.clone()),
            None => Ok(chain),
        }
    }
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

pub fn chain_to_json<T: Real>(chain: &MarkovChain<T>) -> String {
    serde_json::to_string(&ChainDocument::from_chain(chain)).expect("chain document serializes")
}

pub fn chain_from_json<T: Real>(text: &str) -> Result<MarkovChain<T>> {
    let doc: ChainDocument = serde_json::from_str(text).map_err(parse_err)?;
    doc.to_chain()
}

/// Edge list with rows `src,dst,prob`; an optional header row is skipped.
///
/// Endpoints that are all integers are used as indices; otherwise they are
/// labels, numbered in order of first appearance.
pub fn chain_from_edge_csv<T: Real>(text: &str) -> Result<MarkovChain<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(parse_err)?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected src,dst,prob",
                i + 1
            )));
        }
        let prob: f64 = match rec[2].parse() {
            Ok(p) => p,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", i + 1))),
        };
        rows.push((rec[0].to_string(), rec[1].to_string(), prob));
    }
    if rows.is_empty() {
        return Err(Error::EmptyKernel);
    }
    let numeric = rows
        .iter()
        .all(|(a, b, _)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok());
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::with_capacity(rows.len());
    for (a, b, p) in rows {
        let mut id = |s: String| -> usize {
            if numeric {
                s.parse().unwrap()
            } else {
                *index.entry(s.clone()).or_insert_with(|| {
                    names.push(s);
                    names.len() - 1
                })
            }
        };
        let (x, y) = (id(a), id(b));
        edges.push((x, y, p));
    }
    let n = if numeric {
        edges.iter().map(|&(x, y, _)| x.max(y)).max().unwrap() + 1
    } else {
        names.len()
    };
    let mut k = DMatrix::zeros(n, n);
    for (x, y, p) in edges {
        k[(x, y)] += T::lit(p);
    }
    let chain = MarkovChain::new(k)?;
    if numeric {
        Ok(chain)
    } else {
        chain.with_labels(names)
    }
}

/// JSON when the text starts with `{`, edge-list CSV otherwise.
pub fn chain_from_str<T: Real>(text: &str) -> Result<MarkovChain<T>> {
    if text.trim_start().starts_with('{') {
        chain_from_json(text)
    } else {
        chain_from_edge_csv(text)
    }
}

fn csv_string<R: Serialize>(
    rows: impl IntoIterator<Item = R>,
    header: Option<&[&str]>,
) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h).map_err(parse_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(parse_err)?;
    }
    let bytes = w.into_inner().map_err(parse_err)?;
    String::from_utf8(bytes).map_err(parse_err)
}

/// `r,value,kind,source` rows.
pub fn profile_to_csv<T: Real>(profile: &StepProfile<T>) -> Result<String> {
    csv_string(profile.to_records(), None)
}

pub fn profile_to_json<T: Real>(profile: &StepProfile<T>) -> String {
    serde_json::to_string(&profile.to_records()).expect("records serialize")
}

pub fn profile_records_from_csv(text: &str) -> Result<Vec<ProfileRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(parse_err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketDocument {
    pub lambda0: f64,
    pub upper: f64,
    pub variational: Option<f64>,
}

pub fn bracket_to_json<T: Real>(b: &LambdaBracket<T>) -> String {
    let upper = b.upper.to_f64_lossy();
    let doc = BracketDocument {
        lambda0: b.lambda0.to_f64_lossy(),
        upper: if upper.is_finite() { upper } else { f64::MAX },
        variational: b.variational_estimate.map(|v| v.to_f64_lossy()),
    };
    serde_json::to_string(&doc).expect("bracket serializes")
}

pub fn subset_to_json(members: &[usize]) -> String {
    let mut m = members.to_vec();
    m.sort_unstable();
    serde_json::to_string(&m).expect("indices serialize")
}

pub fn subset_from_json(text: &str) -> Result<Vec<usize>> {
    let mut m: Vec<usize> = serde_json::from_str(text).map_err(parse_err)?;
    m.sort_unstable();
    m.dedup();
    Ok(m)
}

/// `t,value` rows.
pub fn curve_to_csv(curve: &DistanceCurve) -> Result<String> {
    csv_string(curve.points(), Some(&["t", "value"]))
}

pub fn reports_to_json(reports: &[BoundReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// `x` rounded to `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digits() {
        assert_eq!(fmt_sig(3.197224577336219, 9), "3.19722458");
        assert_eq!(fmt_sig(1234567.891, 9), "1234567.89");
        assert_eq!(fmt_sig(0.5, 9), "0.5");
        assert_eq!(fmt_sig(1.5e-9, 9), "1.50000000e-9");
    }

    #[test]
    fn labelled_edges() {
        let text = "src,dst,prob\na,b,1\nb,a,0.5\nb,b,0.5\n";
        let c: MarkovChain<f64> = chain_from_edge_csv(text).unwrap();
        assert_eq!(c.labels().unwrap(), ["a", "b"]);
        assert!((c.pi()[0] - 1.0 / 3.0).abs() < 1e-12);
    }
}
