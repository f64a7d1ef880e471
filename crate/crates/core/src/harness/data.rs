use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DruidError, Result};

/// One labelled sample with sparse features; indices are 1-based and
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: f64,
    pub features: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest feature index, `None` when no feature was seen.
    pub fn dim(&self) -> Option<usize> {
        self.rows.iter().filter_map(|r| r.features.last().map(|&(k, _)| k)).max()
    }

    pub fn require_dim(&self) -> Result<usize> {
        self.dim().ok_or_else(|| DruidError::Configuration("dataset has no features".into()))
    }

    /// Dense features of the selected rows in `d` columns.
    pub fn dense_features(&self, rows: &[usize], d: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(rows.len(), d);
        for (r, &idx) in rows.iter().enumerate() {
            for &(k, v) in &self.rows[idx].features {
                a[(r, k - 1)] = v;
            }
        }
        a
    }

    pub fn labels(&self, rows: &[usize]) -> DVector<f64> {
        DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.rows[i].label))
    }

    /// Labels mapped to `{0, 1}` by thresholding at the midpoint of the two
    /// distinct label values. A single distinct value maps to 1 when positive.
    pub fn binary_labels(&self) -> Result<Vec<f64>> {
        let mut distinct: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !distinct.contains(&r.label) {
                distinct.push(r.label);
                if distinct.len() > 2 {
                    return Err(DruidError::Configuration(format!(
                        "logistic problems need two label values, found {}, {}, {} ...",
                        distinct[0], distinct[1], distinct[2]
                    )));
                }
            }
        }
        let threshold = match distinct.as_slice() {
            [a, b] => 0.5 * (a + b),
            _ => 0.0,
        };
        Ok(self.rows.iter().map(|r| if r.label > threshold { 1.0 } else { 0.0 }).collect())
    }

    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            write!(out, "{}", r.label).unwrap();
            for &(k, v) in &r.features {
                write!(out, " {k}:{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> DruidError {
    DruidError::Parse { line, message: message.into() }
}

fn parse_line(text: &str, line: usize) -> Result<Option<Sample>> {
    let body = text.split('#').next().unwrap_or("");
    let mut tokens = body.split_whitespace();
    let Some(first) = tokens.next() else { return Ok(None) };
    let label: f64 = first.parse().map_err(|_| parse_err(line, format!("bad label `{first}`")))?;
    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (k, v) = tok.split_once(':').ok_or_else(|| parse_err(line, format!("expected idx:val, got `{tok}`")))?;
        let k: usize = k.parse().map_err(|_| parse_err(line, format!("bad index `{k}`")))?;
        if k < 1 {
            return Err(parse_err(line, "feature indices start at 1"));
        }
        if k <= last {
            return Err(parse_err(line, format!("index {k} does not increase")));
        }
        let v: f64 = v.parse().map_err(|_| parse_err(line, format!("bad value `{v}`")))?;
        features.push((k, v));
        last = k;
    }
    Ok(Some(Sample { label, features }))
}

/// Reads `<label> <idx>:<val> ...` lines. Blank lines are skipped and `#`
/// starts a comment.
pub fn parse_libsvm(reader: impl BufRead) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        if let Some(s) = parse_line(&line?, k + 1)? {
            rows.push(s);
        }
    }
    Ok(Dataset { rows })
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

/// Seeded shuffle followed by a contiguous split; the first `n mod m`
/// agents get one extra row.
pub fn partition(n: usize, m: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if m == 0 || n < m {
        return Err(DruidError::Configuration(format!("cannot split {n} rows across {m} agents")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / m, n % m);
    let mut parts = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let len = base + usize::from(i < extra);
        parts.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(parts)
}

/// Dense Gaussian-like regression data `b = A x₀ + noise` with a sparse
/// ground truth.
pub fn synthetic_regression(rows: usize, dim: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> =
        (0..dim).map(|k| if k % 3 == 0 { rng.gen_range(-2.0..2.0) } else { 0.0 }).collect();
    let rows = (0..rows)
        .map(|_| {
            let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let label = a.iter().zip(&truth).map(|(x, y)| x * y).sum::<f64>() + noise * rng.gen_range(-1.0..1.0);
            Sample { label, features: a.into_iter().enumerate().map(|(k, v)| (k + 1, v)).collect() }
        })
        .collect();
    Dataset { rows }
}

/// Binary classification data with labels in `{-1, +1}` from a noisy
/// linear separator.
pub fn synthetic_classification(rows: usize, dim: usize, noise: f64, seed: u64) -> Dataset {
    let mut ds = synthetic_regression(rows, dim, noise, seed);
    for r in &mut ds.rows {
        r.label = if r.label >= 0.0 { 1.0 } else { -1.0 };
    }
    ds
}
