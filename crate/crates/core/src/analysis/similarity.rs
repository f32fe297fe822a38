use std::io::Write;

use serde::{Deserialize, Serialize};

use super::TrajectoryMatrix;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::telemetry::format_float;

/// `u.v / (|u| |v|)`, clamped to `[-1, 1]`. Two zero vectors have similarity 1;
/// a zero and a non-zero vector have similarity 0.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(match (nu == 0.0, nv == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (nu * nv)).clamp(-1.0, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!("expected a {n}x{n} matrix")));
        }
        Ok(Self { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labelled header row and first column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|&v| format_float(v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise cosine similarities of the matrix rows.
pub fn similarity_matrix(m: &TrajectoryMatrix, exec: Execution) -> Result<SimilarityMatrix> {
    let n = m.rows.len();
    let upper = map_indexed(n, exec, |i| {
        // a row is exactly similar to itself
        (i..n)
            .map(|j| if i == j { Ok(1.0) } else { cosine_similarity(&m.rows[i], &m.rows[j]) })
            .collect::<Result<Vec<f64>>>()
    });
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, s) in row?.into_iter().enumerate() {
            let j = i + k;
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    SimilarityMatrix::new(m.labels.clone(), values)
}
