use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::format_float;

/// Final errors keyed by `(function, method)`.
pub type ErrorTable = BTreeMap<(String, String), Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub functions: Vec<String>,
    /// Methods sorted by mean rank, best first (ties by name).
    pub methods: Vec<String>,
    pub mean_rank: Vec<f64>,
    /// `ranks[m][f]`: rank of `methods[m]` on `functions[f]`, if it ran there.
    pub ranks: Vec<Vec<Option<f64>>>,
}

/// Lower median: the order statistic at `(len - 1) / 2`. Unlike the
/// midpoint average it is always one of the observed values, so rankings
/// depend only on the order of the errors.
fn lower_median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Per function, rank methods by median final error (1 = best, ties share the
/// average rank); score each method by its mean rank over functions.
pub fn rank_methods(errors: &ErrorTable) -> Result<RankingTable> {
    let functions: Vec<String> = errors.keys().map(|(f, _)| f.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let all_methods: Vec<String> = errors.keys().map(|(_, m)| m.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if all_methods.len() < 2 {
        return Err(Error::InvalidConfig(vec![format!(
            "ranking: needs at least 2 methods, got {}",
            all_methods.len()
        )]));
    }

    let mut per_method: BTreeMap<&str, Vec<Option<f64>>> =
        all_methods.iter().map(|m| (m.as_str(), vec![None; functions.len()])).collect();
    for (fi, f) in functions.iter().enumerate() {
        let mut medians: Vec<(&str, f64)> = all_methods
            .iter()
            .filter_map(|m| errors.get(&(f.clone(), m.clone())).and_then(|e| lower_median(e)).map(|v| (m.as_str(), v)))
            .collect();
        medians.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut start = 0;
        while start < medians.len() {
            let mut end = start + 1;
            while end < medians.len() && medians[end].1.total_cmp(&medians[start].1).is_eq() {
                end += 1;
            }
            // positions start..end share ranks start+1..=end
            let rank = (start + 1 + end) as f64 / 2.0;
            for (m, _) in &medians[start..end] {
                per_method.get_mut(m).expect("known method")[fi] = Some(rank);
            }
            start = end;
        }
    }

    let mut scored: Vec<(String, f64, Vec<Option<f64>>)> = per_method
        .into_iter()
        .map(|(m, r)| {
            let present: Vec<f64> = r.iter().flatten().copied().collect();
            let mean = present.iter().sum::<f64>() / present.len().max(1) as f64;
            (m.to_string(), mean, r)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

    Ok(RankingTable {
        functions,
        methods: scored.iter().map(|s| s.0.clone()).collect(),
        mean_rank: scored.iter().map(|s| s.1).collect(),
        ranks: scored.into_iter().map(|s| s.2).collect(),
    })
}

impl RankingTable {
    /// Columns: method, mean_rank, then one rank column per function.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["method".to_string(), "mean_rank".to_string()];
        header.extend(self.functions.iter().cloned());
        w.write_record(&header)?;
        for ((m, mean), ranks) in self.methods.iter().zip(&self.mean_rank).zip(&self.ranks) {
            let mut rec = vec![m.clone(), format_float(*mean)];
            rec.extend(ranks.iter().map(|r| r.map(format_float).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn mean_rank_of(&self, method: &str) -> Option<f64> {
        self.methods.iter().position(|m| m == method).map(|i| self.mean_rank[i])
    }
}
