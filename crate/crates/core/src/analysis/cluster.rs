use serde::{Deserialize, Serialize};

use super::SimilarityMatrix;
use crate::error::{Error, Result};

/// One agglomeration step. Ids below the leaf count are leaves; merge `k`
/// creates cluster `leaves + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

/// Nested form for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramNode {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    pub height: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<DendrogramNode>,
}

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const DIAGONAL_TOLERANCE: f64 = 1e-9;

/// Agglomerative clustering on `d = 1 - similarity` with complete linkage.
///
/// Among equally distant pairs the one whose smallest member labels come
/// first lexicographically is merged first.
pub fn complete_linkage_cluster(sim: &SimilarityMatrix) -> Result<Dendrogram> {
    let n = sim.len();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty similarity matrix".into()));
    }
    for i in 0..n {
        if (sim.values[i][i] - 1.0).abs() > DIAGONAL_TOLERANCE {
            return Err(Error::InvalidMatrix(format!("diagonal entry {i} is {}, expected 1", sim.values[i][i])));
        }
        for j in 0..i {
            let (a, b) = (sim.values[i][j], sim.values[j][i]);
            if !(a.is_finite() && b.is_finite()) || (a - b).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::NonSymmetric(i, j));
            }
        }
    }

    // active clusters: (id, smallest member label, size)
    let mut active: Vec<(usize, String, usize)> = (0..n).map(|i| (i, sim.labels[i].clone(), 1)).collect();
    let mut dist: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| 1.0 - sim.values[i][j]).collect()).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let mut best: Option<(f64, (&str, &str), usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let d = dist[a][b];
                let (ka, kb) = (active[a].1.as_str(), active[b].1.as_str());
                let key = if ka <= kb { (ka, kb) } else { (kb, ka) };
                let better = match &best {
                    None => true,
                    Some((bd, bk, _, _)) => d < *bd || (d == *bd && key < *bk),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("at least two clusters");
        let (a, b) = if active[a].1 <= active[b].1 { (a, b) } else { (b, a) };
        let size = active[a].2 + active[b].2;
        merges.push(Merge { left: active[a].0, right: active[b].0, height, size });

        // complete linkage: the merged cluster is as far as its farthest part
        let merged: Vec<f64> = (0..active.len()).map(|k| dist[a][k].max(dist[b][k])).collect();
        let key = active[a].1.clone();
        let (keep, drop) = (a.min(b), a.max(b));
        for k in 0..active.len() {
            dist[keep][k] = merged[k];
            dist[k][keep] = merged[k];
        }
        dist[keep][keep] = 0.0;
        active[keep] = (n + merges.len() - 1, key, size);
        active.remove(drop);
        dist.remove(drop);
        for row in &mut dist {
            row.remove(drop);
        }
    }
    Ok(Dendrogram { labels: sim.labels.clone(), merges })
}

impl Dendrogram {
    pub fn leaves(&self) -> usize {
        self.labels.len()
    }

    fn node_height(&self, id: usize) -> f64 {
        if id < self.leaves() {
            0.0
        } else {
            self.merges[id - self.leaves()].height
        }
    }

    fn root(&self) -> usize {
        self.leaves() + self.merges.len() - 1
    }

    pub fn to_tree(&self) -> DendrogramNode {
        self.subtree(self.root())
    }

    fn subtree(&self, id: usize) -> DendrogramNode {
        if id < self.leaves() {
            return DendrogramNode { label: Some(self.labels[id].clone()), height: 0.0, children: Vec::new() };
        }
        let m = &self.merges[id - self.leaves()];
        DendrogramNode { label: None, height: m.height, children: vec![self.subtree(m.left), self.subtree(m.right)] }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_tree())?)
    }

    /// Newick string; branch lengths are height differences, so leaves sit at 0.
    pub fn to_newick(&self) -> String {
        let root = self.root();
        let mut s = self.newick(root, self.node_height(root));
        s.push(';');
        s
    }

    fn newick(&self, id: usize, parent_height: f64) -> String {
        let h = self.node_height(id);
        let branch = parent_height - h;
        let body = if id < self.leaves() {
            newick_label(&self.labels[id])
        } else {
            let m = &self.merges[id - self.leaves()];
            format!("({},{})", self.newick(m.left, h), self.newick(m.right, h))
        };
        if id == self.root() {
            body
        } else {
            format!("{body}:{branch}")
        }
    }

    /// Flat clusters formed by all merges at or below `threshold`. Members and
    /// clusters are sorted by label.
    pub fn cut(&self, threshold: f64) -> Vec<Vec<String>> {
        let total = self.leaves() + self.merges.len();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (k, m) in self.merges.iter().enumerate() {
            if m.height <= threshold {
                let id = self.leaves() + k;
                let (l, r) = (find(&mut parent, m.left), find(&mut parent, m.right));
                parent[l] = id;
                parent[r] = id;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<String>> = Default::default();
        for i in 0..self.leaves() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(self.labels[i].clone());
        }
        let mut out: Vec<Vec<String>> = groups.into_values().collect();
        out.iter_mut().for_each(|g| g.sort());
        out.sort();
        out
    }
}

fn newick_label(label: &str) -> String {
    if label.chars().any(|c| "()[]':;,".contains(c) || c.is_whitespace()) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}
