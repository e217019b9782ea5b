//! Weighted undirected network with node sizes and self-loops, as used by the
//! Leiden optimiser on successively aggregated graphs.

use serde::{Deserialize, Serialize};

use crate::citegraph::CitationGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityFunction {
    Modularity,
    #[default]
    Cpm,
}

#[derive(Debug, Clone)]
pub struct Network {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    self_weight: Vec<f64>,
    node_size: Vec<f64>,
    strength: Vec<f64>,
    total_weight: f64,
}

impl Network {
    /// Network over explicit weighted edges. `(i, i, w)` adds a self-loop.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut self_weight = vec![0.0; n];
        for &(a, b, w) in edges {
            if a == b {
                self_weight[a] += w;
            } else {
                rows[a].push((b as u32, w));
                rows[b].push((a as u32, w));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            // merge parallel edges
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for &(t, w) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == t => last.1 += w,
                    _ => merged.push((t, w)),
                }
            }
            for (t, w) in merged {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self::finish(offsets, targets, weights, self_weight, vec![1.0; n])
    }

    pub fn from_citation_graph(graph: &CitationGraph) -> Self {
        let (offsets, targets, weights) = graph.csr();
        let n = graph.node_count();
        Self::finish(
            offsets.to_vec(),
            targets.to_vec(),
            weights.to_vec(),
            vec![0.0; n],
            vec![1.0; n],
        )
    }

    fn finish(
        offsets: Vec<usize>,
        targets: Vec<u32>,
        weights: Vec<f64>,
        self_weight: Vec<f64>,
        node_size: Vec<f64>,
    ) -> Self {
        let n = node_size.len();
        let mut strength = vec![0.0; n];
        for v in 0..n {
            strength[v] = weights[offsets[v]..offsets[v + 1]].iter().sum::<f64>() + 2.0 * self_weight[v];
        }
        let total_weight = strength.iter().sum::<f64>() / 2.0;
        Network {
            offsets,
            targets,
            weights,
            self_weight,
            node_size,
            strength,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_size.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn node_size(&self, v: usize) -> f64 {
        self.node_size[v]
    }

    pub fn strength(&self, v: usize) -> f64 {
        self.strength[v]
    }

    pub fn self_weight(&self, v: usize) -> f64 {
        self.self_weight[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&u, &w)| (u as usize, w))
    }

    /// Collapses each community of `membership` (ids `0..k`) into one node.
    pub fn aggregate(&self, membership: &[usize], k: usize) -> Network {
        let n = self.node_count();
        let mut node_size = vec![0.0; k];
        let mut self_weight = vec![0.0; k];
        let mut start = vec![0usize; k + 1];
        for v in 0..n {
            start[membership[v] + 1] += 1;
            node_size[membership[v]] += self.node_size[v];
            self_weight[membership[v]] += self.self_weight[v];
        }
        for c in 0..k {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut members = vec![0usize; n];
        for v in 0..n {
            let c = membership[v];
            members[fill[c]] = v;
            fill[c] += 1;
        }

        let mut offsets = Vec::with_capacity(k + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut acc = vec![0.0; k];
        let mut touched: Vec<usize> = Vec::new();
        for c in 0..k {
            for &v in &members[start[c]..start[c + 1]] {
                for (u, w) in self.neighbors(v) {
                    let d = membership[u];
                    if d == c {
                        // visited from both endpoints
                        self_weight[c] += w / 2.0;
                    } else {
                        if acc[d] == 0.0 {
                            touched.push(d);
                        }
                        acc[d] += w;
                    }
                }
            }
            touched.sort_unstable();
            for &d in &touched {
                targets.push(d as u32);
                weights.push(acc[d]);
                acc[d] = 0.0;
            }
            touched.clear();
            offsets.push(targets.len());
        }
        Self::finish(offsets, targets, weights, self_weight, node_size)
    }
}

/// Quality in the unified form `scale * Σ_c (E_c − penalty·W_c²/2) + offset`,
/// where `E_c` is internal edge weight and `W_c` the summed node weight
/// (node size for CPM, strength for modularity).
#[derive(Debug, Clone, Copy)]
pub struct Objective {
    pub kind: QualityFunction,
    pub resolution: f64,
    pub(crate) penalty: f64,
    scale: f64,
    offset: f64,
}

impl Objective {
    pub fn new(kind: QualityFunction, resolution: f64, net: &Network) -> Self {
        let m = net.total_weight();
        match kind {
            QualityFunction::Cpm => {
                let total_size: f64 = (0..net.node_count()).map(|v| net.node_size(v)).sum();
                Objective {
                    kind,
                    resolution,
                    penalty: resolution,
                    scale: 1.0,
                    offset: resolution * total_size / 2.0,
                }
            }
            QualityFunction::Modularity => {
                let (penalty, scale) = if m > 0.0 {
                    (resolution / (2.0 * m), 1.0 / m)
                } else {
                    (0.0, 0.0)
                };
                Objective {
                    kind,
                    resolution,
                    penalty,
                    scale,
                    offset: 0.0,
                }
            }
        }
    }

    #[inline]
    pub(crate) fn node_weight(&self, net: &Network, v: usize) -> f64 {
        match self.kind {
            QualityFunction::Cpm => net.node_size(v),
            QualityFunction::Modularity => net.strength(v),
        }
    }

    /// CPM: `Σ_c E_c − γ·C(n_c, 2)`; modularity: `Σ_c E_c/m − γ(K_c/2m)²`.
    pub fn quality(&self, net: &Network, membership: &[usize]) -> f64 {
        let k = membership.iter().max().map_or(0, |&m| m + 1);
        let mut internal = vec![0.0; k];
        let mut weight = vec![0.0; k];
        for v in 0..net.node_count() {
            let c = membership[v];
            weight[c] += self.node_weight(net, v);
            internal[c] += net.self_weight(v);
            for (u, w) in net.neighbors(v) {
                if u > v && membership[u] == c {
                    internal[c] += w;
                }
            }
        }
        let raw: f64 = internal
            .iter()
            .zip(&weight)
            .map(|(e, w)| e - self.penalty * w * w / 2.0)
            .sum();
        self.scale * raw + self.offset
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Network {
        Network::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
    }

    #[test]
    fn modularity_matches_textbook_value() {
        let net = two_triangles();
        let obj = Objective::new(QualityFunction::Modularity, 1.0, &net);
        // each side: 3 internal edges of 7, total degree 7 of 14
        let expected = 2.0 * (3.0 / 7.0 - 0.25);
        let q = obj.quality(&net, &[0, 0, 0, 1, 1, 1]);
        assert!((q - expected).abs() < 1e-12);
        assert!(obj.quality(&net, &[0; 6]).abs() < 1e-12);
    }

    #[test]
    fn cpm_singletons_score_zero() {
        let net = two_triangles();
        let obj = Objective::new(QualityFunction::Cpm, 0.5, &net);
        assert!(obj.quality(&net, &[0, 1, 2, 3, 4, 5]).abs() < 1e-12);
        // 3 edges - 0.5 * C(3,2) per triangle
        let q = obj.quality(&net, &[0, 0, 0, 1, 1, 1]);
        assert!((q - 3.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_preserves_quality() {
        let net = two_triangles();
        let membership = [0, 0, 1, 2, 2, 2];
        let agg = net.aggregate(&membership, 3);
        assert_eq!(agg.node_count(), 3);
        assert_eq!(agg.total_weight(), net.total_weight());
        for kind in [QualityFunction::Modularity, QualityFunction::Cpm] {
            let obj = Objective::new(kind, 0.7, &net);
            let agg_obj = Objective::new(kind, 0.7, &agg);
            for upper in [[0, 1, 2], [0, 0, 1], [0, 0, 0]] {
                let flat: Vec<usize> = membership.iter().map(|&c| upper[c]).collect();
                let a = obj.quality(&net, &flat);
                let b = agg_obj.quality(&agg, &upper);
                assert!((a - b).abs() < 1e-12, "{kind:?} {a} vs {b}");
            }
        }
    }
}
