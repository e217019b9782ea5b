//! Undirected direct-citation graph, optionally extended with cited items
//! that are not part of the corpus.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::{PaperId, Year};

/// Compressed adjacency over papers (and, in extended mode, external items).
///
/// Nodes `0..internal_count` are corpus papers sorted by id; the remaining
/// nodes are external items sorted by id.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    node_ids: Vec<PaperId>,
    internal_count: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    edge_count: usize,
    year_cutoff: Option<Year>,
}

impl CitationGraph {
    /// Builds a graph from explicit node lists and undirected edges given by
    /// node id. Duplicate edges collapse; self-loops are ignored.
    pub fn from_edges(
        internal: &[PaperId],
        external: &[PaperId],
        edges: &[(PaperId, PaperId)],
    ) -> Self {
        let mut internal = internal.to_vec();
        internal.sort_unstable();
        internal.dedup();
        let mut external = external.to_vec();
        external.sort_unstable();
        external.dedup();
        let internal_count = internal.len();
        let node_ids: Vec<PaperId> = internal.into_iter().chain(external).collect();
        let index: HashMap<PaperId, u32> = node_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as u32))
            .collect();
        let pairs: Vec<(u32, u32)> = edges
            .iter()
            .filter_map(|(a, b)| Some((*index.get(a)?, *index.get(b)?)))
            .collect();
        Self::assemble(node_ids, internal_count, pairs)
    }

    fn assemble(node_ids: Vec<PaperId>, internal_count: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.retain(|p| p.0 != p.1);
        pairs.sort_unstable();
        pairs.dedup();
        let n = node_ids.len();
        let mut degree = vec![0usize; n + 1];
        for &(a, b) in &pairs {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(a, b) in &pairs {
            neighbors[fill[a as usize]] = b;
            fill[a as usize] += 1;
            neighbors[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        let weights = vec![1.0; neighbors.len()];
        CitationGraph {
            node_ids,
            internal_count,
            offsets,
            neighbors,
            weights,
            edge_count: pairs.len(),
            year_cutoff: None,
        }
    }

    /// Publication-year cutoff the graph was built with, if any.
    pub fn year_cutoff(&self) -> Option<Year> {
        self.year_cutoff
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn is_internal(&self, node: usize) -> bool {
        node < self.internal_count
    }

    pub fn node_id(&self, node: usize) -> PaperId {
        self.node_ids[node]
    }

    pub fn node_ids(&self) -> &[PaperId] {
        &self.node_ids
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.neighbors[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&j, &w)| (j as usize, w))
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.offsets, &self.neighbors, &self.weights)
    }

    /// Each undirected edge once as `(lower node, higher node, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Edge list as `src\tdst\tweight` lines using paper/item ids.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut lines: Vec<(PaperId, PaperId, f64)> = self
            .edges()
            .map(|(i, j, w)| {
                let (a, b) = (self.node_ids[i], self.node_ids[j]);
                (a.min(b), a.max(b), w)
            })
            .collect();
        lines.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for (a, b, w) in lines {
            writeln!(out, "{a}\t{b}\t{w}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Builds the direct-citation graph over papers published through
/// `year_cutoff`. Each citing/cited pair yields one undirected edge of
/// weight 1. In extended mode, external items cited by at least two included
/// papers become nodes; items cited once cannot bridge papers and are pruned.
pub fn build_graph(corpus: &Corpus, extended: bool, year_cutoff: Year) -> Result<CitationGraph> {
    let meta = corpus.meta();
    if !meta.contains_year(year_cutoff) {
        return Err(Error::YearOutOfSpan {
            year: year_cutoff,
            first: meta.first_year,
            last: meta.last_year,
        });
    }
    let included: Vec<&crate::corpus::PaperRecord> = corpus
        .papers()
        .iter()
        .filter(|p| p.year <= year_cutoff)
        .collect();
    let internal_count = included.len();
    let index: HashMap<PaperId, u32> = included
        .iter()
        .enumerate()
        .map(|(i, p)| (p.paper_id, i as u32))
        .collect();

    let mut external_citers: HashMap<PaperId, u32> = HashMap::new();
    if extended {
        for p in &included {
            for r in &p.references {
                if !corpus.is_internal(*r) {
                    *external_citers.entry(*r).or_insert(0) += 1;
                }
            }
        }
    }
    let mut external: Vec<PaperId> = external_citers
        .into_iter()
        .filter(|&(_, c)| c >= 2)
        .map(|(id, _)| id)
        .collect();
    external.sort_unstable();
    let external_index: HashMap<PaperId, u32> = external
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, (internal_count + i) as u32))
        .collect();

    let mut pairs = Vec::new();
    for (i, p) in included.iter().enumerate() {
        for r in &p.references {
            if let Some(&j) = index.get(r).or_else(|| external_index.get(r)) {
                pairs.push((i as u32, j));
            }
        }
    }
    let node_ids = included
        .iter()
        .map(|p| p.paper_id)
        .chain(external)
        .collect();
    let mut graph = CitationGraph::assemble(node_ids, internal_count, pairs);
    graph.year_cutoff = Some(year_cutoff);
    Ok(graph)
}
