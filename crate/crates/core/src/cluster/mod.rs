//! Research communities: Leiden clustering of the citation graph, resolution
//! tuning, and year-by-year model extension.

mod assign;
mod bm25;
mod leiden;
mod network;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::citegraph::CitationGraph;
use crate::error::{Error, Result};
use crate::{PaperId, RcId, Year};

pub use assign::{assign_new_papers, AssignmentReport};
pub use bm25::{bm25_relatedness, Bm25Params, RcDocStats};
pub use leiden::{optimise, LeidenOptions, LeidenOutcome};
pub use network::{Network, Objective, QualityFunction};

/// Paper → community assignment.
///
/// `model_year` is the last publication year used for clustering;
/// `through_year` is the last year added, by clustering or by extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: HashMap<PaperId, RcId>,
    model_year: Year,
    through_year: Year,
}

impl Partition {
    pub fn new(assignment: HashMap<PaperId, RcId>, model_year: Year) -> Self {
        Partition {
            assignment,
            model_year,
            through_year: model_year,
        }
    }

    pub fn with_through_year(mut self, through_year: Year) -> Self {
        self.through_year = through_year;
        self
    }

    pub fn model_year(&self) -> Year {
        self.model_year
    }

    pub fn through_year(&self) -> Year {
        self.through_year
    }

    pub fn rc_of(&self, paper: PaperId) -> Option<RcId> {
        self.assignment.get(&paper).copied()
    }

    pub fn assignment(&self) -> &HashMap<PaperId, RcId> {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn rc_count(&self) -> usize {
        self.assignment.values().collect::<HashSet<_>>().len()
    }

    pub fn rc_ids(&self) -> Vec<RcId> {
        let mut ids: Vec<RcId> = self.assignment.values().copied().collect::<HashSet<_>>().into_iter().collect();
        ids.sort_unstable();
        ids
    }

    /// Sorted member lists per community.
    pub fn members(&self) -> BTreeMap<RcId, Vec<PaperId>> {
        let mut out: BTreeMap<RcId, Vec<PaperId>> = BTreeMap::new();
        for (&p, &rc) in &self.assignment {
            out.entry(rc).or_default().push(p);
        }
        for v in out.values_mut() {
            v.sort_unstable();
        }
        out
    }

    pub fn sorted_entries(&self) -> Vec<(PaperId, RcId)> {
        let mut v: Vec<(PaperId, RcId)> = self.assignment.iter().map(|(&p, &r)| (p, r)).collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn insert(&mut self, paper: PaperId, rc: RcId) {
        self.assignment.entry(paper).or_insert(rc);
    }

    /// Writes `paper_id\trc_id` rows sorted by paper id.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "paper_id\trc_id").map_err(|e| Error::io(path, e))?;
        for (p, rc) in self.sorted_entries() {
            writeln!(out, "{p}\t{rc}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads an assignment TSV; a header line is optional.
    pub fn read_assignment(path: &Path) -> Result<HashMap<PaperId, RcId>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("paper_id")) {
                continue;
            }
            let malformed = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let mut parts = line.split('\t');
            let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
                return Err(malformed("expected paper_id<TAB>rc_id".into()));
            };
            let p: PaperId = a.parse().map_err(|_| malformed(format!("bad paper_id {a:?}")))?;
            let rc: RcId = b.parse().map_err(|_| malformed(format!("bad rc_id {b:?}")))?;
            if out.insert(p, rc).is_some() {
                return Err(malformed(format!("paper {p} assigned twice")));
            }
        }
        Ok(out)
    }

    /// Loads a partition TSV together with its JSON metadata sidecar.
    pub fn load(tsv: &Path, meta: &Path) -> Result<(Partition, ModelMeta)> {
        let meta = ModelMeta::load(meta)?;
        let assignment = Self::read_assignment(tsv)?;
        let p = Partition::new(assignment, meta.model_year).with_through_year(meta.through_year);
        Ok((p, meta))
    }
}

/// Metadata stored next to a persisted partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub model_year: Year,
    pub through_year: Year,
    pub config: ClusterConfig,
    pub quality: Option<f64>,
    pub rc_count: usize,
    pub paper_count: usize,
    #[serde(default)]
    pub extensions: Vec<AssignmentReport>,
}

impl ModelMeta {
    pub fn load(path: &Path) -> Result<ModelMeta> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub quality: QualityFunction,
    pub resolution: f64,
    pub rng_seed: u64,
    pub max_iterations: usize,
    /// Temperature of the randomized refinement step.
    #[serde(default = "default_randomness")]
    pub randomness: f64,
    #[serde(skip)]
    pub seed_assignment: Option<Partition>,
}

fn default_randomness() -> f64 {
    0.01
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            quality: QualityFunction::Cpm,
            resolution: 0.01,
            rng_seed: 0,
            max_iterations: 10,
            randomness: default_randomness(),
            seed_assignment: None,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!("resolution must be positive, got {}", self.resolution)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.randomness > 0.0) {
            return Err(Error::Config("randomness must be positive".into()));
        }
        Ok(())
    }

    fn options(&self) -> LeidenOptions {
        LeidenOptions {
            quality: self.quality,
            resolution: self.resolution,
            randomness: self.randomness,
            max_iterations: self.max_iterations,
            seed: self.rng_seed,
        }
    }
}

/// Diagnostics from one clustering run.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub quality: f64,
    pub iteration_qualities: Vec<f64>,
    pub community_count: usize,
    pub split_communities: usize,
}

/// Clusters `graph` and returns the assignment of its internal nodes.
pub fn leiden(graph: &CitationGraph, config: &ClusterConfig) -> Result<Partition> {
    leiden_with_report(graph, config).map(|(p, _)| p)
}

pub fn leiden_with_report(graph: &CitationGraph, config: &ClusterConfig) -> Result<(Partition, ClusterReport)> {
    config.validate()?;
    let model_year = graph
        .year_cutoff()
        .or_else(|| config.seed_assignment.as_ref().map(|s| s.through_year()))
        .unwrap_or_default();
    if graph.is_empty() {
        let report = ClusterReport {
            quality: 0.0,
            iteration_qualities: vec![],
            community_count: 0,
            split_communities: 0,
        };
        return Ok((Partition::new(HashMap::new(), model_year), report));
    }
    let net = Network::from_citation_graph(graph);
    let initial = config.seed_assignment.as_ref().map(|s| seed_membership(graph, s));
    let outcome = optimise(&net, &config.options(), initial.as_deref());
    let assignment = label_communities(graph, &outcome.membership, config.seed_assignment.as_ref());
    let report = ClusterReport {
        quality: outcome.quality,
        iteration_qualities: outcome.iteration_qualities,
        community_count: outcome.community_count,
        split_communities: outcome.split_communities,
    };
    Ok((Partition::new(assignment, model_year), report))
}

/// Runs `restarts` differently seeded optimisations and keeps the best.
pub fn leiden_best_of(graph: &CitationGraph, config: &ClusterConfig, restarts: usize) -> Result<(Partition, ClusterReport)> {
    let mut best: Option<(Partition, ClusterReport)> = None;
    for r in 0..restarts.max(1) {
        let mut c = config.clone();
        c.rng_seed = config.rng_seed.wrapping_add(r as u64);
        let run = leiden_with_report(graph, &c)?;
        if best.as_ref().is_none_or(|b| run.1.quality > b.1.quality) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Starting membership from a prior partition: seeded papers keep their
/// community, everything else starts alone.
fn seed_membership(graph: &CitationGraph, seed: &Partition) -> Vec<usize> {
    let mut label: HashMap<RcId, usize> = HashMap::new();
    let mut membership = Vec::with_capacity(graph.node_count());
    let mut fresh = Vec::new();
    for v in 0..graph.node_count() {
        let rc = graph
            .is_internal(v)
            .then(|| seed.rc_of(graph.node_id(v)))
            .flatten();
        match rc {
            Some(rc) => {
                let next = label.len();
                membership.push(*label.entry(rc).or_insert(next));
            }
            None => {
                fresh.push(v);
                membership.push(usize::MAX);
            }
        }
    }
    let mut next = label.len();
    for v in fresh {
        membership[v] = next;
        next += 1;
    }
    membership
}

/// Maps optimiser labels to rc ids. Without a seed, communities are numbered
/// in order of their smallest member paper id. With a seed, each seed
/// community passes its id to the new community holding most of its papers.
fn label_communities(graph: &CitationGraph, membership: &[usize], seed: Option<&Partition>) -> HashMap<PaperId, RcId> {
    let internal = graph.internal_count();
    let k = membership[..internal].iter().copied().max().map_or(0, |m| m + 1);
    // first internal node in id order per label
    let mut first = vec![usize::MAX; k];
    for v in 0..internal {
        let c = membership[v];
        if first[c] == usize::MAX {
            first[c] = v;
        }
    }
    let mut labels: Vec<usize> = (0..k).filter(|&c| first[c] != usize::MAX).collect();
    labels.sort_by_key(|&c| first[c]);

    let mut rc_of_label: HashMap<usize, RcId> = HashMap::new();
    let mut next: RcId = 0;
    if let Some(seed) = seed {
        let mut overlap: HashMap<(usize, RcId), usize> = HashMap::new();
        for v in 0..internal {
            if let Some(rc) = seed.rc_of(graph.node_id(v)) {
                *overlap.entry((membership[v], rc)).or_insert(0) += 1;
            }
        }
        let mut pairs: Vec<((usize, RcId), usize)> = overlap.into_iter().collect();
        pairs.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then(a.0 .1.cmp(&b.0 .1))
                .then(first[a.0 .0].cmp(&first[b.0 .0]))
        });
        let mut used: HashSet<RcId> = HashSet::new();
        for ((c, rc), _) in pairs {
            if !rc_of_label.contains_key(&c) && used.insert(rc) {
                rc_of_label.insert(c, rc);
            }
        }
        next = seed.rc_ids().last().map_or(0, |&m| m + 1);
    }
    for c in labels {
        rc_of_label.entry(c).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
    }
    (0..internal)
        .map(|v| (graph.node_id(v), rc_of_label[&membership[v]]))
        .collect()
}

/// Number of connected components that contain at least one internal node;
/// the smallest community count any resolution can produce.
pub fn min_rc_count(graph: &CitationGraph) -> usize {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b, _) in graph.edges() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..graph.internal_count())
        .map(|v| find(&mut parent, v))
        .collect::<HashSet<_>>()
        .len()
}

/// Bisection over log-resolution for a partition with about `target`
/// communities. Stops once the count is within ±10% of the target or after
/// 20 probes and returns the best resolution seen.
pub fn tune_resolution(graph: &CitationGraph, target: usize, config: &ClusterConfig) -> Result<f64> {
    let min = min_rc_count(graph);
    let max = graph.internal_count();
    if target == 0 || target < min || target > max {
        return Err(Error::UnreachableTarget { target, min, max });
    }
    let count_at = |resolution: f64| -> Result<usize> {
        let mut c = config.clone();
        c.resolution = resolution;
        c.seed_assignment = None;
        Ok(leiden(graph, &c)?.rc_count())
    };
    let max_weight = graph.edges().map(|e| e.2).fold(1.0_f64, f64::max);
    let (mut lo, mut hi) = match config.quality {
        QualityFunction::Cpm => (1e-9_f64, 2.0 * max_weight + 1.0),
        QualityFunction::Modularity => (1e-9_f64, 4.0 * graph.edge_count() as f64 * max_weight + 1.0),
    };
    let tolerance = (target as f64 * 0.1).max(0.5);
    let mut best = (f64::INFINITY, lo);
    for _ in 0..20 {
        let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        let count = count_at(mid)?;
        let miss = (count as f64 - target as f64).abs();
        if miss < best.0 {
            best = (miss, mid);
        }
        log::debug!("resolution {mid:e} -> {count} communities");
        if miss <= tolerance {
            break;
        }
        if count < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// Re-clusters through `year` starting from `prior`, keeping rc ids stable
/// where communities persist.
pub fn recluster_seeded(graph: &CitationGraph, prior: &Partition, config: &ClusterConfig) -> Result<(Partition, ClusterReport)> {
    let mut c = config.clone();
    c.seed_assignment = Some(prior.clone());
    leiden_with_report(graph, &c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> CitationGraph {
        let mut edges = vec![];
        for block in [[1u64, 2, 3, 4], [5, 6, 7, 8]] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((block[i], block[j]));
                }
            }
        }
        CitationGraph::from_edges(&[1, 2, 3, 4, 5, 6, 7, 8], &[], &edges)
    }

    #[test]
    fn cliques_numbered_by_smallest_member() {
        let p = leiden(&two_cliques(), &ClusterConfig::default()).unwrap();
        assert_eq!(p.rc_count(), 2);
        assert_eq!(p.rc_of(1), Some(0));
        assert_eq!(p.rc_of(8), Some(1));
    }

    #[test]
    fn empty_graph_gives_empty_partition() {
        let g = CitationGraph::from_edges(&[], &[], &[]);
        assert!(leiden(&g, &ClusterConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn invalid_config_rejected() {
        let c = ClusterConfig {
            resolution: 0.0,
            ..ClusterConfig::default()
        };
        assert!(leiden(&two_cliques(), &c).is_err());
    }

    #[test]
    fn seeded_run_keeps_seed_ids() {
        let g = two_cliques();
        let mut seed = HashMap::new();
        for p in 1..=4 {
            seed.insert(p, 7);
        }
        for p in 5..=8 {
            seed.insert(p, 3);
        }
        let (p, _) = recluster_seeded(&g, &Partition::new(seed, 2000), &ClusterConfig::default()).unwrap();
        assert_eq!(p.rc_of(1), Some(7));
        assert_eq!(p.rc_of(5), Some(3));
    }

    #[test]
    fn external_nodes_are_not_returned() {
        let g = CitationGraph::from_edges(&[1, 2], &[100], &[(1, 100), (2, 100)]);
        let p = leiden(&g, &ClusterConfig::default()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.rc_of(100), None);
    }

    #[test]
    fn tsv_round_trip() {
        let p = leiden(&two_cliques(), &ClusterConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        p.write_tsv(&path).unwrap();
        assert_eq!(&Partition::read_assignment(&path).unwrap(), p.assignment());
    }

    #[test]
    fn unreachable_target_reports_range() {
        let g = two_cliques();
        match tune_resolution(&g, 9, &ClusterConfig::default()) {
            Err(Error::UnreachableTarget { min: 2, max: 8, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(tune_resolution(&g, 1, &ClusterConfig::default()).is_err());
    }

    #[test]
    fn tuning_hits_bounds() {
        let g = two_cliques();
        let c = ClusterConfig::default();
        let r = tune_resolution(&g, 2, &c).unwrap();
        assert_eq!(leiden(&g, &ClusterConfig { resolution: r, ..c.clone() }).unwrap().rc_count(), 2);
        let r = tune_resolution(&g, 8, &c).unwrap();
        assert_eq!(leiden(&g, &ClusterConfig { resolution: r, ..c }).unwrap().rc_count(), 8);
    }
}
