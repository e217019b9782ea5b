//! Leiden optimisation: fast local moving, refinement within communities, and
//! aggregation on the refined partition, iterated until no node moves.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{Network, Objective, QualityFunction};

/// Moves must beat the incumbent by more than this (in edge-weight units).
const MOVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct LeidenOptions {
    pub quality: QualityFunction,
    pub resolution: f64,
    /// Temperature of the randomized merge choice during refinement.
    pub randomness: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LeidenOutcome {
    /// Community per node, labelled `0..community_count`.
    pub membership: Vec<usize>,
    pub community_count: usize,
    pub quality: f64,
    /// Quality of the starting partition followed by the quality after each
    /// iteration.
    pub iteration_qualities: Vec<f64>,
    /// Communities split because they were not connected.
    pub split_communities: usize,
}

/// Runs Leiden from `initial` (or singletons). Each iteration starts from the
/// previous result; iteration stops early once no node moves.
pub fn optimise(net: &Network, opts: &LeidenOptions, initial: Option<&[usize]>) -> LeidenOutcome {
    let n = net.node_count();
    let objective = Objective::new(opts.quality, opts.resolution, net);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut membership: Vec<usize> = match initial {
        Some(init) => init.to_vec(),
        None => (0..n).collect(),
    };
    renumber(&mut membership);
    let mut qualities = vec![objective.quality(net, &membership)];

    for _ in 0..opts.max_iterations.max(1) {
        let changed = iterate(net, &objective, opts.randomness, &mut membership, &mut rng);
        let q = objective.quality(net, &membership);
        let prev = *qualities.last().expect("nonempty");
        debug_assert!(
            q >= prev - 1e-9 * prev.abs().max(1.0),
            "quality decreased from {prev} to {q}"
        );
        qualities.push(q);
        if !changed {
            break;
        }
    }

    let split = split_disconnected(net, &mut membership);
    let community_count = renumber(&mut membership);
    let quality = objective.quality(net, &membership);
    LeidenOutcome {
        membership,
        community_count,
        quality,
        iteration_qualities: qualities,
        split_communities: split,
    }
}

/// Relabels communities `0..k` in order of first appearance; returns `k`.
pub(crate) fn renumber(membership: &mut [usize]) -> usize {
    let cap = membership.iter().max().map_or(0, |&m| m + 1);
    let mut map = vec![usize::MAX; cap];
    let mut next = 0;
    for c in membership.iter_mut() {
        if map[*c] == usize::MAX {
            map[*c] = next;
            next += 1;
        }
        *c = map[*c];
    }
    next
}

fn iterate(
    base: &Network,
    objective: &Objective,
    randomness: f64,
    membership: &mut [usize],
    rng: &mut ChaCha8Rng,
) -> bool {
    let mut owned: Option<Network> = None;
    let mut node_map: Vec<usize> = (0..base.node_count()).collect();
    let mut part = membership.to_vec();
    let mut changed = false;
    loop {
        let net = owned.as_ref().unwrap_or(base);
        changed |= move_nodes_fast(net, objective, &mut part, rng);
        let k = renumber(&mut part);
        if k == net.node_count() {
            break;
        }
        let mut refined = refine(net, objective, randomness, &part, k, rng);
        let mut r = renumber(&mut refined);
        if r == net.node_count() {
            // refinement made no merges; aggregate on the unrefined partition
            refined.clone_from(&part);
            r = k;
        }
        let mut agg_part = vec![0usize; r];
        for v in 0..net.node_count() {
            agg_part[refined[v]] = part[v];
        }
        for m in node_map.iter_mut() {
            *m = refined[*m];
        }
        let aggregated = net.aggregate(&refined, r);
        owned = Some(aggregated);
        part = agg_part;
    }
    for (v, m) in membership.iter_mut().enumerate() {
        *m = part[node_map[v]];
    }
    changed
}

/// Queue-based local moving. `part` must be labelled `0..k` with `k <= n`.
fn move_nodes_fast(
    net: &Network,
    objective: &Objective,
    part: &mut [usize],
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = net.node_count();
    if n == 0 {
        return false;
    }
    let penalty = objective.penalty;
    let mut comm_weight = vec![0.0; n];
    let mut comm_nodes = vec![0usize; n];
    for v in 0..n {
        comm_weight[part[v]] += objective.node_weight(net, v);
        comm_nodes[part[v]] += 1;
    }
    let mut empty: Vec<usize> = (0..n).filter(|&c| comm_nodes[c] == 0).rev().collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut queue: VecDeque<usize> = order.into();
    let mut in_queue = vec![true; n];
    let mut edge_to = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut changed = false;

    while let Some(v) = queue.pop_front() {
        in_queue[v] = false;
        let current = part[v];
        let wv = objective.node_weight(net, v);
        for (u, w) in net.neighbors(v) {
            let c = part[u];
            if !seen[c] {
                seen[c] = true;
                touched.push(c);
            }
            edge_to[c] += w;
        }
        comm_weight[current] -= wv;
        comm_nodes[current] -= 1;

        let mut best = current;
        let mut best_gain = edge_to[current] - penalty * wv * comm_weight[current];
        for &c in &touched {
            if c == current {
                continue;
            }
            let gain = edge_to[c] - penalty * wv * comm_weight[c];
            if gain > best_gain + MOVE_TOLERANCE {
                best = c;
                best_gain = gain;
            }
        }
        if comm_nodes[current] > 0 && 0.0 > best_gain + MOVE_TOLERANCE {
            best = *empty.last().expect("an empty community exists while a node shares one");
        }

        if best != current {
            if empty.last() == Some(&best) {
                empty.pop();
            }
            if comm_nodes[current] == 0 {
                empty.push(current);
            }
            changed = true;
            for (u, _) in net.neighbors(v) {
                if !in_queue[u] && part[u] != best {
                    in_queue[u] = true;
                    queue.push_back(u);
                }
            }
        }
        part[v] = best;
        comm_weight[best] += wv;
        comm_nodes[best] += 1;

        for &c in &touched {
            edge_to[c] = 0.0;
            seen[c] = false;
        }
        touched.clear();
    }
    changed
}

/// Merges nodes into well-connected subcommunities, never crossing the
/// boundaries of `part`. Returns refined labels (not renumbered).
fn refine(
    net: &Network,
    objective: &Objective,
    randomness: f64,
    part: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = net.node_count();
    let penalty = objective.penalty;
    let node_weight: Vec<f64> = (0..n).map(|v| objective.node_weight(net, v)).collect();

    let mut start = vec![0usize; k + 1];
    let mut part_weight = vec![0.0; k];
    for v in 0..n {
        start[part[v] + 1] += 1;
        part_weight[part[v]] += node_weight[v];
    }
    for c in 0..k {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut members = vec![0usize; n];
    for v in 0..n {
        members[fill[part[v]]] = v;
        fill[part[v]] += 1;
    }

    // edge weight from each node to the rest of its community
    let mut internal_degree = vec![0.0; n];
    for v in 0..n {
        internal_degree[v] = net
            .neighbors(v)
            .filter(|&(u, _)| part[u] == part[v])
            .map(|(_, w)| w)
            .sum();
    }

    let mut refined: Vec<usize> = (0..n).collect();
    let mut sub_weight = node_weight.clone();
    let mut sub_nodes = vec![1usize; n];
    let mut sub_external = internal_degree.clone();
    let mut edge_to = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut candidates: Vec<(usize, f64)> = Vec::new();

    for c in 0..k {
        let total = part_weight[c];
        let slice = &mut members[start[c]..start[c + 1]];
        if slice.len() < 2 {
            continue;
        }
        slice.shuffle(rng);
        for &v in slice.iter() {
            let own = refined[v];
            if sub_nodes[own] != 1 {
                continue;
            }
            let wv = node_weight[v];
            if internal_degree[v] < penalty * wv * (total - wv) {
                continue;
            }
            for (u, w) in net.neighbors(v) {
                if part[u] != c {
                    continue;
                }
                let s = refined[u];
                if !seen[s] {
                    seen[s] = true;
                    touched.push(s);
                }
                edge_to[s] += w;
            }
            candidates.clear();
            candidates.push((own, 0.0));
            for &s in &touched {
                if s == own {
                    continue;
                }
                let ws = sub_weight[s];
                if sub_external[s] < penalty * ws * (total - ws) {
                    continue;
                }
                let gain = edge_to[s] - penalty * wv * ws;
                if gain >= 0.0 {
                    candidates.push((s, gain));
                }
            }
            let chosen = choose(&candidates, randomness, rng);
            if chosen != own {
                sub_external[chosen] += internal_degree[v] - 2.0 * edge_to[chosen];
                sub_weight[chosen] += wv;
                sub_nodes[chosen] += 1;
                sub_nodes[own] = 0;
                refined[v] = chosen;
            }
            for &s in &touched {
                edge_to[s] = 0.0;
                seen[s] = false;
            }
            touched.clear();
        }
    }
    refined
}

fn choose(candidates: &[(usize, f64)], randomness: f64, rng: &mut ChaCha8Rng) -> usize {
    let max_gain = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if randomness <= 0.0 || candidates.len() == 1 {
        return candidates
            .iter()
            .find(|c| c.1 == max_gain)
            .expect("nonempty")
            .0;
    }
    let weights: Vec<f64> = candidates
        .iter()
        .map(|c| ((c.1 - max_gain) / randomness).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.random::<f64>() * total;
    for (c, w) in candidates.iter().zip(&weights) {
        if draw < *w {
            return c.0;
        }
        draw -= w;
    }
    candidates.last().expect("nonempty").0
}

/// Splits every community into its connected components. Returns the number
/// of communities that were split.
pub(crate) fn split_disconnected(net: &Network, membership: &mut [usize]) -> usize {
    let n = net.node_count();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut pieces_per_comm: Vec<usize> = vec![0; membership.iter().max().map_or(0, |&m| m + 1)];
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let c = membership[s];
        pieces_per_comm[c] += 1;
        label[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for (u, _) in net.neighbors(v) {
                if label[u] == usize::MAX && membership[u] == c {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    membership.copy_from_slice(&label);
    pieces_per_comm.iter().filter(|&&p| p > 1).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(quality: QualityFunction, resolution: f64, seed: u64) -> LeidenOptions {
        LeidenOptions {
            quality,
            resolution,
            randomness: 0.01,
            max_iterations: 10,
            seed,
        }
    }

    fn clique_edges(nodes: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                e.push((a, b, 1.0));
            }
        }
        e
    }

    #[test]
    fn disjoint_cliques_form_two_communities() {
        let mut edges = clique_edges(&[0, 1, 2, 3]);
        edges.extend(clique_edges(&[4, 5, 6, 7]));
        let net = Network::from_edges(8, &edges);
        for quality in [QualityFunction::Modularity, QualityFunction::Cpm] {
            let res = if quality == QualityFunction::Cpm { 0.5 } else { 1.0 };
            let out = optimise(&net, &opts(quality, res, 3), None);
            assert_eq!(out.community_count, 2);
            assert!(out.membership[..4].iter().all(|&c| c == out.membership[0]));
            assert!(out.membership[4..].iter().all(|&c| c == out.membership[4]));
        }
    }

    #[test]
    fn renumber_is_first_appearance() {
        let mut m = vec![5, 5, 2, 9, 2];
        assert_eq!(renumber(&mut m), 3);
        assert_eq!(m, vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn split_separates_components() {
        let net = Network::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let mut m = vec![0, 0, 0, 0];
        assert_eq!(split_disconnected(&net, &mut m), 1);
        assert_eq!(m, vec![0, 0, 1, 1]);
    }

    #[test]
    fn huge_resolution_keeps_singletons() {
        let net = Network::from_edges(4, &clique_edges(&[0, 1, 2, 3]));
        let out = optimise(&net, &opts(QualityFunction::Cpm, 2.0, 1), None);
        assert_eq!(out.community_count, 4);
    }

    #[test]
    fn seeded_start_never_loses_quality() {
        let mut edges = clique_edges(&[0, 1, 2, 3, 4]);
        edges.extend(clique_edges(&[5, 6, 7, 8, 9]));
        edges.push((4, 5, 1.0));
        let net = Network::from_edges(10, &edges);
        let seed = vec![0, 0, 0, 1, 1, 1, 1, 2, 2, 2];
        let o = opts(QualityFunction::Modularity, 1.0, 9);
        let obj = Objective::new(o.quality, o.resolution, &net);
        let out = optimise(&net, &o, Some(&seed));
        assert!(out.quality >= obj.quality(&net, &seed) - 1e-12);
        assert!(out.iteration_qualities.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
