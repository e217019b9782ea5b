use std::collections::BTreeMap;

use proptest::prelude::*;

use rcforecast::citegraph::CitationGraph;
use rcforecast::cluster::{optimise, LeidenOptions, Network, QualityFunction};
use rcforecast::evaluate::{ContingencyReport, Counts, SliceKind};
use rcforecast::forecast::{
    composite_score, growth_rate_from, label_exceptional, oracle_n, select_top_n, CompositeModel, ForecastRecord,
};
use rcforecast::indicators::{delta_rvit, moments, peak_year, StandardizedIndicators};
use rcforecast::regression::{fit_probit, ProbitProblem};
use rcforecast::Year;

fn record(rc_id: u32, score: f64) -> ForecastRecord {
    ForecastRecord {
        rc_id,
        fy: 2010,
        ty: 2013,
        ry: 1,
        score,
        predicted: false,
        papers_in_fy: 30,
        outcome: None,
        growth_rate: None,
    }
}

fn components_within(n: usize, edges: &[(usize, usize, f64)], membership: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(a, b, _) in edges {
        if membership[a] == membership[b] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let mut root_of_comm = BTreeMap::new();
    (0..n).all(|v| {
        let r = find(&mut parent, v);
        *root_of_comm.entry(membership[v]).or_insert(r) == r
    })
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (4usize..40).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0.5f64..3.0);
        (Just(n), prop::collection::vec(edge, n..4 * n))
    })
}

proptest! {
    #[test]
    fn oracle_size_is_smallest_integer_at_least_one_and_a_half(xg in 0usize..100_000) {
        let n = oracle_n(xg);
        prop_assert!(2 * n >= 3 * xg);
        prop_assert!(n == 0 || 2 * (n - 1) < 3 * xg);
    }

    #[test]
    fn growth_rate_labels_by_share_ratio(s_pk in 1e-6f64..1.0, ratio in 0.1f64..4.0, gap in 3i32..12) {
        let ty = 2020;
        let gr = growth_rate_from(s_pk, s_pk * ratio, ty - gap, ty).unwrap();
        prop_assert!((gr.powi(gap) - ratio).abs() <= 1e-9 * ratio.max(1.0));
        if ratio > 1.08f64.powi(gap) * (1.0 + 1e-9) {
            prop_assert!(label_exceptional(gr));
        }
        if ratio < 1.08f64.powi(gap) * (1.0 - 1e-9) {
            prop_assert!(!label_exceptional(gr));
        }
    }

    #[test]
    fn peak_is_latest_maximum(values in prop::collection::vec(prop::option::of(1u32..50), 1..20)) {
        let shares: BTreeMap<Year, f64> = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (2000 + i as Year, f64::from(v))))
            .collect();
        let fy = 2000 + values.len() as Year - 1;
        match peak_year(&shares, fy) {
            Ok(pk) => {
                let s = shares[&pk];
                prop_assert!(shares.values().all(|&v| v <= s));
                prop_assert!(shares.range(pk + 1..).all(|(_, &v)| v < s));
            }
            Err(_) => prop_assert!(shares.is_empty()),
        }
    }

    #[test]
    fn delta_rvit_is_bounded(current in -1e3f64..1e3, history in prop::collection::vec(-1e3f64..1e3, 0..12)) {
        let d = delta_rvit(current, &history);
        prop_assert!((-5.0..=5.0).contains(&d));
        if history.len() < 3 {
            prop_assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn moments_match_two_pass_definition(xs in prop::collection::vec(-1e4f64..1e4, 1..50)) {
        let (mean, sd) = moments(&xs);
        let n = xs.len() as f64;
        let m2: f64 = xs.iter().sum::<f64>() / n;
        let var: f64 = xs.iter().map(|x| (x - m2).powi(2)).sum::<f64>() / n;
        prop_assert!((mean - m2).abs() <= 1e-9 * m2.abs().max(1.0));
        prop_assert!((sd - var.sqrt()).abs() <= 1e-9 * sd.max(1.0));
    }

    #[test]
    fn contingency_ratios_are_ordered(tp in 0usize..500, fp in 0usize..500, fn_ in 0usize..500, tn in 0usize..500) {
        let r = ContingencyReport::from_counts(SliceKind::Overall, None, 0, Counts { tp, fp, fn_, tn });
        for v in [r.precision, r.recall, r.csi] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.csi <= r.precision.min(r.recall) + 1e-15);
        prop_assert_eq!(r.records, tp + fp + fn_ + tn);
        prop_assert_eq!(r.is_degenerate(), tp + fp == 0 || tp + fn_ == 0);
    }

    #[test]
    fn top_n_flags_exactly_n_highest(scores in prop::collection::vec(-10.0f64..10.0, 1..60), frac in 0.0f64..=1.0) {
        let n = (frac * scores.len() as f64) as usize;
        let mut records: Vec<ForecastRecord> =
            scores.iter().enumerate().map(|(i, &s)| record(i as u32, s)).collect();
        select_top_n(&mut records, n).unwrap();
        prop_assert_eq!(records.iter().filter(|r| r.predicted).count(), n);
        let lowest_in = records.iter().filter(|r| r.predicted).map(|r| r.score).fold(f64::INFINITY, f64::min);
        prop_assert!(records.iter().filter(|r| !r.predicted).all(|r| r.score <= lowest_in));
        prop_assert!(select_top_n(&mut records, scores.len() + 1).is_err());
    }

    #[test]
    fn composite_score_is_linear(a in prop::array::uniform10(-3.0f64..3.0), b in prop::array::uniform10(-3.0f64..3.0)) {
        let model = CompositeModel::default();
        let row = |values| StandardizedIndicators { rc_id: 0, fy: 2014, values };
        let mut sum = [0.0; 10];
        for i in 0..10 {
            sum[i] = a[i] + b[i];
        }
        let lhs = composite_score(&row(sum), &model).unwrap();
        let rhs = composite_score(&row(a), &model).unwrap() + composite_score(&row(b), &model).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn graph_edges_are_undirected_and_deduplicated(edges in prop::collection::vec((0u64..30, 0u64..30), 0..120)) {
        let internal: Vec<u64> = (0..20).collect();
        let external: Vec<u64> = (20..30).collect();
        let g = CitationGraph::from_edges(&internal, &external, &edges);
        let mut distinct: Vec<(u64, u64)> = edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(g.edge_count(), distinct.len());
        let degree_sum: usize = (0..g.node_count()).map(|v| g.degree(v)).sum();
        prop_assert_eq!(degree_sum, 2 * distinct.len());
        for v in 0..g.node_count() {
            for (u, _) in g.neighbors(v) {
                prop_assert!(g.neighbors(u).any(|(w, _)| w == v));
            }
        }
    }

    #[test]
    fn leiden_communities_are_connected((n, edges) in graph_strategy(), seed in 0u64..1000, cpm in any::<bool>()) {
        let net = Network::from_edges(n, &edges);
        let opts = LeidenOptions {
            quality: if cpm { QualityFunction::Cpm } else { QualityFunction::Modularity },
            resolution: if cpm { 0.05 } else { 1.0 },
            randomness: 0.01,
            max_iterations: 5,
            seed,
        };
        let out = optimise(&net, &opts, None);
        prop_assert_eq!(out.membership.len(), n);
        let simple: Vec<(usize, usize, f64)> = edges.iter().filter(|(a, b, _)| a != b).copied().collect();
        prop_assert!(components_within(n, &simple, &out.membership));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probit_score_vanishes_at_the_fit(seed in 0u64..10_000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<bool> = x.iter().map(|&v| rng.random::<f64>() < 0.3 + 0.1 * v).collect();
        let names = vec!["x".to_string()];
        let fit = fit_probit(&names, &[&x], &y).unwrap();
        let g = ProbitProblem::new(&names, &[&x], &y).unwrap().gradient(&fit.coefficients);
        prop_assert!(g.iter().all(|v| v.abs() < 1e-6), "gradient {:?}", g);
    }
}
