use std::collections::{BTreeSet, HashMap};

use rcforecast::citegraph::build_graph;
use rcforecast::cluster::Partition;
use rcforecast::corpus::Corpus;
use rcforecast::indicators::RcYearTable;
use rcforecast::synth::{generate, SynthConfig, SynthOutput};

fn corpus_of(out: &SynthOutput) -> Corpus {
    Corpus::from_papers(out.papers.clone(), out.journals.clone()).unwrap()
}

#[test]
fn citation_mix_matches_configuration() {
    let config = SynthConfig {
        rng_seed: 21,
        n_communities: 1500,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let community: HashMap<u64, u32> = out.truth.paper_community.iter().copied().collect();
    let (mut intra, mut inter, mut total) = (0usize, 0usize, 0usize);
    for p in &out.papers {
        let own = community[&p.paper_id];
        for r in &p.references {
            total += 1;
            match community.get(r) {
                Some(&c) if c == own => intra += 1,
                Some(_) => inter += 1,
                None => {}
            }
        }
    }
    assert!(total >= 100_000, "only {total} references");
    let intra_share = intra as f64 / total as f64;
    let inter_share = inter as f64 / total as f64;
    assert!(
        (intra_share / config.intra_citation_prob - 1.0).abs() < 0.05,
        "intra share {intra_share:.4}"
    );
    assert!(
        (inter_share / config.inter_citation_prob - 1.0).abs() < 0.05,
        "inter share {inter_share:.4}"
    );
}

#[test]
fn without_inter_citations_components_are_communities() {
    let config = SynthConfig {
        rng_seed: 5,
        n_communities: 120,
        inter_citation_prob: 0.0,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let corpus = corpus_of(&out);
    let graph = build_graph(&corpus, false, config.last_year).unwrap();

    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (a, b, _) in graph.edges() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut by_root: HashMap<usize, BTreeSet<u32>> = HashMap::new();
    for v in 0..n {
        let c = out.truth.community_of(graph.node_id(v)).unwrap();
        by_root.entry(find(&mut parent, v)).or_default().insert(c);
    }
    let nonempty: BTreeSet<u32> = out.truth.paper_community.iter().map(|&(_, c)| c).collect();
    assert!(by_root.values().all(|s| s.len() == 1));
    assert_eq!(by_root.len(), nonempty.len());
}

#[test]
fn planted_communities_lead_on_cvit_and_stage() {
    let config = SynthConfig {
        rng_seed: 8,
        n_communities: 1200,
        planted_xg_fraction: 0.05,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let corpus = corpus_of(&out);
    let assignment: HashMap<u64, u32> = out.truth.paper_community.iter().copied().collect();
    let table = RcYearTable::build(&corpus, &Partition::new(assignment, config.last_year));
    let (mut xg, mut rest) = ((0.0, 0.0, 0usize), (0.0, 0.0, 0usize));
    for (&(c, fy), &label) in &out.truth.xg {
        let Some(raw) = table.raw(c, fy, 10) else { continue };
        if raw.papers_in_fy < 20 {
            continue;
        }
        let acc = if label { &mut xg } else { &mut rest };
        acc.0 += raw.cvit;
        acc.1 += raw.stage;
        acc.2 += 1;
    }
    assert!(xg.2 > 50 && rest.2 > 50);
    let mean = |a: (f64, f64, usize)| (a.0 / a.2 as f64, a.1 / a.2 as f64);
    let (xg_cvit, xg_stage) = mean(xg);
    let (cvit, stage) = mean(rest);
    assert!(xg_cvit > cvit, "cvit {xg_cvit:.3} vs {cvit:.3}");
    assert!(xg_stage > stage, "stage {xg_stage:.3} vs {stage:.3}");
}

#[test]
fn planted_fraction_sets_exceptional_count() {
    let config = SynthConfig {
        rng_seed: 3,
        n_communities: 10_000,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let expected = config.planted_xg_fraction * config.n_communities as f64;
    let fys: Vec<i32> = (config.first_year..=config.last_year - 3).collect();
    let counts: Vec<usize> = fys.iter().map(|&fy| out.truth.xg_count(fy)).collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    // binomial standard deviation of a single year's count
    let sd = (expected * (1.0 - config.planted_xg_fraction)).sqrt();
    assert!((mean - expected).abs() < 3.0 * sd, "mean {mean:.1} vs {expected}: {counts:?}");
    for (fy, c) in fys.iter().zip(&counts) {
        assert!((*c as f64 - expected).abs() < 5.0 * sd, "fy {fy}: {c}");
    }
}
