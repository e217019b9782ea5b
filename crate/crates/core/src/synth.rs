//! Synthetic corpora with planted community lifecycles and known
//! exceptional-growth labels.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_papers, DocType, JournalRank, JournalRanks, PaperRecord};
use crate::error::{Error, Result};
use crate::forecast::{label_exceptional, HORIZON};
use crate::{PaperId, Year};

/// Ids of cited items outside the corpus start here.
pub const EXTERNAL_ID_BASE: PaperId = 1_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Emerging,
    Growing,
    Mature,
    Declining,
}

impl Lifecycle {
    pub fn name(self) -> &'static str {
        match self {
            Lifecycle::Emerging => "emerging",
            Lifecycle::Growing => "growing",
            Lifecycle::Mature => "mature",
            Lifecycle::Declining => "declining",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifecycleMix {
    pub emerging: f64,
    pub growing: f64,
    pub mature: f64,
    pub declining: f64,
}

impl Default for LifecycleMix {
    fn default() -> Self {
        LifecycleMix {
            emerging: 0.10,
            growing: 0.15,
            mature: 0.50,
            declining: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub rng_seed: u64,
    pub n_communities: usize,
    pub first_year: Year,
    pub last_year: Year,
    /// Log-normal parameters of a community's base papers per year.
    pub size_log_mean: f64,
    pub size_log_sd: f64,
    pub lifecycle_mix: LifecycleMix,
    /// Expected fraction of communities that are truly exceptional in any
    /// forecast year.
    pub planted_xg_fraction: f64,
    /// Effect sizes keyed by indicator name: `stage` and `cvit` set the
    /// pre-burst growth, `delta_rvit` shortens reference ages and `ntopj`
    /// raises top-journal publishing, in the years a community is truly
    /// exceptional.
    pub signal_strengths: BTreeMap<String, f64>,
    pub intra_citation_prob: f64,
    pub inter_citation_prob: f64,
    pub mean_references: f64,
    /// Mean reference age in years (exponential).
    pub reference_age_scale: f64,
    pub n_journals: usize,
    pub top_journal_propensity: f64,
    pub review_fraction: f64,
    pub other_fraction: f64,
    /// Fraction of papers that carry terms.
    pub term_fraction: f64,
    pub terms_per_paper: usize,
    pub burst_rate: f64,
    pub burst_years: i32,
    pub lead_in_years: i32,
    /// Upper bound on expected papers in any single year.
    pub max_papers_per_year: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rng_seed: 1,
            n_communities: 500,
            first_year: 2000,
            last_year: 2014,
            size_log_mean: 15f64.ln(),
            size_log_sd: 0.6,
            lifecycle_mix: LifecycleMix::default(),
            planted_xg_fraction: 0.015,
            signal_strengths: BTreeMap::from([
                ("stage".into(), 1.0),
                ("cvit".into(), 1.0),
                ("delta_rvit".into(), 1.0),
                ("ntopj".into(), 1.0),
            ]),
            intra_citation_prob: 0.6,
            inter_citation_prob: 0.05,
            mean_references: 6.0,
            reference_age_scale: 3.0,
            n_journals: 2500,
            top_journal_propensity: 0.08,
            review_fraction: 0.05,
            other_fraction: 0.03,
            term_fraction: 0.3,
            terms_per_paper: 4,
            burst_rate: 0.25,
            burst_years: 5,
            lead_in_years: 2,
            max_papers_per_year: None,
        }
    }
}

const SIGNAL_KEYS: [&str; 10] = [
    "stage", "cvit", "rvit", "delta_rvit", "ntopj", "ctopj", "eigen", "nart", "nrev", "nref",
];

impl SynthConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: SynthConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    fn strength(&self, key: &str) -> f64 {
        self.signal_strengths.get(key).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let mix = &self.lifecycle_mix;
        let fractions = [mix.emerging, mix.growing, mix.mature, mix.declining];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("lifecycle fractions must lie in [0, 1] and sum to 1".into());
        }
        if self.n_communities == 0 {
            return bad("n_communities must be positive".into());
        }
        if self.last_year - self.first_year < 1 {
            return bad("the year span needs at least two years".into());
        }
        let (pi, po) = (self.intra_citation_prob, self.inter_citation_prob);
        if !(0.0..=1.0).contains(&pi) || !(0.0..=1.0).contains(&po) || pi + po > 1.0 {
            return bad("citation probabilities must lie in [0, 1] and sum to at most 1".into());
        }
        if pi <= po {
            return bad("intra-community citation probability must exceed the inter-community one".into());
        }
        if !(0.0..=1.0).contains(&self.planted_xg_fraction) {
            return bad("planted_xg_fraction must lie in [0, 1]".into());
        }
        if let Some(k) = self.signal_strengths.keys().find(|k| !SIGNAL_KEYS.contains(&k.as_str())) {
            return bad(format!("unknown signal `{k}`"));
        }
        if self.signal_strengths.values().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("signal strengths must be finite and non-negative".into());
        }
        if !(self.size_log_sd >= 0.0) || !self.size_log_mean.is_finite() {
            return bad("invalid size distribution".into());
        }
        if !(self.mean_references >= 1.0) || !(self.reference_age_scale > 0.0) {
            return bad("mean_references must be ≥ 1 and reference_age_scale positive".into());
        }
        if self.n_journals == 0 || !(0.0..=1.0).contains(&self.top_journal_propensity) {
            return bad("need at least one journal and a propensity in [0, 1]".into());
        }
        if self.review_fraction < 0.0 || self.other_fraction < 0.0 || self.review_fraction + self.other_fraction > 1.0 {
            return bad("document type fractions must be non-negative and sum to at most 1".into());
        }
        if !(0.0..=1.0).contains(&self.term_fraction) {
            return bad("term_fraction must lie in [0, 1]".into());
        }
        if self.burst_years < 1 || self.lead_in_years < 0 || !(self.burst_rate > 0.0) {
            return bad("burst must last at least one year with a positive rate".into());
        }
        Ok(())
    }

    fn lead_in_rate(&self) -> f64 {
        0.05 * self.strength("stage").max(self.strength("cvit"))
    }

    /// Multiplier on a community's size `t` years after its burst starts.
    fn burst_factor(&self, t: i32) -> f64 {
        let lead = 1.0 + self.lead_in_rate();
        let burst = 1.0 + self.burst_rate;
        let l = self.lead_in_years;
        if t < -l {
            1.0
        } else if t < 0 {
            lead.powi(t + l + 1)
        } else {
            lead.powi(l) * burst.powi((t + 1).min(self.burst_years))
        }
    }

    /// Offsets (forecast year − burst start) at which an otherwise flat
    /// community with a burst is exceptional.
    #[cfg(test)]
    fn xg_offsets(&self) -> Vec<i32> {
        let reach = self.lead_in_years + self.burst_years + HORIZON + 2;
        let shares: Vec<f64> = (-reach - 20..=reach).map(|t| self.burst_factor(t)).collect();
        (0..shares.len())
            .filter(|&i| truth_gr(&shares, i).is_some_and(label_exceptional))
            .map(|i| i as i32 - reach - 20)
            .collect()
    }
}

/// Growth rate from the latest peak through index `fy` to `fy + 3`, over
/// yearly shares where 0 means no papers.
fn truth_gr(shares: &[f64], fy: usize) -> Option<f64> {
    let ty = fy + HORIZON as usize;
    let s_ty = *shares.get(ty)?;
    let mut pk: Option<(usize, f64)> = None;
    for (y, &s) in shares[..=fy].iter().enumerate() {
        if s > 0.0 && pk.is_none_or(|(_, b)| s >= b) {
            pk = Some((y, s));
        }
    }
    let (pk, s_pk) = pk?;
    Some((s_ty / s_pk).powf(1.0 / (ty - pk) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCommunity {
    pub id: u32,
    pub lifecycle: Lifecycle,
    pub birth_year: Year,
    pub bursts: Vec<Year>,
    /// Expected papers per year, indexed from `first_year`.
    pub expected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub first_year: Year,
    pub communities: Vec<PlantedCommunity>,
    /// Planted community of every paper, in paper-id order.
    pub paper_community: Vec<(PaperId, u32)>,
    /// True exceptional-growth label per (community, forecast year), from
    /// expected shares.
    pub xg: BTreeMap<(u32, Year), bool>,
}

impl Truth {
    pub fn xg_count(&self, fy: Year) -> usize {
        self.xg.iter().filter(|((_, y), &v)| *y == fy && v).count()
    }

    pub fn community_of(&self, paper: PaperId) -> Option<u32> {
        self.paper_community
            .binary_search_by_key(&paper, |&(p, _)| p)
            .ok()
            .map(|i| self.paper_community[i].1)
    }

    /// Long-format `kind\tid\tyear\tvalue` rows: `community` (id, birth
    /// year, lifecycle class), `burst` (id, start year, duration), `xg` (id,
    /// forecast year, 0/1) and `paper` (paper id, publication year, planted
    /// community).
    pub fn write_tsv(&self, path: &Path, papers: &[PaperRecord], burst_years: i32) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "kind\tid\tyear\tvalue").map_err(io)?;
        for c in &self.communities {
            writeln!(out, "community\t{}\t{}\t{}", c.id, c.birth_year, c.lifecycle.name()).map_err(io)?;
        }
        for c in &self.communities {
            for b in &c.bursts {
                writeln!(out, "burst\t{}\t{}\t{}", c.id, b, burst_years).map_err(io)?;
            }
        }
        for (&(c, fy), &v) in &self.xg {
            writeln!(out, "xg\t{c}\t{fy}\t{}", u8::from(v)).map_err(io)?;
        }
        for (p, &(_, c)) in papers.iter().zip(&self.paper_community) {
            writeln!(out, "paper\t{}\t{}\t{c}", p.paper_id, p.year).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub papers: Vec<PaperRecord>,
    pub journals: JournalRanks,
    pub truth: Truth,
}

impl SynthOutput {
    /// Writes `papers.jsonl`, `ranks.csv` and `truth.tsv` into `dir`.
    pub fn write(&self, dir: &Path, config: &SynthConfig) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_papers(&dir.join("papers.jsonl"), &self.papers)?;
        self.journals.write(&dir.join("ranks.csv"))?;
        self.truth.write_tsv(&dir.join("truth.tsv"), &self.papers, config.burst_years)
    }
}

struct Baseline {
    lifecycle: Lifecycle,
    birth_year: Year,
    expected: Vec<f64>,
}

fn baseline(config: &SynthConfig, rng: &mut ChaCha8Rng, sizes: &LogNormal<f64>) -> Baseline {
    let span = config.last_year - config.first_year + 1;
    let mix = &config.lifecycle_mix;
    let cumulative = [
        (mix.emerging, Lifecycle::Emerging),
        (mix.emerging + mix.growing, Lifecycle::Growing),
        (mix.emerging + mix.growing + mix.mature, Lifecycle::Mature),
    ];
    let u: f64 = rng.random();
    let lifecycle = cumulative
        .iter()
        .find(|(c, _)| u < *c)
        .map_or(Lifecycle::Declining, |&(_, l)| l);
    let base: f64 = sizes.sample(rng);
    let birth_year = if lifecycle == Lifecycle::Emerging {
        config.first_year + rng.random_range(1..=(span / 2).max(1))
    } else {
        config.first_year
    };
    let (rate, dip): (f64, Option<Year>) = match lifecycle {
        Lifecycle::Emerging => (0.05, None),
        Lifecycle::Growing => (0.02, None),
        Lifecycle::Mature => {
            // a dip of two years, then recovery
            let dip = (rng.random::<f64>() < 0.3).then(|| config.first_year + rng.random_range(2..span.max(3)));
            (-0.01, dip)
        }
        Lifecycle::Declining => (-0.05, None),
    };
    let expected = (config.first_year..=config.last_year)
        .map(|y| {
            if y < birth_year {
                return 0.0;
            }
            let mut v = base * (1.0 + rate).powi(y - birth_year);
            if lifecycle == Lifecycle::Emerging {
                v *= 0.6;
            }
            if dip.is_some_and(|d| y == d || y == d + 1) {
                v *= 0.8;
            }
            v
        })
        .collect();
    Baseline {
        lifecycle,
        birth_year,
        expected,
    }
}

fn shares(expected: &[f64], totals: &[f64]) -> Vec<f64> {
    expected
        .iter()
        .zip(totals)
        .map(|(e, t)| if *t > 0.0 { e / t } else { 0.0 })
        .collect()
}

/// Forecast-year indices at which `shares` is exceptional.
fn xg_years(shares: &[f64], birth: usize) -> Vec<usize> {
    let last_fy = shares.len().saturating_sub(HORIZON as usize + 1);
    (birth..=last_fy)
        .filter(|&i| i + (HORIZON as usize) < shares.len())
        .filter(|&i| truth_gr(shares, i).is_some_and(label_exceptional))
        .collect()
}

/// Plans lifecycles and bursts. Every candidate burst start is scored by
/// the forecast years it makes exceptional against the community's own
/// baseline and fires with probability `w[start] / gained`. The per-start
/// weights are then refined against the actual truth labels so that about
/// `planted_xg_fraction` of communities are exceptional in every forecast
/// year. The uniform draws are fixed up front, so refinement only moves
/// the thresholds.
fn plan_communities(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<PlantedCommunity>> {
    let sizes = LogNormal::new(config.size_log_mean, config.size_log_sd)
        .map_err(|e| Error::Config(format!("size distribution: {e}")))?;
    let baselines: Vec<Baseline> = (0..config.n_communities).map(|_| baseline(config, rng, &sizes)).collect();
    let span = (config.last_year - config.first_year + 1) as usize;
    let totals: Vec<f64> = (0..span).map(|i| baselines.iter().map(|b| b.expected[i]).sum()).collect();
    let first_start = config.first_year - config.lead_in_years - config.burst_years;
    let n_starts = (config.last_year - first_start + 1) as usize;

    // gained[c][j]: forecast-year indices made exceptional by a burst at
    // first_start + j
    let gained: Vec<Vec<Vec<usize>>> = baselines
        .iter()
        .map(|b| {
            let birth = (b.birth_year - config.first_year) as usize;
            let base = xg_years(&shares(&b.expected, &totals), birth);
            (first_start..=config.last_year)
                .map(|start| {
                    let curve: Vec<f64> = b
                        .expected
                        .iter()
                        .enumerate()
                        .map(|(i, e)| e * config.burst_factor(config.first_year + i as i32 - start))
                        .collect();
                    xg_years(&shares(&curve, &totals), birth)
                        .into_iter()
                        .filter(|y| !base.contains(y))
                        .collect()
                })
                .collect()
        })
        .collect();
    let draws: Vec<Vec<f64>> = (0..config.n_communities)
        .map(|_| (0..n_starts).map(|_| rng.random()).collect())
        .collect();

    let n_fy = span.saturating_sub(HORIZON as usize);
    let target = config.planted_xg_fraction * config.n_communities as f64;
    let pairs = gained.iter().flatten().filter(|g| !g.is_empty()).count();
    let initial = if pairs == 0 {
        0.0
    } else {
        target * n_fy as f64 / pairs as f64
    };
    let mut weights = vec![initial; n_starts];
    // reach[j][t]: candidates at start j that gain forecast year t
    let mut reach = vec![vec![0.0; n_fy]; n_starts];
    for per_start in &gained {
        for (j, years) in per_start.iter().enumerate() {
            for &t in years {
                reach[j][t] += 1.0;
            }
        }
    }

    let mut communities = sample_bursts(config, &baselines, &gained, &draws, &weights, first_start);
    for _ in 0..CALIBRATION_ROUNDS {
        if initial == 0.0 {
            break;
        }
        let mut counts = vec![0.0; n_fy];
        for (&(_, fy), &v) in &truth_labels(config, &communities) {
            if v {
                counts[(fy - config.first_year) as usize] += 1.0;
            }
        }
        for (w, r) in weights.iter_mut().zip(&reach) {
            let wanted: f64 = r.iter().map(|h| h * target).sum();
            let got: f64 = r.iter().zip(&counts).map(|(h, c)| h * c).sum();
            if wanted > 0.0 {
                *w *= (wanted / got.max(1.0)).clamp(0.5, 2.0);
            }
        }
        communities = sample_bursts(config, &baselines, &gained, &draws, &weights, first_start);
    }
    Ok(communities)
}

const CALIBRATION_ROUNDS: usize = 8;

fn sample_bursts(
    config: &SynthConfig,
    baselines: &[Baseline],
    gained: &[Vec<Vec<usize>>],
    draws: &[Vec<f64>],
    weights: &[f64],
    first_start: Year,
) -> Vec<PlantedCommunity> {
    let spacing = config.lead_in_years + config.burst_years + HORIZON + 1;
    baselines
        .iter()
        .zip(gained.iter().zip(draws))
        .enumerate()
        .map(|(id, (b, (gains, us)))| {
            let mut bursts: Vec<Year> = Vec::new();
            for (j, years) in gains.iter().enumerate() {
                let start = first_start + j as i32;
                if years.is_empty() || bursts.last().is_some_and(|&last| start - last < spacing) {
                    continue;
                }
                if us[j] < weights[j] / years.len() as f64 {
                    bursts.push(start);
                }
            }
            let expected = b
                .expected
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let y = config.first_year + i as i32;
                    bursts.iter().fold(*e, |v, &s| v * config.burst_factor(y - s))
                })
                .collect();
            PlantedCommunity {
                id: id as u32,
                lifecycle: b.lifecycle,
                birth_year: b.birth_year,
                bursts,
                expected,
            }
        })
        .collect()
}

fn truth_labels(config: &SynthConfig, communities: &[PlantedCommunity]) -> BTreeMap<(u32, Year), bool> {
    let span = (config.last_year - config.first_year + 1) as usize;
    let totals: Vec<f64> = (0..span).map(|i| communities.iter().map(|c| c.expected[i]).sum()).collect();
    let mut xg = BTreeMap::new();
    for c in communities {
        let s = shares(&c.expected, &totals);
        let birth = (c.birth_year - config.first_year) as usize;
        for i in birth..span.saturating_sub(HORIZON as usize) {
            if let Some(gr) = truth_gr(&s, i) {
                xg.insert((c.id, config.first_year + i as i32), label_exceptional(gr));
            }
        }
    }
    xg
}

struct Journals {
    top: Vec<u64>,
    rest: Vec<u64>,
    ranks: JournalRanks,
}

fn make_journals(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Journals> {
    let n = config.n_journals;
    let mut citescore: Vec<u32> = (1..=n as u32).collect();
    citescore.shuffle(rng);
    // eigenfactor ranks: citescore ranks perturbed, then re-ranked
    let noise = Normal::new(0.0, 0.2 * n as f64).expect("valid sd");
    let mut keyed: Vec<(f64, usize)> = citescore
        .iter()
        .enumerate()
        .map(|(j, &r)| (r as f64 + noise.sample(rng), j))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut eigen = vec![0u32; n];
    for (rank, &(_, j)) in keyed.iter().enumerate() {
        eigen[j] = rank as u32 + 1;
    }
    let mut top = Vec::new();
    let mut rest = Vec::new();
    let entries: Vec<JournalRank> = (0..n)
        .map(|j| {
            let id = j as u64 + 1;
            let r = JournalRank {
                journal_id: id,
                citescore_rank: Some(citescore[j]),
                eigenfactor_rank: Some(eigen[j]),
            };
            if r.is_citescore_top() {
                top.push(id);
            } else {
                rest.push(id);
            }
            r
        })
        .collect();
    Ok(Journals {
        top,
        rest,
        ranks: JournalRanks::new(entries)?,
    })
}

/// Generates a corpus. Deterministic for a given configuration.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let span = (config.last_year - config.first_year + 1) as usize;
    let communities = plan_communities(config, &mut rng)?;
    if let Some(max) = config.max_papers_per_year {
        for i in 0..span {
            let total: f64 = communities.iter().map(|c| c.expected[i]).sum();
            if total > max {
                return Err(Error::Config(format!(
                    "expected {total:.0} papers in {} exceeds the yearly budget of {max}",
                    config.first_year + i as i32
                )));
            }
        }
    }
    let xg = truth_labels(config, &communities);
    let journals = make_journals(config, &mut rng)?;

    let k = communities.len();
    // realized paper counts per community and year
    let mut counts = vec![vec![0usize; span]; k];
    for (c, row) in communities.iter().zip(counts.iter_mut()) {
        for (i, slot) in row.iter_mut().enumerate() {
            let lambda = c.expected[i];
            if lambda > 0.0 {
                *slot = Poisson::new(lambda).expect("positive mean").sample(&mut rng) as usize;
            }
        }
    }
    // keep every alive community nonempty in its birth year
    for (c, row) in communities.iter().zip(counts.iter_mut()) {
        let b = (c.birth_year - config.first_year) as usize;
        if row[b] == 0 {
            row[b] = 1;
        }
    }
    // cumulative community weights per year for choosing citation targets
    let weights: Vec<Vec<f64>> = (0..span)
        .map(|i| {
            let mut acc = 0.0;
            counts
                .iter()
                .map(|row| {
                    acc += row[i] as f64;
                    acc
                })
                .collect()
        })
        .collect();

    let homes: Vec<[u64; 3]> = (0..k)
        .map(|_| {
            let pool = if journals.rest.is_empty() { &journals.top } else { &journals.rest };
            [0, 1, 2].map(|_| pool[rng.random_range(0..pool.len())])
        })
        .collect();
    let vocab_size = 30usize;
    let global_vocab = 200usize;
    let extra_refs = Poisson::new(config.mean_references - 1.0).ok();
    // the first reference is always intra-community (which keeps every
    // community connected); the rest are drawn so that overall proportions
    // match the configured probabilities
    let m = config.mean_references;
    let later = if m > 1.0 {
        (
            ((config.intra_citation_prob * m - 1.0) / (m - 1.0)).max(0.0),
            config.inter_citation_prob * m / (m - 1.0),
        )
    } else {
        (1.0, 0.0)
    };

    let mut papers: Vec<PaperRecord> = Vec::new();
    let mut paper_community = Vec::new();
    // ids[c][i]: papers of community c in year first_year + i
    let mut ids: Vec<Vec<Vec<PaperId>>> = vec![vec![Vec::new(); span]; k];
    let mut next_id: PaperId = 1;
    let ntopj_boost = 1.0 + 2.0 * config.strength("ntopj");
    let rvit_boost = 1.0 + config.strength("delta_rvit");

    for i in 0..span {
        let year = config.first_year + i as i32;
        for c in 0..k {
            let community = &communities[c];
            let signal = xg.get(&(community.id, year)).copied().unwrap_or(false);
            let age_scale = if signal {
                config.reference_age_scale / rvit_boost
            } else {
                config.reference_age_scale
            };
            let top_prob = if signal {
                (config.top_journal_propensity * ntopj_boost).min(1.0)
            } else {
                config.top_journal_propensity
            };
            for _ in 0..counts[c][i] {
                let id = next_id;
                next_id += 1;
                let n_refs = 1 + extra_refs.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
                let mut refs: Vec<PaperId> = Vec::with_capacity(n_refs);
                for slot in 0..n_refs {
                    let (p_intra, p_inter) = if slot == 0 { (1.0, 0.0) } else { later };
                    let u: f64 = rng.random();
                    let picked = if u < p_intra {
                        retry(&refs, || {
                            let age = sample_age(&mut rng, age_scale, i);
                            pick_paper(&ids[c], i - age, &mut rng)
                        })
                    } else if u < p_intra + p_inter {
                        retry(&refs, || {
                            let age = sample_age(&mut rng, config.reference_age_scale, i).clamp(1.min(i), i);
                            let target = pick_community(&weights[i - age], c, &mut rng)?;
                            pick_paper(&ids[target], i - age, &mut rng)
                        })
                    } else {
                        None
                    };
                    // outside the corpus: mostly community-specific items
                    let item = picked.unwrap_or_else(|| {
                        if rng.random::<f64>() < 0.7 {
                            EXTERNAL_ID_BASE + (c as u64) * 64 + rng.random_range(0..64)
                        } else {
                            EXTERNAL_ID_BASE + (k as u64) * 64 + rng.random_range(0..10_000)
                        }
                    });
                    refs.push(item);
                }
                refs.sort_unstable();
                refs.dedup();

                let u: f64 = rng.random();
                let doc_type = if u < config.review_fraction {
                    DocType::Review
                } else if u < config.review_fraction + config.other_fraction {
                    DocType::Other
                } else {
                    DocType::Article
                };
                let journal = if !journals.top.is_empty() && rng.random::<f64>() < top_prob {
                    journals.top[rng.random_range(0..journals.top.len())]
                } else {
                    homes[c][rng.random_range(0..3)]
                };
                let terms = if rng.random::<f64>() < config.term_fraction {
                    (0..config.terms_per_paper)
                        .map(|_| {
                            if rng.random::<f64>() < 0.8 {
                                format!("c{c}w{}", rng.random_range(0..vocab_size))
                            } else {
                                format!("g{}", rng.random_range(0..global_vocab))
                            }
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                papers.push(PaperRecord {
                    paper_id: id,
                    year,
                    doc_type,
                    journal_id: Some(journal),
                    references: refs,
                    terms,
                });
                paper_community.push((id, community.id));
                ids[c][i].push(id);
            }
        }
    }
    Ok(SynthOutput {
        papers,
        journals: journals.ranks,
        truth: Truth {
            first_year: config.first_year,
            communities,
            paper_community,
            xg,
        },
    })
}

/// Reference age in years, at most `max`.
fn sample_age(rng: &mut ChaCha8Rng, scale: f64, max: usize) -> usize {
    let u: f64 = rng.random();
    let a = (-(1.0 - u).ln() * scale).floor() as usize;
    if a <= max {
        a
    } else {
        rng.random_range(0..=max)
    }
}

/// A random paper of one community from year index `i`, walking back to the
/// nearest earlier year with papers, then forward if there is none.
fn pick_paper(by_year: &[Vec<PaperId>], i: usize, rng: &mut ChaCha8Rng) -> Option<PaperId> {
    (0..=i)
        .rev()
        .chain(i + 1..by_year.len())
        .map(|j| &by_year[j])
        .find(|v| !v.is_empty())
        .map(|v| v[rng.random_range(0..v.len())])
}

/// A size-weighted community other than `own`.
fn pick_community(cumulative: &[f64], own: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
    let total = *cumulative.last()?;
    let own_weight = cumulative[own] - if own == 0 { 0.0 } else { cumulative[own - 1] };
    if total - own_weight <= 0.0 {
        return None;
    }
    loop {
        let x = rng.random::<f64>() * total;
        let c = cumulative.partition_point(|&w| w <= x).min(cumulative.len() - 1);
        if c != own {
            return Some(c);
        }
    }
}

/// Draws until the result is new to `refs`, giving up after a few tries.
fn retry(refs: &[PaperId], mut draw: impl FnMut() -> Option<PaperId>) -> Option<PaperId> {
    for _ in 0..8 {
        match draw() {
            Some(r) if !refs.contains(&r) => return Some(r),
            _ => continue,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_communities: 40,
            size_log_mean: 3f64.ln(),
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.papers, b.papers);
        assert_eq!(a.truth, b.truth);
        let c = generate(&SynthConfig { rng_seed: 2, ..small() }).unwrap();
        assert_ne!(a.papers, c.papers);
    }

    #[test]
    fn references_point_backward() {
        let out = generate(&small()).unwrap();
        let year: std::collections::HashMap<PaperId, Year> = out.papers.iter().map(|p| (p.paper_id, p.year)).collect();
        for p in &out.papers {
            for r in &p.references {
                if let Some(&y) = year.get(r) {
                    assert!(y <= p.year);
                    assert!(*r < p.paper_id);
                }
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = small();
        c.lifecycle_mix.mature = 0.9;
        assert!(generate(&c).is_err());
        let c = SynthConfig {
            intra_citation_prob: 0.1,
            inter_citation_prob: 0.2,
            ..small()
        };
        assert!(generate(&c).is_err());
        let c = SynthConfig {
            max_papers_per_year: Some(10.0),
            ..small()
        };
        assert!(generate(&c).is_err());
        let mut c = small();
        c.signal_strengths.insert("bogus".into(), 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn burst_offsets_cover_the_growth_window() {
        let c = SynthConfig::default();
        let offsets = c.xg_offsets();
        assert!(!offsets.is_empty());
        // at the burst start the community is growing into the target year
        assert!(offsets.contains(&0));
        let no_burst = SynthConfig {
            burst_rate: 0.01,
            signal_strengths: BTreeMap::new(),
            ..SynthConfig::default()
        };
        assert!(no_burst.xg_offsets().is_empty());
    }
}
