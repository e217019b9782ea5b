//! End-to-end run: corpus → model → extension → indicators → fit →
//! forecast → evaluation, plus run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::citegraph::build_graph;
use crate::cluster::{
    assign_new_papers, leiden_with_report, tune_resolution, Bm25Params, ClusterConfig, ModelMeta, Partition,
};
use crate::corpus::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::evaluate::{
    evaluate_slices, lifecycle_report, write_lifecycle_tsv, write_reports_tsv, ContingencyReport, SliceKind,
    SliceMode,
};
use crate::forecast::{build_records, select_oracle_n, write_forecasts, CompositeModel, ForecastRecord, HORIZON};
use crate::indicators::{compute_indicators, write_indicators, IndicatorRow, RcYearTable, DEFAULT_WINDOW};
use crate::regression::{stepwise_select, Dataset, FittedModel, TrainingMeta, DEFAULT_Z_THRESHOLD};
use crate::synth::{generate, SynthConfig};
use crate::Year;

/// Provenance written next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    /// `(path, sha256)` of every input file.
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub version: String,
    pub seeds: Vec<(String, u64)>,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
}

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>, started_at: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: Vec::new(),
            started_at,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.push((name.to_string(), value));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// File names inside a model directory.
pub const MODEL_ASSIGNMENT: &str = "assignment.tsv";
pub const MODEL_META: &str = "model.json";

pub fn load_model(dir: &Path) -> Result<(Partition, ModelMeta)> {
    Partition::load(&dir.join(MODEL_ASSIGNMENT), &dir.join(MODEL_META))
}

pub fn write_model(dir: &Path, partition: &Partition, meta: &ModelMeta) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    partition.write_tsv(&dir.join(MODEL_ASSIGNMENT))?;
    meta.write(&dir.join(MODEL_META))
}

/// Where a manifest for `output` goes: `dir/manifest.json` for
/// directories, `file.manifest.json` otherwise.
pub fn manifest_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join("manifest.json")
    } else {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Current time for manifests; `SOURCE_DATE_EPOCH` overrides the clock.
pub fn now_epoch() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    /// Stepwise probit fitted on the run's own training years.
    #[default]
    Fitted,
    /// The published composite coefficients.
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub papers: Option<PathBuf>,
    pub journals: Option<PathBuf>,
    /// Generates the corpus when `papers` is absent.
    pub synth: Option<SynthConfig>,
    pub model_year: Option<Year>,
    /// Last year assigned to the model; defaults to the corpus's last year.
    pub extend_through: Option<Year>,
    pub extended_graph: bool,
    pub cluster: ClusterConfig,
    /// Tunes the resolution to reach about this many communities.
    pub target_rc_count: Option<usize>,
    pub bm25: Bm25Params,
    pub window: i32,
    /// Years used to fit the model; defaults to the two years after the
    /// model year.
    pub fit_years: Vec<Year>,
    pub fit_min_papers: u32,
    pub z_threshold: f64,
    pub model: ModelSource,
    /// Years to forecast; defaults to the model year − 2 through the last
    /// year with a full horizon.
    pub forecast_years: Vec<Year>,
    pub min_papers: u32,
    pub slice_mode: SliceMode,
    pub slices: Vec<SliceKind>,
    pub lifecycle_fy: Option<Year>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            papers: None,
            journals: None,
            synth: None,
            model_year: None,
            extend_through: None,
            extended_graph: true,
            cluster: ClusterConfig::default(),
            target_rc_count: None,
            bm25: Bm25Params::default(),
            window: DEFAULT_WINDOW,
            fit_years: Vec::new(),
            fit_min_papers: 20,
            z_threshold: DEFAULT_Z_THRESHOLD,
            model: ModelSource::Fitted,
            forecast_years: Vec::new(),
            min_papers: 20,
            slice_mode: SliceMode::Reselected,
            slices: vec![SliceKind::Fy, SliceKind::Ry],
            lifecycle_fy: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)?;
        // relative input paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.papers, &mut config.journals].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub model_year: Year,
    pub last_year: Year,
    pub rc_count: usize,
    pub resolution: f64,
    pub fitted: Option<FittedModel>,
    pub model: CompositeModel,
    pub records: Vec<ForecastRecord>,
    pub reports: Vec<ContingencyReport>,
    pub outputs: Vec<PathBuf>,
}

impl PipelineSummary {
    pub fn report(&self, slice: SliceKind, value: Option<i64>) -> Option<&ContingencyReport> {
        self.reports.iter().find(|r| r.slice == slice && r.value == value)
    }
}

/// Clusters through `model_year` and assigns later papers year by year
/// through `through`.
pub fn build_and_extend(
    corpus: &Corpus,
    model_year: Year,
    through: Year,
    config: &PipelineConfig,
) -> Result<(Partition, ModelMeta)> {
    let graph = build_graph(corpus, config.extended_graph, model_year)?;
    log::info!("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());
    let mut cluster = config.cluster.clone();
    if let Some(target) = config.target_rc_count {
        cluster.resolution = tune_resolution(&graph, target, &cluster)?;
    }
    let (mut partition, report) = leiden_with_report(&graph, &cluster)?;
    drop(graph);
    log::info!("clustered: {} communities", partition.rc_count());
    let mut extensions = Vec::new();
    for year in model_year + 1..=through {
        let (next, ext) = assign_new_papers(&partition, corpus, year, config.bm25)?;
        partition = next;
        extensions.push(ext);
    }
    let meta = ModelMeta {
        model_year,
        through_year: partition.through_year(),
        config: cluster,
        quality: Some(report.quality),
        rc_count: partition.rc_count(),
        paper_count: partition.len(),
        extensions,
    };
    Ok((partition, meta))
}

/// Indicator rows and outcomes for `fit_years`, restricted to communities
/// with at least `min_papers` papers in the forecast year.
pub fn training_dataset(
    rows: &[IndicatorRow],
    table: &RcYearTable,
    model_year: Year,
    last_year: Year,
    fit_years: &[Year],
    min_papers: u32,
) -> Result<Dataset> {
    let kept: Vec<IndicatorRow> = rows
        .iter()
        .filter(|r| fit_years.contains(&r.raw.fy) && r.raw.papers_in_fy >= min_papers)
        .cloned()
        .collect();
    let records = build_records(&kept, &CompositeModel::default(), table, model_year, Some(last_year))?;
    if let Some(e) = crate::forecast::missing_outcomes(&records) {
        return Err(e);
    }
    let names: Vec<String> = crate::indicators::Indicator::ALL.iter().map(|i| i.name().to_string()).collect();
    let columns = crate::indicators::Indicator::ALL
        .iter()
        .map(|&ind| kept.iter().map(|r| r.std.get(ind)).collect())
        .collect();
    Ok(Dataset {
        names,
        columns,
        y: records.iter().map(|r| r.outcome == Some(true)).collect(),
    })
}

/// Flags the oracle-n top records separately within each forecast year.
pub fn select_oracle_by_year(records: &mut [ForecastRecord], min_papers: u32) -> Result<()> {
    let mut fys: Vec<Year> = records.iter().map(|r| r.fy).collect();
    fys.sort_unstable();
    fys.dedup();
    for fy in fys {
        let idx: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].fy == fy && records[i].papers_in_fy >= min_papers)
            .collect();
        let mut subset: Vec<ForecastRecord> = idx.iter().map(|&i| records[i].clone()).collect();
        select_oracle_n(&mut subset)?;
        for (&i, r) in idx.iter().zip(subset) {
            records[i].predicted = r.predicted;
        }
    }
    Ok(())
}

/// Runs every stage and writes artifacts into `out`. `started_at` stamps
/// the manifest.
pub fn run_pipeline(config: &PipelineConfig, out: &Path, started_at: u64) -> Result<PipelineSummary> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut manifest = RunManifest::new("pipeline", Vec::new(), started_at);
    manifest.seed("cluster", config.cluster.rng_seed);
    let mut outputs = Vec::new();

    let (papers, journals) = match (&config.papers, &config.synth) {
        (Some(p), _) => (p.clone(), config.journals.clone()),
        (None, Some(s)) => {
            let dir = out.join("synth");
            let generated = generate(s)?;
            generated.write(&dir, s)?;
            manifest.seed("synth", s.rng_seed);
            outputs.push(dir.join("truth.tsv"));
            (dir.join("papers.jsonl"), Some(dir.join("ranks.csv")))
        }
        (None, None) => return Err(Error::Config("pipeline needs `papers` or `synth`".into())),
    };
    manifest.input(&papers)?;
    if let Some(j) = journals.as_deref().filter(|j| j.exists()) {
        manifest.input(j)?;
    }
    let corpus = load_corpus(&papers, journals.as_deref())?;
    let meta = corpus.meta().clone();
    let last_year = config.extend_through.unwrap_or(meta.last_year);
    let model_year = config.model_year.unwrap_or(last_year - 2 * HORIZON + 1);
    log::info!("corpus: {} papers, {}..={}", meta.paper_count, meta.first_year, meta.last_year);

    log::info!("corpus loaded");
    let (partition, model_meta) = build_and_extend(&corpus, model_year, last_year, config)?;
    log::info!("model: {} communities", model_meta.rc_count);
    let model_dir = out.join("model");
    write_model(&model_dir, &partition, &model_meta)?;
    outputs.push(model_dir.join(MODEL_ASSIGNMENT));
    outputs.push(model_dir.join(MODEL_META));

    log::info!("model written");
    let table = RcYearTable::build(&corpus, &partition);
    let fit_years = if config.fit_years.is_empty() {
        vec![model_year + 1, model_year + 2]
    } else {
        config.fit_years.clone()
    };
    let forecast_years = if config.forecast_years.is_empty() {
        (model_year - 2..=last_year - HORIZON).collect()
    } else {
        config.forecast_years.clone()
    };
    let mut years: Vec<Year> = fit_years.iter().chain(&forecast_years).copied().collect();
    years.sort_unstable();
    years.dedup();
    let rows = compute_indicators(&table, &years, config.window)?;
    log::info!("indicators computed");
    write_indicators(&out.join("indicators.tsv"), &rows)?;
    outputs.push(out.join("indicators.tsv"));

    let (fitted, model) = match config.model {
        ModelSource::Fitted => {
            let data = training_dataset(&rows, &table, model_year, last_year, &fit_years, config.fit_min_papers)?;
            let result = stepwise_select(&data, config.z_threshold)?;
            let training = TrainingMeta {
                model_year,
                forecast_years: fit_years.clone(),
                ry_min: fit_years.iter().min().map_or(0, |y| y - model_year),
                ry_max: fit_years.iter().max().map_or(0, |y| y - model_year),
                min_papers: config.fit_min_papers,
                n_obs: data.y.len(),
                n_positive: data.y.iter().filter(|&&b| b).count(),
            };
            let fitted = FittedModel::new(result, training);
            fitted.write(&out.join("fit.json"))?;
            outputs.push(out.join("fit.json"));
            let model = CompositeModel::from_fitted(&fitted)?;
            (Some(fitted), model)
        }
        ModelSource::Published => (None, CompositeModel::default()),
    };

    let forecast_rows: Vec<IndicatorRow> =
        rows.into_iter().filter(|r| forecast_years.contains(&r.raw.fy)).collect();
    let mut records = build_records(&forecast_rows, &model, &table, model_year, Some(last_year))?;
    select_oracle_by_year(&mut records, config.min_papers)?;
    write_forecasts(&out.join("forecasts.tsv"), &records)?;
    outputs.push(out.join("forecasts.tsv"));

    let reports = evaluate_slices(&records, None, config.min_papers, config.slice_mode, &config.slices)?;
    write_reports_tsv(&out.join("evaluation.tsv"), &reports)?;
    write_json(&out.join("evaluation.json"), &reports)?;
    outputs.push(out.join("evaluation.tsv"));
    outputs.push(out.join("evaluation.json"));

    let lifecycle_fy = config.lifecycle_fy.unwrap_or(last_year - HORIZON);
    let lifecycle = lifecycle_report(&table, last_year, lifecycle_fy, config.min_papers, config.window);
    write_lifecycle_tsv(&out.join("lifecycle.tsv"), &lifecycle)?;
    outputs.push(out.join("lifecycle.tsv"));

    for o in &outputs {
        manifest.output(o);
    }
    manifest.arguments = vec![serde_json::to_string(config)?];
    manifest.write(&out.join("manifest.json"))?;

    Ok(PipelineSummary {
        model_year,
        last_year,
        rc_count: model_meta.rc_count,
        resolution: model_meta.config.resolution,
        fitted,
        model,
        records,
        reports,
        outputs,
    })
}
