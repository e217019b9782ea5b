//! The `rcf` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::citegraph::build_graph;
use crate::cluster::{assign_new_papers, recluster_seeded, Bm25Params, ClusterConfig, ModelMeta, QualityFunction};
use crate::corpus::{load_corpus, Corpus};
use crate::error::{Error, Result};
use crate::evaluate::{
    evaluate_slices, lifecycle_report, write_lifecycle_tsv, write_reports_tsv, SliceKind, SliceMode, TaxonomyMap,
};
use crate::forecast::{
    build_records, missing_outcomes, read_forecasts, select_top_n, write_forecasts, CompositeModel,
};
use crate::indicators::{compute_indicators, read_indicators, write_indicators, RcYearTable, DEFAULT_WINDOW};
use crate::pipeline::{
    build_and_extend, load_model, manifest_path, now_epoch, run_pipeline, training_dataset, write_json, write_model,
    PipelineConfig, RunManifest,
};
use crate::regression::{stepwise_select, FittedModel, TrainingMeta, DEFAULT_Z_THRESHOLD};
use crate::synth::{generate, SynthConfig};
use crate::Year;

#[derive(Debug, Parser)]
#[command(name = "rcf", version, about = "Forecast exceptional growth of research communities")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random choice; overrides seeds in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus checks.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Build or extend a community model.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Compute raw and standardized indicators.
    Indicators(IndicatorsArgs),
    /// Fit the probit model by stepwise selection.
    Fit(FitArgs),
    /// Score communities and flag predicted exceptional growth.
    Forecast(ForecastArgs),
    /// Contingency tables and skill scores from forecasts with outcomes.
    Evaluate(EvaluateArgs),
    /// Exceptional growth and new peaks by years since peak.
    Lifecycle(LifecycleArgs),
    /// Generate a synthetic corpus with known ground truth.
    Synth(SynthArgs),
    /// Run every stage from one JSON config.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Validate a corpus and print a JSON report.
    Validate {
        papers: PathBuf,
        #[arg(long)]
        journals: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Papers, one JSON object per line.
    #[arg(long)]
    pub papers: PathBuf,
    /// Journal ranks CSV.
    #[arg(long)]
    pub journals: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self, manifest: &mut RunManifest) -> Result<Corpus> {
        manifest.input(&self.papers)?;
        if let Some(j) = self.journals.as_deref().filter(|j| j.exists()) {
            manifest.input(j)?;
        }
        load_corpus(&self.papers, self.journals.as_deref())
    }
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Cluster the citation graph through a model year.
    Build(BuildArgs),
    /// Add the next year to an existing model.
    Extend(ExtendArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Model year: the last year of papers in the graph.
    #[arg(long)]
    pub through_year: Year,
    /// Cluster settings as JSON; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<f64>,
    /// `cpm` or `modularity`.
    #[arg(long)]
    pub quality: Option<String>,
    /// Tune the resolution for about this many communities.
    #[arg(long)]
    pub target_rc_count: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Direct citations only, without cited items outside the corpus.
    #[arg(long)]
    pub no_extended: bool,
    /// Output model directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Model directory to extend.
    #[arg(long)]
    pub model: PathBuf,
    /// Year to add; must follow the model's last year.
    #[arg(long)]
    pub year: Year,
    /// Re-cluster through the year starting from the existing model instead
    /// of assigning new papers.
    #[arg(long)]
    pub seeded: bool,
    #[arg(long)]
    pub no_extended: bool,
    /// Output directory (default: update the model in place).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct YearsArg {
    /// A forecast year.
    #[arg(long, conflicts_with = "fy_range")]
    pub fy: Option<Year>,
    /// Inclusive forecast-year range `A:B`.
    #[arg(long)]
    pub fy_range: Option<String>,
}

impl YearsArg {
    fn years(&self) -> Result<Vec<Year>> {
        match (&self.fy, &self.fy_range) {
            (Some(y), _) => Ok(vec![*y]),
            (None, Some(r)) => parse_range(r),
            (None, None) => Err(Error::Config("give --fy or --fy-range".into())),
        }
    }
}

pub fn parse_range(s: &str) -> Result<Vec<Year>> {
    let bad = || Error::Config(format!("expected a year range A:B, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: Year = a.trim().parse().map_err(|_| bad())?;
    let b: Year = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

#[derive(Debug, Args)]
pub struct IndicatorsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub years: YearsArg,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Indicator table from `rcf indicators`.
    #[arg(long)]
    pub indicators: PathBuf,
    #[command(flatten)]
    pub years: YearsArg,
    #[arg(long, default_value_t = 20)]
    pub min_papers: u32,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    pub z_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub indicators: PathBuf,
    /// Fitted model or composite terms JSON (default: published
    /// coefficients).
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    #[command(flatten)]
    pub years: YearsArg,
    #[arg(long, default_value_t = 20)]
    pub min_papers: u32,
    #[arg(long, conflicts_with = "oracle_n")]
    pub top: Option<usize>,
    /// Flag ceil(1.5 × actual exceptional count) per forecast year.
    #[arg(long)]
    pub oracle_n: bool,
    /// Model directory; supplies the model year.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus for outcomes; without it forecasts carry none.
    #[arg(long)]
    pub papers: Option<PathBuf>,
    #[arg(long)]
    pub journals: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Forecasts with outcome columns.
    #[arg(long)]
    pub forecasts: PathBuf,
    #[arg(long)]
    pub fy_range: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub min_papers: u32,
    /// Extra slices: fy, ry, field, discipline.
    #[arg(long, value_delimiter = ',')]
    pub by: Vec<String>,
    /// TSV `rc_id\tdiscipline_id\tfield_id`.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Reuse the forecast's flags instead of re-selecting per slice.
    #[arg(long)]
    pub inherited: bool,
    /// Output directory for evaluation.json and evaluation.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LifecycleArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub fy: Year,
    #[arg(long, default_value_t = 20)]
    pub min_papers: u32,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator settings as JSON (default settings when absent).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv`, runs the command and maps errors to a JSON report on
/// stderr.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed;
    let args: Vec<String> = std::env::args().skip(1).collect();
    match cli.command {
        Command::Corpus(CorpusCommand::Validate { papers, journals }) => {
            let corpus = load_corpus(&papers, journals.as_deref())?;
            let report = serde_json::json!({
                "meta": corpus.meta(),
                "validation": corpus.validation(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Model(ModelCommand::Build(a)) => model_build(a, seed, args),
        Command::Model(ModelCommand::Extend(a)) => model_extend(a, seed, args),
        Command::Indicators(a) => indicators(a, args),
        Command::Fit(a) => fit(a, args),
        Command::Forecast(a) => forecast(a, args),
        Command::Evaluate(a) => evaluate(a, args),
        Command::Lifecycle(a) => lifecycle(a, args),
        Command::Synth(a) => synth(a, seed, args),
        Command::Pipeline(a) => {
            let mut config = PipelineConfig::load(&a.config)?;
            if let Some(s) = seed {
                config.cluster.rng_seed = s;
                if let Some(sc) = config.synth.as_mut() {
                    sc.rng_seed = s;
                }
            }
            let summary = run_pipeline(&config, &a.out, now_epoch())?;
            for r in summary.reports.iter().filter(|r| r.value.is_none()) {
                println!(
                    "{}\trecords={}\txg={}\tprecision={:.3}\trecall={:.3}\tcsi={:.3}",
                    r.slice.name(),
                    r.records,
                    r.xg,
                    r.precision,
                    r.recall,
                    r.csi
                );
            }
            Ok(())
        }
    }
}

fn model_build(a: BuildArgs, seed: Option<u64>, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("model build", args, now_epoch());
    let corpus = a.corpus.load(&mut manifest)?;
    let mut cluster = match &a.config {
        Some(path) => {
            manifest.input(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<ClusterConfig>(&text)?
        }
        None => ClusterConfig::default(),
    };
    if let Some(r) = a.resolution {
        cluster.resolution = r;
    }
    if let Some(q) = &a.quality {
        cluster.quality = match q.as_str() {
            "cpm" => QualityFunction::Cpm,
            "modularity" => QualityFunction::Modularity,
            other => return Err(Error::Config(format!("unknown quality function `{other}`"))),
        };
    }
    if let Some(m) = a.max_iterations {
        cluster.max_iterations = m;
    }
    if let Some(s) = seed {
        cluster.rng_seed = s;
    }
    manifest.seed("cluster", cluster.rng_seed);
    let config = PipelineConfig {
        extended_graph: !a.no_extended,
        cluster,
        target_rc_count: a.target_rc_count,
        ..PipelineConfig::default()
    };
    let (partition, meta) = build_and_extend(&corpus, a.through_year, a.through_year, &config)?;
    write_model(&a.out, &partition, &meta)?;
    finish(manifest, &a.out, &[])
}

fn model_extend(a: ExtendArgs, seed: Option<u64>, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("model extend", args, now_epoch());
    let corpus = a.corpus.load(&mut manifest)?;
    let (prior, mut meta) = load_model(&a.model)?;
    manifest.input(&a.model.join(crate::pipeline::MODEL_ASSIGNMENT))?;
    let (partition, meta) = if a.seeded {
        if a.year != prior.through_year() + 1 {
            return Err(Error::NonContiguousExtension {
                through: prior.through_year(),
                requested: a.year,
                expected: prior.through_year() + 1,
            });
        }
        let graph = build_graph(&corpus, !a.no_extended, a.year)?;
        let mut cluster = meta.config.clone();
        if let Some(s) = seed {
            cluster.rng_seed = s;
        }
        manifest.seed("cluster", cluster.rng_seed);
        let (p, report) = recluster_seeded(&graph, &prior, &cluster)?;
        let meta = ModelMeta {
            model_year: p.model_year(),
            through_year: p.through_year(),
            config: cluster,
            quality: Some(report.quality),
            rc_count: p.rc_count(),
            paper_count: p.len(),
            extensions: Vec::new(),
        };
        (p, meta)
    } else {
        let (p, report) = assign_new_papers(&prior, &corpus, a.year, Bm25Params::default())?;
        meta.through_year = p.through_year();
        meta.rc_count = p.rc_count();
        meta.paper_count = p.len();
        meta.extensions.push(report);
        (p, meta)
    };
    let out = a.out.unwrap_or(a.model);
    write_model(&out, &partition, &meta)?;
    finish(manifest, &out, &[])
}

fn corpus_and_table(corpus: &CorpusArgs, model: &Path, manifest: &mut RunManifest) -> Result<(RcYearTable, ModelMeta)> {
    let corpus = corpus.load(manifest)?;
    manifest.input(&model.join(crate::pipeline::MODEL_ASSIGNMENT))?;
    let (partition, meta) = load_model(model)?;
    Ok((RcYearTable::build(&corpus, &partition), meta))
}

fn indicators(a: IndicatorsArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("indicators", args, now_epoch());
    let (table, meta) = corpus_and_table(&a.corpus, &a.model, &mut manifest)?;
    let years = a.years.years()?;
    if let Some(&y) = years.iter().find(|&&y| y > meta.through_year) {
        return Err(Error::YearOutOfSpan {
            year: y,
            first: meta.model_year,
            last: meta.through_year,
        });
    }
    let rows = compute_indicators(&table, &years, a.window)?;
    write_indicators(&a.out, &rows)?;
    finish(manifest, &a.out, &[])
}

fn fit(a: FitArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("fit", args, now_epoch());
    let (table, meta) = corpus_and_table(&a.corpus, &a.model, &mut manifest)?;
    manifest.input(&a.indicators)?;
    let rows = read_indicators(&a.indicators)?;
    let years = a.years.years()?;
    let data = training_dataset(&rows, &table, meta.model_year, meta.through_year, &years, a.min_papers)?;
    let result = stepwise_select(&data, a.z_threshold)?;
    let training = TrainingMeta {
        model_year: meta.model_year,
        forecast_years: years.clone(),
        ry_min: years.iter().min().map_or(0, |y| y - meta.model_year),
        ry_max: years.iter().max().map_or(0, |y| y - meta.model_year),
        min_papers: a.min_papers,
        n_obs: data.y.len(),
        n_positive: data.y.iter().filter(|&&b| b).count(),
    };
    FittedModel::new(result, training).write(&a.out)?;
    finish(manifest, &a.out, &[])
}

fn forecast(a: ForecastArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("forecast", args, now_epoch());
    manifest.input(&a.indicators)?;
    let model = match &a.coefficients {
        Some(p) => {
            manifest.input(p)?;
            CompositeModel::load(p)?
        }
        None => CompositeModel::default(),
    };
    let years = a.years.years()?;
    let rows: Vec<_> = read_indicators(&a.indicators)?
        .into_iter()
        .filter(|r| years.contains(&r.raw.fy) && r.raw.papers_in_fy >= a.min_papers)
        .collect();
    let mut records = match &a.papers {
        Some(papers) => {
            let corpus = CorpusArgs {
                papers: papers.clone(),
                journals: a.journals.clone(),
            };
            let (table, meta) = corpus_and_table(&corpus, &a.model, &mut manifest)?;
            build_records(&rows, &model, &table, meta.model_year, Some(meta.through_year))?
        }
        None => {
            let (_, meta) = load_model(&a.model)?;
            build_records(&rows, &model, &RcYearTable::default(), meta.model_year, None)?
        }
    };
    if a.oracle_n {
        crate::pipeline::select_oracle_by_year(&mut records, a.min_papers)?;
    } else if let Some(n) = a.top {
        select_top_n(&mut records, n)?;
    }
    write_forecasts(&a.out, &records)?;
    finish(manifest, &a.out, &[])
}

fn evaluate(a: EvaluateArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("evaluate", args, now_epoch());
    manifest.input(&a.forecasts)?;
    let mut records = read_forecasts(&a.forecasts)?;
    if let Some(r) = &a.fy_range {
        let years = parse_range(r)?;
        records.retain(|rec| years.contains(&rec.fy));
    }
    if let Some(e) = missing_outcomes(&records) {
        return Err(e);
    }
    let by: Vec<SliceKind> = a.by.iter().map(|s| SliceKind::parse(s)).collect::<Result<_>>()?;
    let taxonomy = match &a.taxonomy {
        Some(p) => {
            manifest.input(p)?;
            Some(TaxonomyMap::load(p)?)
        }
        None => None,
    };
    let mode = if a.inherited {
        SliceMode::Inherited
    } else {
        SliceMode::Reselected
    };
    if mode == SliceMode::Inherited && !records.iter().any(|r| r.predicted) {
        // nothing flagged upstream: size the selection from the outcomes
        crate::pipeline::select_oracle_by_year(&mut records, a.min_papers)?;
    }
    let reports = evaluate_slices(&records, taxonomy.as_ref(), a.min_papers, mode, &by)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_json(&a.out.join("evaluation.json"), &reports)?;
    write_reports_tsv(&a.out.join("evaluation.tsv"), &reports)?;
    finish(manifest, &a.out, &["evaluation.json", "evaluation.tsv"])
}

fn lifecycle(a: LifecycleArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("lifecycle", args, now_epoch());
    let (table, meta) = corpus_and_table(&a.corpus, &a.model, &mut manifest)?;
    let report = lifecycle_report(&table, meta.through_year, a.fy, a.min_papers, a.window);
    write_lifecycle_tsv(&a.out, &report)?;
    finish(manifest, &a.out, &[])
}

fn synth(a: SynthArgs, seed: Option<u64>, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new("synth", args, now_epoch());
    let mut config = match &a.config {
        Some(p) => {
            manifest.input(p)?;
            SynthConfig::load(p)?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        config.rng_seed = s;
    }
    manifest.seed("synth", config.rng_seed);
    let out = generate(&config)?;
    out.write(&a.out, &config)?;
    finish(manifest, &a.out, &["papers.jsonl", "ranks.csv", "truth.tsv"])
}

/// Records outputs and writes the manifest next to `out`.
fn finish(mut manifest: RunManifest, out: &Path, files: &[&str]) -> Result<()> {
    if files.is_empty() {
        manifest.output(out);
    }
    for f in files {
        manifest.output(&out.join(f));
    }
    manifest.write(&manifest_path(out))
}
