//! Subcommands of the `sonder` binary. Each one delegates to the library
//! crates and returns its stdout text so it can be tested in-process.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use sonder_core::analytics::{
    aggregate, aggregates_csv, export_table, press_models, region_curves, region_curves_csv, score_store,
    synthetic_panel, Covariates, GroupBy, Panel, PanelConfig,
};
use sonder_core::completeness::{rerank, score_corpus, Lambda};
use sonder_core::embedding::{build_embedder, Embedder, EmbedderConfig};
use sonder_core::experiment::{analyze_simulation, simulate_agents, write_exports, SimulationConfig, SurveyScale};
use sonder_core::ingestion::{
    build_trending_source, ingest_jsonl, pagerank, weights_for_corpus, CorpusKey, CorpusStore, CountryCode,
    DomainGraph, DomainWeights, PageRankParams, TrendingConfig, DATA_DIR_ENV, DEFAULT_WEIGHT_FLOOR,
};
use sonder_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "sonder", version, about = "Search result completeness toolkit")]
pub struct Cli {
    /// Corpus store root.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "data")]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL file of search records and merge it into the store.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Abort on the first bad line instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Print the completeness curve of a stored query (COUNTRY:DATE:KIND:QUERY).
    Curve {
        key: CorpusKey,
        /// Domain weights JSON (domain -> weight).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Print a stored query's results reranked with the given lambda.
    Rank {
        key: CorpusKey,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Store-wide analyses written as CSV/text under --out.
    Analyze {
        #[arg(value_enum)]
        kind: AnalysisKind,
        #[arg(long)]
        out: PathBuf,
        /// Wide covariates CSV (country,year,press_restriction,gdp_per_capita,population[,region]).
        #[arg(long)]
        covariates: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Grouping for `aggregate`, e.g. `country,date` or `region`.
        #[arg(long, default_value = "country,date")]
        by: String,
        /// Covariance estimator for `regress`.
        #[arg(long, default_value = "hc1")]
        se: String,
        /// Regress on a generated panel instead of the store.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the two-arm experiment and write its exports under --out.
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "classical")]
        se: String,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        state_dir: Option<PathBuf>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Directory of survey scale JSON files.
        #[arg(long)]
        scales_dir: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// PageRank over a `from,to` domain link CSV, written as weights JSON.
    Pagerank {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        damping: f64,
    },
    /// List a day's trending queries from a fixture directory.
    Trending {
        #[arg(long)]
        fixture_dir: PathBuf,
        #[arg(long)]
        country: String,
        #[arg(long)]
        date: NaiveDate,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    Aggregate,
    Regress,
    Curves,
}

type CmdResult = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_weights(path: Option<&Path>) -> Result<Option<DomainWeights>, String> {
    path.map(|p| {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
    })
    .transpose()
}

fn embedder() -> Result<Box<dyn Embedder>, String> {
    build_embedder(&EmbedderConfig::from_env().map_err(err)?).map_err(err)
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Ingest { input, strict } => {
            let store = CorpusStore::open(&cli.data_dir).map_err(err)?;
            let report = ingest_jsonl(&input, &store, strict).map_err(err)?;
            serde_json::to_string_pretty(&report).map_err(err)
        }
        Command::Curve { key, weights } => curve(&cli.data_dir, &key, weights.as_deref()),
        Command::Rank { key, lambda, top, weights } => rank(&cli.data_dir, &key, lambda, top, weights.as_deref()),
        Command::Analyze {
            kind,
            out,
            covariates,
            weights,
            by,
            se,
            synthetic,
            seed,
        } => {
            let opts = AnalyzeOpts {
                out,
                covariates,
                weights,
                by,
                se,
                synthetic,
                seed,
            };
            analyze(&cli.data_dir, kind, &opts)
        }
        Command::Simulate { seed, out, se } => simulate(seed, &out, &se),
        Command::Serve {
            port,
            roster,
            state_dir,
            static_dir,
            scales_dir,
            weights,
        } => {
            let mut config = ServiceConfig::from_env()?;
            config.data_dir = cli.data_dir;
            if let Some(p) = port {
                config.port = p;
            }
            config.roster_path = roster.or(config.roster_path);
            config.state_dir = state_dir.or(config.state_dir);
            config.static_dir = static_dir;
            config.scales_dir = scales_dir;
            config.weights = load_weights(weights.as_deref())?;
            let rt = tokio::runtime::Runtime::new().map_err(err)?;
            rt.block_on(sonder_service::serve(config))?;
            Ok(String::new())
        }
        Command::Pagerank { edges, out, damping } => {
            let graph = DomainGraph::from_csv(&edges).map_err(err)?;
            let params = PageRankParams {
                damping,
                ..PageRankParams::default()
            };
            let w = pagerank(&graph, params).map_err(err)?;
            fs::write(&out, serde_json::to_string_pretty(&w).map_err(err)?).map_err(err)?;
            Ok(format!("{} domains -> {}", w.0.len(), out.display()))
        }
        Command::Trending {
            fixture_dir,
            country,
            date,
        } => {
            let source = build_trending_source(
                "fixture",
                &TrendingConfig {
                    fixture_dir: Some(fixture_dir),
                },
            )
            .map_err(err)?;
            let country = CountryCode::new(&country).map_err(err)?;
            Ok(source.fetch(&country, date).map_err(err)?.join("\n"))
        }
    }
}

pub fn curve(data_dir: &Path, key: &CorpusKey, weights: Option<&Path>) -> CmdResult {
    let store = CorpusStore::open(data_dir).map_err(err)?;
    let corpus = store.load_corpus(key).map_err(err)?;
    let weights = load_weights(weights)?;
    let embedder = embedder()?;
    let c = sonder_core::analytics::pipeline::corpus_curve(&corpus, embedder.as_ref(), weights.as_ref())
        .map_err(err)?;
    let mut out = String::from("n\tfraction\tcompleteness\n");
    for (n, p) in c.points.iter().enumerate() {
        let _ = writeln!(out, "{n}\t{:.4}\t{:.6}", p.fraction, p.value);
    }
    let _ = writeln!(out, "AUC\t{:.6}", c.auc);
    Ok(out)
}

pub fn rank(data_dir: &Path, key: &CorpusKey, lambda: f64, top: Option<usize>, weights: Option<&Path>) -> CmdResult {
    let lambda = Lambda::new(lambda).map_err(err)?;
    let store = CorpusStore::open(data_dir).map_err(err)?;
    let corpus = store.load_corpus(key).map_err(err)?;
    let weights = load_weights(weights)?.map(|w| weights_for_corpus(&corpus, &w, DEFAULT_WEIGHT_FLOOR));
    let embedder = embedder()?;
    let texts = corpus.texts();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let vectors = embedder.embed_batch(&refs).map_err(err)?;
    let q = embedder.embed(&key.query).map_err(err)?;
    let ids: Vec<String> = corpus.records.iter().map(|r| r.record_id()).collect();
    let scoring = score_corpus(&q, &vectors, &ids, weights.as_deref(), lambda).map_err(err)?;
    let ranked = rerank(scoring.results, lambda);
    let mut out = String::from("position\trank\trelevance\tcompleteness\tblended\ttitle\n");
    for (i, r) in ranked.iter().take(top.unwrap_or(usize::MAX)).enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            i + 1,
            r.rank,
            r.relevance,
            r.completeness,
            r.blended,
            corpus.records[r.rank as usize - 1].title
        );
    }
    Ok(out)
}

pub struct AnalyzeOpts {
    pub out: PathBuf,
    pub covariates: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub by: String,
    pub se: String,
    pub synthetic: bool,
    pub seed: u64,
}

pub fn analyze(data_dir: &Path, kind: AnalysisKind, opts: &AnalyzeOpts) -> CmdResult {
    fs::create_dir_all(&opts.out).map_err(|e| format!("{}: {e}", opts.out.display()))?;
    let covariates = opts.covariates.as_deref().map(Covariates::load).transpose().map_err(err)?;
    let scored = || -> Result<_, String> {
        let store = CorpusStore::open(data_dir).map_err(err)?;
        let weights = load_weights(opts.weights.as_deref())?;
        score_store(&store, embedder()?.as_ref(), weights.as_ref(), covariates.as_ref()).map_err(err)
    };
    match kind {
        AnalysisKind::Aggregate => {
            let by = GroupBy::parse(&opts.by).map_err(err)?;
            let aggs = aggregate(&scored()?, by).map_err(err)?;
            let path = opts.out.join("aggregates.csv");
            fs::write(&path, aggregates_csv(&aggs).map_err(err)?).map_err(err)?;
            Ok(format!("{} groups -> {}", aggs.len(), path.display()))
        }
        AnalysisKind::Curves => {
            let scored = scored()?;
            let curves = region_curves(scored.iter().map(|q| (q.region, &q.curve))).map_err(err)?;
            let path = opts.out.join("region_curves.csv");
            fs::write(&path, region_curves_csv(&curves).map_err(err)?).map_err(err)?;
            let mut msg = String::new();
            for c in &curves {
                let _ = writeln!(msg, "{}\tAUC {:.4}\t({} curves)", c.region, c.auc, c.n_curves);
            }
            Ok(msg)
        }
        AnalysisKind::Regress => {
            let panel = if opts.synthetic {
                synthetic_panel(&PanelConfig {
                    seed: opts.seed,
                    ..PanelConfig::default()
                })
                .map_err(err)?
            } else {
                let covs = covariates
                    .as_ref()
                    .ok_or("regress needs --covariates unless --synthetic is given")?;
                Panel::from_scored(&scored()?, covs).map_err(err)?
            };
            let fits = press_models(&panel, &opts.se).map_err(err)?;
            let table = export_table(&fits).map_err(err)?;
            fs::write(opts.out.join("regression.csv"), &table.csv).map_err(err)?;
            fs::write(opts.out.join("regression.txt"), &table.text).map_err(err)?;
            Ok(table.text)
        }
    }
}

pub fn simulate(seed: u64, out: &Path, se: &str) -> CmdResult {
    let cfg = SimulationConfig {
        seed,
        ..SimulationConfig::default()
    };
    let data = simulate_agents(&cfg).map_err(err)?;
    let (outcomes, effects) = analyze_simulation(&data, se).map_err(err)?;
    let scale = SurveyScale::aot17();
    write_exports(out, &data.participants, &data.clicks, &outcomes, &scale.dimensions(), &effects).map_err(err)?;
    let mut msg = String::from("outcome\tcontrols\testimate\tstd_error\tp_value\tn\n");
    for e in &effects {
        let _ = writeln!(
            msg,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}",
            e.outcome, e.controls, e.estimate, e.std_error, e.p_value, e.n_obs
        );
    }
    Ok(msg)
}
