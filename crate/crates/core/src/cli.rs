//! Command-line pipeline: `stats`, `centrality`, `sir` and `evaluate`.
//!
//! Exit codes:
//!
//! | code | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success                                                    |
//! | 1    | any other failure                                          |
//! | 2    | unreadable or invalid input (graph, partition, arguments)  |
//! | 3    | a partition is required but none was given                 |
//! | 4    | `evaluate` inputs missing; the message lists what to run    |
//! | 5    | a cache file holds a different configuration (`--force`)  |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::centrality::{self, CentralityParams, CentralityVector, Measure};
use crate::community::{self, link_split, Partition, Provenance};
use crate::error::Error;
use crate::evaluation::{self, ReferenceSet};
use crate::graph::{self, Graph, LoadOptions, LoadReport};
use crate::output::{self, CommunityStats, LongRow, StatsReport};
use crate::sir::{self, SirConfig, SpreadScores};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_NO_PARTITION: u8 = 3;
pub const EXIT_MISSING_INPUTS: u8 = 4;
pub const EXIT_CACHE_CONFLICT: u8 = 5;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "COMMSPREAD_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "commspread",
    version,
    about = "Community-aware centrality vs. SIR spreading power"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Topological statistics (plus partition statistics when available)
    Stats(RunArgs),
    /// One CSV of scores and ranks per measure
    Centrality(RunArgs),
    /// Per-node SIR spreading power, cached
    Sir(RunArgs),
    /// Imprecision curves of the measures against the SIR reference set
    Evaluate(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Edge list
    #[arg(long)]
    pub graph: PathBuf,
    /// Partition file (`node community` per line)
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Use the built-in label propagation when no partition file is given
    #[arg(long)]
    pub fallback_detect: bool,
    /// Keep only the largest connected component
    #[arg(long)]
    pub lcc: bool,
    /// Accept edge/partition lines with more than two columns
    #[arg(long)]
    pub ignore_extra_columns: bool,
    /// Comma-separated measure ids (chb,pc,cbm,comm,mv,cbc,ksc)
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "chb,pc,cbm,comm,mv,cbc,ksc"
    )]
    pub measures: Vec<String>,
    /// Intra/inter weight of K-shell with Community
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Scaling constant of Comm Centrality
    #[arg(long = "comm-r", default_value_t = 1.0)]
    pub comm_r: f64,
    /// Transmission rate(s) as multiples of the epidemic threshold
    #[arg(long = "lambda-mult", value_delimiter = ',')]
    pub lambda_mult: Vec<f64>,
    /// Absolute transmission rate(s); overrides --lambda-mult
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Five rates around the threshold: th/2, th/1.5, th, 1.5th, 2th
    #[arg(long)]
    pub sweep: bool,
    /// Runs per seed node (default 1000 below 6000 nodes, else 100)
    #[arg(long)]
    pub runs: Option<usize>,
    /// Master seed for the SIR engine and the fallback detector
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated fractions p in (0, 1]
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Vec<f64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Cache directory for spreading-power files (default: <out>/cache)
    #[arg(long, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Do not read or write the spreading-power cache
    #[arg(long)]
    pub no_cache: bool,
    /// Overwrite a cache file that holds a different configuration
    #[arg(long)]
    pub force: bool,
    /// Worker thread cap
    #[arg(long)]
    pub threads: Option<usize>,
    /// Network id used in output tables (default: graph file stem)
    #[arg(long)]
    pub network_name: Option<String>,
    /// Long-format imprecision CSVs of other networks to include in the
    /// aggregate table
    #[arg(long)]
    pub merge: Vec<PathBuf>,
    /// Let `evaluate` compute missing centralities and spreading powers
    #[arg(long)]
    pub compute_missing: bool,
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::CacheConflict { .. } => EXIT_CACHE_CONFLICT,
            Error::Io { .. }
            | Error::Read(_)
            | Error::Parse { .. }
            | Error::EmptyGraph
            | Error::UnknownNodes(_)
            | Error::DuplicateNode(_)
            | Error::UnassignedNodes(_)
            | Error::InvalidParameter(_)
            | Error::CacheFormat { .. } => EXIT_BAD_INPUT,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn run(cli: Cli) -> CliResult<()> {
    let args = match &cli.command {
        Command::Stats(a) | Command::Centrality(a) | Command::Sir(a) | Command::Evaluate(a) => a,
    };
    if let Some(threads) = args.threads {
        // a second call in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Centrality(a) => cmd_centrality(a),
        Command::Sir(a) => cmd_sir(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

struct Loaded {
    graph: Graph,
    report: LoadReport,
    name: String,
}

impl RunArgs {
    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            ignore_extra_columns: self.ignore_extra_columns,
            ..LoadOptions::default()
        }
    }

    fn network_name(&self) -> String {
        self.network_name.clone().unwrap_or_else(|| {
            self.graph
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "network".into())
        })
    }

    fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.out.join("cache"))
    }

    fn params(&self) -> CliResult<CentralityParams> {
        let params = CentralityParams {
            delta: self.delta,
            comm_r: self.comm_r,
        };
        params.validate()?;
        Ok(params)
    }

    fn measure_list(&self) -> CliResult<Vec<Measure>> {
        let mut out: Vec<Measure> = Vec::new();
        for m in &self.measures {
            let m: Measure = m.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Failure::new(EXIT_BAD_INPUT, "no measures requested"));
        }
        Ok(out)
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Failure::new(
            EXIT_BAD_INPUT,
            format!("cannot read {}: {e}", path.display()),
        )
    })
}

fn load_graph(args: &RunArgs) -> CliResult<Loaded> {
    let (mut graph, report) = graph::load_edge_list(open(&args.graph)?, &args.load_options())
        .map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", args.graph.display())))?;
    if report.self_loops + report.duplicate_edges > 0 {
        eprintln!(
            "note: dropped {} self-loop(s) and {} duplicate edge(s)",
            report.self_loops, report.duplicate_edges
        );
    }
    if args.lcc {
        graph = graph::largest_connected_component(&graph);
    }
    Ok(Loaded {
        graph,
        report,
        name: args.network_name(),
    })
}

fn load_partition(args: &RunArgs, g: &Graph) -> CliResult<Option<Partition>> {
    if let Some(path) = &args.partition {
        let p = community::load_partition(open(path)?, g, &args.load_options(), args.lcc)
            .map_err(|e| Failure::new(EXIT_BAD_INPUT, format!("{}: {e}", path.display())))?;
        return Ok(Some(p));
    }
    if args.fallback_detect {
        eprintln!("note: using fallback label propagation partition (provenance=fallback)");
        return Ok(Some(community::detect_fallback(g, args.seed)));
    }
    Ok(None)
}

fn require_partition(args: &RunArgs, g: &Graph) -> CliResult<Partition> {
    load_partition(args, g)?.ok_or_else(|| {
        Failure::new(
            EXIT_NO_PARTITION,
            "a partition is required: pass --partition <file> or --fallback-detect",
        )
    })
}

fn community_stats(g: &Graph, p: &Partition) -> CliResult<CommunityStats> {
    let split = link_split(g, p)?;
    Ok(CommunityStats {
        community_count: p.community_count(),
        mixing_parameter: community::mixing_parameter(&split, g),
        modularity: community::modularity(g, p)?,
        provenance: p.provenance(),
    })
}

fn stats_report(args: &RunArgs, loaded: &Loaded) -> CliResult<StatsReport> {
    let stats = graph::compute_stats(&loaded.graph)?;
    let community = load_partition(args, &loaded.graph)?
        .map(|p| community_stats(&loaded.graph, &p))
        .transpose()?;
    Ok(StatsReport {
        network: loaded.name.clone(),
        stats,
        largest_component_only: args.lcc,
        load: loaded.report.clone(),
        community,
    })
}

pub fn cmd_stats(args: &RunArgs) -> CliResult<()> {
    let loaded = load_graph(args)?;
    let report = stats_report(args, &loaded)?;
    output::write_stats(&args.out, &report)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(Error::from)?
    );
    Ok(())
}

#[derive(Serialize)]
struct CentralityMeta<'a> {
    network: &'a str,
    provenance: Provenance,
    community_count: usize,
    params: CentralityParams,
    measures: Vec<&'static str>,
}

fn compute_and_write_centralities(
    args: &RunArgs,
    loaded: &Loaded,
    measures: &[Measure],
) -> CliResult<Vec<CentralityVector>> {
    let g = &loaded.graph;
    let p = require_partition(args, g)?;
    let params = args.params()?;
    let vectors = centrality::compute_many(measures, g, &p, params)?;
    for v in &vectors {
        output::write_centrality(
            &args.out.join(output::centrality_file_name(v.measure)),
            g,
            v,
        )?;
    }
    let meta = CentralityMeta {
        network: &loaded.name,
        provenance: p.provenance(),
        community_count: p.community_count(),
        params,
        measures: measures.iter().map(|m| m.id()).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&meta).map_err(Error::from)?;
    json.push(b'\n');
    output::write_atomic(&args.out.join("centrality_meta.json"), |w| {
        w.write_all(&json)
    })?;
    Ok(vectors)
}

pub fn cmd_centrality(args: &RunArgs) -> CliResult<()> {
    let loaded = load_graph(args)?;
    let measures = args.measure_list()?;
    compute_and_write_centralities(args, &loaded, &measures)?;
    eprintln!(
        "wrote {} centrality file(s) to {}",
        measures.len(),
        args.out.display()
    );
    Ok(())
}

/// Transmission rates requested by the arguments.
fn resolve_lambdas(args: &RunArgs, g: &Graph) -> CliResult<Vec<f64>> {
    if !args.lambda.is_empty() {
        return Ok(args.lambda.clone());
    }
    let threshold = graph::compute_stats(g)?.epidemic_threshold.ok_or_else(|| {
        Failure::new(
            EXIT_BAD_INPUT,
            "epidemic threshold undefined (<k^2> <= <k>); pass --lambda",
        )
    })?;
    if args.sweep {
        return Ok(sir::threshold_sweep(threshold)?);
    }
    let mults = if args.lambda_mult.is_empty() {
        vec![1.0]
    } else {
        args.lambda_mult.clone()
    };
    mults
        .iter()
        .map(|&k| {
            if k > 0.0 {
                Ok((k * threshold).min(1.0))
            } else {
                Err(Failure::new(
                    EXIT_BAD_INPUT,
                    format!("lambda multiplier must be positive, got {k}"),
                ))
            }
        })
        .collect()
}

fn sir_config(args: &RunArgs, g: &Graph, lambda: f64) -> CliResult<SirConfig> {
    let runs = args
        .runs
        .unwrap_or_else(|| sir::default_runs(g.node_count()));
    Ok(SirConfig::new(lambda, runs, args.seed)?)
}

fn cache_path(dir: &Path, hash: &str, cfg: &SirConfig) -> PathBuf {
    dir.join(format!(
        "sir-{}-l{:016x}-r{}-s{}.bin",
        &hash[..16],
        cfg.lambda.to_bits(),
        cfg.runs,
        cfg.master_seed
    ))
}

fn spread_file_name(lambda: f64) -> String {
    format!("sir_lambda_{lambda}.csv")
}

/// Cached spreading power for `cfg`, if present and matching.
fn lookup_cache(args: &RunArgs, g: &Graph, cfg: &SirConfig) -> CliResult<Option<SpreadScores>> {
    if args.no_cache {
        return Ok(None);
    }
    let hash = g.content_hash();
    let path = cache_path(&args.cache_dir(), &hash, cfg);
    if !path.exists() {
        return Ok(None);
    }
    let (header, scores) = sir::read_cache(&path)?;
    if header.graph_hash == hash && header.config == *cfg && header.node_count == g.node_count() {
        Ok(Some(scores))
    } else if args.force {
        Ok(None)
    } else {
        Err(Error::CacheConflict { path }.into())
    }
}

fn compute_spread(args: &RunArgs, loaded: &Loaded, cfg: &SirConfig) -> CliResult<SpreadScores> {
    let g = &loaded.graph;
    if let Some(cached) = lookup_cache(args, g, cfg)? {
        eprintln!("lambda {}: using cached spreading power", cfg.lambda);
        output::write_spread(&args.out.join(spread_file_name(cfg.lambda)), g, &cached)?;
        return Ok(cached);
    }
    eprintln!(
        "lambda {}: simulating {} runs for each of {} nodes",
        cfg.lambda,
        cfg.runs,
        g.node_count()
    );
    let scores = sir::spreading_power_all(g, cfg)?;
    if !args.no_cache {
        let hash = g.content_hash();
        sir::write_cache(&cache_path(&args.cache_dir(), &hash, cfg), &hash, &scores)?;
    }
    output::write_spread(&args.out.join(spread_file_name(cfg.lambda)), g, &scores)?;
    Ok(scores)
}

pub fn cmd_sir(args: &RunArgs) -> CliResult<()> {
    let loaded = load_graph(args)?;
    for lambda in resolve_lambdas(args, &loaded.graph)? {
        let cfg = sir_config(args, &loaded.graph, lambda)?;
        compute_spread(args, &loaded, &cfg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateMeta<'a> {
    network: &'a str,
    provenance: Option<Provenance>,
    lambdas: &'a [f64],
    runs: usize,
    seed: u64,
    p_grid: &'a [f64],
    measures: Vec<&'static str>,
}

pub fn cmd_evaluate(args: &RunArgs) -> CliResult<()> {
    let loaded = load_graph(args)?;
    let g = &loaded.graph;
    let measures = args.measure_list()?;
    let lambdas = resolve_lambdas(args, g)?;
    let p_grid = if !args.p_grid.is_empty() {
        args.p_grid.clone()
    } else if args.sweep {
        evaluation::sweep_p_grid()
    } else {
        evaluation::default_p_grid()
    };
    evaluation::validate_p_grid(&p_grid)?;

    let mut missing = Vec::new();

    // centralities: read back what `centrality` wrote
    let mut vectors: Vec<Option<CentralityVector>> = Vec::new();
    for &m in &measures {
        let path = args.out.join(output::centrality_file_name(m));
        if path.exists() {
            let scores = output::read_centrality(&path, g)?;
            vectors.push(Some(CentralityVector {
                measure: m,
                scores,
                raw: None,
                params: args.params()?,
            }));
        } else {
            vectors.push(None);
        }
    }
    let absent: Vec<Measure> = measures
        .iter()
        .zip(&vectors)
        .filter(|(_, v)| v.is_none())
        .map(|(&m, _)| m)
        .collect();
    if !absent.is_empty() {
        if args.compute_missing {
            let computed = compute_and_write_centralities(args, &loaded, &absent)?;
            for v in computed {
                let slot = measures.iter().position(|&m| m == v.measure).unwrap();
                vectors[slot] = Some(v);
            }
        } else {
            let ids: Vec<&str> = absent.iter().map(|m| m.id()).collect();
            missing.push(format!(
                "centrality scores for {} (run `commspread centrality --measures {}`)",
                ids.join(","),
                ids.join(",")
            ));
        }
    }

    let mut spreads = Vec::new();
    for &lambda in &lambdas {
        let cfg = sir_config(args, g, lambda)?;
        match lookup_cache(args, g, &cfg)? {
            Some(s) => spreads.push(s),
            None if args.compute_missing => spreads.push(compute_spread(args, &loaded, &cfg)?),
            None => missing.push(format!(
                "spreading power for lambda {lambda} with {} runs, seed {} (run `commspread sir`)",
                cfg.runs, cfg.master_seed
            )),
        }
    }

    if !missing.is_empty() {
        return Err(Failure::new(
            EXIT_MISSING_INPUTS,
            format!("missing inputs:\n  {}", missing.join("\n  ")),
        ));
    }
    let vectors: Vec<CentralityVector> = vectors.into_iter().map(Option::unwrap).collect();

    let mut curves = Vec::new();
    for scores in &spreads {
        let reference = ReferenceSet::new(scores.clone())?;
        for v in &vectors {
            curves.push(evaluation::curve(&loaded.name, v, &reference, &p_grid)?);
        }
    }
    let rows = output::long_rows(&curves);
    output::write_long(&args.out.join("imprecision.csv"), &rows)?;

    let mut all_rows = Vec::new();
    for path in &args.merge {
        all_rows.extend(output::read_long(path)?);
    }
    all_rows.extend(rows);
    write_aggregates(&args.out, &measures, &p_grid, &all_rows)?;

    let provenance = load_partition(args, g)
        .ok()
        .flatten()
        .map(|p| p.provenance());
    let meta = EvaluateMeta {
        network: &loaded.name,
        provenance,
        lambdas: &lambdas,
        runs: spreads[0].config.runs,
        seed: args.seed,
        p_grid: &p_grid,
        measures: measures.iter().map(|m| m.id()).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&meta).map_err(Error::from)?;
    json.push(b'\n');
    output::write_atomic(&args.out.join("evaluate_meta.json"), |w| w.write_all(&json))?;
    eprintln!("wrote imprecision tables to {}", args.out.display());
    Ok(())
}

/// Aggregates long rows across networks. Within each network the distinct
/// rates are ranked in ascending order, and rows sharing a rate rank are
/// aggregated together, so networks with different thresholds line up.
/// One rate gives `imprecision_aggregate.csv`; several give
/// `imprecision_aggregate_rate<k>.csv` for k = 1, 2, ...
fn write_aggregates(
    out: &Path,
    measures: &[Measure],
    p_grid: &[f64],
    rows: &[LongRow],
) -> CliResult<()> {
    let mut rates: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        let v = rates.entry(&r.network).or_default();
        if !v.contains(&r.lambda) {
            v.push(r.lambda);
        }
    }
    for v in rates.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let rate_count = rates.values().map(Vec::len).max().unwrap_or(0);
    for k in 0..rate_count {
        let mut table = Vec::new();
        for &m in measures {
            for &p in p_grid {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| {
                        r.measure == m.id()
                            && r.p == p
                            && rates[r.network.as_str()].get(k) == Some(&r.lambda)
                    })
                    .map(|r| r.epsilon)
                    .collect();
                if values.is_empty() {
                    return Err(Error::GridMismatch.into());
                }
                table.push((m, evaluation::summarize(p, &values)));
            }
        }
        let name = if rate_count == 1 {
            "imprecision_aggregate.csv".to_owned()
        } else {
            format!("imprecision_aggregate_rate{}.csv", k + 1)
        };
        output::write_aggregate(&out.join(name), &table)?;
    }
    Ok(())
}
