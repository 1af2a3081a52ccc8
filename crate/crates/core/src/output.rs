//! CSV/JSON emission. Every file is written to a temporary sibling and
//! renamed into place, so a failed run never leaves a partial file behind.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::centrality::{CentralityVector, Measure, Ranking};
use crate::community::Provenance;
use crate::error::{Error, Result};
use crate::evaluation::{AggregatePoint, ImprecisionCurve};
use crate::graph::{Graph, GraphStats, LoadReport};
use crate::sir::SpreadScores;

pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w)?;
        w.flush().map_err(Error::Read)?;
    }
    Ok(buf)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, |w| w.write_all(bytes))
}

/// Partition-dependent statistics attached to a stats report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityStats {
    pub community_count: usize,
    pub mixing_parameter: f64,
    pub modularity: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub network: String,
    #[serde(flatten)]
    pub stats: GraphStats,
    pub largest_component_only: bool,
    pub load: LoadReport,
    pub community: Option<CommunityStats>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn stats_csv(report: &StatsReport) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["n", "m", "avg_degree", "transitivity", "lambda_th"])?;
        let s = &report.stats;
        w.write_record([
            s.n.to_string(),
            s.m.to_string(),
            s.avg_degree.to_string(),
            s.transitivity.to_string(),
            opt(s.epidemic_threshold),
        ])?;
        Ok(())
    })
}

pub fn write_stats(dir: &Path, report: &StatsReport) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_bytes(&dir.join("stats.json"), &json)?;
    write_bytes(&dir.join("stats.csv"), &stats_csv(report)?)
}

pub fn centrality_file_name(measure: Measure) -> String {
    format!("centrality_{}.csv", measure.id())
}

/// `node,score,rank` with nodes in label order and 1-based ranks.
pub fn write_centrality(path: &Path, g: &Graph, v: &CentralityVector) -> Result<()> {
    let positions = Ranking::from_scores(&v.scores)?.positions();
    let bytes = csv_bytes(|w| {
        w.write_record(["node", "score", "rank"])?;
        for i in 0..g.node_count() {
            w.write_record([
                g.label(i),
                &v.scores[i].to_string(),
                &positions[i].to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_bytes(path, &bytes)
}

/// Reads back a file written by [`write_centrality`]. Every graph node must
/// be present exactly once.
pub fn read_centrality(path: &Path, g: &Graph) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut scores = vec![None; g.node_count()];
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let bad = |message: String| Error::Parse { line, message };
        let label = record.get(0).ok_or_else(|| bad("missing node".into()))?;
        let score: f64 = record
            .get(1)
            .ok_or_else(|| bad("missing score".into()))?
            .parse()
            .map_err(|e| bad(format!("bad score: {e}")))?;
        let i = g
            .index_of(label)
            .ok_or_else(|| Error::UnknownNodes(vec![label.to_owned()]))?;
        if scores[i].replace(score).is_some() {
            return Err(Error::DuplicateNode(label.to_owned()));
        }
    }
    let missing: Vec<String> = (0..g.node_count())
        .filter(|&i| scores[i].is_none())
        .map(|i| g.label(i).to_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnassignedNodes(missing));
    }
    Ok(scores.into_iter().map(Option::unwrap).collect())
}

/// `node,mean_outbreak,std_error,lambda,runs`.
pub fn write_spread(path: &Path, g: &Graph, s: &SpreadScores) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record(["node", "mean_outbreak", "std_error", "lambda", "runs"])?;
        let lambda = s.config.lambda.to_string();
        let runs = s.config.runs.to_string();
        for i in 0..g.node_count() {
            w.write_record([
                g.label(i),
                &s.mean_outbreak[i].to_string(),
                &s.std_error[i].to_string(),
                &lambda,
                &runs,
            ])?;
        }
        Ok(())
    })?;
    write_bytes(path, &bytes)
}

/// One row of the long-format imprecision table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct LongRow {
    pub network: String,
    pub measure: String,
    pub lambda: f64,
    pub p: f64,
    pub epsilon: f64,
}

pub fn long_rows(curves: &[ImprecisionCurve]) -> Vec<LongRow> {
    curves
        .iter()
        .flat_map(|c| {
            c.p_grid
                .iter()
                .zip(&c.epsilon)
                .map(|(&p, &epsilon)| LongRow {
                    network: c.network.clone(),
                    measure: c.measure.id().to_owned(),
                    lambda: c.lambda,
                    p,
                    epsilon,
                })
        })
        .collect()
}

/// `network,measure,lambda,p,epsilon`.
pub fn write_long(path: &Path, rows: &[LongRow]) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record(["network", "measure", "lambda", "p", "epsilon"])?;
        for r in rows {
            w.write_record([
                r.network.clone(),
                r.measure.clone(),
                r.lambda.to_string(),
                r.p.to_string(),
                r.epsilon.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_bytes(path, &bytes)
}

pub fn read_long(path: &Path) -> Result<Vec<LongRow>> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// `measure,p,mean_eps,q1,median,q3,min,max`.
pub fn write_aggregate(path: &Path, rows: &[(Measure, AggregatePoint)]) -> Result<()> {
    let bytes = csv_bytes(|w| {
        w.write_record([
            "measure", "p", "mean_eps", "q1", "median", "q3", "min", "max",
        ])?;
        for (m, a) in rows {
            w.write_record([
                m.id().to_owned(),
                a.p.to_string(),
                a.mean.to_string(),
                a.q1.to_string(),
                a.median.to_string(),
                a.q3.to_string(),
                a.min.to_string(),
                a.max.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_bytes(path, &bytes)
}
