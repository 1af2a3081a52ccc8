//! Discrete-time SIR spreading from a single seed, with recovery after
//! exactly one infectious round.
//!
//! Each node's runs draw from their own ChaCha8 stream (`set_stream(node)`
//! on a generator seeded with the master seed), so results do not depend on
//! how nodes are scheduled across worker threads. Outbreak sizes are
//! accumulated as integers, which makes the reduction exact.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::output::write_atomic;

/// Networks with fewer nodes than this get [`RUNS_SMALL`] runs per seed by
/// default, larger ones [`RUNS_LARGE`].
pub const LARGE_NETWORK_NODES: usize = 6000;
pub const RUNS_SMALL: usize = 1000;
pub const RUNS_LARGE: usize = 100;

/// Default Monte-Carlo run count for a network with `n` nodes.
pub fn default_runs(n: usize) -> usize {
    if n < LARGE_NETWORK_NODES {
        RUNS_SMALL
    } else {
        RUNS_LARGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SirConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub runs: usize,
    pub master_seed: u64,
}

impl SirConfig {
    pub fn new(lambda: f64, runs: usize, master_seed: u64) -> Result<Self> {
        let cfg = SirConfig {
            lambda,
            gamma: 1.0,
            runs,
            master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "transmission probability must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.gamma != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "only gamma = 1 is supported, got {}",
                self.gamma
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Summary of the outbreak sizes of repeated runs from one seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutbreakSummary {
    pub mean: f64,
    pub std_error: f64,
    pub min: usize,
    pub max: usize,
    pub runs: usize,
}

/// Mean outbreak size (seed included) per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadScores {
    pub mean_outbreak: Vec<f64>,
    pub std_error: Vec<f64>,
    pub config: SirConfig,
}

impl SpreadScores {
    pub fn node_count(&self) -> usize {
        self.mean_outbreak.len()
    }
}

/// Reusable per-thread buffers for [`outbreak_size`].
struct Scratch {
    touched: Vec<bool>,
    visited: Vec<usize>,
    current: Vec<usize>,
    next: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            touched: vec![false; n],
            visited: Vec::new(),
            current: Vec::new(),
            next: Vec::new(),
        }
    }
}

/// One epidemic: every infectious node tries each susceptible neighbor once
/// with probability `lambda`, then recovers. Returns the final number of
/// recovered nodes.
fn outbreak_size<R: Rng>(
    g: &Graph,
    seed: usize,
    lambda: f64,
    rng: &mut R,
    s: &mut Scratch,
) -> usize {
    s.visited.clear();
    s.current.clear();
    s.touched[seed] = true;
    s.visited.push(seed);
    s.current.push(seed);
    if lambda > 0.0 {
        while !s.current.is_empty() {
            s.next.clear();
            for &u in &s.current {
                for &v in g.neighbors(u) {
                    if !s.touched[v] && rng.random_bool(lambda) {
                        s.touched[v] = true;
                        s.visited.push(v);
                        s.next.push(v);
                    }
                }
            }
            std::mem::swap(&mut s.current, &mut s.next);
        }
    }
    for &v in &s.visited {
        s.touched[v] = false;
    }
    s.visited.len()
}

fn node_rng(master_seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(node as u64);
    rng
}

fn summarize_runs(
    g: &Graph,
    seed: usize,
    cfg: &SirConfig,
    scratch: &mut Scratch,
) -> OutbreakSummary {
    let mut rng = node_rng(cfg.master_seed, seed);
    let mut sum = 0u64;
    let mut sum_sq = 0u128;
    let mut min = usize::MAX;
    let mut max = 0;
    for _ in 0..cfg.runs {
        let size = outbreak_size(g, seed, cfg.lambda, &mut rng, scratch);
        sum += size as u64;
        sum_sq += (size as u128) * (size as u128);
        min = min.min(size);
        max = max.max(size);
    }
    let runs = cfg.runs as f64;
    let mean = sum as f64 / runs;
    let std_error = if cfg.runs > 1 {
        // exact integer numerator: runs * sum_sq - sum^2
        let num = (cfg.runs as u128) * sum_sq - (sum as u128) * (sum as u128);
        let variance = num as f64 / (runs * (runs - 1.0));
        (variance / runs).sqrt()
    } else {
        0.0
    };
    OutbreakSummary {
        mean,
        std_error,
        min,
        max,
        runs: cfg.runs,
    }
}

/// Runs `cfg.runs` epidemics seeded at `seed_node`.
pub fn simulate_single_seed(
    g: &Graph,
    seed_node: usize,
    cfg: &SirConfig,
) -> Result<OutbreakSummary> {
    cfg.validate()?;
    if seed_node >= g.node_count() {
        return Err(Error::InvalidNode {
            index: seed_node,
            n: g.node_count(),
        });
    }
    let mut scratch = Scratch::new(g.node_count());
    Ok(summarize_runs(g, seed_node, cfg, &mut scratch))
}

/// Spreading power of every node.
pub fn spreading_power_all(g: &Graph, cfg: &SirConfig) -> Result<SpreadScores> {
    cfg.validate()?;
    let n = g.node_count();
    let summaries: Vec<OutbreakSummary> = (0..n)
        .into_par_iter()
        .map_init(
            || Scratch::new(n),
            |scratch, node| summarize_runs(g, node, cfg, scratch),
        )
        .collect();
    Ok(SpreadScores {
        mean_outbreak: summaries.iter().map(|s| s.mean).collect(),
        std_error: summaries.iter().map(|s| s.std_error).collect(),
        config: *cfg,
    })
}

/// Largest edge count accepted by [`exact_expected_outbreak`].
pub const EXACT_EDGE_LIMIT: usize = 20;

/// Expected outbreak size by enumerating every subset of transmitting edges.
///
/// With recovery after one round, each edge transmits at most once and
/// independently with probability `lambda`, so the outbreak is the seed's
/// component in the random edge subset.
pub fn exact_expected_outbreak(g: &Graph, seed_node: usize, lambda: f64) -> Result<f64> {
    if seed_node >= g.node_count() {
        return Err(Error::InvalidNode {
            index: seed_node,
            n: g.node_count(),
        });
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let m = edges.len();
    if m > EXACT_EDGE_LIMIT {
        return Err(Error::TooManyEdges {
            edges: m,
            limit: EXACT_EDGE_LIMIT,
        });
    }
    let n = g.node_count();
    let mut reached = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    let mut total = 0.0;
    for mask in 0u32..(1u32 << m) {
        let open = mask.count_ones() as i32;
        let weight = lambda.powi(open) * (1.0 - lambda).powi(m as i32 - open);
        if weight == 0.0 {
            continue;
        }
        reached.iter_mut().for_each(|r| *r = false);
        reached[seed_node] = true;
        stack.clear();
        stack.push(seed_node);
        let mut size = 1usize;
        while let Some(u) = stack.pop() {
            for (e, &(a, b)) in edges.iter().enumerate() {
                if mask & (1 << e) == 0 {
                    continue;
                }
                let other = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !reached[other] {
                    reached[other] = true;
                    size += 1;
                    stack.push(other);
                }
            }
        }
        total += weight * size as f64;
    }
    Ok(total)
}

/// The five transmission rates around the epidemic threshold, capped at 1.
pub fn threshold_sweep(lambda_th: f64) -> Result<Vec<f64>> {
    if !(lambda_th > 0.0 && lambda_th.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epidemic threshold must be positive, got {lambda_th}"
        )));
    }
    Ok([
        lambda_th / 2.0,
        lambda_th / 1.5,
        lambda_th,
        1.5 * lambda_th,
        2.0 * lambda_th,
    ]
    .into_iter()
    .map(|l| l.min(1.0))
    .collect())
}

const CACHE_MAGIC: &[u8; 8] = b"CSPRSIR1";
const HASH_LEN: usize = 32;

/// Header of a spreading-power cache file.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheHeader {
    pub graph_hash: String,
    pub config: SirConfig,
    pub node_count: usize,
}

/// Writes spread scores in the binary cache layout (all little-endian):
///
/// ```text
/// magic        8 bytes  "CSPRSIR1"
/// graph hash  32 bytes  SHA-256 of the canonical edge list
/// lambda       f64
/// gamma        f64
/// runs         u64
/// master seed  u64
/// node count   u64
/// per node     f64 mean outbreak, f64 standard error
/// ```
pub fn write_cache(path: &Path, graph_hash: &str, scores: &SpreadScores) -> Result<()> {
    let hash = hex::decode(graph_hash)
        .ok()
        .filter(|h| h.len() == HASH_LEN)
        .ok_or_else(|| Error::InvalidParameter(format!("bad graph hash {graph_hash:?}")))?;
    write_atomic(path, |w| {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&hash)?;
        w.write_all(&scores.config.lambda.to_le_bytes())?;
        w.write_all(&scores.config.gamma.to_le_bytes())?;
        w.write_all(&(scores.config.runs as u64).to_le_bytes())?;
        w.write_all(&scores.config.master_seed.to_le_bytes())?;
        w.write_all(&(scores.node_count() as u64).to_le_bytes())?;
        for (m, s) in scores.mean_outbreak.iter().zip(&scores.std_error) {
            w.write_all(&m.to_le_bytes())?;
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    })
}

fn read_exact<const N: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::CacheFormat {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    Ok(buf)
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<CacheHeader> {
    let magic: [u8; 8] = read_exact(r, path)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::CacheFormat {
            path: path.to_owned(),
            message: "bad magic".into(),
        });
    }
    let hash: [u8; HASH_LEN] = read_exact(r, path)?;
    let lambda = f64::from_le_bytes(read_exact(r, path)?);
    let gamma = f64::from_le_bytes(read_exact(r, path)?);
    let runs = u64::from_le_bytes(read_exact(r, path)?) as usize;
    let master_seed = u64::from_le_bytes(read_exact(r, path)?);
    let node_count = u64::from_le_bytes(read_exact(r, path)?) as usize;
    Ok(CacheHeader {
        graph_hash: hex::encode(hash),
        config: SirConfig {
            lambda,
            gamma,
            runs,
            master_seed,
        },
        node_count,
    })
}

pub fn read_cache_header(path: &Path) -> Result<CacheHeader> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_header(&mut r, path)
}

pub fn read_cache(path: &Path) -> Result<(CacheHeader, SpreadScores)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let header = read_header(&mut r, path)?;
    let mut mean_outbreak = Vec::with_capacity(header.node_count);
    let mut std_error = Vec::with_capacity(header.node_count);
    for _ in 0..header.node_count {
        mean_outbreak.push(f64::from_le_bytes(read_exact(&mut r, path)?));
        std_error.push(f64::from_le_bytes(read_exact(&mut r, path)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::CacheFormat {
            path: path.to_owned(),
            message: "trailing bytes".into(),
        });
    }
    let scores = SpreadScores {
        mean_outbreak,
        std_error,
        config: header.config,
    };
    Ok((header, scores))
}
