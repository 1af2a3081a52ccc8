//! Imprecision of a centrality ranking against the SIR reference set.
//!
//! For a fraction `p`, `eps(p) = 1 - M_c(p) / M_eff(p)` where `M_c` is the
//! mean spreading power of the ranking's top `ceil(pN)` nodes and `M_eff`
//! the same mean over the truly most influential `ceil(pN)` nodes.

use serde::Serialize;

use crate::centrality::{CentralityVector, Measure, Ranking};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sir::{spreading_power_all, SirConfig, SpreadScores};

/// Nodes ordered by decreasing mean outbreak, ties by ascending label.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    ranking: Ranking,
    scores: SpreadScores,
}

impl ReferenceSet {
    pub fn new(scores: SpreadScores) -> Result<Self> {
        let ranking = Ranking::from_scores(&scores.mean_outbreak)?;
        Ok(ReferenceSet { ranking, scores })
    }

    pub fn order(&self) -> &[usize] {
        self.ranking.order()
    }

    pub fn scores(&self) -> &SpreadScores {
        &self.scores
    }

    pub fn node_count(&self) -> usize {
        self.scores.node_count()
    }

    pub fn lambda(&self) -> f64 {
        self.scores.config.lambda
    }
}

/// Number of nodes in the top-`p` set: `ceil(p * n)`, at least 1.
///
/// A relative slack of 1e-9 keeps products such as `0.1 * 1000` that land a
/// rounding error above an integer from being bumped up by one.
pub fn top_count(p: f64, n: usize) -> usize {
    let raw = p * n as f64;
    let k = (raw - raw * 1e-9).ceil() as usize;
    k.clamp(1, n.max(1))
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fraction p must lie in (0, 1], got {p}"
        )))
    }
}

/// Sum of `power` over `nodes`, added largest first. Summing both means in
/// the same sorted order keeps `M_c <= M_eff` exact in floating point.
fn sorted_sum(power: &[f64], nodes: &[usize]) -> f64 {
    let mut v: Vec<f64> = nodes.iter().map(|&i| power[i]).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().sum()
}

pub fn imprecision(ranking: &Ranking, reference: &ReferenceSet, p: f64) -> Result<f64> {
    check_p(p)?;
    let n = reference.node_count();
    if ranking.len() != n {
        return Err(Error::NodeSetMismatch {
            ranking: ranking.len(),
            reference: n,
        });
    }
    let k = top_count(p, n);
    let power = &reference.scores.mean_outbreak;
    let m_c = sorted_sum(power, ranking.top(k));
    let m_eff = sorted_sum(power, &reference.order()[..k]);
    // both sums share the divisor k, which cancels
    Ok(1.0 - m_c / m_eff)
}

/// `{0.02, 0.04, ..., 0.20}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 50.0).collect()
}

/// The low, medium and high fractions used for rate sweeps.
pub fn sweep_p_grid() -> Vec<f64> {
    vec![0.02, 0.10, 0.20]
}

pub fn validate_p_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty p-grid".into()));
    }
    grid.iter().try_for_each(|&p| check_p(p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprecisionCurve {
    pub network: String,
    pub measure: Measure,
    pub lambda: f64,
    pub p_grid: Vec<f64>,
    pub epsilon: Vec<f64>,
}

pub fn curve(
    network: &str,
    scores: &CentralityVector,
    reference: &ReferenceSet,
    p_grid: &[f64],
) -> Result<ImprecisionCurve> {
    validate_p_grid(p_grid)?;
    let ranking = Ranking::from_scores(&scores.scores)?;
    let epsilon = p_grid
        .iter()
        .map(|&p| imprecision(&ranking, reference, p))
        .collect::<Result<_>>()?;
    Ok(ImprecisionCurve {
        network: network.to_owned(),
        measure: scores.measure,
        lambda: reference.lambda(),
        p_grid: p_grid.to_vec(),
        epsilon,
    })
}

/// Mean and five-number summary of one measure's epsilon at one p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatePoint {
    pub p: f64,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(p: f64, values: &[f64]) -> AggregatePoint {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    AggregatePoint {
        p,
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    }
}

/// Per-p statistics over several networks' curves for one measure.
pub fn cross_network_average(curves: &[ImprecisionCurve]) -> Result<Vec<AggregatePoint>> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidParameter("no curves to aggregate".into()))?;
    if curves.iter().any(|c| c.p_grid != first.p_grid) {
        return Err(Error::GridMismatch);
    }
    Ok(first
        .p_grid
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let values: Vec<f64> = curves.iter().map(|c| c.epsilon[j]).collect();
            summarize(p, &values)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub measure: Measure,
    pub lambda: f64,
    pub p: f64,
    pub epsilon: f64,
}

/// Full factorial (measure x lambda x p) over precomputed spread scores,
/// one [`SpreadScores`] per transmission rate.
pub fn sweep_from_scores(
    measures: &[CentralityVector],
    spread: &[SpreadScores],
    p_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    validate_p_grid(p_grid)?;
    let mut rows = Vec::with_capacity(measures.len() * spread.len() * p_grid.len());
    let references = spread
        .iter()
        .cloned()
        .map(ReferenceSet::new)
        .collect::<Result<Vec<_>>>()?;
    for v in measures {
        let ranking = Ranking::from_scores(&v.scores)?;
        for reference in &references {
            for &p in p_grid {
                rows.push(SweepRow {
                    measure: v.measure,
                    lambda: reference.lambda(),
                    p,
                    epsilon: imprecision(&ranking, reference, p)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Recomputes the reference set for every `lambda` and evaluates every
/// measure on it.
pub fn rate_sweep_evaluation(
    g: &Graph,
    measures: &[CentralityVector],
    lambdas: &[f64],
    p_grid: &[f64],
    runs: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    let spread = lambdas
        .iter()
        .map(|&l| spreading_power_all(g, &SirConfig::new(l, runs, master_seed)?))
        .collect::<Result<Vec<_>>>()?;
    sweep_from_scores(measures, &spread, p_grid)
}
