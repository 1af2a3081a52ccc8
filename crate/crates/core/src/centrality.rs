//! The seven community-aware centrality measures and node rankings.
//!
//! Every measure is a pure function of the graph, its partition and the
//! derived [`LinkSplit`]. Nodes without links score 0 under all of them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::community::{community_totals, link_split, LinkSplit, Partition};
use crate::error::{Error, Result};
use crate::graph::{k_shell_decomposition, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Measure {
    /// Community Hub-Bridge
    Chb,
    /// Participation Coefficient
    Pc,
    /// Community-based Mediator
    Cbm,
    /// Comm Centrality
    Comm,
    /// Modularity Vitality
    Mv,
    /// Community-based Centrality
    Cbc,
    /// K-shell with Community
    Ksc,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::Chb,
        Measure::Pc,
        Measure::Cbm,
        Measure::Comm,
        Measure::Mv,
        Measure::Cbc,
        Measure::Ksc,
    ];

    /// Short identifier used on the command line and in file names.
    pub fn id(self) -> &'static str {
        match self {
            Measure::Chb => "chb",
            Measure::Pc => "pc",
            Measure::Cbm => "cbm",
            Measure::Comm => "comm",
            Measure::Mv => "mv",
            Measure::Cbc => "cbc",
            Measure::Ksc => "ksc",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Chb => "Community Hub-Bridge",
            Measure::Pc => "Participation Coefficient",
            Measure::Cbm => "Community-based Mediator",
            Measure::Comm => "Comm Centrality",
            Measure::Mv => "Modularity Vitality",
            Measure::Cbc => "Community-based Centrality",
            Measure::Ksc => "K-shell with Community",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure {s:?}")))
    }
}

/// Tunable parameters: `delta` weights intra shells against inter shells in
/// K-shell with Community; `comm_r` is Comm Centrality's scaling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralityParams {
    pub delta: f64,
    pub comm_r: f64,
}

impl Default for CentralityParams {
    fn default() -> Self {
        CentralityParams {
            delta: 0.5,
            comm_r: 1.0,
        }
    }
}

impl CentralityParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if !(self.comm_r > 0.0 && self.comm_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "comm R must be positive, got {}",
                self.comm_r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub measure: Measure,
    /// Scores used for ranking (absolute value for Modularity Vitality).
    pub scores: Vec<f64>,
    /// Signed Modularity Vitality values; `None` for other measures.
    pub raw: Option<Vec<f64>>,
    pub params: CentralityParams,
}

impl CentralityVector {
    fn new(measure: Measure, scores: Vec<f64>, params: CentralityParams) -> Self {
        CentralityVector {
            measure,
            scores,
            raw: None,
            params,
        }
    }
}

pub fn community_hub_bridge(p: &Partition, split: &LinkSplit) -> Vec<f64> {
    (0..split.node_count())
        .map(|i| {
            let size = p.size(p.community_of(i));
            (size * split.k_intra[i] + split.nnc[i] * split.k_inter[i]) as f64
        })
        .collect()
}

pub fn participation_coefficient(split: &LinkSplit) -> Vec<f64> {
    (0..split.node_count())
        .map(|i| {
            let k = split.degree(i);
            if k == 0 {
                return 0.0;
            }
            let k = k as f64;
            1.0 - split.per_community[i]
                .iter()
                .map(|&(_, kc)| (kc as f64 / k).powi(2))
                .sum::<f64>()
        })
        .collect()
}

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Entropy of the intra/inter link ratio (natural log) times the node's
/// share of all link endpoints.
pub fn community_based_mediator(split: &LinkSplit) -> Vec<f64> {
    let total: usize = (0..split.node_count()).map(|i| split.degree(i)).sum();
    (0..split.node_count())
        .map(|i| {
            let k = split.degree(i);
            if k == 0 {
                return 0.0;
            }
            let kf = k as f64;
            let rho_intra = split.k_intra[i] as f64 / kf;
            let rho_inter = split.k_inter[i] as f64 / kf;
            let entropy = -plogp(rho_intra) - plogp(rho_inter);
            entropy * kf / total as f64
        })
        .collect()
}

/// `(1 + mu_c) * chi + (1 - mu_c) * phi^2`, with `chi` and `phi` the node's
/// intra/inter degree relative to its community's maxima (scaled by `r`)
/// and `mu_c` the share of inter-community endpoints among the community's
/// link endpoints. A zero maximum makes the corresponding term 0.
pub fn comm_centrality(p: &Partition, split: &LinkSplit, r: f64) -> Vec<f64> {
    let mut scores = vec![0.0; split.node_count()];
    for members in p.communities() {
        let max_intra = members.iter().map(|&i| split.k_intra[i]).max().unwrap_or(0);
        let max_inter = members.iter().map(|&i| split.k_inter[i]).max().unwrap_or(0);
        let inter: usize = members.iter().map(|&i| split.k_inter[i]).sum();
        let total: usize = members.iter().map(|&i| split.degree(i)).sum();
        let mu = if total == 0 {
            0.0
        } else {
            inter as f64 / total as f64
        };
        for &i in members {
            let chi = if max_intra == 0 {
                0.0
            } else {
                split.k_intra[i] as f64 / max_intra as f64 * r
            };
            let phi = if max_inter == 0 {
                0.0
            } else {
                split.k_inter[i] as f64 / max_inter as f64 * r
            };
            scores[i] = (1.0 + mu) * chi + (1.0 - mu) * phi * phi;
        }
    }
    scores
}

/// Signed `M(G) - M(G \ i)` for every node, the partition being restricted
/// to the remaining nodes. Each removal is evaluated incrementally from the
/// per-community totals.
pub fn modularity_vitality(g: &Graph, p: &Partition, split: &LinkSplit) -> Vec<f64> {
    let m = g.edge_count();
    if m == 0 {
        return vec![0.0; g.node_count()];
    }
    let (intra, degree) = community_totals(g, p);
    let sum_intra: usize = intra.iter().sum();
    let sum_d2: u128 = degree.iter().map(|&d| (d as u128) * (d as u128)).sum();
    let q = |se: usize, sd2: u128, m: usize| -> f64 {
        if m == 0 {
            return 0.0;
        }
        let m = m as f64;
        se as f64 / m - sd2 as f64 / (4.0 * m * m)
    };
    let base = q(sum_intra, sum_d2, m);

    (0..g.node_count())
        .into_par_iter()
        .map(|i| {
            let k = g.degree(i);
            let own = p.community_of(i);
            let m_after = m - k;
            let intra_after = sum_intra - split.k_intra[i];
            let mut d2_after = sum_d2;
            let d_own = degree[own] as u128;
            let d_own_after = d_own - k as u128 - split.k_intra[i] as u128;
            d2_after = d2_after - d_own * d_own + d_own_after * d_own_after;
            for &(c, kc) in &split.per_community[i] {
                if c != own {
                    let d = degree[c] as u128;
                    let d_after = d - kc as u128;
                    d2_after = d2_after - d * d + d_after * d_after;
                }
            }
            base - q(intra_after, d2_after, m_after)
        })
        .collect()
}

pub fn community_based_centrality(p: &Partition, split: &LinkSplit) -> Vec<f64> {
    let n = split.node_count() as f64;
    (0..split.node_count())
        .map(|i| {
            split.per_community[i]
                .iter()
                .map(|&(c, kc)| kc as f64 * (p.size(c) as f64 / n))
                .sum()
        })
        .collect()
}

/// `delta * shell_intra + (1 - delta) * shell_inter`, shells taken in the
/// subgraphs of intra-community and inter-community edges respectively.
pub fn kshell_with_community(g: &Graph, p: &Partition, delta: f64) -> Vec<f64> {
    let intra = g.filter_edges(|u, v| p.community_of(u) == p.community_of(v));
    let inter = g.filter_edges(|u, v| p.community_of(u) != p.community_of(v));
    let s_intra = k_shell_decomposition(&intra);
    let s_inter = k_shell_decomposition(&inter);
    s_intra
        .iter()
        .zip(&s_inter)
        .map(|(&a, &b)| delta * a as f64 + (1.0 - delta) * b as f64)
        .collect()
}

pub fn compute(
    measure: Measure,
    g: &Graph,
    p: &Partition,
    split: &LinkSplit,
    params: CentralityParams,
) -> Result<CentralityVector> {
    params.validate()?;
    p.check_covers(g)?;
    let v = match measure {
        Measure::Chb => CentralityVector::new(measure, community_hub_bridge(p, split), params),
        Measure::Pc => CentralityVector::new(measure, participation_coefficient(split), params),
        Measure::Cbm => CentralityVector::new(measure, community_based_mediator(split), params),
        Measure::Comm => {
            CentralityVector::new(measure, comm_centrality(p, split, params.comm_r), params)
        }
        Measure::Mv => {
            let raw = modularity_vitality(g, p, split);
            CentralityVector {
                measure,
                scores: raw.iter().map(|x| x.abs()).collect(),
                raw: Some(raw),
                params,
            }
        }
        Measure::Cbc => {
            CentralityVector::new(measure, community_based_centrality(p, split), params)
        }
        Measure::Ksc => {
            CentralityVector::new(measure, kshell_with_community(g, p, params.delta), params)
        }
    };
    if let Some(i) = v.scores.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    Ok(v)
}

/// Computes `measures` in the given order, sharing one link split.
pub fn compute_many(
    measures: &[Measure],
    g: &Graph,
    p: &Partition,
    params: CentralityParams,
) -> Result<Vec<CentralityVector>> {
    let split = link_split(g, p)?;
    measures
        .iter()
        .map(|&m| compute(m, g, p, &split, params))
        .collect()
}

/// Node indices from highest to lowest score; equal scores are ordered by
/// ascending label (which is ascending index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        if let Some(i) = scores.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore(i));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(Ranking { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn top(&self, count: usize) -> &[usize] {
        &self.order[..count.min(self.order.len())]
    }

    /// 1-based rank of every node.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (r, &i) in self.order.iter().enumerate() {
            pos[i] = r + 1;
        }
        pos
    }
}

pub fn rank(v: &CentralityVector) -> Result<Ranking> {
    Ranking::from_scores(&v.scores)
}
