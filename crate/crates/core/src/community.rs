//! Non-overlapping partitions and the link statistics derived from them.

use std::collections::HashMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{tokenize, Graph, LoadOptions};

/// Where a partition came from. Fallback partitions are produced by the
/// built-in label propagation and are flagged in every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    External,
    Fallback,
}

/// Total, non-overlapping assignment of nodes to communities `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: Vec<Vec<usize>>,
    provenance: Provenance,
}

impl Partition {
    /// Builds a partition from arbitrary community keys. Community ids are
    /// re-indexed densely in order of each community's smallest member.
    pub fn from_assignment<K: Eq + std::hash::Hash>(keys: &[K], provenance: Provenance) -> Self {
        let mut dense: HashMap<&K, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(keys.len());
        let mut communities: Vec<Vec<usize>> = Vec::new();
        for (node, key) in keys.iter().enumerate() {
            let next = dense.len();
            let c = *dense.entry(key).or_insert(next);
            if c == communities.len() {
                communities.push(Vec::new());
            }
            communities[c].push(node);
            assignment.push(c);
        }
        Partition {
            assignment,
            communities,
            provenance,
        }
    }

    /// Every node in one community.
    pub fn single(n: usize) -> Self {
        Self::from_assignment(&vec![0u8; n], Provenance::External)
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn size(&self, community: usize) -> usize {
        self.communities[community].len()
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Restriction to `nodes` (sorted dense indices of a subgraph), with
    /// communities re-indexed and empty ones dropped.
    pub fn restrict(&self, nodes: &[usize]) -> Partition {
        let keys: Vec<usize> = nodes.iter().map(|&i| self.assignment[i]).collect();
        Partition::from_assignment(&keys, self.provenance)
    }

    pub(crate) fn check_covers(&self, g: &Graph) -> Result<()> {
        if self.node_count() != g.node_count() {
            return Err(Error::PartitionMismatch {
                partition: self.node_count(),
                graph: g.node_count(),
            });
        }
        Ok(())
    }
}

/// Reads `node community` lines. Every graph node must appear exactly once.
/// With `allow_unknown`, nodes absent from the graph are ignored instead of
/// rejected (used when the graph was reduced to its largest component).
pub fn load_partition<R: BufRead>(
    source: R,
    g: &Graph,
    opts: &LoadOptions,
    allow_unknown: bool,
) -> Result<Partition> {
    let mut keys: Vec<Option<String>> = vec![None; g.node_count()];
    let mut unknown = Vec::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let Some(tokens) = tokenize(&line, opts) else {
            continue;
        };
        let ok = tokens.len() == 2 || (opts.ignore_extra_columns && tokens.len() > 2);
        if !ok {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!(
                    "expected node id and community id, found {} token(s)",
                    tokens.len()
                ),
            });
        }
        match g.index_of(tokens[0]) {
            Some(i) => {
                if keys[i].is_some() {
                    return Err(Error::DuplicateNode(tokens[0].to_owned()));
                }
                keys[i] = Some(tokens[1].to_owned());
            }
            None => unknown.push(tokens[0].to_owned()),
        }
    }
    if !unknown.is_empty() && !allow_unknown {
        return Err(Error::UnknownNodes(unknown));
    }
    let missing: Vec<String> = keys
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_none())
        .map(|(i, _)| g.label(i).to_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnassignedNodes(missing));
    }
    let keys: Vec<String> = keys.into_iter().map(Option::unwrap).collect();
    Ok(Partition::from_assignment(&keys, Provenance::External))
}

const MAX_PROPAGATION_ROUNDS: usize = 100;

/// Synchronous label propagation. Initial labels are a seeded permutation of
/// `0..n`; each round every node adopts the most frequent label among itself
/// and its neighbors, ties going to the lowest label. Stops at a fixed point
/// or after a bounded number of rounds.
///
/// This is a convenience when no external partition is at hand; it is not a
/// substitute for a proper community detection tool.
pub fn detect_fallback(g: &Graph, seed: u64) -> Partition {
    let n = g.node_count();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);

    let mut counts: HashMap<usize, usize> = HashMap::new();
    for _ in 0..MAX_PROPAGATION_ROUNDS {
        let mut next = labels.clone();
        for i in 0..n {
            counts.clear();
            *counts.entry(labels[i]).or_default() += 1;
            for &j in g.neighbors(i) {
                *counts.entry(labels[j]).or_default() += 1;
            }
            next[i] = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&l, _)| l)
                .unwrap();
        }
        if next == labels {
            break;
        }
        labels = next;
    }
    Partition::from_assignment(&labels, Provenance::Fallback)
}

/// Per-node split of links into intra- and inter-community classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSplit {
    pub k_intra: Vec<usize>,
    pub k_inter: Vec<usize>,
    /// `(community, links into it)` pairs sorted by community, zero counts
    /// omitted. Includes the node's own community.
    pub per_community: Vec<Vec<(usize, usize)>>,
    /// Number of distinct communities other than the node's own that it
    /// links to.
    pub nnc: Vec<usize>,
}

impl LinkSplit {
    pub fn degree(&self, i: usize) -> usize {
        self.k_intra[i] + self.k_inter[i]
    }

    pub fn node_count(&self) -> usize {
        self.k_intra.len()
    }
}

pub fn link_split(g: &Graph, p: &Partition) -> Result<LinkSplit> {
    p.check_covers(g)?;
    let n = g.node_count();
    let mut k_intra = vec![0; n];
    let mut k_inter = vec![0; n];
    let mut per_community = Vec::with_capacity(n);
    let mut nnc = vec![0; n];
    for i in 0..n {
        let own = p.community_of(i);
        let mut cs: Vec<usize> = g.neighbors(i).iter().map(|&j| p.community_of(j)).collect();
        cs.sort_unstable();
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for c in cs {
            match counts.last_mut() {
                Some((last, k)) if *last == c => *k += 1,
                _ => counts.push((c, 1)),
            }
        }
        for &(c, k) in &counts {
            if c == own {
                k_intra[i] = k;
            } else {
                k_inter[i] += k;
                nnc[i] += 1;
            }
        }
        per_community.push(counts);
    }
    Ok(LinkSplit {
        k_intra,
        k_inter,
        per_community,
        nnc,
    })
}

/// Fraction of edges whose endpoints lie in different communities, each
/// edge counted once. Zero for an edgeless graph.
pub fn mixing_parameter(split: &LinkSplit, g: &Graph) -> f64 {
    if g.edge_count() == 0 {
        return 0.0;
    }
    let inter_endpoints: usize = split.k_inter.iter().sum();
    (inter_endpoints / 2) as f64 / g.edge_count() as f64
}

/// Per-community intra-edge counts `e_c` and degree totals `d_c`.
pub(crate) fn community_totals(g: &Graph, p: &Partition) -> (Vec<usize>, Vec<usize>) {
    let mut intra = vec![0; p.community_count()];
    let mut degree = vec![0; p.community_count()];
    for i in 0..g.node_count() {
        degree[p.community_of(i)] += g.degree(i);
    }
    for (u, v) in g.edges() {
        if p.community_of(u) == p.community_of(v) {
            intra[p.community_of(u)] += 1;
        }
    }
    (intra, degree)
}

/// Newman modularity `sum_c [e_c/m - (d_c/2m)^2]`; 0 for an edgeless graph.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    p.check_covers(g)?;
    let m = g.edge_count();
    if m == 0 {
        return Ok(0.0);
    }
    let (intra, degree) = community_totals(g, p);
    Ok(modularity_from_totals(&intra, &degree, m))
}

pub(crate) fn modularity_from_totals(intra: &[usize], degree: &[usize], m: usize) -> f64 {
    let m = m as f64;
    let two_m = 2.0 * m;
    intra
        .iter()
        .zip(degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / two_m).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::with_labels(
            vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1), (1, 2), (2, 0)],
        )
        .unwrap()
    }

    fn load(text: &str, g: &Graph) -> Result<Partition> {
        load_partition(text.as_bytes(), g, &LoadOptions::default(), false)
    }

    #[test]
    fn single_label_file() {
        let p = load("a 7\nb 7\nc 7\n", &triangle()).unwrap();
        assert_eq!(p.community_count(), 1);
        assert_eq!(p.provenance(), Provenance::External);
    }

    #[test]
    fn sizes_follow_file() {
        let p = load("a 0\nb 0\nc 1\n", &triangle()).unwrap();
        let sizes: Vec<usize> = (0..p.community_count()).map(|c| p.size(c)).collect();
        assert_eq!(sizes, vec![2, 1]);
    }

    #[test]
    fn partition_errors() {
        let g = triangle();
        assert!(matches!(load("a 0\nb 0\n", &g), Err(Error::UnassignedNodes(v)) if v == ["c"]));
        assert!(
            matches!(load("a 0\na 1\nb 0\nc 0\n", &g), Err(Error::DuplicateNode(n)) if n == "a")
        );
        assert!(
            matches!(load("a 0\nb 0\nc 0\nz 1\n", &g), Err(Error::UnknownNodes(v)) if v == ["z"])
        );
        let p = load_partition(
            "a 0\nb 0\nc 0\nz 1\n".as_bytes(),
            &g,
            &LoadOptions::default(),
            true,
        )
        .unwrap();
        assert_eq!(p.community_count(), 1);
    }

    #[test]
    fn split_on_triangle() {
        let g = triangle();
        let p = load("a 0\nb 0\nc 1\n", &g).unwrap();
        let s = link_split(&g, &p).unwrap();
        assert_eq!((s.k_intra[0], s.k_inter[0], s.nnc[0]), (1, 1, 1));
        assert_eq!((s.k_intra[2], s.k_inter[2], s.nnc[2]), (0, 2, 1));
        assert!((mixing_parameter(&s, &g) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_community_has_no_inter_links() {
        let g = triangle();
        let s = link_split(&g, &Partition::single(3)).unwrap();
        assert!(s.k_inter.iter().all(|&k| k == 0));
        assert_eq!(mixing_parameter(&s, &g), 0.0);
        assert_eq!(modularity(&g, &Partition::single(3)).unwrap(), 0.0);
    }

    #[test]
    fn star_center_reaching_three_communities() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = Partition::from_assignment(&[0, 1, 2, 3], Provenance::External);
        let s = link_split(&g, &p).unwrap();
        assert_eq!(s.nnc[0], 3);
        assert_eq!(s.k_inter[0], 3);
    }

    #[test]
    fn modularity_examples() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let p = Partition::from_assignment(&[0, 0, 0, 1, 1, 1], Provenance::External);
        assert!((modularity(&g, &p).unwrap() - 0.5).abs() < 1e-15);

        let t = triangle();
        let p = Partition::from_assignment(&[0, 0, 1], Provenance::External);
        let expected = (1.0 / 3.0 - (4.0f64 / 6.0).powi(2)) - (2.0f64 / 6.0).powi(2);
        assert!((modularity(&t, &p).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.2222).abs() < 1e-4);
    }

    #[test]
    fn restrict_drops_empty_communities() {
        let p = Partition::from_assignment(&[5, 5, 9, 7], Provenance::External);
        let r = p.restrict(&[0, 1, 3]);
        assert_eq!(r.assignment(), &[0, 0, 1]);
        assert_eq!(r.community_count(), 2);
    }

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((3, 4));
        Graph::from_edges(8, &edges).unwrap()
    }

    /// Best bipartition by exhaustive search over all 2^(n-1) splits.
    fn best_bipartition(g: &Graph) -> (f64, Vec<usize>) {
        let n = g.node_count();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for mask in 0u32..(1 << (n - 1)) {
            let keys: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let p = Partition::from_assignment(&keys, Provenance::External);
            let q = modularity(g, &p).unwrap();
            if q > best.0 + 1e-12 {
                best = (q, p.assignment().to_vec());
            }
        }
        best
    }

    #[test]
    fn fallback_finds_the_two_cliques() {
        let g = two_cliques();
        let (_, optimum) = best_bipartition(&g);
        assert_eq!(optimum, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        for seed in 0..20 {
            let p = detect_fallback(&g, seed);
            assert_eq!(p.assignment(), optimum.as_slice(), "seed {seed}");
            assert_eq!(p.provenance(), Provenance::Fallback);
        }
    }

    #[test]
    fn fallback_keeps_complete_graph_whole() {
        let mut edges = Vec::new();
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((i, j));
            }
        }
        let g = Graph::from_edges(5, &edges).unwrap();
        // every proper split has negative modularity
        let (best, _) = best_bipartition(&g);
        assert!(best <= 0.0);
        for seed in 0..10 {
            assert_eq!(detect_fallback(&g, seed).community_count(), 1);
        }
    }

    #[test]
    fn fallback_is_deterministic() {
        let g = two_cliques();
        assert_eq!(detect_fallback(&g, 42), detect_fallback(&g, 42));
    }
}
