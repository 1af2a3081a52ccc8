//! Undirected, unweighted simple graphs and their topological statistics.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::io::BufRead;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Immutable simple graph over dense indices `0..n`.
///
/// Dense indices follow the ascending order of the original labels (see
/// [`label_cmp`]), so "smaller index" and "smaller label" are the same thing
/// everywhere in the crate. Adjacency is stored in CSR form with every
/// neighbor list sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_count: usize,
}

/// Orders labels numerically when both parse as integers, otherwise
/// lexicographically; integer labels sort before non-integer ones.
pub fn label_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i128>(), b.parse::<i128>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

impl Graph {
    /// Builds a graph on nodes labelled `"0".."n-1"`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    /// Builds a graph from arbitrary labels and edges given as positions in
    /// `labels`. Self-loops are dropped and duplicates collapsed; nodes are
    /// re-indexed into label order.
    pub fn with_labels(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| label_cmp(&labels[a], &labels[b]));
        let mut new_index = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidNode { index: u.max(v), n });
            }
            if u != v {
                let (a, b) = (new_index[u], new_index[v]);
                pairs.push((a.min(b), a.max(b)));
            }
        }
        let sorted_labels: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
        Self::from_sorted_parts(sorted_labels, pairs)
    }

    /// `labels` must already be in label order; pairs are `(lo, hi)` with
    /// `lo < hi`, in any order and possibly repeated.
    fn from_sorted_parts(labels: Vec<String>, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate node label {l:?}"
                )));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut degree = vec![0usize; n];
        for &(u, v) in &pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0; 2 * pairs.len()];
        // pairs are sorted by (u, v), so pushing v into u's list and u into
        // v's list leaves every list sorted.
        for &(u, v) in &pairs {
            targets[fill[u]] = v;
            fill[u] += 1;
        }
        for &(u, v) in &pairs {
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Graph {
            labels,
            index,
            offsets,
            targets,
            edge_count: pairs.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Subgraph induced by `nodes`, re-indexed densely. Label order is kept.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut remap = vec![usize::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let pairs = self
            .edges()
            .filter(|&(u, v)| remap[u] != usize::MAX && remap[v] != usize::MAX)
            .map(|(u, v)| (remap[u], remap[v]))
            .collect();
        Self::from_sorted_parts(labels, pairs).expect("labels of a valid graph are unique")
    }

    /// Same node set, keeping only edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let pairs = self.edges().filter(|&(u, v)| keep(u, v)).collect();
        Self::from_sorted_parts(self.labels.clone(), pairs)
            .expect("labels of a valid graph are unique")
    }

    /// Component id per node; ids are assigned in order of smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// SHA-256 over the canonical edge list (node count, then one
    /// `label\tlabel` line per edge in index order), hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{}\n", self.node_count()).as_bytes());
        for (u, v) in self.edges() {
            hasher.update(self.labels[u].as_bytes());
            hasher.update(b"\t");
            hasher.update(self.labels[v].as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Tokenizer configuration for edge-list and partition files.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Explicit single-character separator. `None` splits on a single comma
    /// when the line has one, else on runs of spaces/tabs.
    pub delimiter: Option<char>,
    /// Lines whose first non-blank character is one of these are skipped.
    pub comment_prefixes: Vec<char>,
    /// Accept lines with more than two tokens, using the first two
    /// (weights and timestamps in KONECT-style files).
    pub ignore_extra_columns: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: None,
            comment_prefixes: vec!['#', '%'],
            ignore_extra_columns: false,
        }
    }
}

/// What the loader dropped on the way in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub skipped_lines: usize,
    pub edge_lines: usize,
    pub self_loops: usize,
    pub duplicate_edges: usize,
}

/// Splits a data line into tokens. Returns `None` for blank and comment lines.
pub(crate) fn tokenize<'a>(line: &'a str, opts: &LoadOptions) -> Option<Vec<&'a str>> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return None;
    }
    if trimmed
        .chars()
        .next()
        .is_some_and(|c| opts.comment_prefixes.contains(&c))
    {
        return None;
    }
    let tokens = match opts.delimiter {
        Some(d) => trimmed.split(d).map(str::trim).collect(),
        None if trimmed.contains(',') => trimmed.split(',').map(str::trim).collect(),
        None => trimmed.split_whitespace().collect(),
    };
    Some(tokens)
}

/// Reads a two-column edge list.
pub fn load_edge_list<R: BufRead>(source: R, opts: &LoadOptions) -> Result<(Graph, LoadReport)> {
    let mut report = LoadReport::default();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    let mut intern = |s: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&i) = ids.get(s) {
            return i;
        }
        let i = labels.len();
        ids.insert(s.to_owned(), i);
        labels.push(s.to_owned());
        i
    };

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        report.lines += 1;
        let Some(tokens) = tokenize(&line, opts) else {
            report.skipped_lines += 1;
            continue;
        };
        let ok = tokens.len() == 2 || (opts.ignore_extra_columns && tokens.len() > 2);
        if !ok || tokens[0].is_empty() || tokens[1].is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected two node ids, found {} token(s)", tokens.len()),
            });
        }
        report.edge_lines += 1;
        if tokens[0] == tokens[1] {
            report.self_loops += 1;
            continue;
        }
        let u = intern(tokens[0], &mut labels);
        let v = intern(tokens[1], &mut labels);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let graph = Graph::with_labels(labels, &edges)?;
    report.duplicate_edges = edges.len() - graph.edge_count();
    Ok((graph, report))
}

/// Induced subgraph on the largest connected component. Among equal-size
/// components the one holding the smallest label wins.
pub fn largest_connected_component(g: &Graph) -> Graph {
    let comp = g.connected_components();
    let count = comp.iter().max().map_or(0, |&c| c + 1);
    if count <= 1 {
        return g.clone();
    }
    let mut sizes = vec![0usize; count];
    for &c in &comp {
        sizes[c] += 1;
    }
    // Components are numbered by smallest member, so the first maximum is the
    // one containing the smallest label.
    let best = (0..count)
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap();
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&i| comp[i] == best).collect();
    g.induced_subgraph(&nodes)
}

/// Degree moments, global transitivity and the epidemic threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub avg_degree: f64,
    pub second_moment: f64,
    /// `3 * triangles / connected triples`; 0 when the graph has no triples.
    pub transitivity: f64,
    /// Set when the graph has no path of length two.
    pub transitivity_degenerate: bool,
    /// `<k> / (<k^2> - <k>)`, `None` when `<k^2> <= <k>`.
    pub epidemic_threshold: Option<f64>,
}

pub fn triangle_count(g: &Graph) -> u64 {
    let n = g.node_count();
    let mut mark = vec![false; n];
    let mut total = 0u64;
    for u in 0..n {
        for &v in g.neighbors(u) {
            mark[v] = true;
        }
        for &v in g.neighbors(u).iter().filter(|&&v| v > u) {
            total += g.neighbors(v).iter().filter(|&&w| w > v && mark[w]).count() as u64;
        }
        for &v in g.neighbors(u) {
            mark[v] = false;
        }
    }
    total
}

pub fn compute_stats(g: &Graph) -> Result<GraphStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut sum_k = 0u64;
    let mut sum_k2 = 0u64;
    let mut triples = 0u64;
    for i in 0..n {
        let k = g.degree(i) as u64;
        sum_k += k;
        sum_k2 += k * k;
        triples += k * k.saturating_sub(1) / 2;
    }
    let avg_degree = sum_k as f64 / n as f64;
    let second_moment = sum_k2 as f64 / n as f64;
    let (transitivity, transitivity_degenerate) = if triples == 0 {
        (0.0, true)
    } else {
        (3.0 * triangle_count(g) as f64 / triples as f64, false)
    };
    let epidemic_threshold =
        (second_moment > avg_degree).then(|| avg_degree / (second_moment - avg_degree));
    Ok(GraphStats {
        n,
        m: g.edge_count(),
        avg_degree,
        second_moment,
        transitivity,
        transitivity_degenerate,
        epidemic_threshold,
    })
}

/// Shell index of every node (bucket peeling, linear time). Isolated nodes
/// are in shell 0.
pub fn k_shell_decomposition(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    if n == 0 {
        return Vec::new();
    }
    let mut deg: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let max_deg = *deg.iter().max().unwrap();

    // bin[d] = first position in `vert` of the nodes with current degree d
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(Graph, LoadReport)> {
        load_edge_list(text.as_bytes(), &LoadOptions::default())
    }

    fn assert_consistent(g: &Graph) {
        let degree_sum: usize = (0..g.node_count()).map(|i| g.degree(i)).sum();
        assert_eq!(degree_sum, 2 * g.edge_count());
        for u in 0..g.node_count() {
            for &v in g.neighbors(u) {
                assert_ne!(u, v);
                assert!(g.has_edge(v, u));
            }
        }
    }

    #[test]
    fn duplicate_edges_collapse() {
        let (g, report) = parse("1 2\n2 3\n1 2\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(report.duplicate_edges, 1);
        assert_consistent(&g);
    }

    #[test]
    fn reversed_edge_is_same_edge() {
        let (g, report) = parse("a b\nb a\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(report.duplicate_edges, 1);
    }

    #[test]
    fn separators_and_comments() {
        let text = "# header\n% konect\n1\t 2\n2,3\n 3 , 4 \n\n";
        let (g, report) = parse(text).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(report.skipped_lines, 3);
    }

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let (g, report) = parse("1 1\n1 2\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(report.self_loops, 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse("1 2 3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let opts = LoadOptions {
            ignore_extra_columns: true,
            ..LoadOptions::default()
        };
        let (g, _) = load_edge_list("1 2 0.5\n".as_bytes(), &opts).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyGraph)));
        assert!(matches!(parse("# nothing\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn indices_follow_label_order() {
        let (g, _) = parse("10 9\n9 b\na 2\n").unwrap();
        assert_eq!(g.labels(), ["2", "9", "10", "a", "b"]);
        assert_eq!(g.index_of("10"), Some(2));
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(largest_connected_component(&g), g);
    }

    #[test]
    fn lcc_drops_smaller_component() {
        let (g, _) = parse("a b\nb c\nc a\nx y\n").unwrap();
        let lcc = largest_connected_component(&g);
        assert_eq!(lcc.node_count(), 3);
        assert_eq!(lcc.labels(), ["a", "b", "c"]);
    }

    #[test]
    fn lcc_tie_break_prefers_smallest_label() {
        let (g, _) = parse("z y\nb c\n").unwrap();
        let lcc = largest_connected_component(&g);
        assert_eq!(lcc.labels(), ["b", "c"]);
        let (g, _) = parse("5 6\n3 40\n").unwrap();
        assert_eq!(largest_connected_component(&g).labels(), ["3", "40"]);
    }

    #[test]
    fn triangle_stats() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let s = compute_stats(&g).unwrap();
        assert_eq!(s.avg_degree, 2.0);
        assert_eq!(s.transitivity, 1.0);
        assert_eq!(s.epidemic_threshold, Some(1.0));
    }

    #[test]
    fn path_stats() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = compute_stats(&g).unwrap();
        assert!((s.avg_degree - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.second_moment, 2.0);
        assert!((s.epidemic_threshold.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(s.transitivity, 0.0);
        assert!(!s.transitivity_degenerate);
    }

    #[test]
    fn degenerate_stats() {
        // a perfect matching: no triples, <k^2> == <k>
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let s = compute_stats(&g).unwrap();
        assert!(s.transitivity_degenerate);
        assert_eq!(s.transitivity, 0.0);
        assert_eq!(s.epidemic_threshold, None);
    }

    #[test]
    fn shells() {
        let triangle = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(k_shell_decomposition(&triangle), vec![2, 2, 2]);

        let star = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        assert_eq!(k_shell_decomposition(&star), vec![1; 6]);

        let empty = Graph::from_edges(4, &[]).unwrap();
        assert_eq!(k_shell_decomposition(&empty), vec![0; 4]);

        // K4 with a pendant path: core 3 plus shells 1
        let g = Graph::from_edges(
            6,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 2),
                (1, 3),
                (2, 3),
                (3, 4),
                (4, 5),
            ],
        )
        .unwrap();
        assert_eq!(k_shell_decomposition(&g), vec![3, 3, 3, 3, 1, 1]);
    }

    #[test]
    fn hash_ignores_input_order() {
        let (a, _) = parse("1 2\n2 3\n").unwrap();
        let (b, _) = parse("3,2\n2 1\n1 2\n").unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let (c, _) = parse("1 2\n1 3\n").unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
