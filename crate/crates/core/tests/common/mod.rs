//! Test-only oracles: straight-from-the-definition implementations working
//! on a dense adjacency matrix, plus seeded random instance generators.

#![allow(dead_code)]

use commspread::{Graph, Partition, Provenance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub adj: Vec<Vec<bool>>,
    pub comm: Vec<usize>,
    pub n_comm: usize,
}

impl Dense {
    pub fn new(g: &Graph, p: &Partition) -> Self {
        let n = g.node_count();
        let mut adj = vec![vec![false; n]; n];
        for (u, v) in g.edges() {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        Dense {
            adj,
            comm: p.assignment().to_vec(),
            n_comm: p.community_count(),
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].iter().filter(|&&a| a).count()
    }

    /// Links of `i` into community `c`.
    pub fn k_ic(&self, i: usize, c: usize) -> usize {
        (0..self.n())
            .filter(|&j| self.adj[i][j] && self.comm[j] == c)
            .count()
    }

    pub fn k_intra(&self, i: usize) -> usize {
        self.k_ic(i, self.comm[i])
    }

    pub fn k_inter(&self, i: usize) -> usize {
        self.degree(i) - self.k_intra(i)
    }

    pub fn community_size(&self, c: usize) -> usize {
        self.comm.iter().filter(|&&x| x == c).count()
    }

    pub fn nnc(&self, i: usize) -> usize {
        (0..self.n_comm)
            .filter(|&c| c != self.comm[i] && self.k_ic(i, c) > 0)
            .count()
    }

    pub fn chb(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                (self.community_size(self.comm[i]) * self.k_intra(i)
                    + self.nnc(i) * self.k_inter(i)) as f64
            })
            .collect()
    }

    pub fn pc(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let k = self.degree(i) as f64;
                if k == 0.0 {
                    return 0.0;
                }
                1.0 - (0..self.n_comm)
                    .map(|c| (self.k_ic(i, c) as f64 / k).powi(2))
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn cbm(&self) -> Vec<f64> {
        let total: usize = (0..self.n()).map(|i| self.degree(i)).sum();
        (0..self.n())
            .map(|i| {
                let k = self.degree(i) as f64;
                if k == 0.0 {
                    return 0.0;
                }
                let mut h = 0.0;
                for rho in [self.k_intra(i) as f64 / k, self.k_inter(i) as f64 / k] {
                    if rho > 0.0 {
                        h -= rho * rho.ln();
                    }
                }
                h * k / total as f64
            })
            .collect()
    }

    pub fn comm(&self, r: f64) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let c = self.comm[i];
                let members: Vec<usize> = (0..self.n()).filter(|&j| self.comm[j] == c).collect();
                let inter: usize = members.iter().map(|&j| self.k_inter(j)).sum();
                let total: usize = members.iter().map(|&j| self.degree(j)).sum();
                let mu = if total == 0 {
                    0.0
                } else {
                    inter as f64 / total as f64
                };
                let max_intra = members.iter().map(|&j| self.k_intra(j)).max().unwrap();
                let max_inter = members.iter().map(|&j| self.k_inter(j)).max().unwrap();
                let chi = if max_intra == 0 {
                    0.0
                } else {
                    self.k_intra(i) as f64 / max_intra as f64 * r
                };
                let phi = if max_inter == 0 {
                    0.0
                } else {
                    self.k_inter(i) as f64 / max_inter as f64 * r
                };
                (1.0 + mu) * chi + (1.0 - mu) * phi.powi(2)
            })
            .collect()
    }

    pub fn cbc(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.n())
            .map(|i| {
                (0..self.n_comm)
                    .map(|c| self.k_ic(i, c) as f64 * self.community_size(c) as f64 / n)
                    .sum()
            })
            .collect()
    }

    /// Signed modularity vitality by explicit removal and double-loop
    /// recomputation.
    pub fn mv_raw(&self) -> Vec<f64> {
        let all: Vec<usize> = (0..self.n()).collect();
        let base = double_loop_modularity(&self.adj, &self.comm, &all);
        (0..self.n())
            .map(|i| {
                let rest: Vec<usize> = (0..self.n()).filter(|&j| j != i).collect();
                base - double_loop_modularity(&self.adj, &self.comm, &rest)
            })
            .collect()
    }

    pub fn ksc(&self, delta: f64) -> Vec<f64> {
        let n = self.n();
        let mut intra = vec![vec![false; n]; n];
        let mut inter = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if self.adj[i][j] {
                    if self.comm[i] == self.comm[j] {
                        intra[i][j] = true;
                    } else {
                        inter[i][j] = true;
                    }
                }
            }
        }
        let a = naive_shells(&intra);
        let b = naive_shells(&inter);
        (0..n)
            .map(|i| delta * a[i] as f64 + (1.0 - delta) * b[i] as f64)
            .collect()
    }
}

/// `(1/2m) sum_ij (A_ij - k_i k_j / 2m) delta(c_i, c_j)` over the subgraph
/// induced by `nodes`; 0 when it has no edges.
pub fn double_loop_modularity(adj: &[Vec<bool>], comm: &[usize], nodes: &[usize]) -> f64 {
    let deg: Vec<f64> = nodes
        .iter()
        .map(|&i| nodes.iter().filter(|&&j| adj[i][j]).count() as f64)
        .collect();
    let two_m: f64 = deg.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            if comm[i] == comm[j] {
                let aij = if adj[i][j] { 1.0 } else { 0.0 };
                q += aij - deg[a] * deg[b] / two_m;
            }
        }
    }
    q / two_m
}

/// Shell index from the k-core definition: the largest k for which the
/// node survives repeated deletion of nodes with fewer than k neighbors.
pub fn naive_shells(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut shell = vec![0; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                if alive[i] {
                    let d = (0..n).filter(|&j| alive[j] && adj[i][j]).count();
                    if d < k {
                        alive[i] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..n {
            if alive[i] {
                shell[i] = k;
            }
        }
    }
    shell
}

/// Erdos-Renyi graph on `n` nodes with edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Random partition into exactly `k` non-empty communities (`k <= n`).
pub fn random_partition(rng: &mut impl Rng, n: usize, k: usize) -> Partition {
    let keys: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    Partition::from_assignment(&keys, Provenance::External)
}

/// Seeded random (graph, partition) instance with at most `max_n` nodes.
pub fn random_instance(seed: u64, max_n: usize) -> (Graph, Partition) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=max_n);
    let p = rng.random_range(0.1..0.5);
    let g = random_graph(&mut rng, n, p);
    let k = rng.random_range(2..=4);
    let part = random_partition(&mut rng, n, k);
    (g, part)
}

/// All connected graphs on up to `max_n` nodes, one per isomorphism class.
pub fn connected_graphs_up_to_iso(max_n: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let perms = permutations(n);
        let mut seen = std::collections::HashSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(e, _)| mask & (1 << e) != 0)
                .map(|(_, &p)| p)
                .collect();
            let canon = perms
                .iter()
                .map(|perm| {
                    let mut e: Vec<(usize, usize)> = edges
                        .iter()
                        .map(|&(u, v)| {
                            let (a, b) = (perm[u], perm[v]);
                            (a.min(b), a.max(b))
                        })
                        .collect();
                    e.sort_unstable();
                    e
                })
                .min()
                .unwrap();
            if !seen.insert(canon) {
                continue;
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let comps = g.connected_components();
            if comps.iter().all(|&c| c == 0) {
                out.push(g);
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
