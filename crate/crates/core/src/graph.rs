//! Simple undirected graphs and the structural metrics used downstream.

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Undirected simple graph over dense node ids `0..num_nodes`.
///
/// Adjacency lists are sorted and symmetric; the edge list holds each edge
/// once as `(low, high)` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Build from raw pairs. Self-loops are dropped, parallel edges merged.
    /// `num_nodes` is raised to cover every endpoint that appears.
    pub fn from_edges<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut n = num_nodes;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (u, v) in pairs {
            n = n.max(u + 1).max(v + 1);
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        if edges.is_empty() {
            return Err(Error::NoEdges);
        }

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { adjacency, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// `2|E| / |V|`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.num_edges() as f64 / self.num_nodes() as f64
    }

    /// Local clustering coefficient; zero below degree two.
    pub fn clustering_coefficient(&self, v: usize) -> f64 {
        let nbrs = &self.adjacency[v];
        let k = nbrs.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in nbrs.iter().enumerate() {
            links += sorted_intersection_count(&nbrs[i + 1..], &self.adjacency[a]);
        }
        2.0 * links as f64 / (k * (k - 1)) as f64
    }

    pub fn clustering_coefficients(&self, exec: Exec) -> Vec<f64> {
        exec.map(self.num_nodes(), |v| self.clustering_coefficient(v))
    }

    /// Nodes at shortest-path distance `1..=max_dist` from `v`, sorted.
    pub fn nodes_within_distance(&self, v: usize, max_dist: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_nodes()];
        let mut queue = VecDeque::from([v]);
        dist[v] = 0;
        let mut out = Vec::new();
        while let Some(u) = queue.pop_front() {
            if dist[u] == max_dist {
                continue;
            }
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    out.push(w);
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Hop distance between two nodes, `None` if disconnected.
    pub fn distance(&self, from: usize, to: usize) -> Option<usize> {
        if from == to {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.num_nodes()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    if w == to {
                        return Some(dist[w]);
                    }
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Parse the tab- or semicolon-separated edge-list format.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut max_id = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let mut tokens = line.split(['\t', ';', ' ']).filter(|t| !t.is_empty());
            let mut next_id = |what: &str| -> Result<usize> {
                let tok = tokens.next().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("missing {what} node id"),
                })?;
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid node id {tok:?}"),
                })
            };
            let u = next_id("first")?;
            let v = next_id("second")?;
            if let Some(extra) = tokens.next() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unexpected token {extra:?}"),
                });
            }
            max_id = Some(max_id.unwrap_or(0).max(u).max(v));
            pairs.push((u, v));
        }
        let Some(max_id) = max_id else {
            return Err(Error::EmptyInput);
        };
        Graph::from_edges(max_id + 1, pairs)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::parse_edge_list(&text)
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u}\t{v}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("in-memory write");
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Per-node structural summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMetrics {
    pub degree: usize,
    pub clustering_coefficient: f64,
    pub authority: f64,
    pub hub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitsConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for HitsConfig {
    fn default() -> Self {
        HitsConfig {
            max_iterations: 1000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitsScores {
    /// L2-normalized authority scores.
    pub authority: Vec<f64>,
    /// L2-normalized hub scores.
    pub hub: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// HITS power iteration on the symmetric adjacency matrix.
///
/// Per-node updates are independent gathers, so they run under `exec`; the
/// normalizing sums are always sequential to keep results bit-identical.
pub fn hits(g: &Graph, config: HitsConfig, exec: Exec) -> HitsScores {
    let n = g.num_nodes();
    let init = 1.0 / (n as f64).sqrt();
    let mut hub = vec![init; n];
    let mut auth = vec![init; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;

        exec.fill(&mut next, |v| g.neighbors(v).iter().map(|&u| hub[u]).sum());
        normalize(&mut next);
        let auth_delta = max_abs_diff(&auth, &next);
        std::mem::swap(&mut auth, &mut next);

        exec.fill(&mut next, |v| g.neighbors(v).iter().map(|&u| auth[u]).sum());
        normalize(&mut next);
        let hub_delta = max_abs_diff(&hub, &next);
        std::mem::swap(&mut hub, &mut next);

        if auth_delta.max(hub_delta) < config.tolerance {
            converged = true;
            break;
        }
    }

    HitsScores {
        authority: auth,
        hub,
        iterations,
        converged,
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn node_metrics(g: &Graph, scores: &HitsScores, exec: Exec) -> Vec<NodeMetrics> {
    let clustering = g.clustering_coefficients(exec);
    (0..g.num_nodes())
        .map(|v| NodeMetrics {
            degree: g.degree(v),
            clustering_coefficient: clustering[v],
            authority: scores.authority[v],
            hub: scores.hub[v],
        })
        .collect()
}
