//! Louvain modularity optimization with a ten-label output constraint.
//!
//! The unconstrained optimizer ([`louvain`]) alternates local node moves with
//! community aggregation until a level produces no move. [`detect_communities`]
//! wraps it in a resolution search: starting from 1.0 the resolution grows by a
//! fixed factor until the partition has at least `target` communities (or the
//! deadline passes), then everything past the ninth-largest community is
//! folded into the last label.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Number of community labels the rest of the pipeline works with.
pub const NUM_COMMUNITIES: usize = 10;

/// Modularity `Σ_c (e_cc − γ a_c²)` of a labeling.
///
/// `e_cc` is the fraction of edges inside community `c` and `a_c` the fraction
/// of edge endpoints attached to it. Labels may be arbitrary integers.
pub fn modularity(g: &Graph, assignment: &[usize], resolution: f64) -> f64 {
    let m = g.num_edges() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut internal: HashMap<usize, f64> = HashMap::new();
    let mut endpoints: HashMap<usize, f64> = HashMap::new();
    for &(u, v) in g.edges() {
        let (cu, cv) = (assignment[u], assignment[v]);
        if cu == cv {
            *internal.entry(cu).or_default() += 1.0;
        }
        *endpoints.entry(cu).or_default() += 1.0;
        *endpoints.entry(cv).or_default() += 1.0;
    }
    let mut labels: Vec<usize> = endpoints.keys().copied().collect();
    labels.sort_unstable();
    labels
        .into_iter()
        .map(|c| {
            let e = internal.get(&c).copied().unwrap_or(0.0) / m;
            let a = endpoints[&c] / (2.0 * m);
            e - resolution * a * a
        })
        .sum()
}

/// Weighted multigraph used for the aggregated levels.
#[derive(Debug, Clone)]
struct Level {
    /// Neighbor weights excluding self-loops.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Self-loop weight (edges collapsed inside the node).
    self_loop: Vec<f64>,
    /// Weighted degree, self-loops counted twice.
    strength: Vec<f64>,
    /// Sum of strengths, i.e. `2m`.
    total: f64,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let adjacency: Vec<Vec<(usize, f64)>> = (0..g.num_nodes())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        let strength: Vec<f64> = adjacency.iter().map(|a| a.len() as f64).collect();
        let total = strength.iter().sum();
        Level {
            self_loop: vec![0.0; adjacency.len()],
            adjacency,
            strength,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn modularity(&self, community: &[usize], resolution: f64) -> f64 {
        let n = self.len();
        let mut inside = vec![0.0; n];
        let mut tot = vec![0.0; n];
        for v in 0..n {
            let c = community[v];
            tot[c] += self.strength[v];
            inside[c] += 2.0 * self.self_loop[v];
            for &(u, w) in &self.adjacency[v] {
                if community[u] == c {
                    inside[c] += w;
                }
            }
        }
        (0..n)
            .map(|c| inside[c] / self.total - resolution * (tot[c] / self.total).powi(2))
            .sum()
    }

    /// Local-move phase. Returns the (compacted) community of each node and
    /// whether any node moved.
    fn local_moves(
        &self,
        resolution: f64,
        rng: &mut ChaCha8Rng,
        deadline: Option<Instant>,
        mut trace: Option<&mut Vec<f64>>,
    ) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut weight_to = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any_move = false;

        if let Some(t) = trace.as_deref_mut() {
            t.push(self.modularity(&community, resolution));
        }

        loop {
            order.shuffle(rng);
            let mut moves = 0usize;
            for &v in &order {
                let own = community[v];
                let k = self.strength[v];

                for &(u, w) in &self.adjacency[v] {
                    let c = community[u];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }

                tot[own] -= k;
                let scale = resolution * k / self.total;
                let mut best = own;
                let mut best_gain = weight_to[own] - scale * tot[own];
                for &c in &touched {
                    let gain = weight_to[c] - scale * tot[c];
                    if gain > best_gain + 1e-12 {
                        best = c;
                        best_gain = gain;
                    }
                }
                tot[best] += k;
                if best != own {
                    community[v] = best;
                    moves += 1;
                }

                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                touched.clear();
            }

            if let Some(t) = trace.as_deref_mut() {
                t.push(self.modularity(&community, resolution));
            }
            if moves == 0 {
                break;
            }
            any_move = true;
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break;
            }
        }

        (compact_labels(&community), any_move)
    }

    fn aggregate(&self, community: &[usize], num_communities: usize) -> Level {
        let mut merged: Vec<HashMap<usize, f64>> = vec![HashMap::new(); num_communities];
        let mut self_loop = vec![0.0; num_communities];
        let mut strength = vec![0.0; num_communities];
        for v in 0..self.len() {
            let c = community[v];
            strength[c] += self.strength[v];
            self_loop[c] += self.self_loop[v];
            for &(u, w) in &self.adjacency[v] {
                let cu = community[u];
                if cu == c {
                    // each internal edge is seen from both ends
                    self_loop[c] += w / 2.0;
                } else {
                    *merged[c].entry(cu).or_default() += w;
                }
            }
        }
        let adjacency = merged
            .into_iter()
            .map(|m| {
                let mut list: Vec<(usize, f64)> = m.into_iter().collect();
                list.sort_unstable_by_key(|&(u, _)| u);
                list
            })
            .collect();
        Level {
            adjacency,
            self_loop,
            strength,
            total: self.total,
        }
    }
}

/// Relabel to `0..k` in order of first appearance.
fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Unconstrained result of one Louvain run.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Community per node, labels `0..num_communities`.
    pub assignment: Vec<usize>,
    pub num_communities: usize,
    pub levels: usize,
    pub modularity: f64,
    pub resolution: f64,
}

/// Multi-level Louvain at a fixed resolution.
pub fn louvain(g: &Graph, resolution: f64, rng: &mut ChaCha8Rng) -> Partition {
    louvain_until(g, resolution, rng, None)
}

fn louvain_until(
    g: &Graph,
    resolution: f64,
    rng: &mut ChaCha8Rng,
    deadline: Option<Instant>,
) -> Partition {
    let mut level = Level::from_graph(g);
    let mut assignment: Vec<usize> = (0..g.num_nodes()).collect();
    let mut levels = 0;
    loop {
        let (community, moved) = level.local_moves(resolution, rng, deadline, None);
        if !moved {
            break;
        }
        levels += 1;
        for c in assignment.iter_mut() {
            *c = community[*c];
        }
        let k = community.iter().max().map_or(0, |m| m + 1);
        level = level.aggregate(&community, k);
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
    }
    let assignment = compact_labels(&assignment);
    let num_communities = assignment.iter().max().map_or(0, |m| m + 1);
    Partition {
        modularity: modularity(g, &assignment, resolution),
        assignment,
        num_communities,
        levels,
        resolution,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LouvainConfig {
    pub target: usize,
    pub timeout: Duration,
    pub rng_seed: u64,
    /// Multiplicative step applied to the resolution while too few
    /// communities are found.
    pub resolution_step: f64,
    /// Independent Louvain passes per resolution step.
    pub restarts: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            target: NUM_COMMUNITIES,
            timeout: Duration::from_secs(30),
            rng_seed: 0,
            resolution_step: 1.1,
            restarts: 10,
        }
    }
}

/// Node to community map after the size-ranked relabeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityLabeling {
    pub assignment: Vec<usize>,
    /// Distinct labels in `assignment`.
    pub num_communities: usize,
    /// Communities found before aggregation (isolated nodes excluded).
    pub raw_communities: usize,
    /// Communities in the best plain pass at resolution 1, before any
    /// search towards the target count.
    pub unconstrained_communities: usize,
    /// Modularity at `resolution`.
    pub quality: f64,
    /// Modularity at resolution 1.
    pub modularity: f64,
    pub resolution: f64,
    pub timed_out: bool,
    pub warning: Option<String>,
}

impl CommunityLabeling {
    /// Wrap an externally supplied assignment, scoring it at resolution 1.
    pub fn from_assignment(g: &Graph, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != g.num_nodes() {
            return Err(Error::Mismatch(format!(
                "community labels cover {} nodes, graph has {}",
                assignment.len(),
                g.num_nodes()
            )));
        }
        let mut labels = assignment.clone();
        labels.sort_unstable();
        labels.dedup();
        let q = modularity(g, &assignment, 1.0);
        Ok(CommunityLabeling {
            num_communities: labels.len(),
            raw_communities: labels.len(),
            unconstrained_communities: labels.len(),
            quality: q,
            modularity: q,
            resolution: 1.0,
            timed_out: false,
            warning: None,
            assignment,
        })
    }

    pub fn community(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    /// Node count per label `0..max(labels, NUM_COMMUNITIES)`.
    pub fn sizes(&self) -> Vec<usize> {
        let width = self
            .assignment
            .iter()
            .max()
            .map_or(0, |m| m + 1)
            .max(NUM_COMMUNITIES);
        let mut sizes = vec![0; width];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Members of each label, ascending node id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sizes().len()];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Vec<usize>> {
        let mut rows: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line
                .split(['\t', ';', ' '])
                .filter(|t| !t.is_empty())
                .collect();
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected 2 fields, got {}",
                    fields.len()
                )));
            }
            let node = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("invalid node id {:?}", fields[0])))?;
            let label = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("invalid community id {:?}", fields[1])))?;
            rows.push((node, label));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let mut assignment = vec![None; n];
        for (node, label) in rows {
            if assignment[node].replace(label).is_some() {
                return Err(Error::Mismatch(format!("node {node} labeled twice")));
            }
        }
        assignment
            .into_iter()
            .enumerate()
            .map(|(v, l)| l.ok_or_else(|| Error::Mismatch(format!("node {v} has no community"))))
            .collect()
    }

    pub fn load(path: impl AsRef<Path>, g: &Graph) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CommunityLabeling::from_assignment(g, CommunityLabeling::parse(&text)?)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (v, c) in self.assignment.iter().enumerate() {
            out.push_str(&format!("{v}\t{c}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }
}

/// Rank communities by size (ties: smallest member id) and map them onto
/// `0..target`. Ranks at or past `target - 1` share the last label when there
/// are more than `target`; isolated nodes always take the last label.
pub fn relabel_by_size(g: &Graph, assignment: &[usize], target: usize) -> (Vec<usize>, usize) {
    let mut groups: HashMap<usize, (usize, usize)> = HashMap::new();
    for (v, &c) in assignment.iter().enumerate() {
        if g.degree(v) == 0 {
            continue;
        }
        let e = groups.entry(c).or_insert((0, v));
        e.0 += 1;
        e.1 = e.1.min(v);
    }
    let mut ranked: Vec<(usize, usize, usize)> = groups
        .into_iter()
        .map(|(c, (size, min))| (c, size, min))
        .collect();
    ranked.sort_unstable_by(|x, y| y.1.cmp(&x.1).then(x.2.cmp(&y.2)));
    let raw = ranked.len();
    let last = target.saturating_sub(1);
    let rank: HashMap<usize, usize> = ranked
        .iter()
        .enumerate()
        .map(|(r, &(c, _, _))| (c, if raw > target { r.min(last) } else { r }))
        .collect();
    let labels = assignment
        .iter()
        .enumerate()
        .map(|(v, c)| if g.degree(v) == 0 { last } else { rank[c] })
        .collect();
    (labels, raw)
}

/// Louvain constrained to `config.target` labels.
///
/// Each resolution step runs `config.restarts` independent passes. The first
/// step with a pass reaching `target` raw communities ends the search; among
/// its passes an exact hit on `target` wins, then the higher modularity of
/// the folded labeling.
pub fn detect_communities(g: &Graph, config: &LouvainConfig) -> CommunityLabeling {
    let deadline = Instant::now() + config.timeout;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let connected_nodes = (0..g.num_nodes()).filter(|&v| g.degree(v) > 0).count();

    struct Candidate {
        labels: Vec<usize>,
        raw: usize,
        score: f64,
        resolution: f64,
    }
    let better = |a: &Candidate, b: &Candidate| {
        let exact = |c: &Candidate| c.raw == config.target;
        (exact(a), a.score) > (exact(b), b.score)
    };

    let mut resolution = 1.0;
    let mut fallback: Option<Candidate> = None;
    let mut timed_out = false;
    let mut unconstrained: Option<(f64, usize)> = None;
    let mut first_step = true;
    let chosen = loop {
        let mut best: Option<Candidate> = None;
        for _ in 0..config.restarts.max(1) {
            let p = louvain_until(g, resolution, &mut rng, Some(deadline));
            let (labels, raw) = relabel_by_size(g, &p.assignment, config.target);
            if first_step && unconstrained.is_none_or(|(q, _)| p.modularity > q) {
                unconstrained = Some((p.modularity, raw));
            }
            let cand = Candidate {
                score: modularity(g, &labels, 1.0),
                labels,
                raw,
                resolution,
            };
            if cand.raw >= config.target {
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    best = Some(cand);
                }
            } else if fallback
                .as_ref()
                .is_none_or(|f| (cand.raw, cand.score) > (f.raw, f.score))
            {
                fallback = Some(cand);
            }
            if Instant::now() >= deadline {
                timed_out = true;
                break;
            }
        }
        first_step = false;
        if let Some(b) = best {
            break b;
        }
        let stuck = fallback.as_ref().is_some_and(|f| f.raw >= connected_nodes);
        if timed_out || stuck {
            break fallback.take().expect("at least one pass ran");
        }
        resolution *= config.resolution_step;
    };

    let Candidate {
        labels: assignment,
        raw,
        resolution,
        ..
    } = chosen;
    let mut distinct = assignment.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let warning = (raw < config.target).then(|| {
        format!(
            "found {raw} communities, fewer than the {} requested{}",
            config.target,
            if timed_out { " before the timeout" } else { "" }
        )
    });
    CommunityLabeling {
        num_communities: distinct.len(),
        raw_communities: raw,
        unconstrained_communities: unconstrained.map_or(raw, |(_, n)| n),
        quality: modularity(g, &assignment, resolution),
        modularity: modularity(g, &assignment, 1.0),
        resolution,
        timed_out,
        warning,
        assignment,
    }
}
