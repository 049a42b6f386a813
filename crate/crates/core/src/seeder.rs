//! Seed selection.
//!
//! Seeds are placed community by community so that no two seeds of the same
//! community are within two hops of each other. Candidates come from the
//! community's top authority quartile first; the pool widens one quartile at a
//! time once the current one is used up. A placement try that cannot reach the
//! requested count within its draw budget is retried `tries` times before the
//! count is lowered by one. Once a count succeeds, a greedy pass tops the set
//! back up towards the original request. The whole procedure is repeated up to
//! `compliance_attempts` times until the seed neighbourhoods' degree and
//! clustering histograms are within `delta` of the whole graph's.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::louvain::CommunityLabeling;
use crate::profiles::SeederSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    /// All seeds, ascending.
    pub seeds: Vec<usize>,
    /// Seeds per community label, in placement order.
    pub per_community: Vec<Vec<usize>>,
    /// `min(|V| / avg degree, ceil(seeds_percent * |V| / 100))`.
    pub sigma_requested: usize,
    pub sigma_achieved: usize,
    /// `|V| / avg degree`.
    pub sigma_upper_bound: usize,
    /// Fraction of nodes that are seeds or adjacent to one.
    pub coverage: f64,
    pub representativeness: RepresentativenessReport,
    /// Seed sets drawn before one passed (or the attempts ran out).
    pub attempts: usize,
    pub warnings: Vec<String>,
}

impl SeedSet {
    /// Seeds and their direct neighbours, ascending.
    pub fn covered_nodes(&self, g: &Graph) -> Vec<usize> {
        covered_nodes(g, &self.seeds)
    }
}

fn covered_nodes(g: &Graph, seeds: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; g.num_nodes()];
    for &s in seeds {
        mark[s] = true;
        for &n in g.neighbors(s) {
            mark[n] = true;
        }
    }
    (0..g.num_nodes()).filter(|&v| mark[v]).collect()
}

/// Seed count target for a graph: the percentage request capped by `|V|/ϕ`.
pub fn seed_target(g: &Graph, seeds_percent: f64) -> (usize, usize) {
    let n = g.num_nodes();
    let avg = g.average_degree();
    let upper = if avg > 0.0 {
        (n as f64 / avg).floor() as usize
    } else {
        n
    };
    let wanted = (seeds_percent * n as f64 / 100.0).ceil() as usize;
    (wanted.min(upper), upper)
}

/// Per-community placement state for one try.
struct Placement<'a> {
    g: &'a Graph,
    /// `blocked[c][v]`: `v` is within two hops of a seed of community `c`.
    blocked: Vec<Vec<bool>>,
    per_community: Vec<Vec<usize>>,
    placed: usize,
}

impl<'a> Placement<'a> {
    fn new(g: &'a Graph, communities: usize) -> Self {
        Placement {
            g,
            blocked: vec![vec![false; g.num_nodes()]; communities],
            per_community: vec![Vec::new(); communities],
            placed: 0,
        }
    }

    fn is_free(&self, community: usize, v: usize) -> bool {
        !self.blocked[community][v]
    }

    fn place(&mut self, community: usize, v: usize) {
        self.blocked[community][v] = true;
        for u in self.g.nodes_within_distance(v, 2) {
            self.blocked[community][u] = true;
        }
        self.per_community[community].push(v);
        self.placed += 1;
    }
}

/// Split each community's members into authority quartiles.
fn candidate_tiers(labeling: &CommunityLabeling, authority: &[f64]) -> Vec<Vec<Vec<usize>>> {
    labeling
        .members()
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| authority[b].total_cmp(&authority[a]).then(a.cmp(&b)));
            let n = members.len();
            let mut tiers = Vec::new();
            let mut start = 0;
            for q in 1..=4 {
                let end = (n * q).div_ceil(4);
                if end > start {
                    tiers.push(members[start..end].to_vec());
                }
                start = end;
            }
            tiers
        })
        .collect()
}

/// Largest-remainder split of `sigma` over communities by size.
fn quotas(sizes: &[usize], sigma: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes
        .iter()
        .map(|&s| sigma as f64 * s as f64 / total as f64)
        .collect();
    let mut q: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..sizes.len()).collect();
    rest.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - q[a] as f64, exact[b] - q[b] as f64);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let short = sigma - q.iter().sum::<usize>();
    for &c in rest.iter().take(short) {
        q[c] += 1;
    }
    q
}

/// One randomized attempt at placing `sigma` seeds within `budget` draws.
fn try_place<'a>(
    g: &'a Graph,
    tiers: &'a [Vec<Vec<usize>>],
    sigma: usize,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Placement<'a>> {
    let sizes: Vec<usize> = tiers.iter().map(|t| t.iter().map(Vec::len).sum()).collect();
    let quota = quotas(&sizes, sigma);
    let mut state = Placement::new(g, tiers.len());
    let mut tier_index = vec![0usize; tiers.len()];
    let mut pools: Vec<Vec<usize>> = tiers
        .iter()
        .map(|t| {
            let mut pool = t.first().cloned().unwrap_or_default();
            pool.shuffle(rng);
            pool
        })
        .collect();
    let mut exhausted: Vec<bool> = tiers.iter().map(Vec::is_empty).collect();
    let mut draws = 0;

    while state.placed < sigma && draws < budget {
        // community furthest below its quota; overflow goes to whoever can still take seeds
        let Some(c) = (0..tiers.len())
            .filter(|&c| !exhausted[c])
            .max_by(|&a, &b| {
                let da = quota[a] as isize - state.per_community[a].len() as isize;
                let db = quota[b] as isize - state.per_community[b].len() as isize;
                da.cmp(&db).then(b.cmp(&a))
            })
        else {
            break;
        };

        match pools[c].pop() {
            Some(v) => {
                draws += 1;
                if state.is_free(c, v) {
                    state.place(c, v);
                }
            }
            None => {
                tier_index[c] += 1;
                match tiers[c].get(tier_index[c]) {
                    Some(next) => {
                        pools[c] = next.clone();
                        pools[c].shuffle(rng);
                    }
                    None => exhausted[c] = true,
                }
            }
        }
    }
    (state.placed == sigma).then_some(state)
}

/// Greedy top-up in global authority order, never removing seeds.
fn augment(
    state: &mut Placement<'_>,
    labeling: &CommunityLabeling,
    authority: &[f64],
    target: usize,
) {
    if state.placed >= target {
        return;
    }
    let mut order: Vec<usize> = (0..state.g.num_nodes()).collect();
    order.sort_by(|&a, &b| authority[b].total_cmp(&authority[a]).then(a.cmp(&b)));
    for v in order {
        if state.placed >= target {
            break;
        }
        let c = labeling.community(v);
        if state.is_free(c, v) {
            state.place(c, v);
        }
    }
}

/// Choose seeds for every community.
///
/// `authority` is the per-node HITS authority score and `clustering` the local
/// clustering coefficient, both over `g`.
pub fn assign_seeds(
    g: &Graph,
    labeling: &CommunityLabeling,
    authority: &[f64],
    clustering: &[f64],
    seeds_percent: f64,
    settings: &SeederSettings,
    rng: &mut ChaCha8Rng,
) -> Result<SeedSet> {
    if labeling.num_nodes() != g.num_nodes() {
        return Err(Error::Mismatch(format!(
            "labeling covers {} nodes, graph has {}",
            labeling.num_nodes(),
            g.num_nodes()
        )));
    }
    let (target, upper) = seed_target(g, seeds_percent);
    if target == 0 {
        return Err(Error::GraphTooSmall(format!(
            "{} nodes at {seeds_percent}% leave no room for a seed",
            g.num_nodes()
        )));
    }
    let tiers = candidate_tiers(labeling, authority);

    let mut best: Option<(Placement<'_>, RepresentativenessReport)> = None;
    let mut attempts = 0;
    for _ in 0..settings.compliance_attempts.max(1) {
        attempts += 1;
        let mut sigma = target;
        let mut placed = None;
        while sigma > 0 {
            let budget = settings.iterations_per_seed.max(1) * sigma;
            placed =
                (0..settings.tries.max(1)).find_map(|_| try_place(g, &tiers, sigma, budget, rng));
            if placed.is_some() {
                break;
            }
            sigma -= 1;
        }
        let Some(mut state) = placed else {
            return Err(Error::GraphTooSmall("no feasible seed placement".into()));
        };
        augment(&mut state, labeling, authority, target);

        let seeds = sorted_seeds(&state.per_community);
        let report = check_representativeness(
            g,
            &seeds,
            clustering,
            RepresentativenessScope::Neighborhoods,
            settings.delta,
        );
        let pass = report.pass;
        if best
            .as_ref()
            .is_none_or(|(_, r)| report.worst() < r.worst())
        {
            best = Some((state, report));
        }
        if pass {
            break;
        }
    }

    let (state, representativeness) = best.expect("at least one attempt");
    let seeds = sorted_seeds(&state.per_community);
    let mut warnings = Vec::new();
    for (c, members) in labeling.members().iter().enumerate() {
        if !members.is_empty() && state.per_community[c].is_empty() {
            warnings.push(format!("community {c} received no seed"));
        }
    }
    if !representativeness.pass {
        warnings.push(format!(
            "seed neighbourhoods deviate from the graph by {:.3} (delta {})",
            representativeness.worst(),
            settings.delta
        ));
    }
    let coverage = covered_nodes(g, &seeds).len() as f64 / g.num_nodes() as f64;
    Ok(SeedSet {
        sigma_requested: target,
        sigma_achieved: seeds.len(),
        sigma_upper_bound: upper,
        coverage,
        per_community: state.per_community,
        seeds,
        representativeness,
        attempts,
        warnings,
    })
}

fn sorted_seeds(per_community: &[Vec<usize>]) -> Vec<usize> {
    let mut seeds: Vec<usize> = per_community.iter().flatten().copied().collect();
    seeds.sort_unstable();
    seeds
}

/// Which nodes stand in for the seed set when comparing distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentativenessScope {
    /// The seed nodes only.
    Seeds,
    /// Seeds together with their direct neighbours.
    Neighborhoods,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativenessReport {
    pub scope: RepresentativenessScope,
    pub delta: f64,
    /// Normalized L1 distance between log2-binned degree histograms.
    pub degree_distance: f64,
    /// Normalized L1 distance between 10-bin clustering histograms.
    pub clustering_distance: f64,
    pub pass: bool,
}

impl RepresentativenessReport {
    pub fn worst(&self) -> f64 {
        self.degree_distance.max(self.clustering_distance)
    }
}

/// Degree bin: 0 for isolated nodes, otherwise `floor(log2 d) + 1`.
pub fn degree_bin(degree: usize) -> usize {
    if degree == 0 {
        0
    } else {
        degree.ilog2() as usize + 1
    }
}

/// Ten uniform bins over `[0, 1]`, the last one closed.
pub fn clustering_bin(c: f64) -> usize {
    ((c * 10.0).floor() as usize).min(9)
}

/// Half the L1 distance between two normalized histograms (range `[0, 1]`).
pub fn histogram_distance(a: &[usize], b: &[usize]) -> f64 {
    let (ta, tb) = (
        a.iter().sum::<usize>() as f64,
        b.iter().sum::<usize>() as f64,
    );
    if ta == 0.0 || tb == 0.0 {
        return if ta == tb { 0.0 } else { 1.0 };
    }
    let len = a.len().max(b.len());
    let at = |h: &[usize], i: usize| h.get(i).copied().unwrap_or(0) as f64;
    0.5 * (0..len)
        .map(|i| (at(a, i) / ta - at(b, i) / tb).abs())
        .sum::<f64>()
}

fn histogram(nodes: impl Iterator<Item = usize>, bin: impl Fn(usize) -> usize) -> Vec<usize> {
    let mut h = Vec::new();
    for v in nodes {
        let b = bin(v);
        if h.len() <= b {
            h.resize(b + 1, 0);
        }
        h[b] += 1;
    }
    h
}

/// Compare degree and clustering distributions of the seed scope against the
/// whole graph.
pub fn check_representativeness(
    g: &Graph,
    seeds: &[usize],
    clustering: &[f64],
    scope: RepresentativenessScope,
    delta: f64,
) -> RepresentativenessReport {
    let sample = match scope {
        RepresentativenessScope::Seeds => seeds.to_vec(),
        RepresentativenessScope::Neighborhoods => covered_nodes(g, seeds),
    };
    let all = 0..g.num_nodes();
    let deg = |v: usize| degree_bin(g.degree(v));
    let clu = |v: usize| clustering_bin(clustering[v]);
    let degree_distance = histogram_distance(
        &histogram(sample.iter().copied(), deg),
        &histogram(all.clone(), deg),
    );
    let clustering_distance = histogram_distance(
        &histogram(sample.iter().copied(), clu),
        &histogram(all, clu),
    );
    RepresentativenessReport {
        scope,
        delta,
        degree_distance,
        clustering_distance,
        pass: degree_distance <= delta && clustering_distance <= delta,
    }
}
