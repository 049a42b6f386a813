//! Attribute assignment: seed profiles, neighbour propagation, remainder
//! assignment and link weights.
//!
//! Every random step draws from its own ChaCha stream derived from the
//! configuration's `rng_seed`, so changing one step never shifts the draws of
//! another.

use std::fmt;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{hits, Graph, HitsConfig};
use crate::louvain::CommunityLabeling;
use crate::profiles::{AttributeSchema, GenerationConfig};
use crate::seeder::{assign_seeds, SeedSet};

/// Stream ids for the per-step generators.
pub mod streams {
    pub const SEEDER: u64 = 1;
    pub const NEIGHBORS: u64 = 2;
    pub const REMAINING: u64 = 3;
    pub const WEIGHTS: u64 = 4;
    pub const CLASS: u64 = 5;
}

/// Generator for one step of a run.
pub fn stage_rng(rng_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    rng
}

/// Per-node attribute values (indices into each attribute's value list);
/// `None` until the node is assigned.
pub type PartialTable = Vec<Option<Vec<usize>>>;

/// Draws values from the schema's proportion distributions.
#[derive(Debug, Clone)]
pub struct AttributeSampler {
    dists: Vec<WeightedIndex<f64>>,
}

impl AttributeSampler {
    pub fn new(schema: &AttributeSchema) -> Result<Self> {
        let dists = schema
            .attributes
            .iter()
            .map(|a| {
                WeightedIndex::new(a.proportions())
                    .map_err(|e| Error::Config(format!("{}: proportions unusable ({e})", a.name)))
            })
            .collect::<Result<_>>()?;
        Ok(AttributeSampler { dists })
    }

    pub fn num_attributes(&self) -> usize {
        self.dists.len()
    }

    pub fn sample(&self, attribute: usize, rng: &mut ChaCha8Rng) -> usize {
        self.dists[attribute].sample(rng)
    }

    pub fn sample_record(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        (0..self.dists.len()).map(|a| self.sample(a, rng)).collect()
    }
}

/// Give each seed its community's profile verbatim.
///
/// `community_profiles[c]` holds the profile values for community `c`.
pub fn assign_seed_profiles(
    num_nodes: usize,
    seeds: &SeedSet,
    community_profiles: &[Vec<usize>],
) -> Result<PartialTable> {
    let mut table = vec![None; num_nodes];
    for (c, members) in seeds.per_community.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let profile = community_profiles
            .get(c)
            .ok_or_else(|| Error::Config(format!("community {c} has seeds but no profile")))?;
        for &s in members {
            table[s] = Some(profile.clone());
        }
    }
    Ok(table)
}

/// Copy each seed's values to its unassigned neighbours.
///
/// Seeds are visited in the given order, so a node next to several seeds
/// inherits from the first. Per attribute the seed's value is copied with
/// probability `1 - p`; otherwise a schema draw is used. Returns how many
/// nodes were assigned.
pub fn propagate_to_neighbors(
    g: &Graph,
    table: &mut PartialTable,
    seed_order: &[usize],
    sampler: &AttributeSampler,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut assigned = 0;
    for &s in seed_order {
        let Some(source) = table[s].clone() else {
            continue;
        };
        for &n in g.neighbors(s) {
            if table[n].is_some() {
                continue;
            }
            let record = source
                .iter()
                .enumerate()
                .map(|(a, &value)| {
                    if rng.random::<f64>() < p {
                        sampler.sample(a, rng)
                    } else {
                        value
                    }
                })
                .collect();
            table[n] = Some(record);
            assigned += 1;
        }
    }
    assigned
}

/// Most frequent value, lowest index on ties.
fn modal(values: &[usize]) -> usize {
    let mut counts: Vec<usize> = Vec::new();
    for &v in values {
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
    }
    let mut best = 0;
    for (v, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = v;
        }
    }
    best
}

/// Fill every node still unassigned, in ascending id order.
///
/// Per attribute: with probability `1 - p` the modal value among assigned
/// neighbours, otherwise the value of a random assigned neighbour. Nodes with
/// no assigned neighbour get schema draws. Returns how many nodes were filled.
pub fn assign_remaining(
    g: &Graph,
    table: &mut PartialTable,
    sampler: &AttributeSampler,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut filled = 0;
    let mut column = Vec::new();
    for v in 0..g.num_nodes() {
        if table[v].is_some() {
            continue;
        }
        let donors: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&n| table[n].is_some())
            .collect();
        let record = if donors.is_empty() {
            sampler.sample_record(rng)
        } else {
            (0..sampler.num_attributes())
                .map(|a| {
                    if rng.random::<f64>() < 1.0 - p {
                        column.clear();
                        column.extend(donors.iter().map(|&n| table[n].as_ref().unwrap()[a]));
                        modal(&column)
                    } else {
                        let &n = donors.choose(rng).unwrap();
                        table[n].as_ref().unwrap()[a]
                    }
                })
                .collect()
        };
        table[v] = Some(record);
        filled += 1;
    }
    filled
}

/// One weighted link, listed under its higher-id endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub user: usize,
    pub userf: usize,
    /// Uniform in `[0, 1]`, rounded to two decimals.
    pub linkweight: f64,
}

/// Edges in emission order: users by descending id, each followed by its
/// lower-id neighbours in ascending order.
pub fn emission_order(g: &Graph) -> Vec<(usize, usize)> {
    (0..g.num_nodes())
        .rev()
        .flat_map(|u| {
            g.neighbors(u)
                .iter()
                .take_while(move |&&f| f < u)
                .map(move |&f| (u, f))
        })
        .collect()
}

pub fn assign_edge_weights(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<WeightedEdge> {
    emission_order(g)
        .into_iter()
        .map(|(user, userf)| WeightedEdge {
            user,
            userf,
            linkweight: (rng.random::<f64>() * 100.0).round() / 100.0,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FriendCount {
    Low,
    Medium,
    High,
}

impl FriendCount {
    pub fn from_degree(degree: usize) -> Self {
        match degree {
            0..10 => FriendCount::Low,
            10..50 => FriendCount::Medium,
            _ => FriendCount::High,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LOW" => Some(FriendCount::Low),
            "MEDIUM" => Some(FriendCount::Medium),
            "HIGH" => Some(FriendCount::High),
            _ => None,
        }
    }
}

impl fmt::Display for FriendCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FriendCount::Low => "LOW",
            FriendCount::Medium => "MEDIUM",
            FriendCount::High => "HIGH",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user: usize,
    /// Value index per schema attribute, in schema order.
    pub values: Vec<usize>,
    pub numfriends: FriendCount,
    pub classvalue: bool,
    pub auth: f64,
    pub community: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub metrics_secs: f64,
    pub seeding_secs: f64,
    pub propagation_secs: f64,
    pub remaining_secs: f64,
    pub weights_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub num_nodes: usize,
    pub sigma_requested: usize,
    pub sigma_achieved: usize,
    pub coverage: f64,
    /// Seeds plus the neighbours that inherited from them.
    pub assigned: usize,
    /// Nodes filled from neighbour values or schema draws.
    pub remaining: usize,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub users: Vec<UserRecord>,
    pub edges: Vec<WeightedEdge>,
    pub seeds: SeedSet,
    pub report: RunReport,
}

/// Run seeding and the three assignment steps over a labeled graph.
pub fn generate(
    g: &Graph,
    labeling: &CommunityLabeling,
    config: &GenerationConfig,
    exec: Exec,
) -> Result<Generated> {
    let violations = config.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Config(lines.join("; ")));
    }
    if labeling.num_nodes() != g.num_nodes() {
        return Err(Error::Mismatch(format!(
            "labeling covers {} nodes, graph has {}",
            labeling.num_nodes(),
            g.num_nodes()
        )));
    }
    let p = config.diversity();
    let sampler = AttributeSampler::new(&config.schema)?;
    let community_profiles = config.community_profiles()?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let scores = hits(g, HitsConfig::default(), exec);
    let clustering = g.clustering_coefficients(exec);
    timings.metrics_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let seeds = assign_seeds(
        g,
        labeling,
        &scores.authority,
        &clustering,
        config.seeds_percent,
        &config.seeder,
        &mut stage_rng(config.rng_seed, streams::SEEDER),
    )
    .map_err(|e| e.in_stage("seeding"))?;
    timings.seeding_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut table = assign_seed_profiles(g.num_nodes(), &seeds, &community_profiles)
        .map_err(|e| e.in_stage("seed profiles"))?;
    let mut order = seeds.seeds.clone();
    order.sort_by(|&a, &b| {
        scores.authority[b]
            .total_cmp(&scores.authority[a])
            .then(a.cmp(&b))
    });
    let neighbours = propagate_to_neighbors(
        g,
        &mut table,
        &order,
        &sampler,
        p,
        &mut stage_rng(config.rng_seed, streams::NEIGHBORS),
    );
    timings.propagation_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let remaining = assign_remaining(
        g,
        &mut table,
        &sampler,
        p,
        &mut stage_rng(config.rng_seed, streams::REMAINING),
    );
    timings.remaining_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let edges = assign_edge_weights(g, &mut stage_rng(config.rng_seed, streams::WEIGHTS));
    timings.weights_secs = t.elapsed().as_secs_f64();

    let mut class_rng = stage_rng(config.rng_seed, streams::CLASS);
    let users = table
        .into_iter()
        .enumerate()
        .map(|(v, values)| UserRecord {
            user: v,
            values: values.expect("every node assigned"),
            numfriends: FriendCount::from_degree(g.degree(v)),
            classvalue: class_rng.random::<f64>() < config.class_yes_proportion,
            auth: scores.authority[v],
            community: labeling.community(v),
        })
        .collect();

    let mut warnings = seeds.warnings.clone();
    if !scores.converged {
        warnings.push(format!(
            "HITS stopped after {} iterations",
            scores.iterations
        ));
    }
    let report = RunReport {
        num_nodes: g.num_nodes(),
        sigma_requested: seeds.sigma_requested,
        sigma_achieved: seeds.sigma_achieved,
        coverage: seeds.coverage,
        assigned: seeds.sigma_achieved + neighbours,
        remaining,
        warnings,
        timings,
    };
    Ok(Generated {
        users,
        edges,
        seeds,
        report,
    })
}
