//! Recursive-matrix (R-MAT) topology generator.
//!
//! Each edge draw descends `depth` levels of the adjacency matrix, picking one
//! of the four quadrants with probabilities `a` (top-left), `b` (top-right),
//! `c` (bottom-left) and `d` (bottom-right). `a` and `d` grow the dense
//! diagonal blocks that later surface as communities; `b` and `c` create the
//! cross links between them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmatParams {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub rng_seed: u64,
}

impl RmatParams {
    pub const DEFAULT_A: f64 = 0.45;
    pub const DEFAULT_B: f64 = 0.08;
    pub const DEFAULT_C: f64 = 0.08;
    pub const DEFAULT_D: f64 = 0.39;

    pub fn new(num_nodes: usize, num_edges: usize, rng_seed: u64) -> Self {
        RmatParams {
            num_nodes,
            num_edges,
            a: Self::DEFAULT_A,
            b: Self::DEFAULT_B,
            c: Self::DEFAULT_C,
            d: Self::DEFAULT_D,
            rng_seed,
        }
    }

    pub fn with_quadrants(mut self, a: f64, b: f64, c: f64, d: f64) -> Self {
        self.a = a;
        self.b = b;
        self.c = c;
        self.d = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.a, self.b, self.c, self.d];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p) || p.is_nan()) {
            return Err(Error::Config(format!(
                "quadrant probabilities must lie in [0, 1], got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "quadrant probabilities must sum to 1, got {sum}"
            )));
        }
        if self.num_nodes == 0 {
            return Err(Error::Config("num_nodes must be at least 1".into()));
        }
        if self.num_edges == 0 {
            return Err(Error::Config("num_edges must be at least 1".into()));
        }
        Ok(())
    }

    /// Recursion depth `ceil(log2 N)`.
    pub fn depth(&self) -> u32 {
        self.num_nodes.max(1).next_power_of_two().trailing_zeros()
    }

    /// Probability that a draw lands in the top half (`a + b`); governs out-degree.
    pub fn row_probability(&self) -> f64 {
        self.a + self.b
    }
}

/// Raw draws plus the simple graph built from them.
#[derive(Debug, Clone)]
pub struct RmatSample {
    pub params: RmatParams,
    /// Every `(row, col)` draw in generation order, duplicates and loops included.
    pub draws: Vec<(usize, usize)>,
    pub graph: Graph,
}

impl RmatSample {
    pub fn requested_edges(&self) -> usize {
        self.params.num_edges
    }

    pub fn realized_edges(&self) -> usize {
        self.graph.num_edges()
    }

    /// Out-degree per row id over the raw draws (`2^depth` entries).
    pub fn out_degrees(&self) -> Vec<usize> {
        out_degrees(&self.params, &self.draws)
    }
}

pub(crate) fn out_degrees(params: &RmatParams, draws: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0usize; 1usize << params.depth()];
    for &(u, _) in draws {
        deg[u] += 1;
    }
    deg
}

/// The raw quadrant-descent draws for `params`; a pure function of the params.
pub fn draw_edges(params: &RmatParams) -> Result<Vec<(usize, usize)>> {
    params.validate()?;
    let depth = params.depth();
    let (ab, abc) = (params.a + params.b, params.a + params.b + params.c);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut draws = Vec::with_capacity(params.num_edges);
    for _ in 0..params.num_edges {
        let (mut row, mut col) = (0usize, 0usize);
        for _ in 0..depth {
            let r: f64 = rng.random();
            let (dr, dc) = if r < params.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            row = (row << 1) | dr;
            col = (col << 1) | dc;
        }
        draws.push((row, col));
    }
    Ok(draws)
}

/// Generate the undirected graph. Duplicate draws and self-loops are
/// discarded, so the realized edge count can fall short of the request.
pub fn generate(params: &RmatParams) -> Result<RmatSample> {
    let draws = draw_edges(params)?;
    let graph = Graph::from_edges(params.num_nodes, draws.iter().copied())?;
    Ok(RmatSample {
        params: *params,
        draws,
        graph,
    })
}

/// Expected number of nodes with out-degree `k` under the binomial cascade:
///
/// `C_k = C(E,k) Σ_i C(n,i) [ρ^(n-i) (1-ρ)^i]^k [1 - ρ^(n-i) (1-ρ)^i]^(E-k)`
///
/// evaluated term by term in log space.
pub fn expected_outdegree_count(k: usize, params: &RmatParams) -> f64 {
    outdegree_classes(k, params)
        .into_iter()
        .map(|(size, q)| size * q)
        .sum()
}

/// Rows grouped by how many of their `n` bits took the `1-ρ` branch:
/// `(C(n,i), P[out-degree of one such row = k])` for `i = 0..=n`.
pub fn outdegree_classes(k: usize, params: &RmatParams) -> Vec<(f64, f64)> {
    let e = params.num_edges as u64;
    let k = k as u64;
    let n = params.depth() as u64;
    if k > e {
        return (0..=n).map(|i| (ln_binomial(n, i).exp(), 0.0)).collect();
    }
    let rho = params.row_probability();
    let ln_choose_ek = ln_binomial(e, k);
    (0..=n)
        .map(|i| {
            let p = rho.powi((n - i) as i32) * (1.0 - rho).powi(i as i32);
            let q = (ln_choose_ek + xlogy(k as f64, p) + xlogy((e - k) as f64, 1.0 - p)).exp();
            (ln_binomial(n, i).exp(), q)
        })
        .collect()
}

/// `x * ln(y)` with the `0 * ln(0) = 0` convention.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Default edge-list file name, `<N>by<E>.csv` with `k` for whole thousands.
pub fn default_file_stem(num_nodes: usize, num_edges: usize) -> String {
    format!("{}by{}", compact_count(num_nodes), compact_count(num_edges))
}

fn compact_count(n: usize) -> String {
    if n >= 1000 && n.is_multiple_of(1000) {
        format!("{}k", n / 1000)
    } else {
        n.to_string()
    }
}
