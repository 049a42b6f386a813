//! Frequency tables, cross-run deviation, community sizes and the R-MAT
//! out-degree fit check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::louvain::{CommunityLabeling, NUM_COMMUNITIES};
use crate::profiles::AttributeSchema;
use crate::propagator::UserRecord;
use crate::rmat::{draw_edges, out_degrees, outdegree_classes, RmatParams};

/// The whole graph or one community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    All,
    Community(usize),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::All => f.write_str("ALL"),
            Scope::Community(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Scope::All);
        }
        s.parse()
            .map(Scope::Community)
            .map_err(|_| Error::Config(format!("not a scope: {s:?}")))
    }
}

impl Serialize for Scope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Value counts per scope and attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// Attribute names and their value labels, in schema order.
    pub attributes: Vec<(String, Vec<String>)>,
    /// `all[attribute][value]`.
    pub all: Vec<Vec<usize>>,
    /// `communities[c][attribute][value]`.
    pub communities: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyRow<'a> {
    pub scope: Scope,
    pub attribute: &'a str,
    pub value: &'a str,
    pub frequency: usize,
}

impl FrequencyTable {
    /// All-zero table for `schema` with `num_communities` communities.
    pub fn empty(schema: &AttributeSchema, num_communities: usize) -> Self {
        let attributes: Vec<(String, Vec<String>)> = schema
            .attributes
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    a.values.iter().map(|v| v.label.clone()).collect(),
                )
            })
            .collect();
        let zeros: Vec<Vec<usize>> = attributes.iter().map(|(_, v)| vec![0; v.len()]).collect();
        FrequencyTable {
            communities: vec![zeros.clone(); num_communities],
            all: zeros,
            attributes,
        }
    }

    pub fn counts(&self, scope: Scope) -> Option<&[Vec<usize>]> {
        match scope {
            Scope::All => Some(&self.all),
            Scope::Community(c) => self.communities.get(c).map(Vec::as_slice),
        }
    }

    pub(crate) fn counts_mut(&mut self, scope: Scope) -> Option<&mut Vec<Vec<usize>>> {
        match scope {
            Scope::All => Some(&mut self.all),
            Scope::Community(c) => self.communities.get_mut(c),
        }
    }

    pub fn frequency(&self, scope: Scope, attribute: &str, value: &str) -> Option<usize> {
        let a = self.attributes.iter().position(|(n, _)| n == attribute)?;
        let v = self.attributes[a].1.iter().position(|l| l == value)?;
        Some(self.counts(scope)?[a][v])
    }

    /// Most frequent value label of an attribute within a scope, first on ties.
    pub fn modal_value(&self, scope: Scope, attribute: &str) -> Option<&str> {
        let a = self.attributes.iter().position(|(n, _)| n == attribute)?;
        let counts = &self.counts(scope)?[a];
        let mut best = 0;
        for (v, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = v;
            }
        }
        Some(&self.attributes[a].1[best])
    }

    /// ALL rows, then each community in ascending order; zero rows included.
    pub fn rows(&self) -> Vec<FrequencyRow<'_>> {
        let scopes =
            std::iter::once(Scope::All).chain((0..self.communities.len()).map(Scope::Community));
        let mut rows = Vec::new();
        for scope in scopes {
            let counts = self.counts(scope).expect("scope in range");
            for (a, (name, labels)) in self.attributes.iter().enumerate() {
                for (v, label) in labels.iter().enumerate() {
                    rows.push(FrequencyRow {
                        scope,
                        attribute: name,
                        value: label,
                        frequency: counts[a][v],
                    });
                }
            }
        }
        rows
    }
}

/// Count attribute values over the whole population and per community.
pub fn frequency_table(users: &[UserRecord], schema: &AttributeSchema) -> FrequencyTable {
    let communities = users
        .iter()
        .map(|u| u.community + 1)
        .max()
        .unwrap_or(0)
        .max(NUM_COMMUNITIES);
    let mut table = FrequencyTable::empty(schema, communities);
    for u in users {
        for (a, &v) in u.values.iter().enumerate() {
            table.all[a][v] += 1;
            table.communities[u.community][a][v] += 1;
        }
    }
    table
}

/// Node count per community, descending community id.
pub fn community_summary(labeling: &CommunityLabeling) -> Vec<(usize, usize)> {
    labeling.sizes().into_iter().enumerate().rev().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationCell {
    /// Mean absolute deviation of value shares from their cross-run mean, in
    /// percentage points.
    pub avg: f64,
    /// Population standard deviation of the same deviations.
    pub stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub runs: usize,
    pub scopes: Vec<Scope>,
    pub attributes: Vec<String>,
    /// `cells[attribute][scope]`.
    pub cells: Vec<Vec<DeviationCell>>,
}

impl DeviationReport {
    pub fn cell(&self, scope: Scope, attribute: &str) -> Option<DeviationCell> {
        let s = self.scopes.iter().position(|&x| x == scope)?;
        let a = self.attributes.iter().position(|n| n == attribute)?;
        Some(self.cells[a][s])
    }

    /// Largest Avg over attributes within a scope.
    pub fn max_avg(&self, scope: Scope) -> Option<f64> {
        let s = self.scopes.iter().position(|&x| x == scope)?;
        self.cells.iter().map(|row| row[s].avg).reduce(f64::max)
    }

    /// Tab-separated table: one Avg/Stdev column pair per scope.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for scope in &self.scopes {
            match scope {
                Scope::All => out.push_str("\tAll - deviation\t"),
                Scope::Community(c) => out.push_str(&format!("\tCommunity {c} - deviation\t")),
            }
        }
        out.push('\n');
        out.push_str(&"\tAvg.\tStdev.".repeat(self.scopes.len()));
        out.push('\n');
        for (name, row) in self.attributes.iter().zip(&self.cells) {
            out.push_str(name);
            for cell in row {
                out.push_str(&format!("\t{:.1}\t{:.1}", cell.avg, cell.stdev));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn shares(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| {
            if total == 0 {
                0.0
            } else {
                100.0 * c as f64 / total as f64
            }
        })
        .collect()
}

/// Spread of value shares across repeated runs, per attribute and scope.
pub fn deviation_report(tables: &[FrequencyTable], scopes: &[Scope]) -> Result<DeviationReport> {
    if tables.len() < 2 {
        return Err(Error::Config(format!(
            "deviation needs at least 2 runs, got {}",
            tables.len()
        )));
    }
    let first = &tables[0];
    if let Some(i) = tables.iter().position(|t| t.attributes != first.attributes) {
        return Err(Error::Mismatch(format!(
            "run {i} uses a different schema than run 0"
        )));
    }
    for &scope in scopes {
        if tables.iter().any(|t| t.counts(scope).is_none()) {
            return Err(Error::Mismatch(format!("scope {scope} missing from a run")));
        }
    }

    let runs = tables.len() as f64;
    let cells = (0..first.attributes.len())
        .map(|a| {
            scopes
                .iter()
                .map(|&scope| {
                    let per_run: Vec<Vec<f64>> = tables
                        .iter()
                        .map(|t| shares(&t.counts(scope).unwrap()[a]))
                        .collect();
                    let values = per_run[0].len();
                    let mean: Vec<f64> = (0..values)
                        .map(|v| per_run.iter().map(|r| r[v]).sum::<f64>() / runs)
                        .collect();
                    let devs: Vec<f64> = per_run
                        .iter()
                        .flat_map(|r| r.iter().zip(&mean).map(|(s, m)| (s - m).abs()))
                        .collect();
                    let n = devs.len() as f64;
                    let avg = devs.iter().sum::<f64>() / n;
                    let var = devs.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / n;
                    DeviationCell {
                        avg,
                        stdev: var.sqrt(),
                    }
                })
                .collect()
        })
        .collect();

    Ok(DeviationReport {
        runs: tables.len(),
        scopes: scopes.to_vec(),
        attributes: first.attributes.iter().map(|(n, _)| n.clone()).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBin {
    pub degree: usize,
    pub expected: f64,
    /// Mean count over runs.
    pub observed: f64,
    /// Standard error of the mean count.
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub runs: usize,
    pub z_limit: f64,
    pub min_expected: f64,
    /// Bins whose expectation reaches `min_expected`.
    pub bins: Vec<FitBin>,
    /// Sum of squared z-scores over the checked bins.
    pub chi_square: f64,
    pub pass: bool,
}

/// Compare mean out-degree histograms over several runs with the binomial
/// cascade expectation.
///
/// `out_degrees[r][row]` is the number of raw draws landing in `row` in run
/// `r`. The spread of each bin's count is taken as `Σ_rows q(1-q)` with `q`
/// the row's probability of that exact out-degree, divided by the run count.
pub fn rmat_fit_check(
    params: &RmatParams,
    out_degrees: &[Vec<usize>],
    z_limit: f64,
    min_expected: f64,
) -> FitReport {
    let runs = out_degrees.len();
    let mut report = FitReport {
        runs,
        z_limit,
        min_expected,
        bins: Vec::new(),
        chi_square: 0.0,
        pass: true,
    };
    if runs == 0 {
        return report;
    }
    let max_seen = out_degrees.iter().flatten().copied().max().unwrap_or(0);
    let mut observed = vec![0usize; max_seen + 1];
    for run in out_degrees {
        for &d in run {
            observed[d] += 1;
        }
    }
    let limit = (2 * max_seen + 10).min(params.num_edges);
    for k in 0..=limit {
        let classes = outdegree_classes(k, params);
        let expected: f64 = classes.iter().map(|(size, q)| size * q).sum();
        if expected < min_expected {
            continue;
        }
        let variance: f64 = classes.iter().map(|(size, q)| size * q * (1.0 - q)).sum();
        let sigma = (variance / runs as f64).sqrt();
        let mean = observed.get(k).copied().unwrap_or(0) as f64 / runs as f64;
        let z = if sigma > 0.0 {
            (mean - expected) / sigma
        } else {
            0.0
        };
        report.chi_square += z * z;
        report.pass &= z.abs() <= z_limit;
        report.bins.push(FitBin {
            degree: k,
            expected,
            observed: mean,
            sigma,
            z,
        });
    }
    report
}

/// Draw one R-MAT sample per seed and run [`rmat_fit_check`] on them.
pub fn rmat_fit_check_seeds(
    params: &RmatParams,
    seeds: &[u64],
    z_limit: f64,
    min_expected: f64,
    exec: Exec,
) -> Result<FitReport> {
    let samples = exec.map(seeds.len(), |i| {
        let p = RmatParams {
            rng_seed: seeds[i],
            ..*params
        };
        draw_edges(&p).map(|d| out_degrees(&p, &d))
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(rmat_fit_check(params, &samples, z_limit, min_expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::triangle;
    use crate::graph::Graph;
    use crate::profiles::GenerationConfig;
    use crate::propagator::FriendCount;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn user(id: usize, community: usize, values: Vec<usize>) -> UserRecord {
        UserRecord {
            user: id,
            values,
            numfriends: FriendCount::Low,
            classvalue: false,
            auth: 0.0,
            community,
        }
    }

    fn binary_schema() -> AttributeSchema {
        let mut schema = GenerationConfig::default().schema;
        schema.attributes.retain(|a| a.name == "Gender");
        schema
    }

    fn binary_table(counts: [usize; 2]) -> FrequencyTable {
        let mut t = FrequencyTable::empty(&binary_schema(), 10);
        t.all[0] = counts.to_vec();
        t
    }

    #[test]
    fn two_users_same_age() {
        let schema = GenerationConfig::default().schema;
        let users = vec![user(0, 0, vec![0; 11]), user(1, 3, vec![0; 11])];
        let t = frequency_table(&users, &schema);
        assert_eq!(t.frequency(Scope::All, "Age", "18-25"), Some(2));
        assert_eq!(t.frequency(Scope::All, "Age", "26-35"), Some(0));
        assert_eq!(t.frequency(Scope::Community(3), "Age", "18-25"), Some(1));
        let rows = t.rows();
        let total_values: usize = schema.attributes.iter().map(|a| a.values.len()).sum();
        assert_eq!(rows.len(), 11 * total_values);
        assert_eq!(rows[0].scope, Scope::All);
        assert!(rows.iter().any(|r| r.value == "Sikh" && r.frequency == 0));
    }

    #[test]
    fn identical_runs_have_zero_deviation() {
        let t = binary_table([30, 70]);
        let r = deviation_report(&[t.clone(), t.clone(), t], &[Scope::All]).unwrap();
        assert_eq!(
            r.cell(Scope::All, "Gender"),
            Some(DeviationCell {
                avg: 0.0,
                stdev: 0.0
            })
        );
    }

    #[test]
    fn mirrored_binary_runs() {
        let r = deviation_report(
            &[binary_table([60, 40]), binary_table([40, 60])],
            &[Scope::All],
        )
        .unwrap();
        let c = r.cell(Scope::All, "Gender").unwrap();
        assert_abs_diff_eq!(c.avg, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.stdev, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uneven_runs_by_hand() {
        // shares 50/50, 70/30, 60/40 -> mean 60/40; deviations 10,10,10,10,0,0
        let r = deviation_report(
            &[
                binary_table([5, 5]),
                binary_table([7, 3]),
                binary_table([6, 4]),
            ],
            &[Scope::All],
        )
        .unwrap();
        let c = r.cell(Scope::All, "Gender").unwrap();
        let avg = 40.0 / 6.0;
        let var = (4.0 * (10.0f64 - avg).powi(2) + 2.0 * avg.powi(2)) / 6.0;
        assert_abs_diff_eq!(c.avg, avg, epsilon = 1e-9);
        assert_abs_diff_eq!(c.stdev, var.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn deviation_needs_two_runs() {
        assert!(matches!(
            deviation_report(&[binary_table([1, 1])], &[Scope::All]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn deviation_rejects_schema_mismatch() {
        let other = FrequencyTable::empty(&GenerationConfig::default().schema, 10);
        assert!(matches!(
            deviation_report(&[binary_table([1, 1]), other], &[Scope::All]),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn deviation_tsv_layout() {
        let r = deviation_report(
            &[binary_table([60, 40]), binary_table([40, 60])],
            &[Scope::All, Scope::Community(1)],
        )
        .unwrap();
        let tsv = r.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "\tAll - deviation\t\tCommunity 1 - deviation\t");
        assert_eq!(lines[1], "\tAvg.\tStdev.\tAvg.\tStdev.");
        assert_eq!(lines[2], "Gender\t10.0\t0.0\t0.0\t0.0");
        let back: DeviationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn summary_counts() {
        let g = Graph::from_edges(
            30,
            (0..10).flat_map(|t| {
                [
                    (3 * t, 3 * t + 1),
                    (3 * t + 1, 3 * t + 2),
                    (3 * t, 3 * t + 2),
                ]
            }),
        )
        .unwrap();
        let labels =
            CommunityLabeling::from_assignment(&g, (0..30).map(|v| v / 3).collect()).unwrap();
        let rows = community_summary(&labels);
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0], (9, 3));
        assert!(rows.iter().all(|&(_, n)| n == 3));

        let t = triangle();
        let rows =
            community_summary(&CommunityLabeling::from_assignment(&t, vec![0, 0, 0]).unwrap());
        assert_eq!(rows[0], (9, 0));
        assert_eq!(rows.iter().map(|r| r.1).sum::<usize>(), 3);
    }

    #[test]
    fn fit_trivial_cases() {
        let single = RmatParams::new(1, 50, 0);
        let r = rmat_fit_check_seeds(&single, &[0, 1], 3.0, 5.0, Exec::Sequential).unwrap();
        assert!(r.pass && r.bins.is_empty());
        let r = rmat_fit_check(&RmatParams::new(8, 10, 0), &[], 3.0, 5.0);
        assert!(r.pass && r.bins.is_empty());
    }

    #[test]
    fn fit_detects_wrong_params() {
        let truth = RmatParams::new(1024, 10_000, 0);
        let skewed = truth.with_quadrants(0.7, 0.1, 0.1, 0.1);
        let seeds: Vec<u64> = (0..20).collect();
        let samples: Vec<Vec<usize>> = seeds
            .iter()
            .map(|&s| {
                let p = RmatParams {
                    rng_seed: s,
                    ..skewed
                };
                out_degrees(&p, &draw_edges(&p).unwrap())
            })
            .collect();
        assert!(!rmat_fit_check(&truth, &samples, 3.0, 5.0).pass);
    }

    #[test]
    fn fit_passes_on_own_params() {
        let params = RmatParams::new(1024, 10_000, 0);
        let seeds: Vec<u64> = (0..20).collect();
        let r = rmat_fit_check_seeds(&params, &seeds, 3.0, 5.0, Exec::Parallel).unwrap();
        assert!(!r.bins.is_empty());
        assert!(
            r.pass,
            "{:?}",
            r.bins
                .iter()
                .filter(|b| b.z.abs() > 3.0)
                .collect::<Vec<_>>()
        );
    }

    proptest! {
        #[test]
        fn community_sums_equal_sizes(communities in proptest::collection::vec(0usize..10, 1..60), seed in 0u64..1000) {
            let schema = GenerationConfig::default().schema;
            let users: Vec<UserRecord> = communities
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let values = schema.attributes.iter().enumerate()
                        .map(|(a, attr)| (i * 7 + a * 3 + seed as usize) % attr.values.len())
                        .collect();
                    user(i, c, values)
                })
                .collect();
            let t = frequency_table(&users, &schema);
            for c in 0..10 {
                let size = communities.iter().filter(|&&x| x == c).count();
                for counts in &t.communities[c] {
                    prop_assert_eq!(counts.iter().sum::<usize>(), size);
                }
            }
            for counts in &t.all {
                prop_assert_eq!(counts.iter().sum::<usize>(), users.len());
            }
        }

        #[test]
        fn deviation_order_invariant(a in proptest::collection::vec(0usize..50, 2), b in proptest::collection::vec(0usize..50, 2), c in proptest::collection::vec(0usize..50, 2)) {
            let ts = [binary_table([a[0], a[1]]), binary_table([b[0], b[1]]), binary_table([c[0], c[1]])];
            let fwd = deviation_report(&ts, &[Scope::All]).unwrap().cell(Scope::All, "Gender").unwrap();
            let rev_ts = [ts[2].clone(), ts[0].clone(), ts[1].clone()];
            let rev = deviation_report(&rev_ts, &[Scope::All]).unwrap().cell(Scope::All, "Gender").unwrap();
            prop_assert!((fwd.avg - rev.avg).abs() < 1e-9);
            prop_assert!((fwd.stdev - rev.stdev).abs() < 1e-9);
            prop_assert!(fwd.avg >= 0.0 && fwd.stdev >= 0.0);
        }
    }
}
