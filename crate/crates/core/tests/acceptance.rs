//! Acceptance criteria, one PASS/FAIL line each.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use synthnet::graph::{hits, Graph, HitsConfig};
use synthnet::louvain::{detect_communities, CommunityLabeling, LouvainConfig};
use synthnet::output::{
    parse_edges, parse_frequencies, parse_summary, parse_users, users_header, RunManifest,
    OUT1_HEADER, OUTG_HEADER,
};
use synthnet::pipeline::{deviation_runs, run_generation};
use synthnet::profiles::{GenerationConfig, SeederSettings};
use synthnet::propagator::{propagate_to_neighbors, stage_rng, AttributeSampler};
use synthnet::rmat::{self, RmatParams};
use synthnet::seeder::{assign_seeds, SeedSet};
use synthnet::stats::{frequency_table, rmat_fit_check_seeds, Scope};
use synthnet::Exec;

const KARATE: &str = include_str!("data/karate.tsv");
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Reference per-attribute Avg deviations at 1k×10k: (attribute, ALL, community 1, community 4).
const REFERENCE_1K: [(&str, f64, f64, f64); 11] = [
    ("Age", 1.8, 6.4, 5.3),
    ("Gender", 6.7, 18.4, 9.2),
    ("Residence", 1.5, 4.4, 5.1),
    ("Religion", 1.8, 2.7, 2.3),
    ("Marital", 3.9, 5.6, 9.2),
    ("Profession", 0.8, 6.7, 2.0),
    ("Political", 1.5, 4.9, 3.5),
    ("Sexuality", 1.7, 4.6, 6.6),
    ("Like1", 2.8, 9.2, 10.2),
    ("Like2", 2.1, 9.7, 9.2),
    ("Like3", 3.3, 6.6, 7.1),
];

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn labeled_rmat(nodes: usize, edges: usize, seed: u64) -> (Graph, CommunityLabeling) {
    let g = rmat::generate(&RmatParams::new(nodes, edges, seed))
        .unwrap()
        .graph;
    let labeling = detect_communities(
        &g,
        &LouvainConfig {
            rng_seed: seed,
            ..Default::default()
        },
    );
    (g, labeling)
}

fn seeds_for(g: &Graph, labeling: &CommunityLabeling, seed: u64) -> SeedSet {
    let h = hits(g, HitsConfig::default(), Exec::Parallel);
    let cc = g.clustering_coefficients(Exec::Parallel);
    assign_seeds(
        g,
        labeling,
        &h.authority,
        &cc,
        11.0,
        &SeederSettings::default(),
        &mut stage_rng(seed, 1),
    )
    .unwrap()
}

/// Same-community seed pairs closer than three hops, by plain BFS.
fn close_seed_pairs(g: &Graph, set: &SeedSet) -> usize {
    let mut bad = 0;
    for seeds in &set.per_community {
        for &a in seeds {
            let mut dist = vec![usize::MAX; g.num_nodes()];
            let mut queue = std::collections::VecDeque::from([a]);
            dist[a] = 0;
            while let Some(u) = queue.pop_front() {
                if dist[u] >= 2 {
                    continue;
                }
                for &w in g.neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            bad += seeds.iter().filter(|&&b| b > a && dist[b] <= 2).count();
        }
    }
    bad
}

fn karate_communities() -> Outcome {
    let g = Graph::parse_edge_list(KARATE).unwrap();
    let started = Instant::now();
    let labeling = detect_communities(&g, &LouvainConfig::default());
    let elapsed = started.elapsed();
    outcome(
        labeling.unconstrained_communities == 4 && elapsed.as_secs_f64() < 1.0,
        format!(
            "{} communities at resolution 1 in {elapsed:.2?}",
            labeling.unconstrained_communities
        ),
    )
}

fn rmat_modularity() -> Outcome {
    let mut ok = 0;
    let mut qs = Vec::new();
    for seed in SEEDS {
        let (_, l) = labeled_rmat(1000, 10_000, seed);
        let q = l.modularity;
        if (0.3..=0.7).contains(&q) && l.num_communities == 10 {
            ok += 1;
        }
        qs.push(format!("{q:.3}/{}", l.num_communities));
    }
    outcome(
        ok >= 4,
        format!(
            "{ok}/5 seeds in [0.3, 0.7] with 10 labels: {}",
            qs.join(" ")
        ),
    )
}

fn seed_constraint_and_coverage() -> Outcome {
    let mut violations = 0;
    let mut in_band = 0;
    let mut slowest = 0.0f64;
    let mut coverages = Vec::new();
    for seed in SEEDS {
        let (g, l) = labeled_rmat(1000, 10_000, seed);
        let started = Instant::now();
        let set = seeds_for(&g, &l, seed);
        slowest = slowest.max(started.elapsed().as_secs_f64());
        violations += close_seed_pairs(&g, &set);
        if (0.2..=0.5).contains(&set.coverage) {
            in_band += 1;
        }
        coverages.push(format!("{:.3}", set.coverage));
    }
    outcome(
        violations == 0 && in_band >= 4 && slowest < 60.0,
        format!(
            "close pairs {violations}, coverage in [0.2, 0.5] for {in_band}/5 ({}), slowest {slowest:.2}s",
            coverages.join(" ")
        ),
    )
}

fn deviation_1k() -> Outcome {
    let (g, l) = labeled_rmat(1000, 10_000, 0);
    let scopes = [Scope::All, Scope::Community(1), Scope::Community(4)];
    let report = deviation_runs(
        &g,
        &l,
        &GenerationConfig::default(),
        3,
        &scopes,
        Exec::Parallel,
    )
    .unwrap();
    let mut over = Vec::new();
    for (name, all, c1, c4) in REFERENCE_1K {
        for (scope, reference) in [
            (Scope::All, all),
            (Scope::Community(1), c1),
            (Scope::Community(4), c4),
        ] {
            let avg = report.cell(scope, name).unwrap().avg;
            if avg > 2.0 * reference {
                over.push(format!("{name}@{scope} {avg:.1} > {:.1}", 2.0 * reference));
            }
        }
    }
    outcome(
        over.is_empty(),
        if over.is_empty() {
            format!(
                "all 33 cells within twice the reference Avg (max ALL {:.2})",
                report.max_avg(Scope::All).unwrap()
            )
        } else {
            over.join(", ")
        },
    )
}

fn max_all_avg(nodes: usize, edges: usize, seed: u64) -> f64 {
    let (g, l) = labeled_rmat(nodes, edges, seed);
    deviation_runs(
        &g,
        &l,
        &GenerationConfig::default(),
        3,
        &[Scope::All],
        Exec::Parallel,
    )
    .unwrap()
    .max_avg(Scope::All)
    .unwrap()
}

fn scale_up() -> Outcome {
    let mut tried = Vec::new();
    for seed in [0, 1] {
        let small = max_all_avg(1000, 10_000, seed);
        let large = max_all_avg(10_000, 100_000, seed);
        tried.push(format!("seed {seed}: 1k {small:.2} vs 10k {large:.2}"));
        if large < small {
            return outcome(true, tried.join("; "));
        }
    }
    outcome(false, tried.join("; "))
}

fn profile_bias() -> Outcome {
    let config = GenerationConfig::default();
    let community = (0..10)
        .find(|&c| config.assignment.profile_for(c) == Some(5))
        .expect("profile 5 assigned");
    let mut ok = 0;
    let mut seen = Vec::new();
    for seed in SEEDS {
        let (g, l) = labeled_rmat(1000, 10_000, seed);
        let out = synthnet::propagator::generate(&g, &l, &config, Exec::Parallel).unwrap();
        let t = frequency_table(&out.users, &config.schema);
        let age = t
            .modal_value(Scope::Community(community), "Age")
            .unwrap()
            .to_string();
        let residence = t
            .modal_value(Scope::Community(community), "Residence")
            .unwrap()
            .to_string();
        if (age == "66-75" || age == "76-85") && residence == "SanJose" {
            ok += 1;
        }
        seen.push(format!("{age}/{residence}"));
    }
    outcome(
        ok >= 4,
        format!("community {community}: {ok}/5 ({})", seen.join(" ")),
    )
}

fn degree_fit() -> Outcome {
    let params = RmatParams::new(1024, 10_000, 0);
    let seeds: Vec<u64> = (0..20).collect();
    let r = rmat_fit_check_seeds(&params, &seeds, 3.0, 5.0, Exec::Parallel).unwrap();
    let worst = r.bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    outcome(
        r.pass && !r.bins.is_empty(),
        format!("{} bins checked, max |z| {worst:.2}", r.bins.len()),
    )
}

fn diversity_limits() -> Outcome {
    let config = GenerationConfig::default();
    let sampler = AttributeSampler::new(&config.schema).unwrap();
    let profile = config.community_profiles().unwrap()[4].clone();
    let leaves = 10_000;
    let star = Graph::from_edges(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap();

    let mut table = vec![None; leaves + 1];
    table[0] = Some(profile.clone());
    propagate_to_neighbors(&star, &mut table, &[0], &sampler, 0.0, &mut stage_rng(0, 2));
    let copies = table
        .iter()
        .filter(|r| r.as_ref() == Some(&profile))
        .count();

    let mut table = vec![None; leaves + 1];
    table[0] = Some(profile.clone());
    propagate_to_neighbors(&star, &mut table, &[0], &sampler, 1.0, &mut stage_rng(0, 2));
    let mut worst = 0.0f64;
    for (a, attr) in config.schema.attributes.iter().enumerate() {
        for (v, value) in attr.values.iter().enumerate() {
            let n = table[1..]
                .iter()
                .filter(|r| r.as_ref().unwrap()[a] == v)
                .count();
            let share = 100.0 * n as f64 / leaves as f64;
            worst = worst.max((share - 100.0 * value.proportion).abs());
        }
    }
    outcome(
        copies == leaves + 1 && worst <= 2.0,
        format!(
            "p=0 identical {copies}/{}, p=1 worst share gap {worst:.2} points",
            leaves + 1
        ),
    )
}

fn write_inputs(dir: &Path) -> GenerationConfig {
    let (g, l) = labeled_rmat(1000, 10_000, 0);
    g.save_edge_list(dir.join("1kby10k.csv")).unwrap();
    l.save(dir.join("1kby10kcommunities.csv")).unwrap();
    let mut config = GenerationConfig::default();
    config.paths.graph = dir.join("1kby10k.csv");
    config.paths.communities = dir.join("1kby10kcommunities.csv");
    config.paths.output_dir = dir.join("out");
    config
}

fn format_fidelity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let run = run_generation(&config, Exec::Parallel).unwrap();
    let o = &run.manifest.outputs;
    let read = |p: &Path| fs::read_to_string(p).unwrap();
    let (users, edges, freqs, summary) = (
        read(&o.users),
        read(&o.edges),
        read(&o.frequencies),
        read(&o.summary),
    );
    let mut problems = Vec::new();

    let header = "user\tage\tgender\tresidence\treligion\tmaritalstatus\tprofession\tpoliticalorientation\tsexualorientation\tnumfriends\tlike1\tlike2\tlike3\tclassvalue\tauth\tcommunity";
    if users.lines().next() != Some(header) || users_header(&config.schema) != header {
        problems.push("users header");
    }
    let ids: Vec<usize> = users
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    if !ids.windows(2).all(|w| w[0] > w[1]) {
        problems.push("users order");
    }
    let parsed = parse_users(&users, &config.schema).unwrap();
    if synthnet::output::format_users(&parsed, &config.schema) != users {
        problems.push("users round trip");
    }

    if edges.lines().next() != Some(OUTG_HEADER) {
        problems.push("links header");
    }
    let links = parse_edges(&edges).unwrap();
    let g = Graph::load_edge_list(&config.paths.graph).unwrap();
    if links.len() != g.num_edges()
        || !links
            .iter()
            .all(|e| e.user > e.userf && g.has_edge(e.user, e.userf))
        || !links.windows(2).all(|w| w[0].user >= w[1].user)
        || synthnet::output::format_edges(&links) != edges
    {
        problems.push("links");
    }

    if freqs.lines().next() != Some(OUT1_HEADER)
        || !freqs.lines().nth(1).unwrap().starts_with("ALL\tAGE\t")
    {
        problems.push("frequency header");
    }
    let table = parse_frequencies(&freqs, &config.schema).unwrap();
    if table != frequency_table(&parsed, &config.schema)
        || synthnet::output::format_frequencies(&table) != freqs
    {
        problems.push("frequency round trip");
    }

    let rows = parse_summary(&summary).unwrap();
    let ids: Vec<usize> = rows.iter().map(|r| r.0).collect();
    if ids != (0..10).rev().collect::<Vec<_>>()
        || rows.iter().map(|r| r.1).sum::<usize>() != g.num_nodes()
    {
        problems.push("summary");
    }
    let manifest = RunManifest::from_json(&read(&o.manifest)).unwrap();
    if manifest != run.manifest {
        problems.push("manifest");
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            "headers, ordering and round trips of all four files and the manifest".to_string()
        } else {
            problems.join(", ")
        },
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = write_inputs(dir.path());
    let first = run_generation(&config, Exec::Parallel).unwrap();
    let snapshot: Vec<Vec<u8>> = {
        let o = &first.manifest.outputs;
        [&o.users, &o.edges, &o.frequencies, &o.summary]
            .iter()
            .map(|p| fs::read(p).unwrap())
            .collect()
    };
    let second = run_generation(&config, Exec::Sequential).unwrap();
    let o = &second.manifest.outputs;
    let again: Vec<Vec<u8>> = [&o.users, &o.edges, &o.frequencies, &o.summary]
        .iter()
        .map(|p| fs::read(p).unwrap())
        .collect();
    let same_files = snapshot == again;
    let same_manifest = first.manifest.without_timings() == second.manifest.without_timings();
    outcome(
        same_files && same_manifest,
        format!(
            "files identical: {same_files}, manifests identical without timings: {same_manifest}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("Karate community count", karate_communities),
        ("RMAT modularity", rmat_modularity),
        ("seed distance and coverage", seed_constraint_and_coverage),
        ("deviation at 1k", deviation_1k),
        ("deviation shrinks with scale", scale_up),
        ("profile bias in community", profile_bias),
        ("out-degree fit", degree_fit),
        ("diversity limits", diversity_limits),
        ("file formats", format_fidelity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1?}]",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            name,
            result.detail,
            started.elapsed()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
