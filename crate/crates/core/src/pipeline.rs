//! End-to-end runs: load inputs, generate, write the result files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Graph;
use crate::louvain::CommunityLabeling;
use crate::output::{
    format_edges, format_frequencies, format_summary, format_users, write_file, OutputPaths,
    RunManifest,
};
use crate::profiles::GenerationConfig;
use crate::propagator::{generate, Generated};
use crate::stats::{community_summary, deviation_report, frequency_table, DeviationReport, Scope};

/// File name without directory or extension, used to name result files.
pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".to_string())
}

/// Load the graph and community file named in the config.
pub fn load_inputs(config: &GenerationConfig) -> Result<(Graph, CommunityLabeling)> {
    let g = Graph::load_edge_list(&config.paths.graph).map_err(|e| e.in_stage("graph"))?;
    let labeling = CommunityLabeling::load(&config.paths.communities, &g)
        .map_err(|e| e.in_stage("communities"))?;
    Ok((g, labeling))
}

/// Write the four result files.
pub fn write_outputs(
    paths: &OutputPaths,
    config: &GenerationConfig,
    labeling: &CommunityLabeling,
    generated: &Generated,
) -> Result<()> {
    let table = frequency_table(&generated.users, &config.schema);
    write_file(
        &paths.users,
        &format_users(&generated.users, &config.schema),
    )?;
    write_file(&paths.edges, &format_edges(&generated.edges))?;
    write_file(&paths.frequencies, &format_frequencies(&table))?;
    write_file(
        &paths.summary,
        &format_summary(&community_summary(labeling)),
    )?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Run {
    pub generated: Generated,
    pub manifest: RunManifest,
}

/// Generate from the config's inputs and write results plus manifest into
/// the config's output directory.
pub fn run_generation(config: &GenerationConfig, exec: Exec) -> Result<Run> {
    let (g, labeling) = load_inputs(config)?;
    let generated = generate(&g, &labeling, config, exec)?;
    let paths = OutputPaths::new(&config.paths.output_dir, &file_stem(&config.paths.graph));
    write_outputs(&paths, config, &labeling, &generated)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_seed: config.rng_seed,
        graph: config.paths.graph.clone(),
        communities: config.paths.communities.clone(),
        outputs: paths,
        report: generated.report.clone(),
        config: config.clone(),
    };
    write_file(&manifest.outputs.manifest, &manifest.to_json())?;
    Ok(Run {
        generated,
        manifest,
    })
}

/// Repeat generation `runs` times over one graph and labeling, seeds
/// `rng_seed, rng_seed + 1, ...`, and measure the spread of value shares.
pub fn deviation_runs(
    g: &Graph,
    labeling: &CommunityLabeling,
    config: &GenerationConfig,
    runs: usize,
    scopes: &[Scope],
    exec: Exec,
) -> Result<DeviationReport> {
    if runs < 2 {
        return Err(Error::Config(format!(
            "deviation needs at least 2 runs, got {runs}"
        )));
    }
    let tables = exec.map(runs, |r| {
        let config = GenerationConfig {
            rng_seed: config.rng_seed.wrapping_add(r as u64),
            ..config.clone()
        };
        generate(g, labeling, &config, Exec::Sequential)
            .map(|out| frequency_table(&out.users, &config.schema))
    });
    let tables = tables.into_iter().collect::<Result<Vec<_>>>()?;
    deviation_report(&tables, scopes)
}
