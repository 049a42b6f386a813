use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use synthnet::louvain::{detect_communities, CommunityLabeling, LouvainConfig};
use synthnet::pipeline::{deviation_runs, file_stem, load_inputs, run_generation};
use synthnet::profiles::GenerationConfig;
use synthnet::rmat::{self, default_file_stem, RmatParams};
use synthnet::stats::Scope;
use synthnet::{Exec, Graph};

/// Synthetic social-network generator.
#[derive(Parser)]
#[command(name = "synthnet", version, about)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an R-MAT graph and write it as an edge list.
    GenGraph(GenGraph),
    /// Label a graph with exactly ten communities.
    Communities(Communities),
    /// Populate a labeled graph with user attributes.
    GenData(ConfigArg),
    /// Measure value-share spread across repeated generation runs.
    Deviation(Deviation),
    /// Write the default generation config.
    InitConfig {
        #[arg(long, default_value = "synthnet.toml")]
        out: PathBuf,
    },
    /// Check a generation config and report every problem found.
    Validate(ConfigArg),
    /// Graph, communities and data in one go.
    Pipeline(Pipeline),
}

#[derive(Args)]
struct RmatArgs {
    /// Number of nodes.
    #[arg(long, short = 'n')]
    nodes: usize,
    /// Number of edge draws.
    #[arg(long, short = 'e')]
    edges: usize,
    #[arg(long, default_value_t = RmatParams::DEFAULT_A)]
    a: f64,
    #[arg(long, default_value_t = RmatParams::DEFAULT_B)]
    b: f64,
    #[arg(long, default_value_t = RmatParams::DEFAULT_C)]
    c: f64,
    #[arg(long, default_value_t = RmatParams::DEFAULT_D)]
    d: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RmatArgs {
    fn params(&self) -> RmatParams {
        RmatParams::new(self.nodes, self.edges, self.seed)
            .with_quadrants(self.a, self.b, self.c, self.d)
    }
}

#[derive(Args)]
struct GenGraph {
    #[command(flatten)]
    rmat: RmatArgs,
    /// Output file; defaults to `<N>by<E>.csv` inside `--out-dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "resources/Input_files")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct Communities {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// Seconds before the resolution search gives up.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to `<stem>communities.csv` next to the graph.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct Deviation {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Communities reported next to the whole graph.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 4])]
    communities: Vec<usize>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Pipeline {
    #[command(flatten)]
    rmat: RmatArgs,
    /// Directory for the graph, communities, config and results.
    #[arg(long, default_value = "resources")]
    out_dir: PathBuf,
    /// Base config; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn exec(cli: &Cli) -> Exec {
    if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn gen_graph(params: &RmatParams, out: &Path) -> Result<Graph> {
    let sample = rmat::generate(params)?;
    create_parent(out)?;
    sample.graph.save_edge_list(out)?;
    println!(
        "wrote {} ({} nodes, {} of {} edges kept)",
        out.display(),
        sample.graph.num_nodes(),
        sample.realized_edges(),
        sample.requested_edges()
    );
    Ok(sample.graph)
}

fn communities(graph: &Path, timeout: u64, seed: u64, out: &Path) -> Result<CommunityLabeling> {
    let g = Graph::load_edge_list(graph)?;
    let started = Instant::now();
    let labeling = detect_communities(
        &g,
        &LouvainConfig {
            timeout: Duration::from_secs(timeout),
            rng_seed: seed,
            ..Default::default()
        },
    );
    create_parent(out)?;
    labeling.save(out)?;
    println!(
        "{} communities found at resolution 1, {} at the final resolution before folding into 10",
        labeling.unconstrained_communities, labeling.raw_communities
    );
    println!(
        "quality {:.4} at resolution {:.3}, modularity {:.4}, {:.2?}",
        labeling.quality,
        labeling.resolution,
        labeling.modularity,
        started.elapsed()
    );
    if let Some(w) = &labeling.warning {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", out.display());
    Ok(labeling)
}

fn load_valid_config(path: &Path) -> Result<Option<GenerationConfig>> {
    let config = GenerationConfig::load(path)?;
    let violations = config.validate();
    if violations.is_empty() {
        return Ok(Some(config));
    }
    eprintln!("{} is invalid:", path.display());
    for v in violations {
        eprintln!("  {v}");
    }
    Ok(None)
}

fn gen_data(config: &GenerationConfig, exec: Exec) -> Result<()> {
    let run = run_generation(config, exec)?;
    let r = &run.generated.report;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "seeds {} of {} requested, coverage {:.3}",
        r.sigma_achieved, r.sigma_requested, r.coverage
    );
    println!(
        "assigned {} of {} nodes (seeds + neighbours), {} remaining",
        r.assigned, r.num_nodes, r.remaining
    );
    let o = &run.manifest.outputs;
    for p in [&o.users, &o.edges, &o.frequencies, &o.summary, &o.manifest] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn deviation(args: &Deviation, exec: Exec) -> Result<bool> {
    if args.runs < 2 {
        bail!("deviation needs at least 2 runs, got {}", args.runs);
    }
    let Some(config) = load_valid_config(&args.config)? else {
        return Ok(false);
    };
    let (g, labeling) = load_inputs(&config)?;
    let scopes: Vec<Scope> = std::iter::once(Scope::All)
        .chain(args.communities.iter().map(|&c| Scope::Community(c)))
        .collect();
    let report = deviation_runs(&g, &labeling, &config, args.runs, &scopes, exec)?;
    print!("{}", report.to_tsv());
    if let Some(path) = &args.json {
        create_parent(path)?;
        fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(true)
}

fn pipeline(args: &Pipeline, exec: Exec) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => match load_valid_config(path)? {
            Some(c) => c,
            None => return Ok(false),
        },
        None => GenerationConfig::default(),
    };
    let params = args.rmat.params();
    let stem = default_file_stem(params.num_nodes, params.num_edges);
    let inputs = args.out_dir.join("Input_files");
    let graph = inputs.join(format!("{stem}.csv"));
    let comms = inputs.join(format!("{stem}communities.csv"));
    gen_graph(&params, &graph)?;
    communities(&graph, 30, args.rmat.seed.wrapping_add(1), &comms)?;
    config.rng_seed = args.rmat.seed.wrapping_add(2);
    config.paths.graph = graph;
    config.paths.communities = comms;
    config.paths.output_dir = args.out_dir.join("Output_files");
    let config_path = args.out_dir.join(format!("{stem}.toml"));
    config.save(&config_path)?;
    println!("wrote {}", config_path.display());
    gen_data(&config, exec)?;
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool> {
    let exec = exec(cli);
    match &cli.command {
        Command::GenGraph(args) => {
            let params = args.rmat.params();
            let out = args.out.clone().unwrap_or_else(|| {
                args.out_dir.join(format!(
                    "{}.csv",
                    default_file_stem(params.num_nodes, params.num_edges)
                ))
            });
            gen_graph(&params, &out)?;
        }
        Command::Communities(args) => {
            let out = args.out.clone().unwrap_or_else(|| {
                args.graph
                    .with_file_name(format!("{}communities.csv", file_stem(&args.graph)))
            });
            communities(&args.graph, args.timeout, args.seed, &out)?;
        }
        Command::GenData(args) => {
            let Some(config) = load_valid_config(&args.config)? else {
                return Ok(false);
            };
            gen_data(&config, exec)?;
        }
        Command::Deviation(args) => return deviation(args, exec),
        Command::InitConfig { out } => {
            create_parent(out)?;
            GenerationConfig::default().save(out)?;
            println!("wrote {}", out.display());
        }
        Command::Validate(args) => {
            if load_valid_config(&args.config)?.is_none() {
                return Ok(false);
            }
            println!("{} is valid", args.config.display());
        }
        Command::Pipeline(args) => return pipeline(args, exec),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
