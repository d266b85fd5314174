use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sidewalk_core::bundle::{load_bundle, write_bundle};
use sidewalk_core::graph::SegmentKind;
use sidewalk_core::panorama::Resolution;
use sidewalk_core::rollout::{bench, run_rollouts, Policy};
use sidewalk_core::synth::{generate, WorldSpec};
use sidewalk_core::{server, Error, TaskConfig, TaskId, World};

#[derive(Parser)]
#[command(name = "sidewalk", version, about = "Sidewalk navigation simulator tools")]
struct Cli {
    /// World bundle directory. Without one, rollout, bench and serve use a
    /// generated 301-node world.
    #[arg(long, global = true)]
    world: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print JSON instead of the human-readable summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world bundle into --out.
    Generate(GenerateArgs),
    /// Validate a bundle and summarise its contents.
    Inspect,
    /// Run seeded random or oracle episodes.
    Rollout(RolloutArgs),
    /// Measure single-session step throughput.
    Bench(BenchArgs),
    /// Serve the episode protocol on stdio or TCP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON world spec; the flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    rows: Option<u32>,
    #[arg(long)]
    cols: Option<u32>,
    #[arg(long)]
    segment_length: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    addresses: Option<u32>,
    /// Also render 3840x1280 panoramas.
    #[arg(long)]
    full_res: bool,
}

#[derive(Args)]
struct RolloutArgs {
    #[arg(long, default_value = "random")]
    policy: Policy,
    #[arg(long, default_value = "AllObs")]
    task: TaskId,
    #[arg(long, default_value_t = 1000)]
    episodes: u32,
    #[arg(long, default_value_t = 0.0)]
    gps_sigma: f64,
    #[arg(long)]
    horizon: Option<u32>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value = "AllObs")]
    task: TaskId,
}

#[derive(Args)]
struct ServeArgs {
    /// Listen address such as 127.0.0.1:7000; stdio when absent.
    #[arg(long)]
    tcp: Option<String>,
}

enum Failure {
    Usage(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Engine(e)
    }
}

type Outcome = Result<(), Failure>;

fn small_spec(seed: u64) -> WorldSpec {
    WorldSpec {
        seed,
        rows: 1,
        cols: 1,
        segment_length: 75.0,
        addresses_per_side: 8,
        ..WorldSpec::default()
    }
}

fn open_world(cli: &Cli) -> Result<World, Failure> {
    match &cli.world {
        Some(dir) => Ok(load_bundle(dir)?.0),
        None => Ok(generate(&small_spec(cli.seed))?),
    }
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Outcome {
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| Failure::Usage("generate needs --out".into()))?;
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => WorldSpec::default(),
    };
    spec.seed = cli.seed;
    if let Some(v) = args.rows {
        spec.rows = v;
    }
    if let Some(v) = args.cols {
        spec.cols = v;
    }
    if let Some(v) = args.segment_length {
        spec.segment_length = v;
    }
    if let Some(v) = args.spacing {
        spec.node_spacing = v;
    }
    if let Some(v) = args.addresses {
        spec.addresses_per_side = v;
    }
    spec.full_resolution |= args.full_res;
    let world = generate(&spec)?;
    let meta = write_bundle(&world, Some(&spec), out)?;
    if cli.json {
        print_json(&meta);
    } else {
        println!("wrote {} ({} nodes, {} addresses)", out.display(), world.graph().len(), world.goal_index().len());
        println!("content hash {}", meta.content_hash);
    }
    Ok(())
}

fn cmd_inspect(cli: &Cli) -> Outcome {
    let dir = cli
        .world
        .as_ref()
        .ok_or_else(|| Failure::Usage("inspect needs --world".into()))?;
    let (world, meta) = load_bundle(dir)?;
    let g = world.graph();
    let ann = world.annotations();
    let count = |f: fn(&sidewalk_core::annotations::PanoramaLabels) -> usize| ann.panoramas.iter().map(f).sum::<usize>();
    let segments = g.segments().iter().filter(|s| s.kind == SegmentKind::Segment).count();
    let summary = serde_json::json!({
        "nodes": g.len(),
        "edges": g.edges().len(),
        "street_segments": segments,
        "intersections": g.intersection_count(),
        "addresses": world.goal_index().len(),
        "house_number_labels": count(|p| p.house_numbers.len()),
        "street_sign_labels": count(|p| p.street_signs.len()),
        "door_polygons": count(|p| p.doors.len()),
        "vocabulary": world.vocabulary(),
        "horizons": world.horizons(),
        "full_resolution": meta.full_resolution,
        "content_hash": meta.content_hash,
    });
    if let Some(out) = &cli.out {
        write_out(out, "inspect.json", &serde_json::to_string_pretty(&summary).expect("json"))?;
    }
    if cli.json {
        print_json(&summary);
    } else {
        println!("world {} is valid", dir.display());
        println!("  nodes {}, edges {}", g.len(), g.edges().len());
        println!("  street segments {segments}, intersections {}", g.intersection_count());
        println!("  addresses {}, vocabulary {:?}", world.goal_index().len(), world.vocabulary());
        println!(
            "  labels: {} house numbers, {} street signs, {} doors",
            summary["house_number_labels"], summary["street_sign_labels"], summary["door_polygons"]
        );
        let h = world.horizons();
        match h.intersection {
            Some(i) => println!("  horizon {} (intersection task {i})", h.segment),
            None => println!("  horizon {}", h.segment),
        }
        println!("  content hash {}", meta.content_hash);
    }
    Ok(())
}

fn cmd_rollout(cli: &Cli, args: &RolloutArgs) -> Outcome {
    let world = open_world(cli)?;
    let config = TaskConfig {
        task: args.task,
        horizon: args.horizon,
        gps_sigma: args.gps_sigma,
        resolution: Resolution::Low,
    };
    let report = run_rollouts(&world, args.policy, config, args.episodes, cli.seed)?;
    if let Some(out) = &cli.out {
        write_out(out, "rollout.csv", &report.to_csv()?)?;
        write_out(out, "rollout.json", &report.to_json()?)?;
    }
    if cli.json {
        print_json(&report);
    } else {
        println!("{}", report.summary());
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Outcome {
    let world = open_world(cli)?;
    let observed = bench(&world, args.task, args.steps, true, cli.seed)?;
    let bare = bench(&world, args.task, args.steps, false, cli.seed)?;
    let reports = [observed, bare];
    if let Some(out) = &cli.out {
        write_out(out, "bench.json", &serde_json::to_string_pretty(&reports).expect("json"))?;
    }
    if cli.json {
        print_json(&reports);
    } else {
        for r in &reports {
            let mode = if r.observe { "with observations" } else { "without observations" };
            println!("{:>12.0} steps/sec {mode} ({} steps in {:.3} s)", r.steps_per_sec, r.steps, r.seconds);
        }
        if let Some(kib) = reports[1].peak_rss_kib {
            println!("peak memory {:.1} MiB", kib as f64 / 1024.0);
        }
    }
    Ok(())
}

fn cmd_serve(cli: &Cli, args: &ServeArgs) -> Outcome {
    let world = Arc::new(open_world(cli)?);
    let io = |e: std::io::Error| Failure::Usage(e.to_string());
    match &args.tcp {
        Some(addr) => {
            let listener = TcpListener::bind(addr).map_err(io)?;
            eprintln!("listening on {}", listener.local_addr().map_err(io)?);
            server::serve_tcp(world, listener).map_err(io)
        }
        None => server::serve_stdio(world).map_err(io),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(&cli, a),
        Command::Inspect => cmd_inspect(&cli),
        Command::Rollout(a) => cmd_rollout(&cli, a),
        Command::Bench(a) => cmd_bench(&cli, a),
        Command::Serve(a) => cmd_serve(&cli, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
