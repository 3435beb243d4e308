use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use proper_lift::pipeline::{distance_csv, emit_plots, list_scenarios, run_scenario, scenario, QuerySpec, StageKind};
use proper_lift::Scenario;

#[derive(Parser)]
#[command(
    name = "proper-lift",
    version,
    about = "Lift isometric embeddings to proper ones and check the result"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled scenario or a scenario file.
    Run(RunArgs),
    /// List the bundled scenarios.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Bundled scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Output directory for CSV series and JSON reports.
    #[arg(long)]
    out: PathBuf,
    /// Midpoint refinement levels applied to the manifold.
    #[arg(long)]
    refine: Option<u32>,
    /// Optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Query point as comma-separated coordinates, or a single height Q.
    /// Repeatable; replaces the scenario's queries.
    #[arg(long = "q", value_name = "COORDS", allow_hyphen_values = true)]
    queries: Vec<String>,
    #[arg(long)]
    r_ball: Option<f64>,
    #[arg(long)]
    tube_margin: Option<f64>,
    #[arg(long)]
    max_passes: Option<usize>,
    /// Also write the distance field to this CSV file.
    #[arg(long, value_name = "FILE")]
    dump_distance: Option<PathBuf>,
}

fn parse_query(s: &str) -> Result<QuerySpec> {
    let coords = s
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {c:?} in --q {s:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match coords.as_slice() {
        [h] => QuerySpec::Height(*h),
        _ => QuerySpec::Point(coords),
    })
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    if let Some(s) = scenario(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("unknown scenario {arg:?}; bundled: {}", list_scenarios().join(", "));
    }
    Scenario::load(path).with_context(|| format!("loading {}", path.display()))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(k) = args.refine {
        s.refine = k;
    }
    if let Some(seed) = args.seed {
        s.embed.optimizer.seed = seed;
    }
    if !args.queries.is_empty() {
        s.queries = args.queries.iter().map(|q| parse_query(q)).collect::<Result<_>>()?;
    }
    if let Some(r) = args.r_ball {
        s.smoothing.r_ball = r;
    }
    if let Some(t) = args.tube_margin {
        s.smoothing.tube_margin = t;
    }
    if let Some(p) = args.max_passes {
        s.smoothing.max_passes = p;
        s.smoothing.min_passes = s.smoothing.min_passes.min(p);
    }
    let out = run_scenario(&s)?;
    let written = emit_plots(&out, &args.out).with_context(|| format!("writing to {}", args.out.display()))?;
    if let Some(path) = &args.dump_distance {
        let a = &out.artifacts;
        if let (Some(m), Some(d)) = (&a.manifold, &a.distance) {
            std::fs::write(path, distance_csv(m, d)).with_context(|| format!("writing {}", path.display()))?;
        }
    }

    let r = &out.report;
    println!(
        "scenario {} ({} vertices, mesh scale {:.3e})",
        r.scenario, r.vertex_count, r.mesh_scale
    );
    for st in &r.stages {
        let status = format!("{:?}", st.status).to_lowercase();
        match &st.detail {
            Some(d) => println!("  {:<11} {status}: {d}", st.stage),
            None => println!("  {:<11} {status}", st.stage),
        }
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(match r.first_failure() {
        None if r.passed => ExitCode::SUCCESS,
        None => ExitCode::from(1),
        Some(st) => match st.kind {
            StageKind::Input => ExitCode::from(1),
            StageKind::Certification => ExitCode::from(2),
            StageKind::Verification => ExitCode::from(3),
        },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::List => {
            for name in list_scenarios() {
                let desc = scenario(name).map(|s| s.description).unwrap_or_default();
                println!("{name:<14} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => run(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
