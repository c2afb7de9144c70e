use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use magbench::eval::{emit_table, evaluate, overall_performance, PolicySpec, TableFormat};
use magbench::render::ViewKind;
use magbench::tasks::{variant_applicable, TaskId, VariantKind};
use magbench::wire::Server;

#[derive(Parser)]
#[command(name = "magbench", version, about = "Robust imitation-learning benchmark tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a policy and print a score table.
    Eval(EvalArgs),
    /// Serve environments over the wire protocol.
    Serve(ServeArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Task name, abbreviation, or `all`.
    #[arg(long, default_value = "all")]
    task: String,
    /// Variant name or `all` (every applicable variant).
    #[arg(long, default_value = "all")]
    variant: String,
    /// noop, random[:seed], mtr-expert, or remote:HOST:PORT.
    #[arg(long)]
    policy: String,
    /// Rollouts per eval seed.
    #[arg(long, default_value_t = 100)]
    rollouts: usize,
    /// Number of eval seeds; seeds 0..S are used.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value = "ego")]
    view: String,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    bind: String,
    /// Where recorded trajectories go. MAGBENCH_DATA takes precedence.
    #[arg(long, default_value = "magbench-data")]
    data: PathBuf,
}

/// Problems with the request itself; these exit with status 2.
struct ConfigError(String);

struct EvalPlan {
    policy: PolicySpec,
    cells: Vec<(TaskId, VariantKind)>,
    seeds: Vec<u64>,
    rollouts: usize,
    view: ViewKind,
    format: TableFormat,
}

fn plan_eval(args: &EvalArgs) -> Result<EvalPlan, ConfigError> {
    let cfg = |e: magbench::Error| ConfigError(e.to_string());
    let policy: PolicySpec = args.policy.parse().map_err(cfg)?;
    let view: ViewKind = args.view.parse().map_err(cfg)?;
    let format: TableFormat = args.format.parse().map_err(cfg)?;
    if args.rollouts == 0 || args.seeds == 0 {
        return Err(ConfigError("--rollouts and --seeds must be at least 1".into()));
    }

    let tasks = if args.task.eq_ignore_ascii_case("all") {
        TaskId::ALL.to_vec()
    } else {
        vec![args.task.parse().map_err(cfg)?]
    };
    let variant = if args.variant.eq_ignore_ascii_case("all") {
        None
    } else {
        Some(args.variant.parse::<VariantKind>().map_err(cfg)?)
    };
    if policy == PolicySpec::MtrExpert && tasks.iter().any(|t| *t != TaskId::MoveToRegion) {
        return Err(ConfigError("mtr-expert only plays MoveToRegion; pass --task MoveToRegion".into()));
    }

    let mut cells = Vec::new();
    for &t in &tasks {
        match variant {
            Some(v) if variant_applicable(t, v) => cells.push((t, v)),
            // A single explicit pair that does not exist is a request error; with
            // --task all we just skip the tasks that lack the variant.
            Some(v) if tasks.len() == 1 => return Err(cfg(magbench::Error::UnsupportedVariant { task: t, variant: v })),
            Some(_) => {}
            None => cells.extend(VariantKind::ALL.into_iter().filter(|v| variant_applicable(t, *v)).map(|v| (t, v))),
        }
    }
    if cells.is_empty() {
        return Err(ConfigError("no applicable (task, variant) cells selected".into()));
    }
    Ok(EvalPlan {
        policy,
        cells,
        seeds: (0..args.seeds).collect(),
        rollouts: args.rollouts,
        view,
        format,
    })
}

fn run_eval(args: EvalArgs) -> ExitCode {
    let plan = match plan_eval(&args) {
        Ok(p) => p,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let mut stats = Vec::with_capacity(plan.cells.len());
    for &(task, variant) in &plan.cells {
        match evaluate(&plan.policy, task, variant, &plan.seeds, plan.rollouts, plan.view) {
            Ok(s) => {
                eprintln!("{task} {variant}: {}", s.cell());
                stats.push(s);
            }
            Err(e) => {
                eprintln!("error: {task} {variant}: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    let table = match overall_performance(&stats) {
        Ok(op) => emit_table(&op, plan.format),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, table) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{table}"),
    }
    ExitCode::SUCCESS
}

fn run_serve(args: ServeArgs) -> ExitCode {
    // Read by hand: the variable must win over an explicit --data too.
    let data = match std::env::var_os("MAGBENCH_DATA") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => args.data,
    };
    let server = match Server::bind(args.bind.as_str(), &data) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match server.local_addr() {
        Ok(addr) => eprintln!("listening on {addr}, recordings in {}", data.display()),
        Err(e) => eprintln!("warning: {e}"),
    }
    match server.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Eval(args) => run_eval(args),
        Command::Serve(args) => run_serve(args),
    }
}
