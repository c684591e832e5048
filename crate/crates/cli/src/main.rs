mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opengrape::grape::GradientMode;

use config::{config_error, ConfigError, FileRef, RunConfig, SystemSpec};

#[derive(Parser)]
#[command(name = "opengrape", version, about = "Open-system GRAPE for Bell-encoded qubit pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Print the drift and control terms of Systems I and II.
    Systems,
    /// Spectrum of Γ and the drift blocks in the Γ eigenbasis.
    GammaReport,
    /// Dimension of the dynamic Lie algebra.
    LieDim,
    /// Optimize one pulse sequence.
    Optimize,
    /// Closed-system family of optimal sequences over a grid of final times.
    TopCurve,
    /// Closed and open fidelities of given pulse files.
    Evaluate,
    /// Open-GRAPE against a cross-evaluated closed family.
    Compare,
    /// Compile and score a Trotter-type CNOT.
    Trotter,
    /// Slow and fast weights of the computational-basis states along a pulse.
    ProjectTrajectory,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for restarts (defaults to the available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `system-I` or `system-II`.
    #[arg(long, global = true)]
    system: Option<String>,
    /// Intra-pair coupling, Hz.
    #[arg(long, global = true)]
    j_xx: Option<f64>,
    /// Inter-pair coupling, Hz.
    #[arg(long, global = true)]
    j_inter: Option<f64>,
    /// `none`, `pure-t2`, `full`, or a relaxation JSON file.
    #[arg(long, visible_alias = "gamma", visible_alias = "model", global = true)]
    relaxation: Option<String>,
    /// `cnot`, `identity`, or a target JSON file.
    #[arg(long, global = true)]
    target: Option<String>,
    /// Final time, s.
    #[arg(long = "T", global = true)]
    t: Option<f64>,
    /// Slot length, s.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Comma-separated final times, s.
    #[arg(long, value_delimiter = ',', global = true)]
    t_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    family_size: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Amplitude clip, Hz.
    #[arg(long, global = true)]
    u_max: Option<f64>,
    /// Initial amplitude range, Hz.
    #[arg(long, global = true)]
    u0: Option<f64>,
    #[arg(long, global = true)]
    fidelity_goal: Option<f64>,
    /// `first-order` or `exact`.
    #[arg(long, global = true)]
    gradient: Option<String>,
    /// Pulse file (repeatable).
    #[arg(long = "pulse", global = true)]
    pulses: Vec<PathBuf>,
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Instantaneous pulses in the Trotter program.
    #[arg(long, global = true)]
    ideal: bool,
    #[arg(long, global = true)]
    max_slots: Option<u64>,
    /// Restrict Lie generators to the protected block.
    #[arg(long, global = true)]
    protected: bool,
}

fn file_ref(s: &str) -> FileRef {
    if s.ends_with(".json") {
        FileRef::File { file: s.into() }
    } else {
        FileRef::Named(s.into())
    }
}

fn resolve(c: Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.out {
        cfg.out = v;
    }
    cfg.optimizer.workers = c
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Some(v) = c.system {
        cfg.system = SystemSpec::Named(v);
    }
    if let Some(v) = c.j_xx {
        cfg.j_xx = v;
    }
    if let Some(v) = c.j_inter {
        cfg.j_inter = v;
    }
    if let Some(v) = c.relaxation {
        cfg.relaxation = file_ref(&v);
    }
    if let Some(v) = c.target {
        cfg.target = file_ref(&v);
    }
    if let Some(v) = c.t {
        cfg.t = v;
    }
    if let Some(v) = c.dt {
        cfg.dt = v;
    }
    if let Some(v) = c.t_list {
        cfg.t_list = v;
    }
    if let Some(v) = c.family_size {
        cfg.family_size = v;
    }
    let o = &mut cfg.optimizer;
    if let Some(v) = c.restarts {
        o.restarts = v;
    }
    if let Some(v) = c.seed {
        o.seed = v;
    }
    if let Some(v) = c.iterations {
        o.max_iterations = v;
    }
    if let Some(v) = c.u_max {
        o.u_max = Some(v);
    }
    if let Some(v) = c.u0 {
        o.u0 = v;
    }
    if let Some(v) = c.fidelity_goal {
        o.fidelity_goal = Some(v);
    }
    if let Some(v) = c.gradient {
        o.gradient_mode = match v.as_str() {
            "first-order" => GradientMode::FirstOrder,
            "exact" => GradientMode::Exact,
            _ => return Err(config_error(format!("flag --gradient: unknown mode `{v}`"))),
        };
    }
    if !c.pulses.is_empty() {
        cfg.pulses = c.pulses;
    }
    if let Some(v) = c.plan {
        cfg.plan = Some(v);
    }
    if let Some(v) = c.preset {
        cfg.preset = v;
    }
    cfg.ideal_pulses |= c.ideal;
    if let Some(v) = c.max_slots {
        cfg.max_slots = v;
    }
    cfg.protected |= c.protected;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli.common)?;
    match cli.command {
        Command::Systems => commands::systems(&cfg),
        Command::GammaReport => commands::gamma_report(&cfg),
        Command::LieDim => commands::lie_dim(&cfg),
        Command::Optimize => commands::optimize_cmd(&cfg),
        Command::TopCurve => commands::top_curve_cmd(&cfg),
        Command::Evaluate => commands::evaluate_cmd(&cfg),
        Command::Compare => commands::compare_cmd(&cfg),
        Command::Trotter => commands::trotter_cmd(&cfg),
        Command::ProjectTrajectory => commands::project_trajectory(&cfg),
    }
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(e: &anyhow::Error) -> u8 {
    use opengrape::Error as E;
    for cause in e.chain() {
        if cause.is::<ConfigError>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Numerical(_) | E::NonFinite | E::NotInvariant(_) | E::MaxDimensionExceeded(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
