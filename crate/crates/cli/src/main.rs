//! `ptwalk` command-line front end.

mod args;
mod commands;
mod error;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ptwalk::evolution::{CoinState, Formalism};

use args::{parse_angle, parse_interval, parse_state, Sweep};
use commands::Setup;
use error::CliError;
use table::{Format, Table};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const MIN_GRID: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "ptwalk", version, about = "PT-symmetric quantum walk diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// γ_PT over a (θ1, θ2) lattice
    EpGrid(EpGridArgs),
    /// Trace of the unrescaled coin state
    Trace(WalkArgs),
    /// Trace distance between the evolved --state and --state2
    Tracedist(WalkArgs),
    /// BLP measure N(t) for --state and --state2
    Blp(WalkArgs),
    /// N(T) across a γ sweep
    BlpScan(WalkArgs),
    /// RHP measure from intermediate-map Choi matrices
    Rhp(RhpArgs),
    /// Coin-position entanglement entropy
    Entanglement(WalkArgs),
    /// Purity of the coin state, or of the joint state with --sites
    Purity(PurityArgs),
    /// Regime labels and exceptional-point collisions on the grid
    Validate(WalkArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct WalkArgs {
    /// First coin angle, e.g. `pi/4` or 0.785
    #[arg(long, default_value = "pi/4", value_parser = parse_angle, allow_hyphen_values = true)]
    theta1: f64,
    /// Second coin angle
    #[arg(long, default_value = "-pi/7", value_parser = parse_angle, allow_hyphen_values = true)]
    theta2: f64,
    /// Gain-loss strength γ
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true,
          conflicts_with_all = ["gamma_range", "exp_gamma", "exp_gamma_range"])]
    gamma: Option<f64>,
    /// γ sweep `start:stop:step`
    #[arg(long, conflicts_with_all = ["exp_gamma", "exp_gamma_range"])]
    gamma_range: Option<Sweep>,
    /// Gain-loss given as e^γ
    #[arg(long, value_parser = parse_angle, conflicts_with = "exp_gamma_range")]
    exp_gamma: Option<f64>,
    /// e^γ sweep `start:stop:step`
    #[arg(long)]
    exp_gamma_range: Option<Sweep>,
    /// Number of walk steps T
    #[arg(long, visible_alias = "T", default_value_t = 50)]
    steps: u32,
    /// Number of momentum points
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Use k_j = −π + 2πj/N instead of the half-step shifted grid
    #[arg(long)]
    no_shift: bool,
    #[arg(long, default_value = "metric", value_parser = parse_formalism)]
    formalism: Formalism,
    /// Initial coin state: up, down, plus, minus or four row-major entries
    #[arg(long, default_value = "up", value_parser = parse_state, allow_hyphen_values = true)]
    state: CoinState,
    /// Second initial state for distance-based measures
    #[arg(long, default_value = "plus", value_parser = parse_state, allow_hyphen_values = true)]
    state2: CoinState,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RhpArgs {
    #[command(flatten)]
    walk: WalkArgs,
    /// Relative singular-value cutoff of the pseudo-inverse fallback
    #[arg(long, default_value_t = ptwalk::measures::DEFAULT_RTOL)]
    rtol: f64,
}

#[derive(Args, Debug)]
struct PurityArgs {
    #[command(flatten)]
    walk: WalkArgs,
    /// Evolve the joint state on a periodic lattice with this many sites
    #[arg(long)]
    sites: Option<usize>,
}

#[derive(Args, Debug)]
struct EpGridArgs {
    #[arg(long, default_value = "0.01:pi-0.01", value_parser = parse_interval, allow_hyphen_values = true)]
    theta1_range: (f64, f64),
    #[arg(long, default_value = "-pi+0.01:-0.01", value_parser = parse_interval, allow_hyphen_values = true)]
    theta2_range: (f64, f64),
    /// Samples per axis, endpoints included
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_formalism(s: &str) -> Result<Formalism, String> {
    s.parse()
}

impl WalkArgs {
    fn resolve(&self, min_steps: u32) -> Result<Setup, CliError> {
        if self.grid < MIN_GRID {
            return Err(CliError::Config(format!("--grid must be at least {MIN_GRID}")));
        }
        if self.steps < min_steps {
            return Err(CliError::Config(format!("--steps must be at least {min_steps}")));
        }
        let gammas = if let Some(s) = self.gamma_range {
            s.points()
        } else if let Some(s) = self.exp_gamma_range {
            s.points().iter().map(|e| e.ln()).collect()
        } else if let Some(e) = self.exp_gamma {
            vec![e.ln()]
        } else {
            vec![self.gamma.unwrap_or(0.0)]
        };
        if let Some(bad) = gammas.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(CliError::Config(format!("gamma must be finite and non-negative, got {bad}")));
        }
        Ok(Setup {
            theta1: self.theta1,
            theta2: self.theta2,
            gammas,
            steps: self.steps,
            grid: self.grid,
            shifted: !self.no_shift,
            formalism: self.formalism,
            state: self.state,
            state2: self.state2,
        })
    }
}

fn meta(command: &str, config: Value) -> Value {
    json!({ "command": command, "version": VERSION, "config": config })
}

fn emit(table: &Table, output: &OutputArgs, meta: &Value) -> Result<(), CliError> {
    match &output.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, output.format, meta)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w, output.format, meta)?;
        }
    }
    Ok(())
}

fn walk_config(setup: &Setup, extra: Value) -> Value {
    let mut v = serde_json::to_value(setup).expect("setup serializes");
    if let (Some(m), Some(e)) = (v.as_object_mut(), extra.as_object()) {
        m.extend(e.clone());
    }
    v
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::EpGrid(a) => {
            if a.resolution == 0 {
                return Err(CliError::Config("--resolution must be positive".into()));
            }
            let table = commands::ep_grid(a.theta1_range, a.theta2_range, a.resolution);
            let config = json!({
                "theta1_range": [a.theta1_range.0, a.theta1_range.1],
                "theta2_range": [a.theta2_range.0, a.theta2_range.1],
                "resolution": a.resolution,
            });
            emit(&table, &a.output, &meta("ep-grid", config))
        }
        Command::Trace(a) => simple("trace", a, commands::trace),
        Command::Tracedist(a) => simple("tracedist", a, commands::tracedist),
        Command::Blp(a) => simple("blp", a, commands::blp),
        Command::BlpScan(a) => simple("blp-scan", a, commands::blp_scan),
        Command::Entanglement(a) => simple("entanglement", a, commands::entanglement),
        Command::Rhp(a) => {
            if a.rtol.is_nan() || a.rtol <= 0.0 {
                return Err(CliError::Config("--rtol must be positive".into()));
            }
            let setup = a.walk.resolve(1)?;
            let table = commands::rhp(&setup, a.rtol)?;
            let config = walk_config(&setup, json!({ "rtol": a.rtol }));
            emit(&table, &a.walk.output, &meta("rhp", config))
        }
        Command::Purity(a) => {
            if a.sites == Some(0) {
                return Err(CliError::Config("--sites must be positive".into()));
            }
            let setup = a.walk.resolve(0)?;
            let table = commands::purity(&setup, a.sites)?;
            let config = walk_config(&setup, json!({ "sites": a.sites }));
            emit(&table, &a.walk.output, &meta("purity", config))
        }
        Command::Validate(a) => {
            let setup = a.resolve(0)?;
            let (table, warnings) = commands::validate(&setup)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let config = walk_config(&setup, json!({ "collision_tol": commands::COLLISION_TOL }));
            emit(&table, &a.output, &meta("validate", config))
        }
    }
}

fn simple(name: &str, a: &WalkArgs, f: fn(&Setup) -> Result<Table, CliError>) -> Result<(), CliError> {
    let setup = a.resolve(0)?;
    let table = f(&setup)?;
    emit(&table, &a.output, &meta(name, walk_config(&setup, json!({}))))
}

fn init_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PTWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("PTWALK_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_pool().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptwalk: {e}");
            e.exit_code()
        }
    }
}
