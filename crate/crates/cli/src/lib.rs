//! Command-line front end: graph selection, subcommand dispatch and
//! CSV/JSON output.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgewalk::oracles::{build_diamond, build_line, random_grover_graph};
use edgewalk::{parse_graph, Complex64, Direction, TailedGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Parser)]
#[command(name = "edgewalk", version, about = "Quantum walks on the edges of tailed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Graph description file.
    #[arg(long, global = true, conflicts_with = "builtin")]
    graph: Option<PathBuf>,
    /// Built-in graph: `diamond:<phi>`, `line:<t>,<r>[,<len>]` or
    /// `random[:<max_vertices>]` (drawn from --seed).
    #[arg(long, global = true)]
    builtin: Option<String>,
    /// Overrides the shifter phase of `--builtin diamond`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for randomly generated graphs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Left,
    Right,
}

impl From<Side> for Direction {
    fn from(s: Side) -> Direction {
        match s {
            Side::Left => Direction::Left,
            Side::Right => Direction::Right,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a basis state; print the edge distribution or, with --monitor,
    /// the first-arrival record.
    Simulate {
        #[arg(long, default_value_t = 0)]
        steps: usize,
        /// Monitored edge `A,B` (both orientations); repeatable.
        #[arg(long)]
        monitor: Vec<String>,
        /// Initial edge `A,B`; defaults to the injection edge.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, value_enum, default_value_t = Side::Left)]
        direction: Side,
    },
    /// Transmission and reflection amplitudes on the unit circle.
    Scatter {
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Side::Left)]
        direction: Side,
    },
    /// First-arrival probabilities, P_out and the conditional hitting time.
    HittingTime {
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        nmax: u64,
        #[arg(long, value_enum, default_value_t = Side::Left)]
        direction: Side,
    },
    /// Unit-modulus eigenpairs of the interior operator.
    BoundStates,
    /// Time-reversal invariance report and t_left/t_right table.
    TriCheck,
    /// Closed-form oracle comparisons on the diamond graph.
    SelfTest,
}

/// Error that ends a run; the exit code depends on the kind.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub(crate) fn compute(e: impl fmt::Display) -> Self {
        CliError::Compute(e.to_string())
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli) {
        Ok((text, passed)) => match emit(&cli.common, &text, out) {
            Ok(()) => i32::from(!passed),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(common: &Common, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Compute(format!("cannot write output: {e}"))),
    }
}

/// Output text and whether every check passed (only `self-test` can fail
/// without an error).
fn execute(cli: &Cli) -> Result<(String, bool), CliError> {
    let c = &cli.common;
    if let Command::SelfTest = cli.command {
        return Ok(commands::self_test(c.format));
    }
    let graph = load_graph(c)?;
    let text = match &cli.command {
        Command::Simulate {
            steps,
            monitor,
            start,
            direction,
        } => commands::simulate(&graph, *steps, monitor, start.as_deref(), (*direction).into(), c.format)?,
        Command::Scatter { samples, direction } => {
            commands::scatter(&graph, *samples as usize, (*direction).into(), c.format)?
        }
        Command::HittingTime { nmax, direction } => {
            commands::hitting_time(&graph, *nmax as usize, (*direction).into(), c.format)?
        }
        Command::BoundStates => commands::bound_states(&graph, c.format)?,
        Command::TriCheck => commands::tri_check(&graph, c.format)?,
        Command::SelfTest => unreachable!("handled above"),
    };
    Ok((text, true))
}

fn load_graph(c: &Common) -> Result<TailedGraph, CliError> {
    match (&c.graph, &c.builtin) {
        (Some(path), None) => {
            if c.phi.is_some() {
                return Err(CliError::Usage("--phi applies only to --builtin diamond".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Compute(format!("cannot read {}: {e}", path.display())))?;
            parse_graph(&text).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))
        }
        (None, Some(spec)) => builtin(spec, c.phi, c.seed),
        _ => Err(CliError::Usage(
            "exactly one of --graph or --builtin is required".into(),
        )),
    }
}

fn builtin(spec: &str, phi: Option<f64>, seed: u64) -> Result<TailedGraph, CliError> {
    let usage = |m: &str| CliError::Usage(format!("--builtin {spec}: {m}"));
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    if phi.is_some() && name != "diamond" {
        return Err(CliError::Usage("--phi applies only to --builtin diamond".into()));
    }
    match name {
        "diamond" => {
            let parsed = if args.is_empty() {
                0.0
            } else {
                args.parse::<f64>().map_err(|_| usage("phase must be a number"))?
            };
            Ok(build_diamond(phi.unwrap_or(parsed)))
        }
        "line" => {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(usage("expected line:<t>,<r>[,<len>]"));
            }
            let amp = |s: &str| {
                s.parse::<Complex64>()
                    .map_err(|_| usage("amplitudes are complex numbers like 0.6 or 0+0.8i"))
            };
            let (t, r) = (amp(parts[0])?, amp(parts[1])?);
            let length = match parts.get(2) {
                Some(s) => s
                    .parse::<usize>()
                    .map_err(|_| usage("length must be a positive integer"))?,
                None => 1,
            };
            build_line(t, r, length).map_err(CliError::compute)
        }
        "random" => {
            let max_vertices = if args.is_empty() {
                8
            } else {
                args.parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 2)
                    .ok_or_else(|| usage("max_vertices must be an integer >= 2"))?
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_grover_graph(&mut rng, max_vertices))
        }
        _ => Err(usage("unknown graph; use diamond, line or random")),
    }
}
