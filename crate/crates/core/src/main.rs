use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cvidm::commands::{
    cmd_accel, cmd_criterion, cmd_equilibrium, cmd_map, cmd_simulate, cmd_verify, AccelInput,
    CommandError, CommandResult, EXIT_USAGE,
};
use cvidm::config::{RunConfig, CONFIG_ENV};
use cvidm::map::AxisRange;
use cvidm::{Neighbor, VehicleClass};

/// Car-following model for mixed connected and human-driven platoons.
#[derive(Debug, Parser)]
#[command(name = "cvidm", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Override a config value, e.g. `--set idm.max_acceleration=1.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Acceleration of one vehicle, split into IDM and connected terms.
    Accel(AccelArgs),
    /// Equilibrium gap for a list of speeds.
    Equilibrium(EquilibriumArgs),
    /// Linear stability criterion at the configured parameter point.
    Criterion(PointArgs),
    /// Stability map over (time headway, maximum acceleration).
    Map(MapArgs),
    /// Time-domain platoon run.
    Simulate(SimulateArgs),
    /// Compare the criterion with simulated perturbation growth.
    Verify,
}

#[derive(Debug, Args)]
struct AccelArgs {
    /// Net gap to the leader (m).
    #[arg(long, allow_hyphen_values = true)]
    gap: f64,
    /// Own speed (m/s).
    #[arg(long)]
    speed: f64,
    /// Leader speed (m/s); defaults to own speed.
    #[arg(long)]
    leader_speed: Option<f64>,
    /// Vehicle class, `C` (connected) or `H` (human-driven).
    #[arg(long, default_value = "H", value_parser = parse_class)]
    class: VehicleClass,
    /// Connected predecessor as `gap,speed,acceleration`; repeat for more.
    #[arg(long = "neighbor", value_parser = parse_neighbor, allow_hyphen_values = true)]
    neighbors: Vec<Neighbor>,
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    /// Speeds (m/s), comma separated or repeated.
    #[arg(long = "speed", value_delimiter = ',')]
    speeds: Vec<f64>,
    /// Evenly spaced speeds as `min,max,count`.
    #[arg(long, value_parser = parse_range, conflicts_with = "speeds")]
    range: Option<AxisRange>,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Equilibrium speed (m/s).
    #[arg(long)]
    speed: Option<f64>,
    /// Maximum acceleration a_m (m/s²).
    #[arg(long)]
    a_max: Option<f64>,
    /// Safe time headway T_d (s).
    #[arg(long)]
    headway: Option<f64>,
    /// Connected predecessors M, comma separated.
    #[arg(long, value_delimiter = ',')]
    neighbors: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Connected predecessors M, one sweep each, comma separated.
    #[arg(long, value_delimiter = ',')]
    neighbors: Option<Vec<usize>>,
    /// CSV destination for the first sweep; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// SVG destination for the critical curves.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Trajectory CSV destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_class(s: &str) -> Result<VehicleClass, String> {
    match s {
        "C" | "c" => Ok(VehicleClass::Connected),
        "H" | "h" => Ok(VehicleClass::HumanDriven),
        _ => Err(format!("`{s}` is not a vehicle class (C or H)")),
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_neighbor(s: &str) -> Result<Neighbor, String> {
    let v = parse_floats(s, 3)?;
    Ok(Neighbor {
        gap: v[0],
        velocity: v[1],
        acceleration: v[2],
    })
}

fn parse_range(s: &str) -> Result<AxisRange, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected `min,max,count`, got `{s}`"));
    }
    let min = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let max = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let count = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    Ok(AxisRange::new(min, max, count))
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CommandError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CommandError::usage(format!("config {}: {e}", p.display())))?,
        None => String::new(),
    };
    Ok(RunConfig::from_toml_with_overrides(&text, overrides)?)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CommandError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CommandError::usage(format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(cli: Cli) -> CommandResult {
    let mut cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    let stdout = &mut io::stdout().lock();
    match cli.command {
        Command::Accel(a) => {
            let input = AccelInput {
                gap: a.gap,
                speed: a.speed,
                leader_speed: a.leader_speed.unwrap_or(a.speed),
                class: a.class,
                neighbors: a.neighbors,
            };
            cmd_accel(&cfg, &input, stdout)
        }
        Command::Equilibrium(a) => {
            let speeds: Vec<f64> = match a.range {
                Some(r) => {
                    r.validate("range")?;
                    r.values().collect()
                }
                None => a.speeds,
            };
            let mut out = sink(a.output.as_deref())?;
            cmd_equilibrium(&cfg, &speeds, &mut out)
        }
        Command::Criterion(a) => {
            if let Some(v) = a.speed {
                cfg.scenario.equilibrium_speed = v;
            }
            if let Some(x) = a.a_max {
                cfg.idm.max_acceleration = x;
            }
            if let Some(t) = a.headway {
                cfg.idm.safe_time_headway = t;
            }
            if let Some(m) = a.neighbors {
                cfg.map.neighbors = m;
            }
            cmd_criterion(&cfg, stdout)
        }
        Command::Map(a) => {
            if let Some(m) = a.neighbors {
                cfg.map.neighbors = m;
            }
            let mut svg = a.svg.as_deref().map(|p| sink(Some(p))).transpose()?;
            if a.output.is_none() {
                let mut summary = io::stderr().lock();
                cmd_map(&cfg, stdout, svg.as_deref_mut().map(|w| w as &mut dyn Write), &mut summary)
            } else {
                let mut csv = sink(a.output.as_deref())?;
                cmd_map(&cfg, &mut csv, svg.as_deref_mut().map(|w| w as &mut dyn Write), stdout)
            }
        }
        Command::Simulate(a) => {
            if a.output.is_none() {
                let mut summary = io::stderr().lock();
                cmd_simulate(&cfg, stdout, &mut summary)
            } else {
                let mut csv = sink(a.output.as_deref())?;
                cmd_simulate(&cfg, &mut csv, stdout)
            }
        }
        Command::Verify => cmd_verify(&cfg, stdout),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
