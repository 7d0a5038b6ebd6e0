use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use orbitfed::app::{self, Command, Format, RunError, RunOptions};
use orbitfed::error::ConfigError;
use orbitfed::fedsim::Strategy;
use orbitfed::scenario::{Scenario, SweepAxis};

/// Satellite-ground federated fine-tuning simulator.
#[derive(Parser)]
#[command(name = "orbitfed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the primary strategy and the comparison list; write round CSVs.
    Simulate(Common),
    /// Run every grid point of the sweep axes.
    Sweep(Common),
    /// Satellite-to-station contact windows and their statistics.
    Windows(Common),
    /// Dump topology snapshots and satellite positions.
    Topology {
        #[command(flatten)]
        common: Common,
        /// Half-open step range `start:stop`.
        #[arg(long, value_name = "START:STOP")]
        steps: Option<String>,
    },
    /// Check topology, ring-schedule and geometry invariants.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Output directory (defaults to the scenario's `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// proposed, strategy1, strategy2, strategy3, tos or centralized.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Sweep axis, repeatable: data_volume, sgl_rate, isl_rate,
    /// sats_per_plane, planes or blocks.
    #[arg(long, num_args = 2, value_names = ["NAME", "START:STOP[:STEPS]"], action = clap::ArgAction::Append)]
    axis: Vec<String>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

fn parse_steps(s: &str) -> Result<(usize, usize), ConfigError> {
    let bad = || ConfigError::invariant("steps", format!("`{s}` is not a range like 0:60"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn execute(command: Command, common: &Common, steps: Option<&str>) -> Result<Vec<String>, RunError> {
    let scenario = Scenario::load(&common.scenario)?;
    let scenario = app::with_overrides(&scenario, common.seed, common.strategy)?;
    let axes = common
        .axis
        .chunks(2)
        .map(|pair| SweepAxis::parse(&pair[0], &pair[1]))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = RunOptions {
        out_dir: common.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.config.output_dir)),
        format: match common.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
        },
        axes,
        steps: steps.map(parse_steps).transpose()?,
    };
    let summary = app::run(&scenario, command, &opts)?;
    Ok(summary.lines)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORBITFED_LOG", "warn")).init();
    let cli = Cli::parse();
    let (command, common, steps) = match &cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c, None),
        Cmd::Sweep(c) => (Command::Sweep, c, None),
        Cmd::Windows(c) => (Command::Windows, c, None),
        Cmd::Topology { common, steps } => (Command::Topology, common, steps.as_deref()),
        Cmd::Validate(c) => (Command::Validate, c, None),
    };
    match execute(command, common, steps) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            eprintln!("orbitfed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
