use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elastogauge::config::{parse_config_with_kind, ExperimentKind};
use elastogauge::runner::run;

#[derive(Parser)]
#[command(
    name = "elastogauge",
    version,
    about = "Elastic wave operators on flat and curved backgrounds: solver, \
             transformation laws, and boundary-data gauge experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `output_dir`, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Probe-point seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent solves
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise operator residual battery (CSV of check rows)
    CheckOperators(CommonArgs),
    /// Solve the boundary-value problem and dump the Neumann record
    RunDn(CommonArgs),
    /// Gauge-pair boundary-data comparison over a grid refinement sequence
    CompareGauge(CommonArgs),
    /// Boundary scaling-law check for a conformal factor
    ScalingCheck(CommonArgs),
    /// Fastest-branch speed audit over points and directions
    QpSpeed(CommonArgs),
    /// Self-convergence study on nested grids
    Convergence(CommonArgs),
    /// Operator-level scaling-freedom presets (four named quadrants)
    Table1Preset(CommonArgs),
}

impl Command {
    fn split(self) -> (ExperimentKind, CommonArgs) {
        match self {
            Command::CheckOperators(a) => (ExperimentKind::CheckOperators, a),
            Command::RunDn(a) => (ExperimentKind::RunDn, a),
            Command::CompareGauge(a) => (ExperimentKind::CompareGauge, a),
            Command::ScalingCheck(a) => (ExperimentKind::ScalingCheck, a),
            Command::QpSpeed(a) => (ExperimentKind::QpSpeed, a),
            Command::Convergence(a) => (ExperimentKind::Convergence, a),
            Command::Table1Preset(a) => (ExperimentKind::Table1Preset, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    let spec = match parse_config_with_kind(&args.config, kind, args.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = args.out.clone().unwrap_or_else(|| spec.output_dir.clone());
    if let Some(g) = &spec.gauge {
        let (lo, hi) = g.phi.det_jacobian_range(256, spec.seed);
        println!("det Dphi range over probe points: [{lo:.12}, {hi:.12}]");
    }
    match run(&spec, &out_dir, args.threads.max(1)) {
        Ok(outcome) => {
            println!(
                "{}: {} — {}",
                kind.name(),
                if outcome.pass { "PASS" } else { "FAIL" },
                outcome.summary
            );
            for f in &outcome.files {
                println!("  wrote {}", f.display());
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
