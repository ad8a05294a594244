use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hcn_sim::config::{load_config, parse_config, RunConfig};
use hcn_sim::optimizer::SchemeTag;
use hcn_sim::power::PaModel;
use hcn_sim::report::{cmd_solve, cmd_sweep, cmd_verify, write_artifacts};
use hcn_sim::scenario::CsiMode;
use hcn_sim::units::watts_to_dbm;
use hcn_sim::SimError;

/// Energy-minimal station access and burst scheduling: single solves,
/// Monte Carlo sweeps, and an invariant verifier.
#[derive(Parser)]
#[command(name = "hcnsim", version)]
struct Cli {
    /// TOML configuration; omitted means the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one seeded drop and print the allocation.
    Solve {
        /// Seed of the drop to build.
        #[arg(long, default_value_t = 0)]
        drop_seed: u64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Proposed)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value_t = CsiArg::Long)]
        csi: CsiArg,
        #[arg(long, value_enum, default_value_t = PaArg::Tpa)]
        pa: PaArg,
    },
    /// Run the configured sweep and write its CSV files.
    Sweep {
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG charts.
        #[arg(long)]
        svg: bool,
    },
    /// Run the invariant suite and exit nonzero on any failure.
    Verify {
        #[arg(long, default_value_t = 200)]
        drops: usize,
        /// Also check the best multi-station grid cell stays dominated.
        #[arg(long)]
        force_split_oracle: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Exact selection and duration search.
    Proposed,
    /// Figure-of-merit selection and closed-form duration.
    Approx,
    /// Strongest received signal.
    Traditional,
    /// Every candidate transmits.
    AllAccess,
    /// Exhaustive reference solver.
    Oracle,
}

impl From<SchemeArg> for SchemeTag {
    fn from(a: SchemeArg) -> Self {
        match a {
            SchemeArg::Proposed => SchemeTag::ProposedPrecise,
            SchemeArg::Approx => SchemeTag::ProposedApprox,
            SchemeArg::Traditional => SchemeTag::TraditionalMaxRss,
            SchemeArg::AllAccess => SchemeTag::AllAccessUniform,
            SchemeArg::Oracle => SchemeTag::OracleBruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CsiArg {
    Long,
    Short,
}

impl From<CsiArg> for CsiMode {
    fn from(a: CsiArg) -> Self {
        match a {
            CsiArg::Long => CsiMode::LongTerm,
            CsiArg::Short => CsiMode::ShortTerm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PaArg {
    Tpa,
    Ipa,
}

impl From<PaArg> for PaModel {
    fn from(a: PaArg) -> Self {
        match a {
            PaArg::Tpa => PaModel::Tpa,
            PaArg::Ipa => PaModel::Ipa,
        }
    }
}

const SEED_ENV: &str = "HCNSIM_MASTER_SEED";

fn load(cli: &Cli) -> Result<RunConfig, SimError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => parse_config("")?,
    };
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed: u64 = raw
            .parse()
            .map_err(|_| SimError::Config(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}")))?;
        cfg.sweep.master_seed = seed;
    }
    Ok(cfg)
}

fn exit_code_for(e: &SimError) -> u8 {
    if e.is_infeasible() {
        3
    } else {
        match e {
            SimError::Io(_) => 1,
            _ => 2,
        }
    }
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let cfg = load(cli).map_err(|e| (2, e.to_string()))?;
    match &cli.command {
        Command::Solve {
            drop_seed,
            scheme,
            csi,
            pa,
        } => {
            let (_, text) = cmd_solve(&cfg, *drop_seed, (*scheme).into(), (*csi).into(), (*pa).into())
                .map_err(|e| {
                    let mut msg = e.to_string();
                    if e.is_infeasible() {
                        msg.push_str(&format!(
                            "\nceiling: {:.3} dBm ({:.6e} W); longer frames, more power, or a lower rate make this feasible",
                            watts_to_dbm(cfg.bs_profile.p_max_w),
                            cfg.bs_profile.p_max_w
                        ));
                    }
                    (exit_code_for(&e), msg)
                })?;
            print!("{text}");
            Ok(())
        }
        Command::Sweep { out, svg } => {
            let mut cfg = cfg;
            if *svg {
                cfg.svg = true;
            }
            let art = cmd_sweep(&cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
            let dir = out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            let written =
                write_artifacts(&art, &dir).map_err(|e| (exit_code_for(&e), e.to_string()))?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Verify {
            drops,
            force_split_oracle,
        } => {
            let report = cmd_verify(&cfg, *drops, *force_split_oracle)
                .map_err(|e| (exit_code_for(&e), e.to_string()))?;
            print!("{}", report.text);
            if report.passed {
                Ok(())
            } else {
                Err((4, "verification failed".to_string()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
