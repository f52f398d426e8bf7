//! `duffing-qdyn`: runs the renormalized-frame scenarios and writes CSV
//! curves plus a JSON manifest per run.

mod config;
mod error;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{BranchSel, Figure, Overrides, Scenario, ScenarioConfig, Sweep};
use error::CliError;
use output::{csv_path, manifest_path, write_file, SCHEMA};

#[derive(Parser)]
#[command(name = "duffing-qdyn", version, about = "Renormalized-frame analysis of the dissipative driven Duffing oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attractor amplitudes and squeeze pairs (both steady forms).
    Attractors(CommonArgs),
    /// Well-level spacings: exact diagonalization vs perturbation orders.
    Levels(CommonArgs),
    /// Orbital displacement <N|a|N> per level and order.
    Displacement(CommonArgs),
    /// Stationary level populations: full Liouvillian vs balance equation.
    Distribution(CommonArgs),
    /// Population ratio of the two lowest levels against the Bose law.
    BoseRatio(CommonArgs),
    /// Effective occupation N_eff(n) per level.
    Neff(CommonArgs),
    /// Emission-spectrum peak vs the perturbative level spacing.
    Spectrum(CommonArgs),
    /// Occupation under pure dephasing.
    Dephasing(CommonArgs),
    /// Runs every scenario behind one figure with its preset parameters.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct CommonArgs {
    /// Nonlinearity lambda = -chi/delta_omega.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Scaled drive beta = 2 lambda (epsilon/delta_omega)^2.
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Photon loss rate (units of delta_omega).
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Bath thermal occupation.
    #[arg(long, allow_negative_numbers = true)]
    nbar: Option<f64>,
    /// Pure dephasing rate.
    #[arg(long = "eta-ph", allow_negative_numbers = true)]
    eta_ph: Option<f64>,
    /// Fock-space truncation.
    #[arg(long)]
    dim: Option<usize>,
    /// Perturbation order.
    #[arg(long)]
    order: Option<usize>,
    /// Highest level index reported.
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long, value_enum)]
    branch: Option<BranchSel>,
    /// Parameter sweep VAR:START:STOP:N with VAR in beta, kappa, nbar, eta_ph.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Output prefix; files are written as PREFIX-<curve>.csv.
    #[arg(long)]
    out: Option<String>,
    /// key = value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Overrides, CliError> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("nbar", self.nbar),
            ("eta-ph", self.eta_ph),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("--{name} must be a finite number")));
            }
        }
        let flags = Overrides {
            lambda: self.lambda,
            beta: self.beta,
            kappa: self.kappa,
            nbar: self.nbar,
            eta_ph: self.eta_ph,
            dim: self.dim,
            order: self.order,
            n_max: self.n_max,
            branch: self.branch,
            sweep: self.sweep,
            out: self.out.clone(),
        };
        match &self.config {
            Some(path) => Ok(flags.or(Overrides::from_config_file(path)?)),
            None => Ok(flags),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DUFFING_QDYN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("DUFFING_QDYN_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))
}

/// Runs one scenario and writes its CSV files and manifest; returns the paths written.
fn run_scenario(cfg: &ScenarioConfig, prefix: &str, figure: Option<Figure>) -> Result<Vec<PathBuf>, CliError> {
    let start = Instant::now();
    let outcome = scenarios::run(cfg)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut written = vec![];
    let mut outputs = vec![];
    for table in &outcome.tables {
        let path = csv_path(prefix, &table.curve);
        write_file(&path, &table.render())?;
        outputs.push(json!({"curve": table.curve, "path": path.display().to_string(), "rows": table.rows.len()}));
        written.push(path);
    }
    let manifest = json!({
        "schema": SCHEMA,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario.name(),
        "figure": figure.map(Figure::name),
        "params": cfg.params_json(),
        "sweep": cfg.sweep.map(|s| s.to_string()),
        "outputs": outputs,
        "residuals": outcome.residuals,
        "timings": {"total_s": elapsed},
        "assumed": cfg.assumed,
        "results": outcome.results,
        "warnings": outcome.warnings,
    });
    let path = manifest_path(prefix);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON") + "\n";
    write_file(&path, &text)?;
    written.push(path);
    Ok(written)
}

fn execute(command: Command) -> Result<Vec<PathBuf>, CliError> {
    configure_threads()?;
    let (scenarios, figure, common): (Vec<Scenario>, Option<Figure>, CommonArgs) = match command {
        Command::Attractors(c) => (vec![Scenario::Attractors], None, c),
        Command::Levels(c) => (vec![Scenario::Levels], None, c),
        Command::Displacement(c) => (vec![Scenario::Displacement], None, c),
        Command::Distribution(c) => (vec![Scenario::Distribution], None, c),
        Command::BoseRatio(c) => (vec![Scenario::BoseRatio], None, c),
        Command::Neff(c) => (vec![Scenario::Neff], None, c),
        Command::Spectrum(c) => (vec![Scenario::Spectrum], None, c),
        Command::Dephasing(c) => (vec![Scenario::Dephasing], None, c),
        Command::Reproduce { figure, common } => (figure.scenarios().to_vec(), Some(figure), common),
    };
    let given = common.overrides()?;
    let mut written = vec![];
    for scenario in scenarios {
        let cfg = ScenarioConfig::resolve(scenario, given.clone())?;
        let prefix = match figure {
            Some(f) => format!("{}-{}", given.out.as_deref().unwrap_or(f.name()), scenario.name()),
            None => cfg.out.clone(),
        };
        written.extend(run_scenario(&cfg, &prefix, figure)?);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => err.exit(),
        Err(err) if err.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => err.exit(),
        Err(err) => {
            let msg = err.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = CliError::Config(first.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
