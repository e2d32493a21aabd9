use std::path::PathBuf;
use std::process::ExitCode;

use cantor_riesz::experiment::{
    run_capacity, run_profile, run_ratio_experiment, run_stopping_report, run_wolff, sweep,
    write_capacity, write_profile, write_ratio, write_stopping, write_wolff, ExperimentConfig,
    LambdaSpec, StoppingReport,
};
use cantor_riesz::Error;
use clap::{Args, Parser, Subcommand};

/// Corner Cantor set experiments: Riesz transform norms, stopping scales,
/// Wolff potentials and capacities.
#[derive(Parser)]
#[command(name = "cantor-riesz", version)]
struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density profile ell_n, theta_n, p_n of every case
    Profile(RunArgs),
    /// Transform norm against the density sum
    Ratio(RunArgs),
    /// Stopping scales, interval labels and lemma checks
    Stopping(RunArgs),
    /// Wolff potential against its discrete form at sampled points
    Wolff(RunArgs),
    /// Capacity formula, positive-measure estimate and Wolff samples
    Capacity(RunArgs),
    /// Everything above in one run
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// Depths, comma separated
    #[arg(long = "N", value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Ratio family: 0.25, periodic:0.2,0.45, list:..., random:LO,HI[,COUNT]; repeatable
    #[arg(long)]
    lambda: Vec<String>,
    #[arg(long = "refine-k")]
    refine_k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the tree-code instead of direct summation
    #[arg(long)]
    treecode: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(s) = self.s {
            cfg.s = s;
        }
        if let Some(n) = &self.depths {
            cfg.depths = n.clone();
        }
        if !self.lambda.is_empty() {
            cfg.lambda = self
                .lambda
                .iter()
                .map(|l| l.parse::<LambdaSpec>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(k) = self.refine_k {
            cfg.refine_k = k;
        }
        if let Some(e) = self.eps {
            cfg.eps = e;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if self.treecode {
            cfg.treecode = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Hard,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn check_hard(report: &StoppingReport) -> Result<(), Failure> {
    let failures = report.failures();
    for (id, family, name) in &failures {
        eprintln!("hard check failed: case {id} ({family}): {name}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Hard)
    }
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        log::info!("wrote {}", f.display());
    }
    if let Some(dir) = files.first().and_then(|f| f.parent()) {
        println!("wrote {} files to {}", files.len(), dir.display());
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Profile(a) => {
            let cfg = a.config()?;
            report_files(&write_profile(&run_profile(&cfg)?, &cfg)?);
        }
        Command::Ratio(a) => {
            let cfg = a.config()?;
            let table = run_ratio_experiment(&cfg)?;
            report_files(&write_ratio(&table, &cfg)?);
            if let Some(c) = table.band_constant {
                println!("all ratios within [1/C, C] for C = {c}");
            }
        }
        Command::Stopping(a) => {
            let cfg = a.config()?;
            let report = run_stopping_report(&cfg)?;
            report_files(&write_stopping(&report, &cfg)?);
            check_hard(&report)?;
        }
        Command::Wolff(a) => {
            let cfg = a.config()?;
            report_files(&write_wolff(&run_wolff(&cfg)?, &cfg)?);
        }
        Command::Capacity(a) => {
            let cfg = a.config()?;
            report_files(&write_capacity(&run_capacity(&cfg)?, &cfg)?);
        }
        Command::Sweep(a) => {
            let cfg = a.config()?;
            let summary = sweep(&cfg)?;
            report_files(&summary.files);
            check_hard(&summary.stopping)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Hard) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cantor_riesz::experiment::StoppingCase;

    fn report(enforced: bool) -> StoppingReport {
        let cfg = ExperimentConfig {
            depths: vec![2],
            ..Default::default()
        };
        let mut rep = run_stopping_report(&cfg).unwrap();
        let case: &mut StoppingCase = &mut rep.cases[0];
        case.enforced = enforced;
        case.hard_failures.push("p-sum bound".into());
        rep
    }

    #[test]
    fn enforced_failure_is_hard() {
        assert!(matches!(check_hard(&report(true)), Err(Failure::Hard)));
        assert!(check_hard(&report(false)).is_ok());
    }
}
