//! `ccsm`: batch driver for the CCSM Monte-Carlo scenarios.
//!
//! Every configuration is resolved and validated before any simulation
//! starts. For each scenario the output directory receives
//! `<scenario>.config.toml` (written first), then `<scenario>.csv` and
//! `<scenario>.summary.txt`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use ccsm::harness::{debug_bundle, run_scenario, ExperimentConfig, ScenarioKind};
use clap::{Args, Parser, Subcommand};

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Message error rate over the frame-length and SNR grids
    Mer,
    /// Smallest error-free frame length per network size
    Mmin,
    /// GSP and LASSO on synthetic group-sparse problems
    Solvers,
    /// Throughput of TDMA, CSMA/CA and CCSM
    Mac,
    /// Every scenario above, in that order
    All,
}

#[derive(Args, Debug)]
struct Options {
    /// TOML experiment config; omitted keys take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, env = "CCSM_OUT_DIR", default_value = "results")]
    out: PathBuf,
    /// Override a config key, e.g. `--set ccsm.l=8` or `--set mer.snr_db=[0,10]`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per grid point
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Suppress progress lines on stderr
    #[arg(long, global = true)]
    quiet: bool,
    /// Also write `dump.json`: one decode replayed with its solver trace
    #[arg(long, global = true)]
    dump: bool,
}

#[derive(Parser, Debug)]
#[command(
    name = "ccsm",
    version,
    about = "Run CCSM simulation scenarios and write CSV result tables",
    after_help = "The output directory defaults to $CCSM_OUT_DIR when set, else ./results."
)]
struct Invocation {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

impl Command {
    fn scenarios(self) -> &'static [ScenarioKind] {
        match self {
            Command::Mer => &[ScenarioKind::MerSweep],
            Command::Mmin => &[ScenarioKind::MminSearch],
            Command::Solvers => &[ScenarioKind::SolverStudy],
            Command::Mac => &[ScenarioKind::MacCompare],
            Command::All => &ScenarioKind::ALL,
        }
    }
}

/// Errors that mean the invocation itself is wrong.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn split_override(raw: &str) -> Result<(String, String), UsageError> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(UsageError(format!(
            "override `{raw}` is not of the form key=value"
        ))),
    }
}

fn resolve(
    options: &Options,
    scenarios: &[ScenarioKind],
) -> Result<Vec<ExperimentConfig>, UsageError> {
    let text = match &options.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config `{}`: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = options
        .overrides
        .iter()
        .map(|o| split_override(o))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = options.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(trials) = options.trials {
        overrides.push(("trials".into(), trials.to_string()));
    }
    scenarios
        .iter()
        .map(|kind| {
            let mut all = overrides.clone();
            all.push(("scenario".into(), format!("\"{}\"", kind.name())));
            ExperimentConfig::from_toml_str(&text, &all).map_err(|e| UsageError(e.to_string()))
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write `{}`", path.display()))
}

fn run(invocation: Invocation) -> anyhow::Result<()> {
    let options = &invocation.options;
    let configs = resolve(options, invocation.command.scenarios())?;
    fs::create_dir_all(&options.out)
        .with_context(|| format!("cannot create output directory `{}`", options.out.display()))?;
    let quiet = options.quiet;
    let progress = move |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    for config in &configs {
        let name = config.scenario.name();
        write(
            &options.out.join(format!("{name}.config.toml")),
            &config.to_toml_string(),
        )?;
    }
    if options.dump {
        let bundle = debug_bundle(&configs[0])?;
        write(
            &options.out.join("dump.json"),
            &serde_json::to_string_pretty(&bundle)?,
        )?;
    }
    for config in &configs {
        let name = config.scenario.name();
        let table = run_scenario(config, &progress)?;
        if table.rows.iter().any(|r| r.value.is_nan()) {
            progress(&format!(
                "{name}: some points were not achieved (value NaN)"
            ));
        }
        write(&options.out.join(format!("{name}.csv")), &table.to_csv())?;
        let summary = table.to_summary();
        write(&options.out.join(format!("{name}.summary.txt")), &summary)?;
        if !quiet {
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let invocation = Invocation::parse();
    match run(invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
