use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ma_spectrum::harness::{self, Scheme, SweepAxis, SweepSpec};
use ma_spectrum::ScenarioConfig;

/// Movable-antenna spectrum-sharing simulator.
///
/// Configuration values can be overridden with environment variables named
/// `MASIM_<KEY>`, for example `MASIM_GRID_POINTS_PER_AXIS=60` or
/// `MASIM_PSO__SWARM_SIZE=30` for nested keys.
#[derive(Parser)]
#[command(name = "masim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Region,
    It,
    Paths,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write trials.csv, summary.csv and
    /// per-trial scenario files.
    Sweep {
        /// TOML configuration; applied on top of the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        sweep: Axis,
        /// Trials per axis value (default 20 for desk, 100 for paper).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of ao,pso,mrt,zf,fpa.
        #[arg(long, default_value = "ao,pso,mrt,zf,fpa")]
        schemes: String,
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        /// Comma-separated axis values overriding the defaults.
        #[arg(long)]
        values: Option<String>,
        /// Write measured wall-clock times instead of zeros.
        #[arg(long)]
        record_timing: bool,
    },
    /// Rerun one scheme on a saved trial and compare with the stored report.
    Replay {
        scenario: PathBuf,
        #[arg(long)]
        scheme: String,
    },
    /// Aggregate a trials CSV into plot-ready tables.
    Plotdata {
        csv: PathBuf,
        #[arg(long, default_value = "plotdata")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>, preset: Preset) -> Result<ScenarioConfig> {
    let base = match preset {
        Preset::Desk => ScenarioConfig::desk(),
        Preset::Paper => ScenarioConfig::paper_scale(),
    };
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let merged = merge_over(&base.to_toml_string(), &text)?;
    Ok(ScenarioConfig::load(&merged, std::env::vars())?)
}

/// Overlays the user TOML onto the preset TOML, merging nested tables
/// key by key.
fn merge_over(preset: &str, user: &str) -> Result<String> {
    let user_doc: toml::Table = user.parse().context("parsing configuration file")?;
    let mut doc: toml::Table = preset.parse().expect("preset config is valid TOML");
    for (k, v) in user_doc {
        match (doc.get_mut(&k), v) {
            (Some(toml::Value::Table(p)), toml::Value::Table(u)) => p.extend(u),
            (_, v) => {
                doc.insert(k, v);
            }
        }
    }
    Ok(toml::to_string(&doc)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            sweep,
            trials,
            seed,
            out,
            schemes,
            preset,
            values,
            record_timing,
        } => {
            let cfg = load_config(config.as_ref(), preset)?;
            let axis = match sweep {
                Axis::Region => SweepAxis::Region,
                Axis::It => SweepAxis::It,
                Axis::Paths => SweepAxis::Paths,
            };
            let trials = trials.unwrap_or(match preset {
                Preset::Desk => 20,
                Preset::Paper => 100,
            });
            let mut spec = SweepSpec::new(axis, trials, seed);
            spec.schemes = Scheme::parse_list(&schemes)?;
            spec.record_timing = record_timing;
            if let Some(v) = values {
                spec.values = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad axis value `{s}`")))
                    .collect::<Result<_>>()?;
            }
            let out = out.unwrap_or_else(|| harness::default_out_dir(axis));
            let result = harness::run_sweep(&cfg, &spec)?;
            result.save(&out)?;
            for a in result.aggregate() {
                println!(
                    "{} = {:>6}  {:<4} mean SNR {:8.3} dB  +/- {:.3}  (n = {}, feasible {:.0}%)",
                    a.sweep_axis,
                    a.axis_value,
                    a.scheme,
                    a.mean_snr_db,
                    a.ci95_db,
                    a.n,
                    100.0 * a.feasible_fraction
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Replay { scenario, scheme } => {
            let record = harness::load_record(&scenario)?;
            let report = harness::replay(&scenario, &scheme)?;
            let parsed: Scheme = scheme.parse()?;
            let matches = record.reports.get(&parsed).map(|r| r.same_outcome(&report));
            println!("{}", serde_json::to_string_pretty(&report)?);
            match matches {
                Some(true) => eprintln!("replay matches the stored report"),
                Some(false) => anyhow::bail!("replay differs from the stored report"),
                None => eprintln!("no stored report for {parsed}; nothing to compare"),
            }
        }
        Command::Plotdata { csv, out } => {
            let agg = harness::emit_plotdata(&csv, &out)?;
            eprintln!("wrote {} aggregate rows to {}", agg.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
