//! Monte-Carlo sweeps over region size, interference threshold or path
//! count, with CSV output, per-trial scenario files for replay and
//! aggregated plot data.

mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{ao_solve, fpa_scheme, mrt_scheme, zf_scheme};
use crate::channel::{generate_scenario, Scenario};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::placement::pso_optimize;
use crate::rng::{derive_seed, seeded_rng, streams};
use crate::types::SolveReport;
use crate::{dbm_to_watts, watts_to_dbm};

pub use output::{aggregate, emit_plotdata, read_trials_csv, write_summary_csv, write_trials_csv, AggregateRow, TrialRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ao,
    Pso,
    Mrt,
    Zf,
    Fpa,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Ao, Scheme::Pso, Scheme::Mrt, Scheme::Zf, Scheme::Fpa];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ao => "ao",
            Scheme::Pso => "pso",
            Scheme::Mrt => "mrt",
            Scheme::Zf => "zf",
            Scheme::Fpa => "fpa",
        }
    }

    /// Parses a comma-separated list such as `ao,mrt,fpa`.
    pub fn parse_list(text: &str) -> Result<Vec<Scheme>> {
        let mut out: Vec<Scheme> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::UnknownScheme(text.to_string()));
        }
        Ok(out)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// Runs one scheme on a scenario. Random streams derive from `trial_seed`
/// only, so AO, MRT and ZF start from the same layout.
pub fn run_scheme(
    scheme: Scheme,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    trial_seed: u64,
) -> Result<SolveReport> {
    let mut layout_rng = seeded_rng(trial_seed, streams::LAYOUT_INIT);
    match scheme {
        Scheme::Ao => ao_solve(scenario, cfg, &mut layout_rng),
        Scheme::Mrt => mrt_scheme(scenario, cfg, &mut layout_rng),
        Scheme::Zf => zf_scheme(scenario, cfg, &mut layout_rng),
        Scheme::Fpa => fpa_scheme(scenario, cfg),
        Scheme::Pso => {
            let mut rng = seeded_rng(trial_seed, streams::PSO);
            Ok(pso_optimize(scenario, cfg, &mut rng).report)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Region side in wavelengths.
    Region,
    /// Interference threshold in dBm.
    It,
    /// Paths per receiver.
    Paths,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Region => "region",
            SweepAxis::It => "it",
            SweepAxis::Paths => "paths",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Region => vec![1.0, 2.0, 3.0, 4.0],
            SweepAxis::It => vec![-90.0, -80.0, -70.0, -60.0, -50.0],
            SweepAxis::Paths => vec![2.0, 4.0, 6.0],
        }
    }

    /// Configuration for one axis value.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Region => cfg.region_size = value * cfg.wavelength,
            SweepAxis::It => cfg.it_threshold = dbm_to_watts(value),
            SweepAxis::Paths => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!("path count must be a positive integer, got {value}")));
                }
                cfg.paths_per_receiver = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "region" => Ok(SweepAxis::Region),
            "it" => Ok(SweepAxis::It),
            "paths" => Ok(SweepAxis::Paths),
            _ => Err(Error::UnknownAxis(s.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Write measured wall-clock times. Off by default so repeated runs
    /// produce byte-identical CSV.
    pub record_timing: bool,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, trials: usize, seed: u64) -> Self {
        Self {
            axis,
            values: axis.default_values(),
            trials,
            seed,
            schemes: Scheme::ALL.to_vec(),
            record_timing: false,
        }
    }
}

/// Everything needed to rerun one trial: configuration, channel
/// realisation, seed and the reports produced by the original run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub sweep_axis: SweepAxis,
    pub axis_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub reports: BTreeMap<Scheme, SolveReport>,
}

impl TrialRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: TrialRecord = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        // Re-run the scenario checks on the embedded realisation.
        let scenario_json = serde_json::to_string(&rec.scenario)?;
        Scenario::from_json(&scenario_json)?;
        rec.config.validate().map_err(|e| Error::Schema(e.to_string()))?;
        if rec.scenario.k() != rec.config.k_prs {
            return Err(Error::Schema(format!(
                "scenario has {} primary receivers, config expects {}",
                rec.scenario.k(),
                rec.config.k_prs
            )));
        }
        Ok(rec)
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}_trial{:04}.json", self.sweep_axis.name(), self.axis_value, self.trial)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by axis value, scheme, trial.
    pub rows: Vec<TrialRow>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        aggregate(&self.rows)
    }

    /// Writes `trials.csv`, `summary.csv` and `scenarios/*.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("scenarios"))?;
        write_trials_csv(&self.rows, std::fs::File::create(dir.join("trials.csv"))?)?;
        write_summary_csv(&self.aggregate(), std::fs::File::create(dir.join("summary.csv"))?)?;
        for rec in &self.records {
            std::fs::write(dir.join("scenarios").join(rec.file_name()), rec.to_json()?)?;
        }
        Ok(())
    }
}

/// Seed of trial `t`; independent of the axis value so every axis value
/// sees the same channel draws where the axis leaves them unchanged.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, trial as u64)
}

/// Runs every requested scheme on `spec.trials` scenarios per axis value.
/// Trials run in parallel; output order is canonical.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::InvalidConfig("sweep has no axis values".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::InvalidConfig("sweep has no schemes".into()));
    }
    let cfgs: Vec<(f64, ScenarioConfig)> = spec
        .values
        .iter()
        .map(|&v| spec.axis.apply(base, v).map(|c| (v, c)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cfgs.len())
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();

    let results: Vec<(Vec<TrialRow>, TrialRecord)> = jobs
        .par_iter()
        .map(|&(i, trial)| {
            let (value, cfg) = &cfgs[i];
            run_trial(spec, *value, cfg, trial)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(results.len() * spec.schemes.len());
    let mut records = Vec::with_capacity(results.len());
    for (r, rec) in results {
        rows.extend(r);
        records.push(rec);
    }
    rows.sort_by(|a, b| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then(a.scheme.cmp(&b.scheme))
            .then(a.trial.cmp(&b.trial))
    });
    records.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value).then(a.trial.cmp(&b.trial)));
    Ok(SweepResult { rows, records })
}

fn run_trial(
    spec: &SweepSpec,
    value: f64,
    cfg: &ScenarioConfig,
    trial: usize,
) -> Result<(Vec<TrialRow>, TrialRecord)> {
    let seed = trial_seed(spec.seed, trial);
    let scenario = generate_scenario(cfg, &mut seeded_rng(seed, streams::SCENARIO));
    let mut rows = Vec::with_capacity(spec.schemes.len());
    let mut reports = BTreeMap::new();
    for &scheme in &spec.schemes {
        let row = match run_scheme(scheme, &scenario, cfg, seed) {
            Ok(rep) => {
                let row = TrialRow {
                    sweep_axis: spec.axis.name().to_string(),
                    axis_value: value,
                    scheme: scheme.name().to_string(),
                    trial,
                    seed,
                    snr_db: rep.snr_db,
                    max_interference_dbm: watts_to_dbm(rep.max_interference()),
                    iterations: rep.iterations,
                    wall_time_s: if spec.record_timing { rep.wall_time } else { 0.0 },
                    feasible: rep.feasible,
                };
                reports.insert(scheme, rep);
                row
            }
            // A scheme that cannot run on this scenario (for example ZF with
            // N <= K) still gets a row so every trial has every scheme.
            Err(_) => TrialRow {
                sweep_axis: spec.axis.name().to_string(),
                axis_value: value,
                scheme: scheme.name().to_string(),
                trial,
                seed,
                snr_db: f64::NAN,
                max_interference_dbm: f64::NAN,
                iterations: 0,
                wall_time_s: 0.0,
                feasible: false,
            },
        };
        rows.push(row);
    }
    let record = TrialRecord {
        sweep_axis: spec.axis,
        axis_value: value,
        trial,
        seed,
        config: cfg.clone(),
        scenario,
        reports,
    };
    Ok((rows, record))
}

/// Reruns `scheme` on a saved trial. The returned report matches the one
/// stored in the file apart from wall-clock time.
pub fn replay(path: &Path, scheme: &str) -> Result<SolveReport> {
    let scheme: Scheme = scheme.parse()?;
    let text = std::fs::read_to_string(path)?;
    let rec = TrialRecord::from_json(&text)?;
    run_scheme(scheme, &rec.scenario, &rec.config, rec.seed)
}

/// Loads a saved trial.
pub fn load_record(path: &Path) -> Result<TrialRecord> {
    TrialRecord::from_json(&std::fs::read_to_string(path)?)
}

/// Default output directory name for a sweep.
pub fn default_out_dir(axis: SweepAxis) -> PathBuf {
    PathBuf::from(format!("out_{}", axis.name()))
}
