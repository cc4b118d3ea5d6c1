use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One CSV row per (axis value, scheme, trial). Column order is the file
/// format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub sweep_axis: String,
    pub axis_value: f64,
    pub scheme: String,
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub max_interference_dbm: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_axis: String,
    pub axis_value: f64,
    pub scheme: String,
    /// Trials with a finite SNR.
    pub n: usize,
    pub mean_snr_db: f64,
    /// Half-width of the normal-approximation 95% interval, `1.96 s / sqrt(n)`.
    pub ci95_db: f64,
    pub feasible_fraction: f64,
}

pub fn write_trials_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "sweep_axis",
            "axis_value",
            "scheme",
            "trial",
            "seed",
            "snr_db",
            "max_interference_dbm",
            "iterations",
            "wall_time_s",
            "feasible",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<TrialRow>, _>>()
        .map_err(|e| Error::Schema(e.to_string()))?;
    Ok(rows)
}

pub fn write_summary_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean SNR in dB and 95% interval per (axis, value, scheme). Rows with a
/// non-finite SNR (a scheme that could not run) are counted out.
pub fn aggregate(rows: &[TrialRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, u64, String), (f64, Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in rows {
        // Sort key for floats that keeps numeric order for the axis values we use.
        let key = (r.sweep_axis.clone(), order_key(r.axis_value), r.scheme.clone());
        let e = groups.entry(key).or_insert((r.axis_value, Vec::new(), 0, 0));
        e.3 += 1;
        if r.feasible {
            e.2 += 1;
        }
        if r.snr_db.is_finite() {
            e.1.push(r.snr_db);
        }
    }
    groups
        .into_iter()
        .map(|((axis, _, scheme), (value, snrs, feasible, total))| {
            let n = snrs.len();
            let mean = if n == 0 { f64::NAN } else { snrs.iter().sum::<f64>() / n as f64 };
            let ci = if n < 2 {
                0.0
            } else {
                let var = snrs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                1.96 * var.sqrt() / (n as f64).sqrt()
            };
            AggregateRow {
                sweep_axis: axis,
                axis_value: value,
                scheme,
                n,
                mean_snr_db: mean,
                ci95_db: ci,
                feasible_fraction: feasible as f64 / total as f64,
            }
        })
        .collect()
}

fn order_key(v: f64) -> u64 {
    // Monotone map from f64 to u64 (total order).
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Aggregates a trials CSV and writes `plotdata.csv` plus one
/// whitespace-separated `plot_<axis>_<scheme>.dat` per scheme into
/// `out_dir`.
pub fn emit_plotdata(csv_path: &Path, out_dir: &Path) -> Result<Vec<AggregateRow>> {
    let rows = read_trials_csv(std::fs::File::open(csv_path)?)?;
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} has no trial rows", csv_path.display())));
    }
    let agg = aggregate(&rows);
    std::fs::create_dir_all(out_dir)?;
    write_summary_csv(&agg, std::fs::File::create(out_dir.join("plotdata.csv"))?)?;
    let mut per_scheme: BTreeMap<(String, String), String> = BTreeMap::new();
    for a in &agg {
        let text = per_scheme
            .entry((a.sweep_axis.clone(), a.scheme.clone()))
            .or_insert_with(|| "# axis_value mean_snr_db ci95_db\n".to_string());
        text.push_str(&format!("{} {} {}\n", a.axis_value, a.mean_snr_db, a.ci95_db));
    }
    for ((axis, scheme), text) in per_scheme {
        std::fs::write(out_dir.join(format!("plot_{axis}_{scheme}.dat")), text)?;
    }
    Ok(agg)
}
