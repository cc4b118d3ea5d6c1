//! Scenario and algorithm configuration.
//!
//! Powers are held in watts. The on-disk format is TOML with one key per
//! field; every key is optional and falls back to the defaults below. For
//! convenience the loader also accepts `p_max_dbm`, `noise_power_dbm`,
//! `it_threshold_dbm` and `region_size_wavelengths`, which are converted to
//! the canonical keys before deserialisation. Serialisation always writes
//! the canonical keys, so `parse(serialize(cfg)) == cfg` bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{dbm_to_watts, from_db};

/// Prefix for environment-variable overrides, e.g. `MASIM_N_ANTENNAS=6`.
pub const ENV_PREFIX: &str = "MASIM_";

/// How the integer spacing of the two-antenna construction is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingUnit {
    /// `d_y` counts wavelengths: antenna separation `d_y * wavelength`.
    Wavelengths,
    /// `d_y` counts metres.
    Meters,
}

/// When the particle swarm re-optimises the beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsoBeamMode {
    /// Run SCA for every candidate position set.
    PerCandidate,
    /// Score candidates with the incumbent beamformer, re-run SCA on the
    /// swarm best once per iteration.
    PerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub iterations: usize,
    pub beam_mode: PsoBeamMode,
    /// SCA iteration cap used inside fitness evaluations.
    pub sca_max_iters: usize,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            iterations: 100,
            beam_mode: PsoBeamMode::PerCandidate,
            sca_max_iters: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub k_prs: usize,
    /// Side of the square transmit region, metres.
    pub region_size: f64,
    pub wavelength: f64,
    pub min_spacing: f64,
    pub grid_points_per_axis: usize,
    /// Watts.
    pub p_max: f64,
    /// Watts.
    pub noise_power: f64,
    /// Interference-temperature threshold, watts.
    pub it_threshold: f64,
    pub paths_per_receiver: usize,
    pub path_loss_exponent: f64,
    /// Linear path loss at the 1 m reference distance.
    pub ref_path_loss: f64,
    /// Transmitter-receiver distance range in metres.
    pub distance_range: (f64, f64),
    pub rng_seed: u64,

    pub sca_tol: f64,
    pub sca_max_iters: usize,
    pub ao_tol: f64,
    pub ao_max_outer: usize,
    pub max_sweeps: usize,
    pub ipm_max_iters: usize,
    /// Relative slack on the power budget.
    pub eps_pow: f64,
    /// Relative slack on interference thresholds.
    pub eps_it: f64,

    pub pso: PsoParams,

    pub spacing_unit: SpacingUnit,
    /// Random position sets used to estimate the minimum desired-channel gain.
    pub h_min_samples: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let wavelength = 0.1;
        Self {
            n_antennas: 4,
            k_prs: 3,
            region_size: 4.0 * wavelength,
            wavelength,
            min_spacing: wavelength / 2.0,
            grid_points_per_axis: 100,
            p_max: dbm_to_watts(23.0),
            noise_power: dbm_to_watts(-80.0),
            it_threshold: dbm_to_watts(-80.0),
            paths_per_receiver: 4,
            path_loss_exponent: 2.8,
            ref_path_loss: from_db(-40.0),
            distance_range: (20.0, 100.0),
            rng_seed: 0,
            sca_tol: 1e-6,
            sca_max_iters: 50,
            ao_tol: 1e-4,
            ao_max_outer: 20,
            max_sweeps: 5,
            ipm_max_iters: 200,
            eps_pow: 1e-9,
            eps_it: 1e-6,
            pso: PsoParams::default(),
            spacing_unit: SpacingUnit::Wavelengths,
            h_min_samples: 10_000,
        }
    }
}

impl ScenarioConfig {
    /// Desk-scale preset: coarse grid, 20 trials per sweep point.
    pub fn desk() -> Self {
        Self {
            grid_points_per_axis: 40,
            ..Self::default()
        }
    }

    /// Full-scale preset: 100 x 100 grid.
    pub fn paper_scale() -> Self {
        Self::default()
    }

    pub fn grid_spacing(&self) -> f64 {
        self.region_size / self.grid_points_per_axis as f64
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_antennas < 1 {
            return fail("n_antennas must be >= 1");
        }
        if self.grid_points_per_axis < 1 {
            return fail("grid_points_per_axis must be >= 1");
        }
        if self.paths_per_receiver < 1 {
            return fail("paths_per_receiver must be >= 1");
        }
        let positive = [
            ("region_size", self.region_size),
            ("wavelength", self.wavelength),
            ("p_max", self.p_max),
            ("noise_power", self.noise_power),
            ("it_threshold", self.it_threshold),
            ("path_loss_exponent", self.path_loss_exponent),
            ("ref_path_loss", self.ref_path_loss),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.min_spacing >= 0.0) || !self.min_spacing.is_finite() {
            return fail("min_spacing must be finite and >= 0");
        }
        let (dmin, dmax) = self.distance_range;
        if !(dmin > 0.0 && dmax >= dmin && dmax.is_finite()) {
            return fail("distance_range must satisfy 0 < min <= max");
        }
        if !(self.sca_tol >= 0.0) || !(self.ao_tol >= 0.0) {
            return fail("tolerances must be >= 0");
        }
        if !(self.eps_pow >= 0.0) || !(self.eps_it >= 0.0) {
            return fail("slacks must be >= 0");
        }
        // TOML integers are signed 64-bit.
        if self.rng_seed > i64::MAX as u64 {
            return fail("rng_seed must be at most 2^63 - 1");
        }
        if self.region_size.is_finite() {
            let picked = crate::placement::SamplingGrid::from_config(self)
                .greedy_spaced_subset(self.n_antennas, self.min_spacing);
            if picked.len() < self.n_antennas {
                return Err(Error::RegionTooSmall {
                    n: self.n_antennas,
                    region_size: self.region_size,
                    spacing: self.min_spacing,
                });
            }
        }
        Ok(())
    }

    /// Parses a TOML document, applying dBm aliases. Does not validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        Self::from_table(table)
    }

    /// Like [`from_toml_str`](Self::from_toml_str), then applies `MASIM_*`
    /// environment overrides and validates.
    pub fn load(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        apply_env_overrides(&mut table, env);
        let cfg = Self::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_table(mut table: toml::Table) -> Result<Self> {
        convert_aliases(&mut table)?;
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

fn convert_aliases(table: &mut toml::Table) -> Result<()> {
    const DBM_ALIASES: [(&str, &str); 3] = [
        ("p_max_dbm", "p_max"),
        ("noise_power_dbm", "noise_power"),
        ("it_threshold_dbm", "it_threshold"),
    ];
    for (alias, canonical) in DBM_ALIASES {
        if let Some(v) = table.remove(alias) {
            let dbm = as_f64(&v).ok_or_else(|| {
                Error::InvalidConfig(format!("{alias} must be a number"))
            })?;
            table.insert(canonical.into(), toml::Value::Float(dbm_to_watts(dbm)));
        }
    }
    if let Some(v) = table.remove("region_size_wavelengths") {
        let ratio = as_f64(&v).ok_or_else(|| {
            Error::InvalidConfig("region_size_wavelengths must be a number".into())
        })?;
        let wavelength = table
            .get("wavelength")
            .and_then(as_f64)
            .unwrap_or(ScenarioConfig::default().wavelength);
        table.insert("region_size".into(), toml::Value::Float(ratio * wavelength));
    }
    // Integer literals are fine for float fields.
    for key in [
        "region_size",
        "wavelength",
        "min_spacing",
        "p_max",
        "noise_power",
        "it_threshold",
        "path_loss_exponent",
        "ref_path_loss",
        "sca_tol",
        "ao_tol",
        "eps_pow",
        "eps_it",
    ] {
        if let Some(toml::Value::Integer(i)) = table.get(key) {
            let f = *i as f64;
            table.insert(key.into(), toml::Value::Float(f));
        }
    }
    Ok(())
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn apply_env_overrides(table: &mut toml::Table, env: impl IntoIterator<Item = (String, String)>) {
    for (key, raw) in env {
        let Some(name) = key.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let name = name.to_ascii_lowercase();
        // Parse the value as a TOML literal, falling back to a bare string.
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(toml::Value::String(raw));
        if let Some((outer, inner)) = name.split_once("__") {
            let entry = table
                .entry(outer.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if let toml::Value::Table(t) = entry {
                t.insert(inner.to_string(), value);
            }
        } else {
            table.insert(name, value);
        }
    }
}
