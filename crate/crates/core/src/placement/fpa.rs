use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::types::{Apv, Point};

/// Fixed uniform layout: a near-square `cols x rows` lattice at half-wavelength
/// pitch, centred on the origin and filled row-major.
pub fn fpa_layout(cfg: &ScenarioConfig) -> Result<Apv> {
    let n = cfg.n_antennas;
    let pitch = cfg.wavelength / 2.0;
    if cfg.min_spacing > pitch * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "minimum spacing {} exceeds half-wavelength pitch {pitch}",
            cfg.min_spacing
        )));
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let extent = (cols.max(rows) - 1) as f64 * pitch;
    if extent > cfg.region_size * (1.0 + 1e-12) {
        return Err(Error::RegionTooSmall {
            n,
            region_size: cfg.region_size,
            spacing: pitch,
        });
    }
    let x0 = (cols - 1) as f64 / 2.0;
    let y0 = (rows - 1) as f64 / 2.0;
    let positions = (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Point::new((c as f64 - x0) * pitch, (r as f64 - y0) * pitch)
        })
        .collect();
    Apv::new(positions, cfg.region_size, cfg.min_spacing)
}
