//! Waveguide geometry and disordered hole displacements.
//!
//! The structure is a line-defect waveguide in a triangular-lattice membrane:
//! one missing hole row, with `rows_each_side` rows adjacent to the defect
//! perturbed by random in-plane displacements. Displacements are Gaussian
//! with standard deviation `sigma_fraction * lattice_constant` per axis,
//! sampled through an explicit Box-Muller transform from a seeded uniform
//! stream.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use rand::Rng;
use std::f64::consts::PI;

/// Stream indices used within one disorder realization.
pub const DISPLACEMENT_STREAM: u64 = 0;
pub const PHASE_STREAM: u64 = 1;

/// Fraction of the lattice constant beyond which a disorder level exceeds
/// the experimentally probed range (0-6%).
pub const PROBED_SIGMA_MAX: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    pub lattice_constant_nm: f64,
    pub hole_radius_nm: f64,
    pub membrane_thickness_nm: f64,
    pub length_um: f64,
    /// Number of perturbed hole rows on each side of the line defect.
    pub rows_each_side: u32,
    pub refractive_index: f64,
}

impl WaveguideGeometry {
    /// Geometry of the reference experiment: a = 260 nm, r = 0.3 a,
    /// 150 nm membrane, 100 um long, three perturbed rows per side,
    /// GaAs index 3.44.
    pub fn reference() -> Self {
        WaveguideGeometry {
            lattice_constant_nm: 260.0,
            hole_radius_nm: 78.0,
            membrane_thickness_nm: 150.0,
            length_um: 100.0,
            rows_each_side: 3,
            refractive_index: 3.44,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lattice_constant_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "lattice constant must be positive".into(),
            ));
        }
        if !(self.hole_radius_nm > 0.0)
            || self.hole_radius_nm >= 0.5 * self.lattice_constant_nm
        {
            return Err(Error::InvalidParameter(
                "hole radius must sit in (0, a/2) so holes do not merge".into(),
            ));
        }
        if !(self.membrane_thickness_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "membrane thickness must be positive".into(),
            ));
        }
        if !(self.length_um > 0.0) {
            return Err(Error::InvalidParameter("length must be positive".into()));
        }
        if self.rows_each_side == 0 {
            return Err(Error::InvalidParameter(
                "at least one perturbed row per side".into(),
            ));
        }
        if !(self.refractive_index >= 1.0) {
            return Err(Error::InvalidParameter(
                "refractive index must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of lattice periods along the waveguide.
    pub fn n_cells(&self) -> usize {
        (self.length_um * 1000.0 / self.lattice_constant_nm).round() as usize
    }

    /// Perturbed holes per period: `rows_each_side` above and below.
    pub fn holes_per_cell(&self) -> usize {
        2 * self.rows_each_side as usize
    }
}

/// One displaced hole. `row` counts outward from the defect, negative below,
/// positive above; the defect row itself carries no holes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleDisplacement {
    pub cell: usize,
    pub row: i32,
    pub ideal_x_nm: f64,
    pub ideal_y_nm: f64,
    pub dx_nm: f64,
    pub dy_nm: f64,
}

/// A full set of hole displacements for one disorder realization.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub sigma_fraction: f64,
    pub seed: u64,
    pub holes: Vec<HoleDisplacement>,
    /// True when `sigma_fraction` exceeds the experimentally probed range.
    pub exceeds_probed_range: bool,
}

/// Box-Muller transform: two independent standard normal deviates from two
/// uniforms, u1 in (0, 1], u2 in [0, 1).
///
/// z1 = sqrt(-2 ln u1) cos(2 pi u2), z2 = sqrt(-2 ln u1) sin(2 pi u2).
pub fn box_muller(u1: f64, u2: f64) -> Result<(f64, f64)> {
    if !(u1 > 0.0 && u1 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "box_muller requires u1 in (0, 1], got {u1}"
        )));
    }
    if !(0.0..1.0).contains(&u2) {
        return Err(Error::InvalidParameter(format!(
            "box_muller requires u2 in [0, 1), got {u2}"
        )));
    }
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * PI * u2;
    Ok((radius * angle.cos(), radius * angle.sin()))
}

/// Generate Gaussian hole displacements for every perturbed hole.
///
/// Each hole consumes exactly one Box-Muller pair (dx, dy), so the draw
/// sequence is fixed by (seed, hole order) alone.
pub fn generate_disorder(
    geometry: &WaveguideGeometry,
    sigma_fraction: f64,
    seed: u64,
) -> Result<DisorderRealization> {
    geometry.validate()?;
    if !(sigma_fraction >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "disorder sigma must be non-negative, got {sigma_fraction}"
        )));
    }
    let a = geometry.lattice_constant_nm;
    let sigma_nm = sigma_fraction * a;
    let row_pitch_nm = a * 3f64.sqrt() / 2.0;
    let mut rng = stream_rng(seed, DISPLACEMENT_STREAM);
    let n_cells = geometry.n_cells();
    let rows = geometry.rows_each_side as i32;
    let mut holes = Vec::with_capacity(n_cells * geometry.holes_per_cell());
    for cell in 0..n_cells {
        for side in [-1i32, 1] {
            for k in 1..=rows {
                let row = side * k;
                // Triangular lattice: odd rows are staggered by a/2.
                let stagger = if k % 2 == 1 { 0.5 * a } else { 0.0 };
                let ideal_x_nm = cell as f64 * a + stagger;
                let ideal_y_nm = row as f64 * row_pitch_nm;
                let u1 = 1.0 - rng.random::<f64>();
                let u2 = rng.random::<f64>();
                let (z1, z2) = box_muller(u1, u2)?;
                holes.push(HoleDisplacement {
                    cell,
                    row,
                    ideal_x_nm,
                    ideal_y_nm,
                    dx_nm: sigma_nm * z1,
                    dy_nm: sigma_nm * z2,
                });
            }
        }
    }
    Ok(DisorderRealization {
        sigma_fraction,
        seed,
        holes,
        exceeds_probed_range: sigma_fraction > PROBED_SIGMA_MAX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::moments;

    fn long_geometry(length_um: f64) -> WaveguideGeometry {
        WaveguideGeometry {
            length_um,
            ..WaveguideGeometry::reference()
        }
    }

    #[test]
    fn box_muller_fixed_points() {
        let (z1, z2) = box_muller(1.0, 0.0).unwrap();
        assert_eq!(z1, 0.0);
        assert_eq!(z2, 0.0);
        let (z1, z2) = box_muller((-2.0f64).exp(), 0.0).unwrap();
        assert!((z1 - 2.0).abs() < 1e-12);
        assert!(z2.abs() < 1e-12);
    }

    #[test]
    fn box_muller_rejects_degenerate_uniforms() {
        assert!(box_muller(0.0, 0.5).is_err());
        assert!(box_muller(-0.1, 0.5).is_err());
        assert!(box_muller(1.1, 0.5).is_err());
        assert!(box_muller(0.5, 1.0).is_err());
        assert!(box_muller(0.5, -0.2).is_err());
    }

    #[test]
    fn box_muller_moments_are_standard_normal() {
        // 1e6 pairs from one uniform stream.
        let mut rng = stream_rng(11, 0);
        let mut zs = Vec::with_capacity(2_000_000);
        for _ in 0..1_000_000 {
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = rng.random::<f64>();
            let (z1, z2) = box_muller(u1, u2).unwrap();
            zs.push(z1);
            zs.push(z2);
        }
        let m = moments(&zs);
        assert!(m.mean.abs() < 0.01, "mean {}", m.mean);
        assert!((m.variance - 1.0).abs() < 0.01, "variance {}", m.variance);
        assert!(m.skewness.abs() < 0.05, "skewness {}", m.skewness);
        assert!(
            m.excess_kurtosis.abs() < 0.05,
            "excess kurtosis {}",
            m.excess_kurtosis
        );
    }

    #[test]
    fn zero_sigma_gives_exact_zero_displacements() {
        let geom = WaveguideGeometry::reference();
        let real = generate_disorder(&geom, 0.0, 5).unwrap();
        assert_eq!(real.holes.len(), geom.n_cells() * geom.holes_per_cell());
        assert!(real.holes.iter().all(|h| h.dx_nm == 0.0 && h.dy_nm == 0.0));
        assert!(!real.exceeds_probed_range);
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let geom = WaveguideGeometry::reference();
        assert!(generate_disorder(&geom, -0.01, 5).is_err());
    }

    #[test]
    fn displacement_rms_matches_sigma() {
        // sigma = 3% of a = 260 nm -> per-axis RMS 7.8 nm. 1e5 holes needs
        // a ~4.3 mm waveguide at 6 holes per cell.
        let geom = long_geometry(4334.0);
        let real = generate_disorder(&geom, 0.03, 99).unwrap();
        assert!(real.holes.len() >= 100_000);
        let dx: Vec<f64> = real.holes.iter().map(|h| h.dx_nm).collect();
        let dy: Vec<f64> = real.holes.iter().map(|h| h.dy_nm).collect();
        let rms_x = (dx.iter().map(|v| v * v).sum::<f64>() / dx.len() as f64).sqrt();
        let rms_y = (dy.iter().map(|v| v * v).sum::<f64>() / dy.len() as f64).sqrt();
        assert!((rms_x - 7.8).abs() < 0.1, "rms_x {rms_x}");
        assert!((rms_y - 7.8).abs() < 0.1, "rms_y {rms_y}");
        // In-plane magnitude RMS is sqrt(2) larger than per-axis.
        let rms_mag = (real
            .holes
            .iter()
            .map(|h| h.dx_nm * h.dx_nm + h.dy_nm * h.dy_nm)
            .sum::<f64>()
            / real.holes.len() as f64)
            .sqrt();
        assert!((rms_mag - 7.8 * 2f64.sqrt()).abs() < 0.15, "rms_mag {rms_mag}");
    }

    #[test]
    fn identical_inputs_reproduce_identical_displacements() {
        let geom = WaveguideGeometry::reference();
        let a = generate_disorder(&geom, 0.04, 123).unwrap();
        let b = generate_disorder(&geom, 0.04, 123).unwrap();
        assert_eq!(a, b);
        let c = generate_disorder(&geom, 0.04, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn probed_range_flag_trips_above_six_percent() {
        let geom = long_geometry(5.0);
        assert!(!generate_disorder(&geom, 0.06, 1).unwrap().exceeds_probed_range);
        assert!(generate_disorder(&geom, 0.0601, 1).unwrap().exceeds_probed_range);
    }

    #[test]
    fn hole_count_and_rows_follow_geometry() {
        let geom = long_geometry(2.6); // 10 cells
        let real = generate_disorder(&geom, 0.02, 3).unwrap();
        assert_eq!(geom.n_cells(), 10);
        assert_eq!(real.holes.len(), 60);
        assert!(real.holes.iter().all(|h| h.row != 0 && h.row.abs() <= 3));
        // Row pitch is sqrt(3)/2 a.
        let h = real.holes.iter().find(|h| h.row == 2).unwrap();
        assert!((h.ideal_y_nm - 2.0 * 260.0 * 3f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn geometry_validation_catches_bad_values() {
        let mut g = WaveguideGeometry::reference();
        g.hole_radius_nm = 130.0;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::reference();
        g.length_um = 0.0;
        assert!(g.validate().is_err());
        let mut g = WaveguideGeometry::reference();
        g.rows_each_side = 0;
        assert!(g.validate().is_err());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // Per-axis sample std tracks sigma * a for any probed-range sigma.
        #[test]
        fn displacement_std_scales_with_sigma(
            sigma in 0.005f64..0.12,
            seed in 0u64..1000,
        ) {
            let geom = WaveguideGeometry {
                length_um: 520.0, // 2000 cells, 12000 holes
                ..WaveguideGeometry::reference()
            };
            let real = generate_disorder(&geom, sigma, seed).unwrap();
            let n = real.holes.len() as f64;
            let rms = (real.holes.iter().map(|h| h.dx_nm * h.dx_nm).sum::<f64>() / n).sqrt();
            let expect = sigma * geom.lattice_constant_nm;
            prop_assert!((rms / expect - 1.0).abs() < 0.05,
                "rms {} vs sigma*a {}", rms, expect);
            prop_assert_eq!(real.exceeds_probed_range, sigma > PROBED_SIGMA_MAX);
        }
    }
}
