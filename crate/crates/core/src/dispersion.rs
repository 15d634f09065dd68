//! Slow-light band model near the guided-mode cutoff.
//!
//! The guided band is expanded quadratically about the zone edge:
//! w(k) = w_c + A (k - pi/a)^2, valid for wavelengths shorter than the
//! cutoff wavelength. The group index diverges at the cutoff and is capped
//! by `ng_max_clamp`, standing in for the disorder-limited maximum of a
//! real sample.

use crate::error::{Error, Result};

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Angular frequency (rad/ps) of a vacuum wavelength in nm.
pub fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_NM_PER_PS / wavelength_nm
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionModel {
    /// Cutoff wavelength (nm); longer wavelengths fall in the gap.
    pub cutoff_wavelength_nm: f64,
    /// Band curvature A in nm^2/ps.
    pub curvature_nm2_per_ps: f64,
    /// Upper clamp on the group index.
    pub ng_max_clamp: f64,
}

impl DispersionModel {
    pub fn new(cutoff_wavelength_nm: f64, curvature_nm2_per_ps: f64, ng_max_clamp: f64) -> Result<Self> {
        let model = DispersionModel {
            cutoff_wavelength_nm,
            curvature_nm2_per_ps,
            ng_max_clamp,
        };
        model.validate()?;
        Ok(model)
    }

    /// Calibrate the curvature so that the group index takes the value
    /// `ng_at_anchor` at `anchor_detuning_nm` below the cutoff.
    pub fn with_anchor(
        cutoff_wavelength_nm: f64,
        anchor_detuning_nm: f64,
        ng_at_anchor: f64,
        ng_max_clamp: f64,
    ) -> Result<Self> {
        if !(anchor_detuning_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "anchor detuning must be positive (inside the band)".into(),
            ));
        }
        if !(ng_at_anchor > 0.0) {
            return Err(Error::InvalidParameter(
                "anchor group index must be positive".into(),
            ));
        }
        let omega_c = angular_frequency(cutoff_wavelength_nm);
        let omega_a = angular_frequency(cutoff_wavelength_nm - anchor_detuning_nm);
        // ng = c / (2 sqrt(A dw))  =>  A = c^2 / (4 ng^2 dw)
        let curvature =
            C_NM_PER_PS * C_NM_PER_PS / (4.0 * ng_at_anchor * ng_at_anchor * (omega_a - omega_c));
        DispersionModel::new(cutoff_wavelength_nm, curvature, ng_max_clamp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "cutoff wavelength must be positive".into(),
            ));
        }
        if !(self.curvature_nm2_per_ps > 0.0) {
            return Err(Error::InvalidParameter(
                "band curvature must be positive".into(),
            ));
        }
        if !(self.ng_max_clamp > 1.0) {
            return Err(Error::InvalidParameter(
                "group-index clamp must exceed 1".into(),
            ));
        }
        Ok(())
    }

    fn band_offset(&self, wavelength_nm: f64) -> Result<f64> {
        if !(wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength_nm}"
            )));
        }
        let dw = angular_frequency(wavelength_nm) - angular_frequency(self.cutoff_wavelength_nm);
        if dw < 0.0 {
            return Err(Error::BandGap {
                wavelength_nm,
                cutoff_nm: self.cutoff_wavelength_nm,
            });
        }
        Ok(dw)
    }

    /// Group index n_g = c / (2 sqrt(A (w - w_c))), clamped at `ng_max_clamp`.
    /// Wavelengths beyond the cutoff are a band-gap error.
    pub fn group_index(&self, wavelength_nm: f64) -> Result<f64> {
        let dw = self.band_offset(wavelength_nm)?;
        let raw = C_NM_PER_PS / (2.0 * (self.curvature_nm2_per_ps * dw).sqrt());
        if raw.is_finite() && raw < self.ng_max_clamp {
            Ok(raw)
        } else {
            Ok(self.ng_max_clamp)
        }
    }

    /// Magnitude of the Bloch wavenumber offset from the zone edge, rad/nm.
    /// This carries the wavelength dependence of the propagation phase; the
    /// constant zone-edge part is absorbed into per-cell phase offsets.
    pub fn wavenumber_offset(&self, wavelength_nm: f64) -> Result<f64> {
        let dw = self.band_offset(wavelength_nm)?;
        Ok((dw / self.curvature_nm2_per_ps).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchored() -> DispersionModel {
        DispersionModel::with_anchor(980.0, 5.0, 30.0, 100.0).unwrap()
    }

    #[test]
    fn anchor_is_reproduced_exactly() {
        let m = anchored();
        let ng = m.group_index(975.0).unwrap();
        assert!((ng - 30.0).abs() < 1e-9, "ng {ng}");
    }

    #[test]
    fn group_index_quadruple_detuning_halves_ng() {
        // Scaling law: ng ~ (w - w_c)^(-1/2), so 4x the frequency offset
        // halves the group index exactly.
        let m = anchored();
        let wc = angular_frequency(m.cutoff_wavelength_nm);
        let dw = 10.0; // rad/ps, far enough from the cutoff to stay unclamped
        let lam1 = 2.0 * std::f64::consts::PI * C_NM_PER_PS / (wc + dw);
        let lam4 = 2.0 * std::f64::consts::PI * C_NM_PER_PS / (wc + 4.0 * dw);
        let ng1 = m.group_index(lam1).unwrap();
        let ng4 = m.group_index(lam4).unwrap();
        assert!((ng1 / ng4 - 2.0).abs() < 1e-12, "ratio {}", ng1 / ng4);
    }

    #[test]
    fn twenty_nm_detuning_gives_half_anchor_ng_within_a_percent() {
        // In wavelength terms the scaling is almost, not exactly, a factor
        // of two: frozen expectation 30 / sqrt((20*975)/(5*960)) = 14.884.
        let m = anchored();
        let ng = m.group_index(960.0).unwrap();
        assert!((ng - 15.0).abs() / 15.0 < 0.01, "ng {ng}");
        assert!((ng - 14.884).abs() < 0.01, "ng {ng}");
    }

    #[test]
    fn clamp_applies_at_and_near_cutoff() {
        let m = anchored();
        assert_eq!(m.group_index(980.0).unwrap(), 100.0);
        assert_eq!(m.group_index(979.9999).unwrap(), 100.0);
        // Just inside the clamp crossover the raw value is returned.
        let ng = m.group_index(979.0).unwrap();
        assert!(ng < 100.0 && ng > 30.0, "ng {ng}");
    }

    #[test]
    fn beyond_cutoff_is_a_band_gap_error() {
        let m = anchored();
        match m.group_index(981.0) {
            Err(Error::BandGap { wavelength_nm, cutoff_nm }) => {
                assert_eq!(wavelength_nm, 981.0);
                assert_eq!(cutoff_nm, 980.0);
            }
            other => panic!("expected band-gap error, got {other:?}"),
        }
    }

    #[test]
    fn wavenumber_offset_consistent_with_group_index() {
        // dw/dk = 2 A |k - pi/a|  =>  ng = c / (2 A q) with q the offset.
        let m = anchored();
        let lam = 972.0;
        let q = m.wavenumber_offset(lam).unwrap();
        let ng = m.group_index(lam).unwrap();
        let ng_from_q = C_NM_PER_PS / (2.0 * m.curvature_nm2_per_ps * q);
        assert!((ng - ng_from_q).abs() / ng < 1e-12);
        // Offset grows away from the cutoff.
        assert!(m.wavenumber_offset(968.0).unwrap() > q);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DispersionModel::new(980.0, -1.0, 50.0).is_err());
        assert!(DispersionModel::new(-980.0, 1.0, 50.0).is_err());
        assert!(DispersionModel::new(980.0, 1.0, 0.5).is_err());
        assert!(DispersionModel::with_anchor(980.0, -5.0, 30.0, 50.0).is_err());
        let m = anchored();
        assert!(m.group_index(-1.0).is_err());
    }
}
