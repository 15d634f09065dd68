//! Emitter-cavity rate formulas: Purcell enhancement, mode-volume
//! inversion, beta factor, and the detuning dependence of the total decay
//! rate including the slow-light waveguide background.
//!
//! Everything here is closed-form arithmetic in the weak-coupling (rate)
//! regime; cavities superpose additively with no coherent cross-terms.

use crate::dispersion::{angular_frequency, DispersionModel};
use crate::error::{Error, Result};

/// Vertical effective extent of the guided mode, calibrated so a mode
/// volume of 1 um^3 with the 1.3 um transverse width maps to a 25 um
/// length along the waveguide.
pub const DEFAULT_H_EFF_UM: f64 = 0.0308;

/// A localized mode acting as a cavity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CavityMode {
    pub q_factor: f64,
    pub mode_volume_um3: f64,
    pub wavelength_nm: f64,
    pub refractive_index: f64,
}

impl CavityMode {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_factor > 0.0) {
            return Err(Error::InvalidParameter("Q must be positive".into()));
        }
        if !(self.mode_volume_um3 > 0.0) {
            return Err(Error::InvalidParameter(
                "mode volume must be positive".into(),
            ));
        }
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "cavity wavelength must be positive".into(),
            ));
        }
        if !(self.refractive_index > 0.0) {
            return Err(Error::InvalidParameter(
                "refractive index must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A quantum-dot emitter: its line position, dipole overlap with the
/// cavity field, and its rate in the homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QdEmitter {
    pub wavelength_nm: f64,
    /// |d.f(r)|^2 / |d|^2, in [0, 1].
    pub dipole_overlap: f64,
    pub gamma_hom_ns_inv: f64,
}

impl QdEmitter {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "emitter wavelength must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.dipole_overlap) {
            return Err(Error::InvalidParameter(
                "dipole overlap must sit in [0, 1]".into(),
            ));
        }
        if !(self.gamma_hom_ns_inv > 0.0) {
            return Err(Error::InvalidParameter(
                "homogeneous rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Peak Purcell factor 3 Q (lambda/n)^3 / (4 pi^2 V) at zero detuning and
/// perfect dipole overlap. lambda/n is converted to micrometers so the
/// ratio with V (um^3) is dimensionless.
pub fn peak_purcell(cavity: &CavityMode) -> Result<f64> {
    cavity.validate()?;
    let lam_over_n_um = cavity.wavelength_nm / cavity.refractive_index / 1000.0;
    Ok(3.0 * cavity.q_factor * lam_over_n_um.powi(3)
        / (4.0 * std::f64::consts::PI * std::f64::consts::PI * cavity.mode_volume_um3))
}

/// Purcell factor for an emitter at `emitter_wavelength_nm` with dipole
/// overlap `eta`: the peak value times eta over the Lorentzian detuning
/// factor 1 + 4 Q^2 (w_q/w - 1)^2, with exact frequencies.
pub fn purcell_factor_at(
    cavity: &CavityMode,
    eta: f64,
    emitter_wavelength_nm: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(
            "dipole overlap must sit in [0, 1]".into(),
        ));
    }
    if !(emitter_wavelength_nm > 0.0) {
        return Err(Error::InvalidParameter(
            "emitter wavelength must be positive".into(),
        ));
    }
    let peak = peak_purcell(cavity)?;
    let w_q = angular_frequency(emitter_wavelength_nm);
    let w_c = angular_frequency(cavity.wavelength_nm);
    let x = w_q / w_c - 1.0;
    let lorentz = 1.0 + 4.0 * cavity.q_factor * cavity.q_factor * x * x;
    Ok(peak * eta / lorentz)
}

/// Purcell factor experienced by `emitter` in `cavity`.
pub fn purcell_factor(cavity: &CavityMode, emitter: &QdEmitter) -> Result<f64> {
    emitter.validate()?;
    purcell_factor_at(cavity, emitter.dipole_overlap, emitter.wavelength_nm)
}

/// Upper bound on the mode volume from a measured Purcell factor,
/// assuming zero detuning and perfect overlap: V = 3 Q (lambda/n)^3 /
/// (4 pi^2 F_p). Any residual detuning or imperfect overlap only makes
/// the true V smaller.
pub fn invert_mode_volume(
    f_p_measured: f64,
    q_factor: f64,
    wavelength_nm: f64,
    refractive_index: f64,
) -> Result<f64> {
    if !(f_p_measured > 0.0) {
        return Err(Error::InvalidParameter(
            "measured Purcell factor must be positive".into(),
        ));
    }
    let unit = CavityMode {
        q_factor,
        mode_volume_um3: 1.0,
        wavelength_nm,
        refractive_index,
    };
    Ok(peak_purcell(&unit)? / f_p_measured)
}

/// Length of the mode along the waveguide from its volume and transverse
/// effective extents.
pub fn cavity_length(v_um3: f64, w_eff_um: f64, h_eff_um: f64) -> Result<f64> {
    if !(v_um3 > 0.0) {
        return Err(Error::InvalidParameter(
            "mode volume must be positive".into(),
        ));
    }
    if !(w_eff_um > 0.0) || !(h_eff_um > 0.0) {
        return Err(Error::InvalidParameter(
            "effective extents must be positive".into(),
        ));
    }
    Ok(v_um3 / (w_eff_um * h_eff_um))
}

/// Separable decomposition of the mode volume into effective extents.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModeExtent {
    pub w_eff_um: f64,
    pub h_eff_um: f64,
    pub l_mode_um: f64,
}

impl ModeExtent {
    pub fn from_volume(v_um3: f64, w_eff_um: f64, h_eff_um: f64) -> Result<ModeExtent> {
        Ok(ModeExtent {
            w_eff_um,
            h_eff_um,
            l_mode_um: cavity_length(v_um3, w_eff_um, h_eff_um)?,
        })
    }

    pub fn volume_um3(&self) -> f64 {
        self.w_eff_um * self.h_eff_um * self.l_mode_um
    }
}

/// Fraction of emission funneled into the localized mode.
pub fn beta_factor(gamma_on_ns_inv: f64, gamma_off_ns_inv: f64) -> Result<f64> {
    if !(gamma_on_ns_inv > 0.0) {
        return Err(Error::InvalidParameter(
            "on-resonance rate must be positive".into(),
        ));
    }
    if !(gamma_off_ns_inv >= 0.0) {
        return Err(Error::InvalidParameter(
            "off-resonance rate must be non-negative".into(),
        ));
    }
    if gamma_off_ns_inv > gamma_on_ns_inv {
        return Err(Error::InconsistentRates {
            gamma_on_ns_inv,
            gamma_off_ns_inv,
        });
    }
    Ok((gamma_on_ns_inv - gamma_off_ns_inv) / gamma_on_ns_inv)
}

/// On/off resonance rates with the derived mode rate and beta. The
/// radiative/non-radiative split of the background is only available when
/// a floor estimate is supplied at extraction time.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayRates {
    pub gamma_on_ns_inv: f64,
    pub gamma_off_ns_inv: f64,
    /// Rate into the localized mode, gamma_on - gamma_off.
    pub gamma_mode_ns_inv: f64,
    pub gamma_rad_ns_inv: Option<f64>,
    pub gamma_nr_ns_inv: Option<f64>,
    pub beta: f64,
}

impl DecayRates {
    pub fn from_rates(gamma_on_ns_inv: f64, gamma_off_ns_inv: f64) -> Result<DecayRates> {
        let beta = beta_factor(gamma_on_ns_inv, gamma_off_ns_inv)?;
        Ok(DecayRates {
            gamma_on_ns_inv,
            gamma_off_ns_inv,
            gamma_mode_ns_inv: gamma_on_ns_inv - gamma_off_ns_inv,
            gamma_rad_ns_inv: None,
            gamma_nr_ns_inv: None,
            beta,
        })
    }
}

/// Group-index scaling of the waveguide coupling term, pinned to a
/// reference wavelength (the band center by convention) where the factor
/// is exactly 1.
#[derive(Debug, Clone)]
pub struct NgScaling {
    pub model: DispersionModel,
    pub reference_wavelength_nm: f64,
    ng_ref: f64,
}

impl NgScaling {
    pub fn new(model: DispersionModel, reference_wavelength_nm: f64) -> Result<NgScaling> {
        let ng_ref = model.group_index(reference_wavelength_nm)?;
        Ok(NgScaling {
            model,
            reference_wavelength_nm,
            ng_ref,
        })
    }

    pub fn factor_at(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(self.model.group_index(wavelength_nm)? / self.ng_ref)
    }
}

/// Decay channels other than the localized mode. The waveguide term
/// scales with the group index when a dispersion model is attached;
/// otherwise it is flat.
#[derive(Debug, Clone)]
pub struct BackgroundRates {
    pub gamma_nr_ns_inv: f64,
    pub gamma_rad_ns_inv: f64,
    /// Waveguide coupling rate at the reference wavelength.
    pub gamma_wg_ns_inv: f64,
    pub ng_scaling: Option<NgScaling>,
}

impl BackgroundRates {
    pub fn flat(gamma_nr_ns_inv: f64, gamma_rad_ns_inv: f64, gamma_wg_ns_inv: f64) -> Self {
        BackgroundRates {
            gamma_nr_ns_inv,
            gamma_rad_ns_inv,
            gamma_wg_ns_inv,
            ng_scaling: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("non-radiative", self.gamma_nr_ns_inv),
            ("radiative", self.gamma_rad_ns_inv),
            ("waveguide", self.gamma_wg_ns_inv),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} background rate must be non-negative"
                )));
            }
        }
        Ok(())
    }

    /// Total background rate for an emitter at the given wavelength.
    pub fn rate_at(&self, wavelength_nm: f64) -> Result<f64> {
        self.validate()?;
        let wg_factor = match &self.ng_scaling {
            Some(s) => s.factor_at(wavelength_nm)?,
            None => 1.0,
        };
        Ok(self.gamma_nr_ns_inv + self.gamma_rad_ns_inv + self.gamma_wg_ns_inv * wg_factor)
    }
}

/// A cavity together with the emitter's dipole overlap to it.
#[derive(Debug, Clone, Copy)]
pub struct CoupledCavity {
    pub mode: CavityMode,
    pub dipole_overlap: f64,
}

/// Total decay rate versus detuning, with the per-channel breakdown kept
/// for export and diagnostics.
#[derive(Debug, Clone)]
pub struct DetuningCurve {
    /// Detuning of the emitter from the reference wavelength, nm.
    pub detuning_nm: Vec<f64>,
    pub wavelength_nm: Vec<f64>,
    pub reference_wavelength_nm: f64,
    pub total_ns_inv: Vec<f64>,
    pub background_ns_inv: Vec<f64>,
    /// cavity_ns_inv[k][i]: contribution of cavity k at grid point i.
    pub cavity_ns_inv: Vec<Vec<f64>>,
}

/// Evaluate gamma(detuning) = background + sum_k gamma_hom * F_p,k on a
/// detuning grid. The emitter is swept as lambda = reference + detuning;
/// the reference defaults to the first cavity's resonance.
pub fn decay_rate_vs_detuning(
    cavities: &[CoupledCavity],
    gamma_hom_ns_inv: f64,
    background: &BackgroundRates,
    detuning_nm: &[f64],
    reference_wavelength_nm: Option<f64>,
) -> Result<DetuningCurve> {
    if !(gamma_hom_ns_inv > 0.0) {
        return Err(Error::InvalidParameter(
            "homogeneous rate must be positive".into(),
        ));
    }
    if detuning_nm.is_empty() {
        return Err(Error::InvalidParameter("empty detuning grid".into()));
    }
    let reference = match reference_wavelength_nm {
        Some(w) if w > 0.0 => w,
        Some(_) => {
            return Err(Error::InvalidParameter(
                "reference wavelength must be positive".into(),
            ))
        }
        None => match cavities.first() {
            Some(c) => c.mode.wavelength_nm,
            None => {
                return Err(Error::InvalidParameter(
                    "need a cavity or an explicit reference wavelength".into(),
                ))
            }
        },
    };
    for c in cavities {
        c.mode.validate()?;
    }
    background.validate()?;
    let n = detuning_nm.len();
    let mut wavelength_nm = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    let mut bg = Vec::with_capacity(n);
    let mut per_cavity = vec![Vec::with_capacity(n); cavities.len()];
    for &d in detuning_nm {
        let lam = reference + d;
        if !(lam > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "detuning {d} nm puts the emitter at non-positive wavelength"
            )));
        }
        let b = background.rate_at(lam)?;
        let mut sum = b;
        for (k, c) in cavities.iter().enumerate() {
            let term = gamma_hom_ns_inv * purcell_factor_at(&c.mode, c.dipole_overlap, lam)?;
            per_cavity[k].push(term);
            sum += term;
        }
        wavelength_nm.push(lam);
        bg.push(b);
        total.push(sum);
    }
    Ok(DetuningCurve {
        detuning_nm: detuning_nm.to_vec(),
        wavelength_nm,
        reference_wavelength_nm: reference,
        total_ns_inv: total,
        background_ns_inv: bg,
        cavity_ns_inv: per_cavity,
    })
}
