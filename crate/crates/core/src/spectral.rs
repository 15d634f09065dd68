//! Emission-spectrum analysis: simultaneous multi-peak fits of
//! instrument-broadened lines, and the temperature tuning that brings an
//! emitter line through a cavity resonance.

use crate::error::{Error, Result};
use crate::fitting::profiles::{combined_fwhm, uniform_step, voigt_on_grid};
use crate::fitting::{find_peaks, minimize, NmOptions};

pub const MAX_PEAKS: usize = 8;

/// One fitted emission line. The width is the intrinsic Lorentzian FWHM
/// with the instrument response already deconvolved by construction.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PeakFit {
    pub center_nm: f64,
    pub intrinsic_fwhm_nm: f64,
    pub q_factor: f64,
    /// Peak height of the bare line before instrument broadening.
    pub amplitude: f64,
    /// Set when the line is too narrow for the grid or overlaps a
    /// neighbor within half the instrument width.
    pub unresolved: bool,
}

/// Simultaneous fit of several lines sharing one flat baseline.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectrumFit {
    /// Sorted by center wavelength.
    pub peaks: Vec<PeakFit>,
    pub baseline: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

/// Least-squares fit of `n_peaks` instrument-broadened Lorentzians plus a
/// shared flat baseline. Initial centers come from prominence-filtered
/// local maxima; if the data shows fewer bumps than requested, the extra
/// starts are staggered around the strongest one.
pub fn fit_spectrum(
    wavelength_nm: &[f64],
    intensity: &[f64],
    n_peaks: usize,
    irf_fwhm_nm: f64,
) -> Result<SpectrumFit> {
    if n_peaks == 0 || n_peaks > MAX_PEAKS {
        return Err(Error::InvalidParameter(format!(
            "peak count must sit in [1, {MAX_PEAKS}], got {n_peaks}"
        )));
    }
    if wavelength_nm.len() != intensity.len() {
        return Err(Error::InvalidParameter(
            "wavelength and intensity lengths differ".into(),
        ));
    }
    if !(irf_fwhm_nm >= 0.0) {
        return Err(Error::InvalidParameter(
            "instrument width must be non-negative".into(),
        ));
    }
    if intensity.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "intensity contains non-finite samples".into(),
        ));
    }
    let step = uniform_step(wavelength_nm)?;
    let n = wavelength_nm.len();
    if n < 3 * n_peaks + 4 {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot constrain {n_peaks} peaks"
        )));
    }

    let lo = intensity.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::InsufficientData("spectrum is flat".into()));
    }

    // Candidate centers, tallest first.
    let found = find_peaks(intensity, 0.05, lo + 0.1 * range);
    let mut centers: Vec<usize> = found.iter().map(|p| p.index).take(n_peaks).collect();
    if centers.is_empty() {
        centers.push(
            intensity
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap(),
        );
    }
    let spread = (irf_fwhm_nm.max(4.0 * step) / step).round() as usize;
    while centers.len() < n_peaks {
        // Stagger extra starts around the strongest bump.
        let k = centers.len() - found.len().max(1) + 1;
        let side = if k % 2 == 1 { 1 } else { -1 };
        let offset = side * ((k as isize + 1) / 2) * spread as isize;
        let idx = (centers[0] as isize + offset).clamp(0, n as isize - 1) as usize;
        centers.push(idx);
    }

    // Half-max crossing width around a candidate, in grid steps.
    let est_width = |idx: usize| -> f64 {
        let half = lo + 0.5 * (intensity[idx] - lo);
        let mut left = idx;
        while left > 0 && intensity[left] > half {
            left -= 1;
        }
        let mut right = idx;
        while right + 1 < n && intensity[right] > half {
            right += 1;
        }
        ((right - left) as f64).max(1.0) * step
    };

    let baseline0 = lo;
    let mut theta0 = Vec::with_capacity(3 * n_peaks + 1);
    let mut steps = Vec::with_capacity(3 * n_peaks + 1);
    for &idx in &centers {
        let est = est_width(idx);
        let lorentz0 = (est - irf_fwhm_nm).max(0.5 * step);
        theta0.push(wavelength_nm[idx]);
        theta0.push(lorentz0.ln());
        theta0.push((intensity[idx] - baseline0).max(1e-3 * range).ln());
        steps.push(est.max(step));
        steps.push(0.5);
        steps.push(0.5);
    }
    theta0.push(baseline0);
    steps.push(0.1 * range);

    let model = |theta: &[f64]| -> Option<Vec<f64>> {
        let mut y = vec![theta[3 * n_peaks]; n];
        for k in 0..n_peaks {
            let center = theta[3 * k];
            let fwhm = theta[3 * k + 1].exp();
            let amp = theta[3 * k + 2].exp();
            let line = voigt_on_grid(wavelength_nm, center, fwhm, irf_fwhm_nm, amp).ok()?;
            for (yy, l) in y.iter_mut().zip(&line) {
                *yy += l;
            }
        }
        Some(y)
    };
    let sse = |theta: &[f64]| -> f64 {
        match model(theta) {
            Some(y) => y
                .iter()
                .zip(intensity)
                .map(|(m, d)| (m - d) * (m - d))
                .sum(),
            None => f64::INFINITY,
        }
    };

    let res = minimize(sse, &theta0, &steps, &NmOptions::default());
    if !res.fval.is_finite() {
        return Err(Error::FitFailure(
            "spectrum fit did not reach a finite residual".into(),
        ));
    }
    let residual_rms = (res.fval / n as f64).sqrt();

    let mut peaks: Vec<PeakFit> = (0..n_peaks)
        .map(|k| {
            let center = res.x[3 * k];
            let fwhm = res.x[3 * k + 1].exp();
            PeakFit {
                center_nm: center,
                intrinsic_fwhm_nm: fwhm,
                q_factor: center / fwhm,
                amplitude: res.x[3 * k + 2].exp(),
                unresolved: combined_fwhm(fwhm, irf_fwhm_nm) < 2.0 * step,
            }
        })
        .collect();
    peaks.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));
    for i in 0..peaks.len() {
        for j in i + 1..peaks.len() {
            if (peaks[j].center_nm - peaks[i].center_nm).abs() < 0.5 * irf_fwhm_nm {
                peaks[i].unresolved = true;
                peaks[j].unresolved = true;
            }
        }
    }

    Ok(SpectrumFit {
        peaks,
        baseline: res.x[3 * n_peaks],
        residual_rms,
        converged: res.converged,
    })
}

/// Linear temperature tuning of the emitter line and a cavity resonance,
/// both anchored at a common reference temperature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TuningModel {
    pub reference_temperature_k: f64,
    pub qd_wavelength_nm: f64,
    pub qd_slope_nm_per_k: f64,
    pub cavity_wavelength_nm: f64,
    pub cavity_slope_nm_per_k: f64,
}

impl TuningModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_temperature_k > 0.0) {
            return Err(Error::InvalidParameter(
                "reference temperature must be positive".into(),
            ));
        }
        if !(self.qd_wavelength_nm > 0.0) || !(self.cavity_wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter(
                "line positions must be positive".into(),
            ));
        }
        if !self.qd_slope_nm_per_k.is_finite() || !self.cavity_slope_nm_per_k.is_finite() {
            return Err(Error::InvalidParameter("tuning slopes must be finite".into()));
        }
        Ok(())
    }

    pub fn qd_wavelength_at(&self, temperature_k: f64) -> f64 {
        self.qd_wavelength_nm + self.qd_slope_nm_per_k * (temperature_k - self.reference_temperature_k)
    }

    pub fn cavity_wavelength_at(&self, temperature_k: f64) -> f64 {
        self.cavity_wavelength_nm
            + self.cavity_slope_nm_per_k * (temperature_k - self.reference_temperature_k)
    }
}

/// Intersection of two lines given by their values and slopes at a common
/// abscissa. Errors on exactly parallel lines.
pub fn line_crossing(
    x0: f64,
    y1_at_x0: f64,
    slope1: f64,
    y2_at_x0: f64,
    slope2: f64,
) -> Result<(f64, f64)> {
    if slope1 == slope2 {
        return Err(Error::InvalidParameter(
            "lines are parallel and never cross".into(),
        ));
    }
    let x = x0 + (y2_at_x0 - y1_at_x0) / (slope1 - slope2);
    Ok((x, y1_at_x0 + slope1 * (x - x0)))
}

/// Both tuning curves on a temperature grid plus the crossing point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CrossingReport {
    pub crossing_temperature_k: f64,
    pub crossing_wavelength_nm: f64,
    /// Whether the crossing lies inside the sampled temperature range.
    pub in_range: bool,
    pub temperatures_k: Vec<f64>,
    pub qd_nm: Vec<f64>,
    pub cavity_nm: Vec<f64>,
    pub detuning_nm: Vec<f64>,
}

/// Evaluate the tuning curves on `temperatures_k` and locate where the
/// emitter crosses the cavity. A crossing outside the sampled range is
/// reported, not an error.
pub fn temperature_crossing(model: &TuningModel, temperatures_k: &[f64]) -> Result<CrossingReport> {
    model.validate()?;
    if temperatures_k.is_empty() {
        return Err(Error::InvalidParameter("empty temperature grid".into()));
    }
    if temperatures_k.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(
            "temperatures must be positive".into(),
        ));
    }
    let (t_cross, lambda_cross) = line_crossing(
        model.reference_temperature_k,
        model.qd_wavelength_nm,
        model.qd_slope_nm_per_k,
        model.cavity_wavelength_nm,
        model.cavity_slope_nm_per_k,
    )?;
    let lo = temperatures_k.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = temperatures_k
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let qd: Vec<f64> = temperatures_k
        .iter()
        .map(|&t| model.qd_wavelength_at(t))
        .collect();
    let cavity: Vec<f64> = temperatures_k
        .iter()
        .map(|&t| model.cavity_wavelength_at(t))
        .collect();
    let detuning: Vec<f64> = qd.iter().zip(&cavity).map(|(q, c)| q - c).collect();
    Ok(CrossingReport {
        crossing_temperature_k: t_cross,
        crossing_wavelength_nm: lambda_cross,
        in_range: (lo..=hi).contains(&t_cross),
        temperatures_k: temperatures_k.to_vec(),
        qd_nm: qd,
        cavity_nm: cavity,
        detuning_nm: detuning,
    })
}
