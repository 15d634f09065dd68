//! Plain-text exports: CSV tables and JSON summaries.
//!
//! Every float is written with its shortest round-trip representation, so
//! a rerun with identical inputs produces byte-identical files. Metadata
//! rides in `#`-prefixed comment lines above the CSV header; JSON
//! documents all carry the schema_version field.

use std::io::Write;

use crate::decay::{DecayCurve, DecayFit};
use crate::error::Result;
use crate::geometry::{DisorderRealization, WaveguideGeometry};
use crate::qed::DetuningCurve;
use crate::spectral::{CrossingReport, SpectrumFit};
use crate::stats::{CriterionReport, EnsembleStats};
use crate::transport::{ModeResonance, TransportResult};
use crate::SCHEMA_VERSION;

/// Shortest representation that parses back to the same f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

/// Serialize a JSON document with a stable field order and a trailing
/// newline.
pub fn write_json<W: Write>(mut w: W, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| crate::Error::Io(format!("JSON serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Hole displacement table with the generating parameters up front.
pub fn write_disorder_csv<W: Write>(
    mut w: W,
    geometry: &WaveguideGeometry,
    realization: &DisorderRealization,
) -> Result<()> {
    writeln!(w, "# a_nm={}", fmt_float(geometry.lattice_constant_nm))?;
    writeln!(w, "# r_nm={}", fmt_float(geometry.hole_radius_nm))?;
    writeln!(w, "# sigma={}", fmt_float(realization.sigma_fraction))?;
    writeln!(w, "# seed={}", realization.seed)?;
    writeln!(w, "hole_index,row,ideal_x_nm,ideal_y_nm,dx_nm,dy_nm")?;
    for (i, h) in realization.holes.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i,
            h.row,
            fmt_float(h.ideal_x_nm),
            fmt_float(h.ideal_y_nm),
            fmt_float(h.dx_nm),
            fmt_float(h.dy_nm)
        )?;
    }
    Ok(())
}

/// Transmission spectrum with one intensity column per spatial bin.
pub fn write_transport_csv<W: Write>(
    mut w: W,
    result: &TransportResult,
    bin_um: f64,
) -> Result<()> {
    let (bin_centers, binned) = result.binned_intensity(bin_um)?;
    writeln!(w, "# bin_um={}", fmt_float(bin_um))?;
    write!(w, "wavelength_nm,T")?;
    for c in &bin_centers {
        write!(w, ",I_{}um", fmt_float(*c))?;
    }
    writeln!(w)?;
    for (i, &wl) in result.wavelength_nm.iter().enumerate() {
        write!(w, "{},{}", fmt_float(wl), fmt_float(result.transmission[i]))?;
        for bin in &binned[i] {
            write!(w, ",{}", fmt_float(*bin))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Resonance summary keyed the way downstream tooling expects.
pub fn resonances_to_json(resonances: &[ModeResonance]) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "modes": resonances
            .iter()
            .map(|m| {
                serde_json::json!({
                    "lambda0_nm": m.wavelength_nm,
                    "Q": m.q_factor,
                    "extent_um": m.extent_um,
                    "centroid_um": m.centroid_um,
                    "intrinsic_fwhm_nm": m.intrinsic_fwhm_nm,
                    "peak_transmission": m.peak_transmission,
                    "unresolved": m.unresolved,
                })
            })
            .collect::<Vec<_>>(),
    })
}

/// Normalized-intensity histogram, log-centered bin representative.
pub fn write_histogram_csv<W: Write>(mut w: W, stats: &EnsembleStats) -> Result<()> {
    writeln!(w, "# n_samples={}", stats.n_samples)?;
    writeln!(w, "# variance={}", fmt_float(stats.variance))?;
    writeln!(w, "s_bin_center,pdf,counts")?;
    let h = &stats.histogram;
    for i in 0..h.pdf.len() {
        let center = (h.bin_edges[i] * h.bin_edges[i + 1]).sqrt();
        writeln!(
            w,
            "{},{},{}",
            fmt_float(center),
            fmt_float(h.pdf[i]),
            h.counts[i]
        )?;
    }
    Ok(())
}

/// Localization verdict with its bootstrap interval.
pub fn verdict_to_json(report: &CriterionReport) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "variance": report.variance,
        "threshold": report.threshold,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "n_samples": report.n_samples,
        "verdict": if report.localized { "localized" } else { "not_localized" },
        "borderline_flag": report.borderline,
    })
}

/// Decay rate versus detuning with the per-channel breakdown.
pub fn write_detuning_csv<W: Write>(mut w: W, curve: &DetuningCurve) -> Result<()> {
    writeln!(
        w,
        "# reference_wavelength_nm={}",
        fmt_float(curve.reference_wavelength_nm)
    )?;
    write!(w, "detuning_nm,gamma_ns_inv,background_ns_inv")?;
    for k in 0..curve.cavity_ns_inv.len() {
        write!(w, ",cavity_{k}_ns_inv")?;
    }
    writeln!(w)?;
    for i in 0..curve.detuning_nm.len() {
        write!(
            w,
            "{},{},{}",
            fmt_float(curve.detuning_nm[i]),
            fmt_float(curve.total_ns_inv[i]),
            fmt_float(curve.background_ns_inv[i])
        )?;
        for cavity in &curve.cavity_ns_inv {
            write!(w, ",{}", fmt_float(cavity[i]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Arrival-time histogram at bin centers.
pub fn write_decay_csv<W: Write>(mut w: W, curve: &DecayCurve) -> Result<()> {
    writeln!(w, "# n_cycles={}", curve.n_cycles)?;
    writeln!(
        w,
        "# repetition_period_ns={}",
        fmt_float(curve.repetition_period_ns)
    )?;
    writeln!(w, "# wrap_applied={}", curve.wrap_applied)?;
    writeln!(w, "time_ps,counts")?;
    for (t, c) in curve.bin_centers_ps().iter().zip(&curve.counts) {
        writeln!(w, "{},{}", fmt_float(*t), fmt_float(*c))?;
    }
    Ok(())
}

/// Decay-fit report; `loglik` is the maximized log-likelihood.
pub fn decay_fit_to_json(fit: &DecayFit) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "components": fit
            .components
            .iter()
            .map(|c| {
                serde_json::json!({
                    "rate_ns_inv": c.rate_ns_inv,
                    "rate_stderr_ns_inv": c.rate_stderr_ns_inv,
                    "amplitude_per_cycle": c.amplitude_per_cycle,
                    "amplitude_stderr_per_cycle": c.amplitude_stderr_per_cycle,
                })
            })
            .collect::<Vec<_>>(),
        "background": fit.background_per_cycle_ps,
        "irf_center_ps": fit.irf_center_ps,
        "loglik": -fit.neg_log_likelihood,
        "deviance": fit.deviance,
        "converged": fit.converged,
        "warnings": fit.warnings,
    })
}

/// Spectrum-fit report.
pub fn spectrum_fit_to_json(fit: &SpectrumFit) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "peaks": fit
            .peaks
            .iter()
            .map(|p| {
                serde_json::json!({
                    "center_nm": p.center_nm,
                    "intrinsic_fwhm_nm": p.intrinsic_fwhm_nm,
                    "Q": p.q_factor,
                    "amplitude": p.amplitude,
                    "unresolved": p.unresolved,
                })
            })
            .collect::<Vec<_>>(),
        "baseline": fit.baseline,
        "residual_rms": fit.residual_rms,
        "converged": fit.converged,
    })
}

/// Tuning curves and the crossing point as a CSV table.
pub fn write_crossing_csv<W: Write>(mut w: W, report: &CrossingReport) -> Result<()> {
    writeln!(
        w,
        "# crossing_temperature_k={}",
        fmt_float(report.crossing_temperature_k)
    )?;
    writeln!(
        w,
        "# crossing_wavelength_nm={}",
        fmt_float(report.crossing_wavelength_nm)
    )?;
    writeln!(w, "# in_range={}", report.in_range)?;
    writeln!(w, "temperature_k,qd_nm,cavity_nm,detuning_nm")?;
    for i in 0..report.temperatures_k.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(report.temperatures_k[i]),
            fmt_float(report.qd_nm[i]),
            fmt_float(report.cavity_nm[i]),
            fmt_float(report.detuning_nm[i])
        )?;
    }
    Ok(())
}
