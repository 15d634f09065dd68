//! Cavity QED analysis: scalar report (β, Purcell factor, mode volume and
//! extent), the decay rate versus detuning curve, and the temperature
//! crossing table.

use std::path::Path;

use anderson_qed::io::{write_crossing_csv, write_detuning_csv, write_json};
use anderson_qed::qed::{
    beta_factor, cavity_length, decay_rate_vs_detuning, invert_mode_volume, purcell_factor_at,
    DetuningCurve,
};
use anderson_qed::spectral::temperature_crossing;

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError};
use crate::manifest::OutputWriter;

/// Every scalar the analysis produces, plus the two curves behind them.
pub struct QedAnalysis {
    pub beta: f64,
    pub purcell_measured: f64,
    pub purcell_model: f64,
    pub mode_volume_upper_um3: f64,
    pub l_mode_um: f64,
    pub enhancement_ratio: f64,
    pub curve: DetuningCurve,
    pub crossing: anderson_qed::spectral::CrossingReport,
}

pub fn analyze(config: &ExperimentConfig) -> Result<QedAnalysis, CliError> {
    let q = &config.qed;
    let n = config.geometry.refractive_index;
    let cavity = q.cavity(n);

    let beta = beta_factor(q.gamma_on_ns_inv, q.gamma_off_ns_inv).map_err(from_core)?;
    // The measured enhancement references the homogeneous-medium rate; its
    // inversion bounds the mode volume from above.
    let purcell_measured = q.gamma_on_ns_inv / q.gamma_hom_ns_inv;
    let mode_volume_upper =
        invert_mode_volume(purcell_measured, q.q_factor, q.cavity_wavelength_nm, n)
            .map_err(from_core)?;
    let purcell_model =
        purcell_factor_at(&cavity, q.dipole_overlap, q.cavity_wavelength_nm).map_err(from_core)?;
    let l_mode = cavity_length(q.mode_volume_um3, q.w_eff_um, q.h_eff_um).map_err(from_core)?;

    let cavities = q.cavities(n);
    let background = q.background(&config.dispersion).map_err(from_core)?;
    let curve = decay_rate_vs_detuning(
        &cavities,
        q.gamma_hom_ns_inv,
        &background,
        &q.detuning_grid(),
        None,
    )
    .map_err(from_core)?;
    let ratio = enhancement_ratio(&curve);

    let crossing = temperature_crossing(&config.tuning.build(), &config.tuning.temperature_grid())
        .map_err(from_core)?;

    Ok(QedAnalysis {
        beta,
        purcell_measured,
        purcell_model,
        mode_volume_upper_um3: mode_volume_upper,
        l_mode_um: l_mode,
        enhancement_ratio: ratio,
        curve,
        crossing,
    })
}

pub fn run(
    config: &ExperimentConfig,
    config_sha256: &str,
    out_root: &Path,
) -> Result<(), CliError> {
    let q = &config.qed;
    let analysis = analyze(config)?;

    let report = serde_json::json!({
        "schema_version": anderson_qed::SCHEMA_VERSION,
        "beta": analysis.beta,
        "gamma_on_ns_inv": q.gamma_on_ns_inv,
        "gamma_off_ns_inv": q.gamma_off_ns_inv,
        "gamma_hom_ns_inv": q.gamma_hom_ns_inv,
        "purcell_measured": analysis.purcell_measured,
        "purcell_model_peak": analysis.purcell_model,
        "mode_volume_upper_um3": analysis.mode_volume_upper_um3,
        "mode_volume_config_um3": q.mode_volume_um3,
        "w_eff_um": q.w_eff_um,
        "h_eff_um": q.h_eff_um,
        "l_mode_um": analysis.l_mode_um,
        "enhancement_ratio": analysis.enhancement_ratio,
        "crossing": {
            "crossing_temperature_k": analysis.crossing.crossing_temperature_k,
            "crossing_wavelength_nm": analysis.crossing.crossing_wavelength_nm,
            "in_range": analysis.crossing.in_range,
        },
        "references": {
            "beta": config.references.beta,
            "purcell_factor": config.references.purcell_factor,
            "mode_volume_um3": config.references.mode_volume_um3,
            "mode_extent_um": config.references.mode_extent_um,
            "enhancement_ratio": config.references.enhancement_ratio,
        },
    });

    let mut writer = OutputWriter::open(
        &out_root.join("qed"),
        "qed",
        config_sha256,
        config.disorder.master_seed,
    )?;
    if config.output.write_json {
        let mut buf = Vec::new();
        write_json(&mut buf, &report).map_err(from_core)?;
        writer.write("report.json", &buf)?;
    }
    if config.output.write_csv {
        let mut buf = Vec::new();
        write_detuning_csv(&mut buf, &analysis.curve).map_err(from_core)?;
        writer.write("detuning.csv", &buf)?;
        let mut buf = Vec::new();
        write_crossing_csv(&mut buf, &analysis.crossing).map_err(from_core)?;
        writer.write("crossing.csv", &buf)?;
    }
    writer.finish()
}

/// Peak rate at zero detuning over the flattest tail of the curve. With a
/// detuned secondary mode present, the shorter tail still carries some of
/// its wing, so the far endpoint stands in for the detuned limit.
pub fn enhancement_ratio(curve: &DetuningCurve) -> f64 {
    let at_zero = curve
        .detuning_nm
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.abs()
                .partial_cmp(&b.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| curve.total_ns_inv[i])
        .unwrap_or(f64::NAN);
    let first = *curve.total_ns_inv.first().unwrap_or(&f64::NAN);
    let last = *curve.total_ns_inv.last().unwrap_or(&f64::NAN);
    at_zero / first.min(last)
}
