//! Ensemble simulation: one transport spectrum and resonance summary per
//! disorder realization, plus an index of the whole run.

use std::path::Path;

use anderson_qed::geometry::generate_disorder;
use anderson_qed::io::{fmt_float, resonances_to_json, write_json, write_transport_csv};
use anderson_qed::rng::derive_seed;
use anderson_qed::transport::{
    apply_spectral_irf, find_resonances, transmission_spectrum, CellBlueprint, ResonanceSearch,
};
use anderson_qed::util::percentile;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError};
use crate::manifest::OutputWriter;

struct Job {
    sigma_index: usize,
    realization: u32,
    rel_csv: String,
    rel_json: String,
    skip: bool,
}

struct JobOutput {
    csv: Option<Vec<u8>>,
    json: Option<Vec<u8>>,
    resonance_wavelengths: Vec<f64>,
}

pub fn run(
    config: &ExperimentConfig,
    config_sha256: &str,
    out_root: &Path,
) -> Result<(), CliError> {
    let geometry = config.geometry.build();
    let model = config.dispersion.build().map_err(from_core)?;
    let params = config.dispersion.scatter_params();
    let grid = config.dispersion.wavelength_grid();
    let search = ResonanceSearch {
        spectral_irf_fwhm_nm: config.analysis.spectral_irf_fwhm_nm,
        ..ResonanceSearch::default()
    };
    let master = config.disorder.master_seed;

    let mut writer = OutputWriter::open(
        &out_root.join("simulate"),
        "simulate",
        config_sha256,
        master,
    )?;

    let mut jobs = Vec::new();
    for (si, &sigma) in config.disorder.sigma.iter().enumerate() {
        let dir = format!("sigma_{}", fmt_float(sigma));
        for ri in 0..config.disorder.n_realizations {
            let mut job = Job {
                sigma_index: si,
                realization: ri,
                rel_csv: format!("{dir}/realization_{ri:04}.transport.csv"),
                rel_json: format!("{dir}/realization_{ri:04}.resonances.json"),
                skip: false,
            };
            // Resume needs the resonance list back from disk, so the JSON
            // must survive intact, and the CSV too when it is enabled.
            job.skip = config.output.write_json
                && writer.resume(&job.rel_json)
                && (!config.output.write_csv || writer.resume(&job.rel_csv));
            jobs.push(job);
        }
    }

    let sim_root = writer.root().to_path_buf();
    let outputs: Vec<JobOutput> = jobs
        .par_iter()
        .map(|job| -> Result<JobOutput, CliError> {
            if job.skip {
                return Ok(JobOutput {
                    csv: None,
                    json: None,
                    resonance_wavelengths: read_back_wavelengths(&sim_root.join(&job.rel_json)),
                });
            }
            let sigma = config.disorder.sigma[job.sigma_index];
            let tag = ((job.sigma_index as u64) << 32) | job.realization as u64;
            let seed = derive_seed(master, tag);
            let realization = generate_disorder(&geometry, sigma, seed).map_err(from_core)?;
            let blueprint =
                CellBlueprint::new(&geometry, &realization, params).map_err(from_core)?;
            let mut result = transmission_spectrum(&blueprint, &model, &grid).map_err(from_core)?;
            apply_spectral_irf(&mut result, config.analysis.spectral_irf_fwhm_nm)
                .map_err(from_core)?;
            let resonances = find_resonances(&result, &search).map_err(from_core)?;

            let csv = if config.output.write_csv {
                let mut buf = Vec::new();
                write_transport_csv(&mut buf, &result, config.statistics.spatial_bin_um)
                    .map_err(from_core)?;
                Some(buf)
            } else {
                None
            };
            let json = if config.output.write_json {
                let mut buf = Vec::new();
                write_json(&mut buf, &resonances_to_json(&resonances)).map_err(from_core)?;
                Some(buf)
            } else {
                None
            };
            Ok(JobOutput {
                csv,
                json,
                resonance_wavelengths: resonances.iter().map(|m| m.wavelength_nm).collect(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    for (job, out) in jobs.iter().zip(&outputs) {
        if let Some(bytes) = &out.csv {
            writer.write(&job.rel_csv, bytes)?;
        }
        if let Some(bytes) = &out.json {
            writer.write(&job.rel_json, bytes)?;
        }
    }

    let summary = summarize(config, &jobs, &outputs);
    let mut buf = Vec::new();
    write_json(&mut buf, &summary).map_err(from_core)?;
    writer.write("summary.json", &buf)?;
    writer.finish()
}

/// Resonance wavelengths of a realization that was resumed from disk.
fn read_back_wavelengths(path: &Path) -> Vec<f64> {
    let Ok(bytes) = std::fs::read(path) else {
        return Vec::new();
    };
    let Ok(value) = serde_json::from_slice::<serde_json::Value>(&bytes) else {
        return Vec::new();
    };
    value["modes"]
        .as_array()
        .map(|modes| {
            modes
                .iter()
                .filter_map(|m| m["lambda0_nm"].as_f64())
                .collect()
        })
        .unwrap_or_default()
}

/// Per-sigma index: how many localized modes appeared and how wide a band
/// they cover. The central 90% span is robust against single outliers.
fn summarize(
    config: &ExperimentConfig,
    jobs: &[Job],
    outputs: &[JobOutput],
) -> serde_json::Value {
    let groups: Vec<serde_json::Value> = config
        .disorder
        .sigma
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            let mut wavelengths: Vec<f64> = jobs
                .iter()
                .zip(outputs)
                .filter(|(job, _)| job.sigma_index == si)
                .flat_map(|(_, out)| out.resonance_wavelengths.iter().copied())
                .collect();
            wavelengths.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let n = wavelengths.len();
            let (lambda_min, lambda_max, span) = if n == 0 {
                (serde_json::Value::Null, serde_json::Value::Null, 0.0)
            } else {
                let p5 = percentile(&wavelengths, 5.0);
                let p95 = percentile(&wavelengths, 95.0);
                (
                    serde_json::json!(wavelengths[0]),
                    serde_json::json!(wavelengths[n - 1]),
                    p95 - p5,
                )
            };
            serde_json::json!({
                "sigma": sigma,
                "n_realizations": config.disorder.n_realizations,
                "n_resonances": n,
                "resonances_per_realization": n as f64 / config.disorder.n_realizations as f64,
                "lambda_min_nm": lambda_min,
                "lambda_max_nm": lambda_max,
                "band_span_p5_p95_nm": span,
            })
        })
        .collect();
    serde_json::json!({
        "schema_version": anderson_qed::SCHEMA_VERSION,
        "sigma_groups": groups,
    })
}
