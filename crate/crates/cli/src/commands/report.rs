//! Side-by-side comparison of simulated quantities against the reference
//! experiment's published numbers, folding in any localization verdicts
//! already on disk.

use std::path::Path;

use anderson_qed::io::{fmt_float, write_json};

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError};
use crate::manifest::OutputWriter;

pub fn run(
    config: &ExperimentConfig,
    config_sha256: &str,
    out_root: &Path,
) -> Result<(), CliError> {
    let analysis = super::qed::analyze(config)?;
    let refs = &config.references;

    let mut rows = vec![
        row("beta", Some(analysis.beta), refs.beta),
        row(
            "purcell_factor",
            Some(analysis.purcell_measured),
            refs.purcell_factor,
        ),
        row(
            "mode_volume_um3",
            Some(analysis.mode_volume_upper_um3),
            refs.mode_volume_um3,
        ),
        row("mode_extent_um", Some(analysis.l_mode_um), refs.mode_extent_um),
        row(
            "enhancement_ratio",
            Some(analysis.enhancement_ratio),
            refs.enhancement_ratio,
        ),
    ];
    // Ensemble variances are only available once `stats` has run.
    for (sigma, variance) in stats_variances(out_root) {
        rows.push(row(
            &format!("intensity_variance_sigma_{}", fmt_float(sigma)),
            Some(variance),
            refs.intensity_variance,
        ));
    }

    let report = serde_json::json!({
        "schema_version": anderson_qed::SCHEMA_VERSION,
        "rows": rows,
        "crossing": {
            "crossing_temperature_k": analysis.crossing.crossing_temperature_k,
            "crossing_wavelength_nm": analysis.crossing.crossing_wavelength_nm,
            "in_range": analysis.crossing.in_range,
        },
    });

    let mut writer = OutputWriter::open(
        &out_root.join("report"),
        "report",
        config_sha256,
        config.disorder.master_seed,
    )?;
    if config.output.write_json {
        let mut buf = Vec::new();
        write_json(&mut buf, &report).map_err(from_core)?;
        writer.write("report.json", &buf)?;
    }
    if config.output.write_csv {
        let mut csv = String::from("quantity,simulated,reference\n");
        for r in report["rows"].as_array().unwrap() {
            csv.push_str(&format!(
                "{},{},{}\n",
                r["quantity"].as_str().unwrap(),
                r["simulated"].as_f64().map(fmt_float).unwrap_or_default(),
                r["reference"].as_f64().map(fmt_float).unwrap_or_default(),
            ));
        }
        writer.write("report.csv", csv.as_bytes())?;
    }
    writer.finish()
}

fn row(quantity: &str, simulated: Option<f64>, reference: Option<f64>) -> serde_json::Value {
    serde_json::json!({
        "quantity": quantity,
        "simulated": simulated,
        "reference": reference,
    })
}

/// (sigma, variance) pairs from an earlier `stats` run, if any.
fn stats_variances(out_root: &Path) -> Vec<(f64, f64)> {
    let Ok(bytes) = std::fs::read(out_root.join("stats").join("summary.json")) else {
        return Vec::new();
    };
    let Ok(value) = serde_json::from_slice::<serde_json::Value>(&bytes) else {
        return Vec::new();
    };
    value["groups"]
        .as_array()
        .map(|groups| {
            groups
                .iter()
                .filter_map(|g| Some((g["sigma"].as_f64()?, g["variance"].as_f64()?)))
                .collect()
        })
        .unwrap_or_default()
}
