//! Localization statistics over a simulated ensemble read back from disk:
//! normalized-intensity histogram and variance verdict per disorder value.

use std::path::Path;

use anderson_qed::io::{fmt_float, verdict_to_json, write_histogram_csv, write_json};
use anderson_qed::rng::derive_seed;
use anderson_qed::stats::{localization_criterion, normalize_intensity, SpectrumTrace};

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError};
use crate::manifest::OutputWriter;

/// Seed stream tag separating the bootstrap from the disorder draws.
const BOOTSTRAP_TAG: u64 = 0x5354_0000_0000_0000;

pub fn run(
    config: &ExperimentConfig,
    config_sha256: &str,
    out_root: &Path,
) -> Result<(), CliError> {
    let sim_dir = out_root.join("simulate");
    if !sim_dir.is_dir() {
        return Err(CliError::Io(format!(
            "{}: ensemble directory not found; run `simulate` first",
            sim_dir.display()
        )));
    }

    let mut writer = OutputWriter::open(
        &out_root.join("stats"),
        "stats",
        config_sha256,
        config.disorder.master_seed,
    )?;

    let window = (
        config.statistics.window_min_nm,
        config.statistics.window_max_nm,
    );
    let normalization = config.statistics.normalization.build();
    let mut group_summaries = Vec::new();

    for (si, &sigma) in config.disorder.sigma.iter().enumerate() {
        let dir_name = format!("sigma_{}", fmt_float(sigma));
        let group_dir = sim_dir.join(&dir_name);
        let files = transport_files(&group_dir)?;

        let mut traces = Vec::new();
        for (group, path) in files.iter().enumerate() {
            traces.extend(read_traces(path, group as u64)?);
        }
        let stats = normalize_intensity(
            &traces,
            window,
            config.statistics.spatial_bin_um,
            normalization,
        )
        .map_err(from_core)?;
        let seed = derive_seed(config.disorder.master_seed, BOOTSTRAP_TAG | si as u64);
        let report = localization_criterion(&stats, seed).map_err(from_core)?;

        if config.output.write_csv {
            let mut buf = Vec::new();
            write_histogram_csv(&mut buf, &stats).map_err(from_core)?;
            writer.write(&format!("{dir_name}/histogram.csv"), &buf)?;
        }
        let mut verdict = verdict_to_json(&report);
        let obj = verdict.as_object_mut().expect("verdict is an object");
        obj.insert("sigma".into(), serde_json::json!(sigma));
        obj.insert(
            "n_realizations".into(),
            serde_json::json!(files.len() as u64),
        );
        obj.insert(
            "reference_variance".into(),
            serde_json::json!(config.references.intensity_variance),
        );
        if config.output.write_json {
            let mut buf = Vec::new();
            write_json(&mut buf, &verdict).map_err(from_core)?;
            writer.write(&format!("{dir_name}/verdict.json"), &buf)?;
        }
        group_summaries.push(verdict);
    }

    let summary = serde_json::json!({
        "schema_version": anderson_qed::SCHEMA_VERSION,
        "groups": group_summaries,
    });
    let mut buf = Vec::new();
    write_json(&mut buf, &summary).map_err(from_core)?;
    writer.write("summary.json", &buf)?;
    writer.finish()
}

/// Sorted transport CSVs of one ensemble directory. An empty or missing
/// directory is an error naming the path.
fn transport_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| crate::error::io_at(dir, e))?;
    let mut files: Vec<std::path::PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("realization_") && n.ends_with(".transport.csv"))
        })
        .collect();
    if files.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no realization transport files",
            dir.display()
        )));
    }
    files.sort();
    Ok(files)
}

/// Parse one transport CSV back into per-position spectra. Any malformed
/// content is an I/O error naming the file.
fn read_traces(path: &Path, group: u64) -> Result<Vec<SpectrumTrace>, CliError> {
    let bad = |what: &str| CliError::Io(format!("{}: {what}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_at(path, e))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 3 || columns[0] != "wavelength_nm" || columns[1] != "T" {
        return Err(bad("unexpected header"));
    }
    let positions: Vec<f64> = columns[2..]
        .iter()
        .map(|c| {
            c.strip_prefix("I_")
                .and_then(|c| c.strip_suffix("um"))
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| bad("unexpected intensity column name"))
        })
        .collect::<Result<_, _>>()?;

    let mut wavelengths = Vec::new();
    let mut intensity_columns: Vec<Vec<f64>> = vec![Vec::new(); positions.len()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(bad("row width does not match header"));
        }
        let mut values = fields.iter().map(|f| f.parse::<f64>());
        let wl = values
            .next()
            .unwrap()
            .map_err(|_| bad("unparseable number"))?;
        wavelengths.push(wl);
        let _t = values
            .next()
            .unwrap()
            .map_err(|_| bad("unparseable number"))?;
        for (col, v) in intensity_columns.iter_mut().zip(values) {
            col.push(v.map_err(|_| bad("unparseable number"))?);
        }
    }
    if wavelengths.is_empty() {
        return Err(bad("no data rows"));
    }
    Ok(positions
        .into_iter()
        .zip(intensity_columns)
        .map(|(position_um, intensity)| SpectrumTrace {
            group,
            position_um,
            wavelength_nm: wavelengths.clone(),
            intensity,
        })
        .collect())
}
