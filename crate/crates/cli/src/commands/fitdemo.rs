//! Synthesize-and-fit closure: generate decay histograms at known rates,
//! fit them blind, and score the recovery. Also closes the loop on the
//! two-histogram β extraction and on spectral Q recovery.

use std::path::Path;

use anderson_qed::decay::{
    fit_decay, synthesize_decay, ExponentialComponent, ExponentialMixture, NoiseMode,
    SynthesisSetup,
};
use anderson_qed::fitting::profiles::voigt_on_grid;
use anderson_qed::io::{fmt_float, write_json};
use anderson_qed::qed::beta_factor;
use anderson_qed::rng::derive_seed;
use anderson_qed::spectral::fit_spectrum;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{from_core, CliError};
use crate::manifest::OutputWriter;

/// Seed stream tags keeping the closure draws apart from everything else.
const RATE_CASE_TAG: u64 = 0x4644_0000_0000_0000;
const BETA_CASE_TAG: u64 = 0x4245_0000_0000_0000;

struct CaseResult {
    rate_true_ns_inv: f64,
    seed: u64,
    rate_fit_ns_inv: Option<f64>,
    rate_stderr_ns_inv: Option<f64>,
    rel_error: Option<f64>,
    converged: bool,
    pass: bool,
    note: Option<String>,
}

pub fn run(
    config: &ExperimentConfig,
    config_sha256: &str,
    out_root: &Path,
) -> Result<(), CliError> {
    let a = &config.analysis;
    let shape = config.synthesis_shape();
    let master = config.disorder.master_seed;

    let mut cases = Vec::new();
    for rate in a.rate_grid() {
        for seed_index in 0..a.seeds_per_rate {
            cases.push((cases.len() as u64, rate, seed_index));
        }
    }

    let results: Vec<CaseResult> = cases
        .par_iter()
        .map(|&(index, rate, _)| {
            let seed = derive_seed(master, RATE_CASE_TAG | index);
            let noise = if a.noiseless {
                NoiseMode::Expected
            } else {
                NoiseMode::Poisson { seed }
            };
            run_case(config, &shape, noise, rate, seed)
        })
        .collect();

    let n_cases = results.len();
    let n_pass = results.iter().filter(|c| c.pass).count();
    let pass_rate = n_pass as f64 / n_cases as f64;

    // beta closure: the on/off pair synthesized and refitted end to end.
    let beta_true =
        beta_factor(config.qed.gamma_on_ns_inv, config.qed.gamma_off_ns_inv).map_err(from_core)?;
    let on = fit_single(
        config,
        &shape,
        pair_noise(config, master, 0),
        config.qed.gamma_on_ns_inv,
    );
    let off = fit_single(
        config,
        &shape,
        pair_noise(config, master, 1),
        config.qed.gamma_off_ns_inv,
    );
    let (beta_fit, beta_note) = match (&on, &off) {
        (Ok(g_on), Ok(g_off)) => match beta_factor(*g_on, *g_off) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e.to_string())),
        },
        (Err(e), _) | (_, Err(e)) => (None, Some(e.clone())),
    };
    let beta_pass = beta_fit.is_some_and(|b| (b - beta_true).abs() <= a.beta_tolerance);

    // Spectral closure: a noiseless instrument-broadened line refit blind.
    let q_true = config.qed.q_factor;
    let (q_fit, q_note) = spectral_case(config);
    let q_pass = q_fit.is_some_and(|q| (q - q_true).abs() <= a.q_tolerance * q_true);

    let report = serde_json::json!({
        "schema_version": anderson_qed::SCHEMA_VERSION,
        "n_cases": n_cases,
        "n_pass": n_pass,
        "pass_rate": pass_rate,
        "rate_tolerance": a.rate_tolerance,
        "pass_threshold": a.pass_threshold,
        "noiseless": a.noiseless,
        "passed": pass_rate >= a.pass_threshold && beta_pass && q_pass,
        "cases": results.iter().map(case_json).collect::<Vec<_>>(),
        "beta": {
            "true": beta_true,
            "fit": beta_fit,
            "tolerance": a.beta_tolerance,
            "pass": beta_pass,
            "note": beta_note,
        },
        "spectral_q": {
            "true": q_true,
            "fit": q_fit,
            "tolerance": a.q_tolerance,
            "pass": q_pass,
            "note": q_note,
        },
    });

    let mut writer = OutputWriter::open(
        &out_root.join("fitdemo"),
        "fitdemo",
        config_sha256,
        master,
    )?;
    if config.output.write_json {
        let mut buf = Vec::new();
        write_json(&mut buf, &report).map_err(from_core)?;
        writer.write("report.json", &buf)?;
    }
    if config.output.write_csv {
        writer.write("rate_closure.csv", closure_csv(&results).as_bytes())?;
    }
    writer.finish()?;

    let mut failures = Vec::new();
    if pass_rate < a.pass_threshold {
        failures.push(format!(
            "rate closure pass rate {pass_rate:.3} below threshold {}",
            a.pass_threshold
        ));
    }
    if !beta_pass {
        failures.push(format!(
            "beta recovery {:?} missed {beta_true:.4} by more than {}",
            beta_fit, a.beta_tolerance
        ));
    }
    if !q_pass {
        failures.push(format!(
            "Q recovery {:?} missed {q_true} by more than {:.0}%",
            q_fit,
            100.0 * a.q_tolerance
        ));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Compute(failures.join("; ")))
    }
}

fn pair_noise(config: &ExperimentConfig, master: u64, which: u64) -> NoiseMode {
    if config.analysis.noiseless {
        NoiseMode::Expected
    } else {
        NoiseMode::Poisson {
            seed: derive_seed(master, BETA_CASE_TAG | which),
        }
    }
}

/// One grid case: synthesize at the true rate, fit one component blind.
/// Fit failures become recorded misses, never process errors.
fn run_case(
    config: &ExperimentConfig,
    shape: &SynthesisSetup,
    noise: NoiseMode,
    rate: f64,
    seed: u64,
) -> CaseResult {
    let miss = |note: String| CaseResult {
        rate_true_ns_inv: rate,
        seed,
        rate_fit_ns_inv: None,
        rate_stderr_ns_inv: None,
        rel_error: None,
        converged: false,
        pass: false,
        note: Some(note),
    };
    match fit_once(config, shape, noise, rate) {
        Err(note) => miss(note),
        Ok(fit) => {
            let component = &fit.components[0];
            let rel = (component.rate_ns_inv - rate).abs() / rate;
            CaseResult {
                rate_true_ns_inv: rate,
                seed,
                rate_fit_ns_inv: Some(component.rate_ns_inv),
                rate_stderr_ns_inv: component.rate_stderr_ns_inv,
                rel_error: Some(rel),
                converged: fit.converged,
                pass: fit.converged && rel <= config.analysis.rate_tolerance,
                note: None,
            }
        }
    }
}

fn fit_once(
    config: &ExperimentConfig,
    shape: &SynthesisSetup,
    noise: NoiseMode,
    rate: f64,
) -> Result<anderson_qed::decay::DecayFit, String> {
    let a = &config.analysis;
    let mixture = ExponentialMixture::new(
        vec![ExponentialComponent {
            rate_ns_inv: rate,
            amplitude_per_cycle: a.amplitude_per_cycle,
        }],
        a.background_per_cycle_ps,
    )
    .map_err(|e| e.to_string())?;
    let setup = SynthesisSetup { noise, ..*shape };
    let irf = a.instrument();
    let curve = synthesize_decay(&mixture, &irf, &setup).map_err(|e| e.to_string())?;
    let fit = fit_decay(&curve, &irf, 1).map_err(|e| e.to_string())?;
    if fit.components.is_empty() {
        return Err("fit returned no components".into());
    }
    Ok(fit)
}

fn fit_single(
    config: &ExperimentConfig,
    shape: &SynthesisSetup,
    noise: NoiseMode,
    rate: f64,
) -> Result<f64, String> {
    fit_once(config, shape, noise, rate).map(|fit| fit.components[0].rate_ns_inv)
}

/// Fit a synthetic instrument-broadened line and quote Q from the
/// deconvolved width.
fn spectral_case(config: &ExperimentConfig) -> (Option<f64>, Option<String>) {
    let center = config.qed.cavity_wavelength_nm;
    let intrinsic_fwhm = center / config.qed.q_factor;
    let irf = config.analysis.spectral_irf_fwhm_nm;
    let step = 0.02f64;
    let n = (5.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| center - 2.5 + i as f64 * step)
        .collect();
    let line = match voigt_on_grid(&grid, center, intrinsic_fwhm, irf, 1.0) {
        Ok(line) => line,
        Err(e) => return (None, Some(e.to_string())),
    };
    let data: Vec<f64> = line.iter().map(|v| v + 0.01).collect();
    match fit_spectrum(&grid, &data, 1, irf) {
        Ok(fit) => (Some(fit.peaks[0].q_factor), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn case_json(case: &CaseResult) -> serde_json::Value {
    serde_json::json!({
        "rate_true_ns_inv": case.rate_true_ns_inv,
        "seed": case.seed,
        "rate_fit_ns_inv": case.rate_fit_ns_inv,
        "rate_stderr_ns_inv": case.rate_stderr_ns_inv,
        "rel_error": case.rel_error,
        "converged": case.converged,
        "pass": case.pass,
        "note": case.note,
    })
}

fn closure_csv(results: &[CaseResult]) -> String {
    let mut out = String::from(
        "rate_true_ns_inv,seed,rate_fit_ns_inv,rate_stderr_ns_inv,rel_error,converged,pass\n",
    );
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for c in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_float(c.rate_true_ns_inv),
            c.seed,
            opt(c.rate_fit_ns_inv),
            opt(c.rate_stderr_ns_inv),
            opt(c.rel_error),
            c.converged,
            c.pass
        ));
    }
    out
}
