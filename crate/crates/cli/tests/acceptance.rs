//! Acceptance gate: ten numbered criteria covering golden numbers, ensemble
//! physics, numerical invariants and end-to-end reproducibility. Each test
//! prints one line with the measured values once its assertions hold.

use std::fs;
use std::path::Path;
use std::process::Command;

use anderson_qed::dispersion::DispersionModel;
use anderson_qed::qed::{
    beta_factor, cavity_length, invert_mode_volume, peak_purcell, CavityMode, DEFAULT_H_EFF_UM,
};
use anderson_qed::rng::stream_rng;
use anderson_qed::stats::{
    localization_criterion, normalize_intensity, traces_from_transport, EnsembleStats,
    Normalization, SpectrumTrace,
};
use anderson_qed::transport::{
    cascade, localization_length, transmission_spectrum, CellBlueprint, CellScattering,
    LengthEnsemble, ScatterParams,
};
use rand::Rng;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_anderson-qed")
}

fn run_ok(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().expect("binary should spawn");
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn criterion_01_beta_factor_golden_number() {
    let beta = beta_factor(7.9, 0.5).unwrap();
    assert!((beta - 0.9367).abs() <= 5e-4, "beta {beta}");
    println!("criterion 1 PASS: beta_factor(7.9, 0.5) = {beta:.6} (target 0.9367 +/- 0.0005)");
}

#[test]
fn criterion_02_mode_volume_inversion_and_round_trip() {
    let v = invert_mode_volume(7.2, 4200.0, 950.0, 3.44).unwrap();
    assert!((0.85..=1.05).contains(&v), "V {v}");
    let cavity = CavityMode {
        q_factor: 4200.0,
        mode_volume_um3: v,
        wavelength_nm: 950.0,
        refractive_index: 3.44,
    };
    let fp = peak_purcell(&cavity).unwrap();
    let rel = (fp - 7.2).abs() / 7.2;
    assert!(rel < 1e-12, "round trip F_p {fp}, rel {rel}");
    println!("criterion 2 PASS: V = {v:.4} um^3 in [0.85, 1.05], F_p round trip rel {rel:.2e}");
}

#[test]
fn criterion_03_enhancement_ratio_from_paper_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok(&["qed", "--preset", "paper", "--out", out.to_str().unwrap()]);
    let report = read_json(&out.join("qed/report.json"));
    let ratio = report["enhancement_ratio"].as_f64().unwrap();
    assert!((ratio - 15.8).abs() <= 0.1, "ratio {ratio}");
    println!("criterion 3 PASS: Gamma(0)/Gamma(inf) = {ratio:.4} (target 15.8 +/- 0.1)");
}

#[test]
fn criterion_04_cavity_length_from_default_cross_section() {
    let l = cavity_length(1.0, 1.3, DEFAULT_H_EFF_UM).unwrap();
    assert!((l - 25.0).abs() / 25.0 <= 0.01, "L_mode {l}");
    println!("criterion 4 PASS: cavity_length(1 um^3, 1.3 um, default H_eff) = {l:.3} um (target 25 +/- 1%)");
}

/// Ensemble of transport runs on synthetic stacks with fixed per-cell
/// disorder strength; the dispersion model supplies the slow-light factor.
fn disordered_traces(n_realizations: usize, sigma_eff: f64, seed_base: u64) -> Vec<SpectrumTrace> {
    let model = DispersionModel::with_anchor(983.0, 5.0, 30.0, 60.0).unwrap();
    let params = ScatterParams {
        kappa: 0.008,
        ng_exponent: 2.0,
        loss_per_cell: 0.0,
    };
    let n_cells = 200;
    let grid: Vec<f64> = (0..25).map(|i| 975.0 + i as f64 * 0.25).collect();
    let mut traces = Vec::new();
    for k in 0..n_realizations {
        let mut rng = stream_rng(seed_base + k as u64, 1);
        let phases: Vec<f64> = (0..n_cells)
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        let bp = CellBlueprint::from_parts(vec![sigma_eff; n_cells], phases, params, 260.0).unwrap();
        let result = transmission_spectrum(&bp, &model, &grid).unwrap();
        traces.extend(traces_from_transport(&result, k as u64));
    }
    traces
}

#[test]
fn criterion_05_variance_criterion_threshold_behavior() {
    // Deep localization: sigma_eff 0.083 gives per-cell R near 0.05 in the
    // window, so 200 cells sit at L/xi of order 10.
    let traces = disordered_traces(200, 0.083, 600);
    let stats = normalize_intensity(&traces, (975.0, 981.0), 1.0, Normalization::Pooled).unwrap();
    let deep = localization_criterion(&stats, 2).unwrap();
    assert!(deep.variance > 7.0 / 3.0, "variance {}", deep.variance);
    assert!(deep.localized);

    let traces = disordered_traces(20, 0.0, 700);
    let stats = normalize_intensity(&traces, (975.0, 981.0), 1.0, Normalization::Pooled).unwrap();
    let flat = localization_criterion(&stats, 3).unwrap();
    assert!(flat.variance < 0.1, "variance {}", flat.variance);
    assert!(!flat.localized);

    let mut rng = stream_rng(7, 0);
    let raw: Vec<f64> = (0..10_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let stats = EnsembleStats::from_samples(raw, (975.0, 981.0), 1.0, Normalization::Pooled).unwrap();
    assert!((stats.variance - 1.0).abs() <= 0.1, "variance {}", stats.variance);

    println!(
        "criterion 5 PASS: deep ensemble var = {:.2} > 7/3, zero-disorder var = {:.1e} -> not localized, exp(-s) var = {:.3}",
        deep.variance, flat.variance, stats.variance
    );
}

#[test]
fn criterion_06_localization_length_scaling() {
    // <ln T> = N ln(1 - R) ~ -N R at weak scattering, so xi = a/R:
    // R = 0.01 and a = 260 nm give 26 um.
    let a_um = 0.26f64;
    let lengths = [26.0f64, 52.0, 78.0, 104.0, 130.0];
    let mut groups = Vec::new();
    for (li, &l_um) in lengths.iter().enumerate() {
        let n = (l_um / a_um).round() as usize;
        let samples: Vec<f64> = (0..100)
            .map(|k| {
                let mut rng = stream_rng(4000 + li as u64 * 1000 + k as u64, 0);
                let cells: Vec<CellScattering> = (0..n)
                    .map(|_| {
                        let phase = rng.random::<f64>() * std::f64::consts::TAU;
                        CellScattering::from_reflectance(0.01, phase, 0.0).unwrap()
                    })
                    .collect();
                cascade(&cells).ln_transmission
            })
            .collect();
        groups.push(LengthEnsemble {
            length_um: l_um,
            ln_transmission: samples,
        });
    }
    let fit = localization_length(&groups).unwrap();
    assert!(fit.r_squared >= 0.95, "r^2 {}", fit.r_squared);
    assert!((fit.xi_um - 26.0).abs() / 26.0 <= 0.10, "xi {}", fit.xi_um);

    // Fixed disorder, wavelength stepped toward the cutoff: the group index
    // grows, per-cell scattering grows, xi must shrink monotonically.
    let model = DispersionModel::with_anchor(983.0, 5.0, 30.0, 60.0).unwrap();
    let params = ScatterParams {
        kappa: 0.008,
        ng_exponent: 2.0,
        loss_per_cell: 0.0,
    };
    let n_cells = 200;
    let l_um = n_cells as f64 * a_um;
    let mut xi_by_wavelength = Vec::new();
    for (wi, &lambda) in [966.0, 972.0, 977.0, 981.0].iter().enumerate() {
        let mean_ln_t: f64 = (0..100)
            .map(|k| {
                let mut rng = stream_rng(8000 + wi as u64 * 1000 + k, 1);
                let phases: Vec<f64> = (0..n_cells)
                    .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
                    .collect();
                let bp = CellBlueprint::from_parts(vec![0.03; n_cells], phases, params, 260.0)
                    .unwrap();
                bp.cascade_at(&model, lambda).unwrap().ln_transmission
            })
            .sum::<f64>()
            / 100.0;
        xi_by_wavelength.push((lambda, -l_um / mean_ln_t));
    }
    for pair in xi_by_wavelength.windows(2) {
        assert!(
            pair[1].1 < pair[0].1,
            "xi should shrink toward cutoff: {xi_by_wavelength:?}"
        );
    }

    println!(
        "criterion 6 PASS: r^2 = {:.4}, xi = {:.2} um (oracle 26 +/- 10%), xi toward cutoff: {:?}",
        fit.r_squared,
        fit.xi_um,
        xi_by_wavelength
            .iter()
            .map(|(_, x)| (x * 10.0).round() / 10.0)
            .collect::<Vec<_>>()
    );
}

#[test]
fn criterion_07_flux_conservation_and_reciprocity() {
    let mut rng = stream_rng(31, 0);
    let mut worst_flux = 0.0f64;
    let mut worst_recip = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let cells: Vec<CellScattering> = (0..n)
            .map(|_| {
                let r = rng.random::<f64>() * 0.8;
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                CellScattering::from_reflectance(r, phase, 0.0).unwrap()
            })
            .collect();
        let fwd = cascade(&cells);
        worst_flux = worst_flux.max((fwd.transmission + fwd.reflection - 1.0).abs());
        let rev: Vec<CellScattering> = cells.iter().rev().copied().collect();
        let bwd = cascade(&rev);
        let scale = fwd.transmission.abs().max(1e-300);
        worst_recip = worst_recip.max((fwd.transmission - bwd.transmission).abs() / scale);
    }
    assert!(worst_flux < 1e-9, "worst |T+R-1| = {worst_flux}");
    assert!(worst_recip < 1e-9, "worst reciprocity error = {worst_recip}");
    println!(
        "criterion 7 PASS: 1000 lossless stacks, worst |T+R-1| = {worst_flux:.2e}, worst reciprocity = {worst_recip:.2e}"
    );
}

#[test]
fn criterion_08_fit_closure_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok(&["fitdemo", "--preset", "paper", "--out", out.to_str().unwrap()]);
    let report = read_json(&out.join("fitdemo/report.json"));

    let cases = report["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 50);
    let rates: Vec<f64> = cases
        .iter()
        .map(|c| c["rate_true_ns_inv"].as_f64().unwrap())
        .collect();
    let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().cloned().fold(0.0f64, f64::max);
    assert!((lo - 0.3).abs() < 1e-12 && (hi - 8.0).abs() < 1e-12, "grid [{lo}, {hi}]");
    let pass_rate = report["pass_rate"].as_f64().unwrap();
    assert!(pass_rate >= 0.9, "pass rate {pass_rate}");

    let q = &report["spectral_q"];
    assert_eq!(q["pass"], true);
    let q_fit = q["fit"].as_f64().unwrap();
    assert!((q_fit - 4200.0).abs() / 4200.0 <= 0.05, "Q {q_fit}");

    println!(
        "criterion 8 PASS: 50 cases in [0.3, 8] /ns, pass rate {pass_rate:.2}, Q recovered {q_fit:.1} (target 4200 +/- 5%)"
    );
}

#[test]
fn criterion_09_end_to_end_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        run_ok(&["simulate", "--preset", "paper", "--seed", "7", "--out", d.to_str().unwrap()]);
    }
    let ma = read_json(&dirs[0].join("simulate/manifest.json"));
    let mb = read_json(&dirs[1].join("simulate/manifest.json"));
    assert_eq!(ma["files"], mb["files"]);
    let files = ma["files"].as_object().unwrap();
    for rel in files.keys() {
        let a = fs::read(dirs[0].join("simulate").join(rel)).unwrap();
        let b = fs::read(dirs[1].join("simulate").join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between runs");
    }
    println!(
        "criterion 9 PASS: paper preset rerun, {} files byte-identical with matching checksums",
        files.len()
    );
}

#[test]
fn criterion_10_statistics_invariances() {
    let mut rng = stream_rng(19, 0);
    let raw: Vec<f64> = (0..5_000).map(|_| -(1.0 - rng.random::<f64>()).ln() + 0.01).collect();
    let window = (975.0, 981.0);

    let base = EnsembleStats::from_samples(raw.clone(), window, 1.0, Normalization::Pooled).unwrap();
    let scaled_raw: Vec<f64> = raw.iter().map(|v| v * 3.7e5).collect();
    let scaled = EnsembleStats::from_samples(scaled_raw, window, 1.0, Normalization::Pooled).unwrap();
    let var_shift = (base.variance - scaled.variance).abs() / base.variance;
    assert!(var_shift <= 1e-12, "variance moved by {var_shift}");
    let verdict_a = localization_criterion(&base, 23).unwrap();
    let verdict_b = localization_criterion(&scaled, 23).unwrap();
    assert_eq!(verdict_a.localized, verdict_b.localized);

    let again = EnsembleStats::from_samples(base.samples.clone(), window, 1.0, Normalization::Pooled)
        .unwrap();
    let worst = base
        .samples
        .iter()
        .zip(&again.samples)
        .map(|(a, b)| (a - b).abs() / a.max(1e-300))
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-12, "renormalization moved samples by {worst}");
    assert!((again.variance - base.variance).abs() / base.variance <= 1e-12);

    println!(
        "criterion 10 PASS: variance scale drift {var_shift:.1e}, renormalization drift {worst:.1e} (both within 1e-12)"
    );
}
