//! Normalized-intensity statistics and the variance criterion for
//! localization.
//!
//! Raw intensities from many positions, wavelengths and disorder
//! realizations are pooled into samples s = I/<I>. Extended (speckle-like)
//! transport gives the negative-exponential distribution with var(s) = 1;
//! localization fattens the tail, and var(s) > 7/3 certifies it even in the
//! presence of loss. The threshold comparison is strict, and verdicts
//! closer to the threshold than the bootstrap confidence half-width are
//! flagged borderline rather than trusted.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::transport::TransportResult;
use crate::util::{mean, moments, percentile};
use rand::Rng;

/// Critical variance of s = I/<I> above which the ensemble is localized.
pub const LOCALIZATION_VARIANCE_THRESHOLD: f64 = 7.0 / 3.0;

/// Minimum sample count for a meaningful bootstrap verdict.
pub const MIN_CRITERION_SAMPLES: usize = 100;

const HISTOGRAM_BINS: usize = 40;
const HISTOGRAM_LOG10_MIN: f64 = -3.0;
const HISTOGRAM_LOG10_MAX: f64 = 2.0;
const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Intensity versus wavelength recorded at one position of one disorder
/// realization. `group` tags the realization; spatial binning never mixes
/// groups.
#[derive(Debug, Clone)]
pub struct SpectrumTrace {
    pub group: u64,
    pub position_um: f64,
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
}

/// How the intensity mean used for s = I/<I> is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Normalization {
    /// One mean over every (position, wavelength) sample in the window;
    /// wavelengths act as extra disorder realizations.
    Pooled,
    /// A separate mean per wavelength column.
    PerWavelength,
}

/// Log-binned probability density of the normalized intensity.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// 41 edges spanning s in [1e-3, 1e2], logarithmically spaced.
    pub bin_edges: Vec<f64>,
    /// Density per bin, normalized so the integral over in-range samples
    /// is 1.
    pub pdf: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples that fell inside [1e-3, 1e2]; zeros from dark positions
    /// land below the range and are excluded from the density.
    pub in_range: u64,
}

impl Histogram {
    fn from_samples(samples: &[f64]) -> Histogram {
        let mut bin_edges = Vec::with_capacity(HISTOGRAM_BINS + 1);
        for b in 0..=HISTOGRAM_BINS {
            let frac = b as f64 / HISTOGRAM_BINS as f64;
            bin_edges.push(
                10f64.powf(HISTOGRAM_LOG10_MIN + frac * (HISTOGRAM_LOG10_MAX - HISTOGRAM_LOG10_MIN)),
            );
        }
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        let lo = bin_edges[0];
        let hi = bin_edges[HISTOGRAM_BINS];
        let span = HISTOGRAM_LOG10_MAX - HISTOGRAM_LOG10_MIN;
        for &s in samples {
            if s < lo || s > hi || !s.is_finite() {
                continue;
            }
            let mut b = (((s.log10() - HISTOGRAM_LOG10_MIN) / span) * HISTOGRAM_BINS as f64)
                .floor() as usize;
            if b >= HISTOGRAM_BINS {
                b = HISTOGRAM_BINS - 1;
            }
            counts[b] += 1;
        }
        let in_range: u64 = counts.iter().sum();
        let pdf = counts
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                if in_range == 0 {
                    0.0
                } else {
                    c as f64 / (in_range as f64 * (bin_edges[b + 1] - bin_edges[b]))
                }
            })
            .collect();
        Histogram {
            bin_edges,
            pdf,
            counts,
            in_range,
        }
    }

    /// Integral of the density over the binned range; 1 whenever any
    /// sample landed in range.
    pub fn integral(&self) -> f64 {
        self.pdf
            .iter()
            .enumerate()
            .map(|(b, &p)| p * (self.bin_edges[b + 1] - self.bin_edges[b]))
            .sum()
    }
}

/// The pooled normalized-intensity ensemble with its summary statistics.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    /// Normalized samples s = I/<I>, mean 1 by construction.
    pub samples: Vec<f64>,
    pub variance: f64,
    pub n_samples: usize,
    pub window_nm: (f64, f64),
    pub spatial_bin_um: f64,
    pub normalization: Normalization,
    pub histogram: Histogram,
}

impl EnsembleStats {
    /// Build the ensemble from raw (unnormalized) intensity samples using
    /// pooled normalization. The trace-level pipeline goes through
    /// `normalize_intensity`; this entry point serves pre-flattened data.
    pub fn from_samples(
        raw: Vec<f64>,
        window_nm: (f64, f64),
        spatial_bin_um: f64,
        normalization: Normalization,
    ) -> Result<EnsembleStats> {
        if raw.is_empty() {
            return Err(Error::InsufficientData("no intensity samples".into()));
        }
        if raw.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParameter(
                "intensities must be finite and non-negative".into(),
            ));
        }
        let m = mean(&raw);
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(
                "mean intensity must be positive".into(),
            ));
        }
        let samples: Vec<f64> = raw.into_iter().map(|v| v / m).collect();
        Ok(EnsembleStats::from_normalized(
            samples,
            window_nm,
            spatial_bin_um,
            normalization,
        ))
    }

    fn from_normalized(
        samples: Vec<f64>,
        window_nm: (f64, f64),
        spatial_bin_um: f64,
        normalization: Normalization,
    ) -> EnsembleStats {
        let variance = moments(&samples).variance;
        let histogram = Histogram::from_samples(&samples);
        EnsembleStats {
            n_samples: samples.len(),
            variance,
            window_nm,
            spatial_bin_um,
            normalization,
            histogram,
            samples,
        }
    }
}

/// Pool traces into normalized-intensity samples: spatially bin positions
/// (within each group), keep wavelengths inside the window, divide by the
/// ensemble mean.
pub fn normalize_intensity(
    traces: &[SpectrumTrace],
    window_nm: (f64, f64),
    spatial_bin_um: f64,
    normalization: Normalization,
) -> Result<EnsembleStats> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("no traces".into()));
    }
    if !(spatial_bin_um > 0.0) {
        return Err(Error::InvalidParameter(
            "spatial bin size must be positive".into(),
        ));
    }
    if !(window_nm.0 < window_nm.1) {
        return Err(Error::InvalidParameter(
            "wavelength window must have positive width".into(),
        ));
    }
    let grid = &traces[0].wavelength_nm;
    for t in traces {
        if t.intensity.len() != t.wavelength_nm.len() {
            return Err(Error::InvalidParameter(
                "trace intensity and wavelength lengths differ".into(),
            ));
        }
        if t.wavelength_nm != *grid {
            return Err(Error::InvalidParameter(
                "traces must share a common wavelength grid".into(),
            ));
        }
        if t.intensity.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParameter(
                "intensities must be finite and non-negative".into(),
            ));
        }
    }
    let window_idx: Vec<usize> = grid
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= window_nm.0 && w <= window_nm.1)
        .map(|(i, _)| i)
        .collect();
    if window_idx.is_empty() {
        return Err(Error::InvalidParameter(
            "wavelength window contains no grid points".into(),
        ));
    }
    // Average traces sharing a (group, spatial bin) cell.
    let mut keys: Vec<(u64, i64)> = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    for t in traces {
        let key = (t.group, (t.position_um / spatial_bin_um).floor() as i64);
        let slot = match keys.iter().position(|&k| k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                sums.push(vec![0.0; window_idx.len()]);
                members.push(0);
                keys.len() - 1
            }
        };
        for (col, &i) in window_idx.iter().enumerate() {
            sums[slot][col] += t.intensity[i];
        }
        members[slot] += 1;
    }
    if keys.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two spatial positions after binning".into(),
        ));
    }
    // Deterministic sample order: group, then spatial bin, then wavelength.
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    let binned: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| sums[i].iter().map(|&s| s / members[i] as f64).collect())
        .collect();
    let samples: Vec<f64> = match normalization {
        Normalization::Pooled => {
            let raw: Vec<f64> = binned.iter().flatten().cloned().collect();
            let m = mean(&raw);
            if !(m > 0.0) {
                return Err(Error::InvalidParameter(
                    "mean intensity in window is zero".into(),
                ));
            }
            raw.into_iter().map(|v| v / m).collect()
        }
        Normalization::PerWavelength => {
            let n_cols = window_idx.len();
            let mut col_mean = vec![0.0f64; n_cols];
            for row in &binned {
                for (c, &v) in row.iter().enumerate() {
                    col_mean[c] += v;
                }
            }
            for m in col_mean.iter_mut() {
                *m /= binned.len() as f64;
                if !(*m > 0.0) {
                    return Err(Error::InvalidParameter(
                        "zero mean intensity at a window wavelength".into(),
                    ));
                }
            }
            binned
                .iter()
                .flat_map(|row| row.iter().zip(&col_mean).map(|(&v, &m)| v / m))
                .collect()
        }
    };
    Ok(EnsembleStats::from_normalized(
        samples,
        window_nm,
        spatial_bin_um,
        normalization,
    ))
}

/// One trace per cell boundary of a simulated transport run.
pub fn traces_from_transport(result: &TransportResult, group: u64) -> Vec<SpectrumTrace> {
    result
        .positions_um
        .iter()
        .enumerate()
        .map(|(j, &pos)| SpectrumTrace {
            group,
            position_um: pos,
            wavelength_nm: result.wavelength_nm.clone(),
            intensity: result.intensity.iter().map(|row| row[j]).collect(),
        })
        .collect()
}

/// Reference density of non-localized speckle: P(s) = exp(-s), unit mean
/// and unit variance.
pub fn rayleigh_pdf(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalized intensity must be non-negative, got {s}"
        )));
    }
    Ok((-s).exp())
}

/// Verdict of the variance criterion with its bootstrap confidence band.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CriterionReport {
    pub variance: f64,
    pub threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: usize,
    pub localized: bool,
    /// Set when |variance - threshold| is smaller than the CI half-width;
    /// the verdict then says more about the ensemble size than the physics.
    pub borderline: bool,
}

/// Apply the strict variance criterion with a seeded bootstrap 95% CI.
pub fn localization_criterion(stats: &EnsembleStats, seed: u64) -> Result<CriterionReport> {
    let n = stats.samples.len();
    if n < MIN_CRITERION_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "criterion needs at least {MIN_CRITERION_SAMPLES} samples, got {n}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for _ in 0..n {
            let v = stats.samples[rng.random_range(0..n)];
            sum += v;
            sum_sq += v * v;
        }
        let m = sum / n as f64;
        boot.push((sum_sq / n as f64 - m * m).max(0.0));
    }
    boot.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let ci_low = percentile(&boot, 2.5);
    let ci_high = percentile(&boot, 97.5);
    let variance = stats.variance;
    let localized = variance > LOCALIZATION_VARIANCE_THRESHOLD;
    let half_width = (ci_high - ci_low) / 2.0;
    let borderline = (variance - LOCALIZATION_VARIANCE_THRESHOLD).abs() < half_width;
    Ok(CriterionReport {
        variance,
        threshold: LOCALIZATION_VARIANCE_THRESHOLD,
        ci_low,
        ci_high,
        n_samples: n,
        localized,
        borderline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionModel;
    use crate::transport::{transmission_spectrum, CellBlueprint, ScatterParams};

    fn single_point_trace(group: u64, position_um: f64, value: f64) -> SpectrumTrace {
        SpectrumTrace {
            group,
            position_um,
            wavelength_nm: vec![970.0],
            intensity: vec![value],
        }
    }

    #[test]
    fn two_sample_normalization_matches_hand_arithmetic() {
        let traces = vec![
            single_point_trace(0, 0.2, 1.0),
            single_point_trace(0, 1.7, 3.0),
        ];
        let stats =
            normalize_intensity(&traces, (969.0, 971.0), 1.0, Normalization::Pooled).unwrap();
        assert_eq!(stats.samples, vec![0.5, 1.5]);
        assert_eq!(stats.variance, 0.25);
        assert_eq!(stats.n_samples, 2);
    }

    #[test]
    fn constant_field_has_zero_variance() {
        let traces: Vec<SpectrumTrace> = (0..120)
            .map(|i| single_point_trace(0, i as f64 * 1.5, 4.2))
            .collect();
        let stats =
            normalize_intensity(&traces, (969.0, 971.0), 1.0, Normalization::Pooled).unwrap();
        assert!(stats.samples.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!(stats.variance.abs() < 1e-12);
        let report = localization_criterion(&stats, 11).unwrap();
        assert!(!report.localized);
    }

    #[test]
    fn positions_in_one_bin_are_averaged_within_their_group() {
        let traces = vec![
            single_point_trace(0, 0.2, 1.0),
            single_point_trace(0, 0.7, 3.0), // same 1 um bin as above
            single_point_trace(0, 5.5, 2.0),
        ];
        let stats =
            normalize_intensity(&traces, (969.0, 971.0), 1.0, Normalization::Pooled).unwrap();
        // Bins hold {2.0, 2.0}; normalized samples are both 1.
        assert_eq!(stats.n_samples, 2);
        assert!(stats.samples.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn groups_are_never_mixed_by_spatial_binning() {
        let traces = vec![
            single_point_trace(0, 0.2, 1.0),
            single_point_trace(1, 0.2, 3.0), // same bin, different realization
        ];
        let stats =
            normalize_intensity(&traces, (969.0, 971.0), 1.0, Normalization::Pooled).unwrap();
        assert_eq!(stats.samples, vec![0.5, 1.5]);
    }

    #[test]
    fn per_wavelength_normalization_flattens_each_column() {
        let mk = |pos: f64, a: f64, b: f64| SpectrumTrace {
            group: 0,
            position_um: pos,
            wavelength_nm: vec![970.0, 975.0],
            intensity: vec![a, b],
        };
        // Column means differ by 10x; per-wavelength mode removes that.
        let traces = vec![mk(0.0, 1.0, 10.0), mk(2.0, 3.0, 30.0)];
        let stats =
            normalize_intensity(&traces, (969.0, 976.0), 1.0, Normalization::PerWavelength)
                .unwrap();
        let mut sorted = stats.samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, vec![0.5, 0.5, 1.5, 1.5]);
        assert!((mean(&stats.samples) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_is_one_and_histogram_integrates_to_one() {
        let mut rng = stream_rng(42, 0);
        let traces: Vec<SpectrumTrace> = (0..500)
            .map(|i| single_point_trace(i as u64, 0.0, rng.random::<f64>() * 5.0 + 0.01))
            .collect();
        let stats =
            normalize_intensity(&traces, (969.0, 971.0), 1.0, Normalization::Pooled).unwrap();
        assert!((mean(&stats.samples) - 1.0).abs() < 1e-9);
        assert!((stats.histogram.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exponential_samples_sit_at_unit_variance_and_fail_the_criterion() {
        let mut rng = stream_rng(7, 0);
        let raw: Vec<f64> = (0..30_000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let stats =
            EnsembleStats::from_samples(raw, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        assert!(
            (stats.variance - 1.0).abs() < 0.1,
            "variance {}",
            stats.variance
        );
        let report = localization_criterion(&stats, 3).unwrap();
        assert!(!report.localized);
        assert!(!report.borderline);
        assert!(report.ci_low < 1.0 && report.ci_high > 1.0);
        // The histogram tracks exp(-s) where the bins are well populated.
        let h = &stats.histogram;
        for b in 0..HISTOGRAM_BINS {
            let center = (h.bin_edges[b] * h.bin_edges[b + 1]).sqrt();
            if (0.2..=2.0).contains(&center) && h.counts[b] > 1500 {
                let expect = rayleigh_pdf(center).unwrap();
                assert!(
                    (h.pdf[b] - expect).abs() / expect < 0.08,
                    "bin at {center}: pdf {} vs {expect}",
                    h.pdf[b]
                );
            }
        }
    }

    #[test]
    fn heavy_tailed_two_point_set_is_localized() {
        // 1000 bright samples at 6.3 among 5300 dark ones: mean 1,
        // variance 5.3.
        let mut raw = vec![0.0f64; 5300];
        raw.extend(std::iter::repeat(6.3).take(1000));
        let stats =
            EnsembleStats::from_samples(raw, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        assert!((stats.variance - 5.3).abs() < 1e-9, "var {}", stats.variance);
        let report = localization_criterion(&stats, 5).unwrap();
        assert!(report.localized);
        assert!(!report.borderline);
    }

    #[test]
    fn variance_exactly_at_threshold_is_not_localized_but_borderline() {
        // 70 samples at 0, 64 at 1/2, 34 at 4: the sums are exact dyadic
        // integers (sum 168, sum of squared deviations 392), so the
        // computed variance is bit-identical to 7/3.
        let mut raw = vec![0.0f64; 70];
        raw.extend(std::iter::repeat(0.5).take(64));
        raw.extend(std::iter::repeat(4.0).take(34));
        let stats =
            EnsembleStats::from_samples(raw, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        assert_eq!(stats.variance, LOCALIZATION_VARIANCE_THRESHOLD);
        let report = localization_criterion(&stats, 17).unwrap();
        assert!(!report.localized);
        assert!(report.borderline);
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut rng = stream_rng(13, 0);
        let raw: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() * 9.0 + 0.1).collect();
        let once =
            EnsembleStats::from_samples(raw, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        let twice = EnsembleStats::from_samples(
            once.samples.clone(),
            (968.0, 981.0),
            1.0,
            Normalization::Pooled,
        )
        .unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn rayleigh_reference_values() {
        assert_eq!(rayleigh_pdf(0.0).unwrap(), 1.0);
        assert!((rayleigh_pdf(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(rayleigh_pdf(-0.1).is_err());
        // Variance of the reference distribution is 1: the Gamma integral
        // of s^2 e^{-s} over s >= 0 is 2, minus the squared unit mean.
        let dx = 1e-4;
        let second: f64 = (0..400_000)
            .map(|i| {
                let s = (i as f64 + 0.5) * dx;
                s * s * rayleigh_pdf(s).unwrap() * dx
            })
            .sum();
        assert!((second - 1.0 - 1.0).abs() < 1e-3, "second moment {second}");
    }

    #[test]
    fn below_range_zeros_are_excluded_from_the_histogram_density() {
        let mut raw = vec![0.0f64; 900];
        raw.extend(std::iter::repeat(10.0).take(100));
        let stats =
            EnsembleStats::from_samples(raw, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        assert_eq!(stats.histogram.in_range, 100);
        assert!((stats.histogram.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn transport_column_extraction_preserves_layout() {
        let result = TransportResult {
            wavelength_nm: vec![970.0, 971.0],
            transmission: vec![1.0, 0.5],
            ln_transmission: vec![0.0, -0.69],
            reflection: vec![0.0, 0.5],
            intensity: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            positions_um: vec![0.0, 0.26, 0.52],
            resonances: Vec::new(),
        };
        let traces = traces_from_transport(&result, 9);
        assert_eq!(traces.len(), 3);
        assert_eq!(traces[1].intensity, vec![2.0, 5.0]);
        assert_eq!(traces[1].position_um, 0.26);
        assert!(traces.iter().all(|t| t.group == 9));
    }

    #[test]
    fn preconditions_are_enforced() {
        let traces = vec![
            single_point_trace(0, 0.2, 1.0),
            single_point_trace(0, 1.7, 3.0),
        ];
        assert!(matches!(
            normalize_intensity(&traces, (900.0, 910.0), 1.0, Normalization::Pooled),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            normalize_intensity(&traces, (971.0, 969.0), 1.0, Normalization::Pooled),
            Err(Error::InvalidParameter(_))
        ));
        let one = vec![single_point_trace(0, 0.2, 1.0)];
        assert!(matches!(
            normalize_intensity(&one, (969.0, 971.0), 1.0, Normalization::Pooled),
            Err(Error::InsufficientData(_))
        ));
        let mismatched = vec![
            single_point_trace(0, 0.2, 1.0),
            SpectrumTrace {
                group: 0,
                position_um: 1.7,
                wavelength_nm: vec![970.0, 971.0],
                intensity: vec![1.0, 2.0],
            },
        ];
        assert!(normalize_intensity(&mismatched, (969.0, 971.0), 1.0, Normalization::Pooled).is_err());
        let few = EnsembleStats::from_samples(
            vec![1.0; 50],
            (968.0, 981.0),
            1.0,
            Normalization::Pooled,
        )
        .unwrap();
        assert!(matches!(
            localization_criterion(&few, 1),
            Err(Error::InsufficientData(_))
        ));
    }

    fn deep_localization_traces(
        n_realizations: usize,
        sigma_eff: f64,
        seed_base: u64,
    ) -> Vec<SpectrumTrace> {
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
            let bp =
                CellBlueprint::from_parts(vec![sigma_eff; n_cells], phases, params, 260.0).unwrap();
            let result = transmission_spectrum(&bp, &model, &grid).unwrap();
            traces.extend(traces_from_transport(&result, k as u64));
        }
        traces
    }

    #[test]
    fn deeply_localized_transport_ensemble_exceeds_the_threshold() {
        // sigma_eff = 0.083 puts per-cell R near 0.05 at the window center,
        // so 200 cells give L/xi of order 10.
        let traces = deep_localization_traces(25, 0.083, 600);
        let stats =
            normalize_intensity(&traces, (975.0, 981.0), 1.0, Normalization::Pooled).unwrap();
        assert!(
            stats.variance > LOCALIZATION_VARIANCE_THRESHOLD,
            "variance {}",
            stats.variance
        );
        let report = localization_criterion(&stats, 2).unwrap();
        assert!(report.localized);
    }

    #[test]
    fn variance_grows_with_disorder_strength() {
        let mut last = -1.0f64;
        for (i, sigma_eff) in [0.015, 0.04, 0.083].iter().enumerate() {
            let traces = deep_localization_traces(25, *sigma_eff, 900 + 50 * i as u64);
            let stats =
                normalize_intensity(&traces, (975.0, 981.0), 1.0, Normalization::Pooled).unwrap();
            assert!(
                stats.variance >= last,
                "variance {} after {last} at sigma_eff {sigma_eff}",
                stats.variance
            );
            last = stats.variance;
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn scaling_raw_intensity_changes_nothing(
            raw in proptest::collection::vec(1e-6..1e3f64, 100..400),
            scale in 1e-6..1e6f64,
        ) {
            let a = EnsembleStats::from_samples(
                raw.clone(), (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
            let scaled: Vec<f64> = raw.iter().map(|v| v * scale).collect();
            let b = EnsembleStats::from_samples(
                scaled, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
            let tol = 1e-12 * a.variance.max(1.0);
            prop_assert!((a.variance - b.variance).abs() <= tol);
            for (x, y) in a.samples.iter().zip(&b.samples) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            let ra = localization_criterion(&a, 99).unwrap();
            let rb = localization_criterion(&b, 99).unwrap();
            prop_assert_eq!(ra.localized, rb.localized);
        }

        #[test]
        fn verdict_is_stable_under_sample_reordering(
            raw in proptest::collection::vec(1e-6..1e3f64, 100..400),
        ) {
            let a = EnsembleStats::from_samples(
                raw.clone(), (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
            let mut rev = raw.clone();
            rev.reverse();
            let b = EnsembleStats::from_samples(
                rev, (968.0, 981.0), 1.0, Normalization::Pooled).unwrap();
            prop_assert!((a.variance - b.variance).abs() <= 1e-12 * a.variance.max(1.0));
            prop_assert_eq!(
                a.variance > LOCALIZATION_VARIANCE_THRESHOLD,
                b.variance > LOCALIZATION_VARIANCE_THRESHOLD
            );
        }
    }
}
