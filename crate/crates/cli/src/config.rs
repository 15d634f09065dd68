//! Experiment configuration. One TOML file drives every subcommand; every
//! default is pinned to the reference experiment so `--preset paper`
//! reproduces it without any file at all.
//!
//! Unknown keys are hard errors. A typo in a physics parameter must never
//! silently fall back to a default.

use std::path::Path;

use anderson_qed::decay::InstrumentResponse;
use anderson_qed::dispersion::DispersionModel;
use anderson_qed::geometry::WaveguideGeometry;
use anderson_qed::qed::{BackgroundRates, CavityMode, CoupledCavity, DEFAULT_H_EFF_UM};
use anderson_qed::spectral::TuningModel;
use anderson_qed::stats::Normalization;
use anderson_qed::transport::ScatterParams;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub disorder: DisorderConfig,
    pub dispersion: DispersionConfig,
    pub statistics: StatisticsConfig,
    pub qed: QedConfig,
    pub tuning: TuningConfig,
    pub analysis: AnalysisConfig,
    pub references: ReferenceValues,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            geometry: GeometryConfig::default(),
            disorder: DisorderConfig::default(),
            dispersion: DispersionConfig::default(),
            statistics: StatisticsConfig::default(),
            qed: QedConfig::default(),
            tuning: TuningConfig::default(),
            analysis: AnalysisConfig::default(),
            references: ReferenceValues::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub lattice_constant_nm: f64,
    pub hole_radius_nm: f64,
    pub membrane_thickness_nm: f64,
    pub length_um: f64,
    pub rows_each_side: u32,
    pub refractive_index: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = WaveguideGeometry::reference();
        GeometryConfig {
            lattice_constant_nm: g.lattice_constant_nm,
            hole_radius_nm: g.hole_radius_nm,
            membrane_thickness_nm: g.membrane_thickness_nm,
            length_um: g.length_um,
            rows_each_side: g.rows_each_side,
            refractive_index: g.refractive_index,
        }
    }
}

impl GeometryConfig {
    pub fn build(&self) -> WaveguideGeometry {
        WaveguideGeometry {
            lattice_constant_nm: self.lattice_constant_nm,
            hole_radius_nm: self.hole_radius_nm,
            membrane_thickness_nm: self.membrane_thickness_nm,
            length_um: self.length_um,
            rows_each_side: self.rows_each_side,
            refractive_index: self.refractive_index,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderConfig {
    /// Hole displacement standard deviations as fractions of the lattice
    /// constant; one ensemble per entry.
    pub sigma: Vec<f64>,
    pub n_realizations: u32,
    pub master_seed: u64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        DisorderConfig {
            sigma: vec![0.03],
            n_realizations: 100,
            master_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub cutoff_wavelength_nm: f64,
    /// The band curvature is calibrated so the group index hits
    /// `anchor_group_index` this far below the cutoff.
    pub anchor_detuning_nm: f64,
    pub anchor_group_index: f64,
    pub ng_max_clamp: f64,
    /// Backscatter calibration R = kappa sigma^2 n_g^p.
    pub kappa: f64,
    pub ng_exponent: f64,
    pub loss_per_cell: f64,
    /// Wavelength grid swept by `simulate`.
    pub grid_min_nm: f64,
    pub grid_max_nm: f64,
    pub grid_step_nm: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            cutoff_wavelength_nm: 983.0,
            anchor_detuning_nm: 5.0,
            anchor_group_index: 30.0,
            ng_max_clamp: 60.0,
            kappa: 0.008,
            ng_exponent: 2.0,
            loss_per_cell: 0.01,
            grid_min_nm: 968.0,
            grid_max_nm: 982.0,
            grid_step_nm: 0.05,
        }
    }
}

impl DispersionConfig {
    pub fn build(&self) -> anderson_qed::Result<DispersionModel> {
        DispersionModel::with_anchor(
            self.cutoff_wavelength_nm,
            self.anchor_detuning_nm,
            self.anchor_group_index,
            self.ng_max_clamp,
        )
    }

    pub fn scatter_params(&self) -> ScatterParams {
        ScatterParams {
            kappa: self.kappa,
            ng_exponent: self.ng_exponent,
            loss_per_cell: self.loss_per_cell,
        }
    }

    pub fn wavelength_grid(&self) -> Vec<f64> {
        let n = ((self.grid_max_nm - self.grid_min_nm) / self.grid_step_nm).round() as usize;
        (0..=n)
            .map(|i| self.grid_min_nm + i as f64 * self.grid_step_nm)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationChoice {
    Pooled,
    PerWavelength,
}

impl NormalizationChoice {
    pub fn build(self) -> Normalization {
        match self {
            NormalizationChoice::Pooled => Normalization::Pooled,
            NormalizationChoice::PerWavelength => Normalization::PerWavelength,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatisticsConfig {
    pub window_min_nm: f64,
    pub window_max_nm: f64,
    pub spatial_bin_um: f64,
    pub normalization: NormalizationChoice,
}

impl Default for StatisticsConfig {
    fn default() -> Self {
        StatisticsConfig {
            window_min_nm: 975.0,
            window_max_nm: 981.0,
            spatial_bin_um: 1.0,
            normalization: NormalizationChoice::Pooled,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QedConfig {
    pub q_factor: f64,
    pub mode_volume_um3: f64,
    pub cavity_wavelength_nm: f64,
    /// Normalized field-dipole overlap of the primary cavity.
    pub dipole_overlap: f64,
    pub gamma_hom_ns_inv: f64,
    /// Measured on/off-resonance total decay rates for the beta factor.
    pub gamma_on_ns_inv: f64,
    pub gamma_off_ns_inv: f64,
    /// Background decay channels; their sum is the off-resonance floor of
    /// the detuning curve.
    pub gamma_nr_ns_inv: f64,
    pub gamma_rad_ns_inv: f64,
    pub gamma_wg_ns_inv: f64,
    /// Scale the waveguide channel with the slow-light group index instead
    /// of keeping it flat.
    pub wg_ng_scaling: bool,
    pub h_eff_um: f64,
    pub w_eff_um: f64,
    pub detuning_min_nm: f64,
    pub detuning_max_nm: f64,
    pub detuning_step_nm: f64,
    /// Optional second localized mode on the detuning axis.
    pub secondary_detuning_nm: Option<f64>,
    pub secondary_overlap: Option<f64>,
}

impl Default for QedConfig {
    fn default() -> Self {
        QedConfig {
            q_factor: 4200.0,
            mode_volume_um3: 1.0,
            cavity_wavelength_nm: 950.0,
            dipole_overlap: 1.0,
            gamma_hom_ns_inv: 1.1,
            gamma_on_ns_inv: 7.9,
            gamma_off_ns_inv: 0.5,
            gamma_nr_ns_inv: 0.15,
            gamma_rad_ns_inv: 0.1,
            gamma_wg_ns_inv: 0.25,
            wg_ng_scaling: false,
            h_eff_um: DEFAULT_H_EFF_UM,
            w_eff_um: 1.3,
            detuning_min_nm: -10.0,
            detuning_max_nm: 10.0,
            detuning_step_nm: 0.05,
            secondary_detuning_nm: None,
            secondary_overlap: None,
        }
    }
}

impl QedConfig {
    pub fn cavity(&self, refractive_index: f64) -> CavityMode {
        CavityMode {
            q_factor: self.q_factor,
            mode_volume_um3: self.mode_volume_um3,
            wavelength_nm: self.cavity_wavelength_nm,
            refractive_index,
        }
    }

    /// Primary cavity plus the optional secondary mode.
    pub fn cavities(&self, refractive_index: f64) -> Vec<CoupledCavity> {
        let mut out = vec![CoupledCavity {
            mode: self.cavity(refractive_index),
            dipole_overlap: self.dipole_overlap,
        }];
        if let (Some(d), Some(overlap)) = (self.secondary_detuning_nm, self.secondary_overlap) {
            let mut mode = self.cavity(refractive_index);
            mode.wavelength_nm += d;
            out.push(CoupledCavity {
                mode,
                dipole_overlap: overlap,
            });
        }
        out
    }

    pub fn background(&self, dispersion: &DispersionConfig) -> anderson_qed::Result<BackgroundRates> {
        let mut bg = BackgroundRates::flat(
            self.gamma_nr_ns_inv,
            self.gamma_rad_ns_inv,
            self.gamma_wg_ns_inv,
        );
        if self.wg_ng_scaling {
            bg.ng_scaling = Some(anderson_qed::qed::NgScaling::new(
                dispersion.build()?,
                self.cavity_wavelength_nm,
            )?);
        }
        Ok(bg)
    }

    pub fn detuning_grid(&self) -> Vec<f64> {
        let n = ((self.detuning_max_nm - self.detuning_min_nm) / self.detuning_step_nm).round()
            as usize;
        (0..=n)
            .map(|i| self.detuning_min_nm + i as f64 * self.detuning_step_nm)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningConfig {
    pub reference_temperature_k: f64,
    pub qd_wavelength_nm: f64,
    pub qd_slope_nm_per_k: f64,
    pub cavity_wavelength_nm: f64,
    pub cavity_slope_nm_per_k: f64,
    pub temperature_min_k: f64,
    pub temperature_max_k: f64,
    pub temperature_step_k: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            reference_temperature_k: 10.0,
            qd_wavelength_nm: 949.5,
            qd_slope_nm_per_k: 0.05,
            cavity_wavelength_nm: 950.0,
            cavity_slope_nm_per_k: 0.01,
            temperature_min_k: 5.0,
            temperature_max_k: 45.0,
            temperature_step_k: 0.5,
        }
    }
}

impl TuningConfig {
    pub fn build(&self) -> TuningModel {
        TuningModel {
            reference_temperature_k: self.reference_temperature_k,
            qd_wavelength_nm: self.qd_wavelength_nm,
            qd_slope_nm_per_k: self.qd_slope_nm_per_k,
            cavity_wavelength_nm: self.cavity_wavelength_nm,
            cavity_slope_nm_per_k: self.cavity_slope_nm_per_k,
        }
    }

    pub fn temperature_grid(&self) -> Vec<f64> {
        let n = ((self.temperature_max_k - self.temperature_min_k) / self.temperature_step_k)
            .round() as usize;
        (0..=n)
            .map(|i| self.temperature_min_k + i as f64 * self.temperature_step_k)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub temporal_irf_fwhm_ps: f64,
    pub spectral_irf_fwhm_nm: f64,
    pub repetition_rate_mhz: f64,
    pub n_cycles: u64,
    pub bin_ps: f64,
    pub window_ps: f64,
    pub t0_ps: f64,
    /// Expected counts instead of Poisson draws.
    pub noiseless: bool,
    /// Per-pulse signal brightness used by the synthesize-and-fit closure.
    pub amplitude_per_cycle: f64,
    pub background_per_cycle_ps: f64,
    /// Log-spaced true-rate grid for the closure demo.
    pub rate_grid_min_ns_inv: f64,
    pub rate_grid_max_ns_inv: f64,
    pub rate_grid_points: u32,
    pub seeds_per_rate: u32,
    /// Relative rate error below which a closure case passes.
    pub rate_tolerance: f64,
    /// Minimum fraction of passing cases for `fitdemo` to exit cleanly.
    pub pass_threshold: f64,
    pub beta_tolerance: f64,
    pub q_tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            temporal_irf_fwhm_ps: 50.0,
            spectral_irf_fwhm_nm: 0.15,
            repetition_rate_mhz: 75.0,
            n_cycles: 1_000_000,
            bin_ps: 20.0,
            window_ps: 12_000.0,
            t0_ps: 500.0,
            noiseless: false,
            amplitude_per_cycle: 0.05,
            background_per_cycle_ps: 1e-8,
            rate_grid_min_ns_inv: 0.3,
            rate_grid_max_ns_inv: 8.0,
            rate_grid_points: 10,
            seeds_per_rate: 5,
            rate_tolerance: 0.1,
            pass_threshold: 0.9,
            beta_tolerance: 0.02,
            q_tolerance: 0.05,
        }
    }
}

impl AnalysisConfig {
    pub fn instrument(&self) -> InstrumentResponse {
        InstrumentResponse {
            temporal_fwhm_ps: self.temporal_irf_fwhm_ps,
            spectral_fwhm_nm: self.spectral_irf_fwhm_nm,
        }
    }

    pub fn repetition_period_ns(&self) -> f64 {
        1000.0 / self.repetition_rate_mhz
    }

    pub fn rate_grid(&self) -> Vec<f64> {
        let n = self.rate_grid_points.max(1);
        if n == 1 {
            return vec![self.rate_grid_min_ns_inv];
        }
        let lo = self.rate_grid_min_ns_inv.ln();
        let hi = self.rate_grid_max_ns_inv.ln();
        (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Reference numbers echoed next to simulated values in reports. All
/// optional; absent entries render as null.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceValues {
    pub beta: Option<f64>,
    pub purcell_factor: Option<f64>,
    pub mode_volume_um3: Option<f64>,
    pub mode_extent_um: Option<f64>,
    pub enhancement_ratio: Option<f64>,
    pub intensity_variance: Option<f64>,
}

impl ReferenceValues {
    fn reference_experiment() -> Self {
        ReferenceValues {
            beta: Some(0.94),
            purcell_factor: Some(7.2),
            mode_volume_um3: Some(1.0),
            mode_extent_um: Some(25.0),
            enhancement_ratio: Some(15.8),
            intensity_variance: Some(5.3),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub write_csv: bool,
    pub write_json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            write_csv: true,
            write_json: true,
        }
    }
}

impl ExperimentConfig {
    /// Built-in defaults of the reference experiment, including its
    /// published comparison numbers.
    pub fn reference_experiment() -> Self {
        ExperimentConfig {
            references: ReferenceValues::reference_experiment(),
            ..ExperimentConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_at(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical serialized form used for the manifest hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check every block against its module preconditions before any
    /// computation or output. Returns all problems, each naming its field.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        self.validate_into(&mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }

    fn validate_into(&self, problems: &mut Vec<String>) {
        if let Err(e) = self.geometry.build().validate() {
            problems.push(format!("geometry: {e}"));
        }

        let d = &self.disorder;
        if d.sigma.is_empty() {
            problems.push("disorder.sigma: need at least one value".into());
        }
        for (i, &s) in d.sigma.iter().enumerate() {
            if !(s >= 0.0) || !s.is_finite() {
                problems.push(format!(
                    "disorder.sigma[{i}]: must be finite and non-negative, got {s}"
                ));
            }
        }
        if d.n_realizations == 0 {
            problems.push("disorder.n_realizations: must be at least 1".into());
        }

        let dp = &self.dispersion;
        match dp.build() {
            Err(e) => problems.push(format!("dispersion: {e}")),
            Ok(model) => {
                if !(dp.grid_step_nm > 0.0) {
                    problems.push("dispersion.grid_step_nm: must be positive".into());
                } else if !(dp.grid_min_nm < dp.grid_max_nm) {
                    problems.push("dispersion.grid_min_nm: must lie below grid_max_nm".into());
                } else if let Err(e) = model.group_index(dp.grid_max_nm) {
                    problems.push(format!("dispersion.grid_max_nm: {e}"));
                }
            }
        }
        if let Err(e) = dp.scatter_params().validate() {
            problems.push(format!("dispersion: {e}"));
        }

        let st = &self.statistics;
        if !(st.window_min_nm < st.window_max_nm) {
            problems.push("statistics.window_min_nm: must lie below window_max_nm".into());
        }
        if !(st.spatial_bin_um > 0.0) {
            problems.push("statistics.spatial_bin_um: must be positive".into());
        }
        if st.window_max_nm < self.dispersion.grid_min_nm
            || st.window_min_nm > self.dispersion.grid_max_nm
        {
            problems.push(
                "statistics window does not overlap the simulated wavelength grid".into(),
            );
        }

        let q = &self.qed;
        if let Err(e) = q.cavity(self.geometry.refractive_index).validate() {
            problems.push(format!("qed: {e}"));
        }
        if !(0.0..=1.0).contains(&q.dipole_overlap) {
            problems.push("qed.dipole_overlap: must lie in [0, 1]".into());
        }
        if !(q.gamma_hom_ns_inv > 0.0) {
            problems.push("qed.gamma_hom_ns_inv: must be positive".into());
        }
        if !(q.gamma_on_ns_inv > 0.0) {
            problems.push("qed.gamma_on_ns_inv: must be positive".into());
        }
        if !(q.gamma_off_ns_inv >= 0.0) {
            problems.push("qed.gamma_off_ns_inv: must be non-negative".into());
        }
        if q.gamma_off_ns_inv > q.gamma_on_ns_inv {
            problems.push("qed.gamma_off_ns_inv: must not exceed gamma_on_ns_inv".into());
        }
        if let Err(e) =
            BackgroundRates::flat(q.gamma_nr_ns_inv, q.gamma_rad_ns_inv, q.gamma_wg_ns_inv)
                .validate()
        {
            problems.push(format!("qed: {e}"));
        }
        if !(q.h_eff_um > 0.0) {
            problems.push("qed.h_eff_um: must be positive".into());
        }
        if !(q.w_eff_um > 0.0) {
            problems.push("qed.w_eff_um: must be positive".into());
        }
        if !(q.detuning_step_nm > 0.0) {
            problems.push("qed.detuning_step_nm: must be positive".into());
        } else if !(q.detuning_min_nm < q.detuning_max_nm) {
            problems.push("qed.detuning_min_nm: must lie below detuning_max_nm".into());
        }
        match (q.secondary_detuning_nm, q.secondary_overlap) {
            (None, None) => {}
            (Some(_), Some(overlap)) => {
                if !(0.0..=1.0).contains(&overlap) {
                    problems.push("qed.secondary_overlap: must lie in [0, 1]".into());
                }
            }
            _ => problems.push(
                "qed: secondary_detuning_nm and secondary_overlap must be set together".into(),
            ),
        }

        let t = &self.tuning;
        if let Err(e) = t.build().validate() {
            problems.push(format!("tuning: {e}"));
        }
        if t.qd_slope_nm_per_k == t.cavity_slope_nm_per_k {
            problems.push("tuning: emitter and cavity slopes must differ for a crossing".into());
        }
        if !(t.temperature_step_k > 0.0) {
            problems.push("tuning.temperature_step_k: must be positive".into());
        } else if !(t.temperature_min_k < t.temperature_max_k) {
            problems.push("tuning.temperature_min_k: must lie below temperature_max_k".into());
        }

        let a = &self.analysis;
        if let Err(e) = a.instrument().validate() {
            problems.push(format!("analysis: {e}"));
        }
        if !(a.repetition_rate_mhz > 0.0) {
            problems.push("analysis.repetition_rate_mhz: must be positive".into());
        } else if let Err(e) = self.synthesis_shape().validate() {
            problems.push(format!("analysis: {e}"));
        }
        if a.n_cycles == 0 {
            problems.push("analysis.n_cycles: must be at least 1".into());
        }
        if !(a.amplitude_per_cycle > 0.0) {
            problems.push("analysis.amplitude_per_cycle: must be positive".into());
        }
        if !(a.background_per_cycle_ps >= 0.0) {
            problems.push("analysis.background_per_cycle_ps: must be non-negative".into());
        }
        if !(a.rate_grid_min_ns_inv > 0.0) {
            problems.push("analysis.rate_grid_min_ns_inv: must be positive".into());
        } else if !(a.rate_grid_min_ns_inv <= a.rate_grid_max_ns_inv) {
            problems.push(
                "analysis.rate_grid_min_ns_inv: must not exceed rate_grid_max_ns_inv".into(),
            );
        }
        if a.rate_grid_points == 0 {
            problems.push("analysis.rate_grid_points: must be at least 1".into());
        }
        if a.seeds_per_rate == 0 {
            problems.push("analysis.seeds_per_rate: must be at least 1".into());
        }
        if !(a.rate_tolerance > 0.0) {
            problems.push("analysis.rate_tolerance: must be positive".into());
        }
        if !(0.0..=1.0).contains(&a.pass_threshold) {
            problems.push("analysis.pass_threshold: must lie in [0, 1]".into());
        }
        if !(a.beta_tolerance > 0.0) {
            problems.push("analysis.beta_tolerance: must be positive".into());
        }
        if !(a.q_tolerance > 0.0) {
            problems.push("analysis.q_tolerance: must be positive".into());
        }

        if self.output.directory.is_empty() {
            problems.push("output.directory: must not be empty".into());
        }
    }

    /// Histogram shape shared by every synthesis in this run; the noise
    /// mode is chosen per case.
    pub fn synthesis_shape(&self) -> anderson_qed::decay::SynthesisSetup {
        anderson_qed::decay::SynthesisSetup {
            n_cycles: self.analysis.n_cycles,
            bin_ps: self.analysis.bin_ps,
            window_ps: self.analysis.window_ps,
            repetition_period_ns: self.analysis.repetition_period_ns(),
            t0_ps: self.analysis.t0_ps,
            noise: anderson_qed::decay::NoiseMode::Expected,
        }
    }
}
