//! One-dimensional coherent transport through a disordered waveguide.
//!
//! Each lattice period is reduced to a symmetric two-port scatterer with
//! intensity reflectance R_j = kappa * sigma_eff_j^2 * n_g^p (p = 2 by
//! default), a per-cell loss alpha, and a propagation phase composed of the
//! band-structure part plus a frozen random offset. Cells are cascaded as
//! 2x2 complex transfer matrices with periodic renormalization, so deeply
//! localized stacks with transmission far below double-precision underflow
//! still yield finite log-transmission.
//!
//! Conventions: the transfer matrix maps (E+, E-) on the left of a cell to
//! the right, M = [[(t^2 - r^2)/t, r/t], [-r/t, 1/t]]. Every cell here is
//! reciprocal, det M = 1, so the stack transmission amplitude is 1/M22 and
//! the left reflection amplitude -M21/M22.

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::fitting::profiles::{
    combined_fwhm, convolve_same, gaussian_kernel, uniform_step, voigt_on_grid,
};
use crate::fitting::{find_peaks, minimize, NmOptions};
use crate::geometry::{DisorderRealization, WaveguideGeometry, PHASE_STREAM};
use crate::rng::stream_rng;
use crate::util::{linear_fit, mean, pairwise_sum};
use num_complex::Complex64;
use rand::Rng;

/// Entry magnitude that triggers cascade renormalization.
const RESCALE_THRESHOLD: f64 = 1e150;
/// Reflectances are clamped into [0, 1) by this margin.
const MAX_REFLECTANCE: f64 = 1.0 - 1e-12;

/// Scattering strength parameters tying disorder to per-cell reflectance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterParams {
    /// Dimensionless backscatter calibration constant.
    pub kappa: f64,
    /// Group-index exponent p in R = kappa sigma^2 n_g^p.
    pub ng_exponent: f64,
    /// Intensity loss per cell, in [0, 1).
    pub loss_per_cell: f64,
}

impl ScatterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return Err(Error::InvalidParameter("kappa must be non-negative".into()));
        }
        if !(self.ng_exponent >= 0.0) {
            return Err(Error::InvalidParameter(
                "group-index exponent must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.loss_per_cell) {
            return Err(Error::InvalidParameter(
                "per-cell loss must sit in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One period reduced to complex reflection/transmission amplitudes plus the
/// intensity loss it carries. |r|^2 + |t|^2 <= 1, equality iff loss = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScattering {
    pub reflection: Complex64,
    pub transmission: Complex64,
    pub loss: f64,
}

impl CellScattering {
    /// Build a cell from its intensity reflectance, a global phase, and an
    /// intensity loss. The pi/2 phase between r and t makes the lossless
    /// cell unitary.
    pub fn from_reflectance(reflectance: f64, phase: f64, loss: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&reflectance) {
            return Err(Error::InvalidParameter(format!(
                "cell reflectance must sit in [0, 1), got {reflectance}"
            )));
        }
        if !(0.0..1.0).contains(&loss) {
            return Err(Error::InvalidParameter(format!(
                "cell loss must sit in [0, 1), got {loss}"
            )));
        }
        let survive = (1.0 - loss).sqrt();
        let global = Complex64::from_polar(1.0, phase);
        Ok(CellScattering {
            reflection: Complex64::new(0.0, reflectance.sqrt()) * global * survive,
            transmission: Complex64::new((1.0 - reflectance).sqrt(), 0.0) * global * survive,
            loss,
        })
    }

    /// |r|^2 + |t|^2; equals 1 - loss for cells built here.
    pub fn energy_sum(&self) -> f64 {
        self.reflection.norm_sqr() + self.transmission.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy)]
struct TransferMatrix {
    m11: Complex64,
    m12: Complex64,
    m21: Complex64,
    m22: Complex64,
}

impl TransferMatrix {
    fn identity() -> Self {
        TransferMatrix {
            m11: Complex64::new(1.0, 0.0),
            m12: Complex64::new(0.0, 0.0),
            m21: Complex64::new(0.0, 0.0),
            m22: Complex64::new(1.0, 0.0),
        }
    }

    fn from_cell(cell: &CellScattering) -> Self {
        let t = cell.transmission;
        let r = cell.reflection;
        TransferMatrix {
            m11: (t * t - r * r) / t,
            m12: r / t,
            m21: -r / t,
            m22: Complex64::new(1.0, 0.0) / t,
        }
    }

    /// Matrix product self * rhs.
    fn compose(&self, rhs: &Self) -> Self {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    fn max_abs(&self) -> f64 {
        self.m11
            .norm()
            .max(self.m12.norm())
            .max(self.m21.norm())
            .max(self.m22.norm())
    }

    fn scale(&mut self, factor: f64) {
        self.m11 *= factor;
        self.m12 *= factor;
        self.m21 *= factor;
        self.m22 *= factor;
    }
}

/// Transmission, reflection and loss of a cascaded stack.
#[derive(Debug, Clone, Copy)]
pub struct CascadeResult {
    /// Intensity transmission; underflows to 0 for very deep localization.
    pub transmission: f64,
    /// ln T, finite even when T underflows.
    pub ln_transmission: f64,
    pub reflection: f64,
    /// 1 - T - R, zero (to rounding) for lossless stacks.
    pub loss_fraction: f64,
}

/// Cascade the per-cell transfer matrices of a whole stack.
pub fn cascade(cells: &[CellScattering]) -> CascadeResult {
    let mut m = TransferMatrix::identity();
    let mut log_scale = 0.0f64;
    for cell in cells {
        m = TransferMatrix::from_cell(cell).compose(&m);
        let mag = m.max_abs();
        if mag > RESCALE_THRESHOLD {
            m.scale(1.0 / mag);
            log_scale += mag.ln();
        }
    }
    // det(M_true) = 1, so t = 1 / (m22 * e^{log_scale}).
    let ln_t_amp = -(m.m22.norm().ln() + log_scale);
    let ln_transmission = 2.0 * ln_t_amp;
    let transmission = ln_transmission.exp();
    let reflection = (m.m21 / m.m22).norm_sqr();
    let loss_fraction = (1.0 - transmission - reflection).max(0.0);
    CascadeResult {
        transmission,
        ln_transmission,
        reflection,
        loss_fraction,
    }
}

/// Total field intensity |E+|^2 + |E-|^2 at every cell boundary (N+1 values)
/// for unit flux incident from the left.
///
/// The sweep runs backwards from the transmitted side, where only a
/// right-going wave exists. Going leftwards the field amplitude grows, so
/// the physical solution dominates the roundoff; a forward sweep would let
/// the exponentially growing admixture of the wrong solution take over
/// deep inside a localized stack.
pub fn boundary_intensities(cells: &[CellScattering]) -> Vec<f64> {
    let n = cells.len();
    let mut fields = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let mut ln_scale = 0.0f64;
    let record =
        |f: &(Complex64, Complex64), s: f64| (f.0.norm_sqr() + f.1.norm_sqr()).ln() + 2.0 * s;
    let mut ln_i = vec![0.0f64; n + 1];
    ln_i[n] = record(&fields, ln_scale);
    for j in (0..n).rev() {
        let m = TransferMatrix::from_cell(&cells[j]);
        // Inverse via the adjugate; det M = 1 for these cells.
        fields = (
            m.m22 * fields.0 - m.m12 * fields.1,
            -m.m21 * fields.0 + m.m11 * fields.1,
        );
        let mag = fields.0.norm().max(fields.1.norm());
        if mag > RESCALE_THRESHOLD {
            fields.0 /= mag;
            fields.1 /= mag;
            ln_scale += mag.ln();
        }
        ln_i[j] = record(&fields, ln_scale);
    }
    // Scale so the incident right-going amplitude at the left face is 1.
    let ln_incident = fields.0.norm_sqr().ln() + 2.0 * ln_scale;
    ln_i.iter()
        .map(|&l| {
            let v = l - ln_incident;
            if v > 700.0 {
                f64::MAX
            } else {
                v.exp()
            }
        })
        .collect()
}

/// Wavelength-independent description of a disordered stack: per-cell
/// effective displacement fractions and frozen random phase offsets.
/// Per-cell reflectances follow from these once a wavelength fixes the
/// group index.
#[derive(Debug, Clone)]
pub struct CellBlueprint {
    sigma_eff: Vec<f64>,
    phase_offset: Vec<f64>,
    params: ScatterParams,
    lattice_constant_nm: f64,
}

impl CellBlueprint {
    pub fn new(
        geometry: &WaveguideGeometry,
        realization: &DisorderRealization,
        params: ScatterParams,
    ) -> Result<Self> {
        geometry.validate()?;
        params.validate()?;
        let n_cells = geometry.n_cells();
        if realization.holes.len() != n_cells * geometry.holes_per_cell() {
            return Err(Error::InvalidParameter(format!(
                "realization carries {} holes, geometry expects {}",
                realization.holes.len(),
                n_cells * geometry.holes_per_cell()
            )));
        }
        let a = geometry.lattice_constant_nm;
        let mut sq_sum = vec![0.0f64; n_cells];
        let mut counts = vec![0usize; n_cells];
        for hole in &realization.holes {
            if hole.cell >= n_cells {
                return Err(Error::InvalidParameter(format!(
                    "hole cell index {} out of range",
                    hole.cell
                )));
            }
            sq_sum[hole.cell] += hole.dx_nm * hole.dx_nm + hole.dy_nm * hole.dy_nm;
            counts[hole.cell] += 1;
        }
        let sigma_eff: Vec<f64> = sq_sum
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| {
                if c == 0 {
                    0.0
                } else {
                    (s / (2.0 * c as f64)).sqrt() / a
                }
            })
            .collect();
        let mut phase_rng = stream_rng(realization.seed, PHASE_STREAM);
        let phase_offset: Vec<f64> = (0..n_cells)
            .map(|_| phase_rng.random::<f64>() * 2.0 * std::f64::consts::PI)
            .collect();
        Ok(CellBlueprint {
            sigma_eff,
            phase_offset,
            params,
            lattice_constant_nm: a,
        })
    }

    /// Assemble a blueprint directly from per-cell effective displacement
    /// fractions and phase offsets (test harnesses, synthetic stacks).
    pub fn from_parts(
        sigma_eff: Vec<f64>,
        phase_offset: Vec<f64>,
        params: ScatterParams,
        lattice_constant_nm: f64,
    ) -> Result<Self> {
        params.validate()?;
        if sigma_eff.len() != phase_offset.len() {
            return Err(Error::InvalidParameter(
                "sigma_eff and phase_offset lengths differ".into(),
            ));
        }
        Ok(CellBlueprint {
            sigma_eff,
            phase_offset,
            params,
            lattice_constant_nm,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.sigma_eff.len()
    }

    pub fn sigma_eff(&self) -> &[f64] {
        &self.sigma_eff
    }

    /// Per-cell scatterers at one wavelength. The reflectance picks up the
    /// group-index factor, the phase the band wavenumber.
    pub fn cells_at(
        &self,
        model: &DispersionModel,
        wavelength_nm: f64,
    ) -> Result<Vec<CellScattering>> {
        let ng = model.group_index(wavelength_nm)?;
        let q = model.wavenumber_offset(wavelength_nm)?;
        let band_phase = -q * self.lattice_constant_nm;
        let ng_pow = ng.powf(self.params.ng_exponent);
        self.sigma_eff
            .iter()
            .zip(&self.phase_offset)
            .map(|(&sig, &dphi)| {
                let r = (self.params.kappa * sig * sig * ng_pow).min(MAX_REFLECTANCE);
                CellScattering::from_reflectance(r, band_phase + dphi, self.params.loss_per_cell)
            })
            .collect()
    }

    /// Stack transmission/reflection at a single wavelength.
    pub fn cascade_at(&self, model: &DispersionModel, wavelength_nm: f64) -> Result<CascadeResult> {
        Ok(cascade(&self.cells_at(model, wavelength_nm)?))
    }
}

/// Per-cell scatterers of a disorder realization at one wavelength.
pub fn build_cells(
    geometry: &WaveguideGeometry,
    realization: &DisorderRealization,
    model: &DispersionModel,
    wavelength_nm: f64,
    params: ScatterParams,
) -> Result<Vec<CellScattering>> {
    CellBlueprint::new(geometry, realization, params)?.cells_at(model, wavelength_nm)
}

/// A localized-mode resonance extracted from a transmission spectrum.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ModeResonance {
    pub wavelength_nm: f64,
    /// Quality factor from the intrinsic (deconvolved) linewidth.
    pub q_factor: f64,
    pub intrinsic_fwhm_nm: f64,
    pub peak_transmission: f64,
    /// Intensity-weighted center of the mode along the waveguide.
    pub centroid_um: f64,
    /// Twice the intensity-weighted rms half-extent.
    pub extent_um: f64,
    /// Set when the fitted line is narrower than the grid can resolve.
    pub unresolved: bool,
}

/// Transmission spectrum plus boundary intensity profiles of one stack.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub wavelength_nm: Vec<f64>,
    pub transmission: Vec<f64>,
    pub ln_transmission: Vec<f64>,
    pub reflection: Vec<f64>,
    /// intensity[i][j]: |E|^2 at boundary j for wavelength i.
    pub intensity: Vec<Vec<f64>>,
    /// Boundary positions along the waveguide, micrometers.
    pub positions_um: Vec<f64>,
    pub resonances: Vec<ModeResonance>,
}

impl TransportResult {
    /// ln T at the grid point nearest to `wavelength_nm`.
    pub fn ln_transmission_at(&self, wavelength_nm: f64) -> Result<f64> {
        if self.wavelength_nm.is_empty() {
            return Err(Error::InsufficientData("empty spectrum".into()));
        }
        let idx = self
            .wavelength_nm
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - wavelength_nm)
                    .abs()
                    .partial_cmp(&(*b - wavelength_nm).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap();
        Ok(self.ln_transmission[idx])
    }

    /// Average the boundary-intensity columns into spatial bins of
    /// `bin_um`. Returns bin centers and intensity[i][bin].
    pub fn binned_intensity(&self, bin_um: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if !(bin_um > 0.0) {
            return Err(Error::InvalidParameter("bin size must be positive".into()));
        }
        let n_bins = self
            .positions_um
            .iter()
            .map(|&p| (p / bin_um).floor() as usize)
            .max()
            .map(|m| m + 1)
            .unwrap_or(0);
        let mut counts = vec![0usize; n_bins];
        let mut bin_of = Vec::with_capacity(self.positions_um.len());
        for &p in &self.positions_um {
            let b = (p / bin_um).floor() as usize;
            bin_of.push(b);
            counts[b] += 1;
        }
        let centers: Vec<f64> = (0..n_bins).map(|b| (b as f64 + 0.5) * bin_um).collect();
        let binned = self
            .intensity
            .iter()
            .map(|row| {
                let mut acc = vec![0.0f64; n_bins];
                for (&b, &v) in bin_of.iter().zip(row) {
                    acc[b] += v;
                }
                acc.iter()
                    .zip(&counts)
                    .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        Ok((centers, binned))
    }
}

/// Sweep a wavelength grid: cascade the blueprint at every grid point and
/// record transmission, reflection and the boundary intensity profile.
pub fn transmission_spectrum(
    blueprint: &CellBlueprint,
    model: &DispersionModel,
    wavelength_grid_nm: &[f64],
) -> Result<TransportResult> {
    if wavelength_grid_nm.is_empty() {
        return Err(Error::InvalidParameter("empty wavelength grid".into()));
    }
    let n = wavelength_grid_nm.len();
    let mut transmission = Vec::with_capacity(n);
    let mut ln_transmission = Vec::with_capacity(n);
    let mut reflection = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for &lam in wavelength_grid_nm {
        let cells = blueprint.cells_at(model, lam)?;
        let res = cascade(&cells);
        transmission.push(res.transmission);
        ln_transmission.push(res.ln_transmission);
        reflection.push(res.reflection);
        intensity.push(boundary_intensities(&cells));
    }
    let a_um = blueprint.lattice_constant_nm / 1000.0;
    let positions_um: Vec<f64> = (0..=blueprint.n_cells()).map(|j| j as f64 * a_um).collect();
    Ok(TransportResult {
        wavelength_nm: wavelength_grid_nm.to_vec(),
        transmission,
        ln_transmission,
        reflection,
        intensity,
        positions_um,
        resonances: Vec::new(),
    })
}

/// Convolve the spectrum (transmission and boundary intensities) with a
/// Gaussian of the given FWHM along wavelength, mimicking the spectrometer.
pub fn apply_spectral_irf(result: &mut TransportResult, fwhm_nm: f64) -> Result<()> {
    if fwhm_nm < 0.0 {
        return Err(Error::InvalidParameter(
            "instrument width must be non-negative".into(),
        ));
    }
    if result.wavelength_nm.len() < 2 {
        return Ok(());
    }
    let step = uniform_step(&result.wavelength_nm)?;
    if fwhm_nm < 0.1 * step {
        return Ok(());
    }
    let kernel = gaussian_kernel(step, fwhm_nm);
    result.transmission = convolve_same(&result.transmission, &kernel);
    result.ln_transmission = result
        .transmission
        .iter()
        .map(|&t| if t > 0.0 { t.ln() } else { f64::NEG_INFINITY })
        .collect();
    result.reflection = convolve_same(&result.reflection, &kernel);
    let n_bnd = result.intensity.first().map(|r| r.len()).unwrap_or(0);
    let n_lam = result.intensity.len();
    for b in 0..n_bnd {
        let col: Vec<f64> = (0..n_lam).map(|i| result.intensity[i][b]).collect();
        let smooth = convolve_same(&col, &kernel);
        for i in 0..n_lam {
            result.intensity[i][b] = smooth[i];
        }
    }
    Ok(())
}

/// Knobs for resonance extraction.
#[derive(Debug, Clone, Copy)]
pub struct ResonanceSearch {
    /// Reject peaks whose prominence is below this fraction of their height.
    pub min_prominence_ratio: f64,
    /// Absolute transmission floor for candidate peaks.
    pub min_peak_transmission: f64,
    /// Gaussian instrument FWHM assumed already applied to the spectrum;
    /// the fit deconvolves it. Zero means a bare Lorentzian fit.
    pub spectral_irf_fwhm_nm: f64,
    /// Bound on how many peaks are fitted, tallest first.
    pub max_peaks: usize,
}

impl Default for ResonanceSearch {
    fn default() -> Self {
        ResonanceSearch {
            min_prominence_ratio: 0.5,
            min_peak_transmission: 1e-9,
            spectral_irf_fwhm_nm: 0.15,
            max_peaks: 64,
        }
    }
}

/// Locate transmission peaks and fit each with an instrument-broadened
/// Lorentzian on a local window. Q is quoted from the deconvolved width.
pub fn find_resonances(
    result: &TransportResult,
    search: &ResonanceSearch,
) -> Result<Vec<ModeResonance>> {
    let grid = &result.wavelength_nm;
    if grid.len() < 5 {
        return Ok(Vec::new());
    }
    let step = uniform_step(grid)?;
    let peaks = find_peaks(
        &result.transmission,
        search.min_prominence_ratio,
        search.min_peak_transmission,
    );
    let mut out = Vec::new();
    for peak in peaks.iter().take(search.max_peaks) {
        let i = peak.index;
        let t = &result.transmission;
        // Rough half-width from the half-maximum crossings.
        let half = t[i] / 2.0;
        let mut l = i;
        while l > 0 && t[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < t.len() && t[r] > half {
            r += 1;
        }
        let est_fwhm = ((r - l) as f64 * step).max(step);
        let pad = ((4.0 * est_fwhm / step).ceil() as usize).max(8);
        let w_lo = i.saturating_sub(pad);
        let w_hi = (i + pad).min(t.len() - 1);
        let wgrid = &grid[w_lo..=w_hi];
        let wdata = &t[w_lo..=w_hi];
        let baseline0 = wdata.iter().cloned().fold(f64::INFINITY, f64::min);
        let amp0 = (t[i] - baseline0).max(1e-300);
        let gw = search.spectral_irf_fwhm_nm;
        // Initial intrinsic width: subtract the instrument share.
        let lw0 = (est_fwhm - gw).max(0.25 * step);
        let objective = |p: &[f64]| -> f64 {
            let center = p[0];
            let lw = p[1].exp();
            let amp = p[2].exp();
            let base = p[3];
            match voigt_on_grid(wgrid, center, lw, gw, amp) {
                Ok(model) => pairwise_sum(
                    &model
                        .iter()
                        .zip(wdata)
                        .map(|(m, d)| (m + base - d).powi(2))
                        .collect::<Vec<_>>(),
                ),
                Err(_) => f64::INFINITY,
            }
        };
        let x0 = [grid[i], lw0.ln(), amp0.ln(), baseline0];
        let steps = [step, 0.5, 0.5, 0.1 * amp0 + 1e-300];
        let fit = minimize(objective, &x0, &steps, &NmOptions::default());
        // A center dragged outside the window is extrapolation, not a
        // position; quote the grid peak instead and flag it.
        let fit_ok = fit.x[0] >= wgrid[0]
            && fit.x[0] <= wgrid[wgrid.len() - 1]
            && fit.x[1].exp().is_finite();
        let (center, lw) = if fit_ok {
            (fit.x[0], fit.x[1].exp())
        } else {
            (grid[i], lw0)
        };
        let q = center / lw;
        let unresolved = !fit_ok || combined_fwhm(lw, gw) < 2.0 * step || wgrid.len() < 6;
        // Spatial moments from the intensity profile at the peak.
        let (centroid_um, extent_um) = if result.intensity.len() == t.len()
            && !result.positions_um.is_empty()
        {
            let row = &result.intensity[i];
            let total = pairwise_sum(row);
            if total > 0.0 {
                let c = pairwise_sum(
                    &row.iter()
                        .zip(&result.positions_um)
                        .map(|(w, x)| w * x)
                        .collect::<Vec<_>>(),
                ) / total;
                let var = pairwise_sum(
                    &row.iter()
                        .zip(&result.positions_um)
                        .map(|(w, x)| w * (x - c) * (x - c))
                        .collect::<Vec<_>>(),
                ) / total;
                (c, 2.0 * var.max(0.0).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        out.push(ModeResonance {
            wavelength_nm: center,
            q_factor: q,
            intrinsic_fwhm_nm: lw,
            peak_transmission: t[i],
            centroid_um,
            extent_um,
            unresolved,
        });
    }
    out.sort_by(|a, b| {
        a.wavelength_nm
            .partial_cmp(&b.wavelength_nm)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// ln T samples of one ensemble at a fixed probe wavelength and length.
#[derive(Debug, Clone)]
pub struct LengthEnsemble {
    pub length_um: f64,
    pub ln_transmission: Vec<f64>,
}

/// Result of the <ln T> vs length fit.
#[derive(Debug, Clone, Copy)]
pub struct LocalizationFit {
    /// Localization length; +inf when the fitted slope is non-negative.
    pub xi_um: f64,
    pub xi_stderr_um: Option<f64>,
    pub slope_per_um: f64,
    pub r_squared: f64,
    pub unbounded: bool,
}

/// Fit <ln T> = -L/xi over an ensemble of lengths. Needs at least two
/// distinct lengths with at least 20 realizations each.
pub fn localization_length(groups: &[LengthEnsemble]) -> Result<LocalizationFit> {
    let mut lengths = Vec::new();
    let mut means = Vec::new();
    for g in groups {
        if g.ln_transmission.len() < 20 {
            return Err(Error::InsufficientData(format!(
                "length {} um has {} realizations; need at least 20",
                g.length_um,
                g.ln_transmission.len()
            )));
        }
        lengths.push(g.length_um);
        means.push(mean(&g.ln_transmission));
    }
    let mut distinct = lengths.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two distinct lengths".into(),
        ));
    }
    let fit = linear_fit(&lengths, &means)?;
    if fit.slope >= 0.0 {
        return Ok(LocalizationFit {
            xi_um: f64::INFINITY,
            xi_stderr_um: None,
            slope_per_um: fit.slope,
            r_squared: fit.r_squared,
            unbounded: true,
        });
    }
    let xi = -1.0 / fit.slope;
    let stderr = if fit.slope_stderr.is_finite() {
        Some(fit.slope_stderr / (fit.slope * fit.slope))
    } else {
        None
    };
    Ok(LocalizationFit {
        xi_um: xi,
        xi_stderr_um: stderr,
        slope_per_um: fit.slope,
        r_squared: fit.r_squared,
        unbounded: false,
    })
}
