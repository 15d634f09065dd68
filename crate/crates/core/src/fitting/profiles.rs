//! Spectral line profiles on uniform grids.
//!
//! The instrument-broadened line shape (Lorentzian intrinsic line convolved
//! with a Gaussian response) is evaluated by discrete convolution of the
//! analytic Lorentzian with a normalized Gaussian kernel. The grid must be
//! uniform and finer than the Gaussian width; the Lorentzian is evaluated on
//! an analytically padded extension so the convolution has no edge bias.

use crate::error::{Error, Result};

pub const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2 sqrt(2 ln 2))

/// Peak-normalized Lorentzian.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    h * h / ((x - center) * (x - center) + h * h)
}

/// Grid step of a uniform grid; errors when the grid is too short or uneven.
pub fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let step = grid[1] - grid[0];
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("grid must be increasing".into()));
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::InvalidParameter("grid must be uniform".into()));
        }
    }
    Ok(step)
}

/// Normalized Gaussian kernel sampled on the grid step, truncated at 5 sigma.
/// Always odd-length; sums to 1.
pub fn gaussian_kernel(step: f64, fwhm: f64) -> Vec<f64> {
    let sigma = fwhm * FWHM_TO_SIGMA;
    let half = ((5.0 * sigma / step).ceil() as usize).max(1);
    let mut k: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * step;
            (-0.5 * (x / sigma) * (x / sigma)).exp()
        })
        .collect();
    let norm: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= norm;
    }
    k
}

/// Convolve `y` with an odd-length kernel, same-size output, replicating the
/// edge values beyond the ends.
pub fn convolve_same(y: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() / 2;
    let n = y.len();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &w) in kernel.iter().enumerate() {
                let idx = i as isize + j as isize - half as isize;
                let v = if idx < 0 {
                    y[0]
                } else if idx >= n as isize {
                    y[n - 1]
                } else {
                    y[idx as usize]
                };
                acc += w * v;
            }
            acc
        })
        .collect()
}

/// Total FWHM of the instrument-broadened line, used for resolvability
/// checks. Standard single-line approximation, good to about a percent.
pub fn combined_fwhm(lorentz_fwhm: f64, gauss_fwhm: f64) -> f64 {
    0.5346 * lorentz_fwhm + (0.2166 * lorentz_fwhm * lorentz_fwhm + gauss_fwhm * gauss_fwhm).sqrt()
}

/// Instrument-broadened line on `grid`: `amplitude` times the unit-peak
/// Lorentzian convolved with a unit-area Gaussian of width `gauss_fwhm`.
/// A vanishing Gaussian width returns the bare Lorentzian.
pub fn voigt_on_grid(
    grid: &[f64],
    center: f64,
    lorentz_fwhm: f64,
    gauss_fwhm: f64,
    amplitude: f64,
) -> Result<Vec<f64>> {
    if !(lorentz_fwhm > 0.0) {
        return Err(Error::InvalidParameter(
            "Lorentzian width must be positive".into(),
        ));
    }
    if gauss_fwhm < 0.0 {
        return Err(Error::InvalidParameter(
            "Gaussian width must be non-negative".into(),
        ));
    }
    let step = uniform_step(grid)?;
    if gauss_fwhm < 0.1 * step {
        return Ok(grid
            .iter()
            .map(|&x| amplitude * lorentzian(x, center, lorentz_fwhm))
            .collect());
    }
    let kernel = gaussian_kernel(step, gauss_fwhm);
    let half = kernel.len() / 2;
    let n = grid.len();
    // Lorentzian on the padded grid, evaluated analytically.
    let padded: Vec<f64> = (0..n + 2 * half)
        .map(|i| {
            let x = grid[0] + (i as f64 - half as f64) * step;
            lorentzian(x, center, lorentz_fwhm)
        })
        .collect();
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &w) in kernel.iter().enumerate() {
                acc += w * padded[i + j];
            }
            amplitude * acc
        })
        .collect();
    Ok(out)
}
