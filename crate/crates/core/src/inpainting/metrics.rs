//! Restoration quality: SNR in decibels and global SSIM.

use crate::error::{Error, Result};
use crate::operators::Point;

pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `20 log₁₀(‖x‖ / ‖x − x_r‖)` against the reference `x`. Returns
/// `f64::INFINITY` when the restoration is exact.
pub fn snr(x: &Point, x_r: &Point) -> Result<f64> {
    if x.shape() != x_r.shape() {
        return Err(Error::input("SNR operands differ in shape"));
    }
    let signal = x.norm();
    if signal == 0.0 {
        return Err(Error::input("SNR reference image is identically zero"));
    }
    let err = (x - x_r).norm();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (signal / err).log10())
}

/// Single-window SSIM over the whole image with `c₁ = (K₁L)²`,
/// `c₂ = (K₂L)²`. Means, variances and covariance are population
/// statistics (normalized by the pixel count).
pub fn ssim(x: &Point, x_r: &Point, dynamic_range: f64) -> f64 {
    assert_eq!(x.shape(), x_r.shape(), "SSIM operands differ in shape");
    let n = x.len() as f64;
    let c1 = (SSIM_K1 * dynamic_range).powi(2);
    let c2 = (SSIM_K2 * dynamic_range).powi(2);
    let mean_x = x.sum() / n;
    let mean_r = x_r.sum() / n;
    let (mut var_x, mut var_r, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(x_r.iter()) {
        let da = a - mean_x;
        let db = b - mean_r;
        var_x += da * da;
        var_r += db * db;
        cov += da * db;
    }
    var_x /= n;
    var_r /= n;
    cov /= n;
    let luminance = (2.0 * mean_x * mean_r + c1) / (mean_x * mean_x + mean_r * mean_r + c1);
    let structure = (2.0 * cov + c2) / (var_x + var_r + c2);
    luminance * structure
}
