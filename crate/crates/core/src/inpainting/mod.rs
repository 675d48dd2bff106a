//! Constrained nuclear-norm image inpainting:
//!
//! ```text
//! min_x  ½‖P_Ω(u) − P_Ω(x)‖²_F + μ‖x‖_* + ι_{x ≥ 0}(x)
//! ```
//!
//! split as `A = ∂ι_{≥0}` (projection), `B = ∂(μ‖·‖_*)` (singular value
//! thresholding) and `C = ∇h` (masked residual, `β = 1`).

pub mod experiment;
pub mod metrics;
pub mod pgm;

pub use experiment::{
    run_experiment, CellResult, ExperimentOutput, ExperimentSpec, ImageSource, MetricsRow,
    ParameterCase,
};
pub use metrics::{snr, ssim};

use crate::error::{Error, Result};
use crate::operators::{
    mask_project, nuclear_norm, Mask, MaskedQuadraticGradient, NonnegProjection, NuclearProx,
    OperatorTriple, Point,
};
use crate::rng::{stream, Stream};

/// Observation mask where each pixel is kept with probability
/// `1 − missing_rate`. One uniform is drawn per pixel in row-major order
/// from the mask stream of `seed`; the pixel is observed iff the draw is
/// `≥ missing_rate`. Masks of one seed are therefore nested across rates.
pub fn make_mask(shape: (usize, usize), missing_rate: f64, seed: u64) -> Mask {
    assert!(
        (0.0..=1.0).contains(&missing_rate),
        "missing rate {missing_rate} outside [0, 1]"
    );
    let (rows, cols) = shape;
    let mut s = Stream::new(seed, stream::MASK);
    let draws: Vec<f64> = (0..rows * cols).map(|_| s.uniform()).collect();
    Mask::from_fn(rows, cols, |i, j| draws[i * cols + j] >= missing_rate)
}

/// `x + σg` with `g` standard normal, one draw per pixel in row-major order
/// from the noise stream of `seed`.
pub fn add_noise(x: &Point, sigma: f64, seed: u64) -> Point {
    assert!(sigma >= 0.0, "noise level must be nonnegative");
    if sigma == 0.0 {
        return x.clone();
    }
    let (rows, cols) = x.shape();
    let mut s = Stream::new(seed, stream::NOISE);
    let g: Vec<f64> = (0..rows * cols).map(|_| s.normal()).collect();
    Point::from_fn(rows, cols, |i, j| x[(i, j)] + sigma * g[i * cols + j])
}

/// Deterministic rank-5 test image in `[0, 1]`: a weighted sum of five
/// outer products of nonnegative sinusoids, scaled to a unit maximum.
pub fn synthetic_image(rows: usize, cols: usize) -> Point {
    use std::f64::consts::PI;
    let row_factor = |r: usize, i: usize| {
        0.5 + 0.5 * (2.0 * PI * (r + 1) as f64 * i as f64 / rows as f64 + r as f64).sin()
    };
    let col_factor = |r: usize, j: usize| {
        0.5 + 0.5 * (PI * (r + 2) as f64 * j as f64 / cols as f64 + 0.3 * r as f64).cos()
    };
    let mut img = Point::zeros(rows, cols);
    for r in 0..5 {
        let w = 1.0 / (r + 1) as f64;
        for j in 0..cols {
            let c = col_factor(r, j);
            for i in 0..rows {
                img[(i, j)] += w * row_factor(r, i) * c;
            }
        }
    }
    let peak = img.max();
    if peak > 0.0 {
        img /= peak;
    }
    img
}

#[derive(Debug, Clone)]
pub struct InpaintingProblem {
    /// `P_Ω(u)`; entries off the mask are stored as zero.
    observed: Point,
    mask: Mask,
    pub mu: f64,
    pub dynamic_range: f64,
}

impl InpaintingProblem {
    pub fn new(u: &Point, mask: Mask, mu: f64) -> Result<Self> {
        if u.shape() != mask.shape() {
            return Err(Error::input(format!(
                "image {:?} and mask {:?} differ in shape",
                u.shape(),
                mask.shape()
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::param(format!("μ must be nonnegative, got {mu}")));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("observed image has non-finite entries"));
        }
        Ok(Self {
            observed: mask_project(u, &mask),
            mask,
            mu,
            dynamic_range: 1.0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    pub fn observed(&self) -> &Point {
        &self.observed
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn triple(&self) -> Result<OperatorTriple> {
        OperatorTriple::new(
            self.shape(),
            Box::new(NonnegProjection),
            Box::new(NuclearProx { weight: self.mu }),
            Box::new(MaskedQuadraticGradient::new(
                self.observed.clone(),
                self.mask.clone(),
            )?),
        )
    }

    /// `z⁰ = P_Ω(u)`.
    pub fn initial_point(&self) -> Point {
        self.observed.clone()
    }

    /// Objective value; `+∞` outside the nonnegative orthant.
    pub fn objective(&self, x: &Point) -> f64 {
        if x.iter().any(|&v| v < 0.0) {
            return f64::INFINITY;
        }
        let data = 0.5 * mask_project(&(x - &self.observed), &self.mask).norm_squared();
        data + self.mu * nuclear_norm(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_extremes_and_determinism() {
        assert_eq!(make_mask((5, 7), 0.0, 3), Mask::full(5, 7));
        assert_eq!(make_mask((5, 7), 1.0, 3), Mask::empty(5, 7));
        assert_eq!(make_mask((9, 9), 0.4, 11), make_mask((9, 9), 0.4, 11));
        assert_ne!(make_mask((9, 9), 0.4, 11), make_mask((9, 9), 0.4, 12));
    }

    #[test]
    fn masks_are_nested_across_rates() {
        let lo = make_mask((16, 16), 0.4, 5);
        let hi = make_mask((16, 16), 0.8, 5);
        for (a, b) in lo.as_slice().iter().zip(hi.as_slice()) {
            assert!(!b || *a);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let x = synthetic_image(6, 5);
        assert_eq!(add_noise(&x, 0.0, 1), x);
    }

    #[test]
    fn synthetic_image_is_rank_five_in_unit_range() {
        let img = synthetic_image(32, 32);
        assert!(img.min() >= 0.0);
        assert!((img.max() - 1.0).abs() < 1e-15);
        let sv = img.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv.max()).count();
        assert_eq!(rank, 5);
    }

    #[test]
    fn problem_ignores_unobserved_data() {
        let u = Point::from_element(2, 2, 0.7);
        let mask = Mask::from_fn(2, 2, |i, _| i == 0);
        let p = InpaintingProblem::new(&u, mask, 0.1).unwrap();
        assert_eq!(p.observed()[(1, 0)], 0.0);
        assert_eq!(p.objective(&Point::from_element(2, 2, -1.0)), f64::INFINITY);
    }
}
