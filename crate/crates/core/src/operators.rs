//! Operator abstractions for `0 ∈ Ax + Bx + Cx` and the concrete
//! resolvents and gradients used by the inpainting problem and the oracles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An element of the working Hilbert space: a dense matrix with the
/// Frobenius inner product. Vectors are stored as single columns.
pub type Point = DMatrix<f64>;

/// A maximally monotone operator accessed through its resolvent
/// `J_{γA} = (I + γA)^{-1}`.
pub trait Resolvent: Send + Sync {
    fn resolve(&self, point: &Point, gamma: f64) -> Result<Point>;

    /// Shape the operator is tied to, if any.
    fn shape(&self) -> Option<(usize, usize)> {
        None
    }
}

/// A single-valued `β`-cocoercive operator, evaluated forward.
pub trait Cocoercive: Send + Sync {
    fn apply(&self, point: &Point) -> Result<Point>;

    /// Cocoercivity modulus `β`: `⟨p − q, Cp − Cq⟩ ≥ β‖Cp − Cq‖²`.
    fn beta(&self) -> f64;

    fn shape(&self) -> Option<(usize, usize)> {
        None
    }
}

/// The problem data `(A, B, C)` on a fixed shape.
pub struct OperatorTriple {
    pub a: Box<dyn Resolvent>,
    pub b: Box<dyn Resolvent>,
    pub c: Box<dyn Cocoercive>,
    shape: (usize, usize),
}

impl OperatorTriple {
    pub fn new(
        shape: (usize, usize),
        a: Box<dyn Resolvent>,
        b: Box<dyn Resolvent>,
        c: Box<dyn Cocoercive>,
    ) -> Result<Self> {
        let declared = [("A", a.shape()), ("B", b.shape()), ("C", c.shape())];
        for (name, s) in declared {
            if let Some(s) = s {
                if s != shape {
                    return Err(Error::input(format!(
                        "operator {name} acts on {}x{}, triple declared {}x{}",
                        s.0, s.1, shape.0, shape.1
                    )));
                }
            }
        }
        if !(c.beta() > 0.0 && c.beta().is_finite()) {
            return Err(Error::param(format!(
                "cocoercivity modulus must be positive, got {}",
                c.beta()
            )));
        }
        Ok(Self { a, b, c, shape })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn beta(&self) -> f64 {
        self.c.beta()
    }

    pub fn zeros(&self) -> Point {
        Point::zeros(self.shape.0, self.shape.1)
    }

    pub(crate) fn check_shape(&self, p: &Point) -> Result<()> {
        if p.shape() != self.shape {
            return Err(Error::input(format!(
                "point is {}x{}, problem is {}x{}",
                p.nrows(),
                p.ncols(),
                self.shape.0,
                self.shape.1
            )));
        }
        Ok(())
    }
}

/// Observation set `Ω` of a matrix, stored in the same column-major order
/// as [`Point`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl Mask {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut observed = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                observed.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            observed,
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| false)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[j * self.rows + i]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    /// Column-major flags, matching `Point::as_slice`.
    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }
}

pub fn soft_threshold(s: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    s.signum() * (s.abs() - tau).max(0.0)
}

pub fn prox_l1(x: &Point, tau: f64) -> Point {
    x.map(|v| soft_threshold(v, tau))
}

pub fn project_nonneg(x: &Point) -> Point {
    x.map(|v| v.max(0.0))
}

/// Singular value thresholding: the proximity operator of `τ‖·‖_*`.
pub fn prox_nuclear(x: &Point, tau: f64) -> Result<Point> {
    if !(tau >= 0.0) {
        return Err(Error::param(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite entry passed to nuclear-norm prox"));
    }
    if x.is_empty() {
        return Ok(x.clone());
    }
    let svd = x
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::input("SVD did not converge"))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::input("SVD did not return singular vectors")),
    };
    let mut out = Point::zeros(x.nrows(), x.ncols());
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        let shrunk = soft_threshold(sigma, tau);
        if shrunk > 0.0 {
            out.ger(shrunk, &u.column(i), &v_t.row(i).transpose(), 1.0);
        }
    }
    Ok(out)
}

pub fn nuclear_norm(x: &Point) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.singular_values().sum()
}

/// `P_Ω`: keeps observed entries and zeroes the rest.
///
/// Panics if the mask and the point differ in shape.
pub fn mask_project(x: &Point, mask: &Mask) -> Point {
    assert_eq!(x.shape(), mask.shape(), "mask shape mismatch");
    let mut out = x.clone();
    for (v, &keep) in out.iter_mut().zip(mask.as_slice()) {
        if !keep {
            *v = 0.0;
        }
    }
    out
}

/// Gradient of `h(x) = ½‖P_Ω(u) − P_Ω(x)‖²_F`, which is `P_Ω(x) − P_Ω(u)`.
pub fn grad_masked_quadratic(x: &Point, u: &Point, mask: &Mask) -> Result<Point> {
    if x.shape() != u.shape() || x.shape() != mask.shape() {
        return Err(Error::input(format!(
            "shape mismatch: x {:?}, u {:?}, mask {:?}",
            x.shape(),
            u.shape(),
            mask.shape()
        )));
    }
    let mut out = x - u;
    for (v, &keep) in out.iter_mut().zip(mask.as_slice()) {
        if !keep {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// `A = 0`; its resolvent is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOperator;

impl Resolvent for ZeroOperator {
    fn resolve(&self, point: &Point, _gamma: f64) -> Result<Point> {
        Ok(point.clone())
    }
}

/// Normal cone of the nonnegative orthant; the resolvent is the projection
/// for every `γ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonnegProjection;

impl Resolvent for NonnegProjection {
    fn resolve(&self, point: &Point, _gamma: f64) -> Result<Point> {
        Ok(project_nonneg(point))
    }
}

/// `∂(w‖·‖₁)`.
#[derive(Debug, Clone, Copy)]
pub struct L1Prox {
    pub weight: f64,
}

impl Resolvent for L1Prox {
    fn resolve(&self, point: &Point, gamma: f64) -> Result<Point> {
        Ok(prox_l1(point, gamma * self.weight))
    }
}

/// `∂(w‖·‖_*)`.
#[derive(Debug, Clone, Copy)]
pub struct NuclearProx {
    pub weight: f64,
}

impl Resolvent for NuclearProx {
    fn resolve(&self, point: &Point, gamma: f64) -> Result<Point> {
        prox_nuclear(point, gamma * self.weight)
    }
}

/// `∇h` for the masked data term, `β = 1`.
#[derive(Debug, Clone)]
pub struct MaskedQuadraticGradient {
    data: Point,
    mask: Mask,
}

impl MaskedQuadraticGradient {
    pub fn new(data: Point, mask: Mask) -> Result<Self> {
        if data.shape() != mask.shape() {
            return Err(Error::input(format!(
                "data {:?} and mask {:?} differ in shape",
                data.shape(),
                mask.shape()
            )));
        }
        Ok(Self { data, mask })
    }

    pub fn data(&self) -> &Point {
        &self.data
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// `h(x)`.
    pub fn value(&self, x: &Point) -> f64 {
        0.5 * mask_project(&(x - &self.data), &self.mask).norm_squared()
    }
}

impl Cocoercive for MaskedQuadraticGradient {
    fn apply(&self, point: &Point) -> Result<Point> {
        grad_masked_quadratic(point, &self.data, &self.mask)
    }

    fn beta(&self) -> f64 {
        1.0
    }

    fn shape(&self) -> Option<(usize, usize)> {
        Some(self.mask.shape())
    }
}

/// `C(x) = x − b`, the gradient of `½‖x − b‖²`; `β = 1`.
#[derive(Debug, Clone)]
pub struct ShiftedIdentity {
    pub target: Point,
}

impl Cocoercive for ShiftedIdentity {
    fn apply(&self, point: &Point) -> Result<Point> {
        if point.shape() != self.target.shape() {
            return Err(Error::input("shape mismatch in shifted identity"));
        }
        Ok(point - &self.target)
    }

    fn beta(&self) -> f64 {
        1.0
    }

    fn shape(&self) -> Option<(usize, usize)> {
        Some(self.target.shape())
    }
}
