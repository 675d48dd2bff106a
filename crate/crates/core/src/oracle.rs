//! Ground-truth oracles for small instances.
//!
//! Solutions here never come from the [`crate::splitting`] driver: they are
//! closed forms, grid searches, or a separately written high-accuracy
//! three-operator loop. Operator evaluations are shared with the solver so
//! that a disagreement points at the iteration, not at the operators.

use crate::error::{Error, Result};
use crate::inpainting::{make_mask, InpaintingProblem};
use crate::operators::{
    grad_masked_quadratic, mask_project, nuclear_norm, prox_nuclear, L1Prox, Mask,
    NonnegProjection, OperatorTriple, Point, ShiftedIdentity,
};
use crate::rng::{stream, Stream};
use crate::splitting::{apply_t, solve, SolverConfig};

/// `argmin_{x ≥ 0} ½(x − b)² + μ|x| = max(0, b − μ)`.
pub fn oracle_lasso1d(b: f64, mu: f64) -> f64 {
    (b - mu).max(0.0)
}

/// Brute-force minimizer of `½(x − b)² + μ|x| + ι_{x ≥ 0}` over the grid
/// `lo, lo + step, …, hi`.
pub fn grid_search_lasso1d(b: f64, mu: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    let objective = |x: f64| {
        if x < 0.0 {
            f64::INFINITY
        } else {
            0.5 * (x - b).powi(2) + mu * x.abs()
        }
    };
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .fold((f64::NAN, f64::INFINITY), |(bx, bf), x| {
            let f = objective(x);
            if f < bf {
                (x, f)
            } else {
                (bx, bf)
            }
        })
        .0
}

/// `A = ∂ι_{≥0}`, `B = ∂(μ|·|)`, `C(x) = x − b` in one dimension.
pub fn lasso1d_triple(b: f64, mu: f64) -> OperatorTriple {
    OperatorTriple::new(
        (1, 1),
        Box::new(NonnegProjection),
        Box::new(L1Prox { weight: mu }),
        Box::new(ShiftedIdentity {
            target: Point::from_element(1, 1, b),
        }),
    )
    .expect("scalar triple is well formed")
}

/// A fixed point `z* = x* + γ w` of the three-operator map, where
/// `w ∈ ∂(μ|·|)(x*) ∩ (−N_{≥0}(x*) − (x* − b))`.
pub fn lasso1d_certificate(b: f64, mu: f64, gamma: f64) -> Point {
    let x = oracle_lasso1d(b, mu);
    let w = if x > 0.0 { mu } else { b.max(-mu) };
    Point::from_element(1, 1, x + gamma * w)
}

pub struct OracleCase {
    pub name: String,
    pub triple: OperatorTriple,
    pub gamma: f64,
    pub known_solution: Point,
    /// A fixed point of the three-operator map whose `J_{γB}` image is the
    /// known solution.
    pub certificate: Point,
    pub tolerance: f64,
}

impl OracleCase {
    /// `max(‖J_{γB} z* − x*‖, ‖T z* − z*‖ / γ)`. The second term equals the
    /// norm of the sum of the subgradients the splitting produces at `z*`.
    pub fn inclusion_residual(&self) -> Result<f64> {
        let (tz, x_b, _) = apply_t(&self.certificate, &self.triple, self.gamma)?;
        let mismatch = (&x_b - &self.known_solution).norm();
        let fixed = (&tz - &self.certificate).norm() / self.gamma;
        Ok(mismatch.max(fixed))
    }

    pub fn lasso1d(b: f64, mu: f64, gamma: f64) -> Self {
        Self {
            name: format!("lasso1d(b={b}, mu={mu})"),
            triple: lasso1d_triple(b, mu),
            gamma,
            known_solution: Point::from_element(1, 1, oracle_lasso1d(b, mu)),
            certificate: lasso1d_certificate(b, mu, gamma),
            tolerance: 1e-12,
        }
    }
}

/// A seeded low-rank completion instance: `truth = L Rᵀ` with entries of
/// `L`, `R` uniform on `[0, 1)`, observed without noise.
#[derive(Debug, Clone)]
pub struct CompletionInstance {
    pub truth: Point,
    pub problem: InpaintingProblem,
}

pub fn completion_instance(
    rank: usize,
    shape: (usize, usize),
    missing_rate: f64,
    mu: f64,
    seed: u64,
) -> Result<CompletionInstance> {
    let (m, n) = shape;
    let mut s = Stream::new(seed, stream::INSTANCE);
    let left = Point::from_fn(m, rank, |_, _| s.uniform());
    let right = Point::from_fn(n, rank, |_, _| s.uniform());
    let truth = &left * right.transpose();
    let mask = make_mask(shape, missing_rate, seed);
    let problem = InpaintingProblem::new(&truth, mask, mu)?;
    Ok(CompletionInstance { truth, problem })
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub solution: Point,
    pub fixed_point: Point,
    pub iterations: usize,
}

pub const REFERENCE_MAX_ITERS: usize = 100_000;
pub const REFERENCE_TOL: f64 = 1e-12;

/// Unrelaxed, inertia-free three-operator iteration with `γ = 1`, run to a
/// relative change of `1e-12` (at most `1e5` steps).
pub fn reference_tos(triple: &OperatorTriple, z0: Point) -> Result<ReferenceSolution> {
    let gamma = 1.0;
    let mut z = z0;
    for it in 1..=REFERENCE_MAX_ITERS {
        let x_b = triple.b.resolve(&z, gamma)?;
        let reflected = &x_b * 2.0 - &z - triple.c.apply(&x_b)? * gamma;
        let x_a = triple.a.resolve(&reflected, gamma)?;
        let z_next = &z + &x_a - &x_b;
        if z_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFailure("reference iteration diverged".into()));
        }
        let denom = z.norm();
        let change = if denom == 0.0 {
            z_next.norm()
        } else {
            (&z_next - &z).norm() / denom
        };
        z = z_next;
        if change <= REFERENCE_TOL {
            let solution = triple.b.resolve(&z, gamma)?;
            return Ok(ReferenceSolution {
                solution,
                fixed_point: z,
                iterations: it,
            });
        }
    }
    Err(Error::OracleFailure(format!(
        "reference iteration did not reach relative change {REFERENCE_TOL} in {REFERENCE_MAX_ITERS} steps"
    )))
}

/// Reference minimizer of the constrained nuclear-norm completion problem
/// for a seeded instance.
pub fn oracle_matrix_completion(
    rank: usize,
    shape: (usize, usize),
    missing_rate: f64,
    mu: f64,
    seed: u64,
) -> Result<(CompletionInstance, ReferenceSolution)> {
    if shape.0 > 16 || shape.1 > 16 {
        return Err(Error::input("reference completion limited to 16x16"));
    }
    let inst = completion_instance(rank, shape, missing_rate, mu, seed)?;
    let triple = inst.problem.triple()?;
    let reference = reference_tos(&triple, inst.problem.initial_point())?;
    Ok((inst, reference))
}

/// Largest normwise relative discrepancy `‖g_fd − g‖_∞ / ‖g‖_∞` between
/// central differences of `h` and the analytic gradient `grad` at `x`
/// (absolute when `g = 0`).
pub fn fd_gradient_check(h: impl Fn(&Point) -> f64, grad: &Point, x: &Point, step: f64) -> f64 {
    assert!(step > 0.0, "finite-difference step must be positive");
    assert_eq!(grad.shape(), x.shape());
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = h(&probe);
        probe[i] = orig - step;
        let fm = h(&probe);
        probe[i] = orig;
        let fd = (fp - fm) / (2.0 * step);
        worst = worst.max((fd - grad[i]).abs());
    }
    let scale = grad.amax();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// FD check of `h(x) = ½‖P_Ω(u) − P_Ω(x)‖²` at `x`.
pub fn masked_quadratic_fd_check(x: &Point, u: &Point, mask: &Mask, step: f64) -> Result<f64> {
    let grad = grad_masked_quadratic(x, u, mask)?;
    let h = |p: &Point| 0.5 * mask_project(&(p - u), mask).norm_squared();
    Ok(fd_gradient_check(h, &grad, x, step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxCheck {
    /// Violation of `(X − Y)/τ ∈ ∂‖·‖_*(Y)`.
    pub subgradient_error: f64,
    /// `min (f(Z) − f(Y)) / (1 + |f(Y)|)` over sampled perturbations `Z`,
    /// with `f(Z) = ½‖Z − X‖² + τ‖Z‖_*`.
    pub min_relative_gap: f64,
}

/// Optimality checks for `Y = prox_{τ‖·‖_*}(X)`.
///
/// The subgradient test writes `G = (X − Y)/τ` as `U_r V_rᵀ + W` where
/// `U_r, V_r` span the nonzero singular pairs of `Y`, and measures
/// `‖U_rᵀ W‖`, `‖W V_r‖` and `max(‖W‖₂ − 1, 0)`. The perturbation test
/// evaluates the prox objective at `Y + ηΔ` for random unit `Δ` and
/// `η ∈ {10⁻¹, …, 10⁻⁴}`.
pub fn prox_nuclear_check(x: &Point, tau: f64, samples: usize, seed: u64) -> Result<ProxCheck> {
    if !(tau > 0.0) {
        return Err(Error::param("optimality check needs τ > 0"));
    }
    let y = prox_nuclear(x, tau)?;
    let g = (x - &y) / tau;

    let svd = y.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * top.max(1.0))
        .collect();
    let u_r = Point::from_fn(y.nrows(), keep.len(), |i, c| u[(i, keep[c])]);
    let v_r = Point::from_fn(y.ncols(), keep.len(), |j, c| v_t[(keep[c], j)]);
    let w = &g - &u_r * v_r.transpose();
    let left = (u_r.transpose() * &w).norm();
    let right = (&w * &v_r).norm();
    let spectral = if w.is_empty() {
        0.0
    } else {
        w.singular_values().max()
    };
    let subgradient_error = left.max(right).max((spectral - 1.0).max(0.0));

    let f = |z: &Point| 0.5 * (z - x).norm_squared() + tau * nuclear_norm(z);
    let fy = f(&y);
    let mut s = Stream::new(seed, stream::SAMPLING);
    let mut min_gap = f64::INFINITY;
    for i in 0..samples {
        let eta = 10f64.powi(-((i % 4) as i32 + 1));
        let mut delta = Point::from_fn(y.nrows(), y.ncols(), |_, _| s.normal());
        let nd = delta.norm();
        if nd > 0.0 {
            delta /= nd;
        }
        let gap = (f(&(&y + delta * eta)) - fy) / (1.0 + fy.abs());
        min_gap = min_gap.min(gap);
    }
    Ok(ProxCheck {
        subgradient_error,
        min_relative_gap: min_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const SUITE: [&str; 7] = [
    "lasso1d",
    "lasso1d-threshold",
    "lasso1d-constraint",
    "completion",
    "completion-large-mu",
    "gradient",
    "prox-nuclear",
];

/// Runs the named oracle case; `tolerance` overrides its default pass
/// threshold.
pub fn run_case(name: &str, tolerance: Option<f64>) -> Result<OracleOutcome> {
    let name = SUITE
        .iter()
        .copied()
        .find(|&n| n == name)
        .ok_or_else(|| Error::input(format!("unknown oracle case '{name}'")))?;
    let (passed, detail) = match name {
        "lasso1d" => lasso_case(2.0, 0.5, tolerance.unwrap_or(1e-6))?,
        "lasso1d-threshold" => lasso_case(0.3, 0.5, tolerance.unwrap_or(1e-6))?,
        "lasso1d-constraint" => lasso_case(-1.0, 0.5, tolerance.unwrap_or(1e-6))?,
        "completion" => completion_case(tolerance.unwrap_or(1e-6))?,
        "completion-large-mu" => large_mu_case(tolerance.unwrap_or(1e-9))?,
        "gradient" => gradient_case(tolerance.unwrap_or(1e-6))?,
        "prox-nuclear" => prox_case(tolerance.unwrap_or(1e-9))?,
        _ => unreachable!(),
    };
    Ok(OracleOutcome {
        name,
        passed,
        detail,
    })
}

pub fn run_suite(only: Option<&str>, tolerance: Option<f64>) -> Result<Vec<OracleOutcome>> {
    match only {
        Some(name) => Ok(vec![run_case(name, tolerance)?]),
        None => SUITE.iter().map(|n| run_case(n, tolerance)).collect(),
    }
}

fn lasso_case(b: f64, mu: f64, tol: f64) -> Result<(bool, String)> {
    let closed = oracle_lasso1d(b, mu);
    let grid = grid_search_lasso1d(b, mu, -5.0, 5.0, 1e-4);
    let mut passed = (closed - grid).abs() <= 1e-4;
    let mut detail = format!("closed form {closed}, grid {grid:.4}");
    let case = OracleCase::lasso1d(b, mu, 1.0);
    let residual = case.inclusion_residual()?;
    passed &= residual <= case.tolerance;
    let triple = lasso1d_triple(b, mu);
    for config in [
        SolverConfig::tos(1.0, 1.0),
        SolverConfig::itos1(1.0, 0.6, 0.2),
        SolverConfig::itos2(1.0, 0.9, 0.2),
    ] {
        let config = config.with_tol(1e-14).with_max_iters(500);
        let r = solve(&triple, &config, Point::zeros(1, 1))?;
        let err = (r.solution[(0, 0)] - closed).abs();
        passed &= err <= tol;
        detail.push_str(&format!(", {} err {err:.2e}", config.regime));
    }
    Ok((passed, detail))
}

fn completion_case(tol: f64) -> Result<(bool, String)> {
    let (inst, reference) = oracle_matrix_completion(1, (4, 4), 0.3, 0.01, 7)?;
    let triple = inst.problem.triple()?;
    let mut passed = true;
    let mut detail = format!("reference in {} steps", reference.iterations);
    for config in [
        SolverConfig::itos1(1.0, 0.6, 0.2),
        SolverConfig::itos2(1.0, 0.9, 0.5),
    ] {
        let config = config.with_tol(1e-14).with_max_iters(100_000);
        let r = solve(&triple, &config, inst.problem.initial_point())?;
        let dist = (&r.solution - &reference.solution).norm();
        passed &= dist <= tol;
        detail.push_str(&format!(", {} dist {dist:.2e}", config.regime));
    }
    Ok((passed, detail))
}

fn large_mu_case(tol: f64) -> Result<(bool, String)> {
    let inst = completion_instance(1, (4, 4), 0.3, 1.0, 7)?;
    let mu = inst.problem.observed().norm() * 1.01;
    let inst = completion_instance(1, (4, 4), 0.3, mu, 7)?;
    let reference = reference_tos(&inst.problem.triple()?, inst.problem.initial_point())?;
    let norm = reference.solution.norm();
    Ok((norm <= tol, format!("μ = {mu:.3}, ‖x‖ = {norm:.2e}")))
}

fn gradient_case(tol: f64) -> Result<(bool, String)> {
    let mut s = Stream::new(17, stream::SAMPLING);
    let x = Point::from_fn(8, 8, |_, _| s.uniform_in(-1.0, 1.0));
    let u = Point::from_fn(8, 8, |_, _| s.uniform_in(0.0, 1.0));
    let mask = make_mask((8, 8), 0.4, 17);
    let err = masked_quadratic_fd_check(&x, &u, &mask, 1e-5)?;
    Ok((err <= tol, format!("max relative error {err:.2e}")))
}

fn prox_case(tol: f64) -> Result<(bool, String)> {
    let mut s = Stream::new(23, stream::SAMPLING);
    let mut worst_sub = 0.0f64;
    let mut worst_gap = f64::INFINITY;
    for (i, &(m, n)) in [(3, 3), (5, 4), (4, 6)].iter().enumerate() {
        for tau in [0.1, 1.0, 10.0] {
            let x = Point::from_fn(m, n, |_, _| s.uniform_in(-3.0, 3.0));
            let c = prox_nuclear_check(&x, tau, 40, 100 + i as u64)?;
            worst_sub = worst_sub.max(c.subgradient_error);
            worst_gap = worst_gap.min(c.min_relative_gap);
        }
    }
    let passed = worst_sub <= tol && worst_gap >= -1e-12;
    Ok((
        passed,
        format!("subgradient error {worst_sub:.2e}, min gap {worst_gap:.2e}"),
    ))
}
