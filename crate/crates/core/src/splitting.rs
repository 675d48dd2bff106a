//! The three-operator map and the inertial Krasnoselskii–Mann driver.
//!
//! One iteration, for `k = 0, 1, 2, …`:
//!
//! ```text
//! y     = z_k + α_k (z_k − z_{k−1})
//! x_B   = J_{γB}(y)
//! x_A   = J_{γA}(2 x_B − y − γ C(x_B))
//! z_k+1 = y + λ_k (x_A − x_B)
//! ```
//!
//! With `α_k ≡ 0` this is the plain three-operator splitting iteration. The
//! driver starts from `z_{−1} = z_0`, so the first step never carries inertia.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{OperatorTriple, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// No inertia.
    Tos,
    /// Prescribed nondecreasing inertia with `α_1 = 0`, relaxation bounded
    /// through the inertia cap.
    Itos1,
    /// Adaptive inertia `min{1/(k²‖z_k − z_{k−1}‖²), ᾱ}`, relaxation in
    /// `(0, 1)`.
    Itos2,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Tos, Regime::Itos1, Regime::Itos2];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Tos => "tos",
            Regime::Itos1 => "itos1",
            Regime::Itos2 => "itos2",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "tos" => Ok(Regime::Tos),
            "itos1" => Ok(Regime::Itos1),
            "itos2" => Ok(Regime::Itos2),
            other => Err(Error::param(format!("unknown method '{other}'"))),
        }
    }
}

/// A parameter sequence indexed by the iteration counter `k`.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// Entry `k` is used at iteration `k`; the last entry is held afterwards.
    Sequence(Vec<f64>),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl Schedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Sequence(v) => match v.get(k) {
                Some(x) => *x,
                None => v.last().copied().unwrap_or(0.0),
            },
            Schedule::Custom(f) => f(k),
        }
    }

    /// Zero for `k ≤ 1`, then `value`: the constant-inertia schedule that
    /// respects `α_1 = 0`.
    pub fn delayed(value: f64) -> Self {
        Schedule::Sequence(vec![0.0, 0.0, value])
    }

    /// Largest `k` at which the schedule can still change. Schedules are
    /// inspected up to this horizon (or `max_iters`) by the validator.
    pub(crate) fn finite_horizon(&self) -> Option<usize> {
        match self {
            Schedule::Constant(_) => Some(1),
            Schedule::Sequence(v) => Some(v.len().max(1)),
            Schedule::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Schedule::Sequence(v) => f.debug_tuple("Sequence").field(v).finish(),
            Schedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl From<f64> for Schedule {
    fn from(v: f64) -> Self {
        Schedule::Constant(v)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Step size `γ`.
    pub gamma: f64,
    /// Slack `ε̄ ∈ (0, 1)`; admissible steps are `γ < 2βε̄`.
    pub epsilon_bar: f64,
    /// `λ_k`.
    pub relaxation: Schedule,
    /// `α_k`, used by [`Regime::Itos1`] only.
    pub inertia: Schedule,
    pub regime: Regime,
    /// Upper bound on the adaptive inertia of [`Regime::Itos2`].
    pub alpha_cap: f64,
    pub max_iters: usize,
    /// Relative-change threshold of the stopping rule.
    pub tol: f64,
    /// `σ` of the iTOS-1 relaxation bound.
    pub sigma: f64,
    /// Margin `δ* = δ − δ_min` of the iTOS-1 relaxation bound.
    pub delta_star: f64,
}

impl SolverConfig {
    pub const DEFAULT_EPSILON_BAR: f64 = 0.99;
    pub const DEFAULT_SIGMA: f64 = 0.01;
    pub const DEFAULT_DELTA_STAR: f64 = 1.0;
    pub const DEFAULT_MAX_ITERS: usize = 5000;
    pub const DEFAULT_TOL: f64 = 1e-5;

    fn base(regime: Regime, gamma: f64, lambda: f64) -> Self {
        Self {
            gamma,
            epsilon_bar: Self::DEFAULT_EPSILON_BAR,
            relaxation: Schedule::Constant(lambda),
            inertia: Schedule::Constant(0.0),
            regime,
            alpha_cap: 0.0,
            max_iters: Self::DEFAULT_MAX_ITERS,
            tol: Self::DEFAULT_TOL,
            sigma: Self::DEFAULT_SIGMA,
            delta_star: Self::DEFAULT_DELTA_STAR,
        }
    }

    pub fn tos(gamma: f64, lambda: f64) -> Self {
        Self::base(Regime::Tos, gamma, lambda)
    }

    /// Constant inertia `alpha` from `k = 2` on (`α_0 = α_1 = 0`).
    pub fn itos1(gamma: f64, lambda: f64, alpha: f64) -> Self {
        Self {
            inertia: Schedule::delayed(alpha),
            alpha_cap: alpha,
            ..Self::base(Regime::Itos1, gamma, lambda)
        }
    }

    pub fn itos2(gamma: f64, lambda: f64, alpha_cap: f64) -> Self {
        Self {
            alpha_cap,
            ..Self::base(Regime::Itos2, gamma, lambda)
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_epsilon_bar(mut self, epsilon_bar: f64) -> Self {
        self.epsilon_bar = epsilon_bar;
        self
    }

    pub fn with_relaxation(mut self, relaxation: impl Into<Schedule>) -> Self {
        self.relaxation = relaxation.into();
        self
    }

    pub fn with_inertia(mut self, inertia: impl Into<Schedule>) -> Self {
        self.inertia = inertia.into();
        self
    }

    /// Inertia used at iteration `k` given the two latest iterates.
    pub fn inertia_at(&self, k: usize, z_curr: &Point, z_prev: &Point) -> f64 {
        match self.regime {
            Regime::Tos => 0.0,
            Regime::Itos1 => self.inertia.at(k),
            Regime::Itos2 if k == 0 => 0.0,
            Regime::Itos2 => adaptive_alpha(k, z_curr, z_prev, self.alpha_cap),
        }
    }

    fn check_runnable(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(format!(
                "step size must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        if self.regime == Regime::Itos2 && !(0.0..1.0).contains(&self.alpha_cap) {
            return Err(Error::param(format!(
                "inertia cap must lie in [0, 1), got {}",
                self.alpha_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub z_curr: Point,
    pub z_prev: Point,
    pub y: Point,
    pub x_b: Point,
    pub x_a: Point,
    /// Number of completed iterations.
    pub k: usize,
    /// `α` used by the step that produced this state.
    pub alpha: f64,
    /// `α_k‖z_k − z_{k−1}‖²` of that step.
    pub inertia_term: f64,
    /// `‖x_A − x_B‖ = ‖T y − y‖` of that step.
    pub fixed_point_residual: f64,
}

impl SolverState {
    /// Initial state with `z_{−1} = z_0`.
    pub fn new(z0: Point) -> Self {
        Self {
            z_prev: z0.clone(),
            y: z0.clone(),
            x_b: z0.clone(),
            x_a: z0.clone(),
            z_curr: z0,
            k: 0,
            alpha: 0.0,
            inertia_term: 0.0,
            fixed_point_residual: f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub regime: Regime,
    pub iterations: usize,
    pub converged: bool,
    pub final_relative_change: f64,
    /// Relative change `‖z_k+1 − z_k‖ / ‖z_k‖` per iteration.
    pub residual_history: Vec<f64>,
    /// `‖T y_k − y_k‖` per iteration.
    pub fixed_point_history: Vec<f64>,
    /// `α_k‖z_k − z_{k−1}‖²` per iteration.
    pub inertia_terms: Vec<f64>,
    /// Final `x_B`.
    pub solution: Point,
    /// Final `x_A`.
    pub shadow: Point,
    pub final_z: Point,
}

fn resolvent_pair(y: &Point, triple: &OperatorTriple, gamma: f64) -> Result<(Point, Point)> {
    let x_b = triple.b.resolve(y, gamma)?;
    let cx = triple.c.apply(&x_b)?;
    let reflected = &x_b * 2.0 - y - cx * gamma;
    let x_a = triple.a.resolve(&reflected, gamma)?;
    Ok((x_b, x_a))
}

/// `T z = z + x_A − x_B`, returned with `x_B` and `x_A`.
pub fn apply_t(z: &Point, triple: &OperatorTriple, gamma: f64) -> Result<(Point, Point, Point)> {
    if !(gamma > 0.0) {
        return Err(Error::param(format!(
            "step size must be positive, got {gamma}"
        )));
    }
    triple.check_shape(z)?;
    let (x_b, x_a) = resolvent_pair(z, triple, gamma)?;
    let tz = z + &x_a - &x_b;
    Ok((tz, x_b, x_a))
}

fn first_non_finite(points: &[(&str, &Point)]) -> Option<String> {
    points
        .iter()
        .find(|(_, p)| p.iter().any(|v| !v.is_finite()))
        .map(|(name, _)| format!("non-finite entry in {name}"))
}

/// One inertial step. On a non-finite iterate the input state is returned
/// inside [`Error::Divergence`].
pub fn ikm_step(
    state: SolverState,
    triple: &OperatorTriple,
    config: &SolverConfig,
) -> Result<SolverState> {
    triple.check_shape(&state.z_curr)?;
    triple.check_shape(&state.z_prev)?;
    let k = state.k;
    let alpha = config.inertia_at(k, &state.z_curr, &state.z_prev);
    let lambda = config.relaxation.at(k);
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param(format!(
            "inertia α_{k} = {alpha} outside [0, 1)"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!(
            "relaxation λ_{k} = {lambda} must be positive"
        )));
    }

    let displacement = &state.z_curr - &state.z_prev;
    let y = &state.z_curr + &displacement * alpha;
    let (x_b, x_a) = resolvent_pair(&y, triple, config.gamma)?;
    let step = &x_a - &x_b;
    let z_next = &y + &step * lambda;

    if let Some(reason) =
        first_non_finite(&[("y", &y), ("x_B", &x_b), ("x_A", &x_a), ("z", &z_next)])
    {
        return Err(Error::Divergence {
            iteration: k,
            reason,
            last_state: Box::new(state),
        });
    }

    Ok(SolverState {
        inertia_term: alpha * displacement.norm_squared(),
        fixed_point_residual: step.norm(),
        z_prev: state.z_curr,
        z_curr: z_next,
        y,
        x_b,
        x_a,
        k: k + 1,
        alpha,
    })
}

/// Adaptive inertia `min{1/(k²‖z_k − z_{k−1}‖²), cap}`; `cap` when the
/// displacement vanishes.
pub fn adaptive_alpha(k: usize, z_curr: &Point, z_prev: &Point, alpha_cap: f64) -> f64 {
    debug_assert!(k >= 1);
    let d2 = (z_curr - z_prev).norm_squared();
    if d2 == 0.0 {
        return alpha_cap;
    }
    let kf = k as f64;
    (1.0 / (kf * kf * d2)).min(alpha_cap)
}

/// `‖z_new − z_old‖ / ‖z_old‖`, or `‖z_new‖` when `z_old = 0`.
pub fn relative_change(z_new: &Point, z_old: &Point) -> f64 {
    let denom = z_old.norm();
    let diff = (z_new - z_old).norm();
    if denom == 0.0 {
        z_new.norm()
    } else {
        diff / denom
    }
}

pub fn solve(triple: &OperatorTriple, config: &SolverConfig, z0: Point) -> Result<SolveReport> {
    solve_observed(triple, config, z0, |_| {})
}

/// [`solve`] with a callback invoked on every state after each step.
pub fn solve_observed(
    triple: &OperatorTriple,
    config: &SolverConfig,
    z0: Point,
    mut observe: impl FnMut(&SolverState),
) -> Result<SolveReport> {
    config.check_runnable()?;
    triple.check_shape(&z0)?;
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("initial point has non-finite entries"));
    }

    let mut state = SolverState::new(z0);
    let mut residual_history = Vec::new();
    let mut fixed_point_history = Vec::new();
    let mut inertia_terms = Vec::new();
    let mut converged = false;
    let mut final_relative_change = f64::INFINITY;

    while state.k < config.max_iters {
        state = ikm_step(state, triple, config)?;
        observe(&state);
        let rc = relative_change(&state.z_curr, &state.z_prev);
        residual_history.push(rc);
        fixed_point_history.push(state.fixed_point_residual);
        inertia_terms.push(state.inertia_term);
        final_relative_change = rc;
        if rc <= config.tol {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        regime: config.regime,
        iterations: state.k,
        converged,
        final_relative_change,
        residual_history,
        fixed_point_history,
        inertia_terms,
        solution: state.x_b,
        shadow: state.x_a,
        final_z: state.z_curr,
    })
}
