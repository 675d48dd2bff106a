//! Parameter-safety calculators.
//!
//! Averagedness constants of the three-operator map, the relaxation bound
//! that certifies constant-inertia runs, and a validator that checks a
//! [`SolverConfig`] against the convergence conditions of its regime.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::splitting::{Regime, SolverConfig};

/// Longest prefix of a closure-defined schedule inspected by the validator.
const CUSTOM_SCHEDULE_HORIZON: usize = 100_000;

/// `α = 2β / (4β − γ)`: the averagedness constant of `T` for `γ ∈ (0, 2β)`.
pub fn averagedness_alpha(beta: f64, gamma: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::param(format!("β must be positive, got {beta}")));
    }
    if !(gamma > 0.0 && gamma < 2.0 * beta) {
        return Err(Error::param(format!(
            "γ = {gamma} outside (0, 2β) = (0, {})",
            2.0 * beta
        )));
    }
    Ok(2.0 * beta / (4.0 * beta - gamma))
}

/// `ᾱ = 1 / (2 − ε̄)`.
pub fn alpha_bar(epsilon_bar: f64) -> Result<f64> {
    if !(epsilon_bar > 0.0 && epsilon_bar < 1.0) {
        return Err(Error::param(format!("ε̄ = {epsilon_bar} outside (0, 1)")));
    }
    Ok(1.0 / (2.0 - epsilon_bar))
}

/// Smallest admissible `δ` (exclusive) for inertia bound `alpha`:
/// `(α²(1 + α) + ασ) / (1 − α²)`.
pub fn delta_min(alpha: f64, sigma: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&alpha) && sigma > 0.0);
    (alpha * alpha * (1.0 + alpha) + alpha * sigma) / (1.0 - alpha * alpha)
}

/// Upper bound on `λ_k` for constant-regime inertia bounded by `alpha`:
///
/// ```text
///        δ − α[α(1 + α) + αδ + σ]
/// ────────────────────────────────────
///  ᾱ δ [1 + α(1 + α) + αδ + σ]
/// ```
pub fn lambda_upper_bound(alpha: f64, sigma: f64, delta: f64, alpha_bar: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param(format!("α = {alpha} outside [0, 1)")));
    }
    if !(sigma > 0.0) {
        return Err(Error::param(format!("σ must be positive, got {sigma}")));
    }
    if !(alpha_bar > 0.5 && alpha_bar < 1.0) {
        return Err(Error::param(format!("ᾱ = {alpha_bar} outside (1/2, 1)")));
    }
    let dmin = delta_min(alpha, sigma);
    if !(delta > dmin) {
        return Err(Error::param(format!(
            "δ = {delta} must exceed δ_min = {dmin}"
        )));
    }
    let inner = alpha * (1.0 + alpha) + alpha * delta + sigma;
    let numerator = delta - alpha * inner;
    let denominator = alpha_bar * delta * (1.0 + inner);
    Ok(numerator / denominator)
}

/// The constants behind one relaxation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyBound {
    pub alpha: f64,
    pub sigma: f64,
    pub delta_star: f64,
    pub delta: f64,
    pub alpha_bar: f64,
    pub lambda_max: f64,
}

impl SafetyBound {
    /// `δ = δ_min(α, σ) + δ*`, `ᾱ = 1/(2 − ε̄)`.
    pub fn new(alpha: f64, sigma: f64, delta_star: f64, epsilon_bar: f64) -> Result<Self> {
        if !(delta_star > 0.0) {
            return Err(Error::param(format!(
                "δ* must be positive, got {delta_star}"
            )));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param(format!("α = {alpha} outside [0, 1)")));
        }
        if !(sigma > 0.0) {
            return Err(Error::param(format!("σ must be positive, got {sigma}")));
        }
        let alpha_bar = alpha_bar(epsilon_bar)?;
        let delta = delta_min(alpha, sigma) + delta_star;
        let lambda_max = lambda_upper_bound(alpha, sigma, delta, alpha_bar)?;
        Ok(Self {
            alpha,
            sigma,
            delta_star,
            delta,
            alpha_bar,
            lambda_max,
        })
    }
}

/// Which convergence condition a configuration breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `ε̄ ∈ (0, 1)`.
    Slack,
    /// `γ ∈ (0, 2βε̄)` (or `(0, 2β)` for the adaptive regime).
    StepSize,
    /// Inertia schedule shape: `α_1 = 0`, nondecreasing, nonnegative; zero
    /// for plain TOS.
    InertiaSchedule,
    /// Inertia bound strictly below one.
    InertiaCap,
    /// Relaxation bounds.
    Relaxation,
    /// `σ, δ* > 0`.
    SafetyConstants,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Slack => "slack",
            Condition::StepSize => "i1",
            Condition::InertiaSchedule => "i2",
            Condition::InertiaCap => "inertia-cap",
            Condition::Relaxation => "i3",
            Condition::SafetyConstants => "safety-constants",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.condition.label(), self.message)
    }
}

fn violation(condition: Condition, message: String) -> Violation {
    Violation { condition, message }
}

fn inspected_len(schedule_horizon: Option<usize>, max_iters: usize) -> usize {
    let horizon = schedule_horizon
        .map(|h| h + 1)
        .unwrap_or(CUSTOM_SCHEDULE_HORIZON);
    horizon.min(max_iters.max(2))
}

/// Checks `config` against the convergence conditions of its regime. An
/// empty result means the configuration is certified.
pub fn validate_config(config: &SolverConfig, beta: f64) -> Vec<Violation> {
    let mut out = Vec::new();

    let abar = match alpha_bar(config.epsilon_bar) {
        Ok(a) => Some(a),
        Err(e) => {
            out.push(violation(Condition::Slack, e.to_string()));
            None
        }
    };

    let gamma = config.gamma;
    let step_limit = match config.regime {
        Regime::Itos2 => 2.0 * beta,
        _ => 2.0 * beta * config.epsilon_bar,
    };
    if !(gamma > 0.0 && gamma < step_limit) {
        out.push(violation(
            Condition::StepSize,
            format!("γ = {gamma} outside (0, {step_limit})"),
        ));
    }

    let n_lambda = inspected_len(config.relaxation.finite_horizon(), config.max_iters);
    let lambdas: Vec<f64> = (0..n_lambda).map(|k| config.relaxation.at(k)).collect();
    let lambda_lower = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_upper = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lambda_lower > 0.0) {
        out.push(violation(
            Condition::Relaxation,
            format!("relaxation must stay positive, found λ_k = {lambda_lower}"),
        ));
    }

    match config.regime {
        Regime::Tos => {
            let n = inspected_len(config.inertia.finite_horizon(), config.max_iters);
            if (0..n).any(|k| config.inertia.at(k) != 0.0) {
                out.push(violation(
                    Condition::InertiaSchedule,
                    "TOS runs without inertia, but a nonzero inertia schedule is set".into(),
                ));
            }
            if let Some(abar) = abar {
                let limit = 1.0 / abar;
                if !(lambda_upper < limit) {
                    out.push(violation(
                        Condition::Relaxation,
                        format!("λ_k = {lambda_upper} must stay below 1/ᾱ = {limit}"),
                    ));
                }
            }
        }
        Regime::Itos1 => {
            let n = inspected_len(config.inertia.finite_horizon(), config.max_iters);
            let alphas: Vec<f64> = (0..n).map(|k| config.inertia.at(k)).collect();
            if alphas.get(1).copied().unwrap_or(0.0) != 0.0 {
                out.push(violation(
                    Condition::InertiaSchedule,
                    format!("α_1 = {} must be 0", alphas[1]),
                ));
            }
            if alphas.iter().any(|&a| a < 0.0) {
                out.push(violation(
                    Condition::InertiaSchedule,
                    "inertia must be nonnegative".into(),
                ));
            }
            if alphas.len() > 2 && alphas[1..].windows(2).any(|w| w[1] < w[0]) {
                out.push(violation(
                    Condition::InertiaSchedule,
                    "inertia must be nondecreasing for k ≥ 1".into(),
                ));
            }
            let alpha_sup = alphas[1..].iter().copied().fold(0.0, f64::max);
            if !(alpha_sup < 1.0) {
                out.push(violation(
                    Condition::InertiaCap,
                    format!("inertia bound α = {alpha_sup} must be < 1"),
                ));
            } else if !(config.sigma > 0.0 && config.delta_star > 0.0) {
                out.push(violation(
                    Condition::SafetyConstants,
                    format!(
                        "σ = {} and δ* = {} must be positive",
                        config.sigma, config.delta_star
                    ),
                ));
            } else if abar.is_some() {
                match SafetyBound::new(
                    alpha_sup,
                    config.sigma,
                    config.delta_star,
                    config.epsilon_bar,
                ) {
                    Ok(bound) => {
                        if lambda_upper > bound.lambda_max {
                            out.push(violation(
                                Condition::Relaxation,
                                format!(
                                    "λ_k = {lambda_upper} exceeds the bound {:.6} for α = {alpha_sup}, σ = {}, δ = {:.6}, ᾱ = {:.6}",
                                    bound.lambda_max, bound.sigma, bound.delta, bound.alpha_bar
                                ),
                            ));
                        }
                    }
                    Err(e) => out.push(violation(Condition::SafetyConstants, e.to_string())),
                }
            }
        }
        Regime::Itos2 => {
            if !(0.0..1.0).contains(&config.alpha_cap) {
                out.push(violation(
                    Condition::InertiaCap,
                    format!("inertia cap {} outside [0, 1)", config.alpha_cap),
                ));
            }
            if !(lambda_upper < 1.0) {
                out.push(violation(
                    Condition::Relaxation,
                    format!("λ_k = {lambda_upper} must stay below 1"),
                ));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeRow {
    pub alpha: f64,
    pub lambda_max: f64,
}

/// Relaxation bound as a function of the inertia bound, with
/// `δ = δ_min(α, σ) + δ*` at every grid point.
pub fn param_range_table(
    sigma: f64,
    delta_star: f64,
    alpha_grid: &[f64],
    epsilon_bar: f64,
) -> Result<Vec<RangeRow>> {
    alpha_grid
        .iter()
        .map(|&alpha| {
            let b = SafetyBound::new(alpha, sigma, delta_star, epsilon_bar)?;
            Ok(RangeRow {
                alpha,
                lambda_max: b.lambda_max,
            })
        })
        .collect()
}

/// Writes `alpha,lambda_max` rows with 12 significant digits.
pub fn write_range_csv(rows: &[RangeRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "alpha,lambda_max")?;
    for r in rows {
        writeln!(
            out,
            "{},{}",
            format_significant(r.alpha, 12),
            format_significant(r.lambda_max, 12)
        )?;
    }
    Ok(())
}

/// `printf("%.{digits}g")`.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::Schedule;

    #[test]
    fn averagedness_examples() {
        assert!((averagedness_alpha(1.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((averagedness_alpha(2.0, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((averagedness_alpha(1.0, 1e-12).unwrap() - 0.5).abs() < 1e-12);
        assert!(averagedness_alpha(1.0, 2.0).is_err());
        assert!(averagedness_alpha(1.0, 0.0).is_err());
    }

    #[test]
    fn alpha_bar_examples() {
        assert!((alpha_bar(0.99).unwrap() - 1.0 / 1.01).abs() < 1e-15);
        assert!((alpha_bar(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(alpha_bar(1.0 - 1e-12).unwrap() < 1.0);
        assert!(alpha_bar(1.0).is_err());
        assert!(alpha_bar(0.0).is_err());
    }

    #[test]
    fn delta_min_examples() {
        assert_eq!(delta_min(0.0, 0.3), 0.0);
        assert!((delta_min(0.2, 0.01) - 0.05 / 0.96).abs() < 1e-15);
        // α²(1 + α) = 0.375 at α = 0.5.
        assert!((delta_min(0.5, 0.01) - 0.38 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn lambda_bound_zero_inertia_simplifies() {
        for sigma in [0.001, 0.01, 0.5] {
            let abar = alpha_bar(0.99).unwrap();
            let b = lambda_upper_bound(0.0, sigma, 1.0, abar).unwrap();
            assert!((b * abar * (1.0 + sigma) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_bound_case_one() {
        let delta = delta_min(0.2, 0.01) + 1.0;
        let inner = 0.2 * 1.2 + 0.2 * delta + 0.01;
        assert!((delta - 0.2 * inner - 0.96).abs() < 1e-12);
        let b = lambda_upper_bound(0.2, 0.01, delta, 1.0 / 1.01).unwrap();
        assert!((b - 0.6311).abs() < 5e-5, "{b}");
    }

    #[test]
    fn lambda_bound_rejects_small_delta() {
        let dmin = delta_min(0.3, 0.01);
        assert!(lambda_upper_bound(0.3, 0.01, dmin, 0.9).is_err());
        assert!(lambda_upper_bound(0.3, 0.01, dmin * 0.5, 0.9).is_err());
    }

    #[test]
    fn validate_certified_tos() {
        let c = SolverConfig::tos(1.0, 1.0);
        assert!(validate_config(&c, 1.0).is_empty());
    }

    #[test]
    fn validate_case_one_itos1_flags_relaxation() {
        let c = SolverConfig::itos1(1.8, 0.8, 0.2);
        let v = validate_config(&c, 1.0);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].condition, Condition::Relaxation);
        // γ = 1.8 needs ε̄ ≥ 0.9.
        let tight = SolverConfig::itos1(1.8, 0.5, 0.2).with_epsilon_bar(0.89);
        assert!(validate_config(&tight, 1.0)
            .iter()
            .any(|v| v.condition == Condition::StepSize));
    }

    #[test]
    fn validate_nonzero_first_inertia() {
        let c = SolverConfig::itos1(1.0, 0.5, 0.2)
            .with_inertia(Schedule::Sequence(vec![0.0, 0.3, 0.3]));
        let v = validate_config(&c, 1.0);
        assert!(v.iter().any(|v| v.condition == Condition::InertiaSchedule));
    }

    #[test]
    fn validate_itos2_relaxation_below_one() {
        assert!(validate_config(&SolverConfig::itos2(1.0, 0.9, 0.5), 1.0).is_empty());
        let v = validate_config(&SolverConfig::itos2(1.0, 1.0, 0.5), 1.0);
        assert_eq!(v[0].condition, Condition::Relaxation);
        let v = validate_config(&SolverConfig::itos2(1.0, 0.5, 1.0), 1.0);
        assert_eq!(v[0].condition, Condition::InertiaCap);
    }

    #[test]
    fn validate_decreasing_inertia() {
        let c = SolverConfig::itos1(1.0, 0.3, 0.2)
            .with_inertia(Schedule::Sequence(vec![0.0, 0.0, 0.2, 0.1]));
        assert!(validate_config(&c, 1.0)
            .iter()
            .any(|v| v.condition == Condition::InertiaSchedule));
    }

    #[test]
    fn range_table_rows() {
        let grid = [0.0, 0.1, 0.1, 0.2];
        let rows = param_range_table(0.01, 1.0, &grid, 0.99).unwrap();
        assert_eq!(rows[1], rows[2]);
        assert!((rows[0].lambda_max - 1.01 / 1.01).abs() < 1e-15);
        assert!(param_range_table(0.01, 1.0, &[1.0], 0.99).is_err());
        assert!(param_range_table(0.01, 1.0, &[], 0.99).unwrap().is_empty());
    }

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(0.5, 12), "0.5");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_significant(123456.0, 12), "123456");
        assert_eq!(format_significant(1.5e-7, 12), "1.5e-07");
        assert_eq!(format_significant(1e15, 3), "1e+15");
        assert_eq!(format_significant(-0.25, 12), "-0.25");
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_range_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha,lambda_max\n");
    }
}
