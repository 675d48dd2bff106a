//! The inpainting comparison harness: one solve per
//! (missing rate, noise level, stopping tolerance, method) cell.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use super::metrics::{snr, ssim};
use super::{add_noise, make_mask, pgm, synthetic_image, InpaintingProblem};
use crate::error::{Error, Result};
use crate::operators::{Mask, Point};
use crate::params::{validate_config, Violation};
use crate::splitting::{solve, Regime, SolveReport, SolverConfig};

/// The three parameter selections compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterCase {
    /// `γ = 1.8`; TOS `λ = 1`, iTOS-1 `λ = 0.8, α = 0.2`, iTOS-2 `λ = 1, ᾱ = 0.2`.
    Case1,
    /// `γ = 1`; `λ = 0.3` throughout, iTOS-1 `α = 0.5`, iTOS-2 `ᾱ = 0.5`.
    Case2,
    /// `γ = 0.5`; TOS `λ = 1.75`, iTOS-1 `λ = 1.4, α = 0.1`, iTOS-2 `λ = 1.75, ᾱ = 0.1`.
    Case3,
}

impl ParameterCase {
    pub fn from_index(i: u32) -> Option<Self> {
        match i {
            1 => Some(Self::Case1),
            2 => Some(Self::Case2),
            3 => Some(Self::Case3),
            _ => None,
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Self::Case1 => 1,
            Self::Case2 => 2,
            Self::Case3 => 3,
        }
    }

    pub fn gamma(self) -> f64 {
        match self {
            Self::Case1 => 1.8,
            Self::Case2 => 1.0,
            Self::Case3 => 0.5,
        }
    }

    /// `(λ, α)` for a method; `α` is the constant inertia of iTOS-1 or the
    /// cap of iTOS-2 and zero for TOS.
    pub fn parameters(self, regime: Regime) -> (f64, f64) {
        match (self, regime) {
            (Self::Case1, Regime::Tos) => (1.0, 0.0),
            (Self::Case1, Regime::Itos1) => (0.8, 0.2),
            (Self::Case1, Regime::Itos2) => (1.0, 0.2),
            (Self::Case2, Regime::Tos) => (0.3, 0.0),
            (Self::Case2, Regime::Itos1) => (0.3, 0.5),
            (Self::Case2, Regime::Itos2) => (0.3, 0.5),
            (Self::Case3, Regime::Tos) => (1.75, 0.0),
            (Self::Case3, Regime::Itos1) => (1.4, 0.1),
            (Self::Case3, Regime::Itos2) => (1.75, 0.1),
        }
    }

    pub fn config(self, regime: Regime) -> SolverConfig {
        let (lambda, alpha) = self.parameters(regime);
        method_config(regime, self.gamma(), lambda, alpha)
    }
}

/// Builds a config for `regime`; `alpha` is ignored by TOS.
pub fn method_config(regime: Regime, gamma: f64, lambda: f64, alpha: f64) -> SolverConfig {
    match regime {
        Regime::Tos => SolverConfig::tos(gamma, lambda),
        Regime::Itos1 => SolverConfig::itos1(gamma, lambda, alpha),
        Regime::Itos2 => SolverConfig::itos2(gamma, lambda, alpha),
    }
}

/// Regularization weight used for the two reference noise levels.
pub fn default_mu(noise: f64) -> Option<f64> {
    if (noise - 0.01).abs() < 1e-12 {
        Some(0.5)
    } else if (noise - 0.05).abs() < 1e-12 {
        Some(1.8)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Synthetic { rows: usize, cols: usize },
    Pgm(PathBuf),
}

impl ImageSource {
    pub fn load(&self) -> Result<Point> {
        match self {
            ImageSource::Synthetic { rows, cols } => Ok(synthetic_image(*rows, *cols)),
            ImageSource::Pgm(path) => pgm::read_pgm(path),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub image: ImageSource,
    pub missing_rates: Vec<f64>,
    /// Standard deviations of the additive Gaussian noise.
    pub noise_levels: Vec<f64>,
    /// `None` picks [`default_mu`] per noise level.
    pub mu: Option<f64>,
    /// One configuration per compared method; tolerance and iteration cap
    /// are overridden per cell.
    pub methods: Vec<SolverConfig>,
    pub eps: Vec<f64>,
    pub max_iters: usize,
    pub seed: u64,
    /// Refuse to run when any method fails validation.
    pub strict: bool,
    /// Worker threads; `0` uses one per logical core.
    pub workers: usize,
}

impl ExperimentSpec {
    pub fn for_case(case: ParameterCase, image: ImageSource) -> Self {
        Self {
            image,
            missing_rates: vec![0.4, 0.6, 0.8],
            noise_levels: vec![0.01, 0.05],
            mu: None,
            methods: Regime::ALL.iter().map(|&r| case.config(r)).collect(),
            eps: vec![1e-3, 1e-5],
            max_iters: SolverConfig::DEFAULT_MAX_ITERS,
            seed: 0,
            strict: false,
            workers: 0,
        }
    }

    fn mu_for(&self, noise: f64) -> Result<f64> {
        self.mu.or_else(|| default_mu(noise)).ok_or_else(|| {
            Error::param(format!(
                "no default μ for noise level {noise}; set it explicitly"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub missing_rate: f64,
    pub noise: f64,
    pub method: Regime,
    pub eps: f64,
    pub mu: f64,
    pub snr_db: f64,
    pub ssim: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub missing_rate: f64,
    pub noise: f64,
    pub mask: Mask,
    /// Noisy image restricted to the mask.
    pub observed: Point,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub row: MetricsRow,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub clean: Point,
    pub scenarios: Vec<Scenario>,
    pub cells: Vec<CellResult>,
    /// Validation findings per method, in `spec.methods` order.
    pub violations: Vec<(Regime, Vec<Violation>)>,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }
}

struct Job {
    scenario: usize,
    method: usize,
    eps: f64,
    mu: f64,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    for &r in &spec.missing_rates {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::param(format!("missing rate {r} outside [0, 1)")));
        }
    }
    for &s in &spec.noise_levels {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::param(format!("noise level {s} must be nonnegative")));
        }
    }
    for &e in &spec.eps {
        if !(e > 0.0) {
            return Err(Error::param(format!("tolerance {e} must be positive")));
        }
    }

    let violations: Vec<(Regime, Vec<Violation>)> = spec
        .methods
        .iter()
        .map(|m| (m.regime, validate_config(m, 1.0)))
        .collect();
    if spec.strict {
        let failed: Vec<String> = violations
            .iter()
            .flat_map(|(r, vs)| vs.iter().map(move |v| format!("{r}: {v}")))
            .collect();
        if !failed.is_empty() {
            return Err(Error::param(format!(
                "strict validation failed: {}",
                failed.join("; ")
            )));
        }
    }

    let clean = spec.image.load()?;
    let shape = clean.shape();

    let mut scenarios = Vec::new();
    let mut problems = Vec::new();
    let mut jobs = Vec::new();
    for &missing_rate in &spec.missing_rates {
        let mask = make_mask(shape, missing_rate, spec.seed);
        for &noise in &spec.noise_levels {
            let mu = spec.mu_for(noise)?;
            let noisy = add_noise(&clean, noise, spec.seed);
            let problem = InpaintingProblem::new(&noisy, mask.clone(), mu)?;
            let idx = scenarios.len();
            scenarios.push(Scenario {
                missing_rate,
                noise,
                mask: mask.clone(),
                observed: problem.observed().clone(),
            });
            problems.push(problem);
            for &eps in &spec.eps {
                for method in 0..spec.methods.len() {
                    jobs.push(Job {
                        scenario: idx,
                        method,
                        eps,
                        mu,
                    });
                }
            }
        }
    }

    let run_job = |job: &Job| -> Result<CellResult> {
        let problem = &problems[job.scenario];
        let scenario = &scenarios[job.scenario];
        let config = spec.methods[job.method]
            .clone()
            .with_tol(job.eps)
            .with_max_iters(spec.max_iters);
        let triple = problem.triple()?;
        let report = solve(&triple, &config, problem.initial_point())?;
        let row = MetricsRow {
            missing_rate: scenario.missing_rate,
            noise: scenario.noise,
            method: config.regime,
            eps: job.eps,
            mu: job.mu,
            snr_db: snr(&clean, &report.solution)?,
            ssim: ssim(&clean, &report.solution, problem.dynamic_range),
            iterations: report.iterations,
            converged: report.converged,
        };
        Ok(CellResult { row, report })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let cells = pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>())?;

    Ok(ExperimentOutput {
        clean,
        scenarios,
        cells,
        violations,
    })
}

fn metric(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6}")
    }
}

/// `missing_rate,noise,method,eps,snr_db,ssim,iterations,converged`.
pub fn write_results_csv(rows: &[MetricsRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "missing_rate,noise,method,eps,snr_db,ssim,iterations,converged"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:e},{},{},{},{}",
            r.missing_rate,
            r.noise,
            r.method,
            r.eps,
            metric(r.snr_db),
            metric(r.ssim),
            r.iterations,
            r.converged
        )?;
    }
    Ok(())
}

/// `k,relative_change,fixed_point_residual,inertia_term`, one row per
/// iteration with `k` starting at 1.
pub fn write_history_csv(report: &SolveReport, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "k,relative_change,fixed_point_residual,inertia_term")?;
    for (i, ((rc, fp), it)) in report
        .residual_history
        .iter()
        .zip(&report.fixed_point_history)
        .zip(&report.inertia_terms)
        .enumerate()
    {
        writeln!(out, "{},{:e},{:e},{:e}", i + 1, rc, fp, it)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_table() {
        assert_eq!(ParameterCase::Case1.parameters(Regime::Itos1), (0.8, 0.2));
        assert_eq!(ParameterCase::Case3.config(Regime::Tos).gamma, 0.5);
        let c = ParameterCase::Case2.config(Regime::Itos2);
        assert_eq!((c.gamma, c.alpha_cap), (1.0, 0.5));
        assert_eq!(ParameterCase::from_index(4), None);
    }

    #[test]
    fn default_mu_levels() {
        assert_eq!(default_mu(0.01), Some(0.5));
        assert_eq!(default_mu(0.05), Some(1.8));
        assert_eq!(default_mu(0.02), None);
    }

    #[test]
    fn csv_formatting() {
        let row = MetricsRow {
            missing_rate: 0.4,
            noise: 0.01,
            method: Regime::Itos1,
            eps: 1e-3,
            mu: 0.5,
            snr_db: f64::INFINITY,
            ssim: 0.88771234,
            iterations: 30,
            converged: true,
        };
        let mut buf = Vec::new();
        write_results_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0.4,0.01,itos1,1e-3,inf,0.887712,30,true"
        );
    }

    #[test]
    fn strict_mode_refuses_uncertified_methods() {
        let mut spec = ExperimentSpec::for_case(
            ParameterCase::Case1,
            ImageSource::Synthetic { rows: 4, cols: 4 },
        );
        spec.strict = true;
        assert!(matches!(
            run_experiment(&spec),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn fully_observed_unregularized_recovers_input() {
        let mut spec = ExperimentSpec::for_case(
            ParameterCase::Case2,
            ImageSource::Synthetic { rows: 12, cols: 10 },
        );
        spec.missing_rates = vec![0.0];
        spec.noise_levels = vec![0.0];
        spec.mu = Some(1e-12);
        spec.eps = vec![1e-12];
        spec.methods = vec![SolverConfig::tos(1.0, 1.0)];
        spec.workers = 1;
        let out = run_experiment(&spec).unwrap();
        let cell = &out.cells[0];
        assert!(cell.row.converged);
        assert!((&cell.report.solution - &out.clean).norm() < 1e-9);
    }
}
