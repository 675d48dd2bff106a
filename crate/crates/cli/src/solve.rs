//! `itos solve`: one problem, one method.
//!
//! Config keys and defaults:
//!
//! ```text
//! problem = lasso1d        # or completion
//! b = 2                    # lasso1d: min ½(x − b)² + μ|x| over x ≥ 0
//! mu = 0.5                 # 0.01 for completion
//! rows = 8                 # completion: seeded rank-r instance
//! cols = 8
//! rank = 2
//! missing_rate = 0.4
//! method = tos             # tos, itos1 or itos2
//! gamma = 1
//! lambda = 1
//! alpha = 0                # iTOS-1 inertia or iTOS-2 cap
//! tol = 1e-5
//! max_iters = 5000
//! epsilon_bar = 0.99
//! sigma = 0.01
//! delta_star = 1
//! seed = 0
//! strict = false
//! ```
//!
//! Prints a summary. With `--out`, writes `solution.csv` (one matrix row
//! per line), `history.csv` and `manifest.txt`.

use clap::Args;
use itos::inpainting::experiment::{method_config, write_history_csv};
use itos::oracle::{completion_instance, lasso1d_triple, oracle_lasso1d};
use itos::params::validate_config;
use itos::splitting::solve;
use itos::{Point, Regime, SolverConfig};

use crate::kv::{KvConfig, Manifest};
use crate::{create_dir, load_config, write_file, write_with, CliError, CliResult, Common};

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// `lasso1d` or `completion`.
    #[arg(long)]
    pub problem: Option<String>,
    /// `tos`, `itos1` or `itos2`.
    #[arg(long)]
    pub method: Option<Regime>,
    /// Relative-change stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Refuse configurations that fail validation.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    Lasso1d {
        b: f64,
    },
    Completion {
        rows: usize,
        cols: usize,
        rank: usize,
        missing_rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    pub problem: Problem,
    pub mu: f64,
    pub method: Regime,
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub epsilon_bar: f64,
    pub sigma: f64,
    pub delta_star: f64,
    pub seed: u64,
    pub strict: bool,
}

pub fn resolve(mut cfg: KvConfig, args: &SolveArgs, common: &Common) -> CliResult<SolveSettings> {
    let kind = args
        .problem
        .clone()
        .or(cfg.take_str("problem"))
        .unwrap_or_else(|| "lasso1d".into());
    let b: Option<f64> = cfg.take("b")?;
    let rows: Option<usize> = cfg.take("rows")?;
    let cols: Option<usize> = cfg.take("cols")?;
    let rank: Option<usize> = cfg.take("rank")?;
    let missing_rate: Option<f64> = cfg.take("missing_rate")?;
    let mu: Option<f64> = cfg.take("mu")?;
    let (problem, mu) = match kind.as_str() {
        "lasso1d" => {
            if rows.or(cols).or(rank).is_some() || missing_rate.is_some() {
                return Err(CliError::Invalid(
                    "completion keys given for problem lasso1d".into(),
                ));
            }
            (
                Problem::Lasso1d {
                    b: b.unwrap_or(2.0),
                },
                mu.unwrap_or(0.5),
            )
        }
        "completion" => {
            if b.is_some() {
                return Err(CliError::Invalid("`b` given for problem completion".into()));
            }
            let p = Problem::Completion {
                rows: rows.unwrap_or(8),
                cols: cols.unwrap_or(8),
                rank: rank.unwrap_or(2),
                missing_rate: missing_rate.unwrap_or(0.4),
            };
            if let Problem::Completion {
                rows,
                cols,
                rank,
                missing_rate,
            } = p
            {
                if rows == 0 || cols == 0 || rank == 0 {
                    return Err(CliError::Invalid(
                        "rows, cols and rank must be positive".into(),
                    ));
                }
                if !(0.0..1.0).contains(&missing_rate) {
                    return Err(CliError::Invalid(format!(
                        "missing_rate {missing_rate} outside [0, 1)"
                    )));
                }
            }
            (p, mu.unwrap_or(0.01))
        }
        other => {
            return Err(CliError::Invalid(format!(
                "unknown problem `{other}`; expected lasso1d or completion"
            )))
        }
    };
    let cfg_method = cfg
        .take_str("method")
        .map(|m| m.parse::<Regime>().map_err(CliError::from))
        .transpose()?;
    let method = args.method.or(cfg_method).unwrap_or(Regime::Tos);
    let gamma = cfg.take("gamma")?.unwrap_or(1.0);
    let lambda = cfg.take("lambda")?.unwrap_or(1.0);
    let alpha = cfg.take("alpha")?.unwrap_or(0.0);
    let cfg_tol = cfg.take("tol")?;
    let tol = args.tol.or(cfg_tol).unwrap_or(SolverConfig::DEFAULT_TOL);
    let max_iters = cfg
        .take("max_iters")?
        .unwrap_or(SolverConfig::DEFAULT_MAX_ITERS);
    let epsilon_bar = cfg
        .take("epsilon_bar")?
        .unwrap_or(SolverConfig::DEFAULT_EPSILON_BAR);
    let sigma = cfg.take("sigma")?.unwrap_or(SolverConfig::DEFAULT_SIGMA);
    let delta_star = cfg
        .take("delta_star")?
        .unwrap_or(SolverConfig::DEFAULT_DELTA_STAR);
    let cfg_seed = cfg.take("seed")?;
    let cfg_strict = match cfg.take_str("strict").as_deref() {
        None | Some("false") => false,
        Some("true") => true,
        Some(v) => {
            return Err(CliError::Invalid(format!(
                "`strict` must be true or false, got `{v}`"
            )))
        }
    };
    cfg.finish()?;
    Ok(SolveSettings {
        problem,
        mu,
        method,
        gamma,
        lambda,
        alpha,
        tol,
        max_iters,
        epsilon_bar,
        sigma,
        delta_star,
        seed: common.seed.or(cfg_seed).unwrap_or(0),
        strict: args.strict || cfg_strict,
    })
}

impl SolveSettings {
    pub fn solver_config(&self) -> SolverConfig {
        let mut c = method_config(self.method, self.gamma, self.lambda, self.alpha)
            .with_tol(self.tol)
            .with_max_iters(self.max_iters)
            .with_epsilon_bar(self.epsilon_bar);
        c.sigma = self.sigma;
        c.delta_star = self.delta_star;
        c
    }

    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.comment("itos solve");
        match self.problem {
            Problem::Lasso1d { b } => {
                m.set("problem", "lasso1d");
                m.set("b", b);
            }
            Problem::Completion {
                rows,
                cols,
                rank,
                missing_rate,
            } => {
                m.set("problem", "completion");
                m.set("rows", rows);
                m.set("cols", cols);
                m.set("rank", rank);
                m.set("missing_rate", missing_rate);
            }
        }
        m.set("mu", self.mu);
        m.set("method", self.method);
        m.set("gamma", self.gamma);
        m.set("lambda", self.lambda);
        m.set("alpha", self.alpha);
        m.set("tol", self.tol);
        m.set("max_iters", self.max_iters);
        m.set("epsilon_bar", self.epsilon_bar);
        m.set("sigma", self.sigma);
        m.set("delta_star", self.delta_star);
        m.set("seed", self.seed);
        m.set("strict", self.strict);
        m
    }
}

fn matrix_csv(x: &Point, buf: &mut Vec<u8>) -> std::io::Result<()> {
    use std::io::Write;
    for i in 0..x.nrows() {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(buf, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn run(common: &Common, args: &SolveArgs) -> CliResult<i32> {
    let settings = resolve(load_config(common)?, args, common)?;
    let config = settings.solver_config();
    let violations = validate_config(&config, 1.0);
    for v in &violations {
        eprintln!("warning: {}: {v}", config.regime);
    }
    if settings.strict && !violations.is_empty() {
        return Err(CliError::Invalid("strict validation failed".into()));
    }

    let (report, extra) = match settings.problem {
        Problem::Lasso1d { b } => {
            let triple = lasso1d_triple(b, settings.mu);
            let r = solve(&triple, &config, Point::zeros(1, 1))?;
            let err = (r.solution[(0, 0)] - oracle_lasso1d(b, settings.mu)).abs();
            (r, format!("distance to closed form: {err:e}"))
        }
        Problem::Completion {
            rows,
            cols,
            rank,
            missing_rate,
        } => {
            let inst =
                completion_instance(rank, (rows, cols), missing_rate, settings.mu, settings.seed)?;
            let triple = inst.problem.triple()?;
            let r = solve(&triple, &config, inst.problem.initial_point())?;
            let rel = (&r.solution - &inst.truth).norm() / inst.truth.norm();
            let obj = inst.problem.objective(&r.solution);
            (
                r,
                format!("objective: {obj:e}\nrelative error to ground truth: {rel:e}"),
            )
        }
    };
    println!(
        "method: {}\niterations: {}\nconverged: {}\nfinal relative change: {:e}\n{extra}",
        report.regime, report.iterations, report.converged, report.final_relative_change
    );
    if let Some(dir) = &common.out {
        create_dir(dir)?;
        write_with(&dir.join("solution.csv"), |buf| {
            matrix_csv(&report.solution, buf)
        })?;
        write_with(&dir.join("history.csv"), |buf| {
            write_history_csv(&report, buf)
        })?;
        write_file(
            &dir.join("manifest.txt"),
            settings.manifest().render().as_bytes(),
        )?;
    }
    Ok(0)
}
