//! `itos inpaint`: the inpainting comparison.
//!
//! Config keys and their defaults (method parameters default to the chosen
//! case):
//!
//! ```text
//! case = 1                    # 1, 2 or 3
//! image = synthetic           # or a path to a P2/P5 PGM file
//! rows = 128                  # synthetic image size
//! cols = 128
//! missing_rates = 0.4,0.6,0.8
//! noise_levels = 0.01,0.05
//! mu = auto                   # 0.5 at noise 0.01, 1.8 at noise 0.05
//! eps = 1e-3,1e-5
//! methods = tos,itos1,itos2
//! gamma = 1.8
//! tos.lambda = 1
//! itos1.lambda = 0.8
//! itos1.alpha = 0.2
//! itos2.lambda = 1
//! itos2.alpha_cap = 0.2
//! epsilon_bar = 0.99
//! sigma = 0.01
//! delta_star = 1
//! max_iters = 5000
//! seed = 0
//! strict = false
//! workers = 0                 # 0 = one per logical core
//! ```
//!
//! Outputs in `--out` (default `inpaint-out`): `results.csv`, `clean.pgm`,
//! `mask_m<rate>.pgm`, `observed_m<rate>_n<noise>.pgm`, and per cell
//! `restored_<tag>.pgm` and `history_<tag>.csv` with
//! `tag = m<rate>_n<noise>_eps<eps>_<method>`; plus `manifest.txt`.

use std::path::{Path, PathBuf};

use clap::Args;
use itos::inpainting::experiment::{
    method_config, write_history_csv, write_results_csv, ParameterCase,
};
use itos::inpainting::pgm::{encode_pgm, write_mask_pgm};
use itos::inpainting::{run_experiment, ExperimentSpec, ImageSource};
use itos::{Regime, SolverConfig};

use crate::kv::{KvConfig, Manifest};
use crate::{
    create_dir, load_config, parse_flag_list, write_file, write_with, CliError, CliResult, Common,
};

#[derive(Debug, Clone, Args)]
pub struct InpaintArgs {
    /// Parameter case 1, 2 or 3.
    #[arg(long)]
    pub case: Option<u32>,
    /// `synthetic` or a PGM path.
    #[arg(long, value_name = "PATH")]
    pub image: Option<String>,
    /// Comma-separated stopping tolerances.
    #[arg(long, value_name = "LIST")]
    pub eps: Option<String>,
    /// Comma-separated subset of tos,itos1,itos2.
    #[arg(long, value_name = "LIST")]
    pub methods: Option<String>,
    /// Refuse to run configurations that fail validation.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads; 0 uses one per logical core.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    pub regime: Regime,
    pub lambda: f64,
    /// Constant inertia for iTOS-1, cap for iTOS-2, unused by TOS.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintSettings {
    pub case: ParameterCase,
    pub image: ImageSource,
    pub missing_rates: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub mu: Option<f64>,
    pub eps: Vec<f64>,
    pub gamma: f64,
    pub methods: Vec<MethodParams>,
    pub epsilon_bar: f64,
    pub sigma: f64,
    pub delta_star: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub strict: bool,
    pub workers: usize,
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Invalid(format!(
            "`{key}` must be true or false, got `{v}`"
        ))),
    }
}

fn parse_methods(s: &str) -> CliResult<Vec<Regime>> {
    let list: Vec<Regime> = crate::kv::parse_list(s).map_err(CliError::Invalid)?;
    if list.is_empty() {
        return Err(CliError::Invalid("method list is empty".into()));
    }
    for (i, r) in list.iter().enumerate() {
        if list[..i].contains(r) {
            return Err(CliError::Invalid(format!("method {r} listed twice")));
        }
    }
    Ok(list)
}

fn method_key(regime: Regime) -> &'static str {
    match regime {
        Regime::Tos => "",
        Regime::Itos1 => "itos1.alpha",
        Regime::Itos2 => "itos2.alpha_cap",
    }
}

pub fn resolve(
    mut cfg: KvConfig,
    args: &InpaintArgs,
    common: &Common,
) -> CliResult<InpaintSettings> {
    let case_index = args.case.or(cfg.take("case")?).unwrap_or(1);
    let case = ParameterCase::from_index(case_index)
        .ok_or_else(|| CliError::Invalid(format!("case must be 1, 2 or 3, got {case_index}")))?;

    let image_str = args
        .image
        .clone()
        .or(cfg.take_str("image"))
        .unwrap_or_else(|| "synthetic".into());
    let rows: usize = cfg.take("rows")?.unwrap_or(128);
    let cols: usize = cfg.take("cols")?.unwrap_or(128);
    let image = if image_str == "synthetic" {
        if rows == 0 || cols == 0 {
            return Err(CliError::Invalid(
                "synthetic image size must be positive".into(),
            ));
        }
        ImageSource::Synthetic { rows, cols }
    } else {
        let path = PathBuf::from(&image_str);
        ImageSource::Pgm(std::fs::canonicalize(&path).unwrap_or(path))
    };

    let missing_rates = cfg
        .take_list("missing_rates")?
        .unwrap_or(vec![0.4, 0.6, 0.8]);
    let noise_levels = cfg.take_list("noise_levels")?.unwrap_or(vec![0.01, 0.05]);
    let mu = match cfg.take_str("mu") {
        None => None,
        Some(v) if v == "auto" => None,
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|e| CliError::Invalid(format!("bad value for `mu`: {e}")))?,
        ),
    };
    let cfg_eps = cfg.take_list("eps")?;
    let eps = match &args.eps {
        Some(s) => parse_flag_list("eps", s)?,
        None => cfg_eps.unwrap_or(vec![1e-3, 1e-5]),
    };
    if eps.is_empty() {
        return Err(CliError::Invalid("tolerance list is empty".into()));
    }
    let cfg_methods = cfg.take_str("methods");
    let regimes = match args.methods.as_deref().or(cfg_methods.as_deref()) {
        Some(s) => parse_methods(s)?,
        None => Regime::ALL.to_vec(),
    };
    let gamma = cfg.take("gamma")?.unwrap_or(case.gamma());

    // Consume every method key so unused ones are not reported as unknown.
    let mut methods = Vec::new();
    for regime in Regime::ALL {
        let (case_lambda, case_alpha) = case.parameters(regime);
        let lambda = cfg
            .take(&format!("{}.lambda", regime.as_str()))?
            .unwrap_or(case_lambda);
        let alpha = match regime {
            Regime::Tos => 0.0,
            _ => cfg.take(method_key(regime))?.unwrap_or(case_alpha),
        };
        if regimes.contains(&regime) {
            methods.push(MethodParams {
                regime,
                lambda,
                alpha,
            });
        }
    }
    methods.sort_by_key(|m| regimes.iter().position(|r| *r == m.regime));

    let epsilon_bar = cfg
        .take("epsilon_bar")?
        .unwrap_or(SolverConfig::DEFAULT_EPSILON_BAR);
    let sigma = cfg.take("sigma")?.unwrap_or(SolverConfig::DEFAULT_SIGMA);
    let delta_star = cfg
        .take("delta_star")?
        .unwrap_or(SolverConfig::DEFAULT_DELTA_STAR);
    let max_iters = cfg
        .take("max_iters")?
        .unwrap_or(SolverConfig::DEFAULT_MAX_ITERS);
    let cfg_seed = cfg.take("seed")?;
    let seed = common.seed.or(cfg_seed).unwrap_or(0);
    let cfg_strict = match cfg.take_str("strict") {
        Some(v) => parse_bool("strict", &v)?,
        None => false,
    };
    let cfg_workers = cfg.take("workers")?;
    let workers = args.workers.or(cfg_workers).unwrap_or(0);
    cfg.finish()?;

    Ok(InpaintSettings {
        case,
        image,
        missing_rates,
        noise_levels,
        mu,
        eps,
        gamma,
        methods,
        epsilon_bar,
        sigma,
        delta_star,
        max_iters,
        seed,
        strict: args.strict || cfg_strict,
        workers,
    })
}

impl InpaintSettings {
    pub fn solver_configs(&self) -> Vec<SolverConfig> {
        self.methods
            .iter()
            .map(|m| {
                let mut c = method_config(m.regime, self.gamma, m.lambda, m.alpha);
                c.epsilon_bar = self.epsilon_bar;
                c.sigma = self.sigma;
                c.delta_star = self.delta_star;
                c
            })
            .collect()
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            image: self.image.clone(),
            missing_rates: self.missing_rates.clone(),
            noise_levels: self.noise_levels.clone(),
            mu: self.mu,
            methods: self.solver_configs(),
            eps: self.eps.clone(),
            max_iters: self.max_iters,
            seed: self.seed,
            strict: self.strict,
            workers: self.workers,
        }
    }

    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.comment("itos inpaint");
        m.set("case", self.case.index());
        match &self.image {
            ImageSource::Synthetic { rows, cols } => {
                m.set("image", "synthetic");
                m.set("rows", rows);
                m.set("cols", cols);
            }
            ImageSource::Pgm(p) => m.set("image", p.display()),
        }
        m.set_list("missing_rates", &self.missing_rates);
        m.set_list("noise_levels", &self.noise_levels);
        match self.mu {
            Some(mu) => m.set("mu", mu),
            None => m.set("mu", "auto"),
        }
        m.set_list("eps", &self.eps);
        let names: Vec<&str> = self.methods.iter().map(|p| p.regime.as_str()).collect();
        m.set_list("methods", &names);
        m.set("gamma", self.gamma);
        for p in &self.methods {
            m.set(&format!("{}.lambda", p.regime.as_str()), p.lambda);
            if p.regime != Regime::Tos {
                m.set(method_key(p.regime), p.alpha);
            }
        }
        m.set("epsilon_bar", self.epsilon_bar);
        m.set("sigma", self.sigma);
        m.set("delta_star", self.delta_star);
        m.set("max_iters", self.max_iters);
        m.set("seed", self.seed);
        m.set("strict", self.strict);
        m.set("workers", self.workers);
        m
    }
}

fn cell_tag(missing: f64, noise: f64, eps: f64, method: Regime) -> String {
    format!("m{missing}_n{noise}_eps{eps:e}_{method}")
}

fn write_pgm_file(path: &Path, img: &itos::Point) -> CliResult<()> {
    write_file(path, &encode_pgm(img))
}

pub fn run(common: &Common, args: &InpaintArgs) -> CliResult<i32> {
    let settings = resolve(load_config(common)?, args, common)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("inpaint-out"));
    let output = run_experiment(&settings.spec())?;

    for (regime, violations) in &output.violations {
        for v in violations {
            eprintln!("warning: {regime}: {v}");
        }
    }

    create_dir(&out)?;
    write_with(&out.join("results.csv"), |buf| {
        write_results_csv(&output.rows(), buf)
    })?;
    write_pgm_file(&out.join("clean.pgm"), &output.clean)?;
    for s in &output.scenarios {
        write_mask_pgm(&out.join(format!("mask_m{}.pgm", s.missing_rate)), &s.mask)?;
        write_pgm_file(
            &out.join(format!("observed_m{}_n{}.pgm", s.missing_rate, s.noise)),
            &s.observed,
        )?;
    }
    for cell in &output.cells {
        let r = &cell.row;
        let tag = cell_tag(r.missing_rate, r.noise, r.eps, r.method);
        write_pgm_file(
            &out.join(format!("restored_{tag}.pgm")),
            &cell.report.solution,
        )?;
        write_with(&out.join(format!("history_{tag}.csv")), |buf| {
            write_history_csv(&cell.report, buf)
        })?;
        if common.verbose > 0 {
            eprintln!(
                "{tag}: snr {:.3} dB, ssim {:.4}, {} iterations{}",
                r.snr_db,
                r.ssim,
                r.iterations,
                if r.converged { "" } else { " (not converged)" }
            );
        }
    }
    write_file(
        &out.join("manifest.txt"),
        settings.manifest().render().as_bytes(),
    )?;
    if common.verbose > 0 {
        eprintln!("wrote {} cells to {}", output.cells.len(), out.display());
    }
    Ok(0)
}
