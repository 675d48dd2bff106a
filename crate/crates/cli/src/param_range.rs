//! `itos param-range`: the iTOS-1 relaxation bound over an inertia grid.
//!
//! Config keys (all optional):
//!
//! ```text
//! sigma = 0.01
//! delta_star = 1
//! epsilon_bar = 0.99
//! alphas = 0,0.01,0.02        # explicit grid, may be empty
//! alpha_range = 0:0.6:0.01    # start:stop:step, inclusive
//! ```
//!
//! With neither `alphas` nor `alpha_range` the grid is `0, 0.01, …, 0.6`.
//! Writes `param_range.csv` and `manifest.txt` to `--out`, or the CSV to
//! stdout when no directory is given.

use std::io::Write;

use clap::Args;
use itos::params::{param_range_table, write_range_csv, SafetyBound};

use crate::kv::{KvConfig, Manifest};
use crate::{create_dir, load_config, parse_flag_list, write_file, CliError, CliResult, Common};

#[derive(Debug, Clone, Args)]
pub struct ParamRangeArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delta_star: Option<f64>,
    #[arg(long)]
    pub epsilon_bar: Option<f64>,
    /// Comma-separated inertia values; an empty string gives an empty table.
    #[arg(long, value_name = "LIST")]
    pub alphas: Option<String>,
    /// Inclusive grid `start:stop:step`.
    #[arg(long, value_name = "START:STOP:STEP")]
    pub alpha_range: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSettings {
    pub sigma: f64,
    pub delta_star: f64,
    pub epsilon_bar: f64,
    pub alphas: Vec<f64>,
}

pub fn default_grid() -> Vec<f64> {
    (0..=60).map(|i| i as f64 / 100.0).collect()
}

pub fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Invalid(format!("alpha range `{s}` is not start:stop:step"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn resolve(mut cfg: KvConfig, args: &ParamRangeArgs) -> CliResult<RangeSettings> {
    let sigma = args.sigma.or(cfg.take("sigma")?).unwrap_or(0.01);
    let delta_star = args.delta_star.or(cfg.take("delta_star")?).unwrap_or(1.0);
    let epsilon_bar = args
        .epsilon_bar
        .or(cfg.take("epsilon_bar")?)
        .unwrap_or(0.99);
    let cfg_alphas: Option<Vec<f64>> = cfg.take_list("alphas")?;
    let cfg_range = cfg.take_str("alpha_range");
    cfg.finish()?;

    let flag_alphas = args
        .alphas
        .as_deref()
        .map(|s| parse_flag_list("alphas", s))
        .transpose()?;
    let alphas = match (&flag_alphas, &args.alpha_range) {
        (Some(_), Some(_)) => {
            return Err(CliError::Invalid(
                "--alphas and --alpha-range are mutually exclusive".into(),
            ))
        }
        (Some(a), None) => a.clone(),
        (None, Some(r)) => parse_range(r)?,
        (None, None) => match (cfg_alphas, cfg_range) {
            (Some(_), Some(_)) => {
                return Err(CliError::Invalid(
                    "`alphas` and `alpha_range` are mutually exclusive".into(),
                ))
            }
            (Some(a), None) => a,
            (None, Some(r)) => parse_range(&r)?,
            (None, None) => default_grid(),
        },
    };

    // Reject bad constants even when the grid is empty.
    SafetyBound::new(0.0, sigma, delta_star, epsilon_bar)?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(CliError::Invalid(format!("grid value {a} outside [0, 1)")));
    }
    Ok(RangeSettings {
        sigma,
        delta_star,
        epsilon_bar,
        alphas,
    })
}

pub fn manifest(s: &RangeSettings) -> Manifest {
    let mut m = Manifest::default();
    m.comment("itos param-range");
    m.set("sigma", s.sigma);
    m.set("delta_star", s.delta_star);
    m.set("epsilon_bar", s.epsilon_bar);
    m.set_list("alphas", &s.alphas);
    m
}

pub fn run(common: &Common, args: &ParamRangeArgs) -> CliResult<i32> {
    let settings = resolve(load_config(common)?, args)?;
    let rows = param_range_table(
        settings.sigma,
        settings.delta_star,
        &settings.alphas,
        settings.epsilon_bar,
    )?;
    let mut csv = Vec::new();
    write_range_csv(&rows, &mut csv).expect("writing to memory");
    match &common.out {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("param_range.csv"), &csv)?;
            write_file(
                &dir.join("manifest.txt"),
                manifest(&settings).render().as_bytes(),
            )?;
            if common.verbose > 0 {
                eprintln!("wrote {} rows to {}", rows.len(), dir.display());
            }
        }
        None => std::io::stdout()
            .write_all(&csv)
            .map_err(|e| CliError::Failed(format!("cannot write to stdout: {e}")))?,
    }
    Ok(0)
}
