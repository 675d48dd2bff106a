//! `itos oracle`: closed-form and reference-solution checks.
//!
//! Config keys: `case` (one of the suite names, or `all`) and `tol`
//! (`default` keeps each case's own threshold). Prints one line per case and
//! exits 1 if any fails. With `--out`, also writes `oracle.txt` and
//! `manifest.txt`.

use clap::Args;
use itos::oracle::{run_suite, SUITE};

use crate::kv::{KvConfig, Manifest};
use crate::{create_dir, load_config, write_file, CliError, CliResult, Common};

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Run a single case.
    #[arg(long, value_name = "NAME")]
    pub case: Option<String>,
    /// Pass threshold applied to every selected case.
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub case: Option<String>,
    pub tol: Option<f64>,
}

pub fn resolve(mut cfg: KvConfig, args: &OracleArgs) -> CliResult<OracleSettings> {
    let cfg_case = cfg.take_str("case").filter(|c| c != "all");
    let cfg_tol = match cfg.take_str("tol") {
        None => None,
        Some(t) if t == "default" => None,
        Some(t) => Some(
            t.parse::<f64>()
                .map_err(|e| CliError::Invalid(format!("bad value for `tol`: {e}")))?,
        ),
    };
    cfg.finish()?;
    let case = args.case.clone().or(cfg_case);
    let tol = args.tol.or(cfg_tol);
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Invalid(format!(
                "tolerance must be positive and finite, got {t}"
            )));
        }
    }
    if let Some(c) = &case {
        if !SUITE.contains(&c.as_str()) {
            return Err(CliError::Invalid(format!(
                "unknown oracle case `{c}`; available: {}",
                SUITE.join(", ")
            )));
        }
    }
    Ok(OracleSettings { case, tol })
}

pub fn run(common: &Common, args: &OracleArgs) -> CliResult<i32> {
    let settings = resolve(load_config(common)?, args)?;
    let outcomes = run_suite(settings.case.as_deref(), settings.tol)?;
    let mut report = String::new();
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        report.push_str(&format!("{status} {}: {}\n", o.name, o.detail));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    report.push_str(&format!(
        "{} of {} cases passed\n",
        outcomes.len() - failed,
        outcomes.len()
    ));
    print!("{report}");

    if let Some(dir) = &common.out {
        create_dir(dir)?;
        write_file(&dir.join("oracle.txt"), report.as_bytes())?;
        let mut m = Manifest::default();
        m.comment("itos oracle");
        m.set("case", settings.case.as_deref().unwrap_or("all"));
        match settings.tol {
            Some(t) => m.set("tol", t),
            None => m.set("tol", "default"),
        }
        write_file(&dir.join("manifest.txt"), m.render().as_bytes())?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
