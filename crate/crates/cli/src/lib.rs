//! Command-line front end: runs the three model systems, writes exponent
//! series as CSV, and emits irregularity verdicts as JSON.

// Validation deliberately writes `!(x > 0.0)` and friends: the negated form
// also rejects NaN, which a direct `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lyaplab_core::analysis::{detect_irregular, FtleSeries, IrregularityReport};
use lyaplab_core::bowen::{flow_ftle, BowenParams, BowenSchedule};
use lyaplab_core::colli_vargas::{
    build_tables, check_constants, ftle_series, Branch, ConstraintCheck, CvParams, CvPoint,
};
use lyaplab_core::ggs::{ftle_series as ggs_ftle_series, split_parity, GgsParams, GgsSchedule};
use lyaplab_core::numerics::{LogValue, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const VERDICT_SCHEMA: &str = "lyaplab-verdict-v1";

#[derive(Debug)]
enum CliError {
    /// A named inequality or verdict check failed (exit 1).
    Check(String),
    /// The configuration is invalid (exit 2).
    Config(String),
    /// Anything else (I/O and the like; exit 1).
    Other(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "lyaplab", version, about = "Finite-time exponent laboratory")]
struct Cli {
    /// TOML configuration file; omitted fields take built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV series and JSON verdicts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// RNG seed for runs that sample initial data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Oscillation-gap tolerance for verdicts.
    #[arg(long, global = true, default_value_t = 1e-2)]
    tol: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Figure-8 tower: return-time and intermediate-time exponent series.
    Ggs,
    /// Two-saddle flow: section and closest-approach exponent series.
    Bowen,
    /// Quadratic cascade: cocycle exponent series along a deep-stage orbit.
    Cv,
    /// Verify the standing inequalities of the cascade construction.
    CheckConstants,
    /// Print the full default configuration as TOML.
    PrintDefaults,
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct Config {
    pub ggs: GgsConfig,
    pub bowen: BowenConfig,
    pub cv: CvConfig,
}


#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GgsConfig {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub n0: i64,
    pub k0: i64,
    /// Number of returns in the series.
    pub d_max: i64,
    /// Relative position of the intermediate-time schedule.
    pub zeta: f64,
}

impl Default for GgsConfig {
    fn default() -> Self {
        let p = GgsParams::default();
        GgsConfig {
            sigma: p.sigma,
            a: p.a,
            b: p.b,
            n0: p.n0,
            k0: p.k0,
            d_max: 24,
            zeta: 1.0 / 3.0,
        }
    }
}

impl GgsConfig {
    fn params(&self) -> GgsParams {
        GgsParams { sigma: self.sigma, a: self.a, b: self.b, n0: self.n0, k0: self.k0 }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowenConfig {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub c: f64,
    pub c_hat: f64,
    pub t_bar: f64,
    pub t_hat_bar: f64,
    pub t_hat0: f64,
    pub s_init: f64,
    pub delta: f64,
    /// Number of circuits in the series.
    pub n_max: usize,
}

impl Default for BowenConfig {
    fn default() -> Self {
        let p = BowenParams::default();
        BowenConfig {
            alpha_plus: p.alpha_plus,
            alpha_minus: p.alpha_minus,
            beta_plus: p.beta_plus,
            beta_minus: p.beta_minus,
            c: p.c,
            c_hat: p.c_hat,
            t_bar: p.t_bar,
            t_hat_bar: p.t_hat_bar,
            t_hat0: p.t_hat0,
            s_init: p.s_init,
            delta: p.delta,
            n_max: 30,
        }
    }
}

impl BowenConfig {
    fn params(&self) -> BowenParams {
        BowenParams {
            alpha_plus: self.alpha_plus,
            alpha_minus: self.alpha_minus,
            beta_plus: self.beta_plus,
            beta_minus: self.beta_minus,
            c: self.c,
            c_hat: self.c_hat,
            t_bar: self.t_bar,
            t_hat_bar: self.t_hat_bar,
            t_hat0: self.t_hat0,
            s_init: self.s_init,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n0: i64,
    /// Cone parameter used by cocycle runs; must be < 1/3 for a nonempty
    /// cone (the wider default 0.5 is only meaningful for `check-constants`).
    pub xi: f64,
    /// "plus" or "minus".
    pub branch: String,
    /// Deepest stage to tabulate.
    pub k_max: usize,
    /// Number of cocycle steps.
    pub steps: usize,
    /// Starting stage for cocycle runs; defaults to the computed deep stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
}

impl Default for CvConfig {
    fn default() -> Self {
        let p = CvParams::default();
        CvConfig {
            lambda: p.lambda,
            sigma: p.sigma,
            eta: p.eta,
            alpha: p.alpha,
            beta: p.beta,
            n0: p.n0,
            xi: 0.2,
            branch: "plus".to_string(),
            k_max: 260,
            steps: 120,
            kappa: None,
        }
    }
}

impl CvConfig {
    fn params(&self) -> Result<CvParams, CliError> {
        let branch = match self.branch.as_str() {
            "plus" => Branch::Plus,
            "minus" => Branch::Minus,
            other => {
                return Err(CliError::Config(format!(
                    "branch must be \"plus\" or \"minus\", got {other:?}"
                )))
            }
        };
        Ok(CvParams {
            lambda: self.lambda,
            sigma: self.sigma,
            eta: self.eta,
            alpha: self.alpha,
            beta: self.beta,
            n0: self.n0,
            xi: self.xi,
            branch,
        })
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{e}")))
        }
    }
}

// ---------------------------------------------------------------------------
// Output helpers

fn write_csv(dir: &Path, name: &str, series: &FtleSeries) -> Result<(), CliError> {
    let mut text = String::from("time,exponent\n");
    for &(t, e) in &series.entries {
        text.push_str(&format!("{:.16e},{:.16e}\n", t, e));
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    schema: &'static str,
    command: &'a str,
    gap_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    report: IrregularityReport,
}

fn write_verdict(
    dir: &Path,
    name: &str,
    command: &str,
    gap_tol: f64,
    note: Option<String>,
    report: IrregularityReport,
) -> Result<(), CliError> {
    let file = VerdictFile { schema: VERDICT_SCHEMA, command, gap_tol, note, report };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Other(format!("serialize verdict: {e}")))?;
    fs::write(dir.join(name), json + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands

fn run_ggs(cfg: &GgsConfig, out: &Path, tol: f64) -> Result<(), CliError> {
    let params = cfg.params();
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let generic = ggs_ftle_series(&params, [1.0, 1.0], &GgsSchedule::Returns { d_max: cfg.d_max })
        .map_err(|e| CliError::Other(e.to_string()))?;
    let horizontal =
        ggs_ftle_series(&params, [1.0, 0.0], &GgsSchedule::Returns { d_max: cfg.d_max })
            .map_err(|e| CliError::Other(e.to_string()))?;
    let intermediate = ggs_ftle_series(
        &params,
        [1.0, 1.0],
        &GgsSchedule::Intermediate { zeta: cfg.zeta, d_max: cfg.d_max / 4 },
    )
    .map_err(|e| CliError::Other(e.to_string()))?;
    let (h_odd, h_even) = split_parity(&horizontal);

    write_csv(out, "ggs_generic_returns.csv", &generic)?;
    write_csv(out, "ggs_horizontal_returns.csv", &horizontal)?;
    write_csv(out, "ggs_horizontal_returns_odd.csv", &h_odd)?;
    write_csv(out, "ggs_horizontal_returns_even.csv", &h_even)?;
    write_csv(out, "ggs_generic_intermediate.csv", &intermediate)?;

    let report =
        detect_irregular(&h_odd, &h_even, tol).map_err(|e| CliError::Other(e.to_string()))?;
    println!(
        "ggs: horizontal-vector verdict {:?} (gap {:.3e})",
        report.verdict, report.gap
    );
    write_verdict(out, "ggs_verdict.json", "ggs", tol, None, report)?;
    Ok(())
}

fn run_bowen(cfg: &BowenConfig, out: &Path, tol: f64) -> Result<(), CliError> {
    let params = cfg.params();
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut named = Vec::new();
    for schedule in [BowenSchedule::Tau, BowenSchedule::TauHat, BowenSchedule::TauPlusRho] {
        let series =
            flow_ftle(&params, schedule, cfg.n_max).map_err(|e| CliError::Other(e.to_string()))?;
        let name = format!("bowen_{}.csv", series.schedule.replace('-', "_"));
        write_csv(out, &name, &series)?;
        named.push(series);
    }
    let report = detect_irregular(&named[0], &named[2], tol)
        .map_err(|e| CliError::Other(e.to_string()))?;
    println!("bowen: verdict {:?} (gap {:.3e})", report.verdict, report.gap);
    write_verdict(out, "bowen_verdict.json", "bowen", tol, None, report)?;
    Ok(())
}

fn run_cv(cfg: &CvConfig, out: &Path, seed: u64, tol: f64) -> Result<(), CliError> {
    let params = cfg.params()?;
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let tables =
        build_tables(&params, cfg.k_max).map_err(|e| CliError::Config(e.to_string()))?;
    let kappa = cfg.kappa.unwrap_or(tables.k1);
    if !kappa.is_multiple_of(2) || kappa < tables.k0 {
        return Err(CliError::Config(format!(
            "kappa = {kappa} must be an even stage >= k0 = {}",
            tables.k0
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let le = tables.log_eps[kappa];
    let lb = tables.log_b[kappa];
    let seed_pt = CvPoint {
        x: LogValue::new(if rng.gen_bool(0.5) { 1 } else { -1 }, le + lb + rng.gen_range(-5.0..0.0)),
        y: LogValue::new(
            if rng.gen_bool(0.5) { 1 } else { -1 },
            le + 0.5 * lb + rng.gen_range(-5.0..0.0),
        ),
    };
    let ln_k = params.cone_k().ln();
    if !(ln_k > 0.0) {
        return Err(CliError::Config(format!(
            "xi = {} must be < 1/3 for a nonempty tangent cone",
            params.xi
        )));
    }
    let aspect = rng.gen_range(-ln_k..ln_k);
    let v0: Vec2 = [LogValue::new(1, aspect), LogValue::ONE];

    let series = ftle_series(&params, &tables, kappa, seed_pt, v0, cfg.steps)
        .map_err(|e| CliError::Other(e.to_string()))?;
    write_csv(out, "cv_steps.csv", &series.all)?;
    write_csv(out, "cv_steps_even.csv", &series.even)?;
    write_csv(out, "cv_steps_odd.csv", &series.odd)?;

    let note = params
        .is_degenerate()
        .then(|| "degenerate: alpha == beta, both subsequences share one limit".to_string());
    let report = detect_irregular(&series.even, &series.odd, tol)
        .map_err(|e| CliError::Other(e.to_string()))?;
    println!(
        "cv: stage {kappa}, verdict {:?} (gap {:.3e}{})",
        report.verdict,
        report.gap,
        if note.is_some() { ", degenerate" } else { "" }
    );
    write_verdict(out, "cv_verdict.json", "cv", tol, note, report)?;
    Ok(())
}

#[derive(Serialize)]
struct ConstantsFile {
    schema: &'static str,
    command: &'static str,
    k0: usize,
    k1: usize,
    m_prime: usize,
    m0: usize,
    m0_nominal: usize,
    checks: Vec<ConstraintCheck>,
}

fn run_check_constants(cfg: &CvConfig, out: &Path) -> Result<(), CliError> {
    let params = cfg.params()?;
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let tables =
        build_tables(&params, cfg.k_max).map_err(|e| CliError::Config(e.to_string()))?;
    let checks =
        check_constants(&params, &tables, cfg.k_max).map_err(|e| CliError::Other(e.to_string()))?;
    println!(
        "indices: k0={} k1={} m_prime={} m0={} (closed-form search: {})",
        tables.k0, tables.k1, tables.m_prime, tables.m0, tables.m0_nominal
    );
    let mut failure = None;
    for c in &checks {
        println!(
            "{} {} (log-margin {:.6e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.margin_logmag
        );
        if !c.pass && failure.is_none() {
            failure = Some(format!("{} (log-margin {:.6e})", c.name, c.margin_logmag));
        }
    }
    let file = ConstantsFile {
        schema: VERDICT_SCHEMA,
        command: "check-constants",
        k0: tables.k0,
        k1: tables.k1,
        m_prime: tables.m_prime,
        m0: tables.m0,
        m0_nominal: tables.m0_nominal,
        checks,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Other(format!("serialize constants: {e}")))?;
    fs::write(out.join("cv_constants.json"), json + "\n")?;
    match failure {
        Some(f) => Err(CliError::Check(f)),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<(), CliError> {
        let cfg = load_config(cli.config.as_deref())?;
        if !(cli.tol > 0.0) {
            return Err(CliError::Config(format!("tol = {} must be positive", cli.tol)));
        }
        if let Cmd::PrintDefaults = cli.cmd {
            let text = toml::to_string_pretty(&Config::default())
                .map_err(|e| CliError::Other(format!("serialize defaults: {e}")))?;
            print!("{text}");
            return Ok(());
        }
        fs::create_dir_all(&cli.out)?;
        match cli.cmd {
            Cmd::Ggs => run_ggs(&cfg.ggs, &cli.out, cli.tol),
            Cmd::Bowen => run_bowen(&cfg.bowen, &cli.out, cli.tol),
            Cmd::Cv => run_cv(&cfg.cv, &cli.out, cli.seed, cli.tol),
            Cmd::CheckConstants => run_check_constants(&cfg.cv, &cli.out),
            Cmd::PrintDefaults => unreachable!(),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyaplab: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
