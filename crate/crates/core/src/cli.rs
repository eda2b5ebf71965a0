//! `trawl` command line: one TOML config per experiment, one output
//! directory per run.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 invalid
//! configuration, 3 cell budget exceeded, 4 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, Route};
use crate::cumulant::{asymptotic_cumulant, critical_order, cumulant_curve, CumulantCurve, CumulantGrowth};
use crate::error::{Result, TrawlError};
use crate::io;
use crate::scaling::{
    analytic_scaling_curve, ensemble_scaling_curve, fit_tau, intermittency_check, CurveSource, ScalingCurve, TauFit,
    Verdict,
};
use crate::simulator::{run_ensemble, EnsembleConfig};
use crate::trawl::TrawlGeometry;
use crate::verify::{run_verify, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "trawl", version, about = "Trawl process simulation, cumulants and moment scaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "TRAWL_THREADS")]
    pub threads: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and write `ensemble.csv`.
    Simulate,
    /// Evaluate integrated-process cumulant curves.
    Cumulants,
    /// Estimate τ(q) and decide intermittency.
    Scaling,
    /// Run the invariant suite; exit 0 iff every check passes.
    Verify,
}

/// Maps an error to its documented exit code.
pub fn exit_code(err: &TrawlError) -> i32 {
    match err {
        TrawlError::Config(_) | TrawlError::Domain(_) | TrawlError::UnsupportedFamily(_) => EXIT_CONFIG,
        TrawlError::Budget { .. } => EXIT_BUDGET,
        TrawlError::Quadrature { .. } | TrawlError::InsufficientData(_) => EXIT_NUMERICAL,
        TrawlError::Io(_) => EXIT_FAILURE,
    }
}

/// Everything a command needs after flags and config are resolved.
pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub quiet: bool,
}

impl Context {
    fn from_common(common: &Common) -> Result<Self> {
        let path = common
            .config
            .as_deref()
            .ok_or_else(|| TrawlError::Config("--config <path> is required".into()))?;
        let config = ExperimentConfig::load(path)?;
        if common.threads == Some(0) {
            return Err(TrawlError::Config("--threads must be positive".into()));
        }
        Ok(Context {
            out: common.out.clone().unwrap_or_else(|| config.output.directory.clone()),
            config,
            threads: common.threads,
            quiet: common.quiet,
        })
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.config.output.wants(f)
    }

    fn geometry(&self) -> Result<TrawlGeometry> {
        TrawlGeometry::new(self.config.trawl)
    }

    /// Runs `f` inside a pool of the requested size, or the global pool.
    fn install<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        match self.threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| TrawlError::Config(format!("thread pool: {e}")))?
                .install(f),
            None => f(),
        }
    }
}

#[derive(Serialize)]
struct EnsembleSidecar<'a> {
    version: &'static str,
    master_seed: u64,
    config: &'a EnsembleConfig,
}

pub fn cmd_simulate(ctx: &Context) -> Result<()> {
    let cfg = ctx.config.ensemble_config();
    ctx.note(format!(
        "simulating {} replications of {} steps (delta = {})",
        cfg.replications, cfg.n, cfg.delta
    ));
    let ens = run_ensemble(&cfg, ctx.threads)?;
    if ctx.wants(Format::Csv) {
        io::write_ensemble_csv(&ctx.path("ensemble.csv"), &ens)?;
    }
    if ctx.wants(Format::Json) {
        io::write_json(
            &ctx.path("ensemble.json"),
            &EnsembleSidecar {
                version: env!("CARGO_PKG_VERSION"),
                master_seed: cfg.master_seed,
                config: &cfg,
            },
        )?;
    }
    ctx.note(format!("wrote ensemble to {}", ctx.out.display()));
    Ok(())
}

#[derive(Serialize)]
struct CumulantSummary {
    m: u32,
    fit: Option<TauFit>,
    asymptotic: Option<CumulantGrowth>,
}

pub fn cmd_cumulants(ctx: &Context) -> Result<()> {
    let geom = ctx.geometry()?;
    let a = &ctx.config.analysis;
    let t_grid = a.t_grid.values();
    let curves = ctx.install(|| {
        a.orders
            .iter()
            .map(|&m| cumulant_curve(&geom, &ctx.config.seed, m, &t_grid))
            .collect::<Result<Vec<CumulantCurve>>>()
    })?;
    let mut summary = Vec::new();
    for c in &curves {
        // zero and sign-changing curves have no power-law slope
        let fit = if c.values.iter().all(|v| *v > 0.0) {
            Some(fit_tau(&c.t_grid, &c.values, f64::from(c.m), a.fit_window_decades)?)
        } else {
            None
        };
        let asymptotic = match asymptotic_cumulant(&geom, &ctx.config.seed, c.m) {
            Ok(g) => Some(g),
            Err(TrawlError::Domain(_) | TrawlError::UnsupportedFamily(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(f) = &fit {
            ctx.note(format!("m = {}: slope {:.4} (r2 {:.6})", c.m, f.tau_hat, f.r2));
        }
        summary.push(CumulantSummary { m: c.m, fit, asymptotic });
    }
    if ctx.wants(Format::Csv) {
        io::write_cumulant_csv(&ctx.path("cumulants.csv"), &curves)?;
        let fits: Vec<(u32, Option<TauFit>)> = summary.iter().map(|s| (s.m, s.fit)).collect();
        io::write_cumulant_fits_csv(&ctx.path("cumulant_fits.csv"), &fits)?;
    }
    if ctx.wants(Format::Json) {
        io::write_json(&ctx.path("cumulant_fits.json"), &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerdictFile {
    #[serde(flatten)]
    verdict: Verdict,
    source: CurveSource,
}

pub fn cmd_scaling(ctx: &Context) -> Result<()> {
    let geom = ctx.geometry()?;
    let alpha = geom.alpha().ok_or_else(|| {
        TrawlError::UnsupportedFamily(format!("scaling verdict needs a regularly varying trawl, got {}", geom.spec().name()))
    })?;
    let q_star = critical_order(alpha);
    let a = &ctx.config.analysis;
    if a.q_grid.iter().filter(|q| **q >= q_star).count() < 2 {
        return Err(TrawlError::Config(format!(
            "analysis.q_grid needs two orders at or above q* = {q_star}"
        )));
    }
    let mut curves: Vec<ScalingCurve> = Vec::new();
    if matches!(a.route, Route::Analytic | Route::Both) {
        let t = a.moment_t_grid.values();
        curves.push(ctx.install(|| analytic_scaling_curve(&geom, &ctx.config.seed, &a.q_grid, &t, a.fit_window_decades))?);
    }
    if matches!(a.route, Route::MonteCarlo | Route::Both) {
        let ens = run_ensemble(&ctx.config.ensemble_config(), ctx.threads)?;
        curves.push(ctx.install(|| ensemble_scaling_curve(&ens, &a.q_grid, a.fit_window_decades))?);
    }
    // the analytic curve, when present, decides
    let decisive = &curves[0];
    let verdict = intermittency_check(decisive, q_star)?;
    for c in &curves {
        for f in &c.fits {
            ctx.note(format!(
                "{} q = {}: tau = {:.4} +/- {:.2e}",
                c.source.as_str(),
                f.q,
                f.tau_hat,
                f.stderr
            ));
        }
    }
    ctx.note(format!("intermittent: {}", verdict.intermittent));
    if ctx.wants(Format::Csv) {
        io::write_scaling_csv(&ctx.path("scaling.csv"), &curves)?;
    }
    if ctx.wants(Format::Json) {
        io::write_json(
            &ctx.path("verdict.json"),
            &VerdictFile {
                verdict,
                source: decisive.source,
            },
        )?;
    }
    Ok(())
}

/// Runs the suite and writes the report; returns whether every check passed.
pub fn cmd_verify(ctx: &Context) -> Result<VerifyReport> {
    let report = ctx.install(|| run_verify(&ctx.config, ctx.threads))?;
    if !ctx.quiet {
        print!("{}", report.table());
    }
    if ctx.wants(Format::Json) {
        io::write_json(&ctx.path("verify.json"), &report)?;
    }
    Ok(report)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let ctx = Context::from_common(&cli.common)?;
    match cli.command {
        Command::Simulate => cmd_simulate(&ctx)?,
        Command::Cumulants => cmd_cumulants(&ctx)?,
        Command::Scaling => cmd_scaling(&ctx)?,
        Command::Verify => {
            let report = cmd_verify(&ctx)?;
            if !report.all_passed() {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                eprintln!("verify: {failed} check(s) failed");
                return Ok(EXIT_FAILURE);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Convenience for tests: `run` with a config path and output directory.
pub fn run_with(command: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args: Vec<OsString> = vec!["trawl".into(), command.into()];
    args.extend(["--config".into(), config.as_os_str().to_owned()]);
    args.extend(["--out".into(), out.as_os_str().to_owned()]);
    args.extend(extra.iter().map(OsString::from));
    run(args)
}
