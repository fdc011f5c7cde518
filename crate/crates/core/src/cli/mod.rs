//! Configuration-driven experiment runner.
//!
//! One TOML file describes one experiment. `lrdfield <kind> --config file.toml`
//! validates it, runs it and writes CSV tables (plus JSON mirrors with
//! `--json`) and a `manifest.json` with SHA-256 checksums into the output
//! directory. Exit codes: 0 success, 2 validation failure, 1 runtime error.

pub mod config;
mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{RunManifest, Table};

use crate::error::{Error, Result};
use crate::fieldsim::EXACT_LIMIT;
use crate::hermite::{hermite_rank, MAX_ORDER};
use crate::msd::MsdConfig;

/// Runtime switches that do not change the data.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub json: bool,
    pub workers: Option<usize>,
}

/// Every precondition the configuration breaks; empty iff `run` would start.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    let model = cfg.model.as_ref().map(|m| m.build());
    if let Some(Err(e)) = &model {
        v.push(format!("model: {e}"));
    }
    let mut check = |r: Result<()>, ctx: &str| {
        if let Err(e) = r {
            v.push(format!("{ctx}: {e}"));
        }
    };
    let needs_model = !matches!(cfg.kind, ExperimentKind::HermiteCoeffs | ExperimentKind::KernelCheck);
    if model.is_none() && needs_model {
        check(Err(config::missing("model")), "model");
    }
    let model = model.and_then(|m| m.ok());
    let needs_domain = matches!(
        cfg.kind,
        ExperimentKind::KernelCheck | ExperimentKind::LimitSample | ExperimentKind::ConvergenceStudy | ExperimentKind::Theorem1Demo
    );
    let domain = match &cfg.domain {
        Some(d) => match d.build() {
            Ok(d) => Some(d),
            Err(e) => {
                check(Err(e), "domain");
                None
            }
        },
        None if needs_domain => {
            check(Err(config::missing("domain")), "domain");
            None
        }
        None => None,
    };
    if let (Some(m), Some(d)) = (&model, &domain) {
        if m.n() != d.n() {
            check(Err(Error::Input(format!("model n = {} but domain has {} axes", m.n(), d.n()))), "domain");
        }
    }
    if let Some(m) = &model {
        if let Err(e) = cfg.weight(m.n()) {
            check(Err(e), "weight");
        }
    }
    match cfg.kind {
        ExperimentKind::HermiteCoeffs => match &cfg.hermite {
            None => check(Err(config::missing("hermite")), "hermite"),
            Some(h) => {
                if h.jmax > MAX_ORDER {
                    check(Err(Error::Input(format!("jmax = {} breaks the order guard jmax <= {MAX_ORDER}", h.jmax))), "hermite");
                }
                if h.nodes < 4 * h.jmax.max(1) {
                    check(Err(Error::Input(format!("nodes = {} must be at least 4 * jmax", h.nodes))), "hermite");
                }
                if h.functions.is_empty() {
                    check(Err(Error::Input("functions must not be empty".into())), "hermite");
                }
                for g in &h.functions {
                    check(g.validate(), "hermite.functions");
                }
                if let Some(k) = h.orthogonality_max {
                    if k > MAX_ORDER {
                        check(Err(Error::Input(format!("orthogonality_max = {k} breaks the order guard jmax <= {MAX_ORDER}"))), "hermite");
                    }
                }
                if let Some(mc) = &h.mc {
                    if model.is_none() {
                        check(Err(config::missing("model")), "hermite.mc");
                    }
                    if mc.reps < 2 {
                        check(Err(Error::Input("reps must be at least 2".into())), "hermite.mc");
                    }
                    if mc.pairs.iter().flatten().any(|&o| o > MAX_ORDER) {
                        check(Err(Error::Input(format!("orders break the order guard jmax <= {MAX_ORDER}"))), "hermite.mc");
                    }
                    if mc.lags.iter().any(|&r| !(r >= 0.0)) {
                        check(Err(Error::Input("lags must be nonnegative".into())), "hermite.mc");
                    }
                }
            }
        },
        ExperimentKind::FieldValidate => match &cfg.field {
            None => check(Err(config::missing("field")), "field"),
            Some(f) => {
                if let Some(m) = &model {
                    let n = m.n();
                    let spacing = f.spacing.clone().unwrap_or_else(|| vec![1.0; n]);
                    match crate::fieldsim::GridSpec::new(f.counts.clone(), spacing, vec![0.0; n]) {
                        Err(e) => check(Err(e), "field"),
                        Ok(g) => {
                            if g.n() != n {
                                check(Err(Error::Input("counts must have n entries".into())), "field");
                            }
                            if f.method == config::FieldMethod::Exact && g.len() > EXACT_LIMIT {
                                check(Err(Error::GridTooLarge { points: g.len(), limit: EXACT_LIMIT }), "field");
                            }
                            for lag in &f.lags {
                                let fits = lag.len() == n
                                    && lag.iter().zip(&f.counts).all(|(&k, &c)| k.unsigned_abs() < c as u64);
                                if !fits {
                                    check(Err(Error::Lag { lag: lag.clone() }), "field");
                                }
                            }
                        }
                    }
                }
                if f.replicates < 30 {
                    check(Err(Error::Input("replicates must be at least 30".into())), "field");
                }
                if f.method == config::FieldMethod::Spectral && f.cells < 16 {
                    check(Err(Error::Input("cells must be at least 16".into())), "field");
                }
            }
        },
        ExperimentKind::MsdRatio => match &cfg.msd {
            None => check(Err(config::missing("msd")), "msd"),
            Some(s) => {
                if let Some(m) = &model {
                    let n = m.n();
                    if let Ok(g) = cfg.weight(n) {
                        for &t in &s.t_ladder {
                            let r = MsdConfig::new(m.clone(), s.m, g.clone(), vec![t; n]).and_then(|mut c| {
                                c.quad.points_per_unit = s.points_per_unit;
                                c.validate()
                            });
                            check(r, "msd");
                        }
                    }
                    if s.mc_replicates > 0 {
                        for &t in &s.t_ladder {
                            let k = t * 2.0 * s.mc_q as f64;
                            if (k - k.round()).abs() > 1e-9 {
                                check(Err(Error::Input(format!("T = {t} must be a multiple of 1/(2 mc_q)"))), "msd");
                            } else if (k.round() as usize).pow(n as u32) > EXACT_LIMIT {
                                check(Err(Error::GridTooLarge { points: (k.round() as usize).pow(n as u32), limit: EXACT_LIMIT }), "msd");
                            }
                        }
                    }
                }
                if s.t_ladder.is_empty() {
                    check(Err(Error::Input("t_ladder must not be empty".into())), "msd");
                }
            }
        },
        ExperimentKind::L12 => match &cfg.l12 {
            None => check(Err(config::missing("l12")), "l12"),
            Some(s) => {
                if let Some(m) = &model {
                    let prod = m.alpha() * s.m as f64;
                    if prod >= m.n() as f64 {
                        check(Err(Error::LongRangeViolation { product: prod, n: m.n() }), "l12");
                    }
                    if s.a.len() != m.n() || s.a.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                        check(Err(Error::Input("a must have n entries in (0, 1]".into())), "l12");
                    }
                }
                if s.points < 2 {
                    check(Err(Error::Input("points must be at least 2".into())), "l12");
                }
                if s.d1_ladder.iter().any(|&t| !(t >= 1.0)) {
                    check(Err(Error::Input("d1_ladder values must be at least 1".into())), "l12");
                }
            }
        },
        ExperimentKind::KernelCheck => {
            match &cfg.kernel {
                None => check(Err(config::missing("kernel")), "kernel"),
                Some(k) => {
                    if !(k.range > 0.0) || k.quad_points < 2 {
                        check(Err(Error::Input("range must be positive and quad_points at least 2".into())), "kernel");
                    }
                }
            }
            if let (Some(l), Some(d)) = (&cfg.lemma1, &domain) {
                let sum: f64 = l.tau.iter().sum();
                if l.tau.len() != l.kappa || l.kappa == 0 {
                    check(Err(Error::Input("tau must have kappa >= 1 entries".into())), "lemma1");
                }
                if l.tau.iter().any(|&t| !(t > 0.0)) {
                    check(Err(Error::Input("tau_i must be positive".into())), "lemma1");
                }
                if sum >= d.n() as f64 {
                    check(Err(Error::Divergence(format!("sum of tau = {sum} must be below n = {}", d.n()))), "lemma1");
                }
            }
        }
        ExperimentKind::LimitSample => match &cfg.limit {
            None => check(Err(config::missing("limit")), "limit"),
            Some(s) => {
                if let Some(m) = &model {
                    let (n, a) = (m.n() as f64, m.alpha());
                    match s.kappa {
                        1 if !(a < n) => check(Err(Error::Divergence("rank-1 limit needs 0 < alpha < n".into())), "limit"),
                        2 if !(2.0 * a < n) => {
                            check(Err(Error::Divergence("rank-2 limit needs 0 < alpha < n/2".into())), "limit")
                        }
                        1 | 2 => {}
                        k => check(Err(Error::Input(format!("kappa must be 1 or 2, got {k}"))), "limit"),
                    }
                }
                if s.nsamples < 2 {
                    check(Err(Error::Input("nsamples must be at least 2".into())), "limit");
                }
            }
        },
        ExperimentKind::ConvergenceStudy | ExperimentKind::Theorem1Demo => match &cfg.study {
            None => check(Err(config::missing("study")), "study"),
            Some(s) => {
                let demo = cfg.kind == ExperimentKind::Theorem1Demo;
                let kappa = if demo {
                    s.kappa
                } else {
                    match s.target {
                        Some(crate::limitdist::StudyKind::K1Gaussian) => Some(1),
                        Some(crate::limitdist::StudyKind::K2Rosenblatt) => Some(2),
                        _ => {
                            check(Err(Error::Input("target must be k1-gaussian or k2-rosenblatt".into())), "study");
                            None
                        }
                    }
                };
                if demo {
                    match (&s.test_function, s.kappa) {
                        (Some(g), Some(k)) => match hermite_rank(g, MAX_ORDER.min(k + 4).max(8), crate::hermite::DEFAULT_RANK_TOL) {
                            Ok(r) if r == k => {}
                            Ok(r) => check(Err(Error::RankMismatch { expected: k, found: r }), "study"),
                            Err(e) => check(Err(e), "study"),
                        },
                        _ => check(Err(Error::Input("reduction demo needs test_function and kappa".into())), "study"),
                    }
                    if s.q == 0 {
                        check(Err(Error::Input("q must be positive".into())), "study");
                    }
                }
                if let (Some(m), Some(k)) = (&model, kappa) {
                    let prod = m.alpha() * k as f64;
                    if prod >= m.n() as f64 {
                        check(Err(Error::LongRangeViolation { product: prod, n: m.n() }), "study");
                    }
                }
                if s.t_ladder.iter().any(|&t| !(t >= 1.0)) {
                    check(Err(Error::Input("t_ladder values must be at least 1".into())), "study");
                }
                if let Some(d) = &domain {
                    for &t in &s.t_ladder {
                        let pts: f64 = if demo {
                            d.widths().iter().map(|w| w * t * s.q as f64).product()
                        } else {
                            d.widths().iter().map(|w| w * t + 1.0).product()
                        };
                        if pts > EXACT_LIMIT as f64 {
                            check(Err(Error::GridTooLarge { points: pts as usize, limit: EXACT_LIMIT }), "study");
                        }
                    }
                }
            }
        },
    }
    v
}

/// Validates, runs and writes outputs; nothing is left behind on failure.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let violations = validate(cfg);
    if !violations.is_empty() {
        return Err(Error::Input(violations.join("; ")));
    }
    let started = chrono::Utc::now().to_rfc3339();
    let tables = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Input(format!("cannot build worker pool: {e}")))?
            .install(|| execute(cfg)),
        None => execute(cfg),
    }?;
    let dir = output_dir(cfg, opts);
    let mut files = Vec::new();
    for t in &tables {
        files.push((format!("{}.csv", t.name), t.to_csv()?));
        if opts.json {
            files.push((format!("{}.json", t.name), t.to_json()?));
        }
    }
    let created_dir = !dir.exists();
    let outputs = output::write_all(&dir, &files)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.name().to_string(),
        seed: cfg.seed,
        workers: opts.workers,
        config: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        outputs,
    };
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    if let Err(e) = std::fs::write(dir.join("manifest.json"), bytes) {
        let written: Vec<PathBuf> = files.iter().map(|(n, _)| dir.join(n)).collect();
        output::cleanup(&dir, &written, created_dir);
        return Err(e.into());
    }
    Ok(manifest)
}

fn execute(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    match cfg.kind {
        ExperimentKind::HermiteCoeffs => experiments::hermite_coeffs(cfg),
        ExperimentKind::FieldValidate => experiments::field_validate(cfg),
        ExperimentKind::MsdRatio => experiments::msd_ratio(cfg),
        ExperimentKind::L12 => experiments::l12(cfg),
        ExperimentKind::KernelCheck => experiments::kernel_check(cfg),
        ExperimentKind::LimitSample => experiments::limit_sample(cfg),
        ExperimentKind::ConvergenceStudy => experiments::study(cfg, false),
        ExperimentKind::Theorem1Demo => experiments::study(cfg, true),
    }
}

/// Tables of an experiment without writing anything.
pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let violations = validate(cfg);
    if !violations.is_empty() {
        return Err(Error::Input(violations.join("; ")));
    }
    execute(cfg)
}

fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| Path::new("out").join(cfg.kind.name()))
}

#[derive(Debug, Parser)]
#[command(name = "lrdfield", version, about = "Hermite functionals of long-range dependent Gaussian fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hermite coefficients, rank, Parseval and orthogonality checks.
    HermiteCoeffs(CommonArgs),
    /// Empirical covariance of simulated fields.
    FieldValidate(CommonArgs),
    /// Normalized mean-square gap between integral and sum functionals.
    MsdRatio(CommonArgs),
    /// Limit constant of the normalized D1 term.
    L12(CommonArgs),
    /// Rectangle kernel oracle and spectral truncation ladders.
    KernelCheck(CommonArgs),
    /// Samples and variances of the rank-1 and rank-2 limits.
    LimitSample(CommonArgs),
    /// Distance to the limit law along a ladder of T.
    ConvergenceStudy(CommonArgs),
    /// Integral of G(xi) against its leading Hermite term.
    Theorem1Demo(CommonArgs),
    /// Check a configuration without running it.
    Validate(CommonArgs),
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (expected, a) = match cli.command {
        Command::HermiteCoeffs(a) => (Some(ExperimentKind::HermiteCoeffs), a),
        Command::FieldValidate(a) => (Some(ExperimentKind::FieldValidate), a),
        Command::MsdRatio(a) => (Some(ExperimentKind::MsdRatio), a),
        Command::L12(a) => (Some(ExperimentKind::L12), a),
        Command::KernelCheck(a) => (Some(ExperimentKind::KernelCheck), a),
        Command::LimitSample(a) => (Some(ExperimentKind::LimitSample), a),
        Command::ConvergenceStudy(a) => (Some(ExperimentKind::ConvergenceStudy), a),
        Command::Theorem1Demo(a) => (Some(ExperimentKind::Theorem1Demo), a),
        Command::Validate(a) => (None, a),
    };
    let mut cfg = match ExperimentConfig::load(&a.config) {
        Ok(c) => c,
        Err(e @ Error::Io(_)) => {
            eprintln!("error: {}: {e}", a.config.display());
            return 1;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let mut violations = validate(&cfg);
    if let Some(k) = expected {
        if k != cfg.kind {
            violations.insert(0, format!("config kind is {} but the subcommand is {}", cfg.kind.name(), k.name()));
        }
    }
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("validation: {v}");
        }
        return 2;
    }
    if expected.is_none() {
        println!("{}: ok", a.config.display());
        return 0;
    }
    let opts = RunOptions { out: a.out, json: a.json, workers: a.workers };
    match run(&cfg, &opts) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{} {}", o.sha256, o.file);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {} experiment failed: {e}", cfg.kind.name());
            1
        }
    }
}
