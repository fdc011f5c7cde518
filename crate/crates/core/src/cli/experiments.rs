//! One runner per experiment kind; each returns its output tables.

use rand::Rng;

use super::config::{missing, ExperimentConfig, FieldMethod};
use super::output::{num, Table};
use crate::error::{Error, Result};
use crate::fieldsim::{empirical_covariance, empirical_mean, ExactSampler, FieldSample, GridSpec, SimulationMethod, SpectralSynthesizer};
use crate::hermite::{hermite_coefficients, hermite_unchecked, orthogonality_mc_check, rank_of};
use crate::limitdist::{
    convergence_study, default_discretization, kernel_k_numeric, kernel_k_rect, lemma1_integral, limit_variance_k1,
    limit_variance_k1_direct, sample_limit_k1, RosenblattSampler, SpectralQuad, StudyKind, StudyOptions,
};
use crate::msd::{d1_term, d1_term_qmc, l12_constant, monte_carlo_gap, total_gap, MsdConfig, QuadSpec};
use crate::quad::GaussHermite;
use crate::rng::{derive_seed, stream};
use crate::special::factorial;
use crate::stats;
use crate::covmodels::c1_constant;
use crate::fieldsim::SpectralDiscretization;

pub(crate) fn hermite_coeffs(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let h = cfg.hermite.as_ref().ok_or_else(|| missing("hermite"))?;
    let mut coeffs = Table::new("coefficients", &["function", "j", "coefficient"]);
    let mut summary =
        Table::new("summary", &["function", "jmax", "nodes", "rank", "second_moment", "parseval_sum", "parseval_gap"]);
    for g in &h.functions {
        let exp = hermite_coefficients(g, h.jmax, h.nodes)?;
        for (j, c) in exp.coeffs.iter().enumerate() {
            coeffs.push(vec![g.label(), j.to_string(), num(*c)]);
        }
        let rank = rank_of(&exp.coeffs, h.rank_tol).map_or("none".to_string(), |r| r.to_string());
        let ps = exp.parseval_sum();
        summary.push(vec![
            g.label(),
            h.jmax.to_string(),
            h.nodes.to_string(),
            rank,
            num(exp.second_moment),
            num(ps),
            num((ps - exp.second_moment).abs()),
        ]);
    }
    let mut tables = vec![coeffs, summary];
    if let Some(k) = h.orthogonality_max {
        let gh = GaussHermite::new(h.nodes);
        let mut t = Table::new("orthogonality", &["i", "j", "integral", "target", "abs_error"]);
        for i in 0..=k {
            for j in 0..=k {
                let v = gh.integrate(|x| hermite_unchecked(i, x) * hermite_unchecked(j, x));
                let target = if i == j { factorial(i) } else { 0.0 };
                t.push(vec![i.to_string(), j.to_string(), num(v), num(target), num((v - target).abs())]);
            }
        }
        tables.push(t);
    }
    if let Some(mc) = &h.mc {
        let model = cfg.model()?;
        let mut t = Table::new("orthogonality_mc", &["m1", "m2", "r", "estimate", "stderr", "exact", "z"]);
        for (k, [m1, m2]) in mc.pairs.iter().enumerate() {
            for (l, &r) in mc.lags.iter().enumerate() {
                let seed = derive_seed(cfg.seed, (k * mc.lags.len() + l) as u64);
                let (est, se) = orthogonality_mc_check(&model, *m1, *m2, r, mc.reps, seed)?;
                let exact = if m1 == m2 { factorial(*m1) * model.covariance(r)?.powi(*m1 as i32) } else { 0.0 };
                t.push(vec![
                    m1.to_string(),
                    m2.to_string(),
                    num(r),
                    num(est),
                    num(se),
                    num(exact),
                    num((est - exact) / se),
                ]);
            }
        }
        tables.push(t);
    }
    Ok(tables)
}

pub(crate) fn field_validate(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let f = cfg.field.as_ref().ok_or_else(|| missing("field"))?;
    let model = cfg.model()?;
    let n = model.n();
    let spacing = f.spacing.clone().unwrap_or_else(|| vec![1.0; n]);
    let grid = GridSpec::new(f.counts.clone(), spacing.clone(), vec![0.0; n])?;
    let label = model.fingerprint();
    let (values, synth): (Vec<Vec<f64>>, Option<SpectralSynthesizer>) = match f.method {
        FieldMethod::Exact => {
            let sampler = ExactSampler::new(&model, &grid.points())?;
            (par_map(f.replicates, |r| sampler.sample(cfg.seed, r as u64)), None)
        }
        FieldMethod::Spectral => {
            let s = SpectralSynthesizer::new(&model.spectral(), f.cutoff, f.cells)?;
            (par_map(f.replicates, |r| s.sample(&grid, cfg.seed, r as u64)), Some(s))
        }
    };
    let method = match f.method {
        FieldMethod::Exact => SimulationMethod::ExactFactorization,
        FieldMethod::Spectral => SimulationMethod::Spectral,
    };
    let samples: Vec<FieldSample> = values
        .into_iter()
        .map(|v| FieldSample { grid: grid.clone(), values: v, method, seed: cfg.seed, model: label.clone() })
        .collect();
    let mut header: Vec<String> = (1..=n).map(|l| format!("lag_{l}")).collect();
    header.extend(["distance", "empirical", "stderr", "model", "discretized"].map(String::from));
    let mut cov = Table::with_header("covariance", header);
    for lag in &f.lags {
        let (est, se) = empirical_covariance(&samples, lag)?;
        let h: Vec<f64> = lag.iter().zip(&spacing).map(|(&k, &s)| k as f64 * s).collect();
        let dist = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        let disc = synth.as_ref().map_or(model.covariance(dist)?, |s| s.covariance(&h));
        let mut row: Vec<String> = lag.iter().map(|k| k.to_string()).collect();
        row.extend([num(dist), num(est), num(se), num(model.covariance(dist)?), num(disc)]);
        cov.push(row);
    }
    let (m, se) = empirical_mean(&samples)?;
    let mut mean = Table::new("mean", &["mean", "stderr"]);
    mean.push(vec![num(m), num(se)]);
    Ok(vec![cov, mean])
}

fn par_map<T: Send, F: Fn(usize) -> T + Sync>(count: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(|i| f(i)).collect()
}

pub(crate) fn msd_ratio(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let s = cfg.msd.as_ref().ok_or_else(|| missing("msd"))?;
    let model = cfg.model()?;
    let n = model.n();
    let g = cfg.weight(n)?;
    let base = MsdConfig::new(model, s.m, g, vec![s.t_ladder.first().copied().unwrap_or(1.0); n])?;
    let quad = QuadSpec { points_per_unit: s.points_per_unit, subdivision_depth: s.subdivision_depth };
    let mut header: Vec<String> = ["n", "m", "alpha", "L", "g"].map(String::from).to_vec();
    header.extend((1..=n).map(|l| format!("T_{l}")));
    header.extend(["d1", "d2", "d3", "total", "denominator", "ratio", "error_estimate"].map(String::from));
    let mut ratios = Table::with_header("ratios", header);
    let mut mc = Table::new("mc", &["T", "total", "error_bound", "mc_estimate", "mc_stderr", "abs_diff"]);
    let mut qmc = Table::new("qmc", &["T", "d1", "d1_qmc", "stderr"]);
    for (k, &t) in s.t_ladder.iter().enumerate() {
        let mut c = base.with_t(vec![t; n]);
        c.quad = quad;
        let r = total_gap(&c)?;
        let mut row = vec![r.n.to_string(), r.m.to_string(), num(r.alpha), r.l.clone(), r.g.clone()];
        row.extend(r.t.iter().map(|x| num(*x)));
        row.extend([r.d1, r.d2, r.d3, r.total, r.denominator, r.ratio, r.error_estimate].map(num));
        ratios.push(row);
        if s.mc_replicates > 0 {
            let (est, se) = monte_carlo_gap(&c, s.mc_q, s.mc_replicates, derive_seed(cfg.seed, k as u64))?;
            let bound = r.error_estimate * r.denominator;
            mc.push(vec![num(t), num(r.total), num(bound), num(est), num(se), num((r.total - est).abs())]);
        }
        if s.qmc_points > 0 {
            c.mc_points = s.qmc_points;
            let (e, se) = d1_term_qmc(&c, derive_seed(cfg.seed, 1000 + k as u64))?;
            qmc.push(vec![num(t), num(r.d1), num(e), num(se)]);
        }
    }
    let mut out = vec![ratios];
    if s.mc_replicates > 0 {
        out.push(mc);
    }
    if s.qmc_points > 0 {
        out.push(qmc);
    }
    Ok(out)
}

pub(crate) fn l12(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let s = cfg.l12.as_ref().ok_or_else(|| missing("l12"))?;
    let model = cfg.model()?;
    let n = model.n();
    let g = cfg.weight(n)?;
    let quad = QuadSpec { points_per_unit: s.points, subdivision_depth: s.subdivision_depth };
    let v = l12_constant(n, s.m, model.alpha(), &g, &s.a, quad)?;
    let mut header: Vec<String> = ["n", "m", "alpha", "g"].map(String::from).to_vec();
    header.extend((1..=n).map(|l| format!("a_{l}")));
    header.push("l12".into());
    let mut t = Table::with_header("l12", header);
    let mut row = vec![n.to_string(), s.m.to_string(), num(model.alpha()), g.limit_weight().label()];
    row.extend(s.a.iter().map(|x| num(*x)));
    row.push(num(v));
    t.push(row);
    let mut out = vec![t];
    if !s.d1_ladder.is_empty() {
        let mut lad = Table::new("d1_ladder", &["T", "d1", "normalized", "l12", "abs_gap"]);
        let gamma = model.alpha() * s.m as f64;
        for &tt in &s.d1_ladder {
            // The constant is taken at a_l = T_l / max T, so extents follow a.
            let amax = s.a.iter().cloned().fold(0.0, f64::max);
            let ext: Vec<f64> = s.a.iter().map(|a| tt * a / amax).collect();
            let c = MsdConfig::new(model.clone(), s.m, g.clone(), ext)?;
            let d1 = d1_term(&c)?;
            let lt = model.slowly_varying().eval(tt)?;
            let norm = factorial(s.m) * tt.powf(2.0 * n as f64 - gamma) * lt.powi(s.m as i32) * g.diagonal(tt).powi(2);
            let x = d1 / norm;
            let lv = v * amax.powf(2.0 * n as f64 - gamma);
            lad.push(vec![num(tt), num(d1), num(x), num(lv), num((x - lv).abs())]);
        }
        out.push(lad);
    }
    Ok(out)
}

pub(crate) fn kernel_check(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let k = cfg.kernel.as_ref().ok_or_else(|| missing("kernel"))?;
    let dom = cfg.domain()?;
    let n = dom.n();
    let mut header = vec!["index".to_string()];
    header.extend((1..=n).map(|l| format!("x_{l}")));
    header.extend(
        ["product_re", "product_im", "numeric_re", "numeric_im", "discrepancy", "error_estimate"].map(String::from),
    );
    let mut t = Table::with_header("kernel", header);
    let mut rng = stream(cfg.seed, 0);
    for i in 0..k.points {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-k.range..k.range)).collect();
        let p = kernel_k_rect(&x, &dom);
        let (q, err) = kernel_k_numeric(&x, &dom, k.quad_points)?;
        let mut row = vec![i.to_string()];
        row.extend(x.iter().map(|v| num(*v)));
        row.extend([p.re, p.im, q.re, q.im, (p - q).norm(), err].map(num));
        t.push(row);
    }
    let zero = vec![0.0; n];
    let mut origin = Table::new("origin", &["volume", "product", "numeric", "abs_error"]);
    let (q0, _) = kernel_k_numeric(&zero, &dom, k.quad_points)?;
    let p0 = kernel_k_rect(&zero, &dom);
    origin.push(vec![num(dom.volume()), num(p0.re), num(q0.re), num((p0 - q0).norm().max((p0.re - dom.volume()).abs()))]);
    let mut out = vec![t, origin];
    if let Some(l) = &cfg.lemma1 {
        let vals = lemma1_integral(n, l.kappa, &l.tau, &dom, &l.r_ladder)?;
        let mut tab = Table::new("lemma1", &["R", "value", "increment", "shrink_factor"]);
        for (i, (&r, &v)) in l.r_ladder.iter().zip(&vals).enumerate() {
            let inc = if i > 0 { v - vals[i - 1] } else { f64::NAN };
            let prev = if i > 1 { vals[i - 1] - vals[i - 2] } else { f64::NAN };
            let shrink = if i > 1 { prev / inc } else { f64::NAN };
            tab.push(vec![num(r), num(v), num(inc), num(shrink)]);
        }
        out.push(tab);
    }
    Ok(out)
}

fn discretization(n: usize, cutoff: Option<f64>, cells: Option<usize>) -> Result<SpectralDiscretization> {
    let d = default_discretization(n)?;
    SpectralDiscretization::new(n, cutoff.unwrap_or(d.cutoff), cells.unwrap_or(d.cells_per_axis))
}

pub(crate) fn limit_sample(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let s = cfg.limit.as_ref().ok_or_else(|| missing("limit"))?;
    let model = cfg.model()?;
    let dom = cfg.domain()?;
    let (n, alpha) = (model.n(), model.alpha());
    let mut samples = Table::new("samples", &["value"]);
    let variance = match s.kappa {
        1 => {
            let quad = SpectralQuad { radius: s.radius, ..SpectralQuad::default() };
            let spectral = limit_variance_k1(n, alpha, &dom, &quad)?;
            let direct = limit_variance_k1_direct(n, alpha, &dom, QuadSpec { points_per_unit: 12, subdivision_depth: 4 })?;
            let set = sample_limit_k1(n, alpha, &dom, s.nsamples, cfg.seed)?;
            let mut t = Table::new(
                "variance",
                &["n", "alpha", "spectral", "direct", "rel_diff", "sample_mean", "sample_var"],
            );
            t.push(vec![
                n.to_string(),
                num(alpha),
                num(spectral),
                num(direct),
                num((spectral - direct).abs() / direct),
                num(stats::mean(&set.values)),
                num(stats::variance(&set.values)),
            ]);
            set.values.iter().for_each(|v| samples.push(vec![num(*v)]));
            t
        }
        2 => {
            let disc = discretization(n, Some(s.cutoff), s.cells)?;
            let smp = RosenblattSampler::new(n, alpha, &dom, &disc)?;
            let set = smp.sample(s.nsamples, cfg.seed)?;
            let c1 = c1_constant(n, alpha)?;
            let target = 2.0 * c1 * c1 * lemma1_integral(n, 2, &[alpha, alpha], &dom, &[disc.cutoff])?[0];
            let mut t = Table::new(
                "variance",
                &[
                    "n",
                    "alpha",
                    "eigen_variance",
                    "lemma1_variance",
                    "rel_diff",
                    "third_moment",
                    "sample_mean",
                    "sample_var",
                    "sample_m3",
                ],
            );
            t.push(vec![
                n.to_string(),
                num(alpha),
                num(smp.variance()),
                num(target),
                num((smp.variance() - target).abs() / target),
                num(smp.third_moment()),
                num(stats::mean(&set.values)),
                num(stats::variance(&set.values)),
                num(stats::central_moment(&set.values, 3)),
            ]);
            set.values.iter().for_each(|v| samples.push(vec![num(*v)]));
            t
        }
        k => return Err(Error::Input(format!("limit.kappa must be 1 or 2, got {k}"))),
    };
    Ok(vec![variance, samples])
}

pub(crate) fn study(cfg: &ExperimentConfig, demo: bool) -> Result<Vec<Table>> {
    let s = cfg.study.as_ref().ok_or_else(|| missing("study"))?;
    let model = cfg.model()?;
    let dom = cfg.domain()?;
    let kind = if demo { StudyKind::Theorem1Demo } else { s.target.ok_or_else(|| missing("study.target"))? };
    let mut opts = StudyOptions { limit_samples: s.limit_samples, q: s.q, ..StudyOptions::default() };
    if let Some(k) = s.kappa {
        opts.kappa = k;
    }
    if let Some(g) = &s.test_function {
        opts.test_function = g.clone();
    }
    if kind == StudyKind::K2Rosenblatt {
        opts.discretization = Some(discretization(model.n(), s.cutoff, s.cells)?);
    }
    let rows = convergence_study(kind, &model, &dom, &s.t_ladder, s.reps, cfg.seed, &opts)?;
    let mut t = if demo {
        Table::new(
            "study",
            &["T", "reps", "ks", "ks_standardized", "max_abs_diff", "max_abs_value", "mean", "var", "skew", "seed"],
        )
    } else {
        Table::new("study", &["T", "reps", "ks", "mean", "var", "skew", "seed"])
    };
    for r in rows {
        if demo {
            let o = |x: Option<f64>| x.map_or(String::new(), num);
            t.push(vec![
                num(r.t),
                r.reps.to_string(),
                num(r.ks),
                o(r.ks_standardized),
                o(r.max_abs_diff),
                o(r.max_abs_value),
                num(r.mean),
                num(r.var),
                num(r.skew),
                r.seed.to_string(),
            ]);
        } else {
            t.push(vec![num(r.t), r.reps.to_string(), num(r.ks), num(r.mean), num(r.var), num(r.skew), r.seed.to_string()]);
        }
    }
    Ok(vec![t])
}
