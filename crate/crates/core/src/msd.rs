//! Deterministic evaluation of the mean-square gap
//! `E[(int_{[0,T]} g H_m(xi) - sum_{i} g(i) H_m(xi(i)))^2] = D1 + D2 + D3`
//! and of the limit constant of the normalized `D1`.
//!
//! Every term has the form `int K(|h|) prod_l F_l(h_l) dh` over the lag
//! `h = x - x'`, because the weights are separable: `F_l` is the overlap
//! integral of the axis weight (D1), the mixed lattice/continuum overlap (D2),
//! or the lattice autocorrelation (D3, an exact finite sum). The lag integrals
//! use composite Gauss-Legendre panels broken at every discontinuity of `F_l`
//! and refined dyadically toward `h = 0`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covmodels::{Correlation, CovarianceModel};
use crate::error::{Error, Result};
use crate::fieldsim::{ExactSampler, FieldSample, GridSpec, SimulationMethod};
use crate::functionals::{normalizer, weighted_integral_functional, weighted_sum_functional, WeightFamily, WeightFunction};
use crate::quad::{adaptive, corner_cube, normalize_breaks, uniform_breaks, GaussLegendre, RdSequence, Rule1d};
use crate::rng::stream;
use crate::special::factorial;

/// Quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadSpec {
    /// Gauss-Legendre points per unit-length panel and axis.
    pub points_per_unit: usize,
    /// Levels of dyadic refinement toward the diagonal.
    pub subdivision_depth: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { points_per_unit: 8, subdivision_depth: 4 }
    }
}

/// Inputs of a gap evaluation.
#[derive(Debug, Clone)]
pub struct MsdConfig {
    pub n: usize,
    pub m: usize,
    pub model: CovarianceModel,
    pub g: WeightFunction,
    pub t: Vec<f64>,
    pub quad: QuadSpec,
    /// Points of the quasi-random cross-check of `D1`.
    pub mc_points: usize,
}

impl MsdConfig {
    pub fn new(model: CovarianceModel, m: usize, g: WeightFunction, t: Vec<f64>) -> Result<Self> {
        let cfg = Self { n: model.n(), m, model, g, t, quad: QuadSpec::default(), mc_points: 1 << 16 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_t(&self, t: Vec<f64>) -> Self {
        Self { t, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(Error::UnsupportedDimension(self.n));
        }
        if self.model.n() != self.n || self.g.n() != self.n || self.t.len() != self.n {
            return Err(Error::Input("model, weight and extents must all have dimension n".into()));
        }
        if self.m == 0 || self.m > crate::hermite::MAX_ORDER {
            return Err(Error::Input(format!("Hermite order m must be in 1..=30, got {}", self.m)));
        }
        let product = self.model.alpha() * self.m as f64;
        if product >= self.n as f64 {
            return Err(Error::LongRangeViolation { product, n: self.n });
        }
        if self.t.iter().any(|&x| !(x >= 1.0 && x.is_finite())) {
            return Err(Error::Input("extents T_l must be finite and at least 1".into()));
        }
        if self.quad.points_per_unit < 2 {
            return Err(Error::Input("quadrature needs at least 2 points per unit".into()));
        }
        Ok(())
    }

    fn ttilde(&self) -> f64 {
        self.t.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// One evaluation of the normalized gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsdReport {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub l: String,
    pub g: String,
    pub t: Vec<f64>,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub total: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub error_estimate: f64,
    /// Total at the coarse resolution `p`.
    pub total_coarse: f64,
    pub points_per_unit: usize,
}

/// Kernel `B^m(r)`.
fn power_kernel<'a>(corr: &'a (impl Correlation + ?Sized), m: usize) -> impl Fn(f64) -> f64 + Sync + 'a {
    move |r| corr.correlation(r).powi(m as i32)
}

/// `int_{max(0,h)}^{min(T,T+h)} f(x) f(x - h) dx`.
fn overlap(f: &(dyn Fn(f64) -> f64 + Sync), constant: Option<f64>, t: f64, h: f64) -> f64 {
    let lo = h.max(0.0);
    let hi = t.min(t + h);
    if hi <= lo {
        return 0.0;
    }
    if let Some(c) = constant {
        return c * c * (hi - lo);
    }
    let scale = f(t).abs().max(1.0);
    adaptive(|x| f(x) * f(x - h), lo, hi, 1e-15 * scale * scale, 1e-13, 4000)
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN)
}

/// Axis factor of `g`: constant value if the factor does not depend on `t`.
fn axis_constant(g: &WeightFunction, l: usize) -> Option<f64> {
    match g.family() {
        WeightFamily::Constant { .. } => Some(g.axis(l, 1.0)),
        WeightFamily::Power { mu } if mu[l] == 0.0 => Some(1.0),
        _ => None,
    }
}

/// Breakpoints of the lag axis `[-T, T]`: integers, the shifted points
/// `+-(T - k)`, and dyadic refinement toward 0.
fn lag_breaks(t: f64, depth: usize) -> Vec<f64> {
    let mut b = Vec::new();
    let k = t.floor() as i64;
    for i in -k..=k {
        b.push(i as f64);
        let s = t - i.unsigned_abs() as f64;
        b.push(s);
        b.push(-s);
    }
    for j in 1..=depth {
        let e = 0.5f64.powi(j as i32);
        b.push(e);
        b.push(-e);
    }
    normalize_breaks(b, -t, t, 1e-12)
}

/// `sum_w prod_l W_l K(|h|)` over a tensor grid, with the outer axis in parallel
/// and partial sums reduced in index order.
fn tensor_sum(axes: &[Rule1d], kernel: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    match axes.len() {
        1 => axes[0].nodes.iter().zip(&axes[0].weights).map(|(&x, &w)| w * kernel(x.abs())).sum(),
        2 => {
            let (a, b) = (&axes[0], &axes[1]);
            let parts: Vec<f64> = (0..a.len())
                .into_par_iter()
                .map(|i| {
                    let x2 = a.nodes[i] * a.nodes[i];
                    let inner: f64 =
                        b.nodes.iter().zip(&b.weights).map(|(&y, &w)| w * kernel((x2 + y * y).sqrt())).sum();
                    a.weights[i] * inner
                })
                .collect();
            parts.iter().sum()
        }
        3 => {
            let (a, b, c) = (&axes[0], &axes[1], &axes[2]);
            let parts: Vec<f64> = (0..a.len())
                .into_par_iter()
                .map(|i| {
                    let x2 = a.nodes[i] * a.nodes[i];
                    let mut outer = 0.0;
                    for (&y, &wy) in b.nodes.iter().zip(&b.weights) {
                        let xy2 = x2 + y * y;
                        let inner: f64 =
                            c.nodes.iter().zip(&c.weights).map(|(&z, &wz)| wz * kernel((xy2 + z * z).sqrt())).sum();
                        outer += wy * inner;
                    }
                    a.weights[i] * outer
                })
                .collect();
            parts.iter().sum()
        }
        n => unreachable!("tensor_sum called with dimension {n}"),
    }
}

/// Rule on the lag axis with weights multiplied by the axis factor.
fn factor_rule(breaks: &[f64], gl: &GaussLegendre, factor: impl Fn(f64) -> f64 + Sync) -> Rule1d {
    let base = Rule1d::from_breaks(breaks, gl);
    let weights: Vec<f64> = base.nodes.par_iter().zip(&base.weights).map(|(&x, &w)| w * factor(x)).collect();
    Rule1d { nodes: base.nodes, weights }
}

fn d1_at(cfg: &MsdConfig, kernel: &(dyn Fn(f64) -> f64 + Sync), p: usize) -> f64 {
    let gl = GaussLegendre::new(p);
    let axes: Vec<Rule1d> = (0..cfg.n)
        .map(|l| {
            let t = cfg.t[l];
            let c = axis_constant(&cfg.g, l);
            let g = cfg.g.clone();
            let f = move |x: f64| g.axis(l, x);
            factor_rule(&lag_breaks(t, cfg.quad.subdivision_depth), &gl, move |h| overlap(&f, c, t, h))
        })
        .collect();
    factorial(cfg.m) * tensor_sum(&axes, kernel)
}

/// `c_l(h) = sum_{0 <= i < floor(T)} g_l(i) g_l(i + h) 1{0 <= i + h <= T}`.
fn lattice_overlap(g: &WeightFunction, l: usize, t: f64, h: f64) -> f64 {
    let n = t.floor() as usize;
    (0..n)
        .map(|i| {
            let x = i as f64 + h;
            if (0.0..=t).contains(&x) {
                g.axis(l, i as f64) * g.axis(l, x)
            } else {
                0.0
            }
        })
        .sum()
}

fn d2_at(cfg: &MsdConfig, kernel: &(dyn Fn(f64) -> f64 + Sync), p: usize) -> f64 {
    let gl = GaussLegendre::new(p);
    let axes: Vec<Rule1d> = (0..cfg.n)
        .map(|l| {
            let t = cfg.t[l];
            let g = cfg.g.clone();
            factor_rule(&lag_breaks(t, cfg.quad.subdivision_depth), &gl, move |h| lattice_overlap(&g, l, t, h))
        })
        .collect();
    -2.0 * factorial(cfg.m) * tensor_sum(&axes, kernel)
}

fn d3_with_kernel(cfg: &MsdConfig, kernel: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    // a_l(k) = sum_i g_l(i) g_l(i + k), lags k in -(N-1)..=(N-1).
    let tables: Vec<(i64, Vec<f64>)> = (0..cfg.n)
        .map(|l| {
            let n = cfg.t[l].floor() as i64;
            let vals = (-(n - 1)..=(n - 1))
                .map(|k| {
                    (0..n)
                        .filter(|&i| i + k >= 0 && i + k < n)
                        .map(|i| cfg.g.axis(l, i as f64) * cfg.g.axis(l, (i + k) as f64))
                        .sum()
                })
                .collect();
            (n, vals)
        })
        .collect();
    let rules: Vec<Rule1d> = tables
        .iter()
        .map(|(n, vals)| Rule1d { nodes: (-(n - 1)..=(n - 1)).map(|k| k as f64).collect(), weights: vals.clone() })
        .collect();
    factorial(cfg.m) * tensor_sum(&rules, kernel)
}

/// `D1 = m! int int g(x) g(x') B^m(|x - x'|) dx dx'` over `[0,T]^{2n}`.
pub fn d1_term(cfg: &MsdConfig) -> Result<f64> {
    d1_term_with(cfg, &cfg.model)
}

pub fn d1_term_with(cfg: &MsdConfig, corr: &(impl Correlation + ?Sized)) -> Result<f64> {
    cfg.validate()?;
    let k = power_kernel(corr, cfg.m);
    finite(d1_at(cfg, &k, 2 * cfg.quad.points_per_unit), "D1")
}

/// `D2 = -2 m! int_{[0,T]} sum_i g(x) g(i) B^m(|i - x|) dx`.
pub fn d2_term(cfg: &MsdConfig) -> Result<f64> {
    d2_term_with(cfg, &cfg.model)
}

pub fn d2_term_with(cfg: &MsdConfig, corr: &(impl Correlation + ?Sized)) -> Result<f64> {
    cfg.validate()?;
    let k = power_kernel(corr, cfg.m);
    finite(d2_at(cfg, &k, 2 * cfg.quad.points_per_unit), "D2")
}

/// `D3 = m! sum_{i,i'} g(i) g(i') B^m(|i - i'|)`, exact.
pub fn d3_term(cfg: &MsdConfig) -> Result<f64> {
    d3_term_with(cfg, &cfg.model)
}

pub fn d3_term_with(cfg: &MsdConfig, corr: &(impl Correlation + ?Sized)) -> Result<f64> {
    cfg.validate()?;
    let k = power_kernel(corr, cfg.m);
    finite(d3_with_kernel(cfg, &k), "D3")
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Budget(format!("{what} quadrature produced a non-finite value")))
    }
}

/// Full report: terms at `2p`, error estimate from `p` versus `2p`.
pub fn total_gap(cfg: &MsdConfig) -> Result<MsdReport> {
    total_gap_with(cfg, &cfg.model)
}

pub fn total_gap_with(cfg: &MsdConfig, corr: &(impl Correlation + ?Sized)) -> Result<MsdReport> {
    cfg.validate()?;
    let k = power_kernel(corr, cfg.m);
    let p = cfg.quad.points_per_unit;
    let d3 = finite(d3_with_kernel(cfg, &k), "D3")?;
    let coarse = finite(d1_at(cfg, &k, p), "D1")? + finite(d2_at(cfg, &k, p), "D2")? + d3;
    let d1 = finite(d1_at(cfg, &k, 2 * p), "D1")?;
    let d2 = finite(d2_at(cfg, &k, 2 * p), "D2")?;
    let total = d1 + d2 + d3;
    let tt = cfg.ttilde();
    let d = normalizer(cfg.n, cfg.m, cfg.model.alpha(), cfg.model.slowly_varying(), &cfg.g, tt)?;
    let denominator = d * d;
    Ok(MsdReport {
        n: cfg.n,
        m: cfg.m,
        alpha: cfg.model.alpha(),
        l: cfg.model.slowly_varying().label(),
        g: cfg.g.label(),
        t: cfg.t.clone(),
        d1,
        d2,
        d3,
        total,
        denominator,
        ratio: total / denominator,
        error_estimate: (total - coarse).abs() / denominator,
        total_coarse: coarse,
        points_per_unit: p,
    })
}

/// Quasi-random estimate of `D1` directly in `2n` dimensions, with a standard
/// error from independent random shifts.
pub fn d1_term_qmc(cfg: &MsdConfig, seed: u64) -> Result<(f64, f64)> {
    cfg.validate()?;
    let shifts = 16usize;
    let per = (cfg.mc_points / shifts).max(1);
    let dim = 2 * cfg.n;
    let vol: f64 = cfg.t.iter().map(|t| t * t).product();
    let k = power_kernel(&cfg.model, cfg.m);
    let estimates: Vec<f64> = (0..shifts)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, s as u64);
            let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let seq = RdSequence::new(dim, shift);
            let mut u = vec![0.0; dim];
            let mut x = vec![0.0; cfg.n];
            let mut y = vec![0.0; cfg.n];
            let mut acc = 0.0;
            for i in 0..per {
                seq.point(i as u64, &mut u);
                for l in 0..cfg.n {
                    x[l] = u[l] * cfg.t[l];
                    y[l] = u[cfg.n + l] * cfg.t[l];
                }
                let r = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                acc += cfg.g.eval(&x) * cfg.g.eval(&y) * k(r);
            }
            factorial(cfg.m) * vol * acc / per as f64
        })
        .collect();
    Ok(crate::stats::mean_stderr(&estimates))
}

/// Monte Carlo estimate of `E[(integral - sum)^2]` from exact field samples on
/// the grid of spacing `1/(2q)`, which holds both the lattice points and the
/// midpoints of the `1/q` cells.
pub fn monte_carlo_gap(cfg: &MsdConfig, q: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    cfg.validate()?;
    let counts: Vec<usize> = cfg
        .t
        .iter()
        .map(|&t| {
            let k = t * 2.0 * q as f64;
            if (k - k.round()).abs() > 1e-9 {
                Err(Error::Input(format!("T = {t} is not a multiple of 1/(2q)")))
            } else {
                Ok(k.round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    let h = 0.5 / q as f64;
    let grid = GridSpec::new(counts, vec![h; cfg.n], vec![0.0; cfg.n])?;
    let sampler = ExactSampler::new(&cfg.model, &grid.points())?;
    let sq: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let field = FieldSample {
                grid: grid.clone(),
                values: sampler.sample(seed, r as u64),
                method: SimulationMethod::ExactFactorization,
                seed,
                model: String::new(),
            };
            let i = weighted_integral_functional(&field, &cfg.g, cfg.m, &cfg.t, q)?;
            let s = weighted_sum_functional(&field, &cfg.g, cfg.m, &cfg.t)?;
            Ok((i - s) * (i - s))
        })
        .collect::<Result<_>>()?;
    Ok(crate::stats::mean_stderr(&sq))
}

/// `l_{1,2} = int_{[0,a]} int_{[0,a]} g*(u) g*(v) |u - v|^{-alpha m} du dv`,
/// where `g*` is the scaling limit of `g`.
pub fn l12_constant(n: usize, m: usize, alpha: f64, g: &WeightFunction, a: &[f64], quad: QuadSpec) -> Result<f64> {
    let gamma = alpha * m as f64;
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if gamma >= n as f64 {
        return Err(Error::Divergence(format!("alpha * m = {gamma} must be below n = {n}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("alpha * m must be nonnegative, got {gamma}")));
    }
    if a.len() != n || g.n() != n || a.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::Input("l12 needs n limits a_l in (0, 1] and an n-dimensional weight".into()));
    }
    if quad.points_per_unit < 2 {
        return Err(Error::Input("quadrature needs at least 2 points per panel".into()));
    }
    let gs = g.limit_weight();
    let amin = a.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    let eps = amin / 8.0 * 0.5f64.powi(quad.subdivision_depth as i32);
    let gl = GaussLegendre::new(quad.points_per_unit.max(4));
    let factors: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = (0..n)
        .map(|l| {
            let gs = gs.clone();
            let al = a[l];
            let c = axis_constant(&gs, l);
            Box::new(move |h: f64| {
                let gs2 = gs.clone();
                overlap(&move |x: f64| gs2.axis(l, x), c, al, h)
            }) as Box<dyn Fn(f64) -> f64 + Sync>
        })
        .collect();
    let axes: Vec<Rule1d> = (0..n)
        .map(|l| {
            let mut b = uniform_breaks(-a[l], a[l], a[l] / 8.0);
            let mut e = eps;
            while e < a[l] / 8.0 {
                b.push(e);
                b.push(-e);
                e *= 2.0;
            }
            b.push(0.0);
            let breaks = normalize_breaks(b, -a[l], a[l], 1e-14);
            factor_rule(&breaks, &gl, &factors[l])
        })
        .collect();
    let kernel = move |r: f64| if gamma == 0.0 { 1.0 } else { r.powf(-gamma) };
    let full = tensor_sum(&axes, &kernel);
    // Replace the tensor contribution of the 2^n cells at the origin.
    let inner: Vec<Rule1d> = axes
        .iter()
        .map(|r| {
            let (nodes, weights) = r.nodes.iter().zip(&r.weights).filter(|(x, _)| x.abs() < eps).map(|(x, w)| (*x, *w)).unzip();
            Rule1d { nodes, weights }
        })
        .collect();
    let corner_tensor = tensor_sum(&inner, &kernel);
    let mut corner = 0.0;
    for orthant in 0..(1usize << n) {
        let sign: Vec<f64> = (0..n).map(|l| if orthant >> l & 1 == 1 { -1.0 } else { 1.0 }).collect();
        corner += corner_cube(n, eps, gamma, &gl, 40, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let f: f64 = (0..n).map(|l| factors[l](sign[l] * x[l])).product();
            f * kernel(r)
        });
    }
    let v = full - corner_tensor + corner;
    if !v.is_finite() {
        return Err(Error::Budget("l12 quadrature produced a non-finite value".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodels::{CovarianceFamily, SlowlyVarying};

    fn cfg(n: usize, m: usize, alpha: f64, t: f64) -> MsdConfig {
        let model = CovarianceModel::cauchy(n, alpha).unwrap();
        MsdConfig::new(model, m, WeightFunction::constant(n, 1.0), vec![t; n]).unwrap()
    }

    /// Brute-force D1 by tensor Gauss-Legendre in the raw 2n variables (n = 1).
    fn d1_raw_n1(c: &MsdConfig, corr: &dyn Fn(f64) -> f64) -> f64 {
        let gl = GaussLegendre::new(20);
        let t = c.t[0];
        let breaks: Vec<f64> = (0..=(4.0 * t) as usize).map(|k| k as f64 / 4.0).collect();
        let rule = Rule1d::from_breaks(&breaks, &gl);
        let mut s = 0.0;
        for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
            for (&y, &wy) in rule.nodes.iter().zip(&rule.weights) {
                s += wx * wy * c.g.eval(&[x]) * c.g.eval(&[y]) * corr((x - y).abs()).powi(c.m as i32);
            }
        }
        factorial(c.m) * s
    }

    #[test]
    fn degenerate_constant_correlation() {
        let one = |_r: f64| 1.0;
        let c = cfg(1, 1, 0.5, 1.0);
        assert!((d1_term_with(&c, &one).unwrap() - 1.0).abs() < 1e-13);
        let c2 = cfg(1, 1, 0.5, 2.0);
        assert!((d2_term_with(&c2, &one).unwrap() + 8.0).abs() < 1e-12);
        for t in [2.0, 3.0, 5.0] {
            let c = cfg(2, 1, 0.6, t);
            let r = total_gap_with(&c, &one).unwrap();
            let a = t * t;
            assert!((r.d1 - a * a).abs() < 1e-9 * a * a);
            assert!((r.d2 + 2.0 * a * a).abs() < 1e-9 * a * a);
            assert!((r.d3 - a * a).abs() < 1e-9 * a * a);
            assert!(r.total.abs() < 1e-9 * a * a);
        }
    }

    #[test]
    fn d3_small_cases() {
        let b = 0.37;
        let corr = move |r: f64| if r == 0.0 { 1.0 } else if (r - 1.0).abs() < 1e-12 { b } else { 0.0 };
        let c = cfg(1, 1, 0.5, 2.0);
        assert!((d3_term_with(&c, &corr).unwrap() - (2.0 + 2.0 * b)).abs() < 1e-14);
        let c = cfg(2, 1, 0.6, 4.0);
        let diag: f64 = 16.0;
        assert!(d3_term(&c).unwrap() >= diag);
    }

    #[test]
    fn d1_matches_raw_quadrature_n1() {
        for (m, alpha, t) in [(1, 0.5, 3.0), (2, 0.4, 2.5), (1, 0.8, 4.0)] {
            let mut c = cfg(1, m, alpha, t);
            c.g = WeightFunction::new(1, WeightFamily::Power { mu: vec![1.0] }).unwrap();
            let model = c.model.clone();
            let raw = d1_raw_n1(&c, &|r| model.covariance(r).unwrap());
            let lag = d1_term(&c).unwrap();
            assert!((raw - lag).abs() < 1e-10 * raw, "{raw} {lag}");
        }
    }

    #[test]
    fn m2_equals_squared_correlation() {
        let c2 = cfg(2, 2, 0.6, 5.0);
        let c1 = cfg(2, 1, 0.6, 5.0);
        let model = c2.model.clone();
        let sq = move |r: f64| model.covariance(r).unwrap().powi(2);
        let a = d1_term(&c2).unwrap();
        let b = d1_term_with(&c1, &sq).unwrap() * 2.0;
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn d2_sign_and_non_integer_t() {
        let c = cfg(2, 1, 0.6, 3.0);
        assert!(d2_term(&c).unwrap() < 0.0);
        // Non-integer T: the gap stays a nonnegative mean square.
        let c = cfg(2, 1, 0.6, 3.4);
        let r = total_gap(&c).unwrap();
        assert!(r.total >= -r.error_estimate * r.denominator);
        let c = cfg(1, 2, 0.4, 5.7);
        let r = total_gap(&c).unwrap();
        assert!(r.total > 0.0);
    }

    #[test]
    fn qmc_agrees_with_lag_form() {
        let mut c = cfg(2, 1, 0.6, 3.0);
        c.mc_points = 1 << 18;
        let (e, s) = d1_term_qmc(&c, 3).unwrap();
        let d = d1_term(&c).unwrap();
        assert!((e - d).abs() < 4.0 * s + 1e-3 * d, "{e} +- {s} vs {d}");
        let mut c3 = cfg(3, 1, 0.9, 2.0);
        c3.mc_points = 1 << 17;
        let (e, s) = d1_term_qmc(&c3, 4).unwrap();
        let d = d1_term(&c3).unwrap();
        assert!((e - d).abs() < 4.0 * s + 1e-3 * d, "{e} +- {s} vs {d}");
    }

    #[test]
    fn error_estimate_shrinks_with_resolution() {
        let mut errs = Vec::new();
        for p in [2, 4, 8] {
            let mut c = cfg(2, 1, 0.6, 6.0);
            c.quad.points_per_unit = p;
            let r = total_gap(&c).unwrap();
            errs.push(r.error_estimate);
            assert!(r.total >= -r.error_estimate * r.denominator);
        }
        for w in errs.windows(2) {
            assert!(w[1] <= 0.75 * w[0], "{errs:?}");
        }
    }

    #[test]
    fn l12_examples() {
        let q = QuadSpec { points_per_unit: 12, subdivision_depth: 4 };
        let g1 = WeightFunction::constant(1, 1.0);
        assert!((l12_constant(1, 1, 0.0, &g1, &[1.0], q).unwrap() - 1.0).abs() < 1e-13);
        let v = l12_constant(1, 1, 0.5, &g1, &[1.0], q).unwrap();
        assert!((v - 8.0 / 3.0).abs() < 1e-8, "{v}");
        for s in [0.2, 0.7, 0.9] {
            let v = l12_constant(1, 1, s, &g1, &[1.0], q).unwrap();
            let exact = 2.0 / ((1.0 - s) * (2.0 - s));
            assert!((v - exact).abs() < 1e-7 * exact, "s={s} {v} {exact}");
        }
        assert!(matches!(l12_constant(1, 2, 0.5, &g1, &[1.0], q), Err(Error::Divergence(_))));
        // Block swap symmetry: a weight and its mirror give the same value.
        let p = WeightFunction::new(2, WeightFamily::Power { mu: vec![1.0, 2.0] }).unwrap();
        let pm = WeightFunction::new(2, WeightFamily::Power { mu: vec![2.0, 1.0] }).unwrap();
        let a = l12_constant(2, 1, 0.6, &p, &[1.0, 0.5], q).unwrap();
        let b = l12_constant(2, 1, 0.6, &pm, &[0.5, 1.0], q).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn l12_n2_matches_polar_oracle() {
        // int_{[0,1]^2 x [0,1]^2} |u - v|^{-s}: lag form with (1 - |h1|)(1 - |h2|),
        // evaluated independently in polar coordinates on the first quadrant.
        let s: f64 = 1.0;
        let k = 4000;
        let mut acc = 0.0;
        for i in 0..k {
            let th = (i as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / k as f64;
            let (sn, cs) = th.sin_cos();
            let rmax = 1.0 / cs.max(sn);
            // int_0^rmax (1 - r c)(1 - r s) r^{1-s} dr, closed form in r.
            let f = |r: f64| r.powf(2.0 - s) / (2.0 - s) - (cs + sn) * r.powf(3.0 - s) / (3.0 - s) + cs * sn * r.powf(4.0 - s) / (4.0 - s);
            acc += f(rmax) * std::f64::consts::FRAC_PI_2 / k as f64;
        }
        let oracle = 4.0 * acc;
        let g = WeightFunction::constant(2, 1.0);
        let v = l12_constant(2, 1, s, &g, &[1.0, 1.0], QuadSpec { points_per_unit: 12, subdivision_depth: 4 }).unwrap();
        assert!((v - oracle).abs() < 1e-6 * oracle, "{v} {oracle}");
    }

    #[test]
    fn validation() {
        let model = CovarianceModel::cauchy(2, 1.2).unwrap();
        let r = MsdConfig::new(model, 2, WeightFunction::constant(2, 1.0), vec![4.0, 4.0]);
        assert!(matches!(r, Err(Error::LongRangeViolation { .. })));
        let model = CovarianceModel::new(1, 0.4, CovarianceFamily::PurePowerTail, SlowlyVarying::Constant { c: 1.0 }).unwrap();
        assert!(MsdConfig::new(model.clone(), 1, WeightFunction::constant(1, 1.0), vec![0.5]).is_err());
        let mut c = MsdConfig::new(model, 1, WeightFunction::constant(1, 1.0), vec![4.0]).unwrap();
        c.quad.points_per_unit = 1;
        assert!(c.validate().is_err());
    }
}
