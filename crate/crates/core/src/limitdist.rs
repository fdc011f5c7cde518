//! Limit objects of the non-central limit theorem on rectangles: the kernel
//! `K_Delta`, the truncated spectral integrals controlling its moments, the
//! Gaussian (rank 1) and Rosenblatt-type (rank 2) limits, and the finite-`T`
//! convergence studies that compare simulated functionals with them.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covmodels::{c1_constant, CovarianceModel, SlowlyVarying, SpectralModel};
use crate::error::{Error, Result};
use crate::fieldsim::{ExactSampler, FieldSample, GridSpec, SimulationMethod, SpectralDiscretization};
use crate::functionals::{theorem1_pair, WeightFunction};
use crate::hermite::{hermite_unchecked, TestFunction};
use crate::msd::{l12_constant, QuadSpec};
use crate::quad::{radial_graded, GaussLegendre, RdSequence};
use crate::rng::{derive_seed, stream};
use crate::special::sphere_area;
use crate::stats;

const CHUNK: usize = 4096;

/// Rectangle `prod_l (a_l, b_l)` with `a_l < 0 < b_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RectDomain {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = Self { a, b };
        d.validate()?;
        Ok(d)
    }

    /// `(-1, 1)^n`.
    pub fn symmetric(n: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; n], vec![half; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::Input("rectangle needs matching, nonempty a and b".into()));
        }
        if self.a.len() > 3 {
            return Err(Error::UnsupportedDimension(self.a.len()));
        }
        for (l, (&a, &b)) in self.a.iter().zip(&self.b).enumerate() {
            if !(a < 0.0 && 0.0 < b && a.is_finite() && b.is_finite()) {
                return Err(Error::Domain(format!("rectangle must satisfy a_l < 0 < b_l, axis {l} has a = {a}, b = {b}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn dilate(&self, s: f64) -> Self {
        Self { a: self.a.iter().map(|x| x * s).collect(), b: self.b.iter().map(|x| x * s).collect() }
    }

    fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `K_Delta(x) = int_Delta e^{i<u,x>} du = prod_j (e^{i b_j x_j} - e^{i a_j x_j}) / (i x_j)`.
pub fn kernel_k_rect(x: &[f64], dom: &RectDomain) -> Complex64 {
    let mut k = Complex64::new(1.0, 0.0);
    for ((&xj, &a), &b) in x.iter().zip(&dom.a).zip(&dom.b) {
        let w = b - a;
        k *= Complex64::from_polar(w * sinc(0.5 * w * xj), 0.5 * (a + b) * xj);
    }
    k
}

/// `|K_Delta(x)|^2`.
fn kernel_sq(x: &[f64], widths: &[f64]) -> f64 {
    x.iter().zip(widths).map(|(&xj, &w)| (w * sinc(0.5 * w * xj)).powi(2)).product()
}

/// Tensor Gauss-Legendre evaluation of `int_Delta e^{i<u,x>} du` with panels
/// no wider than one radian of phase, `p` and `2p` points per panel. Returns
/// the `2p` value and the difference as an error estimate. The exponential
/// factorizes, so the tensor sum is accumulated axis by axis.
pub fn kernel_k_numeric(x: &[f64], dom: &RectDomain, p: usize) -> Result<(Complex64, f64)> {
    dom.validate()?;
    if x.len() != dom.n() {
        return Err(Error::Input("point and rectangle dimensions differ".into()));
    }
    if p < 2 {
        return Err(Error::Input("need at least 2 points per panel".into()));
    }
    let eval = |pp: usize| {
        let gl = GaussLegendre::new(pp);
        let mut k = Complex64::new(1.0, 0.0);
        for ((&xj, &a), &b) in x.iter().zip(&dom.a).zip(&dom.b) {
            let panels = ((b - a) * xj.abs()).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..panels {
                let lo = a + i as f64 * h;
                for (u, w) in gl.mapped(lo, lo + h) {
                    s += w * Complex64::from_polar(1.0, u * xj);
                }
            }
            k *= s;
        }
        k
    };
    let coarse = eval(p);
    let fine = eval(2 * p);
    let err = (fine - coarse).norm();
    if !(fine.re.is_finite() && fine.im.is_finite()) {
        return Err(Error::Budget("kernel quadrature produced a non-finite value".into()));
    }
    Ok((fine, err))
}

/// Numerical options for the spectral integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralQuad {
    /// Gauss-Legendre points per panel.
    pub points: usize,
    /// Truncation radius for the limit variance.
    pub radius: f64,
    /// Points of the quasi-random rule, used where no deterministic rule applies.
    pub qmc_points: usize,
    pub seed: u64,
}

impl Default for SpectralQuad {
    fn default() -> Self {
        Self { points: 16, radius: 64.0, qmc_points: 1 << 20, seed: 7 }
    }
}

/// Truncated values of
/// `int_{|lambda_i| <= R} |K(lambda_1 + ... + lambda_k)|^2 prod_i |lambda_i|^{-(n - tau_i)} dlambda`
/// along the ladder of radii.
pub fn lemma1_integral(n: usize, kappa: usize, tau: &[f64], dom: &RectDomain, r_ladder: &[f64]) -> Result<Vec<f64>> {
    lemma1_integral_with(n, kappa, tau, dom, r_ladder, &SpectralQuad::default())
}

pub fn lemma1_integral_with(
    n: usize,
    kappa: usize,
    tau: &[f64],
    dom: &RectDomain,
    r_ladder: &[f64],
    quad: &SpectralQuad,
) -> Result<Vec<f64>> {
    dom.validate()?;
    if dom.n() != n {
        return Err(Error::Input("rectangle dimension differs from n".into()));
    }
    if kappa == 0 || tau.len() != kappa {
        return Err(Error::Input(format!("need kappa >= 1 exponents tau, got kappa = {kappa}, {} values", tau.len())));
    }
    if tau.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("exponents tau_i must be positive".into()));
    }
    let sum: f64 = tau.iter().sum();
    if sum >= n as f64 {
        return Err(Error::Divergence(format!("sum of tau = {sum} must be below n = {n}")));
    }
    if r_ladder.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Input("radii must be positive".into()));
    }
    match (kappa, n) {
        (1, 1) | (1, 2) => Ok(radial_ladder(tau[0], dom, r_ladder, quad.points)),
        (2, 1) => Ok(r_ladder.iter().map(|&r| convolution_k2(tau, dom, r, quad.points)).collect()),
        _ => Ok(r_ladder.iter().map(|&r| qmc_lemma1(n, tau, dom, r, quad)).collect()),
    }
}

/// Spherical average of `|K|^2` at radius `r` (times the sphere area), n <= 2.
fn angular(r: f64, widths: &[f64], gl: &GaussLegendre) -> f64 {
    if widths.len() == 1 {
        return 2.0 * kernel_sq(&[r], widths);
    }
    let wmax = widths.iter().cloned().fold(0.0, f64::max);
    let quarter = std::f64::consts::FRAC_PI_2;
    let panels = ((quarter * r * wmax).ceil() as usize).max(8);
    let h = quarter / panels as f64;
    let mut s = 0.0;
    for i in 0..panels {
        for (th, w) in gl.mapped(i as f64 * h, (i + 1) as f64 * h) {
            let (sn, cs) = th.sin_cos();
            s += w * kernel_sq(&[r * cs, r * sn], widths);
        }
    }
    4.0 * s
}

/// `int_0^R r^{tau-1} A(r) dr` at every ladder radius in one pass.
fn radial_ladder(tau: f64, dom: &RectDomain, r_ladder: &[f64], p: usize) -> Vec<f64> {
    let widths = dom.widths();
    let gl = GaussLegendre::new(p);
    let wmax = dom.max_width();
    let r0 = (1.0 / wmax).min(r_ladder.iter().cloned().fold(f64::INFINITY, f64::min));
    let head = radial_graded(r0, tau, 40, &gl, |s| angular(s, &widths, &gl));
    let rmax = r_ladder.iter().cloned().fold(0.0, f64::max);
    let step = 1.0 / wmax;
    let mut breaks = vec![r0];
    let mut x = r0;
    while x < rmax {
        x = (x + step).min(rmax);
        breaks.push(x);
    }
    breaks.extend(r_ladder.iter().copied().filter(|&r| r > r0));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let panel_vals: Vec<f64> = breaks
        .par_windows(2)
        .map(|w| gl.mapped(w[0], w[1]).map(|(r, wt)| wt * r.powf(tau - 1.0) * angular(r, &widths, &gl)).sum())
        .collect();
    r_ladder
        .iter()
        .map(|&r| {
            if r <= r0 {
                return radial_graded(r, tau, 40, &gl, |s| angular(s, &widths, &gl));
            }
            head + breaks.windows(2).zip(&panel_vals).filter(|(w, _)| w[1] <= r + 1e-12).map(|(_, v)| v).sum::<f64>()
        })
        .collect()
}

/// `int_a^b |u|^{t1-1} |s-u|^{t2-1} du` with `a <= b`, singular points at 0 and s.
fn singular_pair(a: f64, b: f64, s: f64, t1: f64, t2: f64, gl: &GaussLegendre) -> f64 {
    let mut pts = vec![a, b];
    for c in [0.0, s] {
        if c > a && c < b {
            pts.push(c);
        }
    }
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let f = |u: f64| u.abs().powf(t1 - 1.0) * (s - u).abs().powf(t2 - 1.0);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        // Each half has at most one singular endpoint; grade toward it.
        for (end, dir) in [(lo, 1.0), (hi, -1.0)] {
            let e = (mid - lo).abs();
            if e <= 0.0 {
                continue;
            }
            // The singular factor at `end` is |u - end|^{expo-1} = x^{expo-1};
            // only the other factor is evaluated, so rounding of `end + x`
            // never lands on a singular point.
            if end == 0.0 {
                total += radial_graded(e, t1, 40, gl, |x| (s - dir * x).abs().powf(t2 - 1.0));
            } else if end == s {
                total += radial_graded(e, t2, 40, gl, |x| (s + dir * x).abs().powf(t1 - 1.0));
            } else {
                total += radial_graded(e, 1.0, 40, gl, |x| f(end + dir * x));
            }
        }
    }
    total
}

/// Rank-2 integral for n = 1 through `s = lambda_1 + lambda_2`:
/// `int |K(s)|^2 phi_R(s) ds` with the truncated convolution `phi_R`.
fn convolution_k2(tau: &[f64], dom: &RectDomain, r: f64, p: usize) -> f64 {
    let (t1, t2) = (tau[0], tau[1]);
    let widths = dom.widths();
    let gl = GaussLegendre::new(p);
    let phi = |s: f64| singular_pair((s - r).max(-r), r.min(s + r), s, t1, t2, &gl);
    let beta = t1 + t2;
    let s0 = (1.0 / widths[0]).min(r);
    // phi(s) ~ s^{beta-1} near 0; phi and |K|^2 are even in s.
    let head = radial_graded(s0, beta, 30, &gl, |s| kernel_sq(&[s], &widths) * phi(s) / s.powf(beta - 1.0));
    let mut breaks = vec![s0];
    let step = 1.0 / widths[0];
    let mut x = s0;
    while x < 2.0 * r {
        x = (x + step).min(2.0 * r);
        breaks.push(x);
    }
    if r > s0 {
        breaks.push(r);
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let body: f64 = breaks
        .par_windows(2)
        .map(|w| gl.mapped(w[0], w[1]).map(|(s, wt)| wt * kernel_sq(&[s], &widths) * phi(s)).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    2.0 * (head + body)
}

/// Randomly shifted rank-1 lattice rule with radial importance sampling:
/// `|lambda_i| = R U^{1/tau_i}` makes `|lambda|^{tau-n} dlambda` uniform.
fn qmc_lemma1(n: usize, tau: &[f64], dom: &RectDomain, r: f64, quad: &SpectralQuad) -> f64 {
    let kappa = tau.len();
    let per = n.max(2);
    let dim = kappa * per;
    let widths = dom.widths();
    let weight: f64 = tau.iter().map(|&t| r.powf(t) / t * sphere_area(n)).product();
    let shifts = 16usize;
    let pts = (quad.qmc_points / shifts).max(1);
    let est: Vec<f64> = (0..shifts)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(quad.seed, k as u64);
            let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let seq = RdSequence::new(dim, shift);
            let mut u = vec![0.0; dim];
            let mut lam = vec![0.0; n];
            let mut acc = 0.0;
            for i in 0..pts {
                seq.point(i as u64, &mut u);
                lam.iter_mut().for_each(|v| *v = 0.0);
                for (j, &t) in tau.iter().enumerate() {
                    let v = &u[j * per..(j + 1) * per];
                    let rad = r * v[0].powf(1.0 / t);
                    match n {
                        1 => lam[0] += if v[1] < 0.5 { rad } else { -rad },
                        2 => {
                            let th = std::f64::consts::TAU * v[1];
                            lam[0] += rad * th.cos();
                            lam[1] += rad * th.sin();
                        }
                        _ => {
                            let z = 2.0 * v[1] - 1.0;
                            let ph = std::f64::consts::TAU * v[2];
                            let rho = (1.0 - z * z).max(0.0).sqrt();
                            lam[0] += rad * rho * ph.cos();
                            lam[1] += rad * rho * ph.sin();
                            lam[2] += rad * z;
                        }
                    }
                }
                acc += kernel_sq(&lam, &widths);
            }
            weight * acc / pts as f64
        })
        .collect();
    stats::mean(&est)
}

/// Variance of the rank-1 limit, `c_1(n, alpha) int |K(lambda)|^2 |lambda|^{alpha-n} dlambda`,
/// from the truncated integral at `R/2` and `R` and Richardson extrapolation of
/// the `R^{alpha-n-1}` tail.
pub fn limit_variance_k1(n: usize, alpha: f64, dom: &RectDomain, quad: &SpectralQuad) -> Result<f64> {
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::Divergence(format!("rank-1 limit variance needs 0 < alpha < n, got alpha = {alpha}, n = {n}")));
    }
    let c1 = c1_constant(n, alpha)?;
    let r = quad.radius;
    let v = lemma1_integral_with(n, 1, &[alpha], dom, &[0.5 * r, r], quad)?;
    let q = 2f64.powf(n as f64 + 1.0 - alpha);
    let extrapolated = v[1] + (v[1] - v[0]) / (q - 1.0);
    Ok(c1 * extrapolated)
}

/// Direct-space counterpart `int_Delta int_Delta |x - y|^{-alpha} dx dy`.
pub fn limit_variance_k1_direct(n: usize, alpha: f64, dom: &RectDomain, quad: QuadSpec) -> Result<f64> {
    dom.validate()?;
    if dom.n() != n {
        return Err(Error::Input("rectangle dimension differs from n".into()));
    }
    let w = dom.widths();
    let s = dom.max_width();
    let a: Vec<f64> = w.iter().map(|x| x / s).collect();
    let v = l12_constant(n, 1, alpha, &WeightFunction::constant(n, 1.0), &a, quad)?;
    Ok(s.powf(2.0 * n as f64 - alpha) * v)
}

/// Finite sample with its origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub generator: String,
    pub seed: u64,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, generator: impl Into<String>, seed: u64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("sample values must be finite".into()));
        }
        Ok(Self { values, generator: generator.into(), seed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("value\n");
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }
}

/// Draws `f(rng)` for `count` samples in fixed-size chunks, one stream per chunk.
fn chunked<F: Fn(&mut crate::rng::StreamRng) -> f64 + Sync>(count: usize, seed: u64, f: F) -> Vec<f64> {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Draws from the Gaussian rank-1 limit.
pub fn sample_limit_k1(n: usize, alpha: f64, dom: &RectDomain, nsamples: usize, seed: u64) -> Result<SampleSet> {
    let var = limit_variance_k1(n, alpha, dom, &SpectralQuad::default())?;
    let sd = var.sqrt();
    let values = chunked(nsamples, seed, |rng| sd * rng.sample::<f64, _>(StandardNormal));
    SampleSet::new(values, format!("k1-gaussian(var={var})"), seed)
}

/// Default spectral discretization for the rank-2 sampler.
pub fn default_discretization(n: usize) -> Result<SpectralDiscretization> {
    let cells = match n {
        1 => 128,
        2 => 64,
        _ => 16,
    };
    SpectralDiscretization::new(n, 40.0, cells)
}

/// Eigen-form of the discretized double integral: `sum_k mu_k (Z_k^2 - 1)`.
#[derive(Debug, Clone)]
pub struct RosenblattSampler {
    pub eigenvalues: Vec<f64>,
}

impl RosenblattSampler {
    pub fn new(n: usize, alpha: f64, dom: &RectDomain, disc: &SpectralDiscretization) -> Result<Self> {
        dom.validate()?;
        if dom.n() != n || disc.n != n {
            return Err(Error::Input("rectangle, discretization and n must agree".into()));
        }
        if !(alpha > 0.0 && 2.0 * alpha < n as f64) {
            return Err(Error::Divergence(format!("rank-2 limit needs 0 < alpha < n/2, got alpha = {alpha}, n = {n}")));
        }
        let s = SpectralModel::new(n, alpha, SlowlyVarying::Constant { c: 1.0 })?;
        let amp: Vec<f64> = disc.masses(&s)?.into_iter().map(f64::sqrt).collect();
        let h = disc.len();
        let mut m = DMatrix::<f64>::zeros(2 * h, 2 * h);
        let mut sum = vec![0.0; n];
        let mut diff = vec![0.0; n];
        for c in 0..h {
            for d in c..h {
                for l in 0..n {
                    sum[l] = disc.centers[c][l] + disc.centers[d][l];
                    diff[l] = disc.centers[c][l] - disc.centers[d][l];
                }
                let aa = amp[c] * amp[d];
                let p = kernel_k_rect(&sum, dom) * aa;
                let q = kernel_k_rect(&diff, dom) * aa;
                m[(c, d)] = p.re + q.re;
                m[(d, c)] = p.re + q.re;
                m[(h + c, h + d)] = q.re - p.re;
                m[(h + d, h + c)] = q.re - p.re;
                // N(d, c) = conj N(c, d) and P is symmetric.
                m[(c, h + d)] = q.im - p.im;
                m[(h + d, c)] = q.im - p.im;
                m[(d, h + c)] = -q.im - p.im;
                m[(h + c, d)] = -q.im - p.im;
            }
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearAlgebra("non-finite entries in the rank-2 kernel matrix".into()));
        }
        let eig = SymmetricEigen::try_new(m, 1e-14, 10_000)
            .ok_or_else(|| Error::LinearAlgebra("symmetric eigen-decomposition did not converge".into()))?;
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Ok(Self { eigenvalues })
    }

    /// `2 sum mu_k^2`.
    pub fn variance(&self) -> f64 {
        2.0 * self.eigenvalues.iter().map(|m| m * m).sum::<f64>()
    }

    /// `8 sum mu_k^3`.
    pub fn third_moment(&self) -> f64 {
        8.0 * self.eigenvalues.iter().map(|m| m * m * m).sum::<f64>()
    }

    pub fn sample(&self, nsamples: usize, seed: u64) -> Result<SampleSet> {
        let top = self.eigenvalues.first().map_or(0.0, |m| m.abs());
        let mu: Vec<f64> = self.eigenvalues.iter().copied().filter(|m| m.abs() > 1e-15 * top).collect();
        let values = chunked(nsamples, seed, |rng| {
            mu.iter()
                .map(|&m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m * (z * z - 1.0)
                })
                .sum()
        });
        SampleSet::new(values, "k2-eigenform", seed)
    }
}

/// Draws from the discretized rank-2 limit.
pub fn sample_limit_k2(
    n: usize,
    alpha: f64,
    dom: &RectDomain,
    disc: &SpectralDiscretization,
    nsamples: usize,
    seed: u64,
) -> Result<SampleSet> {
    RosenblattSampler::new(n, alpha, dom, disc)?.sample(nsamples, seed)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(s1: &SampleSet, s2: &SampleSet) -> Result<f64> {
    ks_values(&s1.values, &s2.values)
}

pub fn ks_values(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Input("KS distance needs two nonempty samples".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(|p, q| p.total_cmp(q));
    b.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Which limit a convergence study targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    K1Gaussian,
    K2Rosenblatt,
    Theorem1Demo,
}

/// Extra knobs of a convergence study.
#[derive(Debug, Clone)]
pub struct StudyOptions {
    /// Size of the limit sample.
    pub limit_samples: usize,
    /// Test function of the reduction demo.
    pub test_function: TestFunction,
    /// Hermite rank of `test_function`.
    pub kappa: usize,
    /// Cells per unit length in the reduction demo.
    pub q: usize,
    pub discretization: Option<SpectralDiscretization>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            limit_samples: 20_000,
            test_function: TestFunction::new(crate::hermite::TestFamily::Monomial { p: 2 }),
            kappa: 2,
            q: 2,
            discretization: None,
        }
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub t: f64,
    pub reps: usize,
    /// KS distance to the reference sample.
    pub ks: f64,
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
    pub seed: u64,
    /// Reduction demo only: KS after standardizing both samples by their
    /// sample standard deviations.
    pub ks_standardized: Option<f64>,
    /// Reduction demo only: largest realization-wise `|K_r - K_{r,kappa}|`.
    pub max_abs_diff: Option<f64>,
    /// Reduction demo only: largest `|K_r|`.
    pub max_abs_value: Option<f64>,
}

fn moments(x: &[f64]) -> (f64, f64, f64) {
    if x.len() < 3 {
        return (stats::mean(x), f64::NAN, f64::NAN);
    }
    (stats::mean(x), stats::variance(x), stats::skewness(x))
}

/// Normalized lattice sums `sum_{i in T Delta} H_kappa(xi(i)) / (T^{n - kappa alpha/2} L^{kappa/2}(T))`
/// for the two limit studies, or the integral pair of the reduction demo,
/// compared in distribution along the ladder of `T`.
pub fn convergence_study(
    kind: StudyKind,
    model: &CovarianceModel,
    dom: &RectDomain,
    t_ladder: &[f64],
    reps: usize,
    seed: u64,
    opts: &StudyOptions,
) -> Result<Vec<StudyRow>> {
    dom.validate()?;
    let n = model.n();
    if dom.n() != n {
        return Err(Error::Input("rectangle and model dimensions differ".into()));
    }
    let alpha = model.alpha();
    let kappa = match kind {
        StudyKind::K1Gaussian => 1,
        StudyKind::K2Rosenblatt => 2,
        StudyKind::Theorem1Demo => opts.kappa,
    };
    if alpha * kappa as f64 >= n as f64 {
        return Err(Error::LongRangeViolation { product: alpha * kappa as f64, n });
    }
    if t_ladder.iter().any(|&t| !(t >= 1.0 && t.is_finite())) {
        return Err(Error::Input("ladder values T must be at least 1".into()));
    }
    if reps == 0 {
        return Ok(Vec::new());
    }
    let limit = match kind {
        StudyKind::K1Gaussian => Some(sample_limit_k1(n, alpha, dom, opts.limit_samples, derive_seed(seed, u64::MAX))?),
        StudyKind::K2Rosenblatt => {
            let disc = match &opts.discretization {
                Some(d) => d.clone(),
                None => default_discretization(n)?,
            };
            Some(sample_limit_k2(n, alpha, dom, &disc, opts.limit_samples, derive_seed(seed, u64::MAX))?)
        }
        StudyKind::Theorem1Demo => None,
    };
    let mut rows = Vec::with_capacity(t_ladder.len());
    for (k, &t) in t_ladder.iter().enumerate() {
        let tseed = derive_seed(seed, k as u64);
        let norm = t.powf(n as f64 - kappa as f64 * alpha / 2.0)
            * model.slowly_varying().eval(t)?.powf(kappa as f64 / 2.0);
        match kind {
            StudyKind::K1Gaussian | StudyKind::K2Rosenblatt => {
                let points = dilated_lattice(dom, t)?;
                let sampler = ExactSampler::new(model, &points)?;
                let values: Vec<f64> = (0..reps)
                    .into_par_iter()
                    .map(|r| {
                        let xi = sampler.sample(tseed, r as u64);
                        xi.iter().map(|&v| hermite_unchecked(kappa, v)).sum::<f64>() / norm
                    })
                    .collect();
                let ks = ks_values(&values, &limit.as_ref().expect("limit sample").values)?;
                let (mean, var, skew) = moments(&values);
                rows.push(StudyRow {
                    t,
                    reps,
                    ks,
                    mean,
                    var,
                    skew,
                    seed: tseed,
                    ks_standardized: None,
                    max_abs_diff: None,
                    max_abs_value: None,
                });
            }
            StudyKind::Theorem1Demo => {
                // Stationarity: the dilated rectangle is shifted to [0, T (b - a)].
                let ext: Vec<f64> = dom.widths().iter().map(|w| w * t).collect();
                let counts: Vec<usize> = ext
                    .iter()
                    .map(|&e| {
                        let c = e * opts.q as f64;
                        if (c - c.round()).abs() > 1e-9 {
                            Err(Error::Input(format!("T (b - a) = {e} is not a multiple of 1/q")))
                        } else {
                            Ok(c.round() as usize)
                        }
                    })
                    .collect::<Result<_>>()?;
                let h = 1.0 / opts.q as f64;
                let grid = GridSpec::new(counts, vec![h; n], vec![0.5 * h; n])?;
                let sampler = ExactSampler::new(model, &grid.points())?;
                let pairs: Vec<(f64, f64)> = (0..reps)
                    .into_par_iter()
                    .map(|r| {
                        let field = FieldSample {
                            grid: grid.clone(),
                            values: sampler.sample(tseed, r as u64),
                            method: SimulationMethod::ExactFactorization,
                            seed: tseed,
                            model: String::new(),
                        };
                        theorem1_pair(&opts.test_function, kappa, &field, &ext, opts.q)
                    })
                    .collect::<Result<_>>()?;
                let kr: Vec<f64> = pairs.iter().map(|p| p.0 / norm).collect();
                let krk: Vec<f64> = pairs.iter().map(|p| p.1 / norm).collect();
                let ks = ks_values(&kr, &krk)?;
                let standardize = |x: &[f64]| {
                    let sd = stats::variance(x).sqrt();
                    x.iter().map(|v| v / sd).collect::<Vec<_>>()
                };
                let ks_std = if reps >= 2 { Some(ks_values(&standardize(&kr), &standardize(&krk))?) } else { None };
                let diff = pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max);
                let big = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
                let (mean, var, skew) = moments(&kr);
                rows.push(StudyRow {
                    t,
                    reps,
                    ks,
                    mean,
                    var,
                    skew,
                    seed: tseed,
                    ks_standardized: ks_std,
                    max_abs_diff: Some(diff),
                    max_abs_value: Some(big),
                });
            }
        }
    }
    Ok(rows)
}

/// Integer points `i` with `a_l T <= i_l <= b_l T`.
pub fn dilated_lattice(dom: &RectDomain, t: f64) -> Result<Vec<Vec<f64>>> {
    let ranges: Vec<(i64, i64)> =
        dom.a.iter().zip(&dom.b).map(|(&a, &b)| ((a * t - 1e-9).ceil() as i64, (b * t + 1e-9).floor() as i64)).collect();
    let counts: Vec<usize> = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect();
    let grid = GridSpec::new(counts, vec![1.0; dom.n()], ranges.iter().map(|r| r.0 as f64).collect())?;
    Ok(grid.points())
}
