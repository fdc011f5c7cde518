//! Quadrature building blocks: Gauss-Legendre and Gauss-Hermite rules,
//! composite panel rules, adaptive Gauss-Kronrod, graded radial rules for
//! integrable point singularities, and a rank-1 low-discrepancy sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Hermite rule for the standard normal weight `phi(x)`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton iteration on the orthonormal recurrence; weights use the
/// Christoffel formula `1 / (n psi_{n-1}(x)^2)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nf = n as f64;
        let mut weights = vec![0.0; n];
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            for _ in 0..8 {
                let (pn, pn1) = orthonormal_hermite_pair(n, *x);
                let dx = pn / (nf.sqrt() * pn1);
                *x -= dx;
                if dx.abs() < 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, pn1) = orthonormal_hermite_pair(n, *x);
            *w = 1.0 / (nf * pn1 * pn1);
        }
        // Symmetrize to remove residual asymmetry.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Returns `(psi_n(x), psi_{n-1}(x))` for the orthonormal Hermite polynomials
/// with respect to `phi`.
fn orthonormal_hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// A composite one-dimensional rule: nodes and weights over a union of panels.
#[derive(Debug, Clone, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Applies `gl` on every panel between consecutive sorted breakpoints.
    pub fn from_breaks(breaks: &[f64], gl: &GaussLegendre) -> Self {
        let mut rule = Self::default();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                for (x, wt) in gl.mapped(w[0], w[1]) {
                    rule.nodes.push(x);
                    rule.weights.push(wt);
                }
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Sorts, removes near-duplicates (within `tol`) and clips to `[lo, hi]`.
pub fn normalize_breaks(mut b: Vec<f64>, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    b.retain(|x| x.is_finite() && *x >= lo - tol && *x <= hi + tol);
    b.push(lo);
    b.push(hi);
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(b.len());
    for x in b {
        let x = x.clamp(lo, hi);
        match out.last() {
            Some(&l) if (x - l).abs() <= tol => {}
            _ => out.push(x),
        }
    }
    if let Some(l) = out.last_mut() {
        *l = hi;
    }
    out
}

/// Geometric breakpoints `c + s 2^{-k}` for `k = 0..=depth`, with `s` signed.
pub fn dyadic_points(c: f64, s: f64, depth: usize) -> Vec<f64> {
    (0..=depth).map(|k| c + s * 0.5f64.powi(k as i32)).collect()
}

/// Breakpoints splitting `[a, b]` into panels no longer than `max_width`.
pub fn uniform_breaks(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let k = ((b - a) / max_width).ceil().max(1.0) as usize;
    (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect()
}

/// Integral over `[0, eps]` of `s^{beta-1} h(s)` where `h` is smooth, by
/// geometric panels toward zero plus a power substitution on the last one.
pub fn radial_graded<F: FnMut(f64) -> f64>(
    eps: f64,
    beta: f64,
    levels: usize,
    gl: &GaussLegendre,
    mut h: F,
) -> f64 {
    let mut total = 0.0;
    let mut hi = eps;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        for (s, w) in gl.mapped(lo, hi) {
            total += w * s.powf(beta - 1.0) * h(s);
        }
        hi = lo;
    }
    // s = hi * t^{1/beta}: s^{beta-1} ds = hi^beta / beta dt.
    let scale = hi.powf(beta) / beta;
    for (t, w) in gl.mapped(0.0, 1.0) {
        let s = hi * t.powf(1.0 / beta);
        total += w * scale * h(s);
    }
    total
}

/// Integral over the cube `[0, eps]^n` of `f`, where `f(x) ~ |x|^{-gamma}`
/// near the origin with `gamma < n`, via the pyramid split by the largest
/// coordinate and a graded radial rule.
pub fn corner_cube<F: FnMut(&[f64]) -> f64>(
    n: usize,
    eps: f64,
    gamma: f64,
    gl: &GaussLegendre,
    levels: usize,
    mut f: F,
) -> f64 {
    let beta = n as f64 - gamma;
    let inner: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
    let p = inner.len();
    let m = n - 1;
    let combos = p.pow(m as u32);
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    for k in 0..n {
        // s^{n-1} Jacobian combined with the |x|^{-gamma} factor:
        // s^{n-1} f(s e) = s^{beta-1} * (s^gamma f(s e)).
        total += radial_graded(eps, beta, levels, gl, |s| {
            let mut acc = 0.0;
            for c in 0..combos {
                let mut idx = c;
                let mut w = 1.0;
                let mut j = 0;
                for (l, xl) in x.iter_mut().enumerate() {
                    if l == k {
                        *xl = s;
                    } else {
                        let (y, wy) = inner[idx % p];
                        idx /= p;
                        *xl = s * y;
                        w *= wy;
                        j += 1;
                    }
                }
                debug_assert_eq!(j, m);
                acc += w * f(&x);
            }
            acc * s.powf(gamma)
        });
    }
    total
}

const GK_XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_XK[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration on `[a, b]`.
///
/// Returns the value and an error estimate, or a quadrature failure once
/// `max_segments` bisections have not reached the tolerance.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<(f64, f64)> {
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, val: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut count = 1;
    loop {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            // Confirm against an exact re-sum before accepting.
            total = heap.iter().map(|s| s.val).sum();
            err = heap.iter().map(|s| s.err).sum();
            if err <= abs_tol.max(rel_tol * total.abs()) {
                break;
            }
        }
        if count >= max_segments {
            return Err(Error::QuadratureFailure {
                context: format!("adaptive integration on [{a}, {b}]"),
                residual: err,
            });
        }
        let s = heap.pop().expect("non-empty heap");
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Segment { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Segment { a: m, b: s.b, val: v2, err: e2 });
        count += 1;
    }
    // Re-sum to limit drift from the running updates.
    let total: f64 = heap.iter().map(|s| s.val).sum();
    let err: f64 = heap.iter().map(|s| s.err).sum();
    if !total.is_finite() {
        return Err(Error::QuadratureFailure {
            context: format!("non-finite integral on [{a}, {b}]"),
            residual: f64::INFINITY,
        });
    }
    Ok((total, err))
}

/// Rank-1 additive recurrence (generalized golden ratio) in `[0,1)^d`.
#[derive(Debug, Clone)]
pub struct RdSequence {
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize, shift: Vec<f64>) -> Self {
        assert_eq!(shift.len(), dim);
        let mut phi = 2.0f64;
        for _ in 0..60 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
        Self { alpha, shift }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn point(&self, k: u64, out: &mut [f64]) {
        for ((o, a), s) in out.iter_mut().zip(&self.alpha).zip(&self.shift) {
            let v = s + (k as f64 + 1.0) * a;
            *o = v - v.floor();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let gl = GaussLegendre::new(10);
        for d in 0..20 {
            let v = gl.integrate(0.0, 2.0, |x| x.powi(d));
            let exact = 2f64.powi(d + 1) / (d + 1) as f64;
            assert!((v - exact).abs() < 1e-12 * exact, "degree {d}");
        }
        let odd = GaussLegendre::new(7);
        assert!((odd.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(40);
        assert!((gh.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!((gh.integrate(|x| x * x) - 1.0).abs() < 1e-13);
        assert!((gh.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-12);
        assert!((gh.integrate(|x| x.powi(6)) - 15.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let (v, e) = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13, 2000).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert!(e < 1e-12);
    }

    #[test]
    fn adaptive_reports_budget() {
        let r = adaptive(|x: f64| 1.0 / x.abs().max(1e-300), -1.0, 1.0, 1e-14, 1e-14, 20);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn radial_graded_power() {
        let gl = GaussLegendre::new(10);
        // int_0^1 s^{-0.7} (1 + s) ds = 1/0.3 + 1/1.3
        let v = radial_graded(1.0, 0.3, 30, &gl, |s| 1.0 + s);
        assert!((v - (1.0 / 0.3 + 1.0 / 1.3)).abs() < 1e-10);
    }

    #[test]
    fn corner_cube_riesz() {
        let gl = GaussLegendre::new(12);
        // int_{[0,1]^2} |x|^{-1} dx = 2 asinh(1)
        let v = corner_cube(2, 1.0, 1.0, &gl, 30, |x| 1.0 / x[0].hypot(x[1]));
        assert!((v - 2.0 * 1f64.asinh()).abs() < 1e-10, "{v}");
        let c = corner_cube(3, 0.5, 0.0, &gl, 4, |_| 1.0);
        assert!((c - 0.125).abs() < 1e-13);
    }

    #[test]
    fn breaks_are_normalized() {
        let b = normalize_breaks(vec![0.5, 0.5 + 1e-15, -3.0, 2.0, 1.0], 0.0, 1.0, 1e-12);
        assert_eq!(b, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rd_sequence_equidistributes() {
        let seq = RdSequence::new(3, vec![0.1, 0.2, 0.3]);
        let mut p = [0.0; 3];
        let mut mean = [0.0; 3];
        let n = 10000;
        for k in 0..n {
            seq.point(k, &mut p);
            for j in 0..3 {
                mean[j] += p[j] * p[j];
            }
        }
        for m in mean {
            assert!((m / n as f64 - 1.0 / 3.0).abs() < 1e-3);
        }
    }
}
