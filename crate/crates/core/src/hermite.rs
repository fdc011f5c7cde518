//! Probabilists' Hermite polynomials and Hermite expansions of functions of a
//! standard Gaussian variable.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covmodels::{Correlation, CovarianceModel};
use crate::error::{Error, Result};
use crate::quad::{normalize_breaks, GaussHermite, GaussLegendre, Rule1d};
use crate::rng::stream;
use crate::special::{factorial, std_normal_pdf};

/// Largest supported Hermite order.
pub const MAX_ORDER: usize = 30;

/// Default relative threshold for rank detection.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_NODES: usize = 200;

/// `H_m(x)` by the three-term recurrence.
pub fn hermite_eval(m: usize, x: f64) -> Result<f64> {
    if m > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: m, max: MAX_ORDER });
    }
    Ok(hermite_unchecked(m, x))
}

pub(crate) fn hermite_unchecked(m: usize, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => x,
        2 => x * x - 1.0,
        _ => {
            let mut h0 = 1.0;
            let mut h1 = x;
            for k in 1..m {
                let h2 = x * h1 - k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

/// Fills `out[j] = H_j(x)` for `j < out.len()`.
pub(crate) fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = x * out[k] - k as f64 * out[k - 1];
    }
}

/// Family of test functions `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TestFamily {
    /// `x^p`.
    Monomial { p: u32 },
    /// `sum_k coeffs[k] x^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `1{x > 0}`.
    IndicatorPositive,
    /// `|x|`.
    AbsoluteValue,
    /// Linear interpolation through `(xs, ys)`, constant beyond the ends.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

/// A test function `G`, optionally scaled by a constant factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    #[serde(flatten)]
    pub family: TestFamily,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    pub fn new(family: TestFamily) -> Self {
        Self { family, scale: 1.0 }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() {
            return Err(Error::Input("test function scale must be finite".into()));
        }
        if let TestFamily::Tabulated { xs, ys } = &self.family {
            if xs.len() != ys.len() || xs.len() < 2 {
                return Err(Error::Input("tabulated test function needs >= 2 matching (x, y) pairs".into()));
            }
            if xs.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Input("tabulated abscissae must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = match &self.family {
            TestFamily::Monomial { p } => x.powi(*p as i32),
            TestFamily::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            TestFamily::IndicatorPositive => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            TestFamily::AbsoluteValue => x.abs(),
            TestFamily::Tabulated { xs, ys } => {
                let k = xs.partition_point(|&t| t <= x);
                if k == 0 {
                    ys[0]
                } else if k == xs.len() {
                    ys[ys.len() - 1]
                } else {
                    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    ys[k - 1] + t * (ys[k] - ys[k - 1])
                }
            }
        };
        self.scale * v
    }

    /// Points where `G` is not smooth, if any.
    fn breakpoints(&self) -> Option<Vec<f64>> {
        match &self.family {
            TestFamily::Monomial { .. } | TestFamily::Polynomial { .. } => None,
            TestFamily::IndicatorPositive | TestFamily::AbsoluteValue => Some(vec![0.0]),
            TestFamily::Tabulated { xs, .. } => Some(xs.clone()),
        }
    }

    pub fn label(&self) -> String {
        let base = match &self.family {
            TestFamily::Monomial { p } => format!("x^{p}"),
            TestFamily::Polynomial { coeffs } => format!("poly{coeffs:?}"),
            TestFamily::IndicatorPositive => "1{x>0}".into(),
            TestFamily::AbsoluteValue => "|x|".into(),
            TestFamily::Tabulated { xs, .. } => format!("tabulated({} pts)", xs.len()),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{}", self.scale, base)
        }
    }
}

/// Quadrature against `phi` suited to `G`.
///
/// Smooth families use Gauss-Hermite with `nodes` points. Families with kinks
/// or jumps use piecewise Gauss-Legendre on `[-40, 40]` split at the
/// breakpoints, since Gauss-Hermite converges only algebraically there.
enum PhiRule {
    Hermite(GaussHermite),
    Piecewise(Rule1d),
}

impl PhiRule {
    fn for_function(g: &TestFunction, nodes: usize) -> Self {
        match g.breakpoints() {
            None => PhiRule::Hermite(GaussHermite::new(nodes)),
            Some(mut b) => {
                let lim = 40.0;
                b.extend((0..=320).map(|k| -lim + 0.25 * k as f64));
                let breaks = normalize_breaks(b, -lim, lim, 1e-12);
                let rule = Rule1d::from_breaks(&breaks, &GaussLegendre::new(16));
                let weights = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * std_normal_pdf(x)).collect();
                PhiRule::Piecewise(Rule1d { nodes: rule.nodes, weights })
            }
        }
    }

    fn points(&self) -> (&[f64], &[f64]) {
        match self {
            PhiRule::Hermite(gh) => (&gh.nodes, &gh.weights),
            PhiRule::Piecewise(r) => (&r.nodes, &r.weights),
        }
    }
}

/// Truncated Hermite expansion `C_0..C_jmax`, with `C_j = E[G(Z) H_j(Z)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub coeffs: Vec<f64>,
    pub jmax: usize,
    pub quadrature_nodes: usize,
    /// `E[G(Z)^2]` under the same quadrature.
    pub second_moment: f64,
}

impl HermiteExpansion {
    /// `sum_{j <= jmax} C_j^2 / j!`.
    pub fn parseval_sum(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(j, c)| c * c / factorial(j)).sum()
    }
}

/// Computes `C_0..C_jmax` by quadrature against the standard normal density.
pub fn hermite_coefficients(g: &TestFunction, jmax: usize, nodes: usize) -> Result<HermiteExpansion> {
    if jmax > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: jmax, max: MAX_ORDER });
    }
    if nodes < 4 * jmax.max(1) {
        return Err(Error::Input(format!("nodes = {nodes} must be at least 4 * jmax = {}", 4 * jmax.max(1))));
    }
    g.validate()?;
    let rule = PhiRule::for_function(g, nodes);
    let (xs, ws) = rule.points();
    let mut coeffs = vec![0.0; jmax + 1];
    let mut second = 0.0;
    let mut h = vec![0.0; jmax + 1];
    for (&x, &w) in xs.iter().zip(ws) {
        let gx = g.eval(x);
        hermite_all(x, &mut h);
        for (c, hj) in coeffs.iter_mut().zip(&h) {
            *c += w * gx * hj;
        }
        second += w * gx * gx;
    }
    if coeffs.iter().any(|c| !c.is_finite()) || !second.is_finite() {
        return Err(Error::Integrability(g.label()));
    }
    Ok(HermiteExpansion { coeffs, jmax, quadrature_nodes: xs.len(), second_moment: second })
}

/// Smallest `j >= 1` with `|C_j| > rank_tol * max_{1 <= i <= jmax} |C_i|`.
pub fn hermite_rank(g: &TestFunction, jmax: usize, rank_tol: f64) -> Result<usize> {
    let exp = hermite_coefficients(g, jmax, DEFAULT_NODES.max(4 * jmax))?;
    rank_of(&exp.coeffs, rank_tol).ok_or(Error::RankUndetected { jmax })
}

pub(crate) fn rank_of(coeffs: &[f64], rank_tol: f64) -> Option<usize> {
    let max = coeffs.iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    if max == 0.0 || !max.is_finite() {
        return None;
    }
    // Anything at round-off level relative to the quadrature scale is zero.
    let floor = 1e-12 * coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| c.abs() > rank_tol * max && c.abs() > floor)
        .map(|(j, _)| j)
}

/// `|sum_{j <= jmax} C_j^2 / j! - E[G(Z)^2]|`.
pub fn parseval_gap(g: &TestFunction, jmax: usize, nodes: usize) -> Result<f64> {
    let exp = hermite_coefficients(g, jmax, nodes)?;
    Ok((exp.parseval_sum() - exp.second_moment).abs())
}

const MC_CHUNK: usize = 4096;

/// Monte Carlo estimate of `E[H_m1(xi(0)) H_m2(xi(x))]` at `|x| = r`, with its
/// standard error, from exact bivariate Gaussian pairs.
pub fn orthogonality_mc_check(
    model: &CovarianceModel,
    m1: usize,
    m2: usize,
    r: f64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let rho = model.covariance(r)?;
    orthogonality_mc_with(&rho_only(rho), m1, m2, r, reps, seed)
}

fn rho_only(rho: f64) -> impl Correlation {
    move |_r: f64| rho
}

pub(crate) fn orthogonality_mc_with(
    corr: &impl Correlation,
    m1: usize,
    m2: usize,
    r: f64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if m1 > 6 || m2 > 6 {
        return Err(Error::Input("orthogonality check supports orders up to 6".into()));
    }
    if reps < 2 {
        return Err(Error::Input("orthogonality check needs at least 2 replicates".into()));
    }
    let rho = corr.correlation(r);
    if !(rho.abs() <= 1.0) {
        return Err(Error::Model(format!("|B(r)| = {} exceeds 1", rho.abs())));
    }
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    let chunks = reps.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let count = MC_CHUNK.min(reps - c * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let y = rho * z1 + s * z2;
                let v = hermite_unchecked(m1, z1) * hermite_unchecked(m2, y);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = reps as f64;
    let mean = s1 / nf;
    let var = (s2 - nf * mean * mean) / (nf - 1.0);
    Ok((mean, (var.max(0.0) / nf).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mono(p: u32) -> TestFunction {
        TestFunction::new(TestFamily::Monomial { p })
    }

    /// E[Z^k] for a standard normal.
    fn gauss_moment(k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|v| v as f64).product()
        }
    }

    /// Explicit coefficients of He_m by the closed-form sum.
    fn hermite_explicit(m: usize, x: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..=m / 2 {
            let c = factorial(m) / (factorial(k) * factorial(m - 2 * k) * 2f64.powi(k as i32));
            s += if k % 2 == 0 { c } else { -c } * x.powi((m - 2 * k) as i32);
        }
        s
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_eval(2, 0.0).unwrap(), -1.0);
        assert_eq!(hermite_eval(3, 2.0).unwrap(), 2.0);
        let x: f64 = 1.3;
        let p5 = x.powi(5) - 10.0 * x.powi(3) + 15.0 * x;
        assert!((hermite_eval(5, x).unwrap() - p5).abs() < 1e-12);
        assert!(matches!(hermite_eval(31, 0.0), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn recurrence_matches_explicit_form() {
        let mut rng = stream(11, 0);
        for _ in 0..100 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = 4.0 * z;
            for m in 0..=8 {
                let a = hermite_eval(m, x).unwrap();
                let b = hermite_explicit(m, x);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn quadrature_orthogonality() {
        let gh = GaussHermite::new(200);
        for i in 0..=10 {
            for j in 0..=10 {
                let v = gh.integrate(|x| hermite_unchecked(i, x) * hermite_unchecked(j, x));
                let target = if i == j { factorial(i) } else { 0.0 };
                assert!((v - target).abs() <= 1e-9, "i={i} j={j} err={}", v - target);
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let e = hermite_coefficients(&mono(2), 4, 200).unwrap();
        // C_j = E[x^2 H_j] from Gaussian moments.
        for j in 0..=4 {
            let mut oracle = 0.0;
            for k in 0..=j / 2 {
                let c = factorial(j) / (factorial(k) * factorial(j - 2 * k) * 2f64.powi(k as i32));
                oracle += if k % 2 == 0 { c } else { -c } * gauss_moment(2 + j - 2 * k);
            }
            assert!((e.coeffs[j] - oracle).abs() < 1e-10, "j={j}");
        }
        let ind = hermite_coefficients(&TestFunction::new(TestFamily::IndicatorPositive), 4, 200).unwrap();
        assert!((ind.coeffs[0] - 0.5).abs() < 1e-8);
        assert!((ind.coeffs[1] - std_normal_pdf(0.0)).abs() < 1e-8);
        let lin = hermite_coefficients(&mono(1), 6, 200).unwrap();
        assert!((lin.coeffs[1] - 1.0).abs() < 1e-13);
        for j in [0, 2, 3, 4, 5, 6] {
            assert!(lin.coeffs[j].abs() < 1e-12);
        }
        assert!(hermite_coefficients(&mono(2), 31, 200).is_err());
        assert!(hermite_coefficients(&mono(2), 10, 20).is_err());
    }

    #[test]
    fn even_functions_have_zero_odd_coefficients() {
        for g in [mono(4), TestFunction::new(TestFamily::AbsoluteValue)] {
            let e = hermite_coefficients(&g, 12, 200).unwrap();
            for j in (1..=12).step_by(2) {
                assert!(e.coeffs[j].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(hermite_rank(&mono(2), 10, DEFAULT_RANK_TOL).unwrap(), 2);
        assert_eq!(hermite_rank(&mono(3), 10, DEFAULT_RANK_TOL).unwrap(), 1);
        let abs = TestFunction::new(TestFamily::AbsoluteValue);
        assert_eq!(hermite_rank(&abs, 10, DEFAULT_RANK_TOL).unwrap(), 2);
        let e = hermite_coefficients(&abs, 2, 200).unwrap();
        assert!((e.coeffs[2] - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let constant = TestFunction::new(TestFamily::Polynomial { coeffs: vec![3.0] });
        assert!(matches!(hermite_rank(&constant, 10, DEFAULT_RANK_TOL), Err(Error::RankUndetected { .. })));
    }

    #[test]
    fn rank_scale_invariance() {
        for g in [mono(2), mono(3), TestFunction::new(TestFamily::AbsoluteValue)] {
            let r = hermite_rank(&g, 10, DEFAULT_RANK_TOL).unwrap();
            for c in [1e-3, 1.0, 1e3] {
                assert_eq!(hermite_rank(&g.clone().scaled(c), 10, DEFAULT_RANK_TOL).unwrap(), r);
            }
        }
    }

    #[test]
    fn parseval_examples() {
        assert!(parseval_gap(&mono(2), 4, 200).unwrap() <= 1e-10);
        let h3 = TestFunction::new(TestFamily::Polynomial { coeffs: vec![0.0, -3.0, 0.0, 1.0] });
        let e = hermite_coefficients(&h3, 5, 200).unwrap();
        assert!((e.coeffs[3] - 6.0).abs() < 1e-11);
        assert!((e.parseval_sum() - 6.0).abs() < 1e-10);
        assert!(parseval_gap(&h3, 5, 200).unwrap() <= 1e-10);
        let ind = TestFunction::new(TestFamily::IndicatorPositive);
        let gaps: Vec<f64> = [5, 10, 20, 30].iter().map(|&j| parseval_gap(&ind, j, 200).unwrap()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    /// For 1{x>0} the only nonzero coefficients beyond j = 0 are odd,
    /// C_{2k+1}^2 / (2k+1)! = ((2k-1)!!)^2 / ((2k+1)! 2 pi), so the gap at jmax
    /// is the tail of that series, which decays like jmax^{-1/2}.
    #[test]
    fn indicator_gap_is_the_coefficient_tail() {
        let ind = TestFunction::new(TestFamily::IndicatorPositive);
        for jmax in [10usize, 20] {
            let mut term = 1.0;
            let mut tail = 0.0;
            let kmax = 10_000_000usize;
            for k in 0..kmax {
                if 2 * k + 1 > jmax {
                    tail += term;
                }
                term *= ((2 * k + 1) * (2 * k + 1)) as f64 / ((2 * k + 2) * (2 * k + 3)) as f64;
            }
            tail += 2.0 * term * kmax as f64;
            tail /= 2.0 * std::f64::consts::PI;
            let gap = parseval_gap(&ind, jmax, 200).unwrap();
            assert!((gap - tail).abs() < 1e-8, "jmax {jmax}: gap {gap} tail {tail}");
        }
    }

    #[test]
    fn tabulated_matches_abs() {
        let xs: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        let tab = TestFunction::new(TestFamily::Tabulated { xs, ys });
        let a = hermite_coefficients(&tab, 6, 200).unwrap();
        let b = hermite_coefficients(&TestFunction::new(TestFamily::AbsoluteValue), 6, 200).unwrap();
        for j in 0..=6 {
            assert!((a.coeffs[j] - b.coeffs[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn mc_orthogonality_examples() {
        let m = CovarianceModel::cauchy(2, 1.0).unwrap();
        let (e, s) = orthogonality_mc_check(&m, 1, 2, 0.7, 100_000, 1).unwrap();
        assert!(e.abs() < 4.0 * s);
        let (e, s) = orthogonality_mc_check(&m, 2, 2, 3f64.sqrt(), 100_000, 2).unwrap();
        assert!((e - 0.5).abs() < 4.0 * s, "{e} {s}");
        let (e, s) = orthogonality_mc_check(&m, 1, 1, 0.0, 100_000, 3).unwrap();
        assert!((e - 1.0).abs() < 4.0 * s);
        let bad = |_r: f64| 1.5;
        assert!(matches!(orthogonality_mc_with(&bad, 1, 1, 1.0, 100, 0), Err(Error::Model(_))));
    }

    #[test]
    fn mc_mean_of_hermite_is_zero() {
        for m in 1..=6 {
            let (e, s) = orthogonality_mc_with(&|_r: f64| 0.0, m, 0, 1.0, 100_000, 40 + m as u64).unwrap();
            assert!(e.abs() < 4.0 * s, "m={m}");
        }
    }

    proptest! {
        #[test]
        fn parseval_sum_bounded(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c3 in -1.0f64..1.0, jmax in 1usize..12) {
            let g = TestFunction::new(TestFamily::Polynomial { coeffs: vec![c0, c1, 0.5, c3] });
            let e = hermite_coefficients(&g, jmax, 200).unwrap();
            prop_assert!(e.parseval_sum() <= e.second_moment + 1e-9 * e.second_moment.max(1.0));
        }
    }
}
