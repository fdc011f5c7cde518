//! Isotropic correlation models with long-range tails `r^{-alpha} L(r)`,
//! slowly varying factors, and the matching power-law spectral densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive, radial_graded, GaussLegendre};
use crate::special::{gamma, sphere_area, y_n};

/// Slowly varying function `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SlowlyVarying {
    /// `L(r) = c`.
    Constant { c: f64 },
    /// `L(r) = c log(s + r) / log(s + 1)`.
    LogShifted { c: f64, s: f64 },
    /// `L(r) = (r^2 / (1 + r^2))^{alpha/2}`, with `L(0) = 1`.
    CauchyFactor { alpha: f64 },
}

impl SlowlyVarying {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::Model(format!("constant slowly varying factor needs c > 0, got {c}")))
            }
            Self::LogShifted { c, s } if !(c > 0.0 && s > 1.0 && s.is_finite()) => Err(
                Error::Model(format!("log-shifted factor needs c > 0 and s > 1, got c={c}, s={s}")),
            ),
            Self::CauchyFactor { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::Model(format!("cauchy factor needs alpha > 0, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Evaluates `L(r)` for `r >= 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("slowly varying factor needs r >= 0, got {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::LogShifted { c, s } => c * (s + r).ln() / (s + 1.0).ln(),
            Self::CauchyFactor { alpha } => {
                if r == 0.0 {
                    1.0
                } else if r > 1e8 {
                    // (1 + r^{-2})^{-alpha/2} without cancellation.
                    (-0.5 * alpha * (1.0 / (r * r)).ln_1p()).exp()
                } else {
                    (r * r / (1.0 + r * r)).powf(0.5 * alpha)
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Constant { c } => format!("constant({c})"),
            Self::LogShifted { c, s } => format!("log-shifted({c};{s})"),
            Self::CauchyFactor { alpha } => format!("cauchy-factor({alpha})"),
        }
    }
}

/// Shape of the correlation function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CovarianceFamily {
    /// `B(r) = (1 + r^2)^{-alpha/2}`.
    Cauchy,
    /// `B(r) = min(1, r^{-alpha} L(r))`.
    PurePowerTail,
    /// `B(r) = r^{-alpha} L(r)` for `r >= r0`, cubic head `1 + c2 r^2 + c3 r^3` below.
    Generic { r0: f64 },
}

/// Anything that can serve as an isotropic correlation `B(r)`.
pub trait Correlation: Sync {
    fn correlation(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Correlation for F {
    fn correlation(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Isotropic correlation model.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    n: usize,
    alpha: f64,
    family: CovarianceFamily,
    l: SlowlyVarying,
    head: Option<(f64, f64)>,
}

impl CovarianceModel {
    pub fn new(n: usize, alpha: f64, family: CovarianceFamily, l: SlowlyVarying) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(alpha > 0.0 && alpha < n as f64) {
            return Err(Error::Model(format!("alpha must lie in (0, n) = (0, {n}), got {alpha}")));
        }
        l.validate()?;
        let mut head = None;
        match family {
            CovarianceFamily::Cauchy => {
                if l != (SlowlyVarying::CauchyFactor { alpha }) {
                    return Err(Error::Model(
                        "the cauchy family carries L = cauchy-factor(alpha) with the same alpha".into(),
                    ));
                }
            }
            CovarianceFamily::PurePowerTail => {}
            CovarianceFamily::Generic { r0 } => {
                if !(r0 > 0.0 && r0.is_finite()) {
                    return Err(Error::Model(format!("generic head needs r0 > 0, got {r0}")));
                }
                let tail = |r: f64| r.powf(-alpha) * l.eval_unchecked(r);
                let b0 = tail(r0);
                let h = 1e-5 * r0;
                let b1 = (tail(r0 + h) - tail(r0 - h)) / (2.0 * h);
                if b0 > 1.0 {
                    return Err(Error::Model(format!(
                        "generic head: tail value {b0} at r0 = {r0} exceeds 1; increase r0"
                    )));
                }
                let c3 = (b1 * r0 - 2.0 * (b0 - 1.0)) / r0.powi(3);
                let c2 = (b0 - 1.0 - c3 * r0.powi(3)) / (r0 * r0);
                if c2 > 0.0 {
                    return Err(Error::Model(format!(
                        "generic head: cubic head is not maximal at the origin (c2 = {c2})"
                    )));
                }
                let bad = (0..=400).map(|k| r0 * k as f64 / 400.0).any(|r| {
                    let v = 1.0 + c2 * r * r + c3 * r * r * r;
                    v.abs() > 1.0 + 1e-12
                });
                if bad {
                    return Err(Error::Model("generic head leaves [-1, 1]".into()));
                }
                head = Some((c2, c3));
            }
        }
        Ok(Self { n, alpha, family, l, head })
    }

    /// Cauchy model `(1 + r^2)^{-alpha/2}`.
    pub fn cauchy(n: usize, alpha: f64) -> Result<Self> {
        Self::new(n, alpha, CovarianceFamily::Cauchy, SlowlyVarying::CauchyFactor { alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> &CovarianceFamily {
        &self.family
    }

    pub fn slowly_varying(&self) -> &SlowlyVarying {
        &self.l
    }

    /// `B(r)` for `r >= 0`.
    pub fn covariance(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("covariance needs r >= 0, got {r}")));
        }
        Ok(self.eval(r))
    }

    fn eval(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 1.0;
        }
        match self.family {
            CovarianceFamily::Cauchy => (1.0 + r * r).powf(-0.5 * self.alpha),
            CovarianceFamily::PurePowerTail => {
                let v = r.powf(-self.alpha) * self.l.eval_unchecked(r);
                v.min(1.0)
            }
            CovarianceFamily::Generic { r0 } => {
                if r >= r0 {
                    r.powf(-self.alpha) * self.l.eval_unchecked(r)
                } else {
                    let (c2, c3) = self.head.expect("generic head is set at construction");
                    1.0 + c2 * r * r + c3 * r * r * r
                }
            }
        }
    }

    /// Matching spectral model with the same `(n, alpha, L)`.
    pub fn spectral(&self) -> SpectralModel {
        SpectralModel { n: self.n, alpha: self.alpha, l: self.l.clone() }
    }

    pub fn fingerprint(&self) -> String {
        let fam = match self.family {
            CovarianceFamily::Cauchy => "cauchy".to_string(),
            CovarianceFamily::PurePowerTail => "pure-power-tail".to_string(),
            CovarianceFamily::Generic { r0 } => format!("generic(r0={r0})"),
        };
        format!("{fam}(n={},alpha={},L={})", self.n, self.alpha, self.l.label())
    }
}

impl Correlation for CovarianceModel {
    fn correlation(&self, r: f64) -> f64 {
        self.eval(r)
    }
}

/// `B(r)` with domain checking.
pub fn covariance_eval(model: &CovarianceModel, r: f64) -> Result<f64> {
    model.covariance(r)
}

/// `L(r)` with domain checking.
pub fn slowly_varying_eval(l: &SlowlyVarying, r: f64) -> Result<f64> {
    l.eval(r)
}

/// `c1(n, alpha) = Gamma((n - alpha)/2) / (2^alpha pi^{n/2} Gamma(alpha/2))`.
pub fn c1_constant(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(n));
    }
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!("c1 needs 0 < alpha < n = {n}, got {alpha}")));
    }
    Ok(gamma(0.5 * (nf - alpha)) / (2f64.powf(alpha) * PI.powf(0.5 * nf) * gamma(0.5 * alpha)))
}

/// Isotropic spectral density `f(|l|) = c1 |l|^{alpha-n} L(1/|l|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub n: usize,
    pub alpha: f64,
    pub l: SlowlyVarying,
}

impl SpectralModel {
    pub fn new(n: usize, alpha: f64, l: SlowlyVarying) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        c1_constant(n, alpha)?;
        l.validate()?;
        Ok(Self { n, alpha, l })
    }

    /// Density at radius `lambda > 0`.
    pub fn density(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Err(Error::Singularity);
        }
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("spectral density needs |lambda| > 0, got {lambda}")));
        }
        Ok(self.density_unchecked(lambda))
    }

    pub(crate) fn density_unchecked(&self, lambda: f64) -> f64 {
        let c1 = c1_constant(self.n, self.alpha).expect("validated at construction");
        c1 * lambda.powf(self.alpha - self.n as f64) * self.l.eval_unchecked(1.0 / lambda)
    }
}

/// Density evaluation with domain checks.
pub fn spectral_density_eval(s: &SpectralModel, lambda: f64) -> Result<f64> {
    s.density(lambda)
}

/// Result of reconstructing `B(r)` from the spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelGap {
    /// `|B(r) - reconstruction|`.
    pub gap: f64,
    /// Reconstruction truncated at the cutoff.
    pub reconstruction: f64,
    /// Bound on the neglected oscillatory tail beyond the cutoff.
    pub tail_estimate: f64,
}

/// Compares `B(r)` with `int_0^cutoff Y_n(r u) w_n u^{n-1} f(u) du`.
///
/// `max_segments` caps the adaptive subdivisions over the oscillatory range.
pub fn hankel_consistency_gap(
    model: &CovarianceModel,
    s: &SpectralModel,
    r: f64,
    cutoff: f64,
    max_segments: usize,
) -> Result<HankelGap> {
    let n = model.n();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if s.n != n || s.alpha != model.alpha() || s.l != *model.slowly_varying() {
        return Err(Error::Model("covariance and spectral models do not share (n, alpha, L)".into()));
    }
    if !(r > 0.0 && cutoff > 0.0) {
        return Err(Error::Domain("hankel gap needs r > 0 and cutoff > 0".into()));
    }
    let alpha = s.alpha;
    let c1 = c1_constant(n, alpha)?;
    let wn = sphere_area(n);
    // w_n u^{n-1} f(u) = w_n c1 u^{alpha-1} L(1/u)
    let smooth = |u: f64| wn * c1 * s.l.eval_unchecked(1.0 / u) * y_n(n, r * u).unwrap_or(f64::NAN);
    let u1 = cutoff.min(1.0 / r);
    let gl = GaussLegendre::new(16);
    let mut total = radial_graded(u1, alpha, 60, &gl, smooth);
    let mut residual = 0.0;
    let mut used = 0usize;
    let half = PI / r;
    let mut a = u1;
    while a < cutoff {
        let b = (a + half).min(cutoff);
        let budget = max_segments.saturating_sub(used).max(1);
        let (v, e) = adaptive(|u| u.powf(alpha - 1.0) * smooth(u), a, b, 1e-15, 1e-12, budget.min(64))
            .map_err(|e| match e {
                Error::QuadratureFailure { residual, .. } => Error::QuadratureFailure {
                    context: format!("hankel reconstruction on [{a}, {b}]"),
                    residual,
                },
                other => other,
            })?;
        total += v;
        residual += e;
        used += 1;
        if used > max_segments {
            return Err(Error::QuadratureFailure {
                context: "hankel reconstruction exceeded its panel budget".into(),
                residual: residual + (cutoff - b) / cutoff,
            });
        }
        a = b;
    }
    let fc = s.density_unchecked(cutoff);
    let z = r * cutoff;
    let amp = if n == 1 { 1.0 } else { (2.0 / (PI * z)).sqrt() };
    let tail_estimate = 2.0 * wn * cutoff.powi(n as i32 - 1) * fc * amp / r + residual;
    if !(tail_estimate < 1.0) || !total.is_finite() {
        return Err(Error::QuadratureFailure {
            context: "oscillatory tail beyond the cutoff is not negligible".into(),
            residual: tail_estimate,
        });
    }
    let b = model.covariance(r)?;
    Ok(HankelGap { gap: (b - total).abs(), reconstruction: total, tail_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ln_gamma_oracle(mut x: f64) -> f64 {
        let mut shift = 0.0;
        while x < 25.0 {
            shift -= x.ln();
            x += 1.0;
        }
        let x2 = x * x;
        shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x2)
            + 1.0 / (1260.0 * x2 * x2 * x)
            - 1.0 / (1680.0 * x2 * x2 * x2 * x)
    }

    fn c1_oracle(n: usize, alpha: f64) -> f64 {
        let nf = n as f64;
        (ln_gamma_oracle(0.5 * (nf - alpha)) - ln_gamma_oracle(0.5 * alpha)).exp()
            / (2f64.powf(alpha) * PI.powf(0.5 * nf))
    }

    #[test]
    fn cauchy_examples() {
        let m = CovarianceModel::cauchy(2, 1.0).unwrap();
        assert_eq!(m.covariance(0.0).unwrap(), 1.0);
        assert!((m.covariance(3f64.sqrt()).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.covariance(-1.0).is_err());
        let m = CovarianceModel::cauchy(2, 0.6).unwrap();
        let l = SlowlyVarying::CauchyFactor { alpha: 0.6 };
        let via_tail = 10f64.powf(-0.6) * l.eval(10.0).unwrap();
        assert!((m.covariance(10.0).unwrap() - via_tail).abs() < 1e-12);
    }

    #[test]
    fn slowly_varying_examples() {
        assert_eq!(SlowlyVarying::Constant { c: 1.0 }.eval(7.3).unwrap(), 1.0);
        let cf = SlowlyVarying::CauchyFactor { alpha: 1.0 };
        let v: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&r| cf.eval(r).unwrap()).collect();
        assert!(v[0] < v[1] && v[1] < v[2] && v[2] <= 1.0);
        assert_eq!(cf.eval(0.0).unwrap(), 1.0);
        let ls = SlowlyVarying::LogShifted { c: 1.0, s: std::f64::consts::E };
        let r = 1e6;
        let direct = (std::f64::consts::E + 2.0 * r).ln() / (std::f64::consts::E + r).ln();
        let ratio = ls.eval(2.0 * r).unwrap() / ls.eval(r).unwrap();
        assert!((ratio - direct).abs() < 1e-14);
        // The log family varies slowly but not fast: the gap is ln 2 / ln r to leading order.
        assert!(((ratio - 1.0) - (2f64.ln() / r.ln())).abs() < 5e-3);
        assert!(ls.eval(-1.0).is_err());
    }

    #[test]
    fn slow_variation_ladder() {
        let fams = [
            SlowlyVarying::Constant { c: 2.0 },
            SlowlyVarying::LogShifted { c: 1.0, s: std::f64::consts::E },
            SlowlyVarying::CauchyFactor { alpha: 0.7 },
        ];
        for l in &fams {
            for t in [0.5, 2.0, 10.0] {
                let gap = |r: f64| (l.eval(t * r).unwrap() / l.eval(r).unwrap() - 1.0).abs();
                if matches!(l, SlowlyVarying::LogShifted { .. }) {
                    // Logarithmic decay of the gap: check it along r = 10^k instead.
                    let ladder: Vec<f64> = (2..=12).map(|k| gap(10f64.powi(k))).collect();
                    assert!(ladder.windows(2).all(|w| w[1] < w[0]), "{ladder:?}");
                    assert!(ladder[10] < 0.5 * ladder[0]);
                } else {
                    assert!(gap(1e6) < 1e-3, "{l:?} t={t}");
                }
            }
        }
    }

    #[test]
    fn c1_examples_and_grid() {
        assert!((c1_constant(2, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((c1_constant(1, 0.5).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        let big = c1_constant(2, 1.999).unwrap();
        assert!(big.is_finite() && big > 10.0);
        assert!(c1_constant(2, 2.0).is_err());
        assert!(c1_constant(1, 0.0).is_err());
        for n in 1..=3 {
            let mut a = 0.1;
            while a < n as f64 - 0.05 {
                let v = c1_constant(n, a).unwrap();
                let o = c1_oracle(n, a);
                assert!(v > 0.0);
                assert!((v - o).abs() <= 1e-12 * o, "n={n} a={a} {v} {o}");
                a += 0.1;
            }
        }
    }

    #[test]
    fn spectral_examples() {
        let s = SpectralModel::new(2, 1.0, SlowlyVarying::Constant { c: 1.0 }).unwrap();
        assert!((s.density(1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((s.density(4.0).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-14);
        assert!(matches!(s.density(0.0), Err(Error::Singularity)));
        let s1 = SpectralModel::new(1, 0.5, SlowlyVarying::Constant { c: 1.0 }).unwrap();
        assert!((s1.density(1.0).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let v = s.density(k as f64 * 0.1).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn cauchy_tail_law() {
        for alpha in [0.2, 0.6, 1.0] {
            let m = CovarianceModel::cauchy(2, alpha).unwrap();
            let mut r: f64 = 100.0;
            while r < 1e7 {
                let v = r.powf(alpha) * m.covariance(r).unwrap();
                assert!((0.99..=1.0).contains(&v));
                let l = m.slowly_varying().eval(r).unwrap();
                assert!((v / l - 1.0).abs() < 1e-12);
                r *= 3.7;
            }
        }
    }

    #[test]
    fn generic_and_pure_power_models() {
        let l = SlowlyVarying::LogShifted { c: 1.0, s: 2.0 };
        let g = CovarianceModel::new(2, 0.5, CovarianceFamily::Generic { r0: 3.0 }, l.clone()).unwrap();
        assert_eq!(g.covariance(0.0).unwrap(), 1.0);
        let r0 = 3.0;
        let left = g.covariance(r0 - 1e-9).unwrap();
        let right = g.covariance(r0 + 1e-9).unwrap();
        assert!((left - right).abs() < 1e-7);
        assert!(CovarianceModel::new(2, 0.5, CovarianceFamily::Generic { r0: 0.2 }, l.clone()).is_err());
        let p = CovarianceModel::new(1, 0.4, CovarianceFamily::PurePowerTail, SlowlyVarying::Constant { c: 1.0 })
            .unwrap();
        assert_eq!(p.covariance(0.5).unwrap(), 1.0);
        assert!((p.covariance(4.0).unwrap() - 4f64.powf(-0.4)).abs() < 1e-15);
        assert!(CovarianceModel::cauchy(2, 2.0).is_err());
        assert!(CovarianceModel::cauchy(4, 1.0).is_err());
        assert!(CovarianceModel::new(2, 0.5, CovarianceFamily::Cauchy, SlowlyVarying::Constant { c: 1.0 })
            .is_err());
    }

    /// Oracle: 2 c1 int_C^inf cos(u) u^{alpha-1} du by the integration-by-parts
    /// asymptotic series, so that the truncated reconstruction error is known.
    fn riesz_truncation_error(alpha: f64, c: f64) -> f64 {
        let s = alpha - 1.0;
        // I(s) = i e^{iC} sum_k i^k (s)(s-1)...(s-k+1) C^{s-k}
        let (mut re, mut im) = (0.0, 0.0);
        let mut coef = c.powf(s);
        let mut ik = (1.0, 0.0);
        for k in 0..30 {
            re += ik.0 * coef;
            im += ik.1 * coef;
            coef *= (s - k as f64) / c;
            ik = (-ik.1, ik.0);
        }
        // multiply by i e^{iC}
        let (er, ei) = (c.cos(), c.sin());
        let (zr, _zi) = (-(er * im + ei * re), er * re - ei * im);
        2.0 * c1_constant(1, alpha).unwrap() * zr
    }

    #[test]
    fn riesz_pair_reconstruction() {
        let alpha = 0.3;
        let m = CovarianceModel::new(1, alpha, CovarianceFamily::PurePowerTail, SlowlyVarying::Constant { c: 1.0 })
            .unwrap();
        let g = hankel_consistency_gap(&m, &m.spectral(), 1.0, 1e3, 4000).unwrap();
        let expected = riesz_truncation_error(alpha, 1e3).abs();
        assert!((g.gap - expected).abs() < 1e-7, "gap {} oracle {}", g.gap, expected);
        assert!(g.gap < 1e-2);
        let g2 = hankel_consistency_gap(&m, &m.spectral(), 1.0, 2e3, 8000).unwrap();
        assert!((g.gap - g2.gap).abs() < g.tail_estimate);
    }

    #[test]
    fn hankel_mismatched_pair_is_reported() {
        let m = CovarianceModel::cauchy(2, 0.8).unwrap();
        let g = hankel_consistency_gap(&m, &m.spectral(), 0.1, 400.0, 4000).unwrap();
        assert!(g.gap > 0.0);
        let g2 = hankel_consistency_gap(&m, &m.spectral(), 0.1, 800.0, 8000).unwrap();
        assert!((g.gap - g2.gap).abs() < g.tail_estimate);
        assert!(hankel_consistency_gap(&m, &m.spectral(), 0.1, 400.0, 3).is_err());
    }

    proptest! {
        #[test]
        fn covariance_bounded(alpha in 0.05f64..1.95, r in 0.0f64..1e4, fam in 0usize..3) {
            let model = match fam {
                0 => CovarianceModel::cauchy(2, alpha).unwrap(),
                1 => CovarianceModel::new(2, alpha, CovarianceFamily::PurePowerTail,
                        SlowlyVarying::LogShifted { c: 1.0, s: 3.0 }).unwrap(),
                _ => CovarianceModel::new(2, alpha, CovarianceFamily::Generic { r0: 4.0 },
                        SlowlyVarying::Constant { c: 1.0 }).unwrap(),
            };
            let b = model.covariance(r).unwrap();
            prop_assert!(b.abs() <= 1.0);
            prop_assert_eq!(model.covariance(0.0).unwrap(), 1.0);
        }

        #[test]
        fn slowly_varying_positive(r in 1e-9f64..1e9, alpha in 0.01f64..3.0, c in 0.1f64..10.0) {
            for l in [SlowlyVarying::Constant { c }, SlowlyVarying::LogShifted { c, s: 1.5 },
                      SlowlyVarying::CauchyFactor { alpha }] {
                prop_assert!(l.eval(r).unwrap() > 0.0);
            }
        }
    }
}
