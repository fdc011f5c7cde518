//! Weighted additive functionals of `H_m(xi)`: lattice sums, midpoint-rule
//! integrals, their normalizers, and the pair of centered integral functionals
//! comparing `G(xi)` with its leading Hermite term.

use serde::{Deserialize, Serialize};

use crate::covmodels::SlowlyVarying;
use crate::error::{Error, Result};
use crate::fieldsim::FieldSample;
use crate::hermite::{hermite_coefficients, hermite_unchecked, rank_of, TestFunction, DEFAULT_RANK_TOL, MAX_ORDER};
use crate::special::factorial;

/// Family of separable weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightFamily {
    /// `g(t) = c`.
    Constant { c: f64 },
    /// `g(t) = prod t_l^{mu_l}`.
    Power { mu: Vec<f64> },
    /// `g(t) = prod t_l log(mu_l + t_l)`.
    PowerLog { mu: Vec<f64> },
}

/// Weight `g` on `[0, inf)^n` with its scaling limit `g*` on `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    n: usize,
    family: WeightFamily,
}

impl WeightFunction {
    pub fn new(n: usize, family: WeightFamily) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedDimension(n));
        }
        match &family {
            WeightFamily::Constant { c } => {
                if !(c.is_finite() && *c != 0.0) {
                    return Err(Error::Input("constant weight must be finite and nonzero".into()));
                }
            }
            WeightFamily::Power { mu } => {
                if mu.len() != n || mu.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Input(format!("power weight needs {n} finite exponents")));
                }
            }
            WeightFamily::PowerLog { mu } => {
                if mu.len() != n || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                    return Err(Error::Input(format!("power-log weight needs {n} positive shifts")));
                }
            }
        }
        Ok(Self { n, family })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(n, WeightFamily::Constant { c }).expect("valid constant weight")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    /// Factor of axis `l`, so that `g(t) = prod_l axis(l, t_l)`.
    pub fn axis(&self, l: usize, t: f64) -> f64 {
        match &self.family {
            WeightFamily::Constant { c } => {
                if l == 0 {
                    *c
                } else {
                    1.0
                }
            }
            WeightFamily::Power { mu } => t.powf(mu[l]),
            WeightFamily::PowerLog { mu } => t * (mu[l] + t).ln(),
        }
    }

    /// Factor of axis `l` of the limit `g*`.
    pub fn limit_axis(&self, l: usize, u: f64) -> f64 {
        match &self.family {
            WeightFamily::Constant { .. } => 1.0,
            WeightFamily::Power { mu } => u.powf(mu[l]),
            WeightFamily::PowerLog { .. } => u,
        }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        t.iter().enumerate().map(|(l, &x)| self.axis(l, x)).product()
    }

    pub fn limit(&self, u: &[f64]) -> f64 {
        u.iter().enumerate().map(|(l, &x)| self.limit_axis(l, x)).product()
    }

    /// `g(T * 1)`.
    pub fn diagonal(&self, t: f64) -> f64 {
        (0..self.n).map(|l| self.axis(l, t)).product()
    }

    /// `g*` as a weight in its own right (used by the limit constant).
    pub fn limit_weight(&self) -> WeightFunction {
        let family = match &self.family {
            WeightFamily::Constant { .. } => WeightFamily::Constant { c: 1.0 },
            WeightFamily::Power { mu } => WeightFamily::Power { mu: mu.clone() },
            WeightFamily::PowerLog { .. } => WeightFamily::Power { mu: vec![1.0; self.n] },
        };
        WeightFunction { n: self.n, family }
    }

    pub fn label(&self) -> String {
        match &self.family {
            WeightFamily::Constant { c } => format!("constant({c})"),
            WeightFamily::Power { mu } => format!("power({})", join(mu)),
            WeightFamily::PowerLog { mu } => format!("power-log({})", join(mu)),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// A raw functional value with its normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalResult {
    pub raw: f64,
    pub normalizer: f64,
    pub normalized: f64,
    pub order: usize,
    pub t: Vec<f64>,
    pub weight: String,
    pub refinement: Option<usize>,
}

impl FunctionalResult {
    pub fn new(raw: f64, normalizer: f64, order: usize, t: Vec<f64>, weight: String, refinement: Option<usize>) -> Result<Self> {
        if !(normalizer > 0.0) {
            return Err(Error::Domain(format!("normalizer must be positive, got {normalizer}")));
        }
        Ok(Self { raw, normalizer, normalized: raw / normalizer, order, t, weight, refinement })
    }
}

/// Iterates the multi-indices of `prod {0..counts_l - 1}` in row-major order.
fn for_each_index(counts: &[usize], mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        f(&idx)?;
        for l in (0..counts.len()).rev() {
            idx[l] += 1;
            if idx[l] < counts[l] {
                break;
            }
            idx[l] = 0;
        }
    }
    Ok(())
}

fn check_inputs(field: &FieldSample, g: &WeightFunction, m: usize, t: &[f64]) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::OrderTooLarge { order: m, max: MAX_ORDER });
    }
    if t.len() != field.grid.n() || g.n() != field.grid.n() {
        return Err(Error::Input("field, weight and extents must share the dimension".into()));
    }
    if t.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::Input("extents must be finite and nonnegative".into()));
    }
    Ok(())
}

/// `sum_{0 <= i_l < floor(T_l)} g(i) H_m(xi(i))`.
pub fn weighted_sum_functional(field: &FieldSample, g: &WeightFunction, m: usize, t: &[f64]) -> Result<f64> {
    check_inputs(field, g, m, t)?;
    let counts: Vec<usize> = t.iter().map(|x| x.floor() as usize).collect();
    let mut sum = 0.0;
    let mut x = vec![0.0; counts.len()];
    for_each_index(&counts, |idx| {
        for (xl, &i) in x.iter_mut().zip(idx) {
            *xl = i as f64;
        }
        let v = field
            .value_at(&x)
            .ok_or_else(|| Error::Coverage(format!("lattice point {idx:?} is not on the field grid")))?;
        sum += g.eval(&x) * hermite_unchecked(m, v);
        Ok(())
    })?;
    Ok(sum)
}

/// Number of midpoint cells per axis, requiring `T_l q` to be an integer.
fn midpoint_counts(t: &[f64], q: usize) -> Result<Vec<usize>> {
    if q == 0 {
        return Err(Error::Input("refinement q must be positive".into()));
    }
    t.iter()
        .map(|&x| {
            let k = x * q as f64;
            if (k - k.round()).abs() > 1e-9 {
                Err(Error::Input(format!("extent {x} is not a multiple of the spacing 1/{q}")))
            } else {
                Ok(k.round() as usize)
            }
        })
        .collect()
}

fn midpoint_sum(field: &FieldSample, t: &[f64], q: usize, mut f: impl FnMut(&[f64], f64) -> f64) -> Result<f64> {
    let counts = midpoint_counts(t, q)?;
    let qf = q as f64;
    let mut sum = 0.0;
    let mut x = vec![0.0; counts.len()];
    for_each_index(&counts, |idx| {
        for (xl, &k) in x.iter_mut().zip(idx) {
            *xl = (k as f64 + 0.5) / qf;
        }
        let v = field
            .value_at(&x)
            .ok_or_else(|| Error::Coverage(format!("midpoint {x:?} is not on the field grid")))?;
        sum += f(&x, v);
        Ok(())
    })?;
    Ok(sum / qf.powi(t.len() as i32))
}

/// Midpoint-rule approximation of `int_{[0,T]} g(t) H_m(xi(t)) dt` on cells of
/// side `1/q`; the field grid must contain the cell midpoints.
pub fn weighted_integral_functional(field: &FieldSample, g: &WeightFunction, m: usize, t: &[f64], q: usize) -> Result<f64> {
    check_inputs(field, g, m, t)?;
    midpoint_sum(field, t, q, |x, v| g.eval(x) * hermite_unchecked(m, v))
}

/// `d = T^{n - m alpha/2} |g(T 1)| L(T)^{m/2}`.
pub fn normalizer(n: usize, m: usize, alpha: f64, l: &SlowlyVarying, g: &WeightFunction, ttilde: f64) -> Result<f64> {
    let product = alpha * m as f64;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if product >= n as f64 {
        return Err(Error::LongRangeViolation { product, n });
    }
    if !(ttilde >= 1.0) {
        return Err(Error::Domain(format!("normalizer needs T >= 1, got {ttilde}")));
    }
    let d = ttilde.powf(n as f64 - 0.5 * product) * g.diagonal(ttilde).abs() * l.eval(ttilde)?.powf(0.5 * m as f64);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("normalizer is not positive and finite: {d}")));
    }
    Ok(d)
}

/// `(K_r, K_{r,kappa})`: midpoint integrals over `[0,T]^n` of `G(xi) - C_0` and
/// of `(C_kappa / kappa!) H_kappa(xi)` on the same realization.
pub fn theorem1_pair(g: &TestFunction, kappa: usize, field: &FieldSample, t: &[f64], q: usize) -> Result<(f64, f64)> {
    let jmax = (kappa + 4).clamp(8, MAX_ORDER);
    let exp = hermite_coefficients(g, jmax, 200.max(4 * jmax))?;
    let rank = rank_of(&exp.coeffs, DEFAULT_RANK_TOL).ok_or(Error::RankUndetected { jmax })?;
    if rank != kappa {
        return Err(Error::RankMismatch { expected: kappa, found: rank });
    }
    if t.len() != field.grid.n() {
        return Err(Error::Input("extents and field dimension differ".into()));
    }
    let c0 = exp.coeffs[0];
    let ck = exp.coeffs[kappa] / factorial(kappa);
    let kr = midpoint_sum(field, t, q, |_, v| g.eval(v) - c0)?;
    let krk = midpoint_sum(field, t, q, |_, v| ck * hermite_unchecked(kappa, v))?;
    Ok((kr, krk))
}

/// `max_u |g(T u)/g(T 1) - g*(u)|` over a uniform grid with `grid_points` per axis.
pub fn weight_limit_gap(g: &WeightFunction, ttilde: f64, grid_points: usize) -> f64 {
    let k = grid_points.max(2);
    let counts = vec![k; g.n()];
    let gt = g.diagonal(ttilde);
    let mut worst = 0.0f64;
    let mut u = vec![0.0; g.n()];
    let mut tu = vec![0.0; g.n()];
    let _ = for_each_index(&counts, |idx| {
        for l in 0..idx.len() {
            u[l] = idx[l] as f64 / (k - 1) as f64;
            tu[l] = ttilde * u[l];
        }
        worst = worst.max((g.eval(&tu) / gt - g.limit(&u)).abs());
        Ok(())
    });
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldsim::GridSpec;
    use crate::hermite::TestFamily;
    use proptest::prelude::*;

    fn zero_field(counts: &[usize], spacing: f64, origin: f64) -> FieldSample {
        let n = counts.len();
        let grid = GridSpec::new(counts.to_vec(), vec![spacing; n], vec![origin; n]).unwrap();
        let len = grid.len();
        FieldSample::from_values(grid, vec![0.0; len]).unwrap()
    }

    fn ramp_field(counts: &[usize], spacing: f64, origin: f64) -> FieldSample {
        let n = counts.len();
        let grid = GridSpec::new(counts.to_vec(), vec![spacing; n], vec![origin; n]).unwrap();
        let values = (0..grid.len()).map(|i| ((i * 7919) % 13) as f64 / 5.0 - 1.2).collect();
        FieldSample::from_values(grid, values).unwrap()
    }

    #[test]
    fn sum_examples() {
        let g1 = WeightFunction::constant(2, 1.0);
        let z = zero_field(&[4, 3], 1.0, 0.0);
        assert_eq!(weighted_sum_functional(&z, &g1, 1, &[4.0, 3.0]).unwrap(), 0.0);
        assert_eq!(weighted_sum_functional(&z, &g1, 2, &[4.0, 3.0]).unwrap(), -12.0);
        let grid = GridSpec::integer(&[2, 2]);
        let v = vec![0.3, -1.1, 2.5, 0.7];
        let f = FieldSample::from_values(grid, v.clone()).unwrap();
        let p = WeightFunction::new(2, WeightFamily::Power { mu: vec![1.0, 1.0] }).unwrap();
        // Enumeration oracle: only (1,1) has i*j != 0.
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                oracle += (i * j) as f64 * v[i * 2 + j];
            }
        }
        assert_eq!(weighted_sum_functional(&f, &p, 1, &[2.0, 2.0]).unwrap(), oracle);
        assert!(matches!(weighted_sum_functional(&f, &p, 1, &[3.0, 2.0]), Err(Error::Coverage(_))));
        // floor of non-integer extents
        assert_eq!(weighted_sum_functional(&z, &g1, 2, &[2.7, 1.2]).unwrap(), -2.0);
    }

    #[test]
    fn integral_examples() {
        let g1 = WeightFunction::constant(2, 1.0);
        for q in [1usize, 2, 4] {
            let z = zero_field(&[2 * q, 2 * q], 1.0 / q as f64, 0.5 / q as f64);
            assert_eq!(weighted_integral_functional(&z, &g1, 1, &[2.0, 2.0], q).unwrap(), 0.0);
            let v = weighted_integral_functional(&z, &g1, 2, &[2.0, 2.0], q).unwrap();
            assert!((v + 4.0).abs() < 1e-12);
        }
        // q = 1 on the midpoint-shifted lattice: direct enumeration.
        let f = ramp_field(&[3, 3], 1.0, 0.5);
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                oracle += f.values[i * 3 + j];
            }
        }
        let v = weighted_integral_functional(&f, &g1, 1, &[3.0, 3.0], 1).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        // A finer grid containing the midpoints also works.
        let fine = zero_field(&[8, 8], 0.25, 0.0);
        assert!((weighted_integral_functional(&fine, &g1, 2, &[2.0, 2.0], 2).unwrap() + 4.0).abs() < 1e-12);
        let shifted = zero_field(&[4, 4], 0.5, 0.0);
        assert!(matches!(weighted_integral_functional(&shifted, &g1, 2, &[2.0, 2.0], 2), Err(Error::Coverage(_))));
    }

    #[test]
    fn normalizer_examples() {
        let l1 = SlowlyVarying::Constant { c: 1.0 };
        let g2 = WeightFunction::constant(2, 1.0);
        assert!((normalizer(2, 1, 1.0, &l1, &g2, 4.0).unwrap() - 8.0).abs() < 1e-12);
        assert!((normalizer(2, 2, 0.6, &l1, &g2, 10.0).unwrap() - 10f64.powf(1.4)).abs() < 1e-10);
        let p = WeightFunction::new(1, WeightFamily::Power { mu: vec![1.0] }).unwrap();
        let v = normalizer(1, 2, 0.4, &l1, &p, 100.0).unwrap();
        assert!((v / 100f64.powf(1.6) - 1.0).abs() < 1e-12);
        assert!(matches!(normalizer(2, 2, 1.0, &l1, &g2, 4.0), Err(Error::LongRangeViolation { .. })));
        assert!(normalizer(2, 1, 1.0, &l1, &g2, 0.5).is_err());
    }

    #[test]
    fn theorem1_pair_examples() {
        let f = ramp_field(&[4, 4], 0.5, 0.25);
        let h2 = TestFunction::new(TestFamily::Polynomial { coeffs: vec![-1.0, 0.0, 1.0] });
        let (a, b) = theorem1_pair(&h2, 2, &f, &[2.0, 2.0], 2).unwrap();
        assert!((a - b).abs() < 1e-12);
        let sq = TestFunction::new(TestFamily::Monomial { p: 2 });
        let (a, b) = theorem1_pair(&sq, 2, &f, &[2.0, 2.0], 2).unwrap();
        assert!((a - b).abs() < 1e-12);
        let z = zero_field(&[4, 4], 0.5, 0.25);
        let (a, b) = theorem1_pair(&sq, 2, &z, &[2.0, 2.0], 2).unwrap();
        assert!((a + 4.0).abs() < 1e-12 && (b + 4.0).abs() < 1e-12);
        assert!(matches!(theorem1_pair(&sq, 1, &f, &[2.0, 2.0], 2), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn weight_limit_examples() {
        let p = WeightFunction::new(2, WeightFamily::Power { mu: vec![1.5, 0.5] }).unwrap();
        assert!(weight_limit_gap(&p, 37.0, 101) < 1e-14);
        assert_eq!(weight_limit_gap(&WeightFunction::constant(2, 3.0), 10.0, 101), 0.0);
        let e = std::f64::consts::E;
        let pl = WeightFunction::new(2, WeightFamily::PowerLog { mu: vec![e, e] }).unwrap();
        let gaps: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&t| weight_limit_gap(&pl, t, 101)).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        for t in [1.0, 2.0, 50.0] {
            assert!(pl.diagonal(t) != 0.0 && p.diagonal(t) != 0.0);
        }
    }

    #[test]
    fn linearity_in_field() {
        let a = ramp_field(&[5, 5], 1.0, 0.0);
        let mut b = ramp_field(&[5, 5], 1.0, 0.0);
        b.values.reverse();
        let sum = FieldSample::from_values(a.grid.clone(), a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect()).unwrap();
        let g = WeightFunction::new(2, WeightFamily::Power { mu: vec![1.0, 2.0] }).unwrap();
        let t = [5.0, 5.0];
        let lhs = weighted_sum_functional(&sum, &g, 1, &t).unwrap();
        let rhs = weighted_sum_functional(&a, &g, 1, &t).unwrap() + weighted_sum_functional(&b, &g, 1, &t).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn scaling_leaves_normalized_value(c in 0.01f64..100.0, m in 1usize..3, t in 2usize..6) {
            let f = ramp_field(&[t, t], 1.0, 0.0);
            let g1 = WeightFunction::constant(2, 1.0);
            let gc = WeightFunction::constant(2, c);
            let l = SlowlyVarying::Constant { c: 1.0 };
            let tt = [t as f64, t as f64];
            let r1 = weighted_sum_functional(&f, &g1, m, &tt).unwrap();
            let rc = weighted_sum_functional(&f, &gc, m, &tt).unwrap();
            let d1 = normalizer(2, m, 0.6, &l, &g1, t as f64).unwrap();
            let dc = normalizer(2, m, 0.6, &l, &gc, t as f64).unwrap();
            prop_assert!((rc - c * r1).abs() <= 1e-10 * (1.0 + rc.abs()));
            prop_assert!((dc - c * d1).abs() <= 1e-12 * dc);
            prop_assert!((rc / dc - r1 / d1).abs() <= 1e-10 * (1.0 + (r1 / d1).abs()));
        }

        #[test]
        fn power_weight_is_exactly_homogeneous(mu0 in 0.0f64..3.0, mu1 in 0.0f64..3.0, t in 1.0f64..1e3,
                                               u0 in 0.0f64..1.0, u1 in 0.0f64..1.0) {
            let g = WeightFunction::new(2, WeightFamily::Power { mu: vec![mu0, mu1] }).unwrap();
            let lhs = g.eval(&[t * u0, t * u1]) / g.diagonal(t);
            prop_assert!((lhs - g.limit(&[u0, u1])).abs() <= 1e-12);
        }
    }
}
