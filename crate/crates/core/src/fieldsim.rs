//! Simulation of zero-mean, unit-variance isotropic Gaussian fields on
//! rectangular lattices.
//!
//! Small grids are sampled exactly from the Cholesky factor of the covariance
//! matrix; larger grids use a spectral synthesis over a cell discretization
//! of the spectral density.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covmodels::{Correlation, CovarianceModel, SpectralModel};
use crate::error::{Error, Result};
use crate::quad::{corner_cube, GaussLegendre};
use crate::rng::{stream, StreamRng};

/// Largest grid accepted by the exact method.
pub const EXACT_LIMIT: usize = 8192;

/// Diagonal jitter tried in turn when the factorization fails.
pub const JITTER_SCHEDULE: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Rectangular lattice `origin + spacing * k`, `0 <= k_l < counts_l`, stored
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(counts: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        let g = Self { counts, spacing, origin };
        g.validate()?;
        Ok(g)
    }

    /// Integer lattice `{0..counts_l - 1}` with unit spacing.
    pub fn integer(counts: &[usize]) -> Self {
        Self { counts: counts.to_vec(), spacing: vec![1.0; counts.len()], origin: vec![0.0; counts.len()] }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.counts.len();
        if n == 0 || self.spacing.len() != n || self.origin.len() != n {
            return Err(Error::Input("grid counts, spacing and origin must share a positive length".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::Input("grid counts must be at least 1 per axis".into()));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Input("grid spacing must be positive".into()));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Input("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n()];
        for l in (0..self.n()).rev() {
            idx[l] = flat % self.counts[l];
            flat /= self.counts[l];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(l, &k)| self.origin[l] + self.spacing[l] * k as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.coords(i)).collect()
    }

    /// Flat index of the lattice point within `tol` (in lattice units) of `x`.
    pub fn locate(&self, x: &[f64], tol: f64) -> Option<usize> {
        if x.len() != self.n() {
            return None;
        }
        let mut flat = 0;
        for l in 0..self.n() {
            let k = (x[l] - self.origin[l]) / self.spacing[l];
            let kr = k.round();
            if (k - kr).abs() > tol || kr < 0.0 || kr >= self.counts[l] as f64 {
                return None;
            }
            flat = flat * self.counts[l] + kr as usize;
        }
        Some(flat)
    }
}

/// How a sample was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMethod {
    ExactFactorization,
    Spectral,
    /// Values supplied directly by the caller.
    Injected,
}

/// One field realization with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub method: SimulationMethod,
    pub seed: u64,
    pub model: String,
}

impl FieldSample {
    /// Wraps caller-supplied values, e.g. a deterministic test field.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Input(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("field values must be finite".into()));
        }
        Ok(Self { grid, values, method: SimulationMethod::Injected, seed: 0, model: "injected".into() })
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.grid.locate(x, 1e-9).map(|i| self.values[i])
    }

    /// Text export: one metadata header line, then `coords..., value` rows in
    /// row-major order.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# counts={:?} spacing={:?} origin={:?} method={:?} seed={} model={}",
            self.grid.counts, self.grid.spacing, self.grid.origin, self.method, self.seed, self.model
        );
        for (i, v) in self.values.iter().enumerate() {
            for c in self.grid.coords(i) {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{v}");
        }
        s
    }
}

/// Exact Gaussian sampler for a fixed point set: the covariance matrix is
/// factored once and each draw costs one triangular matrix-vector product.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    size: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl ExactSampler {
    pub fn new(corr: &impl Correlation, points: &[Vec<f64>]) -> Result<Self> {
        let size = points.len();
        if size == 0 {
            return Err(Error::Input("exact sampler needs at least one point".into()));
        }
        if size > EXACT_LIMIT {
            return Err(Error::GridTooLarge { points: size, limit: EXACT_LIMIT });
        }
        let cov = DMatrix::from_fn(size, size, |i, j| {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            corr.correlation(d.sqrt())
        });
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite covariance entry".into()));
        }
        let mut last = 0.0;
        for &jit in &JITTER_SCHEDULE {
            last = jit;
            let mut m = cov.clone();
            for i in 0..size {
                m[(i, i)] += jit;
            }
            if let Some(ch) = Cholesky::new(m) {
                let l = ch.l();
                let mut lower = Vec::with_capacity(size * (size + 1) / 2);
                for i in 0..size {
                    for j in 0..=i {
                        lower.push(l[(i, j)]);
                    }
                }
                return Ok(Self { size, lower, jitter: jit });
            }
        }
        Err(Error::NonPsdCovariance { jitter: last })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample_with(&self, rng: &mut StreamRng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.size).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; self.size];
        let mut off = 0;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.lower[off..off + i + 1];
            *o = row.iter().zip(&z).map(|(a, b)| a * b).sum();
            off += i + 1;
        }
        out
    }

    /// Replicate `index` of the stream seeded by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Vec<f64> {
        self.sample_with(&mut stream(seed, index))
    }
}

/// Exact simulation on `grid` with covariance `B(|x_i - x_j|)`.
pub fn simulate_field_exact(model: &CovarianceModel, grid: &GridSpec, seed: u64) -> Result<FieldSample> {
    grid.validate()?;
    if grid.n() != model.n() {
        return Err(Error::Input(format!("grid dimension {} differs from model dimension {}", grid.n(), model.n())));
    }
    if grid.len() > EXACT_LIMIT {
        return Err(Error::GridTooLarge { points: grid.len(), limit: EXACT_LIMIT });
    }
    let sampler = ExactSampler::new(model, &grid.points())?;
    Ok(FieldSample {
        grid: grid.clone(),
        values: sampler.sample(seed, 0),
        method: SimulationMethod::ExactFactorization,
        seed,
        model: model.fingerprint(),
    })
}

/// Uniform cells over `[-cutoff, cutoff]^n`, restricted to a half-space so that
/// each cell stands for itself and its mirror image.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiscretization {
    pub n: usize,
    pub cutoff: f64,
    pub cells_per_axis: usize,
    pub centers: Vec<Vec<f64>>,
    pub volumes: Vec<f64>,
    /// Cells next to the origin, whose mass is integrated rather than sampled
    /// at the center.
    pub near_origin: Vec<bool>,
    /// True when the cell count is odd and the cell centered at 0 is dropped.
    pub origin_excluded: bool,
}

impl SpectralDiscretization {
    pub fn new(n: usize, cutoff: f64, cells_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::SpectralDiscretization(format!("cutoff must be positive, got {cutoff}")));
        }
        if cells_per_axis < 16 {
            return Err(Error::SpectralDiscretization(format!(
                "cells_per_axis must be at least 16, got {cells_per_axis}"
            )));
        }
        let c = cells_per_axis;
        let h = 2.0 * cutoff / c as f64;
        let total = c.pow(n as u32);
        let mut centers = Vec::new();
        let mut near_origin = Vec::new();
        for flat in 0..total {
            let mut k = vec![0usize; n];
            let mut f = flat;
            for l in (0..n).rev() {
                k[l] = f % c;
                f /= c;
            }
            // Keep the cell if its first coordinate differing from the mirror is positive.
            let keep = k.iter().map(|&kj| kj.cmp(&(c - 1 - kj))).find(|o| o.is_ne());
            if keep != Some(std::cmp::Ordering::Greater) {
                continue;
            }
            let center: Vec<f64> = k.iter().map(|&kj| -cutoff + (kj as f64 + 0.5) * h).collect();
            let reach = if c % 2 == 0 { 0.5 } else { 1.0 };
            near_origin.push(center.iter().all(|x| x.abs() <= (reach + 1e-9) * h));
            centers.push(center);
        }
        let volumes = vec![h.powi(n as i32); centers.len()];
        Ok(Self { n, cutoff, cells_per_axis, centers, volumes, near_origin, origin_excluded: c % 2 == 1 })
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.cutoff / self.cells_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Spectral mass per half-space cell.
    pub fn masses(&self, s: &SpectralModel) -> Result<Vec<f64>> {
        if s.n != self.n {
            return Err(Error::Input("spectral model and discretization dimensions differ".into()));
        }
        let h = self.cell_width();
        let gl = GaussLegendre::new(16);
        let gamma = self.n as f64 - s.alpha;
        let masses: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.volumes)
            .zip(&self.near_origin)
            .map(|((c, &vol), &near)| {
                if !near {
                    return s.density_unchecked(norm(c)) * vol;
                }
                if self.cells_per_axis % 2 == 0 {
                    // Corner at the origin; the density is radial, so fold onto [0, h]^n.
                    corner_cube(self.n, h, gamma, &gl, 40, |x| s.density_unchecked(norm(x)))
                } else {
                    tensor_cell(c, h, &gl, |x| s.density_unchecked(norm(x)))
                }
            })
            .collect();
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::SpectralDiscretization("non-finite cell mass".into()));
        }
        Ok(masses)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn tensor_cell<F: FnMut(&[f64]) -> f64>(center: &[f64], h: f64, gl: &GaussLegendre, mut f: F) -> f64 {
    let n = center.len();
    let p = gl.len();
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    for c in 0..p.pow(n as u32) {
        let mut idx = c;
        let mut w = 1.0;
        for l in 0..n {
            let i = idx % p;
            idx /= p;
            x[l] = center[l] + 0.5 * h * gl.nodes[i];
            w *= 0.5 * h * gl.weights[i];
        }
        total += w * f(&x);
    }
    total
}

/// Spectral synthesizer: cell frequencies with amplitudes `sqrt(2 m_c)`.
#[derive(Debug, Clone)]
pub struct SpectralSynthesizer {
    pub disc: SpectralDiscretization,
    pub masses: Vec<f64>,
}

impl SpectralSynthesizer {
    pub fn new(s: &SpectralModel, cutoff: f64, cells_per_axis: usize) -> Result<Self> {
        let disc = SpectralDiscretization::new(s.n, cutoff, cells_per_axis)?;
        let masses = disc.masses(s)?;
        Ok(Self { disc, masses })
    }

    /// Variance of the synthesized field, `sum 2 m_c`.
    pub fn variance(&self) -> f64 {
        self.masses.iter().map(|m| 2.0 * m).sum()
    }

    /// Exact covariance of the synthesized field at offset `h`.
    pub fn covariance(&self, h: &[f64]) -> f64 {
        self.disc
            .centers
            .iter()
            .zip(&self.masses)
            .map(|(c, m)| 2.0 * m * dot(c, h).cos())
            .sum()
    }

    pub fn sample(&self, grid: &GridSpec, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = stream(seed, index);
        let coef: Vec<(f64, f64)> = self
            .masses
            .iter()
            .map(|m| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let amp = (2.0 * m).sqrt();
                (amp * a, amp * b)
            })
            .collect();
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let x = grid.coords(i);
                self.disc
                    .centers
                    .iter()
                    .zip(&coef)
                    .map(|(c, (a, b))| {
                        let (s, co) = dot(c, &x).sin_cos();
                        co * a + s * b
                    })
                    .sum()
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Spectral synthesis on `grid`.
pub fn simulate_field_spectral(
    s: &SpectralModel,
    grid: &GridSpec,
    seed: u64,
    cutoff: f64,
    cells_per_axis: usize,
) -> Result<FieldSample> {
    grid.validate()?;
    if grid.n() != s.n {
        return Err(Error::Input("grid and spectral model dimensions differ".into()));
    }
    let synth = SpectralSynthesizer::new(s, cutoff, cells_per_axis)?;
    Ok(FieldSample {
        grid: grid.clone(),
        values: synth.sample(grid, seed, 0),
        method: SimulationMethod::Spectral,
        seed,
        model: format!("spectral(n={},alpha={},L={})", s.n, s.alpha, s.l.label()),
    })
}

fn check_common_grid(samples: &[FieldSample]) -> Result<&GridSpec> {
    if samples.len() < 30 {
        return Err(Error::Input(format!("need at least 30 samples, got {}", samples.len())));
    }
    let grid = &samples[0].grid;
    if samples.iter().any(|s| s.grid != *grid) {
        return Err(Error::Input("samples do not share a common grid".into()));
    }
    Ok(grid)
}

/// Average of `xi(x) xi(x + lag)` over replicates and lattice pairs, with the
/// standard error across replicates.
pub fn empirical_covariance(samples: &[FieldSample], lag: &[i64]) -> Result<(f64, f64)> {
    let grid = check_common_grid(samples)?;
    if lag.len() != grid.n() || lag.iter().zip(&grid.counts).any(|(&d, &c)| d.unsigned_abs() as usize >= c) {
        return Err(Error::Lag { lag: lag.to_vec() });
    }
    let per: Vec<f64> = samples
        .iter()
        .map(|s| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..grid.len() {
                let idx = grid.multi_index(i);
                let mut j = Vec::with_capacity(idx.len());
                let mut ok = true;
                for (l, &k) in idx.iter().enumerate() {
                    let t = k as i64 + lag[l];
                    if t < 0 || t >= grid.counts[l] as i64 {
                        ok = false;
                        break;
                    }
                    j.push(t as usize);
                }
                if ok {
                    sum += s.values[i] * s.values[grid.flat_index(&j)];
                    count += 1;
                }
            }
            sum / count as f64
        })
        .collect();
    Ok(crate::stats::mean_stderr(&per))
}

/// Average field value over replicates and lattice points, with standard error.
pub fn empirical_mean(samples: &[FieldSample]) -> Result<(f64, f64)> {
    check_common_grid(samples)?;
    let per: Vec<f64> = samples.iter().map(|s| crate::stats::mean(&s.values)).collect();
    Ok(crate::stats::mean_stderr(&per))
}
