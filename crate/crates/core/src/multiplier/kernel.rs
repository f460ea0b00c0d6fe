//! Kernels of the vector-valued operator `ν ↦ (P_k M ν)_k`.
//!
//! On the allowed windows `φ(2^{-k} n) = 1`, so
//! `K_k(x) = w_{k-1}^{-1} e^{2πi 2^{k-1} x} R_s(x)` with
//! `R_s(x) = Σ_n ψ(n / r_{λ_s}) e^{2πinx}` and `λ_s < k ≤ λ_{s+1}`.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::{lp_pieces, psi_eval, MultiplierSpec};
use crate::error::{Error, Result};
use crate::scalar::{cis_turns, real, Real};
use crate::torus::{check_oversampling, SampledFunction, SpectralVector, Transform};

/// `R(x) = Σ_{|n| < r} ψ(n/r) e^{2πinx}` on `grid` points.
pub fn r_kernel<T: Real>(r: f64, grid: usize) -> Result<SampledFunction<T>> {
    let reach = if r.is_finite() { r.floor() as i64 } else { i64::MAX };
    if reach >= grid as i64 / 2 {
        return Err(Error::FrequencyOverflow { n: reach, grid });
    }
    let v: SpectralVector<T> = (-reach..=reach)
        .map(|n| {
            let c = if n == 0 { 1.0 } else { psi_eval(n as f64 / r) };
            (n, Complex::new(real::<T>(c), T::zero()))
        })
        .collect();
    Transform::new(grid)?.synthesize(&v)
}

/// `e^{2πi n x_j}` with the phase reduced exactly in integers.
fn mode_sample<T: Real>(n: i64, j: usize, grid: usize) -> Complex<T> {
    let g = grid as i128;
    let r = (n as i128 * j as i128).rem_euclid(g);
    let half = if n % 2 == 0 { 0.0 } else { 0.5 };
    cis_turns(real::<T>(r as f64 / grid as f64 - half))
}

#[derive(Debug, Clone)]
pub struct KernelFamily<T> {
    grid: usize,
    /// `k ↦ (s, K_k)` for `1 ≤ k ≤ N + 1`.
    kernels: BTreeMap<usize, (usize, SampledFunction<T>)>,
    r_samples: BTreeMap<usize, SampledFunction<T>>,
}

impl<T: Real> KernelFamily<T> {
    pub fn grid(&self) -> usize {
        self.grid
    }

    /// `K_k`, or `None` where the kernel vanishes identically.
    pub fn kernel(&self, k: i64) -> Option<&SampledFunction<T>> {
        if k < 1 {
            return None;
        }
        self.kernels.get(&(k as usize)).map(|(_, f)| f)
    }

    pub fn kernels(&self) -> impl Iterator<Item = (usize, &SampledFunction<T>)> + '_ {
        self.kernels.iter().map(|(&k, (_, f))| (k, f))
    }

    pub fn r_samples(&self, s: usize) -> Option<&SampledFunction<T>> {
        self.r_samples.get(&s)
    }

    pub fn block_of_kernel(&self, k: usize) -> Option<usize> {
        self.kernels.get(&k).map(|&(s, _)| s)
    }

    /// `‖K(x_j)‖_{ℓ²}` at every grid point.
    pub fn l2_profile(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.grid];
        for (_, f) in self.kernels.values() {
            for (a, z) in acc.iter_mut().zip(f.samples()) {
                *a = *a + z.norm_sqr();
            }
        }
        acc.into_iter().map(T::sqrt).collect()
    }
}

/// Builds `K_1..K_{N+1}` from the simplified closed form.
pub fn kernel_family<T: Real>(mspec: &MultiplierSpec, grid: usize) -> Result<KernelFamily<T>> {
    let n = mspec.truncation();
    check_oversampling(grid, 1u64 << (n + 1), 4)?;
    let spec = mspec.spec();
    let mut r_samples = BTreeMap::new();
    let mut kernels = BTreeMap::new();
    for k in 1..=n + 1 {
        let s = spec.block_of(k - 1);
        if let std::collections::btree_map::Entry::Vacant(slot) = r_samples.entry(s) {
            let r = spec.radii().log2_r(spec.lambda()[s]).exp2();
            slot.insert(r_kernel::<T>(r, grid)?);
        }
        let r = &r_samples[&s];
        let center = 1i64 << (k - 1);
        // m(2^{k-1}) = 1 / w_{k-1}
        let inv_w = real::<T>(mspec.m(center));
        let samples =
            r.samples().iter().enumerate().map(|(j, &z)| mode_sample::<T>(center, j, grid) * z * inv_w).collect();
        kernels.insert(k, (s, SampledFunction::new(samples)?));
    }
    Ok(KernelFamily { grid, kernels, r_samples })
}

/// `K_k` straight from its definition `Σ_n φ(2^{-k} n) m(n) e^{2πinx}`.
pub fn kernel_direct<T: Real>(mspec: &MultiplierSpec, k: i32, grid: usize) -> Result<SampledFunction<T>> {
    let v: SpectralVector<T> =
        mspec.support().map(|(n, m)| (n, Complex::new(real::<T>(m), T::zero()))).collect();
    let piece = lp_pieces(&v).remove(&k).unwrap_or_default();
    Transform::new(grid)?.synthesize(&piece)
}

/// Grid-index offsets of `y = ±2^{-j}(1 + u/8)`, `j = 2..=⌊log2 G⌋ - 2`,
/// `u = 0..8`, rounded to the grid; ascending and without repeats.
pub fn dyadic_offsets(grid: usize) -> Vec<i64> {
    let top = grid.trailing_zeros() as i64 - 2;
    let mut out = Vec::new();
    for j in 2..=top {
        for u in 0..8 {
            let y = (-(j as f64)).exp2() * (1.0 + u as f64 / 8.0);
            let t = (y * grid as f64).round() as i64;
            if t > 0 && t < grid as i64 / 2 {
                out.push(t);
                out.push(-t);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Samples indexed by signed position: `x = t / G` maps to `j = t + G/2`.
fn at<T: Copy>(samples: &[T], t: i64) -> T {
    let g = samples.len() as i64;
    samples[(t + g / 2).rem_euclid(g) as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RBoundRow {
    pub r: f64,
    /// `max_y |R(y)| (1 + (r|y|)²) / r`.
    pub c1: f64,
    pub c1_witness: f64,
    /// `max |R(x-y) - R(x)| (1 + (r|x|)²) / (r min(r|y|, 1))` over `2|y| < |x| < 1/2`.
    pub c2: f64,
    pub c2_witness: (f64, f64),
}

/// Fitted constants of the bounds `|R(y)| ≤ C₁ r / (1 + (r|y|)²)` and
/// `|R(x-y) - R(x)| ≤ C₂ r min(r|y|, 1) / (1 + (r|x|)²)`. `C₁` is maximized
/// over the whole grid, `C₂` over all grid `x` and the dyadic `y` sample set.
pub fn r_bound_fit(r_values: &[f64], grid: usize) -> Result<Vec<RBoundRow>> {
    if let Some(&bad) = r_values.iter().find(|&&r| !(r >= 4.0)) {
        return Err(Error::Input(format!("r_bound_fit needs r ≥ 4, got {bad}")));
    }
    let g = grid as i64;
    let offsets = dyadic_offsets(grid);
    r_values
        .iter()
        .map(|&r| {
            let complex = r_kernel::<f64>(r, grid)?;
            let samples: Vec<f64> = complex.abs();
            let (mut c1, mut c1_witness) = (0.0, 0.0);
            for t in -g / 2..g / 2 {
                let y = t as f64 / grid as f64;
                let v = at(&samples, t) * (1.0 + (r * y).powi(2)) / r;
                if v > c1 {
                    (c1, c1_witness) = (v, y);
                }
            }
            let zs = complex.samples();
            let best = offsets
                .par_iter()
                .map(|&dy| {
                    let y = dy as f64 / grid as f64;
                    let scale = r * (r * y.abs()).min(1.0);
                    let mut best = (0.0, (0.0, 0.0));
                    for t in -g / 2 + 1..g / 2 {
                        if 2 * dy.abs() >= t.abs() {
                            continue;
                        }
                        let x = t as f64 / grid as f64;
                        let diff = (at(zs, t - dy) - at(zs, t)).norm();
                        let v = diff * (1.0 + (r * x).powi(2)) / scale;
                        if v > best.0 {
                            best = (v, (x, y));
                        }
                    }
                    best
                })
                .reduce(|| (0.0, (0.0, 0.0)), |a, b| if b.0 > a.0 { b } else { a });
            Ok(RBoundRow { r, c1, c1_witness, c2: best.0, c2_witness: best.1 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HormanderReport {
    /// `max_n Σ_k (φ(2^{-k} n) m(n))²`.
    pub d2: f64,
    /// `sup_y |y| ‖K(y)‖_{ℓ²}` over the dyadic sample set.
    pub d3: f64,
    pub d3_witness: f64,
    /// `sup_y ∫_{|x| > 2|y|} ‖K(x-y) - K(x)‖_{ℓ²} dx` over the dyadic sample set.
    pub d4: f64,
    pub d4_witness: f64,
}

/// Measured constants of the vector-valued kernel conditions.
pub fn hormander_check(mspec: &MultiplierSpec, grid: usize) -> Result<HormanderReport> {
    let v: SpectralVector<f64> =
        mspec.support().map(|(n, m)| (n, Complex::new(m, 0.0))).collect();
    let mut per_n: BTreeMap<i64, f64> = BTreeMap::new();
    for piece in lp_pieces(&v).values() {
        for (n, c) in piece.iter() {
            *per_n.entry(n).or_insert(0.0) += c.norm_sqr();
        }
    }
    let d2 = per_n.values().copied().fold(0.0, f64::max);

    let family = kernel_family::<f64>(mspec, grid)?;
    let kernels: Vec<&[Complex<f64>]> = family.kernels().map(|(_, f)| f.samples()).collect();
    let profile: Vec<f64> = family.l2_profile();
    let g = grid as i64;
    let offsets = dyadic_offsets(grid);

    let (mut d3, mut d3_witness) = (0.0, 0.0);
    for &t in &offsets {
        let y = t as f64 / grid as f64;
        let v = y.abs() * at(&profile, t);
        if v > d3 {
            (d3, d3_witness) = (v, y);
        }
    }

    let (d4, d4_witness) = offsets
        .par_iter()
        .map(|&dy| {
            let mut sum = 0.0;
            for t in -g / 2..g / 2 {
                if t.abs() <= 2 * dy.abs() {
                    continue;
                }
                let sq: f64 = kernels.iter().map(|k| (at(k, t - dy) - at(k, t)).norm_sqr()).sum();
                sum += sq.sqrt();
            }
            (sum / grid as f64, dy as f64 / grid as f64)
        })
        .reduce(|| (0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });

    Ok(HormanderReport { d2, d3, d3_witness, d4, d4_witness })
}
