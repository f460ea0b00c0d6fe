//! The smoothed window multiplier `M`, Littlewood–Paley projections and the
//! numerical checks of the kernel and interpolation estimates.
//!
//! `m(n) = ψ((n - 2^k)/r_{λ_s}) / w_k` on `[2^k - r_k, 2^k + r_k]`, `k ≤ N`,
//! with `λ_s ≤ k < λ_{s+1}`, and `m(n) = 0` elsewhere.

mod bump;
mod harness;
mod kernel;

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::Serialize;

pub use bump::{eta, partition_check, partition_sum, phi, psi_eval, ETA_HIGH, ETA_LOW};
pub use harness::{
    interpolation_harness, lacunary_ratio, test_family, InterpolationReport, LacunaryReport, MeasureKind,
    TestMeasure,
};
pub use kernel::{
    dyadic_offsets, hormander_check, kernel_direct, kernel_family, r_bound_fit, r_kernel, HormanderReport,
    KernelFamily, RBoundRow,
};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::spectrum::{window_half_width, SpectrumSpec, WeightSequence, MAX_ALLOWED_SET};
use crate::torus::{analyze, AtomicMeasure, SampledFunction, SpectralVector, Transform};

/// The symbol `m` as a finite table of its nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSpec {
    spec: SpectrumSpec,
    weights: WeightSequence,
    truncation: usize,
    table: BTreeMap<i64, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowInfo {
    pub k: usize,
    pub block: usize,
    /// `log2 r_{λ_s}` of the block containing `k`.
    pub log2_smoothing: f64,
    pub half_width: u64,
}

impl MultiplierSpec {
    pub fn spec(&self) -> &SpectrumSpec {
        &self.spec
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `m(n)`.
    pub fn m(&self, n: i64) -> f64 {
        self.table.get(&n).copied().unwrap_or(0.0)
    }

    /// Nonzero entries, ascending in `n`.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.table.iter().map(|(&n, &v)| (n, v))
    }

    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    pub fn max_frequency(&self) -> i64 {
        self.table.keys().next_back().copied().unwrap_or(0)
    }

    pub fn max_value(&self) -> f64 {
        self.table.values().copied().fold(0.0, f64::max)
    }

    /// Window data for `k ≤ N`.
    pub fn window(&self, k: usize) -> WindowInfo {
        let block = self.spec.block_of(k);
        let lambda = self.spec.lambda()[block];
        WindowInfo {
            k,
            block,
            log2_smoothing: self.spec.radii().log2_r(lambda),
            half_width: window_half_width(k, self.spec.radii()),
        }
    }

    /// The symbol with every value set to zero, keeping the geometry.
    pub fn zeroed(&self) -> Self {
        Self { table: BTreeMap::new(), ..self.clone() }
    }

    fn check_band(&self, grid: usize) -> Result<()> {
        let top = self.max_frequency();
        if top >= grid as i64 / 2 {
            return Err(Error::FrequencyOverflow { n: top, grid });
        }
        Ok(())
    }
}

/// Tabulates `m(n)`. Where windows overlap the lowest `k` wins.
pub fn build_m(spec: &SpectrumSpec, weights: &WeightSequence, truncation: usize) -> Result<MultiplierSpec> {
    let radii = spec.radii();
    if truncation >= radii.len() || truncation >= 62 {
        return Err(Error::InvalidRadii(format!("radii needed up to index {truncation}")));
    }
    if truncation >= weights.len() {
        return Err(Error::InvalidWeights(format!("weights needed up to index {truncation}")));
    }
    let mut size = 0u64;
    for k in 0..=truncation {
        size = size.saturating_add(2 * window_half_width(k, radii) + 1);
    }
    if size > MAX_ALLOWED_SET {
        return Err(Error::TruncationTooLarge(truncation));
    }
    let mut table = BTreeMap::new();
    for k in 0..=truncation {
        let center = 1i64 << k;
        let d = window_half_width(k, radii) as i64;
        let lambda = spec.lambda()[spec.block_of(k)];
        let r = radii.log2_r(lambda).exp2();
        let inv_w = weights.w(k).recip();
        for off in -d..=d {
            let n = center + off;
            if n < 1 || table.contains_key(&n) {
                continue;
            }
            let v = if off == 0 { inv_w } else { psi_eval(off as f64 / r) * inv_w };
            table.insert(n, v);
        }
    }
    table.retain(|_, v| *v != 0.0);
    Ok(MultiplierSpec { spec: spec.clone(), weights: weights.clone(), truncation, table })
}

/// Inputs accepted by [`apply_m`].
#[derive(Debug, Clone, Copy)]
pub enum MeasureInput<'a, T> {
    Atomic(&'a AtomicMeasure<T>),
    /// The measure `f dx`, with `ν̂` taken from the samples.
    Density(&'a SampledFunction<T>),
    /// A measure given by its Fourier coefficients.
    Spectral(&'a SpectralVector<T>),
}

/// `m(n) ν̂(n)` over the support of `m`.
pub fn multiplied_spectrum<T: Real>(nu: MeasureInput<'_, T>, mspec: &MultiplierSpec) -> Result<SpectralVector<T>> {
    let coeff: Box<dyn Fn(i64) -> Complex<T> + '_> = match nu {
        MeasureInput::Atomic(a) => Box::new(move |n| a.coeff(n)),
        MeasureInput::Spectral(v) => Box::new(move |n| v.get(n)),
        MeasureInput::Density(f) => {
            mspec.check_band(f.grid())?;
            let v = analyze(f);
            Box::new(move |n| v.get(n))
        }
    };
    Ok(mspec.support().map(|(n, m)| (n, coeff(n) * real::<T>(m))).collect())
}

/// `(Mν)(x_j) = Σ_{n≥1} m(n) ν̂(n) e^{2πin x_j}` on `grid` points.
pub fn apply_m<T: Real>(nu: MeasureInput<'_, T>, mspec: &MultiplierSpec, grid: usize) -> Result<SampledFunction<T>> {
    mspec.check_band(grid)?;
    Transform::new(grid)?.synthesize(&multiplied_spectrum(nu, mspec)?)
}

/// Symbol of `P_k`: `φ(2^{-k} n)` for `k > 0`, `φ(-2^k n)` for `k < 0`, `[n = 0]` for `k = 0`.
pub fn pk_symbol<T: Real>(n: i64, k: i32) -> T {
    match k.signum() {
        0 => {
            if n == 0 {
                T::one()
            } else {
                T::zero()
            }
        }
        1 => phi(real::<T>(n as f64 * (-f64::from(k)).exp2())),
        _ => phi(real::<T>(-(n as f64) * f64::from(k).exp2())),
    }
}

/// Scales `k` whose symbol can be nonzero at `n`.
fn scales_of(n: i64) -> Vec<i32> {
    if n == 0 {
        return vec![0];
    }
    let l = (n.unsigned_abs() as f64).log2();
    let sign = if n > 0 { 1 } else { -1 };
    // 0.26 < |n| 2^{-|k|} < 0.99 forces |k| ∈ (log2|n|, log2|n| + 2)
    let lo = l.floor() as i32;
    (lo..=lo + 2).filter(|&k| k > 0).map(|k| sign * k).collect()
}

/// Spectrum of `P_k f` for every scale where it is nonzero.
pub fn lp_pieces<T: Real>(v: &SpectralVector<T>) -> BTreeMap<i32, SpectralVector<T>> {
    let mut out: BTreeMap<i32, SpectralVector<T>> = BTreeMap::new();
    for (n, c) in v.iter() {
        for k in scales_of(n) {
            let s = pk_symbol::<T>(n, k);
            if s != T::zero() {
                out.entry(k).or_default().set(n, c * s);
            }
        }
    }
    out
}

/// `P_k f` on the grid of `f`.
pub fn apply_pk<T: Real>(f: &SampledFunction<T>, k: i32) -> Result<SampledFunction<T>> {
    let t = Transform::new(f.grid())?;
    let v: SpectralVector<T> = t.analyze(f)?.iter().map(|(n, c)| (n, c * pk_symbol::<T>(n, k))).collect();
    t.synthesize(&v)
}

/// `Sf = (Σ_k |P_k f|^2)^{1/2}` for `f` given by its spectrum.
pub fn square_function_spectral<T: Real>(v: &SpectralVector<T>, grid: usize) -> Result<Vec<T>> {
    let t = Transform::new(grid)?;
    let mut acc = vec![T::zero(); grid];
    for piece in lp_pieces(v).values() {
        for (a, z) in acc.iter_mut().zip(t.synthesize(piece)?.samples()) {
            *a = *a + z.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(T::sqrt).collect())
}

/// `Sf` on the grid of `f`, as a real-valued sampled function.
pub fn square_function<T: Real>(f: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    SampledFunction::from_real(square_function_spectral(&analyze(f), f.grid())?)
}
