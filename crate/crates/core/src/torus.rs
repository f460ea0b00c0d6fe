//! Grid-sampled functions on the torus `[-1/2, 1/2)`.
//!
//! A grid of size `G` (a power of two) holds the points `x_j = j/G - 1/2`.
//! Analysis carries the `1/G` factor, synthesis none, so that
//! `analyze(f)(n)` is the Riemann sum for `∫ f(t) e^{-2πint} dt` against the
//! normalized Lebesgue measure. Frequencies live in `(-G/2, G/2]`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{cis_turns, real, Real};

/// Checks that `grid` is a power of two and at least 2.
pub fn check_grid(grid: usize) -> Result<()> {
    if grid >= 2 && grid.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(grid))
    }
}

/// Smallest power-of-two grid that samples frequencies up to `max_freq`
/// with the given oversampling factor (`G >= factor * max_freq`).
pub fn grid_for(max_freq: u64, factor: u64) -> usize {
    let need = (max_freq.max(1) * factor.max(2)) as usize;
    need.next_power_of_two().max(2)
}

/// Verifies `G >= factor * max_freq`, the oversampling rule for sup-norm estimates.
pub fn check_oversampling(grid: usize, max_freq: u64, factor: u64) -> Result<()> {
    check_grid(grid)?;
    let required = max_freq as u128 * factor as u128;
    if (grid as u128) < required {
        return Err(Error::GridTooCoarse { grid, required });
    }
    Ok(())
}

/// Index of frequency `n` in a length-`grid` DFT array.
#[inline]
pub fn bin_of(n: i64, grid: usize) -> usize {
    n.rem_euclid(grid as i64) as usize
}

/// Frequency in `(-G/2, G/2]` stored at DFT index `bin`.
#[inline]
pub fn freq_of(bin: usize, grid: usize) -> i64 {
    if bin > grid / 2 {
        bin as i64 - grid as i64
    } else {
        bin as i64
    }
}

#[inline]
fn in_band(n: i64, grid: usize) -> bool {
    let half = grid as i64 / 2;
    n > -half && n <= half
}

/// Samples of a complex function on the uniform grid `x_j = j/G - 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    samples: Vec<Complex<T>>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(samples: Vec<Complex<T>>) -> Result<Self> {
        check_grid(samples.len())?;
        Ok(Self { samples })
    }

    pub fn zeros(grid: usize) -> Result<Self> {
        Self::new(vec![Complex::new(T::zero(), T::zero()); grid])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: usize, mut f: impl FnMut(T) -> Complex<T>) -> Result<Self> {
        check_grid(grid)?;
        let samples = (0..grid).map(|j| f(grid_point(j, grid))).collect();
        Ok(Self { samples })
    }

    pub fn from_real(samples: Vec<T>) -> Result<Self> {
        Self::new(samples.into_iter().map(|v| Complex::new(v, T::zero())).collect())
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    /// Grid coordinate of sample `j`.
    pub fn point(&self, j: usize) -> T {
        grid_point(j, self.grid())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { samples: self.samples.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        same_grid(self, other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn abs(&self) -> Vec<T> {
        self.samples.iter().map(|z| z.norm()).collect()
    }
}

/// `x_j = j/G - 1/2`.
#[inline]
pub fn grid_point<T: Real>(j: usize, grid: usize) -> T {
    real::<T>(j as f64 / grid as f64) - real(0.5)
}

fn same_grid<T>(a: &SampledFunction<T>, b: &SampledFunction<T>) -> Result<()> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::GridMismatch { left: a.samples.len(), right: b.samples.len() });
    }
    Ok(())
}

/// Finite map from integer frequency to complex coefficient. Exact zeros are not stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralVector<T> {
    entries: BTreeMap<i64, Complex<T>>,
}

impl<T: Real> SpectralVector<T> {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Sets `c_n`, removing the entry when `value` is exactly zero.
    pub fn set(&mut self, n: i64, value: Complex<T>) {
        if value.re == T::zero() && value.im == T::zero() {
            self.entries.remove(&n);
        } else {
            self.entries.insert(n, value);
        }
    }

    /// Adds `value` to `c_n`.
    pub fn add(&mut self, n: i64, value: Complex<T>) {
        let cur = self.get(n);
        self.set(n, cur + value);
    }

    pub fn get(&self, n: i64) -> Complex<T> {
        self.entries.get(&n).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn contains(&self, n: i64) -> bool {
        self.entries.contains_key(&n)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        self.entries.iter().map(|(&n, &c)| (n, c))
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.keys().copied()
    }

    /// Largest `|n|` among stored frequencies, 0 if empty.
    pub fn max_abs_freq(&self) -> u64 {
        self.entries.keys().map(|n| n.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Σ |c_n|^2`.
    pub fn energy(&self) -> T {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ |c_n|`.
    pub fn l1(&self) -> T {
        self.entries.values().map(|c| c.norm()).sum()
    }

    /// Spectral inner product `Σ_n a_n conj(b_n)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = Complex::new(T::zero(), T::zero());
        for (n, c) in small.iter() {
            if let Some(&d) = large.entries.get(&n) {
                acc = acc + if flip { d * c.conj() } else { c * d.conj() };
            }
        }
        acc
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.iter().map(|(n, c)| (n, c * s)).collect()
    }

    /// Keeps only entries with `|c_n| > threshold`.
    pub fn pruned(&self, threshold: T) -> Self {
        self.iter().filter(|(_, c)| c.norm() > threshold).collect()
    }
}

impl<T: Real> FromIterator<(i64, Complex<T>)> for SpectralVector<T> {
    fn from_iter<I: IntoIterator<Item = (i64, Complex<T>)>>(iter: I) -> Self {
        let mut v = Self::new();
        for (n, c) in iter {
            v.add(n, c);
        }
        v
    }
}

/// Finite complex combination of Dirac masses on the torus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure<T> {
    atoms: Vec<(T, Complex<T>)>,
}

impl<T: Real> AtomicMeasure<T> {
    /// Builds a measure. Positions are wrapped into `[-1/2, 1/2)`.
    pub fn new(atoms: impl IntoIterator<Item = (T, Complex<T>)>) -> Result<Self> {
        let half = real::<T>(0.5);
        let mut out = Vec::new();
        for (pos, w) in atoms {
            if !pos.is_finite() || !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Input("atom position and weight must be finite".into()));
            }
            let wrapped = pos + half - (pos + half).floor() - half;
            let wrapped = if wrapped >= half { -half } else { wrapped };
            out.push((wrapped, w));
        }
        Ok(Self { atoms: out })
    }

    pub fn dirac(pos: T) -> Self {
        Self::new([(pos, Complex::new(T::one(), T::zero()))]).expect("finite atom")
    }

    pub fn atoms(&self) -> &[(T, Complex<T>)] {
        &self.atoms
    }

    /// `Σ |w_j|`.
    pub fn total_variation(&self) -> T {
        self.atoms.iter().map(|(_, w)| w.norm()).sum()
    }

    /// `ν̂(n) = Σ_j w_j e^{-2πin·pos_j}`.
    pub fn coeff(&self, n: i64) -> Complex<T> {
        self.atoms
            .iter()
            .map(|&(pos, w)| w * cis_turns(-phase_turns(n, pos)))
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }
}

/// `n·pos mod 1`, reduced in `f64`.
fn phase_turns<T: Real>(n: i64, pos: T) -> T {
    let t = (n as f64 * crate::scalar::to_f64(pos)).rem_euclid(1.0);
    real(t)
}

/// Cached forward/inverse FFT plans for a single grid size.
#[derive(Clone)]
pub struct Transform<T: Real> {
    grid: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Transform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl<T: Real> Transform<T> {
    pub fn new(grid: usize) -> Result<Self> {
        check_grid(grid)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Dense analysis: entry `b` holds `f̂(freq_of(b))`.
    pub fn analyze_dense(&self, samples: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if samples.len() != self.grid {
            return Err(Error::GridMismatch { left: samples.len(), right: self.grid });
        }
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let inv_g = T::one() / real::<T>(self.grid as f64);
        for (b, z) in buf.iter_mut().enumerate() {
            let s = if b % 2 == 0 { inv_g } else { -inv_g };
            *z = *z * s;
        }
        Ok(buf)
    }

    /// Dense synthesis from entries laid out as in [`Transform::analyze_dense`].
    pub fn synthesize_dense(&self, coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if coeffs.len() != self.grid {
            return Err(Error::GridMismatch { left: coeffs.len(), right: self.grid });
        }
        let mut buf: Vec<Complex<T>> = coeffs
            .iter()
            .enumerate()
            .map(|(b, &z)| if b % 2 == 0 { z } else { -z })
            .collect();
        self.inverse.process(&mut buf);
        Ok(buf)
    }

    pub fn analyze(&self, f: &SampledFunction<T>) -> Result<SpectralVector<T>> {
        let dense = self.analyze_dense(f.samples())?;
        Ok(dense
            .into_iter()
            .enumerate()
            .map(|(b, c)| (freq_of(b, self.grid), c))
            .collect())
    }

    pub fn synthesize(&self, v: &SpectralVector<T>) -> Result<SampledFunction<T>> {
        let dense = self.densify(v)?;
        Ok(SampledFunction { samples: self.synthesize_dense(&dense)? })
    }

    /// Lays a spectral vector out as a dense DFT array; rejects out-of-band frequencies.
    pub fn densify(&self, v: &SpectralVector<T>) -> Result<Vec<Complex<T>>> {
        let mut dense = vec![Complex::new(T::zero(), T::zero()); self.grid];
        for (n, c) in v.iter() {
            if !in_band(n, self.grid) {
                return Err(Error::FrequencyOverflow { n, grid: self.grid });
            }
            dense[bin_of(n, self.grid)] = c;
        }
        Ok(dense)
    }
}

/// Fourier coefficients for every `n ∈ (-G/2, G/2]`.
pub fn analyze<T: Real>(f: &SampledFunction<T>) -> SpectralVector<T> {
    Transform::new(f.grid())
        .and_then(|t| t.analyze(f))
        .expect("sampled function always has a valid grid")
}

/// `f(x_j) = Σ_n c_n e^{2πin x_j}` on a grid of size `grid`.
pub fn synthesize<T: Real>(v: &SpectralVector<T>, grid: usize) -> Result<SampledFunction<T>> {
    Transform::new(grid)?.synthesize(v)
}

/// `max_j |f(x_j)|`.
pub fn sup_norm<T: Real>(f: &SampledFunction<T>) -> T {
    f.samples().iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Riemann-sum `L^p` norm `((1/G) Σ |f_j|^p)^{1/p}`; `p = ∞` gives the sup norm.
pub fn lp_norm<T: Real>(f: &SampledFunction<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::BadExponent(crate::scalar::to_f64(p)));
    }
    let top = sup_norm(f);
    if p.is_infinite() || top == T::zero() {
        return Ok(top);
    }
    let g = real::<T>(f.grid() as f64);
    let mean: T = f.samples().iter().map(|z| (z.norm() / top).powf(p)).sum::<T>() / g;
    Ok(top * mean.powf(p.recip()))
}

/// Weak-`L^1` quasinorm on the grid: `max_t t · #{j : |f_j| > t} / G`.
///
/// The supremum is attained as `t` approaches some `|f_j|` from below, so the
/// exact value is a scan over the sorted magnitudes.
pub fn weak_l1<T: Real>(f: &SampledFunction<T>) -> T {
    let mut mags = f.abs();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite samples"));
    let g = real::<T>(f.grid() as f64);
    let mut best = T::zero();
    for i in 0..mags.len() {
        if i + 1 == mags.len() || mags[i + 1] < mags[i] {
            let v = mags[i] * real::<T>((i + 1) as f64) / g;
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// `(1/G) Σ_j f_j conj(g_j)`.
pub fn pairing<T: Real>(f: &SampledFunction<T>, g: &SampledFunction<T>) -> Result<Complex<T>> {
    same_grid(f, g)?;
    let sum = f
        .samples()
        .iter()
        .zip(g.samples())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b.conj());
    Ok(sum / real::<T>(f.grid() as f64))
}

/// `ν̂(n)` for every `n` in the inclusive range.
pub fn measure_coeffs<T: Real>(
    nu: &AtomicMeasure<T>,
    range: std::ops::RangeInclusive<i64>,
) -> SpectralVector<T> {
    range.map(|n| (n, nu.coeff(n))).collect()
}

#[derive(Serialize, Deserialize)]
struct EntryRepr<T> {
    n: i64,
    re: T,
    im: T,
}

#[derive(Serialize, Deserialize)]
struct SpectralRepr<T> {
    entries: Vec<EntryRepr<T>>,
}

impl<T: Real> Serialize for SpectralVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpectralRepr {
            entries: self.iter().map(|(n, c)| EntryRepr { n, re: c.re, im: c.im }).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for SpectralVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SpectralRepr::<T>::deserialize(d)?;
        Ok(repr.entries.into_iter().map(|e| (e.n, Complex::new(e.re, e.im))).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct SampledRepr<T> {
    #[serde(rename = "G")]
    grid: usize,
    samples: Vec<[T; 2]>,
}

impl<T: Real> Serialize for SampledFunction<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SampledRepr { grid: self.grid(), samples: self.samples.iter().map(|z| [z.re, z.im]).collect() }
            .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for SampledFunction<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SampledRepr::<T>::deserialize(d)?;
        if repr.samples.len() != repr.grid {
            return Err(D::Error::custom(format!(
                "G = {} but {} samples given",
                repr.grid,
                repr.samples.len()
            )));
        }
        SampledFunction::new(repr.samples.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn mode(n: i64, grid: usize) -> SampledFunction<f64> {
        SampledFunction::from_fn(grid, |x| cis_turns(n as f64 * x)).unwrap()
    }

    #[test]
    fn analyze_constant() {
        let f = SampledFunction::from_real(vec![1.0; 8]).unwrap();
        let v = analyze(&f);
        assert!((v.get(0) - c(1.0, 0.0)).norm() < 1e-15);
        for n in -3..=4 {
            if n != 0 {
                assert!(v.get(n).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn analyze_single_mode() {
        let v = analyze(&mode(3, 16));
        assert!((v.get(3) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(v.iter().filter(|&(n, _)| n != 3).all(|(_, z)| z.norm() < 1e-14));
    }

    #[test]
    fn synthesize_examples() {
        let v: SpectralVector<f64> = [(0, c(2.0, 0.0))].into_iter().collect();
        let f = synthesize(&v, 4).unwrap();
        assert!(f.samples().iter().all(|z| (z - c(2.0, 0.0)).norm() < 1e-15));

        let v: SpectralVector<f64> = [(1, c(1.0, 0.0)), (-1, c(1.0, 0.0))].into_iter().collect();
        let f = synthesize(&v, 8).unwrap();
        for (j, z) in f.samples().iter().enumerate() {
            let x = grid_point::<f64>(j, 8);
            assert!((z - c(2.0 * (std::f64::consts::TAU * x).cos(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn synthesize_rejects_out_of_band() {
        let g = 16;
        let v: SpectralVector<f64> = [(g as i64 / 2 + 1, c(1.0, 0.0))].into_iter().collect();
        assert!(matches!(synthesize(&v, g), Err(Error::FrequencyOverflow { .. })));
        let v: SpectralVector<f64> = [(-(g as i64) / 2, c(1.0, 0.0))].into_iter().collect();
        assert!(matches!(synthesize(&v, g), Err(Error::FrequencyOverflow { .. })));
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<C> = (0..64).map(|_| c(rng.random(), rng.random())).collect();
        let f = SampledFunction::new(samples).unwrap();
        let back = synthesize(&analyze(&f), 64).unwrap();
        for (a, b) in f.samples().iter().zip(back.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_grid() {
        assert!(SampledFunction::<f64>::zeros(12).is_err());
        assert!(SampledFunction::<f64>::zeros(1).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let f = SampledFunction::from_real(vec![3.0; 16]).unwrap();
        assert_eq!(sup_norm(&f), 3.0);
        let cos2 = SampledFunction::from_fn(64, |x: f64| c(2.0 * (std::f64::consts::TAU * x).cos(), 0.0)).unwrap();
        assert!((sup_norm(&cos2) - 2.0).abs() < 1e-14);
        let two = SampledFunction::from_fn(64, |x: f64| cis_turns(x) + cis_turns(2.0 * x)).unwrap();
        assert!((sup_norm(&two) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lp_norm_examples() {
        let one = SampledFunction::from_real(vec![1.0f64; 32]).unwrap();
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert!((lp_norm(&one, p).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((lp_norm(&mode(1, 32), 2.0).unwrap() - 1.0).abs() < 1e-14);
        let cos = SampledFunction::from_fn(64, |x: f64| c((std::f64::consts::TAU * x).cos(), 0.0)).unwrap();
        assert!((lp_norm(&cos, 2.0).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(matches!(lp_norm(&cos, 0.5), Err(Error::BadExponent(_))));
        assert_eq!(lp_norm(&cos, f64::INFINITY).unwrap(), sup_norm(&cos));
    }

    fn weak_l1_brute(f: &SampledFunction<f64>) -> f64 {
        let mags = f.abs();
        let g = mags.len() as f64;
        let mut best: f64 = 0.0;
        for &t in &mags {
            let count = mags.iter().filter(|&&m| m >= t).count() as f64;
            best = best.max(t * count / g);
        }
        best
    }

    #[test]
    fn weak_l1_examples() {
        let f = SampledFunction::from_real(vec![0.7f64; 16]).unwrap();
        assert!((weak_l1(&f) - 0.7).abs() < 1e-15);
        let half: Vec<f64> = (0..16).map(|j| if j % 2 == 0 { 2.0 } else { 0.0 }).collect();
        assert!((weak_l1(&SampledFunction::from_real(half).unwrap()) - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            // quantized values force ties
            let s: Vec<C> = (0..128).map(|_| c((rng.random_range(0..6) as f64) * 0.5, 0.0)).collect();
            let f = SampledFunction::new(s).unwrap();
            assert!((weak_l1(&f) - weak_l1_brute(&f)).abs() < 1e-14);
            assert!(weak_l1(&f) <= lp_norm(&f, 1.0).unwrap() + 1e-14);
        }
    }

    #[test]
    fn pairing_examples() {
        let f = mode(1, 32);
        let g = mode(2, 32);
        assert!(pairing(&f, &g).unwrap().norm() < 1e-15);
        let ff = pairing(&f, &f).unwrap();
        assert!((ff.re - lp_norm(&f, 2.0).unwrap().powi(2)).abs() < 1e-14);
        let h = SampledFunction::<f64>::zeros(16).unwrap();
        assert!(matches!(pairing(&f, &h), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn pairing_matches_spectral_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = 256;
        for _ in 0..10 {
            let a: SpectralVector<f64> =
                (0..8).map(|_| (rng.random_range(-100..=100), c(rng.random(), rng.random()))).collect();
            let b: SpectralVector<f64> =
                (0..8).map(|_| (rng.random_range(-100..=100), c(rng.random(), rng.random()))).collect();
            let via_grid = pairing(&synthesize(&a, g).unwrap(), &synthesize(&b, g).unwrap()).unwrap();
            assert!((via_grid - a.inner(&b)).norm() < 1e-10);
        }
    }

    #[test]
    fn measure_examples() {
        let d0 = AtomicMeasure::<f64>::dirac(0.0);
        let v = measure_coeffs(&d0, -5..=5);
        assert!((-5..=5).all(|n| (v.get(n) - c(1.0, 0.0)).norm() < 1e-15));

        let d = AtomicMeasure::<f64>::dirac(0.25);
        assert!((d.coeff(1) - c(0.0, -1.0)).norm() < 1e-15);

        // ½δ_{1/4} − ½δ_{−1/4}: ν̂(n) = ½(e^{−πin/2} − e^{πin/2}) = −i sin(πn/2)
        let nu = AtomicMeasure::new([(0.25, c(0.5, 0.0)), (-0.25, c(-0.5, 0.0))]).unwrap();
        for n in -6..=6 {
            let expect = c(0.0, -(std::f64::consts::PI * n as f64 / 2.0).sin());
            assert!((nu.coeff(n) - expect).norm() < 1e-14);
            assert!(nu.coeff(n).norm() <= nu.total_variation() + 1e-15);
        }
    }

    #[test]
    fn measure_positions_wrap() {
        let nu = AtomicMeasure::<f64>::new([(0.5, c(1.0, 0.0)), (1.25, c(1.0, 0.0))]).unwrap();
        assert_eq!(nu.atoms()[0].0, -0.5);
        assert_eq!(nu.atoms()[1].0, 0.25);
    }

    #[test]
    fn large_frequency_phase() {
        let d = AtomicMeasure::<f64>::dirac(0.25);
        // 4·(2^40 + 1)·¼ ≡ ¼ turn
        let n = 4 * ((1i64 << 40) + 1) + 1;
        assert!((d.coeff(n) - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn json_shapes() {
        let v: SpectralVector<f64> = [(3, c(1.0, -2.0))].into_iter().collect();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"entries":[{"n":3,"re":1.0,"im":-2.0}]}"#);
        let back: SpectralVector<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);

        let f = SampledFunction::from_real(vec![1.0, 2.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"G":2,"samples":[[1.0,0.0],[2.0,0.0]]}"#);
        let back: SampledFunction<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<SampledFunction<f64>>(r#"{"G":4,"samples":[[1,0]]}"#).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let f = SampledFunction::<f32>::from_fn(32, |x| cis_turns(5.0 * x)).unwrap();
        let v = analyze(&f);
        assert!((v.get(5).re - 1.0).abs() < 1e-5);
        assert!((lp_norm(&f, 2.0).unwrap() - 1.0).abs() < 1e-5);
    }
}
