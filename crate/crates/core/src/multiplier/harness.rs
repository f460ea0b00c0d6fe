//! Empirical side of the interpolation inequality
//! `‖Mν‖_{4/3} ≤ A ‖ν‖^{1/2} ‖Mν‖_2^{1/2}` and the weak-type estimate
//! `‖S M ν‖_{L^{1,∞}} ≤ A'' ‖ν‖`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{multiplied_spectrum, square_function_spectral, MeasureInput, MultiplierSpec};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};
use crate::torus::{check_grid, lp_norm, weak_l1, AtomicMeasure, SampledFunction, SpectralVector, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Dirac,
    Atomic,
    Fejer,
    Density,
}

/// A finite measure with exactly known total variation.
#[derive(Debug, Clone, PartialEq)]
pub enum TestMeasure<T> {
    Atomic { kind: MeasureKind, measure: AtomicMeasure<T> },
    /// Density given by its Fourier coefficients.
    Density { kind: MeasureKind, coeffs: SpectralVector<T>, tv: T },
}

impl<T: Real> TestMeasure<T> {
    pub fn kind(&self) -> MeasureKind {
        match self {
            TestMeasure::Atomic { kind, .. } | TestMeasure::Density { kind, .. } => *kind,
        }
    }

    pub fn total_variation(&self) -> T {
        match self {
            TestMeasure::Atomic { measure, .. } => measure.total_variation(),
            TestMeasure::Density { tv, .. } => *tv,
        }
    }

    pub fn input(&self) -> MeasureInput<'_, T> {
        match self {
            TestMeasure::Atomic { measure, .. } => MeasureInput::Atomic(measure),
            TestMeasure::Density { coeffs, .. } => MeasureInput::Spectral(coeffs),
        }
    }
}

fn gaussian<T: Real>(rng: &mut ChaCha8Rng) -> Complex<T> {
    let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
    Complex::new(real(a), real(b))
}

/// Random frequency near one of the centers `2^0..2^top`.
fn random_center(rng: &mut ChaCha8Rng, top: usize) -> i64 {
    let k = rng.random_range(0..=top);
    (1i64 << k) + rng.random_range(-3..=3)
}

/// Seeded family cycling through unit Diracs, random atomic measures (at most
/// 64 atoms), modulated Fejér kernels and modulated `|p|²` densities. Densities
/// are modulated so their spectrum lands near `2^k` for `k ≤ top`.
pub fn test_family<T: Real>(count: usize, seed: u64, top: usize) -> Vec<TestMeasure<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| match i % 4 {
            0 => TestMeasure::Atomic {
                kind: MeasureKind::Dirac,
                measure: AtomicMeasure::dirac(real(rng.random_range(-0.5..0.5))),
            },
            1 => {
                let atoms = rng.random_range(1..=64);
                let list: Vec<(T, Complex<T>)> =
                    (0..atoms).map(|_| (real(rng.random_range(-0.5..0.5)), gaussian(&mut rng))).collect();
                TestMeasure::Atomic {
                    kind: MeasureKind::Atomic,
                    measure: AtomicMeasure::new(list).expect("finite atoms"),
                }
            }
            2 => {
                // F_K(x - x0) e^{2πi m0 x}: nonnegative modulus with unit mass
                let k = rng.random_range(2..=256i64);
                let x0: f64 = rng.random_range(-0.5..0.5);
                let m0 = random_center(&mut rng, top);
                let coeffs = (-k..=k)
                    .map(|n| {
                        let amp = 1.0 - n.unsigned_abs() as f64 / (k + 1) as f64;
                        let turn = -(n as f64 * x0).rem_euclid(1.0);
                        (n + m0, crate::scalar::cis_turns(real::<T>(turn)) * real::<T>(amp))
                    })
                    .collect();
                TestMeasure::Density { kind: MeasureKind::Fejer, coeffs, tv: T::one() }
            }
            _ => {
                // |p|² / ‖p‖² e^{2πi m0 x}: the coefficients are the autocorrelation of p
                let d = rng.random_range(0..=32usize);
                let p: Vec<Complex<T>> = (0..=d).map(|_| gaussian(&mut rng)).collect();
                let mass: T = p.iter().map(|c| c.norm_sqr()).sum();
                let m0 = random_center(&mut rng, top);
                let mut coeffs = SpectralVector::new();
                for lag in -(d as i64)..=d as i64 {
                    let mut c = Complex::new(T::zero(), T::zero());
                    for j in 0..=d as i64 {
                        let i = j + lag;
                        if (0..=d as i64).contains(&i) {
                            c = c + p[i as usize] * p[j as usize].conj();
                        }
                    }
                    coeffs.set(lag + m0, c / mass);
                }
                TestMeasure::Density { kind: MeasureKind::Density, coeffs, tv: T::one() }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationReport {
    /// `sup ‖Mν‖_{4/3} / (‖ν‖^{1/2} ‖Mν‖_2^{1/2})`.
    pub sup_ratio_interp: f64,
    pub interp_witness: Option<usize>,
    /// `sup ‖S M ν‖_{L^{1,∞}} / ‖ν‖`.
    pub sup_ratio_weak: f64,
    pub weak_witness: Option<usize>,
    /// Members with `Mν = 0` or `ν = 0`, excluded from both sups.
    pub degenerate: Vec<usize>,
    pub evaluated: usize,
}

/// Both ratios for every member of the family, with witnesses.
pub fn interpolation_harness<T: Real>(
    mspec: &MultiplierSpec,
    family: &[TestMeasure<T>],
    grid: usize,
) -> Result<InterpolationReport> {
    check_grid(grid)?;
    if mspec.max_frequency() >= grid as i64 / 2 {
        return Err(Error::FrequencyOverflow { n: mspec.max_frequency(), grid });
    }
    let transform = Transform::<T>::new(grid)?;
    let ratios: Vec<Option<(f64, f64)>> = family
        .par_iter()
        .map(|nu| -> Result<Option<(f64, f64)>> {
            let tv = nu.total_variation();
            let spectrum = multiplied_spectrum(nu.input(), mspec)?.pruned(T::zero());
            if tv == T::zero() || spectrum.is_empty() {
                return Ok(None);
            }
            let f = transform.synthesize(&spectrum)?;
            let l43 = lp_norm(&f, real::<T>(4.0 / 3.0))?;
            let l2 = lp_norm(&f, real::<T>(2.0))?;
            if l2 == T::zero() {
                return Ok(None);
            }
            let interp = l43 / (tv.sqrt() * l2.sqrt());
            let s = SampledFunction::from_real(square_function_spectral(&spectrum, grid)?)?;
            let weak = weak_l1(&s) / tv;
            Ok(Some((to_f64(interp), to_f64(weak))))
        })
        .collect::<Result<_>>()?;

    let mut report = InterpolationReport {
        sup_ratio_interp: 0.0,
        interp_witness: None,
        sup_ratio_weak: 0.0,
        weak_witness: None,
        degenerate: Vec::new(),
        evaluated: 0,
    };
    for (i, r) in ratios.into_iter().enumerate() {
        let Some((interp, weak)) = r else {
            report.degenerate.push(i);
            continue;
        };
        report.evaluated += 1;
        if report.interp_witness.is_none() || interp > report.sup_ratio_interp {
            report.sup_ratio_interp = interp;
            report.interp_witness = Some(i);
        }
        if report.weak_witness.is_none() || weak > report.sup_ratio_weak {
            report.sup_ratio_weak = weak;
            report.weak_witness = Some(i);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LacunaryReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub trials: usize,
}

/// `‖f‖_{4/3} / ‖f‖_2` for random `f = Σ_{k=0}^{N} b_k e^{2πi 2^k x}` with
/// complex Gaussian `b_k`.
pub fn lacunary_ratio(trials: usize, n: usize, seed: u64, grid: usize) -> Result<LacunaryReport> {
    if n > 16 {
        return Err(Error::Input(format!("lacunary_ratio needs N ≤ 16, got {n}")));
    }
    check_grid(grid)?;
    if (grid as u64) <= 2u64 << n {
        return Err(Error::GridTooCoarse { grid, required: 4u128 << n });
    }
    let transform = Transform::<f64>::new(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..trials {
        let v: SpectralVector<f64> = (0..=n).map(|k| (1i64 << k, gaussian::<f64>(&mut rng))).collect();
        let f = transform.synthesize(&v)?;
        let r = lp_norm(&f, 4.0 / 3.0)? / lp_norm(&f, 2.0)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(LacunaryReport { min_ratio: lo, max_ratio: hi, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{apply_m, build_m};
    use crate::spectrum::{RadiusSequence, SpectrumSpec, WeightSequence};
    use crate::torus::synthesize;

    fn mspec(n: usize) -> MultiplierSpec {
        let spec = SpectrumSpec::new(RadiusSequence::affine_log(1.0, -10.5, n + 2).unwrap(), n).unwrap();
        build_m(&spec, &WeightSequence::constant(1.0, n + 2).unwrap(), n).unwrap()
    }

    #[test]
    fn densities_have_the_declared_mass() {
        let grid = 1 << 12;
        for nu in test_family::<f64>(40, 9, 9) {
            if let TestMeasure::Density { coeffs, tv, kind } = &nu {
                let f = synthesize(coeffs, grid).unwrap();
                let mass = f.samples().iter().map(|z| z.norm()).sum::<f64>() / grid as f64;
                assert!((mass - tv).abs() < 1e-9, "{kind:?}: {mass}");
            }
        }
    }

    #[test]
    fn family_is_seeded() {
        let a = test_family::<f64>(50, 1, 10);
        let b = test_family::<f64>(50, 1, 10);
        let c = test_family::<f64>(50, 2, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let kinds: Vec<_> = a.iter().take(4).map(TestMeasure::kind).collect();
        assert_eq!(kinds, [MeasureKind::Dirac, MeasureKind::Atomic, MeasureKind::Fejer, MeasureKind::Density]);
    }

    #[test]
    fn zero_measure_is_degenerate() {
        let m = mspec(10);
        let family = vec![TestMeasure::Atomic {
            kind: MeasureKind::Atomic,
            measure: AtomicMeasure::new(Vec::<(f64, Complex<f64>)>::new()).unwrap(),
        }];
        let rep = interpolation_harness(&m, &family, 1 << 13).unwrap();
        assert_eq!(rep.degenerate, vec![0]);
        assert_eq!((rep.sup_ratio_interp, rep.sup_ratio_weak, rep.evaluated), (0.0, 0.0, 0));
    }

    #[test]
    fn dirac_ratio_by_direct_evaluation() {
        let m = mspec(10);
        let grid = 1 << 13;
        let nu = AtomicMeasure::dirac(0.125f64);
        let family = vec![TestMeasure::Atomic { kind: MeasureKind::Dirac, measure: nu.clone() }];
        let rep = interpolation_harness(&m, &family, grid).unwrap();
        let f = apply_m(MeasureInput::Atomic(&nu), &m, grid).unwrap();
        let direct = lp_norm(&f, 4.0 / 3.0).unwrap() / lp_norm(&f, 2.0).unwrap().sqrt();
        assert!((rep.sup_ratio_interp - direct).abs() < 1e-12);
        assert!(rep.sup_ratio_weak.is_finite() && rep.sup_ratio_weak > 0.0);
        assert_eq!(rep.interp_witness, Some(0));
    }

    #[test]
    fn harness_ratios_are_finite() {
        let m = mspec(10);
        let family = test_family::<f64>(40, 3, 10);
        let rep = interpolation_harness(&m, &family, 1 << 13).unwrap();
        assert!(rep.sup_ratio_interp.is_finite() && rep.sup_ratio_weak.is_finite());
        assert!(rep.evaluated + rep.degenerate.len() == 40);
    }

    #[test]
    fn lacunary_single_and_double_terms() {
        let grid = 1 << 12;
        let t = Transform::<f64>::new(grid).unwrap();
        let single: SpectralVector<f64> = [(8, Complex::new(0.3, 0.4))].into_iter().collect();
        let f = t.synthesize(&single).unwrap();
        assert!((lp_norm(&f, 4.0 / 3.0).unwrap() / lp_norm(&f, 2.0).unwrap() - 1.0).abs() < 1e-12);

        // |1 + e^{2πix}| = 2|cos πx|, integrated by the midpoint rule
        let q = 2_000_000;
        let integral: f64 = (0..q)
            .map(|i| (2.0 * (std::f64::consts::PI * (i as f64 + 0.5) / q as f64).cos().abs()).powf(4.0 / 3.0))
            .sum::<f64>()
            / q as f64;
        let expect = integral.powf(0.75) / 2f64.sqrt();
        let double: SpectralVector<f64> =
            [(1, Complex::new(1.0, 0.0)), (2, Complex::new(1.0, 0.0))].into_iter().collect();
        let f = t.synthesize(&double).unwrap();
        let got = lp_norm(&f, 4.0 / 3.0).unwrap() / lp_norm(&f, 2.0).unwrap();
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
    }

    #[test]
    fn lacunary_ratio_bounds() {
        let rep = lacunary_ratio(30, 8, 4, 1 << 11).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-9 && rep.min_ratio > 0.2);
        assert!(lacunary_ratio(1, 17, 0, 1 << 20).is_err());
        assert!(lacunary_ratio(1, 10, 0, 1 << 11).is_err());
    }
}
