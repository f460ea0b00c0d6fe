//! Constructive extension problem: among trigonometric polynomials with
//! spectrum in the allowed set and pinned coefficients `f̂(2^k) = a_k`,
//! find one of small sup-norm.
//!
//! The sup-norm is approached through `L^p` norms for an increasing schedule
//! of even `p`, each stage minimized by accelerated gradient descent with
//! backtracking and warm-started from the previous one. Only the free
//! coefficients are variables, so pinned and forbidden frequencies are exact
//! by construction.
//!
//! Gradient convention: for a complex coordinate `c = u + iv` the gradient is
//! `∂/∂u + i ∂/∂v`, twice the Wirtinger derivative with respect to `c̄`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::riesz::{certificate_bound, CertificateResult};
use crate::scalar::{real, to_f64, Real};
use crate::spectrum::{
    allowed_set, Coefficients, CoefficientSequence, RadiusSequence, SpectrumSpec, WeightSequence,
};
use crate::torus::{bin_of, check_grid, sup_norm, SampledFunction, SpectralVector, Transform};

/// Backtracking halvings before a stage is declared divergent.
pub const MAX_HALVINGS: usize = 60;

/// Floor used when dividing by a lower bound.
pub const GAP_EPS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionProblem {
    pub a: CoefficientSequence,
    pub spec: SpectrumSpec,
    pub grid: usize,
    pub p_schedule: Vec<u32>,
    pub max_iters: usize,
    /// Relative objective decrease below which a stage stops.
    pub tol: f64,
}

impl ExtensionProblem {
    /// Problem with the default schedule `2, 4, ..., 1024` and grid `4·2^{N+1}`.
    pub fn new(a: CoefficientSequence, spec: SpectrumSpec) -> Result<Self> {
        let n = spec.truncation();
        if n >= 50 {
            return Err(Error::TruncationTooLarge(n));
        }
        let problem = Self {
            a,
            spec,
            grid: 4 << (n + 1),
            p_schedule: (1..=10).map(|e| 1u32 << e).collect(),
            max_iters: 400,
            tol: 1e-7,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_grid(mut self, grid: usize) -> Result<Self> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    pub fn with_schedule(mut self, p_schedule: Vec<u32>) -> Result<Self> {
        self.p_schedule = p_schedule;
        self.validate()?;
        Ok(self)
    }

    pub fn with_iterations(mut self, max_iters: usize, tol: f64) -> Self {
        self.max_iters = max_iters;
        self.tol = tol;
        self
    }

    pub fn truncation(&self) -> usize {
        self.spec.truncation()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.truncation();
        check_grid(self.grid)?;
        let required = 4u128 << (n + 1);
        if (self.grid as u128) < required {
            return Err(Error::GridTooCoarse { grid: self.grid, required });
        }
        if (n + 1..self.a.len()).any(|k| self.a.coeff(k) != Complex::new(0.0, 0.0)) {
            return Err(Error::Input(format!(
                "coefficients given beyond the truncation N = {n}"
            )));
        }
        if self.p_schedule.is_empty()
            || self.p_schedule.iter().any(|&p| p < 2 || p % 2 == 1)
            || self.p_schedule.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Input("p schedule must be increasing even integers ≥ 2".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Input("tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Pinned coefficients `(2^k, a_k)` for `k = 0..=N`.
    pub fn pinned<T: Real>(&self) -> Vec<(i64, Complex<T>)> {
        (0..=self.truncation())
            .map(|k| {
                let c = self.a.coeff(k);
                (1i64 << k, Complex::new(real(c.re), real(c.im)))
            })
            .collect()
    }

    /// Allowed frequencies other than the pinned ones, ascending.
    pub fn free_indices(&self) -> Result<Vec<i64>> {
        Ok(allowed_set(&self.spec)?
            .into_iter()
            .filter(|n| !(n.count_ones() == 1 && n.trailing_zeros() as usize <= self.truncation()))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageRecord {
    pub p: u32,
    /// `L^p` norm `((1/G) Σ |f_j|^p)^{1/p}` at the end of the stage.
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionSolution<T: Real> {
    pub coeffs: SpectralVector<T>,
    /// Sup-norm measured on the refined grid `4G`.
    pub upper: f64,
    /// Best certificate lower bound, 0 without a valid window.
    pub lower: f64,
    pub certificate: Option<CertificateResult>,
    pub history: Vec<StageRecord>,
}

/// `f = Σ a_k e^{2πi 2^k x}` with every free coefficient 0.
pub fn initial_guess<T: Real>(problem: &ExtensionProblem) -> SpectralVector<T> {
    problem.pinned::<T>().into_iter().collect()
}

/// `J = (1/G) Σ_j |f_j|^p` and its gradient over the free coefficients,
/// `p · analyze(|f|^{p-2} f)(n)`.
pub fn stage_objective_and_gradient<T: Real>(
    coeffs: &SpectralVector<T>,
    free: &[i64],
    grid: usize,
    p: u32,
) -> Result<(T, Vec<Complex<T>>)> {
    if p < 2 || p % 2 == 1 {
        return Err(Error::BadExponent(p as f64));
    }
    let t = Transform::new(grid)?;
    let f = t.synthesize_dense(&t.densify(coeffs)?)?;
    let gridf = real::<T>(grid as f64);
    let objective = f.iter().map(|z| z.norm().powi(p as i32)).sum::<T>() / gridf;
    let weighted: Vec<Complex<T>> = f.iter().map(|z| *z * z.norm().powi(p as i32 - 2)).collect();
    let spectrum = t.analyze_dense(&weighted)?;
    let scale = real::<T>(p as f64);
    let grad = free.iter().map(|&n| spectrum[bin_of(n, grid)] * scale).collect();
    Ok((objective, grad))
}

/// Evaluates the `L^p` norm of `pinned + Σ x_i e_{free_i}` and its gradient.
struct LpStage<'a, T: Real> {
    transform: &'a Transform<T>,
    base: &'a [Complex<T>],
    bins: &'a [usize],
    p: u32,
}

impl<T: Real> LpStage<'_, T> {
    fn samples(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let mut dense = self.base.to_vec();
        for (&b, &c) in self.bins.iter().zip(x) {
            dense[b] = c;
        }
        self.transform.synthesize_dense(&dense)
    }

    fn norm_of(&self, f: &[Complex<T>]) -> T {
        lp_norm_scaled(f, self.p)
    }

    fn value(&self, x: &[Complex<T>]) -> Result<T> {
        Ok(self.norm_of(&self.samples(x)?))
    }

    /// `(‖f‖_p, ∇‖f‖_p)`; the gradient is `analyze((|f|/L)^{p-2} f / L)`.
    fn value_and_gradient(&self, x: &[Complex<T>]) -> Result<(T, Vec<Complex<T>>)> {
        let f = self.samples(x)?;
        let l = self.norm_of(&f);
        if l == T::zero() {
            return Ok((l, vec![Complex::new(T::zero(), T::zero()); x.len()]));
        }
        let weighted: Vec<Complex<T>> =
            f.iter().map(|z| *z * ((z.norm() / l).powi(self.p as i32 - 2) / l)).collect();
        let spectrum = self.transform.analyze_dense(&weighted)?;
        Ok((l, self.bins.iter().map(|&b| spectrum[b]).collect()))
    }
}

/// `((1/G) Σ |f_j|^p)^{1/p}`, scaled by the maximum to avoid overflow.
fn lp_norm_scaled<T: Real>(f: &[Complex<T>], p: u32) -> T {
    let s = f.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if s == T::zero() {
        return s;
    }
    let mean = f.iter().map(|z| (z.norm() / s).powi(p as i32)).sum::<T>() / real::<T>(f.len() as f64);
    s * mean.powf(T::one() / real::<T>(p as f64))
}

fn sq_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Accelerated descent on one stage, starting from `x`.
fn run_stage<T: Real>(stage: &LpStage<'_, T>, x: &mut Vec<Complex<T>>, max_iters: usize, tol: f64) -> Result<(T, usize)> {
    let tol = real::<T>(tol);
    let slack = real::<T>(4.0) * T::eps();
    let mut fx = stage.value(x)?;
    if x.is_empty() || max_iters == 0 {
        return Ok((fx, 0));
    }
    let mut step = fx.max(T::eps()) / real::<T>(f64::from(stage.p - 1));
    let mut y = x.clone();
    let mut theta = T::one();
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        let (fy, gy) = stage.value_and_gradient(&y)?;
        let g2 = sq_norm(&gy);
        if !fy.is_finite() || !g2.is_finite() {
            return Err(Error::Diverged(format!("non-finite objective at p = {}", stage.p)));
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<Complex<T>> = y.iter().zip(&gy).map(|(&yi, &gi)| yi - gi * step).collect();
            let fc = stage.value(&cand)?;
            if fc <= fy - step * g2 / real::<T>(2.0) + slack * fy.abs() {
                accepted = Some((cand, fc));
                break;
            }
            step = step / real::<T>(2.0);
        }
        let Some((cand, fc)) = accepted else {
            return Err(Error::Diverged(format!(
                "step size halving exhausted at p = {}",
                stage.p
            )));
        };
        if fc > fx {
            // restart momentum from the last accepted point
            y.clone_from(x);
            theta = T::one();
            continue;
        }
        let decrease = (fx - fc) / fx.max(T::min_positive_value());
        let next_theta = (T::one() + (T::one() + real::<T>(4.0) * theta * theta).sqrt()) / real::<T>(2.0);
        let beta = (theta - T::one()) / next_theta;
        y = cand.iter().zip(x.iter()).map(|(&c, &xo)| c + (c - xo) * beta).collect();
        *x = cand;
        fx = fc;
        theta = next_theta;
        step = step * real::<T>(1.5);
        if decrease <= tol {
            break;
        }
    }
    Ok((fx, iters))
}

/// Best certificate over all windows `[M, N']` with `2N' ≤ N`.
pub fn best_certificate(a: &impl Coefficients, spec: &SpectrumSpec) -> Option<CertificateResult> {
    let top = spec.truncation() / 2;
    let mut best: Option<CertificateResult> = None;
    for n in 0..=top {
        for m in 0..=n {
            if let Ok(c) = certificate_bound(a, spec, m, n) {
                if best.as_ref().is_none_or(|b| c.lower_bound > b.lower_bound) {
                    best = Some(c);
                }
            }
        }
    }
    best
}

/// Sup-norm of a spectral vector on `grid` points.
pub fn measure_sup<T: Real>(coeffs: &SpectralVector<T>, grid: usize) -> Result<f64> {
    let t = Transform::new(grid)?;
    Ok(to_f64(sup_norm(&t.synthesize(coeffs)?)))
}

pub fn solve<T: Real>(problem: &ExtensionProblem) -> Result<ExtensionSolution<T>> {
    problem.validate()?;
    let grid = problem.grid;
    let transform = Transform::<T>::new(grid)?;
    let pinned = initial_guess::<T>(problem);
    let base = transform.densify(&pinned)?;
    let free = problem.free_indices()?;
    let bins: Vec<usize> = free.iter().map(|&n| bin_of(n, grid)).collect();

    let assemble = |x: &[Complex<T>]| -> SpectralVector<T> {
        let mut v = pinned.clone();
        for (&n, &c) in free.iter().zip(x) {
            v.set(n, c);
        }
        v
    };

    let mut x = vec![Complex::new(T::zero(), T::zero()); free.len()];
    let mut best_x = x.clone();
    let mut best_sup = sup_on(&transform, &base, &bins, &x)?;
    let mut history = Vec::with_capacity(problem.p_schedule.len());
    for &p in &problem.p_schedule {
        let stage = LpStage { transform: &transform, base: &base, bins: &bins, p };
        let (objective, iterations) = run_stage(&stage, &mut x, problem.max_iters, problem.tol)?;
        history.push(StageRecord { p, objective: to_f64(objective), iterations });
        let s = sup_on(&transform, &base, &bins, &x)?;
        if s < best_sup {
            best_sup = s;
            best_x.clone_from(&x);
        }
    }

    let coeffs = assemble(&best_x);
    let upper = measure_sup(&coeffs, 4 * grid)?;
    let certificate = best_certificate(&problem.a, &problem.spec);
    let lower = certificate.as_ref().map_or(0.0, |c| c.lower_bound);
    Ok(ExtensionSolution { coeffs, upper, lower, certificate, history })
}

fn sup_on<T: Real>(t: &Transform<T>, base: &[Complex<T>], bins: &[usize], x: &[Complex<T>]) -> Result<T> {
    let mut dense = base.to_vec();
    for (&b, &c) in bins.iter().zip(x) {
        dense[b] = c;
    }
    let f = t.synthesize_dense(&dense)?;
    Ok(f.iter().map(|z| z.norm()).fold(T::zero(), T::max))
}

/// Samples of a solution on its refined grid, for plotting.
pub fn solution_samples<T: Real>(solution: &ExtensionSolution<T>, grid: usize) -> Result<SampledFunction<T>> {
    Transform::new(grid)?.synthesize(&solution.coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Certificate on `[M, N]` against the measured sup-norm; `gap = upper / lower`
/// and `gap = 1` when both vanish.
pub fn sandwich_report<T: Real>(
    solution: &ExtensionSolution<T>,
    spec: &SpectrumSpec,
    m: usize,
    n: usize,
) -> Result<Sandwich> {
    let a = pinned_sequence(&solution.coeffs, spec.truncation());
    let lower = certificate_bound(&a, spec, m, n)?.lower_bound;
    let upper = solution.upper;
    let gap = if lower == 0.0 && upper == 0.0 { 1.0 } else { upper / lower.max(GAP_EPS) };
    Ok(Sandwich { lower, upper, gap })
}

/// Reads `a_k = f̂(2^k)` back out of a solution.
pub fn pinned_sequence<T: Real>(coeffs: &SpectralVector<T>, truncation: usize) -> CoefficientSequence {
    let a = (0..=truncation)
        .map(|k| {
            let c = coeffs.get(1i64 << k);
            Complex::new(to_f64(c.re), to_f64(c.im))
        })
        .collect();
    CoefficientSequence::new(a).expect("finite coefficients")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    /// `upper / √(Σ |a_k w_k|^2)`; the draws are normalized so the denominator is 1.
    pub ratio: f64,
    pub lower: f64,
}

/// Random `a_0..a_N`, complex Gaussian, normalized to `Σ |a_k w_k|^2 = 1`.
pub fn random_coefficients(n: usize, weights: &WeightSequence, rng: &mut ChaCha8Rng) -> CoefficientSequence {
    let raw: Vec<Complex<f64>> = (0..=n)
        .map(|_| Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let energy: f64 = raw.iter().enumerate().map(|(k, c)| c.norm_sqr() * weights.w(k).powi(2)).sum();
    let s = energy.sqrt();
    CoefficientSequence::new(raw.into_iter().map(|c| c / s).collect()).expect("finite coefficients")
}

/// Seed for one `(N, trial)` cell of a study.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    seed ^ ((n as u64) << 40) ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub p_schedule: Vec<u32>,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { p_schedule: (1..=10).map(|e| 1u32 << e).collect(), max_iters: 400, tol: 1e-7 }
    }
}

/// Solves `trials` random instances for each `N` and reports the ratio
/// `upper / ‖(a_k w_k)‖_2`. Trials run in parallel; rows are ordered by
/// `(N, trial)` and depend only on `seed`.
pub fn scaling_study(
    weights: &WeightSequence,
    radii: &RadiusSequence,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<Vec<ScalingRow>> {
    let cells: Vec<(usize, usize)> =
        n_list.iter().flat_map(|&n| (0..trials).map(move |t| (n, t))).collect();
    cells
        .par_iter()
        .map(|&(n, trial)| {
            let spec = SpectrumSpec::new(radii.clone(), n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, n, trial));
            let a = random_coefficients(n, weights, &mut rng);
            let problem = ExtensionProblem::new(a, spec)?
                .with_schedule(settings.p_schedule.clone())?
                .with_iterations(settings.max_iters, settings.tol);
            let sol = solve::<f64>(&problem)?;
            Ok(ScalingRow { n, trial, ratio: sol.upper, lower: sol.lower })
        })
        .collect()
}

/// Median ratio of the rows with truncation `n`.
pub fn median_ratio(rows: &[ScalingRow], n: usize) -> Option<f64> {
    let mut v: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.ratio).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}
