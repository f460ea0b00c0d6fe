//! Riesz products `Π_{k=M}^{N} (1 + cos 2π F_k (x + α_k))` and the lower-bound
//! certificates they give for functions with sparse lacunary spectrum.
//!
//! Even products use `F_k = 4^k` and probe `f̂(2^{2k})`; odd products use
//! `F_k = 4^k / 2` and probe `f̂(2^{2k-1})`. Products are nonnegative with
//! `ĝ(0) = 1`, so `|∫ f ḡ| ≤ ‖f‖_∞`, and on the allowed spectrum only the
//! single-factor coefficients `ĝ(F_k) = ½ e^{2πi F_k α_k}` survive.
//!
//! Phases are stored as turns `θ_k = F_k α_k mod 1`, which keeps them exact for
//! frequencies far beyond what `α_k` itself could resolve.

use std::collections::HashMap;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cis_turns, frac, real, to_f64, Real};
use crate::spectrum::{Coefficients, SpectrumSpec, LOG2_10};
use crate::torus::{analyze, pairing, synthesize, SampledFunction, SpectralVector};

/// Widest product range `N - M` expanded by [`riesz_coeffs`].
pub const MAX_EXPANSION_SPAN: usize = 12;

/// Largest `log2 F_N` for which frequencies are materialized as integers.
pub const MAX_LOG2_FREQUENCY: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `log2 F_k`.
    pub fn log2_frequency(self, k: usize) -> usize {
        match self {
            Parity::Even => 2 * k,
            Parity::Odd => 2 * k - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszProduct<T> {
    parity: Parity,
    m: usize,
    n: usize,
    turns: Vec<T>,
}

impl<T: Real> RieszProduct<T> {
    /// Product with phases given as turns `θ_k = F_k α_k` (reduced mod 1).
    pub fn from_turns(parity: Parity, m: usize, n: usize, turns: Vec<T>) -> Result<Self> {
        if m > n {
            return Err(Error::InvalidProduct(format!("M = {m} exceeds N = {n}")));
        }
        if parity == Parity::Odd && m == 0 {
            return Err(Error::InvalidProduct("odd products need M ≥ 1".into()));
        }
        if turns.len() != n - m + 1 {
            return Err(Error::InvalidProduct(format!(
                "{} phases given for {} factors",
                turns.len(),
                n - m + 1
            )));
        }
        if turns.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidProduct("phases must be finite".into()));
        }
        Ok(Self { parity, m, n, turns: turns.into_iter().map(frac).collect() })
    }

    /// Product with shifts `α_k`; each is reduced modulo `1/F_k`.
    pub fn new(parity: Parity, m: usize, n: usize, alphas: Vec<T>) -> Result<Self> {
        if m <= n && alphas.len() == n - m + 1 && parity.log2_frequency(n.max(1)) > MAX_LOG2_FREQUENCY {
            return Err(Error::RangeTooWide { m, n });
        }
        let turns = alphas
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let f = real::<T>((parity.log2_frequency(m + i) as f64).exp2());
                a * f
            })
            .collect();
        Self::from_turns(parity, m, n, turns)
    }

    pub fn uniform(parity: Parity, m: usize, n: usize) -> Result<Self> {
        Self::from_turns(parity, m, n, vec![T::zero(); n.saturating_sub(m) + 1])
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn turns(&self) -> &[T] {
        &self.turns
    }

    pub fn turn(&self, k: usize) -> T {
        self.turns[k - self.m]
    }

    /// `F_k`, if it fits in `i64`.
    pub fn frequency(&self, k: usize) -> Option<i64> {
        let e = self.parity.log2_frequency(k);
        (e <= MAX_LOG2_FREQUENCY).then(|| 1i64 << e)
    }

    /// `α_k = θ_k / F_k ∈ [0, 1/F_k)`.
    pub fn alphas(&self) -> Vec<T> {
        (self.m..=self.n)
            .map(|k| self.turn(k) / real::<T>((self.parity.log2_frequency(k) as f64).exp2()))
            .collect()
    }

    /// Coefficient index targeted by factor `k` (`2k` even, `2k-1` odd).
    pub fn target_index(&self, k: usize) -> usize {
        self.parity.log2_frequency(k)
    }

    /// Smallest and largest targeted coefficient indices.
    pub fn target_range(&self) -> (usize, usize) {
        (self.target_index(self.m), self.target_index(self.n))
    }

    /// Checks `F_M > 10 r_{top}` in log scale, the condition under which only
    /// single-factor coefficients meet the allowed spectrum.
    pub fn check_separation(&self, spec: &SpectrumSpec) -> Result<()> {
        let (low, top) = self.target_range();
        let radii = spec.radii();
        if top >= radii.len() {
            return Err(Error::InvalidRadii(format!("radii needed up to index {top}")));
        }
        let bound = LOG2_10 + radii.log2_r(top);
        if !(low as f64 > bound) {
            return Err(Error::SeparationViolated { log2_lowest: low, top, log2_bound: bound });
        }
        Ok(())
    }

    /// `½ e^{2πiθ_k}`.
    fn half_mode(&self, k: usize) -> Complex<T> {
        cis_turns(self.turn(k)) * real::<T>(0.5)
    }

    /// Samples the product directly as a product of cosines.
    pub fn eval_on_grid(&self, grid: usize) -> Result<SampledFunction<T>> {
        let mut values = vec![T::one(); grid];
        crate::torus::check_grid(grid)?;
        let g = grid as u128;
        for k in self.m..=self.n {
            let e = self.parity.log2_frequency(k);
            // F_k mod G and (F_k / 2) mod 1 in exact integer arithmetic
            let f_mod = if e >= 127 { 0 } else { (1u128 << e) % g };
            let half_shift = if e == 0 { real::<T>(0.5) } else { T::zero() };
            let turn = self.turn(k);
            for (j, v) in values.iter_mut().enumerate() {
                let r = (f_mod * j as u128) % g;
                let phase = real::<T>(r as f64 / grid as f64) - half_shift + turn;
                *v = *v * (T::one() + (T::TAU() * phase).cos());
            }
        }
        SampledFunction::from_real(values)
    }
}

/// Exact sparse expansion of a Riesz product by iterated sparse convolution.
///
/// Every frequency `Σ ε_k F_k` (`ε_k ∈ {-1, 0, 1}`) has a unique representation
/// because consecutive `F_k` grow by 4 > 3, so each coefficient is a single
/// product of `½ e^{±2πiθ_k}` factors.
pub fn riesz_coeffs<T: Real>(p: &RieszProduct<T>) -> Result<SpectralVector<T>> {
    if p.n - p.m > MAX_EXPANSION_SPAN || p.parity.log2_frequency(p.n) > MAX_LOG2_FREQUENCY {
        return Err(Error::RangeTooWide { m: p.m, n: p.n });
    }
    let one = Complex::new(T::one(), T::zero());
    let mut terms: HashMap<i64, Complex<T>> = HashMap::from([(0, one)]);
    for k in p.m..=p.n {
        let f = p.frequency(k).expect("checked above");
        let up = p.half_mode(k);
        let down = up.conj();
        let mut next = HashMap::with_capacity(terms.len() * 3);
        for (&freq, &c) in &terms {
            for (q, v) in [(freq, c), (freq + f, c * up), (freq - f, c * down)] {
                let slot = next.entry(q).or_insert(Complex::new(T::zero(), T::zero()));
                *slot = *slot + v;
            }
        }
        terms = next;
    }
    let mut out = SpectralVector::new();
    for (freq, c) in terms {
        out.set(freq, c);
    }
    Ok(out)
}

/// Grid minimum and mean of a Riesz product; the mean is its `L^1` norm
/// whenever the minimum is nonnegative.
pub fn riesz_l1_check<T: Real>(p: &RieszProduct<T>, grid: usize) -> Result<(T, T)> {
    let top = p.parity.log2_frequency(p.n);
    let required = if top >= 120 { u128::MAX } else { 4u128 << top };
    if (grid as u128) < required {
        return Err(Error::GridTooCoarse { grid, required });
    }
    let g = p.eval_on_grid(grid)?;
    let min = g.samples().iter().map(|z| z.re).fold(T::infinity(), T::min);
    let integral = g.samples().iter().map(|z| z.re).sum::<T>() / real::<T>(grid as f64);
    Ok((min, integral))
}

/// Phase turns `θ_k = arg(f̂(F_k)) / 2π` aligning each factor with `f̂`; zero
/// coefficients get phase 0.
pub fn optimal_turns<T: Real>(
    coeff_at: impl Fn(usize) -> Complex<T>,
    m: usize,
    n: usize,
    parity: Parity,
) -> Vec<T> {
    (m..=n).map(|k| turn_of(coeff_at(parity.log2_frequency(k)))).collect()
}

fn modulus(c: Complex<f64>) -> f64 {
    if c.im == 0.0 {
        c.re.abs()
    } else {
        c.norm()
    }
}

fn turn_of<T: Real>(c: Complex<T>) -> T {
    if c.im == T::zero() && c.re >= T::zero() {
        T::zero()
    } else {
        frac(c.arg() / T::TAU())
    }
}

/// Shifts `α_k` with `F_k α_k ≡ arg(f̂(F_k))/2π (mod 1)`, each in `[0, 1/F_k)`.
pub fn optimal_phases<T: Real>(
    a_hat: &SpectralVector<T>,
    m: usize,
    n: usize,
    parity: Parity,
) -> Result<Vec<T>> {
    if parity.log2_frequency(n) > MAX_LOG2_FREQUENCY {
        return Err(Error::RangeTooWide { m, n });
    }
    let turns = optimal_turns(|e| a_hat.get(1i64 << e), m, n, parity);
    Ok(RieszProduct::from_turns(parity, m, n, turns)?.alphas())
}

/// Lower bound `‖f‖_∞ ≥ ¼ Σ_{k=2M}^{2N} |a_k|` for every continuous `f` with
/// `f̂(2^k) = a_k` and spectrum in the allowed set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateResult {
    pub lower_bound: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// `[¼ Σ |a_{2k}|, ¼ Σ |a_{2k-1}|]`; they add up to `lower_bound`.
    pub parity_contribs: [f64; 2],
    /// Turns of the even product over `k = M..=N`.
    #[serde(skip)]
    pub even_turns: Vec<f64>,
    /// Turns of the odd product over `k = M+1..=N`.
    #[serde(skip)]
    pub odd_turns: Vec<f64>,
}

/// Certificate from the even product over `[M, N]` and the odd product over
/// `[M+1, N]`, which together cover the indices `2M..=2N`. Purely arithmetic.
pub fn certificate_bound(
    a: &impl Coefficients,
    spec: &SpectrumSpec,
    m: usize,
    n: usize,
) -> Result<CertificateResult> {
    if m > n {
        return Err(Error::InvalidProduct(format!("M = {m} exceeds N = {n}")));
    }
    if 2 * n > spec.truncation() {
        return Err(Error::Input(format!(
            "window top 2N = {} exceeds the truncation N = {}",
            2 * n,
            spec.truncation()
        )));
    }
    let radii = spec.radii();
    radii.check_standing_hypothesis_through(2 * n + 1)?;
    let bound = LOG2_10 + radii.log2_r(2 * n);
    if !((2 * m) as f64 > bound) {
        return Err(Error::SeparationViolated { log2_lowest: 2 * m, top: 2 * n, log2_bound: bound });
    }
    let mut even_turns = Vec::with_capacity(n - m + 1);
    let even = crate::spectrum::neumaier_sum((m..=n).map(|k| {
        let c = a.coeff(2 * k);
        even_turns.push(turn_of(c));
        modulus(c)
    }));
    let mut odd_turns = Vec::with_capacity(n - m);
    let odd = crate::spectrum::neumaier_sum((m + 1..=n).map(|k| {
        let c = a.coeff(2 * k - 1);
        odd_turns.push(turn_of(c));
        modulus(c)
    }));
    Ok(CertificateResult {
        lower_bound: (even + odd) / 4.0,
        m,
        n,
        parity_contribs: [even / 4.0, odd / 4.0],
        even_turns,
        odd_turns,
    })
}

/// `|∫ f ḡ − ½ Σ_k f̂(F_k) e^{-2πiθ_k}|` on the grid of `f`, without checking
/// the separation precondition.
pub fn pairing_residual<T: Real>(f: &SampledFunction<T>, p: &RieszProduct<T>) -> Result<T> {
    let g = synthesize(&riesz_coeffs(p)?, f.grid())?;
    let lhs = pairing(f, &g)?;
    let f_hat = analyze(f);
    let mut rhs = Complex::new(T::zero(), T::zero());
    for k in p.m..=p.n {
        let freq = p.frequency(k).expect("expanded product has integer frequencies");
        rhs = rhs + f_hat.get(freq) * cis_turns(-p.turn(k));
    }
    Ok((lhs - rhs * real::<T>(0.5)).norm())
}

/// [`pairing_residual`] guarded by the separation precondition.
pub fn pairing_verify<T: Real>(
    f: &SampledFunction<T>,
    p: &RieszProduct<T>,
    spec: &SpectrumSpec,
) -> Result<T> {
    p.check_separation(spec)?;
    pairing_residual(f, p)
}

/// Converts stored turns to `f64` for reporting.
pub fn turns_f64<T: Real>(p: &RieszProduct<T>) -> Vec<f64> {
    p.turns().iter().map(|&t| to_f64(t)).collect()
}
