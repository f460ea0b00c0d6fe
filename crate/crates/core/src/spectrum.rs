//! Integer and log-scale arithmetic about the sparse spectrum.
//!
//! Radii are handled exclusively through `log2 r_k`, so frequencies `2^k` are
//! never formed for large `k`. Sequences are either explicit tables or closed
//! form generators that can be evaluated lazily far beyond what fits in memory.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log2(10)`, used by the separation test `4^M > 10 r_{2N}`.
pub const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Largest truncation index accepted by [`allowed_set`].
pub const MAX_TRUNCATION: usize = 60;

/// Maximum number of integers [`allowed_set`] will enumerate.
pub const MAX_ALLOWED_SET: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadiusGenerator {
    /// `r_k = 2^{slope·k + offset}`.
    AffineLog { slope: f64, offset: f64 },
    /// `log2 r_k = floor_value` for `k < start`, `k + shift` from `start` on.
    Step { start: usize, shift: f64, floor_value: f64 },
}

impl RadiusGenerator {
    fn eval(&self, k: usize) -> f64 {
        match *self {
            RadiusGenerator::AffineLog { slope, offset } => slope * k as f64 + offset,
            RadiusGenerator::Step { start, shift, floor_value } => {
                if k < start {
                    floor_value
                } else {
                    k as f64 + shift
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RadiusStore {
    Table(Vec<f64>),
    Generated(RadiusGenerator),
}

/// Monotone radii `r_k`, `k = 0..len`, stored as `log2 r_k`.
///
/// `-∞` (or any very negative value) stands for an empty window.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSequence {
    store: RadiusStore,
    len: usize,
}

impl RadiusSequence {
    pub fn from_log2(log2_r: Vec<f64>) -> Result<Self> {
        let len = log2_r.len();
        let seq = Self { store: RadiusStore::Table(log2_r), len };
        seq.validate()?;
        Ok(seq)
    }

    /// From plain radii `r_k ≥ 0`.
    pub fn from_radii(r: &[f64]) -> Result<Self> {
        if r.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidRadii("radii must be non-negative".into()));
        }
        Self::from_log2(r.iter().map(|v| v.log2()).collect())
    }

    pub fn generated(generator: RadiusGenerator, len: usize) -> Result<Self> {
        let seq = Self { store: RadiusStore::Generated(generator), len };
        seq.validate()?;
        Ok(seq)
    }

    pub fn affine_log(slope: f64, offset: f64, len: usize) -> Result<Self> {
        Self::generated(RadiusGenerator::AffineLog { slope, offset }, len)
    }

    fn validate(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::InvalidRadii("empty radius sequence".into()));
        }
        match &self.store {
            RadiusStore::Table(v) => {
                if let Some(k) = v.iter().position(|x| x.is_nan() || *x == f64::INFINITY) {
                    return Err(Error::InvalidRadii(format!("log2_r[{k}] is not a number")));
                }
                if let Some(k) = v.windows(2).position(|w| w[1] < w[0]) {
                    return Err(Error::InvalidRadii(format!(
                        "radii must be nondecreasing (log2_r[{}] < log2_r[{k}])",
                        k + 1
                    )));
                }
            }
            RadiusStore::Generated(g) => match *g {
                RadiusGenerator::AffineLog { slope, offset } => {
                    if !slope.is_finite() || !offset.is_finite() || slope < 0.0 {
                        return Err(Error::InvalidRadii(
                            "affine-log generator needs finite offset and slope ≥ 0".into(),
                        ));
                    }
                }
                RadiusGenerator::Step { start, shift, floor_value } => {
                    if shift.is_nan() || floor_value.is_nan() || floor_value > start as f64 + shift {
                        return Err(Error::InvalidRadii("step generator must be nondecreasing".into()));
                    }
                }
            },
        }
        Ok(())
    }

    /// Number of stored indices (`K_max + 1`).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k_max(&self) -> usize {
        self.len - 1
    }

    pub fn log2_r(&self, k: usize) -> f64 {
        assert!(k < self.len, "radius index {k} beyond K_max = {}", self.len - 1);
        match &self.store {
            RadiusStore::Table(v) => v[k],
            RadiusStore::Generated(g) => g.eval(k),
        }
    }

    /// `⌊log2 r_k⌋`; ties at integers resolve downward.
    pub fn floor_log2_r(&self, k: usize) -> i64 {
        let l = self.log2_r(k);
        if l <= -((1u64 << 62) as f64) {
            i64::MIN / 2
        } else {
            l.floor() as i64
        }
    }

    /// `r_k` itself (may overflow to `inf` for huge `k`).
    pub fn radius(&self, k: usize) -> f64 {
        self.log2_r(k).exp2()
    }

    /// Checks `r_k < 2^{k-10}` for every stored `k`.
    pub fn check_standing_hypothesis(&self) -> Result<()> {
        self.check_standing_hypothesis_through(self.len - 1)
    }

    /// Checks `r_k < 2^{k-10}` for `k ≤ min(last, K_max)`.
    pub fn check_standing_hypothesis_through(&self, last: usize) -> Result<()> {
        let last = last.min(self.len - 1);
        let bad = |k: usize| self.log2_r(k) >= k as f64 - 10.0;
        let offending = match &self.store {
            RadiusStore::Table(_) => (0..=last).find(|&k| bad(k)),
            // both generators are affine in k on each piece, so endpoints decide
            RadiusStore::Generated(RadiusGenerator::AffineLog { .. }) => [0, last].into_iter().find(|&k| bad(k)),
            RadiusStore::Generated(RadiusGenerator::Step { start, .. }) => {
                let s = (*start).min(last);
                [0, s.saturating_sub(1), s, last].into_iter().find(|&k| bad(k))
            }
        };
        match offending {
            Some(k) => Err(Error::InvalidRadii(format!(
                "r_{k} = 2^{:.4} violates r_k < 2^(k-10)",
                self.log2_r(k)
            ))),
            None => Ok(()),
        }
    }

    /// Table view for serialization; generated sequences are materialized.
    pub fn to_table(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.log2_r(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightGenerator {
    Constant { value: f64 },
    /// `w_k = scale·(k+1)^exponent`.
    Power { scale: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum WeightStore {
    /// weights and prefix sums of `w^{-2}` (`prefix[k] = Σ_{j<k}`)
    Table { w: Vec<f64>, prefix: Vec<f64> },
    Generated(WeightGenerator),
}

/// Positive weights `w_k`, `k = 0..len`, with `w_k = ∞` for `k < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    store: WeightStore,
    len: usize,
}

impl WeightSequence {
    pub fn from_table(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight sequence".into()));
        }
        if let Some(k) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidWeights(format!("w[{k}] = {} is not positive and finite", w[k])));
        }
        let mut prefix = Vec::with_capacity(w.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &w {
            acc += v.powi(-2);
            prefix.push(acc);
        }
        let len = w.len();
        Ok(Self { store: WeightStore::Table { w, prefix }, len })
    }

    pub fn generated(generator: WeightGenerator, len: usize) -> Result<Self> {
        let ok = match generator {
            WeightGenerator::Constant { value } => value > 0.0 && value.is_finite(),
            WeightGenerator::Power { scale, exponent } => {
                scale > 0.0 && scale.is_finite() && exponent.is_finite()
            }
        };
        if !ok || len == 0 {
            return Err(Error::InvalidWeights(format!("invalid generator {generator:?}")));
        }
        Ok(Self { store: WeightStore::Generated(generator), len })
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::generated(WeightGenerator::Constant { value }, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn w(&self, k: usize) -> f64 {
        assert!(k < self.len, "weight index {k} beyond K_max = {}", self.len - 1);
        match &self.store {
            WeightStore::Table { w, .. } => w[k],
            WeightStore::Generated(WeightGenerator::Constant { value }) => *value,
            WeightStore::Generated(WeightGenerator::Power { scale, exponent }) => {
                scale * ((k + 1) as f64).powf(*exponent)
            }
        }
    }

    /// `w_k^{-2}`, zero for negative `k`.
    pub fn inv_sq(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.w(k as usize).powi(-2)
        }
    }

    /// `Σ_{n=lo}^{hi} w_n^{-2}` with negative indices contributing zero.
    pub fn inv_sq_sum(&self, lo: i64, hi: i64) -> f64 {
        let lo = lo.max(0);
        if hi < lo {
            return 0.0;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        assert!(hi < self.len, "weight index {hi} beyond K_max = {}", self.len - 1);
        match &self.store {
            WeightStore::Table { prefix, .. } => prefix[hi + 1] - prefix[lo],
            WeightStore::Generated(WeightGenerator::Constant { value }) => {
                (hi - lo + 1) as f64 / (value * value)
            }
            WeightStore::Generated(WeightGenerator::Power { .. }) => {
                (lo..=hi).map(|k| self.w(k).powi(-2)).sum()
            }
        }
    }

    pub fn to_table(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.w(k)).collect()
    }
}

/// Radii, truncation index and the derived `λ_s` sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    radii: RadiusSequence,
    truncation: usize,
    lambda: Vec<usize>,
}

impl SpectrumSpec {
    pub fn new(radii: RadiusSequence, truncation: usize) -> Result<Self> {
        if truncation >= radii.len() {
            return Err(Error::InvalidRadii(format!(
                "truncation N = {truncation} needs radii up to index N, only {} given",
                radii.len()
            )));
        }
        let lambda = lambda_sequence(&radii, radii.k_max());
        Ok(Self { radii, truncation, lambda })
    }

    pub fn radii(&self) -> &RadiusSequence {
        &self.radii
    }

    /// The truncation index `N`: coefficients are pinned at `2^k` for `k ≤ N`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn lambda(&self) -> &[usize] {
        &self.lambda
    }

    /// Index `s` of the scale block containing `k`, i.e. `λ_s ≤ k < λ_{s+1}`.
    pub fn block_of(&self, k: usize) -> usize {
        self.lambda.partition_point(|&l| l <= k) - 1
    }

    /// Half-open index ranges `[λ_s, λ_{s+1})` covering `0..=N`; the last is cut at `N`.
    pub fn lambda_blocks(&self) -> Vec<(usize, usize)> {
        let n = self.truncation;
        let mut out = Vec::new();
        for (s, &start) in self.lambda.iter().enumerate() {
            if start > n {
                break;
            }
            let end = self.lambda.get(s + 1).copied().unwrap_or(usize::MAX).min(n + 1);
            out.push((start, end));
        }
        out
    }
}

/// `λ_0 = 0`, `λ_{s+1} = min{λ > λ_s : log2 r_λ ≥ λ_s}`, up to `k_max`.
///
/// A short output signals bounded radii.
pub fn lambda_sequence(radii: &RadiusSequence, k_max: usize) -> Vec<usize> {
    let end = (k_max + 1).min(radii.len());
    let mut out = vec![0usize];
    loop {
        let cur = *out.last().unwrap();
        let lo = cur + 1;
        if lo >= end {
            break;
        }
        // monotone radii: binary search for the first index reaching 2^cur
        let (mut a, mut b) = (lo, end);
        while a < b {
            let mid = a + (b - a) / 2;
            if radii.log2_r(mid) >= cur as f64 {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        if a >= end {
            break;
        }
        out.push(a);
    }
    out
}

/// `2^k` as an integer, if it fits in `i64`.
fn pow2(k: usize) -> Option<i64> {
    (k < 63).then(|| 1i64 << k)
}

/// Whether `|n - 2^k| ≤ r_k` for some `k ≤ N`.
pub fn is_allowed(n: i64, spec: &SpectrumSpec) -> bool {
    if n < 1 {
        return false;
    }
    let top = spec.truncation().min(62);
    (0..=top).any(|k| within_window(n, k, spec.radii()))
}

fn within_window(n: i64, k: usize, radii: &RadiusSequence) -> bool {
    let Some(center) = pow2(k) else { return false };
    let d = (n - center).unsigned_abs();
    d == 0 || (d as f64).log2() <= radii.log2_r(k)
}

/// Largest integer `d ≥ 0` with `d ≤ r_k` (under the log-scale comparison).
pub fn window_half_width(k: usize, radii: &RadiusSequence) -> u64 {
    let l = radii.log2_r(k);
    if l < 0.0 {
        return 0;
    }
    if l >= 62.0 {
        return u64::MAX >> 2;
    }
    let mut d = l.exp2().floor() as u64;
    while d > 0 && (d as f64).log2() > l {
        d -= 1;
    }
    while ((d + 1) as f64).log2() <= l {
        d += 1;
    }
    d
}

/// All `n ∈ [1, 2^{N+1}]` with [`is_allowed`], ascending.
pub fn allowed_set(spec: &SpectrumSpec) -> Result<Vec<i64>> {
    let n_trunc = spec.truncation();
    if n_trunc > MAX_TRUNCATION {
        return Err(Error::TruncationTooLarge(n_trunc));
    }
    let upper = 1i64 << (n_trunc + 1);
    let mut estimate = 0u64;
    for k in 0..=n_trunc {
        estimate = estimate.saturating_add(2 * window_half_width(k, spec.radii()) + 1);
    }
    if estimate > MAX_ALLOWED_SET {
        return Err(Error::TruncationTooLarge(n_trunc));
    }
    let mut set = BTreeSet::new();
    for k in 0..=n_trunc {
        let c = 1i64 << k;
        let d = window_half_width(k, spec.radii()) as i64;
        for n in (c - d).max(1)..=(c + d).min(upper) {
            set.insert(n);
        }
    }
    Ok(set.into_iter().collect())
}

/// Result of evaluating the boundedness functional `B_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionValue {
    pub value: f64,
    /// `k` attaining the maximum.
    pub argmax: usize,
}

/// `B_N = max_{0≤k≤N} Σ_{n=max(0,⌊log2 r_k⌋)}^{k} w_n^{-2}`.
pub fn condition_value(
    radii: &RadiusSequence,
    weights: &WeightSequence,
    truncation: usize,
) -> Result<ConditionValue> {
    let avail = radii.len().min(weights.len());
    if truncation >= avail {
        return Err(Error::Input(format!(
            "condition value at N = {truncation} needs radii and weights up to index N (have {avail})"
        )));
    }
    let mut best = ConditionValue { value: 0.0, argmax: 0 };
    for k in 0..=truncation {
        let start = radii.floor_log2_r(k).max(0);
        let v = weights.inv_sq_sum(start, k as i64);
        if v > best.value {
            best = ConditionValue { value: v, argmax: k };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthTest {
    pub truncation: usize,
    pub b_n: f64,
    pub b_2n: f64,
    /// `B_{2N} ≥ B_N + 1`.
    pub diverging: bool,
}

/// The divergence heuristic `B_{2N} ≥ B_N + 1`. Flags, never proves.
pub fn growth_test(
    radii: &RadiusSequence,
    weights: &WeightSequence,
    truncation: usize,
) -> Result<GrowthTest> {
    let b_n = condition_value(radii, weights, truncation)?.value;
    let b_2n = condition_value(radii, weights, 2 * truncation)?.value;
    Ok(GrowthTest { truncation, b_n, b_2n, diverging: b_2n >= b_n + 1.0 })
}

/// Read access to a finitely supported coefficient sequence `(a_k)`.
pub trait Coefficients {
    /// Indices `0..len` may be nonzero.
    fn len(&self) -> usize;

    fn coeff(&self, k: usize) -> Complex64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_{k=lo}^{hi} |a_k|` (indices past `len` count as zero).
    fn abs_sum(&self, lo: usize, hi: usize) -> f64 {
        let hi = hi.min(self.len().saturating_sub(1));
        if self.is_empty() || lo > hi {
            return 0.0;
        }
        neumaier_sum((lo..=hi).map(|k| self.coeff(k).norm()))
    }

    /// `Σ_k |a_k|^2 w_k^2`.
    fn weighted_energy(&self, weights: &WeightSequence) -> f64 {
        neumaier_sum((0..self.len()).map(|k| self.coeff(k).norm_sqr() * weights.w(k).powi(2)))
    }
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Dense coefficients `a_0..a_{len-1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientSequence {
    a: Vec<Complex64>,
}

impl CoefficientSequence {
    pub fn new(a: Vec<Complex64>) -> Result<Self> {
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("coefficients must be finite".into()));
        }
        Ok(Self { a })
    }

    pub fn from_real(a: &[f64]) -> Result<Self> {
        Self::new(a.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.a
    }

    /// Copy scaled to unit weighted energy (unchanged if all zero).
    pub fn normalized(&self, weights: &WeightSequence) -> Self {
        let e = self.weighted_energy(weights);
        if e == 0.0 {
            return self.clone();
        }
        let s = e.sqrt().recip();
        Self { a: self.a.iter().map(|z| z * s).collect() }
    }
}

impl Coefficients for CoefficientSequence {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn coeff(&self, k: usize) -> Complex64 {
        self.a.get(k).copied().unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffRepr {
    Complex([f64; 2]),
    Real(f64),
}

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    a: Vec<CoeffRepr>,
}

impl Serialize for CoefficientSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SequenceRepr { a: self.a.iter().map(|z| CoeffRepr::Complex([z.re, z.im])).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SequenceRepr::deserialize(d)?;
        let a = repr
            .a
            .into_iter()
            .map(|c| match c {
                CoeffRepr::Complex([re, im]) => Complex64::new(re, im),
                CoeffRepr::Real(re) => Complex64::new(re, 0.0),
            })
            .collect();
        CoefficientSequence::new(a).map_err(D::Error::custom)
    }
}

/// Per-block ℓ¹ sums over the `λ_s` blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFunctional {
    /// `Σ_s (Σ_{k∈block s} |a_k|)^2`.
    pub sum_of_squares: f64,
    /// `max_s Σ_{k∈block s} |a_k|`.
    pub sup_block: f64,
    pub block_sums: Vec<f64>,
}

pub fn block_functional(a: &impl Coefficients, spec: &SpectrumSpec) -> BlockFunctional {
    let block_sums: Vec<f64> = spec
        .lambda_blocks()
        .into_iter()
        .map(|(lo, hi)| a.abs_sum(lo, hi - 1))
        .collect();
    BlockFunctional {
        sum_of_squares: neumaier_sum(block_sums.iter().map(|b| b * b)),
        sup_block: block_sums.iter().copied().fold(0.0, f64::max),
        block_sums,
    }
}

/// One index window `[2M, 2N]` of a [`BlockPlan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// `Σ_{k=2M}^{2N} w_k^{-2}`.
    pub inv_sq_sum: f64,
}

impl Block {
    pub fn lo(&self) -> usize {
        2 * self.m
    }

    pub fn hi(&self) -> usize {
        2 * self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub blocks: Vec<Block>,
}

/// `2M > log2(10) + log2 r_{2N}`, the log form of `4^M > 10 r_{2N}`.
pub fn separated(m: usize, n: usize, radii: &RadiusSequence) -> bool {
    2.0 * m as f64 > LOG2_10 + radii.log2_r(2 * n)
}

impl BlockPlan {
    /// Re-checks separation, the `16^s` mass threshold and disjointness.
    pub fn verify(&self, radii: &RadiusSequence, weights: &WeightSequence) -> Result<()> {
        let mut prev_hi: Option<usize> = None;
        for (s, b) in self.blocks.iter().enumerate() {
            if b.m >= b.n {
                return Err(Error::Input(format!("block {s}: M = {} is not below N = {}", b.m, b.n)));
            }
            if !separated(b.m, b.n, radii) {
                return Err(Error::SeparationViolated {
                    log2_lowest: 2 * b.m,
                    top: 2 * b.n,
                    log2_bound: LOG2_10 + radii.log2_r(2 * b.n),
                });
            }
            let mass = weights.inv_sq_sum(b.lo() as i64, b.hi() as i64);
            if !(mass > 16f64.powi(s as i32)) {
                return Err(Error::Input(format!("block {s}: Σw⁻² = {mass} does not exceed 16^{s}")));
            }
            if prev_hi.is_some_and(|p| b.lo() <= p) {
                return Err(Error::Input(format!("block {s} overlaps its predecessor")));
            }
            prev_hi = Some(b.hi());
        }
        Ok(())
    }
}

/// Greedy first-fit search for blocks `(M_s, N_s)`, `s = 0..=s_max`, with
/// `4^{M_s} > 10 r_{2N_s}`, `Σ_{k=2M_s}^{2N_s} w_k^{-2} > 16^s` and disjoint,
/// increasing index windows.
///
/// For each candidate `N` the smallest admissible `M` is taken, which maximizes
/// the window mass; the first `N` that clears the threshold is emitted.
pub fn find_blocks(
    radii: &RadiusSequence,
    weights: &WeightSequence,
    s_max: usize,
) -> Result<BlockPlan> {
    let k_max = radii.len().min(weights.len()) - 1;
    let mut blocks = Vec::with_capacity(s_max + 1);
    let mut min_m = 0usize;
    let mut n = 1usize;
    for s in 0..=s_max {
        let threshold = 16f64.powi(s as i32);
        let mut found = None;
        while 2 * n <= k_max {
            let bound = LOG2_10 + radii.log2_r(2 * n);
            let mut m = if bound < 0.0 { 0 } else { (bound / 2.0).floor() as usize + 1 };
            while 2.0 * m as f64 <= bound {
                m += 1;
            }
            let m = m.max(min_m);
            if m < n {
                let mass = weights.inv_sq_sum(2 * m as i64, 2 * n as i64);
                if mass > threshold {
                    found = Some(Block { m, n, inv_sq_sum: mass });
                    break;
                }
            }
            n += 1;
        }
        match found {
            Some(b) => {
                blocks.push(b);
                min_m = b.n + 1;
                n = b.n + 2;
            }
            None => return Err(Error::BlocksNotFound { found: s, wanted: s_max + 1, k_max }),
        }
    }
    Ok(BlockPlan { blocks })
}

/// The counterexample sequence: on block `s`, `a_k = 2^s w_k^{-2} / Σ_{block} w^{-2}`.
///
/// Coefficients are evaluated lazily, so plans reaching indices in the tens
/// of millions cost no memory.
#[derive(Debug, Clone)]
pub struct Counterexample {
    plan: BlockPlan,
    weights: WeightSequence,
}

impl Counterexample {
    pub fn plan(&self) -> &BlockPlan {
        &self.plan
    }

    fn block_index(&self, k: usize) -> Option<usize> {
        let i = self.plan.blocks.partition_point(|b| b.hi() < k);
        (i < self.plan.blocks.len() && self.plan.blocks[i].lo() <= k).then_some(i)
    }

    fn scale(s: usize) -> f64 {
        2f64.powi(s as i32)
    }

    /// Closed form `Σ_s 4^s / Σ_{block s} w^{-2}`.
    pub fn weighted_energy_closed_form(&self) -> f64 {
        neumaier_sum(
            self.plan.blocks.iter().enumerate().map(|(s, b)| Self::scale(s).powi(2) / b.inv_sq_sum),
        )
    }

    /// Materializes the sequence; `None` if longer than `max_len`.
    pub fn to_sequence(&self, max_len: usize) -> Option<CoefficientSequence> {
        if self.len() > max_len {
            return None;
        }
        Some(CoefficientSequence { a: (0..self.len()).map(|k| self.coeff(k)).collect() })
    }
}

impl Coefficients for Counterexample {
    fn len(&self) -> usize {
        self.plan.blocks.last().map_or(0, |b| b.hi() + 1)
    }

    fn coeff(&self, k: usize) -> Complex64 {
        match self.block_index(k) {
            Some(s) => {
                let b = &self.plan.blocks[s];
                Complex64::new(Self::scale(s) * self.weights.inv_sq(k as i64) / b.inv_sq_sum, 0.0)
            }
            None => Complex64::default(),
        }
    }

    fn abs_sum(&self, lo: usize, hi: usize) -> f64 {
        let parts = self.plan.blocks.iter().enumerate().filter_map(|(s, b)| {
            let (a, z) = (lo.max(b.lo()), hi.min(b.hi()));
            if a > z {
                None
            } else if a == b.lo() && z == b.hi() {
                Some(Self::scale(s))
            } else {
                Some(Self::scale(s) * self.weights.inv_sq_sum(a as i64, z as i64) / b.inv_sq_sum)
            }
        });
        neumaier_sum(parts)
    }

    fn weighted_energy(&self, _weights: &WeightSequence) -> f64 {
        self.weighted_energy_closed_form()
    }
}

pub fn build_counterexample(plan: &BlockPlan, weights: &WeightSequence) -> Counterexample {
    Counterexample { plan: plan.clone(), weights: weights.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(len: usize) -> RadiusSequence {
        RadiusSequence::from_log2(vec![-40.0; len]).unwrap()
    }

    fn spec_with(log2_r: Vec<f64>, n: usize) -> SpectrumSpec {
        SpectrumSpec::new(RadiusSequence::from_log2(log2_r).unwrap(), n).unwrap()
    }

    #[test]
    fn radii_validation() {
        assert!(RadiusSequence::from_log2(vec![0.0, -1.0]).is_err());
        assert!(RadiusSequence::from_log2(vec![f64::NAN]).is_err());
        assert!(RadiusSequence::from_log2(vec![]).is_err());
        assert!(RadiusSequence::from_log2(vec![f64::NEG_INFINITY, 0.0]).is_ok());
        assert!(RadiusSequence::affine_log(-0.5, -12.0, 10).is_err());
        let r = RadiusSequence::affine_log(1.0, -11.0, 100).unwrap();
        assert!(r.check_standing_hypothesis().is_ok());
        let r = RadiusSequence::affine_log(1.0, -10.0, 100).unwrap();
        assert!(r.check_standing_hypothesis().is_err());
        let r = RadiusSequence::from_radii(&[0.25, 0.25, 0.25, 2.0]).unwrap();
        assert!(r.check_standing_hypothesis().is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(WeightSequence::from_table(vec![1.0, 0.0]).is_err());
        assert!(WeightSequence::from_table(vec![]).is_err());
        assert!(WeightSequence::from_table(vec![f64::INFINITY]).is_err());
        let w = WeightSequence::from_table(vec![1.0, 2.0, 0.5]).unwrap();
        assert_eq!(w.inv_sq_sum(-5, 2), 1.0 + 0.25 + 4.0);
        assert_eq!(w.inv_sq(-1), 0.0);
        let c = WeightSequence::constant(2.0, 10).unwrap();
        assert_eq!(c.inv_sq_sum(2, 5), 1.0);
    }

    #[test]
    fn allowed_center_and_neighbors() {
        let mut log2_r = vec![-40.0; 16];
        for v in &mut log2_r[5..14] {
            *v = 0.5f64.log2();
        }
        log2_r[14] = 3f64.log2();
        log2_r[15] = 3f64.log2();
        let spec = spec_with(log2_r, 15);
        assert!(is_allowed(32, &spec));
        assert!(!is_allowed(33, &spec));
        assert!(is_allowed((1 << 14) + 3, &spec));
        assert!(is_allowed((1 << 14) - 3, &spec));
        assert!(!is_allowed((1 << 14) + 4, &spec));
        assert!(!is_allowed(0, &spec));
    }

    #[test]
    fn allowed_set_examples() {
        let spec = spec_with(vec![-2.0; 3], 2);
        assert_eq!(allowed_set(&spec).unwrap(), vec![1, 2, 4]);

        let spec = spec_with(vec![-2.0, -2.0, -2.0, 1.0], 3);
        assert_eq!(allowed_set(&spec).unwrap(), vec![1, 2, 4, 6, 7, 8, 9, 10]);

        let spec = SpectrumSpec::new(RadiusSequence::affine_log(1.0, -11.0, 30).unwrap(), 20).unwrap();
        let set = allowed_set(&spec).unwrap();
        for k in 0..=20 {
            assert!(set.binary_search(&(1 << k)).is_ok());
        }
        assert!(set.iter().all(|&n| is_allowed(n, &spec)));

        let spec = SpectrumSpec::new(tiny(70), 61).unwrap();
        assert!(matches!(allowed_set(&spec), Err(Error::TruncationTooLarge(61))));
    }

    #[test]
    fn allowed_set_matches_brute_force() {
        let log2_r: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7 - 4.0).max(-3.0)).collect();
        let spec = spec_with(log2_r.clone(), 11);
        let set = allowed_set(&spec).unwrap();
        let brute: Vec<i64> = (1..=(1i64 << 12))
            .filter(|&n| (0..=11).any(|k| ((n - (1 << k)).abs() as f64) <= log2_r[k].exp2() + 1e-12))
            .collect();
        assert_eq!(set, brute);
    }

    fn check_lambda(radii: &RadiusSequence, lambda: &[usize]) {
        assert_eq!(lambda[0], 0);
        for s in 0..lambda.len() - 1 {
            let (cur, next) = (lambda[s], lambda[s + 1]);
            assert!(next > cur);
            assert!(radii.log2_r(next) >= cur as f64);
            assert!(radii.log2_r(next - 1) < cur as f64 || next - 1 == cur);
        }
    }

    #[test]
    fn lambda_examples() {
        let r = RadiusSequence::affine_log(1.0, -11.0, 50).unwrap();
        let l = lambda_sequence(&r, 49);
        assert_eq!(l, vec![0, 11, 22, 33, 44]);
        check_lambda(&r, &l);

        let log2_r: Vec<f64> =
            (0..200).map(|k| if k >= 22 { (k as f64 - 22.0) / 2.0 } else { -1e9 }).collect();
        let r = RadiusSequence::from_log2(log2_r).unwrap();
        let l = lambda_sequence(&r, 199);
        // λ_2 = min{k : (k-22)/2 ≥ 22} = 66, λ_3 = min{k : (k-22)/2 ≥ 66} = 154
        assert_eq!(l, vec![0, 22, 66, 154]);
        check_lambda(&r, &l);

        let r = RadiusSequence::from_log2(vec![-15.0; 40]).unwrap();
        assert!(lambda_sequence(&r, 39).len() <= 2);
    }

    #[test]
    fn condition_examples() {
        let r = RadiusSequence::affine_log(1.0, -11.0, 200).unwrap();
        let w = WeightSequence::constant(1.0, 200).unwrap();
        assert_eq!(condition_value(&r, &w, 40).unwrap().value, 12.0);
        assert!(!growth_test(&r, &w, 64).unwrap().diverging);

        let r0 = tiny(1);
        let w0 = WeightSequence::from_table(vec![1.0]).unwrap();
        assert_eq!(condition_value(&r0, &w0, 0).unwrap().value, 1.0);

        let r = RadiusSequence::affine_log(0.5, -12.0, 200).unwrap();
        // k = 40: ⌊8⌋..40 has 33 terms
        assert_eq!(condition_value(&r, &w, 40).unwrap().value, 33.0);
        assert!(growth_test(&r, &w, 40).unwrap().diverging);
    }

    #[test]
    fn condition_monotone_in_truncation() {
        let r = RadiusSequence::affine_log(0.7, -12.0, 300).unwrap();
        let w = WeightSequence::generated(WeightGenerator::Power { scale: 1.0, exponent: 0.3 }, 300).unwrap();
        let mut prev = 0.0;
        for n in 0..300 {
            let b = condition_value(&r, &w, n).unwrap().value;
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn block_functional_examples() {
        let r = RadiusSequence::affine_log(1.0, -11.0, 40).unwrap();
        let spec = SpectrumSpec::new(r, 30).unwrap();
        let mut a = vec![Complex64::default(); 31];
        a[0] = Complex64::new(1.0, 0.0);
        let bf = block_functional(&CoefficientSequence::new(a).unwrap(), &spec);
        assert_eq!((bf.sum_of_squares, bf.sup_block), (1.0, 1.0));

        // block 1 is [11, 22): length 11
        let a: Vec<f64> = (0..31).map(|k| if (11..22).contains(&k) { 1.0 } else { 0.0 }).collect();
        let bf = block_functional(&CoefficientSequence::from_real(&a).unwrap(), &spec);
        assert_eq!((bf.sum_of_squares, bf.sup_block), (121.0, 11.0));
    }

    #[test]
    fn find_blocks_small() {
        let r = RadiusSequence::affine_log(0.5, -12.0, 4000).unwrap();
        let w = WeightSequence::constant(1.0, 4000).unwrap();
        let plan = find_blocks(&r, &w, 0).unwrap();
        plan.verify(&r, &w).unwrap();
        let b = plan.blocks[0];
        assert!(b.hi() - b.lo() + 1 >= 2);

        let plan = find_blocks(&r, &w, 2).unwrap();
        plan.verify(&r, &w).unwrap();
        assert_eq!(plan.blocks.len(), 3);
    }

    #[test]
    fn find_blocks_exhausted() {
        let r = RadiusSequence::affine_log(0.5, -12.0, 500).unwrap();
        let w = WeightSequence::constant(1e6, 500).unwrap();
        assert!(matches!(find_blocks(&r, &w, 0), Err(Error::BlocksNotFound { found: 0, .. })));
        let w = WeightSequence::constant(1.0, 500).unwrap();
        assert!(matches!(find_blocks(&r, &w, 3), Err(Error::BlocksNotFound { .. })));
    }

    #[test]
    fn counterexample_uniform_block() {
        let w = WeightSequence::constant(1.0, 100).unwrap();
        let plan = BlockPlan { blocks: vec![Block { m: 3, n: 7, inv_sq_sum: 9.0 }] };
        let ce = build_counterexample(&plan, &w);
        for k in 6..=14 {
            assert!((ce.coeff(k).re - 1.0 / 9.0).abs() < 1e-15);
        }
        assert_eq!(ce.coeff(5).re, 0.0);
        assert_eq!(ce.coeff(15).re, 0.0);
        assert_eq!(ce.abs_sum(6, 14), 1.0);
        let dense = ce.to_sequence(1000).unwrap();
        assert!((dense.abs_sum(6, 14) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counterexample_two_blocks() {
        let w = WeightSequence::constant(1.0, 100).unwrap();
        let plan = BlockPlan {
            blocks: vec![Block { m: 1, n: 2, inv_sq_sum: 3.0 }, Block { m: 4, n: 20, inv_sq_sum: 33.0 }],
        };
        let ce = build_counterexample(&plan, &w);
        assert_eq!(ce.abs_sum(2, 4), 1.0);
        assert_eq!(ce.abs_sum(8, 40), 2.0);
        let expect = 1.0 / 3.0 + 4.0 / 33.0;
        assert!((ce.weighted_energy_closed_form() - expect).abs() < 1e-15);
        let dense = ce.to_sequence(100).unwrap();
        assert!((dense.weighted_energy(&w) - expect).abs() < 1e-14);
    }

    #[test]
    fn counterexample_table_weights() {
        let wt: Vec<f64> = (0..3000).map(|k| 1.0 + 0.5 * ((k as f64) * 0.37).sin()).collect();
        let w = WeightSequence::from_table(wt).unwrap();
        let r = RadiusSequence::affine_log(0.5, -12.0, 3000).unwrap();
        let plan = find_blocks(&r, &w, 2).unwrap();
        plan.verify(&r, &w).unwrap();
        let ce = build_counterexample(&plan, &w);
        let dense = ce.to_sequence(3000).unwrap();
        for (s, b) in plan.blocks.iter().enumerate() {
            assert!((dense.abs_sum(b.lo(), b.hi()) - 2f64.powi(s as i32)).abs() < 1e-12);
        }
        let e = dense.weighted_energy(&w);
        assert!((e - ce.weighted_energy_closed_form()).abs() < 1e-12);
        assert!(e <= 4.0 / 3.0 + 1e-9);
    }

    #[test]
    fn coefficient_json() {
        let a: CoefficientSequence = serde_json::from_str(r#"{"a": [1.0, [0.5, -0.5]]}"#).unwrap();
        assert_eq!(a.coeff(1), Complex64::new(0.5, -0.5));
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"a":[[1.0,0.0],[0.5,-0.5]]}"#);
    }

    #[test]
    fn generator_json() {
        let g: RadiusGenerator =
            serde_json::from_str(r#"{"kind": "affine-log", "slope": 0.5, "offset": -12}"#).unwrap();
        assert_eq!(g, RadiusGenerator::AffineLog { slope: 0.5, offset: -12.0 });
        let g: WeightGenerator = serde_json::from_str(r#"{"kind": "constant", "value": 2}"#).unwrap();
        assert_eq!(g, WeightGenerator::Constant { value: 2.0 });
    }
}
