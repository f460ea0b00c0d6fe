//! The cutoff `ψ`, the smooth step `η` and the Littlewood–Paley bump
//! `φ(x) = η(x) - η(2x)`.

use crate::scalar::{real, Real};

/// `η = 1` on `(-∞, ETA_LOW]`.
pub const ETA_LOW: f64 = 0.52;
/// `η = 0` on `[ETA_HIGH, ∞)`.
pub const ETA_HIGH: f64 = 0.99;

/// `ψ(t) = exp(1 - 1/(1 - t²))` on `|t| < 1`, zero elsewhere.
pub fn psi_eval<T: Real>(t: T) -> T {
    let s = T::one() - t * t;
    if s <= T::zero() {
        return T::zero();
    }
    (T::one() - s.recip()).exp()
}

/// `e^{-1/t}` for `t > 0`, else 0.
fn edge<T: Real>(t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// Smooth nonincreasing step from 1 at [`ETA_LOW`] to 0 at [`ETA_HIGH`].
pub fn eta<T: Real>(x: T) -> T {
    let lo = real::<T>(ETA_LOW);
    let hi = real::<T>(ETA_HIGH);
    if x <= lo {
        return T::one();
    }
    if x >= hi {
        return T::zero();
    }
    let u = (x - lo) / (hi - lo);
    let a = edge(T::one() - u);
    let b = edge(u);
    a / (a + b)
}

/// `φ(x) = η(x) - η(2x)`, supported in `[0.26, 0.99]`.
pub fn phi<T: Real>(x: T) -> T {
    eta(x) - eta(x + x)
}

/// `max |Σ_{|k|≤60} φ(2^k x) - 1|` over `samples` log-uniform points with
/// `log2 x` in the given range (endpoints included).
pub fn partition_check(log2x_range: (f64, f64), samples: usize) -> f64 {
    let (a, b) = log2x_range;
    let mut worst = 0.0f64;
    for i in 0..samples {
        let t = if samples == 1 { a } else { a + (b - a) * i as f64 / (samples - 1) as f64 };
        worst = worst.max((partition_sum(t.exp2()) - 1.0).abs());
    }
    worst
}

/// `Σ_{|k|≤60} φ(2^k x)`.
pub fn partition_sum(x: f64) -> f64 {
    (-60..=60).map(|k| phi(x * (k as f64).exp2())).sum()
}
