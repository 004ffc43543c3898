//! Smooth cutoffs built from the exp(-1/x) mollifier.

/// exp(-1/x) for x > 0, else 0.
#[inline]
fn mollifier(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth monotone step: 0 for x ≤ 0, 1 for x ≥ 1.
#[inline]
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = mollifier(x);
    a / (a + mollifier(1.0 - x))
}

/// Cumulative cutoff φ: 1 on [0, 1], 0 on [2, ∞).
#[inline]
pub fn phi(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

/// Dyadic bump χ(r) = φ(r) - φ(2r), supported in [1/2, 2] with χ(1) = 1.
/// Σ_k χ(r/2^k) = 1 for r > 0 by telescoping.
#[inline]
pub fn chi(r: f64) -> f64 {
    phi(r) - phi(2.0 * r)
}

/// χ(r / 2^k).
#[inline]
pub fn shell(r: f64, k: i32) -> f64 {
    chi(r * 2f64.powi(-k))
}

/// Σ_{k' < k} χ(r / 2^{k'}) = φ(r / 2^{k-1}); equals 1 at r = 0.
#[inline]
pub fn below(r: f64, k: i32) -> f64 {
    phi(r * 2f64.powi(1 - k))
}

/// Angular transition: 0 for θ ≤ θ0/2, 1 for θ ≥ θ0, smooth in log θ.
#[inline]
pub fn angular_outside(theta: f64, theta0: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    smooth_step((theta / theta0).log2() + 1.0)
}

/// Periodic Tukey window on [0, T) with taper fraction `alpha`.
pub fn tukey(t: f64, period: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return 1.0;
    }
    let x = (t / period).rem_euclid(1.0);
    let half = alpha / 2.0;
    if x < half {
        0.5 * (1.0 - (std::f64::consts::PI * x / half).cos())
    } else if x > 1.0 - half {
        0.5 * (1.0 - (std::f64::consts::PI * (1.0 - x) / half).cos())
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_support_and_peak() {
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(0.5), 0.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(0.3), 0.0);
        assert_eq!(chi(3.0), 0.0);
        assert!(chi(0.7) > 0.0 && chi(1.5) > 0.0);
    }

    #[test]
    fn dyadic_partition() {
        for i in 0..1000 {
            let r = 1e-3 * 1.0137f64.powi(i);
            let s: f64 = (-20..30).map(|k| shell(r, k)).sum();
            assert!((s - 1.0).abs() < 1e-15, "r={r} s={s}");
        }
    }

    #[test]
    fn below_is_partial_sum() {
        for &r in &[0.01, 0.3, 0.9, 1.7, 5.0] {
            let s: f64 = (-40..2).map(|k| shell(r, k)).sum();
            assert!((s - below(r, 2)).abs() < 1e-15);
        }
        assert_eq!(below(0.0, -5), 1.0);
    }

    #[test]
    fn angular_transition() {
        assert_eq!(angular_outside(0.1, 0.4), 0.0);
        assert_eq!(angular_outside(0.4, 0.4), 1.0);
        assert!(angular_outside(0.3, 0.4) > 0.0);
    }
}
