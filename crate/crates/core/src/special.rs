//! Gamma-function helpers on top of `libm`.

use std::f64::consts::PI;

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `sin(pi x)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == r.trunc() {
        return 0.0;
    }
    // r in [-1, 1]; fold to [-1/2, 1/2] where sin is well conditioned.
    let folded = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * folded).sin()
}

/// `1/Gamma(x)`, an entire function: zero at the non-positive integers.
pub fn recip_gamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 171.0 {
            return (-ln_gamma(x)).exp();
        }
        return 1.0 / gamma(x);
    }
    // Reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi.
    let s = sin_pi(x);
    if s == 0.0 {
        return 0.0;
    }
    gamma(1.0 - x) * s / PI
}

/// `Gamma(a) / Gamma(a + delta)` for `a > 0`, `a + delta > 0`, without overflow.
pub fn gamma_ratio(a: f64, delta: f64) -> f64 {
    if a + delta < 170.0 && a < 170.0 {
        gamma(a) / gamma(a + delta)
    } else {
        (ln_gamma(a) - ln_gamma(a + delta)).exp()
    }
}

/// Generalized binomial coefficients `C(beta, m)` for `m = 0..n`.
pub fn binomial_series(beta: f64, n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n);
    let mut cur = 1.0;
    for m in 0..n {
        c.push(cur);
        cur *= (beta - m as f64) / (m as f64 + 1.0);
    }
    c
}
