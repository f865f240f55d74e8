//! Large-`x` asymptotics of the profile function.
//!
//! Taking the Laplace transform of `D^alpha_C Phi = -x Phi/(1+alpha)`,
//! `Phi(0) = 1` gives the first-order equation
//! `Phi_hat' = (1+alpha) (s^alpha Phi_hat - s^{alpha-1})`, whose decaying
//! solution is
//! `Phi_hat(s) = e^{s^{1+alpha}} [G - (1+alpha) int_0^s u^{alpha-1} e^{-u^{1+alpha}} du]`
//! with `G = Gamma(alpha/(1+alpha)) = int_0^inf Phi`. Every non-integer power
//! `C s^beta` in its small-`s` expansion contributes `C x^{-1-beta}/Gamma(-beta)`
//! to the algebraic decay of `Phi`. The leading term is
//! `(1+alpha) x^{-1-alpha} / Gamma(1-alpha)`.

use crate::order::FracOrder;
use crate::special::{gamma, recip_gamma};

/// `int_0^inf Phi(x) dx = Gamma(alpha/(1+alpha))`.
pub fn profile_integral(order: FracOrder) -> f64 {
    gamma(order.alpha() / (1.0 + order.alpha()))
}

/// Upper bound `Gamma(alpha+2) (2/x)^{alpha+1}` on `Phi(x)` for `x > 1`.
pub fn decay_bound(order: FracOrder, x: f64) -> f64 {
    let a = order.alpha();
    gamma(a + 2.0) * (2.0 / x).powf(a + 1.0)
}

/// Integral of [`decay_bound`] over `[x, inf)`.
pub fn decay_bound_integral(order: FracOrder, x: f64) -> f64 {
    let a = order.alpha();
    gamma(a + 2.0) * 2f64.powf(a + 1.0) * x.powf(-a) / a
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: f64,
    /// `Phi ~ coef * x^{-exponent}`
    exponent: f64,
}

/// Value together with the size of the first omitted term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTail {
    order: FracOrder,
    terms: Vec<Term>,
}

const FAMILY_TERMS: usize = 8;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl AsymptoticTail {
    pub fn new(order: FracOrder) -> Self {
        let a = order.alpha();
        let g = profile_integral(order);
        let mut raw = Vec::new();
        // e^{s^{1+a}} G: powers m(1+a), m >= 1
        for m in 1..FAMILY_TERMS {
            let beta = m as f64 * (1.0 + a);
            raw.push(Term {
                coef: g / factorial(m) * recip_gamma(-beta),
                exponent: beta + 1.0,
            });
        }
        // cross terms: powers a + n(1+a), n >= 0
        for n in 0..FAMILY_TERMS {
            let e: f64 = -(1.0 + a)
                * (0..=n)
                    .map(|k| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sign / (factorial(n - k) * factorial(k) * (a + k as f64 * (1.0 + a)))
                    })
                    .sum::<f64>();
            let beta = a + n as f64 * (1.0 + a);
            raw.push(Term {
                coef: e * recip_gamma(-beta),
                exponent: beta + 1.0,
            });
        }
        raw.sort_by(|x, y| x.exponent.total_cmp(&y.exponent));
        let mut terms: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match terms.last_mut() {
                Some(last) if (last.exponent - t.exponent).abs() < 1e-12 => last.coef += t.coef,
                _ => terms.push(t),
            }
        }
        terms.retain(|t| t.coef != 0.0);
        Self { order, terms }
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    /// Leading coefficient `A` in `Phi(x) ~ A x^{-1-alpha}`.
    pub fn leading_coefficient(&self) -> f64 {
        self.terms[0].coef
    }

    /// Sums terms `t(x)` while they keep shrinking; the first omitted term
    /// is the error estimate.
    fn sum_with<F: Fn(&Term) -> f64>(&self, eval: F) -> TailValue {
        let mut value = 0.0;
        let mut prev = f64::INFINITY;
        for t in &self.terms {
            let v = eval(t);
            if v.abs() >= prev {
                return TailValue { value, error: prev };
            }
            value += v;
            prev = v.abs();
        }
        TailValue { value, error: prev }
    }

    /// `Phi(x)` for large `x`.
    pub fn value(&self, x: f64) -> TailValue {
        self.sum_with(|t| t.coef * x.powf(-t.exponent))
    }

    /// `Phi'(x)` for large `x`.
    pub fn derivative(&self, x: f64) -> TailValue {
        self.sum_with(|t| -t.exponent * t.coef * x.powf(-t.exponent - 1.0))
    }

    /// `int_x^inf Phi`.
    pub fn integral_from(&self, x: f64) -> TailValue {
        self.sum_with(|t| t.coef * x.powf(1.0 - t.exponent) / (t.exponent - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_term_matches_closed_form() {
        for a in [0.25, 0.5, 0.75] {
            let o = FracOrder::new(a).unwrap();
            let tail = AsymptoticTail::new(o);
            let expect = (1.0 + a) / gamma(1.0 - a);
            assert!((tail.leading_coefficient() / expect - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn normalization_tends_to_gaussian_limit() {
        let o = FracOrder::new(0.999_999).unwrap();
        let g = profile_integral(o);
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn tail_respects_decay_bound() {
        for a in [0.25, 0.5, 0.75] {
            let o = FracOrder::new(a).unwrap();
            let tail = AsymptoticTail::new(o);
            for x in [20.0, 50.0, 1e3, 1e6] {
                let v = tail.value(x);
                assert!(v.value > 0.0);
                assert!(v.value < decay_bound(o, x));
                assert!(v.error < 1e-6 * v.value);
                let i = tail.integral_from(x);
                assert!(i.value > 0.0 && i.value < decay_bound_integral(o, x));
            }
        }
    }

    #[test]
    fn derivative_is_consistent_with_value() {
        let o = FracOrder::new(0.5).unwrap();
        let tail = AsymptoticTail::new(o);
        let x = 30.0;
        let h = 1e-3;
        let fd = (tail.value(x + h).value - tail.value(x - h).value) / (2.0 * h);
        assert!((tail.derivative(x).value / fd - 1.0).abs() < 1e-7);
    }
}
