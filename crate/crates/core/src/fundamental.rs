//! The fundamental solution `E_t(x) = a0 t^{-1/(1+alpha)} Phi(|x| t^{-1/(1+alpha)})`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::order::FracOrder;
use crate::profile::ProfileTable;
use crate::quad::{integrate, trapezoid, QuadOptions};
use crate::tail::{decay_bound, decay_bound_integral, AsymptoticTail};

/// Normalization `a0` with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A0Estimate {
    pub a0: f64,
    /// Propagated absolute error estimate of `a0`.
    pub error: f64,
    /// Extrapolated `int_0^{x_max} Phi`.
    pub table_integral: f64,
    pub table_error: f64,
    /// `int_{x_max}^inf Phi` from the asymptotic expansion.
    pub tail_integral: f64,
    pub tail_error: f64,
    /// Rigorous upper end of the tail bracket (integrated decay bound).
    pub tail_bracket: f64,
}

/// Computes `1/a0 = 2 int_0^inf Phi`.
///
/// The tabulated part uses the trapezoid rule on the table and on every other
/// node, extrapolated in `h^2`. The tail beyond `x_max` comes from the
/// asymptotic expansion and must fall inside `[0, int Gamma(a+2)(2/x)^{a+1}]`.
/// Fails when the combined error estimate of `int_0^inf Phi` exceeds `tol`.
pub fn compute_a0(profile: &ProfileTable, tail: &AsymptoticTail, tol: f64) -> Result<A0Estimate> {
    let x_max = profile.x_max();
    if !(x_max > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "profile must extend beyond x = 1 (x_max = {x_max})"
        )));
    }
    let x = profile.grid.nodes();
    let fine = trapezoid(x, &profile.phi);
    let (coarse_grid, idx) = profile.grid.coarsen();
    let coarse_phi: Vec<f64> = idx.iter().map(|&i| profile.phi[i]).collect();
    let coarse = trapezoid(coarse_grid.nodes(), &coarse_phi);
    let table_integral = fine + (fine - coarse) / 3.0;
    let table_error = (fine - coarse).abs() / 3.0;

    let t = tail.integral_from(x_max);
    let phi_end = *profile.phi.last().unwrap();
    let tail_at_end = tail.value(x_max);
    // Relative mismatch between table and expansion at the junction, applied
    // to the whole tail.
    let junction = ((phi_end - tail_at_end.value) / phi_end).abs();
    let tail_error = t.error + junction * t.value;
    let tail_bracket = decay_bound_integral(profile.order, x_max);
    if !(t.value > 0.0 && t.value <= tail_bracket) {
        return Err(Error::Invariant(format!(
            "asymptotic tail {} outside the bracket [0, {tail_bracket}]",
            t.value
        )));
    }

    let total = table_integral + t.value;
    let err = table_error + tail_error;
    if err > tol {
        return Err(Error::NormalizationBracket {
            error: err,
            tol,
            x_max,
        });
    }
    let a0 = 1.0 / (2.0 * total);
    Ok(A0Estimate {
        a0,
        error: 2.0 * a0 * a0 * err,
        table_integral,
        table_error,
        tail_integral: t.value,
        tail_error,
        tail_bracket,
    })
}

/// A value of `E_t(x)` and whether it came from beyond the table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalValue {
    pub value: f64,
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub order: FracOrder,
    pub a0: f64,
    pub a0_estimate: A0Estimate,
    pub profile: ProfileTable,
    pub tail: AsymptoticTail,
    /// Similarity variable beyond which the asymptotic tail replaces the table.
    pub tail_bound_start: f64,
}

impl FundamentalSolution {
    pub fn new(profile: ProfileTable, tol: f64) -> Result<Self> {
        let tail = AsymptoticTail::new(profile.order);
        let est = compute_a0(&profile, &tail, tol)?;
        Ok(Self {
            order: profile.order,
            a0: est.a0,
            a0_estimate: est,
            tail_bound_start: profile.x_max(),
            profile,
            tail,
        })
    }

    /// `Phi(xi)` for `xi >= 0`: table interpolation, asymptotic tail beyond.
    #[inline]
    pub fn profile_value(&self, xi: f64) -> FundamentalValue {
        match self.profile.phi_at(xi) {
            Some(v) => FundamentalValue {
                value: v,
                extrapolated: false,
            },
            None => FundamentalValue {
                value: self.tail.value(xi).value,
                extrapolated: true,
            },
        }
    }

    /// `Gamma(a+2)(2/xi)^{a+1}`, the rigorous envelope used as a cross-check
    /// for extrapolated values.
    pub fn profile_bound(&self, xi: f64) -> f64 {
        decay_bound(self.order, xi)
    }

    /// `t^{1/(1+alpha)}`.
    #[inline]
    pub fn scale(&self, t: f64) -> f64 {
        self.order.similarity_scale(t)
    }

    /// `E_t(x)` for any real `x` (even extension) and `t > 0`.
    pub fn eval_flagged(&self, x: f64, t: f64) -> Result<FundamentalValue> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        Ok(self.eval_scaled(x, self.scale(t)))
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        self.eval_flagged(x, t).map(|v| v.value)
    }

    /// `E_t(x)` given the precomputed scale `tau = t^{1/(1+alpha)}`.
    #[inline]
    pub(crate) fn eval_scaled(&self, x: f64, tau: f64) -> FundamentalValue {
        let p = self.profile_value(x.abs() / tau);
        FundamentalValue {
            value: self.a0 / tau * p.value,
            extrapolated: p.extrapolated,
        }
    }

    /// `int_0^inf E_t(x) dx` by adaptive quadrature in the physical variable,
    /// independent of the table integral used for `a0`.
    pub fn half_line_mass(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        let tau = self.scale(t);
        let x_end = tau * self.tail_bound_start;
        let breaks: Vec<f64> = (1..64).map(|k| x_end * (k as f64 / 64.0).powi(2)).collect();
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_panels: 200_000,
        };
        let body = integrate(
            |x| self.eval_scaled(x, tau).value,
            0.0,
            x_end,
            &breaks,
            opts,
        )?;
        // Beyond the table: E_t(x) = a0/tau Phi(x/tau), Phi from the tail expansion.
        let far = self.a0 * self.tail.integral_from(self.tail_bound_start).value;
        Ok(body.value + far)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::profile::build_profile_on;

    fn solution() -> &'static FundamentalSolution {
        crate::test_support::half_order_solution()
    }

    #[test]
    fn origin_value_is_a0_scaled() {
        let fs = solution();
        for t in [0.5, 1.0, 7.0] {
            let v = fs.eval(0.0, t).unwrap();
            assert!((v - fs.a0 * t.powf(-1.0 / 1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn even_in_x() {
        let fs = solution();
        for x in [0.1, 1.3, 40.0, 1e4] {
            assert_eq!(fs.eval(-x, 2.0).unwrap(), fs.eval(x, 2.0).unwrap());
        }
    }

    #[test]
    fn rejects_non_positive_time() {
        let fs = solution();
        assert!(matches!(fs.eval(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(fs.eval(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beyond_table_is_flagged_and_below_bound() {
        let fs = solution();
        let v = fs.eval_flagged(30.0, 1.0).unwrap();
        assert!(v.extrapolated);
        assert!(v.value < fs.a0 * fs.profile_bound(30.0));
        assert!(!fs.eval_flagged(3.0, 1.0).unwrap().extrapolated);
    }

    #[test]
    fn half_line_mass_is_one_half() {
        let fs = solution();
        for t in [1.0, 16.0] {
            let m = fs.half_line_mass(t).unwrap();
            assert!((m - 0.5).abs() < 1e-6, "t={t}: {m}");
        }
    }

    #[test]
    fn scaling_identity() {
        let fs = solution();
        for &x in &[0.0, 0.3, 1.7, 6.0] {
            for &t in &[0.5, 1.0, 3.0] {
                let lam: f64 = 2.0;
                let lhs = fs.eval(x, t).unwrap();
                let rhs = lam * fs.eval(lam * x, lam.powf(1.5) * t).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-14 * lhs,
                    "x={x} t={t}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn positive_and_decreasing() {
        let fs = solution();
        let mut prev = f64::INFINITY;
        for k in 0..400 {
            let v = fs.eval(0.1 * k as f64, 1.0).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn bracket_too_wide_asks_for_larger_domain() {
        let o = FracOrder::new(0.5).unwrap();
        let p = build_profile_on(o, RadialGrid::graded(20.0, 4000, 2.0).unwrap(), 1e-8).unwrap();
        let tail = AsymptoticTail::new(o);
        let r = compute_a0(&p, &tail, 1e-14);
        assert!(
            matches!(r, Err(Error::NormalizationBracket { .. })),
            "{r:?}"
        );
    }
}
