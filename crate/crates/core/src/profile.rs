//! The profile function `Phi(x) = E_{alpha, 1+1/alpha, 1/alpha}(-x^{1+alpha}/(1+alpha))`.
//!
//! Near the origin `Phi` is summed from its Mittag-Leffler series. The series
//! alternates with terms that first grow like `exp(alpha n)`, so for larger
//! `x` it loses every digit to cancellation; there the profile is continued by
//! marching the equivalent Volterra equation
//! `Phi(x) = 1 - (Gamma(alpha)(1+alpha))^{-1} int_0^x s Phi(s) (x-s)^{alpha-1} ds`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fracops::{rl_derivative, PowerKernel, SampledFunction};
use crate::grid::RadialGrid;
use crate::io::fmt_float;
use crate::order::FracOrder;
use crate::special::{gamma, gamma_ratio};

/// `max |partial sum| / (|result| + tol)` above which a series value is unreliable.
pub const CANCELLATION_THRESHOLD: f64 = 1e6;
/// Hard cap on the number of series terms.
pub const SERIES_TERM_CAP: usize = 10_000;
/// Fraction of the series-reliable range used as the overlap window.
pub const OVERLAP_FRACTION: f64 = 0.2;
pub const DEFAULT_NODES: usize = 20_000;
pub const DEFAULT_GRADING: f64 = 2.0;

/// Coefficient `b_n = prod_{i<n} Gamma((1+alpha) i + 2) / Gamma((1+alpha) i + alpha + 2)`.
pub fn ml_coefficient(order: FracOrder, n: usize) -> f64 {
    let a = order.alpha();
    (0..n)
        .map(|i| gamma_ratio((1.0 + a) * i as f64 + 2.0, a).ln())
        .sum::<f64>()
        .exp()
}

/// Partial sum of the profile series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// NaN when summation was abandoned as hopelessly cancelling.
    pub value: f64,
    pub reliable: bool,
    pub terms: usize,
    pub max_partial: f64,
    /// Magnitude of the first omitted term.
    pub tail_bound: f64,
}

/// Sums `sum_n b_n z^n` at `z = -x^{1+alpha}/(1+alpha)` until the next term is
/// below `tol` (past the peak, so the alternating tail is bounded by it).
pub fn phi_series(order: FracOrder, x: f64, tol: f64) -> Result<SeriesValue> {
    phi_series_capped(order, x, tol, SERIES_TERM_CAP)
}

fn phi_series_capped(order: FracOrder, x: f64, tol: f64, cap: usize) -> Result<SeriesValue> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "series argument must be >= 0, got {x}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if x == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            reliable: true,
            terms: 1,
            max_partial: 1.0,
            tail_bound: 0.0,
        });
    }
    let a = order.alpha();
    let z = -x.powf(1.0 + a) / (1.0 + a);
    // |Phi| <= 1, so once a partial sum exceeds this the result cannot be reliable.
    let abandon = CANCELLATION_THRESHOLD * (1.0 + tol);
    let mut term = 1.0;
    let mut sum: f64 = 1.0;
    let mut max_partial = 1.0f64;
    for n in 0..cap {
        let ratio = gamma_ratio((1.0 + a) * n as f64 + 2.0, a) * z;
        let next = term * ratio;
        if ratio.abs() < 1.0 && next.abs() < tol {
            let reliable = max_partial / (sum.abs() + tol) <= CANCELLATION_THRESHOLD;
            return Ok(SeriesValue {
                value: sum,
                reliable,
                terms: n + 1,
                max_partial,
                tail_bound: next.abs(),
            });
        }
        sum += next;
        max_partial = max_partial.max(sum.abs());
        if max_partial > abandon || !sum.is_finite() {
            return Ok(SeriesValue {
                value: f64::NAN,
                reliable: false,
                terms: n + 2,
                max_partial,
                tail_bound: f64::INFINITY,
            });
        }
        term = next;
    }
    Err(Error::SeriesNonConvergence { x, terms: cap })
}

/// Marches the Volterra equation for `Phi` node by node.
///
/// The unknown `s Phi(s)` is interpolated piecewise linearly and each panel is
/// integrated exactly against `(x_j - s)^{alpha-1}`; the implicit dependence on
/// the current node is linear and solved in closed form.
pub fn phi_volterra(order: FracOrder, grid: &RadialGrid) -> Result<Vec<f64>> {
    let a = order.alpha();
    let x = grid.nodes();
    let c = 1.0 / (gamma(a) * (1.0 + a));
    let kernel = PowerKernel::new(a);
    let mut phi = vec![0.0; x.len()];
    let mut xphi = vec![0.0; x.len()];
    phi[0] = 1.0;
    for j in 1..x.len() {
        let (hist, wj) = kernel.accumulate(x, &xphi, j);
        let u = (1.0 - c * hist) / (1.0 + c * wj * x[j]);
        if !(u > 0.0) {
            return Err(Error::Positivity {
                node: j,
                x: x[j],
                value: u,
            });
        }
        phi[j] = u;
        xphi[j] = x[j] * u;
    }
    Ok(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Volterra,
    /// Values supplied by the caller rather than computed here.
    Supplied,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Volterra => "volterra",
            Method::Supplied => "supplied",
        }
    }
}

/// How the hybrid table was stitched together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildDiagnostics {
    /// Last node where the series is reliable.
    pub reliable_end: f64,
    /// Series is used below this point, the Volterra march from here on.
    pub crossover: f64,
    /// Number of nodes in the overlap window `[crossover, reliable_end]`.
    pub overlap_nodes: usize,
    /// Largest |series - Volterra| on the overlap window.
    pub overlap_max_diff: f64,
}

/// `Phi` and `Phi'` tabulated on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub order: FracOrder,
    pub grid: RadialGrid,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub method: Vec<Method>,
    pub est_error: Vec<f64>,
    pub diagnostics: Option<BuildDiagnostics>,
}

impl ProfileTable {
    /// Wraps externally supplied columns without validating them.
    pub fn from_columns(
        order: FracOrder,
        grid: RadialGrid,
        phi: Vec<f64>,
        phi_prime: Vec<f64>,
    ) -> Result<Self> {
        if phi.len() != grid.len() || phi_prime.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "column lengths differ from grid".into(),
            ));
        }
        let n = grid.len();
        Ok(Self {
            order,
            grid,
            phi,
            phi_prime,
            method: vec![Method::Supplied; n],
            est_error: vec![0.0; n],
            diagnostics: None,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max()
    }

    fn interpolate(&self, col: &[f64], x: f64) -> Option<f64> {
        if !(x >= 0.0) || x > self.grid.x_max() {
            return None;
        }
        let nodes = self.grid.nodes();
        let k = self.grid.cell(x);
        let s = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
        Some(col[k] + s * (col[k + 1] - col[k]))
    }

    /// Linear interpolation of `Phi`; `None` outside `[0, x_max]`.
    pub fn phi_at(&self, x: f64) -> Option<f64> {
        self.interpolate(&self.phi, x)
    }

    /// [`phi_at`](Self::phi_at) with a cell hint updated in place.
    #[inline]
    pub fn phi_at_near(&self, x: f64, hint: &mut usize) -> Option<f64> {
        if !(x >= 0.0) || x > self.grid.x_max() {
            return None;
        }
        let nodes = self.grid.nodes();
        let k = self.grid.cell_near(x, *hint);
        *hint = k;
        let s = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
        Some(self.phi[k] + s * (self.phi[k + 1] - self.phi[k]))
    }

    pub fn phi_prime_at(&self, x: f64) -> Option<f64> {
        self.interpolate(&self.phi_prime, x)
    }

    pub fn as_sampled(&self) -> Result<SampledFunction> {
        SampledFunction::new(self.grid.clone(), self.phi.clone())
    }

    /// Checks the structural invariants of a genuine profile.
    pub fn check_invariants(&self) -> Result<()> {
        let x = self.grid.nodes();
        if self.phi[0] != 1.0 {
            return Err(Error::Invariant(format!("Phi(0) = {} != 1", self.phi[0])));
        }
        if self.phi_prime[0] != 0.0 {
            return Err(Error::Invariant(format!(
                "Phi'(0) = {} != 0",
                self.phi_prime[0]
            )));
        }
        for j in 0..x.len() {
            let (p, dp) = (self.phi[j], self.phi_prime[j]);
            if !(p > 0.0) {
                return Err(Error::Invariant(format!(
                    "Phi({}) = {p} is not positive",
                    x[j]
                )));
            }
            if j > 0 && p > self.phi[j - 1] {
                return Err(Error::Invariant(format!(
                    "Phi increases between x = {} and x = {}",
                    x[j - 1],
                    x[j]
                )));
            }
            if !(dp <= 0.0) {
                return Err(Error::Invariant(format!(
                    "Phi'({}) = {dp} is not <= 0",
                    x[j]
                )));
            }
            if x[j] * p > 4.0 {
                return Err(Error::Invariant(format!(
                    "x Phi(x) = {} > 4 at x = {}",
                    x[j] * p,
                    x[j]
                )));
            }
        }
        Ok(())
    }

    /// CSV with header `x,phi,phi_prime,method,est_error`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,phi,phi_prime,method,est_error")?;
        for j in 0..self.grid.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_float(self.grid.nodes()[j]),
                fmt_float(self.phi[j]),
                fmt_float(self.phi_prime[j]),
                self.method[j].as_str(),
                fmt_float(self.est_error[j])
            )?;
        }
        Ok(())
    }
}

/// Builds the hybrid table on the default graded grid
/// `x_j = x_max (j/N)^2`, `N = 20000`.
pub fn build_profile(order: FracOrder, x_max: f64, tol: f64) -> Result<ProfileTable> {
    let grid = RadialGrid::graded(x_max, DEFAULT_NODES, DEFAULT_GRADING)?;
    build_profile_on(order, grid, tol)
}

/// Builds the hybrid series/Volterra table on an arbitrary grid.
pub fn build_profile_on(order: FracOrder, grid: RadialGrid, tol: f64) -> Result<ProfileTable> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let x = grid.nodes();
    let n = x.len();

    let series: Vec<SeriesValue> = x
        .par_iter()
        .map(|&xi| phi_series(order, xi, tol))
        .collect::<Result<_>>()?;
    let first_unreliable = series.iter().position(|s| !s.reliable).unwrap_or(n);
    if first_unreliable < 2 {
        return Err(Error::NoOverlap { reliable_end: 0.0 });
    }
    let reliable_end = x[first_unreliable - 1];
    let crossover = if first_unreliable == n {
        reliable_end
    } else {
        reliable_end * (1.0 - OVERLAP_FRACTION)
    };
    let window_start = reliable_end * (1.0 - OVERLAP_FRACTION);

    let volterra = phi_volterra(order, &grid)?;

    let mut overlap_nodes = 0;
    let mut overlap_max_diff = 0.0f64;
    for j in 0..first_unreliable {
        if x[j] < window_start {
            continue;
        }
        overlap_nodes += 1;
        let diff = (series[j].value - volterra[j]).abs();
        if diff > 10.0 * tol {
            return Err(Error::OverlapMismatch {
                x: x[j],
                series: series[j].value,
                volterra: volterra[j],
                diff,
                allowed: 10.0 * tol,
            });
        }
        overlap_max_diff = overlap_max_diff.max(diff);
    }
    if overlap_nodes < 2 {
        return Err(Error::NoOverlap { reliable_end });
    }

    // Richardson-style error estimate for the march: compare with the march on
    // every other node (second order in h).
    let (coarse, idx) = grid.coarsen();
    let volterra_err: Vec<f64> = match phi_volterra(order, &coarse) {
        Ok(c) => {
            let mut err = vec![0.0; n];
            let at_coarse: Vec<f64> = idx
                .iter()
                .zip(&c)
                .map(|(&i, &v)| (volterra[i] - v).abs() / 3.0)
                .collect();
            for w in 0..idx.len() - 1 {
                let e = at_coarse[w].max(at_coarse[w + 1]);
                for slot in &mut err[idx[w]..=idx[w + 1]] {
                    *slot = e;
                }
            }
            err
        }
        Err(_) => vec![f64::NAN; n],
    };

    let mut phi = Vec::with_capacity(n);
    let mut method = Vec::with_capacity(n);
    let mut est_error = Vec::with_capacity(n);
    for j in 0..n {
        if x[j] < crossover && j < first_unreliable {
            let s = &series[j];
            phi.push(s.value);
            method.push(Method::Series);
            est_error.push(s.tail_bound + f64::EPSILON * s.max_partial * (s.terms - 1) as f64);
        } else {
            phi.push(volterra[j]);
            method.push(Method::Volterra);
            est_error.push(volterra_err[j]);
        }
    }

    // Phi'(x) = -(1+alpha)^{-1} D^{1-alpha}_RL [x Phi(x)]
    let xphi = SampledFunction::new(
        grid.clone(),
        x.iter().zip(&phi).map(|(a, b)| a * b).collect(),
    )?;
    let d = rl_derivative(&xphi, 1.0 - order.alpha())?;
    let mut phi_prime: Vec<f64> = d
        .into_values()
        .into_iter()
        .map(|v| -v / (1.0 + order.alpha()))
        .collect();
    phi_prime[0] = 0.0;

    let table = ProfileTable {
        order,
        grid,
        phi,
        phi_prime,
        method,
        est_error,
        diagnostics: Some(BuildDiagnostics {
            reliable_end,
            crossover,
            overlap_nodes,
            overlap_max_diff,
        }),
    };
    table.check_invariants()?;
    Ok(table)
}
