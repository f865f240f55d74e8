//! Quadrature primitives: adaptive Gauss–Kronrod with forced breakpoints,
//! and composite rules for sampled data.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a quadrature: value and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

/// One 7/15-point Gauss–Kronrod panel.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Quad {
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    q: Quad,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q
            .error
            .total_cmp(&other.q.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 20_000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod over `[a, b]` with forced breakpoints.
///
/// Every breakpoint strictly inside `(a, b)` becomes a panel boundary, so
/// kinks placed there never reach the interior of a Kronrod panel. The
/// panel with the largest error estimate is bisected until the summed error
/// meets the tolerance. Final summation is in left-to-right panel order.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Quad> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();

    let mut heap = BinaryHeap::with_capacity(pts.len() * 2);
    let mut total = 0.0;
    let mut err = 0.0;
    for w in pts.windows(2) {
        let q = gk15(&f, w[0], w[1]);
        total += q.value;
        err += q.error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            q,
        });
    }

    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    while err > target(total) {
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                a,
                b,
                achieved: err,
                requested: target(total),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel at floating-point resolution; nothing left to refine.
            return Err(Error::Quadrature {
                a,
                b,
                achieved: err,
                requested: target(total),
            });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.q.value;
        err += left.error + right.error - worst.q.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            q: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            q: right,
        });
    }

    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.q.value).sum();
    let error = panels.iter().map(|p| p.q.error).sum();
    Ok(Quad { value, error })
}

/// Composite trapezoid rule on sampled data.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Composite Simpson rule for non-uniform nodes (pairs of cells); an odd
/// trailing cell is closed with the quadratic through the last three nodes.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return trapezoid(x, y);
    }
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        sum += hs / 6.0
            * ((2.0 - h1 / h0) * y[i]
                + hs * hs / (h0 * h1) * y[i + 1]
                + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        // integrate the quadratic through (i-1, i, i+1) over [x_i, x_{i+1}]
        let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let w0 = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        let w1 = h1 * (h1 + 3.0 * h0) / (6.0 * h0);
        let w2 = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
        sum += w0 * y0 + w1 * y1 + w2 * y2;
    }
    sum
}
