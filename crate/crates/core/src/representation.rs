//! Dirichlet and Neumann solutions assembled from the fundamental solution:
//! `w1 = v^- - v^+`, `w2 = v^- + v^+` with
//! `v^+(x,t) = int_0^inf E_t(x+y) g(y) dy`, `v^-(x,t) = int_0^inf E_t(x-y) g(y) dy`.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::c2_constant;
use crate::error::{Error, Result};
use crate::fundamental::FundamentalSolution;
use crate::grid::RadialGrid;
use crate::quad::{integrate, simpson, QuadOptions};
use crate::special::gamma;

/// Bump pieces narrower than this share of the support use a fixed
/// 3-point Gauss rule; wider ones are integrated adaptively.
const BUMP_GAUSS_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum DatumKind {
    Indicator {
        a: f64,
        b: f64,
    },
    /// Hat function with unit peak at the midpoint.
    Triangle {
        a: f64,
        b: f64,
    },
    /// `exp(1 - 1/(1-s^2))`, `s` mapping `[a,b]` onto `[-1,1]`; unit peak.
    Bump {
        a: f64,
        b: f64,
    },
    /// Piecewise-linear through `(y_i, g_i)`, zero outside `[y_0, y_last]`.
    Tabulated {
        y: Vec<f64>,
        g: Vec<f64>,
    },
}

/// Compactly supported initial datum on `[0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    pub kind: DatumKind,
    /// `R`: the support is contained in `[0, R]`.
    pub support_end: f64,
    /// `m = int g`.
    pub mass: f64,
    /// `int y |g(y)| dy`.
    pub first_moment: f64,
    /// `int |g|`.
    pub l1_norm: f64,
    breaks: Vec<f64>,
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a >= 0.0 && b > a && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Datum(format!(
            "support [{a}, {b}] must satisfy 0 <= a < b < inf"
        )))
    }
}

fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl InitialDatum {
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        let mass = b - a;
        Ok(Self {
            kind: DatumKind::Indicator { a, b },
            support_end: b,
            mass,
            first_moment: 0.5 * (b * b - a * a),
            l1_norm: mass,
            breaks: vec![a, b],
        })
    }

    pub fn triangle(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        let mass = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        Ok(Self {
            kind: DatumKind::Triangle { a, b },
            support_end: b,
            mass,
            first_moment: mass * c,
            l1_norm: mass,
            breaks: vec![a, c, b],
        })
    }

    pub fn bump(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        let half = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_panels: 10_000,
        };
        let mass = half * integrate(bump_profile, -1.0, 1.0, &[0.0], opts)?.value;
        Ok(Self {
            kind: DatumKind::Bump { a, b },
            support_end: b,
            mass,
            first_moment: mass * c,
            l1_norm: mass,
            breaks: vec![a, c, b],
        })
    }

    pub fn tabulated(y: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if y.len() != g.len() || y.len() < 2 {
            return Err(Error::Datum(
                "tabulated datum needs >= 2 (y, g) pairs".into(),
            ));
        }
        if y[0] < 0.0 || y.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Datum(
                "tabulated y must be >= 0 and strictly increasing".into(),
            ));
        }
        if y.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::Datum(
                "tabulated datum contains non-finite values".into(),
            ));
        }
        let support_end = *y.last().unwrap();
        let mut mass = 0.0;
        let mut l1 = 0.0;
        let mut first = 0.0;
        for i in 0..y.len() - 1 {
            let (y0, y1, g0, g1) = (y[i], y[i + 1], g[i], g[i + 1]);
            mass += 0.5 * (y1 - y0) * (g0 + g1);
            // split at a sign change so |g| is linear on each part
            let mut parts = vec![(y0, g0, y1, g1)];
            if g0 * g1 < 0.0 {
                let yz = y0 + (y1 - y0) * g0 / (g0 - g1);
                parts = vec![(y0, g0, yz, 0.0), (yz, 0.0, y1, g1)];
            }
            for (ya, ga, yb, gb) in parts {
                let (ga, gb) = (ga.abs(), gb.abs());
                let h = yb - ya;
                l1 += 0.5 * h * (ga + gb);
                // exact int of y * linear over [ya, yb]
                first += h / 6.0 * (ga * (2.0 * ya + yb) + gb * (ya + 2.0 * yb));
            }
        }
        Ok(Self {
            breaks: y.clone(),
            kind: DatumKind::Tabulated { y, g },
            support_end,
            mass,
            first_moment: first,
            l1_norm: l1,
        })
    }

    /// Reads a two-column CSV with header `y,g`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let (iy, ig) = match (
            headers.iter().position(|h| h == "y"),
            headers.iter().position(|h| h == "g"),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Datum(format!(
                    "expected header `y,g`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )))
            }
        };
        let mut y = Vec::new();
        let mut g = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Datum(format!("row {}: missing column", line + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Datum(format!("row {}: {e}", line + 2)))
            };
            y.push(parse(iy)?);
            g.push(parse(ig)?);
        }
        Self::tabulated(y, g)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Datum(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_reader(f)
    }

    /// Parses `indicator:a:b`, `triangle:a:b`, `bump:a:b` or `file:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix("file:") {
            return Self::from_csv_path(Path::new(path));
        }
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Datum(format!(
                "malformed datum `{spec}`; expected kind:a:b with kind in indicator|triangle|bump, or file:<path>"
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Datum(format!("malformed number `{s}` in datum `{spec}`")))
        };
        let (a, b) = (num(parts[1])?, num(parts[2])?);
        match parts[0] {
            "indicator" => Self::indicator(a, b),
            "triangle" => Self::triangle(a, b),
            "bump" => Self::bump(a, b),
            other => Err(Error::Datum(format!("unknown datum kind `{other}`"))),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match &self.kind {
            DatumKind::Indicator { a, b } => {
                if y >= *a && y <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            DatumKind::Triangle { a, b } => {
                let c = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                (1.0 - (y - c).abs() / half).max(0.0)
            }
            DatumKind::Bump { a, b } => bump_profile((2.0 * y - a - b) / (b - a)),
            DatumKind::Tabulated { y: ys, g } => {
                if y < ys[0] || y > *ys.last().unwrap() {
                    return 0.0;
                }
                let k = ys.partition_point(|&v| v <= y).clamp(1, ys.len() - 1) - 1;
                let s = (y - ys[k]) / (ys[k + 1] - ys[k]);
                g[k] + s * (g[k + 1] - g[k])
            }
        }
    }

    /// `int_p^q k(y) g(y) dy` for `k` linear with `k(p) = kp`, `k(q) = kq`.
    /// The interval must not straddle a breakpoint of `g`.
    pub fn integrate_against_linear(&self, p: f64, q: f64, kp: f64, kq: f64) -> Result<f64> {
        let h = q - p;
        let k = |y: f64| kp + (kq - kp) * (y - p) / h;
        match self.kind {
            DatumKind::Bump { a, b } if h > BUMP_GAUSS_WIDTH * (b - a) => {
                let scale = (kp.abs() + kq.abs()) * h;
                let opts = QuadOptions {
                    abs_tol: 1e-16 * scale,
                    rel_tol: 1e-12,
                    max_panels: 10_000,
                };
                Ok(integrate(|y| k(y) * self.value(y), p, q, &[], opts)?.value)
            }
            DatumKind::Bump { .. } => {
                // 3-point Gauss-Legendre
                let (c, r) = (0.5 * (p + q), 0.5 * h);
                let d = r * (0.6f64).sqrt();
                let f = |y: f64| k(y) * self.value(y);
                Ok(r * (5.0 * f(c - d) + 8.0 * f(c) + 5.0 * f(c + d)) / 9.0)
            }
            _ => {
                // linear times linear: 2-point Gauss-Legendre is exact
                let (c, r) = (0.5 * (p + q), 0.5 * h);
                let d = r / 3f64.sqrt();
                let f = |y: f64| k(y) * self.value(y);
                Ok(r * (f(c - d) + f(c + d)))
            }
        }
    }

    /// Points where `g` is not smooth (support ends, peaks, table nodes).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// `int_0^R g^2`.
    pub fn l2_norm(&self) -> Result<f64> {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-12,
            max_panels: 50_000,
        };
        let q = integrate(
            |y| self.value(y).powi(2),
            0.0,
            self.support_end,
            &self.breaks,
            opts,
        )?;
        Ok(q.value.sqrt())
    }
}

/// Which functional of the datum a slice holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Quantity {
    #[serde(rename = "v_plus")]
    VPlus,
    #[serde(rename = "v_minus")]
    VMinus,
    #[serde(rename = "w1")]
    W1,
    #[serde(rename = "w2")]
    W2,
    /// `v^+ - m E_t`
    #[serde(rename = "v_plus_minus_mE")]
    VPlusDev,
    /// `v^- - m E_t`
    #[serde(rename = "v_minus_minus_mE")]
    VMinusDev,
    /// `w2 - 2 m E_t`
    #[serde(rename = "w2_minus_2mE")]
    W2Dev,
    /// `E_t` itself (no datum involved).
    #[serde(rename = "E")]
    Fundamental,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::VPlus,
        Quantity::VMinus,
        Quantity::W1,
        Quantity::W2,
        Quantity::VPlusDev,
        Quantity::VMinusDev,
        Quantity::W2Dev,
        Quantity::Fundamental,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::VPlus => "v_plus",
            Quantity::VMinus => "v_minus",
            Quantity::W1 => "w1",
            Quantity::W2 => "w2",
            Quantity::VPlusDev => "v_plus_minus_mE",
            Quantity::VMinusDev => "v_minus_minus_mE",
            Quantity::W2Dev => "w2_minus_2mE",
            Quantity::Fundamental => "E",
        }
    }

    /// Weights `(c_minus, c_plus, c_center)` of `E(x-y)`, `E(x+y)`, `E(x)`.
    fn weights(&self) -> (f64, f64, f64) {
        match self {
            Quantity::VPlus => (0.0, 1.0, 0.0),
            Quantity::VMinus => (1.0, 0.0, 0.0),
            Quantity::W1 => (1.0, -1.0, 0.0),
            Quantity::W2 => (1.0, 1.0, 0.0),
            Quantity::VPlusDev => (0.0, 1.0, -1.0),
            Quantity::VMinusDev => (1.0, 0.0, -1.0),
            Quantity::W2Dev => (1.0, 1.0, -2.0),
            Quantity::Fundamental => (0.0, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Pushes the `y` in `(lo, hi)` where `(offset + dir*y)/tau` hits a table node.
fn push_table_breaks(
    nodes: &[f64],
    tau: f64,
    offset: f64,
    dir: f64,
    lo: f64,
    hi: f64,
    out: &mut Vec<f64>,
) {
    // argument range in the similarity variable
    let (u0, u1) = {
        let a = (offset + dir * lo) / tau;
        let b = (offset + dir * hi) / tau;
        (a.min(b), a.max(b))
    };
    let i0 = nodes.partition_point(|&n| n <= u0);
    let i1 = nodes.partition_point(|&n| n < u1);
    for &n in &nodes[i0..i1] {
        out.push((n * tau - offset) * dir);
    }
}

fn check_xt(x: f64, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be >= 0, got {x}")));
    }
    Ok(())
}

/// Evaluates any [`Quantity`] at `(x, t)`.
///
/// Between images of table nodes the kernel is linear in `y`, so those
/// images, the reflection point `y = x` and the datum's breakpoints split
/// `[0, R]` into pieces integrated exactly against `g` (or by a Gauss rule
/// for smooth `g`). Pieces beyond the table use adaptive Gauss-Kronrod.
pub fn eval_quantity(
    fs: &FundamentalSolution,
    g: &InitialDatum,
    which: Quantity,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_xt(x, t)?;
    let tau = fs.scale(t);
    if which == Quantity::Fundamental {
        return Ok(fs.eval_scaled(x, tau).value);
    }
    let r = g.support_end;
    let (cm, cp, cc) = which.weights();
    let center = if cc != 0.0 {
        cc * fs.eval_scaled(x, tau).value
    } else {
        0.0
    };

    let nodes = fs.profile.grid.nodes();
    let mut breaks: Vec<f64> = Vec::with_capacity(64);
    breaks.push(0.0);
    breaks.push(r);
    breaks.extend_from_slice(g.breakpoints());
    if cp != 0.0 {
        push_table_breaks(nodes, tau, x, 1.0, 0.0, r, &mut breaks);
    }
    if cm != 0.0 {
        breaks.push(x);
        if x > 0.0 {
            push_table_breaks(nodes, tau, x, -1.0, 0.0, x.min(r), &mut breaks);
        }
        if x < r {
            push_table_breaks(nodes, tau, -x, 1.0, x, r, &mut breaks);
        }
    }
    let reach = tau * fs.profile.x_max();
    if cm != 0.0 {
        breaks.extend([x - reach, x + reach]);
    }
    if cp != 0.0 {
        breaks.push(reach - x);
    }
    breaks.retain(|&y| (0.0..=r).contains(&y));
    breaks.sort_unstable_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    let a0_tau = fs.a0 / tau;
    let xi_big = fs.profile.x_max();
    let (mut hint_m, mut hint_p) = (0usize, 0usize);
    // in-table membership of the two components at y
    let inside = |y: f64| {
        (
            cm != 0.0 && (x - y).abs() / tau <= xi_big,
            cp != 0.0 && (x + y) / tau <= xi_big,
        )
    };
    let local = fs.eval_scaled((x - r).max(0.0), tau).value * g.l1_norm;
    let opts = QuadOptions {
        abs_tol: 1e-15 * local,
        rel_tol: 1e-11,
        max_panels: 100_000,
    };
    let mut seg_breaks: Vec<f64> = g.breakpoints().to_vec();
    if cm != 0.0 {
        seg_breaks.push(x);
    }

    let mut total = 0.0;
    let mut start = 0;
    while start + 1 < breaks.len() {
        let mid = |k: usize| 0.5 * (breaks[k] + breaks[k + 1]);
        let membership = inside(mid(start));
        let mut end = start + 1;
        while end + 1 < breaks.len() && inside(mid(end)) == membership {
            end += 1;
        }
        let (m_in, p_in) = membership;
        let m_out = cm != 0.0 && !m_in;
        let p_out = cp != 0.0 && !p_in;
        let any_in = m_in || p_in;
        // linear part: in-table components, plus the center term when any is present
        if any_in {
            let mut kernel_at = |y: f64| {
                let mut k = center;
                if m_in {
                    let xi = ((x - y).abs() / tau).min(xi_big);
                    k += cm * a0_tau * fs.profile.phi_at_near(xi, &mut hint_m).unwrap_or(0.0);
                }
                if p_in {
                    let xi = ((x + y) / tau).min(xi_big);
                    k += cp * a0_tau * fs.profile.phi_at_near(xi, &mut hint_p).unwrap_or(0.0);
                }
                k
            };
            let mut ka = kernel_at(breaks[start]);
            for k in start..end {
                let kb = kernel_at(breaks[k + 1]);
                total += g.integrate_against_linear(breaks[k], breaks[k + 1], ka, kb)?;
                ka = kb;
            }
        }
        // smooth remainder beyond the table, integrated as one combined integrand
        if m_out || p_out {
            let with_center = !any_in;
            let far = |y: f64| {
                let gy = g.value(y);
                if gy == 0.0 {
                    return 0.0;
                }
                let mut k = if with_center { center } else { 0.0 };
                if m_out {
                    k += cm * fs.eval_scaled(x - y, tau).value;
                }
                if p_out {
                    k += cp * fs.eval_scaled(x + y, tau).value;
                }
                k * gy
            };
            total += integrate(far, breaks[start], breaks[end], &seg_breaks, opts)?.value;
        }
        start = end;
    }
    Ok(total)
}

/// `v^+` or `v^-` at `(x, t)`.
pub fn eval_v(
    fs: &FundamentalSolution,
    g: &InitialDatum,
    x: f64,
    t: f64,
    sign: Sign,
) -> Result<f64> {
    let which = match sign {
        Sign::Plus => Quantity::VPlus,
        Sign::Minus => Quantity::VMinus,
    };
    eval_quantity(fs, g, which, x, t)
}

/// Dirichlet solution `w1 = v^- - v^+`.
pub fn eval_w1(fs: &FundamentalSolution, g: &InitialDatum, x: f64, t: f64) -> Result<f64> {
    Ok(eval_v(fs, g, x, t, Sign::Minus)? - eval_v(fs, g, x, t, Sign::Plus)?)
}

/// Neumann solution `w2 = v^- + v^+`.
pub fn eval_w2(fs: &FundamentalSolution, g: &InitialDatum, x: f64, t: f64) -> Result<f64> {
    Ok(eval_v(fs, g, x, t, Sign::Minus)? + eval_v(fs, g, x, t, Sign::Plus)?)
}

/// `|f(x)| <= coefficient * x^{-exponent}` for `x >= valid_from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEnvelope {
    pub coefficient: f64,
    pub exponent: f64,
    pub valid_from: f64,
}

impl TailEnvelope {
    /// Certified decay envelopes for `which` at time `t`.
    ///
    /// The first comes from the profile decay bound
    /// `Phi(xi) <= Gamma(a+2)(2/xi)^{a+1}`. For the first-order deviations
    /// and `t > max(1, R^{1+alpha})` the `C2 t^{-1/(1+alpha)} ||y g||_1 / x`
    /// bound is added.
    pub fn for_quantity(
        fs: &FundamentalSolution,
        g: &InitialDatum,
        which: Quantity,
        t: f64,
    ) -> Vec<Self> {
        let a = fs.order.alpha();
        let tau = fs.scale(t);
        let r = g.support_end;
        let q = 1.0 + a;
        // E_t(x) <= e_coef x^{-q} for x >= tau
        let e_coef = fs.a0 * tau.powf(a) * gamma(a + 2.0) * 2f64.powf(q);
        let l1 = g.l1_norm;
        // E_t(x - R) <= 2^q e_coef x^{-q} for x >= max(tau + R, 2R)
        let shifted = 2f64.powf(q);
        let far = (tau + r).max(2.0 * r);
        let profile = |factor: f64, from: f64| Self {
            coefficient: factor * e_coef * l1,
            exponent: q,
            valid_from: from,
        };
        let mut out = vec![match which {
            Quantity::Fundamental => Self {
                coefficient: e_coef,
                exponent: q,
                valid_from: tau,
            },
            Quantity::VPlus => profile(1.0, tau),
            Quantity::VPlusDev => profile(2.0, tau),
            Quantity::VMinus => profile(shifted, far),
            Quantity::W2 | Quantity::W1 | Quantity::VMinusDev => profile(shifted + 1.0, far),
            Quantity::W2Dev => profile(shifted + 3.0, far),
        }];
        let large_time = t > 1.0 && t > r.powf(q);
        if large_time {
            let first_order = c2_constant(a, fs.a0) / tau * g.first_moment;
            let factor = match which {
                Quantity::VPlusDev | Quantity::VMinusDev => Some(1.0),
                Quantity::W1 | Quantity::W2Dev => Some(2.0),
                _ => None,
            };
            if let Some(f) = factor {
                out.push(Self {
                    coefficient: f * first_order,
                    exponent: 1.0,
                    valid_from: tau.max(2.0 * r),
                });
            }
        }
        out
    }

    /// Bound on `int_X^inf |f|^p`, or `None` if not applicable at `X`.
    fn lp_tail(&self, x_big: f64, p: f64) -> Option<f64> {
        if self.coefficient == 0.0 {
            return Some(0.0);
        }
        let qp = self.exponent * p;
        if x_big < self.valid_from || qp <= 1.0 {
            return None;
        }
        Some(self.coefficient.powf(p) * x_big.powf(1.0 - qp) / (qp - 1.0))
    }

    /// Bound on `sup_{x >= X} |f|`, or `None` if not applicable at `X`.
    fn sup_tail(&self, x_big: f64) -> Option<f64> {
        if self.coefficient == 0.0 {
            return Some(0.0);
        }
        (x_big >= self.valid_from).then(|| self.coefficient * x_big.powf(-self.exponent))
    }

    /// Upper bound on the measure of `{x >= X : |f| > sigma}`.
    pub fn level_set_tail(&self, x_big: f64, sigma: f64) -> Option<f64> {
        if self.coefficient == 0.0 {
            return Some(0.0);
        }
        if x_big < self.valid_from {
            return None;
        }
        let reach = (self.coefficient / sigma).powf(1.0 / self.exponent);
        Some((reach - x_big).max(0.0))
    }
}

/// Values of one quantity on an `x` grid at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSlice {
    pub grid: RadialGrid,
    pub t: f64,
    pub values: Vec<f64>,
    pub which: Quantity,
    /// Decay envelopes valid beyond the grid; the tightest applicable one is used.
    pub envelopes: Vec<TailEnvelope>,
}

impl SolutionSlice {
    /// Subtracts the datum (used for small-time recovery); `g` vanishes
    /// beyond its support so the envelope is unchanged.
    pub fn minus_datum(&self, g: &InitialDatum) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| v - g.value(x))
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }
}

/// Evaluates `which` at every node of `grid` (parallel over nodes).
pub fn compute_slice(
    fs: &FundamentalSolution,
    g: &InitialDatum,
    which: Quantity,
    grid: &RadialGrid,
    t: f64,
) -> Result<SolutionSlice> {
    let values = grid
        .nodes()
        .par_iter()
        .map(|&x| eval_quantity(fs, g, which, x, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionSlice {
        grid: grid.clone(),
        t,
        values,
        which,
        envelopes: TailEnvelope::for_quantity(fs, g, which, t),
    })
}

/// `x` grid adapted to the datum scale `R` and the similarity scale `tau`:
/// dense on `[0, 2R]` and on `tau [0, 40]`, geometric out to `tau * 1e12`.
pub fn evaluation_grid(tau: f64, support_end: f64) -> Result<RadialGrid> {
    let mut pts = Vec::with_capacity(600);
    let r2 = 2.0 * support_end;
    pts.extend((0..=100).map(|i| r2 * i as f64 / 100.0));
    pts.extend((0..=200).map(|i| tau * 8.0 * i as f64 / 200.0));
    pts.extend((0..=64).map(|i| tau * (8.0 + 32.0 * i as f64 / 64.0)));
    let (lo, hi) = ((40.0f64).ln(), (1e12f64).ln());
    pts.extend((1..=180).map(|i| tau * (lo + (hi - lo) * i as f64 / 180.0).exp()));
    RadialGrid::from_points(pts, 1e-9)
}

/// Exponent of an `L^p` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad exponent `{other}`")))?;
                Self::finite(p)
            }
        }
    }

    pub fn finite(p: f64) -> Result<Self> {
        if p > 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidArgument(format!(
                "exponent must lie in (1, inf], got {p}"
            )))
        }
    }

    /// `1/p`, zero at infinity.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Largest share of `int |f|^p` that may be left to the envelope tail.
pub const MAX_RELATIVE_TAIL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Certified bound on `int_X^inf |f|^p` (finite p) or on `sup_{x>X} |f|` (p = inf).
    pub tail_bound: f64,
}

/// `L^p(0, inf)` norm of a slice: composite Simpson on the grid plus the
/// envelope tail beyond the last node. For `p = inf` the grid maximum is
/// refined by a parabola through its neighbours.
pub fn lp_norm(slice: &SolutionSlice, p: Exponent) -> Result<NormEstimate> {
    let x = slice.grid.nodes();
    let x_big = slice.grid.x_max();
    let tightest = |f: &dyn Fn(&TailEnvelope) -> Option<f64>| {
        slice
            .envelopes
            .iter()
            .filter_map(f)
            .min_by(|a, b| a.total_cmp(b))
            .ok_or_else(|| {
                Error::TailUncontrolled(format!("no decay envelope applies beyond x = {x_big}"))
            })
    };
    let abs: Vec<f64> = slice.values.iter().map(|v| v.abs()).collect();
    match p {
        Exponent::Infinity => {
            let (imax, &m) = abs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("grid is non-empty");
            let tail = tightest(&|e| e.sup_tail(x_big))?;
            if tail > m {
                return Err(Error::TailUncontrolled(format!(
                    "envelope {tail} beyond x = {x_big} exceeds the grid maximum {m}"
                )));
            }
            let mut value = m;
            if imax > 0 && imax + 1 < x.len() {
                let (x0, x1, x2) = (x[imax - 1], x[imax], x[imax + 1]);
                let (y0, y1, y2) = (abs[imax - 1], abs[imax], abs[imax + 1]);
                // vertex of the interpolating parabola
                let d01 = (y1 - y0) / (x1 - x0);
                let d12 = (y2 - y1) / (x2 - x1);
                let c2 = (d12 - d01) / (x2 - x0);
                if c2 < 0.0 {
                    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * c2);
                    if xv > x0 && xv < x2 {
                        let yv = y1 + d01 * (xv - x1) + c2 * (xv - x0) * (xv - x1);
                        value = value.max(yv);
                    }
                }
            }
            Ok(NormEstimate {
                value,
                tail_bound: tail,
            })
        }
        Exponent::Finite(pp) => {
            let pw: Vec<f64> = abs.iter().map(|v| v.powf(pp)).collect();
            let body = simpson(x, &pw);
            let tail = tightest(&|e| e.lp_tail(x_big, pp))?;
            if tail > MAX_RELATIVE_TAIL * body {
                return Err(Error::TailUncontrolled(format!(
                    "tail bound {tail:e} exceeds {MAX_RELATIVE_TAIL} of the body {body:e}"
                )));
            }
            Ok(NormEstimate {
                value: body.max(0.0).powf(1.0 / pp),
                tail_bound: tail,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_moments() {
        let g = InitialDatum::parse("indicator:0:1").unwrap();
        assert_eq!(g.support_end, 1.0);
        assert_eq!(g.mass, 1.0);
        assert_eq!(g.first_moment, 0.5);
        let tri = InitialDatum::triangle(1.0, 3.0).unwrap();
        assert_eq!(tri.mass, 1.0);
        assert_eq!(tri.first_moment, 2.0);
        assert_eq!(tri.value(2.0), 1.0);
        assert_eq!(tri.value(1.5), 0.5);
    }

    #[test]
    fn bump_moments_match_quadrature() {
        let b = InitialDatum::bump(0.0, 1.0).unwrap();
        // int_{-1}^{1} exp(1 - 1/(1-s^2)) ds, 30-digit reference
        assert!(
            (b.mass - 0.5 * 1.206_900_322_437_876_2).abs() < 1e-12,
            "{}",
            b.mass
        );
        assert!((b.first_moment - 0.5 * b.mass).abs() < 1e-15);
        assert_eq!(b.value(0.0), 0.0);
        assert_eq!(b.value(0.5), 1.0);
    }

    #[test]
    fn tabulated_moments_are_exact_for_linear_pieces() {
        let g = InitialDatum::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert!((g.mass - 2.0).abs() < 1e-15);
        assert!((g.first_moment - 2.0).abs() < 1e-15);
        let s = InitialDatum::tabulated(vec![0.0, 2.0], vec![1.0, -1.0]).unwrap();
        assert!(s.mass.abs() < 1e-15);
        assert!((s.l1_norm - 1.0).abs() < 1e-15);
        // int_0^1 y (1-y) + int_1^2 y (y-1) = 1/6 + 5/6
        assert!((s.first_moment - 1.0).abs() < 1e-15);
    }

    #[test]
    fn datum_csv_roundtrip() {
        let text = "y,g\n0,0\n0.5,1\n1,0\n";
        let g = InitialDatum::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(g.support_end, 1.0);
        assert!((g.mass - 0.5).abs() < 1e-15);
        assert!(InitialDatum::from_csv_reader("a,b\n1,2\n".as_bytes()).is_err());
        assert!(InitialDatum::from_csv_reader("y,g\n0,x\n".as_bytes()).is_err());
    }

    #[test]
    fn malformed_specs_are_rejected() {
        for bad in [
            "indicator:1",
            "blob:0:1",
            "indicator:0:x",
            "indicator:1:0",
            "bump:-1:1",
        ] {
            assert!(InitialDatum::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(Exponent::parse("inf").unwrap(), Exponent::Infinity);
        assert_eq!(Exponent::parse("2").unwrap(), Exponent::Finite(2.0));
        assert!(Exponent::parse("1").is_err());
        assert!(Exponent::parse("0.5").is_err());
    }

    #[test]
    fn table_breaks_map_back_to_nodes() {
        let nodes = [0.0, 0.5, 1.0, 1.5, 2.0];
        let mut out = Vec::new();
        // (x + y)/tau with x = 0.2, tau = 2: hits node 0.5 at y = 0.8
        push_table_breaks(&nodes, 2.0, 0.2, 1.0, 0.0, 1.0, &mut out);
        assert_eq!(out, vec![0.8]);
        out.clear();
        // (x - y)/tau with x = 2.5, tau = 1 on y in (0, 2): nodes 1.0, 1.5, 2.0 -> y = 1.5, 1.0, 0.5
        push_table_breaks(&nodes, 1.0, 2.5, -1.0, 0.0, 2.0, &mut out);
        out.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(out, vec![0.5, 1.0, 1.5]);
    }

    use crate::test_support::half_order_solution;
    use proptest::prelude::*;

    fn zero_datum() -> InitialDatum {
        InitialDatum::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_datum_gives_zero() {
        let fs = half_order_solution();
        let g = zero_datum();
        for which in [
            Quantity::VPlus,
            Quantity::VMinus,
            Quantity::W1,
            Quantity::W2Dev,
        ] {
            assert_eq!(eval_quantity(fs, &g, which, 0.7, 2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn v_plus_below_fundamental_times_mass() {
        let fs = half_order_solution();
        let g = InitialDatum::triangle(0.2, 1.4).unwrap();
        for &x in &[0.0, 0.5, 2.0, 9.0] {
            for &t in &[0.1, 1.0, 30.0] {
                let v = eval_v(fs, &g, x, t, Sign::Plus).unwrap();
                assert!(v <= fs.eval(x, t).unwrap() * g.l1_norm, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn matches_brute_force_riemann_sum() {
        // midpoint rule with 10^6 panels on [0, 1]
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        let (x, t) = (1.0, 2.0);
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let (mut plus, mut minus) = (0.0, 0.0);
        for k in 0..n {
            let y = (k as f64 + 0.5) * h;
            plus += fs.eval(x + y, t).unwrap() * h;
            minus += fs.eval(x - y, t).unwrap() * h;
        }
        let vp = eval_v(fs, &g, x, t, Sign::Plus).unwrap();
        let vm = eval_v(fs, &g, x, t, Sign::Minus).unwrap();
        assert!((vp - plus).abs() < 1e-6, "{vp} vs {plus}");
        assert!((vm - minus).abs() < 1e-6, "{vm} vs {minus}");
    }

    #[test]
    fn dirichlet_trace_vanishes() {
        let fs = half_order_solution();
        for spec in ["indicator:0:1", "bump:0.2:0.9", "triangle:0:2"] {
            let g = InitialDatum::parse(spec).unwrap();
            for &t in &[1e-3, 0.5, 4.0, 100.0] {
                let w1 = eval_w1(fs, &g, 0.0, t).unwrap();
                let w2 = eval_w2(fs, &g, 0.0, t).unwrap();
                assert!(
                    w1.abs() <= 1e-14 * w2.abs().max(1e-300),
                    "{spec} t={t}: {w1}"
                );
            }
        }
    }

    #[test]
    fn neumann_slope_at_origin_is_small() {
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        let h = 1e-4;
        for &t in &[0.5, 2.0, 16.0] {
            // one-sided quotient; the symmetric one vanishes identically by evenness
            let slope = (eval_w2(fs, &g, h, t).unwrap() - eval_w2(fs, &g, 0.0, t).unwrap()) / h;
            let allowed = 1e-2 * g.l1_norm / t.powf(2.0 / 1.5);
            assert!(slope.abs() <= allowed, "t={t}: {slope} vs {allowed}");
        }
    }

    #[test]
    fn neumann_solution_conserves_mass() {
        let fs = half_order_solution();
        let g = InitialDatum::triangle(0.0, 1.0).unwrap();
        for &t in &[0.5, 4.0, 64.0] {
            let grid = evaluation_grid(fs.scale(t), g.support_end).unwrap();
            let slice = compute_slice(fs, &g, Quantity::W2, &grid, t).unwrap();
            let body = simpson(grid.nodes(), &slice.values);
            // far field: w2 ~ 2 m E_t, whose mass beyond X follows from the profile tail
            let xi = grid.x_max() / fs.scale(t);
            let far = 2.0 * g.mass * fs.a0 * fs.tail.integral_from(xi).value;
            let e = slice.envelopes[0];
            let bound = e.coefficient * grid.x_max().powf(1.0 - e.exponent) / (e.exponent - 1.0);
            assert!(far < bound && bound < 1e-4);
            assert!((body + far - g.mass).abs() < 1e-5, "t={t}: {body} + {far}");
        }
    }

    #[test]
    fn norm_of_zero_slice_is_zero() {
        let fs = half_order_solution();
        let g = zero_datum();
        let grid = evaluation_grid(1.0, 1.0).unwrap();
        let s = compute_slice(fs, &g, Quantity::W1, &grid, 1.0).unwrap();
        for p in [
            Exponent::Infinity,
            Exponent::Finite(2.0),
            Exponent::Finite(1.5),
        ] {
            assert_eq!(lp_norm(&s, p).unwrap().value, 0.0);
        }
    }

    #[test]
    fn sup_norm_of_fundamental_is_a0() {
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        let grid = evaluation_grid(1.0, 1.0).unwrap();
        let s = compute_slice(fs, &g, Quantity::Fundamental, &grid, 1.0).unwrap();
        assert_eq!(lp_norm(&s, Exponent::Infinity).unwrap().value, fs.a0);
    }

    #[test]
    fn l2_norm_matches_fine_trapezoid() {
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        let t = 4.0;
        let grid = evaluation_grid(fs.scale(t), 1.0).unwrap();
        let s = compute_slice(fs, &g, Quantity::W1, &grid, t).unwrap();
        let n = lp_norm(&s, Exponent::Finite(2.0)).unwrap().value;
        // trapezoid on a uniform grid of 4e4 cells up to x = 400, tail below 1e-9
        let m = 40_000;
        let h = 400.0 / m as f64;
        let mut acc = 0.0;
        for k in 0..=m {
            let x = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            acc += w * eval_w1(fs, &g, x, t).unwrap().powi(2) * h;
        }
        let oracle = acc.sqrt();
        assert!((n / oracle - 1.0).abs() < 1e-5, "{n} vs {oracle}");
    }

    #[test]
    fn uncertifiable_tail_is_reported() {
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        let grid = RadialGrid::uniform(3.0, 30).unwrap();
        let s = compute_slice(fs, &g, Quantity::W1, &grid, 4.0).unwrap();
        assert!(matches!(
            lp_norm(&s, Exponent::Finite(2.0)),
            Err(Error::TailUncontrolled(_))
        ));
    }

    #[test]
    fn rejects_bad_coordinates() {
        let fs = half_order_solution();
        let g = InitialDatum::indicator(0.0, 1.0).unwrap();
        assert!(matches!(eval_w1(fs, &g, -1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(eval_w2(fs, &g, 1.0, 0.0), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn evaluators_are_linear_in_the_datum(
            g1 in proptest::collection::vec(-2.0f64..2.0, 5),
            g2 in proptest::collection::vec(-2.0f64..2.0, 5),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            x in 0.0f64..4.0, t in 0.05f64..50.0,
        ) {
            let fs = half_order_solution();
            let y = vec![0.0, 0.3, 0.5, 0.9, 1.2];
            let d1 = InitialDatum::tabulated(y.clone(), g1.clone()).unwrap();
            let d2 = InitialDatum::tabulated(y.clone(), g2.clone()).unwrap();
            let mix: Vec<f64> = g1.iter().zip(&g2).map(|(u, v)| a * u + b * v).collect();
            let dm = InitialDatum::tabulated(y, mix).unwrap();
            for which in [Quantity::W1, Quantity::W2, Quantity::VPlusDev, Quantity::W2Dev] {
                let e1 = eval_quantity(fs, &d1, which, x, t).unwrap();
                let e2 = eval_quantity(fs, &d2, which, x, t).unwrap();
                let em = eval_quantity(fs, &dm, which, x, t).unwrap();
                let scale = (a * e1).abs() + (b * e2).abs() + fs.eval(0.0, t).unwrap() * 1e-3;
                prop_assert!((em - (a * e1 + b * e2)).abs() <= 1e-11 * scale);
            }
        }
    }
}
