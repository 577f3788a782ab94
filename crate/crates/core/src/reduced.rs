//! The equivariant reduction `A = a(y)ω`, `φ = b(y)ω` of the first-order
//! equations: the ODE system read off from the forms engine, its series at
//! the Nahm pole, adaptive integration and a shooting solver for the
//! decaying solution.

use std::io::{Read, Write};
use std::sync::Arc;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::invariant::profile::{he_a, he_b, ScalarProfile};
use crate::invariant::{covariant_codifferential, first_equation, GeometryConventions, InvariantField, InvariantOneForm};
use crate::scalar::{rational, Jet2, Scalar};
use crate::spline::{CubicSpline, SplineAxis};
use crate::su2::Su2Element;

type Q = BigRational;

/// Monomials `1, a, b, a², ab, b²`.
pub const MONOMIALS: [&str; 6] = ["1", "a", "b", "a^2", "ab", "b^2"];

/// `a′ = p_a(a, b)`, `b′ = p_b(a, b)` with quadratic right sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub a_coeffs: [f64; 6],
    pub b_coeffs: [f64; 6],
}

fn monomials(a: f64, b: f64) -> [f64; 6] {
    [1.0, a, b, a * a, a * b, b * b]
}

fn dot(c: &[f64; 6], m: &[f64; 6]) -> f64 {
    c.iter().zip(m).map(|(x, y)| x * y).sum()
}

impl ReducedSystem {
    pub fn rhs(&self, a: f64, b: f64) -> (f64, f64) {
        let m = monomials(a, b);
        (dot(&self.a_coeffs, &m), dot(&self.b_coeffs, &m))
    }

    /// `[[∂a′/∂a, ∂a′/∂b], [∂b′/∂a, ∂b′/∂b]]`.
    pub fn jacobian(&self, a: f64, b: f64) -> [[f64; 2]; 2] {
        let row = |c: &[f64; 6]| [c[1] + 2.0 * c[3] * a + c[4] * b, c[2] + c[4] * a + 2.0 * c[5] * b];
        [row(&self.a_coeffs), row(&self.b_coeffs)]
    }

    /// Real eigenvalues of the Jacobian in increasing order, if real.
    pub fn eigenvalues(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let j = self.jacobian(a, b);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let disc = tr * tr / 4.0 - det;
        (disc >= 0.0).then(|| (tr / 2.0 - disc.sqrt(), tr / 2.0 + disc.sqrt()))
    }

    /// Relative defect of a jet pair: `|x′ − p(x)| / max(1, |x′|, largest term)`.
    pub fn defect(&self, a: Jet2, b: Jet2) -> f64 {
        let m = monomials(a.v, b.v);
        let (fa, fb) = self.rhs(a.v, b.v);
        let scale = |c: &[f64; 6], d: f64| c.iter().zip(&m).map(|(x, y)| (x * y).abs()).fold(d.abs().max(1.0), f64::max);
        ((a.d1 - fa).abs() / scale(&self.a_coeffs, a.d1)).max((b.d1 - fb).abs() / scale(&self.b_coeffs, b.d1))
    }

    pub fn describe(&self) -> String {
        let side = |c: &[f64; 6]| {
            let terms: Vec<String> = c
                .iter()
                .zip(MONOMIALS)
                .filter(|(x, _)| **x != 0.0)
                .map(|(x, m)| format!("{x:+}*{m}"))
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" ")
            }
        };
        format!("a' = {}; b' = {}", side(&self.a_coeffs), side(&self.b_coeffs))
    }
}

/// Engine residual components of the ansatz along `dy∧ω` and `*₃ω`.
struct Probe {
    normal: Q,
    tangential: Q,
}

fn omega_coefficient(u: &InvariantOneForm<Q>) -> Result<Q> {
    let t = u.c[0][0].clone();
    if *u == InvariantOneForm::omega().scale(&t) {
        Ok(t)
    } else {
        Err(KwError::CalibrationInconsistent(format!(
            "residual has components outside span{{dy^omega, omega^2}}: {u:?}"
        )))
    }
}

fn probe(conv: &GeometryConventions, a: &Q, b: &Q, a1: &Q, b1: &Q) -> Result<Probe> {
    let w = InvariantOneForm::<Q>::omega();
    let (aw, bw) = (w.scale(a), w.scale(b));
    let eq1 = first_equation(conv, &aw, &w.scale(a1), &bw, &w.scale(b1), &Su2Element::zero());
    let eq2 = covariant_codifferential(conv, &aw, &bw, &Su2Element::zero());
    if !eq2.is_zero() {
        return Err(KwError::CalibrationInconsistent("second equation does not vanish on the ansatz".into()));
    }
    Ok(Probe {
        normal: omega_coefficient(&eq1.normal)?,
        tangential: omega_coefficient(&eq1.tangential)?,
    })
}

/// Solve the residual for `(a′, b′)` at a rational point.
fn solve_derivatives(conv: &GeometryConventions, a: &Q, b: &Q) -> Result<(Q, Q)> {
    let zero = Q::int(0);
    let one = Q::int(1);
    let r0 = probe(conv, a, b, &zero, &zero)?;
    let ra = probe(conv, a, b, &one, &zero)?;
    let rb = probe(conv, a, b, &zero, &one)?;
    let m = [
        [ra.normal.clone() - r0.normal.clone(), rb.normal.clone() - r0.normal.clone()],
        [ra.tangential.clone() - r0.tangential.clone(), rb.tangential.clone() - r0.tangential.clone()],
    ];
    let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
    if det == zero {
        return Err(KwError::CalibrationInconsistent("derivative terms are degenerate".into()));
    }
    let (n0, t0) = (-r0.normal, -r0.tangential);
    let da = (n0.clone() * m[1][1].clone() - m[0][1].clone() * t0.clone()) / det.clone();
    let db = (m[0][0].clone() * t0 - m[1][0].clone() * n0) / det;
    Ok((da, db))
}

/// Quadratic interpolation through six points; the exact rational
/// coefficients of `[1, a, b, a², ab, b²]`.
fn quadratic_coefficients(p: impl Fn(&Q, &Q) -> Result<Q>) -> Result<[Q; 6]> {
    let q = |n: i64| Q::int(n);
    let p00 = p(&q(0), &q(0))?;
    let p10 = p(&q(1), &q(0))?;
    let pm0 = p(&q(-1), &q(0))?;
    let p01 = p(&q(0), &q(1))?;
    let p0m = p(&q(0), &q(-1))?;
    let p11 = p(&q(1), &q(1))?;
    let half = Q::half();
    let c1 = (p10.clone() - pm0.clone()) * half.clone();
    let c3 = (p10.clone() + pm0) * half.clone() - p00.clone();
    let c2 = (p01.clone() - p0m.clone()) * half.clone();
    let c5 = (p01 + p0m) * half - p00.clone();
    let c4 = p11 - p00.clone() - c1.clone() - c2.clone() - c3.clone() - c5.clone();
    Ok([p00, c1, c2, c3, c4, c5])
}

fn eval_exact(c: &[Q; 6], a: &Q, b: &Q) -> Q {
    let m = [Q::int(1), a.clone(), b.clone(), a.clone() * a.clone(), a.clone() * b.clone(), b.clone() * b.clone()];
    c.iter().zip(m).fold(Q::int(0), |acc, (x, y)| acc + x.clone() * y)
}

/// Read the reduced system off the residual operator.
pub fn derive_reduced_system(conv: &GeometryConventions) -> Result<ReducedSystem> {
    let ca = quadratic_coefficients(|a, b| solve_derivatives(conv, a, b).map(|d| d.0))?;
    let cb = quadratic_coefficients(|a, b| solve_derivatives(conv, a, b).map(|d| d.1))?;
    for (a, b) in [(rational(2, 1), rational(3, 1)), (rational(-3, 1), rational(5, 2)), (rational(1, 3), rational(-7, 1))] {
        let (da, db) = solve_derivatives(conv, &a, &b)?;
        if da != eval_exact(&ca, &a, &b) || db != eval_exact(&cb, &a, &b) {
            return Err(KwError::CalibrationInconsistent("reduced right side is not quadratic".into()));
        }
    }
    let f = |c: [Q; 6]| c.map(|x| x.to_f64_lossy());
    Ok(ReducedSystem {
        a_coeffs: f(ca),
        b_coeffs: f(cb),
    })
}

/// Largest relative defect of a pair of scalar profiles on a grid.
pub fn max_defect(sys: &ReducedSystem, a: &dyn ScalarProfile, b: &dyn ScalarProfile, ys: &[f64]) -> f64 {
    ys.iter().map(|&y| sys.defect(a.jet(y), b.jet(y))).fold(0.0, f64::max)
}

/// Laurent coefficients stored from power −2: index `i` is `y^{i−2}`.
const OFFSET: usize = 2;

fn series_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if i + j >= OFFSET && i + j - OFFSET < n {
                out[i + j - OFFSET] += xi * yj;
            }
        }
    }
    out
}

fn series_poly(c: &[f64; 6], a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut one = vec![0.0; n];
    one[OFFSET] = 1.0;
    let terms = [one, a.to_vec(), b.to_vec(), series_mul(a, a), series_mul(a, b), series_mul(b, b)];
    (0..n).map(|k| c.iter().zip(&terms).map(|(ci, t)| ci * t[k]).sum()).collect()
}

/// A coefficient left undetermined by the matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeCoefficient {
    pub series: char,
    pub power: i32,
    pub value: f64,
}

/// `a = Σ_{k≥0} A_k y^k`, `b = Σ_{k≥−1} B_k y^k` to the given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicialExpansion {
    pub order: usize,
    /// `A_0, …, A_order`.
    pub a: Vec<f64>,
    /// `B_{−1}, …, B_order`.
    pub b: Vec<f64>,
    pub free: Vec<FreeCoefficient>,
    /// Powers whose coefficients were uniquely forced, as `(series, power)`.
    pub forced: Vec<(char, i32)>,
}

impl IndicialExpansion {
    pub fn a_coeff(&self, k: i32) -> f64 {
        usize::try_from(k).ok().and_then(|i| self.a.get(i)).copied().unwrap_or(0.0)
    }

    pub fn b_coeff(&self, k: i32) -> f64 {
        usize::try_from(k + 1).ok().and_then(|i| self.b.get(i)).copied().unwrap_or(0.0)
    }

    /// Jets of `a` and `b` from the truncated series.
    pub fn eval(&self, y: f64) -> (Jet2, Jet2) {
        let mut a = Jet2::cst(0.0);
        for (k, c) in self.a.iter().enumerate() {
            a = a + term(*c, k as i32, y);
        }
        let mut b = Jet2::cst(0.0);
        for (i, c) in self.b.iter().enumerate() {
            b = b + term(*c, i as i32 - 1, y);
        }
        (a, b)
    }

    /// First free coefficient, the shooting parameter.
    pub fn parameter(&self) -> Option<&FreeCoefficient> {
        self.free.first()
    }

    /// Same expansion with the first free coefficient replaced and the
    /// higher orders re-matched.
    pub fn with_parameter(&self, sys: &ReducedSystem, value: f64) -> Result<IndicialExpansion> {
        let mut free: Vec<f64> = self.free.iter().map(|f| f.value).collect();
        if free.is_empty() {
            return Err(KwError::SeriesMatching {
                order: self.order as i32,
                reason: "no free coefficient".into(),
            });
        }
        free[0] = value;
        indicial_expand(sys, self.order, &IndicialOptions { free, a0: None })
    }
}

fn term(c: f64, k: i32, y: f64) -> Jet2 {
    let k_f = f64::from(k);
    Jet2 {
        v: c * y.powi(k),
        d1: c * k_f * y.powi(k - 1),
        d2: c * k_f * (k_f - 1.0) * y.powi(k - 2),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndicialOptions {
    /// Values assigned to resonant coefficients, in order of appearance.
    pub free: Vec<f64>,
    /// Prescribed `a(0)`, checked against the matching at order 0.
    pub a0: Option<f64>,
}

pub const MAX_SERIES_ORDER: usize = 6;
const MATCH_TOL: f64 = 1e-12;

/// Match the power series of a Nahm-pole solution order by order.
pub fn indicial_expand(sys: &ReducedSystem, order: usize, opts: &IndicialOptions) -> Result<IndicialExpansion> {
    let err = |order: i32, reason: &str| KwError::SeriesMatching {
        order,
        reason: reason.into(),
    };
    if order > MAX_SERIES_ORDER {
        return Err(err(order as i32, "order above 6"));
    }
    let len = order + 1 + OFFSET;
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];

    // Pole: b′ = −B/y² balances c·b² only.
    let (ca, cb) = (&sys.a_coeffs, &sys.b_coeffs);
    if cb[5] == 0.0 {
        return Err(err(-1, "no quadratic b-term to balance a pole"));
    }
    let pole = -1.0 / cb[5];
    if ca[5].abs() > MATCH_TOL {
        return Err(err(-1, "a-equation has an unbalanced b^2 pole"));
    }
    b[OFFSET - 1] = pole;

    let mut free_iter = opts.free.iter().copied();
    let mut free = Vec::new();
    let mut forced = vec![('b', -1)];
    for n in 0..=order {
        let idx = n + OFFSET;
        let p = n + OFFSET - 1;
        let residual_at = |a: &[f64], b: &[f64]| (series_poly(ca, a, b)[p], series_poly(cb, a, b)[p]);
        let r0 = residual_at(&a, &b);
        let mut a1 = a.clone();
        a1[idx] = 1.0;
        let ra = residual_at(&a1, &b);
        let mut b1 = b.clone();
        b1[idx] = 1.0;
        let rb = residual_at(&a, &b1);
        let nf = n as f64;
        // (n − L)(A_n, B_n) = r0
        let m = [[nf - (ra.0 - r0.0), -(rb.0 - r0.0)], [-(ra.1 - r0.1), nf - (rb.1 - r0.1)]];
        let rhs = [r0.0, r0.1];

        if n == 0 {
            if let Some(v) = opts.a0 {
                a[idx] = v;
                let mut ab = a.clone();
                // B_0 from the b-row with A_0 fixed.
                if m[1][1].abs() > MATCH_TOL {
                    ab[idx] = v;
                    b[idx] = (rhs[1] - m[1][0] * v) / m[1][1];
                }
                let defect = m[0][0] * v + m[0][1] * b[idx] - rhs[0];
                if defect.abs() > MATCH_TOL {
                    return Err(err(0, "a(0) differs from the forced value; the matching needs a log term"));
                }
                forced.push(('b', 0));
                continue;
            }
        }

        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().fold(1.0f64, |s, x| s.max(x.abs()));
        if det.abs() > MATCH_TOL * scale * scale {
            a[idx] = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
            b[idx] = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
            forced.push(('a', n as i32));
            forced.push(('b', n as i32));
            continue;
        }
        // Resonance: one row vanishes (rank one) or both (rank zero).
        let rows = [(m[0], rhs[0]), (m[1], rhs[1])];
        let strongest = if m[0].iter().map(|x| x.abs()).sum::<f64>() >= m[1].iter().map(|x| x.abs()).sum::<f64>() {
            0
        } else {
            1
        };
        let (row, r) = rows[strongest];
        let (other, ro) = rows[1 - strongest];
        let row_norm = row[0].abs().max(row[1].abs());
        if row_norm <= MATCH_TOL {
            if rhs[0].abs() > MATCH_TOL || rhs[1].abs() > MATCH_TOL {
                return Err(err(n as i32, "inconsistent resonant order; a log term is required"));
            }
            for (s, v) in [('a', &mut a), ('b', &mut b)] {
                let t = free_iter.next().unwrap_or(0.0);
                v[idx] = t;
                free.push(FreeCoefficient { series: s, power: n as i32, value: t });
            }
            continue;
        }
        // `other` must be a multiple of `row`, consistently with the right side.
        let k = if row[0].abs() >= row[1].abs() { other[0] / row[0] } else { other[1] / row[1] };
        if (other[0] - k * row[0]).abs() > MATCH_TOL * scale
            || (other[1] - k * row[1]).abs() > MATCH_TOL * scale
            || (ro - k * r).abs() > MATCH_TOL * scale.max(r.abs())
        {
            return Err(err(n as i32, "inconsistent resonant order; a log term is required"));
        }
        let t = free_iter.next().unwrap_or(0.0);
        if row[0].abs() >= row[1].abs() {
            b[idx] = t;
            a[idx] = (r - row[1] * t) / row[0];
            free.push(FreeCoefficient { series: 'b', power: n as i32, value: t });
            forced.push(('a', n as i32));
        } else {
            a[idx] = t;
            b[idx] = (r - row[0] * t) / row[1];
            free.push(FreeCoefficient { series: 'a', power: n as i32, value: t });
            forced.push(('b', n as i32));
        }
    }
    Ok(IndicialExpansion {
        order,
        a: a[OFFSET..].to_vec(),
        b: b[OFFSET - 1..].to_vec(),
        free,
        forced,
    })
}

/// Step control of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in `ln y`; also the sampling density of the trajectory.
    pub h_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 3e-15,
            atol: 1e-300,
            h_max: 0.02,
        }
    }
}

pub const BLOW_UP_NORM: f64 = 1e8;
const MAX_STEPS: usize = 2_000_000;

/// Sampled solution of an initial-value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ys: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    /// `(y, |state|)` where the blow-up threshold was crossed.
    pub blow_up: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, [f64; 2]) {
        (*self.ys.last().unwrap(), *self.states.last().unwrap())
    }
}

// Dormand–Prince 5(4).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Right side in `s = ln y`.
fn log_rhs(sys: &ReducedSystem, s: f64, x: [f64; 2]) -> [f64; 2] {
    let y = s.exp();
    let (fa, fb) = sys.rhs(x[0], x[1]);
    [y * fa, y * fb]
}

fn run(sys: &ReducedSystem, y0: f64, state: [f64; 2], y1: f64, ctl: &StepControl) -> Result<Trajectory> {
    if !(y0 > 0.0 && y1 > y0) || !state.iter().all(|v| v.is_finite()) {
        return Err(KwError::Integration(format!("invalid initial-value problem on [{y0}, {y1}]")));
    }
    if !(ctl.rtol > 0.0 && ctl.h_max > 0.0 && ctl.atol >= 0.0) {
        return Err(KwError::Integration("invalid step control".into()));
    }
    let (mut s, s1) = (y0.ln(), y1.ln());
    let mut x = state;
    let mut lo = [0.0; 2];
    let mut ys = vec![y0];
    let mut states = vec![x];
    let mut h = ctl.h_max.min(1e-3);
    let mut k = [[0.0; 2]; 7];
    k[0] = log_rhs(sys, s, x);
    for _ in 0..MAX_STEPS {
        if s >= s1 {
            return Ok(Trajectory { ys, states, blow_up: None });
        }
        let last = s + h >= s1;
        let h_step = if last { s1 - s } else { h };
        for i in 1..7 {
            let mut xi = x;
            for (j, kj) in k.iter().enumerate().take(i) {
                xi[0] += h_step * A[i][j] * kj[0];
                xi[1] += h_step * A[i][j] * kj[1];
            }
            k[i] = log_rhs(sys, s + C[i] * h_step, xi);
        }
        let mut next = x;
        let mut next_lo = lo;
        for c in 0..2 {
            let inc = h_step * (0..6).map(|j| A[6][j] * k[j][c]).sum::<f64>() + lo[c];
            next[c] = x[c] + inc;
            next_lo[c] = inc - (next[c] - x[c]);
        }
        let mut err = 0.0f64;
        for c in 0..2 {
            let e: f64 = h_step * (0..7).map(|j| E[j] * k[j][c]).sum::<f64>();
            let sc = ctl.atol + ctl.rtol * x[c].abs().max(next[c].abs()).max(f64::MIN_POSITIVE);
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            s = if last { s1 } else { s + h_step };
            x = next;
            lo = next_lo;
            k[0] = k[6];
            ys.push(if last { y1 } else { s.exp() });
            states.push(x);
            let norm = x[0].hypot(x[1]);
            if !(norm <= BLOW_UP_NORM) {
                return Ok(Trajectory { ys, states, blow_up: Some((s.exp(), norm)) });
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h_step * fac).min(ctl.h_max);
        if h < 1e-14 * s.abs().max(1.0) {
            let norm = x[0].hypot(x[1]);
            if norm > 1e3 {
                return Ok(Trajectory { ys, states, blow_up: Some((s.exp(), norm)) });
            }
            return Err(KwError::Integration(format!("step size underflow near y = {}", s.exp())));
        }
    }
    Err(KwError::Integration(format!("step budget exhausted near y = {}", s.exp())))
}

/// Integrate from `(y0, state)` to `y1`; blow-up is an error.
pub fn integrate_ivp(sys: &ReducedSystem, y0: f64, state: [f64; 2], y1: f64, ctl: &StepControl) -> Result<Trajectory> {
    let t = run(sys, y0, state, y1, ctl)?;
    match t.blow_up {
        Some((y, norm)) => Err(KwError::BlowUp { y, norm }),
        None => Ok(t),
    }
}

/// Closed-form decaying solution `(a, b)` at `y`.
pub fn he_state(y: f64) -> [f64; 2] {
    [he_a(y), he_b(y)]
}

/// How a shot ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotClass {
    /// The unstable component pushed `b → −∞` (parameter too large).
    Above,
    /// The unstable component pushed `a → −∞` (parameter too small).
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSample {
    pub parameter: f64,
    pub class: ShotClass,
    pub y_end: f64,
}

/// Shooting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootSpec {
    pub y0: f64,
    pub horizon: f64,
    pub bracket: (f64, f64),
    pub order: usize,
    pub rounds: usize,
    /// Candidates evaluated in parallel per round.
    pub fan_out: usize,
    pub control: StepControl,
}

impl Default for ShootSpec {
    fn default() -> Self {
        Self {
            y0: 0.1,
            horizon: 30.0,
            bracket: (-1.5, 0.0),
            order: MAX_SERIES_ORDER,
            rounds: 18,
            fan_out: 8,
            control: StepControl::default(),
        }
    }
}

fn classify(t: &Trajectory) -> ShotClass {
    let (_, [a, b]) = t.last();
    if a - b >= 0.0 {
        ShotClass::Above
    } else {
        ShotClass::Below
    }
}

/// Result of a shooting run; the trajectory is cut where it leaves the
/// stable manifold and continued by the two-term decay asymptotics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub parameter: f64,
    pub bracket: (f64, f64),
    pub expansion: IndicialExpansion,
    pub trajectory: Trajectory,
    pub y_cut: f64,
    /// `K` in `a ≈ K e^{−2y} − (2/3)K² e^{−4y}`, `b ≈ K e^{−2y} − (1/3)K² e^{−4y}`.
    pub tail_constant: f64,
    pub trace: Vec<ShotSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverLog {
    pub schema_version: u32,
    pub system: String,
    pub parameter: f64,
    pub bracket: (f64, f64),
    pub y_cut: f64,
    pub tail_constant: f64,
    pub trace: Vec<ShotSample>,
}

impl ShootResult {
    pub fn log(&self, sys: &ReducedSystem) -> SolverLog {
        SolverLog {
            schema_version: crate::report::SCHEMA_VERSION,
            system: sys.describe(),
            parameter: self.parameter,
            bracket: self.bracket,
            y_cut: self.y_cut,
            tail_constant: self.tail_constant,
            trace: self.trace.clone(),
        }
    }
}

fn shot(sys: &ReducedSystem, base: &IndicialExpansion, p: f64, spec: &ShootSpec) -> Result<(Trajectory, IndicialExpansion)> {
    let e = base.with_parameter(sys, p)?;
    let (a, b) = e.eval(spec.y0);
    Ok((run(sys, spec.y0, [a.v, b.v], spec.horizon, &spec.control)?, e))
}

/// Two-term decay asymptotics `(a, b)` with constant `k`.
fn tail_state(k: f64, y: f64) -> [f64; 2] {
    let e2 = (-2.0 * y).exp();
    let e4 = e2 * e2;
    [k * e2 - 2.0 / 3.0 * k * k * e4, k * e2 - k * k * e4 / 3.0]
}

/// Tail constant at `y` from `a + b` and the off-manifold defect `a − b − (b − a)_model`.
fn tail_fit(y: f64, s: [f64; 2]) -> (f64, f64) {
    let k = 0.5 * (s[0] + s[1]) * (2.0 * y).exp();
    let e4 = (-4.0 * y).exp();
    let model = -k * k * e4 / 3.0;
    (k, ((s[0] - s[1]) - model).abs())
}

/// Bisect (k-section) the first free coefficient for a solution decaying to `(0, 0)`.
pub fn shoot_for_decay(sys: &ReducedSystem, expansion: &IndicialExpansion, spec: &ShootSpec) -> Result<ShootResult> {
    if !(spec.y0 > 0.0 && spec.y0 <= 0.2) {
        return Err(KwError::Config(format!("series start y0 = {} outside (0, 0.2]", spec.y0)));
    }
    let (mut lo, mut hi) = spec.bracket;
    let mut trace = Vec::new();
    let probe = |p: f64| -> Result<ShotSample> {
        let (t, _) = shot(sys, expansion, p, spec)?;
        Ok(ShotSample { parameter: p, class: classify(&t), y_end: t.last().0 })
    };
    let (slo, shi) = (probe(lo)?, probe(hi)?);
    trace.push(slo.clone());
    trace.push(shi.clone());
    if slo.class == shi.class {
        return Err(KwError::NotBracketed(format!("both ends of [{lo}, {hi}] shoot {:?}", slo.class)));
    }
    let lo_class = slo.class;
    for _ in 0..spec.rounds {
        let n = spec.fan_out.max(1);
        let cands: Vec<f64> = (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect();
        let samples: Vec<ShotSample> = cands.par_iter().map(|&p| probe(p)).collect::<Result<_>>()?;
        let mut new = (lo, hi);
        for s in &samples {
            if s.class == lo_class {
                new.0 = s.parameter;
            } else {
                new.1 = s.parameter;
                break;
            }
        }
        trace.extend(samples);
        if new == (lo, hi) {
            break;
        }
        (lo, hi) = new;
    }
    let parameter = 0.5 * (lo + hi);
    let (trajectory, e) = shot(sys, expansion, parameter, spec)?;

    // Cut where the off-manifold defect is smallest, ignoring the series-dominated start.
    let mut best = (f64::INFINITY, 0usize);
    for (i, (&y, s)) in trajectory.ys.iter().zip(&trajectory.states).enumerate() {
        if y < 2.0 {
            continue;
        }
        let (_, d) = tail_fit(y, *s);
        if d < best.0 {
            best = (d, i);
        }
    }
    if !best.0.is_finite() {
        return Err(KwError::Integration("trajectory ends before the tail region".into()));
    }
    let y_cut = trajectory.ys[best.1];
    let (tail_constant, _) = tail_fit(y_cut, trajectory.states[best.1]);
    Ok(ShootResult {
        parameter,
        bracket: (lo, hi),
        expansion: e,
        trajectory,
        y_cut,
        tail_constant,
        trace,
    })
}

/// Profile assembled from a shooting run: series below `y0`, spline of the
/// trajectory up to the cut, decay asymptotics beyond. Derivatives are the
/// right side of the reduced system evaluated on the interpolated state.
pub struct ShotProfile {
    sys: ReducedSystem,
    expansion: IndicialExpansion,
    y0: f64,
    y_cut: f64,
    tail_constant: f64,
    a: CubicSpline,
    b: CubicSpline,
}

impl ShotProfile {
    pub fn new(sys: &ReducedSystem, r: &ShootResult, y0: f64) -> Result<Self> {
        let n = r.trajectory.ys.partition_point(|&y| y <= r.y_cut);
        let ys = &r.trajectory.ys[..n];
        let col = |k: usize| r.trajectory.states[..n].iter().map(|s| s[k]).collect::<Vec<_>>();
        Ok(Self {
            sys: sys.clone(),
            expansion: r.expansion.clone(),
            y0,
            y_cut: r.y_cut,
            tail_constant: r.tail_constant,
            a: CubicSpline::not_a_knot(ys, &col(0), SplineAxis::Log)?,
            b: CubicSpline::not_a_knot(ys, &col(1), SplineAxis::Log)?,
        })
    }

    pub fn state(&self, y: f64) -> [f64; 2] {
        if y < self.y0 {
            let (a, b) = self.expansion.eval(y);
            [a.v, b.v]
        } else if y <= self.y_cut {
            [self.a.eval(y).0, self.b.eval(y).0]
        } else {
            tail_state(self.tail_constant, y)
        }
    }

    fn jets(&self, y: f64) -> (Jet2, Jet2) {
        let [a, b] = self.state(y);
        let (fa, fb) = self.sys.rhs(a, b);
        let j = self.sys.jacobian(a, b);
        let sa = j[0][0] * fa + j[0][1] * fb;
        let sb = j[1][0] * fa + j[1][1] * fb;
        (Jet2 { v: a, d1: fa, d2: sa }, Jet2 { v: b, d1: fb, d2: sb })
    }

    pub fn field(self: &Arc<Self>) -> InvariantField {
        InvariantField::scalar(
            Arc::new(ShotComponent { profile: self.clone(), which: 0 }),
            Arc::new(ShotComponent { profile: self.clone(), which: 1 }),
        )
    }

    pub fn component(self: &Arc<Self>, which: usize) -> ShotComponent {
        ShotComponent { profile: self.clone(), which }
    }
}

pub struct ShotComponent {
    profile: Arc<ShotProfile>,
    which: usize,
}

impl ScalarProfile for ShotComponent {
    fn jet(&self, y: f64) -> Jet2 {
        let (a, b) = self.profile.jets(y);
        if self.which == 0 {
            a
        } else {
            b
        }
    }
}

pub const PROFILE_COLUMNS: [&str; 3] = ["y", "a", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

pub fn write_profile_csv<W: Write>(w: W, rows: &[ProfileRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(r: R) -> Result<Vec<ProfileRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != PROFILE_COLUMNS {
        return Err(KwError::ProfileData(format!("expected columns y,a,b, found {headers:?}")));
    }
    rd.deserialize().map(|row| row.map_err(KwError::from)).collect()
}
