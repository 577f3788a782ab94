//! Composite Gauss–Legendre quadrature on `[ε, ∞)` for integrands that blow up
//! polynomially at `ε → 0` and decay exponentially at infinity.
//!
//! `[ε, y_split]` is cut into geometrically growing panels, `[y_split, y_max]`
//! into uniform ones. The tail beyond `y_max` is either bounded from an
//! exponential envelope fitted on samples, or integrated after the substitution
//! `y = y_split − ln t`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};

/// Volume of the unit round S³.
pub const VOL_S3: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    TruncateBound,
    ExpSubstitution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub eps: f64,
    pub y_split: f64,
    pub y_max: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub tail_mode: TailMode,
    /// Decay rate `κ` of the tail envelope `K e^{−κy}`.
    pub tail_rate: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            y_split: 1.0,
            y_max: 30.0,
            panels: 64,
            nodes_per_panel: 16,
            tail_mode: TailMode::TruncateBound,
            tail_rate: 4.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Same layout with twice the panels on both ranges.
    pub fn refined(mut self) -> Self {
        self.panels *= 2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(KwError::InvalidQuadrature(m.to_string()));
        if !(self.eps > 0.0 && self.eps < self.y_split && self.y_split < self.y_max) {
            return bad("need 0 < eps < y_split < y_max");
        }
        if self.panels < 2 || self.panels % 2 != 0 {
            return bad("panel count must be even and at least 2");
        }
        if self.nodes_per_panel == 0 {
            return bad("nodes_per_panel must be positive");
        }
        if !(self.tail_rate > 0.0) {
            return bad("tail_rate must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Discretization estimate plus tail remainder.
    pub error_estimate: f64,
    pub tail: f64,
}

impl QuadResult {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            error_estimate: self.error_estimate * k.abs(),
            tail: self.tail * k.abs(),
        }
    }
}

fn rule(nodes: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("validated node count"))
}

fn checked<F: Fn(f64) -> f64>(f: &F, y: f64) -> Result<f64> {
    let v = f(y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KwError::NonFiniteIntegrand { y })
    }
}

/// Sum over the given panel edges, computed in parallel and added in order.
fn sum_panels<F>(gl: &GaussLegendre, edges: &[f64], f: &F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let parts: Vec<Result<f64>> = edges
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            let mut acc = 0.0;
            for (x, wt) in gl.iter() {
                acc += wt * checked(f, mid + half * x)?;
            }
            Ok(acc * half)
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

pub fn geometric_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    let r = (b / a).ln();
    (0..=n).map(|k| if k == n { b } else { a * (r * k as f64 / n as f64).exp() }).collect()
}

pub fn uniform_edges(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

/// `∫ₐᵇ f` on `n` panels, geometric if `geometric` (requires `a > 0`).
pub fn integrate_interval<F>(f: F, a: f64, b: f64, n: usize, nodes: usize, geometric: bool) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(b > a) || n < 2 || nodes == 0 || (geometric && !(a > 0.0)) {
        return Err(KwError::InvalidQuadrature(format!("interval [{a}, {b}] with {n} panels")));
    }
    let gl = rule(nodes);
    let edges = |m: usize| {
        if geometric {
            geometric_edges(a, b, m)
        } else {
            uniform_edges(a, b, m)
        }
    };
    let fine = sum_panels(&gl, &edges(n), &f)?;
    let coarse = sum_panels(&gl, &edges(n / 2), &f)?;
    Ok(QuadResult {
        value: fine,
        error_estimate: (fine - coarse).abs(),
        tail: 0.0,
    })
}

/// `∫_ε^∞ f(y) dy` according to `spec`.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let head = integrate_interval(&f, spec.eps, spec.y_split, spec.panels, spec.nodes_per_panel, true)?;
    match spec.tail_mode {
        TailMode::TruncateBound => {
            let body = integrate_interval(&f, spec.y_split, spec.y_max, spec.panels, spec.nodes_per_panel, false)?;
            let k = envelope_constant(&f, spec.y_split, spec.y_max, spec.tail_rate)?;
            let tail = 1.5 * k * (-spec.tail_rate * spec.y_max).exp() / spec.tail_rate;
            Ok(QuadResult {
                value: head.value + body.value,
                error_estimate: head.error_estimate + body.error_estimate + tail,
                tail,
            })
        }
        TailMode::ExpSubstitution => {
            let ys = spec.y_split;
            let g = |t: f64| {
                let y = ys - t.ln();
                let v = f(y);
                if v == 0.0 {
                    0.0
                } else {
                    v / t
                }
            };
            let body = integrate_interval(g, 0.0, 1.0, spec.panels, spec.nodes_per_panel, false)?;
            Ok(QuadResult {
                value: head.value + body.value,
                error_estimate: head.error_estimate + body.error_estimate,
                tail: 0.0,
            })
        }
    }
}

/// `max |f(y)| e^{κy}` over a sample grid of `[a, b]`.
pub fn envelope_constant<F>(f: &F, a: f64, b: f64, rate: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = 256;
    let mut k = 0.0f64;
    for i in 0..=n {
        let y = a + (b - a) * i as f64 / n as f64;
        k = k.max(checked(f, y)?.abs() * (rate * y).exp());
    }
    Ok(k)
}

/// `vol(S³) · ∫ density dy` for an S³-constant density.
pub fn l2_norm_sq<F>(density: F, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    Ok(integrate(density, spec)?.scaled(VOL_S3))
}
