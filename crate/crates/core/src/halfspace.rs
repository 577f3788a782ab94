//! Closed-form model solutions on the flat half-space ℝ³ × ℝ⁺ and the
//! pointwise residual of both field equations there.
//!
//! Coordinates are ordered `(x₁, x₂, x₃, y)`; forward-mode duals carry the four
//! first partials of every coefficient. The Hodge star uses the orientation
//! `dy∧dx₁∧dx₂∧dx₃`, the one for which the Nahm pole solves the equations.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::fault;
use crate::scalar::{Dual4, Real};
use crate::su2::{bracket, inner, AdRotation, Su2Element};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfspacePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub y: f64,
}

impl HalfspacePoint {
    pub fn new(x1: f64, x2: f64, x3: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) {
            return Err(KwError::BoundaryEvaluation { y });
        }
        Ok(Self { x1, x2, x3, y })
    }

    pub fn r(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x1: s * self.x1,
            x2: s * self.x2,
            x3: s * self.x3,
            y: s * self.y,
        }
    }

    fn duals(&self) -> [Dual4; 4] {
        [
            Dual4::coordinate(self.x1, 0),
            Dual4::coordinate(self.x2, 1),
            Dual4::coordinate(self.x3, 2),
            Dual4::coordinate(self.y, 3),
        ]
    }
}

/// Coefficients `A = Σ Aₘ dxₘ`, `φ = Σ φₘ dxₘ` (m = 1..3, no `dy` part) with
/// component `[m][i]` along `tᵢ`.
#[derive(Debug, Clone, Copy)]
pub struct FlatCoefficients<R> {
    pub a: [[R; 3]; 3],
    pub phi: [[R; 3]; 3],
}

type Evaluator = dyn Fn([Dual4; 4]) -> FlatCoefficients<Dual4> + Send + Sync;

#[derive(Clone)]
pub struct FlatModelField {
    pub name: String,
    eval: Arc<Evaluator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatValues {
    pub a: [Su2Element; 3],
    pub phi: [Su2Element; 3],
}

impl FlatModelField {
    pub fn new(name: &str, eval: impl Fn([Dual4; 4]) -> FlatCoefficients<Dual4> + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_string(),
            eval: Arc::new(eval),
        }
    }

    pub fn nahm_pole() -> Self {
        Self::new("nahm_pole", nahm_pole_coefficients)
    }

    pub fn nahm_singular() -> Self {
        Self::new("nahm_singular", nahm_singular_coefficients)
    }

    pub fn nahm_singular_mirrored() -> Self {
        Self::new("nahm_singular_mirrored", nahm_singular_mirrored_generic::<Dual4>)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| FlatCoefficients {
            a: [[Dual4::cst(0.0); 3]; 3],
            phi: [[Dual4::cst(0.0); 3]; 3],
        })
    }

    pub fn coefficients(&self, p: &HalfspacePoint) -> FlatCoefficients<Dual4> {
        (self.eval)(p.duals())
    }

    pub fn values(&self, p: &HalfspacePoint) -> FlatValues {
        let c = self.coefficients(p);
        let conv = |m: &[[Dual4; 3]; 3]| -> [Su2Element; 3] {
            std::array::from_fn(|k| Su2Element::new(m[k][0].v, m[k][1].v, m[k][2].v))
        };
        FlatValues {
            a: conv(&c.a),
            phi: conv(&c.phi),
        }
    }

    /// Adds `extra` to the current field.
    pub fn plus(&self, name: &str, extra: impl Fn([Dual4; 4]) -> FlatCoefficients<Dual4> + Send + Sync + 'static) -> Self {
        let base = self.eval.clone();
        Self::new(name, move |x| {
            let (b, e) = (base(x), extra(x));
            FlatCoefficients {
                a: std::array::from_fn(|m| std::array::from_fn(|i| b.a[m][i] + e.a[m][i])),
                phi: std::array::from_fn(|m| std::array::from_fn(|i| b.phi[m][i] + e.phi[m][i])),
            }
        })
    }

    /// Conjugates every coefficient by a constant adjoint rotation.
    pub fn rotated(&self, rot: &AdRotation) -> Self {
        let base = self.eval.clone();
        let m = rot.matrix();
        Self::new(&self.name, move |x| {
            let b = base(x);
            let apply = |v: &[Dual4; 3]| -> [Dual4; 3] {
                std::array::from_fn(|i| v[0].scale(m[i][0]) + v[1].scale(m[i][1]) + v[2].scale(m[i][2]))
            };
            FlatCoefficients {
                a: b.a.map(|v| apply(&v)),
                phi: b.phi.map(|v| apply(&v)),
            }
        })
    }
}

/// `φ = Σ tᵢ/y dxᵢ`, `A = 0`.
pub fn nahm_pole_generic<R: Real>(x: [R; 4]) -> FlatCoefficients<R> {
    let zero = R::cst(0.0);
    let inv = x[3].recip();
    FlatCoefficients {
        a: [[zero; 3]; 3],
        phi: std::array::from_fn(|m| std::array::from_fn(|i| if i == m { inv } else { zero })),
    }
}

fn nahm_pole_coefficients(x: [Dual4; 4]) -> FlatCoefficients<Dual4> {
    nahm_pole_generic(x)
}

/// τ = 1 singular model, in the form that solves the equations with the
/// orientation above (see the crate README for the relation to other sign conventions).
pub fn nahm_singular_generic<R: Real>(x: [R; 4]) -> FlatCoefficients<R> {
    let zero = R::cst(0.0);
    let (x1, x2, y) = (x[0], x[1], x[3]);
    let rho2 = x1 * x1 + x2 * x2 + y * y;
    let rho = rho2.sqrt();
    let f1 = [x1 / rho, x2 / rho, zero];
    let f2 = [-x2 / rho, x1 / rho, zero];
    let f3 = [zero, zero, R::cst(1.0) + y * y / rho2];
    let inv_y = y.recip();
    let phi = [f1, f2, f3].map(|f| f.map(|c| c * inv_y));
    let mut a = [[zero; 3]; 3];
    a[0][2] = x2 / rho2;
    a[1][2] = -x1 / rho2;
    FlatCoefficients { a, phi }
}

fn nahm_singular_coefficients(x: [Dual4; 4]) -> FlatCoefficients<Dual4> {
    nahm_singular_generic(x)
}

/// The τ = 1 model with the sign pattern `𝔣₁ = (x₁t₁ − x₂t₂)/ρ`,
/// `𝔣₂ = (x₁t₂ + x₂t₁)/ρ`, `A = (−x₂dx₁ + x₁dx₂)t₃/ρ²`. It is the mirror image
/// `x₂ ↦ −x₂` of [`nahm_singular_generic`] and does not solve the equations;
/// kept for reporting.
pub fn nahm_singular_mirrored_generic<R: Real>(x: [R; 4]) -> FlatCoefficients<R> {
    let mut reflected = x;
    reflected[1] = -x[1];
    nahm_singular_generic(reflected)
}

/// Value and partials `∂_ν` of each Lie-algebra coefficient of a 1-form,
/// indexed by coordinate `μ ∈ 0..4` (`μ = 3` is `dy`, identically zero here).
struct Spread {
    val: [Su2Element; 4],
    der: [[Su2Element; 4]; 4],
}

fn spread(m: &[[Dual4; 3]; 3]) -> Spread {
    let val = std::array::from_fn(|mu| {
        if mu < 3 {
            Su2Element::new(m[mu][0].v, m[mu][1].v, m[mu][2].v)
        } else {
            Su2Element::zero()
        }
    });
    let der = std::array::from_fn(|nu| {
        std::array::from_fn(|mu| {
            if mu < 3 {
                Su2Element::new(m[mu][0].d[nu], m[mu][1].d[nu], m[mu][2].d[nu])
            } else {
                Su2Element::zero()
            }
        })
    });
    Spread { val, der }
}

fn levi_civita(idx: [usize; 4]) -> f64 {
    let mut parity = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                parity = -parity;
            }
        }
    }
    parity
}

/// `ε` of the oriented frame `(x₁,x₂,x₃,y)` relative to `dy∧dx₁∧dx₂∧dx₃`.
fn orientation() -> f64 {
    -f64::from(fault::hodge_sign())
}

/// Both residual norms and the largest term magnitude at `p`.
pub fn flat_residual_parts(field: &FlatModelField, p: &HalfspacePoint) -> (f64, f64, f64) {
    let c = field.coefficients(p);
    residual_from(&spread(&c.a), &spread(&c.phi))
}

fn residual_from(a: &Spread, f: &Spread) -> (f64, f64, f64) {
    let two_form = |g: &dyn Fn(usize, usize) -> Su2Element| -> [[Su2Element; 4]; 4] {
        std::array::from_fn(|m| std::array::from_fn(|n| g(m, n)))
    };
    let curv = two_form(&|m, n| a.der[m][n].clone() - a.der[n][m].clone() + bracket(&a.val[m], &a.val[n]));
    let sq = two_form(&|m, n| bracket(&f.val[m], &f.val[n]));
    let dphi = two_form(&|m, n| {
        f.der[m][n].clone() - f.der[n][m].clone() + bracket(&a.val[m], &f.val[n]) - bracket(&a.val[n], &f.val[m])
    });
    let o = orientation();
    let star = two_form(&|m, n| {
        let mut acc = Su2Element::zero();
        for r in 0..4 {
            for s in (r + 1)..4 {
                let e = levi_civita([m, n, r, s]);
                if e != 0.0 {
                    acc = acc + (o * e) * dphi[r][s].clone();
                }
            }
        }
        acc
    });
    let mut eq1 = 0.0;
    let mut scale = 1.0f64;
    for m in 0..4 {
        for n in (m + 1)..4 {
            let r = curv[m][n].clone() - sq[m][n].clone() - star[m][n].clone();
            eq1 += inner(&r, &r);
            for t in [&curv[m][n], &sq[m][n], &star[m][n]] {
                scale = scale.max(inner(t, t).sqrt());
            }
        }
    }
    let mut div = Su2Element::zero();
    for m in 0..4 {
        div = div + f.der[m][m].clone() + bracket(&a.val[m], &f.val[m]);
        scale = scale.max(inner(&f.der[m][m], &f.der[m][m]).sqrt());
    }
    (eq1.sqrt(), inner(&div, &div).sqrt(), scale)
}

/// Combined pointwise residual norm of both equations.
pub fn kw_residual_flat(field: &FlatModelField, p: &HalfspacePoint) -> f64 {
    let (e1, e2, _) = flat_residual_parts(field, p);
    e1.hypot(e2)
}

/// Residual relative to `max(1, largest term)`.
pub fn kw_residual_flat_scaled(field: &FlatModelField, p: &HalfspacePoint) -> f64 {
    let (e1, e2, s) = flat_residual_parts(field, p);
    e1.hypot(e2) / s
}

/// Dilation pullback `(s·A(s·p), s·φ(s·p))`.
pub fn scale_pullback(field: &FlatModelField, s: f64) -> Result<FlatModelField> {
    if !(s > 0.0) {
        return Err(KwError::NonPositiveScale(s));
    }
    let base = field.eval.clone();
    Ok(FlatModelField::new(&format!("{}@{s}", field.name), move |x| {
        let b = base(x.map(|c| c.scale(s)));
        FlatCoefficients {
            a: b.a.map(|v| v.map(|c| c.scale(s))),
            phi: b.phi.map(|v| v.map(|c| c.scale(s))),
        }
    }))
}

/// Seeded sample points with `|xᵢ| ≤ 2`, `y` log-uniform in `[0.05, 5]` and `r ≥ r_min`.
pub fn sample_points(seed: u64, n: usize, r_min: f64) -> Vec<HalfspacePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = HalfspacePoint {
            x1: rng.gen_range(-2.0..2.0),
            x2: rng.gen_range(-2.0..2.0),
            x3: rng.gen_range(-2.0..2.0),
            y: (rng.gen_range((0.05f64).ln()..(5.0f64).ln())).exp(),
        };
        if p.r() >= r_min {
            out.push(p);
        }
    }
    out
}

/// Profile-level dilation of the decaying solution's Higgs coefficient:
/// `s·b(s·y)`, which tends to the Nahm pole `1/y` as `s → 0`.
pub fn scaled_he_b(s: f64, y: f64) -> f64 {
    s * crate::invariant::profile::he_b(s * y)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingSlope {
    pub scales: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `log|s·b(s·y) − 1/y|` against `log s`.
pub fn he_scaling_slope(y: f64, scales: &[f64]) -> ScalingSlope {
    let errors: Vec<f64> = scales.iter().map(|&s| (scaled_he_b(s, y) - 1.0 / y).abs()).collect();
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    ScalingSlope {
        scales: scales.to_vec(),
        errors,
        slope: fit_slope(&xs, &ys),
    }
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRow {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub y: f64,
    pub res_eq1: f64,
    pub res_eq2: f64,
}

#[derive(Deserialize)]
struct PointRow {
    x1: f64,
    x2: f64,
    x3: f64,
    y: f64,
}

pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<HalfspacePoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<PointRow>() {
        let r = row?;
        out.push(HalfspacePoint::new(r.x1, r.x2, r.x3, r.y)?);
    }
    Ok(out)
}

pub fn residual_rows(field: &FlatModelField, points: &[HalfspacePoint]) -> Vec<ResidualRow> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|p| {
            let (e1, e2, _) = flat_residual_parts(field, p);
            ResidualRow {
                x1: p.x1,
                x2: p.x2,
                x3: p.x3,
                y: p.y,
                res_eq1: e1,
                res_eq2: e2,
            }
        })
        .collect()
}

pub fn write_residuals_csv<W: Write>(writer: W, rows: &[ResidualRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x1: f64, x2: f64, x3: f64, y: f64) -> HalfspacePoint {
        HalfspacePoint::new(x1, x2, x3, y).unwrap()
    }

    fn t(i: usize) -> Su2Element {
        Su2Element::basis(i)
    }

    #[test]
    fn levi_civita_signs() {
        assert_eq!(levi_civita([0, 1, 2, 3]), 1.0);
        assert_eq!(levi_civita([1, 0, 2, 3]), -1.0);
        assert_eq!(levi_civita([3, 0, 1, 2]), -1.0);
        assert_eq!(levi_civita([1, 2, 3, 0]), -1.0);
        assert_eq!(levi_civita([1, 1, 2, 3]), 0.0);
    }

    #[test]
    fn nahm_pole_values() {
        let v = FlatModelField::nahm_pole().values(&p(0.0, 0.0, 0.0, 1.0));
        assert_eq!(v.phi, [t(0), t(1), t(2)]);
        assert!(v.a.iter().all(Su2Element::is_zero));
        let v = FlatModelField::nahm_pole().values(&p(5.0, -3.0, 2.0, 0.5));
        assert_eq!(v.phi, [2.0 * t(0), 2.0 * t(1), 2.0 * t(2)]);
    }

    #[test]
    fn boundary_rejected() {
        assert!(HalfspacePoint::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(HalfspacePoint::new(0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn singular_values() {
        let v = FlatModelField::nahm_singular().values(&p(0.0, 0.0, 0.7, 0.5));
        assert!(v.a.iter().all(Su2Element::is_zero));
        assert!((v.phi[2].coeffs[2] - 2.0 / 0.5).abs() < 1e-15);
        let v = FlatModelField::nahm_singular().values(&p(1.0, 0.0, 0.0, 1.0));
        let h = 0.5f64.sqrt();
        assert!((v.phi[0].coeffs[0] - h).abs() < 1e-15);
        assert!((v.phi[1].coeffs[1] - h).abs() < 1e-15);
        assert!((v.phi[2].coeffs[2] - 1.5).abs() < 1e-15);
        assert!((v.a[1].coeffs[2] + 0.5).abs() < 1e-15);
        assert!(v.a[0].is_zero());
    }

    #[test]
    fn models_solve_both_equations() {
        for q in sample_points(7, 1000, 0.0) {
            assert!(kw_residual_flat_scaled(&FlatModelField::nahm_pole(), &q) < 1e-12);
        }
        for q in sample_points(8, 1000, 0.1) {
            assert!(kw_residual_flat_scaled(&FlatModelField::nahm_singular(), &q) < 1e-10, "{q:?}");
        }
        assert_eq!(kw_residual_flat(&FlatModelField::zero(), &p(1.0, 2.0, 3.0, 0.4)), 0.0);
    }

    #[test]
    fn mirrored_singular_form_is_not_a_solution() {
        let f = FlatModelField::nahm_singular_mirrored();
        let v = f.values(&p(0.0, 1.0, 0.0, 1.0));
        let h = 0.5f64.sqrt();
        assert!((v.phi[0].coeffs[1] + h).abs() < 1e-15);
        assert!((v.a[0].coeffs[2] + 0.5).abs() < 1e-15);
        assert!(kw_residual_flat_scaled(&f, &p(0.4, 0.9, 0.0, 0.7)) > 1e-2);
    }

    fn perturbed() -> FlatModelField {
        FlatModelField::nahm_pole().plus("perturbed", |x| {
            let z = Dual4::cst(0.0);
            let mut phi = [[z; 3]; 3];
            phi[0][0] = x[3];
            FlatCoefficients { a: [[z; 3]; 3], phi }
        })
    }

    #[test]
    fn perturbed_residual_matches_finite_differences() {
        let f = perturbed();
        let q = p(0.3, -0.4, 1.1, 0.8);
        let h = 1e-5;
        let shifted = |nu: usize, d: f64| {
            let mut x = [q.x1, q.x2, q.x3, q.y];
            x[nu] += d;
            f.values(&p(x[0], x[1], x[2], x[3]))
        };
        let build = |pick: &dyn Fn(&FlatValues) -> [Su2Element; 3]| -> Spread {
            let here = pick(&f.values(&q));
            let val = std::array::from_fn(|mu| if mu < 3 { here[mu].clone() } else { Su2Element::zero() });
            let der = std::array::from_fn(|nu| {
                let (up, dn) = (pick(&shifted(nu, h)), pick(&shifted(nu, -h)));
                std::array::from_fn(|mu| {
                    if mu < 3 {
                        (0.5 / h) * (up[mu].clone() - dn[mu].clone())
                    } else {
                        Su2Element::zero()
                    }
                })
            });
            Spread { val, der }
        };
        let a = build(&|v| v.a.clone());
        let phi = build(&|v| v.phi.clone());
        let (fd1, fd2, _) = residual_from(&a, &phi);
        let (e1, e2, _) = flat_residual_parts(&f, &q);
        assert!((e1 - fd1).abs() < 1e-6, "{e1} vs {fd1}");
        assert!((e2 - fd2).abs() < 1e-6);
        assert!(e1 > 0.1);
    }

    #[test]
    fn models_are_dilation_invariant() {
        let q = p(0.6, -0.2, 0.3, 0.9);
        for model in [FlatModelField::nahm_pole(), FlatModelField::nahm_singular()] {
            for s in [0.1, 0.5, 3.0] {
                let a = model.values(&q);
                let b = scale_pullback(&model, s).unwrap().values(&q);
                for k in 0..3 {
                    assert!((a.phi[k].clone() - b.phi[k].clone()).coord_sq().sqrt() < 1e-14);
                    assert!((a.a[k].clone() - b.a[k].clone()).coord_sq().sqrt() < 1e-14);
                }
            }
        }
        assert!(scale_pullback(&FlatModelField::nahm_pole(), 0.0).is_err());
    }

    #[test]
    fn residual_homogeneity() {
        let f = perturbed();
        let q = p(0.2, 0.7, -0.5, 0.6);
        for s in [0.5, 2.0] {
            let lhs = kw_residual_flat(&scale_pullback(&f, s).unwrap(), &q);
            let rhs = s * s * kw_residual_flat(&f, &q.scaled(s));
            assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
        }
    }

    #[test]
    fn residual_rotation_invariance() {
        let rot = AdRotation::new(&Su2Element::new(0.3, 1.0, -0.4), 1.3).unwrap();
        let f = perturbed();
        for q in sample_points(3, 20, 0.1) {
            assert!((kw_residual_flat(&f, &q) - kw_residual_flat(&f.rotated(&rot), &q)).abs() < 1e-11);
            assert!(kw_residual_flat_scaled(&FlatModelField::nahm_singular().rotated(&rot), &q) < 1e-10);
        }
    }

    #[test]
    fn he_profile_scaling_rate() {
        let r = he_scaling_slope(1.0, &[1e-1, 1e-2, 1e-3]);
        assert!((r.slope - 2.0).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn csv_roundtrip() {
        let pts = read_points_csv("x1,x2,x3,y\n0,0,0,1\n1, 2, 3, 0.5\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        let rows = residual_rows(&FlatModelField::nahm_pole(), &pts);
        let mut buf = Vec::new();
        write_residuals_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,x3,y,res_eq1,res_eq2\n"));
        assert!(read_points_csv("x1,x2,x3,y\n0,0,0,0\n".as_bytes()).is_err());
    }
}
