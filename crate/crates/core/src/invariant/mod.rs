//! Exterior calculus for left-invariant su(2)-valued forms on S³ × ℝ⁺.
//!
//! The coframe obeys `deₐ = −c εₐᵦ꜀ eᵦ∧e꜀`, i.e. `deₐ = −2c ⋆eₐ`. The 4D Hodge
//! star is parametrized by two signs:
//! `*(dy∧eₐ) = s₁ ⋆eₐ`, `*(⋆eₐ) = s₂ dy∧eₐ`, `*eₐ = −s₁ dy∧⋆eₐ`, `*dy = s₁ vol₃`.
//! [`calibrate`] picks the unique `(c, s₁, s₂)` for which the Ricci tensor is
//! `2g` and the closed-form decaying solution has vanishing residual.

pub mod forms;
pub mod profile;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{KwError, Result};
use crate::fault;
use crate::report::{CheckReport, Provenance};
use crate::scalar::Scalar;
use crate::su2::{bracket, Su2Element};

pub use forms::{
    bracket_dual, trace_cube, trace_pairing, trace_square, wedge_bracket, wedge_square, InvariantOneForm,
    InvariantTwoForm,
};
pub use profile::InvariantField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeometryConventions {
    pub c: i32,
    pub s1: i32,
    pub s2: i32,
}

impl GeometryConventions {
    pub const GOLDEN: GeometryConventions = GeometryConventions { c: 1, s1: 1, s2: 1 };

    pub fn candidates() -> Vec<GeometryConventions> {
        let mut out = Vec::with_capacity(16);
        for c in [-2, -1, 1, 2] {
            for s1 in [-1, 1] {
                for s2 in [-1, 1] {
                    out.push(GeometryConventions { c, s1, s2 });
                }
            }
        }
        out
    }

    fn sign<T: Scalar>(s: i32) -> T {
        T::int(i64::from(s * fault::hodge_sign()))
    }

    /// Sign of `*dy = σ vol₃`.
    pub fn sigma<T: Scalar>(&self) -> T {
        Self::sign(self.s1)
    }
}

/// `d` of a constant-coefficient invariant 1-form.
pub fn coframe_d<T: Scalar>(conv: &GeometryConventions, u: &InvariantOneForm<T>) -> InvariantTwoForm<T> {
    InvariantTwoForm::tangential(u.scale(&T::int(-2 * i64::from(conv.c))))
}

/// 4D Hodge star on invariant 2-forms.
pub fn star4<T: Scalar>(conv: &GeometryConventions, w: &InvariantTwoForm<T>) -> InvariantTwoForm<T> {
    InvariantTwoForm {
        tangential: w.normal.scale(&GeometryConventions::sign::<T>(conv.s1)),
        normal: w.tangential.scale(&GeometryConventions::sign::<T>(conv.s2)),
    }
}

/// `F_A` for `A = A(y)` with `A_y = 0`, given `A` and `∂_y A`.
pub fn curvature_at<T: Scalar>(
    conv: &GeometryConventions,
    a: &InvariantOneForm<T>,
    a_prime: &InvariantOneForm<T>,
) -> InvariantTwoForm<T> {
    let mut f = coframe_d(conv, a) + wedge_square(a);
    f.normal = a_prime.clone();
    f
}

/// `φ∧φ` for `φ = P + ψ dy`.
pub fn phi_wedge_phi<T: Scalar>(p: &InvariantOneForm<T>, psi: &Su2Element<T>) -> InvariantTwoForm<T> {
    let mut w = wedge_square(p);
    w.normal = p.map_columns(|col| bracket(psi, col));
    w
}

/// `d_A φ` for `φ = P + ψ dy`.
pub fn covariant_d<T: Scalar>(
    conv: &GeometryConventions,
    a: &InvariantOneForm<T>,
    p: &InvariantOneForm<T>,
    p_prime: &InvariantOneForm<T>,
    psi: &Su2Element<T>,
) -> InvariantTwoForm<T> {
    let tangential = coframe_d(conv, p).tangential + bracket_dual(a, p);
    let normal = InvariantOneForm::from_columns(&std::array::from_fn(|k| {
        p_prime.column(k) + bracket(psi, &a.column(k))
    }));
    InvariantTwoForm { tangential, normal }
}

/// `d_A *φ` as a multiple of `dy ∧ vol₃`.
pub fn covariant_codifferential<T: Scalar>(
    conv: &GeometryConventions,
    a: &InvariantOneForm<T>,
    p: &InvariantOneForm<T>,
    psi_prime: &Su2Element<T>,
) -> Su2Element<T> {
    let mut s = psi_prime.clone();
    for k in 0..3 {
        s = s + bracket(&a.column(k), &p.column(k));
    }
    s.scale(&conv.sigma::<T>())
}

/// First equation `F_A − φ∧φ − *d_Aφ` at a single point of the profile.
pub fn first_equation<T: Scalar>(
    conv: &GeometryConventions,
    a: &InvariantOneForm<T>,
    a_prime: &InvariantOneForm<T>,
    p: &InvariantOneForm<T>,
    p_prime: &InvariantOneForm<T>,
    psi: &Su2Element<T>,
) -> InvariantTwoForm<T> {
    curvature_at(conv, a, a_prime)
        - phi_wedge_phi(p, psi)
        - star4(conv, &covariant_d(conv, a, p, p_prime, psi))
}

pub fn curvature(conv: &GeometryConventions, a: &dyn profile::FormProfile, y: f64) -> InvariantTwoForm {
    let [v, d1, _] = a.jet(y);
    curvature_at(conv, &v, &d1)
}

/// Residual of both equations at `y`: the 2-form `F − φ∧φ − *d_Aφ` and `|d_A*φ|`.
pub fn kw_residual(conv: &GeometryConventions, field: &InvariantField, y: f64) -> Result<(InvariantTwoForm, f64)> {
    if !(y > 0.0) {
        return Err(KwError::BoundaryEvaluation { y });
    }
    let [a, a1, _] = field.a.jet(y);
    let [p, p1, _] = field.phi.jet(y);
    let [psi, psi1, _] = field.phi_y.jet(y);
    let eq1 = first_equation(conv, &a, &a1, &p, &p1, &psi);
    let eq2 = covariant_codifferential(conv, &a, &p, &psi1);
    Ok((eq1, crate::su2::norm(&eq2)))
}

/// Residual norm divided by the size of the largest term entering it, so that
/// cancellation between `O(y⁻²)` terms near the pole is measured relative to
/// their magnitude once that magnitude exceeds one.
pub fn kw_residual_scaled(conv: &GeometryConventions, field: &InvariantField, y: f64) -> Result<f64> {
    let (eq1, eq2) = kw_residual(conv, field, y)?;
    let [a, a1, _] = field.a.jet(y);
    let [p, p1, _] = field.phi.jet(y);
    let [psi, psi1, _] = field.phi_y.jet(y);
    let scale = [
        curvature_at(conv, &a, &a1).norm(),
        phi_wedge_phi(&p, &psi).norm(),
        covariant_d(conv, &a, &p, &p1, &psi).norm(),
        crate::su2::norm(&psi1),
    ]
    .into_iter()
    .fold(1.0f64, f64::max);
    Ok(eq1.norm().max(eq2) / scale)
}

/// Left side of the pointwise identity for `|φ_y|²`:
/// `−½∂²|φ_y|² + |∂φ_y|² + Σₐ|[Aₐ,φ_y]|² + 2Σₐ|[φ_y,φₐ]|²`.
pub fn taubes_lhs(field: &InvariantField, y: f64) -> f64 {
    use crate::su2::inner;
    let [a, _, _] = field.a.jet(y);
    let [p, _, _] = field.phi.jet(y);
    let [s, s1, s2] = field.phi_y.jet(y);
    let second = 2.0 * (inner(&s1, &s1) + inner(&s, &s2));
    let mut lhs = -0.5 * second + inner(&s1, &s1);
    for k in 0..3 {
        let ca = bracket(&a.column(k), &s);
        let cp = bracket(&s, &p.column(k));
        lhs += inner(&ca, &ca) + 2.0 * inner(&cp, &cp);
    }
    lhs
}

/// Ricci tensor of the left-invariant metric whose orthonormal frame satisfies
/// `[Eᵦ, E꜀] = 2c εₐᵦ꜀ Eₐ`, by the Koszul formula.
pub fn ricci_tensor<T: Scalar>(c: i32) -> [[T; 3]; 3] {
    let eps = |a: usize, b: usize, d: usize| -> i64 {
        match (a, b, d) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
            _ => 0,
        }
    };
    // structure[a][b][d] = ⟨[E_a, E_b], E_d⟩
    let structure: Vec<Vec<Vec<T>>> = (0..3)
        .map(|a| {
            (0..3)
                .map(|b| (0..3).map(|d| T::int(2 * i64::from(c) * eps(a, b, d))).collect())
                .collect()
        })
        .collect();
    // gamma[a][b][d] = ⟨∇_{E_a} E_b, E_d⟩
    let gamma: Vec<Vec<Vec<T>>> = (0..3)
        .map(|a| {
            (0..3)
                .map(|b| {
                    (0..3)
                        .map(|d| {
                            (structure[a][b][d].clone() - structure[b][d][a].clone() + structure[d][a][b].clone())
                                * T::half()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    std::array::from_fn(|b| {
        std::array::from_fn(|d| {
            let mut acc = T::zero();
            for a in 0..3 {
                // ⟨R(E_a, E_b) E_d, E_a⟩
                for e in 0..3 {
                    acc = acc + gamma[b][d][e].clone() * gamma[a][e][a].clone()
                        - gamma[a][d][e].clone() * gamma[b][e][a].clone()
                        - structure[a][b][e].clone() * gamma[e][d][a].clone();
                }
            }
            acc
        })
    })
}

/// `Ric(φ, φ)` with the su(2) inner product, so that `Ric = 2g` gives `2|φ|²`.
pub fn ricci_form<T: Scalar>(c: i32, phi: &InvariantOneForm<T>) -> T {
    let ric = ricci_tensor::<T>(c);
    let mut acc = T::zero();
    for i in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                acc = acc + ric[a][b].clone() * phi.c[i][a].clone() * phi.c[i][b].clone();
            }
        }
    }
    acc * T::half()
}

fn ricci_is_twice_metric(c: i32) -> bool {
    let ric = ricci_tensor::<BigRational>(c);
    (0..3).all(|a| (0..3).all(|b| ric[a][b] == BigRational::int(if a == b { 2 } else { 0 })))
}

pub fn ricci_check(conv: &GeometryConventions) -> CheckReport {
    let w = InvariantOneForm::<BigRational>::omega();
    let ratio = ricci_form(conv.c, &w) / w.norm_sq();
    let exact = ricci_is_twice_metric(conv.c);
    let r = CheckReport::approx(
        "ricci",
        "Ricci term of the Weitzenboeck formula, Ric(phi,phi) = 2|phi|^2",
        ratio.to_f64_lossy(),
        2.0,
        0.0,
        Provenance::Paper,
    );
    if exact {
        r
    } else {
        let mut r = r;
        r.status = crate::report::Status::Fail;
        r.with_note("Ricci tensor differs from 2g")
    }
}

/// Log-spaced sample points `n` values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Largest scaled residual of a field over a grid.
pub fn max_residual(conv: &GeometryConventions, field: &InvariantField, ys: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &y in ys {
        let r = kw_residual_scaled(conv, field, y)?;
        if !r.is_finite() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

pub const RESIDUAL_GRID: (f64, f64, usize) = (1e-3, 30.0, 300);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationCandidate {
    pub conventions: GeometryConventions,
    pub ricci_ok: bool,
    pub he_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub candidates: Vec<CalibrationCandidate>,
    pub accepted: Vec<GeometryConventions>,
}

impl Calibration {
    pub fn unique(&self) -> Result<GeometryConventions> {
        match self.accepted.as_slice() {
            [one] => Ok(*one),
            [] => Err(KwError::Calibration("no convention satisfies both requirements".into())),
            many => Err(KwError::Calibration(format!("{} conventions satisfy both requirements", many.len()))),
        }
    }
}

/// Searches the finite convention set for `Ric = 2g` (exact) and a vanishing
/// residual of the decaying model solution.
pub fn calibrate_all(tolerance: f64) -> Calibration {
    let field = InvariantField::he();
    let (lo, hi, n) = RESIDUAL_GRID;
    let ys = log_grid(lo, hi, n);
    let candidates: Vec<CalibrationCandidate> = GeometryConventions::candidates()
        .into_iter()
        .map(|conv| CalibrationCandidate {
            conventions: conv,
            ricci_ok: ricci_is_twice_metric(conv.c),
            he_residual: max_residual(&conv, &field, &ys).unwrap_or(f64::INFINITY),
        })
        .collect();
    let accepted = candidates
        .iter()
        .filter(|c| c.ricci_ok && c.he_residual < tolerance)
        .map(|c| c.conventions)
        .collect();
    Calibration { candidates, accepted }
}

pub fn calibrate() -> Result<GeometryConventions> {
    calibrate_all(1e-10).unique()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::profile::{AlgebraDirection, FnProfile, HeProfile, ScalarProfile, ZeroForm};
    use crate::scalar::{Jet2, Real};
    use std::sync::Arc;

    const CONV: GeometryConventions = GeometryConventions::GOLDEN;

    #[test]
    fn calibration_is_unique_and_golden() {
        let cal = calibrate_all(1e-10);
        assert_eq!(cal.accepted, vec![GeometryConventions::GOLDEN]);
        let ricci_only: Vec<_> = cal.candidates.iter().filter(|c| c.ricci_ok).collect();
        assert_eq!(ricci_only.len(), 8);
    }

    #[test]
    fn d_omega_is_minus_two_omega_squared() {
        let w = InvariantOneForm::<BigRational>::omega();
        let lhs = coframe_d(&CONV, &w);
        let rhs = wedge_square(&w).scale(&BigRational::int(-2));
        assert_eq!(lhs, rhs);
        assert!(coframe_d(&CONV, &InvariantOneForm::<BigRational>::zero()).tangential.is_zero());
    }

    #[test]
    fn star4_squares_to_identity() {
        let w = InvariantTwoForm {
            tangential: InvariantOneForm::from_fn(|i, a| (i * 3 + a) as f64),
            normal: InvariantOneForm::from_fn(|i, a| (i as f64) - (a as f64) * 0.5),
        };
        assert_eq!(star4(&CONV, &star4(&CONV, &w)), w);
        assert!((star4(&CONV, &w).norm() - w.norm()).abs() < 1e-14);
    }

    #[test]
    fn ricci_values() {
        let r = ricci_check(&CONV);
        assert!(r.passed());
        assert_eq!(r.computed, 2.0);
        let mu1 = InvariantOneForm::<BigRational>::unit(1, 2) - InvariantOneForm::unit(2, 1);
        assert_eq!(ricci_form(1, &mu1) / mu1.norm_sq(), BigRational::int(2));
        let flat = ricci_check(&GeometryConventions { c: 0, s1: 1, s2: 1 });
        assert!(!flat.passed());
        assert_eq!(flat.computed, 0.0);
        assert!(!ricci_check(&GeometryConventions { c: 2, s1: 1, s2: 1 }).passed());
    }

    #[test]
    fn curvature_he_normal_coefficient() {
        for &y in &[0.01, 0.5, 2.0, 6.0] {
            let f = curvature(&CONV, &profile::OmegaMultiple(Arc::new(HeProfile::A)), y);
            let (u, d) = ((2.0 * y).exp(), (4.0 * y).exp() + 4.0 * (2.0 * y).exp() + 1.0);
            let closed = 12.0 * (u - (6.0 * y).exp()) / (d * d);
            assert!((f.normal.c[1][1] - closed).abs() < 1e-12 * (1.0 + closed.abs()));
            let a = HeProfile::A.value(y);
            assert!((f.tangential.c[0][0] - (a * a - 2.0 * a)).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_limit_connection() {
        let f = curvature(&CONV, &profile::OmegaMultiple(Arc::new(profile::Constant(2.0))), 1.0);
        assert_eq!(f.norm(), 0.0);
        let f = curvature(&CONV, &ZeroForm, 1.0);
        assert_eq!(f.norm(), 0.0);
    }

    #[test]
    fn he_residuals_vanish() {
        let (lo, hi, n) = RESIDUAL_GRID;
        let ys = log_grid(lo, hi, n);
        assert!(max_residual(&CONV, &InvariantField::he(), &ys).unwrap() < 1e-10);
        assert!(max_residual(&CONV, &InvariantField::he_alternate(), &ys).unwrap() < 1e-10);
        assert_eq!(kw_residual(&CONV, &InvariantField::zero(), 1.0).unwrap().0.norm(), 0.0);
    }

    #[test]
    fn boundary_is_rejected() {
        assert!(matches!(
            kw_residual(&CONV, &InvariantField::he(), 0.0),
            Err(KwError::BoundaryEvaluation { .. })
        ));
    }

    #[test]
    fn residual_matches_finite_differences() {
        // A smooth non-solution; replace every exact derivative by a central difference.
        let a = Arc::new(profile::DirectionProfile {
            scalar: Arc::new(FnProfile(|y: Jet2| (y.scale(-0.7)).exp() * (y + Jet2::cst(0.3)))),
            direction: InvariantOneForm::from_fn(|i, a| 0.2 + (i as f64) * 0.3 - (a as f64) * 0.1),
        });
        let p = Arc::new(profile::DirectionProfile {
            scalar: Arc::new(FnProfile(|y: Jet2| y.sqrt() + Jet2::cst(1.0))),
            direction: InvariantOneForm::from_fn(|i, a| if i == a { 1.0 } else { 0.1 * (i + 2 * a) as f64 }),
        });
        let s = Arc::new(AlgebraDirection {
            scalar: Arc::new(FnProfile(|y: Jet2| y * y)),
            direction: Su2Element::new(0.3, -0.2, 0.5),
        });
        let field = InvariantField::new(a.clone(), p.clone(), s.clone());
        let y = 0.8;
        let h = 1e-5;
        use profile::{AlgebraProfile, FormProfile};
        let fd = |f: &dyn Fn(f64) -> InvariantOneForm| (f(y + h) - f(y - h)).scale(&(0.5 / h));
        let a1 = fd(&|t| a.value(t));
        let p1 = fd(&|t| p.value(t));
        let [sv, _, _] = s.jet(y);
        let s1 = (1.0 / (2.0 * h)) * (s.jet(y + h)[0].clone() - s.jet(y - h)[0].clone());
        let eq1_fd = first_equation(&CONV, &a.value(y), &a1, &p.value(y), &p1, &sv);
        let eq2_fd = crate::su2::norm(&covariant_codifferential(&CONV, &a.value(y), &p.value(y), &s1));
        let (eq1, eq2) = kw_residual(&CONV, &field, y).unwrap();
        assert!((eq1.clone() - eq1_fd).norm() < 1e-6);
        assert!((eq2 - eq2_fd).abs() < 1e-6);
        assert!(eq1.norm() > 1e-2);
    }

    #[test]
    fn taubes_examples() {
        let t3 = Su2Element::basis(2);
        let lin = InvariantField::new(
            Arc::new(ZeroForm),
            Arc::new(ZeroForm),
            Arc::new(AlgebraDirection {
                scalar: Arc::new(FnProfile(|y: Jet2| y)),
                direction: t3.clone(),
            }),
        );
        let quad = InvariantField::new(
            Arc::new(ZeroForm),
            Arc::new(ZeroForm),
            Arc::new(AlgebraDirection {
                scalar: Arc::new(FnProfile(|y: Jet2| y * y)),
                direction: t3,
            }),
        );
        for &y in &[0.2, 1.0, 3.5] {
            assert!(taubes_lhs(&lin, y).abs() < 1e-14);
            assert!((taubes_lhs(&quad, y) + y * y).abs() < 1e-12);
            assert!(taubes_lhs(&InvariantField::he(), y).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_is_rotation_invariant() {
        let rot = crate::su2::AdRotation::new(&Su2Element::new(1.0, -2.0, 0.5), 0.9).unwrap();
        let field = InvariantField::scalar(
            Arc::new(FnProfile(|y: Jet2| (-y).exp())),
            Arc::new(FnProfile(|y: Jet2| y.recip() + y)),
        );
        let mixed = InvariantField::new(
            field.a.clone(),
            Arc::new(profile::SumProfile(vec![
                field.phi.clone(),
                Arc::new(profile::DirectionProfile {
                    scalar: Arc::new(FnProfile(|y: Jet2| y)),
                    direction: InvariantOneForm::unit(0, 2),
                }),
            ])),
            Arc::new(AlgebraDirection {
                scalar: Arc::new(FnProfile(|y: Jet2| y.sqrt())),
                direction: Su2Element::new(0.0, 1.0, 1.0),
            }),
        );
        let rotated = mixed.rotated(rot);
        for &y in &[0.3, 1.0, 2.5] {
            let (a1, a2) = kw_residual(&CONV, &mixed, y).unwrap();
            let (b1, b2) = kw_residual(&CONV, &rotated, y).unwrap();
            assert!((a1.norm() - b1.norm()).abs() < 1e-12);
            assert!((a2 - b2).abs() < 1e-12);
        }
    }
}
