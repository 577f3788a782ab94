//! y-dependent coefficient profiles for left-invariant fields.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{KwError, Result};
use crate::invariant::forms::InvariantOneForm;
use crate::scalar::{Jet2, Real};
use crate::spline::{CubicSpline, SplineAxis};
use crate::su2::{AdRotation, Su2Element};

/// Value, first and second y-derivative.
pub type Jet<T> = [T; 3];

pub trait ScalarProfile: Send + Sync {
    fn jet(&self, y: f64) -> Jet2;

    fn value(&self, y: f64) -> f64 {
        self.jet(y).v
    }
}

pub trait FormProfile: Send + Sync {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm>;

    fn value(&self, y: f64) -> InvariantOneForm {
        let [v, _, _] = self.jet(y);
        v
    }
}

pub trait AlgebraProfile: Send + Sync {
    fn jet(&self, y: f64) -> Jet<Su2Element>;
}

/// Any closure `Jet2 -> Jet2` is a scalar profile.
pub struct FnProfile<F>(pub F);

impl<F: Fn(Jet2) -> Jet2 + Send + Sync> ScalarProfile for FnProfile<F> {
    fn jet(&self, y: f64) -> Jet2 {
        (self.0)(Jet2::var(y))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarProfile for Constant {
    fn jet(&self, _y: f64) -> Jet2 {
        Jet2::cst(self.0)
    }
}

/// `e^{2y}` and `e^{4y} + 4e^{2y} + 1`.
fn he_parts<R: Real>(y: R) -> (R, R) {
    let u = y.scale(2.0).exp();
    let d = u * u + u.scale(4.0) + R::cst(1.0);
    (u, d)
}

/// Connection coefficient of the decaying model solution.
pub fn he_a<R: Real>(y: R) -> R {
    let (u, d) = he_parts(y);
    u.scale(6.0) / d
}

/// `a − 1`, free of cancellation near `y = 0`.
pub fn he_a_minus_one<R: Real>(y: R) -> R {
    let (_, d) = he_parts(y);
    let m = y.scale(2.0).exp_m1();
    -(m * m) / d
}

/// Higgs coefficient, shared by both model solutions.
pub fn he_b<R: Real>(y: R) -> R {
    let (u, d) = he_parts(y);
    u.scale(6.0) * (u + R::cst(1.0)) / (d * y.scale(2.0).exp_m1())
}

/// Connection coefficient of the alternate solution, `2 − a`.
pub fn he_alt_a<R: Real>(y: R) -> R {
    let (u, d) = he_parts(y);
    (u * u + u + R::cst(1.0)).scale(2.0) / d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeProfile {
    A,
    AlternateA,
    B,
}

impl ScalarProfile for HeProfile {
    fn jet(&self, y: f64) -> Jet2 {
        let y = Jet2::var(y);
        match self {
            HeProfile::A => he_a(y),
            HeProfile::AlternateA => he_alt_a(y),
            HeProfile::B => he_b(y),
        }
    }
}

/// `s(y)·ω`.
pub struct OmegaMultiple(pub Arc<dyn ScalarProfile>);

impl FormProfile for OmegaMultiple {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm> {
        let j = self.0.jet(y);
        let w = InvariantOneForm::omega();
        [w.scale(&j.v), w.scale(&j.d1), w.scale(&j.d2)]
    }
}

/// `s(y)·m` for a fixed direction `m`.
pub struct DirectionProfile {
    pub scalar: Arc<dyn ScalarProfile>,
    pub direction: InvariantOneForm,
}

impl FormProfile for DirectionProfile {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm> {
        let j = self.scalar.jet(y);
        [
            self.direction.scale(&j.v),
            self.direction.scale(&j.d1),
            self.direction.scale(&j.d2),
        ]
    }
}

pub struct SumProfile(pub Vec<Arc<dyn FormProfile>>);

impl FormProfile for SumProfile {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm> {
        let mut acc = [InvariantOneForm::zero(), InvariantOneForm::zero(), InvariantOneForm::zero()];
        for p in &self.0 {
            let j = p.jet(y);
            for k in 0..3 {
                acc[k] = &acc[k] + &j[k];
            }
        }
        acc
    }
}

pub struct ZeroForm;

impl FormProfile for ZeroForm {
    fn jet(&self, _y: f64) -> Jet<InvariantOneForm> {
        [InvariantOneForm::zero(), InvariantOneForm::zero(), InvariantOneForm::zero()]
    }
}

/// `s(y)·u` for a fixed Lie-algebra element.
pub struct AlgebraDirection {
    pub scalar: Arc<dyn ScalarProfile>,
    pub direction: Su2Element,
}

impl AlgebraProfile for AlgebraDirection {
    fn jet(&self, y: f64) -> Jet<Su2Element> {
        let j = self.scalar.jet(y);
        [j.v * self.direction.clone(), j.d1 * self.direction.clone(), j.d2 * self.direction.clone()]
    }
}

pub struct ZeroAlgebra;

impl AlgebraProfile for ZeroAlgebra {
    fn jet(&self, _y: f64) -> Jet<Su2Element> {
        [Su2Element::zero(), Su2Element::zero(), Su2Element::zero()]
    }
}

fn rotate_form(r: &AdRotation, u: &InvariantOneForm) -> InvariantOneForm {
    u.map_columns(|col| r.apply(col))
}

/// A profile conjugated by a constant adjoint rotation.
pub struct RotatedForm {
    pub rotation: AdRotation,
    pub inner: Arc<dyn FormProfile>,
}

impl FormProfile for RotatedForm {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm> {
        self.inner.jet(y).map(|u| rotate_form(&self.rotation, &u))
    }
}

pub struct RotatedAlgebra {
    pub rotation: AdRotation,
    pub inner: Arc<dyn AlgebraProfile>,
}

impl AlgebraProfile for RotatedAlgebra {
    fn jet(&self, y: f64) -> Jet<Su2Element> {
        self.inner.jet(y).map(|u| self.rotation.apply(&u))
    }
}

/// Left-invariant configuration in the gauge `A_y = 0`.
#[derive(Clone)]
pub struct InvariantField {
    pub a: Arc<dyn FormProfile>,
    pub phi: Arc<dyn FormProfile>,
    pub phi_y: Arc<dyn AlgebraProfile>,
}

impl InvariantField {
    pub fn new(a: Arc<dyn FormProfile>, phi: Arc<dyn FormProfile>, phi_y: Arc<dyn AlgebraProfile>) -> Self {
        Self { a, phi, phi_y }
    }

    /// `A = a(y)ω`, `φ = b(y)ω`, `φ_y = 0`.
    pub fn scalar(a: Arc<dyn ScalarProfile>, b: Arc<dyn ScalarProfile>) -> Self {
        Self {
            a: Arc::new(OmegaMultiple(a)),
            phi: Arc::new(OmegaMultiple(b)),
            phi_y: Arc::new(ZeroAlgebra),
        }
    }

    pub fn he() -> Self {
        Self::scalar(Arc::new(HeProfile::A), Arc::new(HeProfile::B))
    }

    pub fn he_alternate() -> Self {
        Self::scalar(Arc::new(HeProfile::AlternateA), Arc::new(HeProfile::B))
    }

    pub fn zero() -> Self {
        Self {
            a: Arc::new(ZeroForm),
            phi: Arc::new(ZeroForm),
            phi_y: Arc::new(ZeroAlgebra),
        }
    }

    pub fn rotated(&self, rotation: AdRotation) -> Self {
        Self {
            a: Arc::new(RotatedForm {
                rotation: rotation.clone(),
                inner: self.a.clone(),
            }),
            phi: Arc::new(RotatedForm {
                rotation: rotation.clone(),
                inner: self.phi.clone(),
            }),
            phi_y: Arc::new(RotatedAlgebra {
                rotation,
                inner: self.phi_y.clone(),
            }),
        }
    }
}

/// A profile sampled on a grid and accessed through not-a-knot splines.
pub struct GridFormProfile {
    splines: Vec<CubicSpline>,
}

impl GridFormProfile {
    pub fn new(ys: &[f64], samples: &[InvariantOneForm], axis: SplineAxis) -> Result<Self> {
        if ys.len() != samples.len() {
            return Err(KwError::ProfileData("grid/sample length mismatch".into()));
        }
        let mut splines = Vec::with_capacity(9);
        for i in 0..3 {
            for a in 0..3 {
                let col: Vec<f64> = samples.iter().map(|s| s.c[i][a]).collect();
                splines.push(CubicSpline::not_a_knot(ys, &col, axis)?);
            }
        }
        Ok(Self { splines })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.splines[0].domain()
    }
}

impl FormProfile for GridFormProfile {
    fn jet(&self, y: f64) -> Jet<InvariantOneForm> {
        let mut out = [InvariantOneForm::zero(), InvariantOneForm::zero(), InvariantOneForm::zero()];
        for (k, s) in self.splines.iter().enumerate() {
            let (v, d1, d2) = s.eval(y);
            let (i, a) = (k / 3, k % 3);
            out[0].c[i][a] = v;
            out[1].c[i][a] = d1;
            out[2].c[i][a] = d2;
        }
        out
    }
}

pub const PROFILE_HEADER: [&str; 10] = ["y", "c11", "c12", "c13", "c21", "c22", "c23", "c31", "c32", "c33"];

/// Reads a `y,c11,...,c33` block (row-major coefficient matrix per row).
pub fn read_profile_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<InvariantOneForm>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(PROFILE_HEADER.iter().copied()) {
        return Err(KwError::ProfileData(format!("expected header {}", PROFILE_HEADER.join(","))));
    }
    let mut ys = Vec::new();
    let mut forms = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| KwError::ProfileData(e.to_string()))?;
        ys.push(vals[0]);
        forms.push(InvariantOneForm::from_fn(|i, a| vals[1 + 3 * i + a]));
    }
    Ok((ys, forms))
}

pub fn write_profile_csv<W: Write>(writer: W, ys: &[f64], forms: &[InvariantOneForm]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PROFILE_HEADER)?;
    for (y, f) in ys.iter().zip(forms) {
        let mut row = vec![format!("{y:e}")];
        row.extend(f.c.iter().flatten().map(|v| format!("{v:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
