//! The integrating factor `f` and the inequality chain bounding
//! `∫|2tr(φ^H∧*ρ)|` for perturbations `φ = φ^H + ρ` of the model solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{project, Component};
use crate::error::{KwError, Result};
use crate::invariant::profile::{he_b, ScalarProfile};
use crate::invariant::{bracket_dual, log_grid, wedge_square, InvariantOneForm};
use crate::quadrature::{integrate_interval, QuadratureSpec, VOL_S3};
use crate::report::{CheckReport, Provenance};
use crate::scalar::{Jet2, Real};

use super::{BoundConstants, FULL_LINE_EPS};

/// Successive differences decide convergence: a convergent tail shrinks by
/// more than this factor from one window to the next.
const CONVERGENCE_RATIO: f64 = 0.75;

fn divergent(d_outer: f64, d_inner: f64, scale: f64) -> bool {
    d_inner.abs() > 1e-13 * scale.max(1.0) && d_inner.abs() > CONVERGENCE_RATIO * d_outer.abs()
}

/// `∫_y^∞ h`.
fn upper_integral(h: &dyn ScalarProfile, y: f64, quad: &QuadratureSpec) -> Result<f64> {
    let n = quad.panels;
    let m = quad.nodes_per_panel;
    let head = integrate_interval(|s| h.value(s), y, y + 1.0, n, m, true)?.value;
    let body = |len: f64| integrate_interval(|s| h.value(s), y + 1.0, y + 1.0 + len, n, m, false).map(|r| r.value);
    let l = quad.y_max;
    let (i1, i2, i3) = (body(l)?, body(2.0 * l)?, body(4.0 * l)?);
    if divergent(i2 - i1, i3 - i2, i3) {
        return Err(KwError::DivergentExponent { which: "h" });
    }
    Ok(head + i3)
}

/// `∫_0^y α`.
fn lower_integral(alpha: &dyn ScalarProfile, y: f64, quad: &QuadratureSpec) -> Result<f64> {
    let i = |k: i32| {
        integrate_interval(|s| alpha.value(s), y * 10f64.powi(-k), y, quad.panels, quad.nodes_per_panel, true)
            .map(|r| r.value)
    };
    let (i1, i2, i3) = (i(4)?, i(6)?, i(8)?);
    if divergent(i2 - i1, i3 - i2, i3) {
        return Err(KwError::DivergentExponent { which: "alpha" });
    }
    Ok(i3)
}

/// `f(y) = exp(−2∫_y^∞ h + ∫_0^y α)`.
pub fn integrating_factor(h: &dyn ScalarProfile, alpha: &dyn ScalarProfile, y: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(y > 0.0) {
        return Err(KwError::BoundaryEvaluation { y });
    }
    Ok((-2.0 * upper_integral(h, y, quad)? + lower_integral(alpha, y, quad)?).exp())
}

/// Both sides of `∂_yr + 2hr + αr = f⁻¹∂_y(fr)` at `y`, the right side by
/// central differences of the quadrature-computed `f`.
pub fn integrating_factor_identity(
    h: &dyn ScalarProfile,
    alpha: &dyn ScalarProfile,
    r: &dyn ScalarProfile,
    y: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let j = r.jet(y);
    let lhs = j.d1 + (2.0 * h.value(y) + alpha.value(y)) * j.v;
    let d = 1e-4 * y.min(1.0);
    let fr = |s: f64| -> Result<f64> { Ok(integrating_factor(h, alpha, s, quad)? * r.value(s)) };
    let rhs = (fr(y + d)? - fr(y - d)?) / (2.0 * d * integrating_factor(h, alpha, y, quad)?);
    Ok((lhs, rhs))
}

/// `ρ = q(y)·m` with `q = amplitude·yᵏ·e^{−λy}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPerturbation {
    pub amplitude: f64,
    pub power: u32,
    pub rate: f64,
    pub direction: InvariantOneForm,
}

impl SyntheticPerturbation {
    pub fn new(amplitude: f64, power: u32, rate: f64, direction: InvariantOneForm) -> Result<Self> {
        let p = Self {
            amplitude,
            power,
            rate,
            direction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.power < 1 {
            return Err(KwError::PerturbationOrder(format!("q ~ y^{} is not O(y) at 0", self.power)));
        }
        if !(self.rate > 0.0) || !self.amplitude.is_finite() {
            return Err(KwError::PerturbationOrder(format!("rate {} gives no decay", self.rate)));
        }
        Ok(())
    }

    /// Draw a perturbation with entries of `m` in `[−1, 1]`.
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let direction = InvariantOneForm::from_fn(|_, _| rng.gen_range(-1.0..=1.0));
        Self {
            amplitude: rng.gen_range(-2.0..=2.0),
            power: rng.gen_range(1..=3),
            rate: rng.gen_range(1.0..=3.0),
            direction,
        }
    }

    pub fn seeded(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self::random(&mut rng)
    }

    /// Scalar `α` with `ρ⁽¹⁾ = αω`.
    pub fn alpha(&self) -> AlphaProfile {
        AlphaProfile(self.clone())
    }
}

impl ScalarProfile for SyntheticPerturbation {
    fn jet(&self, y: f64) -> Jet2 {
        let y = Jet2::var(y);
        let mut q = Jet2::cst(self.amplitude);
        for _ in 0..self.power {
            q = q * y;
        }
        q * y.scale(-self.rate).exp()
    }
}

pub struct AlphaProfile(SyntheticPerturbation);

impl ScalarProfile for AlphaProfile {
    fn jet(&self, y: f64) -> Jet2 {
        self.0.jet(y).scale(self.0.direction.trace() / 3.0)
    }
}

/// One inequality `lhs ≤ rhs` of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSlack {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub perturbation: SyntheticPerturbation,
    pub steps: Vec<StepSlack>,
    /// Smallest pointwise slack of the V¹ bound on `*₃(ρ∧ρ)` over a y-grid.
    pub square_min_slack: f64,
    /// Discarded boundary term `vol·|ρ⁽¹⁾(1)|·|ω|`.
    pub boundary_term: f64,
}

impl ChainOutcome {
    pub fn step(&self, name: &str) -> Option<&StepSlack> {
        self.steps.iter().find(|s| s.name == name)
    }

    pub fn min_slack(&self) -> f64 {
        self.steps.iter().map(|s| s.slack).fold(self.square_min_slack, f64::min)
    }
}

pub const STEP_NAMES: [&str; 11] = [
    "far_cauchy_schwarz",
    "far_young",
    "near_pairing",
    "near_integrating_factor",
    "near_boundary_drop",
    "near_sign",
    "near_square_bound",
    "near_triangle",
    "near_model_constant",
    "near_young",
    "total",
];

/// Pointwise integrands of the chain, per unit S³ volume.
#[derive(Debug, Clone, Copy, Default)]
struct Point {
    pairing: f64,
    far_weighted: f64,
    rho1_sq: f64,
    rho23_sq: f64,
    rho_sq: f64,
    two_h: f64,
    factor: f64,
    e1: f64,
    e1_split: f64,
    model_square: f64,
    w1: f64,
    w_sq: f64,
    square_slack: f64,
}

const N_FIELDS: usize = 12;

impl Point {
    fn field(&self, k: usize) -> f64 {
        [
            self.pairing,
            self.far_weighted,
            self.rho1_sq,
            self.rho23_sq,
            self.rho_sq,
            self.two_h,
            self.factor,
            self.e1,
            self.e1_split,
            self.model_square,
            self.w1,
            self.w_sq,
        ][k]
    }
}

fn point(pert: &SyntheticPerturbation, c2: f64, y: f64) -> Point {
    let w = InvariantOneForm::omega();
    let wn = w.norm();
    let hj = he_b(Jet2::var(y));
    let h = hj.v;
    let ph = w.scale(&h);
    let ph1 = w.scale(&hj.d1);
    let qj = pert.jet(y);
    let m = &pert.direction;
    let rho = m.scale(&qj.v);
    let rho1_prime = project(Component::V1, &m.scale(&qj.d1));
    let rho1 = project(Component::V1, &rho);
    let rho2 = project(Component::V2, &rho);
    let rho3 = project(Component::V3, &rho);
    let alpha = qj.v * m.trace() / 3.0;
    let alpha1 = qj.d1 * m.trace() / 3.0;
    let rho1_abs = rho1.norm();
    let rho23_sq = rho2.norm_sq() + rho3.norm_sq();

    let model_sq = wedge_square(&ph).tangential;
    let w_model = &ph1 + &model_sq;
    let phi = &ph + &rho;
    let w_full = &(&ph1 + &m.scale(&qj.d1)) + &wedge_square(&phi).tangential;

    let twist = bracket_dual(&ph, &rho1);
    let e1 = &(&rho1_prime + &twist) + &wedge_square(&rho1).tangential;
    let v1_square = project(Component::V1, &wedge_square(&rho).tangential);
    let e1_split = &(&rho1_prime + &twist) + &v1_square;
    let square_gap = (&v1_square - &wedge_square(&rho1).tangential).norm();

    let abs_prime = alpha.signum() * alpha1 * wn;
    Point {
        pairing: 2.0 * ph.inner(&rho).abs(),
        far_weighted: c2 * (-2.0 * y).exp() * rho1_abs,
        rho1_sq: rho1_abs * rho1_abs,
        rho23_sq,
        rho_sq: rho.norm_sq(),
        two_h: 2.0 * h * rho1_abs * wn,
        factor: (abs_prime + (2.0 * h + alpha) * rho1_abs) * wn,
        e1: e1.norm() * wn,
        e1_split: e1_split.norm() * wn,
        model_square: w_model.norm() * wn,
        w1: project(Component::V1, &w_full).norm() * wn,
        w_sq: w_full.norm_sq(),
        square_slack: rho23_sq / 6f64.sqrt() - square_gap,
    }
}

/// `vol·∫` of every pointwise field over `(0, 1]` and `[1, ∞)`.
fn integrals(pert: &SyntheticPerturbation, c2: f64, quad: &QuadratureSpec) -> Result<([f64; N_FIELDS], [f64; N_FIELDS])> {
    let far_end = quad.y_max.max(1.0 + 60.0 / pert.rate);
    let mut near = [0.0; N_FIELDS];
    let mut far = [0.0; N_FIELDS];
    for k in 0..N_FIELDS {
        let f = |y: f64| point(pert, c2, y).field(k);
        near[k] = VOL_S3
            * (integrate_interval(f, FULL_LINE_EPS, 1.0, quad.panels, quad.nodes_per_panel, true)?.value
                + FULL_LINE_EPS * f(FULL_LINE_EPS));
        far[k] = VOL_S3 * integrate_interval(f, 1.0, far_end, 2 * quad.panels, quad.nodes_per_panel, false)?.value;
    }
    Ok((near, far))
}

fn step(name: &str, lhs: f64, rhs: f64) -> StepSlack {
    StepSlack {
        name: name.into(),
        lhs,
        rhs,
        slack: rhs - lhs,
    }
}

/// Evaluate every inequality of the chain for `φ = φ^H + ρ`.
pub fn perturbation_chain(pert: &SyntheticPerturbation, k: &BoundConstants, quad: &QuadratureSpec) -> Result<ChainOutcome> {
    pert.validate()?;
    let (near, far) = integrals(pert, k.c2, quad)?;
    let [pairing, far_weighted, rho1_sq, rho23_sq, rho_sq, two_h, factor, e1, e1_split, model_square, w1, w_sq] =
        [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
    let wn = InvariantOneForm::omega().norm();
    let boundary = VOL_S3 * project(Component::V1, &pert.direction.scale(&pert.value(1.0))).norm() * wn;

    let steps = vec![
        step(STEP_NAMES[0], far[pairing], far[far_weighted]),
        step(STEP_NAMES[1], far[far_weighted], k.k_far + 0.5 * far[rho1_sq]),
        step(STEP_NAMES[2], near[pairing], near[two_h]),
        step(STEP_NAMES[3], near[two_h], near[factor] + near[rho1_sq] - boundary),
        step(STEP_NAMES[4], near[factor] + near[rho1_sq] - boundary, near[factor] + near[rho1_sq]),
        step(STEP_NAMES[5], near[factor], near[e1]),
        step(STEP_NAMES[6], near[e1], near[e1_split] + 0.5 * near[rho23_sq]),
        step(STEP_NAMES[7], near[e1_split], near[model_square] + near[w1]),
        step(STEP_NAMES[8], near[model_square], k.k_model),
        step(STEP_NAMES[9], near[w1], 0.5 * near[w_sq] + k.k_unit),
        step(
            STEP_NAMES[10],
            near[pairing] + far[pairing],
            k.c1 + near[rho_sq] + far[rho_sq] + 0.5 * (near[w_sq] + far[w_sq]),
        ),
    ];
    let square_min_slack = log_grid(1e-3, quad.y_max, 400)
        .into_iter()
        .map(|y| point(pert, k.c2, y).square_slack)
        .fold(f64::INFINITY, f64::min);
    Ok(ChainOutcome {
        perturbation: pert.clone(),
        steps,
        square_min_slack,
        boundary_term: boundary,
    })
}

/// Relative tolerance on slacks, for quadrature noise.
pub const SLACK_TOLERANCE: f64 = 1e-9;

/// Run `n` seeded perturbations; one report per step with the worst slack.
pub fn perturbation_batch(
    k: &BoundConstants,
    seed: u64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<(Vec<ChainOutcome>, Vec<CheckReport>)> {
    if n == 0 {
        return Err(KwError::EmptySuite);
    }
    let outcomes: Vec<ChainOutcome> = (0..n as u64)
        .into_par_iter()
        .map(|i| perturbation_chain(&SyntheticPerturbation::seeded(seed, i), k, quad))
        .collect::<Result<_>>()?;
    let reference = "int_M |2tr(phi^H ^ *rho)| <= C1 + int_M |rho|^2 + (1/2) int_M |*3 d_y phi + phi^2|^2";
    let mut reports = Vec::new();
    for (i, name) in STEP_NAMES.iter().enumerate() {
        let (worst, scale) = outcomes
            .iter()
            .map(|o| (o.steps[i].slack, o.steps[i].rhs.abs().max(o.steps[i].lhs.abs())))
            .fold((f64::INFINITY, 0.0f64), |(s, m), (v, sc)| (s.min(v), m.max(sc)));
        reports.push(CheckReport::at_least(
            &format!("chain.{name}"),
            reference,
            worst,
            0.0,
            SLACK_TOLERANCE * scale.max(1.0),
            Provenance::Derived,
        ));
    }
    let square = outcomes.iter().map(|o| o.square_min_slack).fold(f64::INFINITY, f64::min);
    reports.push(CheckReport::at_least(
        "chain.square_bound_pointwise",
        "|(star3(v^v))^(1) - star3 v1^v1| <= (|v2|^2 + |v3|^2)/sqrt6",
        square,
        0.0,
        1e-12,
        Provenance::Paper,
    ));
    Ok((outcomes, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{mu, nu};
    use crate::energy::compute_c_h;
    use crate::invariant::profile::{Constant, FnProfile, HeProfile};

    fn constants() -> BoundConstants {
        let q = QuadratureSpec::default();
        BoundConstants::new(compute_c_h(&crate::invariant::GeometryConventions::GOLDEN, &q).unwrap().value)
    }

    #[test]
    fn trivial_factor() {
        let q = QuadratureSpec::default();
        for y in [0.1, 1.0, 5.0] {
            let f = integrating_factor(&Constant(0.0), &Constant(0.0), y, &q).unwrap();
            assert_eq!(f, 1.0);
        }
    }

    #[test]
    fn factor_tends_to_one_for_model_h() {
        let q = QuadratureSpec::default();
        let f = |y| integrating_factor(&HeProfile::B, &Constant(0.0), y, &q).unwrap();
        assert!(f(0.5) < f(2.0) && f(2.0) < f(8.0));
        assert!((f(12.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn divergent_exponents_are_named() {
        let q = QuadratureSpec::default();
        let slow = FnProfile(|y: Jet2| y.recip());
        let e = integrating_factor(&slow, &Constant(0.0), 1.0, &q).unwrap_err();
        assert!(matches!(e, KwError::DivergentExponent { which: "h" }));
        let e = integrating_factor(&Constant(0.0), &slow, 1.0, &q).unwrap_err();
        assert!(matches!(e, KwError::DivergentExponent { which: "alpha" }));
    }

    #[test]
    fn integrating_factor_identity_by_differences() {
        let q = QuadratureSpec::default();
        for seed in 0..4u64 {
            let p = SyntheticPerturbation::seeded(seed, 0);
            let alpha = p.alpha();
            for y in [0.2, 0.7, 1.5] {
                let (l, r) = integrating_factor_identity(&HeProfile::B, &alpha, &alpha, y, &q).unwrap();
                assert!((l - r).abs() <= 1e-6 * l.abs().max(1e-3), "{seed} {y}: {l} {r}");
            }
        }
    }

    #[test]
    fn order_is_enforced() {
        let e = SyntheticPerturbation::new(1.0, 0, 1.0, InvariantOneForm::omega()).unwrap_err();
        assert!(matches!(e, KwError::PerturbationOrder(_)));
    }

    #[test]
    fn zero_perturbation() {
        let k = constants();
        let p = SyntheticPerturbation::new(0.0, 1, 1.0, InvariantOneForm::omega()).unwrap();
        let o = perturbation_chain(&p, &k, &QuadratureSpec::default()).unwrap();
        let total = o.step("total").unwrap();
        assert_eq!(total.lhs, 0.0);
        assert_eq!(total.slack, total.rhs);
        assert!(o.steps.iter().all(|s| s.slack >= -1e-9 * s.rhs.abs().max(1.0)));
    }

    #[test]
    fn pure_v1_perturbation() {
        let k = constants();
        let p = SyntheticPerturbation::new(1.0, 1, 1.0, InvariantOneForm::omega()).unwrap();
        let o = perturbation_chain(&p, &k, &QuadratureSpec::default()).unwrap();
        let square = o.step("near_square_bound").unwrap();
        assert!(square.slack.abs() <= 1e-9 * square.rhs.abs(), "{square:?}");
        assert!(o.steps.iter().all(|s| s.slack >= -1e-9 * s.rhs.abs().max(1.0)), "{:?}", o.steps);
    }

    #[test]
    fn mixed_v2_v3_perturbation() {
        let k = constants();
        let m = &mu::<f64>(0) + &nu::<f64>(1);
        let p = SyntheticPerturbation::new(1.0, 1, 1.0, m).unwrap();
        let o = perturbation_chain(&p, &k, &QuadratureSpec::default()).unwrap();
        assert!(o.square_min_slack >= -1e-14);
        assert!(o.steps.iter().all(|s| s.slack >= -1e-9 * s.rhs.abs().max(1.0)), "{:?}", o.steps);
    }

    #[test]
    fn seeded_batch() {
        let k = constants();
        let (out, reports) = perturbation_batch(&k, 7, 12, &QuadratureSpec::default()).unwrap();
        assert_eq!(out.len(), 12);
        assert!(reports.iter().all(|r| r.passed()), "{reports:#?}");
        let again = SyntheticPerturbation::seeded(7, 3);
        assert_eq!(out[3].perturbation, again);
    }
}
