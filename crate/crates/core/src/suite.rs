//! Named verification suites, their configuration, and report and plot-data emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{decomposition_suite, omega_bracket_eigencheck, star_table_checks, structure_checks};
use crate::energy::{
    self, bound_report, check_energy_identity, compute_c_h, densities, perturbation_batch, sweep_rows, topological_charge,
    BoundConstants, Identity, STEP_NAMES,
};
use crate::error::{KwError, Result};
use crate::halfspace::{he_scaling_slope, kw_residual_flat_scaled, sample_points, scale_pullback, FlatModelField};
use crate::invariant::profile::{HeProfile, ScalarProfile};
use crate::invariant::{calibrate_all, log_grid, max_residual, ricci_check, GeometryConventions, InvariantField, RESIDUAL_GRID};
use crate::quadrature::{QuadratureSpec, TailMode};
use crate::reduced::{
    derive_reduced_system, he_state, indicial_expand, integrate_ivp, shoot_for_decay, IndicialOptions, ShootSpec, ShotProfile,
    StepControl,
};
use crate::report::{all_passed, CheckReport, Provenance, Status, SCHEMA_VERSION};
use crate::scalar::{rational, Scalar};
use crate::su2::{bracket, inner, AdRotation, Su2Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteId {
    Algebra,
    Models,
    Decomposition,
    Energy,
    Solver,
    All,
}

impl SuiteId {
    pub const NAMES: [&'static str; 6] = ["algebra", "models", "decomposition", "energy", "solver", "all"];

    fn parts(self) -> Vec<SuiteId> {
        match self {
            SuiteId::All => vec![SuiteId::Algebra, SuiteId::Models, SuiteId::Decomposition, SuiteId::Energy, SuiteId::Solver],
            s => vec![s],
        }
    }
}

impl FromStr for SuiteId {
    type Err = KwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(SuiteId::Algebra),
            "models" => Ok(SuiteId::Models),
            "decomposition" => Ok(SuiteId::Decomposition),
            "energy" => Ok(SuiteId::Energy),
            "solver" => Ok(SuiteId::Solver),
            "all" => Ok(SuiteId::All),
            other => Err(KwError::Config(format!("unknown suite '{other}' (expected one of {})", Self::NAMES.join(", ")))),
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [SuiteId::Algebra, SuiteId::Models, SuiteId::Decomposition, SuiteId::Energy, SuiteId::Solver, SuiteId::All]
            .iter()
            .position(|s| s == self)
            .unwrap();
        f.write_str(Self::NAMES[i])
    }
}

/// Optional overrides of [`QuadratureSpec`] fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub eps: Option<f64>,
    pub y_split: Option<f64>,
    pub y_max: Option<f64>,
    pub panels: Option<usize>,
    pub nodes_per_panel: Option<usize>,
    pub tail_mode: Option<TailMode>,
    pub tail_rate: Option<f64>,
}

impl QuadratureOverrides {
    pub fn apply(&self, mut q: QuadratureSpec) -> QuadratureSpec {
        q.eps = self.eps.unwrap_or(q.eps);
        q.y_split = self.y_split.unwrap_or(q.y_split);
        q.y_max = self.y_max.unwrap_or(q.y_max);
        q.panels = self.panels.unwrap_or(q.panels);
        q.nodes_per_panel = self.nodes_per_panel.unwrap_or(q.nodes_per_panel);
        q.tail_mode = self.tail_mode.unwrap_or(q.tail_mode);
        q.tail_rate = self.tail_rate.unwrap_or(q.tail_rate);
        q
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON suite report.
    pub report: Option<PathBuf>,
    /// CSV of the divergence-cancellation sweep.
    pub sweep_csv: Option<PathBuf>,
}

fn default_seed() -> u64 {
    42
}
fn default_samples() -> usize {
    10_000
}
fn default_model_points() -> usize {
    1_000
}
fn default_perturbations() -> usize {
    100
}
fn default_identity_eps() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: SuiteId,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random vectors per family in the decomposition suite.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random points per flat model.
    #[serde(default = "default_model_points")]
    pub model_points: usize,
    /// Synthetic perturbations in the inequality chain.
    #[serde(default = "default_perturbations")]
    pub perturbations: usize,
    /// Cutoff of the single-`ε` energy identities.
    #[serde(default = "default_identity_eps")]
    pub identity_eps: f64,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: SuiteId::All,
            seed: default_seed(),
            samples: default_samples(),
            model_points: default_model_points(),
            perturbations: default_perturbations(),
            identity_eps: default_identity_eps(),
            quadrature: QuadratureOverrides::default(),
            tolerances: BTreeMap::new(),
            output: OutputPaths::default(),
        }
    }
}

impl SuiteConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| KwError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        self.quadrature.apply(QuadratureSpec::default())
    }

    pub fn set_tolerance(&mut self, id: &str, value: f64) -> Result<()> {
        validate_tolerance(id, value)?;
        self.tolerances.insert(id.to_string(), value);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (id, v) in &self.tolerances {
            validate_tolerance(id, *v)?;
        }
        self.quadrature_spec().validate()?;
        if !(self.identity_eps > 0.0 && self.identity_eps < 1.0) {
            return Err(KwError::Config(format!("identity_eps = {} outside (0, 1)", self.identity_eps)));
        }
        if self.samples == 0 || self.model_points == 0 || self.perturbations == 0 {
            return Err(KwError::EmptySuite);
        }
        Ok(())
    }
}

fn validate_tolerance(id: &str, value: f64) -> Result<()> {
    if !known_check_ids().contains(id) {
        return Err(KwError::Config(format!("unknown check id '{id}'")));
    }
    if !(value > 0.0 && value.is_finite()) {
        return Err(KwError::Config(format!("tolerance for '{id}' must be positive, got {value}")));
    }
    Ok(())
}

const STATIC_IDS: &[&str] = &[
    "algebra.antisymmetry",
    "algebra.jacobi",
    "algebra.invariant_inner",
    "algebra.structure_constants",
    "algebra.omega_norm",
    "algebra.ad_invariance",
    "calibrate",
    "calibrate.unique",
    "ricci",
    "models.nahm_pole.residual",
    "models.nahm_singular.residual",
    "models.he.residual",
    "models.he_alternate.residual",
    "models.scaling.he_slope",
    "models.scaling.nahm_pole",
    "models.scaling.nahm_singular",
    "decomp.suite.pure_equality_failures",
    "decomp.suite.mixed_violations",
    "decomp.suite.projection_failures",
    "decomp.suite.eigen_failures",
    "decomp.suite.worst_slack",
    "identity.divergence_limit.value",
    "identity.divergence_limit.cauchy",
    "identity.divergence_limit.phi_slope",
    "identity.divergence_limit.boundary_slope",
    "c_h.refined",
    "c_h.envelope",
    "c_h.coefficient",
    "bound.f_le_c0",
    "bound.strict_slack",
    "bound.slack_terms",
    "bound.f_le_c",
    "bound.refined",
    "charge.he",
    "charge.he_alternate",
    "charge.opposite",
    "chain.square_bound_pointwise",
    "solver.system",
    "solver.eigenvalue",
    "solver.series_pole",
    "solver.series_linear",
    "solver.ivp",
    "solver.shoot",
    "solver.shoot_parameter",
    "solver.energy",
];

/// Every check id a suite can emit.
pub fn known_check_ids() -> BTreeSet<String> {
    let mut ids: BTreeSet<String> = STATIC_IDS.iter().map(|s| s.to_string()).collect();
    ids.extend(Identity::ALL.iter().map(|i| i.check_id().to_string()));
    ids.extend(STEP_NAMES.iter().map(|s| format!("chain.{s}")));
    for r in omega_bracket_eigencheck().into_iter().chain(structure_checks()).chain(star_table_checks()) {
        ids.insert(r.check_id);
    }
    ids
}

/// Result of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: SuiteId,
    pub seed: u64,
    pub passed: bool,
    pub counts: StatusCounts,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn get(&self, id: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn guard(id: &str, paper_ref: &str, provenance: Provenance, r: Result<Vec<CheckReport>>) -> Vec<CheckReport> {
    r.unwrap_or_else(|e| vec![CheckReport::failed(id, paper_ref, e.to_string(), provenance)])
}

/// Runs the configured suite; a numerical failure inside a check fails that check only.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut checks = Vec::new();
    for part in cfg.suite.parts() {
        checks.extend(match part {
            SuiteId::Algebra => algebra_checks(cfg.seed, cfg.model_points),
            SuiteId::Models => model_checks(cfg),
            SuiteId::Decomposition => decomposition_checks(cfg),
            SuiteId::Energy => energy_checks(cfg)?,
            SuiteId::Solver => solver_checks(cfg),
            SuiteId::All => unreachable!(),
        });
    }
    for c in &mut checks {
        if let Some(&t) = cfg.tolerances.get(&c.check_id) {
            *c = c.clone().with_tolerance(t);
        }
    }
    let mut counts = StatusCounts::default();
    for c in &checks {
        match c.status {
            Status::Pass => counts.pass += 1,
            Status::Fail => counts.fail += 1,
            Status::Info => counts.info += 1,
        }
    }
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: cfg.suite,
        seed: cfg.seed,
        passed: all_passed(&checks),
        counts,
        checks,
    })
}

type Q = BigRational;

fn random_element(rng: &mut ChaCha8Rng) -> Su2Element<Q> {
    let mut c = || rational(rng.gen_range(-50..=50), rng.gen_range(1..=9));
    Su2Element::new(c(), c(), c())
}

fn count_check(id: &str, paper_ref: &str, failures: usize, provenance: Provenance) -> CheckReport {
    CheckReport::approx(id, paper_ref, failures as f64, 0.0, 0.0, provenance)
}

/// Exact bracket identities on seeded rational elements, the invariant norm
/// of `ω`, and invariance of the inner product under the adjoint action.
pub fn algebra_checks(seed: u64, n: usize) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut antisym, mut jacobi, mut invariance) = (0, 0, 0);
    for _ in 0..n {
        let (u, v, w) = (random_element(&mut rng), random_element(&mut rng), random_element(&mut rng));
        if bracket(&u, &v) != -bracket(&v, &u) {
            antisym += 1;
        }
        let j = bracket(&u, &bracket(&v, &w)) + bracket(&v, &bracket(&w, &u)) + bracket(&w, &bracket(&u, &v));
        if !j.is_zero() {
            jacobi += 1;
        }
        if inner(&bracket(&u, &v), &w) != inner(&u, &bracket(&v, &w)) {
            invariance += 1;
        }
    }
    let mut structure = 0;
    for i in 0..3 {
        for j in 0..3 {
            let b = bracket(&Su2Element::<Q>::basis(i), &Su2Element::basis(j));
            let expected = if i == j {
                Su2Element::zero()
            } else {
                let k = 3 - i - j;
                let sign = if (j + 3 - i) % 3 == 1 { 1 } else { -1 };
                Su2Element::basis(k).scale(&rational(sign, 1))
            };
            if b != expected {
                structure += 1;
            }
        }
    }
    let omega_norm = crate::invariant::InvariantOneForm::<Q>::omega().norm_sq();

    let mut frng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst_rot = 0.0f64;
    for _ in 0..n.min(1000) {
        let mut g = || Su2Element::new(frng.gen_range(-1.0..1.0), frng.gen_range(-1.0..1.0), frng.gen_range(-1.0..1.0));
        let (axis, u, v) = (g(), g(), g());
        let angle = frng.gen_range(-3.0..3.0);
        let Ok(rot) = AdRotation::new(&axis, angle) else { continue };
        let d_inner = (inner(&rot.apply(&u), &rot.apply(&v)) - inner(&u, &v)).abs();
        let lhs = rot.apply(&bracket(&u, &v));
        let rhs = bracket(&rot.apply(&u), &rot.apply(&v));
        worst_rot = worst_rot.max(d_inner).max(crate::su2::norm(&(lhs - rhs)));
    }
    vec![
        count_check("algebra.antisymmetry", "[u, v] = -[v, u]", antisym, Provenance::Trivial),
        count_check("algebra.jacobi", "Jacobi identity of su(2)", jacobi, Provenance::Trivial),
        count_check("algebra.invariant_inner", "<[u, v], w> = <u, [v, w]>", invariance, Provenance::Trivial),
        count_check("algebra.structure_constants", "[t_i, t_j] = eps_ijk t_k", structure, Provenance::Paper),
        CheckReport::approx("algebra.omega_norm", "|omega|^2 = 3/2", omega_norm.to_f64_lossy(), 1.5, 0.0, Provenance::Paper),
        CheckReport::at_most(
            "algebra.ad_invariance",
            "<Ad_g u, Ad_g v> = <u, v> and Ad_g [u, v] = [Ad_g u, Ad_g v]",
            worst_rot,
            0.0,
            1e-13,
            Provenance::Trivial,
        ),
    ]
}

fn calibration_checks() -> Vec<CheckReport> {
    let cal = calibrate_all(1e-10);
    let detail = cal
        .candidates
        .iter()
        .map(|c| format!("(c={}, s1={}, s2={}): ricci {}, residual {:.3e}", c.conventions.c, c.conventions.s1, c.conventions.s2, c.ricci_ok, c.he_residual))
        .collect::<Vec<_>>()
        .join("; ");
    let golden = cal.accepted == [GeometryConventions::GOLDEN];
    vec![
        CheckReport::approx(
            "calibrate.unique",
            "exactly one convention gives Ric = 2g and a vanishing model-solution residual",
            cal.accepted.len() as f64,
            1.0,
            0.0,
            Provenance::Derived,
        )
        .with_note(detail),
        CheckReport::approx(
            "calibrate",
            "calibrated conventions equal the locked golden value (c, s1, s2) = (1, 1, 1)",
            if golden { 1.0 } else { 0.0 },
            1.0,
            0.0,
            Provenance::Derived,
        ),
        ricci_check(&GeometryConventions::GOLDEN),
    ]
}

fn flat_residual_check(id: &str, field: &FlatModelField, seed: u64, n: usize, r_min: f64, tol: f64) -> CheckReport {
    let worst = sample_points(seed, n, r_min)
        .iter()
        .map(|p| kw_residual_flat_scaled(field, p))
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    CheckReport::at_most(id, "F_A - phi^phi = *d_A phi, d_A*phi = 0 (scaled pointwise residual)", worst, 0.0, tol, Provenance::Derived)
        .with_note(format!("{n} seeded points, r >= {r_min}"))
}

fn scale_invariance_check(id: &str, field: &FlatModelField, seed: u64, n: usize) -> CheckReport {
    let mut worst = 0.0f64;
    let points = sample_points(seed, n.min(200), 0.1);
    for s in [1e-1, 1e-2, 1e-3, 10.0] {
        let Ok(scaled) = scale_pullback(field, s) else {
            return CheckReport::failed(id, "", "scale pullback failed", Provenance::Trivial);
        };
        for p in &points {
            let (a, b) = (field.values(p), scaled.values(p));
            for k in 0..3 {
                for (x, y) in [(&a.a[k], &b.a[k]), (&a.phi[k], &b.phi[k])] {
                    let d = crate::su2::norm(&(x.clone() - y.clone()));
                    let scale = crate::su2::norm(x).max(1.0);
                    worst = worst.max(d / scale);
                }
            }
        }
    }
    CheckReport::at_most(id, "flat models are invariant under (A, phi) -> (s A(s p), s phi(s p))", worst, 0.0, 1e-12, Provenance::Trivial)
}

pub fn model_checks(cfg: &SuiteConfig) -> Vec<CheckReport> {
    let conv = GeometryConventions::GOLDEN;
    let (lo, hi, n) = RESIDUAL_GRID;
    let ys = log_grid(lo, hi, n);
    let mut out = calibration_checks();
    out.push(flat_residual_check("models.nahm_pole.residual", &FlatModelField::nahm_pole(), cfg.seed, cfg.model_points, 0.0, 1e-12));
    out.push(flat_residual_check(
        "models.nahm_singular.residual",
        &FlatModelField::nahm_singular(),
        cfg.seed.wrapping_add(1),
        cfg.model_points,
        0.1,
        1e-10,
    ));
    for (id, field) in [("models.he.residual", InvariantField::he()), ("models.he_alternate.residual", InvariantField::he_alternate())] {
        out.push(match max_residual(&conv, &field, &ys) {
            Ok(r) => CheckReport::at_most(id, "scaled residual of the reduced first-order equations", r, 0.0, 1e-10, Provenance::Derived)
                .with_note(format!("{n}-point log grid on [{lo}, {hi}]")),
            Err(e) => CheckReport::failed(id, "", e.to_string(), Provenance::Derived),
        });
    }
    let slope = he_scaling_slope(1.0, &[1e-1, 1e-2, 1e-3]);
    out.push(
        CheckReport::approx(
            "models.scaling.he_slope",
            "s b(s y) -> 1/y as s -> 0 (Nahm pole limit), rate s^2",
            slope.slope,
            2.0,
            0.1,
            Provenance::Derived,
        )
        .with_note(format!("errors {:?} at y = 1", slope.errors)),
    );
    out.push(scale_invariance_check("models.scaling.nahm_pole", &FlatModelField::nahm_pole(), cfg.seed, cfg.model_points));
    out.push(scale_invariance_check("models.scaling.nahm_singular", &FlatModelField::nahm_singular(), cfg.seed, cfg.model_points));
    out
}

pub fn decomposition_checks(cfg: &SuiteConfig) -> Vec<CheckReport> {
    let mut out = structure_checks();
    out.extend(omega_bracket_eigencheck());
    out.extend(star_table_checks());
    out.extend(guard(
        "decomp.suite.pure_equality_failures",
        "random decomposition suite",
        Provenance::Derived,
        decomposition_suite(cfg.seed, cfg.samples).map(|(_, r)| r),
    ));
    out
}

fn charge_checks(conv: &GeometryConventions, quad: &QuadratureSpec) -> Result<Vec<CheckReport>> {
    let he = topological_charge(conv, &HeProfile::A, quad)?;
    let alt = topological_charge(conv, &HeProfile::AlternateA, quad)?;
    let reference = "p(A) = (1/4 pi^2) int tr(F^F), closed form from the antiderivative a^3/3 - a^2";
    let gate = |id: &str, q: f64, o: f64| {
        CheckReport::approx(id, reference, q, o, 1e-8 * o.abs().max(1.0), Provenance::Derived)
            .with_note(format!("quadrature {q:.15e}, oracle {o:.15e}"))
    };
    Ok(vec![
        gate("charge.he", he.quadrature.value, he.oracle),
        gate("charge.he_alternate", alt.quadrature.value, alt.oracle),
        CheckReport::approx(
            "charge.opposite",
            "the alternate solution carries the opposite charge",
            alt.oracle + he.oracle,
            0.0,
            1e-12,
            Provenance::Derived,
        )
        .with_note(format!("he {:.12}, alternate {:.12}", he.oracle, alt.oracle)),
    ])
}

pub fn energy_checks(cfg: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let conv = GeometryConventions::GOLDEN;
    let quad = cfg.quadrature_spec();
    let field = InvariantField::he();
    let mut out = Vec::new();
    for id in Identity::ALL {
        let tol = cfg.tolerances.get(id.check_id()).copied().unwrap_or(1e-6);
        let eps = if id == Identity::DivergenceLimit { quad.eps } else { cfg.identity_eps };
        match check_energy_identity(&conv, id, &field, eps, &quad, tol) {
            Ok(o) => {
                if id == Identity::DivergenceLimit {
                    if let Some(path) = &cfg.output.sweep_csv {
                        write_sweep_csv(path, &o.sweep)?;
                    }
                }
                out.extend(o.reports);
            }
            Err(e) => out.push(CheckReport::failed(id.check_id(), id.paper_ref(), e.to_string(), Provenance::Derived)),
        }
    }
    let ch = compute_c_h(&conv, &quad);
    match &ch {
        Ok(c) => out.extend(c.reports.clone()),
        Err(e) => out.push(CheckReport::failed("c_h.refined", "C_H", e.to_string(), Provenance::Derived)),
    }
    out.extend(guard(
        "bound.f_le_c0",
        "energy bound",
        Provenance::Derived,
        bound_report(&conv, "he", &field, Some(&HeProfile::A), &quad).map(|r| r.checks),
    ));
    out.extend(guard("charge.he", "topological charge", Provenance::Derived, charge_checks(&conv, &quad)));
    out.extend(guard(
        "chain.total",
        "perturbation inequality chain",
        Provenance::Derived,
        ch.and_then(|c| perturbation_batch(&BoundConstants::new(c.value), cfg.seed, cfg.perturbations, &quad)).map(|(_, r)| r),
    ));
    Ok(out)
}

/// Largest deviation from the closed-form solution over samples in `[lo, hi]`.
fn sup_deviation(ys: &[f64], states: impl Fn(f64) -> [f64; 2], lo: f64, hi: f64) -> f64 {
    ys.iter()
        .filter(|&&y| y >= lo && y <= hi)
        .map(|&y| {
            let (s, h) = (states(y), he_state(y));
            (s[0] - h[0]).abs().max((s[1] - h[1]).abs())
        })
        .fold(0.0, f64::max)
}

pub fn solver_checks(cfg: &SuiteConfig) -> Vec<CheckReport> {
    let conv = GeometryConventions::GOLDEN;
    let sys = match derive_reduced_system(&conv) {
        Ok(s) => s,
        Err(e) => return vec![CheckReport::failed("solver.system", "reduced ODE", e.to_string(), Provenance::Derived)],
    };
    let expected_a = [0.0, 0.0, -2.0, 0.0, 2.0, 0.0];
    let expected_b = [0.0, -2.0, 0.0, 1.0, 0.0, -1.0];
    let coeff_err = sys
        .a_coeffs
        .iter()
        .zip(&expected_a)
        .chain(sys.b_coeffs.iter().zip(&expected_b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let mut out = vec![CheckReport::approx(
        "solver.system",
        "a' = 2b(a - 1), b' = a^2 - 2a - b^2",
        coeff_err,
        0.0,
        0.0,
        Provenance::Derived,
    )
    .with_note(sys.describe())];
    let lambda = sys.eigenvalues(0.0, 0.0).map_or(f64::NAN, |l| l.0);
    out.push(CheckReport::approx(
        "solver.eigenvalue",
        "stable eigenvalue of the linearization at (0, 0), decay e^{-2y}",
        lambda,
        -2.0,
        1e-8,
        Provenance::Paper,
    ));
    match indicial_expand(&sys, 6, &IndicialOptions::default()) {
        Ok(e) => {
            out.push(CheckReport::approx("solver.series_pole", "b = 1/y - y/3 + O(y^3)", e.b_coeff(-1), 1.0, 1e-10, Provenance::Paper));
            out.push(CheckReport::approx("solver.series_linear", "b = 1/y - y/3 + O(y^3)", e.b_coeff(1), -1.0 / 3.0, 1e-10, Provenance::Paper));
        }
        Err(e) => out.push(CheckReport::failed("solver.series_pole", "", e.to_string(), Provenance::Paper)),
    }
    let ctl = StepControl::default();
    out.push(match integrate_ivp(&sys, 0.1, he_state(0.1), 10.0, &ctl) {
        Ok(t) => {
            let dev = t
                .ys
                .iter()
                .zip(&t.states)
                .map(|(&y, s)| {
                    let h = he_state(y);
                    (s[0] - h[0]).abs().max((s[1] - h[1]).abs())
                })
                .fold(0.0, f64::max);
            CheckReport::at_most("solver.ivp", "initial-value problem from closed-form data at y = 0.1", dev, 0.0, 1e-6, Provenance::Derived)
                .with_note(format!("{} samples on [0.1, 10]", t.ys.len()))
        }
        Err(e) => CheckReport::failed("solver.ivp", "", e.to_string(), Provenance::Derived),
    });
    let shot = indicial_expand(&sys, 6, &IndicialOptions::default()).and_then(|base| {
        let spec = ShootSpec::default();
        let r = shoot_for_decay(&sys, &base, &spec)?;
        let p = Arc::new(ShotProfile::new(&sys, &r, spec.y0)?);
        Ok((r, p))
    });
    match shot {
        Ok((r, p)) => {
            let grid = log_grid(0.1, 8.0, 800);
            let dev = sup_deviation(&grid, |y| p.state(y), 0.1, 8.0);
            out.push(
                CheckReport::at_most("solver.shoot", "shooting on the free series coefficient recovers the decaying solution", dev, 0.0, 1e-4, Provenance::Derived)
                    .with_note(format!("bracket [{:.3e}, {:.3e}], cut at y = {:.3}, K = {:.6}", r.bracket.0, r.bracket.1, r.y_cut, r.tail_constant)),
            );
            out.push(CheckReport::info("solver.shoot_parameter", "free coefficient a_2 of the decaying solution", r.parameter, Provenance::Derived));
            let quad = cfg.quadrature_spec();
            out.push(match bound_report(&conv, "shot", &p.field(), None, &quad) {
                Ok(rep) => {
                    let f = rep.value("curvature_norm_sq");
                    let reference = energy::bound_report(&conv, "he", &InvariantField::he(), None, &quad).map(|r| r.value("curvature_norm_sq"));
                    match reference {
                        Ok(fr) => CheckReport::approx("solver.energy", "||F||^2 of the shot profile", f, fr, 1e-3, Provenance::Derived),
                        Err(e) => CheckReport::failed("solver.energy", "", e.to_string(), Provenance::Derived),
                    }
                }
                Err(e) => CheckReport::failed("solver.energy", "", e.to_string(), Provenance::Derived),
            });
        }
        Err(e) => out.push(CheckReport::failed("solver.shoot", "", e.to_string(), Provenance::Derived)),
    }
    out
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| KwError::Io(e.error))?;
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| KwError::Io(e.into_error()))
}

pub fn write_sweep_csv(path: &Path, rows: &[energy::SweepRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotTarget {
    Profiles,
    Integrands,
    EpsSweep,
}

impl PlotTarget {
    pub fn file_name(self) -> &'static str {
        match self {
            PlotTarget::Profiles => "profiles.csv",
            PlotTarget::Integrands => "integrands.csv",
            PlotTarget::EpsSweep => "identity-sweep.csv",
        }
    }
}

impl FromStr for PlotTarget {
    type Err = KwError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "profiles" => Ok(PlotTarget::Profiles),
            "integrands" => Ok(PlotTarget::Integrands),
            "eps-sweep" => Ok(PlotTarget::EpsSweep),
            other => Err(KwError::Config(format!("unknown plot target '{other}' (profiles, integrands, eps-sweep)"))),
        }
    }
}

/// `y,a,b,b_times_y,a_alternate`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePlotRow {
    pub y: f64,
    pub a: f64,
    pub b: f64,
    pub b_times_y: f64,
    pub a_alternate: f64,
}

/// `y,curvature,tangential_gradient,completed_square,twice_phi_sq,envelope`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrandPlotRow {
    pub y: f64,
    pub curvature: f64,
    pub tangential_gradient: f64,
    pub completed_square: f64,
    pub twice_phi_sq: f64,
    /// `K e^{−4y}` with `K` fitted on `y ≥ 1`.
    pub envelope: f64,
}

pub fn profile_rows(n: usize) -> Vec<ProfilePlotRow> {
    log_grid(1e-4, 30.0, n)
        .into_iter()
        .map(|y| {
            let b = HeProfile::B.value(y);
            ProfilePlotRow {
                y,
                a: HeProfile::A.value(y),
                b,
                b_times_y: b * y,
                a_alternate: HeProfile::AlternateA.value(y),
            }
        })
        .collect()
}

pub fn integrand_rows(quad: &QuadratureSpec, n: usize) -> Result<Vec<IntegrandPlotRow>> {
    let conv = GeometryConventions::GOLDEN;
    let field = InvariantField::he();
    let k = compute_c_h(&conv, quad)?.envelope_k;
    Ok(log_grid(1e-3, quad.y_max, n)
        .into_iter()
        .map(|y| {
            let d = densities(&conv, &field, y);
            IntegrandPlotRow {
                y,
                curvature: d.curvature,
                tangential_gradient: d.tangential_gradient,
                completed_square: d.completed_square,
                twice_phi_sq: d.twice_phi_sq,
                envelope: k * (-4.0 * y).exp(),
            }
        })
        .collect())
}

pub fn eps_sweep_rows(quad: &QuadratureSpec) -> Result<Vec<energy::SweepRow>> {
    let eps: Vec<f64> = log_grid(1e-4, 1e-1, 13).into_iter().rev().collect();
    Ok(sweep_rows(&GeometryConventions::GOLDEN, &InvariantField::he(), quad, &eps)?.0)
}

/// Writes the CSV for `target` into `dir` and returns its path.
pub fn emit_plotdata(target: PlotTarget, cfg: &SuiteConfig, dir: &Path) -> Result<PathBuf> {
    let quad = cfg.quadrature_spec();
    let bytes = match target {
        PlotTarget::Profiles => csv_bytes(&profile_rows(400))?,
        PlotTarget::Integrands => csv_bytes(&integrand_rows(&quad, 400)?)?,
        PlotTarget::EpsSweep => csv_bytes(&eps_sweep_rows(&quad)?)?,
    };
    let path = dir.join(target.file_name());
    write_atomic(&path, &bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_rejects_unknown_ids() {
        let cfg = SuiteConfig::from_toml_str(
            r#"
            suite = "decomposition"
            seed = 7
            samples = 20
            [quadrature]
            panels = 32
            [tolerances]
            "c_h.refined" = 1e-7
            "#,
        )
        .unwrap();
        assert_eq!(cfg.suite, SuiteId::Decomposition);
        assert_eq!(cfg.quadrature_spec().panels, 32);
        assert_eq!(cfg.perturbations, 100);
        let bad = SuiteConfig::from_toml_str("suite = \"all\"\n[tolerances]\n\"no.such\" = 1e-3\n");
        assert!(matches!(bad, Err(KwError::Config(m)) if m.contains("no.such")));
        let neg = SuiteConfig::from_toml_str("suite = \"all\"\n[tolerances]\n\"c_h.refined\" = 0.0\n");
        assert!(neg.is_err());
        assert!(SuiteConfig::from_toml_str("suite = \"bogus\"\n").is_err());
        assert!(SuiteConfig::from_toml_str("suite = \"all\"\nextra = 1\n").is_err());
    }

    #[test]
    fn registry_covers_dynamic_ids() {
        let ids = known_check_ids();
        assert!(ids.contains("identity.bulk_boundary"));
        assert!(ids.contains("chain.total"));
        assert!(ids.iter().any(|i| i.starts_with("eigen.")));
        assert!(ids.iter().any(|i| i.starts_with("star_table.")));
    }

    #[test]
    fn algebra_suite_passes_and_ids_are_known() {
        let cfg = SuiteConfig { suite: SuiteId::Algebra, model_points: 50, ..SuiteConfig::default() };
        let r = run_suite(&cfg).unwrap();
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
        let ids = known_check_ids();
        assert!(r.checks.iter().all(|c| ids.contains(&c.check_id)));
    }

    #[test]
    fn tolerance_override_regrades() {
        let mut cfg = SuiteConfig { suite: SuiteId::Models, model_points: 20, ..SuiteConfig::default() };
        cfg.set_tolerance("models.scaling.he_slope", 1e-9).unwrap();
        let r = run_suite(&cfg).unwrap();
        let c = r.get("models.scaling.he_slope").unwrap();
        assert_eq!(c.tolerance, 1e-9);
        assert_eq!(c.status, Status::Fail);
        assert_eq!(r.exit_code(), 1);
        let ids = known_check_ids();
        assert!(r.checks.iter().all(|c| ids.contains(&c.check_id)), "{:?}", r.checks.iter().map(|c| &c.check_id).collect::<Vec<_>>());
    }

    #[test]
    fn decomposition_suite_small() {
        let cfg = SuiteConfig { suite: SuiteId::Decomposition, samples: 50, ..SuiteConfig::default() };
        let r = run_suite(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.to_json().unwrap(), run_suite(&cfg).unwrap().to_json().unwrap());
    }

    #[test]
    fn atomic_write_and_plot_targets() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SuiteConfig::default();
        let p = emit_plotdata(PlotTarget::Profiles, &cfg, dir.path()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("y,a,b,b_times_y,a_alternate\n"));
        let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!((first[3] - 1.0).abs() < 1e-6);
        assert!("nope".parse::<PlotTarget>().is_err());
        assert!(write_atomic(Path::new("/proc/definitely/not/here.csv"), b"x").is_err());
    }
}
