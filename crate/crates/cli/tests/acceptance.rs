//! End-to-end acceptance run of the `kwlab` binary with the committed config.
//! Prints one PASS/FAIL line per criterion and fails if any criterion fails.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use kwlab_core::suite::known_check_ids;
use serde_json::Value;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.cfg")
}

fn kwlab(dir: &Path, args: &[&str]) -> (Output, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_kwlab"))
        .current_dir(dir)
        .arg("--config")
        .arg(config())
        .args(args)
        .output()
        .expect("spawn kwlab");
    (out, start.elapsed())
}

struct Report {
    checks: Vec<Value>,
}

impl Report {
    fn load(path: &Path) -> Self {
        let v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
        Self {
            checks: v["checks"].as_array().unwrap().clone(),
        }
    }

    fn matching(&self, prefixes: &[&str]) -> Vec<&Value> {
        self.checks
            .iter()
            .filter(|c| {
                let id = c["check_id"].as_str().unwrap();
                prefixes.iter().any(|p| match p.strip_suffix('*') {
                    Some(stem) => id.starts_with(stem),
                    None => id == *p,
                })
            })
            .collect()
    }

    fn get(&self, id: &str) -> Option<&Value> {
        self.checks.iter().find(|c| c["check_id"] == id)
    }
}

#[derive(Default)]
struct Outcome {
    ok: bool,
    detail: String,
}

/// Every selected check passes (informational records are ignored but must exist).
fn all_pass(report: &Report, prefixes: &[&str], min_count: usize) -> Outcome {
    let sel = report.matching(prefixes);
    let failing: Vec<&str> = sel
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["check_id"].as_str().unwrap())
        .collect();
    let ok = sel.len() >= min_count && failing.is_empty();
    let detail = if failing.is_empty() {
        format!("{} checks", sel.len())
    } else {
        format!("failing: {}", failing.join(", "))
    };
    Outcome { ok, detail }
}

/// The check exists, passes, and was graded at a tolerance no looser than `max_tol`.
fn at_tolerance(report: &Report, id: &str, max_tol: f64) -> Result<f64, String> {
    let c = report.get(id).ok_or_else(|| format!("{id} missing"))?;
    let tol = c["tolerance"].as_f64().unwrap();
    if c["status"] != "pass" {
        return Err(format!("{id} = {} failed", c["computed"]));
    }
    if tol > max_tol {
        return Err(format!("{id} graded at {tol:e} > {max_tol:e}"));
    }
    Ok(c["computed"].as_f64().unwrap())
}

fn combine(base: Outcome, limits: &[(&str, f64)], report: &Report) -> Outcome {
    let mut out = base;
    for (id, tol) in limits {
        match at_tolerance(report, id, *tol) {
            Ok(v) => out.detail.push_str(&format!("; {id} {v:.3e}")),
            Err(e) => {
                out.ok = false;
                out.detail.push_str(&format!("; {e}"));
            }
        }
    }
    out
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let run_a = dir.path().join("run-a.json");
    let run_b = dir.path().join("run-b.json");

    let (first, full_time) = kwlab(dir.path(), &["--out", run_a.to_str().unwrap(), "verify"]);
    assert!(run_a.exists(), "no report written: {}", String::from_utf8_lossy(&first.stderr));
    let (second, _) = kwlab(dir.path(), &["--out", run_b.to_str().unwrap(), "verify"]);
    let report = Report::load(&run_a);

    let models_path = dir.path().join("models.json");
    let (models_run, models_time) = kwlab(dir.path(), &["--out", models_path.to_str().unwrap(), "verify", "--suite", "models"]);
    let decomp_path = dir.path().join("decomposition.json");
    let (decomp_run, decomp_time) = kwlab(dir.path(), &["--out", decomp_path.to_str().unwrap(), "verify", "--suite", "decomposition"]);
    let flipped_path = dir.path().join("flipped.json");
    let (flipped, _) = kwlab(
        dir.path(),
        &["--inject-hodge-flip", "--out", flipped_path.to_str().unwrap(), "verify", "--suite", "models"],
    );

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    let mut c1 = combine(
        all_pass(&report, &["models.nahm_pole.residual", "models.nahm_singular.residual", "models.he.residual"], 3),
        &[
            ("models.nahm_pole.residual", 1e-12),
            ("models.nahm_singular.residual", 1e-10),
            ("models.he.residual", 1e-10),
        ],
        &report,
    );
    c1.ok &= models_run.status.code() == Some(0) && models_time < Duration::from_secs(10);
    c1.detail.push_str(&format!("; models suite {:.2}s", models_time.as_secs_f64()));
    results.push((1, "model residuals", c1));

    let mut c2 = all_pass(&report, &["calibrate", "calibrate.unique", "ricci"], 3);
    if let Some(u) = report.get("calibrate.unique") {
        c2.ok &= u["computed"].as_f64() == Some(1.0);
    }
    results.push((2, "convention calibration", c2));

    let mut c3 = all_pass(&report, &["decomp.*", "eigen.*", "star_table.*"], 30);
    for id in ["decomp.suite.pure_equality_failures", "decomp.suite.mixed_violations"] {
        c3 = combine(c3, &[(id, 0.0)], &report);
    }
    c3.ok &= decomp_run.status.code() == Some(0) && decomp_time < Duration::from_secs(30);
    c3.detail.push_str(&format!("; decomposition suite {:.2}s", decomp_time.as_secs_f64()));
    results.push((3, "decomposition suite", c3));

    let mut c4 = combine(all_pass(&report, &["identity.bulk_boundary"], 1), &[("identity.bulk_boundary", 1e-6)], &report);
    let budget = report
        .get("identity.bulk_boundary")
        .and_then(|c| c["note"].as_str())
        .is_some_and(|n| n.contains("error budget"));
    c4.ok &= budget;
    results.push((4, "energy identity at eps 0.05", c4));

    let c5 = combine(
        all_pass(&report, &["identity.finite_energy", "identity.divergence_limit.*"], 4),
        &[("identity.finite_energy", 1e-6), ("identity.divergence_limit.phi_slope", 0.05), ("identity.divergence_limit.boundary_slope", 0.05)],
        &report,
    );
    results.push((5, "C0 consistency and 1/eps divergence", c5));

    let c6 = combine(all_pass(&report, &["c_h.*"], 2), &[("c_h.refined", 1e-8), ("c_h.envelope", f64::INFINITY)], &report);
    results.push((6, "C_H finite and stable", c6));

    let mut c7 = all_pass(&report, &["bound.*", "identity.refined_bound"], 5);
    if let Some(s) = report.get("bound.strict_slack") {
        c7.ok &= s["computed"].as_f64().unwrap() > 0.0;
    }
    results.push((7, "energy bound instance", c7));

    let c8 = all_pass(&report, &["chain.*"], 10);
    results.push((8, "perturbation inequality chain", c8));

    let c9 = combine(
        all_pass(&report, &["solver.*"], 7),
        &[
            ("solver.ivp", 1e-6),
            ("solver.shoot", 1e-4),
            ("solver.series_pole", 1e-10),
            ("solver.series_linear", 1e-10),
            ("solver.eigenvalue", 1e-8),
        ],
        &report,
    );
    results.push((9, "reduced solver", c9));

    let c10 = combine(all_pass(&report, &["charge.*"], 3), &[("charge.he", 1e-8), ("charge.he_alternate", 1e-8)], &report);
    results.push((10, "topological charge", c10));

    let c11 = combine(all_pass(&report, &["models.scaling.*"], 3), &[("models.scaling.he_slope", 0.1)], &report);
    results.push((11, "scaling limits", c11));

    let identical = std::fs::read(&run_a).unwrap() == std::fs::read(&run_b).unwrap();
    let flipped_report = flipped_path.exists().then(|| Report::load(&flipped_path));
    let control_fails = flipped.status.code() == Some(1)
        && flipped_report.as_ref().and_then(|r| r.get("calibrate")).is_some_and(|c| c["status"] == "fail");
    let known = known_check_ids();
    let unknown: Vec<&str> = report
        .checks
        .iter()
        .map(|c| c["check_id"].as_str().unwrap())
        .filter(|id| !known.contains(*id))
        .collect();
    let c12 = Outcome {
        ok: first.status.code() == Some(0)
            && second.status.code() == Some(0)
            && identical
            && control_fails
            && unknown.is_empty()
            && full_time < Duration::from_secs(300),
        detail: format!(
            "exit {:?}/{:?}, identical json {identical}, negative control exit {:?}, unregistered ids {unknown:?}, full suite {:.1}s",
            first.status.code(),
            second.status.code(),
            flipped.status.code(),
            full_time.as_secs_f64()
        ),
    };
    results.push((12, "determinism and interfaces", c12));

    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for (n, name, o) in &results {
        let tag = if o.ok { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {n:02} {tag} {name}: {}", o.detail).unwrap();
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.ok).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
