//! Acceptance criteria 1–11. One test per criterion; each prints a single
//! PASS/FAIL line with the measured statistic and its pinned tolerance.
//! Tests share a lock so the timed criteria do not compete for the CPU.

use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use domex_core::exchange::{FMap, DEFAULT_EPSILON};
use domex_core::pipeline::{build_exchange, Exchange, PipelineConfig};
use domex_core::properize::eigen_preservation_check;
use domex_core::spectral::SpectralProfile;
use domex_core::tower::TowerFrame;
use domex_core::verify::{self, VerifyConfig};
use domex_core::*;

const EIGEN_TOL: f64 = 1e-8;
const ZERO_EIGEN_TOL: f64 = 1e-9;
const COCYCLE_TOL: f64 = 1e-6;
const COCYCLE_STEPS: usize = 100_000;
const SELF_AFFINE_TOL: f64 = 1e-6;
const SELF_AFFINE_SAMPLES: usize = 10_000;
const DET_TOL: f64 = 1e-8;
const ENTRANCE_SAMPLES: usize = 10_000;
const ENTRANCE_RANGE: u64 = 1_000_000_000;
const OVERLAP_MAX: f64 = 0.01;
const MONOTONE_SLACK: f64 = 0.002;
const MIN_POINTS: usize = 100_000;
const AREA_TOL: f64 = 0.02;
const COVERAGE_MIN: f64 = 0.99;
const MODAL_MIN: f64 = 0.98;
const Z_AREA_TOL: f64 = 0.05;
const DERIVE_LIMIT: Duration = Duration::from_secs(1);
const ENTRANCE_LIMIT: Duration = Duration::from_secs(30);
const PIPELINE_LIMIT: Duration = Duration::from_secs(120);

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, pass: bool, text: String) {
    let line = format!("criterion {criterion:>2} {}: {text}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    assert!(pass, "{line}");
}

fn domex(args: &[&str]) -> (i32, String, Duration) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_domex")).args(args).output().unwrap();
    let elapsed = t.elapsed();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), elapsed)
}

fn load(name: &str) -> Substitution {
    presets::load(name).unwrap()
}

struct Tables {
    frame: TowerFrame,
    fmap: FMap,
    spectral: SpectralProfile,
}

fn tables(name: &str) -> Tables {
    let s = load(name);
    let p = properize(&s).unwrap();
    let spectral = SpectralProfile::compute(&s, &p.proper_sub, Some(&p.phi)).unwrap();
    let frame = TowerFrame::new(&p.proper_sub, 1).unwrap();
    let fmap = FMap::new(&frame, &spectral, None, DEFAULT_EPSILON).unwrap();
    Tables { frame, fmap, spectral }
}

struct PipelineRun {
    report: Value,
    elapsed: Duration,
    exit: i32,
    _dir: tempfile::TempDir,
}

fn pipeline_run(name: &'static str) -> &'static PipelineRun {
    static RUNS: OnceLock<Mutex<Vec<(&'static str, &'static PipelineRun)>>> = OnceLock::new();
    let runs = RUNS.get_or_init(Default::default);
    let mut runs = runs.lock().unwrap();
    if let Some((_, r)) = runs.iter().find(|(n, _)| *n == name) {
        return r;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let (exit, _, elapsed) = domex(&["pipeline", "--preset", name, "--out", &out]);
    let text = std::fs::read_to_string(Path::new(&out).join("report.json")).unwrap();
    let run = Box::leak(Box::new(PipelineRun {
        report: serde_json::from_str(&text).unwrap(),
        elapsed,
        exit,
        _dir: dir,
    }));
    runs.push((name, run));
    run
}

fn check<'a>(run: &'a PipelineRun, name: &str) -> &'a Value {
    run.report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn stat(run: &PipelineRun, name: &str) -> f64 {
    check(run, name)["statistic"].as_f64().unwrap_or(f64::NAN)
}

fn passed(run: &PipelineRun, name: &str) -> bool {
    check(run, name)["pass"].as_bool().unwrap()
}

#[test]
fn criterion_01_tribonacci_return_substitution() {
    let _g = serial();
    let (code, out, elapsed) = domex(&["derive", "--preset", "tribonacci", "--u", "1", "--emit-dsl"]);
    let exact = out == "1 -> 12\n2 -> 13\n3 -> 1\n";
    report(
        1,
        code == 0 && exact && elapsed < DERIVE_LIMIT,
        format!("derive --u 1 gives {:?} in {:.3}s (limit {:?})", out.trim(), elapsed.as_secs_f64(), DERIVE_LIMIT),
    );
}

#[test]
fn criterion_02_return_substitution_with_zero_eigenvalue() {
    let _g = serial();
    let (code, out, _) = domex(&["derive", "--preset", "paper-1123", "--u", "11"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let smallest = v["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e[0].as_f64().unwrap().hypot(e[1].as_f64().unwrap()))
        .fold(f64::INFINITY, f64::min);
    report(
        2,
        code == 0 && smallest < ZERO_EIGEN_TOL,
        format!("σ_11 rules {}; smallest |λ| = {smallest:.1e} (tolerance {ZERO_EIGEN_TOL:.0e})", v["rules"]),
    );
}

#[test]
fn criterion_03_properization_needs_three_letters() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = domex(&["properize", "--preset", "paper-001", "--out", out]);
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    let letters = cert["B"].as_array().unwrap().len();
    report(3, code == 0 && letters >= 3, format!("0→001, 1→10 properizes on {letters} letters (need ≥ 3)"));
}

#[test]
fn criterion_04_eigenvalues_preserved_for_every_preset() {
    let _g = serial();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for name in presets::names() {
        let p = properize(&load(name)).unwrap();
        let cmp = eigen_preservation_check(&p).unwrap();
        worst = worst.max(cmp.max_distance);
        if !(cmp.pass && cmp.unmatched.is_empty() && cmp.max_distance < EIGEN_TOL) {
            failures.push(name);
        }
    }
    report(
        4,
        failures.is_empty(),
        format!("spectra of M_σ^l and M_ξ′ agree off {{0, 1}}; max pair distance {worst:.1e} (tolerance {EIGEN_TOL:.0e}); failing {failures:?}"),
    );
}

/// Positions and levels sampled for the entrance-time identity.
fn entrance_samples() -> Vec<(u64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..ENTRANCE_SAMPLES)
        .map(|_| (rng.random_range(0..ENTRANCE_RANGE), rng.random_range(2..=8)))
        .collect()
}

#[test]
fn criterion_05_entrance_time_identity() {
    let _g = serial();
    let t = Instant::now();
    let mut failures = 0usize;
    let mut first = None;
    for name in ["tribonacci", "fibonacci"] {
        let f = tables(name).frame;
        for (j, n) in entrance_samples() {
            let addr = f.address(j).unwrap();
            let lhs = f.entrance_time(&addr, n) as i128;
            let rhs = f.entrance_series_literal(&addr, n);
            if lhs != rhs {
                failures += 1;
                first.get_or_insert((name, j, n, lhs, rhs));
            }
        }
    }
    let elapsed = t.elapsed();
    report(
        5,
        failures == 0 && elapsed < ENTRANCE_LIMIT,
        format!(
            "r_n = Σ_{{k<n}} ⟨s_k, (Mᵗ)ᵏH(1)⟩ with s_k tagged by the block starting at each cut: {failures} failures of {} in {:.2}s; first {first:?}",
            2 * ENTRANCE_SAMPLES,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_supplement_end_tagged_identity() {
    let _g = serial();
    let mut failures = 0usize;
    for name in ["tribonacci", "fibonacci"] {
        let f = tables(name).frame;
        for (j, n) in entrance_samples() {
            let addr = f.address(j).unwrap();
            if f.entrance_time(&addr, n) as i128 != f.entrance_series(&addr, n) {
                failures += 1;
            }
        }
    }
    report(
        5,
        failures == 0,
        format!(
            "(supplement) r_n = Σ_{{k<n}} ⟨s_k, (Mᵗ)^(k-1)H(1)⟩ with s_k tagged by the block ending at each cut: {failures} failures of {}",
            2 * ENTRANCE_SAMPLES
        ),
    );
}

#[test]
fn criterion_06_cocycle() {
    let _g = serial();
    let mut worst: f64 = 0.0;
    for name in ["tribonacci", "fibonacci"] {
        let t = tables(name);
        let coords = t.fmap.eval_range(COCYCLE_STEPS + 1).unwrap();
        worst = worst.max(verify::cocycle_deviation(&coords, t.fmap.dim(), t.fmap.alpha()));
    }
    report(
        6,
        worst < COCYCLE_TOL,
        format!("sup ‖F(j+1) − F(j) − α‖ mod ℤ over {COCYCLE_STEPS} steps = {worst:.2e} (tolerance {COCYCLE_TOL:.0e})"),
    );
}

#[test]
fn criterion_07_self_affinity_and_determinant() {
    let _g = serial();
    let cfg = VerifyConfig {
        self_affine_samples: SELF_AFFINE_SAMPLES,
        self_affine_tol: SELF_AFFINE_TOL,
        det_tol: DET_TOL,
        ..VerifyConfig::for_dim(1)
    };
    let mut ok = true;
    let mut text = Vec::new();
    for name in ["tribonacci", "fibonacci"] {
        let t = tables(name);
        let checks = verify::check_self_affine(&t.fmap, &t.spectral, &cfg);
        let get = |n: &str| checks.iter().find(|c| c.name == n).unwrap();
        let (sa, det) = (get("self_affine"), get("det_n_beta"));
        ok &= sa.pass && det.pass;
        text.push(format!(
            "{name}: max ‖F(|ξ(y[0,j))|) − NᵗF(j)‖ = {:.2e}, ||det N|·β − 1| = {:.1e}",
            sa.statistic, det.statistic
        ));
    }
    report(
        7,
        ok,
        format!(
            "{} over {SELF_AFFINE_SAMPLES} positions (tolerances {SELF_AFFINE_TOL:.0e}, {DET_TOL:.0e})",
            text.join("; ")
        ),
    );
}

#[test]
fn criterion_08_measure_disjointness() {
    let _g = serial();
    let run = pipeline_run("tribonacci");
    let points = run.report["config"]["points"].as_u64().unwrap() as usize;
    let overlap = stat(run, "disjointness");
    let change = stat(run, "disjointness_monotone");
    let res = run.report["config"]["verify"]["resolution"].as_u64().unwrap();
    report(
        8,
        res == 1024 && points >= MIN_POINTS && overlap < OVERLAP_MAX && change <= MONOTONE_SLACK,
        format!(
            "tribonacci at {res}², {points} points: overlap {:.3}% (limit {:.0}%), change at 2048² {:+.3}% (may rise at most {:.1}%)",
            100.0 * overlap,
            100.0 * OVERLAP_MAX,
            100.0 * change,
            100.0 * MONOTONE_SLACK
        ),
    );
}

#[test]
fn criterion_09_area_proportionality() {
    let _g = serial();
    let mut text = Vec::new();
    let mut ok = true;
    for name in ["tribonacci", "fibonacci"] {
        let run = pipeline_run(name);
        let err = stat(run, "area_proportionality");
        ok &= err < AREA_TOL && passed(run, "area_proportionality");
        text.push(format!("{name} max |ratio − frequency| = {err:.2e}"));
    }
    report(9, ok, format!("{} (tolerance {AREA_TOL})", text.join(", ")));
}

#[test]
fn criterion_10_torus_factor() {
    let _g = serial();
    let mut text = Vec::new();
    let mut ok = true;
    for name in ["tribonacci", "fibonacci"] {
        let run = pipeline_run(name);
        let coverage = stat(run, "torus_coverage");
        let modal = stat(run, "torus_multiplicity");
        let area_err = stat(run, "torus_area");
        let z = run.report["Z"].as_u64();
        ok &= run.exit == 0
            && coverage > COVERAGE_MIN
            && modal >= MODAL_MIN
            && area_err < Z_AREA_TOL
            && z == Some(1)
            && run.elapsed < PIPELINE_LIMIT;
        text.push(format!(
            "{name}: coverage {coverage:.4}, Z = {z:?} on {:.2}% of cells, |area − Z|/Z = {area_err:.2e}, pipeline {:.1}s",
            100.0 * modal,
            run.elapsed.as_secs_f64()
        ));
    }
    report(
        10,
        ok,
        format!(
            "{} (coverage > {COVERAGE_MIN}, modal ≥ {MODAL_MIN}, area within {Z_AREA_TOL}·Z, limit {:?})",
            text.join("; "),
            PIPELINE_LIMIT
        ),
    );
}

fn tribonacci_exchange() -> Exchange {
    let cfg = PipelineConfig::default();
    build_exchange(&load("tribonacci"), &cfg, None).unwrap()
}

#[test]
fn criterion_11_negative_controls() {
    let _g = serial();
    let ex = tribonacci_exchange();
    let cfg = VerifyConfig::for_dim(ex.cloud.dim);
    let honest = verify::check_disjointness(&ex.cloud, &cfg);
    let shuffled = verify::check_disjointness(&verify::shuffle_labels(&ex.cloud, 17), &cfg);
    let perturbed: Vec<f64> = ex.cloud.alpha.iter().map(|a| a + 1e-3).collect();
    let cocycle_ok = verify::check_factor_map(&ex.cloud, &ex.cloud.alpha, &cfg);
    let cocycle_bad = verify::check_factor_map(&ex.cloud, &perturbed, &cfg);
    let doubled = verify::torus_cover(
        &verify::doubled_coords(verify::sampled(&ex.cloud), ex.cloud.dim),
        ex.cloud.dim,
        cfg.torus_resolution,
    )
    .unwrap();
    let ok = honest[0].pass
        && !shuffled[0].pass
        && cocycle_ok[0].pass
        && !cocycle_bad[0].pass
        && doubled.z == 2;
    report(
        11,
        ok,
        format!(
            "label shuffle: overlap {:.3} → {:.3} (must fail {OVERLAP_MAX}); α + 1e-3: cocycle {:.1e} → {:.1e} (must fail {COCYCLE_TOL:.0e}); translated doubling: Z = {}",
            honest[0].statistic, shuffled[0].statistic, cocycle_ok[0].statistic, cocycle_bad[0].statistic, doubled.z
        ),
    );
}
