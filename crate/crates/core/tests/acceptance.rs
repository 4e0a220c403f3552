//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//! The process exits 0 either way so that a failed criterion stays visible
//! without breaking the workspace test run; set `ACCEPTANCE_STRICT=1` to turn
//! any failure into a non-zero exit.

use std::path::Path;
use std::time::Instant;

use blindsr2d::estimation::least_squares_lifted;
use blindsr2d::experiment::{
    run_experiment, ExperimentConfig, Mode, RunOutcome, ShiftSetting, RESULT_FILE,
};
use blindsr2d::grid::{detect_support, solve_grid, GridSpec};
use blindsr2d::linalg::{self, CMat};
use blindsr2d::localization::{build_dual_polynomial, lifted_system};
use blindsr2d::model::{
    build_lifted_dictionary, chi_adjoint, chi_forward, generate_random_instance,
    instance_with_shifts, synthesize_lifted, synthesize_observation, Dimensions, MatrixTuple,
    ModelInstance,
};
use blindsr2d::solver::{SolveStatus, SolverConfig};
use blindsr2d::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG1_TRUTH: (f64, f64) = (0.24, 0.52);
const PEAK_TOL: f64 = 1e-3;
const SUP_SLACK: f64 = 1e-4;
const SUP_GRID: usize = 2048;
const INPUT_TOL: f64 = 1e-2;
const FIG1_BUDGET_S: f64 = 2.0 * 3600.0;
const FIG2_SRF: [f64; 5] = [4.0, 8.0, 12.0, 16.0, 20.0];
const FIG2_SLACK: f64 = 0.5;
const FIG2_BUDGET_S: f64 = 30.0 * 60.0;
const SYNTH_TOL: f64 = 1e-9;
const ADJOINT_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-5;
const INTERP_TOL: f64 = 1e-3;
const STRICT_MARGIN: f64 = 1e-3;
const RANK_RATIO: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-6;

struct Report {
    failed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn torus_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d = |x: f64, y: f64| {
        let t = (x - y).rem_euclid(1.0);
        t.min(1.0 - t)
    };
    d(a.0, b.0).hypot(d(a.1, b.1))
}

fn rel_err(est: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

fn run_in(cfg: &ExperimentConfig, dir: &Path) -> RunOutcome {
    let mut cfg = cfg.clone();
    cfg.out = dir.to_path_buf();
    run_experiment(&cfg).expect("run")
}

fn fig1(report: &mut Report, tmp: &Path) -> Option<f64> {
    let cfg = ExperimentConfig::preset("fig1").unwrap();
    let inst = cfg.instance().unwrap();
    let start = Instant::now();
    let out = run_in(&cfg, &tmp.join("fig1"));
    let wall = start.elapsed().as_secs_f64();
    let Some(dual) = out.result.dual.as_ref() else {
        report.line("1 fig1 localization", false, "no dual result".into());
        return None;
    };
    let d = inst.dims.clone();
    let optimal = dual.solve.status == SolveStatus::Optimal;

    // 1: one peak per input next to the truth, bounded dual polynomial
    let poly = build_dual_polynomial(&dual.q, &inst.bases, &d).unwrap();
    let sup = poly
        .max_surface(SUP_GRID)
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max);
    let mut ok = optimal && sup <= 1.0 + SUP_SLACK && wall <= FIG1_BUDGET_S;
    let mut detail = format!("sup {sup:.7}, {wall:.0} s");
    for (j, set) in dual.scan.per_input.iter().enumerate() {
        let dist = set
            .peaks
            .iter()
            .map(|p| torus_dist((p.shift.tau, p.shift.nu), FIG1_TRUTH))
            .fold(f64::INFINITY, f64::min);
        ok &= set.peaks.len() == 1 && dist <= PEAK_TOL;
        detail += &format!(
            ", input {j}: {} peak(s) at distance {dist:.2e}",
            set.peaks.len()
        );
    }
    report.line("1 fig1 localization", ok, detail);

    // 2: input magnitudes
    let errs: Vec<f64> = inst
        .bases
        .iter()
        .zip(&inst.orientations)
        .zip(&dual.recovery.x_abs)
        .map(|((b, h), est)| {
            let truth: Vec<f64> = linalg::mat_vec(b.entries.as_ref(), h)
                .iter()
                .map(|v| v.norm())
                .collect();
            rel_err(est, &truth)
        })
        .collect();
    report.line(
        "2 fig1 input recovery",
        errs.iter().all(|e| *e <= INPUT_TOL),
        format!(
            "relative errors {}",
            errs.iter()
                .map(|e| format!("{e:.2e}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );

    // 6: dual objective against the value of the true atoms
    let dual_value: f64 = dual
        .q
        .iter()
        .zip(&inst.y)
        .map(|(q, y)| (q.conj() * y).re)
        .sum();
    let primal: f64 = inst
        .orientations
        .iter()
        .map(|h| {
            let hn = linalg::vec_norm(h);
            inst.amplitudes.iter().map(|b| b.norm() * hn).sum::<f64>()
        })
        .sum();
    let sum_b: f64 = inst.amplitudes.iter().map(|b| b.norm()).sum();
    let gap = (dual_value - primal).abs();
    report.line(
        "6 fig1 duality gap",
        gap <= GAP_TOL * sum_b,
        format!(
            "|{dual_value:.8} - {primal:.8}| = {gap:.2e}, bound {:.2e}",
            GAP_TOL * sum_b
        ),
    );

    // 7: certificate conditions
    match &dual.certificate {
        Some(c) => report.line(
            "7 fig1 certificate",
            c.interp_error <= INTERP_TOL
                && c.max_norm_outside <= 1.0 - STRICT_MARGIN
                && c.singular_ratio > RANK_RATIO,
            format!(
                "interp {:.2e}, max outside {:.5}, singular ratio {:.3e}",
                c.interp_error, c.max_norm_outside, c.singular_ratio
            ),
        ),
        None => report.line("7 fig1 certificate", false, "not computed".into()),
    }
    out.manifest.dual_solve_s
}

fn fig2(report: &mut Report, tmp: &Path) {
    let mut cfg = ExperimentConfig::preset("fig2").unwrap();
    cfg.srf = FIG2_SRF.to_vec();
    let start = Instant::now();
    let out = run_in(&cfg, &tmp.join("fig2"));
    let wall = start.elapsed().as_secs_f64();
    let l = cfg.dims().unwrap().l() as f64;
    let grid = out.result.grid.as_ref().expect("grid result");
    let mut ok = wall <= FIG2_BUDGET_S && grid.entries.len() == FIG2_SRF.len();
    let mut detail = String::new();
    for e in &grid.entries {
        let bound = l * 2f64.sqrt() / e.srf * (1.0 + FIG2_SLACK);
        ok &= e.error <= bound;
        detail += &format!("SRF {}: {:.4} (bound {:.3}); ", e.srf, e.error, bound);
    }
    let first = grid.entries.first().map_or(f64::NAN, |e| e.error);
    let last = grid.entries.last().map_or(f64::NAN, |e| e.error);
    ok &= last < first;
    detail += &format!(
        "trend {last:.4} < {first:.4}: {}, {wall:.0} s",
        last < first
    );
    report.line("3 fig2 error vs SRF", ok, detail);
}

fn random_dims(rng: &mut ChaCha8Rng) -> Dimensions {
    let n = rng.gen_range(2..=7);
    let s = rng.gen_range(1..=2);
    let ni = rng.gen_range(1..=2);
    let k = (0..ni).map(|_| rng.gen_range(1..=3)).collect();
    Dimensions::new(n, k, s).unwrap()
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

fn synthesis(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = random_dims(&mut rng);
        let inst = generate_random_instance(&d, rng.gen(), 0.0).unwrap();
        let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
        let a = synthesize_observation(&inst).unwrap();
        let b = synthesize_lifted(&inst, &dict).unwrap();
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
        worst = worst.max((num / a.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt());
    }
    report.line(
        "4 direct vs lifted synthesis",
        worst <= SYNTH_TOL,
        format!("worst relative difference {worst:.2e} over 20"),
    );
}

fn adjoint(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = random_dims(&mut rng);
        let inst = generate_random_instance(&d, rng.gen(), 0.0).unwrap();
        let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
        let b = MatrixTuple {
            parts: d
                .k()
                .iter()
                .map(|&k| CMat::from_fn(k, d.lifted_len(), |_, _| random_c(&mut rng)))
                .collect(),
        };
        let q: Vec<C64> = (0..d.l()).map(|_| random_c(&mut rng)).collect();
        let lhs: f64 = chi_forward(&b, &dict)
            .unwrap()
            .iter()
            .zip(&q)
            .map(|(x, y)| (y.conj() * x).re)
            .sum();
        let rhs = b.re_inner(&chi_adjoint(&q, &dict).unwrap());
        worst = worst.max((lhs - rhs).abs() / (b.norm() * linalg::vec_norm(&q)));
    }
    report.line(
        "5 adjoint identity",
        worst <= ADJOINT_TOL,
        format!("worst relative defect {worst:.2e} over 50"),
    );
}

/// Smallest-residual single atom over every node of the grid.
fn brute_force(inst: &ModelInstance, grid: &GridSpec) -> ((usize, usize), Vec<C64>) {
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims).unwrap();
    let mut best = (f64::INFINITY, (0, 0), Vec::new());
    for r in 0..grid.g {
        for c in 0..grid.g {
            let a = lifted_system(&[grid.node(r, c)], &dict);
            let (x, _) = linalg::lstsq_min_norm(a.as_ref(), &inst.y, 1e-12).unwrap();
            let res: f64 = linalg::mat_vec(a.as_ref(), &x)
                .iter()
                .zip(&inst.y)
                .map(|(u, v)| (u - v).norm_sqr())
                .sum();
            if res < best.0 {
                best = (res, (r, c), x);
            }
        }
    }
    (best.1, best.2)
}

fn small_oracle(report: &mut Report) {
    let d = Dimensions::new(2, vec![1], 1).unwrap();
    let grid = GridSpec::new(d.l()).unwrap();
    let mut ok = true;
    let mut worst = 0.0f64;
    for (seed, node) in [(11u64, (3usize, 1usize)), (12, (0, 4)), (13, (2, 2))] {
        let inst = instance_with_shifts(&d, seed, &[grid.node(node.0, node.1)]).unwrap();
        let (best, coef) = brute_force(&inst, &grid);
        let rep = solve_grid(&inst.y, &inst.bases, &d, &grid, &SolverConfig::nuclear()).unwrap();
        let sup = detect_support(
            rep.tuple().unwrap(),
            d.n(),
            &grid,
            Some(1),
            0.5 / d.n() as f64,
        )
        .unwrap();
        let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
        let fit = least_squares_lifted(&sup.shifts, &dict, &inst.y).unwrap();
        let diff = (fit.coeffs[0][0][0] - coef[0]).norm();
        worst = worst.max(diff);
        ok &= rep.status == SolveStatus::Optimal
            && best == node
            && sup.nodes == vec![best]
            && diff <= ORACLE_TOL;
    }
    report.line(
        "8 small-instance oracle",
        ok,
        format!("support exact, worst product difference {worst:.2e}"),
    );
}

fn determinism(report: &mut Report, tmp: &Path) {
    let cfg = ExperimentConfig {
        mode: Mode::Both,
        n: 3,
        k: vec![2, 1],
        s: 1,
        seed: 5,
        shifts: ShiftSetting::Explicit(vec![[0.35, 0.8]]),
        srf: vec![2.0, 5.0],
        scan_grid: 256,
        surface_csv_grid: 16,
        ..ExperimentConfig::default()
    };
    let a = run_in(&cfg, &tmp.join("det_a"));
    let replay = ExperimentConfig::from_file(&a.out_dir.join("manifest.json")).unwrap();
    let b = run_in(&replay, &tmp.join("det_b"));
    let read = |o: &RunOutcome| std::fs::read(o.out_dir.join(RESULT_FILE)).unwrap();
    let same = read(&a) == read(&b) && a.result == b.result;
    report.line(
        "9 determinism",
        same,
        format!("replayed manifest, result.json identical: {same}"),
    );
}

fn relative_timing(report: &mut Report, tmp: &Path, dual_s: Option<f64>) {
    let mut cfg = ExperimentConfig::preset("fig1").unwrap();
    cfg.mode = Mode::Grid;
    let out = run_in(&cfg, &tmp.join("fig1_grid"));
    match (dual_s, out.manifest.grid_solve_s) {
        (Some(d), Some(g)) => report.line(
            "timing grid faster than dual",
            g < d,
            format!("grid {g:.1} s, dual {d:.1} s"),
        ),
        _ => report.line(
            "timing grid faster than dual",
            false,
            "missing solve times".into(),
        ),
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut report = Report {
        failed: 0,
        total: 0,
    };
    synthesis(&mut report);
    adjoint(&mut report);
    small_oracle(&mut report);
    determinism(&mut report, tmp.path());
    fig2(&mut report, tmp.path());
    let dual_s = fig1(&mut report, tmp.path());
    relative_timing(&mut report, tmp.path(), dual_s);
    println!(
        "acceptance: {} of {} passed",
        report.total - report.failed,
        report.total
    );
    if report.failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
