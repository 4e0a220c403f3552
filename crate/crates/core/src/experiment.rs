//! Experiment runner behind the command-line tool: configuration, both
//! recovery pipelines end to end, pass/fail checks and artifact files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimation::{recover, RecoveryResult};
use crate::grid::{correlation_map, detect_from_map, GridSpec, SupportEstimate};
use crate::localization::{
    build_dual_polynomial, default_suppression_radius, scan_all, verify_certificate,
    CertificateReport, CertificateTolerances, DualPolynomial, PeakScan, DEFAULT_SCAN_GRID,
    DEFAULT_THRESHOLD,
};
use crate::model::{
    build_lifted_dictionary, default_min_separation, generate_random_instance,
    instance_with_shifts, Dimensions, ModelInstance, ShiftPair,
};
use crate::sdp::assemble_dual_sdp;
use crate::solver::{solve_nuclear_ls, solve_sdp, SolveStatus, SolveSummary, SolverConfig};
use crate::{Error, Result, C64};

pub const RESULT_FILE: &str = "result.json";
pub const INSTANCE_FILE: &str = "instance.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SURFACE_FILE: &str = "surface.csv";
pub const PEAKS_FILE: &str = "peaks.csv";
pub const OVERLAY_FILE: &str = "overlay.csv";
pub const OVERLAY_GRID_FILE: &str = "overlay_grid.csv";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const ERROR_CURVE_FILE: &str = "error_vs_srf.csv";

/// Exit status of a run.
pub mod exit {
    pub const OK: i32 = 0;
    /// The pipeline completed but a recovery check failed.
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Dual,
    Grid,
    Both,
}

impl Mode {
    pub fn dual(self) -> bool {
        matches!(self, Mode::Dual | Mode::Both)
    }

    pub fn grid(self) -> bool {
        matches!(self, Mode::Grid | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomShifts {
    Random,
}

/// Either the keyword `"random"` or a list of `[tau, nu]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSetting {
    Random(RandomShifts),
    Explicit(Vec<[f64; 2]>),
}

/// Pass/fail levels of the recovery checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Wrap-around distance between a detected and a true shift.
    pub shift_tol: f64,
    /// Relative error of `|x_hat_j|`.
    pub input_tol: f64,
    /// Allowed excess of `||f_j||` over 1 on the scan grid.
    pub sup_slack: f64,
    /// Gap between the dual objective and the primal value of the truth,
    /// relative to `sum_k |b_k|`.
    pub gap_tol: f64,
    pub interp_tol: f64,
    pub margin: f64,
    pub rank_ratio: f64,
    /// Slack on the grid-resolution bound `L sqrt(2) / SRF`.
    pub srf_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            shift_tol: 1e-3,
            input_tol: 1e-2,
            sup_slack: 1e-4,
            gap_tol: 1e-5,
            interp_tol: 1e-3,
            margin: 1e-3,
            rank_ratio: 1e-8,
            srf_slack: 0.5,
        }
    }
}

/// Flat JSON configuration of a run. Missing fields take the values of the
/// `fig1` preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub k: Vec<usize>,
    /// Number of shifts for random draws; must match an explicit list.
    pub s: usize,
    pub seed: u64,
    pub shifts: ShiftSetting,
    /// Separation of random shifts, default `2.5 / N`.
    pub min_separation: Option<f64>,
    pub srf: Vec<f64>,
    /// Support size used by grid detection, default `S`.
    pub grid_s_hat: Option<usize>,
    /// Choose the grid support size from the correlation gap instead.
    pub auto_support: bool,
    pub scan_grid: usize,
    pub threshold: f64,
    /// Default `0.5 / N`.
    pub suppression_radius: Option<f64>,
    /// Resolution of the surface written to CSV.
    pub surface_csv_grid: usize,
    /// Verify the dual certificate against the ground truth.
    pub certificate: bool,
    pub solver: SolverConfig,
    pub grid_solver: SolverConfig,
    pub thresholds: Thresholds,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Dual,
            n: 7,
            k: vec![1, 1],
            s: 1,
            seed: 0,
            shifts: ShiftSetting::Explicit(vec![[0.24, 0.52]]),
            min_separation: None,
            srf: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            grid_s_hat: None,
            auto_support: false,
            scan_grid: DEFAULT_SCAN_GRID,
            threshold: DEFAULT_THRESHOLD,
            suppression_radius: None,
            surface_csv_grid: 128,
            certificate: true,
            solver: SolverConfig::default(),
            grid_solver: SolverConfig::nuclear(),
            thresholds: Thresholds::default(),
            out: PathBuf::from("out"),
        }
    }
}

pub const PRESETS: &[&str] = &["fig1", "fig2"];

impl ExperimentConfig {
    /// Named parameter sets of the two reference experiments.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig1" => Ok(ExperimentConfig::default()),
            "fig2" => Ok(ExperimentConfig {
                mode: Mode::Grid,
                n: 6,
                k: vec![2, 1],
                s: 1,
                shifts: ShiftSetting::Explicit(vec![[0.92, 0.67]]),
                ..ExperimentConfig::default()
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset {other:?}, expected one of {PRESETS:?}"
            ))),
        }
    }

    /// Reads a configuration file. A run manifest is accepted as well.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let cfg = match value.get("config") {
            Some(c) if value.get("tool").is_some() => c.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(cfg)?)
    }

    /// Applies `BLINDSR2D_OUT` when set.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(out) = get("BLINDSR2D_OUT") {
            if !out.is_empty() {
                self.out = PathBuf::from(out);
            }
        }
    }

    pub fn dims(&self) -> Result<Dimensions> {
        let s = match &self.shifts {
            ShiftSetting::Explicit(list) => list.len(),
            ShiftSetting::Random(_) => self.s,
        };
        Dimensions::new(self.n, self.k.clone(), s)
    }

    pub fn radius(&self) -> f64 {
        self.suppression_radius
            .unwrap_or_else(|| default_suppression_radius(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims()?;
        if let ShiftSetting::Explicit(list) = &self.shifts {
            if list.len() != self.s {
                return Err(Error::InvalidArgument(format!(
                    "{} explicit shifts but s = {}",
                    list.len(),
                    self.s
                )));
            }
            if list.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite shift".into()));
            }
        }
        if self.mode.grid() && self.srf.is_empty() {
            return Err(Error::InvalidArgument(
                "grid mode needs at least one SRF".into(),
            ));
        }
        for &f in &self.srf {
            GridSpec::from_srf(f, dims.l())?;
        }
        if self.scan_grid < 2 * dims.l() {
            return Err(Error::InvalidArgument(format!(
                "scan grid {} below 2L = {}",
                self.scan_grid,
                2 * dims.l()
            )));
        }
        if self.surface_csv_grid < dims.l() {
            return Err(Error::InvalidArgument("surface CSV grid below L".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if !(self.radius() >= 0.0) {
            return Err(Error::InvalidArgument("negative suppression radius".into()));
        }
        if let Some(sep) = self.min_separation {
            if !(0.0..0.5).contains(&sep) {
                return Err(Error::InvalidArgument(format!(
                    "separation {sep} outside [0, 0.5)"
                )));
            }
        }
        self.solver.validate()?;
        self.grid_solver.validate()?;
        Ok(())
    }

    pub fn instance(&self) -> Result<ModelInstance> {
        let dims = self.dims()?;
        match &self.shifts {
            ShiftSetting::Explicit(list) => {
                let shifts: Vec<ShiftPair> =
                    list.iter().map(|[t, v]| ShiftPair::new(*t, *v)).collect();
                instance_with_shifts(&dims, self.seed, &shifts)
            }
            ShiftSetting::Random(_) => generate_random_instance(
                &dims,
                self.seed,
                self.min_separation
                    .unwrap_or_else(|| default_min_separation(self.n)),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Checks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Eq,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Le => value <= threshold,
            Relation::Lt => value < threshold,
            Relation::Ge => value >= threshold,
            Relation::Eq => value == threshold,
        }
    }
}

/// One recovery check: `value relation threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation,
            threshold,
            pass: relation.holds(value, threshold),
        }
    }
}

// ---------------------------------------------------------------------------
// Results

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub solve: SolveSummary,
    pub q: Vec<C64>,
    pub scan: PeakScan,
    pub certificate: Option<CertificateReport>,
    pub recovery: RecoveryResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub srf: f64,
    pub g: usize,
    pub support: SupportEstimate,
    pub recovery: RecoveryResult,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub solve: SolveSummary,
    pub entries: Vec<GridEntry>,
}

/// Content of `result.json`. Contains neither timing nor the output
/// location, so repeated runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub dims: Dimensions,
    pub true_shifts: Vec<ShiftPair>,
    pub dual: Option<DualResult>,
    pub grid: Option<GridResult>,
    pub checks: Vec<Check>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub exit_code: i32,
    pub wall_time_s: f64,
    pub dual_solve_s: Option<f64>,
    pub grid_solve_s: Option<f64>,
    pub artifacts: Vec<String>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub result: RunResult,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

fn write_file(dir: &Path, name: &str, text: &str, written: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(name.to_string());
    Ok(())
}

fn dual_checks(inst: &ModelInstance, d: &DualResult, t: &Thresholds, checks: &mut Vec<Check>) {
    let s = inst.dims.s() as f64;
    checks.push(Check::new(
        "dual.solver_optimal",
        (d.solve.status == SolveStatus::Optimal) as u8 as f64,
        Relation::Eq,
        1.0,
    ));
    checks.push(Check::new(
        "dual.peak_count",
        d.scan.combined.s_hat as f64,
        Relation::Eq,
        s,
    ));
    for (j, ps) in d.scan.per_input.iter().enumerate() {
        checks.push(Check::new(
            format!("dual.peak_count.input{j}"),
            ps.s_hat as f64,
            Relation::Eq,
            s,
        ));
        let worst = inst
            .shifts
            .iter()
            .map(|truth| {
                ps.peaks
                    .iter()
                    .map(|p| p.shift.wrap_dist(truth))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("dual.peak_distance.input{j}"),
            worst,
            Relation::Le,
            t.shift_tol,
        ));
    }
    let sup = d.scan.grid_max.iter().copied().fold(0.0, f64::max);
    checks.push(Check::new(
        "dual.sup_norm",
        sup,
        Relation::Le,
        1.0 + t.sup_slack,
    ));
    // primal value of the truth: sum_j sum_k |b_k| ||h_j||
    let b_sum: f64 = inst.amplitudes.iter().map(|b| b.norm()).sum();
    let h_sum: f64 = inst
        .orientations
        .iter()
        .map(|h| crate::linalg::vec_norm(h))
        .sum();
    checks.push(Check::new(
        "dual.duality_gap",
        (d.solve.objective - b_sum * h_sum).abs() / b_sum,
        Relation::Le,
        t.gap_tol,
    ));
    if let Some(m) = &d.recovery.metrics {
        for (j, e) in m.input_errors.iter().enumerate() {
            checks.push(Check::new(
                format!("dual.input_error.input{j}"),
                *e,
                Relation::Le,
                t.input_tol,
            ));
        }
    }
    if let Some(c) = &d.certificate {
        checks.push(Check::new(
            "dual.certificate.interp",
            c.interp_error,
            Relation::Le,
            t.interp_tol,
        ));
        checks.push(Check::new(
            "dual.certificate.bound",
            c.max_norm,
            Relation::Le,
            1.0 + t.sup_slack,
        ));
        checks.push(Check::new(
            "dual.certificate.strict",
            c.max_norm_outside,
            Relation::Lt,
            1.0 - t.margin,
        ));
        checks.push(Check::new(
            "dual.certificate.rank",
            c.singular_ratio,
            Relation::Ge,
            t.rank_ratio,
        ));
    }
}

fn grid_checks(inst: &ModelInstance, g: &GridResult, t: &Thresholds, checks: &mut Vec<Check>) {
    let l = inst.dims.l() as f64;
    checks.push(Check::new(
        "grid.solver_optimal",
        (g.solve.status == SolveStatus::Optimal) as u8 as f64,
        Relation::Eq,
        1.0,
    ));
    for e in &g.entries {
        checks.push(Check::new(
            format!("grid.error_bound.srf{}", e.srf),
            e.error,
            Relation::Le,
            l * std::f64::consts::SQRT_2 / e.srf * (1.0 + t.srf_slack),
        ));
    }
    let lo = g.entries.iter().min_by(|a, b| a.srf.total_cmp(&b.srf));
    let hi = g.entries.iter().max_by(|a, b| a.srf.total_cmp(&b.srf));
    if let (Some(lo), Some(hi)) = (lo, hi) {
        if hi.srf > lo.srf {
            checks.push(Check::new(
                "grid.error_trend",
                hi.error,
                Relation::Lt,
                lo.error,
            ));
        }
    }
}

fn run_dual(
    cfg: &ExperimentConfig,
    inst: &ModelInstance,
) -> Result<(DualResult, DualPolynomial, f64)> {
    let t0 = Instant::now();
    let sdp = assemble_dual_sdp(&inst.y, &inst.bases, &inst.dims)?;
    let rep = solve_sdp(&sdp, &cfg.solver)?;
    let solve_s = t0.elapsed().as_secs_f64();
    let q = rep.q().expect("dual solver returns q").to_vec();
    let poly = build_dual_polynomial(&q, &inst.bases, &inst.dims)?;
    let scan = scan_all(&poly, cfg.scan_grid, cfg.threshold, cfg.radius())?;
    let certificate = if cfg.certificate {
        let tol = CertificateTolerances {
            interp: cfg.thresholds.interp_tol,
            strict: cfg.thresholds.sup_slack,
            margin: cfg.thresholds.margin,
            radius: cfg.radius(),
            grid: cfg.scan_grid,
            rank_ratio: cfg.thresholds.rank_ratio,
        };
        Some(verify_certificate(&poly, inst, &tol)?)
    } else {
        None
    };
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims)?;
    let h_norms = vec![1.0; inst.dims.n_inputs()];
    let recovery = recover(
        &scan.combined.shifts(),
        &dict,
        &inst.bases,
        &inst.y,
        &h_norms,
        Some(inst),
    )?;
    Ok((
        DualResult {
            solve: rep.summary(),
            q,
            scan,
            certificate,
            recovery,
        },
        poly,
        solve_s,
    ))
}

fn run_grid(
    cfg: &ExperimentConfig,
    inst: &ModelInstance,
) -> Result<(GridResult, Vec<f64>, GridSpec, f64)> {
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims)?;
    let t0 = Instant::now();
    let rep = solve_nuclear_ls(&dict, &inst.y, &cfg.grid_solver)?;
    let solve_s = t0.elapsed().as_secs_f64();
    let tuple = rep.tuple().expect("nuclear solver returns a tuple");
    let s_hat = if cfg.auto_support {
        None
    } else {
        Some(cfg.grid_s_hat.unwrap_or(inst.dims.s()))
    };
    let h_norms = vec![1.0; inst.dims.n_inputs()];
    let n = inst.dims.n();
    let l = inst.dims.l();
    let jobs: Vec<Result<(GridEntry, Vec<f64>, GridSpec)>> = cfg
        .srf
        .par_iter()
        .map(|&srf| {
            let grid = GridSpec::from_srf(srf, l)?;
            let map = correlation_map(tuple, n, &grid)?;
            let support = detect_from_map(&map, &grid, s_hat, cfg.radius());
            let recovery = recover(
                &support.shifts,
                &dict,
                &inst.bases,
                &inst.y,
                &h_norms,
                Some(inst),
            )?;
            let error = recovery
                .metrics
                .as_ref()
                .map_or(f64::NAN, |m| m.shift.error);
            Ok((
                GridEntry {
                    srf,
                    g: grid.g,
                    support,
                    recovery,
                    error,
                },
                map,
                grid,
            ))
        })
        .collect();
    let mut entries = Vec::with_capacity(jobs.len());
    let mut last_map = (Vec::new(), GridSpec { g: 1 });
    let top_srf = cfg.srf.iter().copied().fold(f64::MIN, f64::max);
    for job in jobs {
        let (entry, map, grid) = job?;
        if entry.srf == top_srf {
            last_map = (map, grid);
        }
        entries.push(entry);
    }
    Ok((
        GridResult {
            solve: rep.summary(),
            entries,
        },
        last_map.0,
        last_map.1,
        solve_s,
    ))
}

/// Runs the configured pipelines and writes all artifacts into `cfg.out`.
///
/// Errors are returned only for invalid configurations and I/O failures;
/// failed checks and non-convergence are reported through the exit code.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let out = cfg.out.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let inst = cfg.instance()?;
    let mut written = Vec::new();
    write_file(&out, INSTANCE_FILE, &inst.to_json()?, &mut written)?;

    let mut checks = Vec::new();
    let mut converged = true;
    let mut dual = None;
    let mut dual_s = None;
    if cfg.mode.dual() {
        let (d, poly, secs) = run_dual(cfg, &inst)?;
        dual_checks(&inst, &d, &cfg.thresholds, &mut checks);
        converged &= d.solve.status == SolveStatus::Optimal;
        write_file(&out, PEAKS_FILE, &peaks_csv(&d.scan), &mut written)?;
        write_file(
            &out,
            SURFACE_FILE,
            &surface_csv(&poly, cfg.surface_csv_grid)?,
            &mut written,
        )?;
        dual = Some(d);
        dual_s = Some(secs);
    }
    let mut grid = None;
    let mut grid_s = None;
    if cfg.mode.grid() {
        let (g, map, spec) = {
            let (g, map, spec, secs) = run_grid(cfg, &inst)?;
            grid_s = Some(secs);
            (g, map, spec)
        };
        grid_checks(&inst, &g, &cfg.thresholds, &mut checks);
        converged &= g.solve.status == SolveStatus::Optimal;
        write_file(
            &out,
            CORRELATION_FILE,
            &correlation_csv(&map, &spec),
            &mut written,
        )?;
        grid = Some(g);
    }
    let exit_code = if !converged {
        exit::NOT_CONVERGED
    } else if checks.iter().all(|c| c.pass) {
        exit::OK
    } else {
        exit::CHECK_FAILED
    };
    let result = RunResult {
        config: ExperimentConfig {
            out: PathBuf::new(),
            ..cfg.clone()
        },
        dims: inst.dims.clone(),
        true_shifts: inst.shifts.clone(),
        dual,
        grid,
        checks,
        exit_code,
    };
    write_file(
        &out,
        RESULT_FILE,
        &serde_json::to_string_pretty(&result)?,
        &mut written,
    )?;
    for name in write_plot_files(&result, &inst, &out, false)? {
        written.push(name);
    }
    written.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        tool: "blindsr2d".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seed: cfg.seed,
        exit_code,
        wall_time_s: start.elapsed().as_secs_f64(),
        dual_solve_s: dual_s,
        grid_solve_s: grid_s,
        artifacts: written,
    };
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutcome {
        exit_code,
        result,
        manifest,
        out_dir: out,
    })
}

// ---------------------------------------------------------------------------
// CSV output

fn peaks_csv(scan: &PeakScan) -> String {
    let mut s = String::from("source,tau,nu,value\n");
    for p in &scan.combined.peaks {
        let _ = writeln!(s, "all,{},{},{}", p.shift.tau, p.shift.nu, p.value);
    }
    for (j, ps) in scan.per_input.iter().enumerate() {
        for p in &ps.peaks {
            let _ = writeln!(s, "input{j},{},{},{}", p.shift.tau, p.shift.nu, p.value);
        }
    }
    s
}

/// `tau,nu,j,norm_fj` on a `g x g` grid.
pub fn surface_csv(poly: &DualPolynomial, g: usize) -> Result<String> {
    let surfaces = (0..poly.n_inputs())
        .map(|j| poly.norm_surface(j, g))
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::from("tau,nu,j,norm_fj\n");
    for r in 0..g {
        for c in 0..g {
            for (j, surf) in surfaces.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{j},{}",
                    r as f64 / g as f64,
                    c as f64 / g as f64,
                    surf[r * g + c]
                );
            }
        }
    }
    Ok(s)
}

fn correlation_csv(map: &[f64], grid: &GridSpec) -> String {
    let g = grid.g;
    let mut s = String::from("tau,nu,corr\n");
    for r in 0..g {
        for c in 0..g {
            let _ = writeln!(
                s,
                "{},{},{}",
                r as f64 / g as f64,
                c as f64 / g as f64,
                map[r * g + c]
            );
        }
    }
    s
}

/// `l,true_abs_xj,est_abs_xj,j`; estimated values are empty when nothing
/// was recovered.
fn overlay_csv(inst: &ModelInstance, rec: &RecoveryResult) -> String {
    let n = inst.dims.n() as i64;
    let mut s = String::from("l,true_abs_xj,est_abs_xj,j\n");
    for (j, x) in inst.input_signals().iter().enumerate() {
        for (i, v) in x.iter().enumerate() {
            let est = rec.x_abs.get(j).map_or(String::new(), |e| e[i].to_string());
            let _ = writeln!(s, "{},{},{est},{j}", i as i64 - n, v.norm());
        }
    }
    s
}

fn error_curve_csv(g: &GridResult) -> String {
    let mut entries: Vec<&GridEntry> = g.entries.iter().collect();
    entries.sort_by(|a, b| a.srf.total_cmp(&b.srf));
    let mut s = String::from("srf,error\n");
    for e in entries {
        let _ = writeln!(s, "{},{}", e.srf, e.error);
    }
    s
}

fn write_plot_files(
    result: &RunResult,
    inst: &ModelInstance,
    dir: &Path,
    with_surface: bool,
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    if let Some(d) = &result.dual {
        if with_surface {
            let poly = build_dual_polynomial(&d.q, &inst.bases, &inst.dims)?;
            let g = result.config.surface_csv_grid;
            write_file(dir, SURFACE_FILE, &surface_csv(&poly, g)?, &mut written)?;
        }
        write_file(
            dir,
            OVERLAY_FILE,
            &overlay_csv(inst, &d.recovery),
            &mut written,
        )?;
    }
    if let Some(g) = &result.grid {
        if let Some(top) = g.entries.iter().max_by(|a, b| a.srf.total_cmp(&b.srf)) {
            write_file(
                dir,
                OVERLAY_GRID_FILE,
                &overlay_csv(inst, &top.recovery),
                &mut written,
            )?;
        }
        write_file(dir, ERROR_CURVE_FILE, &error_curve_csv(g), &mut written)?;
    }
    Ok(written)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Regenerates the plot CSVs of the run stored in `run_dir` into `dest`.
/// Returns the written file names.
pub fn emit_plotdata(run_dir: &Path, dest: &Path) -> Result<Vec<String>> {
    let result: RunResult = read_json(&run_dir.join(RESULT_FILE))?;
    let inst: ModelInstance = read_json(&run_dir.join(INSTANCE_FILE))?;
    inst.validate()?;
    fs::create_dir_all(dest).map_err(|e| Error::io(dest, e))?;
    write_plot_files(&result, &inst, dest, true)
}

/// Re-evaluation of the checks stored in a result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// Names of checks whose stored verdict disagrees with the recomputed one.
    pub inconsistent: Vec<String>,
    pub all_pass: bool,
}

pub fn verify(result_path: &Path) -> Result<VerifyReport> {
    let result: RunResult = read_json(result_path)?;
    let mut inconsistent = Vec::new();
    let checks: Vec<Check> = result
        .checks
        .iter()
        .map(|c| {
            let fresh = Check::new(c.name.clone(), c.value, c.relation, c.threshold);
            if fresh.pass != c.pass {
                inconsistent.push(c.name.clone());
            }
            fresh
        })
        .collect();
    let all_pass = !checks.is_empty() && checks.iter().all(|c| c.pass) && inconsistent.is_empty();
    Ok(VerifyReport {
        checks,
        inconsistent,
        all_pass,
    })
}
