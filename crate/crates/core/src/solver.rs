//! First-order conic solvers: ADMM for the dual program, a dense ADMM for
//! small real conic programs, and a proximal splitting for the nuclear-norm
//! program.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::model::{chi_adjoint, chi_forward, LiftedDictionary, MatrixTuple};
use crate::sdp::{DualSdp, RealProgram};
use crate::{Error, Result, C64};

/// ADMM settings shared by all solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    /// Penalty parameter, relative to a unit-norm observation.
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Iterations between convergence checks and penalty updates.
    pub check_interval: usize,
    /// Relaxation factor in `(0, 2)`; 1 disables relaxation.
    pub over_relaxation: f64,
    /// Optional CSV with one line per iteration.
    pub log_path: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50_000,
            eps_primal: 1e-7,
            eps_dual: 1e-7,
            rho: DEFAULT_SDP_RHO,
            adaptive_rho: false,
            check_interval: 25,
            over_relaxation: 1.8,
            log_path: None,
        }
    }
}

/// Default penalty for the dual program (see [`SolverConfig::rho`]).
pub const DEFAULT_SDP_RHO: f64 = 40.0;

/// Iterations spanned by the divergence test.
pub const DIVERGENCE_WINDOW: usize = 1000;

impl SolverConfig {
    /// Settings tuned for the nuclear-norm program.
    pub fn nuclear() -> Self {
        SolverConfig {
            rho: 1.0,
            adaptive_rho: false,
            over_relaxation: 1.0,
            max_iters: 20_000,
            eps_primal: 1e-9,
            eps_dual: 1e-9,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.check_interval == 0 {
            return Err(Error::InvalidArgument(
                "max_iters and check_interval must be positive".into(),
            ));
        }
        if !(self.eps_primal > 0.0 && self.eps_dual > 0.0 && self.rho > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerances and rho must be positive".into(),
            ));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "relaxation factor {} outside (0, 2)",
                self.over_relaxation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    InfeasibleSuspected,
}

#[derive(Debug, Clone)]
pub enum SolvePayload {
    /// Dual vector and Gram matrices `Q_j`.
    Dual { q: Vec<C64>, grams: Vec<CMat> },
    /// Primal tuple of the nuclear-norm program.
    Primal { tuple: MatrixTuple },
    /// Free variables and PSD blocks of a real program.
    Real { x: Vec<f64>, blocks: Vec<Mat<f64>> },
}

/// Solver output; residuals refer to the returned iterate.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub rho: f64,
    pub payload: SolvePayload,
}

/// Serializable part of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub rho: f64,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            status: self.status,
            objective: self.objective,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            iterations: self.iterations,
            rho: self.rho,
        }
    }

    pub fn q(&self) -> Option<&[C64]> {
        match &self.payload {
            SolvePayload::Dual { q, .. } => Some(q),
            _ => None,
        }
    }

    pub fn tuple(&self) -> Option<&MatrixTuple> {
        match &self.payload {
            SolvePayload::Primal { tuple } => Some(tuple),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Cone projection

/// Frobenius-nearest PSD matrix to the Hermitian `h`.
pub fn project_psd(h: &CMat) -> Result<CMat> {
    let scale = h
        .col_iter()
        .flat_map(|c| c.iter().map(|v| v.norm()).collect::<Vec<_>>())
        .fold(1.0f64, f64::max);
    let defect = linalg::hermitian_defect(h.as_ref());
    if defect > 1e-10 * scale {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let mut a = h.clone();
    linalg::symmetrize(&mut a);
    psd_part(&a)
}

/// PSD part of a matrix that is exactly Hermitian. Rebuilds from whichever
/// eigen-part (positive or negative) has fewer vectors.
fn psd_part(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let (vals, u) = linalg::hermitian_eigen(a.as_ref())?;
    let n_neg = vals.iter().take_while(|&&v| v < 0.0).count();
    let n_pos = n - n_neg;
    if n_neg == 0 {
        return Ok(a.clone());
    }
    if n_pos == 0 {
        return Ok(linalg::zeros(n, n));
    }
    let mut out;
    if n_pos <= n_neg {
        let b = CMat::from_fn(n, n_pos, |r, c| u[(r, n_neg + c)] * vals[n_neg + c].sqrt());
        out = linalg::zeros(n, n);
        linalg::add_gram(&mut out, b.as_ref(), 1.0);
    } else {
        let b = CMat::from_fn(n, n_neg, |r, c| u[(r, c)] * (-vals[c]).sqrt());
        out = a.clone();
        linalg::add_gram(&mut out, b.as_ref(), 1.0);
    }
    linalg::symmetrize(&mut out);
    Ok(out)
}

fn project_psd_real(a: &Mat<f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let vals: Vec<f64> = (0..n).map(|i| s[i].max(0.0)).collect();
    Ok(Mat::from_fn(n, n, |r, c| {
        (0..n).map(|k| u[(r, k)] * vals[k] * u[(c, k)]).sum()
    }))
}

// ---------------------------------------------------------------------------
// Iteration log

struct IterLog(Option<BufWriter<File>>);

impl IterLog {
    fn open(path: &Option<PathBuf>) -> Result<Self> {
        match path {
            None => Ok(IterLog(None)),
            Some(p) => {
                let f = File::create(p).map_err(|e| Error::io(p, e))?;
                let mut w = BufWriter::new(f);
                writeln!(w, "iteration,objective,primal_residual,dual_residual,rho")
                    .map_err(|e| Error::io(p, e))?;
                Ok(IterLog(Some(w)))
            }
        }
    }

    fn line(&mut self, it: usize, obj: f64, rp: f64, rd: f64, rho: f64) {
        if let Some(w) = self.0.as_mut() {
            // logging is best effort
            let _ = writeln!(w, "{it},{obj:.12e},{rp:.6e},{rd:.6e},{rho:.6e}");
        }
    }
}

// ---------------------------------------------------------------------------
// Dual program

struct Best {
    score: f64,
    q: Vec<C64>,
    grams: Vec<CMat>,
    rp: f64,
    rd: f64,
    iteration: usize,
}

/// Solves the dual program by ADMM on the splitting "affine set x PSD cone".
///
/// The affine step minimizes `-Re<q, y> + rho/2 sum_j ||M_j - (Z_j - U_j)||²`
/// over `q` and `Q_j` subject to the trace constraints, where `M_j` is the
/// block built from `(q, Q_j)`: it decouples into a Hermitian projection of
/// each `Q_j` and a closed form per entry of `q`. The cone step projects
/// `M_j + U_j` onto the PSD cone.
///
/// The observation is rescaled to unit norm internally; the reported
/// objective uses the original `y`.
pub fn solve_sdp(sdp: &DualSdp, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let l = sdp.dims.l();
    let nl = sdp.dims.lifted_len();
    let ni = sdp.n_inputs();
    let y_norm = linalg::vec_norm(&sdp.y);
    let zero_q = vec![C64::new(0.0, 0.0); l];
    if y_norm == 0.0 {
        return Ok(SolveReport {
            status: SolveStatus::Optimal,
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            rho: config.rho,
            payload: SolvePayload::Dual {
                q: zero_q,
                grams: vec![sdp.initial_gram(); ni],
            },
        });
    }
    let yn: Vec<C64> = sdp.y.iter().map(|v| v / y_norm).collect();
    let energy: Vec<f64> = (0..l)
        .map(|p| sdp.qtilde.iter().map(|m| m.col_energy(p)).sum())
        .collect();

    let mut rho = config.rho;
    let alpha = config.over_relaxation;
    let mut z: Vec<CMat> = (0..ni)
        .map(|j| sdp.block(j, &zero_q, &sdp.initial_gram()))
        .collect();
    let mut u: Vec<CMat> = (0..ni)
        .map(|j| linalg::zeros(sdp.block_size(j), sdp.block_size(j)))
        .collect();
    let mut q = zero_q.clone();
    let mut grams: Vec<CMat> = vec![sdp.initial_gram(); ni];
    let mut log = IterLog::open(&config.log_path)?;
    let mut best: Option<Best> = None;
    let mut window_rp: Option<f64> = None;
    let mut status = SolveStatus::MaxIters;
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    for it in 1..=config.max_iters {
        iterations = it;
        // affine step
        let mut g = vec![C64::new(0.0, 0.0); l];
        for j in 0..ni {
            let v = &z[j] - &u[j];
            let mut qj = v.as_ref().submatrix(0, 0, nl, nl).to_owned();
            linalg::symmetrize(&mut qj);
            sdp.projector.project(&mut qj);
            grams[j] = qj;
            let k = sdp.qtilde[j].k();
            let w = CMat::from_fn(k, nl, |i, c| (v[(nl + i, c)] + v[(c, nl + i)].conj()) * 0.5);
            for (gp, t) in g.iter_mut().zip(sdp.qtilde[j].adjoint(&w)) {
                *gp += t;
            }
        }
        for p in 0..l {
            q[p] = if energy[p] > 0.0 {
                (yn[p] * 0.5 + g[p] * rho) / (rho * energy[p])
            } else {
                C64::new(0.0, 0.0)
            };
        }
        // cone step
        let (mut r2, mut s2, mut m2, mut z2, mut u2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..ni {
            let m = sdp.block(j, &q, &grams[j]);
            let n = m.nrows();
            let mut a = CMat::from_fn(n, n, |r, c| {
                m[(r, c)] * alpha + z[j][(r, c)] * (1.0 - alpha) + u[j][(r, c)]
            });
            linalg::symmetrize(&mut a);
            let zn = psd_part(&a)?;
            s2 += linalg::frobenius_dist_sq(zn.as_ref(), z[j].as_ref());
            r2 += linalg::frobenius_dist_sq(m.as_ref(), zn.as_ref());
            m2 += linalg::frobenius_sq(m.as_ref());
            z2 += linalg::frobenius_sq(zn.as_ref());
            u[j] = &a - &zn;
            u2 += linalg::frobenius_sq(u[j].as_ref());
            z[j] = zn;
        }
        rp = r2.sqrt() / m2.sqrt().max(z2.sqrt()).max(1e-300);
        rd = s2.sqrt() / u2.sqrt().max(1e-300);
        let obj = sdp.objective(&q);
        log.line(it, obj, rp, rd, rho);

        if rp <= config.eps_primal && rd <= config.eps_dual {
            status = SolveStatus::Optimal;
            break;
        }
        if it % config.check_interval == 0 {
            let score = (rp / config.eps_primal).max(rd / config.eps_dual);
            if best.as_ref().map_or(true, |b| score < b.score) {
                best = Some(Best {
                    score,
                    q: q.clone(),
                    grams: grams.clone(),
                    rp,
                    rd,
                    iteration: it,
                });
            }
            if config.adaptive_rho {
                let factor = if rp > 10.0 * rd {
                    2.0
                } else if rd > 10.0 * rp {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    for uj in u.iter_mut() {
                        *uj = CMat::from_fn(uj.nrows(), uj.ncols(), |r, c| uj[(r, c)] / factor);
                    }
                }
            }
        }
        if it % DIVERGENCE_WINDOW == 0 {
            if let Some(prev) = window_rp {
                if rp > 10.0 * prev && rp > 1e-3 {
                    status = SolveStatus::InfeasibleSuspected;
                    break;
                }
            }
            window_rp = Some(rp);
        }
    }

    if status == SolveStatus::MaxIters {
        if let Some(b) = best {
            let score = (rp / config.eps_primal).max(rd / config.eps_dual);
            if b.score < score {
                return Ok(SolveReport {
                    status,
                    objective: sdp.objective(&b.q),
                    primal_residual: b.rp,
                    dual_residual: b.rd,
                    iterations: b.iteration,
                    rho,
                    payload: SolvePayload::Dual {
                        q: b.q,
                        grams: b.grams,
                    },
                });
            }
        }
    }
    Ok(SolveReport {
        status,
        objective: sdp.objective(&q),
        primal_residual: rp,
        dual_residual: rd,
        iterations,
        rho,
        payload: SolvePayload::Dual { q, grams },
    })
}

// ---------------------------------------------------------------------------
// Small real conic programs

/// Solves a [`RealProgram`] by ADMM with a dense, cached factorization of the
/// constraint Gram matrix. Meant for programs with at most a few hundred
/// equations and small blocks.
pub fn solve_lmi(prog: &RealProgram, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let nf = prog.n_free;
    let mut offsets = Vec::with_capacity(prog.block_sizes.len());
    let mut dim = nf;
    for &s in &prog.block_sizes {
        offsets.push(dim);
        dim += s * s;
    }
    let m = prog.constraints.len();
    let mut a = Mat::<f64>::zeros(m, dim);
    let mut b = vec![0.0; m];
    for (i, c) in prog.constraints.iter().enumerate() {
        for &(v, coef) in &c.free_terms {
            a[(i, v)] += coef;
        }
        for &(blk, r, cc, coef) in &c.block_terms {
            a[(i, offsets[blk] + r * prog.block_sizes[blk] + cc)] += coef;
        }
        b[i] = c.rhs;
    }
    // pseudo-inverse of A A^T, cached for all iterations
    let gram = &a * a.transpose();
    let evd = gram
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("constraint Gram factorization: {e:?}")))?;
    let s = evd.S();
    let ue = evd.U();
    let smax = (0..m).map(|i| s[i].abs()).fold(0.0, f64::max);
    let inv: Vec<f64> = (0..m)
        .map(|i| if s[i] > 1e-12 * smax { 1.0 / s[i] } else { 0.0 })
        .collect();
    let pinv = Mat::<f64>::from_fn(m, m, |r, c| {
        (0..m).map(|k| ue[(r, k)] * inv[k] * ue[(c, k)]).sum()
    });

    let rho = config.rho;
    let mut z = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut log = IterLog::open(&config.log_path)?;
    let mut status = SolveStatus::MaxIters;
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
    for it in 1..=config.max_iters {
        iterations = it;
        let mut w: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        for (wi, ci) in w.iter_mut().zip(&prog.objective) {
            *wi += ci / rho;
        }
        let res: Vec<f64> = (0..m)
            .map(|i| (0..dim).map(|k| a[(i, k)] * w[k]).sum::<f64>() - b[i])
            .collect();
        let lam: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|k| pinv[(i, k)] * res[k]).sum())
            .collect();
        for k in 0..dim {
            v[k] = w[k] - (0..m).map(|i| a[(i, k)] * lam[i]).sum::<f64>();
        }
        let z_old = z.clone();
        for k in 0..nf {
            z[k] = v[k] + u[k];
        }
        for (blk, &sz) in prog.block_sizes.iter().enumerate() {
            let off = offsets[blk];
            let mut x =
                Mat::<f64>::from_fn(sz, sz, |r, c| v[off + r * sz + c] + u[off + r * sz + c]);
            let xt = x.transpose().to_owned();
            x = (&x + &xt) * faer::Scale(0.5);
            let p = project_psd_real(&x)?;
            for r in 0..sz {
                for c in 0..sz {
                    z[off + r * sz + c] = p[(r, c)];
                }
            }
        }
        for k in 0..dim {
            u[k] += v[k] - z[k];
        }
        let diff: Vec<f64> = v.iter().zip(&z).map(|(a, b)| a - b).collect();
        let dz: Vec<f64> = z.iter().zip(&z_old).map(|(a, b)| a - b).collect();
        rp = norm(&diff) / norm(&v).max(norm(&z)).max(1.0);
        rd = norm(&dz) / norm(&u).max(1.0);
        let obj = prog.objective_value(&v[..nf]);
        log.line(it, obj, rp, rd, rho);
        if rp <= config.eps_primal && rd <= config.eps_dual {
            status = SolveStatus::Optimal;
            break;
        }
    }
    let x = v[..nf].to_vec();
    let blocks = prog
        .block_sizes
        .iter()
        .zip(&offsets)
        .map(|(&sz, &off)| Mat::<f64>::from_fn(sz, sz, |r, c| z[off + r * sz + c]))
        .collect();
    Ok(SolveReport {
        status,
        objective: prog.objective_value(&x),
        primal_residual: rp,
        dual_residual: rd,
        iterations,
        rho,
        payload: SolvePayload::Real { x, blocks },
    })
}

// ---------------------------------------------------------------------------
// Nuclear norm

/// Singular-value soft thresholding: the proximal map of `t ||.||_*`.
pub fn svt(b: &CMat, t: f64) -> Result<CMat> {
    if b.nrows() == 0 || b.ncols() == 0 {
        return Ok(b.clone());
    }
    let d = linalg::thin_svd(b.as_ref())?;
    let k = d.s.iter().take_while(|&&s| s > t).count();
    let us = CMat::from_fn(b.nrows(), k, |r, c| d.u[(r, c)] * (d.s[c] - t));
    let v = d.v.as_ref().subcols(0, k).to_owned();
    Ok(linalg::mul_adjoint(us.as_ref(), v.as_ref()))
}

pub fn nuclear_norm(b: &CMat) -> Result<f64> {
    Ok(linalg::singular_values(b.as_ref())?.iter().sum())
}

/// Minimizes `sum_j ||B_j||_*` subject to `chi(B) = y` by ADMM: singular-value
/// thresholding alternates with the projection onto the affine solution set,
/// which is explicit because `chi chi^*` is a multiple of the identity.
///
/// The returned tuple is the affine (feasible) iterate.
pub fn solve_nuclear_ls(
    dict: &LiftedDictionary,
    y: &[C64],
    config: &SolverConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let l = dict.l();
    if y.len() != l {
        return Err(Error::Dimension(format!(
            "observation of length {} for L = {l}",
            y.len()
        )));
    }
    let zero = MatrixTuple {
        parts: (0..dict.n_inputs())
            .map(|j| linalg::zeros(dict.k(j), l * l))
            .collect(),
    };
    let y_norm = linalg::vec_norm(y);
    if y_norm == 0.0 {
        return Ok(SolveReport {
            status: SolveStatus::Optimal,
            objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            rho: config.rho,
            payload: SolvePayload::Primal { tuple: zero },
        });
    }
    let yn: Vec<C64> = y.iter().map(|v| v / y_norm).collect();
    let c = dict.gram_scale();
    let project = |b: &MatrixTuple| -> Result<MatrixTuple> {
        let r: Vec<C64> = chi_forward(b, dict)?
            .iter()
            .zip(&yn)
            .map(|(a, t)| (a - t) / c)
            .collect();
        let corr = chi_adjoint(&r, dict)?;
        Ok(MatrixTuple {
            parts: b
                .parts
                .iter()
                .zip(&corr.parts)
                .map(|(x, d)| x - d)
                .collect(),
        })
    };
    let rho = config.rho;
    let mut z = project(&zero)?;
    let mut u = zero.clone();
    let mut log = IterLog::open(&config.log_path)?;
    let mut status = SolveStatus::MaxIters;
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut obj = 0.0;
    for it in 1..=config.max_iters {
        iterations = it;
        let x = MatrixTuple {
            parts: z
                .parts
                .iter()
                .zip(&u.parts)
                .map(|(a, b)| svt(&(a - b), 1.0 / rho))
                .collect::<Result<_>>()?,
        };
        let xu = MatrixTuple {
            parts: x.parts.iter().zip(&u.parts).map(|(a, b)| a + b).collect(),
        };
        let zn = project(&xu)?;
        let mut dz2 = 0.0;
        for (a, b) in zn.parts.iter().zip(&z.parts) {
            dz2 += linalg::frobenius_dist_sq(a.as_ref(), b.as_ref());
        }
        for ((uj, xj), zj) in u.parts.iter_mut().zip(&x.parts).zip(&zn.parts) {
            *uj = &*uj + xj - zj;
        }
        z = zn;
        let cx = chi_forward(&x, dict)?;
        rp = cx
            .iter()
            .zip(&yn)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        rd = dz2.sqrt() / z.norm().max(1e-300);
        obj = x.parts.iter().map(nuclear_norm).sum::<Result<f64>>()? * y_norm;
        log.line(it, obj, rp, rd, rho);
        if rp <= config.eps_primal && rd <= config.eps_dual {
            status = SolveStatus::Optimal;
            break;
        }
    }
    let tuple = z.scaled(y_norm);
    Ok(SolveReport {
        status,
        objective: obj,
        primal_residual: rp,
        dual_residual: rd,
        iterations,
        rho,
        payload: SolvePayload::Primal { tuple },
    })
}
