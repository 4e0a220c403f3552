//! Amplitude and input recovery once the shifts are known, plus the error
//! metrics used to score a run.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::localization::lifted_system;
use crate::model::{Dimensions, LiftedDictionary, ModelInstance, ShiftPair, SubspaceBasis};
use crate::{Error, Result, C64};

/// Relative singular-value cutoff of the least-squares solve.
pub const LS_RCOND: f64 = 1e-10;

/// Cost of an unmatched true or estimated shift in [`shift_error`].
pub const UNMATCHED_COST: f64 = 0.5 * std::f64::consts::SQRT_2;

/// Least-squares estimate of the products `b_k h_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedFit {
    /// `coeffs[k][j]` estimates `b_k h_j`.
    pub coeffs: Vec<Vec<Vec<C64>>>,
    pub unknowns: usize,
    pub rank: usize,
    pub rank_deficient: bool,
    /// `||y - A x||_2`.
    pub residual: f64,
}

/// Solves the stacked system with columns `a(s_k)^H D~_p^j` for the
/// products `b_k h_j` (minimum-norm solution when rank deficient).
pub fn least_squares_lifted(
    shifts_hat: &[ShiftPair],
    dict: &LiftedDictionary,
    y: &[C64],
) -> Result<LiftedFit> {
    if shifts_hat.is_empty() {
        return Err(Error::InvalidArgument("no shifts to fit".into()));
    }
    if y.len() != dict.l() {
        return Err(Error::Dimension(format!(
            "observation of length {} for L = {}",
            y.len(),
            dict.l()
        )));
    }
    let a = lifted_system(shifts_hat, dict);
    let (x, rank) = linalg::lstsq_min_norm(a.as_ref(), y, LS_RCOND)?;
    let ax = linalg::mat_vec(a.as_ref(), &x);
    let residual = linalg::vec_norm(&ax.iter().zip(y).map(|(u, v)| v - u).collect::<Vec<_>>());
    let mut it = x.into_iter();
    let coeffs = shifts_hat
        .iter()
        .map(|_| {
            (0..dict.n_inputs())
                .map(|j| it.by_ref().take(dict.k(j)).collect())
                .collect()
        })
        .collect();
    let unknowns = a.ncols();
    Ok(LiftedFit {
        coeffs,
        unknowns,
        rank,
        rank_deficient: rank < unknowns,
        residual,
    })
}

/// Magnitudes separated from the lifted products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeSplit {
    /// `|b_k|`, geometric mean over inputs.
    pub b_abs: Vec<f64>,
    /// Per-input entrywise `|h_j|`, averaged over shifts.
    pub h_abs: Vec<Vec<f64>>,
    /// Per shift, `max_j / min_j - 1` of the per-input estimates of `|b_k|`.
    pub discrepancy: Vec<f64>,
}

pub fn split_magnitudes(coeffs: &[Vec<Vec<C64>>], h_norms: &[f64]) -> Result<MagnitudeSplit> {
    if h_norms.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidArgument(
            "orientation norms must be positive".into(),
        ));
    }
    let mut b_abs = Vec::with_capacity(coeffs.len());
    let mut discrepancy = Vec::with_capacity(coeffs.len());
    for (k, row) in coeffs.iter().enumerate() {
        if row.len() != h_norms.len() {
            return Err(Error::Dimension(format!(
                "{} inputs in the coefficients, {} norms",
                row.len(),
                h_norms.len()
            )));
        }
        let est: Vec<f64> = row
            .iter()
            .zip(h_norms)
            .map(|(c, h)| linalg::vec_norm(c) / h)
            .collect();
        if let Some(j) = est.iter().position(|&e| e == 0.0) {
            return Err(Error::Numerical(format!(
                "coefficient of shift {k}, input {j} vanishes; magnitudes cannot be split"
            )));
        }
        let log_mean = est.iter().map(|e| e.ln()).sum::<f64>() / est.len() as f64;
        b_abs.push(log_mean.exp());
        let hi = est.iter().copied().fold(f64::MIN, f64::max);
        let lo = est.iter().copied().fold(f64::MAX, f64::min);
        discrepancy.push(hi / lo - 1.0);
    }
    let h_abs = (0..h_norms.len())
        .map(|j| {
            let kj = coeffs.first().map_or(0, |r| r[j].len());
            (0..kj)
                .map(|i| {
                    coeffs
                        .iter()
                        .zip(&b_abs)
                        .map(|(row, b)| row[j][i].norm() / b)
                        .sum::<f64>()
                        / coeffs.len() as f64
                })
                .collect()
        })
        .collect();
    Ok(MagnitudeSplit {
        b_abs,
        h_abs,
        discrepancy,
    })
}

/// Orientation estimates `h_j = (b_k h_j) / |b_k|` from the shift with the
/// largest amplitude, rotated so that the first nonzero entry is real and
/// positive.
pub fn orientation_estimates(coeffs: &[Vec<Vec<C64>>], b_abs: &[f64]) -> Vec<Vec<C64>> {
    let Some(k) = (0..b_abs.len()).max_by(|&a, &b| b_abs[a].total_cmp(&b_abs[b])) else {
        return Vec::new();
    };
    coeffs[k]
        .iter()
        .map(|c| {
            let phase = c
                .iter()
                .find(|v| v.norm() > 0.0)
                .map_or(C64::new(1.0, 0.0), |v| v.conj() / v.norm());
            c.iter().map(|v| v * phase / b_abs[k]).collect()
        })
        .collect()
}

/// `|x_j| = |D_j h_j|` entrywise.
pub fn reconstruct_inputs(bases: &[SubspaceBasis], h_hat: &[Vec<C64>]) -> Result<Vec<Vec<f64>>> {
    if bases.len() != h_hat.len() {
        return Err(Error::Dimension(format!(
            "{} bases and {} orientation estimates",
            bases.len(),
            h_hat.len()
        )));
    }
    bases
        .iter()
        .zip(h_hat)
        .map(|(d, h)| {
            if d.cols() != h.len() {
                return Err(Error::Dimension("orientation length mismatch".into()));
            }
            Ok(d.signal(h).iter().map(|v| v.norm()).collect())
        })
        .collect()
}

/// `||a - b||_2 / ||b||_2`.
pub fn relative_error(est: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftError {
    pub error: f64,
    pub matched: usize,
    /// True shifts without an estimate.
    pub missing: usize,
    /// Estimates without a true shift.
    pub extra: usize,
}

/// `(L / S) * sum_k dist(s_k, s_hat_k)` under the best one-to-one matching,
/// with unmatched shifts on either side charged [`UNMATCHED_COST`].
pub fn shift_error(
    true_shifts: &[ShiftPair],
    shifts_hat: &[ShiftPair],
    dims: &Dimensions,
) -> Result<ShiftError> {
    let s = true_shifts.len();
    if s == 0 {
        return Err(Error::InvalidArgument("no true shifts".into()));
    }
    if s > 20 {
        return Err(Error::InvalidArgument(format!(
            "{s} true shifts exceed the matcher limit"
        )));
    }
    // dp over the set of matched true shifts while scanning the estimates
    let full = 1usize << s;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for e in shifts_hat {
        let mut next = vec![f64::INFINITY; full];
        for mask in 0..full {
            let base = dp[mask];
            if base.is_infinite() {
                continue;
            }
            next[mask] = next[mask].min(base + UNMATCHED_COST);
            for (t, ts) in true_shifts.iter().enumerate() {
                if mask & (1 << t) == 0 {
                    let m2 = mask | (1 << t);
                    next[m2] = next[m2].min(base + ts.wrap_dist(e));
                }
            }
        }
        dp = next;
    }
    let (mut best, mut best_mask) = (f64::INFINITY, 0usize);
    for (mask, &v) in dp.iter().enumerate() {
        let total = v + UNMATCHED_COST * (s - mask.count_ones() as usize) as f64;
        // prefer more matches on ties
        if total < best - 1e-15
            || ((total - best).abs() <= 1e-15 && mask.count_ones() > best_mask.count_ones())
        {
            best = total;
            best_mask = mask;
        }
    }
    let matched = best_mask.count_ones() as usize;
    Ok(ShiftError {
        error: dims.l() as f64 / s as f64 * best,
        matched,
        missing: s - matched,
        extra: shifts_hat.len() - matched,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub shift: ShiftError,
    /// Relative error of `|x_hat_j|` against `|x_j|`.
    pub input_errors: Vec<f64>,
}

/// Everything recovered from one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub shifts_hat: Vec<ShiftPair>,
    pub s_hat: usize,
    pub lifted_coeffs: Vec<Vec<Vec<C64>>>,
    pub b_abs: Vec<f64>,
    pub h_abs: Vec<Vec<f64>>,
    pub x_abs: Vec<Vec<f64>>,
    pub discrepancy: Vec<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    pub residual: f64,
    pub metrics: Option<RecoveryMetrics>,
}

/// Runs the least-squares fit, the magnitude split and the input
/// reconstruction for the given shift estimates. With an empty estimate the
/// result carries no coefficients. Metrics are filled in when `truth` is
/// given.
pub fn recover(
    shifts_hat: &[ShiftPair],
    dict: &LiftedDictionary,
    bases: &[SubspaceBasis],
    y: &[C64],
    h_norms: &[f64],
    truth: Option<&ModelInstance>,
) -> Result<RecoveryResult> {
    let mut res = RecoveryResult {
        shifts_hat: shifts_hat.to_vec(),
        s_hat: shifts_hat.len(),
        lifted_coeffs: Vec::new(),
        b_abs: Vec::new(),
        h_abs: Vec::new(),
        x_abs: Vec::new(),
        discrepancy: Vec::new(),
        rank: 0,
        rank_deficient: false,
        residual: linalg::vec_norm(y),
        metrics: None,
    };
    if !shifts_hat.is_empty() {
        let fit = least_squares_lifted(shifts_hat, dict, y)?;
        let split = split_magnitudes(&fit.coeffs, h_norms)?;
        let h_hat = orientation_estimates(&fit.coeffs, &split.b_abs);
        res.x_abs = reconstruct_inputs(bases, &h_hat)?;
        res.lifted_coeffs = fit.coeffs;
        res.b_abs = split.b_abs;
        res.h_abs = split.h_abs;
        res.discrepancy = split.discrepancy;
        res.rank = fit.rank;
        res.rank_deficient = fit.rank_deficient;
        res.residual = fit.residual;
    }
    if let Some(inst) = truth {
        let shift = shift_error(&inst.shifts, shifts_hat, &inst.dims)?;
        let true_abs: Vec<Vec<f64>> = inst
            .input_signals()
            .iter()
            .map(|x| x.iter().map(|v| v.norm()).collect())
            .collect();
        let input_errors = true_abs
            .iter()
            .enumerate()
            .map(|(j, t)| match res.x_abs.get(j) {
                Some(est) => relative_error(est, t),
                None => 1.0,
            })
            .collect();
        res.metrics = Some(RecoveryMetrics {
            shift,
            input_errors,
        });
    }
    Ok(res)
}
