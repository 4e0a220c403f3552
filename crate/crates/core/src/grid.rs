//! Grid-restricted recovery: shifts are assumed to lie on the `(1/G, 1/G)`
//! grid, the lifted matrices are found by nuclear-norm minimization and the
//! support is read off the correlation with the grid atoms.
//!
//! Grid node `(r, c)` is the shift `(tau, nu) = (r / G, c / G)`; maps over
//! the grid are row-major with index `r * G + c`.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::localization::lifted_system;
use crate::model::{
    build_lifted_dictionary, kernel_row, Dimensions, MatrixTuple, ModelInstance, ShiftPair,
    SubspaceBasis,
};
use crate::solver::{solve_nuclear_ls, SolveReport, SolverConfig};
use crate::{Error, Result, C64};

/// Tolerance for a shift to count as a grid node.
const NODE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub g: usize,
}

impl GridSpec {
    pub fn new(g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one node".into(),
            ));
        }
        Ok(GridSpec { g })
    }

    /// `G = round(srf * L)`.
    pub fn from_srf(srf: f64, l: usize) -> Result<Self> {
        if !(srf > 0.0) || !srf.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "super-resolution factor {srf}"
            )));
        }
        GridSpec::new((srf * l as f64).round() as usize)
    }

    pub fn srf(&self, l: usize) -> f64 {
        self.g as f64 / l as f64
    }

    pub fn node(&self, r: usize, c: usize) -> ShiftPair {
        ShiftPair::new(r as f64 / self.g as f64, c as f64 / self.g as f64)
    }

    /// Grid node at `s`, if `s` is one.
    pub fn node_of(&self, s: &ShiftPair) -> Option<(usize, usize)> {
        let g = self.g as f64;
        let snap = |x: f64| {
            let k = (x * g).round();
            ((x * g - k).abs() <= NODE_TOL * g).then_some(k as usize % self.g)
        };
        Some((snap(s.tau)?, snap(s.nu)?))
    }
}

/// Observation of an instance whose shifts all lie on the grid, summed
/// over grid atoms as `y_p = sum b' a(g)^H D~_p^j h_j`.
pub fn gridded_synthesis(inst: &ModelInstance, grid: &GridSpec) -> Result<Vec<C64>> {
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims)?;
    let mut y = vec![C64::new(0.0, 0.0); inst.dims.l()];
    for (b, s) in inst.amplitudes.iter().zip(&inst.shifts) {
        let (r, c) = grid.node_of(s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "shift ({}, {}) is not on the {}-grid",
                s.tau, s.nu, grid.g
            ))
        })?;
        let a = lifted_system(&[grid.node(r, c)], &dict);
        let x: Vec<C64> = inst.orientations.iter().flatten().map(|h| b * h).collect();
        for (yp, v) in y.iter_mut().zip(linalg::mat_vec(a.as_ref(), &x)) {
            *yp += v;
        }
    }
    Ok(y)
}

/// Nuclear-norm recovery of the lifted matrices from `y`. The grid enters
/// only through support detection.
pub fn solve_grid(
    y: &[C64],
    bases: &[SubspaceBasis],
    dims: &Dimensions,
    _grid: &GridSpec,
    config: &SolverConfig,
) -> Result<SolveReport> {
    let dict = build_lifted_dictionary(bases, dims)?;
    solve_nuclear_ls(&dict, y, config)
}

/// `c(r, c) = sum_j ||B_j a(g_rc)||_2` on every grid node, using the
/// separable kernel structure of the atoms.
pub fn correlation_map(tuple: &MatrixTuple, n: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    let l = 2 * n + 1;
    let g = grid.g;
    // a[r][i] = D_N(i/L - r/G)
    let a: Vec<Vec<f64>> = (0..g).map(|r| kernel_row(r as f64 / g as f64, n)).collect();
    let mut out = vec![0.0; g * g];
    for part in &tuple.parts {
        if part.ncols() != l * l {
            return Err(Error::Dimension(format!(
                "matrix with {} columns for L² = {}",
                part.ncols(),
                l * l
            )));
        }
        let mut sq = vec![0.0; g * g];
        for i in 0..part.nrows() {
            // t[l_tau][c] = sum_m M[m][l_tau] a[c][m], with M[m][l] = B[i, m L + l]
            let t = CMat::from_fn(l, g, |lt, c| {
                (0..l).map(|m| part[(i, m * l + lt)] * a[c][m]).sum()
            });
            for r in 0..g {
                for c in 0..g {
                    let v: C64 = (0..l).map(|lt| t[(lt, c)] * a[r][lt]).sum();
                    sq[r * g + c] += v.norm_sqr();
                }
            }
        }
        for (o, v) in out.iter_mut().zip(sq) {
            *o += v.sqrt();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub shifts: Vec<ShiftPair>,
    pub nodes: Vec<(usize, usize)>,
    pub correlations: Vec<f64>,
}

/// Picks the support from a correlation map: local maxima, non-maximum
/// suppression within `radius`, then the `s_hat` strongest or, when
/// `s_hat` is `None`, the count before the largest drop relative to the
/// strongest value.
pub fn detect_from_map(
    map: &[f64],
    grid: &GridSpec,
    s_hat: Option<usize>,
    radius: f64,
) -> SupportEstimate {
    let g = grid.g;
    let top = map.iter().copied().fold(0.0, f64::max);
    let mut cands: Vec<(usize, usize, f64)> = Vec::new();
    if top > 0.0 {
        for r in 0..g {
            for c in 0..g {
                let v = map[r * g + c];
                let is_max = [g - 1, 0, 1].iter().all(|&dr| {
                    [g - 1, 0, 1]
                        .iter()
                        .all(|&dc| map[((r + dr) % g) * g + (c + dc) % g] <= v)
                });
                if is_max && v > 0.0 {
                    cands.push((r, c, v));
                }
            }
        }
    }
    cands.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for cand in cands {
        let s = grid.node(cand.0, cand.1);
        if kept
            .iter()
            .all(|k| grid.node(k.0, k.1).wrap_dist(&s) > radius)
        {
            kept.push(cand);
        }
    }
    let count = match s_hat {
        Some(k) => k.min(kept.len()),
        None if kept.len() <= 1 => kept.len(),
        None => {
            let mut best = (0.0, 1);
            for k in 0..kept.len() - 1 {
                let gap = (kept[k].2 - kept[k + 1].2) / top;
                if gap > best.0 {
                    best = (gap, k + 1);
                }
            }
            best.1
        }
    };
    kept.truncate(count);
    SupportEstimate {
        shifts: kept.iter().map(|k| grid.node(k.0, k.1)).collect(),
        nodes: kept.iter().map(|k| (k.0, k.1)).collect(),
        correlations: kept.iter().map(|k| k.2).collect(),
    }
}

pub fn detect_support(
    tuple: &MatrixTuple,
    n: usize,
    grid: &GridSpec,
    s_hat: Option<usize>,
    radius: f64,
) -> Result<SupportEstimate> {
    Ok(detect_from_map(
        &correlation_map(tuple, n, grid)?,
        grid,
        s_hat,
        radius,
    ))
}
