//! Dual polynomials, peak localization on a fine grid and verification of
//! the dual certificate conditions.
//!
//! Grid surfaces are stored row-major with index `r * G + c`, where row `r`
//! is `tau = r / G` and column `c` is `nu = c / G`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::model::{
    build_atom_real, build_lifted_dictionary, centered, Dimensions, LiftedDictionary,
    ModelInstance, ShiftPair, SubspaceBasis,
};
use crate::sdp::QtildeMap;
use crate::{Error, Result, C64};

/// Default detection level for `||f_j||`.
pub const DEFAULT_THRESHOLD: f64 = 1.0 - 1e-4;
/// Default scan grid per axis.
pub const DEFAULT_SCAN_GRID: usize = 2048;
/// Resolution of the local refinement.
pub const REFINE_TOL: f64 = 1e-6;

/// Default suppression radius `0.5 / N`.
pub fn default_suppression_radius(n: usize) -> f64 {
    0.5 / n.max(1) as f64
}

/// Vector-valued trigonometric polynomials
/// `f_j(s) = sum_{p, m} c^j_(p, m) exp(-i 2 pi (p nu + m tau))`.
#[derive(Debug, Clone)]
pub struct DualPolynomial {
    n: usize,
    /// Per input, `K_j x L²` with column `(p, m)` in lifted order.
    pub coeffs: Vec<CMat>,
}

pub fn build_dual_polynomial(
    q: &[C64],
    bases: &[SubspaceBasis],
    dims: &Dimensions,
) -> Result<DualPolynomial> {
    if q.len() != dims.l() {
        return Err(Error::Dimension(format!(
            "vector of length {} for L = {}",
            q.len(),
            dims.l()
        )));
    }
    let coeffs = bases
        .iter()
        .map(|b| Ok(QtildeMap::new(b, dims.n())?.apply(q)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DualPolynomial {
        n: dims.n(),
        coeffs,
    })
}

fn exps(x: f64, n: usize) -> Vec<C64> {
    centered(n)
        .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 * x))
        .collect()
}

impl DualPolynomial {
    pub fn n_inputs(&self) -> usize {
        self.coeffs.len()
    }

    fn l(&self) -> usize {
        2 * self.n + 1
    }

    /// `f_j(s)` by direct summation.
    pub fn evaluate(&self, j: usize, s: &ShiftPair) -> Vec<C64> {
        self.evaluate_at(j, s.tau, s.nu)
    }

    /// Same as [`DualPolynomial::evaluate`] without wrapping the arguments.
    pub fn evaluate_at(&self, j: usize, tau: f64, nu: f64) -> Vec<C64> {
        let l = self.l();
        let et = exps(tau, self.n);
        let en = exps(nu, self.n);
        let c = &self.coeffs[j];
        (0..c.nrows())
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..l {
                    let mut row = C64::new(0.0, 0.0);
                    for m in 0..l {
                        row += c[(i, p * l + m)] * et[m];
                    }
                    acc += row * en[p];
                }
                acc
            })
            .collect()
    }

    pub fn norm_at(&self, j: usize, tau: f64, nu: f64) -> f64 {
        linalg::vec_norm(&self.evaluate_at(j, tau, nu))
    }

    /// `max_j ||f_j||`.
    pub fn max_norm_at(&self, tau: f64, nu: f64) -> f64 {
        (0..self.n_inputs())
            .map(|j| self.norm_at(j, tau, nu))
            .fold(0.0, f64::max)
    }

    /// `||f_j||` on the `g x g` grid through zero-padded 2D FFTs.
    pub fn norm_surface(&self, j: usize, g: usize) -> Result<Vec<f64>> {
        let l = self.l();
        if g < l {
            return Err(Error::InvalidArgument(format!(
                "grid {g} is coarser than L = {l}"
            )));
        }
        let mut acc = vec![0.0; g * g];
        let c = &self.coeffs[j];
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(g);
        for i in 0..c.nrows() {
            // a[r_freq * g + c_freq] with r_freq = m mod g (tau) and c_freq = p mod g (nu)
            let mut a = vec![C64::new(0.0, 0.0); g * g];
            for (pi, p) in centered(self.n).enumerate() {
                for (mi, m) in centered(self.n).enumerate() {
                    let rf = m.rem_euclid(g as i64) as usize;
                    let cf = p.rem_euclid(g as i64) as usize;
                    a[rf * g + cf] = c[(i, pi * l + mi)];
                }
            }
            // rows with a nonzero tau frequency only
            let rows: Vec<usize> = centered(self.n)
                .map(|m| m.rem_euclid(g as i64) as usize)
                .collect();
            for &r in &rows {
                fft.process(&mut a[r * g..(r + 1) * g]);
            }
            let mut t = transpose(&a, g);
            t.par_chunks_mut(g).for_each(|row| fft.process(row));
            // t[c * g + r] = f at (tau = r/g, nu = c/g)
            for cc in 0..g {
                for r in 0..g {
                    acc[r * g + cc] += t[cc * g + r].norm_sqr();
                }
            }
        }
        Ok(acc.into_iter().map(f64::sqrt).collect())
    }

    /// `max_j ||f_j||` on the `g x g` grid.
    pub fn max_surface(&self, g: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0f64; g * g];
        for j in 0..self.n_inputs() {
            for (o, v) in out.iter_mut().zip(self.norm_surface(j, g)?) {
                *o = o.max(v);
            }
        }
        Ok(out)
    }
}

fn transpose(a: &[C64], g: usize) -> Vec<C64> {
    let mut t = vec![C64::new(0.0, 0.0); g * g];
    for r in 0..g {
        for c in 0..g {
            t[c * g + r] = a[r * g + c];
        }
    }
    t
}

// ---------------------------------------------------------------------------
// Peak search

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub shift: ShiftPair,
    /// `||f_j||` at the peak, per input.
    pub norms: Vec<f64>,
    /// Value of the scanned surface at the peak.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
    pub s_hat: usize,
}

impl PeakSet {
    pub fn shifts(&self) -> Vec<ShiftPair> {
        self.peaks.iter().map(|p| p.shift).collect()
    }
}

/// Which surface a scan maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanTarget {
    MaxOverInputs,
    Input(usize),
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn refine(value: &impl Fn(f64, f64) -> f64, tau0: f64, nu0: f64, h: f64) -> (f64, f64, f64) {
    let (mut tau, mut nu) = (tau0, nu0);
    let mut best = value(tau, nu);
    for _ in 0..50 {
        let (t, ft) = golden_max(|t| value(t, nu), tau - h, tau + h, REFINE_TOL * 0.1);
        let (t, ft) = if ft > best { (t, ft) } else { (tau, best) };
        let (v, fv) = golden_max(|v| value(t, v), nu - h, nu + h, REFINE_TOL * 0.1);
        let (v, fv) = if fv > ft { (v, fv) } else { (nu, ft) };
        let moved = (t - tau).abs().max((v - nu).abs());
        tau = t;
        nu = v;
        best = fv;
        if moved < REFINE_TOL * 0.1 {
            break;
        }
    }
    (tau, nu, best)
}

fn local_maxima(surface: &[f64], g: usize, floor: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for r in 0..g {
        for c in 0..g {
            let v = surface[r * g + c];
            if v < floor {
                continue;
            }
            let mut is_max = true;
            'nb: for dr in [g - 1, 0, 1] {
                for dc in [g - 1, 0, 1] {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    if surface[((r + dr) % g) * g + (c + dc) % g] > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// Grid candidates refined to at most this many.
const MAX_CANDIDATES: usize = 256;

fn check_scan_args(poly: &DualPolynomial, grid_resolution: usize, threshold: f64) -> Result<()> {
    let l = poly.l();
    if grid_resolution < 2 * l {
        return Err(Error::InvalidArgument(format!(
            "scan grid {grid_resolution} below 2L = {}",
            2 * l
        )));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    Ok(())
}

fn scan(
    poly: &DualPolynomial,
    target: ScanTarget,
    grid_resolution: usize,
    threshold: f64,
    suppression_radius: f64,
) -> Result<PeakSet> {
    check_scan_args(poly, grid_resolution, threshold)?;
    if let ScanTarget::Input(j) = target {
        if j >= poly.n_inputs() {
            return Err(Error::InvalidArgument(format!("no input {j}")));
        }
    }
    let g = grid_resolution;
    let surface = match target {
        ScanTarget::MaxOverInputs => poly.max_surface(g)?,
        ScanTarget::Input(j) => poly.norm_surface(j, g)?,
    };
    Ok(peaks_from_surface(
        poly,
        target,
        &surface,
        g,
        threshold,
        suppression_radius,
    ))
}

fn peaks_from_surface(
    poly: &DualPolynomial,
    target: ScanTarget,
    surface: &[f64],
    g: usize,
    threshold: f64,
    suppression_radius: f64,
) -> PeakSet {
    let value = |t: f64, v: f64| match target {
        ScanTarget::MaxOverInputs => poly.max_norm_at(t, v),
        ScanTarget::Input(j) => poly.norm_at(j, t, v),
    };
    let mut cands = local_maxima(surface, g, 0.9 * threshold);
    cands.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    cands.truncate(MAX_CANDIDATES);
    let h = 1.0 / g as f64;
    let mut refined: Vec<(ShiftPair, f64)> = cands
        .iter()
        .map(|&(r, c, _)| {
            let (t, v, f) = refine(&value, r as f64 * h, c as f64 * h, h);
            (ShiftPair::new(t, v), f)
        })
        .filter(|(_, f)| *f >= threshold)
        .collect();
    refined.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<(ShiftPair, f64)> = Vec::new();
    for (s, f) in refined {
        if kept
            .iter()
            .all(|(k, _)| k.wrap_dist(&s) > suppression_radius)
        {
            kept.push((s, f));
        }
    }
    let peaks: Vec<Peak> = kept
        .into_iter()
        .map(|(shift, value)| Peak {
            norms: (0..poly.n_inputs())
                .map(|j| poly.norm_at(j, shift.tau, shift.nu))
                .collect(),
            shift,
            value,
        })
        .collect();
    PeakSet {
        s_hat: peaks.len(),
        peaks,
    }
}

/// Peaks of `g(s) = max_j ||f_j(s)||` at or above `threshold`.
pub fn scan_peaks(
    poly: &DualPolynomial,
    grid_resolution: usize,
    threshold: f64,
    suppression_radius: f64,
) -> Result<PeakSet> {
    scan(
        poly,
        ScanTarget::MaxOverInputs,
        grid_resolution,
        threshold,
        suppression_radius,
    )
}

/// Peaks of `||f_j(s)||` for a single input.
pub fn scan_peaks_input(
    poly: &DualPolynomial,
    j: usize,
    grid_resolution: usize,
    threshold: f64,
    suppression_radius: f64,
) -> Result<PeakSet> {
    scan(
        poly,
        ScanTarget::Input(j),
        grid_resolution,
        threshold,
        suppression_radius,
    )
}

/// Peaks of the combined surface and of every input from one set of grid
/// evaluations, with the grid maximum of each `||f_j||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakScan {
    pub combined: PeakSet,
    pub per_input: Vec<PeakSet>,
    pub grid_max: Vec<f64>,
}

pub fn scan_all(
    poly: &DualPolynomial,
    grid_resolution: usize,
    threshold: f64,
    suppression_radius: f64,
) -> Result<PeakScan> {
    check_scan_args(poly, grid_resolution, threshold)?;
    let g = grid_resolution;
    let mut combined = vec![0.0f64; g * g];
    let mut per_input = Vec::new();
    let mut grid_max = Vec::new();
    for j in 0..poly.n_inputs() {
        let surf = poly.norm_surface(j, g)?;
        grid_max.push(surf.iter().copied().fold(0.0, f64::max));
        for (c, v) in combined.iter_mut().zip(&surf) {
            *c = c.max(*v);
        }
        per_input.push(peaks_from_surface(
            poly,
            ScanTarget::Input(j),
            &surf,
            g,
            threshold,
            suppression_radius,
        ));
    }
    Ok(PeakScan {
        combined: peaks_from_surface(
            poly,
            ScanTarget::MaxOverInputs,
            &combined,
            g,
            threshold,
            suppression_radius,
        ),
        per_input,
        grid_max,
    })
}

// ---------------------------------------------------------------------------
// Certificate verification

/// Settings of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub interp: f64,
    /// Slack allowed above 1 on the dense grid.
    pub strict: f64,
    /// Required gap below 1 away from the true shifts.
    pub margin: f64,
    pub radius: f64,
    pub grid: usize,
    /// Smallest admissible singular-value ratio of the least-squares system.
    pub rank_ratio: f64,
}

impl CertificateTolerances {
    pub fn for_dims(dims: &Dimensions) -> Self {
        CertificateTolerances {
            interp: 1e-3,
            strict: 1e-4,
            margin: 1e-3,
            radius: default_suppression_radius(dims.n()),
            grid: DEFAULT_SCAN_GRID,
            rank_ratio: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `max_{j,k} ||f_j(s_k) - sign(b_k) h_j||`.
    pub interp_error: f64,
    pub interp_pass: bool,
    /// `max_j ||f_j||` over the grid.
    pub max_norm: f64,
    /// The same maximum restricted to points farther than the radius from
    /// every true shift.
    pub max_norm_outside: f64,
    pub bound_pass: bool,
    pub strict_pass: bool,
    pub singular_ratio: f64,
    pub rank_pass: bool,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.interp_pass && self.bound_pass && self.strict_pass && self.rank_pass
    }
}

/// Least-squares matrix with columns indexed `(k, j, i)` and rows `p`:
/// column `(k, j, i)` holds `[a(s_k)^H D~_p^j]_i` over `p`.
pub fn lifted_system(shifts: &[ShiftPair], dict: &LiftedDictionary) -> CMat {
    let l = dict.l();
    let n = dict.n();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for s in shifts {
        let a = build_atom_real(s, n);
        for j in 0..dict.n_inputs() {
            for i in 0..dict.k(j) {
                cols.push(
                    centered(n)
                        .map(|p| {
                            let blk = dict.block(j, p);
                            (0..l * l).map(|r| blk[(r, i)] * a[r]).sum()
                        })
                        .collect(),
                );
            }
        }
    }
    CMat::from_fn(l, cols.len(), |r, c| cols[c][r])
}

/// Checks the interpolation, boundedness and independence conditions of a
/// dual certificate against the ground truth of `inst`.
pub fn verify_certificate(
    poly: &DualPolynomial,
    inst: &ModelInstance,
    tol: &CertificateTolerances,
) -> Result<CertificateReport> {
    let mut interp_error = 0.0f64;
    for (bk, s) in inst.amplitudes.iter().zip(&inst.shifts) {
        let sign = if bk.norm() > 0.0 {
            bk / bk.norm()
        } else {
            C64::new(0.0, 0.0)
        };
        for (j, h) in inst.orientations.iter().enumerate() {
            let f = poly.evaluate(j, s);
            let d: Vec<C64> = f.iter().zip(h).map(|(a, b)| a - sign * b).collect();
            interp_error = interp_error.max(linalg::vec_norm(&d));
        }
    }
    let g = tol.grid;
    let surface = poly.max_surface(g)?;
    let mut max_norm = 0.0f64;
    let mut max_norm_outside = 0.0f64;
    for r in 0..g {
        for c in 0..g {
            let v = surface[r * g + c];
            max_norm = max_norm.max(v);
            let pt = ShiftPair::new(r as f64 / g as f64, c as f64 / g as f64);
            if inst.shifts.iter().all(|s| s.wrap_dist(&pt) > tol.radius) {
                max_norm_outside = max_norm_outside.max(v);
            }
        }
    }
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims)?;
    let sv = linalg::singular_values(lifted_system(&inst.shifts, &dict).as_ref())?;
    let n_cols = inst.dims.s() * inst.dims.k().iter().sum::<usize>();
    let singular_ratio = if sv.len() < n_cols || sv[0] == 0.0 {
        0.0
    } else {
        sv[n_cols - 1] / sv[0]
    };
    Ok(CertificateReport {
        interp_error,
        interp_pass: interp_error <= tol.interp,
        max_norm,
        max_norm_outside,
        bound_pass: max_norm <= 1.0 + tol.strict,
        strict_pass: max_norm_outside < 1.0 - tol.margin,
        singular_ratio,
        rank_pass: singular_ratio > tol.rank_ratio,
    })
}

/// `q` whose polynomial interpolates `sign(b) h` at the single shift of a
/// one-input, one-dimensional-subspace instance and stays below 1 elsewhere.
///
/// With `K = 1` the polynomial is `f(s) = u(s)^H q` where `u(s)` is a
/// band-limited delay and modulation of the basis column; those operations
/// are unitary, so `|f(s)| <= |q| ||u||` with equality only where `u(s)` is
/// parallel to `u(s_1)`.
pub fn matched_certificate(inst: &ModelInstance) -> Result<Vec<C64>> {
    if inst.dims.n_inputs() != 1 || inst.dims.k()[0] != 1 || inst.dims.s() != 1 {
        return Err(Error::InvalidArgument(
            "matched certificate needs one input with K = 1 and one shift".into(),
        ));
    }
    let dict = build_lifted_dictionary(&inst.bases, &inst.dims)?;
    let u = lifted_system(&inst.shifts, &dict);
    let col: Vec<C64> = (0..u.nrows()).map(|r| u[(r, 0)]).collect();
    let nrm2: f64 = col.iter().map(|v| v.norm_sqr()).sum();
    let b = inst.amplitudes[0];
    let target = b / b.norm() * inst.orientations[0][0];
    Ok(col.iter().map(|v| v * target / nrm2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_atom, chi_adjoint, dirichlet_kernel, generate_random_instance, instance_with_shifts,
    };

    fn rand_q(l: usize, seed: u64) -> Vec<C64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..l)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn zero_dual_vector_gives_zero_polynomial() {
        let d = Dimensions::new(2, vec![2], 1).unwrap();
        let inst = generate_random_instance(&d, 0, 0.0).unwrap();
        let poly = build_dual_polynomial(&vec![C64::new(0.0, 0.0); 5], &inst.bases, &d).unwrap();
        assert_eq!(poly.norm_at(0, 0.3, 0.4), 0.0);
        let peaks = scan_peaks(&poly, 64, DEFAULT_THRESHOLD, 0.25).unwrap();
        assert_eq!(peaks.s_hat, 0);
    }

    #[test]
    fn coefficient_and_operator_evaluations_agree() {
        let d = Dimensions::new(3, vec![2, 1], 1).unwrap();
        let inst = generate_random_instance(&d, 5, 0.0).unwrap();
        let q = rand_q(7, 2);
        let poly = build_dual_polynomial(&q, &inst.bases, &d).unwrap();
        let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
        let cq = chi_adjoint(&q, &dict).unwrap();
        for (t, v) in [(0.1, 0.7), (0.93, 0.02), (0.5, 0.5)] {
            let s = ShiftPair::new(t, v);
            let a = build_atom(&s, &d);
            for j in 0..2 {
                let via_op = linalg::mat_vec(cq.parts[j].as_ref(), &a);
                let direct = poly.evaluate(j, &s);
                for (x, y) in via_op.iter().zip(&direct) {
                    assert!((x - y).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn impulse_basis_reduces_to_kernel() {
        let d = Dimensions::new(3, vec![1], 1).unwrap();
        let mut e = linalg::zeros(7, 1);
        e[(3, 0)] = C64::new(1.0, 0.0);
        let mut q = vec![C64::new(0.0, 0.0); 7];
        q[3] = C64::new(1.0, 0.0);
        let poly = build_dual_polynomial(&q, &[SubspaceBasis::new(e)], &d).unwrap();
        for (t, v) in [(0.13, 0.4), (0.77, 0.9)] {
            let f = poly.evaluate_at(0, t, v)[0];
            assert!((f - C64::new(dirichlet_kernel(t, 3), 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn fft_surface_matches_direct_evaluation() {
        let d = Dimensions::new(3, vec![2], 1).unwrap();
        let inst = generate_random_instance(&d, 9, 0.0).unwrap();
        let poly = build_dual_polynomial(&rand_q(7, 3), &inst.bases, &d).unwrap();
        let g = 40;
        let surf = poly.norm_surface(0, g).unwrap();
        for (r, c) in [(0, 0), (3, 17), (39, 1), (20, 20), (11, 38)] {
            let want = poly.norm_at(0, r as f64 / g as f64, c as f64 / g as f64);
            assert!((surf[r * g + c] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn periodic_in_both_coordinates() {
        let d = Dimensions::new(2, vec![1], 1).unwrap();
        let inst = generate_random_instance(&d, 1, 0.0).unwrap();
        let poly = build_dual_polynomial(&rand_q(5, 4), &inst.bases, &d).unwrap();
        let a = poly.evaluate_at(0, 0.3, 0.6)[0];
        assert!((a - poly.evaluate_at(0, 1.3, 0.6)[0]).norm() < 1e-12);
        assert!((a - poly.evaluate_at(0, 0.3, -0.4)[0]).norm() < 1e-12);
    }

    #[test]
    fn matched_certificate_peaks_at_on_grid_truth() {
        let d = Dimensions::new(4, vec![1], 1).unwrap();
        let truth = ShiftPair::new(3.0 / 9.0, 7.0 / 9.0);
        let inst = instance_with_shifts(&d, 12, &[truth]).unwrap();
        let q = matched_certificate(&inst).unwrap();
        let poly = build_dual_polynomial(&q, &inst.bases, &d).unwrap();
        let peaks =
            scan_peaks(&poly, 256, DEFAULT_THRESHOLD, default_suppression_radius(4)).unwrap();
        assert_eq!(peaks.s_hat, 1);
        assert!(peaks.peaks[0].shift.wrap_dist(&truth) < 1e-5);
        let tol = CertificateTolerances {
            grid: 256,
            ..CertificateTolerances::for_dims(&d)
        };
        let rep = verify_certificate(&poly, &inst, &tol).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
    }

    #[test]
    fn zero_dual_fails_interpolation() {
        let d = Dimensions::new(2, vec![1], 1).unwrap();
        let inst = instance_with_shifts(&d, 1, &[ShiftPair::new(0.2, 0.6)]).unwrap();
        let poly = build_dual_polynomial(&vec![C64::new(0.0, 0.0); 5], &inst.bases, &d).unwrap();
        let tol = CertificateTolerances {
            grid: 32,
            ..CertificateTolerances::for_dims(&d)
        };
        let rep = verify_certificate(&poly, &inst, &tol).unwrap();
        assert!(!rep.interp_pass);
        assert!((rep.interp_error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_arguments_are_checked() {
        let d = Dimensions::new(2, vec![1], 1).unwrap();
        let inst = generate_random_instance(&d, 0, 0.0).unwrap();
        let poly = build_dual_polynomial(&rand_q(5, 1), &inst.bases, &d).unwrap();
        assert!(scan_peaks(&poly, 9, 0.5, 0.1).is_err());
        assert!(scan_peaks(&poly, 64, 1.0, 0.1).is_err());
        assert!(scan_peaks_input(&poly, 3, 64, 0.5, 0.1).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8 && fx > -1e-15);
    }
}
