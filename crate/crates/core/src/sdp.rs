//! Assembly of the dual semidefinite program.
//!
//! For each input `j` the program carries a free Hermitian matrix `Q_j` of
//! size `L² x L²` and the block
//!
//! ```text
//! [ Q_j     Q~_j^H ]
//! [ Q~_j    I_Kj   ]  >= 0
//! ```
//!
//! where `Q~_j` depends linearly on `q`. `Q_j` is constrained by one linear
//! equation per two-dimensional diagonal offset `(d_outer, d_inner)`: the sum
//! of the entries on that diagonal is 1 for the offset `(0, 0)` and 0
//! otherwise. The objective is `Re <q, y> = Re(y^H q)`.
//!
//! Rows and columns of `Q_j` and columns of `Q~_j` use the lifted ordering of
//! [`crate::model::lifted_index`], with the frequency index outer.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;

use crate::linalg::{self, CMat};
use crate::model::{centered, Dimensions, SubspaceBasis};
use crate::{Error, Result, C64};

/// Coefficients of the linear map `q -> Q~_j` for one input.
///
/// `[Q~_j]_(i, (p, m)) = q_p c[p, i, m]` with
/// `c[p, i, m] = (1/L) sum_l conj(D_j[l, i]) exp(i 2 pi m (p - l) / L)`.
#[derive(Debug, Clone)]
pub struct QtildeMap {
    n: usize,
    k: usize,
    /// Flattened `((p + N) * K + i) * L + (m + N)`.
    coef: Vec<C64>,
    /// `sum_{i, m} |c[p, i, m]|²` per `p`.
    col_energy: Vec<f64>,
}

impl QtildeMap {
    pub fn new(basis: &SubspaceBasis, n: usize) -> Result<Self> {
        let l = 2 * n + 1;
        if basis.rows() != l {
            return Err(Error::Dimension(format!(
                "basis has {} rows, expected {l}",
                basis.rows()
            )));
        }
        let k = basis.cols();
        let lf = l as f64;
        let mut coef = Vec::with_capacity(l * k * l);
        for p in centered(n) {
            for i in 0..k {
                for m in centered(n) {
                    let mut acc = C64::new(0.0, 0.0);
                    for l_ in centered(n) {
                        let ph = C64::from_polar(1.0, 2.0 * PI * (m * (p - l_)) as f64 / lf);
                        acc += basis.at(l_, i, n).conj() * ph;
                    }
                    coef.push(acc / lf);
                }
            }
        }
        let col_energy = coef
            .chunks(k * l)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum())
            .collect();
        Ok(QtildeMap {
            n,
            k,
            coef,
            col_energy,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn l(&self) -> usize {
        2 * self.n + 1
    }

    /// `c[p, i, m]` with `p, m` given as offsets `0..L`.
    #[inline]
    pub fn coef(&self, p: usize, i: usize, m: usize) -> C64 {
        let l = self.l();
        self.coef[(p * self.k + i) * l + m]
    }

    /// `sum_{i, m} |c[p, i, m]|²`.
    pub fn col_energy(&self, p: usize) -> f64 {
        self.col_energy[p]
    }

    /// `Q~_j` for the given `q`.
    pub fn apply(&self, q: &[C64]) -> CMat {
        let l = self.l();
        assert_eq!(q.len(), l);
        CMat::from_fn(self.k, l * l, |i, col| {
            let p = col / l;
            let m = col % l;
            q[p] * self.coef(p, i, m)
        })
    }

    /// `g_p = sum_{i, m} conj(c[p, i, m]) W[i, (p, m)]`: the adjoint of
    /// [`QtildeMap::apply`] applied to `w`.
    pub fn adjoint(&self, w: &CMat) -> Vec<C64> {
        let l = self.l();
        assert_eq!(w.shape(), (self.k, l * l));
        (0..l)
            .map(|p| {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..self.k {
                    for m in 0..l {
                        acc += self.coef(p, i, m).conj() * w[(i, p * l + m)];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Builds `Q~_j` from `q` and the basis `D_j`.
pub fn build_qtilde(q: &[C64], basis: &SubspaceBasis, dims: &Dimensions) -> Result<CMat> {
    if q.len() != dims.l() {
        return Err(Error::Dimension(format!(
            "vector of length {} for L = {}",
            q.len(),
            dims.l()
        )));
    }
    Ok(QtildeMap::new(basis, dims.n())?.apply(q))
}

/// One trace constraint: the entries `(row, col)` of `Q_j` with
/// `outer(row) - outer(col) = d_outer` and `inner(row) - inner(col) = d_inner`
/// sum to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub d_outer: i64,
    pub d_inner: i64,
    pub entries: Vec<(usize, usize)>,
    pub target: f64,
}

/// All `(2L - 1)²` trace constraints for side length `L = 2N + 1`, ordered
/// by `d_outer` then `d_inner`.
pub fn build_trace_constraints(dims: &Dimensions) -> Vec<TraceConstraint> {
    let l = dims.l() as i64;
    let mut out = Vec::with_capacity(((2 * l - 1) * (2 * l - 1)) as usize);
    for d1 in -(l - 1)..l {
        for d2 in -(l - 1)..l {
            let mut entries = Vec::with_capacity(((l - d1.abs()) * (l - d2.abs())) as usize);
            for p1 in 0..l {
                let p2 = p1 - d1;
                if !(0..l).contains(&p2) {
                    continue;
                }
                for m1 in 0..l {
                    let m2 = m1 - d2;
                    if !(0..l).contains(&m2) {
                        continue;
                    }
                    entries.push(((p1 * l + m1) as usize, (p2 * l + m2) as usize));
                }
            }
            out.push(TraceConstraint {
                d_outer: d1,
                d_inner: d2,
                entries,
                target: if d1 == 0 && d2 == 0 { 1.0 } else { 0.0 },
            });
        }
    }
    out
}

/// Orthogonal projector onto the Hermitian matrices satisfying every trace
/// constraint. Works on group ids computed from index arithmetic.
#[derive(Debug, Clone)]
pub struct ToeplitzProjector {
    l: usize,
    counts: Vec<f64>,
    center: usize,
}

impl ToeplitzProjector {
    pub fn new(l: usize) -> Self {
        let w = 2 * l - 1;
        let mut counts = vec![0.0; w * w];
        for d1 in 0..w {
            for d2 in 0..w {
                let a = l - (d1 as i64 - (l as i64 - 1)).unsigned_abs() as usize;
                let b = l - (d2 as i64 - (l as i64 - 1)).unsigned_abs() as usize;
                counts[d1 * w + d2] = (a * b) as f64;
            }
        }
        ToeplitzProjector {
            l,
            counts,
            center: (l - 1) * w + (l - 1),
        }
    }

    #[inline]
    fn group(&self, r: usize, c: usize) -> usize {
        let l = self.l;
        let w = 2 * l - 1;
        let d1 = r / l + l - 1 - c / l;
        let d2 = r % l + l - 1 - c % l;
        d1 * w + d2
    }

    fn group_sums(&self, q: &CMat) -> Vec<C64> {
        let n = self.l * self.l;
        assert_eq!(q.shape(), (n, n));
        let mut sums = vec![C64::new(0.0, 0.0); self.counts.len()];
        for c in 0..n {
            for r in 0..n {
                sums[self.group(r, c)] += q[(r, c)];
            }
        }
        sums
    }

    fn target(&self, g: usize) -> f64 {
        if g == self.center {
            1.0
        } else {
            0.0
        }
    }

    /// Projects `q` in place. A Hermitian input stays Hermitian.
    pub fn project(&self, q: &mut CMat) {
        let sums = self.group_sums(q);
        let corr: Vec<C64> = sums
            .iter()
            .enumerate()
            .map(|(g, s)| (s - self.target(g)) / self.counts[g])
            .collect();
        let n = self.l * self.l;
        for c in 0..n {
            for r in 0..n {
                q[(r, c)] -= corr[self.group(r, c)];
            }
        }
    }

    /// Largest absolute deviation of a group sum from its target.
    pub fn max_violation(&self, q: &CMat) -> f64 {
        self.group_sums(q)
            .iter()
            .enumerate()
            .map(|(g, s)| (s - self.target(g)).norm())
            .fold(0.0, f64::max)
    }
}

/// The assembled dual program.
#[derive(Debug, Clone)]
pub struct DualSdp {
    pub dims: Dimensions,
    pub y: Vec<C64>,
    pub qtilde: Vec<QtildeMap>,
    pub projector: ToeplitzProjector,
}

/// Feasibility measurements of a candidate `(q, Q_1..Q_NI)`.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub max_trace_violation: f64,
    pub min_eigenvalues: Vec<f64>,
}

pub fn assemble_dual_sdp(y: &[C64], bases: &[SubspaceBasis], dims: &Dimensions) -> Result<DualSdp> {
    if y.len() != dims.l() {
        return Err(Error::Dimension(format!(
            "observation of length {} for L = {}",
            y.len(),
            dims.l()
        )));
    }
    if bases.len() != dims.n_inputs() {
        return Err(Error::Dimension(format!(
            "{} bases for {} inputs",
            bases.len(),
            dims.n_inputs()
        )));
    }
    let qtilde = bases
        .iter()
        .zip(dims.k())
        .map(|(b, &kj)| {
            if b.cols() != kj {
                return Err(Error::Dimension(format!(
                    "basis has {} columns, expected {kj}",
                    b.cols()
                )));
            }
            QtildeMap::new(b, dims.n())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualSdp {
        dims: dims.clone(),
        y: y.to_vec(),
        qtilde,
        projector: ToeplitzProjector::new(dims.l()),
    })
}

impl DualSdp {
    pub fn n_inputs(&self) -> usize {
        self.qtilde.len()
    }

    /// Side of the PSD block of input `j`: `L² + K_j`.
    pub fn block_size(&self, j: usize) -> usize {
        self.dims.lifted_len() + self.qtilde[j].k()
    }

    pub fn objective(&self, q: &[C64]) -> f64 {
        self.y.iter().zip(q).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Diagonal start point `I / L²`, which meets every trace constraint.
    pub fn initial_gram(&self) -> CMat {
        let n = self.dims.lifted_len();
        let mut g = linalg::identity(n);
        for i in 0..n {
            g[(i, i)] /= n as f64;
        }
        g
    }

    /// The full block `[[Q, Q~^H], [Q~, I]]`.
    pub fn block(&self, j: usize, q: &[C64], gram: &CMat) -> CMat {
        let n = self.dims.lifted_len();
        let k = self.qtilde[j].k();
        let qt = self.qtilde[j].apply(q);
        assert_eq!(gram.shape(), (n, n));
        CMat::from_fn(n + k, n + k, |r, c| match (r < n, c < n) {
            (true, true) => gram[(r, c)],
            (false, true) => qt[(r - n, c)],
            (true, false) => qt[(c - n, r)].conj(),
            (false, false) => {
                if r == c {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
        })
    }

    pub fn feasibility(&self, q: &[C64], grams: &[CMat]) -> Result<Feasibility> {
        let mut max_trace_violation = 0.0f64;
        let mut min_eigenvalues = Vec::with_capacity(grams.len());
        for (j, g) in grams.iter().enumerate() {
            max_trace_violation = max_trace_violation.max(self.projector.max_violation(g));
            let blk = self.block(j, q, g);
            let ev = linalg::hermitian_eigenvalues(blk.as_ref())?;
            min_eigenvalues.push(ev[0]);
        }
        Ok(Feasibility {
            max_trace_violation,
            min_eigenvalues,
        })
    }

    /// Complex-to-real embedding of the whole program.
    pub fn embed_real(&self) -> RealProgram {
        embed_real(self)
    }
}

// ---------------------------------------------------------------------------
// Real embedding

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_hermitian(h: &CMat) -> Mat<f64> {
    let n = h.nrows();
    Mat::from_fn(2 * n, 2 * n, |r, c| {
        let v = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => v.re,
            (false, true) => v.im,
            (true, false) => -v.im,
        }
    })
}

/// Inverse of [`embed_hermitian`] on structured input (reads the left
/// column of blocks).
pub fn unembed_hermitian(x: &Mat<f64>) -> CMat {
    let n = x.nrows() / 2;
    CMat::from_fn(n, n, |r, c| C64::new(x[(r, c)], x[(r + n, c)]))
}

/// One real linear equation over the free variables and the entries of the
/// real PSD blocks: `sum coef * X_b[r, c] + sum coef * x_i = rhs`. Block terms
/// list both triangles of a symmetric coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealConstraint {
    pub block_terms: Vec<(usize, usize, usize, f64)>,
    pub free_terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Real conic program: maximize `objective . x` over free variables `x` and
/// real symmetric PSD blocks subject to linear equations.
#[derive(Debug, Clone)]
pub struct RealProgram {
    pub block_sizes: Vec<usize>,
    pub n_free: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<RealConstraint>,
}

/// Splits the complex equation `Tr(A H) = target` over Hermitian `H`, with
/// `A` given by its nonzero entries `(r, c, a_rc)`, into real equations on the
/// embedding of `H` in block `block`. Equations that vanish identically are
/// dropped, so Hermitian `A` with real target yields exactly one.
///
/// `free` adds `Tr(A H) - sum_t w_t z_t` terms where `z_t` is the complex
/// free variable stored at real indices `(t.0, t.1)` and `w_t = t.2`.
pub fn embed_constraint(
    block: usize,
    n: usize,
    a: &[(usize, usize, C64)],
    free: &[(usize, usize, C64)],
    target: C64,
) -> Vec<RealConstraint> {
    // Tr(A H) = Tr(P H) + i Tr(R H) with P = (A + A^H)/2, R = (A - A^H)/(2i)
    let mut herm_parts: [Vec<(usize, usize, C64)>; 2] = [Vec::new(), Vec::new()];
    for &(r, c, v) in a {
        // A[r, c] contributes A[r, c] H[c, r]; P gets v/2 at (r, c), conj(v)/2 at (c, r)
        herm_parts[0].push((r, c, v * 0.5));
        herm_parts[0].push((c, r, v.conj() * 0.5));
        herm_parts[1].push((r, c, v * C64::new(0.0, -0.5)));
        herm_parts[1].push((c, r, v.conj() * C64::new(0.0, 0.5)));
    }
    let mut out = Vec::with_capacity(2);
    for (part, terms) in herm_parts.iter().enumerate() {
        let mut merged: std::collections::BTreeMap<(usize, usize), C64> = Default::default();
        for &(r, c, v) in terms {
            *merged.entry((r, c)).or_default() += v;
        }
        let mut block_terms = Vec::new();
        for (&(r, c), &v) in &merged {
            if v.norm() < 1e-15 {
                continue;
            }
            // <Emb(P), X> = 2 Tr(P H); P[r, c] pairs with H[c, r]
            for &(rr, cc, val) in &[
                (c, r, v.re),
                (c + n, r + n, v.re),
                (c + n, r, -v.im),
                (c, r + n, v.im),
            ] {
                if val != 0.0 {
                    block_terms.push((block, rr, cc, val));
                }
            }
        }
        // free part: Tr(A H) - sum w z; real part of -w z for part 0, imaginary for part 1
        let mut free_terms = Vec::new();
        for &(ire, iim, w) in free {
            let (cre, cim) = if part == 0 {
                (-w.re, w.im)
            } else {
                (-w.im, -w.re)
            };
            if cre != 0.0 {
                free_terms.push((ire, 2.0 * cre));
            }
            if cim != 0.0 {
                free_terms.push((iim, 2.0 * cim));
            }
        }
        let rhs = 2.0 * if part == 0 { target.re } else { target.im };
        if block_terms.is_empty() && free_terms.is_empty() {
            continue;
        }
        out.push(RealConstraint {
            block_terms,
            free_terms,
            rhs,
        });
    }
    out
}

/// Real embedding of `sdp`. The free variables are `(Re q, Im q)`.
pub fn embed_real(sdp: &DualSdp) -> RealProgram {
    let l = sdp.dims.l();
    let nl = sdp.dims.lifted_len();
    let trace = build_trace_constraints(&sdp.dims);
    let mut constraints = Vec::new();
    let mut block_sizes = Vec::new();
    for (j, map) in sdp.qtilde.iter().enumerate() {
        let k = map.k();
        let n = nl + k;
        block_sizes.push(2 * n);
        // conjugate offsets give conjugate equations; keep one of each pair
        for tc in trace
            .iter()
            .filter(|t| t.d_outer > 0 || (t.d_outer == 0 && t.d_inner >= 0))
        {
            let a: Vec<_> = tc
                .entries
                .iter()
                .map(|&(r, c)| (c, r, C64::new(1.0, 0.0)))
                .collect();
            constraints.extend(embed_constraint(j, n, &a, &[], C64::new(tc.target, 0.0)));
        }
        for i in 0..k {
            for i2 in i..k {
                let a = [(nl + i2, nl + i, C64::new(1.0, 0.0))];
                let t = if i == i2 { 1.0 } else { 0.0 };
                constraints.extend(embed_constraint(j, n, &a, &[], C64::new(t, 0.0)));
            }
        }
        for i in 0..k {
            for col in 0..nl {
                let p = col / l;
                let w = map.coef(p, i, col % l);
                if w.norm() == 0.0 {
                    continue;
                }
                // H[nl + i, col] = q_p c[p, i, m]
                let a = [(col, nl + i, C64::new(1.0, 0.0))];
                constraints.extend(embed_constraint(
                    j,
                    n,
                    &a,
                    &[(p, l + p, w)],
                    C64::new(0.0, 0.0),
                ));
            }
        }
    }
    let objective = sdp
        .y
        .iter()
        .map(|v| v.re)
        .chain(sdp.y.iter().map(|v| v.im))
        .collect();
    RealProgram {
        block_sizes,
        n_free: 2 * l,
        objective,
        constraints,
    }
}

impl RealProgram {
    /// `(Re q, Im q)`.
    pub fn free_from_q(q: &[C64]) -> Vec<f64> {
        q.iter()
            .map(|v| v.re)
            .chain(q.iter().map(|v| v.im))
            .collect()
    }

    pub fn q_from_free(x: &[f64]) -> Vec<C64> {
        let l = x.len() / 2;
        (0..l).map(|p| C64::new(x[p], x[l + p])).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest absolute residual of the equations at `(x, blocks)`.
    pub fn max_residual(&self, x: &[f64], blocks: &[Mat<f64>]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c
                    .block_terms
                    .iter()
                    .map(|&(b, r, cc, v)| v * blocks[b][(r, cc)])
                    .sum::<f64>()
                    + c.free_terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>();
                (lhs - c.rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Writes the program in a line-oriented sparse text format:
    ///
    /// ```text
    /// blindsr2d-sdp 1
    /// blocks <count> <size>...
    /// free <count>
    /// objective <c_0> ... <c_{free-1}>
    /// constraints <count>
    /// rhs <i> <value>
    /// x <i> <var> <coef>
    /// m <i> <block> <row> <col> <coef>
    /// ```
    ///
    /// Indices are 0-based. `m` lines list only `row <= col`; the coefficient
    /// matrix is symmetric, so `(col, row)` carries the same value.
    pub fn write_sparse<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "blindsr2d-sdp 1")?;
        write!(w, "blocks {}", self.block_sizes.len())?;
        for s in &self.block_sizes {
            write!(w, " {s}")?;
        }
        writeln!(w)?;
        writeln!(w, "free {}", self.n_free)?;
        write!(w, "objective")?;
        for c in &self.objective {
            write!(w, " {c:e}")?;
        }
        writeln!(w)?;
        writeln!(w, "constraints {}", self.constraints.len())?;
        for (i, c) in self.constraints.iter().enumerate() {
            writeln!(w, "rhs {i} {:e}", c.rhs)?;
            for &(v, coef) in &c.free_terms {
                writeln!(w, "x {i} {v} {coef:e}")?;
            }
            for &(b, r, cc, coef) in &c.block_terms {
                if r <= cc {
                    writeln!(w, "m {i} {b} {r} {cc} {coef:e}")?;
                }
            }
        }
        Ok(())
    }
}
