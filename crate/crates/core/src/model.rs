//! Discrete signal model: dimensions, shift pairs, subspace bases, the
//! Dirichlet kernel, atoms, the lifted dictionary and the measurement map
//! `chi` with its adjoint.
//!
//! Inner products between matrix tuples follow `<A, B> = Tr(B^H A)`; the real
//! inner product is its real part.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

/// Attempts per shift before rejection sampling gives up.
pub const SEPARATION_ATTEMPTS: usize = 100_000;

// ---------------------------------------------------------------------------
// Dimensions

/// Problem sizes. `L = 2N + 1` is derived and always odd.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DimensionsRepr", into = "DimensionsRepr")]
pub struct Dimensions {
    n: usize,
    k: Vec<usize>,
    s: usize,
}

#[derive(Serialize, Deserialize)]
struct DimensionsRepr {
    n: usize,
    l: Option<usize>,
    n_inputs: Option<usize>,
    k: Vec<usize>,
    s: usize,
}

impl TryFrom<DimensionsRepr> for Dimensions {
    type Error = Error;

    fn try_from(r: DimensionsRepr) -> Result<Self> {
        if let Some(l) = r.l {
            if l != 2 * r.n + 1 {
                return Err(Error::Dimension(format!(
                    "l = {l} but 2n+1 = {}",
                    2 * r.n + 1
                )));
            }
        }
        if let Some(ni) = r.n_inputs {
            if ni != r.k.len() {
                return Err(Error::Dimension(format!(
                    "n_inputs = {ni} but {} subspace dimensions given",
                    r.k.len()
                )));
            }
        }
        Dimensions::new(r.n, r.k, r.s)
    }
}

impl From<Dimensions> for DimensionsRepr {
    fn from(d: Dimensions) -> Self {
        DimensionsRepr {
            n: d.n,
            l: Some(d.l()),
            n_inputs: Some(d.n_inputs()),
            k: d.k,
            s: d.s,
        }
    }
}

impl Dimensions {
    pub fn new(n: usize, k: Vec<usize>, s: usize) -> Result<Self> {
        let l = 2 * n + 1;
        if k.is_empty() {
            return Err(Error::Dimension("at least one input is required".into()));
        }
        if let Some(bad) = k.iter().find(|&&kj| kj == 0 || kj > l) {
            return Err(Error::Dimension(format!(
                "subspace dimension {bad} outside 1..={l}"
            )));
        }
        if s == 0 {
            return Err(Error::Dimension(
                "at least one shift pair is required".into(),
            ));
        }
        Ok(Dimensions { n, k, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        2 * self.n + 1
    }

    pub fn lifted_len(&self) -> usize {
        self.l() * self.l()
    }

    pub fn n_inputs(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[usize] {
        &self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn with_s(&self, s: usize) -> Result<Self> {
        Dimensions::new(self.n, self.k.clone(), s)
    }
}

/// Flattened position of the two-dimensional index `(outer, inner)`, both in
/// `-N..=N`. The outer index runs along the frequency axis.
#[inline]
pub fn lifted_index(outer: i64, inner: i64, n: usize) -> usize {
    let l = 2 * n as i64 + 1;
    ((outer + n as i64) * l + (inner + n as i64)) as usize
}

/// Reduces an integer index into `-N..=N` modulo `L`.
#[inline]
pub fn wrap_index(i: i64, n: usize) -> i64 {
    let l = 2 * n as i64 + 1;
    (i + n as i64).rem_euclid(l) - n as i64
}

/// Iterator over `-N..=N`.
pub fn centered(n: usize) -> impl Iterator<Item = i64> + Clone {
    let n = n as i64;
    -n..=n
}

// ---------------------------------------------------------------------------
// Shift pairs

/// Normalized time shift `tau` and frequency shift `nu`, both kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPair {
    pub tau: f64,
    pub nu: f64,
}

/// Reduces a real number into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two points of the unit circle.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl ShiftPair {
    pub fn new(tau: f64, nu: f64) -> Self {
        ShiftPair {
            tau: wrap_unit(tau),
            nu: wrap_unit(nu),
        }
    }

    /// Componentwise wrap-around differences `(d_tau, d_nu)`.
    pub fn wrap_diffs(&self, other: &ShiftPair) -> (f64, f64) {
        (
            wrap_distance(self.tau, other.tau),
            wrap_distance(self.nu, other.nu),
        )
    }

    pub fn wrap_dist_inf(&self, other: &ShiftPair) -> f64 {
        let (a, b) = self.wrap_diffs(other);
        a.max(b)
    }

    pub fn wrap_dist(&self, other: &ShiftPair) -> f64 {
        let (a, b) = self.wrap_diffs(other);
        a.hypot(b)
    }
}

// ---------------------------------------------------------------------------
// Subspace bases

/// Known basis `D_j` of shape `L x K_j`; row `l` (stored at `l + N`) is
/// `d_l^H`, so the input samples are `x_j = D_j h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub entries: CMat,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<C64>,
}

impl Serialize for SubspaceBasis {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let m = &self.entries;
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SubspaceBasis {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(de)?;
        if r.data.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom(format!(
                "basis has {} entries, expected {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Ok(SubspaceBasis {
            entries: CMat::from_fn(r.rows, r.cols, |i, j| r.data[i * r.cols + j]),
        })
    }
}

impl SubspaceBasis {
    pub fn new(entries: CMat) -> Self {
        SubspaceBasis { entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Entry `i` of row `l` of `D_j`, i.e. `conj([d_l]_i)`.
    #[inline]
    pub fn at(&self, l: i64, i: usize, n: usize) -> C64 {
        self.entries[((wrap_index(l, n) + n as i64) as usize, i)]
    }

    /// `x = D h`, indexed `-N..=N` at offset `N`.
    pub fn signal(&self, h: &[C64]) -> Vec<C64> {
        linalg::mat_vec(self.entries.as_ref(), h)
    }
}

fn check_bases(bases: &[SubspaceBasis], dims: &Dimensions) -> Result<()> {
    if bases.len() != dims.n_inputs() {
        return Err(Error::Dimension(format!(
            "{} bases for {} inputs",
            bases.len(),
            dims.n_inputs()
        )));
    }
    for (j, (b, &kj)) in bases.iter().zip(dims.k()).enumerate() {
        if b.rows() != dims.l() || b.cols() != kj {
            return Err(Error::Dimension(format!(
                "basis {j} is {}x{}, expected {}x{}",
                b.rows(),
                b.cols(),
                dims.l(),
                kj
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Model instance

/// Ground truth and observation of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInstance {
    pub dims: Dimensions,
    pub bases: Vec<SubspaceBasis>,
    pub orientations: Vec<Vec<C64>>,
    pub amplitudes: Vec<C64>,
    pub shifts: Vec<ShiftPair>,
    pub y: Vec<C64>,
}

impl ModelInstance {
    /// Builds an instance and synthesizes its observation.
    pub fn new(
        dims: Dimensions,
        bases: Vec<SubspaceBasis>,
        orientations: Vec<Vec<C64>>,
        amplitudes: Vec<C64>,
        shifts: Vec<ShiftPair>,
    ) -> Result<Self> {
        let mut inst = ModelInstance {
            dims,
            bases,
            orientations,
            amplitudes,
            shifts,
            y: Vec::new(),
        };
        inst.validate_fields()?;
        inst.y = synthesize_observation(&inst)?;
        Ok(inst)
    }

    fn validate_fields(&self) -> Result<()> {
        check_bases(&self.bases, &self.dims)?;
        if self.orientations.len() != self.dims.n_inputs() {
            return Err(Error::Dimension(
                "one orientation per input is required".into(),
            ));
        }
        for (j, (h, &kj)) in self.orientations.iter().zip(self.dims.k()).enumerate() {
            if h.len() != kj {
                return Err(Error::Dimension(format!(
                    "orientation {j} has length {}, expected {kj}",
                    h.len()
                )));
            }
        }
        if self.amplitudes.len() != self.dims.s() || self.shifts.len() != self.dims.s() {
            return Err(Error::Dimension(format!(
                "{} amplitudes and {} shifts for S = {}",
                self.amplitudes.len(),
                self.shifts.len(),
                self.dims.s()
            )));
        }
        Ok(())
    }

    /// Checks shapes, including the observation length.
    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        if self.y.len() != self.dims.l() {
            return Err(Error::Dimension(format!(
                "observation has length {}, expected {}",
                self.y.len(),
                self.dims.l()
            )));
        }
        Ok(())
    }

    /// Input samples `x_j = D_j h_j`.
    pub fn input_signals(&self) -> Vec<Vec<C64>> {
        self.bases
            .iter()
            .zip(&self.orientations)
            .map(|(d, h)| d.signal(h))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: ModelInstance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }
}

// ---------------------------------------------------------------------------
// Kernel and atoms

/// `D_N(t) = (1/L) sum_{m=-N..N} exp(i 2 pi t m)`, which is real and
/// 1-periodic.
pub fn dirichlet_kernel(t: f64, n: usize) -> f64 {
    let l = (2 * n + 1) as f64;
    let r = t - t.round();
    let s = (PI * r).sin();
    if s.abs() < 1e-8 {
        let mut acc = 1.0;
        for m in 1..=n {
            acc += 2.0 * (2.0 * PI * r * m as f64).cos();
        }
        acc / l
    } else {
        (l * PI * r).sin() / (l * s)
    }
}

/// Kernel samples `D_N(i/L - x)` for `i = -N..=N`.
pub fn kernel_row(x: f64, n: usize) -> Vec<f64> {
    let l = (2 * n + 1) as f64;
    centered(n)
        .map(|i| dirichlet_kernel(i as f64 / l - x, n))
        .collect()
}

/// Separable factors of the atom: `(nu_factor, tau_factor)`, with
/// `a[(m, l)] = nu_factor[m] * tau_factor[l]`.
pub fn atom_factors(s: &ShiftPair, n: usize) -> (Vec<f64>, Vec<f64>) {
    (kernel_row(s.nu, n), kernel_row(s.tau, n))
}

/// Real atom `a(s)` of length `L²` with entry `(m, l)` equal to
/// `D_N(l/L - tau) D_N(m/L - nu)`.
pub fn build_atom_real(s: &ShiftPair, n: usize) -> Vec<f64> {
    let (fm, fl) = atom_factors(s, n);
    let mut out = Vec::with_capacity(fm.len() * fl.len());
    for a in &fm {
        for b in &fl {
            out.push(a * b);
        }
    }
    out
}

/// The atom as a complex vector (its entries are real).
pub fn build_atom(s: &ShiftPair, dims: &Dimensions) -> Vec<C64> {
    build_atom_real(s, dims.n())
        .into_iter()
        .map(|v| C64::new(v, 0.0))
        .collect()
}

// ---------------------------------------------------------------------------
// Lifted dictionary and the measurement map

/// Blocks `D~_p^j` of shape `L² x K_j` with rows
/// `[D~_p^j]_(m,l) = exp(i 2 pi m p / L) d_{p-l}^H`, `p - l` wrapped into
/// `-N..=N`.
#[derive(Debug, Clone)]
pub struct LiftedDictionary {
    n: usize,
    /// `blocks[j][p + N]`.
    blocks: Vec<Vec<CMat>>,
}

pub fn build_lifted_dictionary(
    bases: &[SubspaceBasis],
    dims: &Dimensions,
) -> Result<LiftedDictionary> {
    check_bases(bases, dims)?;
    let n = dims.n();
    let l = dims.l();
    let lf = l as f64;
    let blocks = bases
        .iter()
        .map(|basis| {
            centered(n)
                .map(|p| {
                    CMat::from_fn(l * l, basis.cols(), |row, i| {
                        let m = (row / l) as i64 - n as i64;
                        let li = (row % l) as i64 - n as i64;
                        let phase = C64::from_polar(1.0, 2.0 * PI * (m * p) as f64 / lf);
                        phase * basis.at(p - li, i, n)
                    })
                })
                .collect()
        })
        .collect();
    Ok(LiftedDictionary { n, blocks })
}

impl LiftedDictionary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        2 * self.n + 1
    }

    pub fn n_inputs(&self) -> usize {
        self.blocks.len()
    }

    pub fn k(&self, j: usize) -> usize {
        self.blocks[j][0].ncols()
    }

    /// `D~_p^j` for `p` in `-N..=N`.
    pub fn block(&self, j: usize, p: i64) -> &CMat {
        &self.blocks[j][(p + self.n as i64) as usize]
    }

    /// Sum over inputs of `||D_j||_F²` times `L`: the constant `c` with
    /// `chi chi^* = c I`.
    pub fn gram_scale(&self) -> f64 {
        // each block holds a row-permuted, phase-rotated copy of D_j repeated L times
        self.blocks
            .iter()
            .map(|bj| linalg::frobenius_sq(bj[0].as_ref()))
            .sum()
    }
}

/// Tuple of matrices `B_j` of shape `K_j x L²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    pub parts: Vec<CMat>,
}

impl MatrixTuple {
    pub fn zeros(dims: &Dimensions) -> Self {
        MatrixTuple {
            parts: dims
                .k()
                .iter()
                .map(|&kj| linalg::zeros(kj, dims.lifted_len()))
                .collect(),
        }
    }

    /// `Re <self, other> = Re sum_j Tr(other_j^H self_j)`.
    pub fn re_inner(&self, other: &MatrixTuple) -> f64 {
        assert_eq!(self.parts.len(), other.parts.len());
        let mut acc = 0.0;
        for (a, b) in self.parts.iter().zip(&other.parts) {
            assert_eq!(a.shape(), b.shape());
            for c in 0..a.ncols() {
                for r in 0..a.nrows() {
                    acc += (b[(r, c)].conj() * a[(r, c)]).re;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| linalg::frobenius_sq(p.as_ref()))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> MatrixTuple {
        MatrixTuple {
            parts: self
                .parts
                .iter()
                .map(|p| CMat::from_fn(p.nrows(), p.ncols(), |r, c| p[(r, c)] * alpha))
                .collect(),
        }
    }

    pub fn check(&self, dims: &Dimensions) -> Result<()> {
        if self.parts.len() != dims.n_inputs() {
            return Err(Error::Dimension(format!(
                "tuple has {} parts for {} inputs",
                self.parts.len(),
                dims.n_inputs()
            )));
        }
        for (j, (p, &kj)) in self.parts.iter().zip(dims.k()).enumerate() {
            if p.nrows() != kj || p.ncols() != dims.lifted_len() {
                return Err(Error::Dimension(format!(
                    "part {j} is {}x{}, expected {kj}x{}",
                    p.nrows(),
                    p.ncols(),
                    dims.lifted_len()
                )));
            }
        }
        Ok(())
    }
}

/// `chi(B)_p = sum_j Tr(D~_p^j B_j)`.
pub fn chi_forward(b: &MatrixTuple, dict: &LiftedDictionary) -> Result<Vec<C64>> {
    if b.parts.len() != dict.n_inputs() {
        return Err(Error::Dimension(format!(
            "tuple has {} parts, dictionary {} inputs",
            b.parts.len(),
            dict.n_inputs()
        )));
    }
    let l = dict.l();
    for (j, part) in b.parts.iter().enumerate() {
        if part.nrows() != dict.k(j) || part.ncols() != l * l {
            return Err(Error::Dimension(format!(
                "part {j} is {}x{}, expected {}x{}",
                part.nrows(),
                part.ncols(),
                dict.k(j),
                l * l
            )));
        }
    }
    let n = dict.n();
    Ok(centered(n)
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, part) in b.parts.iter().enumerate() {
                let blk = dict.block(j, p);
                for i in 0..blk.ncols() {
                    for r in 0..blk.nrows() {
                        acc += blk[(r, i)] * part[(i, r)];
                    }
                }
            }
            acc
        })
        .collect())
}

/// `chi^*(q)_j = sum_p q_p (D~_p^j)^H`.
pub fn chi_adjoint(q: &[C64], dict: &LiftedDictionary) -> Result<MatrixTuple> {
    let l = dict.l();
    if q.len() != l {
        return Err(Error::Dimension(format!(
            "vector of length {} for L = {l}",
            q.len()
        )));
    }
    let n = dict.n();
    let parts = (0..dict.n_inputs())
        .map(|j| {
            let mut out = linalg::zeros(dict.k(j), l * l);
            for (pi, p) in centered(n).enumerate() {
                let blk = dict.block(j, p);
                let qp = q[pi];
                for r in 0..blk.nrows() {
                    for i in 0..blk.ncols() {
                        out[(i, r)] += qp * blk[(r, i)].conj();
                    }
                }
            }
            out
        })
        .collect();
    Ok(MatrixTuple { parts })
}

/// Lifted ground truth `B_j = sum_k b_k h_j a(s_k)^H`.
pub fn lifted_truth(inst: &ModelInstance) -> MatrixTuple {
    let n = inst.dims.n();
    let atoms: Vec<Vec<f64>> = inst.shifts.iter().map(|s| build_atom_real(s, n)).collect();
    let parts = inst
        .orientations
        .iter()
        .map(|h| {
            CMat::from_fn(h.len(), inst.dims.lifted_len(), |i, c| {
                inst.amplitudes
                    .iter()
                    .zip(&atoms)
                    .map(|(bk, a)| bk * h[i] * a[c])
                    .sum()
            })
        })
        .collect();
    MatrixTuple { parts }
}

// ---------------------------------------------------------------------------
// Synthesis

/// Observation from the double sum over `m` and `l`, with the time index
/// shifted by `offset` periods (the result does not depend on it because the
/// inputs are `L`-periodic).
pub(crate) fn synthesize_double_sum(inst: &ModelInstance, offset: i64) -> Vec<C64> {
    let n = inst.dims.n();
    let lf = inst.dims.l() as f64;
    let lw = inst.dims.l() as i64;
    let xs = inst.input_signals();
    centered(n)
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for (bk, s) in inst.amplitudes.iter().zip(&inst.shifts) {
                let doppler = C64::from_polar(1.0, 2.0 * PI * p as f64 * s.nu);
                let mut inner = C64::new(0.0, 0.0);
                for x in &xs {
                    for m in centered(n) {
                        for l0 in centered(n) {
                            let l = l0 + offset * lw;
                            let xl = x[(wrap_index(l, n) + n as i64) as usize];
                            let arg =
                                2.0 * PI * (m * (p - l)) as f64 / lf - 2.0 * PI * m as f64 * s.tau;
                            inner += xl * C64::from_polar(1.0, arg);
                        }
                    }
                }
                acc += bk * doppler * inner / lf;
            }
            acc
        })
        .collect()
}

/// Observation `y(p)`, `p = -N..=N`, from the sampled double-sum model. The
/// `y` field of `inst` is ignored.
pub fn synthesize_observation(inst: &ModelInstance) -> Result<Vec<C64>> {
    inst.validate_fields()?;
    Ok(synthesize_double_sum(inst, 0))
}

/// The same observation written with the Dirichlet kernel:
/// `y(p) = sum_k b_k e^{i 2 pi p nu_k} sum_j sum_l x_j(l) D_N((p-l)/L - tau_k)`.
pub fn synthesize_dirichlet(inst: &ModelInstance) -> Result<Vec<C64>> {
    inst.validate_fields()?;
    let n = inst.dims.n();
    let lf = inst.dims.l() as f64;
    let xs = inst.input_signals();
    Ok(centered(n)
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for (bk, s) in inst.amplitudes.iter().zip(&inst.shifts) {
                let mut inner = C64::new(0.0, 0.0);
                for x in &xs {
                    for (li, l) in centered(n).enumerate() {
                        inner += x[li] * dirichlet_kernel((p - l) as f64 / lf - s.tau, n);
                    }
                }
                acc += bk * C64::from_polar(1.0, 2.0 * PI * p as f64 * s.nu) * inner;
            }
            acc
        })
        .collect())
}

/// The observation through the lifted map, `chi(B)` with the lifted truth.
pub fn synthesize_lifted(inst: &ModelInstance, dict: &LiftedDictionary) -> Result<Vec<C64>> {
    inst.validate_fields()?;
    chi_forward(&lifted_truth(inst), dict)
}

// ---------------------------------------------------------------------------
// Random instances

/// Separation used when none is configured: `2.5 / N` in the wrap-around
/// infinity norm.
pub fn default_min_separation(n: usize) -> f64 {
    2.5 / n.max(1) as f64
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

struct Draws {
    bases: Vec<SubspaceBasis>,
    orientations: Vec<Vec<C64>>,
    amplitudes: Vec<C64>,
}

fn draw_known(dims: &Dimensions, rng: &mut ChaCha8Rng) -> Draws {
    let l = dims.l();
    let bases = dims
        .k()
        .iter()
        .map(|&kj| {
            let mut vals = Vec::with_capacity(l * kj);
            for _ in 0..l * kj {
                vals.push(complex_gaussian(rng));
            }
            SubspaceBasis::new(CMat::from_fn(l, kj, |i, c| vals[i * kj + c]))
        })
        .collect();
    let orientations = dims
        .k()
        .iter()
        .map(|&kj| {
            let h: Vec<C64> = (0..kj).map(|_| complex_gaussian(rng)).collect();
            let nrm = linalg::vec_norm(&h);
            h.into_iter().map(|v| v / nrm).collect()
        })
        .collect();
    let amplitudes = (0..dims.s())
        .map(|_| {
            let b = complex_gaussian(rng);
            b / b.norm()
        })
        .collect();
    Draws {
        bases,
        orientations,
        amplitudes,
    }
}

/// Random instance: Gaussian bases, unit-norm orientations, unit-modulus
/// amplitudes and uniformly drawn shift pairs pairwise separated by at least
/// `min_separation` (wrap-around infinity norm). Deterministic in `seed`.
pub fn generate_random_instance(
    dims: &Dimensions,
    seed: u64,
    min_separation: f64,
) -> Result<ModelInstance> {
    if !(0.0..0.5).contains(&min_separation) {
        return Err(Error::InvalidArgument(format!(
            "minimum separation {min_separation} outside [0, 0.5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = draw_known(dims, &mut rng);
    let mut shifts: Vec<ShiftPair> = Vec::with_capacity(dims.s());
    let mut attempts = 0usize;
    while shifts.len() < dims.s() {
        if attempts == SEPARATION_ATTEMPTS {
            return Err(Error::SeparationInfeasible {
                shifts: dims.s(),
                min_separation,
                attempts,
            });
        }
        attempts += 1;
        let cand = ShiftPair::new(rng.gen::<f64>(), rng.gen::<f64>());
        if shifts
            .iter()
            .all(|s| s.wrap_dist_inf(&cand) >= min_separation)
        {
            shifts.push(cand);
            attempts = 0;
        }
    }
    ModelInstance::new(dims.clone(), d.bases, d.orientations, d.amplitudes, shifts)
}

/// Random bases, orientations and amplitudes with the given shift pairs.
pub fn instance_with_shifts(
    dims: &Dimensions,
    seed: u64,
    shifts: &[ShiftPair],
) -> Result<ModelInstance> {
    let dims = dims.with_s(shifts.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = draw_known(&dims, &mut rng);
    ModelInstance::new(dims, d.bases, d.orientations, d.amplitudes, shifts.to_vec())
}
