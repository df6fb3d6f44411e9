//! Operators on tensor products of per-site Hilbert spaces.
//!
//! The tensor-factor order of a [`Volume`] is the ascending order of its site
//! indices, which is the lattice's lexicographic point order. The first site is
//! the most significant factor: with two qubits the basis runs
//! `|00>, |01>, |10>, |11>`. Every embedding goes through [`embed`] or
//! [`apply_local`] so that this convention lives in exactly one place.

use std::collections::HashMap;

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMatrix = Mat<c64>;

/// Largest Hilbert-space dimension handled with dense matrices.
pub const DENSE_LIMIT: usize = 4096;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on `max |U U^† - I|` for accepting a unitary.
pub const UNITARY_TOL: f64 = 1e-10;

pub fn zeros(n: usize) -> CMatrix {
    Mat::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::identity(n, n)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    Mat::from_fn(values.len(), values.len(), |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn complex_diag(values: &[c64]) -> CMatrix {
    Mat::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { c64::new(0.0, 0.0) })
}

/// Builds a matrix from row-major real and imaginary parts.
pub fn from_parts(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<CMatrix> {
    let n = re.len();
    if re.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("matrix_re must be square".into()));
    }
    if let Some(im) = im {
        if im.len() != n || im.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix_im must match matrix_re".into()));
        }
    }
    let m = Mat::from_fn(n, n, |i, j| c64::new(re[i][j], im.map_or(0.0, |im| im[i][j])));
    check_finite(&m)?;
    Ok(m)
}

pub fn pauli_x() -> CMatrix {
    let o = c64::new(0.0, 0.0);
    let l = c64::new(1.0, 0.0);
    Mat::from_fn(2, 2, |i, j| if i != j { l } else { o })
}

pub fn pauli_y() -> CMatrix {
    let mut m = zeros(2);
    m[(0, 1)] = c64::new(0.0, -1.0);
    m[(1, 0)] = c64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> CMatrix {
    real_diag(&[1.0, -1.0])
}

/// `S^+ = |up><down|` with basis index 0 = up.
pub fn sigma_plus() -> CMatrix {
    let mut m = zeros(2);
    m[(0, 1)] = c64::new(1.0, 0.0);
    m
}

pub fn sigma_minus() -> CMatrix {
    let mut m = zeros(2);
    m[(1, 0)] = c64::new(1.0, 0.0);
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors.iter().skip(1).fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint().to_owned()
}

pub fn scale(a: &CMatrix, c: c64) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * c)
}

pub fn trace(a: &CMatrix) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> c64 {
    let n = a.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..n {
        let bcol = b.col_as_slice(j);
        for (k, bk) in bcol.iter().enumerate() {
            acc += a[(j, k)] * bk;
        }
    }
    acc
}

pub fn max_abs(a: &CMatrix) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for z in a.col_as_slice(j) {
            m = m.max(z.norm());
        }
    }
    m
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.norm_l2()
}

pub fn check_finite(a: &CMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        if a.col_as_slice(j).iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

fn check_square(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    Ok(())
}

fn check_same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} vs {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols())));
    }
    Ok(())
}

pub fn is_diagonal(a: &CMatrix) -> bool {
    for j in 0..a.ncols() {
        for (i, z) in a.col_as_slice(j).iter().enumerate() {
            if i != j && (z.re != 0.0 || z.im != 0.0) {
                return false;
            }
        }
    }
    true
}

/// `max |A - A^†| / max(max |A|, tiny)`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut d = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    let s = max_abs(a);
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.nrows() == a.ncols() && hermitian_defect(a) <= tol
}

fn hermitian_part(a: &CMatrix) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Operator (spectral) norm. Hermitian input goes through the eigensolver,
/// everything else through the singular value decomposition.
pub fn op_norm(a: &CMatrix) -> Result<f64> {
    check_square(a)?;
    check_finite(a)?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    if is_diagonal(a) {
        return Ok((0..a.nrows()).map(|i| a[(i, i)].norm()).fold(0.0, f64::max));
    }
    if hermitian_defect(a) <= 1e-14 {
        let ev = hermitian_part(a).self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        return Ok(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let sv = a.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    check_same_shape(a, b)?;
    Ok(a * b - b * a)
}

/// `U A U^†`, after checking that `U` is unitary.
pub fn conjugate_unitary(u: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    check_square(u)?;
    check_same_shape(u, a)?;
    if is_diagonal(u) {
        let d: Vec<c64> = (0..u.nrows()).map(|i| u[(i, i)]).collect();
        let worst = d.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        if worst > UNITARY_TOL {
            return Err(Error::NotUnitary(worst));
        }
        return Ok(conjugate_diagonal(&d, a));
    }
    let defect = max_abs(&(u * u.adjoint() - identity(u.nrows())));
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(u * a * u.adjoint())
}

/// `D A D^†` for a diagonal `D` given by its entries.
pub fn conjugate_diagonal(d: &[c64], a: &CMatrix) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| d[i] * a[(i, j)] * d[j].conj())
}

/// Spectral decomposition `H = V diag(values) V^†`, values nondecreasing.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        check_square(h)?;
        check_finite(h)?;
        let defect = hermitian_defect(h);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let n = h.nrows();
        if is_diagonal(h) {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re).then(i.cmp(&j)));
            let values = order.iter().map(|&i| h[(i, i)].re).collect();
            let vectors =
                Mat::from_fn(n, n, |i, j| if order[j] == i { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
            return Ok(Self { values, vectors });
        }
        let eig = hermitian_part(h).self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values = (0..n).map(|i| eig.S()[i].re).collect();
        Ok(Self { values, vectors: eig.U().to_owned() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(values)) V^†`.
    pub fn map(&self, f: impl Fn(f64) -> c64) -> CMatrix {
        let fv: Vec<c64> = self.values.iter().map(|&v| f(v)).collect();
        self.reconstruct(&fv)
    }

    pub fn reconstruct(&self, fv: &[c64]) -> CMatrix {
        let n = self.dim();
        let v = &self.vectors;
        let scaled = Mat::from_fn(n, n, |i, j| v[(i, j)] * fv[j]);
        &scaled * v.adjoint()
    }

    /// `V^† A V`, i.e. `A` in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }

    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.vectors * a * self.vectors.adjoint()
    }

    pub fn spread(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// `exp(scale * H)` for Hermitian `H`.
pub fn hermitian_exp(h: &CMatrix, scale: c64) -> Result<CMatrix> {
    check_square(h)?;
    if is_diagonal(h) {
        check_finite(h)?;
        let d: Vec<c64> = (0..h.nrows()).map(|i| (scale * h[(i, i)].re).exp()).collect();
        return Ok(complex_diag(&d));
    }
    let eig = HermitianEigen::new(h)?;
    Ok(eig.map(|v| (scale * v).exp()))
}

pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug)]
pub struct PsdLog {
    pub log: CMatrix,
    /// Number of eigenvalues raised to the floor before taking the log.
    pub clamped: usize,
    pub eigen: HermitianEigen,
}

/// Logarithm of a positive semidefinite matrix with eigenvalues clamped at `floor`.
pub fn matrix_log_psd(rho: &CMatrix, floor: f64) -> Result<PsdLog> {
    let eigen = HermitianEigen::new(rho)?;
    let scale = eigen.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lowest = eigen.values.first().copied().unwrap_or(0.0);
    if lowest < -1e-10 * scale {
        return Err(Error::NotPositive(lowest));
    }
    let clamped = eigen.values.iter().filter(|&&v| v < floor).count();
    let log = eigen.map(|v| c64::new(v.max(floor).ln(), 0.0));
    Ok(PsdLog { log, clamped, eigen })
}

/// An ordered set of sites with their local Hilbert-space dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Volume {
    sites: Vec<usize>,
    dims: Vec<usize>,
    total_dim: usize,
}

impl Volume {
    pub fn new(sites: &[usize], dims: &[usize]) -> Result<Self> {
        if sites.len() != dims.len() {
            return Err(Error::DimensionMismatch("one local dimension per site required".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("local dimensions must be positive".into()));
        }
        let mut pairs: Vec<(usize, usize)> = sites.iter().copied().zip(dims.iter().copied()).collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate site in volume".into()));
        }
        let total_dim = pairs
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.1))
            .ok_or_else(|| Error::Overflow("Hilbert-space dimension".into()))?;
        Ok(Self { sites: pairs.iter().map(|p| p.0).collect(), dims: pairs.iter().map(|p| p.1).collect(), total_dim })
    }

    pub fn uniform(sites: &[usize], d: usize) -> Result<Self> {
        Self::new(sites, &vec![d; sites.len()])
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    pub fn contains_all(&self, sites: &[usize]) -> bool {
        sites.iter().all(|&s| self.position(s).is_some())
    }

    pub fn dim_of(&self, site: usize) -> Option<usize> {
        self.position(site).map(|p| self.dims[p])
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for p in (0..self.dims.len().saturating_sub(1)).rev() {
            s[p] = s[p + 1] * self.dims[p + 1];
        }
        s
    }

    /// Restriction to a subset of sites.
    pub fn subvolume(&self, sites: &[usize]) -> Result<Self> {
        let dims = sites.iter().map(|&s| self.dim_of(s).ok_or(Error::SiteOutOfRange(s))).collect::<Result<Vec<_>>>()?;
        Self::new(sites, &dims)
    }

    /// Flat-index offsets of every digit combination on `positions`, first
    /// position most significant.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &p in positions {
            let mut next = Vec::with_capacity(out.len() * self.dims[p]);
            for &base in &out {
                for digit in 0..self.dims[p] {
                    next.push(base + digit * strides[p]);
                }
            }
            out = next;
        }
        out
    }

    fn complement(&self, positions: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|p| !positions.contains(p)).collect()
    }
}

/// An operator together with the sites it acts on.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    support: Vec<usize>,
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl LocalOperator {
    /// `support` may be given in any order; the matrix is interpreted in that
    /// order and permuted into canonical (ascending) order.
    pub fn new(support: &[usize], dims: &[usize], matrix: CMatrix) -> Result<Self> {
        if support.len() != dims.len() {
            return Err(Error::DimensionMismatch("one local dimension per support site required".into()));
        }
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let total: usize = dims.iter().product();
        if matrix.nrows() != total {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {0}x{0} but the support has dimension {total}",
                matrix.nrows()
            )));
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by_key(|&i| support[i]);
        if order.windows(2).any(|w| support[w[0]] == support[w[1]]) {
            return Err(Error::InvalidArgument("duplicate site in support".into()));
        }
        let sorted_support: Vec<usize> = order.iter().map(|&i| support[i]).collect();
        let sorted_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
        let matrix = if order.iter().enumerate().all(|(i, &o)| i == o) {
            matrix
        } else {
            permute_factors(&matrix, dims, &order)
        };
        Ok(Self { support: sorted_support, dims: sorted_dims, matrix })
    }

    pub fn identity_on(support: &[usize], dims: &[usize]) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(support, dims, identity(n))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn volume(&self) -> Volume {
        Volume::new(&self.support, &self.dims).expect("support was validated on construction")
    }

    pub fn norm(&self) -> Result<f64> {
        op_norm(&self.matrix)
    }

    pub fn is_self_adjoint(&self) -> bool {
        hermitian_defect(&self.matrix) <= 1e-12
    }

    pub fn scaled(&self, c: c64) -> Self {
        Self { support: self.support.clone(), dims: self.dims.clone(), matrix: scale(&self.matrix, c) }
    }

    /// The same operator written on a larger site set.
    pub fn extend_to(&self, vol: &Volume) -> Result<Self> {
        let m = embed(self, vol)?;
        Ok(Self { support: vol.sites().to_vec(), dims: vol.dims().to_vec(), matrix: m })
    }
}

/// Reorders tensor factors: new factor `i` is old factor `order[i]`.
fn permute_factors(m: &CMatrix, dims: &[usize], order: &[usize]) -> CMatrix {
    let n = m.nrows();
    let k = dims.len();
    let mut old_strides = vec![1usize; k];
    for p in (0..k.saturating_sub(1)).rev() {
        old_strides[p] = old_strides[p + 1] * dims[p + 1];
    }
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    // map[new_index] = old_index
    let map: Vec<usize> = (0..n)
        .map(|mut idx| {
            let mut old = 0;
            for i in (0..k).rev() {
                let digit = idx % new_dims[i];
                idx /= new_dims[i];
                old += digit * old_strides[order[i]];
            }
            old
        })
        .collect();
    Mat::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

/// Index tables placing an operator inside a volume.
#[derive(Clone, Debug)]
pub struct Placement {
    /// Flat offsets of the operator's own basis states.
    local: Vec<usize>,
    /// Flat offsets of the spectator basis states.
    rest: Vec<usize>,
}

impl Placement {
    pub fn new(op_support: &[usize], op_dims: &[usize], vol: &Volume) -> Result<Self> {
        let mut positions = Vec::with_capacity(op_support.len());
        for (&s, &d) in op_support.iter().zip(op_dims) {
            let p = vol.position(s).ok_or_else(|| Error::SupportNotContained {
                support: op_support.to_vec(),
                volume: vol.sites().to_vec(),
            })?;
            if vol.dims()[p] != d {
                return Err(Error::DimensionMismatch(format!(
                    "site {s} has dimension {} in the volume",
                    vol.dims()[p]
                )));
            }
            positions.push(p);
        }
        Ok(Self { local: vol.offsets(&positions), rest: vol.offsets(&vol.complement(&positions)) })
    }
}

/// `A ⊗ I` on the volume, in the volume's canonical factor order.
pub fn embed(op: &LocalOperator, vol: &Volume) -> Result<CMatrix> {
    let mut out = zeros(vol.total_dim());
    embed_add(op, vol, c64::new(1.0, 0.0), &mut out)?;
    Ok(out)
}

/// `target += coeff * embed(op, vol)` without materializing the embedding.
pub fn embed_add(op: &LocalOperator, vol: &Volume, coeff: c64, target: &mut CMatrix) -> Result<()> {
    if target.nrows() != vol.total_dim() || target.ncols() != vol.total_dim() {
        return Err(Error::DimensionMismatch("target does not match the volume".into()));
    }
    let place = Placement::new(&op.support, &op.dims, vol)?;
    let a = &op.matrix;
    for &base in &place.rest {
        for (t, &ot) in place.local.iter().enumerate() {
            for (s, &os) in place.local.iter().enumerate() {
                target[(base + os, base + ot)] += coeff * a[(s, t)];
            }
        }
    }
    Ok(())
}

/// Adds `embed(op) * v` into `out` without materializing the embedding.
pub fn apply_local(op: &LocalOperator, place: &Placement, v: &[c64], out: &mut [c64]) {
    let a = &op.matrix;
    let k = place.local.len();
    let mut gathered = vec![c64::new(0.0, 0.0); k];
    for &base in &place.rest {
        for (t, &ot) in place.local.iter().enumerate() {
            gathered[t] = v[base + ot];
        }
        for (s, &os) in place.local.iter().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for (t, g) in gathered.iter().enumerate() {
                acc += a[(s, t)] * g;
            }
            out[base + os] += acc;
        }
    }
}

/// Diagonal of `Σ_x diag_x` where each `diag_x` acts on the single site `x`.
pub fn onsite_diagonal_sum(vol: &Volume, parts: &[(usize, Vec<f64>)]) -> Result<Vec<f64>> {
    let strides = vol.strides();
    let mut out = vec![0.0; vol.total_dim()];
    for (site, diag) in parts {
        let p = vol
            .position(*site)
            .ok_or_else(|| Error::SupportNotContained { support: vec![*site], volume: vol.sites().to_vec() })?;
        if diag.len() != vol.dims()[p] {
            return Err(Error::DimensionMismatch(format!("site {site} has dimension {}", vol.dims()[p])));
        }
        for (idx, o) in out.iter_mut().enumerate() {
            *o += diag[(idx / strides[p]) % diag.len()];
        }
    }
    Ok(out)
}

/// Reduced matrix on `keep` obtained by tracing out the rest of `vol`.
pub fn partial_trace(rho: &CMatrix, vol: &Volume, keep: &Volume) -> Result<CMatrix> {
    check_square(rho)?;
    if rho.nrows() != vol.total_dim() {
        return Err(Error::DimensionMismatch("state does not live on the given volume".into()));
    }
    let mut positions = Vec::with_capacity(keep.len());
    for (&s, &d) in keep.sites().iter().zip(keep.dims()) {
        match vol.position(s) {
            Some(p) if vol.dims()[p] == d => positions.push(p),
            _ => {
                return Err(Error::SupportNotContained { support: keep.sites().to_vec(), volume: vol.sites().to_vec() })
            }
        }
    }
    let kept = vol.offsets(&positions);
    let traced = vol.offsets(&vol.complement(&positions));
    let k = kept.len();
    Ok(Mat::from_fn(k, k, |i, j| traced.iter().map(|&t| rho[(kept[i] + t, kept[j] + t)]).sum()))
}

/// Two-sided bounds on an operator norm that was not computed densely.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NormBounds {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for the norm of a Hermitian operator given as a matvec.
///
/// Every iterate yields the certified lower bound `|Av| / |v|`. The caller
/// supplies a certified upper bound (typically a triangle-inequality sum).
pub fn power_norm<F>(apply: F, dim: usize, upper: f64, tol: f64, max_iter: usize, seed: u64) -> NormBounds
where
    F: Fn(&[c64], &mut [c64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<c64> = (0..dim).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = |x: &[c64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= n0);
    let mut w = vec![c64::new(0.0, 0.0); dim];
    let mut lower = 0.0f64;
    let mut last = 0.0f64;
    for it in 1..=max_iter {
        w.iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
        apply(&v, &mut w);
        let nw = norm(&w);
        lower = lower.max(nw);
        if nw == 0.0 {
            return NormBounds { lower, upper: upper.max(lower), iterations: it, converged: true };
        }
        if (nw - last).abs() <= tol * nw || upper - lower <= tol * upper.max(1e-300) {
            return NormBounds { lower, upper: upper.max(lower), iterations: it, converged: true };
        }
        last = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / nw;
        }
    }
    NormBounds { lower, upper: upper.max(lower), iterations: max_iter, converged: false }
}

/// Extreme eigenvalues of a Hermitian operator from a Lanczos run.
///
/// Ritz values always lie inside the spectrum, so `lowest ≥ λ_min` and
/// `highest ≤ λ_max`; each is within its residual of some eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ExtremeEigen {
    pub lowest: f64,
    pub highest: f64,
    pub residual_lowest: f64,
    pub residual_highest: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos with full reorthogonalization for the two ends of the spectrum of
/// a Hermitian matvec. Stops once both residuals fall below `tol · max(1, |θ|)`.
pub fn lanczos_extremes<F>(apply: F, dim: usize, max_iter: usize, tol: f64, seed: u64) -> Result<ExtremeEigen>
where
    F: Fn(&[c64], &mut [c64]),
{
    if dim == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let zero = c64::new(0.0, 0.0);
    let dot = |x: &[c64], y: &[c64]| x.iter().zip(y).fold(zero, |acc, (a, b)| acc + a.conj() * b);
    let norm = |x: &[c64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<c64> = (0..dim).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= n0);
    let mut basis: Vec<Vec<c64>> = vec![v];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let limit = max_iter.min(dim).max(1);
    let mut w = vec![zero; dim];
    let mut last = None;
    for j in 0..limit {
        w.iter_mut().for_each(|z| *z = zero);
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        let t = tridiagonal_extremes(&alpha, &beta)?;
        let res_lo = b * t.2.abs();
        let res_hi = b * t.3.abs();
        let done = b <= f64::EPSILON * (t.0.abs().max(t.1.abs()).max(1.0))
            || (res_lo <= tol * t.0.abs().max(1.0) && res_hi <= tol * t.1.abs().max(1.0) && j >= 2);
        last = Some(ExtremeEigen {
            lowest: t.0,
            highest: t.1,
            residual_lowest: res_lo,
            residual_highest: res_hi,
            iterations: j + 1,
            converged: done,
        });
        if done || j + 1 == limit {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| *z / b).collect());
    }
    last.ok_or_else(|| Error::Eigen("Lanczos produced no iterate".into()))
}

/// Lowest and highest eigenvalue of the symmetric tridiagonal matrix with
/// diagonal `alpha` and off-diagonal `beta`, with the last components of
/// their eigenvectors.
fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    Ok((s[0], s[k - 1], u[(k - 1, 0)], u[(k - 1, k - 1)]))
}

/// Sites of a volume keyed by lattice site, for quick membership tests.
pub fn site_positions(vol: &Volume) -> HashMap<usize, usize> {
    vol.sites().iter().enumerate().map(|(p, &s)| (s, p)).collect()
}
