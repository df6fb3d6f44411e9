//! Finite-volume Gibbs states, the KMS property, relative entropy and the
//! exact identities between perturbed and twisted states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{
    self, c64, partial_trace, trace, trace_product, CMatrix, HermitianEigen, LocalOperator, Volume, DENSE_LIMIT,
    HERMITIAN_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::Lattice;
use crate::model::{ChargeFamily, Interaction};
use crate::symmetry::{exp_is, MultiIndex};

/// Weight below which a state is considered to put no mass on a subspace.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Largest exponent `β·spread` evaluated without switching to log-domain sums.
pub const EXP_GUARD: f64 = 50.0;

/// `H_V = Σ_{Λ ⊆ V} φ(Λ)`. Terms that meet `V` without fitting inside it are an error.
pub fn hamiltonian(phi: &Interaction, vol: &Volume) -> Result<CMatrix> {
    if vol.total_dim() > DENSE_LIMIT {
        return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
    }
    phi.hamiltonian_on(vol, true)
}

/// `ρ = e^{−βH} / Z` together with its spectral data.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub rho: CMatrix,
    pub beta: f64,
    pub h: CMatrix,
    pub log_z: f64,
    pub eigen: HermitianEigen,
    /// `ln p_i` for the eigenvalues of `H` in ascending order.
    pub log_weights: Vec<f64>,
}

impl GibbsState {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, a: &CMatrix) -> c64 {
        trace_product(&self.rho, a)
    }
}

/// Gibbs state by a shifted eigendecomposition, so no exponent exceeds zero.
pub fn gibbs(h: &CMatrix, beta: f64) -> Result<GibbsState> {
    if !beta.is_finite() {
        return Err(Error::NonFinite);
    }
    let eigen = HermitianEigen::new(h)?;
    let pivot = if beta >= 0.0 { eigen.values[0] } else { *eigen.values.last().unwrap_or(&0.0) };
    let shifted: Vec<f64> = eigen.values.iter().map(|&v| -beta * (v - pivot)).collect();
    let z_shift: f64 = shifted.iter().map(|e| e.exp()).sum();
    let log_weights: Vec<f64> = shifted.iter().map(|e| e - z_shift.ln()).collect();
    let p: Vec<c64> = log_weights.iter().map(|l| c64::new(l.exp(), 0.0)).collect();
    let rho = eigen.reconstruct(&p);
    let log_z = -beta * pivot + z_shift.ln();
    Ok(GibbsState { rho, beta, h: h.clone(), log_z, eigen, log_weights })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KmsReport {
    /// `|Tr(ρ A e^{−βH} B e^{βH}) − Tr(ρ B A)|`
    pub defect: f64,
    /// `‖A‖ ‖B‖`, the natural scale of both sides.
    pub scale: f64,
    pub log_domain: bool,
}

fn check_pair(dim: usize, a: &CMatrix, b: &CMatrix) -> Result<()> {
    for m in [a, b] {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch("observable does not live on the state's volume".into()));
        }
    }
    Ok(())
}

/// KMS defect of a Gibbs state. In the eigenbasis the left side is
/// `Σ_{l,j} A_{lj} B_{jl} exp(ln p_l + β(λ_l − λ_j))`; the exponent is evaluated
/// as a single sum so nothing overflows at any `β`.
pub fn kms_check(state: &GibbsState, a: &CMatrix, b: &CMatrix) -> Result<KmsReport> {
    check_pair(state.dim(), a, b)?;
    let at = state.eigen.to_eigenbasis(a);
    let bt = state.eigen.to_eigenbasis(b);
    let lam = &state.eigen.values;
    let n = state.dim();
    let mut lhs = c64::new(0.0, 0.0);
    for l in 0..n {
        for j in 0..n {
            let w = (state.log_weights[l] + state.beta * (lam[l] - lam[j])).exp();
            lhs += at[(l, j)] * bt[(j, l)] * w;
        }
    }
    let rhs = trace_product(&state.rho, &(b * a));
    let scale = algebra::op_norm(a)? * algebra::op_norm(b)?;
    Ok(KmsReport { defect: (lhs - rhs).norm(), scale, log_domain: state.beta * state.eigen.spread() > EXP_GUARD })
}

/// KMS defect of an arbitrary density matrix against the dynamics of `H` at `β`.
pub fn kms_defect(rho: &CMatrix, h: &CMatrix, beta: f64, a: &CMatrix, b: &CMatrix) -> Result<KmsReport> {
    check_pair(rho.nrows(), a, b)?;
    let eigen = HermitianEigen::new(h)?;
    let log_domain = beta * eigen.spread() > EXP_GUARD;
    let rt = eigen.to_eigenbasis(rho);
    let at = eigen.to_eigenbasis(a);
    let bt = eigen.to_eigenbasis(b);
    let c = &rt * &at;
    let lam = &eigen.values;
    let n = lam.len();
    let mut lhs = c64::new(0.0, 0.0);
    for l in 0..n {
        for j in 0..n {
            let w = (beta * (lam[l] - lam[j])).exp();
            if !w.is_finite() {
                return Err(Error::Overflow(format!("e^(β(λ_l − λ_j)) overflows at β = {beta}")));
            }
            lhs += c[(l, j)] * bt[(j, l)] * w;
        }
    }
    let rhs = trace_product(rho, &(b * a));
    let scale = algebra::op_norm(a)? * algebra::op_norm(b)?;
    Ok(KmsReport { defect: (lhs - rhs).norm(), scale, log_domain })
}

/// `S(ρ‖σ)`, or a tag when the support condition fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

fn spectrum_checked(m: &CMatrix, what: &str) -> Result<HermitianEigen> {
    let e = HermitianEigen::new(m)?;
    let scale = e.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let lowest = e.values.first().copied().unwrap_or(0.0);
    if lowest < -1e-10 * scale {
        return Err(Error::NotPositive(lowest));
    }
    if e.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} has non-finite spectrum")));
    }
    Ok(e)
}

/// `Tr ρ (log ρ − log σ)`.
///
/// With `σ = Σ_j q_j |w_j⟩⟨w_j|` this is `Σ p_i ln p_i − Σ_j ⟨w_j|ρ|w_j⟩ ln q_j`.
/// A direction with `q_j = 0` carrying more than [`SUPPORT_TOL`] of `ρ` gives
/// [`RelativeEntropy::Infinite`]. Unless `allow_unnormalized` is set, `σ` must
/// have unit trace; an unnormalized `σ` can give negative values.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix, allow_unnormalized: bool) -> Result<RelativeEntropy> {
    if rho.nrows() != sigma.nrows() || rho.ncols() != sigma.ncols() {
        return Err(Error::DimensionMismatch("states of different size".into()));
    }
    let tr_rho = trace(rho).re;
    if (tr_rho - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("Tr ρ = {tr_rho}")));
    }
    let tr_sigma = trace(sigma).re;
    if !allow_unnormalized && (tr_sigma - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("Tr σ = {tr_sigma}; pass allow_unnormalized")));
    }
    let er = spectrum_checked(rho, "ρ")?;
    let es = spectrum_checked(sigma, "σ")?;
    let self_part: f64 = er.values.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    let weights = es.to_eigenbasis(rho);
    let mut cross = 0.0;
    for (j, &q) in es.values.iter().enumerate() {
        let w = weights[(j, j)].re;
        if q <= algebra::LOG_FLOOR {
            if w > SUPPORT_TOL {
                return Ok(RelativeEntropy::Infinite);
            }
            continue;
        }
        cross += w * q.ln();
    }
    Ok(RelativeEntropy::Finite(self_part - cross))
}

/// `σ = e^{−β(H − W)} / Tr e^{−βH}`, deliberately left unnormalized.
#[derive(Clone, Debug)]
pub struct PerturbedFunctional {
    pub sigma: CMatrix,
    pub w: CMatrix,
    pub beta: f64,
    pub trace: f64,
    /// Eigendecomposition of `H − W`.
    pub eigen: HermitianEigen,
    /// `ln` of the eigenvalues of `σ`, ascending in `H − W`.
    pub log_weights: Vec<f64>,
}

pub fn perturbed_gibbs(h: &CMatrix, w: &CMatrix, beta: f64) -> Result<PerturbedFunctional> {
    let defect = algebra::hermitian_defect(w);
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let log_z = gibbs(h, beta)?.log_z;
    let eig = HermitianEigen::new(&(h - w))?;
    let pivot = if beta >= 0.0 { eig.values[0] } else { *eig.values.last().unwrap_or(&0.0) };
    let factor = (-beta * pivot - log_z).exp();
    if !factor.is_finite() {
        return Err(Error::Overflow("normalization of the perturbed functional".into()));
    }
    let log_weights: Vec<f64> = eig.values.iter().map(|&v| -beta * (v - pivot) + factor.ln()).collect();
    let sigma = eig.map(|v| c64::new((-beta * (v - pivot)).exp() * factor, 0.0));
    let tr = trace(&sigma).re;
    Ok(PerturbedFunctional { sigma, w: w.clone(), beta, trace: tr, eigen: eig, log_weights })
}

/// `S(ρ‖σ)` from eigendecompositions whose eigenvalue logarithms are known in
/// closed form, as for Gibbs states: `Σ_i p_i ln p_i − Σ_{ij} p_i |⟨w_j|v_i⟩|² ln q_j`.
/// Avoids taking logarithms of tiny computed eigenvalues.
pub fn relative_entropy_spectral(
    rho: &HermitianEigen,
    log_p: &[f64],
    sigma: &HermitianEigen,
    log_q: &[f64],
) -> Result<f64> {
    let n = rho.dim();
    if sigma.dim() != n || log_p.len() != n || log_q.len() != n {
        return Err(Error::DimensionMismatch("spectral data of different size".into()));
    }
    let overlap = sigma.vectors.adjoint() * &rho.vectors;
    let p: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
    let self_part: f64 = p.iter().zip(log_p).filter(|(&pi, _)| pi > 0.0).map(|(pi, l)| pi * l).sum();
    let mut cross = 0.0;
    for j in 0..n {
        let w: f64 = (0..n).map(|i| p[i] * overlap[(j, i)].norm_sqr()).sum();
        cross += w * log_q[j];
    }
    Ok(self_part - cross)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `S(ρ‖σ_W) = −β Tr(ρ W)` with `ρ` the Gibbs state of `H` and `σ_W` from
/// [`perturbed_gibbs`]. Tolerance `1e−9 · max(1, β‖W‖)`.
pub fn entropy_perturbation_identity(h: &CMatrix, w: &CMatrix, beta: f64) -> Result<IdentityReport> {
    let state = gibbs(h, beta)?;
    let pert = perturbed_gibbs(h, w, beta)?;
    let lhs = relative_entropy_spectral(&state.eigen, &state.log_weights, &pert.eigen, &pert.log_weights)?;
    let rhs = -beta * state.expect(w).re;
    let defect = (lhs - rhs).abs();
    let tolerance = 1e-9 * (beta.abs() * algebra::op_norm(w)?).max(1.0);
    Ok(IdentityReport { lhs, rhs, defect, tolerance, pass: defect <= tolerance })
}

/// `S(ρ‖UρU^†) = β Tr(ρ(U H U^† − H))` for the Gibbs state of `H`.
pub fn twist_identity(state: &GibbsState, u: &CMatrix) -> Result<IdentityReport> {
    let sigma = algebra::conjugate_unitary(u, &state.rho)?;
    let lhs = relative_entropy(&state.rho, &sigma, false)?.value().unwrap_or(f64::INFINITY);
    let twisted = algebra::conjugate_unitary(u, &state.h)?;
    let rhs = state.beta * state.expect(&(twisted - &state.h)).re;
    let defect = (lhs - rhs).abs();
    let tolerance = 1e-9 * rhs.abs().max(1.0);
    Ok(IdentityReport { lhs, rhs, defect, tolerance, pass: defect <= tolerance })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UhlmannReport {
    pub restricted: RelativeEntropy,
    pub full: RelativeEntropy,
    pub slack: f64,
    pub pass: bool,
}

/// `S(ρ|_{V1} ‖ σ|_{V1}) ≤ S(ρ‖σ)` for states on `v2 ⊇ v1`.
pub fn uhlmann_check(rho: &CMatrix, sigma: &CMatrix, v2: &Volume, v1: &Volume) -> Result<UhlmannReport> {
    let slack = 1e-9;
    let full = relative_entropy(rho, sigma, false)?;
    let restricted = relative_entropy(&partial_trace(rho, v2, v1)?, &partial_trace(sigma, v2, v1)?, false)?;
    let pass = match (restricted, full) {
        (_, RelativeEntropy::Infinite) => true,
        (RelativeEntropy::Infinite, RelativeEntropy::Finite(_)) => false,
        (RelativeEntropy::Finite(r), RelativeEntropy::Finite(f)) => r <= f + slack,
    };
    Ok(UhlmannReport { restricted, full, slack, pass })
}

/// `|tr(τ_s(A)) − tr(A)|` for the normalized trace on `vol`, with `τ_s` realized
/// by conjugation with `exp(is Σ_x x^a n_x)` over all charges inside `vol`.
pub fn tracial_invariance_check(
    vol: &Volume,
    cf: &ChargeFamily,
    lat: &Lattice,
    a: &MultiIndex,
    s: f64,
    op: &LocalOperator,
) -> Result<f64> {
    if !vol.contains_all(op.support()) {
        return Err(Error::SupportNotContained { support: op.support().to_vec(), volume: vol.sites().to_vec() });
    }
    let inside: Vec<usize> = (0..cf.n_sites()).filter(|&x| vol.contains_all(cf.charge(x).support())).collect();
    let mut g = algebra::zeros(vol.total_dim());
    for &x in &inside {
        let w = a.monomial(lat.point(x));
        if w != 0.0 {
            algebra::embed_add(cf.charge(x), vol, c64::new(w, 0.0), &mut g)?;
        }
    }
    let u = exp_is(&LocalOperator::new(vol.sites(), vol.dims(), g)?, s)?;
    let a_v = algebra::embed(op, vol)?;
    let twisted = algebra::conjugate_unitary(&algebra::adjoint(&u), &a_v)?;
    let n = vol.total_dim() as f64;
    Ok(((trace(&twisted) - trace(&a_v)) / n).norm())
}

/// Random Hermitian matrix with entries uniform in the unit square, scaled by `scale`.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    CMatrix::from_fn(dim, dim, |i, j| (a[(i, j)] + a[(j, i)].conj()) * (0.5 * scale))
}

/// Random full-rank density matrix `G G^† / Tr(G G^†)`.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = &g * g.adjoint();
    let t = trace(&p).re;
    algebra::scale(&p, c64::new(1.0 / t, 0.0))
}

/// One row of the randomized entropy-identity suite.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntropyRow {
    pub instance_seed: u64,
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs [`entropy_perturbation_identity`] on `instances` random `(H, W)` pairs on
/// `qubits` qubits. Instance `i` uses seed `seed + i` and `betas[i % betas.len()]`.
pub fn entropy_suite(seed: u64, instances: usize, qubits: u32, betas: &[f64]) -> Result<Vec<EntropyRow>> {
    if betas.is_empty() {
        return Err(Error::InvalidArgument("no β values".into()));
    }
    let dim = 1usize << qubits;
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let instance_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);
            let h = random_hermitian(dim, &mut rng, 1.0);
            let w = random_hermitian(dim, &mut rng, 1.0);
            let beta = betas[i % betas.len()];
            let r = entropy_perturbation_identity(&h, &w, beta)?;
            Ok(EntropyRow {
                instance_seed,
                beta,
                lhs: r.lhs,
                rhs: r.rhs,
                defect: r.defect,
                tolerance: r.tolerance,
                pass: r.pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{kron_all, pauli_x, pauli_z, real_diag};
    use crate::model::{builtin_interaction, ChargeSpec};
    use std::collections::BTreeMap;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn hamiltonian_examples() {
        let lat = Lattice::hypercubic(1, 1).unwrap();
        let vol = Volume::uniform(&[0, 1, 2], 2).unwrap();
        let empty = Interaction::empty(vec![2; 3]);
        assert_eq!(algebra::max_abs(&hamiltonian(&empty, &vol).unwrap()), 0.0);

        let z = LocalOperator::new(&[1], &[2], pauli_z()).unwrap();
        let single = Interaction::new(vec![z], vec![2; 3]).unwrap();
        let h = hamiltonian(&single, &vol).unwrap();
        let expect = kron_all(&[algebra::identity(2), pauli_z(), algebra::identity(2)]);
        assert_eq!(algebra::max_abs(&(h - expect)), 0.0);

        let xy = builtin_interaction("xy_chain", &BTreeMap::new(), &lat, &[2, 2, 2]).unwrap();
        let e = HermitianEigen::new(&hamiltonian(&xy, &vol).unwrap()).unwrap();
        for (lo, hi) in e.values.iter().zip(e.values.iter().rev()) {
            assert!((lo + hi).abs() < 1e-12);
        }
        let small = Volume::uniform(&[0, 1], 2).unwrap();
        assert!(hamiltonian(&xy, &small).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let g = gibbs(&pauli_z(), 1.0).unwrap();
        let e = std::f64::consts::E;
        let z = e + 1.0 / e;
        assert!((g.rho[(0, 0)].re - (1.0 / e) / z).abs() < 1e-15);
        assert!((g.rho[(1, 1)].re - e / z).abs() < 1e-15);
        assert!((g.log_z - z.ln()).abs() < 1e-15);

        let mut r = rng(1);
        let h = random_hermitian(8, &mut r, 1.0);
        let g0 = gibbs(&h, 0.0).unwrap();
        assert!(algebra::max_abs(&(g0.rho - real_diag(&[0.125; 8]))) < 1e-15);

        let g = gibbs(&h, 2.0).unwrap();
        assert!((trace(&g.rho).re - 1.0).abs() < 1e-12);
        assert!(algebra::max_abs(&algebra::commutator(&g.rho, &h).unwrap()) < 1e-10);
        // An observable commuting with H: a polynomial in H.
        let a = &h * &h + algebra::scale(&h, c64::new(0.3, 0.0));
        assert!(algebra::max_abs(&algebra::commutator(&g.rho, &a).unwrap()) < 1e-10);

        let hot = gibbs(&algebra::scale(&pauli_z(), c64::new(400.0, 0.0)), 3.0).unwrap();
        assert!(hot.rho[(1, 1)].re > 1.0 - 1e-15 && hot.log_z.is_finite());
    }

    #[test]
    fn kms_examples() {
        let mut r = rng(2);
        let h = random_hermitian(8, &mut r, 1.0);
        let g = gibbs(&h, 1.0).unwrap();
        let id = algebra::identity(8);
        assert!(kms_check(&g, &id, &id).unwrap().defect < 1e-14);
        for _ in 0..5 {
            let a = algebra::testutil::random_matrix(8, &mut r);
            let b = algebra::testutil::random_matrix(8, &mut r);
            assert!(kms_check(&g, &a, &b).unwrap().defect <= 1e-10);
            assert!(kms_defect(&g.rho, &h, 1.0, &a, &b).unwrap().defect <= 1e-10);
        }
        let e = HermitianEigen::new(&h).unwrap();
        let top = e.map(|v| if v == e.values[7] { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        let a = algebra::testutil::random_matrix(8, &mut r);
        let b = algebra::testutil::random_matrix(8, &mut r);
        assert!(kms_defect(&top, &h, 1.0, &a, &b).unwrap().defect > 1e-3);

        let strong = gibbs(&algebra::scale(&h, c64::new(100.0, 0.0)), 5.0).unwrap();
        let rep = kms_check(&strong, &a, &b).unwrap();
        assert!(rep.log_domain && rep.defect <= 1e-9 * rep.scale.max(1.0));
    }

    #[test]
    fn relative_entropy_examples() {
        let mut r = rng(3);
        let rho = random_density(4, &mut r);
        assert!(relative_entropy(&rho, &rho, false).unwrap().value().unwrap().abs() < 1e-12);
        let pure = real_diag(&[1.0, 0.0]);
        let mixed = real_diag(&[0.5, 0.5]);
        let v = relative_entropy(&pure, &mixed, false).unwrap().value().unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert!(relative_entropy(&pure, &real_diag(&[0.0, 1.0]), false).unwrap().is_infinite());
        assert!(relative_entropy(&pure, &real_diag(&[0.5, 0.6]), false).is_err());
        assert!(relative_entropy(&pure, &real_diag(&[1.0, -0.5]), true).is_err());
        for _ in 0..20 {
            let a = random_density(4, &mut r);
            let b = random_density(4, &mut r);
            assert!(relative_entropy(&a, &b, false).unwrap().value().unwrap() >= -1e-12);
        }
    }

    #[test]
    fn perturbed_examples() {
        let mut r = rng(4);
        let h = random_hermitian(4, &mut r, 1.0);
        let g = gibbs(&h, 0.8).unwrap();
        let p0 = perturbed_gibbs(&h, &algebra::zeros(4), 0.8).unwrap();
        assert!(algebra::max_abs(&(&p0.sigma - &g.rho)) < 1e-13);
        let c = 0.35;
        let pc = perturbed_gibbs(&h, &algebra::scale(&algebra::identity(4), c64::new(c, 0.0)), 0.8).unwrap();
        let expect = algebra::scale(&g.rho, c64::new((0.8 * c).exp(), 0.0));
        assert!(algebra::max_abs(&(&pc.sigma - &expect)) < 1e-13);

        // Commuting 2×2 case by hand: H = diag(1, −1), W = diag(0.5, 0.2), β = 1.
        let h2 = real_diag(&[1.0, -1.0]);
        let w2 = real_diag(&[0.5, 0.2]);
        let p = perturbed_gibbs(&h2, &w2, 1.0).unwrap();
        let z = (-1f64).exp() + 1f64.exp();
        assert!((p.sigma[(0, 0)].re - (-0.5f64).exp() / z).abs() < 1e-15);
        assert!((p.sigma[(1, 1)].re - 1.2f64.exp() / z).abs() < 1e-15);
        assert!(perturbed_gibbs(&h2, &algebra::sigma_plus(), 1.0).is_err());
    }

    #[test]
    fn entropy_identity_examples() {
        let mut r = rng(5);
        let h = random_hermitian(8, &mut r, 1.0);
        let w = random_hermitian(8, &mut r, 1.0);
        let zero = entropy_perturbation_identity(&h, &algebra::zeros(8), 0.7).unwrap();
        assert!(zero.lhs.abs() < 1e-12 && zero.rhs == 0.0);
        let rep = entropy_perturbation_identity(&h, &w, 0.7).unwrap();
        assert!(rep.pass, "{rep:?}");
        let self_w = entropy_perturbation_identity(&h, &h, 0.7).unwrap();
        let g = gibbs(&h, 0.7).unwrap();
        assert!((self_w.rhs + 0.7 * g.expect(&h).re).abs() < 1e-15);
        assert!(self_w.pass);
    }

    #[test]
    fn twist_identity_holds() {
        let mut r = rng(6);
        let h = random_hermitian(8, &mut r, 1.0);
        let g = gibbs(&h, 1.3).unwrap();
        let gen = random_hermitian(8, &mut r, 1.0);
        let u = algebra::hermitian_exp(&gen, c64::new(0.0, 1.0)).unwrap();
        let rep = twist_identity(&g, &u).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.lhs > 0.0);
    }

    #[test]
    fn uhlmann_examples() {
        let mut r = rng(7);
        let v2 = Volume::uniform(&[0, 1, 2, 3], 2).unwrap();
        let v1 = Volume::uniform(&[1, 2], 2).unwrap();
        let rho = random_density(16, &mut r);
        let same = uhlmann_check(&rho, &rho, &v2, &v1).unwrap();
        assert!(same.pass);
        assert!(same.full.value().unwrap().abs() < 1e-12);
        for _ in 0..5 {
            let sigma = random_density(16, &mut r);
            let rep = uhlmann_check(&rho, &sigma, &v2, &v1).unwrap();
            assert!(rep.pass);
            assert!(rep.restricted.value().unwrap() <= rep.full.value().unwrap());
        }
        // Product states: the marginal piece is the full relative entropy of that factor.
        let a = random_density(4, &mut r);
        let b = random_density(4, &mut r);
        let c = random_density(4, &mut r);
        let vv = Volume::uniform(&[0, 1, 2, 3], 2).unwrap();
        let first = Volume::uniform(&[0, 1], 2).unwrap();
        let rep = uhlmann_check(&algebra::kron(&a, &b), &algebra::kron(&c, &b), &vv, &first).unwrap();
        let direct = relative_entropy(&a, &c, false).unwrap().value().unwrap();
        assert!((rep.restricted.value().unwrap() - direct).abs() < 1e-10);
        assert!((rep.full.value().unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn tracial_invariance() {
        let lat = Lattice::hypercubic(1, 1).unwrap();
        let cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        let vol = cf.volume(&[0, 1, 2]).unwrap();
        let mut r = rng(8);
        let a = LocalOperator::new(&[0, 1, 2], &[2, 2, 2], algebra::testutil::random_matrix(8, &mut r)).unwrap();
        let d = tracial_invariance_check(&vol, &cf, &lat, &MultiIndex::new(vec![1]), 0.3, &a).unwrap();
        assert!(d <= 1e-12);
        let x = LocalOperator::new(&[1], &[2], pauli_x()).unwrap();
        assert!(tracial_invariance_check(&vol, &cf, &lat, &MultiIndex::new(vec![2]), 7.0, &x).unwrap() <= 1e-12);
        let n = cf.charge(0).clone();
        assert_eq!(tracial_invariance_check(&vol, &cf, &lat, &MultiIndex::zero(1), 1.0, &n).unwrap(), 0.0);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = entropy_suite(11, 6, 2, &[0.3, 1.0, 3.0]).unwrap();
        let b = entropy_suite(11, 6, 2, &[0.3, 1.0, 3.0]).unwrap();
        assert!(a.iter().all(|r| r.pass));
        assert_eq!(
            a.iter().map(|r| r.lhs.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|r| r.lhs.to_bits()).collect::<Vec<_>>()
        );
    }
}
