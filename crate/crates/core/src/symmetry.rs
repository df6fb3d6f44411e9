//! Multipole generators `Σ_x w(x) n_x`, the symmetry action they induce and
//! the checks built on it.
//!
//! Conventions: `τ_s^{(a)}(A) = e^{−isG} A e^{isG}` with `G = Σ_x x^a n_x`
//! summed over the charges touching `supp A`, and the truncated unitary is
//! `U_m = exp(is Σ_x χ_m(x) x^a n_x)`, so that `U_m^† A U_m → τ_s^{(a)}(A)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{
    self, c64, embed, embed_add, is_diagonal, onsite_diagonal_sum, op_norm, CMatrix, HermitianEigen, LocalOperator,
    Volume, DENSE_LIMIT,
};
use crate::cutoff::{evaluate_cutoff, CutoffProfile};
use crate::error::{Error, Result};
use crate::geometry::Lattice;
use crate::model::{ChargeFamily, Interaction};

/// A multi-index `a ∈ N_0^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// `e_j` scaled by `p`.
    pub fn axis(d: usize, j: usize, p: u32) -> Self {
        let mut v = vec![0; d];
        v[j] = p;
        Self(v)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|a| = Σ a_j`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^a = Π x_j^{a_j}`, with `0^0 = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&p, &t)| t.powi(p as i32)).product()
    }

    /// Every `a` with `|a| ≤ k` and `a_j = 0` for `j` in `exempt`, graded then lexicographic.
    pub fn enumerate(d: usize, k: u32, exempt: &[usize]) -> Vec<Self> {
        let mut out = Vec::new();
        for n in 0..=k {
            let mut level = Vec::new();
            collect(d, n, &mut Vec::new(), &mut level);
            out.extend(level.into_iter().filter(|a: &Self| exempt.iter().all(|&j| a.0[j] == 0)));
        }
        out
    }
}

fn collect(d: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == d {
        prefix.push(remaining);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        prefix.push(first);
        collect(d, remaining - first, prefix, out);
        prefix.pop();
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Comma-separated nonnegative integers, e.g. `"1,0"`.
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|p| p.trim().parse::<u32>().map_err(|_| Error::InvalidArgument(format!("bad multi-index `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty multi-index".into()));
        }
        Ok(Self(entries))
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            List(Vec<u32>),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::List(v) => Ok(Self(v)),
        }
    }
}

/// Which charges enter a generator and with what weight.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    /// `χ_m(x) x^a` for every `x ∈ L ∩ [−2m, 2m]^d`.
    Truncated { m: f64 },
    /// `x^a` for every `x` whose charge touches `region`.
    Collar { region: &'a [usize] },
}

/// The `(x, w(x))` pairs entering a generator, with nonzero weights only.
pub fn generator_weights(
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    scope: Scope<'_>,
) -> Result<Vec<(usize, f64)>> {
    if a.dim() != lat.dim() {
        return Err(Error::DimensionMismatch(format!(
            "multi-index has {} entries, lattice dimension is {}",
            a.dim(),
            lat.dim()
        )));
    }
    let mut out = Vec::new();
    match scope {
        Scope::Truncated { m } => {
            for x in lat.box_sites(2.0 * m, 0.0) {
                let w = evaluate_cutoff(profile, m, a, lat.point(x))?;
                if w != 0.0 {
                    out.push((x, w));
                }
            }
        }
        Scope::Collar { region } => {
            for x in cf.collar(region) {
                let w = a.monomial(lat.point(x));
                if w != 0.0 {
                    out.push((x, w));
                }
            }
        }
    }
    Ok(out)
}

/// `Q_m`: the union of `supp(n_x)` over `x ∈ L ∩ [−2m, 2m]^d`.
pub fn q_m(cf: &ChargeFamily, lat: &Lattice, m: f64) -> Vec<usize> {
    cf.support_union(&lat.box_sites(2.0 * m, 0.0))
}

/// Diagonal of `Σ w_x n_x` when every charge is onsite and diagonal.
pub fn diagonal_generator(cf: &ChargeFamily, weights: &[(usize, f64)], vol: &Volume) -> Result<Option<Vec<f64>>> {
    if !cf.is_onsite_diagonal() {
        return Ok(None);
    }
    let parts: Vec<(usize, Vec<f64>)> = weights
        .iter()
        .map(|&(x, w)| {
            let n = cf.charge(x).matrix();
            (x, (0..n.nrows()).map(|i| w * n[(i, i)].re).collect())
        })
        .collect();
    onsite_diagonal_sum(vol, &parts).map(Some)
}

fn require_supports(cf: &ChargeFamily, weights: &[(usize, f64)], vol: &Volume) -> Result<()> {
    for &(x, _) in weights {
        if !vol.contains_all(cf.charge(x).support()) {
            return Err(Error::VolumeTooSmall(format!(
                "charge at site {x} reaches outside the volume; need at least {:?}",
                cf.support_union(&weights.iter().map(|p| p.0).collect::<Vec<_>>())
            )));
        }
    }
    Ok(())
}

/// `Σ w_x n_x` on `vol` as a local operator.
pub fn build_generator(
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    scope: Scope<'_>,
    vol: &Volume,
) -> Result<LocalOperator> {
    let weights = generator_weights(cf, lat, profile, a, scope)?;
    require_supports(cf, &weights, vol)?;
    if vol.total_dim() > DENSE_LIMIT {
        return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
    }
    let m = match diagonal_generator(cf, &weights, vol)? {
        Some(d) => algebra::real_diag(&d),
        None => {
            let mut g = algebra::zeros(vol.total_dim());
            for &(x, w) in &weights {
                embed_add(cf.charge(x), vol, c64::new(w, 0.0), &mut g)?;
            }
            g
        }
    };
    LocalOperator::new(vol.sites(), vol.dims(), m)
}

/// `exp(i s G)` for a generator given either as a diagonal or a dense matrix.
pub(crate) fn exp_is(g: &LocalOperator, s: f64) -> Result<CMatrix> {
    algebra::hermitian_exp(g.matrix(), c64::new(0.0, s))
}

/// `U_m^{(a)}(s)` restricted to a volume containing `Q_m`.
#[derive(Clone, Debug)]
pub struct TruncatedUnitary {
    pub a: MultiIndex,
    pub s: f64,
    pub m: f64,
    pub q_m: Vec<usize>,
    pub generator: LocalOperator,
    pub unitary: CMatrix,
}

impl TruncatedUnitary {
    pub fn build(
        cf: &ChargeFamily,
        lat: &Lattice,
        profile: &CutoffProfile,
        a: &MultiIndex,
        s: f64,
        m: f64,
        vol: &Volume,
    ) -> Result<Self> {
        let q = q_m(cf, lat, m);
        if !vol.contains_all(&q) {
            return Err(Error::VolumeTooSmall(format!("Q_m = {q:?} is not inside the volume")));
        }
        Self::build_partial(cf, lat, profile, a, s, m, vol)
    }

    /// Like [`TruncatedUnitary::build`] but keeps only the charges supported in
    /// `vol`. Exact whenever the dropped charges commute with everything the
    /// unitary is applied to.
    pub fn build_partial(
        cf: &ChargeFamily,
        lat: &Lattice,
        profile: &CutoffProfile,
        a: &MultiIndex,
        s: f64,
        m: f64,
        vol: &Volume,
    ) -> Result<Self> {
        let weights: Vec<(usize, f64)> = generator_weights(cf, lat, profile, a, Scope::Truncated { m })?
            .into_iter()
            .filter(|&(x, _)| vol.contains_all(cf.charge(x).support()))
            .collect();
        if vol.total_dim() > DENSE_LIMIT {
            return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
        }
        let gm = match diagonal_generator(cf, &weights, vol)? {
            Some(d) => algebra::real_diag(&d),
            None => {
                let mut g = algebra::zeros(vol.total_dim());
                for &(x, w) in &weights {
                    embed_add(cf.charge(x), vol, c64::new(w, 0.0), &mut g)?;
                }
                g
            }
        };
        let generator = LocalOperator::new(vol.sites(), vol.dims(), gm)?;
        let unitary = exp_is(&generator, s)?;
        Ok(Self { a: a.clone(), s, m, q_m: q_m(cf, lat, m), generator, unitary })
    }

    pub fn is_diagonal(&self) -> bool {
        is_diagonal(&self.unitary)
    }

    /// `U^† A U` for `A` already written on the unitary's volume.
    pub fn twist_back(&self, a: &CMatrix) -> Result<CMatrix> {
        algebra::conjugate_unitary(&algebra::adjoint(&self.unitary), a)
    }

    /// `U A U^†`.
    pub fn twist(&self, a: &CMatrix) -> Result<CMatrix> {
        algebra::conjugate_unitary(&self.unitary, a)
    }
}

/// The working volume of an observable: its support together with the
/// supports of all charges touching it.
pub fn collar_volume(cf: &ChargeFamily, region: &[usize]) -> Result<Volume> {
    let mut sites = cf.support_union(&cf.collar(region));
    sites.extend_from_slice(region);
    sites.sort_unstable();
    sites.dedup();
    cf.volume(&sites)
}

/// `e^{−isG} A e^{isG}` with `G = Σ_{x : supp n_x ∩ supp A ≠ ∅} x^a n_x`.
pub fn apply_tau(
    op: &LocalOperator,
    cf: &ChargeFamily,
    lat: &Lattice,
    a: &MultiIndex,
    s: f64,
) -> Result<LocalOperator> {
    let vol = collar_volume(cf, op.support())?;
    let profile = CutoffProfile::with_resolution(lat.dim(), 1, None)?;
    let g = build_generator(cf, lat, &profile, a, Scope::Collar { region: op.support() }, &vol)?;
    let u = exp_is(&g, s)?;
    let emb = embed(op, &vol)?;
    let out = algebra::conjugate_unitary(&algebra::adjoint(&u), &emb)?;
    LocalOperator::new(vol.sites(), vol.dims(), out)
}

/// `[G, φ]` with `G` the collar generator of `φ`'s support.
fn collar_commutator_norm(phi: &LocalOperator, cf: &ChargeFamily, lat: &Lattice, a: &MultiIndex) -> Result<(f64, f64)> {
    let vol = collar_volume(cf, phi.support())?;
    let weights = generator_weights(
        cf,
        lat,
        &CutoffProfile::with_resolution(lat.dim(), 1, None)?,
        a,
        Scope::Collar { region: phi.support() },
    )?;
    let scale = weights.iter().fold(0.0f64, |m, w| m.max(w.1.abs())).max(1.0);
    let emb = embed(phi, &vol)?;
    let c = match diagonal_generator(cf, &weights, &vol)? {
        Some(g) => CMatrix::from_fn(emb.nrows(), emb.ncols(), |i, j| emb[(i, j)] * (g[i] - g[j])),
        None => {
            let mut gm = algebra::zeros(vol.total_dim());
            for &(x, w) in &weights {
                embed_add(cf.charge(x), &vol, c64::new(w, 0.0), &mut gm)?;
            }
            algebra::commutator(&gm, &emb)?
        }
    };
    Ok((op_norm(&c)?, scale))
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryDefect {
    pub a: MultiIndex,
    pub term_id: usize,
    pub support: Vec<usize>,
    pub defect_norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KSymmetryReport {
    pub k: u32,
    /// 0-based exempt axes.
    pub index_set: Vec<usize>,
    pub multi_indices: Vec<MultiIndex>,
    pub pass: bool,
    pub max_defect: f64,
    pub records: Vec<SymmetryDefect>,
    /// First failing record in `(a, term)` order.
    pub witness: Option<SymmetryDefect>,
}

/// Relative tolerance on `‖[G, φ]‖ / (max|w| ‖φ‖)`, floored at an absolute 1e−12.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Checks `[G^{(a)}, φ(Λ)] = 0` for every `a ∈ T_k` and every term.
pub fn check_k_symmetric(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    k: u32,
    index_set: &[usize],
) -> Result<KSymmetryReport> {
    if index_set.iter().any(|&j| j >= lat.dim()) {
        return Err(Error::InvalidArgument("exempt axis out of range".into()));
    }
    let multi = MultiIndex::enumerate(lat.dim(), k, index_set);
    let jobs: Vec<(usize, usize)> = (0..multi.len()).flat_map(|ai| (0..phi.len()).map(move |t| (ai, t))).collect();
    let records = jobs
        .par_iter()
        .map(|&(ai, t)| {
            let term = phi.term(t);
            let (norm, scale) = collar_commutator_norm(term.op(), cf, lat, &multi[ai])?;
            let tol = SYMMETRY_TOL * (scale * term.norm()).max(1.0);
            Ok(SymmetryDefect {
                a: multi[ai].clone(),
                term_id: t,
                support: term.support().to_vec(),
                defect_norm: norm,
                pass: norm <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_defect = records.iter().fold(0.0f64, |m, r| m.max(r.defect_norm));
    let witness = records.iter().find(|r| !r.pass).cloned();
    Ok(KSymmetryReport {
        k,
        index_set: index_set.to_vec(),
        multi_indices: multi,
        pass: witness.is_none(),
        max_defect,
        records,
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationReport {
    pub m0: f64,
    pub ms: Vec<f64>,
    /// `‖U_m^† A U_m − τ_s(A)‖` per tested `m ≥ m0`.
    pub defect_to_tau: Vec<f64>,
    pub max_pairwise: f64,
    pub working_sites: usize,
    pub pass: bool,
}

/// Checks that `U_m^† A U_m` is constant in `m ≥ m0` and equals `τ_s(A)`.
///
/// The unitaries are restricted to the collar of `supp A` plus one further
/// ring of charges; charges beyond that commute with `A` and drop out exactly.
pub fn stabilization_check(
    op: &LocalOperator,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    s: f64,
    ms: &[f64],
) -> Result<StabilizationReport> {
    let m0 = op.support().iter().map(|&x| lat.sup_norm(x)).fold(0.0, f64::max) + cf.r0();
    let tested: Vec<f64> = ms.iter().copied().filter(|&m| m >= m0).collect();
    if tested.is_empty() {
        return Err(Error::Precondition(format!("no m in the range reaches m0 = {m0}")));
    }
    let inner = collar_volume(cf, op.support())?;
    let ring = collar_volume(cf, inner.sites())?;
    let tau = apply_tau(op, cf, lat, a, s)?;
    let tau_on_ring = embed(&tau, &ring)?;
    let a_on_ring = embed(op, &ring)?;
    let mut values = Vec::with_capacity(tested.len());
    let mut defect_to_tau = Vec::with_capacity(tested.len());
    for &m in &tested {
        let u = TruncatedUnitary::build_partial(cf, lat, profile, a, s, m, &ring)?;
        let v = u.twist_back(&a_on_ring)?;
        defect_to_tau.push(op_norm(&(&v - &tau_on_ring))?);
        values.push(v);
    }
    let mut max_pairwise = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            max_pairwise = max_pairwise.max(op_norm(&(&values[i] - &values[j]))?);
        }
    }
    let pass = max_pairwise <= 1e-10 && defect_to_tau.iter().all(|&d| d <= 1e-10);
    Ok(StabilizationReport { m0, ms: tested, defect_to_tau, max_pairwise, working_sites: ring.len(), pass })
}

/// `A ↦ e^{itH_V} A e^{−itH_V}` on a finite volume.
pub struct FiniteDynamics {
    vol: Volume,
    eigen: HermitianEigen,
    t: f64,
}

impl FiniteDynamics {
    pub fn new(phi: &Interaction, vol: &Volume, t: f64) -> Result<Self> {
        if vol.total_dim() > DENSE_LIMIT {
            return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
        }
        let h = phi.hamiltonian_on(vol, false)?;
        Ok(Self { vol: vol.clone(), eigen: HermitianEigen::new(&h)?, t })
    }

    pub fn volume(&self) -> &Volume {
        &self.vol
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        if self.t == 0.0 {
            return a.clone();
        }
        let inner = self.eigen.to_eigenbasis(a);
        let v = &self.eigen.values;
        let t = self.t;
        let rotated = CMatrix::from_fn(inner.nrows(), inner.ncols(), |i, j| {
            inner[(i, j)] * c64::new(0.0, t * (v[i] - v[j])).exp()
        });
        self.eigen.from_eigenbasis(&rotated)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub defect: f64,
    /// True when `χ_m = 1` on every charge of the volume.
    pub plateau_covers_volume: bool,
}

/// `‖α_t(τ_s(A)) − τ_s(α_t(A))‖` with `τ_s` realized as `U_m^† · U_m` on `V`.
#[allow(clippy::too_many_arguments)]
pub fn check_symmetry_commutes(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    s: f64,
    t: f64,
    m: f64,
    op: &LocalOperator,
    vol: &Volume,
) -> Result<CommutationReport> {
    for term in phi.terms_touching(op.support()) {
        if !vol.contains_all(phi.term(term).support()) {
            return Err(Error::VolumeTooSmall(format!(
                "term on {:?} meets the observable but leaves the volume",
                phi.term(term).support()
            )));
        }
    }
    let dynamics = FiniteDynamics::new(phi, vol, t)?;
    let u = TruncatedUnitary::build_partial(cf, lat, profile, a, s, m, vol)?;
    let a_v = embed(op, vol)?;
    let lhs = dynamics.apply(&u.twist_back(&a_v)?);
    let rhs = u.twist_back(&dynamics.apply(&a_v))?;
    let plateau_covers_volume =
        cf.collar(vol.sites()).iter().all(|&x| lat.sup_norm(x) <= m && vol.contains_all(cf.charge(x).support()));
    Ok(CommutationReport { defect: op_norm(&(lhs - rhs))?, plateau_covers_volume })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{kron, sigma_minus, sigma_plus};
    use crate::model::{builtin_interaction, ChargeSpec};
    use std::collections::BTreeMap;

    fn chain(n: u32) -> (Lattice, ChargeFamily) {
        let lat = Lattice::hypercubic(1, n).unwrap();
        let cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        (lat, cf)
    }

    fn model(name: &str, lat: &Lattice, cf: &ChargeFamily) -> Interaction {
        builtin_interaction(name, &BTreeMap::new(), lat, cf.site_dims()).unwrap()
    }

    #[test]
    fn multi_index_parsing_and_enumeration() {
        let a: MultiIndex = "1,0".parse().unwrap();
        assert_eq!(a.entries(), &[1, 0]);
        assert_eq!(a.to_string(), "1,0");
        assert!("1,x".parse::<MultiIndex>().is_err());
        let t = MultiIndex::enumerate(2, 1, &[]);
        assert_eq!(t, vec![MultiIndex::zero(2), MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1])]);
        let t = MultiIndex::enumerate(2, 1, &[1]);
        assert_eq!(t.len(), 2);
        assert_eq!(MultiIndex::enumerate(1, 2, &[]).len(), 3);
        assert_eq!(MultiIndex::new(vec![2, 1]).monomial(&[3.0, -2.0]), -18.0);
    }

    #[test]
    fn generator_weights_examples() {
        let (lat, cf) = chain(1);
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&[0, 1, 2]).unwrap();
        let g = build_generator(&cf, &lat, &profile, &MultiIndex::new(vec![1]), Scope::Truncated { m: 10.0 }, &vol)
            .unwrap();
        // -n_{-1} + n_1 in the basis |x_{-1} x_0 x_1>, n = diag(1, 0).
        let expect: Vec<f64> = (0..8).map(|i| -((i >> 2) & 1 ^ 1) as f64 + ((i & 1) ^ 1) as f64).collect();
        assert_eq!(algebra::max_abs(&(g.matrix() - algebra::real_diag(&expect))), 0.0);

        let g0 =
            build_generator(&cf, &lat, &profile, &MultiIndex::zero(1), Scope::Truncated { m: 10.0 }, &vol).unwrap();
        let total: Vec<f64> = (0..8u32).map(|i| (3 - i.count_ones()) as f64).collect();
        assert_eq!(algebra::max_abs(&(g0.matrix() - algebra::real_diag(&total))), 0.0);

        let (lat2, cf2) = chain(2);
        let w = generator_weights(&cf2, &lat2, &profile, &MultiIndex::new(vec![2]), Scope::Collar { region: &[3, 4] })
            .unwrap();
        assert_eq!(w, vec![(3, 1.0), (4, 4.0)]);
    }

    #[test]
    fn volume_too_small() {
        let (lat, cf) = chain(6);
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&[5, 6, 7]).unwrap();
        let r = TruncatedUnitary::build(&cf, &lat, &profile, &MultiIndex::zero(1), 1.0, 2.0, &vol);
        assert!(matches!(r, Err(Error::VolumeTooSmall(_))));
    }

    #[test]
    fn unitary_group_law() {
        let lat = Lattice::hypercubic(1, 2).unwrap();
        let cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&(0..5).collect::<Vec<_>>()).unwrap();
        let a = MultiIndex::new(vec![1]);
        let u = |s| TruncatedUnitary::build(&cf, &lat, &profile, &a, s, 1.0, &vol).unwrap();
        assert_eq!(algebra::max_abs(&(u(0.0).unitary - algebra::identity(32))), 0.0);
        let prod = &u(0.4).unitary * &u(1.3).unitary;
        assert!(algebra::max_abs(&(prod - u(1.7).unitary)) < 1e-10);
        assert!(u(0.4).is_diagonal());
    }

    #[test]
    fn single_qubit_unitary() {
        let lat = Lattice::from_points(vec![vec![0.5]], None).unwrap();
        let cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&[0]).unwrap();
        let u = TruncatedUnitary::build(&cf, &lat, &profile, &MultiIndex::new(vec![1]), 0.8, 3.0, &vol).unwrap();
        assert!((u.unitary[(0, 0)] - c64::new(0.0, 0.8 * 0.5).exp()).norm() < 1e-15);
        assert!((u.unitary[(1, 1)] - c64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let (lat, cf) = chain(4);
        let x = lat.site(&[1.0]).unwrap();
        let hop = LocalOperator::new(&[x, x + 1], &[2, 2], kron(&sigma_plus(), &sigma_minus())).unwrap();
        let s = 0.7;
        let same = apply_tau(&hop, &cf, &lat, &MultiIndex::zero(1), s).unwrap();
        assert!(algebra::max_abs(&(same.matrix() - hop.matrix())) < 1e-15);
        let twisted = apply_tau(&hop, &cf, &lat, &MultiIndex::new(vec![1]), s).unwrap();
        let phase = c64::new(0.0, s).exp();
        assert!(algebra::max_abs(&(twisted.matrix() - algebra::scale(hop.matrix(), phase))) < 1e-12);

        let n = cf.charge(x).clone();
        let t = apply_tau(&n, &cf, &lat, &MultiIndex::new(vec![1]), 2.3).unwrap();
        assert!(algebra::max_abs(&(t.matrix() - n.matrix())) < 1e-15);
    }

    #[test]
    fn tau_group_law_and_norm() {
        let (lat, cf) = chain(3);
        let a = MultiIndex::new(vec![2]);
        let op = LocalOperator::new(&[2, 3], &[2, 2], kron(&algebra::pauli_x(), &algebra::pauli_y())).unwrap();
        let one = apply_tau(&apply_tau(&op, &cf, &lat, &a, 0.3).unwrap(), &cf, &lat, &a, 0.9).unwrap();
        let both = apply_tau(&op, &cf, &lat, &a, 1.2).unwrap();
        assert!(algebra::max_abs(&(one.matrix() - both.matrix())) < 1e-10);
        assert!((both.norm().unwrap() - op.norm().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symmetry_audit() {
        let (lat, cf) = chain(5);
        let dip = model("dipole_hop4", &lat, &cf);
        let r = check_k_symmetric(&dip, &cf, &lat, 1, &[]).unwrap();
        assert!(r.pass, "{:?}", r.witness);
        assert!(r.max_defect <= 1e-12);
        let xy = model("xy_chain", &lat, &cf);
        assert!(check_k_symmetric(&xy, &cf, &lat, 0, &[]).unwrap().pass);
        let r = check_k_symmetric(&xy, &cf, &lat, 1, &[]).unwrap();
        let w = r.witness.unwrap();
        assert_eq!(w.a, MultiIndex::new(vec![1]));
        assert!(w.defect_norm > 0.5);
        let sb = model("symmetry_breaker", &lat, &cf);
        assert!(!check_k_symmetric(&sb, &cf, &lat, 0, &[]).unwrap().pass);
    }

    #[test]
    fn generators_commute() {
        let (lat, cf) = chain(2);
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&(0..5).collect::<Vec<_>>()).unwrap();
        let gs: Vec<LocalOperator> = MultiIndex::enumerate(1, 2, &[])
            .iter()
            .map(|a| build_generator(&cf, &lat, &profile, a, Scope::Truncated { m: 1.0 }, &vol).unwrap())
            .collect();
        for g in &gs {
            for h in &gs {
                assert_eq!(algebra::max_abs(&algebra::commutator(g.matrix(), h.matrix()).unwrap()), 0.0);
            }
        }
    }

    #[test]
    fn stabilization() {
        let (lat, cf) = chain(8);
        let profile = CutoffProfile::new(1).unwrap();
        let origin = lat.site(&[0.0]).unwrap();
        let op = LocalOperator::new(&[origin], &[2], algebra::pauli_x()).unwrap();
        let ms: Vec<f64> = (2..=6).map(f64::from).collect();
        let r = stabilization_check(&op, &cf, &lat, &profile, &MultiIndex::new(vec![1]), 0.9, &ms).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.ms.len(), 5);
        let id = LocalOperator::identity_on(&[origin], &[2]).unwrap();
        assert!(stabilization_check(&id, &cf, &lat, &profile, &MultiIndex::zero(1), 0.9, &ms).unwrap().pass);
        assert!(stabilization_check(&op, &cf, &lat, &profile, &MultiIndex::zero(1), 0.9, &[0.2]).is_err());
    }

    #[test]
    fn dynamics_commute_with_symmetry() {
        let (lat, cf) = chain(3);
        let profile = CutoffProfile::new(1).unwrap();
        let vol = cf.volume(&(0..7).collect::<Vec<_>>()).unwrap();
        let dip = model("dipole_hop4", &lat, &cf);
        let op = LocalOperator::new(&[3], &[2], algebra::pauli_x()).unwrap();
        let a = MultiIndex::new(vec![1]);
        let r0 = check_symmetry_commutes(&dip, &cf, &lat, &profile, &a, 0.6, 0.0, 4.0, &op, &vol).unwrap();
        assert_eq!(r0.defect, 0.0);
        let r = check_symmetry_commutes(&dip, &cf, &lat, &profile, &a, 0.6, 0.8, 4.0, &op, &vol).unwrap();
        assert!(r.plateau_covers_volume);
        assert!(r.defect <= 1e-9, "{}", r.defect);

        let sb = model("symmetry_breaker", &lat, &cf);
        let r =
            check_symmetry_commutes(&sb, &cf, &lat, &profile, &MultiIndex::zero(1), 0.6, 0.8, 4.0, &op, &vol).unwrap();
        assert!(r.defect > 0.01);
    }
}
