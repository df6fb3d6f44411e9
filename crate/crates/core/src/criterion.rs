//! The bound quantity `D_m = U h_m U^† + U^† h_m U − 2 h_m`, its closed-form
//! majorant, the entropy identities it controls, and sweeps over `m`.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{self, c64, embed, op_norm, CMatrix, HermitianEigen, LocalOperator, Volume, DENSE_LIMIT};
use crate::cutoff::{compute_ca, evaluate_cutoff, taylor_remainder_exact, CutoffProfile};
use crate::error::{Error, Result};
use crate::geometry::{least_squares_slope, Lattice};
use crate::model::{check_decay_k, surface_energy, surface_terms, ChargeFamily, Interaction};
use crate::symmetry::{collar_volume, exp_is, q_m, MultiIndex, TruncatedUnitary, SYMMETRY_TOL};
use crate::thermal::{gibbs, relative_entropy_spectral};

/// Per-term pieces with `‖D_Λ‖` at most this multiple of `‖φ(Λ)‖` are treated
/// as exact cancellations when assembling the exact norm.
pub const CANCELLATION_TOL: f64 = 1e-13;

/// Clusters up to this dimension are diagonalized densely.
const DENSE_CLUSTER: usize = 1024;
/// Larger clusters use Lanczos on local matvecs up to this dimension.
pub const LANCZOS_LIMIT: usize = 1 << 17;
const LANCZOS_ITER: usize = 200;

/// `Q_m` together with the supports of every term meeting it: the smallest
/// volume on which `h_m` and `D_m` live.
pub fn criterion_sites(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, m: f64) -> Vec<usize> {
    let q = q_m(cf, lat, m);
    let mut sites: BTreeSet<usize> = q.iter().copied().collect();
    for t in phi.terms_touching(&q) {
        sites.extend(phi.term(t).support());
        sites.extend(cf.support_union(&cf.collar(phi.term(t).support())));
    }
    sites.into_iter().collect()
}

/// `h_m`: the sum of all terms meeting `Q_m`, written on `vol`.
pub fn compute_hm(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, m: f64, vol: &Volume) -> Result<LocalOperator> {
    let q = q_m(cf, lat, m);
    let needed = criterion_sites(phi, cf, lat, m);
    if !vol.contains_all(&needed) {
        return Err(Error::VolumeTooSmall(format!("h_m needs the sites {needed:?}")));
    }
    surface_energy(phi, &q, vol)
}

/// Context shared by every evaluation of `D_m` at fixed `(a, s, m)`.
#[derive(Clone, Copy)]
pub struct DmSetup<'a> {
    pub phi: &'a Interaction,
    pub cf: &'a ChargeFamily,
    pub lat: &'a Lattice,
    pub profile: &'a CutoffProfile,
    pub a: &'a MultiIndex,
    pub s: f64,
    pub m: f64,
}

impl DmSetup<'_> {
    /// `U φ U^† + U^† φ U − 2φ` for a group of terms, with `U` built from the
    /// charges touching them. Returns the volume and the matrix on it.
    fn twisted_defect(&self, terms: &[usize]) -> Result<(Volume, CMatrix)> {
        let mut support: Vec<usize> = terms.iter().flat_map(|&t| self.phi.term(t).support().to_vec()).collect();
        support.sort_unstable();
        support.dedup();
        let vol = collar_volume(self.cf, &support)?;
        if vol.total_dim() > DENSE_LIMIT {
            return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
        }
        let mut g = algebra::zeros(vol.total_dim());
        for x in self.cf.collar(&support) {
            let w = evaluate_cutoff(self.profile, self.m, self.a, self.lat.point(x))?;
            if w != 0.0 {
                algebra::embed_add(self.cf.charge(x), &vol, c64::new(w, 0.0), &mut g)?;
            }
        }
        let u = exp_is(&LocalOperator::new(vol.sites(), vol.dims(), g)?, self.s)?;
        let mut h = algebra::zeros(vol.total_dim());
        for &t in terms {
            algebra::embed_add(self.phi.term(t).op(), &vol, c64::new(1.0, 0.0), &mut h)?;
        }
        let fwd = algebra::conjugate_unitary(&u, &h)?;
        let bwd = algebra::conjugate_unitary(&algebra::adjoint(&u), &h)?;
        let d = fwd + bwd - algebra::scale(&h, c64::new(2.0, 0.0));
        Ok((vol, d))
    }

    fn terms(&self) -> Vec<usize> {
        self.phi.terms_touching(&q_m(self.cf, self.lat, self.m))
    }
}

/// How much of `D_m` to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmMode {
    /// Full matrix on the criterion volume.
    Dense,
    /// Exact norm from clusters of overlapping nonzero per-term pieces.
    Cluster,
    /// Only the triangle sum of per-term norms.
    PerTerm,
}

#[derive(Clone, Debug, Serialize)]
pub struct DmReport {
    pub m: f64,
    pub qm_size: usize,
    pub terms: usize,
    /// `‖D_m‖`, when it could be computed.
    pub norm_exact: Option<f64>,
    /// `Σ_{Λ ∩ Q_m ≠ ∅} ‖U φ(Λ) U^† + U^† φ(Λ) U − 2φ(Λ)‖`
    pub norm_triangle: f64,
    pub per_term: Vec<(usize, f64)>,
    pub clusters: usize,
    pub largest_cluster_sites: usize,
    /// Sum of per-term norms dropped as cancellations in cluster mode.
    pub dropped: f64,
    pub note: Option<String>,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `D_m` in the requested mode. The triangle sum is always computed.
pub fn compute_dm(setup: &DmSetup<'_>, mode: DmMode) -> Result<DmReport> {
    let terms = setup.terms();
    let per_term: Vec<(usize, f64)> =
        terms.par_iter().map(|&t| Ok((t, op_norm(&setup.twisted_defect(&[t])?.1)?))).collect::<Result<Vec<_>>>()?;
    let norm_triangle = compensated_sum(per_term.iter().map(|p| p.1));
    let qm_size = q_m(setup.cf, setup.lat, setup.m).len();
    let mut report = DmReport {
        m: setup.m,
        qm_size,
        terms: terms.len(),
        norm_exact: None,
        norm_triangle,
        per_term,
        clusters: 0,
        largest_cluster_sites: 0,
        dropped: 0.0,
        note: None,
    };
    match mode {
        DmMode::PerTerm => {}
        DmMode::Dense => match dm_dense(setup) {
            Ok((_, d)) => report.norm_exact = Some(op_norm(&d)?),
            Err(Error::DenseLimit { dim, limit }) => {
                report.note = Some(format!("criterion volume of dimension {dim} exceeds {limit}"))
            }
            Err(e) => return Err(e),
        },
        DmMode::Cluster => cluster_norm(setup, &mut report)?,
    }
    Ok(report)
}

/// `D_m` as a matrix on the criterion volume.
pub fn dm_dense(setup: &DmSetup<'_>) -> Result<(Volume, CMatrix)> {
    let sites = criterion_sites(setup.phi, setup.cf, setup.lat, setup.m);
    let vol = setup.cf.volume(&sites)?;
    if vol.total_dim() > DENSE_LIMIT {
        return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
    }
    let h = compute_hm(setup.phi, setup.cf, setup.lat, setup.m, &vol)?;
    let u = TruncatedUnitary::build_partial(setup.cf, setup.lat, setup.profile, setup.a, setup.s, setup.m, &vol)?;
    let d = u.twist(h.matrix())? + u.twist_back(h.matrix())? - algebra::scale(h.matrix(), c64::new(2.0, 0.0));
    Ok((vol, d))
}

fn cluster_norm(setup: &DmSetup<'_>, report: &mut DmReport) -> Result<()> {
    let mut live = Vec::new();
    let mut dropped = Vec::new();
    for &(t, n) in &report.per_term {
        if n <= CANCELLATION_TOL * setup.phi.term(t).norm().max(1.0) {
            dropped.push(n);
        } else {
            live.push(t);
        }
    }
    report.dropped = compensated_sum(dropped);
    // Union-find over terms whose twisted pieces share a site.
    let footprint: Vec<Vec<usize>> = live
        .iter()
        .map(|&t| Ok(collar_volume(setup.cf, setup.phi.term(t).support())?.sites().to_vec()))
        .collect::<Result<_>>()?;
    let mut parent: Vec<usize> = (0..live.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let n = p[j];
            p[j] = r;
            j = n;
        }
        r
    }
    let mut owner: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (i, fp) in footprint.iter().enumerate() {
        for &x in fp {
            if let Some(&j) = owner.get(&x) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            } else {
                owner.insert(x, i);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..live.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    report.clusters = groups.len();
    let mut extremes = Vec::with_capacity(groups.len());
    let mut residual = 0.0;
    for members in groups.values() {
        let terms: Vec<usize> = members.iter().map(|&i| live[i]).collect();
        let terms = &terms;
        let mut sites: Vec<usize> = members.iter().flat_map(|&i| footprint[i].iter().copied()).collect();
        sites.sort_unstable();
        sites.dedup();
        let vol = setup.cf.volume(&sites)?;
        report.largest_cluster_sites = report.largest_cluster_sites.max(vol.len());
        let dim = vol.total_dim();
        if dim <= DENSE_CLUSTER {
            let (_, d) = setup.twisted_defect(terms)?;
            let e = HermitianEigen::new(&d)?;
            extremes.push((e.values[0], *e.values.last().unwrap_or(&0.0)));
        } else if dim <= LANCZOS_LIMIT {
            let pieces: Vec<(LocalOperator, algebra::Placement)> = terms
                .iter()
                .map(|&t| {
                    let (tv, d) = setup.twisted_defect(&[t])?;
                    let op = LocalOperator::new(tv.sites(), tv.dims(), d)?;
                    let place = algebra::Placement::new(tv.sites(), tv.dims(), &vol)?;
                    Ok((op, place))
                })
                .collect::<Result<_>>()?;
            let apply = |v: &[c64], out: &mut [c64]| {
                for (op, place) in &pieces {
                    algebra::apply_local(op, place, v, out);
                }
            };
            let e = algebra::lanczos_extremes(apply, dim, LANCZOS_ITER, 1e-10, 0x5eed)?;
            if !e.converged {
                report.note = Some(format!("Lanczos did not converge on a cluster of dimension {dim}"));
                return Ok(());
            }
            residual += e.residual_lowest.max(e.residual_highest);
            extremes.push((e.lowest, e.highest));
        } else {
            report.note = Some(format!("a cluster of dimension {dim} exceeds {LANCZOS_LIMIT}"));
            return Ok(());
        }
    }
    // Disjoint clusters commute; the spectrum of the sum is the sum of spectra.
    let lo = compensated_sum(extremes.iter().map(|e| e.0));
    let hi = compensated_sum(extremes.iter().map(|e| e.1));
    report.norm_exact = Some(lo.abs().max(hi.abs()));
    if residual > 0.0 {
        report.note = Some(format!("Lanczos residual {residual:.3e}"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RhsBound {
    pub value: f64,
    /// `|Q_m| / m^{2(k − |a| + 1)}`
    pub mechanism: f64,
    pub exponent: u32,
}

/// `4 s² C_a² N0² |Q_m| / m^{2(k−|a|+1)} · decay_sup`.
#[allow(clippy::too_many_arguments)]
pub fn rhs_bound(
    a: &MultiIndex,
    k: u32,
    s: f64,
    c_a: f64,
    n0: f64,
    m: f64,
    qm_size: usize,
    decay_sup: f64,
) -> Result<RhsBound> {
    if a.order() > k {
        return Err(Error::Precondition(format!("|a| = {} exceeds k = {k}", a.order())));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let exponent = 2 * (k - a.order() + 1);
    let mechanism = qm_size as f64 / m.powi(exponent as i32);
    let value = 4.0 * s * s * c_a * c_a * n0 * n0 * mechanism * decay_sup;
    Ok(RhsBound { value, mechanism, exponent })
}

/// One row of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct MWBoundReport {
    pub m: u32,
    pub a: MultiIndex,
    pub s: f64,
    pub beta: f64,
    #[serde(rename = "Qm_size")]
    pub qm_size: usize,
    #[serde(rename = "Dm_norm_exact")]
    pub dm_norm_exact: Option<f64>,
    #[serde(rename = "Dm_norm_triangle")]
    pub dm_norm_triangle: f64,
    pub rhs_bound: Option<f64>,
    pub mechanism: Option<f64>,
    #[serde(rename = "S_fwd")]
    pub s_fwd: Option<f64>,
    #[serde(rename = "S_bwd")]
    pub s_bwd: Option<f64>,
    pub beta_trace: Option<f64>,
    pub equality_defect: Option<f64>,
    /// Whether `Q_m` fits inside the volume used for the entropy columns.
    pub qm_inside_volume: Option<bool>,
    pub volume_sites: Option<usize>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntropyBound {
    pub s_fwd: f64,
    pub s_bwd: f64,
    pub beta_trace: f64,
    pub equality_defect: f64,
    pub qm_inside_volume: bool,
}

/// `S(ρ‖UρU^†) + S(ρ‖U^†ρU)` against `β Tr(ρ(U H U^† + U^† H U − 2H))` on `vol`,
/// with `ρ` the Gibbs state of `H_V` and `U` the truncated unitary restricted to
/// the charges inside `vol`.
#[allow(clippy::too_many_arguments)]
pub fn entropy_bound(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    s: f64,
    m: f64,
    beta: f64,
    vol: &Volume,
) -> Result<EntropyBound> {
    if vol.total_dim() > DENSE_LIMIT {
        return Err(Error::DenseLimit { dim: vol.total_dim(), limit: DENSE_LIMIT });
    }
    let h = phi.hamiltonian_on(vol, false)?;
    let state = gibbs(&h, beta)?;
    let u = TruncatedUnitary::build_partial(cf, lat, profile, a, s, m, vol)?;
    // UρU^† and U^†ρU share the spectrum of ρ; only the eigenvectors move.
    let moved = |w: CMatrix| HermitianEigen { values: state.eigen.values.clone(), vectors: w };
    let fwd = moved(&u.unitary * &state.eigen.vectors);
    let bwd = moved(u.unitary.adjoint() * &state.eigen.vectors);
    let lw = &state.log_weights;
    let s_fwd = relative_entropy_spectral(&state.eigen, lw, &fwd, lw)?;
    let s_bwd = relative_entropy_spectral(&state.eigen, lw, &bwd, lw)?;
    let dv = u.twist(&h)? + u.twist_back(&h)? - algebra::scale(&h, c64::new(2.0, 0.0));
    let beta_trace = beta * state.expect(&dv).re;
    Ok(EntropyBound {
        s_fwd,
        s_bwd,
        beta_trace,
        equality_defect: (s_fwd + s_bwd - beta_trace).abs(),
        qm_inside_volume: vol.contains_all(&u.q_m),
    })
}

/// Parameters of a sweep over `m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub a: MultiIndex,
    pub k: u32,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default = "one")]
    pub beta: f64,
    pub m_values: Vec<u32>,
    #[serde(default = "default_slope")]
    pub slope_threshold: f64,
    /// Compute the exact norm by clusters.
    #[serde(default = "yes")]
    pub exact: bool,
    /// Compute the entropy columns when the criterion volume is dense.
    #[serde(default = "yes")]
    pub entropy: bool,
    /// Wall-clock budget; rows started after it elapses are not computed.
    #[serde(default)]
    pub max_seconds: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_slope() -> f64 {
    0.05
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Bounded,
    Growing,
    Truncated,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::Growing => "growing",
            Self::Truncated => "truncated",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Least-squares slope of `log D_triangle` against `log m` over the upper half.
    pub exponent: Option<f64>,
    pub reason: String,
    /// The `m` values actually covered.
    pub m_range: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<MWBoundReport>,
    pub verdict: Verdict,
    pub c_a: Option<f64>,
    pub decay_sup: f64,
    /// Whether the interaction passed the k-symmetry audit. The closed-form
    /// bound is only reported for symmetric interactions.
    pub k_symmetric: bool,
    pub truncated: bool,
}

/// Classifies a sweep from its `(m, triangle, rhs)` rows.
pub fn classify(rows: &[(u32, f64, Option<f64>)], slope_threshold: f64) -> Verdict {
    let m_range: Vec<u32> = rows.iter().map(|r| r.0).collect();
    if rows.is_empty() {
        return Verdict { kind: VerdictKind::Truncated, exponent: None, reason: "no rows".into(), m_range };
    }
    let upper = &rows[rows.len() / 2..];
    let exponent = if upper.len() >= 2 && upper.iter().all(|r| r.1 > 0.0) {
        least_squares_slope(&upper.iter().map(|r| ((r.0 as f64).ln(), r.1.ln())).collect::<Vec<_>>())
    } else {
        None
    };
    if rows.iter().all(|r| r.1 == 0.0) {
        return Verdict { kind: VerdictKind::Bounded, exponent, reason: "D_m vanishes identically".into(), m_range };
    }
    if let Some(e) = exponent {
        if e <= slope_threshold {
            return Verdict {
                kind: VerdictKind::Bounded,
                exponent,
                reason: format!("upper-half slope {e:.3} ≤ {slope_threshold}"),
                m_range,
            };
        }
    }
    let covered = rows.iter().all(|r| r.2.is_some_and(|b| r.1 <= b));
    let rhs: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
    let rhs_nonincreasing = rhs.len() == rows.len() && rhs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    if covered && rhs_nonincreasing {
        return Verdict {
            kind: VerdictKind::Bounded,
            exponent,
            reason: "below a nonincreasing closed-form bound at every m".into(),
            m_range,
        };
    }
    Verdict {
        kind: VerdictKind::Growing,
        exponent,
        reason: match exponent {
            Some(e) => format!("upper-half slope {e:.3} > {slope_threshold}"),
            None => "not bounded by a nonincreasing majorant".into(),
        },
        m_range,
    }
}

/// Evaluates one sweep row.
#[allow(clippy::too_many_arguments)]
fn sweep_row(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    spec: &SweepSpec,
    m: u32,
    c_a: Option<f64>,
    decay_sup: f64,
) -> Result<MWBoundReport> {
    let mf = m as f64;
    let setup = DmSetup { phi, cf, lat, profile, a: &spec.a, s: spec.s, m: mf };
    let dm = compute_dm(&setup, if spec.exact { DmMode::Cluster } else { DmMode::PerTerm })?;
    let rhs = match c_a {
        Some(c) => Some(rhs_bound(&spec.a, spec.k, spec.s, c, cf.n0(), mf, dm.qm_size, decay_sup)?),
        None => None,
    };
    let mut row = MWBoundReport {
        m,
        a: spec.a.clone(),
        s: spec.s,
        beta: spec.beta,
        qm_size: dm.qm_size,
        dm_norm_exact: dm.norm_exact,
        dm_norm_triangle: dm.norm_triangle,
        rhs_bound: rhs.map(|r| r.value),
        mechanism: rhs.map(|r| r.mechanism),
        s_fwd: None,
        s_bwd: None,
        beta_trace: None,
        equality_defect: None,
        qm_inside_volume: None,
        volume_sites: None,
    };
    if spec.entropy {
        let vol = cf.volume(&criterion_sites(phi, cf, lat, mf))?;
        if vol.total_dim() <= DENSE_LIMIT {
            let e = entropy_bound(phi, cf, lat, profile, &spec.a, spec.s, mf, spec.beta, &vol)?;
            row.s_fwd = Some(e.s_fwd);
            row.s_bwd = Some(e.s_bwd);
            row.beta_trace = Some(e.beta_trace);
            row.equality_defect = Some(e.equality_defect);
            row.qm_inside_volume = Some(e.qm_inside_volume);
            row.volume_sites = Some(vol.len());
        }
    }
    Ok(row)
}

/// Whether every unbounded axis of the lattice reaches `needed`.
fn free_axes_cover(lat: &Lattice, needed: f64) -> bool {
    let bounds = lat.slab_bounds();
    (0..lat.dim()).filter(|j| !bounds.contains_key(j)).all(|j| {
        let extent = lat.points().iter().map(|p| p[j].abs()).fold(0.0, f64::max);
        extent >= needed
    })
}

/// Rows over `spec.m_values`, in that order.
pub fn sweep(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    spec: &SweepSpec,
) -> Result<SweepReport> {
    if spec.a.dim() != lat.dim() {
        return Err(Error::DimensionMismatch(format!(
            "a has {} entries, lattice dimension is {}",
            spec.a.dim(),
            lat.dim()
        )));
    }
    if spec.m_values.contains(&0) {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let c_a = if spec.a.order() <= spec.k { Some(compute_ca(profile, &spec.a, spec.k)?) } else { None };
    let decay_sup = check_decay_k(phi, cf, lat, spec.k)?.sup_value;
    let k_symmetric = crate::symmetry::check_k_symmetric(phi, cf, lat, spec.k, &phi.index_set)?.pass;
    let bound_ca = if k_symmetric { c_a } else { None };
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut truncated = false;
    for &m in &spec.m_values {
        if spec.max_seconds.is_some_and(|t| start.elapsed().as_secs_f64() > t)
            || !free_axes_cover(lat, 2.0 * m as f64 + cf.r0() + phi.range(lat))
        {
            truncated = true;
            break;
        }
        rows.push(sweep_row(phi, cf, lat, profile, spec, m, bound_ca, decay_sup)?);
    }
    let summary: Vec<(u32, f64, Option<f64>)> = rows.iter().map(|r| (r.m, r.dm_norm_triangle, r.rhs_bound)).collect();
    let mut verdict = classify(&summary, spec.slope_threshold);
    if truncated {
        verdict.reason =
            format!("resource limit reached; {} of {} rows ({})", rows.len(), spec.m_values.len(), verdict.reason);
        verdict.kind = VerdictKind::Truncated;
    }
    Ok(SweepReport { rows, verdict, c_a, decay_sup, k_symmetric, truncated })
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderConjugationReport {
    pub term: usize,
    pub anchor: usize,
    /// `Σ_z |R_{k+1}(x, z)|` over the charges touching the term.
    pub remainder_l1: f64,
    /// `‖U φ U^† − e^{isW_R} φ e^{−isW_R}‖`
    pub cancellation_defect: f64,
    /// `‖F(0)‖`
    pub f_at_zero: f64,
    /// Central difference `‖(F(h) − F(−h)) / 2h‖` at `h = 1e−4`.
    pub f_prime_at_zero: f64,
    /// `‖F(s)‖`
    pub f_at_s: f64,
    /// `4 s² N0² (Σ_z |R|)² ‖φ‖`
    pub bound_remainder: f64,
    /// `4 s² C_a² N0² m^{−2(k−|a|+1)} (Σ_z |x − z|^{k+1})² ‖φ‖`
    pub bound_closed_form: f64,
    /// `‖U φ U^† + U^† φ U − 2φ − F(s)‖`
    pub identity_defect: f64,
    pub pass: bool,
}

/// Verifies the cancellation step for one term anchored at one of its sites.
#[allow(clippy::too_many_arguments)]
pub fn remainder_conjugation_check(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    profile: &CutoffProfile,
    a: &MultiIndex,
    k: u32,
    m: f64,
    term: usize,
    anchor: usize,
    s: f64,
) -> Result<RemainderConjugationReport> {
    if term >= phi.len() {
        return Err(Error::InvalidArgument(format!("no term {term}")));
    }
    let t = phi.term(term);
    if !t.support().contains(&anchor) {
        return Err(Error::InvalidArgument(format!("anchor {anchor} is not in the term's support")));
    }
    if a.order() > k {
        return Err(Error::Precondition(format!("|a| = {} exceeds k = {k}", a.order())));
    }
    // The cancellation needs every multipole symmetry in T_k on this term.
    let single = Interaction::new(vec![t.op().clone()], phi.site_dims().to_vec())?;
    let audit = crate::symmetry::check_k_symmetric(&single, cf, lat, k, &phi.index_set)?;
    if let Some(w) = audit.witness {
        return Err(Error::Precondition(format!(
            "term {term} is not invariant under the multipole symmetry a = {}",
            w.a
        )));
    }
    let collar = cf.collar(t.support());
    let vol = crate::symmetry::collar_volume(cf, t.support())?;
    let x = lat.point(anchor).to_vec();
    let mut g = algebra::zeros(vol.total_dim());
    let mut wr = algebra::zeros(vol.total_dim());
    let mut remainder_l1 = 0.0;
    let mut dist_sum = 0.0;
    for &z in &collar {
        let w = evaluate_cutoff(profile, m, a, lat.point(z))?;
        algebra::embed_add(cf.charge(z), &vol, c64::new(w, 0.0), &mut g)?;
        let r = taylor_remainder_exact(profile, m, a, k, &x, lat.point(z))?;
        remainder_l1 += r.abs();
        dist_sum += lat.dist(anchor, z).powi(k as i32 + 1);
        algebra::embed_add(cf.charge(z), &vol, c64::new(r, 0.0), &mut wr)?;
    }
    let phi_v = embed(t.op(), &vol)?;
    let g_op = LocalOperator::new(vol.sites(), vol.dims(), g)?;
    let wr_op = LocalOperator::new(vol.sites(), vol.dims(), wr)?;
    let u = exp_is(&g_op, s)?;
    let lhs = algebra::conjugate_unitary(&u, &phi_v)?;
    let rhs = algebra::conjugate_unitary(&exp_is(&wr_op, s)?, &phi_v)?;
    let cancellation_defect = op_norm(&(&lhs - &rhs))?;

    let f = |r: f64| -> Result<CMatrix> {
        let e = exp_is(&wr_op, r)?;
        let one = algebra::conjugate_unitary(&algebra::adjoint(&e), &phi_v)?;
        let two = algebra::conjugate_unitary(&e, &phi_v)?;
        Ok(one + two - algebra::scale(&phi_v, c64::new(2.0, 0.0)))
    };
    let h = 1e-4;
    let f_at_zero = op_norm(&f(0.0)?)?;
    let f_prime_at_zero = op_norm(&(f(h)? - f(-h)?))? / (2.0 * h);
    let fs = f(s)?;
    let f_at_s = op_norm(&fs)?;
    let direct =
        &lhs + algebra::conjugate_unitary(&algebra::adjoint(&u), &phi_v)? - algebra::scale(&phi_v, c64::new(2.0, 0.0));
    let identity_defect = op_norm(&(direct - &fs))?;

    let n0 = cf.n0();
    let bound_remainder = 4.0 * s * s * n0 * n0 * remainder_l1 * remainder_l1 * t.norm();
    let c_a = compute_ca(profile, a, k)?;
    let bound_closed_form =
        4.0 * s * s * c_a * c_a * n0 * n0 * m.powi(-2 * (k - a.order() + 1) as i32) * dist_sum * dist_sum * t.norm();
    let scale = t.norm().max(1.0);
    let pass = cancellation_defect <= 1e-10 * scale
        && f_at_zero <= SYMMETRY_TOL * scale
        && f_prime_at_zero <= 1e-6 * scale
        && f_at_s <= bound_remainder * (1.0 + 1e-9) + 1e-12
        && f_at_s <= bound_closed_form * (1.0 + 1e-9) + 1e-12;
    Ok(RemainderConjugationReport {
        term,
        anchor,
        remainder_l1,
        cancellation_defect,
        f_at_zero,
        f_prime_at_zero,
        f_at_s,
        bound_remainder,
        bound_closed_form,
        identity_defect,
        pass,
    })
}

/// Terms whose sites do not all carry the same cutoff value: those straddling
/// the transition region of `χ_m`.
pub fn straddling_terms(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, m: f64) -> Vec<usize> {
    let q = q_m(cf, lat, m);
    phi.terms_touching(&q)
        .into_iter()
        .filter(|&t| {
            let vals: Vec<f64> =
                cf.collar(phi.term(t).support()).iter().map(|&z| crate::cutoff::chi_m(m, lat.point(z))).collect();
            vals.iter().any(|&v| v != vals[0])
        })
        .collect()
}

/// Indices of the terms summed in `h_m`.
pub fn hm_terms(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, m: f64, vol: &Volume) -> Vec<usize> {
    surface_terms(phi, &q_m(cf, lat, m), vol)
}
