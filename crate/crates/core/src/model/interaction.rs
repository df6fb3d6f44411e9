use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{self, c64, CMatrix, LocalOperator, Volume};
use crate::error::{Error, Result};

/// Tolerance on the relative Hermitian defect of a stored term.
const TERM_HERMITIAN_TOL: f64 = 1e-12;

/// What an interaction claims about its multipole symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SymmetryClaim {
    #[default]
    None,
    /// Invariant under every multipole symmetry of order at most `k`.
    K(u32),
    /// Diagonal in the charge basis, hence invariant under every multipole symmetry.
    Diagonal,
}

impl SymmetryClaim {
    pub fn k(self) -> Option<u32> {
        match self {
            Self::K(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    op: LocalOperator,
    norm: f64,
}

impl Term {
    pub fn support(&self) -> &[usize] {
        self.op.support()
    }

    pub fn op(&self) -> &LocalOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// A finite interaction `Λ ↦ φ(Λ)`. Terms given on the same support are summed.
#[derive(Clone, Debug)]
pub struct Interaction {
    terms: Vec<Term>,
    by_site: Vec<Vec<usize>>,
    site_dims: Vec<usize>,
    pub claim: SymmetryClaim,
    /// Axes (0-based) on which the symmetry is not required, for slab geometries.
    pub index_set: Vec<usize>,
    pub name: Option<String>,
}

impl Interaction {
    pub fn new(ops: Vec<LocalOperator>, site_dims: Vec<usize>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<usize>, LocalOperator> = BTreeMap::new();
        for op in ops {
            for (&s, &d) in op.support().iter().zip(op.dims()) {
                match site_dims.get(s) {
                    None => return Err(Error::SiteOutOfRange(s)),
                    Some(&sd) if sd != d => {
                        return Err(Error::DimensionMismatch(format!("site {s} has local dimension {sd}")))
                    }
                    _ => {}
                }
            }
            match merged.get_mut(op.support()) {
                Some(existing) => {
                    let sum = existing.matrix() + op.matrix();
                    *existing = LocalOperator::new(op.support(), op.dims(), sum)?;
                }
                None => {
                    merged.insert(op.support().to_vec(), op);
                }
            }
        }
        let mut terms = Vec::with_capacity(merged.len());
        for op in merged.into_values() {
            let defect = algebra::hermitian_defect(op.matrix());
            if defect > TERM_HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
            let norm = op.norm()?;
            terms.push(Term { op, norm });
        }
        let mut by_site = vec![Vec::new(); site_dims.len()];
        for (t, term) in terms.iter().enumerate() {
            for &s in term.support() {
                by_site[s].push(t);
            }
        }
        Ok(Self { terms, by_site, site_dims, claim: SymmetryClaim::None, index_set: Vec::new(), name: None })
    }

    pub fn empty(site_dims: Vec<usize>) -> Self {
        Self::new(Vec::new(), site_dims).expect("empty interaction is valid")
    }

    pub fn with_claim(mut self, claim: SymmetryClaim) -> Self {
        self.claim = claim;
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, t: usize) -> &Term {
        &self.terms[t]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    /// Indices of the terms whose support contains `site`.
    pub fn terms_at(&self, site: usize) -> &[usize] {
        &self.by_site[site]
    }

    /// Terms meeting `sites`, ascending.
    pub fn terms_touching(&self, sites: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = sites.iter().flat_map(|&s| self.by_site[s].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Largest Euclidean diameter of a term support, used for volume collars.
    pub fn range(&self, lat: &crate::geometry::Lattice) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let s = t.support();
                let mut d = 0.0f64;
                for (i, &a) in s.iter().enumerate() {
                    for &b in &s[i + 1..] {
                        d = d.max(lat.dist(a, b));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Every coupling multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let ops = self.terms.iter().map(|t| t.op.scaled(c64::new(c, 0.0))).collect();
        let mut out = Self::new(ops, self.site_dims.clone())?;
        out.claim = self.claim;
        out.index_set = self.index_set.clone();
        out.name = self.name.clone();
        Ok(out)
    }

    /// `H_V = Σ_{Λ ⊆ V} φ(Λ)` as a dense matrix; errors on terms that meet `V`
    /// without being contained in it when `strict` is set.
    pub fn hamiltonian_on(&self, vol: &Volume, strict: bool) -> Result<CMatrix> {
        let mut h = algebra::zeros(vol.total_dim());
        for t in self.terms_touching(vol.sites()) {
            let term = &self.terms[t];
            if !vol.contains_all(term.support()) {
                if strict {
                    return Err(Error::SupportNotContained {
                        support: term.support().to_vec(),
                        volume: vol.sites().to_vec(),
                    });
                }
                continue;
            }
            add_embedded(&mut h, term.op(), vol)?;
        }
        Ok(h)
    }
}

pub(crate) fn add_embedded(target: &mut CMatrix, op: &LocalOperator, vol: &Volume) -> Result<()> {
    algebra::embed_add(op, vol, c64::new(1.0, 0.0), target)
}

/// `h_X`: the sum of all terms inside `V` that meet `X`.
pub fn surface_energy(phi: &Interaction, x: &[usize], vol: &Volume) -> Result<LocalOperator> {
    if !vol.contains_all(x) {
        return Err(Error::SupportNotContained { support: x.to_vec(), volume: vol.sites().to_vec() });
    }
    let mut h = algebra::zeros(vol.total_dim());
    for t in surface_terms(phi, x, vol) {
        add_embedded(&mut h, phi.term(t).op(), vol)?;
    }
    LocalOperator::new(vol.sites(), vol.dims(), h)
}

/// Indices of the terms summed by [`surface_energy`].
pub fn surface_terms(phi: &Interaction, x: &[usize], vol: &Volume) -> Vec<usize> {
    phi.terms_touching(x).into_iter().filter(|&t| vol.contains_all(phi.term(t).support())).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub support: Vec<usize>,
    pub matrix_re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_im: Option<Vec<Vec<f64>>>,
    #[serde(default = "one")]
    pub coupling: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// JSON form of an interaction: explicit terms, a builtin, or both.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinSpec>,
    #[serde(default)]
    pub k_claimed: Option<u32>,
    /// 1-based axes exempt from the symmetry requirement.
    #[serde(default, rename = "index_set_I")]
    pub index_set_i: Vec<usize>,
}

impl InteractionSpec {
    pub fn build(&self, lat: &crate::geometry::Lattice, site_dims: &[usize]) -> Result<Interaction> {
        let mut ops = Vec::new();
        let mut claim = self.k_claimed.map_or(SymmetryClaim::None, SymmetryClaim::K);
        let mut name = None;
        if let Some(b) = &self.builtin {
            let built = super::zoo::builtin_interaction(&b.name, &b.params, lat, site_dims)?;
            if self.k_claimed.is_none() {
                claim = built.claim;
            }
            name = built.name.clone();
            ops.extend(built.terms.into_iter().map(|t| t.op));
        }
        for t in &self.terms {
            let m = algebra::from_parts(&t.matrix_re, t.matrix_im.as_deref())?;
            let dims = t
                .support
                .iter()
                .map(|&s| site_dims.get(s).copied().ok_or(Error::SiteOutOfRange(s)))
                .collect::<Result<Vec<_>>>()?;
            ops.push(LocalOperator::new(&t.support, &dims, algebra::scale(&m, c64::new(t.coupling, 0.0)))?);
        }
        let mut phi = Interaction::new(ops, site_dims.to_vec())?;
        phi.claim = claim;
        phi.name = name;
        phi.index_set = self
            .index_set_i
            .iter()
            .map(|&j| {
                if j == 0 || j > lat.dim() {
                    Err(Error::Config(format!("index_set_I entry {j} outside 1..={}", lat.dim())))
                } else {
                    Ok(j - 1)
                }
            })
            .collect::<Result<_>>()?;
        Ok(phi)
    }

    /// Explicit-term form of an interaction, with the support in canonical order.
    pub fn of(phi: &Interaction) -> Self {
        let terms = phi
            .terms()
            .iter()
            .map(|t| {
                let m = t.matrix();
                let n = m.nrows();
                let part = |f: fn(c64) -> f64| (0..n).map(|i| (0..n).map(|j| f(m[(i, j)])).collect()).collect();
                TermSpec {
                    support: t.support().to_vec(),
                    matrix_re: part(|z| z.re),
                    matrix_im: Some(part(|z| z.im)),
                    coupling: 1.0,
                }
            })
            .collect();
        Self {
            terms,
            builtin: None,
            k_claimed: phi.claim.k(),
            index_set_i: phi.index_set.iter().map(|j| j + 1).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, pauli_z};
    use crate::geometry::Lattice;

    #[test]
    fn merges_duplicate_supports() {
        let a = LocalOperator::new(&[0], &[2], pauli_z()).unwrap();
        let b = LocalOperator::new(&[0], &[2], pauli_x()).unwrap();
        let phi = Interaction::new(vec![a, b], vec![2, 2]).unwrap();
        assert_eq!(phi.len(), 1);
        assert!((phi.term(0).norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_terms() {
        let bad = LocalOperator::new(&[0], &[2], algebra::sigma_plus()).unwrap();
        assert!(matches!(Interaction::new(vec![bad], vec![2]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn json_round_trip() {
        let lat = Lattice::hypercubic(1, 2).unwrap();
        let spec: InteractionSpec = serde_json::from_str(
            r#"{"terms": [{"support": [1, 0], "matrix_re": [[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]], "coupling": 0.5}],
                "k_claimed": 1, "index_set_I": []}"#,
        )
        .unwrap();
        let phi = spec.build(&lat, &[2; 5]).unwrap();
        assert_eq!(phi.term(0).support(), &[0, 1]);
        assert_eq!(phi.claim, SymmetryClaim::K(1));
        let back = InteractionSpec::of(&phi).build(&lat, &[2; 5]).unwrap();
        assert_eq!(algebra::max_abs(&(back.term(0).matrix() - phi.term(0).matrix())), 0.0);
    }
}
