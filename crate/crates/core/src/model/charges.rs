use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, max_abs, real_diag, LocalOperator, Volume};
use crate::error::{Error, Result};
use crate::geometry::Lattice;

/// A family of mutually commuting local charges `n_x`, one per lattice site.
#[derive(Clone, Debug)]
pub struct ChargeFamily {
    charges: Vec<LocalOperator>,
    site_dims: Vec<usize>,
    n0: f64,
    r0: f64,
    /// `touching[y]` lists every `x` with `y ∈ supp(n_x)`.
    touching: Vec<Vec<usize>>,
    onsite_diagonal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChargeSpec {
    SpinZHalf,
    BosonNumber { cutoff: usize },
}

impl ChargeSpec {
    pub fn parse(kind: &str, cutoff: Option<usize>) -> Result<Self> {
        match kind {
            "spin_z_half" => Ok(Self::SpinZHalf),
            "boson_number" => Ok(Self::BosonNumber { cutoff: cutoff.unwrap_or(1) }),
            other => Err(Error::Unknown { kind: "charge kind", name: other.into() }),
        }
    }
}

impl ChargeFamily {
    /// `charges[x]` is `n_x`; `site_dims[y]` is the local dimension at `y`.
    pub fn new(charges: Vec<LocalOperator>, site_dims: Vec<usize>, n0: f64, r0: f64) -> Result<Self> {
        if charges.len() != site_dims.len() {
            return Err(Error::DimensionMismatch("one charge per lattice site required".into()));
        }
        if !(n0 >= 0.0 && r0 >= 0.0) {
            return Err(Error::InvalidArgument("N0 and R0 must be nonnegative".into()));
        }
        let mut touching = vec![Vec::new(); site_dims.len()];
        for (x, n) in charges.iter().enumerate() {
            for (&y, &d) in n.support().iter().zip(n.dims()) {
                if y >= site_dims.len() {
                    return Err(Error::SiteOutOfRange(y));
                }
                if site_dims[y] != d {
                    return Err(Error::DimensionMismatch(format!("site {y} has local dimension {}", site_dims[y])));
                }
                touching[y].push(x);
            }
        }
        let onsite_diagonal =
            charges.iter().enumerate().all(|(x, n)| n.support() == [x] && crate::algebra::is_diagonal(n.matrix()));
        Ok(Self { charges, site_dims, n0, r0, touching, onsite_diagonal })
    }

    pub fn builtin(spec: &ChargeSpec, lat: &Lattice) -> Result<Self> {
        let (diag, n0): (Vec<f64>, f64) = match *spec {
            ChargeSpec::SpinZHalf => (vec![1.0, 0.0], 1.0),
            ChargeSpec::BosonNumber { cutoff } => {
                if cutoff == 0 {
                    return Err(Error::InvalidArgument("boson cutoff must be at least 1".into()));
                }
                ((0..=cutoff).map(|k| k as f64).collect(), cutoff as f64)
            }
        };
        let d = diag.len();
        let charges =
            (0..lat.len()).map(|x| LocalOperator::new(&[x], &[d], real_diag(&diag))).collect::<Result<Vec<_>>>()?;
        // R0 = 0.5 keeps B_{R0}(x) = {x} on integer lattices.
        Self::new(charges, vec![d; lat.len()], n0, 0.5)
    }

    pub fn charge(&self, x: usize) -> &LocalOperator {
        &self.charges[x]
    }

    pub fn charges(&self) -> &[LocalOperator] {
        &self.charges
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn local_dim(&self, site: usize) -> usize {
        self.site_dims[site]
    }

    /// True when every `n_x` is a diagonal matrix on `{x}` alone.
    pub fn is_onsite_diagonal(&self) -> bool {
        self.onsite_diagonal
    }

    /// Charges whose support meets site `y`.
    pub fn touching(&self, y: usize) -> &[usize] {
        &self.touching[y]
    }

    /// `{z : supp(n_z) ∩ sites ≠ ∅}` in ascending order.
    pub fn collar(&self, sites: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = sites.iter().flat_map(|&y| self.touching[y].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Union of the supports of `n_x` for the given `x`.
    pub fn support_union(&self, xs: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = xs.iter().flat_map(|&x| self.charges[x].support().iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn volume(&self, sites: &[usize]) -> Result<Volume> {
        let dims = sites
            .iter()
            .map(|&s| self.site_dims.get(s).copied().ok_or(Error::SiteOutOfRange(s)))
            .collect::<Result<Vec<_>>>()?;
        Volume::new(sites, &dims)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChargeViolation {
    pub kind: &'static str,
    pub sites: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChargeReport {
    pub pass: bool,
    pub n0: f64,
    pub r0: f64,
    pub max_norm: f64,
    pub pairs_checked: usize,
    pub violations: Vec<ChargeViolation>,
}

/// Checks the norm bound, the support radius and pairwise commutation.
pub fn verify_charge_family(cf: &ChargeFamily, lat: &Lattice) -> Result<ChargeReport> {
    if cf.n_sites() != lat.len() {
        return Err(Error::DimensionMismatch("charge family and lattice differ in size".into()));
    }
    let mut violations = Vec::new();
    let mut max_norm = 0.0f64;
    let norms = cf.charges.iter().map(LocalOperator::norm).collect::<Result<Vec<_>>>()?;
    for (x, (n, &norm)) in cf.charges.iter().zip(&norms).enumerate() {
        max_norm = max_norm.max(norm);
        if norm > cf.n0 * (1.0 + 1e-12) {
            violations.push(ChargeViolation { kind: "norm", sites: vec![x], value: norm });
        }
        if !n.is_self_adjoint() {
            violations.push(ChargeViolation { kind: "self_adjoint", sites: vec![x], value: 0.0 });
        }
        for &y in n.support() {
            let d = lat.dist(x, y);
            if d >= cf.r0 {
                violations.push(ChargeViolation { kind: "support", sites: vec![x, y], value: d });
            }
        }
    }
    let mut pairs_checked = 0;
    for x in 0..cf.n_sites() {
        for y in x + 1..cf.n_sites() {
            if lat.dist(x, y) > 2.0 * cf.r0 {
                continue;
            }
            let (a, b) = (&cf.charges[x], &cf.charges[y]);
            if !a.support().iter().any(|s| b.support().contains(s)) {
                continue;
            }
            pairs_checked += 1;
            let sites = cf.support_union(&[x, y]);
            let vol = cf.volume(&sites)?;
            let c = commutator(&crate::algebra::embed(a, &vol)?, &crate::algebra::embed(b, &vol)?)?;
            let size = max_abs(&c);
            if size > 1e-12 {
                violations.push(ChargeViolation { kind: "commutator", sites: vec![x, y], value: size });
            }
        }
    }
    Ok(ChargeReport { pass: violations.is_empty(), n0: cf.n0, r0: cf.r0, max_norm, pairs_checked, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{kron, pauli_x, pauli_z, CMatrix};

    fn chain(n: u32) -> Lattice {
        Lattice::hypercubic(1, n).unwrap()
    }

    #[test]
    fn builtin_families() {
        let lat = chain(2);
        let spin = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        assert_eq!(max_abs(&(spin.charge(0).matrix() - real_diag(&[1.0, 0.0]))), 0.0);
        assert!(verify_charge_family(&spin, &lat).unwrap().pass);
        assert!(spin.is_onsite_diagonal());

        let boson = ChargeFamily::builtin(&ChargeSpec::BosonNumber { cutoff: 2 }, &lat).unwrap();
        assert_eq!(boson.n0(), 2.0);
        assert_eq!(max_abs(&(boson.charge(3).matrix() - real_diag(&[0.0, 1.0, 2.0]))), 0.0);
        assert!(verify_charge_family(&boson, &lat).unwrap().pass);

        assert!(ChargeFamily::builtin(&ChargeSpec::BosonNumber { cutoff: 0 }, &lat).is_err());
        assert!(ChargeSpec::parse("quark", None).is_err());
    }

    #[test]
    fn detects_noncommuting_charges() {
        let lat = chain(1);
        let x_on_pair = LocalOperator::new(&[0, 1], &[2, 2], kron(&pauli_x(), &CMatrix::identity(2, 2))).unwrap();
        let z_on_pair = LocalOperator::new(&[0, 1], &[2, 2], kron(&pauli_z(), &CMatrix::identity(2, 2))).unwrap();
        let z2 = LocalOperator::new(&[2], &[2], pauli_z()).unwrap();
        let cf = ChargeFamily::new(vec![x_on_pair, z_on_pair, z2], vec![2; 3], 1.0, 1.5).unwrap();
        let report = verify_charge_family(&cf, &lat).unwrap();
        assert!(!report.pass);
        assert!(report.violations.iter().any(|v| v.kind == "commutator" && v.sites == [0, 1]));
    }

    #[test]
    fn detects_norm_and_support_violations() {
        let lat = chain(1);
        let mut cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        cf.n0 = 0.4;
        let r = verify_charge_family(&cf, &lat).unwrap();
        assert_eq!(r.violations.iter().filter(|v| v.kind == "norm").count(), 3);

        let wide = LocalOperator::new(&[0, 1], &[2, 2], kron(&pauli_z(), &pauli_z())).unwrap();
        let n1 = LocalOperator::new(&[1], &[2], pauli_z()).unwrap();
        let n2 = LocalOperator::new(&[2], &[2], pauli_z()).unwrap();
        let cf = ChargeFamily::new(vec![wide, n1, n2], vec![2; 3], 1.0, 0.5).unwrap();
        let r = verify_charge_family(&cf, &lat).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == "support"));
    }

    #[test]
    fn collars() {
        let lat = chain(3);
        let cf = ChargeFamily::builtin(&ChargeSpec::SpinZHalf, &lat).unwrap();
        assert_eq!(cf.collar(&[4, 2]), vec![2, 4]);
    }
}
