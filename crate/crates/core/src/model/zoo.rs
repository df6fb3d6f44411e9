//! Builtin spin-1/2 models. Chain models run along one lattice axis (param
//! `axis`, 1-based, default 1) and place a term wherever the whole footprint
//! lies inside the lattice.

use std::collections::BTreeMap;

use crate::algebra::{self, c64, kron_all, pauli_x, pauli_z, sigma_minus, sigma_plus, CMatrix, LocalOperator};
use crate::error::{Error, Result};
use crate::geometry::Lattice;

use super::interaction::{Interaction, SymmetryClaim};

pub const BUILTIN_NAMES: &[&str] =
    &["xy_chain", "heisenberg", "dipole_hop4", "field_z", "symmetry_breaker", "zz_power_law"];

struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl Params<'_> {
    fn check(&self, model: &str) -> Result<()> {
        match self.map.keys().find(|k| !self.allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("model `{model}` has no parameter `{k}`"))),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }
}

fn hc_pair(ops: &[CMatrix]) -> CMatrix {
    let a = kron_all(ops);
    let ad = algebra::adjoint(&a);
    a + ad
}

/// Sites `x, x + e, x + 2e, ...` (`len` of them) along `axis`, when all exist.
fn footprint(lat: &Lattice, x: usize, axis: usize, len: usize) -> Option<Vec<usize>> {
    let mut p = lat.point(x).to_vec();
    let mut out = vec![x];
    for _ in 1..len {
        p[axis] += 1.0;
        out.push(lat.find(&p)?);
    }
    Some(out)
}

fn chain_terms(lat: &Lattice, axis: usize, matrix: &CMatrix, len: usize) -> Result<Vec<LocalOperator>> {
    let mut ops = Vec::new();
    for x in 0..lat.len() {
        if let Some(sites) = footprint(lat, x, axis, len) {
            ops.push(LocalOperator::new(&sites, &vec![2; len], matrix.clone())?);
        }
    }
    if ops.is_empty() {
        return Err(Error::VolumeTooSmall(format!("no room for a {len}-site term along axis {}", axis + 1)));
    }
    Ok(ops)
}

/// Builds a named model on `lat`. All builtins are spin-1/2 and need local
/// dimension 2 everywhere.
pub fn builtin_interaction(
    name: &str,
    params: &BTreeMap<String, f64>,
    lat: &Lattice,
    site_dims: &[usize],
) -> Result<Interaction> {
    if site_dims.len() != lat.len() {
        return Err(Error::DimensionMismatch("one local dimension per lattice site required".into()));
    }
    if !BUILTIN_NAMES.contains(&name) {
        return Err(Error::Unknown { kind: "model", name: name.into() });
    }
    if site_dims.iter().any(|&d| d != 2) {
        return Err(Error::InvalidArgument(format!("model `{name}` needs spin-1/2 sites")));
    }
    let chain_params: &'static [&'static str] = match name {
        "xy_chain" | "dipole_hop4" => &["J", "axis"],
        "heisenberg" => &["J", "Jz", "axis"],
        "field_z" | "symmetry_breaker" => &["h"],
        _ => &["J", "alpha", "max_distance"],
    };
    let p = Params { map: params, allowed: chain_params };
    p.check(name)?;
    let axis_1 = p.get("axis", 1.0);
    if axis_1.fract() != 0.0 || axis_1 < 1.0 || axis_1 as usize > lat.dim() {
        return Err(Error::Config(format!("axis {axis_1} outside 1..={}", lat.dim())));
    }
    let axis = axis_1 as usize - 1;
    let j = c64::new(p.get("J", 1.0), 0.0);
    let h = c64::new(p.get("h", 1.0), 0.0);
    let (sp, sm) = (sigma_plus(), sigma_minus());

    let (ops, claim) = match name {
        "xy_chain" => {
            let m = algebra::scale(&hc_pair(&[sp, sm]), j);
            (chain_terms(lat, axis, &m, 2)?, SymmetryClaim::K(0))
        }
        "heisenberg" => {
            let jz = p.get("Jz", j.re);
            let zz = algebra::scale(&algebra::kron(&pauli_z(), &pauli_z()), c64::new(0.25 * jz, 0.0));
            let m = algebra::scale(&hc_pair(&[sp, sm]), j) + zz;
            (chain_terms(lat, axis, &m, 2)?, SymmetryClaim::K(0))
        }
        "dipole_hop4" => {
            let m = algebra::scale(&hc_pair(&[sp.clone(), sm.clone(), sm, sp]), j);
            (chain_terms(lat, axis, &m, 4)?, SymmetryClaim::K(1))
        }
        "field_z" => {
            let m = algebra::scale(&pauli_z(), h);
            let ops = (0..lat.len()).map(|x| LocalOperator::new(&[x], &[2], m.clone())).collect::<Result<_>>()?;
            (ops, SymmetryClaim::Diagonal)
        }
        "symmetry_breaker" => {
            let m = algebra::scale(&pauli_x(), h);
            let ops = (0..lat.len()).map(|x| LocalOperator::new(&[x], &[2], m.clone())).collect::<Result<_>>()?;
            (ops, SymmetryClaim::None)
        }
        _ => {
            let alpha = p.get("alpha", 12.0);
            let max_d = p.get("max_distance", f64::INFINITY);
            let zz = algebra::kron(&pauli_z(), &pauli_z());
            let mut ops = Vec::new();
            for x in 0..lat.len() {
                for y in x + 1..lat.len() {
                    let d = lat.dist(x, y);
                    if d <= max_d {
                        let c = j * d.powf(-alpha);
                        ops.push(LocalOperator::new(&[x, y], &[2, 2], algebra::scale(&zz, c))?);
                    }
                }
            }
            (ops, SymmetryClaim::Diagonal)
        }
    };
    let mut phi = Interaction::new(ops, site_dims.to_vec())?.with_claim(claim);
    phi.name = Some(name.to_string());
    Ok(phi)
}
