use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Lattice;

use super::interaction::Interaction;

/// A decay profile `F : [0, ∞) → (0, ∞)`.
#[derive(Clone)]
pub enum FFunction {
    /// `(1 + r)^(-lambda)`
    PowerLaw {
        lambda: f64,
    },
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerLaw { lambda } => write!(f, "PowerLaw({lambda})"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl FFunction {
    pub fn power_law(lambda: f64) -> Self {
        Self::PowerLaw { lambda }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::PowerLaw { lambda } => {
                if lambda.fract() == 0.0 && lambda.abs() < 64.0 {
                    (1.0 + r).powi(-(*lambda as i32))
                } else {
                    (1.0 + r).powf(-lambda)
                }
            }
            Self::Constant(c) => *c,
            Self::Custom(f) => f(r),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::PowerLaw { lambda } => Some(*lambda),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FNormReport {
    pub value: f64,
    /// Site pair attaining the supremum, if any term exists.
    pub witness: Option<(usize, usize)>,
    pub sites: usize,
}

/// `sup_{x,y} F(D(x,y))^{-1} Σ_{Λ ∋ x,y} ‖φ(Λ)‖`, exact on the finite volume.
pub fn f_norm(phi: &Interaction, f: &FFunction, lat: &Lattice) -> Result<FNormReport> {
    weighted_pair_sup(phi, lat, |r| {
        let v = f.eval(r);
        if v > 0.0 && v.is_finite() {
            Ok(1.0 / v)
        } else {
            Err(Error::InvalidArgument(format!("F({r}) = {v} is not positive")))
        }
    })
}

/// `sup_{x,y} w(D(x,y)) Σ_{Λ ∋ x,y} ‖φ(Λ)‖` with a deterministic witness.
pub(crate) fn weighted_pair_sup(
    phi: &Interaction,
    lat: &Lattice,
    weight: impl Fn(f64) -> Result<f64>,
) -> Result<FNormReport> {
    if phi.n_sites() != lat.len() {
        return Err(Error::DimensionMismatch("interaction and lattice differ in size".into()));
    }
    let mut sums: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for term in phi.terms() {
        for &x in term.support() {
            for &y in term.support() {
                *sums.entry((x, y)).or_insert(0.0) += term.norm();
            }
        }
    }
    let mut best = 0.0f64;
    let mut witness = None;
    for (&(x, y), &s) in &sums {
        let v = weight(lat.dist(x, y))? * s;
        if v > best {
            best = v;
            witness = Some((x, y));
        }
    }
    Ok(FNormReport { value: best, witness, sites: lat.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct FFunctionReport {
    pub monotone: bool,
    /// `max_x Σ_y F(D(x,y))`
    pub norm_f: f64,
    pub norm_argmax: usize,
    /// Smallest convolution constant valid on the sub-volume used for it.
    pub c_f: f64,
    pub c_f_witness: (usize, usize),
    /// Number of sites of the centered box on which `c_f` was computed.
    pub c_f_sites: usize,
    pub sites: usize,
    pub lambda: Option<f64>,
}

/// Default cap on the number of sites entering the cubic-cost `C_F` computation.
pub const CF_MAX_SITES: usize = 256;

pub fn check_f_function(f: &FFunction, lat: &Lattice, cf_max_sites: usize) -> Result<FFunctionReport> {
    let n = lat.len();
    let diameter = lat.points().last().map_or(0.0, |_| {
        let (lo, hi) = (0, n - 1);
        lat.dist(lo, hi)
    });
    let grid: Vec<f64> = (0..=2000).map(|i| diameter.max(1.0) * i as f64 / 2000.0).collect();
    let monotone = grid.windows(2).all(|w| f.eval(w[1]) <= f.eval(w[0]));

    let row_sums: Vec<f64> = (0..n).into_par_iter().map(|x| (0..n).map(|y| f.eval(lat.dist(x, y))).sum()).collect();
    let (norm_argmax, norm_f) = row_sums
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });

    let sub = centered_subset(lat, cf_max_sites.max(1));
    let m = sub.len();
    let fm: Vec<f64> = (0..m * m).map(|k| f.eval(lat.dist(sub[k / m], sub[k % m]))).collect();
    if fm.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("F must be positive on all lattice distances".into()));
    }
    let rows: Vec<(f64, (usize, usize))> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, (0, 0));
            for j in 0..m {
                let conv: f64 = (0..m).map(|k| fm[i * m + k] * fm[k * m + j]).sum();
                let ratio = conv / fm[i * m + j];
                if ratio > best.0 {
                    best = (ratio, (sub[i], sub[j]));
                }
            }
            best
        })
        .collect();
    let (c_f, c_f_witness) = rows.into_iter().fold((f64::NEG_INFINITY, (0, 0)), |b, r| if r.0 > b.0 { r } else { b });
    Ok(FFunctionReport { monotone, norm_f, norm_argmax, c_f, c_f_witness, c_f_sites: m, sites: n, lambda: f.lambda() })
}

/// The largest centered box with at most `cap` sites, or the `cap` sites
/// closest to the origin in sup norm if even the smallest box is too big.
fn centered_subset(lat: &Lattice, cap: usize) -> Vec<usize> {
    if lat.len() <= cap {
        return (0..lat.len()).collect();
    }
    let mut order: Vec<usize> = (0..lat.len()).collect();
    order.sort_by(|&a, &b| lat.sup_norm(a).total_cmp(&lat.sup_norm(b)).then(a.cmp(&b)));
    let mut take = cap;
    // Keep whole shells so the subset stays a box.
    while take > 0 && take < order.len() && lat.sup_norm(order[take]) == lat.sup_norm(order[take - 1]) {
        take -= 1;
    }
    if take == 0 {
        take = cap;
    }
    let mut out = order[..take].to_vec();
    out.sort_unstable();
    out
}
