use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Lattice;

use super::charges::ChargeFamily;
use super::ffunction::{f_norm, weighted_pair_sup, FFunction, FNormReport};
use super::interaction::Interaction;

#[derive(Clone, Debug, Serialize)]
pub struct DecayKReport {
    pub k: u32,
    /// `sup_x Σ_{Λ∋x} ‖φ(Λ)‖ (Σ_{z : supp n_z ∩ Λ ≠ ∅} |z − x|^{k+1})²`
    pub sup_value: f64,
    pub argmax: Option<usize>,
    pub sites: usize,
    pub pass: bool,
}

/// The weighted sum over terms containing `x` whose supremum is [`check_decay_k`].
pub fn decay_k_at(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, k: u32, x: usize) -> f64 {
    phi.terms_at(x)
        .iter()
        .map(|&t| {
            let term = phi.term(t);
            let inner: f64 = cf.collar(term.support()).iter().map(|&z| lat.dist(z, x).powi(k as i32 + 1)).sum();
            term.norm() * inner * inner
        })
        .sum()
}

pub fn check_decay_k(phi: &Interaction, cf: &ChargeFamily, lat: &Lattice, k: u32) -> Result<DecayKReport> {
    if phi.n_sites() != lat.len() || cf.n_sites() != lat.len() {
        return Err(Error::DimensionMismatch("interaction, charges and lattice differ in size".into()));
    }
    let values: Vec<f64> = (0..lat.len()).into_par_iter().map(|x| decay_k_at(phi, cf, lat, k, x)).collect();
    let mut argmax = None;
    let mut sup_value = 0.0f64;
    for (x, &v) in values.iter().enumerate() {
        if v > sup_value {
            sup_value = v;
            argmax = Some(x);
        }
    }
    Ok(DecayKReport { k, sup_value, argmax, sites: lat.len(), pass: sup_value.is_finite() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayGammaReport {
    pub gamma: f64,
    /// The existential ε is not certifiable; this is the ε that was checked.
    pub epsilon: f64,
    pub exponent: f64,
    pub sup: FNormReport,
    pub pass: bool,
}

/// `sup_{x,y} (1 + |x − y|)^{γ+1+ε} Σ_{Λ∋x,y} ‖φ(Λ)‖`.
pub fn check_decay_gamma(phi: &Interaction, lat: &Lattice, gamma: f64, epsilon: f64) -> Result<DecayGammaReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let exponent = gamma + 1.0 + epsilon;
    let sup = f_norm(phi, &FFunction::power_law(exponent), lat)?;
    let pass = sup.value.is_finite();
    Ok(DecayGammaReport { gamma, epsilon, exponent, sup, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimpleDecayReport {
    pub k: u32,
    pub gamma: f64,
    /// `4 + 2k + 2γ`
    pub exponent: f64,
    pub sup: FNormReport,
    pub pass: bool,
    /// The implied decay condition, evaluated directly as a cross-check.
    pub decay_k: DecayKReport,
    pub consistent: bool,
}

/// `sup_{x,y} (1 + |x − y|)^{4+2k+2γ} Σ_{Λ∋x,y} ‖φ(Λ)‖`. Finiteness of this
/// quantity implies the order-`k` decay condition, which is checked alongside.
pub fn check_simple_decay(
    phi: &Interaction,
    cf: &ChargeFamily,
    lat: &Lattice,
    k: u32,
    gamma: f64,
) -> Result<SimpleDecayReport> {
    let exponent = 4.0 + 2.0 * k as f64 + 2.0 * gamma;
    let sup = weighted_pair_sup(phi, lat, |r| Ok((1.0 + r).powf(exponent)))?;
    let pass = sup.value.is_finite();
    let decay_k = check_decay_k(phi, cf, lat, k)?;
    let consistent = !pass || decay_k.pass;
    Ok(SimpleDecayReport { k, gamma, exponent, sup, pass, decay_k, consistent })
}
