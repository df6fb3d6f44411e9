//! Smooth cutoff functions and the Taylor remainders of their weighted versions.
//!
//! The one-dimensional bridge is
//! `χ̃(t) = f(2 − |t|) / (f(2 − |t|) + f(|t| − 1))` with `f(t) = exp(−1/t)` for
//! `t > 0` and `0` otherwise. It is `1` on `[−1, 1]`, `0` outside `(−2, 2)` and
//! smooth everywhere. In `d` dimensions `χ(x) = Π_j χ̃(x_j)`,
//! `χ_m(x) = χ(x / m)` and the weighted cutoff is `χ_m^{(a)}(z) = z^a χ_m(z)`.
//!
//! Derivatives are exact up to rounding: they come from truncated power series
//! (Taylor-mode automatic differentiation) of the closed form.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Lattice;
use crate::symmetry::MultiIndex;

/// Below this argument `exp(−1/t)` and all its low-order derivatives are
/// smaller than `1e−200`, so the corresponding jet is treated as zero.
const JET_UNDERFLOW: f64 = 1.0 / 600.0;

/// Truncated Taylor series `Σ c_n h^n`, `c_n = g^{(n)}(t0) / n!`.
#[derive(Clone, Debug, PartialEq)]
struct Jet(Vec<f64>);

impl Jet {
    fn constant(c: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = c;
        Self(v)
    }

    fn variable(t0: f64, slope: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = t0;
        if len > 1 {
            v[1] = slope;
        }
        Self(v)
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.0.len();
        Self((0..n).map(|i| (0..=i).map(|k| self.0[k] * o.0[i - k]).sum()).collect())
    }

    fn add(&self, o: &Self) -> Self {
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn recip(&self) -> Self {
        let n = self.0.len();
        let a0 = self.0[0];
        let mut b = vec![0.0; n];
        b[0] = 1.0 / a0;
        for i in 1..n {
            let s: f64 = (1..=i).map(|k| self.0[k] * b[i - k]).sum();
            b[i] = -s / a0;
        }
        Self(b)
    }

    fn exp(&self) -> Self {
        let n = self.0.len();
        let mut e = vec![0.0; n];
        e[0] = self.0[0].exp();
        for i in 1..n {
            let s: f64 = (1..=i).map(|k| k as f64 * self.0[k] * e[i - k]).sum();
            e[i] = s / i as f64;
        }
        Self(e)
    }

    fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

/// `exp(−1/u)` expanded around `u0` along `u = u0 + slope·h`.
fn f_jet(u0: f64, slope: f64, len: usize) -> Jet {
    if u0 <= JET_UNDERFLOW {
        return Jet(vec![0.0; len]);
    }
    Jet::variable(u0, slope, len).recip().neg().exp()
}

/// Taylor coefficients of `χ̃` at `t0`, orders `0..len`.
fn bridge_jet(t0: f64, len: usize) -> Jet {
    let s = t0.abs();
    if s <= 1.0 {
        return Jet::constant(1.0, len);
    }
    if s >= 2.0 {
        return Jet(vec![0.0; len]);
    }
    let a = f_jet(2.0 - s, -1.0, len);
    let b = f_jet(s - 1.0, 1.0, len);
    let mut c = if a.0[0] == 0.0 {
        Jet(vec![0.0; len])
    } else if b.0[0] == 0.0 {
        Jet::constant(1.0, len)
    } else {
        a.mul(&a.add(&b).recip())
    };
    if t0 < 0.0 {
        // χ̃ is even: c_n(−t) = (−1)^n c_n(t).
        for (n, v) in c.0.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    c
}

/// `t^p` expanded around `t0`: coefficients `binom(p, n) t0^{p−n}`.
fn monomial_jet(t0: f64, p: u32, len: usize) -> Jet {
    let mut v = vec![0.0; len];
    let mut binom = 1.0f64;
    for (n, slot) in v.iter_mut().enumerate() {
        if n as u32 > p {
            break;
        }
        *slot = binom * t0.powi((p - n as u32) as i32);
        binom = binom * (p - n as u32) as f64 / (n + 1) as f64;
    }
    Jet(v)
}

/// Taylor coefficients of `q(t) = t^p χ̃(t / m)` at `t0`.
fn weighted_jet(t0: f64, p: u32, m: f64, len: usize) -> Jet {
    let mut chi = bridge_jet(t0 / m, len);
    let mut scale = 1.0;
    for c in chi.0.iter_mut() {
        *c *= scale;
        scale /= m;
    }
    monomial_jet(t0, p, len).mul(&chi)
}

/// The bridge `χ̃`.
pub fn bridge(t: f64) -> f64 {
    bridge_jet(t, 1).0[0]
}

/// `n`-th derivative of the bridge.
pub fn bridge_derivative(t: f64, n: usize) -> f64 {
    let c = bridge_jet(t, n + 1).0[n];
    c * factorial(n)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Safety factor applied to grid suprema, by grid resolution (points per unit).
pub fn safety_for_resolution(res: usize) -> f64 {
    match res {
        r if r >= 200 => 1.05,
        r if r >= 100 => 1.10,
        r if r >= 50 => 1.20,
        _ => 1.5,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(default = "default_bridge")]
    pub bridge: String,
    #[serde(default)]
    pub grid_resolution: Option<usize>,
    #[serde(default)]
    pub safety: Option<f64>,
}

fn default_bridge() -> String {
    "exp_partition".into()
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self { bridge: default_bridge(), grid_resolution: None, safety: None }
    }
}

/// The cutoff in `d` dimensions with the grid used for derivative suprema.
#[derive(Debug)]
pub struct CutoffProfile {
    dim: usize,
    grid_resolution: usize,
    safety: f64,
    ca_cache: Mutex<BTreeMap<(Vec<u32>, u32), f64>>,
}

impl Clone for CutoffProfile {
    fn clone(&self) -> Self {
        Self::with_resolution(self.dim, self.grid_resolution, Some(self.safety)).expect("validated on construction")
    }
}

impl CutoffProfile {
    /// Default resolution: 2000 points per unit in 1D, 200 in 2D, 50 beyond.
    pub fn new(dim: usize) -> Result<Self> {
        let res = match dim {
            1 => 2000,
            2 => 200,
            _ => 50,
        };
        Self::with_resolution(dim, res, None)
    }

    /// A requested safety factor below the one implied by the resolution is raised to it.
    pub fn with_resolution(dim: usize, grid_resolution: usize, safety: Option<f64>) -> Result<Self> {
        if dim == 0 || grid_resolution == 0 {
            return Err(Error::InvalidArgument("dimension and grid resolution must be positive".into()));
        }
        let floor = safety_for_resolution(grid_resolution);
        let safety = safety.unwrap_or(floor);
        if !(safety >= 1.0) {
            return Err(Error::InvalidArgument(format!("safety factor {safety} below 1")));
        }
        Ok(Self { dim, grid_resolution, safety: safety.max(floor), ca_cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn from_spec(spec: &CutoffSpec, dim: usize) -> Result<Self> {
        if spec.bridge != "exp_partition" {
            return Err(Error::Unknown { kind: "bridge", name: spec.bridge.clone() });
        }
        match spec.grid_resolution {
            Some(res) => Self::with_resolution(dim, res, spec.safety),
            None => {
                let base = Self::new(dim)?;
                Self::with_resolution(dim, base.grid_resolution, spec.safety)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution
    }

    pub fn safety(&self) -> f64 {
        self.safety
    }

    fn check_a(&self, a: &MultiIndex) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} entries, expected {}",
                a.dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// `χ_m^{(a)}(z) = z^a χ_m(z)`.
pub fn evaluate_cutoff(profile: &CutoffProfile, m: f64, a: &MultiIndex, z: &[f64]) -> Result<f64> {
    profile.check_a(a)?;
    if z.len() != profile.dim {
        return Err(Error::DimensionMismatch("point has the wrong dimension".into()));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    Ok(z.iter().zip(a.entries()).map(|(&t, &p)| t.powi(p as i32) * bridge(t / m)).product())
}

/// `χ_m(z)` without weight.
pub fn chi_m(m: f64, z: &[f64]) -> f64 {
    z.iter().map(|&t| bridge(t / m)).product()
}

/// All multi-indices `β` with `|β| = n` in `d` variables, lexicographic.
fn compositions(n: u32, d: usize) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, d - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multinomial(beta: &[u32]) -> f64 {
    let n: u32 = beta.iter().sum();
    factorial(n as usize) / beta.iter().map(|&b| factorial(b as usize)).product::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct CaReport {
    pub a: MultiIndex,
    pub k: u32,
    /// Safety-scaled constant used in bounds.
    pub c_a: f64,
    /// Grid supremum before the safety factor.
    pub grid_sup: f64,
    pub argmax: Vec<f64>,
    pub safety: f64,
    pub grid_resolution: usize,
    pub note: &'static str,
}

const CA_NOTE: &str = "grid supremum times a safety factor; certifies the tested grid family, not the true supremum";

/// `C_a = (1/(k+1)!) sup_ξ Σ_{ν_1..ν_{k+1}} |∂_{ν_1}⋯∂_{ν_{k+1}} χ^{(a)}(ξ)|`, times the safety factor.
pub fn compute_ca(profile: &CutoffProfile, a: &MultiIndex, k: u32) -> Result<f64> {
    profile.check_a(a)?;
    if a.order() > k {
        return Err(Error::Precondition(format!("|a| = {} exceeds k = {k}", a.order())));
    }
    let key = (a.entries().to_vec(), k);
    if let Some(&v) = profile.ca_cache.lock().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let r = compute_ca_report(profile, a, k)?;
    profile.ca_cache.lock().expect("cache lock").insert(key, r.c_a);
    Ok(r.c_a)
}

pub fn compute_ca_report(profile: &CutoffProfile, a: &MultiIndex, k: u32) -> Result<CaReport> {
    profile.check_a(a)?;
    if a.order() > k {
        return Err(Error::Precondition(format!("|a| = {} exceeds k = {k}", a.order())));
    }
    let d = profile.dim;
    let order = k as usize + 1;
    let n1 = 4 * profile.grid_resolution + 1;
    let grid: Vec<f64> = (0..n1).map(|i| -2.0 + 4.0 * i as f64 / (n1 - 1) as f64).collect();
    // |p_j^{(n)}(t)| on the grid, per axis and derivative order.
    let tables: Vec<Vec<Vec<f64>>> = a
        .entries()
        .iter()
        .map(|&p| {
            grid.iter()
                .map(|&t| {
                    let jet = weighted_jet(t, p, 1.0, order + 1);
                    (0..=order).map(|n| (jet.0[n] * factorial(n)).abs()).collect()
                })
                .collect()
        })
        .collect();
    let betas: Vec<(f64, Vec<u32>)> = compositions(k + 1, d).into_iter().map(|b| (multinomial(&b), b)).collect();
    let total = n1.pow(d as u32);
    let (grid_sup, arg) = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            let mut r = flat;
            for j in (0..d).rev() {
                idx[j] = r % n1;
                r /= n1;
            }
            let v: f64 = betas
                .iter()
                .map(|(mult, b)| mult * (0..d).map(|j| tables[j][idx[j]][b[j] as usize]).product::<f64>())
                .sum();
            (v, flat)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x });
    let grid_sup = grid_sup / factorial(order);
    let mut argmax = vec![0.0; d];
    let mut r = arg;
    for j in (0..d).rev() {
        argmax[j] = grid[r % n1];
        r /= n1;
    }
    Ok(CaReport {
        a: a.clone(),
        k,
        c_a: grid_sup * profile.safety,
        grid_sup,
        argmax,
        safety: profile.safety,
        grid_resolution: profile.grid_resolution,
        note: CA_NOTE,
    })
}

/// `R_{k+1}(x, z)`: `χ_m^{(a)}(z)` minus its order-`k` Taylor polynomial at `x`.
pub fn taylor_remainder_exact(
    profile: &CutoffProfile,
    m: f64,
    a: &MultiIndex,
    k: u32,
    x: &[f64],
    z: &[f64],
) -> Result<f64> {
    profile.check_a(a)?;
    if a.order() > k {
        return Err(Error::Precondition(format!("|a| = {} exceeds k = {k}", a.order())));
    }
    if x.len() != profile.dim || z.len() != profile.dim {
        return Err(Error::DimensionMismatch("point has the wrong dimension".into()));
    }
    let len = k as usize + 1;
    let jets: Vec<Jet> = a.entries().iter().zip(x).map(|(&p, &t)| weighted_jet(t, p, m, len)).collect();
    let exact = evaluate_cutoff(profile, m, a, z)?;
    let mut poly = 0.0;
    for n in 0..=k {
        for beta in compositions(n, profile.dim) {
            let term: f64 =
                beta.iter().enumerate().map(|(j, &b)| jets[j].0[b as usize] * (z[j] - x[j]).powi(b as i32)).product();
            poly += term;
        }
    }
    Ok(exact - poly)
}

/// The closed-form bound `C_a m^{−(k−|a|+1)} |x − z|^{k+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderBound {
    pub a: MultiIndex,
    pub k: u32,
    pub c_a: f64,
    pub m: f64,
}

impl RemainderBound {
    pub fn new(profile: &CutoffProfile, a: &MultiIndex, k: u32, m: f64) -> Result<Self> {
        let c_a = compute_ca(profile, a, k)?;
        Ok(Self { a: a.clone(), k, c_a, m })
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        let dist = x.iter().zip(z).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        self.prefactor() * dist.powi(self.k as i32 + 1)
    }

    /// `C_a / m^{k−|a|+1}`.
    pub fn prefactor(&self) -> f64 {
        self.c_a * self.m.powi(-(self.k as i32 - self.a.order() as i32 + 1))
    }
}

pub fn taylor_remainder_bound(rb: &RemainderBound, x: &[f64], z: &[f64]) -> f64 {
    rb.eval(x, z)
}

#[derive(Clone, Debug, Serialize)]
pub struct SlabDerivativeReport {
    pub pass: bool,
    pub m: f64,
    pub max_abs_derivative: f64,
    pub witness: Option<(usize, usize)>,
    pub points_checked: usize,
    pub axes: Vec<usize>,
}

/// Checks `∂_j χ_m^{(a)}(x) = 0` at every lattice point for every exempt axis `j`.
///
/// Requires `a_j = 0` on the exempt axes and `m` strictly above every slab bound
/// of those axes; anything else is refused.
pub fn check_slab_derivatives(
    profile: &CutoffProfile,
    m: f64,
    a: &MultiIndex,
    index_set: &[usize],
    lat: &Lattice,
) -> Result<SlabDerivativeReport> {
    profile.check_a(a)?;
    if lat.dim() != profile.dim {
        return Err(Error::DimensionMismatch("lattice and cutoff dimensions differ".into()));
    }
    for &j in index_set {
        if j >= profile.dim {
            return Err(Error::InvalidArgument(format!("axis {j} out of range")));
        }
        if a.entries()[j] != 0 {
            return Err(Error::Precondition(format!("a has a nonzero entry on exempt axis {}", j + 1)));
        }
        let bound = lat
            .slab_bounds()
            .get(&j)
            .ok_or_else(|| Error::Precondition(format!("axis {} is not a bounded slab axis", j + 1)))?;
        if !(m > *bound) {
            return Err(Error::Precondition(format!(
                "m = {m} does not exceed the slab bound {bound} on axis {}",
                j + 1
            )));
        }
    }
    let mut max_abs = 0.0f64;
    let mut witness = None;
    for (x, p) in lat.points().iter().enumerate() {
        let jets: Vec<Jet> = a.entries().iter().zip(p).map(|(&e, &t)| weighted_jet(t, e, m, 2)).collect();
        for &j in index_set {
            let v: f64 = (0..profile.dim).map(|i| jets[i].0[usize::from(i == j)]).product();
            if v.abs() > max_abs {
                max_abs = v.abs();
                witness = Some((x, j));
            }
        }
    }
    Ok(SlabDerivativeReport {
        pass: max_abs <= 1e-12,
        m,
        max_abs_derivative: max_abs,
        witness,
        points_checked: lat.len(),
        axes: index_set.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    /// Finite-difference oracle for bridge derivatives.
    fn fd(t: f64, n: usize) -> f64 {
        let h = 1e-4;
        match n {
            1 => (bridge(t + h) - bridge(t - h)) / (2.0 * h),
            2 => (bridge(t + h) - 2.0 * bridge(t) + bridge(t - h)) / (h * h),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bridge_shape() {
        assert_eq!(bridge(0.3), 1.0);
        assert_eq!(bridge(-1.0), 1.0);
        assert_eq!(bridge(2.0), 0.0);
        assert_eq!(bridge(-7.0), 0.0);
        assert!((bridge(1.5) - 0.5).abs() < 1e-15);
        for i in 0..400 {
            let t = -2.5 + 5.0 * i as f64 / 399.0;
            let v = bridge(t);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, bridge(-t));
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        for &t in &[1.1, 1.37, 1.5, 1.8, -1.25, -1.9] {
            for n in 1..=2 {
                let exact = bridge_derivative(t, n);
                assert!((exact - fd(t, n)).abs() < 1e-4 * exact.abs().max(1.0), "t={t} n={n}");
            }
        }
        assert_eq!(bridge_derivative(0.5, 3), 0.0);
        assert_eq!(bridge_derivative(2.5, 3), 0.0);
    }

    #[test]
    fn cutoff_values() {
        let p = CutoffProfile::new(1).unwrap();
        assert_eq!(evaluate_cutoff(&p, 5.0, &mi(&[0]), &[4.0]).unwrap(), 1.0);
        assert_eq!(evaluate_cutoff(&p, 5.0, &mi(&[1]), &[3.0]).unwrap(), 3.0);
        assert_eq!(evaluate_cutoff(&p, 5.0, &mi(&[1]), &[10.0]).unwrap(), 0.0);
        let p2 = CutoffProfile::new(2).unwrap();
        assert_eq!(evaluate_cutoff(&p2, 2.0, &mi(&[1, 1]), &[2.0, -1.0]).unwrap(), -2.0);
    }

    #[test]
    fn ca_values() {
        let p = CutoffProfile::new(1).unwrap();
        let r0 = compute_ca_report(&p, &mi(&[0]), 0).unwrap();
        // Oracle: a direct scan of |χ̃'| by central differences.
        let scan = (0..=4000).map(|i| fd(1.0 + i as f64 / 4000.0, 1).abs()).fold(0.0, f64::max);
        assert!((r0.grid_sup - scan).abs() < 1e-4 * scan);
        assert!((r0.c_a - 1.05 * r0.grid_sup).abs() < 1e-15);

        let r1 = compute_ca_report(&p, &mi(&[0]), 1).unwrap();
        let scan2 = (0..=4000).map(|i| fd(1.0 + i as f64 / 4000.0, 2).abs()).fold(0.0, f64::max) / 2.0;
        assert!((r1.grid_sup - scan2).abs() < 1e-3 * scan2);

        assert!(matches!(compute_ca(&p, &mi(&[2]), 1), Err(Error::Precondition(_))));
        assert_eq!(compute_ca(&p, &mi(&[1]), 1).unwrap(), compute_ca(&p, &mi(&[1]), 1).unwrap());
    }

    #[test]
    fn ca_survives_a_finer_grid() {
        let coarse = CutoffProfile::with_resolution(1, 200, None).unwrap();
        let fine = CutoffProfile::with_resolution(1, 4000, None).unwrap();
        for (a, k) in [(0, 0), (0, 1), (1, 1), (1, 2)] {
            let c = compute_ca(&coarse, &mi(&[a]), k).unwrap();
            let f = compute_ca_report(&fine, &mi(&[a]), k).unwrap().grid_sup;
            assert!(c >= f, "a={a} k={k}: {c} < {f}");
        }
    }

    #[test]
    fn two_dimensional_ca_counts_ordered_tuples() {
        // At k = 0 the sum over ν is |∂_1 χ| + |∂_2 χ|, maximal where one factor
        // sits at its steepest point and the other on the plateau or nearby.
        let p = CutoffProfile::with_resolution(2, 100, None).unwrap();
        let one = CutoffProfile::with_resolution(1, 100, None).unwrap();
        let c2 = compute_ca_report(&p, &mi(&[0, 0]), 0).unwrap().grid_sup;
        let c1 = compute_ca_report(&one, &mi(&[0]), 0).unwrap().grid_sup;
        assert!(c2 >= c1 && c2 <= 2.0 * c1);
    }

    #[test]
    fn remainders() {
        let p = CutoffProfile::new(1).unwrap();
        assert_eq!(taylor_remainder_exact(&p, 3.0, &mi(&[0]), 1, &[4.2], &[4.2]).unwrap(), 0.0);
        assert_eq!(taylor_remainder_exact(&p, 3.0, &mi(&[0]), 1, &[-2.0], &[2.5]).unwrap(), 0.0);
        let rb = RemainderBound::new(&p, &mi(&[0]), 1, 2.0).unwrap();
        let rb4 = RemainderBound::new(&p, &mi(&[0]), 1, 4.0).unwrap();
        assert!((rb.eval(&[0.0], &[1.0]) / rb4.eval(&[0.0], &[1.0]) - 4.0).abs() < 1e-12);
        assert_eq!(taylor_remainder_bound(&rb, &[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn slab_derivatives() {
        let lat = Lattice::slab(1, 6, &[2]).unwrap();
        let p = CutoffProfile::new(2).unwrap();
        let r = check_slab_derivatives(&p, 3.0, &mi(&[1, 0]), &[1], &lat).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_abs_derivative, 0.0);
        assert!(matches!(check_slab_derivatives(&p, 3.0, &mi(&[0, 1]), &[1], &lat), Err(Error::Precondition(_))));
        assert!(matches!(check_slab_derivatives(&p, 1.0, &mi(&[0, 0]), &[1], &lat), Err(Error::Precondition(_))));
    }

    proptest! {
        #[test]
        fn scaling_identity(z in -20.0f64..20.0, m in 1u32..9, a in 0u32..3) {
            let p = CutoffProfile::new(1).unwrap();
            let a = mi(&[a]);
            let m = m as f64;
            let lhs = evaluate_cutoff(&p, m, &a, &[z]).unwrap();
            let rhs = m.powi(a.order() as i32) * evaluate_cutoff(&p, 1.0, &a, &[z / m]).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn plateau_grows_with_m(x in -6.0f64..6.0, m in 1u32..6, extra in 0u32..5) {
            let m = m as f64;
            if x.abs() <= m {
                prop_assert_eq!(chi_m(m + extra as f64, &[x]), 1.0);
            }
            prop_assert!((0.0..=1.0).contains(&chi_m(m, &[x])));
        }

        #[test]
        fn remainder_within_bound(x in -10.0f64..10.0, z in -10.0f64..10.0, m in 2u32..5, case in 0usize..3) {
            let p = CutoffProfile::new(1).unwrap();
            let (k, a) = [(0, 0), (1, 0), (1, 1)][case];
            let a = mi(&[a]);
            let m = m as f64;
            let r = taylor_remainder_exact(&p, m, &a, k, &[x], &[z]).unwrap();
            let b = RemainderBound::new(&p, &a, k, m).unwrap().eval(&[x], &[z]);
            prop_assert!(r.abs() <= b, "R = {r}, bound = {b}");
        }
    }
}
