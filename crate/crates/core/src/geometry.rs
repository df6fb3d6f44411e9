//! Finite lattices in `R^d`: hypercubes, slabs and explicit point sets.
//!
//! A [`Lattice`] stores its points in lexicographic order. That order is the
//! canonical site order used everywhere downstream; in particular it fixes the
//! tensor-factor order of every Hilbert space built on the lattice.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `r^2` for ball membership with non-integer coordinates.
const RADIUS_TOL: f64 = 1e-12;

/// Growth parameters `(C, gamma, r0)` of `|B_r(z) ∩ L| <= C r^gamma` for `r >= r0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub c: f64,
    pub gamma: f64,
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeKind {
    Hypercubic { half_extent: u32 },
    Slab { free_dims: usize, free_extent: u32, bounded_sizes: Vec<u32> },
    Points,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    kind: LatticeKind,
    dim: usize,
    points: Vec<Vec<f64>>,
    growth: Option<Growth>,
    slab_bounds: BTreeMap<usize, f64>,
    integer: bool,
    lookup: HashMap<Vec<i64>, usize>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn checked_count(side: u64, dims: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..dims {
        total = total.checked_mul(side).ok_or_else(|| Error::Overflow(format!("{side}^{dims}")))?;
    }
    // Coordinates are materialized, so the product with d must fit as well.
    total
        .checked_mul(dims.max(1) as u64)
        .filter(|&n| n <= usize::MAX as u64 && n <= (1u64 << 40))
        .ok_or_else(|| Error::Overflow(format!("{side}^{dims} points in dimension {dims}")))?;
    Ok(total)
}

/// Cartesian product of integer ranges, already in lexicographic order.
fn product(ranges: &[(i64, i64)]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in ranges {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
        for prefix in &out {
            for v in lo..=hi {
                let mut p = prefix.clone();
                p.push(v as f64);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl Lattice {
    fn build(
        kind: LatticeKind,
        dim: usize,
        mut points: Vec<Vec<f64>>,
        growth: Option<Growth>,
        slab_bounds: BTreeMap<usize, f64>,
    ) -> Result<Self> {
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(format!("all points must have {dim} coordinates")));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        if points.windows(2).any(|w| lex_cmp(&w[0], &w[1]) == Ordering::Equal) {
            return Err(Error::InvalidArgument("lattice points must be pairwise distinct".into()));
        }
        for (&axis, &bound) in &slab_bounds {
            if points.iter().any(|p| p[axis].abs() > bound) {
                return Err(Error::InvalidArgument(format!("point outside slab bound on axis {axis}")));
            }
        }
        let integer = points.iter().flatten().all(|c| c.fract() == 0.0 && c.abs() < 1e15);
        let lookup = if integer {
            points.iter().enumerate().map(|(i, p)| (p.iter().map(|&c| c as i64).collect(), i)).collect()
        } else {
            HashMap::new()
        };
        Ok(Self { kind, dim, points, growth, slab_bounds, integer, lookup })
    }

    /// `{-half_extent, ..., half_extent}^d`, recorded with `gamma = d`.
    pub fn hypercubic(d: usize, half_extent: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        checked_count(2 * half_extent as u64 + 1, d)?;
        let h = half_extent as i64;
        let points = product(&vec![(-h, h); d]);
        let growth = Growth { c: 3f64.powi(d as i32), gamma: d as f64, r0: 1.0 };
        Self::build(LatticeKind::Hypercubic { half_extent }, d, points, Some(growth), BTreeMap::new())
    }

    /// `{-e..e}^l × {0..M_1-1} × ... × {0..M_n-1}`. The bounded axes carry the
    /// slab bound `M_j - 1` (the largest coordinate magnitude) and the recorded
    /// effective dimension is `l`.
    pub fn slab(free_dims: usize, free_extent: u32, bounded_sizes: &[u32]) -> Result<Self> {
        if free_dims == 0 {
            return Err(Error::InvalidArgument("slab needs at least one free axis".into()));
        }
        if bounded_sizes.is_empty() {
            return Self::hypercubic(free_dims, free_extent);
        }
        if bounded_sizes.contains(&0) {
            return Err(Error::InvalidArgument("bounded slab sizes must be positive".into()));
        }
        let d = free_dims + bounded_sizes.len();
        let free_count = checked_count(2 * free_extent as u64 + 1, free_dims)?;
        bounded_sizes
            .iter()
            .try_fold(free_count, |acc, &m| acc.checked_mul(m as u64))
            .filter(|&n| n <= (1u64 << 40))
            .ok_or_else(|| Error::Overflow("slab point count".into()))?;
        let e = free_extent as i64;
        let mut ranges = vec![(-e, e); free_dims];
        ranges.extend(bounded_sizes.iter().map(|&m| (0, m as i64 - 1)));
        let thickness: f64 = bounded_sizes.iter().map(|&m| m as f64).product();
        let growth = Growth { c: 3f64.powi(free_dims as i32) * thickness, gamma: free_dims as f64, r0: 1.0 };
        let bounds = bounded_sizes.iter().enumerate().map(|(j, &m)| (free_dims + j, (m - 1) as f64)).collect();
        Self::build(
            LatticeKind::Slab { free_dims, free_extent, bounded_sizes: bounded_sizes.to_vec() },
            d,
            Self::sorted(product(&ranges)),
            Some(growth),
            bounds,
        )
    }

    fn sorted(mut p: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        p.sort_by(|a, b| lex_cmp(a, b));
        p
    }

    /// An explicit point set. `gamma`, when given, is recorded as metadata only.
    pub fn from_points(points: Vec<Vec<f64>>, growth: Option<Growth>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| Error::InvalidArgument("empty point set".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("points need at least one coordinate".into()));
        }
        Self::build(LatticeKind::Points, dim, points, growth, BTreeMap::new())
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, site: usize) -> &[f64] {
        &self.points[site]
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    pub fn slab_bounds(&self) -> &BTreeMap<usize, f64> {
        &self.slab_bounds
    }

    pub fn has_integer_coords(&self) -> bool {
        self.integer
    }

    /// Site index of `point`, if it is a lattice point.
    pub fn find(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim {
            return None;
        }
        if self.integer {
            if point.iter().any(|c| c.fract() != 0.0) {
                return None;
            }
            let key: Vec<i64> = point.iter().map(|&c| c as i64).collect();
            return self.lookup.get(&key).copied();
        }
        self.points.binary_search_by(|p| lex_cmp(p, point)).ok()
    }

    pub fn site(&self, point: &[f64]) -> Result<usize> {
        self.find(point).ok_or_else(|| Error::NotASite(point.to_vec()))
    }

    pub fn dist_sq(&self, x: usize, y: usize) -> f64 {
        self.points[x].iter().zip(&self.points[y]).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Euclidean distance between two sites.
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist_sq(x, y).sqrt()
    }

    pub fn sup_norm(&self, site: usize) -> f64 {
        self.points[site].iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Strict ball membership `|x - z| < r` on squared distances.
    fn inside(&self, d2: f64, r: f64) -> bool {
        let r2 = r * r;
        if self.integer {
            d2 < r2
        } else {
            d2 < r2 - RADIUS_TOL * r2.max(1.0)
        }
    }

    /// Number of lattice points in the open ball `B_r(center)`.
    pub fn ball_count(&self, center: &[f64], r: f64) -> Result<usize> {
        let site = self.site(center)?;
        Ok(self.ball_count_at(site, r))
    }

    pub fn ball_count_at(&self, site: usize, r: f64) -> usize {
        (0..self.len()).filter(|&y| self.inside(self.dist_sq(site, y), r)).count()
    }

    /// Sites `y` with `|y - x| < r`.
    pub fn ball_sites(&self, site: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.inside(self.dist_sq(site, y), r)).collect()
    }

    /// All sites with `|x|_∞ <= m + margin`, in canonical order.
    pub fn box_sites(&self, m: f64, margin: f64) -> Vec<usize> {
        let limit = m + margin;
        let tol = if self.integer { 0.0 } else { RADIUS_TOL * limit.abs().max(1.0) };
        (0..self.len()).filter(|&x| self.sup_norm(x) <= limit + tol).collect()
    }

    /// Checks `|B_r(z) ∩ L| <= C r^gamma` for every site `z` and every radius in
    /// `r_grid`. On a finite lattice this only certifies the tested range.
    pub fn verify_growth(&self, growth: Growth, r_grid: &[f64]) -> Result<GrowthReport> {
        if r_grid.is_empty() {
            return Err(Error::InvalidArgument("empty radius grid".into()));
        }
        if let Some(&r) = r_grid.iter().find(|&&r| !(r >= growth.r0)) {
            return Err(Error::Precondition(format!("radius {r} below r0 = {}", growth.r0)));
        }
        let mut radii = r_grid.to_vec();
        radii.sort_by(f64::total_cmp);
        let mut worst_ratio = 0.0f64;
        let mut witness = None;
        for z in 0..self.len() {
            let mut d2: Vec<f64> = (0..self.len()).map(|y| self.dist_sq(z, y)).collect();
            d2.sort_by(f64::total_cmp);
            for &r in &radii {
                let count = d2.partition_point(|&v| self.inside(v, r));
                let ratio = count as f64 / (growth.c * r.powf(growth.gamma));
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    if ratio > 1.0 {
                        witness = Some(GrowthWitness { site: z, r, count });
                    }
                }
            }
        }
        Ok(GrowthReport {
            pass: worst_ratio <= 1.0,
            worst_ratio,
            witness,
            growth,
            tested_range: (radii[0], radii[radii.len() - 1]),
            sites: self.len(),
            note: "certified on the tested radius range of a finite lattice only".into(),
        })
    }

    /// Least-squares slope of `log |B_r ∩ L|` against `log r`, averaged over
    /// centers. This is an estimate, never a certificate.
    pub fn estimate_gamma(&self, r_grid: &[f64]) -> Option<f64> {
        let pts: Vec<(f64, f64)> = r_grid
            .iter()
            .filter(|&&r| r > 0.0)
            .map(|&r| {
                let mean = (0..self.len()).map(|z| self.ball_count_at(z, r) as f64).sum::<f64>() / self.len() as f64;
                (r.ln(), mean.ln())
            })
            .collect();
        least_squares_slope(&pts)
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthWitness {
    pub site: usize,
    pub r: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub witness: Option<GrowthWitness>,
    pub growth: Growth,
    pub tested_range: (f64, f64),
    pub sites: usize,
    pub note: String,
}

/// JSON form of a lattice.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_extent: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_dims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded_sizes: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        let need = |v: Option<u32>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("lattice.{what} missing for kind `{}`", self.kind)))
        };
        match self.kind.as_str() {
            "hypercubic" => {
                let d = self.d.ok_or_else(|| Error::Config("lattice.d missing".into()))?;
                Lattice::hypercubic(d, need(self.half_extent, "half_extent")?)
            }
            "slab" => {
                let l = self.free_dims.ok_or_else(|| Error::Config("lattice.free_dims missing".into()))?;
                let sizes = self.bounded_sizes.clone().unwrap_or_default();
                let lat = Lattice::slab(l, need(self.half_extent, "half_extent")?, &sizes)?;
                if let Some(d) = self.d {
                    if d != lat.dim() {
                        return Err(Error::Config(format!("lattice.d = {d} but slab has dimension {}", lat.dim())));
                    }
                }
                Ok(lat)
            }
            "points" => {
                let pts = self.points.clone().ok_or_else(|| Error::Config("lattice.points missing".into()))?;
                let growth = self.gamma.map(|gamma| Growth { c: f64::NAN, gamma, r0: 1.0 });
                Lattice::from_points(pts, growth)
            }
            other => Err(Error::Unknown { kind: "lattice kind", name: other.into() }),
        }
    }

    pub fn of(lat: &Lattice) -> Self {
        let gamma = lat.growth().map(|g| g.gamma);
        match lat.kind() {
            LatticeKind::Hypercubic { half_extent } => Self {
                kind: "hypercubic".into(),
                d: Some(lat.dim()),
                half_extent: Some(*half_extent),
                gamma,
                ..Default::default()
            },
            LatticeKind::Slab { free_dims, free_extent, bounded_sizes } => Self {
                kind: "slab".into(),
                d: Some(lat.dim()),
                half_extent: Some(*free_extent),
                free_dims: Some(*free_dims),
                bounded_sizes: Some(bounded_sizes.clone()),
                gamma,
                ..Default::default()
            },
            LatticeKind::Points => Self {
                kind: "points".into(),
                d: Some(lat.dim()),
                points: Some(lat.points().to_vec()),
                gamma,
                ..Default::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn segment_and_square() {
        let seg = Lattice::hypercubic(1, 2).unwrap();
        assert_eq!(seg.points(), &[vec![-2.0], vec![-1.0], vec![0.0], vec![1.0], vec![2.0]]);
        let sq = Lattice::hypercubic(2, 1).unwrap();
        assert_eq!(sq.len(), 9);
        assert_eq!(sq.growth().unwrap().gamma, 2.0);
    }

    #[test]
    fn cube_is_lexicographic() {
        let cube = Lattice::hypercubic(3, 1).unwrap();
        assert_eq!(cube.len(), 27);
        let mut expected = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    expected.push(vec![a as f64, b as f64, c as f64]);
                }
            }
        }
        assert_eq!(cube.points(), expected.as_slice());
    }

    #[test]
    fn slab_counts() {
        let s = Lattice::slab(1, 3, &[2]).unwrap();
        assert_eq!(s.len(), 14);
        assert_eq!(s.growth().unwrap().gamma, 1.0);
        assert_eq!(s.slab_bounds().get(&1), Some(&1.0));

        let degenerate = Lattice::slab(2, 1, &[]).unwrap();
        assert_eq!(degenerate.points(), Lattice::hypercubic(2, 1).unwrap().points());

        // |L ∩ [-m, m]^d| = (2m + 1) M once m covers the bounded axis.
        let big = Lattice::slab(1, 10, &[3]).unwrap();
        for m in 3..=6 {
            assert_eq!(big.box_sites(m as f64, 0.0).len(), (2 * m + 1) * 3);
        }
    }

    #[test]
    fn open_balls() {
        let sq = Lattice::hypercubic(2, 3).unwrap();
        assert_eq!(sq.ball_count(&[0.0, 0.0], 1.5).unwrap(), 9);
        let line = Lattice::hypercubic(1, 3).unwrap();
        assert_eq!(line.ball_count(&[0.0], 0.5).unwrap(), 1);
        // Strictness: the neighbors at distance exactly 1 are excluded.
        assert_eq!(line.ball_count(&[0.0], 1.0).unwrap(), 1);
        let slab = Lattice::slab(1, 3, &[2]).unwrap();
        assert_eq!(slab.ball_count(&[0.0, 0.0], 1.2).unwrap(), 4);
        assert!(matches!(line.ball_count(&[0.5], 1.0), Err(Error::NotASite(_))));
    }

    #[test]
    fn growth_certification() {
        let sq = Lattice::hypercubic(2, 6).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 1.0 + 0.3 * i as f64).collect();
        let ok = sq.verify_growth(Growth { c: 9.0, gamma: 2.0, r0: 1.0 }, &grid).unwrap();
        assert!(ok.pass, "{ok:?}");
        let bad = sq.verify_growth(Growth { c: 9.0, gamma: 1.0, r0: 1.0 }, &grid).unwrap();
        assert!(!bad.pass);
        assert!(bad.witness.is_some());

        let single = Lattice::from_points(vec![vec![0.0, 0.0]], None).unwrap();
        let r = single.verify_growth(Growth { c: 1.0, gamma: 0.1, r0: 1.0 }, &[1.0, 5.0, 50.0]).unwrap();
        assert!(r.pass);

        assert!(sq.verify_growth(Growth { c: 9.0, gamma: 2.0, r0: 1.0 }, &[]).is_err());
        assert!(sq.verify_growth(Growth { c: 9.0, gamma: 2.0, r0: 1.0 }, &[0.5]).is_err());
    }

    #[test]
    fn boxes() {
        let line = Lattice::hypercubic(1, 10).unwrap();
        let coords = |s: Vec<usize>| s.iter().map(|&i| line.point(i)[0] as i64).collect::<Vec<_>>();
        assert_eq!(coords(line.box_sites(2.0, 0.0)), vec![-2, -1, 0, 1, 2]);
        assert_eq!(coords(line.box_sites(2.0, 1.0)), (-3..=3).collect::<Vec<_>>());
        let sq = Lattice::hypercubic(2, 2).unwrap();
        assert_eq!(sq.box_sites(1.5, 0.0).len(), 9);
    }

    #[test]
    fn rejects_duplicates_and_non_finite() {
        assert!(Lattice::from_points(vec![vec![0.0], vec![0.0]], None).is_err());
        assert!(Lattice::from_points(vec![vec![f64::NAN]], None).is_err());
    }

    #[test]
    fn gamma_estimate_is_close_to_dimension() {
        let sq = Lattice::hypercubic(2, 12).unwrap();
        let est = sq.estimate_gamma(&[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((est - 2.0).abs() < 0.5, "{est}");
    }

    #[test]
    fn json_round_trip() {
        for lat in [Lattice::hypercubic(2, 2).unwrap(), Lattice::slab(1, 2, &[2]).unwrap()] {
            let spec = LatticeSpec::of(&lat);
            let text = serde_json::to_string(&spec).unwrap();
            let back: LatticeSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back.build().unwrap().points(), lat.points());
        }
    }

    proptest! {
        #[test]
        fn ball_count_monotone(r1 in 0.0f64..5.0, dr in 0.0f64..3.0, site in 0usize..49) {
            let sq = Lattice::hypercubic(2, 3).unwrap();
            prop_assert!(sq.ball_count_at(site, r1) <= sq.ball_count_at(site, r1 + dr));
        }

        #[test]
        fn hypercubic_growth_constant(d in 1usize..3, r in 1.0f64..4.0) {
            let lat = Lattice::hypercubic(d, 4).unwrap();
            let g = Growth { c: 3f64.powi(d as i32), gamma: d as f64, r0: 1.0 };
            prop_assert!(lat.verify_growth(g, &[r]).unwrap().pass);
        }

        #[test]
        fn boxes_nest(m1 in 0.0f64..4.0, dm in 0.0f64..3.0, margin in 0.0f64..2.0) {
            let lat = Lattice::hypercubic(2, 5).unwrap();
            let small = lat.box_sites(m1, margin);
            let big = lat.box_sites(m1 + dm, margin);
            prop_assert!(small.iter().all(|s| big.contains(s)));
        }

        #[test]
        fn ordering_is_reproducible(pts in proptest::collection::btree_set((-5i32..5, -5i32..5), 1..20)) {
            let raw: Vec<Vec<f64>> = pts.iter().rev().map(|&(a, b)| vec![a as f64, b as f64]).collect();
            let a = Lattice::from_points(raw.clone(), None).unwrap();
            let mut shuffled = raw;
            shuffled.reverse();
            let b = Lattice::from_points(shuffled, None).unwrap();
            prop_assert_eq!(a.points(), b.points());
        }
    }
}
