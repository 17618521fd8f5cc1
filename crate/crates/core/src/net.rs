//! Deterministic ρ-separated nets.
//!
//! The rule: candidates are the points of the lattice `(ρ/K)·Z^d` lying in the
//! set (plus any explicitly listed points), visited in lexicographic order; a
//! candidate is kept iff it is at distance `>= ρ` from every point kept so
//! far. The result is ρ-separated, inclusion-maximal among the candidates,
//! and commutes with positive scaling of the set.
//!
//! Two lattice candidates are compared through their integer indices
//! (`|i - j|² >= K²`), so separation never depends on rounding.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;

use crate::vecmath::dist;
use crate::{Error, Result};

/// Default lattice resolution divisor.
pub const DEFAULT_K: u32 = 8;
/// Refuse to enumerate more lattice candidates than this.
pub const MAX_CANDIDATES: u64 = 100_000_000;

/// Bounded target sets. All closed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GeometrySpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Points(Vec<Vec<f64>>),
    /// `factor · inner = {x : x / factor ∈ inner}`.
    Scaled { inner: Box<GeometrySpec>, factor: f64 },
    Union(Vec<GeometrySpec>),
}

impl GeometrySpec {
    pub fn unit_cube(d: usize) -> Self {
        GeometrySpec::Box {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    /// The integer grid `[0, n-1]^d ∩ Z^d` as a point set.
    pub fn grid(n: usize, d: usize) -> Self {
        let total = n.pow(d as u32);
        let mut pts = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            pts.push(idx.iter().map(|&i| i as f64).collect());
            for j in (0..d).rev() {
                idx[j] += 1;
                if idx[j] < n {
                    break;
                }
                idx[j] = 0;
            }
        }
        GeometrySpec::Points(pts)
    }

    pub fn scaled(self, factor: f64) -> Self {
        GeometrySpec::Scaled {
            inner: Box::new(self),
            factor,
        }
    }

    /// Checks the invariants and returns the dimension.
    pub fn validate(&self) -> Result<usize> {
        match self {
            GeometrySpec::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::usage("box", "corner dimensions differ"));
                }
                if lo.len() < 2 {
                    return Err(Error::usage("d", "dimension must be at least 2"));
                }
                if lo.iter().chain(hi).any(|x| !x.is_finite()) {
                    return Err(Error::usage("box", "unbounded corner"));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::usage("box", "degenerate box, need lo < hi componentwise"));
                }
                Ok(lo.len())
            }
            GeometrySpec::Ball { center, radius } => {
                if center.len() < 2 {
                    return Err(Error::usage("d", "dimension must be at least 2"));
                }
                if center.iter().any(|x| !x.is_finite()) || !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::usage("ball", "need finite center and positive finite radius"));
                }
                Ok(center.len())
            }
            GeometrySpec::Points(pts) => {
                let first = pts.first().ok_or_else(|| Error::usage("points", "empty point set"))?;
                let d = first.len();
                if d < 2 {
                    return Err(Error::usage("d", "dimension must be at least 2"));
                }
                if pts.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
                    return Err(Error::usage("points", "inconsistent dimension or non-finite coordinate"));
                }
                Ok(d)
            }
            GeometrySpec::Scaled { inner, factor } => {
                if !(*factor > 0.0) || !factor.is_finite() {
                    return Err(Error::usage("scale", "factor must be positive and finite"));
                }
                inner.validate()
            }
            GeometrySpec::Union(parts) => {
                let first = parts.first().ok_or_else(|| Error::usage("union", "empty union"))?;
                let d = first.validate()?;
                for p in &parts[1..] {
                    if p.validate()? != d {
                        return Err(Error::usage("union", "members have different dimensions"));
                    }
                }
                Ok(d)
            }
        }
    }

    /// Membership in the box/ball part of the set, with slack `tol`.
    fn region_contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            GeometrySpec::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            GeometrySpec::Ball { center, radius } => dist(x, center) <= radius + tol,
            GeometrySpec::Points(_) => false,
            GeometrySpec::Scaled { inner, factor } => {
                let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
                inner.region_contains(&y, tol / factor)
            }
            GeometrySpec::Union(parts) => parts.iter().any(|p| p.region_contains(x, tol)),
        }
    }

    /// Bounding box of the box/ball part, if any.
    fn region_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            GeometrySpec::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            GeometrySpec::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            GeometrySpec::Points(_) => None,
            GeometrySpec::Scaled { inner, factor } => inner.region_bounds().map(|(lo, hi)| {
                (
                    lo.into_iter().map(|v| v * factor).collect(),
                    hi.into_iter().map(|v| v * factor).collect(),
                )
            }),
            GeometrySpec::Union(parts) => parts.iter().filter_map(|p| p.region_bounds()).reduce(|(al, ah), (bl, bh)| {
                (
                    al.iter().zip(&bl).map(|(a, b)| a.min(*b)).collect(),
                    ah.iter().zip(&bh).map(|(a, b)| a.max(*b)).collect(),
                )
            }),
        }
    }

    /// Explicitly listed points (after scaling).
    fn listed_points(&self, out: &mut Vec<Vec<f64>>, factor: f64) {
        match self {
            GeometrySpec::Points(pts) => out.extend(pts.iter().map(|p| p.iter().map(|v| v * factor).collect())),
            GeometrySpec::Scaled { inner, factor: f } => inner.listed_points(out, factor * f),
            GeometrySpec::Union(parts) => parts.iter().for_each(|p| p.listed_points(out, factor)),
            _ => {}
        }
    }
}

/// A ρ-separated subset of a geometry, produced by the greedy lattice rule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Net {
    pub rho: f64,
    /// Lattice resolution divisor; candidates lie on `(rho/k)·Z^d`.
    pub k: u32,
    pub d: usize,
    coords: Vec<f64>,
    pub source: GeometrySpec,
}

impl Net {
    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Spacing of the candidate lattice.
    pub fn lattice_spacing(&self) -> f64 {
        self.rho / self.k as f64
    }

    pub fn index_of(&self, y: &[f64]) -> Option<usize> {
        self.points().position(|p| p == y)
    }

    /// A net over an explicit point list that is already ρ-separated, kept
    /// as given. Used for hand-built targets.
    pub fn from_points(points: Vec<Vec<f64>>, rho: f64) -> Result<Net> {
        let spec = GeometrySpec::Points(points);
        let d = spec.validate()?;
        let GeometrySpec::Points(pts) = &spec else { unreachable!() };
        for i in 0..pts.len() {
            for j in 0..i {
                if dist(&pts[i], &pts[j]) < rho {
                    return Err(Error::usage("points", "points are not rho-separated"));
                }
            }
        }
        let coords = pts.iter().flatten().copied().collect();
        Ok(Net {
            rho,
            k: DEFAULT_K,
            d,
            coords,
            source: spec,
        })
    }
}

struct Candidate<'a> {
    pos: &'a [f64],
    lattice: Option<&'a [i64]>,
}

/// Keeps accepted points bucketed by cells slightly larger than ρ, so any
/// conflicting point lies in one of the `3^d` neighbouring cells.
struct Sweep {
    d: usize,
    k: i64,
    rho_sq: f64,
    inv_cell: f64,
    coords: Vec<f64>,
    lattice: Vec<Option<Vec<i64>>>,
    cells: HashMap<u64, Vec<u32>>,
    offsets: Vec<Vec<i64>>,
    scratch: Vec<i64>,
}

impl Sweep {
    fn new(d: usize, rho: f64, k: u32) -> Self {
        let mut offsets = vec![Vec::new()];
        for _ in 0..d {
            offsets = offsets
                .into_iter()
                .flat_map(|o: Vec<i64>| {
                    (-1..=1).map(move |s| {
                        let mut n = o.clone();
                        n.push(s);
                        n
                    })
                })
                .collect();
        }
        Sweep {
            d,
            k: k as i64,
            rho_sq: rho * rho,
            inv_cell: 1.0 / (rho * (1.0 + 1e-9)),
            coords: Vec::new(),
            lattice: Vec::new(),
            cells: HashMap::new(),
            offsets,
            scratch: vec![0; d],
        }
    }

    fn cell_key(cell: &[i64]) -> u64 {
        cell.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &c| {
            (h ^ c as u64).wrapping_mul(0x0000_0100_0000_01B3).rotate_left(17)
        })
    }

    fn separated(&self, c: &Candidate<'_>, other: usize) -> bool {
        match (c.lattice, &self.lattice[other]) {
            (Some(a), Some(b)) => {
                let s: i64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                s >= self.k * self.k
            }
            _ => {
                let q = &self.coords[other * self.d..(other + 1) * self.d];
                crate::vecmath::dist_sq(c.pos, q) >= self.rho_sq
            }
        }
    }

    fn offer(&mut self, c: Candidate<'_>) {
        let base: Vec<i64> = c.pos.iter().map(|v| libm::floor(v * self.inv_cell) as i64).collect();
        for off in &self.offsets {
            for j in 0..self.d {
                self.scratch[j] = base[j] + off[j];
            }
            if let Some(bucket) = self.cells.get(&Self::cell_key(&self.scratch)) {
                if bucket.iter().any(|&i| !self.separated(&c, i as usize)) {
                    return;
                }
            }
        }
        let id = self.lattice.len() as u32;
        self.coords.extend_from_slice(c.pos);
        self.lattice.push(c.lattice.map(|l| l.to_vec()));
        self.cells.entry(Self::cell_key(&base)).or_default().push(id);
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Greedy ρ-net of `spec` over the `(ρ/K)`-lattice.
pub fn build_net(spec: &GeometrySpec, rho: f64, k: u32) -> Result<Net> {
    let d = spec.validate()?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::usage("rho", "must be positive and finite"));
    }
    if k < 2 {
        return Err(Error::usage("K", "lattice divisor must be at least 2"));
    }
    let h = rho / k as f64;
    let tol = 1e-9 * h;

    let mut listed = Vec::new();
    spec.listed_points(&mut listed, 1.0);
    listed.sort_by(|a, b| lex_cmp(a, b));
    listed.dedup();

    // Lattice index box covering the region part.
    let ranges: Option<Vec<(i64, i64)>> = spec.region_bounds().map(|(lo, hi)| {
        lo.iter()
            .zip(&hi)
            .map(|(l, u)| (libm::ceil(l / h - 1e-9) as i64, libm::floor(u / h + 1e-9) as i64))
            .collect()
    });
    if let Some(r) = &ranges {
        let mut total: u64 = 1;
        for (a, b) in r {
            let n = (b - a + 1).max(0) as u64;
            total = total.saturating_mul(n);
        }
        if total > MAX_CANDIDATES {
            return Err(Error::Resource(alloc::format!(
                "{total} lattice candidates exceed the limit of {MAX_CANDIDATES}"
            )));
        }
    }

    let mut sweep = Sweep::new(d, rho, k);
    let mut listed_iter = listed.iter().peekable();
    if let Some(ranges) = ranges.filter(|r| r.iter().all(|(a, b)| a <= b)) {
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut pos = vec![0.0; d];
        'outer: loop {
            for j in 0..d {
                pos[j] = idx[j] as f64 * h;
            }
            if spec.region_contains(&pos, tol) {
                while let Some(p) = listed_iter.next_if(|p| lex_cmp(p, &pos).is_lt()) {
                    sweep.offer(Candidate { pos: p, lattice: None });
                }
                // A listed point equal to this lattice point is the same candidate.
                listed_iter.next_if(|p| lex_cmp(p, &pos).is_eq());
                sweep.offer(Candidate {
                    pos: &pos,
                    lattice: Some(&idx),
                });
            }
            let mut j = d;
            loop {
                if j == 0 {
                    break 'outer;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] <= ranges[j].1 {
                    break;
                }
                idx[j] = ranges[j].0;
            }
        }
    }
    for p in listed_iter {
        sweep.offer(Candidate { pos: p, lattice: None });
    }
    if sweep.coords.is_empty() {
        return Err(Error::usage("geometry", "no lattice point or listed point inside the set"));
    }
    Ok(Net {
        rho,
        k,
        d,
        coords: sweep.coords,
        source: spec.clone(),
    })
}

pub fn net_count(spec: &GeometrySpec, rho: f64, k: u32) -> Result<usize> {
    build_net(spec, rho, k).map(|n| n.len())
}

/// Least-squares fit of `log |A^ρ|` against `-log ρ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    /// `(ρ, |A^ρ|)` per input scale.
    pub counts: Vec<(f64, usize)>,
    /// Slopes between consecutive scales.
    pub local_slopes: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

pub fn box_dimension_fit(spec: &GeometrySpec, rhos: &[f64], k: u32) -> Result<DimensionFit> {
    let mut distinct = rhos.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::usage("rho_list", "need at least 3 distinct scales"));
    }
    let counts: Vec<(f64, usize)> = rhos
        .iter()
        .map(|&r| net_count(spec, r, k).map(|c| (r, c)))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = counts.iter().map(|(r, _)| -libm::log(*r)).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, c)| libm::log(*c as f64)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = libm::sqrt(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum::<f64>()
            / n,
    );
    let local_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(DimensionFit {
        slope,
        intercept,
        counts,
        local_slopes,
        residual,
    })
}

/// The sequence `ρ^dim · |A^ρ|` with its spread.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContentProfile {
    pub dim: f64,
    pub values: Vec<(f64, f64)>,
    pub min: f64,
    pub max: f64,
}

impl ContentProfile {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

pub fn content_constant(spec: &GeometrySpec, dim: f64, rhos: &[f64], k: u32) -> Result<ContentProfile> {
    if !(dim >= 0.0) {
        return Err(Error::usage("dim", "must be nonnegative"));
    }
    if rhos.is_empty() {
        return Err(Error::usage("rho_list", "empty"));
    }
    let values: Vec<(f64, f64)> = rhos
        .iter()
        .map(|&r| net_count(spec, r, k).map(|c| (r, libm::pow(r, dim) * c as f64)))
        .collect::<Result<_>>()?;
    let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let max = values.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(ContentProfile { dim, values, min, max })
}

/// Neighbourhood counts of a net around one of its points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PackingProfile {
    /// `annulus[r-1]` = #points with `r < d(y, x) <= r + 1`, for `r = 1..=r_max`.
    pub annulus: Vec<u64>,
    /// `ball[r-1]` = #points with `d(y, x) <= r`.
    pub ball: Vec<u64>,
    /// `Σ d(y, x)^(1-d)` over points with `d(y, x) >= 1`.
    pub inverse_distance_sum: f64,
    /// `annulus · ρ^d / r^(d-1)`.
    pub annulus_ratio: Vec<f64>,
    /// `ball · ρ^d / r^d`.
    pub ball_ratio: Vec<f64>,
    /// `inverse_distance_sum · ρ^d / |net|^(1/d)`.
    pub inverse_distance_ratio: f64,
}

pub fn packing_profile(net: &Net, y: &[f64]) -> Result<PackingProfile> {
    if net.index_of(y).is_none() {
        return Err(Error::usage("origin", "point is not a member of the net"));
    }
    let d = net.d;
    let df = d as f64;
    let dists: Vec<f64> = net.points().map(|p| dist(p, y)).collect();
    let far = dists.iter().cloned().fold(0.0, f64::max);
    let r_max = (libm::ceil(far) as usize).max(1);
    let mut annulus = vec![0u64; r_max];
    let mut ball = vec![0u64; r_max];
    let mut inverse_distance_sum = 0.0;
    for &s in &dists {
        if s >= 1.0 {
            inverse_distance_sum += libm::pow(s, 1.0 - df);
        }
        // smallest integer r with s <= r
        let r_ceil = libm::ceil(s) as usize;
        for b in ball.iter_mut().skip(r_ceil.max(1) - 1) {
            *b += 1;
        }
        // annulus r < s <= r + 1  ⇔  r = ceil(s) - 1
        if s > 1.0 {
            let r = r_ceil - 1;
            if r >= 1 && r <= r_max {
                annulus[r - 1] += 1;
            }
        }
    }
    let rho_d = libm::pow(net.rho, df);
    let annulus_ratio = annulus
        .iter()
        .enumerate()
        .map(|(i, &n)| n as f64 * rho_d / libm::pow((i + 1) as f64, df - 1.0))
        .collect();
    let ball_ratio = ball
        .iter()
        .enumerate()
        .map(|(i, &n)| n as f64 * rho_d / libm::pow((i + 1) as f64, df))
        .collect();
    let inverse_distance_ratio = inverse_distance_sum * rho_d / libm::pow(net.len() as f64, 1.0 / df);
    Ok(PackingProfile {
        annulus,
        ball,
        inverse_distance_sum,
        annulus_ratio,
        ball_ratio,
        inverse_distance_ratio,
    })
}
