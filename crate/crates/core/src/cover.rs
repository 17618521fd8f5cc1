//! Coupled discrete / well cover times driven by one line stream.
//!
//! A point `x` is *hit* by a line when `d(x, L) <= 1` and *singularly
//! covered* when `d(x, L) <= 1 - ρ`, i.e. the whole ball `B(x, ρ)` lies in
//! the cylinder. `t_d` is the time the last net point gets hit and `t_w` the
//! time the last one gets singularly covered; the true cover time of the
//! underlying set lies in between.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::lineproc::{LineStream, TimedLine, Window};
use crate::measure::singular_rate;
use crate::net::{build_net, GeometrySpec, Net};
use crate::vecmath::dist;
use crate::{Error, Result, StreamKey};

/// Default cap on line events per replicate.
pub const DEFAULT_MAX_LINES: u64 = 1_000_000_000;

/// A net together with the ball window its line stream lives in.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverTarget {
    pub net: Net,
    window: Window,
}

fn enclosing_window(sets: &[&Net]) -> Result<Window> {
    let d = sets[0].d;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for net in sets {
        if net.d != d {
            return Err(Error::usage("d", "nets have different dimensions"));
        }
        for p in net.points() {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let far = sets
        .iter()
        .flat_map(|n| n.points())
        .map(|p| dist(p, &center))
        .fold(0.0, f64::max);
    Window::new(center, far * (1.0 + 1e-12) + 1.0)
}

impl CoverTarget {
    /// Window centred at the bounding-box centre of the net, with radius the
    /// largest point distance plus one.
    pub fn new(net: Net) -> Result<Self> {
        if net.is_empty() {
            return Err(Error::usage("net", "empty net"));
        }
        let window = enclosing_window(&[&net])?;
        Ok(CoverTarget { net, window })
    }

    /// Uses a caller-supplied window, which must contain every point with
    /// room 1 to spare.
    pub fn with_window(net: Net, window: Window) -> Result<Self> {
        if net.is_empty() {
            return Err(Error::usage("net", "empty net"));
        }
        if window.dim() != net.d {
            return Err(Error::usage("window", "dimension mismatch"));
        }
        if net.points().any(|p| dist(p, window.center()) > window.radius() - 1.0) {
            return Err(Error::usage("window", "some point is within distance 1 of the window boundary"));
        }
        Ok(CoverTarget { net, window })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn rho(&self) -> f64 {
        self.net.rho
    }

    /// The seeded line stream this target is run against.
    pub fn stream(&self, key: StreamKey) -> LineStream<rand_chacha::ChaCha8Rng> {
        LineStream::new(self.window.clone(), key.rng())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverResult {
    pub t_d: f64,
    pub t_w: f64,
    /// Per net point, the first time a line came within distance 1.
    pub first_hit: Vec<f64>,
    /// Per net point, the first time a line came within distance `1 - ρ`.
    pub first_singular: Vec<f64>,
    pub lines_used: u64,
    pub key: Option<StreamKey>,
}

/// Incremental cover state for one net. Points live in buckets of a unit
/// grid; a line only visits buckets near it and a point leaves its bucket
/// once singularly covered.
struct Engine<'a> {
    d: usize,
    coords: &'a [f64],
    singular_sq: f64,
    first_hit: Vec<f64>,
    first_singular: Vec<f64>,
    hit_left: usize,
    singular_left: usize,
    t_d: f64,
    t_w: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cell_lo: Vec<i64>,
    cell_hi: Vec<i64>,
    buckets: Vec<Vec<u32>>,
    index: HashMap<u64, u32>,
    stamp: Vec<u64>,
    epoch: u64,
    // scratch
    box_lo: Vec<i64>,
    box_hi: Vec<i64>,
    cell: Vec<i64>,
}

fn cell_key(cell: &[i64]) -> u64 {
    cell.iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, &c| {
        (h ^ c as u64).wrapping_mul(0xff51_afd7_ed55_8ccd).rotate_left(23)
    })
}

impl<'a> Engine<'a> {
    fn new(net: &'a Net) -> Self {
        let d = net.d;
        let n = net.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in net.points() {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let mut index: HashMap<u64, u32> = HashMap::new();
        let mut buckets: Vec<Vec<u32>> = Vec::new();
        let mut cell = vec![0i64; d];
        for (j, p) in net.points().enumerate() {
            for i in 0..d {
                cell[i] = libm::floor(p[i]) as i64;
            }
            let b = *index.entry(cell_key(&cell)).or_insert_with(|| {
                buckets.push(Vec::new());
                (buckets.len() - 1) as u32
            });
            buckets[b as usize].push(j as u32);
        }
        let one_minus = 1.0 - net.rho;
        Engine {
            d,
            coords: net.coords(),
            singular_sq: one_minus * one_minus,
            first_hit: vec![f64::INFINITY; n],
            first_singular: vec![f64::INFINITY; n],
            hit_left: n,
            singular_left: n,
            t_d: f64::INFINITY,
            t_w: f64::INFINITY,
            cell_lo: lo.iter().map(|v| libm::floor(*v) as i64).collect(),
            cell_hi: hi.iter().map(|v| libm::floor(*v) as i64).collect(),
            lo,
            hi,
            stamp: vec![0; buckets.len()],
            buckets,
            index,
            epoch: 0,
            box_lo: vec![0; d],
            box_hi: vec![0; d],
            cell,
        }
    }

    fn done(&self) -> bool {
        self.singular_left == 0
    }

    /// Parameter interval where the line is within the point bounding box
    /// inflated by 1, if any.
    fn clip(&self, tl: &TimedLine) -> Option<(f64, f64)> {
        let u = tl.line.dir().as_slice();
        let o = tl.line.offset();
        let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.d {
            let (a, b) = (self.lo[i] - 1.0, self.hi[i] + 1.0);
            if u[i].abs() < 1e-15 {
                if o[i] < a || o[i] > b {
                    return None;
                }
            } else {
                let (p, q) = ((a - o[i]) / u[i], (b - o[i]) / u[i]);
                s0 = s0.max(p.min(q));
                s1 = s1.min(p.max(q));
            }
        }
        (s0 <= s1).then_some((s0, s1))
    }

    fn process(&mut self, tl: &TimedLine) {
        let Some((s0, s1)) = self.clip(tl) else { return };
        self.epoch += 1;
        let t = tl.timestamp;
        let line = &tl.line;
        let u = line.dir().as_slice();
        let o = line.offset();
        // Every point within 1 of the line is within √(1 + 0.25²) < 1.25 of
        // some step point.
        let steps = libm::ceil((s1 - s0) / 0.5) as usize + 1;
        for k in 0..steps {
            let s = s0 + 0.5 * k as f64;
            let mut empty = false;
            for i in 0..self.d {
                let p = o[i] + s * u[i];
                self.box_lo[i] = (libm::floor(p - 1.25) as i64).max(self.cell_lo[i]);
                self.box_hi[i] = (libm::floor(p + 1.25) as i64).min(self.cell_hi[i]);
                empty |= self.box_lo[i] > self.box_hi[i];
            }
            if empty {
                continue;
            }
            self.cell.copy_from_slice(&self.box_lo);
            loop {
                if let Some(&b) = self.index.get(&cell_key(&self.cell)) {
                    if self.stamp[b as usize] != self.epoch {
                        self.stamp[b as usize] = self.epoch;
                        self.scan(b as usize, line, t);
                    }
                }
                let mut j = 0;
                loop {
                    if j == self.d {
                        break;
                    }
                    self.cell[j] += 1;
                    if self.cell[j] <= self.box_hi[j] {
                        break;
                    }
                    self.cell[j] = self.box_lo[j];
                    j += 1;
                }
                if j == self.d {
                    break;
                }
            }
        }
    }

    fn scan(&mut self, b: usize, line: &crate::lineproc::Line, t: f64) {
        let d = self.d;
        let mut i = 0;
        while i < self.buckets[b].len() {
            let p = self.buckets[b][i] as usize;
            let ds = line.dist_sq_unchecked(&self.coords[p * d..(p + 1) * d]);
            if ds <= 1.0 {
                if self.first_hit[p] == f64::INFINITY {
                    self.first_hit[p] = t;
                    self.hit_left -= 1;
                    if self.hit_left == 0 {
                        self.t_d = t;
                    }
                }
                if ds <= self.singular_sq {
                    self.first_singular[p] = t;
                    self.singular_left -= 1;
                    if self.singular_left == 0 {
                        self.t_w = t;
                    }
                    self.buckets[b].swap_remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }
}

/// Runs `stream` until every net point is singularly covered.
///
/// The stream must be time-ordered and made of lines from the target's
/// window (or any window containing it, restricted to lines that matter).
pub fn run_cover<I>(target: &CoverTarget, stream: I, max_lines: u64) -> Result<CoverResult>
where
    I: IntoIterator<Item = TimedLine>,
{
    let mut engine = Engine::new(&target.net);
    for (i, tl) in stream.into_iter().enumerate() {
        let used = i as u64 + 1;
        if used > max_lines {
            return Err(Error::Resource(alloc::format!(
                "cover not reached within {max_lines} lines"
            )));
        }
        engine.process(&tl);
        if engine.done() {
            return Ok(CoverResult {
                t_d: engine.t_d,
                t_w: engine.t_w,
                first_hit: engine.first_hit,
                first_singular: engine.first_singular,
                lines_used: used,
                key: None,
            });
        }
    }
    Err(Error::Resource("line stream ended before cover".into()))
}

/// [`run_cover`] on the target's own stream for `key`.
pub fn run_cover_seeded(target: &CoverTarget, key: StreamKey, max_lines: u64) -> Result<CoverResult> {
    let mut res = run_cover(target, target.stream(key), max_lines)?;
    res.key = Some(key);
    Ok(res)
}

/// Per-point first hit / first singular times among lines with timestamp
/// `<= horizon`; `+∞` where nothing arrived.
pub fn run_cover_until<I>(target: &CoverTarget, stream: I, horizon: f64) -> (Vec<f64>, Vec<f64>)
where
    I: IntoIterator<Item = TimedLine>,
{
    let mut engine = Engine::new(&target.net);
    for tl in stream {
        if tl.timestamp > horizon || engine.done() {
            break;
        }
        engine.process(&tl);
    }
    (engine.first_hit, engine.first_singular)
}

/// `t_d`, `t_w` of one net within a [`Bracket`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BracketEntry {
    pub rho: f64,
    pub n_points: usize,
    pub t_d: f64,
    pub t_w: f64,
    pub lines_used: u64,
}

/// `t_d`, `t_w` of several nets on one shared stream.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bracket {
    /// One entry per net, in input order.
    pub per_rho: Vec<BracketEntry>,
    /// `max_ρ t_d(ρ)`.
    pub lower: f64,
    /// `min_ρ t_w(ρ)`.
    pub upper: f64,
}

impl Bracket {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Replays one stream (same key, one window containing every net) against
/// each net.
pub fn bracket_from_nets(nets: &[Net], key: StreamKey, max_lines: u64) -> Result<Bracket> {
    if nets.is_empty() {
        return Err(Error::usage("rho_list", "empty"));
    }
    let refs: Vec<&Net> = nets.iter().collect();
    let window = enclosing_window(&refs)?;
    let mut per_rho = Vec::with_capacity(nets.len());
    for net in nets {
        let target = CoverTarget::with_window(net.clone(), window.clone())?;
        let r = run_cover(&target, target.stream(key), max_lines)?;
        per_rho.push(BracketEntry {
            rho: net.rho,
            n_points: net.len(),
            t_d: r.t_d,
            t_w: r.t_w,
            lines_used: r.lines_used,
        });
    }
    let lower = per_rho.iter().map(|p| p.t_d).fold(f64::NEG_INFINITY, f64::max);
    let upper = per_rho.iter().map(|p| p.t_w).fold(f64::INFINITY, f64::min);
    Ok(Bracket { per_rho, lower, upper })
}

pub fn bracket_cover_time(spec: &GeometrySpec, rhos: &[f64], k: u32, key: StreamKey, max_lines: u64) -> Result<Bracket> {
    if rhos.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::usage("rho_list", "must be strictly decreasing"));
    }
    let nets: Vec<Net> = rhos.iter().map(|&r| build_net(spec, r, k)).collect::<Result<_>>()?;
    bracket_from_nets(&nets, key, max_lines)
}

/// Which notion of "not yet covered" [`uncovered_set`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UncoveredMode {
    /// Not singularly covered by `(1-ε) γ(ρ)^{-1} log|A^ρ|`.
    Singular,
    /// Not hit by `(1-ε) log|A^ρ|`.
    Plain,
}

pub fn uncovered_threshold(net_size: usize, rho: f64, d: usize, eps: f64, mode: UncoveredMode) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::usage("epsilon", "must lie in (0, 1)"));
    }
    let base = (1.0 - eps) * libm::log(net_size as f64);
    Ok(match mode {
        UncoveredMode::Singular => base / singular_rate(rho, d)?,
        UncoveredMode::Plain => base,
    })
}

/// Indices of net points still uncovered at the threshold time.
pub fn uncovered_set<I>(target: &CoverTarget, eps: f64, mode: UncoveredMode, stream: I) -> Result<Vec<usize>>
where
    I: IntoIterator<Item = TimedLine>,
{
    let net = &target.net;
    let thr = uncovered_threshold(net.len(), net.rho, net.d, eps, mode)?;
    let (hit, singular) = run_cover_until(target, stream, thr);
    let times = match mode {
        UncoveredMode::Singular => singular,
        UncoveredMode::Plain => hit,
    };
    Ok(times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > thr)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GFailure {
    Cardinality,
    Separation,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GMembership {
    pub member: bool,
    pub failures: Vec<GFailure>,
}

/// Whether the subset `k` (indices into `net`) is a good uncovered set:
/// `||K| - N^ε| <= N^{2ε/3}` and pairwise distances at least `N^{1/(2d)}`,
/// where `N = |net|`.
pub fn g_membership(k: &[usize], net: &Net, eps: f64) -> Result<GMembership> {
    if let Some(&bad) = k.iter().find(|&&i| i >= net.len()) {
        return Err(Error::usage("K", alloc::format!("index {bad} is not a net point")));
    }
    let n = net.len() as f64;
    let mut failures = Vec::new();
    let target = libm::pow(n, eps);
    if (k.len() as f64 - target).abs() > libm::pow(n, 2.0 * eps / 3.0) {
        failures.push(GFailure::Cardinality);
    }
    let sep = libm::pow(n, 1.0 / (2.0 * net.d as f64));
    'outer: for a in 0..k.len() {
        for b in 0..a {
            if k[a] == k[b] || dist(net.point(k[a]), net.point(k[b])) < sep {
                failures.push(GFailure::Separation);
                break 'outer;
            }
        }
    }
    Ok(GMembership {
        member: failures.is_empty(),
        failures,
    })
}

/// Index form of [`g_membership`] for explicit points.
pub fn g_membership_points(k: &[Vec<f64>], net: &Net, eps: f64) -> Result<GMembership> {
    let idx: Vec<usize> = k
        .iter()
        .map(|p| net.index_of(p).ok_or_else(|| Error::usage("K", "point is not in the net")))
        .collect::<Result<_>>()?;
    g_membership(&idx, net, eps)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DependenceProbe {
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    /// `|P(E1 ∩ E2) - P(E1) P(E2)|`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `4 P(some line within 1 of both sets)`.
    pub bound: f64,
    pub bound_se: f64,
    pub violation: bool,
}

/// Monte Carlo check that "all of `K_i` hit by time `t`" are nearly
/// independent, with dependence bounded by lines reaching both sets.
pub fn pair_dependence_probe(
    k1: &[Vec<f64>],
    k2: &[Vec<f64>],
    t: f64,
    reps: u64,
    key: StreamKey,
) -> Result<DependenceProbe> {
    if reps == 0 {
        return Err(Error::usage("reps", "must be positive"));
    }
    if !(t >= 0.0) {
        return Err(Error::usage("t", "must be nonnegative"));
    }
    let all: Vec<Vec<f64>> = k1.iter().chain(k2).cloned().collect();
    if all.is_empty() {
        return Err(Error::usage("K", "both sets empty"));
    }
    let d = all[0].len();
    if all.iter().any(|p| p.len() != d) {
        return Err(Error::usage("K", "dimension mismatch"));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in &all {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let far = all.iter().map(|p| dist(p, &center)).fold(0.0, f64::max);
    let window = Window::new(center, far * (1.0 + 1e-12) + 1.0)?;

    let (mut n1, mut n2, mut n12, mut nj) = (0u64, 0u64, 0u64, 0u64);
    let mut hit1 = vec![false; k1.len()];
    let mut hit2 = vec![false; k2.len()];
    for rep in 0..reps {
        hit1.iter_mut().for_each(|h| *h = false);
        hit2.iter_mut().for_each(|h| *h = false);
        let mut joint = false;
        for tl in LineStream::new(window.clone(), key.replicate(rep).rng()) {
            if tl.timestamp > t {
                break;
            }
            let mut touch1 = false;
            let mut touch2 = false;
            for (p, h) in k1.iter().zip(hit1.iter_mut()) {
                if tl.line.dist_sq_unchecked(p) <= 1.0 {
                    *h = true;
                    touch1 = true;
                }
            }
            for (p, h) in k2.iter().zip(hit2.iter_mut()) {
                if tl.line.dist_sq_unchecked(p) <= 1.0 {
                    *h = true;
                    touch2 = true;
                }
            }
            joint |= touch1 && touch2;
        }
        let e1 = hit1.iter().all(|&h| h);
        let e2 = hit2.iter().all(|&h| h);
        n1 += e1 as u64;
        n2 += e2 as u64;
        n12 += (e1 && e2) as u64;
        nj += joint as u64;
    }
    let n = reps as f64;
    let (p1, p2, p12, q) = (n1 as f64 / n, n2 as f64 / n, n12 as f64 / n, nj as f64 / n);
    let lhs = (p12 - p1 * p2).abs();
    let lhs_se = libm::sqrt((p12 * (1.0 - p12) + p2 * p2 * p1 * (1.0 - p1) + p1 * p1 * p2 * (1.0 - p2)) / n);
    let bound = 4.0 * q;
    let bound_se = 4.0 * libm::sqrt(q * (1.0 - q) / n);
    let sigma = libm::sqrt(lhs_se * lhs_se + bound_se * bound_se);
    Ok(DependenceProbe {
        p1,
        p2,
        p12,
        lhs,
        lhs_se,
        bound,
        bound_se,
        violation: lhs - bound > 3.0 * sigma,
    })
}
