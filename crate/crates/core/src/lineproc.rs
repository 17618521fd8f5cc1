//! Affine lines in `R^d` and exact sampling of the time-stamped Poisson line
//! process restricted to a ball window.
//!
//! A line is stored as a canonical unit direction `u` plus the offset `y`,
//! the unique point of the line orthogonal to `u`. The invariant measure on
//! lines is normalized so that the set of lines hitting the unit ball has
//! mass 1; lines hitting a ball of radius `R` then have mass `R^(d-1)`, which
//! is the arrival rate of [`LineStream`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::vecmath::{dot, norm_sq};
use crate::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

/// Unit vector identified with its antipode.
///
/// The stored representative has its first coordinate of magnitude above
/// `1e-12` positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes and canonicalizes `v`.
    pub fn new(mut v: Vec<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::usage("d", "dimension must be at least 2"));
        }
        let n = libm::sqrt(norm_sq(&v));
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::usage("direction", "zero or non-finite vector"));
        }
        v.iter_mut().for_each(|x| *x /= n);
        Ok(Self::canonical(v))
    }

    /// Canonical coordinate axis `e_i` (0-based).
    pub fn axis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::usage("axis", "index out of range"));
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Self::new(v)
    }

    fn canonical(mut v: Vec<f64>) -> Self {
        if let Some(first) = v.iter().find(|x| x.abs() > UNIT_TOL) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Direction(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Affine line `{offset + s·dir : s ∈ R}` with `offset ⟂ dir`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Line {
    dir: Direction,
    offset: Vec<f64>,
}

impl Line {
    /// The line through `point` with direction `dir`.
    pub fn through(dir: Direction, point: &[f64]) -> Result<Self> {
        if point.len() != dir.dim() {
            return Err(Error::usage("point", "dimension mismatch with direction"));
        }
        let u = dir.as_slice();
        let s = dot(point, u);
        let offset: Vec<f64> = point.iter().zip(u).map(|(p, ui)| p - s * ui).collect();
        debug_assert!(dot(&offset, u).abs() <= ORTHO_TOL * (1.0 + libm::sqrt(norm_sq(point))));
        Ok(Line { dir, offset })
    }

    pub fn dir(&self) -> &Direction {
        &self.dir
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Squared distance with no dimension check. Hot path of the cover engines.
    #[inline]
    pub(crate) fn dist_sq_unchecked(&self, x: &[f64]) -> f64 {
        let u = self.dir.as_slice();
        let mut along = 0.0;
        let mut total = 0.0;
        for i in 0..x.len() {
            let w = x[i] - self.offset[i];
            along += w * u[i];
            total += w * w;
        }
        (total - along * along).max(0.0)
    }

    /// Point of the line at arc-length parameter `s`.
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        self.offset
            .iter()
            .zip(self.dir.as_slice())
            .map(|(o, u)| o + s * u)
            .collect()
    }
}

/// A line together with its arrival time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimedLine {
    pub line: Line,
    pub timestamp: f64,
}

/// Ball `B(center, radius)` the process is restricted to.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    center: Vec<f64>,
    radius: f64,
}

impl Window {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::usage("d", "dimension must be at least 2"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::usage("radius", "window radius must be positive and finite"));
        }
        Ok(Window { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Measure of the set of lines hitting the window, `radius^(d-1)`.
    pub fn intensity(&self) -> f64 {
        libm::pow(self.radius, (self.dim() - 1) as f64)
    }
}

/// Euclidean distance from `x` to `line`.
pub fn distance_point_line(x: &[f64], line: &Line) -> Result<f64> {
    if x.len() != line.dim() {
        return Err(Error::usage("point", "dimension mismatch with line"));
    }
    Ok(libm::sqrt(line.dist_sq_unchecked(x)))
}

/// Whether the radius-1 cylinder around `line` contains `B(x, margin)`,
/// i.e. `d(x, line) <= 1 - margin`. The cylinder is closed.
pub fn covers(line: &Line, x: &[f64], margin: f64) -> Result<bool> {
    check_margin(margin)?;
    Ok(distance_point_line(x, line)? <= 1.0 - margin)
}

pub(crate) fn check_margin(margin: f64) -> Result<()> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::usage("rho", "must lie in [0, 1)"));
    }
    Ok(())
}

/// `d - 1` orthonormal vectors spanning `u^⊥`.
///
/// Columns of the Householder reflection exchanging `e_d` and `±u`; the sign
/// is chosen so the reflection vector `e_d ∓ u` has squared norm at least 2,
/// which also covers `u = ±e_d` without a special case in the arithmetic.
pub fn complement_basis(u: &Direction) -> Vec<Vec<f64>> {
    let u = u.as_slice();
    let d = u.len();
    let last = d - 1;
    // v = e_d + u when u_d >= 0, else e_d - u.
    let sign = if u[last] >= 0.0 { 1.0 } else { -1.0 };
    let mut v: Vec<f64> = u.iter().map(|x| sign * x).collect();
    v[last] += 1.0;
    let vv = norm_sq(&v);
    (0..last)
        .map(|j| {
            // H e_j = e_j - 2 v v_j / |v|^2
            let scale = 2.0 * v[j] / vv;
            let mut col: Vec<f64> = v.iter().map(|vi| -scale * vi).collect();
            col[j] += 1.0;
            col
        })
        .collect()
}

/// Uniform direction on the sphere from a normalized Gaussian vector.
pub fn sample_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Direction {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if norm_sq(&v) > 1e-300 {
            return Direction::new(v).expect("nonzero gaussian vector");
        }
    }
}

/// Line drawn from the invariant measure conditioned on hitting `window`.
///
/// Direction uniform; offset = projection of the window center onto `u^⊥`
/// plus a uniform point of the `(d-1)`-ball of radius `R` in `u^⊥`. The
/// projection of `B(c, R)` onto `u^⊥` is exactly that ball, so no rejection
/// step is involved.
pub fn sample_line_hitting<R: Rng + ?Sized>(window: &Window, rng: &mut R) -> Line {
    let d = window.dim();
    let dir = sample_direction(d, rng);
    let u = dir.as_slice();
    // Isotropic Gaussian projected onto u^⊥ is isotropic in u^⊥.
    let offset_dir = loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let s = dot(&g, u);
        let p: Vec<f64> = g.iter().zip(u).map(|(gi, ui)| gi - s * ui).collect();
        let n2 = norm_sq(&p);
        if n2 > 1e-300 {
            let n = libm::sqrt(n2);
            break p.into_iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let radial: f64 = rng.random::<f64>();
    let r = window.radius * libm::pow(radial, 1.0 / (d - 1) as f64);
    let c = window.center();
    let sc = dot(c, u);
    let offset = (0..d).map(|i| c[i] - sc * u[i] + r * offset_dir[i]).collect();
    Line { dir, offset }
}

/// Lazy, unbounded stream of timed lines hitting a window.
///
/// Inter-arrival times are i.i.d. exponential with rate
/// [`Window::intensity`]; lines are i.i.d. from [`sample_line_hitting`].
#[derive(Debug, Clone)]
pub struct LineStream<R> {
    window: Window,
    rng: R,
    clock: f64,
    gaps: Exp<f64>,
}

impl<R: Rng> LineStream<R> {
    pub fn new(window: Window, rng: R) -> Self {
        let gaps = Exp::new(window.intensity()).expect("positive intensity");
        LineStream {
            window,
            rng,
            clock: 0.0,
            gaps,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
}

impl<R: Rng> Iterator for LineStream<R> {
    type Item = TimedLine;

    fn next(&mut self) -> Option<TimedLine> {
        let next = loop {
            let t = self.clock + self.gaps.sample(&mut self.rng);
            if t > self.clock {
                break t;
            }
        };
        self.clock = next;
        let line = sample_line_hitting(&self.window, &mut self.rng);
        Some(TimedLine {
            line,
            timestamp: next,
        })
    }
}
