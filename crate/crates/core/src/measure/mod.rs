//! Hitting measures of balls under the invariant line measure, normalized so
//! that lines hitting a unit ball have mass 1.
//!
//! The central quantity is the mass of lines hitting two unit balls whose
//! centers are `r` apart. Conditioning on the line direction `u`, both balls
//! project onto `u^⊥` as unit `(d-1)`-balls at distance `r·sqrt(1 - u₁²)`, and
//! the normalized lens volume is `J_{1 - r²(1-u₁²)/4}(d/2, 1/2)` (two spherical
//! caps). Averaging over `u₁ = sin θ` turns this into a 1-D integral over
//! `θ ∈ [0, π/2]` with weight `cos^(d-2) θ`, with no endpoint singularity
//! left even for `d = 2`.

mod quadrature;
pub mod special;

use alloc::format;
use core::f64::consts::PI;

use crate::lineproc::{sample_line_hitting, Window};
use crate::rng::StreamKey;
use crate::{Error, Result};

pub use quadrature::{integrate, Quadrature};
pub use special::reg_inc_beta;

const QUAD_TOL: f64 = 1e-11;
const QUAD_MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// A hitting-measure value with its provenance.
///
/// `abs_error` is the quadrature error bound or the Monte Carlo standard
/// error; it is zero for closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureValue {
    pub value: f64,
    pub method: Method,
    pub abs_error: f64,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub n_samples: Option<u64>,
}

impl MeasureValue {
    pub fn closed_form(value: f64) -> Self {
        MeasureValue {
            value,
            method: Method::ClosedForm,
            abs_error: 0.0,
            n_samples: None,
        }
    }
}

/// Per-dimension constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimConstants {
    pub d: usize,
    /// `sqrt(1 - 4^(-1/(d-2)))`, with the value 1 for `d = 2`.
    pub c_d: f64,
    /// `c_d / (12 (1 + c_d))`.
    pub c_tilde_d: f64,
    /// Volume of the unit ball in `R^d`.
    pub kappa_d: f64,
    /// `∫₀¹ t^(d/2-1) (1-t)^(-1/2) dt = B(d/2, 1/2)`.
    pub d_d: f64,
}

pub fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::usage("d", "dimension must be at least 2"));
    }
    Ok(())
}

pub fn dim_constants(d: usize) -> Result<DimConstants> {
    check_dim(d)?;
    let c_d = if d == 2 {
        1.0
    } else {
        libm::sqrt(1.0 - libm::pow(4.0, -1.0 / (d - 2) as f64))
    };
    let df = d as f64;
    let kappa_d = libm::exp(0.5 * df * libm::log(PI) - special::ln_gamma(0.5 * df + 1.0));
    Ok(DimConstants {
        d,
        c_d,
        c_tilde_d: c_d / (12.0 * (1.0 + c_d)),
        kappa_d,
        d_d: special::beta(0.5 * df, 0.5),
    })
}

/// Rate `(1-ρ)^(d-1)` at which a fixed ball `B(x, ρ)` becomes contained in a
/// single arriving cylinder; equals the mass of lines hitting `B(x, 1-ρ)`.
pub fn singular_rate(rho: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    crate::lineproc::check_margin(rho)?;
    Ok(libm::pow(1.0 - rho, (d - 1) as f64))
}

/// Mass of the lines hitting both `B(o, 1)` and `B(r·e₁, 1)`.
pub fn pair_hit_measure(r: f64, d: usize) -> Result<MeasureValue> {
    check_dim(d)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::usage("r", "distance must be finite and nonnegative"));
    }
    if r == 0.0 {
        return Ok(MeasureValue::closed_form(1.0));
    }
    let a = 0.5 * d as f64;
    let power = (d - 2) as i32;
    // Projected balls are disjoint when r cos θ > 2.
    let lo = if r > 2.0 { libm::acos(2.0 / r) } else { 0.0 };
    let integrand = |theta: f64| {
        let c = libm::cos(theta);
        let s = r * r * c * c / 4.0;
        if s >= 1.0 {
            return 0.0;
        }
        let j = reg_inc_beta(1.0 - s, a, 0.5).expect("argument in [0,1]");
        j * powi(c, power)
    };
    let q = integrate(integrand, lo, 0.5 * PI, QUAD_TOL, QUAD_MAX_INTERVALS);
    // ∫₀^{π/2} cos^(d-2) θ dθ = B((d-1)/2, 1/2) / 2
    let norm = 0.5 * special::beta(0.5 * (d as f64 - 1.0), 0.5);
    Ok(MeasureValue {
        value: (q.value / norm).clamp(0.0, 1.0),
        method: Method::Quadrature,
        abs_error: q.abs_error / norm,
        n_samples: None,
    })
}

fn powi(x: f64, n: i32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

/// Mass of lines hitting `B(x, 1-ρ) ∪ B(y, 1-ρ)` with `|x - y| = r`, by
/// scaling to unit balls: `γ(ρ) · (2 - pair_hit_measure(r / (1-ρ)))`.
pub fn pair_union_measure(r: f64, d: usize, rho: f64) -> Result<MeasureValue> {
    let gamma = singular_rate(rho, d)?;
    let hit = pair_hit_measure(r / (1.0 - rho), d)?;
    Ok(MeasureValue {
        value: gamma * (2.0 - hit.value),
        method: Method::Quadrature,
        abs_error: gamma * hit.abs_error,
        n_samples: None,
    })
}

fn check_open_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::usage("rho", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Normalized union mass for `(1-ρ)`-balls at distance `2^k ρ`:
/// `2 - pair_hit_measure(2^k ρ / (1-ρ))`.
pub fn beta_ratio(rho: f64, k: u32, d: usize) -> Result<f64> {
    check_open_rho(rho)?;
    let r = libm::ldexp(rho, k as i32) / (1.0 - rho);
    Ok(2.0 - pair_hit_measure(r, d)?.value)
}

/// Union mass for unit balls at distance `2^k ρ`: `2 - pair_hit_measure(2^k ρ)`.
pub fn alpha_ratio(rho: f64, k: u32, d: usize) -> Result<f64> {
    check_open_rho(rho)?;
    Ok(2.0 - pair_hit_measure(libm::ldexp(rho, k as i32), d)?.value)
}

/// Line counts from one Monte Carlo run over pairs of unit balls.
#[derive(Debug, Clone, Copy)]
struct PairCounts {
    both: u64,
    either: u64,
    n: u64,
    intensity: f64,
}

fn mc_pair_counts(r: f64, d: usize, n_samples: u64, key: StreamKey) -> Result<PairCounts> {
    check_dim(d)?;
    if n_samples == 0 {
        return Err(Error::usage("n_samples", "need at least one sample"));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::usage("r", format!("distance must be finite and nonnegative, got {r}")));
    }
    let mut mid = alloc::vec![0.0; d];
    mid[0] = 0.5 * r;
    let window = Window::new(mid, 0.5 * r + 1.0)?;
    let mut far = alloc::vec![0.0; d];
    far[0] = r;
    let origin = alloc::vec![0.0; d];
    let mut rng = key.rng();
    let (mut both, mut either) = (0u64, 0u64);
    for _ in 0..n_samples {
        let l = sample_line_hitting(&window, &mut rng);
        let a = l.dist_sq_unchecked(&origin) <= 1.0;
        let b = l.dist_sq_unchecked(&far) <= 1.0;
        both += (a && b) as u64;
        either += (a || b) as u64;
    }
    Ok(PairCounts {
        both,
        either,
        n: n_samples,
        intensity: window.intensity(),
    })
}

fn binomial_estimate(hits: u64, n: u64, intensity: f64) -> MeasureValue {
    let p = hits as f64 / n as f64;
    MeasureValue {
        value: intensity * p,
        method: Method::MonteCarlo,
        abs_error: intensity * libm::sqrt(p * (1.0 - p) / n as f64),
        n_samples: Some(n),
    }
}

/// Monte Carlo estimate of [`pair_hit_measure`]: lines are sampled in the
/// window `B(r/2·e₁, r/2 + 1)` that contains both balls, and the fraction
/// hitting both is scaled by the window's intensity.
pub fn mc_pair_oracle(r: f64, d: usize, n_samples: u64, key: StreamKey) -> Result<MeasureValue> {
    let c = mc_pair_counts(r, d, n_samples, key)?;
    Ok(binomial_estimate(c.both, c.n, c.intensity))
}

/// Monte Carlo estimate of the mass of lines hitting either unit ball.
pub fn mc_union_oracle(r: f64, d: usize, n_samples: u64, key: StreamKey) -> Result<MeasureValue> {
    let c = mc_pair_counts(r, d, n_samples, key)?;
    Ok(binomial_estimate(c.either, c.n, c.intensity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Purpose;
    use approx::assert_abs_diff_eq;
    use alloc::vec::Vec;

    fn key(rep: u64) -> StreamKey {
        StreamKey::new(5, Purpose::Oracle, rep)
    }

    #[test]
    fn singular_rate_values() {
        assert_eq!(singular_rate(0.0, 4).unwrap(), 1.0);
        assert_abs_diff_eq!(singular_rate(0.1, 3).unwrap(), 0.81, epsilon = 1e-15);
        assert_eq!(singular_rate(0.5, 2).unwrap(), 0.5);
        assert!(singular_rate(1.0, 2).is_err());
        assert!(singular_rate(0.1, 1).is_err());
    }

    #[test]
    fn constants() {
        let c2 = dim_constants(2).unwrap();
        assert_eq!(c2.c_d, 1.0);
        assert_abs_diff_eq!(c2.kappa_d, PI, epsilon = 1e-14);
        assert_abs_diff_eq!(c2.d_d, 2.0, epsilon = 1e-13);
        let c3 = dim_constants(3).unwrap();
        assert_abs_diff_eq!(c3.c_d, libm::sqrt(3.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c3.c_tilde_d, 0.038_675_134_594_812_88, epsilon = 1e-12);
        assert_abs_diff_eq!(c3.kappa_d, 4.0 * PI / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(c3.d_d, PI / 2.0, epsilon = 1e-13);
        for d in 2..=12 {
            let c = dim_constants(d).unwrap();
            assert!(c.c_d > 0.0 && c.c_d <= 1.0);
            assert!(c.d_d <= 2.0 + 1e-12);
        }
        assert!(dim_constants(1).is_err());
    }

    #[test]
    fn pair_hit_at_zero_is_one() {
        for d in 2..6 {
            assert_eq!(pair_hit_measure(0.0, d).unwrap().value, 1.0);
            // continuity at 0
            assert_abs_diff_eq!(pair_hit_measure(1e-9, d).unwrap().value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn pair_hit_d2_closed_form() {
        // d = 2: J_{1-s}(1, 1/2) = 1 - sqrt(s) with sqrt(s) = r|cos θ|/2, so for
        // r <= 2 the measure is 1 - (r/2)·E|cos θ| = 1 - r/π.
        for i in 0..=20 {
            let r = 2.0 * i as f64 / 20.0;
            let v = pair_hit_measure(r, 2).unwrap();
            assert_abs_diff_eq!(v.value, 1.0 - r / PI, epsilon = 1e-9);
            assert!(v.abs_error <= 1e-8);
        }
    }

    #[test]
    fn pair_hit_d2_far_closed_form() {
        // For r > 2 in the plane: (2/π)·∫_{θ*}^{π/2} (1 - r cos θ/2) dθ with
        // cos θ* = 2/r, i.e. (2/π)[(π/2 - θ*) - (r/2)(1 - sin θ*)].
        for r in [2.5, 4.0, 10.0, 100.0] {
            let ts = libm::acos(2.0 / r);
            let want = 2.0 / PI * ((0.5 * PI - ts) - 0.5 * r * (1.0 - libm::sin(ts)));
            assert_abs_diff_eq!(pair_hit_measure(r, 2).unwrap().value, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn pair_hit_nonincreasing() {
        for d in 2..=5 {
            let vals: Vec<f64> = (0..=300)
                .map(|i| pair_hit_measure(i as f64 * 0.05, d).unwrap().value)
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "d={d}: {} > {}", w[1], w[0]);
            }
        }
    }

    #[test]
    fn small_distance_linear_bound() {
        for d in 2..=5 {
            let cd = dim_constants(d).unwrap().c_d;
            for i in 0..100 {
                let r = 2.0 * cd * i as f64 / 99.0;
                let v = pair_hit_measure(r, d).unwrap().value;
                assert!(v <= 1.0 - r / 12.0 + 1e-6, "d={d}, r={r}: {v}");
            }
        }
    }

    #[test]
    fn union_scaling_identity() {
        for d in 2..=4 {
            for &rho in &[0.05, 0.2, 0.5] {
                for &r in &[0.0, 0.3, 1.0, 3.0] {
                    let g = singular_rate(rho, d).unwrap();
                    let u = pair_union_measure(r, d, rho).unwrap().value;
                    let via_hit = g * (2.0 - pair_hit_measure(r / (1.0 - rho), d).unwrap().value);
                    assert_abs_diff_eq!(u, via_hit, epsilon = 1e-12);
                }
            }
        }
        assert_abs_diff_eq!(pair_union_measure(0.0, 3, 0.0).unwrap().value, 1.0, epsilon = 1e-15);
        // far apart: hitting sets almost disjoint
        let far = pair_union_measure(1e6, 3, 0.2).unwrap().value;
        assert_abs_diff_eq!(far, 2.0 * 0.64, epsilon = 1e-6);
        assert!(pair_union_measure(1.0, 2, 1.0).is_err());
    }

    #[test]
    fn beta_alpha_relations() {
        for d in 2..=4 {
            let cd = dim_constants(d).unwrap().c_d;
            for &rho in &[0.01, 0.05, 0.1, 0.3, 0.6] {
                for k in 0..6 {
                    let b = beta_ratio(rho, k, d).unwrap();
                    let a = alpha_ratio(rho, k, d).unwrap();
                    assert!(a <= b + 1e-9);
                    let g = singular_rate(rho, d).unwrap();
                    let via_union = pair_union_measure(libm::ldexp(rho, k as i32), d, rho).unwrap().value / g;
                    assert_abs_diff_eq!(b, via_union, epsilon = 1e-8);
                    let scale = libm::ldexp(1.0, k as i32) / 12.0 * rho;
                    if libm::ldexp(rho, k as i32) / (1.0 - rho) <= 2.0 * cd {
                        assert!(1.0 + scale < b && b < 2.0);
                    }
                    if libm::ldexp(rho, k as i32) <= 2.0 * cd {
                        assert!(1.0 + scale <= a + 1e-9 && a <= 2.0);
                    }
                }
            }
        }
        assert_abs_diff_eq!(beta_ratio(1e-9, 0, 3).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha_ratio(1e-9, 0, 3).unwrap(), 1.0, epsilon = 1e-6);
        assert!(beta_ratio(0.0, 0, 2).is_err());
        assert!(alpha_ratio(1.0, 0, 2).is_err());
    }

    #[test]
    fn oracle_at_zero_distance() {
        let v = mc_pair_oracle(0.0, 3, 10_000, key(0)).unwrap();
        assert_eq!(v.value, 1.0);
        assert_eq!(v.method, Method::MonteCarlo);
    }

    #[test]
    fn oracle_agrees_with_quadrature_d3_r6() {
        let q = pair_hit_measure(6.0, 3).unwrap();
        let mc = mc_pair_oracle(6.0, 3, 1_000_000, key(1)).unwrap();
        assert!((q.value - mc.value).abs() < 3.0 * mc.abs_error, "{q:?} vs {mc:?}");
    }

    #[test]
    fn union_oracle_d2_r1() {
        let want = pair_union_measure(1.0, 2, 0.0).unwrap().value;
        let mc = mc_union_oracle(1.0, 2, 200_000, key(2)).unwrap();
        assert_abs_diff_eq!(want, 2.0 - pair_hit_measure(1.0, 2).unwrap().value, epsilon = 1e-15);
        assert!((want - mc.value).abs() < 3.0 * mc.abs_error, "{want} vs {mc:?}");
    }

    #[test]
    fn far_decay_window() {
        // r^(d-1)·μ stays within a fixed positive window for r ≥ 4.
        for d in 2..=4 {
            let scaled: Vec<f64> = [4.0, 8.0, 16.0, 32.0]
                .iter()
                .map(|&r: &f64| libm::pow(r, (d - 1) as f64) * pair_hit_measure(r, d).unwrap().value)
                .collect();
            let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = scaled.iter().cloned().fold(0.0, f64::max);
            assert!(lo > 0.0 && hi / lo < 2.0, "d={d}: {scaled:?}");
        }
    }
}
