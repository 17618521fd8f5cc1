//! Hypothesis checks on `(ρ, d, |A^ρ|)` and the `ρ_n` schedule.

use crate::measure::{dim_constants, DimConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RhoSchedule {
    pub rho: f64,
    pub d_valid: bool,
}

/// `ρ = D / log(a1_count)`; the constant is admissible when `D >= 1` and
/// `D e^{-D/200} <= 1/2`.
pub fn rho_schedule(a1_count: u64, big_d: f64) -> Result<RhoSchedule> {
    if a1_count < 2 {
        return Err(Error::usage("A1_count", "need at least 2 points at unit scale"));
    }
    if !big_d.is_finite() || big_d <= 0.0 {
        return Err(Error::usage("D", "must be positive and finite"));
    }
    Ok(RhoSchedule {
        rho: big_d / libm::log(a1_count as f64),
        d_valid: big_d >= 1.0 && big_d * libm::exp(-big_d / 200.0) <= 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionInputs {
    pub rho: f64,
    pub d: usize,
    pub net_count: u64,
    pub c_d: f64,
    pub c_tilde_d: f64,
}

/// The five size/scale conditions. Each margin is `rhs - lhs` in the
/// direction where nonnegative means satisfied (strictly positive for the
/// strict ones).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssumptionReport {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
    pub a5: bool,
    pub inputs: AssumptionInputs,
    pub margins: [f64; 5],
}

impl AssumptionReport {
    pub fn all(&self) -> bool {
        self.a1 && self.a2 && self.a3 && self.a4 && self.a5
    }
}

/// Evaluates
/// 1. `0 < ρ < min((d-1)/(6d), C_d/5)`
/// 2. `N^{1/(2d)} > 4`
/// 3. `ρ log N <= N^{ρ/200}`
/// 4. `N^{ρ/200} >= 2`
/// 5. `ρ^{-d} (log N)^d <= N^{C̃_d/2}`
pub fn check_assumptions(rho: f64, d: usize, net_count: u64) -> Result<AssumptionReport> {
    let DimConstants { c_d, c_tilde_d, .. } = dim_constants(d)?;
    let df = d as f64;
    let n = net_count as f64;
    let log_n = libm::log(n);

    let a1_rhs = ((df - 1.0) / (6.0 * df)).min(c_d / 5.0);
    let a2_lhs = libm::pow(n, 1.0 / (2.0 * df));
    let growth = libm::pow(n, rho / 200.0);
    let a3_lhs = rho * log_n;
    let a5_lhs = libm::pow(rho, -df) * libm::pow(log_n, df);
    let a5_rhs = libm::pow(n, c_tilde_d / 2.0);

    Ok(AssumptionReport {
        a1: 0.0 < rho && rho < a1_rhs,
        a2: a2_lhs > 4.0,
        a3: a3_lhs <= growth,
        a4: growth >= 2.0,
        a5: a5_lhs <= a5_rhs,
        inputs: AssumptionInputs {
            rho,
            d,
            net_count,
            c_d,
            c_tilde_d,
        },
        margins: [a1_rhs - rho, a2_lhs - 4.0, growth - a3_lhs, growth - 2.0, a5_rhs - a5_lhs],
    })
}
