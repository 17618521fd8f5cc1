//! Numeric evaluation of the analytic bounds on grids.
//!
//! Each family of inequalities is evaluated only where its hypotheses hold;
//! grid points outside them are counted as skipped. A check fails when some
//! in-hypothesis point violates the bound by more than [`TOLERANCE`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::measure::{alpha_ratio, beta_ratio, dim_constants, pair_hit_measure, singular_rate};
use crate::net::Net;
use crate::vecmath::dist;
use crate::Result;

pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub name: String,
    pub evaluated: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Smallest `bound - value` seen (negative = violated).
    pub worst_margin: f64,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            evaluated: 0,
            skipped: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    /// Records `value <= bound` (or `<` when `strict`).
    fn upper(&mut self, value: f64, bound: f64, strict: bool) {
        self.evaluated += 1;
        let margin = bound - value;
        self.worst_margin = self.worst_margin.min(margin);
        let ok = if strict { margin > -TOLERANCE } else { margin >= -TOLERANCE };
        if !ok || margin.is_nan() {
            self.violations += 1;
        }
    }

    fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Grid sizes for [`inequality_suite`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SuiteGrids {
    /// Points per `r`-grid for the small-distance hitting bound.
    pub r_points: usize,
    /// `ρ` values for the β/α bounds.
    pub rho_points: usize,
    /// Largest dyadic exponent tried.
    pub k_max: u32,
    /// `(log b, z)` grid sides for the exponential approximation.
    pub logexp_b_points: usize,
    pub logexp_z_points: usize,
    /// Points for the elementary calculus bounds.
    pub calc_points: usize,
}

impl Default for SuiteGrids {
    fn default() -> Self {
        SuiteGrids {
            r_points: 100,
            rho_points: 60,
            k_max: 12,
            logexp_b_points: 40,
            logexp_z_points: 25,
            calc_points: 10_001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FarDecay {
    pub d: usize,
    /// `min / max` of `r^{d-1} · hit(r)` over `r ∈ [4, 1024]`.
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InequalityReport {
    pub d_list: Vec<usize>,
    pub checks: Vec<CheckResult>,
    pub far_decay: Vec<FarDecay>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

/// `log(1 - x) + x` without cancellation.
fn log1m_plus(x: f64) -> f64 {
    if x > 1e-3 {
        libm::log1p(-x) + x
    } else {
        // -(x²/2 + x³/3 + ...)
        let mut term = x * x;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term > 1e-300 && k < 60.0 {
            sum += term / k;
            term *= x;
            k += 1.0;
        }
        -sum
    }
}

/// `|(1 - a/b)^{b + sign·b^{2/3}} - e^{-a}|` computed in log space.
pub fn logexp_gap(a: f64, log_b: f64, sign: f64) -> f64 {
    let x = a * libm::exp(-log_b);
    let b = libm::exp(log_b);
    let b23 = libm::exp(2.0 * log_b / 3.0);
    // (b ± b^{2/3}) log(1-x) + a = b (log(1-x) + x) ± b^{2/3} log(1-x)
    let delta = b * log1m_plus(x) + sign * b23 * libm::log1p(-x);
    libm::exp(-a) * libm::expm1(delta).abs()
}

/// Runs every family of bounds for each `d` in `d_list`.
pub fn inequality_suite(d_list: &[usize], grids: &SuiteGrids) -> Result<InequalityReport> {
    let mut small = CheckResult::new("small_distance_hit");
    let mut beta = CheckResult::new("beta_bounds");
    let mut alpha = CheckResult::new("alpha_bounds");
    let mut dd = CheckResult::new("d_d_at_most_two");
    let mut far_decay = Vec::new();

    for &d in d_list {
        let consts = dim_constants(d)?;
        let r_max = 2.0 * consts.c_d;
        for r in linspace(0.0, r_max, grids.r_points) {
            small.upper(pair_hit_measure(r, d)?.value, 1.0 - r / 12.0, false);
        }
        // Just outside the range the bound is not claimed.
        small.skip();

        for rho in linspace(0.0, 2.0 / 3.0, grids.rho_points + 2)
            .skip(1)
            .take(grids.rho_points)
        {
            for k in 0..=grids.k_max {
                let scale = libm::ldexp(1.0, k as i32);
                if scale * rho / (1.0 - rho) <= r_max {
                    let b = beta_ratio(rho, k, d)?;
                    beta.upper(1.0 + scale * rho / 12.0, b, true);
                    beta.upper(b, 2.0, true);
                } else {
                    beta.skip();
                }
                if scale * rho <= r_max {
                    let a = alpha_ratio(rho, k, d)?;
                    alpha.upper(1.0 + scale * rho / 12.0, a, false);
                    alpha.upper(a, 2.0, false);
                } else {
                    alpha.skip();
                }
            }
        }

        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut r = 4.0;
        while r <= 1024.0 {
            let v = pair_hit_measure(r, d)?.value * libm::pow(r, (d - 1) as f64);
            lo = lo.min(v);
            hi = hi.max(v);
            r *= 1.25;
        }
        far_decay.push(FarDecay { d, c1: lo, c2: hi });
    }
    for d in 2..=10 {
        dd.upper(dim_constants(d)?.d_d, 2.0, false);
    }

    // With ε = ρ/50 and b = N^ε the size condition ρ log N <= N^{ρ/200}
    // reads 50 log b <= b^{1/4}; z ranges over [-(log b)/4, 12].
    let mut pos = CheckResult::new("logexp_plus");
    let mut neg = CheckResult::new("logexp_minus");
    for log_b in linspace(libm::log(1e4), 600.0, grids.logexp_b_points) {
        let in_hyp = 50.0 * log_b <= libm::exp(log_b / 4.0);
        for z in linspace(-log_b / 4.0, 12.0, grids.logexp_z_points) {
            if !in_hyp {
                pos.skip();
                neg.skip();
                continue;
            }
            let a = libm::exp(-z);
            let rhs = libm::exp(-log_b / 12.0);
            pos.upper(logexp_gap(a, log_b, 1.0), 3.0 * rhs, false);
            neg.upper(logexp_gap(a, log_b, -1.0), rhs, false);
        }
    }

    let mut calc1 = CheckResult::new("log1m_sandwich");
    for x in linspace(0.0, 0.5, grids.calc_points) {
        let l = libm::log1p(-x);
        calc1.upper(-x - x * x, l, false);
        calc1.upper(l, -x, false);
    }
    let mut calc2 = CheckResult::new("one_minus_exp");
    for x in linspace(0.0, 50.0, grids.calc_points) {
        calc2.upper(-libm::expm1(-x), x, false);
    }

    Ok(InequalityReport {
        d_list: d_list.to_vec(),
        checks: alloc::vec![small, beta, alpha, dd, pos, neg, calc1, calc2],
        far_decay,
    })
}

/// Second-moment sum of the uncovered-set size over a concrete net.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairSum {
    pub net_count: usize,
    pub eps: f64,
    /// `Σ_{x≠y} P(x, y both uncovered)` at the threshold time.
    pub sum: f64,
    /// `N^{2ε}`.
    pub main_term: f64,
    /// `(sum - N^{2ε}) · N^ε`, the constant the remainder would need.
    pub observed_constant: f64,
    /// Whether `ρ/1000 < ε < ρ/36`.
    pub eps_in_range: bool,
}

/// Exact evaluation of `Σ_{x≠y} exp(-(1-ε) log N (2 - hit(d(x,y)/(1-ρ))))`.
pub fn pair_sum(net: &Net, eps: f64) -> Result<PairSum> {
    let d = net.d;
    let rho = net.rho;
    singular_rate(rho, d)?;
    let n = net.len();
    let log_n = libm::log(n as f64);
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..i {
            let r = dist(net.point(i), net.point(j));
            // Distances repeat on lattice-like nets; key on rounded bits.
            let key = (r * 1e9).round() as u64;
            let term = match cache.get(&key) {
                Some(&t) => t,
                None => {
                    let h = pair_hit_measure(r / (1.0 - rho), d)?.value;
                    let t = libm::exp(-(1.0 - eps) * log_n * (2.0 - h));
                    cache.insert(key, t);
                    t
                }
            };
            sum += 2.0 * term;
        }
    }
    let main_term = libm::exp(2.0 * eps * log_n);
    Ok(PairSum {
        net_count: n,
        eps,
        sum,
        main_term,
        observed_constant: (sum - main_term) * libm::exp(eps * log_n),
        eps_in_range: rho / 1000.0 < eps && eps < rho / 36.0,
    })
}
