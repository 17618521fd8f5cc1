//! Monte Carlo experiments for the cover-time limit laws.
//!
//! All experiments take an [`Executor`] for the replicate loop. Replicate
//! `i` at size `n` always uses the line stream keyed by `(seed, n, i)`, so
//! results do not depend on how the executor schedules work.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cover::{g_membership, run_cover_seeded, uncovered_set, CoverTarget, UncoveredMode};
use crate::measure::singular_rate;
use crate::net::{build_net, net_count, GeometrySpec, Net};
use crate::verify::assumptions::{check_assumptions, rho_schedule, AssumptionReport};
use crate::verify::stats::{gumbel_cdf, ks_distance, Ecdf};
use crate::{Error, Executor, Purpose, Result, StreamKey};

/// A sequence of sets `A_n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    /// `[0, n-1]^d ∩ Z^d`.
    Grid { d: usize },
    /// `n · A`.
    Dilate(GeometrySpec),
}

impl Family {
    pub fn at(&self, n: u32) -> GeometrySpec {
        match self {
            Family::Grid { d } => GeometrySpec::grid(n as usize, *d),
            Family::Dilate(spec) => spec.clone().scaled(n as f64),
        }
    }
}

fn replicate_key(seed: u64, n: u32, rep: usize) -> StreamKey {
    StreamKey::new(seed, Purpose::Lines, ((n as u64) << 32) | rep as u64)
}

/// `(t_d, t_w, lines)` for `reps` independent replicates on one net.
pub fn cover_samples<E: Executor>(
    net: &Net,
    reps: usize,
    seed: u64,
    n: u32,
    max_lines: u64,
    exec: &E,
) -> Result<Vec<(f64, f64, u64)>> {
    let target = CoverTarget::new(net.clone())?;
    exec.map(reps, |rep| {
        run_cover_seeded(&target, replicate_key(seed, n, rep), max_lines).map(|r| (r.t_d, r.t_w, r.lines_used))
    })
    .into_iter()
    .collect()
}

fn check_n_list(n_list: &[u32]) -> Result<()> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::usage("n_list", "need positive sizes"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("n_list", "must be strictly increasing"));
    }
    Ok(())
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::usage("reps", "must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GumbelRow {
    pub n: u32,
    pub net_count: usize,
    /// `t_d - log N` per replicate.
    pub centered_td: Vec<f64>,
    /// `γ(ρ) t_w - log N` per replicate.
    pub centered_tw: Vec<f64>,
    pub ks_td: f64,
    pub ks_tw: f64,
    /// `N^{-ρ/600}`, the rate in the finite-size error bound.
    pub error_exponent: f64,
    pub mean_lines: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GumbelReport {
    pub rho: f64,
    pub k: u32,
    pub reps: usize,
    pub seed: u64,
    /// Whether `ρ` lies in the admissible range; the experiment runs either way.
    pub rho_admissible: bool,
    pub rows: Vec<GumbelRow>,
}

impl GumbelReport {
    /// KS of the centred `t_d` strictly decreasing along `n_list`.
    pub fn ks_td_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ks_td < w[0].ks_td)
    }
}

pub fn gumbel_experiment<E: Executor>(
    family: &Family,
    rho: f64,
    k: u32,
    n_list: &[u32],
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<GumbelReport> {
    check_n_list(n_list)?;
    check_reps(reps)?;
    let mut rows = Vec::with_capacity(n_list.len());
    let mut d = 0;
    for &n in n_list {
        let net = build_net(&family.at(n), rho, k)?;
        d = net.d;
        let gamma = singular_rate(rho, d)?;
        let log_n = libm::log(net.len() as f64);
        let samples = cover_samples(&net, reps, seed, n, crate::cover::DEFAULT_MAX_LINES, exec)?;
        let centered_td: Vec<f64> = samples.iter().map(|s| s.0 - log_n).collect();
        let centered_tw: Vec<f64> = samples.iter().map(|s| gamma * s.1 - log_n).collect();
        rows.push(GumbelRow {
            n,
            net_count: net.len(),
            ks_td: ks_distance(&Ecdf::new(centered_td.clone())?, gumbel_cdf),
            ks_tw: ks_distance(&Ecdf::new(centered_tw.clone())?, gumbel_cdf),
            centered_td,
            centered_tw,
            error_exponent: libm::pow(net.len() as f64, -rho / 600.0),
            mean_lines: samples.iter().map(|s| s.2 as f64).sum::<f64>() / reps as f64,
        });
    }
    Ok(GumbelReport {
        rho,
        k,
        reps,
        seed,
        rho_admissible: check_assumptions(rho, d, 2)?.a1,
        rows,
    })
}

/// Five-number band of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Band {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Band {
    pub fn of(e: &Ecdf) -> Self {
        Band {
            q05: e.quantile(0.05),
            q25: e.quantile(0.25),
            q50: e.quantile(0.5),
            q75: e.quantile(0.75),
            q95: e.quantile(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TightnessRow {
    pub n: u32,
    pub unit_count: usize,
    pub rho: f64,
    pub schedule_valid: bool,
    pub net_count: usize,
    pub assumptions: AssumptionReport,
    /// `dim (log n + log log n)`.
    pub centering: f64,
    pub t_d: Vec<f64>,
    pub t_w: Vec<f64>,
    pub band_td: Band,
    pub band_tw: Band,
    /// Medians under the `dim · log n` centring.
    pub control_median_td: f64,
    pub control_median_tw: f64,
    /// `P(t - ᾱ log n <= 0)` per bracket end.
    pub alpha_scan_td: f64,
    pub alpha_scan_tw: f64,
    /// KS to Gumbel of `t - centering - log c̃_A`, when `c_A` is given.
    pub conjecture_ks_td: Option<f64>,
    pub conjecture_ks_tw: Option<f64>,
}

/// Change of one band edge across the `n` range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Drift {
    pub label: String,
    pub series: Vec<f64>,
    /// Last minus first.
    pub drift: f64,
    /// Whether the series is monotone in `n`.
    pub monotone: bool,
}

impl Drift {
    fn new(label: &str, series: Vec<f64>) -> Self {
        let up = series.windows(2).all(|w| w[1] >= w[0]);
        let down = series.windows(2).all(|w| w[1] <= w[0]);
        Drift {
            label: label.into(),
            drift: series.last().copied().unwrap_or(0.0) - series.first().copied().unwrap_or(0.0),
            monotone: up || down,
            series,
        }
    }

    /// A monotone change larger than `limit` in absolute value.
    pub fn exceeds(&self, limit: f64) -> bool {
        self.monotone && self.drift.abs() > limit
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TightnessReport {
    pub dim: f64,
    pub c_a: Option<f64>,
    pub big_d: f64,
    pub k: u32,
    pub reps: usize,
    pub seed: u64,
    pub alpha_bar: f64,
    pub rows: Vec<TightnessRow>,
    /// q05/q95 of both bracket ends.
    pub band_drifts: Vec<Drift>,
    /// Median drift under the `dim · log n` centring, per bracket end.
    pub control_drift_td: f64,
    pub control_drift_tw: f64,
    /// `dim (log log n_last - log log n_first)`.
    pub control_expected: f64,
    /// Overall spread `max q95 - min q05` per bracket end.
    pub band_width_td: f64,
    pub band_width_tw: f64,
}

impl TightnessReport {
    pub fn max_band_drift(&self) -> f64 {
        self.band_drifts
            .iter()
            .filter(|d| d.monotone)
            .map(|d| d.drift.abs())
            .fold(0.0, f64::max)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn tightness_experiment<E: Executor>(
    spec: &GeometrySpec,
    dim: f64,
    c_a: Option<f64>,
    big_d: f64,
    n_list: &[u32],
    reps: usize,
    k: u32,
    seed: u64,
    exec: &E,
) -> Result<TightnessReport> {
    check_n_list(n_list)?;
    check_reps(reps)?;
    if !(dim > 0.0) {
        return Err(Error::usage("dim", "must be positive"));
    }
    if let Some(c) = c_a {
        if !(c > 0.0) {
            return Err(Error::usage("c_a", "must be positive"));
        }
    }
    if n_list[0] < 2 {
        return Err(Error::usage("n_list", "sizes must be at least 2 so that log log n is defined"));
    }
    let alpha_bar = dim + 1.0;
    let log_c_tilde = c_a.map(|c| dim * libm::log(dim) + libm::log(c));
    let family = Family::Dilate(spec.clone());
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let set = family.at(n);
        let unit_count = net_count(&set, 1.0, k)?;
        let sched = rho_schedule(unit_count as u64, big_d)?;
        if sched.rho >= 1.0 {
            return Err(Error::usage("D", "schedule gives rho >= 1; use a smaller D or larger n"));
        }
        let net = build_net(&set, sched.rho, k)?;
        let samples = cover_samples(&net, reps, seed, n, crate::cover::DEFAULT_MAX_LINES, exec)?;
        let ln = libm::log(n as f64);
        let centering = dim * (ln + libm::log(ln));
        let td: Vec<f64> = samples.iter().map(|s| s.0 - centering).collect();
        let tw: Vec<f64> = samples.iter().map(|s| s.1 - centering).collect();
        let etd = Ecdf::new(td.clone())?;
        let etw = Ecdf::new(tw.clone())?;
        let shift = dim * libm::log(ln);
        let frac_below = |v: &[(f64, f64, u64)], pick: fn(&(f64, f64, u64)) -> f64| {
            v.iter().filter(|s| pick(s) - alpha_bar * ln <= 0.0).count() as f64 / reps as f64
        };
        let conj = |e: &Ecdf| {
            log_c_tilde.map(|c| ks_distance(e, |x| gumbel_cdf(x - c)))
        };
        rows.push(TightnessRow {
            n,
            unit_count,
            rho: sched.rho,
            schedule_valid: sched.d_valid,
            net_count: net.len(),
            assumptions: check_assumptions(sched.rho, net.d, net.len() as u64)?,
            centering,
            band_td: Band::of(&etd),
            band_tw: Band::of(&etw),
            control_median_td: etd.quantile(0.5) + shift,
            control_median_tw: etw.quantile(0.5) + shift,
            alpha_scan_td: frac_below(&samples, |s| s.0),
            alpha_scan_tw: frac_below(&samples, |s| s.1),
            conjecture_ks_td: conj(&etd),
            conjecture_ks_tw: conj(&etw),
            t_d: td,
            t_w: tw,
        });
    }
    let series = |f: fn(&TightnessRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let band_drifts = alloc::vec![
        Drift::new("t_d q05", series(|r| r.band_td.q05)),
        Drift::new("t_d q95", series(|r| r.band_td.q95)),
        Drift::new("t_w q05", series(|r| r.band_tw.q05)),
        Drift::new("t_w q95", series(|r| r.band_tw.q95)),
    ];
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let lln = |n: u32| libm::log(libm::log(n as f64));
    let width = |lo: fn(&TightnessRow) -> f64, hi: fn(&TightnessRow) -> f64| {
        rows.iter().map(hi).fold(f64::NEG_INFINITY, f64::max) - rows.iter().map(lo).fold(f64::INFINITY, f64::min)
    };
    Ok(TightnessReport {
        dim,
        c_a,
        big_d,
        k,
        reps,
        seed,
        alpha_bar,
        band_drifts,
        control_drift_td: last.control_median_td - first.control_median_td,
        control_drift_tw: last.control_median_tw - first.control_median_tw,
        control_expected: dim * (lln(last.n) - lln(first.n)),
        band_width_td: width(|r| r.band_td.q05, |r| r.band_td.q95),
        band_width_tw: width(|r| r.band_tw.q05, |r| r.band_tw.q95),
        rows,
    })
}

/// KS distance of single-point `t_w` samples to `Exp(γ(ρ))`.
pub fn singular_law<E: Executor>(d: usize, rho: f64, reps: usize, seed: u64, exec: &E) -> Result<f64> {
    check_reps(reps)?;
    let gamma = singular_rate(rho, d)?;
    let net = Net::from_points(alloc::vec![alloc::vec![0.0; d]], rho)?;
    let samples = cover_samples(&net, reps, seed, 1, crate::cover::DEFAULT_MAX_LINES, exec)?;
    let e = Ecdf::new(samples.iter().map(|s| s.1).collect())?;
    Ok(ks_distance(&e, |t| -libm::expm1(-gamma * t)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncoveredMean {
    pub net_count: usize,
    pub eps: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `N^ε`.
    pub expected: f64,
    pub sizes: Vec<usize>,
}

impl UncoveredMean {
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected) / self.std_error
    }
}

pub fn uncovered_mean<E: Executor>(
    net: &Net,
    eps: f64,
    mode: UncoveredMode,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<UncoveredMean> {
    check_reps(reps)?;
    let target = CoverTarget::new(net.clone())?;
    let sets: Vec<Vec<usize>> = exec
        .map(reps, |rep| uncovered_set(&target, eps, mode, target.stream(replicate_key(seed, 0, rep))))
        .into_iter()
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
    let n = reps as f64;
    let mean = sizes.iter().sum::<usize>() as f64 / n;
    let var = sizes.iter().map(|&s| (s as f64 - mean) * (s as f64 - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(UncoveredMean {
        net_count: net.len(),
        eps,
        mean,
        std_error: libm::sqrt(var / n),
        expected: libm::pow(net.len() as f64, eps),
        sizes,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GFailureRow {
    pub n: u32,
    pub net_count: usize,
    /// Fraction of replicates whose uncovered set is not good.
    pub failure_rate: f64,
    /// `N^{-ε/3}`.
    pub rate_bound_shape: f64,
}

/// Empirical probability that the uncovered set at the threshold time fails
/// the cardinality/separation conditions, for each size in `n_list`.
#[allow(clippy::too_many_arguments)]
pub fn g_failure_trend<E: Executor>(
    family: &Family,
    rho: f64,
    eps: f64,
    k: u32,
    n_list: &[u32],
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<GFailureRow>> {
    check_n_list(n_list)?;
    check_reps(reps)?;
    n_list
        .iter()
        .map(|&n| {
            let net = build_net(&family.at(n), rho, k)?;
            let target = CoverTarget::new(net.clone())?;
            let fails: Vec<bool> = exec
                .map(reps, |rep| {
                    let set = uncovered_set(&target, eps, UncoveredMode::Singular, target.stream(replicate_key(seed, n, rep)))?;
                    Ok(!g_membership(&set, &net, eps)?.member)
                })
                .into_iter()
                .collect::<Result<_>>()?;
            Ok(GFailureRow {
                n,
                net_count: net.len(),
                failure_rate: fails.iter().filter(|&&f| f).count() as f64 / reps as f64,
                rate_bound_shape: libm::pow(net.len() as f64, -eps / 3.0),
            })
        })
        .collect()
}
