//! Dispatch of a resolved [`Config`] to the kernel, with file output.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use cylcover_core::cover::{bracket_from_nets, run_cover_seeded, CoverTarget};
use cylcover_core::measure::{
    mc_pair_oracle, mc_union_oracle, pair_hit_measure, pair_union_measure, singular_rate, MeasureValue,
};
use cylcover_core::net::{box_dimension_fit, build_net, content_constant, GeometrySpec, Net};
use cylcover_core::verify::{
    gumbel_experiment, inequality_suite, pair_sum, tightness_experiment, Band, Drift, Family, InequalityReport,
    PairSum, SuiteGrids,
};
use cylcover_core::{Executor, Purpose, StreamKey};
use serde::Serialize;

use crate::config::{CommandKind, Config, FamilyKind, Quantity};
use crate::error::CliError;
use crate::exec::RayonExecutor;
use crate::io::{self, CoverRow, GumbelCsvRow, TightnessCsvRow};

/// What a run produced.
#[derive(Debug)]
pub struct RunOutput {
    /// JSON summary for standard output.
    pub stdout: String,
    pub files: Vec<PathBuf>,
    /// Set when a verification check failed; the report is still written.
    pub failure: Option<String>,
}

struct Outputs<'a> {
    config: &'a Config,
    files: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(config: &'a Config) -> Result<Self, CliError> {
        if let Some(dir) = &config.out {
            fs::create_dir_all(dir)?;
        }
        Ok(Outputs { config, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<Option<BufWriter<File>>, CliError> {
        let Some(dir) = &self.config.out else { return Ok(None) };
        let path = dir.join(name);
        let f = File::create(&path)?;
        self.files.push(path);
        Ok(Some(BufWriter::new(f)))
    }

    fn report<T: Serialize>(&mut self, result: &T) -> Result<(), CliError> {
        if let Some(w) = self.create("report.json")? {
            io::write_report(w, self.config, result)?;
        }
        Ok(())
    }

    fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        if let Some(w) = self.create(name)? {
            io::write_rows(w, self.config, rows)?;
        }
        Ok(())
    }
}

fn geometry(cfg: &Config) -> &GeometrySpec {
    cfg.geometry.as_ref().expect("validated")
}

pub fn execute(cfg: &Config) -> Result<RunOutput, CliError> {
    let exec = RayonExecutor::new(cfg.workers).map_err(|e| CliError::Resource(format!("thread pool: {e}")))?;
    let mut out = Outputs::new(cfg)?;
    let mut failure = None;
    let stdout = match cfg.command {
        CommandKind::Measure => {
            let v = measure(cfg)?;
            out.report(&v)?;
            serde_json::to_string(&v)?
        }
        CommandKind::Net => {
            let net = build_net(geometry(cfg), cfg.rho.expect("validated"), cfg.k)?;
            if let Some(w) = out.create("net.csv")? {
                io::write_net(w, &net, cfg)?;
            }
            let s = NetSummary {
                rho: net.rho,
                k: net.k,
                d: net.d,
                count: net.len(),
            };
            out.report(&s)?;
            serde_json::to_string(&s)?
        }
        CommandKind::Dim => {
            let rhos = cfg.rho_list.as_deref().expect("validated");
            let fit = box_dimension_fit(geometry(cfg), rhos, cfg.k)?;
            let content = content_constant(geometry(cfg), cfg.dim.unwrap_or(fit.slope), rhos, cfg.k)?;
            let s = DimSummary {
                fit,
                content_spread: content.spread(),
                content,
            };
            out.report(&s)?;
            serde_json::to_string(&s)?
        }
        CommandKind::Cover => {
            let (rows, s) = cover(cfg, &exec)?;
            out.rows("cover.csv", &rows)?;
            out.report(&s)?;
            serde_json::to_string(&s)?
        }
        CommandKind::Gumbel => {
            let family = match cfg.family.expect("validated") {
                FamilyKind::Grid => Family::Grid { d: cfg.dim_d() },
                FamilyKind::Dilate => Family::Dilate(geometry(cfg).clone()),
            };
            let rep = gumbel_experiment(
                &family,
                cfg.rho.expect("validated"),
                cfg.k,
                cfg.n_list.as_deref().expect("validated"),
                cfg.reps,
                cfg.seed,
                &exec,
            )?;
            let rows: Vec<GumbelCsvRow> = rep
                .rows
                .iter()
                .flat_map(|r| {
                    r.centered_td
                        .iter()
                        .zip(&r.centered_tw)
                        .enumerate()
                        .map(move |(i, (a, b))| GumbelCsvRow {
                            n: r.n,
                            rep: i,
                            centered_td: *a,
                            centered_tw: *b,
                        })
                })
                .collect();
            out.rows("gumbel.csv", &rows)?;
            let s = GumbelSummary {
                rho: rep.rho,
                rho_admissible: rep.rho_admissible,
                ks_td_decreasing: rep.ks_td_decreasing(),
                rows: rep
                    .rows
                    .iter()
                    .map(|r| GumbelRowSummary {
                        n: r.n,
                        net_count: r.net_count,
                        ks_td: r.ks_td,
                        ks_tw: r.ks_tw,
                        error_exponent: r.error_exponent,
                        mean_lines: r.mean_lines,
                    })
                    .collect(),
                thresholds: "design-chosen: KS < 0.1 at the largest n, decreasing in n",
            };
            out.report(&s)?;
            serde_json::to_string(&s)?
        }
        CommandKind::Tightness => {
            let rep = tightness_experiment(
                geometry(cfg),
                cfg.dim.unwrap_or(cfg.dim_d() as f64),
                cfg.c_a,
                cfg.schedule_d.expect("defaulted"),
                cfg.n_list.as_deref().expect("validated"),
                cfg.reps,
                cfg.k,
                cfg.seed,
                &exec,
            )?;
            let rows: Vec<TightnessCsvRow> = rep
                .rows
                .iter()
                .flat_map(|r| {
                    r.t_d.iter().zip(&r.t_w).enumerate().map(move |(i, (a, b))| TightnessCsvRow {
                        n: r.n,
                        rep: i,
                        rho: r.rho,
                        centered_td: *a,
                        centered_tw: *b,
                    })
                })
                .collect();
            out.rows("tightness.csv", &rows)?;
            let s = TightnessSummary {
                dim: rep.dim,
                big_d: rep.big_d,
                rows: rep
                    .rows
                    .iter()
                    .map(|r| TightnessRowSummary {
                        n: r.n,
                        rho: r.rho,
                        schedule_valid: r.schedule_valid,
                        net_count: r.net_count,
                        assumptions_hold: r.assumptions.all(),
                        band_td: r.band_td,
                        band_tw: r.band_tw,
                        control_median_td: r.control_median_td,
                        control_median_tw: r.control_median_tw,
                        alpha_scan_td: r.alpha_scan_td,
                        alpha_scan_tw: r.alpha_scan_tw,
                        conjecture_probe_ks_td: r.conjecture_ks_td,
                        conjecture_probe_ks_tw: r.conjecture_ks_tw,
                    })
                    .collect(),
                band_drifts: rep.band_drifts.clone(),
                max_band_drift: rep.max_band_drift(),
                control_drift_td: rep.control_drift_td,
                control_drift_tw: rep.control_drift_tw,
                control_expected: rep.control_expected,
                band_width_td: rep.band_width_td,
                band_width_tw: rep.band_width_tw,
                thresholds: "design-chosen: monotone band drift <= 0.5, overall band width <= 6",
            };
            out.report(&s)?;
            serde_json::to_string(&s)?
        }
        CommandKind::Verify => {
            let rep = inequality_suite(&cfg.d, &SuiteGrids::default())?;
            let pair_sum = match (&cfg.geometry, cfg.rho) {
                (Some(spec), Some(rho)) => {
                    let net = build_net(spec, rho, cfg.k)?;
                    Some(pair_sum(&net, cfg.eps.unwrap_or(rho / 50.0))?)
                }
                _ => None,
            };
            let s = VerifySummary { suite: &rep, pair_sum };
            out.report(&s)?;
            if !rep.passed() {
                let names: Vec<&str> = rep.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
                failure = Some(format!("{} violation(s) in {}", rep.violations(), names.join(", ")));
            }
            serde_json::to_string(&s)?
        }
    };
    Ok(RunOutput {
        stdout,
        files: out.files,
        failure,
    })
}

fn measure(cfg: &Config) -> Result<MeasureValue, CliError> {
    let d = cfg.dim_d();
    let r = cfg.r.expect("validated");
    let key = StreamKey::new(cfg.seed, Purpose::Oracle, 0);
    Ok(match (cfg.quantity, cfg.oracle) {
        (Quantity::PairHit, None) => pair_hit_measure(r, d)?,
        (Quantity::PairHit, Some(n)) => mc_pair_oracle(r, d, n, key)?,
        (Quantity::PairUnion, None) => pair_union_measure(r, d, cfg.rho.expect("validated"))?,
        (Quantity::PairUnion, Some(n)) => {
            let rho = cfg.rho.expect("validated");
            let g = singular_rate(rho, d)?;
            let m = mc_union_oracle(r / (1.0 - rho), d, n, key)?;
            MeasureValue {
                value: g * m.value,
                abs_error: g * m.abs_error,
                ..m
            }
        }
    })
}

fn cover<E: Executor>(cfg: &Config, exec: &E) -> Result<(Vec<CoverRow>, CoverSummary), CliError> {
    let spec = geometry(cfg);
    let rhos: Vec<f64> = match (&cfg.rho_list, cfg.rho) {
        (Some(l), _) => l.clone(),
        (None, Some(r)) => vec![r],
        _ => unreachable!("validated"),
    };
    if rhos.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Usage("rho_list: must be strictly decreasing".into()));
    }
    let nets: Vec<Net> = rhos.iter().map(|&r| build_net(spec, r, cfg.k)).collect::<Result<_, _>>()?;
    let key = |rep: usize| StreamKey::new(cfg.seed, Purpose::Lines, rep as u64);
    let mut rows = Vec::with_capacity(cfg.reps * nets.len());
    let mut empty_brackets = 0;
    let mut order_violations = 0;
    if nets.len() == 1 {
        let target = CoverTarget::new(nets[0].clone())?;
        let results: Vec<_> = exec
            .map(cfg.reps, |rep| run_cover_seeded(&target, key(rep), cfg.max_lines))
            .into_iter()
            .collect::<Result<_, _>>()?;
        for r in results {
            order_violations += (r.t_d > r.t_w) as usize;
            rows.push(CoverRow {
                seed: cfg.seed,
                rho: rhos[0],
                n_points: nets[0].len(),
                t_d: r.t_d,
                t_w: r.t_w,
                lines_used: r.lines_used,
            });
        }
    } else {
        let brackets: Vec<_> = exec
            .map(cfg.reps, |rep| bracket_from_nets(&nets, key(rep), cfg.max_lines))
            .into_iter()
            .collect::<Result<_, _>>()?;
        for b in brackets {
            empty_brackets += b.is_empty() as usize;
            for e in &b.per_rho {
                order_violations += (e.t_d > e.t_w) as usize;
                rows.push(CoverRow {
                    seed: cfg.seed,
                    rho: e.rho,
                    n_points: e.n_points,
                    t_d: e.t_d,
                    t_w: e.t_w,
                    lines_used: e.lines_used,
                });
            }
        }
    }
    let per_rho = rhos
        .iter()
        .zip(&nets)
        .map(|(&rho, net)| {
            let sel: Vec<&CoverRow> = rows.iter().filter(|r| r.rho == rho).collect();
            let n = sel.len() as f64;
            CoverRhoSummary {
                rho,
                n_points: net.len(),
                mean_t_d: sel.iter().map(|r| r.t_d).sum::<f64>() / n,
                mean_t_w: sel.iter().map(|r| r.t_w).sum::<f64>() / n,
                mean_lines: sel.iter().map(|r| r.lines_used as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok((
        rows,
        CoverSummary {
            reps: cfg.reps,
            per_rho,
            order_violations,
            empty_brackets,
        },
    ))
}

#[derive(Debug, Serialize)]
struct NetSummary {
    rho: f64,
    k: u32,
    d: usize,
    count: usize,
}

#[derive(Debug, Serialize)]
struct DimSummary {
    fit: cylcover_core::net::DimensionFit,
    content: cylcover_core::net::ContentProfile,
    content_spread: f64,
}

#[derive(Debug, Serialize)]
struct CoverRhoSummary {
    rho: f64,
    n_points: usize,
    mean_t_d: f64,
    mean_t_w: f64,
    mean_lines: f64,
}

#[derive(Debug, Serialize)]
struct CoverSummary {
    reps: usize,
    per_rho: Vec<CoverRhoSummary>,
    /// Replicates with `t_d > t_w` (always 0).
    order_violations: usize,
    /// Replicates where `max_ρ t_d > min_ρ t_w` across the ρ list.
    empty_brackets: usize,
}

#[derive(Debug, Serialize)]
struct GumbelRowSummary {
    n: u32,
    net_count: usize,
    ks_td: f64,
    ks_tw: f64,
    error_exponent: f64,
    mean_lines: f64,
}

#[derive(Debug, Serialize)]
struct GumbelSummary {
    rho: f64,
    rho_admissible: bool,
    ks_td_decreasing: bool,
    rows: Vec<GumbelRowSummary>,
    thresholds: &'static str,
}

#[derive(Debug, Serialize)]
struct TightnessRowSummary {
    n: u32,
    rho: f64,
    schedule_valid: bool,
    net_count: usize,
    assumptions_hold: bool,
    band_td: Band,
    band_tw: Band,
    control_median_td: f64,
    control_median_tw: f64,
    alpha_scan_td: f64,
    alpha_scan_tw: f64,
    conjecture_probe_ks_td: Option<f64>,
    conjecture_probe_ks_tw: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TightnessSummary {
    dim: f64,
    big_d: f64,
    rows: Vec<TightnessRowSummary>,
    band_drifts: Vec<Drift>,
    max_band_drift: f64,
    control_drift_td: f64,
    control_drift_tw: f64,
    control_expected: f64,
    band_width_td: f64,
    band_width_tw: f64,
    thresholds: &'static str,
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    suite: &'a InequalityReport,
    /// Second-moment pair sum over the configured net, when one is given.
    pair_sum: Option<PairSum>,
}
