//! File formats: net CSV, per-replicate sample CSVs, JSON reports.
//!
//! Every file starts with comment lines (`# ...`) carrying the tool
//! version, seed, net rule and the resolved configuration, so that a file
//! can be interpreted on its own. CSV readers should skip lines starting
//! with `#`.

use std::io::{BufRead, Write};

use cylcover_core::net::Net;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;

pub const TOOL: &str = "cylcover";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Net construction rule, recorded with every output.
#[derive(Debug, Clone, Serialize)]
pub struct NetRule {
    pub rule: &'static str,
    pub k: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub net_rule: NetRule,
    pub config: &'a Config,
}

impl<'a> Provenance<'a> {
    pub fn new(config: &'a Config) -> Self {
        Provenance {
            tool: TOOL,
            version: VERSION,
            seed: config.seed,
            net_rule: NetRule {
                rule: "greedy-lattice",
                k: config.k,
            },
            config,
        }
    }

    fn comment<W: Write>(&self, w: &mut W) -> Result<(), CliError> {
        writeln!(w, "# {TOOL} {VERSION} seed={} net_rule=greedy-lattice K={}", self.seed, self.net_rule.k)?;
        // Output location and worker count do not affect results; leaving them
        // out keeps sample files byte-identical across runs that differ only there.
        let mut cfg = serde_json::to_value(self.config)?;
        if let Some(m) = cfg.as_object_mut() {
            m.remove("out");
            m.remove("workers");
        }
        writeln!(w, "# config: {cfg}")?;
        Ok(())
    }
}

/// A JSON report: provenance fields plus the command's result.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    #[serde(flatten)]
    pub provenance: Provenance<'a>,
    pub result: &'a T,
}

pub fn write_report<W: Write, T: Serialize>(w: W, config: &Config, result: &T) -> Result<(), CliError> {
    let report = Report {
        provenance: Provenance::new(config),
        result,
    };
    serde_json::to_writer_pretty(w, &report)?;
    Ok(())
}

/// Net file: `# rho,K,d,count`, a comment line with those values, the
/// provenance comments, then one point per row.
pub fn write_net<W: Write>(mut w: W, net: &Net, config: &Config) -> Result<(), CliError> {
    writeln!(w, "# rho,K,d,count")?;
    writeln!(w, "# {},{},{},{}", net.rho, net.k, net.d, net.len())?;
    Provenance::new(config).comment(&mut w)?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for p in net.points() {
        csv.serialize(p)?;
    }
    csv.flush()?;
    Ok(())
}

/// Header values and points of a net file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFile {
    pub rho: f64,
    pub k: u32,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
}

pub fn read_net<R: BufRead>(r: R) -> Result<NetFile, CliError> {
    let bad = |m: &str| CliError::Usage(format!("net file: {m}"));
    let mut lines = r.lines();
    let head = lines.next().ok_or_else(|| bad("empty"))??;
    if head.trim() != "# rho,K,d,count" {
        return Err(bad("missing `# rho,K,d,count` header"));
    }
    let vals = lines.next().ok_or_else(|| bad("missing header values"))??;
    let vals: Vec<&str> = vals.trim_start_matches('#').trim().split(',').collect();
    if vals.len() != 4 {
        return Err(bad("header values need 4 fields"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("unparsable header value"));
    let (rho, k, d, count) = (num(vals[0])?, num(vals[1])? as u32, num(vals[2])? as usize, num(vals[3])? as usize);
    let mut points = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let p: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("unparsable coordinate"))?;
        if p.len() != d {
            return Err(bad("row has the wrong dimension"));
        }
        points.push(p);
    }
    if points.len() != count {
        return Err(bad("row count does not match header"));
    }
    Ok(NetFile { rho, k, d, points })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverRow {
    pub seed: u64,
    pub rho: f64,
    pub n_points: usize,
    pub t_d: f64,
    pub t_w: f64,
    pub lines_used: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GumbelCsvRow {
    pub n: u32,
    pub rep: usize,
    pub centered_td: f64,
    pub centered_tw: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TightnessCsvRow {
    pub n: u32,
    pub rep: usize,
    pub rho: f64,
    pub centered_td: f64,
    pub centered_tw: f64,
}

/// Provenance comments, then a headed CSV of `rows`.
pub fn write_rows<W: Write, T: Serialize>(mut w: W, config: &Config, rows: &[T]) -> Result<(), CliError> {
    Provenance::new(config).comment(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}
