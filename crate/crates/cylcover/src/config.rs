//! Command-line and config-file options, merged and validated into a
//! [`Config`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cylcover_core::net::{GeometrySpec, DEFAULT_K};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cylcover", version, about = "Cover times of the Poisson cylinder process")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Hitting measures of pairs of unit balls.
    Measure(Opts),
    /// Build a ρ-net and write it as CSV.
    Net(Opts),
    /// Box-dimension fit and content profile.
    Dim(Opts),
    /// Discrete and well cover times, one row per replicate.
    Cover(Opts),
    /// Centred discrete cover times against the Gumbel law.
    Gumbel(Opts),
    /// Bracket quantiles of dilated sets under the log n + log log n centring.
    Tightness(Opts),
    /// Numeric checks of the analytic bounds.
    Verify(Opts),
}

impl Command {
    pub fn split(self) -> (CommandKind, Opts) {
        match self {
            Command::Measure(o) => (CommandKind::Measure, o),
            Command::Net(o) => (CommandKind::Net, o),
            Command::Dim(o) => (CommandKind::Dim, o),
            Command::Cover(o) => (CommandKind::Cover, o),
            Command::Gumbel(o) => (CommandKind::Gumbel, o),
            Command::Tightness(o) => (CommandKind::Tightness, o),
            Command::Verify(o) => (CommandKind::Verify, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Measure,
    Net,
    Dim,
    Cover,
    Gumbel,
    Tightness,
    Verify,
}

fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(d) => vec![d],
        OneOrMany::Many(v) => v,
    })
}

/// Every option of every subcommand. Flags and config-file keys share
/// names (kebab-case in both).
#[derive(Debug, Clone, Default, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Opts {
    /// TOML file with default values; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Dimension; `verify` accepts it repeatedly.
    #[arg(long = "d")]
    #[serde(default, deserialize_with = "one_or_many")]
    pub d: Vec<usize>,

    /// Box corners `lo_1,..,lo_d,hi_1,..,hi_d`.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    pub r#box: Option<Vec<f64>>,
    /// Ball `c_1,..,c_d,radius`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ball: Option<Vec<f64>>,
    /// Integer grid `[0, n-1]^d`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Explicit points (config file only).
    #[arg(skip)]
    pub points: Option<Vec<Vec<f64>>>,
    /// Dilation factor applied to the geometry.
    #[arg(long)]
    pub scale: Option<f64>,
    /// `grid` (integer grids `[0,n-1]^d`) or `dilate` (`n·A`) for `gumbel`.
    #[arg(long)]
    pub family: Option<String>,

    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rho_list: Option<Vec<f64>>,
    /// Constant `D` of the schedule `ρ_n = D / log|A_n^1|`.
    #[arg(long)]
    pub schedule_d: Option<f64>,
    /// Lattice divisor of the net rule.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<u32>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub max_lines: Option<u64>,

    /// Ball-centre distance for `measure`.
    #[arg(long)]
    pub r: Option<f64>,
    /// Measure of lines hitting both unit balls (default quantity).
    #[arg(long)]
    #[serde(default)]
    pub pair_hit: bool,
    /// Measure of lines hitting either `(1-ρ)`-ball.
    #[arg(long)]
    #[serde(default)]
    pub pair_union: bool,
    /// Monte Carlo oracle with this many samples instead of quadrature.
    #[arg(long)]
    pub oracle: Option<u64>,

    /// Box dimension of the set.
    #[arg(long)]
    pub dim: Option<f64>,
    /// Content constant `lim ρ^dim |A^ρ|`, if known.
    #[arg(long)]
    pub c_a: Option<f64>,
    /// Exponent ε of the pair sum reported by `verify` (default ρ/50).
    #[arg(long)]
    pub eps: Option<f64>,
}

impl Opts {
    /// Fills every unset field from `file`.
    pub fn merge(self, file: Opts) -> Opts {
        Opts {
            config: self.config,
            d: if self.d.is_empty() { file.d } else { self.d },
            r#box: self.r#box.or(file.r#box),
            ball: self.ball.or(file.ball),
            grid: self.grid.or(file.grid),
            points: self.points.or(file.points),
            scale: self.scale.or(file.scale),
            family: self.family.or(file.family),
            rho: self.rho.or(file.rho),
            rho_list: self.rho_list.or(file.rho_list),
            schedule_d: self.schedule_d.or(file.schedule_d),
            k: self.k.or(file.k),
            n_list: self.n_list.or(file.n_list),
            reps: self.reps.or(file.reps),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            workers: self.workers.or(file.workers),
            max_lines: self.max_lines.or(file.max_lines),
            r: self.r.or(file.r),
            pair_hit: self.pair_hit || file.pair_hit,
            pair_union: self.pair_union || file.pair_union,
            oracle: self.oracle.or(file.oracle),
            dim: self.dim.or(file.dim),
            c_a: self.c_a.or(file.c_a),
            eps: self.eps.or(file.eps),
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<Opts, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("config: cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    PairHit,
    PairUnion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Grid,
    Dilate,
}

/// Validated configuration. Serialized into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub command: CommandKind,
    pub d: Vec<usize>,
    pub geometry: Option<GeometrySpec>,
    pub family: Option<FamilyKind>,
    pub rho: Option<f64>,
    pub rho_list: Option<Vec<f64>>,
    pub schedule_d: Option<f64>,
    pub k: u32,
    pub n_list: Option<Vec<u32>>,
    pub reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub max_lines: u64,
    pub r: Option<f64>,
    pub quantity: Quantity,
    pub oracle: Option<u64>,
    pub dim: Option<f64>,
    pub c_a: Option<f64>,
    pub eps: Option<f64>,
}

impl Config {
    /// The single dimension of non-`verify` commands.
    pub fn dim_d(&self) -> usize {
        self.d[0]
    }
}

fn usage(field: &str, reason: &str) -> CliError {
    CliError::Usage(format!("{field}: {reason}"))
}

fn geometry(o: &Opts, d: usize) -> Result<Option<GeometrySpec>, CliError> {
    let mut parts = Vec::new();
    if let Some(b) = &o.r#box {
        if b.len() != 2 * d {
            return Err(usage("box", &format!("expected {} numbers for d = {d}", 2 * d)));
        }
        parts.push(GeometrySpec::Box {
            lo: b[..d].to_vec(),
            hi: b[d..].to_vec(),
        });
    }
    if let Some(b) = &o.ball {
        if b.len() != d + 1 {
            return Err(usage("ball", &format!("expected {} numbers for d = {d}", d + 1)));
        }
        parts.push(GeometrySpec::Ball {
            center: b[..d].to_vec(),
            radius: b[d],
        });
    }
    if let Some(n) = o.grid {
        if n == 0 {
            return Err(usage("grid", "must be positive"));
        }
        parts.push(GeometrySpec::grid(n, d));
    }
    if let Some(p) = &o.points {
        if p.iter().any(|x| x.len() != d) {
            return Err(usage("points", &format!("every point needs {d} coordinates")));
        }
        parts.push(GeometrySpec::Points(p.clone()));
    }
    let spec = match parts.len() {
        0 => return Ok(None),
        1 => parts.pop().unwrap(),
        _ => GeometrySpec::Union(parts),
    };
    let spec = match o.scale {
        Some(f) => spec.scaled(f),
        None => spec,
    };
    spec.validate().map_err(CliError::from)?;
    Ok(Some(spec))
}

/// Resolves `opts` (already merged with any config file) for `command`.
pub fn resolve(command: CommandKind, o: Opts) -> Result<Config, CliError> {
    use CommandKind::*;
    let d = match command {
        Verify if o.d.is_empty() => vec![2, 3, 4],
        Verify => o.d.clone(),
        _ => match o.d.as_slice() {
            [] => return Err(usage("d", "missing required option --d")),
            [d] => vec![*d],
            _ => return Err(usage("d", "only one dimension allowed for this command")),
        },
    };
    if d.iter().any(|&x| x < 2) {
        return Err(usage("d", "dimension must be at least 2"));
    }
    if o.rho.is_some() && o.schedule_d.is_some() {
        return Err(usage("rho", "conflicts with --schedule-d; give one of them"));
    }
    if o.rho.is_some() && o.rho_list.is_some() {
        return Err(usage("rho", "conflicts with --rho-list; give one of them"));
    }
    let geometry = geometry(&o, d[0])?;
    let need_geometry = |g: &Option<GeometrySpec>| -> Result<(), CliError> {
        if g.is_none() {
            return Err(usage("geometry", "give one of --box, --ball, --grid or points"));
        }
        Ok(())
    };
    let need = |present: bool, field: &str| -> Result<(), CliError> {
        if !present {
            return Err(usage(field, &format!("missing required option --{}", field.replace('_', "-"))));
        }
        Ok(())
    };
    let mut family = None;
    match command {
        Measure => {
            need(o.r.is_some(), "r")?;
            if o.pair_hit && o.pair_union {
                return Err(usage("pair_union", "choose one of --pair-hit and --pair-union"));
            }
            if o.pair_union {
                need(o.rho.is_some(), "rho")?;
            }
        }
        Net => {
            need_geometry(&geometry)?;
            need(o.rho.is_some(), "rho")?;
        }
        Dim => {
            need_geometry(&geometry)?;
            need(o.rho_list.is_some(), "rho_list")?;
        }
        Cover => {
            need_geometry(&geometry)?;
            need(o.rho.is_some() || o.rho_list.is_some(), "rho")?;
        }
        Gumbel => {
            need(o.rho.is_some(), "rho")?;
            need(o.n_list.is_some(), "n_list")?;
            family = Some(match o.family.as_deref() {
                Some("grid") => FamilyKind::Grid,
                Some("dilate") => {
                    need_geometry(&geometry)?;
                    FamilyKind::Dilate
                }
                None if geometry.is_some() => FamilyKind::Dilate,
                None => FamilyKind::Grid,
                Some(other) => return Err(usage("family", &format!("unknown family {other:?}"))),
            });
        }
        Tightness => {
            need_geometry(&geometry)?;
            need(o.n_list.is_some(), "n_list")?;
        }
        Verify => {}
    }
    if let Some(r) = o.reps {
        if r == 0 {
            return Err(usage("reps", "must be positive"));
        }
    }
    if let Some(w) = o.workers {
        if w == 0 {
            return Err(usage("workers", "must be positive"));
        }
    }
    let default_reps = match command {
        Cover => 1,
        Gumbel => 2000,
        Tightness => 500,
        _ => 1,
    };
    Ok(Config {
        command,
        d,
        geometry,
        family,
        rho: o.rho,
        rho_list: o.rho_list,
        schedule_d: match command {
            Tightness => Some(o.schedule_d.unwrap_or(1.0)),
            _ => o.schedule_d,
        },
        k: o.k.unwrap_or(DEFAULT_K),
        n_list: o.n_list,
        reps: o.reps.unwrap_or(default_reps),
        seed: o.seed.unwrap_or(0),
        out: o.out,
        workers: o
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        max_lines: o.max_lines.unwrap_or(cylcover_core::cover::DEFAULT_MAX_LINES),
        r: o.r,
        quantity: if o.pair_union { Quantity::PairUnion } else { Quantity::PairHit },
        oracle: o.oracle,
        dim: o.dim,
        c_a: o.c_a,
        eps: o.eps,
    })
}

/// Parses process-style arguments (program name first) and any config
/// file they name.
pub fn parse_config<I, T>(args: I) -> Result<Config, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let (kind, opts) = cli.command.split();
    let opts = match &opts.config {
        Some(path) => {
            let file = read_config_file(path)?;
            opts.merge(file)
        }
        None => opts,
    };
    resolve(kind, opts)
}
