use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use plap_curves::{IntegratorConfig, Params, ProblemClass};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "plap-curves",
    version,
    about = "Solution curves of self-similar radial p-Laplace problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report the named conditions, characteristic roots and turn prediction (JSON).
    Analyze(Shared),
    /// Integrate the generating IVP and write the trajectory.
    Solve(Shared),
    /// Write the (lambda, u(0)) solution curve.
    Curve {
        #[command(flatten)]
        shared: Shared,
        /// Log-spaced curve samples per decade of t.
        #[arg(long)]
        samples_per_decade: Option<usize>,
    },
    /// Locate the turning points of the solution curve.
    Turns {
        #[command(flatten)]
        shared: Shared,
        /// Where to write the summary JSON in CSV mode (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the boundary value solution u(r) at one curve parameter.
    Profile {
        #[command(flatten)]
        shared: Shared,
        /// Curve parameter t (default: min(1000, t_max)).
        #[arg(long, allow_negative_numbers = true)]
        at: Option<f64>,
        /// Number of log-spaced radii in [r_min, 1].
        #[arg(long)]
        points: Option<usize>,
        /// Smallest radius.
        #[arg(long, allow_negative_numbers = true)]
        r_min: Option<f64>,
    },
    /// Run the acceptance matrix and print a pass/fail table.
    Verify {
        /// Multiply every tolerance bound by this factor.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        tol_scale: f64,
        /// Run only the rows of one class.
        #[arg(long)]
        only: Option<ClassArg>,
        /// Run rows one after another.
        #[arg(long)]
        serial: bool,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Gelfand,
    Mems,
    Jl,
}

impl From<ClassArg> for ProblemClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Gelfand => ProblemClass::Gelfand,
            ClassArg::Mems => ProblemClass::Mems,
            ClassArg::Jl => ProblemClass::JosephLundgren,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by the computational subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Shared {
    #[arg(long)]
    pub class: Option<ClassArg>,
    #[arg(short = 'p', allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(short = 'q', allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(short = 'a', long = "alpha", allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(short = 'n', allow_negative_numbers = true)]
    pub n: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Output path (default: stdout).
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    /// key=value file with defaults for the flags above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub class: ProblemClass,
    pub params: Params,
    pub integrator: IntegratorConfig,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Config entries not consumed by the shared flags.
    pub extra: BTreeMap<String, String>,
}

const SHARED_KEYS: [&str; 12] = [
    "class",
    "p",
    "q",
    "alpha",
    "n",
    "t_start",
    "t_max",
    "rel_tol",
    "abs_tol",
    "max_steps",
    "output",
    "format",
];

/// Keys read by individual subcommands; accepted in any config file.
const COMMAND_KEYS: [&str; 4] = ["samples_per_decade", "at", "points", "r_min"];

/// Parse `key = value` lines; `#` starts a comment. Dashes in keys count as underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!("config line {}: expected key=value", i + 1))
        })?;
        let key = k.trim().replace('-', "_");
        let key = if key == "a" { "alpha".to_string() } else { key };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Invalid(format!("config key {key}: cannot parse {value:?}")))
}

impl Shared {
    /// Merge flags over the config file over the class defaults.
    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        for key in cfg.keys() {
            if !SHARED_KEYS.contains(&key.as_str()) && !COMMAND_KEYS.contains(&key.as_str()) {
                return Err(CliError::Invalid(format!("unknown config key {key:?}")));
            }
        }
        let num = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => cfg.get(key).map(|v| parse_value(key, v)).transpose(),
            }
        };

        let class = match (self.class, cfg.get("class")) {
            (Some(c), _) => c.into(),
            (None, Some(v)) => v
                .parse::<ProblemClass>()
                .map_err(|e| CliError::Invalid(e.to_string()))?,
            (None, None) => return Err(CliError::Invalid("missing --class".into())),
        };
        let base = Params::class_default(class);
        let params = Params {
            p: num(self.p, "p")?.unwrap_or(base.p),
            q: num(self.q, "q")?.unwrap_or(base.q),
            alpha: num(self.alpha, "alpha")?.unwrap_or(base.alpha),
            n: num(self.n, "n")?.unwrap_or(base.n),
        };
        params.validate(class)?;

        let d = IntegratorConfig::default();
        let max_steps = match self.max_steps {
            Some(m) => m,
            None => cfg
                .get("max_steps")
                .map(|v| parse_value("max_steps", v))
                .transpose()?
                .unwrap_or(d.max_steps),
        };
        let integrator = IntegratorConfig {
            t_start: num(self.t_start, "t_start")?.unwrap_or(d.t_start),
            t_max: num(self.t_max, "t_max")?.unwrap_or(d.t_max),
            rel_tol: num(self.rel_tol, "rel_tol")?.unwrap_or(d.rel_tol),
            abs_tol: num(self.abs_tol, "abs_tol")?.unwrap_or(d.abs_tol),
            max_steps,
            log_time: d.log_time,
        };
        integrator.validate()?;

        let format = match (self.format, cfg.get("format")) {
            (Some(f), _) => f,
            (None, Some(v)) => Format::from_str(v, true)
                .map_err(|_| CliError::Invalid(format!("unknown format {v:?}")))?,
            (None, None) => Format::Csv,
        };
        let output = self
            .output
            .clone()
            .or_else(|| cfg.get("output").map(PathBuf::from));
        cfg.retain(|k, _| !SHARED_KEYS.contains(&k.as_str()));
        Ok(RunSpec {
            class,
            params,
            integrator,
            output,
            format,
            extra: cfg,
        })
    }
}

impl RunSpec {
    /// A command-specific value: the flag if given, else the config entry.
    pub fn extra<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.extra.get(key).map(|v| parse_value(key, v)).transpose(),
        }
    }
}
