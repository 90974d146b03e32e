use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use plate_tone::fd_oracle::MIN_CELLS;
use plate_tone::twoball::{symmetric_radius, A_MIN};
use plate_tone::SpectralParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// α(ν)+β(ν) negativity certificate.
    CertifyBounds,
    /// Critical dimension N₀.
    N0,
    /// Sweep of h_ν(a) − h_ν over the two-ball family.
    Reduction,
    /// Finite-difference cross-check of the ball and two-ball roots.
    Oracle,
    /// Cone sharpness and annulus strictness.
    Cone,
    /// Rearrangement and V_± checks, on a CSV profile or the built-in suite.
    RearrangeVerify,
    /// All of the above, bundled by command name.
    ReportAll,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::CertifyBounds => "certify-bounds",
            CommandKind::N0 => "n0",
            CommandKind::Reduction => "reduction",
            CommandKind::Oracle => "oracle",
            CommandKind::Cone => "cone",
            CommandKind::RearrangeVerify => "rearrange-verify",
            CommandKind::ReportAll => "report-all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "plate-tone",
    version,
    about = "Clamped plate principal frequency checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub opts: Options,
}

/// Flags shared by all commands; unset flags fall back to `--config`, then to
/// the command default.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Dimension N in (1, 4).
    #[arg(long = "N", global = true)]
    #[serde(rename = "N")]
    pub n_dim: Option<f64>,
    /// Bessel order ν = N/2 − 1 (alternative to --N).
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Sweep grid size, scan points or rearrangement cells.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Finite-difference mesh size.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Two-ball radii for `oracle`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub a: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub avr: Option<f64>,
    /// Domain measure for the sharpness check.
    #[arg(long, global = true)]
    pub v: Option<f64>,
    #[arg(long, global = true)]
    pub r1: Option<f64>,
    #[arg(long, global = true)]
    pub r2: Option<f64>,
    /// CSV profile with columns radius,value,mass.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Random profiles in the built-in rearrangement suite.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat JSON object with the same keys as the flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Options {
    fn or(self, base: Options) -> Options {
        Options {
            n_dim: self.n_dim.or(base.n_dim),
            nu: self.nu.or(base.nu),
            tol: self.tol.or(base.tol),
            grid: self.grid.or(base.grid),
            n: self.n.or(base.n),
            a: self.a.or(base.a),
            avr: self.avr.or(base.avr),
            v: self.v.or(base.v),
            r1: self.r1.or(base.r1),
            r2: self.r2.or(base.r2),
            input: self.input.or(base.input),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            config: self.config,
        }
    }
}

/// Validated run configuration. Unset fields take per-command defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n_dim: Option<f64>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub n: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub avr: Option<f64>,
    pub v: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub input: Option<PathBuf>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_config(path: &Path) -> Result<Options, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the config file and validates every numeric field.
    pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
        let base = match &cli.opts.config {
            Some(p) => read_config(p)?,
            None => Options::default(),
        };
        Self::from_options(cli.command, cli.opts.clone().or(base))
    }

    pub fn from_options(command: CommandKind, o: Options) -> Result<RunConfig, CliError> {
        let n_dim = match (o.n_dim, o.nu) {
            (Some(n), Some(nu)) if (2.0 * nu + 2.0 - n).abs() > 1e-12 => {
                return Err(usage(format!("--N {n} and --nu {nu} disagree")));
            }
            (Some(n), _) => Some(n),
            (None, Some(nu)) => Some(2.0 * nu + 2.0),
            (None, None) => None,
        };
        if let Some(n) = n_dim {
            SpectralParams::new(n).map_err(|e| usage(e.to_string()))?;
        }
        if let Some(t) = o.tol {
            let zero_ok = matches!(command, CommandKind::Reduction | CommandKind::CertifyBounds);
            if !(t.is_finite() && (t > 0.0 || (zero_ok && t == 0.0))) {
                return Err(usage(format!("--tol {t}")));
            }
        }
        if let Some(g) = o.grid {
            let min = match command {
                CommandKind::CertifyBounds => 16,
                CommandKind::RearrangeVerify => MIN_CELLS,
                _ => 1,
            };
            if g < min {
                return Err(usage(format!("--grid {g} below {min}")));
            }
        }
        if let Some(n) = o.n {
            let min = match command {
                CommandKind::Oracle => 4 * MIN_CELLS,
                _ => MIN_CELLS,
            };
            if n < min {
                return Err(usage(format!("--n {n} below {min}")));
            }
        }
        if let Some(list) = &o.a {
            let top = symmetric_radius(n_dim.unwrap_or(2.0));
            if list.is_empty() {
                return Err(usage("--a needs at least one radius"));
            }
            if let Some(a) = list.iter().find(|&&a| !(A_MIN..=top).contains(&a)) {
                return Err(usage(format!("--a {a} outside [{A_MIN}, {top}]")));
            }
        }
        if let Some(avr) = o.avr {
            if !(avr > 0.0 && avr <= 1.0) {
                return Err(usage(format!("--avr {avr} outside (0, 1]")));
            }
        }
        if let Some(v) = o.v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("--v {v}")));
            }
        }
        let r1 = o.r1.unwrap_or(0.05);
        let r2 = o.r2.unwrap_or(1.0);
        if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
            return Err(usage(format!("annulus radii r1 = {r1}, r2 = {r2}")));
        }
        if o.samples == Some(0) {
            return Err(usage("--samples must be positive"));
        }
        if command == CommandKind::ReportAll {
            if o.format == Some(Format::Csv) {
                return Err(usage("report-all emits JSON only"));
            }
            let tuned = [
                ("--tol", o.tol.is_some()),
                ("--grid", o.grid.is_some()),
                ("--n", o.n.is_some()),
                ("--a", o.a.is_some()),
                ("--v", o.v.is_some()),
                ("--r1", o.r1.is_some()),
                ("--r2", o.r2.is_some()),
            ];
            if let Some((flag, _)) = tuned.iter().find(|t| t.1) {
                return Err(usage(format!(
                    "{flag} is per command; report-all runs defaults"
                )));
            }
        }
        Ok(RunConfig {
            command,
            n_dim,
            tol: o.tol,
            grid: o.grid,
            n: o.n,
            a: o.a,
            avr: o.avr,
            v: o.v,
            r1: o.r1,
            r2: o.r2,
            input: o.input,
            samples: o.samples,
            seed: o.seed,
            out: o.out,
            format: o.format.unwrap_or_default(),
        })
    }

    /// SHA-256 of the canonical JSON of the configuration, output path and
    /// format excluded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    pub fn with_command(&self, command: CommandKind) -> RunConfig {
        RunConfig {
            command,
            ..self.clone()
        }
    }
}
