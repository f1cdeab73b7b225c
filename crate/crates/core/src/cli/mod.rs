//! Command-line front end. [`run`] takes the argument list and the two
//! output streams so the whole tool can be driven from tests.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::cells::CellError;
use crate::dendrite::DendriteError;
use crate::imaging::ImagingError;
use crate::netlist::NetlistError;
use crate::solver::{SolveStats, SolverError};

pub use commands::{detector_config, detector_lut, segment_image};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
    pub const EMPTY: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(#[from] NetlistError),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Empty(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse(_) => exit::PARSE,
            CliError::Convergence(_) => exit::CONVERGENCE,
            CliError::Io(_) => exit::IO,
            CliError::Empty(_) => exit::EMPTY,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Netlist(n) => CliError::Parse(n),
            SolverError::InvalidInput(m) => CliError::Usage(m),
            SolverError::Device(d) => CliError::Usage(d.to_string()),
            other => CliError::Convergence(other.to_string()),
        }
    }
}

impl From<CellError> for CliError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::Netlist(n) => CliError::Parse(n),
            CellError::NotUnimodal { .. } | CellError::NoBand { .. } => {
                CliError::Empty(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::NoRing(_) => CliError::Empty(e.to_string()),
            ImagingError::LutRangeError { .. } | ImagingError::InvalidInput(_) => {
                CliError::Usage(e.to_string())
            }
            // Undecodable image files are reported like unreadable ones.
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<DendriteError> for CliError {
    fn from(e: DendriteError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// CSV number format: nine digits after the point in the usual range,
/// scientific with nine significant digits for very small or large values.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0.000000000".into();
    }
    let a = x.abs();
    if (1e-3..1e9).contains(&a) {
        format!("{x:.9}")
    } else {
        format!("{x:.8e}")
    }
}

/// Summary of one invocation, printed to stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub wall_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub stats: Option<SolveStats>,
}

impl std::fmt::Display for RunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run: command={} wall={:.3}s",
            self.command, self.wall_seconds
        )?;
        if let Some(s) = &self.stats {
            write!(f, " newton={} strategy={}", s.newton_iterations, s.strategy)?;
        }
        let outs: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        if !outs.is_empty() {
            write!(f, " outputs={}", outs.join(","))?;
        }
        Ok(())
    }
}

/// Writes `data` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(data).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Output streams and the report being filled in.
pub(crate) struct Ctx<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    pub report: RunReport,
}

impl Ctx<'_> {
    /// Sends data to `out`, or to stdout without one.
    pub fn emit(&mut self, out: Option<&Path>, data: &[u8]) -> Result<(), CliError> {
        match out {
            Some(p) => {
                write_atomic(p, data)?;
                self.report.outputs.push(p.to_path_buf());
            }
            None => self
                .stdout
                .write_all(data)
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?,
        }
        Ok(())
    }

    pub fn note(&mut self, line: &str) {
        let _ = writeln!(self.stderr, "{line}");
    }

    pub fn absorb(&mut self, s: SolveStats) {
        let r = self.report.stats.get_or_insert_with(SolveStats::default);
        r.newton_iterations += s.newton_iterations;
        r.last_iterations = s.last_iterations;
        r.strategy = r.strategy.max(s.strategy);
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dendrite-sim",
    version,
    about = "CMOS-memristor dendritic threshold logic simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Be,
    Trap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XorMode {
    Behavioral,
    Circuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PgmArg {
    P2,
    P5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinCircuit {
    SpikeCell,
    SatCell,
    Xor,
    Detector,
}

/// Detector supply selection: a named configuration, then per-supply overrides.
#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub config: Option<u8>,
    #[arg(long)]
    pub vdd1: Option<f64>,
    #[arg(long)]
    pub vdd2: Option<f64>,
    #[arg(long)]
    pub vss1: Option<f64>,
    #[arg(long)]
    pub vss2: Option<f64>,
    #[arg(long)]
    pub bulk_p1: Option<f64>,
    #[arg(long)]
    pub bulk_n1: Option<f64>,
    #[arg(long)]
    pub bulk_n2: Option<f64>,
    /// Memristor state of the detector's first stage, or of the spike cell.
    #[arg(long)]
    pub w0: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DC operating point of a netlist.
    Op {
        netlist: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// DC sweep; flags override the netlist's `.dc` line.
    Sweep {
        netlist: PathBuf,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transient analysis; flags override the netlist's `.tran` line.
    Tran {
        netlist: PathBuf,
        #[arg(long)]
        tstop: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value = "trap")]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// XOR neuron, behavioral truth table or circuit transient.
    Xor {
        #[arg(long, value_enum, default_value = "behavioral")]
        mode: XorMode,
        #[arg(long, default_value_t = 1.5)]
        theta2: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.75)]
        theta3: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Intensity detector sweep and band.
    Detector {
        #[command(flatten)]
        supplies: DetectorArgs,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 3.0)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the band summary to this file.
        #[arg(long)]
        band: Option<PathBuf>,
    },
    /// Gaussian test image.
    GenGaussian {
        #[arg(long, default_value_t = 129)]
        size: usize,
        /// Defaults to size / 6.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, default_value = "p5")]
        format: PgmArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Applies a detector transfer curve to an image.
    Segment {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        supplies: DetectorArgs,
        #[arg(long, default_value_t = 0.0)]
        vmin: f64,
        #[arg(long, default_value_t = 3.0)]
        vmax: f64,
        #[arg(long, value_enum, default_value = "p5")]
        format: PgmArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Appends `peak_radius,thickness,peak_brightness` to this CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Writes the radial profile as `radius,mean`.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Threshold triples realizing XOR; grids are `from:to:step` or comma lists.
    CalibrateXor {
        #[arg(long, default_value = "1.1:1.9:0.1")]
        theta2: String,
        #[arg(long, default_value = "0.05,0.1,0.2")]
        eps: String,
        #[arg(long, default_value = "0.55:0.95:0.05")]
        theta3: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints a built-in circuit as a netlist.
    Netlist {
        #[arg(value_enum)]
        circuit: BuiltinCircuit,
        /// Sweep top of the spike and saturation cells, XOR supply.
        #[arg(long)]
        vdd: Option<f64>,
        #[command(flatten)]
        supplies: DetectorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Op { .. } => "op",
            Command::Sweep { .. } => "sweep",
            Command::Tran { .. } => "tran",
            Command::Xor { .. } => "xor",
            Command::Detector { .. } => "detector",
            Command::GenGaussian { .. } => "gen-gaussian",
            Command::Segment { .. } => "segment",
            Command::CalibrateXor { .. } => "calibrate-xor",
            Command::Netlist { .. } => "netlist",
        }
    }
}

/// Runs one command line and returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    let started = Instant::now();
    let mut ctx = Ctx {
        stdout,
        stderr,
        report: RunReport {
            command: cli.command.name().to_string(),
            ..RunReport::default()
        },
    };
    let result = commands::dispatch(&cli.command, &mut ctx);
    ctx.report.wall_seconds = started.elapsed().as_secs_f64();
    let _ = ctx.stdout.flush();
    match result {
        Ok(()) => {
            let line = ctx.report.to_string();
            ctx.note(&line);
            exit::OK
        }
        Err(e) => {
            ctx.note(&format!("error: {e}"));
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(1.0), "1.000000000");
        assert_eq!(format_number(0.5), "0.500000000");
        assert_eq!(format_number(-0.0), "0.000000000");
        assert_eq!(format_number(1.5e-12), "1.50000000e-12");
        assert_eq!(format_number(-2.0e10), "-2.00000000e10");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/a.csv"), b"x").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            run(["dendrite-sim", "frobnicate"], &mut o, &mut e),
            exit::USAGE
        );
        assert_eq!(run(["dendrite-sim", "--help"], &mut o, &mut e), exit::OK);
    }
}
