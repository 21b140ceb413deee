//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{CommandFactory, Parser, ValueEnum};

use crate::driver::{partition, PartitionerConfig};
use crate::error::Error;
use crate::io::{read_metis, write_partition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNREADABLE: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fast,
    Quality,
}

/// Partition a graph in Metis format into k balanced blocks.
#[derive(Clone, Debug, Parser)]
#[command(name = "mlpart", version)]
pub struct CliInvocation {
    /// Graph file in Metis format.
    pub graph_path: PathBuf,
    /// Number of blocks.
    #[arg(long)]
    pub k: usize,
    /// Allowed imbalance.
    #[arg(long, default_value_t = 0.03)]
    pub epsilon: f64,
    /// Worker threads [default: logical cores].
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Partition output [default: <graph>.part.<k>].
    #[arg(short = 'o', long = "output")]
    pub output_path: Option<PathBuf>,
    /// Per-phase metrics as CSV.
    #[arg(long = "metrics-csv")]
    pub metrics_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Quality)]
    pub preset: Preset,
}

impl CliInvocation {
    pub fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn output(&self) -> PathBuf {
        self.output_path.clone().unwrap_or_else(|| {
            let mut name = self.graph_path.clone().into_os_string();
            name.push(format!(".part.{}", self.k));
            PathBuf::from(name)
        })
    }

    pub fn config(&self) -> PartitionerConfig {
        let base = match self.preset {
            Preset::Fast => PartitionerConfig::fast(self.k),
            Preset::Quality => PartitionerConfig::new(self.k),
        };
        PartitionerConfig {
            epsilon: self.epsilon,
            workers: self.threads(),
            seed: self.seed,
            ..base
        }
    }

    fn check_flags(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("--k must be at least 1".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(format!("--epsilon must be finite and >= 0, got {}", self.epsilon));
        }
        if self.threads == Some(0) {
            return Err("--threads must be at least 1".into());
        }
        Ok(())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_UNREADABLE,
        Error::Parse { .. }
        | Error::SelfLoop(_)
        | Error::VertexOutOfRange { .. }
        | Error::NonPositiveWeight(_)
        | Error::VertexWeightCount { .. } => EXIT_MALFORMED,
        _ => EXIT_USAGE,
    }
}

/// Runs one invocation, writing the summary to `out` and diagnostics to
/// `err`. Returns the process exit status.
pub fn run(inv: &CliInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(msg) = inv.check_flags() {
        let _ = writeln!(err, "error: {msg}\n\n{}", CliInvocation::command().render_usage());
        return EXIT_USAGE;
    }
    let start = Instant::now();
    let result = read_metis(&inv.graph_path).and_then(|g| {
        let (part, report) = partition(&g, &inv.config())?;
        write_partition(part.assignment(), inv.output())?;
        if let Some(path) = &inv.metrics_path {
            report.save_csv(path)?;
        }
        Ok((part, report))
    });
    match result {
        Ok((part, report)) => {
            let avg = part.total_weight() as f64 / part.k() as f64;
            let balance = if avg > 0.0 { report.max_block_weight as f64 / avg } else { 1.0 };
            let _ = writeln!(
                out,
                "cut={} balance={:.4} time={:.3}",
                report.final_cut,
                balance,
                start.elapsed().as_secs_f64()
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (program name first) and runs.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match CliInvocation::try_parse_from(args) {
        Ok(inv) => run(&inv, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("mlpart").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn zero_blocks_is_usage_error() {
        let (code, _, err) = call(&["--k", "0", "g.metis"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--k"));
        assert!(err.contains("Usage:"));
    }

    #[test]
    fn unknown_flag_and_missing_k() {
        assert_eq!(call(&["--bogus", "g.metis"]).0, EXIT_USAGE);
        assert_eq!(call(&["g.metis"]).0, EXIT_USAGE);
        assert_eq!(call(&["--k", "2", "--preset", "slow", "g.metis"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_succeeds() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("--metrics-csv"));
    }

    #[test]
    fn default_output_name() {
        let inv = CliInvocation::try_parse_from(["mlpart", "--k", "4", "dir/g.graph"]).unwrap();
        assert_eq!(inv.output(), PathBuf::from("dir/g.graph.part.4"));
        assert_eq!(inv.config().k, 4);
        assert_eq!(inv.config().epsilon, 0.03);
    }
}
