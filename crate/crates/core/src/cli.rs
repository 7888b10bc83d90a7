//! Command-line front end. [`main_with`] is the whole program minus the
//! process exit, so tests can drive it in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::acceptance::{run_suite, AcceptanceConfig, PresetSet};
use crate::config::{parse_assignment, run_file, ScenarioDocument, PRESETS};
use crate::error::Error;
use crate::output::{axis_label, write_outputs};

/// Environment variable naming the default output directory of `run`.
pub const OUT_DIR_ENV: &str = "RIS_SECRECY_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ris-secrecy",
    version,
    about = "Monte-Carlo secrecy simulator for RIS-assisted wiretap links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file or shipped preset and write CSV plus a JSON summary.
    Run {
        /// Path to a scenario file, or a preset name such as `presets/fig8a`.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override a field, e.g. `--set gamma=3.5` or `--set ris.n_elements=64`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: $RIS_SECRECY_OUT_DIR or `results`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets, optionally exporting them as files.
    Presets {
        #[arg(long, value_name = "DIR")]
        export: Option<PathBuf>,
    },
    /// Run the acceptance checks.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Read presets from this directory instead of the built-in copies.
        #[arg(long, value_name = "DIR")]
        presets: Option<PathBuf>,
        /// Accept preset files whose content differs from the released presets.
        #[arg(long)]
        allow_modified: bool,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn fail(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    exit_code(e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            seed,
            trials,
            workers,
            set,
            out: out_dir,
        } => {
            let mut overrides = set;
            if let Some(s) = seed {
                overrides.push(format!("run.seed={s}"));
            }
            if let Some(t) = trials {
                overrides.push(format!("run.trials={t}"));
            }
            let dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            match cmd_run(&scenario, &overrides, workers, &dir, out) {
                Ok(()) => EXIT_OK,
                Err(e) => fail(err, &e),
            }
        }
        Command::Presets { export } => match cmd_presets(export.as_deref(), out) {
            Ok(()) => EXIT_OK,
            Err(e) => fail(err, &e),
        },
        Command::Verify {
            seed,
            trials,
            workers,
            presets,
            allow_modified,
        } => {
            let set = match presets {
                Some(dir) => match PresetSet::from_dir(&dir) {
                    Ok(s) => s,
                    Err(e) => return fail(err, &e),
                },
                None => PresetSet::embedded(),
            };
            if !set.modified.is_empty() && !allow_modified {
                let _ = writeln!(
                    err,
                    "error: presets differ from the released content: {} (pass --allow-modified to proceed)",
                    set.modified.join(", ")
                );
                return EXIT_VALIDATION;
            }
            let cfg = AcceptanceConfig {
                trials,
                seed,
                workers,
            };
            let outcomes = run_suite(set, cfg);
            for o in &outcomes {
                let _ = writeln!(out, "{}", o.line());
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            let _ = writeln!(out, "{passed}/{} criteria passed", outcomes.len());
            if passed == outcomes.len() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
    }
}

/// Name used for output files: the file stem of `scenario`.
fn output_stem(scenario: &str) -> String {
    Path::new(scenario)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

pub fn cmd_run(
    scenario: &str,
    overrides: &[String],
    workers: usize,
    dir: &Path,
    out: &mut dyn Write,
) -> crate::Result<()> {
    let started = Instant::now();
    let mut doc = ScenarioDocument::load(scenario)?;
    for o in overrides {
        let (k, v) = parse_assignment(o)?;
        doc.set(&k, &v)?;
    }
    let table = run_file(&doc.to_file()?, workers)?;
    let elapsed = started.elapsed().as_secs_f64();
    let paths = write_outputs(
        dir,
        &output_stem(scenario),
        &table,
        overrides.to_vec(),
        elapsed,
    )?;
    let _ = writeln!(
        out,
        "{} rows -> {} ({} pre-null failures, {:.1} s)",
        table.rows.len(),
        paths.csv.display(),
        table.total_prenull_failures(),
        elapsed
    );
    Ok(())
}

pub fn cmd_presets(export: Option<&Path>, out: &mut dyn Write) -> crate::Result<()> {
    for p in PRESETS {
        let f = p.file();
        let t = &f.topology;
        let r = &f.radio;
        let values: Vec<String> = f.sweep.values.iter().map(axis_label).collect();
        let _ = writeln!(
            out,
            "{} [{}]  sha256 {}",
            p.name,
            f.strategy.label(),
            p.sha256
        );
        let _ =
            writeln!(
            out,
            "  d_v={} d_tl={} d_te={} d_tr={}  P={} dBm  noise={} dBm  C0={} dB  d0={} m  gamma={}",
            t.d_v, t.d_tl, t.d_te, t.d_tr, r.tx_power_dbm, r.noise_power_dbm, r.c0_db, r.d0, r.gamma
        );
        let _ = writeln!(
            out,
            "  N={}  amplitude={}  trials={}  seed={}  c_target={}",
            f.ris.n_elements,
            f.ris.amplitude.label(),
            f.run.trials,
            f.run.seed,
            f.run.c_target
        );
        let _ = writeln!(
            out,
            "  sweep {} = [{}]  crn={}",
            f.sweep.axis.name(),
            values.join(", "),
            f.sweep.crn
        );
        let s = &f.sweep.series;
        let models: Vec<String> = s.model.iter().map(|m| format!("{m:?}")).collect();
        let bits: Vec<String> = s.bits.iter().map(|b| b.label()).collect();
        let _ = writeln!(
            out,
            "  series model={:?} bits={:?} gamma={:?} mu={:?}",
            models, bits, s.gamma, s.mu
        );
        if let Some(dir) = export {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.toml", p.name)), p.source)?;
        }
    }
    Ok(())
}
