//! CSV tables and JSON run summaries.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{AxisValue, ResultRow, ResultTable};
use crate::error::Result;
use crate::secrecy::SecurePower;

/// Column order of every CSV this crate writes.
pub const CSV_COLUMNS: [&str; 19] = [
    "axis_name",
    "axis",
    "strategy",
    "model",
    "bits",
    "gamma",
    "mu",
    "mean_cs",
    "ci_low",
    "ci_high",
    "sop",
    "intercept",
    "spsc",
    "coverage",
    "see",
    "secure_power_dbm",
    "prenull_failures",
    "trials",
    "seed",
];

/// Formats `x` with 9 significant digits, `%.9g` style.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn axis_label(v: &AxisValue) -> String {
    match v {
        AxisValue::Number(x) => fmt_sig9(*x),
        AxisValue::Bits(q) => q.label(),
        AxisValue::Model(m) => m.label().to_string(),
    }
}

fn secure_power_cell(p: Option<SecurePower>) -> String {
    match p {
        None => String::new(),
        Some(SecurePower::Attained(dbm)) => fmt_sig9(dbm),
        Some(SecurePower::Unattainable) => "unattainable".into(),
    }
}

fn row_cells(axis_name: &str, r: &ResultRow) -> [String; 19] {
    let s = &r.stats;
    [
        axis_name.to_string(),
        axis_label(&r.axis_value),
        r.strategy.to_string(),
        r.model.to_string(),
        r.quantization.label(),
        fmt_sig9(r.gamma),
        r.mu.map(fmt_sig9).unwrap_or_default(),
        fmt_sig9(s.mean_secrecy_rate),
        fmt_sig9(s.ci_low),
        fmt_sig9(s.ci_high),
        fmt_sig9(s.sop),
        fmt_sig9(s.intercept_prob),
        fmt_sig9(s.spsc_prob),
        fmt_sig9(s.coverage_prob),
        fmt_sig9(s.see),
        secure_power_cell(s.secure_power),
        r.prenull_failures.to_string(),
        s.trials.to_string(),
        r.seed.to_string(),
    ]
}

pub fn to_csv(table: &ResultTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in &table.rows {
        w.write_record(row_cells(table.axis.name(), r))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

#[derive(Debug, Clone, Serialize)]
pub struct RowFailures {
    pub axis: String,
    pub strategy: &'static str,
    pub model: &'static str,
    pub bits: String,
    pub gamma: f64,
    pub mu: Option<f64>,
    pub prenull_failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub scenario_hash: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub crn: bool,
    pub axis: &'static str,
    pub overrides: Vec<String>,
    pub runtime_seconds: f64,
    pub rows: usize,
    pub csv: String,
    pub prenull_failures: usize,
    pub prenull_failures_by_row: Vec<RowFailures>,
}

impl RunSummary {
    pub fn new(
        scenario: &str,
        table: &ResultTable,
        overrides: Vec<String>,
        runtime_seconds: f64,
        csv: &Path,
    ) -> Self {
        let by_row = table
            .rows
            .iter()
            .filter(|r| r.strategy == "prenull")
            .map(|r| RowFailures {
                axis: axis_label(&r.axis_value),
                strategy: r.strategy,
                model: r.model,
                bits: r.quantization.label(),
                gamma: r.gamma,
                mu: r.mu,
                prenull_failures: r.prenull_failures,
            })
            .collect();
        RunSummary {
            scenario: scenario.to_string(),
            scenario_hash: table.metadata.scenario_hash.clone(),
            tool_version: table.metadata.tool_version,
            seed: table.metadata.seed,
            trials: table.metadata.trials,
            crn: table.metadata.crn,
            axis: table.axis.name(),
            overrides,
            runtime_seconds,
            rows: table.rows.len(),
            csv: csv
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            prenull_failures: table.total_prenull_failures(),
            prenull_failures_by_row: by_row,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
}

pub fn output_paths(dir: &Path, name: &str) -> OutputPaths {
    OutputPaths {
        csv: dir.join(format!("{name}.csv")),
        summary: dir.join(format!("{name}.summary.json")),
    }
}

pub fn write_outputs(
    dir: &Path,
    name: &str,
    table: &ResultTable,
    overrides: Vec<String>,
    runtime_seconds: f64,
) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = output_paths(dir, name);
    std::fs::write(&paths.csv, to_csv(table))?;
    let summary = RunSummary::new(name, table, overrides, runtime_seconds, &paths.csv);
    std::fs::write(&paths.summary, summary.to_json() + "\n")?;
    Ok(paths)
}
