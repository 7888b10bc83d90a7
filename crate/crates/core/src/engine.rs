//! Seeded Monte-Carlo sweeps.
//!
//! Trial `t` of an axis point draws everything from substream
//! `(seed, stream key, t)`. With common random numbers on, the stream key is
//! the same for every axis point; otherwise it is derived from the axis index.
//! Series at one axis point always share channels. Trials run on a rayon pool
//! and are collected in trial order, so results do not depend on the worker
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channels, trial_rng};
use crate::error::{Error, Result};
use crate::ris::{
    apply_quantization, design_an_partition, design_matched, design_prenull, prenull_start,
    PrenullFailed, RisProfile,
};
use crate::scenario::{
    validate, AmplitudeModel, DesignStrategy, Quantization, Scenario, ValidatedScenario,
};
use crate::secrecy::{
    aggregate, secure_power, LinkBudget, SecrecySample, SecrecyStats, TrialGains,
};

/// Scenario field varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    DTr,
    Rho,
    Mu,
    Bits,
    Gamma,
    Model,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::DTr => "d_tr",
            Axis::Rho => "rho",
            Axis::Mu => "mu",
            Axis::Bits => "bits",
            Axis::Gamma => "gamma",
            Axis::Model => "model",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Bits(Quantization),
    Model(AmplitudeModel),
}

/// Curve families run at every axis point (cartesian product, in field order).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model: Vec<AmplitudeModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bits: Vec<Quantization>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<f64>,
}

/// One member of the series product; `None` keeps the base scenario value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Series {
    pub model: Option<AmplitudeModel>,
    pub bits: Option<Quantization>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
}

fn or_keep<T: Copy>(v: &[T]) -> Vec<Option<T>> {
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().copied().map(Some).collect()
    }
}

impl SeriesSpec {
    pub fn expand(&self) -> Vec<Series> {
        let mut out = Vec::new();
        for model in or_keep(&self.model) {
            for bits in or_keep(&self.bits) {
                for gamma in or_keep(&self.gamma) {
                    for mu in or_keep(&self.mu) {
                        out.push(Series {
                            model,
                            bits,
                            gamma,
                            mu,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    /// Common random numbers across axis points.
    pub crn: bool,
    #[serde(default)]
    pub series: SeriesSpec,
}

/// Run-wide knobs that are not part of the physical scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub c_target: f64,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    pub secure_power: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            c_target: 1.0,
            workers: 0,
            secure_power: true,
        }
    }
}

fn mismatch(axis: Axis, v: &AxisValue) -> Error {
    Error::Config(format!("axis `{}` cannot take value {v:?}", axis.name()))
}

fn set_mu(s: &mut Scenario, value: f64) -> Result<()> {
    match &mut s.strategy {
        DesignStrategy::AnPartition { mu, .. } => {
            *mu = value;
            Ok(())
        }
        _ => Err(Error::Config(
            "mu applies only to the an_partition strategy".into(),
        )),
    }
}

/// Applies one axis value to a scenario.
pub fn apply_axis(s: &mut Scenario, axis: Axis, v: &AxisValue) -> Result<()> {
    match (axis, v) {
        (Axis::N, AxisValue::Number(x)) => {
            if x.fract() != 0.0 || *x < 0.0 {
                return Err(mismatch(axis, v));
            }
            s.ris.n_elements = *x as usize;
        }
        (Axis::DTr, AxisValue::Number(x)) => s.topology.d_tr = *x,
        (Axis::Gamma, AxisValue::Number(x)) => s.radio.gamma = *x,
        (Axis::Mu, AxisValue::Number(x)) => set_mu(s, *x)?,
        (Axis::Rho, AxisValue::Number(x)) => match &mut s.strategy {
            DesignStrategy::AnPartition { rho, .. } => *rho = *x,
            _ => {
                return Err(Error::Config(
                    "rho applies only to the an_partition strategy".into(),
                ))
            }
        },
        (Axis::Bits, AxisValue::Bits(q)) => s.ris.quantization = *q,
        (Axis::Bits, AxisValue::Number(x)) if x.fract() == 0.0 && (0.0..=255.0).contains(x) => {
            s.ris.quantization = Quantization::Bits(*x as u8)
        }
        (Axis::Model, AxisValue::Model(m)) => s.ris.amplitude = *m,
        _ => return Err(mismatch(axis, v)),
    }
    Ok(())
}

pub fn apply_series(s: &mut Scenario, series: &Series) -> Result<()> {
    if let Some(m) = series.model {
        s.ris.amplitude = m;
    }
    if let Some(q) = series.bits {
        s.ris.quantization = q;
    }
    if let Some(g) = series.gamma {
        s.radio.gamma = g;
    }
    if let Some(mu) = series.mu {
        set_mu(s, mu)?;
    }
    Ok(())
}

/// Pre-nulling diagnostics of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullingDiag {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sample: SecrecySample,
    pub gains: TrialGains,
    pub nulling: Option<NullingDiag>,
}

/// Designs the reflection profile for one realization.
pub fn design_for_trial<R: rand::Rng + ?Sized>(
    s: &ValidatedScenario,
    ch: &crate::channel::ChannelRealization,
    rng: &mut R,
) -> Result<(RisProfile, Option<NullingDiag>)> {
    let model = &s.ris.amplitude;
    let (profile, diag) = match s.strategy {
        DesignStrategy::Matched => (design_matched(ch, model), None),
        DesignStrategy::Prenull {
            tolerance,
            max_iters,
            init,
        } => {
            let start = prenull_start(ch, init, rng);
            let (report, converged) = match design_prenull(ch, model, tolerance, max_iters, &start)
            {
                Ok(r) => (r, true),
                Err(PrenullFailed(r)) => (r, false),
            };
            let diag = NullingDiag {
                converged,
                iterations: report.iterations,
                residual: report.residual,
            };
            (report.profile, Some(diag))
        }
        DesignStrategy::AnPartition {
            rho, group_channel, ..
        } => (design_an_partition(ch, model, rho, group_channel)?, None),
    };
    Ok((
        apply_quantization(profile, model, s.ris.quantization)?,
        diag,
    ))
}

/// Runs one trial end to end from its own substream.
pub fn run_trial(
    s: &ValidatedScenario,
    seed: u64,
    stream_key: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, stream_key, trial);
    let ch = draw_channels(s, &mut rng);
    let (profile, nulling) = design_for_trial(s, &ch, &mut rng)?;
    let gains = TrialGains::new(&ch, &profile);
    Ok(TrialOutcome {
        sample: LinkBudget::for_scenario(s).evaluate(&gains),
        gains,
        nulling,
    })
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `trials` trials and returns them in trial order.
pub fn run_trials_parallel(
    point: &ValidatedScenario,
    trials: usize,
    seed: u64,
    stream_key: u64,
    workers: usize,
) -> Result<Vec<TrialOutcome>> {
    with_pool(workers, || {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(point, seed, stream_key, t))
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: AxisValue,
    pub strategy: &'static str,
    pub model: &'static str,
    pub quantization: Quantization,
    pub gamma: f64,
    pub mu: Option<f64>,
    pub stats: SecrecyStats,
    pub prenull_failures: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetadata {
    pub seed: u64,
    pub trials: usize,
    pub crn: bool,
    pub scenario_hash: String,
    pub tool_version: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis: Axis,
    pub rows: Vec<ResultRow>,
    pub metadata: TableMetadata,
}

impl ResultTable {
    pub fn total_prenull_failures(&self) -> usize {
        self.rows.iter().map(|r| r.prenull_failures).sum()
    }
}

/// Stream key of axis point `index`.
pub fn stream_key(crn: bool, index: usize) -> u64 {
    if crn {
        0
    } else {
        index as u64 + 1
    }
}

/// Runs every (series, axis value) point and aggregates each.
pub fn run_sweep(
    base: &ValidatedScenario,
    spec: &SweepSpec,
    opts: &RunOptions,
    scenario_hash: String,
) -> Result<ResultTable> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep has no axis values".into()));
    }
    let series = spec.series.expand();
    // validate every point before running any
    let mut points = Vec::with_capacity(series.len() * spec.values.len());
    for sr in &series {
        for (i, v) in spec.values.iter().enumerate() {
            let mut s = base.scenario().clone();
            apply_series(&mut s, sr)?;
            apply_axis(&mut s, spec.axis, v)?;
            points.push((validate(s)?, i, v.clone()));
        }
    }

    let mut rows = Vec::with_capacity(points.len());
    for (point, axis_index, axis_value) in points {
        let key = stream_key(spec.crn, axis_index);
        let outcomes = run_trials_parallel(&point, point.trials, point.seed, key, opts.workers)?;
        let samples: Vec<SecrecySample> = outcomes.iter().map(|o| o.sample).collect();
        let mut stats = aggregate(&samples, opts.c_target, &point)?;
        if opts.secure_power {
            let gains: Vec<TrialGains> = outcomes.iter().map(|o| o.gains).collect();
            stats.secure_power = Some(secure_power(&point, opts.c_target, &gains));
        }
        let prenull_failures = outcomes
            .iter()
            .filter(|o| o.nulling.is_some_and(|d| !d.converged))
            .count();
        rows.push(ResultRow {
            axis_value,
            strategy: point.strategy.label(),
            model: point.ris.amplitude.label(),
            quantization: point.ris.quantization,
            gamma: point.radio.gamma,
            mu: point.strategy.mu(),
            stats,
            prenull_failures,
            seed: point.seed,
        });
    }

    Ok(ResultTable {
        axis: spec.axis,
        rows,
        metadata: TableMetadata {
            seed: base.seed,
            trials: base.trials,
            crn: spec.crn,
            scenario_hash,
            tool_version: env!("CARGO_PKG_VERSION"),
        },
    })
}
