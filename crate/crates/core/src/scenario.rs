//! Experiment description: geometry, radio constants, surface configuration
//! and the reflection design strategy.
//!
//! A [`Scenario`] is checked once by [`validate`], which reports every violated
//! invariant together, and is immutable afterwards. [`ValidatedScenario`] is
//! the only form the simulation routines accept.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::ChannelOverride;
use crate::error::{Error, Result, Violation, Violations};

/// Converts a dBm figure to watts (`10^(x/10)` milliwatts).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Line topology: transmitter, eavesdropper and receiver on one line, the
/// surface on a parallel line `d_v` meters away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    /// Vertical distance between the two lines, meters.
    pub d_v: f64,
    /// Transmitter to receiver, meters.
    pub d_tl: f64,
    /// Transmitter to eavesdropper, meters.
    pub d_te: f64,
    /// Horizontal transmitter to surface offset, meters.
    pub d_tr: f64,
    /// Closed interval `d_tr` must fall in.
    pub d_tr_domain: [f64; 2],
}

/// Link distances derived from a [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub d_t_ris: f64,
    pub d_ris_rx: f64,
    pub d_ris_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    /// Noise variance at both receivers, dBm.
    pub noise_power_dbm: f64,
    /// Path loss at the reference distance, dB.
    pub c0_db: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Path-loss exponent.
    pub gamma: f64,
}

impl RadioParams {
    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }
}

/// Reflection amplitude as a function of the programmed phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeModel {
    /// Unit amplitude at every phase.
    Ideal,
    /// `(1 - beta_min) * ((sin(theta - phi) + 1) / 2)^alpha + beta_min`.
    Practical { beta_min: f64, phi: f64, alpha: f64 },
}

impl AmplitudeModel {
    /// The non-ideal response used throughout the reference experiments.
    pub const REFERENCE_PRACTICAL: AmplitudeModel = AmplitudeModel::Practical {
        beta_min: 0.5,
        phi: std::f64::consts::FRAC_PI_2,
        alpha: 2.0,
    };

    /// True when the model yields unit amplitude for every phase.
    pub fn is_unit(&self) -> bool {
        match *self {
            AmplitudeModel::Ideal => true,
            AmplitudeModel::Practical {
                beta_min, alpha, ..
            } => beta_min == 1.0 || alpha == 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AmplitudeModel::Ideal => "ideal",
            AmplitudeModel::Practical { .. } => "practical",
        }
    }
}

/// Phase resolution of the surface controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Quantization {
    /// Continuous phases.
    #[default]
    None,
    /// `b`-bit uniform codebook, `1 <= b <= 8`.
    Bits(u8),
}

impl Quantization {
    pub fn label(&self) -> String {
        match self {
            Quantization::None => "inf".to_string(),
            Quantization::Bits(b) => b.to_string(),
        }
    }
}

impl fmt::Display for Quantization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Quantization {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Quantization::None => s.serialize_str("inf"),
            Quantization::Bits(b) => s.serialize_i64(i64::from(*b)),
        }
    }
}

impl<'de> Deserialize<'de> for Quantization {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Quantization;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a bit count 1..=8 or \"inf\"/\"none\"")
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                u8::try_from(v)
                    .map(Quantization::Bits)
                    .map_err(|_| E::custom(format!("bit count {v} out of range")))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                u8::try_from(v)
                    .map(Quantization::Bits)
                    .map_err(|_| E::custom(format!("bit count {v} out of range")))
            }

            fn visit_str<E: serde::de::Error>(
                self,
                v: &str,
            ) -> std::result::Result<Self::Value, E> {
                match v {
                    "inf" | "none" => Ok(Quantization::None),
                    other => other
                        .parse::<u8>()
                        .map(Quantization::Bits)
                        .map_err(|_| E::custom(format!("unknown quantization `{other}`"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisConfig {
    pub n_elements: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: AmplitudeModel,
    #[serde(default)]
    pub quantization: Quantization,
}

fn default_amplitude() -> AmplitudeModel {
    AmplitudeModel::Ideal
}

/// Starting point of the pre-nulling iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrenullInit {
    /// Uniform random phases drawn from the trial's substream.
    #[default]
    Random,
    /// The matched-phase design.
    Matched,
}

/// Which transmit antenna's surface channel steers the AN group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnGroupChannel {
    #[default]
    AnAntenna,
    InfoAntenna,
}

pub const DEFAULT_PRENULL_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_PRENULL_MAX_ITERS: usize = 1000;

fn default_tolerance() -> f64 {
    DEFAULT_PRENULL_TOLERANCE
}

fn default_max_iters() -> usize {
    DEFAULT_PRENULL_MAX_ITERS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignStrategy {
    /// Co-phase every reflected path at the receiver.
    Matched,
    /// Null the information signal at the eavesdropper.
    Prenull {
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
        #[serde(default)]
        init: PrenullInit,
    },
    /// Split power between information and artificial noise and split the
    /// surface into an AN group and an information group.
    AnPartition {
        /// Fraction of transmit power carried by the information signal.
        mu: f64,
        /// Fraction of elements reflecting AN towards the eavesdropper.
        rho: f64,
        #[serde(default)]
        group_channel: AnGroupChannel,
        #[serde(default)]
        an_nulls_receiver: bool,
    },
}

impl DesignStrategy {
    pub fn prenull() -> Self {
        DesignStrategy::Prenull {
            tolerance: DEFAULT_PRENULL_TOLERANCE,
            max_iters: DEFAULT_PRENULL_MAX_ITERS,
            init: PrenullInit::Random,
        }
    }

    pub fn an_partition(mu: f64, rho: f64) -> Self {
        DesignStrategy::AnPartition {
            mu,
            rho,
            group_channel: AnGroupChannel::AnAntenna,
            an_nulls_receiver: false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DesignStrategy::Matched => "matched",
            DesignStrategy::Prenull { .. } => "prenull",
            DesignStrategy::AnPartition { .. } => "an_partition",
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match *self {
            DesignStrategy::AnPartition { mu, .. } => Some(mu),
            _ => None,
        }
    }
}

/// Number of elements in the AN group: `round(rho * n)`, halves rounding up.
pub fn an_group_size(rho: f64, n: usize) -> usize {
    ((rho * n as f64).round().max(0.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub radio: RadioParams,
    pub ris: RisConfig,
    pub strategy: DesignStrategy,
    pub trials: usize,
    pub seed: u64,
    /// Fixed channel coefficients used for every trial instead of fading draws.
    pub channel_override: Option<ChannelOverride>,
}

impl Scenario {
    /// Reference experiment: 50 ideal elements at `d_tr = 10` m, gamma 3.0,
    /// matched phases, no quantization.
    pub fn baseline() -> Self {
        Scenario {
            topology: Topology {
                d_v: 10.0,
                d_tl: 20.0,
                d_te: 15.0,
                d_tr: 10.0,
                d_tr_domain: [5.0, 19.0],
            },
            radio: RadioParams {
                tx_power_dbm: 20.0,
                noise_power_dbm: -100.0,
                c0_db: -30.0,
                d0: 1.0,
                gamma: 3.0,
            },
            ris: RisConfig {
                n_elements: 50,
                amplitude: AmplitudeModel::Ideal,
                quantization: Quantization::None,
            },
            strategy: DesignStrategy::Matched,
            trials: 10_000,
            seed: 1,
            channel_override: None,
        }
    }
}

/// A scenario whose invariants have all been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario(Scenario);

impl ValidatedScenario {
    pub fn into_inner(self) -> Scenario {
        self.0
    }

    pub fn scenario(&self) -> &Scenario {
        &self.0
    }
}

impl Deref for ValidatedScenario {
    type Target = Scenario;

    fn deref(&self) -> &Scenario {
        &self.0
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate(s: Scenario) -> Result<ValidatedScenario> {
    let violations = collect_violations(&s);
    if violations.is_empty() {
        Ok(ValidatedScenario(s))
    } else {
        Err(Error::Validation(Violations(violations)))
    }
}

fn positive(out: &mut Vec<Violation>, field: &str, v: f64) {
    if !v.is_finite() {
        out.push(Violation::new(field, "must be finite"));
    } else if v <= 0.0 {
        out.push(Violation::new(field, "must be positive"));
    }
}

fn finite(out: &mut Vec<Violation>, field: &str, v: f64) {
    if !v.is_finite() {
        out.push(Violation::new(field, "must be finite"));
    }
}

fn collect_violations(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let t = &s.topology;
    positive(&mut out, "d_v", t.d_v);
    positive(&mut out, "d_tl", t.d_tl);
    positive(&mut out, "d_te", t.d_te);
    positive(&mut out, "d_tr", t.d_tr);
    if t.d_te.is_finite() && t.d_tl.is_finite() && t.d_te >= t.d_tl {
        out.push(Violation::new("d_te", "must be less than d_tl"));
    }
    let [lo, hi] = t.d_tr_domain;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        out.push(Violation::new(
            "d_tr_domain",
            "must be a finite [low, high] pair",
        ));
    } else if t.d_tr.is_finite() && !(lo..=hi).contains(&t.d_tr) {
        out.push(Violation::new("d_tr", format!("outside [{lo},{hi}]")));
    }

    let r = &s.radio;
    finite(&mut out, "tx_power_dbm", r.tx_power_dbm);
    finite(&mut out, "noise_power_dbm", r.noise_power_dbm);
    finite(&mut out, "c0_db", r.c0_db);
    positive(&mut out, "d0", r.d0);
    if !(r.gamma.is_finite() && r.gamma >= 2.0) {
        out.push(Violation::new("gamma", "must be at least 2.0"));
    }

    let ris = &s.ris;
    if ris.n_elements == 0 {
        out.push(Violation::new("n_elements", "must be positive"));
    }
    if let AmplitudeModel::Practical {
        beta_min,
        phi,
        alpha,
    } = ris.amplitude
    {
        if !(0.0..=1.0).contains(&beta_min) {
            out.push(Violation::new("beta_min", "outside [0,1]"));
        }
        finite(&mut out, "phi", phi);
        if !(alpha.is_finite() && alpha >= 0.0) {
            out.push(Violation::new("alpha", "must be non-negative"));
        }
    }
    if let Quantization::Bits(b) = ris.quantization {
        if !(1..=8).contains(&b) {
            out.push(Violation::new("quantization", "bits outside [1,8]"));
        }
    }

    match s.strategy {
        DesignStrategy::Matched => {}
        DesignStrategy::Prenull {
            tolerance,
            max_iters,
            ..
        } => {
            positive(&mut out, "tolerance", tolerance);
            if max_iters == 0 {
                out.push(Violation::new("max_iters", "must be positive"));
            }
            if ris.n_elements < 2 {
                out.push(Violation::new(
                    "n_elements",
                    "pre-nulling needs at least 2 elements",
                ));
            }
        }
        DesignStrategy::AnPartition { mu, rho, .. } => {
            if !(mu > 0.0 && mu < 1.0) {
                out.push(Violation::new("mu", "outside (0,1)"));
            }
            if !(0.0..=1.0).contains(&rho) {
                out.push(Violation::new("rho", "outside [0,1]"));
            }
        }
    }

    if s.trials == 0 {
        out.push(Violation::new("trials", "must be positive"));
    }

    if let Some(ov) = &s.channel_override {
        let n = ris.n_elements;
        for (name, len) in [("h", ov.h.len()), ("g", ov.g.len()), ("k", ov.k.len())] {
            if len != n {
                out.push(Violation::new(
                    format!("channel_override.{name}"),
                    format!("length {len} differs from n_elements {n}"),
                ));
            }
        }
        match (&ov.h_an, &s.strategy) {
            (Some(h_an), _) if h_an.len() != n => out.push(Violation::new(
                "channel_override.h_an",
                format!("length {} differs from n_elements {n}", h_an.len()),
            )),
            (None, DesignStrategy::AnPartition { .. }) => out.push(Violation::new(
                "channel_override.h_an",
                "required under an_partition",
            )),
            _ => {}
        }
    }
    out
}

/// Transmitter, receiver and eavesdropper distances to the surface.
pub fn derive_geometry(t: &Topology) -> Geometry {
    Geometry {
        d_t_ris: t.d_tr.hypot(t.d_v),
        d_ris_rx: (t.d_tl - t.d_tr).hypot(t.d_v),
        d_ris_ev: (t.d_te - t.d_tr).hypot(t.d_v),
    }
}
