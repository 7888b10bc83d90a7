//! Rayleigh block-fading channels with distance-based path loss.
//!
//! Every trial owns a ChaCha substream keyed by `(seed, stream key)` with the
//! trial index as the stream id, so a realization is a pure function of the
//! scenario and the trial index. Coefficients are drawn element by element in
//! the fixed order `h_i, h_an_i, g_i, k_i`; element `i` is therefore the same
//! for every surface size and every strategy that shares the substream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{
    db_to_linear, derive_geometry, DesignStrategy, RadioParams, ValidatedScenario,
};

/// `L(d) = c0 * (d / d0)^(-gamma)` on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub c0_linear: f64,
    pub d0: f64,
    pub gamma: f64,
}

impl PathLossModel {
    pub fn from_radio(r: &RadioParams) -> Self {
        Self {
            c0_linear: db_to_linear(r.c0_db),
            d0: r.d0,
            gamma: r.gamma,
        }
    }
}

/// Linear power gain of a link of length `d` meters.
pub fn path_loss(m: &PathLossModel, d: f64) -> Result<f64> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::Domain {
            what: "link distance",
            value: d,
        });
    }
    if d == m.d0 {
        return Ok(m.c0_linear);
    }
    Ok(m.c0_linear * (d / m.d0).powf(-m.gamma))
}

/// One block-fading draw. Path loss is already folded into every coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Information antenna to each element.
    pub h: Vec<Complex64>,
    /// AN antenna to each element; present only under the AN strategy.
    pub h_an: Option<Vec<Complex64>>,
    /// Each element to the receiver.
    pub g: Vec<Complex64>,
    /// Each element to the eavesdropper.
    pub k: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Per-element eavesdropper leakage `h_i * k_i`.
    pub fn leakage(&self) -> Vec<Complex64> {
        self.h.iter().zip(&self.k).map(|(h, k)| h * k).collect()
    }
}

/// Explicit coefficients from a scenario file, used verbatim for every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelOverride {
    pub h: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_an: Option<Vec<Complex64>>,
    pub g: Vec<Complex64>,
    pub k: Vec<Complex64>,
}

impl From<&ChannelOverride> for ChannelRealization {
    fn from(o: &ChannelOverride) -> Self {
        ChannelRealization {
            h: o.h.clone(),
            h_an: o.h_an.clone(),
            g: o.g.clone(),
            k: o.k.clone(),
        }
    }
}

/// Deterministic generator for trial `trial` of stream `stream_key`.
pub fn trial_rng(seed: u64, stream_key: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_key.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Per-link amplitude scales `sqrt(L(d))` for `h`, `g`, `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkScales {
    pub h: f64,
    pub g: f64,
    pub k: f64,
}

impl LinkScales {
    pub fn for_scenario(s: &ValidatedScenario) -> Self {
        let geo = derive_geometry(&s.topology);
        let m = PathLossModel::from_radio(&s.radio);
        // validated distances are positive, so path_loss cannot fail here
        let pl = |d: f64| path_loss(&m, d).map(f64::sqrt).unwrap_or(0.0);
        LinkScales {
            h: pl(geo.d_t_ris),
            g: pl(geo.d_ris_rx),
            k: pl(geo.d_ris_ev),
        }
    }
}

/// Builds a realization from an arbitrary unit-variance fading source.
///
/// The source is called four times per element in the order `h, h_an, g, k`.
/// `h_an` is always consumed so the stream layout does not depend on the
/// strategy; it is kept only under the AN strategy.
pub fn draw_channels_with<F>(s: &ValidatedScenario, mut fading: F) -> ChannelRealization
where
    F: FnMut() -> Complex64,
{
    if let Some(ov) = &s.channel_override {
        return ov.into();
    }
    let n = s.ris.n_elements;
    let scale = LinkScales::for_scenario(s);
    let keep_an = matches!(s.strategy, DesignStrategy::AnPartition { .. });
    let mut h = Vec::with_capacity(n);
    let mut h_an = Vec::with_capacity(if keep_an { n } else { 0 });
    let mut g = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    for _ in 0..n {
        h.push(fading() * scale.h);
        let an = fading() * scale.h;
        if keep_an {
            h_an.push(an);
        }
        g.push(fading() * scale.g);
        k.push(fading() * scale.k);
    }
    ChannelRealization {
        h,
        h_an: keep_an.then_some(h_an),
        g,
        k,
    }
}

/// Rayleigh draw for one trial.
pub fn draw_channels<R: Rng + ?Sized>(s: &ValidatedScenario, rng: &mut R) -> ChannelRealization {
    draw_channels_with(s, || complex_gaussian(rng))
}
