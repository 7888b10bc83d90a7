//! Reflection profiles: amplitude response, cascaded gain, the three phase
//! design strategies and uniform phase quantization.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::scenario::{an_group_size, AmplitudeModel, AnGroupChannel, PrenullInit, Quantization};

/// What produced a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Matched,
    Prenull,
    AnPartition { an_elements: usize },
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub source: ProfileSource,
    pub quantization: Quantization,
    /// Elements whose steering channel product was exactly zero; their phase is 0.
    pub degenerate_elements: usize,
}

/// Reflection vector `psi_i = beta_i * exp(j theta_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisProfile {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub provenance: Provenance,
}

impl RisProfile {
    /// Builds a profile from phases, taking amplitudes from `model`.
    pub fn from_phases(theta: Vec<f64>, model: &AmplitudeModel, source: ProfileSource) -> Self {
        let theta: Vec<f64> = theta.into_iter().map(wrap_phase).collect();
        let beta: Vec<f64> = theta.iter().map(|&t| amplitude(model, t)).collect();
        let psi = theta
            .iter()
            .zip(&beta)
            .map(|(&t, &b)| Complex64::from_polar(b, t))
            .collect();
        RisProfile {
            theta,
            beta,
            psi,
            provenance: Provenance {
                source,
                quantization: Quantization::None,
                degenerate_elements: 0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// Maps any angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Absolute angular distance on the circle, for inputs already in `[-pi, pi]`.
fn circular_distance(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d.abs()
}

/// Reflection amplitude at phase `theta`.
pub fn amplitude(model: &AmplitudeModel, theta: f64) -> f64 {
    if model.is_unit() {
        return 1.0;
    }
    match *model {
        AmplitudeModel::Ideal => 1.0,
        AmplitudeModel::Practical {
            beta_min,
            phi,
            alpha,
        } => {
            let base = ((theta - phi).sin() + 1.0) / 2.0;
            // sin overshoot by an ulp must not push the base past [0, 1]
            (1.0 - beta_min) * base.clamp(0.0, 1.0).powf(alpha) + beta_min
        }
    }
}

/// `sum_i a_i * psi_i * b_i`.
pub fn cascaded_gain(psi: &[Complex64], a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if psi.len() != a.len() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: a.len(),
        });
    }
    if psi.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: b.len(),
        });
    }
    Ok(cascade(psi, a, b))
}

pub(crate) fn cascade(psi: &[Complex64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    psi.iter().zip(a).zip(b).map(|((p, x), y)| x * p * y).sum()
}

fn steer_phases(a: &[Complex64], b: &[Complex64], out: &mut [f64]) -> usize {
    let mut degenerate = 0;
    for ((t, x), y) in out.iter_mut().zip(a).zip(b) {
        let prod = x * y;
        if prod == Complex64::new(0.0, 0.0) {
            *t = 0.0;
            degenerate += 1;
        } else {
            *t = wrap_phase(-prod.arg());
        }
    }
    degenerate
}

/// Co-phases every reflected path at the receiver: `theta_i = -arg(h_i g_i)`.
pub fn design_matched(ch: &ChannelRealization, model: &AmplitudeModel) -> RisProfile {
    let mut theta = vec![0.0; ch.len()];
    let degenerate = steer_phases(&ch.h, &ch.g, &mut theta);
    let mut p = RisProfile::from_phases(theta, model, ProfileSource::Matched);
    p.provenance.degenerate_elements = degenerate;
    p
}

/// Outcome of the pre-nulling iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NullingReport {
    pub profile: RisProfile,
    /// Projection/normalization rounds performed.
    pub iterations: usize,
    /// Leakage ratio `|xi^T psi|^2 / (||xi||^2 N)` of the unit-modulus iterate.
    pub residual: f64,
    /// Leakage ratio of the initial point followed by one entry per round.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("pre-nulling stopped at residual {} after {} iterations", .0.residual, .0.iterations)]
pub struct PrenullFailed(pub NullingReport);

/// Leakage ratio of `psi` against `xi`; zero when `xi` vanishes.
pub fn leakage_ratio(xi: &[Complex64], psi: &[Complex64]) -> f64 {
    let norm: f64 = xi.iter().map(Complex64::norm_sqr).sum();
    if norm == 0.0 {
        return 0.0;
    }
    let inner: Complex64 = xi.iter().zip(psi).map(|(x, p)| x * p).sum();
    inner.norm_sqr() / (norm * xi.len() as f64)
}

/// Unit-modulus starting point for [`design_prenull`].
pub fn prenull_start<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    init: PrenullInit,
    rng: &mut R,
) -> Vec<Complex64> {
    match init {
        PrenullInit::Matched => {
            let mut theta = vec![0.0; ch.len()];
            steer_phases(&ch.h, &ch.g, &mut theta);
            theta
                .into_iter()
                .map(|t| Complex64::from_polar(1.0, t))
                .collect()
        }
        PrenullInit::Random => (0..ch.len())
            .map(|_| Complex64::from_polar(1.0, rng.random_range(-PI..PI)))
            .collect(),
    }
}

/// Finds a unit-modulus `psi` with `xi^T psi = 0`, `xi_i = h_i k_i`, by
/// alternating orthogonal projection onto the null hyperplane and
/// element-wise normalization, starting from `start`.
///
/// Amplitudes from `model` are applied only to the returned profile; the
/// iteration itself runs on unit-modulus vectors.
#[allow(clippy::result_large_err)]
pub fn design_prenull(
    ch: &ChannelRealization,
    model: &AmplitudeModel,
    tolerance: f64,
    max_iters: usize,
    start: &[Complex64],
) -> std::result::Result<NullingReport, PrenullFailed> {
    let xi = ch.leakage();
    let n = xi.len();
    let norm: f64 = xi.iter().map(Complex64::norm_sqr).sum();
    let xi_conj: Vec<Complex64> = xi.iter().map(Complex64::conj).collect();
    let mut psi: Vec<Complex64> = start.to_vec();
    let mut residual = leakage_ratio(&xi, &psi);
    let mut history = vec![residual];
    let mut iterations = 0;

    while residual > tolerance && iterations < max_iters {
        let inner: Complex64 = xi.iter().zip(&psi).map(|(x, p)| x * p).sum();
        let coef = inner / norm;
        for (p, xc) in psi.iter_mut().zip(&xi_conj) {
            let projected = *p - xc * coef;
            let mag = projected.norm();
            if mag > 0.0 {
                *p = projected / mag;
            }
            // a zero entry keeps its previous phase
        }
        iterations += 1;
        residual = leakage_ratio(&xi, &psi);
        history.push(residual);
    }

    let theta: Vec<f64> = psi.iter().map(|p| p.arg()).collect();
    let mut profile = RisProfile::from_phases(theta, model, ProfileSource::Prenull);
    if model.is_unit() {
        profile.psi = psi;
    }
    debug_assert_eq!(profile.len(), n);
    let report = NullingReport {
        profile,
        iterations,
        residual,
        history,
    };
    if residual <= tolerance {
        Ok(report)
    } else {
        Err(PrenullFailed(report))
    }
}

/// Splits the surface: the first `round(rho N)` elements beam AN at the
/// eavesdropper, the rest beam information at the receiver.
pub fn design_an_partition(
    ch: &ChannelRealization,
    model: &AmplitudeModel,
    rho: f64,
    group_channel: AnGroupChannel,
) -> Result<RisProfile> {
    let n = ch.len();
    let n_an = an_group_size(rho, n);
    let an_source: &[Complex64] = match group_channel {
        AnGroupChannel::InfoAntenna => &ch.h,
        AnGroupChannel::AnAntenna => ch
            .h_an
            .as_deref()
            .ok_or_else(|| Error::Config("AN antenna channel missing from realization".into()))?,
    };
    if an_source.len() != n {
        return Err(Error::LengthMismatch {
            left: an_source.len(),
            right: n,
        });
    }
    let mut theta = vec![0.0; n];
    let mut degenerate = steer_phases(&an_source[..n_an], &ch.k[..n_an], &mut theta[..n_an]);
    degenerate += steer_phases(&ch.h[n_an..], &ch.g[n_an..], &mut theta[n_an..]);
    let mut p = RisProfile::from_phases(
        theta,
        model,
        ProfileSource::AnPartition { an_elements: n_an },
    );
    p.provenance.degenerate_elements = degenerate;
    Ok(p)
}

/// Uniform `2^b`-point codebook `{-pi + (2k+1) pi / 2^b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseCodebook {
    levels: usize,
}

impl PhaseCodebook {
    pub fn new(bits: u8) -> Result<Self> {
        if !(1..=8).contains(&bits) {
            return Err(Error::Domain {
                what: "quantization bits",
                value: f64::from(bits),
            });
        }
        Ok(Self { levels: 1 << bits })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn codeword(&self, k: usize) -> f64 {
        let m = self.levels as f64;
        (2.0 * k as f64 + 1.0 - m) * PI / m
    }

    pub fn codewords(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.codeword(k)).collect()
    }

    /// Largest distance from any phase to its codeword.
    pub fn max_error(&self) -> f64 {
        PI / self.levels as f64
    }

    /// Index of the nearest codeword in wrapped distance; ties go to the
    /// smaller index.
    pub fn nearest(&self, theta: f64) -> usize {
        let theta = wrap_phase(theta);
        let m = self.levels as i64;
        let pos = ((theta + PI) * self.levels as f64 / (2.0 * PI)).floor() as i64;
        let mut cands = [
            (pos - 1).rem_euclid(m),
            pos.rem_euclid(m),
            (pos + 1).rem_euclid(m),
        ];
        cands.sort_unstable();
        let mut best = cands[0] as usize;
        let mut best_d = circular_distance(theta, self.codeword(best));
        for &c in &cands[1..] {
            let d = circular_distance(theta, self.codeword(c as usize));
            if d < best_d {
                best = c as usize;
                best_d = d;
            }
        }
        best
    }

    pub fn quantize(&self, theta: f64) -> f64 {
        self.codeword(self.nearest(theta))
    }
}

/// Snaps every phase of `p` to the `bits`-bit codebook and recomputes the
/// amplitudes under `model`.
pub fn quantize_phases(p: &RisProfile, model: &AmplitudeModel, bits: u8) -> Result<RisProfile> {
    let book = PhaseCodebook::new(bits)?;
    let theta = p.theta.iter().map(|&t| book.quantize(t)).collect();
    let mut q = RisProfile::from_phases(theta, model, p.provenance.source);
    q.provenance = Provenance {
        quantization: Quantization::Bits(bits),
        ..p.provenance
    };
    Ok(q)
}

/// Applies the scenario's quantization setting, if any.
pub fn apply_quantization(
    p: RisProfile,
    model: &AmplitudeModel,
    q: Quantization,
) -> Result<RisProfile> {
    match q {
        Quantization::None => Ok(p),
        Quantization::Bits(b) => quantize_phases(&p, model, b),
    }
}
