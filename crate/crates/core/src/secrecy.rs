//! Per-trial SINRs and secrecy rate, and the outage-style metrics aggregated
//! over a trial set.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::ris::{cascade, RisProfile};
use crate::scenario::{dbm_to_watts, DesignStrategy, Scenario};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Cascaded gains of one trial. Designs depend only on channels, so these
/// four numbers are enough to re-evaluate the trial at any transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialGains {
    pub info_rx: Complex64,
    pub info_ev: Complex64,
    pub an_rx: Complex64,
    pub an_ev: Complex64,
}

impl TrialGains {
    pub fn new(ch: &ChannelRealization, p: &RisProfile) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let (an_rx, an_ev) = match &ch.h_an {
            Some(h_an) => (cascade(&p.psi, h_an, &ch.g), cascade(&p.psi, h_an, &ch.k)),
            None => (zero, zero),
        };
        TrialGains {
            info_rx: cascade(&p.psi, &ch.h, &ch.g),
            info_ev: cascade(&p.psi, &ch.h, &ch.k),
            an_rx,
            an_ev,
        }
    }
}

/// Power split and noise shared by every trial of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_watts: f64,
    pub noise_watts: f64,
    /// Information share of transmit power; `None` means no AN.
    pub info_share: Option<f64>,
    pub an_nulls_receiver: bool,
}

impl LinkBudget {
    pub fn for_scenario(s: &Scenario) -> Self {
        let (info_share, an_nulls_receiver) = match s.strategy {
            DesignStrategy::AnPartition {
                mu,
                an_nulls_receiver,
                ..
            } => (Some(mu), an_nulls_receiver),
            _ => (None, false),
        };
        LinkBudget {
            tx_watts: s.radio.tx_power_watts(),
            noise_watts: s.radio.noise_watts(),
            info_share,
            an_nulls_receiver,
        }
    }

    pub fn with_tx_watts(self, tx_watts: f64) -> Self {
        LinkBudget { tx_watts, ..self }
    }

    pub fn evaluate(&self, g: &TrialGains) -> SecrecySample {
        let (sinr_l, sinr_e) = match self.info_share {
            None => (
                self.tx_watts * g.info_rx.norm_sqr() / self.noise_watts,
                self.tx_watts * g.info_ev.norm_sqr() / self.noise_watts,
            ),
            Some(mu) => {
                let info = mu * self.tx_watts;
                let an = (1.0 - mu) * self.tx_watts;
                let rx_interf = if self.an_nulls_receiver {
                    0.0
                } else {
                    an * g.an_rx.norm_sqr()
                };
                (
                    info * g.info_rx.norm_sqr() / (rx_interf + self.noise_watts),
                    info * g.info_ev.norm_sqr() / (an * g.an_ev.norm_sqr() + self.noise_watts),
                )
            }
        };
        SecrecySample::from_sinr(sinr_l, sinr_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecySample {
    pub sinr_l: f64,
    pub sinr_e: f64,
    /// Legitimate rate, bits/s/Hz.
    pub c_l: f64,
    /// Eavesdropper rate, bits/s/Hz.
    pub c_e: f64,
    /// `c_l - c_e` before clamping.
    pub margin: f64,
    /// `max(c_l - c_e, 0)`.
    pub c_s: f64,
}

impl SecrecySample {
    pub fn from_sinr(sinr_l: f64, sinr_e: f64) -> Self {
        let c_l = (1.0 + sinr_l).log2();
        let c_e = (1.0 + sinr_e).log2();
        let margin = c_l - c_e;
        SecrecySample {
            sinr_l,
            sinr_e,
            c_l,
            c_e,
            margin,
            c_s: margin.max(0.0),
        }
    }
}

/// Secrecy sample of one trial under the scenario's power budget.
pub fn evaluate_trial(s: &Scenario, ch: &ChannelRealization, p: &RisProfile) -> SecrecySample {
    LinkBudget::for_scenario(s).evaluate(&TrialGains::new(ch, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecurePower {
    /// Smallest transmit power found, dBm.
    Attained(f64),
    Unattainable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyStats {
    pub trials: usize,
    pub mean_secrecy_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub c_target: f64,
    /// `Pr(c_s < c_target)`.
    pub sop: f64,
    /// `Pr(c_l - c_e <= 0)`.
    pub intercept_prob: f64,
    /// `Pr(c_l - c_e > 0)`.
    pub spsc_prob: f64,
    /// `Pr(c_s >= c_target) = 1 - sop`.
    pub coverage_prob: f64,
    /// Mean secrecy rate per watt of total transmit power.
    pub see: f64,
    pub outage_count: usize,
    pub covered_count: usize,
    pub intercept_count: usize,
    pub positive_count: usize,
    pub secure_power: Option<SecurePower>,
}

/// Folds samples (in the given order) into summary metrics.
pub fn aggregate(samples: &[SecrecySample], c_target: f64, s: &Scenario) -> Result<SecrecyStats> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let nf = n as f64;
    let mean = samples.iter().map(|x| x.c_s).sum::<f64>() / nf;
    let var = if n > 1 {
        samples.iter().map(|x| (x.c_s - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    let half = Z_95 * (var / nf).sqrt();

    let outage_count = samples.iter().filter(|x| x.c_s < c_target).count();
    let covered_count = samples.iter().filter(|x| x.c_s >= c_target).count();
    let intercept_count = samples.iter().filter(|x| x.margin <= 0.0).count();
    let positive_count = samples.iter().filter(|x| x.margin > 0.0).count();
    let sop = outage_count as f64 / nf;
    let intercept_prob = intercept_count as f64 / nf;

    Ok(SecrecyStats {
        trials: n,
        mean_secrecy_rate: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        c_target,
        sop,
        intercept_prob,
        spsc_prob: 1.0 - intercept_prob,
        coverage_prob: 1.0 - sop,
        see: mean / s.radio.tx_power_watts(),
        outage_count,
        covered_count,
        intercept_count,
        positive_count,
        secure_power: None,
    })
}

pub const SECURE_POWER_RANGE_DBM: (f64, f64) = (-20.0, 50.0);
pub const SECURE_POWER_TOLERANCE_DB: f64 = 0.1;

fn mean_rate(budget: &LinkBudget, gains: &[TrialGains]) -> f64 {
    gains.iter().map(|g| budget.evaluate(g).c_s).sum::<f64>() / gains.len() as f64
}

/// Smallest transmit power in [-20, 50] dBm whose mean secrecy rate over the
/// fixed trial set reaches `c_target`, found by bisection to 0.1 dB. The
/// returned power always attains the target.
pub fn secure_power(s: &Scenario, c_target: f64, gains: &[TrialGains]) -> SecurePower {
    let budget = LinkBudget::for_scenario(s);
    let (lo_dbm, hi_dbm) = SECURE_POWER_RANGE_DBM;
    if gains.is_empty() {
        return SecurePower::Unattainable;
    }
    let attains = |dbm: f64| mean_rate(&budget.with_tx_watts(dbm_to_watts(dbm)), gains) >= c_target;
    if attains(lo_dbm) {
        return SecurePower::Attained(lo_dbm);
    }
    if !attains(hi_dbm) {
        return SecurePower::Unattainable;
    }
    let (mut lo, mut hi) = (lo_dbm, hi_dbm);
    while hi - lo > SECURE_POWER_TOLERANCE_DB {
        let mid = 0.5 * (lo + hi);
        if attains(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    SecurePower::Attained(hi)
}

/// Closed-form power (watts) at which a single no-AN trial reaches `target`:
/// solves `log2(1 + a P) - log2(1 + b P) = target` with `a`, `b` the per-watt SNRs.
pub fn invert_secrecy_rate(a: f64, b: f64, target: f64) -> Option<f64> {
    let t = target.exp2();
    let denom = a - t * b;
    (denom > 0.0).then(|| (t - 1.0) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ris::{design_matched, ProfileSource};
    use crate::scenario::AmplitudeModel;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_with_cs(cs: f64) -> SecrecySample {
        SecrecySample {
            sinr_l: 0.0,
            sinr_e: 0.0,
            c_l: cs,
            c_e: 0.0,
            margin: cs,
            c_s: cs.max(0.0),
        }
    }

    #[test]
    fn test_symmetric_channels_zero_secrecy() {
        let s = Scenario::baseline();
        let ch = ChannelRealization {
            h: vec![c(1.0, 0.0)],
            h_an: None,
            g: vec![c(1.0, 0.0)],
            k: vec![c(1.0, 0.0)],
        };
        let p = design_matched(&ch, &AmplitudeModel::Ideal);
        assert_eq!(p.theta[0], 0.0);
        let x = evaluate_trial(&s, &ch, &p);
        assert_eq!(x.sinr_l, x.sinr_e);
        assert_eq!(x.c_s, 0.0);
        assert_eq!(x.margin, 0.0);
    }

    #[test]
    fn test_two_element_hand_case() {
        let s = Scenario::baseline();
        let ch = ChannelRealization {
            h: vec![c(1.0, 0.0), c(1.0, 0.0)],
            h_an: None,
            g: vec![c(1.0, 0.0), c(1.0, 0.0)],
            k: vec![c(1.0, 0.0), c(-1.0, 0.0)],
        };
        let p = design_matched(&ch, &AmplitudeModel::Ideal);
        let gains = TrialGains::new(&ch, &p);
        assert_eq!(gains.info_rx, c(2.0, 0.0));
        assert_eq!(gains.info_ev.norm(), 0.0);
        let x = evaluate_trial(&s, &ch, &p);
        let snr = s.radio.tx_power_watts() / s.radio.noise_watts();
        assert_eq!(x.c_e, 0.0);
        assert!((x.c_s - (1.0 + 4.0 * snr).log2()).abs() < 1e-12);
    }

    #[test]
    fn test_zero_leakage_means_full_rate() {
        let s = Scenario::baseline();
        let ch = ChannelRealization {
            h: vec![c(1e-4, 0.0), c(1e-4, 0.0)],
            h_an: None,
            g: vec![c(0.0, 1e-4), c(1e-4, 0.0)],
            k: vec![c(1e-4, 0.0), c(1e-4, 0.0)],
        };
        let p = RisProfile::from_phases(
            vec![std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2],
            &AmplitudeModel::Ideal,
            ProfileSource::Explicit,
        );
        let mut x = evaluate_trial(&s, &ch, &p);
        // exp(j pi/2) is not exactly j in floating point
        assert!(x.c_e < 1e-20);
        x = SecrecySample::from_sinr(x.sinr_l, 0.0);
        assert_eq!(x.c_s, x.c_l);
    }

    #[test]
    fn test_an_interferes_at_both_nodes() {
        let mut s = Scenario::baseline();
        s.strategy = DesignStrategy::an_partition(0.5, 0.5);
        let budget = LinkBudget::for_scenario(&s);
        let g = TrialGains {
            info_rx: c(1e-5, 0.0),
            info_ev: c(1e-5, 0.0),
            an_rx: c(1e-6, 0.0),
            an_ev: c(1e-5, 0.0),
        };
        let x = budget.evaluate(&g);
        let p = s.radio.tx_power_watts();
        let n = s.radio.noise_watts();
        let sl = 0.5 * p * 1e-10 / (0.5 * p * 1e-12 + n);
        let se = 0.5 * p * 1e-10 / (0.5 * p * 1e-10 + n);
        assert!((x.sinr_l - sl).abs() <= 1e-12 * sl);
        assert!((x.sinr_e - se).abs() <= 1e-12 * se);
        let nulled = LinkBudget {
            an_nulls_receiver: true,
            ..budget
        }
        .evaluate(&g);
        assert!((nulled.sinr_l - 0.5 * p * 1e-10 / n).abs() <= 1e-9 * nulled.sinr_l);
    }

    #[test]
    fn test_aggregate_degenerate() {
        let s = Scenario::baseline();
        let xs: Vec<_> = (0..10)
            .map(|_| SecrecySample::from_sinr(1.0, 3.0))
            .collect();
        let st = aggregate(&xs, 0.5, &s).unwrap();
        assert_eq!(st.intercept_prob, 1.0);
        assert_eq!(st.spsc_prob, 0.0);
        assert_eq!(st.sop, 1.0);
        assert_eq!(st.mean_secrecy_rate, 0.0);
    }

    #[test]
    fn test_aggregate_counting() {
        let s = Scenario::baseline();
        let xs: Vec<_> = [0.5, 1.5, 2.5].into_iter().map(sample_with_cs).collect();
        let st = aggregate(&xs, 1.0, &s).unwrap();
        assert!((st.sop - 1.0 / 3.0).abs() < 1e-15);
        assert!((st.coverage_prob - 2.0 / 3.0).abs() < 1e-15);
        assert!((st.mean_secrecy_rate - 1.5).abs() < 1e-15);
        assert!((st.see - 1.5 / 0.1).abs() < 1e-9);
    }

    #[test]
    fn test_aggregate_empty() {
        assert!(matches!(
            aggregate(&[], 1.0, &Scenario::baseline()),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn test_two_point_distribution_mean_in_ci() {
        // c_s = 1 with prob 1/4, 3 with prob 3/4: mean 2.5
        let xs: Vec<_> = (0..4000)
            .map(|i| sample_with_cs(if i % 4 == 0 { 1.0 } else { 3.0 }))
            .collect();
        let st = aggregate(&xs, 1.0, &Scenario::baseline()).unwrap();
        assert!(st.ci_low <= 2.5 && 2.5 <= st.ci_high);
        // sd = sqrt(0.75) * ... exact: var = 0.75 * n/(n-1)
        let half = Z_95 * (0.75f64 * 4000.0 / 3999.0 / 4000.0).sqrt();
        assert!((st.ci_high - st.ci_low - 2.0 * half).abs() < 1e-12);
    }

    #[test]
    fn test_clamped_margin_kept() {
        let x = SecrecySample::from_sinr(1.0, 7.0);
        assert_eq!(x.c_s, 0.0);
        assert!((x.margin + 2.0).abs() < 1e-15);
    }

    fn single_gain(a: f64, b: f64) -> TrialGains {
        TrialGains {
            info_rx: c(a.sqrt(), 0.0),
            info_ev: c(b.sqrt(), 0.0),
            an_rx: c(0.0, 0.0),
            an_ev: c(0.0, 0.0),
        }
    }

    #[test]
    fn test_secure_power_zero_target() {
        let s = Scenario::baseline();
        let g = [single_gain(1e-10, 1e-11)];
        assert_eq!(secure_power(&s, 0.0, &g), SecurePower::Attained(-20.0));
    }

    #[test]
    fn test_secure_power_matches_inversion() {
        let s = Scenario::baseline();
        let noise = s.radio.noise_watts();
        let (ga, gb) = (3e-12, 2e-13);
        let g = [single_gain(ga, gb)];
        let target = 2.0;
        let exact_w = invert_secrecy_rate(ga / noise, gb / noise, target).unwrap();
        let exact_dbm = crate::scenario::watts_to_dbm(exact_w);
        match secure_power(&s, target, &g) {
            SecurePower::Attained(p) => {
                assert!(
                    p >= exact_dbm - 1e-9 && p - exact_dbm <= SECURE_POWER_TOLERANCE_DB,
                    "{p} vs {exact_dbm}"
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn test_secure_power_unattainable() {
        let s = Scenario::baseline();
        // eavesdropper stronger than receiver: never positive
        let g = [single_gain(1e-12, 2e-12)];
        assert_eq!(secure_power(&s, 0.5, &g), SecurePower::Unattainable);
    }

    #[test]
    fn test_secure_power_monotone_in_target() {
        let s = Scenario::baseline();
        let g: Vec<_> = (1..20)
            .map(|i| single_gain(1e-12 * i as f64, 1e-13))
            .collect();
        let mut last = f64::NEG_INFINITY;
        for t in [0.0, 0.5, 1.0, 2.0, 4.0, 6.0] {
            match secure_power(&s, t, &g) {
                SecurePower::Attained(p) => {
                    assert!(p >= last);
                    last = p;
                }
                SecurePower::Unattainable => last = f64::INFINITY,
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_scaling_identity(a in 1e-14f64..1e-9, b in 1e-14f64..1e-9, x in 1.0f64..1e3) {
                let s = Scenario::baseline();
                let budget = LinkBudget::for_scenario(&s);
                let g = single_gain(a, b);
                let base = budget.evaluate(&g);
                let scaled = budget.with_tx_watts(budget.tx_watts * x).evaluate(&g);
                prop_assert!(scaled.c_l >= base.c_l);
                prop_assert!(scaled.c_e >= base.c_e);
                let expect = ((1.0 + x * base.sinr_l) / (1.0 + x * base.sinr_e)).log2()
                    - ((1.0 + base.sinr_l) / (1.0 + base.sinr_e)).log2();
                prop_assert!((scaled.margin - base.margin - expect).abs() < 1e-9);
            }

            #[test]
            fn metric_identities(cs in proptest::collection::vec(-3.0f64..6.0, 1..200), target in 0.0f64..4.0) {
                let xs: Vec<_> = cs.into_iter().map(sample_with_cs).collect();
                let st = aggregate(&xs, target, &Scenario::baseline()).unwrap();
                prop_assert_eq!(st.coverage_prob, 1.0 - st.sop);
                prop_assert_eq!(st.spsc_prob, 1.0 - st.intercept_prob);
                prop_assert_eq!(st.outage_count + st.covered_count, st.trials);
                prop_assert_eq!(st.intercept_count + st.positive_count, st.trials);
                let boundary = aggregate(&xs, f64::from_bits(1), &Scenario::baseline()).unwrap();
                prop_assert_eq!(boundary.sop, st.intercept_prob);
                for x in &xs { prop_assert!(x.c_s >= 0.0); }
            }
        }
    }
}
