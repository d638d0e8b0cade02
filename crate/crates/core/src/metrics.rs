//! Reporting quantities derived from interference power.

use crate::error::{Error, Result};
use crate::units::PLANCK;

/// W/Hz to mW/GHz.
pub const W_PER_HZ_TO_MW_PER_GHZ: f64 = 1e12;

/// Power spectral density `P/B`, W/Hz.
pub fn psd(p: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth} Hz")));
    }
    Ok(p / bandwidth)
}

pub fn psd_mw_per_ghz(p: f64, bandwidth: f64) -> Result<f64> {
    Ok(psd(p, bandwidth)? * W_PER_HZ_TO_MW_PER_GHZ)
}

/// `P_int/(N_sig·h·f + P_int)`, with unit detector efficiency.
pub fn qber(signal_rate: f64, p_int: f64, f: f64) -> Result<f64> {
    if !(signal_rate >= 0.0) || !(p_int >= 0.0) {
        return Err(Error::domain("QBER needs nonnegative signal rate and noise power"));
    }
    let signal = signal_rate * PLANCK * f;
    let den = signal + p_int;
    if den == 0.0 {
        return Err(Error::domain("QBER is undefined without signal or noise"));
    }
    Ok(p_int / den)
}

/// Excess noise in shot-noise units, all of it attributed to the channel.
pub fn excess_noise_snu(p_int: f64, lo_shot_noise: f64) -> Result<f64> {
    if !(lo_shot_noise > 0.0) {
        return Err(Error::domain("shot-noise variance must be positive"));
    }
    Ok(p_int / lo_shot_noise)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub p_int: f64,
    /// W/Hz.
    pub psd: f64,
    pub qber: Option<f64>,
    pub xi_excess: Option<f64>,
}

impl MetricSet {
    /// Metrics for noise `p_int` at frequency `f` collected over
    /// `bandwidth`. QBER and excess noise appear when their inputs do.
    pub fn new(p_int: f64, f: f64, bandwidth: f64, signal_rate: Option<f64>, lo_shot_noise: Option<f64>) -> Result<Self> {
        Ok(Self {
            p_int,
            psd: psd(p_int, bandwidth)?,
            qber: signal_rate.map(|n| qber(n, p_int, f)).transpose()?,
            xi_excess: lo_shot_noise.map(|s| excess_noise_snu(p_int, s)).transpose()?,
        })
    }

    pub fn psd_mw_per_ghz(&self) -> f64 {
        self.psd * W_PER_HZ_TO_MW_PER_GHZ
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psd_units() {
        assert_eq!(psd(1e-12, 50e9).unwrap(), 2e-23);
        assert!((psd_mw_per_ghz(1e-12, 50e9).unwrap() - 2e-11).abs() < 1e-25);
        assert_eq!(psd(0.0, 50e9).unwrap(), 0.0);
        assert!(psd(1.0, 0.0).is_err());
        // the CV-QKD tolerance scale is representable
        let p = 1e-7 / W_PER_HZ_TO_MW_PER_GHZ * 50e9;
        assert!((psd_mw_per_ghz(p, 50e9).unwrap() - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn qber_anchors() {
        let f = 193e12;
        assert_eq!(qber(1e6, 0.0, f).unwrap(), 0.0);
        let p = 1e6 * PLANCK * f;
        assert!((qber(1e6, p, f).unwrap() - 0.5).abs() < 1e-15);
        assert!(qber(1e300, 1e-15, f).unwrap() < 1e-100);
        assert!(qber(0.0, 0.0, f).is_err());
    }

    #[test]
    fn excess_noise_anchors() {
        assert_eq!(excess_noise_snu(0.0, 1e-9).unwrap(), 0.0);
        assert_eq!(excess_noise_snu(1e-9, 1e-9).unwrap(), 1.0);
        assert_eq!(excess_noise_snu(1e-9, 0.5e-9).unwrap(), 2.0 * excess_noise_snu(1e-9, 1e-9).unwrap());
        assert!(excess_noise_snu(1.0, 0.0).is_err());
    }

    #[test]
    fn metric_set_optional_fields() {
        let m = MetricSet::new(1e-12, 193e12, 50e9, None, Some(1e-10)).unwrap();
        assert!(m.qber.is_none());
        assert_eq!(m.xi_excess, Some(0.01));
        assert_eq!(m.psd * 50e9, 1e-12);
    }

    proptest! {
        #[test]
        fn qber_monotone_and_bounded(n in 1e3f64..1e9, p in 1e-18f64..1e-9, s in 1.01f64..10.0) {
            let f = 193e12;
            let q = qber(n, p, f).unwrap();
            prop_assert!((0.0..1.0).contains(&q));
            prop_assert!(qber(n, p * s, f).unwrap() > q);
            prop_assert!(qber(n * s, p, f).unwrap() < q);
        }

        #[test]
        fn psd_times_bandwidth(p in 0.0f64..1.0, b in 1e6f64..1e12) {
            let x = psd(p, b).unwrap() * b;
            prop_assert!((x - p).abs() <= f64::EPSILON * p);
        }
    }
}
