//! Spectral coefficient models: attenuation, Raman gain and cross-section,
//! phonon occupancy, crosstalk, Rayleigh capture and the nonlinear scaling
//! factor of a mode group.

use crate::error::{Error, Result};
use crate::units::{BOLTZMANN, PLANCK};

/// A coefficient tabulated against frequency.
///
/// Evaluation interpolates linearly between samples and holds the end
/// values beyond the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    samples: Vec<(f64, f64)>,
}

impl SpectralProfile {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("spectral profile has no samples"));
        }
        for (k, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain(format!(
                    "profile frequencies must be strictly increasing (sample {})",
                    k + 1
                )));
            }
        }
        if samples.iter().any(|(f, v)| !f.is_finite() || !v.is_finite()) {
            return Err(Error::domain("profile contains non-finite samples"));
        }
        Ok(Self { samples })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            samples: vec![(0.0, value)],
        }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn is_constant(&self) -> bool {
        self.samples.len() == 1
    }

    pub fn eval(&self, f: f64) -> f64 {
        let s = &self.samples;
        let last = s.len() - 1;
        if f <= s[0].0 {
            return s[0].1;
        }
        if f >= s[last].0 {
            return s[last].1;
        }
        // first sample strictly above f
        let hi = s.partition_point(|(x, _)| *x <= f);
        let (f0, v0) = s[hi - 1];
        let (f1, v1) = s[hi];
        v0 + (v1 - v0) * (f - f0) / (f1 - f0)
    }

    pub fn min_value(&self) -> f64 {
        self.samples
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Raman gain efficiency versus (positive) frequency shift.
#[derive(Debug, Clone, PartialEq)]
pub enum RamanGainModel {
    /// `min(slope · Δf, peak)`.
    ClippedLinear { slope: f64, peak: f64 },
    /// Tabulated g_R(Δf) with g_R(0) = 0.
    Tabulated(SpectralProfile),
}

impl RamanGainModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            RamanGainModel::ClippedLinear { slope, peak } => {
                if *slope < 0.0 || *peak < 0.0 {
                    return Err(Error::domain("Raman slope and peak must be nonnegative"));
                }
            }
            RamanGainModel::Tabulated(p) => {
                if p.min_value() < 0.0 {
                    return Err(Error::domain("tabulated Raman gain must be nonnegative"));
                }
                if p.eval(0.0) != 0.0 {
                    return Err(Error::domain("tabulated Raman gain must vanish at zero shift"));
                }
            }
        }
        Ok(())
    }

    /// Slope c_R of the linearised gain used by the tilt model.
    ///
    /// For a tabulated curve this is the least-squares slope through the
    /// origin over the samples up to `max_shift`.
    pub fn linear_slope(&self, max_shift: f64) -> f64 {
        match self {
            RamanGainModel::ClippedLinear { slope, .. } => *slope,
            RamanGainModel::Tabulated(p) => {
                let n = 64;
                let (mut num, mut den) = (0.0, 0.0);
                for k in 1..=n {
                    let df = max_shift * k as f64 / n as f64;
                    num += p.eval(df) * df;
                    den += df * df;
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn attenuation_at(profile: &SpectralProfile, f: f64) -> f64 {
    profile.eval(f)
}

pub fn rayleigh_at(profile: &SpectralProfile, f: f64) -> f64 {
    profile.eval(f)
}

/// Bose–Einstein phonon occupancy for a shift `delta_f` at temperature `t`.
pub fn phonon_occupancy(delta_f: f64, t: f64) -> Result<f64> {
    if !(delta_f > 0.0) {
        return Err(Error::domain(format!(
            "phonon occupancy needs a positive frequency shift, got {delta_f} Hz"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {t} K")));
    }
    let x = PLANCK * delta_f / (BOLTZMANN * t);
    // expm1 keeps full precision as x → 0, where Ψ → k_B·T/(h·Δf)
    Ok(1.0 / x.exp_m1())
}

pub fn raman_gain(model: &RamanGainModel, delta_f: f64) -> Result<f64> {
    if delta_f < 0.0 {
        return Err(Error::domain(format!(
            "Raman gain is defined for nonnegative shifts, got {delta_f} Hz"
        )));
    }
    Ok(match model {
        RamanGainModel::ClippedLinear { slope, peak } => (slope * delta_f).min(*peak),
        RamanGainModel::Tabulated(p) => p.eval(delta_f),
    })
}

/// Raman cross-section η_ih captured at channel `f_i` from a pump at `f_h`.
///
/// Stokes side (f_i < f_h) carries (1 + Ψ), anti-Stokes side carries Ψ.
pub fn raman_cross_section(
    f_i: f64,
    f_h: f64,
    t: f64,
    bandwidth: f64,
    model: &RamanGainModel,
) -> Result<f64> {
    if f_i == f_h {
        return Err(Error::domain("Raman cross-section needs distinct channels"));
    }
    let shift = (f_h - f_i).abs();
    let psi = phonon_occupancy(shift, t)?;
    let g = raman_gain(model, shift)?;
    let occupancy = if f_i < f_h { 1.0 + psi } else { psi };
    Ok(occupancy * PLANCK * f_i * bandwidth * g)
}

/// Kerr scaling factor r for a group of `d` degenerate modes.
pub fn nonlinear_scaling_factor(d: u32, raman_fraction: f64) -> f64 {
    if d <= 1 {
        return 1.0;
    }
    let d = d as f64;
    d / (d + 1.0) * (4.0 / 3.0 * (1.0 - raman_fraction) + 1.5 * raman_fraction)
}

/// Power coupling coefficient κ_nm(f) into group `n` from group `m`.
///
/// Unlisted pairs couple with zero strength; validation records a warning
/// for them.
pub fn crosstalk_at(coupling: &crate::scenario::CouplingSpec, n: usize, m: usize, f: f64) -> Result<f64> {
    if n == m {
        return Err(Error::domain("crosstalk is defined between distinct groups"));
    }
    Ok(coupling
        .kappa(n, m)
        .map(|profile| profile.eval(f))
        .unwrap_or(0.0))
}
