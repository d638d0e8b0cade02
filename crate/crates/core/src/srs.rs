//! Closed-form signal power profiles under SRS-induced spectral tilt.
//!
//! A loaded group `m` tilts the channels of group `n` by
//! `c_nm·(f_R,nm − f)·P_T,m·L_eff,m(z)` in the exponent. Without inter-group
//! terms only the `n = m` term exists.

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Tilt magnitudes `c·P_T·L_eff·(band + B_s)` below this are treated as
/// no tilt at all; the reference-frequency formula is singular as c → 0.
pub const NO_TILT_THRESHOLD: f64 = 1e-6;

/// Bracket half-width added around the occupied band for root solves.
const BRACKET_MARGIN: f64 = 10e12;

/// `(1 − e^{−α₀z})/α₀`, with the `z` limit for small `α₀z`.
pub fn effective_length(alpha0: f64, z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::domain(format!("effective length at negative z = {z}")));
    }
    let x = alpha0 * z;
    if x.abs() < 1e-9 {
        return Ok(z);
    }
    Ok(-(-x).exp_m1() / alpha0)
}

fn leff(alpha0: f64, z: f64) -> f64 {
    effective_length(alpha0, z.max(0.0)).unwrap_or(0.0)
}

/// Power-weighted `n_R`-mean of the channel losses.
pub fn fit_alpha0(p_tx: &[f64], alpha: &[f64], n_r: u32) -> Result<f64> {
    let p_t: f64 = p_tx.iter().sum();
    if !(p_t > 0.0) {
        return Err(Error::domain("total power attenuation needs a loaded group"));
    }
    let n = n_r as i32;
    let mean: f64 = p_tx
        .iter()
        .zip(alpha)
        .map(|(p, a)| a.powi(n) * p / p_t)
        .sum();
    Ok(mean.powf(1.0 / n_r as f64))
}

/// Weights `w_i` such that the reference frequency solves
/// `Σ w_i·exp[a·(f_R − f_i)] = 1` with `a = c·P_T·L_eff(L_s)`.
fn tilt_weights(p_tx: &[f64], alpha: &[f64], alpha0: f64, l_s: f64, n_r: u32) -> Vec<f64> {
    let p_t: f64 = p_tx.iter().sum();
    let n = n_r as i32;
    let a0n = alpha0.powi(n);
    p_tx.iter()
        .zip(alpha)
        .map(|(p, a)| a.powi(n) * p * ((alpha0 - a) * l_s).exp() / (a0n * p_t))
        .collect()
}

/// `ln Σ w_i·exp[a·(f − f_i)]`, evaluated around `f_ref` for stability.
fn log_balance(weights: &[f64], freqs: &[f64], a: f64, f: f64) -> f64 {
    let terms: Vec<(f64, f64)> = weights
        .iter()
        .zip(freqs)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, fi)| (w.ln(), a * (f - fi)))
        .collect();
    let peak = terms
        .iter()
        .map(|(lw, e)| lw + e)
        .fold(f64::NEG_INFINITY, f64::max);
    peak + terms
        .iter()
        .map(|(lw, e)| (lw + e - peak).exp())
        .sum::<f64>()
        .ln()
}

fn occupied_band(p_tx: &[f64], freqs: &[f64]) -> Option<(f64, f64)> {
    let loaded = || p_tx.iter().zip(freqs).filter(|(p, _)| **p > 0.0).map(|(_, f)| *f);
    let lo = loaded().fold(f64::INFINITY, f64::min);
    let hi = loaded().fold(f64::NEG_INFINITY, f64::max);
    (lo <= hi).then_some((lo, hi))
}

fn tilt_magnitude(c_r: f64, p_t: f64, l_eff: f64, band: (f64, f64), spacing: f64) -> f64 {
    c_r * p_t * l_eff * (band.1 - band.0 + spacing)
}

/// Closed-form tilt reference frequency of a loaded group.
///
/// Returns `None` (no tilt) when the dimensionless tilt magnitude is below
/// [`NO_TILT_THRESHOLD`].
#[allow(clippy::too_many_arguments)]
pub fn fit_f_r(
    p_tx: &[f64],
    alpha: &[f64],
    freqs: &[f64],
    spacing: f64,
    alpha0: f64,
    c_r: f64,
    l_s: f64,
    n_r: u32,
) -> Result<Option<f64>> {
    let p_t: f64 = p_tx.iter().sum();
    let band = occupied_band(p_tx, freqs)
        .ok_or_else(|| Error::domain("tilt reference frequency needs a loaded group"))?;
    let a = c_r * p_t * leff(alpha0, l_s);
    if tilt_magnitude(c_r, p_t, leff(alpha0, l_s), band, spacing) < NO_TILT_THRESHOLD {
        return Ok(None);
    }
    let w = tilt_weights(p_tx, alpha, alpha0, l_s, n_r);
    let f_ref = 0.5 * (band.0 + band.1);
    // Σ w e^{a(f_R − f_i)} = 1  ⇔  f_R = f_ref − ln Σ w e^{a(f_ref − f_i)} / a
    Ok(Some(f_ref - log_balance(&w, freqs, a, f_ref) / a))
}

/// Same root as [`fit_f_r`] found by bisection on the balance condition.
fn bisect_f_r(weights: &[f64], freqs: &[f64], a: f64, band: (f64, f64)) -> Result<f64> {
    let g = |f: f64| log_balance(weights, freqs, a, f);
    let (mut lo, mut hi) = (band.0 - BRACKET_MARGIN, band.1 + BRACKET_MARGIN);
    for _ in 0..8 {
        if g(lo) <= 0.0 && g(hi) >= 0.0 {
            break;
        }
        let w = hi - lo;
        lo -= w;
        hi += w;
    }
    if !(g(lo) <= 0.0 && g(hi) >= 0.0) {
        return Err(Error::domain("no tilt reference frequency within the search bracket"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() < 1e-12 || hi - lo < 1e-3 {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One loaded group's contribution to another group's tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltTerm {
    /// c_R^{(nm)}, 1/(W·m·Hz).
    pub c_r: f64,
    pub f_r: f64,
    /// Total launch power of the loaded group, W.
    pub p_t: f64,
    /// Total power attenuation of the loaded group, 1/m.
    pub alpha0: f64,
}

impl TiltTerm {
    fn exponent(&self, f: f64, z: f64) -> f64 {
        self.c_r * (self.f_r - f) * self.p_t * leff(self.alpha0, z)
    }

    fn local_gain(&self, f: f64, z: f64) -> f64 {
        self.c_r * (self.f_r - f) * self.p_t * (-self.alpha0 * z).exp()
    }
}

/// Fitted tilt parameters of a scenario, `terms[n][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltParams {
    pub alpha0: Vec<f64>,
    pub terms: Vec<Vec<Option<TiltTerm>>>,
    pub n_r: u32,
}

impl TiltParams {
    pub fn none(groups: usize) -> Self {
        Self {
            alpha0: vec![0.0; groups],
            terms: vec![vec![None; groups]; groups],
            n_r: 3,
        }
    }

    pub fn fit(scn: &Scenario) -> Result<Self> {
        let groups = scn.groups();
        let s = scn.settings();
        let mut out = Self::none(groups);
        out.n_r = s.n_r;
        let freqs = scn.frequencies();
        let l_s = s.span_length;
        let spacing = scn.grid().spacing;
        let max_shift = freqs[freqs.len() - 1] - freqs[0];

        for m in 0..groups {
            let p = &scn.launch().p_tx[m];
            if scn.launch().total(m) > 0.0 {
                out.alpha0[m] = fit_alpha0(p, scn.alphas(m), s.n_r)?;
            }
        }
        if !s.include_srs {
            return Ok(out);
        }

        for m in scn.loaded_groups().collect::<Vec<_>>() {
            let p_m = &scn.launch().p_tx[m];
            let p_t = scn.launch().total(m);
            let band = occupied_band(p_m, freqs).expect("loaded group has an occupied band");
            let alpha0_m = out.alpha0[m];
            if !(alpha0_m > 0.0) {
                return Err(Error::invalid(
                    format!("mode_groups[{m}].attenuation"),
                    "the SRS tilt needs a positive loss; disable solver.srs for lossless links",
                ));
            }
            let l_m = leff(alpha0_m, l_s);
            let c_mm = scn.group(m).raman_gain.linear_slope(max_shift);

            for n in 0..groups {
                let c_nm = if n == m {
                    c_mm
                } else if s.include_img_terms {
                    let a_n = scn.group(n).effective_area;
                    let a_nm = scn.spec().coupling.cross_area(n, m);
                    match (a_n, a_nm) {
                        (Some(a_n), Some(a_nm)) => {
                            scn.group(n).raman_gain.linear_slope(max_shift) * a_n / a_nm
                        }
                        _ => return Err(Error::invalid(
                            format!("coupling[{n}][{m}].effective_area"),
                            "inter-group tilt needs both effective areas",
                        )),
                    }
                } else {
                    continue;
                };
                if tilt_magnitude(c_nm, p_t, l_m, band, spacing) < NO_TILT_THRESHOLD {
                    continue;
                }
                let f_r = if n == m {
                    fit_f_r(p_m, scn.alphas(m), freqs, spacing, alpha0_m, c_mm, l_s, s.n_r)?
                } else {
                    // an unloaded group probes with the loaded group's weights
                    let p_n = &scn.launch().p_tx[n];
                    let probe = if scn.launch().total(n) > 0.0 { p_n } else { p_m };
                    let a0 = fit_alpha0(probe, scn.alphas(n), s.n_r)?;
                    let w = tilt_weights(probe, scn.alphas(n), a0, l_s, s.n_r);
                    let band_n = occupied_band(probe, freqs).unwrap_or(band);
                    Some(bisect_f_r(&w, freqs, c_nm * p_t * l_m, band_n)?)
                };
                if let Some(f_r) = f_r {
                    out.terms[n][m] = Some(TiltTerm {
                        c_r: c_nm,
                        f_r,
                        p_t,
                        alpha0: alpha0_m,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn is_flat(&self, n: usize) -> bool {
        self.terms[n].iter().all(Option::is_none)
    }

    /// Tilt exponent of a probe at frequency `f` in group `n`.
    pub fn exponent(&self, n: usize, f: f64, z: f64) -> f64 {
        self.terms[n].iter().flatten().map(|t| t.exponent(f, z)).sum()
    }

    /// Local SRS gain `d(exponent)/dz`.
    pub fn local_gain(&self, n: usize, f: f64, z: f64) -> f64 {
        self.terms[n].iter().flatten().map(|t| t.local_gain(f, z)).sum()
    }
}

/// Unperturbed signal power of channel `i` in group `n`, measured from its
/// own transmitter.
pub fn signal_profile(scn: &Scenario, n: usize, i: usize, z: f64) -> f64 {
    let p0 = scn.launch().p_tx[n][i];
    if p0 == 0.0 {
        return 0.0;
    }
    p0 * (-scn.alpha(n, i) * z + scn.tilt().exponent(n, scn.frequency(i), z)).exp()
}

/// `α̃(z) = α − tilt_exponent(z)/z`, the loss that reproduces the tilted
/// profile as a pure exponential over `[0, z]`.
pub fn effective_loss(scn: &Scenario, n: usize, i: usize, z: f64) -> f64 {
    let f = scn.frequency(i);
    let tilt = scn.tilt();
    if z <= 0.0 {
        return scn.alpha(n, i) - tilt.local_gain(n, f, 0.0);
    }
    scn.alpha(n, i) - tilt.exponent(n, f, z) / z
}

/// Local loss `α − c·(f_R − f)·P_T·e^{−α₀z}` seen by light at channel `i`.
pub fn local_loss(scn: &Scenario, n: usize, i: usize, z: f64) -> f64 {
    scn.alpha(n, i) - scn.tilt().local_gain(n, scn.frequency(i), z)
}

/// Scalar form of [`effective_loss`] for a single tilt term.
pub fn effective_loss_scalar(alpha: f64, c_r: f64, f_r: f64, f: f64, p_t: f64, alpha0: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return alpha - c_r * (f_r - f) * p_t;
    }
    alpha - c_r * (f_r - f) * p_t * leff(alpha0, z) / z
}

/// Residual of the conservation balance `Σ_i P_i(L)·e^{α_i L}/P_T − 1` for
/// group `n`, given its own launch weights.
pub fn conservation_residual(scn: &Scenario, n: usize, z: f64) -> f64 {
    let p_t = scn.launch().total(n);
    if p_t == 0.0 {
        return 0.0;
    }
    (0..scn.channels())
        .map(|i| signal_profile(scn, n, i, z) * (scn.alpha(n, i) * z).exp())
        .sum::<f64>()
        / p_t
        - 1.0
}

/// Tilt parameters for inter-group SRS. Fails when areas are missing.
pub fn img_tilt_params(scn: &Scenario) -> Result<TiltParams> {
    if !scn.settings().include_img_terms {
        return Err(Error::invalid("solver.img", "inter-group terms are disabled"));
    }
    TiltParams::fit(scn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::fixtures::*;
    use crate::scenario::LaunchPower;
    use crate::units::{db_per_km_to_neper_per_m as db, neper_per_m_to_db_per_km as to_db};
    use proptest::prelude::*;

    #[test]
    fn effective_length_values() {
        let a = db(0.2);
        let l = effective_length(a, 100e3).unwrap();
        assert!((l / 1e3 - 21.50).abs() < 0.01, "{l}");
        assert_eq!(effective_length(a, 0.0).unwrap(), 0.0);
        assert_eq!(effective_length(0.0, 5.0).unwrap(), 5.0);
        assert!(effective_length(a, -1.0).is_err());
    }

    #[test]
    fn alpha0_means() {
        let a = fit_alpha0(&[1.0, 1.0], &[db(0.18), db(0.22)], 3).unwrap();
        assert!((to_db(a) - 0.20198).abs() < 1e-5, "{}", to_db(a));
        let a = fit_alpha0(&[1.0, 3.0], &[1.0, 2.0], 1).unwrap();
        assert!((a - 1.75).abs() < 1e-15);
        let a = fit_alpha0(&[0.2, 0.5, 0.3], &[4e-5; 3], 3).unwrap();
        assert!((a - 4e-5).abs() < 1e-18);
        assert!(fit_alpha0(&[0.0, 0.0], &[1.0, 1.0], 3).is_err());
    }

    #[test]
    fn single_channel_reference_is_its_frequency() {
        let f = fit_f_r(&[0.1], &[db(0.2)], &[193e12], 50e9, db(0.2), 2.86e-17, 100e3, 3)
            .unwrap()
            .unwrap();
        assert!((f - 193e12).abs() < 1.0);
    }

    #[test]
    fn zero_slope_is_no_tilt() {
        let r = fit_f_r(&[0.1, 0.1], &[4e-5; 2], &[193e12, 194e12], 50e9, 4e-5, 0.0, 100e3, 3).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn table1_reference_inside_band_and_conserving() {
        let s = table1(87).validate().unwrap();
        let f_r = s.tilt().terms[0][0].unwrap().f_r;
        assert!(f_r > s.frequency(0) && f_r < s.frequency(87), "{f_r}");
    }

    #[test]
    fn flat_loss_conserves_at_span_end() {
        let mut spec = table1(87);
        spec.mode_groups[0].attenuation = crate::profiles::SpectralProfile::constant(db(0.2));
        let s = spec.validate().unwrap();
        assert!(conservation_residual(&s, 0, 100e3).abs() < 1e-12);
        for z in [10e3, 30e3, 60e3] {
            let r = conservation_residual(&s, 0, z);
            // the fit is anchored at L_s; in between the model drifts below 1%
            assert!(r.abs() < 1e-2, "{z} {r}");
        }
    }

    #[test]
    fn bisection_matches_closed_form() {
        let s = table1(87).validate().unwrap();
        let t = s.tilt().terms[0][0].unwrap();
        let p = &s.launch().p_tx[0];
        let w = tilt_weights(p, s.alphas(0), t.alpha0, 100e3, 3);
        let a = t.c_r * t.p_t * leff(t.alpha0, 100e3);
        let band = occupied_band(p, s.frequencies()).unwrap();
        let root = bisect_f_r(&w, s.frequencies(), a, band).unwrap();
        assert!((root - t.f_r).abs() < 1e3, "{root} vs {}", t.f_r);
    }

    #[test]
    fn loss_profile_identity() {
        let s = table1(87).validate().unwrap();
        for i in [0, 40, 86] {
            for z in [1e3, 37e3, 100e3] {
                let lhs = signal_profile(&s, 0, i, z);
                let rhs = s.launch().p_tx[0][i] * (-effective_loss(&s, 0, i, z) * z).exp();
                assert!(((lhs - rhs) / lhs).abs() < 1e-12);
            }
        }
        let l0 = effective_loss(&s, 0, 0, 0.0);
        let l_small = effective_loss(&s, 0, 0, 1e-3);
        assert!(((l0 - l_small) / l0).abs() < 1e-6);
    }

    #[test]
    fn unloaded_group_is_flat() {
        let s = sdm(87).validate().unwrap();
        assert!(s.tilt().is_flat(1));
        assert!(!s.tilt().is_flat(0));
    }

    #[test]
    fn img_identical_groups_share_reference() {
        let mut spec = sdm(87);
        spec.mode_groups[1] = smf_group();
        spec.grid.quantum.group = 0;
        spec.launch.groups[1].power = LaunchPower::Total(crate::units::dbm_to_watt(25.0));
        spec.solver.include_img_terms = true;
        for n in 0..2 {
            for m in 0..2 {
                spec.coupling.cross_area[n][m] = Some(80e-12);
                spec.coupling.overlap[n][m] = Some(0.5);
            }
        }
        let s = spec.validate().unwrap();
        let t = s.tilt();
        let (nn, nm) = (t.terms[1][1].unwrap(), t.terms[1][0].unwrap());
        assert!((nn.f_r - nm.f_r).abs() < 1e6, "{} vs {}", nn.f_r, nm.f_r);
        assert!(img_tilt_params(&s).is_ok());

        // vanishing overlap removes the inter-group term
        let mut spec = s.into_spec();
        spec.coupling.cross_area[1][0] = Some(1e30);
        let s = spec.validate().unwrap();
        assert!(s.tilt().terms[1][0].is_none());
    }

    proptest! {
        #[test]
        fn symmetric_pair_has_antisymmetric_exponents(df in 0.1e12f64..3e12, c in 1e-18f64..1e-16, p in 1e-3f64..1.0, z in 0.0f64..100e3) {
            let f_r = 193e12;
            let term = TiltTerm { c_r: c, f_r, p_t: 2.0 * p, alpha0: 4.6e-5 };
            let (lo, hi) = (term.exponent(f_r - df, z), term.exponent(f_r + df, z));
            prop_assert!((lo + hi).abs() <= 1e-9 * lo.abs().max(1e-300));
        }

        #[test]
        fn profile_nonincreasing_when_loss_positive(i in 0usize..87, z in 0.0f64..99e3) {
            let s = table1(87).validate().unwrap();
            let dz = 1e3;
            prop_assume!(local_loss(&s, 0, i, z) > 0.0 && local_loss(&s, 0, i, z + dz) > 0.0);
            prop_assert!(signal_profile(&s, 0, i, z + dz) <= signal_profile(&s, 0, i, z));
        }
    }
}
