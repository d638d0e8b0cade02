//! Four-wave mixing: triple enumeration, phase and loss mismatch,
//! efficiency factors and the closed-form accumulated power.
//!
//! Sign convention: the averaged efficiency `4Δα/(Δα² + 4Δβ²)` is negative
//! for the usual `Δα < 0`. It only gives the right accumulated power when the
//! integration starts from [`fwm_input_condition`] instead of zero.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::{ChannelGrid, FwmMode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FwmTriple {
    pub h: usize,
    pub k: usize,
    pub l: usize,
    pub degenerate: bool,
}

/// Mixing products landing on channel `i` of group `n`, from allocated
/// channels of the same group. Degenerate triples first, then ordered
/// `(h, l)` pairs, both ascending.
pub fn enumerate_triples(grid: &ChannelGrid, n: usize, i: usize) -> Vec<FwmTriple> {
    let on = |c: usize| grid.is_allocated(n, c);
    let count = grid.count as isize;
    let i_s = i as isize;
    let mut out = Vec::new();
    for h in (0..grid.count).filter(|&h| h != i && on(h)) {
        let k = 2 * h as isize - i_s;
        if (0..count).contains(&k) && on(k as usize) {
            out.push(FwmTriple {
                h,
                k: k as usize,
                l: h,
                degenerate: true,
            });
        }
    }
    out.extend(pairs(grid.count, i, on, on));
    out
}

/// Inter-group products on channel `i` of group `n`: `h`, `k` in group `m`,
/// `l` in group `n`. Only non-degenerate combinations exist.
pub fn enumerate_img_triples(grid: &ChannelGrid, n: usize, m: usize, i: usize) -> Vec<FwmTriple> {
    pairs(
        grid.count,
        i,
        |c| grid.is_allocated(m, c),
        |c| grid.is_allocated(n, c),
    )
    .collect()
}

fn pairs<'a>(
    count: usize,
    i: usize,
    on_hk: impl Fn(usize) -> bool + 'a,
    on_l: impl Fn(usize) -> bool + 'a + Copy,
) -> impl Iterator<Item = FwmTriple> + 'a {
    let on_hk = std::rc::Rc::new(on_hk);
    (0..count)
        .filter(move |&h| h != i)
        .flat_map(move |h| {
            let on_hk = on_hk.clone();
            (0..count).filter_map(move |l| {
                if l == h || l == i || !on_hk(h) || !on_l(l) {
                    return None;
                }
                let k = h as isize + l as isize - i as isize;
                if k < 0 || k >= count as isize || k as usize == i || !on_hk(k as usize) {
                    return None;
                }
                Some(FwmTriple {
                    h,
                    k: k as usize,
                    l,
                    degenerate: false,
                })
            })
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub delta_alpha: f64,
    pub delta_beta: f64,
}

/// `Δβ = 2π²β₂(f_i² − f_h² + f_k² − f_l²)`, summed in offsets from `f_i`
/// so that grid-matched triples do not cancel catastrophically.
pub fn phase_mismatch(beta2: f64, f_i: f64, f_h: f64, f_k: f64, f_l: f64) -> f64 {
    let (a, b, c) = (f_h - f_i, f_k - f_i, f_l - f_i);
    2.0 * PI * PI * beta2 * (2.0 * f_i * (b - a - c) + b * b - a * a - c * c)
}

/// Dispersion parameters of a group around a reference frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub beta1: f64,
    pub beta2: f64,
}

impl Dispersion {
    /// `β(f) − β(f_c)` to second order.
    fn beta(&self, f: f64, f_c: f64) -> f64 {
        let w = 2.0 * PI * (f - f_c);
        self.beta1 * w + 0.5 * self.beta2 * w * w
    }
}

/// `Δβ = β_n(f_i) − β_m(f_h) + β_m(f_k) − β_n(f_l)` for inter-group mixing.
pub fn img_phase_mismatch(dn: Dispersion, dm: Dispersion, f_c: f64, f: [f64; 4]) -> f64 {
    let [f_i, f_h, f_k, f_l] = f;
    dn.beta(f_i, f_c) - dm.beta(f_h, f_c) + dm.beta(f_k, f_c) - dn.beta(f_l, f_c)
}

pub fn loss_mismatch(alpha_i: f64, alpha_h: f64, alpha_k: f64, alpha_l: f64) -> f64 {
    alpha_i - alpha_h - alpha_k - alpha_l
}

/// `ρ = 2·Re[(1 − e^{−(Δα/2 + jΔβ)z}) / (Δα/2 + jΔβ)]`.
pub fn efficiency_exact(m: Mismatch, z: f64) -> f64 {
    let (a, b) = (0.5 * m.delta_alpha, m.delta_beta);
    let den = a * a + b * b;
    if den == 0.0 {
        return 2.0 * z;
    }
    let (sin, cos) = (b * z).sin_cos();
    let half = (0.5 * b * z).sin();
    // 1 − e^{−az}cos(bz), written to avoid cancellation at small z
    let x = 2.0 * half * half - cos * (-a * z).exp_m1();
    let y = (-a * z).exp() * sin;
    2.0 * (x * a + y * b) / den
}

/// `ρ̃ = 4Δα/(Δα² + 4Δβ²)`; undefined when both mismatches vanish.
pub fn efficiency_averaged(m: Mismatch) -> Result<f64> {
    let den = m.delta_alpha * m.delta_alpha + 4.0 * m.delta_beta * m.delta_beta;
    if den == 0.0 {
        return Err(Error::domain("averaged efficiency needs a nonzero mismatch"));
    }
    Ok(4.0 * m.delta_alpha / den)
}

fn denominator(m: Mismatch) -> f64 {
    m.delta_alpha * m.delta_alpha + 4.0 * m.delta_beta * m.delta_beta
}

/// Lossless interference χ and its slowly varying envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi {
    pub exact: f64,
    pub max: f64,
    pub min: f64,
    pub avg: f64,
}

pub fn chi_and_envelopes(m: Mismatch, z: f64) -> Chi {
    let e = (m.delta_alpha * z).exp();
    let h = (0.5 * m.delta_alpha * z).exp();
    let hm1 = (0.5 * m.delta_alpha * z).exp_m1();
    Chi {
        exact: e - 2.0 * h * (m.delta_beta * z).cos() + 1.0,
        max: e + 2.0 * h + 1.0,
        min: hm1 * hm1,
        avg: e + 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiVariant {
    Exact,
    Average,
    Min,
    Max,
}

impl Chi {
    pub fn pick(&self, v: ChiVariant) -> f64 {
        match v {
            ChiVariant::Exact => self.exact,
            ChiVariant::Average => self.avg,
            ChiVariant::Min => self.min,
            ChiVariant::Max => self.max,
        }
    }
}

/// Source weight and mismatch of every intra-group triple on `(n, i)`,
/// from launch powers and static losses.
fn static_terms(scn: &Scenario, n: usize, i: usize) -> Vec<(f64, Mismatch)> {
    let g = scn.group(n);
    let p = &scn.launch().p_tx[n];
    let a = scn.alphas(n);
    let f = scn.frequencies();
    let d = g.degenerate_modes as f64;
    enumerate_triples(scn.grid(), n, i)
        .into_iter()
        .map(|t| {
            let w = if t.degenerate {
                (g.kurtosis.at(t.h) + 2.0) * p[t.h] * p[t.h] * p[t.k]
            } else {
                2.0 * d * p[t.h] * p[t.k] * p[t.l]
            };
            let m = Mismatch {
                delta_alpha: loss_mismatch(a[i], a[t.h], a[t.k], a[t.l]),
                delta_beta: phase_mismatch(g.beta2, f[i], f[t.h], f[t.k], f[t.l]),
            };
            (w, m)
        })
        .collect()
}

fn kerr_prefactor(scn: &Scenario, n: usize) -> f64 {
    let g = scn.group(n);
    let r = scn.scaling_factor(n);
    let d = g.degenerate_modes as f64;
    r * r * g.gamma * g.gamma / (d * d)
}

/// Accumulated FWM power on `(n, i)` at `z` with static exponential
/// signal profiles: `4r²γ²/D² · Σ w·χ/(Δα² + 4Δβ²) · e^{−α_i z}`.
pub fn closed_form_fwm_power(scn: &Scenario, n: usize, i: usize, z: f64, variant: ChiVariant) -> f64 {
    let sum: f64 = static_terms(scn, n, i)
        .into_iter()
        .map(|(w, m)| w * chi_and_envelopes(m, z).pick(variant) / denominator(m))
        .sum();
    4.0 * kerr_prefactor(scn, n) * sum * (-scn.alpha(n, i) * z).exp()
}

/// Interference present at the input when the averaged efficiency is used:
/// the closed form at z = 0 with χ̃(0) = 2. Zero in exact mode.
pub fn fwm_input_condition(scn: &Scenario, n: usize, i: usize, use_average: bool) -> f64 {
    if !use_average {
        return 0.0;
    }
    let sum: f64 = static_terms(scn, n, i)
        .into_iter()
        .map(|(w, m)| w / denominator(m))
        .sum();
    8.0 * kerr_prefactor(scn, n) * sum
}

/// One precomputed contribution to the FWM rate of a target slot.
///
/// Indices address a flat `group · channels + channel` layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwmTerm {
    /// Everything but the three source powers and the efficiency.
    pub coef: f64,
    /// Slots whose signal powers multiply (h, k, l).
    pub src: [usize; 3],
    /// Slots whose losses form Δα (i, h, k, l).
    pub loss: [usize; 4],
    pub delta_beta: f64,
}

/// All FWM terms feeding one target slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FwmPlan {
    pub terms: Vec<FwmTerm>,
}

impl FwmPlan {
    /// Intra-group terms, plus inter-group terms when enabled.
    pub fn build(scn: &Scenario, n: usize, i: usize) -> Self {
        let mut plan = Self::intra(scn, n, i);
        if scn.settings().include_img_terms {
            plan.terms.extend(Self::inter(scn, n, i).terms);
        }
        plan.merged()
    }

    /// Folds terms that describe the same mixing product, i.e. the two
    /// orderings of a non-degenerate pair, into one.
    pub fn merged(self) -> Self {
        let mut index: std::collections::HashMap<(usize, usize, usize), usize> = std::collections::HashMap::new();
        let mut terms: Vec<FwmTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            let [h, k, l] = t.src;
            let key = (k, h.min(l), h.max(l));
            match index.get(&key) {
                Some(&j) => terms[j].coef += t.coef,
                None => {
                    index.insert(key, terms.len());
                    terms.push(t);
                }
            }
        }
        Self { terms }
    }

    pub fn intra(scn: &Scenario, n: usize, i: usize) -> Self {
        let g = scn.group(n);
        let nc = scn.channels();
        let f = scn.frequencies();
        let at = |c: usize| n * nc + c;
        let k0 = kerr_prefactor(scn, n);
        let d = g.degenerate_modes as f64;
        let terms = enumerate_triples(scn.grid(), n, i)
            .into_iter()
            .map(|t| FwmTerm {
                coef: if t.degenerate {
                    k0 * (g.kurtosis.at(t.h) + 2.0)
                } else {
                    k0 * 2.0 * d
                },
                src: [at(t.h), at(t.k), at(t.l)],
                loss: [at(i), at(t.h), at(t.k), at(t.l)],
                delta_beta: phase_mismatch(g.beta2, f[i], f[t.h], f[t.k], f[t.l]),
            })
            .collect();
        Self { terms }
    }

    /// Inter-group terms `2γ_n²·r_nm²/D_m·P_{m,h}P_{m,k}P_{n,l}`.
    pub fn inter(scn: &Scenario, n: usize, i: usize) -> Self {
        let nc = scn.channels();
        let f = scn.frequencies();
        let f_c = scn.grid().center_frequency();
        let gn = scn.group(n);
        let dn = Dispersion {
            beta1: gn.beta1,
            beta2: gn.beta2,
        };
        let mut terms = Vec::new();
        for m in (0..scn.groups()).filter(|&m| m != n) {
            let r = scn.spec().coupling.overlap(n, m).unwrap_or(0.0);
            if r == 0.0 {
                continue;
            }
            let gm = scn.group(m);
            let dm = Dispersion {
                beta1: gm.beta1,
                beta2: gm.beta2,
            };
            let coef = 2.0 * gn.gamma * gn.gamma * r * r / gm.degenerate_modes as f64;
            for t in enumerate_img_triples(scn.grid(), n, m, i) {
                terms.push(FwmTerm {
                    coef,
                    src: [m * nc + t.h, m * nc + t.k, n * nc + t.l],
                    loss: [n * nc + i, m * nc + t.h, m * nc + t.k, n * nc + t.l],
                    delta_beta: img_phase_mismatch(dn, dm, f_c, [f[i], f[t.h], f[t.k], f[t.l]]),
                });
            }
        }
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn mismatch(t: &FwmTerm, loss: &[f64]) -> Mismatch {
        let [i, h, k, l] = t.loss;
        Mismatch {
            delta_alpha: loss_mismatch(loss[i], loss[h], loss[k], loss[l]),
            delta_beta: t.delta_beta,
        }
    }

    /// FWM rate at `z` from signal powers `sig` and effective losses `loss`
    /// (both flat arrays evaluated at `z`).
    pub fn rate(&self, sig: &[f64], loss: &[f64], z: f64, mode: FwmMode) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let p = sig[t.src[0]] * sig[t.src[1]] * sig[t.src[2]];
                if p == 0.0 {
                    return 0.0;
                }
                let m = Self::mismatch(t, loss);
                let rho = match mode {
                    FwmMode::Exact => efficiency_exact(m, z),
                    FwmMode::Averaged => efficiency_averaged(m).unwrap_or_else(|_| efficiency_exact(m, z)),
                };
                t.coef * p * rho
            })
            .sum()
    }

    /// Input condition `8·Σ coef·P_hP_kP_l/(Δα² + 4Δβ²)` for averaged mode.
    pub fn input_condition(&self, sig0: &[f64], loss0: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let p = sig0[t.src[0]] * sig0[t.src[1]] * sig0[t.src[2]];
                let den = denominator(Self::mismatch(t, loss0));
                if p == 0.0 || den == 0.0 {
                    0.0
                } else {
                    8.0 * t.coef * p / den
                }
            })
            .sum()
    }
}

/// FWM power on slot `target` generated by `plan` alone, as `(z, P)` at
/// every step. Integrates `dP/dz = rate − ℓP` with RK4; `with_srs` selects
/// tilted signal profiles and SRS-aware losses instead of static ones.
pub fn fwm_power_curve(
    scn: &Scenario,
    plan: &FwmPlan,
    target: usize,
    steps: usize,
    mode: FwmMode,
    with_srs: bool,
) -> Result<Vec<(f64, f64)>> {
    if steps == 0 {
        return Err(Error::domain("at least one step is needed"));
    }
    let nc = scn.channels();
    let slots = scn.groups() * nc;
    let p0 = scn.launch().p_tx.concat();
    let alpha: Vec<f64> = (0..slots).map(|j| scn.alpha(j / nc, j % nc)).collect();
    let env = |z: f64| -> (Vec<f64>, Vec<f64>, f64) {
        if with_srs {
            let sig = (0..slots).map(|j| crate::srs::signal_profile(scn, j / nc, j % nc, z)).collect();
            let eff = (0..slots).map(|j| crate::srs::effective_loss(scn, j / nc, j % nc, z)).collect();
            (sig, eff, crate::srs::local_loss(scn, target / nc, target % nc, z))
        } else {
            let sig = (0..slots).map(|j| p0[j] * (-alpha[j] * z).exp()).collect();
            (sig, alpha.clone(), alpha[target])
        }
    };
    let mut rhs = |z: f64, y: &[f64], d: &mut [f64]| {
        let (sig, eff, l) = env(z);
        d[0] = plan.rate(&sig, &eff, z, mode) - l * y[0];
    };
    let mut y = [match mode {
        FwmMode::Averaged => {
            let (sig, eff, _) = env(0.0);
            plan.input_condition(&sig, &eff)
        }
        FwmMode::Exact => 0.0,
    }];
    let dz = scn.span_length() / steps as f64;
    let mut rk = crate::integrate::Rk4::new(1);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, y[0]));
    for s in 0..steps {
        rk.step(&mut rhs, s as f64 * dz, dz, &mut y)?;
        out.push(((s + 1) as f64 * dz, y[0]));
    }
    Ok(out)
}

/// Inter-group FWM rate on `(n, i)` with the averaged efficiency.
pub fn img_fwm_rate(scn: &Scenario, sig: &[f64], loss: &[f64], n: usize, i: usize, z: f64) -> Result<f64> {
    if scn.groups() > 1 {
        for m in (0..scn.groups()).filter(|&m| m != n) {
            if scn.spec().coupling.overlap(n, m).is_none() {
                return Err(Error::invalid(
                    format!("coupling[{n}][{m}].overlap"),
                    "inter-group FWM needs r_nm",
                ));
            }
        }
    }
    Ok(FwmPlan::inter(scn, n, i).rate(sig, loss, z, FwmMode::Averaged))
}
