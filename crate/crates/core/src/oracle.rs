//! Numerically exact references for the approximations used elsewhere.
//!
//! Nothing here relies on the closed-form SRS tilt or on averaged FWM
//! efficiencies: signal profiles come from the coupled Raman equations,
//! integrated in log-power for every slot (empty slots act as probes), and
//! FWM uses either the oscillatory efficiency with profile-derived losses
//! or the coherent field integral.

use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fwm::{FwmPlan, FwmTerm};
use crate::integrate::Rk4;
use crate::kinetics::{self, PowerState, SolveOptions, SolveResult, Sources};
use crate::profiles::{crosstalk_at, raman_cross_section, raman_gain};
use crate::scenario::{Direction, FwmMode, Scenario, Scheme};

/// Log-gain form of the coupled Raman equations,
/// `d ln P_i/dz = −α_i + Σ_h G_ih·P_h` within each group.
struct SrsOde {
    nc: usize,
    groups: usize,
    alpha: Vec<f64>,
    p0: Vec<f64>,
    /// `G[n][i][h]`: gain from higher-frequency pumps, loss towards lower.
    gain: Vec<f64>,
    power: Vec<f64>,
}

impl SrsOde {
    fn new(scn: &Scenario) -> Result<Self> {
        if scn.settings().include_img_terms {
            return Err(Error::Unsupported(
                "reference solves cover intra-group Raman coupling only".into(),
            ));
        }
        let (nc, groups) = (scn.channels(), scn.groups());
        let f = scn.frequencies();
        let mut gain = vec![0.0; groups * nc * nc];
        if scn.settings().include_srs {
            for n in 0..groups {
                let model = &scn.group(n).raman_gain;
                for i in 0..nc {
                    for h in (0..nc).filter(|&h| h != i) {
                        let g = raman_gain(model, (f[h] - f[i]).abs())?;
                        gain[(n * nc + i) * nc + h] = if f[h] > f[i] { g } else { -g };
                    }
                }
            }
        }
        Ok(Self {
            nc,
            groups,
            alpha: (0..groups).flat_map(|n| scn.alphas(n).to_vec()).collect(),
            p0: scn.launch().p_tx.concat(),
            gain,
            power: vec![0.0; groups * nc],
        })
    }

    fn slots(&self) -> usize {
        self.groups * self.nc
    }

    /// Fills `dy` with log-gain slopes; afterwards `self.power` holds the
    /// powers at `y`.
    fn eval(&mut self, y: &[f64], dy: &mut [f64]) {
        let nc = self.nc;
        for ((p, p0), y) in self.power.iter_mut().zip(&self.p0).zip(y) {
            *p = p0 * y.exp();
        }
        for n in 0..self.groups {
            let p = &self.power[n * nc..(n + 1) * nc];
            for i in 0..nc {
                let row = &self.gain[(n * nc + i) * nc..(n * nc + i + 1) * nc];
                let g: f64 = row.iter().zip(p).map(|(g, p)| g * p).sum();
                dy[n * nc + i] = -self.alpha[n * nc + i] + g;
            }
        }
    }
}

/// Signal trajectories from the coupled Raman equations.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsProfiles {
    pub z: Vec<f64>,
    /// `ln(P(z)/P(0))` per sample, flat over slots.
    pub log_gain: Vec<Vec<f64>>,
    pub p0: Vec<f64>,
}

impl SrsProfiles {
    pub fn power(&self, sample: usize, slot: usize) -> f64 {
        self.p0[slot] * self.log_gain[sample][slot].exp()
    }

    pub fn effective_loss(&self, sample: usize, slot: usize) -> Result<f64> {
        let z = self.z[sample];
        if !(z > 0.0) {
            return Err(Error::domain("effective attenuation needs z > 0"));
        }
        Ok(-self.log_gain[sample][slot] / z)
    }
}

fn stride(steps: usize, opts: SolveOptions) -> usize {
    steps.div_ceil(opts.max_samples.max(2) - 1).max(1)
}

/// RK4 on the coupled Raman equations with `steps` sections per span.
pub fn srs_coupled_solve(scn: &Scenario, steps: usize, opts: SolveOptions) -> Result<SrsProfiles> {
    if steps == 0 {
        return Err(Error::domain("at least one step is needed"));
    }
    let mut ode = SrsOde::new(scn)?;
    let dim = ode.slots();
    let dz = scn.span_length() / steps as f64;
    let every = stride(steps, opts);
    let mut rk = Rk4::with_free_prefix(dim, dim);
    let mut y = vec![0.0; dim];
    let mut out = SrsProfiles {
        z: vec![0.0],
        log_gain: vec![y.clone()],
        p0: ode.p0.clone(),
    };
    for s in 0..steps {
        rk.step(&mut |_, y: &[f64], d: &mut [f64]| ode.eval(y, d), s as f64 * dz, dz, &mut y)?;
        if (s + 1) % every == 0 || s + 1 == steps {
            out.z.push((s + 1) as f64 * dz);
            out.log_gain.push(y.clone());
        }
    }
    Ok(out)
}

/// `α̃(z) = −ln(P(z)/P(0))/z`.
pub fn effective_attenuation_from_profile(p0: f64, pz: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain("effective attenuation needs z > 0"));
    }
    if !(p0 > 0.0 && pz > 0.0) {
        return Err(Error::domain("effective attenuation needs positive powers"));
    }
    Ok(-(pz / p0).ln() / z)
}

/// Running value of `J(z) = ∫₀^z e^{φ(z') + jΔβz'} dz'` for one mixing
/// product, where `φ = ½(ln g_h + ln g_k + ln g_l − ln g_i)` collects the
/// log-gains of the three sources and the target.
///
/// `φ` is taken linear between nodes and each section is integrated in
/// closed form, so exponential profiles are integrated exactly.
#[derive(Debug, Clone, Copy)]
pub struct CoherentIntegral {
    delta_beta: f64,
    z: f64,
    phi: f64,
    j: Complex64,
}

impl CoherentIntegral {
    pub fn new(delta_beta: f64) -> Self {
        Self {
            delta_beta,
            z: 0.0,
            phi: 0.0,
            j: Complex64::new(0.0, 0.0),
        }
    }

    pub fn advance(&mut self, z: f64, phi: f64) {
        let dz = z - self.z;
        let w = Complex64::new((phi - self.phi) / dz, self.delta_beta);
        let wd = w * dz;
        // (e^{w·dz} − 1)/w without cancellation for small |w·dz|
        let section = if wd.norm() < 1e-4 {
            dz * (1.0 + wd * (0.5 + wd * (1.0 / 6.0 + wd / 24.0)))
        } else {
            (wd.exp() - 1.0) / w
        };
        let start = Complex64::new(self.phi, self.delta_beta * self.z).exp();
        self.j += start * section;
        self.z = z;
        self.phi = phi;
    }

    /// `ρ(z) = 2·Re[J*·e^{jΔβz}]·e^{−φ(z)}`.
    pub fn efficiency(&self) -> f64 {
        let phase = Complex64::new(0.0, self.delta_beta * self.z).exp();
        2.0 * (self.j.conj() * phase).re * (-self.phi).exp()
    }

    pub fn intensity(&self) -> f64 {
        self.j.norm_sqr()
    }
}

/// Efficiency from the coherent integral with a loss mismatch that may
/// vary along the fiber. `delta_alpha` is called at `z·k/steps` for
/// increasing `k`, so stateful profile generators are allowed.
pub fn efficiency_numeric(
    mut delta_alpha: impl FnMut(f64) -> f64,
    delta_beta: f64,
    z: f64,
    steps: usize,
) -> Result<f64> {
    if !(z >= 0.0) || steps == 0 {
        return Err(Error::domain("efficiency quadrature needs z ≥ 0 and steps ≥ 1"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut acc = CoherentIntegral::new(delta_beta);
    for k in 1..=steps {
        let zk = z * k as f64 / steps as f64;
        acc.advance(zk, 0.5 * delta_alpha(zk) * zk);
    }
    Ok(acc.efficiency())
}

/// Power of a single FWM product along the span, from the coherent field
/// integral driven by coupled-Raman signal profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleCurve {
    pub z: Vec<f64>,
    pub power: Vec<f64>,
}

pub fn fwm_triple_reference(scn: &Scenario, term: &FwmTerm, steps: usize, opts: SolveOptions) -> Result<TripleCurve> {
    if steps == 0 {
        return Err(Error::domain("at least one step is needed"));
    }
    let mut ode = SrsOde::new(scn)?;
    let dim = ode.slots();
    let dz = scn.span_length() / steps as f64;
    let every = stride(steps, opts);
    let [i, h, k, l] = term.loss;
    let scale = term.coef * ode.p0[term.src[0]] * ode.p0[term.src[1]] * ode.p0[term.src[2]];
    let mut acc = CoherentIntegral::new(term.delta_beta);
    let mut rk = Rk4::with_free_prefix(dim, dim);
    let mut y = vec![0.0; dim];
    let mut curve = TripleCurve {
        z: vec![0.0],
        power: vec![0.0],
    };
    for s in 0..steps {
        rk.step(&mut |_, y: &[f64], d: &mut [f64]| ode.eval(y, d), s as f64 * dz, dz, &mut y)?;
        let z = (s + 1) as f64 * dz;
        acc.advance(z, 0.5 * (y[h] + y[k] + y[l] - y[i]));
        if (s + 1) % every == 0 || s + 1 == steps {
            curve.z.push(z);
            curve.power.push(scale * y[i].exp() * acc.intensity());
        }
    }
    Ok(curve)
}

/// The non-degenerate product of the three nearest classical neighbours
/// on one side of `target` (flat slot index), when the grid has them.
pub fn neighbour_term(scn: &Scenario, target: usize) -> Option<FwmTerm> {
    let nc = scn.channels();
    let (n, i) = (target / nc, target % nc);
    let side: isize = if i + 3 < nc { 1 } else { -1 };
    let at = |d: isize| (i as isize + side * d) as usize + n * nc;
    let want = [at(1), at(3), at(2)];
    FwmPlan::intra(scn, n, i)
        .merged()
        .terms
        .into_iter()
        .find(|t| t.src == want || t.src == [want[2], want[1], want[0]])
}

/// One band-edge FWM product at the span end under the four treatments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrsFwmComparison {
    pub term: FwmTerm,
    /// Coherent field integral over coupled-Raman profiles.
    pub reference: f64,
    /// Averaged efficiency with the SRS effective loss.
    pub averaged: f64,
    /// Oscillatory efficiency with the SRS effective loss, at the reference
    /// step count.
    pub exact: f64,
    /// Averaged efficiency on untilted profiles.
    pub no_srs: f64,
}

impl SrsFwmComparison {
    fn db(x: f64, r: f64) -> f64 {
        10.0 * (x / r).log10()
    }

    pub fn averaged_db(&self) -> f64 {
        Self::db(self.averaged, self.reference)
    }

    pub fn exact_db(&self) -> f64 {
        Self::db(self.exact, self.reference)
    }

    pub fn no_srs_db(&self) -> f64 {
        Self::db(self.no_srs, self.reference)
    }
}

/// Compares SRS-aware and SRS-blind FWM on the neighbour product of
/// `target` against [`fwm_triple_reference`] at `z = L_s`.
pub fn srs_fwm_comparison(scn: &Scenario, target: usize, steps: usize, reference_steps: usize) -> Result<SrsFwmComparison> {
    let term = neighbour_term(scn, target)
        .ok_or_else(|| Error::domain("the target has no three classical neighbours on either side"))?;
    let plan = FwmPlan { terms: vec![term] };
    let end = |mode, srs, steps| -> Result<f64> {
        Ok(crate::fwm::fwm_power_curve(scn, &plan, target, steps, mode, srs)?
            .last()
            .map_or(0.0, |p| p.1))
    };
    let reference = fwm_triple_reference(scn, &term, reference_steps, SolveOptions { max_samples: 2 })?;
    Ok(SrsFwmComparison {
        term,
        reference: *reference.power.last().expect("curve has samples"),
        averaged: end(FwmMode::Averaged, true, steps)?,
        // the oscillating efficiency needs steps well below 1/Δβ
        exact: end(FwmMode::Exact, true, reference_steps)?,
        no_srs: end(FwmMode::Averaged, false, steps)?,
    })
}

/// Full-model co-propagating solve on every slot with oscillatory FWM
/// efficiencies, signal profiles and local losses from the coupled Raman
/// equations, and `steps` sections per span.
pub fn fine_step_reference(scn: &Scenario, steps: usize, opts: SolveOptions) -> Result<SolveResult> {
    if scn.spec().scheme != Scheme::Co {
        return Err(Error::Unsupported("reference solves cover the co-propagating scheme".into()));
    }
    if scn.loaded_groups().any(|n| scn.launch().direction[n] == Direction::Backward) {
        return Err(Error::Unsupported("bidirectional classical load".into()));
    }
    if steps == 0 {
        return Err(Error::domain("at least one step is needed"));
    }
    let mut ode = SrsOde::new(scn)?;
    let (nc, groups) = (scn.channels(), scn.groups());
    let slots = groups * nc;
    let f = scn.frequencies();
    let t = scn.launch().temperature;

    let mut eta = vec![0.0; groups * nc * nc];
    for n in 0..groups {
        for i in 0..nc {
            for h in (0..nc).filter(|&h| h != i) {
                eta[(n * nc + i) * nc + h] = raman_cross_section(f[i], f[h], t, scn.grid().spacing, &scn.group(n).raman_gain)?;
            }
        }
    }
    let mut kappa = vec![0.0; groups * slots];
    for n in 0..groups {
        for m in (0..groups).filter(|&m| m != n) {
            for i in 0..nc {
                kappa[(n * groups + m) * nc + i] = crosstalk_at(&scn.spec().coupling, n, m, f[i])?;
            }
        }
    }
    let plans: Vec<FwmPlan> = (0..slots).map(|j| FwmPlan::build(scn, j / nc, j % nc)).collect();

    let dim = slots + 4 * slots;
    let dz = scn.span_length() / steps as f64;
    let mut dlog = vec![0.0; slots];
    let mut eff = vec![0.0; slots];
    let mut pump = vec![0.0; slots];
    let mut rhs = |z: f64, y: &[f64], dy: &mut [f64]| {
        ode.eval(&y[..slots], &mut dlog);
        dy[..slots].copy_from_slice(&dlog);
        for j in 0..slots {
            eff[j] = if z > 0.0 { -y[j] / z } else { -dlog[j] };
            pump[j] = ode.power[j] + y[slots + 4 * j..slots + 4 * j + 4].iter().sum::<f64>();
        }
        for j in 0..slots {
            let (n, i) = (j / nc, j % nc);
            let own = &y[slots + 4 * j..slots + 4 * j + 4];
            let loss = -dlog[j];
            let row = &eta[j * nc..(j + 1) * nc];
            let sprs: f64 = row.iter().zip(&pump[n * nc..(n + 1) * nc]).map(|(e, p)| e * p).sum();
            let mut x = [0.0; 4];
            let mut x_sig = 0.0;
            for m in (0..groups).filter(|&m| m != n) {
                let k = kappa[(n * groups + m) * nc + i];
                if k == 0.0 {
                    continue;
                }
                let src = m * nc + i;
                x_sig += k * ode.power[src];
                for c in 0..4 {
                    x[c] += k * y[slots + 4 * src + c];
                }
            }
            let fwm = if plans[j].is_empty() { 0.0 } else { plans[j].rate(&ode.power, &eff, z, FwmMode::Exact) };
            let d = &mut dy[slots + 4 * j..slots + 4 * j + 4];
            d[0] = sprs + x[0] - loss * own[0];
            d[1] = fwm + x[1] - loss * own[1];
            d[2] = x_sig + x[2] - loss * own[2];
            d[3] = x[3] - loss * own[3];
        }
    };

    let every = stride(steps, opts);
    let mut rk = Rk4::with_free_prefix(dim, slots);
    let mut y = vec![0.0; dim];
    let p0 = scn.launch().p_tx.concat();
    let snapshot = |z: f64, y: &[f64]| PowerState {
        z,
        signal: (0..slots).map(|j| p0[j] * y[j].exp()).collect(),
        forward: (0..slots)
            .map(|j| {
                let c = &y[slots + 4 * j..slots + 4 * j + 4];
                Sources {
                    sprs: c[0],
                    fwm: c[1],
                    xtalk: c[2],
                    rayleigh: c[3],
                }
            })
            .collect(),
        backward: Vec::new(),
    };
    let mut z_samples = vec![0.0];
    let mut states = vec![snapshot(0.0, &y)];
    for s in 0..steps {
        rk.step(&mut rhs, s as f64 * dz, dz, &mut y)?;
        if (s + 1) % every == 0 || s + 1 == steps {
            let z = (s + 1) as f64 * dz;
            z_samples.push(z);
            states.push(snapshot(z, &y));
        }
    }
    Ok(SolveResult {
        z_samples,
        states,
        tracked: (0..slots).collect(),
        scheme: Scheme::Co,
        steps,
        clamps: rk.clamps(),
        provenance: kinetics::provenance(scn),
    })
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: String,
    pub z: f64,
    pub reference: f64,
    pub target: f64,
}

impl Comparison {
    pub fn abs_error(&self) -> f64 {
        (self.target - self.reference).abs()
    }

    pub fn rel_error(&self) -> f64 {
        if self.reference == 0.0 {
            if self.target == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.abs_error() / self.reference.abs()
        }
    }

    /// `|10·log10(target/reference)|`; zero when both vanish.
    pub fn error_db(&self) -> f64 {
        match (self.reference > 0.0, self.target > 0.0) {
            (true, true) => (10.0 * (self.target / self.reference).log10()).abs(),
            _ if self.reference == self.target => 0.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows: Vec<Comparison>,
    pub reference_steps: usize,
    pub target_steps: usize,
    pub reference_time: Duration,
    pub target_time: Duration,
}

impl OracleReport {
    /// Largest dB deviation among rows whose name starts with `prefix`.
    pub fn max_error_db(&self, prefix: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.quantity.starts_with(prefix))
            .map(Comparison::error_db)
            .fold(0.0, f64::max)
    }

    pub fn speedup(&self) -> f64 {
        self.reference_time.as_secs_f64() / self.target_time.as_secs_f64().max(1e-9)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv {
            path: "oracle report".into(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "z_km", "reference_W", "target_W", "abs_error_W", "rel_error", "error_dB"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.quantity.clone(),
                format!("{:.6}", r.z / 1e3),
                format!("{:.11e}", r.reference),
                format!("{:.11e}", r.target),
                format!("{:.11e}", r.abs_error()),
                format!("{:.11e}", r.rel_error()),
                format!("{:.6}", r.error_db()),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "oracle report".into(),
            source: e,
        })
    }

    pub fn summary(&self) -> String {
        format!(
            "reference: {} steps in {:.3} s\ntarget: {} steps in {:.3} s (speedup {:.0}x)\n\
             endpoint total error: {:.4} dB\nmax error along z: {:.4} dB\n",
            self.reference_steps,
            self.reference_time.as_secs_f64(),
            self.target_steps,
            self.target_time.as_secs_f64(),
            self.speedup(),
            self.max_error_db("endpoint.total"),
            self.max_error_db("trace.total"),
        )
    }
}

/// Work units (slot-steps) above which [`verify`] refuses to run.
pub const ORACLE_BUDGET: f64 = 2e9;

/// Compares the scenario's own solve with a fine-step reference on the
/// quantum slot.
pub fn verify(scn: &Scenario, reference_steps: usize) -> Result<OracleReport> {
    let target_steps = scn.settings().steps_per_span;
    if reference_steps < 10 * target_steps {
        return Err(Error::invalid("oracle.steps", "the reference needs at least 10× the target steps"));
    }
    let work = reference_steps as f64 * (scn.groups() * scn.channels()) as f64;
    if work > ORACLE_BUDGET {
        return Err(Error::invalid(
            "oracle.steps",
            format!("{work:.2e} slot-steps exceed the oracle budget of {ORACLE_BUDGET:.0e}"),
        ));
    }
    let t0 = Instant::now();
    let target = kinetics::solve(scn)?;
    let target_time = t0.elapsed();
    let t0 = Instant::now();
    let reference = fine_step_reference(scn, reference_steps, SolveOptions { max_samples: 11 })?;
    let reference_time = t0.elapsed();

    let q = scn.quantum();
    let j = q.group * scn.channels() + q.channel;
    let mut rows = Vec::new();
    let end_ref = reference.states.last().expect("reference has samples").forward[j];
    let end_tgt = target.received(scn);
    let l_s = scn.span_length();
    for (name, r, t) in [
        ("endpoint.total", end_ref.total(), end_tgt.total()),
        ("endpoint.sprs", end_ref.sprs, end_tgt.sprs),
        ("endpoint.fwm", end_ref.fwm, end_tgt.fwm),
        ("endpoint.xtalk", end_ref.xtalk, end_tgt.xtalk),
        ("endpoint.rayleigh", end_ref.rayleigh, end_tgt.rayleigh),
    ] {
        rows.push(Comparison {
            quantity: name.into(),
            z: l_s,
            reference: r,
            target: t,
        });
    }
    for (z, st) in reference.z_samples.iter().zip(&reference.states).skip(1) {
        let hit = target
            .z_samples
            .iter()
            .position(|&zt| (zt - z).abs() <= 1e-6 * l_s);
        if let Some(k) = hit {
            rows.push(Comparison {
                quantity: "trace.total".into(),
                z: *z,
                reference: st.forward[j].total(),
                target: target.states[k].forward[j].total(),
            });
        }
    }
    Ok(OracleReport {
        rows,
        reference_steps,
        target_steps,
        reference_time,
        target_time,
    })
}
