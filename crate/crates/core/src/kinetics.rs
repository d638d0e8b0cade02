//! Interference power evolution: right-hand side assembly and the co- and
//! counter-propagating solves.
//!
//! Interference is carried as four labelled components so that the final
//! power can be attributed to its physical origin. SpRS terms feed `sprs`,
//! FWM feeds `fwm`, crosstalk of classical signal light feeds `xtalk` and
//! Rayleigh backscatter feeds `rayleigh`. Crosstalk of interference keeps
//! the label it already had. The total is always the sum of the four.

use crate::error::{Error, Result};
use crate::fwm::FwmPlan;
use crate::integrate::Rk4;
use crate::profiles::{crosstalk_at, raman_cross_section, rayleigh_at};
use crate::scenario::{serialize_scenario, Direction, FwmMode, Scenario, Scheme, TrackMode};
use crate::srs;
use sha2::{Digest, Sha256};

/// Interference power split by origin, W.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sources {
    pub sprs: f64,
    pub fwm: f64,
    pub xtalk: f64,
    pub rayleigh: f64,
}

impl Sources {
    pub fn total(&self) -> f64 {
        self.sprs + self.fwm + self.xtalk + self.rayleigh
    }

    fn from_slice(v: &[f64]) -> Self {
        Self {
            sprs: v[0],
            fwm: v[1],
            xtalk: v[2],
            rayleigh: v[3],
        }
    }

    fn write(&self, v: &mut [f64]) {
        v[0] = self.sprs;
        v[1] = self.fwm;
        v[2] = self.xtalk;
        v[3] = self.rayleigh;
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            sprs: self.sprs * s,
            fwm: self.fwm * s,
            xtalk: self.xtalk * s,
            rayleigh: self.rayleigh * s,
        }
    }

    fn add(&mut self, o: &Self) {
        self.sprs += o.sprs;
        self.fwm += o.fwm;
        self.xtalk += o.xtalk;
        self.rayleigh += o.rayleigh;
    }
}

/// Powers of every slot at one position. Arrays are flat over
/// `group · channels + channel`; untracked slots hold zero interference.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerState {
    pub z: f64,
    /// Forward classical signal powers.
    pub signal: Vec<f64>,
    pub forward: Vec<Sources>,
    /// Empty unless the scheme is counter-propagating.
    pub backward: Vec<Sources>,
}

impl PowerState {
    pub fn zero(scn: &Scenario, z: f64) -> Self {
        let len = scn.groups() * scn.channels();
        Self {
            z,
            signal: vec![0.0; len],
            forward: vec![Sources::default(); len],
            backward: Vec::new(),
        }
    }

    /// A state at `z` with unperturbed signal profiles and no interference.
    pub fn signals_at(scn: &Scenario, z: f64) -> Self {
        let mut s = Self::zero(scn, z);
        fill_signals(scn, z, &mut s.signal);
        s
    }

    pub fn interference(&self, slot: usize, dir: Direction) -> Sources {
        match dir {
            Direction::Forward => self.forward[slot],
            Direction::Backward => self.backward.get(slot).copied().unwrap_or_default(),
        }
    }
}

fn fill_signals(scn: &Scenario, z: f64, out: &mut [f64]) {
    let nc = scn.channels();
    for n in 0..scn.groups() {
        for i in 0..nc {
            out[n * nc + i] = srs::signal_profile(scn, n, i, z);
        }
    }
}

fn fill_losses(scn: &Scenario, z: f64, eff: &mut [f64], local: &mut [f64]) {
    let nc = scn.channels();
    for n in 0..scn.groups() {
        for i in 0..nc {
            eff[n * nc + i] = srs::effective_loss(scn, n, i, z);
            local[n * nc + i] = srs::local_loss(scn, n, i, z);
        }
    }
}

/// Precomputed coefficients of the interference equations.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    scn: &'a Scenario,
    nc: usize,
    groups: usize,
    /// η_ih of group n at `[n][i][h]`, zero on the diagonal.
    eta: Vec<f64>,
    /// Scale of group n's η applied to pumps in group m, `A_n/A_nm`.
    eta_scale: Vec<f64>,
    /// κ_nm(f_i) at `[n][m][i]`.
    kappa: Vec<f64>,
    /// Γ at `[n][i]`.
    gamma_r: Vec<f64>,
    plans: Vec<FwmPlan>,
    tracked: Vec<usize>,
    fwm_mode: FwmMode,
}

impl<'a> Model<'a> {
    pub fn new(scn: &'a Scenario) -> Result<Self> {
        let (nc, groups) = (scn.channels(), scn.groups());
        let f = scn.frequencies();
        let t = scn.launch().temperature;
        let b = scn.grid().spacing;
        let s = scn.settings();

        let mut eta = vec![0.0; groups * nc * nc];
        for n in 0..groups {
            let model = &scn.group(n).raman_gain;
            for i in 0..nc {
                for h in (0..nc).filter(|&h| h != i) {
                    eta[(n * nc + i) * nc + h] = raman_cross_section(f[i], f[h], t, b, model)?;
                }
            }
        }

        let mut eta_scale = vec![0.0; groups * groups];
        for n in 0..groups {
            eta_scale[n * groups + n] = 1.0;
            if !s.include_img_terms {
                continue;
            }
            for m in (0..groups).filter(|&m| m != n) {
                let a_n = scn.group(n).effective_area;
                let a_nm = scn.spec().coupling.cross_area(n, m);
                eta_scale[n * groups + m] = match (a_n, a_nm) {
                    (Some(a), Some(c)) => a / c,
                    _ => {
                        return Err(Error::invalid(
                            format!("coupling[{n}][{m}].effective_area"),
                            "inter-group SpRS needs both effective areas",
                        ))
                    }
                };
            }
        }

        let mut kappa = vec![0.0; groups * groups * nc];
        for n in 0..groups {
            for m in (0..groups).filter(|&m| m != n) {
                for i in 0..nc {
                    kappa[(n * groups + m) * nc + i] = crosstalk_at(&scn.spec().coupling, n, m, f[i])?;
                }
            }
        }

        let gamma_r = (0..groups)
            .flat_map(|n| f.iter().map(move |&fi| rayleigh_at(&scn.group(n).rayleigh, fi)))
            .collect();

        let q = scn.quantum();
        let all = 0..groups * nc;
        let (tracked, fwm_at): (Vec<usize>, Vec<bool>) = match s.track_mode {
            TrackMode::FullGrid => (all.clone().collect(), vec![true; groups * nc]),
            TrackMode::TargetChannel if groups == 1 => {
                let mut at = vec![false; nc];
                at[q.channel] = true;
                (vec![q.channel], at)
            }
            TrackMode::TargetChannel => (
                all.clone().collect(),
                all.map(|j| j % nc == q.channel && j / nc != q.group).collect(),
            ),
        };
        let plans = (0..groups * nc)
            .map(|j| {
                if fwm_at[j] {
                    FwmPlan::build(scn, j / nc, j % nc)
                } else {
                    FwmPlan::default()
                }
            })
            .collect();

        Ok(Self {
            scn,
            nc,
            groups,
            eta,
            eta_scale,
            kappa,
            gamma_r,
            plans,
            tracked,
            fwm_mode: s.fwm_mode,
        })
    }

    /// Flat indices of the slots whose equations are integrated.
    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    /// SpRS source on `(n, i)` from pumps `power` (flat, total per slot).
    fn sprs_source(&self, n: usize, i: usize, power: &[f64]) -> f64 {
        let nc = self.nc;
        let row = &self.eta[(n * nc + i) * nc..(n * nc + i + 1) * nc];
        (0..self.groups)
            .map(|m| {
                let scale = self.eta_scale[n * self.groups + m];
                if scale == 0.0 {
                    return 0.0;
                }
                let p = &power[m * nc..(m + 1) * nc];
                scale * row.iter().zip(p).map(|(e, p)| e * p).sum::<f64>()
            })
            .sum()
    }

    /// Crosstalk into `(n, i)`: signal part and label-preserving
    /// interference part.
    fn crosstalk(&self, n: usize, i: usize, sig: Option<&[f64]>, int: &[Sources]) -> (f64, Sources) {
        let mut x_sig = 0.0;
        let mut x_int = Sources::default();
        for m in (0..self.groups).filter(|&m| m != n) {
            let k = self.kappa[(n * self.groups + m) * self.nc + i];
            if k == 0.0 {
                continue;
            }
            let j = m * self.nc + i;
            if let Some(sig) = sig {
                x_sig += k * sig[j];
            }
            x_int.add(&int[j].scaled(k));
        }
        (x_sig, x_int)
    }

    /// Per-source derivative of the forward interference on slot `j`.
    fn forward_rate(&self, j: usize, z: f64, env: &Env, int: &[Sources]) -> Sources {
        let (n, i) = (j / self.nc, j % self.nc);
        let l = env.local[j];
        let own = int[j];
        let (x_sig, x_int) = self.crosstalk(n, i, Some(&env.sig), int);
        let fwm = if self.plans[j].is_empty() {
            0.0
        } else {
            self.plans[j].rate(&env.sig, &env.eff, z, self.fwm_mode)
        };
        Sources {
            sprs: self.sprs_source(n, i, &env.pump) + x_int.sprs - l * own.sprs,
            fwm: fwm + x_int.fwm - l * own.fwm,
            xtalk: x_sig + x_int.xtalk - l * own.xtalk,
            rayleigh: x_int.rayleigh - l * own.rayleigh,
        }
    }

    /// Per-source derivative of the backward interference on slot `j`,
    /// with respect to distance travelled by the backward light.
    fn backward_rate(&self, j: usize, env: &Env, fwd_total: &[f64], bwd: &[Sources], bwd_total: &[f64]) -> Sources {
        let (n, i) = (j / self.nc, j % self.nc);
        let l = env.local[j];
        let own = bwd[j];
        let (_, x_int) = self.crosstalk(n, i, None, bwd);
        let sprs = self.sprs_source(n, i, &env.pump) + self.sprs_source(n, i, bwd_total);
        Sources {
            sprs: sprs + x_int.sprs - l * own.sprs,
            fwm: x_int.fwm - l * own.fwm,
            xtalk: x_int.xtalk - l * own.xtalk,
            rayleigh: self.gamma_r[j] * (env.sig[j] + fwd_total[j]) + x_int.rayleigh - l * own.rayleigh,
        }
    }

    /// Per-source derivative of the interference on `(n, i)` travelling in
    /// `dir`, at the state's position.
    pub fn rate(&self, state: &PowerState, n: usize, i: usize, dir: Direction) -> Sources {
        let z = state.z;
        let mut env = Env::new(self.scn);
        env.load(self.scn, z, &state.forward, false);
        env.sig.copy_from_slice(&state.signal);
        for (p, (s, f)) in env.pump.iter_mut().zip(state.signal.iter().zip(&state.forward)) {
            *p = s + f.total();
        }
        let j = n * self.nc + i;
        match dir {
            Direction::Forward => self.forward_rate(j, z, &env, &state.forward),
            Direction::Backward => {
                let fwd: Vec<f64> = state.forward.iter().map(Sources::total).collect();
                let empty = vec![Sources::default(); state.forward.len()];
                let bwd = if state.backward.is_empty() { &empty } else { &state.backward };
                let bwd_total: Vec<f64> = bwd.iter().map(Sources::total).collect();
                self.backward_rate(j, &env, &fwd, bwd, &bwd_total)
            }
        }
    }
}

/// Per-position quantities shared by every slot's equation.
struct Env {
    sig: Vec<f64>,
    /// Signal plus forward interference: the light that pumps SpRS.
    pump: Vec<f64>,
    eff: Vec<f64>,
    local: Vec<f64>,
}

impl Env {
    fn new(scn: &Scenario) -> Self {
        let len = scn.groups() * scn.channels();
        Self {
            sig: vec![0.0; len],
            pump: vec![0.0; len],
            eff: vec![0.0; len],
            local: vec![0.0; len],
        }
    }

    fn load(&mut self, scn: &Scenario, z: f64, fwd: &[Sources], signals: bool) {
        if signals {
            fill_signals(scn, z, &mut self.sig);
        }
        fill_losses(scn, z, &mut self.eff, &mut self.local);
        for ((p, s), f) in self.pump.iter_mut().zip(&self.sig).zip(fwd) {
            *p = s + f.total();
        }
    }
}

/// Derivative of `(n, i)`'s interference in `dir` for the given state.
pub fn interference_rate(state: &PowerState, scn: &Scenario, n: usize, i: usize, dir: Direction) -> Result<f64> {
    Ok(Model::new(scn)?.rate(state, n, i, dir).total())
}

/// Sampling limits for a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Upper bound on retained samples, including both ends.
    pub max_samples: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_samples: 1001 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub z_samples: Vec<f64>,
    pub states: Vec<PowerState>,
    pub tracked: Vec<usize>,
    pub scheme: Scheme,
    pub steps: usize,
    /// Negative stage values clamped during integration.
    pub clamps: u64,
    /// SHA-256 of the scenario and solver settings.
    pub provenance: String,
}

impl SolveResult {
    /// Interference reaching the quantum receiver, at `z = L_s` for the co
    /// scheme and at `z = 0` for the counter scheme.
    pub fn received(&self, scn: &Scenario) -> Sources {
        let q = scn.quantum();
        let j = q.group * scn.channels() + q.channel;
        match self.scheme {
            Scheme::Co => self.states.last().map(|s| s.forward[j]).unwrap_or_default(),
            Scheme::Counter => self.states.first().map(|s| s.interference(j, Direction::Backward)).unwrap_or_default(),
        }
    }

    /// Interference on the quantum slot in the receiver's direction at
    /// every sample.
    pub fn quantum_trace(&self, scn: &Scenario) -> Vec<Sources> {
        let q = scn.quantum();
        let j = q.group * scn.channels() + q.channel;
        let dir = match self.scheme {
            Scheme::Co => Direction::Forward,
            Scheme::Counter => Direction::Backward,
        };
        self.states.iter().map(|s| s.interference(j, dir)).collect()
    }
}

pub fn provenance(scn: &Scenario) -> String {
    let mut h = Sha256::new();
    h.update(serialize_scenario(scn.spec()).as_bytes());
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn check_directions(scn: &Scenario) -> Result<()> {
    let backward = scn
        .loaded_groups()
        .any(|n| scn.launch().direction[n] == Direction::Backward);
    if backward {
        return Err(Error::Unsupported("bidirectional classical load".into()));
    }
    Ok(())
}

fn sample_stride(steps: usize, opts: SolveOptions) -> usize {
    let slots = opts.max_samples.max(2) - 1;
    steps.div_ceil(slots).max(1)
}

/// Forward pass. Returns the per-node states and, when asked, the state
/// vector and its slope at every node for later interpolation.
struct ForwardPass {
    nodes: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    clamps: u64,
}

fn unpack(model: &Model, y: &[f64], out: &mut [Sources]) {
    for (k, &j) in model.tracked.iter().enumerate() {
        out[j] = Sources::from_slice(&y[4 * k..4 * k + 4]);
    }
}

fn run_forward(model: &Model, steps: usize, keep: impl Fn(usize) -> bool, want_slopes: bool) -> Result<ForwardPass> {
    let scn = model.scn;
    let len = model.groups * model.nc;
    let dim = 4 * model.tracked.len();
    let dz = scn.span_length() / steps as f64;

    let mut y = vec![0.0; dim];
    if model.fwm_mode == FwmMode::Averaged {
        let mut env = Env::new(scn);
        env.load(scn, 0.0, &vec![Sources::default(); len], true);
        for (k, &j) in model.tracked.iter().enumerate() {
            if !model.plans[j].is_empty() {
                y[4 * k + 1] = model.plans[j].input_condition(&env.sig, &env.eff);
            }
        }
    }

    let mut env = Env::new(scn);
    let mut int = vec![Sources::default(); len];
    let mut rhs = |z: f64, y: &[f64], dy: &mut [f64]| {
        unpack(model, y, &mut int);
        env.load(scn, z, &int, true);
        for (k, &j) in model.tracked.iter().enumerate() {
            model.forward_rate(j, z, &env, &int).write(&mut dy[4 * k..4 * k + 4]);
        }
    };

    let mut rk = Rk4::new(dim);
    let mut nodes = vec![y.clone()];
    let mut slopes = Vec::new();
    for s in 0..steps {
        rk.step(&mut rhs, s as f64 * dz, dz, &mut y)?;
        if want_slopes {
            slopes.push(rk.last_slope().to_vec());
        }
        if keep(s + 1) {
            nodes.push(y.clone());
        }
    }
    if want_slopes {
        let mut d = vec![0.0; dim];
        rhs(scn.span_length(), &y, &mut d);
        slopes.push(d);
    }
    Ok(ForwardPass {
        nodes,
        slopes,
        clamps: rk.clamps(),
    })
}

fn snapshot(model: &Model, z: f64, y: &[f64], back: Option<&[f64]>) -> PowerState {
    let scn = model.scn;
    let mut s = PowerState::signals_at(scn, z);
    unpack(model, y, &mut s.forward);
    if let Some(b) = back {
        s.backward = vec![Sources::default(); s.forward.len()];
        unpack(model, b, &mut s.backward);
    }
    s
}

pub fn solve_forward(scn: &Scenario) -> Result<SolveResult> {
    solve_forward_with(scn, SolveOptions::default())
}

pub fn solve_forward_with(scn: &Scenario, opts: SolveOptions) -> Result<SolveResult> {
    check_directions(scn)?;
    let model = Model::new(scn)?;
    let steps = scn.settings().steps_per_span.max(1);
    let stride = sample_stride(steps, opts);
    let keep = |s: usize| s.is_multiple_of(stride) || s == steps;
    let pass = run_forward(&model, steps, keep, false)?;
    let dz = scn.span_length() / steps as f64;
    let z_samples: Vec<f64> = (0..=steps).filter(|&s| s == 0 || keep(s)).map(|s| s as f64 * dz).collect();
    let states = z_samples
        .iter()
        .zip(&pass.nodes)
        .map(|(&z, y)| snapshot(&model, z, y, None))
        .collect();
    Ok(SolveResult {
        z_samples,
        states,
        tracked: model.tracked.clone(),
        scheme: Scheme::Co,
        steps,
        clamps: pass.clamps,
        provenance: provenance(scn),
    })
}

/// Two-pass counter-propagating solve: forward interference first, then
/// the backward equation in `u = L_s − z` with zero interference at the
/// far end.
pub fn solve_counter(scn: &Scenario) -> Result<SolveResult> {
    solve_counter_with(scn, SolveOptions::default())
}

pub fn solve_counter_with(scn: &Scenario, opts: SolveOptions) -> Result<SolveResult> {
    check_directions(scn)?;
    let model = Model::new(scn)?;
    let steps = scn.settings().steps_per_span.max(1);
    let l_s = scn.span_length();
    let dz = l_s / steps as f64;
    let len = model.groups * model.nc;
    let dim = 4 * model.tracked.len();
    let fwd = run_forward(&model, steps, |_| true, true)?;

    // forward state at z from node values and slopes (cubic Hermite)
    let forward_at = |z: f64, out: &mut [f64]| {
        let x = (z / dz).clamp(0.0, steps as f64);
        let k = (x.floor() as usize).min(steps - 1);
        let t = x - k as f64;
        let (y0, y1) = (&fwd.nodes[k], &fwd.nodes[k + 1]);
        let (d0, d1) = (&fwd.slopes[k], &fwd.slopes[k + 1]);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        for j in 0..out.len() {
            out[j] = (h00 * y0[j] + h10 * dz * d0[j] + h01 * y1[j] + h11 * dz * d1[j]).max(0.0);
        }
    };

    let mut env = Env::new(scn);
    let mut yf = vec![0.0; dim];
    let mut fwd_int = vec![Sources::default(); len];
    let mut fwd_total = vec![0.0; len];
    let mut bwd = vec![Sources::default(); len];
    let mut bwd_total = vec![0.0; len];
    let mut rhs = |u: f64, y: &[f64], dy: &mut [f64]| {
        let z = l_s - u;
        forward_at(z, &mut yf);
        unpack(&model, &yf, &mut fwd_int);
        env.load(scn, z, &fwd_int, true);
        for (t, f) in fwd_total.iter_mut().zip(&fwd_int) {
            *t = f.total();
        }
        unpack(&model, y, &mut bwd);
        for (t, b) in bwd_total.iter_mut().zip(&bwd) {
            *t = b.total();
        }
        for (k, &j) in model.tracked.iter().enumerate() {
            model.backward_rate(j, &env, &fwd_total, &bwd, &bwd_total).write(&mut dy[4 * k..4 * k + 4]);
        }
    };

    let mut rk = Rk4::new(dim);
    let mut yb = vec![0.0; dim];
    let mut back_nodes = vec![yb.clone()];
    for s in 0..steps {
        rk.step(&mut rhs, s as f64 * dz, dz, &mut yb)?;
        back_nodes.push(yb.clone());
    }
    back_nodes.reverse();

    let stride = sample_stride(steps, opts);
    let kept: Vec<usize> = (0..=steps).filter(|&s| s % stride == 0 || s == steps).collect();
    let z_samples = kept.iter().map(|&s| s as f64 * dz).collect();
    let states = kept
        .iter()
        .map(|&s| snapshot(&model, s as f64 * dz, &fwd.nodes[s], Some(&back_nodes[s])))
        .collect();
    Ok(SolveResult {
        z_samples,
        states,
        tracked: model.tracked.clone(),
        scheme: Scheme::Counter,
        steps,
        clamps: fwd.clamps + rk.clamps(),
        provenance: provenance(scn),
    })
}

/// Solves according to the scenario's scheme.
pub fn solve(scn: &Scenario) -> Result<SolveResult> {
    solve_with(scn, SolveOptions::default())
}

pub fn solve_with(scn: &Scenario, opts: SolveOptions) -> Result<SolveResult> {
    match scn.spec().scheme {
        Scheme::Co => solve_forward_with(scn, opts),
        Scheme::Counter => solve_counter_with(scn, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{RamanGainModel, SpectralProfile};
    use crate::scenario::fixtures::*;
    use crate::scenario::{LaunchPower, ScenarioSpec};
    use crate::units::dbm_to_watt;
    use proptest::prelude::*;

    fn q_slot(scn: &Scenario) -> usize {
        let q = scn.quantum();
        q.group * scn.channels() + q.channel
    }

    fn no_raman(spec: &mut ScenarioSpec) {
        for g in &mut spec.mode_groups {
            g.raman_gain = RamanGainModel::ClippedLinear { slope: 0.0, peak: 0.0 };
        }
    }

    #[test]
    fn dark_fiber_stays_dark() {
        let mut spec = upper_cband();
        spec.launch.groups[0].power = LaunchPower::Total(0.0);
        let scn = spec.validate().unwrap();
        let r = solve(&scn).unwrap();
        assert!(r.states.iter().all(|s| s.forward.iter().all(|p| p.total() == 0.0)));
        assert_eq!(r.z_samples.len(), 101);
        assert_eq!(*r.z_samples.last().unwrap(), 100e3);
    }

    #[test]
    fn pure_decay_rate() {
        let mut spec = upper_cband();
        spec.launch.groups[0].power = LaunchPower::Total(0.0);
        let scn = spec.validate().unwrap();
        let mut st = PowerState::zero(&scn, 20e3);
        let j = q_slot(&scn);
        st.forward[j].sprs = 1e-9;
        let rate = interference_rate(&st, &scn, 0, 9, Direction::Forward).unwrap();
        let expect = -scn.alpha(0, 9) * 1e-9;
        assert!((rate - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn single_pump_reduces_to_sprs() {
        let mut spec = upper_cband();
        let mut p = vec![0.0; 10];
        p[3] = 1e-3;
        spec.launch.groups[0].power = LaunchPower::Explicit(p);
        let scn = spec.validate().unwrap();
        let z = 30e3;
        let mut st = PowerState::signals_at(&scn, z);
        st.forward[9].sprs = 2e-12;
        let got = interference_rate(&st, &scn, 0, 9, Direction::Forward).unwrap();
        let f = scn.frequencies();
        let eta = raman_cross_section(f[9], f[3], 300.0, 50e9, &scn.group(0).raman_gain).unwrap();
        let expect = eta * st.signal[3] - srs::local_loss(&scn, 0, 9, z) * 2e-12;
        assert!((got - expect).abs() < 1e-12 * expect.abs(), "{got} {expect}");
    }

    #[test]
    fn bidirectional_load_is_refused() {
        let mut spec = sdm(87);
        spec.launch.groups[1] = crate::scenario::GroupLaunch {
            power: LaunchPower::Total(1e-3),
            direction: Direction::Backward,
        };
        spec.mode_groups[1].role = crate::scenario::GroupRole::Classical;
        let scn = spec.validate().unwrap();
        assert!(matches!(solve(&scn), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sources_sum_to_total_and_fwm_present() {
        let scn = upper_cband().validate().unwrap();
        let end = solve(&scn).unwrap().received(&scn);
        assert!(end.sprs > 0.0 && end.fwm > 0.0);
        assert_eq!(end.xtalk, 0.0);
        assert_eq!(end.rayleigh, 0.0);
        let sum = end.sprs + end.fwm + end.xtalk + end.rayleigh;
        assert!((end.total() - sum).abs() <= 1e-15 * sum);
    }

    #[test]
    fn rerun_is_bit_identical() {
        let scn = sdm(40).validate().unwrap();
        let a = solve(&scn).unwrap();
        let b = solve(&scn).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance.len(), 64);
        let mut spec = sdm(40);
        spec.solver.steps_per_span = 50;
        assert_ne!(provenance(&spec.validate().unwrap()), a.provenance);
    }

    #[test]
    fn single_mode_sprs_peaks_and_fwm_decays() {
        let scn = table1(87).validate().unwrap();
        let r = solve(&scn).unwrap();
        let trace = r.quantum_trace(&scn);
        let sprs: Vec<f64> = trace.iter().map(|s| s.sprs).collect();
        let peak = (0..sprs.len()).max_by(|&a, &b| sprs[a].total_cmp(&sprs[b])).unwrap();
        assert!(peak > 0 && peak < sprs.len() - 1, "SpRS peak at sample {peak}");
        assert!(sprs[peak] > 2.0 * sprs[sprs.len() - 1]);
        assert!(trace.windows(2).skip(1).all(|w| w[1].fwm < w[0].fwm));
        let at80 = trace[80];
        assert!(at80.sprs > at80.fwm, "{at80:?}");
    }

    // Full-grid tracking adds SpRS pumped by the interference that builds up
    // on classical channels; everything else is shared.
    #[test]
    fn target_tracking_matches_full_grid_single_mode() {
        for mut spec in [upper_cband(), table1(87), table1(40)] {
            let target = spec.clone().validate().unwrap();
            spec.solver.track_mode = TrackMode::FullGrid;
            let full = spec.validate().unwrap();
            let a = solve(&target).unwrap().received(&target);
            let b = solve(&full).unwrap().received(&full);
            assert_eq!(a.fwm, b.fwm);
            assert!(b.sprs >= a.sprs);
            assert!((a.total() - b.total()).abs() < 1e-4 * b.total(), "{a:?} {b:?}");
        }
    }

    #[test]
    fn lossless_accumulation_is_monotone() {
        let mut spec = upper_cband();
        spec.mode_groups[0].attenuation = SpectralProfile::constant(0.0);
        spec.solver.include_srs = false;
        let scn = spec.validate().unwrap();
        let trace = solve(&scn).unwrap().quantum_trace(&scn);
        assert!(trace.windows(2).all(|w| w[1].total() >= w[0].total()));
    }

    #[test]
    fn counter_without_scatterers_is_dark() {
        let mut spec = table1(87);
        no_raman(&mut spec);
        spec.mode_groups[0].rayleigh = SpectralProfile::constant(0.0);
        spec.scheme = Scheme::Counter;
        let scn = spec.validate().unwrap();
        let r = solve(&scn).unwrap();
        assert!(r.states.iter().all(|s| s.backward.iter().all(|p| p.total() == 0.0)));
    }

    #[test]
    fn counter_sees_rayleigh_and_sprs() {
        let mut spec = table1(87);
        spec.scheme = Scheme::Counter;
        let scn = spec.validate().unwrap();
        let r = solve(&scn).unwrap();
        let rx = r.received(&scn);
        assert!(rx.sprs > 0.0 && rx.rayleigh > 0.0);
        // far end boundary
        let j = q_slot(&scn);
        assert_eq!(r.states.last().unwrap().backward[j].total(), 0.0);
    }

    #[test]
    fn sdm_crosstalk_paths() {
        let scn = sdm(87).validate().unwrap();
        let rx = solve(&scn).unwrap().received(&scn);
        // the notch leaves no classical signal to couple in-band
        assert_eq!(rx.xtalk, 0.0);
        assert!(rx.sprs > 0.0 && rx.fwm > 0.0);
        let mut spec = sdm(87);
        spec.grid.notch = false;
        let scn = spec.validate().unwrap();
        let open = solve(&scn).unwrap().received(&scn);
        assert!(open.xtalk > 1e3 * rx.total(), "{open:?} {rx:?}");
    }

    fn scaled_endpoint(s: f64, gamma: f64) -> Sources {
        let mut spec = upper_cband();
        spec.solver.include_srs = false;
        spec.mode_groups[0].gamma = gamma;
        spec.launch.groups[0].power = LaunchPower::Total(s * dbm_to_watt(10.0));
        let scn = spec.validate().unwrap();
        solve(&scn).unwrap().received(&scn)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn linear_in_sources_without_fwm(s in 0.1f64..10.0) {
            let a = scaled_endpoint(1.0, 0.0).total();
            let b = scaled_endpoint(s, 0.0).total();
            prop_assert!((b - s * a).abs() <= 1e-12 * s * a);
        }

        #[test]
        fn fwm_is_cubic(s in 0.1f64..10.0) {
            let a = scaled_endpoint(1.0, 1.3e-3).fwm;
            let b = scaled_endpoint(s, 1.3e-3).fwm;
            prop_assert!((b - s.powi(3) * a).abs() <= 1e-12 * s.powi(3) * a);
        }
    }
}
