//! Scenario description: the link, its mode groups, the channel grid, the
//! launch plan and the solver settings.
//!
//! A [`ScenarioSpec`] is what a document parses into (already in SI units).
//! [`ScenarioSpec::validate`] checks every invariant and produces the
//! immutable [`Scenario`] the solvers work on.

mod document;

pub use document::{parse_scenario, parse_scenario_file, serialize_scenario};

use crate::error::{Error, Result};
use crate::profiles::{nonlinear_scaling_factor, RamanGainModel, SpectralProfile};
use crate::srs::TiltParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantumSlot {
    pub group: usize,
    pub channel: usize,
}

/// Uniform frequency grid with a per-group allocation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub f_min: f64,
    pub spacing: f64,
    pub count: usize,
    /// `allocation[n][i]`: channel `i` of group `n` carries a classical signal.
    pub allocation: Vec<Vec<bool>>,
    pub quantum: QuantumSlot,
}

impl ChannelGrid {
    pub fn frequency(&self, i: usize) -> f64 {
        self.f_min + i as f64 * self.spacing
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.frequency(i)).collect()
    }

    pub fn is_allocated(&self, group: usize, channel: usize) -> bool {
        self.allocation[group][channel]
    }

    pub fn active_count(&self, group: usize) -> usize {
        self.allocation[group].iter().filter(|a| **a).count()
    }

    pub fn groups(&self) -> usize {
        self.allocation.len()
    }

    pub fn center_frequency(&self) -> f64 {
        self.f_min + 0.5 * (self.count as f64 - 1.0) * self.spacing
    }
}

/// Lays out `count` channels from `f_min` and deallocates the quantum slot
/// and `guard_channels` slots on each side of it, in every group.
pub fn build_grid(
    f_min: f64,
    spacing: f64,
    count: usize,
    guard_channels: usize,
    quantum: QuantumSlot,
    groups: usize,
) -> Result<ChannelGrid> {
    if count == 0 {
        return Err(Error::invalid("grid.channels", "at least one channel is required"));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("grid.spacing", "spacing must be positive"));
    }
    if quantum.channel >= count {
        return Err(Error::invalid(
            "grid.quantum_channel",
            format!("index {} out of range for {count} channels", quantum.channel),
        ));
    }
    if quantum.group >= groups {
        return Err(Error::invalid(
            "grid.quantum_group",
            format!("group {} out of range for {groups} mode groups", quantum.group),
        ));
    }
    let lo = quantum.channel.saturating_sub(guard_channels);
    let hi = (quantum.channel + guard_channels).min(count - 1);
    let mut allocation = vec![vec![true; count]; groups];
    for mask in allocation.iter_mut() {
        for (i, slot) in mask.iter_mut().enumerate().take(hi + 1).skip(lo) {
            if i != quantum.channel {
                *slot = false;
            }
        }
    }
    allocation[quantum.group][quantum.channel] = false;
    Ok(ChannelGrid {
        f_min,
        spacing,
        count,
        allocation,
        quantum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub f_min: f64,
    pub spacing: f64,
    pub channels: usize,
    pub quantum: QuantumSlot,
    pub guard_channels: usize,
    /// Leave the quantum slot empty in every classical group.
    pub notch: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupRole {
    Classical,
    /// Reserved for the quantum signal; carries no classical channels.
    Quantum,
}

/// Excess kurtosis Φ of the modulation, per channel or uniform.
#[derive(Debug, Clone, PartialEq)]
pub enum Kurtosis {
    Uniform(f64),
    PerChannel(Vec<f64>),
}

impl Kurtosis {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Kurtosis::Uniform(v) => *v,
            Kurtosis::PerChannel(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGroupSpec {
    pub name: String,
    pub role: GroupRole,
    pub degenerate_modes: u32,
    /// γ, 1/(W·m).
    pub gamma: f64,
    pub raman_fraction: f64,
    /// Overrides the r derived from D and F_R.
    pub scaling_factor: Option<f64>,
    /// β₂, s²/m.
    pub beta2: f64,
    /// Group delay per length relative to the other groups, s/m, at the
    /// grid center. Only enters inter-group phase matching.
    pub beta1: f64,
    pub attenuation: SpectralProfile,
    pub raman_gain: RamanGainModel,
    pub rayleigh: SpectralProfile,
    /// Mode-group-averaged effective area, m².
    pub effective_area: Option<f64>,
    pub kurtosis: Kurtosis,
    /// Explicit list of allocated channels; all channels when absent.
    pub allocated: Option<Vec<usize>>,
}

/// Inter-group coupling, indexed `[n][m]` as "into n from m".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingSpec {
    pub kappa: Vec<Vec<Option<SpectralProfile>>>,
    /// Cross effective areas A_eff,nm, m².
    pub cross_area: Vec<Vec<Option<f64>>>,
    /// Inter-group Kerr overlap factors r_nm.
    pub overlap: Vec<Vec<Option<f64>>>,
    /// Add the power leaving group n through crosstalk to its loss.
    pub include_depletion: bool,
}

impl CouplingSpec {
    pub fn empty(groups: usize) -> Self {
        Self {
            kappa: vec![vec![None; groups]; groups],
            cross_area: vec![vec![None; groups]; groups],
            overlap: vec![vec![None; groups]; groups],
            include_depletion: false,
        }
    }

    pub fn kappa(&self, n: usize, m: usize) -> Option<&SpectralProfile> {
        self.kappa.get(n)?.get(m)?.as_ref()
    }

    pub fn cross_area(&self, n: usize, m: usize) -> Option<f64> {
        *self.cross_area.get(n)?.get(m)?
    }

    pub fn overlap(&self, n: usize, m: usize) -> Option<f64> {
        *self.overlap.get(n)?.get(m)?
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LaunchPower {
    /// Total group power spread evenly over the allocated channels.
    Total(f64),
    /// Same power in every allocated channel.
    PerChannel(f64),
    /// Power per grid slot; ignored on unallocated slots.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLaunch {
    pub power: LaunchPower,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaunchSpec {
    pub temperature: f64,
    pub groups: Vec<GroupLaunch>,
}

/// Per-slot launch powers after masking.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchPlan {
    /// `p_tx[n][i]` in W; zero on unallocated slots and the quantum slot.
    pub p_tx: Vec<Vec<f64>>,
    pub direction: Vec<Direction>,
    pub temperature: f64,
}

impl LaunchPlan {
    pub fn total(&self, group: usize) -> f64 {
        self.p_tx[group].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwmMode {
    /// Oscillatory efficiency, zero input condition.
    Exact,
    /// Envelope-averaged efficiency plus the nonzero input condition.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackMode {
    FullGrid,
    TargetChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Quantum signal travels with the classical channels.
    Co,
    /// Quantum signal travels against them; its receiver sits at z = 0.
    Counter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub steps_per_span: usize,
    pub span_length: f64,
    pub fwm_mode: FwmMode,
    pub track_mode: TrackMode,
    pub n_r: u32,
    pub include_img_terms: bool,
    /// Apply the SRS tilt to the signal profiles.
    pub include_srs: bool,
    /// Efficiency used for FWM driven by backward classical signals.
    pub backward_fwm: FwmMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            steps_per_span: 100,
            span_length: 100e3,
            fwm_mode: FwmMode::Averaged,
            track_mode: TrackMode::TargetChannel,
            n_r: 3,
            include_img_terms: false,
            include_srs: true,
            backward_fwm: FwmMode::Averaged,
        }
    }
}

/// Receiver-side parameters for QBER and excess-noise reporting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSpec {
    /// Detector bandwidth, Hz; the channel spacing when absent.
    pub detector_bandwidth: Option<f64>,
    /// Received quantum signal photon rate, 1/s.
    pub signal_rate: Option<f64>,
    /// Local-oscillator shot-noise variance, W.
    pub lo_shot_noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub grid: GridSpec,
    pub mode_groups: Vec<ModeGroupSpec>,
    pub coupling: CouplingSpec,
    pub launch: LaunchSpec,
    pub solver: SolverSettings,
    pub scheme: Scheme,
    pub metrics: MetricsSpec,
}

/// Validated, immutable scenario with derived quantities.
#[derive(Debug, Clone)]
pub struct Scenario {
    spec: ScenarioSpec,
    grid: ChannelGrid,
    launch: LaunchPlan,
    frequencies: Vec<f64>,
    scaling: Vec<f64>,
    /// Static loss α_{n,i}, including crosstalk depletion when enabled.
    alpha: Vec<Vec<f64>>,
    tilt: TiltParams,
    warnings: Vec<String>,
}

impl ScenarioSpec {
    pub fn validate(self) -> Result<Scenario> {
        Scenario::new(self)
    }
}

fn check(cond: bool, path: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(path, message))
    }
}

impl Scenario {
    fn new(spec: ScenarioSpec) -> Result<Self> {
        let groups = spec.mode_groups.len();
        check(groups > 0, "mode_groups", "at least one mode group is required")?;
        let g = &spec.grid;
        let mut grid = build_grid(g.f_min, g.spacing, g.channels, g.guard_channels, g.quantum, groups)?;
        check(g.f_min > 0.0, "grid.f_min", "must be positive")?;
        let mut warnings = Vec::new();

        for (n, group) in spec.mode_groups.iter().enumerate() {
            let path = |field: &str| format!("mode_groups[{n}].{field}");
            check(group.degenerate_modes >= 1, path("degenerate_modes"), "must be at least 1")?;
            check(group.gamma >= 0.0, path("gamma"), "must be nonnegative")?;
            check(
                (0.0..=1.0).contains(&group.raman_fraction),
                path("raman_fraction"),
                "must lie in [0, 1]",
            )?;
            check(group.beta2.is_finite(), path("beta2"), "must be finite")?;
            check(
                group.attenuation.min_value() >= 0.0,
                path("attenuation"),
                "all samples must be nonnegative",
            )?;
            check(group.rayleigh.min_value() >= 0.0, path("rayleigh"), "must be nonnegative")?;
            group
                .raman_gain
                .validate()
                .map_err(|e| Error::invalid(path("raman_gain"), e.to_string()))?;
            if let Some(r) = group.scaling_factor {
                check(r >= 0.0, path("scaling_factor"), "must be nonnegative")?;
            }
            if let Some(a) = group.effective_area {
                check(a > 0.0, path("effective_area"), "must be positive")?;
            }
            if let Kurtosis::PerChannel(v) = &group.kurtosis {
                check(
                    v.len() == g.channels,
                    path("kurtosis"),
                    format!("expected {} values, got {}", g.channels, v.len()),
                )?;
            }

            let mask = &mut grid.allocation[n];
            match group.role {
                GroupRole::Quantum => mask.iter_mut().for_each(|a| *a = false),
                GroupRole::Classical => {
                    if let Some(list) = &group.allocated {
                        let mut keep = vec![false; g.channels];
                        for &i in list {
                            check(
                                i < g.channels,
                                path("allocated"),
                                format!("channel {i} out of range"),
                            )?;
                            keep[i] = true;
                        }
                        for (slot, k) in mask.iter_mut().zip(keep) {
                            *slot &= k;
                        }
                    }
                    if n != g.quantum.group {
                        if g.notch {
                            mask[g.quantum.channel] = false;
                        } else if mask[g.quantum.channel] {
                            warnings.push(format!(
                                "group {n} carries a classical channel at the quantum slot (no notch)"
                            ));
                        }
                    }
                }
            }
        }
        if spec.mode_groups[g.quantum.group].role == GroupRole::Classical && groups > 1 {
            warnings.push("quantum slot shares a classical mode group".to_string());
        }

        // coupling matrices
        let c = &spec.coupling;
        for (name, len) in [
            ("kappa", c.kappa.len()),
            ("cross_area", c.cross_area.len()),
            ("overlap", c.overlap.len()),
        ] {
            check(len == groups, format!("coupling.{name}"), format!("expected {groups} rows"))?;
        }
        for n in 0..groups {
            for m in 0..groups {
                let path = format!("coupling[{n}][{m}]");
                if let Some(k) = c.kappa(n, m) {
                    check(n != m, &path, "self-coupling must be absent")?;
                    check(k.min_value() >= 0.0, &path, "kappa must be nonnegative")?;
                } else if n != m {
                    warnings.push(format!("no crosstalk profile into group {n} from group {m}; treated as uncoupled"));
                }
                if let Some(a) = c.cross_area(n, m) {
                    check(a > 0.0, &path, "cross effective area must be positive")?;
                }
            }
        }

        let s = &spec.solver;
        check(s.steps_per_span >= 1, "solver.steps_per_span", "must be at least 1")?;
        check(s.span_length > 0.0, "solver.span_length", "must be positive")?;
        check(s.n_r >= 1, "solver.n_R", "must be at least 1")?;
        if s.include_img_terms {
            for n in 0..groups {
                check(
                    spec.mode_groups[n].effective_area.is_some(),
                    format!("mode_groups[{n}].effective_area"),
                    "required when inter-group terms are enabled",
                )?;
                for m in 0..groups {
                    if m != n {
                        check(
                            c.cross_area(n, m).is_some(),
                            format!("coupling[{n}][{m}].effective_area"),
                            "required when inter-group terms are enabled",
                        )?;
                        check(
                            c.overlap(n, m).is_some(),
                            format!("coupling[{n}][{m}].overlap"),
                            "required when inter-group terms are enabled",
                        )?;
                    }
                }
            }
        }

        // launch plan
        let l = &spec.launch;
        check(l.temperature > 0.0, "launch.temperature", "must be positive")?;
        check(
            l.groups.len() == groups,
            "launch.groups",
            format!("expected one entry per mode group ({groups}), got {}", l.groups.len()),
        )?;
        let mut p_tx = vec![vec![0.0; g.channels]; groups];
        for (n, launch) in l.groups.iter().enumerate() {
            let path = format!("launch.groups[{n}]");
            let active = grid.active_count(n);
            let row = &mut p_tx[n];
            match &launch.power {
                LaunchPower::Total(p) => {
                    check(*p >= 0.0, &path, "power must be nonnegative")?;
                    if active > 0 {
                        let each = p / active as f64;
                        for (i, slot) in row.iter_mut().enumerate() {
                            if grid.allocation[n][i] {
                                *slot = each;
                            }
                        }
                    }
                }
                LaunchPower::PerChannel(p) => {
                    check(*p >= 0.0, &path, "power must be nonnegative")?;
                    for (i, slot) in row.iter_mut().enumerate() {
                        if grid.allocation[n][i] {
                            *slot = *p;
                        }
                    }
                }
                LaunchPower::Explicit(v) => {
                    check(
                        v.len() == g.channels,
                        &path,
                        format!("expected {} powers, got {}", g.channels, v.len()),
                    )?;
                    for (i, (slot, p)) in row.iter_mut().zip(v).enumerate() {
                        check(*p >= 0.0, &path, "powers must be nonnegative")?;
                        if grid.allocation[n][i] {
                            *slot = *p;
                        }
                    }
                }
            }
        }
        p_tx[g.quantum.group][g.quantum.channel] = 0.0;
        let launch = LaunchPlan {
            p_tx,
            direction: l.groups.iter().map(|g| g.direction).collect(),
            temperature: l.temperature,
        };

        let frequencies = grid.frequencies();
        let scaling = spec
            .mode_groups
            .iter()
            .map(|m| {
                m.scaling_factor
                    .unwrap_or_else(|| nonlinear_scaling_factor(m.degenerate_modes, m.raman_fraction))
            })
            .collect();
        let alpha = (0..groups)
            .map(|n| {
                frequencies
                    .iter()
                    .map(|&f| {
                        let mut a = spec.mode_groups[n].attenuation.eval(f);
                        if c.include_depletion {
                            a += (0..groups)
                                .filter(|&m| m != n)
                                .filter_map(|m| c.kappa(m, n))
                                .map(|k| k.eval(f))
                                .sum::<f64>();
                        }
                        a
                    })
                    .collect()
            })
            .collect();

        let mut scenario = Scenario {
            spec,
            grid,
            launch,
            frequencies,
            scaling,
            alpha,
            tilt: TiltParams::none(groups),
            warnings,
        };
        scenario.tilt = TiltParams::fit(&scenario)?;
        Ok(scenario)
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ScenarioSpec {
        self.spec
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn launch(&self) -> &LaunchPlan {
        &self.launch
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.spec.solver
    }

    pub fn groups(&self) -> usize {
        self.spec.mode_groups.len()
    }

    pub fn group(&self, n: usize) -> &ModeGroupSpec {
        &self.spec.mode_groups[n]
    }

    pub fn channels(&self) -> usize {
        self.grid.count
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.frequencies[i]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Kerr scaling factor r of group `n`.
    pub fn scaling_factor(&self, n: usize) -> f64 {
        self.scaling[n]
    }

    /// Static power loss α_{n,i}, 1/m.
    pub fn alpha(&self, n: usize, i: usize) -> f64 {
        self.alpha[n][i]
    }

    pub fn alphas(&self, n: usize) -> &[f64] {
        &self.alpha[n]
    }

    pub fn tilt(&self) -> &TiltParams {
        &self.tilt
    }

    pub fn quantum(&self) -> QuantumSlot {
        self.grid.quantum
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn span_length(&self) -> f64 {
        self.spec.solver.span_length
    }

    /// Groups that carry classical power.
    pub fn loaded_groups(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.groups()).filter(|&n| self.launch.total(n) > 0.0)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::units::{db_per_km_to_neper_per_m, dbm_to_watt};

    /// Illustrative C-band loss rising from 0.19 dB/km (191.5 THz) to
    /// 0.21 dB/km (196 THz).
    pub fn cband_attenuation() -> SpectralProfile {
        SpectralProfile::new(vec![
            (191.5e12, db_per_km_to_neper_per_m(0.19)),
            (196.0e12, db_per_km_to_neper_per_m(0.21)),
        ])
        .unwrap()
    }

    pub fn smf_group() -> ModeGroupSpec {
        ModeGroupSpec {
            name: "smf".into(),
            role: GroupRole::Classical,
            degenerate_modes: 2,
            gamma: 1.3e-3,
            raman_fraction: 0.18,
            scaling_factor: None,
            beta2: -21.7e-27,
            beta1: 0.0,
            attenuation: cband_attenuation(),
            raman_gain: RamanGainModel::ClippedLinear {
                slope: 0.0286e-15,
                peak: 0.4e-3,
            },
            rayleigh: SpectralProfile::constant(1e-7),
            effective_area: Some(80e-12),
            kurtosis: Kurtosis::Uniform(-1.0),
            allocated: None,
        }
    }

    /// Table-1 single-mode link: 88 × 50 GHz from 191.575 THz, 25 dBm.
    pub fn table1(quantum_channel: usize) -> ScenarioSpec {
        ScenarioSpec {
            name: "table1".into(),
            grid: GridSpec {
                f_min: 191.575e12,
                spacing: 50e9,
                channels: 88,
                quantum: QuantumSlot {
                    group: 0,
                    channel: quantum_channel,
                },
                guard_channels: 0,
                notch: true,
            },
            mode_groups: vec![smf_group()],
            coupling: CouplingSpec::empty(1),
            launch: LaunchSpec {
                temperature: 300.0,
                groups: vec![GroupLaunch {
                    power: LaunchPower::Total(dbm_to_watt(25.0)),
                    direction: Direction::Forward,
                }],
            },
            solver: SolverSettings::default(),
            scheme: Scheme::Co,
            metrics: MetricsSpec::default(),
        }
    }

    /// Ten channels at the top of the C-band, 10 dBm in total, quantum
    /// channel in the highest slot.
    pub fn upper_cband() -> ScenarioSpec {
        let mut spec = table1(9);
        spec.name = "upper-cband".into();
        spec.grid.f_min = 195.475e12;
        spec.grid.channels = 10;
        spec.launch.groups[0].power = LaunchPower::Total(dbm_to_watt(10.0));
        spec
    }

    /// Two weakly coupled groups; group 1 is reserved for the quantum
    /// channel, with −60 dB/km crosstalk both ways.
    pub fn sdm(quantum_channel: usize) -> ScenarioSpec {
        let mut spec = table1(quantum_channel);
        let mut q = smf_group();
        q.name = "quantum".into();
        q.role = GroupRole::Quantum;
        q.raman_gain = RamanGainModel::ClippedLinear {
            slope: 0.025e-15,
            peak: 0.35e-3,
        };
        q.kurtosis = Kurtosis::Uniform(0.0);
        spec.mode_groups.push(q);
        spec.grid.quantum.group = 1;
        let mut coupling = CouplingSpec::empty(2);
        coupling.kappa[0][1] = Some(SpectralProfile::constant(1e-9));
        coupling.kappa[1][0] = Some(SpectralProfile::constant(1e-9));
        spec.coupling = coupling;
        spec.launch.groups.push(GroupLaunch {
            power: LaunchPower::Total(0.0),
            direction: Direction::Forward,
        });
        spec
    }
}
