//! Batch front-end behind the `coexist` binary: single runs, parameter
//! sweeps and oracle comparisons, all written as CSV.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kinetics::{self, SolveResult, Sources};
use crate::metrics::{MetricSet, W_PER_HZ_TO_MW_PER_GHZ};
use crate::oracle::{self, OracleReport};
use crate::scenario::{
    parse_scenario_file, Direction, FwmMode, GroupRole, LaunchPower, Scenario, ScenarioSpec, Scheme, TrackMode,
};
use crate::units::dbm_to_watt;

#[derive(Debug, Parser)]
#[command(name = "coexist", version, about = "Interference noise on quantum channels sharing a fiber with classical WDM traffic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario; writes trajectory.csv and summary.csv.
    Run {
        /// Scenario file
        path: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Solve a scenario for every value of one parameter; writes sweep.csv.
    Sweep {
        /// Sweep file
        path: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare the fast solve against a fine-step reference; writes oracle.csv.
    Verify {
        /// Scenario file
        path: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Reference RK4 steps per span.
        #[arg(long, default_value_t = 1_000_000)]
        reference_steps: usize,
        /// Largest accepted endpoint deviation, dB.
        #[arg(long, default_value_t = 0.25)]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Co,
    Counter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FwmArg {
    Exact,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackArg {
    Full,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Overrides applied on top of the scenario document.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// RK4 steps per span
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Quantum channel index within its group
    #[arg(long)]
    pub quantum_channel: Option<usize>,
    /// Empty slots on each side of the quantum channel
    #[arg(long)]
    pub guard_channels: Option<usize>,
    #[arg(long, value_enum)]
    pub fwm: Option<FwmArg>,
    /// Track the quantum slot only or every slot
    #[arg(long, value_enum)]
    pub track: Option<TrackArg>,
    /// Inter-group SRS terms
    #[arg(long, value_enum)]
    pub img: Option<Switch>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}


impl Flags {
    pub fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(s) = self.steps {
            spec.solver.steps_per_span = s;
        }
        if let Some(s) = self.scheme {
            spec.scheme = match s {
                SchemeArg::Co => Scheme::Co,
                SchemeArg::Counter => Scheme::Counter,
            };
        }
        if let Some(q) = self.quantum_channel {
            spec.grid.quantum.channel = q;
        }
        if let Some(g) = self.guard_channels {
            spec.grid.guard_channels = g;
        }
        if let Some(f) = self.fwm {
            spec.solver.fwm_mode = match f {
                FwmArg::Exact => FwmMode::Exact,
                FwmArg::Averaged => FwmMode::Averaged,
            };
        }
        if let Some(t) = self.track {
            spec.solver.track_mode = match t {
                TrackArg::Full => TrackMode::FullGrid,
                TrackArg::Target => TrackMode::TargetChannel,
            };
        }
        if let Some(i) = self.img {
            spec.solver.include_img_terms = i == Switch::On;
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 when `verify` misses its tolerance,
/// 2 on any error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Run { path, flags } => {
            let out = cmd_run(path, flags)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", out.summary_line);
            Ok(0)
        }
        Command::Sweep { path, flags } => {
            let rows = cmd_sweep(path, flags)?;
            println!("{} sweep points written to {}", rows, flags.out.join("sweep.csv").display());
            Ok(0)
        }
        Command::Verify {
            path,
            flags,
            reference_steps,
            tolerance,
        } => {
            let (report, pass) = cmd_verify(path, flags, *reference_steps, *tolerance)?;
            print!("{}", report.summary());
            println!("{} (tolerance {tolerance} dB)", if pass { "PASS" } else { "FAIL" });
            Ok(if pass { 0 } else { 1 })
        }
    }
}

/// Loads a scenario file with the command-line overrides applied.
pub fn load(path: &Path, flags: &Flags) -> Result<Scenario> {
    let mut spec = parse_scenario_file(path)?;
    flags.apply(&mut spec);
    spec.validate()
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let io = |source| Error::Io {
        path: dir.join(name),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

fn detector_bandwidth(scn: &Scenario) -> f64 {
    scn.spec().metrics.detector_bandwidth.unwrap_or(scn.grid().spacing)
}

fn quantum_frequency(scn: &Scenario) -> f64 {
    scn.frequency(scn.quantum().channel)
}

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "z_km",
    "group",
    "channel",
    "f_THz",
    "direction",
    "P_sig_W",
    "P_int_W",
    "P_int_sprs_W",
    "P_int_fwm_W",
    "P_int_xtalk_W",
    "P_int_rayleigh_W",
    "psd_mW_per_GHz",
];

/// Every retained sample of every tracked slot, forward rows first within
/// a sample.
pub fn trajectory_csv(scn: &Scenario, res: &SolveResult) -> Result<Vec<u8>> {
    let path = Path::new("trajectory.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER).map_err(csv_error(path))?;
    let nc = scn.channels();
    let b = detector_bandwidth(scn);
    let mut dirs = vec![Direction::Forward];
    if res.scheme == Scheme::Counter {
        dirs.push(Direction::Backward);
    }
    for st in &res.states {
        for dir in &dirs {
            for &j in &res.tracked {
                let (n, i) = (j / nc, j % nc);
                let s = st.interference(j, *dir);
                let total = s.total();
                w.write_record([
                    fmt(st.z / 1e3),
                    n.to_string(),
                    i.to_string(),
                    fmt(scn.frequency(i) / 1e12),
                    match dir {
                        Direction::Forward => "forward".to_string(),
                        Direction::Backward => "backward".to_string(),
                    },
                    fmt(st.signal[j]),
                    fmt(total),
                    fmt(s.sprs),
                    fmt(s.fwm),
                    fmt(s.xtalk),
                    fmt(s.rayleigh),
                    fmt(total / b * W_PER_HZ_TO_MW_PER_GHZ),
                ])
                .map_err(csv_error(path))?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Output of [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub result: SolveResult,
    pub received: Sources,
    pub metrics: MetricSet,
    /// Endpoint change against a solve with half the steps, dB.
    pub half_step_change_db: f64,
    pub warnings: Vec<String>,
    pub summary_line: String,
}

fn db_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        10.0 * (a / b).log10()
    }
}

/// Solves a validated scenario and derives the receiver metrics.
pub fn run_scenario(scn: Scenario) -> Result<RunOutput> {
    let result = kinetics::solve(&scn)?;
    let received = result.received(&scn);
    let m = &scn.spec().metrics;
    let metrics = MetricSet::new(
        received.total(),
        quantum_frequency(&scn),
        detector_bandwidth(&scn),
        m.signal_rate,
        m.lo_shot_noise,
    )?;
    let steps = scn.settings().steps_per_span;
    let half_step_change_db = if steps >= 2 {
        let mut spec = scn.spec().clone();
        spec.solver.steps_per_span = steps / 2;
        let coarse = kinetics::solve_with(&spec.validate()?, kinetics::SolveOptions { max_samples: 2 })?;
        db_change(received.total(), coarse.received(&scn).total())
    } else {
        f64::NAN
    };
    let summary_line = format!(
        "{}: P_int = {:.4e} W ({:.4e} mW/GHz) at the receiver; sprs {:.3e}, fwm {:.3e}, xtalk {:.3e}, rayleigh {:.3e} W",
        scn.spec().name,
        received.total(),
        metrics.psd_mw_per_ghz(),
        received.sprs,
        received.fwm,
        received.xtalk,
        received.rayleigh,
    );
    Ok(RunOutput {
        warnings: scn.warnings().to_vec(),
        scenario: scn,
        result,
        received,
        metrics,
        half_step_change_db,
        summary_line,
    })
}

pub const SUMMARY_HEADER: [&str; 19] = [
    "scenario",
    "scheme",
    "steps",
    "z_rx_km",
    "group",
    "channel",
    "f_THz",
    "P_int_W",
    "P_int_sprs_W",
    "P_int_fwm_W",
    "P_int_xtalk_W",
    "P_int_rayleigh_W",
    "psd_mW_per_GHz",
    "qber",
    "xi_excess_SNU",
    "half_step_change_dB",
    "clamps",
    "warnings",
    "provenance",
];

/// One-row endpoint summary with the per-source breakdown.
pub fn summary_csv(out: &RunOutput) -> Result<Vec<u8>> {
    let path = Path::new("summary.csv");
    let scn = &out.scenario;
    let q = scn.quantum();
    let r = &out.received;
    let z_rx = match out.result.scheme {
        Scheme::Co => scn.span_length(),
        Scheme::Counter => 0.0,
    };
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_error(path))?;
    w.write_record([
        scn.spec().name.clone(),
        match out.result.scheme {
            Scheme::Co => "co".into(),
            Scheme::Counter => "counter".into(),
        },
        out.result.steps.to_string(),
        fmt(z_rx / 1e3),
        q.group.to_string(),
        q.channel.to_string(),
        fmt(quantum_frequency(scn) / 1e12),
        fmt(r.total()),
        fmt(r.sprs),
        fmt(r.fwm),
        fmt(r.xtalk),
        fmt(r.rayleigh),
        fmt(out.metrics.psd_mw_per_ghz()),
        opt(out.metrics.qber),
        opt(out.metrics.xi_excess),
        fmt(out.half_step_change_db),
        out.result.clamps.to_string(),
        out.warnings.join("; "),
        out.result.provenance.clone(),
    ])
    .map_err(csv_error(path))?;
    w.into_inner().map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `run`: solve, then write `trajectory.csv` and `summary.csv` to `--out`.
pub fn cmd_run(path: &Path, flags: &Flags) -> Result<RunOutput> {
    let out = run_scenario(load(path, flags)?)?;
    write_atomic(&flags.out, "trajectory.csv", &trajectory_csv(&out.scenario, &out.result)?)?;
    write_atomic(&flags.out, "summary.csv", &summary_csv(&out)?)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    QuantumChannelIndex,
    TotalLaunchDbm,
    SpanKm,
    GuardChannels,
    Scheme,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

/// Inclusive arithmetic range, an alternative to listing values.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    scenario: PathBuf,
    axis: SweepAxis,
    values: Option<Vec<SweepValue>>,
    range: Option<SweepRange>,
}

/// A parameter sweep over one axis of a base scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
    /// Resolved against the sweep file's directory.
    pub scenario: PathBuf,
}

impl SweepSpec {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let doc: SweepDoc = toml::from_str(text).map_err(|e| Error::Parse(format!("sweep: {}", e.message())))?;
        let values = match (doc.values, doc.range) {
            (Some(v), None) => v,
            (None, Some(r)) => {
                if !(r.step > 0.0) || !(r.stop >= r.start) {
                    return Err(Error::invalid("sweep.range", "need step > 0 and stop >= start"));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                (0..=n).map(|k| SweepValue::Number(r.start + k as f64 * r.step)).collect()
            }
            _ => return Err(Error::invalid("sweep", "give exactly one of values or range")),
        };
        if values.is_empty() {
            return Err(Error::invalid("sweep.values", "at least one value is needed"));
        }
        let scenario = match base {
            Some(b) if doc.scenario.is_relative() => b.join(&doc.scenario),
            _ => doc.scenario,
        };
        Ok(Self {
            axis: doc.axis,
            values,
            scenario,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }

    /// Sets the axis to `value` on `spec`.
    pub fn apply(&self, spec: &mut ScenarioSpec, value: &SweepValue) -> Result<()> {
        let key = "sweep.values";
        let number = || match value {
            SweepValue::Number(x) => Ok(*x),
            SweepValue::Text(s) => Err(Error::invalid(key, format!("'{s}' is not a number"))),
        };
        let count = || {
            let x = number()?;
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::invalid(key, format!("{x} is not a nonnegative integer")))
            }
        };
        match self.axis {
            SweepAxis::QuantumChannelIndex => spec.grid.quantum.channel = count()?,
            SweepAxis::GuardChannels => spec.grid.guard_channels = count()?,
            SweepAxis::SpanKm => spec.solver.span_length = number()? * 1e3,
            SweepAxis::TotalLaunchDbm => {
                let p = dbm_to_watt(number()?);
                let mut any = false;
                for (g, l) in spec.mode_groups.iter().zip(spec.launch.groups.iter_mut()) {
                    if g.role == GroupRole::Classical {
                        l.power = LaunchPower::Total(p);
                        any = true;
                    }
                }
                if !any {
                    return Err(Error::invalid(key, "total_launch_dBm needs a classical group"));
                }
            }
            SweepAxis::Scheme => {
                spec.scheme = match value {
                    SweepValue::Text(s) if s.eq_ignore_ascii_case("co") => Scheme::Co,
                    SweepValue::Text(s) if s.eq_ignore_ascii_case("counter") => Scheme::Counter,
                    other => return Err(Error::invalid(key, format!("'{other}' is not co or counter"))),
                }
            }
        }
        Ok(())
    }
}

/// Endpoint result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: SweepValue,
    pub z_rx: f64,
    pub frequency: f64,
    pub received: Sources,
    pub bandwidth: f64,
}

/// Solves every point of `sweep` in parallel; rows keep the value order.
pub fn run_sweep(sweep: &SweepSpec, base: &ScenarioSpec) -> Result<Vec<SweepRow>> {
    sweep
        .values
        .par_iter()
        .map(|v| {
            let mut spec = base.clone();
            sweep.apply(&mut spec, v)?;
            let scn = spec.validate()?;
            let res = kinetics::solve_with(&scn, kinetics::SolveOptions { max_samples: 2 })?;
            Ok(SweepRow {
                value: v.clone(),
                z_rx: match scn.spec().scheme {
                    Scheme::Co => scn.span_length(),
                    Scheme::Counter => 0.0,
                },
                frequency: quantum_frequency(&scn),
                received: res.received(&scn),
                bandwidth: detector_bandwidth(&scn),
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 14] = [
    "axis",
    "value",
    "z_rx_km",
    "f_THz",
    "P_int_W",
    "P_int_sprs_W",
    "P_int_fwm_W",
    "P_int_xtalk_W",
    "P_int_rayleigh_W",
    "psd_mW_per_GHz",
    "psd_sprs_mW_per_GHz",
    "psd_fwm_mW_per_GHz",
    "psd_xtalk_mW_per_GHz",
    "psd_rayleigh_mW_per_GHz",
];

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let path = Path::new("sweep.csv");
    let axis = match axis {
        SweepAxis::QuantumChannelIndex => "quantum_channel_index",
        SweepAxis::TotalLaunchDbm => "total_launch_dBm",
        SweepAxis::SpanKm => "span_km",
        SweepAxis::GuardChannels => "guard_channels",
        SweepAxis::Scheme => "scheme",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(csv_error(path))?;
    for r in rows {
        let s = &r.received;
        let psd = |p: f64| fmt(p / r.bandwidth * W_PER_HZ_TO_MW_PER_GHZ);
        w.write_record([
            axis.to_string(),
            r.value.to_string(),
            fmt(r.z_rx / 1e3),
            fmt(r.frequency / 1e12),
            fmt(s.total()),
            fmt(s.sprs),
            fmt(s.fwm),
            fmt(s.xtalk),
            fmt(s.rayleigh),
            psd(s.total()),
            psd(s.sprs),
            psd(s.fwm),
            psd(s.xtalk),
            psd(s.rayleigh),
        ])
        .map_err(csv_error(path))?;
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `sweep`: run every point and write `sweep.csv`. Returns the row count.
pub fn cmd_sweep(path: &Path, flags: &Flags) -> Result<usize> {
    let sweep = SweepSpec::from_file(path)?;
    let mut base = parse_scenario_file(&sweep.scenario)?;
    flags.apply(&mut base);
    let rows = run_sweep(&sweep, &base)?;
    write_atomic(&flags.out, "sweep.csv", &sweep_csv(sweep.axis, &rows)?)?;
    Ok(rows.len())
}

/// `verify`: oracle comparison written to `oracle.csv` and
/// `oracle_summary.txt`. The flag is whether the endpoint total is within
/// `tolerance` dB.
pub fn cmd_verify(path: &Path, flags: &Flags, reference_steps: usize, tolerance: f64) -> Result<(OracleReport, bool)> {
    let scn = load(path, flags)?;
    let report = oracle::verify(&scn, reference_steps)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_atomic(&flags.out, "oracle.csv", &csv)?;
    let err = report.max_error_db("endpoint.total");
    let pass = err <= tolerance;
    let text = format!(
        "{}{} (tolerance {tolerance} dB)\n",
        report.summary(),
        if pass { "PASS" } else { "FAIL" }
    );
    write_atomic(&flags.out, "oracle_summary.txt", text.as_bytes())?;
    Ok((report, pass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_document() {
        let mut spec = crate::scenario::fixtures::table1(87);
        let flags = Flags {
            steps: Some(7),
            scheme: Some(SchemeArg::Counter),
            quantum_channel: Some(3),
            guard_channels: Some(2),
            fwm: Some(FwmArg::Exact),
            track: Some(TrackArg::Full),
            img: Some(Switch::On),
            out: "x".into(),
        };
        flags.apply(&mut spec);
        assert_eq!(spec.solver.steps_per_span, 7);
        assert_eq!(spec.scheme, Scheme::Counter);
        assert_eq!(spec.grid.quantum.channel, 3);
        assert_eq!(spec.grid.guard_channels, 2);
        assert_eq!(spec.solver.fwm_mode, FwmMode::Exact);
        assert_eq!(spec.solver.track_mode, TrackMode::FullGrid);
        assert!(spec.solver.include_img_terms);
    }

    #[test]
    fn sweep_documents() {
        let s = SweepSpec::parse("scenario = \"a.toml\"\naxis = \"span_km\"\nrange = { start = 10, stop = 100, step = 10 }\n", Some(Path::new("/base")))
            .unwrap();
        assert_eq!(s.values.len(), 10);
        assert_eq!(s.scenario, Path::new("/base/a.toml"));
        let s = SweepSpec::parse("scenario = \"a.toml\"\naxis = \"scheme\"\nvalues = [\"co\", \"counter\"]\n", None).unwrap();
        let mut spec = crate::scenario::fixtures::table1(87);
        s.apply(&mut spec, &s.values[1]).unwrap();
        assert_eq!(spec.scheme, Scheme::Counter);
        assert!(s.apply(&mut spec, &SweepValue::Number(1.0)).is_err());

        let err = SweepSpec::parse("scenario = \"a.toml\"\naxis = \"span_km\"\nvalues = []\n", None).unwrap_err();
        assert!(err.to_string().contains("at least one"), "{err}");
        assert!(SweepSpec::parse("scenario = \"a.toml\"\naxis = \"colour\"\nvalues = [1]\n", None).is_err());
    }

    #[test]
    fn launch_axis_touches_only_classical_groups() {
        let s = SweepSpec {
            axis: SweepAxis::TotalLaunchDbm,
            values: vec![SweepValue::Number(0.0)],
            scenario: PathBuf::new(),
        };
        let mut spec = crate::scenario::fixtures::sdm(87);
        s.apply(&mut spec, &s.values[0]).unwrap();
        assert_eq!(spec.launch.groups[0].power, LaunchPower::Total(1e-3));
        assert_eq!(spec.launch.groups[1].power, LaunchPower::Total(0.0));
        assert!(s.apply(&mut spec, &SweepValue::Text("x".into())).is_err());
    }

    #[test]
    fn sweep_rows_keep_order() {
        let s = SweepSpec {
            axis: SweepAxis::QuantumChannelIndex,
            values: [87.0, 0.0, 40.0].map(SweepValue::Number).to_vec(),
            scenario: PathBuf::new(),
        };
        let rows = run_sweep(&s, &crate::scenario::fixtures::table1(87)).unwrap();
        let f: Vec<f64> = rows.iter().map(|r| r.frequency).collect();
        assert!(f[0] > f[2] && f[2] > f[1]);
        assert!(rows.iter().all(|r| r.received.total() > 0.0));
    }

    #[test]
    fn run_outputs_sum_and_repeat() {
        let scn = crate::scenario::fixtures::table1(87).validate().unwrap();
        let out = run_scenario(scn.clone()).unwrap();
        assert!(out.half_step_change_db.abs() < 0.1, "{}", out.half_step_change_db);
        let a = trajectory_csv(&scn, &out.result).unwrap();
        let again = run_scenario(scn.clone()).unwrap();
        assert_eq!(a, trajectory_csv(&scn, &again.result).unwrap());
        assert_eq!(summary_csv(&out).unwrap(), summary_csv(&again).unwrap());

        let mut r = csv::Reader::from_reader(&a[..]);
        assert_eq!(r.headers().unwrap(), &csv::StringRecord::from(TRAJECTORY_HEADER.to_vec()));
        let mut n = 0;
        for rec in r.records() {
            let rec = rec.unwrap();
            let v: Vec<f64> = (6..11).map(|k| rec[k].parse().unwrap()).collect();
            let parts = v[1] + v[2] + v[3] + v[4];
            assert!((parts - v[0]).abs() <= 1e-9 * v[0].abs(), "{rec:?}");
            n += 1;
        }
        assert_eq!(n, out.result.states.len() * out.result.tracked.len());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.csv", b"one").unwrap();
        let p = write_atomic(dir.path(), "a.csv", b"two").unwrap();
        assert_eq!(std::fs::read(p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["coexist", "run", "/nonexistent/scenario.toml"]), 2);
        assert_eq!(main_with(["coexist", "bogus"]), 2);
        assert_eq!(main_with(["coexist", "--help"]), 0);
    }
}
