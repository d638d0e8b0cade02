//! TOML scenario documents.
//!
//! Quantities are strings with a unit (`"50 GHz"`, `"-21.7 ps2/km"`) or bare
//! numbers in SI. Spectral profiles are a scalar quantity, an inline table
//! `{ samples = [[f, v], ...], unit = "dB/km" }` or a CSV reference
//! `{ csv = "profiles/loss.csv", unit = "dB/km" }` resolved against the
//! document's directory. See `docs/scenario-format.md` for the full tree.

use std::path::{Path, PathBuf};

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use super::*;
use crate::profiles::{RamanGainModel, SpectralProfile};
use crate::units::{parse_quantity, QuantityKind, Unit};

type Node<'a, 'i> = &'a Spanned<DeValue<'i>>;

struct Doc<'t> {
    text: &'t str,
    base: Option<PathBuf>,
}

impl Doc<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, path: &str, node: Option<Node>, msg: impl std::fmt::Display) -> Error {
        match node {
            Some(n) => Error::Parse(format!("{path} (line {}): {msg}", self.line(n.span().start))),
            None => Error::Parse(format!("{path}: {msg}")),
        }
    }

    fn unit_err(&self, path: &str, node: Node, msg: String) -> Error {
        Error::Unit {
            key: format!("{path} (line {})", self.line(node.span().start)),
            message: msg,
        }
    }

    fn table<'a, 'i>(&self, path: &str, node: Node<'a, 'i>) -> Result<&'a DeTable<'i>> {
        node.get_ref()
            .as_table()
            .ok_or_else(|| self.err(path, Some(node), format!("expected a table, found {}", node.get_ref().type_str())))
    }

    fn array<'a, 'i>(&self, path: &str, node: Node<'a, 'i>) -> Result<&'a [Spanned<DeValue<'i>>]> {
        node.get_ref()
            .as_array()
            .map(|a| &a[..])
            .ok_or_else(|| self.err(path, Some(node), format!("expected an array, found {}", node.get_ref().type_str())))
    }

    fn float(&self, path: &str, node: Node) -> Result<f64> {
        match node.get_ref() {
            DeValue::Float(f) => f
                .as_str()
                .parse()
                .map_err(|_| self.err(path, Some(node), "invalid float")),
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix())
                .map(|v| v as f64)
                .map_err(|_| self.err(path, Some(node), "invalid integer")),
            other => Err(self.err(path, Some(node), format!("expected a number, found {}", other.type_str()))),
        }
    }

    fn uint(&self, path: &str, node: Node) -> Result<usize> {
        match node.get_ref() {
            DeValue::Integer(i) => usize::from_str_radix(i.as_str(), i.radix())
                .map_err(|_| self.err(path, Some(node), "expected a nonnegative integer")),
            other => Err(self.err(path, Some(node), format!("expected an integer, found {}", other.type_str()))),
        }
    }

    fn boolean(&self, path: &str, node: Node) -> Result<bool> {
        node.get_ref()
            .as_bool()
            .ok_or_else(|| self.err(path, Some(node), "expected true or false"))
    }

    fn string<'a>(&self, path: &str, node: Node<'a, '_>) -> Result<&'a str> {
        node.get_ref()
            .as_str()
            .ok_or_else(|| self.err(path, Some(node), format!("expected a string, found {}", node.get_ref().type_str())))
    }

    fn quantity(&self, path: &str, node: Node, kind: QuantityKind) -> Result<f64> {
        match node.get_ref() {
            DeValue::String(s) => parse_quantity(s, kind).map_err(|m| self.unit_err(path, node, m)),
            _ => self.float(path, node),
        }
    }

    fn choice<T: Copy>(&self, path: &str, node: Node, options: &[(&str, T)]) -> Result<T> {
        let s = self.string(path, node)?;
        options
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(s))
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(path, Some(node), format!("'{s}' is not one of {}", names.join(", ")))
            })
    }

    /// Spectral profile of `kind`; for Raman gain the abscissa is the shift.
    fn profile(&self, path: &str, node: Node, kind: QuantityKind) -> Result<SpectralProfile> {
        let table = match node.get_ref() {
            DeValue::Table(t) => t,
            _ => return Ok(SpectralProfile::constant(self.quantity(path, node, kind)?)),
        };
        let t = Tbl::new(self, path, node, table);
        t.only(&["csv", "samples", "unit", "frequency_unit"])?;
        let unit = match t.get("unit") {
            Some(u) => Unit::lookup(kind, self.string(&t.key("unit"), u)?)
                .map_err(|m| self.unit_err(&t.key("unit"), u, m))?,
            None => Unit::si(kind),
        };
        let f_unit = match t.get("frequency_unit") {
            Some(u) => Unit::lookup(QuantityKind::Frequency, self.string(&t.key("frequency_unit"), u)?)
                .map_err(|m| self.unit_err(&t.key("frequency_unit"), u, m))?,
            None => Unit::lookup(QuantityKind::Frequency, "THz").expect("THz in table"),
        };
        let raw = match (t.get("csv"), t.get("samples")) {
            (Some(c), None) => self.read_csv(&t.key("csv"), c)?,
            (None, Some(s)) => {
                let mut rows = Vec::new();
                for (k, row) in self.array(&t.key("samples"), s)?.iter().enumerate() {
                    let rp = format!("{}[{k}]", t.key("samples"));
                    let pair = self.array(&rp, row)?;
                    if pair.len() != 2 {
                        return Err(self.err(&rp, Some(row), "expected [frequency, value]"));
                    }
                    rows.push((self.float(&rp, &pair[0])?, self.float(&rp, &pair[1])?));
                }
                rows
            }
            _ => return Err(self.err(path, Some(node), "profile table needs exactly one of 'csv' or 'samples'")),
        };
        let samples = raw
            .into_iter()
            .map(|(f, v)| (f_unit.to_si(f), unit.to_si(v)))
            .collect();
        SpectralProfile::new(samples).map_err(|e| self.err(path, Some(node), e))
    }

    fn read_csv(&self, path: &str, node: Node) -> Result<Vec<(f64, f64)>> {
        let rel = self.string(path, node)?;
        let file = match &self.base {
            Some(b) => b.join(rel),
            None => PathBuf::from(rel),
        };
        read_profile_csv(&file)
    }
}

/// Two-column profile CSV: a header, then `frequency_THz,value` rows.
pub(crate) fn read_profile_csv(file: &Path) -> Result<Vec<(f64, f64)>> {
    let csv_err = |message: String| Error::Csv {
        path: file.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(file)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: file.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => csv_err(e.to_string()),
        })?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        if rec.len() != 2 {
            return Err(csv_err(format!("row {}: expected 2 columns, found {}", k + 2, rec.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| csv_err(format!("row {}: '{s}' is not a number", k + 2)))
        };
        rows.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    if rows.is_empty() {
        return Err(csv_err("no data rows".into()));
    }
    Ok(rows)
}

struct Tbl<'d, 'a, 'i> {
    doc: &'d Doc<'d>,
    path: String,
    node: Option<Node<'a, 'i>>,
    table: &'a DeTable<'i>,
}

impl<'d, 'a, 'i> Tbl<'d, 'a, 'i> {
    fn new(doc: &'d Doc<'d>, path: &str, node: Node<'a, 'i>, table: &'a DeTable<'i>) -> Self {
        Self {
            doc,
            path: path.to_string(),
            node: Some(node),
            table,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn get(&self, k: &str) -> Option<Node<'a, 'i>> {
        self.table.get(k)
    }

    fn req(&self, k: &str) -> Result<Node<'a, 'i>> {
        self.get(k)
            .ok_or_else(|| self.doc.err(&self.key(k), self.node, format!("missing {}", self.key(k))))
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in self.table.iter() {
            if !allowed.contains(&k.get_ref().as_ref()) {
                let line = self.doc.line(k.span().start);
                return Err(Error::Parse(format!(
                    "{} (line {line}): unknown key",
                    self.key(k.get_ref())
                )));
            }
        }
        Ok(())
    }

    fn sub(&self, k: &str) -> Result<Option<Tbl<'d, 'a, 'i>>> {
        match self.get(k) {
            None => Ok(None),
            Some(n) => {
                let t = self.doc.table(&self.key(k), n)?;
                Ok(Some(Tbl::new(self.doc, &self.key(k), n, t)))
            }
        }
    }

    fn quantity(&self, k: &str, kind: QuantityKind) -> Result<f64> {
        self.doc.quantity(&self.key(k), self.req(k)?, kind)
    }

    fn opt_quantity(&self, k: &str, kind: QuantityKind) -> Result<Option<f64>> {
        self.get(k)
            .map(|n| self.doc.quantity(&self.key(k), n, kind))
            .transpose()
    }

    fn float_or(&self, k: &str, default: f64) -> Result<f64> {
        self.get(k).map_or(Ok(default), |n| self.doc.float(&self.key(k), n))
    }

    fn uint_or(&self, k: &str, default: usize) -> Result<usize> {
        self.get(k).map_or(Ok(default), |n| self.doc.uint(&self.key(k), n))
    }

    fn bool_or(&self, k: &str, default: bool) -> Result<bool> {
        self.get(k).map_or(Ok(default), |n| self.doc.boolean(&self.key(k), n))
    }

    fn choice_or<T: Copy>(&self, k: &str, options: &[(&str, T)], default: T) -> Result<T> {
        self.get(k)
            .map_or(Ok(default), |n| self.doc.choice(&self.key(k), n, options))
    }

    fn profile(&self, k: &str, kind: QuantityKind) -> Result<SpectralProfile> {
        self.doc.profile(&self.key(k), self.req(k)?, kind)
    }

    fn tables(&self, k: &str) -> Result<Vec<Tbl<'d, 'a, 'i>>> {
        let Some(node) = self.get(k) else {
            return Ok(Vec::new());
        };
        let items = self.doc.array(&self.key(k), node)?;
        items
            .iter()
            .enumerate()
            .map(|(idx, item)| {
                let p = format!("{}[{idx}]", self.key(k));
                let t = self.doc.table(&p, item)?;
                Ok(Tbl::new(self.doc, &p, item, t))
            })
            .collect()
    }
}

const FWM_MODES: &[(&str, FwmMode)] = &[("exact", FwmMode::Exact), ("averaged", FwmMode::Averaged)];
const TRACK_MODES: &[(&str, TrackMode)] = &[
    ("full", TrackMode::FullGrid),
    ("target", TrackMode::TargetChannel),
];
const SCHEMES: &[(&str, Scheme)] = &[("co", Scheme::Co), ("counter", Scheme::Counter)];
const DIRECTIONS: &[(&str, Direction)] = &[
    ("forward", Direction::Forward),
    ("backward", Direction::Backward),
];
const ROLES: &[(&str, GroupRole)] = &[
    ("classical", GroupRole::Classical),
    ("quantum", GroupRole::Quantum),
];

/// Parses a scenario document. CSV references resolve against the
/// working directory.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    parse_with_base(text, None)
}

/// Reads and parses a scenario file; CSV references resolve against the
/// file's directory.
pub fn parse_scenario_file(path: &Path) -> Result<ScenarioSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_with_base(&text, path.parent().map(Path::to_path_buf))
}

fn parse_with_base(text: &str, base: Option<PathBuf>) -> Result<ScenarioSpec> {
    let doc = Doc { text, base };
    let root = DeTable::parse(text).map_err(|e| {
        let line = e.span().map(|s| doc.line(s.start));
        match line {
            Some(l) => Error::Parse(format!("line {l}: {}", e.message())),
            None => Error::Parse(e.message().to_string()),
        }
    })?;
    let root = Tbl {
        doc: &doc,
        path: String::new(),
        node: None,
        table: root.get_ref(),
    };
    root.only(&["name", "grid", "mode_groups", "coupling", "launch", "solver", "scheme", "metrics"])?;

    let group_tables = root.tables("mode_groups")?;
    if group_tables.is_empty() {
        return Err(Error::Parse("missing mode_groups".into()));
    }
    let groups = group_tables.len();

    let name = match root.get("name") {
        Some(n) => doc.string("name", n)?.to_string(),
        None => String::new(),
    };

    let grid_t = root
        .sub("grid")?
        .ok_or_else(|| Error::Parse("missing grid".into()))?;
    grid_t.only(&[
        "f_min",
        "spacing",
        "channels",
        "quantum_group",
        "quantum_channel",
        "guard_channels",
        "notch",
    ])?;
    let channels = doc.uint(&grid_t.key("channels"), grid_t.req("channels")?)?;
    let grid = GridSpec {
        f_min: grid_t.quantity("f_min", QuantityKind::Frequency)?,
        spacing: grid_t.quantity("spacing", QuantityKind::Frequency)?,
        channels,
        quantum: QuantumSlot {
            group: grid_t.uint_or("quantum_group", 0)?,
            channel: doc.uint(&grid_t.key("quantum_channel"), grid_t.req("quantum_channel")?)?,
        },
        guard_channels: grid_t.uint_or("guard_channels", 0)?,
        notch: grid_t.bool_or("notch", true)?,
    };

    let mut mode_groups = Vec::with_capacity(groups);
    for (n, t) in group_tables.iter().enumerate() {
        t.only(&[
            "name",
            "role",
            "degenerate_modes",
            "gamma",
            "raman_fraction",
            "scaling_factor",
            "beta2",
            "beta1",
            "attenuation",
            "raman_gain",
            "rayleigh",
            "effective_area",
            "kurtosis",
            "allocated",
        ])?;
        let raman_node = t.req("raman_gain")?;
        let raman_gain = match raman_node.get_ref() {
            DeValue::Table(rt) if rt.get("slope").is_some() => {
                let rt = Tbl::new(&doc, &t.key("raman_gain"), raman_node, rt);
                rt.only(&["slope", "peak"])?;
                RamanGainModel::ClippedLinear {
                    slope: rt.quantity("slope", QuantityKind::RamanSlope)?,
                    peak: rt
                        .opt_quantity("peak", QuantityKind::RamanGain)?
                        .unwrap_or(f64::INFINITY),
                }
            }
            _ => RamanGainModel::Tabulated(t.profile("raman_gain", QuantityKind::RamanGain)?),
        };
        let kurtosis = match t.get("kurtosis") {
            None => Kurtosis::Uniform(-1.0),
            Some(k) => match k.get_ref() {
                DeValue::Array(a) => Kurtosis::PerChannel(
                    a.iter()
                        .map(|v| doc.float(&t.key("kurtosis"), v))
                        .collect::<Result<_>>()?,
                ),
                _ => Kurtosis::Uniform(doc.float(&t.key("kurtosis"), k)?),
            },
        };
        let allocated = t
            .get("allocated")
            .map(|a| {
                doc.array(&t.key("allocated"), a)?
                    .iter()
                    .map(|v| doc.uint(&t.key("allocated"), v))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let degenerate_modes = doc.uint(&t.key("degenerate_modes"), t.req("degenerate_modes")?)?;
        mode_groups.push(ModeGroupSpec {
            name: match t.get("name") {
                Some(v) => doc.string(&t.key("name"), v)?.to_string(),
                None => format!("group{n}"),
            },
            role: t.choice_or("role", ROLES, GroupRole::Classical)?,
            degenerate_modes: u32::try_from(degenerate_modes)
                .map_err(|_| doc.err(&t.key("degenerate_modes"), t.get("degenerate_modes"), "too large"))?,
            gamma: t.quantity("gamma", QuantityKind::Nonlinearity)?,
            raman_fraction: t.float_or("raman_fraction", 0.18)?,
            scaling_factor: t
                .get("scaling_factor")
                .map(|v| doc.float(&t.key("scaling_factor"), v))
                .transpose()?,
            beta2: t.quantity("beta2", QuantityKind::Dispersion)?,
            beta1: t.opt_quantity("beta1", QuantityKind::GroupDelay)?.unwrap_or(0.0),
            attenuation: t.profile("attenuation", QuantityKind::Attenuation)?,
            raman_gain,
            rayleigh: match t.get("rayleigh") {
                Some(_) => t.profile("rayleigh", QuantityKind::Coupling)?,
                None => SpectralProfile::constant(0.0),
            },
            effective_area: t.opt_quantity("effective_area", QuantityKind::Area)?,
            kurtosis,
            allocated,
        });
    }

    let mut coupling = CouplingSpec::empty(groups);
    if let Some(c) = root.sub("coupling")? {
        c.only(&["include_depletion", "pairs"])?;
        coupling.include_depletion = c.bool_or("include_depletion", false)?;
        for p in c.tables("pairs")? {
            p.only(&["into", "from", "kappa", "effective_area", "overlap"])?;
            let n = doc.uint(&p.key("into"), p.req("into")?)?;
            let m = doc.uint(&p.key("from"), p.req("from")?)?;
            if n >= groups || m >= groups {
                return Err(doc.err(&p.path, p.node, format!("group index out of range for {groups} groups")));
            }
            if p.get("kappa").is_some() {
                coupling.kappa[n][m] = Some(p.profile("kappa", QuantityKind::Coupling)?);
            }
            coupling.cross_area[n][m] = p.opt_quantity("effective_area", QuantityKind::Area)?;
            coupling.overlap[n][m] = p
                .get("overlap")
                .map(|v| doc.float(&p.key("overlap"), v))
                .transpose()?;
        }
    }

    let launch_t = root
        .sub("launch")?
        .ok_or_else(|| Error::Parse("missing launch".into()))?;
    launch_t.only(&["temperature", "groups"])?;
    let launch_groups = launch_t
        .tables("groups")?
        .iter()
        .map(|g| {
            g.only(&["total", "per_channel", "powers", "direction"])?;
            let power = match (g.get("total"), g.get("per_channel"), g.get("powers")) {
                (Some(_), None, None) => LaunchPower::Total(g.quantity("total", QuantityKind::Power)?),
                (None, Some(_), None) => {
                    LaunchPower::PerChannel(g.quantity("per_channel", QuantityKind::Power)?)
                }
                (None, None, Some(a)) => LaunchPower::Explicit(
                    doc.array(&g.key("powers"), a)?
                        .iter()
                        .map(|v| doc.quantity(&g.key("powers"), v, QuantityKind::Power))
                        .collect::<Result<_>>()?,
                ),
                (None, None, None) => LaunchPower::Total(0.0),
                _ => {
                    return Err(doc.err(&g.path, g.node, "give only one of total, per_channel, powers"))
                }
            };
            Ok(GroupLaunch {
                power,
                direction: g.choice_or("direction", DIRECTIONS, Direction::Forward)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let launch = LaunchSpec {
        temperature: launch_t
            .opt_quantity("temperature", QuantityKind::Temperature)?
            .unwrap_or(300.0),
        groups: launch_groups,
    };

    let mut solver = SolverSettings::default();
    if let Some(s) = root.sub("solver")? {
        s.only(&[
            "steps_per_span",
            "span_length",
            "fwm",
            "track",
            "n_R",
            "img",
            "srs",
            "backward_fwm",
        ])?;
        solver.steps_per_span = s.uint_or("steps_per_span", solver.steps_per_span)?;
        if let Some(l) = s.opt_quantity("span_length", QuantityKind::Length)? {
            solver.span_length = l;
        }
        solver.fwm_mode = s.choice_or("fwm", FWM_MODES, solver.fwm_mode)?;
        solver.track_mode = s.choice_or("track", TRACK_MODES, solver.track_mode)?;
        solver.n_r = u32::try_from(s.uint_or("n_R", solver.n_r as usize)?)
            .map_err(|_| doc.err(&s.key("n_R"), s.get("n_R"), "too large"))?;
        solver.include_img_terms = s.bool_or("img", solver.include_img_terms)?;
        solver.include_srs = s.bool_or("srs", solver.include_srs)?;
        solver.backward_fwm = s.choice_or("backward_fwm", FWM_MODES, solver.backward_fwm)?;
    }

    let scheme = match root.sub("scheme")? {
        Some(s) => {
            s.only(&["type"])?;
            s.choice_or("type", SCHEMES, Scheme::Co)?
        }
        None => Scheme::Co,
    };

    let mut metrics = MetricsSpec::default();
    if let Some(m) = root.sub("metrics")? {
        m.only(&["detector_bandwidth", "signal_rate", "lo_shot_noise"])?;
        metrics.detector_bandwidth = m.opt_quantity("detector_bandwidth", QuantityKind::Frequency)?;
        metrics.signal_rate = m.opt_quantity("signal_rate", QuantityKind::Rate)?;
        metrics.lo_shot_noise = m.opt_quantity("lo_shot_noise", QuantityKind::Power)?;
    }

    Ok(ScenarioSpec {
        name,
        grid,
        mode_groups,
        coupling,
        launch,
        solver,
        scheme,
        metrics,
    })
}

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, x)| *x == v).map(|(n, _)| *n).unwrap_or("?")
}

fn profile_value(p: &SpectralProfile) -> toml::Value {
    if p.is_constant() && p.samples()[0].0 == 0.0 {
        return toml::Value::Float(p.samples()[0].1);
    }
    let mut t = toml::Table::new();
    t.insert("frequency_unit".into(), "Hz".into());
    t.insert(
        "samples".into(),
        toml::Value::Array(
            p.samples()
                .iter()
                .map(|(f, v)| toml::Value::Array(vec![(*f).into(), (*v).into()]))
                .collect(),
        ),
    );
    toml::Value::Table(t)
}

fn count(n: usize) -> toml::Value {
    toml::Value::Integer(n as i64)
}

/// Writes a spec back as a document with every quantity in SI, so that
/// parsing the output reproduces the spec exactly.
pub fn serialize_scenario(spec: &ScenarioSpec) -> String {
    use toml::{Table, Value};
    let mut root = Table::new();
    root.insert("name".into(), spec.name.clone().into());

    let g = &spec.grid;
    let mut grid = Table::new();
    grid.insert("f_min".into(), g.f_min.into());
    grid.insert("spacing".into(), g.spacing.into());
    grid.insert("channels".into(), count(g.channels));
    grid.insert("quantum_group".into(), count(g.quantum.group));
    grid.insert("quantum_channel".into(), count(g.quantum.channel));
    grid.insert("guard_channels".into(), count(g.guard_channels));
    grid.insert("notch".into(), g.notch.into());
    root.insert("grid".into(), Value::Table(grid));

    let groups = spec
        .mode_groups
        .iter()
        .map(|m| {
            let mut t = Table::new();
            t.insert("name".into(), m.name.clone().into());
            t.insert("role".into(), name_of(ROLES, m.role).into());
            t.insert("degenerate_modes".into(), count(m.degenerate_modes as usize));
            t.insert("gamma".into(), m.gamma.into());
            t.insert("raman_fraction".into(), m.raman_fraction.into());
            if let Some(r) = m.scaling_factor {
                t.insert("scaling_factor".into(), r.into());
            }
            t.insert("beta2".into(), m.beta2.into());
            t.insert("beta1".into(), m.beta1.into());
            t.insert("attenuation".into(), profile_value(&m.attenuation));
            let raman = match &m.raman_gain {
                RamanGainModel::ClippedLinear { slope, peak } => {
                    let mut r = Table::new();
                    r.insert("slope".into(), (*slope).into());
                    if peak.is_finite() {
                        r.insert("peak".into(), (*peak).into());
                    }
                    Value::Table(r)
                }
                RamanGainModel::Tabulated(p) => profile_value(p),
            };
            t.insert("raman_gain".into(), raman);
            t.insert("rayleigh".into(), profile_value(&m.rayleigh));
            if let Some(a) = m.effective_area {
                t.insert("effective_area".into(), a.into());
            }
            let k = match &m.kurtosis {
                Kurtosis::Uniform(v) => (*v).into(),
                Kurtosis::PerChannel(v) => Value::Array(v.iter().map(|x| (*x).into()).collect()),
            };
            t.insert("kurtosis".into(), k);
            if let Some(list) = &m.allocated {
                t.insert("allocated".into(), Value::Array(list.iter().map(|i| count(*i)).collect()));
            }
            Value::Table(t)
        })
        .collect();
    root.insert("mode_groups".into(), Value::Array(groups));

    let c = &spec.coupling;
    let mut coupling = Table::new();
    coupling.insert("include_depletion".into(), c.include_depletion.into());
    let mut pairs = Vec::new();
    for n in 0..spec.mode_groups.len() {
        for m in 0..spec.mode_groups.len() {
            let (k, a, r) = (c.kappa(n, m), c.cross_area(n, m), c.overlap(n, m));
            if k.is_none() && a.is_none() && r.is_none() {
                continue;
            }
            let mut p = Table::new();
            p.insert("into".into(), count(n));
            p.insert("from".into(), count(m));
            if let Some(k) = k {
                p.insert("kappa".into(), profile_value(k));
            }
            if let Some(a) = a {
                p.insert("effective_area".into(), a.into());
            }
            if let Some(r) = r {
                p.insert("overlap".into(), r.into());
            }
            pairs.push(Value::Table(p));
        }
    }
    if !pairs.is_empty() {
        coupling.insert("pairs".into(), Value::Array(pairs));
    }
    root.insert("coupling".into(), Value::Table(coupling));

    let mut launch = Table::new();
    launch.insert("temperature".into(), spec.launch.temperature.into());
    let lg = spec
        .launch
        .groups
        .iter()
        .map(|g| {
            let mut t = Table::new();
            match &g.power {
                LaunchPower::Total(p) => t.insert("total".into(), (*p).into()),
                LaunchPower::PerChannel(p) => t.insert("per_channel".into(), (*p).into()),
                LaunchPower::Explicit(v) => t.insert(
                    "powers".into(),
                    Value::Array(v.iter().map(|x| (*x).into()).collect()),
                ),
            };
            t.insert("direction".into(), name_of(DIRECTIONS, g.direction).into());
            Value::Table(t)
        })
        .collect();
    launch.insert("groups".into(), Value::Array(lg));
    root.insert("launch".into(), Value::Table(launch));

    let s = &spec.solver;
    let mut solver = Table::new();
    solver.insert("steps_per_span".into(), count(s.steps_per_span));
    solver.insert("span_length".into(), s.span_length.into());
    solver.insert("fwm".into(), name_of(FWM_MODES, s.fwm_mode).into());
    solver.insert("track".into(), name_of(TRACK_MODES, s.track_mode).into());
    solver.insert("n_R".into(), count(s.n_r as usize));
    solver.insert("img".into(), s.include_img_terms.into());
    solver.insert("srs".into(), s.include_srs.into());
    solver.insert("backward_fwm".into(), name_of(FWM_MODES, s.backward_fwm).into());
    root.insert("solver".into(), Value::Table(solver));

    let mut scheme = Table::new();
    scheme.insert("type".into(), name_of(SCHEMES, spec.scheme).into());
    root.insert("scheme".into(), Value::Table(scheme));

    let m = &spec.metrics;
    let mut metrics = Table::new();
    for (k, v) in [
        ("detector_bandwidth", m.detector_bandwidth),
        ("signal_rate", m.signal_rate),
        ("lo_shot_noise", m.lo_shot_noise),
    ] {
        if let Some(v) = v {
            metrics.insert(k.into(), v.into());
        }
    }
    if !metrics.is_empty() {
        root.insert("metrics".into(), Value::Table(metrics));
    }

    toml::to_string(&root).expect("scenario tables serialize")
}
