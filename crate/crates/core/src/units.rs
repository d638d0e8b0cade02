//! Physical constants and the unit table used at ingestion and reporting.
//!
//! Everything past the document boundary is SI: W, Hz, m, 1/m, s²/m.

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (CODATA 2018, exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    Frequency,
    Power,
    Length,
    Area,
    /// Kerr coefficient γ, 1/(W·m).
    Nonlinearity,
    /// Group-velocity dispersion β₂, s²/m.
    Dispersion,
    /// Group delay per length β₁, s/m.
    GroupDelay,
    /// Power loss rate, 1/m.
    Attenuation,
    /// Power coupling or capture per length (crosstalk κ, Rayleigh Γ), 1/m.
    Coupling,
    /// Raman gain efficiency, 1/(W·m).
    RamanGain,
    /// Raman gain slope, 1/(W·m·Hz).
    RamanSlope,
    Temperature,
    /// Photon rate, 1/s.
    Rate,
}

impl QuantityKind {
    pub fn name(self) -> &'static str {
        match self {
            QuantityKind::Frequency => "frequency",
            QuantityKind::Power => "power",
            QuantityKind::Length => "length",
            QuantityKind::Area => "area",
            QuantityKind::Nonlinearity => "nonlinear coefficient",
            QuantityKind::Dispersion => "dispersion",
            QuantityKind::GroupDelay => "group delay",
            QuantityKind::Attenuation => "attenuation",
            QuantityKind::Coupling => "coupling coefficient",
            QuantityKind::RamanGain => "Raman gain",
            QuantityKind::RamanSlope => "Raman gain slope",
            QuantityKind::Temperature => "temperature",
            QuantityKind::Rate => "rate",
        }
    }

    /// Symbol of the SI unit values are stored in.
    pub fn si_symbol(self) -> &'static str {
        match self {
            QuantityKind::Frequency => "Hz",
            QuantityKind::Power => "W",
            QuantityKind::Length => "m",
            QuantityKind::Area => "m2",
            QuantityKind::Nonlinearity => "1/W/m",
            QuantityKind::Dispersion => "s2/m",
            QuantityKind::GroupDelay => "s/m",
            QuantityKind::Attenuation => "1/m",
            QuantityKind::Coupling => "1/m",
            QuantityKind::RamanGain => "1/W/m",
            QuantityKind::RamanSlope => "1/W/m/Hz",
            QuantityKind::Temperature => "K",
            QuantityKind::Rate => "1/s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    /// si = x · factor
    Linear(f64),
    /// si = reference · 10^(x/10); dBm, and dB/km for coupling ratios.
    Decibel(f64),
    /// si = x · ln(10)/10 / length; dB/km loss rates.
    DecibelRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub symbol: &'static str,
    pub kind: QuantityKind,
    scale: Scale,
}

const DB_NEPER: f64 = std::f64::consts::LN_10 / 10.0;

macro_rules! unit {
    ($sym:expr, $kind:ident, $scale:expr) => {
        Unit {
            symbol: $sym,
            kind: QuantityKind::$kind,
            scale: $scale,
        }
    };
}

use Scale::{Decibel, DecibelRate, Linear};

static UNITS: &[Unit] = &[
    unit!("Hz", Frequency, Linear(1.0)),
    unit!("kHz", Frequency, Linear(1e3)),
    unit!("MHz", Frequency, Linear(1e6)),
    unit!("GHz", Frequency, Linear(1e9)),
    unit!("THz", Frequency, Linear(1e12)),
    unit!("W", Power, Linear(1.0)),
    unit!("mW", Power, Linear(1e-3)),
    unit!("uW", Power, Linear(1e-6)),
    unit!("nW", Power, Linear(1e-9)),
    unit!("dBm", Power, Decibel(1e-3)),
    unit!("dBW", Power, Decibel(1.0)),
    unit!("m", Length, Linear(1.0)),
    unit!("km", Length, Linear(1e3)),
    unit!("m2", Area, Linear(1.0)),
    unit!("um2", Area, Linear(1e-12)),
    unit!("1/W/m", Nonlinearity, Linear(1.0)),
    unit!("1/W/km", Nonlinearity, Linear(1e-3)),
    unit!("s2/m", Dispersion, Linear(1.0)),
    unit!("ps2/km", Dispersion, Linear(1e-27)),
    unit!("s/m", GroupDelay, Linear(1.0)),
    unit!("ps/m", GroupDelay, Linear(1e-12)),
    unit!("ps/km", GroupDelay, Linear(1e-15)),
    unit!("1/m", Attenuation, Linear(1.0)),
    unit!("1/km", Attenuation, Linear(1e-3)),
    unit!("dB/m", Attenuation, DecibelRate(1.0)),
    unit!("dB/km", Attenuation, DecibelRate(1e3)),
    unit!("1/m", Coupling, Linear(1.0)),
    unit!("1/km", Coupling, Linear(1e-3)),
    unit!("dB/m", Coupling, Decibel(1.0)),
    unit!("dB/km", Coupling, Decibel(1e-3)),
    unit!("1/W/m", RamanGain, Linear(1.0)),
    unit!("1/W/km", RamanGain, Linear(1e-3)),
    unit!("1/W/m/Hz", RamanSlope, Linear(1.0)),
    unit!("1/W/km/THz", RamanSlope, Linear(1e-15)),
    unit!("K", Temperature, Linear(1.0)),
    unit!("1/s", Rate, Linear(1.0)),
    unit!("Hz", Rate, Linear(1.0)),
];

fn normalize(symbol: &str) -> String {
    symbol
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '^')
        .map(|c| if c == 'µ' || c == 'μ' { 'u' } else { c })
        .collect()
}

impl Unit {
    /// Looks up `symbol` among the units of `kind`.
    pub fn lookup(kind: QuantityKind, symbol: &str) -> Result<Unit, String> {
        let wanted = normalize(symbol);
        if let Some(u) = UNITS
            .iter()
            .find(|u| u.kind == kind && u.symbol == wanted)
        {
            return Ok(*u);
        }
        match UNITS.iter().find(|u| u.symbol == wanted) {
            Some(other) => Err(format!(
                "'{symbol}' is a {} unit, expected a {} unit",
                other.kind.name(),
                kind.name()
            )),
            None => Err(format!("unknown {} unit '{symbol}'", kind.name())),
        }
    }

    pub fn si(kind: QuantityKind) -> Unit {
        Unit::lookup(kind, kind.si_symbol()).expect("SI unit present in table")
    }

    pub fn to_si(&self, x: f64) -> f64 {
        match self.scale {
            Linear(f) => x * f,
            Decibel(reference) => reference * 10f64.powf(x / 10.0),
            DecibelRate(length) => x * DB_NEPER / length,
        }
    }

    pub fn from_si(&self, y: f64) -> f64 {
        match self.scale {
            Linear(f) => y / f,
            Decibel(reference) => 10.0 * (y / reference).log10(),
            DecibelRate(length) => y * length / DB_NEPER,
        }
    }
}

/// Parses `"<number> [unit]"`; a bare number is taken as SI.
pub fn parse_quantity(text: &str, kind: QuantityKind) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, _)| i);
    let (number, unit) = match split {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    };
    let x: f64 = number
        .parse()
        .map_err(|_| format!("'{text}' does not start with a number"))?;
    if unit.is_empty() {
        return Ok(x);
    }
    let unit = Unit::lookup(kind, unit)?;
    Ok(unit.to_si(x))
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_per_km_to_neper_per_m(db_per_km: f64) -> f64 {
    db_per_km * DB_NEPER / 1e3
}

pub fn neper_per_m_to_db_per_km(alpha: f64) -> f64 {
    alpha * 1e3 / DB_NEPER
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn table_values() {
        assert_eq!(parse_quantity("50 GHz", QuantityKind::Frequency).unwrap(), 5e10);
        let gamma = parse_quantity("1.3 1/W/km", QuantityKind::Nonlinearity).unwrap();
        assert!(rel(gamma, 1.3e-3) < 1e-15);
        let kappa = parse_quantity("-60 dB/km", QuantityKind::Coupling).unwrap();
        assert!(rel(kappa, 1e-9) < 1e-12);
        let alpha = parse_quantity("0.2 dB/km", QuantityKind::Attenuation).unwrap();
        assert!(rel(alpha, 4.605_170_186e-5) < 1e-9);
        let b2 = parse_quantity("-21.7 ps2/km", QuantityKind::Dispersion).unwrap();
        assert!(rel(b2, -2.17e-26) < 1e-12);
        let p = parse_quantity("25 dBm", QuantityKind::Power).unwrap();
        assert!(rel(p, 0.316_227_766_016_837_94) < 1e-12);
        let slope = parse_quantity("0.0286 1/W/km/THz", QuantityKind::RamanSlope).unwrap();
        assert!(rel(slope, 2.86e-17) < 1e-12);
    }

    #[test]
    fn bare_number_is_si() {
        assert_eq!(parse_quantity("1e-7", QuantityKind::Coupling).unwrap(), 1e-7);
    }

    #[test]
    fn wrong_kind_is_reported() {
        let err = parse_quantity("3 dBm", QuantityKind::Frequency).unwrap_err();
        assert!(err.contains("power unit"), "{err}");
        let err = parse_quantity("3 furlongs", QuantityKind::Length).unwrap_err();
        assert!(err.contains("unknown length unit"), "{err}");
        assert!(parse_quantity("GHz", QuantityKind::Frequency).is_err());
    }

    #[test]
    fn spelling_variants() {
        let a = parse_quantity("80 µm^2", QuantityKind::Area).unwrap();
        assert!(rel(a, 80e-12) < 1e-15);
        let b = parse_quantity("21.7 ps^2/km", QuantityKind::Dispersion).unwrap();
        assert!(rel(b, 2.17e-26) < 1e-12);
    }

    proptest! {
        #[test]
        fn conversions_are_involutive(x in -80.0f64..80.0, idx in 0usize..UNITS.len()) {
            let unit = UNITS[idx];
            // decibel scales accept any sign; linear ones too
            let back = unit.from_si(unit.to_si(x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-300) || (back - x).abs() < 1e-13);
        }
    }
}
