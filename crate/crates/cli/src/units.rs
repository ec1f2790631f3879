//! Unit-suffixed quantities in config files.
//!
//! Every dimensional field is a string such as `"-100 dBm/Hz"` or
//! `"1e-4 /m^2"`; bare numbers are rejected so no unit is ever assumed.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// watts
    Power,
    /// W/Hz
    SpectralDensity,
    /// Hz
    Frequency,
    /// bits
    Data,
    /// per m²
    AreaDensity,
    /// seconds
    Time,
    /// per second
    Rate,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let units = match self {
            Dimension::Power => "W, mW, dBW, dBm",
            Dimension::SpectralDensity => "W/Hz, mW/Hz, dBW/Hz, dBm/Hz",
            Dimension::Frequency => "Hz, kHz, MHz, GHz",
            Dimension::Data => "b, Kb, Mb, Gb, B, KB, MB",
            Dimension::AreaDensity => "/m^2, /km^2",
            Dimension::Time => "s, ms, us",
            Dimension::Rate => "/s, /ms, Hz",
        };
        f.write_str(units)
    }
}

enum Scale {
    Linear(f64),
    /// 10^(x/10) times the factor
    Decibel(f64),
}

fn unit_scale(dim: Dimension, unit: &str) -> Option<Scale> {
    use Scale::*;
    let s = match (dim, unit) {
        (Dimension::Power, "W") => Linear(1.0),
        (Dimension::Power, "mW") => Linear(1e-3),
        (Dimension::Power, "dBW") => Decibel(1.0),
        (Dimension::Power, "dBm") => Decibel(1e-3),
        (Dimension::SpectralDensity, "W/Hz") => Linear(1.0),
        (Dimension::SpectralDensity, "mW/Hz") => Linear(1e-3),
        (Dimension::SpectralDensity, "dBW/Hz") => Decibel(1.0),
        (Dimension::SpectralDensity, "dBm/Hz") => Decibel(1e-3),
        (Dimension::Frequency, "Hz") => Linear(1.0),
        (Dimension::Frequency, "kHz") => Linear(1e3),
        (Dimension::Frequency, "MHz") => Linear(1e6),
        (Dimension::Frequency, "GHz") => Linear(1e9),
        (Dimension::Data, "b" | "bit" | "bits") => Linear(1.0),
        (Dimension::Data, "Kb" | "kb" | "kbit") => Linear(1e3),
        (Dimension::Data, "Mb" | "Mbit") => Linear(1e6),
        (Dimension::Data, "Gb" | "Gbit") => Linear(1e9),
        (Dimension::Data, "B") => Linear(8.0),
        (Dimension::Data, "KB" | "kB") => Linear(8e3),
        (Dimension::Data, "MB") => Linear(8e6),
        (Dimension::AreaDensity, "/m^2" | "m^-2" | "/m2") => Linear(1.0),
        (Dimension::AreaDensity, "/km^2" | "km^-2" | "/km2") => Linear(1e-6),
        (Dimension::Time, "s") => Linear(1.0),
        (Dimension::Time, "ms") => Linear(1e-3),
        (Dimension::Time, "us") => Linear(1e-6),
        (Dimension::Rate, "/s" | "Hz" | "s^-1") => Linear(1.0),
        (Dimension::Rate, "/ms") => Linear(1e3),
        _ => return None,
    };
    Some(s)
}

/// Length of the leading numeric literal of `s`.
fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    // exponent only when digits follow, so "5e5" parses but "5 eV" does not
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

/// Parses `text` as a quantity of dimension `dim`, returning the SI value.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let s = text.trim();
    let n = number_len(s);
    let number: f64 = s[..n]
        .parse()
        .map_err(|_| format!("{text:?} does not start with a number"))?;
    let unit: String = s[n..].chars().filter(|c| !c.is_whitespace()).collect();
    if unit.is_empty() {
        return Err(format!("{text:?} has no unit; expected one of {dim}"));
    }
    let value = match unit_scale(dim, &unit) {
        Some(Scale::Linear(f)) => number * f,
        Some(Scale::Decibel(f)) => 10f64.powf(number / 10.0) * f,
        None => {
            return Err(format!(
                "{text:?}: unknown unit {unit:?}; expected one of {dim}"
            ))
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{text:?} is not finite"))
    }
}
