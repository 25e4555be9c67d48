//! Quantities with unit suffixes, e.g. `"266 nm"` or `"90 hbar_k"`.
//!
//! Bare numbers are taken to be SI already.

use std::f64::consts::PI;

use macrotest::constants::{AMU, CS133_MASS, HBAR, RB87_MASS};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("cannot parse quantity '{0}'")]
    Syntax(String),
    #[error("unknown {dim} unit '{unit}'")]
    Unknown { dim: &'static str, unit: String },
    #[error("'{0}' needs a wavelength to convert photon recoils")]
    NoWavelength(String),
}

/// A config value that is either a plain number or a string with a unit.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Time,
    Mass,
    Momentum,
    /// Angular frequency; Hz-type units are multiplied by 2 pi.
    AngularFrequency,
    Angle,
    Power,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::Time => "time",
            Dim::Mass => "mass",
            Dim::Momentum => "momentum",
            Dim::AngularFrequency => "frequency",
            Dim::Angle => "angle",
            Dim::Power => "power",
        }
    }
}

/// Conversion to SI. Sub-units divide by an exact power of ten, which keeps
/// e.g. `100 nm` at the double nearest to 1e-7.
enum Scale {
    Times(f64),
    Per(f64),
}

fn factor(dim: Dim, unit: &str, wavelength: Option<f64>) -> Result<Scale, UnitError> {
    use Scale::{Per, Times};
    let unknown = || UnitError::Unknown { dim: dim.name(), unit: unit.to_string() };
    let f = match dim {
        Dim::Length => match unit {
            "m" => Times(1.0),
            "cm" => Per(1e2),
            "mm" => Per(1e3),
            "um" | "µm" => Per(1e6),
            "nm" => Per(1e9),
            "pm" => Per(1e12),
            "fm" => Per(1e15),
            _ => return Err(unknown()),
        },
        Dim::Time => match unit {
            "s" => Times(1.0),
            "ms" => Per(1e3),
            "us" | "µs" => Per(1e6),
            "ns" => Per(1e9),
            "min" => Times(60.0),
            "h" => Times(3600.0),
            "d" => Times(86_400.0),
            "yr" => Times(365.25 * 86_400.0),
            _ => return Err(unknown()),
        },
        Dim::Mass => match unit {
            "kg" => Times(1.0),
            "g" => Per(1e3),
            "amu" | "u" | "Da" => Times(AMU),
            _ => return Err(unknown()),
        },
        Dim::Momentum => match unit {
            "kg m/s" | "kg*m/s" => Times(1.0),
            "hbar_k" => {
                let l = wavelength.ok_or_else(|| UnitError::NoWavelength(unit.to_string()))?;
                Times(2.0 * PI * HBAR / l)
            }
            _ => return Err(unknown()),
        },
        Dim::AngularFrequency => match unit {
            "rad/s" => Times(1.0),
            "Hz" => Times(2.0 * PI),
            "kHz" => Times(2e3 * PI),
            "MHz" => Times(2e6 * PI),
            _ => return Err(unknown()),
        },
        Dim::Angle => match unit {
            "rad" => Times(1.0),
            "mrad" => Per(1e3),
            "deg" => Times(PI / 180.0),
            _ => return Err(unknown()),
        },
        Dim::Power => match unit {
            "W" => Times(1.0),
            "mW" => Per(1e3),
            "uW" | "µW" => Per(1e6),
            _ => return Err(unknown()),
        },
    };
    Ok(f)
}

impl Quantity {
    pub fn si(&self, dim: Dim) -> Result<f64, UnitError> {
        self.si_with(dim, None)
    }

    /// Value in SI units; `wavelength` resolves photon-recoil momenta.
    pub fn si_with(&self, dim: Dim, wavelength: Option<f64>) -> Result<f64, UnitError> {
        let text = match self {
            Quantity::Number(v) => return Ok(*v),
            Quantity::Text(t) => t.trim(),
        };
        if dim == Dim::Mass {
            match text {
                "Rb87" => return Ok(RB87_MASS),
                "Cs133" => return Ok(CS133_MASS),
                _ => {}
            }
        }
        let split = text.find(|c: char| c.is_whitespace()).unwrap_or(text.len());
        let (num, unit) = text.split_at(split);
        let value: f64 = num.parse().map_err(|_| UnitError::Syntax(text.to_string()))?;
        let unit = unit.trim();
        if unit.is_empty() {
            return Ok(value);
        }
        Ok(match factor(dim, unit, wavelength)? {
            Scale::Times(f) => value * f,
            Scale::Per(d) => value / d,
        })
    }
}

/// Grid range `MIN:MAX:N`, bounds with optional units.
pub fn parse_range(spec: &str, dim: Dim) -> Result<(f64, f64, usize), UnitError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(UnitError::Syntax(spec.to_string()));
    }
    let min = Quantity::Text(parts[0].to_string()).si(dim)?;
    let max = Quantity::Text(parts[1].to_string()).si(dim)?;
    let n = parts[2].trim().parse().map_err(|_| UnitError::Syntax(spec.to_string()))?;
    Ok((min, max, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Quantity {
        Quantity::Text(s.into())
    }

    #[test]
    fn conversions() {
        assert_eq!(q("266 nm").si(Dim::Length).unwrap(), 266e-9);
        assert_eq!(q("100 nm").si(Dim::Length).unwrap(), 1e-7);
        assert_eq!(q("1.2 s").si(Dim::Time).unwrap(), 1.2);
        assert_eq!(q("3.7e-6").si(Dim::Length).unwrap(), 3.7e-6);
        assert_eq!(Quantity::Number(2.0).si(Dim::Time).unwrap(), 2.0);
        assert_eq!(q("Rb87").si(Dim::Mass).unwrap(), RB87_MASS);
        assert!((q("12.7 kHz").si(Dim::AngularFrequency).unwrap() - 2.0 * PI * 12.7e3).abs() < 1e-9);
        let p = q("2 hbar_k").si_with(Dim::Momentum, Some(780e-9)).unwrap();
        assert!((p - 2.0 * 2.0 * PI * HBAR / 780e-9).abs() < 1e-40);
    }

    #[test]
    fn errors() {
        assert!(matches!(q("3 parsec").si(Dim::Length), Err(UnitError::Unknown { .. })));
        assert!(matches!(q("abc nm").si(Dim::Length), Err(UnitError::Syntax(_))));
        assert!(matches!(q("2 hbar_k").si(Dim::Momentum), Err(UnitError::NoWavelength(_))));
        assert!(matches!(q("1 s").si(Dim::Length), Err(UnitError::Unknown { .. })));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1e2:1e22:300", Dim::Time).unwrap(), (1e2, 1e22, 300));
        assert_eq!(parse_range("10 fm:1 m:200", Dim::Length).unwrap(), (1e-14, 1.0, 200));
        assert!(parse_range("1:2", Dim::Time).is_err());
    }
}
