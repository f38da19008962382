//! JSON form of [`CoeffFunction`].
//!
//! ```json
//! { "format": "nirenberg-coeffs/1", "max_degree": 2, "mode": "approx",
//!   "coefficients": ["3.5449077018110318e0", "0e0", ...] }
//! ```
//!
//! Coefficients are listed by flat index `l^2 + l + m`. In `approx` mode
//! each is one decimal string; in `interval` mode each is a `[lo, hi]` pair
//! of decimal strings that, read with directed rounding, enclose the value.
//! `approx` entries denote the nearest binary64 number, so a candidate
//! written by the solver is read back bit for bit.
//! An optional `metadata` object is carried through unchanged.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CoeffFunction;
use crate::rigor::{Enclosure, Precision};
use crate::Error;

pub const FORMAT: &str = "nirenberg-coeffs/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMode {
    Approx,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Point(String),
    Pair([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffFile {
    pub format: String,
    pub max_degree: usize,
    pub mode: CoeffMode,
    coefficients: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl CoeffFile {
    /// Binary64 coefficients, written in shortest round-trip form.
    pub fn approx(u: &CoeffFunction<f64>) -> Self {
        CoeffFile {
            format: FORMAT.into(),
            max_degree: u.degree(),
            mode: CoeffMode::Approx,
            coefficients: u.coeffs().iter().map(|c| Entry::Point(format!("{c:e}"))).collect(),
            metadata: None,
        }
    }

    /// Interval coefficients with outward decimal endpoints.
    pub fn interval<S: Enclosure>(u: &CoeffFunction<S>) -> Self {
        CoeffFile {
            format: FORMAT.into(),
            max_degree: u.degree(),
            mode: CoeffMode::Interval,
            coefficients: u
                .coeffs()
                .iter()
                .map(|c| Entry::Pair([c.lo_decimal(), c.hi_decimal()]))
                .collect(),
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, meta: serde_json::Value) -> Self {
        self.metadata = Some(meta);
        self
    }

    fn check(&self) -> Result<(), Error> {
        if self.format != FORMAT {
            return Err(Error::Format(format!("unknown format '{}'", self.format)));
        }
        let want = super::coeff_count(self.max_degree);
        if self.coefficients.len() != want {
            return Err(Error::Format(format!(
                "{} coefficients for max_degree {} (expected {want})",
                self.coefficients.len(),
                self.max_degree
            )));
        }
        Ok(())
    }

    /// Enclosures of the stored coefficients.
    pub fn to_function<S: Enclosure>(&self, prec: Precision) -> Result<CoeffFunction<S>, Error> {
        self.check()?;
        let coeffs = self
            .coefficients
            .iter()
            .map(|e| match (e, self.mode) {
                (Entry::Point(s), CoeffMode::Approx) => s
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(|x| S::from_f64(x, prec))
                    .ok_or_else(|| crate::rigor::RigorError::Parse(s.clone())),
                (Entry::Pair([lo, hi]), CoeffMode::Interval) => S::from_decimal(lo, hi, prec),
                _ => Err(crate::rigor::RigorError::Parse(format!(
                    "entry {e:?} does not match mode {:?}",
                    self.mode
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        CoeffFunction::from_vec(self.max_degree, coeffs)
    }

    /// Binary64 coefficients (interval midpoints in interval mode).
    pub fn to_f64(&self) -> Result<CoeffFunction<f64>, Error> {
        let u = self.to_function::<crate::rigor::Interval>(Precision::DOUBLE)?;
        Ok(u.midpoints())
    }
}

pub fn read_coeffs(path: &Path) -> Result<CoeffFile, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_coeffs(path: &Path, file: &CoeffFile) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(file).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
