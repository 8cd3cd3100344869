//! Golden values: frozen outputs of the shipped scenarios, stored with 12
//! significant digits and compared with a relative tolerance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// The golden file shipped with the crate.
pub const SHIPPED: &str = include_str!("../golden/golden.json");

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Golden {
    pub version: String,
    /// scenario name -> quantity -> value
    pub scenarios: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenCheck {
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap()
}

pub fn matches(expected: f64, actual: f64) -> bool {
    (expected - actual).abs() <= ABS_TOL + REL_TOL * expected.abs()
}

impl Golden {
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED).expect("shipped golden file parses")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Scenario(format!("golden file {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("golden serializes");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Compare `values` against the entries for `scenario`; quantities without a
    /// golden entry are skipped.
    pub fn check(&self, scenario: &str, values: &[(&str, f64)]) -> Vec<GoldenCheck> {
        let Some(table) = self.scenarios.get(scenario) else {
            return Vec::new();
        };
        values
            .iter()
            .filter_map(|(q, a)| {
                table.get(*q).map(|&e| GoldenCheck {
                    quantity: (*q).to_string(),
                    expected: e,
                    actual: *a,
                    pass: matches(e, *a),
                })
            })
            .collect()
    }

    pub fn record(&mut self, scenario: &str, values: &[(&str, f64)]) {
        let table = self.scenarios.entry(scenario.to_string()).or_default();
        for (q, v) in values {
            table.insert((*q).to_string(), round12(*v));
        }
    }
}
