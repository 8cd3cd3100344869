//! Scenario files.
//!
//! ```json
//! {
//!   "name": "tanh_thm2",
//!   "cross_section": { "kind": "circle" },
//!   "profile": { "kind": "tanh", "beta1": 1.0, "beta2": 0.0, "width": 1.0 },
//!   "resolution": { "n_t": 128, "n_x": 399, "L_list": [20.0, 40.0, 80.0] },
//!   "outputs": "out/tanh_thm2"
//! }
//! ```
//!
//! Every `resolution` key is optional. Unknown keys anywhere are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use waveguide_core::geometry::{
    make_circle_cross_section, make_tangent_angle_cross_section, CrossSection, ReferenceProfile, SlopeTable,
    SmoothProfile,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub cross_section: CrossSectionSpec,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub resolution: Resolution,
    pub outputs: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossSectionSpec {
    Circle {},
    /// `theta(t) = 2 pi t + sum a_k cos(2 pi k t) + b_k sin(2 pi k t)`; the first
    /// pair is adjusted to close the curve.
    TangentAngle {
        coefficients: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Flat {},
    ConstantSlope {
        beta1: f64,
        beta2: f64,
    },
    Tanh {
        beta1: f64,
        beta2: f64,
        width: f64,
    },
    BalancedBumps {
        beta1: f64,
        beta2: f64,
        amp1: f64,
        amp2: f64,
        width: f64,
    },
    Broken {
        beta: f64,
    },
    /// Rows of `(x, f', g', f'', g'')`, ascending in `x`.
    Table {
        rows: Vec<(f64, f64, f64, f64, f64)>,
    },
}

fn d_n_t() -> usize {
    128
}
fn d_n_x() -> usize {
    399
}
fn d_l_list() -> Vec<f64> {
    vec![20.0, 40.0, 80.0]
}
fn d_transverse_n() -> usize {
    1024
}
fn d_band_n() -> usize {
    512
}
fn d_potential_n_t() -> usize {
    512
}
fn d_x_extent() -> f64 {
    20.0
}
fn d_x_step() -> f64 {
    0.05
}
fn d_cert_hx() -> f64 {
    0.1
}
fn d_n_schedule() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
}
fn d_thm3_n() -> f64 {
    16.0
}
fn d_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    /// `t`-grid of the 2D solve and the certificates.
    #[serde(default = "d_n_t")]
    pub n_t: usize,
    /// `x`-nodes of the 2D solve (odd).
    #[serde(default = "d_n_x")]
    pub n_x: usize,
    #[serde(default = "d_l_list", rename = "L_list")]
    pub l_list: Vec<f64>,
    /// Grid of the threshold solve.
    #[serde(default = "d_transverse_n")]
    pub transverse_n: usize,
    /// Grid of the fiber band sweep.
    #[serde(default = "d_band_n")]
    pub band_n: usize,
    /// Transverse grid behind the potential.
    #[serde(default = "d_potential_n_t")]
    pub potential_n_t: usize,
    /// The potential is tabulated on `[-x_extent, x_extent]`.
    #[serde(default = "d_x_extent")]
    pub x_extent: f64,
    #[serde(default = "d_x_step")]
    pub x_step: f64,
    #[serde(default = "d_cert_hx")]
    pub cert_hx: f64,
    #[serde(default = "d_n_schedule")]
    pub n_schedule: Vec<f64>,
    #[serde(default = "d_thm3_n")]
    pub thm3_n: f64,
    /// Eigenvalues requested per solve and bands per fiber.
    #[serde(default = "d_k")]
    pub k: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            n_t: d_n_t(),
            n_x: d_n_x(),
            l_list: d_l_list(),
            transverse_n: d_transverse_n(),
            band_n: d_band_n(),
            potential_n_t: d_potential_n_t(),
            x_extent: d_x_extent(),
            x_step: d_x_step(),
            cert_hx: d_cert_hx(),
            n_schedule: d_n_schedule(),
            thm3_n: d_thm3_n(),
            k: d_k(),
        }
    }
}

impl Resolution {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Scenario(m));
        if !self.n_t.is_multiple_of(4) || !(64..=4096).contains(&self.n_t) {
            return bad(format!("n_t must be a multiple of 4 in [64, 4096], got {}", self.n_t));
        }
        if self.n_x % 4 != 3 || !(67..=8191).contains(&self.n_x) {
            return bad(format!(
                "n_x must be 3 mod 4 in [67, 8191] so that the coarse grid is odd too, got {}",
                self.n_x
            ));
        }
        if self.l_list.is_empty() || self.l_list.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("L_list must be nonempty and positive".into());
        }
        if self.l_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("L_list must be strictly ascending".into());
        }
        for (name, n) in [
            ("transverse_n", self.transverse_n),
            ("band_n", self.band_n),
            ("potential_n_t", self.potential_n_t),
        ] {
            if n % 4 != 0 || !(64..=8192).contains(&n) {
                return bad(format!("{name} must be a multiple of 4 in [64, 8192], got {n}"));
            }
        }
        if !(self.x_extent > 0.0 && self.x_step > 0.0 && self.x_step < self.x_extent) {
            return bad("x_extent and x_step must be positive with x_step < x_extent".into());
        }
        if !(self.cert_hx > 0.0 && self.cert_hx <= 1.0) {
            return bad(format!("cert_hx must be in (0, 1], got {}", self.cert_hx));
        }
        if self.n_schedule.is_empty() || self.n_schedule.iter().any(|n| !(*n >= 1.0 && *n <= 256.0)) {
            return bad("n_schedule entries must lie in [1, 256]".into());
        }
        if !(self.thm3_n >= 1.0 && self.thm3_n <= 256.0) {
            return bad("thm3_n must lie in [1, 256]".into());
        }
        if !(1..=20).contains(&self.k) {
            return bad(format!("k must be in [1, 20], got {}", self.k));
        }
        Ok(())
    }

    /// Coarse partner of the 2D grid: `hx` doubled and `n_t` halved.
    pub fn coarse_grid(&self) -> (usize, usize) {
        (self.n_x.div_ceil(2) - 1, self.n_t / 2)
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Scenario(e.to_string()))?;
        s.resolution.validate()?;
        Ok(s)
    }

    /// SHA-256 of the canonical JSON of the scenario after overrides.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn cross_section(&self) -> Result<CrossSection, CliError> {
        let n = self.resolution.transverse_n.max(1024);
        Ok(match &self.cross_section {
            CrossSectionSpec::Circle {} => make_circle_cross_section(n)?,
            CrossSectionSpec::TangentAngle { coefficients } => make_tangent_angle_cross_section(coefficients, n)?,
        })
    }

    pub fn profile(&self) -> Result<ReferenceProfile, CliError> {
        let p = match &self.profile {
            ProfileSpec::Flat {} => ReferenceProfile::flat(),
            ProfileSpec::ConstantSlope { beta1, beta2 } => ReferenceProfile::constant_slope(*beta1, *beta2),
            ProfileSpec::Tanh { beta1, beta2, width } => ReferenceProfile::tanh(*beta1, *beta2, *width),
            ProfileSpec::BalancedBumps {
                beta1,
                beta2,
                amp1,
                amp2,
                width,
            } => ReferenceProfile::Smooth(SmoothProfile::BalancedBumps {
                beta1: *beta1,
                beta2: *beta2,
                amp1: *amp1,
                amp2: *amp2,
                width: *width,
            }),
            ProfileSpec::Broken { beta } => ReferenceProfile::broken(*beta),
            ProfileSpec::Table { rows } => {
                let col = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
                ReferenceProfile::Smooth(SmoothProfile::Table(SlopeTable::new(
                    col(|r| r.0),
                    col(|r| r.1),
                    col(|r| r.2),
                    col(|r| r.3),
                    col(|r| r.4),
                )?))
            }
        };
        p.validate()?;
        Ok(p)
    }
}
