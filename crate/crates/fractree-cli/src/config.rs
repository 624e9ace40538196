//! Run configuration: a single JSON document holding the structure
//! parameters. Angles are degrees at this interface, radians internally.

use std::path::Path;

use fractree::TreeParams;
use serde::Deserialize;

/// On-disk parameter document.
///
/// ```json
/// {"theta_deg": 60, "E": 1e10, "G": 5e8, "L": 0.5, "I": 3.1416e-4,
///  "A": 3.1416e-2, "A_star": 2.8274e-2, "a": 9, "u": 3, "v": 3, "P": 8}
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub theta_deg: f64,
    #[serde(rename = "E")]
    pub young_modulus: f64,
    #[serde(rename = "G")]
    pub shear_modulus: f64,
    #[serde(rename = "L")]
    pub base_length: f64,
    #[serde(rename = "I")]
    pub base_inertia: f64,
    #[serde(rename = "A")]
    pub base_area: f64,
    #[serde(rename = "A_star")]
    pub base_shear_area: f64,
    pub a: f64,
    pub u: f64,
    pub v: f64,
    #[serde(rename = "P")]
    pub levels: u32,
}

impl ConfigFile {
    pub fn into_params(self) -> Result<TreeParams, String> {
        TreeParams {
            angle: self.theta_deg.to_radians(),
            young_modulus: self.young_modulus,
            shear_modulus: self.shear_modulus,
            base_length: self.base_length,
            base_inertia: self.base_inertia,
            base_area: self.base_area,
            base_shear_area: self.base_shear_area,
            inertia_ratio: self.a,
            area_ratio: self.u,
            shear_area_ratio: self.v,
            levels: self.levels,
        }
        .validate()
        .map_err(|e| e.to_string())
    }
}

pub fn load_params(path: &Path) -> Result<TreeParams, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    config.into_params()
}
