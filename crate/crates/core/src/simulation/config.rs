use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiments::{PlugInRange, TABLE1_CELLS, TABLE2_SHAPES, TABLE3_NS, TABLE3_PHI_STARS};
use crate::error::{invalid, Error, Result};

/// Experiment settings read from a TOML file. Top-level keys apply to every
/// table; `[table1]`, `[table2]`, `[table3]` and `[analysis]` refine them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub reps: usize,
    pub alpha: f64,
    pub table1: Table1Config,
    pub table2: Table2Config,
    pub table3: Table3Config,
    pub analysis: AnalysisConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            reps: 2000,
            alpha: 0.05,
            table1: Table1Config::default(),
            table2: Table2Config::default(),
            table3: Table3Config::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Config {
    /// Beta(shape, shape) outcomes.
    pub shape: f64,
    pub c_star: f64,
    /// `[n, phi]` pairs.
    pub cells: Vec<(usize, f64)>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            shape: 10.0,
            c_star: 10.0,
            cells: TABLE1_CELLS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table2Config {
    pub n: usize,
    pub phi: f64,
    pub c_star: f64,
    pub shapes: Vec<f64>,
}

impl Default for Table2Config {
    fn default() -> Self {
        Self {
            n: 500,
            phi: 0.1,
            c_star: 10.0,
            shapes: TABLE2_SHAPES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table3Config {
    pub c_star: f64,
    pub plug_in: PlugInRange,
    pub ns: Vec<usize>,
    pub phi_stars: Vec<f64>,
}

impl Default for Table3Config {
    fn default() -> Self {
        Self {
            c_star: 5.0,
            plug_in: PlugInRange::default(),
            ns: TABLE3_NS.to_vec(),
            phi_stars: TABLE3_PHI_STARS.to_vec(),
        }
    }
}

impl Table3Config {
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.ns
            .iter()
            .flat_map(|&n| self.phi_stars.iter().map(move |&p| (n, p)))
            .collect()
    }
}

/// Defaults for the applied analysis commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub response: Option<String>,
    pub covariates: Vec<String>,
    pub histogram_bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            response: None,
            covariates: Vec::new(),
            histogram_bins: 30,
        }
    }
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(invalid("reps must be >= 1"));
        }
        for a in [self.alpha, self.analysis.alpha] {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(format!("alpha must lie in (0, 1), got {a}")));
            }
        }
        for c in [self.table1.c_star, self.table2.c_star, self.table3.c_star] {
            if !(c > 0.0) {
                return Err(invalid(format!("c_star must be > 0, got {c}")));
            }
        }
        let check_phi = |n: usize, phi: f64| -> Result<()> {
            if n < 2 {
                return Err(invalid(format!("n must be >= 2, got {n}")));
            }
            let floor = -1.0 / (n - 1) as f64;
            if !(phi > floor && phi <= 1.0) {
                return Err(invalid(format!("phi = {phi} is not a valid exchangeable correlation for n = {n}")));
            }
            Ok(())
        };
        for &(n, phi) in &self.table1.cells {
            check_phi(n, phi)?;
        }
        check_phi(self.table2.n, self.table2.phi)?;
        if self.table3.ns.iter().any(|&n| n < 3) {
            return Err(invalid("regression cells need n >= 3"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_sections() {
        let cfg = SimulationConfig::from_toml_str(
            "seed = 7\nreps = 50\n\n[table2]\nphi = 0.2\nshapes = [10, 25]\n\n[table3]\nns = [100]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.reps, 50);
        assert_eq!(cfg.table2.shapes, vec![10.0, 25.0]);
        assert_eq!(cfg.table2.n, 500);
        assert_eq!(cfg.table3.cells().len(), 4);
        assert_eq!(cfg.table1.cells.len(), 12);
    }

    #[test]
    fn round_trip() {
        let cfg = SimulationConfig::default();
        assert_eq!(SimulationConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SimulationConfig::from_toml_str("reps = 0").is_err());
        assert!(SimulationConfig::from_toml_str("typo = 1").is_err());
        assert!(SimulationConfig::from_toml_str("[table1]\ncells = [[100, -0.5]]").is_err());
    }
}
