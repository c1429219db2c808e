//! Versioned JSON run configuration: the plant graph, scenario, solver and
//! homotopy settings, and verification horizon.

use serde::{Deserialize, Serialize};

use crate::boundary::Scenario;
use crate::plant::PlantGraph;
use crate::solver::{HomotopySchedule, SolverConfig};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySettings {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            horizon: 10.0,
            dt: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub schedule: HomotopySchedule,
    #[serde(default)]
    pub verify: VerifySettings,
    pub plant: PlantGraph,
}

impl RunConfig {
    pub fn demo() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            scenario: Scenario::SteadyStateOnDesign,
            solver: SolverConfig::default(),
            schedule: HomotopySchedule::default(),
            verify: VerifySettings::default(),
            plant: crate::plant::demo::build_demo_plant(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, String> {
        let config: RunConfig =
            serde_json::from_str(json).map_err(|e| format!("malformed configuration: {e}"))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema version {} (this build reads {})",
                config.schema_version, CONFIG_SCHEMA_VERSION
            ));
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_round_trips() {
        let config = RunConfig::demo();
        let json = config.to_json();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(back.plant.components.len(), config.plant.components.len());
        assert_eq!(back.plant.connections.len(), config.plant.connections.len());
        assert_eq!(back.to_json(), json, "serialization is stable");
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let mut config = RunConfig::demo();
        config.schema_version = 99;
        let json = config.to_json();
        assert!(RunConfig::from_json(&json).is_err());
    }
}
