use std::path::{Path, PathBuf};

use s2p_core::abstraction::{AbstractionConfig, GoalSpec};
use s2p_core::discovery::{CollectConfig, DiscoveryConfig};
use s2p_core::env::{load_map, reference_map, TileMap};
use s2p_core::exec::ExecConfig;
use s2p_core::planner::PlannerConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    /// Relative paths resolve against the config file's directory. Without a
    /// path the bundled reference layout is used.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    /// Sampled policy rollouts behind the success estimate.
    pub rollouts: usize,
    pub max_length: usize,
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection {
            rollouts: 1000,
            max_length: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ExecuteSection {
    pub runs: usize,
    pub success_threshold: f64,
    #[serde(flatten)]
    pub exec: ExecConfig,
}

impl Default for ExecuteSection {
    fn default() -> Self {
        ExecuteSection {
            runs: 100,
            success_threshold: 0.95,
            exec: ExecConfig::default(),
        }
    }
}

/// Parsed configuration file. The top-level seed drives every stage.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub goal: Vec<String>,
    pub map: MapSection,
    pub discovery: DiscoveryConfig,
    pub collect: CollectConfig,
    pub abstraction: AbstractionConfig,
    pub planner: PlannerConfig,
    pub plan: PlanSection,
    pub execute: ExecuteSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 7,
            goal: vec!["treasure_held=1".into(), "agent_y=start".into()],
            map: MapSection::default(),
            discovery: DiscoveryConfig::default(),
            collect: CollectConfig::default(),
            abstraction: AbstractionConfig::default(),
            planner: PlannerConfig::default(),
            plan: PlanSection::default(),
            execute: ExecuteSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.goal_specs()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn goal_specs(&self) -> Result<Vec<GoalSpec>, CliError> {
        self.goal.iter().map(|g| g.parse().map_err(CliError::Config)).collect()
    }

    pub fn map_path(&self) -> Option<PathBuf> {
        self.map.path.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn load_map(&self) -> Result<TileMap, CliError> {
        match self.map_path() {
            None => Ok(reference_map()),
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| CliError::Io(p.clone(), e))?;
                load_map(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn discovery(&self) -> DiscoveryConfig {
        DiscoveryConfig {
            seed: self.seed,
            ..self.discovery
        }
    }

    pub fn collect(&self) -> CollectConfig {
        CollectConfig {
            seed: self.seed,
            ..self.collect
        }
    }

    pub fn abstraction(&self) -> AbstractionConfig {
        AbstractionConfig {
            seed: self.seed,
            ..self.abstraction.clone()
        }
    }

    pub fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            seed: self.seed,
            ..self.planner.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_fill_defaults() {
        let cfg: Config = toml::from_str("seed = 3\n[abstraction]\neps = 0.02\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.abstraction.eps, 0.02);
        assert_eq!(cfg.abstraction.min_samples, AbstractionConfig::default().min_samples);
        assert_eq!(cfg.execute.runs, 100);
        assert_eq!(cfg.abstraction().seed, 3);
    }

    #[test]
    fn unknown_top_level_keys_are_rejected() {
        assert!(toml::from_str::<Config>("sede = 3\n").is_err());
    }

    #[test]
    fn execute_section_reaches_exec_config() {
        let cfg: Config = toml::from_str("[execute]\nretry_budget = 1\nruns = 5\n").unwrap();
        assert_eq!(cfg.execute.exec.retry_budget, 1);
        assert_eq!(cfg.execute.runs, 5);
    }
}
