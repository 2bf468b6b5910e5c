use std::path::{Path, PathBuf};

use bats_core::model::CostWeights;
use bats_core::samples::standard_weights;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_CONFIG_FILE: &str = "bats.config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default = "default_profiles")]
    pub profiles: Vec<CostWeights>,
    #[serde(default = "default_profile_name")]
    pub default_profile: String,
    #[serde(default = "default_library_dir")]
    pub library_dir: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
}

fn default_profiles() -> Vec<CostWeights> {
    vec![standard_weights()]
}

fn default_profile_name() -> String {
    standard_weights().profile_name
}

fn default_library_dir() -> PathBuf {
    PathBuf::from("library")
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            profiles: default_profiles(),
            default_profile: default_profile_name(),
            library_dir: default_library_dir(),
            bind: default_bind(),
        }
    }
}

impl CliConfig {
    /// Reads `explicit` if given (flag or `BATS_CONFIG`), else
    /// `./bats.config.json` when present, else built-in defaults.
    /// A relative `library_dir` is resolved against the config file.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let p = PathBuf::from(DEFAULT_CONFIG_FILE);
                if !p.exists() {
                    return Ok(Self::default());
                }
                p
            }
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::usage("ConfigError", format!("{}: {e}", path.display())))?;
        let mut config: CliConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage("ConfigError", format!("{}: {e}", path.display())))?;
        if config.library_dir.is_relative() {
            if let Some(parent) = path.parent() {
                config.library_dir = parent.join(&config.library_dir);
            }
        }
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        let mut names: Vec<&str> = self.profiles.iter().map(|p| p.profile_name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::usage(
                "ConfigError",
                format!("profile '{}' is defined twice", w[0]),
            ));
        }
        if self.profile(&self.default_profile).is_none() {
            return Err(CliError::usage(
                "ConfigError",
                format!("default profile '{}' is not defined", self.default_profile),
            ));
        }
        Ok(())
    }

    pub fn profile(&self, name: &str) -> Option<&CostWeights> {
        self.profiles.iter().find(|p| p.profile_name == name)
    }

    /// The named profile, or the default one.
    pub fn weights(&self, name: Option<&str>) -> Result<CostWeights, CliError> {
        let name = name.unwrap_or(&self.default_profile);
        self.profile(name)
            .cloned()
            .ok_or_else(|| CliError::usage("UnknownProfile", format!("no cost profile '{name}'")))
    }
}
