//! Config files: one TOML section per subcommand, overridden by explicit flags.

use std::collections::BTreeMap;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Top-level layout of a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub discrepancy: Option<toml::Table>,
    pub lattice: Option<toml::Table>,
    pub cell: Option<toml::Table>,
    pub sweep: Option<toml::Table>,
    pub beta0: Option<toml::Table>,
    pub epsilon: Option<toml::Table>,
    pub verify: Option<toml::Table>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn section(&self, name: &str) -> Option<&toml::Table> {
        match name {
            "discrepancy" => self.discrepancy.as_ref(),
            "lattice" => self.lattice.as_ref(),
            "cell" => self.cell.as_ref(),
            "sweep" => self.sweep.as_ref(),
            "beta0" => self.beta0.as_ref(),
            "epsilon" => self.epsilon.as_ref(),
            "verify" => self.verify.as_ref(),
            _ => None,
        }
    }
}

/// Flags that are not experiment parameters.
const GLOBAL: [&str; 5] = ["jobs", "out", "config", "help", "version"];

/// Fills every argument not given on the command line from `section`,
/// rejecting keys that name no argument of `command`.
pub fn merge<T: Serialize + DeserializeOwned>(
    parsed: T,
    command: &Command,
    matches: &ArgMatches,
    section: Option<&toml::Table>,
) -> Result<T, CliError> {
    let Some(section) = section else {
        return Ok(parsed);
    };
    let known: Vec<&str> = command
        .get_arguments()
        .map(|a| a.get_id().as_str())
        .filter(|id| !GLOBAL.contains(id))
        .collect();
    if let Some(key) = section.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(CliError::Validation(format!(
            "unknown key {key:?} in [{}]; expected one of {}",
            command.get_name(),
            known.join(", ")
        )));
    }
    let base = toml::Table::try_from(&parsed).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut merged: BTreeMap<String, toml::Value> = base.into_iter().collect();
    for (key, value) in section {
        let from_flag = matches.ids().any(|id| {
            id.as_str() == key && matches.value_source(key) == Some(ValueSource::CommandLine)
        });
        if !from_flag {
            merged.insert(key.clone(), value.clone());
        }
    }
    let table: toml::Table = merged.into_iter().collect();
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {}", e.message())))
}
