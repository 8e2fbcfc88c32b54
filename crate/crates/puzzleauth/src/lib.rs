//! Std companion to `puzzleauth-core`: scenario, credentials and proof-script
//! files, and the command-line driver behind the `puzzleauth` binary.

use std::fs;
use std::path::{Path, PathBuf};

use puzzleauth_core::svo::{parse_script, ProofScript, ScriptError};

pub mod cli;
pub mod credentials;
pub mod scenario;

pub use credentials::{load_credentials, save_credentials, CredentialsError};
pub use scenario::{load_scenario, Scenario, ScenarioError, ScenarioErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Scenario {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error("{}: {source}", path.display())]
    Credentials {
        path: PathBuf,
        #[source]
        source: CredentialsError,
    },
    #[error("{}: {source}", path.display())]
    Script {
        path: PathBuf,
        #[source]
        source: ScriptError,
    },
}

pub(crate) fn read_text(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads and parses a proof script.
pub fn load_script(path: &Path) -> Result<ProofScript, LoadError> {
    parse_script(&read_text(path)?).map_err(|source| LoadError::Script {
        path: path.to_owned(),
        source,
    })
}
