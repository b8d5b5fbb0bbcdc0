//! JSON run configuration: the file mirror of the CLI flags.
//!
//! Precedence per field: explicit CLI flag, then config file, then (for
//! the seed only) the `CACHEMODES_SEED` environment variable, then the
//! built-in default. Unknown keys are rejected.

use serde::Deserialize;

/// Environment variable consulted as the lowest-priority seed source.
pub const SEED_ENV_VAR: &str = "CACHEMODES_SEED";

pub const DEFAULT_SEED: u64 = 42;

/// A run description as stored in a JSON config file. Every field is
/// optional here; completeness is checked after merging with the CLI.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub policy: Option<String>,
    pub n: Option<u64>,
    pub m: Option<u64>,
    pub gamma_r: Option<f64>,
    pub gamma_c: Option<f64>,
    pub engine: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub cap: Option<u64>,
    // sweep
    pub preset: Option<String>,
    pub param: Option<String>,
    pub values: Option<Vec<f64>>,
    // pmf
    pub mode: Option<String>,
    pub p: Option<f64>,
    // optimize
    pub metric: Option<String>,
    pub gamma_c_min: Option<f64>,
    pub gamma_c_max: Option<f64>,
    pub gamma_c_step: Option<f64>,
}

/// Parses a config file, reporting the position of JSON errors.
pub fn load_config(path: &str) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("{path}:{}:{}: {e}", e.line(), e.column()))
}

/// Seed from the environment, if set and well-formed.
pub fn seed_from_env() -> Result<Option<u64>, String> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV_VAR} must be a 64-bit unsigned integer, got `{text}`")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{SEED_ENV_VAR}: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"command": "analyze", "policy": "deterministic", "n": 10, "m": 50, "gamma_r": 0.8}"#,
        )
        .unwrap();
        let config = load_config(path.to_str().unwrap()).unwrap();
        assert_eq!(config.command.as_deref(), Some("analyze"));
        assert_eq!(config.n, Some(10));
        assert_eq!(config.seed, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"command": "analyze", "gamma_x": 1.0}"#).unwrap();
        let err = load_config(path.to_str().unwrap()).unwrap_err();
        assert!(err.contains("gamma_x"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, "{\n  \"command\": analyze\n}").unwrap();
        let err = load_config(path.to_str().unwrap()).unwrap_err();
        assert!(err.contains(":2:"), "{err}");
    }
}
