use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::evolution::EvolutionConfig;
use crate::llm::{ProviderConfig, ProviderKind};
use crate::problems::{BenchmarkSuite, SuiteSpec, TaskKind};

/// Contents of a run configuration file. Unknown keys are rejected at every
/// level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub suite: SuiteSpec,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    pub provider: ProviderConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl RunConfig {
    /// Reads and validates a config file. Relative paths inside it are made
    /// absolute against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let base = std::path::absolute(base).map_err(|e| CliError::Usage(e.to_string()))?;
        config.resolve_paths(&base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.output_dir);
        if let Some(t) = self.provider.transcript_path.as_mut() {
            abs(t);
        }
        for f in &mut self.suite.instance_files {
            abs(f);
        }
    }

    /// Checks every nested invariant. Never touches the network.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: String| CliError::ConfigInvalid(e);
        self.suite
            .validate(self.task)
            .map_err(|e| invalid(e.to_string()))?;
        self.evolution
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.provider
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn build_suite(&self) -> Result<BenchmarkSuite, CliError> {
        BenchmarkSuite::from_spec(self.task, &self.suite, Path::new("."))
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    pub fn is_scripted(&self) -> bool {
        self.provider.provider == ProviderKind::Scripted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, json: &str) -> PathBuf {
        let p = dir.join("config.json");
        std::fs::write(&p, json).unwrap();
        p
    }

    #[test]
    fn minimal_scripted_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"task": "obp", "suite": {"settings": ["1kC100"], "seeds": [1]},
                "provider": {"provider": "scripted", "transcript_path": "t.jsonl"}}"#,
        );
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.evolution, EvolutionConfig::default());
        assert_eq!(
            c.provider.transcript_path.unwrap(),
            std::path::absolute(dir.path().join("t.jsonl")).unwrap()
        );
        assert!(c.output_dir.is_absolute());
    }

    #[test]
    fn negative_lambda_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"task": "obp", "evolution": {"lambda": -1},
                "provider": {"provider": "scripted", "transcript_path": "t.jsonl"}}"#,
        );
        assert!(matches!(
            RunConfig::load(&p),
            Err(CliError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        for json in [
            r#"{"task": "obp", "lamda": 1, "provider": {"provider": "scripted", "transcript_path": "t"}}"#,
            r#"{"task": "obp", "evolution": {"lamda": 1}, "provider": {"provider": "scripted", "transcript_path": "t"}}"#,
            r#"{"task": "obp", "suite": {"size": [1]}, "provider": {"provider": "scripted", "transcript_path": "t"}}"#,
        ] {
            let p = write(dir.path(), json);
            assert!(
                matches!(RunConfig::load(&p), Err(CliError::ConfigInvalid(_))),
                "{json}"
            );
        }
    }
}
