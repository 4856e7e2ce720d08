//! Optional TOML configuration file. Keys mirror the long flag names with
//! underscores; any flag given on the command line wins.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub delimiter: Option<String>,
    pub testpercent: Option<f64>,
    pub nclusters: Option<usize>,
    pub nfolds: Option<usize>,
    pub strategy: Option<String>,
    pub seed: Option<u64>,
    pub cols: Option<Vec<String>>,
    pub exclude_cols: Option<Vec<String>>,
    pub patient_id: Option<String>,
    pub label_column: Option<String>,
    pub site_column: Option<String>,
    pub thumbnail_column: Option<String>,
    pub embed: Option<String>,
    pub permutations: Option<usize>,
    pub outdir: Option<PathBuf>,
    pub per_image: Option<bool>,
    pub impute: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {}", path.display(), e.message()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c: FileConfig = toml::from_str(
            r#"
            input = "m.tsv"
            testpercent = 0.25
            cols = ["a", "b"]
            strategy = "worstcase"
            "#,
        )
        .unwrap();
        assert_eq!(c.input, Some(PathBuf::from("m.tsv")));
        assert_eq!(c.testpercent, Some(0.25));
        assert_eq!(c.cols, Some(vec!["a".into(), "b".into()]));
        assert_eq!(c.strategy.as_deref(), Some("worstcase"));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("tset_ratio = 0.2").is_err());
    }
}
