//! Experiment manifests. A TOML file supplies defaults that command-line
//! flags override; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dantzig_density::experiments::Comparison;
use dantzig_density::{DensityId, DictionaryKind, Method, SolverOptions};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub experiment: ExperimentSection,
    pub solver: Option<SolverOptions>,
    pub calibration: CalibrationSection,
    pub benchmark: BenchmarkSection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub density: Option<DensityId>,
    pub dictionary: Option<DictionaryKind>,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub method: Option<Method>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub gammas: Option<Vec<f64>>,
    pub resolutions: Option<Vec<u32>>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub densities: Option<Vec<DensityId>>,
    pub dictionaries: Option<Vec<DictionaryKind>>,
    pub comparisons: Option<Vec<Comparison>>,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub n: Option<usize>,
    pub s: Option<usize>,
    pub l: Option<usize>,
    pub budget: Option<u128>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let c: FileConfig = toml::from_str(
            r#"
            out_dir = "results"
            [experiment]
            density = "f3"
            dictionary = "mix2"
            method = "dantzig-ls"
            n = 500
            [solver]
            stall_window = 10
            [benchmark]
            comparisons = ["dantzig-vs-lasso"]
            "#,
        )
        .unwrap();
        assert_eq!(c.out_dir.as_deref(), Some(Path::new("results")));
        assert_eq!(c.experiment.density, Some(DensityId::F3));
        assert_eq!(c.experiment.method, Some(Method::DantzigLs));
        assert_eq!(c.solver.unwrap().stall_window, 10);
        assert_eq!(c.benchmark.comparisons, Some(vec![Comparison::DantzigVsLasso]));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
        assert!(toml::from_str::<FileConfig>("[experiment]\nsize = 3").is_err());
        assert!(toml::from_str::<FileConfig>("[solver]\nfoo = 3").is_err());
    }
}
