//! Run configuration, read from TOML. Command-line flags take precedence.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use qualgate_core::cutoff::CutoffOptions;
use qualgate_core::gating::PoolMode;
use qualgate_core::metrics::{MethodDescriptor, MethodRegistry};
use qualgate_core::selection::{BenchConfig, SelectionCriteria};
use serde::{Deserialize, Serialize};

use crate::fail::{CliError, CliResult};

pub const SEED_ENV: &str = "QUALGATE_SEED";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Default method list for score, bench and cutoff.
    pub methods: Vec<String>,
    /// Extra or replacement method descriptors.
    pub descriptors: Vec<MethodDescriptor>,
    pub bench: BenchConfig,
    pub selection: SelectionConfig,
    pub cutoff: CutoffOptions,
    pub gating: GatingConfig,
    pub paths: PathsConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    #[serde(flatten)]
    pub criteria: SelectionCriteria,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingConfig {
    pub percents: Vec<u32>,
    pub target_n: Option<usize>,
    pub pool_mode: PoolMode,
}

impl Default for GatingConfig {
    fn default() -> Self {
        Self {
            percents: vec![0, 10, 20, 30, 40, 50],
            target_n: None,
            pool_mode: PoolMode::Redraw,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub images: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub cutoffs: Option<PathBuf>,
    pub external: Vec<PathBuf>,
    pub brisque_model: Option<PathBuf>,
    pub niqe_model: Option<PathBuf>,
    pub niqe_pristine: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let cfg = cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Relative paths in a config file are taken relative to that file.
    fn resolve_paths(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        let p = &mut self.paths;
        for slot in [
            &mut p.images,
            &mut p.samples,
            &mut p.dataset,
            &mut p.scores,
            &mut p.predictions,
            &mut p.cutoffs,
            &mut p.brisque_model,
            &mut p.niqe_model,
            &mut p.niqe_pristine,
            &mut p.out_dir,
        ] {
            fix(slot);
        }
        for e in p.external.iter_mut() {
            if e.is_relative() {
                *e = base.join(&*e);
            }
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(m) {
                return Err(CliError::validation(format!("method `{m}` listed twice")));
            }
        }
        let registry = self.registry();
        for m in &self.methods {
            registry.get(m)?;
        }
        self.selection.criteria.validate()?;
        self.cutoff.validate()?;
        let p = &self.paths;
        for path in [
            &p.images,
            &p.samples,
            &p.dataset,
            &p.scores,
            &p.predictions,
            &p.cutoffs,
            &p.brisque_model,
            &p.niqe_model,
            &p.niqe_pristine,
        ]
        .into_iter()
        .flatten()
        .chain(&p.external)
        {
            if !path.exists() {
                return Err(CliError::validation(format!("configured path does not exist: {}", path.display())));
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> MethodRegistry {
        let mut r = MethodRegistry::default();
        for d in &self.descriptors {
            r.register(d.clone());
        }
        r
    }

    /// Flag, then config, then the environment, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> CliResult<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::validation(format!("{SEED_ENV} is not an unsigned integer: `{v}`"))),
            Err(_) => Ok(0),
        }
    }
}
