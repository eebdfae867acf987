use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{filter_dataset, subset, Vote, VoteDecision};
use crate::cutoff::CutoffSet;
use crate::dataset::DatasetManifest;
use crate::error::Result;
use crate::metrics::{MethodRegistry, ScoreTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// Each percentage draws its own pool, sized for that percentage.
    #[default]
    Redraw,
    /// One pool, sized for the largest percentage, shared by all.
    Shared,
}

/// Everything needed to rebuild a manifest from the same inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    HighQuality {
        methods: Vec<String>,
    },
    MatchedRandom {
        n: usize,
        seed: u64,
    },
    PercentRemoved {
        percent: u32,
        target_n: usize,
        seed: u64,
        methods: Vec<String>,
        pool_mode: PoolMode,
        pool_size: usize,
    },
}

impl Recipe {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Recipe::HighQuality { .. } => None,
            Recipe::MatchedRandom { seed, .. } | Recipe::PercentRemoved { seed, .. } => Some(*seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetManifest {
    pub name: String,
    pub source_dataset: String,
    pub recipe: Recipe,
    /// Selected images in dataset order.
    pub image_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<VoteDecision>,
}

impl SubsetManifest {
    pub fn acceptance_rate(&self) -> f64 {
        if self.decisions.is_empty() {
            return f64::NAN;
        }
        self.image_ids.len() as f64 / self.decisions.len() as f64
    }

    /// Bad plus missing votes per method.
    pub fn veto_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for d in &self.decisions {
            for (m, v) in &d.per_method {
                *out.entry(m.clone()).or_insert(0) += usize::from(*v != Vote::Good);
            }
        }
        out
    }

    pub fn rejected_count(&self) -> usize {
        self.decisions.iter().filter(|d| !d.accepted).count()
    }

    /// `image_id,accepted,<method votes>`; one row per decision, or one per
    /// selected image when the manifest has no votes.
    pub fn to_csv_string(&self) -> String {
        let methods: Vec<&String> = self
            .decisions
            .first()
            .map(|d| d.per_method.keys().collect())
            .unwrap_or_default();
        let mut out = String::from("image_id,accepted");
        for m in &methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        if self.decisions.is_empty() {
            for id in &self.image_ids {
                out.push_str(&format!("{id},true\n"));
            }
        } else {
            for d in &self.decisions {
                out.push_str(&format!("{},{}", d.image_id, d.accepted));
                for m in &methods {
                    out.push(',');
                    out.push_str(d.per_method.get(*m).map_or("missing", |v| v.as_str()));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        crate::io::ensure_dir(dir)?;
        let csv = dir.join(format!("{}.csv", self.name));
        let json = dir.join(format!("{}.json", self.name));
        crate::io::atomic_write(&csv, self.to_csv_string().as_bytes())?;
        crate::io::atomic_write(&json, self.to_json_string()?.as_bytes())?;
        Ok((csv, json))
    }

    pub fn read(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    /// Rebuilds the manifest from its recipe and the original inputs.
    pub fn regenerate(
        &self,
        dataset: &DatasetManifest,
        scores: &ScoreTable,
        cutoffs: &CutoffSet,
        registry: &MethodRegistry,
    ) -> Result<SubsetManifest> {
        match &self.recipe {
            Recipe::HighQuality { methods } => {
                let voting = CutoffSet {
                    cutoffs: methods
                        .iter()
                        .filter_map(|m| cutoffs.get(m).cloned())
                        .collect(),
                };
                filter_dataset(&self.name, &self.source_dataset, dataset, scores, &voting)
            }
            Recipe::MatchedRandom { n, seed } => {
                let mut m = subset::matched_random_subset(&self.source_dataset, dataset, *n, *seed)?;
                m.name = self.name.clone();
                Ok(m)
            }
            Recipe::PercentRemoved {
                percent,
                target_n,
                seed,
                methods,
                pool_mode,
                pool_size,
            } => {
                let ids: Vec<&str> = methods.iter().map(String::as_str).collect();
                let agg = subset::aggregate_quality(dataset, scores, registry, &ids)?;
                let mut m = subset::percent_subset(
                    &self.source_dataset,
                    dataset,
                    &agg,
                    methods,
                    *percent,
                    *target_n,
                    *seed,
                    *pool_mode,
                    *pool_size,
                )?;
                m.name = self.name.clone();
                Ok(m)
            }
        }
    }
}
