//! Majority-vote acceptance and subset construction.

mod manifest;
mod subset;

pub use manifest::{PoolMode, Recipe, SubsetManifest};
pub use subset::{aggregate_quality, matched_random_subset, percent_removed_series, PercentSeriesOptions};

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{CutoffSet, CutoffSpec};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::ScoreTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vote {
    Good,
    Bad,
    Missing,
}

impl Vote {
    pub fn as_str(self) -> &'static str {
        match self {
            Vote::Good => "good",
            Vote::Bad => "bad",
            Vote::Missing => "missing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteDecision {
    pub image_id: String,
    pub per_method: BTreeMap<String, Vote>,
    pub accepted: bool,
}

impl VoteDecision {
    pub fn good_count(&self) -> usize {
        self.per_method.values().filter(|v| **v == Vote::Good).count()
    }
}

/// Strict majority of `k` voters.
pub fn required_votes(k: usize) -> usize {
    k / 2 + 1
}

/// Majority vote over `cutoffs`. A score exactly at a threshold is good;
/// a missing or non-finite score is a bad vote.
pub fn vote(image_id: &str, scores: &BTreeMap<String, f64>, cutoffs: &[CutoffSpec]) -> Result<VoteDecision> {
    vote_with(image_id, |m| scores.get(m).copied(), cutoffs)
}

fn vote_with(
    image_id: &str,
    score_of: impl Fn(&str) -> Option<f64>,
    cutoffs: &[CutoffSpec],
) -> Result<VoteDecision> {
    if cutoffs.is_empty() {
        return Err(Error::NoVoters);
    }
    let per_method: BTreeMap<String, Vote> = cutoffs
        .iter()
        .map(|c| {
            let v = match score_of(&c.method_id).filter(|s| s.is_finite()) {
                None => Vote::Missing,
                Some(s) if c.accepts(s) => Vote::Good,
                Some(_) => Vote::Bad,
            };
            (c.method_id.clone(), v)
        })
        .collect();
    let good = per_method.values().filter(|v| **v == Vote::Good).count();
    Ok(VoteDecision {
        image_id: image_id.to_string(),
        accepted: good >= required_votes(cutoffs.len()),
        per_method,
    })
}

/// Votes on every dataset image. The manifest lists accepted images in
/// dataset order and keeps every decision.
pub fn filter_dataset(
    name: &str,
    source_dataset: &str,
    dataset: &DatasetManifest,
    scores: &ScoreTable,
    cutoffs: &CutoffSet,
) -> Result<SubsetManifest> {
    let decisions: Vec<VoteDecision> = dataset
        .entries
        .par_iter()
        .map(|e| vote_with(&e.image_id, |m| scores.raw(&e.image_id, m), &cutoffs.cutoffs))
        .collect::<Result<_>>()?;
    let missing = decisions
        .iter()
        .flat_map(|d| d.per_method.values())
        .filter(|v| **v == Vote::Missing)
        .count();
    if missing > 0 {
        warn!("{missing} missing scores counted as bad votes");
    }
    let image_ids: Vec<String> = decisions
        .iter()
        .filter(|d| d.accepted)
        .map(|d| d.image_id.clone())
        .collect();
    if image_ids.is_empty() {
        warn!("empty subset: no image accepted");
    }
    Ok(SubsetManifest {
        name: name.to_string(),
        source_dataset: source_dataset.to_string(),
        recipe: Recipe::HighQuality {
            methods: cutoffs.cutoffs.iter().map(|c| c.method_id.clone()).collect(),
        },
        image_ids,
        removed_ids: Vec::new(),
        decisions,
    })
}
