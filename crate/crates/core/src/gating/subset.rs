use log::debug;
use serde::{Deserialize, Serialize};

use super::{PoolMode, Recipe, SubsetManifest};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::{MethodRegistry, Polarity, ScoreTable};
use crate::rng::SeededRng;
use crate::stats::MinMax;

/// Uniform sample of `n` images without replacement: the first `n` indices
/// of a seeded partial Fisher-Yates shuffle on stream 0, output in dataset
/// order.
pub fn matched_random_subset(
    source_dataset: &str,
    dataset: &DatasetManifest,
    n: usize,
    seed: u64,
) -> Result<SubsetManifest> {
    if n > dataset.len() {
        return Err(Error::InvalidParam(format!(
            "subset size {n} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut idx = SeededRng::new(seed, 0).sample_indices(dataset.len(), n);
    idx.sort_unstable();
    Ok(SubsetManifest {
        name: format!("matched_random_n{n}_seed{seed}"),
        source_dataset: source_dataset.to_string(),
        recipe: Recipe::MatchedRandom { n, seed },
        image_ids: idx.iter().map(|&i| dataset.entries[i].image_id.clone()).collect(),
        removed_ids: Vec::new(),
        decisions: Vec::new(),
    })
}

/// Per-image mean of min-max normalized, polarity-oriented scores (higher
/// is better), in dataset order. Every image needs every method's score.
pub fn aggregate_quality(
    dataset: &DatasetManifest,
    scores: &ScoreTable,
    registry: &MethodRegistry,
    methods: &[&str],
) -> Result<Vec<f64>> {
    if methods.is_empty() {
        return Err(Error::InvalidParam("aggregate quality needs at least one method".into()));
    }
    let mut agg = vec![0.0; dataset.len()];
    for &m in methods {
        let desc = registry.get(m)?;
        let raw: Vec<f64> = dataset
            .entries
            .iter()
            .map(|e| {
                scores.raw(&e.image_id, m).ok_or_else(|| Error::MissingScore {
                    image_id: e.image_id.clone(),
                    method: m.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        let range = MinMax::of(&raw).map_err(|e| Error::DegenerateSeries(format!("{m}: {e}")))?;
        for (a, v) in agg.iter_mut().zip(&raw) {
            let n = range.apply(*v);
            *a += match desc.polarity {
                Polarity::HigherBetter => n,
                Polarity::LowerBetter => 1.0 - n,
            };
        }
    }
    let k = methods.len() as f64;
    Ok(agg.into_iter().map(|a| a / k).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PercentSeriesOptions {
    pub percents: Vec<u32>,
    pub target_n: usize,
    pub seed: u64,
    pub pool_mode: PoolMode,
    /// Manifest name prefix; each entry is `<prefix>_p<percent>`.
    pub name_prefix: String,
}

impl Default for PercentSeriesOptions {
    fn default() -> Self {
        Self {
            percents: vec![0, 10, 20, 30, 40, 50],
            target_n: 0,
            seed: 0,
            pool_mode: PoolMode::Redraw,
            name_prefix: "removed".into(),
        }
    }
}

/// `ceil(target_n * 100 / (100 - percent))`.
pub fn pool_size(target_n: usize, percent: u32) -> usize {
    let keep = 100 - percent as usize;
    (target_n * 100).div_ceil(keep)
}

/// One manifest per percentage. Each draws a seeded pool (a prefix of the
/// stream-0 shuffle), removes the lowest `floor(pool * p / 100)` images by
/// aggregate quality (ties by image id), then trims uniformly to `target_n`
/// on stream `1 + p`.
pub fn percent_removed_series(
    source_dataset: &str,
    dataset: &DatasetManifest,
    scores: &ScoreTable,
    registry: &MethodRegistry,
    methods: &[&str],
    opts: &PercentSeriesOptions,
) -> Result<Vec<SubsetManifest>> {
    if opts.percents.is_empty() {
        return Err(Error::InvalidParam("no percentages given".into()));
    }
    if let Some(p) = opts.percents.iter().find(|&&p| p >= 100) {
        return Err(Error::InvalidParam(format!("percent must be < 100, got {p}")));
    }
    let max_p = *opts.percents.iter().max().expect("non-empty");
    if opts.target_n == 0 || opts.target_n * 100 > (100 - max_p as usize) * dataset.len() {
        return Err(Error::InvalidParam(format!(
            "target_n {} infeasible: need 0 < target_n <= {}% of {} images",
            opts.target_n,
            100 - max_p,
            dataset.len()
        )));
    }
    let agg = aggregate_quality(dataset, scores, registry, methods)?;
    let owned: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    let shared = pool_size(opts.target_n, max_p);
    opts.percents
        .iter()
        .map(|&p| {
            let pool = match opts.pool_mode {
                PoolMode::Redraw => pool_size(opts.target_n, p),
                PoolMode::Shared => shared,
            };
            let mut m = percent_subset(
                source_dataset,
                dataset,
                &agg,
                &owned,
                p,
                opts.target_n,
                opts.seed,
                opts.pool_mode,
                pool,
            )?;
            m.name = format!("{}_p{p:02}", opts.name_prefix);
            Ok(m)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub(super) fn percent_subset(
    source_dataset: &str,
    dataset: &DatasetManifest,
    agg: &[f64],
    methods: &[String],
    percent: u32,
    target_n: usize,
    seed: u64,
    pool_mode: PoolMode,
    pool: usize,
) -> Result<SubsetManifest> {
    if pool > dataset.len() || percent >= 100 {
        return Err(Error::InvalidParam(format!(
            "pool of {pool} at {percent}% does not fit {} images",
            dataset.len()
        )));
    }
    let mut members = SeededRng::new(seed, 0).sample_indices(dataset.len(), pool);
    let id = |i: usize| dataset.entries[i].image_id.as_str();
    members.sort_by(|&a, &b| agg[a].total_cmp(&agg[b]).then_with(|| id(a).cmp(id(b))));
    let n_remove = pool * percent as usize / 100;
    let (removed, kept) = members.split_at(n_remove);
    if kept.len() < target_n {
        return Err(Error::InvalidParam(format!(
            "{} images left after removing {percent}%, need {target_n}",
            kept.len()
        )));
    }
    let mut chosen: Vec<usize> = if kept.len() > target_n {
        let mut kept = kept.to_vec();
        kept.sort_unstable();
        SeededRng::new(seed, 1 + percent as u64)
            .sample_indices(kept.len(), target_n)
            .into_iter()
            .map(|k| kept[k])
            .collect()
    } else {
        kept.to_vec()
    };
    chosen.sort_unstable();
    let mut removed = removed.to_vec();
    removed.sort_unstable();
    debug!("{percent}%: pool {pool}, removed {n_remove}, kept {}", chosen.len());
    Ok(SubsetManifest {
        name: format!("removed_p{percent:02}"),
        source_dataset: source_dataset.to_string(),
        recipe: Recipe::PercentRemoved {
            percent,
            target_n,
            seed,
            methods: methods.to_vec(),
            pool_mode,
            pool_size: pool,
        },
        image_ids: chosen.iter().map(|&i| id(i).to_string()).collect(),
        removed_ids: removed.iter().map(|&i| id(i).to_string()).collect(),
        decisions: Vec::new(),
    })
}
