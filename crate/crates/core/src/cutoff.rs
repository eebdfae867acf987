//! Per-method quality cut-offs from classifier confidence logs.
//!
//! Scores are split by whether the classifier was right, a density is
//! estimated for each class on a shared grid, and the threshold is placed
//! where the correct-class density overtakes the incorrect-class density.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MethodDescriptor, Normalization, Polarity, ScoreTable};
use crate::stats::kde::{extent, kde_on_grid, linspace, resolve_bandwidth, DEFAULT_GRID_POINTS};
use crate::stats::{median, pcc, quantile_sorted, sorted_copy, srcc, Bandwidth, MinMax};
use crate::DensityCurve;

pub const MIN_CLASS_SAMPLES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub image_id: String,
    pub confidence: f64,
    pub predicted_label: String,
    pub true_label: String,
}

impl PredictionRow {
    pub fn correct(&self) -> bool {
        self.predicted_label == self.true_label
    }
}

/// Classifier outputs, one row per image.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionLog {
    pub rows: Vec<PredictionRow>,
}

impl PredictionLog {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::Parse(format!("duplicate image_id `{}`", r.image_id)));
            }
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(Error::Parse(format!(
                    "confidence for `{}` outside [0, 1]: {}",
                    r.image_id, r.confidence
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<PredictionRow>, _>>()?;
        Self::new(rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["image_id", "confidence", "predicted_label", "true_label"])?;
        for r in &self.rows {
            wtr.write_record([
                r.image_id.as_str(),
                &r.confidence.to_string(),
                &r.predicted_label,
                &r.true_label,
            ])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AcceptAbove,
    AcceptBelow,
}

impl From<Polarity> for Direction {
    fn from(p: Polarity) -> Self {
        match p {
            Polarity::HigherBetter => Direction::AcceptAbove,
            Polarity::LowerBetter => Direction::AcceptBelow,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSpace {
    Raw,
    Minmax,
}

/// A sign change of `f_correct - f_incorrect`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub x: f64,
    /// The correct-class density is larger to the right of `x`.
    pub correct_rises: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fallback {
    pub quantile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingDiagnostics {
    pub correct: DensityCurve,
    pub incorrect: DensityCurve,
    pub crossings: Vec<Crossing>,
    pub chosen: Option<usize>,
    pub correct_median: f64,
    pub incorrect_median: f64,
    pub n_correct: usize,
    pub n_incorrect: usize,
    /// Present when the threshold came from the quantile fallback.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<Fallback>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub method_id: String,
    pub threshold: f64,
    pub direction: Direction,
    pub score_space: ScoreSpace,
    /// Calibration range used to map raw scores when `score_space` is minmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bounds: Option<MinMax>,
    pub provenance: CrossingDiagnostics,
}

impl CutoffSpec {
    /// Maps a raw score into this cut-off's score space.
    pub fn to_space(&self, raw: f64) -> f64 {
        match (self.score_space, self.norm_bounds) {
            (ScoreSpace::Minmax, Some(b)) => b.apply(raw),
            _ => raw,
        }
    }

    /// Threshold in raw score units.
    pub fn raw_threshold(&self) -> f64 {
        match (self.score_space, self.norm_bounds) {
            (ScoreSpace::Minmax, Some(b)) => b.min + self.threshold * (b.max - b.min),
            _ => self.threshold,
        }
    }

    /// Whether a raw score falls on the accept side; the boundary accepts.
    pub fn accepts(&self, raw: f64) -> bool {
        let v = self.to_space(raw);
        match self.direction {
            Direction::AcceptAbove => v >= self.threshold,
            Direction::AcceptBelow => v <= self.threshold,
        }
    }

    /// Re-runs crossing selection on the persisted densities.
    pub fn rederive_threshold(&self) -> Option<f64> {
        let d = &self.provenance;
        let (crossings, chosen) = select_crossing(
            &d.correct.grid,
            &d.correct.density,
            &d.incorrect.density,
            self.direction,
            d.correct_median,
            d.incorrect_median,
        );
        chosen.map(|i| crossings[i].x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutoffOptions {
    /// Overrides the space implied by each method's normalization.
    pub score_space: Option<ScoreSpace>,
    pub bandwidth: Bandwidth,
    pub grid_points: usize,
    /// Use the incorrect-class quantile when no crossing qualifies.
    pub fallback: bool,
    /// Quantile toward the good side; mirrored for lower-is-better methods.
    pub fallback_quantile: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        Self {
            score_space: None,
            bandwidth: Bandwidth::Silverman,
            grid_points: DEFAULT_GRID_POINTS,
            fallback: false,
            fallback_quantile: 0.9,
        }
    }
}

impl CutoffOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::InvalidParam("grid_points must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.fallback_quantile) {
            return Err(Error::InvalidParam(format!(
                "fallback_quantile must be in [0, 1], got {}",
                self.fallback_quantile
            )));
        }
        Ok(())
    }
}

/// Finds every sign change of `f_correct - f_incorrect` on `grid` and picks
/// the one where the correct class overtakes, strictly between the class
/// medians, nearest the correct-class median.
pub fn select_crossing(
    grid: &[f64],
    f_correct: &[f64],
    f_incorrect: &[f64],
    direction: Direction,
    correct_median: f64,
    incorrect_median: f64,
) -> (Vec<Crossing>, Option<usize>) {
    let mut crossings = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (j, (&c, &i)) in f_correct.iter().zip(f_incorrect).enumerate() {
        let d = c - i;
        if d == 0.0 {
            continue;
        }
        if let Some((p, dp)) = last {
            if (dp < 0.0) != (d < 0.0) {
                let x = grid[p] + (grid[j] - grid[p]) * dp / (dp - d);
                crossings.push(Crossing {
                    x,
                    correct_rises: d > 0.0,
                });
            }
        }
        last = Some((j, d));
    }
    let (lo, hi) = match direction {
        Direction::AcceptAbove => (incorrect_median, correct_median),
        Direction::AcceptBelow => (correct_median, incorrect_median),
    };
    let want_rising = direction == Direction::AcceptAbove;
    let chosen = crossings
        .iter()
        .enumerate()
        .filter(|(_, c)| c.correct_rises == want_rising && c.x > lo && c.x < hi)
        .min_by(|(_, a), (_, b)| {
            (a.x - correct_median)
                .abs()
                .total_cmp(&(b.x - correct_median).abs())
        })
        .map(|(k, _)| k);
    (crossings, chosen)
}

/// Threshold from already-split class scores.
pub fn cutoff_from_samples(
    correct: &[f64],
    incorrect: &[f64],
    direction: Direction,
    opts: &CutoffOptions,
) -> Result<(f64, CrossingDiagnostics)> {
    opts.validate()?;
    for (name, s) in [("correct", correct), ("incorrect", incorrect)] {
        if s.len() < MIN_CLASS_SAMPLES {
            return Err(Error::InsufficientSamples(format!(
                "{name} class has {} rows, need >= {MIN_CLASS_SAMPLES}",
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("{name} class has non-finite scores")));
        }
    }
    let h_c = resolve_bandwidth(correct, opts.bandwidth)?;
    let h_i = resolve_bandwidth(incorrect, opts.bandwidth)?;
    let (lo_c, hi_c) = extent(correct);
    let (lo_i, hi_i) = extent(incorrect);
    let pad = 3.0 * h_c.max(h_i);
    let grid = linspace(lo_c.min(lo_i) - pad, hi_c.max(hi_i) + pad, opts.grid_points);
    let f_c = kde_on_grid(correct, h_c, &grid);
    let f_i = kde_on_grid(incorrect, h_i, &grid);
    let correct_median = median(correct);
    let incorrect_median = median(incorrect);
    debug!("bandwidths: correct {h_c}, incorrect {h_i}");
    let (crossings, chosen) =
        select_crossing(&grid, &f_c, &f_i, direction, correct_median, incorrect_median);
    let mut diag = CrossingDiagnostics {
        correct: DensityCurve {
            grid: grid.clone(),
            density: f_c,
            bandwidth: h_c,
        },
        incorrect: DensityCurve {
            grid,
            density: f_i,
            bandwidth: h_i,
        },
        crossings,
        chosen,
        correct_median,
        incorrect_median,
        n_correct: correct.len(),
        n_incorrect: incorrect.len(),
        fallback: None,
    };
    if let Some(k) = chosen {
        let t = diag.crossings[k].x;
        return Ok((t, diag));
    }
    if !opts.fallback {
        return Err(Error::NoCrossing(format!(
            "{} crossings, none between the class medians in the accept direction",
            diag.crossings.len()
        )));
    }
    let q = match direction {
        Direction::AcceptAbove => opts.fallback_quantile,
        Direction::AcceptBelow => 1.0 - opts.fallback_quantile,
    };
    let t = quantile_sorted(&sorted_copy(incorrect), q);
    diag.fallback = Some(Fallback { quantile: q });
    Ok((t, diag))
}

/// `(raw score, correct)` for every log row.
fn join(scores: &ScoreTable, log: &PredictionLog, method: &str) -> Result<Vec<(f64, bool)>> {
    log.rows
        .iter()
        .map(|r| {
            scores
                .raw(&r.image_id, method)
                .map(|s| (s, r.correct()))
                .ok_or_else(|| Error::MissingScore {
                    image_id: r.image_id.clone(),
                    method: method.to_string(),
                })
        })
        .collect()
}

pub fn determine_cutoff(
    scores: &ScoreTable,
    log: &PredictionLog,
    method: &MethodDescriptor,
    opts: &CutoffOptions,
) -> Result<CutoffSpec> {
    let joined = join(scores, log, &method.id)?;
    let space = opts.score_space.unwrap_or(match method.normalization {
        Normalization::Raw => ScoreSpace::Raw,
        Normalization::Minmax => ScoreSpace::Minmax,
    });
    let raw: Vec<f64> = joined.iter().map(|(s, _)| *s).collect();
    let norm_bounds = match space {
        ScoreSpace::Raw => None,
        ScoreSpace::Minmax => Some(
            MinMax::of(&raw).map_err(|e| Error::DegenerateSeries(format!("{}: {e}", method.id)))?,
        ),
    };
    let to_space = |v: f64| norm_bounds.map_or(v, |b| b.apply(v));
    let class = |want: bool| -> Vec<f64> {
        joined
            .iter()
            .filter(|(_, ok)| *ok == want)
            .map(|(v, _)| to_space(*v))
            .collect()
    };
    let (correct, incorrect) = (class(true), class(false));
    let direction = Direction::from(method.polarity);
    let (threshold, provenance) = cutoff_from_samples(&correct, &incorrect, direction, opts)
        .map_err(|e| match e {
            Error::NoCrossing(m) => Error::NoCrossing(format!("{}: {m}", method.id)),
            Error::InsufficientSamples(m) => Error::InsufficientSamples(format!("{}: {m}", method.id)),
            other => other,
        })?;
    debug!("cut-off {}: {threshold} ({space:?})", method.id);
    Ok(CutoffSpec {
        method_id: method.id.clone(),
        threshold,
        direction,
        score_space: space,
        norm_bounds,
        provenance,
    })
}

/// One result per method, computed in parallel, in input order.
pub fn determine_cutoffs(
    scores: &ScoreTable,
    log: &PredictionLog,
    methods: &[MethodDescriptor],
    opts: &CutoffOptions,
) -> Vec<(String, Result<CutoffSpec>)> {
    methods
        .par_iter()
        .map(|m| (m.id.clone(), determine_cutoff(scores, log, m, opts)))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffSet {
    pub cutoffs: Vec<CutoffSpec>,
}

impl CutoffSet {
    pub fn get(&self, method: &str) -> Option<&CutoffSpec> {
        self.cutoffs.iter().find(|c| c.method_id == method)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    /// Density curves and thresholds only, for plotting.
    pub fn density_export(&self) -> Vec<DensityExport> {
        self.cutoffs
            .iter()
            .map(|c| DensityExport {
                method_id: c.method_id.clone(),
                score_space: c.score_space,
                threshold: c.threshold,
                grid: c.provenance.correct.grid.clone(),
                correct: c.provenance.correct.density.clone(),
                incorrect: c.provenance.incorrect.density.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityExport {
    pub method_id: String,
    pub score_space: ScoreSpace,
    pub threshold: f64,
    pub grid: Vec<f64>,
    pub correct: Vec<f64>,
    pub incorrect: Vec<f64>,
}

/// Signed correlation of a method's scores with classifier confidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCorrelation {
    pub method: String,
    pub n: usize,
    pub pcc: f64,
    pub srcc: f64,
}

/// Images without a score for a method are left out of that method's pair.
pub fn confidence_quality_correlation(
    scores: &ScoreTable,
    log: &PredictionLog,
    methods: &[&str],
) -> Result<Vec<ConfidenceCorrelation>> {
    methods
        .iter()
        .map(|&m| {
            let (s, c): (Vec<f64>, Vec<f64>) = log
                .rows
                .iter()
                .filter_map(|r| scores.raw(&r.image_id, m).map(|s| (s, r.confidence)))
                .unzip();
            if s.len() < 2 {
                return Err(Error::InsufficientSamples(format!(
                    "{m}: {} joined rows, need >= 2",
                    s.len()
                )));
            }
            Ok(ConfidenceCorrelation {
                method: m.to_string(),
                n: s.len(),
                pcc: pcc(&s, &c)?,
                srcc: srcc(&s, &c)?,
            })
        })
        .collect()
}
