//! Robustness screening: score augmentation series, correlate against the
//! step index, average over samples, and rank methods for the voting set.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageops::{
    blur_series, crop_series, rotation_series_with, AugmentationKind, AugmentationSeries,
    DEFAULT_BLUR_SIGMAS, ROTATION_ANGLES,
};
use crate::metrics::Scorer;
use crate::stats::{pcc, srcc};
use crate::GrayImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub blur_sigmas: Vec<f64>,
    pub rotation_angles: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            blur_sigmas: DEFAULT_BLUR_SIGMAS.to_vec(),
            rotation_angles: ROTATION_ANGLES.to_vec(),
        }
    }
}

/// Correlation of one sample's series scores with the step index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCorrelation {
    pub sample_id: String,
    pub step_params: Vec<f64>,
    /// Per-step scores; empty when scoring failed.
    pub scores: Vec<f64>,
    pub abs_pcc: Option<f64>,
    pub abs_srcc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub method: String,
    pub kind: AugmentationKind,
    pub mean_abs_pcc: Option<f64>,
    pub mean_abs_srcc: Option<f64>,
    /// Samples that contributed to the means.
    pub sample_count: usize,
    /// Sorted by sample id.
    pub samples: Vec<SampleCorrelation>,
}

impl CorrelationCell {
    fn from_samples(method: &str, kind: AugmentationKind, mut samples: Vec<SampleCorrelation>) -> Self {
        samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        let ok: Vec<&SampleCorrelation> = samples
            .iter()
            .filter(|s| s.abs_pcc.is_some() && s.abs_srcc.is_some())
            .collect();
        let mean = |f: fn(&SampleCorrelation) -> Option<f64>| {
            (!ok.is_empty())
                .then(|| ok.iter().filter_map(|s| f(s)).sum::<f64>() / ok.len() as f64)
        };
        Self {
            method: method.to_string(),
            kind,
            mean_abs_pcc: mean(|s| s.abs_pcc),
            mean_abs_srcc: mean(|s| s.abs_srcc),
            sample_count: ok.len(),
            samples,
        }
    }

    pub fn value(&self, statistic: Statistic) -> Option<f64> {
        match statistic {
            Statistic::Pcc => self.mean_abs_pcc,
            Statistic::Srcc => self.mean_abs_srcc,
            Statistic::MeanOfBoth => Some((self.mean_abs_pcc? + self.mean_abs_srcc?) / 2.0),
        }
    }
}

/// Averaged |PCC| and |SRCC| per (method, augmentation kind).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub methods: Vec<String>,
    pub cells: Vec<CorrelationCell>,
}

impl CorrelationReport {
    pub fn cell(&self, method: &str, kind: AugmentationKind) -> Option<&CorrelationCell> {
        self.cells.iter().find(|c| c.method == method && c.kind == kind)
    }

    pub fn value(&self, method: &str, kind: AugmentationKind, statistic: Statistic) -> Option<f64> {
        self.cell(method, kind).and_then(|c| c.value(statistic))
    }

    /// Report from already-averaged values, one synthetic sample per cell.
    /// Rows are `(method, kind, |pcc|, |srcc|)`.
    pub fn from_summary(rows: &[(&str, AugmentationKind, f64, f64)]) -> Self {
        let mut methods: Vec<String> = Vec::new();
        let mut cells = Vec::new();
        for &(method, kind, p, s) in rows {
            if !methods.iter().any(|m| m == method) {
                methods.push(method.to_string());
            }
            let sample = SampleCorrelation {
                sample_id: "summary".into(),
                step_params: Vec::new(),
                scores: Vec::new(),
                abs_pcc: Some(p),
                abs_srcc: Some(s),
                error: None,
            };
            cells.push(CorrelationCell::from_samples(method, kind, vec![sample]));
        }
        Self { methods, cells }
    }

    /// Recomputes every per-sample correlation from its stored scores and
    /// every cell mean from the per-sample values; true when all match.
    pub fn audit(&self) -> bool {
        self.cells.iter().all(|cell| {
            let samples_ok = cell.samples.iter().all(|s| {
                if s.scores.is_empty() {
                    return true;
                }
                let (p, r) = correlate_with_index(&s.scores)
                    .map(|(p, r)| (Some(p), Some(r)))
                    .unwrap_or((None, None));
                p == s.abs_pcc && r == s.abs_srcc
            });
            let recomputed = CorrelationCell::from_samples(&cell.method, cell.kind, cell.samples.clone());
            samples_ok && recomputed == *cell
        })
    }

    /// Table layout: one row per (augmentation, statistic), one column per method.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("augmentation,statistic");
        for m in &self.methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for kind in AugmentationKind::ALL {
            for (label, stat) in [("pcc", Statistic::Pcc), ("srcc", Statistic::Srcc)] {
                out.push_str(&format!("{kind},{label}"));
                for m in &self.methods {
                    match self.value(m, kind, stat) {
                        Some(v) => out.push_str(&format!(",{v:.3}")),
                        None => out.push_str(",NA"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::io::ensure_dir(dir)?;
        crate::io::atomic_write(&dir.join("table.csv"), self.to_table_csv().as_bytes())?;
        crate::io::write_json(&dir.join("report.json"), self)
    }
}

/// `(|pcc|, |srcc|)` of scores against `0..n`.
pub fn correlate_with_index(scores: &[f64]) -> Result<(f64, f64)> {
    let index: Vec<f64> = (0..scores.len()).map(|i| i as f64).collect();
    Ok((pcc(&index, scores)?.abs(), srcc(&index, scores)?.abs()))
}

fn build_series(
    id: &str,
    img: &GrayImage,
    kind: AugmentationKind,
    cfg: &BenchConfig,
) -> Result<AugmentationSeries<f64>> {
    match kind {
        AugmentationKind::Crop => crop_series(id, img),
        AugmentationKind::Rotate => {
            rotation_series_with(id, &img.center_square(), &cfg.rotation_angles)
        }
        AugmentationKind::Blur => blur_series(id, img, &cfg.blur_sigmas),
    }
}

fn score_series(scorer: &dyn Scorer, series: &AugmentationSeries<f64>) -> SampleCorrelation {
    let mut rec = SampleCorrelation {
        sample_id: series.base_id.clone(),
        step_params: series.step_params.clone(),
        scores: Vec::new(),
        abs_pcc: None,
        abs_srcc: None,
        error: None,
    };
    let scores: Result<Vec<f64>> = series.steps.iter().map(|s| scorer.score(s)).collect();
    match scores.and_then(|s| correlate_with_index(&s).map(|c| (s, c))) {
        Ok((s, (p, r))) => {
            rec.scores = s;
            rec.abs_pcc = Some(p);
            rec.abs_srcc = Some(r);
        }
        Err(e) => rec.error = Some(format!("{}: {e}", e.kind())),
    }
    rec
}

/// Scores crop, rotation and blur series of every sample with every method
/// and averages the absolute correlations per cell. Failures are kept as
/// per-sample errors. Non-square samples are center-cropped for rotation.
pub fn run_robustness_bench(
    samples: &[(String, GrayImage)],
    scorers: &[&dyn Scorer],
    cfg: &BenchConfig,
) -> Result<CorrelationReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("bench needs at least one sample".into()));
    }
    let per_sample: Vec<Vec<(String, AugmentationKind, SampleCorrelation)>> = samples
        .par_iter()
        .map(|(id, img)| {
            let mut out = Vec::new();
            for kind in AugmentationKind::ALL {
                match build_series(id, img, kind, cfg) {
                    Ok(series) => {
                        for s in scorers {
                            out.push((s.id().to_string(), kind, score_series(*s, &series)));
                        }
                    }
                    Err(e) => {
                        for s in scorers {
                            out.push((
                                s.id().to_string(),
                                kind,
                                SampleCorrelation {
                                    sample_id: id.clone(),
                                    step_params: Vec::new(),
                                    scores: Vec::new(),
                                    abs_pcc: None,
                                    abs_srcc: None,
                                    error: Some(format!("{}: {e}", e.kind())),
                                },
                            ));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut grouped: BTreeMap<(String, AugmentationKind), Vec<SampleCorrelation>> = BTreeMap::new();
    for (method, kind, rec) in per_sample.into_iter().flatten() {
        grouped.entry((method, kind)).or_default().push(rec);
    }
    let methods: Vec<String> = scorers.iter().map(|s| s.id().to_string()).collect();
    let mut cells = Vec::new();
    for m in &methods {
        for kind in AugmentationKind::ALL {
            let recs = grouped.remove(&(m.clone(), kind)).unwrap_or_default();
            let cell = CorrelationCell::from_samples(m, kind, recs);
            if cell.sample_count == 0 {
                warn!("no usable samples for {m}/{kind}");
            }
            cells.push(cell);
        }
    }
    Ok(CorrelationReport { methods, cells })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Pcc,
    Srcc,
    MeanOfBoth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCriteria {
    pub max_crop_corr: f64,
    pub max_rot_corr: f64,
    pub min_blur_corr: f64,
    pub target_count: usize,
    pub statistic: Statistic,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self {
            max_crop_corr: 0.4,
            max_rot_corr: 0.6,
            min_blur_corr: 0.8,
            target_count: 3,
            statistic: Statistic::MeanOfBoth,
        }
    }
}

impl SelectionCriteria {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_crop_corr", self.max_crop_corr),
            ("max_rot_corr", self.max_rot_corr),
            ("min_blur_corr", self.min_blur_corr),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.target_count == 0 || self.target_count % 2 == 0 {
            return Err(Error::InvalidParam(format!(
                "target_count must be odd and >= 1, got {}",
                self.target_count
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodVerdict {
    pub method: String,
    pub crop: Option<f64>,
    pub rotate: Option<f64>,
    pub blur: Option<f64>,
    pub crop_pass: bool,
    pub rotate_pass: bool,
    pub blur_pass: bool,
    pub passed: bool,
    /// `blur - max(crop, rotate)`.
    pub composite: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub criteria: SelectionCriteria,
    /// All methods: passing first, then by composite (descending), then id.
    pub ranked: Vec<MethodVerdict>,
    /// Top passing methods, at most `target_count`.
    pub selected: Vec<String>,
    pub underfilled: bool,
    /// Top `target_count` of the full ranking, reported when underfilled.
    pub best_effort: Vec<String>,
}

impl Selection {
    /// Final voting set after a human override: `include` adds methods,
    /// `exclude` removes them; ranking order is kept.
    pub fn with_overrides(&self, include: &[String], exclude: &[String]) -> Vec<String> {
        self.ranked
            .iter()
            .map(|v| &v.method)
            .filter(|m| {
                (self.selected.contains(m) || include.contains(m)) && !exclude.contains(m)
            })
            .cloned()
            .collect()
    }
}

pub fn select_methods(report: &CorrelationReport, criteria: &SelectionCriteria) -> Result<Selection> {
    criteria.validate()?;
    let stat = criteria.statistic;
    let mut ranked: Vec<MethodVerdict> = report
        .methods
        .iter()
        .map(|m| {
            let crop = report.value(m, AugmentationKind::Crop, stat);
            let rotate = report.value(m, AugmentationKind::Rotate, stat);
            let blur = report.value(m, AugmentationKind::Blur, stat);
            let crop_pass = crop.is_some_and(|v| v <= criteria.max_crop_corr);
            let rotate_pass = rotate.is_some_and(|v| v <= criteria.max_rot_corr);
            let blur_pass = blur.is_some_and(|v| v >= criteria.min_blur_corr);
            let composite = match (crop, rotate, blur) {
                (Some(c), Some(r), Some(b)) => Some(b - c.max(r)),
                _ => None,
            };
            MethodVerdict {
                method: m.clone(),
                crop,
                rotate,
                blur,
                crop_pass,
                rotate_pass,
                blur_pass,
                passed: crop_pass && rotate_pass && blur_pass,
                composite,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.passed
            .cmp(&a.passed)
            .then_with(|| {
                let (x, y) = (a.composite.unwrap_or(f64::NEG_INFINITY), b.composite.unwrap_or(f64::NEG_INFINITY));
                y.total_cmp(&x)
            })
            .then_with(|| a.method.cmp(&b.method))
    });
    let selected: Vec<String> = ranked
        .iter()
        .filter(|v| v.passed)
        .take(criteria.target_count)
        .map(|v| v.method.clone())
        .collect();
    let underfilled = selected.len() < criteria.target_count;
    let best_effort = if underfilled {
        warn!(
            "underfilled selection: {} of {} methods pass",
            selected.len(),
            criteria.target_count
        );
        ranked
            .iter()
            .take(criteria.target_count)
            .map(|v| v.method.clone())
            .collect()
    } else {
        Vec::new()
    };
    Ok(Selection {
        criteria: criteria.clone(),
        ranked,
        selected,
        underfilled,
        best_effort,
    })
}
