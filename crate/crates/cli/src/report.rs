use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qualgate_core::cutoff::{CutoffSet, Direction, ScoreSpace};
use qualgate_core::gating::{Recipe, SubsetManifest};
use qualgate_core::imageops::AugmentationKind;
use qualgate_core::selection::{CorrelationReport, Statistic};
use serde::Serialize;

use crate::cli::ReportArgs;
use crate::fail::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct ReportRow {
    pub augmentation: String,
    pub statistic: String,
    pub values: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct CutoffRow {
    pub method: String,
    pub threshold: f64,
    pub direction: Direction,
    pub score_space: ScoreSpace,
    pub crossings: usize,
    pub fallback: bool,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

#[derive(Debug, Serialize)]
pub struct SubsetRow {
    pub name: String,
    pub kind: String,
    pub images: usize,
    pub evaluated: usize,
    pub acceptance_rate: Option<f64>,
    pub rejected: usize,
    pub veto_counts: BTreeMap<String, usize>,
    /// Every rejection needs at least one veto.
    pub veto_check: bool,
}

#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub correlations: Vec<ReportRow>,
    pub cutoffs: Vec<CutoffRow>,
    pub subsets: Vec<SubsetRow>,
    pub missing: Vec<String>,
}

fn present(path: &Path, missing: &mut Vec<String>) -> bool {
    if path.exists() {
        true
    } else {
        missing.push(path.display().to_string());
        false
    }
}

fn correlation_rows(report: &CorrelationReport) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for kind in AugmentationKind::ALL {
        for (stat, label) in [(Statistic::Pcc, "pcc"), (Statistic::Srcc, "srcc")] {
            rows.push(ReportRow {
                augmentation: kind.to_string(),
                statistic: label.into(),
                values: report
                    .methods
                    .iter()
                    .map(|m| (m.clone(), report.value(m, kind, stat)))
                    .collect(),
            });
        }
    }
    rows
}

fn subset_row(m: &SubsetManifest) -> SubsetRow {
    let kind = match &m.recipe {
        Recipe::HighQuality { .. } => "high_quality",
        Recipe::MatchedRandom { .. } => "matched_random",
        Recipe::PercentRemoved { .. } => "percent_removed",
    };
    let veto_counts = m.veto_counts();
    let rejected = m.rejected_count();
    let rate = m.acceptance_rate();
    SubsetRow {
        name: m.name.clone(),
        kind: kind.into(),
        images: m.image_ids.len(),
        evaluated: m.decisions.len(),
        acceptance_rate: rate.is_finite().then_some(rate),
        rejected,
        veto_check: veto_counts.values().sum::<usize>() >= rejected,
        veto_counts,
    }
}

pub fn collect(args: &ReportArgs) -> CliResult<Summary> {
    let mut s = Summary::default();
    if let Some(bench) = &args.bench {
        let path = if bench.is_dir() { bench.join("report.json") } else { bench.clone() };
        if present(&path, &mut s.missing) {
            let report: CorrelationReport = qualgate_core::io::read_json(&path)?;
            s.correlations = correlation_rows(&report);
        }
    }
    if let Some(path) = &args.cutoffs {
        if present(path, &mut s.missing) {
            for c in CutoffSet::read(path)?.cutoffs {
                s.cutoffs.push(CutoffRow {
                    method: c.method_id,
                    threshold: c.threshold,
                    direction: c.direction,
                    score_space: c.score_space,
                    crossings: c.provenance.crossings.len(),
                    fallback: c.provenance.fallback.is_some(),
                    n_correct: c.provenance.n_correct,
                    n_incorrect: c.provenance.n_incorrect,
                });
            }
        }
    }
    for path in subset_paths(&args.subset, &mut s.missing)? {
        s.subsets.push(subset_row(&SubsetManifest::read(&path)?));
    }
    Ok(s)
}

fn subset_paths(given: &[PathBuf], missing: &mut Vec<String>) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in given {
        if !present(p, missing) {
            continue;
        }
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "NA".into())
}

pub fn render(s: &Summary) -> String {
    let mut out = String::new();
    if let Some(first) = s.correlations.first() {
        out.push_str("Mean absolute correlation with augmentation step\n");
        let _ = write!(out, "{:<8} {:<5}", "aug", "stat");
        for m in first.values.keys() {
            let _ = write!(out, " {m:>10}");
        }
        out.push('\n');
        for r in &s.correlations {
            let _ = write!(out, "{:<8} {:<5}", r.augmentation, r.statistic);
            for v in r.values.values() {
                let _ = write!(out, " {:>10}", num(*v));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if !s.cutoffs.is_empty() {
        out.push_str("Cut-offs\n");
        let _ = writeln!(
            out,
            "{:<16} {:>12} {:<12} {:<6} {:>9} {:>7} {:>9}",
            "method", "threshold", "direction", "space", "crossings", "correct", "incorrect"
        );
        for c in &s.cutoffs {
            let _ = writeln!(
                out,
                "{:<16} {:>12.6} {:<12} {:<6} {:>9} {:>7} {:>9}{}",
                c.method,
                c.threshold,
                match c.direction {
                    Direction::AcceptAbove => "accept_above",
                    Direction::AcceptBelow => "accept_below",
                },
                match c.score_space {
                    ScoreSpace::Raw => "raw",
                    ScoreSpace::Minmax => "minmax",
                },
                c.crossings,
                c.n_correct,
                c.n_incorrect,
                if c.fallback { "  (quantile fallback)" } else { "" }
            );
        }
        out.push('\n');
    }
    if !s.subsets.is_empty() {
        out.push_str("Subsets\n");
        for r in &s.subsets {
            let _ = write!(out, "{:<32} {:<16} {:>6} images", r.name, r.kind, r.images);
            if let Some(rate) = r.acceptance_rate {
                let _ = write!(out, ", accepted {:.1}% of {}", rate * 100.0, r.evaluated);
                let vetoes: Vec<String> = r.veto_counts.iter().map(|(m, n)| format!("{m}={n}")).collect();
                let _ = write!(out, ", vetoes {}", vetoes.join(" "));
                if !r.veto_check {
                    out.push_str(" [veto count below rejections]");
                }
            }
            if r.images == 0 {
                out.push_str(" [empty]");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    for m in &s.missing {
        let _ = writeln!(out, "absent: {m}");
    }
    out
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    if args.bench.is_none() && args.cutoffs.is_none() && args.subset.is_empty() {
        return Err(CliError::validation("nothing to report: pass --bench, --cutoffs or --subset"));
    }
    let summary = collect(args)?;
    print!("{}", render(&summary));
    if let Some(path) = &args.json {
        qualgate_core::io::write_json(path, &summary)?;
    }
    if !summary.missing.is_empty() {
        return Err(CliError::validation(format!("missing artifacts: {}", summary.missing.join(", "))));
    }
    Ok(())
}
