use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{debug, info, warn};
use qualgate_core::cutoff::{
    confidence_quality_correlation, determine_cutoffs, CutoffSet, PredictionLog, ScoreSpace,
};
use qualgate_core::dataset::DatasetManifest;
use qualgate_core::gating::{
    filter_dataset, matched_random_subset, percent_removed_series, PercentSeriesOptions, PoolMode,
    SubsetManifest,
};
use qualgate_core::imageops::{image_id, list_images, load_gray};
use qualgate_core::metrics::brisque::SvrModel;
use qualgate_core::metrics::{
    ingest_external_scores, niqe_fit, Metric, MethodRegistry, PristineModel, ScoreTable, Scorer,
};
use qualgate_core::selection::{
    run_robustness_bench, select_methods, CorrelationReport, Selection, Statistic,
};
use qualgate_core::{Error, GrayImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::*;
use crate::config::RunConfig;
use crate::fail::{CliError, CliResult};

fn existing(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = flag
        .clone()
        .or_else(|| config.clone())
        .ok_or_else(|| CliError::validation(format!("missing --{what}")))?;
    if !path.exists() {
        return Err(CliError::validation(format!("{what} not found: {}", path.display())));
    }
    Ok(path)
}

fn existing_dir(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let path = existing(flag, config, what)?;
    if !path.is_dir() {
        return Err(CliError::validation(format!("{what} is not a directory: {}", path.display())));
    }
    Ok(path)
}

fn output(flag: &Option<PathBuf>, cfg: &RunConfig, default_name: &str) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| cfg.paths.out_dir.as_ref().map(|d| d.join(default_name)))
        .ok_or_else(|| CliError::validation("missing --out"))
}

fn methods(flag: &[String], cfg: &RunConfig, registry: &MethodRegistry) -> CliResult<Vec<String>> {
    let list = if flag.is_empty() { cfg.methods.clone() } else { flag.to_vec() };
    if list.is_empty() {
        return Err(CliError::validation("no methods given (use --methods or `methods` in the config)"));
    }
    let mut seen = std::collections::HashSet::new();
    for m in &list {
        registry.get(m)?;
        if !seen.insert(m) {
            return Err(CliError::validation(format!("method `{m}` listed twice")));
        }
    }
    Ok(list)
}

fn load_images(dir: &Path) -> CliResult<Vec<(String, GrayImage)>> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(CliError::validation(format!("no images in {}", dir.display())));
    }
    let loaded: Vec<(String, GrayImage)> = paths
        .par_iter()
        .map(|p| load_gray(p).map(|img| (image_id(p), img)))
        .collect::<Result<_, Error>>()?;
    Ok(loaded)
}

fn build_metrics(ids: &[String], models: &ModelArgs, cfg: &RunConfig) -> CliResult<Vec<Metric>> {
    let needs = |m: &str| ids.iter().any(|i| i == m);
    let svr = if needs("brisque") {
        let path = models
            .brisque_model
            .clone()
            .or_else(|| cfg.paths.brisque_model.clone())
            .ok_or_else(|| CliError::from(Error::ModelUnavailable("brisque needs --brisque-model".into())))?;
        Some(Arc::new(SvrModel::load(&path)?))
    } else {
        None
    };
    let pristine = if needs("niqe") {
        let model = models.niqe_model.clone().or_else(|| cfg.paths.niqe_model.clone());
        let corpus = models.niqe_pristine.clone().or_else(|| cfg.paths.niqe_pristine.clone());
        match (model, corpus) {
            (Some(path), _) => Some(Arc::new(PristineModel::load(&path)?)),
            (None, Some(dir)) => {
                if !dir.is_dir() {
                    return Err(CliError::validation(format!("niqe pristine directory not found: {}", dir.display())));
                }
                let images: Vec<GrayImage> = load_images(&dir)?.into_iter().map(|(_, i)| i).collect();
                info!("fitting niqe pristine model on {} images", images.len());
                Some(Arc::new(niqe_fit(&images, Default::default())?))
            }
            (None, None) => {
                return Err(Error::ModelUnavailable("niqe needs --niqe-model or --niqe-pristine".into()).into())
            }
        }
    } else {
        None
    };
    ids.iter()
        .map(|id| Metric::from_id(id, svr.as_ref(), pristine.as_ref()).map_err(CliError::from))
        .collect()
}

type ImageScore = (String, Result<f64, Error>);

pub fn score(args: &ScoreArgs, cfg: &RunConfig) -> CliResult<()> {
    let dir = existing_dir(&args.images, &cfg.paths.images, "images")?;
    let out = output(&args.out, cfg, "scores.csv")?;
    let registry = cfg.registry();
    let ids = methods(&args.methods, cfg, &registry)?;
    let external_files: Vec<PathBuf> = if args.external.is_empty() {
        cfg.paths.external.clone()
    } else {
        args.external.clone()
    };
    for f in &external_files {
        if !f.is_file() {
            return Err(CliError::validation(format!("external score file not found: {}", f.display())));
        }
    }
    let (external, internal): (Vec<String>, Vec<String>) =
        ids.iter().cloned().partition(|m| registry.get(m).map(|d| d.is_external()).unwrap_or(false));
    if !external.is_empty() && external_files.is_empty() {
        return Err(CliError::validation(format!(
            "{} are external methods: pass their scores with --external",
            external.join(", ")
        )));
    }
    let metrics = build_metrics(&internal, &args.models, cfg)?;
    let paths = list_images(&dir)?;
    if paths.is_empty() {
        return Err(CliError::validation(format!("no images in {}", dir.display())));
    }

    let rows: Vec<(String, Vec<ImageScore>)> = paths
        .par_iter()
        .map(|p| {
            let img: GrayImage = load_gray(p)?;
            let scores = metrics.iter().map(|m| (m.id().to_string(), m.score(&img))).collect();
            Ok((image_id(p), scores))
        })
        .collect::<Result<_, Error>>()?;
    let mut table = ScoreTable::new();
    for (id, scores) in rows {
        for (method, r) in scores {
            match r {
                Ok(v) => table.insert(&id, &method, v)?,
                Err(e) => warn!("{id}: {method} not scored ({}: {e})", e.kind()),
            }
        }
    }
    for f in &external_files {
        let file = std::fs::File::open(f).map_err(|e| CliError::validation(format!("{}: {e}", f.display())))?;
        let ext = ingest_external_scores(file, &registry)?;
        let ext_filtered = filter_methods(ext, &external);
        table.merge(ext_filtered)?;
    }
    for skipped in table.normalize_registered(&registry) {
        warn!("{skipped}: constant scores, left unnormalized");
    }
    table.write_csv(&out)?;
    info!("scored {} images with {} -> {}", paths.len(), ids.join(","), out.display());
    Ok(())
}

fn filter_methods(table: ScoreTable, keep: &[String]) -> ScoreTable {
    let mut out = ScoreTable::new();
    for (i, m, e) in table.iter() {
        if keep.iter().any(|k| k == m) {
            out.insert(i, m, e.raw).expect("rows of a valid table");
        }
    }
    out
}

pub fn bench(args: &BenchArgs, cfg: &RunConfig) -> CliResult<()> {
    let dir = existing_dir(&args.samples, &cfg.paths.samples, "samples")?;
    let out = output(&args.out, cfg, "bench")?;
    let registry = cfg.registry();
    let ids = methods(&args.methods, cfg, &registry)?;
    if let Some(ext) = ids.iter().find(|m| registry.get(m).map(|d| d.is_external()).unwrap_or(false)) {
        return Err(CliError::validation(format!("{ext} is scored externally and cannot be benched here")));
    }
    let mut bench_cfg = cfg.bench.clone();
    if !args.blur_sigmas.is_empty() {
        bench_cfg.blur_sigmas = args.blur_sigmas.clone();
    }
    if !args.rotation_angles.is_empty() {
        bench_cfg.rotation_angles = args.rotation_angles.clone();
    }
    debug!("blur sigmas {:?}, rotation angles {:?}", bench_cfg.blur_sigmas, bench_cfg.rotation_angles);
    let metrics = build_metrics(&ids, &args.models, cfg)?;
    let samples = load_images(&dir)?;
    let scorers: Vec<&dyn Scorer> = metrics.iter().map(|m| m as &dyn Scorer).collect();
    let report = run_robustness_bench(&samples, &scorers, &bench_cfg)?;
    for c in report.cells.iter().filter(|c| c.sample_count == 0) {
        warn!("{}/{}: no usable samples", c.method, c.kind);
    }
    report.write(&out)?;
    info!("benched {} samples -> {}", samples.len(), out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectOutput {
    pub selection: Selection,
    /// Selected methods after include/exclude overrides.
    pub voting_set: Vec<String>,
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.json")
    } else {
        p.to_path_buf()
    }
}

pub fn select(args: &SelectArgs, cfg: &RunConfig) -> CliResult<()> {
    let path = report_path(&args.report);
    if !path.is_file() {
        return Err(CliError::validation(format!("bench report not found: {}", path.display())));
    }
    let out = output(&args.out, cfg, "selection.json")?;
    let mut criteria = cfg.selection.criteria.clone();
    if let Some(v) = args.max_crop {
        criteria.max_crop_corr = v;
    }
    if let Some(v) = args.max_rot {
        criteria.max_rot_corr = v;
    }
    if let Some(v) = args.min_blur {
        criteria.min_blur_corr = v;
    }
    if let Some(v) = args.target_count {
        criteria.target_count = v;
    }
    if let Some(s) = args.statistic {
        criteria.statistic = match s {
            StatisticArg::Pcc => Statistic::Pcc,
            StatisticArg::Srcc => Statistic::Srcc,
            StatisticArg::MeanOfBoth => Statistic::MeanOfBoth,
        };
    }
    criteria.validate()?;
    let include = if args.include.is_empty() { &cfg.selection.include } else { &args.include };
    let exclude = if args.exclude.is_empty() { &cfg.selection.exclude } else { &args.exclude };
    let report: CorrelationReport = qualgate_core::io::read_json(&path)?;
    for m in include.iter().chain(exclude) {
        if !report.methods.contains(m) {
            return Err(CliError::validation(format!("override names `{m}`, which is not in the report")));
        }
    }
    debug!("selection criteria {criteria:?}");
    let selection = select_methods(&report, &criteria)?;
    if selection.underfilled {
        warn!(
            "underfilled selection: {} of {} methods pass; best effort {:?}",
            selection.selected.len(),
            criteria.target_count,
            selection.best_effort
        );
    }
    for v in &selection.ranked {
        info!(
            "{:<20} crop {} rot {} blur {} -> {}",
            v.method,
            verdict(v.crop, v.crop_pass),
            verdict(v.rotate, v.rotate_pass),
            verdict(v.blur, v.blur_pass),
            if v.passed { "pass" } else { "fail" }
        );
    }
    let voting_set = selection.with_overrides(include, exclude);
    qualgate_core::io::write_json(&out, &SelectOutput { selection, voting_set })?;
    Ok(())
}

fn verdict(v: Option<f64>, pass: bool) -> String {
    match v {
        Some(x) => format!("{x:.3}{}", if pass { "" } else { "*" }),
        None => "NA*".into(),
    }
}

pub fn cutoff(args: &CutoffArgs, cfg: &RunConfig) -> CliResult<()> {
    let scores_path = existing(&args.scores, &cfg.paths.scores, "scores")?;
    let log_path = existing(&args.predictions, &cfg.paths.predictions, "predictions")?;
    let out = output(&args.out, cfg, "cutoffs.json")?;
    let registry = cfg.registry();
    let ids = methods(&args.methods, cfg, &registry)?;
    let mut opts = cfg.cutoff.clone();
    if let Some(s) = args.score_space {
        opts.score_space = Some(match s {
            SpaceArg::Raw => ScoreSpace::Raw,
            SpaceArg::Minmax => ScoreSpace::Minmax,
        });
    }
    opts.fallback |= args.fallback;
    if let Some(q) = args.fallback_quantile {
        opts.fallback_quantile = q;
    }
    opts.validate()?;
    debug!("cut-off options {opts:?}");
    let scores = ScoreTable::read_csv(&scores_path)?;
    let log = PredictionLog::read_csv(&log_path)?;
    let descriptors: Vec<_> = ids.iter().map(|m| registry.get(m).cloned()).collect::<Result<_, _>>()?;
    let mut set = CutoffSet::default();
    for (method, result) in determine_cutoffs(&scores, &log, &descriptors, &opts) {
        let spec = result?;
        if spec.provenance.fallback.is_some() {
            warn!("{method}: no qualifying crossing, used the quantile fallback");
        }
        debug!(
            "{method}: threshold {} ({:?}, {:?}), bandwidths {} / {}, {} crossings",
            spec.threshold,
            spec.direction,
            spec.score_space,
            spec.provenance.correct.bandwidth,
            spec.provenance.incorrect.bandwidth,
            spec.provenance.crossings.len()
        );
        set.cutoffs.push(spec);
    }
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    match confidence_quality_correlation(&scores, &log, &refs) {
        Ok(corr) => {
            for c in corr {
                info!("{}: confidence correlation pcc {:.3}, srcc {:.3} (n={})", c.method, c.pcc, c.srcc, c.n);
            }
        }
        Err(e) => warn!("confidence correlation unavailable: {e}"),
    }
    set.write(&out)?;
    if let Some(path) = &args.density_out {
        qualgate_core::io::write_json(path, &set.density_export())?;
    }
    info!("{} cut-offs -> {}", set.cutoffs.len(), out.display());
    Ok(())
}

pub fn filter(args: &FilterArgs, cfg: &RunConfig) -> CliResult<()> {
    let dataset_path = existing(&args.dataset, &cfg.paths.dataset, "dataset")?;
    let scores_path = existing(&args.scores, &cfg.paths.scores, "scores")?;
    let cutoffs_path = existing(&args.cutoffs, &cfg.paths.cutoffs, "cutoffs")?;
    let out = output(&args.out, cfg, "subsets")?;
    let dataset = DatasetManifest::read_csv(&dataset_path)?;
    let scores = ScoreTable::read_csv(&scores_path)?;
    let mut cutoffs = CutoffSet::read(&cutoffs_path)?;
    if !args.methods.is_empty() {
        for m in &args.methods {
            if cutoffs.get(m).is_none() {
                return Err(CliError::validation(format!("no cut-off for `{m}` in {}", cutoffs_path.display())));
            }
        }
        cutoffs.cutoffs.retain(|c| args.methods.contains(&c.method_id));
    }
    for c in &cutoffs.cutoffs {
        debug!("{}: threshold {} {:?} ({:?})", c.method_id, c.threshold, c.direction, c.score_space);
    }
    let manifest = filter_dataset(&args.name, &dataset_path.to_string_lossy(), &dataset, &scores, &cutoffs)?;
    if manifest.image_ids.is_empty() {
        warn!("empty subset: no image accepted");
    }
    manifest.write(&out)?;
    info!(
        "accepted {} of {} images -> {}",
        manifest.image_ids.len(),
        dataset.len(),
        out.display()
    );
    Ok(())
}

pub fn subset(args: &SubsetArgs, cfg: &RunConfig) -> CliResult<()> {
    let dataset_path = existing(&args.dataset, &cfg.paths.dataset, "dataset")?;
    let out = output(&args.out, cfg, "subsets")?;
    let seed = cfg.resolve_seed(args.seed)?;
    debug!("seed {seed}");
    let source = dataset_path.to_string_lossy().to_string();
    match args.mode {
        SubsetMode::Matched => {
            let n = match (args.n, &args.match_manifest) {
                (Some(n), _) => n,
                (None, Some(p)) => {
                    if !p.is_file() {
                        return Err(CliError::validation(format!("manifest not found: {}", p.display())));
                    }
                    SubsetManifest::read(p)?.image_ids.len()
                }
                (None, None) => return Err(CliError::validation("matched mode needs --n or --match")),
            };
            let dataset = DatasetManifest::read_csv(&dataset_path)?;
            let mut m = matched_random_subset(&source, &dataset, n, seed)?;
            if let Some(name) = &args.name {
                m.name = name.clone();
            }
            m.write(&out)?;
            info!("matched random subset of {n} -> {}", out.display());
        }
        SubsetMode::PercentSeries => {
            let scores_path = existing(&args.scores, &cfg.paths.scores, "scores")?;
            let registry = cfg.registry();
            let ids = methods(&args.methods, cfg, &registry)?;
            let target_n = args
                .target_n
                .or(cfg.gating.target_n)
                .ok_or_else(|| CliError::validation("percent-series needs --target-n"))?;
            let opts = PercentSeriesOptions {
                percents: if args.percents.is_empty() { cfg.gating.percents.clone() } else { args.percents.clone() },
                target_n,
                seed,
                pool_mode: match args.pool_mode {
                    Some(PoolArg::Redraw) => PoolMode::Redraw,
                    Some(PoolArg::Shared) => PoolMode::Shared,
                    None => cfg.gating.pool_mode,
                },
                name_prefix: args.name.clone().unwrap_or_else(|| "removed".into()),
            };
            debug!("percent series {opts:?}");
            let dataset = DatasetManifest::read_csv(&dataset_path)?;
            let scores = ScoreTable::read_csv(&scores_path)?;
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let series = percent_removed_series(&source, &dataset, &scores, &registry, &refs, &opts)?;
            for m in &series {
                m.write(&out)?;
            }
            info!("{} percent-removed subsets -> {}", series.len(), out.display());
        }
    }
    Ok(())
}
