//! The four subcommands. Each reads a validated configuration and writes
//! its tables, plots and metadata into an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use qwloc_core::detect::{human_method, ipr_method, moi_method, GridCache, Method, SweepGrid};
use qwloc_core::ml::{
    generate_training_set, grid_search, load_model, region_features, region_split, sample_size_study, save_model,
    Classifier, ClassifierSpec, ConfusionCurve, TrainingBands,
};
use qwloc_core::randomness::{ensemble_mean_variant, evolve_variant, EvolutionRecord};
use qwloc_core::scaling::{scaling_sweep, ScalingResult};
use qwloc_core::{Error as CoreError, ModelKind};

use crate::config::{ClassifierKind, ExperimentConfig};
use crate::error::{CliError, CliResult, Outcome};
use crate::output::{num, OutputDir};
use crate::svg::{Axis, LineChart, Series, Style};

fn progress(msg: &str) {
    eprintln!("[qwloc] {msg}");
}

fn kind_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::None => "randomness",
        ModelKind::DiscreteAngle => "delta_theta",
        ModelKind::ContinuousAngle => "delta_theta_max",
        ModelKind::RandomTranslation => "p_r",
    }
}

/// One walk (or ensemble mean) with its full history.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, plots: bool) -> CliResult<Outcome> {
    let dir = OutputDir::create(out)?;
    let walk = cfg.walk_config();
    let model = cfg.randomness.kind.with_magnitude(cfg.randomness.magnitude);
    progress(&format!(
        "simulate: {} magnitude {} for {} steps, {} realization(s)",
        cfg.randomness.kind, cfg.randomness.magnitude, walk.n_t, cfg.randomness.realizations
    ));
    let record: EvolutionRecord = if cfg.randomness.realizations == 1 {
        evolve_variant(&walk, &model, cfg.walk.ipr_variant)?
    } else {
        ensemble_mean_variant(&walk, &model, cfg.randomness.realizations, cfg.walk.ipr_variant)?
    };

    let n_t = walk.n_t;
    let every = cfg.simulate.record_every;
    // sites beyond the light cone |x| > t are exactly zero and left out
    let rows = record.distributions.iter().filter(|d| d.time % every == 0 || d.time == n_t).flat_map(|d| {
        let t = d.time as i64;
        d.sites()
            .zip(d.values.iter())
            .filter(move |(x, _)| x.abs() <= t)
            .map(move |(x, p)| vec![t.to_string(), x.to_string(), num(*p)])
            .collect::<Vec<_>>()
    });
    dir.csv("distribution.csv", &["t", "x", "P"], rows)?;
    let diag = record.diagnostics.moi.iter().zip(&record.diagnostics.ipr).enumerate();
    dir.csv("diagnostics.csv", &["t", "MoI", "IPR"], diag.map(|(i, (m, r))| vec![(i + 1).to_string(), num(*m), num(*r)]))?;

    if plots {
        let times = if cfg.simulate.snapshot_times.is_empty() { vec![n_t] } else { cfg.simulate.snapshot_times.clone() };
        for t in times {
            let d = &record.distributions[t - 1];
            let pts: Vec<(f64, f64)> = d.sites().zip(&d.values).map(|(x, &p)| (x as f64, p)).collect();
            let chart = LineChart::new(format!("P(x) at t = {t}"), Axis::linear("x"), Axis::linear("P(x)"))
                .with_series(Series::new(format!("t = {t}"), pts, Style::Line, 0));
            dir.text(&format!("distribution_t{t}.svg"), &chart.render())?;
        }
        let ts = |v: &[f64]| v.iter().enumerate().map(|(i, &y)| ((i + 1) as f64, y)).collect::<Vec<_>>();
        let moi = LineChart::new("MoI versus time", Axis::log("t"), Axis::log("MoI"))
            .with_series(Series::new("MoI", ts(&record.diagnostics.moi), Style::Line, 0));
        dir.text("moi.svg", &moi.render())?;
        let ipr = LineChart::new("IPR versus time", Axis::log("t"), Axis::log("IPR"))
            .with_series(Series::new("IPR", ts(&record.diagnostics.ipr), Style::Line, 1));
        dir.text("ipr.svg", &ipr.render())?;
    }
    dir.metadata("simulate", cfg)?;
    Ok(Outcome::Complete)
}

/// Final observables across a parameter grid, with the manual estimates.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, plots: bool) -> CliResult<Outcome> {
    let dir = OutputDir::create(out)?;
    let kind = cfg.randomness.kind;
    let params = cfg.sweep_params();
    progress(&format!("sweep: {} points of {kind} at n_t = {}", params.len(), cfg.walk.n_t));
    let mut cache = GridCache::new(cfg.walk_config(), kind, cfg.walk.ipr_variant);
    let grid: SweepGrid = cache.grid(&params, 0)?;
    let labels = grid.labels(&cfg.peaks);
    let rows = grid.records.iter().zip(&labels).map(|(r, l)| vec![num(r.param), num(r.moi), num(r.ipr), l.as_str().to_string()]);
    dir.csv("sweep.csv", &[kind_label(kind), "MoI", "IPR", "peak_label"], rows)?;

    let results: Vec<(Method, Result<f64, CoreError>)> = vec![
        (Method::Human, human_method(&grid, &cfg.peaks)),
        (Method::Moi, moi_method(&grid)),
        (Method::Ipr, ipr_method(&grid, cfg.sweep.ipr_refine)),
    ];
    let rows = results.iter().map(|(m, r)| match r {
        Ok(v) => vec![m.as_str().to_string(), num(*v), String::new()],
        Err(e) => vec![m.as_str().to_string(), String::new(), e.to_string()],
    });
    dir.csv("estimates.csv", &["method", "critical_value", "error"], rows)?;

    if plots {
        let moi = LineChart::new("Final MoI", Axis::log(kind_label(kind)), Axis::log("MoI"))
            .with_series(Series::new("MoI", grid.moi_points(), Style::LineMarkers, 0));
        dir.text("sweep_moi.svg", &moi.render())?;
        let ipr = LineChart::new("Final IPR", Axis::linear(kind_label(kind)), Axis::linear("IPR"))
            .with_series(Series::new("IPR", grid.ipr_points(), Style::LineMarkers, 1));
        dir.text("sweep_ipr.svg", &ipr.render())?;
    }
    dir.metadata("sweep", cfg)?;

    let failures: Vec<&CoreError> = results.iter().filter_map(|(_, r)| r.as_ref().err()).collect();
    for (m, r) in &results {
        match r {
            Ok(v) => progress(&format!("{m}: {v}")),
            Err(e) => progress(&format!("{m}: {e}")),
        }
    }
    match failures.len() {
        0 => Ok(Outcome::Complete),
        n if n == results.len() => {
            let first = results.into_iter().find_map(|(_, r)| r.err()).unwrap();
            Err(CliError::Failure(first))
        }
        _ => Ok(Outcome::Partial),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlAction {
    Train,
    Scan,
    SampleSize,
    Regions,
}

fn classifier_spec(cfg: &ExperimentConfig) -> ClassifierSpec {
    match cfg.ml.classifier {
        ClassifierKind::Svm => ClassifierSpec::Svm(cfg.ml.svm),
        ClassifierKind::Mlp => ClassifierSpec::Mlp(cfg.ml.mlp.clone()),
    }
}

#[derive(Serialize)]
struct HoldoutReport<'a> {
    classifier: &'a str,
    holdout_accuracy: f64,
    warning: Option<&'a str>,
    n_samples: usize,
    delocalized_band: (f64, f64),
    localized_band: (f64, f64),
    training_fingerprint: &'a str,
    grid_search: Vec<GridSearchRow>,
}

#[derive(Serialize)]
struct GridSearchRow {
    hidden_layers: Vec<usize>,
    l2_alpha: f64,
    holdout_accuracy: f64,
}

pub fn cmd_ml(cfg: &ExperimentConfig, action: MlAction, out: &Path, plots: bool) -> CliResult<Outcome> {
    let dir = OutputDir::create(out)?;
    let outcome = match action {
        MlAction::Train => ml_train(cfg, &dir)?,
        MlAction::Scan => ml_scan(cfg, &dir, plots)?,
        MlAction::SampleSize => ml_sample_size(cfg, &dir, plots)?,
        MlAction::Regions => ml_regions(cfg, &dir)?,
    };
    dir.metadata(
        match action {
            MlAction::Train => "ml train",
            MlAction::Scan => "ml scan",
            MlAction::SampleSize => "ml samplesize",
            MlAction::Regions => "ml regions",
        },
        cfg,
    )?;
    Ok(outcome)
}

fn training_samples(cfg: &ExperimentConfig, bands: &TrainingBands) -> CliResult<Vec<qwloc_core::ml::Sample>> {
    progress(&format!("generating {} training samples", cfg.ml.n_samples));
    Ok(generate_training_set(&cfg.walk_config(), cfg.randomness.kind, bands, cfg.ml.n_samples, cfg.seed)?)
}

fn ml_train(cfg: &ExperimentConfig, dir: &OutputDir) -> CliResult<Outcome> {
    let bands = cfg.training_bands()?;
    let samples = training_samples(cfg, &bands)?;
    let spec = classifier_spec(cfg);
    let search = &cfg.ml.grid_search;
    let (model, table) = match &spec {
        ClassifierSpec::Mlp(p) if !search.hidden_layers.is_empty() => {
            progress("grid search over hidden layers and alpha");
            let alphas = if search.l2_alphas.is_empty() { vec![p.l2_alpha] } else { search.l2_alphas.clone() };
            let (m, t) = grid_search(&samples, &search.hidden_layers, &alphas, p, cfg.seed)?;
            let rows = t
                .into_iter()
                .map(|e| GridSearchRow { hidden_layers: e.hidden_layers, l2_alpha: e.l2_alpha, holdout_accuracy: e.holdout_accuracy })
                .collect();
            (Classifier::Mlp(m), rows)
        }
        _ => {
            progress(&format!("training {}", spec.method()));
            (spec.train(&samples, cfg.seed)?, Vec::new())
        }
    };
    save_model(&model, &dir.path("model.json"))?;
    let report = HoldoutReport {
        classifier: model.method().as_str(),
        holdout_accuracy: model.holdout_accuracy(),
        warning: model.warning(),
        n_samples: samples.len(),
        delocalized_band: bands.delocalized,
        localized_band: bands.localized,
        training_fingerprint: model.training_fingerprint(),
        grid_search: table,
    };
    dir.json("holdout_report.json", &report)?;
    progress(&format!("holdout accuracy {}", model.holdout_accuracy()));
    if let Some(w) = model.warning() {
        progress(&format!("warning: {w}"));
    }
    Ok(Outcome::Complete)
}

fn model_path(cfg: &ExperimentConfig, dir: &OutputDir) -> PathBuf {
    cfg.ml.model_path.as_ref().map(PathBuf::from).unwrap_or_else(|| dir.path("model.json"))
}

fn confusion_chart(curves: &[(String, &ConfusionCurve)], kind: ModelKind) -> LineChart {
    let mut chart = LineChart::new("Classification probability", Axis::linear(kind_label(kind)), Axis::linear("p"));
    for (i, (name, c)) in curves.iter().enumerate() {
        let deloc: Vec<(f64, f64)> = c.param_values.iter().copied().zip(c.p_delocalized.iter().copied()).collect();
        let loc: Vec<(f64, f64)> = deloc.iter().map(|&(x, p)| (x, 1.0 - p)).collect();
        chart = chart
            .with_series(Series::new(format!("{name} delocalized"), deloc, Style::LineMarkers, 2 * i))
            .with_series(Series::new(format!("{name} localized"), loc, Style::Dashed, 2 * i + 1));
    }
    chart
}

fn ml_scan(cfg: &ExperimentConfig, dir: &OutputDir, plots: bool) -> CliResult<Outcome> {
    let path = model_path(cfg, dir);
    let model = load_model(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let expected = 2 * cfg.walk.n_max + 1;
    if model.input_size() != expected {
        return Err(CliError::Config(format!(
            "model expects {} features but walk.n_max = {} gives {expected}",
            model.input_size(),
            cfg.walk.n_max
        )));
    }
    let params = cfg.sweep_params();
    progress(&format!("scanning {} points with the {} model", params.len(), model.method()));
    let mut cache = GridCache::new(cfg.walk_config(), cfg.randomness.kind, cfg.walk.ipr_variant);
    let grid = cache.grid(&params, 0)?;
    let curve = qwloc_core::ml::confusion_curve(&model, &grid.records)?;
    let rows = curve.param_values.iter().zip(&curve.p_delocalized).map(|(x, p)| vec![num(*x), num(*p)]);
    dir.csv("confusion.csv", &["param", "p_delocalized"], rows)?;
    if plots {
        dir.text("confusion.svg", &confusion_chart(&[(model.method().to_string(), &curve)], cfg.randomness.kind).render())?;
    }
    let rule = match model.rule() {
        qwloc_core::ml::CriticalRule::Crossing => "crossing",
        qwloc_core::ml::CriticalRule::FirstBelow => "first_below",
    };
    let critical = curve.critical_value(model.rule());
    let row = match &critical {
        Ok(v) => vec![model.method().as_str().to_string(), rule.to_string(), num(*v)],
        Err(_) => vec![model.method().as_str().to_string(), rule.to_string(), String::new()],
    };
    dir.csv("critical.csv", &["method", "rule", "critical_value"], [row])?;
    let v = critical?;
    progress(&format!("critical value {v}"));
    Ok(Outcome::Complete)
}

fn ml_sample_size(cfg: &ExperimentConfig, dir: &OutputDir, plots: bool) -> CliResult<Outcome> {
    let bands = cfg.training_bands()?;
    let spec = classifier_spec(cfg);
    progress(&format!("sample-size study for sizes {:?}, {} repetitions", cfg.ml.sample_sizes, cfg.ml.repetitions));
    let table = sample_size_study(
        &cfg.walk_config(),
        cfg.randomness.kind,
        &bands,
        &cfg.ml.sample_sizes,
        cfg.ml.repetitions,
        &cfg.sweep_params(),
        &spec,
        cfg.seed,
    )?;
    let rows = table.iter().flat_map(|r| r.estimates.iter().enumerate().map(move |(i, v)| vec![r.size.to_string(), i.to_string(), num(*v)]));
    dir.csv("samplesize.csv", &["size", "estimate", "critical_value"], rows)?;
    let rows = table.iter().map(|r| vec![r.size.to_string(), r.estimates.len().to_string(), r.failures.to_string(), num(r.spread())]);
    dir.csv("samplesize_summary.csv", &["size", "estimates", "failures", "spread"], rows)?;
    if plots {
        let pts: Vec<(f64, f64)> = table.iter().flat_map(|r| r.estimates.iter().map(move |&v| (r.size as f64, v))).collect();
        let chart = LineChart::new("Critical value versus training-set size", Axis::linear("samples"), Axis::linear("critical value"))
            .with_series(Series::new(spec.method().as_str(), pts, Style::Markers, 0));
        dir.text("samplesize.svg", &chart.render())?;
    }
    let any_fail = table.iter().any(|r| r.failures > 0);
    Ok(if any_fail { Outcome::Partial } else { Outcome::Complete })
}

fn ml_regions(cfg: &ExperimentConfig, dir: &OutputDir) -> CliResult<Outcome> {
    let bands = cfg.training_bands()?;
    let samples = training_samples(cfg, &bands)?;
    let spec = classifier_spec(cfg);
    let mut cache = GridCache::new(cfg.walk_config(), cfg.randomness.kind, cfg.walk.ipr_variant);
    let grid = cache.grid(&cfg.sweep_params(), 0)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for &region in &cfg.ml.regions {
        progress(&format!("region {region}: training {}", spec.method()));
        let split: Vec<_> = samples.iter().map(|s| region_split(s, region)).collect::<Result<_, _>>()?;
        let len = split[0].features.len();
        let result = spec.train(&split, cfg.seed).and_then(|model| {
            let p = grid
                .records
                .iter()
                .map(|r| model.p_delocalized(&region_features(&r.distribution.values, region)?))
                .collect::<Result<Vec<_>, _>>()?;
            let curve = ConfusionCurve::new(grid.param_values.clone(), p)?;
            Ok((model.holdout_accuracy(), curve.critical_value(model.rule())))
        });
        match result {
            Ok((acc, Ok(v))) => rows.push(vec![region.to_string(), len.to_string(), num(acc), num(v), String::new()]),
            Ok((acc, Err(e))) => {
                failed += 1;
                rows.push(vec![region.to_string(), len.to_string(), num(acc), String::new(), e.to_string()]);
            }
            Err(e) => {
                failed += 1;
                rows.push(vec![region.to_string(), len.to_string(), String::new(), String::new(), e.to_string()]);
            }
        }
    }
    dir.csv("regions.csv", &["region", "feature_length", "holdout_accuracy", "critical_value", "error"], rows)?;
    match failed {
        0 => Ok(Outcome::Complete),
        n if n == cfg.ml.regions.len() => Err(CliError::Failure(CoreError::NoTransition)),
        _ => Ok(Outcome::Partial),
    }
}

fn write_scaling(dir: &OutputDir, kind: ModelKind, res: &ScalingResult, plots: bool) -> CliResult<()> {
    let mut est = res.estimates.clone();
    est.sort_by(|a, b| a.method.cmp(&b.method).then(a.n.cmp(&b.n)));
    let rows = est.iter().map(|e| vec![e.method.as_str().to_string(), e.n.to_string(), num(e.critical_value)]);
    dir.csv("criticals.csv", &["method", "N", "critical_value"], rows)?;
    let rows = res.summaries.iter().map(|s| match s.fit {
        Some(f) => vec![s.method.as_str().to_string(), num(f.exponent), num(f.r_squared), num(f.prefactor), s.reliable.to_string()],
        None => vec![s.method.as_str().to_string(), String::new(), String::new(), String::new(), s.reliable.to_string()],
    });
    dir.csv("exponents.csv", &["method", "exponent", "r_squared", "prefactor", "reliable"], rows)?;
    let rows = res
        .summaries
        .iter()
        .flat_map(|s| s.failures.iter().map(move |(n, e)| vec![s.method.as_str().to_string(), n.to_string(), e.clone()]));
    dir.csv("failures.csv", &["method", "N", "error"], rows)?;
    if plots {
        let mut chart = LineChart::new(format!("Critical value versus size ({kind})"), Axis::log("N"), Axis::log("critical value"));
        for (i, s) in res.summaries.iter().enumerate() {
            let pts: Vec<(f64, f64)> = est.iter().filter(|e| e.method == s.method).map(|e| (e.n as f64, e.critical_value)).collect();
            if let (Some(f), Some(lo), Some(hi)) = (s.fit, pts.first(), pts.last()) {
                let line = vec![(lo.0, f.predict(lo.0)), (hi.0, f.predict(hi.0))];
                chart = chart.with_series(Series::new(format!("{} fit", s.method), line, Style::Dashed, i));
            }
            chart = chart.with_series(Series::new(s.method.as_str(), pts, Style::Markers, i));
        }
        dir.text("scaling.svg", &chart.render())?;
    }
    Ok(())
}

/// Critical values versus size for every configured model kind; each kind
/// writes into its own subdirectory.
pub fn cmd_scaling(cfg: &ExperimentConfig, out: &Path, plots: bool) -> CliResult<Outcome> {
    // checked here rather than at load time so that other commands can
    // run on lattices smaller than the scaling sizes
    if let Some(&n) = cfg.scaling.n_values.iter().find(|&&n| n > cfg.walk.n_max) {
        return Err(CliError::Config(format!("scaling.n_values: {n} exceeds walk.n_max ({})", cfg.walk.n_max)));
    }
    let dir = OutputDir::create(out)?;
    let mut outcome = Outcome::Complete;
    let mut any_estimate = false;
    let mut first_error = None;
    for &kind in &cfg.scaling.kinds {
        let sub = dir.subdir(kind.as_str())?;
        let res = scaling_sweep(&cfg.scaling_config(kind), &mut |m| progress(&format!("scaling {kind}: {m}")))?;
        write_scaling(&sub, kind, &res, plots)?;
        for s in &res.summaries {
            match s.fit {
                Some(f) => progress(&format!("{kind} {}: exponent {} (r^2 {}){}", s.method, f.exponent, f.r_squared, if s.reliable { "" } else { ", unreliable" })),
                None => progress(&format!("{kind} {}: no fit", s.method)),
            }
            if first_error.is_none() {
                first_error = s.failures.first().map(|(_, e)| e.clone());
            }
        }
        any_estimate |= !res.estimates.is_empty();
        if res.has_failures() {
            outcome = Outcome::Partial;
        }
    }
    dir.metadata("scaling", cfg)?;
    if !any_estimate && !cfg.scaling.kinds.is_empty() {
        return Err(CliError::Failure(CoreError::RegimeCoverage(first_error.unwrap_or_else(|| "no method produced an estimate".into()))));
    }
    Ok(outcome)
}
