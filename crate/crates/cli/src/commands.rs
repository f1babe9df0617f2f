use std::path::{Path, PathBuf};

use scanfuse::boostnet::{predict_map, train_boost_with_report, BoostEnsemble};
use scanfuse::experiment::{run_fig6, Fig6Config};
use scanfuse::featsel::{
    column_groups, fit_grouped_pca, fit_pca_clamped, shapley_importance, transform_grouped_pca, transform_pca,
    GroupedPca, ImportanceReport, PcaModel,
};
use scanfuse::fusion::{
    fuse_baseline, fuse_dataset, grid_search_lambda, BaselineKind, LearnedFusion, MeasureMode, SortMode,
};
use scanfuse::imgprep::{preprocess, read_pgm, write_pgm, PrepRecord};
use scanfuse::metrics::{evaluate, LikelihoodForm};
use scanfuse::synth::{
    brute_force_fuse_limited, generate_confidence_dataset, generate_feature_dataset, SynthConfig,
};
use scanfuse::{confmap, Dataset, FeatureTable, FusedScan, FusionConfig};
use serde::{Deserialize, Serialize};

use crate::run::{sibling_manifest, CliError, Run};
use crate::tables::{read_confmap, read_labels, read_predictions, write_labels, write_predictions};

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v).map_err(scanfuse::Error::from)?;
    b.push(b'\n');
    Ok(b)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> scanfuse::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_table(run: &mut Run, path: &Path) -> Result<FeatureTable, CliError> {
    let bytes = run.read(path)?;
    let labels = run.config.label_space()?;
    Ok(FeatureTable::read_csv(bytes.as_slice(), &labels)?)
}

// ---------------------------------------------------------------- prep

pub fn prep(mut run: Run, input: &Path, output: &Path) -> Result<String, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| CliError::io(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no .pgm files in {}", input.display())));
    }
    #[derive(Serialize)]
    struct Entry {
        file: String,
        #[serde(flatten)]
        record: PrepRecord,
    }
    let (w, h) = (run.config.prep.width, run.config.prep.height);
    let mut records = Vec::with_capacity(files.len());
    for path in &files {
        let bytes = run.read(path)?;
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
        let img = read_pgm(&bytes).map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        let (out, record) = preprocess(&img, w, h).map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        run.stage(output.join(&name), write_pgm(&out));
        records.push(Entry { file: name, record });
    }
    run.stage(output.join("prep.json"), json_bytes(&records)?);
    run.commit(&output.join("manifest.json"))?;
    Ok(format!("preprocessed {} image(s) to {w}x{h}", files.len()))
}

// ---------------------------------------------------------------- select

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Projection {
    Pooled { model: PcaModel },
    Grouped { model: GroupedPca },
}

/// Fitted projection plus the screened component indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Selection {
    pub projection: Projection,
    pub importance: ImportanceReport,
}

impl Selection {
    pub fn apply(&self, t: &FeatureTable) -> scanfuse::Result<FeatureTable> {
        let projected = match &self.projection {
            Projection::Pooled { model } => transform_pca(model, t)?,
            Projection::Grouped { model } => transform_grouped_pca(model, t)?,
        };
        projected.select_columns(&self.importance.selected)
    }
}

pub fn select(mut run: Run, input: &Path, output_dir: &Path, apply: Option<&Path>) -> Result<String, CliError> {
    let table = read_table(&mut run, input)?;
    let selection: Selection = match apply {
        Some(path) => {
            let bytes = run.read(path)?;
            serde_json::from_slice(&bytes).map_err(scanfuse::Error::from)?
        }
        None => fit_selection(&run, &table)?,
    };
    let selected = selection.apply(&table)?;
    let labels = run.config.label_space()?;
    run.stage(output_dir.join("selected.csv"), csv_bytes(|b| selected.write_csv(&labels, b))?);
    if apply.is_none() {
        run.stage(output_dir.join("selection.json"), json_bytes(&selection)?);
    }
    run.commit(&output_dir.join("manifest.json"))?;
    Ok(format!(
        "kept {} of {} component(s): {}",
        selection.importance.selected.len(),
        selection.importance.feature_names.len(),
        selection.importance.selected_names.join(",")
    ))
}

fn fit_selection(run: &Run, table: &FeatureTable) -> Result<Selection, CliError> {
    let cfg = &run.config.selection;
    let projection = match cfg.group_separator {
        Some(sep) => Projection::Grouped { model: fit_grouped_pca(table, &column_groups(table, sep), cfg.pca_components)? },
        None => Projection::Pooled { model: fit_pca_clamped(table, cfg.pca_components)? },
    };
    let projected = match &projection {
        Projection::Pooled { model } => transform_pca(model, table)?,
        Projection::Grouped { model } => transform_grouped_pca(model, table)?,
    };
    if projected.labels().is_none() {
        return Err(CliError::Data(scanfuse::Error::MissingLabels("screening needs a labeled table".into())));
    }
    let classes = run.config.classes.len();
    let ensemble = scanfuse::boostnet::train_boost(&projected, classes, &run.config.train)?;
    let rows: Vec<usize> = (0..projected.n_samples().min(cfg.explain_rows)).collect();
    let explained = projected.select_rows(&rows)?;
    let model = |x: &[f64]| ensemble.predict(x).map(|p| p.into_inner()).unwrap_or_else(|_| vec![0.0; classes]);
    let mut importance = shapley_importance(&model, &explained, &projected, cfg.shapley, run.config.seed)?;
    importance.reselect(cfg.threshold);
    Ok(Selection { projection, importance })
}

// ---------------------------------------------------------------- train / predict

pub fn train(mut run: Run, input: &Path, output: &Path) -> Result<String, CliError> {
    let table = read_table(&mut run, input)?;
    let (ensemble, rounds) = train_boost_with_report(&table, run.config.classes.len(), &run.config.train)?;
    run.stage(output, ensemble.to_json()?.into_bytes());
    let summary: Vec<String> =
        rounds.iter().map(|r| format!("err={:.4} weight={:.4}", r.weighted_error, r.component_weight)).collect();
    run.commit(&sibling_manifest(output))?;
    Ok(format!("trained {} component(s): {}", rounds.len(), summary.join("; ")))
}

pub fn predict(mut run: Run, model: &Path, input: &Path, output: &Path) -> Result<String, CliError> {
    let bytes = run.read(model)?;
    let ensemble = BoostEnsemble::from_json(std::str::from_utf8(&bytes).map_err(|e| CliError::Failed(e.to_string()))?)?;
    let table = read_table(&mut run, input)?;
    let d = predict_map(&ensemble, &table, &run.config.label_space()?)?;
    run.stage(output, csv_bytes(|b| confmap::write_csv(&d, b))?);
    run.commit(&sibling_manifest(output))?;
    Ok(format!("predicted {} slice(s) in {} scan(s)", d.slice_count(), d.scans.len()))
}

// ---------------------------------------------------------------- fuse

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FuseMethod {
    /// Choquet fusion with λ solved per scan.
    Exact,
    /// Choquet fusion with one λ, given or grid-searched on a validation set.
    Grid,
    /// Class-wise mean over slices.
    Mean,
    /// Vote of per-slice argmax decisions.
    Majority,
    /// Boosted network over per-scan summary statistics.
    Learned,
}

pub struct FuseArgs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub method: FuseMethod,
    pub validation: Option<&'a Path>,
    pub model: Option<&'a Path>,
}

pub fn fuse(mut run: Run, args: FuseArgs<'_>) -> Result<String, CliError> {
    let bytes = run.read(args.input)?;
    let data = read_confmap(&bytes, args.input)?;
    let validation = |run: &mut Run| -> Result<Dataset, CliError> {
        let path = args
            .validation
            .ok_or_else(|| CliError::Usage(format!("--method {:?} needs --validation", args.method).to_lowercase()))?;
        let bytes = run.read(path)?;
        read_confmap(&bytes, path)
    };
    let fusion = run.config.fusion.clone();
    let mut note = String::new();
    let fused: Vec<FusedScan> = match args.method {
        FuseMethod::Exact => fuse_dataset(&data, &FusionConfig { measure: MeasureMode::Exact, ..fusion })?,
        FuseMethod::Grid => {
            let lambda = match fusion.lambda {
                Some(l) => l,
                None => {
                    let v = validation(&mut run)?;
                    let search = grid_search_lambda(&v, &fusion)?;
                    note = format!(" (grid λ {:.2} at validation accuracy {:.4})", search.lambda, search.accuracy);
                    search.lambda
                }
            };
            fuse_dataset(&data, &fusion.with_lambda(lambda))?
        }
        FuseMethod::Mean | FuseMethod::Majority => {
            let kind = if args.method == FuseMethod::Mean { BaselineKind::Mean } else { BaselineKind::Majority };
            data.scans.iter().map(|s| fuse_baseline(s, kind, None)).collect::<scanfuse::Result<_>>()?
        }
        FuseMethod::Learned => {
            let model = match args.model {
                Some(path) => {
                    let bytes = run.read(path)?;
                    LearnedFusion::from_json(std::str::from_utf8(&bytes).map_err(|e| CliError::Failed(e.to_string()))?)?
                }
                None => LearnedFusion::train(&validation(&mut run)?, &run.config.train)?,
            };
            data.scans
                .iter()
                .map(|s| fuse_baseline(s, BaselineKind::Learned, Some(&model)))
                .collect::<scanfuse::Result<_>>()?
        }
    };
    run.stage(args.output, write_predictions(&data.label_space, &fused)?);
    run.commit(&sibling_manifest(args.output))?;
    Ok(format!("fused {} scan(s) with {:?}{note}", fused.len(), args.method).to_lowercase())
}

// ---------------------------------------------------------------- eval

pub fn eval(mut run: Run, predictions: &Path, labels: &Path, output: &Path) -> Result<String, CliError> {
    let bytes = run.read(predictions)?;
    let (space, rows) = read_predictions(&bytes)?;
    let bytes = run.read(labels)?;
    let truth = read_labels(&bytes, &space)?;
    let mut y_true = Vec::with_capacity(rows.len());
    let mut missing = Vec::new();
    for r in &rows {
        match truth.get(&r.scan_id) {
            Some(y) => y_true.push(*y),
            None => missing.push(r.scan_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Data(scanfuse::Error::MissingLabels(format!(
            "no label for {} scan(s), first `{}`",
            missing.len(),
            missing[0]
        ))));
    }
    let y_pred: Vec<usize> = rows.iter().map(|r| r.prediction).collect();
    // fit statistics need probability vectors; scores are rescaled to sum to one
    let probs: Option<Vec<Vec<f64>>> = rows
        .iter()
        .map(|r| {
            let s: f64 = r.scores.iter().sum();
            (s > 0.0 && r.scores.iter().all(|v| *v >= 0.0)).then(|| r.scores.iter().map(|v| (v / s).min(1.0)).collect())
        })
        .collect();
    let form: LikelihoodForm = run.config.eval.likelihood;
    let report = evaluate(&space, &y_true, &y_pred, probs.as_deref(), form)?;
    run.stage(output, json_bytes(&report)?);
    run.commit(&sibling_manifest(output))?;
    Ok(report.to_text())
}

// ---------------------------------------------------------------- synth

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// The default class counts, 1947 scans in total.
    Default,
    /// A fifth of the default class counts, as used by `fig6`.
    Fig6,
}

pub fn preset_config(run: &Run, preset: Option<Preset>) -> Result<SynthConfig, CliError> {
    let base = match preset {
        None => run.config.synth.clone(),
        Some(Preset::Default) => SynthConfig::default(),
        Some(Preset::Fig6) => SynthConfig::fig6(),
    };
    let cfg = SynthConfig { seed: run.config.seed, classes: run.config.classes.clone(), ..base };
    cfg.validate().map_err(|e| CliError::Usage(format!("invalid synth config: {e}")))?;
    Ok(cfg)
}

pub fn synth(mut run: Run, output_dir: &Path, preset: Option<Preset>) -> Result<String, CliError> {
    let cfg = preset_config(&run, preset)?;
    run.config.synth = cfg.clone();
    let d = generate_confidence_dataset(&cfg)?;
    let features = generate_feature_dataset(&cfg)?;
    run.stage(output_dir.join("confmap.csv"), csv_bytes(|b| confmap::write_csv(&d, b))?);
    run.stage(output_dir.join("labels.csv"), write_labels(&d)?);
    run.stage(output_dir.join("features.csv"), csv_bytes(|b| features.write_csv(&d.label_space, b))?);
    run.commit(&output_dir.join("manifest.json"))?;
    Ok(format!(
        "generated {} scan(s) with {} slice(s) and a {}x{} feature table",
        d.scans.len(),
        d.slice_count(),
        features.n_samples(),
        features.n_features()
    ))
}

// ---------------------------------------------------------------- oracle

#[derive(Serialize)]
struct OracleReport {
    checked: usize,
    skipped: usize,
    max_slices: usize,
    tolerance: f64,
    max_abs_difference: f64,
    mismatches: Vec<String>,
}

pub fn oracle(
    mut run: Run,
    input: Option<&Path>,
    preset: Option<Preset>,
    output: Option<&Path>,
) -> Result<String, CliError> {
    let data = match input {
        Some(path) => {
            let bytes = run.read(path)?;
            read_confmap(&bytes, path)?
        }
        None => {
            let cfg = preset_config(&run, preset.or(Some(Preset::Fig6)))?;
            run.config.synth = cfg.clone();
            generate_confidence_dataset(&cfg)?
        }
    };
    let limit = run.config.oracle.max_slices;
    let tol = run.config.oracle.tolerance;
    let classical = FusionConfig { measure: MeasureMode::Exact, sort: SortMode::Classical, ..run.config.fusion.clone() };
    let mut report =
        OracleReport { checked: 0, skipped: 0, max_slices: limit, tolerance: tol, max_abs_difference: 0.0, mismatches: vec![] };
    for scan in &data.scans {
        if scan.len() > limit {
            report.skipped += 1;
            continue;
        }
        let oracle = brute_force_fuse_limited(scan, limit)?;
        let fused = scanfuse::fusion::choquet_fuse(scan, &classical)?;
        let diff = oracle.fused.values.iter().zip(&fused.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.max_abs_difference = report.max_abs_difference.max(diff);
        if diff > tol {
            report.mismatches.push(scan.scan_id.clone());
        }
        report.checked += 1;
    }
    if let Some(out) = output {
        run.stage(out, json_bytes(&report)?);
        run.commit(&sibling_manifest(out))?;
    }
    if !report.mismatches.is_empty() {
        return Err(CliError::Failed(format!(
            "{} of {} scan(s) differ from the enumeration oracle by more than {tol:e}, first `{}`",
            report.mismatches.len(),
            report.checked,
            report.mismatches[0]
        )));
    }
    Ok(format!(
        "all {} scans matched within {tol:e} (max difference {:e}); {} scan(s) above {limit} slices skipped",
        report.checked, report.max_abs_difference, report.skipped
    ))
}

// ---------------------------------------------------------------- fig6

pub fn fig6(mut run: Run, output_dir: &Path) -> Result<String, CliError> {
    let synth = SynthConfig { seed: run.config.seed, classes: run.config.classes.clone(), ..SynthConfig::fig6() };
    run.config.synth = synth.clone();
    let cfg = Fig6Config {
        seed: run.config.seed,
        synth,
        fusion: run.config.fusion.clone(),
        train: run.config.train.clone(),
    };
    let result = run_fig6(&cfg)?;
    let table = result.outcome.to_text();
    run.stage(output_dir.join("train_confmap.csv"), csv_bytes(|b| confmap::write_csv(&result.train, b))?);
    run.stage(output_dir.join("test_confmap.csv"), csv_bytes(|b| confmap::write_csv(&result.test, b))?);
    run.stage(output_dir.join("test_labels.csv"), write_labels(&result.test)?);
    for (method, fused) in &result.predictions {
        run.stage(
            output_dir.join("predictions").join(format!("{method}.csv")),
            write_predictions(&result.test.label_space, fused)?,
        );
    }
    let reports: serde_json::Map<String, serde_json::Value> = result
        .reports
        .iter()
        .map(|(m, r)| Ok((m.clone(), serde_json::to_value(r).map_err(scanfuse::Error::from)?)))
        .collect::<Result<_, CliError>>()?;
    run.stage(output_dir.join("fig6.json"), json_bytes(&result.outcome)?);
    run.stage(output_dir.join("fig6_reports.json"), json_bytes(&reports)?);
    run.stage(output_dir.join("fig6.txt"), table.clone().into_bytes());
    run.commit(&output_dir.join("manifest.json"))?;
    Ok(table)
}
