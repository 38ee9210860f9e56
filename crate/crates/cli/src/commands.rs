use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use phonation::corpus::{ingest_clip, load_manifest};
use phonation::dsp::BaselineExtractor;
use phonation::embed::{write_store, FeatureStore, LayerEmbeddingSet, ModelSpec};
use phonation::evaluate::{
    cross_validate, layer_sweep, stratified_folds, EvalReport, FoldSplit, LayerSweepResult, LookupOracle,
};
use phonation::learn::{Gbdt, KernelKind, Svm};
use phonation::{ClipMeta, FeatureKind, FeatureVector, PhonationMode, TARGET_SAMPLE_RATE};
use rayon::prelude::*;

use crate::grids::GridConfig;
use crate::plot::layer_chart_svg;
use crate::{ClassifierChoice, UsageError};

pub type Labels = BTreeMap<String, PhonationMode>;

#[derive(Debug, Clone)]
pub struct FeaturesConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub kinds: Vec<FeatureKind>,
}

#[derive(Debug, Clone)]
pub struct EvaluateConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub kinds: Vec<FeatureKind>,
    pub stores: Vec<PathBuf>,
    /// Layers taken from each store; `None` means all.
    pub layers: Option<Vec<usize>>,
    pub classifiers: Vec<ClassifierChoice>,
    pub kernel: KernelKind,
    pub grids: GridConfig,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub stores: Vec<PathBuf>,
    pub classifiers: Vec<ClassifierChoice>,
    pub kernel: KernelKind,
    pub grids: GridConfig,
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn load_labels(manifest: &Path) -> anyhow::Result<(Vec<ClipMeta>, Labels)> {
    let metas = load_manifest(manifest)?;
    if metas.is_empty() {
        bail!(UsageError(format!("manifest {} lists no clips", manifest.display())));
    }
    let labels = metas.iter().map(|m| (m.id.clone(), m.label)).collect();
    Ok((metas, labels))
}

/// Baseline features for every clip, in manifest order, plus per-clip failures.
fn extract_baseline(
    metas: &[ClipMeta],
    kinds: &[FeatureKind],
) -> (Vec<(String, Vec<FeatureVector>)>, Vec<(String, String)>) {
    let extractor = BaselineExtractor::standard();
    let results: Vec<(String, Result<Vec<FeatureVector>, phonation::Error>)> = metas
        .par_iter()
        .map(|m| {
            let r = ingest_clip(m, TARGET_SAMPLE_RATE)
                .and_then(|clip| kinds.iter().map(|&k| extractor.feature(k, clip.samples())).collect());
            (m.id.clone(), r)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => {
                log::error!("clip {id}: {e}");
                failed.push((id, e.to_string()));
            }
        }
    }
    (ok, failed)
}

fn failure_error(failed: &[(String, String)]) -> anyhow::Error {
    let mut msg = format!("{} clip(s) failed:", failed.len());
    for (id, e) in failed {
        let _ = write!(msg, "\n  {id}: {e}");
    }
    anyhow::anyhow!(msg)
}

/// CSV with `id,kind,layer,v0..` and shortest round-trip floats.
pub fn features_csv(rows: &[(String, FeatureVector)]) -> String {
    let dim = rows.first().map_or(0, |r| r.1.dim());
    let mut s = String::from("id,kind,layer");
    (0..dim).for_each(|i| {
        let _ = write!(s, ",v{i}");
    });
    s.push('\n');
    for (id, v) in rows {
        let layer = v.layer.map(|l| l.to_string()).unwrap_or_default();
        let _ = write!(s, "{id},{},{layer}", v.kind);
        for x in &v.values {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturesSummary {
    pub clips: usize,
    pub dims: Vec<(FeatureKind, usize)>,
}

/// Extracts baseline features, writing `features_<kind>.csv` and a pooled
/// single-layer `features_<kind>.v2me` store per kind.
pub fn cmd_features(cfg: &FeaturesConfig) -> anyhow::Result<FeaturesSummary> {
    let metas = load_manifest(&cfg.manifest)?;
    create_dir(&cfg.out)?;
    let (ok, failed) = extract_baseline(&metas, &cfg.kinds);
    let mut dims = Vec::new();
    for (i, &kind) in cfg.kinds.iter().enumerate() {
        let rows: Vec<(String, FeatureVector)> = ok.iter().map(|(id, v)| (id.clone(), v[i].clone())).collect();
        let dim = kind.baseline_dim().unwrap_or(0);
        write(&cfg.out.join(format!("features_{kind}.csv")), &features_csv(&rows))?;
        if !rows.is_empty() {
            let model = ModelSpec::custom(kind.as_str(), 0, dim);
            let sets = rows
                .iter()
                .map(|(id, v)| {
                    LayerEmbeddingSet::from_pooled(id, model.clone(), vec![v.values.iter().map(|&x| x as f32).collect()])
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_store(cfg.out.join(format!("features_{kind}.v2me")), &sets)?;
        }
        println!("{kind}: {} clips x {dim} dims", rows.len());
        dims.push((kind, dim));
    }
    if !failed.is_empty() {
        return Err(failure_error(&failed));
    }
    Ok(FeaturesSummary { clips: ok.len(), dims })
}

fn run_cv(
    choice: ClassifierChoice,
    cfg_kernel: KernelKind,
    grids: &GridConfig,
    seed: u64,
    features: &HashMap<String, FeatureVector>,
    labels: &Labels,
    split: &FoldSplit,
) -> anyhow::Result<EvalReport> {
    let dim = features.values().next().map_or(0, FeatureVector::dim);
    let mut report = match choice {
        ClassifierChoice::Svm => cross_validate(&Svm, &grids.svm_grid(cfg_kernel, dim)?, features, labels, split)?,
        ClassifierChoice::Xgb => cross_validate(&Gbdt, &grids.xgb_grid(seed)?, features, labels, split)?,
        ClassifierChoice::Oracle => {
            let oracle = oracle(features, labels);
            cross_validate(&oracle, &[()], features, labels, split)?
        }
    };
    report.classifier = choice.label(cfg_kernel);
    Ok(report)
}

fn oracle(features: &HashMap<String, FeatureVector>, labels: &Labels) -> LookupOracle {
    LookupOracle::new(
        labels
            .iter()
            .filter_map(|(id, m)| features.get(id).map(|f| (f.values.as_slice(), m.index()))),
    )
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// `feature,layer,classifier,mean,std` with percentages to one decimal.
pub fn results_table(reports: &[EvalReport]) -> String {
    let mut s = String::from("feature,layer,classifier,mean,std\n");
    for r in reports {
        let layer = r.layer.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{layer},{},{},{}",
            r.feature_name(),
            r.classifier,
            pct(r.mean_accuracy),
            pct(r.std_accuracy)
        );
    }
    s
}

fn results_detail(reports: &[EvalReport]) -> String {
    let k = reports.iter().map(|r| r.k).max().unwrap_or(0);
    let mut s = EvalReport::csv_header(k);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn print_table(reports: &[EvalReport]) {
    for r in reports {
        println!(
            "{:<24} {:<12} {:>5} ± {}",
            r.descriptor(),
            r.classifier,
            pct(r.mean_accuracy),
            pct(r.std_accuracy)
        );
    }
}

fn write_run(out: &Path, r: &EvalReport) -> anyhow::Result<()> {
    let name = slug(&format!("{}_{}", r.descriptor(), r.classifier));
    write(&out.join("runs").join(format!("{name}.json")), &(serde_json::to_string_pretty(r)? + "\n"))?;
    let conf = out.join("confusion");
    write(&conf.join(format!("{name}_counts.csv")), &r.confusion.to_csv(false))?;
    write(&conf.join(format!("{name}_percent.csv")), &r.confusion.to_csv(true))?;
    Ok(())
}

fn write_split(out: &Path, split: &FoldSplit) -> anyhow::Result<()> {
    write(&out.join("split.json"), &(serde_json::to_string_pretty(split)? + "\n"))
}

fn open_store(path: &Path) -> anyhow::Result<FeatureStore> {
    FeatureStore::open(path).with_context(|| format!("opening store {}", path.display()))
}

/// Cross-validates every selected feature with every selected classifier on
/// one shared fold split.
pub fn cmd_evaluate(cfg: &EvaluateConfig) -> anyhow::Result<Vec<EvalReport>> {
    if cfg.kinds.is_empty() && cfg.stores.is_empty() {
        bail!(UsageError("select at least one feature kind or store".into()));
    }
    if cfg.classifiers.is_empty() {
        bail!(UsageError("select at least one classifier".into()));
    }
    let (metas, labels) = load_labels(&cfg.manifest)?;
    let split = stratified_folds(&labels, cfg.k, cfg.seed)?;
    create_dir(&cfg.out.join("runs"))?;
    create_dir(&cfg.out.join("confusion"))?;
    write_split(&cfg.out, &split)?;

    let mut feature_sets: Vec<HashMap<String, FeatureVector>> = Vec::new();
    if !cfg.kinds.is_empty() {
        let (ok, failed) = extract_baseline(&metas, &cfg.kinds);
        if !failed.is_empty() {
            return Err(failure_error(&failed));
        }
        for i in 0..cfg.kinds.len() {
            feature_sets.push(ok.iter().map(|(id, v)| (id.clone(), v[i].clone())).collect());
        }
    }
    for path in &cfg.stores {
        let store = open_store(path)?;
        let n_layers = store.model().n_layers;
        let layers: Vec<usize> = match &cfg.layers {
            Some(ls) => ls.clone(),
            None => (0..=n_layers).collect(),
        };
        for l in layers {
            if l > n_layers {
                bail!(UsageError(format!(
                    "layer {l} not in {} (layers 0..={n_layers})",
                    path.display()
                )));
            }
            feature_sets.push(store.pooled_layer(l)?.into_iter().collect());
        }
    }

    let mut reports = Vec::new();
    for features in &feature_sets {
        for &choice in &cfg.classifiers {
            let r = run_cv(choice, cfg.kernel, &cfg.grids, cfg.seed, features, &labels, &split)?;
            log::info!("{} {}: {}", r.descriptor(), r.classifier, pct(r.mean_accuracy));
            write_run(&cfg.out, &r)?;
            reports.push(r);
        }
    }
    write(&cfg.out.join("results_table.csv"), &results_table(&reports))?;
    write(&cfg.out.join("results_detail.csv"), &results_detail(&reports))?;
    print_table(&reports);
    Ok(reports)
}

fn sweep_for(
    choice: ClassifierChoice,
    cfg: &SweepConfig,
    store: &FeatureStore,
    labels: &Labels,
    split: &FoldSplit,
) -> anyhow::Result<LayerSweepResult> {
    let dim = store.model().hidden_dim;
    let mut result = match choice {
        ClassifierChoice::Svm => {
            layer_sweep(&Svm, &cfg.grids.svm_grid(cfg.kernel, dim)?, store, labels, split)?
        }
        ClassifierChoice::Xgb => layer_sweep(&Gbdt, &cfg.grids.xgb_grid(cfg.seed)?, store, labels, split)?,
        ClassifierChoice::Oracle => {
            // one lookup table per layer, since each layer has its own rows
            let reports = (0..=store.model().n_layers)
                .map(|l| {
                    let f: HashMap<String, FeatureVector> = store.pooled_layer(l)?.into_iter().collect();
                    let o = oracle(&f, labels);
                    Ok(cross_validate(&o, &[()], &f, labels, split)?)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            LayerSweepResult {
                model_id: store.model().model_id.clone(),
                classifier: String::new(),
                reports,
            }
        }
    };
    let label = choice.label(cfg.kernel);
    result.classifier = label.clone();
    result.reports.iter_mut().for_each(|r| r.classifier = label.clone());
    Ok(result)
}

/// Writes the per-layer CSV, JSON and SVG of a sweep.
pub fn write_sweep(out: &Path, s: &LayerSweepResult) -> anyhow::Result<()> {
    let name = slug(&format!("sweep_{}_{}", s.model_id, s.classifier));
    write(&out.join(format!("{name}.csv")), &s.to_csv())?;
    write(&out.join(format!("{name}.json")), &(serde_json::to_string_pretty(s)? + "\n"))?;
    let points: Vec<_> = s
        .reports
        .iter()
        .enumerate()
        .map(|(l, r)| (l, r.mean_accuracy, r.std_accuracy))
        .collect();
    write(
        &out.join(format!("{name}.svg")),
        &layer_chart_svg(&format!("{} / {}", s.model_id, s.classifier), &points),
    )
}

fn print_best(s: &LayerSweepResult) {
    let b = s.best_layer();
    let r = &s.reports[b];
    println!(
        "{} {}: best layer {b} ({} ± {})",
        s.model_id,
        s.classifier,
        pct(r.mean_accuracy),
        pct(r.std_accuracy)
    );
}

/// Layer-wise evaluation of every store with every classifier.
pub fn cmd_sweep(cfg: &SweepConfig) -> anyhow::Result<Vec<LayerSweepResult>> {
    if cfg.stores.is_empty() {
        bail!(UsageError("sweep needs at least one --store".into()));
    }
    if cfg.classifiers.is_empty() {
        bail!(UsageError("select at least one classifier".into()));
    }
    let (_, labels) = load_labels(&cfg.manifest)?;
    let split = stratified_folds(&labels, cfg.k, cfg.seed)?;
    create_dir(&cfg.out)?;
    write_split(&cfg.out, &split)?;
    let mut results = Vec::new();
    for path in &cfg.stores {
        let store = open_store(path)?;
        for &choice in &cfg.classifiers {
            let s = sweep_for(choice, cfg, &store, &labels, &split)?;
            write_sweep(&cfg.out, &s)?;
            print_best(&s);
            results.push(s);
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub runs: usize,
    pub sweeps: usize,
}

fn json_files(dir: &Path, prefix: &str) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(prefix))
        })
        .collect();
    v.sort();
    Ok(v)
}

/// Rebuilds tables and charts from the JSON written by `evaluate` and `sweep`.
pub fn cmd_report(dir: &Path) -> anyhow::Result<ReportSummary> {
    if !dir.is_dir() {
        bail!(UsageError(format!("{} is not a directory", dir.display())));
    }
    let mut reports = Vec::new();
    for p in json_files(&dir.join("runs"), "")? {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        reports.push(serde_json::from_str::<EvalReport>(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    if !reports.is_empty() {
        write(&dir.join("results_table.csv"), &results_table(&reports))?;
        write(&dir.join("results_detail.csv"), &results_detail(&reports))?;
        print_table(&reports);
    }
    let sweeps = json_files(dir, "sweep_")?;
    for p in &sweeps {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let s: LayerSweepResult = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        write_sweep(dir, &s)?;
        print_best(&s);
    }
    if reports.is_empty() && sweeps.is_empty() {
        bail!("no evaluation or sweep results found in {}", dir.display());
    }
    Ok(ReportSummary {
        runs: reports.len(),
        sweeps: sweeps.len(),
    })
}
