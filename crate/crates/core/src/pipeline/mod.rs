//! Staged orchestration over one output directory.
//!
//! Every stage reads its inputs from files written by earlier stages, so
//! stages can be rerun in isolation. Output layout under `out_dir`:
//!
//! ```text
//! manifest.csv  stats.csv  split.csv  ledger.json
//! <technique>/<family>/<id>.png
//! spiral_ranking.csv  spiral_norms.csv
//! features/<technique>_<kind>.csv  features/histogram.csv
//! reports/<name>.json  reports/<name>_confusion.csv
//! summary/<kind>.csv  summary/<kind>.md
//! ```

mod config;
mod ledger;
mod summary;
mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{
    self, ByteHistogram, CorpusManifest, FamilyStats, Labeling, ManifestEntry, Partition,
    SplitAssignment,
};
use crate::error::{Error, Result};
use crate::features::{featurize, FeatureKind};
use crate::imaging::{self, Canvas, Technique};
use crate::learn::{self, GiniRanking};

pub use config::{FeatureSet, KnnOptions, NormScope, PipelineConfig, CONFIG_VERSION};
pub use ledger::{file_sha256, sha256_hex, tree_digest, RunLedger, StageRecord};
pub use summary::{
    summarize, summary_markdown, write_summary_csv, RunReport, SummaryRow, SUMMARY_COLUMNS,
};
pub use table::{FeatureTable, FeatureWriter};

/// Samples processed per parallel batch when streaming feature rows.
const CHUNK: usize = 64;

/// Run `f` on a dedicated pool of `jobs` threads, or the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

impl PipelineConfig {
    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.csv")
    }

    pub fn stats_path(&self) -> PathBuf {
        self.out_dir.join("stats.csv")
    }

    pub fn split_path(&self) -> PathBuf {
        self.out_dir.join("split.csv")
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.out_dir.join("ledger.json")
    }

    pub fn image_path(&self, technique: Technique, entry: &ManifestEntry) -> PathBuf {
        self.out_dir
            .join(technique.name())
            .join(&entry.family)
            .join(format!("{}.png", entry.id))
    }

    pub fn features_dir(&self) -> PathBuf {
        self.out_dir.join("features")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.out_dir.join("reports")
    }

    pub fn summary_dir(&self) -> PathBuf {
        self.out_dir.join("summary")
    }

    fn relative(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.out_dir).unwrap_or(path);
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn record(cfg: &PipelineConfig, stage: &str, files: BTreeMap<String, String>) -> Result<()> {
    let path = cfg.ledger_path();
    let mut ledger = RunLedger::load(&path)?;
    ledger.record(cfg.snapshot(), stage, files);
    ledger.save(&path)
}

fn checksums(cfg: &PipelineConfig, paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((cfg.relative(p), file_sha256(p)?)))
        .collect()
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<CorpusManifest> {
    let labeling = match &cfg.label_file {
        Some(p) => Labeling::LabelFile(p.clone()),
        None => Labeling::Directory,
    };
    let manifest = corpus::ingest(&cfg.corpus_root, &labeling)?;
    create_dir(&cfg.out_dir)?;
    let path = cfg.manifest_path();
    manifest.write_csv(&path)?;
    log::info!(
        "ingested {} samples in {} families",
        manifest.len(),
        manifest.family_census.len()
    );
    record(cfg, "ingest", checksums(cfg, &[path])?)?;
    Ok(manifest)
}

pub fn load_manifest(cfg: &PipelineConfig) -> Result<CorpusManifest> {
    let path = cfg.manifest_path();
    if !path.exists() {
        return Err(Error::Missing(format!(
            "{} not found; run `ingest` first",
            path.display()
        )));
    }
    CorpusManifest::read_csv(&path)
}

pub fn cmd_stats(cfg: &PipelineConfig) -> Result<Vec<FamilyStats>> {
    let manifest = load_manifest(cfg)?;
    let stats = corpus::family_stats(&manifest)?;
    let path = cfg.stats_path();
    corpus::write_stats_csv(&stats, &path)?;
    record(cfg, "stats", checksums(cfg, &[path])?)?;
    Ok(stats)
}

pub fn cmd_split(cfg: &PipelineConfig) -> Result<SplitAssignment> {
    let manifest = load_manifest(cfg)?;
    let split = corpus::stratified_split(&manifest, cfg.ratios, cfg.seed)?;
    let path = cfg.split_path();
    split.write_csv(&path)?;
    record(cfg, "split", checksums(cfg, &[path])?)?;
    Ok(split)
}

pub fn load_split(cfg: &PipelineConfig) -> Result<Option<SplitAssignment>> {
    let path = cfg.split_path();
    if !path.exists() {
        return Ok(None);
    }
    SplitAssignment::read_csv(&path, cfg.seed, cfg.ratios).map(Some)
}

fn require_split(cfg: &PipelineConfig, manifest: &CorpusManifest) -> Result<Vec<Partition>> {
    let split = load_split(cfg)?.ok_or_else(|| {
        Error::Missing(format!(
            "{} not found; run `split` first",
            cfg.split_path().display()
        ))
    })?;
    manifest
        .entries
        .iter()
        .map(|e| {
            split.partition_of(&e.id).ok_or_else(|| {
                Error::Missing(format!("sample {} has no partition; rerun `split`", e.id))
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConvertSummary {
    pub written: usize,
    pub skipped: usize,
}

struct Emitted {
    rel: String,
    digest: String,
    written: bool,
}

/// Write the PNG unless an identical file is already there.
fn emit(
    cfg: &PipelineConfig,
    technique: Technique,
    entry: &ManifestEntry,
    canvas: &Canvas,
) -> Result<Emitted> {
    let bytes = imaging::encode_png(canvas)?;
    let path = cfg.image_path(technique, entry);
    let unchanged =
        path.exists() && std::fs::read(&path).map_err(|e| Error::io(&path, e))? == bytes;
    if !unchanged {
        if let Some(dir) = path.parent() {
            create_dir(dir)?;
        }
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(Emitted {
        rel: cfg.relative(&path),
        digest: sha256_hex(&bytes),
        written: !unchanged,
    })
}

/// Fit the byte ranking and min-max table that lay out spiral images.
pub fn fit_spiral_model(
    cfg: &PipelineConfig,
    manifest: &CorpusManifest,
    histograms: &[ByteHistogram],
) -> Result<(GiniRanking, learn::FeatureNorms)> {
    let keep: Vec<bool> = match cfg.norm_scope {
        NormScope::All => vec![true; manifest.len()],
        NormScope::Train => {
            let split = load_split(cfg)?.ok_or_else(|| {
                Error::Missing(
                    "spiral images rank bytes on the training partition, but no split exists; \
                     run `split` first (or set norm_scope = \"all\")"
                        .into(),
                )
            })?;
            manifest
                .entries
                .iter()
                .map(|e| split.partition_of(&e.id) == Some(Partition::Train))
                .collect()
        }
    };
    let (rows, labels): (Vec<Vec<f64>>, Vec<String>) = manifest
        .entries
        .iter()
        .zip(histograms)
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((e, h), _)| (h.values.to_vec(), e.family.clone()))
        .unzip();
    let ranking = learn::fit_forest(&rows, &labels, &cfg.forest)?;
    let norms = learn::feature_norms(&rows)?;
    Ok((ranking, norms))
}

pub fn cmd_convert(cfg: &PipelineConfig) -> Result<ConvertSummary> {
    if cfg.techniques.is_empty() {
        return Err(Error::InvalidArgument("no techniques selected".into()));
    }
    let manifest = load_manifest(cfg)?;
    let byte_techniques: Vec<Technique> = cfg
        .techniques
        .iter()
        .copied()
        .filter(|&t| t != Technique::Spiral)
        .collect();

    let mut emitted: Vec<(Technique, Emitted)> = Vec::new();
    if !byte_techniques.is_empty() {
        let per_sample: Vec<Vec<Emitted>> = manifest
            .entries
            .par_iter()
            .map(|e| {
                let sample = corpus::load_sample(e)?;
                byte_techniques
                    .iter()
                    .map(|&t| emit(cfg, t, e, &imaging::convert(&sample, t, &cfg.imaging)?))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for row in per_sample {
            emitted.extend(byte_techniques.iter().copied().zip(row));
        }
    }

    let mut files = BTreeMap::new();
    if cfg.techniques.contains(&Technique::Spiral) {
        let histograms: Vec<ByteHistogram> = manifest
            .entries
            .par_iter()
            .map(corpus::byte_histogram)
            .collect::<Result<_>>()?;
        let (ranking, norms) = fit_spiral_model(cfg, &manifest, &histograms)?;
        create_dir(&cfg.out_dir)?;
        let ranking_path = cfg.out_dir.join("spiral_ranking.csv");
        let norms_path = cfg.out_dir.join("spiral_norms.csv");
        ranking.write_csv(&ranking_path)?;
        norms.write_csv(&norms_path)?;
        files.extend(checksums(cfg, &[ranking_path, norms_path])?);
        let spirals: Vec<Emitted> = manifest
            .entries
            .par_iter()
            .zip(&histograms)
            .map(|(e, h)| {
                emit(
                    cfg,
                    Technique::Spiral,
                    e,
                    &imaging::to_spiral(h, &ranking, &norms)?,
                )
            })
            .collect::<Result<_>>()?;
        emitted.extend(spirals.into_iter().map(|s| (Technique::Spiral, s)));
    }

    let mut summary = ConvertSummary::default();
    let mut trees: BTreeMap<Technique, Vec<(&str, &str)>> = BTreeMap::new();
    for (t, e) in &emitted {
        if e.written {
            summary.written += 1;
        } else {
            summary.skipped += 1;
        }
        trees.entry(*t).or_default().push((&e.rel, &e.digest));
    }
    for (t, entries) in trees {
        files.insert(format!("{}/", t.name()), tree_digest(entries));
    }
    log::info!(
        "convert: {} images written, {} unchanged",
        summary.written,
        summary.skipped
    );
    record(cfg, "convert", files)?;
    Ok(summary)
}

fn feature_kinds(cfg: &PipelineConfig) -> Vec<FeatureKind> {
    cfg.feature_kinds
        .iter()
        .filter_map(|k| match k {
            FeatureSet::Hog => Some(FeatureKind::Hog),
            FeatureSet::Haralick => Some(FeatureKind::Haralick),
            FeatureSet::Histogram => None,
        })
        .collect()
}

pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let manifest = load_manifest(cfg)?;
    let kinds = feature_kinds(cfg);
    if !kinds.is_empty() {
        if cfg.techniques.is_empty() {
            return Err(Error::InvalidArgument(
                "image feature kinds selected but no techniques".into(),
            ));
        }
        let absent: Vec<&str> = cfg
            .techniques
            .iter()
            .filter(|&&t| {
                manifest
                    .entries
                    .iter()
                    .any(|e| !cfg.image_path(t, e).exists())
            })
            .map(|t| t.name())
            .collect();
        if !absent.is_empty() {
            return Err(Error::Missing(format!(
                "images absent for techniques: {}; run `convert` first",
                absent.join(", ")
            )));
        }
    }
    let partitions = require_split(cfg, &manifest)?;
    let dir = cfg.features_dir();
    create_dir(&dir)?;
    let mut written = Vec::new();

    for &technique in cfg.techniques.iter().filter(|_| !kinds.is_empty()) {
        let paths: Vec<PathBuf> = kinds
            .iter()
            .map(|k| dir.join(format!("{}_{}.csv", technique.name(), k.name())))
            .collect();
        let mut writers = paths
            .iter()
            .map(|p| FeatureWriter::create(p))
            .collect::<Result<Vec<_>>>()?;
        for (chunk, parts) in manifest.entries.chunks(CHUNK).zip(partitions.chunks(CHUNK)) {
            let rows: Vec<Vec<Vec<f64>>> = chunk
                .par_iter()
                .map(|e| {
                    let canvas = imaging::read_png(&cfg.image_path(technique, e))?;
                    kinds
                        .iter()
                        .map(|&k| Ok(featurize(&canvas, Some(technique), k, &cfg.features)?.values))
                        .collect()
                })
                .collect::<Result<_>>()?;
            for ((e, &part), per_kind) in chunk.iter().zip(parts).zip(rows) {
                for (w, values) in writers.iter_mut().zip(per_kind) {
                    w.write_row(&e.id, &e.family, part, &values)?;
                }
            }
        }
        for w in writers {
            w.finish()?;
        }
        written.extend(paths);
    }

    if cfg.feature_kinds.contains(&FeatureSet::Histogram) {
        let path = dir.join("histogram.csv");
        let mut w = FeatureWriter::create(&path)?;
        for (chunk, parts) in manifest.entries.chunks(CHUNK).zip(partitions.chunks(CHUNK)) {
            let hists: Vec<ByteHistogram> = chunk
                .par_iter()
                .map(corpus::byte_histogram)
                .collect::<Result<_>>()?;
            for ((e, &part), h) in chunk.iter().zip(parts).zip(hists) {
                w.write_row(&e.id, &e.family, part, &h.values)?;
            }
        }
        w.finish()?;
        written.push(path);
    }
    record(cfg, "featurize", checksums(cfg, &written)?)?;
    Ok(written)
}

/// Feature CSVs present under `features/`, sorted by name.
pub fn feature_files(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.features_dir();
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// `(kind, technique)` from a feature file stem such as `bigram_cart_hog`.
fn parse_feature_name(name: &str) -> (String, Option<String>) {
    match name.rsplit_once('_') {
        Some((tech, kind)) if kind == "hog" || kind == "haralick" => {
            (kind.to_string(), Some(tech.to_string()))
        }
        _ => (name.to_string(), None),
    }
}

/// Z-score every column with training-set statistics; constant columns map to 0.
fn standardize(train: &mut [Vec<f64>], others: &mut [&mut Vec<Vec<f64>>]) {
    let Some(first) = train.first() else { return };
    let d = first.len();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for row in train.iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; d];
    for row in train.iter() {
        for ((s, v), m) in sd.iter_mut().zip(row).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    sd.iter_mut().for_each(|s| *s = s.sqrt());
    let apply = |row: &mut Vec<f64>| {
        for ((v, m), s) in row.iter_mut().zip(&mean).zip(&sd) {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    };
    train.iter_mut().for_each(apply);
    for set in others.iter_mut() {
        set.iter_mut().for_each(apply);
    }
}

pub fn cmd_train_eval(cfg: &PipelineConfig, feature_file: &Path) -> Result<RunReport> {
    if !feature_file.exists() {
        return Err(Error::Missing(format!(
            "{} not found; run `featurize` first",
            feature_file.display()
        )));
    }
    let table = FeatureTable::read_csv(feature_file)?;
    let name = feature_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (kind, technique) = parse_feature_name(&name);

    let (mut train_x, train_y) = table.partition(Partition::Train);
    let (mut val_x, val_y) = table.partition(Partition::Val);
    let (mut test_x, test_y) = table.partition(Partition::Test);
    for (part, size) in [
        ("train", train_x.len()),
        ("val", val_x.len()),
        ("test", test_x.len()),
    ] {
        if size == 0 {
            return Err(Error::Missing(format!(
                "{} has no `{part}` rows",
                feature_file.display()
            )));
        }
    }
    if cfg.knn.standardize {
        standardize(&mut train_x, &mut [&mut val_x, &mut test_x]);
    }

    let outcome = learn::search_knn(
        &train_x,
        &train_y,
        &val_x,
        &val_y,
        cfg.search_budget,
        cfg.seed,
    )?;
    let predictions = outcome.model.predict_batch(&test_x)?;
    let labels: Vec<String> = table
        .families
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let mut metrics = learn::evaluate(&predictions, &test_y, &labels)?;
    metrics.chosen_hyperparameters = Some(outcome.best.params);
    log::info!(
        "{name}: {} -> test accuracy {:.4}",
        outcome.best.params,
        metrics.accuracy
    );

    let report = RunReport {
        name: name.clone(),
        kind,
        technique,
        feature_dims: table.dims(),
        train_size: train_x.len(),
        val_size: val_x.len(),
        test_size: test_x.len(),
        search_budget: cfg.search_budget,
        best_trial: outcome.best,
        trials: outcome.trials,
        metrics,
        config: cfg.snapshot(),
    };
    let dir = cfg.reports_dir();
    create_dir(&dir)?;
    let json_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    let confusion_path = dir.join(format!("{name}_confusion.csv"));
    report.metrics.confusion.write_csv(&confusion_path)?;
    record(
        cfg,
        "train-eval",
        checksums(cfg, &[json_path, confusion_path])?,
    )?;
    Ok(report)
}

pub fn load_reports(cfg: &PipelineConfig) -> Result<Vec<RunReport>> {
    let dir = cfg.reports_dir();
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::parse(p, e.to_string()))
        })
        .collect()
}

/// One CSV and Markdown table per feature kind. Kinds selected in the config
/// get a table even when no report exists for them yet.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let reports = load_reports(cfg)?;
    if reports.is_empty() {
        log::warn!(
            "no reports under {}; writing empty tables",
            cfg.reports_dir().display()
        );
    }
    let mut kinds: BTreeSet<String> = cfg
        .feature_kinds
        .iter()
        .map(|k| k.name().to_string())
        .collect();
    kinds.extend(reports.iter().map(|r| r.kind.clone()));
    let dir = cfg.summary_dir();
    create_dir(&dir)?;
    let mut written = Vec::new();
    for kind in kinds {
        let group: Vec<&RunReport> = reports.iter().filter(|r| r.kind == kind).collect();
        let rows = summarize(&group);
        let csv_path = dir.join(format!("{kind}.csv"));
        write_summary_csv(&rows, &csv_path)?;
        let md_path = dir.join(format!("{kind}.md"));
        std::fs::write(&md_path, summary_markdown(&kind, &rows))
            .map_err(|e| Error::io(&md_path, e))?;
        written.push(csv_path);
        written.push(md_path);
    }
    record(cfg, "report", checksums(cfg, &written)?)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_names() {
        assert_eq!(parse_feature_name("histogram"), ("histogram".into(), None));
        assert_eq!(
            parse_feature_name("bigram_cart_hog"),
            ("hog".into(), Some("bigram_cart".into()))
        );
        assert_eq!(
            parse_feature_name("grayscale_haralick"),
            ("haralick".into(), Some("grayscale".into()))
        );
    }

    #[test]
    fn standardize_uses_train_stats() {
        let mut train = vec![vec![0.0, 5.0], vec![2.0, 5.0]];
        let mut test = vec![vec![4.0, 7.0]];
        standardize(&mut train, &mut [&mut test]);
        assert_eq!(train, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(test, vec![vec![3.0, 0.0]]);
    }
}
