use std::path::{Path, PathBuf};

use malviz::imaging::{read_png, Technique};
use malviz::pipeline::{
    cmd_convert, cmd_featurize, cmd_ingest, cmd_report, cmd_split, cmd_stats, cmd_train_eval,
    FeatureSet, FeatureTable, NormScope, PipelineConfig, RunLedger,
};
use malviz::synthetic::write_corpus;
use malviz::Error;

fn config(root: &Path, techniques: &[Technique], kinds: &[FeatureSet]) -> PipelineConfig {
    PipelineConfig {
        corpus_root: root.join("corpus"),
        out_dir: root.join("out"),
        techniques: techniques.to_vec(),
        feature_kinds: kinds.to_vec(),
        search_budget: 5,
        forest: malviz::learn::ForestConfig {
            trees: 10,
            ..Default::default()
        },
        ..Default::default()
    }
    .resolved()
    .unwrap()
}

fn toy(per_family: usize) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, 3, per_family, (300, 70_000), 5).unwrap();
    (dir, corpus)
}

fn png_count(dir: &Path) -> usize {
    walk(dir)
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .count()
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
    }
    out
}

#[test]
fn ingest_writes_manifest_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus/fam");
    std::fs::create_dir_all(&corpus).unwrap();
    for i in 0..5u8 {
        std::fs::write(corpus.join(format!("{i}")), vec![i; 10 + i as usize]).unwrap();
    }
    let cfg = config(
        dir.path(),
        &[Technique::Grayscale],
        &[FeatureSet::Histogram],
    );
    let m = cmd_ingest(&cfg).unwrap();
    assert_eq!(m.len(), 5);
    let first = std::fs::read(cfg.manifest_path()).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 6);
    cmd_ingest(&cfg).unwrap();
    assert_eq!(std::fs::read(cfg.manifest_path()).unwrap(), first);
    let stats = cmd_stats(&cfg).unwrap();
    assert_eq!(stats[0].min_bytes, 10);
    assert_eq!(stats[0].max_bytes, 14);
    assert_eq!(stats[0].pct_padded, 100.0);
}

#[test]
fn missing_root_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[Technique::Grayscale], &[]);
    let err = cmd_ingest(&cfg).unwrap_err();
    assert!(err.to_string().contains("corpus"), "{err}");
}

#[test]
fn convert_layout_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let techniques = [Technique::Grayscale, Technique::Hit, Technique::BigramPolar];
    let cfg = config(dir.path(), &techniques, &[]);
    let fam = cfg.corpus_root.join("fam");
    std::fs::create_dir_all(&fam).unwrap();
    std::fs::write(fam.join("a.bin"), [1u8, 2, 3, 4]).unwrap();
    std::fs::write(fam.join("b.bin"), vec![0x41u8; 60_000]).unwrap();
    let m = cmd_ingest(&cfg).unwrap();
    assert_eq!(m.len(), 2);
    let first = cmd_convert(&cfg).unwrap();
    assert_eq!((first.written, first.skipped), (6, 0));
    assert_eq!(png_count(&cfg.out_dir), 6);
    for t in techniques {
        for e in &m.entries {
            let path = cfg
                .out_dir
                .join(t.name())
                .join(&e.family)
                .join(format!("{}.png", e.id));
            let c = read_png(&path).unwrap();
            assert_eq!((c.width(), c.height()), (224, 224));
        }
    }
    // resume after losing one file: the rest are recognised as identical
    std::fs::remove_file(cfg.image_path(Technique::Hit, &m.entries[0])).unwrap();
    let again = cmd_convert(&cfg).unwrap();
    assert_eq!((again.written, again.skipped), (1, 5));
    let ledger = RunLedger::load(&cfg.ledger_path()).unwrap();
    assert!(ledger.stages["convert"].files.contains_key("hit/"));
}

#[test]
fn spiral_needs_a_split_unless_scope_is_all() {
    let (dir, _) = toy(10);
    let mut cfg = config(dir.path(), &[Technique::Spiral], &[]);
    cmd_ingest(&cfg).unwrap();
    let err = cmd_convert(&cfg).unwrap_err();
    assert!(matches!(err, Error::Missing(_)));
    assert!(err.to_string().contains("split"), "{err}");

    cmd_split(&cfg).unwrap();
    cmd_convert(&cfg).unwrap();
    assert_eq!(png_count(&cfg.out_dir.join("spiral")), 30);
    let train_ranking = std::fs::read(cfg.out_dir.join("spiral_ranking.csv")).unwrap();

    cfg.norm_scope = NormScope::All;
    cmd_convert(&cfg).unwrap();
    let all_norms = std::fs::read_to_string(cfg.out_dir.join("spiral_norms.csv")).unwrap();
    assert_eq!(all_norms.lines().count(), 257);
    assert_ne!(
        std::fs::read(cfg.out_dir.join("spiral_ranking.csv")).unwrap(),
        train_ranking
    );
}

#[test]
fn featurize_dims_partitions_and_reruns() {
    let (dir, _) = toy(10);
    let kinds = [FeatureSet::Haralick, FeatureSet::Histogram];
    let cfg = config(dir.path(), &[Technique::Grayscale], &kinds);
    cmd_ingest(&cfg).unwrap();
    let split = cmd_split(&cfg).unwrap();

    let err = cmd_featurize(&cfg).unwrap_err();
    assert!(err.to_string().contains("grayscale"), "{err}");

    cmd_convert(&cfg).unwrap();
    let files = cmd_featurize(&cfg).unwrap();
    assert_eq!(files.len(), 2);
    let har = FeatureTable::read_csv(&cfg.features_dir().join("grayscale_haralick.csv")).unwrap();
    assert_eq!((har.len(), har.dims()), (30, 13));
    let hist = FeatureTable::read_csv(&cfg.features_dir().join("histogram.csv")).unwrap();
    assert_eq!((hist.len(), hist.dims()), (30, 256));
    for (id, part) in hist.ids.iter().zip(&hist.partitions) {
        assert_eq!(split.partition_of(id), Some(*part));
    }
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    cmd_featurize(&cfg).unwrap();
    let after: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn train_eval_report_and_determinism() {
    let (dir, _) = toy(20);
    let cfg = config(
        dir.path(),
        &[Technique::Grayscale],
        &[FeatureSet::Histogram],
    );
    cmd_ingest(&cfg).unwrap();
    cmd_split(&cfg).unwrap();
    let files = cmd_featurize(&cfg).unwrap();
    let report = cmd_train_eval(&cfg, &files[0]).unwrap();
    assert!(
        report.metrics.accuracy >= 0.95,
        "{}",
        report.metrics.accuracy
    );
    // balanced test set: 2 per family
    assert_eq!(report.test_size, 6);
    assert!((report.metrics.accuracy - report.metrics.recall).abs() < 1e-12);
    assert!(report.metrics.chosen_hyperparameters.is_some());
    assert_eq!(report.config["seed"], 42);

    let json = cfg.reports_dir().join("histogram.json");
    let first = std::fs::read(&json).unwrap();
    cmd_train_eval(&cfg, &files[0]).unwrap();
    assert_eq!(std::fs::read(&json).unwrap(), first);
    assert!(cfg.reports_dir().join("histogram_confusion.csv").exists());

    let written = cmd_report(&cfg).unwrap();
    let csv = std::fs::read_to_string(cfg.summary_dir().join("histogram.csv")).unwrap();
    assert!(
        csv.lines()
            .nth(1)
            .unwrap()
            .ends_with("accuracy;precision;recall;f1"),
        "{csv}"
    );
    assert!(written.iter().any(|p| p.ends_with("histogram.md")));
}

#[test]
fn train_eval_requires_every_partition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[], &[FeatureSet::Histogram]);
    std::fs::create_dir_all(cfg.features_dir()).unwrap();
    let path = cfg.features_dir().join("histogram.csv");
    std::fs::write(
        &path,
        "id,family,partition,f0\na,x,train,1\nb,y,train,2\nc,x,test,1\n",
    )
    .unwrap();
    let err = cmd_train_eval(&cfg, &path).unwrap_err();
    assert!(err.to_string().contains("val"), "{err}");
}

#[test]
fn report_tables_flag_column_maxima() {
    let (dir, _) = toy(20);
    let techniques = [
        Technique::Grayscale,
        Technique::Byteclass,
        Technique::Entropy,
    ];
    let cfg = config(dir.path(), &techniques, &[FeatureSet::Haralick]);

    // empty reports directory: header-only table
    let written = cmd_report(&cfg).unwrap();
    assert_eq!(written.len(), 2);
    let empty = std::fs::read_to_string(cfg.summary_dir().join("haralick.csv")).unwrap();
    assert_eq!(empty, "name,technique,accuracy,precision,recall,f1,best\n");

    cmd_ingest(&cfg).unwrap();
    cmd_split(&cfg).unwrap();
    cmd_convert(&cfg).unwrap();
    let files = cmd_featurize(&cfg).unwrap();
    let reports: Vec<_> = files
        .iter()
        .map(|f| cmd_train_eval(&cfg, f).unwrap())
        .collect();
    cmd_report(&cfg).unwrap();
    let csv = std::fs::read_to_string(cfg.summary_dir().join("haralick.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let best_acc = reports
        .iter()
        .map(|r| r.metrics.accuracy)
        .fold(0.0, f64::max);
    for (row, r) in rows.iter().zip({
        let mut sorted = reports.clone();
        sorted.sort_by(|a, b| a.name.cmp(&b.name));
        sorted
    }) {
        assert!(row.starts_with(&r.name));
        let flagged = row
            .rsplit(',')
            .next()
            .unwrap()
            .split(';')
            .any(|c| c == "accuracy");
        assert_eq!(flagged, r.metrics.accuracy == best_acc, "{row}");
    }
    let md = std::fs::read_to_string(cfg.summary_dir().join("haralick.md")).unwrap();
    assert!(md.contains("**"));
}
