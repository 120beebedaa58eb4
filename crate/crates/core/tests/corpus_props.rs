use std::collections::BTreeMap;
use std::path::PathBuf;

use malviz::corpus::{
    ingest, stratified_split, ByteHistogram, CorpusManifest, Labeling, ManifestEntry, Partition,
    RawSample, SplitRatios, SAMPLE_LEN,
};
use malviz::Error;
use proptest::prelude::*;

fn manifest(sizes: &[usize]) -> CorpusManifest {
    let entries = sizes
        .iter()
        .enumerate()
        .flat_map(|(f, &n)| {
            (0..n).map(move |i| ManifestEntry {
                id: format!("{f:02}{i:04}"),
                family: format!("fam{f}"),
                source_path: PathBuf::from(format!("fam{f}/{i}")),
                original_len: 1,
            })
        })
        .collect();
    CorpusManifest::from_entries(entries).unwrap()
}

fn ratios() -> impl Strategy<Value = SplitRatios> {
    (1u32..=98).prop_flat_map(|train| {
        (Just(train), 1u32..(100 - train)).prop_map(|(train, val)| SplitRatios {
            train,
            val,
            test: 100 - train - val,
        })
    })
}

proptest! {
    #[test]
    fn histogram_is_a_distribution(bytes in proptest::collection::vec(any::<u8>(), 1..3000)) {
        let h = ByteHistogram::from_bytes(&bytes).unwrap();
        let total: f64 = h.values.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (v, &p) in h.values.iter().enumerate() {
            let count = bytes.iter().filter(|&&b| b as usize == v).count();
            prop_assert_eq!(p, count as f64 / bytes.len() as f64);
        }
    }

    #[test]
    fn samples_are_truncated_or_padded(len in 1usize..120_000) {
        let content: Vec<u8> = (0..len).map(|i| (i % 251 + 1) as u8).collect();
        let s = RawSample::from_bytes("id", "fam", &content);
        prop_assert_eq!(s.bytes.len(), SAMPLE_LEN);
        let keep = len.min(SAMPLE_LEN);
        prop_assert_eq!(&s.bytes[..keep], &content[..keep]);
        prop_assert!(s.bytes[keep..].iter().all(|&b| b == 0));
        prop_assert_eq!(s.is_truncated(), len > SAMPLE_LEN);
        prop_assert_eq!(s.is_padded(), len < SAMPLE_LEN);
        prop_assert_eq!(s.unpadded(), &content[..keep]);
    }

    #[test]
    fn split_sizes_are_fair(n in 0usize..10_000, r in ratios()) {
        let sizes = r.sizes(n);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        for (size, ratio) in sizes.iter().zip([r.train, r.val, r.test]) {
            let exact = n as f64 * ratio as f64 / 100.0;
            prop_assert!((*size as f64 - exact).abs() < 1.0);
        }
    }

    #[test]
    fn stratified_split_invariants(
        family_sizes in proptest::collection::vec(10usize..80, 1..5),
        seed in any::<u64>(),
    ) {
        let m = manifest(&family_sizes);
        let r = SplitRatios::default();
        let split = stratified_split(&m, r, seed).unwrap();
        prop_assert_eq!(split.assignment.len(), m.len());
        let mut per_family: BTreeMap<(&str, Partition), usize> = BTreeMap::new();
        for e in &m.entries {
            let p = split.partition_of(&e.id).unwrap();
            *per_family.entry((e.family.as_str(), p)).or_default() += 1;
        }
        for (f, &n) in family_sizes.iter().enumerate() {
            let fam = format!("fam{f}");
            let expected = r.sizes(n);
            for (i, part) in Partition::ALL.iter().enumerate() {
                prop_assert_eq!(per_family.get(&(fam.as_str(), *part)).copied().unwrap_or(0), expected[i]);
            }
        }
        prop_assert_eq!(stratified_split(&m, r, seed).unwrap(), split);
    }
}

#[test]
fn tiny_family_is_rejected() {
    let m = manifest(&[20, 2]);
    assert!(matches!(
        stratified_split(&m, SplitRatios::default(), 1),
        Err(Error::FamilyTooSmall { count: 2, .. })
    ));
    // three samples at 80:10:10 leave val or test empty
    let m = manifest(&[3]);
    assert!(stratified_split(&m, SplitRatios::default(), 1).is_err());
}

#[test]
fn ingest_directory_corpus() {
    let dir = tempfile::tempdir().unwrap();
    for (fam, n) in [("alpha", 3), ("beta", 2)] {
        std::fs::create_dir_all(dir.path().join(fam)).unwrap();
        for i in 0..n {
            std::fs::write(
                dir.path().join(fam).join(format!("{i}.exe")),
                vec![i as u8 + 1; 100 * (i + 1)],
            )
            .unwrap();
        }
    }
    std::fs::write(dir.path().join("beta/empty.bin"), b"").unwrap();
    let m = ingest(dir.path(), &Labeling::Directory).unwrap();
    assert_eq!(m.len(), 5);
    assert_eq!(m.family_census["alpha"], 3);
    assert_eq!(m.families(), vec!["alpha".to_string(), "beta".to_string()]);
    assert_eq!(ingest(dir.path(), &Labeling::Directory).unwrap(), m);
    let ids: std::collections::HashSet<_> = m.entries.iter().map(|e| &e.id).collect();
    assert_eq!(ids.len(), 5);
    assert!(m.entries.iter().all(|e| e.id.len() == 16));
}

#[test]
fn ingest_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        ingest(dir.path(), &Labeling::Directory),
        Err(Error::EmptyCorpus(_))
    ));
    let missing = dir.path().join("nope");
    let err = ingest(&missing, &Labeling::Directory).unwrap_err();
    assert!(err.to_string().contains("nope"));
}
