//! Corpus ingestion, fixed-length sample loading, byte histograms, per-family
//! statistics and seeded stratified splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::seed;

/// Side of every generated image, in pixels.
pub const SIDE: usize = 224;

/// Number of leading bytes of each file that become image content.
pub const SAMPLE_LEN: usize = SIDE * SIDE;

/// A file reduced or zero-extended to exactly [`SAMPLE_LEN`] bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSample {
    pub id: String,
    pub family: String,
    pub original_len: u64,
    pub bytes: Vec<u8>,
    pub source_path: PathBuf,
}

impl RawSample {
    /// Build a sample from in-memory content using the same truncate/pad rule
    /// as [`load_sample`].
    pub fn from_bytes(id: impl Into<String>, family: impl Into<String>, content: &[u8]) -> Self {
        let mut bytes = vec![0u8; SAMPLE_LEN];
        let n = content.len().min(SAMPLE_LEN);
        bytes[..n].copy_from_slice(&content[..n]);
        RawSample {
            id: id.into(),
            family: family.into(),
            original_len: content.len() as u64,
            bytes,
            source_path: PathBuf::new(),
        }
    }

    /// Bytes that came from the file, excluding any zero padding.
    pub fn unpadded(&self) -> &[u8] {
        let n = (self.original_len.min(SAMPLE_LEN as u64)) as usize;
        &self.bytes[..n]
    }

    pub fn is_truncated(&self) -> bool {
        self.original_len > SAMPLE_LEN as u64
    }

    pub fn is_padded(&self) -> bool {
        self.original_len < SAMPLE_LEN as u64
    }
}

/// Relative byte-value frequencies over an entire file.
#[derive(Clone, Debug, PartialEq)]
pub struct ByteHistogram {
    pub values: [f64; 256],
}

impl ByteHistogram {
    pub fn from_counts(counts: &[u64; 256]) -> Option<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let mut values = [0.0; 256];
        for (v, &c) in values.iter_mut().zip(counts) {
            *v = c as f64 / total as f64;
        }
        Some(ByteHistogram { values })
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        Self::from_counts(&count_bytes(bytes))
    }
}

fn count_bytes(bytes: &[u8]) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub family: String,
    pub source_path: PathBuf,
    pub original_len: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub family_census: BTreeMap<String, usize>,
}

impl CorpusManifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut family_census = BTreeMap::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sample id `{}`",
                    e.id
                )));
            }
            *family_census.entry(e.family.clone()).or_insert(0) += 1;
        }
        Ok(CorpusManifest {
            entries,
            family_census,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn families(&self) -> Vec<String> {
        self.family_census.keys().cloned().collect()
    }

    /// CSV with header `id,family,source_path,original_len`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Self::from_entries(entries)
    }
}

/// How family labels are assigned during ingestion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Labeling {
    /// The first directory component below the root names the family.
    #[default]
    Directory,
    /// A `path,family` CSV; listed paths (relative to the root, or absolute)
    /// take their label from the file, all others fall back to [`Labeling::Directory`].
    LabelFile(PathBuf),
}

fn read_label_file(path: &Path, root: &Path) -> Result<HashMap<PathBuf, String>> {
    #[derive(Deserialize)]
    struct Row {
        path: PathBuf,
        family: String,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut labels = HashMap::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let rel = match row.path.strip_prefix(root) {
            Ok(rel) => rel.to_path_buf(),
            Err(_) => row.path,
        };
        labels.insert(rel, row.family);
    }
    Ok(labels)
}

fn relative_key(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Stable opaque identifier: 16 hex digits of SHA-256 over the root-relative path.
fn sample_id(rel_key: &str) -> String {
    let digest = Sha256::digest(rel_key.as_bytes());
    hex::encode(&digest[..8])
}

/// Walk `root` and build a manifest with one entry per non-empty regular file,
/// ordered lexicographically by root-relative path.
pub fn ingest(root: &Path, labeling: &Labeling) -> Result<CorpusManifest> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::InvalidArgument(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let overrides = match labeling {
        Labeling::Directory => HashMap::new(),
        Labeling::LabelFile(p) => read_label_file(p, root)?,
    };

    let mut found = Vec::new();
    for item in WalkDir::new(root).follow_links(false) {
        let item = match item {
            Ok(item) => item,
            Err(e) => {
                warn!("skipping unreadable entry: {e}");
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let path = item.path();
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        let key = relative_key(&rel);
        let family = match overrides.get(&rel) {
            Some(f) => f.clone(),
            None if rel.components().count() >= 2 => rel
                .components()
                .next()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .unwrap_or_default(),
            None => {
                warn!("skipping {}: no family directory or label", path.display());
                continue;
            }
        };
        let len = match item.metadata() {
            Ok(m) => m.len(),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        if len == 0 {
            warn!("skipping {}: empty file", path.display());
            continue;
        }
        if let Err(e) = File::open(path) {
            warn!("skipping {}: {e}", path.display());
            continue;
        }
        found.push((key, family, path.to_path_buf(), len));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    if found.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    let entries = found
        .into_iter()
        .map(|(key, family, source_path, original_len)| ManifestEntry {
            id: sample_id(&key),
            family,
            source_path,
            original_len,
        })
        .collect();
    CorpusManifest::from_entries(entries)
}

/// Read the first [`SAMPLE_LEN`] bytes of the entry's file, zero-padding short files.
pub fn load_sample(entry: &ManifestEntry) -> Result<RawSample> {
    let path = &entry.source_path;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let original_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if original_len == 0 {
        return Err(Error::EmptyFile { path: path.clone() });
    }
    let mut bytes = Vec::with_capacity(SAMPLE_LEN);
    file.take(SAMPLE_LEN as u64)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    bytes.resize(SAMPLE_LEN, 0);
    Ok(RawSample {
        id: entry.id.clone(),
        family: entry.family.clone(),
        original_len,
        bytes,
        source_path: path.clone(),
    })
}

/// Normalized byte histogram over every byte of the file (not just the image prefix).
pub fn byte_histogram(entry: &ManifestEntry) -> Result<ByteHistogram> {
    let path = &entry.source_path;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let mut counts = [0u64; 256];
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        for &b in &buf[..n] {
            counts[b as usize] += 1;
        }
    }
    ByteHistogram::from_counts(&counts).ok_or_else(|| Error::EmptyFile { path: path.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub family: String,
    pub min_bytes: u64,
    pub max_bytes: u64,
    pub mean_bytes: f64,
    pub pct_truncated: f64,
    pub pct_padded: f64,
}

/// Per-family size statistics over original file lengths, in family order.
pub fn family_stats(manifest: &CorpusManifest) -> Result<Vec<FamilyStats>> {
    if manifest.is_empty() {
        return Err(Error::InvalidArgument("empty manifest".into()));
    }
    let mut by_family: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for e in &manifest.entries {
        by_family.entry(&e.family).or_default().push(e.original_len);
    }
    let limit = SAMPLE_LEN as u64;
    Ok(by_family
        .into_iter()
        .map(|(family, lens)| {
            let n = lens.len() as f64;
            let sum: u128 = lens.iter().map(|&l| l as u128).sum();
            let truncated = lens.iter().filter(|&&l| l > limit).count() as f64;
            let padded = lens.iter().filter(|&&l| l < limit).count() as f64;
            FamilyStats {
                family: family.to_string(),
                min_bytes: *lens.iter().min().expect("non-empty group"),
                max_bytes: *lens.iter().max().expect("non-empty group"),
                mean_bytes: sum as f64 / n,
                pct_truncated: 100.0 * truncated / n,
                pct_padded: 100.0 * padded / n,
            }
        })
        .collect())
}

/// CSV mirroring the dataset statistics table: `family,min,max,mean,truncated,padded`.
pub fn write_stats_csv(stats: &[FamilyStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["family", "min", "max", "mean", "truncated", "padded"])
        .map_err(|e| Error::csv(path, e))?;
    for s in stats {
        w.write_record([
            s.family.clone(),
            s.min_bytes.to_string(),
            s.max_bytes.to_string(),
            format!("{:.2}", s.mean_bytes),
            format!("{:.1}", s.pct_truncated),
            format!("{:.1}", s.pct_padded),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "val" | "validation" => Ok(Partition::Val),
            "test" => Ok(Partition::Test),
            other => Err(Error::InvalidArgument(format!(
                "unknown partition `{other}`"
            ))),
        }
    }
}

/// Train/validation/test percentages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: u32,
    pub val: u32,
    pub test: u32,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 80,
            val: 10,
            test: 10,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        if self.train + self.val + self.test != 100 {
            return Err(Error::InvalidArgument(format!(
                "split ratios {}:{}:{} do not sum to 100",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [u32; 3] {
        [self.train, self.val, self.test]
    }

    /// Partition sizes for `n` samples by largest-remainder rounding, so each
    /// size is within one sample of its exact share. Remainder ties go to the
    /// earlier partition.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let ratios = self.as_array();
        let mut sizes = [0usize; 3];
        let mut rems = [(0usize, 0usize); 3];
        for (i, &r) in ratios.iter().enumerate() {
            let exact = n * r as usize;
            sizes[i] = exact / 100;
            rems[i] = (exact % 100, i);
        }
        let mut left = n - sizes.iter().sum::<usize>();
        rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in rems.iter() {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        sizes
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub assignment: BTreeMap<String, Partition>,
}

impl SplitAssignment {
    pub fn partition_of(&self, id: &str) -> Option<Partition> {
        self.assignment.get(id).copied()
    }

    pub fn ids_in(&self, part: Partition) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, &p)| p == part)
            .map(|(id, _)| id.as_str())
    }

    /// CSV `id,partition`, sorted by id.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["id", "partition"])
            .map_err(|e| Error::csv(path, e))?;
        for (id, p) in &self.assignment {
            w.write_record([id.as_str(), p.as_str()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read back a split file. Seed and ratios are not stored in the CSV and
    /// must be supplied by the caller.
    pub fn read_csv(path: &Path, seed: u64, ratios: SplitRatios) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut assignment = BTreeMap::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let (id, part) = match (rec.get(0), rec.get(1)) {
                (Some(id), Some(p)) => (id, p),
                _ => return Err(Error::parse(path, "expected two columns")),
            };
            assignment.insert(id.to_string(), part.parse()?);
        }
        Ok(SplitAssignment {
            seed,
            ratios,
            assignment,
        })
    }
}

/// Per-family seeded shuffle followed by largest-remainder partitioning.
pub fn stratified_split(
    manifest: &CorpusManifest,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment> {
    ratios.validate()?;
    let mut by_family: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &manifest.entries {
        by_family.entry(&e.family).or_default().push(&e.id);
    }
    let ratio_arr = ratios.as_array();
    let mut assignment = BTreeMap::new();
    for (family, mut ids) in by_family {
        let sizes = ratios.sizes(ids.len());
        let starved = sizes
            .iter()
            .zip(ratio_arr)
            .any(|(&size, ratio)| ratio > 0 && size == 0);
        if ids.len() < 3 || starved {
            return Err(Error::FamilyTooSmall {
                family: family.to_string(),
                count: ids.len(),
            });
        }
        let mut rng = seed::rng_for(seed, family.as_bytes());
        ids.shuffle(&mut rng);
        let mut cursor = ids.into_iter();
        for (part, &size) in Partition::ALL.iter().zip(&sizes) {
            for id in cursor.by_ref().take(size) {
                assignment.insert(id.to_string(), *part);
            }
        }
    }
    Ok(SplitAssignment {
        seed,
        ratios,
        assignment,
    })
}
