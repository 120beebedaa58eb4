use std::io::Write;
use std::path::Path;

use crate::corpus::Partition;
use crate::error::{Error, Result};

/// Rows of a feature CSV: `id,family,partition,f0,f1,...`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub families: Vec<String>,
    pub partitions: Vec<Partition>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Features and labels of one partition, in file order.
    pub fn partition(&self, part: Partition) -> (Vec<Vec<f64>>, Vec<String>) {
        self.partitions
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == part)
            .map(|(i, _)| (self.rows[i].clone(), self.families[i].clone()))
            .unzip()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        if header.len() < 4
            || &header[0] != "id"
            || &header[1] != "family"
            || &header[2] != "partition"
        {
            return Err(Error::parse(
                path,
                "expected header id,family,partition,f0,...",
            ));
        }
        let mut t = FeatureTable::default();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            t.ids.push(rec[0].to_string());
            t.families.push(rec[1].to_string());
            t.partitions.push(rec[2].parse()?);
            let row = rec
                .iter()
                .skip(3)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::parse(path, format!("`{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }
}

/// Streaming writer for feature CSVs. Values use the shortest representation
/// that parses back to the same `f64`.
pub struct FeatureWriter<W: Write> {
    out: csv::Writer<W>,
    dims: Option<usize>,
    path: std::path::PathBuf,
}

impl FeatureWriter<std::fs::File> {
    pub fn create(path: &Path) -> Result<Self> {
        let out = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        Ok(FeatureWriter {
            out,
            dims: None,
            path: path.to_path_buf(),
        })
    }
}

impl<W: Write> FeatureWriter<W> {
    pub fn write_row(
        &mut self,
        id: &str,
        family: &str,
        partition: Partition,
        values: &[f64],
    ) -> Result<()> {
        let path = &self.path;
        match self.dims {
            None => {
                let mut header = vec!["id".to_string(), "family".into(), "partition".into()];
                header.extend((0..values.len()).map(|i| format!("f{i}")));
                self.out
                    .write_record(&header)
                    .map_err(|e| Error::csv(path, e))?;
                self.dims = Some(values.len());
            }
            Some(d) if d != values.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: values.len(),
                })
            }
            Some(_) => {}
        }
        let mut rec = Vec::with_capacity(values.len() + 3);
        rec.push(id.to_string());
        rec.push(family.to_string());
        rec.push(partition.as_str().to_string());
        rec.extend(values.iter().map(|v| v.to_string()));
        self.out.write_record(&rec).map_err(|e| Error::csv(path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}
