//! Dataset manifests: `image_id,path,label,split`.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub image_id: String,
    pub path: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub split: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    /// Rejects duplicate ids.
    pub fn new(entries: Vec<DatasetEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.image_id.is_empty() {
                return Err(Error::Parse("empty image_id".into()));
            }
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::Parse(format!("duplicate image_id `{}`", e.image_id)));
            }
        }
        Ok(Self { entries })
    }

    /// Manifest with bare ids; path, label and split are left empty.
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        Self::new(
            ids.iter()
                .map(|id| DatasetEntry {
                    image_id: id.as_ref().to_string(),
                    path: String::new(),
                    label: String::new(),
                    split: String::new(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.image_id.as_str()).collect()
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let entries = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<DatasetEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            wtr.serialize(e)?;
        }
        if self.entries.is_empty() {
            wtr.write_record(["image_id", "path", "label", "split"])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, self.to_csv_string()?.as_bytes())
    }
}
