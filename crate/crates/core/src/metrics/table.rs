//! Method descriptors and the per-(image, method) score table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::stats::MinMax;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    HigherBetter,
    LowerBetter,
}

impl Polarity {
    /// Maps a score so that larger always means better.
    pub fn orient(self, v: f64) -> f64 {
        match self {
            Polarity::HigherBetter => v,
            Polarity::LowerBetter => -v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    Minmax,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDescriptor {
    pub id: String,
    pub polarity: Polarity,
    pub normalization: Normalization,
}

impl MethodDescriptor {
    pub fn new(id: impl Into<String>, polarity: Polarity, normalization: Normalization) -> Self {
        Self {
            id: id.into(),
            polarity,
            normalization,
        }
    }

    pub fn is_external(&self) -> bool {
        self.id.starts_with("external:")
    }
}

impl fmt::Display for MethodDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// Known methods keyed by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRegistry {
    methods: BTreeMap<String, MethodDescriptor>,
}

impl Default for MethodRegistry {
    /// Built-in statistical methods (min-max normalized) plus the three deep
    /// external score sources (raw).
    fn default() -> Self {
        use Normalization::*;
        use Polarity::*;
        let mut r = Self::empty();
        for d in [
            MethodDescriptor::new("lapv", HigherBetter, Minmax),
            MethodDescriptor::new("lapm", HigherBetter, Minmax),
            MethodDescriptor::new("wavs", HigherBetter, Minmax),
            MethodDescriptor::new("wavs:haar", HigherBetter, Minmax),
            MethodDescriptor::new("brisque", LowerBetter, Minmax),
            MethodDescriptor::new("niqe", LowerBetter, Minmax),
            MethodDescriptor::new("external:musiq", HigherBetter, Raw),
            MethodDescriptor::new("external:maniqa", HigherBetter, Raw),
            MethodDescriptor::new("external:hyperiqa", HigherBetter, Raw),
        ] {
            r.methods.insert(d.id.clone(), d);
        }
        r
    }
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    /// Adds or replaces a descriptor.
    pub fn register(&mut self, descriptor: MethodDescriptor) {
        self.methods.insert(descriptor.id.clone(), descriptor);
    }

    pub fn get(&self, id: &str) -> Result<&MethodDescriptor> {
        self.methods
            .get(id)
            .ok_or_else(|| Error::UnknownMethod(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.methods.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MethodDescriptor> {
        self.methods.values()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreEntry {
    pub raw: f64,
    pub normalized: Option<f64>,
}

/// Scores keyed by `(image_id, method)`, iterated in sorted key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    rows: BTreeMap<(String, String), ScoreEntry>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, image_id: &str, method: &str, raw: f64) -> Result<()> {
        if !raw.is_finite() {
            return Err(Error::Parse(format!(
                "non-finite score for {image_id}/{method}"
            )));
        }
        let key = (image_id.to_string(), method.to_string());
        if self.rows.contains_key(&key) {
            return Err(Error::DuplicateScore {
                image_id: key.0,
                method: key.1,
            });
        }
        self.rows.insert(
            key,
            ScoreEntry {
                raw,
                normalized: None,
            },
        );
        Ok(())
    }

    /// Moves all rows of `other` in; any overlap is a [`Error::DuplicateScore`].
    pub fn merge(&mut self, other: ScoreTable) -> Result<()> {
        if let Some((image_id, method)) = other.rows.keys().find(|k| self.rows.contains_key(*k)) {
            return Err(Error::DuplicateScore {
                image_id: image_id.clone(),
                method: method.clone(),
            });
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn get(&self, image_id: &str, method: &str) -> Option<ScoreEntry> {
        self.rows
            .get(&(image_id.to_string(), method.to_string()))
            .copied()
    }

    pub fn raw(&self, image_id: &str, method: &str) -> Option<f64> {
        self.get(image_id, method).map(|e| e.raw)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, ScoreEntry)> {
        self.rows
            .iter()
            .map(|((i, m), e)| (i.as_str(), m.as_str(), *e))
    }

    pub fn methods(&self) -> BTreeSet<&str> {
        self.rows.keys().map(|(_, m)| m.as_str()).collect()
    }

    pub fn image_ids(&self) -> BTreeSet<&str> {
        self.rows.keys().map(|(i, _)| i.as_str()).collect()
    }

    /// `(image_id, raw)` for one method, sorted by image id.
    pub fn column(&self, method: &str) -> Vec<(&str, f64)> {
        self.rows
            .iter()
            .filter(|((_, m), _)| m == method)
            .map(|((i, _), e)| (i.as_str(), e.raw))
            .collect()
    }

    /// Fills `normalized` for `method` with min-max scaling over its column.
    pub fn normalize(&mut self, method: &str) -> Result<MinMax> {
        let values: Vec<f64> = self.column(method).into_iter().map(|(_, v)| v).collect();
        let range = MinMax::of(&values)
            .map_err(|e| Error::DegenerateSeries(format!("method {method}: {e}")))?;
        for ((_, m), e) in self.rows.iter_mut() {
            if m == method {
                e.normalized = Some(range.apply(e.raw));
            }
        }
        Ok(range)
    }

    /// Normalizes every registered min-max method present in the table.
    /// Methods whose column is constant are left unnormalized and returned.
    pub fn normalize_registered(&mut self, registry: &MethodRegistry) -> Vec<String> {
        let methods: Vec<String> = self.methods().into_iter().map(String::from).collect();
        let mut skipped = Vec::new();
        for m in methods {
            let minmax = registry
                .get(&m)
                .map(|d| d.normalization == Normalization::Minmax)
                .unwrap_or(false);
            if minmax && self.normalize(&m).is_err() {
                skipped.push(m);
            }
        }
        skipped
    }

    /// CSV `image_id,method,raw,normalized`, sorted by key.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("image_id,method,raw,normalized\n");
        for ((image_id, method), e) in &self.rows {
            let norm = e.normalized.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(image_id),
                csv_field(method),
                fmt_f64(e.raw),
                norm
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, self.to_csv_string().as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut table = Self::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let raw = parse_score(field(2), line + 2)?;
            table.insert(field(0), field(1), raw)?;
            let norm = field(3);
            if !norm.is_empty() {
                let v = parse_score(norm, line + 2)?;
                let key = (field(0).to_string(), field(1).to_string());
                table.rows.get_mut(&key).expect("just inserted").normalized = Some(v);
            }
        }
        Ok(table)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_score(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid score `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite score `{s}`")));
    }
    Ok(v)
}

/// Reads externally produced scores (`image_id,method,raw_score`, header
/// optional). Every method must be registered.
pub fn ingest_external_scores<R: Read>(reader: R, registry: &MethodRegistry) -> Result<ScoreTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut table = ScoreTable::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = idx + 1;
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if idx == 0 && rec.get(0).map(str::trim) == Some("image_id") {
            continue;
        }
        if rec.len() < 3 {
            return Err(Error::Parse(format!("line {line}: expected 3 columns")));
        }
        let image_id = rec[0].trim();
        let method = rec[1].trim();
        registry.get(method)?;
        let raw = parse_score(rec[2].trim(), line)?;
        table.insert(image_id, method, raw)?;
    }
    Ok(table)
}
