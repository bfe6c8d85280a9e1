//! Run-time spectral reference database and spectral similarity metrics.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAXONOMY_ROOT: &str = "World";

/// Class label id. `0` is reserved for Unknown.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ClassId(pub u16);

impl ClassId {
    pub const UNKNOWN: ClassId = ClassId(0);

    pub fn is_unknown(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    wavelengths: Vec<f64>,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelengths: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("spectrum is empty".into()));
        }
        if wavelengths.len() != values.len() {
            return Err(Error::BandMismatch {
                expected: wavelengths.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "spectrum values must be finite".into(),
            ));
        }
        Ok(Spectrum {
            wavelengths,
            values,
        })
    }

    pub(crate) fn new_unchecked(wavelengths: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(wavelengths.len(), values.len());
        Spectrum {
            wavelengths,
            values,
        }
    }

    /// Spectrum with wavelengths numbered 0..n, for callers that only care about values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new((0..values.len()).map(|i| i as f64).collect(), values)
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            wavelengths: self.wavelengths.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityAlgorithm {
    /// Spectral angle in degrees.
    #[default]
    Sam,
    /// Euclidean distance in reflectance units.
    Euclidean,
}

impl std::str::FromStr for SimilarityAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sam" => Ok(SimilarityAlgorithm::Sam),
            "euclidean" => Ok(SimilarityAlgorithm::Euclidean),
            other => Err(Error::InvalidParameter(format!(
                "unknown similarity algorithm {other:?}"
            ))),
        }
    }
}

impl fmt::Display for SimilarityAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityAlgorithm::Sam => "sam",
            SimilarityAlgorithm::Euclidean => "euclidean",
        })
    }
}

pub fn similarity(a: &Spectrum, b: &Spectrum, algorithm: SimilarityAlgorithm) -> Result<f64> {
    similarity_values(a.values(), b.values(), algorithm)
}

/// Dissimilarity score between two value vectors: 0 for identical, larger is less similar.
pub fn similarity_values(a: &[f64], b: &[f64], algorithm: SimilarityAlgorithm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::BandMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    match algorithm {
        SimilarityAlgorithm::Sam => spectral_angle_deg(a, b),
        SimilarityAlgorithm::Euclidean => Ok(euclidean(a, b)),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Angle between two spectra in degrees.
///
/// Evaluated as `2 atan2(|â - b̂|, |â + b̂|)` on the unit vectors, which equals
/// `acos(â·b̂)` but stays accurate for nearly parallel spectra where the
/// arccosine form loses about half its digits.
pub fn spectral_angle_deg(a: &[f64], b: &[f64]) -> Result<f64> {
    if norm(a) == 0.0 || norm(b) == 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    Ok(angle_between_units(&unit(a), &unit(b)))
}

pub(crate) fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

/// Angle in degrees between two unit vectors.
pub(crate) fn angle_between_units(u: &[f64], v: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees()
}

/// Taxonomy path used when a class is added without one.
pub fn default_taxonomy(name: &str) -> Vec<String> {
    let parents: &[&str] = match name.to_ascii_lowercase().as_str() {
        "ground" | "concrete" | "water" => &["Landscape"],
        "wood" | "tarp" => &["Obstacle"],
        _ => &[],
    };
    std::iter::once(TAXONOMY_ROOT)
        .chain(parents.iter().copied())
        .chain(std::iter::once(name))
        .map(str::to_owned)
        .collect()
}

fn normalize_taxonomy(name: &str, taxonomy: Vec<String>) -> Result<Vec<String>> {
    if taxonomy.is_empty() {
        return Ok(default_taxonomy(name));
    }
    if taxonomy[0] != TAXONOMY_ROOT || taxonomy.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidTaxonomy(taxonomy));
    }
    let mut taxonomy = taxonomy;
    if taxonomy.last().map(String::as_str) != Some(name) {
        taxonomy.push(name.to_owned());
    }
    Ok(taxonomy)
}

/// Distinct legend colours for classes added without one.
pub fn palette_color(index: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 12] = [
        [166, 166, 166],
        [139, 90, 43],
        [34, 139, 34],
        [30, 144, 255],
        [160, 82, 45],
        [255, 140, 0],
        [148, 0, 211],
        [255, 215, 0],
        [0, 206, 209],
        [220, 20, 60],
        [127, 255, 0],
        [255, 105, 180],
    ];
    PALETTE[index % PALETTE.len()]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticClass {
    pub id: ClassId,
    pub name: String,
    pub color: [u8; 3],
    pub reference: Spectrum,
    /// Instance-label path from the root, ending with the class name.
    pub taxonomy: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDatabase {
    classes: Vec<SemanticClass>,
    next_id: u16,
}

impl Default for SpectralDatabase {
    fn default() -> Self {
        Self::new()
    }
}

impl SpectralDatabase {
    pub fn new() -> Self {
        SpectralDatabase {
            classes: Vec::new(),
            next_id: 1,
        }
    }

    pub fn classes(&self) -> &[SemanticClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, id: ClassId) -> Option<&SemanticClass> {
        self.classes
            .binary_search_by_key(&id, |c| c.id)
            .ok()
            .map(|i| &self.classes[i])
    }

    pub fn by_name(&self, name: &str) -> Option<&SemanticClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn band_count(&self) -> Option<usize> {
        self.classes.first().map(|c| c.reference.len())
    }

    pub fn add_class(
        &mut self,
        name: &str,
        color: [u8; 3],
        reference: Spectrum,
        taxonomy: Vec<String>,
    ) -> Result<ClassId> {
        if self.next_id == u16::MAX {
            return Err(Error::ClassIdOverflow);
        }
        let id = ClassId(self.next_id);
        let class = self.validate_new(id, name, color, reference, taxonomy)?;
        self.classes.push(class);
        self.next_id += 1;
        Ok(id)
    }

    fn validate_new(
        &self,
        id: ClassId,
        name: &str,
        color: [u8; 3],
        reference: Spectrum,
        taxonomy: Vec<String>,
    ) -> Result<SemanticClass> {
        if name.trim().is_empty() {
            return Err(Error::InvalidParameter("class name is empty".into()));
        }
        if self.by_name(name).is_some() {
            return Err(Error::DuplicateClass(name.to_owned()));
        }
        if reference.is_zero() {
            return Err(Error::ZeroSpectrum);
        }
        if let Some(bands) = self.band_count() {
            if reference.len() != bands {
                return Err(Error::BandMismatch {
                    expected: bands,
                    found: reference.len(),
                });
            }
        }
        Ok(SemanticClass {
            id,
            name: name.to_owned(),
            color,
            reference,
            taxonomy: normalize_taxonomy(name, taxonomy)?,
        })
    }

    pub fn remove_class(&mut self, id: ClassId) -> Result<SemanticClass> {
        let index = self
            .classes
            .iter()
            .position(|c| c.id == id)
            .ok_or(Error::UnknownClass(id))?;
        Ok(self.classes.remove(index))
    }

    /// Copy holding only the named classes, ids preserved.
    pub fn subset(&self, names: &[&str]) -> Result<SpectralDatabase> {
        let mut out = SpectralDatabase {
            classes: Vec::new(),
            next_id: self.next_id,
        };
        for class in &self.classes {
            if names.contains(&class.name.as_str()) {
                out.classes.push(class.clone());
            }
        }
        if let Some(missing) = names.iter().find(|n| out.by_name(n).is_none()) {
            return Err(Error::InvalidParameter(format!(
                "no class named {missing:?}"
            )));
        }
        Ok(out)
    }

    pub fn name_of(&self, id: ClassId) -> &str {
        if id.is_unknown() {
            return "Unknown";
        }
        self.get(id).map(|c| c.name.as_str()).unwrap_or("Unknown")
    }

    pub fn color_of(&self, id: ClassId) -> [u8; 3] {
        self.get(id).map(|c| c.color).unwrap_or([0, 0, 0])
    }

    pub fn to_document(&self) -> DatabaseDocument {
        DatabaseDocument {
            classes: self
                .classes
                .iter()
                .map(|c| ClassRecord {
                    id: c.id,
                    name: c.name.clone(),
                    color: c.color,
                    taxonomy: c.taxonomy.clone(),
                    wavelengths_nm: c.reference.wavelengths().to_vec(),
                    values: c.reference.values().to_vec(),
                })
                .collect(),
            next_id: Some(self.next_id),
        }
    }

    pub fn from_document(doc: DatabaseDocument) -> Result<Self> {
        let mut db = SpectralDatabase::new();
        let mut seen = HashSet::new();
        for record in doc.classes {
            if record.id.is_unknown() {
                return Err(Error::InvalidDatabase("class id 0 is reserved".into()));
            }
            if !seen.insert(record.id) {
                return Err(Error::InvalidDatabase(format!(
                    "duplicate id {}",
                    record.id
                )));
            }
            if db.classes.last().is_some_and(|c| c.id >= record.id) {
                return Err(Error::InvalidDatabase(format!(
                    "ids must be increasing, found {} after {}",
                    record.id,
                    db.classes.last().unwrap().id
                )));
            }
            let reference = Spectrum::new(record.wavelengths_nm, record.values)?;
            let class = db.validate_new(
                record.id,
                &record.name,
                record.color,
                reference,
                record.taxonomy,
            )?;
            db.classes.push(class);
            db.next_id = record.id.0.saturating_add(1);
        }
        if let Some(next) = doc.next_id {
            if next < db.next_id {
                return Err(Error::InvalidDatabase(format!(
                    "next_id {next} is not above the largest class id"
                )));
            }
            db.next_id = next;
        }
        Ok(db)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DatabaseDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatabaseDocument {
    pub classes: Vec<ClassRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_id: Option<u16>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: ClassId,
    pub name: String,
    pub color: [u8; 3],
    #[serde(default)]
    pub taxonomy: Vec<String>,
    pub wavelengths_nm: Vec<f64>,
    pub values: Vec<f64>,
}
