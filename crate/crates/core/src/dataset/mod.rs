//! Manifests, subject-disjoint splits, image files, and the synthetic
//! capture generator.

mod pnm;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use pnm::{read_image, read_pfm, write_image, write_pfm_normals};
pub use synth::{render_subject, subject_id, synth_generate, SubjectCaptures, SynthConfig};

use crate::error::{Error, Result};
use crate::types::PresentationLabel;

pub const SESSIONS: u8 = 2;
pub const ILLUMINATIONS: u8 = 3;
pub const MANIFEST_HEADER: [&str; 5] = ["subject_id", "session", "illumination", "label", "path"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub session: u8,
    pub illumination: u8,
    pub label: PresentationLabel,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
}

/// Uniqueness key of an entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryKey {
    pub subject_id: String,
    pub session: u8,
    pub illumination: u8,
    pub label: PresentationLabel,
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(subject {}, session {}, illumination {}, {})",
            self.subject_id, self.session, self.illumination, self.label
        )
    }
}

impl ManifestEntry {
    pub fn key(&self) -> EntryKey {
        EntryKey {
            subject_id: self.subject_id.clone(),
            session: self.session,
            illumination: self.illumination,
            label: self.label,
        }
    }

    /// Identifier used in score files.
    pub fn sample_id(&self) -> String {
        format!("{}_s{}_{}", self.subject_id, self.session, self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory image paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    /// Validates and wraps entries.
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let manifest = Self {
            entries,
            base_dir: base_dir.into(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.subject_id.is_empty() || e.subject_id.contains(',') {
                return Err(Error::Manifest(format!("invalid subject id {:?}", e.subject_id)));
            }
            if !(1..=SESSIONS).contains(&e.session) {
                return Err(Error::Manifest(format!("session {} out of range in {}", e.session, e.key())));
            }
            if !(1..=ILLUMINATIONS).contains(&e.illumination) {
                return Err(Error::Manifest(format!(
                    "illumination {} out of range in {}",
                    e.illumination,
                    e.key()
                )));
            }
            if e.path.as_os_str().is_empty() {
                return Err(Error::Manifest(format!("empty path for {}", e.key())));
            }
            if !seen.insert(e.key()) {
                return Err(Error::Manifest(format!("duplicate key {}", e.key())));
            }
        }
        let mut cells: BTreeMap<(&str, PresentationLabel), usize> = BTreeMap::new();
        for e in &self.entries {
            *cells.entry((&e.subject_id, e.label)).or_default() += 1;
        }
        let full = (SESSIONS * ILLUMINATIONS) as usize;
        for ((subject, label), n) in cells {
            if n != full {
                return Err(Error::Manifest(format!(
                    "subject {subject} has {n} of {full} {label} captures (need 2 sessions x 3 illuminations)"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: PresentationLabel) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Sorted, distinct subject ids.
    pub fn subjects(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.subject_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    /// Entries ordered by key, the canonical processing order.
    pub fn sorted_entries(&self) -> Vec<&ManifestEntry> {
        let mut v: Vec<&ManifestEntry> = self.entries.iter().collect();
        v.sort_by_key(|e| e.key());
        v
    }

    fn restricted(&self, subjects: &BTreeSet<&str>) -> Manifest {
        Manifest {
            entries: self
                .entries
                .iter()
                .filter(|e| subjects.contains(e.subject_id.as_str()))
                .cloned()
                .collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = MANIFEST_HEADER.join(",");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.subject_id,
                e.session,
                e.illumination,
                e.label,
                e.path.to_string_lossy().replace('\\', "/")
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn parse_field<T: std::str::FromStr>(value: &str, line: u64, name: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::parse(format!("manifest line {line}"), format!("invalid {name} {value:?}")))
}

/// Parses manifest text; `base_dir` is where relative paths point.
pub fn parse_manifest(text: &str, base_dir: impl Into<PathBuf>) -> Result<Manifest> {
    if text.trim().is_empty() {
        return Err(Error::parse("manifest", "file is empty"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse("manifest header", e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::parse(
            "manifest header",
            format!("expected {}, found {:?}", MANIFEST_HEADER.join(","), header),
        ));
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse("manifest", e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        entries.push(ManifestEntry {
            subject_id: field(0).to_string(),
            session: parse_field(field(1), line, "session")?,
            illumination: parse_field(field(2), line, "illumination")?,
            label: field(3)
                .parse()
                .map_err(|_| Error::parse(format!("manifest line {line}"), format!("invalid label {:?}", field(3))))?,
            path: PathBuf::from(field(4)),
        });
    }
    if entries.is_empty() {
        return Err(Error::parse("manifest", "no entries"));
    }
    Manifest::new(entries, base_dir)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitConfig {
    pub n_train_subjects: usize,
    pub n_test_subjects: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            n_train_subjects: 36,
            n_test_subjects: 42,
            seed: 0,
        }
    }
}

/// Shuffles the sorted subject list with a seeded permutation; the first
/// `n_train_subjects` go to training and the next `n_test_subjects` to test.
pub fn subject_disjoint_split(manifest: &Manifest, config: &SplitConfig) -> Result<(Manifest, Manifest)> {
    let mut subjects = manifest.subjects();
    let needed = config.n_train_subjects + config.n_test_subjects;
    if config.n_train_subjects == 0 || config.n_test_subjects == 0 || needed > subjects.len() {
        return Err(Error::InsufficientSubjects {
            needed,
            available: subjects.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    subjects.shuffle(&mut rng);
    let train: BTreeSet<&str> = subjects[..config.n_train_subjects].iter().map(String::as_str).collect();
    let test: BTreeSet<&str> = subjects[config.n_train_subjects..needed].iter().map(String::as_str).collect();
    Ok((manifest.restricted(&train), manifest.restricted(&test)))
}
