//! End-to-end orchestration: map preparation, per-map/per-illumination
//! training, scoring, fusion, and reports.
//!
//! A trained bundle is a directory holding `config.txt` (key=value
//! snapshot), `models/<source>_i<k>.svm`, `fusion.txt` (per-model training
//! score ranges for min-max normalization), `train_report.txt`, and
//! `bsif.txt` when the descriptor is BSIF.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{self, LinearModel, TrainConfig, TrainMeta};
use crate::dataset::{self, load_manifest, subject_disjoint_split, Manifest, ManifestEntry, SplitConfig};
use crate::decomposition::{decompose, SolverConfig};
use crate::descriptors::{
    extract, learn_bsif_filters, BsifLearning, Descriptor, DescriptorKind, FeatureVector, FilterBank, MapSource,
    SourceKind, DEFAULT_FILTER_COUNT, DEFAULT_FILTER_SIZE,
};
use crate::error::{Error, Result};
use crate::metrics::{self, ScoreEntry, ScoreSet};
use crate::types::{GrayImage, NormalMap, PresentationLabel, ScalarMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Descriptors on decomposed normal and diffuse maps.
    Proposed,
    /// Descriptors on raw captures.
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Baseline => "baseline",
        }
    }

    pub fn sources(self) -> &'static [SourceKind] {
        match self {
            Mode::Proposed => &[SourceKind::NormalMap, SourceKind::DiffuseMap],
            Mode::Baseline => &[SourceKind::Raw],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Mode::Proposed),
            "baseline" => Ok(Mode::Baseline),
            other => Err(Error::parse("mode", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsifSettings {
    pub filter_count: usize,
    pub filter_size: usize,
    /// Patches sampled from training bona fide captures.
    pub patches: usize,
}

impl Default for BsifSettings {
    fn default() -> Self {
        Self {
            filter_count: DEFAULT_FILTER_COUNT,
            filter_size: DEFAULT_FILTER_SIZE,
            patches: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub descriptor: DescriptorKind,
    pub mode: Mode,
    pub solver: SolverConfig,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub bsif: BsifSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            descriptor: DescriptorKind::Bsif,
            mode: Mode::Proposed,
            solver: SolverConfig::default(),
            train: TrainConfig::default(),
            split: SplitConfig::default(),
            bsif: BsifSettings::default(),
        }
    }
}

impl PipelineConfig {
    /// Sets every seed from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.solver.seed = seed;
        self.train.seed = seed;
        self.split.seed = seed;
        self
    }

    pub fn to_snapshot(&self) -> String {
        let pairs: [(&str, String); 14] = [
            ("descriptor", self.descriptor.to_string()),
            ("mode", self.mode.to_string()),
            ("solver.max_outer_iterations", self.solver.max_outer_iterations.to_string()),
            ("solver.convergence_tol", format!("{:e}", self.solver.convergence_tol)),
            ("solver.smoothness_weight", format!("{:e}", self.solver.smoothness_weight)),
            ("solver.shading_floor", format!("{:e}", self.solver.shading_floor)),
            ("solver.seed", self.solver.seed.to_string()),
            ("svm.c", format!("{:e}", self.train.c)),
            ("svm.epochs", self.train.epochs.to_string()),
            ("svm.tol", format!("{:e}", self.train.tol)),
            ("svm.seed", self.train.seed.to_string()),
            ("split.train_subjects", self.split.n_train_subjects.to_string()),
            ("split.test_subjects", self.split.n_test_subjects.to_string()),
            ("split.seed", self.split.seed.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k}={v}");
        }
        let _ = writeln!(out, "bsif.filter_count={}", self.bsif.filter_count);
        let _ = writeln!(out, "bsif.filter_size={}", self.bsif.filter_size);
        let _ = writeln!(out, "bsif.patches={}", self.bsif.patches);
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config snapshot", format!("line {} is not key=value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
            let raw = map
                .get(key)
                .ok_or_else(|| Error::parse("config snapshot", format!("missing key {key}")))?;
            raw.parse()
                .map_err(|_| Error::parse("config snapshot", format!("invalid value {raw:?} for {key}")))
        }
        let descriptor: String = get(&map, "descriptor")?;
        let mode: String = get(&map, "mode")?;
        Ok(Self {
            descriptor: descriptor.parse()?,
            mode: mode.parse()?,
            solver: SolverConfig {
                max_outer_iterations: get(&map, "solver.max_outer_iterations")?,
                convergence_tol: get(&map, "solver.convergence_tol")?,
                smoothness_weight: get(&map, "solver.smoothness_weight")?,
                shading_floor: get(&map, "solver.shading_floor")?,
                seed: get(&map, "solver.seed")?,
            },
            train: TrainConfig {
                c: get(&map, "svm.c")?,
                epochs: get(&map, "svm.epochs")?,
                tol: get(&map, "svm.tol")?,
                seed: get(&map, "svm.seed")?,
            },
            split: SplitConfig {
                n_train_subjects: get(&map, "split.train_subjects")?,
                n_test_subjects: get(&map, "split.test_subjects")?,
                seed: get(&map, "split.seed")?,
            },
            bsif: BsifSettings {
                filter_count: get(&map, "bsif.filter_count")?,
                filter_size: get(&map, "bsif.filter_size")?,
                patches: get(&map, "bsif.patches")?,
            },
        })
    }
}

/// One capture with the maps the configured mode needs.
#[derive(Debug, Clone)]
pub struct Sample {
    pub entry: ManifestEntry,
    pub raw: GrayImage,
    pub decomposed: Option<(NormalMap, ScalarMap)>,
}

impl Sample {
    pub fn source(&self, kind: SourceKind) -> Result<MapSource<'_>> {
        match (kind, &self.decomposed) {
            (SourceKind::Raw, _) => Ok(MapSource::Raw(&self.raw)),
            (SourceKind::NormalMap, Some((normal, _))) => Ok(MapSource::Normal(normal)),
            (SourceKind::DiffuseMap, Some((_, diffuse))) => Ok(MapSource::Diffuse(diffuse)),
            _ => Err(Error::Contract(format!(
                "sample {} has no decomposed maps",
                self.entry.sample_id()
            ))),
        }
    }
}

/// Loads every entry in canonical order, decomposing when `mode` needs it.
pub fn prepare_samples(manifest: &Manifest, mode: Mode, solver: &SolverConfig) -> Result<Vec<Sample>> {
    manifest
        .sorted_entries()
        .into_par_iter()
        .map(|entry| {
            let raw = dataset::read_image(&manifest.resolve(entry))?;
            let decomposed = match mode {
                Mode::Baseline => None,
                Mode::Proposed => {
                    let r = decompose(&raw, solver)?;
                    Some((r.normal_map, r.diffuse))
                }
            };
            Ok(Sample {
                entry: entry.clone(),
                raw,
                decomposed,
            })
        })
        .collect()
}

/// Learns a BSIF bank from patches of the training bona fide raw captures.
pub fn learn_filter_bank(samples: &[Sample], settings: &BsifSettings, seed: u64) -> Result<BsifLearning> {
    let images: Vec<&GrayImage> = samples
        .iter()
        .filter(|s| s.entry.label == PresentationLabel::BonaFide)
        .map(|s| &s.raw)
        .collect();
    let size = settings.filter_size;
    if images.is_empty() || images.iter().any(|im| im.width() < size || im.height() < size) {
        return Err(Error::Training(format!(
            "no bona fide training captures large enough for {size}x{size} patches"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patches: Vec<Vec<f64>> = (0..settings.patches)
        .map(|_| {
            let img = images[rng.random_range(0..images.len())];
            let x0 = rng.random_range(0..=img.width() - size);
            let y0 = rng.random_range(0..=img.height() - size);
            let mut p = Vec::with_capacity(size * size);
            for y in y0..y0 + size {
                for x in x0..x0 + size {
                    p.push(img.get(x, y));
                }
            }
            p
        })
        .collect();
    learn_bsif_filters(&patches, size, settings.filter_count, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelKey {
    pub source: SourceKind,
    pub illumination: u8,
}

impl ModelKey {
    pub fn name(&self) -> String {
        format!("{}_i{}", self.source, self.illumination)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub key: ModelKey,
    pub model: LinearModel,
    /// `(min, max)` of the model's scores on its own training set.
    pub score_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub config: PipelineConfig,
    pub bank: Option<FilterBank>,
    pub models: Vec<TrainedModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub key: ModelKey,
    pub bona_fide: usize,
    pub attack: usize,
    pub epochs: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub models: Vec<ModelSummary>,
    /// `(converged, iterations)` of BSIF filter learning.
    pub bsif: Option<(bool, usize)>,
}

impl TrainSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::from("model,bonafide,attack,epochs,primal_objective,dual_objective,max_violation\n");
        for m in &self.models {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.3e}",
                m.key.name(),
                m.bona_fide,
                m.attack,
                m.epochs,
                m.primal_objective,
                m.dual_objective,
                m.max_violation
            );
        }
        if let Some((converged, iterations)) = self.bsif {
            let _ = writeln!(out, "# bsif ica converged={converged} iterations={iterations}");
        }
        out
    }
}

fn descriptor_of(kind: DescriptorKind, bank: Option<&FilterBank>) -> Result<Descriptor> {
    Ok(match kind {
        DescriptorKind::Lbp => Descriptor::Lbp,
        DescriptorKind::Lpq => Descriptor::Lpq,
        DescriptorKind::Bsif => Descriptor::Bsif(
            bank.cloned()
                .ok_or_else(|| Error::Contract("BSIF needs a filter bank".into()))?,
        ),
    })
}

/// Features of every sample for every source of `mode`, in sample order.
pub fn extract_features(samples: &[Sample], mode: Mode, descriptor: &Descriptor) -> Result<Vec<Vec<FeatureVector>>> {
    samples
        .par_iter()
        .map(|s| {
            mode.sources()
                .iter()
                .map(|&kind| extract(s.source(kind)?, descriptor))
                .collect()
        })
        .collect()
}

/// Trains one model per (source, illumination) on prepared training samples.
pub fn train_bundle(samples: &[Sample], config: &PipelineConfig) -> Result<(Bundle, TrainSummary)> {
    let learning = match config.descriptor {
        DescriptorKind::Bsif => Some(learn_filter_bank(samples, &config.bsif, config.train.seed)?),
        _ => None,
    };
    let bank = learning.as_ref().map(|l| l.bank.clone());
    let descriptor = descriptor_of(config.descriptor, bank.as_ref())?;
    let features = extract_features(samples, config.mode, &descriptor)?;

    let mut models = Vec::new();
    let mut summaries = Vec::new();
    for (si, &source) in config.mode.sources().iter().enumerate() {
        for illumination in 1..=dataset::ILLUMINATIONS {
            let key = ModelKey { source, illumination };
            let (feats, labels): (Vec<FeatureVector>, Vec<PresentationLabel>) = samples
                .iter()
                .zip(&features)
                .filter(|(s, _)| s.entry.illumination == illumination)
                .map(|(s, f)| (f[si].clone(), s.entry.label))
                .unzip();
            let (mut model, report) = classifier::train(&feats, &labels, &config.train)?;
            model.train_meta = Some(TrainMeta {
                descriptor_kind: config.descriptor,
                source_kind: source,
                illumination,
            });
            let scores = feats.iter().map(|f| classifier::score(&model, f)).collect::<Result<Vec<_>>>()?;
            let score_range = metrics::minmax_stats(&scores)?;
            let bona_fide = labels.iter().filter(|l| **l == PresentationLabel::BonaFide).count();
            summaries.push(ModelSummary {
                key,
                bona_fide,
                attack: labels.len() - bona_fide,
                epochs: report.epochs_run,
                primal_objective: report.primal_objective,
                dual_objective: report.dual_objective,
                max_violation: report.max_violation,
            });
            models.push(TrainedModel {
                key,
                model,
                score_range,
            });
        }
    }
    Ok((
        Bundle {
            config: config.clone(),
            bank,
            models,
        },
        TrainSummary {
            models: summaries,
            bsif: learning.map(|l| (l.converged, l.iterations)),
        },
    ))
}

/// Raw per-model scores and the fused score of every presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalScores {
    pub per_model: Vec<(ModelKey, ScoreSet)>,
    pub fused: ScoreSet,
}

/// Scores test samples with every model of the bundle. Samples are grouped
/// into presentations (subject, session, label); the fused score of a
/// presentation is the mean of its min-max normalized model scores.
pub fn score_samples(bundle: &Bundle, samples: &[Sample]) -> Result<EvalScores> {
    let descriptor = descriptor_of(bundle.config.descriptor, bundle.bank.as_ref())?;
    let features = extract_features(samples, bundle.config.mode, &descriptor)?;
    let sources = bundle.config.mode.sources();

    let mut per_model = Vec::new();
    let mut normalized: BTreeMap<String, (PresentationLabel, Vec<f64>)> = BTreeMap::new();
    for tm in &bundle.models {
        let si = sources
            .iter()
            .position(|s| *s == tm.key.source)
            .ok_or_else(|| Error::Contract(format!("model {} does not match mode", tm.key.name())))?;
        let mut entries = Vec::new();
        for (s, f) in samples.iter().zip(&features) {
            if s.entry.illumination != tm.key.illumination {
                continue;
            }
            let score = classifier::score(&tm.model, &f[si])?;
            entries.push(ScoreEntry {
                sample_id: s.entry.sample_id(),
                label: s.entry.label,
                score,
            });
        }
        let set = ScoreSet::new(entries)?;
        let norm = metrics::apply_minmax(&set.scores(), tm.score_range);
        for (e, v) in set.entries.iter().zip(norm) {
            normalized
                .entry(e.sample_id.clone())
                .or_insert_with(|| (e.label, Vec::new()))
                .1
                .push(v);
        }
        per_model.push((tm.key, set));
    }
    let expected = bundle.models.len();
    let mut fused = Vec::with_capacity(normalized.len());
    for (sample_id, (label, scores)) in normalized {
        if scores.len() != expected {
            return Err(Error::Dimension(format!(
                "presentation {sample_id} has {} of {expected} model scores",
                scores.len()
            )));
        }
        fused.push(ScoreEntry {
            sample_id,
            label,
            score: scores.iter().sum::<f64>() / expected as f64,
        });
    }
    Ok(EvalScores {
        per_model,
        fused: ScoreSet::new(fused)?,
    })
}

impl Bundle {
    pub fn save(&self, dir: &Path, summary: &TrainSummary) -> Result<()> {
        let models_dir = dir.join("models");
        std::fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
        write_text(&dir.join("config.txt"), &self.config.to_snapshot())?;
        if let Some(bank) = &self.bank {
            bank.save(&dir.join("bsif.txt"))?;
        }
        let mut ranges = String::new();
        for tm in &self.models {
            tm.model.save(&models_dir.join(format!("{}.svm", tm.key.name())))?;
            let _ = writeln!(ranges, "{} {:e} {:e}", tm.key.name(), tm.score_range.0, tm.score_range.1);
        }
        write_text(&dir.join("fusion.txt"), &ranges)?;
        write_text(&dir.join("train_report.txt"), &summary.to_text())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config = PipelineConfig::from_snapshot(&read_text(&dir.join("config.txt"))?)?;
        let bank = match config.descriptor {
            DescriptorKind::Bsif => Some(FilterBank::load(&dir.join("bsif.txt"))?),
            _ => None,
        };
        let fusion_path = dir.join("fusion.txt");
        let mut ranges = BTreeMap::new();
        for line in read_text(&fusion_path)?.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [name, lo, hi] => lo.parse::<f64>().ok().zip(hi.parse::<f64>().ok()).map(|r| (name.to_string(), r)),
                _ => None,
            };
            let (name, range) =
                parsed.ok_or_else(|| Error::parse(fusion_path.display().to_string(), format!("bad line {line:?}")))?;
            ranges.insert(name, range);
        }
        let mut models = Vec::new();
        for &source in config.mode.sources() {
            for illumination in 1..=dataset::ILLUMINATIONS {
                let key = ModelKey { source, illumination };
                let model = LinearModel::load(&dir.join("models").join(format!("{}.svm", key.name())))?;
                let score_range = *ranges.get(&key.name()).ok_or_else(|| {
                    Error::parse(fusion_path.display().to_string(), format!("missing range for {}", key.name()))
                })?;
                models.push(TrainedModel {
                    key,
                    model,
                    score_range,
                });
            }
        }
        Ok(Self { config, bank, models })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Runs `body` inside `dir`, removing whatever it created if it fails.
/// `dir` must be absent or empty.
fn with_fresh_dir<T>(dir: &Path, body: impl FnOnce() -> Result<T>) -> Result<T> {
    let existed = dir.exists();
    if existed {
        let mut it = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if it.next().is_some() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output directory is not empty"),
            ));
        }
    } else {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let result = body();
    if result.is_err() {
        let _ = std::fs::remove_dir_all(dir);
        if existed {
            let _ = std::fs::create_dir_all(dir);
        }
    }
    result
}

/// Splits the manifest, trains on the training subjects, and writes the
/// bundle to `out_dir`.
pub fn run_train(manifest_path: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<TrainSummary> {
    let manifest = load_manifest(manifest_path)?;
    let (train, _) = subject_disjoint_split(&manifest, &config.split)?;
    with_fresh_dir(out_dir, || {
        let samples = prepare_samples(&train, config.mode, &config.solver)?;
        let (bundle, summary) = train_bundle(&samples, config)?;
        bundle.save(out_dir, &summary)?;
        Ok(summary)
    })
}

pub const FUSED_SCORES: &str = "fused.csv";

/// Scores the test subjects of the bundle's split; writes one score file per
/// model plus the fused file and `report.txt` to `out_dir`. Returns the report.
pub fn run_eval(manifest_path: &Path, bundle_dir: &Path, out_dir: &Path) -> Result<String> {
    let bundle = Bundle::load(bundle_dir)?;
    let manifest = load_manifest(manifest_path)?;
    let (_, test) = subject_disjoint_split(&manifest, &bundle.config.split)?;
    with_fresh_dir(out_dir, || {
        let samples = prepare_samples(&test, bundle.config.mode, &bundle.config.solver)?;
        let scores = score_samples(&bundle, &samples)?;
        write_scores(&scores, out_dir)?;
        let report = report_from_score_dir(out_dir, &report_title(&bundle.config))?;
        write_text(&out_dir.join("report.txt"), &report)?;
        Ok(report)
    })
}

pub fn report_title(config: &PipelineConfig) -> String {
    format!("{} / {}", config.descriptor, config.mode)
}

pub fn write_scores(scores: &EvalScores, dir: &Path) -> Result<()> {
    for (key, set) in &scores.per_model {
        set.write_csv(&dir.join(format!("{}.csv", key.name())))?;
    }
    scores.fused.write_csv(&dir.join(FUSED_SCORES))
}

/// D-EER, BPCER@APCER=5% and BPCER@APCER=10%, as fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub d_eer: f64,
    pub bpcer_at_5: f64,
    pub bpcer_at_10: f64,
}

pub fn metric_row(set: &ScoreSet) -> Result<MetricRow> {
    Ok(MetricRow {
        d_eer: metrics::d_eer(set)?.eer,
        bpcer_at_5: metrics::bpcer_at_apcer(set, 0.05)?,
        bpcer_at_10: metrics::bpcer_at_apcer(set, 0.10)?,
    })
}

fn pct(v: f64) -> String {
    format!("{:.3}", 100.0 * v)
}

/// Builds the evaluation report from score files alone: a per-illumination
/// table (one row per map source) and the fused row, values in percent.
pub fn report_from_score_dir(dir: &Path, title: &str) -> Result<String> {
    let mut per_source: BTreeMap<String, BTreeMap<u8, MetricRow>> = BTreeMap::new();
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    names.sort();
    for path in &names {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((source, illum)) = stem.rsplit_once("_i") else {
            continue;
        };
        let Ok(illum) = illum.parse::<u8>() else {
            continue;
        };
        let row = metric_row(&ScoreSet::read_csv(path)?)?;
        per_source.entry(source.to_string()).or_default().insert(illum, row);
    }
    let fused = metric_row(&ScoreSet::read_csv(&dir.join(FUSED_SCORES))?)?;

    let mut out = format!("# {title}\n\nper-illumination (percent)\n");
    out.push_str("map,deer_i1,deer_i2,deer_i3,bpcer5_i1,bpcer5_i2,bpcer5_i3,bpcer10_i1,bpcer10_i2,bpcer10_i3\n");
    for (source, rows) in &per_source {
        let col = |f: fn(&MetricRow) -> f64| -> Vec<String> {
            (1..=dataset::ILLUMINATIONS)
                .map(|i| rows.get(&i).map_or_else(|| "-".to_string(), |r| pct(f(r))))
                .collect()
        };
        let mut cells = vec![source.clone()];
        cells.extend(col(|r| r.d_eer));
        cells.extend(col(|r| r.bpcer_at_5));
        cells.extend(col(|r| r.bpcer_at_10));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out.push_str("\nfused (sum rule, percent)\ndeer,bpcer5,bpcer10\n");
    let _ = writeln!(out, "{},{},{}", pct(fused.d_eer), pct(fused.bpcer_at_5), pct(fused.bpcer_at_10));
    Ok(out)
}

/// Writes `<name>.det.csv` for every score file and one combined `det.svg`.
pub fn run_det(score_files: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut curves = Vec::new();
    let mut written = Vec::new();
    for path in score_files {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scores")
            .to_string();
        let curve = metrics::det_curve(&ScoreSet::read_csv(path)?)?;
        let table = out_dir.join(format!("{name}.det.csv"));
        write_text(&table, &curve.to_table())?;
        written.push(table);
        curves.push((name, curve));
    }
    let plot = out_dir.join("det.svg");
    write_text(&plot, &metrics::det_plot_svg(&curves))?;
    written.push(plot);
    Ok(written)
}
