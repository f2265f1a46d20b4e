//! Score normalization, sum-rule fusion, and ISO/IEC 30107-3 error rates.
//!
//! Decision rule everywhere: a sample is classified bona fide iff its score
//! is `>=` the threshold. APCER is the fraction of attack presentations
//! classified bona fide, BPCER the fraction of bona fide presentations
//! classified as attacks.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::PresentationLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub sample_id: String,
    pub label: PresentationLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !e.score.is_finite()) {
            return Err(Error::Contract(format!("score for {} is not finite", e.sample_id)));
        }
        Ok(Self { entries })
    }

    pub fn from_parts(scores: &[f64], labels: &[PresentationLabel]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Self::new(
            scores
                .iter()
                .zip(labels)
                .enumerate()
                .map(|(i, (&score, &label))| ScoreEntry {
                    sample_id: i.to_string(),
                    label,
                    score,
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

    pub fn count(&self, label: PresentationLabel) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    /// Writes the `sample_id,label,score` table.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        writer
            .write_record(["sample_id", "label", "score"])
            .map_err(|e| csv_error(path, e))?;
        for e in &self.entries {
            writer
                .write_record([e.sample_id.as_str(), e.label.as_str(), &format!("{:e}", e.score)])
                .map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["sample_id", "label", "score"] {
            return Err(Error::parse(
                path.display().to_string(),
                format!("expected header sample_id,label,score, found {headers:?}"),
            ));
        }
        let mut entries = Vec::new();
        for row in reader.deserialize() {
            entries.push(row.map_err(|e| csv_error(path, e))?);
        }
        if entries.is_empty() {
            return Err(Error::parse(path.display().to_string(), "no scores"));
        }
        Self::new(entries)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::parse(path.display().to_string(), e.to_string())
    }
}

/// Maps scores to `[0, 1]` using the `(min, max)` of reference scores,
/// clamping values outside that range.
pub fn minmax_normalize(scores: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = minmax_stats(reference)?;
    Ok(apply_minmax(scores, (lo, hi)))
}

pub fn minmax_stats(reference: &[f64]) -> Result<(f64, f64)> {
    let lo = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::Normalization(format!(
            "reference scores span [{lo}, {hi}]; need max > min"
        )));
    }
    Ok((lo, hi))
}

pub fn apply_minmax(scores: &[f64], (lo, hi): (f64, f64)) -> Vec<f64> {
    scores
        .iter()
        .map(|s| ((s - lo) / (hi - lo)).clamp(0.0, 1.0))
        .collect()
}

/// Per-sample mean of `K` aligned score lists.
pub fn sum_rule_fuse(lists: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = lists
        .first()
        .ok_or_else(|| Error::Contract("sum-rule fusion needs at least one score list".into()))?;
    if let Some(bad) = lists.iter().find(|l| l.len() != first.len()) {
        return Err(Error::Dimension(format!(
            "score lists have lengths {} and {}",
            first.len(),
            bad.len()
        )));
    }
    let k = lists.len() as f64;
    Ok((0..first.len())
        .map(|i| lists.iter().map(|l| l[i]).sum::<f64>() / k)
        .collect())
}

/// Scores split by class and sorted ascending.
struct Sorted {
    attack: Vec<f64>,
    bona: Vec<f64>,
}

impl Sorted {
    fn new(set: &ScoreSet) -> Result<Self> {
        let mut attack = Vec::new();
        let mut bona = Vec::new();
        for e in &set.entries {
            match e.label {
                PresentationLabel::Attack => attack.push(e.score),
                PresentationLabel::BonaFide => bona.push(e.score),
            }
        }
        if attack.is_empty() || bona.is_empty() {
            return Err(Error::SingleClass);
        }
        attack.sort_by(f64::total_cmp);
        bona.sort_by(f64::total_cmp);
        Ok(Self { attack, bona })
    }

    fn rates(&self, threshold: f64) -> (f64, f64) {
        let attacks_below = self.attack.partition_point(|&s| s < threshold);
        let bona_below = self.bona.partition_point(|&s| s < threshold);
        let apcer = (self.attack.len() - attacks_below) as f64 / self.attack.len() as f64;
        let bpcer = bona_below as f64 / self.bona.len() as f64;
        (apcer, bpcer)
    }
}

/// Candidate thresholds in ascending order: one step below the smallest
/// score, every distinct score, and one step above the largest.
pub fn candidate_thresholds(set: &ScoreSet) -> Vec<f64> {
    let mut scores = set.scores();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let (Some(&lo), Some(&hi)) = (scores.first(), scores.last()) else {
        return Vec::new();
    };
    let step = |v: f64| 1.0f64.max(v.abs() * 1e-9);
    let mut out = Vec::with_capacity(scores.len() + 2);
    out.push(lo - step(lo));
    out.extend(scores);
    out.push(hi + step(hi));
    out
}

pub fn apcer_bpcer(set: &ScoreSet, threshold: f64) -> Result<(f64, f64)> {
    Ok(Sorted::new(set)?.rates(threshold))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualErrorRate {
    pub eer: f64,
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// Detection equal error rate by a discrete sweep: the candidate threshold
/// minimizing `|APCER - BPCER|` (lowest threshold on ties), reporting the
/// midpoint `(APCER + BPCER) / 2` there.
pub fn d_eer(set: &ScoreSet) -> Result<EqualErrorRate> {
    let sorted = Sorted::new(set)?;
    let mut best: Option<EqualErrorRate> = None;
    for t in candidate_thresholds(set) {
        let (apcer, bpcer) = sorted.rates(t);
        let gap = (apcer - bpcer).abs();
        if best.is_none_or(|b| gap < (b.apcer - b.bpcer).abs()) {
            best = Some(EqualErrorRate {
                eer: 0.5 * (apcer + bpcer),
                threshold: t,
                apcer,
                bpcer,
            });
        }
    }
    Ok(best.expect("candidate set is never empty"))
}

/// Lowest BPCER among thresholds whose APCER does not exceed `target`.
pub fn bpcer_at_apcer(set: &ScoreSet, target: f64) -> Result<f64> {
    let sorted = Sorted::new(set)?;
    Ok(candidate_thresholds(set)
        .into_iter()
        .map(|t| sorted.rates(t))
        .filter(|(apcer, _)| *apcer <= target)
        .map(|(_, bpcer)| bpcer)
        .fold(1.0, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub apcer: f64,
    pub bpcer: f64,
}

/// Error trade-off points, ordered by ascending threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

pub fn det_curve(set: &ScoreSet) -> Result<DetCurve> {
    let sorted = Sorted::new(set)?;
    let points = candidate_thresholds(set)
        .into_iter()
        .map(|threshold| {
            let (apcer, bpcer) = sorted.rates(threshold);
            DetPoint {
                threshold,
                apcer,
                bpcer,
            }
        })
        .collect();
    Ok(DetCurve { points })
}

impl DetCurve {
    /// `threshold,apcer,bpcer` table with six decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::from("threshold,apcer,bpcer\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.6},{:.6},{:.6}", p.threshold, p.apcer, p.bpcer);
        }
        out
    }
}

/// Renders DET curves on log-scaled probit-free axes as a standalone SVG.
/// Rates of zero are drawn at the lower axis limit.
pub fn det_plot_svg(curves: &[(String, DetCurve)]) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 60.0;
    const FLOOR: f64 = 1e-3;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    let axis = |v: f64| {
        let v = v.max(FLOOR).min(1.0);
        (v.log10() - FLOOR.log10()) / -FLOOR.log10()
    };
    let px = |a: f64| MARGIN + axis(a) * SIZE;
    let py = |b: f64| MARGIN + SIZE - axis(b) * SIZE;
    let total = SIZE + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>"
    );
    for decade in [1e-3, 1e-2, 1e-1, 1.0] {
        let (x, y) = (px(decade), py(decade));
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{MARGIN}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}%</text>",
            MARGIN + SIZE,
            MARGIN + SIZE + 16.0,
            decade * 100.0
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/><text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}%</text>",
            MARGIN + SIZE,
            MARGIN - 6.0,
            decade * 100.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">APCER</text>",
        MARGIN + SIZE / 2.0,
        total - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">BPCER</text>",
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = colors[i % colors.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", px(p.apcer), py(p.bpcer)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{name}</text>",
            MARGIN + SIZE - 150.0,
            MARGIN + 18.0 + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use PresentationLabel::{Attack, BonaFide};

    fn set(attack: &[f64], bona: &[f64]) -> ScoreSet {
        let mut scores = attack.to_vec();
        scores.extend_from_slice(bona);
        let mut labels = vec![Attack; attack.len()];
        labels.extend(vec![BonaFide; bona.len()]);
        ScoreSet::from_parts(&scores, &labels).unwrap()
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_normalize(&[2.0, 4.0], &[2.0, 4.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(minmax_normalize(&[5.0], &[2.0, 4.0]).unwrap(), vec![1.0]);
        assert!(matches!(minmax_normalize(&[1.0], &[3.0, 3.0]), Err(Error::Normalization(_))));
    }

    #[test]
    fn fusion_examples() {
        assert_eq!(sum_rule_fuse(&[vec![0.2, 0.9]]).unwrap(), vec![0.2, 0.9]);
        assert_eq!(sum_rule_fuse(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(sum_rule_fuse(&[vec![0.0], vec![1.0, 0.0]]), Err(Error::Dimension(_))));
        assert!(sum_rule_fuse(&[]).is_err());
    }

    #[test]
    fn apcer_bpcer_examples() {
        let s = set(&[0.1, 0.1], &[0.9, 0.9]);
        assert_eq!(apcer_bpcer(&s, 0.5).unwrap(), (0.0, 0.0));
        let s = set(&[0.5; 3], &[0.5; 3]);
        assert_eq!(apcer_bpcer(&s, 0.5).unwrap(), (1.0, 0.0));
        assert!(matches!(apcer_bpcer(&set(&[0.1], &[]), 0.5), Err(Error::SingleClass)));
    }

    #[test]
    fn eer_examples() {
        assert_eq!(d_eer(&set(&[0.1, 0.2], &[0.8, 0.9])).unwrap().eer, 0.0);
        let same = [0.1, 0.4, 0.4, 0.7, 0.9];
        let r = d_eer(&set(&same, &same)).unwrap();
        assert!((r.eer - 0.5).abs() <= 1.0 / (2.0 * same.len() as f64));
    }

    #[test]
    fn bpcer_at_apcer_examples() {
        assert_eq!(bpcer_at_apcer(&set(&[0.1, 0.2], &[0.8, 0.9]), 0.05).unwrap(), 0.0);
        assert_eq!(bpcer_at_apcer(&set(&[0.5; 4], &[0.5; 4]), 0.05).unwrap(), 1.0);
    }

    #[test]
    fn det_examples() {
        let curve = det_curve(&set(&[0.1, 0.2], &[0.8, 0.9])).unwrap();
        assert!(curve.points.iter().any(|p| p.apcer == 0.0 && p.bpcer == 0.0));
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.apcer, first.bpcer), (1.0, 0.0));
        assert_eq!((last.apcer, last.bpcer), (0.0, 1.0));
        assert!(curve.points.windows(2).all(|w| w[0].threshold < w[1].threshold && w[1].apcer <= w[0].apcer));
        let table = curve.to_table();
        assert!(table.starts_with("threshold,apcer,bpcer\n"));
        assert!(table.lines().nth(1).unwrap().ends_with(",1.000000,0.000000"));
        assert!(det_plot_svg(&[("a".into(), curve)]).contains("<polyline"));
    }

    #[test]
    fn score_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let s = set(&[0.1, -3.25e-7], &[0.8, 12.5]);
        s.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_id,label,score\n"));
        assert_eq!(ScoreSet::read_csv(&path).unwrap(), s);
        std::fs::write(&path, "id,score\n1,0.5\n").unwrap();
        assert!(matches!(ScoreSet::read_csv(&path), Err(Error::Parse { .. })));
    }
}
