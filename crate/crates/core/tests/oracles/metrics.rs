//! Exhaustive threshold enumeration with per-sample counting.

use fvpad::metrics::ScoreSet;
use fvpad::PresentationLabel;

/// Every score, every midpoint between neighbouring distinct scores, and
/// both infinities, ascending.
pub fn all_thresholds(set: &ScoreSet) -> Vec<f64> {
    let mut s: Vec<f64> = set.entries.iter().map(|e| e.score).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    let mut out = vec![f64::NEG_INFINITY];
    for (i, v) in s.iter().enumerate() {
        if i > 0 {
            out.push(0.5 * (s[i - 1] + v));
        }
        out.push(*v);
    }
    out.push(f64::INFINITY);
    out
}

pub fn count_rates(set: &ScoreSet, threshold: f64) -> (f64, f64) {
    let (mut attacks, mut accepted_attacks, mut bona, mut rejected_bona) = (0usize, 0usize, 0usize, 0usize);
    for e in &set.entries {
        let accepted = e.score >= threshold;
        match e.label {
            PresentationLabel::Attack => {
                attacks += 1;
                if accepted {
                    accepted_attacks += 1;
                }
            }
            PresentationLabel::BonaFide => {
                bona += 1;
                if !accepted {
                    rejected_bona += 1;
                }
            }
        }
    }
    (accepted_attacks as f64 / attacks as f64, rejected_bona as f64 / bona as f64)
}

pub fn eer(set: &ScoreSet) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for t in all_thresholds(set) {
        let (a, b) = count_rates(set, t);
        if (a - b).abs() < best.0 {
            best = ((a - b).abs(), 0.5 * (a + b));
        }
    }
    best.1
}

pub fn bpcer_at_apcer(set: &ScoreSet, target: f64) -> f64 {
    all_thresholds(set)
        .into_iter()
        .map(|t| count_rates(set, t))
        .filter(|(a, _)| *a <= target)
        .map(|(_, b)| b)
        .fold(f64::INFINITY, f64::min)
}

/// Distinct achievable `(apcer, bpcer)` pairs, sorted.
pub fn det_points(set: &ScoreSet) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = all_thresholds(set).into_iter().map(|t| count_rates(set, t)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}
