//! Linear max-margin classifier trained by dual coordinate ascent.
//!
//! Training minimizes `1/2 |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))`
//! over min-max scaled features. The dual
//!
//! ```text
//! max  sum_i a_i - 1/2 |sum_i a_i y_i x_i|^2   s.t.  0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! is solved by analytic updates of coordinate pairs (the equality
//! constraint couples them). Each epoch visits samples in a seed-derived
//! permutation and pairs each with its most violating partner. Bona fide is
//! the positive class, so higher scores mean "more bona fide".

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::descriptors::{DescriptorKind, FeatureVector, SourceKind};
use crate::error::{Error, Result};
use crate::types::PresentationLabel;

/// Clamp applied to scaled test features.
pub const SCALED_RANGE: (f64, f64) = (-0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    pub epochs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 200,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// What a model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainMeta {
    pub descriptor_kind: DescriptorKind,
    pub source_kind: SourceKind,
    pub illumination: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-dimension `(min, max)` of the training features.
    pub feature_scale: Vec<(f64, f64)>,
    pub train_meta: Option<TrainMeta>,
}

/// Diagnostics from one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub max_violation: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Dual objective after each epoch (starting from the zero point).
    pub dual_trace: Vec<f64>,
}

fn scale_value(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Per-dimension `(min, max)` over the rows.
pub fn fit_scaling(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let dim = rows.first().map_or(0, Vec::len);
    (0..dim)
        .map(|j| {
            rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            })
        })
        .collect()
}

/// Min-max scales a training row (no clamping; constant dimensions map to 0).
pub fn scale_row(row: &[f64], scale: &[(f64, f64)]) -> Vec<f64> {
    row.iter().zip(scale).map(|(&v, &s)| scale_value(v, s)).collect()
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w . scale(x) + b`, with scaled values clamped to [`SCALED_RANGE`].
    pub fn score_raw(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.weights.len(),
                features.len()
            )));
        }
        let mut s = self.bias;
        for ((&x, &w), &sc) in features.iter().zip(&self.weights).zip(&self.feature_scale) {
            s += w * scale_value(x, sc).clamp(SCALED_RANGE.0, SCALED_RANGE.1);
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let row = |vals: &mut dyn Iterator<Item = f64>| {
            vals.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
        };
        let mut out = format!("LINSVM {}\n", self.weights.len());
        let _ = writeln!(out, "{}", row(&mut self.feature_scale.iter().map(|s| s.0)));
        let _ = writeln!(out, "{}", row(&mut self.feature_scale.iter().map(|s| s.1)));
        let _ = writeln!(out, "{}", row(&mut self.weights.iter().copied()));
        let _ = writeln!(out, "{:e}", self.bias);
        if let Some(meta) = &self.train_meta {
            let _ = writeln!(
                out,
                "# {} {} {}",
                meta.descriptor_kind, meta.source_kind, meta.illumination
            );
        }
        out
    }

    /// Parses the text form: `LINSVM dim`, a row of minima, a row of maxima,
    /// a row of weights, the bias, and an optional `# descriptor source
    /// illumination` trailer.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::parse("linear model", m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty model file".into()))?;
        let dim: usize = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["LINSVM", d] => d.parse().map_err(|e| bad(format!("bad dimension: {e}")))?,
            _ => return Err(bad(format!("bad header {header:?}"))),
        };
        let mut row = |name: &str| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {name} row")))?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| bad(format!("bad {name} value {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(vals)
        };
        let mins = row("min")?;
        let maxs = row("max")?;
        let weights = row("weight")?;
        let bias = row("bias")?;
        if mins.len() != dim || maxs.len() != dim || weights.len() != dim || bias.len() != 1 {
            return Err(bad("row lengths do not match header".into()));
        }
        let train_meta = match lines.next() {
            Some(line) => {
                let parts: Vec<&str> = line.trim_start_matches('#').split_whitespace().collect();
                match parts.as_slice() {
                    [d, s, i] => Some(TrainMeta {
                        descriptor_kind: d.parse()?,
                        source_kind: s.parse()?,
                        illumination: i.parse().map_err(|e| bad(format!("bad illumination: {e}")))?,
                    }),
                    _ => return Err(bad(format!("bad trailer {line:?}"))),
                }
            }
            None => None,
        };
        let model = Self {
            weights,
            bias: bias[0],
            feature_scale: mins.into_iter().zip(maxs).collect(),
            train_meta,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Contract("model weights must be finite".into()));
        }
        if self.feature_scale.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Contract("feature scale has min > max".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn score(model: &LinearModel, feature: &FeatureVector) -> Result<f64> {
    model.score_raw(&feature.bins)
}

/// Trains on descriptor histograms.
pub fn train(
    features: &[FeatureVector],
    labels: &[PresentationLabel],
    config: &TrainConfig,
) -> Result<(LinearModel, TrainReport)> {
    let rows: Vec<Vec<f64>> = features.iter().map(|f| f.bins.clone()).collect();
    let (mut model, report) = train_rows(&rows, labels, config)?;
    if let Some(first) = features.first() {
        if features
            .iter()
            .any(|f| f.descriptor_kind != first.descriptor_kind || f.source_kind != first.source_kind)
        {
            return Err(Error::Contract("features mix descriptor or source kinds".into()));
        }
        model.train_meta = Some(TrainMeta {
            descriptor_kind: first.descriptor_kind,
            source_kind: first.source_kind,
            illumination: 0,
        });
    }
    Ok((model, report))
}

/// Trains on plain feature rows.
pub fn train_rows(
    rows: &[Vec<f64>],
    labels: &[PresentationLabel],
    config: &TrainConfig,
) -> Result<(LinearModel, TrainReport)> {
    if !(config.c > 0.0 && config.c.is_finite()) || config.epochs == 0 || !(config.tol > 0.0) {
        return Err(Error::Contract(format!("invalid training config {config:?}")));
    }
    if rows.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Dimension("feature rows must share a nonzero dimension".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Contract("features must be finite".into()));
    }
    let positives = labels.iter().filter(|l| **l == PresentationLabel::BonaFide).count();
    let negatives = labels.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::Training(format!(
            "need at least 2 samples per class, got {positives} bona fide and {negatives} attack"
        )));
    }

    let feature_scale = fit_scaling(rows);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| scale_row(r, &feature_scale)).collect();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let solution = solve_dual(&x, &y, config);

    let mut weights = vec![0.0; dim];
    for ((xi, &yi), &ai) in x.iter().zip(&y).zip(&solution.alpha) {
        if ai != 0.0 {
            for (w, v) in weights.iter_mut().zip(xi) {
                *w += ai * yi * v;
            }
        }
    }
    let primal_objective = primal_objective(&x, &y, &weights, solution.bias, config.c);
    let model = LinearModel {
        weights,
        bias: solution.bias,
        feature_scale,
        train_meta: None,
    };
    model.validate()?;
    let report = TrainReport {
        epochs_run: solution.epochs,
        max_violation: solution.violation,
        primal_objective,
        dual_objective: *solution.trace.last().unwrap_or(&0.0),
        dual_trace: solution.trace,
    };
    Ok((model, report))
}

/// `1/2 |w|^2 + C * sum hinge` on already scaled rows.
pub fn primal_objective(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let f: f64 = xi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
            (1.0 - yi * f).max(0.0)
        })
        .sum();
    reg + c * hinge
}

struct DualSolution {
    alpha: Vec<f64>,
    bias: f64,
    epochs: usize,
    violation: f64,
    trace: Vec<f64>,
}

fn solve_dual(x: &[Vec<f64>], y: &[f64], config: &TrainConfig) -> DualSolution {
    let n = x.len();
    let c = config.c;
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum();
            q[i * n + j] = y[i] * y[j] * k;
            q[j * n + i] = q[i * n + j];
        }
    }
    let mut alpha = vec![0.0; n];
    // Gradient of the minimized form f(a) = 1/2 a'Qa - sum a.
    let mut grad = vec![-1.0; n];
    let dual = |alpha: &[f64], grad: &[f64]| -> f64 {
        // D = sum a - 1/2 a'Qa = -1/2 * sum a_i (grad_i - 1)
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = vec![0.0];
    let mut epochs = 0;
    let mut violation = max_violation(&alpha, &grad, y, &in_up, &in_low);

    while epochs < config.epochs && violation >= config.tol {
        epochs += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let vi = -y[i] * grad[i];
            // Pair i with the partner that violates the KKT conditions most.
            let best_partner = |want_low: bool| {
                let mut best = None;
                let mut best_v = if want_low { vi - config.tol } else { vi + config.tol };
                for j in 0..n {
                    let vj = -y[j] * grad[j];
                    let better = if want_low {
                        in_low(alpha[j], y[j]) && vj < best_v
                    } else {
                        in_up(alpha[j], y[j]) && vj > best_v
                    };
                    if j != i && better {
                        best_v = vj;
                        best = Some(j);
                    }
                }
                best
            };
            let as_up = if in_up(alpha[i], y[i]) {
                best_partner(true).map(|j| (i, j))
            } else {
                None
            };
            let pair = as_up.or_else(|| {
                if in_low(alpha[i], y[i]) {
                    best_partner(false).map(|j| (j, i))
                } else {
                    None
                }
            });
            let Some((up, low)) = pair else { continue };
            pair_update(up, low, &mut alpha, &mut grad, &q, y, c, n);
        }
        trace.push(dual(&alpha, &grad));
        violation = max_violation(&alpha, &grad, y, &in_up, &in_low);
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..n {
        let b = -y[i] * grad[i];
        if alpha[i] > 0.0 && alpha[i] < c {
            free_sum += b;
            free_count += 1;
        } else if in_up(alpha[i], y[i]) {
            lower = lower.max(b);
        } else {
            upper = upper.min(b);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else {
        upper
    };
    DualSolution {
        alpha,
        bias,
        epochs,
        violation,
        trace,
    }
}

fn max_violation(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    in_up: &dyn Fn(f64, f64) -> bool,
    in_low: &dyn Fn(f64, f64) -> bool,
) -> f64 {
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for i in 0..alpha.len() {
        let v = -y[i] * grad[i];
        if in_up(alpha[i], y[i]) {
            m_up = m_up.max(v);
        }
        if in_low(alpha[i], y[i]) {
            m_low = m_low.min(v);
        }
    }
    if m_up.is_finite() && m_low.is_finite() {
        (m_up - m_low).max(0.0)
    } else {
        0.0
    }
}

/// Analytic two-coordinate update keeping `sum a_i y_i` fixed, moving
/// along `a_i += y_i t`, `a_j -= y_j t` with `t >= 0`.
#[allow(clippy::too_many_arguments)]
fn pair_update(i: usize, j: usize, alpha: &mut [f64], grad: &mut [f64], q: &[f64], y: &[f64], c: f64, n: usize) {
    // Directional derivative of f along the move is -(v_i - v_j) <= 0.
    let vi = -y[i] * grad[i];
    let vj = -y[j] * grad[j];
    let curvature = q[i * n + i] + q[j * n + j] - 2.0 * y[i] * y[j] * q[i * n + j];
    let curvature = if curvature > 1e-12 { curvature } else { 1e-12 };
    let mut t = (vi - vj) / curvature;
    // Box limits for a_i + y_i t and a_j - y_j t.
    let limit_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
    let limit_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
    t = t.min(limit_i).min(limit_j).max(0.0);
    if t == 0.0 {
        return;
    }
    let new_i = (alpha[i] + y[i] * t).clamp(0.0, c);
    let new_j = (alpha[j] - y[j] * t).clamp(0.0, c);
    let di = new_i - alpha[i];
    let dj = new_j - alpha[j];
    alpha[i] = new_i;
    alpha[j] = new_j;
    for k in 0..n {
        grad[k] += q[k * n + i] * di + q[k * n + j] * dj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PresentationLabel::{Attack, BonaFide};

    fn toy() -> (Vec<Vec<f64>>, Vec<PresentationLabel>) {
        (
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![Attack, Attack, BonaFide, BonaFide],
        )
    }

    #[test]
    fn separable_toy_problem() {
        let (x, y) = toy();
        let (model, report) = train_rows(&x, &y, &TrainConfig::default()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let s = model.score_raw(xi).unwrap();
            assert_eq!(s > 0.0, *yi == BonaFide, "score {s} for {xi:?}");
        }
        // Every point sits on the margin of the solution w = (2, 0), b = -1.
        assert!((model.score_raw(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-4);
        assert!((model.weights[0] - 2.0).abs() < 1e-4 && model.weights[1].abs() < 1e-4);
        assert!(report.max_violation < 1e-6);
    }

    #[test]
    fn dual_trace_is_monotone() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![((i * 37) % 11) as f64, ((i * 13) % 7) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<PresentationLabel> = (0..30).map(|i| if (i * 7) % 5 < 2 { BonaFide } else { Attack }).collect();
        let (_, report) = train_rows(&x, &y, &TrainConfig::default()).unwrap();
        assert!(report.dual_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        // Weak duality.
        assert!(report.dual_objective <= report.primal_objective + 1e-9);
    }

    #[test]
    fn rejects_single_class_and_mismatch() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            train_rows(&x, &[Attack, Attack, Attack], &TrainConfig::default()),
            Err(Error::Training(_))
        ));
        assert!(matches!(
            train_rows(&x, &[Attack, BonaFide], &TrainConfig::default()),
            Err(Error::Dimension(_))
        ));
        let ragged = vec![vec![0.0], vec![1.0, 2.0], vec![0.0], vec![1.0]];
        assert!(train_rows(&ragged, &[Attack, Attack, BonaFide, BonaFide], &TrainConfig::default()).is_err());
    }

    #[test]
    fn constant_model_and_constant_dimension() {
        let model = LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.7,
            feature_scale: vec![(0.0, 1.0), (0.0, 1.0)],
            train_meta: None,
        };
        assert_eq!(model.score_raw(&[0.3, 9.0]).unwrap(), 0.7);
        assert!(matches!(model.score_raw(&[0.3]), Err(Error::Dimension(_))));

        let x = vec![vec![0.0, 5.0], vec![0.2, 5.0], vec![1.0, 5.0], vec![0.8, 5.0]];
        let (m, _) = train_rows(&x, &[Attack, Attack, BonaFide, BonaFide], &TrainConfig::default()).unwrap();
        let a = m.score_raw(&[0.5, 5.0]).unwrap();
        let b = m.score_raw(&[0.5, -100.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_text_round_trip() {
        let (x, y) = toy();
        let (mut model, _) = train_rows(&x, &y, &TrainConfig::default()).unwrap();
        model.train_meta = Some(TrainMeta {
            descriptor_kind: DescriptorKind::Lpq,
            source_kind: SourceKind::DiffuseMap,
            illumination: 2,
        });
        let back = LinearModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model);
        assert!(LinearModel::from_text("LINSVM 2\n0 0\n1 1\n").is_err());
        assert!(LinearModel::from_text("").is_err());
    }
}
