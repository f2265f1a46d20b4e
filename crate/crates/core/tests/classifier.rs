mod oracles;

use fvpad::classifier::*;
use fvpad::PresentationLabel::{self, Attack, BonaFide};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels_of(y: &[f64]) -> Vec<PresentationLabel> {
    y.iter().map(|&v| if v > 0.0 { BonaFide } else { Attack }).collect()
}

fn noisy_problem(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let direction: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = row.iter().zip(&direction).map(|(a, b)| (a - 0.5) * b).sum::<f64>() + rng.random_range(-0.3..0.3);
        let label = if i == 0 { 1.0 } else if i == 1 { -1.0 } else if s >= 0.0 { 1.0 } else { -1.0 };
        x.push(row);
        y.push(label);
    }
    (x, y)
}

#[test]
fn objective_matches_convex_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = TrainConfig {
        epochs: 2000,
        ..TrainConfig::default()
    };
    for _ in 0..20 {
        let (rows, y) = noisy_problem(&mut rng, 30, 5);
        let (model, _) = train_rows(&rows, &labels_of(&y), &config).unwrap();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scale_row(r, &model.feature_scale)).collect();
        let ours = oracles::svm::primal(&scaled, &y, &model.weights, model.bias, config.c);
        let reference = oracles::svm::solve(&scaled, &y, config.c, 20_000);
        assert!(reference.dual <= reference.primal + 1e-9);
        let rel = (ours - reference.primal).abs() / reference.primal;
        assert!(rel <= 0.01, "objective {ours} vs oracle {}", reference.primal);
    }
}

#[test]
fn separable_toy_set_has_zero_training_error_and_max_margin() {
    let points = [[0.0, 0.0], [0.2, 1.0], [0.1, 0.5], [1.0, 0.1], [0.9, 0.9], [0.8, 0.4]];
    let y = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let config = TrainConfig {
        c: 1e4,
        epochs: 5000,
        ..TrainConfig::default()
    };
    let (model, _) = train_rows(&rows, &labels_of(&y), &config).unwrap();
    for (r, l) in rows.iter().zip(&y) {
        assert!(model.score_raw(r).unwrap() * l > 0.0);
    }
    // Rows already span [0, 1] per dimension, so scaling is the identity.
    assert_eq!(model.feature_scale, vec![(0.0, 1.0), (0.0, 1.0)]);
    let norm = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let ours = 2.0 / norm;
    let brute = oracles::svm::brute_force_margin_2d(&points, &y, 200_000);
    assert!((ours - brute).abs() <= 1e-3 * brute, "margin {ours} vs {brute}");
}

#[test]
fn symmetric_data_puts_center_on_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..10 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let shift = [0.3, 0.1, -0.2];
        rows.push(p.iter().zip(shift).map(|(a, s)| a + s).collect::<Vec<_>>());
        y.push(1.0);
        rows.push(p.iter().zip(shift).map(|(a, s)| 2.0 - (a + s)).collect::<Vec<_>>());
        y.push(-1.0);
    }
    // Point reflection about (1, 1, 1) swaps the classes.
    let config = TrainConfig {
        epochs: 5000,
        tol: 1e-9,
        ..TrainConfig::default()
    };
    let (model, _) = train_rows(&rows, &labels_of(&y), &config).unwrap();
    let center = model.score_raw(&[1.0, 1.0, 1.0]).unwrap();
    assert!(center.abs() <= 1e-6, "score at center {center}");
}

#[test]
fn positive_feature_scaling_preserves_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (rows, y) = noisy_problem(&mut rng, 40, 4);
    let config = TrainConfig::default();
    let (a, _) = train_rows(&rows, &labels_of(&y), &config).unwrap();
    let stretched: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * 4.0 + 1.0).collect()).collect();
    let (b, _) = train_rows(&stretched, &labels_of(&y), &config).unwrap();
    for (r, s) in rows.iter().zip(&stretched) {
        let (sa, sb) = (a.score_raw(r).unwrap(), b.score_raw(s).unwrap());
        assert!(sa.signum() == sb.signum() || sa.abs() < 1e-9, "{sa} vs {sb}");
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (rows, y) = noisy_problem(&mut rng, 50, 6);
    let config = TrainConfig { seed: 42, ..TrainConfig::default() };
    let (a, ra) = train_rows(&rows, &labels_of(&y), &config).unwrap();
    let (b, rb) = train_rows(&rows, &labels_of(&y), &config).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(ra.dual_trace, rb.dual_trace);
    let bits = |m: &LinearModel| m.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.bias.to_bits(), b.bias.to_bits());
}
