//! Fixtures shared by the criterion benches.

use fvpad::dataset::{render_subject, SynthConfig};
use fvpad::GrayImage;

/// A synthetic bona fide capture at the given size.
pub fn capture(width: usize, height: usize) -> GrayImage {
    let config = SynthConfig {
        n_subjects: 1,
        width,
        height,
        ..SynthConfig::default()
    };
    let captures = render_subject(&config, 0).expect("valid fixture config");
    captures.bona_fide[0][1].clone()
}

/// Interleaved bona fide / attack scores with partial overlap.
pub fn scores(n: usize) -> (Vec<f64>, Vec<fvpad::PresentationLabel>) {
    let mut scores = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let bona = i % 2 == 0;
        let jitter = ((i * 7919) % 1000) as f64 / 1000.0;
        scores.push(if bona { 0.3 + jitter } else { jitter });
        labels.push(if bona {
            fvpad::PresentationLabel::BonaFide
        } else {
            fvpad::PresentationLabel::Attack
        });
    }
    (scores, labels)
}
