//! Small-scale convex reference for the soft-margin linear SVM: accelerated
//! projected gradient on the dual, then an exact line search for the bias.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto `{0 <= a <= c, sum a_i y_i = 0}` by bisection
/// on the multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(&vi, &yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let g = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub fn primal(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let hinge: f64 = x.iter().zip(y).map(|(xi, yi)| (1.0 - yi * (dot(xi, w) + b)).max(0.0)).sum();
    0.5 * dot(w, w) + c * hinge
}

pub struct Reference {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub primal: f64,
    pub dual: f64,
}

pub fn solve(x: &[Vec<f64>], y: &[f64], c: f64, iterations: usize) -> Reference {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * dot(&x[i], &x[j])).collect())
        .collect();
    let lipschitz = (0..n).map(|i| q[i][i]).sum::<f64>().max(1e-12);
    let mut alpha = project(&vec![0.0; n], y, c);
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n).map(|i| dot(&q[i], &momentum) - 1.0).collect();
        let step: Vec<f64> = momentum.iter().zip(&grad).map(|(a, g)| a - g / lipschitz).collect();
        let next = project(&step, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        momentum = next
            .iter()
            .zip(&alpha)
            .map(|(a, prev)| a + (t - 1.0) / t_next * (a - prev))
            .collect();
        alpha = next;
        t = t_next;
    }
    let d = x[0].len();
    let mut w = vec![0.0; d];
    for i in 0..n {
        for k in 0..d {
            w[k] += alpha[i] * y[i] * x[i][k];
        }
    }
    let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
    // The hinge sum is piecewise linear in b with kinks where a margin is
    // exactly 1, so its minimum sits on one of those kinks.
    let (bias, best) = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let b = yi - dot(xi, &w);
            (b, primal(x, y, &w, b, c))
        })
        .fold((0.0, f64::INFINITY), |acc, cand| if cand.1 < acc.1 { cand } else { acc });
    Reference {
        weights: w,
        bias,
        primal: best,
        dual,
    }
}

/// Width of the widest separating slab, by sweeping slab orientations in 2-D.
pub fn brute_force_margin_2d(points: &[[f64; 2]], y: &[f64], steps: usize) -> f64 {
    (0..steps)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / steps as f64;
            let u = [theta.cos(), theta.sin()];
            let proj = |p: &[f64; 2]| p[0] * u[0] + p[1] * u[1];
            let pos = points.iter().zip(y).filter(|(_, &l)| l > 0.0).map(|(p, _)| proj(p)).fold(f64::INFINITY, f64::min);
            let neg = points.iter().zip(y).filter(|(_, &l)| l < 0.0).map(|(p, _)| proj(p)).fold(f64::NEG_INFINITY, f64::max);
            pos - neg
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
