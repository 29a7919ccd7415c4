use super::ProbeModel;

/// Numerically stable softmax, in place.
pub(crate) fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Mean softmax cross-entropy over a batch and its gradient.
///
/// `xs` holds `labels.len()` rows of `model.dim()` features. Returns the loss,
/// the weight gradient (classes x dim, row-major) and the bias gradient.
pub fn loss_and_gradient(
    model: &ProbeModel,
    xs: &[f64],
    labels: &[usize],
) -> (f64, Vec<f64>, Vec<f64>) {
    let dim = model.dim();
    let k = model.classes();
    let mut grad_w = vec![0.0; k * dim];
    let mut grad_b = vec![0.0; k];
    let mut loss = 0.0;
    let mut probs = vec![0.0; k];
    for (x, &y) in xs.chunks_exact(dim).zip(labels) {
        model.logits_into(x, &mut probs);
        let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + probs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        loss += lse - probs[y];
        softmax(&mut probs);
        probs[y] -= 1.0;
        for (c, &d) in probs.iter().enumerate() {
            grad_b[c] += d;
            for (g, &xi) in grad_w[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                *g += d * xi;
            }
        }
    }
    let n = labels.len().max(1) as f64;
    grad_w.iter_mut().for_each(|g| *g /= n);
    grad_b.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad_w, grad_b)
}

/// Mean cross-entropy only.
pub fn loss(model: &ProbeModel, xs: &[f64], labels: &[usize]) -> f64 {
    let mut logits = vec![0.0; model.classes()];
    let total: f64 = xs
        .chunks_exact(model.dim())
        .zip(labels)
        .map(|(x, &y)| {
            model.logits_into(x, &mut logits);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln() - logits[y]
        })
        .sum();
    total / labels.len().max(1) as f64
}
