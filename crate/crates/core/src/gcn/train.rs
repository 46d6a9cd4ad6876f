use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GcnError, GcnModel, Gradients, GraphInput};
use crate::ClassLabel;

#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub input: GraphInput,
    pub label: ClassLabel,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: GcnModel,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Mean (optionally class-weighted) cross-entropy over `batch` and its
/// gradient.
///
/// Per-sample gradients are evaluated in parallel and then summed in batch
/// order, so the result does not depend on the thread count.
pub fn loss_and_gradients(
    model: &GcnModel,
    batch: &[&LabeledGraph],
    class_weights: [f64; 2],
) -> Result<(f64, Gradients), GcnError> {
    if batch.is_empty() {
        return Err(GcnError::EmptyBatch);
    }
    let per_sample: Vec<(f64, Gradients)> = batch
        .par_iter()
        .map(|g| model.sample_loss_and_gradients(&g.input, g.label, class_weights[g.label.index()]))
        .collect::<Result<_, _>>()?;
    let norm: f64 = batch.iter().map(|g| class_weights[g.label.index()]).sum();
    let mut total = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for (l, g) in &per_sample {
        loss += l;
        total.add_assign(g);
    }
    let scale = 1.0 / norm;
    for layer in total.conv.iter_mut().chain(total.dense.iter_mut()) {
        layer.weights.data.iter_mut().for_each(|v| *v *= scale);
        layer.bias.iter_mut().for_each(|v| *v *= scale);
    }
    Ok((loss * scale, total))
}

fn class_weights(model: &GcnModel, data: &[LabeledGraph]) -> [f64; 2] {
    if !model.config.class_weighted {
        return [1.0, 1.0];
    }
    let mut counts = [0usize; 2];
    for g in data {
        counts[g.label.index()] += 1;
    }
    let n = data.len() as f64;
    counts.map(|c| if c == 0 { 0.0 } else { n / (2.0 * c as f64) })
}

/// Shuffled mini-batch SGD with the configured step-decay schedule.
///
/// The shuffle stream is seeded from `config.seed`, so two runs on the same
/// data give identical loss histories.
pub fn train(mut model: GcnModel, data: &[LabeledGraph]) -> Result<TrainingOutcome, GcnError> {
    if data.is_empty() {
        return Err(GcnError::EmptyBatch);
    }
    model.validate_shapes()?;
    let has_both = data.iter().any(|g| g.label == ClassLabel::Control) && data.iter().any(|g| g.label == ClassLabel::Insomnia);
    if !has_both {
        log::warn!("training set holds a single class ({} graphs)", data.len());
    }
    let weights = class_weights(&model, data);
    let config = model.config.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = config.learning_rate(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&LabeledGraph> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, grads) = loss_and_gradients(&model, &batch, weights)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(GcnError::NonFiniteLoss { epoch, batch: b, lr });
            }
            epoch_loss += loss;
            n_batches += 1;
            if lr == 0.0 {
                continue;
            }
            let step = grads.flatten();
            for (p, g) in model.parameters_mut().into_iter().zip(step) {
                *p -= lr * g;
            }
        }
        let mean = epoch_loss / n_batches as f64;
        log::debug!("epoch {epoch}: lr {lr:e}, loss {mean:.5}");
        loss_history.push(mean);
    }
    Ok(TrainingOutcome { model, loss_history })
}
