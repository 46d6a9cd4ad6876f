use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DenseMatrix, GcnError};
use crate::ClassLabel;

pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub gcn_layers: Vec<usize>,
    pub leaky_slope: f64,
    /// Hidden and output widths; the last must be 2.
    pub dense_layers: Vec<usize>,
    pub readout: Readout,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_decay_every: usize,
    pub lr_decay_factor: f64,
    /// Weight the loss by inverse class frequency.
    pub class_weighted: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gcn_layers: vec![32, 32],
            leaky_slope: 0.01,
            dense_layers: vec![16, 2],
            readout: Readout::Mean,
            epochs: 30,
            batch_size: 64,
            lr0: 0.01,
            lr_decay_every: 10,
            lr_decay_factor: 10.0,
            class_weighted: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), GcnError> {
        let bad = |msg: String| Err(GcnError::InvalidConfig(msg));
        if self.dense_layers.last() != Some(&N_CLASSES) {
            return bad(format!("final dense width must be {N_CLASSES}, got {:?}", self.dense_layers));
        }
        if self.gcn_layers.iter().chain(&self.dense_layers).any(|&w| w == 0) {
            return bad("layer widths must be positive".into());
        }
        if !(self.lr0 >= 0.0) || !self.lr0.is_finite() {
            return bad(format!("lr0 must be finite and non-negative, got {}", self.lr0));
        }
        if self.batch_size == 0 || self.lr_decay_every == 0 {
            return bad("batch_size and lr_decay_every must be positive".into());
        }
        if !(self.lr_decay_factor > 0.0) {
            return bad(format!("lr_decay_factor must be > 0, got {}", self.lr_decay_factor));
        }
        if !self.leaky_slope.is_finite() {
            return bad("leaky_slope must be finite".into());
        }
        Ok(())
    }

    /// Step decay: `lr0 / factor^⌊epoch / every⌋`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let steps = (epoch / self.lr_decay_every) as i32;
        self.lr0 / self.lr_decay_factor.powi(steps)
    }
}

/// Weight matrix (`in × out`) and bias of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Layer {
        Layer {
            weights: DenseMatrix::zeros(self.weights.rows, self.weights.cols),
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Layer {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Layer {
            weights: DenseMatrix::from_vec(
                fan_in,
                fan_out,
                (0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)).collect(),
            ),
            bias: vec![0.0; fan_out],
        }
    }

    /// `x · W + b` with the bias broadcast over rows.
    fn affine(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut z = x.matmul(&self.weights);
        z.add_row_vector(&self.bias);
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub config: ModelConfig,
    pub input_width: usize,
    pub conv: Vec<Layer>,
    pub dense: Vec<Layer>,
}

/// A graph ready for the network: normalized adjacency and node features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub adjacency: DenseMatrix,
    pub features: DenseMatrix,
}

impl GraphInput {
    /// Normalizes `connectivity` with self-loops.
    pub fn new(connectivity: &DenseMatrix, features: DenseMatrix) -> Result<Self, GcnError> {
        if connectivity.rows != features.rows {
            return Err(GcnError::ShapeMismatch(format!(
                "{} nodes in connectivity, {} feature rows",
                connectivity.rows, features.rows
            )));
        }
        Ok(Self {
            adjacency: normalize_adjacency(connectivity)?,
            features,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.features.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_probabilities: [f64; N_CLASSES],
    pub predicted_class: ClassLabel,
}

impl Prediction {
    /// Argmax with ties going to class index 0.
    pub fn from_probabilities(p: [f64; N_CLASSES]) -> Self {
        let idx = if p[1] > p[0] { 1 } else { 0 };
        Self {
            class_probabilities: p,
            predicted_class: ClassLabel::from_index(idx).expect("two classes"),
        }
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    /// Input to each conv layer (the first is the node features).
    pub conv_inputs: Vec<DenseMatrix>,
    /// `Â · H` for each conv layer.
    pub aggregated: Vec<DenseMatrix>,
    pub conv_pre: Vec<DenseMatrix>,
    pub readout: Vec<f64>,
    /// Input to each dense layer (the first is the readout).
    pub dense_inputs: Vec<Vec<f64>>,
    pub dense_pre: Vec<Vec<f64>>,
    pub probabilities: [f64; N_CLASSES],
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: Vec<Layer>,
    pub dense: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Self {
            conv: model.conv.iter().map(Layer::zeros_like).collect(),
            dense: model.dense.iter().map(Layer::zeros_like).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers_mut().zip(other.conv.iter().chain(&other.dense)) {
            for (x, y) in a.weights.data.iter_mut().zip(&b.weights.data) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.conv.iter_mut().chain(self.dense.iter_mut())
    }

    /// Flattened in the same order as [`GcnModel::parameters_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        self.conv
            .iter()
            .chain(&self.dense)
            .flat_map(|l| l.weights.data.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn leaky_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

fn softmax(logits: &[f64]) -> [f64; N_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let s: f64 = e.iter().sum();
    [e[0] / s, e[1] / s]
}

fn log_softmax(logits: &[f64]) -> [f64; N_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    [logits[0] - lse, logits[1] - lse]
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` for a symmetric, non-negative weighted
/// adjacency `A`.
pub fn normalize_adjacency(connectivity: &DenseMatrix) -> Result<DenseMatrix, GcnError> {
    if !connectivity.is_square() {
        return Err(GcnError::ShapeMismatch(format!(
            "adjacency is {}×{}",
            connectivity.rows, connectivity.cols
        )));
    }
    let n = connectivity.rows;
    for i in 0..n {
        for j in 0..n {
            let v = connectivity.get(i, j);
            if !(v >= 0.0) {
                return Err(GcnError::NegativeWeight { row: i, col: j, value: v });
            }
            if (v - connectivity.get(j, i)).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(GcnError::AsymmetricInput { row: i, col: j });
            }
        }
    }
    let mut a = connectivity.clone();
    for i in 0..n {
        a.set(i, i, a.get(i, i) + 1.0);
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / a.row(i).iter().sum::<f64>().sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, a.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
        }
    }
    Ok(a)
}

impl GcnModel {
    /// Glorot-uniform weights and zero biases, seeded from `config.seed`.
    pub fn new(config: ModelConfig, input_width: usize) -> Result<Self, GcnError> {
        config.validate()?;
        if input_width == 0 {
            return Err(GcnError::InvalidConfig("input width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut width = input_width;
        let mut conv = Vec::with_capacity(config.gcn_layers.len());
        for &w in &config.gcn_layers {
            conv.push(Layer::glorot(width, w, &mut rng));
            width = w;
        }
        let mut dense = Vec::with_capacity(config.dense_layers.len());
        for &w in &config.dense_layers {
            dense.push(Layer::glorot(width, w, &mut rng));
            width = w;
        }
        Ok(Self {
            config,
            input_width,
            conv,
            dense,
        })
    }

    /// Checks that layer shapes chain from `input_width` to two classes.
    pub fn validate_shapes(&self) -> Result<(), GcnError> {
        let mut width = self.input_width;
        for (i, l) in self.conv.iter().chain(&self.dense).enumerate() {
            if l.weights.rows != width || l.bias.len() != l.weights.cols || l.weights.data.len() != l.weights.rows * l.weights.cols {
                return Err(GcnError::ShapeMismatch(format!("layer {i} does not chain from width {width}")));
            }
            width = l.weights.cols;
        }
        if self.dense.is_empty() || width != N_CLASSES {
            return Err(GcnError::ShapeMismatch(format!("output width {width}, expected {N_CLASSES}")));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.conv
            .iter()
            .chain(&self.dense)
            .map(|l| l.weights.data.len() + l.bias.len())
            .sum()
    }

    /// Mutable references to every parameter, layer by layer, weights then
    /// bias.
    pub fn parameters_mut(&mut self) -> Vec<&mut f64> {
        self.conv
            .iter_mut()
            .chain(self.dense.iter_mut())
            .flat_map(|l| l.weights.data.iter_mut().chain(l.bias.iter_mut()))
            .collect()
    }

    pub fn forward(&self, graph: &GraphInput) -> Result<(Prediction, ActivationTrace), GcnError> {
        if graph.features.cols != self.input_width {
            return Err(GcnError::ShapeMismatch(format!(
                "graph has {} features per node, model expects {}",
                graph.features.cols, self.input_width
            )));
        }
        if graph.adjacency.rows != graph.features.rows || !graph.adjacency.is_square() || graph.features.rows == 0 {
            return Err(GcnError::ShapeMismatch("adjacency does not match node count".into()));
        }
        let slope = self.config.leaky_slope;
        let mut h = graph.features.clone();
        let mut conv_inputs = Vec::with_capacity(self.conv.len());
        let mut aggregated = Vec::with_capacity(self.conv.len());
        let mut conv_pre = Vec::with_capacity(self.conv.len());
        for layer in &self.conv {
            let m = graph.adjacency.matmul(&h);
            let z = layer.affine(&m);
            let next = z.map(|v| leaky(v, slope));
            conv_inputs.push(std::mem::replace(&mut h, next));
            aggregated.push(m);
            conv_pre.push(z);
        }
        let readout = match self.config.readout {
            Readout::Mean => h.column_means(),
        };

        let mut a = readout.clone();
        let mut dense_inputs = Vec::with_capacity(self.dense.len());
        let mut dense_pre = Vec::with_capacity(self.dense.len());
        let last = self.dense.len() - 1;
        for (i, layer) in self.dense.iter().enumerate() {
            let z = layer.affine(&DenseMatrix::from_vec(1, a.len(), a.clone())).data;
            let next = if i == last { z.clone() } else { z.iter().map(|&v| leaky(v, slope)).collect() };
            dense_inputs.push(std::mem::replace(&mut a, next));
            dense_pre.push(z);
        }
        let probabilities = softmax(&a);
        Ok((
            Prediction::from_probabilities(probabilities),
            ActivationTrace {
                conv_inputs,
                aggregated,
                conv_pre,
                readout,
                dense_inputs,
                dense_pre,
                probabilities,
            },
        ))
    }

    pub fn predict(&self, graph: &GraphInput) -> Result<Prediction, GcnError> {
        Ok(self.forward(graph)?.0)
    }

    /// Cross-entropy of one sample (times `weight`) and its parameter
    /// gradient.
    pub fn sample_loss_and_gradients(
        &self,
        graph: &GraphInput,
        label: ClassLabel,
        weight: f64,
    ) -> Result<(f64, Gradients), GcnError> {
        let (_, trace) = self.forward(graph)?;
        let slope = self.config.leaky_slope;
        let y = label.index();
        let logits = trace.dense_pre.last().expect("at least one dense layer");
        let loss = -weight * log_softmax(logits)[y];

        let mut grads = Gradients::zeros_like(self);

        // dL/dlogits = w (p - onehot)
        let mut delta: Vec<f64> = trace
            .probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| weight * (p - if k == y { 1.0 } else { 0.0 }))
            .collect();

        for i in (0..self.dense.len()).rev() {
            let input = &trace.dense_inputs[i];
            let g = &mut grads.dense[i];
            for (r, x) in input.iter().enumerate() {
                for (c, d) in delta.iter().enumerate() {
                    g.weights.data[r * g.weights.cols + c] = x * d;
                }
            }
            g.bias.copy_from_slice(&delta);
            let w = &self.dense[i].weights;
            let mut prev: Vec<f64> = (0..w.rows)
                .map(|r| w.row(r).iter().zip(&delta).map(|(a, b)| a * b).sum())
                .collect();
            if i > 0 {
                for (p, z) in prev.iter_mut().zip(&trace.dense_pre[i - 1]) {
                    *p *= leaky_grad(*z, slope);
                }
            }
            delta = prev;
        }

        // mean readout spreads the gradient evenly over nodes
        let n = graph.n_nodes();
        let last_width = delta.len();
        let mut dh = DenseMatrix::zeros(n, last_width);
        for r in 0..n {
            for (c, d) in delta.iter().enumerate() {
                dh.set(r, c, d / n as f64);
            }
        }

        for i in (0..self.conv.len()).rev() {
            let dz = DenseMatrix {
                rows: dh.rows,
                cols: dh.cols,
                data: dh
                    .data
                    .iter()
                    .zip(&trace.conv_pre[i].data)
                    .map(|(d, z)| d * leaky_grad(*z, slope))
                    .collect(),
            };
            grads.conv[i].weights = trace.aggregated[i].t_matmul(&dz);
            grads.conv[i].bias = dz.column_sums();
            if i > 0 {
                let dm = dz.matmul_t(&self.conv[i].weights);
                // Â is symmetric, so Âᵀ · dM = Â · dM
                dh = graph.adjacency.matmul(&dm);
            }
        }

        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_node_normalizes_to_one() {
        let a = normalize_adjacency(&DenseMatrix::zeros(1, 1)).unwrap();
        assert_eq!(a.data, vec![1.0]);
    }

    #[test]
    fn two_node_unit_edge() {
        let a = normalize_adjacency(&DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        for v in a.data {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn no_edges_gives_identity() {
        let a = normalize_adjacency(&DenseMatrix::zeros(5, 5)).unwrap();
        assert_eq!(a, DenseMatrix::identity(5));
    }

    #[test]
    fn adjacency_errors() {
        let asym = DenseMatrix::from_rows(&[[0.0, 1.0], [0.5, 0.0]]);
        assert!(matches!(normalize_adjacency(&asym), Err(GcnError::AsymmetricInput { .. })));
        let neg = DenseMatrix::from_rows(&[[0.0, -1.0], [-1.0, 0.0]]);
        assert!(matches!(normalize_adjacency(&neg), Err(GcnError::NegativeWeight { .. })));
        assert!(matches!(
            normalize_adjacency(&DenseMatrix::zeros(2, 3)),
            Err(GcnError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn identity_layer_readout_reproduces_features() {
        let config = ModelConfig {
            gcn_layers: vec![6],
            dense_layers: vec![2],
            ..ModelConfig::default()
        };
        let mut model = GcnModel::new(config, 6).unwrap();
        model.conv[0].weights = DenseMatrix::identity(6);
        let features = DenseMatrix::from_rows(&[[0.5, 1.0, 2.0, 3.0, 4.0, 5.5]]);
        let graph = GraphInput::new(&DenseMatrix::zeros(1, 1), features.clone()).unwrap();
        let (_, trace) = model.forward(&graph).unwrap();
        assert_eq!(trace.readout, features.data);
    }

    #[test]
    fn equal_logits_give_even_odds() {
        let config = ModelConfig {
            gcn_layers: vec![3],
            dense_layers: vec![2],
            ..ModelConfig::default()
        };
        let mut model = GcnModel::new(config, 6).unwrap();
        model.dense[0].weights = DenseMatrix::zeros(3, 2);
        let graph = GraphInput::new(&DenseMatrix::zeros(2, 2), DenseMatrix::from_vec(2, 6, vec![1.0; 12])).unwrap();
        let p = model.predict(&graph).unwrap();
        assert_eq!(p.class_probabilities, [0.5, 0.5]);
        assert_eq!(p.predicted_class, ClassLabel::Control);
        let (loss, _) = model.sample_loss_and_gradients(&graph, ClassLabel::Insomnia, 1.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn argmax_and_tie_rule() {
        assert_eq!(Prediction::from_probabilities([0.7, 0.3]).predicted_class, ClassLabel::Control);
        assert_eq!(Prediction::from_probabilities([0.5, 0.5]).predicted_class, ClassLabel::Control);
        assert_eq!(Prediction::from_probabilities([0.2, 0.8]).predicted_class, ClassLabel::Insomnia);
    }

    #[test]
    fn confident_correct_prediction_has_zero_loss() {
        let config = ModelConfig {
            gcn_layers: vec![2],
            dense_layers: vec![2],
            ..ModelConfig::default()
        };
        let mut model = GcnModel::new(config, 6).unwrap();
        model.dense[0].weights = DenseMatrix::zeros(2, 2);
        model.dense[0].bias = vec![-800.0, 800.0];
        let graph = GraphInput::new(&DenseMatrix::zeros(1, 1), DenseMatrix::from_vec(1, 6, vec![1.0; 6])).unwrap();
        let (loss, grads) = model.sample_loss_and_gradients(&graph, ClassLabel::Insomnia, 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.dense[0].weights.data.iter().all(|&g| g == 0.0));
        assert!(grads.dense[0].bias.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn feature_width_mismatch_is_reported() {
        let model = GcnModel::new(ModelConfig::default(), 6).unwrap();
        let graph = GraphInput::new(&DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 5)).unwrap();
        assert!(matches!(model.forward(&graph), Err(GcnError::ShapeMismatch(_))));
    }

    #[test]
    fn schedule_is_step_decay() {
        let c = ModelConfig::default();
        assert_eq!(c.learning_rate(0), 0.01);
        assert_eq!(c.learning_rate(9), 0.01);
        assert_eq!(c.learning_rate(10), 0.001);
        assert_eq!(c.learning_rate(20), 0.0001);
    }

    #[test]
    fn config_requires_two_outputs() {
        let c = ModelConfig {
            dense_layers: vec![16, 3],
            ..ModelConfig::default()
        };
        assert!(matches!(GcnModel::new(c, 6), Err(GcnError::InvalidConfig(_))));
    }
}
