//! Graph-convolutional recurrent classifier with temporal attention, plus
//! its two ablation variants (GCN with spatiotemporal averaging, GCN-LSTM
//! with mean-over-time pooling).

mod serialize;
mod train;

pub use serialize::{load_model, save_model};
pub use train::{predict, predict_sequences, train, EpochStats, TrainConfig, TrainHistory};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{gradient_check, Tape, Tensor};
use crate::error::{Error, Result};
use crate::skeleton::{MotionSequence, SkeletonGraph, N_JOINTS};

/// Which stages of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "GCN_ONLY")]
    GcnOnly,
    #[serde(rename = "GCN_LSTM")]
    GcnLstm,
    #[serde(rename = "GCN_LSTM_ATT")]
    GcnLstmAtt,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::GcnOnly, Variant::GcnLstm, Variant::GcnLstmAtt];

    /// Row label used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::GcnOnly => "GCN",
            Variant::GcnLstm => "GCN-LSTM",
            Variant::GcnLstmAtt => "GCN-LSTM-ATT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Channel widths through the graph-convolution stack; first entry is
    /// the 3 input coordinates.
    pub gcn_channels: Vec<usize>,
    pub lstm_hidden: usize,
    pub attention_dim: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            gcn_channels: vec![3, 32, 64],
            lstm_hidden: 64,
            attention_dim: 64,
            n_classes: 4,
            dropout: 0.0,
            variant: Variant::GcnLstmAtt,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gcn_channels.len() < 2 {
            return Err(Error::Config(
                "gcn_channels needs an input width and at least one layer".into(),
            ));
        }
        if self.gcn_channels[0] != 3 {
            return Err(Error::Config(format!(
                "gcn_channels must start at 3 input coordinates, got {}",
                self.gcn_channels[0]
            )));
        }
        if self.gcn_channels.contains(&0)
            || self.lstm_hidden == 0
            || self.attention_dim == 0
        {
            return Err(Error::Config("all model dimensions must be >= 1".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config(format!(
                "n_classes must be >= 2, got {}",
                self.n_classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Width of the pooled feature consumed by the classifier head.
    fn feature_dim(&self) -> usize {
        match self.variant {
            Variant::GcnOnly => *self.gcn_channels.last().unwrap(),
            Variant::GcnLstm | Variant::GcnLstmAtt => self.lstm_hidden,
        }
    }
}

/// One named parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamTensor {
    fn new(name: &str, shape: Vec<usize>, values: Vec<f64>) -> ParamTensor {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        ParamTensor {
            name: name.to_string(),
            shape,
            values,
        }
    }
}

/// The classifier: a fixed normalized adjacency plus learnable parameters
/// stored in declaration order.
#[derive(Debug, Clone)]
pub struct GcnLstmAttModel {
    pub config: ModelConfig,
    /// Row-major [20, 20] symmetric normalized adjacency, fixed.
    pub adjacency: Vec<f64>,
    params: Vec<ParamTensor>,
}

fn uniform_init(rng: &mut ChaCha8Rng, fan_in: usize, len: usize) -> Vec<f64> {
    let bound = (1.0 / fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl GcnLstmAttModel {
    /// Fresh model with seeded uniform(-sqrt(1/fan_in), sqrt(1/fan_in))
    /// weights, zero biases, and the LSTM forget-gate bias block at 1.
    pub fn init(config: &ModelConfig, graph: &SkeletonGraph, seed: u64) -> Result<GcnLstmAttModel> {
        config.validate()?;
        graph.validate()?;
        if graph.n_nodes != N_JOINTS {
            return Err(Error::Config(format!(
                "model expects the {N_JOINTS}-joint graph, got {} nodes",
                graph.n_nodes
            )));
        }
        let a_hat = normalize_adjacency(graph)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();

        for (l, w) in config.gcn_channels.windows(2).enumerate() {
            let (cin, cout) = (w[0], w[1]);
            params.push(ParamTensor::new(
                &format!("gcn_w{l}"),
                vec![cin, cout],
                uniform_init(&mut rng, cin, cin * cout),
            ));
            params.push(ParamTensor::new(
                &format!("gcn_b{l}"),
                vec![cout],
                vec![0.0; cout],
            ));
        }
        let c_last = *config.gcn_channels.last().unwrap();
        let h = config.lstm_hidden;
        if config.variant != Variant::GcnOnly {
            // fused gate blocks in order input, forget, output, cell
            let fan = c_last + h;
            params.push(ParamTensor::new(
                "lstm_w",
                vec![fan, 4 * h],
                uniform_init(&mut rng, fan, fan * 4 * h),
            ));
            let mut b = vec![0.0; 4 * h];
            b[h..2 * h].fill(1.0);
            params.push(ParamTensor::new("lstm_b", vec![4 * h], b));
        }
        if config.variant == Variant::GcnLstmAtt {
            let a = config.attention_dim;
            params.push(ParamTensor::new(
                "att_w",
                vec![h, a],
                uniform_init(&mut rng, h, h * a),
            ));
            params.push(ParamTensor::new("att_b", vec![a], vec![0.0; a]));
            params.push(ParamTensor::new(
                "att_v",
                vec![a, 1],
                uniform_init(&mut rng, a, a),
            ));
        }
        let feat = config.feature_dim();
        params.push(ParamTensor::new(
            "head_w",
            vec![feat, config.n_classes],
            uniform_init(&mut rng, feat, feat * config.n_classes),
        ));
        params.push(ParamTensor::new(
            "head_b",
            vec![config.n_classes],
            vec![0.0; config.n_classes],
        ));

        Ok(GcnLstmAttModel {
            config: config.clone(),
            adjacency: a_hat.data().to_vec(),
            params,
        })
    }

    pub fn params(&self) -> &[ParamTensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamTensor] {
        &mut self.params
    }

    /// Bind parameters to a tape as tracked leaves (training) or as
    /// constants (inference).
    pub(crate) fn bind(&self, tape: Option<&Tape>) -> Result<BoundModel> {
        let tensors: Vec<Tensor> = self
            .params
            .iter()
            .map(|p| match tape {
                Some(t) => t.leaf(&p.shape, p.values.clone()),
                None => Tensor::constant(&p.shape, p.values.clone()),
            })
            .collect::<Result<_>>()?;
        self.bind_tensors(tensors)
    }

    /// Bind externally supplied parameter tensors, in declaration order.
    pub(crate) fn bind_tensors(&self, tensors: Vec<Tensor>) -> Result<BoundModel> {
        if tensors.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameter tensors, got {}",
                self.params.len(),
                tensors.len()
            )));
        }
        let a_hat = Tensor::constant(&[N_JOINTS, N_JOINTS], self.adjacency.clone())?;
        let mut it = tensors.into_iter();
        let n_layers = self.config.gcn_channels.len() - 1;
        let gcn: Vec<(Tensor, Tensor)> = (0..n_layers)
            .map(|_| (it.next().unwrap(), it.next().unwrap()))
            .collect();
        let lstm = (self.config.variant != Variant::GcnOnly)
            .then(|| (it.next().unwrap(), it.next().unwrap()));
        let att = (self.config.variant == Variant::GcnLstmAtt)
            .then(|| (it.next().unwrap(), it.next().unwrap(), it.next().unwrap()));
        let head = (it.next().unwrap(), it.next().unwrap());
        Ok(BoundModel {
            config: self.config.clone(),
            a_hat,
            gcn,
            lstm,
            att,
            head,
        })
    }

    /// Logits for one preprocessed sequence.
    pub fn forward(&self, seq: &MotionSequence) -> Result<Tensor> {
        let x = batch_input(&[seq])?;
        let logits = self.bind(None)?.forward(&x, None)?;
        logits.reshape(&[self.config.n_classes])
    }
}

/// Learnable tensors bound for one forward pass.
pub(crate) struct BoundModel {
    config: ModelConfig,
    a_hat: Tensor,
    gcn: Vec<(Tensor, Tensor)>,
    lstm: Option<(Tensor, Tensor)>,
    att: Option<(Tensor, Tensor, Tensor)>,
    head: (Tensor, Tensor),
}

impl BoundModel {
    /// Batched forward: `x` is [B, T, 20, 3], result is [B, n_classes]
    /// logits. `dropout_mask`, when given, multiplies the pooled feature.
    pub(crate) fn forward(&self, x: &Tensor, dropout_mask: Option<&Tensor>) -> Result<Tensor> {
        let shape = x.shape();
        if shape.len() != 4 || shape[2] != N_JOINTS || shape[3] != self.config.gcn_channels[0] {
            return Err(Error::Shape(format!(
                "model input must be [batch, frames, {N_JOINTS}, {}], got {shape:?}",
                self.config.gcn_channels[0]
            )));
        }
        let (b, t) = (shape[0], shape[1]);
        let frames = x.reshape(&[b * t, N_JOINTS, self.config.gcn_channels[0]])?;
        let h = gcn_forward(&frames, &self.a_hat, &self.gcn)?; // [B*T, 20, C]
        let c_out = *self.config.gcn_channels.last().unwrap();

        let feature = match self.config.variant {
            Variant::GcnOnly => {
                // mean over joints, then over frames
                let per_frame = frame_embed(&h)?; // [B*T, C]
                per_frame
                    .reshape(&[b, t, c_out])?
                    .swap01()? // [T, B, C]
                    .mean_axis0()? // [B, C]
            }
            Variant::GcnLstm | Variant::GcnLstmAtt => {
                let e = frame_embed(&h)? // [B*T, C]
                    .reshape(&[b, t, c_out])?
                    .swap01()?; // [T, B, C]
                let (w, bias) = self.lstm.as_ref().unwrap();
                let hs = lstm_scan(&e, w, bias, self.config.lstm_hidden)?;
                match self.config.variant {
                    Variant::GcnLstm => Tensor::stack0(&hs)?.mean_axis0()?, // [B, H]
                    Variant::GcnLstmAtt => {
                        let (aw, ab, av) = self.att.as_ref().unwrap();
                        let (context, _alpha) = attention_scan(&hs, aw, ab, av)?;
                        context // [B, H]
                    }
                    Variant::GcnOnly => unreachable!(),
                }
            }
        };
        let feature = match dropout_mask {
            Some(mask) => feature.mul(mask)?,
            None => feature,
        };
        feature.matmul(&self.head.0)?.add(&self.head.1)
    }
}

/// Symmetric degree normalization with self-loops:
/// `A_hat = D^{-1/2} (A + I) D^{-1/2}` as a constant [n, n] tensor.
pub fn normalize_adjacency(g: &SkeletonGraph) -> Result<Tensor> {
    g.validate()?;
    let n = g.n_nodes;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    for &(u, v) in &g.edges {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    let deg: Vec<f64> = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().sum::<f64>())
        .collect();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] /= (deg[i] * deg[j]).sqrt();
        }
    }
    Tensor::constant(&[n, n], a)
}

/// Stack of graph convolutions over per-frame joint features:
/// `H <- relu(A_hat . H . W + b)` per layer. `x` is [N, 20, C_in] where N
/// indexes frames (possibly across a batch); the same adjacency and weights
/// apply at every frame.
pub fn gcn_forward(x: &Tensor, a_hat: &Tensor, layers: &[(Tensor, Tensor)]) -> Result<Tensor> {
    let shape = x.shape().to_vec();
    if shape.len() != 3 || shape[1] != a_hat.shape()[0] {
        return Err(Error::Shape(format!(
            "gcn input must be [frames, {}, channels], got {shape:?}",
            a_hat.shape()[0]
        )));
    }
    let (n, j) = (shape[0], shape[1]);
    let mut h = x.clone();
    let mut c = shape[2];
    for (w, b) in layers {
        let c_next = w.shape()[1];
        // joint mixing: fold frames and channels into columns
        let mixed = a_hat
            .matmul(&h.swap01()?.reshape(&[j, n * c])?)?
            .reshape(&[j, n, c])?
            .swap01()?; // [N, 20, C]
        // channel mixing per joint
        h = mixed
            .reshape(&[n * j, c])?
            .matmul(w)?
            .add(b)?
            .relu()?
            .reshape(&[n, j, c_next])?;
        c = c_next;
    }
    Ok(h)
}

/// Mean over the joint axis: [N, 20, C] -> [N, C].
pub fn frame_embed(h: &Tensor) -> Result<Tensor> {
    if h.shape().len() != 3 {
        return Err(Error::Shape(format!(
            "frame_embed needs [frames, joints, channels], got {:?}",
            h.shape()
        )));
    }
    h.swap01()?.mean_axis0()
}

/// One LSTM pass over `e` = [T, B, C] with fused gate parameters
/// `w` [C+H, 4H] (blocks input, forget, output, cell) and `b` [4H].
/// Returns the hidden state at every step, each [B, H].
fn lstm_scan(e: &Tensor, w: &Tensor, b: &Tensor, hidden: usize) -> Result<Vec<Tensor>> {
    let shape = e.shape();
    if shape.len() != 3 {
        return Err(Error::Shape(format!(
            "lstm input must be [frames, batch, channels], got {shape:?}"
        )));
    }
    let (t_len, batch, c) = (shape[0], shape[1], shape[2]);
    if w.shape() != [c + hidden, 4 * hidden] {
        return Err(Error::Shape(format!(
            "lstm weights must be [{}, {}], got {:?}",
            c + hidden,
            4 * hidden,
            w.shape()
        )));
    }
    let mut h = Tensor::zeros(&[batch, hidden]);
    let mut cell = Tensor::zeros(&[batch, hidden]);
    let mut outputs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x_t = e.index_axis0(t)?; // [B, C]
        let gates = Tensor::concat_lastdim(&[x_t, h.clone()])?
            .matmul(w)?
            .add(b)?; // [B, 4H]
        let i = gates.slice_lastdim(0, hidden)?.sigmoid()?;
        let f = gates.slice_lastdim(hidden, hidden)?.sigmoid()?;
        let o = gates.slice_lastdim(2 * hidden, hidden)?.sigmoid()?;
        let g = gates.slice_lastdim(3 * hidden, hidden)?.tanh_act()?;
        cell = f.mul(&cell)?.add(&i.mul(&g)?)?;
        h = o.mul(&cell.tanh_act()?)?;
        outputs.push(h.clone());
    }
    Ok(outputs)
}

/// Single-sequence LSTM: `e` is [T, C], result is all hidden states [T, H].
pub fn lstm_forward(e: &Tensor, w: &Tensor, b: &Tensor, hidden: usize) -> Result<Tensor> {
    let shape = e.shape();
    if shape.len() != 2 {
        return Err(Error::Shape(format!(
            "lstm_forward needs [frames, channels], got {shape:?}"
        )));
    }
    let (t_len, c) = (shape[0], shape[1]);
    let hs = lstm_scan(&e.reshape(&[t_len, 1, c])?, w, b, hidden)?;
    Tensor::stack0(&hs)?.reshape(&[t_len, hidden])
}

/// Additive temporal attention over per-step hidden states `hs` (each
/// [B, H]): scores `e_t = v . tanh(W h_t + b)`, weights alpha = softmax over
/// t, context = sum_t alpha_t h_t. Returns (context [B, H], alpha [B, T]).
fn attention_scan(
    hs: &[Tensor],
    w: &Tensor,
    b: &Tensor,
    v: &Tensor,
) -> Result<(Tensor, Tensor)> {
    if hs.is_empty() {
        return Err(Error::Shape("attention over zero frames".into()));
    }
    let scores: Vec<Tensor> = hs
        .iter()
        .map(|h| h.matmul(w)?.add(b)?.tanh_act()?.matmul(v))
        .collect::<Result<_>>()?;
    let alpha = Tensor::concat_lastdim(&scores)?.softmax_lastdim()?; // [B, T]
    let mut context: Option<Tensor> = None;
    for (t, h) in hs.iter().enumerate() {
        let wt = alpha.slice_lastdim(t, 1)?; // [B, 1]
        let term = h.mul(&wt)?;
        context = Some(match context {
            Some(acc) => acc.add(&term)?,
            None => term,
        });
    }
    Ok((context.unwrap(), alpha))
}

/// Single-sequence attention pooling: `h` is [T, H]; returns the pooled
/// context [H] and the weights [T].
pub fn attention_pool(
    h: &Tensor,
    w: &Tensor,
    b: &Tensor,
    v: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let shape = h.shape();
    if shape.len() != 2 {
        return Err(Error::Shape(format!(
            "attention_pool needs [frames, hidden], got {shape:?}"
        )));
    }
    let (t_len, hidden) = (shape[0], shape[1]);
    let rows: Vec<Tensor> = (0..t_len)
        .map(|t| h.index_axis0(t)?.reshape(&[1, hidden]))
        .collect::<Result<_>>()?;
    let (context, alpha) = attention_scan(&rows, w, b, v)?;
    Ok((context.reshape(&[hidden])?, alpha.reshape(&[t_len])?))
}

/// Pack equal-length preprocessed sequences into a [B, T, 20, 3] input.
pub fn batch_input(seqs: &[&MotionSequence]) -> Result<Tensor> {
    if seqs.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let t_len = seqs[0].frames.len();
    for s in seqs {
        if s.frames.len() != t_len {
            return Err(Error::Shape(format!(
                "sequence {} has {} frames, batch expects {t_len}",
                s.describe(),
                s.frames.len()
            )));
        }
    }
    let mut data = Vec::with_capacity(seqs.len() * t_len * N_JOINTS * 3);
    for s in seqs {
        for frame in &s.frames {
            for row in &frame.xyz {
                data.extend_from_slice(row);
            }
        }
    }
    Tensor::constant(&[seqs.len(), t_len, N_JOINTS, 3], data)
}

/// Finite-difference audit of the whole model's gradients on a small random
/// instance. Returns the max relative error across every parameter entry.
///
/// `corrupt_adjoint` is a negative-control fixture: it multiplies the loss
/// through an operation whose recorded adjoint is deliberately wrong, which
/// must push the reported error above any honest tolerance.
pub fn model_gradient_check(
    config: &ModelConfig,
    t_len: usize,
    seed: u64,
    eps: f64,
    corrupt_adjoint: bool,
) -> Result<f64> {
    config.validate()?;
    let graph = crate::skeleton::canonical_upper_limb_graph();
    let model = GcnLstmAttModel::init(config, &graph, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let x_data: Vec<f64> = (0..t_len * N_JOINTS * 3)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let x = Tensor::constant(&[1, t_len, N_JOINTS, 3], x_data)?;
    let target = rng.gen_range(0..config.n_classes);

    let params: Vec<(Vec<usize>, Vec<f64>)> = model
        .params()
        .iter()
        .map(|p| (p.shape.clone(), p.values.clone()))
        .collect();
    gradient_check(&params, eps, |_tape, leaves| {
        let bound = model.bind_tensors(leaves.to_vec())?;
        let logits = bound.forward(&x, None)?;
        let loss = logits.cross_entropy_mean(&[target])?;
        if corrupt_adjoint {
            loss.scale_with_adjoint(1.0, 1.02)
        } else {
            Ok(loss)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::canonical_upper_limb_graph;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_normalization() {
        let g = SkeletonGraph {
            n_nodes: 2,
            edges: vec![(0, 1)],
            joint_names: vec!["a".into(), "b".into()],
        };
        let a = normalize_adjacency(&g).unwrap();
        for &v in a.data() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn path_normalization_matches_hand_computation() {
        let g = SkeletonGraph {
            n_nodes: 3,
            edges: vec![(0, 1), (1, 2)],
            joint_names: vec!["a".into(), "b".into(), "c".into()],
        };
        let a = normalize_adjacency(&g).unwrap();
        // degrees with self-loops: 2, 3, 2
        assert_abs_diff_eq!(a.data()[1], 1.0 / 6.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.data()[4], 1.0 / 3.0, epsilon = 1e-12);
        // symmetric
        assert_abs_diff_eq!(a.data()[1], a.data()[3], epsilon = 1e-15);
    }

    #[test]
    fn upper_limb_adjacency_is_symmetric_and_diag_is_inverse_degree() {
        let g = canonical_upper_limb_graph();
        let a = normalize_adjacency(&g).unwrap();
        let n = g.n_nodes;
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(a.data()[i * n + j], a.data()[j * n + i], epsilon = 1e-15);
            }
            let d = g.degree(i) as f64 + 1.0;
            assert_abs_diff_eq!(a.data()[i * n + i], 1.0 / d, epsilon = 1e-12);
        }
    }

    fn tiny_graph_tensor() -> Tensor {
        normalize_adjacency(&canonical_upper_limb_graph()).unwrap()
    }

    #[test]
    fn gcn_identity_weights_reduce_to_adjacency_mixing() {
        let a_hat = tiny_graph_tensor();
        let n = 4;
        let x_data: Vec<f64> = (0..n * N_JOINTS * 3).map(|i| (i % 7) as f64 * 0.1).collect();
        let x = Tensor::constant(&[n, N_JOINTS, 3], x_data).unwrap();
        let eye = Tensor::constant(&[3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let zero = Tensor::zeros(&[3]);
        let out = gcn_forward(&x, &a_hat, &[(eye, zero)]).unwrap();
        // non-negative input and identity weights: relu inactive, out = A_hat X
        for f in 0..n {
            for j in 0..N_JOINTS {
                for c in 0..3 {
                    let mut want = 0.0;
                    for k in 0..N_JOINTS {
                        want += a_hat.data()[j * N_JOINTS + k]
                            * x.data()[(f * N_JOINTS + k) * 3 + c];
                    }
                    let got = out.data()[(f * N_JOINTS + j) * 3 + c];
                    assert_abs_diff_eq!(got, want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn gcn_zero_input_gives_zero_output() {
        let a_hat = tiny_graph_tensor();
        let x = Tensor::zeros(&[2, N_JOINTS, 3]);
        let w = Tensor::constant(&[3, 5], vec![0.3; 15]).unwrap();
        let b = Tensor::zeros(&[5]);
        let out = gcn_forward(&x, &a_hat, &[(w, b)]).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gcn_matches_naive_triple_loop() {
        let a_hat = tiny_graph_tensor();
        let (n, cin, cout) = (3, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x_data: Vec<f64> = (0..n * N_JOINTS * cin)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let w_data: Vec<f64> = (0..cin * cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b_data: Vec<f64> = (0..cout).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x = Tensor::constant(&[n, N_JOINTS, cin], x_data.clone()).unwrap();
        let w = Tensor::constant(&[cin, cout], w_data.clone()).unwrap();
        let b = Tensor::constant(&[cout], b_data.clone()).unwrap();
        let out = gcn_forward(&x, &a_hat, &[(w, b)]).unwrap();

        let a = a_hat.data();
        for f in 0..n {
            for j in 0..N_JOINTS {
                for c in 0..cout {
                    let mut pre = b_data[c];
                    for k in 0..N_JOINTS {
                        for ci in 0..cin {
                            pre += a[j * N_JOINTS + k]
                                * x_data[(f * N_JOINTS + k) * cin + ci]
                                * w_data[ci * cout + c];
                        }
                    }
                    let want = pre.max(0.0);
                    let got = out.data()[(f * N_JOINTS + j) * cout + c];
                    assert_abs_diff_eq!(got, want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn frame_embed_averages_joints() {
        // a single one-hot joint contributes value/20 to the frame embedding
        let mut data = vec![0.0; N_JOINTS * 2];
        data[0] = 20.0;
        let x = Tensor::constant(&[1, N_JOINTS, 2], data).unwrap();
        let e = frame_embed(&x).unwrap();
        assert_eq!(e.shape(), &[1, 2]);
        assert_abs_diff_eq!(e.data()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.data()[1], 0.0, epsilon = 1e-15);

        // all joints equal per frame reproduce that value
        let same = Tensor::constant(&[2, N_JOINTS, 1], vec![0.7; 2 * N_JOINTS]).unwrap();
        let e2 = frame_embed(&same).unwrap();
        for &v in e2.data() {
            assert_abs_diff_eq!(v, 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn lstm_all_zero_parameters_give_zero_hidden_states() {
        let (t, c, h) = (4, 3, 5);
        let e = Tensor::constant(&[t, c], vec![0.7; t * c]).unwrap();
        let w = Tensor::zeros(&[c + h, 4 * h]);
        let b = Tensor::zeros(&[4 * h]);
        let out = lstm_forward(&e, &w, &b, h).unwrap();
        // gates are 0.5, candidate g is 0, so c and h stay exactly 0
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_single_step_matches_hand_rolled_cell() {
        let (c, h) = (2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w_data: Vec<f64> = (0..(c + h) * 4 * h).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let b_data: Vec<f64> = (0..4 * h).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x_data: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let e = Tensor::constant(&[1, c], x_data.clone()).unwrap();
        let w = Tensor::constant(&[c + h, 4 * h], w_data.clone()).unwrap();
        let b = Tensor::constant(&[4 * h], b_data.clone()).unwrap();
        let out = lstm_forward(&e, &w, &b, h).unwrap();

        let sigma = |v: f64| 1.0 / (1.0 + (-v).exp());
        // h_prev = 0 so only the input block of w participates
        for k in 0..h {
            let gate = |block: usize| {
                let col = block * h + k;
                let mut z = b_data[col];
                for ci in 0..c {
                    z += x_data[ci] * w_data[ci * 4 * h + col];
                }
                z
            };
            let i = sigma(gate(0));
            let f = sigma(gate(1));
            let o = sigma(gate(2));
            let g = gate(3).tanh();
            let cell = f * 0.0 + i * g;
            let want = o * cell.tanh();
            assert_abs_diff_eq!(out.data()[k], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn lstm_zero_input_nonzero_bias_converges_to_constant_hidden() {
        let (t, c, h) = (60, 2, 1);
        let e = Tensor::zeros(&[t, c]);
        let w = Tensor::zeros(&[c + h, 4 * h]);
        let b = Tensor::constant(&[4], vec![0.4, -0.2, 0.9, 0.6]).unwrap();
        let out = lstm_forward(&e, &w, &b, h).unwrap();

        // independent scalar recursion of the same cell
        let sigma = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (i, f, o, g) = (sigma(0.4), sigma(-0.2), sigma(0.9), 0.6f64.tanh());
        let mut cell = 0.0;
        let mut last = 0.0;
        for step in 0..t {
            cell = f * cell + i * g;
            last = o * cell.tanh();
            assert_abs_diff_eq!(out.data()[step], last, epsilon = 1e-12);
        }
        // fixed point of c = f*c + i*g reached within tolerance
        let c_star = i * g / (1.0 - f);
        assert_abs_diff_eq!(cell, c_star, epsilon = 1e-9);
        assert_abs_diff_eq!(last, o * c_star.tanh(), epsilon = 1e-9);
    }

    fn random_attention_params(h: usize, a: usize, seed: u64) -> (Tensor, Tensor, Tensor) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Tensor::constant(&[h, a], (0..h * a).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let b = Tensor::constant(&[a], (0..a).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
        let v = Tensor::constant(&[a, 1], (0..a).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        (w, b, v)
    }

    #[test]
    fn attention_on_identical_steps_is_uniform() {
        let (h_dim, a_dim, t) = (4, 3, 7);
        let (w, b, v) = random_attention_params(h_dim, a_dim, 3);
        let row: Vec<f64> = vec![0.3, -0.8, 0.1, 0.9];
        let h = Tensor::constant(&[t, h_dim], row.repeat(t)).unwrap();
        let (context, alpha) = attention_pool(&h, &w, &b, &v).unwrap();
        for &a in alpha.data() {
            assert_abs_diff_eq!(a, 1.0 / t as f64, epsilon = 1e-15);
        }
        for (c, r) in context.data().iter().zip(&row) {
            assert_abs_diff_eq!(*c, *r, epsilon = 1e-12);
        }
    }

    #[test]
    fn attention_single_step_passes_through() {
        let (h_dim, a_dim) = (5, 4);
        let (w, b, v) = random_attention_params(h_dim, a_dim, 4);
        let row: Vec<f64> = vec![0.2, -0.4, 0.6, 0.1, -0.9];
        let h = Tensor::constant(&[1, h_dim], row.clone()).unwrap();
        let (context, alpha) = attention_pool(&h, &w, &b, &v).unwrap();
        assert_eq!(alpha.data(), &[1.0]);
        for (c, r) in context.data().iter().zip(&row) {
            assert_abs_diff_eq!(*c, *r, epsilon = 1e-15);
        }
    }

    #[test]
    fn dominant_score_concentrates_attention() {
        // softmax of [10, 0, 0, 0] puts > 0.999 on the large score
        let x = Tensor::constant(&[4], vec![10.0, 0.0, 0.0, 0.0]).unwrap();
        let a = x.softmax_lastdim().unwrap();
        assert!(a.data()[0] > 0.999);
    }

    #[test]
    fn attention_weights_sum_to_one_on_random_inputs() {
        let (h_dim, a_dim) = (6, 5);
        let (w, b, v) = random_attention_params(h_dim, a_dim, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..1000 {
            let t = 1 + (case % 9);
            let h = Tensor::constant(
                &[t, h_dim],
                (0..t * h_dim).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            )
            .unwrap();
            let (_, alpha) = attention_pool(&h, &w, &b, &v).unwrap();
            let sum: f64 = alpha.data().iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            assert!(alpha.data().iter().all(|&a| a >= 0.0));
        }
    }

    fn tiny_config(variant: Variant) -> ModelConfig {
        ModelConfig {
            gcn_channels: vec![3, 4],
            lstm_hidden: 6,
            attention_dim: 5,
            n_classes: 4,
            dropout: 0.0,
            variant,
        }
    }

    fn constant_sequence(t: usize, fill: impl Fn(usize, usize) -> [f64; 3]) -> MotionSequence {
        use crate::skeleton::{ActionKind, Label, SkeletonFrame};
        let frames = (0..t)
            .map(|ti| SkeletonFrame {
                t: ti as f64 / 30.0,
                xyz: std::array::from_fn(|j| fill(ti, j)),
            })
            .collect();
        MotionSequence {
            frames,
            label: Label::NC,
            action: ActionKind::TouchMouth,
            subject_id: "S00".into(),
            view_id: 0,
            repetition: 0,
            fps: 30.0,
            preprocessed: true,
        }
    }

    #[test]
    fn forward_produces_four_logits_and_softmax_normalizes() {
        let graph = canonical_upper_limb_graph();
        for variant in Variant::ALL {
            let model = GcnLstmAttModel::init(&tiny_config(variant), &graph, 42).unwrap();
            let seq = constant_sequence(5, |t, j| [t as f64 * 0.1, j as f64 * 0.05, 0.3]);
            let logits = model.forward(&seq).unwrap();
            assert_eq!(logits.shape(), &[4]);
            let p = logits.softmax_lastdim().unwrap();
            let sum: f64 = p.data().iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gcn_only_is_invariant_to_frame_repetition() {
        let graph = canonical_upper_limb_graph();
        let model = GcnLstmAttModel::init(&tiny_config(Variant::GcnOnly), &graph, 1).unwrap();
        let one = constant_sequence(2, |_, j| [j as f64 * 0.1, 0.2, -0.1]);
        let many = constant_sequence(9, |_, j| [j as f64 * 0.1, 0.2, -0.1]);
        let a = model.forward(&one).unwrap();
        let b = model.forward(&many).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn tiny_model_gradient_check_passes() {
        for variant in Variant::ALL {
            let err = model_gradient_check(&tiny_config(variant), 5, 7, 1e-5, false).unwrap();
            assert!(err < 1e-4, "{variant:?}: relative error {err}");
        }
    }

    #[test]
    fn corrupted_adjoint_fails_the_gradient_check() {
        let err = model_gradient_check(&tiny_config(Variant::GcnLstmAtt), 5, 7, 1e-5, true)
            .unwrap();
        assert!(err > 1e-4, "negative control must fail, got {err}");
    }

    #[test]
    fn config_validation() {
        let bad = ModelConfig {
            gcn_channels: vec![2, 8],
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            dropout: 1.0,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            gcn_channels: vec![3],
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
