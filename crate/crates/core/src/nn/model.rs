//! The trainable sequence labeler: convolutional sentence encoder, modality
//! fusion, one-layer LSTM (or per-sentence MLP head for the baseline),
//! softmax output, and hand-written reverse-mode gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::tensor::{add_outer, axpy, dot, mat_vec_into, sigmoid, vec_mat_into, Mat};
use crate::signal::{FeatureBundle, PAD_ID};

pub const N_CLASSES: usize = 2;
const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Lstm,
    Mlp,
}

/// Architecture dimensions and enabled modalities.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub emb_dim: usize,
    pub max_tokens: usize,
    pub conv_widths: Vec<usize>,
    pub conv_channels: usize,
    pub visual_dim: usize,
    pub audio_dim: usize,
    pub fusion_dim: usize,
    pub hidden_dim: usize,
    pub use_text: bool,
    pub use_visual: bool,
    pub use_audio: bool,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 2,
            emb_dim: 50,
            max_tokens: 60,
            conv_widths: vec![3, 4, 5],
            conv_channels: 75,
            visual_dim: 1536,
            audio_dim: 65,
            fusion_dim: 300,
            hidden_dim: 128,
            use_text: true,
            use_visual: true,
            use_audio: true,
            dropout: 0.5,
        }
    }
}

impl ModelConfig {
    /// Concatenated convolution banks: one slot per (width, channel).
    pub fn sentence_dim(&self) -> usize {
        self.conv_widths.len() * self.conv_channels
    }

    /// Width of the fused-input concatenation; shrinks with disabled
    /// modalities.
    pub fn fused_input_dim(&self) -> usize {
        let mut m = self.sentence_dim();
        if self.use_visual {
            m += self.visual_dim;
        }
        if self.use_audio {
            m += self.audio_dim;
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if !self.use_text {
            return Err(Error::config("the text modality cannot be disabled"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must lie in [0, 1)"));
        }
        if self.vocab_size < 2 {
            return Err(Error::config("vocab must include pad and unk rows"));
        }
        if self.conv_widths.is_empty() {
            return Err(Error::config("at least one convolution width is required"));
        }
        Ok(())
    }
}

/// Sentence encoder and fusion parameters, shared by both heads.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEnd {
    pub embedding: Mat,        // vocab x emb
    pub conv_w: Vec<Mat>,      // per width: channels x (width * emb)
    pub conv_b: Vec<Vec<f64>>, // per width: channels
    pub fusion_w: Mat,         // m x n
    pub fusion_b: Vec<f64>,    // n
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmHead {
    pub w: Mat,          // (hidden + n) x 4*hidden, gate order i f o c
    pub b: Vec<f64>,     // 4*hidden
    pub out_w: Mat,      // hidden x 2
    pub out_b: Vec<f64>, // 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    pub w1: Mat, // n x hidden
    pub b1: Vec<f64>,
    pub w2: Mat, // hidden x hidden
    pub b2: Vec<f64>,
    pub w3: Mat, // hidden x 2
    pub b3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Lstm(LstmHead),
    Mlp(MlpHead),
}

impl Head {
    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Lstm(_) => HeadKind::Lstm,
            Head::Mlp(_) => HeadKind::Mlp,
        }
    }
}

/// All trainable tensors. Gradients and optimizer moments reuse the same
/// shape via `zeros_like`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub front: FrontEnd,
    pub head: Head,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: ParamSet,
}

/// LSTM recurrent state; both vectors start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            hidden: vec![0.0; hidden_dim],
            cell: vec![0.0; hidden_dim],
        }
    }
}

impl ParamSet {
    pub fn zeros(cfg: &ModelConfig, kind: HeadKind) -> Self {
        let front = FrontEnd {
            embedding: Mat::zeros(cfg.vocab_size, cfg.emb_dim),
            conv_w: cfg
                .conv_widths
                .iter()
                .map(|&w| Mat::zeros(cfg.conv_channels, w * cfg.emb_dim))
                .collect(),
            conv_b: cfg
                .conv_widths
                .iter()
                .map(|_| vec![0.0; cfg.conv_channels])
                .collect(),
            fusion_w: Mat::zeros(cfg.fused_input_dim(), cfg.fusion_dim),
            fusion_b: vec![0.0; cfg.fusion_dim],
        };
        let head = match kind {
            HeadKind::Lstm => Head::Lstm(LstmHead {
                w: Mat::zeros(cfg.hidden_dim + cfg.fusion_dim, 4 * cfg.hidden_dim),
                b: vec![0.0; 4 * cfg.hidden_dim],
                out_w: Mat::zeros(cfg.hidden_dim, N_CLASSES),
                out_b: vec![0.0; N_CLASSES],
            }),
            HeadKind::Mlp => Head::Mlp(MlpHead {
                w1: Mat::zeros(cfg.fusion_dim, cfg.hidden_dim),
                b1: vec![0.0; cfg.hidden_dim],
                w2: Mat::zeros(cfg.hidden_dim, cfg.hidden_dim),
                b2: vec![0.0; cfg.hidden_dim],
                w3: Mat::zeros(cfg.hidden_dim, N_CLASSES),
                b3: vec![0.0; N_CLASSES],
            }),
        };
        ParamSet { front, head }
    }

    pub fn zeros_like(&self, cfg: &ModelConfig) -> Self {
        ParamSet::zeros(cfg, self.head.kind())
    }

    pub fn zero_out(&mut self) {
        for (_, _, data) in self.tensors_mut() {
            data.fill(0.0);
        }
    }

    /// Named views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        let f = &self.front;
        out.push((
            "embedding".into(),
            vec![f.embedding.rows, f.embedding.cols],
            &f.embedding.data,
        ));
        for (i, (w, b)) in f.conv_w.iter().zip(&f.conv_b).enumerate() {
            out.push((format!("conv_w{i}"), vec![w.rows, w.cols], &w.data));
            out.push((format!("conv_b{i}"), vec![b.len()], b));
        }
        out.push((
            "fusion_w".into(),
            vec![f.fusion_w.rows, f.fusion_w.cols],
            &f.fusion_w.data,
        ));
        out.push(("fusion_b".into(), vec![f.fusion_b.len()], &f.fusion_b));
        match &self.head {
            Head::Lstm(h) => {
                out.push(("lstm_w".into(), vec![h.w.rows, h.w.cols], &h.w.data));
                out.push(("lstm_b".into(), vec![h.b.len()], &h.b));
                out.push(("out_w".into(), vec![h.out_w.rows, h.out_w.cols], &h.out_w.data));
                out.push(("out_b".into(), vec![h.out_b.len()], &h.out_b));
            }
            Head::Mlp(h) => {
                out.push(("mlp_w1".into(), vec![h.w1.rows, h.w1.cols], &h.w1.data));
                out.push(("mlp_b1".into(), vec![h.b1.len()], &h.b1));
                out.push(("mlp_w2".into(), vec![h.w2.rows, h.w2.cols], &h.w2.data));
                out.push(("mlp_b2".into(), vec![h.b2.len()], &h.b2));
                out.push(("mlp_w3".into(), vec![h.w3.rows, h.w3.cols], &h.w3.data));
                out.push(("mlp_b3".into(), vec![h.b3.len()], &h.b3));
            }
        }
        out
    }

    /// Mutable views in the same order as `tensors`.
    pub fn tensors_mut(&mut self) -> Vec<(String, Vec<usize>, &mut Vec<f64>)> {
        let mut out: Vec<(String, Vec<usize>, &mut Vec<f64>)> = Vec::new();
        let f = &mut self.front;
        let emb_dims = vec![f.embedding.rows, f.embedding.cols];
        out.push(("embedding".into(), emb_dims, &mut f.embedding.data));
        for (i, (w, b)) in f.conv_w.iter_mut().zip(f.conv_b.iter_mut()).enumerate() {
            let dims = vec![w.rows, w.cols];
            out.push((format!("conv_w{i}"), dims, &mut w.data));
            let blen = b.len();
            out.push((format!("conv_b{i}"), vec![blen], b));
        }
        let fw_dims = vec![f.fusion_w.rows, f.fusion_w.cols];
        out.push(("fusion_w".into(), fw_dims, &mut f.fusion_w.data));
        let fb_len = f.fusion_b.len();
        out.push(("fusion_b".into(), vec![fb_len], &mut f.fusion_b));
        match &mut self.head {
            Head::Lstm(h) => {
                let dims = vec![h.w.rows, h.w.cols];
                out.push(("lstm_w".into(), dims, &mut h.w.data));
                let blen = h.b.len();
                out.push(("lstm_b".into(), vec![blen], &mut h.b));
                let odims = vec![h.out_w.rows, h.out_w.cols];
                out.push(("out_w".into(), odims, &mut h.out_w.data));
                let oblen = h.out_b.len();
                out.push(("out_b".into(), vec![oblen], &mut h.out_b));
            }
            Head::Mlp(h) => {
                let d1 = vec![h.w1.rows, h.w1.cols];
                out.push(("mlp_w1".into(), d1, &mut h.w1.data));
                let b1 = h.b1.len();
                out.push(("mlp_b1".into(), vec![b1], &mut h.b1));
                let d2 = vec![h.w2.rows, h.w2.cols];
                out.push(("mlp_w2".into(), d2, &mut h.w2.data));
                let b2 = h.b2.len();
                out.push(("mlp_b2".into(), vec![b2], &mut h.b2));
                let d3 = vec![h.w3.rows, h.w3.cols];
                out.push(("mlp_w3".into(), d3, &mut h.w3.data));
                let b3 = h.b3.len();
                out.push(("mlp_b3".into(), vec![b3], &mut h.b3));
            }
        }
        out
    }
}

impl Model {
    /// Random initialization: uniform(-0.08, 0.08) weights, zero biases.
    /// The embedding table comes from the vocabulary build when supplied.
    pub fn init(
        cfg: ModelConfig,
        kind: HeadKind,
        embedding: Option<&[f64]>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut params = ParamSet::zeros(&cfg, kind);
        if let Some(table) = embedding {
            if table.len() != cfg.vocab_size * cfg.emb_dim {
                return Err(Error::config(format!(
                    "embedding table of {} values does not match vocab {} x dim {}",
                    table.len(),
                    cfg.vocab_size,
                    cfg.emb_dim
                )));
            }
            params.front.embedding.data.copy_from_slice(table);
        } else {
            fill_uniform(&mut params.front.embedding.data, rng);
        }
        for w in &mut params.front.conv_w {
            fill_uniform(&mut w.data, rng);
        }
        fill_uniform(&mut params.front.fusion_w.data, rng);
        match &mut params.head {
            Head::Lstm(h) => {
                fill_uniform(&mut h.w.data, rng);
                fill_uniform(&mut h.out_w.data, rng);
            }
            Head::Mlp(h) => {
                fill_uniform(&mut h.w1.data, rng);
                fill_uniform(&mut h.w2.data, rng);
                fill_uniform(&mut h.w3.data, rng);
            }
        }
        Ok(Model { cfg, params })
    }
}

fn fill_uniform(data: &mut [f64], rng: &mut ChaCha8Rng) {
    for v in data {
        *v = rng.random_range(-INIT_RANGE..INIT_RANGE);
    }
}

// ---------------------------------------------------------------------------
// Forward pass with caches for the backward pass.
// ---------------------------------------------------------------------------

pub(crate) struct EncodeCache {
    /// Embedded sentence, max_tokens x emb row-major.
    emb: Vec<f64>,
    /// Per bank, per channel: pooled window and its pre-activation.
    /// None when the bank had no valid window (all-pad sentence).
    winners: Vec<Vec<Option<(usize, f64)>>>,
}

pub(crate) struct FuseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    drop_mask: Option<Vec<f64>>,
    output: Vec<f64>, // post-ReLU, post-dropout
}

pub(crate) enum StepCache {
    Lstm {
        h_prev: Vec<f64>,
        c_prev: Vec<f64>,
        gate_i: Vec<f64>,
        gate_f: Vec<f64>,
        gate_o: Vec<f64>,
        gate_g: Vec<f64>,
        tanh_c: Vec<f64>,
        h_drop_mask: Option<Vec<f64>>,
        h_dropped: Vec<f64>,
    },
    Mlp {
        pre1: Vec<f64>,
        a1: Vec<f64>, // post-ReLU, post-dropout
        mask1: Option<Vec<f64>>,
        pre2: Vec<f64>,
        a2: Vec<f64>,
        mask2: Option<Vec<f64>>,
    },
}

pub(crate) struct SentenceCache {
    enc: EncodeCache,
    fuse: FuseCache,
    step: StepCache,
    probs: [f64; N_CLASSES],
}

/// Encodes token ids into the sentence vector: embed, convolve each filter
/// bank over windows containing at least one real token, ReLU, max-pool.
/// All-pad sentences yield the zero vector.
pub fn encode_sentence(
    token_ids: &[u32],
    token_mask: &[bool],
    params: &ParamSet,
    cfg: &ModelConfig,
) -> Vec<f64> {
    encode_sentence_cached(token_ids, token_mask, params, cfg).0
}

pub(crate) fn encode_sentence_cached(
    token_ids: &[u32],
    token_mask: &[bool],
    params: &ParamSet,
    cfg: &ModelConfig,
) -> (Vec<f64>, EncodeCache) {
    let emb_dim = cfg.emb_dim;
    let mut emb = vec![0.0; cfg.max_tokens * emb_dim];
    for (pos, &id) in token_ids.iter().enumerate().take(cfg.max_tokens) {
        let id = if (id as usize) < cfg.vocab_size { id } else { PAD_ID };
        emb[pos * emb_dim..(pos + 1) * emb_dim]
            .copy_from_slice(params.front.embedding.row(id as usize));
    }

    let mut sentence = vec![0.0; cfg.sentence_dim()];
    let mut winners = Vec::with_capacity(cfg.conv_widths.len());
    for (bank, &width) in cfg.conv_widths.iter().enumerate() {
        let conv_w = &params.front.conv_w[bank];
        let conv_b = &params.front.conv_b[bank];
        let mut bank_winners: Vec<Option<(usize, f64)>> = vec![None; cfg.conv_channels];
        if cfg.max_tokens >= width {
            let mut best = vec![-1.0f64; cfg.conv_channels];
            for p in 0..=(cfg.max_tokens - width) {
                if !token_mask[p..p + width].iter().any(|&m| m) {
                    continue;
                }
                let window = &emb[p * emb_dim..(p + width) * emb_dim];
                for ch in 0..cfg.conv_channels {
                    let pre = conv_b[ch] + dot(conv_w.row(ch), window);
                    let post = pre.max(0.0);
                    if post > best[ch] {
                        best[ch] = post;
                        bank_winners[ch] = Some((p, pre));
                    }
                }
            }
            for ch in 0..cfg.conv_channels {
                if bank_winners[ch].is_some() {
                    sentence[bank * cfg.conv_channels + ch] = best[ch];
                }
            }
        }
        winners.push(bank_winners);
    }
    (sentence, EncodeCache { emb, winners })
}

/// Fused multimodal representation: ReLU([sentence; visual; audio] W + b),
/// with disabled modalities omitted from the concatenation.
pub fn fuse(
    sentence: &[f64],
    visual: &[f64],
    audio: &[f64],
    params: &ParamSet,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    let (out, _) = fuse_cached(sentence, visual, audio, params, cfg, None)?;
    Ok(out)
}

pub(crate) fn fuse_cached(
    sentence: &[f64],
    visual: &[f64],
    audio: &[f64],
    params: &ParamSet,
    cfg: &ModelConfig,
    drop_mask: Option<Vec<f64>>,
) -> Result<(Vec<f64>, FuseCache)> {
    let mut input = Vec::with_capacity(cfg.fused_input_dim());
    input.extend_from_slice(sentence);
    if cfg.use_visual {
        input.extend_from_slice(visual);
    }
    if cfg.use_audio {
        input.extend_from_slice(audio);
    }
    if input.len() != params.front.fusion_w.rows {
        return Err(Error::invalid(format!(
            "fuse: input of {} values does not match fusion weights of {} rows",
            input.len(),
            params.front.fusion_w.rows
        )));
    }
    let mut pre = params.front.fusion_b.clone();
    vec_mat_into(&mut pre, &input, &params.front.fusion_w);
    let mut output: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
    if let Some(mask) = &drop_mask {
        for (o, m) in output.iter_mut().zip(mask) {
            *o *= m;
        }
    }
    Ok((
        output.clone(),
        FuseCache {
            input,
            pre,
            drop_mask,
            output,
        },
    ))
}

/// One LSTM update. Gate order in the weight block is i, f, o, candidate.
pub fn lstm_step(x: &[f64], prev: &LstmState, head: &LstmHead) -> (LstmState, Vec<f64>) {
    let hidden = prev.hidden.len();
    let mut cat = Vec::with_capacity(hidden + x.len());
    cat.extend_from_slice(&prev.hidden);
    cat.extend_from_slice(x);
    let mut z = head.b.clone();
    vec_mat_into(&mut z, &cat, &head.w);
    let mut state = LstmState::zeros(hidden);
    let mut emitted = vec![0.0; hidden];
    for j in 0..hidden {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[hidden + j]);
        let o = sigmoid(z[2 * hidden + j]);
        let g = z[3 * hidden + j].tanh();
        let c = f * prev.cell[j] + i * g;
        state.cell[j] = c;
        let h = o * c.tanh();
        state.hidden[j] = h;
        emitted[j] = h;
    }
    (state, emitted)
}

fn softmax2(logits: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let sum = e0 + e1;
    [e0 / sum, e1 / sum]
}

fn sample_mask(len: usize, p: f64, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if p == 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    Some(
        (0..len)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect(),
    )
}

/// Runs one case through the model in order, returning the per-sentence
/// probability of the positive class and the caches for backprop.
pub(crate) fn forward_case(
    model: &Model,
    bundles: &[FeatureBundle],
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<SentenceCache>)> {
    let cfg = &model.cfg;
    let params = &model.params;
    let p_drop = match mode {
        Mode::Train => cfg.dropout,
        Mode::Eval => 0.0,
    };
    let mut probs = Vec::with_capacity(bundles.len());
    let mut caches = Vec::with_capacity(bundles.len());
    let mut state = LstmState::zeros(cfg.hidden_dim);

    for bundle in bundles {
        let (sentence, enc) = encode_sentence_cached(&bundle.token_ids, &bundle.token_mask, params, cfg);
        let x_mask = sample_mask(cfg.fusion_dim, p_drop, rng);
        let (fused, fuse_cache) =
            fuse_cached(&sentence, &bundle.visual, &bundle.audio, params, cfg, x_mask)?;

        let (step, logits) = match &params.head {
            Head::Lstm(head) => {
                let h_prev = state.hidden.clone();
                let c_prev = state.cell.clone();
                let hidden = cfg.hidden_dim;
                let mut cat = Vec::with_capacity(hidden + fused.len());
                cat.extend_from_slice(&h_prev);
                cat.extend_from_slice(&fused);
                let mut z = head.b.clone();
                vec_mat_into(&mut z, &cat, &head.w);
                let mut gate_i = vec![0.0; hidden];
                let mut gate_f = vec![0.0; hidden];
                let mut gate_o = vec![0.0; hidden];
                let mut gate_g = vec![0.0; hidden];
                let mut cell = vec![0.0; hidden];
                let mut tanh_c = vec![0.0; hidden];
                let mut h = vec![0.0; hidden];
                for j in 0..hidden {
                    gate_i[j] = sigmoid(z[j]);
                    gate_f[j] = sigmoid(z[hidden + j]);
                    gate_o[j] = sigmoid(z[2 * hidden + j]);
                    gate_g[j] = z[3 * hidden + j].tanh();
                    cell[j] = gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j];
                    tanh_c[j] = cell[j].tanh();
                    h[j] = gate_o[j] * tanh_c[j];
                }
                let h_drop_mask = sample_mask(hidden, p_drop, rng);
                let h_dropped: Vec<f64> = match &h_drop_mask {
                    Some(mask) => h.iter().zip(mask).map(|(v, m)| v * m).collect(),
                    None => h.clone(),
                };
                let mut logits = [head.out_b[0], head.out_b[1]];
                for (r, &hv) in h_dropped.iter().enumerate() {
                    let row = head.out_w.row(r);
                    logits[0] += hv * row[0];
                    logits[1] += hv * row[1];
                }
                state = LstmState {
                    hidden: h,
                    cell,
                };
                (
                    StepCache::Lstm {
                        h_prev,
                        c_prev,
                        gate_i,
                        gate_f,
                        gate_o,
                        gate_g,
                        tanh_c,
                        h_drop_mask,
                        h_dropped,
                    },
                    logits,
                )
            }
            Head::Mlp(head) => {
                let mut pre1 = head.b1.clone();
                vec_mat_into(&mut pre1, &fused, &head.w1);
                let mask1 = sample_mask(cfg.hidden_dim, p_drop, rng);
                let a1: Vec<f64> = pre1
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| {
                        let v = z.max(0.0);
                        match &mask1 {
                            Some(m) => v * m[j],
                            None => v,
                        }
                    })
                    .collect();
                let mut pre2 = head.b2.clone();
                vec_mat_into(&mut pre2, &a1, &head.w2);
                let mask2 = sample_mask(cfg.hidden_dim, p_drop, rng);
                let a2: Vec<f64> = pre2
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| {
                        let v = z.max(0.0);
                        match &mask2 {
                            Some(m) => v * m[j],
                            None => v,
                        }
                    })
                    .collect();
                let mut logits = [head.b3[0], head.b3[1]];
                for (r, &av) in a2.iter().enumerate() {
                    let row = head.w3.row(r);
                    logits[0] += av * row[0];
                    logits[1] += av * row[1];
                }
                (
                    StepCache::Mlp {
                        pre1,
                        a1,
                        mask1,
                        pre2,
                        a2,
                        mask2,
                    },
                    logits,
                )
            }
        };

        let p = softmax2(logits);
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::NonFinite("non-finite probability in forward pass".into()));
        }
        probs.push(p[1]);
        caches.push(SentenceCache {
            enc,
            fuse: fuse_cache,
            step,
            probs: p,
        });
    }
    Ok((probs, caches))
}

/// Per-sentence probability of the positive class for one case.
/// Eval mode is deterministic; train mode draws dropout from `seed`.
pub fn predict_sequence(
    bundles: &[FeatureBundle],
    model: &Model,
    mode: Mode,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(forward_case(model, bundles, mode, &mut rng)?.0)
}

// ---------------------------------------------------------------------------
// Backward pass.
// ---------------------------------------------------------------------------

/// Accumulates gradients for one case into `grads`. `weight` scales each
/// sentence's cross-entropy (1 / batch sentence count for a batch mean).
/// Returns the case's summed negative log-likelihood.
pub(crate) fn backward_case(
    model: &Model,
    bundles: &[FeatureBundle],
    caches: &[SentenceCache],
    weight: f64,
    grads: &mut ParamSet,
) -> f64 {
    let cfg = &model.cfg;
    let params = &model.params;
    let hidden = cfg.hidden_dim;
    let mut loss = 0.0;

    let mut dh_rec = vec![0.0; hidden];
    let mut dc_rec = vec![0.0; hidden];

    for t in (0..bundles.len()).rev() {
        let cache = &caches[t];
        let bundle = &bundles[t];
        let gold = bundle.gold_label as usize;
        loss += -cache.probs[gold].ln();

        let mut dlogits = [cache.probs[0] * weight, cache.probs[1] * weight];
        dlogits[gold] -= weight;

        // dfused collects the gradient on the fusion output (pre-dropout
        // handled below via the stored mask).
        let mut dfused = vec![0.0; cfg.fusion_dim];

        match (&params.head, &cache.step) {
            (
                Head::Lstm(head),
                StepCache::Lstm {
                    h_prev,
                    c_prev,
                    gate_i,
                    gate_f,
                    gate_o,
                    gate_g,
                    tanh_c,
                    h_drop_mask,
                    h_dropped,
                },
            ) => {
                let Head::Lstm(g) = &mut grads.head else { unreachable!() };
                // output projection
                let mut dh = dh_rec.clone();
                for r in 0..hidden {
                    let row = head.out_w.row(r);
                    let grow = g.out_w.row_mut(r);
                    grow[0] += h_dropped[r] * dlogits[0];
                    grow[1] += h_dropped[r] * dlogits[1];
                    let mut dhd = row[0] * dlogits[0] + row[1] * dlogits[1];
                    if let Some(mask) = h_drop_mask {
                        dhd *= mask[r];
                    }
                    dh[r] += dhd;
                }
                g.out_b[0] += dlogits[0];
                g.out_b[1] += dlogits[1];

                // gates
                let mut dz = vec![0.0; 4 * hidden];
                let mut dc_prev = vec![0.0; hidden];
                for j in 0..hidden {
                    let do_ = dh[j] * tanh_c[j];
                    let dtc = dh[j] * gate_o[j];
                    let dc = dtc * (1.0 - tanh_c[j] * tanh_c[j]) + dc_rec[j];
                    let df = dc * c_prev[j];
                    let di = dc * gate_g[j];
                    let dg = dc * gate_i[j];
                    dc_prev[j] = dc * gate_f[j];
                    dz[j] = di * gate_i[j] * (1.0 - gate_i[j]);
                    dz[hidden + j] = df * gate_f[j] * (1.0 - gate_f[j]);
                    dz[2 * hidden + j] = do_ * gate_o[j] * (1.0 - gate_o[j]);
                    dz[3 * hidden + j] = dg * (1.0 - gate_g[j] * gate_g[j]);
                }

                let mut cat = Vec::with_capacity(hidden + cfg.fusion_dim);
                cat.extend_from_slice(h_prev);
                cat.extend_from_slice(&cache.fuse.output);
                add_outer(&mut g.w, &cat, &dz);
                axpy(&mut g.b, 1.0, &dz);

                let mut dcat = vec![0.0; hidden + cfg.fusion_dim];
                mat_vec_into(&mut dcat, &head.w, &dz);
                dh_rec.copy_from_slice(&dcat[..hidden]);
                dc_rec = dc_prev;
                dfused.copy_from_slice(&dcat[hidden..]);
            }
            (
                Head::Mlp(head),
                StepCache::Mlp {
                    pre1,
                    a1,
                    mask1,
                    pre2,
                    a2,
                    mask2,
                },
            ) => {
                let Head::Mlp(g) = &mut grads.head else { unreachable!() };
                let mut da2 = vec![0.0; hidden];
                for r in 0..hidden {
                    let row = head.w3.row(r);
                    let grow = g.w3.row_mut(r);
                    grow[0] += a2[r] * dlogits[0];
                    grow[1] += a2[r] * dlogits[1];
                    da2[r] = row[0] * dlogits[0] + row[1] * dlogits[1];
                }
                g.b3[0] += dlogits[0];
                g.b3[1] += dlogits[1];

                let mut dpre2 = vec![0.0; hidden];
                for j in 0..hidden {
                    let mut d = da2[j];
                    if let Some(m) = mask2 {
                        d *= m[j];
                    }
                    dpre2[j] = if pre2[j] > 0.0 { d } else { 0.0 };
                }
                add_outer(&mut g.w2, a1, &dpre2);
                axpy(&mut g.b2, 1.0, &dpre2);
                let mut da1 = vec![0.0; hidden];
                mat_vec_into(&mut da1, &head.w2, &dpre2);

                let mut dpre1 = vec![0.0; hidden];
                for j in 0..hidden {
                    let mut d = da1[j];
                    if let Some(m) = mask1 {
                        d *= m[j];
                    }
                    dpre1[j] = if pre1[j] > 0.0 { d } else { 0.0 };
                }
                add_outer(&mut g.w1, &cache.fuse.output, &dpre1);
                axpy(&mut g.b1, 1.0, &dpre1);
                mat_vec_into(&mut dfused, &head.w1, &dpre1);
            }
            _ => unreachable!("head and cache kinds always match"),
        }

        // fusion backward
        let mut dpre_fuse = vec![0.0; cfg.fusion_dim];
        for c in 0..cfg.fusion_dim {
            let mut d = dfused[c];
            if let Some(mask) = &cache.fuse.drop_mask {
                d *= mask[c];
            }
            dpre_fuse[c] = if cache.fuse.pre[c] > 0.0 { d } else { 0.0 };
        }
        add_outer(&mut grads.front.fusion_w, &cache.fuse.input, &dpre_fuse);
        axpy(&mut grads.front.fusion_b, 1.0, &dpre_fuse);
        let mut dinput = vec![0.0; cache.fuse.input.len()];
        mat_vec_into(&mut dinput, &params.front.fusion_w, &dpre_fuse);
        let dsentence = &dinput[..cfg.sentence_dim()];

        // convolution + embedding backward
        let emb_dim = cfg.emb_dim;
        let mut demb = vec![0.0; cfg.max_tokens * emb_dim];
        for (bank, &width) in cfg.conv_widths.iter().enumerate() {
            let conv_w = &params.front.conv_w[bank];
            for ch in 0..cfg.conv_channels {
                let Some((p, pre)) = cache.enc.winners[bank][ch] else {
                    continue;
                };
                if pre <= 0.0 {
                    continue;
                }
                let upstream = dsentence[bank * cfg.conv_channels + ch];
                if upstream == 0.0 {
                    continue;
                }
                let window = &cache.enc.emb[p * emb_dim..(p + width) * emb_dim];
                axpy(grads.front.conv_w[bank].row_mut(ch), upstream, window);
                grads.front.conv_b[bank][ch] += upstream;
                axpy(
                    &mut demb[p * emb_dim..(p + width) * emb_dim],
                    upstream,
                    conv_w.row(ch),
                );
            }
        }
        for (pos, &id) in bundle.token_ids.iter().enumerate().take(cfg.max_tokens) {
            let id = if (id as usize) < cfg.vocab_size { id } else { PAD_ID };
            let slice = &demb[pos * emb_dim..(pos + 1) * emb_dim];
            axpy(grads.front.embedding.row_mut(id as usize), 1.0, slice);
        }
    }
    loss
}

/// Mean per-sentence cross-entropy over a batch of cases, with gradients
/// for every parameter tensor accumulated into `grads` (which is zeroed
/// first). Dropout is drawn from `rng` in train mode.
pub fn loss_and_grads<B: AsRef<[FeatureBundle]>>(
    model: &Model,
    batch: &[B],
    mode: Mode,
    rng: &mut ChaCha8Rng,
    grads: &mut ParamSet,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("loss_and_grads: empty batch"));
    }
    grads.zero_out();
    let total: usize = batch.iter().map(|c| c.as_ref().len()).sum();
    if total == 0 {
        return Err(Error::invalid("loss_and_grads: batch has no sentences"));
    }
    let weight = 1.0 / total as f64;
    let mut loss_sum = 0.0;
    for (case_idx, case) in batch.iter().enumerate() {
        let bundles = case.as_ref();
        let (_, caches) = forward_case(model, bundles, mode, rng)?;
        let case_loss = backward_case(model, bundles, &caches, weight, grads);
        if !case_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "non-finite loss in batch case {case_idx}"
            )));
        }
        loss_sum += case_loss;
    }
    Ok(loss_sum * weight)
}
