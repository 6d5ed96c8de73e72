//! Linear-chain CRF over binary labels: log-space forward/backward,
//! observed-minus-expected gradients, Viterbi decoding, and a small
//! gradient-ascent training loop with Adam and L2 regularization.
//!
//! Features are the first `window` tokens' embeddings concatenated
//! (zero-padded), taken from the frozen initial table; the multimodal
//! variant appends the visual and acoustic vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{prf_minority, PredictionTrace, TraceRecord};
use crate::nn::adam::{adam_update, AdamConfig};
use crate::nn::checkpoint::NamedTensor;
use crate::nn::tensor::{dot, Mat};
use crate::signal::FeatureBundle;

#[derive(Debug, Clone)]
pub struct CrfConfig {
    /// Leading tokens whose embeddings form the feature vector.
    pub window: usize,
    pub emb_dim: usize,
    /// Append visual and acoustic vectors to the features.
    pub multimodal: bool,
    pub visual_dim: usize,
    pub audio_dim: usize,
    pub l2: f64,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            window: 20,
            emb_dim: 50,
            multimodal: false,
            visual_dim: 1536,
            audio_dim: 65,
            l2: 1e-4,
        }
    }
}

impl CrfConfig {
    pub fn feature_dim(&self) -> usize {
        let mut d = self.window * self.emb_dim;
        if self.multimodal {
            d += self.visual_dim + self.audio_dim;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    /// Per-label weight vector over the features: 2 x feature_dim.
    pub unary: Mat,
    /// trans[prev][next]
    pub trans: [[f64; 2]; 2],
}

impl CrfParams {
    pub fn zeros(feature_dim: usize) -> Self {
        CrfParams {
            unary: Mat::zeros(2, feature_dim),
            trans: [[0.0; 2]; 2],
        }
    }

    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        vec![
            NamedTensor {
                name: "crf_unary".into(),
                dims: vec![2, self.unary.cols],
                data: self.unary.data.clone(),
            },
            NamedTensor {
                name: "crf_trans".into(),
                dims: vec![2, 2],
                data: vec![
                    self.trans[0][0],
                    self.trans[0][1],
                    self.trans[1][0],
                    self.trans[1][1],
                ],
            },
        ]
    }

    pub fn from_tensors(tensors: &[NamedTensor], feature_dim: usize) -> Result<Self> {
        let unary = tensors
            .iter()
            .find(|t| t.name == "crf_unary")
            .ok_or_else(|| Error::format("checkpoint is missing crf_unary"))?;
        let trans = tensors
            .iter()
            .find(|t| t.name == "crf_trans")
            .ok_or_else(|| Error::format("checkpoint is missing crf_trans"))?;
        if unary.dims != vec![2, feature_dim] {
            return Err(Error::format(format!(
                "crf_unary dims {:?} do not match feature dim {feature_dim}",
                unary.dims
            )));
        }
        if trans.dims != vec![2, 2] {
            return Err(Error::format("crf_trans must be 2x2"));
        }
        Ok(CrfParams {
            unary: Mat {
                rows: 2,
                cols: feature_dim,
                data: unary.data.clone(),
            },
            trans: [
                [trans.data[0], trans.data[1]],
                [trans.data[2], trans.data[3]],
            ],
        })
    }
}

/// Feature vector for one sentence from the frozen embedding table.
pub fn crf_features(bundle: &FeatureBundle, table: &[f64], cfg: &CrfConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.feature_dim()];
    for slot in 0..cfg.window {
        if slot >= bundle.token_ids.len() || !bundle.token_mask[slot] {
            continue;
        }
        let id = bundle.token_ids[slot] as usize;
        let row = &table[id * cfg.emb_dim..(id + 1) * cfg.emb_dim];
        out[slot * cfg.emb_dim..(slot + 1) * cfg.emb_dim].copy_from_slice(row);
    }
    if cfg.multimodal {
        let base = cfg.window * cfg.emb_dim;
        out[base..base + cfg.visual_dim].copy_from_slice(&bundle.visual);
        out[base + cfg.visual_dim..].copy_from_slice(&bundle.audio);
    }
    out
}

/// One case's feature sequence and gold labels.
#[derive(Debug, Clone)]
pub struct CrfCase {
    pub key: String,
    pub features: Vec<Vec<f64>>,
    pub gold: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct CrfGrads {
    pub unary: Mat,
    pub trans: [[f64; 2]; 2],
}

impl CrfGrads {
    fn zeros(feature_dim: usize) -> Self {
        CrfGrads {
            unary: Mat::zeros(2, feature_dim),
            trans: [[0.0; 2]; 2],
        }
    }
}

#[inline]
fn logsumexp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn unary_scores(features: &[Vec<f64>], params: &CrfParams) -> Vec<[f64; 2]> {
    features
        .iter()
        .map(|f| [dot(params.unary.row(0), f), dot(params.unary.row(1), f)])
        .collect()
}

fn log_alphas(scores: &[[f64; 2]], params: &CrfParams) -> Vec<[f64; 2]> {
    let mut alphas = Vec::with_capacity(scores.len());
    alphas.push(scores[0]);
    for t in 1..scores.len() {
        let prev = alphas[t - 1];
        let mut here = [0.0; 2];
        for (y, slot) in here.iter_mut().enumerate() {
            *slot = scores[t][y]
                + logsumexp2(
                    prev[0] + params.trans[0][y],
                    prev[1] + params.trans[1][y],
                );
        }
        alphas.push(here);
    }
    alphas
}

fn log_betas(scores: &[[f64; 2]], params: &CrfParams) -> Vec<[f64; 2]> {
    let t_len = scores.len();
    let mut betas = vec![[0.0; 2]; t_len];
    for t in (0..t_len.saturating_sub(1)).rev() {
        let next = betas[t + 1];
        for y in 0..2 {
            betas[t][y] = logsumexp2(
                params.trans[y][0] + scores[t + 1][0] + next[0],
                params.trans[y][1] + scores[t + 1][1] + next[1],
            );
        }
    }
    betas
}

/// Log partition function from the forward pass.
pub fn log_partition(features: &[Vec<f64>], params: &CrfParams) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::invalid("crf: empty sequence"));
    }
    let scores = unary_scores(features, params);
    let last = *log_alphas(&scores, params).last().unwrap();
    Ok(logsumexp2(last[0], last[1]))
}

/// Log partition function recomputed from the backward pass; used to check
/// the two recursions against each other.
pub fn log_partition_backward(features: &[Vec<f64>], params: &CrfParams) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::invalid("crf: empty sequence"));
    }
    let scores = unary_scores(features, params);
    let betas = log_betas(&scores, params);
    Ok(logsumexp2(
        scores[0][0] + betas[0][0],
        scores[0][1] + betas[0][1],
    ))
}

/// Per-position marginals P(y_t = label).
pub fn crf_marginals(features: &[Vec<f64>], params: &CrfParams) -> Result<Vec<[f64; 2]>> {
    if features.is_empty() {
        return Ok(Vec::new());
    }
    let scores = unary_scores(features, params);
    let alphas = log_alphas(&scores, params);
    let betas = log_betas(&scores, params);
    let last = alphas.last().unwrap();
    let log_z = logsumexp2(last[0], last[1]);
    Ok(alphas
        .iter()
        .zip(&betas)
        .map(|(a, b)| {
            [
                (a[0] + b[0] - log_z).exp(),
                (a[1] + b[1] - log_z).exp(),
            ]
        })
        .collect())
}

/// Log-likelihood of the gold labeling and its gradient (observed minus
/// expected feature counts) via forward-backward.
pub fn crf_loglik_and_grads(
    features: &[Vec<f64>],
    gold: &[u8],
    params: &CrfParams,
) -> Result<(f64, CrfGrads)> {
    if features.is_empty() || features.len() != gold.len() {
        return Err(Error::invalid(
            "crf_loglik_and_grads: sequence must be non-empty with matching labels",
        ));
    }
    let t_len = features.len();
    let scores = unary_scores(features, params);
    let alphas = log_alphas(&scores, params);
    let betas = log_betas(&scores, params);
    let last = alphas.last().unwrap();
    let log_z = logsumexp2(last[0], last[1]);

    let mut gold_score = 0.0;
    for t in 0..t_len {
        gold_score += scores[t][gold[t] as usize];
        if t > 0 {
            gold_score += params.trans[gold[t - 1] as usize][gold[t] as usize];
        }
    }
    let loglik = gold_score - log_z;
    if !loglik.is_finite() {
        return Err(Error::NonFinite("crf log-likelihood is not finite".into()));
    }

    let mut grads = CrfGrads::zeros(params.unary.cols);
    for t in 0..t_len {
        let marg = [
            (alphas[t][0] + betas[t][0] - log_z).exp(),
            (alphas[t][1] + betas[t][1] - log_z).exp(),
        ];
        for y in 0..2 {
            let coeff = (gold[t] as usize == y) as u8 as f64 - marg[y];
            if coeff != 0.0 {
                let row = grads.unary.row_mut(y);
                for (o, f) in row.iter_mut().zip(&features[t]) {
                    *o += coeff * f;
                }
            }
        }
    }
    for t in 1..t_len {
        for prev in 0..2 {
            for next in 0..2 {
                let pair = (alphas[t - 1][prev] + params.trans[prev][next] + scores[t][next]
                    + betas[t][next]
                    - log_z)
                    .exp();
                let observed = (gold[t - 1] as usize == prev && gold[t] as usize == next) as u8 as f64;
                grads.trans[prev][next] += observed - pair;
            }
        }
    }
    Ok((loglik, grads))
}

/// Max-probability labeling; ties resolve toward label 0.
pub fn crf_decode(features: &[Vec<f64>], params: &CrfParams) -> Vec<u8> {
    if features.is_empty() {
        return Vec::new();
    }
    let scores = unary_scores(features, params);
    let t_len = scores.len();
    let mut best = vec![[0.0f64; 2]; t_len];
    let mut back = vec![[0u8; 2]; t_len];
    best[0] = scores[0];
    for t in 1..t_len {
        for y in 0..2 {
            // label 0 first, strict improvement required: ties keep 0
            let via0 = best[t - 1][0] + params.trans[0][y];
            let via1 = best[t - 1][1] + params.trans[1][y];
            let (prev, score) = if via1 > via0 { (1u8, via1) } else { (0u8, via0) };
            best[t][y] = scores[t][y] + score;
            back[t][y] = prev;
        }
    }
    let mut labels = vec![0u8; t_len];
    labels[t_len - 1] = if best[t_len - 1][1] > best[t_len - 1][0] { 1 } else { 0 };
    for t in (1..t_len).rev() {
        labels[t - 1] = back[t][labels[t] as usize];
    }
    labels
}

#[derive(Debug, Clone)]
pub struct CrfEpochRecord {
    pub run: usize,
    pub epoch: usize,
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone)]
pub struct CrfRunSummary {
    pub run: usize,
    pub best_epoch: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub params: CrfParams,
}

#[derive(Debug, Clone)]
pub struct CrfTrainOutput {
    pub epoch_log: Vec<CrfEpochRecord>,
    pub runs: Vec<CrfRunSummary>,
}

impl CrfTrainOutput {
    pub fn best_run(&self) -> &CrfRunSummary {
        self.runs
            .iter()
            .max_by(|a, b| a.f1.partial_cmp(&b.f1).unwrap())
            .expect("at least one run")
    }
}

pub fn crf_traces(cases: &[CrfCase], params: &CrfParams) -> Result<Vec<PredictionTrace>> {
    cases
        .iter()
        .map(|case| {
            let labels = crf_decode(&case.features, params);
            let marginals = crf_marginals(&case.features, params)?;
            let records = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| TraceRecord {
                    seq_index: i,
                    probability: marginals[i][1],
                    predicted: l,
                    gold: case.gold[i],
                })
                .collect();
            Ok(PredictionTrace {
                case_key: case.key.clone(),
                records,
            })
        })
        .collect()
}

/// Gradient ascent on the L2-regularized log-likelihood with Adam,
/// mirroring the neural training protocol (shuffled mini-batches of cases,
/// best epoch by test f1, several seeded runs).
pub fn train_crf(
    cfg: &CrfConfig,
    train_cases: &[CrfCase],
    test_cases: &[CrfCase],
    epochs: usize,
    batch_cases: usize,
    seed: u64,
    runs: usize,
    adam: &AdamConfig,
) -> Result<CrfTrainOutput> {
    if train_cases.is_empty() {
        return Err(Error::invalid("train_crf: empty training set"));
    }
    let feature_dim = cfg.feature_dim();
    let mut epoch_log = Vec::new();
    let mut run_summaries = Vec::new();

    for run in 0..runs {
        let mut rng =
            ChaCha8Rng::seed_from_u64(crate::nn::derive_run_seed(seed, run));
        // Zero init: the objective is concave, randomness only shuffles.
        let mut params = CrfParams::zeros(feature_dim);
        let mut m_unary = vec![0.0; 2 * feature_dim];
        let mut v_unary = vec![0.0; 2 * feature_dim];
        let mut m_trans = vec![0.0; 4];
        let mut v_trans = vec![0.0; 4];
        let mut step = 0u64;

        let mut order: Vec<usize> = (0..train_cases.len()).collect();
        let mut best: Option<CrfRunSummary> = None;

        for epoch in 1..=epochs {
            order.shuffle(&mut rng);
            let mut nll_sum = 0.0;
            let mut sentences = 0usize;
            for chunk in order.chunks(batch_cases) {
                let batch_sentences: usize =
                    chunk.iter().map(|&i| train_cases[i].gold.len()).sum();
                let mut grad_unary = vec![0.0; 2 * feature_dim];
                let mut grad_trans = vec![0.0; 4];
                for &i in chunk {
                    let case = &train_cases[i];
                    let (loglik, grads) =
                        crf_loglik_and_grads(&case.features, &case.gold, &params)?;
                    nll_sum += -loglik;
                    // minimize mean negative log-likelihood
                    let scale = -1.0 / batch_sentences as f64;
                    for (o, g) in grad_unary.iter_mut().zip(&grads.unary.data) {
                        *o += scale * g;
                    }
                    for p in 0..2 {
                        for n in 0..2 {
                            grad_trans[p * 2 + n] += scale * grads.trans[p][n];
                        }
                    }
                }
                // L2 penalty (lambda/2)*||theta||^2 adds lambda*theta
                for (g, w) in grad_unary.iter_mut().zip(&params.unary.data) {
                    *g += cfg.l2 * w;
                }
                for p in 0..2 {
                    for n in 0..2 {
                        grad_trans[p * 2 + n] += cfg.l2 * params.trans[p][n];
                    }
                }
                step += 1;
                adam_update(&mut params.unary.data, &grad_unary, &mut m_unary, &mut v_unary, step, adam);
                let mut flat = [
                    params.trans[0][0],
                    params.trans[0][1],
                    params.trans[1][0],
                    params.trans[1][1],
                ];
                adam_update(&mut flat, &grad_trans, &mut m_trans, &mut v_trans, step, adam);
                params.trans = [[flat[0], flat[1]], [flat[2], flat[3]]];
                sentences += batch_sentences;
            }
            let loss = nll_sum / sentences.max(1) as f64;

            let traces = crf_traces(test_cases, &params)?;
            let prf = prf_minority(&traces);
            epoch_log.push(CrfEpochRecord {
                run,
                epoch,
                loss,
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
            });
            if best.as_ref().is_none_or(|b| prf.f1 > b.f1) {
                best = Some(CrfRunSummary {
                    run,
                    best_epoch: epoch,
                    precision: prf.precision,
                    recall: prf.recall,
                    f1: prf.f1,
                    params: params.clone(),
                });
            }
        }
        run_summaries.push(best.expect("at least one epoch"));
    }
    Ok(CrfTrainOutput {
        epoch_log,
        runs: run_summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_params(feature_dim: usize, seed: u64) -> CrfParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = CrfParams::zeros(feature_dim);
        for v in &mut params.unary.data {
            *v = rng.random_range(-1.0..1.0);
        }
        for p in 0..2 {
            for n in 0..2 {
                params.trans[p][n] = rng.random_range(-1.0..1.0);
            }
        }
        params
    }

    fn random_features(t_len: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..t_len)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn length_one_zero_params_is_uniform() {
        let params = CrfParams::zeros(3);
        let features = vec![vec![0.5, -0.5, 1.0]];
        let (loglik, _) = crf_loglik_and_grads(&features, &[0], &params).unwrap();
        assert!((loglik - (-std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn marginals_sum_to_one() {
        let params = random_params(4, 3);
        let features = random_features(9, 4, 5);
        for m in crf_marginals(&features, &params).unwrap() {
            assert!((m[0] + m[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_and_backward_partitions_agree() {
        for seed in 0..20 {
            let params = random_params(5, seed);
            let features = random_features(1 + (seed as usize % 10), 5, seed + 100);
            let f = log_partition(&features, &params).unwrap();
            let b = log_partition_backward(&features, &params).unwrap();
            assert!((f - b).abs() < 1e-9, "forward {f} vs backward {b}");
        }
    }

    #[test]
    fn zero_transitions_decode_is_per_position_argmax() {
        let mut params = random_params(3, 9);
        params.trans = [[0.0; 2]; 2];
        let features = random_features(7, 3, 11);
        let labels = crf_decode(&features, &params);
        for (t, f) in features.iter().enumerate() {
            let s0 = dot(params.unary.row(0), f);
            let s1 = dot(params.unary.row(1), f);
            let expect = if s1 > s0 { 1 } else { 0 };
            assert_eq!(labels[t], expect);
        }
    }

    #[test]
    fn zero_params_decode_ties_toward_label_zero() {
        let params = CrfParams::zeros(2);
        let features = random_features(5, 2, 1);
        assert_eq!(crf_decode(&features, &params), vec![0; 5]);
    }

    #[test]
    fn decode_of_empty_sequence_is_empty() {
        let params = CrfParams::zeros(2);
        assert!(crf_decode(&[], &params).is_empty());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let dim = 4;
        let mut params = random_params(dim, 21);
        let features = random_features(6, dim, 22);
        let gold = vec![0, 1, 1, 0, 1, 0];
        let (_, grads) = crf_loglik_and_grads(&features, &gold, &params).unwrap();
        let eps = 1e-6;
        for k in 0..params.unary.data.len() {
            let orig = params.unary.data[k];
            params.unary.data[k] = orig + eps;
            let (up, _) = crf_loglik_and_grads(&features, &gold, &params).unwrap();
            params.unary.data[k] = orig - eps;
            let (down, _) = crf_loglik_and_grads(&features, &gold, &params).unwrap();
            params.unary.data[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            assert!(
                (numeric - grads.unary.data[k]).abs() < 1e-6,
                "unary[{k}]: numeric {numeric} vs analytic {}",
                grads.unary.data[k]
            );
        }
        for p in 0..2 {
            for n in 0..2 {
                let orig = params.trans[p][n];
                params.trans[p][n] = orig + eps;
                let (up, _) = crf_loglik_and_grads(&features, &gold, &params).unwrap();
                params.trans[p][n] = orig - eps;
                let (down, _) = crf_loglik_and_grads(&features, &gold, &params).unwrap();
                params.trans[p][n] = orig;
                let numeric = (up - down) / (2.0 * eps);
                assert!((numeric - grads.trans[p][n]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn training_learns_a_separable_task() {
        // Feature 0 encodes the label; the rest is noise.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let make_case = |key: String, rng: &mut ChaCha8Rng| {
            let t_len = 12;
            let gold: Vec<u8> = (0..t_len).map(|_| rng.random_range(0..2) as u8).collect();
            let features = gold
                .iter()
                .map(|&g| {
                    vec![
                        if g == 1 { 1.0 } else { -1.0 },
                        rng.random_range(-1.0..1.0),
                    ]
                })
                .collect();
            CrfCase { key, features, gold }
        };
        let train_cases: Vec<CrfCase> =
            (0..6).map(|i| make_case(format!("tr:{i}"), &mut rng)).collect();
        let test_cases: Vec<CrfCase> =
            (0..2).map(|i| make_case(format!("te:{i}"), &mut rng)).collect();
        let cfg = CrfConfig {
            window: 1,
            emb_dim: 2,
            multimodal: false,
            visual_dim: 0,
            audio_dim: 0,
            l2: 1e-4,
        };
        let out = train_crf(
            &cfg,
            &train_cases,
            &test_cases,
            40,
            3,
            5,
            1,
            &AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
        )
        .unwrap();
        assert!(out.runs[0].f1 >= 0.95, "crf best f1 {}", out.runs[0].f1);
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = random_params(6, 44);
        let tensors = params.to_tensors();
        let back = CrfParams::from_tensors(&tensors, 6).unwrap();
        assert_eq!(params, back);
    }
}
