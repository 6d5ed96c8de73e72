//! Per-sentence MLP baseline. It reuses the neural front end (sentence
//! convolution and modality fusion) with two ReLU hidden layers and a
//! softmax output; predictions are independent across positions. Training
//! goes through the shared loop in `nn::train` with the MLP head.

use crate::error::Result;
use crate::nn::model::{predict_sequence, Mode, Model};
use crate::signal::FeatureBundle;

/// Probability of the positive class for one sentence. The model must
/// carry an MLP head; position independence makes a single-bundle call
/// equivalent to a full-sequence pass.
pub fn mlp_predict(bundle: &FeatureBundle, model: &Model, mode: Mode, seed: u64) -> Result<f64> {
    let probs = predict_sequence(std::slice::from_ref(bundle), model, mode, seed)?;
    Ok(probs[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{HeadKind, ModelConfig, ParamSet};

    #[test]
    fn zero_weights_give_half() {
        let cfg = ModelConfig {
            vocab_size: 4,
            emb_dim: 3,
            max_tokens: 4,
            conv_widths: vec![2],
            conv_channels: 2,
            visual_dim: 2,
            audio_dim: 2,
            fusion_dim: 3,
            hidden_dim: 4,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let model = Model {
            cfg: cfg.clone(),
            params: ParamSet::zeros(&cfg, HeadKind::Mlp),
        };
        let bundle = FeatureBundle {
            token_ids: vec![2, 3, 0, 0],
            token_mask: vec![true, true, false, false],
            visual: vec![0.3, -0.3],
            audio: vec![0.1, 0.9],
            gold_label: 0,
        };
        assert!((mlp_predict(&bundle, &model, Mode::Eval, 0).unwrap() - 0.5).abs() < 1e-12);
    }
}
