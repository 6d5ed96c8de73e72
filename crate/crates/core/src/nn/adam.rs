//! Adam with bias correction. One step per mini-batch; moments share the
//! parameter shapes.

use crate::nn::model::ParamSet;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamMoments {
    pub m: ParamSet,
    pub v: ParamSet,
    pub step: u64,
}

impl AdamMoments {
    pub fn new(like: &ParamSet, cfg: &crate::nn::model::ModelConfig) -> Self {
        AdamMoments {
            m: like.zeros_like(cfg),
            v: like.zeros_like(cfg),
            step: 0,
        }
    }
}

/// In-place update of one tensor. `step` is 1-based.
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let b1 = cfg.beta1;
    let b2 = cfg.beta2;
    let correction1 = 1.0 - b1.powi(step as i32);
    let correction2 = 1.0 - b2.powi(step as i32);
    for k in 0..param.len() {
        m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
        v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
        let m_hat = m[k] / correction1;
        let v_hat = v[k] / correction2;
        param[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One optimizer step over every tensor of the model.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, moments: &mut AdamMoments, cfg: &AdamConfig) {
    moments.step += 1;
    let step = moments.step;
    let mut p = params.tensors_mut();
    let g = grads.tensors();
    let mut m = moments.m.tensors_mut();
    let mut v = moments.v.tensors_mut();
    debug_assert_eq!(p.len(), g.len());
    for i in 0..p.len() {
        adam_update(p[i].2, g[i].2, m[i].2, v[i].2, step, cfg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{HeadKind, ModelConfig, ParamSet};

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 3,
            emb_dim: 2,
            max_tokens: 3,
            conv_widths: vec![2],
            conv_channels: 2,
            visual_dim: 2,
            audio_dim: 2,
            fusion_dim: 3,
            hidden_dim: 2,
            dropout: 0.0,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let cfg = tiny_cfg();
        let mut params = ParamSet::zeros(&cfg, HeadKind::Lstm);
        params.front.fusion_b[0] = 1.5;
        let grads = params.zeros_like(&cfg);
        let mut moments = AdamMoments::new(&params, &cfg);
        let before = params.clone();
        adam_step(&mut params, &grads, &mut moments, &AdamConfig::default());
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = tiny_cfg();
        let mut params = ParamSet::zeros(&cfg, HeadKind::Lstm);
        let mut grads = params.zeros_like(&cfg);
        for (_, _, t) in grads.tensors_mut() {
            t.fill(0.25); // constant nonzero gradient
        }
        let mut moments = AdamMoments::new(&params, &cfg);
        let acfg = AdamConfig::default();
        adam_step(&mut params, &grads, &mut moments, &acfg);
        // Bias-corrected first step: update ~= lr * sign(g).
        for (_, _, t) in params.tensors() {
            for &v in t {
                assert!((v + acfg.learning_rate).abs() < 1e-6, "got {v}");
            }
        }
    }

    #[test]
    fn default_learning_rate_is_the_reference_value() {
        assert_eq!(AdamConfig::default().learning_rate, 0.001);
        assert_eq!(AdamConfig::default().beta1, 0.9);
        assert_eq!(AdamConfig::default().beta2, 0.999);
        assert_eq!(AdamConfig::default().epsilon, 1e-8);
    }
}
