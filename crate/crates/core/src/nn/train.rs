//! Mini-batch training loop: shuffle cases, accumulate gradients per batch,
//! one Adam step per batch, evaluate minority-class f1 after each epoch and
//! retain the best checkpoint per run.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{prf_minority, PredictionTrace, TraceRecord};
use crate::nn::adam::{adam_step, AdamConfig, AdamMoments};
use crate::nn::checkpoint::NamedTensor;
use crate::nn::model::{loss_and_grads, predict_sequence, HeadKind, Mode, Model, ModelConfig, ParamSet};
use crate::signal::FeatureBundle;

/// One case's ordered sentence bundles, keyed `episode:case`.
#[derive(Debug, Clone)]
pub struct CaseData {
    pub key: String,
    pub bundles: Vec<FeatureBundle>,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_cases: usize,
    pub seed: u64,
    pub runs: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_cases: 6,
            seed: 1,
            runs: 5,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub run: usize,
    pub epoch: usize,
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run: usize,
    pub best_epoch: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub params: ParamSet,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub epoch_log: Vec<EpochRecord>,
    pub runs: Vec<RunSummary>,
}

impl TrainOutput {
    pub fn mean_f1(&self) -> f64 {
        self.runs.iter().map(|r| r.f1).sum::<f64>() / self.runs.len() as f64
    }

    /// The run with the highest best-epoch f1 (earliest run on ties).
    pub fn best_run(&self) -> &RunSummary {
        self.runs
            .iter()
            .max_by(|a, b| a.f1.partial_cmp(&b.f1).unwrap())
            .expect("at least one run")
    }
}

pub fn derive_run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Evaluates a frozen model on cases, thresholding at p >= 0.5.
pub fn evaluate(model: &Model, cases: &[CaseData]) -> Result<Vec<PredictionTrace>> {
    cases
        .iter()
        .map(|case| {
            let probs = predict_sequence(&case.bundles, model, Mode::Eval, 0)?;
            let records = probs
                .iter()
                .zip(&case.bundles)
                .enumerate()
                .map(|(i, (&p, b))| TraceRecord {
                    seq_index: i,
                    probability: p,
                    predicted: (p >= 0.5) as u8,
                    gold: b.gold_label,
                })
                .collect();
            Ok(PredictionTrace {
                case_key: case.key.clone(),
                records,
            })
        })
        .collect()
}

/// Trains `tcfg.runs` independently seeded models and returns per-epoch
/// logs plus each run's best checkpoint by test f1.
pub fn train(
    cfg: &ModelConfig,
    kind: HeadKind,
    embedding_init: Option<&[f64]>,
    train_cases: &[CaseData],
    test_cases: &[CaseData],
    tcfg: &TrainConfig,
) -> Result<TrainOutput> {
    if train_cases.is_empty() {
        return Err(Error::invalid("train: empty training set"));
    }
    if tcfg.batch_cases == 0 || tcfg.epochs == 0 || tcfg.runs == 0 {
        return Err(Error::config("train: epochs, batch_cases and runs must be positive"));
    }

    let mut epoch_log = Vec::new();
    let mut runs = Vec::new();

    for run in 0..tcfg.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_run_seed(tcfg.seed, run));
        let mut model = Model::init(cfg.clone(), kind, embedding_init, &mut rng)?;
        let mut moments = AdamMoments::new(&model.params, cfg);
        let mut grads = model.params.zeros_like(cfg);

        let mut order: Vec<usize> = (0..train_cases.len()).collect();
        let mut best: Option<RunSummary> = None;

        for epoch in 1..=tcfg.epochs {
            order.shuffle(&mut rng);
            let mut loss_weighted = 0.0;
            let mut sentences = 0usize;
            for chunk in order.chunks(tcfg.batch_cases) {
                let batch: Vec<&Vec<FeatureBundle>> =
                    chunk.iter().map(|&i| &train_cases[i].bundles).collect();
                let batch_sentences: usize = batch.iter().map(|b| b.len()).sum();
                let loss = loss_and_grads(&model, &batch, Mode::Train, &mut rng, &mut grads)
                    .map_err(|e| match e {
                        Error::NonFinite(msg) => {
                            let keys: Vec<&str> =
                                chunk.iter().map(|&i| train_cases[i].key.as_str()).collect();
                            Error::NonFinite(format!("{msg} (cases {keys:?})"))
                        }
                        other => other,
                    })?;
                adam_step(&mut model.params, &grads, &mut moments, &tcfg.adam);
                loss_weighted += loss * batch_sentences as f64;
                sentences += batch_sentences;
            }
            let epoch_loss = loss_weighted / sentences.max(1) as f64;

            let traces = evaluate(&model, test_cases)?;
            let prf = prf_minority(&traces);
            epoch_log.push(EpochRecord {
                run,
                epoch,
                loss: epoch_loss,
                precision: prf.precision,
                recall: prf.recall,
                f1: prf.f1,
            });
            let improved = best.as_ref().is_none_or(|b| prf.f1 > b.f1);
            if improved {
                best = Some(RunSummary {
                    run,
                    best_epoch: epoch,
                    precision: prf.precision,
                    recall: prf.recall,
                    f1: prf.f1,
                    params: model.params.clone(),
                });
            }
        }
        runs.push(best.expect("at least one epoch"));
    }

    Ok(TrainOutput { epoch_log, runs })
}

/// Model tensors in checkpoint form.
pub fn model_to_tensors(params: &ParamSet) -> Vec<NamedTensor> {
    params
        .tensors()
        .into_iter()
        .map(|(name, dims, data)| NamedTensor {
            name,
            dims,
            data: data.to_vec(),
        })
        .collect()
}

/// Rebuilds a parameter set from named tensors, checking every shape.
pub fn model_from_tensors(
    cfg: &ModelConfig,
    kind: HeadKind,
    tensors: &[NamedTensor],
) -> Result<ParamSet> {
    let mut params = ParamSet::zeros(cfg, kind);
    let mut slots = params.tensors_mut();
    if slots.len() != tensors.len() {
        return Err(Error::format(format!(
            "checkpoint has {} tensors, model expects {}",
            tensors.len(),
            slots.len()
        )));
    }
    for slot in slots.iter_mut() {
        let tensor = tensors
            .iter()
            .find(|t| t.name == slot.0)
            .ok_or_else(|| Error::format(format!("checkpoint is missing tensor {:?}", slot.0)))?;
        if tensor.dims != slot.1 {
            return Err(Error::format(format!(
                "tensor {:?} has dims {:?}, model expects {:?}",
                slot.0, tensor.dims, slot.1
            )));
        }
        slot.2.copy_from_slice(&tensor.data);
    }
    drop(slots);
    Ok(params)
}
