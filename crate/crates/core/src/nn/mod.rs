//! The trainable model: convolutional sentence encoder, modality fusion,
//! one-layer LSTM with softmax output, reverse-mode gradients, Adam, and
//! the training loop. The MLP baseline shares the front end and the loop.

pub mod adam;
pub mod checkpoint;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, adam_update, AdamConfig, AdamMoments};
pub use checkpoint::{load_checkpoint, save_checkpoint, NamedTensor, CHECKPOINT_MAGIC};
pub use model::{
    encode_sentence, fuse, loss_and_grads, lstm_step, predict_sequence, Head, HeadKind, LstmHead,
    LstmState, MlpHead, Mode, Model, ModelConfig, ParamSet,
};
pub use train::{
    derive_run_seed, evaluate, model_from_tensors, model_to_tensors, train, CaseData, EpochRecord,
    RunSummary, TrainConfig, TrainOutput,
};
