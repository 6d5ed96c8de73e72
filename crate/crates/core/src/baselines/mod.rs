//! The three comparison systems: the pronoun rule, the per-sentence MLP,
//! and the linear-chain CRF.

pub mod crf;
pub mod mlp;
pub mod pro;

pub use crf::{
    crf_decode, crf_features, crf_loglik_and_grads, crf_marginals, crf_traces, train_crf, CrfCase,
    CrfConfig, CrfParams,
};
pub use mlp::mlp_predict;
pub use pro::{default_lexicon, load_lexicon, pro_label, PRONOUNS};
