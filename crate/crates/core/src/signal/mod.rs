//! Per-sentence feature extraction: acoustic MFCC vectors, visual vectors
//! from a precomputed frame-feature store, and padded token-id inputs.

mod features;
mod mfcc;
mod vocab;
mod wav;

pub use features::{
    build_bundle, center_time, read_cache, sentence_audio_feature, sentence_audio_feature_from_frames,
    write_cache, CacheRecord, FeatureBundle, FeatureDims, VisualStore,
};
pub use mfcc::{frame_center_ms, mfcc_frames, MfccConfig};
pub use vocab::{
    build_vocab, load_embedding_file, load_vocab, save_vocab, Vocab, PAD_ID, UNK_ID,
};
pub use wav::{load_wav, resample_linear, write_wav, AudioTrack};
