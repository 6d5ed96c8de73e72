//! Run configuration: flat `key = value` text files with `#` comments.
//! Unknown keys are rejected; command-line `--set key=value` pairs override
//! file values. `echo()` renders the fully resolved configuration, which is
//! reparseable and is embedded in manifests and checkpoints.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, HeadKind, ModelConfig, TrainConfig};
use crate::signal::{FeatureDims, MfccConfig};
use crate::synthgen::{Channels, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lstm,
    Mlp,
    Crf,
    Pro,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Mlp => "mlp",
            ModelKind::Crf => "crf",
            ModelKind::Pro => "pro",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Test,
    HeldOut,
    Train,
    All,
}

impl EvalSplit {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalSplit::Test => "test",
            EvalSplit::HeldOut => "heldout",
            EvalSplit::Train => "train",
            EvalSplit::All => "all",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelKind,
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    pub batch_cases: usize,
    pub dropout: f64,
    pub runs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub use_text: bool,
    pub use_visual: bool,
    pub use_audio: bool,
    pub emb_dim: usize,
    pub max_tokens: usize,
    pub conv_channels: usize,
    pub conv_widths: Vec<usize>,
    pub fusion_dim: usize,
    pub hidden_dim: usize,
    pub crf_window: usize,
    pub crf_l2: f64,
    pub crf_multimodal: bool,
    pub sample_rate: u32,
    pub mfcc_window_ms: u32,
    pub mfcc_hop_ms: u32,
    pub fft_size: usize,
    pub mel_filters: usize,
    pub mfcc_coeffs: usize,
    pub mfcc_log_floor: f64,
    pub preemphasis: f64,
    pub skip_penalty: f64,
    pub visual_dim: usize,
    pub held_out: usize,
    pub folds: usize,
    pub test_per_fold: usize,
    pub fold: usize,
    pub eval_split: EvalSplit,
    pub episode_start_ms: i64,
    pub episode_end_ms: i64,
    pub corpus: String,
    pub embeddings: String,
    pub audio_dir: String,
    pub visual_store: String,
    pub cache_dir: String,
    pub checkpoint: String,
    pub output_dir: String,
    pub screenplay: String,
    pub srt: String,
    pub episode_id: String,
    pub lexicon: String,
    pub traces: String,
    pub traces_heldout: String,
    pub synth_episodes: usize,
    pub synth_cases_per_episode: usize,
    pub synth_sentences: (usize, usize),
    pub synth_characters: (usize, usize),
    pub synth_rate: f64,
    pub synth_channels: Channels,
    pub synth_lag: usize,
    pub synth_vocab: usize,
    pub synth_pronoun_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            model: ModelKind::Lstm,
            learning_rate: None,
            epochs: 100,
            batch_cases: 6,
            dropout: 0.5,
            runs: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            use_text: true,
            use_visual: true,
            use_audio: true,
            emb_dim: 50,
            max_tokens: 60,
            conv_channels: 75,
            conv_widths: vec![3, 4, 5],
            fusion_dim: 300,
            hidden_dim: 128,
            crf_window: 20,
            crf_l2: 1e-4,
            crf_multimodal: false,
            sample_rate: 16000,
            mfcc_window_ms: 25,
            mfcc_hop_ms: 5,
            fft_size: 512,
            mel_filters: 26,
            mfcc_coeffs: 13,
            mfcc_log_floor: 1e-10,
            preemphasis: 0.97,
            skip_penalty: 0.5,
            visual_dim: 1536,
            held_out: 6,
            folds: 5,
            test_per_fold: 6,
            fold: 0,
            eval_split: EvalSplit::Test,
            episode_start_ms: 0,
            episode_end_ms: 0,
            corpus: String::new(),
            embeddings: String::new(),
            audio_dir: String::new(),
            visual_store: String::new(),
            cache_dir: String::new(),
            checkpoint: String::new(),
            output_dir: String::new(),
            screenplay: String::new(),
            srt: String::new(),
            episode_id: String::new(),
            lexicon: String::new(),
            traces: String::new(),
            traces_heldout: String::new(),
            synth_episodes: 20,
            synth_cases_per_episode: 1,
            synth_sentences: (40, 60),
            synth_characters: (4, 6),
            synth_rate: 0.2,
            synth_channels: Channels::all(),
            synth_lag: 0,
            synth_vocab: 40,
            synth_pronoun_rate: 0.8,
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::config(format!("bad value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("bad boolean for {key}: {value:?}"))),
    }
}

fn parse_pair(key: &str, value: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::config(format!("{key} expects \"min,max\", got {value:?}")));
    }
    Ok((parse_as(key, parts[0])?, parse_as(key, parts[1])?))
}

fn parse_channels(key: &str, value: &str) -> Result<Channels> {
    let mut channels = Channels {
        text: false,
        visual: false,
        audio: false,
    };
    if value.trim() == "none" {
        return Ok(channels);
    }
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "text" => channels.text = true,
            "visual" => channels.visual = true,
            "audio" => channels.audio = true,
            _ => return Err(Error::config(format!("bad channel in {key}: {part:?}"))),
        }
    }
    Ok(channels)
}

fn channels_str(c: &Channels) -> String {
    let mut parts = Vec::new();
    if c.text {
        parts.push("text");
    }
    if c.visual {
        parts.push("visual");
    }
    if c.audio {
        parts.push("audio");
    }
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(",")
    }
}

impl RunConfig {
    /// Applies one key/value pair; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_as(key, value)?,
            "model" => {
                self.model = match value {
                    "lstm" => ModelKind::Lstm,
                    "mlp" => ModelKind::Mlp,
                    "crf" => ModelKind::Crf,
                    "pro" => ModelKind::Pro,
                    _ => return Err(Error::config(format!("unknown model {value:?}"))),
                }
            }
            "learning_rate" => self.learning_rate = Some(parse_as(key, value)?),
            "epochs" => self.epochs = parse_as(key, value)?,
            "batch_cases" => self.batch_cases = parse_as(key, value)?,
            "dropout" => self.dropout = parse_as(key, value)?,
            "runs" => self.runs = parse_as(key, value)?,
            "beta1" => self.beta1 = parse_as(key, value)?,
            "beta2" => self.beta2 = parse_as(key, value)?,
            "epsilon" => self.epsilon = parse_as(key, value)?,
            "use_text" => self.use_text = parse_bool(key, value)?,
            "use_visual" => self.use_visual = parse_bool(key, value)?,
            "use_audio" => self.use_audio = parse_bool(key, value)?,
            "emb_dim" => self.emb_dim = parse_as(key, value)?,
            "max_tokens" => self.max_tokens = parse_as(key, value)?,
            "conv_channels" => self.conv_channels = parse_as(key, value)?,
            "conv_widths" => {
                self.conv_widths = value
                    .split(',')
                    .map(|w| parse_as(key, w.trim()))
                    .collect::<Result<_>>()?;
                if self.conv_widths.is_empty() {
                    return Err(Error::config("conv_widths must not be empty"));
                }
            }
            "fusion_dim" => self.fusion_dim = parse_as(key, value)?,
            "hidden_dim" => self.hidden_dim = parse_as(key, value)?,
            "crf_window" => self.crf_window = parse_as(key, value)?,
            "crf_l2" => self.crf_l2 = parse_as(key, value)?,
            "crf_multimodal" => self.crf_multimodal = parse_bool(key, value)?,
            "sample_rate" => self.sample_rate = parse_as(key, value)?,
            "mfcc_window_ms" => self.mfcc_window_ms = parse_as(key, value)?,
            "mfcc_hop_ms" => self.mfcc_hop_ms = parse_as(key, value)?,
            "fft_size" => self.fft_size = parse_as(key, value)?,
            "mel_filters" => self.mel_filters = parse_as(key, value)?,
            "mfcc_coeffs" => self.mfcc_coeffs = parse_as(key, value)?,
            "mfcc_log_floor" => self.mfcc_log_floor = parse_as(key, value)?,
            "preemphasis" => self.preemphasis = parse_as(key, value)?,
            "skip_penalty" => self.skip_penalty = parse_as(key, value)?,
            "visual_dim" => self.visual_dim = parse_as(key, value)?,
            "held_out" => self.held_out = parse_as(key, value)?,
            "folds" => self.folds = parse_as(key, value)?,
            "test_per_fold" => self.test_per_fold = parse_as(key, value)?,
            "fold" => self.fold = parse_as(key, value)?,
            "eval_split" => {
                self.eval_split = match value {
                    "test" => EvalSplit::Test,
                    "heldout" => EvalSplit::HeldOut,
                    "train" => EvalSplit::Train,
                    "all" => EvalSplit::All,
                    _ => return Err(Error::config(format!("unknown eval_split {value:?}"))),
                }
            }
            "episode_start_ms" => self.episode_start_ms = parse_as(key, value)?,
            "episode_end_ms" => self.episode_end_ms = parse_as(key, value)?,
            "corpus" => self.corpus = value.into(),
            "embeddings" => self.embeddings = value.into(),
            "audio_dir" => self.audio_dir = value.into(),
            "visual_store" => self.visual_store = value.into(),
            "cache_dir" => self.cache_dir = value.into(),
            "checkpoint" => self.checkpoint = value.into(),
            "output_dir" => self.output_dir = value.into(),
            "screenplay" => self.screenplay = value.into(),
            "srt" => self.srt = value.into(),
            "episode_id" => self.episode_id = value.into(),
            "lexicon" => self.lexicon = value.into(),
            "traces" => self.traces = value.into(),
            "traces_heldout" => self.traces_heldout = value.into(),
            "synth_episodes" => self.synth_episodes = parse_as(key, value)?,
            "synth_cases_per_episode" => self.synth_cases_per_episode = parse_as(key, value)?,
            "synth_sentences" => self.synth_sentences = parse_pair(key, value)?,
            "synth_characters" => self.synth_characters = parse_pair(key, value)?,
            "synth_rate" => self.synth_rate = parse_as(key, value)?,
            "synth_channels" => self.synth_channels = parse_channels(key, value)?,
            "synth_lag" => self.synth_lag = parse_as(key, value)?,
            "synth_vocab" => self.synth_vocab = parse_as(key, value)?,
            "synth_pronoun_rate" => self.synth_pronoun_rate = parse_as(key, value)?,
            _ => return Err(Error::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a config file over the defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        config.apply_file(path)?;
        Ok(config)
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        for (no, raw) in content.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{}:{}: expected key = value", path.display(), no + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("{}:{}: {e}", path.display(), no + 1)))?;
        }
        Ok(())
    }

    /// `key=value` overrides from the command line, applied in order.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::config(format!("--set expects key=value, got {pair:?}")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn effective_learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(match self.model {
            ModelKind::Mlp => 1e-4,
            _ => 1e-3,
        })
    }

    pub fn audio_dim(&self) -> usize {
        5 * self.mfcc_coeffs
    }

    /// Fully resolved configuration, sorted by key; reparseable.
    pub fn echo(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("model".into(), self.model.as_str().into()),
            ("learning_rate".into(), self.effective_learning_rate().to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("batch_cases".into(), self.batch_cases.to_string()),
            ("dropout".into(), self.dropout.to_string()),
            ("runs".into(), self.runs.to_string()),
            ("beta1".into(), self.beta1.to_string()),
            ("beta2".into(), self.beta2.to_string()),
            ("epsilon".into(), self.epsilon.to_string()),
            ("use_text".into(), self.use_text.to_string()),
            ("use_visual".into(), self.use_visual.to_string()),
            ("use_audio".into(), self.use_audio.to_string()),
            ("emb_dim".into(), self.emb_dim.to_string()),
            ("max_tokens".into(), self.max_tokens.to_string()),
            ("conv_channels".into(), self.conv_channels.to_string()),
            (
                "conv_widths".into(),
                self.conv_widths.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            ),
            ("fusion_dim".into(), self.fusion_dim.to_string()),
            ("hidden_dim".into(), self.hidden_dim.to_string()),
            ("crf_window".into(), self.crf_window.to_string()),
            ("crf_l2".into(), self.crf_l2.to_string()),
            ("crf_multimodal".into(), self.crf_multimodal.to_string()),
            ("sample_rate".into(), self.sample_rate.to_string()),
            ("mfcc_window_ms".into(), self.mfcc_window_ms.to_string()),
            ("mfcc_hop_ms".into(), self.mfcc_hop_ms.to_string()),
            ("fft_size".into(), self.fft_size.to_string()),
            ("mel_filters".into(), self.mel_filters.to_string()),
            ("mfcc_coeffs".into(), self.mfcc_coeffs.to_string()),
            ("mfcc_log_floor".into(), self.mfcc_log_floor.to_string()),
            ("preemphasis".into(), self.preemphasis.to_string()),
            ("skip_penalty".into(), self.skip_penalty.to_string()),
            ("visual_dim".into(), self.visual_dim.to_string()),
            ("held_out".into(), self.held_out.to_string()),
            ("folds".into(), self.folds.to_string()),
            ("test_per_fold".into(), self.test_per_fold.to_string()),
            ("fold".into(), self.fold.to_string()),
            ("eval_split".into(), self.eval_split.as_str().into()),
            ("episode_start_ms".into(), self.episode_start_ms.to_string()),
            ("episode_end_ms".into(), self.episode_end_ms.to_string()),
            ("corpus".into(), self.corpus.clone()),
            ("embeddings".into(), self.embeddings.clone()),
            ("audio_dir".into(), self.audio_dir.clone()),
            ("visual_store".into(), self.visual_store.clone()),
            ("cache_dir".into(), self.cache_dir.clone()),
            ("checkpoint".into(), self.checkpoint.clone()),
            ("output_dir".into(), self.output_dir.clone()),
            ("screenplay".into(), self.screenplay.clone()),
            ("srt".into(), self.srt.clone()),
            ("episode_id".into(), self.episode_id.clone()),
            ("lexicon".into(), self.lexicon.clone()),
            ("traces".into(), self.traces.clone()),
            ("traces_heldout".into(), self.traces_heldout.clone()),
            ("synth_episodes".into(), self.synth_episodes.to_string()),
            ("synth_cases_per_episode".into(), self.synth_cases_per_episode.to_string()),
            (
                "synth_sentences".into(),
                format!("{},{}", self.synth_sentences.0, self.synth_sentences.1),
            ),
            (
                "synth_characters".into(),
                format!("{},{}", self.synth_characters.0, self.synth_characters.1),
            ),
            ("synth_rate".into(), self.synth_rate.to_string()),
            ("synth_channels".into(), channels_str(&self.synth_channels)),
            ("synth_lag".into(), self.synth_lag.to_string()),
            ("synth_vocab".into(), self.synth_vocab.to_string()),
            ("synth_pronoun_rate".into(), self.synth_pronoun_rate.to_string()),
        ];
        rows.sort();
        let mut out = String::new();
        for (key, value) in rows {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn to_model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            emb_dim: self.emb_dim,
            max_tokens: self.max_tokens,
            conv_widths: self.conv_widths.clone(),
            conv_channels: self.conv_channels,
            visual_dim: self.visual_dim,
            audio_dim: self.audio_dim(),
            fusion_dim: self.fusion_dim,
            hidden_dim: self.hidden_dim,
            use_text: self.use_text,
            use_visual: self.use_visual,
            use_audio: self.use_audio,
            dropout: self.dropout,
        }
    }

    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_cases: self.batch_cases,
            seed: self.seed,
            runs: self.runs,
            adam: AdamConfig {
                learning_rate: self.effective_learning_rate(),
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
        }
    }

    pub fn to_mfcc_config(&self) -> MfccConfig {
        MfccConfig {
            sample_rate: self.sample_rate,
            window_ms: self.mfcc_window_ms,
            hop_ms: self.mfcc_hop_ms,
            fft_size: self.fft_size,
            mel_filters: self.mel_filters,
            cepstra: self.mfcc_coeffs,
            preemphasis: self.preemphasis,
            log_floor: self.mfcc_log_floor,
        }
    }

    pub fn to_feature_dims(&self) -> FeatureDims {
        FeatureDims {
            max_tokens: self.max_tokens,
            visual_dim: self.visual_dim,
            audio_dim: self.audio_dim(),
        }
    }

    pub fn to_synth_spec(&self) -> SynthSpec {
        SynthSpec {
            n_episodes: self.synth_episodes,
            cases_per_episode: self.synth_cases_per_episode,
            sentences_per_case: self.synth_sentences,
            n_characters: self.synth_characters,
            mention_rate: self.synth_rate,
            channels: self.synth_channels,
            history_lag: self.synth_lag,
            vocab_size: self.synth_vocab,
            pronoun_rate: self.synth_pronoun_rate,
            visual_dim: self.visual_dim,
            seed: self.seed,
        }
    }

    pub fn head_kind(&self) -> Option<HeadKind> {
        match self.model {
            ModelKind::Lstm => Some(HeadKind::Lstm),
            ModelKind::Mlp => Some(HeadKind::Mlp),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_protocol() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.epochs, 100);
        assert_eq!(cfg.batch_cases, 6);
        assert_eq!(cfg.runs, 5);
        assert_eq!(cfg.dropout, 0.5);
        assert_eq!(cfg.effective_learning_rate(), 1e-3);
        assert_eq!(cfg.hidden_dim, 128);
        assert_eq!(cfg.fusion_dim, 300);
        assert_eq!(cfg.conv_widths, vec![3, 4, 5]);
        assert_eq!(cfg.conv_channels, 75);
        assert_eq!(cfg.audio_dim(), 65);
        let mut mlp = RunConfig::default();
        mlp.set("model", "mlp").unwrap();
        assert_eq!(mlp.effective_learning_rate(), 1e-4);
    }

    #[test]
    fn misspelled_keys_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("learing_rate", "0.01").is_err());
        assert!(cfg.set("learning_rate", "0.01").is_ok());
    }

    #[test]
    fn file_parsing_with_comments_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        std::fs::write(&path, "# comment\nseed = 9\nmodel = mlp # trailing\n\nconv_widths = 2, 3\n").unwrap();
        let mut cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.model, ModelKind::Mlp);
        assert_eq!(cfg.conv_widths, vec![2, 3]);
        cfg.apply_overrides(&["seed=11".into(), "synth_channels=text,audio".into()]).unwrap();
        assert_eq!(cfg.seed, 11);
        assert!(cfg.synth_channels.text && cfg.synth_channels.audio && !cfg.synth_channels.visual);
        assert!(cfg.apply_overrides(&["nope=1".into()]).is_err());
    }

    #[test]
    fn echo_is_reparseable_and_resolved() {
        let mut cfg = RunConfig::default();
        cfg.set("model", "mlp").unwrap();
        cfg.set("synth_sentences", "10,20").unwrap();
        let echo = cfg.echo();
        assert!(echo.contains("learning_rate = 0.0001"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("echo.cfg");
        std::fs::write(&path, &echo).unwrap();
        let back = RunConfig::load(&path).unwrap();
        assert_eq!(back.echo(), echo);
    }
}
