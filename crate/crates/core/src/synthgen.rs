//! Deterministic generator of synthetic multi-case episodes with
//! controllable textual/visual/acoustic signal and history dependence.
//!
//! Each case designates one perpetrator among its characters. A sentence is
//! "armed" with probability tuned to hit the target mention rate; channel
//! signals (a trigger token, an 880 Hz tone instead of 440 Hz, a shifted
//! visual distribution) attach to armed sentences, and the sentence
//! `history_lag` positions later mentions the perpetrator (gold label 1).
//! With lag 0 the armed sentence is the labeled one, so every channel
//! correlates directly with the label; with lag k > 0 the current
//! sentence's features are independent of its own label, which makes the
//! task unlearnable for memoryless models beyond the base rate.
//!
//! The generator writes exactly the formats the real pipeline reads:
//! interchange JSON lines, one 16 kHz WAV and one visual store per episode,
//! an embedding file covering the synthetic vocabulary, and a `truth.json`
//! with the generative parameters for Bayes-rate oracles.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines::pro::PRONOUNS;
use crate::corpus::{
    derive_sentence_label, validate_units, CrimeType, SentenceKind, SentenceUnit, TokenLabel,
};
use crate::error::{Error, Result};
use crate::signal::write_wav;

pub const TRIGGER_TOKEN: &str = "klaxon";
pub const TONE_MS: usize = 200;
pub const SAMPLE_RATE: u32 = 16000;
const TONE_PLAIN_HZ: f64 = 440.0;
const TONE_ARMED_HZ: f64 = 880.0;
const NAME_POOL: [&str; 16] = [
    "alice", "ben", "carla", "derek", "elena", "felix", "grace", "hassan", "ines", "jonas",
    "kira", "liam", "mona", "nadia", "oscar", "priya",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channels {
    pub text: bool,
    pub visual: bool,
    pub audio: bool,
}

impl Channels {
    pub fn all() -> Self {
        Channels {
            text: true,
            visual: true,
            audio: true,
        }
    }

    pub fn any(&self) -> bool {
        self.text || self.visual || self.audio
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_episodes: usize,
    pub cases_per_episode: usize,
    pub sentences_per_case: (usize, usize),
    pub n_characters: (usize, usize),
    pub mention_rate: f64,
    pub channels: Channels,
    pub history_lag: usize,
    pub vocab_size: usize,
    pub pronoun_rate: f64,
    pub visual_dim: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_episodes: 20,
            cases_per_episode: 1,
            sentences_per_case: (40, 60),
            n_characters: (4, 6),
            mention_rate: 0.2,
            channels: Channels::all(),
            history_lag: 0,
            vocab_size: 40,
            pronoun_rate: 0.8,
            visual_dim: 1536,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_episodes == 0 {
            return Err(Error::invalid("synth: need at least one episode"));
        }
        if !(1..=2).contains(&self.cases_per_episode) {
            return Err(Error::invalid("synth: cases_per_episode must be 1 or 2"));
        }
        if !(0.0 < self.mention_rate && self.mention_rate < 1.0) {
            return Err(Error::invalid("synth: mention_rate must lie in (0, 1)"));
        }
        let (min_s, max_s) = self.sentences_per_case;
        if min_s == 0 || min_s > max_s {
            return Err(Error::invalid("synth: bad sentences_per_case range"));
        }
        if self.history_lag >= min_s {
            return Err(Error::invalid(
                "synth: history_lag must be smaller than the minimum sentence count",
            ));
        }
        let (min_c, max_c) = self.n_characters;
        if min_c < 2 || min_c > max_c {
            return Err(Error::invalid("synth: need at least two characters per case"));
        }
        if max_c > NAME_POOL.len() {
            return Err(Error::invalid(format!(
                "synth: at most {} characters per case",
                NAME_POOL.len()
            )));
        }
        // Worst case for arming feasibility is the shortest case.
        let arm = self.mention_rate * min_s as f64 / (min_s - self.history_lag) as f64;
        if arm > 1.0 {
            return Err(Error::invalid(format!(
                "synth: mention rate {} unreachable with lag {} and {min_s} sentences",
                self.mention_rate, self.history_lag
            )));
        }
        if self.vocab_size == 0 {
            return Err(Error::invalid("synth: vocab_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.pronoun_rate) {
            return Err(Error::invalid("synth: pronoun_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthCaseTruth {
    pub episode_id: String,
    pub case_id: u32,
    pub perpetrator: String,
    pub crime_type: CrimeType,
    pub n_sentences: usize,
    pub n_positives: usize,
}

/// Generative parameters persisted beside the dataset; the Bayes-rate
/// oracle consumes this file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub total_sentences: usize,
    pub total_positives: usize,
    pub cases: Vec<SynthCaseTruth>,
}

struct GenSentence {
    armed: bool,
    label: bool,
    kind: SentenceKind,
    speaker: Option<String>,
    tokens: Vec<String>,
    token_labels: Vec<TokenLabel>,
    case_id: u32,
}

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((episode as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn gen_case(
    spec: &SynthSpec,
    case_id: u32,
    rng: &mut ChaCha8Rng,
) -> (Vec<GenSentence>, String, CrimeType) {
    let (min_s, max_s) = spec.sentences_per_case;
    let t_len = rng.random_range(min_s..=max_s);
    let (min_c, max_c) = spec.n_characters;
    let n_chars = rng.random_range(min_c..=max_c);
    let mut pool: Vec<&str> = NAME_POOL.to_vec();
    pool.shuffle(rng);
    let chars: Vec<String> = pool[..n_chars].iter().map(|s| s.to_string()).collect();
    let perp = chars[rng.random_range(0..n_chars)].clone();

    let crime_type = match rng.random_range(0..100) {
        0..85 => CrimeType::Murder,
        85..91 => CrimeType::Accident,
        91..96 => CrimeType::Suicide,
        _ => CrimeType::Other,
    };

    let lag = spec.history_lag;
    let arm_prob = spec.mention_rate * t_len as f64 / (t_len - lag) as f64;
    let armed: Vec<bool> = (0..t_len)
        .map(|t| t + lag < t_len && rng.random::<f64>() < arm_prob)
        .collect();

    let sentences = (0..t_len)
        .map(|t| {
            let label = t >= lag && armed[t - lag];
            let name = if label {
                perp.clone()
            } else {
                // never the perpetrator: gold labels are mention-derived
                loop {
                    let c = &chars[rng.random_range(0..n_chars)];
                    if *c != perp {
                        break c.clone();
                    }
                }
            };
            let mut tokens: Vec<String> = Vec::new();
            for _ in 0..rng.random_range(3..=6) {
                tokens.push(format!("f{:02}", rng.random_range(0..spec.vocab_size)));
            }
            tokens.push(name.clone());
            if rng.random::<f64>() < spec.pronoun_rate {
                tokens.push(PRONOUNS[rng.random_range(0..PRONOUNS.len())].to_string());
            }
            if armed[t] && spec.channels.text {
                tokens.push(TRIGGER_TOKEN.to_string());
            }
            tokens.shuffle(rng);
            let token_labels: Vec<TokenLabel> = tokens
                .iter()
                .map(|tok| {
                    if *tok == name {
                        if label {
                            TokenLabel::Perpetrator
                        } else {
                            TokenLabel::Other
                        }
                    } else {
                        TokenLabel::None
                    }
                })
                .collect();
            let kind = if rng.random::<f64>() < 0.3 {
                SentenceKind::SceneDescription
            } else {
                SentenceKind::Utterance
            };
            let speaker = match kind {
                SentenceKind::Utterance => {
                    Some(chars[rng.random_range(0..n_chars)].to_uppercase())
                }
                SentenceKind::SceneDescription => None,
            };
            GenSentence {
                armed: armed[t],
                label,
                kind,
                speaker,
                tokens,
                token_labels,
                case_id,
            }
        })
        .collect();
    (sentences, perp, crime_type)
}

/// Interleaves two cases in alternating blocks, also mirroring how real
/// multi-case episodes alternate between storylines.
fn interleave(a: Vec<GenSentence>, b: Vec<GenSentence>, rng: &mut ChaCha8Rng) -> Vec<GenSentence> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut queues = [a.into_iter().peekable(), b.into_iter().peekable()];
    let mut side = 0;
    while queues[0].peek().is_some() || queues[1].peek().is_some() {
        let block = rng.random_range(3..=6);
        for _ in 0..block {
            match queues[side].next() {
                Some(s) => out.push(s),
                None => break,
            }
        }
        side = 1 - side;
    }
    out
}

/// Generates the dataset into `out_dir` and returns the truth record
/// (also persisted as `truth.json`).
pub fn generate(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<SynthTruth> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir.join("audio"))?;
    std::fs::create_dir_all(out_dir.join("visual"))?;

    // Dataset-global visual distributions and embedding vectors.
    let mut global_rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x0123_4567_89AB_CDEF).wrapping_add(17));
    let mean_dist = Normal::new(0.0, 0.25).expect("valid sigma");
    let noise_dist = Normal::new(0.0, 0.1).expect("valid sigma");
    let mean_plain: Vec<f64> = (0..spec.visual_dim)
        .map(|_| mean_dist.sample(&mut global_rng))
        .collect();
    let mean_armed: Vec<f64> = (0..spec.visual_dim)
        .map(|_| mean_dist.sample(&mut global_rng))
        .collect();

    let mut all_units: Vec<SentenceUnit> = Vec::new();
    let mut truth_cases: Vec<SynthCaseTruth> = Vec::new();
    let mut total_positives = 0usize;

    for ep in 0..spec.n_episodes {
        let episode_id = format!("ep{:03}", ep + 1);
        let mut rng = episode_rng(spec.seed, ep);

        let mut case_meta: Vec<(u32, String, CrimeType)> = Vec::new();
        let sentences: Vec<GenSentence> = if spec.cases_per_episode == 1 {
            let (s, perp, crime) = gen_case(spec, 1, &mut rng);
            case_meta.push((1, perp, crime));
            s
        } else {
            let (a, perp_a, crime_a) = gen_case(spec, 1, &mut rng);
            let (b, perp_b, crime_b) = gen_case(spec, 2, &mut rng);
            case_meta.push((1, perp_a, crime_a));
            case_meta.push((2, perp_b, crime_b));
            interleave(a, b, &mut rng)
        };

        // Timeline: one fixed-length slot per sentence.
        let mut armed_slots = Vec::with_capacity(sentences.len());
        for (slot, s) in sentences.iter().enumerate() {
            let gold_label = derive_sentence_label(&s.token_labels);
            debug_assert_eq!(gold_label == 1, s.label);
            total_positives += gold_label as usize;
            armed_slots.push(s.armed);
            all_units.push(SentenceUnit {
                episode_id: episode_id.clone(),
                case_id: Some(s.case_id),
                seq_index: slot,
                kind: s.kind,
                speaker: s.speaker.clone(),
                tokens: s.tokens.clone(),
                token_labels: s.token_labels.clone(),
                gold_label,
                start_ms: Some((slot * TONE_MS) as i64),
                end_ms: Some(((slot + 1) * TONE_MS) as i64),
            });
        }

        for (case_id, perp, crime) in case_meta {
            let case_sentences: Vec<&SentenceUnit> = all_units
                .iter()
                .filter(|u| u.episode_id == episode_id && u.case_id == Some(case_id))
                .collect();
            truth_cases.push(SynthCaseTruth {
                episode_id: episode_id.clone(),
                case_id,
                perpetrator: perp,
                crime_type: crime,
                n_sentences: case_sentences.len(),
                n_positives: case_sentences.iter().filter(|u| u.gold_label == 1).count(),
            });
        }

        // Audio track: one tone burst per slot plus noise.
        let samples_per_slot = SAMPLE_RATE as usize * TONE_MS / 1000;
        let mut samples = Vec::with_capacity(sentences.len() * samples_per_slot);
        let audio_noise = Normal::new(0.0, 0.02).expect("valid sigma");
        for &armed in &armed_slots {
            let freq = if armed && spec.channels.audio {
                TONE_ARMED_HZ
            } else {
                TONE_PLAIN_HZ
            };
            for i in 0..samples_per_slot {
                let t = i as f64 / SAMPLE_RATE as f64;
                let tone = if spec.channels.audio {
                    0.3 * (2.0 * std::f64::consts::PI * freq * t).sin()
                } else {
                    0.0
                };
                samples.push(tone + audio_noise.sample(&mut rng));
            }
        }
        write_wav(out_dir.join("audio").join(format!("{episode_id}.wav")), &samples, SAMPLE_RATE)?;

        // Visual store: one row per slot at the slot center.
        let mut visual = String::new();
        visual.push_str(&format!("dim={}\n", spec.visual_dim));
        for (slot, &armed) in armed_slots.iter().enumerate() {
            let t = slot * TONE_MS + TONE_MS / 2;
            visual.push_str(&t.to_string());
            let mean = if armed && spec.channels.visual {
                &mean_armed
            } else {
                &mean_plain
            };
            for m in mean {
                let v = m + noise_dist.sample(&mut rng);
                visual.push_str(&format!(" {v:.5}"));
            }
            visual.push('\n');
        }
        std::fs::write(out_dir.join("visual").join(format!("{episode_id}.txt")), visual)?;
    }

    validate_units(&all_units).expect("generated units satisfy the corpus invariants");
    crate::corpus::write_units(out_dir.join("corpus.jsonl"), &all_units)?;

    // Embedding file covering every token the generator can emit.
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    for unit in &all_units {
        vocab.extend(unit.tokens.iter().cloned());
    }
    for p in PRONOUNS {
        vocab.insert(p.to_string());
    }
    vocab.insert(TRIGGER_TOKEN.to_string());
    let emb_dist = Normal::new(0.0, 0.4).expect("valid sigma");
    let mut emb = String::new();
    for token in &vocab {
        emb.push_str(token);
        for _ in 0..50 {
            emb.push_str(&format!(" {:.6}", emb_dist.sample(&mut global_rng)));
        }
        emb.push('\n');
    }
    std::fs::write(out_dir.join("embeddings.txt"), emb)?;

    let truth = SynthTruth {
        spec: spec.clone(),
        total_sentences: all_units.len(),
        total_positives,
        cases: truth_cases,
    };
    std::fs::write(out_dir.join("truth.json"), serde_json::to_string_pretty(&truth)?)?;
    Ok(truth)
}

pub fn truth_path(dataset_dir: impl AsRef<Path>) -> PathBuf {
    dataset_dir.as_ref().join("truth.json")
}

pub fn load_truth(dataset_dir: impl AsRef<Path>) -> Result<SynthTruth> {
    let path = truth_path(&dataset_dir);
    if !path.exists() {
        return Err(Error::invalid(format!(
            "{}: no truth.json; not a synthetic dataset",
            dataset_dir.as_ref().display()
        )));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Exact achievable f1 on this dataset for the optimal memoryless or
/// full-history predictor, from the generator's own parameters.
///
/// With any signal channel enabled, armed sentences are identifiable, so
/// the full-history optimum reproduces the gold labels exactly (f1 = 1).
/// A memoryless predictor sees features independent of the current label
/// whenever the lag is positive; its best strategy is all-positive, with
/// f1 = 2P / (N + P).
pub fn bayes_rate(dataset_dir: impl AsRef<Path>, memoryless: bool) -> Result<f64> {
    let truth = load_truth(dataset_dir)?;
    let n = truth.total_sentences as f64;
    let p = truth.total_positives as f64;
    let all_positive_f1 = if n + p == 0.0 { 0.0 } else { 2.0 * p / (n + p) };
    if !truth.spec.channels.any() {
        return Ok(all_positive_f1);
    }
    if memoryless && truth.spec.history_lag > 0 {
        Ok(all_positive_f1)
    } else {
        Ok(1.0)
    }
}
