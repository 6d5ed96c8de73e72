//! Per-sentence model inputs: padded token ids with validity mask, a
//! visual vector looked up at the sentence's center time, and five MFCC
//! frames sampled across the sentence's span. Bundles are cached per
//! episode in a little-endian binary container (magic `WDF1`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::SentenceUnit;
use crate::error::{Error, Result};
use crate::signal::mfcc::{frame_center_ms, mfcc_frames, MfccConfig};
use crate::signal::vocab::{Vocab, PAD_ID};
use crate::signal::wav::AudioTrack;

pub const CACHE_MAGIC: &[u8; 4] = b"WDF1";

/// Fixed per-run feature dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDims {
    pub max_tokens: usize,
    pub visual_dim: usize,
    pub audio_dim: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        FeatureDims {
            max_tokens: 60,
            visual_dim: 1536,
            audio_dim: 65,
        }
    }
}

/// One sentence's model input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub token_ids: Vec<u32>,
    pub token_mask: Vec<bool>,
    pub visual: Vec<f64>,
    pub audio: Vec<f64>,
    pub gold_label: u8,
}

/// Cache record: the bundle plus where it came from.
#[derive(Debug, Clone)]
pub struct CacheRecord {
    pub case_id: Option<u32>,
    pub seq_index: usize,
    pub bundle: FeatureBundle,
}

/// Midpoint of a span, rounded down.
pub fn center_time(start_ms: i64, end_ms: i64) -> i64 {
    (start_ms + end_ms).div_euclid(2)
}

/// Frame-feature store keyed by millisecond timestamps.
#[derive(Debug, Clone)]
pub struct VisualStore {
    pub dim: usize,
    entries: Vec<(i64, Vec<f64>)>,
}

impl VisualStore {
    pub fn new(dim: usize, mut entries: Vec<(i64, Vec<f64>)>) -> Result<Self> {
        for (t, v) in &entries {
            if v.len() != dim {
                return Err(Error::format(format!(
                    "visual store: vector at t={t} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
        }
        entries.sort_by_key(|(t, _)| *t);
        Ok(VisualStore { dim, entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Header `dim=<D>` then rows `t_ms v1 .. vD`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path)?;
        let mut lines = content.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(format!("{}: empty visual store", path.display())))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| {
                Error::format(format!("{}: bad header {header:?}", path.display()))
            })?;
        let mut entries = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let t: i64 = fields
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::format(format!("{}:{}: bad timestamp", path.display(), no + 1)))?;
            let values: Vec<f64> = fields
                .map(|v| {
                    v.parse::<f64>().map_err(|_| {
                        Error::format(format!("{}:{}: bad value {v:?}", path.display(), no + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::format(format!(
                    "{}:{}: row has {} values, expected {dim}",
                    path.display(),
                    no + 1,
                    values.len()
                )));
            }
            entries.push((t, values));
        }
        VisualStore::new(dim, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "dim={}", self.dim)?;
        for (t, values) in &self.entries {
            write!(w, "{t}")?;
            for v in values {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Vector whose key is nearest `t_ms`; ties prefer the earlier key.
    pub fn nearest(&self, t_ms: i64) -> Result<&[f64]> {
        if self.entries.is_empty() {
            return Err(Error::invalid("visual store is empty"));
        }
        let i = self.entries.partition_point(|(t, _)| *t < t_ms);
        let candidates = [i.checked_sub(1), (i < self.entries.len()).then_some(i)];
        let best = candidates
            .iter()
            .flatten()
            .min_by_key(|&&idx| {
                let (t, _) = self.entries[idx];
                ((t - t_ms).abs(), t)
            })
            .copied()
            .expect("non-empty store");
        Ok(&self.entries[best].1)
    }
}

/// Five MFCC frames sampled at fractions k/6 (k = 1..5) of the span,
/// concatenated chronologically, given precomputed track frames.
pub fn sentence_audio_feature_from_frames(
    frames: &[Vec<f64>],
    cfg: &MfccConfig,
    start_ms: i64,
    end_ms: i64,
    track_duration_ms: i64,
) -> Result<Vec<f64>> {
    if end_ms < start_ms {
        return Err(Error::invalid("sentence_audio_feature: end before start"));
    }
    if start_ms < 0 || end_ms > track_duration_ms {
        return Err(Error::invalid(format!(
            "sentence_audio_feature: span [{start_ms}, {end_ms}] outside track of {track_duration_ms} ms"
        )));
    }
    if frames.is_empty() {
        return Err(Error::invalid("sentence_audio_feature: no MFCC frames"));
    }
    let mut out = Vec::with_capacity(5 * cfg.cepstra);
    for k in 1..=5 {
        let target = start_ms as f64 + (end_ms - start_ms) as f64 * k as f64 / 6.0;
        let idx = nearest_frame(frames.len(), cfg, target);
        out.extend_from_slice(&frames[idx]);
    }
    Ok(out)
}

/// Frame whose center is nearest `target_ms`; ties prefer the earlier frame.
fn nearest_frame(n_frames: usize, cfg: &MfccConfig, target_ms: f64) -> usize {
    // Centers are affine in the index: idx*hop_ms + window/2.
    let hop = cfg.hop_ms as f64;
    let first_center = frame_center_ms(0, cfg);
    let raw = (target_ms - first_center) / hop;
    let candidate = raw.round().max(0.0) as usize;
    let candidate = candidate.min(n_frames - 1);
    // Exact halfway rounds up in f64::round; prefer the earlier frame.
    if candidate > 0 {
        let earlier = frame_center_ms(candidate - 1, cfg);
        let here = frame_center_ms(candidate, cfg);
        if (target_ms - earlier).abs() <= (here - target_ms).abs() {
            return candidate - 1;
        }
    }
    candidate
}

/// Convenience wrapper computing the MFCC frames for `track` first.
pub fn sentence_audio_feature(
    track: &AudioTrack,
    cfg: &MfccConfig,
    start_ms: i64,
    end_ms: i64,
) -> Result<Vec<f64>> {
    let frames = mfcc_frames(track, cfg)?;
    sentence_audio_feature_from_frames(&frames, cfg, start_ms, end_ms, track.duration_ms())
}

/// Builds one sentence's bundle. `visual`/`audio_frames` may be absent when
/// the corresponding channel is disabled; the slot is zero-filled so the
/// cache layout stays fixed.
#[allow(clippy::too_many_arguments)]
pub fn build_bundle(
    unit: &SentenceUnit,
    vocab: &Vocab,
    dims: &FeatureDims,
    visual: Option<&VisualStore>,
    audio_frames: Option<&[Vec<f64>]>,
    mfcc_cfg: &MfccConfig,
    track_duration_ms: i64,
) -> Result<FeatureBundle> {
    let mut token_ids = vec![PAD_ID; dims.max_tokens];
    let mut token_mask = vec![false; dims.max_tokens];
    for (i, token) in unit.tokens.iter().take(dims.max_tokens).enumerate() {
        token_ids[i] = vocab.id(token);
        token_mask[i] = true;
    }

    let (start, end) = match (unit.start_ms, unit.end_ms) {
        (Some(s), Some(e)) => (s, e),
        _ if visual.is_some() || audio_frames.is_some() => {
            return Err(Error::invalid(format!(
                "{}[{}]: sentence has no time span; run alignment first",
                unit.episode_id, unit.seq_index
            )));
        }
        _ => (0, 0),
    };

    let visual_vec = match visual {
        Some(store) => {
            if store.dim != dims.visual_dim {
                return Err(Error::format(format!(
                    "visual store dimension {} != expected {}",
                    store.dim, dims.visual_dim
                )));
            }
            store.nearest(center_time(start, end))?.to_vec()
        }
        None => vec![0.0; dims.visual_dim],
    };

    let audio_vec = match audio_frames {
        Some(frames) => {
            let v = sentence_audio_feature_from_frames(frames, mfcc_cfg, start, end, track_duration_ms)?;
            if v.len() != dims.audio_dim {
                return Err(Error::format(format!(
                    "audio feature length {} != expected {}",
                    v.len(),
                    dims.audio_dim
                )));
            }
            v
        }
        None => vec![0.0; dims.audio_dim],
    };

    Ok(FeatureBundle {
        token_ids,
        token_mask,
        visual: visual_vec,
        audio: audio_vec,
        gold_label: unit.gold_label,
    })
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Writes one episode's records: magic, version, counts and dims, then per
/// record case id (-1 = none), seq index, gold, ids, mask, and the visual
/// and audio vectors as 32-bit reals.
pub fn write_cache(path: impl AsRef<Path>, dims: &FeatureDims, records: &[CacheRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    write_u32(&mut w, 1)?;
    write_u32(&mut w, records.len() as u32)?;
    write_u32(&mut w, dims.max_tokens as u32)?;
    write_u32(&mut w, dims.visual_dim as u32)?;
    write_u32(&mut w, dims.audio_dim as u32)?;
    for rec in records {
        let case: i64 = rec.case_id.map(i64::from).unwrap_or(-1);
        w.write_all(&case.to_le_bytes())?;
        write_u32(&mut w, rec.seq_index as u32)?;
        w.write_all(&[rec.bundle.gold_label])?;
        for &id in &rec.bundle.token_ids {
            write_u32(&mut w, id)?;
        }
        for &m in &rec.bundle.token_mask {
            w.write_all(&[m as u8])?;
        }
        for &v in &rec.bundle.visual {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        for &v in &rec.bundle.audio {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<(FeatureDims, Vec<CacheRecord>)> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::format(format!("{}: not a feature cache", path.display())));
    }
    let version = read_u32(&mut r)?;
    if version != 1 {
        return Err(Error::format(format!(
            "{}: unsupported cache version {version}",
            path.display()
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let dims = FeatureDims {
        max_tokens: read_u32(&mut r)? as usize,
        visual_dim: read_u32(&mut r)? as usize,
        audio_dim: read_u32(&mut r)? as usize,
    };
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let mut case_buf = [0u8; 8];
        r.read_exact(&mut case_buf)?;
        let case = i64::from_le_bytes(case_buf);
        let seq_index = read_u32(&mut r)? as usize;
        let mut gold = [0u8; 1];
        r.read_exact(&mut gold)?;
        let mut token_ids = Vec::with_capacity(dims.max_tokens);
        for _ in 0..dims.max_tokens {
            token_ids.push(read_u32(&mut r)?);
        }
        let mut mask_bytes = vec![0u8; dims.max_tokens];
        r.read_exact(&mut mask_bytes)?;
        let token_mask = mask_bytes.into_iter().map(|b| b != 0).collect();
        let mut read_f32s = |count: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            let mut buf = [0u8; 4];
            for _ in 0..count {
                r.read_exact(&mut buf)?;
                out.push(f32::from_le_bytes(buf) as f64);
            }
            Ok(out)
        };
        let visual = read_f32s(dims.visual_dim)?;
        let audio = read_f32s(dims.audio_dim)?;
        records.push(CacheRecord {
            case_id: (case >= 0).then_some(case as u32),
            seq_index,
            bundle: FeatureBundle {
                token_ids,
                token_mask,
                visual,
                audio,
                gold_label: gold[0],
            },
        });
    }
    Ok((dims, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_time_rounds_down() {
        assert_eq!(center_time(2000, 4000), 3000);
        assert_eq!(center_time(0, 0), 0);
        assert_eq!(center_time(1, 2), 1);
    }

    #[test]
    fn visual_nearest_and_ties() {
        let store = VisualStore::new(
            2,
            vec![(1000, vec![1.0, 1.0]), (3000, vec![2.0, 2.0])],
        )
        .unwrap();
        assert_eq!(store.nearest(1200).unwrap(), &[1.0, 1.0]);
        // tie at 2000 goes to the earlier key
        assert_eq!(store.nearest(2000).unwrap(), &[1.0, 1.0]);
        assert_eq!(store.nearest(5000).unwrap(), &[2.0, 2.0]);
    }

    #[test]
    fn wrong_dimension_vector_fails_at_load() {
        assert!(VisualStore::new(3, vec![(0, vec![1.0, 2.0])]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "dim=3\n0 1.0 2.0\n").unwrap();
        assert!(VisualStore::load(&path).is_err());
    }

    #[test]
    fn empty_store_query_is_an_error() {
        let store = VisualStore::new(2, vec![]).unwrap();
        assert!(store.nearest(0).is_err());
    }

    #[test]
    fn visual_store_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let store = VisualStore::new(2, vec![(100, vec![0.5, -0.25]), (300, vec![1.5, 2.5])]).unwrap();
        store.save(&path).unwrap();
        let loaded = VisualStore::load(&path).unwrap();
        assert_eq!(loaded.dim, 2);
        assert_eq!(loaded.nearest(100).unwrap(), &[0.5, -0.25]);
    }

    #[test]
    fn audio_sampling_targets_sixths() {
        let cfg = MfccConfig::default();
        // Fake frames: frame i has constant value i. Centers at 12.5 + 5i ms.
        let frames: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64; 13]).collect();
        let feat = sentence_audio_feature_from_frames(&frames, &cfg, 0, 600, 1200).unwrap();
        assert_eq!(feat.len(), 65);
        // Targets 100, 200, 300, 400, 500 ms; centers 12.5+5i nearest:
        // (100-12.5)/5 = 17.5 -> tie between 17 and 18 -> earlier = 17.
        assert_eq!(feat[0], 17.0);
        assert_eq!(feat[13], 37.0);
        assert_eq!(feat[26], 57.0);
        assert_eq!(feat[39], 77.0);
        assert_eq!(feat[52], 97.0);
    }

    #[test]
    fn zero_length_interval_repeats_one_frame() {
        let cfg = MfccConfig::default();
        let frames: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64; 13]).collect();
        let feat = sentence_audio_feature_from_frames(&frames, &cfg, 100, 100, 400).unwrap();
        for k in 0..5 {
            assert_eq!(feat[k * 13], feat[0]);
        }
    }

    #[test]
    fn stationary_signal_gives_equal_subvectors() {
        let track = AudioTrack {
            samples: vec![0.25; 16000],
            sample_rate: 16000,
        };
        let cfg = MfccConfig::default();
        let feat = sentence_audio_feature(&track, &cfg, 100, 900).unwrap();
        assert_eq!(feat.len(), 65);
        for k in 1..5 {
            assert_eq!(&feat[k * 13..(k + 1) * 13], &feat[0..13]);
        }
    }

    #[test]
    fn interval_outside_track_is_an_error() {
        let cfg = MfccConfig::default();
        let frames: Vec<Vec<f64>> = (0..50).map(|_| vec![0.0; 13]).collect();
        assert!(sentence_audio_feature_from_frames(&frames, &cfg, 0, 5000, 400).is_err());
        assert!(sentence_audio_feature_from_frames(&frames, &cfg, -10, 100, 400).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dims = FeatureDims {
            max_tokens: 4,
            visual_dim: 3,
            audio_dim: 2,
        };
        let records = vec![
            CacheRecord {
                case_id: Some(1),
                seq_index: 0,
                bundle: FeatureBundle {
                    token_ids: vec![2, 3, 0, 0],
                    token_mask: vec![true, true, false, false],
                    visual: vec![0.5, -0.5, 1.0],
                    audio: vec![2.0, 3.0],
                    gold_label: 1,
                },
            },
            CacheRecord {
                case_id: None,
                seq_index: 1,
                bundle: FeatureBundle {
                    token_ids: vec![0; 4],
                    token_mask: vec![false; 4],
                    visual: vec![0.0; 3],
                    audio: vec![0.0; 2],
                    gold_label: 0,
                },
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.wdf");
        write_cache(&path, &dims, &records).unwrap();
        let (dims2, records2) = read_cache(&path).unwrap();
        assert_eq!(dims, dims2);
        assert_eq!(records2.len(), 2);
        assert_eq!(records2[0].case_id, Some(1));
        assert_eq!(records2[1].case_id, None);
        assert_eq!(records2[0].bundle.token_ids, records[0].bundle.token_ids);
        assert_eq!(records2[0].bundle.visual, records[0].bundle.visual);
        assert_eq!(records2[0].bundle.gold_label, 1);
    }
}
