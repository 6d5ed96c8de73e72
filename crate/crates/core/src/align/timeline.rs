//! Timestamp allocation: matched utterances copy their cue's span; every
//! other element splits the surrounding gap proportionally to token counts.

use crate::align::Alignment;
use crate::corpus::{CaptionCue, SentenceKind, SentenceUnit};
use crate::error::{Error, Result};

/// An episode's units with a time span on every unit.
#[derive(Debug, Clone)]
pub struct EpisodeTimeline {
    pub units: Vec<SentenceUnit>,
}

/// Assigns a `[start_ms, end_ms]` span to every unit.
///
/// `alignment` indexes the utterance subsequence of `units` (k-th pair
/// coordinate = k-th unit with kind `Utterance`). Unmatched runs between two
/// timed neighbors split the gap proportionally to their token counts;
/// leading and trailing runs use the episode bounds.
pub fn allocate_timestamps(
    units: &[SentenceUnit],
    alignment: &Alignment,
    cues: &[CaptionCue],
    episode_start_ms: i64,
    episode_end_ms: i64,
) -> Result<EpisodeTimeline> {
    let mut timed = units.to_vec();
    for unit in &mut timed {
        unit.start_ms = None;
        unit.end_ms = None;
    }

    // Map utterance-subsequence positions back to unit positions.
    let utterance_positions: Vec<usize> = units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.kind == SentenceKind::Utterance)
        .map(|(i, _)| i)
        .collect();

    let mut matched = 0usize;
    for &(u, c) in &alignment.pairs {
        let pos = *utterance_positions.get(u).ok_or_else(|| {
            Error::invalid(format!("alignment references utterance {u} beyond the episode"))
        })?;
        let cue = cues
            .get(c)
            .ok_or_else(|| Error::invalid(format!("alignment references cue {c} beyond the stream")))?;
        timed[pos].start_ms = Some(cue.start_ms);
        timed[pos].end_ms = Some(cue.end_ms);
        matched += 1;
    }
    if matched == 0 {
        return Err(Error::invalid(
            "allocate_timestamps: episode has zero matched utterances",
        ));
    }

    // Fill untimed runs between consecutive anchors.
    let mut i = 0;
    while i < timed.len() {
        if timed[i].start_ms.is_some() {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < timed.len() && timed[i].start_ms.is_none() {
            i += 1;
        }
        let run_end = i; // exclusive
        let gap_start = if run_start == 0 {
            episode_start_ms
        } else {
            timed[run_start - 1].end_ms.expect("anchor before run is timed")
        };
        let gap_end = if run_end == timed.len() {
            episode_end_ms
        } else {
            timed[run_end].start_ms.expect("anchor after run is timed")
        };
        let gap_end = gap_end.max(gap_start);
        fill_run(&mut timed[run_start..run_end], gap_start, gap_end);
    }

    Ok(EpisodeTimeline { units: timed })
}

/// Splits `[gap_start, gap_end]` over the run proportionally to token
/// counts. Boundary k sits at gap_start + gap_len * (tokens before k) /
/// total, so the spans tile the gap exactly. A run with zero tokens in
/// total splits evenly.
fn fill_run(run: &mut [SentenceUnit], gap_start: i64, gap_end: i64) {
    let k = run.len();
    let gap_len = (gap_end - gap_start) as f64;
    let total_tokens: usize = run.iter().map(|u| u.tokens.len()).sum();

    let boundary = |weight_before: f64, total: f64, idx: usize| -> i64 {
        if idx == 0 {
            return gap_start;
        }
        if idx == k {
            return gap_end;
        }
        gap_start + (gap_len * weight_before / total).round() as i64
    };

    let mut cum = 0.0;
    for (idx, unit) in run.iter_mut().enumerate() {
        let (before, after, total) = if total_tokens == 0 {
            (idx as f64, (idx + 1) as f64, k as f64)
        } else {
            let w = unit.tokens.len() as f64;
            (cum, cum + w, total_tokens as f64)
        };
        let start = boundary(before, total, idx);
        let end = boundary(after, total, idx + 1);
        unit.start_ms = Some(start);
        unit.end_ms = Some(end.max(start));
        cum = after;
    }
}
