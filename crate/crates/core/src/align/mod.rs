//! Dynamic-time-warping alignment of screenplay dialog to caption cues,
//! and heuristic time-stamping of the remaining screenplay elements.

mod timeline;

pub use timeline::{allocate_timestamps, EpisodeTimeline};

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};

/// A monotone alignment between an utterance sequence and a cue sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// (utterance index, cue index) matches, monotone in both coordinates.
    pub pairs: Vec<(usize, usize)>,
    pub skipped_utterances: Vec<usize>,
    pub skipped_cues: Vec<usize>,
    pub total_cost: f64,
}

impl Alignment {
    pub fn matched_cue_for(&self, utterance: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|(u, _)| *u == utterance)
            .map(|(_, c)| *c)
    }
}

/// Local match cost: 1 minus the Jaccard similarity of the two token sets.
/// Two empty sets cost 0.
pub fn cue_cost(sentence_tokens: &[String], cue_tokens: &[String]) -> f64 {
    let a: BTreeSet<&str> = sentence_tokens.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = cue_tokens.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    let inter = a.intersection(&b).count();
    1.0 - inter as f64 / union as f64
}

/// The three DTW moves, in tie-break preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Match,
    SkipUtterance,
    SkipCue,
}

/// Minimum-cost monotone alignment under moves {match, skip-utterance,
/// skip-cue}, with skips costing `skip_penalty` each. Among equal-cost
/// paths the earliest decisions prefer match over skip-utterance over
/// skip-cue, so ties resolve toward the earliest possible match.
pub fn dtw_align(
    utterances: &[Vec<String>],
    cues: &[Vec<String>],
    skip_penalty: f64,
) -> Result<Alignment> {
    if utterances.is_empty() || cues.is_empty() {
        return Err(Error::invalid("dtw_align: empty input sequence"));
    }
    if !(skip_penalty >= 0.0) {
        return Err(Error::invalid("dtw_align: skip_penalty must be nonnegative"));
    }
    let m = utterances.len();
    let n = cues.len();

    let match_cost: Vec<Vec<f64>> = utterances
        .iter()
        .map(|u| cues.iter().map(|c| cue_cost(u, c)).collect())
        .collect();

    // suffix[i][j] = min cost of aligning utterances[i..] with cues[j..].
    // Reconstructing forward from (0,0) makes the tie-break lexicographic
    // over the move sequence from the start.
    let width = n + 1;
    let mut suffix = vec![0.0f64; (m + 1) * width];
    for i in (0..=m).rev() {
        for j in (0..=n).rev() {
            if i == m && j == n {
                continue;
            }
            let mut best = f64::INFINITY;
            if i < m && j < n {
                best = best.min(match_cost[i][j] + suffix[(i + 1) * width + (j + 1)]);
            }
            if i < m {
                best = best.min(skip_penalty + suffix[(i + 1) * width + j]);
            }
            if j < n {
                best = best.min(skip_penalty + suffix[i * width + (j + 1)]);
            }
            suffix[i * width + j] = best;
        }
    }

    let mut pairs = Vec::new();
    let mut skipped_utterances = Vec::new();
    let mut skipped_cues = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let eps = 1e-12;
    while i < m || j < n {
        let here = suffix[i * width + j];
        let mut chosen = None;
        if i < m && j < n {
            let via = match_cost[i][j] + suffix[(i + 1) * width + (j + 1)];
            if (via - here).abs() <= eps {
                chosen = Some(Move::Match);
            }
        }
        if chosen.is_none() && i < m {
            let via = skip_penalty + suffix[(i + 1) * width + j];
            if (via - here).abs() <= eps {
                chosen = Some(Move::SkipUtterance);
            }
        }
        if chosen.is_none() && j < n {
            let via = skip_penalty + suffix[i * width + (j + 1)];
            if (via - here).abs() <= eps {
                chosen = Some(Move::SkipCue);
            }
        }
        match chosen.expect("one move always reproduces the suffix cost") {
            Move::Match => {
                pairs.push((i, j));
                i += 1;
                j += 1;
            }
            Move::SkipUtterance => {
                skipped_utterances.push(i);
                i += 1;
            }
            Move::SkipCue => {
                skipped_cues.push(j);
                j += 1;
            }
        }
    }

    Ok(Alignment {
        pairs,
        skipped_utterances,
        skipped_cues,
        total_cost: suffix[0],
    })
}

/// Alignment report rows: `utterance_index,cue_index,cost`. Skipped
/// utterances/cues appear with the other column empty and the skip penalty
/// as cost.
pub fn write_alignment_csv(
    mut w: impl Write,
    alignment: &Alignment,
    utterances: &[Vec<String>],
    cues: &[Vec<String>],
    skip_penalty: f64,
) -> Result<()> {
    writeln!(w, "utterance_index,cue_index,cost")?;
    for &(u, c) in &alignment.pairs {
        writeln!(w, "{u},{c},{}", cue_cost(&utterances[u], &cues[c]))?;
    }
    for &u in &alignment.skipped_utterances {
        writeln!(w, "{u},,{skip_penalty}")?;
    }
    for &c in &alignment.skipped_cues {
        writeln!(w, ",{c},{skip_penalty}")?;
    }
    Ok(())
}
