//! Canonical data model for episode corpora: screenplay sentences, caption
//! cues, cases, and the line-oriented parsers that produce them.

mod interchange;
mod screenplay;
mod srt;
mod stats;

pub use interchange::{read_units, read_units_from, write_units, write_units_to};
pub use screenplay::parse_screenplay;
pub use srt::parse_srt;
pub use stats::{corpus_stats, group_cases, Case, CrimeType, StatRow, StatsTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a sentence was spoken or describes what the camera sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceKind {
    Utterance,
    SceneDescription,
}

/// Per-token entity annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenLabel {
    Perpetrator,
    Suspect,
    Other,
    None,
}

/// One screenplay sentence, the atomic unit of the whole pipeline.
///
/// `case_id = None` marks sentences irrelevant to every case of the episode.
/// `start_ms`/`end_ms` stay unset until caption alignment assigns a span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceUnit {
    pub episode_id: String,
    pub case_id: Option<u32>,
    pub seq_index: usize,
    pub kind: SentenceKind,
    pub speaker: Option<String>,
    pub tokens: Vec<String>,
    pub token_labels: Vec<TokenLabel>,
    pub gold_label: u8,
    pub start_ms: Option<i64>,
    pub end_ms: Option<i64>,
}

impl SentenceUnit {
    /// Checks the per-unit invariants; the interchange reader refuses
    /// units that fail.
    pub fn validate(&self) -> Result<()> {
        let where_ = format!("{}[{}]", self.episode_id, self.seq_index);
        match self.kind {
            SentenceKind::Utterance if self.speaker.is_none() => {
                return Err(Error::invalid(format!("{where_}: utterance without speaker")));
            }
            SentenceKind::SceneDescription if self.speaker.is_some() => {
                return Err(Error::invalid(format!(
                    "{where_}: scene description with speaker"
                )));
            }
            _ => {}
        }
        if self.token_labels.len() != self.tokens.len() {
            return Err(Error::invalid(format!(
                "{where_}: {} tokens but {} token labels",
                self.tokens.len(),
                self.token_labels.len()
            )));
        }
        if self.gold_label > 1 {
            return Err(Error::invalid(format!("{where_}: gold_label must be 0 or 1")));
        }
        if self.gold_label != derive_sentence_label(&self.token_labels) {
            return Err(Error::invalid(format!(
                "{where_}: gold_label inconsistent with token labels"
            )));
        }
        if let (Some(s), Some(e)) = (self.start_ms, self.end_ms) {
            if e < s {
                return Err(Error::invalid(format!("{where_}: end_ms {e} < start_ms {s}")));
            }
        }
        Ok(())
    }
}

/// Validates a whole unit list: per-unit invariants plus strictly
/// increasing `seq_index` within each episode.
pub fn validate_units(units: &[SentenceUnit]) -> Result<()> {
    let mut last: Option<(&str, usize)> = None;
    for unit in units {
        unit.validate()?;
        if let Some((ep, idx)) = last {
            if ep == unit.episode_id && unit.seq_index <= idx {
                return Err(Error::invalid(format!(
                    "{}: seq_index {} not increasing (previous {})",
                    unit.episode_id, unit.seq_index, idx
                )));
            }
        }
        last = Some((&unit.episode_id, unit.seq_index));
    }
    Ok(())
}

/// A time-stamped subtitle block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionCue {
    pub index: u32,
    pub start_ms: i64,
    pub end_ms: i64,
    pub text: String,
}

/// A sentence mentions the perpetrator iff one of its tokens does.
pub fn derive_sentence_label(token_labels: &[TokenLabel]) -> u8 {
    if token_labels.iter().any(|l| *l == TokenLabel::Perpetrator) {
        1
    } else {
        0
    }
}

/// Lowercases, splits on whitespace, and strips leading/trailing
/// punctuation. Internal punctuation stays, so "don't" is one token.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Splits a logical line into sentences on `.`, `?` or `!` followed by
/// whitespace. Returns at least one segment for non-empty input.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '?' | '!') {
            // Consume any run of terminators, then break on whitespace.
            while let Some(&n) = chars.peek() {
                if matches!(n, '.' | '?' | '!') {
                    current.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            if chars.peek().is_none_or(|n| n.is_whitespace()) {
                let trimmed = current.trim();
                if !trimmed.is_empty() {
                    out.push(trimmed.to_string());
                }
                current.clear();
            }
        }
    }
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_derivation() {
        use TokenLabel::*;
        assert_eq!(derive_sentence_label(&[None, Perpetrator, None]), 1);
        assert_eq!(derive_sentence_label(&[None, Suspect, Other]), 0);
        assert_eq!(derive_sentence_label(&[]), 0);
    }

    #[test]
    fn label_derivation_is_monotone() {
        use TokenLabel::*;
        // Adding a perpetrator token never flips 1 -> 0.
        let base = vec![None, Suspect, Other];
        let mut with_perp = base.clone();
        with_perp.push(Perpetrator);
        assert!(derive_sentence_label(&with_perp) >= derive_sentence_label(&base));
        let mut already = vec![Perpetrator, None];
        assert_eq!(derive_sentence_label(&already), 1);
        already.push(Perpetrator);
        assert_eq!(derive_sentence_label(&already), 1);
    }

    #[test]
    fn tokenize_strips_edge_punctuation() {
        assert_eq!(
            tokenize("okay, Warrick, hit it"),
            vec!["okay", "warrick", "hit", "it"]
        );
        assert_eq!(tokenize("Don't stop!"), vec!["don't", "stop"]);
        assert_eq!(tokenize(".380 auto"), vec!["380", "auto"]);
        assert_eq!(tokenize("--- ..."), Vec::<String>::new());
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(
            split_sentences("He ran. She followed! Who knew?"),
            vec!["He ran.", "She followed!", "Who knew?"]
        );
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
        // "3.8 km" must not split: the period is not followed by whitespace.
        assert_eq!(split_sentences("it is 3.8 km away"), vec!["it is 3.8 km away"]);
        assert_eq!(split_sentences("What?! Really."), vec!["What?!", "Really."]);
    }

    #[test]
    fn unit_validation_catches_inconsistencies() {
        let mut unit = SentenceUnit {
            episode_id: "e1".into(),
            case_id: Some(1),
            seq_index: 0,
            kind: SentenceKind::Utterance,
            speaker: Some("NICK".into()),
            tokens: vec!["hi".into()],
            token_labels: vec![TokenLabel::None],
            gold_label: 0,
            start_ms: None,
            end_ms: None,
        };
        assert!(unit.validate().is_ok());
        unit.gold_label = 1;
        assert!(unit.validate().is_err());
        unit.gold_label = 0;
        unit.speaker = None;
        assert!(unit.validate().is_err());
    }
}
