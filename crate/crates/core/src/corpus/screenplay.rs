//! Plain-text screenplay parser.
//!
//! Grammar (line oriented, UTF-8):
//!   * `## <heading>` starts a scene; headings emit no sentences and clear
//!     the current speaker.
//!   * `NAME: <dialog>` is a character cue; NAME is upper-case (letters,
//!     digits, spaces, `.`, `'`, `-`). Dialog may continue on following
//!     plain lines until the next cue, heading, or description.
//!   * `(<description>)`, possibly spanning lines, is a scene description.
//!   * Blank lines separate elements.

use crate::corpus::{derive_sentence_label, split_sentences, tokenize, SentenceKind, SentenceUnit, TokenLabel};
use crate::error::{Error, Result};

/// Parses screenplay text into sentence units in script order.
///
/// Sentences carry no case assignment or entity labels; those arrive
/// pre-annotated through the interchange format.
pub fn parse_screenplay(text: &str, episode_id: &str) -> Result<Vec<SentenceUnit>> {
    let mut units: Vec<SentenceUnit> = Vec::new();
    let mut speaker: Option<String> = None;
    // Cue waiting for dialog: (line number, name).
    let mut pending_cue: Option<(usize, String)> = None;

    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let line = raw.trim();
        let line_no = i + 1;

        if line.is_empty() {
            i += 1;
            continue;
        }

        if let Some(heading) = line.strip_prefix("##") {
            let _ = heading; // headings carry no content of their own
            if let Some((cue_line, name)) = pending_cue.take() {
                return Err(cue_without_dialog(cue_line, &name));
            }
            speaker = None;
            i += 1;
            continue;
        }

        if line.starts_with('(') {
            if let Some((cue_line, name)) = pending_cue.take() {
                return Err(cue_without_dialog(cue_line, &name));
            }
            let (description, consumed) = collect_description(&lines, i)?;
            push_sentences(
                &mut units,
                episode_id,
                SentenceKind::SceneDescription,
                None,
                &description,
            );
            i += consumed;
            continue;
        }

        if let Some((name, rest)) = match_cue(line) {
            if let Some((cue_line, prev)) = pending_cue.take() {
                return Err(cue_without_dialog(cue_line, &prev));
            }
            speaker = Some(name.clone());
            if rest.is_empty() {
                pending_cue = Some((line_no, name));
            } else {
                push_sentences(
                    &mut units,
                    episode_id,
                    SentenceKind::Utterance,
                    speaker.clone(),
                    rest,
                );
            }
            i += 1;
            continue;
        }

        // Plain content line: dialog for the most recent cue.
        match &speaker {
            Some(_) => {
                pending_cue = None;
                push_sentences(
                    &mut units,
                    episode_id,
                    SentenceKind::Utterance,
                    speaker.clone(),
                    line,
                );
            }
            None => {
                return Err(Error::Screenplay {
                    line: line_no,
                    message: format!("dialog without a preceding character cue: {line:?}"),
                });
            }
        }
        i += 1;
    }

    if let Some((cue_line, name)) = pending_cue {
        return Err(cue_without_dialog(cue_line, &name));
    }

    for (idx, unit) in units.iter_mut().enumerate() {
        unit.seq_index = idx;
    }
    Ok(units)
}

fn cue_without_dialog(line: usize, name: &str) -> Error {
    Error::Screenplay {
        line,
        message: format!("character cue {name:?} has no following dialog"),
    }
}

/// `NAME: rest` where NAME is upper-case-ish. Returns (name, rest).
fn match_cue(line: &str) -> Option<(String, &str)> {
    let colon = line.find(':')?;
    let name = line[..colon].trim();
    if name.is_empty() || !name.chars().next().unwrap().is_ascii_uppercase() {
        return None;
    }
    let ok = name
        .chars()
        .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || matches!(c, ' ' | '.' | '\'' | '-'));
    if !ok {
        return None;
    }
    Some((name.to_string(), line[colon + 1..].trim()))
}

/// Accumulates a parenthesized description starting at `start`; returns the
/// joined inner text and the number of lines consumed.
fn collect_description(lines: &[&str], start: usize) -> Result<(String, usize)> {
    let mut depth = 0i32;
    let mut parts: Vec<String> = Vec::new();
    for (offset, raw) in lines[start..].iter().enumerate() {
        let line = raw.trim();
        for c in line.chars() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
        }
        if !line.is_empty() {
            parts.push(line.to_string());
        }
        if depth <= 0 {
            let mut text = parts.join(" ");
            text = text
                .strip_prefix('(')
                .unwrap_or(&text)
                .strip_suffix(')')
                .map(str::to_string)
                .unwrap_or_else(|| text.trim_start_matches('(').to_string());
            return Ok((text, offset + 1));
        }
    }
    Err(Error::Screenplay {
        line: start + 1,
        message: "unterminated scene description".into(),
    })
}

fn push_sentences(
    units: &mut Vec<SentenceUnit>,
    episode_id: &str,
    kind: SentenceKind,
    speaker: Option<String>,
    text: &str,
) {
    for sentence in split_sentences(text) {
        let tokens = tokenize(&sentence);
        let token_labels = vec![TokenLabel::None; tokens.len()];
        let gold_label = derive_sentence_label(&token_labels);
        units.push(SentenceUnit {
            episode_id: episode_id.to_string(),
            case_id: None,
            seq_index: 0, // assigned after the full pass
            kind,
            speaker: speaker.clone(),
            tokens,
            token_labels,
            gold_label,
            start_ms: None,
            end_ms: None,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cue_line() {
        let units = parse_screenplay("NICK: okay, Warrick, hit it", "e1").unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].kind, SentenceKind::Utterance);
        assert_eq!(units[0].speaker.as_deref(), Some("NICK"));
        assert_eq!(units[0].tokens, vec!["okay", "warrick", "hit", "it"]);
        assert_eq!(units[0].gold_label, 0);
    }

    #[test]
    fn empty_input_yields_empty_list() {
        assert!(parse_screenplay("", "e1").unwrap().is_empty());
    }

    #[test]
    fn scene_description() {
        let units = parse_screenplay("(WARRICK starts the crane support)", "e1").unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].kind, SentenceKind::SceneDescription);
        assert!(units[0].speaker.is_none());
        assert_eq!(
            units[0].tokens,
            vec!["warrick", "starts", "the", "crane", "support"]
        );
    }

    #[test]
    fn multi_line_description_and_attribution() {
        let text = "## Crime scene\nNICK: White female, multiple bruising. Bullet hole to the temple.\n(He moves the light\nto the canopy below.)\nGRISSOM: Anything?\n";
        let units = parse_screenplay(text, "e1").unwrap();
        assert_eq!(units.len(), 4);
        assert_eq!(units[0].speaker.as_deref(), Some("NICK"));
        assert_eq!(units[1].speaker.as_deref(), Some("NICK"));
        assert_eq!(units[2].kind, SentenceKind::SceneDescription);
        assert_eq!(
            units[2].tokens,
            vec!["he", "moves", "the", "light", "to", "the", "canopy", "below"]
        );
        assert_eq!(units[3].speaker.as_deref(), Some("GRISSOM"));
        // seq_index strictly increasing
        for (i, u) in units.iter().enumerate() {
            assert_eq!(u.seq_index, i);
        }
    }

    #[test]
    fn continuation_lines_follow_most_recent_cue() {
        let text = "SARA:\nIt was here all along.\nAnd nobody looked.";
        let units = parse_screenplay(text, "e1").unwrap();
        assert_eq!(units.len(), 2);
        assert!(units.iter().all(|u| u.speaker.as_deref() == Some("SARA")));
    }

    #[test]
    fn cue_without_dialog_is_an_error() {
        let err = parse_screenplay("NICK:\nGRISSOM: hello", "e1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "got: {msg}");
        let err = parse_screenplay("## scene\nNICK:", "e1").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn bare_dialog_without_cue_is_an_error() {
        let err = parse_screenplay("## scene\nno speaker here", "e1").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
