//! SubRip caption parser: numbered blocks with
//! `HH:MM:SS,mmm --> HH:MM:SS,mmm` time lines.

use crate::corpus::CaptionCue;
use crate::error::{Error, Result};

/// Parses an SRT stream. Multi-line cue text is joined with single spaces.
pub fn parse_srt(text: &str) -> Result<Vec<CaptionCue>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut cues: Vec<CaptionCue> = Vec::new();

    for (block_no, block) in blocks(text).into_iter().enumerate() {
        let block_no = block_no + 1;
        let mut lines = block.iter();
        let index_line = lines.next().expect("blocks are non-empty");
        let index: u32 = index_line.trim().parse().map_err(|_| Error::Srt {
            block: block_no,
            message: format!("bad cue index {index_line:?}"),
        })?;
        let time_line = lines.next().ok_or_else(|| Error::Srt {
            block: block_no,
            message: "missing timestamp line".into(),
        })?;
        let (start_ms, end_ms) = parse_time_line(time_line).map_err(|message| Error::Srt {
            block: block_no,
            message,
        })?;
        if end_ms <= start_ms {
            return Err(Error::Srt {
                block: block_no,
                message: format!("non-monotone times: {start_ms}ms --> {end_ms}ms"),
            });
        }
        if let Some(prev) = cues.last() {
            if index <= prev.index {
                return Err(Error::Srt {
                    block: block_no,
                    message: format!("cue index {index} not increasing (previous {})", prev.index),
                });
            }
        }
        let text = lines.map(|l| l.trim()).collect::<Vec<_>>().join(" ");
        cues.push(CaptionCue {
            index,
            start_ms,
            end_ms,
            text,
        });
    }
    Ok(cues)
}

fn blocks(text: &str) -> Vec<Vec<&str>> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push(trimmed);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn parse_time_line(line: &str) -> std::result::Result<(i64, i64), String> {
    let mut parts = line.split("-->");
    let start = parts.next().ok_or("missing start timestamp")?.trim();
    let end = parts
        .next()
        .ok_or_else(|| format!("missing '-->' in {line:?}"))?
        .trim();
    if parts.next().is_some() {
        return Err(format!("extra '-->' in {line:?}"));
    }
    Ok((parse_timestamp(start)?, parse_timestamp(end)?))
}

/// `HH:MM:SS,mmm` to milliseconds.
fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    let bad = || format!("malformed timestamp {s:?}");
    let (hms, millis) = s.split_once(',').ok_or_else(bad)?;
    let fields: Vec<&str> = hms.split(':').collect();
    if fields.len() != 3 {
        return Err(bad());
    }
    let h: i64 = fields[0].trim().parse().map_err(|_| bad())?;
    let m: i64 = fields[1].trim().parse().map_err(|_| bad())?;
    let sec: i64 = fields[2].trim().parse().map_err(|_| bad())?;
    let ms: i64 = millis.trim().parse().map_err(|_| bad())?;
    if !(0..60).contains(&m) || !(0..60).contains(&sec) || !(0..1000).contains(&ms) || h < 0 {
        return Err(bad());
    }
    Ok(((h * 60 + m) * 60 + sec) * 1000 + ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cue() {
        let cues = parse_srt("1\n00:00:01,000 --> 00:00:02,500\nHello").unwrap();
        assert_eq!(cues.len(), 1);
        assert_eq!(cues[0].index, 1);
        assert_eq!(cues[0].start_ms, 1000);
        assert_eq!(cues[0].end_ms, 2500);
        assert_eq!(cues[0].text, "Hello");
    }

    #[test]
    fn multi_line_text_is_joined() {
        let cues = parse_srt("1\n00:00:01,000 --> 00:00:02,000\na\nb").unwrap();
        assert_eq!(cues[0].text, "a b");
    }

    #[test]
    fn reversed_times_rejected() {
        let err = parse_srt("1\n00:00:02,000 --> 00:00:01,000\nx").unwrap_err();
        assert!(err.to_string().contains("block 1"));
    }

    #[test]
    fn malformed_timestamp_names_block() {
        let srt = "1\n00:00:01,000 --> 00:00:02,000\nok\n\n2\n00:00:xx,000 --> 00:00:04,000\nbad";
        let err = parse_srt(srt).unwrap_err();
        assert!(err.to_string().contains("block 2"), "got {err}");
    }

    #[test]
    fn non_increasing_indices_rejected() {
        let srt = "2\n00:00:01,000 --> 00:00:02,000\na\n\n1\n00:00:03,000 --> 00:00:04,000\nb";
        assert!(parse_srt(srt).is_err());
    }

    #[test]
    fn crlf_and_empty_input() {
        assert!(parse_srt("").unwrap().is_empty());
        let cues = parse_srt("1\r\n00:00:00,100 --> 00:00:00,900\r\nhey\r\n\r\n").unwrap();
        assert_eq!(cues.len(), 1);
        assert_eq!(cues[0].text, "hey");
    }
}
