//! JSON-lines interchange: one `SentenceUnit` object per line with exactly
//! the fields of the type, snake_case keys. Reading validates invariants.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::{validate_units, SentenceUnit};
use crate::error::{Error, Result};

pub fn write_units_to(mut writer: impl Write, units: &[SentenceUnit]) -> Result<()> {
    for unit in units {
        serde_json::to_writer(&mut writer, unit)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_units(path: impl AsRef<Path>, units: &[SentenceUnit]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_units_to(&mut w, units)?;
    w.flush()?;
    Ok(())
}

pub fn read_units_from(reader: impl Read) -> Result<Vec<SentenceUnit>> {
    let mut units = Vec::new();
    for (no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let unit: SentenceUnit = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("interchange line {}: {e}", no + 1)))?;
        units.push(unit);
    }
    validate_units(&units)?;
    Ok(units)
}

pub fn read_units(path: impl AsRef<Path>) -> Result<Vec<SentenceUnit>> {
    read_units_from(File::open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_screenplay;

    #[test]
    fn round_trip_preserves_units() {
        let text = "## Scene\nNICK: okay, Warrick, hit it. Try again!\n(WARRICK starts the crane support)\n";
        let units = parse_screenplay(text, "s01e01").unwrap();
        let mut buf = Vec::new();
        write_units_to(&mut buf, &units).unwrap();
        let back = read_units_from(buf.as_slice()).unwrap();
        assert_eq!(units, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let line = r#"{"episode_id":"e","case_id":null,"seq_index":0,"kind":"utterance","speaker":"A","tokens":[],"token_labels":[],"gold_label":0,"start_ms":null,"end_ms":null,"bogus":1}"#;
        assert!(read_units_from(line.as_bytes()).is_err());
    }

    #[test]
    fn invalid_units_rejected_on_read() {
        // gold_label inconsistent with token labels
        let line = r#"{"episode_id":"e","case_id":null,"seq_index":0,"kind":"utterance","speaker":"A","tokens":["x"],"token_labels":["none"],"gold_label":1,"start_ms":null,"end_ms":null}"#;
        assert!(read_units_from(line.as_bytes()).is_err());
    }
}
