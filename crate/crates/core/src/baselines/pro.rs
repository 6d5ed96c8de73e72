//! Rule baseline: any sentence containing a personal, possessive, or
//! reflexive pronoun is labeled a perpetrator mention.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Default inventory of 31 pronouns (exact lowercase string matching).
pub const PRONOUNS: [&str; 31] = [
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves", "you", "your",
    "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers",
    "herself", "it", "its", "itself", "they", "them", "their", "theirs", "themselves",
];

pub fn default_lexicon() -> BTreeSet<String> {
    PRONOUNS.iter().map(|p| p.to_string()).collect()
}

/// One token per line, UTF-8; blank lines skipped.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let content = std::fs::read_to_string(path.as_ref())?;
    let set: BTreeSet<String> = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if set.is_empty() {
        return Err(Error::format("pronoun lexicon is empty"));
    }
    Ok(set)
}

/// 1 iff any token is in the lexicon.
pub fn pro_label(tokens: &[String], lexicon: &BTreeSet<String>) -> u8 {
    tokens.iter().any(|t| lexicon.contains(t.as_str())) as u8
}
