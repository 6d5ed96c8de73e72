//! Token vocabulary and the pre-trained embedding table feeding the models.
//!
//! Embedding files are text: one row per token, `token v1 .. vD`,
//! space-separated. Corpus tokens found in the file get dense ids from 2
//! upward (sorted order, so ids are stable for a given corpus and file);
//! id 0 is padding with a zero vector, id 1 is shared by all unknown tokens
//! and carries a seeded zero-mean random vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

#[derive(Debug, Clone)]
pub struct Vocab {
    index: BTreeMap<String, u32>,
    pub embedding_dim: usize,
}

impl Vocab {
    /// Id for a token: known tokens from 2 up, everything else UNK.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Number of embedding rows (pad + unk + known tokens).
    pub fn table_len(&self) -> usize {
        self.index.len() + 2
    }

    pub fn known_tokens(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }
}

/// Reads an embedding file into token -> vector, checking dimensionality.
pub fn load_embedding_file(path: impl AsRef<Path>, dim: usize) -> Result<BTreeMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let mut map = BTreeMap::new();
    for (no, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| Error::format(format!("{}:{}: empty row", path.display(), no + 1)))?;
        let values: Vec<f64> = fields
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    Error::format(format!("{}:{}: bad value {v:?}", path.display(), no + 1))
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::format(format!(
                "{}:{}: token {token:?} has {} values, expected {dim}",
                path.display(),
                no + 1,
                values.len()
            )));
        }
        map.insert(token.to_string(), values);
    }
    Ok(map)
}

/// Builds the vocabulary over `corpus_tokens` and the initial embedding
/// table. Returns the vocab and a row-major table of `table_len() * dim`.
pub fn build_vocab<'a>(
    corpus_tokens: impl IntoIterator<Item = &'a str>,
    embedding_path: impl AsRef<Path>,
    dim: usize,
    seed: u64,
) -> Result<(Vocab, Vec<f64>)> {
    let file_vectors = load_embedding_file(embedding_path, dim)?;
    let distinct: BTreeSet<&str> = corpus_tokens.into_iter().collect();
    let mut index = BTreeMap::new();
    let mut next_id = 2u32;
    for token in &distinct {
        if file_vectors.contains_key(*token) {
            index.insert(token.to_string(), next_id);
            next_id += 1;
        }
    }

    let vocab = Vocab {
        index,
        embedding_dim: dim,
    };
    let mut table = vec![0.0f64; vocab.table_len() * dim];
    // Row 0 stays zero (padding). Row 1: seeded zero-mean random vector
    // shared by all unknown tokens.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for d in 0..dim {
        table[dim + d] = rng.random_range(-0.08..0.08);
    }
    for (token, &id) in &vocab.index {
        let row = &file_vectors[token];
        table[id as usize * dim..(id as usize + 1) * dim].copy_from_slice(row);
    }
    Ok((vocab, table))
}

/// One known token per line; the line number (from 0) plus 2 is the id.
pub fn save_vocab(path: impl AsRef<Path>, vocab: &Vocab) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    let mut by_id: Vec<(&u32, &String)> = vocab.index.iter().map(|(t, i)| (i, t)).collect();
    by_id.sort();
    for (_, token) in by_id {
        writeln!(w, "{token}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_vocab(path: impl AsRef<Path>, dim: usize) -> Result<Vocab> {
    let mut index = BTreeMap::new();
    for (no, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let token = line?;
        if token.is_empty() {
            continue;
        }
        index.insert(token, no as u32 + 2);
    }
    Ok(Vocab {
        index,
        embedding_dim: dim,
    })
}
