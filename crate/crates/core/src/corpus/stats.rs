//! Per-case corpus statistics: sentence/description/utterance/character
//! counts and crime-type totals.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{SentenceKind, SentenceUnit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrimeType {
    Murder,
    Accident,
    Suicide,
    Other,
}

/// One self-contained storyline within an episode.
#[derive(Debug, Clone)]
pub struct Case {
    pub episode_id: String,
    pub case_id: u32,
    pub crime_type: CrimeType,
    pub sentences: Vec<SentenceUnit>,
}

impl Case {
    pub fn key(&self) -> String {
        format!("{}:{}", self.episode_id, self.case_id)
    }
}

/// Groups interchange units into cases by (episode, case id). Units with no
/// case id are irrelevant to every case and are dropped. Crime types default
/// to `Other` unless supplied.
pub fn group_cases(
    units: &[SentenceUnit],
    crime_types: &BTreeMap<(String, u32), CrimeType>,
) -> Vec<Case> {
    let mut map: BTreeMap<(String, u32), Vec<SentenceUnit>> = BTreeMap::new();
    for unit in units {
        if let Some(case_id) = unit.case_id {
            map.entry((unit.episode_id.clone(), case_id))
                .or_default()
                .push(unit.clone());
        }
    }
    map.into_iter()
        .map(|((episode_id, case_id), sentences)| Case {
            crime_type: crime_types
                .get(&(episode_id.clone(), case_id))
                .copied()
                .unwrap_or(CrimeType::Other),
            episode_id,
            case_id,
            sentences,
        })
        .collect()
}

/// min / max / mean of one per-case quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatRow {
    pub min: u64,
    pub max: u64,
    pub avg: f64,
}

impl StatRow {
    fn from_counts(counts: &[u64]) -> Self {
        let min = *counts.iter().min().expect("non-empty");
        let max = *counts.iter().max().expect("non-empty");
        let avg = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
        StatRow { min, max, avg }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsTable {
    pub episodes_with_one_case: usize,
    pub episodes_with_two_cases: usize,
    pub total_cases: usize,
    pub sentences: StatRow,
    pub sentences_with_perpetrator: StatRow,
    pub scene_descriptions: StatRow,
    pub spoken_utterances: StatRow,
    pub characters: StatRow,
    pub crime_counts: BTreeMap<CrimeType, usize>,
}

/// Computes the statistics table over a non-empty case list. Characters are
/// counted as distinct speaker strings per case.
pub fn corpus_stats(cases: &[Case]) -> Result<StatsTable> {
    if cases.is_empty() {
        return Err(Error::invalid("corpus_stats: empty case list"));
    }
    let mut sentences = Vec::new();
    let mut with_perp = Vec::new();
    let mut descriptions = Vec::new();
    let mut utterances = Vec::new();
    let mut characters = Vec::new();
    let mut crime_counts: BTreeMap<CrimeType, usize> = BTreeMap::new();
    let mut cases_per_episode: BTreeMap<&str, usize> = BTreeMap::new();

    for case in cases {
        sentences.push(case.sentences.len() as u64);
        with_perp.push(case.sentences.iter().filter(|s| s.gold_label == 1).count() as u64);
        descriptions.push(
            case.sentences
                .iter()
                .filter(|s| s.kind == SentenceKind::SceneDescription)
                .count() as u64,
        );
        utterances.push(
            case.sentences
                .iter()
                .filter(|s| s.kind == SentenceKind::Utterance)
                .count() as u64,
        );
        let speakers: BTreeSet<&str> = case
            .sentences
            .iter()
            .filter_map(|s| s.speaker.as_deref())
            .collect();
        characters.push(speakers.len() as u64);
        *crime_counts.entry(case.crime_type).or_default() += 1;
        *cases_per_episode.entry(&case.episode_id).or_default() += 1;
    }

    Ok(StatsTable {
        episodes_with_one_case: cases_per_episode.values().filter(|&&n| n == 1).count(),
        episodes_with_two_cases: cases_per_episode.values().filter(|&&n| n >= 2).count(),
        total_cases: cases.len(),
        sentences: StatRow::from_counts(&sentences),
        sentences_with_perpetrator: StatRow::from_counts(&with_perp),
        scene_descriptions: StatRow::from_counts(&descriptions),
        spoken_utterances: StatRow::from_counts(&utterances),
        characters: StatRow::from_counts(&characters),
        crime_counts,
    })
}
