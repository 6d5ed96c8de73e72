//! Python bindings for the main types and operations: parsing, alignment,
//! MFCC extraction, metrics, splits, the pronoun baseline, and the
//! synthetic-episode generator.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use sleuth::align;
use sleuth::baselines;
use sleuth::corpus::{self, SentenceKind, SentenceUnit, TokenLabel};
use sleuth::eval;
use sleuth::signal::{self, AudioTrack, MfccConfig};
use sleuth::synthgen;

fn err(e: sleuth::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn unit_to_dict<'py>(py: Python<'py>, unit: &SentenceUnit) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("episode_id", &unit.episode_id)?;
    d.set_item("case_id", unit.case_id)?;
    d.set_item("seq_index", unit.seq_index)?;
    d.set_item(
        "kind",
        match unit.kind {
            SentenceKind::Utterance => "utterance",
            SentenceKind::SceneDescription => "scene_description",
        },
    )?;
    d.set_item("speaker", unit.speaker.as_deref())?;
    d.set_item("tokens", &unit.tokens)?;
    let labels: Vec<&str> = unit
        .token_labels
        .iter()
        .map(|l| match l {
            TokenLabel::Perpetrator => "perpetrator",
            TokenLabel::Suspect => "suspect",
            TokenLabel::Other => "other",
            TokenLabel::None => "none",
        })
        .collect();
    d.set_item("token_labels", labels)?;
    d.set_item("gold_label", unit.gold_label)?;
    d.set_item("start_ms", unit.start_ms)?;
    d.set_item("end_ms", unit.end_ms)?;
    Ok(d)
}

/// Lowercase whitespace tokenization with edge punctuation stripped.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

/// Parse screenplay text into a list of sentence dicts.
#[pyfunction]
fn parse_screenplay<'py>(py: Python<'py>, text: &str, episode_id: &str) -> PyResult<Bound<'py, PyList>> {
    let units = corpus::parse_screenplay(text, episode_id).map_err(err)?;
    let dicts: Vec<Bound<'py, PyDict>> = units
        .iter()
        .map(|u| unit_to_dict(py, u))
        .collect::<PyResult<_>>()?;
    PyList::new(py, dicts)
}

/// Parse an SRT stream into cue dicts (index, start_ms, end_ms, text).
#[pyfunction]
fn parse_srt<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyList>> {
    let cues = corpus::parse_srt(text).map_err(err)?;
    let dicts: Vec<Bound<'py, PyDict>> = cues
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("index", c.index)?;
            d.set_item("start_ms", c.start_ms)?;
            d.set_item("end_ms", c.end_ms)?;
            d.set_item("text", &c.text)?;
            Ok(d)
        })
        .collect::<PyResult<_>>()?;
    PyList::new(py, dicts)
}

/// Local DTW match cost: 1 - Jaccard similarity of the token sets.
#[pyfunction]
fn cue_cost(sentence_tokens: Vec<String>, cue_tokens: Vec<String>) -> f64 {
    align::cue_cost(&sentence_tokens, &cue_tokens)
}

/// Minimum-cost monotone alignment between utterance and cue token lists.
#[pyfunction]
#[pyo3(signature = (utterances, cues, skip_penalty = 0.5))]
fn dtw_align<'py>(
    py: Python<'py>,
    utterances: Vec<Vec<String>>,
    cues: Vec<Vec<String>>,
    skip_penalty: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let alignment = align::dtw_align(&utterances, &cues, skip_penalty).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("pairs", alignment.pairs)?;
    d.set_item("skipped_utterances", alignment.skipped_utterances)?;
    d.set_item("skipped_cues", alignment.skipped_cues)?;
    d.set_item("total_cost", alignment.total_cost)?;
    Ok(d)
}

/// 13-coefficient MFCC frames at a 5 ms hop for mono samples in [-1, 1].
#[pyfunction]
#[pyo3(signature = (samples, sample_rate = 16000))]
fn mfcc_frames(samples: Vec<f64>, sample_rate: u32) -> PyResult<Vec<Vec<f64>>> {
    let track = AudioTrack {
        samples,
        sample_rate,
    };
    signal::mfcc_frames(&track, &MfccConfig::default()).map_err(err)
}

/// Five MFCC frames sampled across [start_ms, end_ms], concatenated.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate, start_ms, end_ms))]
fn sentence_audio_feature(
    samples: Vec<f64>,
    sample_rate: u32,
    start_ms: i64,
    end_ms: i64,
) -> PyResult<Vec<f64>> {
    let track = AudioTrack {
        samples,
        sample_rate,
    };
    signal::sentence_audio_feature(&track, &MfccConfig::default(), start_ms, end_ms).map_err(err)
}

/// Pooled minority-class precision/recall/f1 over (predicted, gold) labels.
#[pyfunction]
fn prf_minority<'py>(py: Python<'py>, predicted: Vec<u8>, gold: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    if predicted.len() != gold.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    let trace = eval::PredictionTrace {
        case_key: "py".into(),
        records: predicted
            .iter()
            .zip(&gold)
            .enumerate()
            .map(|(i, (&p, &g))| eval::TraceRecord {
                seq_index: i,
                probability: p as f64,
                predicted: p,
                gold: g,
            })
            .collect(),
    };
    let prf = eval::prf_minority(std::slice::from_ref(&trace));
    let d = PyDict::new(py);
    d.set_item("precision", prf.precision)?;
    d.set_item("recall", prf.recall)?;
    d.set_item("f1", prf.f1)?;
    d.set_item("precision_degenerate", prf.precision_degenerate)?;
    d.set_item("recall_degenerate", prf.recall_degenerate)?;
    Ok(d)
}

/// Cohen's kappa between two categorical label sequences.
#[pyfunction]
fn cohen_kappa(labels_a: Vec<u32>, labels_b: Vec<u32>) -> PyResult<f64> {
    eval::cohen_kappa(&labels_a, &labels_b).map_err(err)
}

/// 1 iff any token is a pronoun of the default 31-entry inventory.
#[pyfunction]
fn pro_label(tokens: Vec<String>) -> u8 {
    baselines::pro_label(&tokens, &baselines::default_lexicon())
}

/// Sentence label from token labels: 1 iff any token is "perpetrator".
#[pyfunction]
fn derive_sentence_label(token_labels: Vec<String>) -> PyResult<u8> {
    let labels: Vec<TokenLabel> = token_labels
        .iter()
        .map(|l| match l.as_str() {
            "perpetrator" => Ok(TokenLabel::Perpetrator),
            "suspect" => Ok(TokenLabel::Suspect),
            "other" => Ok(TokenLabel::Other),
            "none" => Ok(TokenLabel::None),
            _ => Err(PyValueError::new_err(format!("unknown token label {l:?}"))),
        })
        .collect::<PyResult<_>>()?;
    Ok(corpus::derive_sentence_label(&labels))
}

/// Deterministic held-out/fold split plan over case ids.
#[pyfunction]
#[pyo3(signature = (case_ids, seed, held_out = 6, folds = 5, test_per_fold = 6))]
fn make_splits<'py>(
    py: Python<'py>,
    case_ids: Vec<String>,
    seed: u64,
    held_out: usize,
    folds: usize,
    test_per_fold: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let plan = eval::make_splits(&case_ids, seed, held_out, folds, test_per_fold).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("held_out", plan.held_out)?;
    let folds: Vec<Bound<'py, PyDict>> = plan
        .folds
        .iter()
        .map(|f| {
            let fd = PyDict::new(py);
            fd.set_item("train", &f.train)?;
            fd.set_item("test", &f.test)?;
            Ok(fd)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("folds", folds)?;
    Ok(d)
}

/// Per-case corpus statistics from interchange-shaped unit dicts is covered
/// by the CLI; here we expose the generator for quick experiments.
#[pyfunction]
#[pyo3(signature = (out_dir, episodes = 20, sentences_min = 40, sentences_max = 60,
                    mention_rate = 0.2, history_lag = 0, seed = 1, visual_dim = 1536))]
#[allow(clippy::too_many_arguments)]
fn generate_synthetic<'py>(
    py: Python<'py>,
    out_dir: &str,
    episodes: usize,
    sentences_min: usize,
    sentences_max: usize,
    mention_rate: f64,
    history_lag: usize,
    seed: u64,
    visual_dim: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = synthgen::SynthSpec {
        n_episodes: episodes,
        sentences_per_case: (sentences_min, sentences_max),
        mention_rate,
        history_lag,
        seed,
        visual_dim,
        ..synthgen::SynthSpec::default()
    };
    let truth = synthgen::generate(&spec, out_dir).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("total_sentences", truth.total_sentences)?;
    d.set_item("total_positives", truth.total_positives)?;
    d.set_item("cases", truth.cases.len())?;
    Ok(d)
}

/// Exact optimal f1 on a generated dataset for the memoryless or
/// full-history predictor.
#[pyfunction]
#[pyo3(signature = (dataset_dir, memoryless = true))]
fn bayes_rate(dataset_dir: &str, memoryless: bool) -> PyResult<f64> {
    synthgen::bayes_rate(dataset_dir, memoryless).map_err(err)
}

/// Corpus statistics over an interchange file, as a dict.
#[pyfunction]
fn corpus_stats<'py>(py: Python<'py>, corpus_path: &str) -> PyResult<Bound<'py, PyDict>> {
    let units = corpus::read_units(corpus_path).map_err(err)?;
    let cases = corpus::group_cases(&units, &BTreeMap::new());
    let stats = corpus::corpus_stats(&cases).map_err(err)?;
    let d = PyDict::new(py);
    let row = |r: corpus::StatRow| (r.min, r.max, r.avg);
    d.set_item("total_cases", stats.total_cases)?;
    d.set_item("episodes_with_one_case", stats.episodes_with_one_case)?;
    d.set_item("episodes_with_two_cases", stats.episodes_with_two_cases)?;
    d.set_item("sentences", row(stats.sentences))?;
    d.set_item("sentences_with_perpetrator", row(stats.sentences_with_perpetrator))?;
    d.set_item("scene_descriptions", row(stats.scene_descriptions))?;
    d.set_item("spoken_utterances", row(stats.spoken_utterances))?;
    d.set_item("characters", row(stats.characters))?;
    Ok(d)
}

#[pymodule]
fn sleuth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(parse_screenplay, m)?)?;
    m.add_function(wrap_pyfunction!(parse_srt, m)?)?;
    m.add_function(wrap_pyfunction!(cue_cost, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_align, m)?)?;
    m.add_function(wrap_pyfunction!(mfcc_frames, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_audio_feature, m)?)?;
    m.add_function(wrap_pyfunction!(prf_minority, m)?)?;
    m.add_function(wrap_pyfunction!(cohen_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(pro_label, m)?)?;
    m.add_function(wrap_pyfunction!(derive_sentence_label, m)?)?;
    m.add_function(wrap_pyfunction!(make_splits, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_rate, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_stats, m)?)?;
    Ok(())
}
