//! Subcommand implementations behind the `sleuth` binary: parse, align,
//! featurize, synth, train, eval, report. Stages communicate only through
//! the declared file formats, and every run writes a manifest beside its
//! outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::align::{allocate_timestamps, dtw_align, write_alignment_csv};
use crate::baselines::{
    crf_features, crf_traces, default_lexicon, load_lexicon, pro_label, train_crf, CrfCase,
    CrfConfig, CrfParams,
};
use crate::config::{EvalSplit, ModelKind, RunConfig};
use crate::corpus::{group_cases, parse_screenplay, parse_srt, read_units, write_units, SentenceKind};
use crate::error::{Error, Result};
use crate::eval::{
    make_splits, prf_minority, read_traces_csv, write_case_metrics_csv, write_curves_csv,
    write_epoch_csv, write_summary_csv, write_traces_csv, PredictionTrace, Prf, TraceRecord,
};
use crate::manifest::write_manifest;
use crate::nn::{
    evaluate, load_checkpoint, model_from_tensors, model_to_tensors, save_checkpoint, train,
    CaseData, EpochRecord, Model, NamedTensor,
};
use crate::signal::{
    build_bundle, load_wav, mfcc_frames, read_cache, save_vocab, write_cache, build_vocab,
    CacheRecord, VisualStore,
};
use crate::synthgen::generate;

fn require_path(value: &str, key: &str) -> Result<PathBuf> {
    if value.is_empty() {
        return Err(Error::config(format!("config key {key:?} is required")));
    }
    let path = PathBuf::from(value);
    if !path.exists() {
        return Err(Error::config(format!("{key} path {value:?} does not exist")));
    }
    Ok(path)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    if cfg.output_dir.is_empty() {
        return Err(Error::config("config key \"output_dir\" is required"));
    }
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn require_name(value: &str, key: &str) -> Result<String> {
    if value.is_empty() {
        return Err(Error::config(format!("config key {key:?} is required")));
    }
    Ok(value.to_string())
}

pub fn cmd_parse(cfg: &RunConfig) -> Result<()> {
    let screenplay = require_path(&cfg.screenplay, "screenplay")?;
    let episode_id = require_name(&cfg.episode_id, "episode_id")?;
    let out = output_dir(cfg)?;
    let text = std::fs::read_to_string(&screenplay)?;
    let units = parse_screenplay(&text, &episode_id)?;
    write_units(out.join(format!("{episode_id}.jsonl")), &units)?;
    write_manifest(&out, "parse", &cfg.echo(), &[("screenplay", &screenplay)])?;
    println!("parsed {} sentences from {}", units.len(), screenplay.display());
    Ok(())
}

pub fn cmd_align(cfg: &RunConfig) -> Result<()> {
    let corpus = require_path(&cfg.corpus, "corpus")?;
    let srt = require_path(&cfg.srt, "srt")?;
    let episode_id = require_name(&cfg.episode_id, "episode_id")?;
    let out = output_dir(cfg)?;

    let all_units = read_units(&corpus)?;
    let units: Vec<_> = all_units
        .iter()
        .filter(|u| u.episode_id == episode_id)
        .cloned()
        .collect();
    if units.is_empty() {
        return Err(Error::invalid(format!("corpus has no episode {episode_id:?}")));
    }
    let cues = parse_srt(&std::fs::read_to_string(&srt)?)?;
    let utterances: Vec<Vec<String>> = units
        .iter()
        .filter(|u| u.kind == SentenceKind::Utterance)
        .map(|u| u.tokens.clone())
        .collect();
    let cue_tokens: Vec<Vec<String>> = cues
        .iter()
        .map(|c| crate::corpus::tokenize(&c.text))
        .collect();
    let alignment = dtw_align(&utterances, &cue_tokens, cfg.skip_penalty)?;

    let episode_end = if cfg.episode_end_ms > 0 {
        cfg.episode_end_ms
    } else {
        cues.iter().map(|c| c.end_ms).max().unwrap_or(0)
    };
    let timeline = allocate_timestamps(&units, &alignment, &cues, cfg.episode_start_ms, episode_end)?;
    write_units(out.join(format!("{episode_id}_aligned.jsonl")), &timeline.units)?;

    let mut csv = BufWriter::new(File::create(out.join(format!("{episode_id}_alignment.csv")))?);
    write_alignment_csv(&mut csv, &alignment, &utterances, &cue_tokens, cfg.skip_penalty)?;
    csv.flush()?;
    write_manifest(
        &out,
        "align",
        &cfg.echo(),
        &[("corpus", corpus.as_path()), ("srt", srt.as_path())],
    )?;
    println!(
        "aligned {} utterances to {} cues (cost {:.4}, {} skipped utterances, {} skipped cues)",
        alignment.pairs.len(),
        cues.len(),
        alignment.total_cost,
        alignment.skipped_utterances.len(),
        alignment.skipped_cues.len()
    );
    Ok(())
}

fn cache_dir_path(cfg: &RunConfig) -> Result<PathBuf> {
    if cfg.cache_dir.is_empty() {
        return Err(Error::config("config key \"cache_dir\" is required"));
    }
    Ok(PathBuf::from(&cfg.cache_dir))
}

const EMBED_INIT_FILE: &str = "embeddings_init.wdnn";

pub fn cmd_featurize(cfg: &RunConfig) -> Result<()> {
    let corpus = require_path(&cfg.corpus, "corpus")?;
    let embeddings = require_path(&cfg.embeddings, "embeddings")?;
    let audio_dir = if cfg.use_audio {
        Some(require_path(&cfg.audio_dir, "audio_dir")?)
    } else {
        None
    };
    let visual_dir = if cfg.use_visual {
        Some(require_path(&cfg.visual_store, "visual_store")?)
    } else {
        None
    };
    let cache = cache_dir_path(cfg)?;
    std::fs::create_dir_all(&cache)?;

    let units = read_units(&corpus)?;
    let (vocab, table) = build_vocab(
        units.iter().flat_map(|u| u.tokens.iter().map(String::as_str)),
        &embeddings,
        cfg.emb_dim,
        cfg.seed,
    )?;
    save_vocab(cache.join("vocab.txt"), &vocab)?;
    save_checkpoint(
        cache.join(EMBED_INIT_FILE),
        &cfg.echo(),
        &[NamedTensor {
            name: "embedding".into(),
            dims: vec![vocab.table_len(), cfg.emb_dim],
            data: table,
        }],
    )?;

    let mut by_episode: BTreeMap<&str, Vec<&crate::corpus::SentenceUnit>> = BTreeMap::new();
    for unit in &units {
        by_episode.entry(&unit.episode_id).or_default().push(unit);
    }

    let dims = cfg.to_feature_dims();
    let mfcc_cfg = cfg.to_mfcc_config();
    let mut n_bundles = 0usize;
    for (episode_id, episode_units) in &by_episode {
        let (audio_frames, duration_ms) = match &audio_dir {
            Some(dir) => {
                let track = load_wav(dir.join(format!("{episode_id}.wav")))?;
                let frames = mfcc_frames(&track, &mfcc_cfg)?;
                (Some(frames), track.duration_ms())
            }
            None => (None, 0),
        };
        let visual = match &visual_dir {
            Some(dir) => Some(VisualStore::load(dir.join(format!("{episode_id}.txt")))?),
            None => None,
        };
        let records: Vec<CacheRecord> = episode_units
            .iter()
            .map(|unit| {
                let bundle = build_bundle(
                    unit,
                    &vocab,
                    &dims,
                    visual.as_ref(),
                    audio_frames.as_deref(),
                    &mfcc_cfg,
                    duration_ms,
                )?;
                Ok(CacheRecord {
                    case_id: unit.case_id,
                    seq_index: unit.seq_index,
                    bundle,
                })
            })
            .collect::<Result<_>>()?;
        n_bundles += records.len();
        write_cache(cache.join(format!("{episode_id}.wdf")), &dims, &records)?;
    }

    let mut inputs: Vec<(&str, &Path)> = vec![("corpus", corpus.as_path()), ("embeddings", embeddings.as_path())];
    if let Some(dir) = &audio_dir {
        inputs.push(("audio_dir", dir.as_path()));
    }
    if let Some(dir) = &visual_dir {
        inputs.push(("visual_store", dir.as_path()));
    }
    write_manifest(&cache, "featurize", &cfg.echo(), &inputs)?;
    println!(
        "featurized {} sentences across {} episodes into {}",
        n_bundles,
        by_episode.len(),
        cache.display()
    );
    Ok(())
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let spec = cfg.to_synth_spec();
    let truth = generate(&spec, &out)?;
    write_manifest(&out, "synth", &cfg.echo(), &[])?;
    println!(
        "generated {} sentences ({} positive) across {} episodes into {}",
        truth.total_sentences,
        truth.total_positives,
        spec.n_episodes,
        out.display()
    );
    Ok(())
}

/// All cases in the cache, keyed `episode:case`, sorted by key.
fn load_cases(cache: &Path) -> Result<Vec<CaseData>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(cache)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "wdf"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no feature caches; run featurize first",
            cache.display()
        )));
    }
    let mut cases: BTreeMap<(String, u32), Vec<(usize, crate::signal::FeatureBundle)>> = BTreeMap::new();
    for file in &files {
        let episode_id = file
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_default();
        let (_, records) = read_cache(file)?;
        for record in records {
            if let Some(case_id) = record.case_id {
                cases
                    .entry((episode_id.clone(), case_id))
                    .or_default()
                    .push((record.seq_index, record.bundle));
            }
        }
    }
    Ok(cases
        .into_iter()
        .map(|((episode, case_id), mut sentences)| {
            sentences.sort_by_key(|(seq, _)| *seq);
            CaseData {
                key: format!("{episode}:{case_id}"),
                bundles: sentences.into_iter().map(|(_, b)| b).collect(),
            }
        })
        .collect())
}

fn load_embedding_init(cache: &Path) -> Result<(usize, Vec<f64>)> {
    let (_, tensors) = load_checkpoint(cache.join(EMBED_INIT_FILE))?;
    let emb = tensors
        .into_iter()
        .find(|t| t.name == "embedding")
        .ok_or_else(|| Error::format("embedding init file has no embedding tensor"))?;
    Ok((emb.dims[0], emb.data))
}

struct SplitCases {
    train: Vec<CaseData>,
    test: Vec<CaseData>,
    held_out: Vec<CaseData>,
}

fn split_cases(cfg: &RunConfig, mut cases: Vec<CaseData>) -> Result<SplitCases> {
    let keys: Vec<String> = cases.iter().map(|c| c.key.clone()).collect();
    let plan = make_splits(&keys, cfg.seed, cfg.held_out, cfg.folds, cfg.test_per_fold)?;
    if cfg.fold >= plan.folds.len() {
        return Err(Error::config(format!(
            "fold {} out of range ({} folds)",
            cfg.fold,
            plan.folds.len()
        )));
    }
    let fold = &plan.folds[cfg.fold];
    let mut map: BTreeMap<String, CaseData> =
        cases.drain(..).map(|c| (c.key.clone(), c)).collect();
    let take = |map: &mut BTreeMap<String, CaseData>, keys: &[String]| -> Vec<CaseData> {
        keys.iter().filter_map(|k| map.remove(k)).collect()
    };
    let held_out = take(&mut map, &plan.held_out);
    let test = take(&mut map, &fold.test);
    let train = take(&mut map, &fold.train);
    Ok(SplitCases {
        train,
        test,
        held_out,
    })
}

fn write_epoch_log(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_epoch_csv(&mut w, records)?;
    w.flush()?;
    Ok(())
}

fn write_train_summary(path: &Path, rows: &[(usize, usize, f64, f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "run,best_epoch,precision,recall,f1")?;
    for (run, epoch, p, r, f1) in rows {
        writeln!(w, "{run},{epoch},{p},{r},{f1}")?;
    }
    let n = rows.len() as f64;
    let mp = rows.iter().map(|r| r.2).sum::<f64>() / n;
    let mr = rows.iter().map(|r| r.3).sum::<f64>() / n;
    let mf = rows.iter().map(|r| r.4).sum::<f64>() / n;
    writeln!(w, "mean,,{mp},{mr},{mf}")?;
    w.flush()?;
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let cache = require_path(&cfg.cache_dir, "cache_dir")?;
    let out = output_dir(cfg)?;
    let checkpoint_path = require_name(&cfg.checkpoint, "checkpoint")?;
    let cases = load_cases(&cache)?;
    let split = split_cases(cfg, cases)?;
    let echo = cfg.echo();

    match cfg.model {
        ModelKind::Lstm | ModelKind::Mlp => {
            let (vocab_size, table) = load_embedding_init(&cache)?;
            let model_cfg = cfg.to_model_config(vocab_size);
            let kind = cfg.head_kind().expect("lstm/mlp has a head");
            let output = train(
                &model_cfg,
                kind,
                Some(&table),
                &split.train,
                &split.test,
                &cfg.to_train_config(),
            )?;
            write_epoch_log(&out.join("epochs.csv"), &output.epoch_log)?;
            let rows: Vec<(usize, usize, f64, f64, f64)> = output
                .runs
                .iter()
                .map(|r| (r.run, r.best_epoch, r.precision, r.recall, r.f1))
                .collect();
            write_train_summary(&out.join("train_summary.csv"), &rows)?;
            for run in &output.runs {
                save_checkpoint(
                    out.join(format!("checkpoint_run{}.wdnn", run.run)),
                    &echo,
                    &model_to_tensors(&run.params),
                )?;
            }
            let best = output.best_run();
            save_checkpoint(&checkpoint_path, &echo, &model_to_tensors(&best.params))?;
            println!(
                "trained {} runs; best f1 {:.4} (run {}, epoch {}); mean f1 {:.4}",
                output.runs.len(),
                best.f1,
                best.run,
                best.best_epoch,
                output.mean_f1()
            );
        }
        ModelKind::Crf => {
            let (_, table) = load_embedding_init(&cache)?;
            let crf_cfg = crf_config_of(cfg);
            let to_crf = |cases: &[CaseData]| -> Vec<CrfCase> {
                cases
                    .iter()
                    .map(|c| CrfCase {
                        key: c.key.clone(),
                        features: c.bundles.iter().map(|b| crf_features(b, &table, &crf_cfg)).collect(),
                        gold: c.bundles.iter().map(|b| b.gold_label).collect(),
                    })
                    .collect()
            };
            let train_cases = to_crf(&split.train);
            let test_cases = to_crf(&split.test);
            let output = train_crf(
                &crf_cfg,
                &train_cases,
                &test_cases,
                cfg.epochs,
                cfg.batch_cases,
                cfg.seed,
                cfg.runs,
                &crate::nn::AdamConfig {
                    learning_rate: cfg.effective_learning_rate(),
                    beta1: cfg.beta1,
                    beta2: cfg.beta2,
                    epsilon: cfg.epsilon,
                },
            )?;
            let epoch_records: Vec<EpochRecord> = output
                .epoch_log
                .iter()
                .map(|r| EpochRecord {
                    run: r.run,
                    epoch: r.epoch,
                    loss: r.loss,
                    precision: r.precision,
                    recall: r.recall,
                    f1: r.f1,
                })
                .collect();
            write_epoch_log(&out.join("epochs.csv"), &epoch_records)?;
            let rows: Vec<(usize, usize, f64, f64, f64)> = output
                .runs
                .iter()
                .map(|r| (r.run, r.best_epoch, r.precision, r.recall, r.f1))
                .collect();
            write_train_summary(&out.join("train_summary.csv"), &rows)?;
            for run in &output.runs {
                save_checkpoint(
                    out.join(format!("checkpoint_run{}.wdnn", run.run)),
                    &echo,
                    &run.params.to_tensors(),
                )?;
            }
            let best = output.best_run();
            save_checkpoint(&checkpoint_path, &echo, &best.params.to_tensors())?;
            println!(
                "trained crf; best f1 {:.4} (run {}, epoch {})",
                best.f1, best.run, best.best_epoch
            );
        }
        ModelKind::Pro => {
            return Err(Error::config("the pro baseline is parameter-free; nothing to train"));
        }
    }
    write_manifest(&out, "train", &echo, &[("cache_dir", cache.as_path())])?;
    Ok(())
}

fn crf_config_of(cfg: &RunConfig) -> CrfConfig {
    CrfConfig {
        window: cfg.crf_window,
        emb_dim: cfg.emb_dim,
        multimodal: cfg.crf_multimodal,
        visual_dim: cfg.visual_dim,
        audio_dim: cfg.audio_dim(),
        l2: cfg.crf_l2,
    }
}

fn select_split(cfg: &RunConfig, split: SplitCases) -> Vec<CaseData> {
    match cfg.eval_split {
        EvalSplit::Test => split.test,
        EvalSplit::HeldOut => split.held_out,
        EvalSplit::Train => split.train,
        EvalSplit::All => {
            let mut all = split.train;
            all.extend(split.test);
            all.extend(split.held_out);
            all.sort_by(|a, b| a.key.cmp(&b.key));
            all
        }
    }
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let out = output_dir(cfg)?;
    let traces: Vec<PredictionTrace> = match cfg.model {
        ModelKind::Pro => {
            let corpus = require_path(&cfg.corpus, "corpus")?;
            let units = read_units(&corpus)?;
            let lexicon = if cfg.lexicon.is_empty() {
                default_lexicon()
            } else {
                load_lexicon(require_path(&cfg.lexicon, "lexicon")?)?
            };
            let cases = group_cases(&units, &BTreeMap::new());
            let keys: Vec<String> = cases.iter().map(|c| c.key()).collect();
            let plan = make_splits(&keys, cfg.seed, cfg.held_out, cfg.folds, cfg.test_per_fold)?;
            let selected: Vec<String> = match cfg.eval_split {
                EvalSplit::Test => plan.folds[cfg.fold].test.clone(),
                EvalSplit::HeldOut => plan.held_out.clone(),
                EvalSplit::Train => plan.folds[cfg.fold].train.clone(),
                EvalSplit::All => keys.clone(),
            };
            cases
                .iter()
                .filter(|c| selected.contains(&c.key()))
                .map(|case| PredictionTrace {
                    case_key: case.key(),
                    records: case
                        .sentences
                        .iter()
                        .enumerate()
                        .map(|(i, unit)| {
                            let predicted = pro_label(&unit.tokens, &lexicon);
                            TraceRecord {
                                seq_index: i,
                                probability: predicted as f64,
                                predicted,
                                gold: unit.gold_label,
                            }
                        })
                        .collect(),
                })
                .collect()
        }
        ModelKind::Crf => {
            let cache = require_path(&cfg.cache_dir, "cache_dir")?;
            let checkpoint = require_path(&cfg.checkpoint, "checkpoint")?;
            let cases = select_split(cfg, split_cases(cfg, load_cases(&cache)?)?);
            let (_, table) = load_embedding_init(&cache)?;
            let crf_cfg = crf_config_of(cfg);
            let (_, tensors) = load_checkpoint(&checkpoint)?;
            let params = CrfParams::from_tensors(&tensors, crf_cfg.feature_dim())?;
            let crf_cases: Vec<CrfCase> = cases
                .iter()
                .map(|c| CrfCase {
                    key: c.key.clone(),
                    features: c.bundles.iter().map(|b| crf_features(b, &table, &crf_cfg)).collect(),
                    gold: c.bundles.iter().map(|b| b.gold_label).collect(),
                })
                .collect();
            crf_traces(&crf_cases, &params)?
        }
        ModelKind::Lstm | ModelKind::Mlp => {
            let cache = require_path(&cfg.cache_dir, "cache_dir")?;
            let checkpoint = require_path(&cfg.checkpoint, "checkpoint")?;
            let cases = select_split(cfg, split_cases(cfg, load_cases(&cache)?)?);
            let (_, tensors) = load_checkpoint(&checkpoint)?;
            let emb = tensors
                .iter()
                .find(|t| t.name == "embedding")
                .ok_or_else(|| Error::format("checkpoint has no embedding tensor"))?;
            let model_cfg = cfg.to_model_config(emb.dims[0]);
            let kind = cfg.head_kind().expect("lstm/mlp has a head");
            let params = model_from_tensors(&model_cfg, kind, &tensors)?;
            let model = Model {
                cfg: model_cfg,
                params,
            };
            evaluate(&model, &cases)?
        }
    };

    write_eval_outputs(cfg, &out, &traces)?;

    let mut inputs: Vec<(&str, PathBuf)> = Vec::new();
    if !cfg.corpus.is_empty() {
        inputs.push(("corpus", PathBuf::from(&cfg.corpus)));
    }
    if !cfg.cache_dir.is_empty() {
        inputs.push(("cache_dir", PathBuf::from(&cfg.cache_dir)));
    }
    if !cfg.checkpoint.is_empty() && Path::new(&cfg.checkpoint).exists() {
        inputs.push(("checkpoint", PathBuf::from(&cfg.checkpoint)));
    }
    let input_refs: Vec<(&str, &Path)> = inputs.iter().map(|(l, p)| (*l, p.as_path())).collect();
    write_manifest(&out, "eval", &cfg.echo(), &input_refs)?;
    let prf = prf_minority(&traces);
    println!(
        "evaluated {} cases: precision {:.4}, recall {:.4}, f1 {:.4}",
        traces.len(),
        prf.precision,
        prf.recall,
        prf.f1
    );
    Ok(())
}

/// Writes traces plus every derived report so `report` can reproduce them
/// from the persisted traces alone.
fn write_eval_outputs(cfg: &RunConfig, out: &Path, traces: &[PredictionTrace]) -> Result<()> {
    let mut w = BufWriter::new(File::create(out.join("traces.csv"))?);
    write_traces_csv(&mut w, traces)?;
    w.flush()?;
    write_reports(cfg, out, traces, None)
}

fn write_reports(
    cfg: &RunConfig,
    out: &Path,
    traces: &[PredictionTrace],
    heldout: Option<&[PredictionTrace]>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(out.join("case_metrics.csv"))?);
    write_case_metrics_csv(&mut w, traces)?;
    w.flush()?;

    let mut w = BufWriter::new(File::create(out.join("curves.csv"))?);
    write_curves_csv(&mut w, traces, 100)?;
    w.flush()?;

    let prf = prf_minority(traces);
    let (crossval, heldout_prf): (Option<Prf>, Option<Prf>) = match heldout {
        Some(h) => (Some(prf), Some(prf_minority(h))),
        None => match cfg.eval_split {
            EvalSplit::HeldOut => (None, Some(prf)),
            _ => (Some(prf), None),
        },
    };
    let mut w = BufWriter::new(File::create(out.join("summary.csv"))?);
    write_summary_csv(
        &mut w,
        cfg.model.as_str(),
        (cfg.use_text, cfg.use_visual, cfg.use_audio),
        crossval,
        heldout_prf,
    )?;
    w.flush()?;
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let traces_path = require_path(&cfg.traces, "traces")?;
    let out = output_dir(cfg)?;
    let traces = read_traces_csv(File::open(&traces_path)?)?;
    let heldout = if cfg.traces_heldout.is_empty() {
        None
    } else {
        let path = require_path(&cfg.traces_heldout, "traces_heldout")?;
        Some(read_traces_csv(File::open(path)?)?)
    };
    write_reports(cfg, &out, &traces, heldout.as_deref())?;
    let mut inputs: Vec<(&str, PathBuf)> = vec![("traces", traces_path.clone())];
    if !cfg.traces_heldout.is_empty() {
        inputs.push(("traces_heldout", PathBuf::from(&cfg.traces_heldout)));
    }
    let input_refs: Vec<(&str, &Path)> = inputs.iter().map(|(l, p)| (*l, p.as_path())).collect();
    write_manifest(&out, "report", &cfg.echo(), &input_refs)?;
    println!("report written to {}", out.display());
    Ok(())
}
