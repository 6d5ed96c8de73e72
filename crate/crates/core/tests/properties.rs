//! Property tests for the spec-level invariants that hold across arbitrary
//! well-formed inputs.

use proptest::prelude::*;

use sleuth::align::{allocate_timestamps, dtw_align, Alignment};
use sleuth::corpus::{
    parse_srt, read_units_from, write_units_to, CaptionCue, SentenceKind, SentenceUnit, TokenLabel,
};

fn token_strategy() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn token_list(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token_strategy(), 0..=max)
}

fn unit_strategy() -> impl Strategy<Value = SentenceUnit> {
    (
        token_list(8),
        any::<bool>(),
        prop::option::of(0u32..4),
        any::<bool>(),
    )
        .prop_map(|(tokens, is_utterance, case_id, mark_first)| {
            let kind = if is_utterance {
                SentenceKind::Utterance
            } else {
                SentenceKind::SceneDescription
            };
            let token_labels: Vec<TokenLabel> = tokens
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    if i == 0 && mark_first {
                        TokenLabel::Perpetrator
                    } else {
                        TokenLabel::None
                    }
                })
                .collect();
            let gold_label = sleuth::corpus::derive_sentence_label(&token_labels);
            SentenceUnit {
                episode_id: "ep".into(),
                case_id,
                seq_index: 0,
                kind,
                speaker: match kind {
                    SentenceKind::Utterance => Some("SPEAKER".into()),
                    SentenceKind::SceneDescription => None,
                },
                tokens,
                token_labels,
                gold_label,
                start_ms: None,
                end_ms: None,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Interchange round-trip: serialize then reload yields identical units.
    #[test]
    fn interchange_round_trip(mut units in prop::collection::vec(unit_strategy(), 0..20)) {
        for (i, unit) in units.iter_mut().enumerate() {
            unit.seq_index = i;
        }
        let mut buf = Vec::new();
        write_units_to(&mut buf, &units).unwrap();
        let back = read_units_from(buf.as_slice()).unwrap();
        prop_assert_eq!(units, back);
    }

    /// Adding a perpetrator token never flips a sentence label 1 -> 0.
    #[test]
    fn label_derivation_monotone(labels in prop::collection::vec(
        prop::sample::select(vec![TokenLabel::None, TokenLabel::Suspect, TokenLabel::Other, TokenLabel::Perpetrator]),
        0..10,
    )) {
        let before = sleuth::corpus::derive_sentence_label(&labels);
        let mut extended = labels.clone();
        extended.push(TokenLabel::Perpetrator);
        let after = sleuth::corpus::derive_sentence_label(&extended);
        prop_assert!(after >= before);
        prop_assert_eq!(after, 1);
    }

    /// Well-formed SRT streams parse into exactly one cue per block.
    #[test]
    fn srt_cue_count_equals_block_count(blocks in prop::collection::vec(
        (1i64..50, 1i64..2000, prop::collection::vec("[a-z ]{1,20}", 1..3)),
        1..12,
    )) {
        let mut text = String::new();
        let mut t = 0i64;
        for (i, (gap, duration, lines)) in blocks.iter().enumerate() {
            t += gap;
            let start = t;
            let end = start + duration;
            t = end;
            let fmt = |ms: i64| format!(
                "{:02}:{:02}:{:02},{:03}",
                ms / 3_600_000, (ms / 60_000) % 60, (ms / 1000) % 60, ms % 1000
            );
            text.push_str(&format!("{}\n{} --> {}\n", i + 1, fmt(start), fmt(end)));
            for line in lines {
                text.push_str(line);
                text.push('\n');
            }
            text.push('\n');
        }
        let cues = parse_srt(&text).unwrap();
        prop_assert_eq!(cues.len(), blocks.len());
    }

    /// DTW pairs never cross, and raising the skip penalty never reduces
    /// the number of matched pairs.
    #[test]
    fn dtw_monotonicity(
        utterances in prop::collection::vec(token_list(4), 1..7),
        cues in prop::collection::vec(token_list(4), 1..7),
        penalty in 0.05f64..0.9,
        bump in 0.05f64..0.5,
    ) {
        let low = dtw_align(&utterances, &cues, penalty).unwrap();
        for w in low.pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        let high = dtw_align(&utterances, &cues, penalty + bump).unwrap();
        prop_assert!(high.pairs.len() >= low.pairs.len());
    }

    /// Timestamp allocation tiles every gap exactly: spans are contiguous,
    /// ordered, and cover the whole gap.
    #[test]
    fn allocation_tiles_gaps(
        token_counts in prop::collection::vec(0usize..8, 1..10),
        gap_start in 0i64..2000,
        gap_len in 0i64..5000,
    ) {
        let mut units: Vec<SentenceUnit> = Vec::new();
        // one timed utterance, then the untimed run, then another utterance
        let mk = |kind: SentenceKind, n: usize| SentenceUnit {
            episode_id: "ep".into(),
            case_id: None,
            seq_index: 0,
            kind,
            speaker: match kind {
                SentenceKind::Utterance => Some("A".into()),
                SentenceKind::SceneDescription => None,
            },
            tokens: (0..n).map(|i| format!("w{i}")).collect(),
            token_labels: vec![TokenLabel::None; n],
            gold_label: 0,
            start_ms: None,
            end_ms: None,
        };
        units.push(mk(SentenceKind::Utterance, 2));
        for &n in &token_counts {
            units.push(mk(SentenceKind::SceneDescription, n));
        }
        units.push(mk(SentenceKind::Utterance, 2));
        for (i, unit) in units.iter_mut().enumerate() {
            unit.seq_index = i;
        }
        let cues = vec![
            CaptionCue { index: 1, start_ms: 0, end_ms: gap_start, text: String::new() },
            CaptionCue {
                index: 2,
                start_ms: gap_start + gap_len,
                end_ms: gap_start + gap_len + 500,
                text: String::new(),
            },
        ];
        let alignment = Alignment {
            pairs: vec![(0, 0), (1, 1)],
            skipped_utterances: vec![],
            skipped_cues: vec![],
            total_cost: 0.0,
        };
        let timeline =
            allocate_timestamps(&units, &alignment, &cues, 0, gap_start + gap_len + 500).unwrap();
        let middle = &timeline.units[1..timeline.units.len() - 1];
        prop_assert_eq!(middle[0].start_ms.unwrap(), gap_start);
        prop_assert_eq!(middle[middle.len() - 1].end_ms.unwrap(), gap_start + gap_len);
        for w in middle.windows(2) {
            prop_assert_eq!(w[0].end_ms.unwrap(), w[1].start_ms.unwrap());
        }
        for unit in middle {
            prop_assert!(unit.end_ms.unwrap() >= unit.start_ms.unwrap());
        }
    }
}
