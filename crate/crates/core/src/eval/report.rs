//! CSV emission and re-loading: traces, per-case metrics, curve points,
//! the table-shaped summary, and per-epoch training logs.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::eval::{
    final_decile_precision, first_correct_index, interval_curves, prf_minority, PredictionTrace,
    Prf, TraceRecord,
};
use crate::nn::EpochRecord;

pub fn write_traces_csv(mut w: impl Write, traces: &[PredictionTrace]) -> Result<()> {
    writeln!(w, "case,seq_index,probability,predicted,gold")?;
    for trace in traces {
        for r in &trace.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                trace.case_key, r.seq_index, r.probability, r.predicted, r.gold
            )?;
        }
    }
    Ok(())
}

pub fn read_traces_csv(reader: impl std::io::Read) -> Result<Vec<PredictionTrace>> {
    let mut traces: Vec<PredictionTrace> = Vec::new();
    for (no, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if no == 0 {
            if line != "case,seq_index,probability,predicted,gold" {
                return Err(Error::format(format!("traces csv: unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::format(format!("traces csv line {}: {line:?}", no + 1)));
        }
        let parse_err = |what: &str| Error::format(format!("traces csv line {}: bad {what}", no + 1));
        let record = TraceRecord {
            seq_index: fields[1].parse().map_err(|_| parse_err("seq_index"))?,
            probability: fields[2].parse().map_err(|_| parse_err("probability"))?,
            predicted: fields[3].parse().map_err(|_| parse_err("predicted"))?,
            gold: fields[4].parse().map_err(|_| parse_err("gold"))?,
        };
        match traces.last_mut() {
            Some(t) if t.case_key == fields[0] => t.records.push(record),
            _ => traces.push(PredictionTrace {
                case_key: fields[0].to_string(),
                records: vec![record],
            }),
        }
    }
    Ok(traces)
}

pub fn write_case_metrics_csv(mut w: impl Write, traces: &[PredictionTrace]) -> Result<()> {
    writeln!(
        w,
        "case,sentences,gold_positives,precision,recall,f1,final_decile_precision,first_correct"
    )?;
    for trace in traces {
        let prf = prf_minority(std::slice::from_ref(trace));
        let decile = final_decile_precision(trace)
            .map(|p| p.to_string())
            .unwrap_or_default();
        let first = first_correct_index(trace)
            .map(|i| i.to_string())
            .unwrap_or_default();
        let positives = trace.records.iter().filter(|r| r.gold == 1).count();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            trace.case_key,
            trace.records.len(),
            positives,
            prf.precision,
            prf.recall,
            prf.f1,
            decile,
            first
        )?;
    }
    Ok(())
}

pub fn write_curves_csv(mut w: impl Write, traces: &[PredictionTrace], n_intervals: usize) -> Result<()> {
    writeln!(w, "case,interval,tp,cum_tp,cum_f1")?;
    for trace in traces {
        let curves = interval_curves(trace, n_intervals);
        for k in 0..n_intervals {
            writeln!(
                w,
                "{},{},{},{},{}",
                trace.case_key, k, curves.per_interval_tp[k], curves.cumulative_tp[k], curves.cumulative_f1[k]
            )?;
        }
    }
    Ok(())
}

/// One row shaped like the results table: modality flags plus
/// cross-validation and held-out scores (either side may be absent).
pub fn write_summary_csv(
    mut w: impl Write,
    model: &str,
    modalities: (bool, bool, bool),
    crossval: Option<Prf>,
    heldout: Option<Prf>,
) -> Result<()> {
    writeln!(
        w,
        "model,text,visual,audio,crossval_pr,crossval_re,crossval_f1,heldout_pr,heldout_re,heldout_f1"
    )?;
    let flag = |b: bool| if b { "+" } else { "-" };
    let cell = |p: Option<Prf>, pick: fn(Prf) -> f64| {
        p.map(|v| pick(v).to_string()).unwrap_or_default()
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        model,
        flag(modalities.0),
        flag(modalities.1),
        flag(modalities.2),
        cell(crossval, |p| p.precision),
        cell(crossval, |p| p.recall),
        cell(crossval, |p| p.f1),
        cell(heldout, |p| p.precision),
        cell(heldout, |p| p.recall),
        cell(heldout, |p| p.f1),
    )?;
    Ok(())
}

pub fn write_epoch_csv(mut w: impl Write, records: &[EpochRecord]) -> Result<()> {
    writeln!(w, "run,epoch,loss,precision,recall,f1")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.run, r.epoch, r.loss, r.precision, r.recall, r.f1
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_traces() -> Vec<PredictionTrace> {
        vec![
            PredictionTrace {
                case_key: "e1:1".into(),
                records: (0..7)
                    .map(|i| TraceRecord {
                        seq_index: i,
                        probability: 0.1 * i as f64 + 0.05,
                        predicted: (i % 2) as u8,
                        gold: (i % 3 == 0) as u8,
                    })
                    .collect(),
            },
            PredictionTrace {
                case_key: "e2:1".into(),
                records: (0..4)
                    .map(|i| TraceRecord {
                        seq_index: i,
                        probability: 1.0 / (i + 2) as f64,
                        predicted: 1,
                        gold: 1,
                    })
                    .collect(),
            },
        ]
    }

    #[test]
    fn traces_round_trip_exactly() {
        let traces = sample_traces();
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, &traces).unwrap();
        let back = read_traces_csv(buf.as_slice()).unwrap();
        assert_eq!(traces, back);
        // a second write is byte-identical
        let mut buf2 = Vec::new();
        write_traces_csv(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn summary_has_empty_cells_for_missing_sides() {
        let mut buf = Vec::new();
        let prf = prf_minority(&sample_traces());
        write_summary_csv(&mut buf, "lstm", (true, false, true), Some(prf), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("lstm,+,-,+,"));
        assert!(line.ends_with(",,,"));
    }
}
