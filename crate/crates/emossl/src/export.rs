//! Plot-ready CSV export of pitch tracks and formant frames.

use emossl_core::acoustic::{estimate_f0, formants, FormantConfig, FormantFrame, PitchConfig, PitchTrack};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{EvalManifest, PathKind, UtteranceRecord};
use crate::wav::read_wav;

pub const PITCH_HEADER: [&str; 3] = ["utt_id", "time_s", "f0_hz"];
pub const FORMANT_HEADER: [&str; 5] = ["utt_id", "time_s", "f1_hz", "f2_hz", "f3_hz"];

/// Outcome of a batch export: the CSV text plus the utterances that failed
/// or were skipped.
#[derive(Debug)]
pub struct Batch<T> {
    pub csv: String,
    pub items: Vec<(String, T)>,
    pub failures: Vec<Error>,
    /// Records without an audio path.
    pub skipped: Vec<String>,
}

fn time(t: f64) -> String {
    format!("{t:.5}")
}

fn hz(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn audio_records(m: &EvalManifest) -> (Vec<&UtteranceRecord>, Vec<String>) {
    let mut recs: Vec<&UtteranceRecord> = m.records.iter().collect();
    recs.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
    let (audio, other): (Vec<_>, Vec<_>) = recs.into_iter().partition(|r| r.path_kind() == Some(PathKind::Audio));
    (audio, other.into_iter().map(|r| r.utt_id.clone()).collect())
}

fn run<T: Send>(
    m: &EvalManifest,
    header: &[&str],
    analyse: impl Fn(&UtteranceRecord) -> Result<T> + Sync,
    rows: impl Fn(&str, &T) -> Vec<Vec<String>>,
) -> Result<Batch<T>> {
    let (records, skipped) = audio_records(m);
    let results: Vec<(String, Result<T>)> = records
        .par_iter()
        .map(|r| (r.utt_id.clone(), analyse(r).map_err(|e| Error::in_utterance(&r.utt_id, e))))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (id, res) in results {
        match res {
            Ok(v) => {
                for row in rows(&id, &v) {
                    w.write_record(&row).map_err(csv_err)?;
                }
                items.push((id, v));
            }
            Err(e) => failures.push(e),
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    let csv = String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))?;
    Ok(Batch { csv, items, failures, skipped })
}

/// `utt_id,time_s,f0_hz`, one line per frame; unvoiced frames leave f0 empty.
pub fn pitch_csv(m: &EvalManifest, cfg: &PitchConfig) -> Result<Batch<PitchTrack>> {
    run(
        m,
        &PITCH_HEADER,
        |r| Ok(estimate_f0(&read_wav(r.path.as_ref().expect("audio record"))?, cfg)?),
        |id, track| track.frames.iter().map(|f| vec![id.to_owned(), time(f.time_s), hz(f.f0_hz)]).collect(),
    )
}

/// `utt_id,time_s,f1_hz,f2_hz,f3_hz`, one line per voiced frame.
pub fn formant_csv(m: &EvalManifest, cfg: &FormantConfig) -> Result<Batch<Vec<FormantFrame>>> {
    run(
        m,
        &FORMANT_HEADER,
        |r| Ok(formants(&read_wav(r.path.as_ref().expect("audio record"))?, cfg)?),
        |id, frames| {
            frames
                .iter()
                .map(|f| vec![id.to_owned(), time(f.time_s), hz(f.f1()), hz(f.f2()), hz(f.f3())])
                .collect()
        },
    )
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) })
}

/// Median of each formant over the frames where it was resolved.
pub fn formant_medians(frames: &[FormantFrame]) -> [Option<f64>; 3] {
    let mut out = [None; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut v: Vec<f64> = frames.iter().filter_map(|f| f.get(i)).collect();
        *slot = median(&mut v);
    }
    out
}
