//! Per-utterance metric computation over a manifest.
//!
//! A record is scored as a hypothesis. Transcript and AVD metrics use the
//! record's own fields; feature and audio metrics compare it against the
//! record named in its `paired_utt` column, which plays the reference.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use emossl_core::acoustic::{estimate_f0, log_f0_rmse, mcd, PitchConfig};
use emossl_core::dsp::{mel_cepstra, MelCepstrumConfig};
use emossl_core::sequence::{error_rate, speech_bert_score, speech_bleu, speech_token_distance, TextUnit};
use emossl_core::vq::Codebook;
use emossl_core::{FeatureMatrix, FeatureSource, Waveform};
use rayon::prelude::*;

use crate::emof::read_features;
use crate::error::{Error, Result};
use crate::manifest::{EvalManifest, PathKind, UtteranceRecord};
use crate::report::{ErrorUnit, Metric, MetricReport, ReportConfig, UtteranceRow};
use crate::wav::read_wav;

/// Languages scored by character rather than by word.
pub const CHAR_MODE_LANGS: [&str; 4] = ["ja", "zh", "yue", "th"];

/// Character mode for the languages above (matched on the primary subtag).
pub fn text_unit_for(lang: &str) -> TextUnit {
    let primary = lang.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
    if CHAR_MODE_LANGS.contains(&primary.as_str()) {
        TextUnit::Char
    } else {
        TextUnit::Word
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub system: String,
    pub metrics: Vec<Metric>,
    pub codebook: Option<Codebook>,
    pub codebook_path: Option<PathBuf>,
    /// Directory holding `<utt_id>.emof` SSL features.
    pub ssl_dir: Option<PathBuf>,
    /// Normalize SSL frames before tokenizing; must match how the codebook was fit.
    pub l2_normalize: bool,
    pub bleu_max_n: usize,
    pub use_c0: bool,
    pub mel: MelCepstrumConfig,
    pub pitch: PitchConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            system: "system".into(),
            metrics: Metric::ALL.to_vec(),
            codebook: None,
            codebook_path: None,
            ssl_dir: None,
            l2_normalize: false,
            bleu_max_n: emossl_core::sequence::DEFAULT_BLEU_MAX_N,
            use_c0: false,
            mel: MelCepstrumConfig::default(),
            pitch: PitchConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricReport,
    pub warnings: Vec<String>,
}

struct Ctx<'a> {
    manifest: &'a EvalManifest,
    opts: &'a EvalOptions,
}

impl Ctx<'_> {
    fn wants(&self, m: Metric) -> bool {
        self.opts.metrics.contains(&m)
    }

    fn audio(&self, r: &UtteranceRecord) -> Result<Option<Waveform>> {
        match (&r.path, r.path_kind()) {
            (Some(p), Some(PathKind::Audio)) => read_wav(p).map(Some),
            _ => Ok(None),
        }
    }

    fn ssl(&self, r: &UtteranceRecord) -> Result<Option<FeatureMatrix>> {
        if let Some(dir) = &self.opts.ssl_dir {
            let p = dir.join(format!("{}.emof", r.utt_id));
            if p.is_file() {
                return read_features(p).map(Some);
            }
        }
        if let (Some(p), Some(PathKind::Features)) = (&r.path, r.path_kind()) {
            let m = read_features(p)?;
            if m.source() == FeatureSource::SslLayer9 {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }

    fn cepstra(&self, r: &UtteranceRecord, audio: Option<&Waveform>) -> Result<Option<FeatureMatrix>> {
        if let Some(w) = audio {
            return Ok(Some(mel_cepstra(w, &self.opts.mel)?));
        }
        if let (Some(p), Some(PathKind::Features)) = (&r.path, r.path_kind()) {
            let m = read_features(p)?;
            if m.source() == FeatureSource::MelCepstrum {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }

    fn score(&self, r: &UtteranceRecord, notes: &mut Vec<String>) -> Result<UtteranceRow> {
        let mut row = UtteranceRow::new(&r.utt_id, &r.emotion, &r.lang);
        row.paired_utt = r.paired_utt.clone();

        if self.wants(Metric::Wer) {
            if let (Some(reference), Some(hyp)) = (&r.ref_transcript, &r.hyp_transcript) {
                let unit = text_unit_for(&r.lang);
                row.error_rate = Some(error_rate(reference, hyp, unit)?.percent);
                row.error_unit = Some(match unit {
                    TextUnit::Word => ErrorUnit::Word,
                    TextUnit::Char => ErrorUnit::Char,
                });
            }
        }
        if self.wants(Metric::Avd) {
            if let (Some(a), Some(b)) = (r.avd_ref, r.avd_hyp) {
                row.avd_ref = Some(a.to_array());
                row.avd_hyp = Some(b.to_array());
            }
        }

        let Some(reference) = r.paired_utt.as_deref().and_then(|p| self.manifest.get(p)) else {
            return Ok(row);
        };

        let want_tokens = self.wants(Metric::Bleu) || self.wants(Metric::Tokendist);
        if self.wants(Metric::Bertscore) || (want_tokens && self.opts.codebook.is_some()) {
            if let (Some(hyp), Some(rf)) = (self.ssl(r)?, self.ssl(reference)?) {
                if self.wants(Metric::Bertscore) {
                    row.bertscore = Some(speech_bert_score(&rf, &hyp)?.f1);
                }
                if let Some(cb) = self.opts.codebook.as_ref().filter(|_| want_tokens) {
                    let prep = |m: FeatureMatrix| if self.opts.l2_normalize { m.l2_normalized() } else { m };
                    let th = cb.encode(&prep(hyp), &r.utt_id)?;
                    let tr = cb.encode(&prep(rf), &reference.utt_id)?;
                    if self.wants(Metric::Bleu) {
                        row.bleu = Some(speech_bleu(tr.tokens(), th.tokens(), self.opts.bleu_max_n)?);
                    }
                    if self.wants(Metric::Tokendist) {
                        row.tokendist = Some(speech_token_distance(&tr, &th)?);
                    }
                }
            }
        }

        if self.wants(Metric::Mcd) || self.wants(Metric::Logf0) {
            let (ha, ra) = (self.audio(r)?, self.audio(reference)?);
            if let (Some(h), Some(rf)) = (&ha, &ra) {
                if h.sample_rate() != rf.sample_rate() {
                    return Err(emossl_core::Error::SampleRateMismatch(rf.sample_rate(), h.sample_rate()).into());
                }
            }
            if self.wants(Metric::Mcd) {
                if let (Some(hc), Some(rc)) = (self.cepstra(r, ha.as_ref())?, self.cepstra(reference, ra.as_ref())?) {
                    row.mcd = Some(mcd(&rc, &hc, self.opts.use_c0)?);
                }
            }
            if self.wants(Metric::Logf0) {
                if let (Some(h), Some(rf)) = (&ha, &ra) {
                    let (th, tr) = (estimate_f0(h, &self.opts.pitch)?, estimate_f0(rf, &self.opts.pitch)?);
                    match log_f0_rmse(&tr, &th) {
                        Ok(v) => row.logf0_rmse = Some(v),
                        Err(emossl_core::Error::NoCoVoicedFrames) => {
                            notes.push(format!("{}: no frames voiced in both tracks; LogF0RMSE left empty", r.utt_id))
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        Ok(row)
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

/// Score every record and assemble the report. Metrics lacking inputs are
/// reported as warnings, not failures; any computation error is fatal and
/// names the utterance.
pub fn evaluate(manifest: &EvalManifest, opts: &EvalOptions) -> Result<Evaluation> {
    if manifest.is_empty() {
        return Err(Error::Report("manifest has no records".into()));
    }
    if opts.bleu_max_n == 0 || opts.bleu_max_n > 4 {
        return Err(Error::Report(format!("--bleu-max-n must be in 1..=4, got {}", opts.bleu_max_n)));
    }
    let ctx = Ctx { manifest, opts };
    let mut warnings = Vec::new();

    if let Some(cb) = &opts.codebook {
        let langs: BTreeSet<&str> = manifest.records.iter().map(|r| r.lang.as_str()).collect();
        for lang in langs {
            if !cb.language().is_empty() && cb.language() != lang {
                warnings.push(format!(
                    "codebook was fit for language `{}` but the manifest has `{lang}` utterances",
                    cb.language()
                ));
            }
        }
    } else if opts.metrics.iter().any(|m| matches!(m, Metric::Bleu | Metric::Tokendist)) {
        warnings.push("SpeechBLEU and SpeechTokenDist. need --codebook".into());
    }

    let mut results: Vec<(String, Result<UtteranceRow>, Vec<String>)> = manifest
        .records
        .par_iter()
        .map(|r| {
            let mut notes = Vec::new();
            let row = ctx.score(r, &mut notes).map_err(|e| Error::in_utterance(&r.utt_id, e));
            (r.utt_id.clone(), row, notes)
        })
        .collect();
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let mut rows = Vec::with_capacity(results.len());
    for (_, row, notes) in results {
        warnings.extend(notes);
        rows.push(row?);
    }

    for &m in &opts.metrics {
        let n = rows
            .iter()
            .filter(|r| match m {
                Metric::Wer => r.error_rate.is_some(),
                Metric::Bertscore => r.bertscore.is_some(),
                Metric::Bleu => r.bleu.is_some(),
                Metric::Tokendist => r.tokendist.is_some(),
                Metric::Mcd => r.mcd.is_some(),
                Metric::Logf0 => r.logf0_rmse.is_some(),
                Metric::Avd => r.avd_ref.is_some(),
            })
            .count();
        if n == 0 {
            warnings.push(format!("{}: no utterance has the inputs this metric needs; column omitted", m.name()));
        } else if n < rows.len() {
            log::info!("{}: computed for {n} of {} utterances", m.name(), rows.len());
        }
    }

    let mut config = ReportConfig::new(&opts.system, manifest.labels.clone());
    config.metrics = opts.metrics.clone();
    config.codebook = opts.codebook_path.as_deref().map(path_string);
    config.codebook_k = opts.codebook.as_ref().map(Codebook::k);
    config.codebook_language = opts.codebook.as_ref().map(|c| c.language().to_owned());
    config.ssl_dir = opts.ssl_dir.as_deref().map(path_string);
    config.l2_normalize = opts.l2_normalize;
    config.bleu_max_n = opts.bleu_max_n;
    config.use_c0 = opts.use_c0;
    config.mel.frame_len_s = opts.mel.frame_len_s;
    config.mel.frame_shift_s = opts.mel.frame_shift_s;
    config.mel.n_fft = opts.mel.n_fft;
    config.mel.n_mels = opts.mel.n_mels;
    config.mel.n_ceps = opts.mel.n_ceps;
    config.pitch.fmin_hz = opts.pitch.fmin_hz;
    config.pitch.fmax_hz = opts.pitch.fmax_hz;
    config.pitch.frame_shift_s = opts.pitch.frame_shift_s;
    config.pitch.voicing_threshold = opts.pitch.voicing_threshold;
    config.pitch.energy_floor = opts.pitch.energy_floor;

    Ok(Evaluation { report: MetricReport::from_rows(config, rows)?, warnings })
}
