//! Metric reports: per-utterance rows, aggregates, JSONL and text tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use emossl_core::emotion::{avd_rmse_by_emotion, AvdVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// WER or CER, depending on the utterance language.
    Wer,
    Bertscore,
    Bleu,
    Tokendist,
    Mcd,
    Logf0,
    Avd,
}

impl Metric {
    pub const ALL: [Metric; 7] =
        [Metric::Wer, Metric::Bertscore, Metric::Bleu, Metric::Tokendist, Metric::Mcd, Metric::Logf0, Metric::Avd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Wer => "wer",
            Metric::Bertscore => "bertscore",
            Metric::Bleu => "bleu",
            Metric::Tokendist => "tokendist",
            Metric::Mcd => "mcd",
            Metric::Logf0 => "logf0",
            Metric::Avd => "avd",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wer" | "cer" => Some(Metric::Wer),
            "bertscore" => Some(Metric::Bertscore),
            "bleu" => Some(Metric::Bleu),
            "tokendist" => Some(Metric::Tokendist),
            "mcd" => Some(Metric::Mcd),
            "logf0" => Some(Metric::Logf0),
            "avd" => Some(Metric::Avd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorUnit {
    Word,
    Char,
}

/// Everything computed for one utterance. Absent inputs leave fields `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRow {
    pub utt_id: String,
    pub emotion: String,
    pub lang: String,
    pub paired_utt: Option<String>,
    pub error_unit: Option<ErrorUnit>,
    pub error_rate: Option<f64>,
    pub bertscore: Option<f64>,
    pub bleu: Option<f64>,
    pub tokendist: Option<f64>,
    pub mcd: Option<f64>,
    pub logf0_rmse: Option<f64>,
    pub avd_ref: Option<[f64; 3]>,
    pub avd_hyp: Option<[f64; 3]>,
}

impl UtteranceRow {
    pub fn new(utt_id: impl Into<String>, emotion: impl Into<String>, lang: impl Into<String>) -> Self {
        Self { utt_id: utt_id.into(), emotion: emotion.into(), lang: lang.into(), ..Self::default() }
    }

    fn scalar(&self, key: ScalarKey) -> Option<f64> {
        match key {
            ScalarKey::ErrorRate => self.error_rate,
            ScalarKey::Bertscore => self.bertscore,
            ScalarKey::Bleu => self.bleu,
            ScalarKey::Tokendist => self.tokendist,
            ScalarKey::Mcd => self.mcd,
            ScalarKey::Logf0 => self.logf0_rmse,
        }
    }

    fn avd_pair(&self) -> Option<(AvdVector, AvdVector)> {
        Some((AvdVector::from_array(self.avd_hyp?), AvdVector::from_array(self.avd_ref?)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarKey {
    ErrorRate,
    Bertscore,
    Bleu,
    Tokendist,
    Mcd,
    Logf0,
}

const SCALARS: [ScalarKey; 6] = [
    ScalarKey::ErrorRate,
    ScalarKey::Bertscore,
    ScalarKey::Bleu,
    ScalarKey::Tokendist,
    ScalarKey::Mcd,
    ScalarKey::Logf0,
];

impl ScalarKey {
    fn name(self, unit: ErrorUnit) -> &'static str {
        match self {
            ScalarKey::ErrorRate if unit == ErrorUnit::Char => "cer",
            ScalarKey::ErrorRate => "wer",
            ScalarKey::Bertscore => "bertscore",
            ScalarKey::Bleu => "bleu",
            ScalarKey::Tokendist => "tokendist",
            ScalarKey::Mcd => "mcd",
            ScalarKey::Logf0 => "logf0_rmse",
        }
    }
}

pub const AVD_RMSE: &str = "avd_rmse";
pub const AVD_RMSE_AVG: &str = "avd_rmse_avg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Language,
    Emotion,
}

/// A mean over the rows of one language, or of one (language, emotion)
/// cell. `avd_rmse` pools squared errors within an emotion;
/// `avd_rmse_avg` is the unweighted mean of a language's `avd_rmse` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scope: Scope,
    pub lang: String,
    pub emotion: Option<String>,
    pub metric: String,
    pub value: f64,
    pub count: usize,
}

/// Settings echoed into every report so a run can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub toolkit_version: String,
    pub system: String,
    pub labels: Vec<String>,
    pub metrics: Vec<Metric>,
    pub manifest: Option<String>,
    pub codebook: Option<String>,
    pub codebook_k: Option<usize>,
    pub codebook_language: Option<String>,
    pub ssl_dir: Option<String>,
    pub l2_normalize: bool,
    pub bleu_max_n: usize,
    pub use_c0: bool,
    pub char_mode_languages: Vec<String>,
    pub text_normalization: String,
    pub mcd_alignment: String,
    pub mel: MelEcho,
    pub pitch: PitchEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelEcho {
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    pub n_fft: Option<usize>,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub mel_scale: String,
    pub log_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchEcho {
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub frame_shift_s: f64,
    pub voicing_threshold: f64,
    pub energy_floor: f64,
}

impl ReportConfig {
    /// Defaults for a report over precomputed rows.
    pub fn new(system: impl Into<String>, labels: Vec<String>) -> Self {
        let mel = emossl_core::dsp::MelCepstrumConfig::default();
        let pitch = emossl_core::acoustic::PitchConfig::default();
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            system: system.into(),
            labels,
            metrics: Metric::ALL.to_vec(),
            manifest: None,
            codebook: None,
            codebook_k: None,
            codebook_language: None,
            ssl_dir: None,
            l2_normalize: false,
            bleu_max_n: emossl_core::sequence::DEFAULT_BLEU_MAX_N,
            use_c0: false,
            char_mode_languages: crate::evaluate::CHAR_MODE_LANGS.iter().map(|s| s.to_string()).collect(),
            text_normalization: "nfkc, lowercase (word mode), strip punctuation, collapse whitespace".into(),
            mcd_alignment: "dtw".into(),
            mel: MelEcho {
                frame_len_s: mel.frame_len_s,
                frame_shift_s: mel.frame_shift_s,
                n_fft: mel.n_fft,
                n_mels: mel.n_mels,
                n_ceps: mel.n_ceps,
                mel_scale: "htk".into(),
                log_floor: emossl_core::dsp::LOG_FLOOR,
            },
            pitch: PitchEcho {
                fmin_hz: pitch.fmin_hz,
                fmax_hz: pitch.fmax_hz,
                frame_shift_s: pitch.frame_shift_s,
                voicing_threshold: pitch.voicing_threshold,
                energy_floor: pitch.energy_floor,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub config: ReportConfig,
    /// Sorted by `utt_id`.
    pub rows: Vec<UtteranceRow>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Config(ReportConfig),
    Utterance(UtteranceRow),
    Aggregate(Aggregate),
}

fn mean(values: impl Iterator<Item = f64>) -> Option<(f64, usize)> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| (sum / n as f64, n))
}

fn unit_of(rows: &[&UtteranceRow]) -> ErrorUnit {
    rows.iter().find_map(|r| r.error_unit).unwrap_or(ErrorUnit::Word)
}

impl MetricReport {
    /// Sort the rows and compute every aggregate from them.
    pub fn from_rows(config: ReportConfig, mut rows: Vec<UtteranceRow>) -> Result<Self> {
        rows.sort_by(|a, b| a.utt_id.cmp(&b.utt_id));
        let languages: BTreeSet<&str> = rows.iter().map(|r| r.lang.as_str()).collect();
        let mut aggregates = Vec::new();
        for lang in languages {
            let in_lang: Vec<&UtteranceRow> = rows.iter().filter(|r| r.lang == lang).collect();
            let unit = unit_of(&in_lang);
            for key in SCALARS {
                if let Some((value, count)) = mean(in_lang.iter().filter_map(|r| r.scalar(key))) {
                    aggregates.push(Aggregate {
                        scope: Scope::Language,
                        lang: lang.into(),
                        emotion: None,
                        metric: key.name(unit).into(),
                        value,
                        count,
                    });
                }
            }
            let pairs: Vec<(&str, AvdVector, AvdVector)> = config
                .labels
                .iter()
                .flat_map(|label| {
                    in_lang
                        .iter()
                        .filter(move |r| &r.emotion == label)
                        .filter_map(|r| r.avd_pair().map(|(h, rf)| (r.emotion.as_str(), h, rf)))
                })
                .collect();
            let avd = if pairs.is_empty() { None } else { Some(avd_rmse_by_emotion(pairs)?) };
            if let Some(avd) = &avd {
                aggregates.push(Aggregate {
                    scope: Scope::Language,
                    lang: lang.into(),
                    emotion: None,
                    metric: AVD_RMSE_AVG.into(),
                    value: avd.average,
                    count: avd.per_emotion.iter().map(|e| e.2).sum(),
                });
            }
            for label in &config.labels {
                let cell: Vec<&UtteranceRow> = in_lang.iter().copied().filter(|r| &r.emotion == label).collect();
                for key in SCALARS {
                    if let Some((value, count)) = mean(cell.iter().filter_map(|r| r.scalar(key))) {
                        aggregates.push(Aggregate {
                            scope: Scope::Emotion,
                            lang: lang.into(),
                            emotion: Some(label.clone()),
                            metric: key.name(unit).into(),
                            value,
                            count,
                        });
                    }
                }
                if let Some((_, value, count)) = avd.as_ref().and_then(|a| a.per_emotion.iter().find(|e| &e.0 == label))
                {
                    aggregates.push(Aggregate {
                        scope: Scope::Emotion,
                        lang: lang.into(),
                        emotion: Some(label.clone()),
                        metric: AVD_RMSE.into(),
                        value: *value,
                        count: *count,
                    });
                }
            }
        }
        Ok(Self { config, rows, aggregates })
    }

    pub fn aggregate(&self, lang: &str, emotion: Option<&str>, metric: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.lang == lang && a.emotion.as_deref() == emotion && a.metric == metric)
            .map(|a| a.value)
    }

    /// One JSON object per line: the config, each utterance, each aggregate.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let json = |line: &Line| serde_json::to_string(line).map_err(|e| Error::Report(e.to_string()));
        out.push_str(&json(&Line::Config(self.config.clone()))?);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&json(&Line::Utterance(r.clone()))?);
            out.push('\n');
        }
        for a in &self.aggregates {
            out.push_str(&json(&Line::Aggregate(a.clone()))?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Read a report back; aggregates are taken from the file as written.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut config = None;
        let mut rows = Vec::new();
        let mut aggregates = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match serde_json::from_str(line).map_err(|e| Error::Report(format!("line {}: {e}", i + 1)))? {
                Line::Config(c) => config = Some(c),
                Line::Utterance(r) => rows.push(r),
                Line::Aggregate(a) => aggregates.push(a),
            }
        }
        let config = config.ok_or_else(|| Error::Report("report has no config line".into()))?;
        Ok(Self { config, rows, aggregates })
    }

    /// Fixed-width tables: intelligibility, quality, then AVD RMSE per
    /// emotion, one block per language. Columns without data are left out.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let langs: BTreeSet<&str> = self.aggregates.iter().map(|a| a.lang.as_str()).collect();
        let system = self.config.system.as_str();

        let mut first = true;
        let mut block = |out: &mut String, title: &str, lang: &str, cols: Vec<(String, String)>| {
            if cols.is_empty() {
                return;
            }
            if !first {
                out.push('\n');
            }
            first = false;
            let _ = writeln!(out, "{title} [{lang}]");
            let mut header = vec!["Method".to_owned()];
            let mut row = vec![system.to_owned()];
            for (h, v) in cols {
                header.push(h);
                row.push(v);
            }
            out.push_str(&table(&[header, row]));
        };

        for lang in &langs {
            let agg = |m: &str| self.aggregate(lang, None, m);
            let mut cols = Vec::new();
            for (metric, header, dp) in [
                ("wer", "WER (%)", 2),
                ("cer", "CER (%)", 2),
                ("bertscore", "SpeechBERTScore", 3),
                ("bleu", "SpeechBLEU", 3),
                ("tokendist", "SpeechTokenDist.", 3),
            ] {
                if let Some(v) = agg(metric) {
                    cols.push((header.to_owned(), format!("{v:.dp$}")));
                }
            }
            block(&mut out, "Intelligibility", lang, cols);
        }
        for lang in &langs {
            let mut cols = Vec::new();
            for (metric, header) in [("mcd", "MCD"), ("logf0_rmse", "LogF0RMSE")] {
                if let Some(v) = self.aggregate(lang, None, metric) {
                    cols.push((header.to_owned(), format!("{v:.3}")));
                }
            }
            block(&mut out, "Quality", lang, cols);
        }
        for lang in &langs {
            let mut cols = Vec::new();
            if let Some(v) = self.aggregate(lang, None, AVD_RMSE_AVG) {
                cols.push(("Avg.".to_owned(), format!("{v:.4}")));
                for label in &self.config.labels {
                    if let Some(v) = self.aggregate(lang, Some(label), AVD_RMSE) {
                        cols.push((label.clone(), format!("{v:.4}")));
                    }
                }
            }
            block(&mut out, "AVD RMSE per emotion", lang, cols);
        }
        out
    }
}

/// Left-align the first column, right-align the rest, two spaces apart.
fn table(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..ncols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, emo: &str, lang: &str) -> UtteranceRow {
        UtteranceRow::new(id, emo, lang)
    }

    fn labels() -> Vec<String> {
        vec!["Happy".into(), "Sad".into()]
    }

    #[test]
    fn aggregates_are_unweighted_means() {
        let mut a = row("b", "Happy", "en");
        a.error_rate = Some(10.0);
        a.error_unit = Some(ErrorUnit::Word);
        let mut b = row("a", "Sad", "en");
        b.error_rate = Some(20.0);
        b.error_unit = Some(ErrorUnit::Word);
        b.mcd = Some(5.0);
        let mut c = row("c", "Sad", "en");
        c.error_rate = Some(60.0);
        let r = MetricReport::from_rows(ReportConfig::new("sys", labels()), vec![a, b, c]).unwrap();
        assert_eq!(r.rows.iter().map(|r| r.utt_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(r.aggregate("en", None, "wer"), Some(30.0));
        assert_eq!(r.aggregate("en", Some("Sad"), "wer"), Some(40.0));
        assert_eq!(r.aggregate("en", None, "mcd"), Some(5.0));
        assert_eq!(r.aggregate("en", None, "bleu"), None);
    }

    #[test]
    fn avd_uses_pooled_rmse() {
        let mut a = row("a", "Happy", "en");
        a.avd_ref = Some([0.0, 0.0, 0.0]);
        a.avd_hyp = Some([0.3, 0.0, 0.0]);
        let mut b = row("b", "Happy", "en");
        b.avd_ref = Some([0.0, 0.0, 0.0]);
        b.avd_hyp = Some([0.0, 0.0, 0.0]);
        let mut c = row("c", "Sad", "en");
        c.avd_ref = Some([0.5, 0.5, 0.5]);
        c.avd_hyp = Some([0.6, 0.6, 0.6]);
        let r = MetricReport::from_rows(ReportConfig::new("sys", labels()), vec![a, b, c]).unwrap();
        let happy = (0.09f64 / 6.0).sqrt();
        assert!((r.aggregate("en", Some("Happy"), AVD_RMSE).unwrap() - happy).abs() < 1e-12);
        let avg = r.aggregate("en", None, AVD_RMSE_AVG).unwrap();
        assert!((avg - (happy + 0.1) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let mut a = row("a", "Happy", "ja");
        a.error_rate = Some(1.0 / 3.0);
        a.error_unit = Some(ErrorUnit::Char);
        a.bertscore = Some(0.1 + 0.2);
        let r = MetricReport::from_rows(ReportConfig::new("sys", labels()), vec![a]).unwrap();
        let back = MetricReport::from_jsonl(&r.to_jsonl().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.aggregate("ja", None, "cer"), Some(1.0 / 3.0));
    }

    #[test]
    fn render_omits_empty_columns() {
        let mut a = row("a", "Sad", "en");
        a.error_rate = Some(12.346);
        a.error_unit = Some(ErrorUnit::Word);
        let text = MetricReport::from_rows(ReportConfig::new("Mine", labels()), vec![a]).unwrap().render();
        assert_eq!(text, "Intelligibility [en]\nMethod  WER (%)\nMine      12.35\n");
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(Metric::parse(m.name()), Some(m));
        }
        assert_eq!(Metric::parse("CER"), Some(Metric::Wer));
        assert_eq!(Metric::parse("pesq"), None);
    }
}
