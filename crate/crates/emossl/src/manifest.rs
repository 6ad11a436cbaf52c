//! Evaluation manifests.
//!
//! ```text
//! #emoeval v1 labels=Angry,Happy,Sad,Surprise
//! utt_id  path  ref_transcript  hyp_transcript  emotion  lang  avd_ref  avd_hyp  paired_utt
//! ```
//!
//! Record fields are tab-separated. `-` marks an absent path, transcript,
//! AVD triple (`a,v,d`) or pairing. Further lines starting with `#` and
//! blank lines are ignored. Relative paths resolve against the manifest's
//! directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use emossl_core::emotion::AvdVector;

const HEADER_PREFIX: &str = "#emoeval v1 labels=";
const FIELDS: usize = 9;
const NONE: &str = "-";

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:1: expected header `#emoeval v1 labels=<comma-list>`")]
    BadHeader { path: PathBuf },
    #[error("{path}:1: label set {message}")]
    BadLabels { path: PathBuf, message: String },
    #[error("{path}:{line}: expected {FIELDS} tab-separated fields, found {found}")]
    FieldCount { path: PathBuf, line: usize, found: usize },
    #[error("{path}:{line}: empty {field}")]
    EmptyField { path: PathBuf, line: usize, field: &'static str },
    #[error("{path}:{line}: duplicate utt_id `{utt_id}` (first seen on line {first_line})")]
    DuplicateId { path: PathBuf, line: usize, utt_id: String, first_line: usize },
    #[error("{path}:{line}: utterance `{utt_id}` has emotion `{label}`, which is not among the declared labels")]
    UnknownLabel { path: PathBuf, line: usize, utt_id: String, label: String },
    #[error("{path}:{line}: utterance `{utt_id}`: cannot resolve {}", target.display())]
    UnresolvablePath { path: PathBuf, line: usize, utt_id: String, target: PathBuf },
    #[error("{path}:{line}: utterance `{utt_id}`: {field} `{value}` is not three finite numbers `a,v,d`")]
    BadAvd { path: PathBuf, line: usize, utt_id: String, field: &'static str, value: String },
    #[error("{path}:{line}: utterance `{utt_id}` is paired with `{paired}`, {reason}")]
    BadPair { path: PathBuf, line: usize, utt_id: String, paired: String, reason: &'static str },
    #[error("field `{field}` of `{utt_id}` contains a tab or newline")]
    UnwritableField { utt_id: String, field: &'static str },
}

/// What a record's path points at, judged by extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Audio,
    Features,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub utt_id: String,
    /// Path exactly as written in the manifest.
    pub raw_path: Option<String>,
    /// `raw_path` resolved against the manifest directory.
    pub path: Option<PathBuf>,
    pub ref_transcript: Option<String>,
    pub hyp_transcript: Option<String>,
    pub emotion: String,
    pub lang: String,
    pub avd_ref: Option<AvdVector>,
    pub avd_hyp: Option<AvdVector>,
    pub paired_utt: Option<String>,
    /// 1-based line in the source file; 0 for records built in memory.
    pub line: usize,
}

impl UtteranceRecord {
    pub fn new(utt_id: impl Into<String>, emotion: impl Into<String>, lang: impl Into<String>) -> Self {
        Self {
            utt_id: utt_id.into(),
            raw_path: None,
            path: None,
            ref_transcript: None,
            hyp_transcript: None,
            emotion: emotion.into(),
            lang: lang.into(),
            avd_ref: None,
            avd_hyp: None,
            paired_utt: None,
            line: 0,
        }
    }

    pub fn path_kind(&self) -> Option<PathKind> {
        let ext = self.path.as_ref()?.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "wav" => Some(PathKind::Audio),
            "emof" => Some(PathKind::Features),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalManifest {
    pub labels: Vec<String>,
    pub records: Vec<UtteranceRecord>,
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
}

impl EvalManifest {
    pub fn get(&self, utt_id: &str) -> Option<&UtteranceRecord> {
        self.records.iter().find(|r| r.utt_id == utt_id)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Serialize back to the text format. Paths are written as given.
    pub fn to_text(&self) -> Result<String, ManifestError> {
        let mut out = format!("{HEADER_PREFIX}{}\n", self.labels.join(","));
        for r in &self.records {
            let fields = [
                ("utt_id", Some(r.utt_id.clone())),
                ("path", r.raw_path.clone()),
                ("ref_transcript", r.ref_transcript.clone()),
                ("hyp_transcript", r.hyp_transcript.clone()),
                ("emotion", Some(r.emotion.clone())),
                ("lang", Some(r.lang.clone())),
                ("avd_ref", r.avd_ref.map(format_avd)),
                ("avd_hyp", r.avd_hyp.map(format_avd)),
                ("paired_utt", r.paired_utt.clone()),
            ];
            for (i, (name, value)) in fields.into_iter().enumerate() {
                let value = value.unwrap_or_else(|| NONE.to_owned());
                if value.contains(['\t', '\n', '\r']) {
                    return Err(ManifestError::UnwritableField { utt_id: r.utt_id.clone(), field: name });
                }
                if i > 0 {
                    out.push('\t');
                }
                out.push_str(&value);
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn format_avd(v: AvdVector) -> String {
    let mut s = String::new();
    let _ = write!(s, "{},{},{}", v.arousal, v.valence, v.dominance);
    s
}

fn optional(field: &str) -> Option<&str> {
    (field != NONE).then_some(field)
}

fn parse_avd(s: &str) -> Option<AvdVector> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    match parts[..] {
        [a, v, d] if parts.iter().all(|x| x.is_finite()) => Some(AvdVector::new(a, v, d)),
        _ => None,
    }
}

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<EvalManifest, ManifestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest_str(&text, path, &base)
}

/// Parse manifest text; `origin` only labels errors, `base_dir` anchors
/// relative paths.
pub fn parse_manifest_str(text: &str, origin: &Path, base_dir: &Path) -> Result<EvalManifest, ManifestError> {
    let origin = origin.to_path_buf();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    let labels = header
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| ManifestError::BadHeader { path: origin.clone() })?;
    let labels: Vec<String> = labels.split(',').map(|l| l.trim().to_owned()).collect();
    if labels.iter().any(String::is_empty) {
        return Err(ManifestError::BadLabels { path: origin, message: "contains an empty label".into() });
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(ManifestError::BadLabels { path: origin, message: format!("repeats `{l}`") });
        }
    }

    let mut records: Vec<UtteranceRecord> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, text) in lines {
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != FIELDS {
            return Err(ManifestError::FieldCount { path: origin, line, found: f.len() });
        }
        for (idx, name) in [(0, "utt_id"), (4, "emotion"), (5, "lang")] {
            if f[idx].is_empty() || f[idx] == NONE {
                return Err(ManifestError::EmptyField { path: origin, line, field: name });
            }
        }
        let utt_id = f[0].to_owned();
        if let Some(&first_line) = seen.get(&utt_id) {
            return Err(ManifestError::DuplicateId { path: origin, line, utt_id, first_line });
        }
        if !labels.iter().any(|l| l == f[4]) {
            return Err(ManifestError::UnknownLabel { path: origin, line, utt_id, label: f[4].into() });
        }
        let resolved = match optional(f[1]) {
            Some(raw) => {
                let p = Path::new(raw);
                let full = if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
                if !full.is_file() {
                    return Err(ManifestError::UnresolvablePath { path: origin, line, utt_id, target: full });
                }
                Some(full)
            }
            None => None,
        };
        let mut avd = [None, None];
        for (slot, (idx, name)) in avd.iter_mut().zip([(6, "avd_ref"), (7, "avd_hyp")]) {
            if let Some(raw) = optional(f[idx]) {
                *slot = Some(parse_avd(raw).ok_or_else(|| ManifestError::BadAvd {
                    path: origin.clone(),
                    line,
                    utt_id: utt_id.clone(),
                    field: name,
                    value: raw.into(),
                })?);
            }
        }
        seen.insert(utt_id.clone(), line);
        records.push(UtteranceRecord {
            utt_id,
            raw_path: optional(f[1]).map(str::to_owned),
            path: resolved,
            ref_transcript: optional(f[2]).map(str::to_owned),
            hyp_transcript: optional(f[3]).map(str::to_owned),
            emotion: f[4].to_owned(),
            lang: f[5].to_owned(),
            avd_ref: avd[0],
            avd_hyp: avd[1],
            paired_utt: optional(f[8]).map(str::to_owned),
            line,
        });
    }

    // Pairings may point forward, so check them once every id is known.
    for r in &records {
        if let Some(p) = &r.paired_utt {
            let reason = if p == &r.utt_id {
                Some("itself")
            } else if !seen.contains_key(p) {
                Some("which is not in the manifest")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(ManifestError::BadPair {
                    path: origin,
                    line: r.line,
                    utt_id: r.utt_id.clone(),
                    paired: p.clone(),
                    reason,
                });
            }
        }
    }

    Ok(EvalManifest { labels, records, base_dir: base_dir.to_path_buf() })
}
