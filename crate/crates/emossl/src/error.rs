use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] emossl_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed WAV: {message}")]
    MalformedWav { path: PathBuf, message: String },
    #[error("{path}: unsupported audio format ({found}); only 16-bit PCM mono WAV is accepted")]
    UnsupportedFormat { path: PathBuf, found: String },
    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic { path: PathBuf, expected: [u8; 4], found: [u8; 4] },
    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: PathBuf, version: u32 },
    #[error("{path}: dimensions {rows}x{cols} overflow or are empty")]
    DimensionOverflow { path: PathBuf, rows: u64, cols: u64 },
    #[error("{path}: truncated: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },
    #[error("{path}: {extra} unexpected bytes after the payload")]
    TrailingBytes { path: PathBuf, extra: u64 },
    #[error("{path}: unknown feature source tag {tag}")]
    UnknownSourceTag { path: PathBuf, tag: u8 },
    #[error("{path}: language tag is not valid UTF-8")]
    BadLanguageTag { path: PathBuf },
    #[error("{path}: {message}")]
    InvalidCodebook { path: PathBuf, message: String },
    #[error(transparent)]
    Manifest(#[from] crate::manifest::ManifestError),
    #[error("{0}")]
    Report(String),
    #[error("utterance `{utt_id}`: {source}")]
    Utterance {
        utt_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_utterance(utt_id: &str, source: impl Into<Error>) -> Self {
        Error::Utterance { utt_id: utt_id.into(), source: Box::new(source.into()) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
