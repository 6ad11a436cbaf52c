use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("waveform contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sample rate {0} Hz is below the supported minimum of 8000 Hz")]
    SampleRateTooLow(u32),
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("feature matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("feature matrix value count {len} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("feature dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frame length of {0} s cannot be represented in samples")]
    FrameTooLong(f64),
    #[error("need at least {k} frames to fit {k} clusters, got {n}")]
    InsufficientData { n: usize, k: usize },
    #[error("token {token} is out of range for a codebook of size {k}")]
    TokenOutOfRange { token: u32, k: usize },
    #[error("token sequences come from codebooks of different sizes ({0} vs {1})")]
    CodebookMismatch(usize, usize),
    #[error("class id {class_id} is out of range for {classes} classes")]
    ClassOutOfRange { class_id: usize, classes: usize },
    #[error("reference is empty after normalization")]
    EmptyReference,
    #[error("no input pairs")]
    NoPairs,
    #[error("no frames are voiced in both pitch tracks")]
    NoCoVoicedFrames,
    #[error("frame shifts differ: {0} s vs {1} s")]
    FrameShiftMismatch(f64, f64),
    #[error("frame has zero energy")]
    ZeroEnergy,
    #[error("reflection coefficient {value} at order {order} is outside (-1, 1)")]
    UnstableFilter { order: usize, value: f64 },
}
