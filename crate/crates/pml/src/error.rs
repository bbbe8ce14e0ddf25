use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel {index} has intensity {value}, expected a finite value in [0, 1]")]
    InvalidIntensity { index: usize, value: f64 },

    #[error("image data has {len} pixels, expected {width}x{height} = {expected}")]
    ImageLengthMismatch {
        len: usize,
        width: usize,
        height: usize,
        expected: usize,
    },

    #[error("image dimensions {0}x{1} and {2}x{3} differ")]
    ImageDimensionMismatch(usize, usize, usize, usize),

    #[error("image dimension must be at least 1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("frames must be square, got {width}x{height}")]
    NonSquareImage { width: usize, height: usize },

    #[error("steering value {0} is not finite")]
    NonFiniteSteering(f64),

    #[error("steering value {0} is outside [-1, 1]")]
    SteeringOutOfRange(f64),

    #[error("vehicle state field {field} has non-finite value {value}")]
    NonFiniteState { field: &'static str, value: f64 },

    #[error("vehicle speed must be positive, got {0}")]
    NonPositiveSpeed(f64),

    #[error("invalid similarity window: {0}")]
    InvalidSsimParams(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid track: {0}")]
    InvalidTrack(String),

    #[error("track family {family} has lanes 0..{lanes}, lane {lane} does not exist")]
    InvalidLane {
        family: String,
        lanes: usize,
        lane: usize,
    },

    #[error("unknown track name {0:?}")]
    UnknownTrack(String),

    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid net spec: {0}")]
    InvalidNetSpec(String),

    #[error("parameter store: {0}")]
    ParamStore(String),

    #[error("non-finite {what} encountered during {context}")]
    NonFiniteValue {
        what: &'static str,
        context: &'static str,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset records disagree on image size")]
    MixedImageSizes,

    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("file truncated: wanted {wanted} more bytes")]
    Truncated { wanted: usize },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("nearest waypoint is {distance:.2} m away, beyond the {limit:.2} m horizon")]
    NoWaypointInRange { distance: f64, limit: f64 },

    #[error("policy failed at step {step}: {reason}")]
    PolicyFault { step: usize, reason: String },

    #[error("evaluation: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
