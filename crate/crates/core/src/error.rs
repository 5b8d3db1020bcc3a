use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem index {index} out of range for a space with {len} subsystems")]
    SiteOutOfRange { index: usize, len: usize },
    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NonHermitian(f64),
    #[error("matrix is not unitary (defect {0:.3e})")]
    NonUnitary(f64),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("operator `{op}` cannot act on {kind} subsystem {site}")]
    WrongSubsystemKind { op: String, kind: &'static str, site: usize },
    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("frequency cutoff {cutoff} is ill-separated from term frequencies {offending:?}")]
    IllSeparatedSpectrum { cutoff: f64, offending: Vec<f64> },
    #[error("term kept below the cutoff still oscillates at frequency {0}")]
    KeptOscillation(f64),
    #[error("frame generator term {0} acts on more than one subsystem")]
    NonLocalGenerator(usize),
    #[error("wave packet extends beyond the momentum grid (edge amplitude {0:.3e})")]
    PacketSupport(f64),
    #[error("gate `{0}` has no class in the noise model")]
    Unclassifiable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
