use daqsim_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(CoreError::DimensionCap { .. }) => EXIT_RESOURCE,
            CliError::Core(
                CoreError::InvalidParameter(_)
                | CoreError::SiteOutOfRange { .. }
                | CoreError::ModeOutOfRange { .. }
                | CoreError::WrongSubsystemKind { .. }
                | CoreError::PacketSupport(_),
            ) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}
