use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("protocol `{0}` depends on the global clock; a local-time rule is required")]
    NotLocalClock(String),

    #[error("horizon {horizon} exceeds the configured cap of {cap} slots")]
    HorizonTooLarge { horizon: u64, cap: u64 },

    #[error("unknown party id {0}")]
    UnknownParty(u64),

    #[error("strategy chose option {option}, but only options 1..={max} exist")]
    InvalidOption { option: usize, max: usize },

    #[error("unknown protocol name `{0}`")]
    UnknownProtocol(String),

    #[error("malformed CSV input: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
