use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed frame payload: {0}")]
    Codec(#[from] serde_json::Error),
    #[error("frame of {0} bytes exceeds the frame size limit")]
    FrameTooLarge(u64),
    #[error("protocol version {got}, expected {expected}")]
    VersionMismatch { got: u32, expected: u32 },
    #[error("message for run {got}, expected run {expected}")]
    RunMismatch { got: u64, expected: u64 },
    #[error("unexpected {got} message while waiting for {wanted}")]
    UnexpectedMessage { got: &'static str, wanted: &'static str },
    #[error("duplicate client id {0} in registry")]
    DuplicateClient(u64),
    #[error("reply from client {got} on the channel of client {expected}")]
    WrongClient { got: u64, expected: u64 },
    #[error("timed out waiting for client {0}")]
    Timeout(u64),
    #[error("channel to client {0} closed mid-run")]
    ChannelClosed(u64),
    #[error("run aborted without a verdict: {0}")]
    Aborted(String),
    #[error(transparent)]
    Core(#[from] itd_core::error::Error),
    #[error("invalid run parameters: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
