//! Duplex frame channels: an in-process loopback over mpsc queues and a TCP
//! stream carrying length-prefixed frames. Both deliver frames exactly once
//! in send order.

use std::io::ErrorKind;
use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use crate::codec::{read_frame, write_frame};
use crate::error::{ProtocolError, Result};

pub const DEFAULT_REPLY_TIMEOUT: Duration = Duration::from_secs(30);

pub trait FrameChannel: Send {
    fn send(&mut self, payload: &[u8]) -> Result<()>;
    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>>;
}

/// One endpoint of an in-process channel pair.
pub struct LoopbackChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn loopback_pair() -> (LoopbackChannel, LoopbackChannel) {
    let (atx, brx) = mpsc::channel();
    let (btx, arx) = mpsc::channel();
    (LoopbackChannel { tx: atx, rx: arx }, LoopbackChannel { tx: btx, rx: brx })
}

impl FrameChannel for LoopbackChannel {
    fn send(&mut self, payload: &[u8]) -> Result<()> {
        self.tx
            .send(payload.to_vec())
            .map_err(|_| ProtocolError::Io(ErrorKind::BrokenPipe.into()))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>> {
        match self.rx.recv_timeout(timeout) {
            Ok(frame) => Ok(frame),
            Err(RecvTimeoutError::Timeout) => {
                Err(ProtocolError::Io(ErrorKind::TimedOut.into()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(ProtocolError::Io(ErrorKind::UnexpectedEof.into()))
            }
        }
    }
}

/// A framed TCP stream.
pub struct TcpChannel {
    stream: TcpStream,
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpChannel { stream })
    }

    pub fn connect(addr: &str) -> Result<Self> {
        Self::new(TcpStream::connect(addr)?)
    }
}

impl FrameChannel for TcpChannel {
    fn send(&mut self, payload: &[u8]) -> Result<()> {
        write_frame(&mut self.stream, payload)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>> {
        self.stream.set_read_timeout(Some(timeout))?;
        read_frame(&mut self.stream).map_err(|e| match e {
            ProtocolError::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock) => {
                ProtocolError::Io(ErrorKind::TimedOut.into())
            }
            other => other,
        })
    }
}
