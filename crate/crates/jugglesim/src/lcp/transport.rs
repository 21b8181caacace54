//! Message transports for the state stream: an in-process loopback queue and
//! same-host UDP. Endpoints are single-owner objects; one publisher and one
//! consumer may run concurrently.

use std::io;
use std::net::UdpSocket;
use std::sync::mpsc;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("transport I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("loopback channel closed")]
    Closed,
}

pub enum Sender {
    Loopback(mpsc::SyncSender<Vec<u8>>),
    Udp { socket: UdpSocket, peer: std::net::SocketAddr },
}

pub enum Receiver {
    Loopback(mpsc::Receiver<Vec<u8>>),
    Udp(UdpSocket),
}

impl Sender {
    pub fn send(&self, bytes: &[u8]) -> Result<(), TransportError> {
        match self {
            Sender::Loopback(tx) => tx
                .send(bytes.to_vec())
                .map_err(|_| TransportError::Closed),
            Sender::Udp { socket, peer } => {
                socket.send_to(bytes, peer)?;
                Ok(())
            }
        }
    }
}

impl Receiver {
    /// Receive one message, waiting up to `timeout`. `Ok(None)` on timeout.
    pub fn recv_timeout(&self, timeout: Duration) -> Result<Option<Vec<u8>>, TransportError> {
        match self {
            Receiver::Loopback(rx) => match rx.recv_timeout(timeout) {
                Ok(v) => Ok(Some(v)),
                Err(mpsc::RecvTimeoutError::Timeout) => Ok(None),
                Err(mpsc::RecvTimeoutError::Disconnected) => Err(TransportError::Closed),
            },
            Receiver::Udp(socket) => {
                socket.set_read_timeout(Some(timeout))?;
                let mut buf = [0u8; 2048];
                match socket.recv_from(&mut buf) {
                    Ok((n, _)) => Ok(Some(buf[..n].to_vec())),
                    Err(e)
                        if e.kind() == io::ErrorKind::WouldBlock
                            || e.kind() == io::ErrorKind::TimedOut =>
                    {
                        Ok(None)
                    }
                    Err(e) => Err(e.into()),
                }
            }
        }
    }
}

/// An in-process bounded queue pair.
pub fn loopback_pair() -> (Sender, Receiver) {
    let (tx, rx) = mpsc::sync_channel(4096);
    (Sender::Loopback(tx), Receiver::Loopback(rx))
}

/// Two UDP sockets bound to ephemeral localhost ports, sender aimed at the
/// receiver.
pub fn udp_pair() -> Result<(Sender, Receiver), TransportError> {
    let recv_socket = UdpSocket::bind("127.0.0.1:0")?;
    let peer = recv_socket.local_addr()?;
    let send_socket = UdpSocket::bind("127.0.0.1:0")?;
    Ok((
        Sender::Udp {
            socket: send_socket,
            peer,
        },
        Receiver::Udp(recv_socket),
    ))
}
