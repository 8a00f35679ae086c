//! TCP transport with the shared frame format.
//!
//! Each pair of parties shares one full-duplex connection. Sends are
//! drained by a dedicated writer thread per channel so that two parties
//! pushing large frames at each other can never deadlock on socket
//! buffers. Connection setup exchanges a raw 4-byte little-endian party id
//! (not a protocol frame, and not counted in traffic).

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;

use super::{Channel, Endpoint, Frame, NetError, PartyId};

struct TcpChannel {
    peer: PartyId,
    reader: TcpStream,
    writer_tx: Option<Sender<Vec<u8>>>,
    writer: Option<JoinHandle<()>>,
}

impl TcpChannel {
    fn new(peer: PartyId, stream: TcpStream) -> Result<Self, NetError> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let (writer_tx, writer_rx) = channel::<Vec<u8>>();
        let mut write_half = stream;
        let writer = std::thread::spawn(move || {
            while let Ok(bytes) = writer_rx.recv() {
                if write_half.write_all(&bytes).is_err() {
                    break;
                }
            }
            let _ = write_half.flush();
        });
        Ok(Self { peer, reader, writer_tx: Some(writer_tx), writer: Some(writer) })
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, frame: &Frame) -> Result<(), NetError> {
        self.writer_tx
            .as_ref()
            .expect("writer alive until drop")
            .send(frame.encode())
            .map_err(|_| NetError::Disconnected(self.peer))
    }

    fn recv(&mut self) -> Result<Frame, NetError> {
        let mut len_buf = [0u8; 4];
        self.reader
            .read_exact(&mut len_buf)
            .map_err(|_| NetError::Disconnected(self.peer))?;
        let body_len = u32::from_le_bytes(len_buf) as usize;
        let mut bytes = vec![0u8; 4 + body_len];
        bytes[0..4].copy_from_slice(&len_buf);
        self.reader
            .read_exact(&mut bytes[4..])
            .map_err(|_| NetError::Disconnected(self.peer))?;
        Frame::decode(&bytes)
    }
}

impl Drop for TcpChannel {
    fn drop(&mut self) {
        drop(self.writer_tx.take());
        if let Some(handle) = self.writer.take() {
            let _ = handle.join();
        }
    }
}

/// Connect party `my_id` to every other address in `addrs`.
///
/// Convention: party `i` listens on `addrs[i]`, dials every lower id, and
/// accepts connections from every higher id. Dialing retries briefly so
/// parties may start in any order.
pub fn connect_mesh(my_id: PartyId, addrs: &[SocketAddr]) -> Result<Endpoint, NetError> {
    let k = addrs.len();
    let mut endpoint = Endpoint::new(my_id);
    let listener = if (my_id as usize) < k - 1 {
        Some(TcpListener::bind(addrs[my_id as usize])?)
    } else {
        None
    };

    for peer in 0..my_id {
        let stream = dial_with_retry(addrs[peer as usize])?;
        let hello = my_id.to_le_bytes();
        (&stream).write_all(&hello)?;
        endpoint.add_peer(peer, Box::new(TcpChannel::new(peer, stream)?));
    }

    if let Some(listener) = listener {
        let expected = k - 1 - my_id as usize;
        for _ in 0..expected {
            let (mut stream, _) = listener.accept()?;
            let mut id_buf = [0u8; 4];
            stream.read_exact(&mut id_buf)?;
            let peer = u32::from_le_bytes(id_buf);
            if peer as usize >= k || peer <= my_id {
                return Err(NetError::Malformed(format!("unexpected hello from party {peer}")));
            }
            endpoint.add_peer(peer, Box::new(TcpChannel::new(peer, stream)?));
        }
    }
    Ok(endpoint)
}

fn dial_with_retry(addr: SocketAddr) -> Result<TcpStream, NetError> {
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(10);
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) => {
                if std::time::Instant::now() >= deadline {
                    return Err(NetError::Io(e));
                }
                std::thread::sleep(std::time::Duration::from_millis(20));
            }
        }
    }
}
