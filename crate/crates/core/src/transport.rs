//! Ordered, reliable, typed transport between parties.
//!
//! Wire framing (identical for in-process and socket links):
//! 4-byte little-endian payload length in bytes, 1-byte message tag,
//! 8-byte little-endian session id, then the payload as little-endian
//! 64-bit ring elements.
//!
//! Every link counts the bytes it sends so tests can assert that transcript
//! volume depends only on public shapes, and optionally records the tag
//! sequence for protocol audits.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use crossbeam_channel::{unbounded, Receiver, Sender};

use crate::error::{Error, Result};

/// Message kinds. The audit invariant: every payload a computing party sends
/// under a non-control tag is either fresh uniform randomness or a value
/// blinded by one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    /// Value blinded by a dealer-provided uniform mask, opened between the
    /// computing parties.
    MaskedOpen = 1,
    /// Beaver-style opening: operand minus a uniform triple component.
    BeaverOpen = 2,
    /// XOR-shared words blinded by uniform triple components.
    BitOpen = 3,
    /// Bit blinded by a uniform dealer bit.
    DaBitOpen = 4,
    /// Public shape descriptor asking the helper for correlated randomness.
    RandomnessRequest = 5,
    /// Fresh correlated randomness (or seed corrections) from the helper.
    RandomnessDelivery = 6,
    /// Designated-output opening; only the test/benchmark harness consumes it.
    OutputOpen = 7,
    /// Session control, empty payload.
    Shutdown = 8,
}

impl Tag {
    pub fn from_byte(b: u8) -> Result<Tag> {
        Ok(match b {
            1 => Tag::MaskedOpen,
            2 => Tag::BeaverOpen,
            3 => Tag::BitOpen,
            4 => Tag::DaBitOpen,
            5 => Tag::RandomnessRequest,
            6 => Tag::RandomnessDelivery,
            7 => Tag::OutputOpen,
            8 => Tag::Shutdown,
            _ => return Err(Error::Transport(format!("unknown message tag {b}"))),
        })
    }
}

pub fn encode_frame(tag: Tag, session_id: u64, payload: &[u64]) -> Vec<u8> {
    let payload_bytes = payload.len() * 8;
    let mut buf = Vec::with_capacity(13 + payload_bytes);
    buf.extend_from_slice(&(payload_bytes as u32).to_le_bytes());
    buf.push(tag as u8);
    buf.extend_from_slice(&session_id.to_le_bytes());
    for w in payload {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf
}

pub fn decode_frame(buf: &[u8]) -> Result<(Tag, u64, Vec<u64>)> {
    if buf.len() < 13 {
        return Err(Error::Transport(format!("short frame: {} bytes", buf.len())));
    }
    let len = u32::from_le_bytes(buf[0..4].try_into().unwrap()) as usize;
    if buf.len() != 13 + len || len % 8 != 0 {
        return Err(Error::Transport(format!(
            "bad frame length: header says {len}, got {} payload bytes",
            buf.len() - 13
        )));
    }
    let tag = Tag::from_byte(buf[4])?;
    let session = u64::from_le_bytes(buf[5..13].try_into().unwrap());
    let words = buf[13..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((tag, session, words))
}

enum Writer {
    InProc(Sender<Vec<u8>>),
    Tcp(TcpStream),
}

/// One directed pair of ordered byte streams between two parties.
pub struct Link {
    writer: Writer,
    incoming: Receiver<Vec<u8>>,
    session_id: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub frames_sent: u64,
    /// Tag sequence of sent messages, recorded when enabled.
    pub sent_tags: Option<Vec<Tag>>,
}

impl Link {
    pub fn send(&mut self, tag: Tag, payload: &[u64]) -> Result<()> {
        let frame = encode_frame(tag, self.session_id, payload);
        self.bytes_sent += frame.len() as u64;
        self.frames_sent += 1;
        if let Some(tags) = &mut self.sent_tags {
            tags.push(tag);
        }
        match &mut self.writer {
            Writer::InProc(tx) => tx
                .send(frame)
                .map_err(|_| Error::Transport("peer channel closed".into())),
            Writer::Tcp(stream) => {
                stream.write_all(&frame)?;
                stream.flush()?;
                Ok(())
            }
        }
    }

    pub fn recv(&mut self) -> Result<(Tag, Vec<u64>)> {
        // Spin briefly before blocking; protocol rounds are short and the
        // park/unpark latency of a blocking recv dominates small messages.
        let mut frame = None;
        for _ in 0..20_000 {
            match self.incoming.try_recv() {
                Ok(f) => {
                    frame = Some(f);
                    break;
                }
                Err(crossbeam_channel::TryRecvError::Empty) => std::hint::spin_loop(),
                Err(crossbeam_channel::TryRecvError::Disconnected) => {
                    return Err(Error::Transport("peer disconnected".into()))
                }
            }
        }
        let frame = match frame {
            Some(f) => f,
            None => self
                .incoming
                .recv()
                .map_err(|_| Error::Transport("peer disconnected".into()))?,
        };
        self.bytes_received += frame.len() as u64;
        let (tag, session, words) = decode_frame(&frame)?;
        if session != self.session_id {
            return Err(Error::Transport(format!(
                "session id mismatch: expected {}, got {session}",
                self.session_id
            )));
        }
        Ok((tag, words))
    }

    pub fn recv_expect(&mut self, expect: Tag) -> Result<Vec<u64>> {
        let (tag, words) = self.recv()?;
        if tag != expect {
            return Err(Error::Protocol(format!(
                "expected {expect:?} frame, got {tag:?}"
            )));
        }
        Ok(words)
    }
}

/// Build a connected in-process duplex pair carrying encoded frames.
pub fn in_proc_pair(session_id: u64) -> (Link, Link) {
    let (tx_a, rx_b) = unbounded();
    let (tx_b, rx_a) = unbounded();
    let mk = |tx, rx| Link {
        writer: Writer::InProc(tx),
        incoming: rx,
        session_id,
        bytes_sent: 0,
        bytes_received: 0,
        frames_sent: 0,
        sent_tags: None,
    };
    (mk(tx_a, rx_a), mk(tx_b, rx_b))
}

/// Wrap a connected TCP stream. A reader thread drains the socket into an
/// unbounded queue so symmetric sends can never deadlock on full buffers.
pub fn tcp_link(stream: TcpStream, session_id: u64) -> Result<Link> {
    stream.set_nodelay(true)?;
    let mut read_half = stream.try_clone()?;
    let (tx, rx) = unbounded();
    thread::spawn(move || {
        loop {
            let mut header = [0u8; 13];
            if read_half.read_exact(&mut header).is_err() {
                break;
            }
            let len = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
            let mut frame = vec![0u8; 13 + len];
            frame[..13].copy_from_slice(&header);
            if read_half.read_exact(&mut frame[13..]).is_err() {
                break;
            }
            if tx.send(frame).is_err() {
                break;
            }
        }
    });
    Ok(Link {
        writer: Writer::Tcp(stream),
        incoming: rx,
        session_id,
        bytes_sent: 0,
        bytes_received: 0,
        frames_sent: 0,
        sent_tags: None,
    })
}

/// Listen on `addr` and accept exactly `n` connections, in arrival order.
pub fn accept_n(addr: &str, n: usize, session_id: u64) -> Result<Vec<Link>> {
    let listener = TcpListener::bind(addr)?;
    let mut links = Vec::with_capacity(n);
    for _ in 0..n {
        let (stream, _) = listener.accept()?;
        links.push(tcp_link(stream, session_id)?);
    }
    Ok(links)
}

pub fn connect_retry(addr: &str, session_id: u64) -> Result<Link> {
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(10);
    loop {
        match TcpStream::connect(addr) {
            Ok(stream) => return tcp_link(stream, session_id),
            Err(e) => {
                if std::time::Instant::now() > deadline {
                    return Err(Error::Transport(format!("connect to {addr} failed: {e}")));
                }
                thread::sleep(std::time::Duration::from_millis(5));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip() {
        let payload = vec![1u64, u64::MAX, 0x0123_4567_89ab_cdef];
        let buf = encode_frame(Tag::BeaverOpen, 42, &payload);
        assert_eq!(buf.len(), 13 + 24);
        // Spot-check the layout: length, tag, session id, first word.
        assert_eq!(&buf[0..4], &24u32.to_le_bytes());
        assert_eq!(buf[4], Tag::BeaverOpen as u8);
        assert_eq!(&buf[5..13], &42u64.to_le_bytes());
        assert_eq!(&buf[13..21], &1u64.to_le_bytes());
        let (tag, session, words) = decode_frame(&buf).unwrap();
        assert_eq!(tag, Tag::BeaverOpen);
        assert_eq!(session, 42);
        assert_eq!(words, payload);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode_frame(&[0u8; 5]).is_err());
        let mut buf = encode_frame(Tag::Shutdown, 1, &[]);
        buf[4] = 200; // unknown tag
        assert!(decode_frame(&buf).is_err());
        let mut buf = encode_frame(Tag::Shutdown, 1, &[7]);
        buf.truncate(buf.len() - 1);
        assert!(decode_frame(&buf).is_err());
    }

    #[test]
    fn in_proc_duplex_carries_frames_both_ways() {
        let (mut a, mut b) = in_proc_pair(9);
        a.send(Tag::MaskedOpen, &[10, 20]).unwrap();
        b.send(Tag::MaskedOpen, &[30]).unwrap();
        assert_eq!(b.recv_expect(Tag::MaskedOpen).unwrap(), vec![10, 20]);
        assert_eq!(a.recv_expect(Tag::MaskedOpen).unwrap(), vec![30]);
        assert_eq!(a.bytes_sent, 13 + 16);
        assert_eq!(b.bytes_received, 13 + 16);
    }

    #[test]
    fn session_id_mismatch_is_an_error() {
        let (mut a, mut b) = in_proc_pair(1);
        b.session_id = 2;
        a.send(Tag::Shutdown, &[]).unwrap();
        assert!(b.recv().is_err());
    }

    #[test]
    fn tcp_links_match_in_proc_framing() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let t = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut link = tcp_link(stream, 5).unwrap();
            let words = link.recv_expect(Tag::OutputOpen).unwrap();
            link.send(Tag::OutputOpen, &words).unwrap();
        });
        let mut link = connect_retry(&addr.to_string(), 5).unwrap();
        link.send(Tag::OutputOpen, &[99, 100]).unwrap();
        assert_eq!(link.recv_expect(Tag::OutputOpen).unwrap(), vec![99, 100]);
        t.join().unwrap();
        assert_eq!(link.bytes_sent, 13 + 16);
        assert_eq!(link.bytes_received, 13 + 16);
    }
}
