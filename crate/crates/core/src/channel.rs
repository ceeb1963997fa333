//! Framed messages and the two transports: an in-memory pair of FIFO
//! queues driven in lockstep, and a blocking thread-to-thread duplex.
//!
//! Frame layout: 4-byte big-endian payload length (bytes), 1-byte kind,
//! then the payload bits packed 8 per byte, least significant bit first,
//! zero padded.

use std::collections::VecDeque;
use std::fmt;
use std::sync::mpsc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    A,
    B,
}

impl Role {
    pub fn index(self) -> usize {
        match self {
            Role::A => 0,
            Role::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Role {
        if i == 0 {
            Role::A
        } else {
            Role::B
        }
    }

    pub fn peer(self) -> Role {
        match self {
            Role::A => Role::B,
            Role::B => Role::A,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::A => "A",
            Role::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    InputShare = 0x01,
    AndMask = 0x02,
    OutputOpen = 0x03,
    /// Barrier token closing a protocol step.
    StepDone = 0x04,
}

impl TryFrom<u8> for MessageKind {
    type Error = FrameError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0x01 => Ok(MessageKind::InputShare),
            0x02 => Ok(MessageKind::AndMask),
            0x03 => Ok(MessageKind::OutputOpen),
            0x04 => Ok(MessageKind::StepDone),
            other => Err(FrameError::UnknownKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame shorter than its header or declared length")]
    Truncated,
    #[error("trailing bytes after frame")]
    Trailing,
    #[error("unknown message kind {0:#04x}")]
    UnknownKind(u8),
    #[error("expected {expected:?} frame, got {got:?}")]
    UnexpectedKind { expected: MessageKind, got: MessageKind },
    #[error("expected {expected} payload bytes, got {got}")]
    PayloadLength { expected: usize, got: usize },
    #[error("nonzero padding bits")]
    Padding,
}

pub const HEADER_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn from_bits(kind: MessageKind, bits: &[bool]) -> Self {
        let mut payload = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                payload[i / 8] |= 1 << (i % 8);
            }
        }
        Self { kind, payload }
    }

    /// Unpacks exactly `count` bits, rejecting wrong lengths or padding.
    pub fn bits(&self, count: usize) -> Result<Vec<bool>, FrameError> {
        let expected = count.div_ceil(8);
        if self.payload.len() != expected {
            return Err(FrameError::PayloadLength {
                expected,
                got: self.payload.len(),
            });
        }
        let used = count % 8;
        if used != 0 && self.payload[expected - 1] >> used != 0 {
            return Err(FrameError::Padding);
        }
        Ok((0..count).map(|i| (self.payload[i / 8] >> (i % 8)) & 1 == 1).collect())
    }

    pub fn expect_kind(&self, kind: MessageKind) -> Result<&Self, FrameError> {
        if self.kind != kind {
            return Err(FrameError::UnexpectedKind {
                expected: kind,
                got: self.kind,
            });
        }
        Ok(self)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated);
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        let kind = MessageKind::try_from(bytes[4])?;
        let body = &bytes[HEADER_LEN..];
        match body.len().cmp(&len) {
            std::cmp::Ordering::Less => Err(FrameError::Truncated),
            std::cmp::Ordering::Greater => Err(FrameError::Trailing),
            std::cmp::Ordering::Equal => Ok(Self {
                kind,
                payload: body.to_vec(),
            }),
        }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel closed")]
    Closed,
    #[error("no message waiting")]
    Empty,
}

/// One party's view of a reliable, in-order duplex link.
pub trait Endpoint {
    fn send(&mut self, bytes: Vec<u8>) -> Result<(), ChannelError>;
    fn recv(&mut self) -> Result<Vec<u8>, ChannelError>;
}

/// Two FIFO queues, one per direction.
#[derive(Debug, Default)]
pub struct MessageChannel {
    queues: [VecDeque<Vec<u8>>; 2],
    sent: [u64; 2],
    delivered: [u64; 2],
    close_after: Option<u64>,
}

impl MessageChannel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails every send once `limit` messages have been sent in total.
    pub fn close_after(limit: u64) -> Self {
        Self {
            close_after: Some(limit),
            ..Self::default()
        }
    }

    pub fn send(&mut self, from: Role, bytes: Vec<u8>) -> Result<(), ChannelError> {
        if let Some(limit) = self.close_after {
            if self.total_sent() >= limit {
                return Err(ChannelError::Closed);
            }
        }
        self.queues[from.index()].push_back(bytes);
        self.sent[from.index()] += 1;
        Ok(())
    }

    pub fn recv(&mut self, to: Role) -> Result<Vec<u8>, ChannelError> {
        let from = to.peer().index();
        let msg = self.queues[from].pop_front().ok_or(ChannelError::Empty)?;
        self.delivered[from] += 1;
        Ok(msg)
    }

    /// Messages sent by `role`.
    pub fn sent(&self, role: Role) -> u64 {
        self.sent[role.index()]
    }

    /// Messages from `role` that have been delivered to its peer.
    pub fn delivered(&self, role: Role) -> u64 {
        self.delivered[role.index()]
    }

    pub fn total_sent(&self) -> u64 {
        self.sent[0] + self.sent[1]
    }

    pub fn in_flight(&self) -> usize {
        self.queues[0].len() + self.queues[1].len()
    }

    pub fn endpoint(&mut self, role: Role) -> LocalEndpoint<'_> {
        LocalEndpoint { channel: self, role }
    }
}

pub struct LocalEndpoint<'a> {
    channel: &'a mut MessageChannel,
    role: Role,
}

impl Endpoint for LocalEndpoint<'_> {
    fn send(&mut self, bytes: Vec<u8>) -> Result<(), ChannelError> {
        self.channel.send(self.role, bytes)
    }

    fn recv(&mut self) -> Result<Vec<u8>, ChannelError> {
        self.channel.recv(self.role)
    }
}

/// Blocking endpoint for a party running on its own thread.
pub struct ThreadEndpoint {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
    sent: u64,
}

impl ThreadEndpoint {
    pub fn sent(&self) -> u64 {
        self.sent
    }
}

impl Endpoint for ThreadEndpoint {
    fn send(&mut self, bytes: Vec<u8>) -> Result<(), ChannelError> {
        self.tx.send(bytes).map_err(|_| ChannelError::Closed)?;
        self.sent += 1;
        Ok(())
    }

    fn recv(&mut self) -> Result<Vec<u8>, ChannelError> {
        self.rx.recv().map_err(|_| ChannelError::Closed)
    }
}

/// Connected pair of blocking endpoints (A's, B's).
pub fn duplex() -> (ThreadEndpoint, ThreadEndpoint) {
    let (tx_ab, rx_ab) = mpsc::channel();
    let (tx_ba, rx_ba) = mpsc::channel();
    (
        ThreadEndpoint {
            tx: tx_ab,
            rx: rx_ba,
            sent: 0,
        },
        ThreadEndpoint {
            tx: tx_ba,
            rx: rx_ab,
            sent: 0,
        },
    )
}

/// A party that speaks in synchronous rounds: in every round it sends one
/// message and then consumes exactly one message from its peer.
pub trait RoundParty {
    type Error: From<ChannelError>;

    /// The next message to send, or `None` once the party is finished.
    fn outgoing(&mut self) -> Result<Option<Vec<u8>>, Self::Error>;

    fn incoming(&mut self, bytes: Vec<u8>) -> Result<(), Self::Error>;

    /// Called when exactly one side has finished while the other still
    /// wants to talk.
    fn desync(&self) -> Self::Error;
}

/// Runs both parties in one thread, round by round, over `channel`.
pub fn run_lockstep<P, Q, E>(a: &mut P, b: &mut Q, channel: &mut MessageChannel) -> Result<(), E>
where
    P: RoundParty<Error = E>,
    Q: RoundParty<Error = E>,
    E: From<ChannelError>,
{
    loop {
        let out_a = a.outgoing()?;
        let out_b = b.outgoing()?;
        match (out_a, out_b) {
            (None, None) => return Ok(()),
            (Some(ma), Some(mb)) => {
                channel.send(Role::A, ma)?;
                channel.send(Role::B, mb)?;
                a.incoming(channel.recv(Role::A)?)?;
                b.incoming(channel.recv(Role::B)?)?;
            }
            (Some(_), None) => return Err(b.desync()),
            (None, Some(_)) => return Err(a.desync()),
        }
    }
}

/// Runs one party to completion over a blocking endpoint.
pub fn run_blocking<P: RoundParty>(party: &mut P, endpoint: &mut impl Endpoint) -> Result<(), P::Error> {
    while let Some(msg) = party.outgoing()? {
        endpoint.send(msg)?;
        let reply = endpoint.recv()?;
        party.incoming(reply)?;
    }
    Ok(())
}
