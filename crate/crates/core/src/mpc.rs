//! Semi-honest two-party circuit evaluation over XOR shares.
//!
//! Inputs are one-time-pad shared, XOR/NOT/constant gates are evaluated
//! locally, and each AND gate consumes one Beaver triple from a simulated
//! trusted dealer. AND gates of equal multiplicative depth travel in one
//! message per direction, so a circuit of AND depth `d` costs
//! `d + 2` rounds (input sharing, `d` AND layers, output opening)
//! regardless of the inputs.

use rand::Rng;
use thiserror::Error;

use crate::channel::{
    run_blocking, run_lockstep, ChannelError, Endpoint, Frame, FrameError, MessageChannel, MessageKind, Role,
    RoundParty,
};
use crate::circuit::{Circuit, CircuitError, Gate};
use crate::randomness::{random_bits, LocalRng};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MpcError {
    #[error("triples exhausted: circuit needs {needed}, {available} available")]
    TriplesExhausted { needed: usize, available: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("protocol error: {0}")]
    Framing(#[from] FrameError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("peers disagree on the number of rounds")]
    RoundMismatch,
}

/// One party's share of a Beaver triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleShare {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

/// Dealt triples with a consumption cursor; each triple is used once.
#[derive(Debug, Clone, Default)]
pub struct TripleSet {
    triples: Vec<TripleShare>,
    cursor: usize,
}

impl TripleSet {
    pub fn new(triples: Vec<TripleShare>) -> Self {
        Self { triples, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.triples.len() - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn shares(&self) -> &[TripleShare] {
        &self.triples
    }

    pub fn take(&mut self) -> Result<TripleShare, MpcError> {
        let t = self.triples.get(self.cursor).copied().ok_or(MpcError::TriplesExhausted {
            needed: self.cursor + 1,
            available: self.triples.len(),
        })?;
        self.cursor += 1;
        Ok(t)
    }
}

/// Trusted-dealer stand-in for oblivious-transfer based triple generation.
pub fn deal_triples(count: usize, rng: &mut LocalRng) -> (TripleSet, TripleSet) {
    let mut for_a = Vec::with_capacity(count);
    let mut for_b = Vec::with_capacity(count);
    for _ in 0..count {
        let (a, b): (bool, bool) = (rng.random(), rng.random());
        let c = a & b;
        let sa = TripleShare {
            a: rng.random(),
            b: rng.random(),
            c: rng.random(),
        };
        for_b.push(TripleShare {
            a: a ^ sa.a,
            b: b ^ sa.b,
            c: c ^ sa.c,
        });
        for_a.push(sa);
    }
    (TripleSet::new(for_a), TripleSet::new(for_b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AToB,
    BToA,
}

impl Direction {
    fn from_sender(r: Role) -> Self {
        match r {
            Role::A => Direction::AToB,
            Role::B => Direction::BToA,
        }
    }
}

/// Message log of one evaluation as seen by one party.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub messages: Vec<(Direction, usize)>,
    pub rounds: usize,
}

impl Transcript {
    pub fn message_count(&self) -> usize {
        self.messages.len()
    }

    pub fn total_bytes(&self) -> usize {
        self.messages.iter().map(|(_, n)| n).sum()
    }

    /// Messages this party sent.
    pub fn sent_by(&self, role: Role) -> usize {
        let d = Direction::from_sender(role);
        self.messages.iter().filter(|(dir, _)| *dir == d).count()
    }
}

/// A party's XOR shares of both input vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputShares {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Input,
    Layer(usize),
    Output,
    Done,
}

/// Round-driven GMW evaluator for one party.
#[derive(Debug)]
pub struct GmwParty<'c> {
    circuit: &'c Circuit,
    role: Role,
    layers: Vec<Vec<usize>>,
    shares: Vec<bool>,
    ready: Vec<bool>,
    my_bits: Vec<bool>,
    masks: Vec<bool>,
    triples: TripleSet,
    pending: Vec<(usize, TripleShare, bool, bool)>,
    phase: Phase,
    output: Option<Vec<bool>>,
    transcript: Transcript,
}

impl<'c> GmwParty<'c> {
    pub fn new(
        circuit: &'c Circuit,
        role: Role,
        my_bits: &[bool],
        triples: TripleSet,
        rng: &mut LocalRng,
    ) -> Result<Self, MpcError> {
        let expected = match role {
            Role::A => circuit.inputs_a().len(),
            Role::B => circuit.inputs_b().len(),
        };
        if my_bits.len() != expected {
            return Err(CircuitError::InputLength {
                party: if role == Role::A { 'A' } else { 'B' },
                got: my_bits.len(),
                expected,
            }
            .into());
        }
        let needed = circuit.and_count();
        if triples.remaining() < needed {
            return Err(MpcError::TriplesExhausted {
                needed,
                available: triples.remaining(),
            });
        }
        let masks = random_bits(rng, my_bits.len());
        let phase = if circuit.input_count() > 0 {
            Phase::Input
        } else {
            Phase::Layer(0)
        };
        let mut party = Self {
            circuit,
            role,
            layers: circuit.and_layers(),
            shares: vec![false; circuit.wire_count()],
            ready: vec![false; circuit.wire_count()],
            my_bits: my_bits.to_vec(),
            masks,
            triples,
            pending: Vec::new(),
            phase,
            output: None,
            transcript: Transcript::default(),
        };
        if party.phase != Phase::Input {
            party.advance_past_empty();
        }
        Ok(party)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn output(&self) -> Option<&[bool]> {
        self.output.as_deref()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn triples(&self) -> &TripleSet {
        &self.triples
    }

    /// Shares held for every wire evaluated so far.
    pub fn wire_shares(&self) -> &[bool] {
        &self.shares
    }

    pub fn into_result(self) -> Option<(Vec<bool>, Transcript, TripleSet)> {
        let GmwParty {
            output,
            transcript,
            triples,
            ..
        } = self;
        output.map(|o| (o, transcript, triples))
    }

    fn set(&mut self, wire: usize, v: bool) {
        self.shares[wire] = v;
        self.ready[wire] = true;
    }

    fn eval_free_gates(&mut self) {
        let base = self.circuit.input_count();
        let is_a = self.role == Role::A;
        for (g, gate) in self.circuit.gates().iter().enumerate() {
            let w = base + g;
            if self.ready[w] {
                continue;
            }
            let v = match *gate {
                Gate::Xor(x, y) if self.ready[x] && self.ready[y] => self.shares[x] ^ self.shares[y],
                Gate::Not(x) if self.ready[x] => self.shares[x] ^ is_a,
                Gate::Const0 => false,
                Gate::Const1 => is_a,
                _ => continue,
            };
            self.set(w, v);
        }
    }

    fn advance_past_empty(&mut self) {
        self.eval_free_gates();
        if let Phase::Layer(i) = self.phase {
            if i >= self.layers.len() {
                self.phase = if self.circuit.outputs().is_empty() {
                    self.output = Some(Vec::new());
                    Phase::Done
                } else {
                    Phase::Output
                };
            }
        }
    }

    fn frame_out(&mut self, frame: Frame) -> Vec<u8> {
        let bytes = frame.encode();
        self.transcript
            .messages
            .push((Direction::from_sender(self.role), bytes.len()));
        bytes
    }

    fn own_input_wires(&self) -> std::ops::Range<usize> {
        match self.role {
            Role::A => self.circuit.inputs_a(),
            Role::B => self.circuit.inputs_b(),
        }
    }

    fn peer_input_wires(&self) -> std::ops::Range<usize> {
        match self.role {
            Role::A => self.circuit.inputs_b(),
            Role::B => self.circuit.inputs_a(),
        }
    }
}

impl RoundParty for GmwParty<'_> {
    type Error = MpcError;

    fn outgoing(&mut self) -> Result<Option<Vec<u8>>, MpcError> {
        let frame = match self.phase {
            Phase::Done => return Ok(None),
            Phase::Input => {
                // keep x ^ m, send m
                for (i, w) in self.own_input_wires().enumerate() {
                    let share = self.my_bits[i] ^ self.masks[i];
                    self.set(w, share);
                }
                Frame::from_bits(MessageKind::InputShare, &self.masks)
            }
            Phase::Layer(i) => {
                let mut payload = Vec::with_capacity(2 * self.layers[i].len());
                self.pending.clear();
                for idx in 0..self.layers[i].len() {
                    let g = self.layers[i][idx];
                    let Gate::And(x, y) = self.circuit.gates()[g] else {
                        unreachable!("layers hold AND gates only")
                    };
                    let t = self.triples.take()?;
                    let d = self.shares[x] ^ t.a;
                    let e = self.shares[y] ^ t.b;
                    payload.push(d);
                    payload.push(e);
                    self.pending.push((self.circuit.gate_wire(g), t, d, e));
                }
                Frame::from_bits(MessageKind::AndMask, &payload)
            }
            Phase::Output => {
                let outs: Vec<bool> = self.circuit.outputs().iter().map(|&w| self.shares[w]).collect();
                Frame::from_bits(MessageKind::OutputOpen, &outs)
            }
        };
        Ok(Some(self.frame_out(frame)))
    }

    fn incoming(&mut self, bytes: Vec<u8>) -> Result<(), MpcError> {
        let peer = Direction::from_sender(self.role.peer());
        self.transcript.messages.push((peer, bytes.len()));
        self.transcript.rounds += 1;
        let frame = Frame::decode(&bytes)?;
        match self.phase {
            Phase::Done => return Err(MpcError::RoundMismatch),
            Phase::Input => {
                let wires = self.peer_input_wires();
                let bits = frame.expect_kind(MessageKind::InputShare)?.bits(wires.len())?;
                for (w, b) in wires.zip(bits) {
                    self.set(w, b);
                }
                self.phase = Phase::Layer(0);
            }
            Phase::Layer(i) => {
                let bits = frame
                    .expect_kind(MessageKind::AndMask)?
                    .bits(2 * self.pending.len())?;
                let is_a = self.role == Role::A;
                let pending = std::mem::take(&mut self.pending);
                for (k, (w, t, d_own, e_own)) in pending.into_iter().enumerate() {
                    let d = d_own ^ bits[2 * k];
                    let e = e_own ^ bits[2 * k + 1];
                    let z = t.c ^ (d & t.b) ^ (e & t.a) ^ (is_a & d & e);
                    self.set(w, z);
                }
                self.phase = Phase::Layer(i + 1);
            }
            Phase::Output => {
                let n = self.circuit.outputs().len();
                let theirs = frame.expect_kind(MessageKind::OutputOpen)?.bits(n)?;
                let out = self
                    .circuit
                    .outputs()
                    .iter()
                    .zip(theirs)
                    .map(|(&w, t)| self.shares[w] ^ t)
                    .collect();
                self.output = Some(out);
                self.phase = Phase::Done;
                return Ok(());
            }
        }
        self.advance_past_empty();
        Ok(())
    }

    fn desync(&self) -> MpcError {
        MpcError::RoundMismatch
    }
}

/// Output of one party after a secure evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyResult {
    pub output: Vec<bool>,
    pub transcript: Transcript,
    pub triples_consumed: usize,
}

fn finish(p: GmwParty<'_>) -> Result<PartyResult, MpcError> {
    let (output, transcript, triples) = p.into_result().ok_or(MpcError::RoundMismatch)?;
    Ok(PartyResult {
        output,
        transcript,
        triples_consumed: triples.consumed(),
    })
}

/// Evaluates `c` for one party over a blocking endpoint. The peer must
/// run the same circuit in the other role concurrently.
pub fn secure_evaluate(
    c: &Circuit,
    my_bits: &[bool],
    role: Role,
    endpoint: &mut impl Endpoint,
    triples: TripleSet,
    rng: &mut LocalRng,
) -> Result<(Vec<bool>, Transcript), MpcError> {
    let mut party = GmwParty::new(c, role, my_bits, triples, rng)?;
    run_blocking(&mut party, endpoint)?;
    let r = finish(party)?;
    Ok((r.output, r.transcript))
}

/// Randomness and triples for one side of a lockstep evaluation.
pub struct PartySetup<'a> {
    pub bits: &'a [bool],
    pub triples: TripleSet,
    pub rng: &'a mut LocalRng,
}

/// Runs both parties in one thread over an in-memory channel.
pub fn secure_evaluate_lockstep(
    c: &Circuit,
    a: PartySetup<'_>,
    b: PartySetup<'_>,
    channel: &mut MessageChannel,
) -> Result<(PartyResult, PartyResult), MpcError> {
    let mut pa = GmwParty::new(c, Role::A, a.bits, a.triples, a.rng)?;
    let mut pb = GmwParty::new(c, Role::B, b.bits, b.triples, b.rng)?;
    run_lockstep(&mut pa, &mut pb, channel)?;
    Ok((finish(pa)?, finish(pb)?))
}

/// Convenience wrapper: deals fresh triples and evaluates in lockstep.
pub fn evaluate_with_dealer(
    c: &Circuit,
    a_bits: &[bool],
    b_bits: &[bool],
    dealer: &mut LocalRng,
    rng_a: &mut LocalRng,
    rng_b: &mut LocalRng,
) -> Result<(PartyResult, PartyResult), MpcError> {
    let (ta, tb) = deal_triples(c.and_count(), dealer);
    let mut channel = MessageChannel::new();
    secure_evaluate_lockstep(
        c,
        PartySetup {
            bits: a_bits,
            triples: ta,
            rng: rng_a,
        },
        PartySetup {
            bits: b_bits,
            triples: tb,
            rng: rng_b,
        },
        &mut channel,
    )
}

/// Input-sharing round on its own: returns this party's shares of both
/// inputs. `peer_len` is the peer's input length. Sends nothing when both
/// inputs are empty.
pub fn input_share(
    my_bits: &[bool],
    peer_len: usize,
    role: Role,
    rng: &mut LocalRng,
    endpoint: &mut impl Endpoint,
) -> Result<InputShares, MpcError> {
    if my_bits.is_empty() && peer_len == 0 {
        return Ok(InputShares {
            a: Vec::new(),
            b: Vec::new(),
        });
    }
    let masks = random_bits(rng, my_bits.len());
    let mine: Vec<bool> = my_bits.iter().zip(&masks).map(|(x, m)| x ^ m).collect();
    endpoint.send(Frame::from_bits(MessageKind::InputShare, &masks).encode())?;
    let reply = Frame::decode(&endpoint.recv()?)?;
    let theirs = reply.expect_kind(MessageKind::InputShare)?.bits(peer_len)?;
    Ok(match role {
        Role::A => InputShares { a: mine, b: theirs },
        Role::B => InputShares { a: theirs, b: mine },
    })
}
