//! The agreement session: `t_max` lockstep steps of shared sampling,
//! secure threshold test, alternating flip and barrier.
//!
//! Step `i` (from 1): both parties derive `S = joint_rand(seed, i, k, n)`,
//! learn whether their restrictions to `S` disagree in at least `r`
//! places, and if so party `c` with `i + c` odd flips `l` random positions
//! of `S` in its own string. Each party then sends a step-done token and
//! waits for its peer's.

mod monte_carlo;
mod trace;

pub use monte_carlo::{run_monte_carlo, run_trials, TrajectoryStats};
pub use trace::{read_trace_csv, write_trace_csv, TraceRecord};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bitstring::{BitError, BitString, PositionSet};
use crate::channel::{
    run_blocking, run_lockstep, duplex, Frame, MessageChannel, MessageKind, Role, RoundParty,
};
use crate::circuit::{build_threshold_circuit_with, Basis, Circuit};
use crate::mpc::{deal_triples, secure_evaluate, secure_evaluate_lockstep, MpcError, PartySetup, TripleSet};
use crate::randomness::{derive_seed, joint_rand, rand_subset, LocalRng, RandError, SharedSeed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("{0}")]
    Params(String),
    #[error(transparent)]
    Bits(#[from] BitError),
    #[error(transparent)]
    Rand(#[from] RandError),
    #[error("session failed after step {last_completed}: {source}")]
    Session { last_completed: u64, source: MpcError },
    #[error("trial {index}: {source}")]
    Trial { index: usize, source: Box<ProtocolError> },
    #[error("trace CSV: {0}")]
    Csv(String),
}

/// How the per-step threshold test is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Direct comparison by a harness that sees both strings.
    #[default]
    Oracle,
    /// Two-party secure evaluation of the threshold circuit.
    Secure,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "secure" => Ok(Mode::Secure),
            other => Err(format!("unknown mode {other:?} (expected oracle or secure)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Oracle => "oracle",
            Mode::Secure => "secure",
        })
    }
}

/// Knobs shared by both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub t_max: u64,
    /// Minimum number of sampled disagreements that triggers a flip.
    pub threshold: usize,
    pub seed: SharedSeed,
    pub mode: Mode,
    /// Optional early stop once the agreement density reaches this value.
    /// Off by default; a deployment cannot observe the density.
    pub stop_at_density: Option<f64>,
}

impl ProtocolParams {
    /// Oracle mode with threshold `ceil(k/2)`.
    pub fn new(n: usize, k: usize, l: usize, t_max: u64, seed: u64) -> Self {
        Self {
            n,
            k,
            l,
            t_max,
            threshold: k.div_ceil(2),
            seed: SharedSeed::new(seed),
            mode: Mode::Oracle,
            stop_at_density: None,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_threshold(mut self, r: usize) -> Self {
        self.threshold = r;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let p = |m: &str| Err(ProtocolError::Params(m.to_string()));
        if self.n == 0 {
            return p("n must be positive");
        }
        if self.k > self.n {
            return p("k must not exceed n");
        }
        if self.l == 0 {
            return p("l must be positive");
        }
        if self.l > self.k {
            return p("l must not exceed k");
        }
        if self.threshold > self.k {
            return p("threshold must not exceed k");
        }
        if let Some(d) = self.stop_at_density {
            if !(0.0..=1.0).contains(&d) {
                return p("stop density must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// The circuit the secure mode evaluates: sampled disagreements `>= r`.
    pub fn circuit(&self) -> Result<Circuit, ProtocolError> {
        build_threshold_circuit_with(self.k, self.threshold, Basis::Disagreement)
            .map_err(|e| ProtocolError::Params(e.to_string()))
    }

    fn dealer(&self) -> LocalRng {
        LocalRng::seeded(derive_seed(self.seed.value, DEALER_LABEL))
    }
}

const DEALER_LABEL: u64 = 0xD0_DEA1;

/// The party allowed to flip at `step`: `c` with `step + c` odd.
pub fn flipper(step: u64) -> Role {
    if step % 2 == 1 {
        Role::A
    } else {
        Role::B
    }
}

/// Final strings and per-step trace. The strings are returned for the
/// test harness only.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub a: BitString,
    pub b: BitString,
    pub trace: Vec<TraceRecord>,
}

struct Barrier {
    sent: bool,
    done: bool,
}

impl Barrier {
    fn new() -> Self {
        Self {
            sent: false,
            done: false,
        }
    }
}

impl RoundParty for Barrier {
    type Error = MpcError;

    fn outgoing(&mut self) -> Result<Option<Vec<u8>>, MpcError> {
        if self.sent {
            return Ok(None);
        }
        self.sent = true;
        Ok(Some(Frame::from_bits(MessageKind::StepDone, &[]).encode()))
    }

    fn incoming(&mut self, bytes: Vec<u8>) -> Result<(), MpcError> {
        Frame::decode(&bytes)?.expect_kind(MessageKind::StepDone)?.bits(0)?;
        self.done = true;
        Ok(())
    }

    fn desync(&self) -> MpcError {
        MpcError::RoundMismatch
    }
}

fn check_inputs(params: &ProtocolParams, a: &BitString, b: &BitString) -> Result<(), ProtocolError> {
    params.validate()?;
    if a.len() != params.n || b.len() != params.n {
        return Err(ProtocolError::Params(format!(
            "strings have lengths {} and {}, expected n = {}",
            a.len(),
            b.len(),
            params.n
        )));
    }
    Ok(())
}

fn sample(params: &ProtocolParams, step: u64) -> Result<PositionSet, ProtocolError> {
    Ok(joint_rand(&params.seed, step, params.k, params.n)?)
}

fn restricted_bits(s: &BitString, set: &PositionSet) -> Result<Vec<bool>, ProtocolError> {
    if set.is_empty() {
        return Ok(Vec::new());
    }
    Ok(s.restrict(set)?.to_bits())
}

fn reached_stop(params: &ProtocolParams, agreement: usize) -> bool {
    params
        .stop_at_density
        .is_some_and(|d| agreement as f64 / params.n as f64 >= d)
}

/// Runs a session in one thread, interleaving both parties in lockstep.
pub fn run_session(
    params: &ProtocolParams,
    a: BitString,
    b: BitString,
    rng_a: &mut LocalRng,
    rng_b: &mut LocalRng,
) -> Result<SessionOutcome, ProtocolError> {
    run_session_on(params, a, b, rng_a, rng_b, &mut MessageChannel::new())
}

/// [`run_session`] over a caller-supplied channel.
pub fn run_session_on(
    params: &ProtocolParams,
    mut a: BitString,
    mut b: BitString,
    rng_a: &mut LocalRng,
    rng_b: &mut LocalRng,
    channel: &mut MessageChannel,
) -> Result<SessionOutcome, ProtocolError> {
    check_inputs(params, &a, &b)?;
    // separate masking streams keep flip draws identical across modes
    let mut mask_a = rng_a.fork();
    let mut mask_b = rng_b.fork();
    let mut dealer = params.dealer();
    let circuit = match params.mode {
        Mode::Secure => Some(params.circuit()?),
        Mode::Oracle => None,
    };
    let mut trace = Vec::with_capacity(params.t_max.min(1 << 24) as usize);

    for step in 1..=params.t_max {
        let fail = |source: MpcError| ProtocolError::Session {
            last_completed: step - 1,
            source,
        };
        let set = sample(params, step)?;
        let before = channel.total_sent();
        let wa = restricted_bits(&a, &set)?;
        let wb = restricted_bits(&b, &set)?;

        let (flag, j) = match &circuit {
            None => {
                let j = wa.iter().zip(&wb).filter(|(x, y)| x != y).count();
                (j >= params.threshold, Some(j))
            }
            Some(c) => {
                let (ta, tb) = deal_triples(c.and_count(), &mut dealer);
                let (ra, rb) = secure_evaluate_lockstep(
                    c,
                    PartySetup {
                        bits: &wa,
                        triples: ta,
                        rng: &mut mask_a,
                    },
                    PartySetup {
                        bits: &wb,
                        triples: tb,
                        rng: &mut mask_b,
                    },
                    channel,
                )
                .map_err(fail)?;
                debug_assert_eq!(ra.output, rb.output);
                (ra.output[0], None)
            }
        };

        let turn = flipper(step);
        let mut s = None;
        if flag {
            let (own, rng) = match turn {
                Role::A => (&mut a, &mut *rng_a),
                Role::B => (&mut b, &mut *rng_b),
            };
            let flips = rand_subset(rng, params.l, &set)?;
            *own = own.flip_positions(&flips)?;
            if j.is_some() {
                // flipped positions that now agree were disagreements before
                s = Some(flips.iter().filter(|&i| a.get(i) == b.get(i)).count());
            }
        }

        run_lockstep(&mut Barrier::new(), &mut Barrier::new(), channel).map_err(fail)?;

        let agreement = a.agreement_count(&b)?;
        trace.push(TraceRecord {
            step,
            agreement,
            turn,
            flipped: flag,
            messages: channel.total_sent() - before,
            sample_disagreements: j,
            flipped_disagreements: if j.is_some() { Some(s.unwrap_or(0)) } else { None },
        });
        if reached_stop(params, agreement) {
            break;
        }
    }
    Ok(SessionOutcome { a, b, trace })
}

struct PartyLog {
    flips: Vec<Option<PositionSet>>,
    sent: Vec<u64>,
}

#[allow(clippy::too_many_arguments)]
fn party_loop(
    params: &ProtocolParams,
    circuit: &Circuit,
    role: Role,
    mut own: BitString,
    rng: &mut LocalRng,
    mask: &mut LocalRng,
    triples: Vec<TripleSet>,
    endpoint: &mut crate::channel::ThreadEndpoint,
) -> Result<(BitString, PartyLog), ProtocolError> {
    let mut log = PartyLog {
        flips: Vec::new(),
        sent: Vec::new(),
    };
    for (step, triples) in (1..=params.t_max).zip(triples) {
        let fail = |source: MpcError| ProtocolError::Session {
            last_completed: step - 1,
            source,
        };
        let before = endpoint.sent();
        let set = sample(params, step)?;
        let w = restricted_bits(&own, &set)?;
        let (out, _) = secure_evaluate(circuit, &w, role, endpoint, triples, mask).map_err(fail)?;
        let mut flipped = None;
        if out[0] && flipper(step) == role {
            let flips = rand_subset(rng, params.l, &set)?;
            own = own.flip_positions(&flips)?;
            flipped = Some(flips);
        }
        let mut barrier = Barrier::new();
        run_blocking(&mut barrier, endpoint).map_err(fail)?;
        log.flips.push(if out[0] { Some(flipped.unwrap_or_else(|| PositionSet::empty(params.n))) } else { None });
        log.sent.push(endpoint.sent() - before);
    }
    Ok((own, log))
}

/// Secure-mode session with each party on its own thread, talking over a
/// blocking duplex. Produces the same trace as [`run_session`] in secure
/// mode for the same seeds.
pub fn run_session_threaded(
    params: &ProtocolParams,
    a: BitString,
    b: BitString,
    rng_a: &mut LocalRng,
    rng_b: &mut LocalRng,
) -> Result<SessionOutcome, ProtocolError> {
    check_inputs(params, &a, &b)?;
    if params.mode != Mode::Secure {
        return Err(ProtocolError::Params("threaded sessions run in secure mode only".into()));
    }
    if params.stop_at_density.is_some() {
        return Err(ProtocolError::Params("parties cannot observe the density in threaded mode".into()));
    }
    let circuit = params.circuit()?;
    let mut mask_a = rng_a.fork();
    let mut mask_b = rng_b.fork();
    let mut dealer = params.dealer();
    let (mut triples_a, mut triples_b) = (Vec::new(), Vec::new());
    for _ in 0..params.t_max {
        let (ta, tb) = deal_triples(circuit.and_count(), &mut dealer);
        triples_a.push(ta);
        triples_b.push(tb);
    }
    let (mut ea, mut eb) = duplex();
    let (a0, b0) = (a.clone(), b.clone());
    let (res_a, res_b) = std::thread::scope(|scope| {
        let c = &circuit;
        let ha = scope.spawn(|| party_loop(params, c, Role::A, a, rng_a, &mut mask_a, triples_a, &mut ea));
        let hb = scope.spawn(|| party_loop(params, c, Role::B, b, rng_b, &mut mask_b, triples_b, &mut eb));
        (ha.join().expect("party A panicked"), hb.join().expect("party B panicked"))
    });
    let (fa, log_a) = res_a?;
    let (fb, log_b) = res_b?;

    let (mut ra, mut rb) = (a0, b0);
    let mut trace = Vec::with_capacity(params.t_max as usize);
    for (i, step) in (1..=params.t_max).enumerate() {
        let turn = flipper(step);
        let flag = log_a.flips[i].is_some();
        let log = if turn == Role::A { &log_a } else { &log_b };
        if let Some(set) = &log.flips[i] {
            match turn {
                Role::A => ra = ra.flip_positions(set)?,
                Role::B => rb = rb.flip_positions(set)?,
            }
        }
        trace.push(TraceRecord {
            step,
            agreement: ra.agreement_count(&rb)?,
            turn,
            flipped: flag,
            messages: log_a.sent[i] + log_b.sent[i],
            sample_disagreements: None,
            flipped_disagreements: None,
        });
    }
    debug_assert_eq!((&ra, &rb), (&fa, &fb));
    Ok(SessionOutcome { a: fa, b: fb, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::make_pair_with_agreement;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn zero_steps_leave_strings() {
        let p = ProtocolParams::new(4, 2, 1, 0, 1);
        let out = run_session(&p, bs("0011"), bs("0101"), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
        assert_eq!((out.a, out.b), (bs("0011"), bs("0101")));
        assert!(out.trace.is_empty());
    }

    #[test]
    fn forced_full_flip() {
        for mode in [Mode::Oracle, Mode::Secure] {
            let p = ProtocolParams::new(4, 4, 4, 1, 5).with_mode(mode);
            let out =
                run_session(&p, bs("0000"), bs("1111"), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
            assert_eq!(out.trace.len(), 1);
            let r = &out.trace[0];
            assert_eq!((r.agreement, r.turn, r.flipped), (4, Role::A, true));
            assert_eq!(out.a, bs("1111"));
            if mode == Mode::Oracle {
                assert_eq!((r.sample_disagreements, r.flipped_disagreements), (Some(4), Some(4)));
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let (a, b) = (bs("0000"), bs("1111"));
        let mut r = (LocalRng::seeded(1), LocalRng::seeded(2));
        for p in [
            ProtocolParams::new(4, 5, 1, 1, 0),
            ProtocolParams::new(4, 2, 3, 1, 0),
            ProtocolParams::new(4, 2, 0, 1, 0),
            ProtocolParams::new(4, 2, 1, 1, 0).with_threshold(3),
            ProtocolParams::new(5, 2, 1, 1, 0),
        ] {
            assert!(matches!(
                run_session(&p, a.clone(), b.clone(), &mut r.0, &mut r.1),
                Err(ProtocolError::Params(_))
            ));
        }
        assert_eq!(
            ProtocolParams::new(10, 20, 2, 1, 0).validate(),
            Err(ProtocolError::Params("k must not exceed n".into()))
        );
    }

    #[test]
    fn alternation_and_step_bounds() {
        let mut rng = LocalRng::seeded(3);
        let (a, b) = make_pair_with_agreement(200, 60, &mut rng).unwrap();
        let p = ProtocolParams::new(200, 5, 2, 400, 17);
        let out = run_session(&p, a.clone(), b.clone(), &mut LocalRng::seeded(4), &mut LocalRng::seeded(5)).unwrap();
        assert_eq!(out.trace.len(), 400);
        let mut prev = 60usize;
        for r in &out.trace {
            assert!(r.agreement.abs_diff(prev) <= p.l);
            assert_eq!(r.turn, if r.step % 2 == 1 { Role::A } else { Role::B });
            let j = r.sample_disagreements.unwrap();
            assert_eq!(r.flipped, j >= p.threshold);
            let s = r.flipped_disagreements.unwrap();
            if r.flipped {
                // net change is s gained minus (l - s) lost
                assert_eq!(r.agreement as i64 - prev as i64, 2 * s as i64 - p.l as i64);
            } else {
                assert_eq!(r.agreement, prev);
            }
            // only the flipper's string changes
            prev = r.agreement;
        }
        assert_eq!(out.a.agreement_count(&out.b).unwrap(), prev);
    }

    #[test]
    fn deterministic_replay() {
        let mut rng = LocalRng::seeded(8);
        let (a, b) = make_pair_with_agreement(100, 30, &mut rng).unwrap();
        let p = ProtocolParams::new(100, 5, 2, 300, 99).with_mode(Mode::Secure);
        let run = || run_session(&p, a.clone(), b.clone(), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
        let (x, y) = (run(), run());
        assert_eq!(x, y);
        let (mut bx, mut by) = (Vec::new(), Vec::new());
        write_trace_csv(&x.trace, 100, &mut bx).unwrap();
        write_trace_csv(&y.trace, 100, &mut by).unwrap();
        assert_eq!(bx, by);
    }

    #[test]
    fn secure_messages_per_step() {
        let p = ProtocolParams::new(50, 5, 2, 10, 1).with_mode(Mode::Secure);
        let depth = p.circuit().unwrap().and_depth() as u64;
        let mut rng = LocalRng::seeded(1);
        let (a, b) = make_pair_with_agreement(50, 20, &mut rng).unwrap();
        let out = run_session(&p, a, b, &mut LocalRng::seeded(2), &mut LocalRng::seeded(3)).unwrap();
        for r in &out.trace {
            assert_eq!(r.messages, 2 * (depth + 2) + 2);
        }
    }

    #[test]
    fn channel_failure_reports_last_step() {
        let p = ProtocolParams::new(50, 5, 2, 10, 1).with_mode(Mode::Secure);
        let per_step = 2 * (p.circuit().unwrap().and_depth() as u64 + 2) + 2;
        let mut rng = LocalRng::seeded(1);
        let (a, b) = make_pair_with_agreement(50, 20, &mut rng).unwrap();
        let mut ch = MessageChannel::close_after(3 * per_step + 1);
        let err = run_session_on(&p, a, b, &mut LocalRng::seeded(2), &mut LocalRng::seeded(3), &mut ch).unwrap_err();
        assert!(matches!(err, ProtocolError::Session { last_completed: 3, .. }), "{err:?}");
    }

    #[test]
    fn threaded_matches_lockstep() {
        let mut rng = LocalRng::seeded(21);
        let (a, b) = make_pair_with_agreement(120, 40, &mut rng).unwrap();
        let p = ProtocolParams::new(120, 5, 2, 150, 77).with_mode(Mode::Secure);
        let lock = run_session(&p, a.clone(), b.clone(), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
        let thr =
            run_session_threaded(&p, a.clone(), b.clone(), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
        assert_eq!(lock, thr);
        assert!(run_session_threaded(&p.clone().with_mode(Mode::Oracle), a, b, &mut rng.clone(), &mut rng).is_err());
    }

    #[test]
    fn optional_early_stop() {
        let mut rng = LocalRng::seeded(2);
        let (a, b) = make_pair_with_agreement(100, 50, &mut rng).unwrap();
        let mut p = ProtocolParams::new(100, 3, 1, 100_000, 4);
        p.stop_at_density = Some(0.8);
        let out = run_session(&p, a, b, &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
        let last = out.trace.last().unwrap();
        assert!(last.agreement >= 80);
        assert!((out.trace.len() as u64) < p.t_max);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("secure".parse::<Mode>(), Ok(Mode::Secure));
        assert_eq!(Mode::Oracle.to_string(), "oracle");
        assert!("fast".parse::<Mode>().is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let mut rng = LocalRng::seeded(5);
        let (a, b) = make_pair_with_agreement(64, 20, &mut rng).unwrap();
        for mode in [Mode::Oracle, Mode::Secure] {
            let p = ProtocolParams::new(64, 5, 2, 50, 3).with_mode(mode);
            let out = run_session(&p, a.clone(), b.clone(), &mut LocalRng::seeded(1), &mut LocalRng::seeded(2)).unwrap();
            let mut buf = Vec::new();
            write_trace_csv(&out.trace, 64, &mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            let header = text.lines().next().unwrap();
            match mode {
                Mode::Oracle => assert_eq!(header, "step,X,density,turn,flipped,msgs,j,s"),
                Mode::Secure => assert_eq!(header, "step,X,density,turn,flipped,msgs"),
            }
            assert_eq!(text.lines().count(), 51);
            let back = read_trace_csv(buf.as_slice()).unwrap();
            assert_eq!(back, out.trace);
        }
        assert!(read_trace_csv(&b"step,X\n1,2\n"[..]).is_err());
    }
}
