use std::io::{Read, Write};

use super::ProtocolError;
use crate::channel::Role;

/// What happened in one protocol step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub step: u64,
    /// Agreement count after the step.
    pub agreement: usize,
    /// The party allowed to flip in this step.
    pub turn: Role,
    pub flipped: bool,
    /// Frames sent by both parties during the step.
    pub messages: u64,
    /// Oracle mode only: disagreements in the sampled positions.
    pub sample_disagreements: Option<usize>,
    /// Oracle mode only: disagreements among the flipped positions.
    pub flipped_disagreements: Option<usize>,
}

impl TraceRecord {
    /// The fields both modes produce, for cross-mode comparison.
    pub fn public_view(&self) -> (u64, usize, Role, bool) {
        (self.step, self.agreement, self.turn, self.flipped)
    }
}

fn csv_err(e: csv::Error) -> ProtocolError {
    ProtocolError::Csv(e.to_string())
}

/// Writes `step,X,density,turn,flipped,msgs`, plus `,j,s` when the records
/// carry oracle fields. Density has six decimals.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], n: usize, out: W) -> Result<(), ProtocolError> {
    let oracle = records.first().is_some_and(|r| r.sample_disagreements.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step", "X", "density", "turn", "flipped", "msgs"];
    if oracle {
        header.extend(["j", "s"]);
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.step.to_string(),
            r.agreement.to_string(),
            format!("{:.6}", r.agreement as f64 / n as f64),
            r.turn.index().to_string(),
            u8::from(r.flipped).to_string(),
            r.messages.to_string(),
        ];
        if oracle {
            let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            row.push(opt(r.sample_disagreements));
            row.push(opt(r.flipped_disagreements));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ProtocolError::Csv(e.to_string()))
}

/// Parses a trace written by [`write_trace_csv`].
pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>, ProtocolError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let base = ["step", "X", "density", "turn", "flipped", "msgs"];
    let oracle = match headers.len() {
        6 => false,
        8 => true,
        _ => return Err(ProtocolError::Csv(format!("unexpected header {headers:?}"))),
    };
    if headers.iter().zip(base.iter().chain(&["j", "s"])).any(|(h, e)| h != *e) {
        return Err(ProtocolError::Csv(format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| -> Result<&str, ProtocolError> {
            rec.get(i)
                .ok_or_else(|| ProtocolError::Csv(format!("missing field {i} in {rec:?}")))
        };
        let parse_u = |i: usize| -> Result<u64, ProtocolError> {
            field(i)?
                .parse::<u64>()
                .map_err(|_| ProtocolError::Csv(format!("bad integer in field {i} of {rec:?}")))
        };
        field(2)?
            .parse::<f64>()
            .map_err(|_| ProtocolError::Csv(format!("bad density in {rec:?}")))?;
        let turn = match parse_u(3)? {
            0 => Role::A,
            1 => Role::B,
            t => return Err(ProtocolError::Csv(format!("bad turn {t}"))),
        };
        let flipped = match parse_u(4)? {
            0 => false,
            1 => true,
            f => return Err(ProtocolError::Csv(format!("bad flipped flag {f}"))),
        };
        let opt = |i: usize| -> Result<Option<usize>, ProtocolError> {
            if !oracle || field(i)?.is_empty() {
                Ok(None)
            } else {
                parse_u(i).map(|v| Some(v as usize))
            }
        };
        out.push(TraceRecord {
            step: parse_u(0)?,
            agreement: parse_u(1)? as usize,
            turn,
            flipped,
            messages: parse_u(5)?,
            sample_disagreements: opt(6)?,
            flipped_disagreements: opt(7)?,
        });
    }
    Ok(out)
}
