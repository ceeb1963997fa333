//! Boolean circuits over {XOR, AND, NOT, CONST0, CONST1} and the
//! comparison circuits used by the agreement protocol.
//!
//! Wires `0..k_a` carry party A's inputs, the next `k_b` wires carry party
//! B's inputs, and gate `g` drives wire `k_a + k_b + g`.
//!
//! The constructors only emit XOR, AND and CONST1 (NOT is `x ^ 1`), so
//! every gate but AND is free under XOR sharing. Popcount is a column
//! compressor: for each weight, least significant first, full adders
//! consume three bits at a time and a half adder consumes a final pair,
//! carries moving to the next column. A full adder costs 5 gates (1 AND),
//! a half adder 2 gates (1 AND). The `>= r` comparator walks the count
//! from its least significant bit with constant folding, at most 3 gates
//! (1 AND) per bit. Every constructor stays under [`GATES_PER_INPUT_BIT`]
//! gates per input bit.

use std::fmt;

use thiserror::Error;

/// Upper bound on gates per compared position for the constructors here.
pub const GATES_PER_INPUT_BIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("party {party} supplied {got} input bits, circuit expects {expected}")]
    InputLength { party: char, got: usize, expected: usize },
    #[error("threshold {r} outside [0, {k}]")]
    ThresholdOutOfRange { r: usize, k: usize },
    #[error("circuits need at least one input bit per party")]
    NoInputs,
    #[error("gate {gate} reads wire {wire} which is not yet defined")]
    ForwardReference { gate: usize, wire: usize },
    #[error("output wire {0} does not exist")]
    BadOutput(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Xor(usize, usize),
    And(usize, usize),
    Not(usize),
    Const0,
    Const1,
}

impl Gate {
    fn inputs(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            Gate::Xor(a, b) | Gate::And(a, b) => (Some(a), Some(b)),
            Gate::Not(a) => (Some(a), None),
            Gate::Const0 | Gate::Const1 => (None, None),
        };
        a.into_iter().chain(b)
    }

    pub fn is_and(&self) -> bool {
        matches!(self, Gate::And(..))
    }
}

/// A topologically ordered gate list with two input partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    inputs_a: usize,
    inputs_b: usize,
    gates: Vec<Gate>,
    outputs: Vec<usize>,
}

impl Circuit {
    /// Validates and assembles a circuit.
    pub fn new(
        inputs_a: usize,
        inputs_b: usize,
        gates: Vec<Gate>,
        outputs: Vec<usize>,
    ) -> Result<Self, CircuitError> {
        let base = inputs_a + inputs_b;
        for (g, gate) in gates.iter().enumerate() {
            if let Some(wire) = gate.inputs().find(|&w| w >= base + g) {
                return Err(CircuitError::ForwardReference { gate: g, wire });
            }
        }
        if let Some(&bad) = outputs.iter().find(|&&w| w >= base + gates.len()) {
            return Err(CircuitError::BadOutput(bad));
        }
        Ok(Self {
            inputs_a,
            inputs_b,
            gates,
            outputs,
        })
    }

    pub fn inputs_a(&self) -> std::ops::Range<usize> {
        0..self.inputs_a
    }

    pub fn inputs_b(&self) -> std::ops::Range<usize> {
        self.inputs_a..self.inputs_a + self.inputs_b
    }

    pub fn input_count(&self) -> usize {
        self.inputs_a + self.inputs_b
    }

    pub fn wire_count(&self) -> usize {
        self.input_count() + self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn and_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_and()).count()
    }

    /// Output wire of gate `g`.
    pub fn gate_wire(&self, g: usize) -> usize {
        self.input_count() + g
    }

    /// Multiplicative depth of every wire (inputs and free gates inherit
    /// the max of their inputs; AND adds one).
    pub fn and_depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.wire_count()];
        for (g, gate) in self.gates.iter().enumerate() {
            let d = gate.inputs().map(|w| depth[w]).max().unwrap_or(0);
            depth[self.gate_wire(g)] = if gate.is_and() { d + 1 } else { d };
        }
        depth
    }

    /// AND gates grouped by multiplicative depth; group `i` only depends on
    /// groups before it.
    pub fn and_layers(&self) -> Vec<Vec<usize>> {
        let depth = self.and_depths();
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (g, gate) in self.gates.iter().enumerate() {
            if gate.is_and() {
                let d = depth[self.gate_wire(g)];
                if layers.len() < d {
                    layers.resize_with(d, Vec::new);
                }
                layers[d - 1].push(g);
            }
        }
        layers
    }

    pub fn and_depth(&self) -> usize {
        self.and_layers().len()
    }

    fn check_inputs(&self, a: &[bool], b: &[bool]) -> Result<(), CircuitError> {
        if a.len() != self.inputs_a {
            return Err(CircuitError::InputLength {
                party: 'A',
                got: a.len(),
                expected: self.inputs_a,
            });
        }
        if b.len() != self.inputs_b {
            return Err(CircuitError::InputLength {
                party: 'B',
                got: b.len(),
                expected: self.inputs_b,
            });
        }
        Ok(())
    }

    /// Evaluates every wire in the clear.
    pub fn evaluate_wires(&self, a: &[bool], b: &[bool]) -> Result<Vec<bool>, CircuitError> {
        self.check_inputs(a, b)?;
        let mut w = Vec::with_capacity(self.wire_count());
        w.extend_from_slice(a);
        w.extend_from_slice(b);
        for gate in &self.gates {
            let v = match *gate {
                Gate::Xor(x, y) => w[x] ^ w[y],
                Gate::And(x, y) => w[x] & w[y],
                Gate::Not(x) => !w[x],
                Gate::Const0 => false,
                Gate::Const1 => true,
            };
            w.push(v);
        }
        Ok(w)
    }
}

/// Plaintext reference evaluation.
pub fn evaluate_plain(c: &Circuit, a_bits: &[bool], b_bits: &[bool]) -> Result<Vec<bool>, CircuitError> {
    let w = c.evaluate_wires(a_bits, b_bits)?;
    Ok(c.outputs.iter().map(|&o| w[o]).collect())
}

/// `<wire> <KIND> <in1> [<in2>]` per gate after `INPUTS_A`, `INPUTS_B`
/// and `OUTPUTS` header lines.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |r: &mut dyn Iterator<Item = usize>| {
            r.map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
        };
        writeln!(f, "INPUTS_A {}", list(&mut self.inputs_a()))?;
        writeln!(f, "INPUTS_B {}", list(&mut self.inputs_b()))?;
        writeln!(f, "OUTPUTS {}", list(&mut self.outputs.iter().copied()))?;
        for (g, gate) in self.gates.iter().enumerate() {
            let w = self.gate_wire(g);
            match *gate {
                Gate::Xor(x, y) => writeln!(f, "{w} XOR {x} {y}")?,
                Gate::And(x, y) => writeln!(f, "{w} AND {x} {y}")?,
                Gate::Not(x) => writeln!(f, "{w} NOT {x}")?,
                Gate::Const0 => writeln!(f, "{w} CONST0")?,
                Gate::Const1 => writeln!(f, "{w} CONST1")?,
            }
        }
        Ok(())
    }
}

/// Which per-position relation the popcount runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Positions where the two inputs hold the same bit.
    Agreement,
    /// Positions where they differ.
    Disagreement,
}

#[derive(Clone, Copy)]
enum Sig {
    Const(bool),
    Wire(usize),
}

struct Builder {
    base: usize,
    gates: Vec<Gate>,
    one: Option<usize>,
}

impl Builder {
    fn new(k: usize) -> Self {
        Self {
            base: 2 * k,
            gates: Vec::new(),
            one: None,
        }
    }

    fn push(&mut self, g: Gate) -> usize {
        self.gates.push(g);
        self.base + self.gates.len() - 1
    }

    fn one(&mut self) -> usize {
        match self.one {
            Some(w) => w,
            None => {
                let w = self.push(Gate::Const1);
                self.one = Some(w);
                w
            }
        }
    }

    fn xor(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Xor(a, b))
    }

    fn and(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::And(a, b))
    }

    fn not(&mut self, a: usize) -> usize {
        let one = self.one();
        self.xor(a, one)
    }

    fn materialize(&mut self, s: Sig) -> usize {
        match s {
            Sig::Wire(w) => w,
            Sig::Const(true) => self.one(),
            Sig::Const(false) => self.push(Gate::Const0),
        }
    }

    /// (sum, carry)
    fn full_add(&mut self, a: usize, b: usize, c: usize) -> (usize, usize) {
        let ac = self.xor(a, c);
        let bc = self.xor(b, c);
        let t = self.and(ac, bc);
        let carry = self.xor(t, c);
        let sum = self.xor(ac, b);
        (sum, carry)
    }

    fn half_add(&mut self, a: usize, b: usize) -> (usize, usize) {
        (self.xor(a, b), self.and(a, b))
    }

    /// Binary count of the given bits, least significant first.
    fn popcount(&mut self, bits: Vec<usize>) -> Vec<usize> {
        let mut columns: Vec<Vec<usize>> = vec![bits];
        let mut out = Vec::new();
        let mut w = 0;
        while w < columns.len() {
            let mut col = std::mem::take(&mut columns[w]);
            let mut carries = Vec::new();
            while col.len() >= 3 {
                let c = col.pop().unwrap();
                let b = col.pop().unwrap();
                let a = col.pop().unwrap();
                let (s, cy) = self.full_add(a, b, c);
                col.insert(0, s);
                carries.push(cy);
            }
            if col.len() == 2 {
                let (s, cy) = self.half_add(col[0], col[1]);
                col = vec![s];
                carries.push(cy);
            }
            out.push(col.first().copied());
            if !carries.is_empty() {
                if columns.len() == w + 1 {
                    columns.push(Vec::new());
                }
                columns[w + 1].extend(carries);
            }
            w += 1;
        }
        out.into_iter()
            .map(|b| b.expect("every compressed column keeps one bit"))
            .collect()
    }

    /// `value >= r` for an LSB-first binary value.
    fn geq_const(&mut self, value_lsb: &[usize], r: usize) -> Sig {
        if value_lsb.len() < usize::BITS as usize && r >> value_lsb.len() != 0 {
            return Sig::Const(false);
        }
        let mut ge = Sig::Const(true);
        for (i, &x) in value_lsb.iter().enumerate() {
            let r_bit = (r >> i) & 1 == 1;
            ge = match (r_bit, ge) {
                (true, Sig::Const(true)) => Sig::Wire(x),
                (true, Sig::Const(false)) => Sig::Const(false),
                (true, Sig::Wire(g)) => Sig::Wire(self.and(x, g)),
                (false, Sig::Const(true)) => Sig::Const(true),
                (false, Sig::Const(false)) => Sig::Wire(x),
                (false, Sig::Wire(g)) => {
                    // x OR g
                    let t = self.and(x, g);
                    let u = self.xor(x, g);
                    Sig::Wire(self.xor(u, t))
                }
            };
        }
        ge
    }

    fn position_bits(&mut self, k: usize, basis: Basis) -> Vec<usize> {
        (0..k)
            .map(|i| {
                let d = self.xor(i, k + i);
                match basis {
                    Basis::Disagreement => d,
                    Basis::Agreement => self.not(d),
                }
            })
            .collect()
    }

    fn finish(self, k: usize, outputs: Vec<usize>) -> Circuit {
        Circuit::new(k, k, self.gates, outputs).expect("constructor emits a valid circuit")
    }
}

/// Bits needed to write any count in `0..=k`.
pub fn count_width(k: usize) -> usize {
    (usize::BITS - k.leading_zeros()).max(1) as usize
}

/// Popcount of the per-position relation, written MSB first on
/// [`count_width`]`(k)` output wires.
pub fn build_count_circuit_with(k: usize, basis: Basis) -> Result<Circuit, CircuitError> {
    if k == 0 {
        return Err(CircuitError::NoInputs);
    }
    let mut b = Builder::new(k);
    let bits = b.position_bits(k, basis);
    let mut lsb = b.popcount(bits);
    lsb.reverse();
    debug_assert_eq!(lsb.len(), count_width(k));
    Ok(b.finish(k, lsb))
}

/// Number of positions where the two `k`-bit inputs agree, MSB first.
pub fn build_count_circuit(k: usize) -> Result<Circuit, CircuitError> {
    build_count_circuit_with(k, Basis::Agreement)
}

/// Single output: 1 iff the relation count is at least `r`.
pub fn build_threshold_circuit_with(k: usize, r: usize, basis: Basis) -> Result<Circuit, CircuitError> {
    if k == 0 {
        return Err(CircuitError::NoInputs);
    }
    if r > k {
        return Err(CircuitError::ThresholdOutOfRange { r, k });
    }
    let mut b = Builder::new(k);
    let bits = b.position_bits(k, basis);
    let count = b.popcount(bits);
    let ge = b.geq_const(&count, r);
    let out = b.materialize(ge);
    Ok(b.finish(k, vec![out]))
}

/// 1 iff the inputs agree on at least `r` of `k` positions.
pub fn build_threshold_circuit(k: usize, r: usize) -> Result<Circuit, CircuitError> {
    build_threshold_circuit_with(k, r, Basis::Agreement)
}

/// Reads an MSB-first bit vector as an integer.
pub fn bits_to_usize(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}
