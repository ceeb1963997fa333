//! Random circuits against a bitsliced truth-table interpreter, and the
//! comparison circuits against direct popcounts.

use bitpact::circuit::{
    bits_to_usize, build_count_circuit_with, build_threshold_circuit_with, count_width, evaluate_plain, Basis, Gate,
    GATES_PER_INPUT_BIT,
};
use bitpact::Circuit;
use proptest::prelude::*;

/// Truth table over all `2^(2k)` assignments, one bit per assignment.
/// Assignment `m` sets input wire `w` to bit `w` of `m`.
type Table = Vec<u64>;

fn input_table(wire: usize, assignments: usize) -> Table {
    let words = assignments.div_ceil(64);
    (0..words)
        .map(|w| {
            (0..64)
                .filter(|b| {
                    let m = w * 64 + b;
                    m < assignments && (m >> wire) & 1 == 1
                })
                .fold(0u64, |acc, b| acc | (1 << b))
        })
        .collect()
}

fn tables(c: &Circuit) -> Vec<Table> {
    let inputs = c.input_count();
    let assignments = 1usize << inputs;
    let words = assignments.div_ceil(64);
    let mut t: Vec<Table> = (0..inputs).map(|w| input_table(w, assignments)).collect();
    let ones = vec![u64::MAX; words];
    for gate in c.gates() {
        let row: Table = match *gate {
            Gate::Xor(a, b) => t[a].iter().zip(&t[b]).map(|(x, y)| x ^ y).collect(),
            Gate::And(a, b) => t[a].iter().zip(&t[b]).map(|(x, y)| x & y).collect(),
            Gate::Not(a) => t[a].iter().map(|x| !x).collect(),
            Gate::Const0 => vec![0; words],
            Gate::Const1 => ones.clone(),
        };
        t.push(row);
    }
    t
}

fn table_bit(t: &Table, m: usize) -> bool {
    (t[m / 64] >> (m % 64)) & 1 == 1
}

fn split_assignment(m: usize, k: usize) -> (Vec<bool>, Vec<bool>) {
    let a = (0..k).map(|i| (m >> i) & 1 == 1).collect();
    let b = (0..k).map(|i| (m >> (k + i)) & 1 == 1).collect();
    (a, b)
}

fn arb_circuit() -> impl Strategy<Value = Circuit> {
    (1usize..=4, prop::collection::vec((0u8..5, any::<usize>(), any::<usize>()), 0..=50), prop::collection::vec(any::<usize>(), 1..=4))
        .prop_map(|(k, raw, outs)| {
            let base = 2 * k;
            let gates: Vec<Gate> = raw
                .into_iter()
                .enumerate()
                .map(|(g, (kind, a, b))| {
                    let (a, b) = (a % (base + g), b % (base + g));
                    match kind {
                        0 => Gate::Xor(a, b),
                        1 => Gate::And(a, b),
                        2 => Gate::Not(a),
                        3 => Gate::Const0,
                        _ => Gate::Const1,
                    }
                })
                .collect();
            let wires = base + gates.len();
            let outputs = outs.into_iter().map(|o| o % wires).collect();
            Circuit::new(k, k, gates, outputs).expect("indices reduced into range")
        })
}

proptest! {
    #[test]
    fn plain_evaluation_matches_truth_tables(c in arb_circuit()) {
        let k = c.inputs_a().len();
        let t = tables(&c);
        for m in 0..1usize << (2 * k) {
            let (a, b) = split_assignment(m, k);
            let got = evaluate_plain(&c, &a, &b).unwrap();
            let want: Vec<bool> = c.outputs().iter().map(|&w| table_bit(&t[w], m)).collect();
            prop_assert_eq!(got, want, "assignment {}", m);
        }
    }

    #[test]
    fn and_layers_partition_the_and_gates(c in arb_circuit()) {
        let layers = c.and_layers();
        let mut seen: Vec<usize> = layers.iter().flatten().copied().collect();
        seen.sort_unstable();
        let ands: Vec<usize> = (0..c.gate_count()).filter(|&g| c.gates()[g].is_and()).collect();
        prop_assert_eq!(seen, ands);
        prop_assert_eq!(layers.len(), c.and_depth());
    }
}

fn relation_count(a: &[bool], b: &[bool], basis: Basis) -> usize {
    a.iter()
        .zip(b)
        .filter(|(x, y)| match basis {
            Basis::Agreement => x == y,
            Basis::Disagreement => x != y,
        })
        .count()
}

#[test]
fn comparison_circuits_match_truth_tables() {
    for k in 1..=5 {
        for basis in [Basis::Agreement, Basis::Disagreement] {
            let count = build_count_circuit_with(k, basis).unwrap();
            assert_eq!(count.outputs().len(), count_width(k));
            let count_t = tables(&count);
            let thresholds: Vec<(usize, Circuit)> =
                (0..=k).map(|r| (r, build_threshold_circuit_with(k, r, basis).unwrap())).collect();
            let threshold_t: Vec<Vec<Table>> = thresholds.iter().map(|(_, c)| tables(c)).collect();
            for m in 0..1usize << (2 * k) {
                let (a, b) = split_assignment(m, k);
                let x = relation_count(&a, &b, basis);
                let bits: Vec<bool> = count.outputs().iter().map(|&w| table_bit(&count_t[w], m)).collect();
                assert_eq!(bits_to_usize(&bits), x);
                for ((r, c), t) in thresholds.iter().zip(&threshold_t) {
                    assert_eq!(table_bit(&t[c.outputs()[0]], m), x >= *r, "k={k} r={r} m={m}");
                }
            }
        }
    }
}

#[test]
fn comparison_circuits_use_only_the_mpc_basis() {
    for k in [1, 2, 7, 16, 33, 64] {
        for c in [
            build_count_circuit_with(k, Basis::Agreement).unwrap(),
            build_threshold_circuit_with(k, k / 3, Basis::Disagreement).unwrap(),
        ] {
            assert!(c.gates().iter().all(|g| matches!(g, Gate::Xor(..) | Gate::And(..) | Gate::Const1)));
            assert!(c.gate_count() <= GATES_PER_INPUT_BIT * k);
        }
    }
}
