//! File-level parser checks: every fixture parses to its hand-counted
//! shape and survives an emit → parse round trip; random bytes never
//! crash the parser.

mod common;

use common::fixtures_dir;
use qrover::{emit_qasm, parse_qasm, SplitMix64};

/// (file, gate count, qubit count, measured qubits) — counted by hand.
const FIXTURES: [(&str, usize, usize, &[usize]); 12] = [
    ("f01_bell.qasm", 2, 2, &[0, 1]),
    ("f02_single_h.qasm", 1, 1, &[]),
    ("f03_all_simple.qasm", 9, 1, &[]),
    ("f04_rotations.qasm", 4, 1, &[]),
    ("f05_ghz3.qasm", 3, 3, &[2]),
    ("f06_comments.qasm", 2, 2, &[]),
    ("f07_whitespace.qasm", 3, 2, &[]),
    ("f08_expressions.qasm", 4, 1, &[]),
    ("f09_barrier.qasm", 2, 2, &[]),
    ("f10_cz_chain.qasm", 7, 4, &[]),
    ("f11_measure_subset.qasm", 2, 3, &[1]),
    ("f12_classifier.qasm", 16, 3, &[2]),
];

#[test]
fn fixtures_parse_to_hand_counted_shapes_and_round_trip() {
    for (name, gates, qubits, measured) in FIXTURES {
        let path = fixtures_dir().join(name);
        let src = std::fs::read_to_string(&path).unwrap();
        let circ = parse_qasm(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(circ.ops.len(), gates, "{name}: gate count");
        assert_eq!(circ.n_qubits, qubits, "{name}: qubit count");
        assert_eq!(circ.measured_qubits, measured, "{name}: measured qubits");

        let emitted = emit_qasm(&circ);
        let reparsed = parse_qasm(&emitted).unwrap_or_else(|e| panic!("{name} re-parse: {e}"));
        assert_eq!(circ, reparsed, "{name}: round trip changed the circuit");
    }
}

#[test]
fn random_bytes_never_crash_the_parser() {
    let mut rng = SplitMix64::new(0xf022_1e57);
    let valid = std::fs::read_to_string(fixtures_dir().join("f12_classifier.qasm")).unwrap();
    let mut parsed = 0u32;
    for i in 0..20_000u32 {
        let s = common::random_source(&mut rng, i, &valid);
        if parse_qasm(&s).is_ok() {
            parsed += 1;
        }
    }
    // Mutated valid programs occasionally stay valid; pure noise never does.
    assert!(parsed < 20_000);
}
