//! Structural properties of instances over heights and seeds.

use proptest::prelude::*;
use weldedtrees::graph::{OracleAnswer, WeldedTreesInstance, build_instance, column_size};

#[test]
fn invariants_hold_across_heights_and_seeds() {
    for n in 1..=12u32 {
        for seed in 0..10u64 {
            build_instance(n, seed)
                .unwrap()
                .validate()
                .unwrap_or_else(|e| panic!("n={n} seed={seed}: {e}"));
        }
    }
}

#[test]
fn column_histogram_closed_form() {
    for n in 1..=8u32 {
        let inst = build_instance(n, n as u64).unwrap();
        for k in 0..=2 * n + 1 {
            assert_eq!(
                inst.column_members(k).len() as u64,
                column_size(n, k),
                "n={n} k={k}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn serialization_round_trips(n in 1u32..=4, seed in any::<u64>()) {
        let inst = build_instance(n, seed).unwrap();
        let text = inst.serialize();
        let back = WeldedTreesInstance::deserialize(&text).unwrap();
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn oracle_is_symmetric(n in 1u32..=3, seed in any::<u64>()) {
        let inst = build_instance(n, seed).unwrap();
        for v in 0..inst.num_vertices() as u32 {
            let id = inst.id_of(v);
            for port in 1u8..=3 {
                match inst.oracle_query(id, port).unwrap() {
                    OracleAnswer::Link { id: other, port: back } => {
                        prop_assert_eq!(
                            inst.oracle_query(other, back).unwrap(),
                            OracleAnswer::Link { id, port }
                        );
                    }
                    OracleAnswer::Bottom => {
                        prop_assert!(v == inst.source() || v == inst.target());
                        prop_assert_eq!(port, 3);
                    }
                }
            }
        }
    }
}
