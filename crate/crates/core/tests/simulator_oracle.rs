//! Statevector gates checked against explicit Kronecker-product matrices.

use num_complex::Complex64;
use proptest::prelude::*;
use qcse_core::qsim::{prob_one_from_z, prob_zero_from_z, GateOp, StateVector};

mod common;

use common::dense_oracle::{dense, matvec};

fn gate_strategy(m: usize) -> impl Strategy<Value = GateOp> {
    let angle = -10.0f64..10.0;
    let pair = (0..m, 1..m).prop_map(move |(a, d)| (a, (a + d) % m));
    prop_oneof![
        (0..m).prop_map(GateOp::H),
        (0..m).prop_map(GateOp::X),
        (0..m).prop_map(GateOp::Y),
        (0..m).prop_map(GateOp::Z),
        (0..m, angle.clone()).prop_map(|(q, t)| GateOp::RX(q, t)),
        (0..m, angle.clone()).prop_map(|(q, t)| GateOp::RZ(q, t)),
        pair.clone().prop_map(|(control, target)| GateOp::CNOT { control, target }),
        pair.clone().prop_map(|(control, target)| GateOp::CZ { control, target }),
        (pair, angle).prop_map(|((control, target), angle)| GateOp::CRZ {
            control,
            target,
            angle
        }),
    ]
}

fn circuit_strategy() -> impl Strategy<Value = (usize, Vec<GateOp>)> {
    (2usize..=4).prop_flat_map(|m| (Just(m), prop::collection::vec(gate_strategy(m), 1..40)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn circuits_match_dense_oracle((m, ops) in circuit_strategy()) {
        let mut state = StateVector::new_zero(m).unwrap();
        let mut reference = state.amplitudes().to_vec();
        for op in &ops {
            state.apply(op).unwrap();
            reference = matvec(&dense(m, op), &reference);
        }
        for (a, b) in state.amplitudes().iter().zip(&reference) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gates_are_unitary(op in gate_strategy(4)) {
        let m = 4;
        // columns of the simulated operator, one basis state at a time
        let dim = 1 << m;
        let cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|k| {
                let mut s = StateVector::basis(m, k).unwrap();
                s.apply(&op).unwrap();
                s.amplitudes().to_vec()
            })
            .collect();
        for i in 0..dim {
            for j in 0..dim {
                let dot: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_is_preserved(ops in prop::collection::vec(gate_strategy(5), 50)) {
        let mut s = StateVector::new_zero(5).unwrap();
        s.apply_all(&ops).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_brute_force((m, ops) in circuit_strategy()) {
        let mut s = StateVector::new_zero(m).unwrap();
        s.apply_all(&ops).unwrap();
        let z = s.expectations_z();
        let p = s.qubit_probabilities();
        for q in 0..m {
            let brute: f64 = s
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(k, a)| if (k >> q) & 1 == 1 { -a.norm_sqr() } else { a.norm_sqr() })
                .sum();
            prop_assert!((z[q] - brute).abs() < 1e-12);
            prop_assert!((s.expectation_z(q).unwrap() - brute).abs() < 1e-12);
            prop_assert!((p[q] - prob_one_from_z(brute)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p[q]));
            prop_assert_eq!(prob_zero_from_z(z[q]) + prob_one_from_z(z[q]), 1.0);
        }
    }
}
