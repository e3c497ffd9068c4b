use std::f64::consts::TAU;

use proptest::prelude::*;
use spinsim::oracle::{ideal_gate, IdealGate};
use spinsim::propagator::StepControl;
use spinsim::{
    Axis, ElementaryOperation, Integrator, PulseSequence, RfClock, Sampling,
    SpinModel, StateVector, StepOverride, StepPlan,
};

fn model_strategy(l: usize) -> impl Strategy<Value = SpinModel> {
    let pairs = l * (l - 1) / 2;
    (
        prop::collection::vec(-2.0..2.0f64, pairs * 3),
        prop::collection::vec(-2.0..2.0f64, l * 3),
        prop::collection::vec((-1.0..1.0f64, 0.0..3.0f64, 0.0..TAU), l * 3),
    )
        .prop_map(move |(js, h0s, rfs)| {
            let mut m = SpinModel::new(l);
            let mut it = js.into_iter();
            for j in 0..l {
                for k in (j + 1)..l {
                    for axis in Axis::ALL {
                        m.set_coupling(j, k, axis, it.next().unwrap()).unwrap();
                    }
                }
            }
            for j in 0..l {
                for axis in Axis::ALL {
                    let i = 3 * j + axis.index();
                    m.set_static_field(j, axis, h0s[i]).unwrap();
                    let (h1, f, phi) = rfs[i];
                    m.set_rf_field(j, axis, h1, f, phi).unwrap();
                }
            }
            m
        })
}

fn random_state(l: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << l).prop_filter_map(
        "nonzero",
        move |v| {
            let norm: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            let amps = v
                .into_iter()
                .map(|(a, b)| num_complex::Complex64::new(a / norm, b / norm))
                .collect();
            StateVector::from_amplitudes(amps).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steps_preserve_norm(
        model in model_strategy(3),
        state in random_state(3),
        delta in 0.01..1.0f64,
        t in 0.0..20.0f64,
    ) {
        let mut s = state;
        let mut it = Integrator::new();
        for n in 0..20 {
            it.symmetrized_step(&mut s, &model, delta, t + n as f64 * delta);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gates_on_distinct_qubits_commute(
        state in random_state(3),
        a in 0usize..5,
        b in 0usize..5,
        j in 0usize..3,
        dk in 1usize..3,
    ) {
        let gates = [IdealGate::X, IdealGate::XBar, IdealGate::Y, IdealGate::YBar, IdealGate::W];
        let k = (j + dk) % 3;
        let (ga, gb) = (gates[a].matrix(), gates[b].matrix());
        let mut s1 = state.clone();
        s1.apply_single_qubit_gate(j, &ga).unwrap();
        s1.apply_single_qubit_gate(k, &gb).unwrap();
        let mut s2 = state;
        s2.apply_single_qubit_gate(k, &gb).unwrap();
        s2.apply_single_qubit_gate(j, &ga).unwrap();
        for (x, y) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn frame_rotation_leaves_q_unchanged(
        state in random_state(2),
        t in 0.0..100.0f64,
        w1 in -2.0..2.0f64,
        w2 in -2.0..2.0f64,
    ) {
        let before = state.qubit_values();
        let mut s = state;
        s.apply_frame_rotation(t, &[w1, w2]).unwrap();
        let after = s.qubit_values();
        for j in 0..2 {
            prop_assert!((before.q[j] - after.q[j]).abs() < 1e-14);
            prop_assert!((before.q[j] - (0.5 - before.sz[j])).abs() < 1e-15);
            for v in [after.sx[j], after.sy[j], after.sz[j]] {
                prop_assert!(v.abs() <= 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn splitting_an_operation_keeps_the_clock(
        model in model_strategy(2),
        state in random_state(2),
        tau_a in 0.2..3.0f64,
        tau_b in 0.2..3.0f64,
        t0 in 0.0..5.0f64,
    ) {
        // Same substep length in both runs, so the samples coincide.
        let delta = 0.01;
        let na = (tau_a / delta).round().max(1.0) as usize;
        let nb = (tau_b / delta).round().max(1.0) as usize;
        let (tau_a, tau_b) = (na as f64 * delta, nb as f64 * delta);
        let whole = ElementaryOperation::new("w", model.clone(), tau_a + tau_b).unwrap();
        let a = ElementaryOperation::new("a", model.clone(), tau_a).unwrap();
        let b = ElementaryOperation::new("b", model, tau_b).unwrap();

        let mut s1 = state.clone();
        let mut seq1 = PulseSequence::new(vec![whole]);
        seq1.start_time = t0;
        Integrator::new()
            .run_sequence(&mut s1, &seq1, StepOverride::Fixed(na + nb), Sampling::BoundariesOnly)
            .unwrap();

        let mut s2 = state;
        let mut it = Integrator::new();
        let t = it.evolve_eo(&mut s2, &a, t0, StepPlan::new(tau_a, na).unwrap(), RfClock::Global);
        it.evolve_eo(&mut s2, &b, t, StepPlan::new(tau_b, nb).unwrap(), RfClock::Global);
        for (x, y) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn z_only_models_are_exact_in_one_step(
        fields in prop::collection::vec(-3.0..3.0f64, 3),
        jz in prop::collection::vec(-3.0..3.0f64, 3),
        delta in 0.1..10.0f64,
        state in random_state(3),
    ) {
        let mut m = SpinModel::new(3);
        for (j, &h) in fields.iter().enumerate() {
            m.set_static_field(j, Axis::Z, h).unwrap();
        }
        m.set_coupling(0, 1, Axis::Z, jz[0]).unwrap();
        m.set_coupling(0, 2, Axis::Z, jz[1]).unwrap();
        m.set_coupling(1, 2, Axis::Z, jz[2]).unwrap();
        let exact = spinsim::oracle::dense_propagator(&m, 0.0, delta, 1).unwrap().unitary;
        let mut s = state.clone();
        Integrator::new().symmetrized_step(&mut s, &m, delta, 0.0);
        let expect = exact.apply(&state).unwrap();
        for (x, y) in s.amplitudes().iter().zip(expect.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn one_step_kernel_counts() {
    let l = 4;
    let mut m = SpinModel::new(l);
    for j in 0..l {
        for k in (j + 1)..l {
            m.set_coupling(j, k, Axis::X, 0.1).unwrap();
            m.set_coupling(j, k, Axis::Z, 0.2).unwrap();
        }
        m.set_static_field(j, Axis::Y, 0.3).unwrap();
    }
    let mut s = StateVector::basis_index(l, 3).unwrap();
    let mut it = Integrator::new();
    it.symmetrized_step(&mut s, &m, 0.1, 0.0);
    let c = it.counters;
    assert_eq!(c.steps, 1);
    assert_eq!(c.diagonal_sweeps, 5);
    // z pairs in two half sweeps, x pairs in one full sweep
    assert_eq!(c.pair_terms, (2 * 6 + 6) as u64);
    assert_eq!(c.global_rotations, 6);
    assert_eq!(c.single_qubit_kernels, 6 * l as u64);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    // Large enough to take the parallel branches.
    let l = 16;
    let mut m = SpinModel::new(l);
    for j in 0..l {
        m.set_coupling(j, (j + 1) % l, Axis::Z, 0.3 + 0.01 * j as f64).unwrap();
        m.set_static_field(j, Axis::X, 0.2).unwrap();
        m.set_rf_field(j, Axis::Y, 0.1, 1.0, 0.1 * j as f64).unwrap();
    }
    let eo = ElementaryOperation::new("e", m, 0.3).unwrap();
    let seq = PulseSequence::new(vec![eo]);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut s = StateVector::uniform(l).unwrap();
            let traj = Integrator::new()
                .run_sequence(&mut s, &seq, StepOverride::Fixed(3), Sampling::EverySubsteps(1))
                .unwrap();
            (s, traj)
        })
    };
    let (s1, t1) = run(1);
    let (s4, t4) = run(4);
    assert_eq!(s1, s4);
    assert_eq!(t1, t4);
}

#[test]
fn ideal_profile_steps_match_gates() {
    let x = ideal_gate(IdealGate::X, 1, 3).unwrap();
    let model = SpinModel::new(3).with_static_field(1, Axis::X, 1.0).unwrap();
    let eo = ElementaryOperation::with_period_fraction("X2", model, 0.25).unwrap();
    let plan = spinsim::propagator::auto_substeps_with(&eo, &StepControl::default());
    assert_eq!(plan.substeps(), 1);
    for c in 0..8 {
        let mut s = StateVector::basis_index(3, c).unwrap();
        Integrator::new().evolve_eo(&mut s, &eo, 0.0, plan, RfClock::Global);
        let expect = x.column_state(c);
        assert!((s.fidelity(&expect).unwrap() - 1.0).abs() < 1e-12);
    }
}
