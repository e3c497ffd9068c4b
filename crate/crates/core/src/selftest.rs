//! Cross-checks of the integrator and the instruction tables against the
//! oracle. Each check is usable on its own; [`run_selftest`] runs them all.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gate::GateMatrix;
use crate::model::{ElementaryOperation, PulseSequence, RfClock, SpinModel, StepPlan};
use crate::oracle::{
    dense_propagator, expm_hermitian, grover_iterate_check, hamiltonian, matrix_of_sequence,
};
use crate::propagator::Integrator;
use crate::pulses::{full_search_seq, make_profile, shortened_search_seq, HardwareKind};
use crate::state::{Axis, StateVector};

/// Tolerance of the conjugation, shortening and exactness checks.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Accepted band for the error ratio per halving of δ.
pub const SECOND_ORDER_BAND: (f64, f64) = (3.3, 4.7);
/// Substep counts for the convergence-ratio check on the NMR X1 pulse.
pub const RATIO_SUBSTEPS: [usize; 4] = [160, 320, 640, 1280];
/// Random models tried by the conjugation check.
pub const CONJUGATION_MODELS: usize = 100;
pub const DEFAULT_SEED: u64 = 0x5eed_2003;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Matrix of `evolve_eo` built column by column from basis states.
pub fn simulated_unitary(
    template: &Integrator,
    eo: &ElementaryOperation,
    t0: f64,
    plan: StepPlan,
    clock: RfClock,
) -> Result<GateMatrix> {
    let l = eo.model.num_qubits();
    let dim = 1usize << l;
    let mut cols = Vec::with_capacity(dim * dim);
    for c in 0..dim {
        let mut s = StateVector::basis_index(l, c)?;
        template.clone().evolve_eo(&mut s, eo, t0, plan, clock);
        cols.extend_from_slice(s.amplitudes());
    }
    let m = nalgebra::DMatrix::from_column_slice(dim, dim, &cols);
    GateMatrix::with_tolerance(m, 1e-9)
}

/// Worst column distance `max_c ‖(A - B) e_c‖₂`.
pub fn column_error(a: &GateMatrix, b: &GateMatrix) -> f64 {
    let (ma, mb) = (a.matrix(), b.matrix());
    (0..a.dim())
        .map(|c| {
            (ma.column(c) - mb.column(c))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn random_model(rng: &mut ChaCha8Rng) -> SpinModel {
    let mut m = SpinModel::new(2);
    for axis in Axis::ALL {
        m.set_coupling(0, 1, axis, rng.gen_range(-2.0..2.0)).expect("two spins");
        for j in 0..2 {
            m.set_static_field(j, axis, rng.gen_range(-2.0..2.0)).expect("two spins");
            m.set_rf_field(
                j,
                axis,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..TAU),
            )
            .expect("two spins");
        }
    }
    m
}

/// The part of `model` read by the `axis` factor.
fn axis_part(model: &SpinModel, axis: Axis) -> SpinModel {
    let l = model.num_qubits();
    let mut out = SpinModel::new(l);
    for (j, k, v) in model.pairs(axis) {
        out.set_coupling(j, k, axis, v).expect("same size");
    }
    for j in 0..l {
        let f = model.field(j, axis);
        out.set_static_field(j, axis, f.h0).expect("same size");
        out.set_rf_field(j, axis, f.h1, f.freq, f.phase).expect("same size");
    }
    out
}

/// Largest entry difference between the integrator's per-axis factor
/// `exp(-iδH_axis(t))` and the dense exponential, over `n_models` random
/// two-spin models and all three axes.
pub fn conjugation_error(template: &Integrator, n_models: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_models {
        let model = random_model(&mut rng);
        let t = rng.gen_range(0.0..10.0);
        let delta = rng.gen_range(0.01..2.0);
        for axis in Axis::ALL {
            let h = hamiltonian(&axis_part(&model, axis), t)?;
            let exact = expm_hermitian(&h, delta);
            for c in 0..4 {
                let mut s = StateVector::basis_index(2, c)?;
                template
                    .clone()
                    .apply_axis_exponential(&mut s, &model, axis, delta, t, false);
                for (r, a) in s.amplitudes().iter().enumerate() {
                    worst = worst.max((a - exact[(r, c)]).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Global errors of the NMR X1 pulse against the dense oracle at each
/// substep count in `substeps`.
pub fn nmr_x1_errors(template: &Integrator, substeps: &[usize]) -> Result<Vec<f64>> {
    let profile = make_profile(HardwareKind::Nmr);
    let eo = profile.op_by_name("X1")?;
    let exact = dense_propagator(&eo.model, 0.0, eo.tau, 64)?.unitary;
    substeps
        .iter()
        .map(|&m| {
            let u = simulated_unitary(template, eo, 0.0, StepPlan::new(eo.tau, m)?, RfClock::PerOperation)?;
            Ok(column_error(&u, &exact))
        })
        .collect()
}

/// Ratios of successive entries.
pub fn halving_ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Worst `1 - |tr(A†B)|/4` between shortened and unshortened programs, and
/// whether the relative phase is `-1` exactly for items 1 and 2.
pub fn shortening_defect() -> Result<(f64, bool)> {
    let profile = make_profile(HardwareKind::Ideal);
    let mut worst = 0.0f64;
    let mut phases_ok = true;
    for item in 0..4 {
        let short = matrix_of_sequence(&shortened_search_seq(item, &profile)?, 2)?;
        let full = matrix_of_sequence(&full_search_seq(item, &profile)?, 2)?;
        let ov = full.overlap(&short);
        worst = worst.max(1.0 - ov.norm());
        let sign = if item == 1 || item == 2 { -1.0 } else { 1.0 };
        phases_ok &= (ov - Complex64::new(sign, 0.0)).norm() < IDENTITY_TOL;
    }
    Ok((worst, phases_ok))
}

/// For every ideal instruction: the largest entry difference to the dense
/// propagator, and the smallest basis-state fidelity against the ideal gate.
pub fn ideal_table_defects(template: &Integrator) -> Result<(f64, f64)> {
    let profile = make_profile(HardwareKind::Ideal);
    let mut worst_dense = 0.0f64;
    let mut worst_fid = 1.0f64;
    for (_, eo) in profile.operations() {
        let plan = template.auto_substeps(eo);
        let sim = simulated_unitary(template, eo, 0.0, plan, RfClock::Global)?;
        let dense = dense_propagator(&eo.model, 0.0, eo.tau, 1)?.unitary;
        worst_dense = worst_dense.max(sim.max_abs_diff(&dense));
        let ideal = matrix_of_sequence(&PulseSequence::new(vec![eo.clone()]), 2)?;
        worst_fid = worst_fid.min(sim.min_column_fidelity(&ideal));
    }
    Ok((worst_dense, worst_fid))
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// All oracle cross-checks, run with copies of `template`.
pub fn run_selftest(template: &Integrator) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check(
        "conjugation identity",
        conjugation_error(template, CONJUGATION_MODELS, DEFAULT_SEED).map(|e| {
            (
                e <= IDENTITY_TOL,
                format!("{CONJUGATION_MODELS} random models, max deviation {e:.3e}"),
            )
        }),
    ));
    out.push(check(
        "second-order convergence",
        nmr_x1_errors(template, &RATIO_SUBSTEPS).map(|errs| {
            let ratios = halving_ratios(&errs);
            let (lo, hi) = SECOND_ORDER_BAND;
            let ok = ratios.iter().all(|r| (lo..=hi).contains(r));
            let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
            (ok, format!("NMR X1 error ratios per halving: {}", shown.join(", ")))
        }),
    ));
    out.push(check(
        "shortening identities",
        shortening_defect().map(|(d, phases)| {
            (
                d <= IDENTITY_TOL && phases,
                format!("max 1 - |overlap| = {d:.3e}, phase -1 for items 1 and 2: {phases}"),
            )
        }),
    ));
    out.push(check(
        "grover iterate",
        (0..4)
            .map(grover_iterate_check)
            .collect::<Result<Vec<_>>>()
            .map(|reps| {
                let ok = reps.iter().all(|r| r.matches_period_three());
                let shown: Vec<String> = reps
                    .iter()
                    .map(|r| format!("item {}: {:?}", r.item, r.pure_iterations))
                    .collect();
                (ok, shown.join("; "))
            }),
    ));
    out.push(check(
        "ideal table exactness",
        ideal_table_defects(template).map(|(dense, fid)| {
            (
                dense <= IDENTITY_TOL && fid >= 1.0 - IDENTITY_TOL,
                format!("max deviation from dense {dense:.3e}, min fidelity to ideal 1 - {:.3e}", 1.0 - fid),
            )
        }),
    ));
    out
}
