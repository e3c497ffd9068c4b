//! Second-order symmetrized product-formula integrator.
//!
//! One step of length δ starting at `t` applies
//!
//! ```text
//! e^{-iδH_z/2} e^{-iδH_y/2} e^{-iδH_x} e^{-iδH_y/2} e^{-iδH_z/2}
//! ```
//!
//! with every Hamiltonian evaluated at `t + δ/2`. The z factor is diagonal
//! in the spin basis and is applied as a single phase sweep. The y and x
//! factors are reduced to the same sweep by conjugating with global π/2
//! rotations, `e^{-iθH_y} = R_x e^{-iθH'_z} R_x†` and
//! `e^{-iθH_x} = R_y e^{-iθH''_z} R_y†`, where the primes denote the z-form
//! Hamiltonian built from the y (x) parameter family.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use crate::error::{argument, Result};
use crate::model::{ElementaryOperation, PulseSequence, RfClock, SpinModel, StepPlan};
use crate::state::{apply_2x2, apply_phases, spin_z, Axis, Observables, StateVector};

/// Instrumentation for the kernel-count properties of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelCounters {
    pub steps: u64,
    pub diagonal_sweeps: u64,
    /// Pair couplings visited across all diagonal sweeps.
    pub pair_terms: u64,
    pub global_rotations: u64,
    pub single_qubit_kernels: u64,
}

/// Time at which the Hamiltonian is sampled inside a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplePoint {
    #[default]
    Midpoint,
    /// First-order variant, kept for convergence diagnostics.
    LeftEndpoint,
}

/// Constants behind [`Integrator::auto_substeps`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    /// Substeps per period of the fastest RF component.
    pub samples_per_rf_period: f64,
    /// Largest phase `δ · h_scale` accumulated per substep.
    pub max_phase_per_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            samples_per_rf_period: 64.0,
            max_phase_per_step: 0.1,
        }
    }
}

/// How many substeps each operation of a sequence receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOverride {
    Auto,
    /// The automatic plan with every `m` multiplied by this factor.
    AutoTimes(usize),
    Fixed(usize),
}

/// When [`Integrator::run_sequence`] records observables. The initial
/// state, every operation boundary and the final state are always sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Every k-th substep.
    EverySubsteps(usize),
    /// Roughly this many samples per operation.
    PerOperation(usize),
    BoundariesOnly,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::PerOperation(200)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Substeps executed so far across the whole sequence.
    pub step: u64,
    /// 1-based index of the operation in progress; 0 for the initial sample.
    pub eo_index: usize,
    pub obs: Observables,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_time: f64,
    pub total_substeps: u64,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

const SQ: f64 = FRAC_1_SQRT_2;

/// `R_x = exp(+i(π/2)S^x)`, row-major.
const R_X: [Complex64; 4] = [
    Complex64::new(SQ, 0.0),
    Complex64::new(0.0, SQ),
    Complex64::new(0.0, SQ),
    Complex64::new(SQ, 0.0),
];

/// `R_y = exp(-i(π/2)S^y)`, row-major.
const R_Y: [Complex64; 4] = [
    Complex64::new(SQ, 0.0),
    Complex64::new(-SQ, 0.0),
    Complex64::new(SQ, 0.0),
    Complex64::new(SQ, 0.0),
];

fn adjoint_2x2(g: &[Complex64; 4]) -> [Complex64; 4] {
    [g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()]
}

/// Row-major matrix of the global π/2 rotation about `axis` (x or y).
pub fn half_pi_rotation(axis: Axis, inverse: bool) -> Result<[Complex64; 4]> {
    let g = match axis {
        Axis::X => R_X,
        Axis::Y => R_Y,
        Axis::Z => return Err(argument("global rotations are defined about x and y only")),
    };
    Ok(if inverse { adjoint_2x2(&g) } else { g })
}

/// Product-formula integrator with kernel instrumentation.
#[derive(Clone, Debug, Default)]
pub struct Integrator {
    pub counters: KernelCounters,
    pub sample_point: SamplePoint,
    pub control: StepControl,
    /// Replaces `R_y` by `R_y†`; only for checking that the self-test
    /// notices a broken conjugation.
    #[doc(hidden)]
    pub flip_ry_sign: bool,
}

impl Integrator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset_counters(&mut self) {
        self.counters = KernelCounters::default();
    }

    /// Diagonal factor `exp(-iθ H_axis)` written in z-form, with `θ = δ/2`
    /// if `half`, else `δ`. The amplitude at index `n` picks up
    /// `exp(+iθ (Σ_{j<k} J_jk s_j s_k + Σ_j h_j(t) s_j))`, with `s_j = ±1/2`
    /// the z-eigenvalue of spin `j` and fields from the `axis` family
    /// evaluated at sinusoid time `t_rf`.
    pub fn apply_axis_factor(
        &mut self,
        state: &mut StateVector,
        model: &SpinModel,
        axis: Axis,
        delta: f64,
        t_rf: f64,
        half: bool,
    ) {
        let theta = if half { 0.5 * delta } else { delta };
        let pairs = model.pairs(axis);
        let fields: Vec<(usize, f64)> = (0..model.num_qubits())
            .map(|j| (j, model.field(j, axis).at(t_rf)))
            .filter(|&(_, h)| h != 0.0)
            .collect();
        self.counters.diagonal_sweeps += 1;
        self.counters.pair_terms += pairs.len() as u64;
        if pairs.is_empty() && fields.is_empty() {
            return;
        }
        apply_phases(state.amplitudes_mut(), &|n| {
            let mut e = 0.0;
            for &(j, k, jv) in &pairs {
                let aligned = ((n >> j) ^ (n >> k)) & 1 == 0;
                e += if aligned { 0.25 * jv } else { -0.25 * jv };
            }
            for &(j, h) in &fields {
                e += h * spin_z(n, j);
            }
            theta * e
        });
    }

    /// Apply `R_axis` (or its adjoint) to every qubit.
    pub fn global_half_pi_rotation(
        &mut self,
        state: &mut StateVector,
        axis: Axis,
        inverse: bool,
    ) -> Result<()> {
        let inverse = if axis == Axis::Y && self.flip_ry_sign {
            !inverse
        } else {
            inverse
        };
        let g = half_pi_rotation(axis, inverse)?;
        let l = state.num_qubits();
        for j in 0..l {
            apply_2x2(state.amplitudes_mut(), j, &g);
        }
        self.counters.global_rotations += 1;
        self.counters.single_qubit_kernels += l as u64;
        Ok(())
    }

    /// `exp(-iθ H_axis)` for any axis: z directly, y and x by conjugation.
    pub fn apply_axis_exponential(
        &mut self,
        state: &mut StateVector,
        model: &SpinModel,
        axis: Axis,
        delta: f64,
        t_rf: f64,
        half: bool,
    ) {
        let rotation = match axis {
            Axis::Z => {
                self.apply_axis_factor(state, model, Axis::Z, delta, t_rf, half);
                return;
            }
            Axis::Y => Axis::X,
            Axis::X => Axis::Y,
        };
        // rotation is x or y, so these cannot fail
        self.global_half_pi_rotation(state, rotation, true)
            .expect("valid rotation axis");
        self.apply_axis_factor(state, model, axis, delta, t_rf, half);
        self.global_half_pi_rotation(state, rotation, false)
            .expect("valid rotation axis");
    }

    /// One symmetrized step of length `delta` beginning at sinusoid time
    /// `t_rf`.
    pub fn symmetrized_step(
        &mut self,
        state: &mut StateVector,
        model: &SpinModel,
        delta: f64,
        t_rf: f64,
    ) {
        let t = match self.sample_point {
            SamplePoint::Midpoint => t_rf + 0.5 * delta,
            SamplePoint::LeftEndpoint => t_rf,
        };
        self.apply_axis_exponential(state, model, Axis::Z, delta, t, true);
        self.apply_axis_exponential(state, model, Axis::Y, delta, t, true);
        self.apply_axis_exponential(state, model, Axis::X, delta, t, false);
        self.apply_axis_exponential(state, model, Axis::Y, delta, t, true);
        self.apply_axis_exponential(state, model, Axis::Z, delta, t, true);
        self.counters.steps += 1;
    }

    /// Run one operation starting at absolute time `t0`; returns `t0 + τ`.
    pub fn evolve_eo(
        &mut self,
        state: &mut StateVector,
        eo: &ElementaryOperation,
        t0: f64,
        plan: StepPlan,
        clock: RfClock,
    ) -> f64 {
        self.evolve_eo_with(state, eo, t0, plan, clock, |_, _, _| {})
    }

    /// [`evolve_eo`](Self::evolve_eo) calling `after_step(state, substep,
    /// time)` after every substep (`substep` is 1-based).
    pub fn evolve_eo_with<F>(
        &mut self,
        state: &mut StateVector,
        eo: &ElementaryOperation,
        t0: f64,
        plan: StepPlan,
        clock: RfClock,
        mut after_step: F,
    ) -> f64
    where
        F: FnMut(&StateVector, usize, f64),
    {
        if eo.tau == 0.0 {
            return t0;
        }
        let m = plan.substeps();
        let delta = eo.tau / m as f64;
        let rf_origin = match clock {
            RfClock::Global => t0,
            RfClock::PerOperation => 0.0,
        };
        for n in 0..m {
            let offset = n as f64 * delta;
            self.symmetrized_step(state, &eo.model, delta, rf_origin + offset);
            let now = if n + 1 == m {
                t0 + eo.tau
            } else {
                t0 + offset + delta
            };
            after_step(state, n + 1, now);
        }
        t0 + eo.tau
    }

    /// Substep plan from the operation's time scales. A constant
    /// Hamiltonian confined to one axis family is integrated exactly in one
    /// step; otherwise `δ ≤ min(T_rf / samples_per_rf_period,
    /// max_phase_per_step / h_scale)`.
    pub fn auto_substeps(&self, eo: &ElementaryOperation) -> StepPlan {
        auto_substeps_with(eo, &self.control)
    }

    /// Execute `seq` on `state`, recording observables.
    pub fn run_sequence(
        &mut self,
        state: &mut StateVector,
        seq: &PulseSequence,
        steps: StepOverride,
        sampling: Sampling,
    ) -> Result<Trajectory> {
        for op in &seq.ops {
            if op.model.num_qubits() != state.num_qubits() {
                return Err(argument(format!(
                    "operation '{}' is defined for L={} but the state has L={}",
                    op.name,
                    op.model.num_qubits(),
                    state.num_qubits()
                )));
            }
        }
        let mut traj = Trajectory::default();
        let mut t = seq.start_time;
        let mut step_count = 0u64;
        traj.samples.push(Sample {
            step: 0,
            eo_index: 0,
            obs: state.observables(t),
        });
        for (i, op) in seq.ops.iter().enumerate() {
            let plan = self.plan_for(op, steps)?;
            let m = plan.substeps();
            let every = match sampling {
                Sampling::EverySubsteps(k) => Some(k.max(1)),
                Sampling::PerOperation(n) => Some((m / n.max(1)).max(1)),
                Sampling::BoundariesOnly => None,
            };
            let base = step_count;
            let samples = &mut traj.samples;
            t = self.evolve_eo_with(state, op, t, plan, seq.rf_clock, |s, sub, now| {
                if let Some(k) = every {
                    if sub % k == 0 && sub != m {
                        samples.push(Sample {
                            step: base + sub as u64,
                            eo_index: i + 1,
                            obs: s.observables(now),
                        });
                    }
                }
            });
            if op.tau > 0.0 {
                step_count += m as u64;
            }
            traj.samples.push(Sample {
                step: step_count,
                eo_index: i + 1,
                obs: state.observables(t),
            });
        }
        traj.final_time = t;
        traj.total_substeps = step_count;
        Ok(traj)
    }

    fn plan_for(&self, op: &ElementaryOperation, steps: StepOverride) -> Result<StepPlan> {
        match steps {
            StepOverride::Auto => Ok(self.auto_substeps(op)),
            StepOverride::AutoTimes(k) => {
                if k == 0 {
                    return Err(argument("step multiplier must be at least 1"));
                }
                Ok(self.auto_substeps(op).scaled(k))
            }
            StepOverride::Fixed(m) => StepPlan::new(op.tau, m),
        }
    }
}

/// Free-function form of [`Integrator::auto_substeps`].
pub fn auto_substeps_with(eo: &ElementaryOperation, control: &StepControl) -> StepPlan {
    let one = StepPlan::new(eo.tau, 1).expect("m = 1 is valid");
    if eo.tau == 0.0 {
        return one;
    }
    let model = &eo.model;
    let active_axes = Axis::ALL.iter().filter(|&&a| model.axis_active(a)).count();
    if active_axes <= 1 && !model.has_rf() {
        return one;
    }
    let mut delta_target = f64::INFINITY;
    let mut max_freq = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..model.num_qubits() {
        for axis in Axis::ALL {
            let f = model.field(j, axis);
            if f.h1 != 0.0 && f.freq != 0.0 {
                max_freq = max_freq.max(f.freq.abs());
            }
            scale = scale.max(f.h0.abs() + f.h1.abs());
        }
    }
    for axis in Axis::ALL {
        for (_, _, jv) in model.pairs(axis) {
            scale = scale.max(jv.abs());
        }
    }
    if max_freq > 0.0 {
        delta_target = delta_target.min(TAU / max_freq / control.samples_per_rf_period);
    }
    if scale > 0.0 {
        delta_target = delta_target.min(control.max_phase_per_step / scale);
    }
    if !delta_target.is_finite() {
        return one;
    }
    let ratio = eo.tau / delta_target;
    // absorb roundoff so that an exact multiple does not gain a step
    let m = (ratio * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    StepPlan::new(eo.tau, m).expect("m >= 1")
}
