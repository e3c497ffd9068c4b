//! Reference results: the ideal gate algebra of the two-qubit machine and a
//! dense time-ordered propagator for small registers.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{argument, Result, SimError};
use crate::gate::GateMatrix;
use crate::model::{FieldTerm, PulseSequence, SpinModel};
use crate::pulses::{Instruction, Rotation};
use crate::state::{Axis, StateVector};

/// Largest register for embedded single-qubit gates.
pub const MAX_GATE_QUBITS: usize = 10;
/// Largest register for the dense propagator.
pub const MAX_DENSE_QUBITS: usize = 6;
/// Successive refinements must agree to this (max-norm) before a dense
/// propagator is returned.
pub const DENSE_TOL: f64 = 1e-12;
/// Refinement stops with an error beyond this many slices.
pub const MAX_SLICES: usize = 1 << 20;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit gates of the instruction set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdealGate {
    /// `exp(+iπ S^x / 2)`.
    X,
    XBar,
    Y,
    /// `exp(-iπ S^y / 2)`.
    YBar,
    /// Walsh-Hadamard transform `X X Ȳ`.
    W,
}

impl IdealGate {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "X" => IdealGate::X,
            "Xbar" => IdealGate::XBar,
            "Y" => IdealGate::Y,
            "Ybar" => IdealGate::YBar,
            "W" => IdealGate::W,
            _ => return Err(argument(format!("unknown single-qubit gate '{name}'"))),
        })
    }

    pub fn matrix(self) -> GateMatrix {
        let s = FRAC_1_SQRT_2;
        let rows = match self {
            IdealGate::X => [c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)],
            IdealGate::XBar => [c(s, 0.0), c(0.0, -s), c(0.0, -s), c(s, 0.0)],
            IdealGate::Y => [c(s, 0.0), c(s, 0.0), c(-s, 0.0), c(s, 0.0)],
            IdealGate::YBar => [c(s, 0.0), c(-s, 0.0), c(s, 0.0), c(s, 0.0)],
            IdealGate::W => [c(0.0, s), c(0.0, s), c(0.0, s), c(0.0, -s)],
        };
        GateMatrix::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &rows))
    }
}

impl From<Rotation> for IdealGate {
    fn from(r: Rotation) -> Self {
        match r {
            Rotation::X => IdealGate::X,
            Rotation::XBar => IdealGate::XBar,
            Rotation::Y => IdealGate::Y,
            Rotation::YBar => IdealGate::YBar,
        }
    }
}

/// `gate` on qubit `j` (0-based) of an `l`-qubit register.
pub fn ideal_gate(gate: IdealGate, j: usize, l: usize) -> Result<GateMatrix> {
    if l == 0 || l > MAX_GATE_QUBITS {
        return Err(SimError::Capacity {
            requested: l,
            max: MAX_GATE_QUBITS,
        });
    }
    gate.matrix().embed(j, l)
}

/// Two-qubit gates of the search algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TwoQubitGate {
    /// `exp(-iπ S_1^z S_2^z)`.
    ConditionalPhase,
    /// Sign flip of basis state `i`.
    F(usize),
    /// Sign flip of every basis state except `|↑↑⟩`.
    P,
    /// Inversion about the mean.
    D,
}

impl TwoQubitGate {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "Ipi" => TwoQubitGate::ConditionalPhase,
            "P" => TwoQubitGate::P,
            "D" => TwoQubitGate::D,
            "F0" => TwoQubitGate::F(0),
            "F1" => TwoQubitGate::F(1),
            "F2" => TwoQubitGate::F(2),
            "F3" => TwoQubitGate::F(3),
            _ => return Err(argument(format!("unknown two-qubit gate '{name}'"))),
        })
    }
}

pub fn ideal_two_qubit(gate: TwoQubitGate) -> Result<GateMatrix> {
    let diag = |d: [Complex64; 4]| {
        GateMatrix::from_matrix_unchecked(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(&d),
        ))
    };
    let one = c(1.0, 0.0);
    Ok(match gate {
        TwoQubitGate::ConditionalPhase => {
            let m = Complex64::from_polar(1.0, -FRAC_PI_4);
            let p = Complex64::from_polar(1.0, FRAC_PI_4);
            diag([m, p, p, m])
        }
        TwoQubitGate::F(i) => {
            if i > 3 {
                return Err(argument(format!("F_{i} does not exist; items are 0..=3")));
            }
            let mut d = [one; 4];
            d[i] = -one;
            diag(d)
        }
        TwoQubitGate::P => diag([one, -one, -one, -one]),
        TwoQubitGate::D => {
            let mut m = DMatrix::from_element(4, 4, c(0.5, 0.0));
            for k in 0..4 {
                m[(k, k)] = c(-0.5, 0.0);
            }
            GateMatrix::from_matrix_unchecked(m)
        }
    })
}

/// Ideal unitary of a sequence whose operations carry instruction names
/// (`X1`, `Y2bar`, `Ipi`, ...). The first operation acts first.
pub fn matrix_of_sequence(seq: &PulseSequence, num_qubits: usize) -> Result<GateMatrix> {
    let dim = 1usize
        .checked_shl(num_qubits as u32)
        .filter(|_| num_qubits <= MAX_GATE_QUBITS && num_qubits > 0)
        .ok_or(SimError::Capacity {
            requested: num_qubits,
            max: MAX_GATE_QUBITS,
        })?;
    let unknown: Vec<String> = seq
        .ops
        .iter()
        .filter(|op| Instruction::parse(&op.name).is_none())
        .map(|op| op.name.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(SimError::UnknownName {
            kind: "gate",
            names: unknown,
        });
    }
    let mut u = GateMatrix::identity(dim);
    for op in &seq.ops {
        let g = match Instruction::parse(&op.name).expect("checked above") {
            Instruction::Rotate(r, q) => ideal_gate(r.into(), q, num_qubits)?,
            Instruction::ConditionalPhase => {
                if num_qubits != 2 {
                    return Err(argument("Ipi is defined for two qubits only"));
                }
                ideal_two_qubit(TwoQubitGate::ConditionalPhase)?
            }
        };
        u = g.compose(&u)?;
    }
    Ok(u)
}

/// Outcome of iterating inversion-about-the-mean on the encoded state of
/// one item.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateReport {
    pub item: usize,
    /// Iteration counts `k ≤ 10` after which the state is a basis state.
    pub pure_iterations: Vec<usize>,
    /// The basis index found at each entry of `pure_iterations`.
    pub answers: Vec<usize>,
    /// State after `k = 0..=10` iterations; entry 0 is `F_item |U⟩`.
    pub states: Vec<StateVector>,
}

impl IterateReport {
    /// Pure exactly at `1, 4, 7, 10`, and always the right item.
    pub fn matches_period_three(&self) -> bool {
        self.pure_iterations == [1, 4, 7, 10] && self.answers.iter().all(|&a| a == self.item)
    }
}

/// Start from `|Ψ⟩ = F_item |U⟩` and iterate ten times. One iteration is
/// `D` followed by the query `F_item`; the query only changes signs, so the
/// state after `D` is pure exactly when the recorded state is.
pub fn grover_iterate_check(item: usize) -> Result<IterateReport> {
    let f = ideal_two_qubit(TwoQubitGate::F(item))?;
    let d = ideal_two_qubit(TwoQubitGate::D)?;
    let step = f.compose(&d)?;
    let mut psi = f.apply(&StateVector::uniform(2)?)?;
    let mut report = IterateReport {
        item,
        pure_iterations: Vec::new(),
        answers: Vec::new(),
        states: vec![psi.clone()],
    };
    for k in 1..=10 {
        psi = step.apply(&psi)?;
        if let Some(n) = psi.amplitudes().iter().position(|a| a.norm_sqr() > 1.0 - 1e-12) {
            report.pure_iterations.push(k);
            report.answers.push(n);
        }
        report.states.push(psi.clone());
    }
    Ok(report)
}

/// Integration rule inside one slice of the dense propagator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SliceRule {
    /// `exp(-i h H(t_mid))`, second order.
    Midpoint,
    /// Fourth-order commutator-free Magnus rule: two exponentials built
    /// from `H` at the two Gauss-Legendre nodes.
    Magnus4,
    /// Sixth-order Magnus rule from `H` at the three Gauss-Legendre nodes,
    /// one exponential per slice.
    #[default]
    Magnus6,
}

/// `H(t)` split into its constant part and sinusoidal terms.
struct DenseHamiltonian {
    constant: DMatrix<Complex64>,
    rf: Vec<(FieldTerm, DMatrix<Complex64>)>,
}

fn spin_operator(axis: Axis, j: usize, l: usize) -> DMatrix<Complex64> {
    let z = c(0.0, 0.0);
    let h = 0.5;
    let rows = match axis {
        Axis::X => [z, c(h, 0.0), c(h, 0.0), z],
        Axis::Y => [z, c(0.0, -h), c(0.0, h), z],
        Axis::Z => [c(h, 0.0), z, z, c(-h, 0.0)],
    };
    let s = DMatrix::from_row_slice(2, 2, &rows);
    let mut out = DMatrix::identity(1, 1);
    for q in 0..l {
        let factor = if q == j { s.clone() } else { DMatrix::identity(2, 2) };
        out = factor.kronecker(&out);
    }
    out
}

impl DenseHamiltonian {
    fn new(model: &SpinModel) -> Result<Self> {
        let l = model.num_qubits();
        if l == 0 || l > MAX_DENSE_QUBITS {
            return Err(SimError::Capacity {
                requested: l,
                max: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1 << l;
        let ops: Vec<[DMatrix<Complex64>; 3]> = (0..l)
            .map(|j| Axis::ALL.map(|a| spin_operator(a, j, l)))
            .collect();
        let mut constant = DMatrix::zeros(dim, dim);
        let mut rf = Vec::new();
        for axis in Axis::ALL {
            let a = axis.index();
            for (j, k, jv) in model.pairs(axis) {
                constant -= (&ops[j][a] * &ops[k][a]) * c(jv, 0.0);
            }
            for (j, op) in ops.iter().enumerate() {
                let term = *model.field(j, axis);
                if term.h0 != 0.0 {
                    constant -= &op[a] * c(term.h0, 0.0);
                }
                if term.h1 != 0.0 {
                    let rf_only = FieldTerm { h0: 0.0, ..term };
                    rf.push((rf_only, op[a].clone()));
                }
            }
        }
        Ok(Self { constant, rf })
    }

    fn at(&self, t: f64) -> DMatrix<Complex64> {
        let mut h = self.constant.clone();
        for (term, op) in &self.rf {
            h -= op * c(term.at(t), 0.0);
        }
        h
    }
}

/// Full `2^L x 2^L` Hamiltonian of `model` at sinusoid time `t`.
pub fn hamiltonian(model: &SpinModel, t: f64) -> Result<DMatrix<Complex64>> {
    Ok(DenseHamiltonian::new(model)?.at(t))
}

/// `exp(-iθH)` for Hermitian `H` through its spectral decomposition.
pub fn expm_hermitian(h: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig
        .eigenvalues
        .map(|lambda| Complex64::from_polar(1.0, -theta * lambda));
    let mut scaled = v.clone();
    for (col, p) in phases.iter().enumerate() {
        scaled.column_mut(col).iter_mut().for_each(|z| *z *= *p);
    }
    scaled * v.adjoint()
}

/// Product of `n_slices` slice propagators over `[t0, t0 + tau]`.
pub fn dense_propagator_fixed(
    model: &SpinModel,
    t0: f64,
    tau: f64,
    n_slices: usize,
    rule: SliceRule,
) -> Result<GateMatrix> {
    if n_slices == 0 {
        return Err(argument("slice count must be at least 1"));
    }
    let ham = DenseHamiltonian::new(model)?;
    Ok(GateMatrix::from_matrix_unchecked(propagate(
        &ham, t0, tau, n_slices, rule,
    )))
}

fn propagate(
    ham: &DenseHamiltonian,
    t0: f64,
    tau: f64,
    n: usize,
    rule: SliceRule,
) -> DMatrix<Complex64> {
    let dim = ham.constant.nrows();
    if ham.rf.is_empty() {
        return expm_hermitian(&ham.constant, tau);
    }
    let h = tau / n as f64;
    let r3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let (w_hi, w_lo) = (0.25 + r3 / 6.0, 0.25 - r3 / 6.0);
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for s in 0..n {
        let a = t0 + s as f64 * h;
        match rule {
            SliceRule::Midpoint => {
                u = expm_hermitian(&ham.at(a + 0.5 * h), h) * u;
            }
            SliceRule::Magnus4 => {
                let h1 = ham.at(a + c1 * h);
                let h2 = ham.at(a + c2 * h);
                let first = &h1 * c(w_hi, 0.0) + &h2 * c(w_lo, 0.0);
                let second = &h1 * c(w_lo, 0.0) + &h2 * c(w_hi, 0.0);
                u = expm_hermitian(&first, h) * u;
                u = expm_hermitian(&second, h) * u;
            }
            SliceRule::Magnus6 => {
                u = expm_hermitian(&magnus6_generator(ham, a, h), 1.0) * u;
            }
        }
    }
    nearest_unitary(u)
}

/// Unitary factor of the polar decomposition; removes the drift that long
/// products of eigenvector matrices pick up.
fn nearest_unitary(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

fn commutator(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

/// Hermitian `K` with `exp(-iK)` the sixth-order Magnus propagator of the
/// slice `[a, a + h]`.
fn magnus6_generator(ham: &DenseHamiltonian, a: f64, h: f64) -> DMatrix<Complex64> {
    let r = 15f64.sqrt() / 10.0;
    let minus_i = c(0.0, -1.0);
    // A_k = -i H(t_k)
    let a1 = ham.at(a + (0.5 - r) * h) * minus_i;
    let a2 = ham.at(a + 0.5 * h) * minus_i;
    let a3 = ham.at(a + (0.5 + r) * h) * minus_i;
    let b1 = &a2 * c(h, 0.0);
    let b2 = (&a3 - &a1) * c(15f64.sqrt() * h / 3.0, 0.0);
    let b3 = (&a3 - &a2 * c(2.0, 0.0) + &a1) * c(10.0 * h / 3.0, 0.0);
    let c1 = commutator(&b1, &b2);
    let c2 = commutator(&b1, &(&b3 * c(2.0, 0.0) + &c1)) * c(-1.0 / 60.0, 0.0);
    let left = &b1 * c(-20.0, 0.0) - &b3 + &c1;
    let omega = &b1 + &b3 * c(1.0 / 12.0, 0.0) + commutator(&left, &(&b2 + &c2)) * c(1.0 / 240.0, 0.0);
    // Ω is anti-Hermitian; K = iΩ, symmetrized against roundoff
    let k = omega * c(0.0, 1.0);
    (&k + k.adjoint()) * c(0.5, 0.0)
}

/// A converged dense propagator.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    pub unitary: GateMatrix,
    /// Slice count of the returned unitary.
    pub slices: usize,
    /// Max-norm difference to the previous refinement (0 when the
    /// Hamiltonian is constant and a single exponential is exact).
    pub residual: f64,
}

/// Time-ordered exponential of `model` over `[t0, t0 + tau]` (sinusoid time)
/// with the default [`SliceRule`], doubling the slice count from `n_slices`
/// until two refinements agree within [`DENSE_TOL`].
pub fn dense_propagator(
    model: &SpinModel,
    t0: f64,
    tau: f64,
    n_slices: usize,
) -> Result<DensePropagator> {
    dense_propagator_with(model, t0, tau, n_slices, SliceRule::default(), DENSE_TOL)
}

pub fn dense_propagator_with(
    model: &SpinModel,
    t0: f64,
    tau: f64,
    n_slices: usize,
    rule: SliceRule,
    tol: f64,
) -> Result<DensePropagator> {
    if n_slices == 0 {
        return Err(argument("slice count must be at least 1"));
    }
    let ham = DenseHamiltonian::new(model)?;
    if ham.rf.is_empty() {
        return Ok(DensePropagator {
            unitary: GateMatrix::from_matrix_unchecked(expm_hermitian(&ham.constant, tau)),
            slices: 1,
            residual: 0.0,
        });
    }
    let mut n = n_slices;
    let mut prev = propagate(&ham, t0, tau, n, rule);
    let mut residual = f64::INFINITY;
    loop {
        if n * 2 > MAX_SLICES {
            return Err(SimError::NoConvergence {
                slices: n,
                residual,
            });
        }
        n *= 2;
        let next = propagate(&ham, t0, tau, n, rule);
        residual = max_abs_diff(&prev, &next);
        if residual < tol {
            return Ok(DensePropagator {
                unitary: GateMatrix::from_matrix_unchecked(next),
                slices: n,
                residual,
            });
        }
        prev = next;
    }
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
