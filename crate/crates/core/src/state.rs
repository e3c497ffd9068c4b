//! State-vector storage, elementary manipulations and observables.
//!
//! Basis index `n` encodes a spin configuration with qubit 0 as the least
//! significant bit: bit `j` of `n` is 0 when spin `j` is up and 1 when it is
//! down. For two qubits the order is |↑↑⟩, |↓↑⟩, |↑↓⟩, |↓↓⟩, so the rounded
//! qubit values read directly as the binary index of the basis state.
//!
//! Kernels split the amplitude array into disjoint index ranges and may
//! process them in parallel. Gate application has no cross-range
//! reduction, and every reduction goes through [`pairwise_sum`] whose tree
//! shape depends only on the array length, so results are identical for
//! any worker count.

use std::ops::{Add, Range};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{argument, Result, SimError};
use crate::gate::{GateMatrix, UNITARITY_TOL};

/// Largest supported register (2^26 amplitudes, about 1 GiB).
pub const MAX_QUBITS: usize = 26;

/// Arrays shorter than this are processed on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 14;

const LEAF: usize = 256;
const CHUNK: usize = 1 << 12;

/// Spin component selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Eigenvalue of `S^z` on qubit `j` in basis state `n`.
#[inline]
pub(crate) fn spin_z(n: usize, j: usize) -> f64 {
    if (n >> j) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Normalized amplitudes over the 2^L spin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Basis state with `bits[j]` giving the configuration of qubit `j`
    /// (0 = up, 1 = down).
    pub fn basis(num_qubits: usize, bits: &[u8]) -> Result<Self> {
        check_capacity(num_qubits)?;
        if bits.len() != num_qubits {
            return Err(argument(format!(
                "expected {num_qubits} bits, got {}",
                bits.len()
            )));
        }
        let mut index = 0usize;
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => index |= 1 << j,
                other => return Err(argument(format!("bit {j} is {other}, expected 0 or 1"))),
            }
        }
        Self::basis_index(num_qubits, index)
    }

    pub fn basis_index(num_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(argument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Equal-weight superposition of all basis states with real positive
    /// amplitudes.
    pub fn uniform(num_qubits: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let dim = 1usize << num_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            num_qubits,
            amps: vec![a; dim],
        })
    }

    /// Wrap a caller-supplied amplitude array. The length must be a power
    /// of two and the norm must be 1 within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(argument(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        check_capacity(num_qubits)?;
        let s = Self { num_qubits, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(argument(format!("state is not normalized (norm^2 = {norm})")));
        }
        Ok(s)
    }

    pub(crate) fn from_amplitudes_unchecked(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// `Σ |a_n|^2`, summed in a fixed pairwise order.
    pub fn norm_sqr(&self) -> f64 {
        let amps = &self.amps;
        pairwise_sum(0..amps.len(), &|r: Range<usize>| {
            amps[r].iter().map(|a| a.norm_sqr()).sum::<f64>()
        })
    }

    /// Apply a 2x2 unitary to qubit `j`. For every index pair (n0, n1)
    /// differing only in bit `j`, `(a_n0, a_n1) <- g (a_n0, a_n1)`.
    pub fn apply_single_qubit_gate(&mut self, j: usize, g: &GateMatrix) -> Result<()> {
        self.check_qubit(j)?;
        if g.dim() != 2 {
            return Err(argument(format!("expected a 2x2 gate, got {}x{}", g.dim(), g.dim())));
        }
        let max_deviation = g.unitarity_deviation();
        if max_deviation > UNITARITY_TOL {
            return Err(SimError::NotUnitary { max_deviation });
        }
        apply_2x2(&mut self.amps, j, &g.as_2x2());
        Ok(())
    }

    /// `⟨ψ| S_j^axis |ψ⟩` with `S = σ/2`.
    pub fn expectation_spin(&self, j: usize, axis: Axis) -> Result<f64> {
        self.check_qubit(j)?;
        Ok(expectation(&self.amps, j, axis))
    }

    /// Per-qubit spin expectations and qubit values `Q_j = 1/2 - ⟨S_j^z⟩`.
    pub fn qubit_values(&self) -> Observables {
        self.observables(0.0)
    }

    /// Same as [`qubit_values`](Self::qubit_values) stamped with time `t`.
    pub fn observables(&self, t: f64) -> Observables {
        let l = self.num_qubits;
        let mut sx = Vec::with_capacity(l);
        let mut sy = Vec::with_capacity(l);
        let mut sz = Vec::with_capacity(l);
        for j in 0..l {
            sx.push(expectation(&self.amps, j, Axis::X));
            sy.push(expectation(&self.amps, j, Axis::Y));
            sz.push(expectation(&self.amps, j, Axis::Z));
        }
        let q = sz.iter().map(|z| 0.5 - z).collect();
        Observables {
            t,
            norm: self.norm_sqr().sqrt(),
            sx,
            sy,
            sz,
            q,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(argument(format!(
                "inner product of states with dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let (a, b) = (&self.amps, &other.amps);
        Ok(pairwise_sum(0..a.len(), &|r: Range<usize>| {
            a[r.clone()]
                .iter()
                .zip(&b[r])
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
        }))
    }

    /// `|⟨self|other⟩|`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm())
    }

    /// Transform to a frame rotating about z: the amplitude at index `n` is
    /// multiplied by `exp(+i t Σ_j omega[j] s_j(n))`.
    pub fn apply_frame_rotation(&mut self, t: f64, omega: &[f64]) -> Result<()> {
        if omega.len() != self.num_qubits {
            return Err(argument(format!(
                "expected {} frame frequencies, got {}",
                self.num_qubits,
                omega.len()
            )));
        }
        let omega = omega.to_vec();
        apply_phases(&mut self.amps, &|n| {
            t * omega
                .iter()
                .enumerate()
                .map(|(j, w)| w * spin_z(n, j))
                .sum::<f64>()
        });
        Ok(())
    }

    fn check_qubit(&self, j: usize) -> Result<()> {
        if j >= self.num_qubits {
            return Err(argument(format!(
                "qubit index {j} out of range for L={}",
                self.num_qubits
            )));
        }
        Ok(())
    }
}

fn check_capacity(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(SimError::Capacity {
            requested: num_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Expectation values of one sample in time.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub norm: f64,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    /// Qubit values `1/2 - ⟨S^z⟩`: 0 for spin up, 1 for spin down.
    pub q: Vec<f64>,
}

/// Sum `leaf(range)` over `range` split into a balanced binary tree whose
/// shape depends only on the range length.
pub(crate) fn pairwise_sum<T, F>(range: Range<usize>, leaf: &F) -> T
where
    T: Add<Output = T> + Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let len = range.end - range.start;
    if len <= LEAF {
        return leaf(range);
    }
    let mid = range.start + len / 2;
    let (lo, hi) = if len >= PAR_THRESHOLD {
        rayon::join(
            || pairwise_sum(range.start..mid, leaf),
            || pairwise_sum(mid..range.end, leaf),
        )
    } else {
        (
            pairwise_sum(range.start..mid, leaf),
            pairwise_sum(mid..range.end, leaf),
        )
    };
    lo + hi
}

/// Index of the `m`-th basis state whose bit `j` is zero.
#[inline]
fn insert_zero_bit(m: usize, j: usize) -> usize {
    let low = m & ((1 << j) - 1);
    ((m >> j) << (j + 1)) | low
}

fn expectation(amps: &[Complex64], j: usize, axis: Axis) -> f64 {
    let half_dim = amps.len() / 2;
    let bit = 1usize << j;
    let value: Complex64 = match axis {
        Axis::Z => pairwise_sum(0..amps.len(), &|r: Range<usize>| {
            r.map(|n| Complex64::new(spin_z(n, j) * amps[n].norm_sqr(), 0.0))
                .sum::<Complex64>()
        }),
        Axis::X => pairwise_sum(0..half_dim, &|r: Range<usize>| {
            r.map(|m| {
                let n0 = insert_zero_bit(m, j);
                let (a0, a1) = (amps[n0], amps[n0 | bit]);
                (a0.conj() * a1 + a1.conj() * a0) * 0.5
            })
            .sum::<Complex64>()
        }),
        Axis::Y => pairwise_sum(0..half_dim, &|r: Range<usize>| {
            let i_half = Complex64::new(0.0, 0.5);
            r.map(|m| {
                let n0 = insert_zero_bit(m, j);
                let (a0, a1) = (amps[n0], amps[n0 | bit]);
                -(a0.conj() * i_half * a1) + a1.conj() * i_half * a0
            })
            .sum::<Complex64>()
        }),
    };
    assert!(
        value.im.abs() < 1e-10,
        "spin expectation has imaginary part {:e}",
        value.im
    );
    value.re
}

/// `(a_n0, a_n1) <- g (a_n0, a_n1)` for all pairs split by bit `target`;
/// `g` is row-major.
pub(crate) fn apply_2x2(amps: &mut [Complex64], target: usize, g: &[Complex64; 4]) {
    let half = 1usize << target;
    let block = half << 1;
    let pair = |a0: &mut Complex64, a1: &mut Complex64| {
        let (x, y) = (*a0, *a1);
        *a0 = g[0] * x + g[1] * y;
        *a1 = g[2] * x + g[3] * y;
    };
    let sweep_block = |blk: &mut [Complex64]| {
        let (lo, hi) = blk.split_at_mut(half);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            pair(a0, a1);
        }
    };
    if amps.len() < PAR_THRESHOLD {
        amps.chunks_exact_mut(block).for_each(sweep_block);
    } else if block <= CHUNK {
        amps.par_chunks_mut(CHUNK)
            .for_each(|c| c.chunks_exact_mut(block).for_each(sweep_block));
    } else {
        amps.chunks_exact_mut(block).for_each(|blk| {
            let (lo, hi) = blk.split_at_mut(half);
            lo.par_iter_mut()
                .zip(hi.par_iter_mut())
                .with_min_len(CHUNK)
                .for_each(|(a0, a1)| pair(a0, a1));
        });
    }
}

/// Multiply the amplitude at index `n` by `exp(i * angle(n))`.
pub(crate) fn apply_phases<F>(amps: &mut [Complex64], angle: &F)
where
    F: Fn(usize) -> f64 + Sync,
{
    let sweep = |base: usize, c: &mut [Complex64]| {
        for (k, a) in c.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, angle(base + k));
        }
    };
    if amps.len() < PAR_THRESHOLD {
        sweep(0, amps);
    } else {
        amps.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(i, c)| sweep(i * CHUNK, c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn displayed_x() -> GateMatrix {
        let s = FRAC_1_SQRT_2;
        GateMatrix::from_rows(2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]).unwrap()
    }

    fn displayed_ybar() -> GateMatrix {
        let s = FRAC_1_SQRT_2;
        GateMatrix::from_rows(2, &[c(s, 0.0), c(-s, 0.0), c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn basis_encoding_puts_qubit_zero_in_lsb() {
        let s = StateVector::basis(2, &[0, 0]).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        let s = StateVector::basis(2, &[1, 0]).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0, 0.0));
        let s = StateVector::basis(3, &[0, 1, 1]).unwrap();
        assert_eq!(s.amplitudes()[6], c(1.0, 0.0));
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn basis_rejects_bad_input() {
        assert!(matches!(
            StateVector::basis(0, &[]),
            Err(SimError::Capacity { .. })
        ));
        assert!(matches!(
            StateVector::basis(27, &[0; 27]),
            Err(SimError::Capacity { .. })
        ));
        assert!(matches!(
            StateVector::basis(2, &[0]),
            Err(SimError::Argument(_))
        ));
        assert!(StateVector::basis(2, &[0, 2]).is_err());
    }

    #[test]
    fn identity_gate_leaves_state() {
        let mut s = StateVector::uniform(3).unwrap();
        let before = s.clone();
        s.apply_single_qubit_gate(1, &GateMatrix::identity(2)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn x_rotation_on_up() {
        let mut s = StateVector::basis(1, &[0]).unwrap();
        s.apply_single_qubit_gate(0, &displayed_x()).unwrap();
        let a = s.amplitudes();
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn ybar_rotation_on_up() {
        let mut s = StateVector::basis(1, &[0]).unwrap();
        s.apply_single_qubit_gate(0, &displayed_ybar()).unwrap();
        let a = s.amplitudes();
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn non_unitary_gate_is_rejected() {
        let mut s = StateVector::basis(1, &[0]).unwrap();
        let g = GateMatrix::from_matrix_unchecked(nalgebra::DMatrix::from_element(
            2,
            2,
            c(1.0, 0.0),
        ));
        assert!(matches!(
            s.apply_single_qubit_gate(0, &g),
            Err(SimError::NotUnitary { .. })
        ));
    }

    #[test]
    fn spin_expectations() {
        let up = StateVector::basis(2, &[0, 0]).unwrap();
        assert_eq!(up.expectation_spin(0, Axis::Z).unwrap(), 0.5);

        let mut plus = StateVector::basis(2, &[0, 0]).unwrap();
        plus.apply_single_qubit_gate(0, &displayed_ybar()).unwrap();
        assert!((plus.expectation_spin(0, Axis::X).unwrap() - 0.5).abs() < 1e-15);

        let mut eq = StateVector::basis(1, &[0]).unwrap();
        eq.apply_single_qubit_gate(0, &displayed_x()).unwrap();
        assert!(eq.expectation_spin(0, Axis::Z).unwrap().abs() < 1e-15);
        // (|↑⟩ + i|↓⟩)/√2 points along +y
        assert!((eq.expectation_spin(0, Axis::Y).unwrap() - 0.5).abs() < 1e-15);

        assert!(up.expectation_spin(2, Axis::Z).is_err());
    }

    #[test]
    fn qubit_values_examples() {
        let q = StateVector::basis(2, &[0, 0]).unwrap().qubit_values().q;
        assert_eq!(q, vec![0.0, 0.0]);
        let q = StateVector::basis(2, &[0, 1]).unwrap().qubit_values().q;
        assert_eq!(q, vec![0.0, 1.0]);
        let obs = StateVector::uniform(2).unwrap().qubit_values();
        for q in obs.q {
            assert!((q - 0.5).abs() < 1e-15);
        }
        assert!((obs.norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let a = StateVector::basis(2, &[0, 0]).unwrap();
        let b = StateVector::basis(2, &[1, 1]).unwrap();
        assert_eq!(a.fidelity(&a).unwrap(), 1.0);
        assert_eq!(a.fidelity(&b).unwrap(), 0.0);
        let c3 = StateVector::basis(3, &[0, 0, 0]).unwrap();
        assert!(matches!(a.fidelity(&c3), Err(SimError::Argument(_))));
    }

    #[test]
    fn frame_rotation_examples() {
        let mut s = StateVector::uniform(2).unwrap();
        let before = s.clone();
        s.apply_frame_rotation(0.0, &[1.0, 0.25]).unwrap();
        assert_eq!(s, before);

        let mut one = StateVector::uniform(1).unwrap();
        let orig = one.clone();
        one.apply_frame_rotation(2.0 * std::f64::consts::PI, &[1.0]).unwrap();
        assert!((one.fidelity(&orig).unwrap() - 1.0).abs() < 1e-12);

        assert!(s.apply_frame_rotation(1.0, &[1.0]).is_err());
    }

    #[test]
    fn large_register_kernels_match_small_path() {
        // 2^15 amplitudes exercises the parallel branches.
        let l = 15;
        let mut big = StateVector::uniform(l).unwrap();
        for j in [0, 7, 14] {
            big.apply_single_qubit_gate(j, &displayed_x()).unwrap();
        }
        let mut reference = vec![c(1.0 / (1 << l) as f64, 0.0).sqrt(); 1 << l];
        for j in [0usize, 7, 14] {
            let g = displayed_x().as_2x2();
            for n in 0..(1 << l) {
                if n & (1 << j) == 0 {
                    let (x, y) = (reference[n], reference[n | 1 << j]);
                    reference[n] = g[0] * x + g[1] * y;
                    reference[n | 1 << j] = g[2] * x + g[3] * y;
                }
            }
        }
        assert_eq!(big.amplitudes(), &reference[..]);
        assert!((big.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
