//! Hamiltonian parameters and instruction-level types.
//!
//! The Hamiltonian held by a [`SpinModel`] is
//!
//! ```text
//! H(t) = - Σ_{j<k} Σ_α J[j][k][α] S_j^α S_k^α
//!        - Σ_j Σ_α (h0[j][α] + h1[j][α] sin(f[j][α] t + φ[j][α])) S_j^α
//! ```
//!
//! in units with ħ = 1. Couplings and fields are angular frequencies.

use std::f64::consts::TAU;

use crate::error::{argument, Result};
use crate::state::Axis;

/// Static plus sinusoidal field acting on one spin component.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldTerm {
    pub h0: f64,
    pub h1: f64,
    pub freq: f64,
    pub phase: f64,
}

impl FieldTerm {
    /// Field strength at sinusoid time `t`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        if self.h1 == 0.0 {
            self.h0
        } else {
            self.h0 + self.h1 * (self.freq * t + self.phase).sin()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.h0 == 0.0 && self.h1 == 0.0
    }
}

/// All parameters of the spin Hamiltonian for `L` qubits. Parameters that
/// are never set are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinModel {
    num_qubits: usize,
    /// Symmetric `L x L` table; the diagonal stays zero.
    couplings: Vec<[f64; 3]>,
    fields: Vec<[FieldTerm; 3]>,
}

impl SpinModel {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            couplings: vec![[0.0; 3]; num_qubits * num_qubits],
            fields: vec![[FieldTerm::default(); 3]; num_qubits],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn check_spin(&self, j: usize) -> Result<()> {
        if j >= self.num_qubits {
            return Err(argument(format!(
                "spin {j} out of range for L={}",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn check_finite(value: f64, what: &str) -> Result<()> {
        if !value.is_finite() {
            return Err(argument(format!("{what} must be finite, got {value}")));
        }
        Ok(())
    }

    pub fn set_coupling(&mut self, j: usize, k: usize, axis: Axis, value: f64) -> Result<()> {
        self.check_spin(j)?;
        self.check_spin(k)?;
        if j == k {
            return Err(argument(format!("self-coupling J[{j}][{j}] is not allowed")));
        }
        Self::check_finite(value, "coupling")?;
        let l = self.num_qubits;
        self.couplings[j * l + k][axis.index()] = value;
        self.couplings[k * l + j][axis.index()] = value;
        Ok(())
    }

    pub fn with_coupling(mut self, j: usize, k: usize, axis: Axis, value: f64) -> Result<Self> {
        self.set_coupling(j, k, axis, value)?;
        Ok(self)
    }

    pub fn coupling(&self, j: usize, k: usize, axis: Axis) -> f64 {
        self.couplings[j * self.num_qubits + k][axis.index()]
    }

    pub fn set_static_field(&mut self, j: usize, axis: Axis, h0: f64) -> Result<()> {
        self.check_spin(j)?;
        Self::check_finite(h0, "static field")?;
        self.fields[j][axis.index()].h0 = h0;
        Ok(())
    }

    pub fn with_static_field(mut self, j: usize, axis: Axis, h0: f64) -> Result<Self> {
        self.set_static_field(j, axis, h0)?;
        Ok(self)
    }

    /// Set the sinusoidal part `h1 sin(freq t + phase)`.
    pub fn set_rf_field(
        &mut self,
        j: usize,
        axis: Axis,
        h1: f64,
        freq: f64,
        phase: f64,
    ) -> Result<()> {
        self.check_spin(j)?;
        Self::check_finite(h1, "RF amplitude")?;
        Self::check_finite(freq, "RF frequency")?;
        Self::check_finite(phase, "RF phase")?;
        let term = &mut self.fields[j][axis.index()];
        term.h1 = h1;
        term.freq = freq;
        term.phase = phase;
        Ok(())
    }

    pub fn with_rf_field(
        mut self,
        j: usize,
        axis: Axis,
        h1: f64,
        freq: f64,
        phase: f64,
    ) -> Result<Self> {
        self.set_rf_field(j, axis, h1, freq, phase)?;
        Ok(self)
    }

    pub fn field(&self, j: usize, axis: Axis) -> &FieldTerm {
        &self.fields[j][axis.index()]
    }

    /// Nonzero couplings `(j, k, J)` with `j < k` along `axis`.
    pub fn pairs(&self, axis: Axis) -> Vec<(usize, usize, f64)> {
        let l = self.num_qubits;
        let mut out = Vec::new();
        for j in 0..l {
            for k in (j + 1)..l {
                let v = self.couplings[j * l + k][axis.index()];
                if v != 0.0 {
                    out.push((j, k, v));
                }
            }
        }
        out
    }

    /// Number of nonzero pair couplings summed over the three axes.
    pub fn pair_count(&self) -> usize {
        Axis::ALL.iter().map(|&a| self.pairs(a).len()).sum()
    }

    /// True when any coupling or field along `axis` is nonzero.
    pub fn axis_active(&self, axis: Axis) -> bool {
        !self.pairs(axis).is_empty() || self.fields.iter().any(|f| !f[axis.index()].is_zero())
    }

    pub fn has_rf(&self) -> bool {
        self.fields
            .iter()
            .any(|f| f.iter().any(|t| t.h1 != 0.0))
    }

    /// Copy with every field component scaled by -1 on the listed axis
    /// families; used to derive inverse rotations.
    pub(crate) fn negate_drive(&self, static_part: bool, rf_part: bool) -> Self {
        let mut out = self.clone();
        for f in out.fields.iter_mut().flatten() {
            if static_part {
                f.h0 = -f.h0;
            }
            if rf_part {
                f.h1 = -f.h1;
            }
        }
        out
    }
}

/// One hardware instruction: a model held constant for a duration `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryOperation {
    pub name: String,
    pub model: SpinModel,
    pub tau: f64,
}

impl ElementaryOperation {
    pub fn new(name: impl Into<String>, model: SpinModel, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(argument(format!("duration must be finite and >= 0, got {tau}")));
        }
        Ok(Self {
            name: name.into(),
            model,
            tau,
        })
    }

    /// Duration given as `tau / 2π`, the unit used in instruction tables.
    pub fn with_period_fraction(
        name: impl Into<String>,
        model: SpinModel,
        tau_over_2pi: f64,
    ) -> Result<Self> {
        Self::new(name, model, TAU * tau_over_2pi)
    }

    pub fn tau_over_2pi(&self) -> f64 {
        self.tau / TAU
    }
}

/// Reference point for the argument of the RF sinusoids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RfClock {
    /// Sinusoids see absolute simulation time; pulses inherit whatever phase
    /// the running clock implies at their start.
    #[default]
    Global,
    /// Each operation's sinusoids start from time zero at the operation's
    /// first instant, i.e. every pulse begins at phase `φ`.
    PerOperation,
}

impl RfClock {
    pub fn label(self) -> &'static str {
        match self {
            RfClock::Global => "global",
            RfClock::PerOperation => "per-eo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "global" => Some(RfClock::Global),
            "per-eo" | "per-operation" | "local" => Some(RfClock::PerOperation),
            _ => None,
        }
    }
}

/// Ordered instructions, executed left to right.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PulseSequence {
    pub ops: Vec<ElementaryOperation>,
    pub start_time: f64,
    pub rf_clock: RfClock,
}

impl PulseSequence {
    pub fn new(ops: Vec<ElementaryOperation>) -> Self {
        Self {
            ops,
            start_time: 0.0,
            rf_clock: RfClock::Global,
        }
    }

    pub fn with_rf_clock(mut self, clock: RfClock) -> Self {
        self.rf_clock = clock;
        self
    }

    /// Sequence for an operator product written in the usual right-to-left
    /// notation: `product[0]` is the leftmost factor and therefore runs
    /// last.
    pub fn from_product(product: Vec<ElementaryOperation>) -> Self {
        let mut ops = product;
        ops.reverse();
        Self::new(ops)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.ops.iter().map(|op| op.tau).sum()
    }

    pub fn names(&self) -> Vec<&str> {
        self.ops.iter().map(|op| op.name.as_str()).collect()
    }

    pub fn extend(&mut self, other: PulseSequence) {
        self.ops.extend(other.ops);
    }
}

/// Substep count for one operation; `delta` is always derived from `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    m: usize,
    tau: f64,
}

impl StepPlan {
    pub fn new(tau: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(argument("substep count must be at least 1"));
        }
        Ok(Self { m, tau })
    }

    pub fn substeps(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.tau / self.m as f64
    }

    pub fn scaled(&self, multiplier: usize) -> Self {
        Self {
            m: self.m * multiplier.max(1),
            tau: self.tau,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couplings_are_symmetric() {
        let m = SpinModel::new(3).with_coupling(2, 0, Axis::Z, -1.5).unwrap();
        assert_eq!(m.coupling(0, 2, Axis::Z), -1.5);
        assert_eq!(m.coupling(2, 0, Axis::Z), -1.5);
        assert_eq!(m.pairs(Axis::Z), vec![(0, 2, -1.5)]);
        assert!(m.pairs(Axis::X).is_empty());
    }

    #[test]
    fn rejects_self_coupling_and_non_finite() {
        let mut m = SpinModel::new(2);
        assert!(m.set_coupling(1, 1, Axis::X, 1.0).is_err());
        assert!(m.set_static_field(0, Axis::X, f64::NAN).is_err());
        assert!(m.set_static_field(2, Axis::X, 1.0).is_err());
    }

    #[test]
    fn field_term_evaluates_sinusoid() {
        let f = FieldTerm {
            h0: 1.0,
            h1: 2.0,
            freq: 0.5,
            phase: 0.25,
        };
        let t = 1.3;
        assert_eq!(f.at(t), 1.0 + 2.0 * (0.5 * t + 0.25).sin());
    }

    #[test]
    fn product_order_is_reversed() {
        let a = ElementaryOperation::new("A", SpinModel::new(1), 1.0).unwrap();
        let b = ElementaryOperation::new("B", SpinModel::new(1), 2.0).unwrap();
        let seq = PulseSequence::from_product(vec![a, b]);
        assert_eq!(seq.names(), vec!["B", "A"]);
        assert_eq!(seq.total_duration(), 3.0);
    }

    #[test]
    fn step_plan_derives_delta() {
        let p = StepPlan::new(3.0, 4).unwrap();
        assert_eq!(p.delta() * 4.0, 3.0);
        assert!(StepPlan::new(1.0, 0).is_err());
        assert!(ElementaryOperation::new("neg", SpinModel::new(1), -1.0).is_err());
    }
}
