//! Instruction tables for a two-qubit machine and the Grover search
//! programs built from them.
//!
//! Operator products are written the usual way, rightmost factor first in
//! time. Every constructor here lists its factors in that written order and
//! goes through [`product`], which is the only place the order is reversed
//! into execution order.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{argument, Result, SimError};
use crate::model::{ElementaryOperation, PulseSequence, RfClock, SpinModel};
use crate::state::Axis;

/// π/2 rotations of one spin and their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rotation {
    X,
    XBar,
    Y,
    YBar,
}

impl Rotation {
    pub fn inverse(self) -> Self {
        match self {
            Rotation::X => Rotation::XBar,
            Rotation::XBar => Rotation::X,
            Rotation::Y => Rotation::YBar,
            Rotation::YBar => Rotation::Y,
        }
    }
}

/// One entry of the instruction set. Qubits are 0-based here; names use
/// 1-based labels (`X1`, `Y2bar`, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    Rotate(Rotation, usize),
    /// Free evolution under the zz coupling for `-π/J`.
    ConditionalPhase,
}

impl Instruction {
    pub fn name(self) -> String {
        self.to_string()
    }

    pub fn parse(name: &str) -> Option<Self> {
        if name == "Ipi" {
            return Some(Instruction::ConditionalPhase);
        }
        let (axis, rest) = name.split_at(name.find(|c: char| c.is_ascii_digit())?);
        let (digits, bar) = match rest.strip_suffix("bar") {
            Some(d) => (d, true),
            None => (rest, false),
        };
        let qubit: usize = digits.parse().ok()?;
        if qubit == 0 {
            return None;
        }
        let rot = match (axis, bar) {
            ("X", false) => Rotation::X,
            ("X", true) => Rotation::XBar,
            ("Y", false) => Rotation::Y,
            ("Y", true) => Rotation::YBar,
            _ => return None,
        };
        Some(Instruction::Rotate(rot, qubit - 1))
    }

    /// All nine instructions of the two-qubit machine.
    pub fn two_qubit_set() -> Vec<Instruction> {
        let mut out = Vec::with_capacity(9);
        for q in 0..2 {
            for r in [Rotation::X, Rotation::XBar, Rotation::Y, Rotation::YBar] {
                out.push(Instruction::Rotate(r, q));
            }
        }
        out.push(Instruction::ConditionalPhase);
        out
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::ConditionalPhase => write!(f, "Ipi"),
            Instruction::Rotate(r, q) => {
                let (axis, bar) = match r {
                    Rotation::X => ("X", ""),
                    Rotation::XBar => ("X", "bar"),
                    Rotation::Y => ("Y", ""),
                    Rotation::YBar => ("Y", "bar"),
                };
                write!(f, "{axis}{}{bar}", q + 1)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HardwareKind {
    /// Every rotation is a single static field; operations are exact.
    Ideal,
    /// Chloroform-like NMR machine: always-on Zeeman fields and coupling,
    /// rotations by resonant RF pulses.
    Nmr,
}

impl HardwareKind {
    pub fn label(self) -> &'static str {
        match self {
            HardwareKind::Ideal => "ideal",
            HardwareKind::Nmr => "nmr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ideal" => Some(HardwareKind::Ideal),
            "nmr" => Some(HardwareKind::Nmr),
            _ => None,
        }
    }
}

/// Coupling of the free-evolution instruction; it runs for `τ = -π/J`.
pub const ZZ_COUPLING: f64 = -1e-6;
/// `τ/2π` of the free-evolution instruction.
pub const CONDITIONAL_PHASE_PERIODS: f64 = 50e4;
/// `τ/2π` of an ideal rotation (a quarter period at unit field).
pub const IDEAL_ROTATION_PERIODS: f64 = 0.25;
/// Larmor frequencies of the two NMR spins.
pub const NMR_LARMOR: [f64; 2] = [1.0, 0.25];
/// RF amplitude seen by spin 1 and spin 2 for a pulse of either frequency.
pub const NMR_RF_AMPLITUDE: [f64; 2] = [0.05, 0.0125];
/// `τ/2π` of pulses resonant with spin 1 and spin 2.
pub const NMR_PULSE_PERIODS: [f64; 2] = [10.0, 40.0];

/// The instruction table of one machine.
#[derive(Clone, Debug, PartialEq)]
pub struct HardwareProfile {
    pub kind: HardwareKind,
    /// Phase reference used by sequences built from this profile.
    pub rf_clock: RfClock,
    table: BTreeMap<Instruction, ElementaryOperation>,
}

impl HardwareProfile {
    pub fn op(&self, instr: Instruction) -> Result<&ElementaryOperation> {
        self.table.get(&instr).ok_or_else(|| SimError::UnknownName {
            kind: "instruction",
            names: vec![instr.name()],
        })
    }

    pub fn op_by_name(&self, name: &str) -> Result<&ElementaryOperation> {
        let unknown = || SimError::UnknownName {
            kind: "instruction",
            names: vec![name.to_string()],
        };
        let instr = Instruction::parse(name).ok_or_else(unknown)?;
        self.table.get(&instr).ok_or_else(unknown)
    }

    pub fn operations(&self) -> impl Iterator<Item = (&Instruction, &ElementaryOperation)> {
        self.table.iter()
    }

    pub fn num_qubits(&self) -> usize {
        2
    }
}

/// The full instruction table for `kind`, durations converted from `τ/2π`.
pub fn make_profile(kind: HardwareKind) -> HardwareProfile {
    match kind {
        HardwareKind::Ideal => ideal_profile(),
        HardwareKind::Nmr => nmr_profile(),
    }
}

fn conditional_phase_model(background: &SpinModel) -> SpinModel {
    let mut m = background.clone();
    m.set_coupling(0, 1, Axis::Z, ZZ_COUPLING)
        .expect("two-qubit model");
    m
}

fn insert_with_inverse(
    table: &mut BTreeMap<Instruction, ElementaryOperation>,
    instr: Instruction,
    model: SpinModel,
    periods: f64,
    flip_static: bool,
) {
    let Instruction::Rotate(rot, q) = instr else {
        unreachable!("only rotations have inverses")
    };
    let inverse = Instruction::Rotate(rot.inverse(), q);
    let inv_model = model.negate_drive(flip_static, !flip_static);
    let eo = |i: Instruction, m: SpinModel| {
        ElementaryOperation::with_period_fraction(i.name(), m, periods).expect("valid duration")
    };
    table.insert(inverse, eo(inverse, inv_model));
    table.insert(instr, eo(instr, model));
}

fn ideal_profile() -> HardwareProfile {
    let mut table = BTreeMap::new();
    let rot = |q: usize, axis: Axis, sign: f64| {
        SpinModel::new(2)
            .with_static_field(q, axis, sign)
            .expect("two-qubit model")
    };
    // Listed instructions; the others follow by reversing the field.
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::X, 0), rot(0, Axis::X, 1.0), IDEAL_ROTATION_PERIODS, true);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::XBar, 1), rot(1, Axis::X, -1.0), IDEAL_ROTATION_PERIODS, true);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::Y, 0), rot(0, Axis::Y, 1.0), IDEAL_ROTATION_PERIODS, true);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::YBar, 1), rot(1, Axis::Y, -1.0), IDEAL_ROTATION_PERIODS, true);
    let ipi = ElementaryOperation::with_period_fraction(
        "Ipi",
        conditional_phase_model(&SpinModel::new(2)),
        CONDITIONAL_PHASE_PERIODS,
    )
    .expect("valid duration");
    table.insert(Instruction::ConditionalPhase, ipi);
    HardwareProfile {
        kind: HardwareKind::Ideal,
        rf_clock: RfClock::Global,
        table,
    }
}

fn nmr_background() -> SpinModel {
    SpinModel::new(2)
        .with_static_field(0, Axis::Z, NMR_LARMOR[0])
        .and_then(|m| m.with_static_field(1, Axis::Z, NMR_LARMOR[1]))
        .and_then(|m| m.with_coupling(0, 1, Axis::Z, ZZ_COUPLING))
        .expect("two-qubit model")
}

/// A pulse resonant with spin `target`, applied along `field_axis` with
/// signed strength `sign` (both spins see it, scaled by their coupling to
/// the coil).
fn nmr_pulse(target: usize, field_axis: Axis, sign: f64) -> SpinModel {
    let freq = NMR_LARMOR[target];
    let mut m = nmr_background();
    for (spin, amp) in NMR_RF_AMPLITUDE.iter().enumerate() {
        m.set_rf_field(spin, field_axis, sign * amp, freq, 0.0)
            .expect("two-qubit model");
    }
    m
}

fn nmr_profile() -> HardwareProfile {
    let mut table = BTreeMap::new();
    // A field along y rotates about x and vice versa.
    let p1 = NMR_PULSE_PERIODS[0];
    let p2 = NMR_PULSE_PERIODS[1];
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::X, 0), nmr_pulse(0, Axis::Y, -1.0), p1, false);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::XBar, 1), nmr_pulse(1, Axis::Y, 1.0), p2, false);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::Y, 0), nmr_pulse(0, Axis::X, 1.0), p1, false);
    insert_with_inverse(&mut table, Instruction::Rotate(Rotation::YBar, 1), nmr_pulse(1, Axis::X, -1.0), p2, false);
    let ipi = ElementaryOperation::with_period_fraction(
        "Ipi",
        conditional_phase_model(&nmr_background()),
        CONDITIONAL_PHASE_PERIODS,
    )
    .expect("valid duration");
    table.insert(Instruction::ConditionalPhase, ipi);
    HardwareProfile {
        kind: HardwareKind::Nmr,
        rf_clock: RfClock::PerOperation,
        table,
    }
}

/// Turn an operator product, written leftmost factor first, into an
/// executable sequence.
pub fn product(profile: &HardwareProfile, written: &[Instruction]) -> Result<PulseSequence> {
    let ops = written
        .iter()
        .map(|&i| profile.op(i).cloned())
        .collect::<Result<Vec<_>>>()?;
    Ok(PulseSequence::from_product(ops).with_rf_clock(profile.rf_clock))
}

fn rot(r: Rotation, q: usize) -> Instruction {
    Instruction::Rotate(r, q)
}

fn check_qubit(j: usize) -> Result<()> {
    if j > 1 {
        return Err(argument(format!("qubit {j} out of range for the two-qubit machine")));
    }
    Ok(())
}

fn check_item(item: usize) -> Result<()> {
    if item > 3 {
        return Err(argument(format!("database item must be 0..=3, got {item}")));
    }
    Ok(())
}

/// Written factors of `W_j = X_j X_j Ȳ_j`.
fn wh_factors(j: usize) -> [Instruction; 3] {
    [rot(Rotation::X, j), rot(Rotation::X, j), rot(Rotation::YBar, j)]
}

/// Written factors of `Y_1 X̃_1 Ȳ_1 Y_2 X̃_2 Ȳ_2 I(π)`, with `X̃_j` chosen by
/// `bar[j]`.
fn phase_fixup_factors(bar: [bool; 2]) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(7);
    for (q, &b) in bar.iter().enumerate() {
        let x = if b { Rotation::XBar } else { Rotation::X };
        out.extend([rot(Rotation::Y, q), rot(x, q), rot(Rotation::YBar, q)]);
    }
    out.push(Instruction::ConditionalPhase);
    out
}

/// Which `X_j` of the encoding transform `F_item` carry a bar.
fn oracle_bars(item: usize) -> [bool; 2] {
    // The bits enter reversed: bit 1 of `item` controls spin 1, bit 0 spin 2.
    [item & 2 == 0, item & 1 == 0]
}

/// Walsh-Hadamard transform on qubit `j`: executes Ȳ_j, X_j, X_j.
pub fn wh_transform_seq(j: usize, profile: &HardwareProfile) -> Result<PulseSequence> {
    check_qubit(j)?;
    product(profile, &wh_factors(j))
}

/// Encoding transform `F_item` in unshortened form.
pub fn f_oracle_seq(item: usize, profile: &HardwareProfile) -> Result<PulseSequence> {
    check_item(item)?;
    product(profile, &phase_fixup_factors(oracle_bars(item)))
}

/// Conditional phase shift `P = Y_1 X̄_1 Ȳ_1 Y_2 X̄_2 Ȳ_2 I(π)`.
pub fn conditional_phase_seq(profile: &HardwareProfile) -> Result<PulseSequence> {
    product(profile, &phase_fixup_factors([true, true]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitOrder {
    /// W_1 runs first, then W_2.
    W1ThenW2,
    /// W_2 runs first, then W_1.
    W2ThenW1,
}

impl InitOrder {
    pub fn label(self) -> &'static str {
        match self {
            InitOrder::W1ThenW2 => "12",
            InitOrder::W2ThenW1 => "21",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "12" => Some(InitOrder::W1ThenW2),
            "21" => Some(InitOrder::W2ThenW1),
            _ => None,
        }
    }
}

/// Written factors of the shortened search program for `item`:
/// `X_1 Ȳ_1 X_2 Ȳ_2 I(π) X̃_1 Ȳ_1 X̃_2 Ȳ_2 I(π)`, where the rightmost `X̃_1`
/// is barred when bit 1 of `item` is set and `X̃_2` when bit 0 is set.
fn shortened_factors(item: usize) -> Vec<Instruction> {
    let x1 = if item & 2 != 0 { Rotation::XBar } else { Rotation::X };
    let x2 = if item & 1 != 0 { Rotation::XBar } else { Rotation::X };
    vec![
        rot(Rotation::X, 0),
        rot(Rotation::YBar, 0),
        rot(Rotation::X, 1),
        rot(Rotation::YBar, 1),
        Instruction::ConditionalPhase,
        rot(x1, 0),
        rot(Rotation::YBar, 0),
        rot(x2, 1),
        rot(Rotation::YBar, 1),
        Instruction::ConditionalPhase,
    ]
}

/// Shortened search program `U_item` alone (without initialization).
pub fn shortened_search_seq(item: usize, profile: &HardwareProfile) -> Result<PulseSequence> {
    check_item(item)?;
    product(profile, &shortened_factors(item))
}

/// Unshortened `W_1 W_2 P W_1 W_2 F_item`.
pub fn full_search_seq(item: usize, profile: &HardwareProfile) -> Result<PulseSequence> {
    check_item(item)?;
    let mut written = Vec::new();
    written.extend(wh_factors(0));
    written.extend(wh_factors(1));
    written.extend(phase_fixup_factors([true, true]));
    written.extend(wh_factors(0));
    written.extend(wh_factors(1));
    written.extend(phase_fixup_factors(oracle_bars(item)));
    product(profile, &written)
}

/// Initialization followed by the shortened search program.
#[derive(Clone, Debug, PartialEq)]
pub struct GroverProgram {
    pub item: usize,
    pub kind: HardwareKind,
    pub init_order: InitOrder,
    pub seq: PulseSequence,
}

pub fn grover_program(
    item: usize,
    profile: &HardwareProfile,
    init_order: InitOrder,
) -> Result<GroverProgram> {
    check_item(item)?;
    let (first, second) = match init_order {
        InitOrder::W1ThenW2 => (0, 1),
        InitOrder::W2ThenW1 => (1, 0),
    };
    let mut written = shortened_factors(item);
    written.extend(wh_factors(second));
    written.extend(wh_factors(first));
    Ok(GroverProgram {
        item,
        kind: profile.kind,
        init_order,
        seq: product(profile, &written)?,
    })
}
