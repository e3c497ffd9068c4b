//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [eo X1]
//! tau_over_2pi = 10
//! h0 z 1 = 1
//! h1 y 1 = -0.05
//! f y 1 = 1
//! J z 1 2 = -1e-6
//!
//! [sequence demo]
//! rf_clock = per-eo
//! eos = Y1bar, X1, X1
//!
//! [run]
//! state = 00
//! sequence = demo
//! sample_every = 10
//! ```
//!
//! Spins are numbered from 1 in the file. `eos` lists operations in
//! execution order and may be repeated to continue a long list. In `state`,
//! character `j` is the bit of spin `j` (`0` up, `1` down). Optional `[run]`
//! keys: `qubits`, `steps` (`auto`, `auto*K` or a fixed substep count),
//! `output`, `samples_per_rf_period`, `max_phase_per_step`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};
use crate::model::{ElementaryOperation, PulseSequence, RfClock, SpinModel};
use crate::propagator::{Sampling, StepControl, StepOverride};
use crate::pulses::{grover_program, make_profile, HardwareKind, InitOrder};
use crate::state::{Axis, StateVector, MAX_QUBITS};

/// The `[run]` section.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDirectives {
    pub state: Option<Vec<u8>>,
    pub sequence: Option<String>,
    /// Substeps between samples; `0` records operation boundaries only.
    pub sample_every: Option<usize>,
    pub steps: StepOverride,
    pub output: Option<PathBuf>,
    pub control: StepControl,
}

impl Default for RunDirectives {
    fn default() -> Self {
        Self {
            state: None,
            sequence: None,
            sample_every: None,
            steps: StepOverride::Auto,
            output: None,
            control: StepControl::default(),
        }
    }
}

impl RunDirectives {
    pub fn sampling(&self) -> Sampling {
        match self.sample_every {
            None => Sampling::default(),
            Some(0) => Sampling::BoundariesOnly,
            Some(k) => Sampling::EverySubsteps(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub num_qubits: usize,
    pub eos: BTreeMap<String, ElementaryOperation>,
    pub sequences: BTreeMap<String, PulseSequence>,
    pub run: RunDirectives,
}

impl ExperimentConfig {
    pub fn sequence(&self, name: &str) -> Result<&PulseSequence> {
        self.sequences.get(name).ok_or_else(|| SimError::UnknownName {
            kind: "sequence",
            names: vec![name.to_string()],
        })
    }

    /// The `[run]` state, or all spins up.
    pub fn initial_state(&self) -> Result<StateVector> {
        match &self.run.state {
            Some(bits) => StateVector::basis(self.num_qubits, bits),
            None => StateVector::basis(self.num_qubits, &vec![0; self.num_qubits]),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> SimError {
    SimError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Param {
    Coupling(Axis, usize, usize),
    Static(Axis, usize),
    Amplitude(Axis, usize),
    Frequency(Axis, usize),
    Phase(Axis, usize),
}

impl Param {
    fn max_spin(self) -> usize {
        match self {
            Param::Coupling(_, j, k) => j.max(k),
            Param::Static(_, j)
            | Param::Amplitude(_, j)
            | Param::Frequency(_, j)
            | Param::Phase(_, j) => j,
        }
    }
}

#[derive(Default)]
struct RawEo {
    line: usize,
    tau: Option<f64>,
    params: BTreeMap<Param, (f64, usize)>,
}

#[derive(Default)]
struct RawSequence {
    names: Vec<(String, usize)>,
    clock: RfClock,
}

enum Section {
    None,
    Eo(String),
    Sequence(String),
    Run,
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, got '{s}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("value must be finite, got '{s}'")));
    }
    Ok(v)
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, got '{s}'")))
}

fn parse_spin(s: &str, line: usize) -> Result<usize> {
    let j = parse_usize(s, line)?;
    if j == 0 {
        return Err(parse_err(line, "spins are numbered from 1"));
    }
    Ok(j - 1)
}

fn parse_param(key: &str, line: usize) -> Result<Param> {
    let words: Vec<&str> = key.split_whitespace().collect();
    let axis = |w: &str| Axis::parse(w).ok_or_else(|| parse_err(line, format!("unknown axis '{w}'")));
    match words.as_slice() {
        ["J", a, j, k] => {
            let (j, k) = (parse_spin(j, line)?, parse_spin(k, line)?);
            if j == k {
                return Err(parse_err(line, "a spin cannot couple to itself"));
            }
            Ok(Param::Coupling(axis(a)?, j.min(k), j.max(k)))
        }
        ["h0", a, j] => Ok(Param::Static(axis(a)?, parse_spin(j, line)?)),
        ["h1", a, j] => Ok(Param::Amplitude(axis(a)?, parse_spin(j, line)?)),
        ["f", a, j] => Ok(Param::Frequency(axis(a)?, parse_spin(j, line)?)),
        ["phi", a, j] => Ok(Param::Phase(axis(a)?, parse_spin(j, line)?)),
        _ => Err(parse_err(line, format!("unknown parameter '{key}'"))),
    }
}

/// `auto`, `auto*K` or a fixed substep count.
pub fn parse_step_override(s: &str) -> Option<StepOverride> {
    if s == "auto" {
        return Some(StepOverride::Auto);
    }
    if let Some(k) = s.strip_prefix("auto*") {
        return match k.trim().parse() {
            Ok(0) | Err(_) => None,
            Ok(k) => Some(StepOverride::AutoTimes(k)),
        };
    }
    match s.parse() {
        Ok(0) | Err(_) => None,
        Ok(m) => Some(StepOverride::Fixed(m)),
    }
}

fn parse_steps(s: &str, line: usize) -> Result<StepOverride> {
    parse_step_override(s).ok_or_else(|| {
        parse_err(line, format!("steps must be 'auto', 'auto*K' or a positive count, got '{s}'"))
    })
}

pub fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut section = Section::None;
    let mut eos: BTreeMap<String, RawEo> = BTreeMap::new();
    let mut sequences: BTreeMap<String, RawSequence> = BTreeMap::new();
    let mut run = RunDirectives::default();
    let mut qubits: Option<(usize, usize)> = None;
    let mut seen_run_keys: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "section header must end with ']'"))?
                .trim();
            let mut parts = header.splitn(2, char::is_whitespace);
            let kind = parts.next().unwrap_or("");
            let name = parts.next().map(str::trim).unwrap_or("");
            section = match (kind, name.is_empty()) {
                ("eo", false) => {
                    if eos.contains_key(name) {
                        return Err(parse_err(line, format!("operation '{name}' defined twice")));
                    }
                    eos.insert(name.to_string(), RawEo { line, ..RawEo::default() });
                    Section::Eo(name.to_string())
                }
                ("sequence", false) => {
                    if sequences.contains_key(name) {
                        return Err(parse_err(line, format!("sequence '{name}' defined twice")));
                    }
                    sequences.insert(name.to_string(), RawSequence::default());
                    Section::Sequence(name.to_string())
                }
                ("run", true) => Section::Run,
                ("eo" | "sequence", true) => {
                    return Err(parse_err(line, format!("[{kind}] needs a name")))
                }
                _ => return Err(parse_err(line, format!("unknown section [{header}]"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        match &section {
            Section::None => {
                return Err(parse_err(line, "assignment outside of any section"));
            }
            Section::Eo(name) => {
                let eo = eos.get_mut(name).expect("inserted at header");
                if key == "tau_over_2pi" || key == "tau" {
                    if eo.tau.is_some() {
                        return Err(parse_err(line, "duration given twice"));
                    }
                    let v = parse_f64(value, line)?;
                    if v < 0.0 {
                        return Err(parse_err(line, "duration must be non-negative"));
                    }
                    eo.tau = Some(if key == "tau" { v } else { std::f64::consts::TAU * v });
                } else {
                    let p = parse_param(key, line)?;
                    let v = parse_f64(value, line)?;
                    if eo.params.insert(p, (v, line)).is_some() {
                        return Err(parse_err(line, format!("parameter '{key}' given twice")));
                    }
                }
            }
            Section::Sequence(name) => {
                let seq = sequences.get_mut(name).expect("inserted at header");
                match key {
                    "eos" => seq.names.extend(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(|s| (s.to_string(), line)),
                    ),
                    "rf_clock" => {
                        seq.clock = RfClock::parse(value).ok_or_else(|| {
                            parse_err(line, format!("rf_clock must be 'global' or 'per-eo', got '{value}'"))
                        })?
                    }
                    _ => return Err(parse_err(line, format!("unknown sequence key '{key}'"))),
                }
            }
            Section::Run => {
                if seen_run_keys.insert(key.to_string(), line).is_some() {
                    return Err(parse_err(line, format!("'{key}' given twice")));
                }
                match key {
                    "state" => {
                        let bits = parse_bits(value).filter(|b| !b.is_empty()).ok_or_else(|| {
                            parse_err(line, format!("state must be a string of 0/1, got '{value}'"))
                        })?;
                        run.state = Some(bits);
                    }
                    "sequence" => run.sequence = Some(value.to_string()),
                    "sample_every" => run.sample_every = Some(parse_usize(value, line)?),
                    "steps" => run.steps = parse_steps(value, line)?,
                    "output" => run.output = Some(PathBuf::from(value)),
                    "qubits" => qubits = Some((parse_usize(value, line)?, line)),
                    "samples_per_rf_period" | "max_phase_per_step" => {
                        let v = parse_f64(value, line)?;
                        if v <= 0.0 {
                            return Err(parse_err(line, format!("{key} must be positive")));
                        }
                        if key == "samples_per_rf_period" {
                            run.control.samples_per_rf_period = v;
                        } else {
                            run.control.max_phase_per_step = v;
                        }
                    }
                    _ => return Err(parse_err(line, format!("unknown run key '{key}'"))),
                }
            }
        }
    }

    let max_spin = eos
        .values()
        .flat_map(|e| e.params.keys().map(|p| p.max_spin() + 1))
        .max()
        .unwrap_or(0);
    let num_qubits = match (qubits, &run.state) {
        (Some((q, line)), Some(bits)) if bits.len() != q => {
            return Err(parse_err(
                line,
                format!("qubits = {q} but state has {} bits", bits.len()),
            ))
        }
        (Some((q, _)), _) => q,
        (None, Some(bits)) => bits.len(),
        (None, None) => max_spin.max(1),
    };
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(SimError::Capacity {
            requested: num_qubits,
            max: MAX_QUBITS,
        });
    }

    let mut built = BTreeMap::new();
    for (name, raw) in eos {
        let tau = raw
            .tau
            .ok_or_else(|| parse_err(raw.line, format!("operation '{name}' has no tau_over_2pi")))?;
        let mut model = SpinModel::new(num_qubits);
        let mut rf: BTreeMap<(Axis, usize), [f64; 3]> = BTreeMap::new();
        for (p, (v, line)) in raw.params {
            if p.max_spin() >= num_qubits {
                return Err(parse_err(
                    line,
                    format!("spin {} out of range for {num_qubits} qubits", p.max_spin() + 1),
                ));
            }
            match p {
                Param::Coupling(a, j, k) => model.set_coupling(j, k, a, v)?,
                Param::Static(a, j) => model.set_static_field(j, a, v)?,
                Param::Amplitude(a, j) => rf.entry((a, j)).or_default()[0] = v,
                Param::Frequency(a, j) => rf.entry((a, j)).or_default()[1] = v,
                Param::Phase(a, j) => rf.entry((a, j)).or_default()[2] = v,
            }
        }
        for ((a, j), [h1, f, phi]) in rf {
            model.set_rf_field(j, a, h1, f, phi)?;
        }
        built.insert(name.clone(), ElementaryOperation::new(name, model, tau)?);
    }

    let mut unknown = Vec::new();
    let mut seqs = BTreeMap::new();
    for (name, raw) in sequences {
        let mut ops = Vec::with_capacity(raw.names.len());
        for (eo, _) in &raw.names {
            match built.get(eo) {
                Some(op) => ops.push(op.clone()),
                None => {
                    if !unknown.contains(eo) {
                        unknown.push(eo.clone());
                    }
                }
            }
        }
        seqs.insert(name, PulseSequence::new(ops).with_rf_clock(raw.clock));
    }
    if !unknown.is_empty() {
        return Err(SimError::UnknownName {
            kind: "operation",
            names: unknown,
        });
    }
    if let Some(s) = &run.sequence {
        if !seqs.contains_key(s) {
            return Err(SimError::UnknownName {
                kind: "sequence",
                names: vec![s.clone()],
            });
        }
    }
    Ok(ExperimentConfig {
        num_qubits,
        eos: built,
        sequences: seqs,
        run,
    })
}

/// Text form of a set of operations and sequences. Sequences are written by
/// operation name, so every operation they use must be in `eos` under the
/// same name.
pub fn render_config(
    eos: &[&ElementaryOperation],
    sequences: &[(String, &PulseSequence)],
    run: &RunDirectives,
) -> String {
    let mut out = String::new();
    for eo in eos {
        let m = &eo.model;
        let _ = writeln!(out, "[eo {}]", eo.name);
        let _ = writeln!(out, "tau_over_2pi = {}", eo.tau_over_2pi());
        for axis in Axis::ALL {
            let a = axis.label();
            for (j, k, v) in m.pairs(axis) {
                let _ = writeln!(out, "J {a} {} {} = {v}", j + 1, k + 1);
            }
            for j in 0..m.num_qubits() {
                let f = m.field(j, axis);
                if f.h0 != 0.0 {
                    let _ = writeln!(out, "h0 {a} {} = {}", j + 1, f.h0);
                }
                if f.h1 != 0.0 {
                    let _ = writeln!(out, "h1 {a} {} = {}", j + 1, f.h1);
                }
                if f.freq != 0.0 {
                    let _ = writeln!(out, "f {a} {} = {}", j + 1, f.freq);
                }
                if f.phase != 0.0 {
                    let _ = writeln!(out, "phi {a} {} = {}", j + 1, f.phase);
                }
            }
        }
        out.push('\n');
    }
    for (name, seq) in sequences {
        let _ = writeln!(out, "[sequence {name}]");
        if seq.rf_clock != RfClock::Global {
            let _ = writeln!(out, "rf_clock = {}", seq.rf_clock.label());
        }
        let _ = writeln!(out, "eos = {}", seq.names().join(", "));
        out.push('\n');
    }
    let _ = writeln!(out, "[run]");
    if let Some(bits) = &run.state {
        let s: String = bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
        let _ = writeln!(out, "state = {s}");
    }
    if let Some(s) = &run.sequence {
        let _ = writeln!(out, "sequence = {s}");
    }
    if let Some(k) = run.sample_every {
        let _ = writeln!(out, "sample_every = {k}");
    }
    match run.steps {
        StepOverride::Auto => {}
        StepOverride::AutoTimes(k) => {
            let _ = writeln!(out, "steps = auto*{k}");
        }
        StepOverride::Fixed(m) => {
            let _ = writeln!(out, "steps = {m}");
        }
    }
    if let Some(p) = &run.output {
        let _ = writeln!(out, "output = {}", p.display());
    }
    let d = StepControl::default();
    if run.control.samples_per_rf_period != d.samples_per_rf_period {
        let _ = writeln!(out, "samples_per_rf_period = {}", run.control.samples_per_rf_period);
    }
    if run.control.max_phase_per_step != d.max_phase_per_step {
        let _ = writeln!(out, "max_phase_per_step = {}", run.control.max_phase_per_step);
    }
    out
}

/// Name of the dumped search program for `item` and `order`.
pub fn grover_sequence_name(item: usize, order: InitOrder) -> String {
    format!("grover{item}_{}", order.label())
}

/// A built-in instruction table with all eight search programs, ready to
/// edit and run.
pub fn dump_profile(kind: HardwareKind) -> String {
    let profile = make_profile(kind);
    let eos: Vec<&ElementaryOperation> = profile.operations().map(|(_, eo)| eo).collect();
    let mut seqs = Vec::new();
    for order in [InitOrder::W1ThenW2, InitOrder::W2ThenW1] {
        for item in 0..4 {
            let prog = grover_program(item, &profile, order).expect("valid item");
            seqs.push((grover_sequence_name(item, order), prog.seq));
        }
    }
    let seq_refs: Vec<(String, &PulseSequence)> = seqs.iter().map(|(n, s)| (n.clone(), s)).collect();
    let run = RunDirectives {
        state: Some(vec![0, 0]),
        sequence: Some(grover_sequence_name(0, InitOrder::W1ThenW2)),
        ..RunDirectives::default()
    };
    let mut out = format!("# {} instruction table\n\n", kind.label());
    out.push_str(&render_config(&eos, &seq_refs, &run));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::Instruction;

    const SAMPLE: &str = "\
# two spins
[eo A]
tau_over_2pi = 0.25
h0 x 1 = 1   # rotate spin 1

[eo B]
tau = 2.5
J z 2 1 = -0.5
h1 y 2 = 0.1
f y 2 = 2
phi y 2 = 0.3

[sequence s]
eos = A, B
eos = A

[sequence empty]
eos =

[run]
state = 01
sequence = s
sample_every = 5
steps = auto*4
";

    #[test]
    fn parses_sample() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.num_qubits, 2);
        let b = &cfg.eos["B"];
        assert_eq!(b.tau, 2.5);
        assert_eq!(b.model.coupling(0, 1, Axis::Z), -0.5);
        let f = b.model.field(1, Axis::Y);
        assert_eq!((f.h1, f.freq, f.phase), (0.1, 2.0, 0.3));
        assert_eq!(cfg.sequence("s").unwrap().names(), vec!["A", "B", "A"]);
        assert!(cfg.sequence("empty").unwrap().is_empty());
        assert_eq!(cfg.run.steps, StepOverride::AutoTimes(4));
        assert_eq!(cfg.run.sampling(), Sampling::EverySubsteps(5));
        let s = cfg.initial_state().unwrap();
        assert_eq!(s.amplitudes()[2].re, 1.0);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "[eo A]\ntau_over_2pi = 1\nh0 w 1 = 2\n";
        match parse_config(bad).unwrap_err() {
            SimError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("axis"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
        match parse_config("[eo A]\ntau_over_2pi = x\n").unwrap_err() {
            SimError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        match parse_config("state = 00\n").unwrap_err() {
            SimError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_config("[eo A]\ntau = -1\n").is_err());
        assert!(parse_config("[eo A]\n").is_err());
        assert!(parse_config("[eo A]\ntau = 1\nJ z 1 1 = 2\n").is_err());
    }

    #[test]
    fn lists_unknown_names() {
        let text = "[eo A]\ntau = 1\n[sequence s]\neos = A, Zap, A, Boom\n";
        match parse_config(text).unwrap_err() {
            SimError::UnknownName { names, .. } => assert_eq!(names, vec!["Zap", "Boom"]),
            other => panic!("unexpected {other}"),
        }
        let text = "[eo A]\ntau = 1\n[run]\nsequence = nope\n";
        assert!(matches!(
            parse_config(text).unwrap_err(),
            SimError::UnknownName { kind: "sequence", .. }
        ));
    }

    #[test]
    fn spin_range_follows_state() {
        let text = "[eo A]\ntau = 1\nh0 z 3 = 1\n[run]\nstate = 00\n";
        assert!(matches!(parse_config(text).unwrap_err(), SimError::Parse { line: 3, .. }));
    }

    #[test]
    fn profiles_round_trip() {
        for kind in [HardwareKind::Ideal, HardwareKind::Nmr] {
            let profile = make_profile(kind);
            let cfg = parse_config(&dump_profile(kind)).unwrap();
            assert_eq!(cfg.num_qubits, 2);
            for instr in Instruction::two_qubit_set() {
                let orig = profile.op(instr).unwrap();
                let back = &cfg.eos[&instr.name()];
                assert_eq!(back.model, orig.model, "{instr}");
                assert!((back.tau - orig.tau).abs() <= 1e-15 * orig.tau, "{instr}");
            }
            for order in [InitOrder::W1ThenW2, InitOrder::W2ThenW1] {
                for item in 0..4 {
                    let prog = grover_program(item, &profile, order).unwrap();
                    let seq = cfg.sequence(&grover_sequence_name(item, order)).unwrap();
                    assert_eq!(seq.names(), prog.seq.names());
                    assert_eq!(seq.rf_clock, profile.rf_clock);
                }
            }
        }
    }
}
