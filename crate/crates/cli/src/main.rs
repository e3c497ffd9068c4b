use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use spinsim::config::{dump_profile, load_config, parse_step_override};
use spinsim::experiments::{
    converge, run_grover, published_reference, GroverRun, MAX_MULTIPLIER,
};
use spinsim::output::write_trajectory_csv;
use spinsim::pulses::{grover_program, make_profile, HardwareKind, InitOrder};
use spinsim::selftest::run_selftest;
use spinsim::{Integrator, Sampling, SimError, StateVector, StepOverride, Trajectory};

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "spinsim", version, about = "Driven spin-1/2 quantum computer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hardware {
    Ideal,
    Nmr,
}

impl From<Hardware> for HardwareKind {
    fn from(h: Hardware) -> Self {
        match h {
            Hardware::Ideal => HardwareKind::Ideal,
            Hardware::Nmr => HardwareKind::Nmr,
        }
    }
}

fn parse_init(s: &str) -> Result<InitOrder, String> {
    InitOrder::parse(s).ok_or_else(|| format!("expected 12 or 21, got '{s}'"))
}

fn parse_steps(s: &str) -> Result<StepOverride, String> {
    parse_step_override(s).ok_or_else(|| format!("expected auto, auto*K or a positive count, got '{s}'"))
}

fn parse_item(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(i) if i <= 3 => Ok(i),
        _ => Err(format!("item must be 0, 1, 2 or 3, got '{s}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a search program and compare with the published reference values.
    Grover {
        #[arg(long, value_enum)]
        hardware: Hardware,
        #[arg(long, value_parser = parse_item)]
        item: usize,
        /// Initialization order: 12 runs W1 first, 21 runs W2 first.
        #[arg(long, value_parser = parse_init, default_value = "12")]
        init: InitOrder,
        /// Trajectory CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// auto, auto*K or a fixed substep count per operation.
        #[arg(long, value_parser = parse_steps, default_value = "auto")]
        steps: StepOverride,
        /// Substeps between samples (0: operation boundaries only); default
        /// is 200 samples per operation.
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Run a sequence from a config file.
    Run {
        config: PathBuf,
        /// Sequence to run; defaults to the config's [run] sequence.
        #[arg(long)]
        sequence: Option<String>,
        /// Trajectory CSV destination; defaults to the config's output,
        /// else standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_steps)]
        steps: Option<StepOverride>,
        /// Report the fidelity of the final state with the uniform
        /// superposition.
        #[arg(long)]
        compare_uniform: bool,
    },
    /// Double all step counts until the final Q values settle.
    Converge {
        #[arg(long, value_enum)]
        hardware: Hardware,
        #[arg(long, value_parser = parse_item)]
        item: usize,
        #[arg(long, value_parser = parse_init, default_value = "12")]
        init: InitOrder,
        #[arg(long)]
        tol: f64,
        #[arg(long, default_value_t = MAX_MULTIPLIER)]
        max_multiplier: usize,
    },
    /// Cross-check the integrator and instruction tables against the oracle.
    Selftest,
    /// Print a built-in instruction table in config format.
    DumpProfile {
        #[arg(value_enum)]
        hardware: Hardware,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Io(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) => Failure::Io(e.to_string()),
            SimError::NoConvergence { .. }
            | SimError::StepsNotConverged { .. }
            | SimError::NotUnitary { .. } => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, traj: &Trajectory, l: usize) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    write_trajectory_csv(BufWriter::new(file), traj, l).map_err(|e| io_failure(path, e))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SPINSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("SPINSIM_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot configure {n} worker threads: {e}")))?;
    }
    Ok(())
}

fn steps_label(steps: StepOverride) -> String {
    match steps {
        StepOverride::Auto => "auto".into(),
        StepOverride::AutoTimes(k) => format!("auto*{k}"),
        StepOverride::Fixed(m) => format!("{m} per operation"),
    }
}

fn print_grover_report(run: &GroverRun, steps: StepOverride) {
    let p = &run.program;
    println!(
        "hardware {}  item {}  init {}",
        p.kind.label(),
        p.item,
        p.init_order.label()
    );
    println!("sequence ({} operations): {}", p.seq.len(), p.seq.names().join(" "));
    println!(
        "steps {}  substeps {}  rf clock {}",
        steps_label(steps),
        run.trajectory.total_substeps,
        p.seq.rf_clock.label()
    );
    println!("final Q1 = {:.6}  Q2 = {:.6}", run.q[0], run.q[1]);
    println!("norm = {:.15}", run.norm);
    println!("wall time = {:.3} s", run.wall_time.as_secs_f64());
    if let Some(diff) = run.reference_diff() {
        println!(
            "reference (Q1, Q2) = ({:.3}, {:.3})  deviation ({:+.4}, {:+.4})  tolerance {:e}",
            diff.reference[0], diff.reference[1], diff.deviation[0], diff.deviation[1], diff.tolerance
        );
        if diff.within_tolerance() {
            println!("reference check: ok");
        } else {
            println!("reference check: DISCREPANCY beyond tolerance");
        }
    }
}

fn cmd_grover(
    hardware: Hardware,
    item: usize,
    init: InitOrder,
    out: Option<PathBuf>,
    steps: StepOverride,
    sample_every: Option<usize>,
) -> Result<(), Failure> {
    let sampling = match sample_every {
        None => Sampling::default(),
        Some(0) => Sampling::BoundariesOnly,
        Some(k) => Sampling::EverySubsteps(k),
    };
    let run = run_grover(hardware.into(), item, init, steps, sampling)?;
    if let Some(path) = &out {
        write_csv(path, &run.trajectory, 2)?;
    }
    print_grover_report(&run, steps);
    Ok(())
}

fn cmd_run(
    config: PathBuf,
    sequence: Option<String>,
    out: Option<PathBuf>,
    steps: Option<StepOverride>,
    compare_uniform: bool,
) -> Result<(), Failure> {
    let cfg = load_config(&config)?;
    let name = sequence
        .or_else(|| cfg.run.sequence.clone())
        .ok_or_else(|| Failure::Usage("no sequence given (use --sequence or [run] sequence)".into()))?;
    let seq = cfg.sequence(&name)?;
    let mut state = cfg.initial_state()?;
    let mut integrator = Integrator::new();
    integrator.control = cfg.run.control;
    let start = Instant::now();
    let traj = integrator.run_sequence(
        &mut state,
        seq,
        steps.unwrap_or(cfg.run.steps),
        cfg.run.sampling(),
    )?;
    let elapsed = start.elapsed();

    let out = out.or_else(|| cfg.run.output.clone());
    let mut report: Box<dyn Write> = match &out {
        Some(path) => {
            write_csv(path, &traj, cfg.num_qubits)?;
            Box::new(io::stdout())
        }
        None => {
            let stdout = io::stdout();
            write_trajectory_csv(stdout.lock(), &traj, cfg.num_qubits)
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
            Box::new(io::stderr())
        }
    };
    let q = state.qubit_values().q;
    let shown: Vec<String> = q
        .iter()
        .enumerate()
        .map(|(j, v)| format!("Q{} = {v:.6}", j + 1))
        .collect();
    let mut lines = vec![
        format!("sequence {name} ({} operations, {} substeps)", seq.len(), traj.total_substeps),
        format!("final {}", shown.join("  ")),
        format!("norm = {:.15}", state.norm_sqr().sqrt()),
        format!("wall time = {:.3} s", elapsed.as_secs_f64()),
    ];
    if compare_uniform {
        let uniform = StateVector::uniform(cfg.num_qubits)?;
        lines.push(format!("fidelity with uniform state = {:.12}", state.fidelity(&uniform)?));
    }
    for l in lines {
        writeln!(report, "{l}").map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_converge(
    hardware: Hardware,
    item: usize,
    init: InitOrder,
    tol: f64,
    max_multiplier: usize,
) -> Result<(), Failure> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Failure::Usage(format!("tolerance must be >= 0, got {tol}")));
    }
    let kind: HardwareKind = hardware.into();
    let profile = make_profile(kind);
    let program = grover_program(item, &profile, init)?;
    let initial = StateVector::basis(2, &[0, 0])?;
    println!(
        "hardware {}  item {}  init {}  tol {tol:e}",
        kind.label(),
        item,
        init.label()
    );
    match converge(&program.seq, &initial, tol, max_multiplier) {
        Ok(rep) => {
            for (k, q) in &rep.history {
                println!("multiplier {k:5}: Q1 = {:.9}  Q2 = {:.9}", q[0], q[1]);
            }
            println!(
                "converged at multiplier {} (shift to next doubling {:.3e})",
                rep.multiplier, rep.shift
            );
            println!("Q1 = {:.9}  Q2 = {:.9}", rep.q[0], rep.q[1]);
            if let Some(r) = published_reference(kind, init, item) {
                println!("reference (Q1, Q2) = ({:.3}, {:.3})", r[0], r[1]);
            }
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_selftest() -> Result<(), Failure> {
    let checks = run_selftest(&Integrator::new());
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {}: {}", c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn cmd_dump_profile(hardware: Hardware, out: Option<PathBuf>) -> Result<(), Failure> {
    let text = dump_profile(hardware.into());
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| io_failure(&path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Grover {
            hardware,
            item,
            init,
            out,
            steps,
            sample_every,
        } => cmd_grover(hardware, item, init, out, steps, sample_every),
        Command::Run {
            config,
            sequence,
            out,
            steps,
            compare_uniform,
        } => cmd_run(config, sequence, out, steps, compare_uniform),
        Command::Converge {
            hardware,
            item,
            init,
            tol,
            max_multiplier,
        } => cmd_converge(hardware, item, init, tol, max_multiplier),
        Command::Selftest => cmd_selftest(),
        Command::DumpProfile { hardware, out } => cmd_dump_profile(hardware, out),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
