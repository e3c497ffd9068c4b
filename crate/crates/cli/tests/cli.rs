use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spinsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn spinsim_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsim"))
        .args(args)
        .env("SPINSIM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Q1 and Q2 from the last CSV row.
fn final_q(csv: &str) -> (f64, f64) {
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    (last[6].parse().unwrap(), last[10].parse().unwrap())
}

const WH_CONFIG: &str = "\
# Walsh-Hadamard on both qubits
[eo X1]
tau_over_2pi = 0.25
h0 x 1 = 1

[eo X2]
tau_over_2pi = 0.25
h0 x 2 = 1

[eo Y1bar]
tau_over_2pi = 0.25
h0 y 1 = -1

[eo Y2bar]
tau_over_2pi = 0.25
h0 y 2 = -1

[sequence wh]
eos = Y2bar, X2, X2, Y1bar, X1, X1

[sequence empty]

[run]
state = 00
sequence = wh
";

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ideal_grover_finds_item_three() {
    let o = spinsim(&["grover", "--hardware", "ideal", "--item", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Q1 = 1.000000  Q2 = 1.000000"), "{out}");
    assert!(out.contains("reference check: ok"));
}

#[test]
fn nmr_grover_both_orders_match_reference() {
    for init in ["12", "21"] {
        let o = spinsim(&["grover", "--hardware", "nmr", "--item", "0", "--init", init]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("reference check: ok"), "init {init}: {}", stdout(&o));
    }
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let path = dir.path().join(format!("t{i}.csv"));
        let o = spinsim_env(
            &["grover", "--hardware", "nmr", "--item", "2", "--out", path.to_str().unwrap()],
            threads,
        );
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn walsh_hadamard_config_gives_uniform_state() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "wh.cfg", WH_CONFIG);
    let o = spinsim(&["run", &cfg, "--compare-uniform"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stderr(&o);
    assert!(report.contains("fidelity with uniform state = 1.000000000000"), "{report}");
    let (q1, q2) = final_q(&stdout(&o));
    assert!((q1 - 0.5).abs() < 1e-12 && (q2 - 0.5).abs() < 1e-12);
}

#[test]
fn empty_sequence_writes_initial_row_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "wh.cfg", WH_CONFIG);
    let o = spinsim(&["run", &cfg, "--sequence", "empty"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2, "{out}");
    assert!(out.lines().nth(1).unwrap().starts_with("0,0.00000000000e0,1.00000000000e0"));
}

#[test]
fn unknown_operation_is_named() {
    let dir = TempDir::new().unwrap();
    let text = WH_CONFIG.replace("eos = Y2bar, X2", "eos = Y2bar, Z9");
    let cfg = write(&dir, "bad.cfg", &text);
    let o = spinsim(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Z9"), "{}", stderr(&o));
}

#[test]
fn parse_errors_report_the_line() {
    let dir = TempDir::new().unwrap();
    let text = WH_CONFIG.replace("h0 x 2 = 1", "h0 x 2 = one");
    let cfg = write(&dir, "bad.cfg", &text);
    let o = spinsim(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));
}

#[test]
fn ideal_converges_at_first_multiplier() {
    let o = spinsim(&["converge", "--hardware", "ideal", "--item", "1", "--tol", "1e-9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("converged at multiplier 1 "), "{}", stdout(&o));
}

#[test]
fn nmr_converges_to_micro_tolerance() {
    let o = spinsim(&["converge", "--hardware", "nmr", "--item", "2", "--tol", "1e-6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("converged at multiplier"));
}

#[test]
fn zero_tolerance_fails_the_check() {
    let o = spinsim(&[
        "converge", "--hardware", "ideal", "--item", "0", "--tol", "0", "--max-multiplier", "8",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn selftest_passes() {
    let o = spinsim(&["selftest"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 5);
}

#[test]
fn dumped_profile_reproduces_preset() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("nmr.cfg");
    let o = spinsim(&["dump-profile", "nmr", "--out", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for item in 0..4 {
        for init in ["12", "21"] {
            let name = format!("grover{item}_{init}");
            let from_cfg = spinsim(&["run", cfg.to_str().unwrap(), "--sequence", &name]);
            assert!(from_cfg.status.success(), "{}", stderr(&from_cfg));
            let preset_csv = dir.path().join(format!("{name}.csv"));
            let item_s = item.to_string();
            let preset = spinsim(&[
                "grover", "--hardware", "nmr", "--item", &item_s, "--init", init, "--out",
                preset_csv.to_str().unwrap(),
            ]);
            assert!(preset.status.success());
            let a = final_q(&stdout(&from_cfg));
            let b = final_q(&std::fs::read_to_string(&preset_csv).unwrap());
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "{name}: {a:?} {b:?}");
        }
    }
}

#[test]
fn unwritable_output_exits_three() {
    let target = Path::new("/nonexistent-dir/out.csv");
    let o = spinsim(&["grover", "--hardware", "ideal", "--item", "0", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_one() {
    for args in [
        &["grover", "--hardware", "foo"][..],
        &["grover", "--hardware", "ideal", "--item", "4"],
        &["grover", "--hardware", "ideal", "--init", "13"],
        &["grover", "--hardware", "ideal", "--steps", "0"],
        &["frobnicate"],
    ] {
        let o = spinsim(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn thread_setting_must_be_numeric() {
    let o = spinsim_env(&["selftest"], "many");
    assert_eq!(o.status.code(), Some(1));
}
