// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use serde_json::Value;
use spraydirac::{run, Command};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn report(cmd: Command, name: &str) -> Value {
    run(cmd, &read(name), None).unwrap().to_value(false)
}

fn binary(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_spraydirac"))
        .args(args)
        .output()
        .unwrap()
}

/// Writes `text` to a fresh file under the target temp directory.
fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn exit_code(args: &[&str]) -> i32 {
    binary(args).status.code().unwrap()
}

#[test]
fn reports_are_deterministic() {
    for cmd in [
        Command::Analyze,
        Command::Verify,
        Command::Search,
        Command::Integrate,
        Command::DiracCheck,
    ] {
        let text = read("example4.sd");
        let a = run(cmd, &text, None).unwrap();
        let b = run(cmd, &text, None).unwrap();
        assert_eq!(a.text(false), b.text(false), "{}", cmd.name());
        assert_eq!(a.json(false), b.json(false), "{}", cmd.name());
    }
}

#[test]
fn seed_changes_sampling_but_not_header_layout() {
    let text = read("example1.sd");
    let a = run(Command::Integrate, &text, Some(1))
        .unwrap()
        .to_value(false);
    let b = run(Command::Integrate, &text, Some(2))
        .unwrap()
        .to_value(false);
    assert_eq!(a["seed"], 1);
    assert_eq!(b["seed"], 2);
    assert_eq!(a["input_sha256"], b["input_sha256"]);
    assert_ne!(a["runs"], b["runs"]);
}

#[test]
fn binary_text_and_json_agree() {
    let path = fixture("example1.sd");
    let p = path.to_str().unwrap();
    let text = binary(&["analyze", p]);
    let json = binary(&["analyze", p, "--json"]);
    assert!(text.status.success() && json.status.success());
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    let text = String::from_utf8(text.stdout).unwrap();
    for key in v.as_object().unwrap().keys() {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{key}:"))),
            "text report lacks {key}"
        );
    }
    assert!(v["timing_ms"].is_number());
    assert_eq!(
        v.as_object().unwrap().keys().next_back().unwrap(),
        "timing_ms"
    );
}

#[test]
fn out_flag_writes_report() {
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("analyze_out.txt");
    let _ = std::fs::remove_file(&out);
    let path = fixture("example1.sd");
    let o = binary(&[
        "analyze",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.starts_with("command: analyze\n"));
}

#[test]
fn analyze_flat_spray() {
    let v = report(Command::Analyze, "example1.sd");
    assert_eq!(v["spray"], "proven_zero");
    assert_eq!(v["flat"], "proven_zero");
    assert_eq!(v["frame"]["dely2"], "dy2 + 2*y2*dx2");
    assert_eq!(v["connection"]["N2_2"], "2*y2");
}

#[test]
fn analyze_zero_spray() {
    let v = run(
        Command::Analyze,
        "dim = 2\nspray G1 = 0\nspray G2 = 0\n",
        None,
    )
    .unwrap()
    .to_value(false);
    assert_eq!(v["spray"], "proven_zero");
    assert_eq!(v["flat"], "proven_zero");
    for (_, c) in v["connection"].as_object().unwrap() {
        assert_eq!(c, "0");
    }
    assert_eq!(v["frame"]["delta1"]["fiber"], serde_json::json!(["0", "0"]));
    assert_eq!(v["frame"]["dely1"], "dy1");
    assert_eq!(v["frame"]["dely2"], "dy2");
}

#[test]
fn analyze_constrained_spray() {
    let v = report(Command::Analyze, "example3.sd");
    assert_eq!(v["spray"], "proven_nonzero");
    assert_eq!(v["flat"], "proven_nonzero");
}

#[test]
fn verify_constrained_hamiltonian() {
    let v = report(Command::Verify, "example3.sd");
    let h = &v["hamiltonians"][0];
    assert_eq!(h["residual"], "proven_zero");
    assert_eq!(h["summary"], "constant_of_motion_only");
    assert_eq!(h["certificate"]["integrable"], "proven_nonzero");
    assert!(h["drift"]["max"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn verify_reports_nonzero_residual_with_witness() {
    let text = read("example3.sd").replace("H = y3^2 + 4*A*x3", "H = x1");
    let v = run(Command::Verify, &text, None).unwrap().to_value(false);
    let h = &v["hamiltonians"][0];
    assert_eq!(h["residual"], "proven_nonzero");
    assert_eq!(h["S_of_H"], "y1");
    let witnessed = h["components"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["verdict"] == "proven_nonzero" && c.get("witness").is_some());
    assert!(witnessed);
    let path = scratch("h_x1.sd", &text);
    assert_eq!(exit_code(&["verify", path.to_str().unwrap()]), 0);
}

#[test]
fn verify_bound_function_fixture() {
    let v = report(Command::Verify, "example2.sd");
    let h = &v["hamiltonians"][0];
    assert_eq!(h["residual"], "proven_zero");
    assert_eq!(h["S_of_H"], "0");
    assert!(h["drift"]["max"].as_f64().unwrap() <= 1e-8);
    let w = &v["hamiltonians"][1];
    assert_eq!(w["S_of_H"], "8*x1*x2*y1");
    assert_eq!(w["S_of_H_unbound"], "4*x2*y1*f'(x1)");
}

#[test]
fn search_recovers_kinetic_energy() {
    let v = report(Command::Search, "example4.sd");
    let known = &v["known"][0];
    assert_eq!(known["H"], "(1/2)*y1^2 + (1/2)*y2^2 + (1/2)*y3^2");
    assert!(known["projection_residual"].as_f64().unwrap() <= 1e-8);
    let hs: Vec<&str> = v["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["H"].as_str().unwrap())
        .collect();
    for a in 1..=3 {
        let target = format!("(1/2)*y{a}^2");
        assert!(hs.contains(&target.as_str()), "{target} not in {hs:?}");
    }
}

#[test]
fn integrate_matches_closed_form() {
    let v = report(Command::Integrate, "example1.sd");
    for r in v["runs"].as_array().unwrap() {
        let y20 = r["initial"]["y"][1].as_f64().unwrap();
        for row in r["trajectory"].as_array().unwrap() {
            let t = row[0].as_f64().unwrap();
            let y2 = row[4].as_f64().unwrap();
            let exact = y20 / (1.0 + 2.0 * y20 * t);
            assert!(
                (y2 - exact).abs() <= 1e-8 * (1.0 + exact.abs()),
                "t = {t}: {y2} vs {exact}"
            );
        }
    }
}

#[test]
fn dirac_check_on_product_structure() {
    let v = report(Command::DiracCheck, "example4.sd");
    assert_eq!(v["isotropic"], "20/20");
    assert_eq!(v["maximal"], "20/20");
    assert!(v["max_involutivity_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn dirac_check_kernel_jumps_on_singular_locus() {
    let v = report(Command::DiracCheck, "remark.sd");
    let probes = v["probes"].as_array().unwrap();
    assert_eq!(probes[0]["kernel_dim"], 1);
    assert_eq!(probes[1]["kernel_dim"], 3);
}

#[test]
fn exit_codes() {
    let bad_syntax = scratch("bad_syntax.sd", "dim = 2\nspray G1 = y1 +\nspray G2 = 0\n");
    assert_eq!(exit_code(&["analyze", bad_syntax.to_str().unwrap()]), 1);

    let missing = fixture("does_not_exist.sd");
    assert_eq!(exit_code(&["analyze", missing.to_str().unwrap()]), 1);

    let wrong_ann = read("example3.sd")
        .replace("ann A1 = (A/y3, 0, A*y1/y3^2; 1, 0, 0)", "ann A1 = dely1")
        .replace(
            "ann A2 = (0, A/y3, -A*y2/y3^2; 0, 1, -y2/y3)",
            "ann A2 = dely2",
        );
    let wrong_ann = scratch("wrong_ann.sd", &wrong_ann);
    assert_eq!(exit_code(&["verify", wrong_ann.to_str().unwrap()]), 2);

    let outside = read("example3.sd").replace("dist X3 = S", "dist X3 = vertical1");
    let outside = scratch("outside.sd", &outside);
    assert_eq!(exit_code(&["verify", outside.to_str().unwrap()]), 2);

    let path = fixture("example1_v2.sd");
    assert_eq!(exit_code(&["verify", path.to_str().unwrap()]), 0);
}

#[test]
fn parse_error_names_line() {
    let path = scratch("bad_line.sd", "dim = 1\nspray G1 = x1\nH = y1 *\n");
    let o = binary(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains('3'), "{err}");
}
