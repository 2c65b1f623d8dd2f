//! End-to-end tests of the command-line binary: exit codes, report
//! contents, failure messages, and byte-level determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahsolve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is a JSON report ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn sphere_family_verify_passes() {
    let out = run(&["family", "sphere", "--kappa", "3", "--verify"]);
    assert!(out.status.success(), "verified sphere family exits 0");
    let v = json(&out);
    let nu = v["values"]["nu"].as_f64().expect("nu value present");
    assert!(
        (nu - 17.47910306749686).abs() < 1e-9,
        "vortex parameter at κ=3, got {nu}"
    );
    assert_eq!(v["passed"], true, "all checks pass");
}

#[test]
fn constant_torus_solve_reports_the_closed_form() {
    let out = run(&["solve", "--torus", "--kappa", "-2", "--B-norm2", "4"]);
    assert!(out.status.success(), "solve exits 0");
    let v = json(&out);
    let mean = v["values"]["phi_mean"].as_f64().expect("phi_mean present");
    let dev = v["values"]["phi_max_dev"].as_f64().expect("phi_max_dev present");
    assert!(
        (mean + 2.0f64.ln() / 3.0).abs() < 1e-10,
        "constant solution −(log 2)/3, got {mean}"
    );
    assert!(dev < 1e-10, "solution is spatially constant, deviation {dev}");
}

#[test]
fn perturbed_structure_fails_verification_loudly() {
    let n = 32usize;
    let side = 2.0 * std::f64::consts::PI;
    let c0 = (8.0f64 / 16.0).sqrt();
    let mut re = Vec::with_capacity(n * n);
    for i in 0..n {
        let x = side * i as f64 / n as f64;
        for _ in 0..n {
            re.push(c0 + 0.05 * x.cos());
        }
    }
    let file = serde_json::json!({
        "surface": { "kind": "torus", "side": side, "n": n },
        "b": { "re": re, "im": 0.0 }
    });
    let path = std::env::temp_dir().join("ahsolve_cli_perturbed_structure.json");
    std::fs::write(&path, file.to_string()).expect("temp structure file");

    let out = run(&["verify", "--structure", path.to_str().expect("utf8 path")]);
    assert!(
        !out.status.success(),
        "a non-divergence-free torsion field must fail verification"
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("div_b"),
        "the failing check is named on stderr: {stderr}"
    );
    let v = json(&out);
    assert_eq!(v["passed"], false, "report records the failure");
    std::fs::remove_file(&path).ok();
}

#[test]
fn exact_structure_file_verifies() {
    let file = serde_json::json!({
        "surface": { "kind": "torus", "side": 2.0 * std::f64::consts::PI, "n": 32 },
        "b": { "re": (8.0f64 / 16.0).sqrt(), "im": 0.0 }
    });
    let path = std::env::temp_dir().join("ahsolve_cli_exact_structure.json");
    std::fs::write(&path, file.to_string()).expect("temp structure file");
    let out = run(&["verify", "--structure", path.to_str().expect("utf8 path")]);
    assert!(
        out.status.success(),
        "constant cubic on the flat torus verifies: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::remove_file(&path).ok();
}

#[test]
fn reports_are_deterministic_outside_timing() {
    let strip = |out: &Output| {
        let mut v = json(out);
        v.as_object_mut()
            .expect("report is an object")
            .remove("timing")
            .expect("timing field present");
        serde_json::to_string(&v).expect("serialize")
    };
    let args = ["ckmc", "--B-norm2", "0.2", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success() && b.status.success(), "ckmc solves exit 0");
    assert_eq!(
        strip(&a),
        strip(&b),
        "same command and seed give identical reports outside timing"
    );
    assert_eq!(json(&a)["seed"], 7, "seed is echoed in the report");
}

#[test]
fn cone_subcommand_passes_its_checks() {
    let out = run(&["cone", "--B-norm2", "8", "--grid", "32"]);
    assert!(
        out.status.success(),
        "cone identity suite exits 0: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["passed"], true, "all cone checks pass");
}

#[test]
fn bad_arguments_exit_nonzero() {
    let out = run(&["solve", "--kappa", "-2"]);
    assert!(
        !out.status.success(),
        "solve without a chart selection must fail"
    );
    let out = run(&["family", "sphere", "--kappa", "not-a-number"]);
    assert!(!out.status.success(), "non-numeric κ is rejected");
}
