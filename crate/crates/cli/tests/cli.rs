use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Run {
    let mut argv = vec!["fibersim".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fibersim_cli::main_with(&argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn discrete_topology_has_eight_opens() {
    let r = run(&["topology", "validate", p(&data("discrete3.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["command"], "topology validate");
    assert_eq!(v["result"]["opens"], 8);
    assert_eq!(v["result"]["summary"], "3 points, 8 opens, valid");
    assert_eq!(v["manifest_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_topology_exits_with_violation() {
    let r = run(&["topology", "validate", p(&data("not_a_topology.json"))]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["result"]["valid"], false);
}

#[test]
fn malformed_json_reports_location_and_schema() {
    let r = run(&["topology", "validate", p(&data("malformed.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    assert!(r.stderr.contains("expected {\"points\""), "{}", r.stderr);
}

#[test]
fn missing_file_and_bad_usage_exit_two() {
    assert_eq!(run(&["topology", "validate", "/nonexistent/top.json"]).code, 2);
    assert_eq!(run(&["topology", "frobnicate"]).code, 2);
    assert_eq!(run(&["measure", "negativity"]).code, 2);
}

#[test]
fn help_exits_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("polymer"));
}

#[test]
fn bell_negativity_is_one_half() {
    let r = run(&["measure", "negativity", "--state", p(&data("bell.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert!((v["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["result"]["exactness"], "closed-form");
}

#[test]
fn mutual_information_in_bits() {
    let r = run(&["measure", "mutual-information", "--bits", "--state", p(&data("bell.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert!((v["result"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(v["result"]["metadata"]["log_base"], "2");
}

#[test]
fn unnormalized_product_has_zero_negativity() {
    let r = run(&["measure", "negativity", "--state", p(&data("product.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.json()["result"]["value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn csv_format_prints_scalars() {
    let r = run(&["--format", "csv", "measure", "negativity", "--state", p(&data("bell.json"))]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("key,value\n"));
    assert!(r.stdout.contains("value,0.5"));
}

#[test]
fn channel_checks() {
    let good = run(&["channel", "check", p(&data("dephasing.json"))]);
    assert_eq!(good.code, 0, "{}", good.stderr);
    assert_eq!(good.json()["result"]["completely_positive"], true);
    let leaky = run(&["channel", "check", p(&data("leaky.json"))]);
    assert_eq!(leaky.code, 1);
    assert_eq!(leaky.json()["result"]["trace_preserving"], false);
}

#[test]
fn commutant_of_pauli_z_is_diagonal() {
    let r = run(&["algebra", "commutant", p(&data("pauli_z.json"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["result"]["generated_span_dim"], 2);
    assert_eq!(v["result"]["commutant_span_dim"], 2);
    assert_eq!(v["result"]["von_neumann"], true);
}

#[test]
fn orbit_grows_with_depth() {
    let shallow = run(&["algebra", "orbit", p(&data("hadamard_t.json")), "--state", p(&data("ket0.json")), "--depth", "1"]);
    let deep = run(&["algebra", "orbit", p(&data("hadamard_t.json")), "--state", p(&data("ket0.json")), "--depth", "4"]);
    assert_eq!(shallow.code, 0, "{}", shallow.stderr);
    let a = shallow.json()["result"]["orbit_size"].as_u64().unwrap();
    let b = deep.json()["result"]["orbit_size"].as_u64().unwrap();
    assert!(a >= 2 && b > a, "{a} {b}");
}

#[test]
fn cnot_is_not_semiclassical() {
    let r = run(&["classify", "--op", p(&data("cnot.json")), "--mixed", "20", "--pure", "5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["result"]["member"], false);
    assert_eq!(v["result"]["verdict"], "non-member");
}

#[test]
fn fibration_bundle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fibersim::fibration::write_bundle(dir.path(), &fibersim::fibration::FibrationSpec::qubit_chain(3)).unwrap();
    let r = run(&["fibration", "assemble", p(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["result"]["assembled"], true);
    assert!(v["result"]["max_isotony_residual"].as_f64().unwrap() <= 1e-12);

    let f = run(&["fibration", "fiber", p(dir.path()), "--open", "1,2", "--depth", "2"]);
    assert_eq!(f.code, 0, "{}", f.stderr);
    assert!(f.json()["result"]["size"].as_u64().unwrap() >= 1);
}

#[test]
fn alpha_grid_is_two_way() {
    let r = run(&["alpha", "check", "--grid", p(&data("alpha_grid.json")), "--functional", "table"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json()["result"]["verdict"], "two_way");
}

#[test]
fn polymer_anneal_writes_outputs() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&["polymer", "anneal", p(&data("chain4.toml")), "--out", p(out.path())]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert!(v["result"]["ground_space_fidelity"].as_f64().unwrap() > 0.5);
    for f in ["manifest.json", "result.json", "summary.json", "trajectory.csv", "plot_trajectory.py"] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,energy,ee_cut_1"));
    assert_eq!(csv.lines().count(), 202);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["manifest_hash"], v["manifest_hash"]);
}

#[test]
fn polymer_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let r = run(&["--jobs", "2", "polymer", "anneal", p(&data("chain4.toml")), p(&data("chain4.toml")), "--out", p(d.path())]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    for f in ["result.json", "manifest.json", "chain4/trajectory.csv", "chain4/summary.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        if f == "manifest.json" {
            let strip = |bytes: &[u8]| {
                let mut v: Value = serde_json::from_slice(bytes).unwrap();
                v["output_dir"] = Value::Null;
                v
            };
            assert_eq!(strip(&x), strip(&y));
        } else {
            assert_eq!(x, y, "{f} differs");
        }
    }
}

#[test]
fn polymer_dump_states() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("short.json");
    let mut v: Value = serde_json::to_value(
        toml::from_str::<toml::Value>(&std::fs::read_to_string(data("chain4.toml")).unwrap()).unwrap(),
    )
    .unwrap();
    v["run"]["steps"] = 4.into();
    std::fs::write(&cfg, serde_json::to_vec(&v).unwrap()).unwrap();
    let r = run(&["polymer", "evolve", p(&cfg), "--dump-states", "--out", p(&out.path().join("o"))]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(out.path().join("o/states/step_00004.json").exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fibersim");
    let ok = Command::new(bin).args(["topology", "validate", p(&data("discrete3.json"))]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["topology", "validate", p(&data("malformed.json"))]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let viol = Command::new(bin).args(["topology", "validate", p(&data("not_a_topology.json"))]).output().unwrap();
    assert_eq!(viol.status.code(), Some(1));
}
