use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn heatopt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatopt"))
        .args(args)
        .env("HEATOPT_OUTPUT_DIR", out)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap();
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn all_insulator_cloak_reproduces_the_bare_plate() {
    let out = dir("insulator");
    let o = heatopt(
        &[
            "solve",
            "--set",
            "problem=\"cloak\"",
            "--set",
            "initial.shape=\"constant\"",
            "--set",
            "initial.value=-1.0",
            "--set",
            "solution.tangential=6",
            "--set",
            "solution.radial=6",
            "--set",
            "grid=11",
        ],
        &out,
    );
    let text = stdout(&o);
    assert!((value(&text, "J_main") - 1.0).abs() <= 1e-6, "{text}");
    assert!(out.join("field.vtk").exists() && out.join("field.csv").exists());
}

#[test]
fn plate_solve_is_linear() {
    let out = dir("plate");
    stdout(&heatopt(&["solve", "--set", "problem=\"plate\"", "--set", "grid=11"], &out));
    let rows = read_csv(&out.join("field.csv"));
    assert!(!rows.is_empty());
    let (x0, t0, g0) = (rows[0][0], rows[0][2], rows[0][3]);
    for r in &rows {
        assert!((r[2] - (t0 + g0 * (r[0] - x0))).abs() <= 1e-8);
        assert!((r[3] - g0).abs() <= 1e-6 && r[4].abs() <= 1e-6);
    }
}

#[test]
fn config_round_trips() {
    let out = dir("config");
    let text = stdout(&heatopt(&["config", "--set", "problem=\"camouflage\""], &out));
    let file = out.with_extension("toml");
    std::fs::create_dir_all(file.parent().unwrap()).unwrap();
    std::fs::write(&file, &text).unwrap();
    let again = stdout(&heatopt(&["config", "--config", file.to_str().unwrap()], &out));
    assert_eq!(text, again);
    assert!(text.contains("problem = \"camouflage\""));
}

#[test]
fn invalid_input_exits_with_one() {
    let out = dir("invalid");
    for args in [
        &["solve", "--set", "smoothing.delta=-1.0"][..],
        &["solve", "--set", "unknown.key=3"],
        &["solve", "--config", "/nonexistent/heatopt.toml"],
        &["sweep", "sideways"],
    ] {
        let o = heatopt(args, &out);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
}

#[test]
fn unwritable_output_exits_with_two() {
    let blocker = dir("blocker");
    std::fs::create_dir_all(blocker.parent().unwrap()).unwrap();
    std::fs::write(&blocker, "not a directory").unwrap();
    let o = heatopt(&["solve", "--set", "problem=\"plate\""], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn optimization_is_deterministic() {
    let args = [
        "optimize",
        "--set",
        "problem=\"cloak\"",
        "--set",
        "solution.tangential=3",
        "--set",
        "solution.radial=4",
        "--set",
        "smoothing.delta=0.004",
        "--set",
        "optimizer.max_function_evaluations=12",
        "--set",
        "grid=11",
    ];
    let (a, b) = (dir("determinism_a"), dir("determinism_b"));
    stdout(&heatopt(&args, &a));
    stdout(&heatopt(&args, &b));
    for name in ["convergence.csv", "coefficients.csv", "interface.csv", "field.vtk"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert!(x == y, "{name} differs between identical runs");
    }
    let hist = read_csv(&a.join("convergence.csv"));
    assert!(hist.len() >= 2);
}
