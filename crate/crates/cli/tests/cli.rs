use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grainfront"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("case.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const CIRCLE: &str = r#"
[generator]
domain = [1.0, 1.0]
h = 0.05
preset = { kind = "circle", r0 = 0.3, rho_inside = 0.0, rho_outside = 2.0 }

[boundary]
mobility = 1.0
gamma = 1.0
delta = 1.0
tau = 1.0

[remesh]
h = 0.05

[schedule]
dt = 1e-4
segments = [{ duration = 0.002 }]

[output]
stats_every = 0.001
"#;

#[test]
fn generate_run_validate_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CIRCLE);
    let out = dir.path().join("out");
    let out_s = out.display().to_string();

    let o = run(&["generate", "--config", &cfg, "--out", &out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("initial.vtk").exists());
    assert!(out.join("grains.csv").exists());

    let o = run(&["run", "--config", &cfg, "--out", &out_s, "--snapshot-every", "0.001"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("max L2 error"), "{stdout}");
    let stats = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    assert_eq!(
        stats.lines().next().unwrap(),
        "t,n_grains,mean_size_surface_weighted,rex_fraction,mean_rho_surface_weighted,Pc"
    );
    assert_eq!(stats.lines().count(), 4);
    for f in ["final.vtk", "events.csv", "oracle_compare.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let fin = out.join("final.vtk").display().to_string();
    let o = run(&["validate", &fin]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok:"));

    let o = run(&["stats", &fin, "--histogram-bin", "0.05"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("radius_lo,radius_hi,area_fraction"));
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(1).unwrap(), "2");

    let o = run(&["oracle", "--config", &cfg, "--out", &out_s]);
    assert!(o.status.success());
    assert!(out.join("oracle.csv").exists());
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[remesh]\nh = 0.1\nnonsense = true\n");
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("case.toml:4:"), "{err}");

    let o = run(&["run", "--config", &dir.path().join("missing.toml").display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn broken_snapshot_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CIRCLE);
    let out = dir.path().join("out");
    assert!(run(&["generate", "--config", &cfg, "--out", &out.display().to_string()]).status.success());
    // flip the orientation of the first triangle
    let path = out.join("initial.vtk");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let cells = lines.iter().position(|l| l.starts_with("CELLS")).unwrap();
    let ids: Vec<&str> = lines[cells + 1].split_whitespace().collect();
    lines[cells + 1] = format!("3 {} {} {}", ids[1], ids[3], ids[2]);
    let broken = dir.path().join("broken.vtk");
    std::fs::write(&broken, lines.join("\n") + "\n").unwrap();
    let o = run(&["validate", &broken.display().to_string()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_needs_a_reference_case() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &CIRCLE.replace(
            r#"preset = { kind = "circle", r0 = 0.3, rho_inside = 0.0, rho_outside = 2.0 }"#,
            r#"preset = { kind = "six-grain" }"#,
        ),
    );
    let o = run(&["oracle", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}
