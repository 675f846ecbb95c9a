use std::path::Path;
use std::process::{Command, Output};

use fieldroad::entropy::{estimate_decay_rate, EntropyRecord, EntropySeries};
use fieldroad::io::{series_to_csv, write_series};

const SMALL: &str = "\
testcase = 1
omega_min = -8
omega_max = 8
height = 4
nx = 16
ny = 4
field_box = -1, 1, 1, 3, 10
snapshot_times = 0, 1
";

fn fieldroad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldroad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn steady_prints_reference_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "testcase = 1\n");
    let o = fieldroad(&["steady", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("v_inf=1.25 u_inf=6.25 mass=2500.0 "), "{text}");
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", &format!("{SMALL}snapshot_format = csv\n"));
    let out = dir.path().join("out");
    let o = fieldroad(&["run", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "report.txt", "snapshot_t0.csv", "snapshot_t0_road.csv", "snapshot_t1.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let last_ratio: f64 = series.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(last_ratio <= 1e-5);
    assert!(stdout(&o).contains("stop=entropy_ratio"));
}

#[test]
fn runs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = fieldroad(&["run", &cfg, "--output-dir", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read(out.join("series.csv")).unwrap(),
            std::fs::read(out.join("snapshot_t1.vtk")).unwrap(),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn rate_matches_library_estimate() {
    let mut series = EntropySeries::default();
    for n in 0..=3000 {
        series.push(EntropyRecord {
            step: n,
            time: n as f64 * 0.1,
            entropy: 2.0 * 1.005f64.powi(-(n as i32)),
            dissipation: 0.0,
            mass: 1.0,
            min_entry: 1.0,
        });
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    write_series(&series, &path).unwrap();
    let o = fieldroad(&["rate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let reread = fieldroad::io::parse_series(&series_to_csv(&series)).unwrap();
    let expected = estimate_decay_rate(&reread, 0.1).unwrap();
    assert_eq!(stdout(&o).trim(), fieldroad::cli::format_rate(&expected));
    assert!(stdout(&o).contains(&format!("lambda_num={:?}", expected.lambda_num)));
}

#[test]
fn emitted_mesh_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", SMALL);
    let mesh = dir.path().join("m.mesh");
    let o = fieldroad(&["mesh", &cfg, "-o", mesh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = fieldroad(&["verify-mesh", mesh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("admissible: 64 field cells"));
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad_cfg = write(d, "bad.cfg", "d = -1\n");
    let unknown_key = write(d, "unknown.cfg", "colour = red\n");
    let no_sweep = write(d, "nosweep.cfg", SMALL);
    let skewed = write(
        d,
        "skew.mesh",
        "fieldroad-mesh 1\ngeometry 0 1 1\nnodes 4\n0 0 0\n1 1 0\n2 0 1\n3 1 1\ncells 1\n\
         0 4 0 1 3 2 0.6 0.5\nroadcells 1\n0 0 1 0.5\n",
    );
    let garbage = write(d, "garbage.csv", "not a series\n");
    let flat = {
        let mut s = EntropySeries::default();
        for n in 0..50 {
            s.push(EntropyRecord {
                step: n,
                time: n as f64,
                entropy: 1.0,
                dissipation: 0.0,
                mass: 1.0,
                min_entry: 1.0,
            });
        }
        write(d, "flat.csv", &series_to_csv(&s))
    };
    let missing = d.join("missing.cfg");
    let missing = missing.to_str().unwrap();
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec![], 2),
        (vec!["bogus"], 2),
        (vec!["run"], 2),
        (vec!["rate", &flat, "--dt", "abc"], 2),
        (vec!["--help"], 0),
        (vec!["--version"], 0),
        (vec!["run", &bad_cfg], 1),
        (vec!["run", &unknown_key], 1),
        (vec!["run", missing], 1),
        (vec!["steady", &bad_cfg], 1),
        (vec!["sweep", &no_sweep], 1),
        (vec!["verify-mesh", &skewed], 1),
        (vec!["verify-mesh", missing], 1),
        (vec!["rate", &garbage], 1),
        (vec!["rate", &flat], 1),
        (vec!["rate", &flat, "--dt=-1"], 1),
    ];
    for (args, code) in cases {
        let o = fieldroad(&args);
        assert_eq!(o.status.code(), Some(code), "fieldroad {args:?}");
    }
}

#[test]
fn sweep_writes_rate_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sw.cfg",
        &format!("{SMALL}sweep_param = D\nsweep_values = 0.5, 2\n"),
    );
    let out = dir.path().join("sw");
    let o = fieldroad(&["sweep", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,lambda_num,fit_residual");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.5,"));
}
