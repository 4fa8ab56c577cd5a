mod support;

use std::collections::BTreeSet;

use support::{column, config_arg, read_csv, run};

const OFFSET_CUSPS: [[f64; 2]; 4] = [[-0.0023, 2.9069], [2.6492, -2.2190], [3.5464, -1.2968], [3.0855, 2.6935]];

#[test]
fn cusps_of_the_offset_manipulator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, stderr) = run(&["cusps", "--config", &config_arg("rpr2pr_offset"), "--out", out]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout.lines().count(), 5, "{stdout}");
    let (header, rows) = read_csv(&dir.path().join("rpr2pr_offset_cusps.csv"));
    assert_eq!(header, ["kind", "phi", "y", "u", "v", "delta", "residual"]);
    assert_eq!(rows.len(), 4);
    let (kp, ky) = (column(&header, "phi"), column(&header, "y"));
    for r in &rows {
        assert_eq!(r[column(&header, "kind")], "Cusp");
        let q = [r[kp].parse::<f64>().unwrap(), r[ky].parse::<f64>().unwrap()];
        let hit = OFFSET_CUSPS
            .iter()
            .any(|c| (c[0] - q[0]).abs() < 1e-3 && (c[1] - q[1]).abs() < 1e-3);
        assert!(hit, "{q:?}");
    }
}

#[test]
fn classify_the_node() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run(&[
        "classify",
        "--config",
        &config_arg("rpr2pr_exact"),
        "--point",
        "0,0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().next().unwrap(), "Corank2Hyperbolic, Δ = 13489 (normalized)");
    assert!(stdout.contains("quadratic part of J: 11 y^2 - 17 y phi - 300 phi^2"), "{stdout}");
}

#[test]
fn classify_polishes_onto_the_isolated_point() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run(&[
        "classify",
        "-c",
        &config_arg("rpr2pr_exact"),
        "--point",
        "3.1,-0.02",
        "--polish",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("Corank2Elliptic"), "{stdout}");
    assert!(stdout.contains("image (81, 144)"), "{stdout}");
}

#[test]
fn dkp_of_the_quarto() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&[
        "dkp",
        "--config",
        &config_arg("quarto"),
        "--target",
        "1,1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (header, rows) = read_csv(&dir.path().join("quarto_dkp.csv"));
    assert_eq!(header, ["index", "phi", "y", "residual", "multiple"]);
    let got: BTreeSet<_> = rows.iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    let want: BTreeSet<_> = [("-1", "-1"), ("-1", "1"), ("1", "-1"), ("1", "1")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn negative_coordinates_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(&[
        "dkp",
        "-c",
        &config_arg("complex_square"),
        "--target",
        "-5,-3",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.starts_with("2 solutions") || stdout.starts_with("4 solutions"), "{stdout}");
}

#[test]
fn regions_write_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cs.cfg");
    std::fs::write(&cfg, "family = complex_square\na = 1\nb = -1\nu_min = -20\nu_max = 20\nv_min = -20\nv_max = 20\nresolution = 12\n").unwrap();
    let (code, stdout, stderr) = run(&["regions", "-c", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("12x12 cells, solution counts {2, 4}"), "{stdout}");
    let (header, rows) = read_csv(&dir.path().join("cs_regions.csv"));
    assert_eq!(header, ["u", "v", "count"]);
    assert_eq!(rows.len(), 144);
    assert_eq!(rows[0][..2], ["-18.3333333333".to_string(), "-18.3333333333".to_string()]);
    assert!(dir.path().join("cs_regions.svg").exists());
}

#[test]
fn monodromy_around_the_deltoid() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(&[
        "monodromy",
        "-c",
        &config_arg("complex_square"),
        "--center",
        "0,0",
        "--radius",
        "14",
        "--samples",
        "360",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("2 solutions over the base point"), "{stdout}");
    assert!(stdout.contains("permutation (0 1)"), "{stdout}");
    let (header, rows) = read_csv(&dir.path().join("complex_square_lift.csv"));
    assert_eq!(header, ["lift", "sample", "u", "v", "phi", "y"]);
    assert_eq!(rows.len(), 2 * 361);
}

#[test]
fn monodromy_from_a_loop_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("u,v\n");
    for k in 0..=200 {
        let t = std::f64::consts::TAU * (k % 200) as f64 / 200.0;
        text += &format!("{},{}\n", 14.0 * t.cos(), 14.0 * t.sin());
    }
    let path = dir.path().join("loop.csv");
    std::fs::write(&path, text).unwrap();
    let (code, stdout, stderr) = run(&[
        "monodromy",
        "-c",
        &config_arg("complex_square"),
        "--loop",
        path.to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("permutation (0 1)"), "{stdout}");
}

#[test]
fn loop_through_the_fold_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(&[
        "monodromy",
        "-c",
        &config_arg("complex_square"),
        "--center",
        "0,0",
        "--radius",
        "6",
        "--samples",
        "360",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.starts_with("error: solver failure"), "{stderr}");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "family = rpr2pr_offset\nwidth = 3\n").unwrap();
    let unknown = dir.path().join("unknown.cfg");
    std::fs::write(&unknown, "family = swallowtail\n").unwrap();
    let missing = dir.path().join("missing.cfg");
    for args in [
        vec!["cusps", "-c", bad.to_str().unwrap(), "-o", out],
        vec!["cusps", "-c", unknown.to_str().unwrap(), "-o", out],
        vec!["cusps", "-c", missing.to_str().unwrap(), "-o", out],
        vec!["dkp", "-c", &config_arg("quarto"), "--target", "1", "-o", out],
        vec!["classify", "-c", &config_arg("rpr2pr_exact"), "--point", "1,1", "-o", out],
        vec!["monodromy", "-c", &config_arg("quarto"), "-o", out],
        vec!["frobnicate"],
        vec!["cusps"],
    ] {
        let (code, _, stderr) = run(&args);
        assert_eq!(code, 1, "{args:?}: {stderr}");
        assert!(!stderr.is_empty());
    }
}

#[test]
fn help_documents_the_csv_schemas() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for schema in [
        "kind,phi,y,u,v,delta,residual",
        "curve,kind,closed,index,phi,y,u,v,cusp",
        "index,phi,y,residual,multiple",
        "u,v,count",
        "lift,sample,u,v,phi,y",
    ] {
        assert!(stdout.contains(schema), "{schema}");
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_cuspforge");
    let dir = tempfile::tempdir().unwrap();
    let ok = std::process::Command::new(exe)
        .args(["cusps", "-c", &config_arg("quarto_unfolded"), "-o", dir.path().to_str().unwrap()])
        .env("CUSPFORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = std::process::Command::new(exe).args(["cusps", "-c", "/nonexistent.cfg"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
