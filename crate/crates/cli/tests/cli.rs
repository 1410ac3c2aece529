use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polytree::table::{CsvTable, SCHEMA_LINE};

fn polytree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polytree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn table(out: &Output) -> CsvTable {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with(SCHEMA_LINE));
    CsvTable::parse(&text).unwrap()
}

fn floats(t: &CsvTable, col: &str) -> Vec<f64> {
    t.column(col)
        .unwrap_or_else(|| panic!("column {col}"))
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn spectral_at_one() {
    let t = table(&polytree(&["spectral", "--q", "2", "--lambda", "1"]));
    assert!((floats(&t, "F_re")[0] - 0.5).abs() < 1e-15);
    assert!((floats(&t, "Fc_re")[0] - 1.0).abs() < 1e-15);
}

#[test]
fn spectral_residuals_are_small() {
    let t = table(&polytree(&["spectral", "--q", "2", "--lambda", "1,1"]));
    for col in ["res_quadratic", "res_product", "res_coefficient_sum", "res_s_squared"] {
        assert!(floats(&t, col)[0] < 1e-12, "{col}");
    }
}

#[test]
fn in_spectrum_exits_with_two() {
    let out = polytree(&["spectral", "--q", "2", "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = polytree(&["spectral", "--q", "2", "--lambda", "-0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_input_exits_with_three() {
    let out = polytree(&[
        "dirichlet", "--lambda", "2", "--g", "/nonexistent/g.txt", "--end", "0|1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("out.csv");
    let out = polytree(&["spectral", "--lambda", "2", "--output", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dirichlet_errors_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "# g\n0 1 0\n1.0 -2 0.5\n2 0.25 0\n");
    let t = table(&polytree(&[
        "dirichlet", "--q", "2", "--lambda", "2", "--g", &g, "--end", "0|1", "--depths", "10:60:5",
    ]));
    let errs = floats(&t, "abs_error");
    assert_eq!(errs.len(), 11);
    assert!(errs.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-13));
    assert!(errs[errs.len() - 1] < 1e-10);
}

#[test]
fn riquier_rows_per_component() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "0 1 0\n");
    let b = write(dir.path(), "b.txt", "0 2 0\n1 -1 0\n");
    let c = write(dir.path(), "c.txt", "2.1 3 0\n");
    let t = table(&polytree(&[
        "riquier", "--n", "3", "--lambda", "2", "--g0", &a, "--g1", &b, "--g2", &c, "--end",
        "0|1", "--depths", "20:40:10",
    ]));
    assert_eq!(t.column("k").unwrap(), vec!["0", "0", "0", "1", "1", "1", "2", "2", "2"]);
    let targets = floats(&t, "target_re");
    assert_eq!(&targets[..], &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 0.0, 0.0, 0.0]);
    let out = polytree(&["riquier", "--n", "2", "--lambda", "2", "--g0", &a, "--end", "0|1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fatou_point_mass_vanishes_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "nu.txt", "pm 1|0 1 0\nac 0 1 0\n");
    let t = table(&polytree(&[
        "fatou", "--n", "1", "--lambda", "1,1", "--g", &g, "--end", "0|1", "--depths", "5:45:10",
    ]));
    let errs = floats(&t, "abs_error");
    assert!(errs[errs.len() - 1] < 1e-8, "{errs:?}");
}

#[test]
fn maximal_bound_holds() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "0 1 0\n1.1 -3 1\n");
    let t = table(&polytree(&[
        "maximal", "--q", "2", "--lambda", "1.5", "--g", &g, "--end", "0|1", "--end", "1.1|0",
        "--a", "1",
    ]));
    assert_eq!(t.column("holds").unwrap(), vec!["true", "true"]);
}

#[test]
fn oracle_matches_closed_form() {
    let t = table(&polytree(&["oracle", "--q", "2", "--lambda", "2", "--d", "1", "--N", "2000"]));
    assert!(floats(&t, "abs_diff")[0] < 1e-8);
    let t = table(&polytree(&["oracle", "--q", "3", "--lambda", "1.5", "--d", "2", "--N", "150", "--exact"]));
    let diffs = floats(&t, "abs_diff");
    let bounds = floats(&t, "tail_bound");
    assert!(diffs.iter().zip(&bounds).all(|(d, b)| d <= b));
    let out = polytree(&["oracle", "--lambda", "2", "--N", "500", "--exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spherical_profile_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let out = polytree(&[
        "spherical", "--lambda", "-1.2,0.3", "--n", "2", "--max-radius", "30", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let t = CsvTable::parse(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 31);
    let ratios = floats(&CsvTable { header: t.header.clone(), rows: t.rows[1..].to_vec() }, "ratio_abs");
    assert!((ratios[ratios.len() - 1] - 1.0).abs() < 0.2);
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "0 1 0\n2 0 1\n");
    let args = [
        "dirichlet", "--q", "2", "--lambda", "0.3,1.4", "--g", &g, "--end", "2|1", "--a", "2",
        "--depths", "5:25:5",
    ];
    assert_eq!(polytree(&args).stdout, polytree(&args).stdout);
}
