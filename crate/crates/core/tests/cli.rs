use std::path::Path;
use std::process::{Command, Output};

fn harvester(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_harvester"));
    cmd.args(args).current_dir(dir).env_remove("HARVESTER_THREADS");
    if let Some(t) = threads {
        cmd.env("HARVESTER_THREADS", t);
    }
    cmd.output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn data_lines(s: &str) -> Vec<&str> {
    s.lines().filter(|l| !l.starts_with('#')).collect()
}

const DEFAULT_CFG: &str = "# default set\nm = 1\nJ = 1\nS = 0.3\nE = 1\nG = 1\nL = 1\nk1 = 0.5\nk2 = 2\nCp = 1\nR = 1\nCD = -0.1\nCI = 0.1\n";

#[test]
fn validate_prints_constants() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("default.cfg"), DEFAULT_CFG).unwrap();
    let out = harvester(&["validate", "--config", "default.cfg"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    assert!(s.contains("\nD,0.91,0\n"), "{s}");
    assert!(s.contains("\na3,0.9766981117095219,0\n"));
    assert!(text(&out.stderr).starts_with("validate:"));
}

#[test]
fn solve_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = harvester(&["solve", "--region", "0.3,60,-0.5,8", "--out", "a.csv"], dir.path(), None);
    let b = harvester(&["solve", "--region", "0.3,60,-0.5,8", "--out", "b.csv"], dir.path(), Some("1"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let fa = std::fs::read(dir.path().join("a.csv")).unwrap();
    let fb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(fa, fb);
    let s = text(&fa);
    assert!(s.starts_with("# harvester "));
    assert!(s.contains("# parameters: m=1 J=1 S=0.3 E=1 G=1 L=1 k1=0.5 k2=2 Cp=1 R=1 CD=-0.1 CI=0.1\n"));
    let rows = data_lines(&s);
    assert_eq!(rows[0], "method,branch,n,re,im,residual,admissible,multiplicity");
    assert!(rows[1..].iter().all(|r| r.starts_with("determinant,")));
    // Mirror completed: as many roots left of the axis as right of it.
    let left = rows[1..].iter().filter(|r| r.split(',').nth(3).unwrap().starts_with('-')).count();
    assert_eq!(2 * left, rows.len() - 1);
}

#[test]
fn invalid_input_exits_3_with_the_flag_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), DEFAULT_CFG.replace("S = 0.3", "S = 0.3\nfoo = 2")).unwrap();
    let out = harvester(&["validate", "--config", "bad.cfg"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
    let err = text(&out.stderr);
    assert!(err.contains("--config") && err.contains("unknown key `foo`"), "{err}");
    assert!(!err.contains("panicked"));

    let out = harvester(&["solve", "--region", "5,1,0,1"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("--region"));

    let out = harvester(&["solve", "--region", "0.3,10,-2,1"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));

    let out = harvester(&["validate"], dir.path(), Some("many"));
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stderr).contains("HARVESTER_THREADS"));

    let out = harvester(&["validate", "--gnuplot-script"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unreachable_residual_target_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["solve", "--region", "0.3,20,-0.5,8", "--residual-tol", "1e-300"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("(partial)"));
}

#[test]
fn asymptotic_columns_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["asymptotic", "--branch", "2", "--n-max", "5"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    let rows = data_lines(&s);
    assert_eq!(rows[0], "branch,n,re_unpert,im_unpert,re_w,im_w,re_pert,im_pert,admissible");
    assert_eq!(rows.len(), 6);

    let out = harvester(&["asymptotic", "--branch", "1", "--n-max", "3", "--format", "json"], dir.path(), None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["header"]["subcommand"], "asymptotic");
    assert_eq!(v["tables"][0]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["tables"][0]["rows"][0]["re_unpert"], serde_json::json!(std::f64::consts::PI));
}

#[test]
fn dispersion_grid_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(
        &["dispersion", "--region", "1,3,0.5,1.5", "--steps", "4,3", "--out", "d.csv", "--gnuplot-script"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let s = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let rows = data_lines(&s);
    assert_eq!(rows[0], "re(lambda),im(lambda),re(value),im(value),abs(value),condition,near_pole");
    assert_eq!(rows.len(), 13);
    let gp = std::fs::read_to_string(dir.path().join("d.csv.gp")).unwrap();
    assert!(gp.contains("'d.csv'") && gp.contains("using 1:5"));
}

#[test]
fn roots_at_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["roots", "--lambda", "-3,2"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    assert_eq!(data_lines(&s).len(), 7);
    let out = harvester(&["roots", "--lambda", "0,0"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_without_collocation() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["compare", "--n-max", "6", "--no-collocation"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let s = text(&out.stdout);
    let rows = data_lines(&s);
    assert_eq!(rows.len(), 13);
    assert!(rows[0].ends_with("err_first,err_second,err_collocation"));
    assert!(s.contains("# branch 2 second-order error fit (all n): exponent "));
}

#[test]
fn perturb_writes_one_block_per_set() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("grid.txt"), "# Cp R CD CI\n2 3 -0.2 0.2\n0.5 1 -0.1 0.3\n").unwrap();
    let out = harvester(&["perturb", "--piezo-grid", "grid.txt"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let s = std::fs::read_to_string(dir.path().join("perturbation.csv")).unwrap();
    assert!(s.contains("# piezo set Cp=2 R=3 CD=-0.2 CI=0.2\n"));
    assert!(s.contains("# piezo set Cp=0.5 R=1 CD=-0.1 CI=0.3\n"));
    let headers = s.lines().filter(|l| *l == "branch,n,re_base,im_base,re_pert,im_pert,shift,second_order_mag,ratio").count();
    assert_eq!(headers, 2);

    std::fs::write(dir.path().join("bad.txt"), "1 2 3\n").unwrap();
    let out = harvester(&["perturb", "--piezo-grid", "bad.txt"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn checks_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["checks", "--samples", "20", "--region", "0.3,30,-0.5,8"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks_report.json")).unwrap()).unwrap();
    let checks = v["report"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 15);
    assert!(checks.iter().all(|c| c["passed"] == true && c.get("tolerance").is_some()));
    assert!(text(&out.stdout).lines().any(|l| l.starts_with("inverse_residual") && l.contains("PASS")));
}

#[test]
fn inverse_check_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = harvester(&["inverse-check", "--samples", "2", "--grid", "128"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let s = text(&out.stdout);
    assert_eq!(data_lines(&s)[0], "sample,residual,domain_defect,passed");
}
