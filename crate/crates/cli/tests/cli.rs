use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use reebforge::complex::scx::{parse_complex, parse_subcomplex, write_complex};
use reebforge::construct::build_pl_reeb;
use reebforge::plmap::{parse_plf, PlMap};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

struct Run {
    stdout: String,
    stderr: String,
    code: i32,
}

fn reebforge(args: &[&str]) -> Run {
    reebforge_env(args, &[])
}

fn reebforge_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_reebforge"));
    cmd.current_dir(fixtures())
        .args(args)
        .env_remove("REEBFORGE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        code: out.status.code().unwrap_or(-1),
    }
}

fn json(run: &Run) -> serde_json::Value {
    serde_json::from_str(&run.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}", run.stdout))
}

/// Compares stdout against `golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites the file.
fn golden(name: &str, args: &[&str], code: i32) {
    let run = reebforge(args);
    assert_eq!(run.code, code, "{args:?}: {}", run.stderr);
    let path = fixtures().join("golden").join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &run.stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(
        run.stdout,
        expected,
        "report for {args:?} drifted from {}",
        path.display()
    );
}

#[test]
fn golden_homology_rp2_z2() {
    golden(
        "homology_rp2_z2",
        &["homology", "rp2.scx", "--coeff", "z2"],
        0,
    );
    let v = json(&reebforge(&["homology", "rp2.scx", "--coeff", "z2"]));
    assert_eq!(
        v["result"]["homology"]["betti"],
        serde_json::json!([1, 1, 1])
    );
}

#[test]
fn golden_homology_rp2_integers() {
    golden(
        "homology_rp2_z",
        &["homology", "rp2.scx", "--coeff", "z"],
        0,
    );
    let v = json(&reebforge(&["homology", "rp2.scx", "--coeff", "z"]));
    assert_eq!(
        v["result"]["homology"]["torsion"][1],
        serde_json::json!(["2"])
    );
}

#[test]
fn golden_homology_point() {
    golden("homology_point", &["homology", "point.scx"], 0);
    let v = json(&reebforge(&["homology", "point.scx"]));
    assert_eq!(v["result"]["homology"]["betti"], serde_json::json!([1]));
}

#[test]
fn golden_verify_octahedron_height() {
    golden(
        "verify_octa_height",
        &["verify", "octa.scx", "octa_height.plf"],
        0,
    );
    let v = json(&reebforge(&["verify", "octa.scx", "octa_height.plf"]));
    assert_eq!(v["result"]["is_reeb"], true);
}

#[test]
fn golden_duality_torus_two_points_fails() {
    golden(
        "duality_torus_point_q",
        &[
            "duality",
            "torus.scx",
            "point.scx",
            "point.scx",
            "--coeff",
            "q",
        ],
        1,
    );
    let v = json(&reebforge(&[
        "duality",
        "torus.scx",
        "point.scx",
        "point.scx",
        "--coeff",
        "q",
    ]));
    assert_eq!(v["pass"], false);
    assert_eq!(v["result"]["violations"][0]["i"], 1);
}

#[test]
fn golden_reeb_build_tetrahedron_vertex() {
    golden(
        "reeb_build_tetra_point",
        &["reeb-build", "tetra.scx", "point.scx"],
        0,
    );
    let v = json(&reebforge(&["reeb-build", "tetra.scx", "point.scx"]));
    assert_eq!(
        v["result"]["report"]["critical_values"],
        serde_json::json!(["0", "1"])
    );
}

#[test]
fn golden_flatfn() {
    golden(
        "flatfn_2k_K8_check4",
        &["flatfn", "--ck", "2^-k", "--K", "8", "--check", "4"],
        0,
    );
}

#[test]
fn golden_semialg_hemisphere() {
    golden("semialg_hemisphere", &["semialg", "hemisphere.spec"], 0);
}

#[test]
fn torus_with_cycle_builds_and_passes_duality() {
    let run = reebforge(&["reeb-build", "torus.scx", "cycle3.scx"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = json(&run);
    let duality = v["result"]["report"]["duality"].as_array().unwrap();
    assert_eq!(duality.len(), 2);
    assert!(duality.iter().all(|d| d["pass"] == true));
}

#[test]
fn reports_are_byte_stable_across_thread_counts() {
    let args = ["reeb-build", "torus.scx", "cycle3.scx"];
    let one = reebforge_env(&args, &[("REEBFORGE_THREADS", "1")]);
    let four = reebforge_env(&args, &[("REEBFORGE_THREADS", "4")]);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, reebforge(&args).stdout);
}

#[test]
fn malformed_complex_reports_line() {
    let run = reebforge(&["homology", "malformed.scx"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("line 3"), "{}", run.stderr);
    assert!(run.stdout.is_empty());
}

#[test]
fn missing_file_is_input_error() {
    assert_eq!(reebforge(&["homology", "no_such_file.scx"]).code, 2);
}

#[test]
fn whole_complex_as_subcomplex_is_rejected() {
    let run = reebforge(&["reeb-build", "tetra.scx", "tetra.scx"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("proper subcomplex"), "{}", run.stderr);
}

#[test]
fn integer_duality_is_input_error() {
    assert_eq!(
        reebforge(&[
            "duality",
            "torus.scx",
            "point.scx",
            "point.scx",
            "--coeff",
            "z"
        ])
        .code,
        2
    );
}

#[test]
fn exhausted_retries_exit_three() {
    // The suspension of RP² is a pseudomanifold but not a manifold; the far apex stays critical.
    let run = reebforge(&[
        "reeb-build",
        "susp_rp2.scx",
        "apex.scx",
        "--max-retries",
        "0",
    ]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    let v = json(&run);
    assert_eq!(v["result"]["status"], "retries_exhausted");
    assert_eq!(v["result"]["report"]["is_reeb"], false);
    assert_eq!(v["pass"], false);
}

#[test]
fn flatfn_checks_and_bad_sequences() {
    let run = reebforge(&[
        "flatfn", "--ck", "2^-k/k", "--K", "6", "--check", "1", "--check", "6",
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(json(&run)["result"]["checks"].as_array().unwrap().len(), 2);
    assert_eq!(reebforge(&["flatfn", "--ck", "1,1,1", "--K", "2"]).code, 2);
    assert_eq!(reebforge(&["flatfn", "--K", "3", "--check", "4"]).code, 2);
    assert_eq!(reebforge(&["flatfn", "--ck", "two"]).code, 2);
}

#[test]
fn semialg_equator_fails_check() {
    let run = reebforge(&["semialg", "equator.spec"]);
    assert_eq!(run.code, 1);
    assert_eq!(json(&run)["result"]["max_clusters"], 2);
}

#[test]
fn zero_threads_is_rejected() {
    assert_eq!(
        reebforge_env(&["homology", "point.scx"], &[("REEBFORGE_THREADS", "0")]).code,
        2
    );
}

#[test]
fn builtin_output_reparses() {
    let run = reebforge(&["builtin", "torus_7vertex"]);
    assert_eq!(run.code, 0);
    let c = parse_complex(&run.stdout).unwrap();
    assert_eq!(c.euler_characteristic(), 0);
    assert_eq!(reebforge(&["builtin", "klein_bottle"]).code, 2);
}

#[test]
fn report_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.json");
    let run = reebforge(&["homology", "rp2.scx", "--report", path.to_str().unwrap()]);
    assert_eq!(run.code, 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), run.stdout);
}

#[test]
fn csv_dumps_have_headers_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("gamma.csv");
    let run = reebforge(&[
        "flatfn",
        "--K",
        "4",
        "--csv",
        flat.to_str().unwrap(),
        "--order",
        "3",
        "--csv-samples",
        "50",
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut r = csv::Reader::from_path(&flat).unwrap();
    assert_eq!(r.headers().unwrap().len(), 5);
    assert_eq!(r.records().count(), 51);

    let samples = dir.path().join("samples.csv");
    let run = reebforge(&[
        "semialg",
        "hemisphere.spec",
        "--grid",
        "20",
        "--csv",
        samples.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut r = csv::Reader::from_path(&samples).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["x1", "x2", "x3", "f", "projected_gradient_norm", "in_x"]
    );
    assert_eq!(r.records().count(), 400);
}

#[test]
fn build_artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("torus");
    let run = reebforge(&[
        "reeb-build",
        "torus.scx",
        "cycle3.scx",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let read =
        |suffix: &str| std::fs::read_to_string(dir.path().join(format!("torus{suffix}"))).unwrap();
    let m = parse_complex(&std::fs::read_to_string(fixtures().join("torus.scx")).unwrap()).unwrap();
    let x = parse_subcomplex(
        &std::fs::read_to_string(fixtures().join("cycle3.scx")).unwrap(),
        Arc::new(m.clone()),
    )
    .unwrap();
    let build = build_pl_reeb(&m, &x, 3).unwrap();

    let complex = parse_complex(&read(".scx")).unwrap();
    assert_eq!(&complex, build.complex().as_ref());
    assert_eq!(
        parse_complex(&write_complex(&complex, None)).unwrap(),
        complex
    );
    assert_eq!(
        parse_complex(&read(".x0.scx")).unwrap(),
        *build.x0.complex()
    );
    assert_eq!(
        parse_complex(&read(".x1.scx")).unwrap(),
        *build.x1.complex()
    );

    let plf = parse_plf(&read(".plf")).unwrap();
    assert_eq!(plf.domain.as_deref(), Some("torus.scx"));
    let f = PlMap::from_entries(Arc::new(complex), &plf.entries).unwrap();
    assert_eq!(f, build.f);

    let dir_str = dir.path().to_str().unwrap();
    let verify = reebforge(&[
        "verify",
        &format!("{dir_str}/torus.scx"),
        &format!("{dir_str}/torus.plf"),
        "--expected-x0",
        &format!("{dir_str}/torus.x0.scx"),
    ]);
    assert_eq!(verify.code, 0, "{}", verify.stderr);
    let v = json(&verify);
    assert_eq!(v["result"]["zero_set_matches"], true);
    assert_eq!(v["result"]["is_reeb"], true);
}
