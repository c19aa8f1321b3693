//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> PathBuf {
    let mut path = PathBuf::from(env!("CARGO_BIN_EXE_nhlattice"));
    assert!(path.exists(), "{path:?} missing");
    path = path.canonicalize().unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().expect("spawn nhlattice")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nhlattice-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"))
}

#[test]
fn scatter_reports_conventional_for_the_vertical_line() {
    let out = temp_dir("scatter");
    let result = run(&[
        "scatter",
        "--model",
        "gdse2band",
        "--ki",
        "1.5707963267948966,0",
        "--direction",
        "0,1",
        "--band",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("classification=Conventional"), "{stdout}");
    assert!(out.join("poles.csv").exists());
    assert!(out.join("scatter-manifest.txt").exists());
}

#[test]
fn dds_defaults_reproduce_the_frequency_split() {
    let out = temp_dir("dds");
    let quiet = run(&[
        "dds", "--model", "fig4", "--omega", "0.5", "--grid", "96",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(quiet.status.success());
    assert!(String::from_utf8_lossy(&quiet.stdout).contains("dds_present=false"));

    let split = run(&[
        "dds", "--model", "fig4", "--omega", "-0.5", "--grid", "96",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(split.status.success());
    assert!(String::from_utf8_lossy(&split.stdout).contains("dds_present=true"));
}

#[test]
fn identical_inputs_produce_byte_identical_csvs() {
    let out_a = temp_dir("det-a");
    let out_b = temp_dir("det-b");
    for out in [&out_a, &out_b] {
        let result = run(&[
            "efc", "--model", "gdse2band", "--omega", "1.5", "--grid", "48",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    }
    assert_eq!(read(&out_a.join("efc.csv")), read(&out_b.join("efc.csv")));
    assert_eq!(read(&out_a.join("efc.gp")), read(&out_b.join("efc.gp")));
}

#[test]
fn model_files_round_trip_through_the_cli() {
    let out = temp_dir("file");
    let model_path = out.join("chain.model");
    std::fs::write(
        &model_path,
        "# single chain with tunable loss\n\
         [model]\n\
         name = chain\n\
         dim = 1\n\n\
         [params]\n\
         g = 0.5\n\n\
         [hamiltonian]\n\
         H11 = \"2*cos(kx) + cos(ky) + i*g*(cos(kx)-1)\"\n",
    )
    .unwrap();
    let result = run(&[
        "bands",
        "--model",
        model_path.to_str().unwrap(),
        "--param",
        "g=0.25",
        "--k",
        "0,0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("band 0: 3.0000000000000000e0"), "{stdout}");
    let manifest = read(&out.join("bands-manifest.txt"));
    assert!(manifest.contains("param.g=2.5000000000000000e-1"), "{manifest}");
}

#[test]
fn usage_errors_exit_one() {
    // unknown builtin
    let bad_model = run(&["dds", "--model", "nonesuch", "--omega", "0.5"]);
    assert_eq!(bad_model.status.code(), Some(1));
    // malformed flag value
    let bad_pair = run(&["scatter", "--model", "fig2", "--ki", "oops", "--direction", "0,1"]);
    assert_eq!(bad_pair.status.code(), Some(1));
    // clap-level usage error
    let bad_flag = run(&["efc", "--model", "fig2"]);
    assert_eq!(bad_flag.status.code(), Some(1));
}

#[test]
fn non_coprime_direction_is_an_input_error() {
    let result = run(&[
        "scatter", "--model", "fig2", "--ki", "0,0.5", "--direction", "2,4",
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("coprime"));
}

#[test]
fn wavepacket_writes_snapshots_and_weights() {
    let out = temp_dir("wp");
    let result = run(&[
        "wavepacket",
        "--model",
        "sm-singleband",
        "--lambda",
        "1.5",
        "--line",
        "0,1",
        "--k",
        "1,0",
        "--size",
        "24",
        "--center",
        "8,12",
        "--times",
        "1,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(out.join("snapshot-t1.0.csv").exists());
    assert!(out.join("snapshot-t3.0.csv").exists());
    let weights = read(&out.join("weights.csv"));
    assert!(weights.starts_with("time,near,neg,pos\n"), "{weights}");
    // weights per row sum to one
    for line in weights.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        let total: f64 = cols.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "row `{line}` sums to {total}");
    }
}
