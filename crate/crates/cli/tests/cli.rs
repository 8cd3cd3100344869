use std::path::{Path, PathBuf};
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn waveguide(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_waveguide"))
        .args(args)
        .output()
        .unwrap()
}

const SMALL: [&str; 6] = ["--n-t", "64", "--n-x", "67", "--L", "4,8"];

#[test]
fn threshold_writes_its_files() {
    let out = scratch("threshold");
    let o = waveguide(
        &[
            &[
                "threshold",
                "--scenario",
                scenario("constant_slope").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ][..],
            &SMALL,
        ]
        .concat(),
    );
    assert!(
        o.status.code() == Some(0) || o.status.code() == Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("threshold.json")).unwrap()).unwrap();
    assert!((v["E1"].as_f64().unwrap()).abs() < 1e-8);
    assert!(v["gauge_pass"].as_bool().unwrap());
    let band = std::fs::read_to_string(out.join("band.csv")).unwrap();
    assert!(band.lines().count() > 25);
}

#[test]
fn bound_states_run_is_deterministic() {
    let run = |tag: &str| {
        let out = scratch(tag);
        let o = waveguide(
            &[
                &[
                    "bound-states",
                    "--scenario",
                    scenario("tanh_thm2").to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ][..],
                &SMALL,
            ]
            .concat(),
        );
        assert_ne!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("bound_states.json")).unwrap()
    };
    let a = run("bs_a");
    assert_eq!(a, run("bs_b"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(v["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["theorem"] == "Thm2"));
}

#[test]
fn bad_input_exits_with_one() {
    let out = scratch("bad");
    let o = waveguide(&[
        "potential",
        "--scenario",
        "/nonexistent.json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = waveguide(&[
        "potential",
        "--scenario",
        scenario("flat").to_str().unwrap(),
        "--n-t",
        "66",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_t"));
}

#[test]
fn golden_mismatch_exits_with_one() {
    let out = scratch("golden");
    let g = out.with_extension("json");
    std::fs::write(&g, r#"{"version":"t","scenarios":{"flat":{"int_V":1.0}}}"#).unwrap();
    let o = waveguide(&[
        "potential",
        "--scenario",
        scenario("flat").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--golden",
        g.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}
