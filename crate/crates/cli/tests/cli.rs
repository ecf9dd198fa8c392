use std::path::Path;
use std::process::{Command, Output};

const ROD: &str = r#"
[geometry]
kind = "rod"
length = 1.0
num_elements = 64

[[patch]]
name = "q"
kind = "heat_flux"
on = "left"

[[patch]]
name = "a"
kind = "convective"
on = "lateral"
x = [0.0, 0.35]

[[patch]]
name = "b"
kind = "convective"
on = "lateral"
x = [0.6, 1.0]
"#;

fn kms(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_kms"))
        .args(args)
        .current_dir(dir)
        .env("KMS_THREADS", "2")
        .output()
        .expect("kms binary runs");
    eprintln!(
        "kms {}\n{}{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rod_model(dir: &Path) {
    std::fs::write(dir.join("rod.toml"), ROD).unwrap();
    assert_eq!(code(&kms(dir, &["generate", "rod.toml", "--out", "model"])), 0);
}

#[test]
fn rod_pipeline_passes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    rod_model(d);
    let r = kms(d, &["reduce", "model/manifest.toml", "--out", "red"]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("omega_m = 4.358899e-2"));
    let prov = json(&d.join("red/provenance.json"));
    assert_eq!(prov["stats"]["n"], 65);
    assert!(prov["tolerances"]["orthonormality_error"].as_f64().unwrap() < 1e-12);
    for f in [
        "bundle.toml",
        "basis.bin",
        "kms_basis.bin",
        "E.mtx",
        "D0_a.mtx",
        "D1_b.mtx",
    ] {
        assert!(d.join("red").join(f).is_file(), "{f}");
    }

    assert_eq!(code(&kms(d, &["verify", "model/manifest.toml", "red"])), 0);
    let s = json(&d.join("verify/summary.json"));
    assert_eq!(s["pass"], true);
    assert_eq!(s["samples"].as_array().unwrap().len(), 4);
    for tag in ["h_1_8", "h_4_8", "h_4_1", "h_50_50"] {
        for kind in ["bound", "frf_error", "eigen"] {
            assert!(d.join(format!("verify/{kind}_{tag}.csv")).is_file(), "{kind}_{tag}");
        }
    }
}

#[test]
fn verify_is_deterministic_and_respects_samples() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    rod_model(d);
    assert_eq!(code(&kms(d, &["reduce", "model/manifest.toml", "--out", "red"])), 0);
    let args = [
        "verify",
        "model/manifest.toml",
        "red",
        "--htc",
        "a=2,b=3",
        "--htc",
        "a=10",
        "--htc",
        "b=0",
    ];
    assert_eq!(code(&kms(d, &[&args[..], &["--out", "v1"]].concat())), 0);
    assert_eq!(code(&kms(d, &[&args[..], &["--out", "v2"]].concat())), 0);
    for f in ["bound_h_2_3.csv", "frf_error_h_10_0.csv", "eigen_h_10_0.csv"] {
        let a = std::fs::read(d.join("v1").join(f)).unwrap();
        assert_eq!(a, std::fs::read(d.join("v2").join(f)).unwrap(), "{f}");
    }
    assert!(!d.join("v1/bound_h_1_8.csv").exists());
}

#[test]
fn truncated_basis_is_caught() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    rod_model(d);
    let args = ["--bilinear-iters", "0", "--drop-modal-fraction", "0.5"];
    assert_eq!(
        code(&kms(
            d,
            &[&["reduce", "model/manifest.toml", "--out", "red"][..], &args].concat()
        )),
        0
    );
    assert_eq!(code(&kms(d, &["verify", "model/manifest.toml", "red"])), 1);
    let s = json(&d.join("verify/summary.json"));
    assert_eq!(s["pass"], false);
    let exceed: u64 = s["samples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["collocated_exceedances"].as_u64().unwrap())
        .sum();
    assert!(exceed > 0);
}

#[test]
fn tighter_budget_keeps_more_modes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    rod_model(d);
    assert_eq!(code(&kms(d, &["reduce", "model/manifest.toml", "--out", "r5"])), 0);
    assert_eq!(
        code(&kms(
            d,
            &["reduce", "model/manifest.toml", "--epsilon", "0.01", "--out", "r1"]
        )),
        0
    );
    let mu = |p: &str| {
        json(&d.join(p).join("provenance.json"))["stats"]["mu"]
            .as_u64()
            .unwrap()
    };
    assert!(mu("r1") >= mu("r5"));
    assert!(mu("r5") > 0);
}

#[test]
fn plain_kms_path_without_patches() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let cfg = "[geometry]\nkind = \"rod\"\nlength = 0.5\nnum_elements = 30\n\n\
               [[patch]]\nname = \"q\"\nkind = \"heat_flux\"\non = \"left\"\n\n\
               [[patch]]\nname = \"r\"\nkind = \"heat_flux\"\non = \"right\"\n";
    std::fs::write(d.join("plain.toml"), cfg).unwrap();
    assert_eq!(code(&kms(d, &["generate", "plain.toml", "--out", "model"])), 0);
    assert_eq!(
        code(&kms(
            d,
            &["reduce", "model/manifest.toml", "--bilinear-iters", "0", "--out", "red"]
        )),
        0
    );
    let st = &json(&d.join("red/provenance.json"))["stats"];
    assert_eq!(st["n_c"], 0);
    assert_eq!(st["kms_width"], st["parametric_width"]);
    assert_eq!(code(&kms(d, &["verify", "model/manifest.toml", "red"])), 0);
}

#[test]
fn box_counts() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let cfg = "[geometry]\nkind = \"box\"\nnx = 8\nny = 8\nnz = 8\nlx = 0.2\nly = 0.2\nlz = 0.2\n\n\
               [[patch]]\nname = \"top\"\nkind = \"convective\"\non = \"z+\"\n\n\
               [[patch]]\nname = \"clamp\"\nkind = \"fixed_displacement\"\non = \"z-\"\n";
    std::fs::write(d.join("box.toml"), cfg).unwrap();
    let o = kms(d, &["generate", "box.toml", "--out", "model"]);
    assert_eq!(code(&o), 0);
    // 9³ nodes; the clamped face removes 81 nodes of three dofs each
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("thermal n = 729"), "{text}");
    assert!(text.contains(&format!("mechanical n = {}", 3 * 729 - 3 * 81)), "{text}");
}

#[test]
fn overlapping_patches_are_named() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    std::fs::write(d.join("bad.toml"), ROD.replace("x = [0.6, 1.0]", "x = [0.3, 1.0]")).unwrap();
    let o = kms(d, &["generate", "bad.toml", "--out", "model"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("'a'") && err.contains("'b'"), "{err}");
}

#[test]
fn usage_and_config_errors() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    rod_model(d);
    assert_eq!(code(&kms(d, &["reduce", "missing.toml"])), 2);
    assert_eq!(
        code(&kms(
            d,
            &["reduce", "model/manifest.toml", "--epsilon", "-1", "--out", "r"]
        )),
        2
    );
    assert_eq!(code(&kms(d, &["reduce", "model/manifest.toml", "--out", "red"])), 0);
    let o = kms(d, &["verify", "model/manifest.toml", "red", "--htc", "c=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("'c'"));
    assert_eq!(code(&kms(d, &["verify", "model/manifest.toml", "nothing"])), 2);
}
