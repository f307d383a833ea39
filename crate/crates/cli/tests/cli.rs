use std::path::Path;
use std::process::{Command, Output};

fn semihyp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semihyp")).args(args).env("SEMIHYP_OUT_DIR", out).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn classify_chebyshev() {
    let dir = tempfile::tempdir().unwrap();
    let o = semihyp(&["classify", "--c-re", "-2", "--orbit-n", "1000"], dir.path());
    let v = stdout_json(&o);
    assert_eq!(v["classification"]["kind"], "BoundedNonrecurrent");
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("classify.json")).unwrap()).unwrap();
    assert_eq!(written, v);
}

#[test]
fn recurrent_parameter_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = semihyp(&["holder", "--c-re", "-1", "--orbit-n", "1000"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn bad_angles_and_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = semihyp(&["rays", "--angles", "0,1.5"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--angles"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\n  \"c_re\": -2,\n  \"gird_res\": 64\n}\n").unwrap();
    let o = semihyp(&["classify", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gird_res") && err.contains("line 3"), "{err}");
}

#[test]
fn expansion_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["expansion", "--c-re", "-2", "--orbits", "4", "--depth", "12", "--seed", "7"];
    let first = stdout_json(&semihyp(&args, a.path()));
    let second = stdout_json(&semihyp(&args, b.path()));
    assert_eq!(first, second);
    assert_eq!(first["fits"].as_array().unwrap().len(), 4);
    for name in ["expansion.json", "expansion_levels.csv", "expansion_fits.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let header = std::fs::read_to_string(a.path().join("expansion_levels.csv")).unwrap();
    assert!(header.starts_with("orbit,level,re,im,branch,label,diameter,ratio\n"));
}

#[test]
fn render_writes_pixmap() {
    let dir = tempfile::tempdir().unwrap();
    let o = semihyp(&["render", "--c-re", "-2", "--width", "32", "--height", "24", "--rays", "0"], dir.path());
    stdout_json(&o);
    let ppm = std::fs::read(dir.path().join("render.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n32 24\n255\n"));
    assert_eq!(ppm.len(), 13 + 32 * 24 * 3);
}
