use std::path::Path;
use std::process::{Command, Output};

use cm_scope::ingest::{ihex, Segment, SegmentList};
use cm_scope::report::from_json;
use cm_scope::{Feature, Verdict};
use thumb_asm::corpus::{corpus, SyntheticImage, UICR_BASE};

fn cm_scope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cm-scope"))
        .args(args)
        .env_remove("CM_SCOPE_PROFILES")
        .output()
        .expect("spawn cm-scope")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn image(name: &str) -> SyntheticImage {
    corpus().into_iter().find(|i| i.name == name).expect(name)
}

/// Write the image as a raw binary, or as Intel HEX when it carries a UICR
/// page. Returns the file name.
fn write_image(dir: &Path, img: &SyntheticImage) -> String {
    match &img.uicr {
        None => {
            let name = format!("{}.bin", img.name);
            std::fs::write(dir.join(&name), &img.bytes).unwrap();
            name
        }
        Some(uicr) => {
            let segs = SegmentList::from_segments(vec![
                Segment::new(img.base, img.bytes.clone()),
                Segment::new(UICR_BASE, uicr.clone()),
            ]);
            let name = format!("{}.hex", img.name);
            std::fs::write(dir.join(&name), ihex::encode_intel_hex(&segs)).unwrap();
            name
        }
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_writes_json_matching_labels() {
    let dir = tempfile::tempdir().unwrap();
    let img = image("hardened_v8m");
    let bin = dir.path().join(write_image(dir.path(), &img));
    let json = dir.path().join("out.json");
    let o = cm_scope(&["analyze", path_str(&bin), "--base", "0x08000000", "--json", path_str(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("base:    0x08000000"), "{}", stdout(&o));
    let m = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(m.base, Some(0x0800_0000));
    for (feature, expected) in &img.labels {
        let f: Feature = feature.parse().unwrap();
        assert_eq!(m.verdict(f).to_string(), *expected, "{feature}");
    }
}

#[test]
fn analyze_infers_base_and_reads_uicr_from_hex() {
    let dir = tempfile::tempdir().unwrap();
    let img = image("nordic_readback_on");
    let file = dir.path().join(write_image(dir.path(), &img));
    let json = dir.path().join("r.json");
    let o = cm_scope(&["analyze", path_str(&file), "--profile", "nordic", "--json", path_str(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(m.verdict(Feature::ReadbackProtection), Verdict::Present);
}

#[test]
fn detector_selection_leaves_other_rows_indeterminate() {
    let dir = tempfile::tempdir().unwrap();
    let img = image("hardened_v8m");
    let bin = dir.path().join(write_image(dir.path(), &img));
    let json = dir.path().join("out.json");
    let o = cm_scope(&["analyze", path_str(&bin), "--detectors", "instruction_barriers", "--json", path_str(&json)]);
    if o.status.code() == Some(1) {
        // Detector names come from the registry; make the failure readable.
        panic!("{}", stderr(&o));
    }
    let m = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(m.verdict(Feature::Mpu), Verdict::Indeterminate);
    assert_ne!(m.verdict(Feature::InstructionBarriers), Verdict::Indeterminate);
}

#[test]
fn unknown_detector_and_profile_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join(write_image(dir.path(), &image("bare_metal")));
    let o = cm_scope(&["analyze", path_str(&bin), "--detectors", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown detector"), "{}", stderr(&o));
    let o = cm_scope(&["analyze", path_str(&bin), "--profile", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_is_fatal() {
    let o = cm_scope(&["analyze", "/definitely/not/here.bin"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("here.bin"), "{}", stderr(&o));
}

#[test]
fn bad_checksum_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let hex = ":0400000001020304F2\n:0400040005060708DA\n:00000001FF\n";
    let bad = hex.replace("DA\n", "DB\n");
    let path = dir.path().join("bad.hex");
    std::fs::write(&path, bad).unwrap();
    let o = cm_scope(&["analyze", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2: bad checksum"), "{}", stderr(&o));
}

fn write_manifest(dir: &Path, entries: &[(String, &str)]) -> std::path::PathBuf {
    let mut text = String::new();
    for (path, profile) in entries {
        text.push_str(&format!("[[entry]]\npath = \"{path}\"\nprofile = \"{profile}\"\n\n"));
    }
    let p = dir.join("corpus.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn batch_writes_reports_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let entries: Vec<(String, &str)> = ["bare_metal", "hardened_v8m", "nordic_smpu"]
        .iter()
        .map(|n| {
            let img = image(n);
            (write_image(dir.path(), &img), img.profile)
        })
        .collect();
    let manifest = write_manifest(dir.path(), &entries);
    let out = dir.path().join("out");
    let o = cm_scope(&["batch", path_str(&manifest), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Privilege Separation"), "{}", stdout(&o));
    for (path, _) in &entries {
        let m = from_json(&std::fs::read_to_string(out.join(format!("{path}.json"))).unwrap()).unwrap();
        assert_eq!(&m.image_id, path);
    }
    assert_eq!(std::fs::read_to_string(out.join("errors.log")).unwrap(), "");
}

#[test]
fn batch_with_a_broken_entry_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_image(dir.path(), &image("bare_metal"));
    std::fs::write(dir.path().join("broken.hex"), ":0400000001020304F3\n").unwrap();
    let manifest = write_manifest(dir.path(), &[(good, "generic"), ("broken.hex".into(), "generic")]);
    let out = dir.path().join("out");
    let o = cm_scope(&["batch", path_str(&manifest), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let log = std::fs::read_to_string(out.join("errors.log")).unwrap();
    assert!(log.contains("broken.hex: line 1: bad checksum"), "{log}");
    assert!(out.join("bare_metal.bin.json").exists());
}

#[test]
fn batch_table_is_independent_of_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let entries: Vec<(String, &str)> = corpus()
        .iter()
        .map(|img| (write_image(dir.path(), img), img.profile))
        .collect();
    let manifest = write_manifest(dir.path(), &entries);
    let t1 = dir.path().join("t1.txt");
    let t8 = dir.path().join("t8.txt");
    for (jobs, table) in [("1", &t1), ("8", &t8)] {
        let o = cm_scope(&["batch", path_str(&manifest), "--jobs", jobs, "--table", path_str(table)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = std::fs::read(&t1).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&t8).unwrap());
}

#[test]
fn manifest_errors_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.toml");
    std::fs::write(&p, "[[entry]]\npath = \"a\"\n[[entry]]\npath = \"a\"\n").unwrap();
    let o = cm_scope(&["batch", path_str(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn profiles_dir_flag_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles");
    std::fs::create_dir(&profiles).unwrap();
    std::fs::write(profiles.join("acme.toml"), "id = \"acme\"\nextends = \"generic\"\n").unwrap();
    let bin = dir.path().join(write_image(dir.path(), &image("bare_metal")));

    let o = cm_scope(&["analyze", path_str(&bin), "--profile", "acme"]);
    assert_eq!(o.status.code(), Some(1));

    let o = cm_scope(&["analyze", path_str(&bin), "--profile", "acme", "--profiles-dir", path_str(&profiles)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("profile: acme"));

    let o = Command::new(env!("CARGO_BIN_EXE_cm-scope"))
        .args(["analyze", path_str(&bin), "--profile", "acme"])
        .env("CM_SCOPE_PROFILES", &profiles)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

const V7_CFG: &str = r#"
arch = "v7m"
enable = true

[[region]]
number = 0
base = "0x20000000"
size = "0x10000"
ap = "rw/ro"
xn = true
"#;

#[test]
fn model_mpu_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mpu.toml");
    std::fs::write(&cfg, V7_CFG).unwrap();
    let c = path_str(&cfg);
    let cases = [
        ("read", "unprivileged", "Allow"),
        ("write", "unprivileged", "Deny"),
        ("write", "privileged", "Allow"),
        ("execute", "privileged", "Deny"),
    ];
    for (access, p, want) in cases {
        let o = cm_scope(&["model", "mpu-eval", c, "--addr", "0x20000100", "--access", access, "--priv", p]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), want, "{access} {p}");
    }
}

#[test]
fn model_mpu_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mpu.toml");
    std::fs::write(&cfg, "arch = \"v7m\"\nenable = false\n").unwrap();
    let o = cm_scope(&["model", "mpu-audit", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "MpuDisabled"), "{}", stdout(&o));
}

#[test]
fn overlapping_v8m_regions_are_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mpu.toml");
    std::fs::write(
        &cfg,
        r#"
arch = "v8m"
enable = true
[[region]]
number = 0
base = "0x20000000"
limit = "0x200003ff"
ap = "rw-any"
[[region]]
number = 1
base = "0x20000200"
limit = "0x200005ff"
ap = "ro-any"
"#,
    )
    .unwrap();
    let o = cm_scope(&["model", "mpu-audit", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid MPU configuration"), "{}", stderr(&o));
}

#[test]
fn model_attr_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("attr.toml");
    std::fs::write(
        &cfg,
        r#"
sau_enabled = true
[[sau]]
start = "0x10000000"
end = "0x1000ffff"
attr = "non-secure"
"#,
    )
    .unwrap();
    let o = cm_scope(&["model", "attr-resolve", path_str(&cfg), "0x10000000", "0x20000000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines, ["0x10000000 NonSecure", "0x20000000 Secure"]);
}

#[test]
fn model_transition_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("t.toml");
    std::fs::write(
        &script,
        r#"
[start]
priv = "privileged"
state = "secure"
events = []
"#,
    )
    .unwrap();
    // `events` must be top-level; inside [start] it is an unknown field.
    let o = cm_scope(&["model", "transition", path_str(&script)]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(
        &script,
        r#"
events = [
  { event = "write_control_npriv", value = true },
  { event = "svc" },
  { event = "exception_return", to = "thread", spsel = "psp" },
]
[start]
priv = "privileged"
state = "secure"
"#,
    )
    .unwrap();
    let o = cm_scope(&["model", "transition", path_str(&script)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4, "{out}");
    assert!(out.lines().last().unwrap().contains("(Thread, Unprivileged, Secure, Psp)"), "{out}");

    std::fs::write(
        &script,
        r#"
events = [
  { event = "bxns_exit" },
  { event = "bxns_exit" },
]
[start]
priv = "privileged"
state = "secure"
"#,
    )
    .unwrap();
    let o = cm_scope(&["model", "transition", path_str(&script)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("event 2: illegal transition"), "{}", stderr(&o));
}
