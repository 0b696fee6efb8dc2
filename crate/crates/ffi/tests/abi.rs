use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use heterotest_ffi::*;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn load(name: &str) -> *mut HtModel {
    let text = std::fs::read_to_string(models().join(name)).unwrap();
    let c = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ht_model_from_json(c.as_ptr(), &mut m) },
        HtStatus::Ok
    );
    assert!(!m.is_null());
    m
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ht_string_free(s) };
    out
}

#[test]
fn kinds_are_detected() {
    for (file, kind) in [
        ("counter.json", HtModelKind::Sxm),
        ("ping_pong.json", HtModelKind::System),
        ("ps2.json", HtModelKind::PSystem),
    ] {
        let m = load(file);
        let mut k = HtModelKind::Sxm;
        assert_eq!(unsafe { ht_model_kind(m, &mut k) }, HtStatus::Ok);
        assert_eq!(k, kind, "{file}");
        unsafe { ht_model_free(m) };
    }
}

#[test]
fn psystem_run_matches_library() {
    let m = load("ps2.json");
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ht_psystem_run(m, 3, 1, 0, &mut out) },
        HtStatus::Ok
    );
    let traces: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(traces.as_array().unwrap().len(), 2);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ht_psystem_coverage(m, 3, &mut out) }, HtStatus::Ok);
    let set: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(
        set["configurations"],
        serde_json::json!([["bdf", "b"], ["ccf", "c"]])
    );
    unsafe { ht_model_free(m) };
}

#[test]
fn suite_handle_round_trip() {
    let m = load("counter.json");
    let mut suite = ptr::null_mut();
    assert_eq!(unsafe { ht_generate_suite(m, 1, &mut suite) }, HtStatus::Ok);
    let n = unsafe { ht_suite_len(suite) };
    assert!(n > 0);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ht_suite_to_json(suite, &mut out) }, HtStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(json["cases"].as_array().unwrap().len(), n);
    unsafe {
        ht_suite_free(suite);
        ht_model_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut m = ptr::null_mut();
    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { ht_model_from_json(bad.as_ptr(), &mut m) },
        HtStatus::Parse
    );
    assert!(m.is_null());
    let msg = unsafe { CStr::from_ptr(ht_last_error()) }.to_str().unwrap();
    assert!(!msg.is_empty());

    assert_eq!(
        unsafe { ht_model_from_json(ptr::null(), &mut m) },
        HtStatus::NullPointer
    );

    let ps = load("ps2.json");
    let mut suite = ptr::null_mut();
    assert_eq!(
        unsafe { ht_generate_suite(ps, 0, &mut suite) },
        HtStatus::WrongKind
    );
    assert!(!ht_last_error().is_null());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ht_model_validate(ps, &mut out) }, HtStatus::Ok);
    assert!(ht_last_error().is_null());
    let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(report["violations"], serde_json::json!([]));
    unsafe { ht_model_free(ps) };
}

#[test]
fn dft_failure_is_reported_not_raised() {
    let m = load("bad_overlap.json");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ht_model_check_dft(m, &mut out) }, HtStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(report["deterministic"]["pass"], false);
    unsafe { ht_model_free(m) };
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/heterotest.h"))
            .unwrap();
    for f in [
        "ht_last_error",
        "ht_version",
        "ht_string_free",
        "ht_model_from_json",
        "ht_model_free",
        "ht_model_kind",
        "ht_model_validate",
        "ht_model_check_dft",
        "ht_generate_suite",
        "ht_suite_len",
        "ht_suite_to_json",
        "ht_suite_free",
        "ht_psystem_run",
        "ht_psystem_coverage",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct HtModel HtModel;"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "heterotest.h"

int main(int argc, char **argv) {
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 10;
    static char buf[1 << 16];
    size_t n = fread(buf, 1, sizeof buf - 1, f);
    fclose(f);
    buf[n] = 0;
    HtModel *m = NULL;
    if (ht_model_from_json(buf, &m) != HT_STATUS_OK) return 11;
    char *out = NULL;
    if (ht_psystem_run(m, 3, 1, 0, &out) != HT_STATUS_OK) return 12;
    int ok = strstr(out, "ccf") != NULL;
    ht_string_free(out);
    HtSuite *s = NULL;
    if (ht_generate_suite(m, 0, &s) != HT_STATUS_WRONG_KIND) return 13;
    if (ht_last_error() == NULL) return 14;
    ht_model_free(m);
    printf("%s\n", ht_version());
    return ok ? 0 : 15;
}
"#;

/// Compiles a C client against the generated header and the static
/// library built alongside this test.
#[test]
fn c_client_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let lib = target.join(profile).join("libheterotest_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let out = Command::new(&exe)
        .arg(models().join("ps2.json"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        env!("CARGO_PKG_VERSION")
    );
}
