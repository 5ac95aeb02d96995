use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use coarsekit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ck_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn space(spec: &str) -> *mut CkSpace {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ck_space_from_json(c(spec).as_ptr(), &mut s) }, CkStatus::Ok);
    s
}

#[test]
fn distances_and_windows() {
    let s = space(r#"{"kind":"free_group","rank":2}"#);
    let mut d = 0u64;
    let st = unsafe { ck_space_dist(s, c(r#""ab""#).as_ptr(), c(r#""aB""#).as_ptr(), &mut d) };
    assert_eq!(st, CkStatus::Ok);
    assert_eq!(d, 2);

    let mut w = ptr::null_mut();
    assert_eq!(unsafe { ck_window_ball(s, ptr::null(), 2, &mut w) }, CkStatus::Ok);
    assert_eq!(unsafe { ck_window_len(w) }, 17);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ck_components_json(w, 1, &mut out) }, CkStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    assert_eq!(doc["max_class_size"], 17);
    assert_eq!(doc["schema"], "coarsekit/1");

    // the components document re-verifies through the same interface
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { ck_verify_json(out, &mut report) }, CkStatus::Ok);
    unsafe {
        ck_string_free(report);
        ck_string_free(out);
        ck_window_free(w);
        ck_space_free(s);
    }
}

#[test]
fn error_codes() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ck_space_from_json(c("{not json").as_ptr(), &mut s) }, CkStatus::Malformed);
    assert!(!last_error().is_empty());
    assert!(s.is_null());
    assert_eq!(unsafe { ck_space_from_json(ptr::null(), &mut s) }, CkStatus::NullPointer);
    assert!(last_error().contains("null"));

    let bad = [0xffu8, 0];
    assert_eq!(unsafe { ck_space_from_json(bad.as_ptr().cast(), &mut s) }, CkStatus::Utf8);

    let z = space(r#"{"kind":"grid","dim":1}"#);
    let mut d = 0;
    let st = unsafe { ck_space_dist(z, c("[1]").as_ptr(), c(r#""a""#).as_ptr(), &mut d) };
    assert_eq!(st, CkStatus::Malformed);

    let tampered = r#"{"schema":"coarsekit/1","type":"cover","space":{"kind":"grid","dim":1},
        "window":{"points":[[0],[1],[2]]},"r":1,"bound":0,"colors":[[[[0],[1],[2]]]]}"#;
    assert_eq!(unsafe { ck_verify_json(c(tampered).as_ptr(), ptr::null_mut()) }, CkStatus::VerificationFailed);
    unsafe { ck_space_free(z) };

    // success clears the error
    let s = space(r#"{"kind":"grid","dim":2}"#);
    assert!(ck_last_error().is_null());
    unsafe { ck_space_free(s) };
}

#[test]
fn nulls_are_tolerated_by_free_and_len() {
    unsafe {
        ck_space_free(ptr::null_mut());
        ck_window_free(ptr::null_mut());
        ck_string_free(ptr::null_mut());
        assert_eq!(ck_window_len(ptr::null()), 0);
    }
    let v = unsafe { CStr::from_ptr(ck_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/coarsekit.h");
    let src = std::env::temp_dir().join(format!("coarsekit_header_{}.c", std::process::id()));
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ CkStatus s = CK_STATUS_OK; return (int)s; }}\n")).unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
