use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use tdm_core::exact::verify_farkas;
use tdm_core::matrix::CandidateMatrix;
use tdm_ffi::*;

fn new_matrix(rows: &[&[f64]], mode: TdmMode) -> (TdmStatus, *mut TdmMatrix) {
    let d = rows.len();
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let mut m = ptr::null_mut();
    let s = unsafe { tdm_matrix_new(d, flat.as_ptr(), mode, &mut m) };
    (s, m)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tdm_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn member_with_certificate() {
    let rows: [&[f64]; 3] = [&[1.0, 0.5, 0.25], &[0.5, 1.0, 0.5], &[0.25, 0.5, 1.0]];
    let (s, m) = new_matrix(&rows, TdmMode::Tdm);
    assert_eq!(s, TdmStatus::Ok);
    assert_eq!(unsafe { tdm_matrix_dim(m) }, 3);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { tdm_check(m, TdmMethod::Full, &mut v) }, TdmStatus::Ok);
    assert_eq!(unsafe { tdm_verdict_member(v) }, 1);

    // Rebuild T/d from the atoms and compare.
    let n = unsafe { tdm_verdict_certificate_len(v) };
    assert!(n > 0);
    let mut acc = [[0.0f64; 3]; 3];
    for k in 0..n {
        let (mut bits, mut w) = (0u64, 0.0f64);
        assert_eq!(unsafe { tdm_verdict_certificate_atom(v, k, &mut bits, &mut w) }, TdmStatus::Ok);
        assert!(w >= -1e-12);
        for i in 0..3 {
            for j in 0..3 {
                if bits >> i & 1 == 1 && bits >> j & 1 == 1 {
                    acc[i][j] += w;
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            assert!((acc[i][j] - rows[i][j] / 3.0).abs() < 1e-9);
        }
    }
    let (mut b, mut w) = (0u64, 0.0);
    assert_eq!(unsafe { tdm_verdict_certificate_atom(v, n, &mut b, &mut w) }, TdmStatus::OutOfRange);
    assert_eq!(unsafe { tdm_verdict_farkas_len(v) }, 0);

    let json = unsafe { CStr::from_ptr(tdm_verdict_json(v)) }.to_str().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(parsed["member"], serde_json::json!(true));
    assert_eq!(parsed["path"], serde_json::json!("full"));
    unsafe {
        tdm_verdict_free(v);
        tdm_matrix_free(m);
    }
}

#[test]
fn non_member_ray_separates() {
    let rows: [&[f64]; 3] = [&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.6], &[0.5, 0.6, 1.0]];
    let (s, m) = new_matrix(&rows, TdmMode::Tdm);
    assert_eq!(s, TdmStatus::Ok);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { tdm_check(m, TdmMethod::Full, &mut v) }, TdmStatus::Ok);
    assert_eq!(unsafe { tdm_verdict_member(v) }, 0);
    let len = unsafe { tdm_verdict_farkas_len(v) };
    assert_eq!(len, 7);
    let mut ray = vec![0.0; len];
    assert_eq!(unsafe { tdm_verdict_farkas(v, ray.as_mut_ptr(), 3) }, TdmStatus::OutOfRange);
    assert_eq!(unsafe { tdm_verdict_farkas(v, ray.as_mut_ptr(), len) }, TdmStatus::Ok);
    let b = CandidateMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap().scaled(1.0 / 3.0);
    assert!(verify_farkas(&b, &ray));
    unsafe {
        tdm_verdict_free(v);
        tdm_matrix_free(m);
    }
}

#[test]
fn errors_are_reported() {
    let rows: [&[f64]; 2] = [&[0.9, 0.2], &[0.2, 1.0]];
    let (s, m) = new_matrix(&rows, TdmMode::Tdm);
    assert_eq!(s, TdmStatus::InvalidMatrix);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    assert!(!unsafe { CStr::from_ptr(tdm_status_str(s)) }.to_bytes().is_empty());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { tdm_matrix_new(2, ptr::null(), TdmMode::Bcm, &mut out) }, TdmStatus::NullPointer);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { tdm_check(ptr::null(), TdmMethod::Auto, &mut v) }, TdmStatus::NullPointer);
    assert!(v.is_null());
    assert_eq!(unsafe { tdm_verdict_member(ptr::null()) }, -1);
    assert_eq!(unsafe { tdm_matrix_dim(ptr::null()) }, 0);
    unsafe {
        tdm_matrix_free(ptr::null_mut());
        tdm_verdict_free(ptr::null_mut());
    }
    assert_eq!(tdm_set_tolerance(-1.0), TdmStatus::InvalidArgument);
    assert_eq!(tdm_set_tolerance(f64::NAN), TdmStatus::InvalidArgument);
}

#[test]
fn closed_forms() {
    let mut x = 0.0;
    assert_eq!(unsafe { tdm_equi_beta_lower(0.5, 4, &mut x) }, TdmStatus::Ok);
    assert!((x - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(unsafe { tdm_equi_beta_lower(1.5, 4, &mut x) }, TdmStatus::InvalidArgument);
    assert_eq!(unsafe { tdm_two_sector_gamma_upper(0.0, 0.0, 2, 2, &mut x) }, TdmStatus::Ok);
    assert!((x - 0.5).abs() < 1e-9);
    assert_eq!(unsafe { tdm_two_sector_gamma_upper(0.0, 0.0, 0, 2, &mut x) }, TdmStatus::InvalidArgument);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tdm.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for f in [
        "tdm_last_error", "tdm_status_str", "tdm_set_tolerance", "tdm_tolerance", "tdm_matrix_new", "tdm_matrix_free",
        "tdm_matrix_dim", "tdm_check", "tdm_verdict_free", "tdm_verdict_member", "tdm_verdict_certificate_len",
        "tdm_verdict_certificate_atom", "tdm_verdict_farkas_len", "tdm_verdict_farkas", "tdm_verdict_json",
        "tdm_equi_beta_lower", "tdm_two_sector_gamma_upper",
    ] {
        let declared = [" ", "*"].iter().any(|pre| text.contains(&format!("{pre}{f}(")));
        assert!(declared, "{f} missing from header");
    }
    assert!(text.contains("typedef struct TdmMatrix TdmMatrix;"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "tdm.h"

int main(void) {
    const double ok[9] = {1, .5, .25, .5, 1, .5, .25, .5, 1};
    const double bad[9] = {1, 0, .5, 0, 1, .6, .5, .6, 1};
    TdmMatrix *m = NULL;
    TdmVerdict *v = NULL;
    if (tdm_matrix_new(3, ok, TDM_MODE_TDM, &m) != TDM_STATUS_OK) return 10;
    if (tdm_check(m, TDM_METHOD_AUTO, &v) != TDM_STATUS_OK) return 11;
    if (tdm_verdict_member(v) != 1) return 12;
    tdm_verdict_free(v);
    tdm_matrix_free(m);
    if (tdm_matrix_new(3, bad, TDM_MODE_TDM, &m) != TDM_STATUS_OK) return 20;
    if (tdm_check(m, TDM_METHOD_FULL, &v) != TDM_STATUS_OK) return 21;
    if (tdm_verdict_member(v) != 0 || tdm_verdict_farkas_len(v) != 7) return 22;
    tdm_verdict_free(v);
    tdm_matrix_free(m);
    if (tdm_matrix_new(3, bad, TDM_MODE_BCM, NULL) != TDM_STATUS_NULL_POINTER) return 30;
    if (strlen(tdm_last_error()) == 0) return 31;
    puts("c ok");
    return 0;
}
"#;

/// Static library built alongside this test, if cargo produced one.
fn static_lib() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.join("libtdm_ffi.a"), deps.parent()?.join("libtdm_ffi.a")].into_iter().find(|p| p.exists())
}

#[test]
fn c_program_links_and_runs() {
    let (Some(lib), Ok(_)) = (static_lib(), Command::new("cc").arg("--version").output()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "c ok");
}
