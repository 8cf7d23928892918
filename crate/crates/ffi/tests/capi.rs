use joyce_ffi::*;
use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn cx(re: f64, im: f64) -> JoyceComplex {
    JoyceComplex { re, im }
}

fn last_error() -> String {
    unsafe {
        let n = joyce_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; n];
        joyce_last_error(buf.as_mut_ptr(), n);
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn dilogarithm_at_one() {
    let mut v = cx(0.0, 0.0);
    let s = unsafe { joyce_polylog(2, cx(1.0, 0.0), &mut v) };
    assert_eq!(s, JoyceStatus::Ok);
    assert!((v.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
    assert_eq!(unsafe { joyce_last_error(ptr::null_mut(), 0) }, 0);
}

#[test]
fn null_output_is_reported() {
    let s = unsafe { joyce_lambda(cx(2.0, 1.0), cx(0.0, 0.0), ptr::null_mut()) };
    assert_eq!(s, JoyceStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn library_errors_map_to_status() {
    let mut h = ptr::null_mut();
    let s = unsafe { joyce_a2_point_new(cx(0.0, 0.0), cx(0.0, 0.0), &mut h) };
    assert_eq!(s, JoyceStatus::OnDiscriminant);
    assert!(h.is_null());
    assert!(last_error().starts_with("ON_DISCRIMINANT"));

    let mut out = cx(0.0, 0.0);
    let s = unsafe { joyce_polylog(1, cx(1.0, 0.0), &mut out) };
    assert_ne!(s, JoyceStatus::Ok);
}

#[test]
fn truncated_error_buffer_is_terminated() {
    unsafe { joyce_lambda(cx(1.0, 0.0), cx(0.0, 0.0), ptr::null_mut()) };
    let mut buf = [1 as std::ffi::c_char; 5];
    let n = unsafe { joyce_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > buf.len());
    assert_eq!(buf[4], 0);
}

#[test]
fn structure_handle_round_trip() {
    let json = CString::new(
        r#"{"rank": 2, "skew": [[0, 1], [-1, 0]], "central_charge": [[1, 0], [0, 1]],
            "omega": [{"class": [1, 0], "value": "1"}, {"class": [-1, 0], "value": "1"},
                      {"class": [2, 0], "value": "1/4"}, {"class": [-2, 0], "value": "1/4"}]}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { joyce_structure_from_json(json.as_ptr(), &mut h) }, JoyceStatus::Ok);
    let mut rank = 0usize;
    assert_eq!(unsafe { joyce_structure_rank(h, &mut rank) }, JoyceStatus::Ok);
    assert_eq!(rank, 2);
    let (mut n, mut d) = (0i64, 0i64);
    let g = [-2i64, 0];
    assert_eq!(unsafe { joyce_structure_omega(h, g.as_ptr(), 2, &mut n, &mut d) }, JoyceStatus::Ok);
    assert_eq!((n, d), (1, 4));
    assert_eq!(unsafe { joyce_structure_omega(h, g.as_ptr(), 1, &mut n, &mut d) }, JoyceStatus::Dimension);
    unsafe { joyce_structure_free(h) };

    let bad = CString::new("{").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { joyce_structure_from_json(bad.as_ptr(), &mut h) }, JoyceStatus::InvalidInput);
}

#[test]
fn a2_joyce_form_is_constant() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { joyce_a2_point_new(cx(0.7, 0.3), cx(-0.4, 0.9), &mut h) }, JoyceStatus::Ok);
    let mut z = [cx(0.0, 0.0); 2];
    assert_eq!(unsafe { joyce_a2_periods(h, z.as_mut_ptr()) }, JoyceStatus::Ok);
    assert!(z.iter().all(|v| v.im > 0.0));
    let mut g = [cx(0.0, 0.0); 4];
    let mut err = f64::NAN;
    assert_eq!(unsafe { joyce_a2_joyce_form(h, 1e-3, g.as_mut_ptr(), &mut err) }, JoyceStatus::Ok);
    assert!(err < 1e-8);
    let off = 2.0 * std::f64::consts::PI / 5.0;
    assert!((g[1].im - off).abs() < 1e-8 && (g[2].im - off).abs() < 1e-8);
    unsafe { joyce_a2_point_free(h) };
}

fn static_lib() -> Option<PathBuf> {
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.join("../libjoyce_ffi.a"), deps.join("libjoyce_ffi.a")].into_iter().find(|p| p.exists())
}

/// Compiles a small C program against the generated header and links it
/// with the static library, when a C compiler is around.
#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not found; skipping");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = std::env::temp_dir().join(format!("joyce-capi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "joyce.h"
int main(void) {
    JoyceComplex v;
    JoyceComplex one = {1.0, 0.0};
    if (joyce_polylog(2, one, &v) != JOYCE_STATUS_OK) return 1;
    JoyceA2Point *p = NULL;
    JoyceComplex zero = {0.0, 0.0};
    if (joyce_a2_point_new(zero, zero, &p) != JOYCE_STATUS_ON_DISCRIMINANT) return 2;
    char msg[128];
    joyce_last_error(msg, sizeof msg);
    printf("%.15f %s %s\n", v.re, joyce_version(), msg);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("capi");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("1.644934066848226"), "{text}");
    assert!(text.contains("ON_DISCRIMINANT"));
}
