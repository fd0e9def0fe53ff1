use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kgs_ffi::*;

fn last_error() -> String {
    let p = kgs_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn talenti() -> f64 {
    3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0)
}

#[test]
fn thresholds_round_trip() {
    let (mut t0, mut s0, mut c, mut res) = (0.0, 0.0, 0.0, 1.0);
    unsafe {
        assert_eq!(
            kgs_solve_ts(1.0, 1.0, talenti(), 1.0, &mut t0, &mut s0),
            KgsStatus::Ok
        );
        assert_eq!(
            kgs_critical_level(1.0, 1.0, talenti(), 1.0, &mut c),
            KgsStatus::Ok
        );
        assert_eq!(
            kgs_threshold_consistency(1.0, 1.0, talenti(), 1.0, &mut res),
            KgsStatus::Ok
        );
    }
    // Independent check of the fixed point u = A u^{1/3} + B u^{2/3}.
    let u = t0 + s0;
    let s = talenti();
    assert!((t0 - s * u.cbrt()).abs() < 1e-10 * t0);
    assert!((s0 - s * s * u.cbrt().powi(2)).abs() < 1e-10 * s0);
    assert!((t0 / 3.0 + s0 / 12.0 - c).abs() < 1e-10 * c);
    assert!(res < 1e-10);
}

#[test]
fn null_outputs_are_rejected_without_writes() {
    let mut t0 = 7.0;
    let s = unsafe { kgs_solve_ts(1.0, 1.0, 1.0, 1.0, &mut t0, ptr::null_mut()) };
    assert_eq!(s, KgsStatus::NullPointer);
    assert_eq!(t0, 7.0);
    assert!(last_error().contains("s0"));
    assert_eq!(
        unsafe { kgs_ground_state_level(ptr::null(), &mut t0) },
        KgsStatus::NullPointer
    );
    unsafe { kgs_ground_state_free(ptr::null_mut()) };
}

#[test]
fn domain_errors_map_to_status() {
    let mut x = 0.0;
    assert_eq!(
        unsafe { kgs_sobolev_constant(-1.0, 100, &mut x) },
        KgsStatus::Domain
    );
    assert_eq!(
        unsafe { kgs_critical_level(1.0, 0.0, 1.0, 1.0, &mut x) },
        KgsStatus::Domain
    );
    assert!(last_error().contains("b must be positive"));
}

#[test]
fn sobolev_constant_is_close_to_closed_form() {
    let mut s = 0.0;
    assert_eq!(
        unsafe { kgs_sobolev_constant(60.0, 12000, &mut s) },
        KgsStatus::Ok
    );
    assert!((s - talenti()).abs() < 1e-3, "{s}");
}

fn problem(max_iter: usize) -> KgsConstantProblem {
    KgsConstantProblem {
        a: 1.0,
        b: 1.0,
        p: 5.0,
        k: 1.0,
        tau: 1.0,
        nu: 1.0,
        radius: 12.0,
        nodes: 600,
        tol: 1e-8,
        max_iter,
    }
}

#[test]
fn constant_ground_state_handle() {
    let mut h: *mut KgsGroundState = ptr::null_mut();
    assert_eq!(
        unsafe { kgs_solve_constant(&problem(50_000), &mut h) },
        KgsStatus::Ok
    );
    assert!(!h.is_null());
    let (mut level, mut res, mut conv, mut len) = (0.0, 1.0, 0, 0usize);
    unsafe {
        assert_eq!(kgs_ground_state_level(h, &mut level), KgsStatus::Ok);
        assert_eq!(kgs_ground_state_nehari_residual(h, &mut res), KgsStatus::Ok);
        assert_eq!(kgs_ground_state_converged(h, &mut conv), KgsStatus::Ok);
        assert_eq!(kgs_ground_state_len(h, &mut len), KgsStatus::Ok);
    }
    assert_eq!(conv, 1);
    assert_eq!(len, 600);
    assert!(level > 0.0 && res.abs() < 1e-6 * level.max(1.0));
    let mut short = vec![0.0; len - 1];
    assert_eq!(
        unsafe { kgs_ground_state_copy_values(h, short.as_mut_ptr(), short.len()) },
        KgsStatus::BufferTooSmall
    );
    let mut buf = vec![0.0; len];
    assert_eq!(
        unsafe { kgs_ground_state_copy_values(h, buf.as_mut_ptr(), len) },
        KgsStatus::Ok
    );
    assert!(buf.iter().all(|&v| v >= 0.0) && buf[0] > buf[len - 1]);
    unsafe { kgs_ground_state_free(h) };
}

#[test]
fn iteration_cap_still_returns_a_handle() {
    let mut h: *mut KgsGroundState = ptr::null_mut();
    assert_eq!(
        unsafe { kgs_solve_constant(&problem(1), &mut h) },
        KgsStatus::NonConvergence
    );
    assert!(!h.is_null());
    let mut conv = 1;
    assert_eq!(
        unsafe { kgs_ground_state_converged(h, &mut conv) },
        KgsStatus::Ok
    );
    assert_eq!(conv, 0);
    unsafe { kgs_ground_state_free(h) };
}

#[test]
fn bad_exponent_yields_no_handle() {
    let mut h: *mut KgsGroundState = ptr::dangling_mut();
    let mut p = problem(10);
    p.p = 7.0;
    assert_eq!(unsafe { kgs_solve_constant(&p, &mut h) }, KgsStatus::Domain);
    assert!(h.is_null());
}

const C_SOURCE: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include "kgs.h"

int main(void) {
    double c = 0.0;
    if (kgs_critical_level(1.0, 1.0, 1.0, 1.0, &c) != KGS_STATUS_OK) return 1;
    if (kgs_critical_level(-1.0, 1.0, 1.0, 1.0, &c) != KGS_STATUS_DOMAIN) return 2;
    if (kgs_last_error() == NULL) return 3;
    KgsConstantProblem pr = {1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 10.0, 200, 1e-6, 20000};
    KgsGroundState *h = NULL;
    if (kgs_solve_constant(&pr, &h) != KGS_STATUS_OK) return 4;
    size_t n = 0;
    kgs_ground_state_len(h, &n);
    double *v = malloc(n * sizeof(double));
    if (kgs_ground_state_copy_values(h, v, n) != KGS_STATUS_OK) return 5;
    double level = 0.0;
    kgs_ground_state_level(h, &level);
    printf("%zu %.17g %.17g\n", n, level, v[0]);
    free(v);
    kgs_ground_state_free(h);
    return 0;
}
"#;

/// Compiles a C client against the header and the static library.
#[test]
fn c_client_links_against_header() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // tests run from target/<profile>/deps
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libkgs_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&src, C_SOURCE).unwrap();
    let build = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let text = String::from_utf8(run.stdout).unwrap();
    let parts: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(parts[0], "200");
    let level: f64 = parts[1].parse().unwrap();
    assert!(level > 0.0);
}
