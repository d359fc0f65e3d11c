use std::ffi::{c_char, CStr};
use std::ptr;

use entreg_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { entreg_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

/// Row-major 3×4 matrix with orthogonal-ish columns and `f = 2·col1 − col3`.
fn problem() -> (Vec<f64>, Vec<f64>, usize, usize) {
    let (rows, cols) = (12, 4);
    let mut m = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            m.push(((i * (j + 2)) as f64 * 0.7).sin() + (j as f64) * 0.1);
        }
    }
    let f = (0..rows).map(|i| 2.0 * m[i * cols + 1] - m[i * cols + 3]).collect();
    (m, f, rows, cols)
}

#[test]
fn least_squares_round_trip() {
    let (m, f, rows, cols) = problem();
    let mut basis = ptr::null_mut();
    let st = unsafe { entreg_basis_from_matrix(m.as_ptr(), rows, cols, &mut basis) };
    assert_eq!(st, EntregStatus::Ok);
    assert_eq!(unsafe { entreg_basis_n_rows(basis) }, rows);
    assert_eq!(unsafe { entreg_basis_n_cols(basis) }, cols);

    let mut sol = ptr::null_mut();
    let st = unsafe { entreg_solve(basis, f.as_ptr(), f.len(), EntregSolver::Ls, f64::NAN, 0, &mut sol) };
    assert_eq!(st, EntregStatus::Ok);
    assert_eq!(unsafe { entreg_solution_len(sol) }, cols);
    let mut a = vec![0.0; cols];
    assert_eq!(unsafe { entreg_solution_coefficients(sol, a.as_mut_ptr(), a.len()) }, EntregStatus::Ok);
    for (got, want) in a.iter().zip([0.0, 2.0, 0.0, -1.0]) {
        assert!((got - want).abs() < 1e-9, "{a:?}");
    }
    assert!(unsafe { entreg_solution_residual_norm(sol) } < 1e-9);
    assert_eq!(unsafe { entreg_solution_converged(sol) }, 1);
    unsafe {
        entreg_solution_free(sol);
        entreg_basis_free(basis);
    }
}

#[test]
fn sindy_support_via_buffer() {
    let (m, f, rows, cols) = problem();
    let mut basis = ptr::null_mut();
    unsafe { entreg_basis_from_matrix(m.as_ptr(), rows, cols, &mut basis) };
    let mut sol = ptr::null_mut();
    let st = unsafe { entreg_solve(basis, f.as_ptr(), f.len(), EntregSolver::Sindy, 0.5, 0, &mut sol) };
    assert_eq!(st, EntregStatus::Ok);
    let n = unsafe { entreg_solution_support_len(sol) };
    assert_eq!(n, 2);
    let mut small = [0usize; 1];
    let st = unsafe { entreg_solution_support(sol, small.as_mut_ptr(), small.len()) };
    assert_eq!(st, EntregStatus::BufferTooSmall);
    assert!(last_error().contains("needed"));
    let mut idx = vec![0usize; n];
    assert_eq!(unsafe { entreg_solution_support(sol, idx.as_mut_ptr(), n) }, EntregStatus::Ok);
    assert_eq!(idx, [1, 3]);
    unsafe {
        entreg_solution_free(sol);
        entreg_basis_free(basis);
    }
}

#[test]
fn polynomial_basis_from_states() {
    // Two states in two variables, degree 2: 1, z1, z2, z1², z1z2, z2².
    let states = [2.0, 3.0, 1.0, -1.0];
    let mut basis = ptr::null_mut();
    let st = unsafe { entreg_basis_from_states(states.as_ptr(), 2, 2, 2, &mut basis) };
    assert_eq!(st, EntregStatus::Ok);
    assert_eq!(unsafe { entreg_basis_n_cols(basis) }, 6);
    unsafe { entreg_basis_free(basis) };
}

#[test]
fn entropic_regression_finds_single_term() {
    let rows = 300;
    let cols = 5;
    let mut m = Vec::with_capacity(rows * cols);
    let mut s = 0x2545_f491_4f6c_dd1d_u64;
    for _ in 0..rows * cols {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        m.push((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    }
    let f: Vec<f64> = (0..rows).map(|i| 3.0 * m[i * cols + 2]).collect();
    let mut basis = ptr::null_mut();
    unsafe { entreg_basis_from_matrix(m.as_ptr(), rows, cols, &mut basis) };
    let mut opts = entreg_er_options_default();
    assert_eq!((opts.knn_k, opts.n_shuffles), (2, 100));
    opts.n_shuffles = 20;
    let mut sol = ptr::null_mut();
    let st = unsafe { entreg_er_solve(basis, f.as_ptr(), f.len(), &opts, &mut sol) };
    assert_eq!(st, EntregStatus::Ok, "{}", last_error());
    let mut idx = [0usize; 5];
    unsafe { entreg_solution_support(sol, idx.as_mut_ptr(), idx.len()) };
    assert_eq!(unsafe { entreg_solution_support_len(sol) }, 1);
    assert_eq!(idx[0], 2);
    unsafe {
        entreg_solution_free(sol);
        entreg_basis_free(basis);
    }
}

#[test]
fn mutual_information_of_identical_and_conditioned_samples() {
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.618_033_988_75).fract()).collect();
    let y: Vec<f64> = x.iter().map(|v| v + 0.1 * ((v * 977.0).sin())).collect();
    let mut mi = 0.0;
    assert_eq!(unsafe { entreg_estimate_mi(x.as_ptr(), y.as_ptr(), n, 2, &mut mi) }, EntregStatus::Ok);
    assert!(mi > 1.0, "{mi}");
    let mut cmi = f64::NAN;
    let st = unsafe { entreg_estimate_cmi(x.as_ptr(), y.as_ptr(), x.as_ptr(), n, 2, &mut cmi) };
    assert_eq!(st, EntregStatus::Ok);
    assert!(cmi.abs() < 0.1, "{cmi}");
}

#[test]
fn errors_are_reported_not_thrown() {
    let mut basis = ptr::null_mut();
    let st = unsafe { entreg_basis_from_matrix(ptr::null(), 3, 2, &mut basis) };
    assert_eq!(st, EntregStatus::NullPointer);
    assert!(basis.is_null());
    assert!(last_error().contains("values"));

    let (m, f, rows, cols) = problem();
    unsafe { entreg_basis_from_matrix(m.as_ptr(), rows, cols, &mut basis) };
    let mut sol = ptr::null_mut();
    let st = unsafe { entreg_solve(basis, f.as_ptr(), f.len() - 1, EntregSolver::Ls, f64::NAN, 0, &mut sol) };
    assert_eq!(st, EntregStatus::DimensionMismatch);
    assert!(sol.is_null());
    let st = unsafe { entreg_solve(basis, f.as_ptr(), f.len(), EntregSolver::Sindy, -1.0, 0, &mut sol) };
    assert_eq!(st, EntregStatus::InvalidArgument);
    let needed = unsafe { entreg_last_error_message(ptr::null_mut(), 0) };
    assert!(needed > 0);

    let mut out = 0.0;
    let st = unsafe { entreg_estimate_mi(m.as_ptr(), m.as_ptr(), 2, 5, &mut out) };
    assert_ne!(st, EntregStatus::Ok);

    unsafe {
        entreg_basis_free(basis);
        entreg_basis_free(ptr::null_mut());
        entreg_solution_free(ptr::null_mut());
    }
    assert_eq!(unsafe { entreg_solution_len(ptr::null()) }, 0);
    assert!(unsafe { entreg_solution_residual_norm(ptr::null()) }.is_nan());
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(entreg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/entreg.h")).unwrap();
    for name in [
        "entreg_last_error_message",
        "entreg_version",
        "entreg_basis_from_states",
        "entreg_basis_from_matrix",
        "entreg_basis_free",
        "entreg_solve",
        "entreg_er_options_default",
        "entreg_er_solve",
        "entreg_solution_coefficients",
        "entreg_solution_support",
        "entreg_solution_free",
        "entreg_estimate_mi",
        "entreg_estimate_cmi",
        "typedef struct EntregBasis EntregBasis",
        "ENTREG_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C client against the static library when a C
/// compiler is on the PATH.
#[test]
fn c_client_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target");
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libentreg_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "entreg.h"
int main(void) {
    double m[] = {1, 0, 0, 1, 1, 1, 2, -1};
    double f[] = {2, -1, 1, 5};
    EntregBasis *b = NULL;
    if (entreg_basis_from_matrix(m, 4, 2, &b) != ENTREG_STATUS_OK) return 1;
    EntregSolution *s = NULL;
    if (entreg_solve(b, f, 4, ENTREG_SOLVER_LS, NAN, 0, &s) != ENTREG_STATUS_OK) return 2;
    double a[2];
    if (entreg_solution_coefficients(s, a, 2) != ENTREG_STATUS_OK) return 3;
    entreg_solution_free(s);
    entreg_basis_free(b);
    if (fabs(a[0] - 2) > 1e-9 || fabs(a[1] + 1) > 1e-9) return 4;
    printf("ok %s\n", entreg_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("client");
    let status = std::process::Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("entreg-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
