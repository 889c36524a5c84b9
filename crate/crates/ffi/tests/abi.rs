use std::ffi::{c_char, CString};
use std::ptr;

use hodograph_ffi::*;

fn demo(name: &str, initial: bool) -> *mut HgProblem {
    let name = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    let s = unsafe { hg_problem_from_demo(name.as_ptr(), initial as i32, &mut p) };
    assert_eq!(s, HgStatus::Ok);
    p
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { hg_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|c| *c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn version() {
    assert_eq!(hg_abi_version(), HG_ABI_VERSION);
}

#[test]
fn hodograph_side() {
    let p = demo("ex61", false);
    unsafe {
        let mut n = 0;
        assert_eq!(hg_problem_dim(p, &mut n), HgStatus::Ok);
        assert_eq!(n, 2);

        let u = [0.0, 0.0];
        let mut m = [0.0; 4];
        assert_eq!(hg_build_m(p, u.as_ptr(), 2, 0.5, m.as_mut_ptr()), HgStatus::Ok);
        // J_f(0) = [[-1, 2], [1, -1]]
        assert_eq!(m, [-0.5, 2.0, 1.0, -0.5]);

        let mut c = [0.0; 2];
        assert_eq!(hg_charpoly(p, u.as_ptr(), 2, c.as_mut_ptr()), HgStatus::Ok);
        assert!((c[0] + 1.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12);

        let mut b = [0.0; 2];
        let mut count = 0;
        assert_eq!(hg_real_branches(p, u.as_ptr(), 2, b.as_mut_ptr(), 2, &mut count), HgStatus::Ok);
        assert_eq!(count, 2);
        assert!((b[0] - (1.0 - 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(hg_real_branches(p, u.as_ptr(), 2, b.as_mut_ptr(), 1, &mut count), HgStatus::BufferTooSmall);
        assert_eq!(count, 2);

        let (mut t_c, mut u_c, mut x_c) = (0.0, [0.0; 2], [0.0; 2]);
        let s = hg_catastrophe_search(p, 1, 64, 0, &mut t_c, u_c.as_mut_ptr(), x_c.as_mut_ptr());
        assert_eq!(s, HgStatus::Ok);
        assert!((t_c - (1.0 + 2f64.sqrt())).abs() < 1e-6);

        let x = [0.1, -0.05];
        let mut sol = [0.0; 2];
        assert_eq!(hg_solve_u(p, x.as_ptr(), 2, 0.5, u.as_ptr(), sol.as_mut_ptr()), HgStatus::Ok);
        // x = u t + f(u) with f = (-atanh u + 2 atanh v, atanh u - atanh v)
        let f = [-sol[0].atanh() + 2.0 * sol[1].atanh(), sol[0].atanh() - sol[1].atanh()];
        for k in 0..2 {
            assert!((sol[k] * 0.5 + f[k] - x[k]).abs() < 1e-10);
        }

        assert_eq!(hg_build_m(p, u.as_ptr(), 3, 0.5, m.as_mut_ptr()), HgStatus::Dimension);
        assert!(last_error().contains("expected 2"));
        assert_eq!(hg_eigentimes(p, u.as_ptr(), 2, b.as_mut_ptr(), 2, &mut count), HgStatus::WrongModel);
        hg_problem_free(p);
    }
}

#[test]
fn initial_data_side() {
    let p = demo("ex64", true);
    unsafe {
        let (mut t_c, mut u_c, mut x_c) = (0.0, [0.0; 2], [0.0; 2]);
        let s = hg_direct_catastrophe(p, 64, 0, &mut t_c, u_c.as_mut_ptr(), x_c.as_mut_ptr());
        assert_eq!(s, HgStatus::Ok);
        assert!((t_c - 0.7281359).abs() < 1e-4);
        let x0 = [0.3721106, 0.45806095];
        let mut times = [0.0; 2];
        let mut count = 0;
        assert_eq!(hg_eigentimes(p, x0.as_ptr(), 2, times.as_mut_ptr(), 2, &mut count), HgStatus::Ok);
        assert!(times[..count].iter().any(|t| (t - t_c).abs() < 1e-4));
        hg_problem_free(p);
    }
}

#[test]
fn errors() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("dimension = 2\nhodograph = [\"u +* v\", \"v\"]\n").unwrap();
        assert_eq!(hg_problem_from_toml(bad.as_ptr(), &mut p), HgStatus::Setup);
        assert!(p.is_null());
        assert!(!last_error().is_empty());

        let name = CString::new("ex62").unwrap();
        assert_eq!(hg_problem_from_demo(name.as_ptr(), 0, ptr::null_mut()), HgStatus::NullPointer);
        assert_eq!(hg_problem_dim(ptr::null(), ptr::null_mut()), HgStatus::NullPointer);

        let src = CString::new("dimension = 2\nhodograph = [\"-u\", \"-v/2\"]\n[domain]\nlower = [-1, -1]\nupper = [1, 1]\n").unwrap();
        assert_eq!(hg_problem_from_toml(src.as_ptr(), &mut p), HgStatus::Ok);
        let (mut t_c, mut u_c, mut x_c) = (0.0, [0.0; 2], [0.0; 2]);
        let s = hg_catastrophe_search(p, 0, 16, 0, &mut t_c, u_c.as_mut_ptr(), x_c.as_mut_ptr());
        assert_eq!(s, HgStatus::NoBranch);
        hg_problem_free(p);
        hg_problem_free(ptr::null_mut());
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "hodograph.h"

int main(void) {
    HgProblem *p = NULL;
    if (hg_problem_from_demo("ex81", 0, &p) != HG_STATUS_OK) return 1;
    double t_c, u_c[3], x_c[3];
    HgStatus s = hg_catastrophe_search(p, 1, 64, 0, &t_c, u_c, x_c);
    hg_problem_free(p);
    if (s != HG_STATUS_OK) return 2;
    printf("%.9f\n", t_c);
    return fabs(t_c - 2.0) < 1e-6 ? 0 : 3;
}
"#;

/// Compiles and runs a C client against the header and static library.
#[test]
fn c_client_links_and_runs() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    // target/<profile>/deps/abi-* → target/<profile>
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    assert!(lib_dir.join("libhodograph_ffi.a").exists(), "static library not built");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg(lib_dir.join("libhodograph_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .expect("C compiler available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "client exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "2.000000000");
}
