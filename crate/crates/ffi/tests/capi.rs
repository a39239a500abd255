use std::ffi::{CStr, CString};
use std::ptr;

use spl_ffi::*;

fn last_error() -> String {
    let p = spl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn eigenvalue_through_the_abi() {
    let mut lambda = 0.0;
    let mut values = vec![0.0; 257];
    let s = unsafe { spl_eigen_interval(0.0, 1.0, 256, 2.0, &mut lambda, values.as_mut_ptr(), values.len()) };
    assert_eq!(s, SplStatus::Ok);
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((lambda / pi2 - 1.0).abs() < 5e-3);
    assert_eq!(values.iter().copied().fold(0.0, f64::max), 1.0);
    let s = unsafe { spl_eigen_interval(0.0, 1.0, 256, 2.0, &mut lambda, values.as_mut_ptr(), 10) };
    assert_eq!(s, SplStatus::BufferTooSmall);
    let s = unsafe { spl_eigen_interval(0.0, 1.0, 16, 0.5, &mut lambda, ptr::null_mut(), 0) };
    assert_eq!(s, SplStatus::ConfigError);
    assert!(last_error().contains('p'));
}

#[test]
fn config_errors_list_every_violation() {
    let text = CString::new("case = \"II\"\nq = 1.2\nr = 1.0\nwat = 3").unwrap();
    let mut cfg = ptr::null_mut();
    let s = unsafe { spl_config_from_toml(text.as_ptr(), ptr::null(), &mut cfg) };
    assert_eq!(s, SplStatus::ConfigError);
    assert!(cfg.is_null());
    let msg = last_error();
    for needle in ["q must lie in (0,1)", "open interval", "unknown key `wat`"] {
        assert!(msg.contains(needle), "{msg}");
    }
}

#[test]
fn case1_run_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let text = CString::new("case = \"I\"\nlambda = 1.0\nresolution = 128\n[f]\nkind = \"affine\"\nc0 = 1.0\nc1 = 1.0").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(spl_config_from_toml(text.as_ptr(), ptr::null(), &mut cfg), SplStatus::Ok);
        assert_eq!(spl_config_set_output(cfg, out.as_ptr()), SplStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(spl_run(cfg, &mut res), SplStatus::Ok, "{}", last_error());
        assert_eq!(spl_result_status(res), SplCertificate::Pass);
        let mut c = SplCertificate::Fail;
        let name = CString::new("order").unwrap();
        assert_eq!(spl_result_certificate(res, name.as_ptr(), &mut c), SplStatus::Ok);
        assert_eq!(c, SplCertificate::Pass);
        let bogus = CString::new("bogus").unwrap();
        assert_eq!(spl_result_certificate(res, bogus.as_ptr(), &mut c), SplStatus::UnknownName);
        let json = CStr::from_ptr(spl_result_report_json(res)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(json).unwrap();
        assert_eq!(v["status"], "pass");
        spl_result_free(res);
        spl_config_free(cfg);
    }
    assert!(dir.path().join("u.csv").exists());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spl.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "header lacks {name}");
    }
    assert!(header.contains("typedef struct SplConfig SplConfig;"));
    assert!(header.contains("SPL_STATUS_CONFIG_ERROR = 2"));
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_against_the_library() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libspl_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <math.h>
#include "spl.h"
int main(void) {
    double lambda = 0.0;
    double v[129];
    if (spl_eigen_interval(0.0, 1.0, 128, 2.0, &lambda, v, 129) != SPL_STATUS_OK) return 10;
    if (fabs(lambda / (M_PI * M_PI) - 1.0) > 5e-3) return 11;
    SplConfig *cfg = NULL;
    if (spl_config_from_toml("case = \"III\"", NULL, &cfg) != SPL_STATUS_CONFIG_ERROR) return 12;
    if (cfg != NULL || spl_last_error() == NULL) return 13;
    printf("%s %.6f\n", spl_version(), lambda);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = std::process::Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
