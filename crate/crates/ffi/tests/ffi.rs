use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use eigenseries_ffi::*;

fn last_error() -> String {
    let p = es_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn two_level(delta: f64, lambda: f64) -> *mut EsHamiltonian {
    let mut h = ptr::null_mut();
    let st = unsafe { es_hamiltonian_from_model(EsModel::TwoLevel, 2, delta, lambda, 0, &mut h) };
    assert_eq!(st, EsStatus::Ok);
    h
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(es_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn two_level_spectrum() {
    let h = two_level(1.0, 0.1);
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(h, ptr::null(), &mut sp) }, EsStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { es_spectrum_len(sp, &mut n) }, EsStatus::Ok);
    assert_eq!(n, 2);

    let root = (0.25f64 + 0.01).sqrt();
    let want = [0.5 - root, 0.5 + root];
    for (g, w) in want.iter().enumerate() {
        assert_eq!(unsafe { es_spectrum_level_status(sp, g) }, EsStatus::Ok);
        let mut e = 0.0;
        assert_eq!(unsafe { es_spectrum_energy(sp, g, &mut e) }, EsStatus::Ok);
        assert!((e - w).abs() < 1e-12, "level {g}: {e} vs {w}");
        let mut r = 1.0;
        assert_eq!(unsafe { es_spectrum_residual(sp, g, &mut r) }, EsStatus::Ok);
        assert!(r < 1e-10);
    }

    let mut oracle = [0.0; 2];
    assert_eq!(unsafe { es_oracle_eigenvalues(h, oracle.as_mut_ptr(), 2) }, EsStatus::Ok);
    assert!((oracle[0] - want[0]).abs() < 1e-12 && (oracle[1] - want[1]).abs() < 1e-12);

    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    assert_eq!(
        unsafe { es_spectrum_amplitudes(sp, 0, re.as_mut_ptr(), im.as_mut_ptr(), 2) },
        EsStatus::Ok
    );
    assert_eq!((re[0], im[0]), (1.0, 0.0));
    // (Ẽ − E_0) = g·q_1
    assert!((re[1] * 0.1 - want[0]).abs() < 1e-12);

    unsafe {
        es_spectrum_free(sp);
        es_hamiltonian_free(h);
    }
}

#[test]
fn options_round_trip_through_series_method() {
    let h = two_level(1.0, 0.1);
    let mut opts = std::mem::MaybeUninit::<EsSolveOptions>::uninit();
    assert_eq!(unsafe { es_solve_options_default(opts.as_mut_ptr()) }, EsStatus::Ok);
    let mut opts = unsafe { opts.assume_init() };
    assert_eq!(opts.root_tol, 1e-12);
    opts.method = EsMethod::SeriesEq19;
    opts.jobs = 2;
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(h, &opts, &mut sp) }, EsStatus::Ok);
    let mut e = 0.0;
    assert_eq!(unsafe { es_spectrum_energy(sp, 0, &mut e) }, EsStatus::Ok);
    assert!((e - (0.5 - 0.26f64.sqrt())).abs() < 1e-9);
    unsafe {
        es_spectrum_free(sp);
        es_hamiltonian_free(h);
    }
}

#[test]
fn from_parts_checks_hermiticity() {
    let re = [0.0, 0.2, 0.3, 1.0];
    let mut h = ptr::null_mut();
    let st = unsafe { es_hamiltonian_from_parts(2, re.as_ptr(), ptr::null(), false, &mut h) };
    assert_eq!(st, EsStatus::NotHermitian);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { es_hamiltonian_from_parts(2, re.as_ptr(), ptr::null(), true, &mut h) };
    assert_eq!(st, EsStatus::Ok);
    assert!(es_last_error_message().is_null());
    let mut dim = 0;
    assert_eq!(unsafe { es_hamiltonian_dim(h, &mut dim) }, EsStatus::Ok);
    assert_eq!(dim, 2);

    let mut w = [0.0; 2];
    assert_eq!(unsafe { es_oracle_eigenvalues(h, w.as_mut_ptr(), 2) }, EsStatus::Ok);
    let root = (0.25f64 + 0.25f64.powi(2)).sqrt();
    assert!((w[0] - (0.5 - root)).abs() < 1e-12);
    unsafe { es_hamiltonian_free(h) };
}

#[test]
fn complex_parts_are_accepted() {
    let re = [0.0, 0.1, 0.1, 1.0];
    let im = [0.0, 0.1, -0.1, 0.0];
    let mut h = ptr::null_mut();
    let st = unsafe { es_hamiltonian_from_parts(2, re.as_ptr(), im.as_ptr(), false, &mut h) };
    assert_eq!(st, EsStatus::Ok);
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(h, ptr::null(), &mut sp) }, EsStatus::Ok);
    let mut e = 0.0;
    assert_eq!(unsafe { es_spectrum_energy(sp, 1, &mut e) }, EsStatus::Ok);
    assert!((e - (0.5 + (0.25f64 + 0.02).sqrt())).abs() < 1e-12);
    unsafe {
        es_spectrum_free(sp);
        es_hamiltonian_free(h);
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(ptr::null(), ptr::null(), &mut sp) }, EsStatus::NullPointer);
    assert!(last_error().contains("h"));
    let mut n = 0;
    assert_eq!(unsafe { es_spectrum_len(ptr::null(), &mut n) }, EsStatus::NullPointer);
    assert_eq!(unsafe { es_solve_options_default(ptr::null_mut()) }, EsStatus::NullPointer);
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { es_hamiltonian_from_parts(2, ptr::null(), ptr::null(), false, &mut h) },
        EsStatus::NullPointer
    );
    unsafe {
        es_hamiltonian_free(ptr::null_mut());
        es_spectrum_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let mut h = ptr::null_mut();
    let st = unsafe { es_hamiltonian_from_model(EsModel::TwoLevel, 3, 1.0, 0.1, 0, &mut h) };
    assert_eq!(st, EsStatus::InvalidArgument);

    let h = two_level(1.0, 0.1);
    let mut out = [0.0; 3];
    assert_eq!(unsafe { es_oracle_eigenvalues(h, out.as_mut_ptr(), 3) }, EsStatus::InvalidArgument);

    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(h, ptr::null(), &mut sp) }, EsStatus::Ok);
    assert_eq!(unsafe { es_spectrum_level_status(sp, 5) }, EsStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        es_spectrum_free(sp);
        es_hamiltonian_free(h);
    }
}

#[test]
fn degenerate_levels_are_rejected() {
    let h = two_level(0.0, 0.1);
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { es_solve_spectrum(h, ptr::null(), &mut sp) }, EsStatus::Degenerate);
    assert!(sp.is_null());
    unsafe { es_hamiltonian_free(h) };
}

#[test]
fn propagate_matches_oracle() {
    let h = two_level(1.0, 0.1);
    let (psi_re, psi_im) = ([1.0, 0.0], [0.0, 0.0]);
    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    let t = 1.0;
    let st = unsafe {
        es_propagate(h, psi_re.as_ptr(), psi_im.as_ptr(), 2, t, 30, re.as_mut_ptr(), im.as_mut_ptr())
    };
    assert_eq!(st, EsStatus::Ok);

    // Rabi solution for [[0, λ], [λ, Δ]] starting in level 0.
    let (d, l) = (1.0f64, 0.1f64);
    let w = (d * d / 4.0 + l * l).sqrt();
    let (s, co) = (w * t).sin_cos();
    let (ps, pc) = (-d * t / 2.0).sin_cos();
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let c0 = mul((pc, ps), (co, d / (2.0 * w) * s));
    let c1 = mul((pc, ps), (0.0, -l / w * s));
    assert!((re[0] - c0.0).abs() < 1e-12 && (im[0] - c0.1).abs() < 1e-12);
    assert!((re[1] - c1.0).abs() < 1e-12 && (im[1] - c1.1).abs() < 1e-12);

    // Null imaginary part means a real initial state.
    let (mut re2, mut im2) = ([0.0; 2], [0.0; 2]);
    let st = unsafe {
        es_propagate(h, psi_re.as_ptr(), ptr::null(), 2, t, 30, re2.as_mut_ptr(), im2.as_mut_ptr())
    };
    assert_eq!(st, EsStatus::Ok);
    assert_eq!((re, im), (re2, im2));
    unsafe { es_hamiltonian_free(h) };
}

#[test]
fn truncated_propagation_is_flagged() {
    let h = two_level(1.0, 0.5);
    let psi = [1.0, 0.0];
    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    let st = unsafe { es_propagate(h, psi.as_ptr(), ptr::null(), 2, 5.0, 2, re.as_mut_ptr(), im.as_mut_ptr()) };
    assert_eq!(st, EsStatus::NotConverged);
    assert!(re[0] != 0.0 || im[0] != 0.0, "state is still written");

    let st = unsafe { es_propagate(h, psi.as_ptr(), ptr::null(), 2, 1.0, 30, ptr::null_mut(), im.as_mut_ptr()) };
    assert_eq!(st, EsStatus::NullPointer);

    let wide = [1.0, 0.0, 0.0];
    let (mut re3, mut im3) = ([0.0; 3], [0.0; 3]);
    let st = unsafe { es_propagate(h, wide.as_ptr(), ptr::null(), 3, 1.0, 30, re3.as_mut_ptr(), im3.as_mut_ptr()) };
    assert_eq!(st, EsStatus::InvalidArgument);
    unsafe { es_hamiltonian_free(h) };
}

#[test]
fn kernel_matches_two_level_closed_form() {
    let h = two_level(1.0, 0.1);
    let (mut re, mut im) = (0.0, 0.0);
    // R_0(z) = λ² / (E_0 − z − E_1)
    let z = 0.3;
    assert_eq!(unsafe { es_kernel_resolvent(h, 0, z, 0.0, &mut re, &mut im) }, EsStatus::Ok);
    assert!((re - 0.01 / (0.0 - z - 1.0)).abs() < 1e-15 && im.abs() < 1e-15);
    assert_eq!(unsafe { es_kernel_resolvent(h, 0, -1.0, 0.0, &mut re, &mut im) }, EsStatus::Singular);
    unsafe { es_hamiltonian_free(h) };
}

#[test]
fn header_declares_every_export() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/eigenseries.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in [
        "es_version",
        "es_last_error_message",
        "es_solve_options_default",
        "es_hamiltonian_from_parts",
        "es_hamiltonian_from_model",
        "es_hamiltonian_free",
        "es_hamiltonian_dim",
        "es_solve_spectrum",
        "es_spectrum_free",
        "es_spectrum_len",
        "es_spectrum_level_status",
        "es_spectrum_energy",
        "es_spectrum_residual",
        "es_spectrum_amplitudes",
        "es_propagate",
        "es_oracle_eigenvalues",
        "es_kernel_resolvent",
    ] {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("typedef struct EsHamiltonian EsHamiltonian;"));
    assert!(text.contains("ES_STATUS_NOT_CONVERGED = -7"));

    // Compile the header as C when a compiler is around.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
