use std::ffi::{c_char, CStr};
use std::ptr;

use gmnorm_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        gm_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn quadratic() -> *mut GmProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { gm_problem_random_quadratic(12, 0.1, 1.0, 5, &mut p) }, GmStatus::Ok);
    p
}

#[test]
fn fixed_length_runs_round_trip() {
    let p = quadratic();
    unsafe {
        assert_eq!(gm_problem_dim(p), 12);
        let mut l = 0.0;
        assert_eq!(gm_problem_lipschitz(p, &mut l), GmStatus::Ok);
        let mut x0 = vec![0.0; 12];
        assert_eq!(gm_problem_start(p, x0.as_mut_ptr(), x0.len()), GmStatus::Ok);

        for form in [GmForm::Canonical, GmForm::Extrapolated, GmForm::OneAux, GmForm::TwoAux] {
            let mut r = ptr::null_mut();
            assert_eq!(gm_run_ocgmg(p, x0.as_ptr(), x0.len(), l, 16, form, &mut r), GmStatus::Ok);
            assert_eq!(gm_run_oracle_calls(r), 16);
            let mut v = GmVerdict::Running;
            assert_eq!(gm_run_verdict(r, &mut v), GmStatus::Ok);
            assert_eq!(v, GmVerdict::Completed);
            let (mut pass, mut n) = (0, 0);
            assert_eq!(gm_run_certify(r, &mut pass, &mut n), GmStatus::Ok);
            assert!(pass == 1 && n > 0);
            gm_run_free(r);
        }

        let mut r = ptr::null_mut();
        assert_eq!(gm_run_ogmg(p, ptr::null(), 0, l, 6, GmForm::OneAux, &mut r), GmStatus::Ok);
        let (mut pass, mut n) = (0, 0);
        assert_eq!(gm_run_certify(r, &mut pass, &mut n), GmStatus::Ok);
        assert_eq!(pass, 1);
        gm_run_free(r);

        // underestimated L: the run stops and says so, it is not an error
        let mut r = ptr::null_mut();
        assert_eq!(gm_run_ocgmg(p, ptr::null(), 0, l / 50.0, 40, GmForm::Canonical, &mut r), GmStatus::Ok);
        let mut v = GmVerdict::Running;
        gm_run_verdict(r, &mut v);
        assert_eq!(v, GmVerdict::LineSearchFailure);
        gm_run_free(r);
        gm_problem_free(p);
    }
}

#[test]
fn adaptive_runs_converge() {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(gm_problem_random_lasso(40, 30, 1.0, 2, &mut p), GmStatus::Ok);
        for meta in [false, true] {
            let mut r = ptr::null_mut();
            let st = if meta {
                gm_run_meta(p, ptr::null(), 0, 1.0, 1e-6, 20_000, &mut r)
            } else {
                gm_run_acgm(p, ptr::null(), 0, 1.0, 1e-6, 20_000, &mut r)
            };
            assert_eq!(st, GmStatus::Ok);
            let mut v = GmVerdict::Running;
            gm_run_verdict(r, &mut v);
            assert_eq!(v, GmVerdict::Converged, "meta = {meta}");
            let mut g = 1.0;
            assert_eq!(gm_run_last_gmap(r, &mut g), GmStatus::Ok);
            assert!(g <= 1e-6);
            let mut x = vec![0.0; 30];
            assert_eq!(gm_run_solution(r, x.as_mut_ptr(), x.len()), GmStatus::Ok);
            assert!(x.iter().all(|v| v.is_finite()));
            let (mut pass, mut n) = (0, 0);
            assert_eq!(gm_run_certify(r, &mut pass, &mut n), GmStatus::Unsupported);
            gm_run_free(r);
        }
        gm_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    let p = quadratic();
    unsafe {
        let mut r = ptr::null_mut();
        let x = [0.0; 3];
        assert_eq!(gm_run_ocgmg(p, x.as_ptr(), 3, 1.0, 8, GmForm::Canonical, &mut r), GmStatus::DimensionMismatch);
        assert!(last_error().contains("dimension mismatch"));
        assert!(r.is_null());
        assert_eq!(gm_run_ocgmg(p, ptr::null(), 0, 1.0, 1, GmForm::Canonical, &mut r), GmStatus::InvalidArgument);
        assert_eq!(gm_run_meta(p, ptr::null(), 0, -1.0, 0.0, 100, &mut r), GmStatus::InvalidArgument);
        assert!(last_error().contains("L0"));
        assert_eq!(gm_run_ocgmg(ptr::null(), ptr::null(), 0, 1.0, 8, GmForm::Canonical, &mut r), GmStatus::NullPointer);
        assert_eq!(
            gm_run_ocgmg(p, ptr::null(), 0, 1.0, 8, GmForm::Canonical, ptr::null_mut()),
            GmStatus::NullPointer
        );
        let a = [1.0, 2.0];
        let mut q = ptr::null_mut();
        assert_eq!(
            gm_problem_least_squares(a.as_ptr(), 1, 2, a.as_ptr(), GmRegularizer::L1, 0.0, ptr::null(), &mut q),
            GmStatus::InvalidArgument
        );
        assert_eq!(gm_problem_dim(ptr::null()), 0);
        gm_problem_free(ptr::null_mut());
        gm_run_free(ptr::null_mut());
        gm_problem_free(p);
    }
}

#[test]
fn nonnegative_least_squares() {
    let a = [1.0, 0.0, 0.0, 2.0, 1.0, 1.0];
    let b = [1.0, -4.0, 0.5];
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            gm_problem_least_squares(a.as_ptr(), 3, 2, b.as_ptr(), GmRegularizer::NonNegative, 0.0, ptr::null(), &mut p),
            GmStatus::Ok
        );
        let mut r = ptr::null_mut();
        assert_eq!(gm_run_acgm(p, ptr::null(), 0, 1.0, 1e-10, 10_000, &mut r), GmStatus::Ok);
        let mut x = [0.0; 2];
        gm_run_solution(r, x.as_mut_ptr(), 2);
        assert!(x.iter().all(|v| *v >= 0.0));
        // KKT: x_2 = 0 is active, x_1 minimizes (x_1 - 1)^2 + (x_1 - 0.5)^2
        assert!((x[0] - 0.75).abs() < 1e-8 && x[1] == 0.0, "{x:?}");
        gm_run_free(r);
        gm_problem_free(p);
    }
}
