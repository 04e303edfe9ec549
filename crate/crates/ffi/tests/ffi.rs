use mjhmc_ffi::*;
use std::ffi::{c_char, CStr};
use std::ptr;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { mjhmc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn energy_handles() {
    unsafe {
        let ef = mjhmc_energy_rough_well(100.0, 4.0);
        assert!(!ef.is_null());
        assert_eq!(mjhmc_energy_dim(ef), 2);
        let x = [1.3, -0.7];
        let mut e = 0.0;
        let mut g = [0.0; 2];
        let status = mjhmc_energy_eval(ef, x.as_ptr(), 2, &mut e, g.as_mut_ptr());
        assert_eq!(status, MjhmcStatus::Ok);
        assert!((e - 1.3752477290700411).abs() < 1e-12);
        let analytic = 1.3 / 1e4 - std::f64::consts::PI / 4.0 * (std::f64::consts::PI * 1.3 / 4.0).sin();
        assert!((g[0] - analytic).abs() < 1e-12);

        let status = mjhmc_energy_eval(ef, x.as_ptr(), 3, &mut e, ptr::null_mut());
        assert_eq!(status, MjhmcStatus::InvalidArgument);
        assert!(last_error().contains("dimension"), "{}", last_error());
        mjhmc_energy_free(ef);
        mjhmc_energy_free(ptr::null_mut());
    }
}

#[test]
fn bad_constructor_returns_null_with_message() {
    let ef = mjhmc_energy_rough_well(-1.0, 4.0);
    assert!(ef.is_null());
    assert!(last_error().contains("sigma1"), "{}", last_error());
    let p = [1.0, -2.0];
    assert!(unsafe { mjhmc_energy_gaussian(p.as_ptr(), 2) }.is_null());
    assert!(unsafe { mjhmc_energy_gaussian(ptr::null(), 2) }.is_null());
    assert!(last_error().contains("null"));
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        let mut e = 0.0;
        let x = [0.0; 2];
        assert_eq!(
            mjhmc_energy_eval(ptr::null(), x.as_ptr(), 2, &mut e, ptr::null_mut()),
            MjhmcStatus::NullPointer
        );
        let mut jump = MjhmcJump {
            holding_time: 0.0,
            transition: MjhmcTransition::Flip,
            cumulative_gradient_evals: 0,
        };
        assert_eq!(mjhmc_chain_step(ptr::null_mut(), &mut jump, ptr::null_mut(), 0), MjhmcStatus::NullPointer);
        assert_eq!(mjhmc_chain_gradient_evals(ptr::null()), 0);
        assert!(mjhmc_hmc_acceptance_rate(ptr::null()).is_nan());
    }
}

#[test]
fn mjhmc_chain_runs_and_counts() {
    unsafe {
        let p = [1.0, 1.0];
        let ef = mjhmc_energy_gaussian(p.as_ptr(), 2);
        let x0 = [0.5, -0.5];
        let chain = mjhmc_chain_new(ef, 0.3, 7, 0.2, 11, x0.as_ptr(), 2);
        mjhmc_energy_free(ef);
        assert!(!chain.is_null(), "{}", last_error());
        assert_eq!(mjhmc_chain_gradient_evals(chain), 15);
        let mut jump = MjhmcJump {
            holding_time: 0.0,
            transition: MjhmcTransition::Flip,
            cumulative_gradient_evals: 0,
        };
        let mut x = [0.0; 2];
        assert_eq!(mjhmc_chain_step(chain, &mut jump, x.as_mut_ptr(), 2), MjhmcStatus::Ok);
        assert_eq!(x, x0);
        assert!(jump.holding_time > 0.0);
        let mut last = jump.cumulative_gradient_evals;
        for _ in 0..200 {
            assert_eq!(mjhmc_chain_step(chain, &mut jump, ptr::null_mut(), 0), MjhmcStatus::Ok);
            assert!(jump.cumulative_gradient_evals >= last);
            last = jump.cumulative_gradient_evals;
        }
        let mut pos = [0.0; 2];
        assert_eq!(mjhmc_chain_position(chain, pos.as_mut_ptr(), 2), MjhmcStatus::Ok);
        assert!(pos.iter().all(|v| v.is_finite()));
        assert_eq!(mjhmc_chain_position(chain, pos.as_mut_ptr(), 1), MjhmcStatus::InvalidArgument);
        mjhmc_chain_free(chain);
    }
}

#[test]
fn mjhmc_chain_is_deterministic() {
    let run = |seed| unsafe {
        let ef = mjhmc_energy_rough_well(100.0, 4.0);
        let x0 = [0.0, 0.0];
        let chain = mjhmc_chain_new(ef, 1.0, 5, 0.1, seed, x0.as_ptr(), 2);
        let mut jump = MjhmcJump {
            holding_time: 0.0,
            transition: MjhmcTransition::Flip,
            cumulative_gradient_evals: 0,
        };
        let mut out = Vec::new();
        let mut x = [0.0; 2];
        for _ in 0..50 {
            mjhmc_chain_step(chain, &mut jump, x.as_mut_ptr(), 2);
            out.push((x, jump.holding_time, jump.transition));
        }
        mjhmc_chain_free(chain);
        mjhmc_energy_free(ef);
        out
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn hmc_chain_runs() {
    unsafe {
        let ef = mjhmc_energy_rough_well(100.0, 4.0);
        let x0 = [0.0, 0.0];
        let chain = mjhmc_hmc_new(ef, 0.591686, 25, 0.429956, 1, x0.as_ptr(), 2);
        assert!(!chain.is_null());
        let mut accepted = false;
        let mut x = [0.0; 2];
        for _ in 0..100 {
            assert_eq!(mjhmc_hmc_step(chain, &mut accepted, x.as_mut_ptr(), 2), MjhmcStatus::Ok);
        }
        assert_eq!(mjhmc_hmc_gradient_evals(chain), 1 + 100 * 25);
        let rate = mjhmc_hmc_acceptance_rate(chain);
        assert!(rate > 0.0 && rate < 1.0, "{rate}");
        mjhmc_hmc_free(chain);

        assert!(mjhmc_hmc_new(ef, 0.5, 10, 1.5, 1, x0.as_ptr(), 2).is_null());
        assert!(last_error().contains("beta"), "{}", last_error());
        mjhmc_energy_free(ef);
    }
}

#[test]
fn ladder_functions() {
    unsafe {
        let flat = [0.5; 4];
        let (mut a, mut b) = (f64::NAN, f64::NAN);
        assert_eq!(mjhmc_ladder_gaps(flat.as_ptr(), 4, 0.0, &mut a, &mut b), MjhmcStatus::Ok);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);

        let e = [0.3, -1.2, 0.8, 0.1, -0.4, 1.5, -0.9];
        let mut r = f64::NAN;
        assert_eq!(mjhmc_ladder_balance_residual(e.as_ptr(), 7, &mut r), MjhmcStatus::Ok);
        assert!(r <= 1e-12);
        assert_eq!(mjhmc_ladder_gaps(e.as_ptr(), 7, 0.5, &mut a, &mut b), MjhmcStatus::Ok);
        assert!(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0);

        assert_eq!(mjhmc_ladder_gaps(e.as_ptr(), 2, 0.0, &mut a, &mut b), MjhmcStatus::InvalidArgument);
    }
}

#[test]
fn decay_fit() {
    let lags: Vec<f64> = (0..=100).map(|i| 10.0 * i as f64).collect();
    let values: Vec<f64> = lags.iter().map(|n| (-0.01 * n).exp() * (0.05 * n).cos()).collect();
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe { mjhmc_fit_decay(lags.as_ptr(), values.as_ptr(), lags.len(), &mut re, &mut im) };
    assert_eq!(status, MjhmcStatus::Ok);
    assert!((re + 0.01).abs() < 1e-3 && (im - 0.05).abs() < 1e-3, "{re} {im}");
    let status = unsafe { mjhmc_fit_decay(lags.as_ptr(), values.as_ptr(), 3, &mut re, &mut im) };
    assert_ne!(status, MjhmcStatus::Ok);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mjhmc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mjhmc.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["mjhmc_chain_new", "mjhmc_hmc_step", "mjhmc_fit_decay", "MJHMC_STATUS_NUMERICAL"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler available, skipping syntax check");
        return;
    };
    assert!(status.success());
}
