use std::ffi::{CStr, CString};
use std::ptr;

use ma_aircomp_ffi::*;

fn last_error() -> String {
    let p = ma_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sample(k: usize, seed: u64) -> *mut MaChannel {
    let mut ch = ptr::null_mut();
    let st = unsafe { ma_channel_sample(k, 5, 3.9, 250.0, 300.0, seed, &mut ch) };
    assert_eq!(st, MaStatus::Ok);
    assert!(ma_last_error_message().is_null());
    ch
}

#[test]
fn channel_round_trips_through_json() {
    let ch = sample(6, 11);
    assert_eq!(unsafe { ma_channel_user_count(ch) }, 6);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ma_channel_to_json(ch, &mut json) }, MaStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { ma_channel_from_json(json, &mut back) }, MaStatus::Ok);
    assert_eq!(unsafe { ma_channel_user_count(back) }, 6);

    let mut again = ptr::null_mut();
    assert_eq!(unsafe { ma_channel_to_json(back, &mut again) }, MaStatus::Ok);
    unsafe {
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(again));
        ma_string_free(json);
        ma_string_free(again);
        ma_channel_free(back);
        ma_channel_free(ch);
    }
}

#[test]
fn bad_inputs_report_status_and_message() {
    let mut ch = ptr::null_mut();
    let st = unsafe { ma_channel_sample(0, 5, 3.9, 250.0, 300.0, 1, &mut ch) };
    assert_eq!(st, MaStatus::InvalidArgument);
    assert!(ch.is_null());
    assert!(last_error().contains("at least 1"));

    let junk = CString::new("{\"users\": 3}").unwrap();
    assert_eq!(
        unsafe { ma_channel_from_json(junk.as_ptr(), &mut ch) },
        MaStatus::Parse
    );
    assert_eq!(
        unsafe { ma_channel_from_json(ptr::null(), &mut ch) },
        MaStatus::NullPointer
    );

    let mut out = MaCmse {
        cmse: 0.0,
        misalignment: 0.0,
        noise_term: 0.0,
        iterations: 0,
    };
    let xy = [0.0, 0.0];
    let st = unsafe { ma_evaluate_cmse(ptr::null(), xy.as_ptr(), 1, 1e-8, 10.0, &mut out) };
    assert_eq!(st, MaStatus::NullPointer);
    assert!(last_error().contains("channel"));

    let ch = sample(3, 2);
    let st = unsafe { ma_evaluate_cmse(ch, xy.as_ptr(), 1, -1.0, 10.0, &mut out) };
    assert_eq!(st, MaStatus::InvalidArgument);
    unsafe { ma_channel_free(ch) };

    assert_eq!(unsafe { ma_channel_user_count(ptr::null()) }, 0);
    unsafe {
        ma_channel_free(ptr::null_mut());
        ma_solution_free(ptr::null_mut());
        ma_string_free(ptr::null_mut());
    }
}

#[test]
fn fpa_layout_and_buffer_sizes() {
    let mut xy = [0.0; 8];
    assert_eq!(
        unsafe { ma_fpa_layout(4, 3.0, 0.5, xy.as_mut_ptr(), 8) },
        MaStatus::Ok
    );
    assert!(xy.iter().all(|v| v.abs() == 0.25));
    assert_eq!(
        unsafe { ma_fpa_layout(4, 3.0, 0.5, xy.as_mut_ptr(), 7) },
        MaStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { ma_fpa_layout(11, 3.0, 0.5, xy.as_mut_ptr(), 8) },
        MaStatus::InvalidArgument
    );
}

#[test]
fn evaluate_matches_library() {
    use ma_aircomp::aircomp::{inner_loop, InnerConfig, NoiseSpec};
    use ma_aircomp::channel::{AntennaPositionVector, ChannelRealization};

    let ch = sample(5, 3);
    let xy = [-0.25, -0.25, 0.25, -0.25, -0.25, 0.25, 0.25, 0.25];
    let mut out = MaCmse {
        cmse: 0.0,
        misalignment: 0.0,
        noise_term: 0.0,
        iterations: 0,
    };
    assert_eq!(
        unsafe { ma_evaluate_cmse(ch, xy.as_ptr(), 4, 1e-8, 10.0, &mut out) },
        MaStatus::Ok
    );

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ma_channel_to_json(ch, &mut json) }, MaStatus::Ok);
    let real = ChannelRealization::from_json(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    let apv = AntennaPositionVector::from_flat(&xy).unwrap();
    let sol = inner_loop(
        &real.channels(&apv),
        NoiseSpec::new(1e-8).unwrap(),
        10.0,
        None,
        &InnerConfig::default(),
    )
    .unwrap();
    assert_eq!(out.cmse, sol.cmse);
    assert_eq!(out.iterations, sol.iterations);
    assert!((out.misalignment + out.noise_term - out.cmse).abs() < 1e-12);
    unsafe {
        ma_string_free(json);
        ma_channel_free(ch);
    }
}

#[test]
fn pso_run_is_deterministic() {
    let ch = sample(6, 4);
    let mut cfg = ma_pso_config_default();
    cfg.n_particles = 10;
    cfg.max_iter = 15;

    let run = || {
        let mut sol = ptr::null_mut();
        assert_eq!(unsafe { ma_pso_run(ch, 3, &cfg, 99, &mut sol) }, MaStatus::Ok);
        sol
    };
    let (a, b) = (run(), run());
    unsafe {
        assert_eq!(ma_solution_antenna_count(a), 3);
        assert_eq!(ma_solution_cmse(a), ma_solution_cmse(b));

        let mut needed = 0;
        assert_eq!(
            ma_solution_positions(a, ptr::null_mut(), 0, &mut needed),
            MaStatus::BufferTooSmall
        );
        assert_eq!(needed, 6);
        let (mut pa, mut pb) = ([0.0; 6], [0.0; 6]);
        assert_eq!(
            ma_solution_positions(a, pa.as_mut_ptr(), 6, ptr::null_mut()),
            MaStatus::Ok
        );
        assert_eq!(
            ma_solution_positions(b, pb.as_mut_ptr(), 6, ptr::null_mut()),
            MaStatus::Ok
        );
        assert_eq!(pa, pb);
        assert!(pa.iter().all(|v| v.abs() <= 1.5));

        let mut trace = vec![0.0; 16];
        assert_eq!(
            ma_solution_trace(a, trace.as_mut_ptr(), 16, &mut needed),
            MaStatus::Ok
        );
        assert_eq!(needed, 16);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        let last = *trace.last().unwrap();
        let penalty = ma_solution_violations(a) as f64 * cfg.penalty_tau;
        assert_eq!(last, ma_solution_cmse(a) + penalty);

        ma_solution_free(a);
        ma_solution_free(b);
        ma_channel_free(ch);
    }
    assert!(unsafe { ma_solution_cmse(ptr::null()) }.is_nan());

    let mut bad = ma_pso_config_default();
    bad.n_particles = 0;
    let ch = sample(2, 1);
    let mut sol = ptr::null_mut();
    assert_eq!(
        unsafe { ma_pso_run(ch, 2, &bad, 0, &mut sol) },
        MaStatus::InvalidArgument
    );
    unsafe { ma_channel_free(ch) };
}
