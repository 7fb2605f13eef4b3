//! C ABI for `ma-aircomp`.
//!
//! Objects cross the boundary as opaque handles (`MaChannel`, `MaSolution`)
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns an `MaStatus`; on failure a description is available
//! from `ma_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ma_aircomp::aircomp::{inner_loop, InnerConfig, NoiseSpec};
use ma_aircomp::benchmarks::fpa_layout;
use ma_aircomp::channel::{AntennaPositionVector, ChannelRealization, ChannelSampler, RegionSpec};
use ma_aircomp::pso::{self, FitnessContext, PsoOutcome, PsoParams};
use ma_aircomp::seed::stream;
use ma_aircomp::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// Singular system or non-finite intermediate value.
    Numerical = 4,
    Infeasible = 5,
    Parse = 6,
    /// Caller buffer too small; the required length was written back.
    BufferTooSmall = 7,
    Panic = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> MaStatus {
    match err {
        Error::DimensionMismatch { .. } => MaStatus::DimensionMismatch,
        Error::InvalidParameter(_) | Error::Config(_) => MaStatus::InvalidArgument,
        Error::NotPositiveDefinite { .. } | Error::NonFinite(_) => MaStatus::Numerical,
        Error::Infeasible => MaStatus::Infeasible,
        Error::Json(_) | Error::Csv(_) | Error::Io { .. } => MaStatus::Parse,
    }
}

struct Fail(MaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MaStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(body: F) -> MaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MaStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MaStatus::Panic
        }
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful one. The pointer stays valid until the next call into this
/// library on the same thread.
#[no_mangle]
pub extern "C" fn ma_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Opaque channel realization.
pub struct MaChannel(ChannelRealization);

/// Opaque PSO result.
pub struct MaSolution(PsoOutcome);

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MaCmse {
    pub cmse: f64,
    pub misalignment: f64,
    pub noise_term: f64,
    pub iterations: usize,
}

/// Parameters for `ma_pso_run`. Start from `ma_pso_config_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MaPsoConfig {
    pub n_particles: usize,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    pub omega_max: f64,
    pub omega_min: f64,
    pub penalty_tau: f64,
    /// Non-positive disables velocity clamping.
    pub velocity_clamp: f64,
    pub side_length: f64,
    pub min_separation: f64,
    /// Noise variance in milliwatts.
    pub noise_variance: f64,
    /// Per-user power cap in milliwatts.
    pub power_cap: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

#[no_mangle]
pub extern "C" fn ma_pso_config_default() -> MaPsoConfig {
    let p = PsoParams::default();
    let r = RegionSpec::default();
    let inner = InnerConfig::default();
    MaPsoConfig {
        n_particles: p.n_particles,
        max_iter: p.max_iter,
        c1: p.c1,
        c2: p.c2,
        omega_max: p.omega_max,
        omega_min: p.omega_min,
        penalty_tau: p.penalty_tau,
        velocity_clamp: p.velocity_clamp.unwrap_or(0.0),
        side_length: r.side_length,
        min_separation: r.min_separation,
        noise_variance: 1e-8,
        power_cap: 10.0,
        inner_tol: inner.tol,
        inner_max_iter: inner.max_iter,
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn fill(out: *mut f64, capacity: usize, required: *mut usize, data: &[f64]) -> Result<(), Fail> {
    if !required.is_null() {
        required.write(data.len());
    }
    if capacity < data.len() {
        return Err(Fail(
            MaStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", data.len()),
        ));
    }
    if !data.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    }
    Ok(())
}

unsafe fn layout(xy: *const f64, m_antennas: usize) -> Result<AntennaPositionVector, Fail> {
    let coords = slice(xy, 2 * m_antennas, "positions")?;
    Ok(AntennaPositionVector::from_flat(coords)?)
}

/// Draws a channel realization with `k_users` users and `paths` paths each.
/// Identical arguments give identical channels.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ma_channel_sample(
    k_users: usize,
    paths: usize,
    pathloss_exp: f64,
    min_distance: f64,
    max_distance: f64,
    seed: u64,
    out: *mut *mut MaChannel,
) -> MaStatus {
    guard(|| {
        let sampler = ChannelSampler {
            k_users,
            paths_per_user: paths,
            pathloss_exp,
            dist_range: (min_distance, max_distance),
        };
        let real = sampler.sample(&mut stream(seed, &[]))?;
        write_out(out, Box::into_raw(Box::new(MaChannel(real))))
    })
}

/// Parses a realization from its JSON form (see `ma_channel_to_json`).
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string; `out` as for
/// `ma_channel_sample`.
#[no_mangle]
pub unsafe extern "C" fn ma_channel_from_json(json: *const c_char, out: *mut *mut MaChannel) -> MaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(MaStatus::Parse, e.to_string()))?;
        let real = ChannelRealization::from_json(text)?;
        write_out(out, Box::into_raw(Box::new(MaChannel(real))))
    })
}

/// Serializes a realization. Release the string with `ma_string_free`.
///
/// # Safety
/// `channel` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ma_channel_to_json(channel: *const MaChannel, out: *mut *mut c_char) -> MaStatus {
    guard(|| {
        let channel = channel.as_ref().ok_or_else(|| null("channel"))?;
        let text = channel.0.to_json()?;
        let c = CString::new(text).map_err(|e| Fail(MaStatus::Parse, e.to_string()))?;
        write_out(out, c.into_raw())
    })
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `channel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ma_channel_user_count(channel: *const MaChannel) -> usize {
    channel.as_ref().map_or(0, |c| c.0.n_users())
}

/// # Safety
/// `channel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ma_channel_free(channel: *mut MaChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ma_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the centred half-wavelength planar array as interleaved
/// `x0, y0, x1, y1, ...` into `out_xy`, which must hold `2 * m_antennas`
/// values.
///
/// # Safety
/// `out_xy` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ma_fpa_layout(
    m_antennas: usize,
    side_length: f64,
    min_separation: f64,
    out_xy: *mut f64,
    capacity: usize,
) -> MaStatus {
    guard(|| {
        let region = RegionSpec::new(side_length, min_separation)?;
        let apv = fpa_layout(m_antennas, &region)?;
        fill(out_xy, capacity, ptr::null_mut(), &apv.to_flat())
    })
}

/// Runs the inner combiner/coefficient optimization at a fixed layout given
/// as `m_antennas` interleaved `(x, y)` pairs and reports the resulting CMSE.
///
/// # Safety
/// `channel` must be a live handle, `xy` must point to `2 * m_antennas`
/// doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ma_evaluate_cmse(
    channel: *const MaChannel,
    xy: *const f64,
    m_antennas: usize,
    noise_variance: f64,
    power_cap: f64,
    out: *mut MaCmse,
) -> MaStatus {
    guard(|| {
        let channel = channel.as_ref().ok_or_else(|| null("channel"))?;
        let apv = layout(xy, m_antennas)?;
        let noise = NoiseSpec::new(noise_variance)?;
        let sol = inner_loop(
            &channel.0.channels(&apv),
            noise,
            power_cap,
            None,
            &InnerConfig::default(),
        )?;
        write_out(
            out,
            MaCmse {
                cmse: sol.cmse,
                misalignment: sol.breakdown.misalignment,
                noise_term: sol.breakdown.noise_term,
                iterations: sol.iterations,
            },
        )
    })
}

/// Optimizes `m_antennas` positions with the particle swarm. The result is a
/// deterministic function of the arguments, independent of thread count.
///
/// # Safety
/// `channel` must be a live handle, `config` must point to a valid
/// `MaPsoConfig` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ma_pso_run(
    channel: *const MaChannel,
    m_antennas: usize,
    config: *const MaPsoConfig,
    seed: u64,
    out: *mut *mut MaSolution,
) -> MaStatus {
    guard(|| {
        let channel = channel.as_ref().ok_or_else(|| null("channel"))?;
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let region = RegionSpec::new(cfg.side_length, cfg.min_separation)?;
        let params = PsoParams {
            n_particles: cfg.n_particles,
            max_iter: cfg.max_iter,
            c1: cfg.c1,
            c2: cfg.c2,
            omega_max: cfg.omega_max,
            omega_min: cfg.omega_min,
            penalty_tau: cfg.penalty_tau,
            velocity_clamp: (cfg.velocity_clamp > 0.0).then_some(cfg.velocity_clamp),
        };
        let inner = InnerConfig {
            tol: cfg.inner_tol,
            max_iter: cfg.inner_max_iter,
        };
        inner.validate()?;
        if cfg.power_cap.is_nan() || cfg.power_cap <= 0.0 {
            return Err(Fail(
                MaStatus::InvalidArgument,
                "power cap must be positive".into(),
            ));
        }
        let ctx = FitnessContext {
            realization: &channel.0,
            noise: NoiseSpec::new(cfg.noise_variance)?,
            power_cap: cfg.power_cap,
            min_sep: region.min_separation,
            inner,
        };
        let outcome = pso::run(&params, &region, m_antennas, &ctx, seed)?;
        write_out(out, Box::into_raw(Box::new(MaSolution(outcome))))
    })
}

/// CMSE of the best layout, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_cmse(solution: *const MaSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.report.cmse)
}

/// Separation violations of the best layout; 0 means feasible.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_violations(solution: *const MaSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.report.violation_count)
}

/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_antenna_count(solution: *const MaSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.apv.len())
}

/// Copies the best layout as interleaved `(x, y)` pairs. `required`, if not
/// null, receives the needed length even when the buffer is too small.
///
/// # Safety
/// `solution` must be a live handle and `out_xy` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_positions(
    solution: *const MaSolution,
    out_xy: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> MaStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        fill(out_xy, capacity, required, &s.0.apv.to_flat())
    })
}

/// Copies the global-best penalized fitness after each iteration, starting
/// with the initial swarm (`max_iter + 1` values).
///
/// # Safety
/// As for `ma_solution_positions`.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_trace(
    solution: *const MaSolution,
    out: *mut f64,
    capacity: usize,
    required: *mut usize,
) -> MaStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let trace: Vec<f64> = s.0.trace.iter().map(|r| r.gbest_fitness).collect();
        fill(out, capacity, required, &trace)
    })
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ma_solution_free(solution: *mut MaSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
