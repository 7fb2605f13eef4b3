//! Experiment sweeps over transmit power, user count and AoA error, plus the
//! single-run convergence trace and channel-gain map.
//!
//! Realization `i` of a sweep is drawn from a stream keyed by
//! `(master_seed, i)` and shared by every scheme and sweep point, so all
//! comparisons are paired. Each scheme's own randomness is keyed by
//! `(master_seed, i, scheme)`.

pub mod cli;
mod config;

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{dbm_to_mw, AoInit, ExperimentConfig, Scheme};

use crate::aircomp::{cmse, inner_loop, CmseBreakdown, InnerSolution};
use crate::benchmarks::{aps_optimize, fpa_layout, GridSpec};
use crate::channel::{
    channel_gain_map, perturb_aoas, AntennaPosition, AntennaPositionVector, ChannelRealization, GainSample,
};
use crate::error::{Error, Result};
use crate::pso::{self, violation_set, FitnessContext, PsoOutcome, TraceRow};
use crate::sca::ao_scheme;
use crate::seed::{derive_seed, stream};

const CHANNEL_STREAM: u64 = 1;
const PERTURB_STREAM: u64 = 2;
const SCHEME_STREAM: u64 = 3;

/// One row of a sweep CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub p_c_dbm: f64,
    pub k_users: usize,
    pub m_antennas: usize,
    pub mu: f64,
    /// Realization index within the sweep.
    pub seed: usize,
    pub cmse: f64,
    #[serde(rename = "misalignment")]
    pub misalignment_term: f64,
    pub noise_term: f64,
    pub violations: Option<usize>,
    #[serde(rename = "wall_time_s")]
    pub wall_time_seconds: f64,
    #[serde(skip)]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Final layout and inner solution of one scheme on one channel.
#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub apv: AntennaPositionVector,
    pub inner: InnerSolution,
    pub violations: usize,
}

pub fn realization(cfg: &ExperimentConfig, index: usize, k_users: usize) -> Result<ChannelRealization> {
    cfg.sampler(k_users)
        .sample(&mut stream(cfg.master_seed, &[CHANNEL_STREAM, index as u64]))
}

fn scheme_seed(cfg: &ExperimentConfig, index: usize, scheme: Scheme) -> u64 {
    derive_seed(
        cfg.master_seed,
        &[SCHEME_STREAM, index as u64, scheme.stream_id()],
    )
}

/// Feasible uniform random layout by rejection, one antenna at a time.
fn random_feasible_layout(cfg: &ExperimentConfig, seed: u64) -> Result<AntennaPositionVector> {
    let mut rng = stream(seed, &[]);
    let h = cfg.region.half_side();
    let mut placed: Vec<AntennaPosition> = Vec::with_capacity(cfg.m_antennas);
    let mut attempts = 0usize;
    while placed.len() < cfg.m_antennas {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config(
                "could not place a random feasible antenna layout".into(),
            ));
        }
        let p = AntennaPosition::new(rng.gen_range(-h..=h), rng.gen_range(-h..=h));
        if placed.iter().all(|q| q.distance(&p) >= cfg.region.min_separation) {
            placed.push(p);
        }
    }
    AntennaPositionVector::new(placed)
}

pub fn pso_on(
    cfg: &ExperimentConfig,
    realization: &ChannelRealization,
    power_cap: f64,
    seed: u64,
) -> Result<PsoOutcome> {
    let ctx = FitnessContext {
        realization,
        noise: cfg.noise()?,
        power_cap,
        min_sep: cfg.region.min_separation,
        inner: cfg.inner,
    };
    pso::run(&cfg.pso, &cfg.region, cfg.m_antennas, &ctx, seed)
}

/// Runs one scheme on `realization` with power cap `power_mw`.
pub fn run_scheme(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    realization: &ChannelRealization,
    power_mw: f64,
    seed: u64,
) -> Result<SchemeOutcome> {
    let noise = cfg.noise()?;
    let region = &cfg.region;
    let (apv, inner) = match scheme {
        Scheme::Pso => {
            let out = pso_on(cfg, realization, power_mw, seed)?;
            (out.apv, out.report.inner)
        }
        Scheme::Fpa => {
            let apv = fpa_layout(cfg.m_antennas, region)?;
            let inner = inner_loop(&realization.channels(&apv), noise, power_mw, None, &cfg.inner)?;
            (apv, inner)
        }
        Scheme::Ao => {
            let init = match cfg.ao_init {
                AoInit::Fpa => fpa_layout(cfg.m_antennas, region)?,
                AoInit::Random => random_feasible_layout(cfg, seed)?,
            };
            let out = ao_scheme(realization, region, noise, power_mw, &init, &cfg.sca, &cfg.inner)?;
            (out.apv, out.inner)
        }
        Scheme::Aps => {
            let init = fpa_layout(cfg.m_antennas, region)?;
            let grid = GridSpec::lattice(region, cfg.aps_grid_step)?;
            let out = aps_optimize(
                realization,
                region,
                &grid,
                noise,
                power_mw,
                &init,
                &cfg.inner,
                cfg.aps_max_rounds,
            )?;
            (out.apv, out.inner)
        }
    };
    let violations = violation_set(&apv, region.min_separation);
    Ok(SchemeOutcome {
        apv,
        inner,
        violations,
    })
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    scheme: Scheme,
    point: usize,
    seed: usize,
}

fn cells(cfg: &ExperimentConfig, n_points: usize) -> Vec<Cell> {
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let mut out = Vec::new();
    for &scheme in &schemes {
        for point in 0..n_points {
            for seed in 0..cfg.n_realizations {
                out.push(Cell { scheme, point, seed });
            }
        }
    }
    out
}

struct RecordKey {
    scheme: Scheme,
    p_c_dbm: f64,
    k_users: usize,
    mu: f64,
    seed: usize,
}

fn record(
    cfg: &ExperimentConfig,
    key: RecordKey,
    started: Instant,
    outcome: Result<(CmseBreakdown, usize)>,
) -> ResultRecord {
    let wall = if cfg.record_timing {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let base = ResultRecord {
        scheme: key.scheme,
        p_c_dbm: key.p_c_dbm,
        k_users: key.k_users,
        m_antennas: cfg.m_antennas,
        mu: key.mu,
        seed: key.seed,
        cmse: f64::NAN,
        misalignment_term: f64::NAN,
        noise_term: f64::NAN,
        violations: None,
        wall_time_seconds: wall,
        error: None,
    };
    match outcome {
        Ok((b, violations)) => ResultRecord {
            cmse: b.total(),
            misalignment_term: b.misalignment,
            noise_term: b.noise_term,
            violations: Some(violations),
            ..base
        },
        Err(e) => ResultRecord {
            error: Some(e.to_string()),
            ..base
        },
    }
}

fn warn_on_small_penalty(cfg: &ExperimentConfig, records: &[ResultRecord]) {
    let worst = records
        .iter()
        .filter(|r| r.scheme == Scheme::Pso && !r.is_error())
        .map(|r| r.cmse)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst >= cfg.pso.penalty_tau {
        eprintln!(
            "warning: penalty tau = {} does not exceed the largest observed PSO CMSE ({worst:.4}); \
             infeasible layouts may win",
            cfg.pso.penalty_tau
        );
    }
}

fn outcome_terms(
    cfg: &ExperimentConfig,
    out: &SchemeOutcome,
    realization: &ChannelRealization,
) -> Result<(CmseBreakdown, usize)> {
    let b = cmse(
        &realization.channels(&out.apv),
        &out.inner.combiner,
        &out.inner.coeffs,
        cfg.noise()?,
    )?;
    Ok((b, out.violations))
}

/// CMSE versus the transmit power cap.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    if cfg.power_dbm_sweep.is_empty() {
        return Err(Error::Config("power_dbm_sweep must not be empty".into()));
    }
    let channels = (0..cfg.n_realizations)
        .map(|i| realization(cfg, i, cfg.k_users))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ResultRecord> = cells(cfg, cfg.power_dbm_sweep.len())
        .into_par_iter()
        .map(|cell| {
            let started = Instant::now();
            let p_dbm = cfg.power_dbm_sweep[cell.point];
            let real = &channels[cell.seed];
            let outcome = run_scheme(
                cfg,
                cell.scheme,
                real,
                dbm_to_mw(p_dbm),
                scheme_seed(cfg, cell.seed, cell.scheme),
            )
            .and_then(|out| outcome_terms(cfg, &out, real));
            let key = RecordKey {
                scheme: cell.scheme,
                p_c_dbm: p_dbm,
                k_users: cfg.k_users,
                mu: 0.0,
                seed: cell.seed,
            };
            record(cfg, key, started, outcome)
        })
        .collect();
    warn_on_small_penalty(cfg, &records);
    Ok(records)
}

/// CMSE versus the number of users. Smaller user sets are prefixes of the
/// largest one.
pub fn run_user_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let ks = cfg
        .k_sweep
        .clone()
        .filter(|ks| !ks.is_empty())
        .ok_or_else(|| Error::Config("k_sweep must be set and non-empty".into()))?;
    let k_max = *ks.iter().max().expect("non-empty");
    let channels = (0..cfg.n_realizations)
        .map(|i| realization(cfg, i, k_max))
        .collect::<Result<Vec<_>>>()?;
    let power = dbm_to_mw(cfg.power_dbm);
    let records: Vec<ResultRecord> = cells(cfg, ks.len())
        .into_par_iter()
        .map(|cell| {
            let started = Instant::now();
            let k = ks[cell.point];
            let outcome = channels[cell.seed].prefix(k).and_then(|real| {
                let out = run_scheme(
                    cfg,
                    cell.scheme,
                    &real,
                    power,
                    scheme_seed(cfg, cell.seed, cell.scheme),
                )?;
                outcome_terms(cfg, &out, &real)
            });
            let key = RecordKey {
                scheme: cell.scheme,
                p_c_dbm: cfg.power_dbm,
                k_users: k,
                mu: 0.0,
                seed: cell.seed,
            };
            record(cfg, key, started, outcome)
        })
        .collect();
    warn_on_small_penalty(cfg, &records);
    Ok(records)
}

/// CMSE of a scheme optimized on estimated (AoA-perturbed) channels.
#[derive(Clone, Debug)]
pub struct MismatchOutcome {
    /// CMSE the optimizer believed it achieved, on the estimated channels.
    pub optimized: CmseBreakdown,
    /// CMSE of the same `(positions, w, a)` on the true channels.
    pub evaluated: CmseBreakdown,
    pub violations: usize,
}

pub fn evaluate_mismatch(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    truth: &ChannelRealization,
    index: usize,
    mu: f64,
) -> Result<MismatchOutcome> {
    let noise = cfg.noise()?;
    let estimate = perturb_aoas(
        truth,
        mu,
        &mut stream(cfg.master_seed, &[PERTURB_STREAM, index as u64]),
    )?;
    let out = run_scheme(
        cfg,
        scheme,
        &estimate,
        dbm_to_mw(cfg.power_dbm),
        scheme_seed(cfg, index, scheme),
    )?;
    let optimized = cmse(
        &estimate.channels(&out.apv),
        &out.inner.combiner,
        &out.inner.coeffs,
        noise,
    )?;
    let evaluated = cmse(
        &truth.channels(&out.apv),
        &out.inner.combiner,
        &out.inner.coeffs,
        noise,
    )?;
    Ok(MismatchOutcome {
        optimized,
        evaluated,
        violations: out.violations,
    })
}

/// CMSE on the true channels versus the maximum AoA estimation error.
pub fn run_aoa_error_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let mus = cfg
        .aoa_error_sweep
        .clone()
        .filter(|m| !m.is_empty())
        .ok_or_else(|| Error::Config("aoa_error_sweep must be set and non-empty".into()))?;
    let channels = (0..cfg.n_realizations)
        .map(|i| realization(cfg, i, cfg.k_users))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ResultRecord> = cells(cfg, mus.len())
        .into_par_iter()
        .map(|cell| {
            let started = Instant::now();
            let mu = mus[cell.point];
            let outcome = evaluate_mismatch(cfg, cell.scheme, &channels[cell.seed], cell.seed, mu)
                .map(|o| (o.evaluated, o.violations));
            let key = RecordKey {
                scheme: cell.scheme,
                p_c_dbm: cfg.power_dbm,
                k_users: cfg.k_users,
                mu,
                seed: cell.seed,
            };
            record(cfg, key, started, outcome)
        })
        .collect();
    warn_on_small_penalty(cfg, &records);
    Ok(records)
}

/// Single PSO run on realization 0 at `power_dbm`.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<PsoOutcome> {
    cfg.validate()?;
    let real = realization(cfg, 0, cfg.k_users)?;
    pso_on(
        cfg,
        &real,
        dbm_to_mw(cfg.power_dbm),
        scheme_seed(cfg, 0, Scheme::Pso),
    )
}

pub fn run_convergence_trace(cfg: &ExperimentConfig) -> Result<Vec<TraceRow>> {
    Ok(run_convergence(cfg)?.trace)
}

/// AO round-by-round CMSE on realization 0 at `power_dbm`.
pub fn run_ao_trace(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let real = realization(cfg, 0, cfg.k_users)?;
    let init = match cfg.ao_init {
        AoInit::Fpa => fpa_layout(cfg.m_antennas, &cfg.region)?,
        AoInit::Random => random_feasible_layout(cfg, scheme_seed(cfg, 0, Scheme::Ao))?,
    };
    Ok(ao_scheme(
        &real,
        &cfg.region,
        cfg.noise()?,
        dbm_to_mw(cfg.power_dbm),
        &init,
        &cfg.sca,
        &cfg.inner,
    )?
    .trace)
}

/// Average channel gain over the region for realization 0.
pub fn run_gain_map(cfg: &ExperimentConfig) -> Result<Vec<GainSample>> {
    cfg.validate()?;
    let real = realization(cfg, 0, cfg.k_users)?;
    channel_gain_map(&real, &cfg.region, cfg.gain_map_step)
}

pub fn write_records_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_positions_csv<W: Write>(apv: &AntennaPositionVector, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for p in apv.iter() {
        writer.serialize(p)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pso::PsoParams;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            k_users: 3,
            n_realizations: 2,
            power_dbm_sweep: vec![0.0, 10.0],
            pso: PsoParams {
                n_particles: 6,
                max_iter: 5,
                ..PsoParams::default()
            },
            aps_max_rounds: 2,
            ..Default::default()
        }
    }

    #[test]
    fn power_sweep_shape_and_consistency() {
        let cfg = tiny();
        let recs = run_power_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 4);
        for r in &recs {
            assert!(!r.is_error(), "{:?}", r.error);
            assert!((r.cmse - r.misalignment_term - r.noise_term).abs() < 1e-9);
            assert_eq!(r.violations, Some(0));
        }
        // Canonical order: scheme, then sweep point, then realization.
        assert_eq!(recs[0].scheme, Scheme::Pso);
        assert_eq!((recs[1].p_c_dbm, recs[1].seed), (0.0, 1));
        assert_eq!((recs[2].p_c_dbm, recs[2].seed), (10.0, 0));
    }

    #[test]
    fn schemes_share_realizations() {
        let cfg = tiny();
        let a = realization(&cfg, 1, cfg.k_users).unwrap();
        let b = realization(&cfg, 1, cfg.k_users).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, realization(&cfg, 0, cfg.k_users).unwrap());
        let big = realization(&cfg, 1, 7).unwrap();
        assert_eq!(big.prefix(3).unwrap(), a);
    }

    #[test]
    fn missing_sweeps_are_config_errors() {
        let cfg = tiny();
        assert!(matches!(run_user_sweep(&cfg), Err(Error::Config(_))));
        assert!(matches!(run_aoa_error_sweep(&cfg), Err(Error::Config(_))));
        let cfg = ExperimentConfig {
            power_dbm_sweep: vec![],
            ..tiny()
        };
        assert!(matches!(run_power_sweep(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn records_csv_header() {
        let mut buf = Vec::new();
        write_records_csv(
            &run_power_sweep(&ExperimentConfig {
                schemes: vec![Scheme::Fpa],
                ..tiny()
            })
            .unwrap(),
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "scheme,p_c_dbm,k_users,m_antennas,mu,seed,cmse,misalignment,noise_term,violations,wall_time_s\n"
        ));
        assert!(text.lines().nth(1).unwrap().starts_with("fpa,0.0,3,4,0.0,0,"));
    }

    #[test]
    fn random_ao_init_is_feasible() {
        let cfg = ExperimentConfig {
            m_antennas: 8,
            ..tiny()
        };
        let apv = random_feasible_layout(&cfg, 3).unwrap();
        assert_eq!(apv.len(), 8);
        assert_eq!(violation_set(&apv, 0.5), 0);
    }
}
