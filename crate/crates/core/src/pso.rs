//! Outer-loop particle swarm optimization of the antenna position vector.
//!
//! Each particle is a full layout of `M` antennas. Its fitness is the
//! inner-loop CMSE plus `τ` times the number of antenna pairs closer than
//! the minimum separation. Particles are updated synchronously: every
//! particle of iteration `t` sees the global best of iteration `t - 1`,
//! which keeps the run bit-identical whether particles are evaluated in
//! parallel or not.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aircomp::{inner_loop, InnerConfig, InnerSolution, NoiseSpec};
use crate::channel::{AntennaPositionVector, ChannelRealization, RegionSpec};
use crate::error::{check_len, Error, Result};
use crate::seed::{self, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub n_particles: usize,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    pub omega_max: f64,
    pub omega_min: f64,
    pub penalty_tau: f64,
    /// Largest allowed magnitude of any velocity component, in wavelengths.
    /// `None` disables clamping.
    pub velocity_clamp: Option<f64>,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            n_particles: 200,
            max_iter: 200,
            c1: 1.5,
            c2: 1.5,
            omega_max: 0.9,
            omega_min: 0.4,
            penalty_tau: 20.0,
            velocity_clamp: Some(RegionSpec::default().half_side()),
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_particles >= 1
            && self.max_iter >= 1
            && self.c1 >= 0.0
            && self.c2 >= 0.0
            && self.omega_max >= self.omega_min
            && self.omega_min >= 0.0
            && self.penalty_tau > 0.0
            && self.velocity_clamp.is_none_or(|v| v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid PSO parameters: {self:?}"
            )))
        }
    }
}

/// Linearly decreasing inertia weight `ω_max - (ω_max - ω_min) t / T`.
pub fn inertia(t: usize, params: &PsoParams) -> f64 {
    params.omega_max - (params.omega_max - params.omega_min) * t as f64 / params.max_iter as f64
}

/// Number of antenna pairs closer than `min_sep`.
pub fn violation_set(apv: &AntennaPositionVector, min_sep: f64) -> usize {
    let p = apv.positions();
    let mut count = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i].distance(&p[j]) < min_sep {
                count += 1;
            }
        }
    }
    count
}

/// Everything a fitness evaluation needs besides the layout itself.
#[derive(Clone, Debug)]
pub struct FitnessContext<'a> {
    pub realization: &'a ChannelRealization,
    pub noise: NoiseSpec,
    pub power_cap: f64,
    pub min_sep: f64,
    pub inner: InnerConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessReport {
    pub cmse: f64,
    pub violation_count: usize,
    pub fitness: f64,
    pub inner: InnerSolution,
}

pub fn fitness(apv: &AntennaPositionVector, ctx: &FitnessContext<'_>, tau: f64) -> Result<FitnessReport> {
    let channels = ctx.realization.channels(apv);
    let inner = inner_loop(&channels, ctx.noise, ctx.power_cap, None, &ctx.inner)?;
    let violation_count = violation_set(apv, ctx.min_sep);
    Ok(FitnessReport {
        cmse: inner.cmse,
        violation_count,
        fitness: inner.cmse + tau * violation_count as f64,
        inner,
    })
}

#[derive(Clone, Debug)]
pub struct Particle {
    pub position: AntennaPositionVector,
    pub velocity: Vec<f64>,
    pub pbest_position: AntennaPositionVector,
    pub pbest_fitness: f64,
    pub pbest_report: FitnessReport,
    rng: StreamRng,
}

#[derive(Clone, Debug)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: AntennaPositionVector,
    pub gbest_fitness: f64,
    pub gbest_report: FitnessReport,
    pub iteration: usize,
}

impl SwarmState {
    fn trace_row(&self) -> TraceRow {
        TraceRow {
            iter: self.iteration,
            gbest_fitness: self.gbest_fitness,
            gbest_cmse: self.gbest_report.cmse,
            violations: self.gbest_report.violation_count,
        }
    }

    /// Strict-improvement scan in particle order.
    fn refresh_gbest(&mut self) {
        let mut best = None;
        for (i, p) in self.particles.iter().enumerate() {
            if p.pbest_fitness < best.map_or(self.gbest_fitness, |(_, f)| f) {
                best = Some((i, p.pbest_fitness));
            }
        }
        if let Some((i, f)) = best {
            let p = &self.particles[i];
            self.gbest_position = p.pbest_position.clone();
            self.gbest_report = p.pbest_report.clone();
            self.gbest_fitness = f;
        }
    }
}

/// Uniform random swarm with zero velocities. Particle `n` draws from its own
/// stream derived from `(seed, n)`.
pub fn init_swarm(
    params: &PsoParams,
    region: &RegionSpec,
    m_antennas: usize,
    ctx: &FitnessContext<'_>,
    seed: u64,
) -> Result<SwarmState> {
    params.validate()?;
    region.validate()?;
    if m_antennas == 0 {
        return Err(Error::InvalidParameter("need at least one antenna".into()));
    }
    let h = region.half_side();
    let particles = (0..params.n_particles)
        .into_par_iter()
        .map(|n| {
            let mut rng = seed::stream(seed, &[n as u64]);
            let coords: Vec<f64> = (0..2 * m_antennas).map(|_| rng.gen_range(-h..=h)).collect();
            let position = AntennaPositionVector::from_flat(&coords)?;
            let report = fitness(&position, ctx, params.penalty_tau)?;
            Ok(Particle {
                velocity: vec![0.0; 2 * m_antennas],
                pbest_position: position.clone(),
                pbest_fitness: report.fitness,
                pbest_report: report,
                position,
                rng,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let first = &particles[0];
    let mut swarm = SwarmState {
        gbest_position: first.pbest_position.clone(),
        gbest_fitness: first.pbest_fitness,
        gbest_report: first.pbest_report.clone(),
        particles,
        iteration: 0,
    };
    swarm.refresh_gbest();
    Ok(swarm)
}

/// `v ← ω v + c1 α1 (pbest - r) + c2 α2 (gbest - r)` with one `(α1, α2)`
/// pair per call, then component-wise clamping if configured.
pub fn update_velocity<R: Rng + ?Sized>(
    particle: &Particle,
    gbest: &AntennaPositionVector,
    omega: f64,
    params: &PsoParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let r = particle.position.to_flat();
    let pbest = particle.pbest_position.to_flat();
    let gbest = gbest.to_flat();
    check_len("global best vs particle", r.len(), gbest.len())?;
    check_len("velocity vs particle", r.len(), particle.velocity.len())?;
    let alpha1: f64 = rng.gen();
    let alpha2: f64 = rng.gen();
    Ok(particle
        .velocity
        .iter()
        .zip(&r)
        .zip(pbest.iter().zip(&gbest))
        .map(|((v, r), (pb, gb))| {
            let next = omega * v + params.c1 * alpha1 * (pb - r) + params.c2 * alpha2 * (gb - r);
            match params.velocity_clamp {
                Some(limit) => next.clamp(-limit, limit),
                None => next,
            }
        })
        .collect())
}

/// `r ← clamp(r + v, -A/2, A/2)` component-wise.
pub fn update_position(
    particle: &Particle,
    velocity: &[f64],
    region: &RegionSpec,
) -> Result<AntennaPositionVector> {
    let r = particle.position.to_flat();
    check_len("velocity vs particle", r.len(), velocity.len())?;
    let moved: Vec<f64> = r.iter().zip(velocity).map(|(r, v)| region.clamp(r + v)).collect();
    AntennaPositionVector::from_flat(&moved)
}

/// Advances the swarm by one iteration.
pub fn step(
    swarm: &mut SwarmState,
    params: &PsoParams,
    region: &RegionSpec,
    ctx: &FitnessContext<'_>,
) -> Result<()> {
    let t = swarm.iteration + 1;
    let omega = inertia(t, params);
    let gbest = swarm.gbest_position.clone();
    swarm
        .particles
        .par_iter_mut()
        .map(|p| {
            let mut rng = p.rng.clone();
            let velocity = update_velocity(p, &gbest, omega, params, &mut rng)?;
            let position = update_position(p, &velocity, region)?;
            let report = fitness(&position, ctx, params.penalty_tau)?;
            p.rng = rng;
            p.velocity = velocity;
            p.position = position;
            if report.fitness < p.pbest_fitness {
                p.pbest_position = p.position.clone();
                p.pbest_fitness = report.fitness;
                p.pbest_report = report;
            }
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    swarm.iteration = t;
    swarm.refresh_gbest();
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub gbest_fitness: f64,
    pub gbest_cmse: f64,
    pub violations: usize,
}

#[derive(Clone, Debug)]
pub struct PsoOutcome {
    pub apv: AntennaPositionVector,
    pub report: FitnessReport,
    /// One row per iteration, starting with the initial swarm.
    pub trace: Vec<TraceRow>,
}

impl PsoOutcome {
    pub fn inner(&self) -> &InnerSolution {
        &self.report.inner
    }

    /// False when the best layout still violates the separation constraint.
    pub fn feasible(&self) -> bool {
        self.report.violation_count == 0
    }
}

/// Full two-loop optimization.
pub fn run(
    params: &PsoParams,
    region: &RegionSpec,
    m_antennas: usize,
    ctx: &FitnessContext<'_>,
    seed: u64,
) -> Result<PsoOutcome> {
    let mut swarm = init_swarm(params, region, m_antennas, ctx, seed)?;
    let mut trace = Vec::with_capacity(params.max_iter + 1);
    trace.push(swarm.trace_row());
    for _ in 0..params.max_iter {
        step(&mut swarm, params, region, ctx)?;
        trace.push(swarm.trace_row());
    }
    Ok(PsoOutcome {
        apv: swarm.gbest_position,
        report: swarm.gbest_report,
        trace,
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in trace {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
