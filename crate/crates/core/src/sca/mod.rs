//! Alternating-optimization benchmark: the combiner and transmit coefficients
//! come from the inner loop, and each antenna position is refined in turn by
//! successive convex approximation of the misalignment objective.

mod qp;
mod surrogate;

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use qp::{box_constraints, solve_antenna_qp, HalfPlane};
pub use surrogate::{build_surrogate, SurrogateModel};

use crate::aircomp::{
    inner_loop, misalignment, Combiner, InnerConfig, InnerSolution, NoiseSpec, TransmitCoeffs,
};
use crate::channel::{AntennaPosition, AntennaPositionVector, ChannelRealization, RegionSpec};
use crate::error::{Error, Result};
use crate::pso::violation_set;
use crate::seed::mix64;

/// Extra clearance added to the linearized separation constraints so that
/// rounding in the QP can never land an antenna just inside `D`.
const SEPARATION_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaParams {
    pub max_sca_iter: usize,
    pub sca_tol: f64,
    pub max_ao_rounds: usize,
    pub ao_tol: f64,
}

impl Default for ScaParams {
    fn default() -> Self {
        Self {
            max_sca_iter: 30,
            sca_tol: 1e-6,
            max_ao_rounds: 20,
            ao_tol: 1e-5,
        }
    }
}

impl ScaParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_sca_iter == 0 || self.max_ao_rounds == 0 || !(self.sca_tol > 0.0) || !(self.ao_tol > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "invalid SCA parameters: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Unit vector used in place of the undefined normal when antenna `m`'s
/// expansion point coincides with antenna `n`.
fn fallback_normal(m: usize, n: usize) -> [f64; 2] {
    let bits = mix64(((m as u64) << 32) ^ n as u64);
    let angle = (bits >> 11) as f64 / (1u64 << 53) as f64 * TAU;
    [angle.cos(), angle.sin()]
}

/// Linearized separation constraints for antenna `m` around its current
/// position: `(r_m^i - r_n)^T (r_m - r_n) / ||r_m^i - r_n|| >= D` for all `n ≠ m`.
pub fn relaxed_separation_constraints(apv: &AntennaPositionVector, m: usize, min_sep: f64) -> Vec<HalfPlane> {
    let anchor = apv.get(m);
    apv.iter()
        .enumerate()
        .filter(|(n, _)| *n != m)
        .map(|(n, other)| {
            let (dx, dy) = (anchor.x - other.x, anchor.y - other.y);
            let len = dx.hypot(dy);
            let normal = if len > 0.0 {
                [dx / len, dy / len]
            } else {
                fallback_normal(m, n)
            };
            HalfPlane {
                normal,
                offset: min_sep + normal[0] * other.x + normal[1] * other.y,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ScaOutcome {
    pub position: AntennaPosition,
    pub iterations: usize,
    /// Misalignment objective after each accepted step, starting at the
    /// incumbent.
    pub objective: Vec<f64>,
}

fn misalignment_at(
    apv: &mut AntennaPositionVector,
    m: usize,
    pos: AntennaPosition,
    realization: &ChannelRealization,
    combiner: &Combiner,
    coeffs: &TransmitCoeffs,
) -> f64 {
    let saved = apv.get(m);
    apv.set(m, pos);
    let value = misalignment(&realization.channels(apv), combiner, &coeffs.a);
    apv.set(m, saved);
    value
}

/// Refines antenna `m` with `w`, `a` and every other antenna held fixed.
pub fn sca_optimize_antenna(
    m: usize,
    apv: &AntennaPositionVector,
    realization: &ChannelRealization,
    combiner: &Combiner,
    coeffs: &TransmitCoeffs,
    region: &RegionSpec,
    params: &ScaParams,
) -> Result<ScaOutcome> {
    params.validate()?;
    let mut work = apv.clone();
    let mut current = apv.get(m);
    let mut value = misalignment_at(&mut work, m, current, realization, combiner, coeffs);
    let mut objective = vec![value];
    let mut iterations = 0;

    while iterations < params.max_sca_iter {
        work.set(m, current);
        let model = build_surrogate(m, &work, realization, combiner, coeffs)?;
        if !(model.xi > 0.0) {
            break;
        }
        let constraints = relaxed_separation_constraints(&work, m, region.min_separation + SEPARATION_MARGIN);
        let candidate = match solve_antenna_qp(model.xi, model.linear_coef(), region, &constraints) {
            Ok(p) => p,
            Err(Error::Infeasible) => break,
            Err(e) => return Err(e),
        };
        iterations += 1;
        let next = misalignment_at(&mut work, m, candidate, realization, combiner, coeffs);
        if next > value {
            break;
        }
        let decrement = value - next;
        current = candidate;
        value = next;
        objective.push(value);
        if decrement < params.sca_tol {
            break;
        }
    }
    Ok(ScaOutcome {
        position: current,
        iterations,
        objective,
    })
}

#[derive(Clone, Debug)]
pub struct AoOutcome {
    pub apv: AntennaPositionVector,
    pub inner: InnerSolution,
    /// CMSE after the initial inner loop and after every AO round.
    pub trace: Vec<f64>,
}

/// Alternates the inner loop over `(w, a)` with a sweep of per-antenna SCA
/// refinements until the CMSE decrement of a round drops below `ao_tol`.
pub fn ao_scheme(
    realization: &ChannelRealization,
    region: &RegionSpec,
    noise: NoiseSpec,
    power_cap: f64,
    init_apv: &AntennaPositionVector,
    params: &ScaParams,
    inner_cfg: &InnerConfig,
) -> Result<AoOutcome> {
    params.validate()?;
    if !init_apv.within(region) || violation_set(init_apv, region.min_separation) > 0 {
        return Err(Error::InvalidParameter(
            "AO needs a feasible initial antenna layout".into(),
        ));
    }
    let mut apv = init_apv.clone();
    let mut inner = inner_loop(&realization.channels(&apv), noise, power_cap, None, inner_cfg)?;
    let mut trace = vec![inner.cmse];

    for _ in 0..params.max_ao_rounds {
        for m in 0..apv.len() {
            let step = sca_optimize_antenna(
                m,
                &apv,
                realization,
                &inner.combiner,
                &inner.coeffs,
                region,
                params,
            )?;
            apv.set(m, step.position);
        }
        let next = inner_loop(
            &realization.channels(&apv),
            noise,
            power_cap,
            Some((&inner.combiner, &inner.coeffs)),
            inner_cfg,
        )?;
        let decrement = inner.cmse - next.cmse;
        inner = next;
        trace.push(inner.cmse);
        if decrement < params.ao_tol {
            break;
        }
    }
    Ok(AoOutcome { apv, inner, trace })
}

pub fn write_ao_trace_csv<W: Write>(trace: &[f64], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        round: usize,
        cmse: f64,
    }
    let mut writer = csv::Writer::from_writer(out);
    for (round, cmse) in trace.iter().enumerate() {
        writer.serialize(Row { round, cmse: *cmse })?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
