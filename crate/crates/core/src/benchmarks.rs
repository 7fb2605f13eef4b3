//! Fixed-position array and alternating position selection baselines.

use serde::{Deserialize, Serialize};

use crate::aircomp::{inner_loop, InnerConfig, InnerSolution, NoiseSpec};
use crate::channel::{lattice_axis, AntennaPosition, AntennaPositionVector, ChannelRealization, RegionSpec};
use crate::error::{Error, Result};

/// Element spacing of the fixed uniform planar array, in wavelengths.
pub const FPA_SPACING: f64 = 0.5;

/// Most square `rows x cols = m` factorization, preferring more columns.
fn planar_shape(m: usize) -> (usize, usize) {
    let mut rows = (m as f64).sqrt().floor() as usize;
    while !m.is_multiple_of(rows) {
        rows -= 1;
    }
    (rows, m / rows)
}

/// Centred uniform planar array with half-wavelength spacing.
pub fn fpa_layout(m_antennas: usize, region: &RegionSpec) -> Result<AntennaPositionVector> {
    if m_antennas == 0 {
        return Err(Error::InvalidParameter("need at least one antenna".into()));
    }
    let (rows, cols) = planar_shape(m_antennas);
    let half_extent = 0.5 * (rows.max(cols) - 1) as f64 * FPA_SPACING;
    if half_extent > region.half_side() {
        return Err(Error::Config(format!(
            "a {rows}x{cols} array with spacing {FPA_SPACING} does not fit in a region of side {}",
            region.side_length
        )));
    }
    let offset = |count: usize, i: usize| (i as f64 - 0.5 * (count - 1) as f64) * FPA_SPACING;
    let positions = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| AntennaPosition::new(offset(cols, c), offset(rows, r))))
        .collect();
    AntennaPositionVector::new(positions)
}

/// Candidate antenna locations for position selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    points: Vec<AntennaPosition>,
}

impl GridSpec {
    /// Square lattice with the given step covering the region.
    pub fn lattice(region: &RegionSpec, step: f64) -> Result<Self> {
        let axis = lattice_axis(region, step)?;
        let points = axis
            .iter()
            .flat_map(|&y| axis.iter().map(move |&x| AntennaPosition::new(x, y)))
            .collect();
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<AntennaPosition>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[AntennaPosition] {
        &self.points
    }
}

#[derive(Clone, Debug)]
pub struct ApsOutcome {
    pub apv: AntennaPositionVector,
    pub inner: InnerSolution,
    /// CMSE at the start and after every accepted move.
    pub moves: Vec<f64>,
    pub rounds: usize,
}

/// Moves one antenna at a time to the grid point with the lowest inner-loop
/// CMSE among those that keep the separation constraint, until a full sweep
/// changes nothing or `max_rounds` sweeps have run. Candidates are warm
/// started from the incumbent `(w, a)`; a move needs a strict improvement.
#[allow(clippy::too_many_arguments)]
pub fn aps_optimize(
    realization: &ChannelRealization,
    region: &RegionSpec,
    grid: &GridSpec,
    noise: NoiseSpec,
    power_cap: f64,
    init_apv: &AntennaPositionVector,
    inner_cfg: &InnerConfig,
    max_rounds: usize,
) -> Result<ApsOutcome> {
    let mut apv = init_apv.clone();
    let mut inner = inner_loop(&realization.channels(&apv), noise, power_cap, None, inner_cfg)?;
    let mut moves = vec![inner.cmse];
    let mut rounds = 0;

    while rounds < max_rounds {
        rounds += 1;
        let mut changed = false;
        for m in 0..apv.len() {
            let mut best: Option<(AntennaPosition, InnerSolution)> = None;
            for &candidate in grid.points() {
                if candidate == apv.get(m) || !region.contains(candidate) {
                    continue;
                }
                let clear = apv
                    .iter()
                    .enumerate()
                    .all(|(n, other)| n == m || candidate.distance(other) >= region.min_separation);
                if !clear {
                    continue;
                }
                let mut trial = apv.clone();
                trial.set(m, candidate);
                let sol = inner_loop(
                    &realization.channels(&trial),
                    noise,
                    power_cap,
                    Some((&inner.combiner, &inner.coeffs)),
                    inner_cfg,
                )?;
                let incumbent = best.as_ref().map_or(inner.cmse, |(_, s)| s.cmse);
                if sol.cmse < incumbent {
                    best = Some((candidate, sol));
                }
            }
            if let Some((pos, sol)) = best {
                apv.set(m, pos);
                inner = sol;
                moves.push(inner.cmse);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(ApsOutcome {
        apv,
        inner,
        moves,
        rounds,
    })
}
