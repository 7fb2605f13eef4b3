//! Far-field field-response channel model for a 2D movable-antenna array.
//!
//! All geometry is measured in carrier wavelengths, so the phase of a path at
//! position `r` is simply `2π·ρ(r)`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square `A x A` moving region centred at the origin plus the minimum
/// inter-antenna distance `D`, both in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub side_length: f64,
    pub min_separation: f64,
}

impl RegionSpec {
    pub fn new(side_length: f64, min_separation: f64) -> Result<Self> {
        let region = Self {
            side_length,
            min_separation,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "region side length must be positive, got {}",
                self.side_length
            )));
        }
        if !(self.min_separation > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum separation must be positive, got {}",
                self.min_separation
            )));
        }
        if self.min_separation >= self.side_length * std::f64::consts::SQRT_2 {
            return Err(Error::InvalidParameter(format!(
                "minimum separation {} does not fit in a region of side {}",
                self.min_separation, self.side_length
            )));
        }
        Ok(())
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.side_length
    }

    pub fn contains(&self, pos: AntennaPosition) -> bool {
        let h = self.half_side();
        pos.x.abs() <= h && pos.y.abs() <= h
    }

    /// Clamps every coordinate into `[-A/2, A/2]`.
    pub fn clamp(&self, value: f64) -> f64 {
        let h = self.half_side();
        value.clamp(-h, h)
    }
}

impl Default for RegionSpec {
    fn default() -> Self {
        Self {
            side_length: 3.0,
            min_separation: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AntennaPosition {
    pub x: f64,
    pub y: f64,
}

impl AntennaPosition {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &AntennaPosition) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Positions of all `M` antennas, the optimization variable of the outer loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AntennaPositionVector {
    positions: Vec<AntennaPosition>,
}

impl AntennaPositionVector {
    pub fn new(positions: Vec<AntennaPosition>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter(
                "an antenna position vector needs at least one antenna".into(),
            ));
        }
        Ok(Self { positions })
    }

    /// Builds from interleaved `[x1, y1, x2, y2, ...]` coordinates.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "flattened position vector has odd length {}",
                coords.len()
            )));
        }
        Self::new(
            coords
                .chunks_exact(2)
                .map(|xy| AntennaPosition::new(xy[0], xy[1]))
                .collect(),
        )
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[AntennaPosition] {
        &self.positions
    }

    pub fn get(&self, m: usize) -> AntennaPosition {
        self.positions[m]
    }

    pub fn set(&mut self, m: usize, pos: AntennaPosition) {
        self.positions[m] = pos;
    }

    pub fn iter(&self) -> impl Iterator<Item = &AntennaPosition> {
        self.positions.iter()
    }

    pub fn within(&self, region: &RegionSpec) -> bool {
        self.positions.iter().all(|p| region.contains(*p))
    }
}

/// Elevation/azimuth angle of arrival of one path, radians in `[0, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PathAngles {
    pub theta: f64,
    pub phi: f64,
}

impl PathAngles {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=PI).contains(&self.theta) && (0.0..=PI).contains(&self.phi)
    }

    /// Gradient of the path-length difference with respect to `(x, y)`.
    pub fn direction(&self) -> (f64, f64) {
        (self.theta.sin() * self.phi.cos(), self.theta.cos())
    }
}

impl From<[f64; 2]> for PathAngles {
    fn from([theta, phi]: [f64; 2]) -> Self {
        Self { theta, phi }
    }
}

impl From<PathAngles> for [f64; 2] {
    fn from(a: PathAngles) -> Self {
        [a.theta, a.phi]
    }
}

/// Multipath description of one user: per-path AoAs and the path-response
/// vector (complex gains referenced to the region origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserChannel {
    angles: Vec<PathAngles>,
    prv: Vec<Complex64>,
}

impl UserChannel {
    pub fn new(angles: Vec<PathAngles>, prv: Vec<Complex64>) -> Result<Self> {
        if angles.is_empty() || angles.len() != prv.len() {
            return Err(Error::InvalidParameter(format!(
                "user channel needs equal, non-zero path counts (angles {}, prv {})",
                angles.len(),
                prv.len()
            )));
        }
        if let Some(bad) = angles.iter().find(|a| !a.is_valid()) {
            return Err(Error::InvalidParameter(format!(
                "angle of arrival outside [0, π]: {bad:?}"
            )));
        }
        Ok(Self { angles, prv })
    }

    pub fn angles(&self) -> &[PathAngles] {
        &self.angles
    }

    pub fn prv(&self) -> &[Complex64] {
        &self.prv
    }

    pub fn n_paths(&self) -> usize {
        self.angles.len()
    }
}

/// One draw of all users' channels together with their distances (meters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    users: Vec<UserChannel>,
    distances: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(users: Vec<UserChannel>, distances: Vec<f64>) -> Result<Self> {
        let realization = Self { users, distances };
        realization.validate()?;
        Ok(realization)
    }

    fn validate(&self) -> Result<()> {
        if self.users.is_empty() || self.users.len() != self.distances.len() {
            return Err(Error::InvalidParameter(format!(
                "realization needs equal, non-zero user and distance counts ({} vs {})",
                self.users.len(),
                self.distances.len()
            )));
        }
        if self.distances.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidParameter("user distances must be positive".into()));
        }
        for user in &self.users {
            UserChannel::new(user.angles.clone(), user.prv.clone())?;
        }
        Ok(())
    }

    pub fn users(&self) -> &[UserChannel] {
        &self.users
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// The first `k` users; realizations for smaller user counts are nested.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.users.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot take {k} users from a realization of {}",
                self.users.len()
            )));
        }
        Ok(Self {
            users: self.users[..k].to_vec(),
            distances: self.distances[..k].to_vec(),
        })
    }

    /// `h_k` for every user at the given antenna layout.
    pub fn channels(&self, apv: &AntennaPositionVector) -> Vec<Vec<Complex64>> {
        self.users.iter().map(|u| channel_vector(apv, u)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: Self = serde_json::from_str(text)?;
        parsed.validate()?;
        Ok(parsed)
    }
}

/// Path-length difference of a plane wave between `pos` and the origin.
pub fn propagation_distance_diff(pos: AntennaPosition, angles: PathAngles) -> f64 {
    let (dx, dy) = angles.direction();
    pos.x * dx + pos.y * dy
}

/// Receive field-response vector: one unit-modulus phasor per path.
pub fn field_response_vector(pos: AntennaPosition, user: &UserChannel) -> Vec<Complex64> {
    user.angles
        .iter()
        .map(|a| Complex64::from_polar(1.0, TAU * propagation_distance_diff(pos, *a)))
        .collect()
}

/// `h[m] = f(r_m)^H g` for every antenna.
pub fn channel_vector(apv: &AntennaPositionVector, user: &UserChannel) -> Vec<Complex64> {
    apv.iter().map(|&pos| channel_entry(pos, user)).collect()
}

pub(crate) fn channel_entry(pos: AntennaPosition, user: &UserChannel) -> Complex64 {
    field_response_vector(pos, user)
        .iter()
        .zip(&user.prv)
        .map(|(f, g)| f.conj() * g)
        .sum()
}

/// Statistical channel generator: i.i.d. uniform AoAs, uniform user distance,
/// and `CN(0, d^-α / L)` path coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSampler {
    pub k_users: usize,
    pub paths_per_user: usize,
    pub pathloss_exp: f64,
    pub dist_range: (f64, f64),
}

impl ChannelSampler {
    pub fn validate(&self) -> Result<()> {
        if self.k_users == 0 || self.paths_per_user == 0 {
            return Err(Error::InvalidParameter(
                "user and path counts must be at least 1".into(),
            ));
        }
        let (lo, hi) = self.dist_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "distance range must satisfy 0 < min <= max, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Variance of each path coefficient at distance `d`.
    pub fn path_variance(&self, distance: f64) -> f64 {
        distance.powf(-self.pathloss_exp) / self.paths_per_user as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        self.validate()?;
        let angle = Uniform::new_inclusive(0.0, PI);
        let (lo, hi) = self.dist_range;
        let standard = Normal::new(0.0, 1.0).expect("unit normal");

        let mut users = Vec::with_capacity(self.k_users);
        let mut distances = Vec::with_capacity(self.k_users);
        for _ in 0..self.k_users {
            let d = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            let component_sd = (0.5 * self.path_variance(d)).sqrt();
            let angles = (0..self.paths_per_user)
                .map(|_| PathAngles::new(angle.sample(rng), angle.sample(rng)))
                .collect();
            let prv = (0..self.paths_per_user)
                .map(|_| {
                    Complex64::new(
                        component_sd * standard.sample(rng),
                        component_sd * standard.sample(rng),
                    )
                })
                .collect();
            users.push(UserChannel { angles, prv });
            distances.push(d);
        }
        Ok(ChannelRealization { users, distances })
    }
}

impl Default for ChannelSampler {
    fn default() -> Self {
        Self {
            k_users: 10,
            paths_per_user: 5,
            pathloss_exp: 3.9,
            dist_range: (250.0, 300.0),
        }
    }
}

/// Estimated channel with every AoA shifted by an independent
/// `U[-μ/2, μ/2]` error, clamped back into `[0, π]`.
///
/// Each error is drawn as `μ·u` with `u ~ U[-1/2, 1/2]`, so reusing a stream
/// across several `μ` scales one fixed error pattern.
pub fn perturb_aoas<R: Rng + ?Sized>(
    realization: &ChannelRealization,
    max_error: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(max_error >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "maximum AoA error must be non-negative, got {max_error}"
        )));
    }
    let unit = Uniform::new_inclusive(-0.5, 0.5);
    let users = realization
        .users
        .iter()
        .map(|user| {
            let angles = user
                .angles
                .iter()
                .map(|a| {
                    let dt = max_error * unit.sample(rng);
                    let dp = max_error * unit.sample(rng);
                    PathAngles::new((a.theta + dt).clamp(0.0, PI), (a.phi + dp).clamp(0.0, PI))
                })
                .collect();
            UserChannel {
                angles,
                prv: user.prv.clone(),
            }
        })
        .collect();
    Ok(ChannelRealization {
        users,
        distances: realization.distances.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainSample {
    pub x: f64,
    pub y: f64,
    pub avg_gain: f64,
}

/// Lattice coordinates `-A/2, -A/2 + step, ...` up to `A/2`.
pub fn lattice_axis(region: &RegionSpec, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let h = region.half_side();
    let count = (region.side_length / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| -h + i as f64 * step).collect())
}

/// Single-antenna channel magnitude averaged over users, `(1/K) Σ |g_k^H f_k(r)|`,
/// over a lattice covering the region. Rows are ordered by `y`, then `x`.
pub fn channel_gain_map(
    realization: &ChannelRealization,
    region: &RegionSpec,
    grid_step: f64,
) -> Result<Vec<GainSample>> {
    let axis = lattice_axis(region, grid_step)?;
    let k = realization.n_users() as f64;
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &y in &axis {
        for &x in &axis {
            let pos = AntennaPosition::new(x, y);
            let avg_gain = realization
                .users
                .iter()
                .map(|u| channel_entry(pos, u).norm())
                .sum::<f64>()
                / k;
            out.push(GainSample { x, y, avg_gain });
        }
    }
    Ok(out)
}

pub fn write_gain_map_csv<W: Write>(samples: &[GainSample], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for s in samples {
        writer.serialize(s)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
