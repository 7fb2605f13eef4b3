//! Per-antenna majorizer of the misalignment objective.
//!
//! With `w`, `a` and every other antenna fixed, the misalignment term as a
//! function of antenna `m` is, up to a constant,
//!
//! ```text
//! G(r) = Σ_k f_k(r)^H B_k f_k(r) + 2 Re{q_k^H f_k(r)}
//! ```
//!
//! with `B_k = |a_k|² |w_m|² g_k g_k^H` and `q_k = (|a_k|² β_k - a_k) w_m^* g_k`,
//! `β_k = Σ_{i≠m} w_i h_{k,i}^*`. A curvature bound `ξ` turns `G` into a
//! quadratic upper bound that is tight at the expansion point.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::aircomp::{Combiner, TransmitCoeffs};
use crate::channel::{
    channel_entry, propagation_distance_diff, AntennaPosition, AntennaPositionVector, ChannelRealization,
    PathAngles,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::SquareMatrix;

#[derive(Clone, Debug)]
pub struct SurrogateModel {
    pub antenna: usize,
    pub b_matrices: Vec<SquareMatrix>,
    pub q_vectors: Vec<Vec<Complex64>>,
    pub xi: f64,
    pub expansion_point: AntennaPosition,
    betas: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    angles: Vec<Vec<PathAngles>>,
    value_at_expansion: f64,
    gradient_at_expansion: [f64; 2],
}

pub fn build_surrogate(
    m: usize,
    apv: &AntennaPositionVector,
    realization: &ChannelRealization,
    combiner: &Combiner,
    coeffs: &TransmitCoeffs,
) -> Result<SurrogateModel> {
    if m >= apv.len() {
        return Err(Error::InvalidParameter(format!(
            "antenna index {m} out of range for {} antennas",
            apv.len()
        )));
    }
    check_len("combiner vs antennas", apv.len(), combiner.w.len())?;
    check_len("coefficients vs users", realization.n_users(), coeffs.a.len())?;

    let w = &combiner.w;
    let wm = w[m];
    let mut b_matrices = Vec::with_capacity(realization.n_users());
    let mut q_vectors = Vec::with_capacity(realization.n_users());
    let mut betas = Vec::with_capacity(realization.n_users());
    let mut xi_sum = 0.0;

    for (user, a) in realization.users().iter().zip(&coeffs.a) {
        let beta: Complex64 = apv
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != m)
            .map(|(i, pos)| w[i] * channel_entry(*pos, user).conj())
            .sum();
        let g = user.prv();
        let power = a.norm_sqr();

        let mut b = SquareMatrix::zeros(g.len());
        b.add_outer(power * wm.norm_sqr(), g);
        let q: Vec<Complex64> = g.iter().map(|gp| (power * beta - a) * wm.conj() * gp).collect();

        let b_abs: f64 = (0..g.len())
            .flat_map(|i| (0..g.len()).map(move |j| (i, j)))
            .map(|(i, j)| b[(i, j)].norm())
            .sum();
        let q_abs: f64 = q.iter().map(|z| z.norm()).sum();
        xi_sum += 2.0 * b_abs + q_abs;

        b_matrices.push(b);
        q_vectors.push(q);
        betas.push(beta);
    }

    let mut model = SurrogateModel {
        antenna: m,
        b_matrices,
        q_vectors,
        xi: 16.0 * PI * PI * xi_sum,
        expansion_point: apv.get(m),
        betas,
        coeffs: coeffs.a.clone(),
        angles: realization.users().iter().map(|u| u.angles().to_vec()).collect(),
        value_at_expansion: 0.0,
        gradient_at_expansion: [0.0; 2],
    };
    model.value_at_expansion = model.g_value(model.expansion_point);
    model.gradient_at_expansion = model.g_gradient(model.expansion_point);
    Ok(model)
}

impl SurrogateModel {
    pub fn angles(&self) -> &[Vec<PathAngles>] {
        &self.angles
    }

    /// `G(r)` through the cosine expansion of the quadratic and linear forms.
    pub fn g_value(&self, pos: AntennaPosition) -> f64 {
        let mut total = 0.0;
        for ((b, q), angles) in self.b_matrices.iter().zip(&self.q_vectors).zip(&self.angles) {
            let rho: Vec<f64> = angles
                .iter()
                .map(|a| propagation_distance_diff(pos, *a))
                .collect();
            for i in 0..rho.len() {
                for j in 0..rho.len() {
                    let bij = b[(i, j)];
                    total += bij.norm() * (TAU * (rho[i] - rho[j]) - bij.arg()).cos();
                }
                total += 2.0 * q[i].norm() * (TAU * rho[i] - q[i].arg()).cos();
            }
        }
        total
    }

    /// `∇G(r)` as `[∂/∂x, ∂/∂y]`.
    pub fn g_gradient(&self, pos: AntennaPosition) -> [f64; 2] {
        let mut grad = [0.0; 2];
        for ((b, q), angles) in self.b_matrices.iter().zip(&self.q_vectors).zip(&self.angles) {
            let rho: Vec<f64> = angles
                .iter()
                .map(|a| propagation_distance_diff(pos, *a))
                .collect();
            let dirs: Vec<(f64, f64)> = angles.iter().map(PathAngles::direction).collect();
            for i in 0..rho.len() {
                for j in 0..rho.len() {
                    let bij = b[(i, j)];
                    let s = bij.norm() * (TAU * (rho[i] - rho[j]) - bij.arg()).sin();
                    grad[0] -= TAU * s * (dirs[i].0 - dirs[j].0);
                    grad[1] -= TAU * s * (dirs[i].1 - dirs[j].1);
                }
                let s = q[i].norm() * (TAU * rho[i] - q[i].arg()).sin();
                grad[0] -= 2.0 * TAU * s * dirs[i].0;
                grad[1] -= 2.0 * TAU * s * dirs[i].1;
            }
        }
        grad
    }

    pub fn value_at_expansion(&self) -> f64 {
        self.value_at_expansion
    }

    pub fn gradient_at_expansion(&self) -> [f64; 2] {
        self.gradient_at_expansion
    }

    /// Linear coefficient `∇G(r^i) - ξ r^i` of the quadratic surrogate.
    pub fn linear_coef(&self) -> [f64; 2] {
        let g = self.gradient_at_expansion;
        let r = self.expansion_point;
        [g[0] - self.xi * r.x, g[1] - self.xi * r.y]
    }

    /// Constant `Ω` that makes the surrogate tight at the expansion point.
    pub fn omega(&self) -> f64 {
        let g = self.gradient_at_expansion;
        let r = self.expansion_point;
        let half = 0.5 * self.xi;
        self.value_at_expansion - ((g[0] - half * r.x) * r.x + (g[1] - half * r.y) * r.y)
    }

    /// Quadratic upper bound `(ξ/2) r^T r + (∇G(r^i) - ξ r^i)^T r + Ω`.
    pub fn upper_bound(&self, pos: AntennaPosition) -> f64 {
        let c = self.linear_coef();
        0.5 * self.xi * (pos.x * pos.x + pos.y * pos.y) + c[0] * pos.x + c[1] * pos.y + self.omega()
    }

    /// Part of the misalignment objective that does not depend on antenna `m`:
    /// `Σ_k |a_k|² |β_k|² - 2 Re{a_k^* β_k} + 1`.
    pub fn constant_offset(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.betas)
            .map(|(a, beta)| a.norm_sqr() * beta.norm_sqr() - 2.0 * (a.conj() * beta).re + 1.0)
            .sum()
    }
}
