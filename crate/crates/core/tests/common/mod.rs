//! Reference computations shared by the integration tests. Written from the
//! model definitions with plain loops, not through the library's helpers.
#![allow(dead_code)]

use std::f64::consts::PI;

use ma_aircomp::channel::{AntennaPosition, AntennaPositionVector, ChannelRealization, RegionSpec};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

/// `h_k[m] = Σ_l exp(-j 2π (x sinθ cosφ + y cosθ)) g_l`
pub fn channels(real: &ChannelRealization, apv: &AntennaPositionVector) -> Vec<Vec<C64>> {
    real.users()
        .iter()
        .map(|u| {
            apv.iter()
                .map(|p| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (ang, g) in u.angles().iter().zip(u.prv()) {
                        let rho = p.x * ang.theta.sin() * ang.phi.cos() + p.y * ang.theta.cos();
                        acc += C64::from_polar(1.0, -2.0 * PI * rho) * g;
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn misalignment(h: &[Vec<C64>], w: &[C64], a: &[C64]) -> f64 {
    let mut total = 0.0;
    for (hk, ak) in h.iter().zip(a) {
        let mut b = C64::new(0.0, 0.0);
        for (wm, hm) in w.iter().zip(hk) {
            b += wm.conj() * hm;
        }
        total += (ak * b - 1.0).norm_sqr();
    }
    total
}

pub fn cmse(h: &[Vec<C64>], w: &[C64], a: &[C64], noise_var: f64) -> f64 {
    misalignment(h, w, a) + noise_var * w.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn cn<R: Rng>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    C64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Uniform layout inside the region honouring the separation, by rejection.
pub fn feasible_layout<R: Rng>(rng: &mut R, region: &RegionSpec, m: usize) -> AntennaPositionVector {
    let h = region.half_side();
    let mut placed: Vec<AntennaPosition> = Vec::new();
    while placed.len() < m {
        let p = AntennaPosition::new(rng.gen_range(-h..=h), rng.gen_range(-h..=h));
        if placed.iter().all(|q| q.distance(&p) >= region.min_separation) {
            placed.push(p);
        }
    }
    AntennaPositionVector::new(placed).unwrap()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
