//! Exact solver for the 2D per-antenna subproblem
//! `min (ξ/2) r^T r + c^T r` over the region box and a list of half-planes.
//!
//! The Hessian is a multiple of the identity, so the minimizer is the
//! Euclidean projection of `-c/ξ` onto a convex polygon. That projection is
//! either the point itself, its projection onto one edge line, or a vertex,
//! and all of those candidates are enumerated.

use serde::Serialize;

use crate::channel::{AntennaPosition, RegionSpec};
use crate::error::{Error, Result};

const FEASIBILITY_TOL: f64 = 1e-10;

/// `normal · r >= offset`
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn slack(&self, pos: AntennaPosition) -> f64 {
        self.normal[0] * pos.x + self.normal[1] * pos.y - self.offset
    }

    pub fn contains(&self, pos: AntennaPosition) -> bool {
        self.slack(pos) >= -FEASIBILITY_TOL
    }
}

/// The four sides of `[-A/2, A/2]²` as half-planes.
pub fn box_constraints(region: &RegionSpec) -> [HalfPlane; 4] {
    let h = region.half_side();
    [
        HalfPlane {
            normal: [1.0, 0.0],
            offset: -h,
        },
        HalfPlane {
            normal: [-1.0, 0.0],
            offset: -h,
        },
        HalfPlane {
            normal: [0.0, 1.0],
            offset: -h,
        },
        HalfPlane {
            normal: [0.0, -1.0],
            offset: -h,
        },
    ]
}

fn objective(xi: f64, c: [f64; 2], p: AntennaPosition) -> f64 {
    0.5 * xi * (p.x * p.x + p.y * p.y) + c[0] * p.x + c[1] * p.y
}

fn project_onto_line(p: AntennaPosition, h: &HalfPlane) -> Option<AntennaPosition> {
    let nn = h.normal[0] * h.normal[0] + h.normal[1] * h.normal[1];
    if nn == 0.0 {
        return None;
    }
    let t = -h.slack(p) / nn;
    Some(AntennaPosition::new(p.x + t * h.normal[0], p.y + t * h.normal[1]))
}

fn intersect(a: &HalfPlane, b: &HalfPlane) -> Option<AntennaPosition> {
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    if det.abs() < 1e-14 {
        return None;
    }
    let x = (a.offset * b.normal[1] - a.normal[1] * b.offset) / det;
    let y = (a.normal[0] * b.offset - a.offset * b.normal[0]) / det;
    Some(AntennaPosition::new(x, y))
}

/// Minimizes `(ξ/2) r^T r + c^T r` over the region box intersected with
/// `constraints`. Returns [`Error::Infeasible`] when no point satisfies them.
pub fn solve_antenna_qp(
    xi: f64,
    linear_coef: [f64; 2],
    region: &RegionSpec,
    constraints: &[HalfPlane],
) -> Result<AntennaPosition> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "curvature must be positive and finite, got {xi}"
        )));
    }
    let all: Vec<HalfPlane> = box_constraints(region)
        .into_iter()
        .chain(constraints.iter().copied())
        .collect();
    let feasible = |p: &AntennaPosition| all.iter().all(|h| h.contains(*p));

    let centre = AntennaPosition::new(-linear_coef[0] / xi, -linear_coef[1] / xi);
    if feasible(&centre) {
        return Ok(centre);
    }

    let mut best: Option<(f64, AntennaPosition)> = None;
    let mut consider = |p: AntennaPosition| {
        if feasible(&p) {
            let f = objective(xi, linear_coef, p);
            if best.is_none_or(|(g, _)| f < g) {
                best = Some((f, p));
            }
        }
    };
    for h in &all {
        if let Some(p) = project_onto_line(centre, h) {
            consider(p);
        }
    }
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            if let Some(p) = intersect(&all[i], &all[j]) {
                consider(p);
            }
        }
    }
    best.map(|(_, p)| p).ok_or(Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use rand::Rng;

    #[test]
    fn unconstrained_interior_minimizer() {
        let p = solve_antenna_qp(4.0, [-2.0, 1.0], &RegionSpec::default(), &[]).unwrap();
        assert_eq!((p.x, p.y), (0.5, -0.25));
    }

    #[test]
    fn box_clamped_minimizer() {
        let p = solve_antenna_qp(2.0, [-10.0, 0.0], &RegionSpec::default(), &[]).unwrap();
        assert!((p.x - 1.5).abs() < 1e-15 && p.y.abs() < 1e-15);
    }

    #[test]
    fn corner_minimizer() {
        let p = solve_antenna_qp(1.0, [10.0, 10.0], &RegionSpec::default(), &[]).unwrap();
        assert!((p.x + 1.5).abs() < 1e-15 && (p.y + 1.5).abs() < 1e-15);
    }

    #[test]
    fn infeasible_set() {
        let cons = [
            HalfPlane {
                normal: [1.0, 0.0],
                offset: 1.0,
            },
            HalfPlane {
                normal: [-1.0, 0.0],
                offset: 0.0,
            },
        ];
        assert!(matches!(
            solve_antenna_qp(1.0, [0.0, 0.0], &RegionSpec::default(), &cons),
            Err(Error::Infeasible)
        ));
        assert!(solve_antenna_qp(0.0, [0.0, 0.0], &RegionSpec::default(), &[]).is_err());
    }

    /// Multipliers for the active set (at most two) must be non-negative and
    /// reproduce the objective gradient.
    fn kkt_residual(xi: f64, c: [f64; 2], p: AntennaPosition, cons: &[HalfPlane]) -> f64 {
        let g = [xi * p.x + c[0], xi * p.y + c[1]];
        let active: Vec<&HalfPlane> = cons.iter().filter(|h| h.slack(p).abs() < 1e-9).collect();
        match active.len() {
            0 => g[0].hypot(g[1]),
            1 => {
                let n = active[0].normal;
                let lambda = (g[0] * n[0] + g[1] * n[1]) / (n[0] * n[0] + n[1] * n[1]);
                let r = (g[0] - lambda * n[0]).hypot(g[1] - lambda * n[1]);
                r + (-lambda).max(0.0)
            }
            _ => {
                let (a, b) = (active[0].normal, active[1].normal);
                let det = a[0] * b[1] - a[1] * b[0];
                if det.abs() < 1e-12 {
                    return 0.0;
                }
                let l1 = (g[0] * b[1] - g[1] * b[0]) / det;
                let l2 = (a[0] * g[1] - a[1] * g[0]) / det;
                let r = (g[0] - l1 * a[0] - l2 * b[0]).hypot(g[1] - l1 * a[1] - l2 * b[1]);
                r + (-l1).max(0.0) + (-l2).max(0.0)
            }
        }
    }

    #[test]
    fn beats_rejection_sampling_and_satisfies_kkt() {
        let region = RegionSpec::default();
        let mut rng = stream(123, &[]);
        let mut solved = 0;
        while solved < 40 {
            let xi = rng.gen_range(0.1..10.0);
            let c = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            let n_cons = rng.gen_range(0..=5);
            let cons: Vec<HalfPlane> = (0..n_cons)
                .map(|_| {
                    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    HalfPlane {
                        normal: [angle.cos(), angle.sin()],
                        offset: rng.gen_range(-1.5..0.5),
                    }
                })
                .collect();
            let Ok(p) = solve_antenna_qp(xi, c, &region, &cons) else {
                continue;
            };
            solved += 1;
            assert!(region.contains(AntennaPosition::new(p.x, p.y)) || p.x.abs() <= 1.5 + 1e-10);
            let all: Vec<HalfPlane> = box_constraints(&region)
                .into_iter()
                .chain(cons.iter().copied())
                .collect();
            assert!(all.iter().all(|h| h.contains(p)));
            assert!(kkt_residual(xi, c, p, &all) < 1e-8);

            let f = objective(xi, c, p);
            let mut best_sample = f64::INFINITY;
            for _ in 0..100_000 {
                let s = AntennaPosition::new(rng.gen_range(-1.5..=1.5), rng.gen_range(-1.5..=1.5));
                if cons.iter().all(|h| h.slack(s) >= 0.0) {
                    best_sample = best_sample.min(objective(xi, c, s));
                }
            }
            assert!(f <= best_sample + 1e-12, "{f} > {best_sample}");
        }
    }
}
