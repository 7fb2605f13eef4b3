mod common;

use ma_aircomp::aircomp::{inner_loop, InnerConfig, NoiseSpec};
use ma_aircomp::benchmarks::{aps_optimize, fpa_layout, GridSpec};
use ma_aircomp::channel::{AntennaPosition, AntennaPositionVector, ChannelSampler, RegionSpec};
use ma_aircomp::pso::{self, fitness, violation_set, FitnessContext, PsoParams};
use ma_aircomp::sca::{ao_scheme, relaxed_separation_constraints, sca_optimize_antenna, ScaParams};
use ma_aircomp::seed::stream;
use rand::Rng;

fn noise() -> NoiseSpec {
    NoiseSpec::new(1e-8).unwrap()
}

#[test]
fn violation_count_matches_brute_force() {
    let mut rng = stream(1, &[]);
    for _ in 0..200 {
        let coords: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let apv = AntennaPositionVector::from_flat(&coords).unwrap();
        let mut brute = 0;
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (apv.get(i), apv.get(j));
                if i < j && ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt() < 0.5 {
                    brute += 1;
                }
            }
        }
        assert_eq!(violation_set(&apv, 0.5), brute);
    }
}

#[test]
fn penalty_separates_feasible_from_infeasible() {
    let real = ChannelSampler {
        k_users: 6,
        ..Default::default()
    }
    .sample(&mut stream(2, &[]))
    .unwrap();
    let ctx = FitnessContext {
        realization: &real,
        noise: noise(),
        power_cap: 10.0,
        min_sep: 0.5,
        inner: InnerConfig::default(),
    };
    // CMSE never exceeds K here, so tau = K + 1 dominates it.
    let tau = 7.0;
    let feasible = fpa_layout(4, &RegionSpec::default()).unwrap();
    let clash = AntennaPositionVector::from_flat(&[0.0, 0.0, 0.1, 0.0, 1.0, 1.0, -1.0, -1.0]).unwrap();
    let f = fitness(&feasible, &ctx, tau).unwrap();
    let g = fitness(&clash, &ctx, tau).unwrap();
    assert_eq!(f.fitness, f.cmse);
    assert_eq!(g.violation_count, 1);
    assert_eq!(g.fitness, g.cmse + tau);
    assert!(f.fitness < g.fitness);
}

#[test]
fn single_antenna_pso_beats_region_centre() {
    let region = RegionSpec::default();
    let params = PsoParams {
        n_particles: 30,
        max_iter: 40,
        ..Default::default()
    };
    for s in 0..5 {
        let real = ChannelSampler {
            k_users: 4,
            ..Default::default()
        }
        .sample(&mut stream(3, &[s]))
        .unwrap();
        let ctx = FitnessContext {
            realization: &real,
            noise: noise(),
            power_cap: 10.0,
            min_sep: 0.5,
            inner: InnerConfig::default(),
        };
        let out = pso::run(&params, &region, 1, &ctx, s).unwrap();
        let centre = AntennaPositionVector::new(vec![AntennaPosition::new(0.0, 0.0)]).unwrap();
        let at_centre = fitness(&centre, &ctx, params.penalty_tau).unwrap();
        assert!(out.report.cmse <= at_centre.cmse);
        assert_eq!(out.trace.len(), params.max_iter + 1);
        assert!(out.apv.within(&region));
    }
}

#[test]
fn pso_is_independent_of_thread_count() {
    let region = RegionSpec::default();
    let params = PsoParams {
        n_particles: 16,
        max_iter: 10,
        ..Default::default()
    };
    let real = ChannelSampler {
        k_users: 5,
        ..Default::default()
    }
    .sample(&mut stream(4, &[]))
    .unwrap();
    let ctx = FitnessContext {
        realization: &real,
        noise: noise(),
        power_cap: 10.0,
        min_sep: 0.5,
        inner: InnerConfig::default(),
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| pso::run(&params, &region, 3, &ctx, 9).unwrap())
    };
    let (a, b) = (run(1), run(5));
    assert_eq!(a.apv, b.apv);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn relaxed_constraints_imply_separation() {
    let region = RegionSpec::default();
    let mut rng = stream(5, &[]);
    for _ in 0..50 {
        let apv = common::feasible_layout(&mut rng, &region, 4);
        let cons = relaxed_separation_constraints(&apv, 0, 0.5);
        for _ in 0..2000 {
            let p = AntennaPosition::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            if cons.iter().all(|c| c.contains(p)) {
                assert!(apv.iter().skip(1).all(|q| q.distance(&p) >= 0.5 - 1e-9));
            }
        }
    }
}

#[test]
fn sca_descends_and_stays_feasible() {
    let region = RegionSpec::default();
    for s in 0..10 {
        let mut rng = stream(6, &[s]);
        let real = ChannelSampler::default().sample(&mut rng).unwrap();
        let apv = common::feasible_layout(&mut rng, &region, 4);
        let sol = inner_loop(&real.channels(&apv), noise(), 10.0, None, &InnerConfig::default()).unwrap();
        let m = s as usize % 4;
        let out = sca_optimize_antenna(
            m,
            &apv,
            &real,
            &sol.combiner,
            &sol.coeffs,
            &region,
            &ScaParams::default(),
        )
        .unwrap();
        assert!(out.objective.windows(2).all(|w| w[1] <= w[0]));
        assert!(region.contains(out.position));
        assert!(apv
            .iter()
            .enumerate()
            .all(|(n, q)| n == m || q.distance(&out.position) >= 0.5));

        let mut moved = apv.clone();
        moved.set(m, out.position);
        let direct = common::misalignment(&common::channels(&real, &moved), &sol.combiner.w, &sol.coeffs.a);
        let last = *out.objective.last().unwrap();
        assert!((direct - last).abs() <= 1e-10 * last.max(1.0));
    }
}

#[test]
fn ao_improves_on_its_start() {
    let region = RegionSpec::default();
    let init = fpa_layout(4, &region).unwrap();
    for s in 0..5 {
        let real = ChannelSampler::default().sample(&mut stream(7, &[s])).unwrap();
        let base = inner_loop(
            &real.channels(&init),
            noise(),
            10.0,
            None,
            &InnerConfig::default(),
        )
        .unwrap();
        let out = ao_scheme(
            &real,
            &region,
            noise(),
            10.0,
            &init,
            &ScaParams::default(),
            &InnerConfig::default(),
        )
        .unwrap();
        assert!(out.inner.cmse <= base.cmse);
        assert_eq!(violation_set(&out.apv, 0.5), 0);
        assert!(out.apv.within(&region));
    }
}

#[test]
fn aps_single_user_picks_strongest_grid_point() {
    let region = RegionSpec::default();
    let grid = GridSpec::lattice(&region, 0.25).unwrap();
    let init = fpa_layout(1, &region).unwrap();
    for s in 0..10 {
        let real = ChannelSampler {
            k_users: 1,
            ..Default::default()
        }
        .sample(&mut stream(8, &[s]))
        .unwrap();
        let out = aps_optimize(
            &real,
            &region,
            &grid,
            noise(),
            10.0,
            &init,
            &InnerConfig::default(),
            5,
        )
        .unwrap();
        let gain = |p: AntennaPosition| {
            let apv = AntennaPositionVector::new(vec![p]).unwrap();
            common::channels(&real, &apv)[0][0].norm()
        };
        let best = grid.points().iter().map(|&p| gain(p)).fold(0.0, f64::max);
        assert!((gain(out.apv.get(0)) - best).abs() <= 1e-12 * best, "seed {s}");
    }
}
