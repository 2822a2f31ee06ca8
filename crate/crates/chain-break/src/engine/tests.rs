use approx::{assert_abs_diff_eq, assert_relative_eq};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{ChainParams, Potential, ValidatedPotential};
use crate::oracle;
use crate::spectral::{drift_g, eigendecompose};
use crate::stats::{seed_stream, Sample};

use super::*;

fn quadratic_vp(u: f64, b_break: f64) -> ValidatedPotential {
    ValidatedPotential::new(Potential::quadratic(u).unwrap(), b_break, &[0.5]).unwrap()
}

fn cosh_vp(b_break: f64) -> ValidatedPotential {
    ValidatedPotential::new(Potential::cosh(), b_break, &[0.5]).unwrap()
}

#[test]
fn schedule_hits_boundaries_exactly() {
    let grid = SimGrid::new(0.35, 0.01, 2.0).unwrap();
    let s = Schedule::build(&grid, 10.0).unwrap();
    assert_eq!(s.boundaries()[0], 0.0);
    assert_eq!(s.end(), 10.0);
    // The switch point 8.0 must be a boundary.
    assert!(s.boundaries().iter().any(|&t| (t - 8.0).abs() < 1e-12));
    assert!(s.boundaries().windows(2).all(|w| w[1] > w[0]));
    // Steps never exceed the requested sizes.
    for (t0, t1) in s.steps() {
        let dt = t1 - t0;
        if t1 <= 8.0 + 1e-12 {
            assert!(dt <= 0.35 + 1e-12);
        } else {
            assert!(dt <= 0.01 + 1e-12);
        }
    }
}

#[test]
fn schedule_without_window_is_uniform() {
    let grid = SimGrid::new(0.5, 0.5, 0.0).unwrap();
    let s = Schedule::build(&grid, 3.0).unwrap();
    assert_eq!(s.len(), 6);
    assert!(Schedule::build(&grid, 0.0).is_err());
    assert!(Schedule::build(&grid, f64::INFINITY).is_err());
}

#[test]
fn grid_validation() {
    assert!(SimGrid::new(0.1, 0.2, 0.0).is_err());
    assert!(SimGrid::new(0.0, 0.0, 0.0).is_err());
    assert!(SimGrid::new(0.1, 0.1, -1.0).is_err());
    let params = ChainParams::new(3, 1e-3, 0.05, 2.0).unwrap();
    let auto = SimGrid::auto(&params, 2.0);
    assert_abs_diff_eq!(auto.coarse_dt, 0.05);
    assert_abs_diff_eq!(auto.fine_dt, 0.0025);
    // 3 gamma (sigma/eps) sqrt(ln(sigma/eps)) with gamma = sqrt(6).
    let expected = 3.0 * 6.0f64.sqrt() * 50.0 * 50.0f64.ln().sqrt();
    assert_relative_eq!(auto.window, expected, epsilon = 1e-12);
    // No window when sigma <= eps.
    let calm = ChainParams::new(3, 0.1, 0.05, 2.0).unwrap();
    assert_eq!(SimGrid::auto(&calm, 2.0).window, 0.0);
}

#[test]
fn deterministic_replay_is_bitwise() {
    let params = ChainParams::new(3, 0.05, 0.1, 2.0).unwrap();
    let grid = SimGrid::auto(&params, 1.0);
    let plan = LinearPlan::constant(&params, 1.0, &grid, None).unwrap();
    let a = plan.run(&mut seed_stream(7, 3));
    let b = plan.run(&mut seed_stream(7, 3));
    assert_eq!(a.first.tau.to_bits(), b.first.tau.to_bits());
    assert_eq!(a.first.link, b.first.link);
    assert_eq!(a.link_hits, b.link_hits);

    let vp = cosh_vp(2.0);
    let ea = simulate_nonlinear(&params, &vp, &grid, None, &mut seed_stream(9, 0)).unwrap();
    let eb = simulate_nonlinear(&params, &vp, &grid, None, &mut seed_stream(9, 0)).unwrap();
    assert_eq!(ea.tau.to_bits(), eb.tau.to_bits());
    assert_eq!(ea.link, eb.link);
}

#[test]
fn linear_noise_free_path_follows_drift_profile() {
    // sigma = 0: positions must equal i q_t + eps g_t^i, with g evaluated
    // independently by quadrature.
    let params = ChainParams::new(3, 0.01, 0.0, 2.0).unwrap();
    let grid = SimGrid::new(0.05, 0.05, 0.0).unwrap();
    let spectrum = eigendecompose(3).unwrap();
    let probes = [30.0, 120.0, 270.0];

    let vp = cosh_vp(2.0);
    let plan_tv = LinearPlan::time_varying(&params, &vp, &grid, None).unwrap();
    let quad_pot = Potential::quadratic(1.7).unwrap();
    let plan_c = LinearPlan::constant(&params, 1.7, &grid, None).unwrap();

    for (plan, pot) in [(&plan_tv, &vp.potential), (&plan_c, &quad_pot)] {
        let (_, obs) = plan.run_observed(&mut seed_stream(1, 1), &probes, false);
        assert_eq!(obs.len(), probes.len());
        for o in &obs {
            let g = drift_g(pot, &params, &spectrum, o.t).unwrap();
            let q = params.equilibrium_gap(o.t);
            for i in 1..3 {
                let expected = i as f64 * q + params.eps * g[i - 1];
                assert_relative_eq!(o.positions[i], expected, epsilon = 1e-7);
            }
            assert_abs_diff_eq!(o.positions[0], 0.0);
            assert_relative_eq!(o.positions[3], 3.0 * q, epsilon = 1e-12);
        }
    }
}

#[test]
fn composed_step_variance_is_stepsize_invariant() {
    // Exact transitions compose: the marginal mode variance after reaching
    // a fixed time must not depend on the step size.
    let params = ChainParams::new(3, 0.01, 0.1, 2.0).unwrap();
    let t_probe = 5.0;
    let mut variances = Vec::new();
    for dt in [0.1, 0.05] {
        let grid = SimGrid::new(dt, dt, 0.0).unwrap();
        let plan = LinearPlan::constant(&params, 1.0, &grid, Some(t_probe)).unwrap();
        variances.push(plan.composed_mode_variance(plan.schedule.len()));
    }
    for j in 0..2 {
        assert_abs_diff_eq!(variances[0][j], variances[1][j], epsilon = 1e-12);
        let exact =
            oracle::ou_variance(-eigendecompose(3).unwrap().lambdas[j] * 1.0, 0.1, t_probe)
                .unwrap();
        assert_abs_diff_eq!(variances[0][j], exact, epsilon = 1e-12);
    }
}

#[test]
fn time_varying_plan_matches_constant_for_quadratic() {
    // Same seed, same grid: identical paths.
    let params = ChainParams::new(3, 0.02, 0.08, 2.0).unwrap();
    let grid = SimGrid::auto(&params, 1.3);
    let vp = quadratic_vp(1.3, 2.0);
    let plan_c = LinearPlan::constant(&params, 1.3, &grid, None).unwrap();
    let plan_tv = LinearPlan::time_varying(&params, &vp, &grid, None).unwrap();
    for path in 0..4u64 {
        let (rc, oc) = plan_c.run_observed(&mut seed_stream(11, path), &[], true);
        let (rt, ot) = plan_tv.run_observed(&mut seed_stream(11, path), &[], true);
        assert_eq!(oc.len(), ot.len());
        let mut max_diff = 0.0f64;
        for (a, b) in oc.iter().zip(&ot) {
            for (pa, pb) in a.positions.iter().zip(&b.positions) {
                max_diff = max_diff.max((pa - pb).abs());
            }
        }
        assert!(max_diff <= 1e-10, "path {path}: max position diff {max_diff}");
        assert_abs_diff_eq!(rc.first.tau, rt.first.tau, epsilon = 1e-8);
        assert_eq!(rc.first.link, rt.first.link);
    }
}

#[test]
fn linear_mode_variance_matches_oracle_monte_carlo() {
    // Empirical variance of each mode at t = 5 within 3 SE of the closed
    // form (SE of a Gaussian sample variance is var * sqrt(2 / n)).
    let params = ChainParams::new(3, 0.01, 0.1, 2.0).unwrap();
    let grid = SimGrid::new(0.1, 0.1, 0.0).unwrap();
    let plan = LinearPlan::constant(&params, 1.0, &grid, Some(5.0)).unwrap();
    let n = 4000;
    let mut samples = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for path in 0..n {
        let (_, obs) = plan.run_observed(&mut seed_stream(5, path as u64), &[5.0], false);
        for j in 0..2 {
            samples[j].push(obs[0].modes[j]);
        }
    }
    let spectrum = eigendecompose(3).unwrap();
    for j in 0..2 {
        let s = Sample::new(samples[j].clone()).unwrap();
        let expected = oracle::ou_variance(-spectrum.lambdas[j], 0.1, 5.0).unwrap();
        let se = expected * (2.0 / n as f64).sqrt();
        assert!(
            (s.variance() - expected).abs() <= 3.0 * se,
            "mode {j}: var {} vs {expected} (3 SE = {})",
            s.variance(),
            3.0 * se
        );
    }
}

#[test]
fn time_varying_mode_variance_matches_quadrature_oracle() {
    // cosh chain with a single mode (d = 2, lambda = -2).
    let params = ChainParams::new(2, 0.01, 0.1, 2.0).unwrap();
    let vp = cosh_vp(2.0);
    let grid = SimGrid::new(0.1, 0.1, 0.0).unwrap();
    let t_probe = params.t_star() / 2.0;
    let plan = LinearPlan::time_varying(&params, &vp, &grid, Some(t_probe)).unwrap();
    let n = 4000;
    let mut values = Vec::with_capacity(n);
    for path in 0..n {
        let (_, obs) = plan.run_observed(&mut seed_stream(6, path as u64), &[t_probe], false);
        values.push(obs[0].modes[0]);
    }
    let s = Sample::new(values).unwrap();
    let expected =
        oracle::mode_variance(&vp.potential, &params, -2.0, params.sigma, t_probe).unwrap();
    let se = expected * (2.0 / n as f64).sqrt();
    assert!(
        (s.variance() - expected).abs() <= 3.0 * se,
        "var {} vs {expected}",
        s.variance()
    );
}

#[test]
fn noise_free_pull_free_chain_never_breaks() {
    // All drifts vanish at equal unit gaps: stationary equilibrium.
    let params = ChainParams::new(4, 0.0, 0.0, 2.0).unwrap();
    let vp = cosh_vp(2.0);
    let grid = SimGrid::new(0.25, 0.25, 0.0).unwrap();
    let event =
        simulate_nonlinear(&params, &vp, &grid, Some(10.0), &mut seed_stream(0, 0)).unwrap();
    assert!(event.censored);
    assert_abs_diff_eq!(event.tau, 10.0);
    // Without a horizon the infinite t_star must be rejected.
    assert!(simulate_nonlinear(&params, &vp, &grid, None, &mut seed_stream(0, 0)).is_err());
}

#[test]
fn euler_break_time_self_converges_to_linear_reference() {
    // sigma = 0, quadratic potential: the nonlinear chain IS the linear
    // one, so the exact-transition run provides the reference ODE break
    // time. Euler's error at dt must be within twice the dt -> dt/2
    // Richardson gap.
    let params = ChainParams::new(2, 0.01, 0.0, 2.0).unwrap();
    let vp = quadratic_vp(1.0, 2.0);
    let run_em = |dt: f64| {
        let grid = SimGrid::new(dt, dt, 0.0).unwrap();
        simulate_nonlinear(&params, &vp, &grid, None, &mut seed_stream(0, 0))
            .unwrap()
            .tau
    };
    let tau_ref = {
        let grid = SimGrid::new(0.05, 0.05, 0.0).unwrap();
        simulate_linear_constant(&params, 1.0, &grid, None, &mut seed_stream(0, 0))
            .unwrap()
            .tau
    };
    let tau_h = run_em(0.05);
    let tau_h2 = run_em(0.025);
    let gap = (tau_h - tau_h2).abs();
    assert!(
        (tau_h - tau_ref).abs() <= 2.0 * gap + 1e-9,
        "tau(dt) = {tau_h}, tau(dt/2) = {tau_h2}, reference = {tau_ref}"
    );
    // And the halved step must actually be closer.
    assert!((tau_h2 - tau_ref).abs() <= (tau_h - tau_ref).abs() + 1e-12);
}

#[test]
fn nonlinear_mean_gap_tracks_equilibrium() {
    // At t = t_star / 2 the mean interior gap equals q_t plus the tiny
    // eps-scale drift correction, estimated here over 1000 paths.
    let params = ChainParams::new(3, 1e-3, 0.05, 2.0).unwrap();
    let vp = cosh_vp(2.0);
    let grid = SimGrid::new(0.05, 0.05, 0.0).unwrap();
    let t_probe = params.t_star() / 2.0;
    let schedule = Schedule::build(&grid, t_probe).unwrap();
    let n = 1000;
    let mut gaps = Vec::with_capacity(n);
    for path in 0..n {
        let (_, obs) = run_nonlinear_observed(
            &params,
            &vp,
            &schedule,
            &mut seed_stream(21, path as u64),
            &[t_probe],
        )
        .unwrap();
        let p = &obs[0].positions;
        gaps.push(p[2] - p[1]);
    }
    let s = Sample::new(gaps).unwrap();
    let spectrum = eigendecompose(3).unwrap();
    let g = drift_g(&vp.potential, &params, &spectrum, t_probe).unwrap();
    let expected = params.equilibrium_gap(t_probe) + params.eps * (g[1] - g[0]);
    assert_abs_diff_eq!(expected, 1.5, epsilon = 1e-2);
    let tol = 3.0 * s.std_error();
    assert!(
        (s.mean() - expected).abs() <= tol,
        "mean gap {} vs {expected} (3 SE = {tol})",
        s.mean()
    );
}

#[test]
fn euler_strong_error_shrinks_with_step() {
    // Quadratic chain driven by the same noise as the exact sampler: the
    // mean-square gap at t = t_star / 2 is Euler's strong error and must
    // shrink by at least 1.5x when the step is halved.
    let params = ChainParams::new(3, 0.01, 0.1, 2.0).unwrap();
    let u = 1.0;
    let spectrum = eigendecompose(3).unwrap();
    let t_probe = params.t_star() / 2.0;
    let n_paths = 400;

    let msq_for = |dt: f64| {
        let grid = SimGrid::new(dt, dt, 0.0).unwrap();
        let plan = LinearPlan::constant(&params, u, &grid, Some(t_probe)).unwrap();
        let mut total = 0.0;
        for path in 0..n_paths {
            let mut rng = seed_stream(33, path as u64);
            // Euler state (interior sites) and exact mode state.
            let mut x = [1.0f64, 2.0];
            let mut modes = [0.0f64; 2];
            let mut gmodes = [0.0f64; 2];
            for (step, (t0, t1)) in plan.schedule.steps().enumerate() {
                let h = t1 - t0;
                let xs: Vec<f64> = (0..2).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                // site -> mode rotation of the same normals
                let eta = spectrum.sites_to_modes(&xs);
                let right = 3.0 + params.eps * t0;
                let gaps = [x[0], x[1] - x[0], right - x[1]];
                let scale = params.sigma * h.sqrt();
                x[0] += u * (gaps[1] - gaps[0]) * h + scale * xs[0];
                x[1] += u * (gaps[2] - gaps[1]) * h + scale * xs[1];
                for j in 0..2 {
                    let base = step * 2 + j;
                    modes[j] = plan.decay_at(base) * modes[j] + plan.noise_sd_at(base) * eta[j];
                    gmodes[j] = plan.decay_at(base) * gmodes[j] - plan.gstep_at(base);
                }
            }
            let t_end = plan.schedule.end();
            let q = params.equilibrium_gap(t_end);
            for k in 1..3usize {
                let mut acc = 0.0;
                for j in 0..2 {
                    acc += spectrum.q[j][k - 1] * (params.eps * gmodes[j] + modes[j]);
                }
                let exact = k as f64 * q + acc;
                let diff = x[k - 1] - exact;
                total += diff * diff;
            }
        }
        total / n_paths as f64
    };

    let coarse = msq_for(0.1);
    let fine = msq_for(0.05);
    assert!(
        coarse / fine >= 1.5,
        "strong error did not shrink: {coarse} -> {fine}"
    );
}

#[test]
fn coupled_quadratic_systems_coincide() {
    let params = ChainParams::new(3, 0.02, 0.1, 2.0).unwrap();
    let vp = quadratic_vp(1.0, 2.0);
    let grid = SimGrid::new(0.05, 0.01, 5.0).unwrap();
    let rec = simulate_coupled(&params, &vp, &grid, None, &mut seed_stream(3, 0)).unwrap();
    assert!(rec.s_star <= 1e-10, "S* = {}", rec.s_star);
    assert_eq!(rec.break_x.link, rec.break_z.link);
    assert_abs_diff_eq!(rec.break_x.tau, rec.break_z.tau, epsilon = 1e-9);
}

#[test]
fn coupled_linearisation_gap_shrinks_with_eps() {
    // Deterministic runs: S* is the ODE-vs-linearisation distance and must
    // decrease when the pulling slows down.
    let vp = cosh_vp(2.0);
    let s_star_for = |eps: f64| {
        let params = ChainParams::new(3, eps, 0.0, 2.0).unwrap();
        let grid = SimGrid::new(0.02, 0.02, 0.0).unwrap();
        simulate_coupled(&params, &vp, &grid, None, &mut seed_stream(0, 0))
            .unwrap()
            .s_star
    };
    let coarse = s_star_for(1e-2);
    let fine = s_star_for(1e-3);
    assert!(fine < coarse, "S*({:.0e}) = {coarse}, S*({:.0e}) = {fine}", 1e-2, 1e-3);
    assert!(coarse > 0.0);
}

#[test]
fn nonlinear_domain_escape_is_reported() {
    // A small certified margin plus violent noise walks a gap past
    // b_break + r while the chain keeps running in a coupled simulation.
    let params = ChainParams::new(3, 0.05, 0.6, 1.3).unwrap();
    let vp = ValidatedPotential::new(Potential::cosh(), 1.3, &[0.05]).unwrap();
    let grid = SimGrid::new(0.01, 0.01, 0.0).unwrap();
    let mut escapes = 0;
    for path in 0..20 {
        match simulate_coupled(&params, &vp, &grid, None, &mut seed_stream(90, path)) {
            Err(crate::error::Error::DomainEscape { t, link, gap }) => {
                assert!(gap > 1.35);
                assert!((1..=3).contains(&link));
                assert!(t > 0.0);
                escapes += 1;
            }
            Ok(_) => {}
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
    assert!(escapes > 0, "no domain escapes observed");
}
