//! Property tests for the invariants of the grid, special functions,
//! propagators, solver and integral-inequality engine.

use dampwave::grid::{lp_norm, make_grid, moment, weighted_norm, GridFunction, NormKind};
use dampwave::odi::{odi_blowup_time, simulate_odi, OdiConfig};
use dampwave::propagators::{symbol_at, LinearFlow};
use dampwave::solver::{march_fixed, solve_lifespan, Equation, LifespanStatus, SolverControl};
use dampwave::special::{lambert_w0, make_data_family, DataFamily, MomentClass};
use proptest::prelude::*;

fn bump(spec: dampwave::GridSpec, center: f64, width: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x| (-((x - center) / width).powi(2)).exp())
}

fn l2(f: &GridFunction) -> f64 {
    lp_norm(f, 2.0).unwrap()
}

proptest! {
    #[test]
    fn lp_norm_is_homogeneous(c in -50.0f64..50.0, p in 1.0f64..6.0, w in 0.5f64..4.0) {
        let spec = make_grid(30.0, 512).unwrap();
        let f = bump(spec, 1.0, w);
        let lhs = lp_norm(&f.scale(c), p).unwrap();
        let rhs = c.abs() * lp_norm(&f, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn moments_are_linear(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 0usize..4) {
        let spec = make_grid(40.0, 1024).unwrap();
        let f = bump(spec, 0.5, 1.0);
        let g = bump(spec, -1.0, 2.0);
        let lhs = moment(&f.combine(a, &g, b).unwrap(), k).unwrap();
        let rhs = a * moment(&f, k).unwrap() + b * moment(&g, k).unwrap();
        let scale = (a * moment(&f, k).unwrap()).abs().max((b * moment(&g, k).unwrap()).abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn refinement_leaves_gaussian_norms(p in 1.0f64..4.0, w in 0.7f64..3.0) {
        let coarse = make_grid(40.0, 1024).unwrap();
        let a = lp_norm(&bump(coarse, 0.0, w), p).unwrap();
        let b = lp_norm(&bump(coarse.refined(), 0.0, w), p).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn lambert_identity(e in -8.0f64..8.0) {
        let z = 10f64.powf(e);
        let w = lambert_w0(z).unwrap();
        prop_assert!((w * w.exp() - z).abs() / z.max(1.0) <= 1e-13);
    }

    #[test]
    fn symbol_anchors_at_zero_frequency(t in 0.0f64..50.0) {
        let (s, st) = symbol_at(t, 0.0);
        prop_assert!((s - (1.0 - (-t).exp())).abs() <= 1e-14);
        prop_assert!((st - (-t).exp()).abs() <= 1e-14);
    }

    #[test]
    fn linear_flow_composes(s in 0.0f64..5.0, t in 0.0f64..5.0) {
        let spec = make_grid(40.0, 512).unwrap();
        let freq = spec.spectral().freq().to_vec();
        let u = bump(spec, 0.0, 1.5);
        let v = bump(spec, 2.0, 1.0).scale(-0.5);
        let (u1, v1) = LinearFlow::new(s, &freq).apply_to(&u, &v);
        let (u2, v2) = LinearFlow::new(t, &freq).apply_to(&u1, &v1);
        let (u3, v3) = LinearFlow::new(s + t, &freq).apply_to(&u, &v);
        let du = l2(&u2.combine(1.0, &u3, -1.0).unwrap());
        let dv = l2(&v2.combine(1.0, &v3, -1.0).unwrap());
        prop_assert!(du.hypot(dv) <= 1e-10 * l2(&u3).hypot(l2(&v3)));
    }

    #[test]
    fn odi_zero_forcing_stays_zero(p in 1.1f64..3.0, beta in 0.0f64..0.9) {
        let cfg = OdiConfig { horizon: 50.0, ..OdiConfig::new(p, beta, 0.0) };
        let tr = simulate_odi(&cfg).unwrap();
        prop_assert!(tr.blowup_time.is_none());
        prop_assert!(tr.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odi_stronger_coupling_never_delays(c1 in 0.5f64..2.0, c2 in 0.5f64..2.0, k in 1.0f64..3.0) {
        let base = OdiConfig { c1, c2, ..OdiConfig::new(2.0, 0.25, 0.05) };
        let stronger = OdiConfig { c1: k * c1, c2: k * c2, ..base };
        prop_assert!(odi_blowup_time(&stronger).unwrap() <= odi_blowup_time(&base).unwrap());
    }

    #[test]
    fn odi_smaller_eps_blows_up_later(e in -2.0f64..-1.0, p in 1.5f64..3.0) {
        let eps = 10f64.powf(e);
        let cfg = OdiConfig { horizon: 1e7, ..OdiConfig::new(p, 0.0, eps) };
        let half = OdiConfig { eps: eps / 2.0, ..cfg };
        prop_assert!(odi_blowup_time(&half).unwrap() > odi_blowup_time(&cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zero_data_is_a_fixed_point(p in 1.05f64..3.0) {
        let spec = make_grid(20.0, 128).unwrap();
        let data = make_data_family(MomentClass::M0Nonzero, 0.0, spec).unwrap();
        let traj = march_fixed(&data, &Equation::new(p), 0.1, 20, 5).unwrap();
        prop_assert!(traj.states().iter().all(|(u, v)| u.max_abs() == 0.0 && v.max_abs() == 0.0));
        let est = solve_lifespan(&data, &Equation::new(p), &SolverControl::with_horizon(10.0))
            .unwrap()
            .estimate;
        prop_assert_eq!(est.status, LifespanStatus::SurvivedHorizon);
    }

    #[test]
    fn linear_energy_does_not_grow(a in 0.1f64..2.0, c in -3.0f64..3.0, w in 0.8f64..2.5) {
        let spec = make_grid(60.0, 1024).unwrap();
        let data = DataFamily {
            f0: bump(spec, c, w),
            f1: bump(spec, -c, w).scale(-0.3),
            eps: a,
            moment_class: MomentClass::M0Nonzero,
            label: "bump".into(),
            degenerate: false,
            periodic: false,
        };
        let traj = march_fixed(&data, &Equation::linear(), 0.25, 80, 1).unwrap();
        let norms: Vec<(f64, f64)> = traj
            .times()
            .iter()
            .zip(traj.states())
            .filter(|(t, _)| **t >= 1.0)
            .map(|(t, (u, _))| (*t, l2(u)))
            .collect();
        for pair in norms.windows(2) {
            prop_assert!(pair[1].1 <= pair[0].1 * (1.0 + 1e-10), "{:?}", pair);
        }
    }

    #[test]
    fn larger_positive_data_blow_up_sooner(a in 0.6f64..1.5, k in 1.1f64..2.0) {
        // the blow-up spike must stay resolved until the bracket closes
        let spec = make_grid(32.0, 2048).unwrap();
        let eq = Equation::new(2.0);
        let ctrl = SolverControl::with_horizon(40.0);
        let t = |eps: f64| {
            solve_lifespan(&make_data_family(MomentClass::M0Nonzero, eps, spec).unwrap(), &eq, &ctrl)
                .unwrap()
                .estimate
        };
        let (small, large) = (t(a), t(k * a));
        prop_assert_eq!(small.status, LifespanStatus::BlownUp);
        prop_assert_eq!(large.status, LifespanStatus::BlownUp);
        prop_assert!(large.t_high <= small.t_high);
    }

    #[test]
    fn blown_up_estimates_are_tight_brackets(a in 0.3f64..2.0, p in 1.3f64..3.0) {
        let spec = make_grid(10.0, 16).unwrap();
        let est = solve_lifespan(&DataFamily::constant(a, spec), &Equation::new(p), &SolverControl::with_horizon(1e3))
            .unwrap()
            .estimate;
        prop_assert_eq!(est.status, LifespanStatus::BlownUp);
        prop_assert!(est.t_low <= est.t_high);
        prop_assert!(est.t_high - est.t_low <= 0.01 * est.t_high);
        prop_assert!(est.bracket_ok());
    }

    #[test]
    fn lifespan_runs_are_deterministic(eps in 0.5f64..1.5) {
        let spec = make_grid(40.0, 512).unwrap();
        let data = make_data_family(MomentClass::M0Nonzero, eps, spec).unwrap();
        let ctrl = SolverControl { trace_functionals: true, ..SolverControl::with_horizon(30.0) };
        let a = solve_lifespan(&data, &Equation::new(2.0), &ctrl).unwrap();
        let b = solve_lifespan(&data, &Equation::new(2.0), &ctrl).unwrap();
        prop_assert_eq!(a.estimate.t_high.to_bits(), b.estimate.t_high.to_bits());
        prop_assert_eq!(a.estimate.steps, b.estimate.steps);
        prop_assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
    }

    #[test]
    fn x_norm_grows_with_the_trajectory(eps in 0.05f64..0.5, cut in 1usize..15) {
        let spec = make_grid(40.0, 256).unwrap();
        let data = make_data_family(MomentClass::M0Nonzero, eps, spec).unwrap();
        let traj = march_fixed(&data, &Equation::new(2.0), 0.2, 20, 1).unwrap();
        let t_cut = traj.times()[cut];
        let part = weighted_norm(&traj.truncated(t_cut), NormKind::X, 2.0).unwrap();
        let whole = weighted_norm(&traj, NormKind::X, 2.0).unwrap();
        prop_assert!(part <= whole);
    }
}
