mod common;

use common::rk4_p2;
use plap_curves::curve::{
    build_curve, curve_point, curve_rows, default_t_min, intersections, monitor, shooting_check,
    turning_points, TurnDirection,
};
use plap_curves::{closed_forms, integrate, IntegratorConfig, Params, ProblemClass, Trajectory};

fn run(params: Params, class: ProblemClass) -> Trajectory {
    integrate(&params, class, &IntegratorConfig::default()).unwrap()
}

#[test]
fn gelfand_turning_points_match_fixed_step_scan() {
    let traj = run(Params::new(2.0, 0.0, 0.0, 3.0), ProblemClass::Gelfand);
    let turns = turning_points(&traj);
    let oracle = rk4_p2(ProblemClass::Gelfand, 0.0, 3.0, 1e-6, 1e4, 2e-4);
    // lambda = t^2 e^w; local extrema on the fixed grid
    let lam: Vec<f64> = oracle
        .t
        .iter()
        .zip(&oracle.w)
        .map(|(t, w)| t * t * w.exp())
        .collect();
    let extrema: Vec<(f64, f64)> = (1..lam.len() - 1)
        .filter(|&i| (lam[i] - lam[i - 1]) * (lam[i + 1] - lam[i]) < 0.0)
        .map(|i| (oracle.t[i], lam[i]))
        .collect();
    assert_eq!(turns.len(), extrema.len());
    assert!(turns.len() >= 4);
    for (tp, (t_ref, l_ref)) in turns.iter().zip(&extrema) {
        assert!(
            ((tp.lambda_star - l_ref) / l_ref).abs() < 1e-6,
            "{tp:?} vs {l_ref}"
        );
        assert!(((tp.t_star - t_ref) / t_ref).abs() < 1e-3);
    }
    // a fold at a local maximum of lambda sends the curve back to the left
    assert_eq!(turns[0].direction, TurnDirection::RightToLeft);
    assert!(turns.windows(2).all(|w| w[0].direction != w[1].direction));
}

#[test]
fn gelfand_boundary_dimension_has_no_turns_on_a_fine_grid() {
    let traj = run(Params::new(2.0, 0.0, 0.0, 10.0), ProblemClass::Gelfand);
    assert!(turning_points(&traj).is_empty());
    let cfg = *traj.config();
    let (lo, hi) = (traj.t_start().ln(), traj.t_end().ln());
    let count = 1_000_000;
    let params = *traj.params();
    // monitor measured in units of its own tolerance-level noise
    let worst = (0..count)
        .map(|i| {
            let t = (lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .exp()
                .clamp(traj.t_start(), traj.t_end());
            let (w, wp) = traj.eval(t).unwrap();
            let noise = cfg.rel_tol * (2.0 + (t * wp).abs()) + cfg.abs_tol;
            monitor(ProblemClass::Gelfand, &params, t, w, wp) / noise
        })
        .fold(f64::INFINITY, f64::min);
    assert!(worst > -1.0, "{worst}");

    // where the monitor is still far above the noise, the fixed-step oracle agrees it is positive
    let oracle = rk4_p2(ProblemClass::Gelfand, 0.0, 10.0, 1e-6, 1e3, 2e-4);
    assert!(oracle.z.iter().all(|z| 2.0 + z > 0.0));
}

#[test]
fn monitor_vanishes_and_changes_sign_at_turns() {
    for class in ProblemClass::ALL {
        let traj = run(Params::class_default(class), class);
        let params = *traj.params();
        let m = |t: f64| {
            let (w, wp) = traj.eval(t).unwrap();
            monitor(class, &params, t, w, wp)
        };
        for tp in turning_points(&traj) {
            let (a, b) = (m(tp.t_star * (1.0 - 1e-6)), m(tp.t_star * (1.0 + 1e-6)));
            assert!(a * b < 0.0, "{class} at {}", tp.t_star);
            let expected = if a > 0.0 {
                TurnDirection::RightToLeft
            } else {
                TurnDirection::LeftToRight
            };
            assert_eq!(tp.direction, expected);
        }
    }
}

#[test]
fn lambda_monotone_between_turns() {
    for class in ProblemClass::ALL {
        let traj = run(Params::class_default(class), class);
        let curve = build_curve(&traj, None, 200).unwrap();
        let turns = turning_points(&traj);
        let pts = &curve.points;
        for pair in pts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if turns.iter().any(|tp| tp.t_star >= a.t && tp.t_star <= b.t) {
                continue;
            }
            let d = b.lambda - a.lambda;
            if d.abs() <= 1e-12 * a.lambda.abs() {
                continue;
            }
            assert_eq!(
                d > 0.0,
                a.monitor > 0.0,
                "{class}: lambda moves against the monitor sign between {} and {}",
                a.t,
                b.t
            );
        }
    }
}

#[test]
fn u0_strictly_increasing_along_curve() {
    for class in ProblemClass::ALL {
        let traj = run(Params::class_default(class), class);
        let curve = build_curve(&traj, None, 50).unwrap();
        assert!(
            curve.points.windows(2).all(|p| p[1].u0 > p[0].u0),
            "{class}"
        );
        assert!(curve.points.iter().all(|p| p.lambda > 0.0));
    }
}

#[test]
fn row_count_follows_sampling_contract() {
    let traj = run(
        Params::class_default(ProblemClass::Gelfand),
        ProblemClass::Gelfand,
    );
    let curve = build_curve(&traj, None, 20).unwrap();
    assert_eq!(curve.points.len(), 20 * 10 + 1);
    assert_eq!(curve_rows(1e-6, 1e4, 20), 201);
    assert_eq!(curve.points.last().unwrap().t, 1e4);
    assert!(curve.warning.is_none());
}

#[test]
fn curve_identities_hold_pointwise() {
    for class in ProblemClass::ALL {
        let traj = run(Params::class_default(class), class);
        let Params { p, q, alpha, .. } = *traj.params();
        for pt in build_curve(&traj, None, 10).unwrap().points {
            let (w, _) = traj.eval(pt.t).unwrap();
            let (lam, u0) = match class {
                ProblemClass::Gelfand => (pt.t.powf(alpha + p) * w.exp(), -w),
                ProblemClass::Mems => (pt.t.powf(alpha + p) / w.powf(p + q - 1.0), 1.0 - 1.0 / w),
                ProblemClass::JosephLundgren => {
                    (pt.t.powf(p + alpha) * w.powf(q - p + 1.0), 1.0 / w - 1.0)
                }
            };
            assert_eq!(pt.lambda, lam);
            assert_eq!(pt.u0, u0);
        }
    }
}

#[test]
fn truncated_jl_curve_carries_warning() {
    let traj = run(
        Params::new(2.0, 2.0, 0.0, 5.0),
        ProblemClass::JosephLundgren,
    );
    let curve = build_curve(&traj, None, 20).unwrap();
    assert!(curve.warning.is_some());
    assert!(curve.points.last().unwrap().t <= traj.t_end());
    assert!(curve
        .points
        .iter()
        .all(|p| p.lambda > 0.0 && p.u0.is_finite()));
}

#[test]
fn crossings_interlace_with_folds() {
    for class in ProblemClass::ALL {
        let traj = run(Params::class_default(class), class);
        let cf = closed_forms(traj.params(), class).unwrap();
        let rec = intersections(&traj, &cf, default_t_min(&traj)).unwrap();
        let turns = turning_points(&traj);
        assert!(rec.interlaced, "{class}");
        assert!(rec.times.windows(2).all(|t| t[1] > t[0]));
        assert!(rec.times.len().abs_diff(turns.len()) <= 1, "{class}");
        assert_eq!(rec.extrema_abs.len(), rec.times.len() - 1);
    }
}

#[test]
fn shooting_accepts_curve_points_and_rejects_perturbed_ones() {
    for class in ProblemClass::ALL {
        let params = Params::class_default(class);
        let traj = run(params, class);
        for t in [1e-3, 0.5, 10.0, 300.0, 5000.0] {
            let pt = curve_point(&traj, t).unwrap();
            let res = shooting_check(&params, class, &pt).unwrap();
            assert!(res < 1e-6, "{class} t={t}: {res}");
        }
    }
    let params = Params::class_default(ProblemClass::Gelfand);
    let traj = run(params, ProblemClass::Gelfand);
    let mut pt = curve_point(&traj, 10.0).unwrap();
    pt.lambda *= 1.1;
    assert!(shooting_check(&params, ProblemClass::Gelfand, &pt).unwrap() > 1e-3);
}

#[test]
fn shooting_detects_fold_as_change_in_solution_count() {
    // Just below the first fold two solutions with nearby u0 exist; above it none.
    let params = Params::class_default(ProblemClass::Gelfand);
    let traj = run(params, ProblemClass::Gelfand);
    let first = turning_points(&traj)[0];
    let u_at = |lambda: f64, u0: f64| -> f64 {
        let base = plap_curves::curve::CurvePoint {
            t: 0.0,
            lambda,
            u0,
            monitor: 0.0,
        };
        shooting_check(&params, ProblemClass::Gelfand, &base).unwrap()
    };
    let span: Vec<f64> = (0..=400)
        .map(|i| first.u0_star * (0.7 + 0.6 * i as f64 / 400.0))
        .collect();
    let min_below = span
        .iter()
        .map(|&u| u_at(first.lambda_star * (1.0 - 1e-3), u))
        .fold(f64::INFINITY, f64::min);
    let min_above = span
        .iter()
        .map(|&u| u_at(first.lambda_star * (1.0 + 1e-3), u))
        .fold(f64::INFINITY, f64::min);
    // residual can reach (near) zero below the fold but stays bounded away above it
    assert!(min_below < 1e-2, "{min_below}");
    assert!(min_above > 10.0 * min_below, "{min_above} vs {min_below}");
}
