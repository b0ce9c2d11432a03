//! The global solution curve `(lambda(t), u(0)(t))` and its folds.
//!
//! | class   | `lambda`                  | `u(0)`     | monitor `M`                     |
//! |---------|---------------------------|------------|---------------------------------|
//! | Gelfand | `t^(alpha+p) e^w`         | `-w`       | `alpha+p + t w'`                |
//! | MEMS    | `t^(alpha+p) / w^(p+q-1)` | `1 - 1/w`  | `(alpha+p) w - (p+q-1) t w'`    |
//! | JL      | `t^(p+alpha) w^(q-p+1)`   | `1/w - 1`  | `(p+alpha) w + (q-p+1) t w'`    |
//!
//! `lambda'(t)` is `M(t)` times a positive factor, so the folds of the curve are
//! the sign changes of `M`.

mod shooting;

use serde::Serialize;
use thiserror::Error;

use crate::ivp::{IvpError, Termination, Trajectory};
use crate::model::{
    characteristic_quadratic, guiding_eval, ClosedForms, ModelError, Params, ProblemClass,
};

pub use shooting::{shooting_check, ShootingConfig};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("empty range: {0}")]
    EmptyRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("closed forms belong to {cf} but the trajectory to {traj}")]
    ClassMismatch {
        cf: ProblemClass,
        traj: ProblemClass,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub lambda: f64,
    pub u0: f64,
    pub monitor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionCurve {
    pub class: ProblemClass,
    pub params: Params,
    pub closed_forms: Option<ClosedForms>,
    pub points: Vec<CurvePoint>,
    /// Set when the trajectory stopped early.
    pub warning: Option<String>,
}

/// Horizontal travel of the curve after the fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnDirection {
    /// Was travelling left, turns right.
    LeftToRight,
    /// Was travelling right, turns left.
    RightToLeft,
}

impl TurnDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            TurnDirection::LeftToRight => "left-to-right",
            TurnDirection::RightToLeft => "right-to-left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    pub t_star: f64,
    pub lambda_star: f64,
    pub u0_star: f64,
    pub direction: TurnDirection,
}

/// Sign changes of `P = w - w0` and the sizes of `|P|` between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionRecord {
    pub times: Vec<f64>,
    /// `|P|` at the extremum between consecutive crossings.
    pub extrema_abs: Vec<f64>,
    /// Exactly one fold between every pair of consecutive crossings.
    pub interlaced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub t_eval: f64,
    pub lambda_at: f64,
    pub lambda_inf: f64,
    pub lambda_gap: f64,
    pub turning_lambda_gaps: Vec<f64>,
    pub gaps_strictly_decreasing: bool,
    pub profile_sup_gap: f64,
    /// Largest real part of the characteristic roots; deviations from the
    /// guiding solution shrink roughly like `t^decay_exponent`.
    pub decay_exponent: Option<f64>,
}

/// `(lambda, u(0))` at parameter `t` with generating value `w`.
pub fn lambda_u0(class: ProblemClass, params: &Params, t: f64, w: f64) -> (f64, f64) {
    let Params { p, q, alpha, .. } = *params;
    match class {
        ProblemClass::Gelfand => (t.powf(alpha + p) * w.exp(), -w),
        ProblemClass::Mems => (t.powf(alpha + p) / w.powf(p + q - 1.0), 1.0 - 1.0 / w),
        ProblemClass::JosephLundgren => (t.powf(p + alpha) * w.powf(q - p + 1.0), 1.0 / w - 1.0),
    }
}

fn monitor_terms(class: ProblemClass, params: &Params, t: f64, w: f64, wprime: f64) -> (f64, f64) {
    let Params { p, q, alpha, .. } = *params;
    match class {
        ProblemClass::Gelfand => (alpha + p, t * wprime),
        ProblemClass::Mems => ((alpha + p) * w, -t * (p + q - 1.0) * wprime),
        ProblemClass::JosephLundgren => ((p + alpha) * w, (q - p + 1.0) * t * wprime),
    }
}

/// Monitor function; its sign is the sign of `lambda'(t)`.
pub fn monitor(class: ProblemClass, params: &Params, t: f64, w: f64, wprime: f64) -> f64 {
    let (a, b) = monitor_terms(class, params, t, w, wprime);
    a + b
}

pub fn curve_point(traj: &Trajectory, t: f64) -> Result<CurvePoint, CurveError> {
    let (w, wp) = traj.eval(t)?;
    let (lambda, u0) = lambda_u0(traj.class(), traj.params(), t, w);
    Ok(CurvePoint {
        t,
        lambda,
        u0,
        monitor: monitor(traj.class(), traj.params(), t, w, wp),
    })
}

fn check_class(traj: &Trajectory, cf: &ClosedForms) -> Result<(), CurveError> {
    if traj.class() != cf.class {
        return Err(CurveError::ClassMismatch {
            cf: cf.class,
            traj: traj.class(),
        });
    }
    Ok(())
}

/// Number of rows for `samples_per_decade` over `[t0, t1]`.
pub fn curve_rows(t0: f64, t1: f64, samples_per_decade: usize) -> usize {
    let decades = (t1 / t0).log10();
    (samples_per_decade as f64 * decades - 1e-9).ceil().max(1.0) as usize + 1
}

/// Log-uniform samples of the curve over the whole trajectory.
pub fn build_curve(
    traj: &Trajectory,
    cf: Option<&ClosedForms>,
    samples_per_decade: usize,
) -> Result<SolutionCurve, CurveError> {
    if let Some(cf) = cf {
        check_class(traj, cf)?;
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    if samples_per_decade == 0 || t1 <= t0 {
        return Err(CurveError::EmptyRange(format!(
            "[{t0:e}, {t1:e}] with {samples_per_decade} samples per decade"
        )));
    }
    let rows = curve_rows(t0, t1, samples_per_decade);
    let (l0, l1) = (t0.ln(), t1.ln());
    let mut points = Vec::with_capacity(rows);
    for i in 0..rows {
        let t = match i {
            0 => t0,
            _ if i == rows - 1 => t1,
            _ => (l0 + (l1 - l0) * i as f64 / (rows - 1) as f64).exp(),
        };
        let pt = curve_point(traj, t)?;
        if traj.class() != ProblemClass::Gelfand {
            let (w, _) = traj.eval(t)?;
            if w <= 0.0 {
                continue;
            }
        }
        points.push(pt);
    }
    let warning = match traj.termination() {
        Termination::ReachedEnd => None,
        Termination::ZeroCrossing { t0 } => Some(format!(
            "generating solution vanishes at t = {t0:.17e}; curve truncated (positivity \
             condition on q fails)"
        )),
    };
    Ok(SolutionCurve {
        class: traj.class(),
        params: *traj.params(),
        closed_forms: cf.copied(),
        points,
        warning,
    })
}

/// Sign changes of a sampled function, skipping samples whose magnitude does
/// not clear `guard * noise`. Returns bracketing pairs of sample times.
fn significant_sign_changes(samples: &[(f64, f64, f64)], guard: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &(t, g, noise) in samples {
        if g.is_nan() || g.abs() <= guard * noise {
            continue;
        }
        if let Some((tl, gl)) = last {
            if gl.signum() != g.signum() {
                out.push((tl, t));
            }
        }
        last = Some((t, g));
    }
    out
}

/// Bisection in `ln t` for a sign change of `g` on `[lo, hi]`.
fn bisect_log<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let s_lo = g(lo).signum();
    while hi - lo > rel_tol * lo {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const GUARD: f64 = 10.0;
const ROOT_REL_TOL: f64 = 1e-10;

/// Roots of the monitor, refined on the dense output.
pub fn turning_points(traj: &Trajectory) -> Vec<TurningPoint> {
    let class = traj.class();
    let params = *traj.params();
    let cfg = traj.config();
    let m = |t: f64| {
        let (w, wp) = traj.eval(t).expect("bracket inside trajectory");
        monitor(class, &params, t, w, wp)
    };
    let samples: Vec<_> = traj
        .nodes()
        .iter()
        .map(|nd| {
            let (a, b) = monitor_terms(class, &params, nd.t, nd.w, nd.wprime);
            (nd.t, a + b, cfg.rel_tol * (a.abs() + b.abs()) + cfg.abs_tol)
        })
        .collect();
    significant_sign_changes(&samples, GUARD)
        .into_iter()
        .map(|(lo, hi)| {
            let before = m(lo);
            let t_star = bisect_log(m, lo, hi, ROOT_REL_TOL);
            let (w, _) = traj.eval(t_star).expect("root inside trajectory");
            let (lambda_star, u0_star) = lambda_u0(class, &params, t_star, w);
            TurningPoint {
                t_star,
                lambda_star,
                u0_star,
                direction: if before > 0.0 {
                    TurnDirection::RightToLeft
                } else {
                    TurnDirection::LeftToRight
                },
            }
        })
        .collect()
}

/// Default lower cutoff for [`intersections`].
pub fn default_t_min(traj: &Trajectory) -> f64 {
    10.0 * traj.t_start()
}

/// Crossings of the generating and guiding solutions after `t_min`.
pub fn intersections(
    traj: &Trajectory,
    cf: &ClosedForms,
    t_min: f64,
) -> Result<IntersectionRecord, CurveError> {
    check_class(traj, cf)?;
    if !(t_min > traj.t_start() && t_min < traj.t_end()) {
        return Err(CurveError::Domain(format!(
            "t_min = {t_min:e} must lie inside ({:e}, {:e})",
            traj.t_start(),
            traj.t_end()
        )));
    }
    let cfg = traj.config();
    let gap = |t: f64| -> (f64, f64) {
        let (w, wp) = traj.eval(t).expect("inside trajectory");
        let (w0, w0p) = guiding_eval(cf, t).expect("t > 0");
        (w - w0, wp - w0p)
    };
    let samples: Vec<_> = traj
        .nodes()
        .iter()
        .filter(|nd| nd.t >= t_min)
        .map(|nd| {
            let (w0, _) = guiding_eval(cf, nd.t).expect("t > 0");
            (
                nd.t,
                nd.w - w0,
                cfg.rel_tol * (nd.w.abs() + w0.abs()) + cfg.abs_tol,
            )
        })
        .collect();
    let times: Vec<f64> = significant_sign_changes(&samples, GUARD)
        .into_iter()
        .map(|(lo, hi)| bisect_log(|t| gap(t).0, lo, hi, ROOT_REL_TOL))
        .collect();

    let nodes = traj.nodes();
    let mut extrema_abs = Vec::with_capacity(times.len().saturating_sub(1));
    for pair in times.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        // slope samples strictly inside the crossing interval, plus its ends
        let mut inner: Vec<(f64, f64, f64)> = vec![(a, gap(a).1, 0.0)];
        inner.extend(
            nodes
                .iter()
                .filter(|nd| nd.t > a && nd.t < b)
                .map(|nd| (nd.t, gap(nd.t).1, 0.0)),
        );
        inner.push((b, gap(b).1, 0.0));
        let best = significant_sign_changes(&inner, 0.0)
            .into_iter()
            .map(|(lo, hi)| gap(bisect_log(|t| gap(t).1, lo, hi, ROOT_REL_TOL)).0.abs())
            .fold(f64::NAN, f64::max);
        let best = if best.is_nan() {
            inner
                .iter()
                .map(|&(t, _, _)| gap(t).0.abs())
                .fold(0.0, f64::max)
        } else {
            best
        };
        extrema_abs.push(best);
    }

    let turns = turning_points(traj);
    let interlaced = times.windows(2).all(|pair| {
        turns
            .iter()
            .filter(|tp| tp.t_star > pair[0] && tp.t_star < pair[1])
            .count()
            == 1
    });
    Ok(IntersectionRecord {
        times,
        extrema_abs,
        interlaced,
    })
}

/// Pointwise limit of the solutions along the curve.
pub fn singular_profile(cf: &ClosedForms, r: f64) -> f64 {
    match cf.class {
        ProblemClass::Gelfand => -cf.beta * r.ln(),
        ProblemClass::Mems => 1.0 - r.powf(cf.beta),
        ProblemClass::JosephLundgren => r.powf(-cf.beta) - 1.0,
    }
}

/// Solution `u(r)` of the boundary value problem at curve parameter `t`.
pub fn profile(traj: &Trajectory, t: f64, r_grid: &[f64]) -> Result<Vec<(f64, f64)>, CurveError> {
    if r_grid.is_empty() {
        return Err(CurveError::EmptyRange("empty r grid".into()));
    }
    let r_min = r_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = r_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(r_min > 0.0 && r_max <= 1.0) {
        return Err(CurveError::Domain(format!(
            "r grid must lie in (0, 1] (got [{r_min}, {r_max}])"
        )));
    }
    if !(t * r_max <= traj.t_end() && t * r_min >= traj.t_start()) {
        return Err(CurveError::Domain(format!(
            "t r must stay within [{:e}, {:e}] for t = {t:e}",
            traj.t_start(),
            traj.t_end()
        )));
    }
    let (wt, _) = traj.eval(t)?;
    r_grid
        .iter()
        .map(|&r| {
            if r == 1.0 {
                return Ok((r, 0.0));
            }
            let (w, _) = traj.eval(t * r)?;
            let u = match traj.class() {
                ProblemClass::Gelfand => w - wt,
                ProblemClass::Mems => 1.0 - w / wt,
                ProblemClass::JosephLundgren => w / wt - 1.0,
            };
            Ok((r, u))
        })
        .collect()
}

/// `count` log-spaced radii on `[lo, 1]`, ending exactly at 1.
pub fn log_grid(lo: f64, count: usize) -> Vec<f64> {
    let l = lo.ln();
    (0..count)
        .map(|i| {
            if i + 1 == count {
                1.0
            } else {
                (l * (1.0 - i as f64 / (count - 1) as f64)).exp()
            }
        })
        .collect()
}

/// Radii used for the profile comparison.
pub const PROFILE_GRID_MIN: f64 = 0.1;
pub const PROFILE_GRID_POINTS: usize = 64;

/// Distance of the curve at `t_eval` from its limits.
pub fn convergence(
    traj: &Trajectory,
    cf: &ClosedForms,
    t_eval: f64,
) -> Result<ConvergenceReport, CurveError> {
    check_class(traj, cf)?;
    let pt = curve_point(traj, t_eval)?;
    let turning_lambda_gaps: Vec<f64> = turning_points(traj)
        .iter()
        .map(|tp| (tp.lambda_star - cf.lambda_inf).abs())
        .collect();
    let gaps_strictly_decreasing = turning_lambda_gaps.windows(2).all(|g| g[1] < g[0]);
    let grid = log_grid(PROFILE_GRID_MIN, PROFILE_GRID_POINTS);
    let profile_sup_gap = profile(traj, t_eval, &grid)?
        .into_iter()
        .map(|(r, u)| (u - singular_profile(cf, r)).abs())
        .fold(0.0, f64::max);
    Ok(ConvergenceReport {
        t_eval,
        lambda_at: pt.lambda,
        lambda_inf: cf.lambda_inf,
        lambda_gap: (pt.lambda - cf.lambda_inf).abs(),
        turning_lambda_gaps,
        gaps_strictly_decreasing,
        profile_sup_gap,
        decay_exponent: characteristic_quadratic(&cf.params, cf.class)
            .ok()
            .map(|q| q.decay_exponent()),
    })
}
