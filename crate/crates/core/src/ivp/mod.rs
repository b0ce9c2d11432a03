//! Generating initial value problems.
//!
//! Each class reduces to one singular IVP at `t = 0`:
//!
//! ```text
//! (phi(w'))' + (n-1)/t phi(w') + s t^alpha f(w) = 0,   w(0) = c, w'(0) = 0
//! ```
//!
//! with `phi(s) = s|s|^(p-2)` and
//!
//! | class   | `f(w)`   | `s`  | `c` |
//! |---------|----------|------|-----|
//! | Gelfand | `e^w`    | `+1` | `0` |
//! | MEMS    | `w^-q`   | `-1` | `1` |
//! | JL      | `w^q`    | `+1` | `1` |
//!
//! The integrator works on the flux form `v = t^(n-1) phi(w')`,
//! `v' = -s t^(n+alpha-1) f(w)`, `w' = phi^-1(v / t^(n-1))`, which needs no
//! derivative of `phi`. It starts from a leading-order series at `t_start`,
//! switches to `ln t` as the independent variable once `t >= 1`, and keeps the
//! Dormand-Prince dense output of every step.

mod stepper;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, Params, ProblemClass};
use stepper::{DenseStep, Dopri5, StepFailure, System, Vec2};

pub(crate) use stepper::{Dopri5 as Stepper, System as OdeSystem};

#[derive(Debug, Error)]
pub enum IvpError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("step size underflow at t = {:e}", last.t)]
    StepUnderflow { last: State },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {:e}", partial.t_end())]
    MaxSteps {
        max_steps: usize,
        partial: Box<Trajectory>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub t_start: f64,
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Integrate in `s = ln t` for `t >= 1`.
    pub log_time: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            t_start: 1e-6,
            t_max: 1e4,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            log_time: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IvpError> {
        if !(self.t_start > 0.0 && self.t_start < self.t_max && self.t_max.is_finite()) {
            return Err(IvpError::Config(format!(
                "need 0 < t_start < t_max (got {} and {})",
                self.t_start, self.t_max
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(IvpError::Config("tolerances must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(IvpError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Same run with both tolerances multiplied by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        IntegratorConfig {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

/// Point of the generating solution in flux form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub t: f64,
    pub w: f64,
    /// `t^(n-1) phi(w')`
    pub v: f64,
}

/// `phi(s) = s|s|^(p-2)`
pub fn phi(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s.abs().powf(p - 2.0)
    }
}

/// Inverse of [`phi`]: `sign(s)|s|^(1/(p-1))`.
pub fn phi_inv(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(1.0 / (p - 1.0))
    }
}

/// Nonlinearity of the generating equation. The JL power is extended oddly so
/// that trial stages past the zero of `w` stay finite.
pub fn nonlinearity(class: ProblemClass, q: f64, w: f64) -> f64 {
    match class {
        ProblemClass::Gelfand => w.exp(),
        ProblemClass::Mems => w.powf(-q),
        ProblemClass::JosephLundgren => w.signum() * w.abs().powf(q),
    }
}

/// `s` in `(phi(w'))' + (n-1)/t phi(w') + s t^alpha f(w) = 0`.
pub fn forcing_sign(class: ProblemClass) -> f64 {
    match class {
        ProblemClass::Mems => -1.0,
        ProblemClass::Gelfand | ProblemClass::JosephLundgren => 1.0,
    }
}

/// Coefficient of the leading startup term `c -+ kappa t^sigma` when the
/// nonlinearity is frozen at `f0`.
pub fn startup_kappa(params: &Params, f0: f64) -> f64 {
    let Params { p, alpha, n, .. } = *params;
    (p - 1.0) / (alpha + p) * (f0 / (n + alpha)).powf(1.0 / (p - 1.0))
}

/// Leading-order state near the singular point, with the nonlinearity frozen
/// at its center value.
pub fn startup_state(
    params: &Params,
    class: ProblemClass,
    t_start: f64,
) -> Result<State, IvpError> {
    if !(t_start > 0.0 && t_start.is_finite()) {
        return Err(IvpError::Domain(format!(
            "t_start must be positive (got {t_start})"
        )));
    }
    params.validate(class)?;
    let s = forcing_sign(class);
    let na = params.n + params.alpha;
    let kappa = startup_kappa(params, 1.0);
    let sigma = params.startup_exponent();
    Ok(State {
        t: t_start,
        w: class.center_value() - s * kappa * t_start.powf(sigma),
        v: -s * t_start.powf(na) / na,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub(crate) enum Axis {
    Linear,
    Log,
}

impl Axis {
    fn to_x(self, t: f64) -> f64 {
        match self {
            Axis::Linear => t,
            Axis::Log => t.ln(),
        }
    }

    fn to_t(self, x: f64) -> f64 {
        match self {
            Axis::Linear => x,
            Axis::Log => x.exp(),
        }
    }
}

/// Flux-form system in deviation variables `[w - c, v]`.
struct Generating {
    class: ProblemClass,
    params: Params,
    axis: Axis,
    center: f64,
    rel_tol: f64,
    abs_tol: f64,
    kappa: f64,
}

impl Generating {
    fn new(class: ProblemClass, params: Params, axis: Axis, cfg: &IntegratorConfig) -> Self {
        Generating {
            class,
            params,
            axis,
            center: class.center_value(),
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            kappa: startup_kappa(&params, 1.0),
        }
    }
}

impl System for Generating {
    fn rhs(&self, x: f64, y: &Vec2) -> Vec2 {
        let Params { p, q, alpha, n } = self.params;
        let t = self.axis.to_t(x);
        let w = self.center + y[0];
        let wp = phi_inv(y[1] / t.powf(n - 1.0), p);
        let vp =
            -forcing_sign(self.class) * t.powf(n + alpha - 1.0) * nonlinearity(self.class, q, w);
        match self.axis {
            Axis::Linear => [wp, vp],
            Axis::Log => [t * wp, t * vp],
        }
    }

    fn weights(&self, x1: f64, y0: &Vec2, y1: &Vec2) -> Vec2 {
        let t = self.axis.to_t(x1);
        let na = self.params.n + self.params.alpha;
        // near t = 0 the absolute tolerance is taken relative to the startup scale
        let nat_d = (self.kappa * t.powf(self.params.startup_exponent())).min(1.0);
        let nat_v = (t.powf(na) / na).min(1.0);
        let mag_d = |d: f64| d.abs().min((self.center + d).abs());
        [
            self.abs_tol * nat_d + self.rel_tol * mag_d(y0[0]).max(mag_d(y1[0])),
            self.abs_tol * nat_v + self.rel_tol * y0[1].abs().max(y1[1].abs()),
        ]
    }
}

/// Sample of the generating solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub t: f64,
    pub w: f64,
    pub v: f64,
    pub wprime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    axis: Axis,
    dense: DenseStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    ReachedEnd,
    /// JL only: `w` vanished at `t0`.
    ZeroCrossing {
        t0: f64,
    },
}

/// Dense numerical solution of a generating IVP on `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    class: ProblemClass,
    params: Params,
    config: IntegratorConfig,
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    termination: Termination,
}

impl Trajectory {
    pub fn class(&self) -> ProblemClass {
        self.class
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn t_start(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    fn wprime_of(&self, t: f64, v: f64) -> f64 {
        phi_inv(v / t.powf(self.params.n - 1.0), self.params.p)
    }

    /// Flux-form state at `t`; exact at nodes.
    pub fn state_at(&self, t: f64) -> Result<State, IvpError> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if !(t >= lo && t <= hi) {
            return Err(IvpError::Domain(format!(
                "t = {t:e} outside trajectory range [{lo:e}, {hi:e}]"
            )));
        }
        let i = self.nodes.partition_point(|nd| nd.t < t);
        if let Some(nd) = self.nodes.get(i) {
            if nd.t == t {
                return Ok(State {
                    t,
                    w: nd.w,
                    v: nd.v,
                });
            }
        }
        let seg = &self.segments[i - 1];
        let y = seg.dense.at(seg.axis.to_x(t));
        Ok(State {
            t,
            w: self.class.center_value() + y[0],
            v: y[1],
        })
    }

    /// `(w, w')` at `t` from the dense output.
    pub fn eval(&self, t: f64) -> Result<(f64, f64), IvpError> {
        let i = self.nodes.partition_point(|nd| nd.t < t);
        if let Some(nd) = self.nodes.get(i) {
            if nd.t == t {
                return Ok((nd.w, nd.wprime));
            }
        }
        let s = self.state_at(t)?;
        Ok((s.w, self.wprime_of(t, s.v)))
    }

    /// Pohozaev function of the JL equation,
    /// `t^n [(p-1)|w'|^p + p t^alpha w^(q+1)/(q+1)] + (n-p) t^(n-1) phi(w') w`.
    pub fn pohozaev(&self, t: f64) -> Result<f64, IvpError> {
        if self.class != ProblemClass::JosephLundgren {
            return Err(IvpError::Domain(format!(
                "the Pohozaev function is defined for the jl class only (got {})",
                self.class
            )));
        }
        let s = self.state_at(t)?;
        let Params { p, q, alpha, n } = self.params;
        let wp = self.wprime_of(t, s.v);
        let big_f = t.powf(alpha) * s.w.abs().powf(q + 1.0) / (q + 1.0);
        Ok(t.powf(n) * ((p - 1.0) * wp.abs().powf(p) + p * big_f) + (n - p) * s.v * s.w)
    }
}

/// Integrate the generating IVP of `class` from its startup state.
pub fn integrate(
    params: &Params,
    class: ProblemClass,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IvpError> {
    cfg.validate()?;
    let start = startup_state(params, class, cfg.t_start)?;
    let center = class.center_value();
    let wprime0 = phi_inv(start.v / start.t.powf(params.n - 1.0), params.p);
    let mut traj = Trajectory {
        class,
        params: *params,
        config: *cfg,
        nodes: vec![Node {
            t: start.t,
            w: start.w,
            v: start.v,
            wprime: wprime0,
        }],
        segments: Vec::new(),
        termination: Termination::ReachedEnd,
    };

    let mut y = [start.w - center, start.v];
    let mut phases = Vec::with_capacity(2);
    if cfg.log_time {
        if cfg.t_start < 1.0 {
            phases.push((Axis::Linear, cfg.t_max.min(1.0)));
        }
        if cfg.t_max > 1.0 {
            phases.push((Axis::Log, cfg.t_max));
        }
    } else {
        phases.push((Axis::Linear, cfg.t_max));
    }

    let mut stepper = Dopri5::new(1e-2 * cfg.t_start);
    let mut steps = 0usize;
    for (axis, t_end) in phases {
        let sys = Generating::new(class, *params, axis, cfg);
        let t_now = traj.t_end();
        let mut x = axis.to_x(t_now);
        let x_end = axis.to_x(t_end);
        let h0 = match axis {
            Axis::Linear => stepper.h,
            Axis::Log => (stepper.h / t_now).min(0.05),
        };
        stepper.reset(h0);
        while x < x_end {
            if steps >= cfg.max_steps {
                return Err(IvpError::MaxSteps {
                    max_steps: cfg.max_steps,
                    partial: Box::new(traj),
                });
            }
            let acc = stepper.step(&sys, x, &y, x_end).map_err(|e| match e {
                StepFailure::Underflow { .. } => IvpError::StepUnderflow {
                    last: State {
                        t: axis.to_t(x),
                        w: center + y[0],
                        v: y[1],
                    },
                },
            })?;
            steps += 1;
            let t1 = if acc.x1 == x_end {
                t_end
            } else {
                axis.to_t(acc.x1)
            };
            let w1 = center + acc.y1[0];

            if class == ProblemClass::JosephLundgren && w1 <= 0.0 {
                let (theta, yz) = locate_zero(&acc.dense, center, cfg.abs_tol);
                let t0 = axis.to_t(acc.dense.x0 + theta * acc.dense.h);
                let wz = center + yz[0];
                traj.nodes.push(Node {
                    t: t0,
                    w: wz,
                    v: yz[1],
                    wprime: phi_inv(yz[1] / t0.powf(params.n - 1.0), params.p),
                });
                traj.segments.push(Segment {
                    axis,
                    dense: acc.dense,
                });
                traj.termination = Termination::ZeroCrossing { t0 };
                return Ok(traj);
            }

            traj.nodes.push(Node {
                t: t1,
                w: w1,
                v: acc.y1[1],
                wprime: phi_inv(acc.y1[1] / t1.powf(params.n - 1.0), params.p),
            });
            traj.segments.push(Segment {
                axis,
                dense: acc.dense,
            });
            x = acc.x1;
            y = acc.y1;
        }
    }
    Ok(traj)
}

/// Bisection for the sign change of `w = center + d(theta)` on one step.
fn locate_zero(dense: &DenseStep, center: f64, abs_tol: f64) -> (f64, Vec2) {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let w = |th: f64| center + dense.at_theta(th)[0];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let wm = w(mid);
        if wm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if wm.abs() <= abs_tol * 1e-3 {
            break;
        }
    }
    let theta = if w(lo).abs() <= w(hi).abs() { lo } else { hi };
    (theta, dense.at_theta(theta))
}

/// `phi'(w') w'' + (n-1)/t phi(w') + s t^alpha f(w)`.
pub fn residual(
    params: &Params,
    class: ProblemClass,
    w: f64,
    wprime: f64,
    wsecond: f64,
    t: f64,
) -> f64 {
    let Params { p, q, alpha, n } = *params;
    let dphi = (p - 1.0) * wprime.abs().powf(p - 2.0);
    dphi * wsecond
        + (n - 1.0) / t * phi(wprime, p)
        + forcing_sign(class) * t.powf(alpha) * nonlinearity(class, q, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{closed_forms, guiding_eval, guiding_second};
    use approx::assert_relative_eq;

    fn params(class: ProblemClass) -> Params {
        Params::class_default(class)
    }

    #[test]
    fn phi_round_trip() {
        for p in [1.3, 2.0, 3.5] {
            for s in [-2.5, -1e-3, 0.0, 0.7, 12.0] {
                assert_relative_eq!(phi_inv(phi(s, p), p), s, max_relative = 1e-14);
            }
        }
    }

    /// Frozen-nonlinearity oracle: quadrature of the flux form.
    fn frozen_flux_oracle(params: &Params, t: f64) -> (f64, f64) {
        let Params { p, alpha, n, .. } = *params;
        let m = 20_000;
        let h = t / m as f64;
        let integrand = |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                // v(s) = -int_0^s r^(n+alpha-1) dr, evaluated by its own Simpson rule
                let k = 64;
                let hh = s / k as f64;
                let mut acc = 0.0;
                for j in 0..=k {
                    let r = j as f64 * hh;
                    let wgt = if j == 0 || j == k {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    acc += wgt * r.powf(n + alpha - 1.0);
                }
                let v = -acc * hh / 3.0;
                -(v.abs() / s.powf(n - 1.0)).powf(1.0 / (p - 1.0))
            }
        };
        let mut w = 0.0;
        for j in 0..=m {
            let s = j as f64 * h;
            let wgt = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w += wgt * integrand(s);
        }
        (w * h / 3.0, -t.powf(n + alpha) / (n + alpha))
    }

    #[test]
    fn startup_matches_frozen_flux_quadrature() {
        for pr in [
            Params::new(2.0, 0.0, 0.0, 3.0),
            Params::new(3.0, 0.0, 1.0, 4.0),
            Params::new(1.5, 0.0, 0.5, 2.0),
        ] {
            let t = 1e-3;
            let st = startup_state(&pr, ProblemClass::Gelfand, t).unwrap();
            let (w_or, v_or) = frozen_flux_oracle(&pr, t);
            assert_relative_eq!(st.w, w_or, max_relative = 1e-6);
            assert_relative_eq!(st.v, v_or, max_relative = 1e-6);
        }
    }

    #[test]
    fn startup_examples() {
        let g = startup_state(&params(ProblemClass::Gelfand), ProblemClass::Gelfand, 1e-3).unwrap();
        assert_relative_eq!(g.w, -1e-6 / 6.0, max_relative = 1e-12);
        for q in [0.5, 2.0, 7.0] {
            let m =
                startup_state(&Params::new(2.0, q, 0.0, 3.0), ProblemClass::Mems, 1e-3).unwrap();
            assert_relative_eq!(m.w - 1.0, 1e-6 / 6.0, max_relative = 1e-9);
            assert!(m.v > 0.0);
        }
        for class in ProblemClass::ALL {
            let s = startup_state(&params(class), class, 1e-12).unwrap();
            assert!((s.w - class.center_value()).abs() < 1e-20);
            assert!(s.v.abs() < 1e-30);
        }
        assert!(startup_state(&params(ProblemClass::Mems), ProblemClass::Mems, 0.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let p = params(ProblemClass::Gelfand);
        assert_relative_eq!(
            residual(&p, ProblemClass::Gelfand, 1.0, 0.0, 1.0, 1.0),
            1.0 + std::f64::consts::E,
            max_relative = 1e-15
        );
        for class in ProblemClass::ALL {
            let pr = params(class);
            let cf = closed_forms(&pr, class).unwrap();
            for t in [0.5, 1.0, 7.0] {
                let (w, wp) = guiding_eval(&cf, t).unwrap();
                let wpp = guiding_second(&cf, t).unwrap();
                assert!(residual(&pr, class, w, wp, wpp, t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eval_is_exact_at_nodes_and_rejects_outside() {
        let traj = integrate(
            &params(ProblemClass::Mems),
            ProblemClass::Mems,
            &IntegratorConfig {
                t_max: 50.0,
                ..Default::default()
            },
        )
        .unwrap();
        for nd in traj.nodes().iter().step_by(17) {
            let (w, wp) = traj.eval(nd.t).unwrap();
            assert_eq!(w.to_bits(), nd.w.to_bits());
            assert_eq!(wp.to_bits(), nd.wprime.to_bits());
        }
        let last = traj.nodes().last().unwrap();
        assert_eq!(traj.t_end(), 50.0);
        assert_eq!(traj.eval(50.0).unwrap(), (last.w, last.wprime));
        assert!(traj.eval(51.0).is_err());
        assert!(traj.eval(1e-7).is_err());
    }

    #[test]
    fn pohozaev_wrong_class() {
        let traj = integrate(
            &params(ProblemClass::Gelfand),
            ProblemClass::Gelfand,
            &IntegratorConfig {
                t_max: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(traj.pohozaev(1.0), Err(IvpError::Domain(_))));
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig {
            t_start: 2.0,
            t_max: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&params(ProblemClass::Gelfand), ProblemClass::Gelfand, &bad),
            Err(IvpError::Config(_))
        ));
        let bad = IntegratorConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn max_steps_keeps_partial_data() {
        let cfg = IntegratorConfig {
            max_steps: 25,
            ..Default::default()
        };
        match integrate(&params(ProblemClass::Gelfand), ProblemClass::Gelfand, &cfg) {
            Err(IvpError::MaxSteps { partial, max_steps }) => {
                assert_eq!(max_steps, 25);
                assert_eq!(partial.nodes().len(), 26);
                assert!(partial.t_end() < 1e4);
            }
            other => panic!("expected MaxSteps, got {other:?}"),
        }
    }
}
