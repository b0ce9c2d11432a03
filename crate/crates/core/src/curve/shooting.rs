//! Shooting oracle: integrate the radial boundary value problem from the
//! center with `u(0) = u0` at the given `lambda` and report `|u(1)|`.
//!
//! This path never touches the scaled generating solution. It has its own
//! startup in `r`, works in `ln r` throughout, and runs at tighter tolerances.

use super::{CurveError, CurvePoint};
use crate::ivp::{phi_inv, startup_kappa, IvpError, OdeSystem, State, Stepper};
use crate::model::{Params, ProblemClass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Size of the startup term relative to the local scale of `u`.
    pub startup_size: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            startup_size: 1e-12,
        }
    }
}

/// `g(u)` in `(phi(u'))' + (n-1)/r phi(u') + lambda r^alpha g(u) = 0`.
fn source(class: ProblemClass, q: f64, u: f64) -> f64 {
    match class {
        ProblemClass::Gelfand => u.exp(),
        ProblemClass::Mems => (1.0 - u).powf(-q),
        ProblemClass::JosephLundgren => (1.0 + u).powf(q),
    }
}

/// Radial problem in `x = ln r`, state `[u - u0, r^(n-1) phi(u')]`.
struct Radial {
    class: ProblemClass,
    params: Params,
    lambda: f64,
    u0: f64,
    kappa: f64,
    g0: f64,
    cfg: ShootingConfig,
}

impl OdeSystem for Radial {
    fn rhs(&self, x: f64, y: &[f64; 2]) -> [f64; 2] {
        let Params { p, q, alpha, n } = self.params;
        let r = x.exp();
        let up = phi_inv(y[1] / r.powf(n - 1.0), p);
        let vp = -self.lambda * r.powf(n + alpha - 1.0) * source(self.class, q, self.u0 + y[0]);
        [r * up, r * vp]
    }

    fn weights(&self, x1: f64, y0: &[f64; 2], y1: &[f64; 2]) -> [f64; 2] {
        let r = x1.exp();
        let na = self.params.n + self.params.alpha;
        let nat_d = (self.kappa * r.powf(self.params.startup_exponent())).min(1.0);
        let nat_v = (self.lambda * self.g0 * r.powf(na) / na).min(1.0);
        [
            self.cfg.abs_tol * nat_d + self.cfg.rel_tol * y0[0].abs().max(y1[0].abs()),
            self.cfg.abs_tol * nat_v + self.cfg.rel_tol * y0[1].abs().max(y1[1].abs()),
        ]
    }
}

/// `|u(1)|` for the radial solution with center value `point.u0` at `point.lambda`.
pub fn shooting_check(
    params: &Params,
    class: ProblemClass,
    point: &CurvePoint,
) -> Result<f64, CurveError> {
    shooting_check_with(params, class, point, &ShootingConfig::default())
}

pub fn shooting_check_with(
    params: &Params,
    class: ProblemClass,
    point: &CurvePoint,
    cfg: &ShootingConfig,
) -> Result<f64, CurveError> {
    params.validate(class)?;
    let (lambda, u0) = (point.lambda, point.u0);
    if !(lambda >= 0.0 && lambda.is_finite() && u0.is_finite()) {
        return Err(CurveError::Domain(format!(
            "invalid curve point ({lambda}, {u0})"
        )));
    }
    if lambda == 0.0 {
        return Ok(u0.abs());
    }
    let g0 = source(class, params.q, u0);
    let kappa = startup_kappa(params, lambda * g0);
    let scale = match class {
        ProblemClass::Gelfand => 1.0,
        ProblemClass::Mems => 1.0 - u0,
        ProblemClass::JosephLundgren => 1.0 + u0,
    };
    let sigma = params.startup_exponent();
    let r_start = if kappa > 0.0 {
        (cfg.startup_size * scale / kappa)
            .powf(1.0 / sigma)
            .min(1e-3)
    } else {
        1e-3
    };
    let na = params.n + params.alpha;
    let sys = Radial {
        class,
        params: *params,
        lambda,
        u0,
        kappa,
        g0,
        cfg: *cfg,
    };
    let mut y = [
        -kappa * r_start.powf(sigma),
        -lambda * g0 * r_start.powf(na) / na,
    ];
    let mut x = r_start.ln();
    let mut stepper = Stepper::new(1e-3);
    let mut steps = 0usize;
    while x < 0.0 {
        let acc = stepper.step(&sys, x, &y, 0.0).map_err(|_| {
            CurveError::Ivp(IvpError::StepUnderflow {
                last: State {
                    t: x.exp(),
                    w: u0 + y[0],
                    v: y[1],
                },
            })
        })?;
        x = acc.x1;
        y = acc.y1;
        steps += 1;
        if steps > 1_000_000 {
            return Err(CurveError::Domain("shooting did not reach r = 1".into()));
        }
    }
    Ok((u0 + y[0]).abs())
}
