//! Dormand-Prince 5(4) with PI step-size control and the 4th-order
//! continuous extension, specialized to two-component systems.

pub(crate) type Vec2 = [f64; 2];

/// First-order system `dy/dx = f(x, y)` with its own error weights.
pub(crate) trait System {
    fn rhs(&self, x: f64, y: &Vec2) -> Vec2;

    /// Error weight per component for a step from `y0` to `y1` ending at `x1`.
    fn weights(&self, x1: f64, y0: &Vec2, y1: &Vec2) -> Vec2;
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output coefficients of one accepted step on `[x0, x0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DenseStep {
    pub x0: f64,
    pub h: f64,
    rcont: [Vec2; 5],
}

impl DenseStep {
    /// Interpolated state at `theta = (x - x0)/h` in `[0, 1]`.
    pub fn at_theta(&self, theta: f64) -> Vec2 {
        let t1 = 1.0 - theta;
        let r = &self.rcont;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])));
        }
        out
    }

    pub fn at(&self, x: f64) -> Vec2 {
        self.at_theta(((x - self.x0) / self.h).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Accepted {
    pub x1: f64,
    pub y1: Vec2,
    pub dense: DenseStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum StepFailure {
    /// Step size fell below the representable resolution at `x`.
    Underflow { x: f64, h: f64 },
}

pub(crate) struct Dopri5 {
    pub h: f64,
    facold: f64,
    /// `f(x, y)` at the current point (FSAL).
    k1: Option<Vec2>,
}

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy(y: &Vec2, terms: &[(f64, &Vec2)], h: f64) -> Vec2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

impl Dopri5 {
    pub fn new(h0: f64) -> Self {
        Dopri5 {
            h: h0,
            facold: 1e-4,
            k1: None,
        }
    }

    /// Forget the cached derivative, e.g. after a change of independent variable.
    pub fn reset(&mut self, h0: f64) {
        self.h = h0;
        self.k1 = None;
        self.facold = 1e-4;
    }

    /// Take one accepted step from `(x, y)` without passing `x_end`.
    pub fn step<S: System>(
        &mut self,
        sys: &S,
        x: f64,
        y: &Vec2,
        x_end: f64,
    ) -> Result<Accepted, StepFailure> {
        let k1 = match self.k1 {
            Some(k) => k,
            None => sys.rhs(x, y),
        };
        loop {
            let mut h = self.h;
            let last = x + h >= x_end;
            if last {
                h = x_end - x;
            }
            if h <= 8.0 * f64::EPSILON * x.abs().max(1.0) {
                return Err(StepFailure::Underflow { x, h });
            }

            let k2 = sys.rhs(x + C2 * h, &axpy(y, &[(A21, &k1)], h));
            let k3 = sys.rhs(x + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = sys.rhs(
                x + C4 * h,
                &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
            );
            let k5 = sys.rhs(
                x + C5 * h,
                &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let y6 = axpy(
                y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            );
            let x1 = if last { x_end } else { x + h };
            let k6 = sys.rhs(x1, &y6);
            let y1 = axpy(
                y,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                h,
            );
            let k7 = sys.rhs(x1, &y1);

            let w = sys.weights(x1, y, &y1);
            let mut err2 = 0.0;
            for i in 0..2 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err2 += (e / w[i]).powi(2);
            }
            let err = (err2 / 2.0).sqrt();

            if !err.is_finite() || !y1.iter().all(|v| v.is_finite()) {
                self.h = h * FAC_MIN;
                continue;
            }

            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                let fac =
                    (fac11 / self.facold.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.facold = err.max(1e-4);
                // keep the proposed size when the step was clipped at x_end
                let h_next = h / fac;
                self.h = if last { self.h.max(h_next) } else { h_next };
                self.k1 = Some(k7);

                let mut rcont = [[0.0; 2]; 5];
                for i in 0..2 {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k7[i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                return Ok(Accepted {
                    x1,
                    y1,
                    dense: DenseStep { x0: x, h, rcont },
                });
            }
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}
