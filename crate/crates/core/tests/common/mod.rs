#![allow(dead_code)]

use plap_curves::ProblemClass;

/// Fixed-step classical RK4 for the `p = 2`, `alpha = 0` generating equation
/// written in `s = ln t` with `z = t w'`:
/// `w_s = z`, `z_s = (2 - n) z - sign t^2 f(w)`.
pub struct Rk4Run {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

fn forcing(class: ProblemClass, q: f64, w: f64) -> f64 {
    match class {
        ProblemClass::Gelfand => w.exp(),
        ProblemClass::Mems => -w.powf(-q),
        ProblemClass::JosephLundgren => w.abs().powf(q) * w.signum(),
    }
}

pub fn rk4_p2(class: ProblemClass, q: f64, n: f64, t0: f64, t1: f64, ds: f64) -> Rk4Run {
    let c = match class {
        ProblemClass::Gelfand => 0.0,
        _ => 1.0,
    };
    let f0 = forcing(class, q, c);
    // w = c - f0 t^2 / (2n), z = -f0 t^2 / n
    let mut w = c - f0 * t0 * t0 / (2.0 * n);
    let mut z = -f0 * t0 * t0 / n;
    let rhs = |s: f64, w: f64, z: f64| -> (f64, f64) {
        let t2 = (2.0 * s).exp();
        (z, (2.0 - n) * z - t2 * forcing(class, q, w))
    };
    let (s0, s1) = (t0.ln(), t1.ln());
    let steps = ((s1 - s0) / ds).ceil() as usize;
    let h = (s1 - s0) / steps as f64;
    let mut out = Rk4Run {
        t: vec![t0],
        w: vec![w],
        z: vec![z],
    };
    for i in 0..steps {
        let s = s0 + i as f64 * h;
        let (a1, b1) = rhs(s, w, z);
        let (a2, b2) = rhs(s + h / 2.0, w + h / 2.0 * a1, z + h / 2.0 * b1);
        let (a3, b3) = rhs(s + h / 2.0, w + h / 2.0 * a2, z + h / 2.0 * b2);
        let (a4, b4) = rhs(s + h, w + h * a3, z + h * b3);
        w += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        z += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.t.push((s + h).exp());
        out.w.push(w);
        out.z.push(z);
    }
    out
}

/// Composite Simpson rule with `2 m` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let n = 2 * m;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}
