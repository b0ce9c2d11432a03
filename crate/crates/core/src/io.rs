//! CSV and JSON output.
//!
//! Floats are written with 17 significant digits in exponent form, CSV uses
//! LF line endings, and JSON objects have sorted keys.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::curve::{SolutionCurve, TurningPoint};
use crate::ivp::Trajectory;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn csv<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    csv(
        "t,w,wprime",
        traj.nodes()
            .iter()
            .map(|nd| [fmt_f64(nd.t), fmt_f64(nd.w), fmt_f64(nd.wprime)]),
    )
}

pub fn curve_csv(curve: &SolutionCurve) -> String {
    csv(
        "t,lambda,u0,monitor",
        curve.points.iter().map(|pt| {
            [
                fmt_f64(pt.t),
                fmt_f64(pt.lambda),
                fmt_f64(pt.u0),
                fmt_f64(pt.monitor),
            ]
        }),
    )
}

pub fn turning_points_csv(points: &[TurningPoint]) -> String {
    csv(
        "t_star,lambda_star,u0_star,direction",
        points.iter().map(|tp| {
            [
                fmt_f64(tp.t_star),
                fmt_f64(tp.lambda_star),
                fmt_f64(tp.u0_star),
                tp.direction.as_str().to_string(),
            ]
        }),
    )
}

/// Profile rows `r,u`, with the singular limit profile as a third column when given.
pub fn profile_csv(profile: &[(f64, f64)], singular: Option<&[f64]>) -> String {
    match singular {
        Some(s) => csv(
            "r,u,u_singular",
            profile
                .iter()
                .zip(s)
                .map(|(&(r, u), &us)| vec![fmt_f64(r), fmt_f64(u), fmt_f64(us)]),
        ),
        None => csv(
            "r,u",
            profile.iter().map(|&(r, u)| vec![fmt_f64(r), fmt_f64(u)]),
        ),
    }
}

struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

/// Deterministic JSON: sorted keys, 17-digit floats, non-finite floats as `null`.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // going through Value sorts every object by key
    let v = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-1.0 / 3.0), "-3.3333333333333331e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn json_keys_sorted_and_floats_fixed() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
            map: HashMap<&'static str, f64>,
            bad: f64,
        }
        let s = S {
            zeta: 0.5,
            alpha: 3,
            map: [("b", 2.0), ("a", 1.0)].into_iter().collect(),
            bad: f64::INFINITY,
        };
        let out = to_json(&s).unwrap();
        assert_eq!(
            out,
            r#"{"alpha":3,"bad":null,"map":{"a":1.0000000000000000e0,"b":2.0000000000000000e0},"zeta":5.0000000000000000e-1}"#
        );
        let back: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(back["zeta"], 0.5);
    }
}
