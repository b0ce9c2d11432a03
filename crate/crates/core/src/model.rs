//! Closed-form quantities and regime classification.
//!
//! Everything here is pure arithmetic on the parameter quadruple `(p, q, alpha, n)`:
//! the exponent of the guiding solution, its coefficient, the limit of `lambda`
//! along the solution curve, the named inequality conditions, and the
//! characteristic quadratic of the Euler equation obtained by linearizing the
//! generating equation at the guiding solution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Margins within this distance of zero are reported as "boundary".
pub const BOUNDARY_EPS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("condition `{name}` violated (margin {margin:e}): {detail}")]
    ConditionViolated {
        name: &'static str,
        margin: f64,
        detail: &'static str,
    },
    #[error("domain error: {0}")]
    Domain(String),
}

/// The three self-similar problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemClass {
    /// `lambda r^alpha e^u`
    Gelfand,
    /// `lambda r^alpha / (1-u)^q`
    Mems,
    /// `lambda r^alpha (1+u)^q`
    JosephLundgren,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 3] = [
        ProblemClass::Gelfand,
        ProblemClass::Mems,
        ProblemClass::JosephLundgren,
    ];

    /// Short tag used on the command line and in reports.
    pub fn tag(self) -> &'static str {
        match self {
            ProblemClass::Gelfand => "gelfand",
            ProblemClass::Mems => "mems",
            ProblemClass::JosephLundgren => "jl",
        }
    }

    /// Value of the generating solution at the center.
    pub fn center_value(self) -> f64 {
        match self {
            ProblemClass::Gelfand => 0.0,
            ProblemClass::Mems | ProblemClass::JosephLundgren => 1.0,
        }
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProblemClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gelfand" => Ok(ProblemClass::Gelfand),
            "mems" => Ok(ProblemClass::Mems),
            "jl" | "joseph-lundgren" | "josephlundgren" => Ok(ProblemClass::JosephLundgren),
            other => Err(ModelError::InvalidParams(format!(
                "unknown problem class `{other}` (expected gelfand, mems or jl)"
            ))),
        }
    }
}

/// Exponents and dimension. `q` is ignored for the Gelfand class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub n: f64,
}

impl Params {
    pub fn new(p: f64, q: f64, alpha: f64, n: f64) -> Self {
        Params { p, q, alpha, n }
    }

    /// The parameter sets used throughout the test matrix.
    pub fn class_default(class: ProblemClass) -> Self {
        match class {
            ProblemClass::Gelfand => Params::new(2.0, 0.0, 0.0, 3.0),
            ProblemClass::Mems => Params::new(2.0, 2.0, 0.0, 3.0),
            ProblemClass::JosephLundgren => Params::new(2.0, 5.0, 0.0, 4.0),
        }
    }

    pub fn validate(&self, class: ProblemClass) -> Result<(), ModelError> {
        let Params { p, q, alpha, n } = *self;
        let finite = [p, alpha, n].iter().all(|x| x.is_finite())
            && (class == ProblemClass::Gelfand || q.is_finite());
        if !finite {
            return Err(ModelError::InvalidParams("non-finite parameter".into()));
        }
        if p <= 1.0 {
            return Err(ModelError::InvalidParams(format!(
                "p must exceed 1 (got {p})"
            )));
        }
        if alpha < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "alpha must be non-negative (got {alpha})"
            )));
        }
        if n < 1.0 {
            return Err(ModelError::InvalidParams(format!(
                "n must be at least 1 (got {n})"
            )));
        }
        match class {
            ProblemClass::Gelfand => Ok(()),
            ProblemClass::Mems if q <= 0.0 => Err(ModelError::InvalidParams(format!(
                "mems requires q > 0 (got {q})"
            ))),
            ProblemClass::JosephLundgren if q <= 1.0 => Err(ModelError::InvalidParams(format!(
                "jl requires q > 1 (got {q})"
            ))),
            _ => Ok(()),
        }
    }

    /// Exponent of the leading startup term, `(alpha+p)/(p-1)`.
    pub fn startup_exponent(&self) -> f64 {
        (self.alpha + self.p) / (self.p - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidingKind {
    /// `c0 t^beta`
    PowerGrowth,
    /// `a0 t^-beta`
    PowerDecay,
    /// `ln(coeff) - slope ln t`
    Logarithmic,
}

/// Guiding solution and the limit of `lambda` along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForms {
    pub class: ProblemClass,
    pub params: Params,
    /// Power exponent; for Gelfand the logarithmic slope `alpha+p`.
    pub beta: f64,
    /// `c0`, `a0`, or `e^{a0}` for Gelfand.
    pub coeff: f64,
    pub lambda_inf: f64,
    pub guiding_kind: GuidingKind,
    /// Limit written with the exponents `c0^{1-q}` / `a0^{q-1}`. Direct
    /// substitution gives `c0^{-(p+q-1)}` / `a0^{q-p+1}`; the JL forms agree at
    /// `p = 2`, the MEMS ones never do. Kept for diagnostics only.
    pub printed_lambda_limit: f64,
}

fn mems_beta(p: &Params) -> f64 {
    (p.alpha + p.p) / (p.p + p.q - 1.0)
}

fn jl_beta(p: &Params) -> f64 {
    (p.p + p.alpha) / (p.q - p.p + 1.0)
}

pub fn closed_forms(params: &Params, class: ProblemClass) -> Result<ClosedForms, ModelError> {
    params.validate(class)?;
    let Params { p, q, alpha, n } = *params;
    match class {
        ProblemClass::Gelfand => {
            if n - p <= 0.0 {
                return Err(ModelError::ConditionViolated {
                    name: "n_exceeds_p",
                    margin: n - p,
                    detail: "the logarithmic guiding solution needs n > p",
                });
            }
            let slope = alpha + p;
            let coeff = (n - p) * slope.powf(p - 1.0);
            Ok(ClosedForms {
                class,
                params: *params,
                beta: slope,
                coeff,
                lambda_inf: coeff,
                guiding_kind: GuidingKind::Logarithmic,
                printed_lambda_limit: coeff,
            })
        }
        ProblemClass::Mems => {
            let beta = mems_beta(params);
            let k = (p - 1.0) * (beta - 1.0) + n - 1.0;
            if k <= 0.0 {
                return Err(ModelError::ConditionViolated {
                    name: "guiding_exists",
                    margin: k,
                    detail: "(p-1)(beta-1)+n-1 must be positive",
                });
            }
            let lambda_inf = beta.powf(p - 1.0) * k;
            let coeff = (1.0 / lambda_inf).powf(1.0 / (p + q - 1.0));
            Ok(ClosedForms {
                class,
                params: *params,
                beta,
                coeff,
                lambda_inf,
                guiding_kind: GuidingKind::PowerGrowth,
                printed_lambda_limit: coeff.powf(1.0 - q),
            })
        }
        ProblemClass::JosephLundgren => {
            let gap = q - p + 1.0;
            if gap <= 0.0 {
                return Err(ModelError::ConditionViolated {
                    name: "exponent_gap",
                    margin: gap,
                    detail: "q-p+1 must be positive",
                });
            }
            let beta = jl_beta(params);
            let base = (n - p) * beta.powf(p - 1.0) - (p - 1.0) * beta.powf(p);
            if base <= 0.0 {
                return Err(ModelError::ConditionViolated {
                    name: "guiding_exists",
                    margin: base,
                    detail: "(n-p)beta^(p-1) - (p-1)beta^p must be positive",
                });
            }
            let coeff = base.powf(1.0 / gap);
            Ok(ClosedForms {
                class,
                params: *params,
                beta,
                coeff,
                lambda_inf: base,
                guiding_kind: GuidingKind::PowerDecay,
                printed_lambda_limit: coeff.powf(q - 1.0),
            })
        }
    }
}

fn check_positive_t(t: f64) -> Result<(), ModelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!(
            "guiding solution needs t > 0 (got {t})"
        )))
    }
}

/// Guiding solution and its exact derivative at `t`.
pub fn guiding_eval(cf: &ClosedForms, t: f64) -> Result<(f64, f64), ModelError> {
    check_positive_t(t)?;
    let b = cf.beta;
    Ok(match cf.guiding_kind {
        GuidingKind::PowerGrowth => (cf.coeff * t.powf(b), b * cf.coeff * t.powf(b - 1.0)),
        GuidingKind::PowerDecay => (cf.coeff * t.powf(-b), -b * cf.coeff * t.powf(-b - 1.0)),
        GuidingKind::Logarithmic => (cf.coeff.ln() - b * t.ln(), -b / t),
    })
}

/// Second derivative of the guiding solution.
pub fn guiding_second(cf: &ClosedForms, t: f64) -> Result<f64, ModelError> {
    check_positive_t(t)?;
    let b = cf.beta;
    Ok(match cf.guiding_kind {
        GuidingKind::PowerGrowth => b * (b - 1.0) * cf.coeff * t.powf(b - 2.0),
        GuidingKind::PowerDecay => b * (b + 1.0) * cf.coeff * t.powf(-b - 2.0),
        GuidingKind::Logarithmic => b / (t * t),
    })
}

/// A strict inequality `lhs > rhs`, stored as its signed margin `lhs - rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    pub boundary: bool,
    pub margin: f64,
}

impl Condition {
    pub fn strict(margin: f64) -> Self {
        let boundary = margin.abs() <= BOUNDARY_EPS;
        Condition {
            holds: margin > BOUNDARY_EPS,
            boundary,
            margin,
        }
    }
}

/// Monic quadratic `r^2 + linear r + constant` of an Euler equation
/// `t^2 z'' + A t z' + B z = 0` (so `linear = A - 1`, `constant = B`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicQuadratic {
    pub coefficients: [f64; 3],
    #[serde(serialize_with = "serialize_roots")]
    pub roots: [Complex64; 2],
    pub oscillatory: bool,
}

fn serialize_roots<S: serde::Serializer>(roots: &[Complex64; 2], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for r in roots {
        seq.serialize_element(&[r.re, r.im])?;
    }
    seq.end()
}

impl CharacteristicQuadratic {
    fn from_monic(linear: f64, constant: f64) -> Self {
        let disc = linear * linear - 4.0 * constant;
        let roots = if disc < 0.0 {
            let re = -linear / 2.0;
            let im = (-disc).sqrt() / 2.0;
            [Complex64::new(re, im), Complex64::new(re, -im)]
        } else {
            let s = disc.sqrt();
            [
                Complex64::new((-linear + s) / 2.0, 0.0),
                Complex64::new((-linear - s) / 2.0, 0.0),
            ]
        };
        CharacteristicQuadratic {
            coefficients: [1.0, linear, constant],
            roots,
            oscillatory: disc < 0.0,
        }
    }

    pub fn discriminant(&self) -> f64 {
        let [_, b, c] = self.coefficients;
        b * b - 4.0 * c
    }

    /// Largest real part; linearized deviations decay like `t^decay_exponent`.
    pub fn decay_exponent(&self) -> f64 {
        self.roots[0].re.max(self.roots[1].re)
    }
}

/// Characteristic quadratic of the Euler equation for perturbations of the
/// guiding solution. Requires the same parameters as [`closed_forms`].
pub fn characteristic_quadratic(
    params: &Params,
    class: ProblemClass,
) -> Result<CharacteristicQuadratic, ModelError> {
    closed_forms(params, class)?;
    Ok(quadratic_unchecked(params, class))
}

fn quadratic_unchecked(params: &Params, class: ProblemClass) -> CharacteristicQuadratic {
    let Params { p, q, alpha, n } = *params;
    let (linear, constant) = match class {
        ProblemClass::Gelfand => (n - p, (n - p) * (p + alpha) / (p - 1.0)),
        ProblemClass::Mems => {
            let beta = mems_beta(params);
            let k = (p - 1.0) * (beta - 1.0) + n - 1.0;
            ((p - 2.0) * (beta - 1.0) + n - 2.0, q * beta * k / (p - 1.0))
        }
        ProblemClass::JosephLundgren => {
            let beta = jl_beta(params);
            let a = -beta * (p - 2.0) + n - p + 1.0;
            (a - 1.0, q * (n - p) * beta / (p - 1.0) - q * beta * beta)
        }
    };
    CharacteristicQuadratic::from_monic(linear, constant)
}

/// Named conditions, the characteristic roots, and the prediction of
/// infinitely many turns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub class: ProblemClass,
    pub params: Params,
    pub conditions: BTreeMap<&'static str, Condition>,
    pub quadratic: Option<CharacteristicQuadratic>,
    pub oscillatory: bool,
    pub predicted_infinite_turns: bool,
    /// Open interval of dimensions `n` in which the sufficient conditions hold
    /// at the given `p, q, alpha`.
    pub dimension_window: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

impl RegimeReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.get(name)
    }

    pub fn char_roots(&self) -> Option<[Complex64; 2]> {
        self.quadratic.map(|q| q.roots)
    }
}

/// Upper end of the Gelfand oscillation window `p < n < (p^2+3p+4 alpha)/(p-1)`.
pub fn gelfand_window_upper(p: f64, alpha: f64) -> f64 {
    (p * p + 3.0 * p + 4.0 * alpha) / (p - 1.0)
}

/// Right-hand side of the lower bound on `beta` for complex MEMS roots,
/// valid when `4q > (p-2)^2`.
pub fn mems_beta_root(p: f64, q: f64, n: f64) -> f64 {
    let num = (p - n) * (2.0 * q - p * p + 3.0 * p - 2.0)
        + 2.0 * (n - p).abs() * (q * (p + q - 1.0)).sqrt();
    num / ((p - 1.0) * (4.0 * q - (p - 2.0).powi(2)))
}

/// `2 sqrt(q(p+q-1)) + p^2 - 3p + 2 - 2q`
pub fn mems_sqrt_term(p: f64, q: f64) -> f64 {
    2.0 * (q * (p + q - 1.0)).sqrt() + p * p - 3.0 * p + 2.0 - 2.0 * q
}

/// Upper end of the sufficient MEMS dimension window `p <= n < upper`.
pub fn mems_window_upper(params: &Params) -> f64 {
    let Params { p, q, alpha, .. } = *params;
    let lead = 4.0 * q - (p - 2.0).powi(2);
    let sq = mems_sqrt_term(p, q);
    if sq <= 0.0 || lead <= 0.0 {
        return f64::INFINITY;
    }
    p + (alpha + p) * (p - 1.0) * lead / ((p + q - 1.0) * sq)
}

/// `(theta, gamma)` of the JL complex-root quadratic in `n-p`.
pub fn jl_theta_gamma(params: &Params) -> (f64, f64) {
    let Params { p, q, .. } = *params;
    let beta = jl_beta(params);
    let theta = 2.0 * beta * (p - 2.0) + 4.0 * q * beta / (p - 1.0);
    let gamma = (p - 2.0).powi(2) * beta * beta + 4.0 * q * beta * beta;
    (theta, gamma)
}

/// Bounds of the JL window `(pq+p+p alpha)/(q-p+1) < n < p + (theta+sqrt(theta^2-4gamma))/2`.
pub fn jl_window(params: &Params) -> (f64, f64) {
    let Params { p, q, alpha, .. } = *params;
    let (theta, gamma) = jl_theta_gamma(params);
    let lower = (p * q + p + p * alpha) / (q - p + 1.0);
    let upper = p + (theta + (theta * theta - 4.0 * gamma).sqrt()) / 2.0;
    (lower, upper)
}

/// Lower bound on `q` for global positivity of the JL generating solution.
pub fn jl_supercritical_threshold(params: &Params) -> f64 {
    let Params { p, alpha, n, .. } = *params;
    (n * p - n + p + p * alpha) / (n - p)
}

pub fn check_conditions(params: &Params, class: ProblemClass) -> RegimeReport {
    let Params { p, q, alpha, n } = *params;
    let mut conditions = BTreeMap::new();
    let mut notes = Vec::new();
    let mut window = None;
    let quadratic_ok = characteristic_quadratic(params, class).is_ok();

    let predicted = match class {
        ProblemClass::Gelfand => {
            let upper = gelfand_window_upper(p, alpha);
            conditions.insert("n_exceeds_p", Condition::strict(n - p));
            let osc = Condition::strict((n - p).min(upper - n));
            conditions.insert("oscillation_window", osc);
            window = Some((p, upper));
            osc.holds
        }
        ProblemClass::Mems => {
            let beta = mems_beta(params);
            let k = (p - 1.0) * (beta - 1.0) + n - 1.0;
            let lead = 4.0 * q - (p - 2.0).powi(2);
            let a = 4.0 * (p - 1.0) * q - (p - 1.0) * (p - 2.0).powi(2);
            let b = 4.0 * q * (n - p) - 2.0 * (p - 1.0) * (p - 2.0) * (n - p);
            let c = (p - 1.0) * (n - p).powi(2);
            conditions.insert("guiding_exists", Condition::strict(k));
            conditions.insert(
                "complex_roots",
                Condition::strict(a * beta * beta + b * beta - c),
            );
            let lead_c = Condition::strict(lead);
            conditions.insert("leading_coefficient_positive", lead_c);
            let root_c = Condition::strict(beta - mems_beta_root(p, q, n));
            conditions.insert("beta_above_root", root_c);
            let decay_c = Condition::strict(k - beta);
            conditions.insert("flux_decay", decay_c);
            conditions.insert(
                "sufficient_sqrt_term",
                Condition::strict(mems_sqrt_term(p, q)),
            );
            let upper = mems_window_upper(params);
            let wm = if n < p { n - p } else { upper - n };
            conditions.insert("sufficient_dimension_window", Condition::strict(wm));
            window = Some((p, upper));
            if n < 3.0 {
                notes.push(
                    "n < 3: the boundedness step of the oscillation argument assumes n >= 3; \
                     prediction for this dimension is unverified"
                        .to_string(),
                );
            }
            lead_c.holds && root_c.holds && decay_c.holds
        }
        ProblemClass::JosephLundgren => {
            let gap = q - p + 1.0;
            conditions.insert("exponent_gap", Condition::strict(gap));
            let super_margin = if n > p {
                q - jl_supercritical_threshold(params)
            } else {
                n - p
            };
            let supercritical = Condition::strict(super_margin);
            conditions.insert("supercritical_exponent", supercritical);
            if gap > 0.0 {
                let beta = jl_beta(params);
                let base = (n - p) * beta.powf(p - 1.0) - (p - 1.0) * beta.powf(p);
                conditions.insert("guiding_exists", Condition::strict(base));
                let (theta, gamma) = jl_theta_gamma(params);
                let m = n - p;
                conditions.insert(
                    "complex_roots",
                    Condition::strict(-(m * m - theta * m + gamma)),
                );
                let (lower, upper) = jl_window(params);
                let below = Condition::strict(upper - n);
                conditions.insert("below_larger_root", below);
                conditions.insert(
                    "dimension_window",
                    Condition::strict((n - lower).min(upper - n)),
                );
                window = Some((lower, upper));
                supercritical.holds && below.holds
            } else {
                false
            }
        }
    };

    match class {
        ProblemClass::Mems if quadratic_ok => notes.push(
            "lambda limit = beta^(p-1)[(p-1)(beta-1)+n-1] = c0^-(p+q-1); the form c0^-(q-1) \
             does not match it"
                .to_string(),
        ),
        ProblemClass::JosephLundgren if quadratic_ok && p != 2.0 => notes
            .push("lambda limit = a0^(q-p+1); the form a0^(q-1) agrees only at p = 2".to_string()),
        _ => {}
    }

    let quadratic = quadratic_ok.then(|| quadratic_unchecked(params, class));
    RegimeReport {
        class,
        params: *params,
        conditions,
        quadratic,
        oscillatory: quadratic.is_some_and(|q| q.oscillatory),
        predicted_infinite_turns: predicted,
        dimension_window: window,
        notes,
    }
}
