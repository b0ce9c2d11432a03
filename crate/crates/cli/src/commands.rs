use std::io::Write;
use std::path::Path;

use plap_curves::curve::{
    build_curve, log_grid, profile, singular_profile, turning_points, PROFILE_GRID_MIN,
    PROFILE_GRID_POINTS,
};
use plap_curves::io::{curve_csv, profile_csv, to_json, trajectory_csv, turning_points_csv};
use plap_curves::model::characteristic_quadratic;
use plap_curves::verify::{self, render_table, VerifyOptions};
use plap_curves::{check_conditions, closed_forms, integrate, ProblemClass, Trajectory};
use serde_json::{json, Value};

use crate::args::{Format, RunSpec, Shared};
use crate::error::CliError;

const DEFAULT_SAMPLES_PER_DECADE: usize = 20;
const DEFAULT_PROFILE_AT: f64 = 1e3;

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn json_doc(value: &Value) -> Result<String, CliError> {
    let mut s = to_json(value)?;
    s.push('\n');
    Ok(s)
}

fn run_ivp(spec: &RunSpec) -> Result<Trajectory, CliError> {
    Ok(integrate(&spec.params, spec.class, &spec.integrator)?)
}

pub fn analyze(shared: &Shared) -> Result<(), CliError> {
    let spec = shared.resolve()?;
    if shared.format == Some(Format::Csv) {
        return Err(CliError::Invalid("analyze writes JSON only".into()));
    }
    let report = check_conditions(&spec.params, spec.class);
    let window = report
        .dimension_window
        .map(|(lo, hi)| format!("{lo}<n<{hi}"));
    let doc = json!({
        "report": report,
        "closed_forms": closed_forms(&spec.params, spec.class).ok(),
        "discriminant": characteristic_quadratic(&spec.params, spec.class).ok().map(|q| q.discriminant()),
        "window": window,
    });
    emit(spec.output.as_deref(), &json_doc(&doc)?)
}

pub fn solve(shared: &Shared) -> Result<(), CliError> {
    let spec = shared.resolve()?;
    let traj = run_ivp(&spec)?;
    let text = match spec.format {
        Format::Csv => trajectory_csv(&traj),
        Format::Json => json_doc(&json!({
            "class": spec.class,
            "params": spec.params,
            "integrator": spec.integrator,
            "termination": traj.termination(),
            "nodes": traj.nodes(),
        }))?,
    };
    emit(spec.output.as_deref(), &text)
}

pub fn curve(shared: &Shared, samples_per_decade: Option<usize>) -> Result<(), CliError> {
    let spec = shared.resolve()?;
    let spd = spec
        .extra(samples_per_decade, "samples_per_decade")?
        .unwrap_or(DEFAULT_SAMPLES_PER_DECADE);
    if spd == 0 {
        return Err(CliError::Invalid(
            "samples-per-decade must be positive".into(),
        ));
    }
    let traj = run_ivp(&spec)?;
    let cf = closed_forms(&spec.params, spec.class).ok();
    let curve = build_curve(&traj, cf.as_ref(), spd)?;
    let text = match spec.format {
        Format::Csv => {
            if let Some(w) = &curve.warning {
                eprintln!("warning: {w}");
            }
            curve_csv(&curve)
        }
        Format::Json => json_doc(&serde_json::to_value(&curve)?)?,
    };
    emit(spec.output.as_deref(), &text)
}

pub fn turns(shared: &Shared, summary_path: Option<&Path>) -> Result<(), CliError> {
    let spec = shared.resolve()?;
    let traj = run_ivp(&spec)?;
    let turns = turning_points(&traj);
    let alternating = turns.windows(2).all(|w| w[0].direction != w[1].direction);
    let summary = json!({
        "class": spec.class,
        "params": spec.params,
        "t_start": traj.t_start(),
        "t_end": traj.t_end(),
        "termination": traj.termination(),
        "count": turns.len(),
        "alternating_directions": alternating,
        "lambda_inf": closed_forms(&spec.params, spec.class).ok().map(|cf| cf.lambda_inf),
    });
    match spec.format {
        Format::Csv => {
            emit(spec.output.as_deref(), &turning_points_csv(&turns))?;
            let text = json_doc(&summary)?;
            match summary_path {
                Some(p) => emit(Some(p), &text)?,
                None => eprint!("{text}"),
            }
            Ok(())
        }
        Format::Json => emit(
            spec.output.as_deref(),
            &json_doc(&json!({ "turning_points": turns, "summary": summary }))?,
        ),
    }
}

pub fn profile_cmd(
    shared: &Shared,
    at: Option<f64>,
    points: Option<usize>,
    r_min: Option<f64>,
) -> Result<(), CliError> {
    let spec = shared.resolve()?;
    let at = spec
        .extra(at, "at")?
        .unwrap_or(DEFAULT_PROFILE_AT.min(spec.integrator.t_max));
    let points = spec.extra(points, "points")?.unwrap_or(PROFILE_GRID_POINTS);
    let r_min = spec.extra(r_min, "r_min")?.unwrap_or(PROFILE_GRID_MIN);
    if points < 2 {
        return Err(CliError::Invalid("points must be at least 2".into()));
    }
    if !(r_min > 0.0 && r_min < 1.0) {
        return Err(CliError::Invalid(format!(
            "r-min must lie in (0, 1) (got {r_min})"
        )));
    }
    let traj = run_ivp(&spec)?;
    let grid = log_grid(r_min, points);
    let rows = profile(&traj, at, &grid)?;
    let cf = closed_forms(&spec.params, spec.class).ok();
    let singular: Option<Vec<f64>> = cf
        .as_ref()
        .map(|cf| grid.iter().map(|&r| singular_profile(cf, r)).collect());
    let text = match spec.format {
        Format::Csv => profile_csv(&rows, singular.as_deref()),
        Format::Json => {
            let (r, u): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
            let (lambda, u0) =
                plap_curves::curve::lambda_u0(spec.class, &spec.params, at, traj.eval(at)?.0);
            json_doc(&json!({
                "class": spec.class,
                "params": spec.params,
                "t": at,
                "lambda": lambda,
                "u0": u0,
                "r": r,
                "u": u,
                "u_singular": singular,
            }))?
        }
    };
    emit(spec.output.as_deref(), &text)
}

pub fn verify_cmd(
    tol_scale: f64,
    only: Option<ProblemClass>,
    serial: bool,
    output: Option<&Path>,
    format: Option<Format>,
) -> Result<(), CliError> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(CliError::Invalid(format!(
            "tol-scale must be positive (got {tol_scale})"
        )));
    }
    let opts = VerifyOptions {
        tol_scale,
        only,
        parallel: !serial,
    };
    let rows = verify::run(&opts);
    let failed = rows.iter().filter(|r| !r.pass).count();
    let text = match format {
        Some(Format::Json) => json_doc(&json!({
            "tol_scale": tol_scale,
            "only": only,
            "rows": rows,
            "failed": failed,
        }))?,
        Some(Format::Csv) => return Err(CliError::Invalid("verify writes a table or JSON".into())),
        None => render_table(&rows),
    };
    emit(output, &text)?;
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
