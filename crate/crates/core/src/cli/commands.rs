//! Subcommand implementations. Every command writes its artifacts into the
//! output directory and nothing else; given the same configuration and seed
//! the bytes written are identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::config::{Grid, RunConfig};
use crate::controller::{
    carnot_position, degeneracy_position, landscape, operability_form, optimal_position, FormKind,
    Optimum,
};
use crate::engine::{adaptability, steady_currents, BathSet};
use crate::error::{Error, OperabilityDiagnosis, Result};
use crate::joint::{build_joint_generator, joint_steady_state};
use crate::learner::{
    AdaptStatus, AdaptationRecord, Learner, LearnerOptions, SchedulePoint, TemperatureSchedule,
};

/// Floats in CSV files: 12 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SteadyOutput {
    pub x: f64,
    pub populations: [f64; 3],
    pub j12: f64,
    pub j13: f64,
    pub j23: f64,
    pub power: f64,
    pub eta: Option<f64>,
    pub operable: bool,
    pub adaptable: bool,
    pub theta: f64,
    pub eta_carnot: f64,
}

/// Steady state of the engine at the configured controller position.
pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let rep = steady_currents(&cfg.engine, &cfg.baths, cfg.steady_x)?;
    let output = SteadyOutput {
        x: rep.x,
        populations: rep.populations,
        j12: rep.j12,
        j13: rep.j13,
        j23: rep.j23,
        power: rep.power,
        eta: rep.eta,
        operable: rep.operable,
        adaptable: adaptability(&cfg.engine, &cfg.baths, cfg.steady_x)?,
        theta: cfg.baths.theta(),
        eta_carnot: cfg.baths.carnot_efficiency(),
    };
    Ok(vec![write_file(out, "steady.json", &json_line(&output)?)?])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LandscapeSidecar {
    pub theta: f64,
    pub eta_carnot: f64,
    pub form_kind: FormKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub discriminant: f64,
    pub root_lo: Option<f64>,
    pub root_hi: Option<f64>,
    /// Where `ê2(x) = 0`.
    pub degeneracy_root: Option<f64>,
    /// Where the efficiency reaches the Carnot value.
    pub carnot_root: Option<f64>,
    pub operable: bool,
    pub x_tilde: Option<f64>,
    pub j12_at_x_tilde: Option<f64>,
    pub x_star: f64,
    pub diagnosis: Option<OperabilityDiagnosis>,
}

pub const LANDSCAPE_HEADER: &str = "x,J12,J13,J23,eta,pC,operable";

/// Conditional power landscape on a position grid plus a JSON sidecar with
/// the operating-region analysis.
pub fn cmd_landscape(
    cfg: &RunConfig,
    out: &Path,
    grid_override: Option<Grid>,
) -> Result<Vec<PathBuf>> {
    let grid = grid_override.or(cfg.landscape).ok_or_else(|| {
        Error::Config("landscape: no [landscape] grid in config and no --grid".into())
    })?;
    let samples = landscape(
        &cfg.engine,
        &cfg.baths,
        &cfg.controller,
        (grid.min, grid.max),
        grid.points,
    )?;
    let mut csv = String::with_capacity(samples.len() * 100);
    csv.push_str(LANDSCAPE_HEADER);
    csv.push('\n');
    for s in &samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fmt_float(s.x),
            fmt_float(s.j12),
            fmt_float(s.j13),
            fmt_float(s.j23),
            fmt_opt(s.eta),
            fmt_float(s.p_c),
            s.operable
        );
    }

    let form = operability_form(&cfg.engine, &cfg.baths);
    let (optimum, diagnosis) = match optimal_position(&cfg.engine, &cfg.baths) {
        Ok(o) => (Some(o), None),
        Err(Error::NotOperable(d)) => (None, Some(d)),
        Err(e) => return Err(e),
    };
    let sidecar = LandscapeSidecar {
        theta: form.theta,
        eta_carnot: cfg.baths.carnot_efficiency(),
        form_kind: form.kind,
        a: form.a,
        b: form.b,
        c: form.c,
        discriminant: form.discriminant,
        root_lo: form.root_lo,
        root_hi: form.root_hi,
        degeneracy_root: degeneracy_position(&cfg.engine),
        carnot_root: carnot_position(&cfg.engine, &cfg.baths),
        operable: optimum.is_some(),
        x_tilde: optimum.map(|o| o.x),
        j12_at_x_tilde: optimum.map(|o| o.j12),
        x_star: cfg.controller.most_probable_position(),
        diagnosis,
    };
    Ok(vec![
        write_file(out, "landscape.csv", &csv)?,
        write_file(out, "landscape.json", &json_line(&sidecar)?)?,
    ])
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    time: f64,
    t13: f64,
    t23: f64,
}

/// Reads a `time,t13,t23` CSV schedule (temperatures in K).
pub fn read_schedule(path: &Path) -> Result<Vec<SchedulePoint<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Schedule {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
    let mut points = Vec::new();
    for row in rdr.deserialize::<ScheduleRow>() {
        let row = row.map_err(|e| Error::Schedule {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = points.len() as u64 + 2;
        if !(row.t13 > 0.0 && row.t23 > 0.0) {
            return Err(Error::Schedule {
                line,
                message: "temperatures must be positive".into(),
            });
        }
        if let Some(prev) = points.last().map(|p: &SchedulePoint<f64>| p.time) {
            if !(row.time > prev) {
                return Err(Error::Schedule {
                    line,
                    message: "time tags must be strictly increasing".into(),
                });
            }
        }
        points.push(SchedulePoint {
            time: row.time,
            t13: row.t13,
            t23: row.t23,
        });
    }
    if points.is_empty() {
        return Err(Error::Schedule {
            line: 1,
            message: "schedule has no rows".into(),
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptSummary {
    pub steps: usize,
    pub retuned: usize,
    pub not_operable: usize,
    pub fraction_operable: f64,
    /// Mean `|J12|` after actuation over operable steps.
    pub mean_abs_power_operable: Option<f64>,
}

pub fn summarize(records: &[AdaptationRecord<f64>]) -> AdaptSummary {
    let operable: Vec<f64> = records
        .iter()
        .filter(|r| r.status != AdaptStatus::NotOperable)
        .filter_map(|r| r.power_after)
        .collect();
    let n_op = records
        .iter()
        .filter(|r| r.status != AdaptStatus::NotOperable)
        .count();
    AdaptSummary {
        steps: records.len(),
        retuned: records
            .iter()
            .filter(|r| r.status == AdaptStatus::Retuned)
            .count(),
        not_operable: records.len() - n_op,
        fraction_operable: if records.is_empty() {
            0.0
        } else {
            n_op as f64 / records.len() as f64
        },
        mean_abs_power_operable: (!operable.is_empty())
            .then(|| operable.iter().map(|p| p.abs()).sum::<f64>() / operable.len() as f64),
    }
}

/// Runs the feedback loop over a temperature schedule; one JSON record per
/// line, followed by a `{"summary": ...}` line.
pub fn cmd_adapt(
    cfg: &RunConfig,
    out: &Path,
    schedule_path: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let path = schedule_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.adapt.schedule.clone())
        .ok_or_else(|| {
            Error::Config("adapt: no schedule given (--schedule or adapt.schedule)".into())
        })?;
    let points = read_schedule(&path)?;
    let schedule = TemperatureSchedule::new(points, cfg.adapt.noise_sigma, cfg.seed)?;
    let options = LearnerOptions {
        pos_tol: cfg.adapt.pos_tol,
        retrigger_tol: cfg.adapt.retrigger_tol,
        ..LearnerOptions::default()
    };
    let mut learner = Learner::new(cfg.engine, cfg.controller, cfg.baths.work_source, options)?;
    let records = learner.run_schedule(&schedule)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    #[derive(Serialize)]
    struct SummaryLine {
        summary: AdaptSummary,
    }
    text.push_str(&serde_json::to_string(&SummaryLine {
        summary: summarize(&records),
    })?);
    text.push('\n');
    Ok(vec![write_file(out, "adapt.jsonl", &text)?])
}

pub const SWEEP_HEADER: &str = "T13,T23,theta,eta_carnot,operable,operable_bare,x_tilde,max_power";

/// One cell of the temperature sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepCell {
    pub t13: f64,
    pub t23: f64,
    pub theta: f64,
    pub eta_carnot: f64,
    /// Some controller position makes the engine work.
    pub operable: bool,
    /// The engine works with the controller at `x = 0`.
    pub operable_bare: bool,
    pub optimum: Option<Optimum<f64>>,
}

pub fn sweep_cells(cfg: &RunConfig, t13: &Grid, t23: &Grid) -> Result<Vec<SweepCell>> {
    let cells: Vec<(f64, f64)> = t13
        .values()
        .into_iter()
        .flat_map(|a| t23.values().into_iter().map(move |b| (a, b)))
        .collect();
    cells
        .into_par_iter()
        .map(|(a, b)| {
            let baths = BathSet::new(a, b, cfg.baths.work_source)?;
            let optimum = match optimal_position(&cfg.engine, &baths) {
                Ok(o) => Some(o),
                Err(Error::NotOperable(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepCell {
                t13: a,
                t23: b,
                theta: baths.theta(),
                eta_carnot: baths.carnot_efficiency(),
                operable: optimum.is_some(),
                operable_bare: adaptability(&cfg.engine, &baths, 0.0)?,
                optimum,
            })
        })
        .collect()
}

/// Operability phase diagram over a (T13, T23) grid, row-major in T13.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, grid_override: Option<Grid>) -> Result<Vec<PathBuf>> {
    let (g13, g23) = match (grid_override, cfg.sweep) {
        (Some(g), _) => (g, g),
        (None, Some(s)) => s,
        (None, None) => {
            return Err(Error::Config(
                "sweep: no [sweep] block in config and no --grid".into(),
            ))
        }
    };
    let cells = sweep_cells(cfg, &g13, &g23)?;
    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    for c in &cells {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt_float(c.t13),
            fmt_float(c.t23),
            fmt_float(c.theta),
            fmt_float(c.eta_carnot),
            c.operable,
            c.operable_bare,
            fmt_opt(c.optimum.map(|o| o.x)),
            fmt_opt(c.optimum.map(|o| o.j12.abs())),
        );
    }
    Ok(vec![write_file(out, "sweep.csv", &csv)?])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JointSidecar {
    pub fock_dim: usize,
    pub coupling_scale: f64,
    pub negativity: f64,
    pub marginal_l2_error: f64,
    /// Largest relative deviation of the conditional J12 within ±2 sigma.
    pub conditional_j12_max_rel_error: Option<f64>,
    pub time: f64,
    pub residual: f64,
    pub trace: f64,
    pub engine_populations: [f64; 3],
}

pub const JOINT_HEADER: &str =
    "x,marginal,pC_analytic,J12_conditional_numeric,J12_conditional_analytic";

/// Truncated joint simulation compared against the analytic marginal and
/// conditional power.
pub fn cmd_joint(cfg: &RunConfig, out: &Path, grid_override: Option<Grid>) -> Result<Vec<PathBuf>> {
    let settings = cfg
        .joint
        .as_ref()
        .ok_or_else(|| Error::Config("joint: no [joint] block in config".into()))?;
    let mut spec = settings.spec;
    if let Some(g) = grid_override {
        spec.grid.x_min = g.min;
        spec.grid.x_max = g.max;
        spec.grid.points = g.points;
    }
    let ctrl = &settings.controller;
    let generator = build_joint_generator(&settings.engine, &cfg.baths, ctrl, &spec)?;
    let steady = joint_steady_state(&generator, ctrl, &spec, &settings.options)?;
    let density = ctrl.stationary_density();
    let scaled = settings.engine.with_coupling_scale(spec.coupling_scale);
    let numeric = steady.conditional_j12(&scaled, &cfg.baths)?;

    let mut csv = String::new();
    csv.push_str(JOINT_HEADER);
    csv.push('\n');
    let mut max_rel: Option<f64> = None;
    for (k, &x) in steady.positions.iter().enumerate() {
        let analytic = steady_currents(&scaled, &cfg.baths, x)?.j12;
        if let Some(num) = numeric[k] {
            if (x - density.mean).abs() <= 2.0 * density.std_dev {
                let rel = (num - analytic).abs() / analytic.abs();
                max_rel = Some(max_rel.map_or(rel, |m: f64| m.max(rel)));
            }
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_float(x),
            fmt_float(steady.marginal[k]),
            fmt_float(density.pdf(x)),
            fmt_opt(numeric[k]),
            fmt_float(analytic),
        );
    }
    let sidecar = JointSidecar {
        fock_dim: spec.fock_dim,
        coupling_scale: spec.coupling_scale,
        negativity: steady.negativity,
        marginal_l2_error: steady.marginal_l2_error(|x| density.pdf(x)),
        conditional_j12_max_rel_error: max_rel,
        time: steady.time,
        residual: steady.residual,
        trace: steady.state.trace(),
        engine_populations: steady.state.engine_populations(),
    };
    Ok(vec![
        write_file(out, "joint.csv", &csv)?,
        write_file(out, "joint.json", &json_line(&sidecar)?)?,
    ])
}
