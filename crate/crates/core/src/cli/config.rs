//! Run configuration: TOML with mandatory unit tags and a strict schema.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::controller::ControllerSpec;
use crate::engine::{BathSet, EngineSpec, WorkSource};
use crate::error::{Error, Result};
use crate::joint::{JointOptions, JointSpec, PositionGrid};
use crate::units::*;

/// Reference parameter set shipped with the binary.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");

/// A number with its unit tag, e.g. `{ value = 330, unit = "K" }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, Copy)]
enum Dimension {
    Energy,
    Temperature,
    Length,
    Coupling,
    Stiffness,
    Mass,
    Rate,
    RatePrefactor,
    Friction,
}

impl Dimension {
    /// Accepted unit tags and their factor into internal units.
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Energy => &[("eV", 1.0), ("meV", 1e-3), ("J", 1.0 / EV_IN_J)],
            Dimension::Temperature => &[("K", 1.0)],
            Dimension::Length => &[("nm", 1.0), ("m", 1e9), ("um", 1e3)],
            Dimension::Coupling => &[("eV/nm", 1.0), ("meV/nm", 1e-3), ("N", NEWTON_IN_EV_PER_NM)],
            Dimension::Stiffness => &[
                ("eV/nm^2", 1.0),
                ("N/nm", NEWTON_PER_NM_IN_EV_PER_NM2),
                ("N/m", NEWTON_PER_M_IN_EV_PER_NM2),
            ],
            Dimension::Mass => &[
                ("hbar^2/(eV nm^2)", 1.0),
                ("kg", KG_IN_INTERNAL_MASS),
                ("g", 1e-3 * KG_IN_INTERNAL_MASS),
            ],
            Dimension::Rate => &[("eV", 1.0), ("1/s", PER_SECOND_IN_EV)],
            Dimension::RatePrefactor => &[("eV^-2", 1.0)],
            // "1/nm" is the tag used by the reference parameter set; its value
            // is taken as an internal rate.
            Dimension::Friction => &[("eV", 1.0), ("1/s", PER_SECOND_IN_EV), ("1/nm", 1.0)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Energy => "energy",
            Dimension::Temperature => "temperature",
            Dimension::Length => "length",
            Dimension::Coupling => "coupling/force",
            Dimension::Stiffness => "stiffness",
            Dimension::Mass => "mass",
            Dimension::Rate => "rate",
            Dimension::RatePrefactor => "rate prefactor",
            Dimension::Friction => "friction",
        }
    }
}

fn convert(q: &Quantity, dim: Dimension, field: &str) -> Result<f64> {
    let table = dim.units();
    let factor = table
        .iter()
        .find(|(tag, _)| *tag == q.unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            let expected: Vec<&str> = table.iter().map(|(t, _)| *t).collect();
            Error::Config(format!(
                "{field}: unknown {} unit '{}' (expected one of {:?})",
                dim.name(),
                q.unit,
                expected
            ))
        })?;
    if !q.value.is_finite() {
        return Err(Error::Config(format!("{field}: value must be finite")));
    }
    Ok(q.value * factor)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    e1: Quantity,
    e2: Quantity,
    e3: Quantity,
    g1: Quantity,
    g2: Quantity,
    g3: Quantity,
    gamma0: Quantity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaths {
    t13: Quantity,
    t23: Quantity,
    /// Fixed work-source rate; when absent `gamma0 |omega_12(x)|^3` is used.
    gamma12: Option<Quantity>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    mass: Quantity,
    kappa: Quantity,
    xi: Quantity,
    temperature: Quantity,
    force: Quantity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    min: Quantity,
    max: Quantity,
    points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSteady {
    x: Quantity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLandscape {
    grid: RawGrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    t13: RawGrid,
    t23: RawGrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdapt {
    schedule: Option<PathBuf>,
    noise_sigma: Quantity,
    pos_tol: Quantity,
    retrigger_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    fock_dim: usize,
    coupling_scale: f64,
    grid: RawGrid,
    t_max: Option<f64>,
    stop_tol: Option<f64>,
    /// Replaces the main engine for the truncated simulation.
    engine: Option<RawEngine>,
    /// Replaces the main controller for the truncated simulation.
    controller: Option<RawController>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    engine: RawEngine,
    baths: RawBaths,
    controller: RawController,
    steady: Option<RawSteady>,
    landscape: Option<RawLandscape>,
    sweep: Option<RawSweep>,
    adapt: Option<RawAdapt>,
    joint: Option<RawJoint>,
}

/// Inclusive uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.max
                } else {
                    self.min + step * k as f64
                }
            })
            .collect()
    }

    /// Parses `MIN:MAX:N`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("--grid expects MIN:MAX:N, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let g = Grid { min, max, points };
        g.check("--grid")?;
        Ok(g)
    }

    fn check(&self, field: &str) -> Result<()> {
        if self.points < 2
            || !(self.max > self.min)
            || !self.min.is_finite()
            || !self.max.is_finite()
        {
            return Err(Error::Config(format!(
                "{field}: need points >= 2 and max > min (got {} points on [{}, {}])",
                self.points, self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdaptSettings {
    pub schedule: Option<PathBuf>,
    pub noise_sigma: f64,
    pub pos_tol: f64,
    pub retrigger_tol: f64,
}

#[derive(Debug, Clone)]
pub struct JointSettings {
    pub spec: JointSpec<f64>,
    pub options: JointOptions<f64>,
    pub engine: EngineSpec<f64>,
    pub controller: ControllerSpec<f64>,
}

/// Fully resolved configuration in internal units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub engine: EngineSpec<f64>,
    pub baths: BathSet<f64>,
    pub controller: ControllerSpec<f64>,
    pub steady_x: f64,
    pub landscape: Option<Grid>,
    pub sweep: Option<(Grid, Grid)>,
    pub adapt: AdaptSettings,
    pub joint: Option<JointSettings>,
}

fn grid(raw: &RawGrid, dim: Dimension, field: &str) -> Result<Grid> {
    let g = Grid {
        min: convert(&raw.min, dim, &format!("{field}.min"))?,
        max: convert(&raw.max, dim, &format!("{field}.max"))?,
        points: raw.points,
    };
    g.check(field)?;
    Ok(g)
}

fn engine_spec(e: &RawEngine, field: &str) -> Result<EngineSpec<f64>> {
    let energy = |q: &Quantity, f: &str| convert(q, Dimension::Energy, &format!("{field}.{f}"));
    let coupling = |q: &Quantity, f: &str| convert(q, Dimension::Coupling, &format!("{field}.{f}"));
    EngineSpec::new(
        [
            energy(&e.e1, "e1")?,
            energy(&e.e2, "e2")?,
            energy(&e.e3, "e3")?,
        ],
        [
            coupling(&e.g1, "g1")?,
            coupling(&e.g2, "g2")?,
            coupling(&e.g3, "g3")?,
        ],
        convert(
            &e.gamma0,
            Dimension::RatePrefactor,
            &format!("{field}.gamma0"),
        )?,
    )
    .map_err(|err| Error::Config(format!("{field}: {err}")))
}

fn controller(raw: &RawController, field: &str) -> Result<ControllerSpec<f64>> {
    let c = ControllerSpec {
        mass: convert(&raw.mass, Dimension::Mass, &format!("{field}.mass"))?,
        kappa: convert(&raw.kappa, Dimension::Stiffness, &format!("{field}.kappa"))?,
        xi: convert(&raw.xi, Dimension::Friction, &format!("{field}.xi"))?,
        temperature: convert(
            &raw.temperature,
            Dimension::Temperature,
            &format!("{field}.temperature"),
        )?,
        force: convert(&raw.force, Dimension::Coupling, &format!("{field}.force"))?,
    };
    c.validate()
        .map_err(|e| Error::Config(format!("{field}: {e}")))?;
    Ok(c)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn default_config() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let engine = engine_spec(&raw.engine, "engine")?;

        let work_source = match &raw.baths.gamma12 {
            Some(q) => WorkSource::Fixed(convert(q, Dimension::Rate, "baths.gamma12")?),
            None => WorkSource::Spontaneous,
        };
        let baths = BathSet::new(
            convert(&raw.baths.t13, Dimension::Temperature, "baths.t13")?,
            convert(&raw.baths.t23, Dimension::Temperature, "baths.t23")?,
            work_source,
        )
        .map_err(|err| Error::Config(format!("baths: {err}")))?;

        let ctrl = controller(&raw.controller, "controller")?;

        let steady_x = match &raw.steady {
            Some(s) => convert(&s.x, Dimension::Length, "steady.x")?,
            None => 0.0,
        };
        let landscape = raw
            .landscape
            .as_ref()
            .map(|l| grid(&l.grid, Dimension::Length, "landscape.grid"))
            .transpose()?;
        let sweep = raw
            .sweep
            .as_ref()
            .map(|s| -> Result<(Grid, Grid)> {
                Ok((
                    grid(&s.t13, Dimension::Temperature, "sweep.t13")?,
                    grid(&s.t23, Dimension::Temperature, "sweep.t23")?,
                ))
            })
            .transpose()?;
        let adapt = match &raw.adapt {
            Some(a) => {
                let s = AdaptSettings {
                    schedule: a.schedule.clone(),
                    noise_sigma: convert(
                        &a.noise_sigma,
                        Dimension::Temperature,
                        "adapt.noise_sigma",
                    )?,
                    pos_tol: convert(&a.pos_tol, Dimension::Length, "adapt.pos_tol")?,
                    retrigger_tol: a.retrigger_tol,
                };
                if !(s.noise_sigma >= 0.0 && s.pos_tol >= 0.0 && s.retrigger_tol >= 0.0) {
                    return Err(Error::Config(
                        "adapt: tolerances and noise must be >= 0".into(),
                    ));
                }
                s
            }
            None => AdaptSettings {
                schedule: None,
                noise_sigma: 0.0,
                pos_tol: 1e-6,
                retrigger_tol: 1e-3,
            },
        };
        let joint = raw
            .joint
            .as_ref()
            .map(|j| -> Result<JointSettings> {
                let g = grid(&j.grid, Dimension::Length, "joint.grid")?;
                let je = match &j.engine {
                    Some(e) => engine_spec(e, "joint.engine")?,
                    None => engine,
                };
                let jc = match &j.controller {
                    Some(c) => controller(c, "joint.controller")?,
                    None => ctrl,
                };
                let mut options = JointOptions::default();
                if let Some(t) = j.t_max {
                    options.t_max = t;
                }
                if let Some(t) = j.stop_tol {
                    options.stop_tol = t;
                }
                Ok(JointSettings {
                    spec: JointSpec {
                        fock_dim: j.fock_dim,
                        coupling_scale: j.coupling_scale,
                        grid: PositionGrid {
                            x_min: g.min,
                            x_max: g.max,
                            points: g.points,
                        },
                    },
                    options,
                    engine: je,
                    controller: jc,
                })
            })
            .transpose()?;

        Ok(Self {
            seed: raw.seed.unwrap_or(0),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            engine,
            baths,
            controller: ctrl,
            steady_x,
            landscape,
            sweep,
            adapt,
            joint,
        })
    }
}
