//! Brownian controller statistics and the position-dependent power landscape.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{steady_currents, BathSet, EngineSpec};
use crate::error::{Error, OperabilityDiagnosis, Result};
use crate::optimize::scan_then_golden;
use crate::scalar::{diff_of_products, Compensated, Real};
use crate::units::BOLTZMANN_EV_PER_K;

/// The charged Brownian particle that shifts the engine levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ControllerSpec<T: Real> {
    /// Mass in hbar^2/(eV nm^2).
    pub mass: T,
    /// Stiffness in eV/nm^2.
    pub kappa: T,
    /// Friction rate (eV, hbar = 1). Only enters the joint dynamics.
    pub xi: T,
    /// Temperature (K) of the controller's own bath.
    pub temperature: T,
    /// Applied force `E = qE'` in eV/nm, entering as `H_CF = E x`.
    pub force: T,
}

impl<T: Real> ControllerSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mass > T::zero()
            && self.kappa > T::zero()
            && self.temperature > T::zero()
            && self.xi >= T::zero()
            && [self.mass, self.kappa, self.xi, self.temperature, self.force]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "controller needs mass > 0, kappa > 0, T > 0, xi >= 0 (got {self:?})"
            )))
        }
    }

    /// `k_B T` in eV.
    pub fn thermal_energy(&self) -> T {
        T::lit(BOLTZMANN_EV_PER_K) * self.temperature
    }

    /// Oscillator frequency `sqrt(kappa / m)` in eV.
    pub fn frequency(&self) -> T {
        (self.kappa / self.mass).sqrt()
    }

    pub fn stationary_density(&self) -> GaussianDensity<T> {
        GaussianDensity {
            mean: self.most_probable_position(),
            std_dev: (self.thermal_energy() / self.kappa).sqrt(),
        }
    }

    /// Peak of the stationary density, `-E / kappa`.
    pub fn most_probable_position(&self) -> T {
        -self.force / self.kappa
    }

    /// Force that puts the density peak at `x`.
    pub fn force_for_peak(&self, x: T) -> T {
        -self.kappa * x
    }
}

/// Stationary position density `N(-E/kappa, k_B T / kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GaussianDensity<T: Real> {
    pub mean: T,
    pub std_dev: T,
}

impl<T: Real> GaussianDensity<T> {
    /// Density in 1/nm.
    pub fn pdf(&self, x: T) -> T {
        let z = (x - self.mean) / self.std_dev;
        (-(z * z) / T::lit(2.0)).exp() / (self.std_dev * (T::lit(2.0) * T::PI()).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Generic,
    /// `a = 0`, `b != 0`.
    Linear,
    /// `a = b = 0`.
    Constant,
}

/// Set of positions where `y(x) < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum OperatingRegion<T: Real> {
    Empty,
    /// `(lo, hi)`.
    Between(T, T),
    /// `(-inf, lo) ∪ (hi, inf)`.
    Outside(T, T),
    /// `(-inf, r)`.
    Below(T),
    /// `(r, inf)`.
    Above(T),
    /// Every position except a double root.
    AllExcept(T),
    All,
}

impl<T: Real> OperatingRegion<T> {
    pub fn is_empty(&self) -> bool {
        matches!(self, OperatingRegion::Empty)
    }

    pub fn contains(&self, x: T) -> bool {
        match *self {
            OperatingRegion::Empty => false,
            OperatingRegion::Between(lo, hi) => x > lo && x < hi,
            OperatingRegion::Outside(lo, hi) => x < lo || x > hi,
            OperatingRegion::Below(r) => x < r,
            OperatingRegion::Above(r) => x > r,
            OperatingRegion::AllExcept(r) => x != r,
            OperatingRegion::All => true,
        }
    }
}

/// `y(x) = a x^2 + b x + c`, negative exactly where the engine does work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QuadraticForm<T: Real> {
    pub theta: T,
    pub a: T,
    pub b: T,
    pub c: T,
    /// `b^2 - 4ac` as computed from the coefficients.
    pub discriminant: T,
    /// `[(1 - theta)(ê2 ĝ3 - ĝ2 ê3)]^2`, the cancellation-free equivalent.
    pub discriminant_closed_form: T,
    pub root_lo: Option<T>,
    pub root_hi: Option<T>,
    pub kind: FormKind,
    pub region: OperatingRegion<T>,
}

impl<T: Real> QuadraticForm<T> {
    pub fn eval(&self, x: T) -> T {
        (self.a * x + self.b) * x + self.c
    }

    pub fn is_operable_somewhere(&self) -> bool {
        !self.region.is_empty()
    }

    pub fn diagnosis(&self, reason: impl Into<String>) -> OperabilityDiagnosis {
        OperabilityDiagnosis {
            theta: self.theta.as_f64(),
            a: self.a.as_f64(),
            b: self.b.as_f64(),
            c: self.c.as_f64(),
            discriminant: self.discriminant.as_f64(),
            reason: reason.into(),
        }
    }

    fn empty_reason(&self) -> &'static str {
        if self.theta == T::one() {
            "equal bath temperatures"
        } else if self.discriminant_closed_form == T::zero() {
            "level gaps and coupling gaps are proportional"
        } else {
            "no position with y(x) < 0"
        }
    }
}

/// Coefficients, roots and operating region of the operability quadratic.
pub fn operability_form<T: Real>(spec: &EngineSpec<T>, baths: &BathSet<T>) -> QuadraticForm<T> {
    let theta = baths.theta();
    let tm1 = theta - T::one();
    let two = T::lit(2.0);
    let (e2, e3) = spec.gaps_at(T::zero());
    let (g2, g3) = spec.coupling_gaps();

    let a = tm1 * g2 * g3 + g2 * g2;
    let b = tm1 * (e2 * g3 + g2 * e3) + two * g2 * e2;
    let c = tm1 * e3 * e2 + e2 * e2;
    let discriminant = compensated_discriminant(tm1, e2, e3, g2, g3);
    let cross = (T::one() - theta) * diff_of_products(e2, g3, g2, e3);
    let closed = cross * cross;

    let (kind, root_lo, root_hi, region) = if a != T::zero() {
        // Rounding in `cross` can leave a tiny positive value where the exact
        // discriminant vanishes; treat it as a double root.
        let tiny = T::lit(16.0) * T::epsilon() * b * b;
        if closed <= tiny {
            let r = -b / (two * a);
            let region = if a > T::zero() {
                OperatingRegion::Empty
            } else {
                OperatingRegion::AllExcept(r)
            };
            (FormKind::Generic, Some(r), Some(r), region)
        } else {
            let sq = cross.abs();
            let q = -(b + b.signum() * sq) / two;
            let (r1, r2) = if q == T::zero() {
                // b = 0: symmetric roots.
                let h = sq / (two * a.abs());
                (-h, h)
            } else {
                (q / a, c / q)
            };
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let region = if a > T::zero() {
                OperatingRegion::Between(lo, hi)
            } else {
                OperatingRegion::Outside(lo, hi)
            };
            (FormKind::Generic, Some(lo), Some(hi), region)
        }
    } else if b != T::zero() {
        let r = -c / b;
        let region = if b > T::zero() {
            OperatingRegion::Below(r)
        } else {
            OperatingRegion::Above(r)
        };
        (FormKind::Linear, Some(r), None, region)
    } else {
        let region = if c < T::zero() {
            OperatingRegion::All
        } else {
            OperatingRegion::Empty
        };
        (FormKind::Constant, None, None, region)
    };

    QuadraticForm {
        theta,
        a,
        b,
        c,
        discriminant,
        discriminant_closed_form: closed,
        root_lo,
        root_hi,
        kind,
        region,
    }
}

/// `b^2 - 4ac` from the gaps, in extended precision: near `theta = 1` the two
/// terms agree to many digits.
fn compensated_discriminant<T: Real>(tm1: T, e2: T, e3: T, g2: T, g3: T) -> T {
    let [tm1, e2, e3, g2, g3] = [tm1, e2, e3, g2, g3].map(Compensated::new);
    let two = Compensated::new(T::lit(2.0));
    let a = tm1.mul(g2).mul(g3).add(g2.mul(g2));
    let b = tm1.mul(e2.mul(g3).add(g2.mul(e3))).add(two.mul(g2).mul(e2));
    let c = tm1.mul(e3).mul(e2).add(e2.mul(e2));
    let four_ac = Compensated::new(T::lit(4.0)).mul(a).mul(c);
    b.mul(b).add(four_ac.neg()).value()
}

/// Position where the work-source pair is degenerate, `ê2(x) = 0`.
pub fn degeneracy_position<T: Real>(spec: &EngineSpec<T>) -> Option<T> {
    let (e2, _) = spec.gaps_at(T::zero());
    let (g2, _) = spec.coupling_gaps();
    (g2 != T::zero()).then(|| -e2 / g2)
}

/// Position where `ê2(x) = (1 - theta) ê3(x)`: the power vanishes and the
/// efficiency reaches the Carnot value.
pub fn carnot_position<T: Real>(spec: &EngineSpec<T>, baths: &BathSet<T>) -> Option<T> {
    let k = T::one() - baths.theta();
    let (e2, e3) = spec.gaps_at(T::zero());
    let (g2, g3) = spec.coupling_gaps();
    let slope = g2 - k * g3;
    (slope != T::zero()).then(|| -(e2 - k * e3) / slope)
}

/// One point of the conditional power landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LandscapeSample<T: Real> {
    pub x: T,
    pub j12: T,
    pub j13: T,
    pub j23: T,
    pub eta: Option<T>,
    pub operable: bool,
    /// Controller stationary density at `x` (1/nm).
    pub p_c: T,
}

/// Uniform grid of conditional currents over `[x_min, x_max]`.
pub fn landscape<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    ctrl: &ControllerSpec<T>,
    x_range: (T, T),
    n_points: usize,
) -> Result<Vec<LandscapeSample<T>>> {
    let (x_min, x_max) = x_range;
    if n_points < 2 || !x_min.is_finite() || !x_max.is_finite() || !(x_max > x_min) {
        return Err(Error::InvalidInput(format!(
            "landscape needs n_points >= 2 and a finite range with x_max > x_min (got {n_points}, [{x_min}, {x_max}])"
        )));
    }
    ctrl.validate()?;
    let density = ctrl.stationary_density();
    let step = (x_max - x_min) / T::from_usize(n_points - 1).unwrap();
    (0..n_points)
        .into_par_iter()
        .map(|k| {
            let x = if k == n_points - 1 {
                x_max
            } else {
                x_min + step * T::from_usize(k).unwrap()
            };
            let rep = steady_currents(spec, baths, x)?;
            Ok(LandscapeSample {
                x,
                j12: rep.j12,
                j13: rep.j13,
                j23: rep.j23,
                eta: rep.eta,
                operable: rep.operable,
                p_c: density.pdf(x),
            })
        })
        .collect()
}

/// Settings for the constrained power maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions<T> {
    /// Final bracket width in nm.
    pub xtol: T,
    /// Coarse scan resolution per operating interval.
    pub scan_points: usize,
    /// Half-lines are explored outward from their root up to this distance (nm).
    pub max_extent: T,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            xtol: T::lit(1e-6),
            scan_points: 256,
            max_extent: T::lit(1e9),
        }
    }
}

/// Constrained maximizer of the extracted power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Optimum<T: Real> {
    pub x: T,
    /// `J12` at `x`; negative.
    pub j12: T,
}

/// `argmax |J12(x)|` over the operating region `{y(x) < 0}`.
pub fn optimal_position<T: Real>(spec: &EngineSpec<T>, baths: &BathSet<T>) -> Result<Optimum<T>> {
    optimal_position_with(spec, baths, &SearchOptions::default())
}

pub fn optimal_position_with<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    opts: &SearchOptions<T>,
) -> Result<Optimum<T>> {
    let form = operability_form(spec, baths);
    optimize_in_region(spec, baths, &form, opts)
}

pub(crate) fn optimize_in_region<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    form: &QuadraticForm<T>,
    opts: &SearchOptions<T>,
) -> Result<Optimum<T>> {
    // Extracted power, zero outside the operating region.
    let gain = |x: T| -> Result<T> {
        let rep = steady_currents(spec, baths, x)?;
        Ok((-rep.j12).max(T::zero()))
    };

    let mut intervals: Vec<(T, T)> = Vec::new();
    match form.region {
        OperatingRegion::Empty => {
            return Err(Error::NotOperable(form.diagnosis(form.empty_reason())));
        }
        OperatingRegion::Between(lo, hi) => intervals.push((lo, hi)),
        OperatingRegion::Outside(lo, hi) => {
            intervals.push((expand(&gain, lo, -T::one(), opts)?, lo));
            intervals.push((hi, expand(&gain, hi, T::one(), opts)?));
        }
        OperatingRegion::Below(r) => intervals.push((expand(&gain, r, -T::one(), opts)?, r)),
        OperatingRegion::Above(r) => intervals.push((r, expand(&gain, r, T::one(), opts)?)),
        OperatingRegion::AllExcept(r) => {
            intervals.push((expand(&gain, r, -T::one(), opts)?, r));
            intervals.push((r, expand(&gain, r, T::one(), opts)?));
        }
        OperatingRegion::All => {
            let lo = expand(&gain, T::zero(), -T::one(), opts)?;
            let hi = expand(&gain, T::zero(), T::one(), opts)?;
            intervals.push((lo, hi));
        }
    }

    let mut best: Option<(T, T)> = None;
    for (lo, hi) in intervals {
        let mut failure = None;
        let (x, g) = scan_then_golden(
            |x| match gain(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            },
            lo,
            hi,
            opts.scan_points,
            opts.xtol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((x, g));
        }
    }
    let (x, _) = best.expect("at least one interval");
    let j12 = steady_currents(spec, baths, x)?.j12;
    if !(j12 < T::zero()) {
        return Err(Error::NotOperable(form.diagnosis(
            "operating region too narrow to resolve a working position",
        )));
    }
    Ok(Optimum { x, j12 })
}

/// Walks from `start` in `direction` with doubling steps until the gain stops
/// increasing; returns the far end of the bracket.
fn expand<T: Real>(
    gain: &impl Fn(T) -> Result<T>,
    start: T,
    direction: T,
    opts: &SearchOptions<T>,
) -> Result<T> {
    let mut step = T::one().max(start.abs() * T::lit(1e-3));
    let mut prev = gain(start)?;
    let mut x = start + direction * step;
    loop {
        let g = gain(x)?;
        if g < prev {
            return Ok(x);
        }
        if (x - start).abs() > opts.max_extent {
            return Err(Error::UnboundedOptimum { last_x: x.as_f64() });
        }
        prev = g;
        step *= T::lit(2.0);
        x = start + direction * step;
    }
}
