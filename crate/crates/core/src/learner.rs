//! Feedback loop that keeps the controller at the maximum-power position as
//! bath temperatures drift.
//!
//! Each step reads both thermometers, rebuilds the operability quadratic for
//! the measured temperatures and, when the engine can operate, moves the
//! controller's density peak onto the constrained power maximizer by
//! setting `E = -kappa x~`. Controller relaxation after a force change is
//! taken to be instantaneous; only stationary states are compared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{
    operability_form, optimize_in_region, ControllerSpec, FormKind, QuadraticForm, SearchOptions,
};
use crate::engine::{steady_currents, BathSet, EngineSpec, WorkSource};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Measured temperatures never drop below this (K).
pub const MIN_MEASURED_TEMPERATURE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SchedulePoint<T: Real> {
    pub time: T,
    pub t13: T,
    pub t23: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TemperatureSchedule<T: Real> {
    pub points: Vec<SchedulePoint<T>>,
    /// Thermometer noise standard deviation (K).
    pub noise_sigma: T,
    pub seed: u64,
}

impl<T: Real> TemperatureSchedule<T> {
    pub fn new(points: Vec<SchedulePoint<T>>, noise_sigma: T, seed: u64) -> Result<Self> {
        let s = Self {
            points,
            noise_sigma,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= T::zero()) {
            return Err(Error::InvalidInput("noise sigma must be >= 0".into()));
        }
        for (k, p) in self.points.iter().enumerate() {
            if !(p.t13 > T::zero() && p.t23 > T::zero()) || !p.t13.is_finite() || !p.t23.is_finite()
            {
                return Err(Error::InvalidInput(format!(
                    "schedule point {k}: temperatures must be positive"
                )));
            }
            if k > 0 && !(p.time > self.points[k - 1].time) {
                return Err(Error::InvalidInput(format!(
                    "schedule point {k}: time tags must be strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

/// Two thermometers with independent Gaussian read-out noise.
#[derive(Debug, Clone)]
pub struct Thermometers {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl Thermometers {
    pub fn new(sigma: f64, seed: u64) -> Self {
        Self {
            sigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Reads `(T13, T23)`; exact when `sigma = 0`, clamped to stay positive.
    pub fn read<T: Real>(&mut self, t13: T, t23: T) -> (T, T) {
        if self.sigma == 0.0 {
            return (t13, t23);
        }
        let normal = Normal::new(0.0, self.sigma).expect("finite sigma");
        let a = t13.as_f64() + normal.sample(&mut self.rng);
        let b = t23.as_f64() + normal.sample(&mut self.rng);
        let clamp = |v: f64| T::lit(v.max(MIN_MEASURED_TEMPERATURE));
        (clamp(a), clamp(b))
    }
}

/// One-shot measurement with a fresh seeded noise source.
pub fn measure<T: Real>(t13: T, t23: T, sigma: f64, seed: u64) -> (T, T) {
    Thermometers::new(sigma, seed).read(t13, t23)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptStatus {
    AlreadyOptimal,
    Retuned,
    NotOperable,
}

/// Compact view of the operability quadratic for logging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FormSummary<T: Real> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub discriminant: T,
    pub kind: FormKind,
    pub root_lo: Option<T>,
    pub root_hi: Option<T>,
    pub operable_somewhere: bool,
}

impl<T: Real> From<&QuadraticForm<T>> for FormSummary<T> {
    fn from(f: &QuadraticForm<T>) -> Self {
        Self {
            a: f.a,
            b: f.b,
            c: f.c,
            discriminant: f.discriminant,
            kind: f.kind,
            root_lo: f.root_lo,
            root_hi: f.root_hi,
            operable_somewhere: f.is_operable_somewhere(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdaptationRecord<T: Real> {
    pub step: usize,
    pub time: Option<T>,
    pub truth_t13: Option<T>,
    pub truth_t23: Option<T>,
    pub measured_t13: T,
    pub measured_t23: T,
    pub theta: T,
    /// Whether this step recomputed the optimum (as opposed to holding).
    pub retriggered: bool,
    pub x_star_before: T,
    pub x_star_after: T,
    pub form: FormSummary<T>,
    pub status: AdaptStatus,
    pub x_tilde: Option<T>,
    pub force_before: T,
    pub force_after: T,
    /// `J12` at the pre-step peak position, measured temperatures.
    pub power_before: T,
    /// `J12` at the post-step peak position; absent when not operable.
    pub power_after: Option<T>,
    pub eta_after: Option<T>,
    /// `J12` at the post-step peak under the true temperatures, when known.
    pub power_after_truth: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerOptions<T> {
    /// Peaks closer than this to the optimum (nm) are left alone.
    pub pos_tol: T,
    /// Change in theta that triggers a new optimization.
    pub retrigger_tol: T,
    pub search: SearchOptions<T>,
}

impl<T: Real> Default for LearnerOptions<T> {
    fn default() -> Self {
        Self {
            pos_tol: T::lit(1e-6),
            retrigger_tol: T::lit(1e-3),
            search: SearchOptions::default(),
        }
    }
}

/// The feedback agent. Holds the controller whose force it adjusts.
#[derive(Debug, Clone)]
pub struct Learner<T: Real> {
    pub engine: EngineSpec<T>,
    pub controller: ControllerSpec<T>,
    pub work_source: WorkSource<T>,
    pub options: LearnerOptions<T>,
    last_theta: Option<T>,
    last_status: Option<AdaptStatus>,
    last_x_tilde: Option<T>,
    steps: usize,
}

impl<T: Real> Learner<T> {
    pub fn new(
        engine: EngineSpec<T>,
        controller: ControllerSpec<T>,
        work_source: WorkSource<T>,
        options: LearnerOptions<T>,
    ) -> Result<Self> {
        engine.validate()?;
        controller.validate()?;
        Ok(Self {
            engine,
            controller,
            work_source,
            options,
            last_theta: None,
            last_status: None,
            last_x_tilde: None,
            steps: 0,
        })
    }

    pub fn force(&self) -> T {
        self.controller.force
    }

    /// One pass of measure-diagnose-actuate on already measured temperatures.
    /// Always re-optimizes, regardless of the retrigger policy.
    pub fn adapt_step(&mut self, measured: (T, T)) -> Result<AdaptationRecord<T>> {
        self.step_inner(measured, None, None, true)
    }

    fn step_inner(
        &mut self,
        measured: (T, T),
        truth: Option<(T, T)>,
        time: Option<T>,
        force_retrigger: bool,
    ) -> Result<AdaptationRecord<T>> {
        let baths = BathSet::new(measured.0, measured.1, self.work_source)?;
        let theta = baths.theta();
        let form = operability_form(&self.engine, &baths);
        let x_before = self.controller.most_probable_position();
        let force_before = self.controller.force;
        let power_before = steady_currents(&self.engine, &baths, x_before)?.j12;

        let retriggered = force_retrigger
            || self
                .last_status
                .is_none_or(|s| s == AdaptStatus::NotOperable)
            || self
                .last_theta
                .is_none_or(|prev| (theta - prev).abs() > self.options.retrigger_tol);

        let mut record = AdaptationRecord {
            step: self.steps,
            time,
            truth_t13: truth.map(|t| t.0),
            truth_t23: truth.map(|t| t.1),
            measured_t13: measured.0,
            measured_t23: measured.1,
            theta,
            retriggered,
            x_star_before: x_before,
            x_star_after: x_before,
            form: FormSummary::from(&form),
            status: AdaptStatus::AlreadyOptimal,
            x_tilde: self.last_x_tilde,
            force_before,
            force_after: force_before,
            power_before,
            power_after: None,
            eta_after: None,
            power_after_truth: None,
        };
        self.steps += 1;

        if form.region.is_empty() {
            record.status = AdaptStatus::NotOperable;
            record.x_tilde = None;
            self.last_status = Some(AdaptStatus::NotOperable);
            self.last_theta = Some(theta);
            self.last_x_tilde = None;
            return Ok(record);
        }

        if retriggered {
            let optimum =
                match optimize_in_region(&self.engine, &baths, &form, &self.options.search) {
                    Ok(o) => o,
                    Err(Error::NotOperable(_)) => {
                        record.status = AdaptStatus::NotOperable;
                        record.x_tilde = None;
                        self.last_status = Some(AdaptStatus::NotOperable);
                        self.last_theta = Some(theta);
                        self.last_x_tilde = None;
                        return Ok(record);
                    }
                    Err(e) => return Err(e),
                };
            record.x_tilde = Some(optimum.x);
            self.last_x_tilde = Some(optimum.x);
            if (x_before - optimum.x).abs() > self.options.pos_tol {
                self.controller.force = self.controller.force_for_peak(optimum.x);
                record.status = AdaptStatus::Retuned;
            }
            self.last_theta = Some(theta);
        }

        let x_after = self.controller.most_probable_position();
        let after = steady_currents(&self.engine, &baths, x_after)?;
        record.x_star_after = x_after;
        record.force_after = self.controller.force;
        record.power_after = Some(after.j12);
        record.eta_after = after.eta;
        if let Some((t13, t23)) = truth {
            let truth_baths = BathSet::new(t13, t23, self.work_source)?;
            record.power_after_truth =
                Some(steady_currents(&self.engine, &truth_baths, x_after)?.j12);
        }
        self.last_status = Some(record.status);
        Ok(record)
    }

    /// Runs the loop over every schedule point, reading thermometers seeded
    /// from the schedule.
    pub fn run_schedule(
        &mut self,
        schedule: &TemperatureSchedule<T>,
    ) -> Result<Vec<AdaptationRecord<T>>> {
        schedule.validate()?;
        let mut thermometers = Thermometers::new(schedule.noise_sigma.as_f64(), schedule.seed);
        schedule
            .points
            .iter()
            .map(|p| {
                let measured = thermometers.read(p.t13, p.t23);
                self.step_inner(measured, Some((p.t13, p.t23)), Some(p.time), false)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::NEWTON_PER_NM_IN_EV_PER_NM2;

    fn learner() -> Learner<f64> {
        Learner::new(
            EngineSpec::new([-5.2, -3.4, -1.2], [1.77e-3, 2.16e-3, 1.87e-3], 1e-3).unwrap(),
            ControllerSpec {
                mass: 1.44e6,
                kappa: 1e-12 * NEWTON_PER_NM_IN_EV_PER_NM2,
                xi: 0.0,
                temperature: 280.0,
                force: 0.0,
            },
            WorkSource::Spontaneous,
            LearnerOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        assert_eq!(measure(330.0, 280.0, 0.0, 7), (330.0, 280.0));
    }

    #[test]
    fn noisy_measurement_is_reproducible() {
        let a = measure(330.0f64, 280.0, 1.0, 42);
        let b = measure(330.0f64, 280.0, 1.0, 42);
        assert_eq!(a, b);
        assert!((a.0 - 330.0).abs() < 5.0 && (a.1 - 280.0).abs() < 5.0);
        assert_ne!(a, (330.0, 280.0));
    }

    #[test]
    fn measurement_is_clamped_positive() {
        for seed in 0..50 {
            let (a, b) = measure(0.01, 0.01, 100.0, seed);
            assert!(a > 0.0 && b > 0.0);
        }
    }

    #[test]
    fn equal_temperatures_freeze_force() {
        let mut l = learner();
        let r = l.adapt_step((300.0, 300.0)).unwrap();
        assert_eq!(r.status, AdaptStatus::NotOperable);
        assert_eq!(r.force_after, r.force_before);
        assert!(r.power_after.is_none());
        assert_eq!(l.force(), 0.0);
    }

    #[test]
    fn retune_then_idempotent() {
        let mut l = learner();
        let r1 = l.adapt_step((330.0, 280.0)).unwrap();
        assert_eq!(r1.status, AdaptStatus::Retuned);
        let xt = r1.x_tilde.unwrap();
        assert!((r1.x_star_after - xt).abs() < 1e-9);
        assert!((l.force() + l.controller.kappa * xt).abs() < 1e-15);
        assert!(r1.power_after.unwrap() <= r1.power_before);
        let r2 = l.adapt_step((330.0, 280.0)).unwrap();
        assert_eq!(r2.status, AdaptStatus::AlreadyOptimal);
        assert_eq!(r2.force_after, r1.force_after);
    }

    #[test]
    fn schedule_validation() {
        let p = |time, t13, t23| SchedulePoint { time, t13, t23 };
        assert!(
            TemperatureSchedule::new(vec![p(0.0, 300.0, 200.0), p(0.0, 300.0, 200.0)], 0.0, 1)
                .is_err()
        );
        assert!(TemperatureSchedule::new(vec![p(0.0, -1.0, 200.0)], 0.0, 1).is_err());
        assert!(TemperatureSchedule::new(vec![p(0.0, 300.0, 200.0)], -1.0, 1).is_err());
    }

    #[test]
    fn records_round_trip_through_json() {
        let mut l = learner();
        let r = l.adapt_step((331.7, 279.3)).unwrap();
        let line = serde_json::to_string(&r).unwrap();
        let back: AdaptationRecord<f64> = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
    }
}
