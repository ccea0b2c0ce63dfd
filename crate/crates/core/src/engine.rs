//! Closed-form steady-state physics of the three-level engine.
//!
//! Levels are indexed 0, 1, 2 (physics labels 1, 2, 3). The pair (0, 1) is the
//! work source, (0, 2) the bath at `t13` and (1, 2) the bath at `t23`.
//! With a controller at position `x` every level is shifted to
//! `e_i(x) = e_i + g_i x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{close, Real};
use crate::units::BOLTZMANN_EV_PER_K;

/// Pair gaps below this (eV) are treated as exact degeneracies with zero rates.
pub const DEGENERATE_GAP_EV: f64 = 1e-9;

/// Bare level structure of the engine and its coupling to the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EngineSpec<T: Real> {
    /// Bare energies `e_1, e_2, e_3` in eV. Any ordering is allowed.
    pub levels: [T; 3],
    /// Controller couplings `g_1, g_2, g_3` in eV/nm.
    pub couplings: [T; 3],
    /// Rate prefactor: `gamma0 |omega|^3` is a rate in eV.
    pub gamma0: T,
}

impl<T: Real> EngineSpec<T> {
    pub fn new(levels: [T; 3], couplings: [T; 3], gamma0: T) -> Result<Self> {
        let spec = Self {
            levels,
            couplings,
            gamma0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > T::zero()) || !self.gamma0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gamma0 must be positive and finite, got {}",
                self.gamma0
            )));
        }
        if self
            .levels
            .iter()
            .chain(self.couplings.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "levels and couplings must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Energies `e_i(x)` at controller position `x` (nm).
    pub fn levels_at(&self, x: T) -> [T; 3] {
        [0, 1, 2].map(|i| self.levels[i] + self.couplings[i] * x)
    }

    /// `(ê_2(x), ê_3(x))`, gaps measured from level 1.
    pub fn gaps_at(&self, x: T) -> (T, T) {
        let e = self.levels_at(x);
        (e[1] - e[0], e[2] - e[0])
    }

    /// `(ĝ_2, ĝ_3)`.
    pub fn coupling_gaps(&self) -> (T, T) {
        let g = &self.couplings;
        (g[1] - g[0], g[2] - g[0])
    }

    /// Same engine with every coupling multiplied by `scale`.
    pub fn with_coupling_scale(&self, scale: T) -> Self {
        Self {
            couplings: self.couplings.map(|g| g * scale),
            ..*self
        }
    }
}

/// How the work-source pair (levels 1 and 2) is driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum WorkSource<T: Real> {
    /// Infinite-temperature limit with rate `gamma0 |omega_12(x)|^3` both ways.
    Spontaneous,
    /// Infinite-temperature limit with a fixed symmetric rate (eV).
    Fixed(T),
    /// A finite-temperature bath (K) instead of a work source. Used to check
    /// thermal fixed points; the engine formulas that assume an infinite
    /// work-source temperature do not apply.
    Thermal(T),
}

/// Temperatures of the two heat baths and the work-source model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BathSet<T: Real> {
    /// Temperature (K) of the bath coupling levels 1 and 3.
    pub t13: T,
    /// Temperature (K) of the bath coupling levels 2 and 3.
    pub t23: T,
    pub work_source: WorkSource<T>,
}

impl<T: Real> BathSet<T> {
    pub fn new(t13: T, t23: T, work_source: WorkSource<T>) -> Result<Self> {
        let baths = Self {
            t13,
            t23,
            work_source,
        };
        baths.validate()?;
        Ok(baths)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |t: T| t > T::zero() && t.is_finite();
        if !positive(self.t13) || !positive(self.t23) {
            return Err(Error::InvalidInput(format!(
                "bath temperatures must be positive and finite, got t13 = {}, t23 = {}",
                self.t13, self.t23
            )));
        }
        match self.work_source {
            WorkSource::Fixed(g) if !(g >= T::zero()) || !g.is_finite() => Err(
                Error::InvalidInput(format!("gamma12 must be >= 0, got {g}")),
            ),
            WorkSource::Thermal(t) if !positive(t) => Err(Error::InvalidInput(format!(
                "work-source temperature must be positive, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    /// `theta = T23 / T13`.
    pub fn theta(&self) -> T {
        self.t23 / self.t13
    }

    /// `1 - min(theta, 1/theta)`.
    pub fn carnot_efficiency(&self) -> T {
        carnot_efficiency(self.theta())
    }

    pub fn beta13(&self) -> T {
        beta(self.t13)
    }

    pub fn beta23(&self) -> T {
        beta(self.t23)
    }
}

pub fn carnot_efficiency<T: Real>(theta: T) -> T {
    T::one() - theta.min(theta.recip())
}

/// Inverse temperature in 1/eV.
pub fn beta<T: Real>(temperature: T) -> T {
    (T::lit(BOLTZMANN_EV_PER_K) * temperature).recip()
}

/// Directed transition rates, `rate(i, j)` being `gamma_{i <- j}` in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RateTable<T: Real> {
    rates: [[T; 3]; 3],
}

impl<T: Real> RateTable<T> {
    /// Builds a table from a full matrix `m[i][j] = gamma_{i <- j}`; the
    /// diagonal is ignored.
    pub fn from_matrix(mut rates: [[T; 3]; 3]) -> Result<Self> {
        for (i, row) in rates.iter_mut().enumerate() {
            row[i] = T::zero();
            if row.iter().any(|r| !(*r >= T::zero()) || !r.is_finite()) {
                return Err(Error::InvalidInput(
                    "rates must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self { rates })
    }

    /// `gamma_{to <- from}`.
    #[inline]
    pub fn rate(&self, to: usize, from: usize) -> T {
        self.rates[to][from]
    }

    pub fn as_matrix(&self) -> &[[T; 3]; 3] {
        &self.rates
    }

    /// Sum of all six directed rates.
    pub fn total(&self) -> T {
        self.rates.iter().flatten().copied().sum()
    }
}

/// Thermal (down, up) rates for a single pair with gap `|omega|` at inverse
/// temperature `beta`.
fn thermal_pair<T: Real>(gamma0: T, gap: T, beta: T) -> (T, T) {
    let w = gap.abs();
    if w < T::lit(DEGENERATE_GAP_EV) {
        return (T::zero(), T::zero());
    }
    let prefactor = gamma0 * w * w * w;
    let bw = beta * w;
    // e^{bw}/(e^{bw}-1) = 1/(1-e^{-bw});  1/(e^{bw}-1)
    let down = prefactor / -(-bw).exp_m1();
    let up = prefactor / bw.exp_m1();
    (down, up)
}

/// Directed rates at controller position `x`.
///
/// For each thermal pair the energy-decreasing direction carries the
/// stimulated-plus-spontaneous factor regardless of index order, so
/// `gamma_{i <- j} / gamma_{j <- i} = exp(beta (e_j(x) - e_i(x)))` holds at
/// every `x`, including after level crossings.
pub fn transition_rates<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    x: T,
) -> Result<RateTable<T>> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "position must be finite, got {x}"
        )));
    }
    baths.validate()?;
    let e = spec.levels_at(x);
    let mut rates = [[T::zero(); 3]; 3];

    let mut set_thermal = |lo: usize, hi: usize, beta: T| {
        let gap = e[hi] - e[lo];
        let (down, up) = thermal_pair(spec.gamma0, gap, beta);
        if gap > T::zero() {
            rates[lo][hi] = down;
            rates[hi][lo] = up;
        } else {
            rates[lo][hi] = up;
            rates[hi][lo] = down;
        }
    };
    set_thermal(0, 2, baths.beta13());
    set_thermal(1, 2, baths.beta23());
    match baths.work_source {
        WorkSource::Thermal(t12) => set_thermal(0, 1, beta(t12)),
        WorkSource::Fixed(g) => {
            rates[0][1] = g;
            rates[1][0] = g;
        }
        WorkSource::Spontaneous => {
            let w = (e[1] - e[0]).abs();
            let g = if w < T::lit(DEGENERATE_GAP_EV) {
                T::zero()
            } else {
                spec.gamma0 * w * w * w
            };
            rates[0][1] = g;
            rates[1][0] = g;
        }
    }
    RateTable::from_matrix(rates)
}

/// Spanning-tree weights `w_i = Z p_i` of the three-state rate network.
fn tree_weights<T: Real>(r: &RateTable<T>) -> [T; 3] {
    let g = |i, j| r.rate(i, j);
    [0usize, 1, 2].map(|i| {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g(i, j) * g(i, k) + g(i, j) * g(j, k) + g(i, k) * g(k, j)
    })
}

/// Stationary populations of the rate network.
pub fn stationary_populations<T: Real>(rates: &RateTable<T>) -> Result<[T; 3]> {
    let w = tree_weights(rates);
    let z = w[0] + w[1] + w[2];
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::DegenerateStationaryState { z: z.as_f64() });
    }
    Ok(w.map(|wi| wi / z))
}

/// Steady-state summary of the engine at one controller position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SteadyReport<T: Real> {
    pub x: T,
    pub populations: [T; 3],
    pub j12: T,
    pub j13: T,
    pub j23: T,
    /// Same as `j12`; negative when the engine delivers work.
    pub power: T,
    pub eta: Option<T>,
    pub operable: bool,
}

/// Currents computed directly from `[gamma_{i<-j} p_j - gamma_{j<-i} p_i](e_i - e_j)`.
pub fn currents_from_populations<T: Real>(
    rates: &RateTable<T>,
    levels: &[T; 3],
    p: &[T; 3],
) -> (T, T, T) {
    let flux = |i: usize, j: usize| {
        (rates.rate(i, j) * p[j] - rates.rate(j, i) * p[i]) * (levels[i] - levels[j])
    };
    (flux(0, 1), flux(0, 2), flux(1, 2))
}

/// Cycle-current factor `j` with `J12 = ê2 j`, `J13 = -ê3 j`,
/// `J23 = (ê3 - ê2) j`, in the factored exponential form.
fn cycle_factor<T: Real>(rates: &RateTable<T>, baths: &BathSet<T>, gaps: (T, T), z: T) -> T {
    let (e2, e3) = gaps;
    let g = |i, j| rates.rate(i, j);
    // Counter-clockwise cycle 1 -> 2 -> 3 -> 1 and its reverse.
    let forward = g(1, 0) * g(2, 1) * g(0, 2);
    let mut exponent = (baths.beta23() - baths.beta13()) * e3 - baths.beta23() * e2;
    if let WorkSource::Thermal(t12) = baths.work_source {
        exponent += beta(t12) * e2;
    }
    if exponent.abs() < T::one() {
        forward / z * -exponent.exp_m1()
    } else {
        // Far from the zero of the bracket the product form can under- or
        // overflow; the two cycle weights are well separated here.
        let reverse = g(0, 1) * g(1, 2) * g(2, 0);
        (forward - reverse) / z
    }
}

/// Steady populations, currents, power and efficiency at position `x`.
///
/// The currents are evaluated twice, once through the factored cycle form and
/// once from the population-flux definition; a disagreement beyond
/// floating-point noise is reported as [`Error::CurrentMismatch`].
pub fn steady_currents<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    x: T,
) -> Result<SteadyReport<T>> {
    let rates = transition_rates(spec, baths, x)?;
    let w = tree_weights(&rates);
    let z = w[0] + w[1] + w[2];
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::DegenerateStationaryState { z: z.as_f64() });
    }
    let p = w.map(|wi| wi / z);
    let levels = spec.levels_at(x);
    let (e2, e3) = spec.gaps_at(x);

    let jj = cycle_factor(&rates, baths, (e2, e3), z);
    let j12 = e2 * jj;
    let j13 = -e3 * jj;
    let j23 = (e3 - e2) * jj;

    let (d12, d13, d23) = currents_from_populations(&rates, &levels, &p);
    let max_rate = rates
        .as_matrix()
        .iter()
        .flatten()
        .fold(T::zero(), |m, &r| m.max(r));
    let max_gap = e2.abs().max(e3.abs()).max((e3 - e2).abs());
    let floor = T::lit(64.0) * T::epsilon() * max_rate * max_gap;
    let rel = T::epsilon().sqrt();
    for (pair, f, d) in [("12", j12, d12), ("13", j13, d13), ("23", j23, d23)] {
        if !close(f, d, rel, floor) {
            return Err(Error::CurrentMismatch {
                pair,
                factored: f.as_f64(),
                definition: d.as_f64(),
            });
        }
    }

    let operable = j12 < T::zero();
    let mut report = SteadyReport {
        x,
        populations: p,
        j12,
        j13,
        j23,
        power: j12,
        eta: None,
        operable,
    };
    report.eta = efficiency(&report);
    Ok(report)
}

/// `-J12 / max(J23, J13)` when the engine delivers work, `None` otherwise.
pub fn efficiency<T: Real>(report: &SteadyReport<T>) -> Option<T> {
    if !(report.j12 < T::zero()) {
        return None;
    }
    let heat_in = report.j23.max(report.j13);
    if !(heat_in > T::zero()) {
        return None;
    }
    Some(-report.j12 / heat_in)
}

/// Value of `-ê2(x)[(1 - theta) ê3(x) - ê2(x)]`; the engine does work iff
/// this is negative.
pub fn adaptability_margin<T: Real>(spec: &EngineSpec<T>, baths: &BathSet<T>, x: T) -> T {
    let (e2, e3) = spec.gaps_at(x);
    -e2 * ((T::one() - baths.theta()) * e3 - e2)
}

/// Whether the engine delivers work at `x` with the current bath temperatures.
pub fn adaptability<T: Real>(spec: &EngineSpec<T>, baths: &BathSet<T>, x: T) -> Result<bool> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!(
            "position must be finite, got {x}"
        )));
    }
    spec.validate()?;
    baths.validate()?;
    Ok(adaptability_margin(spec, baths, x) < T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> EngineSpec<f64> {
        EngineSpec::new([-5.2, -3.4, -1.2], [1.77e-3, 2.16e-3, 1.87e-3], 1e-3).unwrap()
    }

    fn baths() -> BathSet<f64> {
        BathSet::new(330.0, 280.0, WorkSource::Spontaneous).unwrap()
    }

    #[test]
    fn degenerate_pair_has_zero_rates() {
        // e2 = e3 at x = 0.
        let s = EngineSpec::new([0.0, 1.0, 1.0], [0.0; 3], 1.0).unwrap();
        let r = transition_rates(&s, &baths(), 0.0).unwrap();
        assert_eq!(r.rate(1, 2), 0.0);
        assert_eq!(r.rate(2, 1), 0.0);
    }

    #[test]
    fn unit_exponent_rates() {
        // |omega| = 1 eV and beta |omega| = 1.
        let t = 1.0 / BOLTZMANN_EV_PER_K;
        let s = EngineSpec::new([0.0, 0.5, 1.0], [0.0; 3], 1.0).unwrap();
        let b = BathSet::new(t, 330.0, WorkSource::Spontaneous).unwrap();
        let r = transition_rates(&s, &b, 0.0).unwrap();
        let e = std::f64::consts::E;
        assert!((r.rate(0, 2) - e / (e - 1.0)).abs() < 1e-12);
        assert!((r.rate(2, 0) - 1.0 / (e - 1.0)).abs() < 1e-12);
        assert!((r.rate(0, 2) - 1.581_976_706_869_326).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_limit() {
        let s = EngineSpec::new([0.0f64, 0.5, 2.0], [0.0; 3], 0.7).unwrap();
        let b = BathSet::new(1e-6, 1e-6, WorkSource::Spontaneous).unwrap();
        let r = transition_rates(&s, &b, 0.0).unwrap();
        assert_eq!(r.rate(2, 0), 0.0);
        assert!((r.rate(0, 2) - 0.7 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn level_crossing_keeps_detailed_balance() {
        // Level 3 drops below level 1 for x > 1.
        let s = EngineSpec::new([0.0f64, 0.3, 1.0], [0.0, 0.0, -2.0], 1.0).unwrap();
        let b = BathSet::new(3000.0, 2000.0, WorkSource::Spontaneous).unwrap();
        let x = 2.0;
        let r = transition_rates(&s, &b, x).unwrap();
        let e = s.levels_at(x);
        let ratio = r.rate(2, 0) / r.rate(0, 2);
        let expected = (b.beta13() * (e[0] - e[2])).exp();
        assert!((ratio / expected - 1.0).abs() < 1e-12);
        assert!(r.rate(2, 0) > r.rate(0, 2));
    }

    #[test]
    fn invalid_inputs() {
        assert!(transition_rates(&spec(), &baths(), f64::NAN).is_err());
        assert!(BathSet::new(0.0, 280.0, WorkSource::<f64>::Spontaneous).is_err());
        assert!(BathSet::new(300.0, 280.0, WorkSource::Fixed(-1.0)).is_err());
        assert!(EngineSpec::new([0.0; 3], [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn symmetric_rates_give_uniform_populations() {
        let r = RateTable::from_matrix([[1.0f64; 3]; 3]).unwrap();
        let p = stationary_populations(&r).unwrap();
        for pi in p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn disconnected_network_is_degenerate() {
        let r = RateTable::from_matrix([[0.0; 3]; 3]).unwrap();
        assert!(matches!(
            stationary_populations(&r),
            Err(Error::DegenerateStationaryState { .. })
        ));
        // Level 3 isolated.
        let r =
            RateTable::from_matrix([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert!(stationary_populations(&r).is_err());
    }

    #[test]
    fn equal_temperatures_absorb() {
        let b = BathSet::new(300.0, 300.0, WorkSource::Spontaneous).unwrap();
        let s = EngineSpec::new([0.0, 0.02, 0.05], [0.0; 3], 1.0).unwrap();
        let rep = steady_currents(&s, &b, 0.0).unwrap();
        assert!(rep.j12 > 0.0);
        assert!(!rep.operable);
        assert!(rep.eta.is_none());
        assert!(!adaptability(&s, &b, 0.0).unwrap());
    }

    #[test]
    fn degenerate_work_pair_gives_zero_power() {
        let s = EngineSpec::new([0.0, 0.0, 0.05], [0.0; 3], 1.0).unwrap();
        let b = BathSet::new(400.0, 300.0, WorkSource::Fixed(1e-3)).unwrap();
        let rep = steady_currents(&s, &b, 0.0).unwrap();
        assert_eq!(rep.j12, 0.0);
        assert!(rep.eta.is_none());
        assert!(!adaptability(&s, &b, 0.0).unwrap());
    }

    #[test]
    fn currents_conserve_energy() {
        let rep = steady_currents(&spec(), &baths(), -4000.0).unwrap();
        let sum = rep.j12 + rep.j13 + rep.j23;
        let scale = rep.j12.abs().max(rep.j13.abs()).max(rep.j23.abs());
        assert!(sum.abs() <= 1e-12 * scale);
        assert!(rep.operable);
        let eta = rep.eta.unwrap();
        assert!(eta <= baths().carnot_efficiency() + 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let s = EngineSpec::<f32>::new([0.0, 0.02, 0.05], [0.0; 3], 1.0).unwrap();
        let b = BathSet::<f32>::new(600.0, 300.0, WorkSource::Spontaneous).unwrap();
        let rep = steady_currents(&s, &b, 0.0).unwrap();
        assert!((rep.populations.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        assert_eq!(rep.operable, adaptability(&s, &b, 0.0).unwrap());
    }
}
