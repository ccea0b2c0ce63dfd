//! Lindblad time evolution of the engine at a fixed controller position.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::engine::{currents_from_populations, transition_rates, BathSet, EngineSpec, RateTable};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

type C<T> = Complex<T>;

fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

/// 3x3 engine density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DensityMatrix<T: Real>(pub [[C<T>; 3]; 3]);

impl<T: Real> DensityMatrix<T> {
    pub fn zeros() -> Self {
        Self([[czero(); 3]; 3])
    }

    pub fn from_populations(p: [T; 3]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = C::new(p[i], T::zero());
        }
        m
    }

    pub fn maximally_mixed() -> Self {
        Self::from_populations([T::one() / T::lit(3.0); 3])
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn pure(psi: [C<T>; 3]) -> Self {
        let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = psi[i] * psi[j].conj() / norm;
            }
        }
        m
    }

    pub fn trace(&self) -> C<T> {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn populations(&self) -> [T; 3] {
        [0, 1, 2].map(|i| self.0[i][i].re)
    }

    pub fn hermiticity_error(&self) -> T {
        self.to_cmatrix().hermiticity_error()
    }

    pub fn to_cmatrix(&self) -> CMatrix<T> {
        CMatrix::from_fn(3, |i, j| self.0[i][j])
    }

    /// Ascending eigenvalues (Hermitian part).
    pub fn eigenvalues(&self) -> Vec<T> {
        self.to_cmatrix().hermitian_eigenvalues()
    }

    /// Trace-norm distance `||self - other||_1`.
    pub fn trace_distance(&self, other: &Self) -> T {
        let mut d = *self;
        d.axpy(-T::one(), other);
        d.to_cmatrix().trace_norm()
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest absolute off-diagonal element.
    pub fn coherence_norm(&self) -> T {
        let mut m = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    m = m.max(self.0[i][j].norm());
                }
            }
        }
        m
    }

    fn axpy(&mut self, alpha: T, other: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] = self.0[i][j] + other.0[i][j] * alpha;
            }
        }
    }
}

/// Precomputed generator `rho -> -i[H(x), rho] + sum L_ij[rho]` at fixed `x`.
#[derive(Debug, Clone)]
pub struct Generator<T: Real> {
    energies: [T; 3],
    rates: RateTable<T>,
}

impl<T: Real> Generator<T> {
    pub fn new(spec: &EngineSpec<T>, baths: &BathSet<T>, x: T) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            energies: spec.levels_at(x),
            rates: transition_rates(spec, baths, x)?,
        })
    }

    pub fn rates(&self) -> &RateTable<T> {
        &self.rates
    }

    pub fn energies(&self) -> &[T; 3] {
        &self.energies
    }

    /// Step size `0.1 / (sum of rates + largest Bohr frequency)`.
    pub fn default_dt(&self) -> T {
        let e = &self.energies;
        let bohr = (e[0] - e[1])
            .abs()
            .max((e[0] - e[2]).abs())
            .max((e[1] - e[2]).abs());
        T::lit(0.1) / (self.rates.total() + bohr)
    }

    /// Applies the full Lindblad generator. The dissipator is assembled term by
    /// term from `S_ij rho S_ij^dagger - 1/2 {S_ij^dagger S_ij, rho}` with
    /// `S_ij = |i><j|`, without using the fact that it only couples
    /// populations.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        let r = &rho.0;
        let mut out = DensityMatrix::zeros();
        let minus_i = C::new(T::zero(), -T::one());
        let half = T::lit(0.5);
        // -i [H, rho] with diagonal H.
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = minus_i * r[i][j] * (self.energies[i] - self.energies[j]);
            }
        }
        for to in 0..3 {
            for from in 0..3 {
                let g = self.rates.rate(to, from);
                if to == from || g == T::zero() {
                    continue;
                }
                // S rho S^dagger = rho[from][from] |to><to|
                out.0[to][to] = out.0[to][to] + r[from][from] * g;
                // S^dagger S = |from><from|; anticommutator with rho.
                for k in 0..3 {
                    out.0[from][k] = out.0[from][k] - r[from][k] * (g * half);
                    out.0[k][from] = out.0[k][from] - r[k][from] * (g * half);
                }
            }
        }
        out
    }

    /// Energy currents `(J12, J13, J23)` for the populations of `rho`.
    pub fn currents(&self, rho: &DensityMatrix<T>) -> (T, T, T) {
        currents_from_populations(&self.rates, &self.energies, &rho.populations())
    }

    /// `U = Tr[H(x) rho]`.
    pub fn energy(&self, rho: &DensityMatrix<T>) -> T {
        let p = rho.populations();
        (0..3).map(|i| self.energies[i] * p[i]).sum()
    }

    fn rk4_step(&self, rho: &DensityMatrix<T>, dt: T) -> DensityMatrix<T> {
        let half = dt * T::lit(0.5);
        let k1 = self.apply(rho);
        let mut s = *rho;
        s.axpy(half, &k1);
        let k2 = self.apply(&s);
        let mut s = *rho;
        s.axpy(half, &k2);
        let k3 = self.apply(&s);
        let mut s = *rho;
        s.axpy(dt, &k3);
        let k4 = self.apply(&s);
        let mut next = *rho;
        let sixth = dt / T::lit(6.0);
        next.axpy(sixth, &k1);
        next.axpy(sixth * T::lit(2.0), &k2);
        next.axpy(sixth * T::lit(2.0), &k3);
        next.axpy(sixth, &k4);
        next
    }
}

/// `d rho / dt` at controller position `x`.
pub fn lindblad_rhs<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    x: T,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    Ok(Generator::new(spec, baths, x)?.apply(rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions<T> {
    pub t_max: T,
    /// `None` selects [`Generator::default_dt`].
    pub dt: Option<T>,
    /// Trace-norm change over one window that counts as converged.
    pub stop_tol: T,
    /// Steps per convergence window.
    pub window: usize,
    /// Keep every n-th step in the trajectory (the final state is always kept).
    pub record_every: usize,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            t_max: T::lit(1e6),
            dt: None,
            stop_tol: T::lit(1e-12),
            window: 100,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrajectorySample<T: Real> {
    pub t: T,
    pub rho: DensityMatrix<T>,
    /// `Tr[H(x) rho(t)]`.
    pub energy: T,
    pub j12: T,
    pub j13: T,
    pub j23: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Trajectory<T: Real> {
    pub samples: Vec<TrajectorySample<T>>,
    pub dt: T,
    pub converged: bool,
    /// Largest `|dU/dt - (J12 + J13 + J23)|` seen along the run, with `dU/dt`
    /// from a sixth-order central difference of the sampled energy.
    pub max_energy_balance_residual: T,
    /// Largest `|J_ij(t)|` seen along the run.
    pub max_abs_current: T,
    pub max_trace_drift: T,
    pub max_hermiticity_error: T,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &DensityMatrix<T> {
        &self.samples.last().expect("trajectory has samples").rho
    }

    pub fn final_time(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.t)
    }
}

const TRACE_DRIFT_LIMIT: f64 = 1e-6;
const PSD_LIMIT: f64 = -1e-8;

/// Fixed-step RK4 integration from `rho0` until the state stops changing or
/// `t_max` is reached.
pub fn evolve<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    x: T,
    rho0: &DensityMatrix<T>,
    opts: &EvolveOptions<T>,
) -> Result<Trajectory<T>> {
    let generator = Generator::new(spec, baths, x)?;
    let dt = opts.dt.unwrap_or_else(|| generator.default_dt());
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !((rho0.trace().re - T::one()).abs() < T::lit(1e-10)) {
        return Err(Error::InvalidInput(
            "initial state must have unit trace".into(),
        ));
    }
    let window = opts.window.max(1);
    let record_every = opts.record_every.max(1);

    let sample = |t: T, rho: &DensityMatrix<T>| {
        let (j12, j13, j23) = generator.currents(rho);
        TrajectorySample {
            t,
            rho: *rho,
            energy: generator.energy(rho),
            j12,
            j13,
            j23,
        }
    };

    let mut traj = Trajectory {
        samples: vec![sample(T::zero(), rho0)],
        dt,
        converged: false,
        max_energy_balance_residual: T::zero(),
        max_abs_current: T::zero(),
        max_trace_drift: T::zero(),
        max_hermiticity_error: rho0.hermiticity_error(),
    };

    // Sliding window of (U, sum J) for the 7-point derivative stencil.
    let mut history: Vec<(T, T)> = Vec::with_capacity(7);
    let stencil = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0].map(T::lit);
    let sixty_dt = T::lit(60.0) * dt;

    let mut rho = *rho0;
    let mut anchor = *rho0;
    let mut step: usize = 0;
    let mut t = T::zero();
    loop {
        let s = sample(t, &rho);
        traj.max_abs_current = traj
            .max_abs_current
            .max(s.j12.abs())
            .max(s.j13.abs())
            .max(s.j23.abs());
        if history.len() == 7 {
            history.remove(0);
        }
        history.push((s.energy, s.j12 + s.j13 + s.j23));
        if history.len() == 7 {
            let du: T = history
                .iter()
                .zip(stencil.iter())
                .map(|((u, _), w)| *u * *w)
                .sum::<T>()
                / sixty_dt;
            let residual = (du - history[3].1).abs();
            traj.max_energy_balance_residual = traj.max_energy_balance_residual.max(residual);
        }

        if step > 0 && step.is_multiple_of(window) {
            let min_ev = rho.eigenvalues()[0];
            if min_ev < T::lit(PSD_LIMIT) {
                return Err(Error::IntegratorFailure {
                    time: t.as_f64(),
                    reason: format!("negative eigenvalue {min_ev}"),
                });
            }
            if rho.trace_distance(&anchor) < opts.stop_tol {
                traj.converged = true;
                break;
            }
            anchor = rho;
        }
        if t >= opts.t_max {
            break;
        }

        rho = generator.rk4_step(&rho, dt);
        step += 1;
        t = dt * T::from_usize(step).unwrap();

        let drift = (rho.trace().re - T::one()).abs();
        traj.max_trace_drift = traj.max_trace_drift.max(drift);
        traj.max_hermiticity_error = traj.max_hermiticity_error.max(rho.hermiticity_error());
        if !rho.is_finite() {
            return Err(Error::IntegratorFailure {
                time: t.as_f64(),
                reason: "state is no longer finite".into(),
            });
        }
        if drift > T::lit(TRACE_DRIFT_LIMIT) {
            return Err(Error::IntegratorFailure {
                time: t.as_f64(),
                reason: format!("trace drifted by {drift}"),
            });
        }
        if step.is_multiple_of(record_every) {
            traj.samples.push(sample(t, &rho));
        }
    }
    if traj.samples.last().is_none_or(|s| s.t != t) {
        traj.samples.push(sample(t, &rho));
    }
    Ok(traj)
}

/// Populations-only RK4 integration of the classical rate equation
/// `dp_i/dt = sum_j (gamma_{i<-j} p_j - gamma_{j<-i} p_i)`.
pub fn evolve_populations<T: Real>(rates: &RateTable<T>, p0: [T; 3], t: T, dt: T) -> [T; 3] {
    let f = |p: &[T; 3]| -> [T; 3] {
        [0usize, 1, 2].map(|i| {
            (0..3)
                .filter(|&j| j != i)
                .map(|j| rates.rate(i, j) * p[j] - rates.rate(j, i) * p[i])
                .sum()
        })
    };
    let add = |p: &[T; 3], k: &[T; 3], h: T| [0, 1, 2].map(|i| p[i] + k[i] * h);
    let steps = (t / dt).round().to_usize().unwrap_or(0);
    let mut p = p0;
    let half = dt * T::lit(0.5);
    for _ in 0..steps {
        let k1 = f(&p);
        let k2 = f(&add(&p, &k1, half));
        let k3 = f(&add(&p, &k2, half));
        let k4 = f(&add(&p, &k3, dt));
        p = [0, 1, 2]
            .map(|i| p[i] + dt / T::lit(6.0) * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{stationary_populations, WorkSource};

    fn setup() -> (EngineSpec<f64>, BathSet<f64>) {
        (
            EngineSpec::new([0.0, 0.03, 0.08], [0.0; 3], 1.0).unwrap(),
            BathSet::new(900.0, 300.0, WorkSource::Spontaneous).unwrap(),
        )
    }

    #[test]
    fn stationary_state_is_fixed_point() {
        let (s, b) = setup();
        let p = stationary_populations(&transition_rates(&s, &b, 0.0).unwrap()).unwrap();
        let d = lindblad_rhs(&s, &b, 0.0, &DensityMatrix::from_populations(p)).unwrap();
        let diag: f64 = d.populations().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diag < 1e-12, "{diag}");
    }

    #[test]
    fn uniform_rates_fix_maximally_mixed() {
        let g = Generator {
            energies: [0.0f64, 1.0, 2.0],
            rates: RateTable::from_matrix([[0.4; 3]; 3]).unwrap(),
        };
        let d = g.apply(&DensityMatrix::maximally_mixed());
        for p in d.populations() {
            assert!(p.abs() < 1e-15);
        }
    }

    #[test]
    fn coherences_do_not_feed_populations() {
        let (s, b) = setup();
        let g = Generator::new(&s, &b, 0.0).unwrap();
        let mut rho = DensityMatrix::<f64>::zeros();
        rho.0[0][2] = C::new(0.1, 0.05);
        rho.0[2][0] = C::new(0.1, -0.05);
        let d = g.apply(&rho);
        for p in d.populations() {
            assert_eq!(p, 0.0);
        }
        // Decay rate of rho_13 is half the total out-rate of levels 1 and 3.
        let r = g.rates();
        let decay = 0.5 * (r.rate(1, 0) + r.rate(2, 0) + r.rate(0, 2) + r.rate(1, 2));
        let expected = rho.0[0][2] * C::new(-decay, -(0.0 - 0.08));
        assert!((d.0[0][2] - expected).norm() < 1e-15);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let (s, b) = setup();
        let psi = [C::new(0.3, 0.1), C::new(-0.5, 0.2), C::new(0.1, 0.7)];
        let d = lindblad_rhs(&s, &b, 0.0, &DensityMatrix::pure(psi)).unwrap();
        assert!(d.trace().norm() < 1e-15);
        assert!(d.hermiticity_error() < 1e-15);
    }

    #[test]
    fn stationary_start_converges_immediately() {
        let (s, b) = setup();
        let p = stationary_populations(&transition_rates(&s, &b, 0.0).unwrap()).unwrap();
        let tr = evolve(
            &s,
            &b,
            0.0,
            &DensityMatrix::from_populations(p),
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(tr.converged);
        assert!((tr.final_time() - 100.0 * tr.dt).abs() < 1e-9 * tr.final_time());
    }

    #[test]
    fn rejects_bad_step() {
        let (s, b) = setup();
        let opts = EvolveOptions {
            dt: Some(0.0),
            ..EvolveOptions::default()
        };
        assert!(evolve(&s, &b, 0.0, &DensityMatrix::maximally_mixed(), &opts).is_err());
    }

    #[test]
    fn oversized_step_reports_failure() {
        let (s, b) = setup();
        let opts = EvolveOptions {
            dt: Some(1e3),
            t_max: 1e6,
            ..EvolveOptions::default()
        };
        let psi = [C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0)];
        let r = evolve(&s, &b, 0.0, &DensityMatrix::pure(psi), &opts);
        assert!(matches!(r, Err(Error::IntegratorFailure { .. })), "{r:?}");
    }
}
