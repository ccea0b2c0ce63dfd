//! Truncated-oscillator simulation of the joint engine-controller master
//! equation, used as a numerical check on the controller's Gaussian marginal
//! and on the conditional power landscape.
//!
//! The engine Hamiltonian, the coupling `sum_i g_i |i><i| ⊗ x` and the engine
//! jump operators `|i><j| ⊗ 1` all preserve the engine-diagonal block
//! structure, so a joint state that starts block diagonal stays block
//! diagonal. The state is therefore stored as three `N x N` oscillator blocks
//! `rho_i = <i|rho_SC|i>`; the off-diagonal engine blocks are identically zero.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerSpec;
use crate::engine::{
    currents_from_populations, stationary_populations, transition_rates, BathSet, EngineSpec,
    RateTable,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Occupation tail allowed at the truncation level.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-6;

/// Conditional states are formed only where the marginal exceeds this (1/nm).
pub const CONDITIONING_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PositionGrid<T: Real> {
    pub x_min: T,
    pub x_max: T,
    pub points: usize,
}

impl<T: Real> PositionGrid<T> {
    pub fn positions(&self) -> Vec<T> {
        let n = self.points.max(2);
        let step = (self.x_max - self.x_min) / T::from_usize(n - 1).unwrap();
        (0..n)
            .map(|k| self.x_min + step * T::from_usize(k).unwrap())
            .collect()
    }

    pub fn spacing(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize(self.points.max(2) - 1).unwrap()
    }

    /// Grid of `points` spanning `mean ± half_widths * sigma`.
    pub fn centered(mean: T, sigma: T, half_widths: T, points: usize) -> Self {
        Self {
            x_min: mean - half_widths * sigma,
            x_max: mean + half_widths * sigma,
            points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct JointSpec<T: Real> {
    /// Number of oscillator Fock states kept.
    pub fock_dim: usize,
    /// Multiplier on every engine coupling `g_i`.
    pub coupling_scale: T,
    pub grid: PositionGrid<T>,
}

/// Action of the joint generator on block-diagonal states.
#[derive(Debug, Clone)]
pub struct JointGenerator<T: Real> {
    n: usize,
    omega: T,
    /// Position matrix elements `<k|x|k+1>`.
    x_off: Vec<T>,
    /// Momentum `<k+1|p|k> = i p_off[k]`, `<k|p|k+1> = -i p_off[k]`.
    p_off: Vec<T>,
    /// Linear potential coefficient per engine level: `s g_i + E`.
    linear: [T; 3],
    xi: T,
    /// `2 m xi k_B T`.
    diffusion: T,
    rates: RateTable<T>,
    mass: T,
    kappa: T,
    kt: T,
    force: T,
    stationary_engine: [T; 3],
}

/// Block-diagonal joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T: Real> {
    pub blocks: [CMatrix<T>; 3],
}

impl<T: Real> JointState<T> {
    pub fn trace(&self) -> T {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    /// Engine populations `Tr_C rho_i`.
    pub fn engine_populations(&self) -> [T; 3] {
        [0, 1, 2].map(|i| self.blocks[i].trace().re)
    }

    /// Full `3N x 3N` matrix in the engine-major basis `|i> ⊗ |n>`.
    pub fn to_dense(&self) -> CMatrix<T> {
        let n = self.blocks[0].dim();
        let zero = Complex::new(T::zero(), T::zero());
        CMatrix::from_fn(3 * n, |r, c| {
            let (i, a) = (r / n, r % n);
            let (j, b) = (c / n, c % n);
            if i == j {
                self.blocks[i][(a, b)]
            } else {
                zero
            }
        })
    }

    /// Oscillator state `Tr_S rho`.
    pub fn oscillator_state(&self) -> CMatrix<T> {
        let mut m = self.blocks[0].clone();
        m.axpy(T::one(), &self.blocks[1]);
        m.axpy(T::one(), &self.blocks[2]);
        m
    }

    pub fn hermiticity_error(&self) -> T {
        self.blocks
            .iter()
            .map(|b| b.hermiticity_error())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Sum of negative eigenvalues (reported as a positive number).
    pub fn negativity(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|b| b.hermitian_eigenvalues())
            .filter(|v| *v < T::zero())
            .map(|v| -v)
            .sum()
    }

    fn axpy(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(alpha, b);
        }
    }

    fn distance(&self, other: &Self) -> T {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(u, v)| (*u - *v).norm_sqr())
                    .sum::<T>()
                    .sqrt()
            })
            .sum()
    }
}

/// Builds the joint generator for the given engine, baths and controller.
///
/// Engine jump rates are evaluated at the bare energies (`x = 0`); the
/// position dependence enters only through the coupling Hamiltonian.
pub fn build_joint_generator<T: Real>(
    spec: &EngineSpec<T>,
    baths: &BathSet<T>,
    ctrl: &ControllerSpec<T>,
    joint: &JointSpec<T>,
) -> Result<JointGenerator<T>> {
    spec.validate()?;
    ctrl.validate()?;
    let n = joint.fock_dim;
    if n < 8 {
        return Err(Error::InvalidInput(format!(
            "fock_dim must be >= 8, got {n}"
        )));
    }
    if !(joint.coupling_scale >= T::zero()) {
        return Err(Error::InvalidInput("coupling_scale must be >= 0".into()));
    }
    let omega = ctrl.frequency();
    let kt = ctrl.thermal_energy();
    let linear = [0, 1, 2].map(|i| joint.coupling_scale * spec.couplings[i] + ctrl.force);

    // Caldeira-Leggett stationary state: Gaussian with <x^2> = kT/kappa, i.e.
    // thermal occupation kT/omega - 1/2, plus the coherent displacement
    // from the linear potential.
    let thermal = (kt / omega - T::lit(0.5)).max(T::zero());
    let max_shift = linear
        .iter()
        .fold(T::zero(), |m, f| m.max((*f / ctrl.kappa).abs()));
    let displacement = ctrl.mass * omega * max_shift * max_shift / T::lit(2.0);
    let occupation = thermal + displacement;
    let tail = (occupation / (occupation + T::one())).powi(n as i32);
    if tail.as_f64() > TRUNCATION_TAIL_LIMIT {
        return Err(Error::Truncation {
            fock_dim: n,
            tail: tail.as_f64(),
            limit: TRUNCATION_TAIL_LIMIT,
        });
    }

    let density = ctrl.stationary_density();
    let g = &joint.grid;
    let mean = density.mean;
    let sigma = density.std_dev;
    let six = T::lit(6.0) * sigma;
    if g.points < 2 || g.x_min > mean - six || g.x_max < mean + six {
        return Err(Error::InvalidInput(format!(
            "conditioning grid [{}, {}] must cover {} ± 6 sigma (sigma = {})",
            g.x_min, g.x_max, mean, sigma
        )));
    }

    let x0 = (T::lit(2.0) * ctrl.mass * omega).sqrt().recip();
    let p0 = (ctrl.mass * omega / T::lit(2.0)).sqrt();
    let x_off = (0..n - 1)
        .map(|k| x0 * T::from_usize(k + 1).unwrap().sqrt())
        .collect();
    let p_off = (0..n - 1)
        .map(|k| p0 * T::from_usize(k + 1).unwrap().sqrt())
        .collect();
    let rates = transition_rates(spec, baths, T::zero())?;
    let stationary_engine = stationary_populations(&rates)?;

    Ok(JointGenerator {
        n,
        omega,
        x_off,
        p_off,
        linear,
        xi: ctrl.xi,
        diffusion: T::lit(2.0) * ctrl.mass * ctrl.xi * kt,
        rates,
        mass: ctrl.mass,
        kappa: ctrl.kappa,
        kt,
        force: ctrl.force,
        stationary_engine,
    })
}

impl<T: Real> JointGenerator<T> {
    pub fn fock_dim(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> &RateTable<T> {
        &self.rates
    }

    /// Truncated position operator `x0 (a + a^dagger)`.
    pub fn position_matrix(&self) -> CMatrix<T> {
        let zero = Complex::new(T::zero(), T::zero());
        CMatrix::from_fn(self.n, |i, j| {
            if j == i + 1 {
                Complex::new(self.x_off[i], T::zero())
            } else if i == j + 1 {
                Complex::new(self.x_off[j], T::zero())
            } else {
                zero
            }
        })
    }

    /// Truncated momentum operator `i p0 (a^dagger - a)`.
    pub fn momentum_matrix(&self) -> CMatrix<T> {
        let zero = Complex::new(T::zero(), T::zero());
        CMatrix::from_fn(self.n, |i, j| {
            if i == j + 1 {
                Complex::new(T::zero(), self.p_off[j])
            } else if j == i + 1 {
                Complex::new(T::zero(), -self.p_off[i])
            } else {
                zero
            }
        })
    }

    /// `omega (n + 1/2)` on the diagonal.
    pub fn oscillator_hamiltonian(&self) -> CMatrix<T> {
        let zero = Complex::new(T::zero(), T::zero());
        CMatrix::from_fn(self.n, |i, j| {
            if i == j {
                Complex::new(
                    self.omega * (T::from_usize(i).unwrap() + T::lit(0.5)),
                    T::zero(),
                )
            } else {
                zero
            }
        })
    }

    /// Product state of the bare engine stationary populations and a
    /// diagonal thermal oscillator state.
    pub fn initial_state(&self) -> JointState<T> {
        let nbar = (self.kt / self.omega - T::lit(0.5)).max(T::lit(1e-3));
        let ratio = nbar / (nbar + T::one());
        let weights: Vec<T> = (0..self.n).map(|k| ratio.powi(k as i32)).collect();
        let norm: T = weights.iter().copied().sum();
        let blocks = [0, 1, 2].map(|i| {
            let mut b = CMatrix::zeros(self.n);
            for (k, w) in weights.iter().enumerate() {
                b[(k, k)] = Complex::new(self.stationary_engine[i] * *w / norm, T::zero());
            }
            b
        });
        JointState { blocks }
    }

    /// Bare engine populations times the oscillator ground state.
    pub fn vacuum_state(&self) -> JointState<T> {
        let blocks = [0, 1, 2].map(|i| {
            let mut b = CMatrix::zeros(self.n);
            b[(0, 0)] = Complex::new(self.stationary_engine[i], T::zero());
            b
        });
        JointState { blocks }
    }

    /// Rough spectral radius of the generator; sets the default step.
    pub fn stiffness(&self) -> T {
        let nn = T::from_usize(self.n).unwrap();
        let x_max = T::lit(2.0) * self.x_off.last().copied().unwrap_or(T::zero());
        let p_max = T::lit(2.0) * self.p_off.last().copied().unwrap_or(T::zero());
        let linear = self.linear.iter().fold(T::zero(), |m, f| m.max(f.abs()));
        self.omega * nn
            + T::lit(2.0) * linear * x_max
            + self.diffusion * T::lit(4.0) * x_max * x_max
            + self.xi * T::lit(4.0) * x_max * p_max
            + self.rates.total()
    }

    pub fn default_dt(&self) -> T {
        T::lit(2.0) / self.stiffness()
    }

    /// `T M` for a tridiagonal, zero-diagonal `T` with `T[k][k+1] = up[k]`,
    /// `T[k+1][k] = down[k]`.
    fn left_tri(&self, up: &[Complex<T>], down: &[Complex<T>], m: &CMatrix<T>) -> CMatrix<T> {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                if i + 1 < n {
                    acc = acc + up[i] * src[(i + 1) * n + j];
                }
                if i > 0 {
                    acc = acc + down[i - 1] * src[(i - 1) * n + j];
                }
                dst[i * n + j] = acc;
            }
        }
        out
    }

    /// `M T` for the same tridiagonal layout.
    fn right_tri(&self, up: &[Complex<T>], down: &[Complex<T>], m: &CMatrix<T>) -> CMatrix<T> {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                // (M T)_{ij} = M_{i,j-1} T_{j-1,j} + M_{i,j+1} T_{j+1,j}
                if j > 0 {
                    acc = acc + src[i * n + j - 1] * up[j - 1];
                }
                if j + 1 < n {
                    acc = acc + src[i * n + j + 1] * down[j];
                }
                dst[i * n + j] = acc;
            }
        }
        out
    }

    fn commutator(&self, up: &[Complex<T>], down: &[Complex<T>], m: &CMatrix<T>) -> CMatrix<T> {
        let mut l = self.left_tri(up, down, m);
        l.axpy(-T::one(), &self.right_tri(up, down, m));
        l
    }

    fn anticommutator(&self, up: &[Complex<T>], down: &[Complex<T>], m: &CMatrix<T>) -> CMatrix<T> {
        let mut l = self.left_tri(up, down, m);
        l.axpy(T::one(), &self.right_tri(up, down, m));
        l
    }

    /// `d rho / dt` for a block-diagonal state.
    pub fn apply(&self, state: &JointState<T>) -> JointState<T> {
        let n = self.n;
        let x_up: Vec<Complex<T>> = self
            .x_off
            .iter()
            .map(|v| Complex::new(*v, T::zero()))
            .collect();
        let x_down = x_up.clone();
        let p_up: Vec<Complex<T>> = self
            .p_off
            .iter()
            .map(|v| Complex::new(T::zero(), -*v))
            .collect();
        let p_down: Vec<Complex<T>> = self
            .p_off
            .iter()
            .map(|v| Complex::new(T::zero(), *v))
            .collect();
        let minus_i = Complex::new(T::zero(), -T::one());

        let blocks = [0usize, 1, 2].map(|i| {
            let rho = &state.blocks[i];
            // -i [omega(n + 1/2), rho]
            let mut out = CMatrix::from_fn(n, |a, b| {
                minus_i
                    * rho[(a, b)]
                    * (self.omega * (T::from_usize(a).unwrap() - T::from_usize(b).unwrap()))
            });
            // -i [f_i x, rho]
            let xc = self.commutator(&x_up, &x_down, rho);
            let lin = self.linear[i];
            // -i xi [x, {p, rho}]
            let pa = self.anticommutator(&p_up, &p_down, rho);
            let xpa = self.commutator(&x_up, &x_down, &pa);
            // -2 m xi kT [x, [x, rho]]
            let xxc = self.commutator(&x_up, &x_down, &xc);
            let o = out.as_mut_slice();
            for k in 0..n * n {
                o[k] = o[k] + minus_i * (xc.as_slice()[k] * lin + xpa.as_slice()[k] * self.xi)
                    - xxc.as_slice()[k] * self.diffusion;
            }
            // Engine jumps between blocks.
            for j in 0..3 {
                if j == i {
                    continue;
                }
                let gain = self.rates.rate(i, j);
                let loss = self.rates.rate(j, i);
                if gain != T::zero() {
                    out.axpy(gain, &state.blocks[j]);
                }
                if loss != T::zero() {
                    out.axpy(-loss, rho);
                }
            }
            out
        });
        JointState { blocks }
    }

    fn rk4_step(&self, s: &JointState<T>, dt: T) -> JointState<T> {
        let half = dt * T::lit(0.5);
        let k1 = self.apply(s);
        let mut y = s.clone();
        y.axpy(half, &k1);
        let k2 = self.apply(&y);
        let mut y = s.clone();
        y.axpy(half, &k2);
        let k3 = self.apply(&y);
        let mut y = s.clone();
        y.axpy(dt, &k3);
        let k4 = self.apply(&y);
        let mut next = s.clone();
        let sixth = dt / T::lit(6.0);
        next.axpy(sixth, &k1);
        next.axpy(sixth * T::lit(2.0), &k2);
        next.axpy(sixth * T::lit(2.0), &k3);
        next.axpy(sixth, &k4);
        next
    }

    /// Integrates `state` for `t` with fixed step `dt`.
    pub fn propagate(&self, state: &JointState<T>, t: T, dt: T) -> JointState<T> {
        let steps = (t / dt).ceil().to_usize().unwrap_or(0);
        let mut s = state.clone();
        for _ in 0..steps {
            s = self.rk4_step(&s, dt);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions<T> {
    pub t_max: T,
    /// `None` selects [`JointGenerator::default_dt`].
    pub dt: Option<T>,
    /// Frobenius change over one window that counts as converged.
    pub stop_tol: T,
    pub window: usize,
}

impl<T: Real> Default for JointOptions<T> {
    fn default() -> Self {
        Self {
            t_max: T::lit(1e7),
            dt: None,
            stop_tol: T::lit(1e-9),
            window: 200,
        }
    }
}

/// Long-time joint state with its position-resolved decomposition.
#[derive(Debug, Clone)]
pub struct JointSteadyState<T: Real> {
    pub state: JointState<T>,
    pub time: T,
    pub residual: T,
    pub positions: Vec<T>,
    /// Position marginal `<x| Tr_S rho |x>` (1/nm).
    pub marginal: Vec<T>,
    /// Per-level position densities `<x|rho_i|x>`.
    pub level_marginals: Vec<[T; 3]>,
    /// Conditional engine populations, present where the marginal exceeds
    /// [`CONDITIONING_FLOOR`]. Conditional coherences vanish identically.
    pub conditional: Vec<Option<[T; 3]>>,
    /// Sum of negative eigenvalues of the joint state.
    pub negativity: T,
    pub grid_spacing: T,
}

impl<T: Real> JointSteadyState<T> {
    /// `J12` at each grid point from the conditional populations, with rates
    /// evaluated at the shifted energies `e_i(x)` of `spec`.
    pub fn conditional_j12(
        &self,
        spec: &EngineSpec<T>,
        baths: &BathSet<T>,
    ) -> Result<Vec<Option<T>>> {
        self.positions
            .iter()
            .zip(&self.conditional)
            .map(|(&x, p)| match p {
                None => Ok(None),
                Some(p) => {
                    let rates = transition_rates(spec, baths, x)?;
                    let (j12, _, _) = currents_from_populations(&rates, &spec.levels_at(x), p);
                    Ok(Some(j12))
                }
            })
            .collect()
    }

    /// Relative L2 distance between the marginal and a reference density on
    /// the grid.
    pub fn marginal_l2_error(&self, reference: impl Fn(T) -> T) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (&x, &m) in self.positions.iter().zip(&self.marginal) {
            let r = reference(x);
            num += (m - r) * (m - r);
            den += r * r;
        }
        (num / den).sqrt()
    }

    /// `sum_x p_i(x | x) p(x) dx` per level, to compare with `Tr_C rho_i`.
    pub fn reconstructed_engine_populations(&self) -> [T; 3] {
        let mut acc = [T::zero(); 3];
        for (cond, m) in self.conditional.iter().zip(&self.marginal) {
            if let Some(p) = cond {
                for i in 0..3 {
                    acc[i] += p[i] * *m * self.grid_spacing;
                }
            }
        }
        acc
    }
}

/// Normalized Hermite functions `psi_0..psi_{n-1}` at `x`, for an oscillator
/// of length `ell = 1/sqrt(m omega)`. The recurrence is rescaled on the fly
/// so that large `|x| / ell` neither overflows nor underflows.
pub fn hermite_functions<T: Real>(x: T, ell: T, n: usize) -> Vec<T> {
    let s = x / ell;
    // log of psi_0 = pi^{-1/4} ell^{-1/2} exp(-s^2/2)
    let log0 = -(s * s) / T::lit(2.0) - T::PI().ln() / T::lit(4.0) - ell.ln() / T::lit(2.0);
    let mut vals = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    let mut log_scale = log0;
    let mut prev = T::zero();
    let mut cur = T::one();
    let big = T::lit(1e100);
    let two = T::lit(2.0);
    for k in 0..n {
        vals.push(cur);
        logs.push(log_scale);
        let kf = T::from_usize(k).unwrap();
        let next = (two / (kf + T::one())).sqrt() * s * cur - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > big {
            cur /= m;
            prev /= m;
            log_scale += m.ln();
        }
    }
    vals.iter()
        .zip(&logs)
        .map(|(v, l)| {
            if *v == T::zero() {
                T::zero()
            } else {
                v.signum() * (v.abs().ln() + *l).exp()
            }
        })
        .collect()
}

/// Integrates the joint master equation to stationarity and decomposes the
/// result on the position grid.
pub fn joint_steady_state<T: Real>(
    generator: &JointGenerator<T>,
    ctrl: &ControllerSpec<T>,
    joint: &JointSpec<T>,
    opts: &JointOptions<T>,
) -> Result<JointSteadyState<T>> {
    joint_steady_state_from(generator, ctrl, joint, opts, generator.initial_state())
}

/// As [`joint_steady_state`], starting from `initial`.
pub fn joint_steady_state_from<T: Real>(
    generator: &JointGenerator<T>,
    ctrl: &ControllerSpec<T>,
    joint: &JointSpec<T>,
    opts: &JointOptions<T>,
    initial: JointState<T>,
) -> Result<JointSteadyState<T>> {
    if initial.blocks.iter().any(|b| b.dim() != generator.n) {
        return Err(Error::InvalidInput(
            "initial state has the wrong basis size".into(),
        ));
    }
    let dt = opts.dt.unwrap_or_else(|| generator.default_dt());
    if !(dt > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let window = opts.window.max(1);
    let mut state = initial;
    let mut anchor = state.clone();
    let mut step = 0usize;
    let mut residual = T::infinity();
    let mut t = T::zero();
    let converged = loop {
        if step > 0 && step.is_multiple_of(window) {
            residual = state.distance(&anchor);
            if residual < opts.stop_tol {
                break true;
            }
            anchor = state.clone();
        }
        if t >= opts.t_max {
            break false;
        }
        state = generator.rk4_step(&state, dt);
        step += 1;
        t = dt * T::from_usize(step).unwrap();
        let drift = (state.trace() - T::one()).abs();
        if drift > T::lit(1e-6) || !drift.is_finite() {
            return Err(Error::IntegratorFailure {
                time: t.as_f64(),
                reason: format!("joint trace drifted by {drift}"),
            });
        }
    };
    if !converged {
        return Err(Error::Timeout {
            t_max: opts.t_max.as_f64(),
            residual: residual.as_f64(),
        });
    }

    let ell = (ctrl.mass * generator.omega).sqrt().recip();
    let positions = joint.grid.positions();
    let n = generator.n;
    let mut marginal = Vec::with_capacity(positions.len());
    let mut level_marginals = Vec::with_capacity(positions.len());
    let mut conditional = Vec::with_capacity(positions.len());
    for &x in &positions {
        let psi = hermite_functions(x, ell, n);
        let lm = [0, 1, 2].map(|i| {
            let b = &state.blocks[i];
            let mut acc = T::zero();
            for a in 0..n {
                for c in 0..n {
                    acc += psi[a] * b[(a, c)].re * psi[c];
                }
            }
            acc
        });
        let m = lm[0] + lm[1] + lm[2];
        conditional.push((m > T::lit(CONDITIONING_FLOOR)).then(|| lm.map(|v| v / m)));
        marginal.push(m);
        level_marginals.push(lm);
    }

    Ok(JointSteadyState {
        negativity: state.negativity(),
        state,
        time: t,
        residual,
        positions,
        marginal,
        level_marginals,
        conditional,
        grid_spacing: joint.grid.spacing(),
    })
}

impl<T: Real> JointGenerator<T> {
    pub fn mass(&self) -> T {
        self.mass
    }
    pub fn kappa(&self) -> T {
        self.kappa
    }
    pub fn force(&self) -> T {
        self.force
    }
    pub fn stationary_engine_populations(&self) -> [T; 3] {
        self.stationary_engine
    }
}
