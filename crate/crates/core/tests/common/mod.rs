//! Independent reference implementations used as oracles by the
//! integration and acceptance tests. Nothing here calls into the library's
//! numerics beyond plain data types.
#![allow(dead_code)]

use adaptive_engine::engine::{BathSet, EngineSpec, WorkSource};
use adaptive_engine::units::BOLTZMANN_EV_PER_K;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// meV-scale engine with populations that are all numerically resolvable.
pub fn random_engine(r: &mut ChaCha8Rng) -> EngineSpec<f64> {
    let e1 = r.random_range(-0.05..0.05);
    let e2 = e1 + r.random_range(0.005..0.08);
    let e3 = e2 + r.random_range(0.005..0.08);
    let g = [0, 1, 2].map(|_| r.random_range(-4e-3..4e-3));
    EngineSpec::new([e1, e2, e3], g, r.random_range(0.1..10.0)).unwrap()
}

pub fn random_baths(r: &mut ChaCha8Rng) -> BathSet<f64> {
    BathSet::new(
        r.random_range(150.0..900.0),
        r.random_range(150.0..900.0),
        WorkSource::Spontaneous,
    )
    .unwrap()
}

/// Engine whose rates are comparable to its Bohr frequencies, so that
/// relaxation takes a modest number of steps.
pub fn fast_engine(r: &mut ChaCha8Rng) -> (EngineSpec<f64>, BathSet<f64>) {
    let e2 = r.random_range(0.02..0.06);
    let e3 = e2 + r.random_range(0.02..0.06);
    let g = [0, 1, 2].map(|_| r.random_range(-2e-3..2e-3));
    let spec = EngineSpec::new([0.0, e2, e3], g, r.random_range(100.0..1000.0)).unwrap();
    let baths = BathSet::new(
        r.random_range(250.0..700.0),
        r.random_range(250.0..700.0),
        WorkSource::Spontaneous,
    )
    .unwrap();
    (spec, baths)
}

pub fn beta(t: f64) -> f64 {
    1.0 / (BOLTZMANN_EV_PER_K * t)
}

pub fn levels(spec: &EngineSpec<f64>, x: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| spec.levels[i] + spec.couplings[i] * x)
}

/// Bose factor form: down = gamma0 w^3 (n + 1), up = gamma0 w^3 n.
pub fn bose_pair(gamma0: f64, w: f64, beta: f64) -> (f64, f64) {
    let n = 1.0 / (beta * w).exp_m1();
    (gamma0 * w.powi(3) * (n + 1.0), gamma0 * w.powi(3) * n)
}

/// Rate matrix `k[to][from]` written out from the rate law.
pub fn oracle_rates(spec: &EngineSpec<f64>, baths: &BathSet<f64>, x: f64) -> [[f64; 3]; 3] {
    let e = levels(spec, x);
    let mut k = [[0.0; 3]; 3];
    let mut thermal = |a: usize, b: usize, beta: f64| {
        let (lo, hi) = if e[a] < e[b] { (a, b) } else { (b, a) };
        let w = e[hi] - e[lo];
        if w < 1e-9 {
            return;
        }
        let (down, up) = bose_pair(spec.gamma0, w, beta);
        k[lo][hi] = down;
        k[hi][lo] = up;
    };
    thermal(0, 2, beta(baths.t13));
    thermal(1, 2, beta(baths.t23));
    match baths.work_source {
        WorkSource::Thermal(t) => thermal(0, 1, beta(t)),
        WorkSource::Fixed(g) => {
            k[0][1] = g;
            k[1][0] = g;
        }
        WorkSource::Spontaneous => {
            let w = (e[1] - e[0]).abs();
            let g = if w < 1e-9 {
                0.0
            } else {
                spec.gamma0 * w.powi(3)
            };
            k[0][1] = g;
            k[1][0] = g;
        }
    }
    k
}

/// Null vector of the rate-equation generator by Gaussian elimination with
/// partial pivoting, with one row replaced by the normalization.
pub fn oracle_populations(k: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i == j {
                -(0..3).filter(|&l| l != i).map(|l| k[l][i]).sum::<f64>()
            } else {
                k[i][j]
            };
        }
    }
    m[2] = [1.0, 1.0, 1.0, 1.0];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..4 {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    [0, 1, 2].map(|i| m[i][3] / m[i][i])
}

/// Populations with `p1` fixed to one and the balance equations of levels 2
/// and 3 solved by Cramer's rule. Every term is a product of rates, so tiny
/// populations keep their relative accuracy on stiff networks where
/// elimination loses them.
pub fn oracle_populations_stiff(k: &[[f64; 3]; 3]) -> [f64; 3] {
    // -(k01 + k21) p2 + k12 p3 = -k10
    //  k21 p2 - (k02 + k12) p3 = -k20
    let a11 = k[0][1] + k[2][1];
    let a22 = k[0][2] + k[1][2];
    // a11 a22 - k12 k21 with the cancelling product removed.
    let det = k[0][1] * k[0][2] + k[0][1] * k[1][2] + k[2][1] * k[0][2];
    let p2 = (k[1][0] * a22 + k[1][2] * k[2][0]) / det;
    let p3 = (a11 * k[2][0] + k[2][1] * k[1][0]) / det;
    let z = 1.0 + p2 + p3;
    [1.0 / z, p2 / z, p3 / z]
}

/// `(J12, J13, J23)` from populations and the flux definition.
pub fn oracle_currents(spec: &EngineSpec<f64>, baths: &BathSet<f64>, x: f64) -> (f64, f64, f64) {
    let k = oracle_rates(spec, baths, x);
    let p = oracle_populations_stiff(&k);
    let e = levels(spec, x);
    let f = |i: usize, j: usize| (k[i][j] * p[j] - k[j][i] * p[i]) * (e[i] - e[j]);
    (f(0, 1), f(0, 2), f(1, 2))
}

/// Rounding bound of each flux difference in [`oracle_currents`].
pub fn oracle_current_rounding(
    spec: &EngineSpec<f64>,
    baths: &BathSet<f64>,
    x: f64,
) -> (f64, f64, f64) {
    let k = oracle_rates(spec, baths, x);
    let p = oracle_populations_stiff(&k);
    let e = levels(spec, x);
    let f = |i: usize, j: usize| {
        8.0 * f64::EPSILON * (k[i][j] * p[j] + k[j][i] * p[i]) * (e[i] - e[j]).abs()
    };
    (f(0, 1), f(0, 2), f(1, 2))
}

/// Coefficients of `y(x) = a x^2 + b x + c`.
pub fn oracle_abc(spec: &EngineSpec<f64>, theta: f64) -> (f64, f64, f64) {
    let e2 = spec.levels[1] - spec.levels[0];
    let e3 = spec.levels[2] - spec.levels[0];
    let g2 = spec.couplings[1] - spec.couplings[0];
    let g3 = spec.couplings[2] - spec.couplings[0];
    (
        (theta - 1.0) * g2 * g3 + g2 * g2,
        (theta - 1.0) * (e2 * g3 + g2 * e3) + 2.0 * g2 * e2,
        (theta - 1.0) * e3 * e2 + e2 * e2,
    )
}

/// `-ê2(x)[(1 - theta) ê3(x) - ê2(x)]` from shifted levels.
pub fn oracle_y(spec: &EngineSpec<f64>, theta: f64, x: f64) -> f64 {
    let e = levels(spec, x);
    let (e2, e3) = (e[1] - e[0], e[2] - e[0]);
    -e2 * ((1.0 - theta) * e3 - e2)
}

pub fn oracle_discriminant(spec: &EngineSpec<f64>, theta: f64) -> f64 {
    let e2 = spec.levels[1] - spec.levels[0];
    let e3 = spec.levels[2] - spec.levels[0];
    let g2 = spec.couplings[1] - spec.couplings[0];
    let g3 = spec.couplings[2] - spec.couplings[0];
    // e2 g3 - g2 e3 with the rounding of g2 e3 recovered by a fused multiply-add.
    let w = g2 * e3;
    let cross = e2.mul_add(g3, -w) + (-g2).mul_add(e3, w);
    ((1.0 - theta) * cross).powi(2)
}

/// Random full-rank density matrix `G G^† / tr` from a complex Ginibre `G`.
pub fn haar_mixed_state(r: &mut ChaCha8Rng) -> [[Complex64; 3]; 3] {
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for row in &mut g {
        for z in row.iter_mut() {
            *z = Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal));
        }
    }
    let mut rho = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            rho[i][j] = (0..3).map(|k| g[i][k] * g[j][k].conj()).sum();
        }
    }
    let tr: f64 = (0..3).map(|i| rho[i][i].re).sum();
    for row in &mut rho {
        for z in row.iter_mut() {
            *z /= tr;
        }
    }
    rho
}

/// Relative L2 distance of two sampled curves.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// `exp(-(x - mu)^2 / 2 s^2) / sqrt(2 pi s^2)`.
pub fn gaussian(x: f64, mu: f64, s: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt()
}

/// `J12` from the probability flux on the 1-3 edge. In a single-cycle
/// network the same flux runs through every edge, and routing it through the
/// thermal edge avoids the cancellation `p1 - p2` suffers when the work
/// source equalizes the lower pair.
pub fn oracle_j12(spec: &EngineSpec<f64>, baths: &BathSet<f64>, x: f64) -> f64 {
    let k = oracle_rates(spec, baths, x);
    let p = oracle_populations_stiff(&k);
    let e = levels(spec, x);
    let flux_3_to_1 = k[0][2] * p[2] - k[2][0] * p[0];
    // The 3 -> 1 flux continues as 1 -> 2; J12 = (flux 1 -> 2) (e2 - e1).
    flux_3_to_1 * (e[1] - e[0])
}

/// Position of the largest `-J12` on `[lo, hi]` by three nested uniform
/// scans, each zooming onto the two cells around the previous best point.
pub fn dense_argmax_power(
    spec: &EngineSpec<f64>,
    baths: &BathSet<f64>,
    lo: f64,
    hi: f64,
    points: usize,
) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f64::NEG_INFINITY);
    for _ in 0..3 {
        let h = (b - a) / (points - 1) as f64;
        for k in 0..points {
            let x = a + h * k as f64;
            let p = -oracle_j12(spec, baths, x);
            if p > best.1 {
                best = (x, p);
            }
        }
        a = (best.0 - h).max(lo);
        b = (best.0 + h).min(hi);
    }
    best
}
