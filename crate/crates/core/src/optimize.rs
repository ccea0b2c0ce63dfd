//! One-dimensional maximization on a bracket.

use crate::scalar::Real;

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `xtol`. Returns `(x, f(x))`.
///
/// Assumes `f` is unimodal on the bracket; otherwise a local maximum is
/// returned.
pub fn golden_section_max<T: Real, F>(mut f: F, lo: T, hi: T, xtol: T, max_iter: usize) -> (T, T)
where
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    // 1/phi
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` on `[lo, hi]`: a uniform scan over `scan_points` interior
/// points selects the best cell, which golden-section search then refines.
/// Guards against `f` having several local maxima at scales coarser than the
/// scan spacing.
pub fn scan_then_golden<T: Real, F>(mut f: F, lo: T, hi: T, scan_points: usize, xtol: T) -> (T, T)
where
    F: FnMut(T) -> T,
{
    let n = scan_points.max(3);
    let step = (hi - lo) / T::from_usize(n + 1).unwrap();
    let mut best = (lo + step, T::neg_infinity());
    let mut best_k = 1;
    for k in 1..=n {
        let x = lo + step * T::from_usize(k).unwrap();
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let left = lo + step * T::from_usize(best_k - 1).unwrap();
    let right = lo + step * T::from_usize(best_k + 1).unwrap();
    let refined = golden_section_max(&mut f, left, right, xtol, 500);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}
