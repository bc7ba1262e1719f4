//! Exponentially scaled modified spherical Bessel functions of the first kind,
//! `e^{-x} i_l(x)`, for all orders `0..=l_max` at once.

use crate::scalar::Scalar;

/// Arguments above this switch from the power series to upward recurrence.
fn series_limit(l_max: usize) -> f64 {
    (2 * l_max + 10).max(20) as f64
}

/// Fills `out[l] = e^{-x} i_l(x)` for `l = 0..out.len()`. `x` must be `>= 0`.
pub fn scaled_modified_spherical_bessel<T: Scalar>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    let l_max = out.len() - 1;
    if x == T::zero() {
        out[0] = T::one();
        for v in &mut out[1..] {
            *v = T::zero();
        }
        return;
    }
    debug_assert!(x > T::zero(), "argument must be non-negative");

    if x.to_f64_lossy() > series_limit(l_max) {
        let e2 = (-(x + x)).exp();
        let two_x = x + x;
        out[0] = (T::one() - e2) / two_x;
        if l_max >= 1 {
            out[1] = ((T::one() + e2) - (T::one() - e2) / x) / two_x;
        }
        for l in 1..l_max {
            let factor = T::from_usize_lossy(2 * l + 1) / x;
            out[l + 1] = out[l - 1] - factor * out[l];
        }
        return;
    }

    // Series for the two highest orders, then the (stable) downward recurrence
    // i_{l-1} = i_{l+1} + (2l+1)/x i_l.
    let scale = (-x).exp();
    out[l_max] = scale * series(x, l_max);
    if l_max == 0 {
        return;
    }
    out[l_max - 1] = scale * series(x, l_max - 1);
    for l in (1..l_max).rev() {
        let factor = T::from_usize_lossy(2 * l + 1) / x;
        out[l - 1] = out[l + 1] + factor * out[l];
    }
}

/// Unscaled power series for `i_l(x)`.
fn series<T: Scalar>(x: T, l: usize) -> T {
    let mut prefactor = T::one();
    for k in 1..=l {
        prefactor *= x / T::from_usize_lossy(2 * k + 1);
    }
    let half_x2 = x * x / T::lit(2.0);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..1000 {
        term *= half_x2 / (T::from_usize_lossy(k) * T::from_usize_lossy(2 * l + 2 * k + 1));
        sum += term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    prefactor * sum
}
