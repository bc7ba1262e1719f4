//! Real spherical harmonics without the Condon–Shortley phase.
//!
//! Values are stored at index `l*l + l + m` for `m = -l..=l`. Cosine-type
//! functions use positive `m`, sine-type functions negative `m`. Evaluation
//! uses Cartesian components of the unit vector so the poles need no special
//! casing.

use crate::scalar::Scalar;

pub const MAX_DEGREE: usize = 9;

#[inline]
pub fn lm_index(l: usize, m: isize) -> usize {
    (l * l + l).wrapping_add_signed(m)
}

#[derive(Debug, Clone)]
pub struct RealSphericalHarmonics<T> {
    l_max: usize,
    /// sqrt((2l+1)/(4π) (l-m)!/(l+m)!), with the extra sqrt(2) folded in for m > 0.
    norms: Vec<T>,
}

impl<T: Scalar> RealSphericalHarmonics<T> {
    pub fn new(l_max: usize) -> Self {
        assert!(l_max <= MAX_DEGREE, "l_max above {MAX_DEGREE}");
        let mut norms = Vec::with_capacity((l_max + 1) * (l_max + 2) / 2);
        for l in 0..=l_max {
            for m in 0..=l {
                let mut ratio = 1.0f64;
                for k in (l - m + 1)..=(l + m) {
                    ratio /= k as f64;
                }
                let mut n = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt();
                if m > 0 {
                    n *= std::f64::consts::SQRT_2;
                }
                norms.push(T::lit(n));
            }
        }
        Self { l_max, norms }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn len(&self) -> usize {
        (self.l_max + 1) * (self.l_max + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn norm(&self, l: usize, m: usize) -> T {
        self.norms[l * (l + 1) / 2 + m]
    }

    /// Evaluates all harmonics at the unit vector `dir` into `out`.
    pub fn compute(&self, dir: [T; 3], out: &mut [T]) {
        assert!(out.len() >= self.len());
        let [x, y, z] = dir;
        let l_max = self.l_max;

        // cos(mφ) sin^m θ and sin(mφ) sin^m θ
        let mut c = [T::zero(); MAX_DEGREE + 1];
        let mut s = [T::zero(); MAX_DEGREE + 1];
        c[0] = T::one();
        for m in 0..l_max {
            c[m + 1] = x * c[m] - y * s[m];
            s[m + 1] = x * s[m] + y * c[m];
        }

        for m in 0..=l_max {
            // reduced associated Legendre Q_l^m = P_l^m / sin^m θ
            let mut q_mm = T::one();
            for k in 1..=m {
                q_mm *= T::from_usize_lossy(2 * k - 1);
            }
            let mut q_prev = T::zero();
            let mut q_curr = q_mm;
            for l in m..=l_max {
                if l == m + 1 {
                    q_prev = q_curr;
                    q_curr = z * T::from_usize_lossy(2 * m + 1) * q_mm;
                } else if l > m + 1 {
                    let next = (T::from_usize_lossy(2 * l - 1) * z * q_curr - T::from_usize_lossy(l + m - 1) * q_prev)
                        / T::from_usize_lossy(l - m);
                    q_prev = q_curr;
                    q_curr = next;
                }
                let base = self.norm(l, m) * q_curr;
                if m == 0 {
                    out[lm_index(l, 0)] = base;
                } else {
                    out[lm_index(l, m as isize)] = base * c[m];
                    out[lm_index(l, -(m as isize))] = base * s[m];
                }
            }
        }
    }
}
