//! Orthonormal Gaussian radial basis on `[0, r_cut]` with weight `r^2`.
//!
//! `n_max` Gaussians are centered at equispaced points of `[0, r_cut]` and
//! orthonormalized symmetrically, `R = S^{-1/2} g`, where `S` is their overlap
//! matrix evaluated with the same quadrature used for the density integrals.

use crate::linalg::inverse_sqrt_psd;
use crate::scalar::Scalar;
use crate::special::GaussLegendre;

const EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RadialBasis<T> {
    n_max: usize,
    centers: Vec<T>,
    /// Width of each primitive Gaussian.
    width: T,
    /// `S^{-1/2}`, row-major `n_max x n_max`.
    transform: Vec<T>,
    nodes: Vec<T>,
    /// `R_n(r_q) * w_q * r_q^2`, row-major `n_max x order`.
    weighted: Vec<T>,
}

impl<T: Scalar> RadialBasis<T> {
    pub fn new(n_max: usize, r_cut: T, quadrature_order: usize) -> Self {
        let centers: Vec<T> = if n_max == 1 {
            vec![T::zero()]
        } else {
            (0..n_max).map(|k| r_cut * T::from_usize_lossy(k) / T::from_usize_lossy(n_max - 1)).collect()
        };
        let width = r_cut / T::from_usize_lossy(n_max);
        let rule = GaussLegendre::on_interval(quadrature_order, T::zero(), r_cut);
        let order = rule.len();

        let primitive = |k: usize, r: T| {
            let d = (r - centers[k]) / width;
            (-(d * d) / T::lit(2.0)).exp()
        };
        let mut overlap = vec![T::zero(); n_max * n_max];
        for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
            let r2w = r * r * w;
            for a in 0..n_max {
                let ga = primitive(a, r);
                for b in 0..n_max {
                    overlap[a * n_max + b] += r2w * ga * primitive(b, r);
                }
            }
        }
        let transform = inverse_sqrt_psd(&overlap, n_max, T::lit(EIGENVALUE_FLOOR));

        let mut weighted = vec![T::zero(); n_max * order];
        for (q, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let prims: Vec<T> = (0..n_max).map(|k| primitive(k, r)).collect();
            for n in 0..n_max {
                let mut value = T::zero();
                for k in 0..n_max {
                    value += transform[n * n_max + k] * prims[k];
                }
                weighted[n * order + q] = value * w * r * r;
            }
        }
        Self { n_max, centers, width, transform, nodes: rule.nodes, weighted }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Row `n` of the weighted basis table, aligned with [`Self::nodes`].
    pub fn weighted_row(&self, n: usize) -> &[T] {
        let order = self.nodes.len();
        &self.weighted[n * order..(n + 1) * order]
    }

    /// `R_n(r)` for all `n`.
    pub fn evaluate(&self, r: T) -> Vec<T> {
        let prims: Vec<T> = self
            .centers
            .iter()
            .map(|&c| {
                let d = (r - c) / self.width;
                (-(d * d) / T::lit(2.0)).exp()
            })
            .collect();
        (0..self.n_max)
            .map(|n| {
                let mut v = T::zero();
                for (k, p) in prims.iter().enumerate() {
                    v += self.transform[n * self.n_max + k] * *p;
                }
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal_under_its_quadrature() {
        let basis = RadialBasis::<f64>::new(8, 5.0, 64);
        let order = basis.nodes().len();
        for a in 0..8 {
            for b in 0..8 {
                let mut s = 0.0;
                for q in 0..order {
                    let r = basis.nodes()[q];
                    s += basis.weighted_row(a)[q] * basis.evaluate(r)[b];
                }
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-9, "({a},{b}) = {s}");
            }
        }
    }

    #[test]
    fn single_function_basis() {
        let basis = RadialBasis::<f64>::new(1, 3.0, 16);
        let order = basis.nodes().len();
        let norm: f64 = (0..order).map(|q| basis.weighted_row(0)[q] * basis.evaluate(basis.nodes()[q])[0]).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
