use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on an interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Rule with `order` nodes on `[-1, 1]`.
    ///
    /// Nodes are found by Newton iteration on `P_n` in double precision and
    /// then cast, so single-precision rules are correctly rounded.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes: nodes.into_iter().map(T::lit).collect(), weights: weights.into_iter().map(T::lit).collect() }
    }

    /// Rule mapped onto `[a, b]`.
    pub fn on_interval(order: usize, a: T, b: T) -> Self {
        let base = Self::new(order);
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        Self {
            nodes: base.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: base.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::<f64>::new(8);
        // exact up to degree 15
        let integral = rule.integrate(|x| x.powi(14));
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        let odd = rule.integrate(|x| x.powi(13));
        assert!(odd.abs() < 1e-15);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn interval_mapping() {
        let rule = GaussLegendre::<f64>::on_interval(16, 0.0, 5.0);
        let integral = rule.integrate(|x| x * x);
        assert!((integral - 125.0 / 3.0).abs() < 1e-11);
        let gauss = rule.integrate(|x| (-x * x).exp());
        let expected = std::f64::consts::PI.sqrt() / 2.0 * (1.0 - 1.537_459_794_428_035e-12);
        assert!((gauss - expected).abs() < 1e-6);
    }

    #[test]
    fn odd_order_has_center_node() {
        let rule = GaussLegendre::<f32>::new(5);
        assert_eq!(rule.nodes[2], 0.0);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-6);
    }
}
