use crate::scalar::pairwise_sum;

/// `f[k][u] = -(E(x + h e_ku) - E(x - h e_ku)) / (2h)` for any energy function.
pub fn central_difference_forces<F, E>(positions: &[[f64; 3]], h: f64, mut energy: F) -> Result<Vec<[f64; 3]>, E>
where
    F: FnMut(&[[f64; 3]]) -> Result<f64, E>,
{
    let mut moved = positions.to_vec();
    let mut forces = vec![[0.0; 3]; positions.len()];
    for k in 0..positions.len() {
        for u in 0..3 {
            moved[k][u] = positions[k][u] + h;
            let plus = energy(&moved)?;
            moved[k][u] = positions[k][u] - h;
            let minus = energy(&moved)?;
            moved[k][u] = positions[k][u];
            forces[k][u] = -(plus - minus) / (2.0 * h);
        }
    }
    Ok(forces)
}

/// Sum of the force vectors over atoms.
pub fn net_force(forces: &[[f64; 3]]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (u, o) in out.iter_mut().enumerate() {
        let column: Vec<f64> = forces.iter().map(|f| f[u]).collect();
        *o = pairwise_sum(&column);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratics() {
        let f = central_difference_forces(&[[0.3, -0.2, 1.0]], 1e-3, |p| {
            Ok::<_, ()>(p[0][0] * p[0][0] + 2.0 * p[0][1] * p[0][1] - p[0][2])
        })
        .unwrap();
        assert!((f[0][0] + 0.6).abs() < 1e-12);
        assert!((f[0][1] - 0.8).abs() < 1e-12);
        assert!((f[0][2] - 1.0).abs() < 1e-12);
    }
}
