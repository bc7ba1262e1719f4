//! Deterministic synthetic trajectories with closed-form energies and forces.
//!
//! Molecules vibrate quasi-periodically around a reference geometry in which
//! every atom pair sits at the minimum of its own Morse well, so energies are
//! anharmonic and forces are analytic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Frame, Species, Trajectory};

/// Pairs closer than this in the reference geometry get a stiff bond.
const BOND_LENGTH: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Morse {
    /// Well depth, eV.
    pub depth: f64,
    /// Inverse width, 1/Å.
    pub a: f64,
    /// Equilibrium distance, Å.
    pub r0: f64,
}

impl Morse {
    /// `D (1 - e^{-a (r - r0)})^2`.
    pub fn energy(&self, r: f64) -> f64 {
        let x = 1.0 - (-self.a * (r - self.r0)).exp();
        self.depth * x * x
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let e = (-self.a * (r - self.r0)).exp();
        2.0 * self.depth * self.a * (1.0 - e) * e
    }
}

/// Every atom pair joined by a Morse spring resting at its reference distance.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseNetwork {
    pub species: Vec<Species>,
    pub reference: Vec<[f64; 3]>,
    pub springs: Vec<(usize, usize, Morse)>,
}

impl MorseNetwork {
    pub fn new(species: Vec<Species>, reference: Vec<[f64; 3]>) -> Self {
        let mut springs = Vec::new();
        for i in 0..reference.len() {
            for j in i + 1..reference.len() {
                let r0 = distance(reference[i], reference[j]);
                let well =
                    if r0 < BOND_LENGTH { Morse { depth: 4.0, a: 2.0, r0 } } else { Morse { depth: 0.5, a: 1.5, r0 } };
                springs.push((i, j, well));
            }
        }
        Self { species, reference, springs }
    }

    pub fn energy(&self, positions: &[[f64; 3]]) -> f64 {
        self.springs.iter().map(|(i, j, m)| m.energy(distance(positions[*i], positions[*j]))).sum()
    }

    pub fn forces(&self, positions: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let mut f = vec![[0.0; 3]; positions.len()];
        for (i, j, m) in &self.springs {
            let r = distance(positions[*i], positions[*j]);
            let dv = m.derivative(r);
            for u in 0..3 {
                let g = dv * (positions[*i][u] - positions[*j][u]) / r;
                f[*i][u] -= g;
                f[*j][u] += g;
            }
        }
        f
    }

    pub fn frame(&self, positions: Vec<[f64; 3]>, source_index: u64) -> Frame {
        Frame {
            species: self.species.clone(),
            energy: self.energy(&positions),
            forces: self.forces(&positions),
            positions,
            source_index,
        }
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Motion settings for [`vibrating_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub frames: usize,
    /// Per-atom displacement amplitude of each mode, Å.
    pub amplitude: f64,
    /// Fractional growth of all interatomic spacings over the trajectory.
    pub drift: f64,
    pub seed: u64,
}

/// Frequencies in radians per frame; mutually incommensurate.
#[allow(clippy::approx_constant)]
const MODE_FREQUENCIES: [f64; 4] = [0.131, 0.131 * 1.414_213_56, 0.131 * 1.732_050_81, 0.131 * 2.236_067_98];

/// Reference geometry scaled by `1 + drift * t / T` plus a sum of
/// quasi-periodic modes with seeded random directions and phases.
pub fn vibrating_trajectory(molecule_id: &str, network: &MorseNetwork, motion: Motion) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(motion.seed);
    let n = network.reference.len();
    let modes: Vec<(Vec<[f64; 3]>, f64)> = MODE_FREQUENCIES
        .iter()
        .map(|_| {
            let dirs = (0..n)
                .map(|_| {
                    let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
                    [v[0] / len, v[1] / len, v[2] / len]
                })
                .collect();
            (dirs, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let frames = (0..motion.frames)
        .map(|t| {
            let scale = 1.0 + motion.drift * t as f64 / motion.frames.max(1) as f64;
            let positions = (0..n)
                .map(|i| {
                    let mut p = network.reference[i].map(|x| x * scale);
                    for ((dirs, phase), w) in modes.iter().zip(MODE_FREQUENCIES) {
                        let s = motion.amplitude * (w * t as f64 + phase).sin();
                        for u in 0..3 {
                            p[u] += s * dirs[i][u];
                        }
                    }
                    p
                })
                .collect();
            network.frame(positions, t as u64)
        })
        .collect();
    Trajectory { molecule_id: molecule_id.to_string(), frames }
}

/// Bent H-O-H.
pub fn triatomic() -> MorseNetwork {
    let angle = 104.5f64.to_radians();
    MorseNetwork::new(
        vec![Species::O, Species::H, Species::H],
        vec![[0.0, 0.0, 0.0], [0.96, 0.0, 0.0], [0.96 * angle.cos(), 0.96 * angle.sin(), 0.0]],
    )
}

/// Methoxy-like C, O and three H.
pub fn pentatomic() -> MorseNetwork {
    MorseNetwork::new(
        vec![Species::C, Species::O, Species::H, Species::H, Species::H],
        vec![[0.0, 0.0, 0.0], [1.36, 0.0, 0.0], [-0.36, 1.03, 0.0], [-0.36, -0.51, 0.89], [-0.36, -0.51, -0.89]],
    )
}

/// 2000-frame anharmonic triatomic vibration.
pub fn anharmonic_triatomic(seed: u64) -> Trajectory {
    vibrating_trajectory("tri", &triatomic(), Motion { frames: 2000, amplitude: 0.05, drift: 0.0, seed })
}

/// Triatomic whose spacings grow linearly with time.
pub fn drifting_triatomic(frames: usize, drift: f64, seed: u64) -> Trajectory {
    vibrating_trajectory("drift", &triatomic(), Motion { frames, amplitude: 0.03, drift, seed })
}

/// The 1000-frame five-atom trajectory shipped as the demo dataset.
pub fn bundled_trajectory() -> Trajectory {
    vibrating_trajectory("syn", &pentatomic(), Motion { frames: 1000, amplitude: 0.04, drift: 0.0, seed: 7 })
}

/// `E = (r - 1)^2` H-H dimer along a fixed axis, with `r` spread over
/// `[r_min, r_max]` by a golden-ratio sequence.
pub fn quadratic_dimer(frames: usize, r_min: f64, r_max: f64) -> Trajectory {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let frames = (0..frames)
        .map(|t| {
            let r = r_min + (r_max - r_min) * ((t as f64 + 0.5) * GOLDEN).fract();
            quadratic_dimer_frame(r, t as u64)
        })
        .collect();
    Trajectory { molecule_id: "dimer".into(), frames }
}

pub fn quadratic_dimer_frame(r: f64, source_index: u64) -> Frame {
    let pull = 2.0 * (r - 1.0);
    Frame {
        species: vec![Species::H, Species::H],
        positions: vec![[0.0; 3], [r, 0.0, 0.0]],
        energy: (r - 1.0) * (r - 1.0),
        forces: vec![[pull, 0.0, 0.0], [-pull, 0.0, 0.0]],
        source_index,
    }
}

/// Uniformly distributed rotation matrix, from a normalized Gaussian quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let normal = rand_distr::StandardNormal;
    let q: [f64; 4] = [rng.sample(normal), rng.sample(normal), rng.sample(normal), rng.sample(normal)];
    let len = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / len);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Random positions for `species` in a cube of side `box_len`, every pair at
/// least `min_distance` apart. Energy and forces are zero.
pub fn random_cluster(species: &[Species], box_len: f64, min_distance: f64, rng: &mut impl Rng) -> Frame {
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(species.len());
    while positions.len() < species.len() {
        let p: [f64; 3] = [rng.gen_range(0.0..box_len), rng.gen_range(0.0..box_len), rng.gen_range(0.0..box_len)];
        let clear = positions.iter().all(|q| {
            let d2: f64 = (0..3).map(|u| (p[u] - q[u]).powi(2)).sum();
            d2 >= min_distance * min_distance
        });
        if clear {
            positions.push(p);
        }
    }
    Frame { species: species.to_vec(), forces: vec![[0.0; 3]; species.len()], positions, energy: 0.0, source_index: 0 }
}
