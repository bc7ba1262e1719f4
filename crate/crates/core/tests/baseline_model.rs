use trajbench_core::baseline::{central_difference_forces, net_force, BaselineError, RidgeSoapModel, TrainConfig};
use trajbench_core::dataset::{Frame, Species};
use trajbench_core::soap::SoapError;
use trajbench_core::synthetic::{anharmonic_triatomic, quadratic_dimer, quadratic_dimer_frame, Morse};

fn refs(frames: &[Frame]) -> Vec<&Frame> {
    frames.iter().collect()
}

fn dimer_model(lambda: f64) -> RidgeSoapModel {
    let traj = quadratic_dimer(50, 0.8, 1.2);
    RidgeSoapModel::fit(&refs(&traj.frames), &TrainConfig { ridge_lambda: lambda, ..TrainConfig::default() }).unwrap()
}

fn weight_norm(model: &RidgeSoapModel) -> f64 {
    model.weights().values().flatten().map(|w| w * w).sum::<f64>().sqrt()
}

fn triatomic_model() -> (RidgeSoapModel, Vec<Frame>) {
    let traj = anharmonic_triatomic(3);
    let train: Vec<&Frame> = traj.frames.iter().step_by(20).take(60).collect();
    let model = RidgeSoapModel::fit(&train, &TrainConfig::default()).unwrap();
    (model, traj.frames[1900..1905].to_vec())
}

#[test]
fn huge_ridge_penalty_shrinks_weights() {
    let loose = weight_norm(&dimer_model(1e-8));
    let tight = weight_norm(&dimer_model(1e12));
    assert!(loose > 0.0);
    assert!(tight < 1e-6 * loose, "{tight:e} vs {loose:e}");
}

#[test]
fn energies_explained_by_composition_leave_zero_weights() {
    let frames: Vec<Frame> = (0..10)
        .map(|t| {
            let mut f = quadratic_dimer_frame(0.9 + 0.02 * t as f64, t);
            f.energy = -2.0;
            f.forces = vec![[0.0; 3]; 2];
            f
        })
        .collect();
    let model = RidgeSoapModel::fit(&refs(&frames), &TrainConfig::default()).unwrap();
    assert!(weight_norm(&model) < 1e-9, "weights {:e}", weight_norm(&model));
    assert!((model.reference_energies()[&Species::H] + 1.0).abs() < 1e-12);
    let p = model.predict(&quadratic_dimer_frame(1.07, 0)).unwrap();
    assert!((p.energy + 2.0).abs() < 1e-12);
    assert!(p.forces.iter().flatten().all(|v| v.abs() < 1e-9));
}

#[test]
fn quadratic_dimer_is_learned_to_a_few_mev() {
    let traj = quadratic_dimer(60, 0.8, 1.2);
    let (train, test) = traj.frames.split_at(50);
    let model = RidgeSoapModel::fit(&refs(train), &TrainConfig::default()).unwrap();
    let mut energy_err = 0.0;
    let mut force_err = 0.0;
    for f in test {
        let p = model.predict(f).unwrap();
        energy_err += (p.energy - f.energy).abs() / 2.0;
        for (a, b) in p.forces.iter().zip(&f.forces) {
            force_err += (0..3).map(|u| (a[u] - b[u]).abs()).sum::<f64>();
        }
    }
    let energy_mae_mev = 1000.0 * energy_err / test.len() as f64;
    let force_mae_mev = 1000.0 * force_err / (6 * test.len()) as f64;
    assert!(energy_mae_mev < 10.0, "energy MAE {energy_mae_mev} meV/atom");
    assert!(force_mae_mev < 10.0, "force MAE {force_mae_mev} meV/Å");
}

#[test]
fn isolated_atoms_get_reference_energy_and_no_force() {
    let model = dimer_model(1e-8);
    let far = Frame {
        species: vec![Species::H, Species::H],
        positions: vec![[0.0; 3], [20.0, 0.0, 0.0]],
        energy: 0.0,
        forces: vec![[0.0; 3]; 2],
        source_index: 0,
    };
    let p = model.predict(&far).unwrap();
    let c_h = model.reference_energies()[&Species::H];
    assert!((p.energy - 2.0 * c_h).abs() < 1e-12);
    assert!(p.forces.iter().flatten().all(|v| v.abs() < 1e-12));
}

#[test]
fn unseen_species_is_an_error() {
    let model = dimer_model(1e-8);
    let mut water = quadratic_dimer_frame(1.0, 0);
    water.species[0] = Species::O;
    match model.predict(&water) {
        Err(BaselineError::UnseenSpecies(s)) | Err(BaselineError::Soap(SoapError::UnknownSpecies(s))) => {
            assert_eq!(s, Species::O)
        }
        other => panic!("expected an unseen-species error, got {other:?}"),
    }
}

#[test]
fn net_force_vanishes() {
    let (model, frames) = triatomic_model();
    let h = model.config().fd_step;
    for f in &frames {
        let p = model.predict(f).unwrap();
        let scale = p.forces.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let net = net_force(&p.forces);
        assert!(net.iter().all(|v| v.abs() <= 10.0 * h * h * scale.max(1.0)), "{net:?}");
    }
}

#[test]
fn incremental_differences_match_full_recomputation() {
    let (model, frames) = triatomic_model();
    let h = model.config().fd_step;
    for f in &frames {
        let fast = model.predict(f).unwrap().forces;
        let naive = central_difference_forces(&f.positions, h, |p| model.energy_at(p, &f.species)).unwrap();
        for (a, b) in fast.iter().zip(&naive) {
            for u in 0..3 {
                assert!((a[u] - b[u]).abs() < 1e-9, "{a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn model_file_round_trips_bit_exactly() {
    let (model, frames) = triatomic_model();
    let text = model.to_json();
    let back = RidgeSoapModel::from_json(&text).unwrap();
    assert_eq!(back.weights(), model.weights());
    assert_eq!(back.reference_energies(), model.reference_energies());
    assert_eq!(back.to_json(), text);
    for f in &frames {
        let (a, b) = (model.predict(f).unwrap(), back.predict(f).unwrap());
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.forces, b.forces);
    }
}

#[test]
fn fitting_is_deterministic_across_thread_counts() {
    let traj = anharmonic_triatomic(3);
    let train: Vec<&Frame> = traj.frames.iter().step_by(25).take(40).collect();
    let fit = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| RidgeSoapModel::fit(&train, &TrainConfig::default()).unwrap().to_json())
    };
    let once = fit(1);
    assert_eq!(once, fit(1));
    assert_eq!(once, fit(3));
}

fn slope(steps: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[test]
fn finite_difference_error_is_second_order_on_a_morse_dimer() {
    let morse = Morse { depth: 4.0, a: 2.0, r0: 1.0 };
    let r = 1.13;
    let exact = -morse.derivative(r);
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let f = central_difference_forces(&[[0.0; 3], [r, 0.0, 0.0]], h, |p| {
                Ok::<_, ()>(morse.energy(p[1][0] - p[0][0]))
            })
            .unwrap();
            (f[1][0] - exact).abs()
        })
        .collect();
    let s = slope(&steps, &errors);
    assert!((1.8..=2.2).contains(&s), "slope {s}, errors {errors:?}");
}

#[test]
fn baseline_forces_converge_at_second_order() {
    let model = dimer_model(1e-8);
    let frame = quadratic_dimer_frame(1.07, 0);
    let force = |h: f64| model.predict_with_step(&frame, h).unwrap().forces[1][0];
    let reference = (4.0 * force(1.25e-4) - force(2.5e-4)) / 3.0;
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let errors: Vec<f64> = steps.iter().map(|&h| (force(h) - reference).abs()).collect();
    let s = slope(&steps, &errors);
    assert!((1.8..=2.2).contains(&s), "slope {s}, errors {errors:?}");
    let closed_form = frame.forces[1][0];
    assert!((force(1e-3) - closed_form).abs() < 5e-3);
}
