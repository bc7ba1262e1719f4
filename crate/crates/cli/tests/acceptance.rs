//! Prints one PASS/FAIL line per acceptance criterion and fails if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajbench::run::{run, RunConfig, Suite};
use trajbench::store::{synthetic_trajectories, write_store};
use trajbench_core::baseline::{central_difference_forces, net_force, RidgeSoapModel, TrainConfig};
use trajbench_core::dataset::{Frame, Species};
use trajbench_core::fixtures::{
    build_generalization_plans, fit_reference_energies, grid_scan_specs, rmd17_inventories,
};
use trajbench_core::metrics::{
    force_mae, FramePrediction, MetricRecord, PredictionBatch, FORCE_MAE_ALL, SOAP_SIMILARITY,
};
use trajbench_core::soap::{cosine_similarity, SoapCalculator};
use trajbench_core::synthetic::{quadratic_dimer, quadratic_dimer_frame, random_cluster, random_rotation};
use trajbench_core::SoapParamsF64;

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Context) -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Context {
    _dir: tempfile::TempDir,
    data: PathBuf,
    out: PathBuf,
}

impl Context {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        write_store(&data, &synthetic_trajectories()).unwrap();
        let out = dir.path().join("runs");
        Self { data, out, _dir: dir }
    }

    fn run(&self, name: &str, suite: Suite, molecule: &str, samples: Option<Vec<usize>>) -> Vec<MetricRecord> {
        let mut config = RunConfig::new(suite, self.data.clone(), self.out.join(name));
        config.molecule = Some(molecule.to_string());
        config.samples = samples;
        config.workers = 1;
        run(&config).unwrap().records
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn folder_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn fixture_determinism(ctx: &Context) -> Check {
    let started = Instant::now();
    ctx.run("det_a", Suite::SampleEfficiency, "syn", None);
    ctx.run("det_b", Suite::SampleEfficiency, "syn", None);
    let elapsed = started.elapsed();
    let (a, b) = (ctx.dir("det_a"), ctx.dir("det_b"));
    let fixtures = folder_bytes(&a.join("fixtures"));
    let same_fixtures = fixtures == folder_bytes(&b.join("fixtures"));
    let same_csv = fs::read(a.join("records.csv")).unwrap() == fs::read(b.join("records.csv")).unwrap();
    ensure(
        same_fixtures && same_csv && !fixtures.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "{} fixtures identical={same_fixtures}, records.csv identical={same_csv}, {:.1} s for two runs",
            fixtures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn grid_enumeration(_: &Context) -> Check {
    let specs = grid_scan_specs(&[1000]);
    let admissible = specs.iter().all(|s| s.start_frac + s.size_frac <= 0.9 + 1e-12);
    let distinct: std::collections::BTreeSet<String> = specs.iter().map(|s| s.geometry_id()).collect();
    ensure(
        specs.len() == 15 && distinct.len() == 15 && admissible,
        format!("{} geometries, {} distinct, all within the first 90%: {admissible}", specs.len(), distinct.len()),
    )
}

fn reference_regression(_: &Context) -> Check {
    let comp = |h: usize, c: usize| -> BTreeMap<Species, usize> { [(Species::H, h), (Species::C, c)].into() };
    let worked = fit_reference_energies(&[(comp(2, 1), -10.0), (comp(4, 1), -14.0), (comp(2, 2), -16.0)]).unwrap();
    let exact = worked.energies[&Species::H] == -2.0 && worked.energies[&Species::C] == -6.0;

    let species = [Species::H, Species::C, Species::N, Species::O];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c: Vec<f64> = species.iter().map(|_| rng.gen_range(-80.0..-0.5)).collect();
        let rows: Vec<_> = (0..12)
            .map(|_| {
                let counts: Vec<usize> = species.iter().map(|_| rng.gen_range(1..10)).collect();
                let e: f64 = counts.iter().zip(&c).map(|(n, cs)| *n as f64 * cs).sum();
                (species.iter().copied().zip(counts).collect::<BTreeMap<_, _>>(), e)
            })
            .collect();
        let fit = fit_reference_energies(&rows).unwrap();
        for (s, expected) in species.iter().zip(&c) {
            worst = worst.max(((fit.energies[s] - expected) / expected).abs());
        }
    }
    ensure(
        exact && worst <= 1e-10,
        format!("worked example exact={exact}, worst relative error on random designs {worst:.1e}"),
    )
}

fn raw_descriptor(calc: &SoapCalculator<f64>, frame: &Frame) -> Vec<f64> {
    let d = calc.frame_descriptor(frame).unwrap();
    d.vector.iter().map(|v| v * d.norm).collect()
}

fn max_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn soap_invariance(_: &Context) -> Check {
    let started = Instant::now();
    let species = [Species::C, Species::O, Species::H, Species::H, Species::N];
    let calc = SoapCalculator::new(SoapParamsF64::with_species(species)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut self_similar = true;
    for trial in 0..100 {
        let frame = random_cluster(&species, 3.0, 0.8, &mut rng);
        let rotation = random_rotation(&mut rng);
        let shift = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let mut order: Vec<usize> = (0..species.len()).collect();
        order.rotate_left(trial % species.len());
        let moved = frame.rotated(&rotation).translated(shift).permuted(&order);
        worst = worst.max(max_relative(&raw_descriptor(&calc, &frame), &raw_descriptor(&calc, &moved)));
        let d = calc.frame_descriptor(&frame).unwrap();
        self_similar &= cosine_similarity(&d, &d).unwrap() == 1.0;
    }
    let r_cut = calc.params().r_cut;
    let edge = |x: f64| Frame {
        species: vec![Species::H, Species::H, Species::O],
        positions: vec![[0.0; 3], [1.0, 0.0, 0.0], [x, 0.0, 0.0]],
        energy: 0.0,
        forces: vec![[0.0; 3]; 3],
        source_index: 0,
    };
    let crossing =
        max_relative(&raw_descriptor(&calc, &edge(r_cut - 1e-6)), &raw_descriptor(&calc, &edge(r_cut + 1e-6)));
    let elapsed = started.elapsed();
    ensure(
        worst <= 1e-8 && self_similar && crossing <= 1e-3 && elapsed < Duration::from_secs(60),
        format!(
            "worst change {worst:.1e}, self similarity exactly 1: {self_similar}, cutoff crossing {crossing:.1e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn quadrature_convergence(_: &Context) -> Check {
    let coefficients = |order: usize| {
        let params = SoapParamsF64 { quadrature_order: order, ..SoapParamsF64::with_species([Species::H]) };
        SoapCalculator::new(params)
            .unwrap()
            .expansion_coefficients(&[[0.0; 3], [1.3, 0.4, -0.7]], &[Species::H, Species::H], 0)
            .unwrap()
    };
    let change = max_relative(&coefficients(64), &coefficients(32));
    ensure(change <= 1e-9, format!("order 32 vs 64 relative difference {change:.1e}"))
}

fn log_log_slope(steps: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// The quadratic dimer tilted off the coordinate axes, so that its energy is
/// not quadratic in any single Cartesian coordinate.
fn tilted_dimer_force_slope() -> f64 {
    let r = 1.13;
    let u = [1.0 / 3f64.sqrt(); 3];
    let positions = [[0.0; 3], [r * u[0], r * u[1], r * u[2]]];
    let energy = |p: &[[f64; 3]]| -> Result<f64, ()> {
        let d: f64 = (0..3).map(|k| (p[1][k] - p[0][k]).powi(2)).sum::<f64>().sqrt();
        Ok((d - 1.0) * (d - 1.0))
    };
    let exact = -2.0 * (r - 1.0) * u[0];
    let steps = [2e-2, 1e-2, 5e-3, 2.5e-3];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| (central_difference_forces(&positions, h, energy).unwrap()[1][0] - exact).abs())
        .collect();
    log_log_slope(&steps, &errors)
}

fn baseline_forces(_: &Context) -> Check {
    let closed_form = tilted_dimer_force_slope();

    let traj = quadratic_dimer(50, 0.8, 1.2);
    let model = RidgeSoapModel::fit(&traj.frames.iter().collect::<Vec<_>>(), &TrainConfig::default()).unwrap();
    let frame = quadratic_dimer_frame(1.07, 0);
    let force = |h: f64| model.predict_with_step(&frame, h).unwrap().forces[1][0];
    let limit = (4.0 * force(1.25e-4) - force(2.5e-4)) / 3.0;
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let errors: Vec<f64> = steps.iter().map(|&h| (force(h) - limit).abs()).collect();
    let model_slope = log_log_slope(&steps, &errors);

    let h = model.config().fd_step;
    let mut worst_net: f64 = 0.0;
    for r in [0.85, 0.97, 1.13] {
        let mut tilted = quadratic_dimer_frame(r, 0);
        tilted.positions[1] = [r * 0.6, r * 0.8, 0.0];
        let p = model.predict(&tilted).unwrap();
        worst_net = worst_net.max(net_force(&p.forces).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let in_range = |s: f64| (1.8..=2.2).contains(&s);
    ensure(
        in_range(closed_form) && in_range(model_slope) && worst_net <= h * h,
        format!(
            "closed-form slope {closed_form:.3}, baseline slope {model_slope:.3}, largest net force {worst_net:.1e} (h^2 = {:.0e})",
            h * h
        ),
    )
}

fn force_value(records: &[MetricRecord], fixture: &str) -> f64 {
    records.iter().find(|r| r.fixture_id == fixture && r.metric == FORCE_MAE_ALL).unwrap().value.unwrap()
}

fn sample_efficiency_trend(ctx: &Context) -> Check {
    let started = Instant::now();
    let counts = [50, 100, 200, 400];
    let records = ctx.run("trend", Suite::SampleEfficiency, "tri", Some(counts.to_vec()));
    let maes: Vec<f64> = counts.iter().map(|n| force_value(&records, &format!("se_n{n}"))).collect();
    let within_band = maes.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let elapsed = started.elapsed();
    ensure(
        within_band && elapsed < Duration::from_secs(300),
        format!(
            "force MAE (meV/Å) at {counts:?}: {}, {:.1} s",
            maes.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn time_extrapolation_trend(ctx: &Context) -> Check {
    let records = ctx.run("extrapolation", Suite::TimeExtrapolation, "drift", Some(vec![100]));
    let find = |fixture: &str, metric: &str| {
        records.iter().find(|r| r.fixture_id == fixture && r.metric == metric).unwrap().value.unwrap()
    };
    let (early, late) = ("win_s0.00_w0.30_n100", "win_s0.60_w0.30_n100");
    let (mae_early, mae_late) = (find(early, FORCE_MAE_ALL), find(late, FORCE_MAE_ALL));
    let (sim_early, sim_late) = (find(early, SOAP_SIMILARITY), find(late, SOAP_SIMILARITY));
    ensure(
        mae_early > mae_late && sim_early < sim_late,
        format!(
            "start 0%: MAE {mae_early:.2} meV/Å, similarity {sim_early:.4}; start 60%: MAE {mae_late:.2} meV/Å, similarity {sim_late:.4}"
        ),
    )
}

fn metric_identity(_: &Context) -> Check {
    let pool = [Species::H, Species::C, Species::N, Species::O];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let atoms = rng.gen_range(2..10);
        let species: Vec<Species> = (0..atoms).map(|_| pool[rng.gen_range(0..4)]).collect();
        let frames = (0..rng.gen_range(1..15))
            .map(|_| {
                let mut forces = || -> Vec<[f64; 3]> {
                    (0..atoms)
                        .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                        .collect()
                };
                let (true_forces, pred_forces) = (forces(), forces());
                FramePrediction {
                    species: species.clone(),
                    true_energy: 0.0,
                    pred_energy: 0.0,
                    true_forces,
                    pred_forces,
                }
            })
            .collect();
        let batch = PredictionBatch::new("fx", "m", "mol", frames).unwrap();
        let overall = force_mae(&batch, None).unwrap();
        let (mut weighted, mut n) = (0.0, 0);
        for s in batch.species() {
            let r = force_mae(&batch, Some(s)).unwrap();
            weighted += r.value.unwrap() * r.atom_count as f64;
            n += r.atom_count;
        }
        let total = overall.value.unwrap();
        worst = worst.max(((weighted / n as f64 - total) / total).abs());
    }
    ensure(worst <= 1e-12, format!("worst relative gap over 200 random batches {worst:.1e}"))
}

fn cross_molecule_plans(_: &Context) -> Check {
    let plans = build_generalization_plans(&rmd17_inventories()).unwrap();
    let find = |b: &str| plans.iter().find(|p| p.train_build == b).unwrap();
    let ab = find("ab");
    let ab_ok = ab.excluded.contains(&"g".to_string()) && !ab.test_molecules.contains(&"g".to_string());
    let f = &find("f").test_molecules;
    ensure(
        plans.len() == 15 && ab_ok && f == &["d".to_string()],
        format!("{} plans; \"ab\" tests {:?}; \"f\" tests {:?}", plans.len(), ab.test_molecules, f),
    )
}

fn main() {
    let ctx = Context::new();
    let criteria: [Criterion; 10] = [
        ("fixture determinism", fixture_determinism),
        ("grid-scan enumeration", grid_enumeration),
        ("reference-energy regression", reference_regression),
        ("SOAP invariance", soap_invariance),
        ("quadrature convergence", quadrature_convergence),
        ("baseline force consistency", baseline_forces),
        ("sample-efficiency trend", sample_efficiency_trend),
        ("time-extrapolation trend", time_extrapolation_trend),
        ("metric identity", metric_identity),
        ("cross-molecule plans", cross_molecule_plans),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ctx))).unwrap_or_else(|e| {
            let reason = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {reason}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
