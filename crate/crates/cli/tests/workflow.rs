use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trajbench::store::write_store;
use trajbench_core::dataset::{DatasetManifest, Frame, EV_PER_KCAL_MOL};
use trajbench_core::fixtures::temporal_split;
use trajbench_core::metrics::{read_records_jsonl, records_jsonl, MetricRecord, RecordStatus, FORCE_MAE_ALL};
use trajbench_core::synthetic::drifting_triatomic;

const TRAJBENCH: &str = env!("CARGO_BIN_EXE_trajbench");
const ADAPTER: &str = env!("CARGO_BIN_EXE_trajbench-mean-adapter");

fn trajbench(args: &[&str]) -> Output {
    Command::new(TRAJBENCH).args(args).env("TRAJBENCH_LOG", "warn").output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_store(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    write_store(&data, &[drifting_triatomic(200, 0.3, 5)]).unwrap();
    data
}

fn run(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--data", path(data), "--out", path(out), "--workers", "1"];
    args.extend_from_slice(extra);
    trajbench(&args)
}

fn records(out: &Path) -> Vec<MetricRecord> {
    read_records_jsonl(&fs::read_to_string(out.join("records.jsonl")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn kcal_xyz(frames: &[&Frame]) -> String {
    let mut text = String::new();
    for f in frames {
        text.push_str(&format!("{}\nenergy={:?} old_index={}\n", f.len(), f.energy / EV_PER_KCAL_MOL, f.source_index));
        for ((s, p), g) in f.species.iter().zip(&f.positions).zip(&f.forces) {
            let g: Vec<f64> = g.iter().map(|v| v / EV_PER_KCAL_MOL).collect();
            text.push_str(&format!(
                "{} {:?} {:?} {:?} {:?} {:?} {:?}\n",
                s.symbol(),
                p[0],
                p[1],
                p[2],
                g[0],
                g[1],
                g[2]
            ));
        }
    }
    text
}

#[test]
fn ingest_restores_order_and_converts_units() {
    let dir = tempfile::tempdir().unwrap();
    let traj = drifting_triatomic(30, 0.1, 2);
    let mut shuffled: Vec<&Frame> = traj.frames.iter().collect();
    shuffled.reverse();
    shuffled.swap(3, 17);
    fs::write(dir.path().join("raw.xyz"), kcal_xyz(&shuffled)).unwrap();
    fs::write(
        dir.path().join("manifest.json"),
        r#"{"molecules":[{"id":"drift","path":"raw.xyz","units":"kcal_mol"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("store");
    let o = trajbench(&["ingest", "--manifest", path(&dir.path().join("manifest.json")), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let back = DatasetManifest::load(&out.join("manifest.json")).unwrap().load_trajectory("drift").unwrap();
    assert_eq!(back.len(), traj.len());
    for (a, b) in traj.frames.iter().zip(&back.frames) {
        assert_eq!(a.source_index, b.source_index);
        assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy.abs());
        for (x, y) in a.forces.iter().flatten().zip(b.forces.iter().flatten()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn ingest_names_the_offending_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"molecules":[{"id":"x","path":"missing.xyz"}]}"#).unwrap();
    let o = trajbench(&["ingest", "--manifest", path(&manifest), "--out", path(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.xyz"));

    let mut frames = drifting_triatomic(12, 0.1, 1).frames;
    frames[4].positions[1] = frames[4].positions[0];
    fs::write(dir.path().join("bad.xyz"), trajbench_core::dataset::write_extxyz(&frames)).unwrap();
    fs::write(&manifest, r#"{"molecules":[{"id":"bad","path":"bad.xyz"}]}"#).unwrap();
    let o = trajbench(&["ingest", "--manifest", path(&manifest), "--out", path(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("bad.xyz") && stderr.contains("frame 4"), "{stderr}");
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_store(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&data, out, &["--suite", "sample_efficiency", "--samples", "20,40"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(files(&a.join("fixtures")), files(&b.join("fixtures")));
    assert_eq!(fs::read(a.join("records.csv")).unwrap(), fs::read(b.join("records.csv")).unwrap());
    assert_eq!(files(&a.join("charts")), files(&b.join("charts")));
    assert_eq!(fs::read(a.join("report.md")).unwrap(), fs::read(b.join("report.md")).unwrap());
}

#[test]
fn report_rerenders_identical_charts_and_projects_windows() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_store(dir.path());
    let out = dir.path().join("te");
    let o = run(&data, &out, &["--suite", "time_extrapolation", "--samples", "20", "--similarity-frames", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(out.join("fixtures")).unwrap().count(), 15);

    let again = dir.path().join("again");
    let o = trajbench(&[
        "report",
        "--records",
        path(&out.join("records.jsonl")),
        "--out",
        path(&again),
        "--group-by",
        "window-size",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let original = files(&out.join("charts"));
    let rerendered = files(&again.join("charts"));
    for (name, bytes) in &original {
        let twin = rerendered.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("{name} missing"));
        assert_eq!(&twin.1, bytes, "{name} differs");
    }
    assert!(rerendered.iter().any(|(n, _)| n == "projection_window_size.svg"));

    let plain = dir.path().join("plain");
    let o = trajbench(&["report", "--records", path(&out.join("records.jsonl")), "--out", path(&plain)]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(out.join("report.md")).unwrap(),
        fs::read_to_string(plain.join("report.md")).unwrap()
    );
}

#[test]
fn report_rejects_bad_record_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = MetricRecord::new("se_n10", "m", "mol", FORCE_MAE_ALL, "meV/Å");
    ok.value = Some(1.0);
    ok.suite = "sample_efficiency".into();
    let mut old = ok.clone();
    old.schema_version = 0;
    let mixed = dir.path().join("mixed.jsonl");
    fs::write(&mixed, records_jsonl(&[ok.clone(), old])).unwrap();
    let o = trajbench(&["report", "--records", path(&mixed), "--out", path(&dir.path().join("r1"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    let plain = dir.path().join("plain.jsonl");
    fs::write(&plain, records_jsonl(&[ok])).unwrap();
    let o = trajbench(&[
        "report",
        "--records",
        path(&plain),
        "--out",
        path(&dir.path().join("r2")),
        "--group-by",
        "window-start",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
}

fn true_force_mae_mev(frames: &[Frame], test: &[usize]) -> f64 {
    let values: Vec<f64> = test.iter().flat_map(|&i| frames[i].forces.iter().flatten().map(|v| v.abs())).collect();
    values.iter().sum::<f64>() / values.len() as f64 * 1000.0
}

#[test]
fn mean_predictor_force_error_equals_true_force_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_store(dir.path());
    let out = dir.path().join("ext");
    let model = format!("cmd:{ADAPTER}");
    let o = run(&data, &out, &["--suite", "sample_efficiency", "--samples", "20,40", "--model", &model]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = DatasetManifest::load(&data.join("manifest.json")).unwrap().load_trajectory("drift").unwrap();
    let split = temporal_split(traj.len(), 0.1).unwrap();
    let expected = true_force_mae_mev(&traj.frames, &split.test_indices);
    let forces: Vec<MetricRecord> = records(&out).into_iter().filter(|r| r.metric == FORCE_MAE_ALL).collect();
    assert_eq!(forces.len(), 2);
    for r in forces {
        assert_eq!(r.model_id, "cmd:trajbench-mean-adapter");
        let got = r.value.unwrap();
        assert!(((got - expected) / expected).abs() <= 1e-12, "{got} vs {expected}");
    }
}

#[test]
fn exit_codes_follow_fixture_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_store(dir.path());

    let all_bad = dir.path().join("bad");
    let model = format!("cmd:{ADAPTER} --mode nan-force");
    let o = run(&data, &all_bad, &["--suite", "sample_efficiency", "--samples", "20,40", "--model", &model]);
    assert_eq!(o.status.code(), Some(1));
    let failed = records(&all_bad);
    assert!(failed.iter().all(|r| r.status == RecordStatus::Error && r.error.is_some()));

    let lock = dir.path().join("first-fixture");
    let script = format!(
        "if mkdir {} 2>/dev/null; then exec {ADAPTER} --mode nan-force; else exec {ADAPTER}; fi",
        lock.display()
    );
    let model = format!("cmd:sh -c '{script}'");
    let partial = dir.path().join("partial");
    let o = run(&data, &partial, &["--suite", "sample_efficiency", "--samples", "20,40", "--model", &model]);
    assert_eq!(o.status.code(), Some(10), "{}", String::from_utf8_lossy(&o.stderr));
    let outcomes: Vec<RecordStatus> = records(&partial).iter().map(|r| r.status).collect();
    assert!(outcomes.contains(&RecordStatus::Ok) && outcomes.contains(&RecordStatus::Error));

    let o = run(&data, &dir.path().join("none"), &["--suite", "sample_efficiency", "--samples", "5000"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&data, &dir.path().join("unknown"), &["--suite", "sample_efficiency", "--molecule", "zzz"]);
    assert_eq!(o.status.code(), Some(1));
}
