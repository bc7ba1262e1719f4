//! Markdown report and SVG charts rendered from records alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use trajbench_core::metrics::{
    group_project, rank_records, Axis, MetricRecord, Series, ENERGY_MAE_PER_ATOM, FORCE_MAE_ALL, SOAP_SIMILARITY,
};

use crate::run::RunInfo;
use crate::svg::{bar_chart, line_chart, Bar, LineSeries};

/// One rendered chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub file: String,
    pub title: String,
    pub svg: String,
}

fn file_safe(text: &str) -> String {
    text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn ok_values<'a>(records: &'a [MetricRecord], suite: &str, metric: &str) -> Vec<&'a MetricRecord> {
    records.iter().filter(|r| r.suite == suite && r.metric == metric && r.is_ok() && r.value.is_some()).collect()
}

fn molecules(records: &[&MetricRecord]) -> BTreeSet<String> {
    records.iter().map(|r| r.molecule.clone()).collect()
}

fn series_lines(series: &[Series], axis: Axis) -> Vec<LineSeries> {
    let label = match axis {
        Axis::WindowSize => "size",
        Axis::WindowStart => "start",
    };
    series
        .iter()
        .map(|s| LineSeries {
            name: format!("{label} {:.0}%", s.key * 100.0),
            points: s.points.iter().map(|p| (p.position * 100.0, p.value)).collect(),
        })
        .collect()
}

fn sample_efficiency_charts(records: &[MetricRecord], charts: &mut Vec<Chart>) {
    let suite = "sample_efficiency";
    let forces: Vec<&MetricRecord> =
        records.iter().filter(|r| r.suite == suite && r.is_ok() && r.metric.starts_with("force_mae")).collect();
    for mol in molecules(&forces) {
        let mut by_metric: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for r in forces.iter().filter(|r| r.molecule == mol) {
            if let (Some(n), Some(v)) = (r.sample_count, r.value) {
                by_metric.entry(r.metric.as_str()).or_default().push((n as f64, v));
            }
        }
        let mut series: Vec<LineSeries> = Vec::new();
        for (metric, mut points) in by_metric {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let name = if metric == FORCE_MAE_ALL {
                "all atoms".to_string()
            } else {
                metric.replace("force_mae_species:", "")
            };
            let entry = LineSeries { name, points };
            if metric == FORCE_MAE_ALL {
                series.insert(0, entry);
            } else {
                series.push(entry);
            }
        }
        let title = format!("Sample efficiency, force MAE ({mol})");
        charts.push(Chart {
            file: format!("sample_efficiency_forces_{}.svg", file_safe(&mol)),
            svg: line_chart(&title, "training samples", "force MAE (meV/Å)", &series, true, true),
            title,
        });
    }
    let energy = ok_values(records, suite, ENERGY_MAE_PER_ATOM);
    for mol in molecules(&energy) {
        let mut points: Vec<(f64, f64)> = energy
            .iter()
            .filter(|r| r.molecule == mol)
            .filter_map(|r| Some((r.sample_count? as f64, r.value?)))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let title = format!("Sample efficiency, energy MAE per atom ({mol})");
        let series = [LineSeries { name: "energy".into(), points }];
        charts.push(Chart {
            file: format!("sample_efficiency_energy_{}.svg", file_safe(&mol)),
            svg: line_chart(&title, "training samples", "energy MAE (meV/atom)", &series, true, true),
            title,
        });
    }
}

fn window_bars(records: &[MetricRecord]) -> Result<Vec<Bar>> {
    Ok(rank_records(records)?
        .into_iter()
        .map(|r| Bar {
            label: r.fixture_id.clone(),
            value: r.value.unwrap_or(f64::NAN),
            window: r.window_start.zip(r.window_size),
        })
        .collect())
}

fn projection_charts(
    records: &[MetricRecord],
    stem: &str,
    what: &str,
    y_label: &str,
    y_from_zero: bool,
    charts: &mut Vec<Chart>,
) -> Result<()> {
    for (axis, name, x_label) in
        [(Axis::WindowSize, "by_size", "window start (%)"), (Axis::WindowStart, "by_start", "window size (%)")]
    {
        let series = series_lines(&group_project(records, axis)?, axis);
        let grouping = if axis == Axis::WindowSize { "window size" } else { "window start" };
        let title = format!("{what} grouped by {grouping}");
        charts.push(Chart {
            file: format!("{stem}_{name}.svg"),
            svg: line_chart(&title, x_label, y_label, &series, false, y_from_zero),
            title,
        });
    }
    Ok(())
}

fn time_extrapolation_charts(records: &[MetricRecord], charts: &mut Vec<Chart>) -> Result<()> {
    let suite = "time_extrapolation";
    let forces = ok_values(records, suite, FORCE_MAE_ALL);
    let similarity = ok_values(records, suite, SOAP_SIMILARITY);
    let mut groups: BTreeMap<(String, usize), Vec<MetricRecord>> = BTreeMap::new();
    for r in &forces {
        groups.entry((r.molecule.clone(), r.sample_count.unwrap_or(0))).or_default().push((*r).clone());
    }
    for ((mol, count), group) in groups {
        let stem = format!("time_extrapolation_{}_n{count}", file_safe(&mol));
        let what = format!("Time extrapolation, force MAE ({mol}, {count} samples)");
        let title = format!("{what}, ranked");
        charts.push(Chart {
            file: format!("{stem}_ranked.svg"),
            svg: bar_chart(&title, "force MAE (meV/Å)", &window_bars(&group)?),
            title,
        });
        projection_charts(&group, &stem, &what, "force MAE (meV/Å)", true, charts)?;

        let sims: BTreeMap<&str, f64> = similarity
            .iter()
            .filter(|s| s.molecule == mol)
            .filter_map(|s| Some((s.fixture_id.as_str(), s.value?)))
            .collect();
        let mut points: Vec<(f64, f64)> =
            group.iter().filter_map(|r| Some((*sims.get(r.fixture_id.as_str())?, r.value?))).collect();
        if !points.is_empty() {
            points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let title = format!("Test window SOAP similarity vs force MAE ({mol}, {count} samples)");
            let series = [LineSeries { name: "fixtures".into(), points }];
            charts.push(Chart {
                file: format!("{stem}_similarity.svg"),
                svg: line_chart(
                    &title,
                    "mean SOAP similarity to test window",
                    "force MAE (meV/Å)",
                    &series,
                    false,
                    false,
                ),
                title,
            });
        }
    }
    Ok(())
}

fn similarity_charts(records: &[MetricRecord], charts: &mut Vec<Chart>) -> Result<()> {
    let sims = ok_values(records, "soap_similarity", SOAP_SIMILARITY);
    for mol in molecules(&sims) {
        let group: Vec<MetricRecord> = sims.iter().filter(|r| r.molecule == mol).map(|r| (*r).clone()).collect();
        let stem = format!("soap_similarity_{}", file_safe(&mol));
        let what = format!("Test window SOAP similarity ({mol})");
        let mut bars = window_bars(&group)?;
        bars.reverse();
        let title = format!("{what}, ranked");
        charts.push(Chart {
            file: format!("{stem}_ranked.svg"),
            svg: bar_chart(&title, "mean cosine similarity", &bars),
            title,
        });
        projection_charts(&group, &stem, &what, "mean cosine similarity", false, charts)?;
    }
    Ok(())
}

fn cross_molecule_charts(records: &[MetricRecord], charts: &mut Vec<Chart>) -> Result<()> {
    for (metric, file, label) in [
        (FORCE_MAE_ALL, "cross_molecule_forces.svg", "force MAE (meV/Å)"),
        (ENERGY_MAE_PER_ATOM, "cross_molecule_energy.svg", "energy MAE (meV/atom)"),
    ] {
        let group: Vec<MetricRecord> = ok_values(records, "cross_molecule", metric).into_iter().cloned().collect();
        if group.is_empty() {
            continue;
        }
        let bars = rank_records(&group)?
            .into_iter()
            .map(|r| Bar {
                label: format!("{} → {}", r.fixture_id.trim_start_matches("gen_"), r.molecule),
                value: r.value.unwrap_or(f64::NAN),
                window: None,
            })
            .collect::<Vec<_>>();
        let title = format!("Cross-molecule generalization, {label}");
        charts.push(Chart { file: file.to_string(), svg: bar_chart(&title, label, &bars), title });
    }
    Ok(())
}

/// Every chart the records support, in a fixed order.
pub fn render_charts(records: &[MetricRecord]) -> Result<Vec<Chart>> {
    let mut charts = Vec::new();
    sample_efficiency_charts(records, &mut charts);
    time_extrapolation_charts(records, &mut charts)?;
    similarity_charts(records, &mut charts)?;
    cross_molecule_charts(records, &mut charts)?;
    Ok(charts)
}

/// Grouped projection of every successful force record; errors when a
/// record lacks window metadata.
pub fn projection_chart(records: &[MetricRecord], axis: Axis) -> Result<Chart> {
    let forces: Vec<MetricRecord> =
        records.iter().filter(|r| r.metric == FORCE_MAE_ALL && r.is_ok()).cloned().collect();
    let series = series_lines(&group_project(&forces, axis)?, axis);
    let (name, x_label) = match axis {
        Axis::WindowSize => ("window size", "window start (%)"),
        Axis::WindowStart => ("window start", "window size (%)"),
    };
    let title = format!("Force MAE grouped by {name}");
    let file = format!("projection_{}.svg", name.replace(' ', "_"));
    Ok(Chart { svg: line_chart(&title, x_label, "force MAE (meV/Å)", &series, false, true), file, title })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn header(out: &mut String, info: &RunInfo) {
    let soap = &info.soap;
    let species: Vec<&str> = soap.species.iter().map(|s| s.symbol()).collect();
    let rows: Vec<(&str, String)> = vec![
        ("trajbench version", info.trajbench_version.clone()),
        ("suite", info.suite.as_str().to_string()),
        ("model", info.model_id.clone()),
        ("molecules", info.molecules.join(", ")),
        ("sample counts", format!("{:?}", info.sample_counts)),
        ("test fraction", format!("{} (last {}% of each trajectory)", info.test_fraction, info.test_fraction * 100.0)),
        ("training range", format!("first {}%", info.train_limit * 100.0)),
        ("sampling rule", info.sampling_rule.clone()),
        ("SOAP r_cut (Å)", soap.r_cut.to_string()),
        ("SOAP sigma (Å)", soap.sigma.to_string()),
        ("SOAP n_max", soap.n_max.to_string()),
        ("SOAP l_max", soap.l_max.to_string()),
        ("SOAP quadrature order", soap.quadrature_order.to_string()),
        ("SOAP species", species.join(" ")),
        ("SOAP params hash", info.soap_hash.clone()),
        ("ridge lambda", info.ridge_lambda.to_string()),
        ("finite-difference step (Å)", info.fd_step.to_string()),
        ("energy / force weight", format!("{} / {}", info.energy_weight, info.force_weight)),
        ("seed", info.seed.to_string()),
        ("workers", info.workers.to_string()),
        (
            "timeouts handshake / train / predict (s)",
            format!("{} / {} / {}", info.handshake_timeout_s, info.train_timeout_s, info.predict_timeout_s),
        ),
        ("similarity frames per side", info.similarity_frames.to_string()),
    ];
    out.push_str("## Parameters\n\n| parameter | value |\n|---|---|\n");
    for (k, v) in rows {
        let _ = writeln!(out, "| {k} | {v} |");
    }
    out.push_str(
        "\n## Fixtures\n\n| fixture | train frames | test frames | status | sha256 |\n|---|---|---|---|---|\n",
    );
    for f in &info.fixtures {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | `{}` |",
            f.id,
            f.train_frames,
            f.test_frames,
            if f.ok { "ok" } else { "failed" },
            &f.hash[..f.hash.len().min(16)]
        );
    }
    if !info.skipped.is_empty() {
        let _ = writeln!(out, "\nSkipped: {}", info.skipped.join(", "));
    }
    out.push('\n');
}

/// The markdown report text.
pub fn render_markdown(records: &[MetricRecord], info: Option<&RunInfo>, charts: &[Chart]) -> Result<String> {
    let mut out = String::from("# trajbench report\n\n");
    if let Some(info) = info {
        header(&mut out, info);
    }
    let suites: BTreeSet<&str> = records.iter().map(|r| r.suite.as_str()).collect();
    for suite in suites {
        let _ = writeln!(out, "## Records: {}\n", if suite.is_empty() { "(no suite)" } else { suite });
        out.push_str(
            "| fixture | molecule | model | metric | value | unit | kcal/mol | samples | frames | atoms | status |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
        for r in records.iter().filter(|r| r.suite == suite) {
            let status = match &r.error {
                Some(e) => format!("error: {}", e.replace('\n', " ").replace('|', "/")),
                None => "ok".to_string(),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.fixture_id,
                r.molecule,
                r.model_id,
                r.metric,
                fmt_opt(r.value, 4),
                r.unit,
                fmt_opt(r.value_kcal, 6),
                r.sample_count.map_or("-".to_string(), |n| n.to_string()),
                r.frame_count,
                r.atom_count,
                status
            );
        }
        out.push('\n');
        if suite == "time_extrapolation" {
            let forces: Vec<MetricRecord> = ok_values(records, suite, FORCE_MAE_ALL).into_iter().cloned().collect();
            out.push_str(
                "### Ranked by force MAE\n\n| rank | fixture | molecule | force MAE (meV/Å) |\n|---|---|---|---|\n",
            );
            for (i, r) in rank_records(&forces)?.iter().enumerate() {
                let _ = writeln!(out, "| {} | {} | {} | {} |", i + 1, r.fixture_id, r.molecule, fmt_opt(r.value, 4));
            }
            out.push('\n');
        }
    }
    if !charts.is_empty() {
        out.push_str("## Charts\n\n");
        for c in charts {
            let _ = writeln!(out, "- [{}](charts/{})", c.title, c.file);
        }
    }
    Ok(out)
}

/// Writes `report.md` and `charts/*.svg` under `out`; returns the chart paths.
pub fn write_report(out: &Path, records: &[MetricRecord], info: Option<&RunInfo>) -> Result<Vec<PathBuf>> {
    let charts = render_charts(records)?;
    write_charts_and_markdown(out, records, info, charts)
}

pub fn write_charts_and_markdown(
    out: &Path,
    records: &[MetricRecord],
    info: Option<&RunInfo>,
    charts: Vec<Chart>,
) -> Result<Vec<PathBuf>> {
    let dir = out.join("charts");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::new();
    for c in &charts {
        let path = dir.join(&c.file);
        fs::write(&path, &c.svg).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    let md = render_markdown(records, info, &charts)?;
    let path = out.join("report.md");
    fs::write(&path, md).with_context(|| format!("writing {}", path.display()))?;
    Ok(paths)
}
