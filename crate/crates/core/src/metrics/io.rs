use super::{MetricRecord, MetricsError, RECORD_SCHEMA_VERSION};

/// Deterministic output order: suite, fixture, molecule, model, metric.
pub fn sort_records(records: &mut [MetricRecord]) {
    records.sort_by(|a, b| {
        (&a.suite, &a.fixture_id, &a.molecule, &a.model_id, &a.metric).cmp(&(
            &b.suite,
            &b.fixture_id,
            &b.molecule,
            &b.model_id,
            &b.metric,
        ))
    });
}

pub fn records_csv(records: &[MetricRecord]) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn records_jsonl(records: &[MetricRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses JSON-lines records, rejecting mixed or foreign schema versions.
pub fn read_records_jsonl(text: &str) -> Result<Vec<MetricRecord>, MetricsError> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    let mut versions = Vec::with_capacity(lines.len());
    for &(line, l) in &lines {
        let value: serde_json::Value =
            serde_json::from_str(l).map_err(|e| MetricsError::Parse { line, reason: e.to_string() })?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| MetricsError::Parse { line, reason: "missing schema_version".into() })?;
        versions.push(version as u32);
    }
    if let Some(&first) = versions.first() {
        if let Some(&other) = versions.iter().find(|&&v| v != first) {
            return Err(MetricsError::MixedSchema(first.min(other), first.max(other)));
        }
        if first != RECORD_SCHEMA_VERSION {
            return Err(MetricsError::SchemaMismatch { found: first, expected: RECORD_SCHEMA_VERSION });
        }
    }
    lines
        .into_iter()
        .map(|(line, l)| serde_json::from_str(l).map_err(|e| MetricsError::Parse { line, reason: e.to_string() }))
        .collect()
}
