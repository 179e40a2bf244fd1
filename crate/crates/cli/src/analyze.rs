//! `analyze`: paired comparison of one metric across two report sets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rehab_core::metrics::{wilcoxon_signed_rank, StatsError, WilcoxonMethod};
use serde_json::{json, Value};

use crate::{Format, Metric, Status};

fn report_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("listing {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    if files.is_empty() {
        bail!("{}: no *.json reports", path.display());
    }
    Ok(files)
}

/// Patient id to the mean of `metric` over that patient's completed reps.
pub fn load_set(path: &Path, metric: Metric) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for file in report_files(path)? {
        let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
        let Some(patient) = v.pointer("/session/patient_id").and_then(Value::as_str) else {
            bail!("{}: not a session report (no session.patient_id)", file.display());
        };
        let values: Vec<f64> = v
            .get("reps")
            .and_then(Value::as_array)
            .map(|reps| reps.iter().filter_map(|r| r.get(metric.key())?.as_f64()).collect())
            .unwrap_or_default();
        if values.is_empty() {
            bail!("{}: no completed repetitions with {}", file.display(), metric.key());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if out.insert(patient.to_string(), mean).is_some() {
            bail!("{}: patient {patient} appears twice in {}", file.display(), path.display());
        }
    }
    Ok(out)
}

pub fn run(a: &Path, b: &Path, metric: Metric, format: Format) -> Result<Status> {
    let set_a = load_set(a, metric)?;
    let set_b = load_set(b, metric)?;
    let only_a: Vec<&String> = set_a.keys().filter(|k| !set_b.contains_key(*k)).collect();
    let only_b: Vec<&String> = set_b.keys().filter(|k| !set_a.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        bail!("report sets do not pair up: only in A {only_a:?}, only in B {only_b:?}");
    }
    let xs: Vec<f64> = set_a.values().copied().collect();
    let ys: Vec<f64> = set_b.values().copied().collect();
    let result = match wilcoxon_signed_rank(&xs, &ys) {
        Ok(r) => Some(r),
        Err(StatsError::InsufficientData { n_effective }) => {
            eprintln!(
                "insufficient data: {n_effective} non-zero differences among {} pairs; no test performed",
                xs.len()
            );
            None
        }
        Err(e) => return Err(e.into()),
    };
    match format {
        Format::Report => {
            let pairs: Vec<Value> = set_a
                .iter()
                .map(|(id, x)| json!({ "patient_id": id, "a": x, "b": set_b[id] }))
                .collect();
            let doc = json!({ "metric": metric.key(), "pairs": pairs, "result": result });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Summary => {
            println!("metric {}: {} pairs", metric.key(), xs.len());
            if let Some(r) = result {
                let method = match r.method {
                    WilcoxonMethod::Exact => "exact",
                    WilcoxonMethod::NormalApprox => "normal approximation",
                };
                println!(
                    "n={} W={:.1} (W+={:.1}, W-={:.1}) z={:.3} p={:.4} ({method})",
                    r.n_effective, r.w, r.w_plus, r.w_minus, r.z, r.p_value
                );
            }
        }
    }
    Ok(Status::Clean)
}
