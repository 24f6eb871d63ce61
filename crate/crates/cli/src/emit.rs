//! Deterministic artifact emission. Floating-point values in CSV and summary
//! lines print with 17 significant digits so runs can be audited bit for bit.

use anyhow::{Context, Result};
use cheeger_flow::flow::FlowTrajectory;
use serde::Serialize;
use std::path::Path;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn trajectory_csv(traj: &FlowTrajectory) -> String {
    let mut out = String::from("t,energy,l2,l1,linf,mass,gap,dudt_l2\n");
    for d in &traj.diagnostics {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(d.t),
            fmt(d.energy),
            fmt(d.l2),
            fmt(d.l1),
            fmt(d.linf),
            fmt(d.mass),
            fmt(d.gap),
            fmt(d.dudt_l2),
        ));
    }
    out
}

pub fn series_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn node_function_csv(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&fmt(*v));
        out.push('\n');
    }
    out
}
