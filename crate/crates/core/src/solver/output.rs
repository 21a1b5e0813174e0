//! Grid CSV, JSON report and plain-text residual summary.

use super::{Grid, SolutionField};
use crate::error::{Error, Result};
use serde_json::{json, Value};
use std::fmt::Write as _;

/// Writes `u1..un, lambda1..lambdan, f1..fn`, one row per node in storage
/// order, floats with 17 significant digits.
pub fn write_csv(field: &SolutionField, out: &mut impl std::io::Write) -> Result<()> {
    let n = field.lambdas.len();
    let flux = field
        .flux
        .as_ref()
        .ok_or_else(|| Error::Integration("flux has not been reconstructed".into()))?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    header.extend((1..=n).map(|i| format!("lambda{i}")));
    header.extend((1..=n).map(|i| format!("f{i}")));
    let mut text = header.join(",");
    text.push('\n');
    for node in 0..field.grid.len() {
        let p = field.grid.point(node);
        let row: Vec<String> = p
            .iter()
            .copied()
            .chain(field.lambdas.iter().map(|l| l[node]))
            .chain(flux.iter().map(|f| f[node]))
            .map(|v| format!("{v:.16e}"))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Columns read back from a grid CSV.
#[derive(Clone, Debug)]
pub struct CsvField {
    pub points: Vec<Vec<f64>>,
    pub lambdas: Vec<Vec<f64>>,
    pub flux: Vec<Vec<f64>>,
}

pub fn read_csv(text: &str, n: usize) -> Result<CsvField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 3 * n {
        return Err(Error::Config(format!("CSV has {} columns, expected {}", cols.len(), 3 * n)));
    }
    let mut field = CsvField {
        points: Vec::new(),
        lambdas: vec![Vec::new(); n],
        flux: vec![Vec::new(); n],
    };
    for (row, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("CSV row {}: {e}", row + 2)))?;
        if vals.len() != 3 * n {
            return Err(Error::Config(format!("CSV row {} has {} values", row + 2, vals.len())));
        }
        field.points.push(vals[..n].to_vec());
        for i in 0..n {
            field.lambdas[i].push(vals[n + i]);
            field.flux[i].push(vals[2 * n + i]);
        }
    }
    Ok(field)
}

impl CsvField {
    /// Checks that the rows are the nodes of `grid` in storage order.
    pub fn matches(&self, grid: &Grid) -> Result<()> {
        if self.points.len() != grid.len() {
            return Err(Error::Config(format!(
                "CSV has {} rows but the grid has {} nodes",
                self.points.len(),
                grid.len()
            )));
        }
        for (node, p) in self.points.iter().enumerate() {
            let q = grid.point(node);
            if p.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(Error::Config(format!("CSV row {} is not grid node {:?}", node + 2, q)));
            }
        }
        Ok(())
    }
}

/// Machine-readable summary with keys
/// `{case, rank, residuals: {curl, eigen}, hyperbolicity, family}`.
pub fn report_json(field: &SolutionField) -> Value {
    let r = &field.report;
    let (residuals, hyperbolicity) = match &field.residuals {
        Some(res) => (
            json!({ "curl": res.curl, "eigen": res.eigen }),
            serde_json::to_value(&res.hyperbolicity).unwrap_or(Value::Null),
        ),
        None => (json!({ "curl": null, "eigen": null }), Value::Null),
    };
    json!({
        "case": r.label.name(),
        "rank": r.rank,
        "residuals": residuals,
        "hyperbolicity": hyperbolicity,
        "family": r.family,
    })
}

/// `key: value` lines.
pub fn format_residual_text(field: &SolutionField) -> String {
    let mut s = String::new();
    let r = &field.report;
    let _ = writeln!(s, "case: {}", r.label);
    let _ = writeln!(s, "rank: {}", r.rank);
    let _ = writeln!(s, "family: {}", r.family);
    let _ = writeln!(s, "data: {}", field.data_description);
    let _ = writeln!(s, "nodes: {}", field.grid.len());
    if let Some(d) = field.path_difference {
        let _ = writeln!(s, "integration order difference: {d:.3e}");
    }
    if let Some(res) = &field.residuals {
        let h = &res.hyperbolicity;
        let _ = writeln!(s, "curl residual: {:.3e}", res.curl);
        let _ = writeln!(s, "eigen residual: {:.3e}", res.eigen);
        let _ = writeln!(s, "algebraic residual: {:.3e}", res.algebraic);
        let _ = writeln!(s, "flux at base: {:.3e}", res.base_flux);
        let _ = writeln!(
            s,
            "hyperbolicity: {} ({} of {} nodes strict, min gap {:.3e})",
            if h.strict { "strict" } else { "non-strict" },
            h.strict_nodes,
            h.nodes,
            h.min_gap
        );
        if !h.multiplicities.is_empty() {
            let _ = writeln!(s, "multiplicities: {}", h.multiplicities.join(", "));
        }
        if !h.forced.is_empty() {
            let _ = writeln!(s, "forced: {} (max violation {:.3e})", h.forced.join(", "), h.forced_residual);
        }
    }
    s
}
