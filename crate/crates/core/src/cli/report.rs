//! Text summary of a result table.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::config::Fusion;
use super::experiment::ResultRow;

/// Mean scores over converged seeds for one (split, method, beta).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub split: String,
    pub method: Fusion,
    pub beta: f64,
    pub elpd: f64,
    pub rmse: Option<f64>,
    pub converged: usize,
    pub flagged: usize,
}

/// Averages converged rows; flagged rows are only counted.
pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(String, Fusion, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.split.clone(), r.method, r.beta.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<CellSummary> = cells
        .into_iter()
        .map(|((split, method, bits), rs)| {
            let ok: Vec<&&ResultRow> = rs.iter().filter(|r| r.converged).collect();
            let n = ok.len() as f64;
            let elpd = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| r.elpd).sum::<f64>() / n
            };
            let rmse = if ok.is_empty() || ok.iter().any(|r| r.rmse.is_none()) {
                None
            } else {
                Some(ok.iter().filter_map(|r| r.rmse).sum::<f64>() / n)
            };
            CellSummary {
                split,
                method,
                beta: f64::from_bits(bits),
                elpd,
                rmse,
                converged: ok.len(),
                flagged: rs.len() - ok.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.split, a.method)
            .cmp(&(&b.split, b.method))
            .then(a.beta.total_cmp(&b.beta))
    });
    out
}

/// Weighting factor with the highest mean ELPD among converged cells.
pub fn best_beta(cells: &[CellSummary], split: &str, method: Fusion) -> Option<f64> {
    cells
        .iter()
        .filter(|c| c.split == split && c.method == method && c.converged > 0 && c.elpd.is_finite())
        .max_by(|a, b| a.elpd.total_cmp(&b.elpd))
        .map(|c| c.beta)
}

pub fn render(rows: &[ResultRow]) -> String {
    let cells = summarize(rows);
    let mut s = String::new();
    let mut groups: Vec<(String, Fusion)> =
        cells.iter().map(|c| (c.split.clone(), c.method)).collect();
    groups.dedup();
    for (split, method) in groups {
        let _ = writeln!(s, "{split} / {}", method.as_str());
        let _ = writeln!(
            s,
            "  {:>6}  {:>10}  {:>10}  {:>4}  {:>7}",
            "beta", "elpd", "rmse", "ok", "flagged"
        );
        for c in cells
            .iter()
            .filter(|c| c.split == split && c.method == method)
        {
            let rmse = c.rmse.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                s,
                "  {:>6.3}  {:>10.4}  {:>10}  {:>4}  {:>7}",
                c.beta, c.elpd, rmse, c.converged, c.flagged
            );
        }
        match best_beta(&cells, &split, method) {
            Some(b) => {
                let _ = writeln!(s, "  best beta by elpd: {b}");
            }
            None => {
                let _ = writeln!(s, "  best beta by elpd: none converged");
            }
        }
    }
    let flagged = rows.iter().filter(|r| !r.converged).count();
    let _ = writeln!(s, "{} rows, {flagged} flagged", rows.len());
    s
}
