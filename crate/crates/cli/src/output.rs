//! Deterministic report writers: identical inputs and seed must produce
//! byte-identical files, so no timestamps, no hash-ordered containers, and
//! floats go through the shortest-roundtrip formatter.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use screening::{GridDist, OracleRow, RecommendationRow, TraceRow};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text)
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join("\t"));
    out.push('\n');
}

pub fn trace_tsv(rows: &[TraceRow]) -> String {
    let with_supply = rows.first().is_some_and(|r| r.q_inv.is_some());
    let mut out = String::new();
    if with_supply {
        out.push_str("t\tf_inv\tg_inv\tq_inv\tr_inv\n");
    } else {
        out.push_str("t\tf_inv\tg_inv\tr_inv\n");
    }
    for r in rows {
        let mut fields = vec![r.t.to_string(), r.f_inv.to_string(), r.g_inv.to_string()];
        if let Some(q) = r.q_inv {
            fields.push(q.to_string());
        }
        fields.push(r.r_inv.to_string());
        push_row(&mut out, &fields);
    }
    out
}

pub fn recommendations_tsv(rows: &[RecommendationRow]) -> String {
    let mut out = String::from("item\tvalue_lo\tvalue_hi\texpected_value\texpected_quality\tprice\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.item.to_string(),
                r.value_lo.to_string(),
                r.value_hi.to_string(),
                r.expected_value.to_string(),
                r.expected_quality.to_string(),
                r.price.to_string(),
            ],
        );
    }
    out
}

pub fn oracle_table_tsv(rows: &[OracleRow]) -> String {
    let mut out = String::from("partition_mask\texclusion_index\tprofit\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.mask.to_string(),
                r.exclusion_index.to_string(),
                r.profit.to_string(),
            ],
        );
    }
    out
}

pub fn grid_tsv(grid: &GridDist) -> String {
    let mut out = String::from("index\tvalue\n");
    for (i, v) in grid.values().iter().enumerate() {
        push_row(&mut out, &[i.to_string(), v.to_string()]);
    }
    out
}

/// One elasticity-sweep row: the fixed structure's profit against the two
/// benchmarks, plus what the solver actually does at that elasticity.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub pi_structure: f64,
    pub pi_pool: f64,
    pub pi_disclose: f64,
    pub solver_k_positive: usize,
    pub solver_profit: f64,
}

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("eta\tpi_structure\tpi_pool\tpi_disclose\tsolver_k_positive\tsolver_profit\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.eta.to_string(),
                r.pi_structure.to_string(),
                r.pi_pool.to_string(),
                r.pi_disclose.to_string(),
                r.solver_k_positive.to_string(),
                r.solver_profit.to_string(),
            ],
        );
    }
    out
}
