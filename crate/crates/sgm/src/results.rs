//! Experiment result tables.

use std::io::Write;

use serde_json::{json, Value};
use sgm_core::ExperimentResult;

use crate::matrix_csv::format_f64;

pub const CSV_HEADER: [&str; 5] = ["method", "k", "n", "accuracy", "trace_ratio"];

/// `method,k,n,accuracy,trace_ratio`; `trace_ratio` is empty except for sgm.
pub fn write_csv<W: Write>(out: W, results: &[ExperimentResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.method.name().to_string(),
            r.k.to_string(),
            r.n.to_string(),
            format_f64(r.accuracy),
            r.trace_ratio.map(format_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(results: &[ExperimentResult]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, results).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Results plus an echo of the run configuration and the wall time.
pub fn to_json(results: &[ExperimentResult], config: Value, seconds: f64) -> Value {
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "method": r.method.name(),
                "k": r.k,
                "n": r.n,
                "seed": r.seed,
                "accuracy": r.accuracy,
                "trace_ratio": r.trace_ratio,
            })
        })
        .collect();
    json!({ "config": config, "elapsed_seconds": seconds, "results": rows })
}

/// Aligned table for the terminal.
pub fn summary_table(results: &[ExperimentResult]) -> String {
    let mut s = format!("{:<8} {:>4} {:>4} {:>9} {:>9}\n", "method", "k", "n", "accuracy", "T");
    for r in results {
        let t = r.trace_ratio.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<8} {:>4} {:>4} {:>9.4} {:>9}\n",
            r.method.name(),
            r.k,
            r.n,
            r.accuracy,
            t
        ));
    }
    s
}
