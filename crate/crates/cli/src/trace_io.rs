//! CSV output for simulation traces.

use std::io::Write;
use std::path::{Path, PathBuf};

use byzest_core::SimulationTrace;

pub const BASE_COLUMNS: [&str; 5] = ["round", "error_mean_l2", "error_max_linf", "envelope", "diverged"];

/// Shortest round-trip decimal form, so identical traces give identical bytes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_trace<W: Write>(trace: &SimulationTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let per_agent = trace.has_per_agent_columns();
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if per_agent {
        header.extend(trace.good_ids.iter().map(|id| format!("agent_{id}")));
    }
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.round.to_string(),
            fmt_f64(r.error_mean_l2),
            fmt_f64(r.error_max_linf),
            fmt_f64(r.envelope),
            u8::from(r.diverged).to_string(),
        ];
        if per_agent {
            match &r.per_agent {
                Some(errs) => row.extend(errs.iter().map(|e| fmt_f64(*e))),
                None => row.extend(std::iter::repeat(String::new()).take(trace.good_ids.len())),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `<label>_seed<seed>.csv`, with `trace` standing in for an empty label.
pub fn trace_file_name(trace: &SimulationTrace) -> String {
    let label = if trace.label.is_empty() { "trace" } else { trace.label.as_str() };
    format!("{label}_seed{}.csv", trace.seed)
}

pub fn write_trace_file(trace: &SimulationTrace, dir: &Path) -> std::io::Result<PathBuf> {
    let path = dir.join(trace_file_name(trace));
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_trace(trace, file).map_err(std::io::Error::other)?;
    Ok(path)
}
