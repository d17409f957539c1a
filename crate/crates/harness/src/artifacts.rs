//! CSV traces, JSON metadata, vector dumps and the plot script.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use banach_pd::solver::IterateRecord;
use ndarray::Array1;
use serde_json::Value;

use crate::error::HarnessResult;

/// Column order of every trace. New columns go at the end.
pub const TRACE_COLUMNS: [&str; 7] = [
    "k",
    "elapsed_s",
    "err_ref",
    "misfit",
    "gap",
    "tau_k",
    "sigma_k",
];

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One row per record; `elapsed_s` stays empty unless `with_timing`.
pub fn trace_csv(records: &[IterateRecord], with_timing: bool) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let elapsed = if with_timing {
            fmt_f64(r.elapsed_s)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            elapsed,
            opt(r.err_ref),
            opt(r.misfit),
            opt(r.gap),
            fmt_f64(r.tau),
            fmt_f64(r.sigma)
        );
    }
    out
}

pub fn vector_dump(x: &Array1<f64>) -> String {
    let mut out = String::with_capacity(24 * x.len());
    for v in x {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

/// Everything a single run leaves behind.
#[derive(Clone, Debug)]
pub struct RunArtifact {
    pub name: String,
    pub records: Vec<IterateRecord>,
    pub metadata: Value,
    pub reconstruction: Option<Array1<f64>>,
}

/// Extra tabular output such as summary tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one CLI experiment.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub runs: Vec<RunArtifact>,
    pub tables: Vec<Table>,
    /// Top-level metadata written to `<experiment>.json`.
    pub summary: Option<(String, Value)>,
}

/// Write all files into `dir`; returns the paths written.
pub fn write_output(
    dir: &Path,
    output: &ExperimentOutput,
    with_timing: bool,
) -> HarnessResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> HarnessResult<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for run in &output.runs {
        put(
            format!("{}.csv", run.name),
            trace_csv(&run.records, with_timing),
        )?;
        put(
            format!("{}.json", run.name),
            serde_json::to_string_pretty(&run.metadata)? + "\n",
        )?;
        if let Some(x) = &run.reconstruction {
            put(format!("{}_x.txt", run.name), vector_dump(x))?;
        }
    }
    for t in &output.tables {
        put(format!("{}.csv", t.name), t.to_csv())?;
    }
    if let Some((name, value)) = &output.summary {
        put(
            format!("{name}.json"),
            serde_json::to_string_pretty(value)? + "\n",
        )?;
    }
    if !output.runs.is_empty() {
        let names: Vec<&str> = output.runs.iter().map(|r| r.name.as_str()).collect();
        put("plot.py".into(), plot_script(&names))?;
    }
    Ok(written)
}

/// Matplotlib script plotting the error columns of the given traces to PNG.
pub fn plot_script(trace_names: &[&str]) -> String {
    let list = trace_names
        .iter()
        .map(|n| format!("{n:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"#!/usr/bin/env python3
"""Plot traces written by banach-pd. Usage: python3 plot.py [outfile.png]"""
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = pathlib.Path(__file__).resolve().parent
TRACES = [{list}]
COLUMNS = ["err_ref", "misfit", "gap"]


def load(name):
    with open(HERE / f"{{name}}.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    k = [int(r["k"]) for r in rows]
    cols = {{}}
    for c in COLUMNS:
        pts = [(ki, float(r[c])) for ki, r in zip(k, rows) if r[c] and float(r[c]) > 0]
        if pts:
            cols[c] = pts
    return cols


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else str(HERE / "traces.png")
    data = {{n: load(n) for n in TRACES}}
    present = [c for c in COLUMNS if any(c in d for d in data.values())]
    if not present:
        print("nothing to plot")
        return
    fig, axes = plt.subplots(1, len(present), figsize=(5 * len(present), 4), squeeze=False)
    for ax, c in zip(axes[0], present):
        for name, cols in data.items():
            if c in cols:
                ks, vs = zip(*cols[c])
                ax.semilogy(ks, vs, label=name)
        ax.set_xlabel("iteration k")
        ax.set_ylabel(c)
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
"#
    )
}
