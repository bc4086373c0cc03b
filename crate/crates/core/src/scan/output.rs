//! CSV and JSON-lines writers. Every file starts with a `#` block holding
//! the tool version, tolerances and the full configuration, so a result
//! file is enough to reproduce itself.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::measures::{DeathTime, DEATH_TIME_RESOLUTION};

use super::{Comparison, ExperimentConfig, PointStatus, ScanOutput, SingleRun, TOOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Scan,
    Compare,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Scan => "scan",
            Mode::Compare => "compare",
        }
    }
}

const SIGMA_COLUMNS: [&str; 10] = [
    "s_x1x1", "s_x1p1", "s_x1x2", "s_x1p2", "s_p1p1", "s_p1x2", "s_p1p2", "s_x2x2", "s_x2p2",
    "s_p2p2",
];

/// Shortest round-trip decimal; `inf`, `-inf`, `nan` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

pub fn outcome(d: &DeathTime) -> &'static str {
    match d {
        DeathTime::Finite { .. } => "finite",
        DeathTime::CensoredAtHorizon { .. } => "censored_at_horizon",
        DeathTime::NeverEntangled => "never_entangled",
    }
}

fn write_header(w: &mut dyn Write, cfg: &ExperimentConfig, mode: Mode) -> io::Result<()> {
    writeln!(w, "# tool = twinosc {TOOL_VERSION}")?;
    writeln!(w, "# mode = {}", mode.name())?;
    writeln!(w, "# tolerances.rtol = {}", fmt_num(cfg.tolerances.rtol))?;
    writeln!(w, "# tolerances.atol = {}", fmt_num(cfg.tolerances.atol))?;
    writeln!(w, "# threshold = {}", fmt_num(cfg.threshold))?;
    writeln!(w, "# death_time_resolution = {}", fmt_num(DEATH_TIME_RESOLUTION))?;
    writeln!(w, "# [config]")?;
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "#   {line}")?;
        }
    }
    writeln!(w, "# [/config]")
}

fn summary_line(w: &mut dyn Write, run: &SingleRun) -> io::Result<()> {
    writeln!(
        w,
        "# result curve={} t_F={} censored={} outcome={} peak_E_N={}",
        run.label,
        fmt_num(run.death_time.value()),
        run.death_time.is_censored(),
        outcome(&run.death_time),
        fmt_num(run.peak_log_negativity)
    )
}

pub fn write_run_csv(w: &mut dyn Write, cfg: &ExperimentConfig, runs: &[SingleRun]) -> io::Result<()> {
    write_header(w, cfg, Mode::Run)?;
    for run in runs {
        summary_line(w, run)?;
    }
    writeln!(w, "curve,t,E_N,d,nu_minus,purity,{}", SIGMA_COLUMNS.join(","))?;
    for run in runs {
        let label = quote(&run.label);
        for r in &run.records {
            write!(
                w,
                "{label},{},{},{},{},{}",
                fmt_num(r.t),
                fmt_num(r.log_negativity),
                fmt_num(r.twin_correlation),
                fmt_num(r.nu_minus),
                fmt_num(r.purity)
            )?;
            for s in r.sigma {
                write!(w, ",{}", fmt_num(s))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_scan_csv(w: &mut dyn Write, cfg: &ExperimentConfig, out: &ScanOutput) -> io::Result<()> {
    write_header(w, cfg, Mode::Scan)?;
    let axes: Vec<&str> = out.axes.iter().map(|a| a.column()).collect();
    writeln!(
        w,
        "index,{},status,t_F,censored,outcome,peak_E_N,message",
        axes.join(",")
    )?;
    for r in &out.records {
        write!(w, "{}", r.index)?;
        for c in &r.coords {
            write!(w, ",{}", fmt_num(*c))?;
        }
        let (t_f, censored, kind) = match &r.death_time {
            Some(d) => (d.value(), d.is_censored(), outcome(d)),
            None => (f64::NAN, false, status_name(r.status)),
        };
        writeln!(
            w,
            ",{},{},{},{},{},{}",
            status_name(r.status),
            fmt_num(t_f),
            censored,
            kind,
            fmt_num(r.peak_log_negativity.unwrap_or(f64::NAN)),
            quote(r.message.as_deref().unwrap_or(""))
        )?;
    }
    Ok(())
}

fn status_name(s: PointStatus) -> &'static str {
    match s {
        PointStatus::Ok => "ok",
        PointStatus::Skipped => "skipped",
        PointStatus::Failed => "failed",
    }
}

fn compare_summary(w: &mut dyn Write, c: &Comparison) -> io::Result<()> {
    summary_line(w, &c.markovian)?;
    summary_line(w, &c.non_markovian)?;
    writeln!(
        w,
        "# delta t_F={} relative_t_F={} peak_E_N={} peak_ratio={} max_abs_E_N={}",
        fmt_num(c.delta_death_time()),
        fmt_num(c.relative_delta_death_time()),
        fmt_num(c.delta_peak()),
        fmt_num(c.peak_ratio()),
        fmt_num(c.max_abs_difference())
    )
}

pub fn write_compare_csv(w: &mut dyn Write, cfg: &ExperimentConfig, c: &Comparison) -> io::Result<()> {
    write_header(w, cfg, Mode::Compare)?;
    compare_summary(w, c)?;
    writeln!(
        w,
        "t,E_N_markovian,E_N_non_markovian,d_markovian,d_non_markovian,\
         nu_minus_markovian,nu_minus_non_markovian,purity_markovian,purity_non_markovian"
    )?;
    for (a, b) in c.markovian.records.iter().zip(&c.non_markovian.records) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(a.t),
            fmt_num(a.log_negativity),
            fmt_num(b.log_negativity),
            fmt_num(a.twin_correlation),
            fmt_num(b.twin_correlation),
            fmt_num(a.nu_minus),
            fmt_num(b.nu_minus),
            fmt_num(a.purity),
            fmt_num(b.purity)
        )?;
    }
    Ok(())
}

fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn jsonl_header(w: &mut dyn Write, cfg: &ExperimentConfig, mode: Mode) -> io::Result<()> {
    let head = json!({
        "kind": "header",
        "tool": "twinosc",
        "version": TOOL_VERSION,
        "mode": mode.name(),
        "death_time_resolution": DEATH_TIME_RESOLUTION,
        "config": cfg,
    });
    writeln!(w, "{head}")
}

fn run_summary(run: &SingleRun) -> Value {
    json!({
        "kind": "summary",
        "curve": run.label,
        "t_F": json_num(run.death_time.value()),
        "censored": run.death_time.is_censored(),
        "outcome": outcome(&run.death_time),
        "peak_E_N": run.peak_log_negativity,
    })
}

pub fn write_run_jsonl(w: &mut dyn Write, cfg: &ExperimentConfig, runs: &[SingleRun]) -> io::Result<()> {
    jsonl_header(w, cfg, Mode::Run)?;
    for run in runs {
        writeln!(w, "{}", run_summary(run))?;
    }
    for run in runs {
        for r in &run.records {
            let row = json!({
                "kind": "sample",
                "curve": run.label,
                "t": r.t,
                "E_N": r.log_negativity,
                "d": r.twin_correlation,
                "nu_minus": r.nu_minus,
                "purity": r.purity,
                "sigma": r.sigma,
            });
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}

pub fn write_scan_jsonl(w: &mut dyn Write, cfg: &ExperimentConfig, out: &ScanOutput) -> io::Result<()> {
    jsonl_header(w, cfg, Mode::Scan)?;
    for r in &out.records {
        let coords: serde_json::Map<String, Value> = out
            .axes
            .iter()
            .zip(&r.coords)
            .map(|(a, v)| (a.column().to_string(), json!(v)))
            .collect();
        let row = json!({
            "kind": "point",
            "index": r.index,
            "coords": coords,
            "status": status_name(r.status),
            "t_F": r.death_time.map(|d| json_num(d.value())).unwrap_or(Value::Null),
            "censored": r.death_time.map(|d| d.is_censored()).unwrap_or(false),
            "outcome": r.death_time.as_ref().map(outcome).unwrap_or(status_name(r.status)),
            "peak_E_N": r.peak_log_negativity,
            "message": r.message,
        });
        writeln!(w, "{row}")?;
    }
    Ok(())
}

pub fn write_compare_jsonl(w: &mut dyn Write, cfg: &ExperimentConfig, c: &Comparison) -> io::Result<()> {
    jsonl_header(w, cfg, Mode::Compare)?;
    writeln!(w, "{}", run_summary(&c.markovian))?;
    writeln!(w, "{}", run_summary(&c.non_markovian))?;
    let delta = json!({
        "kind": "delta",
        "t_F": json_num(c.delta_death_time()),
        "relative_t_F": json_num(c.relative_delta_death_time()),
        "peak_E_N": json_num(c.delta_peak()),
        "peak_ratio": json_num(c.peak_ratio()),
        "max_abs_E_N": json_num(c.max_abs_difference()),
    });
    writeln!(w, "{delta}")?;
    for (a, b) in c.markovian.records.iter().zip(&c.non_markovian.records) {
        let row = json!({
            "kind": "sample",
            "t": a.t,
            "E_N": [a.log_negativity, b.log_negativity],
            "d": [a.twin_correlation, b.twin_correlation],
            "nu_minus": [a.nu_minus, b.nu_minus],
            "purity": [a.purity, b.purity],
        });
        writeln!(w, "{row}")?;
    }
    Ok(())
}
