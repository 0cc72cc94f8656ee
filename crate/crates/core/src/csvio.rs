//! CSV emission and parsing for recordings and reports.
//!
//! All floating-point values are rendered with nine significant digits in
//! scientific notation, which round-trips losslessly through `f64` parsing.
//! Recorded calcium samples are canonicalized through the same rendering,
//! so metrics recomputed from the written files match the in-memory values
//! bit for bit.

use std::fs;
use std::path::Path;

use crate::engine::{CalciumSample, Recording};
use crate::error::{Error, Result};
use crate::experiments::{DiscriminationReport, RecognitionReport};
use crate::fabric::{Population, WeightRecord};

/// Nine significant digits, `.` decimal separator.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Quantizes a value to its nine-digit CSV representation.
pub fn canon9(x: f64) -> f64 {
    fmt_sig9(x).parse().expect("sig9 rendering always parses")
}

/// `name,value` rows, with an optional trailing seed column when a sweep
/// produced the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub name: String,
    pub value: f64,
    pub seed: Option<u64>,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let seeded = rows.iter().any(|r| r.seed.is_some());
    let mut out = String::from(if seeded { "name,value,seed\n" } else { "name,value\n" });
    for row in rows {
        out.push_str(&row.name);
        out.push(',');
        out.push_str(&fmt_sig9(row.value));
        if seeded {
            out.push(',');
            out.push_str(&row.seed.map(|s| s.to_string()).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

/// `population,neuron,t_seconds` over a sequence of recordings laid out on
/// one concatenated time axis.
pub fn spikes_csv(recordings: &[Recording], offsets: &[f64]) -> String {
    let mut out = String::from("population,neuron,t_seconds\n");
    for (rec, offset) in recordings.iter().zip(offsets) {
        for pop in Population::ALL {
            for ev in rec.spikes(pop).events() {
                out.push_str(pop.as_str());
                out.push(',');
                out.push_str(&ev.channel.to_string());
                out.push(',');
                out.push_str(&fmt_sig9(ev.t + offset));
                out.push('\n');
            }
        }
    }
    out
}

/// `t_seconds,population,neuron,value` on the concatenated time axis.
pub fn calcium_csv(recordings: &[Recording], offsets: &[f64]) -> String {
    let mut out = String::from("t_seconds,population,neuron,value\n");
    for (rec, offset) in recordings.iter().zip(offsets) {
        for s in &rec.calcium {
            out.push_str(&fmt_sig9(s.t + offset));
            out.push(',');
            out.push_str(s.population.as_str());
            out.push(',');
            out.push_str(&s.index.to_string());
            out.push(',');
            out.push_str(&fmt_sig9(s.value));
            out.push('\n');
        }
    }
    out
}

/// `class,pre,post,w` in snapshot order.
pub fn weights_csv(records: &[WeightRecord]) -> String {
    let mut out = String::from("class,pre,post,w\n");
    for r in records {
        out.push_str(r.class.as_str());
        out.push(',');
        out.push_str(&r.pre.to_string());
        out.push(',');
        out.push_str(&r.post.to_string());
        out.push(',');
        out.push_str(&fmt_sig9(r.w));
        out.push('\n');
    }
    out
}

/// Parsed calcium row, population kept as text for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct CalciumRow {
    pub t: f64,
    pub population: String,
    pub neuron: usize,
    pub value: f64,
}

pub fn parse_calcium_csv(text: &str, path: &str) -> Result<Vec<CalciumRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == "t_seconds,population,neuron,value" => {}
        _ => {
            return Err(Error::Malformed {
                path: path.to_string(),
                row: 1,
                message: "expected header `t_seconds,population,neuron,value`".to_string(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Malformed {
                path: path.to_string(),
                row,
                message: "expected four fields".to_string(),
            });
        }
        let bad = |what: &str| Error::Malformed {
            path: path.to_string(),
            row,
            message: format!("bad {what} `{}`", line),
        };
        rows.push(CalciumRow {
            t: fields[0].trim().parse().map_err(|_| bad("time"))?,
            population: fields[1].trim().to_string(),
            neuron: fields[2].trim().parse().map_err(|_| bad("neuron"))?,
            value: fields[3].trim().parse().map_err(|_| bad("value"))?,
        });
    }
    Ok(rows)
}

/// Parses `class,pre,post,w`, returning the weight column.
pub fn parse_weights_csv(text: &str, path: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == "class,pre,post,w" => {}
        _ => {
            return Err(Error::Malformed {
                path: path.to_string(),
                row: 1,
                message: "expected header `class,pre,post,w`".to_string(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Malformed {
                path: path.to_string(),
                row,
                message: "expected four fields".to_string(),
            });
        }
        out.push(fields[3].trim().parse().map_err(|_| Error::Malformed {
            path: path.to_string(),
            row,
            message: format!("bad weight `{}`", fields[3]),
        })?);
    }
    Ok(out)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes the five-file set of a recognition run.
pub fn write_recognition(report: &RecognitionReport, out_dir: &Path) -> Result<()> {
    write_common(
        &report.recordings,
        &report.phase_offsets,
        &report.weights_pre,
        &report.weights_post,
        &report
            .metrics_rows()
            .into_iter()
            .map(|(name, value)| MetricsRow {
                name,
                value,
                seed: None,
            })
            .collect::<Vec<_>>(),
        out_dir,
    )
}

/// Writes the five-file set of a discrimination run.
pub fn write_discrimination(report: &DiscriminationReport, out_dir: &Path) -> Result<()> {
    write_common(
        &report.recordings,
        &report.phase_offsets,
        &report.weights_pre,
        &report.weights_post,
        &report
            .metrics_rows()
            .into_iter()
            .map(|(name, value)| MetricsRow {
                name,
                value,
                seed: None,
            })
            .collect::<Vec<_>>(),
        out_dir,
    )
}

/// Writes a raw run: start and end weight snapshots stand in for the
/// pre- and post-training files and the metrics file carries no rows.
pub fn write_simulation(recording: &Recording, out_dir: &Path) -> Result<()> {
    let recs = std::slice::from_ref(recording);
    let offsets = [0.0];
    write_file(&out_dir.join("spikes.csv"), &spikes_csv(recs, &offsets))?;
    write_file(&out_dir.join("calcium.csv"), &calcium_csv(recs, &offsets))?;
    write_file(
        &out_dir.join("weights_pre.csv"),
        &weights_csv(&recording.weights_start),
    )?;
    write_file(
        &out_dir.join("weights_post.csv"),
        &weights_csv(&recording.weights_end),
    )?;
    write_file(&out_dir.join("metrics.csv"), &metrics_csv(&[]))?;
    Ok(())
}

fn write_common(
    recordings: &[Recording],
    offsets: &[f64],
    weights_pre: &[WeightRecord],
    weights_post: &[WeightRecord],
    metrics: &[MetricsRow],
    out_dir: &Path,
) -> Result<()> {
    write_file(&out_dir.join("spikes.csv"), &spikes_csv(recordings, offsets))?;
    write_file(
        &out_dir.join("calcium.csv"),
        &calcium_csv(recordings, offsets),
    )?;
    write_file(&out_dir.join("weights_pre.csv"), &weights_csv(weights_pre))?;
    write_file(&out_dir.join("weights_post.csv"), &weights_csv(weights_post))?;
    write_file(&out_dir.join("metrics.csv"), &metrics_csv(metrics))?;
    Ok(())
}

/// Rebuilds calcium samples from parsed rows, for metric recomputation.
pub fn calcium_samples_from_rows(rows: &[CalciumRow]) -> Vec<CalciumSample> {
    rows.iter()
        .filter_map(|r| {
            let population = match r.population.as_str() {
                "pyramidal" => Population::Pyramidal,
                "inter" => Population::Inter,
                "readout" => Population::Readout,
                _ => return None,
            };
            Some(CalciumSample {
                t: r.t,
                population,
                index: r.neuron,
                value: r.value,
            })
        })
        .collect()
}
