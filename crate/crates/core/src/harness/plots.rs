use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// One plotted point.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

/// Trailing moving average over `window` points (shorter at the start).
pub fn trailing_mean(ys: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..ys.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(w);
            ys[lo..=k].iter().sum::<f64>() / (k + 1 - lo) as f64
        })
        .collect()
}

/// Rows of a CSV as column-name maps, failing if any required column is
/// missing from the header.
pub fn read_columns<R: Read>(r: R, required: &[&str], path: &str) -> Result<Vec<BTreeMap<String, String>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if let Some(missing) = required.iter().find(|c| !header.iter().any(|h| h == *c)) {
        return Err(Error::Schema {
            path: path.into(),
            detail: format!("missing column {missing:?}"),
        });
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(header.iter().cloned().zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, col: &str, path: &str) -> Result<f64> {
    row[col].parse().map_err(|_| Error::Schema {
        path: path.into(),
        detail: format!("column {col:?} holds non-numeric {:?}", row[col]),
    })
}

/// Validation curve from a training log: the raw points (`rl`) and their
/// trailing mean (`rl-smoothed`).
pub fn validation_series<R: Read>(log: R, window: usize, path: &str) -> Result<Vec<SeriesPoint>> {
    let rows = read_columns(log, &["iteration", "validation_reward"], path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows.iter().filter(|r| !r["validation_reward"].is_empty()) {
        xs.push(num(r, "iteration", path)?);
        ys.push(num(r, "validation_reward", path)?);
    }
    let smooth = trailing_mean(&ys, window);
    let mut out: Vec<SeriesPoint> = xs.iter().zip(&ys).map(|(&x, &y)| SeriesPoint { series: "rl".into(), x, y }).collect();
    out.extend(xs.iter().zip(&smooth).map(|(&x, &y)| SeriesPoint {
        series: "rl-smoothed".into(),
        x,
        y,
    }));
    Ok(out)
}

/// Mean reward per policy from an evaluation or metrics CSV, as flat
/// baselines spanning `xs`. Fixed-ED rows are labelled with their threshold.
pub fn baseline_series<R: Read>(eval: R, xs: &[f64], path: &str) -> Result<Vec<SeriesPoint>> {
    let rows = read_columns(eval, &["policy", "reward"], path)?;
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in &rows {
        let label = match r.get("threshold_dbm") {
            Some(t) if r["policy"] == "ed" => format!("ed({t})"),
            _ => r["policy"].clone(),
        };
        let e = acc.entry(label).or_default();
        e.0 += num(r, "reward", path)?;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .flat_map(|(series, (sum, n))| {
            let y = sum / n as f64;
            xs.iter().map(move |&x| SeriesPoint { series: series.clone(), x, y }).collect::<Vec<_>>()
        })
        .collect())
}

/// Per-configuration reward of every policy and counter mode from a
/// per-config table CSV; x is the 1-based configuration index.
pub fn counter_series<R: Read>(table: R, path: &str) -> Result<Vec<SeriesPoint>> {
    let rows = read_columns(table, &["counter_mode", "policy", "config_id", "mean_reward"], path)?;
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for r in &rows {
        let next = index.len() + 1;
        let x = *index.entry(r["config_id"].clone()).or_insert(next);
        out.push(SeriesPoint {
            series: format!("{}-{}", r["policy"], r["counter_mode"]),
            x: x as f64,
            y: num(r, "mean_reward", path)?,
        });
    }
    Ok(out)
}

/// Plot-data file: `series, x, y`.
pub fn write_series<W: Write>(points: &[SeriesPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["series", "x", "y"])?;
    for p in points {
        out.write_record([p.series.as_str(), &p.x.to_string(), &p.y.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("series", e))?;
    Ok(())
}

/// Inputs of [`emit_plots`]; each present file yields one series file.
#[derive(Clone, Debug, Default)]
pub struct PlotInputs {
    pub training_log: Option<PathBuf>,
    pub evaluation: Option<PathBuf>,
    pub counter_table_per_config: Option<PathBuf>,
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes `validation_curve.csv` (with flat baselines when an evaluation
/// CSV is given) and `counter_ablation.csv` into `out_dir`.
pub fn emit_plots(inputs: &PlotInputs, out_dir: &Path, window: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if let Some(log) = &inputs.training_log {
        let name = log.display().to_string();
        let mut pts = validation_series(open(log)?, window, &name)?;
        if let Some(eval) = &inputs.evaluation {
            let xs: Vec<f64> = pts.iter().filter(|p| p.series == "rl").map(|p| p.x).collect();
            pts.extend(baseline_series(open(eval)?, &xs, &eval.display().to_string())?);
        }
        let path = out_dir.join("validation_curve.csv");
        write_series(&pts, create(&path)?)?;
        written.push(path);
    }
    if let Some(t) = &inputs.counter_table_per_config {
        let pts = counter_series(open(t)?, &t.display().to_string())?;
        let path = out_dir.join("counter_ablation.csv");
        write_series(&pts, create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}
