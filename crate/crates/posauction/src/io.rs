//! Reading inputs and writing reports. Every writer is a pure function of
//! its inputs, so rerunning with the same arguments reproduces the same bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use posauction_core::agents::Trajectory;
use posauction_core::experiments::{trends, ExperimentOutput, LiftReport};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Serializes `rows` with a header taken from the struct fields.
pub fn write_csv_rows<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per iteration: market totals, then `delta_i`, `wel_i`, `rev_i`
/// for every bidder.
pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut w = csv_writer(path)?;
    let n = trajectory.first().multipliers.len();
    let mut header = vec!["iteration".to_string(), "welfare".into(), "revenue".into(), "avg_multiplier".into()];
    for prefix in ["delta", "wel", "rev"] {
        header.extend((0..n).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header)?;
    for (t, rec) in trajectory.records.iter().enumerate() {
        let mut row = vec![t.to_string(), rec.wel.to_string(), rec.rev.to_string(), rec.avg_multiplier.to_string()];
        for col in [&rec.multipliers, &rec.wel_i, &rec.rev_i] {
            row.extend(col.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    treatment: &'a str,
    gamma: f64,
    wel_lift_mean: f64,
    wel_lift_ci: f64,
    rev_lift_mean: f64,
    rev_lift_ci: f64,
}

pub fn write_summary(out: impl Write, report: &LiftReport) -> Result<()> {
    let rows: Vec<SummaryRow> = report
        .treatments
        .iter()
        .map(|t| SummaryRow {
            treatment: t.treatment.kind.name(),
            gamma: t.treatment.gamma,
            wel_lift_mean: t.welfare.mean,
            wel_lift_ci: t.welfare.ci,
            rev_lift_mean: t.revenue.mean,
            rev_lift_ci: t.revenue.ci,
        })
        .collect();
    write_csv_rows(out, &rows)
}

#[derive(Serialize)]
struct WelfareTrendRow<'a> {
    treatment: &'a str,
    iteration: usize,
    welfare: f64,
    welfare_ratio: f64,
    revenue: f64,
}

#[derive(Serialize)]
struct MultiplierTrendRow<'a> {
    treatment: &'a str,
    iteration: usize,
    avg_multiplier: f64,
}

/// Writes `welfare_trend.csv` and `multiplier_trend.csv`, averaged over runs.
pub fn write_trends(dir: &Path, output: &ExperimentOutput) -> Result<()> {
    let rows = trends(output);
    let welfare: Vec<WelfareTrendRow> = rows
        .iter()
        .map(|r| WelfareTrendRow {
            treatment: &r.treatment,
            iteration: r.iteration,
            welfare: r.welfare,
            welfare_ratio: r.welfare_ratio,
            revenue: r.revenue,
        })
        .collect();
    let mult: Vec<MultiplierTrendRow> = rows
        .iter()
        .map(|r| MultiplierTrendRow {
            treatment: &r.treatment,
            iteration: r.iteration,
            avg_multiplier: r.avg_multiplier,
        })
        .collect();
    write_csv_rows(create(&dir.join("welfare_trend.csv"))?, &welfare)?;
    write_csv_rows(create(&dir.join("multiplier_trend.csv"))?, &mult)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

/// Everything an experiment produces: the lift report, summary table, trend
/// series and one trajectory file per run and treatment (plus the pretrain
/// phase as `traj_<run>_pretrain.csv`).
pub fn write_experiment(dir: &Path, output: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("report.json"), &output.report)?;
    write_summary(create(&dir.join("summary.csv"))?, &output.report)?;
    write_trends(dir, output)?;
    for run in &output.runs {
        write_trajectory(&dir.join(format!("traj_{}_pretrain.csv", run.run)), &run.pretrain)?;
        for t in &run.treatments {
            write_trajectory(&dir.join(format!("traj_{}_{}.csv", run.run, t.label)), &t.trajectory)?;
        }
    }
    Ok(())
}
