use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::harness::BenchmarkReport;
use super::metrics::Metric;
use crate::error::Result;

pub const BENCHMARK_JSON: &str = "benchmark.json";
pub const BENCHMARK_CSV: &str = "benchmark.csv";
pub const PLOT_DIR: &str = "plotdata";

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Schema(format!("{other:?}")),
    }
}

#[derive(Serialize)]
struct MetricLine<'a> {
    model: &'a str,
    metric: &'static str,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct BarLine<'a> {
    model: &'a str,
    metric: &'static str,
    mean: f64,
    std: f64,
    reference_mean: f64,
}

#[derive(Serialize)]
struct AdvantageLine<'a> {
    model: &'a str,
    metric: &'static str,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct MapLine<'a> {
    name: &'a str,
    mae: f64,
    mse: f64,
    rmse: f64,
    pearson_r: Option<f64>,
    winner: bool,
}

/// Writes the JSON report, the per-model CSV and the plot-data CSVs.
/// Returns every path written.
pub fn write_benchmark_files(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let plot = dir.join(PLOT_DIR);
    fs::create_dir_all(&plot)?;
    let mut written = Vec::new();

    let json = dir.join(BENCHMARK_JSON);
    fs::write(&json, serde_json::to_string_pretty(report)?)?;
    written.push(json);

    let mut lines = Vec::new();
    let mut bars = Vec::new();
    for m in report.models.iter().chain(std::iter::once(&report.reference)) {
        for metric in Metric::ALL {
            let s = m.summary(metric);
            lines.push(MetricLine {
                model: &m.model,
                metric: metric.name(),
                mean: s.mean,
                std: s.std,
            });
            if m.model != report.reference.model {
                bars.push(BarLine {
                    model: &m.model,
                    metric: metric.name(),
                    mean: s.mean,
                    std: s.std,
                    reference_mean: report.reference.summary(metric).mean,
                });
            }
        }
    }
    let csv_path = dir.join(BENCHMARK_CSV);
    write_csv_rows(&csv_path, &lines)?;
    written.push(csv_path);

    let bars_path = plot.join("bars.csv");
    write_csv_rows(&bars_path, &bars)?;
    written.push(bars_path);

    let mut adv = Vec::new();
    for row in &report.advantage {
        for (metric, ratio) in [(Metric::Mae, row.mae), (Metric::Mse, row.mse), (Metric::Rmse, row.rmse)] {
            adv.push(AdvantageLine {
                model: &row.model,
                metric: metric.name(),
                ratio,
            });
        }
    }
    let adv_path = plot.join("advantage.csv");
    write_csv_rows(&adv_path, &adv)?;
    written.push(adv_path);

    let scatter = plot.join("scatter.csv");
    write_csv_rows(&scatter, &report.predictions)?;
    written.push(scatter);

    if let Some(cmp) = &report.feature_maps {
        let rows: Vec<MapLine> = cmp
            .rows
            .iter()
            .map(|r| MapLine {
                name: &r.name,
                mae: r.metrics.mae,
                mse: r.metrics.mse,
                rmse: r.metrics.rmse,
                pearson_r: r.metrics.pearson_r,
                winner: r.name == cmp.winner,
            })
            .collect();
        let path = plot.join("feature_maps.csv");
        write_csv_rows(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}
