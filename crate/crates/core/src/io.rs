//! On-disk formats: grid JSON, field CSV, pattern CSV with its dataset
//! sidecar, and JSON reports.
//!
//! A field file is one CSV row per node, coordinates first and the value
//! last, in node order; the grid shape is recoverable from the row count and
//! column count, and coordinates are validated against the implied lattice.
//! Pattern files hold one row per point; empty patterns exist only in the
//! sidecar's `counts` array.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, IntensityField};
use crate::grid::{make_grid, GridSpec};
use crate::mcmc::{PosteriorDraws, PosteriorSummary};
use crate::point_process::{Dataset, PointPattern, SeedProvenance};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct GridJson {
    dim: usize,
    points_per_axis: usize,
}

pub fn write_grid_json<S: Scalar>(grid: &GridSpec<S>, path: &Path) -> Result<()> {
    let body = serde_json::to_string_pretty(&GridJson {
        dim: grid.dim(),
        points_per_axis: grid.points_per_axis(),
    })?;
    fs::write(path, body)?;
    Ok(())
}

pub fn read_grid_json<S: Scalar>(path: &Path) -> Result<Arc<GridSpec<S>>> {
    let raw = fs::read_to_string(path)?;
    let parsed: GridJson = serde_json::from_str(&raw)?;
    make_grid(parsed.dim, parsed.points_per_axis)
}

/// Writes a field as CSV with header `x0,…,x{d−1},value`, one row per node in
/// node order.
pub fn write_field_csv<S: Scalar>(field: &impl GridField<S>, path: &Path) -> Result<()> {
    let grid = field.grid();
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..grid.dim()).map(|a| format!("x{a}")).collect();
    header.push("value".into());
    writer.write_record(&header)?;
    for (node, &v) in field.values().iter().enumerate() {
        let mut record: Vec<String> = (0..grid.dim())
            .map(|a| format!("{}", grid.node_coord(node, a)))
            .collect();
        record.push(format!("{v}"));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a field CSV back into an intensity field. The grid shape is inferred
/// (`dim` from the column count, `m` from the row count) and the coordinates
/// are checked against the lattice; the floor is set to the minimum value.
pub fn read_field_csv<S: Scalar>(path: &Path) -> Result<IntensityField<S>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header_len = reader.headers()?.len();
    if header_len < 2 {
        return Err(malformed(path, "need at least one coordinate column and a value"));
    }
    let dim = header_len - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != header_len {
            return Err(malformed(path, "ragged row"));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(parsed.map_err(|e| malformed(path, format!("bad number: {e}")))?);
    }
    if rows.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    let n_nodes = rows.len();
    let m = (n_nodes as f64).powf(1.0 / dim as f64).round() as usize;
    if m < 2 || m.pow(dim as u32) != n_nodes {
        return Err(malformed(
            path,
            format!("{n_nodes} rows with {dim} coordinate(s) is not a full lattice"),
        ));
    }
    let grid = make_grid::<S>(dim, m)?;
    let mut values = Vec::with_capacity(n_nodes);
    for (node, row) in rows.iter().enumerate() {
        for (a, &coord) in row.iter().enumerate().take(dim) {
            let expect = grid.node_coord(node, a).to_f64().unwrap_or(f64::NAN);
            if (coord - expect).abs() > 1e-6 {
                return Err(malformed(
                    path,
                    format!("row {node} coordinate {a} is {coord} but the lattice has {expect}"),
                ));
            }
        }
        let v = row[dim];
        if v < 0.0 {
            return Err(Error::NonPositiveIntensity { node });
        }
        values.push(S::of(v));
    }
    let floor = values.iter().copied().fold(S::infinity(), S::min);
    IntensityField::new(grid, values, floor)
}

/// Sidecar manifest of a dataset; `counts` preserves empty patterns that have
/// no rows in the CSV.
#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub dim: usize,
    pub counts: Vec<usize>,
    #[serde(default = "external")]
    pub seed_provenance: SeedProvenance,
}

fn external() -> SeedProvenance {
    SeedProvenance::External
}

pub const PATTERNS_FILE: &str = "patterns.csv";
pub const DATASET_MANIFEST_FILE: &str = "dataset.json";

/// Writes `patterns.csv` plus the `dataset.json` sidecar into `dir`.
pub fn write_dataset<S: Scalar>(data: &Dataset<S>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut writer = csv::Writer::from_path(dir.join(PATTERNS_FILE))?;
    let mut header: Vec<String> = vec!["pattern_id".into()];
    header.extend((0..data.dim()).map(|a| format!("x{a}")));
    writer.write_record(&header)?;
    for (id, pattern) in data.patterns().iter().enumerate() {
        for point in pattern.points() {
            let mut record = vec![format!("{id}")];
            record.extend(point.iter().map(|c| format!("{c}")));
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;

    let manifest = DatasetManifest {
        n: data.n_patterns(),
        dim: data.dim(),
        counts: data.counts(),
        seed_provenance: data.seed_provenance().clone(),
    };
    fs::write(
        dir.join(DATASET_MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset<S: Scalar>(dir: &Path) -> Result<Dataset<S>> {
    let manifest_path = dir.join(DATASET_MANIFEST_FILE);
    let manifest: DatasetManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    if manifest.counts.len() != manifest.n {
        return Err(malformed(&manifest_path, "counts length disagrees with n"));
    }
    let csv_path = dir.join(PATTERNS_FILE);
    let mut reader = csv::Reader::from_path(&csv_path)?;
    let mut coords: Vec<Vec<S>> = vec![Vec::new(); manifest.n];
    for record in reader.records() {
        let record = record?;
        if record.len() != manifest.dim + 1 {
            return Err(malformed(&csv_path, "ragged row"));
        }
        let id: usize = record[0]
            .trim()
            .parse()
            .map_err(|e| malformed(&csv_path, format!("bad pattern_id: {e}")))?;
        if id >= manifest.n {
            return Err(malformed(&csv_path, format!("pattern_id {id} out of range")));
        }
        for raw in record.iter().skip(1) {
            let x: f64 = raw
                .trim()
                .parse()
                .map_err(|e| malformed(&csv_path, format!("bad coordinate: {e}")))?;
            coords[id].push(S::of(x));
        }
    }
    let mut patterns = Vec::with_capacity(manifest.n);
    for (id, flat) in coords.into_iter().enumerate() {
        let pattern = PointPattern::new(manifest.dim, flat)?;
        if pattern.n_points() != manifest.counts[id] {
            return Err(malformed(
                &csv_path,
                format!(
                    "pattern {id} has {} rows but the manifest records {}",
                    pattern.n_points(),
                    manifest.counts[id]
                ),
            ));
        }
        patterns.push(pattern);
    }
    Dataset::new(patterns, manifest.seed_provenance)
}

/// Node-wise posterior summary CSV: coordinates, mean, and the 90% band.
pub fn write_summary_csv<S: Scalar>(
    grid: &GridSpec<S>,
    summary: &PosteriorSummary<S>,
    path: &Path,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..grid.dim()).map(|a| format!("x{a}")).collect();
    header.extend(["mean".into(), "q05".into(), "q95".into()]);
    writer.write_record(&header)?;
    for node in 0..grid.n_nodes() {
        let mut record: Vec<String> = (0..grid.dim())
            .map(|a| format!("{}", grid.node_coord(node, a)))
            .collect();
        record.push(format!("{}", summary.node_mean[node]));
        record.push(format!("{}", summary.band_lower[node]));
        record.push(format!("{}", summary.band_upper[node]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Long-format subsample of retained intensity draws
/// (`draw,node,value`), keeping at most `max_draws` evenly spaced draws.
pub fn write_draws_csv<S: Scalar>(
    draws: &PosteriorDraws<S>,
    max_draws: usize,
    path: &Path,
) -> Result<()> {
    let total = draws.len();
    let keep = max_draws.min(total).max(1);
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["draw", "node", "value"])?;
    for k in 0..keep {
        // evenly spaced over the retained draws
        let idx = k * total / keep;
        for (node, &v) in draws.intensity_draws[idx].values().iter().enumerate() {
            writer.write_record([format!("{idx}"), format!("{node}"), format!("{v}")])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json_pretty<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
