//! On-disk form of a relevance map: a CSV of values next to a JSON
//! sidecar holding the metadata needed to reproduce or reuse the map.
//!
//! Vector maps write one value per line; matrix maps write one row per
//! line with comma-separated columns. Values use the shortest decimal
//! form that parses back to the identical `f64`, so a write/read cycle
//! is lossless.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::GridSpec;
use crate::models::OutputKind;
use crate::relevance::RelevanceMap;
use crate::transforms::{Domain, Shape, WindowSpec};

#[derive(Debug, Serialize, Deserialize)]
struct MapSidecar {
    domain: Domain,
    shape: Shape,
    class: usize,
    n_masks: usize,
    keep_probability: f64,
    grid: Option<GridSpec>,
    seed: u64,
    output_kind: OutputKind,
    window: Option<WindowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = OsString::from(stem.as_os_str());
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes `stem.csv` and `stem.json`. `tag` is free-form provenance
/// (config hash, run id) carried in the sidecar.
pub fn write_relevance_map(
    stem: &Path,
    map: &RelevanceMap,
    tag: Option<&str>,
) -> Result<(PathBuf, PathBuf)> {
    let csv_path = with_suffix(stem, ".csv");
    let json_path = with_suffix(stem, ".json");

    let mut out = BufWriter::new(File::create(&csv_path)?);
    let shape = map.shape();
    if shape.is_vector() {
        for v in map.values() {
            writeln!(out, "{v}")?;
        }
    } else {
        for row in map.values().chunks(shape.cols) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;

    let sidecar = MapSidecar {
        domain: map.domain(),
        shape,
        class: map.class(),
        n_masks: map.n_masks(),
        keep_probability: map.keep_probability(),
        grid: map.grid(),
        seed: map.seed(),
        output_kind: map.output_kind(),
        window: map.window().copied(),
        tag: tag.map(str::to_owned),
    };
    let mut out = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut out, &sidecar)
        .map_err(|e| Error::InvalidFormat(format!("sidecar serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok((csv_path, json_path))
}

/// Reads a map written by [`write_relevance_map`], returning it together
/// with the sidecar tag if one was stored.
pub fn read_relevance_map(stem: &Path) -> Result<(RelevanceMap, Option<String>)> {
    let csv_path = with_suffix(stem, ".csv");
    let json_path = with_suffix(stem, ".json");

    let mut raw = String::new();
    File::open(&json_path)
        .map_err(|e| {
            if e.kind() == ErrorKind::NotFound {
                Error::InvalidFormat(format!("missing sidecar {}", json_path.display()))
            } else {
                Error::Io(e)
            }
        })?
        .read_to_string(&mut raw)?;
    let sidecar: MapSidecar = serde_json::from_str(&raw)
        .map_err(|e| Error::InvalidFormat(format!("bad sidecar {}: {e}", json_path.display())))?;

    let shape = sidecar.shape;
    let mut values = Vec::with_capacity(shape.len());
    let reader = BufReader::new(File::open(&csv_path)?);
    let mut rows = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            return Err(Error::InvalidFormat(format!(
                "{}: empty line {}",
                csv_path.display(),
                lineno + 1
            )));
        }
        let expected = if shape.is_vector() { 1 } else { shape.cols };
        let mut cols = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidFormat(format!(
                    "{}: line {}: not a number: {field:?}",
                    csv_path.display(),
                    lineno + 1
                ))
            })?;
            values.push(v);
            cols += 1;
        }
        if cols != expected {
            return Err(Error::InvalidFormat(format!(
                "{}: line {} has {cols} values, expected {expected}",
                csv_path.display(),
                lineno + 1
            )));
        }
        rows += 1;
    }
    let expected_rows = if shape.is_vector() { shape.len() } else { shape.rows };
    if rows != expected_rows {
        return Err(Error::InvalidFormat(format!(
            "{}: {rows} lines, sidecar shape {shape} expects {expected_rows}",
            csv_path.display()
        )));
    }

    let map = RelevanceMap::from_parts(
        values,
        shape,
        sidecar.domain,
        sidecar.class,
        sidecar.n_masks,
        sidecar.keep_probability,
        sidecar.grid,
        sidecar.seed,
        sidecar.output_kind,
        sidecar.window,
    )?;
    Ok((map, sidecar.tag))
}
