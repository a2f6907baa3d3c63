//! Artifact persistence: CSV tables, JSON summaries, and sample ingestion.
//!
//! Floats in CSV files are written with 17 significant digits so that
//! export → ingest round-trips reproduce every value bit-for-bit. JSON files
//! go through serde_json, whose shortest-round-trip float encoding is also
//! lossless. Wall-clock timings live in their own file so that report.json
//! stays byte-identical across repeated runs.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::ExperimentOutcome;
use crate::landscape::{LandscapeSurface, LowerHullEnvelope};
use crate::sampler::{Sample, SampleSet};

/// Formats a float with 17 significant digits (lossless for f64).
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the sample table: one row per saved sample, densities inline.
pub fn write_samples_csv(path: &Path, set: &SampleSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = set.samples.first().map_or(0, |s| s.design.len());
    let mut header = vec![
        "group_id".to_string(),
        "iteration".to_string(),
        "is_reference".to_string(),
        "raw_j".to_string(),
        "clipped_j".to_string(),
    ];
    header.extend((0..n).map(|e| format!("rho{e}")));
    w.write_record(&header)?;
    for s in &set.samples {
        let mut row = vec![
            s.group_id.to_string(),
            s.iteration.to_string(),
            s.is_reference.to_string(),
            fmt_g17(s.raw_j),
            fmt_g17(s.clipped_j),
        ];
        row.extend(s.design.iter().map(|&v| fmt_g17(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Ingestion result: the reconstructed sample set plus bookkeeping.
#[derive(Debug)]
pub struct IngestedSamples {
    pub set: SampleSet,
    /// Densities clamped back into [rho_min, 1].
    pub clamped_densities: usize,
    /// The file used the minimal header (no clipped/reference columns), so
    /// clipped values still need the objective's clip bound applied.
    pub minimal_header: bool,
}

fn normalize_column(name: &str) -> String {
    name.trim()
        .chars()
        .filter(|c| *c != '_' && *c != '-')
        .collect::<String>()
        .to_ascii_lowercase()
}

fn parse_field<T: std::str::FromStr>(field: &str, row: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| {
        Error::Ingest(format!("row {row}: cannot parse {what} from {field:?}"))
    })
}

/// Reads a sample CSV. Accepts the full header written by
/// [`write_samples_csv`] and the minimal `group_id,iteration,j,rho...` form.
/// Densities are clamped into [rho_min, 1] with a count of offending values.
pub fn ingest_samples(path: &Path, rho_min: f64, expected_n: Option<usize>) -> Result<IngestedSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Ingest(format!("cannot read header: {e}")))?
        .iter()
        .map(normalize_column)
        .collect();

    let full = ["groupid", "iteration", "isreference", "rawj", "clippedj"];
    let minimal = ["groupid", "iteration", "j"];
    let (minimal_header, meta_cols) = if headers.len() >= full.len()
        && headers[..full.len()] == full
    {
        (false, full.len())
    } else if headers.len() >= minimal.len() && headers[..minimal.len()] == minimal {
        (true, minimal.len())
    } else {
        return Err(Error::Ingest(format!(
            "unrecognized header; expected columns starting with {full:?} or {minimal:?}, got {headers:?}"
        )));
    };
    let n = headers.len() - meta_cols;
    if n == 0 {
        return Err(Error::Ingest("no density columns in header".into()));
    }
    if let Some(expect) = expected_n {
        if n != expect {
            return Err(Error::Ingest(format!(
                "{n} density columns but the configured mesh has {expect} elements"
            )));
        }
    }

    let mut samples = Vec::new();
    let mut clamped = 0usize;
    for (k, record) in reader.records().enumerate() {
        let row = k + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Ingest(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Ingest(format!(
                "row {row}: expected {} fields, got {}",
                headers.len(),
                record.len()
            )));
        }
        let group_id: usize = parse_field(&record[0], row, "group id")?;
        let iteration: usize = parse_field(&record[1], row, "iteration")?;
        let (is_reference, raw_j, clipped_j) = if minimal_header {
            let j: f64 = parse_field(&record[2], row, "objective")?;
            (false, j, j)
        } else {
            let flag = match record[2].trim() {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(Error::Ingest(format!(
                        "row {row}: cannot parse reference flag from {other:?}"
                    )))
                }
            };
            let raw: f64 = parse_field(&record[3], row, "raw objective")?;
            let clipped: f64 = parse_field(&record[4], row, "clipped objective")?;
            (flag, raw, clipped)
        };
        if !raw_j.is_finite() || !clipped_j.is_finite() {
            return Err(Error::Ingest(format!("row {row}: non-finite objective")));
        }
        let mut design = Vec::with_capacity(n);
        for (c, field) in record.iter().enumerate().skip(meta_cols) {
            let v: f64 = parse_field(field, row, &format!("density column {}", c - meta_cols))?;
            if !v.is_finite() {
                return Err(Error::Ingest(format!("row {row}: non-finite density")));
            }
            if v < rho_min || v > 1.0 {
                clamped += 1;
                design.push(v.clamp(rho_min, 1.0));
            } else {
                design.push(v);
            }
        }
        samples.push(Sample {
            group_id,
            iteration,
            is_reference,
            design,
            raw_j,
            clipped_j,
        });
    }
    if samples.is_empty() {
        return Err(Error::Ingest("no sample rows in file".into()));
    }

    let mut reference_group_id = None;
    for s in &samples {
        if s.is_reference {
            match reference_group_id {
                None => reference_group_id = Some(s.group_id),
                Some(g) if g == s.group_id => {}
                Some(g) => {
                    return Err(Error::Ingest(format!(
                        "two reference groups ({g} and {})",
                        s.group_id
                    )))
                }
            }
        }
    }
    if let Some(g) = reference_group_id {
        if samples.iter().any(|s| s.group_id == g && !s.is_reference) {
            return Err(Error::Ingest(format!(
                "group {g} mixes reference and non-reference rows"
            )));
        }
    }
    let num_groups = samples.iter().map(|s| s.group_id + 1).max().unwrap_or(0);
    Ok(IngestedSamples {
        set: SampleSet {
            samples,
            num_groups,
            reference_group_id,
            aborted_groups: Vec::new(),
        },
        clamped_densities: clamped,
        minimal_header,
    })
}

/// Writes the per-sample embedding coordinates.
pub fn write_embedding_csv(path: &Path, set: &SampleSet, coords: &[[f64; 2]]) -> Result<()> {
    if coords.len() != set.samples.len() {
        return Err(Error::InvalidParameter(format!(
            "{} embedding rows for {} samples",
            coords.len(),
            set.samples.len()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["group_id", "iteration", "is_reference", "x", "y"])?;
    for (s, c) in set.samples.iter().zip(coords) {
        w.write_record(&[
            s.group_id.to_string(),
            s.iteration.to_string(),
            s.is_reference.to_string(),
            fmt_g17(c[0]),
            fmt_g17(c[1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct SurfaceJson {
    j_min: f64,
    j_max: f64,
    constant_objective: bool,
    merged_duplicates: usize,
    points: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

pub fn write_surface_json(path: &Path, surface: &LandscapeSurface) -> Result<()> {
    let doc = SurfaceJson {
        j_min: surface.j_min,
        j_max: surface.j_max,
        constant_objective: surface.constant_objective,
        merged_duplicates: surface.merged_duplicates,
        points: surface
            .points
            .iter()
            .map(|p| [p.y[0], p.y[1], p.value])
            .collect(),
        triangles: surface.triangles(),
    };
    write_json(path, &doc)
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct HullJson {
    resolution: usize,
    flat_fallback: bool,
    num_faces: usize,
    faces: Vec<[[f64; 3]; 3]>,
    /// Barycentric query rows [x, y, envelope height, gap].
    queries: Vec<[f64; 4]>,
}

pub fn write_hull_json(
    path: &Path,
    surface: &LandscapeSurface,
    envelope: &LowerHullEnvelope,
) -> Result<()> {
    let mut queries = Vec::with_capacity(envelope.samples.len());
    for s in &envelope.samples {
        let f = surface.interpolate(s.y)?;
        queries.push([s.y[0], s.y[1], s.height, (f - s.height).abs()]);
    }
    let doc = HullJson {
        resolution: envelope.resolution,
        flat_fallback: envelope.flat_fallback,
        num_faces: envelope.faces.len(),
        faces: envelope.faces.clone(),
        queries,
    };
    write_json(path, &doc)
}

/// Serializes any document as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes every artifact of a finished run into `dir`.
pub fn write_artifacts(dir: &Path, outcome: &ExperimentOutcome, bands: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_samples_csv(&dir.join("samples.csv"), &outcome.samples)?;
    write_embedding_csv(
        &dir.join("embedding.csv"),
        &outcome.samples,
        &outcome.analysis.embedding.coords,
    )?;
    write_surface_json(&dir.join("surface.json"), &outcome.analysis.surface)?;
    write_hull_json(
        &dir.join("hull.json"),
        &outcome.analysis.surface,
        &outcome.analysis.envelope,
    )?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_json(&dir.join("timings.json"), &outcome.timings)?;
    let svg = crate::svg::SvgOptions {
        bands,
        ..crate::svg::SvgOptions::default()
    };
    crate::svg::write_surface_svg(
        &dir.join("surface.svg"),
        &outcome.analysis.surface,
        &outcome.analysis.envelope,
        &outcome.samples,
        &outcome.analysis.embedding.coords,
        &svg,
    )?;
    crate::svg::write_contour_svg(
        &dir.join("contour.svg"),
        &outcome.analysis.surface,
        &outcome.samples,
        &outcome.analysis.embedding.coords,
        &svg,
    )?;
    Ok(())
}

/// Writes the 1D transform demo table with one row per reference abscissa.
pub fn write_lft_demo_csv(
    path: &Path,
    xs: &[f64],
    phi: &[f64],
    biconj_hi: &[f64],
    biconj_coarse: &[f64],
    hull: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "phi", "biconj_hi", "biconj_50", "hull"])?;
    for i in 0..xs.len() {
        w.write_record(&[
            fmt_g17(xs[i]),
            fmt_g17(phi[i]),
            fmt_g17(biconj_hi[i]),
            fmt_g17(biconj_coarse[i]),
            fmt_g17(hull[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
