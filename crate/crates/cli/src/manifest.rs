//! Manifest loading and validation: a TOML document describing a warped
//! product, its sampling boxes, optional generator field and quasi-Einstein
//! structure, tolerances, and sampling controls. Everything is validated
//! (parse + invariants) before any computation starts.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use warpgeom::expr::{parse, ParseError};
use warpgeom::geometry::{ChartManifold, GeomError, VectorField};
use warpgeom::sample::SampleBox;
use warpgeom::warped::{PlacedField, Placement, WarpedProduct};
use warpgeom::{Chart64, Expr64, Field64, Warped64};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{field}: {reason}")]
    Schema { field: String, reason: String },
    #[error("{field}: expression error: {source}")]
    Expr { field: String, source: ParseError },
    #[error("{field}: {source}")]
    Geometry { field: String, source: GeomError },
}

fn schema(field: &str, reason: impl Into<String>) -> ManifestError {
    ManifestError::Schema { field: field.into(), reason: reason.into() }
}

/// Serde-level document; see `Manifest` for the validated form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDoc {
    /// Warping expression over the base coordinates (kept first: the only
    /// top-level bare key, so serialized documents are valid TOML).
    pub warping: String,
    pub base: ChartDoc,
    pub fiber: ChartDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<FieldDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<FieldDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qe: Option<QeDoc>,
    #[serde(default)]
    pub tolerances: TolerancesDoc,
    #[serde(default)]
    pub sampling: SamplingDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDoc {
    pub coords: Vec<String>,
    /// Rows of expression strings. Row `i` holds either the full row
    /// (length n) or the upper triangle from the diagonal (length n - i).
    pub metric: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<Vec<i8>>,
    /// Admissibility intervals, one `[lo, hi]` pair per coordinate.
    #[serde(rename = "box")]
    pub sample_box: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDoc {
    pub on: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QeDoc {
    pub a: f64,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesDoc {
    #[serde(default = "default_identity_tol")]
    pub identity: f64,
    #[serde(default = "default_fit_tol")]
    pub fit: f64,
}

impl Default for TolerancesDoc {
    fn default() -> Self {
        TolerancesDoc { identity: default_identity_tol(), fit: default_fit_tol() }
    }
}

fn default_identity_tol() -> f64 {
    1e-7
}

fn default_fit_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingDoc {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SamplingDoc {
    fn default() -> Self {
        SamplingDoc { points: default_points(), seed: default_seed() }
    }
}

fn default_points() -> usize {
    50
}

fn default_seed() -> u64 {
    42
}

/// A fully validated manifest: the assembled warped product, sampling
/// boxes, optional generator and quasi-Einstein structure, and controls.
pub struct Manifest {
    pub name: String,
    pub wp: Warped64,
    pub base_box: SampleBox<f64>,
    pub fiber_box: SampleBox<f64>,
    pub p: Option<PlacedField<f64>>,
    pub generators: Vec<PlacedField<f64>>,
    pub qe: Option<QeDoc>,
    pub identity_tol: f64,
    pub fit_tol: f64,
    pub points: usize,
    pub seed: u64,
    /// The source document (for `catalog --show` round-trips).
    pub doc: ManifestDoc,
}

impl Manifest {
    pub fn ambient_box(&self) -> SampleBox<f64> {
        self.base_box.join(&self.fiber_box)
    }
}

fn build_chart(which: &str, doc: &ChartDoc) -> Result<(Chart64, SampleBox<f64>), ManifestError> {
    let n = doc.coords.len();
    if n == 0 {
        return Err(schema(&format!("{which}.coords"), "at least one coordinate required"));
    }
    let coords: Arc<[String]> = doc.coords.clone().into();
    if doc.metric.len() != n {
        return Err(schema(
            &format!("{which}.metric"),
            format!("expected {n} rows, found {}", doc.metric.len()),
        ));
    }
    // Parse rows; accept full rows or upper-triangle rows.
    let mut grid: Vec<Vec<Option<Expr64>>> = vec![vec![None; n]; n];
    for (i, row) in doc.metric.iter().enumerate() {
        let field = format!("{which}.metric[{i}]");
        let entries: Vec<(usize, &String)> = if row.len() == n {
            row.iter().enumerate().collect()
        } else if row.len() == n - i {
            row.iter().enumerate().map(|(k, s)| (i + k, s)).collect()
        } else {
            return Err(schema(
                &field,
                format!("row must have {n} entries (full) or {} (upper triangle)", n - i),
            ));
        };
        for (j, src) in entries {
            let e = parse::<f64>(src, &coords)
                .map_err(|source| ManifestError::Expr { field: format!("{field}[{j}]"), source })?;
            grid[i][j] = Some(e);
        }
    }
    // Mirror the upper triangle; validate any explicitly given lower entry.
    for i in 0..n {
        for j in 0..i {
            let upper = grid[j][i].clone().ok_or_else(|| {
                schema(&format!("{which}.metric[{j}][{i}]"), "upper-triangle entry missing")
            })?;
            match &grid[i][j] {
                Some(lower) if *lower != upper => {
                    return Err(schema(
                        &format!("{which}.metric[{i}][{j}]"),
                        "lower-triangle entry differs from its upper mirror",
                    ));
                }
                _ => grid[i][j] = Some(upper),
            }
        }
    }
    let metric: Vec<Vec<Expr64>> = grid
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.expect("filled above")).collect())
        .collect();
    let signature = doc.signature.clone().unwrap_or_else(|| vec![1; n]);
    let chart = ChartManifold::new(coords, metric, signature)
        .map_err(|source| ManifestError::Geometry { field: format!("{which}"), source })?;
    if doc.sample_box.len() != n {
        return Err(schema(
            &format!("{which}.box"),
            format!("expected {n} intervals, found {}", doc.sample_box.len()),
        ));
    }
    let sample_box = SampleBox::new(doc.sample_box.iter().map(|&[lo, hi]| (lo, hi)).collect())
        .map_err(|source| ManifestError::Geometry { field: format!("{which}.box"), source })?;
    Ok((chart, sample_box))
}

fn build_field(
    field_name: &str,
    doc: &FieldDoc,
    wp: &WarpedProduct<f64>,
) -> Result<PlacedField<f64>, ManifestError> {
    let placement = match doc.on.as_str() {
        "base" => Placement::Base,
        "fiber" => Placement::Fiber,
        other => {
            return Err(schema(
                &format!("{field_name}.on"),
                format!("must be \"base\" or \"fiber\", found \"{other}\""),
            ))
        }
    };
    let chart = match placement {
        Placement::Base => wp.base(),
        Placement::Fiber => wp.fiber(),
    };
    let mut components: Vec<Expr64> = Vec::with_capacity(doc.components.len());
    for (k, src) in doc.components.iter().enumerate() {
        let e = parse::<f64>(src, chart.coords()).map_err(|source| ManifestError::Expr {
            field: format!("{field_name}.components[{k}]"),
            source,
        })?;
        components.push(e);
    }
    let field = VectorField::new(chart, components)
        .map_err(|source| ManifestError::Geometry { field: field_name.into(), source })?;
    Ok(PlacedField::new(placement, field))
}

/// Validate a parsed document into a ready-to-run manifest.
pub fn validate(name: &str, doc: ManifestDoc) -> Result<Manifest, ManifestError> {
    let (base, base_box) = build_chart("base", &doc.base)?;
    let (fiber, fiber_box) = build_chart("fiber", &doc.fiber)?;
    let warping = parse::<f64>(&doc.warping, base.coords())
        .map_err(|source| ManifestError::Expr { field: "warping".into(), source })?;
    let wp = WarpedProduct::build(base, fiber, warping)
        .map_err(|source| ManifestError::Geometry { field: "warping".into(), source })?;

    let p = match &doc.p {
        Some(fd) => Some(build_field("p", fd, &wp)?),
        None => None,
    };
    let mut generators = Vec::new();
    for (k, fd) in doc.generators.iter().enumerate() {
        generators.push(build_field(&format!("generators[{k}]"), fd, &wp)?);
    }
    if let Some(qe) = &doc.qe {
        let needed = if qe.c.is_some() { 2 } else { 1 };
        if generators.len() < needed {
            return Err(schema(
                "qe",
                format!("needs {needed} generator field(s), found {}", generators.len()),
            ));
        }
    }
    if doc.sampling.points == 0 {
        return Err(schema("sampling.points", "must be positive"));
    }
    if doc.tolerances.identity <= 0.0 || doc.tolerances.fit <= 0.0 {
        return Err(schema("tolerances", "must be positive"));
    }

    Ok(Manifest {
        name: name.to_string(),
        wp,
        base_box,
        fiber_box,
        p,
        generators,
        qe: doc.qe.clone(),
        identity_tol: doc.tolerances.identity,
        fit_tol: doc.tolerances.fit,
        points: doc.sampling.points,
        seed: doc.sampling.seed,
        doc,
    })
}

/// Parse and validate a manifest from TOML text.
pub fn load_str(name: &str, text: &str) -> Result<Manifest, ManifestError> {
    let doc: ManifestDoc = toml::from_str(text)?;
    validate(name, doc)
}

/// Load a manifest from a file path.
pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path)?;
    load_str(&path.display().to_string(), &text)
}

/// Convert a field placement back to its document form (used when emitting
/// generated manifests).
pub fn field_doc(placed: &PlacedField<f64>) -> FieldDoc {
    FieldDoc {
        on: placed.placement().to_string(),
        components: placed.field().components().iter().map(|e| e.to_string()).collect(),
    }
}

/// Document form of a chart plus its sampling box.
pub fn chart_doc(chart: &Chart64, sample_box: &SampleBox<f64>) -> ChartDoc {
    let n = chart.dim();
    ChartDoc {
        coords: chart.coords().iter().cloned().collect(),
        metric: (0..n)
            .map(|i| (i..n).map(|j| chart.metric_entry(i, j).to_string()).collect())
            .collect(),
        signature: Some(chart.signature().to_vec()),
        sample_box: sample_box.intervals().iter().map(|&(lo, hi)| [lo, hi]).collect(),
    }
}

/// Document form of a full warped-product manifest.
pub fn manifest_doc(
    wp: &Warped64,
    base_box: &SampleBox<f64>,
    fiber_box: &SampleBox<f64>,
    p: Option<&PlacedField<f64>>,
    generators: &[PlacedField<f64>],
    qe: Option<QeDoc>,
) -> ManifestDoc {
    ManifestDoc {
        warping: wp.warping().to_string(),
        base: chart_doc(wp.base(), base_box),
        fiber: chart_doc(wp.fiber(), fiber_box),
        p: p.map(field_doc),
        generators: generators.iter().map(field_doc).collect(),
        qe,
        tolerances: TolerancesDoc::default(),
        sampling: SamplingDoc::default(),
    }
}

#[allow(dead_code)]
fn _field_types_are_concrete(_: &Field64) {}
