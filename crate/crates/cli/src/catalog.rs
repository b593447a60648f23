//! The built-in manifold catalog: frozen manifest fixtures, plus seeded
//! `random-<seed>` warped products from the library generator.
//!
//! Quasi-Einstein coefficients are stated in the engine's curvature
//! convention (see the crate README): the textbook-sign pairs are their
//! negatives.

use thiserror::Error;

use warpgeom::sample::{random_generator_field, random_warped_product, SampleRng};
use warpgeom::warped::{PlacedField, Placement};

use crate::manifest::{self, Manifest, ManifestError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{name}`; available: {available}")]
    Unknown { name: String, available: String },
    #[error("built-in manifest `{name}` failed to load: {source}")]
    Invalid { name: String, source: ManifestError },
}

const FLAT_TRIVIAL: &str = r#"
warping = "1"

[base]
coords = ["t"]
metric = [["1"]]
box = [[-1.0, 1.0]]

[fiber]
coords = ["x"]
metric = [["1"]]
box = [[-1.0, 1.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = 0.0
b = 0.0
"#;

const POLAR_PLANE: &str = r#"
warping = "r"

[base]
coords = ["r"]
metric = [["1"]]
box = [[0.5, 2.0]]

[fiber]
coords = ["th"]
metric = [["1"]]
box = [[0.2, 6.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = 0.0
b = 0.0
"#;

const UNIT_SPHERE_WARPED: &str = r#"
warping = "sin(t)"

[base]
coords = ["t"]
metric = [["1"]]
box = [[0.25, 2.89]]

[fiber]
coords = ["ph"]
metric = [["1"]]
box = [[0.2, 6.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = -1.0
b = 0.0
"#;

const HYPERBOLIC2_SSNM: &str = r#"
warping = "exp(t)"

[base]
coords = ["t"]
metric = [["1"]]
box = [[-1.0, 1.0]]

[fiber]
coords = ["x"]
metric = [["1"]]
box = [[-1.0, 1.0]]


[p]
on = "base"
components = ["1"]

[[generators]]
on = "base"
components = ["1"]

[qe]
a = 2.0
b = -2.0
"#;

const HYPERBOLIC3: &str = r#"
warping = "exp(t)"

[base]
coords = ["t"]
metric = [["1"]]
box = [[-1.0, 1.0]]

[fiber]
coords = ["x", "y"]
metric = [["1", "0"], ["1"]]
box = [[-1.0, 1.0], [-1.0, 1.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = 2.0
b = 0.0
"#;

const R_CROSS_S2: &str = r#"
warping = "1"

[base]
coords = ["t"]
metric = [["1"]]
box = [[-1.0, 1.0]]

[fiber]
coords = ["th", "ph"]
metric = [["1", "0"], ["sin(th)^2"]]
box = [[0.3, 2.84], [0.2, 6.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = -1.0
b = 1.0
"#;

const MINKOWSKI_FLAT: &str = r#"
warping = "1"

[base]
coords = ["t"]
metric = [["1"]]
signature = [1]
box = [[-1.0, 1.0]]

[fiber]
coords = ["x"]
metric = [["-1"]]
signature = [-1]
box = [[-1.0, 1.0]]


[[generators]]
on = "base"
components = ["1"]

[qe]
a = 0.0
b = 0.0
"#;

const FIXED: [(&str, &str); 7] = [
    ("flat-trivial", FLAT_TRIVIAL),
    ("polar-plane", POLAR_PLANE),
    ("unit-sphere-warped", UNIT_SPHERE_WARPED),
    ("hyperbolic2-ssnm", HYPERBOLIC2_SSNM),
    ("hyperbolic3", HYPERBOLIC3),
    ("r-cross-s2", R_CROSS_S2),
    ("minkowski-flat", MINKOWSKI_FLAT),
];

/// Names of the fixed catalog entries, in their stable order.
pub fn names() -> Vec<&'static str> {
    FIXED.iter().map(|(n, _)| *n).collect()
}

fn available() -> String {
    let mut v: Vec<String> = names().iter().map(|s| s.to_string()).collect();
    v.push("random-<seed>".to_string());
    v.join(", ")
}

/// A `random-<seed>` manifest from the library generator: base-placed
/// generator field for even seeds, fiber-placed for odd ones.
fn random_entry(name: &str, seed: u64) -> Result<Manifest, CatalogError> {
    let mut rng = SampleRng::seed(seed);
    let placement = if seed % 2 == 0 { Placement::Base } else { Placement::Fiber };
    let rw = random_warped_product::<f64>(&mut rng, placement);
    let u = PlacedField::new(
        Placement::Base,
        random_generator_field(&mut rng, rw.wp.base(), 0),
    );
    let doc = manifest::manifest_doc(
        &rw.wp,
        &rw.base_box,
        &rw.fiber_box,
        Some(&rw.p),
        &[u],
        None,
    );
    manifest::validate(name, doc).map_err(|source| CatalogError::Invalid {
        name: name.to_string(),
        source,
    })
}

/// Load a catalog entry by name.
pub fn get(name: &str) -> Result<Manifest, CatalogError> {
    if let Some((_, text)) = FIXED.iter().find(|(n, _)| *n == name) {
        return manifest::load_str(name, text).map_err(|source| CatalogError::Invalid {
            name: name.to_string(),
            source,
        });
    }
    if let Some(seed_text) = name.strip_prefix("random-") {
        if let Ok(seed) = seed_text.parse::<u64>() {
            return random_entry(name, seed);
        }
    }
    Err(CatalogError::Unknown { name: name.to_string(), available: available() })
}

/// The manifest TOML of an entry, exactly as `catalog --show` prints it.
pub fn show(name: &str) -> Result<String, CatalogError> {
    if let Some((_, text)) = FIXED.iter().find(|(n, _)| *n == name) {
        return Ok(text.trim_start().to_string());
    }
    let manifest = get(name)?;
    Ok(toml::to_string(&manifest.doc).expect("generated manifest serializes"))
}
