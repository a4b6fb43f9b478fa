//! Turning `--surface`, `--param` and `--loop` into fronts.

use std::collections::BTreeMap;
use std::path::Path;

use frontlab::front::{Description, Front};
use frontlab::gallery::{self, GalleryError};
use frontlab::hyper::HyperFront;
use frontlab::zigzag::{self, NullLoop, PlaneFront, ZigzagError};
use serde::Deserialize;

use crate::{Common, Failure};

pub const HYPER_DEFAULTS: [(&str, f64); 3] = [("a", 1.0), ("b", 1.0), ("c", 0.0)];

/// A plane front stored on disk.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneFile {
    label: String,
    curve: String,
    normal: String,
    period: [f64; 2],
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

/// A closed curve `t ↦ (u, v)` in the domain of a surface front.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopFile {
    label: String,
    curve: String,
    period: [f64; 2],
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

pub fn params(c: &Common) -> BTreeMap<String, f64> {
    c.params.iter().cloned().collect()
}

fn is_file(name: &str) -> bool {
    name.ends_with(".toml") || Path::new(name).is_file()
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn surface_name(c: &Common) -> Result<&str, Failure> {
    c.surface.as_deref().ok_or_else(|| Failure::Usage("--surface is required".into()))
}

/// Applies `--param` overrides to parameters read from a file.
fn override_params(file: &mut BTreeMap<String, f64>, c: &Common, what: &str) -> Result<(), Failure> {
    for (k, v) in &c.params {
        match file.get_mut(k) {
            Some(slot) => *slot = *v,
            None => return Err(Failure::Usage(format!("{what} has no parameter `{k}`"))),
        }
    }
    Ok(())
}

fn description(c: &Common, path: &str) -> Result<Description, Failure> {
    let text = read(Path::new(path))?;
    let mut d = Description::from_toml(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    override_params(&mut d.params, c, path)?;
    Ok(d)
}

pub fn front(c: &Common) -> Result<Front, Failure> {
    let name = surface_name(c)?;
    if is_file(name) {
        let d = description(c, name)?;
        return Front::from_description(&d).map_err(|e| Failure::Usage(format!("{name}: {e}")));
    }
    gallery::gallery(name, &params(c)).map_err(|e| match e {
        GalleryError::Front(e) => Failure::Contract(e.to_string()),
        e => Failure::Usage(e.to_string()),
    })
}

/// A plane front from the plane gallery or a file with `curve` and `normal`.
pub fn plane(c: &Common) -> Result<Option<PlaneFront>, Failure> {
    let name = surface_name(c)?;
    if is_file(name) {
        let text = read(Path::new(name))?;
        let table: toml::Table = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
        if !table.contains_key("curve") {
            return Ok(None);
        }
        let mut f: PlaneFile = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
        override_params(&mut f.params, c, name)?;
        let p: Vec<(&str, f64)> = f.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        return PlaneFront::parse(&f.label, &f.curve, &f.normal, &p, f.period)
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{name}: {e}")));
    }
    if !zigzag::PLANE_ENTRIES.iter().any(|e| e.0 == name) {
        return Ok(None);
    }
    let p: Vec<(&str, f64)> = c.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    zigzag::plane_gallery(name, &p).map(Some).map_err(|e| Failure::Usage(e.to_string()))
}

pub fn null_loop(path: &Path) -> Result<NullLoop, Failure> {
    let text = read(path)?;
    let f: LoopFile = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let p: Vec<(&str, f64)> = f.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    NullLoop::parse(&f.label, &f.curve, &p, f.period).map_err(|e| match e {
        ZigzagError::Parse(_) | ZigzagError::Period(..) | ZigzagError::Dimension { .. } => {
            Failure::Usage(format!("{}: {e}", path.display()))
        }
        e => Failure::Contract(e.to_string()),
    })
}

/// The built-in cuspidal graph, or a description file with a `w` range.
pub fn hyper(c: &Common) -> Result<HyperFront, Failure> {
    match c.surface.as_deref() {
        Some(name) if is_file(name) => {
            let d = description(c, name)?;
            HyperFront::from_description(&d).map_err(|e| Failure::Usage(format!("{name}: {e}")))
        }
        Some(name) if name != "cuspidal_graph" => {
            Err(Failure::Usage(format!("unknown hypersurface `{name}`; use cuspidal_graph or a description file")))
        }
        _ => {
            let mut p: BTreeMap<String, f64> = HYPER_DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            override_params(&mut p, c, "cuspidal_graph")?;
            if let Some((k, v)) = p.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Failure::Usage(format!("parameter {k} = {v} is not finite")));
            }
            Ok(HyperFront::cuspidal_graph(p["a"], p["b"], p["c"]))
        }
    }
}

/// Whether a description file declares a `w` range.
pub fn is_hyper_file(c: &Common) -> Result<bool, Failure> {
    let Some(name) = c.surface.as_deref() else { return Ok(false) };
    if !is_file(name) {
        return Ok(name == "cuspidal_graph");
    }
    let text = read(Path::new(name))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
    Ok(table.get("domain").and_then(|d| d.get("w")).is_some())
}
