//! Named example fronts with analytic normals.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::front::{Cap, Domain, End, Front, FrontError, Metadata};

#[derive(Debug, thiserror::Error)]
pub enum GalleryError {
    #[error("unknown gallery entry `{0}`")]
    UnknownName(String),
    #[error("`{entry}` has no parameter `{param}`")]
    UnknownParam { entry: &'static str, param: String },
    #[error("invalid parameter {param} = {value} for `{entry}`: {reason}")]
    InvalidParam {
        entry: &'static str,
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Front(#[from] FrontError),
}

type Build = fn(&BTreeMap<String, f64>) -> Result<Front, GalleryError>;

pub struct Entry {
    pub name: &'static str,
    /// Parameter names with defaults.
    pub params: &'static [(&'static str, f64)],
    pub provenance: &'static str,
    build: Build,
}

/// Width the polar charts keep away from their poles.
pub const POLE_GAP: f64 = 1e-3;

pub static ENTRIES: &[Entry] = &[
    Entry {
        name: "cuspidal_parabola",
        params: &[("a", 1.0), ("b", 1.0)],
        provenance: "cuspidal parabola (au²+v², bv²+v³, u); singular set is the u-axis",
        build: cuspidal_parabola,
    },
    Entry {
        name: "standard_cuspidal_edge",
        params: &[],
        provenance: "standard cuspidal edge (v², v³, u) in a chart adapted to the u-axis",
        build: standard_cuspidal_edge,
    },
    Entry {
        name: "standard_swallowtail",
        params: &[],
        provenance: "swallowtail (3u⁴+u²v, 4u³+2uv, v), the discriminant of s³+zs²+ys+x",
        build: standard_swallowtail,
    },
    Entry {
        name: "double_swallowtail",
        params: &[],
        provenance: "double swallowtail (2u³−uv², 3u⁴−u²v², v) with a degenerate peak at the origin",
        build: double_swallowtail,
    },
    Entry {
        name: "pseudosphere",
        params: &[],
        provenance: "pseudosphere (sech x cos y, sech x sin y, x − tanh x), K = −1, two ends of growth order 0",
        build: pseudosphere,
    },
    Entry {
        name: "kuen",
        params: &[],
        provenance: "Kuen's surface, K = −1, weakly complete",
        build: kuen,
    },
    Entry {
        name: "cone",
        params: &[("a", 1.7320508075688772)],
        provenance: "cone (log r cos θ, log r sin θ, a log r) in polar coordinates; degenerate singular circle r = 1",
        build: cone,
    },
    Entry {
        name: "swallowtail_pm",
        params: &[("sign", 1.0)],
        provenance: "generic swallowtails f± with second fundamental form ±24 dv² at the origin",
        build: swallowtail_pm,
    },
    Entry {
        name: "plane",
        params: &[],
        provenance: "the flat plane (u, v, 0)",
        build: plane,
    },
    Entry {
        name: "sphere",
        params: &[("r", 1.0)],
        provenance: "round sphere of radius r, inward normal, latitude-longitude chart",
        build: sphere,
    },
    Entry {
        name: "ellipsoid",
        params: &[("a", 1.0), ("b", 1.2), ("c", 1.5)],
        provenance: "ellipsoid with semi-axes a, b, c, inward normal",
        build: ellipsoid,
    },
    Entry {
        name: "ellipsoid_parallel",
        params: &[("a", 1.0), ("b", 1.2), ("c", 1.5), ("d", 0.8)],
        provenance: "parallel front of the ellipsoid at distance d along the inward normal",
        build: ellipsoid_parallel,
    },
    Entry {
        name: "zigzag_cylinder",
        params: &[("n", 1.0), ("A", 2.0), ("c", 1.0)],
        provenance: "cylinder over the plane zigzag front; the loops v = const have zigzag number n",
        build: zigzag_cylinder,
    },
];

pub fn entry(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name)
}

/// Builds a gallery front; missing parameters take their defaults.
pub fn gallery(name: &str, params: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let e = entry(name).ok_or_else(|| GalleryError::UnknownName(name.to_string()))?;
    let mut full: BTreeMap<String, f64> = e.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in params {
        if !full.contains_key(k) {
            return Err(GalleryError::UnknownParam { entry: e.name, param: k.clone() });
        }
        full.insert(k.clone(), *v);
    }
    for (k, v) in &full {
        if !v.is_finite() {
            let param = e.params.iter().find(|p| p.0 == k).map(|p| p.0).unwrap_or("?");
            return Err(GalleryError::InvalidParam { entry: e.name, param, value: *v, reason: "not finite" });
        }
    }
    (e.build)(&full)
}

/// Shorthand for `gallery` with a parameter slice.
pub fn get(name: &str, params: &[(&str, f64)]) -> Result<Front, GalleryError> {
    let p = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    gallery(name, &p)
}

fn over(comps: [&str; 3], den: &str) -> String {
    format!("(({})/({den}), ({})/({den}), ({})/({den}))", comps[0], comps[1], comps[2])
}

fn make(
    name: &str,
    map: &str,
    normal: &str,
    domain: Domain,
    p: &BTreeMap<String, f64>,
    metadata: Metadata,
) -> Result<Front, GalleryError> {
    let pairs: Vec<(&str, f64)> = p.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut front = Front::from_strs(name, map, normal, domain, &pairs)?;
    front.metadata = metadata;
    Ok(front)
}

fn meta(provenance: &str) -> Metadata {
    Metadata { provenance: Some(provenance.to_string()), ..Metadata::default() }
}

fn cuspidal_parabola(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let den = "sqrt(4 + (1 + 4*a^2*u^2)*(4*b^2 + 12*b*v + 9*v^2))";
    let normal = over(["-3*v - 2*b", "2", "2*a*u*(3*v + 2*b)"], den);
    let md = Metadata {
        singular_set: Some("v = 0".into()),
        kappa_s: Some("2a/((1+4a²u²)^(3/2) sqrt(1+b²(1+4a²u²)))".into()),
        ..meta(entry("cuspidal_parabola").unwrap().provenance)
    };
    make("cuspidal_parabola", "(a*u^2 + v^2, b*v^2 + v^3, u)", &normal, Domain::new([-1.0, 1.0], [-1.0, 1.0]), p, md)
}

fn standard_cuspidal_edge(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let normal = over(["3*v", "-2", "0"], "sqrt(9*v^2 + 4)");
    let md = Metadata {
        singular_set: Some("v = 0".into()),
        kappa_s: Some("0".into()),
        ..meta(entry("standard_cuspidal_edge").unwrap().provenance)
    };
    make("standard_cuspidal_edge", "(v^2, v^3, u)", &normal, Domain::new([-1.0, 1.0], [-1.0, 1.0]), p, md)
}

fn standard_swallowtail(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let normal = over(["1", "-u", "u^2"], "sqrt(1 + u^2 + u^4)");
    let md = Metadata {
        singular_set: Some("v = -6u²".into()),
        kappa_s: Some("-sqrt(1+t²+t⁴)/(6|t|(1+4t²+t⁴)^(3/2)) along (t, -6t²)".into()),
        ..meta(entry("standard_swallowtail").unwrap().provenance)
    };
    make(
        "standard_swallowtail",
        "(3*u^4 + u^2*v, 4*u^3 + 2*u*v, v)",
        &normal,
        Domain::new([-1.0, 1.0], [-7.0, 1.0]),
        p,
        md,
    )
}

fn double_swallowtail(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let normal = over(["-2*u", "1", "-2*u^2*v"], "sqrt(1 + 4*u^2*(1 + u^2*v^2))");
    let md = Metadata {
        singular_set: Some("v = ±sqrt(6) u".into()),
        notes: vec!["the origin is a degenerate peak with four cuspidal edges".into()],
        ..meta(entry("double_swallowtail").unwrap().provenance)
    };
    make(
        "double_swallowtail",
        "(2*u^3 - u*v^2, 3*u^4 - u^2*v^2, v)",
        &normal,
        Domain::new([-1.0, 1.0], [-1.0, 1.0]),
        p,
        md,
    )
}

fn pseudosphere(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let md = Metadata {
        singular_set: Some("u = 0".into()),
        kappa_s: Some("1".into()),
        euler_char: Some(0),
        ends: vec![
            End { label: "u → +∞".into(), growth: 0.0, side: -1 },
            End { label: "u → -∞".into(), growth: 0.0, side: 1 },
        ],
        notes: vec!["the total area is 4π; the identity needs 2∫κ_s ds = 4π".into()],
        ..meta(entry("pseudosphere").unwrap().provenance)
    };
    make(
        "pseudosphere",
        "(sech(u)*cos(v), sech(u)*sin(v), u - tanh(u))",
        "(tanh(u)*cos(v), tanh(u)*sin(v), sech(u))",
        Domain::new([-20.0, 20.0], [0.0, 2.0 * PI]).periodic(false, true),
        p,
        md,
    )
}

fn kuen(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let den = "1 + 2*(1 + 2*v^2)*exp(2*u) + exp(4*u)";
    let map = over(
        [
            "4*exp(u)*(1 + exp(2*u))*(cos(v) + v*sin(v))",
            "4*exp(u)*(1 + exp(2*u))*(sin(v) - v*cos(v))",
            "(u + 2) + 2*u*(1 + 2*v^2)*exp(2*u) + (u - 2)*exp(4*u)",
        ],
        den,
    );
    let normal = over(
        [
            "8*exp(2*u)*v*cos(v) - (1 + 2*(1 - 2*v^2)*exp(2*u) + exp(4*u))*sin(v)",
            "8*exp(2*u)*v*sin(v) + (1 + 2*(1 - 2*v^2)*exp(2*u) + exp(4*u))*cos(v)",
            "4*exp(u)*(1 - exp(2*u))*v",
        ],
        den,
    );
    let md = Metadata {
        singular_set: Some("v = 0 and v = ±cosh u".into()),
        ..meta(entry("kuen").unwrap().provenance)
    };
    make("kuen", &map, &normal, Domain::new([-2.0, 2.0], [-4.0, 4.0]), p, md)
}

fn cone(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let a = p["a"];
    if a == 0.0 {
        return Err(GalleryError::InvalidParam { entry: "cone", param: "a", value: a, reason: "must be nonzero" });
    }
    let growth = 1.0 / (1.0 + a * a).sqrt();
    let md = Metadata {
        singular_set: Some("u = 1 (degenerate)".into()),
        euler_char: Some(0),
        cone_angle: Some(2.0 * PI * growth),
        ends: vec![
            End { label: "r → 0".into(), growth, side: 1 },
            End { label: "r → ∞".into(), growth, side: -1 },
        ],
        notes: vec!["every singular point is degenerate".into()],
        ..meta(entry("cone").unwrap().provenance)
    };
    make(
        "cone",
        "(log(u)*cos(v), log(u)*sin(v), a*log(u))",
        &over(["a*cos(v)", "a*sin(v)", "-1"], "sqrt(1 + a^2)"),
        Domain::new([0.2, 3.0], [0.0, 2.0 * PI]).periodic(false, true),
        p,
        md,
    )
}

fn swallowtail_pm(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let s = p["sign"];
    if s != 1.0 && s != -1.0 {
        return Err(GalleryError::InvalidParam {
            entry: "swallowtail_pm",
            param: "sign",
            value: s,
            reason: "must be 1 or -1",
        });
    }
    let map = "((3*u^4 - 12*u^2*v + sign*(6*u^2 - 12*v)^2)/12, (8*u^3 - 24*u*v)/12, (6*u^2 - 12*v)/12)";
    let den = "sqrt(1 + u^2 + 145*u^4 + 576*v*(v - u^2) + sign*24*u^2*(2*v - u^2))";
    let normal = over(["1", "-u", "u^2 + sign*12*(2*v - u^2)"], den);
    let md = Metadata {
        singular_set: Some("swallowtail at the origin".into()),
        notes: vec!["the second coordinate of the normal carries -u so that it is orthogonal to the map".into()],
        ..meta(entry("swallowtail_pm").unwrap().provenance)
    };
    make("swallowtail_pm", map, &normal, Domain::new([-1.0, 1.0], [-1.0, 1.0]), p, md)
}

fn plane(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    make("plane", "(u, v, 0)", "(0, 0, 1)", Domain::new([-1.0, 1.0], [-1.0, 1.0]), p, meta(entry("plane").unwrap().provenance))
}

fn zigzag_cylinder(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let (curve, normal) = crate::zigzag::zigzag_strings("u");
    let map = format!("({}, v)", &curve[1..curve.len() - 1]);
    let normal = format!("({}, 0)", &normal[1..normal.len() - 1]);
    let md = Metadata { singular_set: Some("finitely many lines u = const".into()), ..meta(entry("zigzag_cylinder").unwrap().provenance) };
    make("zigzag_cylinder", &map, &normal, Domain::new([0.0, 2.0 * PI], [-1.0, 1.0]).periodic(true, false), p, md)
}

fn latitude_domain() -> Domain {
    Domain::new([-FRAC_PI_2 + POLE_GAP, FRAC_PI_2 - POLE_GAP], [0.0, 2.0 * PI]).periodic(false, true)
}

fn sphere(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    let r = p["r"];
    if r <= 0.0 {
        return Err(GalleryError::InvalidParam { entry: "sphere", param: "r", value: r, reason: "must be positive" });
    }
    let md = Metadata {
        euler_char: Some(2),
        caps: vec![Cap::UMin, Cap::UMax],
        ..meta(entry("sphere").unwrap().provenance)
    };
    make(
        "sphere",
        "(r*cos(u)*cos(v), r*cos(u)*sin(v), r*sin(u))",
        "(-cos(u)*cos(v), -cos(u)*sin(v), -sin(u))",
        latitude_domain(),
        p,
        md,
    )
}

fn check_axes(entry: &'static str, p: &BTreeMap<String, f64>) -> Result<(), GalleryError> {
    for param in ["a", "b", "c"] {
        let value = p[param];
        if value <= 0.0 {
            return Err(GalleryError::InvalidParam { entry, param, value, reason: "must be positive" });
        }
    }
    Ok(())
}

const ELLIPSOID_MAP: &str = "(a*cos(u)*cos(v), b*cos(u)*sin(v), c*sin(u))";

fn ellipsoid_normal() -> String {
    over(
        ["-cos(u)*cos(v)/a", "-cos(u)*sin(v)/b", "-sin(u)/c"],
        "sqrt(cos(u)^2*cos(v)^2/a^2 + cos(u)^2*sin(v)^2/b^2 + sin(u)^2/c^2)",
    )
}

fn ellipsoid(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    check_axes("ellipsoid", p)?;
    let md = Metadata {
        euler_char: Some(2),
        caps: vec![Cap::UMin, Cap::UMax],
        ..meta(entry("ellipsoid").unwrap().provenance)
    };
    make("ellipsoid", ELLIPSOID_MAP, &ellipsoid_normal(), latitude_domain(), p, md)
}

fn ellipsoid_parallel(p: &BTreeMap<String, f64>) -> Result<Front, GalleryError> {
    check_axes("ellipsoid_parallel", p)?;
    let axes: BTreeMap<String, f64> = p.iter().filter(|(k, _)| k.as_str() != "d").map(|(k, v)| (k.clone(), *v)).collect();
    let base = ellipsoid(&axes)?;
    let mut front = base.parallel_surface(p["d"])?;
    front.label = "ellipsoid_parallel".into();
    front.params = p.clone();
    front.metadata.provenance = Some(entry("ellipsoid_parallel").unwrap().provenance.into());
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds_with_defaults() {
        for e in ENTRIES {
            let f = gallery(e.name, &BTreeMap::new()).unwrap();
            assert_eq!(f.label, e.name);
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(get("cone", &[("a", 0.0)]), Err(GalleryError::InvalidParam { .. })));
        assert!(matches!(get("swallowtail_pm", &[("sign", 0.5)]), Err(GalleryError::InvalidParam { .. })));
        assert!(matches!(get("plane", &[("q", 1.0)]), Err(GalleryError::UnknownParam { .. })));
        assert!(matches!(get("torus", &[]), Err(GalleryError::UnknownName(_))));
    }

    #[test]
    fn sphere_parallels() {
        // the normal points inward, so f + dν = (1 − d)f
        let s = get("sphere", &[("r", 1.0)]).unwrap();
        let half = s.parallel_surface(0.5).unwrap();
        for uv in [[0.3, 0.2], [2.0, -1.0]] {
            let k = half.curvature(uv).unwrap().k.unwrap();
            assert!((k - 4.0).abs() < 1e-10, "{k}");
        }
        let focal = s.parallel_surface(1.0).unwrap();
        for uv in s.domain.grid(8) {
            assert!(focal.lambda(uv).unwrap().abs() < 1e-14);
        }
        let outer = s.parallel_surface(-1.0).unwrap();
        assert!((outer.curvature([0.3, 0.2]).unwrap().k.unwrap() - 0.25).abs() < 1e-10);
    }
}
