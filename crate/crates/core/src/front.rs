//! Fronts `f: U → R³` with a unit normal field, and their local geometry.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::expr::{self, BinOp, EvalError, Expr, Node, ParseError, Vars};
use crate::jet::{finite_difference_jet, Jet, Space, Taylor};

pub type V3 = Vector3<f64>;

/// Black-box map used when no expression is available.
pub type Callback = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum FrontError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{what} has {got} components, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("not an immersion: λ vanishes or changes sign near ({u}, {v})")]
    NotImmersion { u: f64, v: f64 },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("callback sources cannot be written to a description file")]
    NotSerializable,
    #[error("description file: {0}")]
    Format(String),
}

/// Where jets of a map come from.
#[derive(Clone)]
pub enum Source {
    Expr(Expr),
    Callback { f: Callback, dim: usize },
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Expr(e) => write!(f, "Expr({e})"),
            Source::Callback { dim, .. } => write!(f, "Callback(dim={dim})"),
        }
    }
}

impl Source {
    pub fn dim(&self) -> usize {
        match self {
            Source::Expr(e) => e.dim(),
            Source::Callback { dim, .. } => *dim,
        }
    }

    pub fn jet(&self, point: &[f64], order: u8) -> Result<Jet, EvalError> {
        match self {
            Source::Expr(e) => e.eval_jet(point, order),
            Source::Callback { f, .. } => Ok(finite_difference_jet(|x| f(x), point, order, None)),
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self {
            Source::Expr(e) => e.eval(point),
            Source::Callback { f, .. } => Ok(f(point)),
        }
    }

    fn as_expr(&self) -> Option<&Expr> {
        match self {
            Source::Expr(e) => Some(e),
            Source::Callback { .. } => None,
        }
    }

    fn swapped(&self) -> Source {
        match self {
            Source::Expr(e) => Source::Expr(e.map_vars(&[1, 0, 2])),
            Source::Callback { f, dim } => {
                let f = f.clone();
                Source::Callback {
                    f: Arc::new(move |x: &[f64]| {
                        let mut y = x.to_vec();
                        y.swap(0, 1);
                        f(&y)
                    }),
                    dim: *dim,
                }
            }
        }
    }

    fn negated(&self) -> Source {
        match self {
            Source::Expr(e) => Source::Expr(e.negated()),
            Source::Callback { f, dim } => {
                let f = f.clone();
                Source::Callback {
                    f: Arc::new(move |x: &[f64]| f(x).into_iter().map(|y| -y).collect()),
                    dim: *dim,
                }
            }
        }
    }
}

/// Parameter rectangle with optional periodic identification per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub periodic_u: bool,
    pub periodic_v: bool,
}

impl Domain {
    pub fn new(u: [f64; 2], v: [f64; 2]) -> Self {
        Domain { u, v, periodic_u: false, periodic_v: false }
    }

    pub fn periodic(mut self, u: bool, v: bool) -> Self {
        self.periodic_u = u;
        self.periodic_v = v;
        self
    }

    pub fn width(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn height(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    pub fn scale(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.periodic_u || (p[0] >= self.u[0] && p[0] <= self.u[1]))
            && (self.periodic_v || (p[1] >= self.v[0] && p[1] <= self.v[1]))
    }

    /// Maps periodic coordinates back into the fundamental rectangle.
    pub fn wrap(&self, mut p: [f64; 2]) -> [f64; 2] {
        if self.periodic_u {
            p[0] = self.u[0] + (p[0] - self.u[0]).rem_euclid(self.width());
        }
        if self.periodic_v {
            p[1] = self.v[0] + (p[1] - self.v[0]).rem_euclid(self.height());
        }
        p
    }

    /// Cell-centred sample points of an `n × n` grid.
    pub fn grid(&self, n: usize) -> Vec<[f64; 2]> {
        let (du, dv) = (self.width() / n as f64, self.height() / n as f64);
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push([self.u[0] + (i as f64 + 0.5) * du, self.v[0] + (j as f64 + 0.5) * dv]);
            }
        }
        out
    }

    fn validate(&self) -> Result<(), FrontError> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if ok(self.u) && ok(self.v) {
            Ok(())
        } else {
            Err(FrontError::Domain(format!("bad rectangle u={:?} v={:?}", self.u, self.v)))
        }
    }
}

/// A pole of a polar chart left out of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    UMin,
    UMax,
    VMin,
    VMax,
}

impl Cap {
    fn swapped(self) -> Cap {
        match self {
            Cap::UMin => Cap::VMin,
            Cap::UMax => Cap::VMax,
            Cap::VMin => Cap::UMin,
            Cap::VMax => Cap::UMax,
        }
    }
}

/// An end of a complete front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct End {
    pub label: String,
    /// Limiting area growth order.
    pub growth: f64,
    /// +1 if the end lies in M₊, −1 if in M₋.
    pub side: i8,
}

/// Analytic facts that cannot be computed numerically.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_s: Option<String>,
    /// Euler characteristic of the compactified domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_char: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ends: Vec<End>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub caps: Vec<Cap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Front {
    pub label: String,
    pub map: Source,
    pub normal: Source,
    pub domain: Domain,
    pub params: BTreeMap<String, f64>,
    pub metadata: Metadata,
}

/// Jets of `f` and `ν` at one point, with the signed area density.
#[derive(Clone, Debug)]
pub struct Local {
    pub uv: [f64; 2],
    f: [Taylor; 3],
    nu: [Taylor; 3],
    lambda: Taylor,
    order: u8,
    abs_kink: bool,
}

fn triple(comps: &[Taylor]) -> [Taylor; 3] {
    [comps[0], comps[1], comps[2]]
}

fn v3(t: &[Taylor; 3], vars: &[usize]) -> V3 {
    V3::new(t[0].partial(vars), t[1].partial(vars), t[2].partial(vars))
}

impl Local {
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn abs_kink(&self) -> bool {
        self.abs_kink
    }

    /// Partial of `f`, e.g. `f(&[0, 1])` is `f_uv`.
    pub fn f(&self, vars: &[usize]) -> V3 {
        assert!(vars.len() <= self.order as usize);
        v3(&self.f, vars)
    }

    pub fn nu(&self, vars: &[usize]) -> V3 {
        assert!(vars.len() <= self.order as usize);
        v3(&self.nu, vars)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.value()
    }

    /// `(λ_u, λ_v)`; needs order ≥ 2.
    pub fn grad_lambda(&self) -> [f64; 2] {
        assert!(self.order >= 2);
        [self.lambda.partial(&[0]), self.lambda.partial(&[1])]
    }

    /// Hessian of λ; needs order 3.
    pub fn hess_lambda(&self) -> Matrix2<f64> {
        assert!(self.order >= 3);
        let uv = self.lambda.partial(&[0, 1]);
        Matrix2::new(self.lambda.partial(&[0, 0]), uv, uv, self.lambda.partial(&[1, 1]))
    }

    /// Differential of `f` applied to a parameter vector.
    pub fn df(&self, x: [f64; 2]) -> V3 {
        self.f(&[0]) * x[0] + self.f(&[1]) * x[1]
    }

    /// Second differential `D²f[x, y]`.
    pub fn d2f(&self, x: [f64; 2], y: [f64; 2]) -> V3 {
        self.f(&[0, 0]) * (x[0] * y[0])
            + self.f(&[0, 1]) * (x[0] * y[1] + x[1] * y[0])
            + self.f(&[1, 1]) * (x[1] * y[1])
    }

    pub fn dnu(&self, x: [f64; 2]) -> V3 {
        self.nu(&[0]) * x[0] + self.nu(&[1]) * x[1]
    }

    pub fn forms(&self) -> FundamentalForms {
        let (fu, fv) = (self.f(&[0]), self.f(&[1]));
        let (nu_u, nu_v) = (self.nu(&[0]), self.nu(&[1]));
        FundamentalForms {
            e: fu.dot(&fu),
            f: fu.dot(&fv),
            g: fv.dot(&fv),
            l: -fu.dot(&nu_u),
            m: -fu.dot(&nu_v),
            m_alt: -fv.dot(&nu_u),
            n: -fv.dot(&nu_v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    /// `−g(f_u, ν_v)`.
    pub m: f64,
    /// `−g(f_v, ν_u)`; equals `m` for a front.
    pub m_alt: f64,
    pub n: f64,
}

impl FundamentalForms {
    pub fn det_first(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    pub fn det_second(&self) -> f64 {
        self.l * self.n - self.m * self.m
    }
}

/// Curvatures at a point; `None` where the metric degenerates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub k: Option<f64>,
    /// Extrinsic curvature; equals `k` in Euclidean space.
    pub k_ext: Option<f64>,
    pub h: Option<f64>,
    pub lambda: f64,
}

/// Relative size of `EG − F²` below which curvature is not reported.
pub const DEGENERATE_METRIC: f64 = 1e-24;

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub uv: [f64; 2],
    pub check: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub label: String,
    pub points: usize,
    pub max_unit_error: f64,
    pub max_orthogonality_error: f64,
    /// Smallest ratio of singular values of the Legendrian lift's Jacobian.
    pub min_lift_rank_ratio: f64,
    pub eval_failures: usize,
    pub worst: Vec<Violation>,
    pub pass: bool,
}

pub const UNIT_TOL: f64 = 1e-9;
pub const ORTHO_TOL: f64 = 1e-9;
pub const LIFT_RANK_TOL: f64 = 1e-8;

impl Front {
    pub fn new(
        label: impl Into<String>,
        map: Source,
        normal: Source,
        domain: Domain,
        params: BTreeMap<String, f64>,
    ) -> Result<Front, FrontError> {
        domain.validate()?;
        if map.dim() != 3 {
            return Err(FrontError::Dimension { what: "map", got: map.dim(), expected: 3 });
        }
        if normal.dim() != 3 {
            return Err(FrontError::Dimension { what: "normal", got: normal.dim(), expected: 3 });
        }
        for (what, s) in [("map", &map), ("normal", &normal)] {
            if let Some(e) = s.as_expr() {
                if e.arity() > 2 {
                    return Err(FrontError::Dimension { what, got: e.arity(), expected: 2 });
                }
            }
        }
        Ok(Front { label: label.into(), map, normal, domain, params, metadata: Metadata::default() })
    }

    /// Builds a front from expression sources.
    pub fn from_strs(
        label: &str,
        map: &str,
        normal: &str,
        domain: Domain,
        params: &[(&str, f64)],
    ) -> Result<Front, FrontError> {
        let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let m = expr::parse(map, &params)?;
        let n = expr::parse(normal, &params)?;
        Front::new(label, Source::Expr(m), Source::Expr(n), domain, params)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Front {
        self.metadata = metadata;
        self
    }

    pub fn scale(&self) -> f64 {
        self.domain.scale()
    }

    /// Jets of `f` and `ν` to the given order (1 to 3).
    pub fn local(&self, uv: [f64; 2], order: u8) -> Result<Local, FrontError> {
        assert!((1..=3).contains(&order), "local jets need order 1..=3");
        let fj = self.map.jet(&uv, order)?;
        let nj = self.normal.jet(&uv, order)?;
        let sp = Space::get(2, order);
        let lift = |j: &Jet| -> [Taylor; 3] {
            if std::ptr::eq(j.space(), sp) {
                triple(j.components())
            } else {
                // constant maps evaluate in a smaller space
                let mut out = [Taylor::zero(); 3];
                for (k, t) in j.components().iter().enumerate().take(3) {
                    out[k] = *t;
                }
                out
            }
        };
        let f = lift(&fj);
        let nu = lift(&nj);
        let fu = [f[0].deriv(0), f[1].deriv(0), f[2].deriv(0)];
        let fv = [f[0].deriv(1), f[1].deriv(1), f[2].deriv(1)];
        let lambda = sp.det3(&fu, &fv, &nu);
        Ok(Local { uv, f, nu, lambda, order, abs_kink: fj.abs_kink() || nj.abs_kink() })
    }

    pub fn lambda(&self, uv: [f64; 2]) -> Result<f64, FrontError> {
        Ok(self.local(uv, 1)?.lambda())
    }

    pub fn forms(&self, uv: [f64; 2]) -> Result<FundamentalForms, FrontError> {
        Ok(self.local(uv, 1)?.forms())
    }

    pub fn curvature(&self, uv: [f64; 2]) -> Result<CurvatureSample, FrontError> {
        let loc = self.local(uv, 1)?;
        Ok(curvature_from(&loc.forms(), loc.lambda()))
    }

    /// Checks unit length, orthogonality and the front condition on an `n × n` grid.
    pub fn validate(&self, n: usize) -> ValidationReport {
        let mut report = ValidationReport {
            label: self.label.clone(),
            points: 0,
            max_unit_error: 0.0,
            max_orthogonality_error: 0.0,
            min_lift_rank_ratio: f64::INFINITY,
            eval_failures: 0,
            worst: Vec::new(),
            pass: true,
        };
        let mut violations = Vec::new();
        for uv in self.domain.grid(n) {
            let loc = match self.local(uv, 1) {
                Ok(l) => l,
                Err(_) => {
                    report.eval_failures += 1;
                    continue;
                }
            };
            report.points += 1;
            let nu = loc.nu(&[]);
            let unit = (nu.norm() - 1.0).abs();
            let (fu, fv) = (loc.f(&[0]), loc.f(&[1]));
            let orth = (fu.dot(&nu).abs() / fu.norm().max(1.0)).max(fv.dot(&nu).abs() / fv.norm().max(1.0));
            let ratio = lift_rank_ratio(&loc);
            report.max_unit_error = report.max_unit_error.max(unit);
            report.max_orthogonality_error = report.max_orthogonality_error.max(orth);
            report.min_lift_rank_ratio = report.min_lift_rank_ratio.min(ratio);
            if unit > UNIT_TOL {
                violations.push(Violation { uv, check: "unit_normal", value: unit });
            }
            if orth > ORTHO_TOL {
                violations.push(Violation { uv, check: "orthogonality", value: orth });
            }
            if ratio < LIFT_RANK_TOL {
                violations.push(Violation { uv, check: "front_condition", value: ratio });
            }
        }
        report.pass = violations.is_empty() && report.eval_failures == 0;
        violations.sort_by(|a, b| b.value.total_cmp(&a.value));
        violations.truncate(10);
        report.worst = violations;
        report
    }

    /// `f + d·ν` with the same normal. The input must be an immersion.
    pub fn parallel_surface(&self, d: f64) -> Result<Front, FrontError> {
        let mut sign = 0.0;
        for uv in self.domain.grid(33) {
            let l = self.lambda(uv)?;
            let s = l.signum();
            if l.abs() <= 1e-12 * self.scale() * self.scale() || (sign != 0.0 && s != sign) {
                return Err(FrontError::NotImmersion { u: uv[0], v: uv[1] });
            }
            sign = s;
        }
        let map = match (&self.map, &self.normal) {
            (Source::Expr(f), Source::Expr(n)) => {
                let comps = f
                    .components()
                    .iter()
                    .zip(n.components())
                    .map(|(a, b)| {
                        Node::Bin(
                            BinOp::Add,
                            Box::new(a.clone()),
                            Box::new(Node::Bin(BinOp::Mul, Box::new(Node::Num(d)), Box::new(b.clone()))),
                        )
                    })
                    .collect();
                Source::Expr(Expr::vector(Vars::Map, comps))
            }
            (f, n) => {
                let (f, n) = (f.clone(), n.clone());
                Source::Callback {
                    f: Arc::new(move |x: &[f64]| {
                        let a = f.eval(x).unwrap_or_else(|_| vec![f64::NAN; 3]);
                        let b = n.eval(x).unwrap_or_else(|_| vec![f64::NAN; 3]);
                        a.iter().zip(&b).map(|(p, q)| p + d * q).collect()
                    }),
                    dim: 3,
                }
            }
        };
        let mut out = Front::new(
            format!("{}_parallel", self.label),
            map,
            self.normal.clone(),
            self.domain,
            self.params.clone(),
        )?;
        out.metadata = Metadata {
            provenance: self.metadata.provenance.clone(),
            euler_char: self.metadata.euler_char,
            caps: self.metadata.caps.clone(),
            notes: vec![format!("parallel surface at distance {d}")],
            ..Metadata::default()
        };
        Ok(out)
    }

    /// The same front in the chart `(u, v) ↦ (v, u)`.
    pub fn swap_chart(&self) -> Front {
        let d = self.domain;
        let mut out = self.clone();
        out.map = self.map.swapped();
        out.normal = self.normal.swapped();
        out.domain = Domain { u: d.v, v: d.u, periodic_u: d.periodic_v, periodic_v: d.periodic_u };
        out.metadata.caps = self.metadata.caps.iter().map(|c| c.swapped()).collect();
        out.label = format!("{}_swapped", self.label);
        out
    }

    /// The same front with `ν` replaced by `−ν`.
    pub fn negate_normal(&self) -> Front {
        let mut out = self.clone();
        out.normal = self.normal.negated();
        out.label = format!("{}_flipped", self.label);
        out
    }

    pub fn to_description(&self) -> Result<Description, FrontError> {
        let (Some(map), Some(normal)) = (self.map.as_expr(), self.normal.as_expr()) else {
            return Err(FrontError::NotSerializable);
        };
        let mut periodic = Vec::new();
        if self.domain.periodic_u {
            periodic.push("u".to_string());
        }
        if self.domain.periodic_v {
            periodic.push("v".to_string());
        }
        Ok(Description {
            label: self.label.clone(),
            map: map.to_string(),
            normal: normal.to_string(),
            domain: DomainSpec { u: self.domain.u, v: self.domain.v, w: None },
            periodic,
            params: self.params.clone(),
            metadata: self.metadata.clone(),
        })
    }

    pub fn from_description(d: &Description) -> Result<Front, FrontError> {
        if d.domain.w.is_some() {
            return Err(FrontError::Format("a surface front has no `w` range".into()));
        }
        let m = expr::parse(&d.map, &d.params)?;
        let n = expr::parse(&d.normal, &d.params)?;
        let domain = Domain::new(d.domain.u, d.domain.v).periodic(d.is_periodic("u")?, d.is_periodic("v")?);
        let f = Front::new(d.label.clone(), Source::Expr(m), Source::Expr(n), domain, d.params.clone())?;
        Ok(f.with_metadata(d.metadata.clone()))
    }
}

/// Curvatures from fundamental forms.
pub fn curvature_from(ff: &FundamentalForms, lambda: f64) -> CurvatureSample {
    let det = ff.det_first();
    let scale = (ff.e + ff.g).powi(2);
    if !(det > DEGENERATE_METRIC * scale) {
        return CurvatureSample { k: None, k_ext: None, h: None, lambda };
    }
    let k = ff.det_second() / det;
    let h = (ff.e * ff.n - 2.0 * ff.f * ff.m + ff.g * ff.l) / (2.0 * det);
    CurvatureSample { k: Some(k), k_ext: Some(k), h: Some(h), lambda }
}

fn lift_rank_ratio(loc: &Local) -> f64 {
    let a = [loc.f(&[0]), loc.nu(&[0])];
    let b = [loc.f(&[1]), loc.nu(&[1])];
    let aa = a[0].norm_squared() + a[1].norm_squared();
    let bb = b[0].norm_squared() + b[1].norm_squared();
    let ab = a[0].dot(&b[0]) + a[1].dot(&b[1]);
    let gram = Matrix2::new(aa, ab, ab, bb);
    let eig = gram.symmetric_eigenvalues();
    let (lo, hi) = (eig.min().max(0.0), eig.max());
    if hi <= 0.0 {
        0.0
    } else {
        (lo / hi).sqrt()
    }
}

/// On-disk form of a front: a TOML table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Description {
    pub label: String,
    pub map: String,
    pub normal: String,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: Metadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub u: [f64; 2],
    pub v: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<[f64; 2]>,
}

impl Description {
    pub fn from_toml(text: &str) -> Result<Description, FrontError> {
        toml::from_str(text).map_err(|e| FrontError::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, FrontError> {
        toml::to_string(self).map_err(|e| FrontError::Format(e.to_string()))
    }

    pub fn is_periodic(&self, axis: &str) -> Result<bool, FrontError> {
        for p in &self.periodic {
            if !["u", "v", "w"].contains(&p.as_str()) {
                return Err(FrontError::Format(format!("unknown periodic axis `{p}`")));
            }
        }
        Ok(self.periodic.iter().any(|p| p == axis))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> Front {
        Front::from_strs(
            "p",
            "(a*u^2+v^2, b*v^2+v^3, u)",
            "(-(3*v+2*b)/sqrt(4+(1+4*a^2*u^2)*(4*b^2+12*b*v+9*v^2)), 2/sqrt(4+(1+4*a^2*u^2)*(4*b^2+12*b*v+9*v^2)), 2*a*u*(3*v+2*b)/sqrt(4+(1+4*a^2*u^2)*(4*b^2+12*b*v+9*v^2)))",
            Domain::new([-1.0, 1.0], [-1.0, 1.0]),
            &[("a", 1.0), ("b", 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn lambda_matches_closed_form() {
        let f = parabola();
        let l = f.lambda([0.0, 0.5]).unwrap();
        assert!((l - 0.5 * 16.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metric_determinant_is_lambda_squared() {
        let f = parabola();
        for uv in f.domain.grid(9) {
            let loc = f.local(uv, 1).unwrap();
            let ff = loc.forms();
            let l2 = loc.lambda().powi(2);
            assert!((ff.det_first() - l2).abs() <= 1e-9 * l2.max(1e-12));
            assert!((ff.m - ff.m_alt).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_lambda_on_the_axis() {
        // λ = vδ, so λ_v(u, 0) = δ(u, 0)
        let f = parabola();
        let loc = f.local([0.3, 0.0], 2).unwrap();
        let g = loc.grad_lambda();
        let delta = (4.0f64 + (1.0 + 4.0 * 0.09) * 4.0).sqrt();
        assert!(g[0].abs() < 1e-14);
        assert!((g[1] - delta).abs() < 1e-12);
    }

    #[test]
    fn description_round_trip() {
        let mut f = parabola();
        f.metadata.euler_char = Some(2);
        f.metadata.ends.push(End { label: "top".into(), growth: 0.1, side: -1 });
        let d = f.to_description().unwrap();
        let text = d.to_toml().unwrap();
        let back = Description::from_toml(&text).unwrap();
        assert_eq!(back, d);
        let g = Front::from_description(&back).unwrap();
        assert_eq!(g.to_description().unwrap().to_toml().unwrap(), text);
    }

    #[test]
    fn doubled_normal_fails_validation() {
        let f = parabola();
        let Source::Expr(n) = &f.normal else { unreachable!() };
        let doubled = Expr::vector(
            Vars::Map,
            n.components()
                .iter()
                .map(|c| Node::Bin(BinOp::Mul, Box::new(Node::Num(2.0)), Box::new(c.clone())))
                .collect(),
        );
        let g = Front { normal: Source::Expr(doubled), ..f.clone() };
        assert!(f.validate(16).pass);
        let r = g.validate(16);
        assert!(!r.pass);
        assert!(r.worst.iter().any(|v| v.check == "unit_normal"));
    }
}
