//! Fronts of hypersurfaces `f: U³ → R⁴`.
//!
//! The singular set of such a front is the zero set of the volume density
//! `λ = det(f_u, f_v, f_w, ν)`, generically a surface in the domain. Near a
//! cuspidal edge the sectional curvature of the regular part stays bounded
//! only when the second fundamental form vanishes along that surface, and
//! the surface itself carries an intrinsic curvature computed here from its
//! induced metric.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3, Matrix4, SMatrix, Vector3, Vector4};
use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{self, EvalError, Expr, ParseError, Vars};
use crate::front::{Description, DomainSpec, Metadata, LIFT_RANK_TOL, ORTHO_TOL, UNIT_TOL};
use crate::jet::Jet;

type V4 = Vector4<f64>;
type V3 = Vector3<f64>;

#[derive(Debug, thiserror::Error)]
pub enum HyperError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{what} has {got} components, expected 4")]
    Dimension { what: &'static str, got: usize },
    #[error("bad domain box {0:?}")]
    Domain([[f64; 2]; 3]),
    #[error("description: {0}")]
    Format(String),
    #[error("({}, {}, {}) is not singular: λ = {lambda:.3e}", p[0], p[1], p[2])]
    NotSingular { p: [f64; 3], lambda: f64 },
    #[error("rank of df drops by more than one at ({}, {}, {})", p[0], p[1], p[2])]
    RankDefect { p: [f64; 3] },
    #[error("({}, {}, {}) is a {class} singular point, not a cuspidal edge", p[0], p[1], p[2])]
    NotCuspidalEdge { p: [f64; 3], class: &'static str },
    #[error("singular surface could not be followed near ({}, {}, {})", p[0], p[1], p[2])]
    Trace { p: [f64; 3] },
}

/// A front `f: U³ → R⁴` with unit normal `ν`, both given as expressions in
/// `u, v, w`.
#[derive(Clone, Debug)]
pub struct HyperFront {
    pub label: String,
    map: Expr,
    normal: Expr,
    pub domain: [[f64; 2]; 3],
    pub params: BTreeMap<String, f64>,
}

impl HyperFront {
    pub fn new(
        label: impl Into<String>,
        map: Expr,
        normal: Expr,
        domain: [[f64; 2]; 3],
        params: BTreeMap<String, f64>,
    ) -> Result<HyperFront, HyperError> {
        if map.dim() != 4 || map.vars() != Vars::Map {
            return Err(HyperError::Dimension { what: "map", got: map.dim() });
        }
        if normal.dim() != 4 || normal.vars() != Vars::Map {
            return Err(HyperError::Dimension { what: "normal", got: normal.dim() });
        }
        if domain.iter().any(|r| !(r[0] < r[1]) || !r[0].is_finite() || !r[1].is_finite()) {
            return Err(HyperError::Domain(domain));
        }
        Ok(HyperFront { label: label.into(), map, normal, domain, params })
    }

    pub fn parse(
        label: &str,
        map: &str,
        normal: &str,
        params: &[(&str, f64)],
        domain: [[f64; 2]; 3],
    ) -> Result<HyperFront, HyperError> {
        let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let m = expr::parse(map, &p)?;
        let n = expr::parse(normal, &p)?;
        HyperFront::new(label, m, n, domain, p)
    }

    /// `(v, w, u² + a v² + b w², u³ + c u²)`, singular along `u = 0` with
    /// null direction `∂u`.
    pub fn cuspidal_graph(a: f64, b: f64, c: f64) -> HyperFront {
        const DELTA: &str = "sqrt(4+(3*u+2*c)^2*(1+4*a^2*v^2+4*b^2*w^2))";
        let normal = format!(
            "(2*a*v*(2*c+3*u)/{DELTA}, 2*b*w*(2*c+3*u)/{DELTA}, (-2*c-3*u)/{DELTA}, 2/{DELTA})"
        );
        HyperFront::parse(
            "cuspidal_graph",
            "(v, w, u^2+a*v^2+b*w^2, u^3+c*u^2)",
            &normal,
            &[("a", a), ("b", b), ("c", c)],
            [[-1.0, 1.0]; 3],
        )
        .expect("built-in hypersurface parses")
    }

    pub fn from_description(d: &Description) -> Result<HyperFront, HyperError> {
        let Some(w) = d.domain.w else {
            return Err(HyperError::Format("a hypersurface needs a `w` range".into()));
        };
        if !d.periodic.is_empty() {
            return Err(HyperError::Format("periodic axes are not supported for hypersurfaces".into()));
        }
        let m = expr::parse(&d.map, &d.params)?;
        let n = expr::parse(&d.normal, &d.params)?;
        HyperFront::new(d.label.clone(), m, n, [d.domain.u, d.domain.v, w], d.params.clone())
    }

    pub fn to_description(&self) -> Description {
        Description {
            label: self.label.clone(),
            map: self.map.to_string(),
            normal: self.normal.to_string(),
            domain: DomainSpec { u: self.domain[0], v: self.domain[1], w: Some(self.domain[2]) },
            periodic: Vec::new(),
            params: self.params.clone(),
            metadata: Metadata::default(),
        }
    }

    pub fn local(&self, p: [f64; 3], order: u8) -> Result<HyperLocal, HyperError> {
        Ok(HyperLocal { p, f: self.map.eval_jet(&p, order)?, nu: self.normal.eval_jet(&p, order)? })
    }

    /// `det(f_u, f_v, f_w, ν)`.
    pub fn volume_density(&self, p: [f64; 3]) -> Result<f64, HyperError> {
        Ok(self.local(p, 1)?.lambda())
    }

    /// Nodes of an `(n+1)³` grid over the domain box, `w` fastest.
    pub fn grid(&self, n: usize) -> Vec<[f64; 3]> {
        let n = n.max(1);
        let at = |k: usize, i: usize| {
            let [a, b] = self.domain[k];
            a + (b - a) * i as f64 / n as f64
        };
        let mut out = Vec::with_capacity((n + 1).pow(3));
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    out.push([at(0, i), at(1, j), at(2, k)]);
                }
            }
        }
        out
    }

    fn scale(&self) -> f64 {
        self.domain.iter().map(|r| r[1] - r[0]).fold(0.0, f64::max)
    }

    /// Unit normal, orthogonality and rank 3 of `(f, ν)` on an `(n+1)³` grid.
    pub fn validate(&self, n: usize) -> HyperValidation {
        let rows: Vec<Option<(f64, f64, f64)>> = self
            .grid(n)
            .par_iter()
            .map(|&p| {
                let loc = self.local(p, 1).ok()?;
                let nu = loc.nu(&[]);
                let unit = (nu.norm() - 1.0).abs();
                let orth = (0..3)
                    .map(|i| {
                        let fi = loc.f(&[i]);
                        fi.dot(&nu).abs() / fi.norm().max(1.0)
                    })
                    .fold(0.0, f64::max);
                Some((unit, orth, loc.lift_rank_ratio()))
            })
            .collect();
        let mut r = HyperValidation {
            label: self.label.clone(),
            points: 0,
            eval_failures: 0,
            max_unit_error: 0.0,
            max_orthogonality_error: 0.0,
            min_lift_rank_ratio: f64::INFINITY,
            pass: false,
        };
        for row in rows {
            match row {
                Some((unit, orth, ratio)) => {
                    r.points += 1;
                    r.max_unit_error = r.max_unit_error.max(unit);
                    r.max_orthogonality_error = r.max_orthogonality_error.max(orth);
                    r.min_lift_rank_ratio = r.min_lift_rank_ratio.min(ratio);
                }
                None => r.eval_failures += 1,
            }
        }
        r.pass = r.eval_failures == 0
            && r.max_unit_error <= UNIT_TOL
            && r.max_orthogonality_error <= ORTHO_TOL
            && r.min_lift_rank_ratio >= LIFT_RANK_TOL;
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperValidation {
    pub label: String,
    pub points: usize,
    pub eval_failures: usize,
    pub max_unit_error: f64,
    pub max_orthogonality_error: f64,
    pub min_lift_rank_ratio: f64,
    pub pass: bool,
}

/// Jets of `f` and `ν` at one point of a hypersurface front.
#[derive(Clone, Debug)]
pub struct HyperLocal {
    pub p: [f64; 3],
    f: Jet,
    nu: Jet,
}

fn v4(c: Vec<f64>) -> V4 {
    V4::new(c[0], c[1], c[2], c[3])
}

impl HyperLocal {
    pub fn f(&self, vars: &[usize]) -> V4 {
        v4(self.f.partial(vars))
    }

    pub fn nu(&self, vars: &[usize]) -> V4 {
        v4(self.nu.partial(vars))
    }

    /// The 4×3 differential of `f`.
    pub fn df(&self) -> SMatrix<f64, 4, 3> {
        SMatrix::<f64, 4, 3>::from_columns(&[self.f(&[0]), self.f(&[1]), self.f(&[2])])
    }

    pub fn lambda(&self) -> f64 {
        Matrix4::from_columns(&[self.f(&[0]), self.f(&[1]), self.f(&[2]), self.nu(&[])]).determinant()
    }

    /// Needs a jet of order 2.
    pub fn grad_lambda(&self) -> V3 {
        let cols = [self.f(&[0]), self.f(&[1]), self.f(&[2]), self.nu(&[])];
        let mut g = V3::zeros();
        for k in 0..3 {
            let mut s = 0.0;
            for i in 0..4 {
                let mut c = cols;
                c[i] = if i < 3 { self.f(&[i, k]) } else { self.nu(&[k]) };
                s += Matrix4::from_columns(&c).determinant();
            }
            g[k] = s;
        }
        g
    }

    /// `g_ij = ⟨f_i, f_j⟩`.
    pub fn metric(&self) -> Matrix3<f64> {
        let d = self.df();
        d.transpose() * d
    }

    /// `h_ij = ⟨f_ij, ν⟩`. Needs a jet of order 2.
    pub fn second_form(&self) -> Matrix3<f64> {
        let nu = self.nu(&[]);
        Matrix3::from_fn(|i, j| self.f(&[i, j]).dot(&nu))
    }

    fn lift_rank_ratio(&self) -> f64 {
        let cols: Vec<SMatrix<f64, 8, 1>> = (0..3)
            .map(|i| {
                let (a, b) = (self.f(&[i]), self.nu(&[i]));
                SMatrix::<f64, 8, 1>::from_iterator(a.iter().chain(b.iter()).copied())
            })
            .collect();
        let j = SMatrix::<f64, 8, 3>::from_columns(&cols);
        let eig = (j.transpose() * j).symmetric_eigenvalues();
        let (lo, hi) = (eig.min().max(0.0), eig.max());
        if hi <= 0.0 {
            0.0
        } else {
            (lo / hi).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperClass {
    CuspidalEdge,
    /// Non-degenerate, with the null direction tangent to the singular surface.
    Other,
    /// `dλ = 0`.
    Degenerate,
}

impl HyperClass {
    pub fn name(self) -> &'static str {
        match self {
            HyperClass::CuspidalEdge => "cuspidal_edge",
            HyperClass::Other => "other",
            HyperClass::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HyperTolerances {
    /// `|λ|` relative to `|df|³` below which a point counts as singular.
    pub singular: f64,
    /// `|∇λ|` relative to the jet scale below which `dλ` counts as zero.
    pub degenerate: f64,
    /// `|cos|` of the angle between the null direction and `∇λ` below which
    /// the null direction is tangent to the singular surface.
    pub transversal: f64,
}

impl Default for HyperTolerances {
    fn default() -> Self {
        HyperTolerances { singular: 1e-9, degenerate: 1e-9, transversal: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperClassification {
    pub point: [f64; 3],
    pub class: HyperClass,
    pub null_direction: [f64; 3],
    pub grad_lambda: [f64; 3],
    /// `|cos|` of the angle between the null direction and `∇λ`.
    pub transversality: f64,
}

/// Type of a singular point of a hypersurface front.
pub fn classify_hyper(
    hf: &HyperFront,
    p: [f64; 3],
    tol: &HyperTolerances,
) -> Result<HyperClassification, HyperError> {
    let loc = hf.local(p, 2)?;
    let df = loc.df();
    let size = df.norm().max(1.0);
    let lambda = loc.lambda();
    if lambda.abs() > tol.singular * size.powi(3) {
        return Err(HyperError::NotSingular { p, lambda });
    }
    let eig = (df.transpose() * df).symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let top = eig.eigenvalues[order[2]].max(f64::MIN_POSITIVE);
    if eig.eigenvalues[order[1]].max(0.0).sqrt() <= 1e-6 * top.sqrt() {
        return Err(HyperError::RankDefect { p });
    }
    let eta: V3 = eig.eigenvectors.column(order[0]).into();
    let grad = loc.grad_lambda();
    let second = Matrix3::from_fn(|i, j| loc.f(&[i, j]).norm()).norm();
    let jet_scale = size * size * (second + size * loc.nu(&[0]).norm().max(1.0));
    let (class, cos) = if grad.norm() <= tol.degenerate * jet_scale {
        (HyperClass::Degenerate, 0.0)
    } else {
        let cos = grad.dot(&eta).abs() / (grad.norm() * eta.norm());
        if cos > tol.transversal {
            (HyperClass::CuspidalEdge, cos)
        } else {
            (HyperClass::Other, cos)
        }
    };
    Ok(HyperClassification {
        point: p,
        class,
        null_direction: canonical_sign([eta[0], eta[1], eta[2]]),
        grad_lambda: [grad[0], grad[1], grad[2]],
        transversality: cos,
    })
}

/// Flip so the largest component is positive, for reproducible output.
fn canonical_sign(x: [f64; 3]) -> [f64; 3] {
    let k = (0..3).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
    if x[k] < 0.0 {
        [-x[0], -x[1], -x[2]]
    } else {
        x
    }
}

/// Sectional curvature of a coordinate plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sectional {
    Value(f64),
    /// The induced metric on the plane is degenerate at this point.
    Unbounded,
}

impl Sectional {
    pub fn value(self) -> Option<f64> {
        match self {
            Sectional::Value(k) => Some(k),
            Sectional::Unbounded => None,
        }
    }
}

const DEGENERATE_PLANE: f64 = 1e-14;

/// `K(∂_i ∧ ∂_j) = (h_ii h_jj − h_ij²)/(g_ii g_jj − g_ij²)`.
pub fn sectional_curvature(hf: &HyperFront, p: [f64; 3], i: usize, j: usize) -> Result<Sectional, HyperError> {
    let mut x = [0.0; 3];
    let mut y = [0.0; 3];
    x[i] = 1.0;
    y[j] = 1.0;
    sectional_plane(hf, p, x, y)
}

/// Sectional curvature of the plane spanned by two parameter directions.
pub fn sectional_plane(hf: &HyperFront, p: [f64; 3], x: [f64; 3], y: [f64; 3]) -> Result<Sectional, HyperError> {
    let loc = hf.local(p, 2)?;
    let (g, h) = (loc.metric(), loc.second_form());
    let (x, y) = (V3::from(x), V3::from(y));
    let gxx = x.dot(&(g * x));
    let gyy = y.dot(&(g * y));
    let gxy = x.dot(&(g * y));
    let den = gxx * gyy - gxy * gxy;
    if !(den > DEGENERATE_PLANE * gxx * gyy) {
        return Ok(Sectional::Unbounded);
    }
    let num = x.dot(&(h * x)) * y.dot(&(h * y)) - x.dot(&(h * y)).powi(2);
    Ok(Sectional::Value(num / den))
}

/// Principal curvatures in increasing order, or `None` at a singular point.
pub fn principal_curvatures(hf: &HyperFront, p: [f64; 3]) -> Result<Option<[f64; 3]>, HyperError> {
    let loc = hf.local(p, 2)?;
    let g = loc.metric();
    let Some(chol) = g.cholesky() else { return Ok(None) };
    let l = chol.l();
    let Some(li) = l.try_inverse() else { return Ok(None) };
    let s = li * loc.second_form() * li.transpose();
    let s = (s + s.transpose()) * 0.5;
    let mut k: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    k.sort_by(f64::total_cmp);
    Ok(Some([k[0], k[1], k[2]]))
}

/// Smallest and largest sectional curvature over all tangent planes.
///
/// For a hypersurface the curvature of a plane is a convex combination of
/// the pairwise products of principal curvatures.
pub fn sectional_range(hf: &HyperFront, p: [f64; 3]) -> Result<Option<[f64; 2]>, HyperError> {
    Ok(principal_curvatures(hf, p)?.map(|k| {
        let prods = [k[0] * k[1], k[0] * k[2], k[1] * k[2]];
        [prods.iter().copied().fold(f64::INFINITY, f64::min), prods.iter().copied().fold(f64::NEG_INFINITY, f64::max)]
    }))
}

/// Points of the singular set found on lines parallel to the axes through
/// an `n × n` grid of the other two coordinates.
///
/// Lines lying entirely in the singular set are skipped; only transversal
/// crossings are reported.
pub fn singular_samples(hf: &HyperFront, n: usize) -> Result<Vec<[f64; 3]>, HyperError> {
    let n = n.max(2);
    let steps = 4 * n + 1;
    let mut lines = Vec::new();
    for axis in 0..3 {
        let (o1, o2) = ((axis + 1) % 3, (axis + 2) % 3);
        let (o1, o2) = (o1.min(o2), o1.max(o2));
        for i in 0..=n {
            for j in 0..=n {
                let mut base = [0.0; 3];
                base[o1] = lerp(hf.domain[o1], i as f64 / n as f64);
                base[o2] = lerp(hf.domain[o2], j as f64 / n as f64);
                lines.push((axis, base));
            }
        }
    }
    let found: Vec<Result<Vec<[f64; 3]>, HyperError>> =
        lines.par_iter().map(|&(axis, base)| line_zeros(hf, axis, base, steps)).collect();
    let mut out = Vec::new();
    for f in found {
        out.extend(f?);
    }
    Ok(out)
}

fn lerp(r: [f64; 2], t: f64) -> f64 {
    r[0] + (r[1] - r[0]) * t
}

fn line_zeros(hf: &HyperFront, axis: usize, base: [f64; 3], steps: usize) -> Result<Vec<[f64; 3]>, HyperError> {
    let at = |s: f64| {
        let mut p = base;
        p[axis] = s;
        p
    };
    let r = hf.domain[axis];
    let ts: Vec<f64> = (0..=steps).map(|k| lerp(r, k as f64 / steps as f64)).collect();
    let vals = ts.iter().map(|&t| hf.volume_density(at(t))).collect::<Result<Vec<f64>, _>>()?;
    let size = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if size == 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for k in 0..steps {
        let (a, b) = (vals[k], vals[k + 1]);
        if a == 0.0 {
            out.push(at(ts[k]));
        } else if a * b < 0.0 {
            let f = |t: f64| hf.volume_density(at(t)).unwrap_or(f64::NAN);
            out.push(at(illinois(f, [ts[k], ts[k + 1]], [a, b])));
        }
    }
    if vals[steps] == 0.0 {
        out.push(at(ts[steps]));
    }
    Ok(out)
}

fn illinois(f: impl Fn(f64) -> f64, [mut a, mut b]: [f64; 2], [mut fa, mut fb]: [f64; 2]) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || !fc.is_finite() || (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            fa = if side == 1 { fa * 0.5 } else { fa };
            side = 1;
        }
        b = c;
        fb = fc;
    }
    b
}

/// Largest principal curvature of the singular surface in the direction of
/// `ν`, i.e. the size of `h` restricted to `ker dλ`.
pub fn singular_second_form(hf: &HyperFront, p: [f64; 3]) -> Result<f64, HyperError> {
    let loc = hf.local(p, 2)?;
    let grad = loc.grad_lambda();
    let gn = grad.norm();
    if gn == 0.0 {
        return Err(HyperError::NotCuspidalEdge { p, class: HyperClass::Degenerate.name() });
    }
    let n = grad / gn;
    let k = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap_or(0);
    let e1 = (V3::ith(k, 1.0) - n * n[k]).normalize();
    let e2 = n.cross(&e1);
    let (g, h) = (loc.metric(), loc.second_form());
    let restrict = |m: &Matrix3<f64>| {
        Matrix2::new(e1.dot(&(m * e1)), e1.dot(&(m * e2)), e2.dot(&(m * e1)), e2.dot(&(m * e2)))
    };
    let (gt, ht) = (restrict(&g), restrict(&h));
    let Some(chol) = gt.cholesky() else {
        return Err(HyperError::NotCuspidalEdge { p, class: HyperClass::Other.name() });
    };
    let Some(li) = chol.l().try_inverse() else {
        return Err(HyperError::NotCuspidalEdge { p, class: HyperClass::Other.name() });
    };
    let s = li * ht * li.transpose();
    let s = (s + s.transpose()) * 0.5;
    Ok(s.symmetric_eigenvalues().iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularScan {
    pub samples: usize,
    pub cuspidal_edges: usize,
    pub other: usize,
    pub degenerate: usize,
    /// Sup over the samples of [`singular_second_form`].
    pub second_form_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<[f64; 3]>,
}

/// Second fundamental form along the singular set is treated as zero below this.
pub const VANISHING_SECOND_FORM: f64 = 1e-8;

impl SingularScan {
    pub fn second_form_vanishes(&self) -> bool {
        self.second_form_sup < VANISHING_SECOND_FORM
    }
}

pub fn scan_singular_set(hf: &HyperFront, n: usize, tol: &HyperTolerances) -> Result<SingularScan, HyperError> {
    let samples = singular_samples(hf, n)?;
    let rows: Vec<Result<(HyperClass, Option<f64>), HyperError>> = samples
        .par_iter()
        .map(|&p| {
            let c = classify_hyper(hf, p, tol)?;
            let h = match c.class {
                HyperClass::CuspidalEdge => Some(singular_second_form(hf, p)?),
                _ => None,
            };
            Ok((c.class, h))
        })
        .collect();
    let mut scan = SingularScan {
        samples: samples.len(),
        cuspidal_edges: 0,
        other: 0,
        degenerate: 0,
        second_form_sup: 0.0,
        worst: None,
    };
    for (p, row) in samples.iter().zip(rows) {
        let (class, h) = row?;
        match class {
            HyperClass::CuspidalEdge => scan.cuspidal_edges += 1,
            HyperClass::Other => scan.other += 1,
            HyperClass::Degenerate => scan.degenerate += 1,
        }
        if let Some(h) = h {
            if h > scan.second_form_sup || scan.worst.is_none() {
                scan.second_form_sup = scan.second_form_sup.max(h);
                scan.worst = Some(*p);
            }
        }
    }
    Ok(scan)
}

/// Intrinsic curvature of the singular surface at a cuspidal edge.
///
/// The surface is written as a graph over the two coordinates in which `∇λ`
/// is smallest, its induced metric `E, F, G` is sampled on a 5×5 stencil and
/// Brioschi's formula is applied to fourth-order differences.
pub fn singular_submanifold_curvature(
    hf: &HyperFront,
    p: [f64; 3],
    tol: &HyperTolerances,
) -> Result<f64, HyperError> {
    let c = classify_hyper(hf, p, tol)?;
    if c.class != HyperClass::CuspidalEdge {
        return Err(HyperError::NotCuspidalEdge { p, class: c.class.name() });
    }
    let g = c.grad_lambda;
    let k = (0..3).max_by(|&i, &j| g[i].abs().total_cmp(&g[j].abs())).unwrap_or(0);
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let (i, j) = (i.min(j), i.max(j));
    let h = 2e-3 * hf.scale().max(1.0);
    let graph = Graph { hf, base: p, axes: [i, j, k] };
    let mut efg = [[[0.0; 3]; 5]; 5];
    for (a, row) in efg.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = graph.metric((a as f64 - 2.0) * h, (b as f64 - 2.0) * h)?;
        }
    }
    let at = |a: i32, b: i32, m: usize| efg[(a + 2) as usize][(b + 2) as usize][m];
    const D1: [(i32, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    const D2: [(i32, f64); 5] = [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
    let ds = |m: usize| D1.iter().map(|&(o, w)| w * at(o, 0, m)).sum::<f64>() / (12.0 * h);
    let dt = |m: usize| D1.iter().map(|&(o, w)| w * at(0, o, m)).sum::<f64>() / (12.0 * h);
    let dss = |m: usize| D2.iter().map(|&(o, w)| w * at(o, 0, m)).sum::<f64>() / (12.0 * h * h);
    let dtt = |m: usize| D2.iter().map(|&(o, w)| w * at(0, o, m)).sum::<f64>() / (12.0 * h * h);
    let dst = |m: usize| {
        let mut s = 0.0;
        for &(a, wa) in &D1 {
            for &(b, wb) in &D1 {
                s += wa * wb * at(a, b, m);
            }
        }
        s / (144.0 * h * h)
    };
    let [e, f, gg] = efg[2][2];
    let (e_s, e_t, f_s, f_t, g_s, g_t) = (ds(0), dt(0), ds(1), dt(1), ds(2), dt(2));
    let a = Matrix3::new(
        -0.5 * dtt(0) + dst(1) - 0.5 * dss(2),
        0.5 * e_s,
        f_s - 0.5 * e_t,
        f_t - 0.5 * g_s,
        e,
        f,
        0.5 * g_t,
        f,
        gg,
    );
    let b = Matrix3::new(0.0, 0.5 * e_t, 0.5 * g_s, 0.5 * e_t, e, f, 0.5 * g_s, f, gg);
    let det = e * gg - f * f;
    Ok((a.determinant() - b.determinant()) / (det * det))
}

/// The singular surface near a point as a graph over two coordinates.
struct Graph<'a> {
    hf: &'a HyperFront,
    base: [f64; 3],
    /// Two graph coordinates, then the solved one.
    axes: [usize; 3],
}

impl Graph<'_> {
    /// Point of the singular set with graph coordinates offset by `(s, t)`.
    fn lift(&self, s: f64, t: f64) -> Result<HyperLocal, HyperError> {
        let [i, j, k] = self.axes;
        let mut x = self.base;
        x[i] += s;
        x[j] += t;
        let step_tol = 1e-15 * self.hf.scale().max(1.0);
        for _ in 0..60 {
            let loc = self.hf.local(x, 2)?;
            let dk = loc.grad_lambda()[k];
            if dk == 0.0 || !dk.is_finite() {
                break;
            }
            let step = loc.lambda() / dk;
            x[k] -= step;
            if step.abs() <= step_tol {
                return self.hf.local(x, 2);
            }
        }
        Err(HyperError::Trace { p: x })
    }

    /// `E, F, G` of the induced metric at graph offset `(s, t)`.
    fn metric(&self, s: f64, t: f64) -> Result<[f64; 3], HyperError> {
        let [i, j, k] = self.axes;
        let loc = self.lift(s, t)?;
        let g = loc.grad_lambda();
        let x = loc.f(&[i]) - loc.f(&[k]) * (g[i] / g[k]);
        let y = loc.f(&[j]) - loc.f(&[k]) * (g[j] / g[k]);
        Ok([x.dot(&x), x.dot(&y), y.dot(&y)])
    }
}

/// Coordinate-plane sectional curvatures at one point.
#[derive(Clone, Debug, Serialize)]
pub struct SectionalProbe {
    pub point: [f64; 3],
    pub uv: Sectional,
    pub uw: Sectional,
    pub vw: Sectional,
}

pub fn probe(hf: &HyperFront, p: [f64; 3]) -> Result<SectionalProbe, HyperError> {
    Ok(SectionalProbe {
        point: p,
        uv: sectional_curvature(hf, p, 0, 1)?,
        uw: sectional_curvature(hf, p, 0, 2)?,
        vw: sectional_curvature(hf, p, 1, 2)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubmanifoldSample {
    pub point: [f64; 3],
    pub curvature: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperReport {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub validation: HyperValidation,
    pub scan: SingularScan,
    pub second_form_vanishes: bool,
    /// Sectional curvatures at points stepping off the first singular sample
    /// along `∇λ`.
    pub approach: Vec<SectionalProbe>,
    pub submanifold: Vec<SubmanifoldSample>,
}

/// Validation, singular-set scan, and curvature samples near the singular set.
pub fn hyper_report(hf: &HyperFront, n: usize, tol: &HyperTolerances) -> Result<HyperReport, HyperError> {
    let validation = hf.validate(n.min(16));
    let scan = scan_singular_set(hf, n, tol)?;
    let samples = singular_samples(hf, n)?;
    let edges: Vec<[f64; 3]> = samples
        .iter()
        .copied()
        .filter(|&p| matches!(classify_hyper(hf, p, tol), Ok(c) if c.class == HyperClass::CuspidalEdge))
        .collect();
    let mut approach = Vec::new();
    if let Some(&p0) = edges.first() {
        let g = hf.local(p0, 2)?.grad_lambda().normalize();
        for s in [1e-1, 1e-2, 1e-3] {
            let p = [p0[0] + s * g[0], p0[1] + s * g[1], p0[2] + s * g[2]];
            approach.push(probe(hf, p)?);
        }
    }
    let stride = (edges.len() / 5).max(1);
    let mut submanifold = Vec::new();
    for &p in edges.iter().step_by(stride).take(5) {
        match singular_submanifold_curvature(hf, p, tol) {
            Ok(k) => submanifold.push(SubmanifoldSample { point: p, curvature: k }),
            Err(HyperError::Trace { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(HyperReport {
        label: hf.label.clone(),
        params: hf.params.clone(),
        validation,
        second_form_vanishes: scan.second_form_vanishes(),
        scan,
        approach,
        submanifold,
    })
}

/// One row of the parameter scan of [`HyperFront::cuspidal_graph`].
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub second_form_sup: f64,
    pub vanishes: bool,
    /// `ac = bc = 0`.
    pub predicted: bool,
}

/// Runs the singular-set scan of the cuspidal graph over `a, b, c ∈ {−1, 0, 1}`.
pub fn boundedness_scan(n: usize, tol: &HyperTolerances) -> Result<Vec<ScanRow>, HyperError> {
    let vals = [-1.0, 0.0, 1.0];
    let mut rows = Vec::new();
    for a in vals {
        for b in vals {
            for c in vals {
                let scan = scan_singular_set(&HyperFront::cuspidal_graph(a, b, c), n, tol)?;
                rows.push(ScanRow {
                    a,
                    b,
                    c,
                    second_form_sup: scan.second_form_sup,
                    vanishes: scan.second_form_vanishes(),
                    predicted: a * c == 0.0 && b * c == 0.0,
                });
            }
        }
    }
    Ok(rows)
}
