//! Singular curves: tracing, classification and curvature along them.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{Matrix2, Matrix3x2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::front::{Front, FrontError, Local, V3};
use crate::jet::Space;

#[derive(Debug, thiserror::Error)]
pub enum SingularError {
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error("({u}, {v}) is not a singular point: |λ| = {lambda:e}, singular value ratio {ratio:e}")]
    NotSingular { u: f64, v: f64, lambda: f64, ratio: f64 },
    #[error("grid must have at least 16 cells per axis, got {0}")]
    GridTooCoarse(usize),
    #[error("point ({u}, {v}) is not a cuspidal edge ({class:?})")]
    NotCuspidalEdge { u: f64, v: f64, class: PointClass },
    #[error("second fundamental form vanishes at ({u}, {v}); signs are undefined")]
    NonGeneric { u: f64, v: f64 },
    #[error("chart is not adapted at u = {u}: {reason}")]
    ChartNotAdapted { u: f64, reason: &'static str },
    #[error("inconclusive: |κ_s| = {0:e} is below tolerance")]
    Inconclusive(f64),
    #[error("λ does not change sign on the circle of radius {0}")]
    NoSignChange(f64),
    #[error("odd number ({count}) of sign changes on the circle of radius {radius}; try a smaller radius")]
    OddSignChanges { count: usize, radius: f64 },
    #[error("side {side:?} does not apply to a {class:?} point")]
    BadSide { side: Side, class: PointClass },
    #[error("export: {0}")]
    Export(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    CuspidalEdge,
    Swallowtail,
    #[serde(rename = "peak_other")]
    NondegeneratePeakOther,
    Degenerate,
}

impl PointClass {
    pub fn name(self) -> &'static str {
        match self {
            PointClass::CuspidalEdge => "cuspidal_edge",
            PointClass::Swallowtail => "swallowtail",
            PointClass::NondegeneratePeakOther => "peak_other",
            PointClass::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// |λ| bound along traced curves, relative to the largest |λ| on the grid.
    pub trace: f64,
    /// |λ| bound for refined seeds.
    pub seed: f64,
    /// Threshold on the normalized `|det(γ′, η)|`.
    pub classify: f64,
    /// |∇λ| bound for degenerate points, relative to the gradient scale.
    pub degenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { trace: 1e-10, seed: 1e-12, classify: 1e-6, degenerate: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceOptions {
    pub grid: usize,
    pub tol: Tolerances,
    /// Largest continuation step as a fraction of the smallest cell side.
    pub max_step: f64,
    pub max_samples: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { grid: 64, tol: Tolerances::default(), max_step: 0.5, max_samples: 200_000 }
    }
}

impl TraceOptions {
    pub fn with_grid(grid: usize) -> Self {
        TraceOptions { grid, ..Self::default() }
    }
}

/// Magnitudes used to make tolerances relative.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Scales {
    pub lambda: f64,
    pub domain: f64,
}

impl Scales {
    pub fn of(front: &Front) -> Result<Scales, SingularError> {
        let mut m: f64 = 0.0;
        for uv in front.domain.grid(33) {
            m = m.max(front.lambda(uv)?.abs());
        }
        Ok(Scales { lambda: if m > 0.0 { m } else { 1.0 }, domain: front.scale() })
    }

    pub fn gradient(&self) -> f64 {
        self.lambda / self.domain
    }
}

/// Differential data at a point of the singular set.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub uv: [f64; 2],
    pub lambda: f64,
    pub grad: [f64; 2],
    pub hess: Matrix2<f64>,
    /// Unit tangent of the singular curve in the parameter plane.
    pub tangent: [f64; 2],
    /// Curvature vector of the parameter curve (unit speed).
    pub accel: [f64; 2],
    /// `d(f∘γ)/dσ` with σ the parameter arclength.
    pub dgamma: V3,
    pub ddgamma: V3,
    pub nu: V3,
    /// Null direction (unit, sign arbitrary).
    pub eta: [f64; 2],
    /// Ratio of the singular values of `df`.
    pub rank_ratio: f64,
    /// Largest singular value of `df`.
    pub df_norm: f64,
    /// `sgn det(γ′, ∇λ)`.
    pub orient: f64,
    /// `D²f[η, η]`.
    pub d2f_eta: V3,
    local: Local,
}

fn det2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

impl Geometry {
    /// Normalized `det(γ′, η)`; vanishes at peaks.
    pub fn null_det(&self) -> f64 {
        det2(self.tangent, self.eta)
    }

    pub fn grad_norm(&self) -> f64 {
        norm2(self.grad)
    }

    pub fn speed(&self) -> f64 {
        self.dgamma.norm()
    }

    fn twist(&self) -> f64 {
        self.dgamma.cross(&self.ddgamma).dot(&self.nu)
    }

    /// Singular curvature; `None` where the image curve stalls.
    pub fn kappa_s(&self) -> Option<f64> {
        let s = self.speed();
        if s <= 1e-12 * self.df_norm.max(1e-300) || s == 0.0 {
            return None;
        }
        Some(self.orient * self.twist() / (s * s * s))
    }

    /// `κ_s |γ̂′|` with respect to parameter arclength.
    pub fn density(&self) -> f64 {
        let s2 = self.dgamma.norm_squared();
        if s2 == 0.0 {
            return f64::NAN;
        }
        self.orient * self.twist() / s2
    }

    pub fn kappa_nu(&self) -> Option<f64> {
        let s2 = self.dgamma.norm_squared();
        if s2 <= 1e-24 * self.df_norm.powi(2) || s2 == 0.0 {
            return None;
        }
        Some(self.ddgamma.dot(&self.nu) / s2)
    }

    pub fn local(&self) -> &Local {
        &self.local
    }

    /// The same point with the curve orientation reversed.
    pub fn reversed(&self) -> Geometry {
        let mut g = self.clone();
        g.tangent = [-g.tangent[0], -g.tangent[1]];
        g.dgamma = -g.dgamma;
        g.orient = -g.orient;
        g
    }
}

/// Null direction of `df` and the singular value ratio.
fn null_direction(loc: &Local) -> ([f64; 2], f64, f64) {
    let (fu, fv) = (loc.f(&[0]), loc.f(&[1]));
    let a = Matrix3x2::from_columns(&[fu, fv]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let s = svd.singular_values;
    let (lo, hi) = if s[0] <= s[1] { (0, 1) } else { (1, 0) };
    let eta = [vt[(lo, 0)], vt[(lo, 1)]];
    let ratio = if s[hi] > 0.0 { s[lo] / s[hi] } else { 0.0 };
    (eta, ratio, s[hi])
}

/// Full differential data at `uv`; the tangent is oriented along `hint` when given.
pub fn geometry(front: &Front, uv: [f64; 2], hint: Option<[f64; 2]>) -> Result<Geometry, FrontError> {
    let loc = front.local(uv, 3)?;
    Ok(geometry_from(loc, hint))
}

fn geometry_from(loc: Local, hint: Option<[f64; 2]>) -> Geometry {
    let grad = loc.grad_lambda();
    let hess = loc.hess_lambda();
    let gn = norm2(grad);
    let mut t = if gn > 0.0 { [-grad[1] / gn, grad[0] / gn] } else { hint.unwrap_or([1.0, 0.0]) };
    if let Some(h) = hint {
        if dot2(t, h) < 0.0 {
            t = [-t[0], -t[1]];
        }
    }
    let tn = norm2(t);
    let t = [t[0] / tn, t[1] / tn];
    let accel = if gn > 0.0 {
        let tv = Vector2::new(t[0], t[1]);
        let c = (tv.transpose() * hess * tv)[(0, 0)] / (gn * gn);
        [-c * grad[0], -c * grad[1]]
    } else {
        [0.0, 0.0]
    };
    let dgamma = loc.df(t);
    let ddgamma = loc.d2f(t, t) + loc.df(accel);
    let (eta, rank_ratio, df_norm) = null_direction(&loc);
    let d2f_eta = loc.d2f(eta, eta);
    let orient = f64::from(sgn(det2(t, grad)));
    Geometry {
        uv: loc.uv,
        lambda: loc.lambda(),
        grad,
        hess,
        tangent: t,
        accel,
        dgamma,
        ddgamma,
        nu: loc.nu(&[]),
        eta,
        rank_ratio,
        df_norm,
        orient,
        d2f_eta,
        local: loc,
    }
}

/// A classified sample of a singular curve.
#[derive(Clone, Debug, Serialize)]
pub struct SingularPoint {
    pub uv: [f64; 2],
    /// Arclength of the image curve from the first sample.
    pub s: f64,
    /// Arclength in the parameter plane from the first sample.
    pub sigma: f64,
    pub lambda: f64,
    pub grad_lambda: [f64; 2],
    pub null_dir: [f64; 2],
    pub singular_dir: [f64; 2],
    pub class: PointClass,
    pub kappa_s: Option<f64>,
    /// Set where the singular curvature diverges (peaks).
    pub kappa_s_divergent: bool,
    pub kappa_nu: Option<f64>,
    pub density: f64,
    /// +1 for a positive swallowtail, −1 for a negative one.
    pub swallowtail_sign: Option<i8>,
    /// Within the guard band around a peak.
    pub near_peak: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveEnd {
    Closed,
    Boundary,
    Degenerate,
    Failure,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularCurve {
    pub samples: Vec<SingularPoint>,
    pub closed: bool,
    /// Indices of samples that are not cuspidal edges.
    pub peaks: Vec<usize>,
    pub start: CurveEnd,
    pub end: CurveEnd,
}

impl SingularCurve {
    pub fn swallowtails(&self) -> impl Iterator<Item = &SingularPoint> {
        self.samples.iter().filter(|p| p.class == PointClass::Swallowtail)
    }

    pub fn has_degenerate(&self) -> bool {
        self.samples.iter().any(|p| p.class == PointClass::Degenerate)
    }

    /// Longest run of consecutive non-cuspidal samples.
    pub fn longest_peak_run(&self) -> usize {
        let (mut best, mut run) = (0, 0);
        for p in &self.samples {
            if p.class == PointClass::CuspidalEdge {
                run = 0;
            } else {
                run += 1;
                best = best.max(run);
            }
        }
        best
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub curves: Vec<SingularCurve>,
    /// Degenerate points met while tracing.
    pub degenerate: Vec<[f64; 2]>,
    pub scales: Scales,
    pub grid: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub(crate) raw: Vec<Vec<Geometry>>,
}

impl Trace {
    pub fn swallowtail_count(&self) -> usize {
        self.curves.iter().map(|c| c.swallowtails().count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Geometry along each curve, aligned with `curves[i].samples`.
    pub fn geometry(&self, i: usize) -> &[Geometry] {
        &self.raw[i]
    }
}

struct Tracer<'a> {
    front: &'a Front,
    opts: TraceOptions,
    scales: Scales,
    cell: f64,
    h_max: f64,
}

fn jittered_axis(lo: f64, hi: f64, n: usize, jitter: f64) -> Vec<f64> {
    let d = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n {
                hi
            } else {
                lo + (i as f64 + jitter) * d
            }
        })
        .collect()
}

impl Tracer<'_> {
    fn lambda_tol(&self, loc: &Local, rel: f64) -> f64 {
        let floor = 64.0 * f64::EPSILON * loc.f(&[0]).norm() * loc.f(&[1]).norm();
        (rel * self.scales.lambda).max(floor)
    }

    fn wrap_delta(&self, mut d: [f64; 2]) -> [f64; 2] {
        let dom = &self.front.domain;
        if dom.periodic_u {
            d[0] -= dom.width() * (d[0] / dom.width()).round();
        }
        if dom.periodic_v {
            d[1] -= dom.height() * (d[1] / dom.height()).round();
        }
        d
    }

    /// Newton projection onto λ = 0, staying within `reach` of the start.
    fn project(&self, q0: [f64; 2], reach: f64, rel: f64) -> Option<[f64; 2]> {
        let mut q = q0;
        for _ in 0..12 {
            let loc = self.front.local(q, 2).ok()?;
            let l = loc.lambda();
            if !l.is_finite() {
                return None;
            }
            if l.abs() <= self.lambda_tol(&loc, rel) {
                return Some(q);
            }
            let g = loc.grad_lambda();
            let g2 = dot2(g, g);
            if g2 == 0.0 || !g2.is_finite() {
                return None;
            }
            q = [q[0] - l * g[0] / g2, q[1] - l * g[1] / g2];
            if norm2([q[0] - q0[0], q[1] - q0[1]]) > reach {
                return None;
            }
        }
        None
    }

    fn run(&self) -> Result<Trace, SingularError> {
        let n = self.opts.grid;
        let dom = self.front.domain;
        let us = jittered_axis(dom.u[0], dom.u[1], n, 0.0137);
        let vs = jittered_axis(dom.v[0], dom.v[1], n, 0.0173);
        let nodes: Vec<[f64; 2]> = vs.iter().flat_map(|&v| us.iter().map(move |&u| [u, v])).collect();
        let mut lam: Vec<f64> = nodes
            .par_iter()
            .map(|&p| self.front.lambda(p).unwrap_or(f64::NAN))
            .collect();
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        if dom.periodic_u {
            for j in 0..=n {
                lam[idx(n, j)] = lam[idx(0, j)];
            }
        }
        if dom.periodic_v {
            for i in 0..=n {
                lam[idx(i, n)] = lam[idx(i, 0)];
            }
        }
        let mut edges = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let a = lam[idx(i, j)];
                if i < n && !(dom.periodic_v && j == n) {
                    let b = lam[idx(i + 1, j)];
                    if a.is_finite() && b.is_finite() && (a > 0.0) != (b > 0.0) {
                        edges.push((nodes[idx(i, j)], nodes[idx(i + 1, j)], a, b));
                    }
                }
                if j < n && !(dom.periodic_u && i == n) {
                    let b = lam[idx(i, j + 1)];
                    if a.is_finite() && b.is_finite() && (a > 0.0) != (b > 0.0) {
                        edges.push((nodes[idx(i, j)], nodes[idx(i, j + 1)], a, b));
                    }
                }
            }
        }
        let seeds: Vec<Option<[f64; 2]>> = edges.par_iter().map(|e| self.refine_edge(e)).collect();
        let seeds: Vec<[f64; 2]> = seeds.into_iter().flatten().collect();

        let mut trace = Trace {
            curves: Vec::new(),
            degenerate: Vec::new(),
            scales: self.scales,
            grid: n,
            warnings: Vec::new(),
            raw: Vec::new(),
        };
        let bucket = self.cell;
        let mut hash: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
        let mut raws: Vec<Vec<Geometry>> = Vec::new();
        let mut ends: Vec<(CurveEnd, CurveEnd)> = Vec::new();
        for seed in seeds {
            if self.near_traced(seed, &raws, &hash, bucket) {
                continue;
            }
            let start = geometry(self.front, seed, None)?;
            if start.grad_norm() <= self.opts.tol.degenerate * self.scales.gradient() {
                if !trace.degenerate.iter().any(|d| norm2(self.wrap_delta([d[0] - seed[0], d[1] - seed[1]])) < 1e-6 * self.scales.domain) {
                    trace.degenerate.push(seed);
                }
                continue;
            }
            let (fwd, fend) = self.march(&start, &mut trace)?;
            let (pts, e0, e1) = if fend == CurveEnd::Closed {
                (fwd, CurveEnd::Closed, CurveEnd::Closed)
            } else {
                let (bwd, bend) = self.march(&start.reversed(), &mut trace)?;
                let mut pts: Vec<Geometry> = bwd.iter().skip(1).rev().map(Geometry::reversed).collect();
                pts.extend(fwd);
                (pts, bend, fend)
            };
            let id = raws.len();
            for (k, g) in pts.iter().enumerate() {
                let w = dom.wrap(g.uv);
                let key = ((w[0] / bucket).floor() as i64, (w[1] / bucket).floor() as i64);
                hash.entry(key).or_default().push((id, k));
            }
            raws.push(pts);
            ends.push((e0, e1));
        }
        for (pts, (e0, e1)) in raws.into_iter().zip(ends) {
            let closed = e0 == CurveEnd::Closed;
            let (curve, geo) = self.finish(pts, closed, e0, e1)?;
            trace.curves.push(curve);
            trace.raw.push(geo);
        }
        Ok(trace)
    }

    fn near_traced(
        &self,
        p: [f64; 2],
        raws: &[Vec<Geometry>],
        hash: &HashMap<(i64, i64), Vec<(usize, usize)>>,
        bucket: f64,
    ) -> bool {
        let dom = &self.front.domain;
        let w = dom.wrap(p);
        let (ci, cj) = ((w[0] / bucket).floor() as i64, (w[1] / bucket).floor() as i64);
        let tol = 0.1 * self.cell;
        let nu = (dom.width() / bucket).ceil() as i64;
        let nv = (dom.height() / bucket).ceil() as i64;
        for di in -2..=2 {
            for dj in -2..=2 {
                let mut keys = vec![(ci + di, cj + dj)];
                // periodic neighbours across the seam
                if dom.periodic_u {
                    keys.push((ci + di + nu, cj + dj));
                    keys.push((ci + di - nu, cj + dj));
                }
                if dom.periodic_v {
                    keys.push((ci + di, cj + dj + nv));
                    keys.push((ci + di, cj + dj - nv));
                }
                for key in keys {
                    let Some(list) = hash.get(&key) else { continue };
                    for &(id, k) in list {
                        let pts = &raws[id];
                        let a = pts[k].uv;
                        for other in [k.checked_sub(1), Some(k + 1)].into_iter().flatten() {
                            if other >= pts.len() {
                                continue;
                            }
                            let b = pts[other].uv;
                            let d0 = self.wrap_delta([p[0] - a[0], p[1] - a[1]]);
                            let ab = [b[0] - a[0], b[1] - a[1]];
                            let l2 = dot2(ab, ab);
                            let t = if l2 > 0.0 { (dot2(d0, ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
                            let r = [d0[0] - t * ab[0], d0[1] - t * ab[1]];
                            if norm2(r) < tol {
                                return true;
                            }
                        }
                        if pts.len() == 1 && norm2(self.wrap_delta([p[0] - a[0], p[1] - a[1]])) < tol {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    fn refine_edge(&self, e: &([f64; 2], [f64; 2], f64, f64)) -> Option<[f64; 2]> {
        let (a, b, mut la, mut lb) = *e;
        let (mut ta, mut tb) = (0.0, 1.0);
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let tol = self.opts.tol.seed * self.scales.lambda;
        let mut side = 0i8;
        let mut t = 0.5;
        for _ in 0..200 {
            // Illinois variant of regula falsi
            t = (ta * lb - tb * la) / (lb - la);
            if !(t > ta && t < tb) {
                t = 0.5 * (ta + tb);
            }
            let l = self.front.lambda(at(t)).ok()?;
            if l.abs() <= tol || (tb - ta) < 1e-15 {
                break;
            }
            if (l > 0.0) == (lb > 0.0) {
                tb = t;
                lb = l;
                if side == -1 {
                    la *= 0.5;
                }
                side = -1;
            } else {
                ta = t;
                la = l;
                if side == 1 {
                    lb *= 0.5;
                }
                side = 1;
            }
        }
        let len = norm2([b[0] - a[0], b[1] - a[1]]);
        self.project(at(t), len, self.opts.tol.seed).or(Some(at(t)))
    }

    fn probe(front: &Front, scales: Scales) -> Tracer<'_> {
        let h = 1e-4 * scales.domain;
        Tracer { front, opts: TraceOptions::default(), scales, cell: h, h_max: h }
    }

    fn inside(&self, p: [f64; 2]) -> bool {
        self.front.domain.contains(p)
    }

    /// Follows the curve from `start` along its tangent.
    fn march(&self, start: &Geometry, trace: &mut Trace) -> Result<(Vec<Geometry>, CurveEnd), SingularError> {
        let mut pts = vec![start.clone()];
        let mut h = 0.25 * self.h_max;
        let h_min = 1e-9 * self.cell;
        let tol = self.opts.tol.trace;
        let mut travelled = 0.0;
        loop {
            if pts.len() >= self.opts.max_samples {
                trace.warnings.push(format!("continuation stopped after {} samples", pts.len()));
                return Ok((pts, CurveEnd::Failure));
            }
            let cur = pts.last().unwrap().clone();
            let t = cur.tangent;
            let next = loop {
                if h < h_min {
                    trace.warnings.push(format!(
                        "continuation failed near ({:.6}, {:.6}); last good sample kept",
                        cur.uv[0], cur.uv[1]
                    ));
                    return Ok((pts, CurveEnd::Failure));
                }
                let q0 = [
                    cur.uv[0] + h * t[0] + 0.5 * h * h * cur.accel[0],
                    cur.uv[1] + h * t[1] + 0.5 * h * h * cur.accel[1],
                ];
                if let Some(q) = self.project(q0, h, tol) {
                    let g = geometry(self.front, q, Some(t))?;
                    let step = norm2([q[0] - cur.uv[0], q[1] - cur.uv[1]]);
                    if dot2(g.tangent, t) > 0.98 && step > 0.5 * h && step < 1.5 * h {
                        break g;
                    }
                }
                h *= 0.5;
            };
            // a degenerate point between the two samples ends the curve
            if let Some(q) = self.degenerate_between(&cur, &next) {
                let g = geometry(self.front, q, Some(t))?;
                if !trace.degenerate.iter().any(|d| norm2(self.wrap_delta([d[0] - q[0], d[1] - q[1]])) < 1e-6 * self.scales.domain) {
                    trace.degenerate.push(q);
                }
                pts.push(g);
                return Ok((pts, CurveEnd::Degenerate));
            }
            if !self.inside(next.uv) {
                if let Some(g) = self.clip(&cur, &next)? {
                    pts.push(g);
                }
                return Ok((pts, CurveEnd::Boundary));
            }
            let step = norm2([next.uv[0] - cur.uv[0], next.uv[1] - cur.uv[1]]);
            if pts.len() >= 3 && travelled > 2.0 * h {
                let d0 = self.wrap_delta([start.uv[0] - cur.uv[0], start.uv[1] - cur.uv[1]]);
                let c = [next.uv[0] - cur.uv[0], next.uv[1] - cur.uv[1]];
                let s = dot2(d0, c) / dot2(c, c);
                let perp = norm2([d0[0] - s * c[0], d0[1] - s * c[1]]);
                if s > 0.0 && s <= 1.0 && perp < 0.2 * step && dot2(start.tangent, t) > 0.0 {
                    return Ok((pts, CurveEnd::Closed));
                }
            }
            travelled += step;
            pts.push(next);
            h = (h * 1.5).min(self.h_max);
        }
    }

    fn degenerate_between(&self, a: &Geometry, b: &Geometry) -> Option<[f64; 2]> {
        let tol = self.opts.tol.degenerate * self.scales.gradient();
        if b.grad_norm() <= tol {
            return Some(b.uv);
        }
        let g0 = Vector2::from(a.grad);
        let d = Vector2::from(b.grad) - g0;
        if d.norm_squared() == 0.0 {
            return None;
        }
        let s = -g0.dot(&d) / d.norm_squared();
        if !(s > 0.0 && s < 1.0) {
            return None;
        }
        let m = (g0 + d * s).norm();
        if m >= 0.1 * a.grad_norm().min(b.grad_norm()) {
            return None;
        }
        let mut q = Vector2::new(a.uv[0] + s * (b.uv[0] - a.uv[0]), a.uv[1] + s * (b.uv[1] - a.uv[1]));
        for _ in 0..30 {
            let loc = self.front.local([q[0], q[1]], 3).ok()?;
            let g = Vector2::from(loc.grad_lambda());
            if g.norm() <= tol {
                break;
            }
            let step = loc.hess_lambda().lu().solve(&g)?;
            q -= step;
        }
        let loc = self.front.local([q[0], q[1]], 3).ok()?;
        let l = loc.lambda().abs();
        let g = norm2(loc.grad_lambda());
        let chord = norm2([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]);
        let off = norm2([q[0] - a.uv[0] - s * (b.uv[0] - a.uv[0]), q[1] - a.uv[1] - s * (b.uv[1] - a.uv[1])]);
        if g <= 1e3 * tol && l <= 1e-6 * self.scales.lambda && off <= chord {
            Some([q[0], q[1]])
        } else {
            None
        }
    }

    /// Point where the curve leaves the domain between `a` (inside) and `b`.
    fn clip(&self, a: &Geometry, b: &Geometry) -> Result<Option<Geometry>, SingularError> {
        let dom = self.front.domain;
        let mut hit: Option<(f64, usize, f64)> = None;
        for (k, (lo, hi, periodic)) in [(dom.u[0], dom.u[1], dom.periodic_u), (dom.v[0], dom.v[1], dom.periodic_v)]
            .into_iter()
            .enumerate()
        {
            let (x0, x1) = (a.uv[k], b.uv[k]);
            if periodic || x1 == x0 {
                continue;
            }
            for bound in [lo, hi] {
                let f = (bound - x0) / (x1 - x0);
                if (0.0..=1.0).contains(&f) && hit.is_none_or(|h| f < h.0) {
                    hit = Some((f, k, bound));
                }
            }
        }
        let Some((frac, axis, value)) = hit else { return Ok(None) };
        if frac == 0.0 {
            // `a` already lies on the boundary
            return Ok(None);
        }
        let other = 1 - axis;
        let (olo, ohi) = if other == 0 { (dom.u[0], dom.u[1]) } else { (dom.v[0], dom.v[1]) };
        let at = |x: f64| {
            let mut p = [0.0; 2];
            p[axis] = value;
            p[other] = x;
            p
        };
        let lam = |x: f64| self.front.lambda(at(x)).unwrap_or(f64::NAN);
        // bracket the root along the boundary around the chord exit
        let x0 = a.uv[other] + frac * (b.uv[other] - a.uv[other]);
        let chord = norm2([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]).max(1e-12 * self.scales.domain);
        let l0 = lam(x0);
        if !l0.is_finite() {
            return Ok(None);
        }
        let mut bracket = None;
        let mut w = chord;
        'outer: for _ in 0..8 {
            for x in [x0 - w, x0 + w] {
                let x = x.clamp(olo, ohi);
                let l = lam(x);
                if l.is_finite() && (l > 0.0) != (l0 > 0.0) {
                    bracket = Some(if x < x0 { (x, l, x0, l0) } else { (x0, l0, x, l) });
                    break 'outer;
                }
            }
            w *= 2.0;
        }
        let x = match bracket {
            Some((mut xa, mut la, mut xb, mut lb)) => {
                let tol = self.opts.tol.trace * self.scales.lambda;
                let mut x = 0.5 * (xa + xb);
                for _ in 0..200 {
                    x = (xa * lb - xb * la) / (lb - la);
                    if !(x > xa && x < xb) {
                        x = 0.5 * (xa + xb);
                    }
                    let l = lam(x);
                    if l.abs() <= tol || xb - xa < 1e-15 * self.scales.domain {
                        break;
                    }
                    if (l > 0.0) == (lb > 0.0) {
                        xb = x;
                        lb = l;
                        la *= 0.5;
                    } else {
                        xa = x;
                        la = l;
                        lb *= 0.5;
                    }
                }
                x
            }
            None if l0.abs() <= 1e-8 * self.scales.lambda => x0,
            None => return Ok(None),
        };
        let g = geometry(self.front, at(x), Some(a.tangent))?;
        Ok(Some(g))
    }

    /// Inserts refined swallowtails, orients η continuously and classifies.
    fn finish(
        &self,
        mut pts: Vec<Geometry>,
        closed: bool,
        start: CurveEnd,
        end: CurveEnd,
    ) -> Result<(SingularCurve, Vec<Geometry>), SingularError> {
        orient_eta(&mut pts);
        let mut out: Vec<Geometry> = Vec::with_capacity(pts.len() + 4);
        let nseg = if closed { pts.len() } else { pts.len().saturating_sub(1) };
        for i in 0..pts.len() {
            out.push(pts[i].clone());
            if i >= nseg {
                continue;
            }
            let touches_degenerate = (i == 0 && start == CurveEnd::Degenerate) || (i + 2 == pts.len() && end == CurveEnd::Degenerate);
            if touches_degenerate {
                continue;
            }
            let a = &pts[i];
            let b = self.segment_end(&pts, i);
            let (da, db) = (a.null_det(), b.null_det());
            let ctol = self.opts.tol.classify;
            if da.abs() <= ctol || db.abs() <= ctol {
                continue;
            }
            let floor = 10.0 * self.opts.tol.degenerate * self.scales.gradient();
            if da != 0.0 && db != 0.0 && (da > 0.0) != (db > 0.0) && a.grad_norm() > floor && b.grad_norm() > floor {
                if let Some(g) = self.refine_peak(a, &b)? {
                    let close = |p: &Geometry| norm2(self.wrap_delta([p.uv[0] - g.uv[0], p.uv[1] - g.uv[1]])) < 1e-9 * self.scales.domain;
                    if g.grad_norm() > floor && !close(a) && !close(&b) {
                        out.push(g);
                    }
                }
            }
        }
        orient_eta(&mut out);
        let curve = self.classify_samples(&out, closed, start, end)?;
        Ok((curve, out))
    }

    fn segment_end(&self, pts: &[Geometry], i: usize) -> Geometry {
        if i + 1 < pts.len() {
            return pts[i + 1].clone();
        }
        let a = &pts[i];
        let mut b = pts[0].clone();
        let d = self.wrap_delta([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]);
        b.uv = [a.uv[0] + d[0], a.uv[1] + d[1]];
        b
    }

    fn refine_peak(&self, a: &Geometry, b: &Geometry) -> Result<Option<Geometry>, SingularError> {
        let seg = Hermite::new(a, b);
        let eval = |s: f64| -> Option<Geometry> {
            let p = seg.point(s);
            let q = self.project(p, seg.len, self.opts.tol.trace)?;
            let mut g = geometry(self.front, q, Some(seg.tangent(s))).ok()?;
            if dot2(g.eta, a.eta) < 0.0 {
                g.eta = [-g.eta[0], -g.eta[1]];
            }
            Some(g)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut dlo = a.null_det();
        let mut best = None;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let Some(g) = eval(mid) else { return Ok(None) };
            let d = g.null_det();
            best = Some(g);
            if d == 0.0 || (hi - lo) * seg.len < 1e-14 * self.scales.domain {
                break;
            }
            if (d > 0.0) == (dlo > 0.0) {
                lo = mid;
                dlo = d;
            } else {
                hi = mid;
            }
        }
        Ok(best)
    }

    fn classify_samples(
        &self,
        pts: &[Geometry],
        closed: bool,
        start: CurveEnd,
        end: CurveEnd,
    ) -> Result<SingularCurve, SingularError> {
        let n = pts.len();
        let tol = self.opts.tol;
        let gscale = self.scales.gradient();
        // parameter and image arclength
        let mut sigma = vec![0.0; n];
        let mut s = vec![0.0; n];
        for i in 1..n {
            let a = &pts[i - 1];
            let b = &pts[i];
            let d = self.wrap_delta([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]);
            sigma[i] = sigma[i - 1] + norm2(d);
            s[i] = s[i - 1] + 0.5 * (a.speed() + b.speed()) * norm2(d);
        }
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let g = &pts[i];
            let d = g.null_det();
            let class = if g.grad_norm() <= tol.degenerate * gscale {
                PointClass::Degenerate
            } else if d.abs() > tol.classify {
                PointClass::CuspidalEdge
            } else {
                let (p, q) = match (i.checked_sub(1), (i + 1 < n).then_some(i + 1)) {
                    (Some(p), Some(q)) => (p, q),
                    (None, Some(q)) if closed => (n - 1, q),
                    (Some(p), None) if closed => (p, 0),
                    (None, Some(q)) => (i, q),
                    (Some(p), None) => (p, i),
                    (None, None) => (i, i),
                };
                let span = {
                    let a = &pts[p];
                    let b = &pts[q];
                    norm2(self.wrap_delta([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]))
                };
                let deriv = if span > 0.0 { (pts[q].null_det() - pts[p].null_det()) / span } else { 0.0 };
                if deriv.abs() > tol.classify && g.df_norm > 0.0 {
                    PointClass::Swallowtail
                } else {
                    PointClass::NondegeneratePeakOther
                }
            };
            let kappa = if class == PointClass::CuspidalEdge { g.kappa_s() } else { None };
            let swallowtail_sign = if class == PointClass::Swallowtail { swallowtail_sign(g) } else { None };
            samples.push(SingularPoint {
                uv: self.front.domain.wrap(g.uv),
                s: s[i],
                sigma: sigma[i],
                lambda: g.lambda,
                grad_lambda: g.grad,
                null_dir: g.eta,
                singular_dir: g.tangent,
                class,
                kappa_s: kappa,
                kappa_s_divergent: class == PointClass::Swallowtail || class == PointClass::NondegeneratePeakOther,
                kappa_nu: if class == PointClass::CuspidalEdge { g.kappa_nu() } else { None },
                density: g.density(),
                swallowtail_sign,
                near_peak: false,
            });
        }
        let peaks: Vec<usize> = (0..n).filter(|&i| samples[i].class != PointClass::CuspidalEdge).collect();
        let guard = 1e-3 * self.scales.domain;
        let total = sigma.last().copied().unwrap_or(0.0);
        for &k in &peaks {
            for (i, smp) in samples.iter_mut().enumerate() {
                let mut d = (sigma[i] - sigma[k]).abs();
                if closed {
                    d = d.min(total - d);
                }
                if d <= guard {
                    smp.near_peak = true;
                }
            }
        }
        smooth_peak_density(&mut samples, closed);
        Ok(SingularCurve { samples, closed, peaks, start, end })
    }
}

/// Tail side of a swallowtail: the side `n` with `g(Df·n, γ̂″) > 0`.
fn tail_direction(g: &Geometry) -> Option<[f64; 2]> {
    let n = [-g.tangent[1], g.tangent[0]];
    let pairing = g.local.df(n).dot(&g.ddgamma);
    if pairing.abs() <= 1e-12 * g.df_norm * g.ddgamma.norm() || pairing == 0.0 {
        return None;
    }
    Some(if pairing > 0.0 { n } else { [-n[0], -n[1]] })
}

/// +1 when the tail part lies in M₋ (so α₊ = 2π).
fn swallowtail_sign(g: &Geometry) -> Option<i8> {
    let n = tail_direction(g)?;
    match sgn(dot2(g.grad, n)) {
        0 => None,
        s => Some(-s),
    }
}

/// Makes η continuous along the curve, starting from a positive frame.
fn orient_eta(pts: &mut [Geometry]) {
    let Some(first) = pts.first_mut() else { return };
    if first.null_det() < 0.0 {
        first.eta = [-first.eta[0], -first.eta[1]];
    }
    for i in 1..pts.len() {
        let prev = pts[i - 1].eta;
        let g = &mut pts[i];
        if dot2(g.eta, prev) < 0.0 {
            g.eta = [-g.eta[0], -g.eta[1]];
        }
    }
}

/// At samples where the density is undefined, use the mean of the neighbours.
fn smooth_peak_density(samples: &mut [SingularPoint], closed: bool) {
    let n = samples.len();
    for i in 0..n {
        if samples[i].density.is_finite() && samples[i].class == PointClass::CuspidalEdge {
            continue;
        }
        let prev = if i > 0 { Some(i - 1) } else if closed { Some(n - 1) } else { None };
        let next = if i + 1 < n { Some(i + 1) } else if closed { Some(0) } else { None };
        let vals: Vec<f64> = [prev, next]
            .into_iter()
            .flatten()
            .map(|k| samples[k].density)
            .filter(|d| d.is_finite())
            .collect();
        if !samples[i].density.is_finite() && !vals.is_empty() {
            samples[i].density = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }
}

/// Cubic Hermite interpolant between two samples, used for quadrature.
pub(crate) struct Hermite {
    a: [f64; 2],
    ta: [f64; 2],
    b: [f64; 2],
    tb: [f64; 2],
    pub len: f64,
}

impl Hermite {
    pub(crate) fn new(a: &Geometry, b: &Geometry) -> Hermite {
        let len = norm2([b.uv[0] - a.uv[0], b.uv[1] - a.uv[1]]);
        Hermite {
            a: a.uv,
            ta: [a.tangent[0] * len, a.tangent[1] * len],
            b: b.uv,
            tb: [b.tangent[0] * len, b.tangent[1] * len],
            len,
        }
    }

    pub(crate) fn point(&self, s: f64) -> [f64; 2] {
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        [
            h00 * self.a[0] + h10 * self.ta[0] + h01 * self.b[0] + h11 * self.tb[0],
            h00 * self.a[1] + h10 * self.ta[1] + h01 * self.b[1] + h11 * self.tb[1],
        ]
    }

    pub(crate) fn tangent(&self, s: f64) -> [f64; 2] {
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        [
            d00 * self.a[0] + d10 * self.ta[0] + d01 * self.b[0] + d11 * self.tb[0],
            d00 * self.a[1] + d10 * self.ta[1] + d01 * self.b[1] + d11 * self.tb[1],
        ]
    }
}

const GL4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

/// Traces every singular curve of `front`.
pub fn trace(front: &Front, opts: &TraceOptions) -> Result<Trace, SingularError> {
    if opts.grid < 16 {
        return Err(SingularError::GridTooCoarse(opts.grid));
    }
    let scales = Scales::of(front)?;
    let dom = front.domain;
    let cell = (dom.width() / opts.grid as f64).min(dom.height() / opts.grid as f64);
    let tracer = Tracer { front, opts: *opts, scales, cell, h_max: opts.max_step * cell };
    tracer.run()
}

/// Integrates `integrand(geometry)` against parameter arclength along a traced curve.
///
/// Gauss–Legendre nodes on cubic Hermite segments, projected onto λ = 0; no
/// node falls on a sample, so peaks are never evaluated.
pub fn integrate_along<F>(front: &Front, trace: &Trace, curve: usize, integrand: F) -> Result<f64, SingularError>
where
    F: Fn(&Geometry) -> f64 + Sync,
{
    let pts = trace.geometry(curve);
    let closed = trace.curves[curve].closed;
    let n = pts.len();
    let nseg = if closed { n } else { n.saturating_sub(1) };
    let tracer = Tracer {
        front,
        opts: TraceOptions::with_grid(trace.grid),
        scales: trace.scales,
        cell: 0.0,
        h_max: 0.0,
    };
    let parts: Vec<Result<f64, SingularError>> = (0..nseg)
        .into_par_iter()
        .map(|i| {
            let a = &pts[i];
            let b = tracer.segment_end(pts, i);
            let seg = Hermite::new(a, &b);
            if seg.len == 0.0 {
                return Ok(0.0);
            }
            let mut acc = 0.0;
            for (s, w) in GL4 {
                let p = seg.point(s);
                let q = tracer.project(p, seg.len, 1e-11).unwrap_or(p);
                let tan = seg.tangent(s);
                let g = geometry(front, q, Some(tan))?;
                acc += w * integrand(&g) * norm2(tan);
            }
            Ok(acc)
        })
        .collect();
    let vals: Result<Vec<f64>, SingularError> = parts.into_iter().collect();
    Ok(pairwise_sum(&vals?))
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// `∫ κ_s ds` over one traced curve.
pub fn integrate_kappa_s_curve(front: &Front, trace: &Trace, curve: usize) -> Result<f64, SingularError> {
    integrate_along(front, trace, curve, |g| {
        let d = g.density();
        if d.is_finite() {
            d
        } else {
            0.0
        }
    })
}

/// Per-sample `κ_s |γ̂′|` with respect to parameter arclength.
pub fn kappa_s_measure(curve: &SingularCurve) -> Vec<f64> {
    curve.samples.iter().map(|p| p.density).collect()
}

/// Classifies one point of the singular set.
pub fn classify(front: &Front, uv: [f64; 2]) -> Result<SingularPoint, SingularError> {
    classify_with(front, uv, &Tolerances::default())
}

pub fn classify_with(front: &Front, uv: [f64; 2], tol: &Tolerances) -> Result<SingularPoint, SingularError> {
    let scales = Scales::of(front)?;
    let g = geometry(front, uv, None)?;
    let lam_tol = 1e-8 * scales.lambda;
    if g.lambda.abs() > lam_tol || g.rank_ratio > 1e-6 {
        return Err(SingularError::NotSingular { u: uv[0], v: uv[1], lambda: g.lambda, ratio: g.rank_ratio });
    }
    let class = if g.grad_norm() <= tol.degenerate * scales.gradient() {
        PointClass::Degenerate
    } else if g.null_det().abs() > tol.classify {
        PointClass::CuspidalEdge
    } else {
        let h = 1e-4 * scales.domain;
        let tr = Tracer::probe(front, scales);
        let step = |sign: f64| -> Option<Geometry> {
            let q0 = [uv[0] + sign * h * g.tangent[0], uv[1] + sign * h * g.tangent[1]];
            let q = tr.project(q0, 2.0 * h, tol.trace)?;
            let mut n = geometry(front, q, Some(g.tangent)).ok()?;
            if dot2(n.eta, g.eta) < 0.0 {
                n.eta = [-n.eta[0], -n.eta[1]];
            }
            Some(n)
        };
        match (step(1.0), step(-1.0)) {
            (Some(p), Some(m)) => {
                let span = norm2([p.uv[0] - m.uv[0], p.uv[1] - m.uv[1]]);
                let deriv = (p.null_det() - m.null_det()) / span;
                if deriv.abs() > tol.classify && g.df_norm > 0.0 {
                    PointClass::Swallowtail
                } else {
                    PointClass::NondegeneratePeakOther
                }
            }
            _ => PointClass::NondegeneratePeakOther,
        }
    };
    Ok(SingularPoint {
        uv,
        s: 0.0,
        sigma: 0.0,
        lambda: g.lambda,
        grad_lambda: g.grad,
        null_dir: g.eta,
        singular_dir: g.tangent,
        class,
        kappa_s: if class == PointClass::CuspidalEdge { g.kappa_s() } else { None },
        kappa_s_divergent: matches!(class, PointClass::Swallowtail | PointClass::NondegeneratePeakOther),
        kappa_nu: if class == PointClass::CuspidalEdge { g.kappa_nu() } else { None },
        density: g.density(),
        swallowtail_sign: if class == PointClass::Swallowtail { swallowtail_sign(&g) } else { None },
        near_peak: g.null_det().abs() < 1e-3,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvatureAt {
    pub kappa_s: f64,
    pub density: f64,
    /// Close to a peak, where the value is large and less reliable.
    pub near_peak: bool,
}

/// Singular curvature at a point of a cuspidal edge.
pub fn singular_curvature(front: &Front, uv: [f64; 2], tangent: Option<[f64; 2]>) -> Result<CurvatureAt, SingularError> {
    let g = geometry(front, uv, tangent)?;
    let class = if g.null_det().abs() > Tolerances::default().classify {
        PointClass::CuspidalEdge
    } else {
        PointClass::NondegeneratePeakOther
    };
    let Some(k) = g.kappa_s() else {
        return Err(SingularError::NotCuspidalEdge { u: uv[0], v: uv[1], class });
    };
    Ok(CurvatureAt { kappa_s: k, density: g.density(), near_peak: g.null_det().abs() < 1e-3 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalCurvature {
    pub kappa_nu: f64,
    /// Second fundamental form nonzero, equivalently `κ_ν ≠ 0`.
    pub generic: bool,
}

pub fn limiting_normal_curvature(front: &Front, uv: [f64; 2]) -> Result<NormalCurvature, SingularError> {
    let g = geometry(front, uv, None)?;
    let k = g.kappa_nu().ok_or(SingularError::NotCuspidalEdge {
        u: uv[0],
        v: uv[1],
        class: PointClass::NondegeneratePeakOther,
    })?;
    Ok(NormalCurvature { kappa_nu: k, generic: k.abs() > 1e-9 })
}

/// Values of the intrinsic formula in an adapted chart.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Intrinsic {
    /// `(−F_v E_u + 2E F_uv − E E_vv) / (2 E^{3/2} λ_v)`.
    pub kappa_s: f64,
    /// Same with `E_v` in place of `E_vv`.
    pub with_e_v: f64,
    /// The `E_vv` form without the factor 1/2.
    pub without_half: f64,
}

/// Singular curvature from the first fundamental form along the u-axis.
pub fn singular_curvature_intrinsic(front: &Front, u: f64) -> Result<Intrinsic, SingularError> {
    let loc = front.local([u, 0.0], 3)?;
    let (fu, fv) = (loc.f(&[0]), loc.f(&[1]));
    let lv = loc.grad_lambda()[1];
    if loc.lambda().abs() > 1e-9 * lv.abs().max(1.0) {
        return Err(SingularError::ChartNotAdapted { u, reason: "the u-axis is not singular" });
    }
    if fv.norm() > 1e-9 * fu.norm().max(1.0) {
        return Err(SingularError::ChartNotAdapted { u, reason: "∂/∂v is not a null direction" });
    }
    let sp = Space::get(2, 3);
    let jet = front.map.jet(&[u, 0.0], 3).map_err(FrontError::from)?;
    let c = jet.components();
    let tu: Vec<_> = c.iter().map(|t| t.deriv(0)).collect();
    let tv: Vec<_> = c.iter().map(|t| t.deriv(1)).collect();
    let e = sp.dot(&tu, &tu);
    let f = sp.dot(&tu, &tv);
    let e0 = e.value();
    let num = |e2: f64| -f.partial(&[1]) * e.partial(&[0]) + 2.0 * e0 * f.partial(&[0, 1]) - e0 * e2;
    let den = e0.powf(1.5) * lv;
    Ok(Intrinsic {
        kappa_s: num(e.partial(&[1, 1])) / (2.0 * den),
        with_e_v: num(e.partial(&[1])) / (2.0 * den),
        without_half: num(e.partial(&[1, 1])) / den,
    })
}

/// Which side of the singular curve a half-space test refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Where λ > 0.
    Positive,
    /// Where λ < 0.
    Negative,
    /// The tail part of a swallowtail.
    Tail,
    /// The side of a swallowtail opposite the tail part.
    Head,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HalfSpaceSigns {
    pub sgn_delta: i8,
    pub sgn_0: i8,
    pub predicted_k_sign: i8,
    /// Parameter direction into the chosen side.
    pub direction: [f64; 2],
    pub class: PointClass,
}

/// Outward-normal sign and half-space sign at a generic cuspidal edge or swallowtail.
pub fn half_space_signs(front: &Front, uv: [f64; 2], side: Side) -> Result<HalfSpaceSigns, SingularError> {
    let g = geometry(front, uv, None)?;
    let loc = &g.local;
    let tol = Tolerances::default();
    let gen_tol = 1e-9 * g.df_norm.max(1.0);
    if g.null_det().abs() > tol.classify {
        let s = match side {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
            _ => return Err(SingularError::BadSide { side, class: PointClass::CuspidalEdge }),
        };
        let mut n = g.eta;
        if dot2(g.grad, n) * s < 0.0 {
            n = [-n[0], -n[1]];
        }
        let k_nu = g.kappa_nu().unwrap_or(0.0);
        if k_nu.abs() <= 1e-9 {
            return Err(SingularError::NonGeneric { u: uv[0], v: uv[1] });
        }
        let pairing = loc.d2f(n, n).dot(&loc.dnu(n));
        let sgn_delta = -sgn(pairing);
        let sgn_0 = sgn(k_nu);
        return Ok(HalfSpaceSigns {
            sgn_delta,
            sgn_0,
            predicted_k_sign: sgn_delta * sgn_0,
            direction: n,
            class: PointClass::CuspidalEdge,
        });
    }
    let m = [-g.eta[1], g.eta[0]];
    let second = loc.d2f(m, m).dot(&g.nu);
    if second.abs() <= gen_tol {
        return Err(SingularError::NonGeneric { u: uv[0], v: uv[1] });
    }
    let tail = tail_direction(&g).ok_or(SingularError::NonGeneric { u: uv[0], v: uv[1] })?;
    let n = match side {
        Side::Tail => tail,
        Side::Head => [-tail[0], -tail[1]],
        Side::Positive | Side::Negative => {
            let s = if side == Side::Positive { 1.0 } else { -1.0 };
            if dot2(g.grad, m) * s >= 0.0 {
                m
            } else {
                [-m[0], -m[1]]
            }
        }
    };
    let pairing = loc.d2f(g.eta, n).dot(&loc.dnu(g.eta));
    let sgn_delta = -sgn(pairing);
    let sgn_0 = sgn(second);
    Ok(HalfSpaceSigns {
        sgn_delta,
        sgn_0,
        predicted_k_sign: sgn_delta * sgn_0,
        direction: n,
        class: PointClass::Swallowtail,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignCheck {
    pub kappa_s: f64,
    /// `g(σ̈, γ̂″)` for a null curve σ.
    pub pairing: f64,
    pub agree: bool,
}

/// Compares the sign of κ_s with the side the null curves bend towards.
pub fn sign_meaning_check(front: &Front, uv: [f64; 2]) -> Result<SignCheck, SingularError> {
    let g = geometry(front, uv, None)?;
    let k = g.kappa_s().ok_or(SingularError::NotCuspidalEdge {
        u: uv[0],
        v: uv[1],
        class: PointClass::NondegeneratePeakOther,
    })?;
    if k.abs() < 1e-9 {
        return Err(SingularError::Inconclusive(k.abs()));
    }
    let t = g.dgamma / g.speed();
    let normal_part = g.ddgamma - t * g.ddgamma.dot(&t);
    let pairing = g.d2f_eta.dot(&normal_part);
    Ok(SignCheck { kappa_s: k, pairing, agree: sgn(pairing) == sgn(k) })
}

/// Half the number of sign changes of λ on a small circle around `uv`.
pub fn peak_arc_count(front: &Front, uv: [f64; 2], radius: Option<f64>) -> Result<usize, SingularError> {
    let r = radius.unwrap_or(1e-2 * front.scale());
    let n = 720;
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            front.lambda([uv[0] + r * th.cos(), uv[1] + r * th.sin()])
        })
        .collect::<Result<_, _>>()?;
    let count = (0..n).filter(|&k| (vals[k] > 0.0) != (vals[(k + 1) % n] > 0.0)).count();
    if count == 0 {
        return Err(SingularError::NoSignChange(r));
    }
    if count % 2 == 1 {
        return Err(SingularError::OddSignChanges { count, radius: r });
    }
    Ok(count / 2)
}

/// Writes samples of every curve as CSV.
pub fn write_csv<W: Write>(curves: &[SingularCurve], out: W) -> Result<(), SingularError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| SingularError::Export(e.to_string());
    w.write_record([
        "curve", "u", "v", "s", "class", "lambda", "lambda_u", "lambda_v", "eta_u", "eta_v", "kappa_s", "kappa_nu",
        "density",
    ])
    .map_err(err)?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for (c, curve) in curves.iter().enumerate() {
        for p in &curve.samples {
            w.write_record([
                c.to_string(),
                format!("{:e}", p.uv[0]),
                format!("{:e}", p.uv[1]),
                format!("{:e}", p.s),
                p.class.name().to_string(),
                format!("{:e}", p.lambda),
                format!("{:e}", p.grad_lambda[0]),
                format!("{:e}", p.grad_lambda[1]),
                format!("{:e}", p.null_dir[0]),
                format!("{:e}", p.null_dir[1]),
                opt(p.kappa_s),
                opt(p.kappa_nu),
                format!("{:e}", p.density),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| SingularError::Export(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::get;

    #[test]
    fn parabola_closed_form() {
        let f = get("cuspidal_parabola", &[("a", 2.0), ("b", 0.5)]).unwrap();
        for u in [-0.7, 0.0, 0.4] {
            let q: f64 = 1.0 + 16.0 * u * u;
            let want = 4.0 / (q.powf(1.5) * (1.0 + 0.25 * q).sqrt());
            let got = singular_curvature(&f, [u, 0.0], None).unwrap().kappa_s;
            assert!((got - want).abs() < 1e-12, "{u}: {got} vs {want}");
        }
    }

    #[test]
    fn swallowtail_curvature_values() {
        let f = get("standard_swallowtail", &[]).unwrap();
        for (t, want) in [(1.0, -0.0196418550329597), (0.5, -0.128925096600803), (0.05, -3.28803322869364)] {
            let got = singular_curvature(&f, [t, -6.0 * t * t], None).unwrap().kappa_s;
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{t}: {got}");
        }
    }

    #[test]
    fn intrinsic_needs_half() {
        let f = get("pseudosphere", &[]).unwrap().swap_chart();
        let r = singular_curvature_intrinsic(&f, 0.7).unwrap();
        assert!((r.kappa_s - 1.0).abs() < 1e-10);
        assert!((r.without_half - 2.0).abs() < 1e-10);
        assert!(r.with_e_v.abs() < 1e-10);
    }

    #[test]
    fn parabola_signs() {
        let f = get("cuspidal_parabola", &[]).unwrap();
        let up = half_space_signs(&f, [0.0, 0.0], Side::Positive).unwrap();
        assert_eq!((up.sgn_delta, up.sgn_0, up.predicted_k_sign), (1, -1, -1));
        assert!(f.curvature([0.0, 0.05]).unwrap().k.unwrap() < 0.0);
        let down = half_space_signs(&f, [0.0, 0.0], Side::Negative).unwrap();
        assert_eq!(down.predicted_k_sign, 1);
        assert!(sign_meaning_check(&f, [0.2, 0.0]).unwrap().agree);
    }

    #[test]
    fn swallowtail_tail_sign_matches_sampled_curvature() {
        for s in [1.0, -1.0] {
            let f = get("swallowtail_pm", &[("sign", s)]).unwrap();
            let hs = half_space_signs(&f, [0.0, 0.0], Side::Tail).unwrap();
            let p = [0.01 * hs.direction[0], 0.01 * hs.direction[1]];
            let k = f.curvature(p).unwrap().k.unwrap();
            assert_eq!(hs.predicted_k_sign, sgn(k));
        }
    }

    #[test]
    fn classification_and_arcs() {
        let s = get("standard_swallowtail", &[]).unwrap();
        assert_eq!(classify(&s, [0.0, 0.0]).unwrap().class, PointClass::Swallowtail);
        assert_eq!(classify(&s, [0.5, -1.5]).unwrap().class, PointClass::CuspidalEdge);
        assert!(matches!(classify(&s, [0.5, 0.5]), Err(SingularError::NotSingular { .. })));
        assert_eq!(peak_arc_count(&s, [0.0, 0.0], None).unwrap(), 1);
        let d = get("double_swallowtail", &[]).unwrap();
        assert_eq!(classify(&d, [0.0, 0.0]).unwrap().class, PointClass::Degenerate);
        assert_eq!(peak_arc_count(&d, [0.0, 0.0], None).unwrap(), 2);
    }

    #[test]
    fn traced_parabola_integral() {
        let f = get("cuspidal_parabola", &[]).unwrap();
        let tr = trace(&f, &TraceOptions::with_grid(32)).unwrap();
        assert_eq!(tr.curves.len(), 1);
        let k = integrate_kappa_s_curve(&f, &tr, 0).unwrap();
        assert!((k - 1.369_438_406_004_565_8).abs() < 1e-6, "{k}");
        for p in &tr.curves[0].samples {
            assert!(p.uv[1].abs() < 1e-8);
        }
    }

    #[test]
    fn traced_swallowtail_follows_parabola() {
        let f = get("standard_swallowtail", &[]).unwrap();
        let tr = trace(&f, &TraceOptions::default()).unwrap();
        assert_eq!(tr.curves.len(), 1);
        assert_eq!(tr.swallowtail_count(), 1);
        for p in &tr.curves[0].samples {
            assert!((p.uv[1] + 6.0 * p.uv[0] * p.uv[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_has_header() {
        let f = get("cuspidal_parabola", &[]).unwrap();
        let tr = trace(&f, &TraceOptions::with_grid(16)).unwrap();
        let mut buf = Vec::new();
        write_csv(&tr.curves, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("curve,u,v,s,class,lambda,lambda_u,lambda_v,eta_u,eta_v,kappa_s,kappa_nu,density"));
        assert_eq!(text.lines().count(), tr.curves[0].samples.len() + 1);
    }
}
