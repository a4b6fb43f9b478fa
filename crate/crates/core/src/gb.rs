//! Global Gauss–Bonnet checks for compact and complete fronts.

use std::collections::HashSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::front::{Cap, Domain, End, Front, FrontError, V3};
use crate::singular::{self, pairwise_sum, PointClass, SingularError, Trace, TraceOptions};

#[derive(Debug, thiserror::Error)]
pub enum GbError {
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error("quadrature did not reach tolerance {tol:e}: error estimate {error:e}")]
    NotConverged { tol: f64, error: f64 },
    #[error("grid too coarse: a sign region of λ covers a single cell near ({u:.4}, {v:.4}); refine the grid")]
    GridTooCoarse { u: f64, v: f64 },
    #[error("the front is not compact (no periodic identification or cap on every side)")]
    NonCompact,
    #[error("degree {value} is not close to an integer (distance {distance:e})")]
    NonInteger { value: f64, distance: f64 },
    #[error("curve {0} contains degenerate singular points; κ_s ds is not integrable there")]
    DegenerateCurve(usize),
    #[error("cannot decide the sign of the swallowtail at ({u:.6}, {v:.6})")]
    AmbiguousSwallowtail { u: f64, v: f64 },
    #[error("λ changes sign along the rim of cap {0:?}")]
    CapSign(Cap),
}

/// What to integrate over the parameter domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Density {
    /// `K dA = sgn λ · det(ν_u, ν_v, ν) du dv`.
    KdA,
    /// `K dÂ = det(ν_u, ν_v, ν) du dv`.
    KdAhat,
    /// `dA = |λ| du dv`.
    Area,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadOptions {
    /// Quadrature nodes per axis; panels hold 16 × 16 nodes.
    pub grid: usize,
    pub tol: f64,
    /// Smallest panel side relative to the domain scale.
    pub min_width: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { grid: 256, tol: 1e-6, min_width: 1e-3 }
    }
}

const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_7, 0.149_595_988_816_576_7),
    (0.755_404_408_355_003, 0.124_628_971_255_533_9),
    (0.865_631_202_387_831_8, 0.095_158_511_682_492_78),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_1),
];

/// Nodes and weights of the 16-point rule on `[a, b]`.
fn gl16(a: f64, b: f64) -> [(f64, f64); 16] {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out = [(0.0, 0.0); 16];
    for (k, &(x, w)) in GL16.iter().enumerate() {
        out[2 * k] = (m - h * x, h * w);
        out[2 * k + 1] = (m + h * x, h * w);
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// `(λ, det(ν_u, ν_v, ν))` at a point.
fn sample(front: &Front, uv: [f64; 2]) -> Result<(f64, f64), FrontError> {
    let loc = front.local(uv, 1)?;
    let nu = loc.nu(&[]);
    Ok((loc.lambda(), loc.nu(&[0]).cross(&loc.nu(&[1])).dot(&nu)))
}

fn weight(d: Density, lambda: f64, det: f64) -> f64 {
    match d {
        Density::KdA => {
            if lambda < 0.0 {
                -det
            } else {
                det
            }
        }
        Density::KdAhat => det,
        Density::Area => lambda.abs(),
    }
}

#[derive(Clone, Copy)]
struct Panel {
    u: [f64; 2],
    v: [f64; 2],
}

impl Panel {
    fn area(&self) -> f64 {
        (self.u[1] - self.u[0]) * (self.v[1] - self.v[0])
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        (self.u[0]..=self.u[1]).contains(&p[0]) && (self.v[0]..=self.v[1]).contains(&p[1])
    }

    fn children(&self) -> [Panel; 4] {
        let um = 0.5 * (self.u[0] + self.u[1]);
        let vm = 0.5 * (self.v[0] + self.v[1]);
        [
            Panel { u: [self.u[0], um], v: [self.v[0], vm] },
            Panel { u: [um, self.u[1]], v: [self.v[0], vm] },
            Panel { u: [self.u[0], um], v: [vm, self.v[1]] },
            Panel { u: [um, self.u[1]], v: [vm, self.v[1]] },
        ]
    }
}

struct Integrator<'a> {
    front: &'a Front,
    density: Density,
    opts: QuadOptions,
    domain_area: f64,
    min_width: f64,
}

struct PanelResult {
    value: f64,
    error: f64,
    panels: usize,
    converged: bool,
}

impl Integrator<'_> {
    /// Tensor rule; also reports whether λ changes sign on the nodes.
    fn tensor(&self, p: &Panel) -> Result<(f64, bool), FrontError> {
        let (un, vn) = (gl16(p.u[0], p.u[1]), gl16(p.v[0], p.v[1]));
        let mut rows = [0.0; 16];
        let (mut pos, mut neg) = (false, false);
        for (j, &(v, wv)) in vn.iter().enumerate() {
            let mut row = [0.0; 16];
            for (i, &(u, wu)) in un.iter().enumerate() {
                let (l, d) = sample(self.front, [u, v])?;
                pos |= l > 0.0;
                neg |= l < 0.0;
                row[i] = wu * weight(self.density, l, d);
            }
            rows[j] = wv * row.iter().sum::<f64>();
        }
        if self.density != Density::KdAhat {
            for (u, v) in [(p.u[0], p.v[0]), (p.u[1], p.v[0]), (p.u[0], p.v[1]), (p.u[1], p.v[1])] {
                let l = self.front.lambda([u, v])?;
                pos |= l > 0.0;
                neg |= l < 0.0;
            }
        }
        Ok((rows.iter().sum(), pos && neg))
    }

    /// Splits every line of the tensor rule at the zeros of λ.
    ///
    /// Lines run along the axis the singular curve crosses most steeply at
    /// the centre and where it meets the rim, so a tangency of the curve with
    /// the lines does not sit at the end of an outer piece. The outer rule is
    /// split where the curve leaves through the ends of the lines, since the
    /// line integral has a kink there.
    fn line_split(&self, p: &Panel) -> Result<(f64, Vec<[f64; 2]>), FrontError> {
        let (wu, wv) = (p.u[1] - p.u[0], p.v[1] - p.v[0]);
        let mut probes = vec![[0.5 * (p.u[0] + p.u[1]), 0.5 * (p.v[0] + p.v[1])]];
        for v in p.v {
            probes.extend(zeros_of(&|u: f64| self.front.lambda([u, v]), p.u)?.into_iter().map(|u| [u, v]));
        }
        for u in p.u {
            probes.extend(zeros_of(&|v: f64| self.front.lambda([u, v]), p.v)?.into_iter().map(|v| [u, v]));
        }
        // worst transversality of the u-lines and of the v-lines
        let (mut tu, mut tv) = (f64::INFINITY, f64::INFINITY);
        for uv in probes {
            let g = self.front.local(uv, 2)?.grad_lambda();
            let (gu, gv) = ((g[0] * wu).abs(), (g[1] * wv).abs());
            let n = gu.hypot(gv);
            if n > 0.0 {
                tu = tu.min(gu / n);
                tv = tv.min(gv / n);
            }
        }
        let along_u = tu >= tv;
        let (along, across) = if along_u { (p.u, p.v) } else { (p.v, p.u) };
        let point = |x: f64, y: f64| if along_u { [x, y] } else { [y, x] };
        let mut outer = vec![across[0]];
        for x in along {
            outer.extend(zeros_of(&|y: f64| self.front.lambda(point(x, y)), across)?);
        }
        outer.push(across[1]);
        outer.sort_by(f64::total_cmp);
        let mut acc = Vec::new();
        let mut zeros = Vec::new();
        for piece in outer.windows(2) {
            if piece[1] <= piece[0] {
                continue;
            }
            for (y, wy) in gl16(piece[0], piece[1]) {
                let lam = |x: f64| self.front.lambda(point(x, y));
                let mut cuts = vec![along[0]];
                for x in zeros_of(&lam, along)? {
                    cuts.push(x);
                    zeros.push(point(x, y));
                }
                cuts.push(along[1]);
                let mut line = 0.0;
                for w in cuts.windows(2) {
                    if w[1] <= w[0] {
                        continue;
                    }
                    // λ keeps its sign on each piece
                    let s = lam(0.5 * (w[0] + w[1]))?;
                    for (x, wx) in gl16(w[0], w[1]) {
                        let (l, d) = sample(self.front, point(x, y))?;
                        let l = if self.density == Density::Area { l } else { s };
                        line += wx * weight(self.density, l, d);
                    }
                }
                acc.push(wy * line);
            }
        }
        Ok((pairwise_sum(&acc), zeros))
    }

    fn panel(&self, p: Panel) -> Result<PanelResult, FrontError> {
        let (q, mixed) = self.tensor(&p)?;
        let budget = self.opts.tol * p.area() / self.domain_area;
        if !mixed {
            return Ok(PanelResult { value: q, error: 0.0, panels: 1, converged: true });
        }
        let (q, zeros) = self.line_split(&p)?;
        self.refine(p, q, &zeros, budget, 0)
    }

    fn refine(&self, p: Panel, coarse: f64, zeros: &[[f64; 2]], budget: f64, depth: usize) -> Result<PanelResult, FrontError> {
        let kids = p.children();
        let mut parts = Vec::with_capacity(4);
        for k in kids {
            let (q, mut mixed) = self.tensor(&k)?;
            // the curve may slip between the nodes of a child
            mixed |= zeros.iter().any(|z| k.contains(*z));
            parts.push((k, if mixed { Some(self.line_split(&k)?) } else { None }, q));
        }
        let fine: f64 = parts.iter().map(|(_, s, q)| s.as_ref().map_or(*q, |s| s.0)).sum();
        let diff = (fine - coarse).abs();
        let width = (p.u[1] - p.u[0]).min(p.v[1] - p.v[0]);
        if diff <= budget || 0.5 * width < self.min_width || depth > 40 {
            return Ok(PanelResult { value: fine, error: diff, panels: 4, converged: diff <= budget });
        }
        let mut out = PanelResult { value: 0.0, error: 0.0, panels: 0, converged: true };
        for (k, split, q) in parts {
            let r = match split {
                Some((s, z)) => self.refine(k, s, &z, 0.5 * budget, depth + 1)?,
                None => PanelResult { value: q, error: 0.0, panels: 1, converged: true },
            };
            out.value += r.value;
            out.error += r.error;
            out.panels += r.panels;
            out.converged &= r.converged;
        }
        Ok(out)
    }
}

/// Sign changes of `f` on a 12-interval sampling of `[a, b]`, refined.
fn zeros_of<F>(f: &F, [a, b]: [f64; 2]) -> Result<Vec<f64>, FrontError>
where
    F: Fn(f64) -> Result<f64, FrontError>,
{
    let n = 12;
    let xs: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for k in 0..n {
        if (fs[k] > 0.0) != (fs[k + 1] > 0.0) {
            out.push(root(f, xs[k], xs[k + 1], fs[k], fs[k + 1])?);
        }
    }
    Ok(out)
}

/// Illinois root of a bracketed sign change.
fn root<F>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64, FrontError>
where
    F: Fn(f64) -> Result<f64, FrontError>,
{
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx == 0.0 || (b - a) <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
        if (fx > 0.0) == (fb > 0.0) {
            b = x;
            fb = fx;
            fa *= 0.5;
        } else {
            a = x;
            fa = fx;
            fb *= 0.5;
        }
    }
    Ok(x)
}

fn panels_of(domain: &Domain, grid: usize) -> Vec<Panel> {
    let n = (grid / 16).max(4);
    let (du, dv) = (domain.width() / n as f64, domain.height() / n as f64);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let u0 = domain.u[0] + i as f64 * du;
            let v0 = domain.v[0] + j as f64 * dv;
            let u1 = if i + 1 == n { domain.u[1] } else { u0 + du };
            let v1 = if j + 1 == n { domain.v[1] } else { v0 + dv };
            out.push(Panel { u: [u0, u1], v: [v0, v1] });
        }
    }
    out
}

/// Integrates a density over the parameter domain, caps excluded.
pub fn integrate(front: &Front, density: Density, opts: &QuadOptions) -> Result<Quadrature, GbError> {
    let dom = front.domain;
    let it = Integrator {
        front,
        density,
        opts: *opts,
        domain_area: dom.width() * dom.height(),
        min_width: opts.min_width * dom.scale(),
    };
    let parts: Vec<Result<PanelResult, FrontError>> =
        panels_of(&dom, opts.grid).into_par_iter().map(|p| it.panel(p)).collect();
    let mut vals = Vec::with_capacity(parts.len());
    let (mut error, mut panels, mut converged) = (0.0, 0, true);
    for r in parts {
        let r = r?;
        vals.push(r.value);
        error += r.error;
        panels += r.panels;
        converged &= r.converged;
    }
    let q = Quadrature { value: pairwise_sum(&vals), error, panels };
    if !converged && error > 100.0 * opts.tol {
        return Err(GbError::NotConverged { tol: opts.tol, error });
    }
    Ok(q)
}

/// Plain midpoint rule on an `n × n` grid, for cross-checking.
pub fn integrate_midpoint(front: &Front, density: Density, n: usize) -> Result<f64, GbError> {
    let dom = front.domain;
    let cell = dom.width() * dom.height() / (n * n) as f64;
    let vals: Vec<Result<f64, FrontError>> = dom
        .grid(n)
        .into_par_iter()
        .map(|p| sample(front, p).map(|(l, d)| weight(density, l, d) * cell))
        .collect();
    let vals: Result<Vec<f64>, FrontError> = vals.into_iter().collect();
    Ok(pairwise_sum(&vals?))
}

pub fn integrate_k_da(front: &Front, opts: &QuadOptions) -> Result<Quadrature, GbError> {
    with_caps(front, Density::KdA, opts)
}

pub fn integrate_k_dahat(front: &Front, opts: &QuadOptions) -> Result<Quadrature, GbError> {
    with_caps(front, Density::KdAhat, opts)
}

fn with_caps(front: &Front, density: Density, opts: &QuadOptions) -> Result<Quadrature, GbError> {
    let mut q = integrate(front, density, opts)?;
    for &cap in &front.metadata.caps {
        let (omega, sign) = cap_solid_angle(front, cap)?;
        q.value += match density {
            Density::KdA => f64::from(sign) * omega,
            Density::KdAhat => omega,
            Density::Area => 0.0,
        };
    }
    Ok(q)
}

fn cap_rim(front: &Front, cap: Cap, n: usize) -> Vec<[f64; 2]> {
    let dom = front.domain;
    (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            match cap {
                Cap::UMin => [dom.u[0], dom.v[0] + t * dom.height()],
                Cap::UMax => [dom.u[1], dom.v[0] + t * dom.height()],
                Cap::VMin => [dom.u[0] + t * dom.width(), dom.v[0]],
                Cap::VMax => [dom.u[0] + t * dom.width(), dom.v[1]],
            }
        })
        .collect()
}

/// Signed area swept by the Gauss map over a cap, and the sign of λ on its rim.
///
/// The cap is filled by the geodesic cone from the mean rim normal; this is
/// exact to third order in the cap radius.
pub fn cap_solid_angle(front: &Front, cap: Cap) -> Result<(f64, i8), GbError> {
    let rim = cap_rim(front, cap, 2048);
    let mut normals = Vec::with_capacity(rim.len());
    let (mut pos, mut neg) = (false, false);
    for &p in &rim {
        let loc = front.local(p, 1)?;
        normals.push(loc.nu(&[]));
        let l = front.lambda(p)?;
        pos |= l > 0.0;
        neg |= l < 0.0;
    }
    if pos && neg {
        return Err(GbError::CapSign(cap));
    }
    let c: V3 = normals.iter().sum::<V3>().normalize();
    let n = normals.len();
    let mut parts = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (normals[k], normals[(k + 1) % n]);
        let num = c.dot(&a.cross(&b));
        let den = 1.0 + c.dot(&a) + a.dot(&b) + b.dot(&c);
        parts.push(2.0 * num.atan2(den));
    }
    let omega = pairwise_sum(&parts);
    let orient = match cap {
        Cap::UMin | Cap::VMax => 1.0,
        Cap::UMax | Cap::VMin => -1.0,
    };
    Ok((orient * omega, if neg { -1 } else { 1 }))
}

/// Whether every non-periodic side is closed off by a cap.
pub fn is_compact(front: &Front) -> bool {
    let d = front.domain;
    let caps = &front.metadata.caps;
    (d.periodic_u || (caps.contains(&Cap::UMin) && caps.contains(&Cap::UMax)))
        && (d.periodic_v || (caps.contains(&Cap::VMin) && caps.contains(&Cap::VMax)))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct EulerCharacteristics {
    pub chi_m: i64,
    pub chi_plus: i64,
    pub chi_minus: i64,
    /// χ of the whole cell complex (equals `chi_m` unless metadata overrides it).
    pub chi_complex: i64,
}

/// χ(M²), χ(M₊) and χ(M₋) from the sign-binarized cell complex.
pub fn euler_characteristics(front: &Front, grid: usize) -> Result<EulerCharacteristics, GbError> {
    let dom = front.domain;
    let n = grid.max(8);
    let (du, dv) = (dom.width() / n as f64, dom.height() / n as f64);
    let centers: Vec<[f64; 2]> = (0..n * n)
        .map(|k| [dom.u[0] + ((k % n) as f64 + 0.5) * du, dom.v[0] + ((k / n) as f64 + 0.5) * dv])
        .collect();
    let lam: Vec<Result<f64, FrontError>> = centers.par_iter().map(|&p| front.lambda(p)).collect();
    let signs: Vec<bool> = lam.into_iter().map(|l| l.map(|x| x >= 0.0)).collect::<Result<_, _>>()?;

    // isolated single-cell regions mean the grid cannot resolve the sign pattern
    let at = |i: isize, j: isize| -> Option<bool> {
        let (i, j) = (wrap_index(i, n, dom.periodic_u)?, wrap_index(j, n, dom.periodic_v)?);
        Some(signs[j * n + i])
    };
    for j in 0..n as isize {
        for i in 0..n as isize {
            let s = signs[j as usize * n + i as usize];
            let nbrs: Vec<bool> = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                .iter()
                .filter_map(|&(a, b)| at(a, b))
                .collect();
            if !nbrs.is_empty() && nbrs.iter().all(|&t| t != s) {
                return Err(GbError::GridTooCoarse { u: centers[j as usize * n + i as usize][0], v: centers[j as usize * n + i as usize][1] });
            }
        }
    }

    let nu_v = if dom.periodic_u { n } else { n + 1 };
    let nv_v = if dom.periodic_v { n } else { n + 1 };
    let vid = |i: usize, j: usize| -> usize {
        let i = if dom.periodic_u { i % n } else { i };
        let j = if dom.periodic_v { j % n } else { j };
        j * nu_v + i
    };
    let mut faces: Vec<(Vec<usize>, bool)> = Vec::with_capacity(n * n + 4 * n);
    for j in 0..n {
        for i in 0..n {
            faces.push((vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)], signs[j * n + i]));
        }
    }
    let mut next = nu_v * nv_v;
    for &cap in &front.metadata.caps {
        let (_, s) = cap_solid_angle(front, cap)?;
        let pole = next;
        next += 1;
        let ring: Vec<usize> = match cap {
            Cap::UMin => (0..nv_v).map(|j| vid(0, j)).collect(),
            Cap::UMax => (0..nv_v).map(|j| vid(n, j)).collect(),
            Cap::VMin => (0..nu_v).map(|i| vid(i, 0)).collect(),
            Cap::VMax => (0..nu_v).map(|i| vid(i, n)).collect(),
        };
        let closed = matches!(cap, Cap::UMin | Cap::UMax) && dom.periodic_v
            || matches!(cap, Cap::VMin | Cap::VMax) && dom.periodic_u;
        let m = ring.len();
        let segs = if closed { m } else { m - 1 };
        for k in 0..segs {
            faces.push((vec![pole, ring[k], ring[(k + 1) % m]], s > 0));
        }
    }
    let chi_of = |filter: &dyn Fn(bool) -> bool| -> i64 {
        let mut verts = HashSet::new();
        let mut edges = HashSet::new();
        let mut f = 0i64;
        for (vs, s) in &faces {
            if !filter(*s) {
                continue;
            }
            f += 1;
            for k in 0..vs.len() {
                let (a, b) = (vs[k], vs[(k + 1) % vs.len()]);
                verts.insert(a);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        verts.len() as i64 - edges.len() as i64 + f
    };
    let chi_plus = chi_of(&|s| s);
    let chi_minus = chi_of(&|s| !s);
    let chi_complex = chi_of(&|_| true);
    Ok(EulerCharacteristics {
        chi_m: front.metadata.euler_char.unwrap_or(chi_complex),
        chi_plus,
        chi_minus,
        chi_complex,
    })
}

fn wrap_index(i: isize, n: usize, periodic: bool) -> Option<usize> {
    if periodic {
        Some(i.rem_euclid(n as isize) as usize)
    } else if i < 0 || i >= n as isize {
        None
    } else {
        Some(i as usize)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Degree {
    pub degree: i64,
    pub value: f64,
    pub distance: f64,
}

/// Degree of the Gauss map, `(1/4π) ∫ K dÂ` rounded.
pub fn degree_of_gauss_map(front: &Front, opts: &QuadOptions) -> Result<Degree, GbError> {
    if !is_compact(front) {
        return Err(GbError::NonCompact);
    }
    let q = integrate_k_dahat(front, opts)?;
    degree_from(q.value)
}

fn degree_from(total: f64) -> Result<Degree, GbError> {
    let value = total / (4.0 * PI);
    let degree = value.round();
    let distance = (value - degree).abs();
    if distance >= 0.05 {
        return Err(GbError::NonInteger { value, distance });
    }
    Ok(Degree { degree: degree as i64, value, distance })
}

/// `∫_Σ κ_s ds` over all traced curves.
pub fn integrate_kappa_s(front: &Front, trace: &Trace) -> Result<f64, GbError> {
    let mut parts = Vec::with_capacity(trace.curves.len());
    for (i, c) in trace.curves.iter().enumerate() {
        if c.has_degenerate() {
            return Err(GbError::DegenerateCurve(i));
        }
        parts.push(singular::integrate_kappa_s_curve(front, trace, i)?);
    }
    Ok(pairwise_sum(&parts))
}

/// Counts of positive and negative swallowtails.
pub fn swallowtail_signs(trace: &Trace) -> Result<(usize, usize), GbError> {
    let (mut plus, mut minus) = (0, 0);
    for p in trace.curves.iter().flat_map(|c| c.swallowtails()) {
        match p.swallowtail_sign {
            Some(1) => plus += 1,
            Some(_) => minus += 1,
            None => return Err(GbError::AmbiguousSwallowtail { u: p.uv[0], v: p.uv[1] }),
        }
    }
    Ok((plus, minus))
}

#[derive(Clone, Debug, Serialize)]
pub struct EndTerm {
    pub label: String,
    pub growth: f64,
    pub side: i8,
}

impl From<&End> for EndTerm {
    fn from(e: &End) -> Self {
        EndTerm { label: e.label.clone(), growth: e.growth, side: e.side }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LlrCheck {
    /// Number of connected components of the singular set.
    pub components: usize,
    pub swallowtails: usize,
    pub degree: i64,
    pub genus: i64,
    pub zigzag: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportOptions {
    pub quad: QuadOptions,
    pub trace: TraceOptions,
    /// Cells per axis for the Euler characteristic complex.
    pub euler_grid: usize,
    /// Zigzag number of the front, when known from user loops.
    pub zigzag: Option<u64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            quad: QuadOptions::default(),
            trace: TraceOptions::with_grid(128),
            euler_grid: 256,
            zigzag: None,
        }
    }
}

impl ReportOptions {
    pub fn with_grid(grid: usize) -> Self {
        ReportOptions {
            quad: QuadOptions { grid, ..QuadOptions::default() },
            trace: TraceOptions::with_grid(grid.clamp(16, 256)),
            euler_grid: grid,
            zigzag: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussBonnetReport {
    pub label: String,
    pub grid: usize,
    pub quad_tol: f64,
    pub int_k_da: f64,
    pub int_k_da_error: f64,
    pub int_k_dahat: f64,
    pub int_k_dahat_error: f64,
    /// Area of the parameter domain measured by the first fundamental form.
    pub area: f64,
    pub int_kappa_s_ds: Option<f64>,
    pub chi_m: i64,
    pub chi_mplus: i64,
    pub chi_mminus: i64,
    pub alpha_terms: f64,
    pub deg_nu: Option<i64>,
    pub deg_value: f64,
    pub s_plus: usize,
    pub s_minus: usize,
    pub singular_components: usize,
    pub ends: Vec<EndTerm>,
    pub compact: bool,
    pub residual_unsigned: Option<f64>,
    pub residual_signed: f64,
    /// `2 deg − (χ₊ − χ₋ + S₊ − S₋)` for compact fronts.
    pub degree_identity: Option<i64>,
    pub llr: Option<LlrCheck>,
    pub applicable: bool,
    pub inapplicable_reason: Option<String>,
    pub cone_angle: Option<f64>,
    pub warnings: Vec<String>,
}

/// Assembles every term of both Gauss–Bonnet identities.
pub fn euler_report(front: &Front, opts: &ReportOptions) -> Result<GaussBonnetReport, GbError> {
    let trace = singular::trace(front, &opts.trace)?;
    report_with_trace(front, &trace, opts)
}

pub fn report_with_trace(front: &Front, trace: &Trace, opts: &ReportOptions) -> Result<GaussBonnetReport, GbError> {
    let compact = is_compact(front);
    let k_da = integrate_k_da(front, &opts.quad)?;
    let k_dahat = integrate_k_dahat(front, &opts.quad)?;
    let area = integrate(front, Density::Area, &opts.quad)?.value;
    let chi = euler_characteristics(front, opts.euler_grid)?;
    let mut warnings = trace.warnings.clone();

    let mut reason = None;
    if !trace.degenerate.is_empty() {
        reason = Some(format!("{} degenerate singular point(s)", trace.degenerate.len()));
    }
    for (i, c) in trace.curves.iter().enumerate() {
        if reason.is_some() {
            break;
        }
        if c.has_degenerate() {
            reason = Some(format!("curve {i} contains degenerate singular points"));
        } else if c.longest_peak_run() >= 3 {
            reason = Some(format!("curve {i} has non-isolated peaks (no cuspidal edges)"));
        } else if c.start == singular::CurveEnd::Failure || c.end == singular::CurveEnd::Failure {
            reason = Some(format!("curve {i} could not be traced completely"));
        }
    }
    if reason.is_none() && !compact && front.metadata.ends.is_empty() {
        reason = Some("domain is neither compact nor described by end metadata".into());
    }
    let kappa = match integrate_kappa_s(front, trace) {
        Ok(k) => Some(k),
        Err(GbError::DegenerateCurve(_)) => None,
        Err(e) => return Err(e),
    };
    let (s_plus, s_minus) = match swallowtail_signs(trace) {
        Ok(s) => s,
        Err(e) => {
            warnings.push(e.to_string());
            reason.get_or_insert_with(|| e.to_string());
            (0, 0)
        }
    };
    let other_peaks = trace
        .curves
        .iter()
        .flat_map(|c| c.samples.iter())
        .filter(|p| p.class == PointClass::NondegeneratePeakOther)
        .count();
    if other_peaks > 0 && reason.is_none() {
        warnings.push(format!("{other_peaks} peak(s) other than swallowtails contribute no angle term"));
    }
    let alpha_terms = 2.0 * PI * (s_plus as f64 - s_minus as f64);
    let ends: Vec<EndTerm> = front.metadata.ends.iter().map(EndTerm::from).collect();
    let growth: f64 = ends.iter().map(|e| e.growth).sum();
    let signed_growth: f64 = ends.iter().map(|e| f64::from(e.side) * e.growth).sum();
    let two_pi = 2.0 * PI;
    let residual_unsigned =
        kappa.map(|k| k_da.value + 2.0 * k + two_pi * growth - two_pi * chi.chi_m as f64);
    let residual_signed = k_dahat.value - alpha_terms + two_pi * signed_growth
        - two_pi * (chi.chi_plus - chi.chi_minus) as f64;

    let deg_value = k_dahat.value / (4.0 * PI);
    let (deg_nu, degree_identity, llr) = if compact {
        match degree_from(k_dahat.value) {
            Ok(d) => {
                let ident = 2 * d.degree - (chi.chi_plus - chi.chi_minus + s_plus as i64 - s_minus as i64);
                let genus = (2 - chi.chi_m) / 2;
                let components = trace.curves.len();
                let swallowtails = s_plus + s_minus;
                let k = opts.zigzag.unwrap_or(0);
                let lhs = components as f64 + swallowtails as f64 / 2.0;
                let rhs = d.degree as f64 + 1.0 - genus as f64 + 2.0 * k as f64;
                // the inequality concerns fronts with singular points
                let llr = (components > 0).then_some(LlrCheck {
                    components,
                    swallowtails,
                    degree: d.degree,
                    genus,
                    zigzag: k,
                    lhs,
                    rhs,
                    satisfied: lhs >= rhs,
                });
                (Some(d.degree), Some(ident), llr)
            }
            Err(e) => {
                warnings.push(e.to_string());
                (None, None, None)
            }
        }
    } else {
        (None, None, None)
    };

    Ok(GaussBonnetReport {
        label: front.label.clone(),
        grid: opts.quad.grid,
        quad_tol: opts.quad.tol,
        int_k_da: k_da.value,
        int_k_da_error: k_da.error,
        int_k_dahat: k_dahat.value,
        int_k_dahat_error: k_dahat.error,
        area,
        int_kappa_s_ds: kappa,
        chi_m: chi.chi_m,
        chi_mplus: chi.chi_plus,
        chi_mminus: chi.chi_minus,
        alpha_terms,
        deg_nu,
        deg_value,
        s_plus,
        s_minus,
        singular_components: trace.curves.len(),
        ends,
        compact,
        residual_unsigned,
        residual_signed,
        degree_identity,
        llr,
        applicable: reason.is_none(),
        inapplicable_reason: reason,
        cone_angle: front.metadata.cone_angle,
        warnings,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::get;

    #[test]
    fn roots_of_a_sampled_line() {
        let f = |x: f64| Ok((x - 0.3) * (x + 0.55));
        let z = zeros_of(&f, [-1.0, 1.0]).unwrap();
        assert_eq!(z.len(), 2);
        assert!((z[0] + 0.55).abs() < 1e-14 && (z[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn degree_rounding() {
        assert_eq!(degree_from(4.0 * PI * 1.01).unwrap().degree, 1);
        assert!(matches!(degree_from(2.0 * PI), Err(GbError::NonInteger { .. })));
    }

    #[test]
    fn sphere_total_curvature() {
        let f = get("sphere", &[]).unwrap();
        let r = euler_report(&f, &ReportOptions::with_grid(64)).unwrap();
        assert!((r.int_k_da - 4.0 * PI).abs() < 1e-8, "{}", r.int_k_da);
        assert_eq!((r.chi_m, r.chi_mplus, r.chi_mminus), (2, 2, 0));
        assert_eq!(r.deg_nu, Some(1));
        assert!(r.llr.is_none());
        assert!(r.residual_unsigned.unwrap().abs() < 1e-8);
    }

    #[test]
    fn pseudosphere_unsigned_identity() {
        let f = get("pseudosphere", &[]).unwrap();
        let r = euler_report(&f, &ReportOptions::with_grid(128)).unwrap();
        assert!(r.applicable);
        assert!(r.residual_unsigned.unwrap().abs() < 1e-3);
        assert!((r.int_kappa_s_ds.unwrap() - 2.0 * PI).abs() < 1e-6);
        assert!((r.area - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn cone_is_inapplicable() {
        let f = get("cone", &[]).unwrap();
        let r = euler_report(&f, &ReportOptions::with_grid(64)).unwrap();
        assert!(!r.applicable);
        assert!((r.cone_angle.unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn midpoint_rule_agrees_with_panels() {
        let f = get("ellipsoid_parallel", &[]).unwrap();
        let gl = integrate(&f, Density::Area, &QuadOptions { grid: 128, ..Default::default() }).unwrap().value;
        let mid = integrate_midpoint(&f, Density::Area, 400).unwrap();
        assert!((gl - mid).abs() < 1e-3 * gl, "{gl} {mid}");
    }

    #[test]
    fn signed_curvature_needs_compactness() {
        let f = get("cuspidal_parabola", &[]).unwrap();
        assert!(matches!(degree_of_gauss_map(&f, &QuadOptions::default()), Err(GbError::NonCompact)));
    }
}

