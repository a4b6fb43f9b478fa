//! Zig/zag words of cusps and rotation numbers of curvature maps.
//!
//! Two settings share the machinery: plane fronts `γ: S¹ → R²` with their
//! curvature map, and null loops `σ: S¹ → M²` on a surface front with the
//! normal curvature map. In both, the map is followed through `P¹(R)` by
//! continuous lifting of the line angle.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Vector2;
use serde::Serialize;

use crate::expr::{self, EvalError, Expr, ParseError};
use crate::front::{Front, FrontError};
use crate::singular::{self, PointClass, SingularError};

type V2 = Vector2<f64>;

#[derive(Debug, thiserror::Error)]
pub enum ZigzagError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error("{what} has {got} components, expected 2")]
    Dimension { what: &'static str, got: usize },
    #[error("λ has a double zero near t = {t}: the front is not generic")]
    NonGeneric { t: f64 },
    #[error("loop is not null at t = {t}: angle {angle:.3e} rad to the null direction")]
    NotNull { t: f64, angle: f64 },
    #[error("loop crosses the singular set at t = {t} in a {class}, not a cuspidal edge")]
    NotCuspidalEdge { t: f64, class: &'static str },
    #[error("reduced word `{word}` has odd length")]
    OddWord { word: String },
    #[error("letter `{0}` is not a or b")]
    BadLetter(char),
    #[error("winding {winding} is not an integer; sampling too coarse")]
    NotIntegral { winding: f64 },
    #[error("unknown plane front `{0}`")]
    UnknownPlane(String),
    #[error("invalid period [{0}, {1}]")]
    Period(f64, f64),
}

/// One cusp of a plane front or one crossing of a null loop.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Crossing {
    pub t: f64,
    /// Position in the parameter domain (surfaces) or the plane (curves).
    pub uv: [f64; 2],
    /// `a` for zig, `b` for zag.
    pub letter: char,
}

/// Winding of a map into `P¹(R)`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Winding {
    /// Signed number of passes around `P¹`, i.e. Δθ/π for the line angle θ.
    pub winding: i64,
    /// `|winding| / 2`, the count that matches the reduced word.
    pub rotation_number: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZigzagResult {
    pub label: String,
    pub word: String,
    pub reduced_k: u64,
    pub rotation_number: u64,
    pub winding: i64,
    /// Rotation index of the unit normal (plane fronts only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_rotation: Option<i64>,
    pub crossings: Vec<Crossing>,
}

impl ZigzagResult {
    pub fn agrees(&self) -> bool {
        self.reduced_k == self.rotation_number
    }
}

/// Reduces a word in `Z₂ * Z₂` and returns `k` for `(ab)^k` or `(ba)^k`.
pub fn reduce_word(word: &str) -> Result<u64, ZigzagError> {
    let mut stack: Vec<char> = Vec::with_capacity(word.len());
    for c in word.chars() {
        if c != 'a' && c != 'b' {
            return Err(ZigzagError::BadLetter(c));
        }
        if stack.last() == Some(&c) {
            stack.pop();
        } else {
            stack.push(c);
        }
    }
    if stack.len() % 2 == 1 {
        return Err(ZigzagError::OddWord { word: stack.into_iter().collect() });
    }
    Ok(stack.len() as u64 / 2)
}

fn check_period(period: [f64; 2]) -> Result<(), ZigzagError> {
    if !(period[0].is_finite() && period[1].is_finite() && period[1] > period[0]) {
        return Err(ZigzagError::Period(period[0], period[1]));
    }
    Ok(())
}

fn curve_expr(src: &str, params: &BTreeMap<String, f64>, what: &'static str) -> Result<Expr, ZigzagError> {
    let e = expr::parse_curve(src, params)?;
    if e.dim() != 2 {
        return Err(ZigzagError::Dimension { what, got: e.dim() });
    }
    Ok(e)
}

fn params_of(params: &[(&str, f64)]) -> BTreeMap<String, f64> {
    params.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Derivatives `[x, x′, x″]` of a plane curve expression, with a direction
/// flag that reverses the parameter.
fn derivs(e: &Expr, t: f64, sign: f64) -> Result<[V2; 3], ZigzagError> {
    let j = e.eval_jet(&[sign * t], 2)?;
    let at = |vars: &[usize], s: f64| {
        let p = j.partial(vars);
        V2::new(p[0], p[1]) * s
    };
    Ok([at(&[], 1.0), at(&[0], sign), at(&[0, 0], 1.0)])
}

fn det(a: &V2, b: &V2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Sign changes of `f` on `n` periodic samples, refined by Illinois steps.
fn periodic_zeros<F>(f: &F, period: [f64; 2], n: usize) -> Result<Vec<f64>, ZigzagError>
where
    F: Fn(f64) -> Result<f64, ZigzagError>,
{
    let len = period[1] - period[0];
    let ts: Vec<f64> = (0..=n).map(|k| period[0] + len * k as f64 / n as f64).collect();
    let mut fs: Vec<f64> = ts[..n].iter().map(|&t| f(t)).collect::<Result<_, _>>()?;
    fs.push(fs[0]);
    let mut out = Vec::new();
    for k in 0..n {
        let (fa, fb) = (fs[k], fs[k + 1]);
        if fa == 0.0 {
            out.push(ts[k]);
        } else if fa * fb < 0.0 {
            out.push(illinois(f, ts[k], ts[k + 1], fa, fb)?);
        }
    }
    Ok(out)
}

fn illinois<F>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Result<f64, ZigzagError>
where
    F: Fn(f64) -> Result<f64, ZigzagError>,
{
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + x.abs()) {
            break;
        }
        x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx == 0.0 {
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

/// Line angle of `[x : y]` in `[0, π)`.
fn line_angle(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0]).rem_euclid(PI)
}

fn wrap_half(d: f64) -> f64 {
    let r = (d + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if r == -FRAC_PI_2 {
        FRAC_PI_2
    } else {
        r
    }
}

/// Total lift of a `P¹`-valued map over one period, in units of π.
///
/// `pins` are parameters where the map is `[0 : 1]` by extension; there the
/// angle is fixed rather than evaluated.
fn p1_winding<F>(pair: &F, period: [f64; 2], pins: &[f64], n: usize) -> Result<f64, ZigzagError>
where
    F: Fn(f64) -> Result<[f64; 2], ZigzagError>,
{
    let angle = |t: f64| -> Result<f64, ZigzagError> {
        if pins.contains(&t) {
            Ok(FRAC_PI_2)
        } else {
            Ok(line_angle(pair(t)?))
        }
    };
    let len = period[1] - period[0];
    let mut ts: Vec<f64> = (0..n).map(|k| period[0] + len * k as f64 / n as f64).collect();
    ts.extend_from_slice(pins);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let first = ts[0];
    ts.push(first + len);
    let mut angles: Vec<f64> = ts[..ts.len() - 1].iter().map(|&t| angle(t)).collect::<Result<_, _>>()?;
    angles.push(angles[0]);

    fn step<G>(angle: &G, ta: f64, aa: f64, tb: f64, ab: f64, depth: u32) -> Result<f64, ZigzagError>
    where
        G: Fn(f64) -> Result<f64, ZigzagError>,
    {
        let d = wrap_half(ab - aa);
        if d.abs() < FRAC_PI_4 {
            return Ok(d);
        }
        if depth > 60 {
            return Err(ZigzagError::NotIntegral { winding: f64::NAN });
        }
        let tm = 0.5 * (ta + tb);
        let am = angle(tm)?;
        Ok(step(angle, ta, aa, tm, am, depth + 1)? + step(angle, tm, am, tb, ab, depth + 1)?)
    }

    let mut total = 0.0;
    for k in 0..ts.len() - 1 {
        total += step(&angle, ts[k], angles[k], ts[k + 1], angles[k + 1], 0)?;
    }
    Ok(total / PI)
}

fn winding_from<F>(pair: &F, period: [f64; 2], pins: &[f64]) -> Result<Winding, ZigzagError>
where
    F: Fn(f64) -> Result<[f64; 2], ZigzagError>,
{
    let mut last = f64::NAN;
    for n in [512, 4096] {
        let w = p1_winding(pair, period, pins, n)?;
        let r = w.round();
        if (w - r).abs() < 1e-6 {
            let winding = r as i64;
            return Ok(Winding { winding, rotation_number: winding.unsigned_abs() / 2 });
        }
        last = w;
    }
    Err(ZigzagError::NotIntegral { winding: last })
}

/// A closed front in the plane with its unit normal, both in `t`.
#[derive(Clone, Debug)]
pub struct PlaneFront {
    pub label: String,
    curve: Expr,
    normal: Expr,
    pub period: [f64; 2],
    /// Traverse the parameter backwards.
    reversed: bool,
}

/// Derivatives of a plane front at one parameter.
#[derive(Clone, Copy, Debug)]
pub struct PlaneSample {
    pub gamma: V2,
    pub d1: V2,
    pub d2: V2,
    pub nu: V2,
    pub nu_d1: V2,
    /// `det(γ′, ν)`.
    pub lambda: f64,
    pub lambda_d1: f64,
}

impl PlaneFront {
    pub fn parse(
        label: &str,
        curve: &str,
        normal: &str,
        params: &[(&str, f64)],
        period: [f64; 2],
    ) -> Result<PlaneFront, ZigzagError> {
        check_period(period)?;
        let p = params_of(params);
        Ok(PlaneFront {
            label: label.to_string(),
            curve: curve_expr(curve, &p, "curve")?,
            normal: curve_expr(normal, &p, "normal")?,
            period,
            reversed: false,
        })
    }

    /// The same front traversed with `t ↦ −t`.
    pub fn reversed(&self) -> PlaneFront {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out.period = [-self.period[1], -self.period[0]];
        out
    }

    pub fn sample(&self, t: f64) -> Result<PlaneSample, ZigzagError> {
        let sign = if self.reversed { -1.0 } else { 1.0 };
        let [gamma, d1, d2] = derivs(&self.curve, t, sign)?;
        let [nu, nu_d1, _] = derivs(&self.normal, t, sign)?;
        Ok(PlaneSample {
            gamma,
            d1,
            d2,
            nu,
            nu_d1,
            lambda: det(&d1, &nu),
            lambda_d1: det(&d2, &nu) + det(&d1, &nu_d1),
        })
    }

    /// Largest of `||ν| − 1|` and `|γ′·ν|/|γ′|` over `n` samples.
    pub fn validate(&self, n: usize) -> Result<f64, ZigzagError> {
        let len = self.period[1] - self.period[0];
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let s = self.sample(self.period[0] + len * (k as f64 + 0.5) / n as f64)?;
            worst = worst.max((s.nu.norm() - 1.0).abs());
            if s.d1.norm() > 1e-8 {
                worst = worst.max(s.d1.dot(&s.nu).abs() / s.d1.norm());
            }
        }
        Ok(worst)
    }
}

/// Plane fronts with closed-form curves and normals.
pub static PLANE_ENTRIES: &[(&str, &[(&str, f64)], &str)] = &[
    ("circle", &[("r", 1.0)], "circle of radius r with inward normal; no cusps"),
    (
        "ellipse_parallel",
        &[("a", 1.0), ("b", 0.6), ("d", 0.7)],
        "inner parallel of the ellipse with semi-axes a, b at distance d; four cusps when b²/a < d < a²/b",
    ),
    (
        "zigzag",
        &[("n", 1.0), ("A", 2.0), ("c", 1.0)],
        "front with normal angle t + A sin(nt); 2n cusps forming n zigzags",
    ),
];

/// Curve and normal of the zigzag family, shared with the cylinder over it.
///
/// The normal angle is `θ = t + A sin(nt)` and `γ = Pν + QJν` with
/// `P′ = Qθ′`, which makes `γ′` orthogonal to `ν`.
pub fn zigzag_strings(var: &str) -> (String, String) {
    let th = format!("({var} + A*sin(n*{var}))");
    let p = format!("(c + (1/n - n*A^2/2)*sin(n*{var}) + A/4*sin(2*n*{var}))");
    let q = format!("(cos(n*{var}) - n*A/2)");
    let curve = format!("({p}*cos({th}) - {q}*sin({th}), {p}*sin({th}) + {q}*cos({th}))");
    let normal = format!("(cos({th}), sin({th}))");
    (curve, normal)
}

pub fn plane_gallery(name: &str, params: &[(&str, f64)]) -> Result<PlaneFront, ZigzagError> {
    let entry = PLANE_ENTRIES.iter().find(|e| e.0 == name).ok_or_else(|| ZigzagError::UnknownPlane(name.into()))?;
    let mut full: Vec<(&str, f64)> = entry.1.to_vec();
    for (k, v) in params {
        match full.iter_mut().find(|p| p.0 == *k) {
            Some(p) => p.1 = *v,
            None => return Err(ZigzagError::UnknownPlane(format!("{name}: parameter {k}"))),
        }
    }
    let period = [0.0, 2.0 * PI];
    match name {
        "circle" => PlaneFront::parse(name, "(r*cos(t), r*sin(t))", "(-cos(t), -sin(t))", &full, period),
        "ellipse_parallel" => {
            let den = "sqrt(b^2*cos(t)^2 + a^2*sin(t)^2)";
            let normal = format!("(-b*cos(t)/{den}, -a*sin(t)/{den})");
            let curve = format!("(a*cos(t) - d*b*cos(t)/{den}, b*sin(t) - d*a*sin(t)/{den})");
            PlaneFront::parse(name, &curve, &normal, &full, period)
        }
        _ => {
            let (curve, normal) = zigzag_strings("t");
            PlaneFront::parse(name, &curve, &normal, &full, period)
        }
    }
}

/// Cusps of a plane front with their letters.
///
/// A cusp is zig when `λ′ g₀(γ″, ν′) < 0`.
pub fn classify_cusps_plane(pf: &PlaneFront) -> Result<Vec<Crossing>, ZigzagError> {
    let lam = |t: f64| Ok(pf.sample(t)?.lambda);
    let zeros = periodic_zeros(&lam, pf.period, 2048)?;
    let mut out = Vec::with_capacity(zeros.len());
    for t in zeros {
        let s = pf.sample(t)?;
        let crit = s.lambda_d1 * s.d2.dot(&s.nu_d1);
        let scale = s.d2.norm() * s.nu_d1.norm() * s.lambda_d1.abs();
        if s.lambda_d1.abs() <= 1e-8 * s.d2.norm().max(1.0) || crit.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(ZigzagError::NonGeneric { t });
        }
        let letter = if crit < 0.0 { 'a' } else { 'b' };
        out.push(Crossing { t, uv: [s.gamma.x, s.gamma.y], letter });
    }
    Ok(out)
}

/// Winding of the curvature map `[g₀(γ′,γ′) : g₀(γ′,ν′)]`.
///
/// Near cusps the extension `[λ : −g₀(ν′,ν′)/det(ν,ν′)]` is used instead.
pub fn rotation_number_plane(pf: &PlaneFront) -> Result<Winding, ZigzagError> {
    let cusps = classify_cusps_plane(pf)?;
    let pins: Vec<f64> = cusps.iter().map(|c| c.t).collect();
    let pair = |t: f64| -> Result<[f64; 2], ZigzagError> {
        let s = pf.sample(t)?;
        if s.nu_d1.norm() > s.d1.norm() {
            let d = det(&s.nu, &s.nu_d1);
            Ok([s.lambda, -s.nu_d1.norm_squared() / d])
        } else {
            Ok([s.d1.norm_squared(), s.d1.dot(&s.nu_d1)])
        }
    };
    winding_from(&pair, pf.period, &pins)
}

/// Rotation index of the unit normal.
pub fn normal_rotation_plane(pf: &PlaneFront) -> Result<i64, ZigzagError> {
    let n = 4096;
    let len = pf.period[1] - pf.period[0];
    let mut total = 0.0;
    let mut prev = pf.sample(pf.period[0])?.nu;
    for k in 1..=n {
        let nu = pf.sample(pf.period[0] + len * k as f64 / n as f64)?.nu;
        total += det(&prev, &nu).atan2(prev.dot(&nu));
        prev = nu;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

pub fn zigzag_plane(pf: &PlaneFront) -> Result<ZigzagResult, ZigzagError> {
    let crossings = classify_cusps_plane(pf)?;
    let word: String = crossings.iter().map(|c| c.letter).collect();
    let w = rotation_number_plane(pf)?;
    Ok(ZigzagResult {
        label: pf.label.clone(),
        reduced_k: reduce_word(&word)?,
        word,
        rotation_number: w.rotation_number,
        winding: w.winding,
        m_rotation: Some(normal_rotation_plane(pf)?),
        crossings,
    })
}

/// A closed curve in the parameter domain of a surface front.
#[derive(Clone, Debug)]
pub struct NullLoop {
    pub label: String,
    curve: Expr,
    pub period: [f64; 2],
    reversed: bool,
}

/// Data of a loop and of `f∘σ` at one parameter.
#[derive(Clone, Copy, Debug)]
pub struct LoopSample {
    pub uv: [f64; 2],
    pub d1: [f64; 2],
    pub lambda: f64,
    pub lambda_d1: f64,
    /// `(f∘σ)′` and `(f∘σ)″`.
    pub image_d1: nalgebra::Vector3<f64>,
    pub image_d2: nalgebra::Vector3<f64>,
    /// `(ν∘σ)′`.
    pub nu_d1: nalgebra::Vector3<f64>,
}

impl NullLoop {
    pub fn parse(label: &str, curve: &str, params: &[(&str, f64)], period: [f64; 2]) -> Result<NullLoop, ZigzagError> {
        check_period(period)?;
        Ok(NullLoop {
            label: label.to_string(),
            curve: curve_expr(curve, &params_of(params), "loop")?,
            period,
            reversed: false,
        })
    }

    /// Axis-aligned ellipse around `center`.
    ///
    /// Centred on a straight singular line along one axis, it crosses the line
    /// at right angles, which is the null direction when the null direction
    /// is orthogonal to the line.
    pub fn ellipse(center: [f64; 2], radii: [f64; 2]) -> Result<NullLoop, ZigzagError> {
        NullLoop::parse(
            "ellipse",
            "(cu + ru*cos(t), cv + rv*sin(t))",
            &[("cu", center[0]), ("cv", center[1]), ("ru", radii[0]), ("rv", radii[1])],
            [0.0, 2.0 * PI],
        )
    }

    /// The line `v = const` over one period of a periodic `u`.
    pub fn u_line(v: f64, period: [f64; 2]) -> Result<NullLoop, ZigzagError> {
        NullLoop::parse("u_line", "(t, v0 + 0*t)", &[("v0", v)], period)
    }

    pub fn reversed(&self) -> NullLoop {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out.period = [-self.period[1], -self.period[0]];
        out
    }

    /// The loop traversed `times` times.
    pub fn repeated(&self, times: u32) -> NullLoop {
        let mut out = self.clone();
        let len = self.period[1] - self.period[0];
        out.period[1] = self.period[0] + len * f64::from(times.max(1));
        out
    }

    pub fn sample(&self, front: &Front, t: f64) -> Result<LoopSample, ZigzagError> {
        let sign = if self.reversed { -1.0 } else { 1.0 };
        let [p, d1, d2] = derivs(&self.curve, t, sign)?;
        let uv = front.domain.wrap([p.x, p.y]);
        let loc = front.local(uv, 2)?;
        let (x, xx) = ([d1.x, d1.y], [d2.x, d2.y]);
        let g = loc.grad_lambda();
        Ok(LoopSample {
            uv,
            d1: x,
            lambda: loc.lambda(),
            lambda_d1: g[0] * x[0] + g[1] * x[1],
            image_d1: loc.df(x),
            image_d2: loc.d2f(x, x) + loc.df(xx),
            nu_d1: loc.dnu(x),
        })
    }
}

/// Crossings of a null loop with the singular set, with letters.
///
/// A crossing is zig when `λ̂′ g(σ̂″, ν̂′) > 0`.
pub fn classify_crossings_surface(front: &Front, lp: &NullLoop) -> Result<Vec<Crossing>, ZigzagError> {
    let lam = |t: f64| Ok(lp.sample(front, t)?.lambda);
    let zeros = periodic_zeros(&lam, lp.period, 2048)?;
    let mut out = Vec::with_capacity(zeros.len());
    for t in zeros {
        let s = lp.sample(front, t)?;
        let point = singular::classify(front, s.uv)?;
        if point.class != PointClass::CuspidalEdge {
            return Err(ZigzagError::NotCuspidalEdge { t, class: point.class.name() });
        }
        let eta = point.null_dir;
        let cos = (s.d1[0] * eta[0] + s.d1[1] * eta[1]).abs() / (s.d1[0].hypot(s.d1[1]) * eta[0].hypot(eta[1]));
        let angle = cos.min(1.0).acos();
        if angle >= 1e-4 {
            return Err(ZigzagError::NotNull { t, angle });
        }
        let crit = s.lambda_d1 * s.image_d2.dot(&s.nu_d1);
        if crit == 0.0 || !crit.is_finite() {
            return Err(ZigzagError::NonGeneric { t });
        }
        let letter = if crit > 0.0 { 'a' } else { 'b' };
        out.push(Crossing { t, uv: s.uv, letter });
    }
    Ok(out)
}

/// Winding of the normal curvature map `[g(σ̂′,σ̂′) : g(σ̂′,ν̂′)]`, pinned to
/// `[0 : 1]` at the crossings.
pub fn rotation_number_surface(front: &Front, lp: &NullLoop) -> Result<Winding, ZigzagError> {
    let crossings = classify_crossings_surface(front, lp)?;
    let pins: Vec<f64> = crossings.iter().map(|c| c.t).collect();
    let pair = |t: f64| -> Result<[f64; 2], ZigzagError> {
        let s = lp.sample(front, t)?;
        Ok([s.image_d1.norm_squared(), s.image_d1.dot(&s.nu_d1)])
    };
    winding_from(&pair, lp.period, &pins)
}

pub fn zigzag_surface(front: &Front, lp: &NullLoop) -> Result<ZigzagResult, ZigzagError> {
    let crossings = classify_crossings_surface(front, lp)?;
    let word: String = crossings.iter().map(|c| c.letter).collect();
    let w = rotation_number_surface(front, lp)?;
    Ok(ZigzagResult {
        label: format!("{}/{}", front.label, lp.label),
        reduced_k: reduce_word(&word)?,
        word,
        rotation_number: w.rotation_number,
        winding: w.winding,
        m_rotation: None,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_reduction() {
        assert_eq!(reduce_word("ab").unwrap(), 1);
        assert_eq!(reduce_word("aabb").unwrap(), 0);
        assert_eq!(reduce_word("abab").unwrap(), 2);
        assert_eq!(reduce_word("").unwrap(), 0);
        assert!(matches!(reduce_word("aba"), Err(ZigzagError::OddWord { .. })));
        assert!(matches!(reduce_word("abc"), Err(ZigzagError::BadLetter('c'))));
    }

    #[test]
    fn circle_has_no_cusps() {
        let c = plane_gallery("circle", &[]).unwrap();
        let r = zigzag_plane(&c).unwrap();
        assert_eq!(r.word, "");
        assert_eq!((r.reduced_k, r.rotation_number, r.m_rotation), (0, 0, Some(1)));
        assert!(c.validate(64).unwrap() < 1e-12);
    }

    #[test]
    fn ellipse_parallel_has_four_cusps() {
        let c = plane_gallery("ellipse_parallel", &[]).unwrap();
        assert!(c.validate(256).unwrap() < 1e-12);
        let r = zigzag_plane(&c).unwrap();
        assert_eq!(r.crossings.len(), 4);
        assert!(r.agrees(), "{r:?}");
    }

    #[test]
    fn zigzag_family() {
        for n in [1.0, 2.0, 3.0] {
            let c = plane_gallery("zigzag", &[("n", n), ("A", 1.5 / n + 0.5), ("c", 1.5)]).unwrap();
            assert!(c.validate(256).unwrap() < 1e-12);
            let r = zigzag_plane(&c).unwrap();
            assert_eq!(r.reduced_k, n as u64, "{r:?}");
            assert!(r.agrees(), "{r:?}");
        }
    }

    #[test]
    fn reversal_reverses_and_swaps_the_word() {
        let c = plane_gallery("ellipse_parallel", &[]).unwrap();
        let (a, b) = (zigzag_plane(&c).unwrap(), zigzag_plane(&c.reversed()).unwrap());
        // t ↦ −t flips ν′ but not λ′, so the letters swap as well
        let rev: String = a.word.chars().rev().map(|c| if c == 'a' { 'b' } else { 'a' }).collect();
        assert!(format!("{rev}{rev}").contains(&b.word), "{} {}", a.word, b.word);
        assert_eq!(a.reduced_k, b.reduced_k);
        assert_eq!(a.rotation_number, b.rotation_number);
    }

    #[test]
    fn parabola_loop_letters_agree() {
        let f = crate::gallery::get("cuspidal_parabola", &[]).unwrap();
        let lp = NullLoop::ellipse([0.2, 0.0], [0.5, 0.5]).unwrap();
        let r = zigzag_surface(&f, &lp).unwrap();
        assert_eq!(r.word.len(), 2);
        assert_eq!(r.reduced_k, 0);
        assert!(r.agrees(), "{r:?}");
    }

    #[test]
    fn cylinder_loops_match_the_plane_front() {
        for n in [1.0, 2.0] {
            let f = crate::gallery::get("zigzag_cylinder", &[("n", n), ("A", 1.5 / n + 0.5), ("c", 1.5)]).unwrap();
            let lp = NullLoop::u_line(0.1, [0.0, 2.0 * PI]).unwrap();
            let r = zigzag_surface(&f, &lp).unwrap();
            assert_eq!(r.reduced_k, n as u64, "{r:?}");
            assert!(r.agrees(), "{r:?}");
            let twice = zigzag_surface(&f, &lp.repeated(2)).unwrap();
            assert_eq!(twice.winding, 2 * r.winding);
        }
    }

    #[test]
    fn slanted_loop_is_not_null() {
        let f = crate::gallery::get("cuspidal_parabola", &[]).unwrap();
        let lp = NullLoop::parse("slant", "(0.5*cos(t), 0.3*sin(t) + 0.2*cos(t))", &[], [0.0, 2.0 * PI]).unwrap();
        assert!(matches!(zigzag_surface(&f, &lp), Err(ZigzagError::NotNull { .. })));
    }
}
