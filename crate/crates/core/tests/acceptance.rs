//! End-to-end acceptance checks, one printed line per criterion.
//!
//! Two criteria quote targets that no correct evaluation reaches: the limit of
//! `|K·v|` on the cuspidal parabola and the sign of one sectional curvature of
//! the cuspidal graph. For those the literal check is still run and printed as
//! FAIL, next to the check against an independently derived value.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::time::Instant;

use frontlab::front::Front;
use frontlab::gallery::get;
use frontlab::gb::{euler_report, ReportOptions};
use frontlab::hyper::{boundedness_scan, sectional_curvature, HyperFront, HyperTolerances, Sectional};
use frontlab::singular::{
    half_space_signs, limiting_normal_curvature, singular_curvature, singular_curvature_intrinsic, trace, PointClass,
    Side, TraceOptions,
};
use frontlab::zigzag::{plane_gallery, zigzag_plane, zigzag_surface, NullLoop, ZigzagResult};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Computed values, written with `{:?}` so reruns can be compared byte for byte.
#[derive(Default)]
struct Log(String);

impl Log {
    fn put(&mut self, key: &str, value: impl std::fmt::Debug) {
        writeln!(self.0, "{key} = {value:?}").unwrap();
    }
}

struct Outcome {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
    /// Result of the corrected check when the literal target is unreachable.
    corrected: Option<(bool, String)>,
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn k_at(f: &Front, uv: [f64; 2]) -> f64 {
    f.curvature(uv).unwrap().k.expect("regular point")
}

fn h_at(f: &Front, uv: [f64; 2]) -> f64 {
    f.curvature(uv).unwrap().h.expect("regular point")
}

fn parabola_kappa(a: f64, b: f64, u: f64) -> f64 {
    let q = 1.0 + 4.0 * a * a * u * u;
    2.0 * a / (q.powf(1.5) * (1.0 + b * b * q).sqrt())
}

fn swallowtail_kappa(t: f64) -> f64 {
    let t2 = t * t;
    -(1.0 + t2 + t2 * t2).sqrt() / (6.0 * t.abs() * (1.0 + 4.0 * t2 + t2 * t2).powf(1.5))
}

const PARABOLA_PARAMS: [(f64, f64); 5] = [(1.0, 1.0), (-1.0, 1.0), (2.0, 0.5), (-1.0, 0.0), (1.0, 0.0)];
const PARABOLA_U: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

fn closed_form_parabola(log: &mut Log) -> (bool, String) {
    let mut worst = 0.0f64;
    for (a, b) in PARABOLA_PARAMS {
        let f = get("cuspidal_parabola", &[("a", a), ("b", b)]).unwrap();
        for u in PARABOLA_U {
            let got = singular_curvature(&f, [u, 0.0], None).unwrap().kappa_s;
            log.put(&format!("kappa_s a={a} b={b} u={u}"), got);
            worst = worst.max(rel(got, parabola_kappa(a, b, u)));
        }
    }
    (worst < 1e-8, format!("25 samples, max rel err {worst:.2e} (tol 1e-8)"))
}

fn closed_form_swallowtail(log: &mut Log) -> (bool, String) {
    let f = get("standard_swallowtail", &[]).unwrap();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let t = 0.05 + 0.95 * i as f64 / 19.0;
        let got = singular_curvature(&f, [t, -6.0 * t * t], None).unwrap().kappa_s;
        log.put(&format!("kappa_s t={t}"), got);
        worst = worst.max(rel(got, swallowtail_kappa(t)));
    }
    let mut scaled = 0.0;
    for t in [1e-2, 1e-3, 1e-4] {
        scaled = singular_curvature(&f, [t, -6.0 * t * t], None).unwrap().kappa_s * t;
        log.put(&format!("kappa_s*t t={t}"), scaled);
    }
    let limit_err = rel(scaled, -1.0 / 6.0);
    (
        worst < 1e-6 && limit_err < 1e-3,
        format!("20 samples, max rel err {worst:.2e} (tol 1e-6); κ_s·t = {scaled:.6} at t = 1e-4, rel err {limit_err:.1e} vs −1/6 (tol 1e-3)"),
    )
}

fn invariance(log: &mut Log) -> (bool, String) {
    let fronts = [
        get("cuspidal_parabola", &[]).unwrap(),
        get("cuspidal_parabola", &[("a", -2.0), ("b", 0.5)]).unwrap(),
        get("standard_cuspidal_edge", &[]).unwrap(),
        get("standard_swallowtail", &[]).unwrap(),
        get("swallowtail_pm", &[("sign", 1.0)]).unwrap(),
        get("swallowtail_pm", &[("sign", -1.0)]).unwrap(),
        get("pseudosphere", &[]).unwrap(),
        get("ellipsoid_parallel", &[]).unwrap(),
    ];
    let mut pool = Vec::new();
    for (i, f) in fronts.iter().enumerate() {
        let tr = trace(f, &TraceOptions::with_grid(64)).unwrap();
        for c in &tr.curves {
            for p in &c.samples {
                if p.class == PointClass::CuspidalEdge && !p.near_peak && !p.kappa_s_divergent {
                    pool.push((i, p.uv, p.singular_dir));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20_070_401);
    let picks: Vec<_> = pool.choose_multiple(&mut rng, 50).cloned().collect();
    let mut worst = 0.0f64;
    for (i, uv, dir) in &picks {
        let f = &fronts[*i];
        let base = singular_curvature(f, *uv, Some(*dir)).unwrap().kappa_s;
        let reversed = singular_curvature(f, *uv, Some([-dir[0], -dir[1]])).unwrap().kappa_s;
        let flipped = singular_curvature(&f.negate_normal(), *uv, Some(*dir)).unwrap().kappa_s;
        let swapped = singular_curvature(&f.swap_chart(), [uv[1], uv[0]], Some([dir[1], dir[0]])).unwrap().kappa_s;
        log.put(&format!("{} {uv:?}", f.label), [base, reversed, flipped, swapped]);
        // κ_s vanishes identically on the standard cuspidal edge
        let scale = base.abs().max(1e-3);
        for k in [reversed, flipped, swapped] {
            worst = worst.max((k - base).abs() / scale);
        }
    }
    (
        picks.len() == 50 && worst <= 1e-9,
        format!("{} samples from {} fronts, max rel change {worst:.2e} (tol 1e-9)", picks.len(), fronts.len()),
    )
}

fn intrinsic(log: &mut Log) -> (bool, String) {
    let mut worst = 0.0f64;
    let (mut with_half, mut with_e_v, mut without_half) = (true, true, true);
    for (a, b) in PARABOLA_PARAMS {
        let f = get("cuspidal_parabola", &[("a", a), ("b", b)]).unwrap();
        for u in PARABOLA_U {
            let ext = singular_curvature(&f, [u, 0.0], None).unwrap().kappa_s;
            let r = singular_curvature_intrinsic(&f, u).unwrap();
            log.put(&format!("intrinsic a={a} b={b} u={u}"), [r.kappa_s, r.with_e_v, r.without_half]);
            worst = worst.max(rel(r.kappa_s, ext));
            with_e_v &= rel(r.with_e_v, ext) < 1e-8;
            without_half &= rel(r.without_half, ext) < 1e-8;
        }
    }
    // E_vv ≠ 0 in the swapped pseudosphere chart, where κ_s = 1
    let p = get("pseudosphere", &[]).unwrap().swap_chart();
    for u in [0.3, 1.7, 4.0] {
        let ext = singular_curvature(&p, [u, 0.0], None).unwrap().kappa_s;
        let r = singular_curvature_intrinsic(&p, u).unwrap();
        log.put(&format!("intrinsic pseudosphere u={u}"), [ext, r.kappa_s, r.with_e_v, r.without_half]);
        with_half &= rel(r.kappa_s, ext) < 1e-8;
        with_e_v &= rel(r.with_e_v, ext) < 1e-8;
        without_half &= rel(r.without_half, ext) < 1e-8;
    }
    let matching: Vec<&str> = [(with_half, "E_vv term with 1/2"), (with_e_v, "E_v term"), (without_half, "E_vv term without 1/2")]
        .iter()
        .filter(|m| m.0)
        .map(|m| m.1)
        .collect();
    (
        worst < 1e-8 && with_half,
        format!("25 parabola samples, max rel err {worst:.2e} (tol 1e-8); matching variant: {}", matching.join(", ")),
    )
}

fn bounded_k(log: &mut Log) -> (bool, (bool, String), String) {
    let mut kappa_nu_sup = 0.0f64;
    let mut k_max = 0.0f64;
    let mut finite = true;
    for a in [1.0, -1.0, 2.0] {
        let f = get("cuspidal_parabola", &[("a", a), ("b", 0.0)]).unwrap();
        for i in 0..=20 {
            let u = -1.0 + 0.1 * i as f64;
            let kn = limiting_normal_curvature(&f, [u, 0.0]).unwrap().kappa_nu;
            kappa_nu_sup = kappa_nu_sup.max(kn.abs());
            for v in [1e-2, -1e-2, 1e-3, -1e-3, 1e-4, -1e-4, 1e-5, -1e-5] {
                let k = k_at(&f, [u, v]);
                finite &= k.is_finite();
                k_max = k_max.max(k.abs());
            }
        }
    }
    log.put("b=0 kappa_nu sup", kappa_nu_sup);
    log.put("b=0 |K| max", k_max);
    let bounded = kappa_nu_sup < 1e-9 && finite && k_max < 10.0;

    let f = get("cuspidal_parabola", &[]).unwrap();
    let mut kv = 0.0;
    for v in [1e-2, 1e-3, 1e-4, 1e-5] {
        kv = (k_at(&f, [0.0, v]) * v).abs();
        log.put(&format!("|K v| v={v}"), kv);
    }
    let sign_change = k_at(&f, [0.0, 1e-2]) * k_at(&f, [0.0, -1e-2]) < 0.0;
    // the printed formula −12(ab+3av)/(vδ²), δ² = 4+(1+4a²u²)(2b+3v)², gives 12ab/8 at u = 0
    let printed = 12.0 / 8.0;
    // from K = −12a(2b+3v)/(vδ⁴): 6|ab|/((1+b²)(4+4b²)) at a = b = 1
    let derived = 0.375;
    let literal_err = rel(kv, printed);
    let derived_err = rel(kv, derived);
    let detail = format!(
        "b=0: sup|κ_ν| {kappa_nu_sup:.1e} (tol 1e-9), max|K| {k_max:.3} finite; a=b=1: |K·v| → {kv:.6}, \
         printed-formula target {printed} rel err {literal_err:.2e} (tol 1e-3); K changes sign: {sign_change}"
    );
    let corrected = (
        bounded && sign_change && derived_err < 1e-3,
        format!("|K·v| vs derived limit {derived}: rel err {derived_err:.2e} (tol 1e-3)"),
    );
    (bounded && sign_change && literal_err < 1e-3, corrected, detail)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn sign_rules(log: &mut Log) -> (bool, String) {
    let mut ok = true;
    let mut cases = Vec::new();
    for a in [1.0, -1.0] {
        for b in [1.0, -1.0] {
            let f = get("cuspidal_parabola", &[("a", a), ("b", b)]).unwrap();
            let mut hs = half_space_signs(&f, [0.0, 0.0], Side::Positive).unwrap();
            if hs.direction[1] < 0.0 {
                hs = half_space_signs(&f, [0.0, 0.0], Side::Negative).unwrap();
            }
            let k = sign(k_at(&f, [0.0, 0.05]));
            log.put(&format!("parabola a={a} b={b}"), (hs.sgn_0, hs.sgn_delta, k));
            ok &= hs.predicted_k_sign == k && k == -sign(a * b);
            cases.push(format!("{}{}", hs.predicted_k_sign, k));
        }
    }
    for s in [1.0, -1.0] {
        let f = get("swallowtail_pm", &[("sign", s)]).unwrap();
        let hs = half_space_signs(&f, [0.0, 0.0], Side::Tail).unwrap();
        ok &= hs.predicted_k_sign == sign(s);
        for eps in [0.002, 0.005, 0.01, 0.02, 0.04] {
            let k = k_at(&f, [eps * hs.direction[0], eps * hs.direction[1]]);
            log.put(&format!("swallowtail sign={s} eps={eps}"), k);
            ok &= sign(k) == sign(s);
        }
    }
    (ok, "4 parabola cases predicted = sampled = −sgn(ab); f± tail-side K sign ±1 at 5 probes each".into())
}

fn pseudosphere(log: &mut Log) -> (bool, String) {
    let f = get("pseudosphere", &[]).unwrap();
    let r = euler_report(&f, &ReportOptions::with_grid(512)).unwrap();
    let kappa = r.int_kappa_s_ds.unwrap();
    let identity = r.int_k_da + 2.0 * kappa;
    let ends: f64 = f.metadata.ends.iter().map(|e| e.growth).sum();
    let chi = f.metadata.euler_char.unwrap() as f64;
    let residual = identity - TAU * (chi + ends);
    log.put("pseudosphere", (r.int_k_da, kappa, r.area, r.residual_unsigned));
    (
        residual.abs() < 1e-3 && rel(kappa, TAU) < 1e-4 && r.applicable,
        format!("∫K dA + 2∫κ_s ds = {identity:.2e} (χ = {chi}, Σa = {ends}, tol 1e-3); ∫κ_s ds/2π = {:.8} (tol 1e-4); area/π = {:.6}", kappa / TAU, r.area / PI),
    )
}

fn ellipsoid_parallel(log: &mut Log) -> (bool, String) {
    let f = get("ellipsoid_parallel", &[]).unwrap();
    let r = euler_report(&f, &ReportOptions::with_grid(512)).unwrap();
    let (ru, rs) = (r.residual_unsigned.unwrap(), r.residual_signed);
    let deg = r.deg_nu.unwrap();
    let lhs = 2 * deg;
    let rhs = r.chi_mplus - r.chi_mminus + r.s_plus as i64 - r.s_minus as i64;
    log.put("ellipsoid_parallel", (ru, rs, deg, r.chi_mplus, r.chi_mminus, r.s_plus, r.s_minus));
    let tol = 1e-2 * 4.0 * PI;
    (
        ru.abs() < tol && rs.abs() < tol && lhs == rhs && r.degree_identity == Some(0),
        format!(
            "residuals {ru:.2e} / {rs:.2e} (tol {tol:.3}); 2·deg = {lhs}, χ₊−χ₋+S₊−S₋ = {}−{}+{}−{} = {rhs}",
            r.chi_mplus, r.chi_mminus, r.s_plus, r.s_minus
        ),
    )
}

fn zigzag_family(n: f64) -> [(&'static str, f64); 3] {
    [("n", n), ("A", 1.5 / n + 0.5), ("c", 1.5)]
}

fn zigzag(log: &mut Log) -> (bool, String) {
    let mut results: Vec<ZigzagResult> = Vec::new();
    results.push(zigzag_plane(&plane_gallery("circle", &[]).unwrap()).unwrap());
    results.push(zigzag_plane(&plane_gallery("ellipse_parallel", &[]).unwrap()).unwrap());
    for n in [1.0, 2.0, 3.0] {
        results.push(zigzag_plane(&plane_gallery("zigzag", &zigzag_family(n)).unwrap()).unwrap());
    }
    let parabola = get("cuspidal_parabola", &[]).unwrap();
    results.push(zigzag_surface(&parabola, &NullLoop::ellipse([0.2, 0.0], [0.5, 0.5]).unwrap()).unwrap());
    let pseudo = get("pseudosphere", &[]).unwrap();
    results.push(zigzag_surface(&pseudo, &NullLoop::ellipse([0.0, PI], [0.5, 0.5]).unwrap()).unwrap());
    for n in [1.0, 2.0, 3.0] {
        let f = get("zigzag_cylinder", &zigzag_family(n)).unwrap();
        results.push(zigzag_surface(&f, &NullLoop::u_line(0.1, [0.0, TAU]).unwrap()).unwrap());
    }
    let mut ok = true;
    let mut ks = Vec::new();
    for r in &results {
        log.put(&r.label, (&r.word, r.reduced_k, r.rotation_number, r.winding));
        ok &= r.agrees();
        ks.push(format!("{}={}", r.reduced_k, r.rotation_number));
    }
    (ok, format!("5 plane fronts, 5 null loops; k = rotation number: {}", ks.join(" ")))
}

fn hypersurface(log: &mut Log) -> (bool, (bool, String), String) {
    let rows = boundedness_scan(8, &HyperTolerances::default()).unwrap();
    let mut dichotomy = rows.len() == 27;
    for r in &rows {
        log.put(&format!("scan a={} b={} c={}", r.a, r.b, r.c), r.second_form_sup);
        let bounded = r.a * r.c == 0.0 && r.b * r.c == 0.0;
        dichotomy &= (r.second_form_sup < 1e-8) == bounded;
    }
    let hf = HyperFront::cuspidal_graph(1.0, 0.0, 1.0);
    let Sectional::Value(k) = sectional_curvature(&hf, [0.1, 0.0, 0.0], 0, 1).unwrap() else {
        panic!("regular point");
    };
    log.put("K(du, dv) at (0.1, 0, 0)", k);
    let printed = 3.1981;
    // Gauss equation with the second fundamental form of the same example: (0.6·(−4.6)/9.29)/0.0929
    let derived = -3.197_994_069_806_65;
    let literal_err = rel(k, printed);
    let detail = format!(
        "27 cases, sup < 1e-8 iff ac = bc = 0: {dichotomy}; K(∂u∧∂v) = {k:.6}, printed {printed} rel err {literal_err:.2e} (tol 1e-4)"
    );
    let corrected = (
        dichotomy && rel(k, derived) < 1e-4 && rel(k.abs(), printed) < 1e-4,
        format!("K vs derived {derived:.6}: rel err {:.1e}; |K| vs printed magnitude: rel err {:.1e} (tol 1e-4)", rel(k, derived), rel(k.abs(), printed)),
    );
    (dichotomy && literal_err < 1e-4, corrected, detail)
}

/// Points at parameter distance `d` on both sides of a singular curve.
fn offsets(at: [f64; 2], normal: [f64; 2], d: f64) -> [[f64; 2]; 2] {
    let len = normal[0].hypot(normal[1]);
    let n = [normal[0] / len, normal[1] / len];
    [[at[0] + d * n[0], at[1] + d * n[1]], [at[0] - d * n[0], at[1] - d * n[1]]]
}

fn mean_curvature(log: &mut Log) -> (bool, String) {
    let parabola = get("cuspidal_parabola", &[]).unwrap();
    let swallowtail = get("standard_swallowtail", &[]).unwrap();
    // |H|·d tends to a constant that decays along the swallowtail's singular
    // curve (about 0.105 at t = 0.2, 0.056 at t = 0.5), so the 1e3 bound is
    // probed near the peak and the 1/d rate everywhere
    let mut probes: Vec<(&Front, String, [f64; 2], [f64; 2], bool)> = Vec::new();
    for u in [-0.5, 0.0, 0.5] {
        probes.push((&parabola, format!("parabola u={u}"), [u, 0.0], [0.0, 1.0], true));
    }
    for t in [-1.0f64, -0.5, -0.15, -0.1, -0.05, 0.05, 0.1, 0.15, 0.5, 1.0] {
        probes.push((&swallowtail, format!("swallowtail t={t}"), [t, -6.0 * t * t], [12.0 * t, 1.0], t.abs() <= 0.15));
    }
    let mut min_h = f64::INFINITY;
    let mut rate = (f64::INFINITY, 0.0f64);
    let mut bounded = 0;
    for (f, name, at, normal, bound) in &probes {
        let near = offsets(*at, *normal, 1e-4);
        let nearer = offsets(*at, *normal, 1e-5);
        for side in 0..2 {
            let (h4, h5) = (h_at(f, near[side]), h_at(f, nearer[side]));
            log.put(&format!("H {name} side={side}"), (h4, h5));
            let r = h5 / h4;
            rate = (rate.0.min(r), rate.1.max(r));
            if *bound {
                min_h = min_h.min(h4.abs());
                bounded += 1;
            }
        }
    }
    let ok = min_h >= 1e3 && rate.0 > 9.9 && rate.1 < 10.1;
    (
        ok,
        format!(
            "min |H| at distance 1e-4 over {bounded} probes (parabola, swallowtail |t| ≤ 0.15): {min_h:.1} (bound 1e3); \
             H(1e-5)/H(1e-4) ∈ [{:.4}, {:.4}] over {} probes incl. swallowtail |t| = 0.5, 1 (tol 10 ± 0.1)",
            rate.0,
            rate.1,
            2 * probes.len()
        ),
    )
}

type Check = fn(&mut Log) -> (bool, String);

const PLAIN: [(u8, &str, Check, f64); 9] = [
    (1, "closed-form κ_s, cuspidal parabola", closed_form_parabola, 1.0),
    (2, "closed-form κ_s, swallowtail", closed_form_swallowtail, 1.0),
    (3, "κ_s invariance", invariance, f64::INFINITY),
    (4, "intrinsic formula", intrinsic, f64::INFINITY),
    (6, "sign rules", sign_rules, f64::INFINITY),
    (7, "unsigned Gauss–Bonnet, pseudosphere", pseudosphere, 30.0),
    (8, "compact Gauss–Bonnet, ellipsoid parallel", ellipsoid_parallel, 120.0),
    (9, "zigzag number = rotation number", zigzag, 5.0),
    (11, "mean curvature divergence", mean_curvature, f64::INFINITY),
];

fn run_all() -> (Vec<Outcome>, String) {
    let mut log = Log::default();
    let mut out = Vec::new();
    for (id, title, check, budget) in PLAIN {
        writeln!(log.0, "[{id}]").unwrap();
        let start = Instant::now();
        let (pass, detail) = check(&mut log);
        let seconds = start.elapsed().as_secs_f64();
        let pass = pass && seconds < budget;
        let detail = if budget.is_finite() { format!("{detail}; {seconds:.2} s (budget {budget} s)") } else { detail };
        out.push(Outcome { id, title, pass, detail, seconds, corrected: None });
    }
    type Conflicted = fn(&mut Log) -> (bool, (bool, String), String);
    let conflicted: [(u8, &str, Conflicted); 2] =
        [(5, "bounded-K dichotomy", bounded_k), (10, "hypersurface boundedness and K(∂u∧∂v)", hypersurface)];
    for (id, title, check) in conflicted {
        writeln!(log.0, "[{id}]").unwrap();
        let start = Instant::now();
        let (pass, corrected, detail) = check(&mut log);
        out.push(Outcome { id, title, pass, detail, seconds: start.elapsed().as_secs_f64(), corrected: Some(corrected) });
    }
    out.sort_by_key(|o| o.id);
    (out, log.0)
}

#[test]
fn acceptance() {
    let (first, report) = run_all();
    let (_, again) = run_all();
    let deterministic = report == again;
    println!();

    let mut failures = Vec::new();
    for o in &first {
        println!("criterion {:>2} {} | {}: {} [{:.2} s]", o.id, if o.pass { "PASS" } else { "FAIL" }, o.title, o.detail, o.seconds);
        match &o.corrected {
            None => {
                if !o.pass {
                    failures.push(format!("criterion {} failed", o.id));
                }
            }
            Some((ok, why)) => {
                println!("             corrected {} | {why}", if *ok { "PASS" } else { "FAIL" });
                if o.pass {
                    failures.push(format!("criterion {} now meets its printed target; revisit the recorded analysis", o.id));
                }
                if !ok {
                    failures.push(format!("criterion {} corrected check failed", o.id));
                }
            }
        }
    }
    println!(
        "criterion 12 {} | determinism: two runs of criteria 1-11 give {} logs ({} bytes)",
        if deterministic { "PASS" } else { "FAIL" },
        if deterministic { "identical" } else { "different" },
        report.len()
    );
    if !deterministic {
        failures.push("criterion 12 failed".into());
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
