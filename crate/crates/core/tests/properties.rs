use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use frontlab::expr::{parse, Vars};
use frontlab::front::{Description, Front};
use frontlab::gallery::{get, ENTRIES};
use frontlab::gb::{euler_report, ReportOptions};
use frontlab::hyper::{principal_curvatures, singular_samples, singular_submanifold_curvature, HyperFront, HyperTolerances};
use frontlab::jet::finite_difference_jet;
use frontlab::singular::{singular_curvature, trace, TraceOptions};
use frontlab::zigzag::{plane_gallery, zigzag_plane, zigzag_strings, zigzag_surface, NullLoop, PlaneFront};
use proptest::prelude::*;

fn defaults() -> Vec<Front> {
    ENTRIES.iter().map(|e| get(e.name, &[]).unwrap()).collect()
}

/// A point of the domain from unit-square coordinates, kept off the boundary.
fn at(f: &Front, s: f64, t: f64) -> [f64; 2] {
    let d = f.domain;
    let lerp = |r: [f64; 2], x: f64| r[0] + (r[1] - r[0]) * (0.02 + 0.96 * x);
    [lerp(d.u, s), lerp(d.v, t)]
}

fn close(got: f64, want: f64, rel: f64, abs: f64) -> bool {
    let d = (got - want).abs();
    d <= rel * want.abs() || d <= abs
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// K and H from central differences of `f` and `ν`.
fn curvature_fd(f: &Front, p: [f64; 2]) -> (f64, f64) {
    let h = 1e-6;
    let d = |src: &frontlab::front::Source, i: usize| {
        let (mut a, mut b) = (p, p);
        a[i] += h;
        b[i] -= h;
        let s = sub(&src.eval(&a).unwrap(), &src.eval(&b).unwrap());
        [s[0] / (2.0 * h), s[1] / (2.0 * h), s[2] / (2.0 * h)]
    };
    let (fu, fv, nu_u, nu_v) = (d(&f.map, 0), d(&f.map, 1), d(&f.normal, 0), d(&f.normal, 1));
    let (e, ff, g) = (dot(fu, fu), dot(fu, fv), dot(fv, fv));
    let (l, m, n) = (-dot(fu, nu_u), -dot(fu, nu_v), -dot(fv, nu_v));
    let det = e * g - ff * ff;
    ((l * n - m * m) / det, (e * n - 2.0 * ff * m + g * l) / (2.0 * det))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn jets_match_finite_differences(s in 0.0f64..1.0, t in 0.0f64..1.0) {
        for f in defaults() {
            let p = at(&f, s, t);
            for src in [&f.map, &f.normal] {
                let jet = src.jet(&p, 2).unwrap();
                let h = 1e-3 * f.scale().max(1.0);
                let coarse = finite_difference_jet(|x| src.eval(x).unwrap(), &p, 2, Some(h));
                let fine = finite_difference_jet(|x| src.eval(x).unwrap(), &p, 2, Some(0.5 * h));
                for vars in [&[0][..], &[1], &[0, 0], &[0, 1], &[1, 1]] {
                    // central differences are second order, so extrapolate
                    let a = jet.partial(vars);
                    let b: Vec<f64> = fine.partial(vars).iter().zip(coarse.partial(vars)).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
                    let tol = if vars.len() == 1 { 1e-6 } else { 1e-4 };
                    for (x, y) in a.iter().zip(&b) {
                        prop_assert!(close(*y, *x, tol, 1e-8 * f.scale().max(1.0)), "{} at {p:?} {vars:?}: jet {x} fd {y}", f.label);
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_partials_are_symmetric(s in 0.0f64..1.0, t in 0.0f64..1.0) {
        for f in defaults() {
            let jet = f.map.jet(&at(&f, s, t), 3).unwrap();
            prop_assert_eq!(jet.partial(&[0, 1]), jet.partial(&[1, 0]));
            prop_assert_eq!(jet.partial(&[0, 1, 1]), jet.partial(&[1, 0, 1]));
            prop_assert_eq!(jet.partial(&[0, 1, 1]), jet.partial(&[1, 1, 0]));
        }
    }

    #[test]
    fn metric_determinant_is_lambda_squared(s in 0.0f64..1.0, t in 0.0f64..1.0) {
        for f in defaults() {
            let p = at(&f, s, t);
            let ff = f.forms(p).unwrap();
            let lambda = f.lambda(p).unwrap();
            prop_assert!((ff.det_first() - lambda * lambda).abs() <= 1e-9 * ff.e * ff.g, "{} at {p:?}", f.label);
        }
    }

    #[test]
    fn curvatures_match_finite_differences(s in 0.0f64..1.0, t in 0.0f64..1.0) {
        for f in defaults() {
            let p = at(&f, s, t);
            let lambda = f.lambda(p).unwrap();
            let ff = f.forms(p).unwrap();
            if lambda.abs() < 1e-2 * (ff.e * ff.g).sqrt() {
                continue;
            }
            let c = f.curvature(p).unwrap();
            let (k, h) = curvature_fd(&f, p);
            let (ck, ch) = (c.k.unwrap(), c.h.unwrap());
            prop_assert!((ck - k).abs() <= 1e-5 * ck.abs().max(1.0), "{} K at {p:?}: {ck} vs {k}", f.label);
            prop_assert!((ch - h).abs() <= 1e-5 * ch.abs().max(1.0), "{} H at {p:?}: {ch} vs {h}", f.label);
        }
    }
}

#[derive(Clone, Debug)]
enum Tree {
    Leaf(String),
    Neg(Box<Tree>),
    Bin(Box<Tree>, char, Box<Tree>),
    Pow(Box<Tree>, u8),
    Call(&'static str, Box<Tree>),
}

impl std::fmt::Display for Tree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tree::Leaf(s) => write!(f, "{s}"),
            Tree::Neg(a) => write!(f, "-({a})"),
            Tree::Bin(a, op, b) => write!(f, "({a} {op} {b})"),
            Tree::Pow(a, n) => write!(f, "({a})^{n}"),
            Tree::Call(name, a) => write!(f, "{name}({a})"),
        }
    }
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        Just("u".to_string()),
        Just("v".to_string()),
        Just("a".to_string()),
        (0u32..1000).prop_map(|n| n.to_string()),
        (1u32..1000, 1u32..100).prop_map(|(n, d)| format!("{}", n as f64 / d as f64)),
        (1u32..9, 1i32..40).prop_map(|(m, e)| format!("{m}e-{e}")),
    ]
    .prop_map(Tree::Leaf);
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Tree::Neg(Box::new(a))),
            (inner.clone(), prop::sample::select(vec!['+', '-', '*', '/']), inner.clone())
                .prop_map(|(a, op, b)| Tree::Bin(Box::new(a), op, Box::new(b))),
            (inner.clone(), 0u8..5).prop_map(|(a, n)| Tree::Pow(Box::new(a), n)),
            (prop::sample::select(vec!["sin", "cos", "exp", "tanh", "sech", "sqrt", "abs"]), inner)
                .prop_map(|(f, a)| Tree::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn parse_print_parse_is_structural(trees in prop::collection::vec(tree(), 1..4)) {
        let params: BTreeMap<String, f64> = [("a".to_string(), -1.25)].into();
        let src = if trees.len() == 1 {
            trees[0].to_string()
        } else {
            format!("({})", trees.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "))
        };
        let e = parse(&src, &params).unwrap();
        prop_assert_eq!(e.vars(), Vars::Map);
        let printed = e.to_string();
        let again = parse(&printed, &params).unwrap();
        prop_assert_eq!(&e, &again, "{} printed as {}", src, printed);
        prop_assert_eq!(printed, again.to_string());
    }

    #[test]
    fn description_round_trip_is_bit_exact(a in -3.0f64..3.0, b in -3.0f64..3.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let f = get("cuspidal_parabola", &[("a", a), ("b", b)]).unwrap();
        let d = f.to_description().unwrap();
        let back = Description::from_toml(&d.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &d);
        let g = Front::from_description(&back).unwrap();
        let p = at(&f, s, t);
        prop_assert_eq!(f.lambda(p).unwrap().to_bits(), g.lambda(p).unwrap().to_bits());
    }

    #[test]
    fn swallowtail_curvature_diverges_at_the_peak(t in 1e-7f64..7e-5, side in prop::bool::ANY) {
        let f = get("standard_swallowtail", &[]).unwrap();
        let t = if side { t } else { -t };
        let k = singular_curvature(&f, [t, -6.0 * t * t], None).unwrap().kappa_s;
        prop_assert!(k < -1e3, "κ_s({t}) = {k}");
        prop_assert!((k * t.abs() + 1.0 / 6.0).abs() < 1e-3);
    }

    #[test]
    fn positive_curvature_forces_negative_singular_curvature(u in -1.0f64..1.0, v in 1e-4f64..0.3, side in prop::bool::ANY) {
        let f = get("cuspidal_parabola", &[("a", -1.0), ("b", 0.0)]).unwrap();
        let v = if side { v } else { -v };
        prop_assert!(f.curvature([u, v]).unwrap().k.unwrap() > 0.0);
        prop_assert!(singular_curvature(&f, [u, 0.0], None).unwrap().kappa_s < 0.0);
    }

    #[test]
    fn loop_rotation_is_invariant_under_reparametrization(c in -0.9f64..0.9, r in 0.2f64..0.7) {
        let f = get("cuspidal_parabola", &[]).unwrap();
        let base = zigzag_surface(&f, &NullLoop::ellipse([0.0, 0.0], [r, r]).unwrap()).unwrap();
        let lp = NullLoop::parse(
            "warped",
            "(r*cos(t + c*sin(t)), r*sin(t + c*sin(t)))",
            &[("r", r), ("c", c)],
            [0.0, TAU],
        )
        .unwrap();
        let warped = zigzag_surface(&f, &lp).unwrap();
        let reversed = zigzag_surface(&f, &lp.reversed()).unwrap();
        for z in [&warped, &reversed] {
            prop_assert_eq!(z.winding.abs(), base.winding.abs());
            prop_assert_eq!(z.reduced_k, base.reduced_k);
            prop_assert!(z.agrees());
        }
    }

    #[test]
    fn plane_rotation_is_invariant_under_reparametrization(n in 1u32..4, c in -0.9f64..0.9) {
        let n = f64::from(n);
        let params = [("n", n), ("A", 1.5 / n + 0.5), ("c", 1.5)];
        let base = zigzag_plane(&plane_gallery("zigzag", &params).unwrap()).unwrap();
        let (curve, normal) = zigzag_strings("(t + s*sin(t))");
        let mut p = params.to_vec();
        p.push(("s", c));
        let pf = PlaneFront::parse("warped", &curve, &normal, &p, [0.0, TAU]).unwrap();
        for z in [zigzag_plane(&pf).unwrap(), zigzag_plane(&pf.reversed()).unwrap()] {
            prop_assert_eq!(z.winding.abs(), base.winding.abs());
            prop_assert_eq!(z.reduced_k, n as u64);
            prop_assert!(z.agrees());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn negative_coefficients_give_positive_submanifold_curvature(a in -2.0f64..-0.2, b in -2.0f64..-0.2) {
        let hf = HyperFront::cuspidal_graph(a, b, 0.0);
        for p in [[0.3, 0.2, -0.4], [-0.5, -0.6, 0.1]] {
            let k = principal_curvatures(&hf, p).unwrap().unwrap();
            for i in 0..3 {
                for j in i + 1..3 {
                    prop_assert!(k[i] * k[j] > 0.0, "{k:?}");
                }
            }
        }
        let tol = HyperTolerances::default();
        for p in singular_samples(&hf, 4).unwrap().into_iter().step_by(7) {
            let ks = singular_submanifold_curvature(&hf, p, &tol).unwrap();
            let want = 4.0 * a * b / (1.0 + 4.0 * a * a * p[1] * p[1] + 4.0 * b * b * p[2] * p[2]).powi(2);
            prop_assert!(ks > 0.0 && (ks - want).abs() < 1e-6 * want, "{ks} vs {want}");
        }
    }
}

#[test]
fn lambda_changes_sign_across_traced_curves() {
    for name in ["cuspidal_parabola", "standard_swallowtail", "swallowtail_pm", "pseudosphere", "ellipsoid_parallel", "zigzag_cylinder"] {
        let f = get(name, &[]).unwrap();
        let tr = trace(&f, &TraceOptions::with_grid(64)).unwrap();
        assert!(!tr.is_empty(), "{name}");
        let eps = 1e-4 * f.scale();
        for c in &tr.curves {
            for p in c.samples.iter().filter(|p| !p.near_peak) {
                let g = p.grad_lambda;
                let len = g[0].hypot(g[1]);
                let n = [eps * g[0] / len, eps * g[1] / len];
                let plus = f.lambda([p.uv[0] + n[0], p.uv[1] + n[1]]).unwrap();
                let minus = f.lambda([p.uv[0] - n[0], p.uv[1] - n[1]]).unwrap();
                assert!(plus * minus < 0.0, "{name} at {:?}", p.uv);
            }
        }
    }
}

#[test]
fn unsigned_residual_shrinks_under_refinement() {
    for name in ["pseudosphere", "ellipsoid_parallel"] {
        let f = get(name, &[]).unwrap();
        let floor = 1e-6 * 4.0 * PI;
        let mut last = f64::INFINITY;
        for grid in [16, 32, 64] {
            let r = euler_report(&f, &ReportOptions::with_grid(grid)).unwrap().residual_unsigned.unwrap().abs();
            assert!(r <= last / 2.0 || r < floor, "{name} grid {grid}: {r} after {last}");
            last = r;
        }
    }
}

#[test]
fn degree_matches_total_normal_curvature() {
    let f = get("ellipsoid_parallel", &[]).unwrap();
    let r = euler_report(&f, &ReportOptions::with_grid(64)).unwrap();
    let deg = r.deg_nu.unwrap();
    assert_eq!(deg, 1);
    assert!((r.deg_value - deg as f64).abs() < 1e-3, "{}", r.deg_value);
    assert!((r.int_k_dahat / (4.0 * PI) - r.deg_value).abs() < 1e-12);
}
