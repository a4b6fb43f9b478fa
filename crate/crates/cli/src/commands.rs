use std::collections::BTreeMap;
use std::path::PathBuf;

use frontlab::front::Front;
use frontlab::gb::{self, GbError, ReportOptions};
use frontlab::hyper::{self, HyperError, HyperTolerances};
use frontlab::singular::{self, PointClass, SingularCurve, SingularError, Trace, TraceOptions};
use frontlab::zigzag::{self, ZigzagError, ZigzagResult};
use frontlab::{gallery, zigzag::PLANE_ENTRIES};
use serde::Serialize;

use crate::input::{self, HYPER_DEFAULTS};
use crate::{Common, Failure, Format, HyperArgs};

const MIN_GRID: usize = 16;

fn grid(c: &Common, default: usize) -> Result<usize, Failure> {
    let g = c.grid.unwrap_or(default);
    if g < MIN_GRID {
        return Err(Failure::Usage(format!("--grid must be at least {MIN_GRID}, got {g}")));
    }
    Ok(g)
}

fn positive(name: &str, x: Option<f64>) -> Result<Option<f64>, Failure> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(Failure::Usage(format!("{name} must be positive, got {v}"))),
        _ => Ok(x),
    }
}

fn trace_options(c: &Common, grid: usize) -> Result<TraceOptions, Failure> {
    let mut o = TraceOptions::with_grid(grid);
    if let Some(t) = positive("--tol-trace", c.tol_trace)? {
        o.tol.trace = t;
    }
    if let Some(t) = positive("--tol-class", c.tol_class)? {
        o.tol.classify = t;
    }
    Ok(o)
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Contract(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `files` into `--out`, or prints the first one.
fn emit(c: &Common, files: Vec<(String, String)>) -> Result<(), Failure> {
    match &c.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            for (name, text) in files {
                let path: PathBuf = dir.join(name);
                std::fs::write(&path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                println!("{}", path.display());
            }
        }
        None => {
            if let Some((_, text)) = files.into_iter().next() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn csv_text<F>(header: &[&str], fill: F) -> Result<String, Failure>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let err = |e: csv::Error| Failure::Contract(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    fill(&mut w).map_err(err)?;
    let bytes = w.into_inner().map_err(|e| Failure::Contract(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Contract(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct ListedEntry {
    kind: &'static str,
    name: &'static str,
    params: BTreeMap<String, f64>,
    provenance: &'static str,
}

pub fn gallery(c: &Common) -> Result<(), Failure> {
    let params = |p: &[(&str, f64)]| p.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    let mut list: Vec<ListedEntry> = gallery::ENTRIES
        .iter()
        .map(|e| ListedEntry { kind: "surface", name: e.name, params: params(e.params), provenance: e.provenance })
        .collect();
    list.extend(PLANE_ENTRIES.iter().map(|e| ListedEntry { kind: "plane", name: e.0, params: params(e.1), provenance: e.2 }));
    list.push(ListedEntry {
        kind: "hypersurface",
        name: "cuspidal_graph",
        params: params(&HYPER_DEFAULTS),
        provenance: "(v, w, u² + a v² + b w², u³ + c u²) in R⁴, singular along u = 0",
    });
    let text = match c.format {
        Format::Json => json(&list)?,
        Format::Csv => csv_text(&["kind", "name", "params", "provenance"], |w| {
            for e in &list {
                let p: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                w.write_record([e.kind, e.name, &p.join(";"), e.provenance])?;
            }
            Ok(())
        })?,
    };
    let ext = if c.format == Format::Json { "json" } else { "csv" };
    emit(c, vec![(format!("gallery.{ext}"), text)])
}

fn singular_failure(e: SingularError) -> Failure {
    match e {
        SingularError::GridTooCoarse(_) => Failure::Usage(e.to_string()),
        e => Failure::Contract(e.to_string()),
    }
}

fn check_valid(front: &Front, n: usize) -> Result<(), Failure> {
    let r = front.validate(n);
    if r.pass {
        return Ok(());
    }
    let worst = r.worst.first().map(|v| format!(" (worst: {} = {:e} at {:?})", v.check, v.value, v.uv)).unwrap_or_default();
    Err(Failure::Contract(format!("`{}` fails front validation{worst}", front.label)))
}

#[derive(Serialize, Default)]
struct ClassCounts {
    cuspidal_edge: usize,
    swallowtail: usize,
    peak_other: usize,
    degenerate: usize,
}

#[derive(Serialize)]
struct SwallowtailEntry {
    curve: usize,
    uv: [f64; 2],
    sign: Option<i8>,
}

#[derive(Serialize)]
struct CurveSummary {
    samples: usize,
    closed: bool,
    start: singular::CurveEnd,
    end: singular::CurveEnd,
    /// `∫ κ_s ds`, absent when the curve meets a degenerate point.
    int_kappa_s_ds: Option<f64>,
}

#[derive(Serialize)]
struct AnalyzeSummary {
    label: String,
    params: BTreeMap<String, f64>,
    grid: usize,
    lambda_scale: f64,
    curve_count: usize,
    curves: Vec<CurveSummary>,
    classes: ClassCounts,
    swallowtails: Vec<SwallowtailEntry>,
    degenerate_points: Vec<[f64; 2]>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct FieldSample {
    u: f64,
    v: f64,
    lambda: f64,
    k: Option<f64>,
    h: Option<f64>,
    near_singular: bool,
}

/// Grid nodes with `|λ|` below this fraction of its maximum are flagged.
const NEAR_SINGULAR: f64 = 1e-2;

fn field(front: &Front, n: usize, lambda_scale: f64) -> Result<Vec<FieldSample>, Failure> {
    front
        .domain
        .grid(n)
        .into_iter()
        .map(|uv| {
            let s = front.curvature(uv).map_err(|e| Failure::Contract(e.to_string()))?;
            Ok(FieldSample {
                u: uv[0],
                v: uv[1],
                lambda: s.lambda,
                k: s.k,
                h: s.h,
                near_singular: s.lambda.abs() < NEAR_SINGULAR * lambda_scale,
            })
        })
        .collect()
}

fn summarize(front: &Front, trace: &Trace) -> AnalyzeSummary {
    let mut classes = ClassCounts::default();
    let mut swallowtails = Vec::new();
    for (i, curve) in trace.curves.iter().enumerate() {
        for p in &curve.samples {
            match p.class {
                PointClass::CuspidalEdge => classes.cuspidal_edge += 1,
                PointClass::Swallowtail => {
                    classes.swallowtail += 1;
                    swallowtails.push(SwallowtailEntry { curve: i, uv: p.uv, sign: p.swallowtail_sign });
                }
                PointClass::NondegeneratePeakOther => classes.peak_other += 1,
                PointClass::Degenerate => classes.degenerate += 1,
            }
        }
    }
    let curves = trace
        .curves
        .iter()
        .enumerate()
        .map(|(i, c): (usize, &SingularCurve)| CurveSummary {
            samples: c.samples.len(),
            closed: c.closed,
            start: c.start,
            end: c.end,
            int_kappa_s_ds: if c.has_degenerate() {
                None
            } else {
                singular::integrate_kappa_s_curve(front, trace, i).ok()
            },
        })
        .collect();
    AnalyzeSummary {
        label: front.label.clone(),
        params: front.params.clone(),
        grid: trace.grid,
        lambda_scale: trace.scales.lambda,
        curve_count: trace.curves.len(),
        curves,
        classes,
        swallowtails,
        degenerate_points: trace.degenerate.clone(),
        warnings: trace.warnings.clone(),
    }
}

pub fn analyze(c: &Common) -> Result<(), Failure> {
    let front = input::front(c)?;
    let n = grid(c, 64)?;
    let opts = trace_options(c, n)?;
    check_valid(&front, 32)?;
    let trace = singular::trace(&front, &opts).map_err(singular_failure)?;
    let summary = summarize(&front, &trace);
    let samples = field(&front, n.min(64), trace.scales.lambda)?;
    let mut files = vec![("summary.json".to_string(), json(&summary)?)];
    match c.format {
        Format::Json => {
            files.push(("curves.json".into(), json(&trace.curves)?));
            files.push(("field.json".into(), json(&samples)?));
        }
        Format::Csv => {
            let mut buf = Vec::new();
            singular::write_csv(&trace.curves, &mut buf).map_err(singular_failure)?;
            let curves = String::from_utf8(buf).map_err(|e| Failure::Contract(e.to_string()))?;
            let field = csv_text(&["u", "v", "lambda", "k", "h", "near_singular"], |w| {
                for s in &samples {
                    w.write_record([num(s.u), num(s.v), num(s.lambda), opt(s.k), opt(s.h), s.near_singular.to_string()])?;
                }
                Ok(())
            })?;
            if c.out.is_none() {
                files.insert(0, ("curves.csv".into(), curves));
            } else {
                files.push(("curves.csv".into(), curves));
                files.push(("field.csv".into(), field));
            }
        }
    }
    emit(c, files)
}

pub fn gb(c: &Common) -> Result<(), Failure> {
    let front = input::front(c)?;
    let n = grid(c, 256)?;
    let mut opts = ReportOptions::with_grid(n);
    opts.trace = TraceOptions { grid: opts.trace.grid, ..trace_options(c, opts.trace.grid)? };
    check_valid(&front, 32)?;
    let report = gb::euler_report(&front, &opts).map_err(|e| match e {
        GbError::NonCompact => Failure::Inapplicable(e.to_string()),
        GbError::GridTooCoarse { .. } => Failure::Usage(e.to_string()),
        e => Failure::Contract(e.to_string()),
    })?;
    emit(c, vec![("gb.json".into(), json(&report)?)])?;
    if !report.applicable {
        return Err(Failure::Inapplicable(format!(
            "`{}`: {}",
            report.label,
            report.inapplicable_reason.as_deref().unwrap_or("hypotheses not met")
        )));
    }
    Ok(())
}

fn zigzag_failure(e: ZigzagError) -> Failure {
    match e {
        ZigzagError::Parse(_) | ZigzagError::UnknownPlane(_) | ZigzagError::Period(..) => Failure::Usage(e.to_string()),
        e => Failure::Contract(e.to_string()),
    }
}

pub fn zigzag(c: &Common) -> Result<(), Failure> {
    let result: ZigzagResult = match &c.loop_file {
        Some(path) => {
            let front = input::front(c)?;
            let lp = input::null_loop(path)?;
            zigzag::zigzag_surface(&front, &lp).map_err(zigzag_failure)?
        }
        None => {
            let Some(pf) = input::plane(c)? else {
                return Err(Failure::Usage("--loop is required for a surface front".into()));
            };
            zigzag::zigzag_plane(&pf).map_err(zigzag_failure)?
        }
    };
    let text = match c.format {
        Format::Json => json(&result)?,
        Format::Csv => csv_text(&["t", "u", "v", "letter"], |w| {
            for x in &result.crossings {
                w.write_record([num(x.t), num(x.uv[0]), num(x.uv[1]), x.letter.to_string()])?;
            }
            Ok(())
        })?,
    };
    let ext = if c.format == Format::Json { "json" } else { "csv" };
    emit(c, vec![(format!("zigzag.{ext}"), text)])?;
    if !result.agrees() {
        return Err(Failure::Contract(format!(
            "reduced word gives k = {} but the rotation number is {}",
            result.reduced_k, result.rotation_number
        )));
    }
    Ok(())
}

fn hyper_failure(e: HyperError) -> Failure {
    match e {
        HyperError::Parse(_) | HyperError::Domain(_) | HyperError::Format(_) | HyperError::Dimension { .. } => {
            Failure::Usage(e.to_string())
        }
        e => Failure::Contract(e.to_string()),
    }
}

pub fn hyper(h: &HyperArgs) -> Result<(), Failure> {
    let c = &h.common;
    let n = grid(c, 16)?;
    let tol = HyperTolerances::default();
    if h.scan {
        if c.surface.as_deref().is_some_and(|s| s != "cuspidal_graph") || !c.params.is_empty() {
            return Err(Failure::Usage("--scan runs over the cuspidal graph family and takes no surface or parameters".into()));
        }
        let rows = hyper::boundedness_scan(n, &tol).map_err(hyper_failure)?;
        let text = match c.format {
            Format::Json => json(&rows)?,
            Format::Csv => csv_text(&["a", "b", "c", "second_form_sup", "vanishes", "predicted"], |w| {
                for r in &rows {
                    w.write_record([
                        r.a.to_string(),
                        r.b.to_string(),
                        r.c.to_string(),
                        num(r.second_form_sup),
                        r.vanishes.to_string(),
                        r.predicted.to_string(),
                    ])?;
                }
                Ok(())
            })?,
        };
        let ext = if c.format == Format::Json { "json" } else { "csv" };
        emit(c, vec![(format!("hyper_scan.{ext}"), text)])?;
        if let Some(r) = rows.iter().find(|r| r.vanishes != r.predicted) {
            return Err(Failure::Contract(format!(
                "a={} b={} c={}: second form sup {:e} disagrees with ac = bc = 0",
                r.a, r.b, r.c, r.second_form_sup
            )));
        }
        return Ok(());
    }
    let hf = input::hyper(c)?;
    let report = hyper::hyper_report(&hf, n, &tol).map_err(hyper_failure)?;
    emit(c, vec![("hyper.json".into(), json(&report)?)])?;
    if !report.validation.pass {
        return Err(Failure::Contract(format!("`{}` fails front validation", report.label)));
    }
    Ok(())
}

pub fn validate(c: &Common) -> Result<(), Failure> {
    let n = grid(c, 64)?;
    if input::is_hyper_file(c)? {
        let hf = input::hyper(c)?;
        let r = hf.validate(n.min(32));
        emit(c, vec![("validate.json".into(), json(&r)?)])?;
        return if r.pass { Ok(()) } else { Err(Failure::Contract(format!("`{}` fails validation", r.label))) };
    }
    let front = input::front(c)?;
    let r = front.validate(n);
    emit(c, vec![("validate.json".into(), json(&r)?)])?;
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Contract(format!("`{}` fails validation", r.label)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_must_be_positive() {
        assert!(positive("--tol-trace", Some(1e-9)).is_ok());
        assert!(matches!(positive("--tol-trace", Some(0.0)), Err(Failure::Usage(_))));
        assert!(matches!(positive("--tol-trace", Some(f64::NAN)), Err(Failure::Usage(_))));
    }

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.1, -3.25e-12, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
