use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use l2tor_core::acceptance::{self, AcceptanceConfig, CriterionResult};
use l2tor_core::anomaly::{anomaly_coefficients, AnomalyCoefficients, ConformalFamily};
use l2tor_core::heat::{boundary_insensitivity_check, ComparisonReport, Domain1D, HeatGrid};
use l2tor_core::hyperbolic::{cusp_volume, torsion_constant_for, CuspEnd, PlancherelTable};
use l2tor_core::jsj::{self, Census, JsjManifest};
use l2tor_core::sdf::{run_suite, Suite};
use l2tor_core::zeta::{
    analytic_torsion, cim, d_small, zeta_det, CircleTrace, HeatTrace, Spectrum, SpectrumTrace,
};

use crate::config::{Format, RunConfig};
use crate::{AnomalyArgs, HeatcmpArgs, HyperbolicArgs, HyperbolicOp, Outcome, Pair, ZetaArgs, ZetaOp};

/// Where and how a report is written.
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Sink {
    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            bail!("format {f:?} is not available here; use one of {allowed:?}");
        }
        Ok(f)
    }

    fn write(&self, text: &str) -> Result<()> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
            // A closed pipe (`| head`) is not an error.
            None => match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            },
        }
    }

    fn json(&self, value: &impl Serialize) -> Result<()> {
        self.write(&serde_json::to_string_pretty(value)?)
    }
}

fn outcome(passed: bool) -> Outcome {
    if passed {
        Outcome::Passed
    } else {
        Outcome::Failed
    }
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn sdf_check(cfg: &RunConfig, out: &Sink, suite: &str, instances: usize, max_dim: usize) -> Result<Outcome> {
    let format = out.format(Format::Json, &[Format::Json, Format::Text])?;
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
    let reports = suites
        .iter()
        .map(|&s| run_suite(s, cfg.seed, instances, max_dim))
        .collect::<l2tor_core::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed());
    match format {
        Format::Text => {
            let mut s = String::new();
            for r in &reports {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                writeln!(s, "{status} {:<14} {} probes, {} violations", r.suite.name(), r.probes, r.violations.len())?;
            }
            out.write(&s)?;
        }
        _ => out.json(&json!({ "seed": cfg.seed, "passed": passed, "suites": reports }))?,
    }
    Ok(outcome(passed))
}

/// A JSON literal, or the contents of the file it names.
fn json_argument(arg: &str) -> Result<Value> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("cannot read spectrum file {arg}"))?
    };
    serde_json::from_str(&text).context("spectrum is not valid JSON")
}

fn spectrum_from(v: &Value) -> Result<Spectrum> {
    if let Ok(pairs) = serde_json::from_value::<Vec<(f64, f64)>>(v.clone()) {
        return Ok(Spectrum::new(pairs)?);
    }
    if let Ok(values) = serde_json::from_value::<Vec<f64>>(v.clone()) {
        return Ok(Spectrum::new(values.into_iter().map(|l| (l, 1.0)).collect())?);
    }
    Err(anyhow!("a spectrum is a list of [eigenvalue, weight] pairs or a list of eigenvalues"))
}

pub fn zeta(out: &Sink, a: &ZetaArgs) -> Result<Outcome> {
    out.format(Format::Json, &[Format::Json])?;
    let raw = match (&a.spectrum, a.circle) {
        (Some(s), None) => Some(json_argument(s)?),
        (None, Some(_)) => None,
        _ => bail!("give exactly one of --spectrum or --circle"),
    };
    let circle = a.circle.map(CircleTrace::new).transpose()?;
    let single = || -> Result<Box<dyn HeatTrace>> {
        match (&raw, circle) {
            (Some(v), _) => Ok(Box::new(SpectrumTrace::new(spectrum_from(v)?, a.m))),
            (None, Some(c)) => Ok(Box::new(c)),
            _ => unreachable!(),
        }
    };
    let report = match a.op {
        ZetaOp::Det => {
            let h = single()?;
            if let Some(v) = &raw {
                if spectrum_from(v)?.gap().is_none() {
                    bail!("spectrum has no positive eigenvalue");
                }
            }
            json!({ "op": "det", "result": zeta_det(h.as_ref())? })
        }
        ZetaOp::Dsmall => json!({ "op": "dsmall", "result": d_small(single()?.as_ref())? }),
        ZetaOp::Trace => {
            let rows = a
                .t
                .iter()
                .map(|&t| {
                    if !(t > 0.0 && t.is_finite()) {
                        bail!("trace needs t > 0, got {t}");
                    }
                    Ok(match (&raw, circle) {
                        (Some(v), _) => {
                            let s = spectrum_from(v)?;
                            json!({ "t": t, "perp": s.heat_trace(t, true)?, "full": s.heat_trace(t, false)? })
                        }
                        (None, Some(c)) => json!({ "t": t, "perp": c.trace(t), "full": c.full_trace(t) }),
                        _ => unreachable!(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "op": "trace", "rows": rows })
        }
        ZetaOp::Torsion => {
            let degrees: Vec<Box<dyn HeatTrace>> = match (&raw, circle) {
                (Some(Value::Array(items)), _) => items
                    .iter()
                    .map(|v| Ok(Box::new(SpectrumTrace::new(spectrum_from(v)?, a.m)) as Box<dyn HeatTrace>))
                    .collect::<Result<_>>()
                    .context("--op torsion takes a list of spectra, one per degree")?,
                (Some(_), _) => bail!("--op torsion takes a list of spectra, one per degree"),
                (None, Some(c)) => vec![Box::new(c), Box::new(c)],
                _ => unreachable!(),
            };
            let refs: Vec<&dyn HeatTrace> = degrees.iter().map(|b| b.as_ref()).collect();
            json!({ "op": "torsion", "result": analytic_torsion(&refs)? })
        }
    };
    out.json(&report)?;
    Ok(Outcome::Passed)
}

pub fn selftest_cim(out: &Sink) -> Result<Outcome> {
    let format = out.format(Format::Json, &[Format::Json, Format::Text])?;
    let r = cim::resolve();
    let passed = r.convention.is_some() && r.residual < cim::CIM_TOL;
    let formula = r.convention.map(|c| c.formula());
    match format {
        Format::Text => {
            let mut s = String::new();
            match formula {
                Some(f) => writeln!(s, "c(i,m) = {f} for i < m, c(m,m) = γ (residual {:.1e})", r.residual)?,
                None => writeln!(s, "c(i,m): no candidate matches the oracle")?,
            }
            writeln!(s, "-(m-i)/2 disagrees with the oracle at m-i = {:?}", r.stated_disagrees_at)?;
            for row in &r.rows {
                writeln!(s, "  m-i = {}  oracle {:+.15}  -(m-i)/2 {:+.3}  -2/(m-i) {:+.15}", row.order, row.oracle, row.stated, row.derived)?;
            }
            out.write(&s)?;
        }
        _ => out.json(&json!({ "passed": passed, "formula": formula, "resolution": r }))?,
    }
    Ok(outcome(passed))
}

fn plancherel_table(m: usize, path: Option<&Path>) -> Result<Option<PlancherelTable>> {
    if let Some(p) = path {
        let t = PlancherelTable::load(p).with_context(|| format!("cannot load Plancherel table {}", p.display()))?;
        return Ok(Some(t));
    }
    Ok((m == 3).then(PlancherelTable::h3))
}

pub fn hyperbolic(cfg: &RunConfig, out: &Sink, a: &HyperbolicArgs) -> Result<Outcome> {
    out.format(Format::Json, &[Format::Json])?;
    let rel_tol = cfg.tolerance("density");
    match a.op {
        HyperbolicOp::Constant => {
            let table = if a.m % 2 == 0 { None } else { plancherel_table(a.m, a.table.as_deref())? };
            let c = torsion_constant_for(a.m, table.as_ref(), rel_tol)?;
            let reference = match a.m {
                3 => Some(-1.0 / (3.0 * PI)),
                m if m % 2 == 0 => Some(0.0),
                _ => None,
            };
            let tol = cfg.tolerance("constant");
            let passed = reference.map_or(true, |r| (c.value - r).abs() <= tol);
            out.json(&json!({
                "op": "constant",
                "m": a.m,
                "value": c.value,
                "errorEstimate": c.error_estimate,
                "reference": reference,
                "tolerance": tol,
                "passed": passed,
                "torsion": c.torsion,
            }))?;
            Ok(outcome(passed))
        }
        HyperbolicOp::Density => {
            let table = plancherel_table(a.m, a.table.as_deref())?
                .ok_or_else(|| anyhow!("no built-in Plancherel table for m = {}; pass --table", a.m))?;
            if table.m != a.m {
                bail!("table is for m = {}, asked for m = {}", table.m, a.m);
            }
            let degrees: Vec<usize> = match a.p {
                Some(p) if p <= a.m => vec![p],
                Some(p) => bail!("form degree {p} exceeds m = {}", a.m),
                None => (0..=a.m).collect(),
            };
            let mut rows = Vec::new();
            for &p in &degrees {
                for &t in &a.t {
                    let quad = table.heat_density_with(p, t, rel_tol)?;
                    rows.push(json!({ "p": p, "t": t, "density": quad, "closedForm": table.closed_density(p, t) }));
                }
            }
            out.json(&json!({ "op": "density", "m": a.m, "rows": rows }))?;
            Ok(Outcome::Passed)
        }
        HyperbolicOp::Cusp => {
            let end = CuspEnd::new(a.cross_section, 0.0)?;
            let rows = a
                .height
                .iter()
                .map(|&r| Ok(json!({ "height": r, "volume": cusp_volume(&end.at(r), a.m)? })))
                .collect::<Result<Vec<_>>>()?;
            out.json(&json!({ "op": "cusp", "m": a.m, "crossSectionVolume": a.cross_section, "rows": rows }))?;
            Ok(Outcome::Passed)
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HeatVerdict<'a> {
    pair: &'static str,
    subdomain: Domain1D,
    ambient: Domain1D,
    k: f64,
    fitted_c1: f64,
    fitted_c2: f64,
    uniform_in_t: bool,
    /// `C₁(K)` for `C₂ = 1` at fractions of `K`.
    monotone_in_k: bool,
    sweep: &'a [l2tor_core::heat::SweepEntry],
    probes: usize,
    violations: usize,
    /// Largest relative deviation of the difference from its closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_error: Option<f64>,
    passed: bool,
}

pub fn heatcmp(out: &Sink, a: &HeatcmpArgs) -> Result<Outcome> {
    let format = out.format(Format::Json, &[Format::Json, Format::Csv])?;
    let (name, v, n) = match a.pair {
        Pair::HalflineLine => ("halfline-line", Domain1D::HalfLineNeumann, Domain1D::Line),
        Pair::IntervalHalfline => {
            ("interval-halfline", Domain1D::IntervalNeumann { length: a.length }, Domain1D::HalfLineNeumann)
        }
    };
    let grid = HeatGrid { t_min: a.t_min, t_max: a.t_max, t_points: a.t_points, x_points: a.x_points, x_max: a.x_max };
    let r: ComparisonReport = boundary_insensitivity_check(&v, &n, a.k, &grid)?;
    let closed_form_error = matches!(a.pair, Pair::HalflineLine).then(|| {
        r.rows
            .iter()
            .filter(|row| row.bound >= f64::MIN_POSITIVE)
            .map(|row| (row.diff - row.bound).abs() / row.bound)
            .fold(0.0, f64::max)
    });
    let unit = r.sweep.iter().find(|s| s.c2 == 1.0).ok_or_else(|| anyhow!("sweep lacks C₂ = 1"))?;
    let passed = r.violations.is_empty() && unit.monotone_in_k && closed_form_error.map_or(true, |e| e <= 1e-12);
    let verdict = HeatVerdict {
        pair: name,
        subdomain: r.subdomain,
        ambient: r.ambient,
        k: r.k,
        fitted_c1: r.fitted_c1,
        fitted_c2: r.fitted_c2,
        uniform_in_t: r.uniform,
        monotone_in_k: unit.monotone_in_k,
        sweep: &r.sweep,
        probes: r.rows.len(),
        violations: r.violations.len(),
        closed_form_error,
        passed,
    };
    let header: Vec<String> = ["t", "x", "diff", "bound"].map(String::from).to_vec();
    let rows = csv_string(&header, r.rows.iter().map(|row| vec![row.t, row.x, row.diff, row.bound]))?;
    if let Some(p) = &a.csv {
        std::fs::write(p, &rows).with_context(|| format!("cannot write {}", p.display()))?;
    }
    match format {
        Format::Csv => {
            out.write(&rows)?;
            eprintln!("{}", serde_json::to_string(&verdict)?);
        }
        _ => out.json(&verdict)?,
    }
    Ok(outcome(passed))
}

/// Parses `u0:u1:n`.
fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [u0, u1, n] = parts[..] else { bail!("--sweep expects u0:u1:n, got '{s}'") };
    let (u0, u1): (f64, f64) = (u0.trim().parse()?, u1.trim().parse()?);
    let n: usize = n.trim().parse().with_context(|| format!("bad point count in '{s}'"))?;
    if n == 0 || !(u0.is_finite() && u1.is_finite()) {
        bail!("--sweep needs finite bounds and n ≥ 1");
    }
    if n == 1 {
        return Ok(vec![u0]);
    }
    Ok((0..n).map(|i| u0 + (u1 - u0) * i as f64 / (n - 1) as f64).collect())
}

fn anomaly_row(c: &AnomalyCoefficients) -> Vec<f64> {
    let mut row = vec![c.u];
    row.extend(&c.d_per_degree);
    row.push(c.alternating_sum);
    if let (Some(k), Some(z)) = (c.mean_curvature, c.cancellations) {
        row.extend([k, z.second_normal, z.curvature]);
    }
    row
}

pub fn anomaly(out: &Sink, a: &AnomalyArgs) -> Result<Outcome> {
    let fam = match (&a.family, &a.f) {
        (Some(f), _) if f == "preset" => ConformalFamily::preset(a.dim)?,
        (Some(f), _) => bail!("unknown family '{f}'; use 'preset' or give --f"),
        (None, Some(f)) => ConformalFamily::new(a.dim, f)?,
        (None, None) => ConformalFamily::preset(a.dim)?,
    };
    let fam = fam.with_cross_section_volume(a.cross_section_volume)?;
    let us = match &a.sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![a.u],
    };
    let results = us.iter().map(|&u| anomaly_coefficients(&fam, u)).collect::<l2tor_core::Result<Vec<_>>>()?;
    let default = if a.sweep.is_some() { Format::Csv } else { Format::Json };
    match out.format(default, &[Format::Json, Format::Csv])? {
        Format::Csv => {
            let mut header = vec!["u".to_string()];
            header.extend((0..=a.dim).map(|p| format!("d{p}")));
            header.push("sum".into());
            if a.dim == 3 {
                header.extend(["meanCurvature", "secondNormal", "curvature"].map(String::from));
            }
            out.write(&csv_string(&header, results.iter().map(anomaly_row))?)?;
        }
        _ if a.sweep.is_some() => out.json(&json!({ "f": fam.expression(), "rows": results }))?,
        _ => out.json(&json!({ "f": fam.expression(), "result": results[0] }))?,
    }
    let cancelled = results
        .iter()
        .filter_map(|c| c.cancellations)
        .all(|z| z.second_normal.abs() <= 1e-12 && z.curvature.abs() <= 1e-12);
    Ok(outcome(cancelled))
}

fn jsj_text(r: &jsj::JsjReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "manifold           {}", r.name);
    let _ = writeln!(s, "pieces             {}", r.pieces);
    let _ = writeln!(s, "boundary tori      {}", r.boundary_tori);
    let _ = writeln!(s, "hyperbolic volume  {}", r.hyperbolic_volume);
    let _ = writeln!(s, "graph manifold     {}", r.graph_manifold);
    let _ = writeln!(s, "L² torsion         {}", r.torsion);
    let _ = writeln!(s, "assumes:");
    for a in &r.assumptions {
        let _ = writeln!(s, "  - {a}");
    }
    s
}

pub fn jsj(out: &Sink, input: Option<&Path>, census: Option<&str>) -> Result<Outcome> {
    let format = out.format(Format::Json, &[Format::Json, Format::Text])?;
    let m: JsjManifest = match (input, census) {
        (Some(p), _) => jsj::load_manifest(p).with_context(|| format!("cannot load manifest {}", p.display()))?,
        (None, Some(name)) => {
            let c = Census::shipped();
            c.get(name).cloned().ok_or_else(|| {
                let names: Vec<&str> = c.manifolds.iter().map(|m| m.name.as_str()).collect();
                anyhow!("'{name}' is not in the census; available: {}", names.join(", "))
            })?
        }
        (None, None) => bail!("give --input or --census"),
    };
    let r = jsj::report(&m);
    match format {
        Format::Text => out.write(&jsj_text(&r))?,
        _ => out.json(&r)?,
    }
    Ok(Outcome::Passed)
}

fn table(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(s, "{}", r.line());
        for p in &r.parts {
            let _ = writeln!(s, "     {} {:<14} {}", if p.passed { "ok  " } else { "FAIL" }, p.key, p.detail);
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(s, "{passed} of {} criteria passed", results.len());
    s
}

pub fn selftest(cfg: &RunConfig, out: &Sink, only: &[String]) -> Result<Outcome> {
    let format = out.format(Format::Text, &[Format::Json, Format::Text])?;
    let acfg = AcceptanceConfig { seed: cfg.seed, density_rel_tol: cfg.tolerance("density"), ..Default::default() };
    let results: Vec<CriterionResult> = if only.is_empty() {
        acceptance::run_all(&acfg)
    } else {
        only.iter()
            .map(|k| {
                acceptance::find(k).map(|c| c.run(&acfg)).ok_or_else(|| {
                    let keys: Vec<&str> = acceptance::CRITERIA.iter().map(|c| c.key).collect();
                    anyhow!("unknown criterion '{k}'; available: {}", keys.join(", "))
                })
            })
            .collect::<Result<_>>()?
    };
    let passed = results.iter().all(|r| r.passed);
    match format {
        Format::Json => out.json(&json!({ "seed": cfg.seed, "passed": passed, "criteria": results }))?,
        _ => out.write(&table(&results))?,
    }
    Ok(outcome(passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_sweep("-1:1:1").unwrap(), vec![-1.0]);
        for bad in ["0:1", "0:1:0", "a:1:2", "0:1:2:3", "0:inf:2"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn spectrum_forms() {
        let pairs = spectrum_from(&json!([[1.0, 2.0], [3.0, 1.0]])).unwrap();
        assert_eq!(pairs.entries(), &[(1.0, 2.0), (3.0, 1.0)]);
        let plain = spectrum_from(&json!([1.0, 1.0, 3.0])).unwrap();
        assert_eq!(plain.entries(), &[(1.0, 2.0), (3.0, 1.0)]);
        assert!(spectrum_from(&json!({"a": 1})).is_err());
        assert!(spectrum_from(&json!([-1.0])).is_err());
    }
}
