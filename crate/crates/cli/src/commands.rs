//! Subcommand implementations.

use crate::config::{need, Opts};
use crate::svg::emit_svg;
use crate::CliError;
use mwlab::ap::{self as ap, ApVariant};
use mwlab::extrapolation::{demo_csv, extrapolation_demo, rescale_weight, DemoOperator, ExtrapolationCase, RescaleConfig};
use mwlab::grid::{gen_power_weight, gen_rotating_weight, DyadicDomain, MatrixWeight, ScalarField, SetFunction, VectorField};
use mwlab::io::to_json_string;
use mwlab::maximal::{dyadic_maximal, MaximalOptions};
use mwlab::rdf::{
    certify_bound, check_properties, factorize as run_factorize, iterate, reverse_factorize as run_reverse, scalar_probes, FactorizeOptions, IterationConfig,
    ProjectedMaximal,
};
use mwlab::suite::{standard_suite, test_field};
use mwlab::{john_ellipsoid, ConvexBody};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn parsed(json_text: String) -> Value {
    serde_json::from_str(&json_text).expect("library JSON parses")
}

fn report(command: &str, opts: &Opts, result: Value) -> Value {
    json!({ "command": command, "config": opts.to_value(), "result": result })
}

fn emit(opts: &Opts, value: &Value) -> Result<(), CliError> {
    let text = to_json_string(value)?;
    write_text(opts.out.as_deref(), &text)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn input(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    let p = need(path, flag)?;
    if !p.is_file() {
        return Err(CliError::Validation(format!("--{flag}: no such file {}", p.display())));
    }
    Ok(p)
}

fn load_weight(path: &Option<PathBuf>, flag: &str) -> Result<MatrixWeight, CliError> {
    Ok(MatrixWeight::load(input(path, flag)?)?)
}

fn load_field(path: &Path) -> Result<VectorField, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(VectorField::from_json(&text)?)
}

fn exponent(opts_p: Option<f64>, flag: &str, default: Option<f64>) -> Result<f64, CliError> {
    let p = match (opts_p, default) {
        (Some(p), _) => p,
        (None, Some(d)) => d,
        (None, None) => return Err(CliError::Usage(format!("missing required option --{flag}"))),
    };
    if !(p >= 1.0) {
        return Err(CliError::Validation(format!("--{flag} must be at least 1, got {p}")));
    }
    Ok(p)
}

fn check_outputs(opts: &Opts) -> Result<(), CliError> {
    for p in [&opts.out, &opts.svg].into_iter().flatten() {
        if let Some(parent) = p.parent() {
            if !parent.as_os_str().is_empty() && !parent.is_dir() {
                return Err(CliError::Validation(format!("output directory {} does not exist", parent.display())));
            }
        }
    }
    Ok(())
}

fn write_svg(opts: &Opts, f: &SetFunction) -> Result<(), CliError> {
    if let Some(path) = &opts.svg {
        let bodies: Vec<(String, ConvexBody)> = f.cells.iter().enumerate().map(|(i, k)| (format!("cell{i}"), k.clone())).collect();
        write_text(Some(path), &emit_svg(&bodies)?)?;
    }
    Ok(())
}

pub fn gen_weight(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let kind = need(&opts.kind, "kind")?;
    let n = opts.n.unwrap_or(1);
    let d = opts.d.unwrap_or(2);
    let level = opts.level.unwrap_or(3);
    let origin = opts.origin.clone().unwrap_or_else(|| vec![0.0; n]);
    let domain = DyadicDomain::new(n, origin.clone(), opts.size.unwrap_or(1.0), level)?;
    let w = match kind.as_str() {
        "identity" => MatrixWeight::identity(&domain, d),
        "power" => {
            let alpha = need(&opts.alpha, "alpha")?;
            let center = opts.center.clone().unwrap_or(origin);
            gen_power_weight(&domain, d, alpha, &center)?
        }
        "rotating" => {
            if d != 2 {
                return Err(CliError::Validation("rotating weights need --d 2".into()));
            }
            let (a, b) = (opts.a_slope.unwrap_or(1.0), opts.b_slope.unwrap_or(-1.0));
            gen_rotating_weight(&domain, move |x| a * x, move |x| b * x, opts.omega.unwrap_or(0.0))?
        }
        other => return Err(CliError::Validation(format!("unknown weight kind '{other}'"))),
    };
    let text = w.to_json()?;
    match &opts.out {
        Some(p) => {
            write_text(Some(p), &text)?;
            let summary = report("gen-weight", &opts, json!({ "cells": w.len(), "d": w.d() }));
            print!("{}", to_json_string(&summary)?);
            Ok(())
        }
        None => write_text(None, &text),
    }
}

pub fn ap_constant(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let w = load_weight(&opts.weight, "weight")?;
    let p = exponent(opts.p, "p", None)?;
    let variant: ApVariant = opts.variant.as_deref().unwrap_or("reducing").parse()?;
    let rep = ap::ap_constant(&w, p, variant)?;
    let mut result = to_value(&rep);
    result["cubes"] = json!("dyadic subcubes of the base cube");
    emit(&opts, &report("ap-constant", &opts, result))
}

fn maximal_options(opts: &Opts) -> MaximalOptions {
    MaximalOptions { shift: opts.shift.clone(), include_base_cube: !opts.no_base_cube, directions: opts.directions }
}

pub fn maximal(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let f = SetFunction::load(input(&opts.setfn, "setfn")?)?;
    let m = dyadic_maximal(&f, &maximal_options(&opts))?;
    write_svg(&opts, &m)?;
    emit(&opts, &report("maximal", &opts, json!({ "setfn": parsed(m.to_json()?) })))
}

pub fn john(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let f = SetFunction::load(input(&opts.setfn, "setfn")?)?;
    let mut cells = Vec::with_capacity(f.cells.len());
    let mut ellipses = Vec::with_capacity(f.cells.len());
    for (i, k) in f.cells.iter().enumerate() {
        let r = john_ellipsoid(k).map_err(|e| CliError::from(e.at_cell(i)))?;
        cells.push(json!({
            "cell": i,
            "m": r.m.row_major(),
            "inner_ok": r.inner_ok,
            "outer_ok": r.outer_ok,
            "inner_margin": r.inner_margin,
            "outer_margin": r.outer_margin,
            "slack": r.slack,
        }));
        ellipses.push(ConvexBody::Ellipsoid(r.m));
    }
    write_svg(&opts, &SetFunction::new(f.domain.clone(), ellipses)?)?;
    emit(&opts, &report("john", &opts, json!({ "cells": cells })))
}

pub fn rdf(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let w = load_weight(&opts.weight, "weight")?;
    let p = exponent(opts.p, "p", Some(2.0))?;
    let inv = w.inverse();
    let g = match &opts.setfn {
        Some(_) => SetFunction::load(input(&opts.setfn, "setfn")?)?,
        None => SetFunction::ellipsoids(&ScalarField::constant(w.domain(), 1.0), &inv)?,
    };
    let t = ProjectedMaximal { w: w.clone() };
    let probes = scalar_probes(w.domain(), opts.probes.unwrap_or(32), opts.seed.unwrap_or(0))
        .iter()
        .map(|r| SetFunction::ellipsoids(r, &inv))
        .collect::<mwlab::Result<Vec<_>>>()?;
    let safety = opts.safety.unwrap_or(2.0);
    let bound = certify_bound(&t, &probes, p, Some(&w), safety)?;
    let cfg = IterationConfig { bound, k_max: opts.k_max.unwrap_or(30), p, safety, weight: Some(w.clone()), validate: true };
    let res = iterate(&t, &g, &cfg)?;
    let props = check_properties(&t, &g, &res, &cfg)?;
    let tol = opts.tol.unwrap_or(2f64.powi(-28));
    let pass = props.containment <= 1.0 + tol && props.norm_ratio <= 2.0 + tol && props.absorption_slack <= tol * props.g_norm;
    write_svg(&opts, &res.s)?;
    emit(
        &opts,
        &report(
            "rdf",
            &opts,
            json!({
                "certified_bound": bound,
                "bound": res.bound,
                "escalations": res.escalations,
                "term_norms": res.term_norms,
                "properties": to_value(&props),
                "pass": pass,
                "s": parsed(res.s.to_json()?),
            }),
        ),
    )
}

pub fn factorize(opts: Opts) -> Result<(), CliError> {
    let w = load_weight(&opts.weight, "weight")?;
    let p = exponent(opts.p, "p", None)?;
    let dir = need(&opts.out, "out")?;
    let seed = match &opts.seed_field {
        Some(_) => {
            let text = std::fs::read_to_string(input(&opts.seed_field, "seed-field")?).map_err(|e| CliError::Validation(e.to_string()))?;
            Some(ScalarField::from_json(&text)?)
        }
        None => None,
    };
    let fo = FactorizeOptions {
        k_max: opts.k_max.unwrap_or(30),
        safety: opts.safety.unwrap_or(2.0),
        probes: opts.probes.unwrap_or(32),
        probe_seed: opts.seed.unwrap_or(0),
    };
    let r = run_factorize(&w, p, seed.as_ref(), &fo)?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    write_text(Some(&dir.join("w0.json")), &r.w0.to_json()?)?;
    write_text(Some(&dir.join("w1.json")), &r.w1.to_json()?)?;
    write_text(Some(&dir.join("rbar.json")), &r.rbar.to_json()?)?;
    let result = json!({
        "p": mwlab::io::exponent::serialize(&r.p, serde_json::value::Serializer).expect("exponent"),
        "product_residual": r.product_residual,
        "bound": r.bound,
        "escalations": r.escalations,
        "w_report": to_value(&r.w_report),
        "a1_report": to_value(&r.a1_report),
        "ainfty_report": to_value(&r.ainfty_report),
        "seed": if opts.seed_field.is_some() { "file" } else { "constant" },
        "files": ["w0.json", "w1.json", "rbar.json"],
    });
    let text = to_json_string(&report("factorize", &opts, result))?;
    write_text(Some(&dir.join("report.json")), &text)
}

pub fn reverse_factorize(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let w0 = load_weight(&opts.w0, "w0")?;
    let w1 = load_weight(&opts.w1, "w1")?;
    let q0 = exponent(opts.q0, "q0", None)?;
    let q1 = exponent(opts.q1, "q1", None)?;
    let t = need(&opts.t, "t")?;
    let r = run_reverse(&w0, &w1, q0, q1, t)?;
    let q = mwlab::io::exponent::serialize(&r.q, serde_json::value::Serializer).expect("exponent");
    emit(
        &opts,
        &report(
            "reverse-factorize",
            &opts,
            json!({
                "q": q,
                "report": to_value(&r.report),
                "w0_report": to_value(&r.w0_report),
                "w1_report": to_value(&r.w1_report),
                "ratio": r.ratio,
                "weight": parsed(r.w.to_json()?),
            }),
        ),
    )
}

fn rescale_config(opts: &Opts) -> RescaleConfig {
    RescaleConfig { k_max: opts.k_max.unwrap_or(30), safety: opts.safety.unwrap_or(2.0), probes: opts.probes.unwrap_or(32), probe_seed: opts.seed.unwrap_or(0) }
}

pub fn extrapolate(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let w = load_weight(&opts.weight, "weight")?;
    let p = exponent(opts.p, "p", None)?;
    let p0 = exponent(opts.p0, "p0", None)?;
    let g = match &opts.g {
        Some(_) => load_field(&input(&opts.g, "g")?)?,
        None => test_field(&w),
    };
    let f = match &opts.f {
        Some(_) => load_field(&input(&opts.f, "f")?)?,
        None => opts.op.as_deref().unwrap_or("christ-goldberg").parse::<DemoOperator>()?.image(&w, &g)?,
    };
    let case = ExtrapolationCase::new(p, p0, f, g, w)?;
    let rep = rescale_weight(&case, &rescale_config(&opts))?;
    let tol = opts.tol.unwrap_or(2f64.powi(-26));
    emit(
        &opts,
        &report(
            "extrapolate",
            &opts,
            json!({
                "case": rep.case_id.to_string(),
                "bound": rep.bound,
                "w_constant": rep.w_constant,
                "w0_constant": rep.w0_constant,
                "exponent": rep.exponent,
                "constant_ratio": rep.constant_ratio,
                "chain": to_value(&rep.chain),
                "chain_holds": rep.chain.iter().all(|c| c.holds(tol)),
                "provable": to_value(&rep.provable),
                "provable_holds": rep.provable.iter().all(|c| c.holds(tol)),
                "w0": parsed(rep.w0.to_json()?),
            }),
        ),
    )
}

pub fn demo(opts: Opts) -> Result<(), CliError> {
    check_outputs(&opts)?;
    let op: DemoOperator = opts.op.as_deref().unwrap_or("christ-goldberg").parse()?;
    let p = exponent(opts.p, "p", None)?;
    let p0 = exponent(opts.p0, "p0", None)?;
    let suite = standard_suite(opts.level.unwrap_or(5))?;
    let rows = extrapolation_demo(op, p0, p, &suite, &test_field, &rescale_config(&opts))?;
    match opts.format.as_deref().unwrap_or("csv") {
        "csv" => write_text(opts.out.as_deref(), &demo_csv(&rows)),
        "json" => emit(&opts, &report("demo", &opts, json!({ "operator": op.name(), "rows": to_value(&rows) }))),
        other => Err(CliError::Validation(format!("unknown format '{other}'"))),
    }
}
