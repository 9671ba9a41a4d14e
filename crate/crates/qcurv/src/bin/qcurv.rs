//! Command-line front end emitting machine-readable tables and verdicts.
//!
//! Every payload is deterministic for fixed flags and carries a top-level
//! `"schema": "1"` field; `--meta` attaches a timestamp in a separate
//! object. Exact rationals are serialized as decimal strings, with float
//! companions only in `*_decimal` fields.
//!
//! Exit codes: 0 success, 2 domain/precondition error (JSON error object on
//! stdout), 3 verification failure (violating cell on stdout), 64 usage.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qcurv::constants::{b_nk, big_C, c_nkl, c_nkl_expanded, mass_coeff, scan_positivity, small_c};
use qcurv::energy::{
    certify, energy_expansion_u, mass_expansion, threshold, threshold_rational,
    threshold_rational_product, PointData,
};
use qcurv::exactnum::{rational_to_f64, sphere_volume, ExactNumber};
use qcurv::quad::integrate;
use qcurv::radial::{laplacian_pow_u, BubbleParams, RadialProfile};
use qcurv::sphere::{
    coercivity_check, gjms_eigenvalue, green_zonal_partial_sum, harmonic_dimension,
    sharpness_check, SphereSpec,
};
use qcurv::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "qcurv", version, about = "Exact constants, energy expansions and existence verdicts for the GJMS equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Attach a metadata object (timestamp) alongside the payload.
    #[arg(long, global = true)]
    meta: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Named constants at one parameter cell.
    Constants {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        k: i64,
        /// Moment index; when given, emits c(n,k,l) instead of the
        /// cell-level constants.
        #[arg(long)]
        l: Option<i64>,
    },
    /// Exact-sign positivity scan of C(n,k) over a grid.
    Scan {
        /// Inclusive k range, formatted "lo:hi".
        #[arg(long, value_parser = parse_range, default_value = "2:20")]
        k_range: (i64, i64),
        /// Scan n from 2k+4 through 2k+4+margin.
        #[arg(long, default_value_t = 120)]
        n_margin: i64,
    },
    /// Asymptotic expansion of the bubble energy in the scale μ.
    Energy {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        f: f64,
        #[arg(long, default_value_t = 0.0)]
        lap_f: f64,
        #[arg(long, default_value_t = 0.0)]
        bilap_f: f64,
        #[arg(long, default_value_t = 0.0)]
        weyl_sq: f64,
        #[arg(long)]
        mass: Option<f64>,
        /// Also evaluate the truncated series at this scale.
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Mass-driven expansion for low dimensions or the conformally flat case.
    Mass {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Existence verdict from pointwise data at a maximum point of f.
    Certify {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        f: f64,
        #[arg(long, default_value_t = 0.0)]
        lap_f: f64,
        #[arg(long, default_value_t = 0.0)]
        bilap_f: f64,
        #[arg(long, default_value_t = 0.0)]
        weyl_sq: f64,
        #[arg(long)]
        mass: Option<f64>,
        /// The metric is locally conformally flat.
        #[arg(long)]
        lcf: bool,
        /// All derivatives of f through order n-2k vanish at the point.
        #[arg(long)]
        jets_vanish: bool,
        /// Global maximum of f; defaults to the pointwise value.
        #[arg(long)]
        max_f: Option<f64>,
    },
    /// Sphere spectrum, coercivity, sharpness and the Green's function probe.
    Sphere {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        k: i64,
        /// Harmonic degree for the eigenvalue/dimension report.
        #[arg(long, default_value_t = 0)]
        l: i64,
        /// Truncation degree for the spectral probes.
        #[arg(long, default_value_t = 400)]
        l_max: u32,
        /// Geodesic angle in (0, π] for the Green's function probe.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Cross-checks of the exact formulas against independent oracles.
    Verify {
        /// Quadrature request tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Exact value as a decimal string: "p" or "p/q" for rationals, and the
/// monomial coefficient with a half-power of π tag otherwise.
fn exact_json(x: &ExactNumber) -> Value {
    if let Some(q) = x.as_rational() {
        return Value::String(q.to_string());
    }
    if let Some((h, q)) = x.as_monomial() {
        return json!({ "rational": q.to_string(), "pi_halfpower": h.twice() });
    }
    json!({ "decimal": x.to_f64() })
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Unsupported(_) => "unsupported",
        Error::Precondition(_) => "precondition",
        Error::IncompleteRuleSet(_) => "incomplete_rule_set",
        Error::QuadratureBudget { .. } => "quadrature_budget",
    }
}

fn emit_error(e: &Error, parameter: Option<&str>) -> i32 {
    let obj = json!({
        "schema": "1",
        "code": error_code(e),
        "message": e.to_string(),
        "parameter": parameter,
    });
    println!("{obj}");
    2
}

fn finish(mut payload: Value, meta: bool) -> i32 {
    if meta {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        payload["meta"] = json!({ "generated_at_unix": now });
    }
    println!("{payload}");
    0
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(64);
                }
            }
        }
    };
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    match cli.cmd {
        Cmd::Constants { n, k, l } => constants_cmd(n, k, l, cli.format, cli.meta),
        Cmd::Scan { k_range, n_margin } => scan_cmd(k_range, n_margin, cli.format, cli.meta),
        Cmd::Energy { n, k, f, lap_f, bilap_f, weyl_sq, mass, mu } => {
            energy_cmd(n, k, f, lap_f, bilap_f, weyl_sq, mass, mu, cli.format, cli.meta)
        }
        Cmd::Mass { n, k, f, mass, mu } => mass_cmd(n, k, f, mass, mu, cli.format, cli.meta),
        Cmd::Certify { n, k, f, lap_f, bilap_f, weyl_sq, mass, lcf, jets_vanish, max_f } => {
            certify_cmd(n, k, f, lap_f, bilap_f, weyl_sq, mass, lcf, jets_vanish, max_f, cli.format, cli.meta)
        }
        Cmd::Sphere { n, k, l, l_max, theta } => {
            sphere_cmd(n, k, l, l_max, theta, cli.format, cli.meta)
        }
        Cmd::Verify { tol } => verify_cmd(tol, cli.format, cli.meta),
    }
}

fn require_json(format: Format) -> Result<(), i32> {
    if format == Format::Csv {
        Err(emit_error(
            &Error::Unsupported("csv output is only available for tabular subcommands".into()),
            Some("--format"),
        ))
    } else {
        Ok(())
    }
}

fn constants_cmd(n: i64, k: i64, l: Option<i64>, format: Format, meta: bool) -> i32 {
    if let Some(l) = l {
        let value = match c_nkl(n, k, l) {
            Ok(v) => v,
            Err(e) => return emit_error(&e, Some("--l")),
        };
        if format == Format::Csv {
            println!("n,k,l,c_nkl,c_nkl_decimal");
            println!("{n},{k},{l},{},{}", exact_display(&value), value.to_f64());
            return 0;
        }
        return finish(
            json!({
                "schema": "1",
                "n": n, "k": k, "l": l,
                "c_nkl": exact_json(&value),
                "c_nkl_decimal": value.to_f64(),
            }),
            meta,
        );
    }
    let big = match big_C(n, k) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let small = match small_c(n, k) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let b = match b_nk(n, k) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let m = match mass_coeff(n, k) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let thr = match threshold(n, k) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    if format == Format::Csv {
        println!("n,k,big_C,small_c,b_nk,mass_coeff,threshold_decimal");
        println!(
            "{n},{k},{},{},{},{},{}",
            exact_display(&big),
            exact_display(&small),
            exact_display(&b),
            exact_display(&m),
            thr.numeric
        );
        return 0;
    }
    finish(
        json!({
            "schema": "1",
            "n": n, "k": k,
            "big_C": exact_json(&big),
            "big_C_decimal": big.to_f64(),
            "small_c": exact_json(&small),
            "b_nk": exact_json(&b),
            "mass_coeff": exact_json(&m),
            "threshold": exact_json(&thr.rational),
            "threshold_omega_power": [thr.omega_power.0, thr.omega_power.1],
            "threshold_decimal": thr.numeric,
        }),
        meta,
    )
}

fn exact_display(x: &ExactNumber) -> String {
    match exact_json(x) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn scan_cmd(k_range: (i64, i64), n_margin: i64, format: Format, meta: bool) -> i32 {
    let report = match scan_positivity(k_range.0..=k_range.1, n_margin) {
        Ok(r) => r,
        Err(e) => return emit_error(&e, Some("--n-margin")),
    };
    let failed = !report.violations.is_empty();
    if format == Format::Csv {
        println!("n,k,sign,value_decimal");
        for row in &report.rows {
            println!("{},{},{},{}", row.n, row.k, row.sign, row.value_decimal);
        }
        return if failed { 3 } else { 0 };
    }
    let payload = json!({
        "schema": "1",
        "k_range": [k_range.0, k_range.1],
        "n_margin": n_margin,
        "cells": report.rows.len(),
        "rows": report.rows,
        "violations": report.violations,
    });
    let code = finish(payload, meta);
    if failed {
        3
    } else {
        code
    }
}

#[allow(clippy::too_many_arguments)]
fn energy_cmd(
    n: i64,
    k: i64,
    f: f64,
    lap_f: f64,
    bilap_f: f64,
    weyl_sq: f64,
    mass: Option<f64>,
    mu: Option<f64>,
    format: Format,
    meta: bool,
) -> i32 {
    if let Err(code) = require_json(format) {
        return code;
    }
    let p = match PointData::new(n, k, f, lap_f, bilap_f, weyl_sq, mass) {
        Ok(p) => p,
        Err(e) => return emit_error(&e, Some("--f")),
    };
    let series = match energy_expansion_u(&p, true) {
        Ok(s) => s,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let mut payload = json!({ "schema": "1", "n": n, "k": k, "expansion": series.to_json() });
    if let Some(mu) = mu {
        payload["mu"] = json!(mu);
        payload["value_at_mu"] = json!(series.eval(mu));
    }
    finish(payload, meta)
}

fn mass_cmd(n: i64, k: i64, f: f64, mass: f64, mu: Option<f64>, format: Format, meta: bool) -> i32 {
    if let Err(code) = require_json(format) {
        return code;
    }
    let p = match PointData::new(n, k, f, 0.0, 0.0, 0.0, Some(mass)) {
        Ok(p) => p,
        Err(e) => return emit_error(&e, Some("--mass")),
    };
    let series = match mass_expansion(&p) {
        Ok(s) => s,
        Err(e) => return emit_error(&e, Some("--mass")),
    };
    let mut payload = json!({ "schema": "1", "n": n, "k": k, "expansion": series.to_json() });
    if let Some(mu) = mu {
        payload["mu"] = json!(mu);
        payload["value_at_mu"] = json!(series.eval(mu));
    }
    finish(payload, meta)
}

#[allow(clippy::too_many_arguments)]
fn certify_cmd(
    n: i64,
    k: i64,
    f: f64,
    lap_f: f64,
    bilap_f: f64,
    weyl_sq: f64,
    mass: Option<f64>,
    lcf: bool,
    jets_vanish: bool,
    max_f: Option<f64>,
    format: Format,
    meta: bool,
) -> i32 {
    if let Err(code) = require_json(format) {
        return code;
    }
    let p = match PointData::new(n, k, f, lap_f, bilap_f, weyl_sq, mass) {
        Ok(p) => p,
        Err(e) => return emit_error(&e, Some("--f")),
    };
    let verdict = match certify(&p, lcf, jets_vanish, max_f.unwrap_or(f)) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--max-f")),
    };
    finish(
        json!({
            "schema": "1",
            "n": n, "k": k,
            "verdict": verdict,
        }),
        meta,
    )
}

fn sphere_cmd(n: i64, k: i64, l: i64, l_max: u32, theta: Option<f64>, format: Format, meta: bool) -> i32 {
    if let Err(code) = require_json(format) {
        return code;
    }
    let spec = match SphereSpec::new(n, k, l_max) {
        Ok(s) => s,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let ev = match gjms_eigenvalue(n, k, l) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--l")),
    };
    let dim = match harmonic_dimension(n, l) {
        Ok(v) => v,
        Err(e) => return emit_error(&e, Some("--l")),
    };
    let report = match coercivity_check(&spec) {
        Ok(r) => r,
        Err(e) => return emit_error(&e, Some("--l-max")),
    };
    let sharp = match sharpness_check(n, k) {
        Ok(s) => s,
        Err(e) => return emit_error(&e, Some("--n")),
    };
    let mut payload = json!({
        "schema": "1",
        "n": n, "k": k, "l": l, "l_max": l_max,
        "eigenvalue": ev.to_string(),
        "eigenvalue_decimal": rational_to_f64(&ev),
        "harmonic_dimension": dim.to_string(),
        "coercivity": {
            "min_eigenvalue": report.min_eigenvalue.to_string(),
            "min_eigenvalue_decimal": rational_to_f64(&report.min_eigenvalue),
            "min_degree": report.min_degree,
            "positive": report.positive,
            "factors_monotone": report.factors_monotone,
        },
        "sharpness": sharp,
    });
    if let Some(theta) = theta {
        match green_zonal_partial_sum(&spec, theta) {
            Ok(probe) => payload["green_probe"] = json!(probe),
            Err(e) => return emit_error(&e, Some("--theta")),
        }
    }
    finish(payload, meta)
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: Value,
}

fn verify_cmd(tol: f64, format: Format, meta: bool) -> i32 {
    if let Err(code) = require_json(format) {
        return code;
    }
    if !(tol > 0.0) {
        return emit_error(&Error::Domain("tolerance must be positive".into()), Some("--tol"));
    }
    let mut checks = Vec::new();

    // Sharp constant: Beta form equals the telescoped product, and the
    // bottom sphere eigenvalue agrees, across the full identity grid.
    let mut cell: Option<(i64, i64)> = None;
    'outer: for k in 1..=6i64 {
        for n in (2 * k + 1)..=(2 * k + 20) {
            let beta_form = threshold_rational(n, k).unwrap().as_rational().unwrap();
            if beta_form != threshold_rational_product(n, k).unwrap()
                || !sharpness_check(n, k).unwrap()
            {
                cell = Some((n, k));
                break 'outer;
            }
        }
    }
    checks.push(Check {
        name: "threshold_product_and_sharpness",
        passed: cell.is_none(),
        detail: json!({ "grid": "k<=6, n<=2k+20", "violating_cell": cell }),
    });

    // The constant-term identity in the mass expansion: (n-2k)/n · 2*_k = 2
    // exactly, plus the spot value 64/3 at (n, k) = (3, 1).
    let spot = mass_coeff(3, 1).unwrap();
    let spot_ok = spot.as_rational().map(|q| q.to_string() == "64/3").unwrap_or(false);
    let mut exp_ok = true;
    for k in 1..=10i64 {
        for n in (2 * k + 1)..=60 {
            // 2*_k = 2n/(n-2k); the cancellation is a rational identity.
            let lhs = num_rational::BigRational::new((2 * (n - 2 * k)).into(), (n - 2 * k).into());
            exp_ok &= lhs == num_rational::BigRational::from_integer(2.into());
        }
    }
    checks.push(Check {
        name: "mass_expansion_identities",
        passed: spot_ok && exp_ok,
        detail: json!({ "mass_coeff_3_1": exact_display(&spot) }),
    });

    // Numeric quadrature of the bubble energy against the closed form.
    let mut quad_details = Vec::new();
    let mut quad_ok = true;
    for (n, k) in [(8i64, 2i64), (10, 3)] {
        let p = BubbleParams::new(n, k, 1.0).unwrap();
        let integrand = |rho: f64| {
            let r = rho * rho;
            rho.powi((n - 1) as i32) * p.u(r) * laplacian_pow_u(&p, k, r).unwrap()
        };
        let radial = integrate(integrand, 0.0, 1e6, tol.max(1e-12)).unwrap();
        let value = sphere_volume((n - 1) as u32).unwrap().to_f64() * radial;
        let expected = threshold_rational(n, k).unwrap().to_f64()
            * sphere_volume(n as u32).unwrap().to_f64()
            * 2.0f64.powi((2 * k - n) as i32);
        let rel = ((value - expected) / expected).abs();
        quad_ok &= rel < 1e-6;
        quad_details.push(json!({ "n": n, "k": k, "relative_error": rel }));
    }
    checks.push(Check {
        name: "bubble_energy_quadrature",
        passed: quad_ok,
        detail: json!(quad_details),
    });

    // Laplacian powers of the bubble against the profile recursion oracle.
    let mut lap_ok = true;
    let mut lap_worst = 0.0f64;
    for k in 1..=5i64 {
        let n = 2 * k + 4;
        let p = BubbleParams::new(n, k, 1.0).unwrap();
        let mut profile = RadialProfile::bubble(n, k);
        for l in 1..=k {
            profile = profile.radial_laplacian(n);
            for step in 1..=20 {
                let r = step as f64 * 0.35;
                let closed = laplacian_pow_u(&p, l, r).unwrap();
                let oracle = profile.eval(r);
                let rel = ((closed - oracle) / oracle.abs().max(1e-300)).abs();
                lap_worst = lap_worst.max(rel);
                lap_ok &= rel < 1e-7;
            }
        }
    }
    checks.push(Check {
        name: "laplacian_power_recursion_oracle",
        passed: lap_ok,
        detail: json!({ "worst_relative_error": lap_worst }),
    });

    // Spot scan of the energy constant's sign.
    let scan = scan_positivity(2..=6, 20).unwrap();
    checks.push(Check {
        name: "positivity_scan_spot",
        passed: scan.violations.is_empty(),
        detail: json!({ "cells": scan.rows.len(), "violations": scan.violations }),
    });

    // Maple-polynomial equivalence spot: the raw and expanded forms of
    // c(n,k,l) agree on a small grid.
    let mut cnkl_cell = None;
    'grid: for k in 3..=5i64 {
        for n in (2 * k + 4)..=(2 * k + 12) {
            for l in (k - 2)..=(2 * k - 4) {
                if c_nkl(n, k, l).unwrap() != c_nkl_expanded(n, k, l).unwrap() {
                    cnkl_cell = Some((n, k, l));
                    break 'grid;
                }
            }
        }
    }
    checks.push(Check {
        name: "cnkl_expanded_equivalence_spot",
        passed: cnkl_cell.is_none(),
        detail: json!({ "violating_cell": cnkl_cell }),
    });

    let all_passed = checks.iter().all(|c| c.passed);
    let payload = json!({
        "schema": "1",
        "tol": tol,
        "passed": all_passed,
        "checks": checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
            .collect::<Vec<_>>(),
    });
    let code = finish(payload, meta);
    if all_passed {
        code
    } else {
        3
    }
}
