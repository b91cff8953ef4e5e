//! Built-in examples with known answers, compared against a golden file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use sma_core::cocycle::{cocycle_space, seven_point_map, TransitiveMap, Triviality};
use sma_core::io::QuasiOrderFile;
use sma_core::jordan::{
    central_idempotents, random_spec, recover_form, verify_antimultiplicative, verify_jordan, verify_multiplicative,
    CentralIdempotent, JordanSpec,
};
use sma_core::preservers::{counterexample, verify_preserver, PreserverConfig};
use sma_core::quasiorder::examples::{corner_4, m2_plus_point, seven_point, two_blocks};
use sma_core::{CMatrix, Error, QuasiOrder};

use crate::commands::{analysis, Output};
use crate::Cli;

const GOLDEN: &str = include_str!("../golden/selftest.json");

/// Relative tolerance for numbers in the golden file.
pub const NUMERIC_TOL: f64 = 1e-9;

const SAMPLES: usize = 200;

fn named_orders() -> Vec<(&'static str, QuasiOrder)> {
    vec![
        ("corner_4", corner_4()),
        ("seven_point", seven_point()),
        ("two_blocks", two_blocks()),
        ("m2_plus_point", m2_plus_point()),
        ("diagonal_3", QuasiOrder::diagonal(3).expect("n > 0")),
        ("upper_triangular_3", QuasiOrder::upper_triangular(3).expect("n > 0")),
    ]
}

fn complex(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn compute() -> Result<BTreeMap<String, Value>> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: Value| {
        out.insert(k.to_string(), v);
    };

    let counts: Vec<usize> = (1..=4).map(|n| QuasiOrder::enumerate(n).map(|v| v.len())).collect::<Result<_, _>>()?;
    put("enumeration_counts", json!(counts));

    for (name, q) in named_orders() {
        let loaded = QuasiOrderFile::from_order(&q).load()?;
        put(&format!("analyze/{name}"), analysis(&loaded)?);
        put(&format!("idempotents/{name}"), json!(central_idempotents(&q)?.len()));
        put(&format!("cocycle_gap/{name}"), json!(cocycle_space(&q).gap()));
    }

    let g = seven_point_map();
    if let Triviality::Nontrivial { walk, product } = g.triviality() {
        put("seven_point/walk", json!(walk.iter().map(|v| v + 1).collect::<Vec<_>>()));
        put("seven_point/walk_product", complex(product));
    } else {
        put("seven_point/walk", Value::Null);
    }
    let q7 = seven_point();
    let altered: Vec<_> = q7
        .off_diagonal_pairs()
        .map(|(i, j)| (i, j, num_complex::Complex64::new(if (i, j) == (1, 3) { 2.0 } else { 1.0 }, 0.0)))
        .collect();
    let violation = match TransitiveMap::from_pairs(&q7, altered) {
        Err(Error::NotTransitive { i, j, k }) => json!([i + 1, j + 1, k + 1]),
        other => json!(format!("{other:?}")),
    };
    put("seven_point/altered_violation", violation);
    let x = [(0, 3), (0, 5), (1, 3), (1, 5)].iter().fold(CMatrix::zeros(7), |acc, &(i, j)| &acc + &CMatrix::unit(7, i, j));
    let gx = g.apply(&x)?;
    put("seven_point/g_star_ranks", json!([x.rank(1e-9), gx.rank(1e-9)]));

    let q6 = two_blocks();
    let p = CentralIdempotent::new(&q6, (0..6).map(|i| i < 3).collect())?;
    let phi = JordanSpec::new(q6.clone(), CMatrix::identity(6), TransitiveMap::identity(&q6), p)?.build();
    put(
        "two_blocks/block_transpose",
        json!({
            "jordan": verify_jordan(&phi, &q6, SAMPLES, 1e-8, 0).passed(),
            "multiplicative": verify_multiplicative(&phi, &q6, SAMPLES, 1e-8, 0).passed,
            "antimultiplicative": verify_antimultiplicative(&phi, &q6, SAMPLES, 1e-8, 0).passed,
        }),
    );

    let cfg = PreserverConfig { n_samples: SAMPLES, ..PreserverConfig::default() };
    for (name, q) in [("corner_4", corner_4()), ("m2_plus_point", m2_plus_point())] {
        let ce = counterexample(&q)?;
        let w = ce.additivity_witness();
        let report = verify_preserver(&ce.map, &cfg);
        put(
            &format!("counterexample/{name}"),
            json!({
                "case": ce.case,
                "pair": [ce.r + 1, ce.s + 1],
                "witness_defect": w.discrepancy,
                "preserver": report.is_preserver(),
                "additive": report.additivity.passed,
            }),
        );
    }

    let spec = random_spec(&q7, 0)?;
    let rec = recover_form(&spec.build(), &q7, 1e-8, 0)?;
    put(
        "recover/seven_point",
        json!({
            "p_matches": rec.spec.p() == spec.p(),
            "rho_a_pairs": rec.rho_a.off_diagonal_pairs().count(),
            "within_tolerance": rec.max_error <= 1e-8,
        }),
    );
    Ok(out)
}

fn numbers_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= NUMERIC_TOL * a.abs().max(b.abs()).max(1.0)
}

fn diff(path: &str, want: &Value, got: &Value, out: &mut Vec<String>) {
    match (want, got) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if !numbers_close(a, b) {
                out.push(format!("{path}: expected {a}, got {b}"));
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (k, (x, y)) in a.iter().zip(b).enumerate() {
                diff(&format!("{path}[{k}]"), x, y, out);
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            for (k, x) in a {
                match b.get(k) {
                    Some(y) => diff(&format!("{path}.{k}"), x, y, out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
            for k in b.keys().filter(|k| !a.contains_key(*k)) {
                out.push(format!("{path}.{k}: unexpected"));
            }
        }
        _ if want == got => {}
        _ => out.push(format!("{path}: expected {want}, got {got}")),
    }
}

/// Lines describing every difference between `golden` and `actual`.
pub fn compare(golden: &BTreeMap<String, Value>, actual: &BTreeMap<String, Value>) -> Vec<String> {
    let to_value = |m: &BTreeMap<String, Value>| Value::Object(m.clone().into_iter().collect());
    let mut out = Vec::new();
    diff("", &to_value(golden), &to_value(actual), &mut out);
    out.iter().map(|l| l.trim_start_matches('.').to_string()).collect()
}

pub fn run(cli: &Cli, golden: Option<&Path>, write: Option<&Path>) -> Result<Output> {
    let actual = compute()?;
    if let Some(path) = write {
        let text = serde_json::to_string_pretty(&actual)? + "\n";
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        return Ok(Output { text: format!("wrote {} entries to {}\n", actual.len(), path.display()), passed: true });
    }
    let golden_text = match golden {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => GOLDEN.to_string(),
    };
    let golden: BTreeMap<String, Value> = serde_json::from_str(&golden_text).context("parsing golden results")?;
    let mismatches = compare(&golden, &actual);
    let value = json!({ "passed": mismatches.is_empty(), "checked": actual.len(), "mismatches": mismatches });
    let mut text = if cli.pretty { serde_json::to_string_pretty(&value)? } else { serde_json::to_string(&value)? };
    text.push('\n');
    Ok(Output { text, passed: mismatches.is_empty() })
}
