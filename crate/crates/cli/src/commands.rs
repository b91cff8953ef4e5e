use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use sma_core::io::{JordanSpecFile, LoadedOrder, MatrixFile, QuasiOrderFile};
use sma_core::jordan::{recover_form, JordanSpec, MatrixMap};
use sma_core::preservers::{counterexample, remark_gallery, verify_preserver, GalleryKind, MapUnderTest, PreserverConfig, PreserverReport};
use sma_core::quasiorder::DENSITY_SCAN_LIMIT;
use sma_core::{Error, Partition, QuasiOrder};

use crate::{selftest, Cli, Command, MapKind, Property};

pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl Output {
    fn json(value: &impl Serialize, pretty: bool, passed: bool) -> Result<Self> {
        let mut text = if pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? };
        text.push('\n');
        Ok(Output { text, passed })
    }
}

pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Analyze { order } => analyze(cli, &load_order(order)?),
        Command::Embed { spec } => embed(cli, &load_spec(spec)?),
        Command::Verify { order, map, spec, properties } => {
            let phi = match spec {
                Some(path) => {
                    let spec = load_spec(path)?;
                    let embedding = spec.build();
                    MapUnderTest::new(spec.order().clone(), "jordan embedding", move |x| embedding.apply(x))
                }
                None => {
                    let path = order.as_deref().context("verify needs a quasi-order file or --spec")?;
                    named_map(&load_order(path)?.order, *map)?
                }
            };
            verify(cli, &phi, properties)
        }
        Command::Counterexample { order } => counterexample_cmd(cli, &load_order(order)?.order),
        Command::Recover { spec } => recover(cli, &load_spec(spec)?),
        Command::Selftest { golden, write_golden } => selftest::run(cli, golden.as_deref(), write_golden.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_order(path: &Path) -> Result<LoadedOrder> {
    let file: QuasiOrderFile = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.load()?)
}

fn load_spec(path: &Path) -> Result<JordanSpec> {
    let file: JordanSpecFile = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.load()?)
}

fn one_based(p: &Partition) -> Vec<Vec<usize>> {
    p.blocks().iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()
}

pub(crate) fn analysis(loaded: &LoadedOrder) -> Result<Value> {
    let q = &loaded.order;
    let ci = q.condition_i();
    let bt = q.block_triangular_permutation()?;
    let upper = q.block_upper_triangular_form()?;
    let dense = if q.n() <= DENSITY_SCAN_LIMIT { Some(q.rank_one_density()?) } else { None };
    let verdict = if ci.holds { "all preservers Jordan: YES" } else { "all preservers Jordan: NO" };
    Ok(json!({
        "n": q.n(),
        "added": loaded.added,
        "components": one_based(&q.components()),
        "mutual_classes": one_based(&q.mutual_classes()),
        "two_free": q.is_two_free(),
        "condition_i": {
            "holds": ci.holds,
            "witness": ci.witness.map(|(r, s)| [r + 1, s + 1]),
        },
        "symmetric": q.is_symmetric(),
        "semisimple": q.is_symmetric(),
        "block_form": {
            "permutation": bt.perm.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "block_sizes": bt.block_sizes,
            "block_upper_triangular": upper.is_some(),
        },
        "rank_one_dense": dense,
        "verdict": verdict,
    }))
}

fn analyze(cli: &Cli, loaded: &LoadedOrder) -> Result<Output> {
    Output::json(&analysis(loaded)?, cli.pretty, true)
}

fn embed(cli: &Cli, spec: &JordanSpec) -> Result<Output> {
    let units: Vec<Value> = spec
        .build()
        .unit_table()
        .into_iter()
        .map(|((i, j), m)| json!({ "unit": [i + 1, j + 1], "image": MatrixFile::from(m) }))
        .collect();
    Output::json(&json!({ "condition_number": spec.condition_number(), "units": units }), cli.pretty, true)
}

fn named_map(order: &QuasiOrder, kind: MapKind) -> Result<MapUnderTest> {
    let gallery = |k| remark_gallery(order, k).map_err(anyhow::Error::from);
    match kind {
        MapKind::Identity => Ok(MapUnderTest::identity(order)),
        MapKind::Transpose => Ok(MapUnderTest::new(order.clone(), "transpose", |x| x.transpose())),
        MapKind::Counterexample => Ok(counterexample(order)?.map),
        MapKind::Scaling => gallery(GalleryKind::Scaling),
        MapKind::DetTwist => gallery(GalleryKind::DetTwist),
        MapKind::DiagShift => gallery(GalleryKind::DiagShift),
        MapKind::NoninjectiveJordan => gallery(GalleryKind::NoninjectiveJordan),
    }
}

fn config(cli: &Cli) -> PreserverConfig {
    let mut cfg = PreserverConfig { seed: cli.seed, ..PreserverConfig::default() };
    if let Some(n) = cli.samples {
        cfg.n_samples = n;
    }
    if let Some(tol) = cli.tol {
        cfg.spectrum_tol = tol;
        cfg.commutativity_tol = tol;
        cfg.injectivity_tol = tol;
        cfg.linearity_tol = tol;
    }
    cfg
}

fn property_passed(report: &PreserverReport, p: Property) -> bool {
    match p {
        Property::Spectrum => report.spectrum.passed,
        Property::Commutativity => report.commutativity.passed,
        Property::Injectivity => report.injectivity.passed,
        Property::Additivity => report.additivity.passed,
        Property::Homogeneity => report.homogeneity.passed,
    }
}

fn verify(cli: &Cli, phi: &MapUnderTest, properties: &[Property]) -> Result<Output> {
    let report = verify_preserver(phi, &config(cli));
    let failed: Vec<String> = properties.iter().filter(|&&p| !property_passed(&report, p)).map(|p| p.to_string()).collect();
    let value = json!({
        "report": report,
        "is_preserver": report.is_preserver(),
        "is_linear": report.is_linear(),
        "requested": properties.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "failed": failed,
    });
    Output::json(&value, cli.pretty, failed.is_empty())
}

fn counterexample_cmd(cli: &Cli, order: &QuasiOrder) -> Result<Output> {
    let ce = match counterexample(order) {
        Ok(ce) => ce,
        Err(Error::ConditionHolds) => {
            let value = json!({ "condition_i": true, "error": Error::ConditionHolds.to_string() });
            return Output::json(&value, cli.pretty, false);
        }
        Err(e) => return Err(e.into()),
    };
    let report = verify_preserver(&ce.map, &config(cli));
    let passed = report.is_preserver() && !report.additivity.passed;
    let value = json!({
        "case": ce.case,
        "pair": [ce.r + 1, ce.s + 1],
        "additivity_witness": ce.additivity_witness(),
        "report": report,
        "nonlinear_preserver": passed,
    });
    Output::json(&value, cli.pretty, passed)
}

fn recover(cli: &Cli, spec: &JordanSpec) -> Result<Output> {
    let phi = spec.build();
    let tol = cli.tol.unwrap_or(1e-8);
    match recover_form(&phi, spec.order(), tol, cli.seed) {
        Ok(rec) => {
            let value = json!({
                "recovered": JordanSpecFile::from_spec(&rec.spec),
                "rho_m": QuasiOrderFile::from_order(&rec.rho_m),
                "rho_a": QuasiOrderFile::from_order(&rec.rho_a),
                "max_error": rec.max_error,
            });
            Output::json(&value, cli.pretty, true)
        }
        Err(e) => Output::json(&json!({ "error": e.to_string() }), cli.pretty, false),
    }
}
