//! One pass/fail line per acceptance criterion. Run with
//! `cargo test -p sma-core --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use sma_core::cocycle::{seven_point_map, Triviality};
use sma_core::io::order_from_json;
use sma_core::jordan::{
    random_spec, recover_form, verify_antimultiplicative, verify_jordan, verify_multiplicative, CentralIdempotent,
    JordanSpec, MatrixMap,
};
use sma_core::matalg::rank_one_closure_member;
use sma_core::preservers::{counterexample, verify_preserver, CaseKind, PreserverConfig};
use sma_core::quasiorder::examples::{m2_plus_point, two_blocks};
use sma_core::report::relative_gap;
use sma_core::sampling::{random_integer_in_sma, rng_for};
use sma_core::{CMatrix, QuasiOrder};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg.into()) }
}

fn units(n: usize, pairs: &[(usize, usize)], scale: &[f64]) -> CMatrix {
    pairs.iter().zip(scale).fold(CMatrix::zeros(n), |acc, (&(i, j), &v)| &acc + &CMatrix::unit(n, i, j).scale(c(v)))
}

/// `(ρ(i) ∪ ρ⁻¹(i)) ∩ (ρ(j) ∪ ρ⁻¹(j))` has at least three points for every
/// off-diagonal pair.
fn condition_i_oracle(q: &QuasiOrder) -> bool {
    let n = q.n();
    let nb = |i: usize| (0..n).filter(move |&k| q.contains(i, k) || q.contains(k, i));
    q.off_diagonal_pairs().all(|(i, j)| nb(i).filter(|&k| nb(j).any(|l| l == k)).count() >= 3)
}

/// Sizes of the classes of the equivalence generated by `ρ`.
fn class_sizes(q: &QuasiOrder) -> Vec<usize> {
    let n = q.n();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for (i, j) in q.off_diagonal_pairs() {
            let m = label[i].min(label[j]);
            if label[i] != m || label[j] != m {
                label[i] = m;
                label[j] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&r| label[r] == r).map(|r| label.iter().filter(|&&l| l == r).count()).collect()
}

fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    (1..=n)
        .flat_map(|k| {
            compositions(n - k).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    permutations(n - 1)
        .into_iter()
        .flat_map(|p| {
            (0..n).map(move |pos| {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                q
            })
        })
        .collect()
}

/// Some relabelling of `ρ` is exactly a block upper-triangular pattern.
fn block_upper_oracle(q: &QuasiOrder) -> bool {
    let n = q.n();
    permutations(n).iter().any(|pi| {
        compositions(n).iter().any(|sizes| {
            let mut block = Vec::new();
            for (b, &s) in sizes.iter().enumerate() {
                block.extend(std::iter::repeat_n(b, s));
            }
            (0..n).all(|a| (0..n).all(|b| q.contains(pi[a], pi[b]) == (block[a] <= block[b])))
        })
    })
}

fn corner_example() -> Outcome {
    let loaded = order_from_json(r#"{"n": 4, "pairs": [[1, 3], [1, 4], [2, 3], [2, 4]]}"#).map_err(|e| e.to_string())?;
    let q = loaded.order;
    ensure(q.len() == 8, format!("expected 8 pairs, got {}", q.len()))?;
    let a = units(4, &[(0, 2), (0, 3), (1, 2), (1, 3)], &[1.0; 4]);
    let m = rank_one_closure_member(&a, &q, 1e-12).map_err(|e| e.to_string())?;
    ensure(!m.member, "A reported inside the closure")?;
    let ci = q.condition_i();
    ensure(!ci.holds && ci.witness == Some((0, 2)), format!("condition (i) result {ci:?}"))?;
    ensure(!condition_i_oracle(&q), "oracle disagrees")?;
    Ok("A outside the closure, condition (i) fails at (1,3)".into())
}

fn seven_point_example() -> Outcome {
    let g = seven_point_map();
    let q = g.order().clone();
    ensure(q.condition_i().holds && condition_i_oracle(&q), "condition (i) should hold")?;
    ensure(g.is_transitive(), "g is not transitive")?;
    let Triviality::Nontrivial { walk, product } = g.triviality() else {
        return Err("g classified trivial".into());
    };
    let x = units(7, &[(0, 3), (0, 5), (1, 3), (1, 5)], &[1.0; 4]);
    let gx = g.apply(&x).map_err(|e| e.to_string())?;
    let want = units(7, &[(0, 3), (0, 5), (1, 3), (1, 5)], &[1.0, 1.0, 2.0, 1.0]);
    ensure(gx == want, "g*(X) differs from the displayed matrix")?;
    let s = gx.singular_values();
    ensure(s[1] > 0.3, format!("second singular value {}", s[1]))?;
    let walk: Vec<usize> = walk.iter().map(|v| v + 1).collect();
    Ok(format!("walk {walk:?} has product {}, sigma_2 = {:.4}", product.re, s[1]))
}

fn two_block_example() -> Outcome {
    let q = two_blocks();
    let p = CentralIdempotent::new(&q, (0..6).map(|i| i < 3).collect()).map_err(|e| e.to_string())?;
    let spec = JordanSpec::new(q.clone(), CMatrix::identity(6), sma_core::cocycle::TransitiveMap::identity(&q), p)
        .map_err(|e| e.to_string())?;
    let phi = spec.build();
    let jr = verify_jordan(&phi, &q, 1000, 1e-8, 0);
    ensure(jr.passed(), "Jordan checks failed")?;
    let m = verify_multiplicative(&phi, &q, 1000, 1e-8, 0);
    let a = verify_antimultiplicative(&phi, &q, 1000, 1e-8, 0);
    ensure(!m.passed && !m.witnesses.is_empty(), "multiplicative without witness")?;
    ensure(!a.passed && !a.witnesses.is_empty(), "antimultiplicative without witness")?;
    Ok(format!("Jordan on 10^3 samples, product defects {:.3} and {:.3}", m.worst.unwrap_or(0.0), a.worst.unwrap_or(0.0)))
}

fn preserver_config(n_samples: usize) -> PreserverConfig {
    PreserverConfig { n_samples, spectrum_tol: 1e-12, commutativity_tol: 1e-8, ..PreserverConfig::default() }
}

fn case_two() -> Outcome {
    let q = order_from_json(r#"{"n": 4, "pairs": [[1, 3], [1, 4], [2, 3], [2, 4]]}"#).map_err(|e| e.to_string())?.order;
    let ce = counterexample(&q).map_err(|e| e.to_string())?;
    ensure(ce.case == CaseKind::Corner && (ce.r, ce.s) == (0, 2), "unexpected construction")?;
    let mut x = CMatrix::unit(4, 0, 2);
    x[(0, 0)] = c(2.0);
    let want = units(4, &[(0, 0), (0, 2)], &[2.0, 0.5]);
    ensure(ce.map.apply(&x) == want, "phi(2E11 + E13) is not 2E11 + E13/2")?;
    let report = verify_preserver(&ce.map, &preserver_config(1000));
    ensure(report.spectrum.passed, format!("spectrum gap {:?}", report.spectrum.worst))?;
    ensure(report.commutativity.passed, format!("commutator {:?}", report.commutativity.worst))?;
    ensure(!report.additivity.passed, "map looks additive")?;
    Ok(format!(
        "spectrum gap {:.1e}, commutator {:.1e}, additivity defect {:.3}",
        report.spectrum.worst.unwrap_or(0.0),
        report.commutativity.worst.unwrap_or(0.0),
        report.additivity.worst.unwrap_or(0.0)
    ))
}

fn case_one() -> Outcome {
    let q = m2_plus_point();
    let ce = counterexample(&q).map_err(|e| e.to_string())?;
    ensure(ce.case == CaseKind::Block, "unexpected construction")?;
    let mut rng = rng_for(11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = sma_core::sampling::random_in_sma(&q, &mut rng);
        let y = ce.map.apply(&x);
        let scale = x.frobenius_norm().max(1.0);
        worst = worst.max((x.trace() - y.trace()).norm() / scale);
        worst = worst.max((x.determinant() - y.determinant()).norm() / scale.powi(3));
    }
    ensure(worst <= 1e-12, format!("det/trace drift {worst:e}"))?;
    let report = verify_preserver(&ce.map, &preserver_config(1000));
    ensure(report.spectrum.passed && report.commutativity.passed, "preserver checks failed")?;
    let w = ce.additivity_witness();
    ensure((w.discrepancy - 2.0).abs() < 1e-12, format!("witness defect {}", w.discrepancy))?;
    ensure(!report.additivity.passed, "map looks additive")?;
    Ok(format!("det/trace drift {worst:.1e}, psi(E12) + psi(E21) misses psi(E12 + E21) by {:.3}", w.discrepancy))
}

fn exhaustive_n3() -> Outcome {
    let orders = QuasiOrder::enumerate(3).map_err(|e| e.to_string())?;
    ensure(orders.len() == 29, format!("enumerated {} preorders", orders.len()))?;
    let mut checked = 0;
    for q in orders.iter().filter(|q| !q.is_diagonal()) {
        let a = q.condition_i().holds;
        let c = q.block_upper_triangular_form().map_err(|e| e.to_string())?.is_some();
        ensure(a == condition_i_oracle(q), format!("condition (i) oracle disagrees on\n{q}"))?;
        ensure(c == block_upper_oracle(q), format!("block form oracle disagrees on\n{q}"))?;
        ensure(a == c, format!("(a) and (c) differ on\n{q}"))?;
        checked += 1;
    }
    Ok(format!("29 preorders enumerated, biconditional holds on all {checked} non-diagonal ones"))
}

fn exhaustive_n4() -> Outcome {
    let cfg = PreserverConfig { n_samples: 200, ..PreserverConfig::default() };
    let mut checked = 0;
    for q in QuasiOrder::enumerate(4).map_err(|e| e.to_string())? {
        if condition_i_oracle(&q) {
            continue;
        }
        let ce = counterexample(&q).map_err(|e| format!("{e} on\n{q}"))?;
        let r = verify_preserver(&ce.map, &cfg);
        ensure(r.spectrum.passed && r.commutativity.passed && !r.additivity.passed, format!("report fails on\n{q}"))?;
        checked += 1;
    }
    Ok(format!("{checked} preorders fail condition (i), each counterexample verified"))
}

fn random_orders(count: usize, seed: u64) -> Vec<QuasiOrder> {
    let mut rng = rng_for(seed, 0);
    let mut out: Vec<QuasiOrder> = Vec::new();
    while out.len() < count {
        let n = rng.random_range(3..=6);
        let k = rng.random_range(0..=n * 2);
        let pairs: Vec<(usize, usize)> = (0..k).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        let q = QuasiOrder::generated_by(n, pairs).expect("n in range");
        if condition_i_oracle(&q) && !q.is_diagonal() && !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

fn round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, q) in random_orders(10, 2024).iter().enumerate() {
        for t in 0..10 {
            let seed = (k * 10 + t) as u64;
            let spec = random_spec(q, seed).map_err(|e| e.to_string())?;
            let phi = spec.build();
            let rec = recover_form(&phi, q, 1e-8, seed).map_err(|e| format!("{e} on\n{q}"))?;
            let again = rec.spec.build();
            for (i, j) in q.pairs() {
                let e = CMatrix::unit(q.n(), i, j);
                let want = phi.apply(&e);
                worst = worst.max(relative_gap(&again.apply(&e), &want, want.frobenius_norm()));
            }
        }
    }
    ensure(worst <= 1e-8, format!("worst unit error {worst:e}"))?;
    Ok(format!("100 specs over 10 orders, worst unit error {worst:.1e}"))
}

fn condition_implies_two_free() -> Outcome {
    let mut with_condition = 0;
    for q in QuasiOrder::enumerate(4).map_err(|e| e.to_string())? {
        let two_free = class_sizes(&q).iter().all(|&s| s != 2);
        ensure(two_free == q.is_two_free(), format!("2-free oracle disagrees on\n{q}"))?;
        if condition_i_oracle(&q) {
            with_condition += 1;
            ensure(two_free, format!("condition (i) without 2-freeness on\n{q}"))?;
        }
    }
    Ok(format!("{with_condition} preorders satisfy condition (i), all 2-free"))
}

fn flat_sharp_laws() -> Outcome {
    let mut rng = rng_for(5, 0);
    for t in 0..1000 {
        let n = rng.random_range(1..=5);
        let full = QuasiOrder::full(n).expect("n in range");
        let x = random_integer_in_sma(&full, &mut rng);
        let y = random_integer_in_sma(&full, &mut rng);
        let k = rng.random_range(0..=3);
        let mut set: Vec<usize> = rand::seq::index::sample(&mut rng, n + k, k).into_vec();
        set.sort_unstable();
        let sh = |m: &CMatrix| m.sharp(&set).map_err(|e| e.to_string());
        ensure(sh(&(&x * &y))? == &sh(&x)? * &sh(&y)?, format!("sharp not multiplicative at {t}"))?;
        ensure(sh(&(&x + &y))? == &sh(&x)? + &sh(&y)?, format!("sharp not additive at {t}"))?;
        ensure(sh(&x)?.flat(&set).map_err(|e| e.to_string())? == x, format!("flat does not undo sharp at {t}"))?;
        // one index at a time, in increasing order
        let mut step = x.clone();
        for &s in &set {
            step = step.sharp(&[s]).map_err(|e| e.to_string())?;
        }
        ensure(step == sh(&x)?, format!("sharp does not decompose at {t}"))?;
        // flat is multiplicative on matrices supported off the deleted set
        let (bx, by) = (sh(&x)?, sh(&y)?);
        let fl = |m: &CMatrix| m.flat(&set).map_err(|e| e.to_string());
        if k > 0 {
            ensure(fl(&(&bx * &by))? == &fl(&bx)? * &fl(&by)?, format!("flat not multiplicative at {t}"))?;
        }
    }
    Ok("10^3 integer triples, exact equality".into())
}

fn run(name: &str, limit: Option<Duration>, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(msg), Some(l)) if elapsed > l => Err(format!("{msg}; took {elapsed:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    match &outcome {
        Ok(msg) => println!("PASS  {name:<28} {elapsed:>10.2?}  {msg}"),
        Err(msg) => println!("FAIL  {name:<28} {elapsed:>10.2?}  {msg}"),
    }
    outcome.is_ok()
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 10] = [
        ("corner example", Some(secs(1)), corner_example),
        ("seven-point example", Some(secs(1)), seven_point_example),
        ("two-block Jordan example", None, two_block_example),
        ("corner counterexample", None, case_two),
        ("block counterexample", None, case_one),
        ("n=3 exhaustive", Some(secs(5)), exhaustive_n3),
        ("n=4 exhaustive", Some(secs(600)), exhaustive_n4),
        ("recovery round trip", None, round_trip),
        ("condition (i) => 2-free", None, condition_implies_two_free),
        ("flat/sharp laws", None, flat_sharp_laws),
    ];
    let failed: Vec<&str> = criteria.iter().filter(|(name, limit, f)| !run(name, *limit, *f)).map(|(n, _, _)| *n).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
