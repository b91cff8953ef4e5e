//! Sampled checks for spectrum and commutativity preservers on `A_ρ`, the
//! nonlinear preservers that exist exactly when condition (i) fails, and a
//! gallery of maps that drop one hypothesis at a time.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jordan::{classify_units, MatrixMap, UnitAction};
use crate::matalg::{nearby_diagonalizable, CMatrix};
use crate::quasiorder::QuasiOrder;
use crate::report::{relative_gap, witness, Check, Verdict, Witness};
use crate::sampling::{random_complex, random_diagonal, random_in_sma, rng_for};

type Eval = Arc<dyn Fn(&CMatrix) -> CMatrix + Send + Sync>;

/// A named map on `A_ρ`.
#[derive(Clone)]
pub struct MapUnderTest {
    pub domain: QuasiOrder,
    pub label: String,
    eval: Eval,
}

impl MapUnderTest {
    pub fn new(domain: QuasiOrder, label: impl Into<String>, eval: impl Fn(&CMatrix) -> CMatrix + Send + Sync + 'static) -> Self {
        MapUnderTest { domain, label: label.into(), eval: Arc::new(eval) }
    }

    pub fn identity(domain: &QuasiOrder) -> Self {
        MapUnderTest::new(domain.clone(), "identity", |x: &CMatrix| x.clone())
    }
}

impl MatrixMap for MapUnderTest {
    fn apply(&self, x: &CMatrix) -> CMatrix {
        (self.eval)(x)
    }
}

impl fmt::Debug for MapUnderTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapUnderTest").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

/// Sampling parameters of [`verify_preserver`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PreserverConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Largest allowed `|Δc_k| / max(1, ‖X‖_F)^k` between characteristic
    /// polynomial coefficients.
    pub spectrum_tol: f64,
    /// Largest allowed `‖[φX, φY]‖_F / max(1, ‖φX‖_F ‖φY‖_F)`.
    pub commutativity_tol: f64,
    /// Smallest allowed `‖φX − φY‖_F / ‖X − Y‖_F`.
    pub injectivity_tol: f64,
    /// Largest allowed relative defect of additivity and homogeneity.
    pub linearity_tol: f64,
}

impl Default for PreserverConfig {
    fn default() -> Self {
        PreserverConfig {
            n_samples: 1000,
            seed: 0,
            spectrum_tol: 1e-9,
            commutativity_tol: 1e-8,
            injectivity_tol: 1e-9,
            linearity_tol: 1e-9,
        }
    }
}

/// Verdicts of [`verify_preserver`].
#[derive(Clone, Debug, Serialize)]
pub struct PreserverReport {
    pub label: String,
    pub config: PreserverConfig,
    pub spectrum: Verdict,
    pub commutativity: Verdict,
    pub injectivity: Verdict,
    pub additivity: Verdict,
    pub homogeneity: Verdict,
}

impl PreserverReport {
    /// Spectrum, commutativity and injectivity all pass.
    pub fn is_preserver(&self) -> bool {
        self.spectrum.passed && self.commutativity.passed && self.injectivity.passed
    }

    pub fn is_linear(&self) -> bool {
        self.additivity.passed && self.homogeneity.passed
    }

    pub fn all_passed(&self) -> bool {
        self.is_preserver() && self.is_linear()
    }
}

/// `max_k |a_k − b_k| / max(1, scale)^k` over descending coefficients.
pub fn char_poly_gap(a: &CMatrix, b: &CMatrix, scale: f64) -> f64 {
    let s = scale.max(1.0);
    a.char_poly()
        .iter()
        .zip(b.char_poly())
        .enumerate()
        .map(|(k, (x, y))| (x - y).norm() / s.powi(k as i32))
        .fold(0.0, f64::max)
}

/// `X = S D₁ S⁻¹`, `Y = S D₂ S⁻¹` with random diagonals and
/// `S = I + 0.3·(random, supported on ρ^×)` of condition number below
/// `1e3`. Both outputs are masked to `ρ`, which only removes rounding.
pub fn gen_commuting_pair(order: &QuasiOrder, seed: u64) -> (CMatrix, CMatrix) {
    let mut rng = rng_for(seed, 0);
    commuting_pair_from(order, &mut rng)
}

fn conditioned_sma_element<R: Rng + ?Sized>(order: &QuasiOrder, rng: &mut R) -> (CMatrix, CMatrix) {
    let n = order.n();
    loop {
        let mut s = CMatrix::identity(n);
        for (i, j) in order.off_diagonal_pairs() {
            s[(i, j)] = random_complex(rng) * 0.3;
        }
        if s.condition_number() < 1e3 {
            if let Ok(inv) = s.inverse() {
                return (s, inv.masked(order));
            }
        }
    }
}

fn commuting_pair_from<R: Rng + ?Sized>(order: &QuasiOrder, rng: &mut R) -> (CMatrix, CMatrix) {
    let n = order.n();
    let (s, s_inv) = conditioned_sma_element(order, rng);
    let d1 = CMatrix::from_diagonal(&random_diagonal(n, rng));
    let d2 = CMatrix::from_diagonal(&random_diagonal(n, rng));
    let x = (&(&s * &d1) * &s_inv).masked(order);
    let y = (&(&s * &d2) * &s_inv).masked(order);
    (x, y)
}

#[derive(Default)]
struct PreserverSample {
    spectrum: Vec<Check>,
    commutativity: Vec<Check>,
    injectivity: Vec<Check>,
    additivity: Vec<Check>,
    homogeneity: Vec<Check>,
}

fn spectrum_check(phi: &dyn MatrixMap, x: &CMatrix, tol: f64) -> Check {
    let fx = phi.apply(x);
    Check::above(char_poly_gap(x, &fx, x.frobenius_norm()), tol, || {
        witness("char poly of phi(X) differs from X", vec![x.clone()], vec![fx.clone()])
    })
}

fn commutativity_check(phi: &dyn MatrixMap, x: &CMatrix, y: &CMatrix, tol: f64) -> Check {
    let (fx, fy) = (phi.apply(x), phi.apply(y));
    let gap = fx.commutator(&fy).frobenius_norm() / (fx.frobenius_norm() * fy.frobenius_norm()).max(1.0);
    Check::above(gap, tol, || witness("X, Y commute but phi(X), phi(Y) do not", vec![x.clone(), y.clone()], vec![fx.clone(), fy.clone()]))
}

fn separation_check(phi: &dyn MatrixMap, x: &CMatrix, y: &CMatrix, tol: f64) -> Check {
    let (fx, fy) = (phi.apply(x), phi.apply(y));
    let ratio = (&fx - &fy).frobenius_norm() / (x - y).frobenius_norm();
    Check::below(ratio, tol, || witness("phi(X) = phi(Y) for X != Y", vec![x.clone(), y.clone()], vec![fx.clone(), fy.clone()]))
}

fn one_sample(phi: &dyn MatrixMap, order: &QuasiOrder, cfg: &PreserverConfig, pairs: &[(usize, usize)], k: usize) -> PreserverSample {
    let n = order.n();
    let mut rng = rng_for(cfg.seed, k as u64);
    let mut out = PreserverSample::default();

    let x = random_in_sma(order, &mut rng);
    let y = random_in_sma(order, &mut rng);
    out.spectrum.push(spectrum_check(phi, &x, cfg.spectrum_tol));

    let (cx, cy) = commuting_pair_from(order, &mut rng);
    out.spectrum.push(spectrum_check(phi, &cx, cfg.spectrum_tol));
    out.commutativity.push(commutativity_check(phi, &cx, &cy, cfg.commutativity_tol));

    // polynomial partner a₀I + a₁X + a₂X²
    let (a0, a1, a2) = (random_complex(&mut rng), random_complex(&mut rng), random_complex(&mut rng));
    let px = &(&CMatrix::identity(n).scale(a0) + &x.scale(a1)) + &(&x * &x).scale(a2);
    out.commutativity.push(commutativity_check(phi, &x, &px, cfg.commutativity_tol));

    if k.is_multiple_of(4) {
        if let Ok(near) = nearby_diagonalizable(&y, order, 1e-3) {
            let d = CMatrix::from_diagonal(&near.eigenvalues);
            if let Ok(inv) = near.s.inverse() {
                let z = (&(&near.s * &d) * &inv).masked(order);
                out.spectrum.push(spectrum_check(phi, &z, cfg.spectrum_tol));
            }
        }
    }

    out.injectivity.push(separation_check(phi, &x, &y, cfg.injectivity_tol));
    if !pairs.is_empty() {
        let (i, j) = pairs[k % pairs.len()];
        let xe = &x + &CMatrix::unit(n, i, j);
        out.injectivity.push(separation_check(phi, &x, &xe, cfg.injectivity_tol));
    }

    let (fx, fy) = (phi.apply(&x), phi.apply(&y));
    let sum = &x + &y;
    let fsum = phi.apply(&sum);
    out.additivity.push(Check::above(
        relative_gap(&fsum, &(&fx + &fy), fx.frobenius_norm() + fy.frobenius_norm()),
        cfg.linearity_tol,
        || witness("phi(X+Y) != phi(X)+phi(Y)", vec![x.clone(), y.clone()], vec![fsum.clone(), &fx + &fy]),
    ));
    let c = random_complex(&mut rng);
    let xc = x.scale(c);
    let fxc = phi.apply(&xc);
    out.homogeneity.push(Check::above(relative_gap(&fxc, &fx.scale(c), fx.frobenius_norm()), cfg.linearity_tol, || {
        witness("phi(cX) != c phi(X)", vec![x.clone(), xc.clone()], vec![fx.clone(), fxc.clone()])
    }));
    out
}

/// Runs the sampled preserver checks. Samples are drawn from independent
/// seeded streams, evaluated in parallel and merged in index order, so the
/// report depends only on `(φ, cfg)`. The probes `I` and `Λ_n` always
/// precede the random spectrum samples.
pub fn verify_preserver(phi: &MapUnderTest, cfg: &PreserverConfig) -> PreserverReport {
    let order = &phi.domain;
    let n = order.n();
    let pairs: Vec<(usize, usize)> = order.pairs().collect();
    let mut report = PreserverReport {
        label: phi.label.clone(),
        config: *cfg,
        spectrum: Verdict::new(cfg.spectrum_tol),
        commutativity: Verdict::new(cfg.commutativity_tol),
        injectivity: Verdict::lower(cfg.injectivity_tol),
        additivity: Verdict::new(cfg.linearity_tol),
        homogeneity: Verdict::new(cfg.linearity_tol),
    };
    for probe in [CMatrix::identity(n), CMatrix::lambda(n)] {
        report.spectrum.record(spectrum_check(phi, &probe, cfg.spectrum_tol));
    }
    let samples: Vec<PreserverSample> =
        (0..cfg.n_samples).into_par_iter().map(|k| one_sample(phi, order, cfg, &pairs, k)).collect();
    for s in samples {
        report.spectrum.extend(s.spectrum);
        report.commutativity.extend(s.commutativity);
        report.injectivity.extend(s.injectivity);
        report.additivity.extend(s.additivity);
        report.homogeneity.extend(s.homogeneity);
    }
    report
}

/// Which construction a counterexample uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    /// `(s, r) ∈ ρ`: a nonlinear preserver on the central `M_2` block.
    Block,
    /// `(s, r) ∉ ρ`: the `(r, s)` entry is rescaled by [`case_two_f`].
    Corner,
}

/// A nonlinear injective spectrum and commutativity preserver.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub case: CaseKind,
    pub r: usize,
    pub s: usize,
    pub map: MapUnderTest,
}

/// `t ↦ e^{iπ/(t+1)}` on `[0, ∞)`.
pub fn case_one_f(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI / (t + 1.0))
}

/// `f(u, v) = v` if `|u| ≤ |v|`, else `v·|v/u|`.
pub fn case_two_f(u: Complex64, v: Complex64) -> Complex64 {
    if u.norm() <= v.norm() { v } else { v * (v.norm() / u.norm()) }
}

/// `[[a, b], [c, d]] ↦ [[a, b f], [c f̄, d]]` with `f = case_one_f(|c/b|)`;
/// unchanged when `b = 0`.
pub fn case_one_psi(m: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let [[a, b], [c, d]] = m;
    if b == Complex64::new(0.0, 0.0) {
        return m;
    }
    let f = case_one_f((c / b).norm());
    [[a, b * f], [c * f.conj(), d]]
}

/// The counterexample for a quasi-order violating condition (i), built at
/// the first violating pair `(r, s)`.
pub fn counterexample(order: &QuasiOrder) -> Result<Counterexample> {
    let ci = order.condition_i();
    let Some((r, s)) = ci.witness else {
        return Err(Error::ConditionHolds);
    };
    if order.contains(s, r) {
        let (lo, hi) = (r.min(s), r.max(s));
        let label = format!("block counterexample at ({},{})", r + 1, s + 1);
        let map = MapUnderTest::new(order.clone(), label, move |x: &CMatrix| {
            let [[_, b], [c, _]] = case_one_psi([[x[(lo, lo)], x[(lo, hi)]], [x[(hi, lo)], x[(hi, hi)]]]);
            let mut y = x.clone();
            y[(lo, hi)] = b;
            y[(hi, lo)] = c;
            y
        });
        Ok(Counterexample { case: CaseKind::Block, r, s, map })
    } else {
        let label = format!("corner counterexample at ({},{})", r + 1, s + 1);
        let map = MapUnderTest::new(order.clone(), label, move |x: &CMatrix| {
            let mut y = x.clone();
            y[(r, s)] = case_two_f(x[(s, s)] - x[(r, r)], x[(r, s)]);
            y
        });
        Ok(Counterexample { case: CaseKind::Corner, r, s, map })
    }
}

impl Counterexample {
    /// `X`, `Y` with `φ(X + Y) ≠ φ(X) + φ(Y)`: `(2E_rr + E_rs, E_rs)` for the
    /// corner construction, `(E_rs, E_sr)` for the block one. Inputs are
    /// `[X, Y, X + Y]`, outputs their images, and the discrepancy is
    /// `‖φ(X + Y) − φ(X) − φ(Y)‖_F`.
    pub fn additivity_witness(&self) -> Witness {
        let n = self.map.domain.n();
        let (r, s) = (self.r, self.s);
        let (x, y) = match self.case {
            CaseKind::Corner => {
                let mut x = CMatrix::unit(n, r, s);
                x[(r, r)] = Complex64::new(2.0, 0.0);
                (x, CMatrix::unit(n, r, s))
            }
            CaseKind::Block => (CMatrix::unit(n, r, s), CMatrix::unit(n, s, r)),
        };
        let sum = &x + &y;
        let (fx, fy, fs) = (self.map.apply(&x), self.map.apply(&y), self.map.apply(&sum));
        let discrepancy = (&(&fs - &fx) - &fy).frobenius_norm();
        Witness { discrepancy, ..witness("additivity", vec![x, y, sum], vec![fx, fy, fs]) }
    }
}

/// Decides `X ↔ Y` through `X° ↔ Y°` and
/// `(X_ss − X_rr)Y_rs = (Y_ss − Y_rr)X_rs`, where `X° = X − X_rs E_rs`.
/// Requires `(r,s) ∈ ρ^×`, `ρ⁻¹(r) = {r}` and `ρ(s) = {s}`.
pub fn commutes_criterion(x: &CMatrix, y: &CMatrix, order: &QuasiOrder, r: usize, s: usize, tol: f64) -> Result<bool> {
    let n = order.n();
    let structural = r < n
        && s < n
        && r != s
        && order.contains(r, s)
        && order.preimage(r)? == vec![r]
        && order.image(s)? == vec![s];
    if !structural {
        return Err(Error::Inapplicable {
            kind: "commutes_criterion".into(),
            reason: format!("({},{}) does not isolate a corner entry", r + 1, s + 1),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let (mut xo, mut yo) = (x.clone(), y.clone());
    xo[(r, s)] = zero;
    yo[(r, s)] = zero;
    let scale = (x.frobenius_norm() * y.frobenius_norm()).max(1.0);
    let core = xo.commutator(&yo).frobenius_norm() <= tol * scale;
    let scalar = ((x[(s, s)] - x[(r, r)]) * y[(r, s)] - (y[(s, s)] - y[(r, r)]) * x[(r, s)]).norm() <= tol * scale;
    Ok(core && scalar)
}

/// `(ρ_M, ρ_A)`: pairs whose unit image is parallel to `E_ij`, resp. `E_ji`.
pub fn classify_unit_action(phi: &dyn MatrixMap, order: &QuasiOrder, tol: f64) -> Result<UnitAction> {
    classify_units(phi, order, tol)
}

/// Maps that keep all but one hypothesis of the preserver theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GalleryKind {
    /// `X ↦ 2X`: not spectrum preserving.
    Scaling,
    /// Conjugation by `diag(.., e^{det X}, ..)`: not commutativity preserving.
    DetTwist,
    /// `X ↦ X + X₁₁E_{2n}` on diagonal matrices: not commutativity preserving.
    DiagShift,
    /// Keeps the blocks of mutually related indices and drops the rest: not
    /// injective.
    NoninjectiveJordan,
}

impl GalleryKind {
    pub const ALL: [GalleryKind; 4] =
        [GalleryKind::Scaling, GalleryKind::DetTwist, GalleryKind::DiagShift, GalleryKind::NoninjectiveJordan];

    pub fn name(self) -> &'static str {
        match self {
            GalleryKind::Scaling => "scaling",
            GalleryKind::DetTwist => "det_twist",
            GalleryKind::DiagShift => "diag_shift",
            GalleryKind::NoninjectiveJordan => "noninjective_jordan",
        }
    }
}

impl FromStr for GalleryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GalleryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown gallery kind `{s}`")))
    }
}

impl fmt::Display for GalleryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn inapplicable(kind: GalleryKind, reason: &str) -> Error {
    Error::Inapplicable { kind: kind.name().into(), reason: reason.into() }
}

pub fn remark_gallery(order: &QuasiOrder, kind: GalleryKind) -> Result<MapUnderTest> {
    let n = order.n();
    match kind {
        GalleryKind::Scaling => Ok(MapUnderTest::new(order.clone(), kind.name(), |x: &CMatrix| {
            x.scale(Complex64::new(2.0, 0.0))
        })),
        GalleryKind::DetTwist => {
            let i = (0..n)
                .find(|&i| order.image(i).map(|img| img.len() > 1).unwrap_or(false))
                .ok_or_else(|| inapplicable(kind, "the quasi-order is diagonal"))?;
            Ok(MapUnderTest::new(order.clone(), kind.name(), move |x: &CMatrix| {
                let t = x.determinant().exp();
                let mut y = x.clone();
                for j in 0..y.n() {
                    if j != i {
                        y[(i, j)] *= t;
                        y[(j, i)] /= t;
                    }
                }
                y
            }))
        }
        GalleryKind::DiagShift => {
            if !order.is_diagonal() || n < 3 {
                return Err(inapplicable(kind, "needs the diagonal quasi-order with n >= 3"));
            }
            Ok(MapUnderTest::new(order.clone(), kind.name(), move |x: &CMatrix| {
                let mut y = x.clone();
                y[(1, n - 1)] += x[(0, 0)];
                y
            }))
        }
        GalleryKind::NoninjectiveJordan => {
            if order.is_symmetric() {
                return Err(inapplicable(kind, "the quasi-order is symmetric"));
            }
            let q = order.clone();
            Ok(MapUnderTest::new(order.clone(), kind.name(), move |x: &CMatrix| {
                CMatrix::from_fn(x.n(), |i, j| {
                    if q.contains(i, j) && q.contains(j, i) { x[(i, j)] } else { Complex64::new(0.0, 0.0) }
                })
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{verify_jordan, JordanSpec};
    use crate::quasiorder::examples::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn quick(n_samples: usize) -> PreserverConfig {
        PreserverConfig { n_samples, ..PreserverConfig::default() }
    }

    #[test]
    fn f_values() {
        assert_eq!(case_two_f(c(0.0), c(3.0)), c(3.0));
        assert_eq!(case_two_f(c(-2.0), c(1.0)), c(0.5));
        assert!((case_one_f(0.0) - c(-1.0)).norm() < 1e-15);
        assert!((case_one_f(1.0) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn corner_counterexample_witness() {
        let q = corner_4();
        let ce = counterexample(&q).unwrap();
        assert_eq!((ce.case, ce.r, ce.s), (CaseKind::Corner, 0, 2));
        let e11 = CMatrix::unit(4, 0, 0);
        let e13 = CMatrix::unit(4, 0, 2);
        let x = &e11.scale(c(2.0)) + &e13;
        assert_eq!(ce.map.apply(&x), &e11.scale(c(2.0)) + &e13.scale(c(0.5)));
        assert_eq!(ce.map.apply(&e13), e13);
        let z = &e11.scale(c(2.0)) + &e13.scale(c(2.0));
        assert_eq!(ce.map.apply(&z), z);
    }

    #[test]
    fn corner_counterexample_report() {
        let ce = counterexample(&corner_4()).unwrap();
        let report = verify_preserver(&ce.map, &quick(300));
        assert!(report.spectrum.passed, "{:?}", report.spectrum);
        assert!(report.commutativity.passed, "{:?}", report.commutativity);
        assert!(report.injectivity.passed);
        assert!(!report.additivity.passed && !report.additivity.witnesses.is_empty());
        assert!(report.homogeneity.passed);
    }

    #[test]
    fn block_counterexample_witness() {
        let q = m2_plus_point();
        let ce = counterexample(&q).unwrap();
        assert_eq!((ce.case, ce.r, ce.s), (CaseKind::Block, 0, 1));
        let e12 = CMatrix::unit(3, 0, 1);
        let e21 = CMatrix::unit(3, 1, 0);
        let sum = ce.map.apply(&(&e12 + &e21));
        let parts = &ce.map.apply(&e12) + &ce.map.apply(&e21);
        assert!((&parts - &(&e21 - &e12)).max_abs() < 1e-15);
        assert!((sum[(0, 1)] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((&sum - &parts).frobenius_norm() > 1.0);
        let report = verify_preserver(&ce.map, &quick(300));
        assert!(report.is_preserver(), "{report:?}");
        assert!(!report.additivity.passed);
    }

    #[test]
    fn counterexample_refused_when_condition_holds() {
        assert_eq!(counterexample(&seven_point()).unwrap_err(), Error::ConditionHolds);
    }

    #[test]
    fn additivity_witnesses() {
        // corner: phi(2E11 + E13) = 2E11 + E13/2, so the defect is 1/2
        let w = counterexample(&corner_4()).unwrap().additivity_witness();
        assert!((w.outputs[0][(0, 2)] - c(0.5)).norm() < 1e-15);
        assert!((w.discrepancy - 0.5).abs() < 1e-15);
        // block: E12 ↦ -E12, E21 ↦ E21, E12 + E21 ↦ iE12 - iE21
        let w = counterexample(&m2_plus_point()).unwrap().additivity_witness();
        assert!((w.outputs[2][(0, 1)] - Complex64::i()).norm() < 1e-15);
        assert!((w.discrepancy - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_and_scaling() {
        let q = seven_point();
        let report = verify_preserver(&MapUnderTest::identity(&q), &quick(100));
        assert!(report.all_passed());
        let scaling = remark_gallery(&q, GalleryKind::Scaling).unwrap();
        let report = verify_preserver(&scaling, &quick(50));
        assert!(!report.spectrum.passed);
        assert_eq!(report.spectrum.witnesses[0].inputs[0], CMatrix::identity(7));
        assert!(report.commutativity.passed && report.injectivity.passed && report.is_linear());
    }

    #[test]
    fn det_twist_breaks_commutativity_only() {
        let q = QuasiOrder::upper_triangular(3).unwrap();
        let m = remark_gallery(&q, GalleryKind::DetTwist).unwrap();
        let report = verify_preserver(&m, &quick(200));
        assert!(report.spectrum.passed && report.injectivity.passed);
        assert!(!report.commutativity.passed && !report.commutativity.witnesses.is_empty());
    }

    #[test]
    fn diag_shift_breaks_commutativity_only() {
        let q = QuasiOrder::diagonal(4).unwrap();
        let m = remark_gallery(&q, GalleryKind::DiagShift).unwrap();
        let report = verify_preserver(&m, &quick(100));
        assert!(report.spectrum.passed && report.injectivity.passed && report.is_linear());
        assert!(!report.commutativity.passed);
        assert!(remark_gallery(&QuasiOrder::upper_triangular(3).unwrap(), GalleryKind::DiagShift).is_err());
    }

    #[test]
    fn noninjective_jordan_kills_corner() {
        let t2 = QuasiOrder::upper_triangular(2).unwrap();
        let m = remark_gallery(&t2, GalleryKind::NoninjectiveJordan).unwrap();
        assert_eq!(m.apply(&CMatrix::unit(2, 0, 1)), CMatrix::zeros(2));
        let report = verify_preserver(&m, &quick(100));
        assert!(report.spectrum.passed && report.commutativity.passed && report.is_linear());
        assert!(!report.injectivity.passed);
        let jr = verify_jordan(&m, &t2, 100, 1e-9, 0);
        assert!(jr.squares.passed && !jr.injectivity.passed);
        assert!(matches!(
            remark_gallery(&two_blocks(), GalleryKind::NoninjectiveJordan),
            Err(Error::Inapplicable { .. })
        ));
    }

    #[test]
    fn gallery_names_round_trip() {
        for k in GalleryKind::ALL {
            assert_eq!(k.name().parse::<GalleryKind>().unwrap(), k);
        }
        assert!("nope".parse::<GalleryKind>().is_err());
    }

    #[test]
    fn commuting_pairs_commute() {
        for q in [seven_point(), two_blocks(), corner_4(), QuasiOrder::diagonal(4).unwrap()] {
            for seed in 0..2500 {
                let (x, y) = gen_commuting_pair(&q, seed);
                assert!(x.in_sma(&q, 0.0) && y.in_sma(&q, 0.0));
                let scale = (x.frobenius_norm() * y.frobenius_norm()).max(1.0);
                assert!(x.commutator(&y).frobenius_norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn criterion_examples() {
        let q = corner_4();
        let x = &CMatrix::unit(4, 0, 0).scale(c(2.0)) + &CMatrix::unit(4, 0, 2);
        let y = CMatrix::unit(4, 0, 2);
        assert!(commutes_criterion(&x, &x, &q, 0, 2, 1e-12).unwrap());
        assert!(!commutes_criterion(&x, &y, &q, 0, 2, 1e-12).unwrap());
        assert!(x.commutator(&y).frobenius_norm() > 0.0);
        assert!(commutes_criterion(&x, &y, &seven_point(), 0, 2, 1e-12).is_err());
    }

    #[test]
    fn criterion_agrees_with_commutator() {
        let q = corner_4();
        let mut rng = rng_for(4, 0);
        let mut agreed_true = 0;
        for k in 0..10_000 {
            let (x, y) = if k % 2 == 0 {
                commuting_pair_from(&q, &mut rng)
            } else {
                (random_in_sma(&q, &mut rng), random_in_sma(&q, &mut rng))
            };
            let direct = x.commutator(&y).frobenius_norm() <= 1e-9 * (x.frobenius_norm() * y.frobenius_norm()).max(1.0);
            assert_eq!(commutes_criterion(&x, &y, &q, 0, 2, 1e-9).unwrap(), direct);
            agreed_true += direct as usize;
        }
        assert!(agreed_true >= 5000);
    }

    #[test]
    fn classify_examples() {
        let q = two_blocks();
        let transpose = |x: &CMatrix| x.transpose();
        let act = classify_unit_action(&transpose, &q, 1e-7).unwrap();
        assert!(act.rho_m.is_diagonal());
        assert_eq!(act.rho_a, q);
        let shear = |x: &CMatrix| &CMatrix::unit(6, 0, 5).scale(x[(0, 1)]) + x;
        assert_eq!(classify_unit_action(&shear, &q, 1e-7).unwrap_err(), Error::AmbiguousUnit(0, 1));
    }

    #[test]
    fn exhaustive_small_counterexamples() {
        for n in 2..=3 {
            for q in QuasiOrder::enumerate(n).unwrap() {
                if q.condition_i().holds {
                    continue;
                }
                let ce = counterexample(&q).unwrap();
                let report = verify_preserver(&ce.map, &quick(60));
                assert!(report.is_preserver(), "{q:?} {report:?}");
                assert!(!report.additivity.passed, "{q:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn case_two_f_is_homogeneous(ur in -3.0f64..3.0, ui in -3.0f64..3.0, vr in -3.0f64..3.0, vi in -3.0f64..3.0, t in 0.01f64..10.0) {
            let (u, v) = (Complex64::new(ur, ui), Complex64::new(vr, vi));
            let f = case_two_f(u, v);
            prop_assert!(f.norm() <= v.norm() * (1.0 + 1e-15));
            prop_assert!((case_two_f(u * t, v * t) - f * t).norm() <= 1e-12 * (1.0 + f.norm() * t));
        }

        #[test]
        fn corner_spectrum_is_exact(seed in any::<u64>()) {
            let q = corner_4();
            let ce = counterexample(&q).unwrap();
            let x = random_in_sma(&q, &mut rng_for(seed, 0));
            prop_assert!(char_poly_gap(&x, &ce.map.apply(&x), x.frobenius_norm()) <= 1e-12);
        }

        #[test]
        fn embeddings_classify_into_quasi_orders(seed in any::<u64>()) {
            let q = two_blocks();
            let spec = crate::jordan::random_spec(&q, seed).unwrap();
            let inner = {
                let phi = JordanSpec::new(q.clone(), CMatrix::identity(6), spec.g().clone(), spec.p().clone()).unwrap().build();
                move |x: &CMatrix| phi.apply(x)
            };
            let act = classify_unit_action(&inner, &q, 1e-7).unwrap();
            let pairs = act.rho_m.len() + act.rho_a.len() - 6;
            prop_assert_eq!(pairs, q.len());
        }
    }
}
