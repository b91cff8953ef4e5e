//! Jordan embeddings `φ(X) = S(P g*(X) + (I−P) g*(X)ᵗ)S⁻¹` of `A_ρ` into
//! `M_n`: construction, sampled verification and recovery of the
//! parameters from a black-box map.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::TransitiveMap;
use crate::error::{Error, Result};
use crate::matalg::CMatrix;
use crate::quasiorder::QuasiOrder;
use crate::report::{relative_gap, witness, Check, Verdict};
use crate::sampling::{random_complex, random_in_sma, rng_for};

/// A map `M_n → M_n` evaluated on elements of some `A_ρ`. Implementations
/// must be reentrant.
pub trait MatrixMap: Sync {
    fn apply(&self, x: &CMatrix) -> CMatrix;
}

impl<F: Fn(&CMatrix) -> CMatrix + Sync> MatrixMap for F {
    fn apply(&self, x: &CMatrix) -> CMatrix {
        self(x)
    }
}

/// Largest number of `≈`-classes for which all central idempotents are listed.
pub const MAX_CLASSES: usize = 20;

/// A diagonal 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CentralIdempotent {
    bits: Vec<bool>,
}

impl CentralIdempotent {
    /// Builds `P = diag(bits)` and checks that it commutes with every
    /// `E_ij`, `(i,j) ∈ ρ`.
    pub fn new(order: &QuasiOrder, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != order.n() {
            return Err(Error::DimensionMismatch { expected: order.n(), got: bits.len() });
        }
        let p = CentralIdempotent { bits };
        p.check_central(order)?;
        Ok(p)
    }

    pub fn identity(n: usize) -> Self {
        CentralIdempotent { bits: vec![true; n] }
    }

    pub fn zero(n: usize) -> Self {
        CentralIdempotent { bits: vec![false; n] }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn matrix(&self) -> CMatrix {
        let d: Vec<Complex64> = self.bits.iter().map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0)).collect();
        CMatrix::from_diagonal(&d)
    }

    pub fn complement(&self) -> Self {
        CentralIdempotent { bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn check_central(&self, order: &QuasiOrder) -> Result<()> {
        match order.pairs().find(|&(i, j)| self.bits[i] != self.bits[j]) {
            Some((i, j)) => Err(Error::NotCentral(i, j)),
            None => Ok(()),
        }
    }
}

/// All central diagonal idempotents: one per subset of `≈`-classes, listed
/// in the order of the subset bitmask.
pub fn central_idempotents(order: &QuasiOrder) -> Result<Vec<CentralIdempotent>> {
    let classes = order.components();
    let q = classes.len();
    if q > MAX_CLASSES {
        return Err(Error::TooManyClasses(q));
    }
    (0u64..1 << q)
        .map(|mask| {
            let mut bits = vec![false; order.n()];
            for (c, block) in classes.blocks().iter().enumerate() {
                if mask >> c & 1 == 1 {
                    for &i in block {
                        bits[i] = true;
                    }
                }
            }
            CentralIdempotent::new(order, bits)
        })
        .collect()
}

/// Parameters `(ρ, S, g, P)` of a Jordan embedding.
#[derive(Clone, Debug)]
pub struct JordanSpec {
    order: QuasiOrder,
    s: CMatrix,
    g: TransitiveMap,
    p: CentralIdempotent,
}

impl JordanSpec {
    pub fn new(order: QuasiOrder, s: CMatrix, g: TransitiveMap, p: CentralIdempotent) -> Result<Self> {
        let n = order.n();
        for got in [s.n(), g.n(), p.n()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        if g.order() != &order {
            return Err(Error::Input("transitive map is defined on a different quasi-order".into()));
        }
        p.check_central(&order)?;
        s.inverse()?;
        Ok(JordanSpec { order, s, g, p })
    }

    /// `S = I`, `g ≡ 1`, `P = I`.
    pub fn identity(order: &QuasiOrder) -> Self {
        let n = order.n();
        JordanSpec {
            order: order.clone(),
            s: CMatrix::identity(n),
            g: TransitiveMap::identity(order),
            p: CentralIdempotent::identity(n),
        }
    }

    pub fn order(&self) -> &QuasiOrder {
        &self.order
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn g(&self) -> &TransitiveMap {
        &self.g
    }

    pub fn p(&self) -> &CentralIdempotent {
        &self.p
    }

    pub fn condition_number(&self) -> f64 {
        self.s.condition_number()
    }

    pub fn build(&self) -> JordanEmbedding {
        JordanEmbedding {
            s_inv: self.s.inverse().expect("validated at construction"),
            spec: self.clone(),
        }
    }
}

/// The map of a [`JordanSpec`]. Entries of the input outside `ρ` are ignored.
#[derive(Clone, Debug)]
pub struct JordanEmbedding {
    spec: JordanSpec,
    s_inv: CMatrix,
}

impl JordanEmbedding {
    pub fn spec(&self) -> &JordanSpec {
        &self.spec
    }

    /// `P g*(X) + (I−P) g*(X)ᵗ`, the map before conjugation by `S`.
    pub fn inner(&self, x: &CMatrix) -> CMatrix {
        let gx = self.spec.g.apply_masked(x);
        let bits = &self.spec.p.bits;
        CMatrix::from_fn(x.n(), |i, j| match (bits[i], bits[j]) {
            (true, true) => gx[(i, j)],
            (false, false) => gx[(j, i)],
            _ => Complex64::new(0.0, 0.0),
        })
    }

    /// Images of the matrix units `E_ij`, `(i,j) ∈ ρ`.
    pub fn unit_table(&self) -> Vec<((usize, usize), CMatrix)> {
        let n = self.spec.order.n();
        self.spec.order.pairs().map(|(i, j)| ((i, j), self.apply(&CMatrix::unit(n, i, j)))).collect()
    }
}

impl MatrixMap for JordanEmbedding {
    fn apply(&self, x: &CMatrix) -> CMatrix {
        &(&self.spec.s * &self.inner(x)) * &self.s_inv
    }
}

/// Sampled checks of a candidate Jordan embedding.
#[derive(Clone, Debug, Serialize)]
pub struct JordanReport {
    pub additivity: Verdict,
    pub homogeneity: Verdict,
    pub squares: Verdict,
    pub injectivity: Verdict,
}

impl JordanReport {
    pub fn passed(&self) -> bool {
        self.additivity.passed && self.homogeneity.passed && self.squares.passed && self.injectivity.passed
    }
}

struct JordanSample {
    additivity: Check,
    homogeneity: Check,
    squares: Check,
    injectivity: Vec<Check>,
}

/// Checks `φ(X+Y) = φ(X)+φ(Y)`, `φ(cX) = cφ(X)`, `φ(X²) = φ(X)²` and
/// separation `‖φX − φY‖ > tol·‖X − Y‖` on `n_samples` seeded random
/// elements of `A_ρ`. Separation is also probed along every matrix unit
/// (`X` against `X + E_ij`), cycling through `ρ`.
pub fn verify_jordan(phi: &dyn MatrixMap, order: &QuasiOrder, n_samples: usize, tol: f64, seed: u64) -> JordanReport {
    let n = order.n();
    let pairs: Vec<(usize, usize)> = order.pairs().collect();
    let samples: Vec<JordanSample> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let x = random_in_sma(order, &mut rng);
            let y = random_in_sma(order, &mut rng);
            let c = random_complex(&mut rng);
            let (fx, fy) = (phi.apply(&x), phi.apply(&y));
            let sum = &x + &y;
            let fsum = phi.apply(&sum);
            let additivity = Check::above(
                relative_gap(&fsum, &(&fx + &fy), fx.frobenius_norm() + fy.frobenius_norm()),
                tol,
                || witness("phi(X+Y) != phi(X)+phi(Y)", vec![x.clone(), y.clone()], vec![fsum.clone(), &fx + &fy]),
            );
            let cx = x.scale(c);
            let fcx = phi.apply(&cx);
            let homogeneity = Check::above(relative_gap(&fcx, &fx.scale(c), fx.frobenius_norm()), tol, || {
                witness("phi(cX) != c phi(X)", vec![x.clone(), cx.clone()], vec![fx.clone(), fcx.clone()])
            });
            let x2 = &x * &x;
            let fx2 = phi.apply(&x2);
            let sq = &fx * &fx;
            let squares = Check::above(relative_gap(&fx2, &sq, sq.frobenius_norm()), tol, || {
                witness("phi(X^2) != phi(X)^2", vec![x.clone()], vec![fx2.clone(), sq.clone()])
            });
            let mut injectivity = vec![Check::below(
                (&fx - &fy).frobenius_norm() / (&x - &y).frobenius_norm(),
                tol,
                || witness("phi(X) = phi(Y)", vec![x.clone(), y.clone()], vec![fx.clone(), fy.clone()]),
            )];
            if !pairs.is_empty() {
                let (i, j) = pairs[k % pairs.len()];
                let xe = &x + &CMatrix::unit(n, i, j);
                let fxe = phi.apply(&xe);
                injectivity.push(Check::below((&fxe - &fx).frobenius_norm(), tol, || {
                    witness("phi(X + E_ij) = phi(X)", vec![x.clone(), xe.clone()], vec![fx.clone(), fxe.clone()])
                }));
            }
            JordanSample { additivity, homogeneity, squares, injectivity }
        })
        .collect();
    let mut report = JordanReport {
        additivity: Verdict::new(tol),
        homogeneity: Verdict::new(tol),
        squares: Verdict::new(tol),
        injectivity: Verdict::lower(tol),
    };
    for s in samples {
        report.additivity.record(s.additivity);
        report.homogeneity.record(s.homogeneity);
        report.squares.record(s.squares);
        report.injectivity.extend(s.injectivity);
    }
    report
}

fn verify_product_law(
    phi: &dyn MatrixMap,
    order: &QuasiOrder,
    n_samples: usize,
    tol: f64,
    seed: u64,
    reversed: bool,
) -> Verdict {
    let checks: Vec<Check> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, k as u64);
            let x = random_in_sma(order, &mut rng);
            let y = random_in_sma(order, &mut rng);
            let (fx, fy) = (phi.apply(&x), phi.apply(&y));
            let fxy = phi.apply(&(&x * &y));
            let prod = if reversed { &fy * &fx } else { &fx * &fy };
            let label = if reversed { "phi(XY) != phi(Y)phi(X)" } else { "phi(XY) != phi(X)phi(Y)" };
            Check::above(relative_gap(&fxy, &prod, fx.frobenius_norm() * fy.frobenius_norm()), tol, || {
                witness(label, vec![x.clone(), y.clone()], vec![fxy.clone(), prod.clone()])
            })
        })
        .collect();
    let mut v = Verdict::new(tol);
    v.extend(checks);
    v
}

/// Sampled check of `φ(XY) = φ(X)φ(Y)`.
pub fn verify_multiplicative(phi: &dyn MatrixMap, order: &QuasiOrder, n_samples: usize, tol: f64, seed: u64) -> Verdict {
    verify_product_law(phi, order, n_samples, tol, seed, false)
}

/// Sampled check of `φ(XY) = φ(Y)φ(X)`.
pub fn verify_antimultiplicative(
    phi: &dyn MatrixMap,
    order: &QuasiOrder,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Verdict {
    verify_product_law(phi, order, n_samples, tol, seed, true)
}

/// Relative tolerance of the parallelism test on matrix-unit images.
pub const PARALLEL_TOL: f64 = 1e-7;

/// How a map acts on each matrix unit: `ψ(E_ij) = c·E_ij` on `ρ_M` and
/// `ψ(E_ij) = c·E_ji` on `ρ_A`.
#[derive(Clone, Debug)]
pub struct UnitAction {
    pub rho_m: QuasiOrder,
    pub rho_a: QuasiOrder,
    /// `(i, j, c)` for every off-diagonal pair of `ρ`.
    pub coefficients: Vec<(usize, usize, Complex64)>,
}

/// Classifies `ψ(E_ij)` for `(i,j) ∈ ρ^×` by its dominant entry; every other
/// entry must be below `tol` relative to it. Both parts must be quasi-orders.
pub fn classify_units(psi: &dyn MatrixMap, order: &QuasiOrder, tol: f64) -> Result<UnitAction> {
    let n = order.n();
    let mut m_pairs = Vec::new();
    let mut a_pairs = Vec::new();
    let mut coefficients = Vec::new();
    for (i, j) in order.off_diagonal_pairs() {
        let img = psi.apply(&CMatrix::unit(n, i, j));
        let mut best = (0, 0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let v = img[(a, b)].norm();
                if v > best.2 {
                    best = (a, b, v);
                }
            }
        }
        let (a, b, peak) = best;
        let rest = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&rc| rc != (a, b))
            .map(|rc| img[rc].norm())
            .fold(0.0, f64::max);
        if peak == 0.0 || rest > tol * peak {
            return Err(Error::AmbiguousUnit(i, j));
        }
        if (a, b) == (i, j) {
            m_pairs.push((i, j));
        } else if (a, b) == (j, i) {
            a_pairs.push((i, j));
        } else {
            return Err(Error::AmbiguousUnit(i, j));
        }
        coefficients.push((i, j, img[(a, b)]));
    }
    let as_order = |pairs: Vec<(usize, usize)>| -> Result<QuasiOrder> {
        let closure = QuasiOrder::closure(n, pairs)?;
        if closure.was_transitive() { Ok(closure.order) } else { Err(Error::NotQuasiOrder) }
    };
    Ok(UnitAction { rho_m: as_order(m_pairs)?, rho_a: as_order(a_pairs)?, coefficients })
}

/// Result of [`recover_form`].
#[derive(Clone, Debug)]
pub struct Recovered {
    pub spec: JordanSpec,
    pub rho_m: QuasiOrder,
    pub rho_a: QuasiOrder,
    /// Largest relative disagreement between the rebuilt map and `φ` over
    /// matrix units and random samples.
    pub max_error: f64,
}

/// Number of random elements compared after recovery.
pub const RECOVERY_SAMPLES: usize = 100;

/// Unit-norm null vector of `m` (right singular vector of the smallest
/// singular value) together with that singular value.
fn null_vector(m: &CMatrix) -> (Vec<Complex64>, f64) {
    let n = m.n();
    let svd = m.as_dmatrix().clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let k = (0..n)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .expect("nonempty");
    ((0..n).map(|c| vt[(k, c)].conj()).collect(), svd.singular_values[k])
}

/// Reads off `(S, g, P)` from a spectrum and commutativity preserving
/// Jordan-type map on an `A_ρ` satisfying condition (i).
///
/// Column `k` of `S` spans the eigenvector of `φ(Λ_n)` for eigenvalue `k`,
/// normalized to unit length with its first nonzero entry positive. Then
/// `ψ = S⁻¹φ(·)S` is classified on matrix units; `g` collects the
/// coefficients and `P_ii = 0` exactly when `i` lies on a transposed pair.
/// The rebuilt embedding is compared with `φ` on every matrix unit and on
/// [`RECOVERY_SAMPLES`] random elements.
pub fn recover_form(phi: &dyn MatrixMap, order: &QuasiOrder, tol: f64, seed: u64) -> Result<Recovered> {
    let ci = order.condition_i();
    if !ci.holds {
        let (i, j) = ci.witness.expect("failing condition carries a witness");
        return Err(Error::ConditionFails(i, j));
    }
    let n = order.n();
    let image = phi.apply(&CMatrix::lambda(n));
    let scale = image.frobenius_norm().max(1.0);
    let mut s = CMatrix::zeros(n);
    for k in 0..n {
        let shifted = &image - &CMatrix::identity(n).scale(Complex64::new((k + 1) as f64, 0.0));
        let (v, sigma) = null_vector(&shifted);
        if sigma > 1e-6 * scale {
            return Err(Error::SpectrumMismatch(sigma));
        }
        let first = v.iter().find(|z| z.norm() > 1e-12).copied().expect("unit vector");
        let phase = first / first.norm();
        for r in 0..n {
            s[(r, k)] = v[r] / phase;
        }
    }
    let s_inv = s.inverse()?;
    let psi = |x: &CMatrix| &(&s_inv * &phi.apply(x)) * &s;
    let action = classify_units(&psi, order, PARALLEL_TOL)?;
    let g = TransitiveMap::from_pairs(order, action.coefficients.iter().copied())?;
    let mut bits = vec![true; n];
    for (i, j) in action.rho_a.off_diagonal_pairs() {
        bits[i] = false;
        bits[j] = false;
    }
    let p = CentralIdempotent::new(order, bits)?;
    let spec = JordanSpec::new(order.clone(), s, g, p)?;
    let rebuilt = spec.build();

    let mut inputs: Vec<CMatrix> = order.pairs().map(|(i, j)| CMatrix::unit(n, i, j)).collect();
    let mut rng = rng_for(seed, u64::MAX);
    inputs.extend((0..RECOVERY_SAMPLES).map(|_| random_in_sma(order, &mut rng)));
    let max_error = inputs
        .par_iter()
        .map(|x| {
            let want = phi.apply(x);
            relative_gap(&rebuilt.apply(x), &want, want.frobenius_norm())
        })
        .reduce(|| 0.0, f64::max);
    if max_error.is_nan() || max_error > tol {
        return Err(Error::RecoveryMismatch(max_error));
    }
    Ok(Recovered { spec, rho_m: action.rho_m, rho_a: action.rho_a, max_error })
}

/// A seeded random spec on `ρ`: `S = I + 0.3·(random)` with condition
/// number below `1e3`, a random transitive map (nontrivial when one exists)
/// and a random central idempotent.
pub fn random_spec(order: &QuasiOrder, seed: u64) -> Result<JordanSpec> {
    let n = order.n();
    let full = QuasiOrder::full(n)?;
    let mut rng = rng_for(seed, 0);
    let s = loop {
        let s = &CMatrix::identity(n) + &random_in_sma(&full, &mut rng).scale(Complex64::new(0.3, 0.0));
        if s.condition_number() < 1e3 {
            break s;
        }
    };
    let g = crate::cocycle::random_transitive(order, seed, true)
        .or_else(|| crate::cocycle::random_transitive(order, seed, false))
        .ok_or_else(|| Error::Internal("no transitive map generated".into()))?;
    let ps = central_idempotents(order)?;
    let p = ps[(rand::Rng::random_range(&mut rng, 0..ps.len() as u64)) as usize].clone();
    JordanSpec::new(order.clone(), s, g, p)
}
