//! Dense complex matrices and the matrix-level operations on structural
//! matrix algebras: support and membership, row/column deletion and
//! insertion, characteristic polynomials, diagonalization inside `A_ρ` and
//! membership in the closure of rank-one non-nilpotents.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quasiorder::QuasiOrder;
use crate::sampling::{random_complex, rng_for};

/// Relative tolerance used for support and membership tests, scaled by the
/// largest entry magnitude.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::MatrixFile", try_from = "crate::io::MatrixFile")]
pub struct CMatrix(DMatrix<Complex64>);

/// Set of 0-based index pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SupportSet(pub BTreeSet<(usize, usize)>);

impl SupportSet {
    pub fn is_within(&self, order: &QuasiOrder) -> bool {
        self.0.iter().all(|&(i, j)| order.contains(i, j))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.0.contains(&(i, j))
    }
}

fn check_index_set(set: &[usize], bound: usize) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for &i in set {
        if i >= bound {
            return Err(Error::IndexOutOfRange { index: i, n: bound });
        }
        if !out.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(out)
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    /// Matrix unit `E_ij`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(i, j)] = ONE;
        m
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (k, &v) in d.iter().enumerate() {
            m[(k, k)] = v;
        }
        m
    }

    /// `Λ_n = diag(1, .., n)`.
    pub fn lambda(n: usize) -> Self {
        let d: Vec<Complex64> = (1..=n).map(|k| Complex64::new(k as f64, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix(DMatrix::from_fn(n, n, f))
    }

    /// Square matrix from real row-major data.
    pub fn from_real(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self::from_fn(n, |i, j| Complex64::new(data[i * n + j], 0.0)))
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, cols: r.len() });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        Ok(CMatrix(m))
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self[(i, j)]).collect()).collect()
    }

    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CMatrix(&self.0 * c)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.clone().determinant()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n()).map(|k| self[(k, k)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `XY − YX`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Ratio of largest to smallest singular value (`inf` when singular).
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }

    /// Numerical rank: singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let s = self.singular_values();
        let top = s.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&v| v > rel_tol * top).count()
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let cond = self.condition_number();
        if !cond.is_finite() || cond > 1e14 {
            return Err(Error::Singular(cond));
        }
        self.0.clone().try_inverse().map(CMatrix).ok_or(Error::Singular(cond))
    }

    /// Absolute tolerance derived from [`DEFAULT_REL_TOL`].
    pub fn default_tol(&self) -> f64 {
        DEFAULT_REL_TOL * self.max_abs()
    }

    /// Pairs with `|A_ij| > tol`.
    pub fn support(&self, tol: f64) -> SupportSet {
        let n = self.n();
        SupportSet(
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| self[(i, j)].norm() > tol)
                .collect(),
        )
    }

    /// `supp A ⊆ ρ` with entries of magnitude at most `tol` treated as zero.
    pub fn in_sma(&self, order: &QuasiOrder, tol: f64) -> bool {
        self.check_in_sma(order, tol).is_ok()
    }

    pub(crate) fn check_in_sma(&self, order: &QuasiOrder, tol: f64) -> Result<()> {
        if self.n() != order.n() {
            return Err(Error::DimensionMismatch { expected: order.n(), got: self.n() });
        }
        match self.support(tol).0.into_iter().find(|&(i, j)| !order.contains(i, j)) {
            Some((row, col)) => Err(Error::NotInAlgebra { row, col }),
            None => Ok(()),
        }
    }

    /// Zeroes every entry outside `ρ`.
    pub fn masked(&self, order: &QuasiOrder) -> CMatrix {
        CMatrix::from_fn(self.n(), |i, j| if order.contains(i, j) { self[(i, j)] } else { ZERO })
    }

    /// Inserts zero rows and columns so that they occupy the positions in
    /// `positions` of the result (`A^{♯S}`).
    pub fn sharp(&self, positions: &[usize]) -> Result<CMatrix> {
        let m = self.n() + positions.len();
        let inserted = check_index_set(positions, m)?;
        let kept: Vec<usize> = (0..m).filter(|i| !inserted.contains(i)).collect();
        let mut out = CMatrix::zeros(m);
        for (a, &i) in kept.iter().enumerate() {
            for (b, &j) in kept.iter().enumerate() {
                out[(i, j)] = self[(a, b)];
            }
        }
        Ok(out)
    }

    /// Deletes the rows and columns listed in `positions` (`A^{♭S}`).
    /// Deleting nothing returns a copy; deleting everything is rejected.
    pub fn flat(&self, positions: &[usize]) -> Result<CMatrix> {
        let n = self.n();
        let deleted = check_index_set(positions, n)?;
        if deleted.len() == n {
            return Err(Error::DeleteAll(n));
        }
        let kept: Vec<usize> = (0..n).filter(|i| !deleted.contains(i)).collect();
        Ok(CMatrix::from_fn(kept.len(), |a, b| self[(kept[a], kept[b])]))
    }

    /// Coefficients of `det(xI − A)` from the leading `1` down to the
    /// constant term, computed by the Faddeev–LeVerrier recursion.
    pub fn char_poly(&self) -> Vec<Complex64> {
        let n = self.n();
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[0] = ONE;
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for k in 1..=n {
            m = &self.0 * &m;
            for d in 0..n {
                m[(d, d)] += coeffs[k - 1];
            }
            let am = &self.0 * &m;
            coeffs[k] = -am.trace() / Complex64::new(k as f64, 0.0);
        }
        coeffs
    }

    /// Eigenvalues from the complex Schur form, in Schur order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        if self.n() == 0 {
            return Vec::new();
        }
        let (_, t) = nalgebra::linalg::Schur::new(self.0.clone()).unpack();
        (0..self.n()).map(|k| t[(k, k)]).collect()
    }

    /// `B[a][b] = A[perm[a]][perm[b]]`, i.e. `R A R⁻¹` for `R = Σ E(k, perm[k])`.
    pub fn permuted(&self, perm: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.n(), |a, b| self[(perm[a], perm[b])])
    }

    /// Inverse of [`CMatrix::permuted`].
    pub fn unpermuted(&self, perm: &[usize]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n());
        for a in 0..self.n() {
            for b in 0..self.n() {
                out[(perm[a], perm[b])] = self[(a, b)];
            }
        }
        out
    }

    /// Largest off-diagonal magnitude.
    pub fn off_diagonal_max(&self) -> f64 {
        let n = self.n();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self[(i, j)].norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{:?}", self.rows())
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

/// Eigenvalue clusters of a matrix with their spectral projections, built as
/// Lagrange interpolation polynomials in the matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    pub projections: Vec<CMatrix>,
    /// `max_j ‖(M − μ_j I) P_j‖` relative to `‖M‖·‖P_j‖`; near zero iff `M`
    /// is diagonalizable.
    pub residual: f64,
}

/// Eigenvalues closer than `cluster_tol · max(1, ‖M‖_F)` are merged.
pub fn spectral_decomposition(m: &CMatrix, cluster_tol: f64) -> SpectralDecomposition {
    let n = m.n();
    let scale = m.frobenius_norm().max(1.0);
    let raw = m.eigenvalues();
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in raw {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|w| (w - z).norm() <= cluster_tol * scale))
        {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let eigenvalues: Vec<Complex64> = clusters
        .iter()
        .map(|c| c.iter().sum::<Complex64>() / Complex64::new(c.len() as f64, 0.0))
        .collect();
    let multiplicities: Vec<usize> = clusters.iter().map(Vec::len).collect();
    let eye = CMatrix::identity(n);
    let projections: Vec<CMatrix> = eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &mu_j)| {
            eigenvalues.iter().enumerate().filter(|&(l, _)| l != j).fold(
                eye.clone(),
                |acc, (_, &mu_l)| {
                    let factor = (m - &eye.scale(mu_l)).scale(ONE / (mu_j - mu_l));
                    &acc * &factor
                },
            )
        })
        .collect();
    let residual = eigenvalues
        .iter()
        .zip(&projections)
        .map(|(&mu, p)| {
            let r = &(m - &eye.scale(mu)) * p;
            r.frobenius_norm() / (scale * p.frobenius_norm().max(1.0))
        })
        .fold(0.0, f64::max);
    SpectralDecomposition { eigenvalues, multiplicities, projections, residual }
}

/// Diagonalizability test used for family members.
pub fn is_diagonalizable(m: &CMatrix) -> bool {
    spectral_decomposition(m, 1e-6).residual <= 1e-6
}

/// A diagonalizable element `S diag(λ) S⁻¹` of `A_ρ` near a given element.
#[derive(Clone, Debug)]
pub struct NearbyDiagonalizable {
    pub s: CMatrix,
    pub eigenvalues: Vec<Complex64>,
    pub condition_number: f64,
    /// `‖A − S diag(λ) S⁻¹‖_F`.
    pub distance: f64,
}

impl NearbyDiagonalizable {
    pub fn matrix(&self) -> Result<CMatrix> {
        let d = CMatrix::from_diagonal(&self.eigenvalues);
        Ok(&(&self.s * &d) * &self.s.inverse()?)
    }
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            gap = gap.min((values[a] - values[b]).norm());
        }
    }
    gap
}

/// Unit-diagonal eigenvectors of an upper-triangular matrix with pairwise
/// distinct diagonal, by back substitution. Column `k` is supported in rows
/// `0..=k`; entries whose every contributing product has a structural zero
/// factor come out exactly zero.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.n();
    let mut v = CMatrix::zeros(n);
    for k in 0..n {
        v[(k, k)] = ONE;
        let lam = t[(k, k)];
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in i + 1..=k {
                acc += t[(i, j)] * v[(j, k)];
            }
            v[(i, k)] = acc / (lam - t[(i, i)]);
        }
    }
    v
}

/// Scales every column to unit norm with a positive real diagonal entry.
fn normalize_columns(m: &mut CMatrix) {
    for k in 0..m.n() {
        let norm = (0..m.n()).map(|i| m[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let d = m[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        if norm > 0.0 {
            for i in 0..m.n() {
                m[(i, k)] /= phase * norm;
            }
            m[(k, k)] = Complex64::new(m[(k, k)].norm(), 0.0);
        }
    }
}

/// Finds `S ∈ A_ρ` invertible and pairwise distinct `λ` with
/// `‖A − S diag(λ) S⁻¹‖_F < ε`.
///
/// The quasi-order is permuted into block upper-triangular shape; each
/// diagonal block is Schur-triangularized by a unitary (which stays inside
/// the algebra), then the triangular diagonal is spread by distinct multiples
/// of a step along a fixed direction whenever two diagonal entries lie closer
/// than `ε`. The perturbation has Frobenius norm `ε/2`. Eigenvectors of the
/// resulting triangular matrix are polynomials images of it and therefore
/// stay supported in `ρ`.
pub fn nearby_diagonalizable(a: &CMatrix, order: &QuasiOrder, eps: f64) -> Result<NearbyDiagonalizable> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::NonPositiveTolerance(eps));
    }
    a.check_in_sma(order, a.default_tol())?;
    let n = a.n();
    let a = a.masked(order);
    let bt = order.block_triangular_permutation()?;
    let b = a.permuted(&bt.perm);

    let mut u = CMatrix::zeros(n);
    for (lo, hi) in bt.block_ranges() {
        let k = hi - lo;
        let block = b.0.view((lo, lo), (k, k)).into_owned();
        let (q, _) = nalgebra::linalg::Schur::new(block).unpack();
        u.0.view_mut((lo, lo), (k, k)).copy_from(&q);
    }
    let u_adj = CMatrix(u.0.adjoint());
    let full = &(&u_adj * &b) * &u;
    let mut theta = CMatrix::from_fn(n, |i, j| if i <= j { full[(i, j)] } else { ZERO });

    let diag = theta.diagonal();
    if min_gap(&diag) < eps {
        let weights: f64 = (0..n).map(|k| (k * k) as f64).sum::<f64>().sqrt();
        let step = if weights > 0.0 { 0.5 * eps / weights } else { 0.0 };
        let mut chosen = None;
        for attempt in 0..16 {
            let angle = 0.3 + attempt as f64 * 2.399_963_229_728_653;
            let dir = Complex64::from_polar(1.0, angle);
            let cand: Vec<Complex64> =
                diag.iter().enumerate().map(|(k, &d)| d + dir * (step * k as f64)).collect();
            if min_gap(&cand) >= 0.25 * step {
                chosen = Some(cand);
                break;
            }
        }
        let cand = chosen.ok_or_else(|| Error::Internal("could not separate eigenvalues".into()))?;
        for (k, v) in cand.into_iter().enumerate() {
            theta[(k, k)] = v;
        }
    }

    let mut v = triangular_eigenvectors(&theta);
    normalize_columns(&mut v);
    let s = (&u * &v).unpermuted(&bt.perm).masked(order);
    let mut eigenvalues = vec![ZERO; n];
    for (pos, &orig) in bt.perm.iter().enumerate() {
        eigenvalues[orig] = theta[(pos, pos)];
    }
    let condition_number = s.condition_number();
    // S diag(λ) S⁻¹ = U Θ Uᴴ in the permuted basis; this form avoids inverting
    // an S whose conditioning grows like a power of 1/ε on Jordan blocks.
    let rebuilt = (&(&u * &theta) * &u_adj).unpermuted(&bt.perm);
    let distance = (&a - &rebuilt).frobenius_norm();
    let out = NearbyDiagonalizable { s, eigenvalues, condition_number, distance };
    if distance.is_nan() || distance >= eps {
        return Err(Error::Internal(format!(
            "reconstruction distance {distance:e} not below {eps:e} (condition {condition_number:e})"
        )));
    }
    Ok(out)
}

/// Simple augmenting-path bipartite matching. `adj[left]` lists candidate
/// right vertices in preference order.
fn maximum_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    fn augment(
        v: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &w in &adj[v] {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            if owner[w].is_none() || augment(owner[w].unwrap(), adj, seen, owner) {
                owner[w] = Some(v);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    for v in 0..adj.len() {
        let mut seen = vec![false; n_right];
        augment(v, adj, &mut seen, &mut owner);
    }
    let mut assigned = vec![None; adj.len()];
    for (w, o) in owner.iter().enumerate() {
        if let Some(v) = o {
            assigned[*v] = Some(w);
        }
    }
    assigned
}

const DIAGONALIZE_ATTEMPTS: usize = 8;

/// Finds `S ∈ A_ρ` invertible with `S⁻¹ M S` diagonal for every `M` in a
/// commuting family of diagonalizable elements of `A_ρ`.
///
/// A random linear combination `C` of the family is split into spectral
/// projections `P_λ ∈ A_ρ`. Positions are matched to eigenvalue slots
/// (each `λ` offering as many slots as its multiplicity) along edges with
/// `(P_λ)_ii ≠ 0`, and column `i` of `S` is `P_{λ(i)} e_i`, which is
/// supported in `ρ⁻¹(i)`. The result is verified and the combination redrawn
/// on failure.
pub fn diagonalize_in_sma(family: &[CMatrix], order: &QuasiOrder, seed: u64) -> Result<CMatrix> {
    let n = order.n();
    for m in family {
        m.check_in_sma(order, m.default_tol())?;
    }
    for a in 0..family.len() {
        for b in a + 1..family.len() {
            let scale = (family[a].frobenius_norm() * family[b].frobenius_norm()).max(1.0);
            if family[a].commutator(&family[b]).frobenius_norm() > 1e-9 * scale {
                return Err(Error::NotCommuting(a, b));
            }
        }
    }
    for (idx, m) in family.iter().enumerate() {
        if !is_diagonalizable(m) {
            return Err(Error::NotDiagonalizable(idx));
        }
    }
    if family.is_empty() {
        return Ok(CMatrix::identity(n));
    }

    for attempt in 0..DIAGONALIZE_ATTEMPTS {
        let mut rng = rng_for(seed, attempt as u64);
        let c = family.iter().fold(CMatrix::zeros(n), |acc, m| &acc + &m.scale(random_complex(&mut rng)));
        let spec = spectral_decomposition(&c, 1e-7);
        let projections: Vec<CMatrix> = spec.projections.iter().map(|p| p.masked(order)).collect();

        let mut slots = Vec::new();
        for (j, &mult) in spec.multiplicities.iter().enumerate() {
            slots.extend(std::iter::repeat_n(j, mult));
        }
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut cands: Vec<(f64, usize)> = slots
                    .iter()
                    .enumerate()
                    .map(|(w, &j)| (projections[j][(i, i)].norm(), w))
                    .filter(|&(mag, _)| mag > 1e-8)
                    .collect();
                cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                cands.into_iter().map(|(_, w)| w).collect()
            })
            .collect();
        let assigned = maximum_matching(&adj, slots.len());
        if assigned.iter().any(Option::is_none) {
            continue;
        }
        let mut s = CMatrix::zeros(n);
        for (i, w) in assigned.iter().enumerate() {
            let p = &projections[slots[w.unwrap()]];
            for r in 0..n {
                s[(r, i)] = p[(r, i)];
            }
        }
        normalize_columns(&mut s);
        let s = s.masked(order);
        let Ok(s_inv) = s.inverse() else { continue };
        if s.condition_number() > 1e10 {
            continue;
        }
        let ok = family.iter().all(|m| {
            let d = &(&s_inv * m) * &s;
            d.off_diagonal_max() <= 1e-8 * m.frobenius_norm().max(1.0) * s.condition_number()
        });
        if ok {
            return Ok(s);
        }
    }
    Err(Error::DiagonalizationFailed(DIAGONALIZE_ATTEMPTS))
}

/// Membership of a rank-at-most-one element of `A_ρ` in the closure of the
/// rank-one non-nilpotents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosureMembership {
    pub member: bool,
    /// An index `k` with `(supp a × {k}) ∪ ({k} × supp b) ⊆ ρ`.
    pub witness: Option<usize>,
}

/// Factors `A = a b*` (a = the column of largest norm, b from the ratios
/// along the row where `a` peaks) and looks for `k` with
/// `(supp a × {k}) ∪ ({k} × supp b) ⊆ ρ`. `tol` is relative to the largest
/// entry of `A`.
pub fn rank_one_closure_member(a: &CMatrix, order: &QuasiOrder, tol: f64) -> Result<ClosureMembership> {
    let abs_tol = tol * a.max_abs();
    a.check_in_sma(order, abs_tol)?;
    let n = a.n();
    if a.max_abs() == 0.0 {
        return Ok(ClosureMembership { member: true, witness: None });
    }
    let s = a.singular_values();
    if s.len() > 1 && s[1] > tol.max(1e-12) * s[0] {
        return Err(Error::RankTooHigh(s[1]));
    }
    let col_norm = |c: usize| (0..n).map(|r| a[(r, c)].norm_sqr()).sum::<f64>();
    let c = (0..n).max_by(|&x, &y| col_norm(x).total_cmp(&col_norm(y))).unwrap();
    let r = (0..n).max_by(|&x, &y| a[(x, c)].norm().total_cmp(&a[(y, c)].norm())).unwrap();
    let col: Vec<Complex64> = (0..n).map(|i| a[(i, c)]).collect();
    let row: Vec<Complex64> = (0..n).map(|j| a[(r, j)] / col[r]).collect();
    let col_peak = col[r].norm();
    let row_peak = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let supp_a: Vec<usize> = (0..n).filter(|&i| col[i].norm() > tol * col_peak).collect();
    let supp_b: Vec<usize> = (0..n).filter(|&j| row[j].norm() > tol * row_peak).collect();
    let witness = (0..n).find(|&k| {
        supp_a.iter().all(|&i| order.contains(i, k)) && supp_b.iter().all(|&j| order.contains(k, j))
    });
    Ok(ClosureMembership { member: witness.is_some(), witness })
}
